//! Finite-tailed Laurent expressions Σ_i b_i t^(-i) over F_q.
//!
//! The map key i is the exponent of t^(-i): positive keys form the pole part,
//! key 0 is the free term, and negative keys (powers of t) are permitted so
//! that intermediate products stay representable. Torsor-level code enforces
//! tail-only supports where required.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::fq::{FqElem, FqSpec};
use crate::poly::Ring;

/// Finitely supported map i -> b_i with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentTail {
    terms: BTreeMap<i64, FqElem>,
}

impl LaurentTail {
    pub fn zero() -> Self {
        LaurentTail::default()
    }

    /// The single term b t^(-i).
    pub fn term(i: i64, b: FqElem) -> Self {
        let mut t = LaurentTail::zero();
        if !b.is_zero() {
            t.terms.insert(i, b);
        }
        t
    }

    pub fn constant(b: FqElem) -> Self {
        Self::term(0, b)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: i64) -> FqElem {
        self.terms.get(&i).copied().unwrap_or(FqElem::ZERO)
    }

    pub fn free_term(&self) -> FqElem {
        self.coeff(0)
    }

    pub fn support(&self) -> impl DoubleEndedIterator<Item = (i64, FqElem)> + '_ {
        self.terms.iter().map(|(&i, &b)| (i, b))
    }

    /// Largest positive exponent in the support; None encodes -infinity.
    pub fn neg_ord(&self) -> Option<i64> {
        self.terms.keys().rev().find(|&&i| i > 0).copied()
    }

    /// True when the support involves no powers of t (all keys >= 0).
    pub fn is_tail_only(&self) -> bool {
        self.terms.keys().all(|&i| i >= 0)
    }

    pub fn set(&mut self, fq: &FqSpec, i: i64, b: FqElem) {
        let _ = fq;
        if b.is_zero() {
            self.terms.remove(&i);
        } else {
            self.terms.insert(i, b);
        }
    }

    pub fn add(&self, fq: &FqSpec, other: &Self) -> Self {
        let mut out = self.clone();
        for (&i, b) in &other.terms {
            let s = fq.add(&out.coeff(i), b);
            out.set(fq, i, s);
        }
        out
    }

    pub fn neg(&self, fq: &FqSpec) -> Self {
        LaurentTail { terms: self.terms.iter().map(|(&i, b)| (i, fq.neg(b))).collect() }
    }

    pub fn sub(&self, fq: &FqSpec, other: &Self) -> Self {
        self.add(fq, &other.neg(fq))
    }

    pub fn mul(&self, fq: &FqSpec, other: &Self) -> Self {
        let mut out = LaurentTail::zero();
        for (&i, a) in &self.terms {
            for (&j, b) in &other.terms {
                let c = fq.add(&out.coeff(i + j), &fq.mul(a, b));
                out.set(fq, i + j, c);
            }
        }
        out
    }

    pub fn scale(&self, fq: &FqSpec, c: &FqElem) -> Self {
        let mut out = LaurentTail::zero();
        for (&i, a) in &self.terms {
            out.set(fq, i, fq.mul(a, c));
        }
        out
    }

    /// Coefficient-wise Frobenius with exponent scaling i -> p i; this is the
    /// p-th power map on the series.
    pub fn frobenius(&self, fq: &FqSpec) -> Self {
        LaurentTail {
            terms: self
                .terms
                .iter()
                .map(|(&i, b)| (i * fq.p() as i64, fq.frobenius(b)))
                .collect(),
        }
    }

    /// Whole-tail p-th root: requires every exponent divisible by p.
    pub fn pth_root(&self, fq: &FqSpec) -> Result<Self> {
        let p = fq.p() as i64;
        let mut terms = BTreeMap::new();
        for (&i, b) in &self.terms {
            if i % p != 0 {
                return Err(Error::NonDivisibleExponent { exp: i, p: fq.p() });
            }
            terms.insert(i / p, fq.pth_root(b));
        }
        Ok(LaurentTail { terms })
    }

    /// The Artin-Schreier image of one coordinate: u^p - u.
    pub fn wp(&self, fq: &FqSpec) -> Self {
        self.frobenius(fq).sub(fq, self)
    }

    /// Stable byte encoding for map keys: (exponent, coefficient) pairs.
    pub fn encode(&self, fq: &FqSpec, out: &mut Vec<u8>) {
        for (&i, b) in &self.terms {
            out.extend_from_slice(&i.to_be_bytes());
            out.extend_from_slice(b.key(fq.k()));
        }
        out.push(0xFF);
    }

    /// Render in the textual syntax, e.g. `w^1*t^-3 + 1*t^-1`.
    pub fn render(&self, fq: &FqSpec) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(&i, b)| {
                if i == 0 {
                    fq.render(b)
                } else {
                    format!("{}*t^{}", fq.render(b), -i)
                }
            })
            .collect();
        parts.join(" + ")
    }

    /// Parse the textual syntax produced by [`LaurentTail::render`].
    pub fn parse(fq: &FqSpec, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(LaurentTail::zero());
        }
        let mut out = LaurentTail::zero();
        for part in split_top_level(s, '+') {
            let part = part.trim();
            let (coeff_s, exp) = match part.find("t^") {
                None => (part, 0i64),
                Some(pos) => {
                    let coeff_s = part[..pos].trim().trim_end_matches('*').trim();
                    let e: i64 = part[pos + 2..]
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad exponent in {part:?}")))?;
                    (coeff_s, -e)
                }
            };
            let coeff = if coeff_s.is_empty() { fq.one() } else { fq.parse(coeff_s)? };
            let sum = fq.add(&out.coeff(exp), &coeff);
            out.set(fq, exp, sum);
        }
        Ok(out)
    }
}

/// Split on `sep` at paren depth zero.
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            c if c == sep && depth == 0 => {
                parts.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    parts.push(cur);
    parts
}

/// Ring structure on tails over a fixed field, for polynomial evaluation.
pub struct TailRing<'a>(pub &'a FqSpec);

impl Ring for TailRing<'_> {
    type Elem = LaurentTail;
    fn zero(&self) -> LaurentTail {
        LaurentTail::zero()
    }
    fn one(&self) -> LaurentTail {
        LaurentTail::constant(self.0.one())
    }
    fn add(&self, a: &LaurentTail, b: &LaurentTail) -> LaurentTail {
        a.add(self.0, b)
    }
    fn mul(&self, a: &LaurentTail, b: &LaurentTail) -> LaurentTail {
        a.mul(self.0, b)
    }
    fn neg(&self, a: &LaurentTail) -> LaurentTail {
        a.neg(self.0)
    }
    fn from_int(&self, n: &BigInt) -> LaurentTail {
        LaurentTail::constant(Ring::from_int(self.0, n))
    }
}

impl fmt::Display for LaurentTail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Field-independent debug rendering; prefer render() with a spec.
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().rev().map(|(&i, b)| format!("{b:?}*t^{}", -i)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FqSpec {
        FqSpec::new(2, 1).unwrap()
    }

    #[test]
    fn neg_ord_cases() {
        let fq = f2();
        let one = fq.one();
        // t^-3 + t^-1 has neg_ord 3.
        let t = LaurentTail::term(3, one).add(&fq, &LaurentTail::term(1, one));
        assert_eq!(t.neg_ord(), Some(3));
        // Constants and zero have neg_ord -infinity.
        assert_eq!(LaurentTail::constant(one).neg_ord(), None);
        assert_eq!(LaurentTail::zero().neg_ord(), None);
    }

    #[test]
    fn wp_examples() {
        let fq = f2();
        let one = fq.one();
        // p = 2: ℘(t^-2) = t^-4 + t^-2.
        let u = LaurentTail::term(2, one);
        let w = u.wp(&fq);
        assert_eq!(w.coeff(4), one);
        assert_eq!(w.coeff(2), one);
        assert_eq!(w.support().count(), 2);
        assert!(LaurentTail::zero().wp(&fq).is_zero());

        // p = 3: ℘(t^-1) = t^-3 - t^-1.
        let f3 = FqSpec::new(3, 1).unwrap();
        let w = LaurentTail::term(1, f3.one()).wp(&f3);
        assert_eq!(w.coeff(3), f3.one());
        assert_eq!(w.coeff(1), f3.neg(&f3.one()));
    }

    #[test]
    fn pth_root_scaling() {
        let fq = f2();
        let a = fq.one();
        let t = LaurentTail::term(4, a);
        let r = t.pth_root(&fq).unwrap();
        assert_eq!(r.coeff(2), a);
        assert!(LaurentTail::term(3, a).pth_root(&fq).is_err());
        // Root inverts frobenius on tails.
        let mixed = LaurentTail::term(1, a).add(&fq, &LaurentTail::constant(a));
        assert_eq!(mixed.frobenius(&fq).pth_root(&fq).unwrap(), mixed);
    }

    #[test]
    fn wp_is_additive() {
        use rand::Rng;
        use rand::SeedableRng;
        let fq = FqSpec::new(3, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let els: Vec<FqElem> = fq.elements().collect();
        for _ in 0..200 {
            let mut u = LaurentTail::zero();
            let mut v = LaurentTail::zero();
            for _ in 0..4 {
                u.set(&fq, rng.gen_range(0..6), els[rng.gen_range(0..els.len())]);
                v.set(&fq, rng.gen_range(0..6), els[rng.gen_range(0..els.len())]);
            }
            let lhs = u.add(&fq, &v).wp(&fq);
            let rhs = u.wp(&fq).add(&fq, &v.wp(&fq));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn neg_ord_ultrametric() {
        use rand::Rng;
        use rand::SeedableRng;
        let fq = f2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let mut u = LaurentTail::zero();
            let mut v = LaurentTail::zero();
            for _ in 0..3 {
                u.set(&fq, rng.gen_range(0..8), fq.from_u64(rng.gen_range(0..2)));
                v.set(&fq, rng.gen_range(0..8), fq.from_u64(rng.gen_range(0..2)));
            }
            let s = u.add(&fq, &v);
            let m = u.neg_ord().max(v.neg_ord());
            assert!(s.neg_ord() <= m);
            if u.neg_ord() != v.neg_ord() {
                assert_eq!(s.neg_ord(), m);
            }
        }
    }

    #[test]
    fn parse_render_roundtrip() {
        let f4 = FqSpec::new(2, 2).unwrap();
        let w = f4.gen();
        let t = LaurentTail::term(3, w)
            .add(&f4, &LaurentTail::term(1, f4.one()))
            .add(&f4, &LaurentTail::constant(f4.add(&w, &f4.one())));
        let s = t.render(&f4);
        let back = LaurentTail::parse(&f4, &s).unwrap();
        assert_eq!(back, t);
        // The documented sample form parses.
        let sample = LaurentTail::parse(&f4, "w^1*t^-3 + 1*t^-1").unwrap();
        assert_eq!(sample.coeff(3), w);
        assert_eq!(sample.coeff(1), f4.one());
        assert_eq!(LaurentTail::parse(&f4, "0").unwrap(), LaurentTail::zero());
    }
}
