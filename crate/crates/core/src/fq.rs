//! Exact arithmetic in F_q, q = p^k, relative to an explicit defining polynomial.
//!
//! Elements are coefficient tuples of length k over F_p. The defining
//! polynomial is verified irreducible at construction by trial division.
//! Frobenius is x -> x^p and the p-th root is its inverse x -> x^(p^(k-1)).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::poly::Ring;

/// Maximum extension degree stored inline.
pub const MAX_K: usize = 16;

/// Exhaustive-search cap: ℘-solving and coset tables enumerate all of F_q.
pub const Q_EXHAUSTIVE_CAP: u64 = 1 << 16;

/// An element of F_q: coefficients with respect to the power basis of the
/// defining polynomial, reduced mod p, zero-padded beyond degree k.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FqElem {
    c: [u8; MAX_K],
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let upto = self.c.iter().rposition(|&x| x != 0).map(|i| i + 1).unwrap_or(1);
        write!(f, "Fq(")?;
        for (i, x) in self.c[..upto].iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl FqElem {
    pub const ZERO: FqElem = FqElem { c: [0; MAX_K] };

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn coeff(&self, i: usize) -> u8 {
        self.c[i]
    }

    pub fn coeffs(&self, k: usize) -> &[u8] {
        &self.c[..k]
    }

    /// Stable bytes for hashing and ordering.
    pub fn key(&self, k: usize) -> &[u8] {
        &self.c[..k]
    }
}

/// The field F_q together with its defining data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqSpec {
    p: u32,
    k: usize,
    q: u64,
    /// Monic defining polynomial of degree k over F_p, ascending coefficients;
    /// def[k] = 1.
    def: Vec<u8>,
}

fn is_prime(p: u32) -> bool {
    p >= 2 && !(2..p).take_while(|d| d * d <= p).any(|d| p % d == 0)
}

/// Polynomials over F_p as ascending u8 coefficient vectors, used only for the
/// irreducibility check of defining polynomials.
mod fp_poly {
    pub fn trim(v: &mut Vec<u8>) {
        while v.last() == Some(&0) {
            v.pop();
        }
    }

    pub fn rem(a: &[u8], b: &[u8], p: u32) -> Vec<u8> {
        let mut r: Vec<u8> = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        let lead_inv = inv_mod(b[db] as u32, p);
        while r.len() > db {
            let dr = r.len() - 1;
            let factor = (r[dr] as u32 * lead_inv) % p;
            for i in 0..=db {
                let idx = dr - db + i;
                let sub = (factor * b[i] as u32) % p;
                r[idx] = (((r[idx] as u32 + p) - sub) % p) as u8;
            }
            trim(&mut r);
            if r.is_empty() {
                break;
            }
        }
        r
    }

    pub fn inv_mod(a: u32, p: u32) -> u32 {
        // p is a small prime; Fermat.
        let mut result = 1u64;
        let mut base = a as u64 % p as u64;
        let mut e = p as u64 - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p as u64;
            }
            base = base * base % p as u64;
            e >>= 1;
        }
        result as u32
    }

    /// All monic polynomials of degree d over F_p, ascending coefficients.
    pub fn monics(p: u32, d: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let mut digits = vec![0u8; d];
        loop {
            let mut poly = digits.clone();
            poly.push(1);
            out.push(poly);
            let mut i = 0;
            loop {
                if i == d {
                    return out;
                }
                digits[i] += 1;
                if (digits[i] as u32) < p {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    pub fn is_irreducible(f: &[u8], p: u32) -> bool {
        let d = f.len() - 1;
        if d == 0 {
            return false;
        }
        for deg in 1..=d / 2 {
            for g in monics(p, deg) {
                if rem(f, &g, p).is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

/// Fixed defining polynomials for small (p, k), ascending coefficients without
/// the leading 1. For k = 1 the polynomial is x - g with g a primitive root.
fn builtin_poly(p: u32, k: usize) -> Option<Vec<u8>> {
    let body: &[u8] = match (p, k) {
        (2, 1) => &[1],          // x + 1
        (2, 2) => &[1, 1],       // x^2 + x + 1
        (2, 3) => &[1, 1, 0],    // x^3 + x + 1
        (2, 4) => &[1, 1, 0, 0], // x^4 + x + 1
        (3, 1) => &[1],          // x - 2 = x + 1
        (3, 2) => &[2, 2],       // x^2 + 2x + 2
        (3, 3) => &[1, 2, 0],    // x^3 + 2x + 1
        (3, 4) => &[2, 0, 0, 2], // x^4 + 2x^3 + 2
        (5, 1) => &[3],          // x - 2 = x + 3
        (5, 2) => &[2, 4],       // x^2 + 4x + 2
        (5, 3) => &[3, 3, 0],    // x^3 + 3x + 3
        (5, 4) => &[2, 4, 4, 0], // x^4 + 4x^2 + 4x + 2
        (7, 1) => &[4],          // x - 3 = x + 4
        (7, 2) => &[3, 6],       // x^2 + 6x + 3
        (7, 3) => &[4, 0, 6],    // x^3 + 6x^2 + 4
        (7, 4) => &[3, 4, 5, 0], // x^4 + 5x^2 + 4x + 3
        _ => return None,
    };
    let mut v = body.to_vec();
    v.push(1);
    Some(v)
}

impl FqSpec {
    /// F_{p^k} with the built-in defining polynomial.
    pub fn new(p: u32, k: usize) -> Result<FqSpec> {
        match builtin_poly(p, k) {
            Some(def) => Self::with_poly(p, k, def),
            None => Err(Error::InvalidInput(format!(
                "no built-in defining polynomial for p = {p}, k = {k}; supply one explicitly"
            ))),
        }
    }

    /// F_{p^k} with a user-supplied monic defining polynomial (ascending
    /// coefficients, length k + 1), verified irreducible by trial division.
    pub fn with_poly(p: u32, k: usize, def: Vec<u8>) -> Result<FqSpec> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidInput(format!("extension degree k = {k} outside [1, {MAX_K}]")));
        }
        if p > 255 {
            return Err(Error::InvalidInput("p must fit in one byte".into()));
        }
        let q = (p as u64)
            .checked_pow(k as u32)
            .filter(|&q| q <= Q_EXHAUSTIVE_CAP)
            .ok_or(Error::QTooLarge { q: u64::MAX, cap: Q_EXHAUSTIVE_CAP })?;
        if def.len() != k + 1 || def[k] != 1 {
            return Err(Error::InvalidInput(
                "defining polynomial must be monic of degree k".into(),
            ));
        }
        if def.iter().any(|&c| c as u32 >= p) {
            return Err(Error::InvalidInput("defining polynomial coefficients not reduced".into()));
        }
        if !fp_poly::is_irreducible(&def, p) {
            return Err(Error::InvalidInput("defining polynomial is reducible".into()));
        }
        Ok(FqSpec { p, k, q, def })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn defining_poly(&self) -> &[u8] {
        &self.def
    }

    pub fn zero(&self) -> FqElem {
        FqElem::ZERO
    }

    pub fn one(&self) -> FqElem {
        self.from_u64(1)
    }

    /// The class of t (the generator w) when k > 1, or the root of the linear
    /// defining polynomial when k = 1.
    pub fn gen(&self) -> FqElem {
        if self.k == 1 {
            // x - g: root is g = -def[0].
            let g = ((self.p - self.def[0] as u32) % self.p) as u8;
            let mut c = [0u8; MAX_K];
            c[0] = g;
            FqElem { c }
        } else {
            let mut c = [0u8; MAX_K];
            c[1] = 1;
            FqElem { c }
        }
    }

    pub fn from_u64(&self, n: u64) -> FqElem {
        let mut c = [0u8; MAX_K];
        c[0] = (n % self.p as u64) as u8;
        FqElem { c }
    }

    pub fn from_coeffs(&self, coeffs: &[u8]) -> Result<FqElem> {
        if coeffs.len() > self.k {
            return Err(Error::InvalidInput("too many coefficients".into()));
        }
        let mut c = [0u8; MAX_K];
        for (i, &x) in coeffs.iter().enumerate() {
            if x as u32 >= self.p {
                return Err(Error::InvalidInput("coefficient not reduced mod p".into()));
            }
            c[i] = x;
        }
        Ok(FqElem { c })
    }

    pub fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let mut c = [0u8; MAX_K];
        for i in 0..self.k {
            c[i] = ((a.c[i] as u32 + b.c[i] as u32) % self.p) as u8;
        }
        FqElem { c }
    }

    pub fn sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let mut c = [0u8; MAX_K];
        for i in 0..self.k {
            c[i] = ((a.c[i] as u32 + self.p - b.c[i] as u32) % self.p) as u8;
        }
        FqElem { c }
    }

    pub fn neg(&self, a: &FqElem) -> FqElem {
        self.sub(&FqElem::ZERO, a)
    }

    pub fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        // Schoolbook product, then reduction by the monic defining polynomial.
        let mut prod = [0u32; 2 * MAX_K];
        for i in 0..self.k {
            if a.c[i] == 0 {
                continue;
            }
            for j in 0..self.k {
                prod[i + j] = (prod[i + j] + a.c[i] as u32 * b.c[j] as u32) % self.p;
            }
        }
        for d in (self.k..2 * MAX_K).rev() {
            let top = prod[d];
            if top == 0 {
                continue;
            }
            prod[d] = 0;
            for i in 0..self.k {
                let sub = top * self.def[i] as u32 % self.p;
                prod[d - self.k + i] = (prod[d - self.k + i] + self.p - sub) % self.p;
            }
        }
        let mut c = [0u8; MAX_K];
        for i in 0..self.k {
            c[i] = prod[i] as u8;
        }
        FqElem { c }
    }

    pub fn pow(&self, a: &FqElem, mut e: u64) -> FqElem {
        let mut result = self.one();
        let mut base = *a;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    pub fn inv(&self, a: &FqElem) -> Result<FqElem> {
        if a.is_zero() {
            return Err(Error::InvalidInput("inverse of zero".into()));
        }
        Ok(self.pow(a, self.q - 2))
    }

    /// Frobenius x -> x^p.
    pub fn frobenius(&self, a: &FqElem) -> FqElem {
        self.pow(a, self.p as u64)
    }

    /// Inverse of Frobenius: x -> x^(p^(k-1)).
    pub fn pth_root(&self, a: &FqElem) -> FqElem {
        let e = (self.p as u64).pow(self.k as u32 - 1);
        self.pow(a, e)
    }

    /// Absolute trace to F_p, as an element of [0, p).
    pub fn trace_to_fp(&self, a: &FqElem) -> u8 {
        let mut acc = FqElem::ZERO;
        let mut x = *a;
        for _ in 0..self.k {
            acc = self.add(&acc, &x);
            x = self.frobenius(&x);
        }
        debug_assert!(acc.c[1..self.k].iter().all(|&c| c == 0));
        acc.c[0]
    }

    /// Some u with u^p - u = a, by exhaustive search; None when a is not in the
    /// image of ℘ on F_q.
    pub fn solve_wp(&self, a: &FqElem) -> Option<FqElem> {
        self.elements().find(|u| {
            let img = self.sub(&self.pow(u, self.p as u64), u);
            img == *a
        })
    }

    /// All q elements, in lexicographic coefficient order.
    pub fn elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        let k = self.k;
        let p = self.p;
        (0..self.q).map(move |n| {
            let mut c = [0u8; MAX_K];
            let mut m = n;
            for slot in c.iter_mut().take(k) {
                *slot = (m % p as u64) as u8;
                m /= p as u64;
            }
            FqElem { c }
        })
    }

    /// Render in the generator syntax: `0`, `2`, `w^1`, `2*w^3`, `(1+w^1)`.
    pub fn render(&self, a: &FqElem) -> String {
        let monos: Vec<(usize, u8)> = (0..self.k).filter(|&i| a.c[i] != 0).map(|i| (i, a.c[i])).collect();
        match monos.len() {
            0 => "0".to_string(),
            1 => {
                let (i, c) = monos[0];
                render_mono(i, c)
            }
            _ => {
                let body: Vec<String> = monos.iter().map(|&(i, c)| render_mono(i, c)).collect();
                format!("({})", body.join("+"))
            }
        }
    }

    /// Parse the generator syntax produced by [`FqSpec::render`].
    pub fn parse(&self, s: &str) -> Result<FqElem> {
        let s = s.trim();
        let inner = if s.starts_with('(') && s.ends_with(')') { &s[1..s.len() - 1] } else { s };
        let mut acc = FqElem::ZERO;
        for part in inner.split('+') {
            let part = part.trim();
            if part.is_empty() {
                return Err(Error::InvalidInput(format!("empty coefficient monomial in {s:?}")));
            }
            let (num, wpow) = match part.find('w') {
                None => (part, None),
                Some(pos) => {
                    let num = part[..pos].trim().trim_end_matches('*').trim();
                    let rest = &part[pos + 1..];
                    let e: usize = if rest.is_empty() {
                        1
                    } else {
                        rest.strip_prefix('^')
                            .ok_or_else(|| Error::InvalidInput(format!("bad generator power {part:?}")))?
                            .parse()
                            .map_err(|_| Error::InvalidInput(format!("bad generator power {part:?}")))?
                    };
                    (num, Some(e))
                }
            };
            let c: u32 = if num.is_empty() {
                1
            } else {
                num.parse().map_err(|_| Error::InvalidInput(format!("bad coefficient {part:?}")))?
            };
            let e = wpow.unwrap_or(0);
            if e >= self.k && !(e == 0) {
                return Err(Error::InvalidInput(format!("generator power {e} out of range")));
            }
            let mut mono = FqElem::ZERO;
            mono.c[e] = (c % self.p) as u8;
            acc = self.add(&acc, &mono);
        }
        Ok(acc)
    }
}

fn render_mono(i: usize, c: u8) -> String {
    match (i, c) {
        (0, c) => format!("{c}"),
        (i, 1) => format!("w^{i}"),
        (i, c) => format!("{c}*w^{i}"),
    }
}

impl Ring for FqSpec {
    type Elem = FqElem;
    fn zero(&self) -> FqElem {
        FqElem::ZERO
    }
    fn one(&self) -> FqElem {
        FqSpec::one(self)
    }
    fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        FqSpec::add(self, a, b)
    }
    fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        FqSpec::mul(self, a, b)
    }
    fn neg(&self, a: &FqElem) -> FqElem {
        FqSpec::neg(self, a)
    }
    fn from_int(&self, n: &BigInt) -> FqElem {
        let r = n.mod_floor(&BigInt::from(self.p));
        self.from_u64(r.to_u64().unwrap_or(0))
    }
}

impl fmt::Display for FqSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}
