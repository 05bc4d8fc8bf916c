//! Universal Witt polynomials over the integers.
//!
//! Ghost components Φ_n = Σ p^i X_i^(p^(n-i)) linearize Witt arithmetic, so the
//! addition polynomials S_n are produced by the exact recursion
//!   S_n = (Φ_n(X) + Φ_n(Y) - Σ_{i<n} p^i S_i^(p^(n-i))) / p^n
//! with division over Z that is guaranteed to be exact. Inverse polynomials come
//! from T_j = S_j - X_j - Y_j via I_j = -X_j - T_j(X, I). Every generated
//! polynomial is weighted homogeneous for the grading deg(X_i) = p^i.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Generation caps. Polynomial size grows violently in both p and e.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    pub max_e: usize,
    pub max_p: u32,
    pub max_d: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_e: 4, max_p: 7, max_d: 8 }
    }
}

/// A declared variable: display name plus its weight p^j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSpec {
    pub name: String,
    pub weight: u64,
}

/// Sparse multivariate polynomial with exact integer coefficients and
/// per-variable weights. No zero coefficients are stored; the zero polynomial
/// has an empty term map.
#[derive(Clone, PartialEq, Eq)]
pub struct WeightedPoly {
    vars: Vec<VarSpec>,
    terms: BTreeMap<Vec<u16>, BigInt>,
}

/// Outcome of the weighted-homogeneity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Homogeneity {
    /// The zero polynomial is homogeneous of any degree.
    Any,
    Degree(u64),
    /// Two monomials of differing weighted degree.
    Mixed {
        witness: (Vec<u16>, u64, Vec<u16>, u64),
    },
}

/// Abstract commutative ring with an integer action, used for evaluation.
pub trait Ring {
    type Elem: Clone + PartialEq + std::fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Image of an integer under Z -> R (reduction mod p in characteristic p).
    fn from_int(&self, n: &BigInt) -> Self::Elem;
}

/// The integers themselves.
pub struct IntRing;

impl Ring for IntRing {
    type Elem = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn from_int(&self, n: &BigInt) -> BigInt {
        n.clone()
    }
}

impl WeightedPoly {
    pub fn zero(vars: Vec<VarSpec>) -> Self {
        WeightedPoly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: Vec<VarSpec>, c: BigInt) -> Self {
        let mut p = WeightedPoly::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; p.vars.len()], c);
        }
        p
    }

    /// The monomial consisting of the single variable at `idx`.
    pub fn var(vars: Vec<VarSpec>, idx: usize) -> Self {
        let mut p = WeightedPoly::zero(vars);
        let mut mono = vec![0u16; p.vars.len()];
        mono[idx] = 1;
        p.terms.insert(mono, BigInt::one());
        p
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if the variable at `idx` occurs in some term.
    pub fn involves(&self, idx: usize) -> bool {
        self.terms.keys().any(|m| m[idx] != 0)
    }

    fn same_vars(&self, other: &Self) -> bool {
        self.vars == other.vars
    }

    fn insert_term(terms: &mut BTreeMap<Vec<u16>, BigInt>, mono: Vec<u16>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(self.same_vars(other));
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            Self::insert_term(&mut terms, m.clone(), c.clone());
        }
        WeightedPoly { vars: self.vars.clone(), terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        WeightedPoly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return WeightedPoly::zero(self.vars.clone());
        }
        WeightedPoly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert!(self.same_vars(other));
        let mut terms = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mono: Vec<u16> = m1
                    .iter()
                    .zip(m2.iter())
                    .map(|(a, b)| a.checked_add(*b).expect("monomial exponent overflow"))
                    .collect();
                Self::insert_term(&mut terms, mono, c1 * c2);
            }
        }
        WeightedPoly { vars: self.vars.clone(), terms }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut result = WeightedPoly::constant(self.vars.clone(), BigInt::one());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact division of every coefficient by `k`. A nonzero remainder is a bug
    /// in the caller's recursion, never a property of the input.
    pub fn div_exact(&self, k: &BigInt) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let (q, r) = num_integer::Integer::div_rem(c, k);
            if !r.is_zero() {
                return Err(Error::Internal(format!(
                    "coefficient {c} not divisible by {k} in exact division"
                )));
            }
            terms.insert(m.clone(), q);
        }
        Ok(WeightedPoly { vars: self.vars.clone(), terms })
    }

    pub fn weighted_degree_of(&self, mono: &[u16]) -> u64 {
        mono.iter()
            .zip(self.vars.iter())
            .map(|(e, v)| (*e as u64) * v.weight)
            .sum()
    }

    /// Common weighted degree of all monomials, a witness pair on failure, or
    /// `Any` for the zero polynomial.
    pub fn homogeneity(&self) -> Homogeneity {
        let mut seen: Option<(&Vec<u16>, u64)> = None;
        for m in self.terms.keys() {
            let d = self.weighted_degree_of(m);
            match seen {
                None => seen = Some((m, d)),
                Some((m0, d0)) => {
                    if d != d0 {
                        return Homogeneity::Mixed { witness: (m0.clone(), d0, m.clone(), d) };
                    }
                }
            }
        }
        match seen {
            None => Homogeneity::Any,
            Some((_, d)) => Homogeneity::Degree(d),
        }
    }

    /// Substitute `images[i]` for the variable `i`. All images must share one
    /// variable list, which becomes the variable list of the result.
    pub fn substitute(&self, images: &[WeightedPoly]) -> Self {
        assert_eq!(images.len(), self.vars.len());
        let target_vars = if images.is_empty() { self.vars.clone() } else { images[0].vars.clone() };
        let mut acc = WeightedPoly::zero(target_vars.clone());
        // Cache powers of each image as they are needed.
        let mut powers: Vec<BTreeMap<u16, WeightedPoly>> = vec![BTreeMap::new(); images.len()];
        for (m, c) in &self.terms {
            let mut term = WeightedPoly::constant(target_vars.clone(), c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = powers[i]
                    .entry(e)
                    .or_insert_with(|| images[i].pow(e as u32))
                    .clone();
                term = term.mul(&pw);
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Evaluate with `assign[i]` bound to variable `i`.
    pub fn eval<R: Ring>(&self, ring: &R, assign: &[R::Elem]) -> R::Elem {
        assert_eq!(assign.len(), self.vars.len());
        let mut acc = ring.zero();
        for (m, c) in &self.terms {
            let mut term = ring.from_int(c);
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    term = ring.mul(&term, &assign[i]);
                }
            }
            acc = ring.add(&acc, &term);
        }
        acc
    }

    /// Evaluate by variable name; errors on any variable without an assignment.
    pub fn eval_map<R: Ring>(
        &self,
        ring: &R,
        assign: &std::collections::BTreeMap<String, R::Elem>,
    ) -> Result<R::Elem> {
        let mut slice = Vec::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            match assign.get(&v.name) {
                Some(x) => slice.push(x.clone()),
                None => {
                    if self.involves(i) {
                        return Err(Error::MissingAssignment(v.name.clone()));
                    }
                    slice.push(ring.zero());
                }
            }
        }
        Ok(self.eval(ring, &slice))
    }

    /// Terms in descending lexicographic order of exponent tuples.
    pub fn terms_sorted(&self) -> Vec<(Vec<u16>, BigInt)> {
        let mut v: Vec<_> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        v.sort_by(|a, b| b.0.cmp(&a.0));
        v
    }
}

impl fmt::Display for WeightedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms_sorted() {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = m.iter().all(|&e| e == 0);
            if !mag.is_one() || is_const {
                write!(f, "{mag}")?;
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut firstvar = true;
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !firstvar {
                    write!(f, "*")?;
                }
                firstvar = false;
                write!(f, "{}", self.vars[i].name)?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for WeightedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn checked_pow_u64(base: u64, exp: u32) -> u64 {
    base.checked_pow(exp).expect("weight overflow")
}

/// Variable list X_0..X_{n} with weights p^j.
fn x_vars(p: u32, n: usize) -> Vec<VarSpec> {
    (0..=n)
        .map(|j| VarSpec { name: format!("X{j}"), weight: checked_pow_u64(p as u64, j as u32) })
        .collect()
}

/// Variable list X_0..X_{e-1}, Y_0..Y_{e-1}.
fn xy_vars(p: u32, e: usize) -> Vec<VarSpec> {
    let mut v = Vec::with_capacity(2 * e);
    for j in 0..e {
        v.push(VarSpec { name: format!("X{j}"), weight: checked_pow_u64(p as u64, j as u32) });
    }
    for j in 0..e {
        v.push(VarSpec { name: format!("Y{j}"), weight: checked_pow_u64(p as u64, j as u32) });
    }
    v
}

/// Variable list X1_0..X1_{e-1}, ..., Xd_0..Xd_{e-1} for d-ary sums.
fn dary_vars(p: u32, e: usize, d: usize) -> Vec<VarSpec> {
    let mut v = Vec::with_capacity(d * e);
    for u in 1..=d {
        for j in 0..e {
            v.push(VarSpec {
                name: format!("X{u}_{j}"),
                weight: checked_pow_u64(p as u64, j as u32),
            });
        }
    }
    v
}

/// Ghost component Φ_n(X_0..X_n) = Σ_{i<=n} p^i X_i^(p^(n-i)).
pub fn ghost_poly(p: u32, n: usize) -> WeightedPoly {
    let vars = x_vars(p, n);
    let mut acc = WeightedPoly::zero(vars.clone());
    for i in 0..=n {
        let coeff = BigInt::from(p).pow(i as u32);
        let exp = (p as u64).pow((n - i) as u32);
        assert!(exp <= u16::MAX as u64, "ghost exponent exceeds monomial storage");
        let mut mono = vec![0u16; vars.len()];
        mono[i] = exp as u16;
        let mut t = WeightedPoly::zero(vars.clone());
        t.terms.insert(mono, coeff);
        acc = acc.add(&t);
    }
    acc
}

/// Ghost component expressed in a larger variable list, with X_i placed at
/// position `offset + i`.
fn ghost_in(p: u32, n: usize, vars: &[VarSpec], offset: usize) -> WeightedPoly {
    let mut acc = WeightedPoly::zero(vars.to_vec());
    for i in 0..=n {
        let coeff = BigInt::from(p).pow(i as u32);
        let exp = (p as u64).pow((n - i) as u32);
        let mut mono = vec![0u16; vars.len()];
        mono[offset + i] = exp as u16;
        WeightedPoly::insert_term(&mut acc.terms, mono, coeff);
    }
    acc
}

/// The polynomial system for Witt vectors of a fixed length: addition
/// polynomials S_0..S_{e-1} over X, Y and inverse polynomials I_0..I_{e-1}
/// over X. Immutable after generation.
#[derive(Debug, Clone)]
pub struct PolySystem {
    pub p: u32,
    pub e: usize,
    /// S_n over variables X_0..X_{e-1}, Y_0..Y_{e-1}; S_n involves only index <= n.
    pub add: Vec<WeightedPoly>,
    /// I_n over variables X_0..X_{e-1}.
    pub inv: Vec<WeightedPoly>,
}

fn check_prime(p: u32) -> Result<()> {
    if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    Ok(())
}

/// Generate S_0..S_{e-1} by the ghost recursion, dividing by p^n only at the
/// final step of each S_n.
pub fn addition_polys(p: u32, e: usize, caps: &Caps) -> Result<PolySystem> {
    check_prime(p)?;
    if e == 0 {
        return Err(Error::InvalidInput("length e must be >= 1".into()));
    }
    if e > caps.max_e {
        return Err(Error::CapExceeded(format!("e = {e} exceeds cap {}", caps.max_e)));
    }
    if p > caps.max_p {
        return Err(Error::CapExceeded(format!("p = {p} exceeds cap {}", caps.max_p)));
    }
    let vars = xy_vars(p, e);
    let mut add: Vec<WeightedPoly> = Vec::with_capacity(e);
    for n in 0..e {
        let mut rhs = ghost_in(p, n, &vars, 0).add(&ghost_in(p, n, &vars, e));
        for (i, s) in add.iter().enumerate().take(n) {
            let pw = s.pow((p as u64).pow((n - i) as u32) as u32);
            rhs = rhs.sub(&pw.scale(&BigInt::from(p).pow(i as u32)));
        }
        let s_n = rhs.div_exact(&BigInt::from(p).pow(n as u32))?;
        add.push(s_n);
    }
    let inv = inverse_polys_from(&add, p, e)?;
    Ok(PolySystem { p, e, add, inv })
}

/// I_0 = -X_0 and I_j = -X_j - T_j(X_0..X_{j-1}, I_0..I_{j-1})
/// where T_j = S_j - X_j - Y_j.
fn inverse_polys_from(add: &[WeightedPoly], p: u32, e: usize) -> Result<Vec<WeightedPoly>> {
    let xvars = x_vars(p, e - 1);
    let mut inv: Vec<WeightedPoly> = Vec::with_capacity(e);
    inv.push(WeightedPoly::var(xvars.clone(), 0).neg());
    for j in 1..e {
        let s = &add[j];
        let t_j = s
            .sub(&WeightedPoly::var(s.vars().to_vec(), j))
            .sub(&WeightedPoly::var(s.vars().to_vec(), e + j));
        debug_assert!(!t_j.involves(j) && !t_j.involves(e + j));
        // Substitution images: X_k -> X_k, Y_k -> I_k (k < j); higher slots unused.
        let mut images = Vec::with_capacity(2 * e);
        for k in 0..e {
            images.push(WeightedPoly::var(xvars.clone(), k));
        }
        for k in 0..e {
            if k < j {
                images.push(inv[k].clone());
            } else {
                debug_assert!(!t_j.involves(e + k));
                images.push(WeightedPoly::zero(xvars.clone()));
            }
        }
        let i_j = WeightedPoly::var(xvars.clone(), j).neg().sub(&t_j.substitute(&images));
        inv.push(i_j);
    }
    Ok(inv)
}

impl PolySystem {
    /// Coordinates of the d-ary sum x^1 + ... + x^d as polynomials over the
    /// variables X1_0.., ..., Xd_0.., built by sequential folding of S.
    pub fn dary(&self, d: usize, caps: &Caps) -> Result<Vec<WeightedPoly>> {
        if d == 0 || d > caps.max_d {
            return Err(Error::CapExceeded(format!("arity d = {d} outside [1, {}]", caps.max_d)));
        }
        let vars = dary_vars(self.p, self.e, d);
        let group = |u: usize| -> Vec<WeightedPoly> {
            (0..self.e).map(|j| WeightedPoly::var(vars.clone(), u * self.e + j)).collect()
        };
        let mut acc = group(0);
        for u in 1..d {
            acc = self.fold_add(&acc, &group(u));
        }
        Ok(acc)
    }

    /// Coordinates of multiplication by k in Witt length e, via a binary
    /// double-and-add chain on the addition system.
    pub fn scalar(&self, k: u64) -> Result<Vec<WeightedPoly>> {
        let modulus = (self.p as u64).checked_pow(self.e as u32);
        if let Some(m) = modulus {
            if k >= m {
                return Err(Error::InvalidInput(format!("scalar {k} outside [0, {m})")));
            }
        }
        let vars = x_vars(self.p, self.e - 1);
        let x: Vec<WeightedPoly> =
            (0..self.e).map(|j| WeightedPoly::var(vars.clone(), j)).collect();
        let zero: Vec<WeightedPoly> = (0..self.e).map(|_| WeightedPoly::zero(vars.clone())).collect();
        if k == 0 {
            return Ok(zero);
        }
        let mut acc = zero;
        let mut started = false;
        for bit in (0..64).rev() {
            if started {
                let doubled = self.fold_add(&acc, &acc);
                acc = doubled;
            }
            if (k >> bit) & 1 == 1 {
                if started {
                    acc = self.fold_add(&acc, &x);
                } else {
                    acc = x.clone();
                    started = true;
                }
            }
        }
        Ok(acc)
    }

    /// Substitute two coordinate tuples into S_0..S_{e-1}.
    fn fold_add(&self, a: &[WeightedPoly], b: &[WeightedPoly]) -> Vec<WeightedPoly> {
        (0..self.e)
            .map(|j| {
                let mut images = Vec::with_capacity(2 * self.e);
                images.extend_from_slice(a);
                images.extend_from_slice(b);
                self.add[j].substitute(&images)
            })
            .collect()
    }

    /// Recompute Σ p^i S_i^(p^(n-i)) and compare with Φ_n(X) + Φ_n(Y), exactly
    /// over the integers, for every n < e.
    pub fn verify_ghost_identity(&self) -> Result<()> {
        let vars = xy_vars(self.p, self.e);
        for n in 0..self.e {
            let mut lhs = WeightedPoly::zero(vars.clone());
            for i in 0..=n {
                let pw = self.add[i].pow((self.p as u64).pow((n - i) as u32) as u32);
                lhs = lhs.add(&pw.scale(&BigInt::from(self.p).pow(i as u32)));
            }
            let rhs = ghost_in(self.p, n, &vars, 0).add(&ghost_in(self.p, n, &vars, self.e));
            if lhs != rhs {
                return Err(Error::Internal(format!("ghost identity fails at n = {n}")));
            }
        }
        Ok(())
    }

    /// Check symbolically that S_j(X, I(X)) = 0 for all j < e.
    pub fn verify_inverse_identity(&self) -> Result<()> {
        let xvars = x_vars(self.p, self.e - 1);
        for j in 0..self.e {
            let mut images = Vec::with_capacity(2 * self.e);
            for k in 0..self.e {
                images.push(WeightedPoly::var(xvars.clone(), k));
            }
            for k in 0..self.e {
                images.push(self.inv[k].clone());
            }
            let composed = self.add[j].substitute(&images);
            if !composed.is_zero() {
                return Err(Error::Internal(format!("S_{j}(x, I(x)) != 0")));
            }
        }
        Ok(())
    }
}
