//! Torsor classes over F_q((t)) for finite abelian p-groups.
//!
//! A class is represented by a Witt tail: one tuple of Laurent tails per
//! cyclic factor Z/p^(e_u). Two tails give the same class when they differ by
//! ℘(u) = F(u) - u for a finite-tailed u. The canonical form keeps, per
//! coordinate, only pole exponents coprime to p and no free terms, plus one
//! unramified residue in Z/p^(e_u) per factor. Reduction walks coordinates
//! from the bottom up: adding ℘ of a vector supported in slot j changes slot j
//! by exactly ℘ of that coordinate, never touches slots below j, and spills
//! only into slots above j, so lower slots stay final once processed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fq::{FqElem, FqSpec, Q_EXHAUSTIVE_CAP};
use crate::laurent::{LaurentTail, TailRing};
use crate::poly::{addition_polys, Caps, PolySystem};

/// G = ∏_u Z/p^(e_u) with e_1 <= ... <= e_d.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupSpec {
    p: u32,
    exps: Vec<u32>,
}

impl GroupSpec {
    pub fn new(p: u32, mut exps: Vec<u32>) -> Result<Self> {
        if exps.is_empty() || exps.iter().any(|&e| e == 0) {
            return Err(Error::InvalidInput("need at least one factor with e >= 1".into()));
        }
        exps.sort_unstable();
        let g = GroupSpec { p, exps };
        g.order()?;
        Ok(g)
    }

    /// Parse the textual form `p:e1,e2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let (ps, es) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("group spec {s:?} is not p:e1,e2,...")))?;
        let p: u32 =
            ps.trim().parse().map_err(|_| Error::InvalidInput(format!("bad prime in {s:?}")))?;
        let exps = es
            .split(',')
            .map(|e| e.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidInput(format!("bad exponent list in {s:?}")))?;
        GroupSpec::new(p, exps)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn num_factors(&self) -> usize {
        self.exps.len()
    }

    /// Largest cyclic length e_d.
    pub fn max_exp(&self) -> u32 {
        *self.exps.last().unwrap()
    }

    pub fn order(&self) -> Result<u64> {
        let total: u32 = self.exps.iter().sum();
        (self.p as u64)
            .checked_pow(total)
            .ok_or_else(|| Error::InvalidInput("group order overflows u64".into()))
    }

    pub fn factor_order(&self, u: usize) -> u64 {
        (self.p as u64).pow(self.exps[u])
    }

    pub fn cyclic(p: u32, e: u32) -> Result<Self> {
        GroupSpec::new(p, vec![e])
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let es: Vec<String> = self.exps.iter().map(|e| e.to_string()).collect();
        write!(f, "{}:{}", self.p, es.join(","))
    }
}

/// Length-e tuples of Laurent tails, one tuple per cyclic factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WittTail {
    pub group: GroupSpec,
    /// `coords[u][j]` for u < d, j < e_u.
    pub coords: Vec<Vec<LaurentTail>>,
}

impl WittTail {
    pub fn zero(group: &GroupSpec) -> Self {
        let coords =
            group.exps.iter().map(|&e| vec![LaurentTail::zero(); e as usize]).collect();
        WittTail { group: group.clone(), coords }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|f| f.iter().all(|t| t.is_zero()))
    }

    pub fn encode(&self, fq: &FqSpec) -> Vec<u8> {
        let mut out = Vec::new();
        for f in &self.coords {
            for t in f {
                t.encode(fq, &mut out);
            }
        }
        out
    }

    pub fn is_tail_only(&self) -> bool {
        self.coords.iter().all(|f| f.iter().all(|t| t.is_tail_only()))
    }

    /// Pole-bound membership: -ord(b_(u,j)) <= (n-1) / p^(e_u-1-j); free terms allowed.
    pub fn is_simple_leq(&self, n: u64) -> bool {
        if !self.is_tail_only() {
            return false;
        }
        let p = self.group.p as u64;
        self.coords.iter().zip(self.group.exps.iter()).all(|(f, &e)| {
            f.iter().enumerate().all(|(j, t)| match t.neg_ord() {
                None => true,
                Some(m) => n > 0 && (m as u64) * p.pow(e - 1 - j as u32) < n,
            })
        })
    }

    /// Simple with no free terms.
    pub fn is_very_simple_leq(&self, n: u64) -> bool {
        self.is_simple_leq(n)
            && self.coords.iter().all(|f| f.iter().all(|t| t.free_term().is_zero()))
    }

    /// Render coordinates joined by `,` inside factors and `|` between factors.
    pub fn render(&self, fq: &FqSpec) -> String {
        self.coords
            .iter()
            .map(|f| f.iter().map(|t| t.render(fq)).collect::<Vec<_>>().join(", "))
            .collect::<Vec<_>>()
            .join(" | ")
    }

    pub fn parse(fq: &FqSpec, group: &GroupSpec, s: &str) -> Result<Self> {
        let factors: Vec<&str> = s.split('|').collect();
        if factors.len() != group.num_factors() {
            return Err(Error::InvalidInput(format!(
                "expected {} factors separated by '|', got {}",
                group.num_factors(),
                factors.len()
            )));
        }
        let mut coords = Vec::new();
        for (u, fs) in factors.iter().enumerate() {
            let parts = crate::laurent::split_top_level(fs, ',');
            if parts.len() != group.exps[u] as usize {
                return Err(Error::InvalidInput(format!(
                    "factor {u} expects {} coordinates, got {}",
                    group.exps[u],
                    parts.len()
                )));
            }
            coords.push(
                parts
                    .iter()
                    .map(|c| LaurentTail::parse(fq, c))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(WittTail { group: group.clone(), coords })
    }
}

/// Canonical torsor class: one residue mod p^(e_u) per factor, plus wild
/// coefficients supported on positive exponents coprime to p.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LocalClass {
    pub group: GroupSpec,
    pub unram: Vec<u64>,
    /// `wild[u][j]`: map pole exponent -> coefficient; keys > 0 and coprime to p.
    pub wild: Vec<Vec<BTreeMap<i64, FqElem>>>,
}

impl LocalClass {
    pub fn trivial(group: &GroupSpec) -> Self {
        LocalClass {
            group: group.clone(),
            unram: vec![0; group.num_factors()],
            wild: group.exps.iter().map(|&e| vec![BTreeMap::new(); e as usize]).collect(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.unram.iter().all(|&r| r == 0) && !self.is_ramified()
    }

    pub fn is_ramified(&self) -> bool {
        self.wild.iter().any(|f| f.iter().any(|m| !m.is_empty()))
    }

    /// Least n such that the class lies in the conductor-<= n stratum:
    /// 0 for unramified classes, otherwise 1 + max p^(e_u-1-j) * neg_ord.
    pub fn conductor(&self) -> u64 {
        let p = self.group.p as u64;
        let mut best: u64 = 0;
        for (u, f) in self.wild.iter().enumerate() {
            let e = self.group.exps[u];
            for (j, m) in f.iter().enumerate() {
                if let Some((&i, _)) = m.iter().next_back() {
                    best = best.max(p.pow(e - 1 - j as u32) * i as u64);
                }
            }
        }
        if best == 0 {
            0
        } else {
            best + 1
        }
    }
}

/// A character of G as the tuple (k_u), k_u in Z/p^(e_u).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Character {
    pub values: Vec<u64>,
}

impl Character {
    pub fn trivial(group: &GroupSpec) -> Self {
        Character { values: vec![0; group.num_factors()] }
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&k| k == 0)
    }

    /// Order of the character is p^h; h = 0 only for the trivial character.
    pub fn target_height(&self, group: &GroupSpec) -> u32 {
        let p = self.group_p(group);
        let mut h = 0u32;
        for (u, &k) in self.values.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let mut v = 0u32;
            let mut kk = k;
            while kk % p as u64 == 0 {
                v += 1;
                kk /= p as u64;
            }
            h = h.max(group.exps[u] - v);
        }
        h
    }

    fn group_p(&self, group: &GroupSpec) -> u32 {
        group.p
    }

    pub fn add(&self, group: &GroupSpec, other: &Character) -> Character {
        Character {
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .enumerate()
                .map(|(u, (&a, &b))| (a + b) % group.factor_order(u))
                .collect(),
        }
    }

    pub fn neg(&self, group: &GroupSpec) -> Character {
        Character {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(u, &a)| (group.factor_order(u) - a) % group.factor_order(u))
                .collect(),
        }
    }

    /// The type of the induced homomorphism G -> Z/p^h: per source factor,
    /// the image of that factor's unit in the target together with the
    /// reshaping kind (truncation for e_u >= h, index-raising inclusion for
    /// e_u < h).
    pub fn type_of(&self, group: &GroupSpec) -> CharacterType {
        let h = self.target_height(group);
        let p = group.p as u64;
        let components = self
            .values
            .iter()
            .enumerate()
            .map(|(u, &k)| {
                let e_u = group.exps[u];
                let rho = if e_u >= h { RhoKind::Truncate } else { RhoKind::Raise };
                // Image of the u-th unit in Z/p^h.
                let image = if h == 0 {
                    0
                } else if e_u >= h {
                    k / p.pow(e_u - h) % p.pow(h)
                } else {
                    (k * p.pow(h - e_u)) % p.pow(h)
                };
                (image, rho)
            })
            .collect();
        CharacterType { target_height: h, components }
    }

    /// The induced surjection G -> Z/p^h as a homomorphism.
    pub fn to_hom(&self, group: &GroupSpec) -> Result<Hom> {
        let h = self.target_height(group);
        if h == 0 {
            return Err(Error::InvalidInput("trivial character has no cyclic target".into()));
        }
        let p = group.p as u64;
        let target = GroupSpec::cyclic(group.p, h)?;
        let mut mult = Vec::with_capacity(group.num_factors());
        for (u, &k) in self.values.iter().enumerate() {
            let e_u = group.exps[u];
            let m = if k == 0 {
                0
            } else if e_u >= h {
                // k is divisible by p^(e_u - h) because h bounds the order.
                k / p.pow(e_u - h)
            } else {
                k
            };
            mult.push(vec![m]);
        }
        Ok(Hom { source: group.clone(), target, mult })
    }
}

/// Reshaping kind of one cyclic-factor component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoKind {
    /// Coordinate truncation W_e -> W_h, e >= h.
    Truncate,
    /// Zero-prepend inclusion W_e -> W_h, e < h.
    Raise,
}

/// Type descriptor of a character: target height h and, per source factor,
/// the pair (image of the factor's unit in Z/p^h, reshaping kind).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterType {
    pub target_height: u32,
    pub components: Vec<(u64, RhoKind)>,
}

/// Homomorphism between products of cyclic p-groups, stored as one multiplier
/// per (source factor, target factor) pair: the (u, h) component is
/// x -> m * rho(x) where rho truncates (e_u >= g_h) or index-raises (e_u < g_h).
#[derive(Debug, Clone)]
pub struct Hom {
    pub source: GroupSpec,
    pub target: GroupSpec,
    /// `mult[u][h]` in `[0, p^(g_h))`.
    pub mult: Vec<Vec<u64>>,
}

impl Hom {
    /// Projection onto the u-th factor.
    pub fn projection(group: &GroupSpec, u: usize) -> Result<Hom> {
        let target = GroupSpec::cyclic(group.p, group.exps[u])?;
        let mut mult = vec![vec![0u64]; group.num_factors()];
        mult[u][0] = 1;
        Ok(Hom { source: group.clone(), target, mult })
    }

    /// Apply on group elements in integer arithmetic.
    pub fn apply_group(&self, x: &[u64]) -> Vec<u64> {
        let p = self.source.p as u64;
        (0..self.target.num_factors())
            .map(|h| {
                let g_h = self.target.exps[h];
                let modulus = p.pow(g_h);
                let mut acc = 0u64;
                for (u, &xu) in x.iter().enumerate() {
                    let e_u = self.source.exps[u];
                    let rho = if e_u >= g_h { xu % modulus } else { (xu * p.pow(g_h - e_u)) % modulus };
                    acc = (acc + self.mult[u][h] % modulus * rho) % modulus;
                }
                acc
            })
            .collect()
    }
}

/// Unramified bookkeeping for one cyclic length e: the subgroup
/// ℘(W_e(F_q)) of constant Witt vectors, a generator of the cyclic quotient,
/// and the labelling coset -> Z/p^e.
struct UnramTable {
    /// Multiples m * gen, indexed by m in [0, p^e).
    multiples: Vec<Vec<FqElem>>,
    /// Encodings of ℘(W_e(F_q)).
    image: BTreeSet<Vec<u8>>,
}

/// Context for torsor computations at a fixed residue field and group.
pub struct LocalCtx {
    pub fq: FqSpec,
    pub group: GroupSpec,
    sys: Arc<PolySystem>,
    /// Tables indexed by e - 1 for e = 1..=e_max; None when q^e exceeds the cap.
    tables: Vec<Option<Arc<UnramTable>>>,
}

impl LocalCtx {
    pub fn new(fq: FqSpec, group: GroupSpec, caps: &Caps) -> Result<Self> {
        if fq.p() != group.p {
            return Err(Error::MismatchedSpec(format!(
                "field characteristic {} differs from group prime {}",
                fq.p(),
                group.p
            )));
        }
        let e_max = group.max_exp();
        let sys = Arc::new(addition_polys(group.p, e_max as usize, caps)?);
        let mut ctx = LocalCtx { fq, group, sys, tables: Vec::new() };
        for e in 1..=e_max {
            let table = if (ctx.fq.q() as u128).pow(e) <= Q_EXHAUSTIVE_CAP as u128 {
                Some(Arc::new(ctx.build_unram_table(e)?))
            } else {
                None
            };
            ctx.tables.push(table);
        }
        Ok(ctx)
    }

    /// A context for the cyclic group Z/p^h sharing this context's polynomial
    /// system and tables; h must not exceed the ambient maximal length.
    pub fn sub_cyclic(&self, h: u32) -> Result<LocalCtx> {
        if h == 0 || h > self.group.max_exp() {
            return Err(Error::MismatchedSpec(format!(
                "cyclic target length {h} outside [1, {}]",
                self.group.max_exp()
            )));
        }
        Ok(LocalCtx {
            fq: self.fq.clone(),
            group: GroupSpec::cyclic(self.group.p, h)?,
            sys: Arc::clone(&self.sys),
            tables: self.tables[..h as usize].to_vec(),
        })
    }

    fn table(&self, e: u32) -> Result<&UnramTable> {
        self.tables[(e - 1) as usize].as_deref().ok_or(Error::QTooLarge {
            q: self.fq.q().pow(e),
            cap: Q_EXHAUSTIVE_CAP,
        })
    }

    // ---- constant Witt vectors of length e ----

    fn const_add(&self, e: u32, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        let e_max = self.sys.e;
        let mut assign = vec![FqElem::ZERO; 2 * e_max];
        assign[..e as usize].copy_from_slice(a);
        assign[e_max..e_max + e as usize].copy_from_slice(b);
        (0..e as usize).map(|j| self.sys.add[j].eval(&self.fq, &assign)).collect()
    }

    fn const_neg(&self, e: u32, a: &[FqElem]) -> Vec<FqElem> {
        let e_max = self.sys.e;
        let mut assign = vec![FqElem::ZERO; e_max];
        assign[..e as usize].copy_from_slice(a);
        (0..e as usize).map(|j| self.sys.inv[j].eval(&self.fq, &assign)).collect()
    }

    fn const_wp(&self, e: u32, a: &[FqElem]) -> Vec<FqElem> {
        let frob: Vec<FqElem> = a.iter().map(|x| self.fq.frobenius(x)).collect();
        self.const_add(e, &frob, &self.const_neg(e, a))
    }

    fn const_scalar(&self, e: u32, m: u64, a: &[FqElem]) -> Vec<FqElem> {
        let mut acc = vec![FqElem::ZERO; e as usize];
        let mut base = a.to_vec();
        let mut mm = m;
        while mm > 0 {
            if mm & 1 == 1 {
                acc = self.const_add(e, &acc, &base);
            }
            mm >>= 1;
            if mm > 0 {
                base = self.const_add(e, &base, &base);
            }
        }
        acc
    }

    fn const_encode(&self, a: &[FqElem]) -> Vec<u8> {
        let mut out = Vec::with_capacity(a.len() * self.fq.k());
        for x in a {
            out.extend_from_slice(x.key(self.fq.k()));
        }
        out
    }

    /// All constant vectors of length e, lexicographic in coefficient order.
    fn const_enumerate(&self, e: u32) -> Vec<Vec<FqElem>> {
        let els: Vec<FqElem> = self.fq.elements().collect();
        let mut out = Vec::with_capacity(els.len().pow(e));
        let mut idx = vec![0usize; e as usize];
        loop {
            out.push(idx.iter().map(|&i| els[i]).collect());
            let mut j = 0;
            loop {
                if j == e as usize {
                    return out;
                }
                idx[j] += 1;
                if idx[j] < els.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    /// The quotient W_e(F_q) / ℘ W_e(F_q) is cyclic of order p^e. The label of
    /// a coset is its discrete logarithm with respect to the lexicographically
    /// smallest generator.
    fn build_unram_table(&self, e: u32) -> Result<UnramTable> {
        let pe = (self.group.p as u64).pow(e);
        let all = self.const_enumerate(e);
        let image: BTreeSet<Vec<u8>> =
            all.iter().map(|c| self.const_encode(&self.const_wp(e, c))).collect();
        if image.len() as u64 * pe != all.len() as u64 {
            return Err(Error::Internal("℘-image of constants has unexpected index".into()));
        }
        let generator = all
            .iter()
            .find(|c| {
                let half = self.const_scalar(e, pe / self.group.p as u64, c);
                !image.contains(&self.const_encode(&half))
            })
            .cloned()
            .ok_or_else(|| Error::Internal("no generator for the unramified quotient".into()))?;
        let mut multiples = Vec::with_capacity(pe as usize);
        let mut acc = vec![FqElem::ZERO; e as usize];
        for _ in 0..pe {
            multiples.push(acc.clone());
            acc = self.const_add(e, &acc, &generator);
        }
        Ok(UnramTable { multiples, image })
    }

    fn unram_label(&self, e: u32, c: &[FqElem]) -> Result<u64> {
        let table = self.table(e)?;
        for (m, mult) in table.multiples.iter().enumerate() {
            let diff = self.const_add(e, c, &self.const_neg(e, mult));
            if table.image.contains(&self.const_encode(&diff)) {
                return Ok(m as u64);
            }
        }
        Err(Error::Internal("constant vector not matched to any residue coset".into()))
    }

    fn unram_embed(&self, e: u32, m: u64) -> Result<Vec<FqElem>> {
        Ok(self.table(e)?.multiples[m as usize].clone())
    }

    // ---- Witt tails ----

    fn check_shape(&self, x: &WittTail) -> Result<()> {
        if x.group != self.group {
            return Err(Error::MismatchedSpec(format!(
                "tail built for group {} used in context for {}",
                x.group, self.group
            )));
        }
        Ok(())
    }

    fn factor_add(&self, e: u32, a: &[LaurentTail], b: &[LaurentTail]) -> Vec<LaurentTail> {
        let e_max = self.sys.e;
        let ring = TailRing(&self.fq);
        let mut assign = vec![LaurentTail::zero(); 2 * e_max];
        assign[..e as usize].clone_from_slice(a);
        assign[e_max..e_max + e as usize].clone_from_slice(b);
        (0..e as usize).map(|j| self.sys.add[j].eval(&ring, &assign)).collect()
    }

    fn factor_neg(&self, e: u32, a: &[LaurentTail]) -> Vec<LaurentTail> {
        let e_max = self.sys.e;
        let ring = TailRing(&self.fq);
        let mut assign = vec![LaurentTail::zero(); e_max];
        assign[..e as usize].clone_from_slice(a);
        (0..e as usize).map(|j| self.sys.inv[j].eval(&ring, &assign)).collect()
    }

    fn factor_frobenius(&self, a: &[LaurentTail]) -> Vec<LaurentTail> {
        a.iter().map(|t| t.frobenius(&self.fq)).collect()
    }

    fn factor_wp(&self, e: u32, a: &[LaurentTail]) -> Vec<LaurentTail> {
        self.factor_add(e, &self.factor_frobenius(a), &self.factor_neg(e, a))
    }

    fn factor_scalar(&self, e: u32, m: u64, a: &[LaurentTail]) -> Vec<LaurentTail> {
        let mut acc = vec![LaurentTail::zero(); e as usize];
        let mut base = a.to_vec();
        let mut mm = m;
        while mm > 0 {
            if mm & 1 == 1 {
                acc = self.factor_add(e, &acc, &base);
            }
            mm >>= 1;
            if mm > 0 {
                base = self.factor_add(e, &base, &base);
            }
        }
        acc
    }

    pub fn witt_add(&self, x: &WittTail, y: &WittTail) -> Result<WittTail> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        let coords = x
            .coords
            .iter()
            .zip(y.coords.iter())
            .zip(self.group.exps.iter())
            .map(|((a, b), &e)| self.factor_add(e, a, b))
            .collect();
        Ok(WittTail { group: self.group.clone(), coords })
    }

    pub fn witt_neg(&self, x: &WittTail) -> Result<WittTail> {
        self.check_shape(x)?;
        let coords = x
            .coords
            .iter()
            .zip(self.group.exps.iter())
            .map(|(a, &e)| self.factor_neg(e, a))
            .collect();
        Ok(WittTail { group: self.group.clone(), coords })
    }

    pub fn witt_sub(&self, x: &WittTail, y: &WittTail) -> Result<WittTail> {
        let ny = self.witt_neg(y)?;
        self.witt_add(x, &ny)
    }

    /// ℘(x) = F(x) - x, factor by factor.
    pub fn wp(&self, x: &WittTail) -> Result<WittTail> {
        self.check_shape(x)?;
        let coords = x
            .coords
            .iter()
            .zip(self.group.exps.iter())
            .map(|(a, &e)| self.factor_wp(e, a))
            .collect();
        Ok(WittTail { group: self.group.clone(), coords })
    }

    /// Canonical representative of the class of x modulo the image of ℘.
    ///
    /// Per factor, coordinates are finalized from j = 0 upward: first every
    /// pole exponent divisible by p is folded (largest first) by adding ℘ of a
    /// one-coordinate monomial vector, then the free term is absorbed into the
    /// running constant vector. Both moves only disturb coordinates above j.
    /// The accumulated constant is then matched to its residue in Z/p^(e_u).
    pub fn reduce(&self, x: &WittTail) -> Result<LocalClass> {
        self.check_shape(x)?;
        if !x.is_tail_only() {
            return Err(Error::InvalidInput(
                "reduce requires tail-only supports (no positive powers of t)".into(),
            ));
        }
        let p = self.group.p as i64;
        let mut unram = Vec::with_capacity(self.group.num_factors());
        let mut wild = Vec::with_capacity(self.group.num_factors());
        for (u, &e) in self.group.exps.iter().enumerate() {
            let mut cur = x.coords[u].clone();
            let mut constant = vec![FqElem::ZERO; e as usize];
            for j in 0..e as usize {
                // Fold p-divisible pole exponents, largest first.
                loop {
                    let target = cur[j]
                        .support()
                        .filter(|&(i, _)| i > 0 && i % p == 0)
                        .map(|(i, _)| i)
                        .next_back();
                    let Some(i) = target else { break };
                    let a = cur[j].coeff(i);
                    // ℘ of -a^(1/p) t^(-i/p) in slot j removes a t^(-i) and
                    // deposits a^(1/p) t^(-i/p) there.
                    let root = self.fq.pth_root(&a);
                    let mono = LaurentTail::term(i / p, self.fq.neg(&root));
                    let mut v = vec![LaurentTail::zero(); e as usize];
                    v[j] = mono;
                    let delta = self.factor_wp(e, &v);
                    debug_assert!(delta[..j].iter().all(|t| t.is_zero()));
                    cur = self.factor_add(e, &cur, &delta);
                    debug_assert!(cur[j].coeff(i).is_zero());
                }
                // Absorb the free term into the constant part.
                let c = cur[j].free_term();
                if !c.is_zero() {
                    let mut cv = vec![FqElem::ZERO; e as usize];
                    cv[j] = c;
                    let cv_tail: Vec<LaurentTail> =
                        cv.iter().map(|&b| LaurentTail::constant(b)).collect();
                    cur = self.factor_add(e, &cur, &self.factor_neg(e, &cv_tail));
                    constant = self.const_add(e, &constant, &cv);
                    debug_assert!(cur[j].free_term().is_zero());
                }
            }
            unram.push(self.unram_label(e, &constant)?);
            wild.push(
                cur.iter()
                    .map(|t| t.support().filter(|&(i, _)| i > 0).collect::<BTreeMap<_, _>>())
                    .collect::<Vec<_>>(),
            );
        }
        Ok(LocalClass { group: self.group.clone(), unram, wild })
    }

    /// Re-express a canonical class as a Witt tail: wild coefficients verbatim
    /// plus the residue's canonical constant vector.
    pub fn embed(&self, c: &LocalClass) -> Result<WittTail> {
        if c.group != self.group {
            return Err(Error::MismatchedSpec("class group differs from context group".into()));
        }
        let mut coords = Vec::with_capacity(self.group.num_factors());
        for (u, &e) in self.group.exps.iter().enumerate() {
            let wild_tails: Vec<LaurentTail> = c.wild[u]
                .iter()
                .map(|m| {
                    let mut t = LaurentTail::zero();
                    for (&i, &b) in m {
                        t.set(&self.fq, i, b);
                    }
                    t
                })
                .collect();
            let cv = self.unram_embed(e, c.unram[u])?;
            let cv_tails: Vec<LaurentTail> =
                cv.iter().map(|&b| LaurentTail::constant(b)).collect();
            coords.push(self.factor_add(e, &wild_tails, &cv_tails));
        }
        Ok(WittTail { group: self.group.clone(), coords })
    }

    pub fn class_eq(&self, x: &WittTail, y: &WittTail) -> Result<bool> {
        let diff = self.witt_sub(x, y)?;
        Ok(self.reduce(&diff)?.is_trivial())
    }

    /// All #G characters in lexicographic order of their value tuples.
    pub fn characters(&self) -> Vec<Character> {
        let mut out = Vec::new();
        let d = self.group.num_factors();
        let mut values = vec![0u64; d];
        loop {
            out.push(Character { values: values.clone() });
            let mut i = d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                values[i] += 1;
                if values[i] < self.group.factor_order(i) {
                    break;
                }
                values[i] = 0;
                if i == 0 {
                    return out;
                }
            }
        }
    }

    /// Push a Witt tail through a homomorphism: per target factor, reshape
    /// each source coordinate tuple, multiply by the stored scalar, and sum.
    pub fn w_phi(&self, hom: &Hom, x: &WittTail) -> Result<WittTail> {
        if hom.source != self.group {
            return Err(Error::MismatchedSpec("hom source differs from context group".into()));
        }
        if hom.target.max_exp() > self.group.max_exp() {
            return Err(Error::MismatchedSpec(
                "hom target longer than context polynomial system".into(),
            ));
        }
        self.check_shape(x)?;
        let mut coords = Vec::with_capacity(hom.target.num_factors());
        for h in 0..hom.target.num_factors() {
            let g_h = hom.target.exps[h];
            let mut acc = vec![LaurentTail::zero(); g_h as usize];
            for (u, &e_u) in self.group.exps.iter().enumerate() {
                let m = hom.mult[u][h];
                if m == 0 {
                    continue;
                }
                let reshaped: Vec<LaurentTail> = if e_u >= g_h {
                    x.coords[u][..g_h as usize].to_vec()
                } else {
                    let mut v = vec![LaurentTail::zero(); (g_h - e_u) as usize];
                    v.extend(x.coords[u].iter().cloned());
                    v
                };
                let scaled = self.factor_scalar(g_h, m, &reshaped);
                acc = self.factor_add(g_h, &acc, &scaled);
            }
            coords.push(acc);
        }
        Ok(WittTail { group: hom.target.clone(), coords })
    }

    /// Conductor of the pushed-forward class along a nontrivial character.
    pub fn character_conductor(&self, chi: &Character, embedded: &WittTail) -> Result<u64> {
        if chi.is_trivial() {
            return Ok(0);
        }
        let hom = chi.to_hom(&self.group)?;
        let pushed = self.w_phi(&hom, embedded)?;
        let sub = self.sub_cyclic(hom.target.max_exp())?;
        Ok(sub.reduce(&pushed)?.conductor())
    }

    /// Sum of conductors over all characters (conductor-discriminant formula).
    pub fn disc_exponent(&self, c: &LocalClass) -> Result<u64> {
        let embedded = self.embed(c)?;
        let mut total = 0u64;
        for chi in self.characters() {
            total += self.character_conductor(&chi, &embedded)?;
        }
        Ok(total)
    }

    /// The long flag n -> { chi : conductor of the pushed class <= n }.
    /// Each level is verified to be a subgroup of the dual group.
    pub fn long_flag_of(&self, c: &LocalClass) -> Result<LongFlag> {
        let embedded = self.embed(c)?;
        let chars = self.characters();
        let mut conds = Vec::with_capacity(chars.len());
        for chi in &chars {
            conds.push(self.character_conductor(chi, &embedded)?);
        }
        let mut jumps: Vec<u64> = conds.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        jumps.sort_unstable();
        let mut entries = Vec::new();
        for &n in &jumps {
            let level: Vec<Character> = chars
                .iter()
                .zip(conds.iter())
                .filter(|(_, &c)| c <= n)
                .map(|(chi, _)| chi.clone())
                .collect();
            entries.push((n, level));
        }
        let flag = LongFlag { group: self.group.clone(), entries };
        flag.verify_subgroups(&self.group)?;
        Ok(flag)
    }

    // ---- exhaustive oracle ----

    /// All Witt tails with coordinate supports in [0, bound(u, j)].
    fn enumerate_box(&self, bounds: &[Vec<i64>], budget: u64) -> Result<Vec<WittTail>> {
        let slots: Vec<(usize, usize, i64)> = bounds
            .iter()
            .enumerate()
            .flat_map(|(u, f)| {
                f.iter().enumerate().flat_map(move |(j, &b)| (0..=b).map(move |i| (u, j, i)))
            })
            .collect();
        let total = (self.fq.q() as u128).checked_pow(slots.len() as u32);
        match total {
            Some(t) if t <= budget as u128 => {}
            _ => {
                return Err(Error::BudgetExceeded(format!(
                    "enumeration box q^{} exceeds budget {budget}",
                    slots.len()
                )))
            }
        }
        let els: Vec<FqElem> = self.fq.elements().collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; slots.len()];
        loop {
            let mut tail = WittTail::zero(&self.group);
            for (s, &(u, j, i)) in slots.iter().enumerate() {
                tail.coords[u][j].set(&self.fq, i, els[idx[s]]);
            }
            out.push(tail);
            let mut s = 0;
            loop {
                if s == slots.len() {
                    return Ok(out);
                }
                idx[s] += 1;
                if idx[s] < els.len() {
                    break;
                }
                idx[s] = 0;
                s += 1;
            }
        }
    }

    /// Exhaustive ℘-orbit classification of the box of tails with supports in
    /// [0, pole_bound]. Morphism representatives range over the pole-profile
    /// box that absorbs every difference of box elements; the quotient is the
    /// partition into cosets of the resulting subgroup of ℘-images.
    pub fn orbit_partition(&self, pole_bound: u64, budget: u64) -> Result<Vec<Vec<WittTail>>> {
        let p = self.group.p as u64;
        let e_max = self.group.max_exp();
        // Box bounds: [0, pole_bound] everywhere.
        let box_bounds: Vec<Vec<i64>> = self
            .group
            .exps
            .iter()
            .map(|&e| vec![pole_bound as i64; e as usize])
            .collect();
        // Morphism bounds: the simple profile of level n = 1 + pole_bound * p^(e_max - 1).
        let n = 1 + pole_bound * p.pow(e_max - 1);
        let u_bounds: Vec<Vec<i64>> = self
            .group
            .exps
            .iter()
            .map(|&e| {
                (0..e).map(|j| ((n - 1) / p.pow(e - 1 - j)) as i64).collect::<Vec<i64>>()
            })
            .collect();
        let box_elems = self.enumerate_box(&box_bounds, budget)?;
        let morphisms = self.enumerate_box(&u_bounds, budget)?;
        // Subgroup of ℘-images, deduplicated.
        let mut image: BTreeMap<Vec<u8>, WittTail> = BTreeMap::new();
        let images: Vec<WittTail> = morphisms
            .par_iter()
            .map(|u| self.wp(u))
            .collect::<Result<Vec<_>>>()?;
        for img in images {
            image.entry(img.encode(&self.fq)).or_insert(img);
        }
        let image: Vec<WittTail> = image.into_values().collect();
        // Coset key: minimal encoding among translates.
        let keyed: Vec<(Vec<u8>, WittTail)> = box_elems
            .into_par_iter()
            .map(|x| {
                let mut best = x.encode(&self.fq);
                for th in &image {
                    let y = self.witt_add(&x, th)?;
                    let k = y.encode(&self.fq);
                    if k < best {
                        best = k;
                    }
                }
                Ok((best, x))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut groups: BTreeMap<Vec<u8>, Vec<WittTail>> = BTreeMap::new();
        for (k, x) in keyed {
            groups.entry(k).or_default().push(x);
        }
        let mut out: Vec<Vec<WittTail>> = groups.into_values().collect();
        for g in &mut out {
            g.sort_by_key(|x| x.encode(&self.fq));
        }
        Ok(out)
    }

    /// Canonical-class representatives with orbit member counts.
    pub fn orbit_oracle(&self, pole_bound: u64, budget: u64) -> Result<Vec<(LocalClass, u64)>> {
        let parts = self.orbit_partition(pole_bound, budget)?;
        parts
            .iter()
            .map(|members| Ok((self.reduce(&members[0])?, members.len() as u64)))
            .collect()
    }
}

/// dim of the conductor-<= n stratum: Σ_u Σ_j (floor((n-1)/p^(e_u-1-j)) - floor((n-1)/p^(e_u-j))).
pub fn dim_of_ball(group: &GroupSpec, n: u64) -> u64 {
    if n <= 1 {
        return 0;
    }
    let p = group.p() as u64;
    let r = n - 1;
    group
        .exponents()
        .iter()
        .map(|&e| (0..e).map(|j| r / p.pow(e - 1 - j) - r / p.pow(e - j)).sum::<u64>())
        .sum()
}

/// Number of classes with conductor <= n: raw count #G * Q^dim and the
/// weighted measure Q^dim.
pub fn local_class_count(group: &GroupSpec, q_residue: u64, n: u64) -> Result<(BigInt, BigInt)> {
    let dim = dim_of_ball(group, n);
    let measure = BigInt::from(q_residue).pow(dim as u32);
    let raw = BigInt::from(group.order()?) * &measure;
    Ok((raw, measure))
}

/// A long flag: increasing subgroup levels of the dual group indexed by jumps,
/// terminating at the full dual group.
#[derive(Debug, Clone)]
pub struct LongFlag {
    pub group: GroupSpec,
    /// (jump, characters at that level), jumps strictly increasing, last level full.
    pub entries: Vec<(u64, Vec<Character>)>,
}

impl LongFlag {
    pub fn jumps(&self) -> Vec<u64> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    /// disc(S) = Σ_n n * (#S_n - #S_(n-1)) over jumps.
    pub fn disc(&self) -> u64 {
        let mut prev = 0u64;
        let mut total = 0u64;
        for (n, level) in &self.entries {
            let size = level.len() as u64;
            total += n * (size - prev);
            prev = size;
        }
        total
    }

    /// Every level must be closed under the dual group law, levels must be
    /// nested, and the last level must be the full dual group.
    pub fn verify_subgroups(&self, group: &GroupSpec) -> Result<()> {
        let order = group.order()?;
        let mut prev_len = 0usize;
        let mut prev: BTreeSet<Character> = BTreeSet::new();
        for (n, level) in &self.entries {
            let set: BTreeSet<Character> = level.iter().cloned().collect();
            if set.len() <= prev_len || !prev.iter().all(|c| set.contains(c)) {
                return Err(Error::Internal(format!("flag levels not strictly nested at {n}")));
            }
            if !set.contains(&Character::trivial(group)) {
                return Err(Error::Internal(format!("level {n} misses the trivial character")));
            }
            for a in &set {
                if !set.contains(&a.neg(group)) {
                    return Err(Error::Internal(format!("level {n} not closed under inversion")));
                }
                for b in &set {
                    if !set.contains(&a.add(group, b)) {
                        return Err(Error::Internal(format!("level {n} not closed under addition")));
                    }
                }
            }
            prev_len = set.len();
            prev = set;
        }
        if prev_len as u64 != order {
            return Err(Error::Internal("flag does not terminate at the full dual group".into()));
        }
        if self.entries.len() as u64 > order {
            return Err(Error::Internal("more jumps than #G".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u32, k: usize, exps: &[u32]) -> LocalCtx {
        let fq = FqSpec::new(p, k).unwrap();
        let group = GroupSpec::new(p, exps.to_vec()).unwrap();
        LocalCtx::new(fq, group, &Caps::default()).unwrap()
    }

    fn tail_e1(ctx: &LocalCtx, terms: &[(i64, u64)]) -> WittTail {
        let mut t = WittTail::zero(&ctx.group);
        for &(i, c) in terms {
            t.coords[0][0].set(&ctx.fq, i, ctx.fq.from_u64(c));
        }
        t
    }

    #[test]
    fn group_spec_parse() {
        let g = GroupSpec::parse("2:1,1").unwrap();
        assert_eq!(g.order().unwrap(), 4);
        assert_eq!(g.to_string(), "2:1,1");
        assert!(GroupSpec::parse("2:").is_err());
        assert!(GroupSpec::parse("nope").is_err());
    }

    #[test]
    fn witt_addition_matches_z4() {
        // W_2(F_2) with the evaluation-based addition is Z/4.
        let c = ctx(2, 1, &[2]);
        let one = c.fq.one();
        let mut x = WittTail::zero(&c.group);
        x.coords[0][0] = LaurentTail::constant(one);
        // 1 + 1 = 2 = (0, 1).
        let two = c.witt_add(&x, &x).unwrap();
        assert!(two.coords[0][0].is_zero());
        assert_eq!(two.coords[0][1].free_term(), one);
        // 2 + 2 = 0.
        let four = c.witt_add(&two, &two).unwrap();
        assert!(four.is_zero());
        // x + (-x) = 0 for all 4 elements.
        for a in 0..2u64 {
            for b in 0..2u64 {
                let mut t = WittTail::zero(&c.group);
                t.coords[0][0] = LaurentTail::constant(c.fq.from_u64(a));
                t.coords[0][1] = LaurentTail::constant(c.fq.from_u64(b));
                let n = c.witt_neg(&t).unwrap();
                assert!(c.witt_add(&t, &n).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn cayley_tables_are_cyclic() {
        // W_e(F_p) is Z/p^e: exhaustive Cayley-table comparison for p^e <= 27.
        for (p, e) in [(2u32, 1u32), (2, 2), (3, 1), (3, 3), (5, 1)] {
            let c = ctx(p, 1, &[e]);
            let pe = (p as u64).pow(e);
            let table = c.build_unram_table(e).unwrap();
            // m -> m * gen is a bijection onto the constants modulo ℘ = 0 (q = p),
            // and addition of multiples matches integer addition mod p^e.
            let encodings: BTreeSet<Vec<u8>> =
                table.multiples.iter().map(|m| c.const_encode(m)).collect();
            assert_eq!(encodings.len() as u64, pe);
            for a in 0..pe {
                for b in 0..pe {
                    let sum = c.const_add(e, &table.multiples[a as usize], &table.multiples[b as usize]);
                    assert_eq!(c.const_encode(&sum), c.const_encode(&table.multiples[((a + b) % pe) as usize]));
                }
            }
        }
    }

    #[test]
    fn wp_on_length_two() {
        // ℘((t^-1, 0)) over p = q = 2 has coordinate 0 equal to t^-2 + t^-1.
        let c = ctx(2, 1, &[2]);
        let mut x = WittTail::zero(&c.group);
        x.coords[0][0] = LaurentTail::term(1, c.fq.one());
        let w = c.wp(&x).unwrap();
        assert_eq!(w.coords[0][0].coeff(2), c.fq.one());
        assert_eq!(w.coords[0][0].coeff(1), c.fq.one());
        assert_eq!(w.coords[0][0].support().count(), 2);
    }

    #[test]
    fn reduce_examples_e1() {
        let c = ctx(2, 1, &[1]);
        // t^-2 reduces to wild {1 -> 1}, no residue.
        let r = c.reduce(&tail_e1(&c, &[(2, 1)])).unwrap();
        assert_eq!(r.unram, vec![0]);
        assert_eq!(r.wild[0][0].len(), 1);
        assert_eq!(r.wild[0][0].get(&1), Some(&c.fq.one()));
        assert_eq!(r.conductor(), 2);
        // t^-4 + t^-2 = ℘(t^-2) is trivial.
        let r = c.reduce(&tail_e1(&c, &[(4, 1), (2, 1)])).unwrap();
        assert!(r.is_trivial());
        // The nontrivial constant has residue 1.
        let r = c.reduce(&tail_e1(&c, &[(0, 1)])).unwrap();
        assert!(!r.is_ramified());
        assert_eq!(r.unram, vec![1]);
        assert_eq!(r.conductor(), 0);
    }

    #[test]
    fn reduce_examples_e2() {
        let c = ctx(2, 1, &[2]);
        // (0, t^-2) reduces to wild coordinate 1 with support {1}.
        let mut x = WittTail::zero(&c.group);
        x.coords[0][1] = LaurentTail::term(2, c.fq.one());
        let r = c.reduce(&x).unwrap();
        assert!(r.wild[0][0].is_empty());
        assert_eq!(r.wild[0][1].len(), 1);
        assert!(r.wild[0][1].contains_key(&1));
        assert_eq!(r.unram, vec![0]);
        // Conductor: coordinate 0 support {1} on e = 2 gives 1 + 2*1 = 3.
        let mut y = WittTail::zero(&c.group);
        y.coords[0][0] = LaurentTail::term(1, c.fq.one());
        let r = c.reduce(&y).unwrap();
        assert_eq!(r.conductor(), 3);
    }

    #[test]
    fn reduce_is_idempotent() {
        let c = ctx(2, 1, &[2]);
        let mut x = WittTail::zero(&c.group);
        x.coords[0][0] = LaurentTail::term(2, c.fq.one()).add(&c.fq, &LaurentTail::constant(c.fq.one()));
        x.coords[0][1] = LaurentTail::term(4, c.fq.one());
        let r = c.reduce(&x).unwrap();
        let r2 = c.reduce(&c.embed(&r).unwrap()).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn class_eq_examples() {
        let c = ctx(2, 1, &[1]);
        let x = tail_e1(&c, &[(2, 1)]);
        let y = tail_e1(&c, &[(1, 1)]);
        assert!(c.class_eq(&x, &x).unwrap());
        assert!(c.class_eq(&x, &y).unwrap());
        assert!(!c.class_eq(&y, &WittTail::zero(&c.group)).unwrap());
    }

    #[test]
    fn very_simple_closed_under_addition() {
        use rand::Rng;
        use rand::SeedableRng;
        let c = ctx(2, 1, &[2]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 9;
        for _ in 0..100 {
            let mut x = WittTail::zero(&c.group);
            let mut y = WittTail::zero(&c.group);
            for j in 0..2usize {
                let bound = (n - 1) / 2u64.pow(1 - j as u32);
                for _ in 0..3 {
                    x.coords[0][j].set(&c.fq, rng.gen_range(1..=bound) as i64, c.fq.from_u64(rng.gen_range(0..2)));
                    y.coords[0][j].set(&c.fq, rng.gen_range(1..=bound) as i64, c.fq.from_u64(rng.gen_range(0..2)));
                }
            }
            assert!(x.is_very_simple_leq(n) && y.is_very_simple_leq(n));
            let s = c.witt_add(&x, &y).unwrap();
            assert!(s.is_very_simple_leq(n));
        }
    }

    #[test]
    fn character_enumeration_and_heights() {
        let c = ctx(2, 1, &[1, 2]);
        let chars = c.characters();
        assert_eq!(chars.len(), 8);
        assert!(chars[0].is_trivial());
        assert_eq!(chars[0].target_height(&c.group), 0);
        // (0, 2) in Z/2 x Z/4 has order 2.
        let chi = Character { values: vec![0, 2] };
        assert_eq!(chi.target_height(&c.group), 1);
        let chi = Character { values: vec![1, 1] };
        assert_eq!(chi.target_height(&c.group), 2);
    }

    #[test]
    fn w_phi_matches_group_maps_on_prime_points() {
        // W_phi restricted to W_G(F_p) equals the underlying group map,
        // exhaustively for #G <= 16.
        for exps in [vec![1u32], vec![2], vec![1, 1], vec![1, 2]] {
            let c = ctx(2, 1, &exps);
            let chars = c.characters();
            let d = c.group.num_factors();
            // Enumerate group elements.
            let mut elems = vec![vec![0u64; d]];
            for u in 0..d {
                let m = c.group.factor_order(u);
                elems = elems
                    .into_iter()
                    .flat_map(|base| {
                        (0..m).map(move |v| {
                            let mut b = base.clone();
                            b[u] = v;
                            b
                        })
                    })
                    .collect();
            }
            for chi in chars.iter().filter(|c| !c.is_trivial()) {
                let hom = chi.to_hom(&c.group).unwrap();
                let sub = c.sub_cyclic(hom.target.max_exp()).unwrap();
                for x in &elems {
                    // Embed x as a constant Witt tail.
                    let mut tail = WittTail::zero(&c.group);
                    for (u, &e) in c.group.exps.iter().enumerate() {
                        let cv = c.unram_embed(e, x[u]).unwrap();
                        for (j, b) in cv.iter().enumerate() {
                            tail.coords[u][j] = LaurentTail::constant(*b);
                        }
                    }
                    let pushed = c.w_phi(&hom, &tail).unwrap();
                    let got = sub.reduce(&pushed).unwrap().unram[0];
                    let expected = hom.apply_group(x)[0];
                    assert_eq!(got, expected, "chi = {chi:?}, x = {x:?}");
                }
            }
        }
    }

    #[test]
    fn truncation_matches_z4_to_z2() {
        // The coordinate truncation W_2 -> W_1 realizes Z/4 -> Z/2 on points.
        let c = ctx(2, 1, &[2]);
        let chi = Character { values: vec![2] }; // order-2 character of Z/4
        let hom = chi.to_hom(&c.group).unwrap();
        assert_eq!(hom.target.exponents(), &[1]);
        for m in 0..4u64 {
            let got = hom.apply_group(&[m])[0];
            assert_eq!(got, m % 2);
        }
    }

    #[test]
    fn disc_exponent_cyclic() {
        // G = Z/2, class of t^-1: one nontrivial character of conductor 2.
        let c = ctx(2, 1, &[1]);
        let cls = c.reduce(&tail_e1(&c, &[(1, 1)])).unwrap();
        assert_eq!(c.disc_exponent(&cls).unwrap(), 2);
        assert_eq!(c.disc_exponent(&LocalClass::trivial(&c.group)).unwrap(), 0);
        // G = Z/3, jump j: all p-1 nontrivial characters preserve the pole.
        let c3 = ctx(3, 1, &[1]);
        let mut x = WittTail::zero(&c3.group);
        x.coords[0][0] = LaurentTail::term(2, c3.fq.one());
        let cls = c3.reduce(&x).unwrap();
        assert_eq!(cls.conductor(), 3);
        assert_eq!(c3.disc_exponent(&cls).unwrap(), 2 * 3);
    }

    #[test]
    fn long_flag_examples() {
        let c = ctx(2, 1, &[1]);
        // Trivial class: single jump at 0 with the full dual group.
        let flag = c.long_flag_of(&LocalClass::trivial(&c.group)).unwrap();
        assert_eq!(flag.jumps(), vec![0]);
        assert_eq!(flag.disc(), 0);
        // Class of t^-1: jumps {0, 2}, sizes 1 and 2, disc 2.
        let cls = c.reduce(&tail_e1(&c, &[(1, 1)])).unwrap();
        let flag = c.long_flag_of(&cls).unwrap();
        assert_eq!(flag.jumps(), vec![0, 2]);
        assert_eq!(flag.entries[0].1.len(), 1);
        assert_eq!(flag.entries[1].1.len(), 2);
        assert_eq!(flag.disc(), 2);
        assert_eq!(flag.disc(), c.disc_exponent(&cls).unwrap());
    }

    #[test]
    fn synthetic_flag_disc() {
        // Jumps {0, 3} on (Z/2)^2 with sizes 1 and 4: disc = 3 * 3 = 9.
        let g = GroupSpec::new(2, vec![1, 1]).unwrap();
        let c = ctx(2, 1, &[1, 1]);
        let all = c.characters();
        let flag = LongFlag {
            group: g.clone(),
            entries: vec![(0, vec![Character::trivial(&g)]), (3, all)],
        };
        flag.verify_subgroups(&g).unwrap();
        assert_eq!(flag.disc(), 9);
    }

    #[test]
    fn orbit_oracle_small_boxes() {
        // p = 2, q = 2, e = 1, pole bound 1: exactly 4 classes.
        let c = ctx(2, 1, &[1]);
        let parts = c.orbit_partition(1, 1 << 20).unwrap();
        assert_eq!(parts.len(), 4);
        // Pole bound 2: still 4 classes (t^-2 folds onto t^-1).
        let parts = c.orbit_partition(2, 1 << 20).unwrap();
        assert_eq!(parts.len(), 4);
        // p = 3, q = 3, e = 1, pole bound 2: 27 classes.
        let c3 = ctx(3, 1, &[1]);
        let parts = c3.orbit_partition(2, 1 << 20).unwrap();
        assert_eq!(parts.len(), 27);
    }

    #[test]
    fn conductor_is_class_invariant() {
        use rand::Rng;
        use rand::SeedableRng;
        let c = ctx(2, 1, &[2]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let mut x = WittTail::zero(&c.group);
            let mut u = WittTail::zero(&c.group);
            for j in 0..2usize {
                for _ in 0..2 {
                    x.coords[0][j].set(&c.fq, rng.gen_range(0..5), c.fq.from_u64(rng.gen_range(0..2)));
                    u.coords[0][j].set(&c.fq, rng.gen_range(0..3), c.fq.from_u64(rng.gen_range(0..2)));
                }
            }
            let moved = c.witt_add(&x, &c.wp(&u).unwrap()).unwrap();
            assert_eq!(
                c.reduce(&x).unwrap().conductor(),
                c.reduce(&moved).unwrap().conductor()
            );
        }
    }

    #[test]
    fn local_class_count_examples() {
        // n = 1: only unramified classes.
        let g = GroupSpec::new(2, vec![2]).unwrap();
        let (raw, measure) = local_class_count(&g, 2, 1).unwrap();
        assert_eq!(raw, BigInt::from(4));
        assert_eq!(measure, BigInt::from(1));
        // p = 2, e = 2, Q = 2, n = 5: dim = 3, measure 8.
        assert_eq!(dim_of_ball(&g, 5), 3);
        let (_, measure) = local_class_count(&g, 2, 5).unwrap();
        assert_eq!(measure, BigInt::from(8));
        // p = 2, e = 1, Q = 2, n = 2: raw 4, matching the oracle.
        let g1 = GroupSpec::new(2, vec![1]).unwrap();
        let (raw, _) = local_class_count(&g1, 2, 2).unwrap();
        assert_eq!(raw, BigInt::from(4));
    }

    #[test]
    fn pole_bounds_preserved_by_w_phi() {
        use rand::Rng;
        use rand::SeedableRng;
        let c = ctx(2, 1, &[1, 2]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = 9u64;
        for _ in 0..40 {
            let mut x = WittTail::zero(&c.group);
            for (u, &e) in c.group.exps.iter().enumerate() {
                for j in 0..e as usize {
                    let bound = (m - 1) / 2u64.pow(e - 1 - j as u32);
                    for _ in 0..2 {
                        x.coords[u][j].set(
                            &c.fq,
                            rng.gen_range(0..=bound) as i64,
                            c.fq.from_u64(rng.gen_range(0..2)),
                        );
                    }
                }
            }
            assert!(x.is_simple_leq(m));
            for chi in c.characters().iter().filter(|ch| !ch.is_trivial()) {
                let hom = chi.to_hom(&c.group).unwrap();
                let pushed = c.w_phi(&hom, &x).unwrap();
                assert!(pushed.is_simple_leq(m), "chi = {chi:?}");
            }
        }
    }

    #[test]
    fn character_types() {
        // Projection onto the u-th factor: image 1 there, 0 elsewhere, with
        // truncation kind on its own factor.
        let g = GroupSpec::new(2, vec![1, 2]).unwrap();
        let proj = Character { values: vec![0, 1] };
        let ty = proj.type_of(&g);
        assert_eq!(ty.target_height, 2);
        assert_eq!(ty.components[1], (1, RhoKind::Truncate));
        assert_eq!(ty.components[0].0, 0);
        assert_eq!(ty.components[0].1, RhoKind::Raise); // e_u = 1 < h = 2
        // An order-2 character of Z/4 truncates with image 1.
        let g4 = GroupSpec::new(2, vec![2]).unwrap();
        let chi = Character { values: vec![2] };
        let ty = chi.type_of(&g4);
        assert_eq!(ty.target_height, 1);
        assert_eq!(ty.components, vec![(1, RhoKind::Truncate)]);
        // The type's images agree with the homomorphism on units.
        for chi in [Character { values: vec![1] }, Character { values: vec![3] }] {
            let ty = chi.type_of(&g4);
            let hom = chi.to_hom(&g4).unwrap();
            assert_eq!(ty.components[0].0, hom.apply_group(&[1])[0]);
        }
    }

    #[test]
    fn trivial_hom_pushes_to_zero() {
        let c = ctx(2, 1, &[2]);
        let hom = Hom {
            source: c.group.clone(),
            target: GroupSpec::cyclic(2, 1).unwrap(),
            mult: vec![vec![0]],
        };
        let mut x = WittTail::zero(&c.group);
        x.coords[0][0] = LaurentTail::term(3, c.fq.one());
        assert!(c.w_phi(&hom, &x).unwrap().is_zero());
    }

    #[test]
    fn maximal_projection_attains_conductor_on_all_configs() {
        for (p, exps, pb) in
            [(2u32, vec![1u32], 4u64), (2, vec![2], 2), (2, vec![1, 1], 2), (3, vec![1], 3)]
        {
            let c = ctx(p, 1, &exps);
            let classes = c.orbit_oracle(pb, 1 << 24).unwrap();
            for (cls, _) in &classes {
                let m = cls.conductor();
                if m < 2 {
                    continue;
                }
                let embedded = c.embed(cls).unwrap();
                let mut best = 0;
                for u in 0..c.group.num_factors() {
                    let proj = Hom::projection(&c.group, u).unwrap();
                    let pushed = c.w_phi(&proj, &embedded).unwrap();
                    let sub = c.sub_cyclic(proj.target.max_exp()).unwrap();
                    best = best.max(sub.reduce(&pushed).unwrap().conductor());
                }
                assert_eq!(best, m, "p={p}, exps={exps:?}, class {cls:?}");
            }
        }
    }

    #[test]
    fn scalar_and_dary_polys_match_repeated_addition() {
        // Evaluate the symbolic scalar and 3-ary systems on all 16 points of
        // W_2(F_2) x W_2(F_2)-style boxes and compare with iterated addition.
        let c = ctx(2, 1, &[2]);
        let caps = Caps::default();
        let sys = addition_polys(2, 2, &caps).unwrap();
        let points: Vec<[FqElem; 2]> = (0..4u64)
            .map(|n| [c.fq.from_u64(n % 2), c.fq.from_u64(n / 2)])
            .collect();
        for k in 0..4u64 {
            let scalar = sys.scalar(k).unwrap();
            for pt in &points {
                let sym: Vec<FqElem> =
                    scalar.iter().map(|p| p.eval(&c.fq, &pt[..])).collect();
                let direct = c.const_scalar(2, k, &pt[..]);
                assert_eq!(sym, direct, "k = {k}, point {pt:?}");
            }
        }
        let tern = sys.dary(3, &caps).unwrap();
        for a in &points {
            for b in &points {
                for d in &points {
                    let mut assign = Vec::new();
                    assign.extend_from_slice(a);
                    assign.extend_from_slice(b);
                    assign.extend_from_slice(d);
                    let sym: Vec<FqElem> =
                        tern.iter().map(|p| p.eval(&c.fq, &assign)).collect();
                    let direct = c.const_add(2, &c.const_add(2, a, b), d);
                    assert_eq!(sym, direct);
                }
            }
        }
    }

    #[test]
    fn render_parse_tail_roundtrip() {
        let c = ctx(2, 1, &[2]);
        let mut x = WittTail::zero(&c.group);
        x.coords[0][0] = LaurentTail::term(3, c.fq.one());
        x.coords[0][1] = LaurentTail::term(1, c.fq.one()).add(&c.fq, &LaurentTail::constant(c.fq.one()));
        let s = x.render(&c.fq);
        let back = WittTail::parse(&c.fq, &c.group, &s).unwrap();
        assert_eq!(back, x);
    }
}
