//! a- and b-invariants of raising functions, in exact rational arithmetic.
//!
//! A raising function is described by its nonzero value set together with the
//! fiber dimension and top-component count at each value. The a-invariant is
//! sup (1 + dim) / value; D collects the values attaining it; b sums the
//! top-dimensional component counts over D. Specs may carry a periodicity
//! certificate (value period P, dimension increment I per period), in which
//! case ratios along each arithmetic progression v + nP are monotone toward
//! the limit I / P and the supremum is decided exactly from one window.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fq::FqSpec;
use crate::poly::Caps;
use crate::torsor::{dim_of_ball, Character, GroupSpec, LocalCtx, LongFlag};

fn rat(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// One nonzero value of a raising function with its fiber data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fiber {
    pub value: BigRational,
    pub dim: u64,
    pub components: u64,
}

impl Fiber {
    /// (1 + dim) / value.
    pub fn ratio(&self) -> BigRational {
        (rat(1) + rat(self.dim)) / self.value.clone()
    }
}

/// Certificate that beyond the window tail the value set repeats with period
/// `period` and the fiber dimension grows by `dim_increment` per period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodCert {
    pub period: BigRational,
    pub dim_increment: u64,
}

/// A raising function presented by an explicit window of fibers, optionally
/// extended by periodicity: the values in (max - period, max] repeat shifted
/// by n * period for all n >= 1.
#[derive(Debug, Clone)]
pub struct RaisingSpec {
    pub label: String,
    pub window: Vec<Fiber>,
    pub cert: Option<PeriodCert>,
}

impl RaisingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window.is_empty() {
            return Err(Error::InvalidInput("empty value set".into()));
        }
        for w in &self.window {
            if !w.value.is_positive() {
                return Err(Error::InvalidInput("raising values must be positive".into()));
            }
            if w.components == 0 {
                return Err(Error::InvalidInput("fiber needs at least one component".into()));
            }
        }
        for pair in self.window.windows(2) {
            if pair[0].value >= pair[1].value {
                return Err(Error::InvalidInput("values must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    /// Common denominator M with M * value integral for every window value.
    pub fn common_denominator(&self) -> BigInt {
        let mut m = BigInt::one();
        for w in &self.window {
            m = num_integer::lcm(m, w.value.denom().clone());
        }
        if let Some(c) = &self.cert {
            m = num_integer::lcm(m, c.period.denom().clone());
        }
        m
    }

    /// Fibers of the window tail: values in (max - period, max].
    fn tail(&self) -> Vec<&Fiber> {
        let Some(cert) = &self.cert else { return Vec::new() };
        let max = self.window.last().unwrap().value.clone();
        let lo = max - cert.period.clone();
        self.window.iter().filter(|w| w.value > lo).collect()
    }

    /// Materialize all fibers with value <= bound, applying the certificate.
    pub fn fibers_up_to(&self, bound: &BigRational) -> Vec<Fiber> {
        let mut out: Vec<Fiber> =
            self.window.iter().filter(|w| w.value <= *bound).cloned().collect();
        if let Some(cert) = &self.cert {
            for t in self.tail() {
                let mut n = 1u64;
                loop {
                    let v = t.value.clone() + rat(n) * cert.period.clone();
                    if v > *bound {
                        break;
                    }
                    out.push(Fiber {
                        value: v,
                        dim: t.dim + n * cert.dim_increment,
                        components: t.components,
                    });
                    n += 1;
                }
            }
        }
        out.sort_by(|a, b| a.value.cmp(&b.value));
        out
    }

    /// Check dim(v + P) - dim(v) = increment for every window pair v, v + P.
    pub fn verify_periodicity(&self) -> Result<()> {
        let Some(cert) = &self.cert else { return Ok(()) };
        let by_value: BTreeMap<BigRational, &Fiber> =
            self.window.iter().map(|w| (w.value.clone(), w)).collect();
        let mut pairs = 0;
        for w in &self.window {
            let shifted = w.value.clone() + cert.period.clone();
            if let Some(next) = by_value.get(&shifted) {
                pairs += 1;
                if next.dim != w.dim + cert.dim_increment || next.components != w.components {
                    return Err(Error::Internal(format!(
                        "periodicity certificate fails at value {}",
                        w.value
                    )));
                }
            }
        }
        if pairs == 0 {
            return Err(Error::Internal("window too short to witness its periodicity".into()));
        }
        Ok(())
    }
}

/// Result of the a/b computation.
#[derive(Debug, Clone)]
pub struct ABResult {
    pub a: BigRational,
    /// Values attaining the supremum.
    pub d_values: Vec<BigRational>,
    pub b: u64,
    /// Gap between a and the best ratio outside D (and the periodic limit).
    pub epsilon_margin: BigRational,
    pub certified: bool,
}

/// Compute a, D, b and the margin. With a certificate the answer is exact;
/// without one it is the supremum over window values <= scan_bound and is
/// marked uncertified.
pub fn ab_invariants(spec: &RaisingSpec, scan_bound: u64) -> Result<ABResult> {
    spec.validate()?;
    match &spec.cert {
        None => {
            let bound = rat(scan_bound);
            let fibers: Vec<&Fiber> =
                spec.window.iter().filter(|w| w.value <= bound).collect();
            if fibers.is_empty() {
                return Err(Error::InvalidInput("no values within scan bound".into()));
            }
            let a = fibers.iter().map(|w| w.ratio()).max().unwrap();
            let d: Vec<&Fiber> = fibers.iter().filter(|w| w.ratio() == a).copied().collect();
            let rest_best =
                fibers.iter().filter(|w| w.ratio() != a).map(|w| w.ratio()).max();
            let margin = rest_best.map(|r| a.clone() - r).unwrap_or_else(|| a.clone());
            Ok(ABResult {
                a: a.clone(),
                d_values: d.iter().map(|w| w.value.clone()).collect(),
                b: d.iter().map(|w| w.components).sum(),
                epsilon_margin: margin,
                certified: false,
            })
        }
        Some(cert) => {
            // The window must contain at least one full period at its tail.
            spec.verify_periodicity()?;
            let limit = rat(cert.dim_increment) / cert.period.clone();
            let window_best = spec.window.iter().map(|w| w.ratio()).max().unwrap();
            let a = window_best.clone().max(limit.clone());
            // Constant progressions at the limit make D infinite.
            if a == limit && spec.tail().iter().any(|w| w.ratio() == limit) {
                return Err(Error::InvalidInput(
                    "supremum equals the periodic limit on a whole progression; D is infinite"
                        .into(),
                ));
            }
            let d: Vec<&Fiber> =
                spec.window.iter().filter(|w| w.ratio() == a).collect();
            // Ratios outside D: remaining window values, first periodic
            // translates of the tail, and the limit itself.
            let mut candidates: Vec<BigRational> = spec
                .window
                .iter()
                .filter(|w| w.ratio() != a)
                .map(|w| w.ratio())
                .collect();
            for t in spec.tail() {
                let shifted = Fiber {
                    value: t.value.clone() + cert.period.clone(),
                    dim: t.dim + cert.dim_increment,
                    components: t.components,
                };
                candidates.push(shifted.ratio());
            }
            candidates.push(limit.clone());
            let rest_best = candidates.into_iter().filter(|r| *r != a).max();
            let margin = rest_best.map(|r| a.clone() - r).unwrap_or_else(|| a.clone());
            let _ = scan_bound;
            Ok(ABResult {
                a: a.clone(),
                d_values: d.iter().map(|w| w.value.clone()).collect(),
                b: d.iter().map(|w| w.components).sum(),
                epsilon_margin: margin,
                certified: true,
            })
        }
    }
}

/// Strong suitability: D finite, nonempty and separated by a positive margin.
/// The margin is recomputed from the claimed D; the witness is the best ratio
/// outside the claimed D.
pub fn strongly_suitable_check(
    spec: &RaisingSpec,
    ab: &ABResult,
) -> Result<(bool, Option<(BigRational, BigRational)>)> {
    if !ab.certified || ab.d_values.is_empty() {
        return Ok((false, None));
    }
    let in_d = |v: &BigRational| ab.d_values.contains(v);
    let mut best: Option<(BigRational, BigRational)> = None;
    let mut consider = |value: BigRational, ratio: BigRational| {
        if !in_d(&value) && best.as_ref().map(|(_, r)| ratio > *r).unwrap_or(true) {
            best = Some((value, ratio));
        }
    };
    for w in &spec.window {
        consider(w.value.clone(), w.ratio());
    }
    if let Some(cert) = &spec.cert {
        for t in spec.tail() {
            let shifted = Fiber {
                value: t.value.clone() + cert.period.clone(),
                dim: t.dim + cert.dim_increment,
                components: t.components,
            };
            consider(shifted.value.clone(), shifted.ratio());
        }
        let limit = rat(cert.dim_increment) / cert.period.clone();
        consider(rat(0), limit); // value 0 stands in for the unattained limit
    }
    match best {
        None => Ok((true, None)),
        Some((v, r)) => Ok((r < ab.a, Some((v, r)))),
    }
}

// ---- conductor ----

/// Value period of the conductor function: p^(e_d).
pub fn conductor_period(group: &GroupSpec) -> u64 {
    (group.p() as u64).pow(group.max_exp())
}

/// Dimension growth over one period: Σ_u (p^(e_d) - p^(e_d - e_u)).
pub fn conductor_increment(group: &GroupSpec) -> u64 {
    let p = group.p() as u64;
    let e_max = group.max_exp();
    group.exponents().iter().map(|&e| p.pow(e_max) - p.pow(e_max - e)).sum()
}

/// The conductor fiber at r, when nonempty: realizable values are r >= 2 with
/// v_p(r - 1) < e_d; there the fiber dimension equals dim of the <= r stratum
/// and the fiber is open in an affine space (one component).
pub fn conductor_fiber(group: &GroupSpec, r: u64) -> Option<Fiber> {
    if r < 2 {
        return None;
    }
    let p = group.p() as u64;
    let mut m = r - 1;
    let mut v = 0;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    if v >= group.max_exp() {
        return None;
    }
    Some(Fiber { value: rat(r), dim: dim_of_ball(group, r), components: 1 })
}

/// Conductor exponent as a raising spec: a two-period window plus the exact
/// periodicity certificate.
pub fn conductor_spec(group: &GroupSpec) -> RaisingSpec {
    let period = conductor_period(group);
    let window: Vec<Fiber> =
        (2..=2 * period + 1).filter_map(|r| conductor_fiber(group, r)).collect();
    RaisingSpec {
        label: format!("conductor[{group}]"),
        window,
        cert: Some(PeriodCert {
            period: rat(period),
            dim_increment: conductor_increment(group),
        }),
    }
}

// ---- v-functions of Z/p-representations ----

/// A linear representation of Z/p as a multiset of indecomposable summand
/// dimensions d_λ in [1, p].
#[derive(Debug, Clone)]
pub struct RepSpec {
    pub p: u32,
    pub dims: Vec<u32>,
}

impl RepSpec {
    pub fn new(p: u32, dims: Vec<u32>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > p) {
            return Err(Error::InvalidInput(
                "summand dimensions must lie in [1, p] and be nonempty".into(),
            ));
        }
        Ok(RepSpec { p, dims })
    }

    /// Total dimension d = Σ d_λ.
    pub fn dim(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).sum()
    }

    /// Number of summands l.
    pub fn summands(&self) -> u64 {
        self.dims.len() as u64
    }

    /// D_V = Σ (d_λ - 1) d_λ / 2.
    pub fn d_v(&self) -> u64 {
        self.dims.iter().map(|&d| (d as u64 - 1) * d as u64 / 2).sum()
    }
}

/// Shift number sht_V(j) = Σ_λ Σ_{i=1}^{d_λ - 1} floor(i j / p), for p ∤ j.
pub fn sht(rep: &RepSpec, j: u64) -> Result<u64> {
    if j % rep.p as u64 == 0 {
        return Err(Error::InvalidInput(format!("sht needs p ∤ j, got j = {j}")));
    }
    Ok(rep
        .dims
        .iter()
        .map(|&d| (1..d as u64).map(|i| i * j / rep.p as u64).sum::<u64>())
        .sum())
}

/// v(j) = d - l + sht_V(j) for a ramification jump j coprime to p.
pub fn v_value(rep: &RepSpec, j: u64) -> Result<u64> {
    Ok(rep.dim() - rep.summands() + sht(rep, j)?)
}

/// Dimension of the jump-j stratum: j - floor(j / p).
pub fn jump_dim(p: u32, j: u64) -> u64 {
    j - j / p as u64
}

/// The v-function as a raising spec. Only the regime D_V = p is supported;
/// jumps sharing a value are merged (maximal dimension wins, components count
/// the maximizing jumps) and reported.
pub struct VSpec {
    pub spec: RaisingSpec,
    /// Values carried by more than one jump within the window.
    pub collisions: Vec<(BigRational, Vec<u64>)>,
}

pub fn v_spec(rep: &RepSpec) -> Result<VSpec> {
    let p = rep.p as u64;
    if rep.d_v() != p {
        return Err(Error::InvalidInput(format!(
            "v-function requires D_V = p (got D_V = {}, p = {p})",
            rep.d_v()
        )));
    }
    // Three j-periods; the value set repeats with period p beyond the tail.
    let mut by_value: BTreeMap<BigRational, Vec<u64>> = BTreeMap::new();
    for j in 1..=3 * p {
        if j % p == 0 {
            continue;
        }
        by_value.entry(rat(v_value(rep, j)?)).or_default().push(j);
    }
    let mut window = Vec::new();
    let mut collisions = Vec::new();
    for (value, jumps) in by_value {
        let dmax = jumps.iter().map(|&j| jump_dim(rep.p, j)).max().unwrap();
        let components = jumps.iter().filter(|&&j| jump_dim(rep.p, j) == dmax).count() as u64;
        if jumps.len() > 1 {
            collisions.push((value.clone(), jumps.clone()));
        }
        window.push(Fiber { value, dim: dmax, components });
    }
    let spec = RaisingSpec {
        label: format!("v[p={}, dims={:?}]", rep.p, rep.dims),
        window,
        cert: Some(PeriodCert { period: rat(p), dim_increment: p - 1 }),
    };
    spec.verify_periodicity()?;
    Ok(VSpec { spec, collisions })
}

/// a(v) = 1 and b(v) counts j in [1, p-1] with l - d + j - sht(j) = -1; the
/// closed form is cross-checked against the window computation.
pub fn v_ab(rep: &RepSpec) -> Result<ABResult> {
    let p = rep.p as u64;
    let vs = v_spec(rep)?;
    let ab = ab_invariants(&vs.spec, 10 * p)?;
    let l = rep.summands() as i64;
    let d = rep.dim() as i64;
    let mut count = 0u64;
    for j in 1..p {
        if l - d + j as i64 - sht(rep, j)? as i64 == -1 {
            count += 1;
        }
    }
    if ab.a != rat(1) {
        return Err(Error::Internal(format!("a(v) = {} differs from 1", ab.a)));
    }
    if ab.b != count {
        return Err(Error::Internal(format!(
            "b(v) mismatch: window gives {}, jump count gives {count}",
            ab.b
        )));
    }
    Ok(ab)
}

/// dim C_j - v(j) <= -1 for all p ∤ j <= bound, with equality at j = p - 1.
pub fn v_gap_check(rep: &RepSpec, bound: u64) -> Result<()> {
    let p = rep.p as u64;
    for j in 1..=bound {
        if j % p == 0 {
            continue;
        }
        let gap = jump_dim(rep.p, j) as i64 - v_value(rep, j)? as i64;
        if gap > -1 {
            return Err(Error::Internal(format!("dim C_{j} - v({j}) = {gap} > -1")));
        }
        if j == p - 1 && gap != -1 {
            return Err(Error::Internal(format!("gap at j = p - 1 is {gap}, expected -1")));
        }
    }
    Ok(())
}

// ---- prescribed-b family ----

/// Build a strongly suitable function with #D = b = m by rescaling m selected
/// conductor fibers r_i = r_1 + (i-1) * period onto the common ratio 1/t:
/// each selected fiber keeps its dimension but moves to the value t (1 + dim).
/// All other fibers keep the conductor value. Requires t < 1 / a(conductor)
/// and that the new values avoid the untouched ones.
pub fn ct_construct(group: &GroupSpec, m: u64, t: &BigRational) -> Result<RaisingSpec> {
    if m == 0 || m > 16 {
        return Err(Error::InvalidInput("component target m must lie in [1, 16]".into()));
    }
    if !t.is_positive() {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    let period = conductor_period(group);
    let increment = conductor_increment(group);
    let base = conductor_spec(group);
    let ab = ab_invariants(&base, 0)?;
    let r1 = ab.d_values[0]
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Internal("non-integral conductor value".into()))?;
    let selected: Vec<u64> = (0..m).map(|i| r1 + i * period).collect();
    // Window: all conductor values through one period past the last selected.
    let hi = selected.last().unwrap() + 2 * period;
    let untouched: Vec<Fiber> = (2..=hi + 1)
        .filter(|r| !selected.contains(r))
        .filter_map(|r| conductor_fiber(group, r))
        .collect();
    // Ratios of everything that keeps the conductor value stay below 1/t.
    let limit = rat(increment) / rat(period);
    let mut rest_best = limit.clone();
    for w in &untouched {
        rest_best = rest_best.max(w.ratio());
    }
    let new_ratio = rat(1) / t.clone();
    if new_ratio <= rest_best {
        return Err(Error::InvalidInput(format!(
            "t = {t} too large: needs 1/t > {rest_best}"
        )));
    }
    let mut window = untouched;
    for &r in &selected {
        let fiber = conductor_fiber(group, r)
            .ok_or_else(|| Error::Internal("selected value not realizable".into()))?;
        let value = t.clone() * (rat(1) + rat(fiber.dim));
        if window.iter().any(|w| w.value == value) {
            return Err(Error::InvalidInput(format!(
                "rescaled value {value} collides with an untouched value; perturb t"
            )));
        }
        window.push(Fiber { value, dim: fiber.dim, components: 1 });
    }
    window.sort_by(|a, b| a.value.cmp(&b.value));
    let spec = RaisingSpec {
        label: format!("ct[{group}, m={m}, t={t}]"),
        window,
        cert: Some(PeriodCert { period: rat(period), dim_increment: increment }),
    };
    spec.validate()?;
    Ok(spec)
}

// ---- long flag enumeration ----

fn subgroup_cap(group: &GroupSpec) -> Result<u64> {
    let order = group.order()?;
    if order > 64 {
        return Err(Error::BudgetExceeded(format!(
            "subgroup lattice enumeration capped at #G = 64, got {order}"
        )));
    }
    Ok(order)
}

fn all_elements(group: &GroupSpec) -> Vec<Character> {
    let d = group.num_factors();
    let mut out = vec![Character { values: vec![0; d] }];
    for u in 0..d {
        let m = group.factor_order(u);
        out = out
            .into_iter()
            .flat_map(|c| {
                (0..m).map(move |v| {
                    let mut c = c.clone();
                    c.values[u] = v;
                    c
                })
            })
            .collect();
    }
    out.sort();
    out
}

fn close_under_group(group: &GroupSpec, gens: &[Character]) -> Vec<Character> {
    let mut set: std::collections::BTreeSet<Character> = std::collections::BTreeSet::new();
    set.insert(Character::trivial(group));
    let mut frontier: Vec<Character> = gens.to_vec();
    while let Some(g) = frontier.pop() {
        if set.contains(&g) {
            continue;
        }
        let snapshot: Vec<Character> = set.iter().cloned().collect();
        set.insert(g.clone());
        for h in snapshot {
            let s = g.add(group, &h);
            if !set.contains(&s) {
                frontier.push(s);
            }
        }
        // Close under repeated addition of g itself.
        let mut power = g.add(group, &g);
        while !set.contains(&power) {
            frontier.push(power.clone());
            power = power.add(group, &g);
        }
    }
    set.into_iter().collect()
}

/// All subgroups of the dual group, as sorted element lists.
pub fn subgroups(group: &GroupSpec) -> Result<Vec<Vec<Character>>> {
    subgroup_cap(group)?;
    let elements = all_elements(group);
    let mut known: Vec<Vec<Character>> = vec![vec![Character::trivial(group)]];
    let mut frontier = known.clone();
    while let Some(h) = frontier.pop() {
        for g in &elements {
            if h.binary_search(g).is_ok() {
                continue;
            }
            let mut gens = h.clone();
            gens.push(g.clone());
            let closed = close_under_group(group, &gens);
            if !known.contains(&closed) {
                known.push(closed.clone());
                frontier.push(closed);
            }
        }
    }
    known.sort_by_key(|s| (s.len(), s.clone()));
    Ok(known)
}

/// All strictly increasing subgroup chains ending at the full dual group.
fn chains_to_full(group: &GroupSpec) -> Result<Vec<Vec<Vec<Character>>>> {
    let subs = subgroups(group)?;
    let full = subs.last().unwrap().clone();
    let mut out = Vec::new();
    // DFS over strictly increasing chains.
    fn extend(
        subs: &[Vec<Character>],
        full: &Vec<Character>,
        chain: &mut Vec<Vec<Character>>,
        out: &mut Vec<Vec<Vec<Character>>>,
    ) {
        let last = chain.last().unwrap().clone();
        if &last == full {
            out.push(chain.clone());
            return;
        }
        for s in subs {
            if s.len() > last.len() && last.iter().all(|c| s.binary_search(c).is_ok()) {
                chain.push(s.clone());
                extend(subs, full, chain, out);
                chain.pop();
            }
        }
    }
    for s in &subs {
        let mut chain = vec![s.clone()];
        extend(&subs, &full, &mut chain, &mut out);
    }
    Ok(out)
}

/// All long flags with disc exactly n: each is a chain A_1 ⊊ ... ⊊ A_k = G^*
/// with jumps 0 = j_1 < ... < j_k solving Σ_{i >= 2} j_i (#A_i - #A_{i-1}) = n.
pub fn flag_enumerate(group: &GroupSpec, n: u64) -> Result<Vec<LongFlag>> {
    subgroup_cap(group)?;
    let chains = chains_to_full(group)?;
    let mut flags = Vec::new();
    for chain in &chains {
        let weights: Vec<u64> = chain
            .windows(2)
            .map(|pair| (pair[1].len() - pair[0].len()) as u64)
            .collect();
        // Assign strictly increasing jumps j_2 < ... < j_k with the weighted sum n.
        fn assign(
            weights: &[u64],
            idx: usize,
            min_jump: u64,
            remaining: u64,
            current: &mut Vec<u64>,
            out: &mut Vec<Vec<u64>>,
        ) {
            if idx == weights.len() {
                if remaining == 0 {
                    out.push(current.clone());
                }
                return;
            }
            // Lower bound on what the remaining jumps must consume.
            let w = weights[idx];
            let mut j = min_jump;
            while j * w <= remaining {
                current.push(j);
                assign(weights, idx + 1, j + 1, remaining - j * w, current, out);
                current.pop();
                j += 1;
            }
        }
        let mut assignments = Vec::new();
        if weights.is_empty() {
            if n == 0 {
                assignments.push(Vec::new());
            }
        } else {
            assign(&weights, 0, 1, n, &mut Vec::new(), &mut assignments);
        }
        for jumps in assignments {
            let mut entries = vec![(0u64, chain[0].clone())];
            for (i, &j) in jumps.iter().enumerate() {
                entries.push((j, chain[i + 1].clone()));
            }
            let flag = LongFlag { group: group.clone(), entries };
            flag.verify_subgroups(group)?;
            debug_assert_eq!(flag.disc(), n);
            flags.push(flag);
        }
    }
    Ok(flags)
}

/// Upper bound on the number of long flags with disc = n: the number of
/// subgroup chains times the number of jump sets of size < #G within [1, n].
pub fn flag_count_bound(group: &GroupSpec, n: u64) -> Result<BigInt> {
    let chains = chains_to_full(group)?.len();
    let order = group.order()?;
    let mut total = BigInt::zero();
    for k in 0..order {
        total += binomial(n, k);
    }
    Ok(BigInt::from(chains) * total)
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// disc(S) <= max(J) * (#G - #S_bottom) for a long flag S, where S_bottom is
/// the level at jump 0. For #G = p this is max(J) * #G * (1 - 1/p); for
/// composite #G the (1 - 1/p) form fails (already on the flag {0} ⊊ (Z/4)^*
/// at jump 1), so the bound is kept in the form the telescoping sum gives.
pub fn flag_disc_bound_holds(group: &GroupSpec, flag: &LongFlag) -> Result<bool> {
    let max_jump = flag.jumps().into_iter().max().unwrap_or(0);
    let order = group.order()?;
    let bottom = flag.entries.first().map(|(_, l)| l.len() as u64).unwrap_or(1);
    Ok(flag.disc() <= max_jump * (order - bottom))
}

// ---- empirical discriminant fiber dimensions ----

#[derive(Debug, Clone)]
pub struct DiscFiberReport {
    pub group: GroupSpec,
    pub disc_value: u64,
    /// (field size, class count with that disc value).
    pub counts: Vec<(u64, u64)>,
    /// floor(log_q of the count ratio); None when the fiber is empty.
    pub estimated_dim: Option<u64>,
}

/// Count classes of discriminant exactly r over F_q and F_{q^2} and estimate
/// the fiber dimension from the growth of the counts.
pub fn disc_fiber_dim_estimate(
    group: &GroupSpec,
    p: u32,
    k: usize,
    r: u64,
    budget: u64,
) -> Result<DiscFiberReport> {
    // disc >= (p - 1) * cond: the phi(p^h) coprime multiples of a
    // conductor-attaining character attain the conductor themselves, so the
    // search box only needs poles below r / (p - 1).
    let max_cond = r / (p as u64 - 1);
    let pole_bound = max_cond.saturating_sub(1);
    let mut counts = Vec::new();
    for s in 1..=2usize {
        let fq = FqSpec::new(p, k * s)?;
        let q_s = fq.q();
        let ctx = LocalCtx::new(fq, group.clone(), &Caps::default())?;
        let classes = ctx.orbit_oracle(pole_bound, budget)?;
        let mut count = 0u64;
        for (cls, _) in &classes {
            if ctx.disc_exponent(cls)? == r {
                count += 1;
            }
        }
        counts.push((q_s, count));
    }
    let estimated_dim = if counts.iter().all(|&(_, c)| c > 0) {
        let (q1, n1) = counts[0];
        let (_, n2) = counts[1];
        let ratio = n2 as f64 / n1 as f64;
        Some((ratio.ln() / (q1 as f64).ln() + 1e-9).floor() as u64)
    } else {
        None
    };
    Ok(DiscFiberReport { group: group.clone(), disc_value: r, counts, estimated_dim })
}
