//! Runtime invariant suites, one per module, used by the CLI `--selftest`
//! flag. Randomized checks draw from a caller-seeded generator so runs are
//! reproducible.

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fq::{FqElem, FqSpec};
use crate::global::{adelic_series, fit_exponents, global_count_series, HeightSpec, SimplePlace};
use crate::invariants::{
    ab_invariants, conductor_spec, ct_construct, flag_count_bound, flag_disc_bound_holds,
    flag_enumerate, v_ab, v_gap_check, RepSpec,
};
use crate::laurent::LaurentTail;
use crate::poly::{addition_polys, Caps, Homogeneity};
use crate::torsor::{local_class_count, GroupSpec, LocalCtx, WittTail};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(results: &mut Vec<CheckResult>, name: &str, outcome: Result<bool>) {
    match outcome {
        Ok(pass) => results.push(CheckResult {
            name: name.into(),
            pass,
            detail: if pass { "ok".into() } else { "failed".into() },
        }),
        Err(e) => {
            results.push(CheckResult { name: name.into(), pass: false, detail: e.to_string() })
        }
    }
}

fn random_tail(rng: &mut ChaCha8Rng, fq: &FqSpec, max_exp: i64, terms: usize) -> LaurentTail {
    let els: Vec<FqElem> = fq.elements().collect();
    let mut t = LaurentTail::zero();
    for _ in 0..terms {
        t.set(fq, rng.gen_range(0..=max_exp), els[rng.gen_range(0..els.len())]);
    }
    t
}

fn random_witt(rng: &mut ChaCha8Rng, ctx: &LocalCtx, max_exp: i64) -> WittTail {
    let mut x = WittTail::zero(&ctx.group);
    for (u, &e) in ctx.group.exponents().iter().enumerate() {
        for j in 0..e as usize {
            x.coords[u][j] = random_tail(rng, &ctx.fq, max_exp, 3);
        }
    }
    x
}

/// Witt polynomial layer: ghost identity, homogeneity, evaluated group laws.
pub fn witt_suite(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let caps = Caps::default();
    for (p, e) in [(2u32, 3usize), (3, 2), (5, 2)] {
        let name = format!("ghost-identity p={p} e={e}");
        check(&mut out, &name, (|| {
            let sys = addition_polys(p, e, &caps)?;
            sys.verify_ghost_identity()?;
            sys.verify_inverse_identity()?;
            Ok(true)
        })());
        let name = format!("homogeneity p={p} e={e}");
        check(&mut out, &name, (|| {
            let sys = addition_polys(p, e, &caps)?;
            for (n, s) in sys.add.iter().enumerate() {
                if s.homogeneity() != Homogeneity::Degree((p as u64).pow(n as u32)) {
                    return Ok(false);
                }
            }
            for (n, i) in sys.inv.iter().enumerate() {
                if i.homogeneity() != Homogeneity::Degree((p as u64).pow(n as u32)) {
                    return Ok(false);
                }
            }
            Ok(true)
        })());
    }
    check(&mut out, "group-laws on 1000 random triples", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fq = FqSpec::new(2, 2)?;
        let group = GroupSpec::new(2, vec![2])?;
        let ctx = LocalCtx::new(fq, group, &Caps::default())?;
        for i in 0..1000 {
            // Alternate between genuine tails and constant vectors.
            let spread = if i % 3 == 0 { 0 } else { 4 };
            let x = random_witt(&mut rng, &ctx, spread);
            let y = random_witt(&mut rng, &ctx, spread);
            let z = random_witt(&mut rng, &ctx, spread);
            let ab = ctx.witt_add(&x, &y)?;
            if ab != ctx.witt_add(&y, &x)? {
                return Ok(false);
            }
            if ctx.witt_add(&ab, &z)? != ctx.witt_add(&x, &ctx.witt_add(&y, &z)?)? {
                return Ok(false);
            }
            if !ctx.witt_add(&x, &ctx.witt_neg(&x)?)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    out
}

/// Residue field and Laurent layer.
pub fn local_field_suite(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    check(&mut out, "frobenius automorphism (exhaustive q <= 16)", (|| {
        for (p, k) in [(2u32, 1usize), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2)] {
            let fq = FqSpec::new(p, k)?;
            let els: Vec<FqElem> = fq.elements().collect();
            for a in &els {
                if fq.pth_root(&fq.frobenius(a)) != *a {
                    return Ok(false);
                }
                for b in &els {
                    let lhs = fq.frobenius(&fq.mul(a, b));
                    if lhs != fq.mul(&fq.frobenius(a), &fq.frobenius(b)) {
                        return Ok(false);
                    }
                    let lhs = fq.frobenius(&fq.add(a, b));
                    if lhs != fq.add(&fq.frobenius(a), &fq.frobenius(b)) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    })());
    check(&mut out, "wp additive on random tails", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let fq = FqSpec::new(3, 2)?;
        for _ in 0..500 {
            let u = random_tail(&mut rng, &fq, 6, 4);
            let v = random_tail(&mut rng, &fq, 6, 4);
            if u.add(&fq, &v).wp(&fq) != u.wp(&fq).add(&fq, &v.wp(&fq)) {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "neg_ord ultrametric", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let fq = FqSpec::new(2, 1)?;
        for _ in 0..500 {
            let u = random_tail(&mut rng, &fq, 8, 3);
            let v = random_tail(&mut rng, &fq, 8, 3);
            let s = u.add(&fq, &v);
            let m = u.neg_ord().max(v.neg_ord());
            if s.neg_ord() > m {
                return Ok(false);
            }
            if u.neg_ord() != v.neg_ord() && s.neg_ord() != m {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "wp solving matches trace criterion", (|| {
        for (p, k) in [(2u32, 1usize), (2, 2), (3, 1)] {
            let fq = FqSpec::new(p, k)?;
            for a in fq.elements() {
                let solvable = fq.solve_wp(&a).is_some();
                if k % p as usize != 0 && solvable != (fq.trace_to_fp(&a) == 0) {
                    return Ok(false);
                }
                if let Some(u) = fq.solve_wp(&a) {
                    if fq.sub(&fq.pow(&u, p as u64), &u) != a {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    })());
    out
}

/// Canonical-form layer: a fast oracle configuration plus class invariants.
pub fn torsor_suite(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    check(&mut out, "oracle equivalence p=2 e=1 q=2 pb=2", (|| {
        let fq = FqSpec::new(2, 1)?;
        let ctx = LocalCtx::new(fq, GroupSpec::new(2, vec![1])?, &Caps::default())?;
        let parts = ctx.orbit_partition(2, 1 << 20)?;
        let mut keys = std::collections::BTreeSet::new();
        for members in &parts {
            let first = ctx.reduce(&members[0])?;
            for m in members {
                if ctx.reduce(m)? != first {
                    return Ok(false);
                }
            }
            keys.insert(format!("{first:?}"));
        }
        Ok(keys.len() == parts.len())
    })());
    check(&mut out, "conductor counts match dimension formula", (|| {
        let fq = FqSpec::new(2, 1)?;
        let group = GroupSpec::new(2, vec![1])?;
        let ctx = LocalCtx::new(fq, group.clone(), &Caps::default())?;
        let classes = ctx.orbit_oracle(2, 1 << 20)?;
        for n in 0..=3u64 {
            let got = classes.iter().filter(|(c, _)| c.conductor() <= n).count();
            let (raw, _) = local_class_count(&group, 2, n)?;
            if BigInt::from(got) != raw {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "conductor is a class invariant", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let fq = FqSpec::new(2, 1)?;
        let ctx = LocalCtx::new(fq, GroupSpec::new(2, vec![2])?, &Caps::default())?;
        for _ in 0..60 {
            let x = random_witt(&mut rng, &ctx, 4);
            let u = random_witt(&mut rng, &ctx, 2);
            let moved = ctx.witt_add(&x, &ctx.wp(&u)?)?;
            if ctx.reduce(&x)?.conductor() != ctx.reduce(&moved)?.conductor() {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "flag levels are subgroups", (|| {
        let fq = FqSpec::new(2, 1)?;
        let ctx = LocalCtx::new(fq, GroupSpec::new(2, vec![1, 1])?, &Caps::default())?;
        let classes = ctx.orbit_oracle(2, 1 << 22)?;
        for (cls, _) in &classes {
            ctx.long_flag_of(cls)?; // verifies closure internally
        }
        Ok(true)
    })());
    check(&mut out, "maximal character attains the conductor", (|| {
        let fq = FqSpec::new(2, 1)?;
        let group = GroupSpec::new(2, vec![1, 1])?;
        let ctx = LocalCtx::new(fq, group.clone(), &Caps::default())?;
        let classes = ctx.orbit_oracle(2, 1 << 22)?;
        for (cls, _) in &classes {
            let m = cls.conductor();
            if m < 2 {
                continue;
            }
            let embedded = ctx.embed(cls)?;
            let mut best = 0;
            for u in 0..group.num_factors() {
                let proj = crate::torsor::Hom::projection(&group, u)?;
                let pushed = ctx.w_phi(&proj, &embedded)?;
                let sub = ctx.sub_cyclic(proj.target.max_exp())?;
                best = best.max(sub.reduce(&pushed)?.conductor());
            }
            if best != m {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "pushforward composes up to class equality", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let fq = FqSpec::new(2, 1)?;
        let group = GroupSpec::new(2, vec![2])?;
        let ctx = LocalCtx::new(fq, group.clone(), &Caps::default())?;
        // phi: Z/4 -> Z/2 (truncation), psi: Z/4 -> Z/4 (times 3).
        let phi = crate::torsor::Character { values: vec![2] }.to_hom(&group)?;
        let psi = crate::torsor::Character { values: vec![3] }.to_hom(&group)?;
        let sub = ctx.sub_cyclic(1)?;
        for _ in 0..40 {
            let x = random_witt(&mut rng, &ctx, 3);
            let step = ctx.w_phi(&psi, &x)?;
            let two_step = ctx.w_phi(&phi, &step)?;
            // Composite: times 3 then truncate = truncate then times 3 mod 2 = times 1.
            let composite = crate::torsor::Character { values: vec![2] }.to_hom(&group)?;
            let direct = ctx.w_phi(&composite, &x)?;
            if !sub.class_eq(&two_step, &direct)? {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    out
}

/// Rational-invariant layer.
pub fn invariants_suite(_seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    check(&mut out, "certified a/b matches brute scan (Z/2, Z/3, Z/5)", (|| {
        for p in [2u32, 3, 5] {
            let group = GroupSpec::new(p, vec![1])?;
            let spec = conductor_spec(&group);
            spec.verify_periodicity()?;
            let ab = ab_invariants(&spec, 0)?;
            let bound = 3 * (p as u64) * (p as u64);
            let fibers =
                spec.fibers_up_to(&num_rational::BigRational::from_integer(BigInt::from(bound)));
            let brute = fibers.iter().map(|f| f.ratio()).max().unwrap();
            if ab.a != brute || ab.b != p as u64 - 1 {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "v-function families", (|| {
        for (p, dims) in [
            (2u32, vec![2, 2]),
            (3, vec![2, 2, 2]),
            (3, vec![3]),
            (5, vec![2; 5]),
            (5, vec![3, 2, 2]),
            (7, vec![4, 2]),
        ] {
            let rep = RepSpec::new(p, dims)?;
            let ab = v_ab(&rep)?;
            if ab.a != num_rational::BigRational::from_integer(BigInt::from(1)) {
                return Ok(false);
            }
            v_gap_check(&rep, 10 * p as u64)?;
        }
        Ok(true)
    })());
    check(&mut out, "prescribed-b family", (|| {
        let group = GroupSpec::new(2, vec![1])?;
        let t = num_rational::BigRational::new(BigInt::from(1), BigInt::from(5));
        for m in [2u64, 3] {
            let spec = ct_construct(&group, m, &t)?;
            let ab = ab_invariants(&spec, 0)?;
            if ab.b != m {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    check(&mut out, "flag enumeration bounds", (|| {
        for group in [GroupSpec::new(2, vec![1])?, GroupSpec::new(3, vec![1])?] {
            for n in 0..=10u64 {
                let flags = flag_enumerate(&group, n)?;
                for f in &flags {
                    if !flag_disc_bound_holds(&group, f)? {
                        return Ok(false);
                    }
                }
                if BigInt::from(flags.len()) > flag_count_bound(&group, n)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })());
    out
}

/// Global counting layer.
pub fn global_suite(_seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    check(&mut out, "adelic coefficients non-negative and monotone", (|| {
        let h = HeightSpec::conductor(GroupSpec::new(2, vec![1])?);
        let s = adelic_series(2, &h, 20)?;
        let sums = s.partial_sums();
        Ok(sums.windows(2).all(|w| w[0] <= w[1]))
    })());
    check(&mut out, "fit recovers the conductor exponents", (|| {
        let h = HeightSpec::conductor(GroupSpec::new(2, vec![1])?);
        let s = adelic_series(2, &h, 40)?;
        let fit = fit_exponents(&s.partial_sums(), 2)?;
        Ok((fit.a_hat - 1.0).abs() < 0.1 && (fit.b_hat - 1.0).abs() < 0.3)
    })());
    check(&mut out, "global counts validate on the tiny box", (|| {
        let fq = FqSpec::new(2, 1)?;
        let support = vec![
            SimplePlace::Finite(fq.zero()),
            SimplePlace::Finite(fq.one()),
            SimplePlace::Infinite,
        ];
        let (cosets, keys, expected) =
            crate::global::validate_global_box(&fq, &support, &[2, 2, 2], 1 << 22)?;
        Ok(cosets == keys && BigInt::from(cosets) == expected)
    })());
    check(&mut out, "northcott growth", (|| {
        let series = global_count_series(2, 2, 14)?;
        let sums = series.partial_sums();
        // Finite, monotone, and bounded by C B^d for the fitted envelope.
        let c = 16.0;
        let d = 1.5;
        for (m, v) in sums.iter().enumerate() {
            let bound = c * 2f64.powf(d * m as f64);
            let v: f64 = v.to_string().parse().unwrap_or(f64::MAX);
            if v > bound {
                return Ok(false);
            }
        }
        Ok(sums.windows(2).all(|w| w[0] <= w[1]))
    })());
    out
}

/// All suites keyed by module name.
pub fn run_suite(module: &str, seed: u64) -> Option<Vec<CheckResult>> {
    match module {
        "witt" => Some(witt_suite(seed)),
        "local-field" => Some(local_field_suite(seed)),
        "torsor" => Some(torsor_suite(seed)),
        "invariants" => Some(invariants_suite(seed)),
        "global" => Some(global_suite(seed)),
        _ => None,
    }
}
