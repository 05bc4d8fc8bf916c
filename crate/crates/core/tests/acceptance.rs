//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured runtime. Run with `--nocapture` to see the lines.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use torsorcount::fq::FqSpec;
use torsorcount::global::{
    adelic_series, comparable_heights_harness, fit_exponents, global_count_series, ratio_exponent,
    validate_global_box, HeightMode, HeightSpec, SimplePlace,
};
use torsorcount::invariants::{
    ab_invariants, conductor_spec, ct_construct, flag_count_bound, flag_disc_bound_holds,
    flag_enumerate, strongly_suitable_check, v_ab, v_gap_check, RepSpec,
};
use torsorcount::poly::{addition_polys, Caps, Homogeneity};
use torsorcount::torsor::{local_class_count, GroupSpec, LocalCtx, LocalClass, WittTail};

fn rat(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn report(id: u32, what: &str, started: Instant) {
    eprintln!("ACCEPTANCE {id}: PASS — {what} ({:.2?})", started.elapsed());
}

/// The four exhaustive oracle configurations: (p, exponents, k, pole bound).
const ORACLE_CONFIGS: [(u32, &[u32], usize, u64); 4] =
    [(2, &[1], 1, 4), (2, &[2], 1, 2), (2, &[1, 1], 1, 2), (3, &[1], 1, 3)];

fn oracle_ctx(p: u32, exps: &[u32], k: usize) -> LocalCtx {
    let fq = FqSpec::new(p, k).unwrap();
    let group = GroupSpec::new(p, exps.to_vec()).unwrap();
    LocalCtx::new(fq, group, &Caps::default()).unwrap()
}

#[test]
fn criterion_01_ghost_identity() {
    let t = Instant::now();
    let caps = Caps::default();
    for p in [2u32, 3, 5] {
        for e in 1..=4usize {
            let sys = addition_polys(p, e, &caps).unwrap();
            sys.verify_ghost_identity().unwrap();
            sys.verify_inverse_identity().unwrap();
        }
    }
    assert!(t.elapsed().as_secs() < 60, "ghost identity exceeded one minute");
    report(1, "ghost identity exact over Z for p in {2,3,5}, e <= 4", t);
}

#[test]
fn criterion_02_homogeneity() {
    let t = Instant::now();
    let caps = Caps::default();
    for p in [2u32, 3, 5] {
        for e in 1..=4usize {
            let sys = addition_polys(p, e, &caps).unwrap();
            for (n, s) in sys.add.iter().enumerate() {
                assert_eq!(
                    s.homogeneity(),
                    Homogeneity::Degree((p as u64).pow(n as u32)),
                    "S_{n} for p={p}, e={e}"
                );
            }
            for (n, i) in sys.inv.iter().enumerate() {
                assert_eq!(
                    i.homogeneity(),
                    Homogeneity::Degree((p as u64).pow(n as u32)),
                    "I_{n} for p={p}, e={e}"
                );
            }
        }
    }
    report(2, "wdeg(S_n) = wdeg(I_n) = p^n for all generated systems", t);
}

#[test]
fn criterion_03_oracle_equivalence() {
    let t = Instant::now();
    for (p, exps, k, pb) in ORACLE_CONFIGS {
        let ctx = oracle_ctx(p, exps, k);
        let parts = ctx.orbit_partition(pb, 1 << 24).unwrap();
        // reduce is constant on cosets and injective across them.
        let mut canon = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for members in &parts {
            let first = ctx.reduce(&members[0]).unwrap();
            for m in members {
                assert_eq!(ctx.reduce(m).unwrap(), first, "reduce split a coset (p={p})");
            }
            assert!(seen.insert(format!("{first:?}")), "two cosets share a canonical form");
            canon.push(first);
        }
        // class_eq agrees with coset membership on all pairs.
        let flattened: Vec<(usize, &WittTail)> = parts
            .iter()
            .enumerate()
            .flat_map(|(i, ms)| ms.iter().map(move |m| (i, m)))
            .collect();
        for (i, x) in &flattened {
            for (j, y) in &flattened {
                assert_eq!(
                    ctx.class_eq(x, y).unwrap(),
                    i == j,
                    "class_eq disagrees with the oracle (p={p}, exps={exps:?})"
                );
            }
        }
    }
    assert!(t.elapsed().as_secs() < 600, "oracle equivalence exceeded ten minutes");
    report(3, "reduce/class_eq match the exhaustive ℘-orbit oracle on all four configurations", t);
}

#[test]
fn criterion_04_class_count_formula() {
    let t = Instant::now();
    for (p, exps, k, pb) in ORACLE_CONFIGS {
        let ctx = oracle_ctx(p, exps, k);
        let group = GroupSpec::new(p, exps.to_vec()).unwrap();
        let q = FqSpec::new(p, k).unwrap().q();
        let classes = ctx.orbit_oracle(pb, 1 << 24).unwrap();
        for n in 0..=pb + 1 {
            let got = classes.iter().filter(|(c, _)| c.conductor() <= n).count();
            let (raw, _) = local_class_count(&group, q, n).unwrap();
            assert_eq!(BigInt::from(got), raw, "count at n={n} for p={p}, exps={exps:?}");
        }
    }
    report(4, "#(classes with conductor <= n) = #G * Q^dim(n) on all configurations", t);
}

#[test]
fn criterion_05_conductor_discriminant() {
    let t = Instant::now();
    for (p, exps, k, pb) in ORACLE_CONFIGS {
        let ctx = oracle_ctx(p, exps, k);
        let classes = ctx.orbit_oracle(pb, 1 << 24).unwrap();
        for (cls, _) in &classes {
            let disc = ctx.disc_exponent(cls).unwrap();
            let flag = ctx.long_flag_of(cls).unwrap();
            assert_eq!(disc, flag.disc(), "flag disc differs (p={p}, exps={exps:?})");
            // Prime cyclic: disc = (p-1) * conductor.
            if exps == [1] {
                assert_eq!(disc, (p as u64 - 1) * cls.conductor());
            }
        }
    }
    report(5, "disc = flag disc everywhere; disc = (p-1)*cond for prime cyclic groups", t);
}

#[test]
fn criterion_06_flag_bounds_and_counts() {
    let t = Instant::now();
    let groups = [
        GroupSpec::new(2, vec![1]).unwrap(),
        GroupSpec::new(3, vec![1]).unwrap(),
        GroupSpec::new(2, vec![2]).unwrap(),
        GroupSpec::new(2, vec![1, 1]).unwrap(),
    ];
    for group in &groups {
        for n in 0..=30u64 {
            let flags = flag_enumerate(group, n).unwrap();
            for f in &flags {
                assert_eq!(f.disc(), n);
                assert!(
                    flag_disc_bound_holds(group, f).unwrap(),
                    "disc bound fails for {group} at n={n}"
                );
            }
            let bound = flag_count_bound(group, n).unwrap();
            assert!(
                BigInt::from(flags.len()) <= bound,
                "count {} exceeds bound {bound} for {group} at n={n}",
                flags.len()
            );
        }
    }
    report(6, "flag disc inequality and O(n^#G) count bound for n <= 30, #G in {2,3,4}", t);
}

#[test]
fn criterion_07_conductor_ab_invariants() {
    let t = Instant::now();
    for p in [2u32, 3, 5] {
        let group = GroupSpec::new(p, vec![1]).unwrap();
        let spec = conductor_spec(&group);
        spec.verify_periodicity().unwrap();
        let ab = ab_invariants(&spec, 0).unwrap();
        assert!(ab.certified);
        assert_eq!(ab.a, rat(1), "a for Z/{p}");
        assert_eq!(ab.d_values, (2..=p as u64).map(rat).collect::<Vec<_>>(), "D for Z/{p}");
        assert_eq!(ab.b, p as u64 - 1, "b for Z/{p}");
        let (suitable, _) = strongly_suitable_check(&spec, &ab).unwrap();
        assert!(suitable);
        // Brute scan to 3 p^2 cannot beat the certified supremum.
        let fibers = spec.fibers_up_to(&rat(3 * (p as u64) * (p as u64)));
        let brute_best = fibers.iter().map(|f| f.ratio()).max().unwrap();
        assert_eq!(brute_best, ab.a);
        let brute_d: Vec<BigRational> = fibers
            .iter()
            .filter(|f| f.ratio() == ab.a)
            .map(|f| f.value.clone())
            .collect();
        assert_eq!(brute_d, ab.d_values);
    }
    report(7, "conductor a = 1, D = {2..p}, b = p-1 certified and brute-checked to 3p^2", t);
}

#[test]
fn criterion_08_v_functions() {
    let t = Instant::now();
    let families: [(u32, Vec<u32>); 5] = [
        (2, vec![2, 2]),
        (3, vec![3]),
        (5, vec![3, 2, 2]),
        (7, vec![4, 2]),
        (5, vec![2, 2, 2, 2, 2]), // V_2^p, taken at p = 5
    ];
    for (p, dims) in families {
        let rep = RepSpec::new(p, dims.clone()).unwrap();
        assert_eq!(rep.d_v(), p as u64, "D_V for p={p}, dims={dims:?}");
        let ab = v_ab(&rep).unwrap();
        assert_eq!(ab.a, rat(1));
        assert!(ab.certified);
        // b equals the closed-form jump count (cross-checked inside v_ab).
        let expected_b = (1..p as u64)
            .filter(|&j| {
                let rep = RepSpec::new(p, dims.clone()).unwrap();
                let sht = torsorcount::invariants::sht(&rep, j).unwrap() as i64;
                rep.summands() as i64 - rep.dim() as i64 + j as i64 - sht == -1
            })
            .count() as u64;
        assert_eq!(ab.b, expected_b);
        v_gap_check(&rep, 10 * p as u64).unwrap();
    }
    report(8, "five v-function families: D_V = p, a = 1, b matches, gap <= -1 with equality at p-1", t);
}

#[test]
fn criterion_09_prescribed_b_family() {
    let t = Instant::now();
    let group = GroupSpec::new(2, vec![1]).unwrap();
    let tq = BigRational::new(BigInt::from(1), BigInt::from(7));
    for m in [2u64, 3, 4] {
        let spec = ct_construct(&group, m, &tq).unwrap();
        let ab = ab_invariants(&spec, 0).unwrap();
        assert!(ab.certified);
        assert_eq!(ab.b, m);
        assert_eq!(ab.d_values.len() as u64, m);
        let (suitable, _) = strongly_suitable_check(&spec, &ab).unwrap();
        assert!(suitable, "m = {m} not strongly suitable");
    }
    report(9, "prescribed-b functions certified strongly suitable with b = m for m in {2,3,4}", t);
}

#[test]
fn criterion_10_asymptotic_exponents() {
    let t = Instant::now();
    let h2 = HeightSpec::conductor(GroupSpec::new(2, vec![1]).unwrap());
    let s2 = adelic_series(2, &h2, 40).unwrap();
    let fit2 = fit_exponents(&s2.partial_sums(), 2).unwrap();
    assert!((0.9..=1.1).contains(&fit2.a_hat), "a_hat = {}", fit2.a_hat);
    assert!((fit2.b_hat - 1.0).abs() <= 0.3, "b_hat = {}", fit2.b_hat);

    let h3 = HeightSpec::conductor(GroupSpec::new(3, vec![1]).unwrap());
    let s3 = adelic_series(3, &h3, 30).unwrap();
    let fit3 = fit_exponents(&s3.partial_sums(), 3).unwrap();
    assert!((0.9..=1.1).contains(&fit3.a_hat), "a_hat = {}", fit3.a_hat);
    assert!((1.5..=2.5).contains(&fit3.b_hat), "b_hat = {}", fit3.b_hat);
    assert!(t.elapsed().as_secs() < 300, "exponent fits exceeded five minutes");
    report(10, "Euler-product fits: (2,2) a~1, b~1 and (3,3) a~1, b~2 within tolerance", t);
}

#[test]
fn criterion_11_brute_global_counts() {
    let t = Instant::now();
    // Exact global canonical counts up to height 2^14.
    let series = global_count_series(2, 2, 14).unwrap();
    let sums = series.partial_sums();
    let ratio = ratio_exponent(&sums, 2).unwrap();
    assert!((0.8..=1.2).contains(&ratio), "ratio exponent = {ratio}");
    // Exact agreement with the rational-function ℘-orbit oracle on the
    // truncated-support box {t, t+1, inf} with pole bounds 2.
    let fq = FqSpec::new(2, 1).unwrap();
    let support = vec![
        SimplePlace::Finite(fq.zero()),
        SimplePlace::Finite(fq.one()),
        SimplePlace::Infinite,
    ];
    let (cosets, keys, expected) = validate_global_box(&fq, &support, &[2, 2, 2], 1 << 22).unwrap();
    assert_eq!(cosets, keys, "canonical keys must separate the ℘-orbits");
    assert_eq!(BigInt::from(cosets), expected, "orbit count must match the canonical census");
    // Exact set equality: the oracle's canonical keys coincide with the keys
    // of the directly enumerated global classes over the same support.
    let oracle_keys = torsorcount::global::oracle_key_set(&fq, &support, &[2, 2, 2], 1 << 22).unwrap();
    let t_poly = torsorcount::global::FqPoly::from_coeffs(vec![fq.zero(), fq.one()]);
    let t1_poly = torsorcount::global::FqPoly::from_coeffs(vec![fq.one(), fq.one()]);
    let places = vec![
        torsorcount::global::Place::Finite(t_poly),
        torsorcount::global::Place::Finite(t1_poly),
        torsorcount::global::Place::Infinite,
    ];
    let gctx = torsorcount::global::GlobalCtx::new(fq.clone(), 2, places).unwrap();
    let classes = gctx.enumerate_classes(&[2, 2, 2], 1 << 22).unwrap();
    let enum_keys: std::collections::BTreeSet<Vec<u8>> =
        classes.iter().map(|c| gctx.class_key(c)).collect();
    assert_eq!(enum_keys, oracle_keys, "canonical form sets must coincide");
    report(11, "global counts to 2^14 fit the ratio test; validation box matches the ℘-orbit oracle exactly", t);
}

#[test]
fn criterion_12_comparability_harness() {
    let t = Instant::now();
    let group = GroupSpec::new(2, vec![1]).unwrap();
    let cond = HeightSpec::conductor(group.clone());
    // Identical heights: identical fits.
    let same = comparable_heights_harness(2, &cond, &cond, 40).unwrap();
    assert!(same.comparable);
    assert!(same.delta_a < 1e-9);
    // Bounded perturbation of finitely many values away from the D-set:
    // exponents agree within 0.1. (Perturbing a D-value changes the true
    // exponent and must not be asserted equal: moving 2 -> 4 for Z/2 drops
    // a from 1 to 3/4, and the fits resolve that difference.)
    let mut changes = std::collections::BTreeMap::new();
    changes.insert(4u64, rat(5));
    let perturbed =
        HeightSpec { group: group.clone(), mode: HeightMode::ConductorPerturbed(changes) };
    let rep = comparable_heights_harness(2, &cond, &perturbed, 40).unwrap();
    assert!(rep.comparable);
    assert!(rep.delta_a <= 0.1, "delta_a = {}", rep.delta_a);
    let mut d_changes = std::collections::BTreeMap::new();
    d_changes.insert(2u64, rat(4));
    let d_touch =
        HeightSpec { group: group.clone(), mode: HeightMode::ConductorPerturbed(d_changes) };
    let shifted = comparable_heights_harness(2, &cond, &d_touch, 40).unwrap();
    assert!(shifted.delta_a > 0.1, "D-touching perturbation must shift the exponent");
    // Unrescaled disc is incomparable (gap grows); the rescaled pair is the
    // conductor itself, exact proportionality.
    let g3 = GroupSpec::new(3, vec![1]).unwrap();
    let cond3 = HeightSpec::conductor(g3.clone());
    let disc3 = HeightSpec { group: g3.clone(), mode: HeightMode::DiscCyclic };
    assert!(comparable_heights_harness(3, &cond3, &disc3, 30).is_err());
    let a = cond3.local_factor(3, 15).unwrap();
    let b = disc3.local_factor(3, 30).unwrap();
    for r in 0..=15usize {
        assert_eq!(a.coeffs[r], b.coeffs[2 * r], "disc factor is the conductor factor at 2r");
    }
    report(12, "comparable heights agree within 0.1; disc rescales exactly onto the conductor", t);
}

#[test]
fn acceptance_examples_from_operation_contracts() {
    // Spot checks that pin documented per-operation values not covered above.
    let t = Instant::now();
    // Unramified-only count: measure 1, raw #G at n = 1.
    let g = GroupSpec::new(2, vec![2]).unwrap();
    let (raw, measure) = local_class_count(&g, 2, 1).unwrap();
    assert_eq!(raw, BigInt::from(4));
    assert!(measure.is_one());
    // Orbit censuses quoted for the small boxes.
    let ctx = oracle_ctx(2, &[1], 1);
    assert_eq!(ctx.orbit_partition(1, 1 << 20).unwrap().len(), 4);
    assert_eq!(ctx.orbit_partition(2, 1 << 20).unwrap().len(), 4);
    let ctx3 = oracle_ctx(3, &[1], 1);
    assert_eq!(ctx3.orbit_partition(2, 1 << 20).unwrap().len(), 27);
    // Trivial class facts.
    let trivial = LocalClass::trivial(&g);
    assert_eq!(trivial.conductor(), 0);
    assert_eq!(ctx.disc_exponent(&LocalClass::trivial(&ctx.group)).unwrap(), 0);
    report(0, "documented operation examples hold", t);
}
