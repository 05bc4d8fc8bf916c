//! Property tests over randomly generated tails and series.

use proptest::prelude::*;

use torsorcount::fq::FqSpec;
use torsorcount::global::CoeffSeries;
use torsorcount::laurent::LaurentTail;
use torsorcount::poly::Caps;
use torsorcount::torsor::{GroupSpec, LocalCtx, WittTail};

fn tail_strategy(p: u32, k: usize, max_exp: i64) -> impl Strategy<Value = LaurentTail> {
    let q = (p as u64).pow(k as u32);
    prop::collection::vec((0..=max_exp, 0..q), 0..5).prop_map(move |terms| {
        let fq = FqSpec::new(p, k).unwrap();
        let els: Vec<_> = fq.elements().collect();
        let mut t = LaurentTail::zero();
        for (i, e) in terms {
            t.set(&fq, i, els[e as usize]);
        }
        t
    })
}

fn witt_strategy(max_exp: i64) -> impl Strategy<Value = WittTail> {
    (tail_strategy(2, 1, max_exp), tail_strategy(2, 1, max_exp)).prop_map(|(a, b)| {
        let group = GroupSpec::new(2, vec![2]).unwrap();
        let mut x = WittTail::zero(&group);
        x.coords[0][0] = a;
        x.coords[0][1] = b;
        x
    })
}

fn ctx22() -> LocalCtx {
    LocalCtx::new(FqSpec::new(2, 1).unwrap(), GroupSpec::new(2, vec![2]).unwrap(), &Caps::default())
        .unwrap()
}

proptest! {
    #[test]
    fn witt_addition_group_laws(x in witt_strategy(5), y in witt_strategy(5), z in witt_strategy(5)) {
        let ctx = ctx22();
        let xy = ctx.witt_add(&x, &y).unwrap();
        prop_assert_eq!(&xy, &ctx.witt_add(&y, &x).unwrap());
        let assoc_l = ctx.witt_add(&xy, &z).unwrap();
        let assoc_r = ctx.witt_add(&x, &ctx.witt_add(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(assoc_l, assoc_r);
        prop_assert!(ctx.witt_add(&x, &ctx.witt_neg(&x).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn wp_is_a_homomorphism_on_tails(x in witt_strategy(4), y in witt_strategy(4)) {
        let ctx = ctx22();
        let lhs = ctx.wp(&ctx.witt_add(&x, &y).unwrap()).unwrap();
        let rhs = ctx.witt_add(&ctx.wp(&x).unwrap(), &ctx.wp(&y).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn reduce_is_invariant_under_wp_shifts(x in witt_strategy(4), u in witt_strategy(2)) {
        let ctx = ctx22();
        let moved = ctx.witt_add(&x, &ctx.wp(&u).unwrap()).unwrap();
        prop_assert_eq!(ctx.reduce(&x).unwrap(), ctx.reduce(&moved).unwrap());
    }

    #[test]
    fn tail_render_parse_roundtrip(t in tail_strategy(3, 2, 6)) {
        let fq = FqSpec::new(3, 2).unwrap();
        let s = t.render(&fq);
        prop_assert_eq!(LaurentTail::parse(&fq, &s).unwrap(), t);
    }

    #[test]
    fn series_multiplication_commutes(a in prop::collection::vec(0u64..50, 1..8),
                                      b in prop::collection::vec(0u64..50, 1..8)) {
        let to_series = |v: &[u64]| CoeffSeries {
            coeffs: v.iter().map(|&x| num_bigint::BigInt::from(x)).collect(),
        };
        let (sa, sb) = (to_series(&a), to_series(&b));
        let levels = 10;
        prop_assert_eq!(sa.mul_trunc(&sb, levels), sb.mul_trunc(&sa, levels));
    }
}
