use proptest::prelude::*;

use d4cond::arith::{is_fundamental_discriminant, kronecker};
use d4cond::census::lfun::{l_values, quad_local_factor, smoothed_l};
use d4cond::census::spec::GlobalSpec;
use d4cond::census::{HyperbolaData, OracleData, Runner};
use d4cond::localalg::{all_local_pairs, qp_width, InfType};
use d4cond::quadfield::element::QElement;
use num_rational::Rational64;
use num_traits::One;

const SMALL_PRIMES: [u64; 4] = [2, 3, 5, 7];

/// A random restriction: for each chosen prime keep the cells selected by
/// a bit mask, and optionally restrict the infinite types.
fn arb_spec() -> impl Strategy<Value = GlobalSpec> {
    (
        prop::collection::vec((0usize..4, any::<u64>()), 0..3),
        prop::option::of(1u8..16),
    )
        .prop_map(|(restrictions, inf)| {
            let mut spec = GlobalSpec::complete();
            for (i, mask) in restrictions {
                let p = SMALL_PRIMES[i];
                let cells: Vec<(u32, u32)> = all_local_pairs(p)
                    .iter()
                    .map(|q| (q.v_rel, q.v_flip))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> (k % 64) & 1 == 1)
                    .map(|(_, c)| c)
                    .collect();
                spec = spec.restrict(p, None, Some(&cells)).unwrap();
            }
            if let Some(bits) = inf {
                let types: Vec<InfType> = InfType::ALL
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| bits >> k & 1 == 1)
                    .map(|(_, t)| *t)
                    .collect();
                spec = spec.restrict_inf(&types);
            }
            spec
        })
}

fn fundamental() -> impl Strategy<Value = i64> {
    (-5000i64..5000).prop_filter("fundamental discriminant", |&d| {
        is_fundamental_discriminant(d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hyperbola_equals_oracle_for_random_specs(spec in arb_spec(), x in 20u64..400) {
        let runner = Runner::new(1);
        let oracle = OracleData::build(x, &runner).unwrap();
        let hyp = HyperbolaData::build(x, &runner).unwrap();
        prop_assert_eq!(oracle.count(x, &spec).unwrap(), hyp.count(&spec).unwrap());
    }

    #[test]
    fn counts_grow_with_x(spec in arb_spec(), x1 in 1u64..600, x2 in 1u64..600) {
        let (lo, hi) = (x1.min(x2), x1.max(x2));
        let oracle = OracleData::build(hi, &Runner::new(1)).unwrap();
        prop_assert!(oracle.count(lo, &spec).unwrap() <= oracle.count(hi, &spec).unwrap());
    }

    #[test]
    fn spec_json_roundtrip(spec in arb_spec()) {
        let back = GlobalSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back.hash_hex(), spec.hash_hex());
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn restricting_never_adds_mass(spec in arb_spec()) {
        let full = GlobalSpec::complete();
        for p in SMALL_PRIMES {
            prop_assert!(spec.mu_p(p) <= full.mu_p(p));
            prop_assert!(spec.mu_weighted_i(p) <= full.mu_weighted_i(p));
        }
        prop_assert!(spec.mu_inf() <= full.mu_inf());
    }

    #[test]
    fn kronecker_is_multiplicative(d in fundamental(), m in 1u64..10_000, n in 1u64..10_000) {
        prop_assert_eq!(kronecker(d, m * n), kronecker(d, m) * kronecker(d, n));
    }

    #[test]
    fn kronecker_has_period_d(d in fundamental(), n in 1u64..10_000) {
        prop_assert_eq!(kronecker(d, n), kronecker(d, n + d.unsigned_abs()));
    }

    #[test]
    fn smoothed_sum_converges_to_functional_equation_value(d in fundamental()) {
        let (l1, l2) = l_values(d);
        prop_assert!(l1 > 0.0 && l2 > 0.0);
        if d.unsigned_abs() < 2000 {
            let n = 10.0 * d.unsigned_abs() as f64;
            let e1 = (smoothed_l(d, n) - l1).abs();
            let e2 = (smoothed_l(d, 10.0 * n) - l1).abs();
            prop_assert!(e1 <= (d.unsigned_abs() as f64).powf(1.0 / 6.0) / n.sqrt(), "{} {}", d, e1);
            prop_assert!(e2 <= e1 / 5.0 + 1e-12, "{} {} {}", d, e1, e2);
        }
    }

    #[test]
    fn full_quadratic_set_has_local_factor_one(i in 0usize..4) {
        let p = SMALL_PRIMES[i];
        let all = (0..(1u8 << qp_width(p))).collect();
        prop_assert_eq!(quad_local_factor(p, Some(&all)), Rational64::one());
    }

    #[test]
    fn norm_is_multiplicative(d in fundamental(), a in -50i64..50, b in -50i64..50, c in -50i64..50, e in -50i64..50) {
        let x = QElement::from_ints(d, a, b, 1);
        let y = QElement::from_ints(d, c, e, 1);
        prop_assert_eq!(x.mul(&y).norm(), x.norm() * y.norm());
    }
}
