use amo_core::frequency::GUARD;
use amo_core::oracles::{best_approximation_holds, convergent_table};
use amo_core::*;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

fn liouville(beta: f64, depth: usize) -> FrequencySpec {
    construct_liouville_with(LiouvilleRule::new(beta).with_gap(16).with_seed(1), depth).unwrap()
}

/// Recurrence, coprimality and the Δ sandwich for every convergent.
fn check_convergents(spec: &FrequencySpec, depth: usize) {
    let cs = convergents(spec, depth).unwrap();
    let a = spec.coefficients();
    let (mut pm, mut qm) = (BigUint::one(), BigUint::from(0u32));
    let (mut p0, mut q0) = (BigUint::from(0u32), BigUint::one());
    for (i, c) in cs.iter().enumerate() {
        assert_eq!(c.n, i + 1);
        assert_eq!(c.q, &a[i] * &q0 + &qm, "q recurrence at n={}", c.n);
        assert_eq!(c.p, &a[i] * &p0 + &pm, "p recurrence at n={}", c.n);
        assert!(c.p.gcd(&c.q).is_one());
        pm = std::mem::replace(&mut p0, c.p.clone());
        qm = std::mem::replace(&mut q0, c.q.clone());
    }
    let table = convergent_table(&a[..depth + 1]);
    for c in &cs {
        let q_next = &table[c.n + 1].1;
        let lo = BigRational::new(BigInt::one(), BigInt::from(q_next * 2u32));
        let hi = BigRational::new(BigInt::one(), BigInt::from(q_next.clone()));
        assert!(c.delta_lo <= c.delta && c.delta <= c.delta_hi);
        assert!(lo <= c.delta_lo, "lower sandwich at n={}", c.n);
        assert!(c.delta_hi <= hi, "upper sandwich at n={}", c.n);
    }
}

#[test]
fn convergent_invariants_for_named_frequencies() {
    check_convergents(&FrequencySpec::golden(), 40);
    check_convergents(&FrequencySpec::silver(), 40);
    check_convergents(&liouville(0.4, 20), 18);
    check_convergents(&liouville(1.0, 20), 18);
}

#[test]
fn convergents_match_plain_recurrence() {
    let spec = FrequencySpec::explicit(vec![3u32, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8]).unwrap();
    let table = convergent_table(&spec.coefficients()[..10]);
    for c in convergents(&spec, 10).unwrap() {
        assert_eq!((&c.p, &c.q), (&table[c.n].0, &table[c.n].1));
    }
}

#[test]
fn best_approximation_brute_force() {
    for spec in [
        FrequencySpec::golden(),
        FrequencySpec::silver(),
        liouville(0.4, 20),
        FrequencySpec::explicit(vec![1u32, 7, 2, 1, 3, 1, 1, 12, 1, 2, 5, 1, 1, 1, 1, 1]).unwrap(),
    ] {
        let depth = spec.generated_depth().min(40);
        let table = convergent_table(&spec.coefficients()[..depth]);
        let (p_deep, q_deep) = &table[depth];
        let mut checked = 0;
        for n in 1..depth - 1 {
            let Some(q_next) = table[n + 1].1.to_u64().filter(|&q| q <= 10_000) else {
                break;
            };
            assert!(
                best_approximation_holds(&table[n].0, &table[n].1, q_next, p_deep, q_deep),
                "n={n}"
            );
            checked += 1;
        }
        assert!(checked >= 3);
    }
}

#[test]
fn liouville_beta_tracks_target() {
    for beta in [0.4, 1.0] {
        let mut spec = FrequencySpec::liouville(LiouvilleRule::new(beta)).unwrap();
        let depth = spec.achievable_depth(8);
        assert!(depth >= 4);
        spec.materialize(depth).unwrap();
        let est = estimate_beta(&spec, spec.generated_depth() - 1).unwrap();
        let last = *est.per_n_values.last().unwrap();
        assert!((last - beta).abs() <= 0.05 * beta, "beta={beta} last={last}");
        assert!(est.running_sup_tail.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn liouville_ln2_doubles() {
    let spec = construct_liouville(std::f64::consts::LN_2, 5).unwrap();
    let qs = spec.denominators(5);
    for w in qs.windows(2) {
        let bound = (BigUint::one() << w[0].to_u64().unwrap()) / 2u32;
        assert!(w[1] >= bound);
    }
}

#[test]
fn reduction_near_return() {
    let spec = FrequencySpec::golden();
    let r = reduce_mod_1(&spec, 3, 40).unwrap();
    let delta = convergents(&spec, 3).unwrap()[2].delta_hi_f64();
    assert!(r.value.min(1.0 - r.value) <= delta + r.error_bound);
}

fn coefficient_lists() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..60, 20 + GUARD..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_frequencies_satisfy_invariants(a in coefficient_lists()) {
        let spec = FrequencySpec::explicit(a).unwrap();
        check_convergents(&spec, 20);
    }

    #[test]
    fn beta_tail_is_nonincreasing(a in coefficient_lists()) {
        let spec = FrequencySpec::explicit(a).unwrap();
        let est = estimate_beta(&spec, 12).unwrap();
        prop_assert_eq!(est.per_n_values.len(), 12);
        prop_assert!(est.running_sup_tail.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reduction_agrees_with_exact_fraction(n in -1_000_000i64..1_000_000) {
        let spec = FrequencySpec::golden();
        let r = reduce_mod_1(&spec, n, 60).unwrap();
        let (p, q) = &convergent_table(&spec.coefficients()[..60])[60];
        let num = (BigInt::from(n) * BigInt::from(p.clone())).mod_floor(&BigInt::from(q.clone()));
        let exact = BigRational::new(num, BigInt::from(q.clone())).to_f64().unwrap();
        prop_assert!((r.value - exact).abs() <= 1e-15);
        prop_assert!((0.0..1.0).contains(&r.value));
    }
}
