use proptest::prelude::*;
use rand::Rng;
use seqbin_core::exponents::*;
use seqbin_core::models::{random_channel, random_joint_source};
use seqbin_core::rng::stream;
use seqbin_core::{BiasCap, Channel, JointSource};

const DOMAIN_TEST: u64 = 0x7465_7374;

fn model(seed: u64) -> (JointSource, Channel) {
    model_with(seed, 1)
}

/// Random models with at least `min_v` side-information symbols.
fn model_with(seed: u64, min_v: usize) -> (JointSource, Channel) {
    let mut rng = stream(seed, DOMAIN_TEST, 0);
    let (nu, nv) = (rng.random_range(2..=4), rng.random_range(min_v..=4));
    let (nx, ny) = (rng.random_range(2..=4), rng.random_range(2..=4));
    (
        random_joint_source(&mut rng, nu, nv),
        random_channel(&mut rng, nx, ny),
    )
}

#[test]
fn slopes_at_zero_are_entropy_and_mutual_information() {
    let h = 1e-6;
    for seed in 0..20 {
        let (s, c) = model(seed);
        let ds = (e_si(&s, h) - e_si(&s, 0.0)) / h;
        let dc = (e0(&c, h) - e0(&c, 0.0)) / h;
        assert!(
            (ds - s.conditional_entropy()).abs() < 1e-4,
            "seed {seed}: {ds}"
        );
        assert!(
            (dc - c.mutual_information()).abs() < 1e-4,
            "seed {seed}: {dc}"
        );
    }
}

#[test]
fn noiseless_channel_reduces_jsc_to_si() {
    let ch = Channel::noiseless(2).unwrap();
    for rho in [0.0, 0.1, 0.5, 1.0] {
        assert!((e0(&ch, rho) - rho).abs() < 1e-12);
    }
    for seed in 0..10 {
        let (s, _) = model(seed);
        let jsc = random_coding_exponent_jsc(&s, &ch, 1).unwrap();
        let si = random_coding_exponent_si(&s, 1.0).unwrap();
        assert!((jsc.exponent - si.exponent).abs() < 1e-9);
    }
}

#[test]
fn example_source_theory_values() {
    let s = JointSource::binary_symmetric(0.1).unwrap();
    let r = random_coding_exponent_si(&s, 0.7).unwrap();
    assert!((r.exponent - 0.05).abs() < 0.005, "{}", r.exponent);
    assert!(e_si(&s, 1.0) < 0.7);
    assert!((e_si(&s, 1.0) - 0.678).abs() < 1e-3);
    let ParetoRoot::Finite(g) = pareto_root(&s, 0.7).unwrap() else {
        panic!("expected a finite root");
    };
    assert!((g * 0.7 - e_si(&s, g)).abs() < 1e-9);
}

fn independent_pair_is_identical(
    pu: Vec<f64>,
    pv: Vec<f64>,
    rho: f64,
) -> Result<(), TestCaseError> {
    let s = JointSource::independent(&pu, &pv).unwrap();
    prop_assert!((e_si(&s, rho) - e_s(&pu, rho)).abs() < 1e-12);
    prop_assert!((f_si(&s, rho) - f_s(&pu, rho)).abs() < 1e-12);
    prop_assert!((g_si(&s, rho) - g_s(&pu, rho)).abs() < 1e-12);
    Ok(())
}

fn pmf(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jensen_source(seed in any::<u64>(), gamma in 0.01f64..=1.0) {
        let (s, _) = model(seed);
        prop_assert!(e_si(&s, gamma) >= f_si(&s, gamma) + g_si(&s, gamma) - 1e-12);
    }

    #[test]
    fn jensen_channel(seed in any::<u64>(), gamma in 0.01f64..=1.0) {
        let (_, c) = model(seed);
        prop_assert!(e0(&c, gamma) <= f_ch(&c, gamma) + g_ch(&c, gamma) + 1e-12);
    }

    #[test]
    fn si_interval_nonempty_when_feasible(seed in any::<u64>(), gamma in 0.01f64..=1.0, slack in 0.0f64..2.0) {
        let (s, _) = model(seed);
        let rate = e_si(&s, gamma) / gamma + slack;
        let iv = bias_range_comp_si(&s, rate, gamma).unwrap();
        prop_assert_eq!(iv.feasible, gamma * rate > e_si(&s, gamma));
        if iv.feasible {
            prop_assert!(iv.nonempty, "{:?}", iv);
        }
    }

    #[test]
    fn jsc_interval_nonempty_when_feasible(seed in any::<u64>(), gamma in 0.01f64..=1.0, lambda in 1u32..6) {
        let (s, c) = model(seed);
        let iv = bias_range_comp_jsc(&s, &c, lambda, gamma).unwrap();
        if f64::from(lambda) * e0(&c, gamma) > e_si(&s, gamma) {
            prop_assert!(iv.feasible && iv.nonempty, "{:?}", iv);
        }
    }

    // With V independent of U the source Jensen inequality is tight and the
    // default bias sits on the lower end of the open interval, so these two
    // draw |V| >= 2.
    #[test]
    fn default_bias_inside_si_interval(seed in any::<u64>(), gamma in 0.05f64..=1.0, slack in 0.01f64..2.0) {
        let (s, _) = model_with(seed, 2);
        let rate = e_si(&s, gamma) / gamma + slack;
        let g = default_bias(&s, None, gamma).unwrap();
        let iv = bias_range_comp_si(&s, rate, gamma).unwrap();
        prop_assert!(iv.contains(g), "{} not in {:?}", g, iv);
        prop_assert!(bias_cap_error_si(&s, gamma).unwrap().admits(g));
    }

    #[test]
    fn default_bias_inside_jsc_interval(seed in any::<u64>(), gamma in 0.05f64..=1.0) {
        let (s, c) = model_with(seed, 2);
        // Smallest lambda for which the moment condition holds.
        let need = e_si(&s, gamma) / e0(&c, gamma);
        prop_assume!(need.is_finite() && need < 200.0);
        let lambda = need.floor() as u32 + 1;
        let g = default_bias(&s, Some((&c, lambda)), gamma).unwrap();
        let iv = bias_range_comp_jsc(&s, &c, lambda, gamma).unwrap();
        prop_assert!(iv.contains(g), "{} not in {:?}", g, iv);
        prop_assert!(bias_cap_error_jsc(&s, &c, lambda, gamma).unwrap().admits(g));
    }

    #[test]
    fn exponent_is_nonnegative_and_monotone_in_rate(seed in any::<u64>(), r in 0.0f64..3.0, dr in 0.0f64..1.0) {
        let (s, _) = model(seed);
        let a = random_coding_exponent_si(&s, r).unwrap();
        let b = random_coding_exponent_si(&s, r + dr).unwrap();
        prop_assert!(a.exponent >= 0.0);
        prop_assert!(b.exponent >= a.exponent - 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.rho_star));
    }

    #[test]
    fn functions_vanish_at_zero(seed in any::<u64>()) {
        let (s, c) = model(seed);
        for v in [e_si(&s, 0.0), f_si(&s, 0.0), g_si(&s, 0.0), e0(&c, 0.0), f_ch(&c, 0.0), g_ch(&c, 0.0)] {
            prop_assert_eq!(v, 0.0);
        }
        prop_assert_eq!(bias_cap_error_si(&s, 0.0).unwrap(), BiasCap::Unbounded);
    }

    #[test]
    fn independent_side_information_is_useless(pu in pmf(3), pv in pmf(2), rho in 0.0f64..=1.0) {
        independent_pair_is_identical(pu, pv, rho)?;
    }
}
