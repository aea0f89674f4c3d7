//! Gallager-style source and channel functions, random-coding delay
//! exponents, the admissible bias ranges for the stack decoder, and the
//! conjectured Pareto exponent of computation.
//!
//! Source side, with `h(v) = sum_u Q(u|v)^(1/(1+rho))`:
//!
//! ```text
//! E_si(rho) = log2 sum_v Q(v) h(v)^(1+rho)
//! F_si(rho) = log2 sum_v Q(v) h(v)^rho
//! G_si(rho) = log2 sum_v Q(v) h(v)
//! ```
//!
//! Channel side, with `j(y) = sum_x beta(x) (W(y|x)/P(y))^(1/(1+rho))`:
//!
//! ```text
//! E_0(rho) = -log2 sum_y P(y) j(y)^(1+rho)
//! F(rho)   = -log2 sum_y P(y) j(y)^rho
//! G(rho)   = -log2 sum_y P(y) j(y)
//! ```
//!
//! All functions are exactly zero at `rho = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Channel, JointSource};

/// Step of the coarse grid used before golden-section refinement.
pub const GRID_STEP: f64 = 1e-3;
/// Final bracket width of the golden-section refinement.
pub const GOLDEN_TOLERANCE: f64 = 1e-9;
/// Upper end of the Pareto-root search domain.
pub const PARETO_GAMMA_MAX: f64 = 10.0;

fn source_terms(source: &JointSource, rho: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let s = 1.0 / (1.0 + rho);
    (0..source.num_v()).map(move |v| {
        let h: f64 = (0..source.num_u())
            .map(|u| source.conditional(u, v).powf(s))
            .sum();
        (source.marginal_v()[v], h)
    })
}

fn channel_terms(channel: &Channel, rho: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let s = 1.0 / (1.0 + rho);
    let beta = channel.input_dist();
    channel
        .output_dist()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(move |(y, &p)| {
            let j: f64 = (0..channel.num_x())
                .map(|x| beta[x] * (channel.transition(x, y) / p).powf(s))
                .sum();
            (p, j)
        })
}

fn source_moment(source: &JointSource, rho: f64, power: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    source_terms(source, rho)
        .map(|(q, h)| q * h.powf(power))
        .sum::<f64>()
        .log2()
}

fn channel_moment(channel: &Channel, rho: f64, power: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    -channel_terms(channel, rho)
        .map(|(p, j)| p * j.powf(power))
        .sum::<f64>()
        .log2()
}

pub fn e_si(source: &JointSource, rho: f64) -> f64 {
    source_moment(source, rho, 1.0 + rho)
}

pub fn f_si(source: &JointSource, rho: f64) -> f64 {
    source_moment(source, rho, rho)
}

pub fn g_si(source: &JointSource, rho: f64) -> f64 {
    source_moment(source, rho, 1.0)
}

fn marginal_log_sum(marginal: &[f64], rho: f64) -> f64 {
    let s = 1.0 / (1.0 + rho);
    marginal.iter().map(|q| q.powf(s)).sum::<f64>().log2()
}

/// Point-to-point source function of a single marginal.
pub fn e_s(marginal: &[f64], rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    (1.0 + rho) * marginal_log_sum(marginal, rho)
}

pub fn f_s(marginal: &[f64], rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    rho * marginal_log_sum(marginal, rho)
}

pub fn g_s(marginal: &[f64], rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    marginal_log_sum(marginal, rho)
}

pub fn e0(channel: &Channel, rho: f64) -> f64 {
    channel_moment(channel, rho, 1.0 + rho)
}

pub fn f_ch(channel: &Channel, rho: f64) -> f64 {
    channel_moment(channel, rho, rho)
}

pub fn g_ch(channel: &Channel, rho: f64) -> f64 {
    channel_moment(channel, rho, 1.0)
}

/// Result of maximizing an exponent objective over `rho` in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub rho_star: f64,
    pub exponent: f64,
    pub feasible: bool,
}

/// Maximizes a continuous `f` on `[0, 1]`: coarse grid, then golden section
/// around the best grid point.
pub fn maximize_unit_interval(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let steps = (1.0 / GRID_STEP).round() as usize;
    let (mut best_x, mut best) = (0.0, f(0.0));
    for i in 1..=steps {
        let x = i as f64 / steps as f64;
        let y = f(x);
        if y > best {
            best_x = x;
            best = y;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best_x - GRID_STEP).max(0.0), (best_x + GRID_STEP).min(1.0));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let y = f(x);
    if y > best {
        (x, y)
    } else {
        (best_x, best)
    }
}

fn report(objective: impl Fn(f64) -> f64) -> ExponentReport {
    let (rho_star, exponent) = maximize_unit_interval(objective);
    ExponentReport {
        rho_star,
        exponent,
        feasible: exponent > 0.0,
    }
}

/// `sup_{rho in [0,1]} rho R - E_si(rho)`.
pub fn random_coding_exponent_si(source: &JointSource, rate: f64) -> Result<ExponentReport> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate {rate} must be non-negative"
        )));
    }
    Ok(report(|rho| rho * rate - e_si(source, rho)))
}

/// `sup_{rho in [0,1]} lambda E_0(rho) - E_si(rho)`.
pub fn random_coding_exponent_jsc(
    source: &JointSource,
    channel: &Channel,
    lambda: u32,
) -> Result<ExponentReport> {
    check_lambda(lambda)?;
    let l = f64::from(lambda);
    Ok(report(|rho| l * e0(channel, rho) - e_si(source, rho)))
}

/// Upper limit on the bias for the random-coding delay exponent at `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasCap {
    Bounded(f64),
    Unbounded,
}

impl BiasCap {
    pub fn admits(&self, bias: f64) -> bool {
        match *self {
            BiasCap::Bounded(cap) => bias <= cap,
            BiasCap::Unbounded => true,
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rho {rho} outside [0, 1]")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gamma {gamma} outside (0, 1]"
        )))
    }
}

fn check_lambda(lambda: u32) -> Result<()> {
    if lambda == 0 {
        Err(Error::InvalidParameter(
            "lambda must be a positive integer".into(),
        ))
    } else {
        Ok(())
    }
}

/// `(1+rho)/rho [E_si(rho) - F_si(rho)]`.
pub fn bias_cap_error_si(source: &JointSource, rho: f64) -> Result<BiasCap> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(BiasCap::Unbounded);
    }
    Ok(BiasCap::Bounded(
        (1.0 + rho) / rho * (e_si(source, rho) - f_si(source, rho)),
    ))
}

/// `(1+rho)/rho [E_si - F_si - lambda E_0 + lambda F]` at `rho`.
pub fn bias_cap_error_jsc(
    source: &JointSource,
    channel: &Channel,
    lambda: u32,
    rho: f64,
) -> Result<BiasCap> {
    check_rho(rho)?;
    check_lambda(lambda)?;
    if rho == 0.0 {
        return Ok(BiasCap::Unbounded);
    }
    let l = f64::from(lambda);
    Ok(BiasCap::Bounded(
        (1.0 + rho) / rho
            * (e_si(source, rho) - f_si(source, rho) - l * e0(channel, rho)
                + l * f_ch(channel, rho)),
    ))
}

/// Open interval of biases giving a finite `gamma`-th moment of computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasInterval {
    pub lower: f64,
    pub upper: f64,
    pub nonempty: bool,
    /// Whether the rate (or channel) condition for the moment holds.
    pub feasible: bool,
}

impl BiasInterval {
    fn new(lower: f64, upper: f64, feasible: bool) -> Self {
        Self {
            lower,
            upper,
            nonempty: lower < upper,
            feasible,
        }
    }

    pub fn contains(&self, bias: f64) -> bool {
        self.lower < bias && bias < self.upper
    }
}

pub fn bias_range_comp_si(source: &JointSource, rate: f64, gamma: f64) -> Result<BiasInterval> {
    check_gamma(gamma)?;
    let k = (1.0 + gamma) / gamma;
    Ok(BiasInterval::new(
        k * g_si(source, gamma),
        k * (gamma * rate - f_si(source, gamma)),
        gamma * rate > e_si(source, gamma),
    ))
}

pub fn bias_range_comp_jsc(
    source: &JointSource,
    channel: &Channel,
    lambda: u32,
    gamma: f64,
) -> Result<BiasInterval> {
    check_gamma(gamma)?;
    check_lambda(lambda)?;
    let k = (1.0 + gamma) / gamma;
    let l = f64::from(lambda);
    Ok(BiasInterval::new(
        k * (g_si(source, gamma) - l * g_ch(channel, gamma)),
        k * (l * f_ch(channel, gamma) - f_si(source, gamma)),
        l * e0(channel, gamma) > e_si(source, gamma),
    ))
}

/// The bias that meets the delay-exponent cap at `rho = gamma` and, when the
/// moment condition holds, lies inside the computation interval. `channel`
/// selects the joint source-channel variant.
pub fn default_bias(
    source: &JointSource,
    channel: Option<(&Channel, u32)>,
    gamma: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    let cap = match channel {
        None => bias_cap_error_si(source, gamma)?,
        Some((ch, lambda)) => bias_cap_error_jsc(source, ch, lambda, gamma)?,
    };
    match cap {
        BiasCap::Bounded(g) => Ok(g),
        BiasCap::Unbounded => unreachable!("gamma > 0"),
    }
}

/// Root of `gamma R = E_si(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoRoot {
    Finite(f64),
    /// `gamma R > E_si(gamma)` on all of `(0, PARETO_GAMMA_MAX]`.
    Unbounded,
}

/// Smallest positive root of `h(gamma) = gamma R - E_si(gamma)` in
/// `(0, PARETO_GAMMA_MAX]`. `E_si` is convex with `E_si'(0) = H(U|V)`, so
/// a positive root exists only when `R > H(U|V)` and it is unique.
pub fn pareto_root(source: &JointSource, rate: f64) -> Result<ParetoRoot> {
    let entropy = source.conditional_entropy();
    if rate <= entropy {
        return Err(Error::RateBelowEntropy { rate, entropy });
    }
    let h = |g: f64| g * rate - e_si(source, g);
    let step = 1e-2;
    let steps = (PARETO_GAMMA_MAX / step).round() as usize;
    let mut lo = 0.0;
    for i in 1..=steps {
        let g = i as f64 * step;
        if h(g) < 0.0 {
            let mut hi = g;
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if h(mid) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(ParetoRoot::Finite(0.5 * (lo + hi)));
        }
        lo = g;
    }
    Ok(ParetoRoot::Unbounded)
}

/// Union bound on the probability of a depth-`d` failure event for an
/// integer rate, minimized over `rho` in `[0, 1]`:
///
/// ```text
/// sum_{k=1}^d 2^(-d rho R + (d-k) rho G/(1+rho) + k E_si(rho) + (d-k) F_si(rho))
/// ```
pub fn failure_event_bound_si(source: &JointSource, rate: f64, bias: f64, depth: u32) -> f64 {
    let d = f64::from(depth);
    let at = |rho: f64| -> f64 {
        let (e, f) = (e_si(source, rho), f_si(source, rho));
        (1..=depth)
            .map(|k| {
                let k = f64::from(k);
                (-d * rho * rate + (d - k) * rho * bias / (1.0 + rho) + k * e + (d - k) * f).exp2()
            })
            .sum()
    };
    let (_, neg) = maximize_unit_interval(|rho| -at(rho));
    (-neg).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{random_channel, random_joint_source};
    use crate::rng::{stream, DOMAIN_SOURCE};

    fn example_source() -> JointSource {
        JointSource::binary_symmetric(0.1).unwrap()
    }

    fn closed_form_e_si(eps: f64, rho: f64) -> f64 {
        let s = 1.0 / (1.0 + rho);
        (1.0 + rho) * (eps.powf(s) + (1.0 - eps).powf(s)).log2()
    }

    fn useless_channel() -> Channel {
        Channel::new(vec![vec![0.2, 0.8], vec![0.2, 0.8]], vec![0.5, 0.5]).unwrap()
    }

    /// Dense-grid oracle at step 1e-5.
    fn dense_max(f: impl Fn(f64) -> f64) -> f64 {
        (0..=100_000)
            .map(|i| f(i as f64 * 1e-5))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn all_functions_vanish_at_zero() {
        let s = example_source();
        let c = Channel::bsc(0.05).unwrap();
        for v in [
            e_si(&s, 0.0),
            f_si(&s, 0.0),
            g_si(&s, 0.0),
            e_s(s.marginal_u(), 0.0),
            f_s(s.marginal_u(), 0.0),
            g_s(s.marginal_u(), 0.0),
            e0(&c, 0.0),
            f_ch(&c, 0.0),
            g_ch(&c, 0.0),
        ] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn example_source_closed_form() {
        let s = example_source();
        for rho in [0.1, 0.5, 1.0, 2.0] {
            assert!((e_si(&s, rho) - closed_form_e_si(0.1, rho)).abs() < 1e-12);
        }
        let expected = 2.0 * (0.1f64.sqrt() + 0.9f64.sqrt()).log2();
        assert!((e_si(&s, 1.0) - expected).abs() < 1e-12);
        assert!((e_si(&s, 1.0) - 0.6781).abs() < 1e-4);
        assert!((f_si(&s, 1.0) - 0.3390).abs() < 1e-4);
    }

    #[test]
    fn point_to_point_functions() {
        for m in [2usize, 3, 8] {
            let uniform = vec![1.0 / m as f64; m];
            for rho in [0.3, 1.0] {
                assert!((e_s(&uniform, rho) - rho * (m as f64).log2()).abs() < 1e-12);
            }
        }
        let expected = 2.0 * (0.9f64.sqrt() + 0.1f64.sqrt()).log2();
        assert!((e_s(&[0.9, 0.1], 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn independent_side_information_reduces() {
        let mut rng = stream(4, DOMAIN_SOURCE, 0);
        for _ in 0..20 {
            let pu = random_joint_source(&mut rng, 4, 1);
            let pv = random_joint_source(&mut rng, 3, 1);
            let pu: Vec<f64> = pu.marginal_u().to_vec();
            let s = JointSource::independent(&pu, pv.marginal_u()).unwrap();
            for rho in [0.2, 0.7, 1.0] {
                assert!((e_si(&s, rho) - e_s(&pu, rho)).abs() < 1e-12);
                assert!((f_si(&s, rho) - f_s(&pu, rho)).abs() < 1e-12);
                assert!((g_si(&s, rho) - g_s(&pu, rho)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_function_cases() {
        let noiseless = Channel::noiseless(2).unwrap();
        let useless = useless_channel();
        for rho in [0.1, 0.5, 1.0] {
            assert!((e0(&noiseless, rho) - rho).abs() < 1e-12);
            assert!(e0(&useless, rho).abs() < 1e-12);
            assert!(f_ch(&useless, rho).abs() < 1e-12);
        }
    }

    #[test]
    fn slopes_at_zero() {
        let mut rng = stream(5, DOMAIN_SOURCE, 0);
        let h = 1e-6;
        for _ in 0..20 {
            let s = random_joint_source(&mut rng, 3, 4);
            let c = random_channel(&mut rng, 3, 3);
            assert!((e_si(&s, h) / h - s.conditional_entropy()).abs() < 1e-4);
            assert!((e0(&c, h) / h - c.mutual_information()).abs() < 1e-4);
        }
    }

    #[test]
    fn example_exponent() {
        let s = example_source();
        let r = random_coding_exponent_si(&s, 0.7).unwrap();
        assert!((r.exponent - 0.05).abs() < 0.005, "{r:?}");
        assert!(r.feasible);
        let oracle = dense_max(|rho| rho * 0.7 - e_si(&s, rho));
        assert!((r.exponent - oracle).abs() < 1e-6);
    }

    #[test]
    fn exponent_at_conditional_entropy_is_zero() {
        let s = example_source();
        let r = random_coding_exponent_si(&s, s.conditional_entropy()).unwrap();
        assert_eq!(r.rho_star, 0.0);
        assert_eq!(r.exponent, 0.0);
        assert!(!r.feasible);
    }

    #[test]
    fn exponent_at_full_rate_matches_dense_grid() {
        let s = JointSource::independent(&[0.25; 4], &[0.5, 0.5]).unwrap();
        let r = random_coding_exponent_si(&s, 2.0).unwrap();
        let oracle = dense_max(|rho| rho * 2.0 - e_si(&s, rho));
        assert!((r.exponent - oracle).abs() < 1e-6);
        assert!(r.exponent.abs() < 1e-9);
    }

    #[test]
    fn jsc_exponent_cases() {
        let s = example_source();
        let si = random_coding_exponent_si(&s, 1.0).unwrap();
        let jsc = random_coding_exponent_jsc(&s, &Channel::noiseless(2).unwrap(), 1).unwrap();
        assert!((si.exponent - jsc.exponent).abs() < 1e-9);

        let useless = random_coding_exponent_jsc(&s, &useless_channel(), 3).unwrap();
        assert!(useless.exponent.abs() < 1e-12);

        let bsc = Channel::bsc(0.05).unwrap();
        let r = random_coding_exponent_jsc(&s, &bsc, 2).unwrap();
        let oracle = dense_max(|rho| 2.0 * e0(&bsc, rho) - e_si(&s, rho));
        assert!((r.exponent - oracle).abs() < 1e-6);
        assert!(random_coding_exponent_jsc(&s, &bsc, 0).is_err());
    }

    #[test]
    fn bias_caps() {
        let s = example_source();
        let BiasCap::Bounded(cap) = bias_cap_error_si(&s, 1.0).unwrap() else {
            panic!("bounded")
        };
        assert!((cap - 0.6781).abs() < 1e-4);
        assert_eq!(bias_cap_error_si(&s, 0.0).unwrap(), BiasCap::Unbounded);
        assert!(bias_cap_error_si(&s, 1.5).is_err());

        let det = JointSource::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(bias_cap_error_si(&det, 0.5).unwrap(), BiasCap::Bounded(0.0));

        let pu = [0.7, 0.2, 0.1];
        let indep = JointSource::independent(&pu, &[0.4, 0.6]).unwrap();
        for rho in [0.25, 1.0] {
            let BiasCap::Bounded(c) = bias_cap_error_si(&indep, rho).unwrap() else {
                panic!()
            };
            let reduced = (1.0 + rho) / rho * (e_s(&pu, rho) - f_s(&pu, rho));
            assert!((c - reduced).abs() < 1e-12);
        }
    }

    #[test]
    fn jsc_bias_caps() {
        let s = example_source();
        let noiseless = Channel::noiseless(2).unwrap();
        for rho in [0.3, 1.0] {
            // Direct numeric evaluation of the channel terms.
            let k = (1.0 + rho) / rho;
            let s_rho = 1.0 / (1.0 + rho);
            let inner: f64 = 0.5 * 2f64.powf(s_rho);
            let e0n = -(2.0 * 0.5 * inner.powf(1.0 + rho)).log2();
            let fn_ = -(2.0 * 0.5 * inner.powf(rho)).log2();
            let expected = k * (e_si(&s, rho) - f_si(&s, rho) - e0n + fn_);
            let BiasCap::Bounded(c) = bias_cap_error_jsc(&s, &noiseless, 1, rho).unwrap() else {
                panic!()
            };
            assert!((c - expected).abs() < 1e-12);
        }
        let si = bias_cap_error_si(&s, 0.5).unwrap();
        let useless = bias_cap_error_jsc(&s, &useless_channel(), 2, 0.5).unwrap();
        let (BiasCap::Bounded(a), BiasCap::Bounded(b)) = (si, useless) else {
            panic!()
        };
        assert!((a - b).abs() < 1e-12);

        let bsc = Channel::bsc(0.1).unwrap();
        let cap = |l| match bias_cap_error_jsc(&s, &bsc, l, 0.5).unwrap() {
            BiasCap::Bounded(c) => c,
            BiasCap::Unbounded => panic!(),
        };
        let base = match si {
            BiasCap::Bounded(c) => c,
            BiasCap::Unbounded => panic!(),
        };
        assert!(((cap(2) - base) - 2.0 * (cap(1) - base)).abs() < 1e-12);
    }

    #[test]
    fn computation_intervals() {
        let s = example_source();
        let i = bias_range_comp_si(&s, 0.7, 1.0).unwrap();
        assert!(i.feasible && i.nonempty);
        assert!((i.lower - 2.0 * g_si(&s, 1.0)).abs() < 1e-12);
        assert!((i.upper - 2.0 * (0.7 - f_si(&s, 1.0))).abs() < 1e-12);
        assert!(!bias_range_comp_si(&s, 0.5, 1.0).unwrap().feasible);
        assert!(bias_range_comp_si(&s, 0.7, 0.0).is_err());

        let useless = bias_range_comp_jsc(&s, &useless_channel(), 4, 1.0).unwrap();
        assert!(!useless.feasible);
        let noiseless = bias_range_comp_jsc(&s, &Channel::noiseless(2).unwrap(), 1, 1.0).unwrap();
        assert!(noiseless.feasible && noiseless.nonempty);
    }

    #[test]
    fn randomized_nonempty_and_default_bias() {
        let mut rng = stream(6, DOMAIN_SOURCE, 0);
        let mut checked = 0;
        while checked < 100 {
            let s = random_joint_source(&mut rng, 3, 3);
            let gamma = 0.05 + 0.95 * crate::rng::unit_f64(rand::RngCore::next_u64(&mut rng));
            let rate = e_si(&s, gamma) / gamma + 0.05;
            let i = bias_range_comp_si(&s, rate, gamma).unwrap();
            assert!(i.feasible && i.nonempty, "{i:?}");
            let g = default_bias(&s, None, gamma).unwrap();
            assert!(i.contains(g), "{g} not in {i:?}");
            assert!(bias_cap_error_si(&s, gamma).unwrap().admits(g));
            checked += 1;
        }
    }

    #[test]
    fn default_bias_cases() {
        let g = default_bias(&example_source(), None, 1.0).unwrap();
        assert!((g - 0.6781).abs() < 1e-4);
        let det = JointSource::new(vec![vec![0.3, 0.0], vec![0.0, 0.7]]).unwrap();
        assert_eq!(default_bias(&det, None, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn pareto_root_cases() {
        let s = example_source();
        let ParetoRoot::Finite(g) = pareto_root(&s, 0.7).unwrap() else {
            panic!()
        };
        assert!((g * 0.7 - e_si(&s, g)).abs() < 1e-9);
        assert!((g - 1.176).abs() < 1e-3, "{g}");

        let uniform = JointSource::independent(&[0.25; 4], &[1.0]).unwrap();
        assert_eq!(pareto_root(&uniform, 2.5).unwrap(), ParetoRoot::Unbounded);
        assert!(matches!(
            pareto_root(&s, 0.3),
            Err(Error::RateBelowEntropy { .. })
        ));

        let mut rng = stream(8, DOMAIN_SOURCE, 0);
        for _ in 0..20 {
            let s = random_joint_source(&mut rng, 3, 2);
            let rate = s.conditional_entropy() + 0.1;
            if let ParetoRoot::Finite(g) = pareto_root(&s, rate).unwrap() {
                assert!((g * rate - e_si(&s, g)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn failure_bound_is_a_probability_and_decays() {
        let s = example_source();
        let b4 = failure_event_bound_si(&s, 1.0, 0.3, 4);
        let b40 = failure_event_bound_si(&s, 1.0, 0.3, 40);
        assert!(b4 <= 1.0 && b40 < b4 && b40 > 0.0);
    }
}
