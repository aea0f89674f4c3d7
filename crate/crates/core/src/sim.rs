//! Monte-Carlo estimation of the delay-error curve and the tail of the
//! per-step computation, plus the log-linear fits used to read exponents off
//! them.
//!
//! Trial `i` draws its source from stream `(master, source, i)`, its channel
//! noise from `(master, channel, i)` and uses code seed `i mod code_count`.
//! Per-trial results are reduced with integer sums only, so pooled
//! statistics do not depend on how trials are spread across threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{run, Caps, DecodeStatus, DecoderConfig};
use crate::error::{Error, Result};
use crate::models::{Channel, JointSource};
use crate::rng::{code_seed, stream, DOMAIN_CHANNEL, DOMAIN_SOURCE};
use crate::treecode::{Rate, TreeCode};

pub const DEFAULT_DELAY_WINDOW: (usize, usize) = (8, 40);
pub const DEFAULT_COMP_WINDOW: (u64, u64) = (8, 1 << 14);
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Debug)]
pub enum CodeSpec {
    Si { rate: Rate },
    Jsc { channel: Channel, lambda: u32 },
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub source: JointSource,
    pub code: CodeSpec,
    pub bias: f64,
    pub caps: Caps,
    pub trials: u64,
    pub stream_len: usize,
    pub delays: Vec<usize>,
    pub master_seed: u64,
    /// Number of distinct code seeds; trial `i` uses seed index `i mod code_count`.
    pub code_count: u64,
    pub delay_window: (usize, usize),
    pub comp_window: (u64, u64),
}

impl SimConfig {
    /// Steps discarded at the start of every stream.
    pub fn warmup(&self) -> usize {
        self.delays.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let max_d = self.warmup();
        if self.stream_len == 0 {
            return Err(Error::InvalidParameter(
                "stream_len must be positive".into(),
            ));
        }
        if max_d >= self.stream_len {
            return Err(Error::InvalidParameter(format!(
                "largest delay {max_d} must be below stream_len {}",
                self.stream_len
            )));
        }
        if self.delays.contains(&0) {
            return Err(Error::InvalidParameter("delays must be positive".into()));
        }
        if self.code_count == 0 {
            return Err(Error::InvalidParameter(
                "seeds.count must be positive".into(),
            ));
        }
        if !self.bias.is_finite() {
            return Err(Error::InvalidParameter("bias must be finite".into()));
        }
        let (dl, dh) = self.delay_window;
        let (nl, nh) = self.comp_window;
        if dl > dh || nl == 0 || nl > nh {
            return Err(Error::InvalidParameter(
                "fit windows must be nonempty ranges".into(),
            ));
        }
        if let CodeSpec::Jsc { lambda: 0, .. } = self.code {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        Ok(())
    }

    fn tree_code(&self, trial: u64) -> TreeCode {
        let seed = code_seed(self.master_seed, trial % self.code_count);
        match &self.code {
            CodeSpec::Si { rate } => TreeCode::si(seed, *rate, self.source.num_u()),
            CodeSpec::Jsc { channel, lambda } => {
                TreeCode::jsc(seed, *lambda, channel, self.source.num_u())
            }
        }
    }

    fn channel(&self) -> Option<&Channel> {
        match &self.code {
            CodeSpec::Si { .. } => None,
            CodeSpec::Jsc { channel, .. } => Some(channel),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeRow {
    pub d: usize,
    pub trials_observed: u64,
    /// Pooled `(trial, time)` samples behind the estimate.
    pub samples: u64,
    pub error_count: u64,
    pub pe: Option<f64>,
    /// Largest per-time error frequency across sample times.
    pub pe_max_over_time: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub n: u64,
    pub ccdf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    /// Negated least-squares slope.
    pub exponent: f64,
    pub std_error: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixMean {
    pub stream_len: usize,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub stream_len: usize,
    pub warmup: usize,
    pub master_seed: u64,
    pub bias: f64,
    pub cap_abort_count: u64,
    pub pe_curve: Vec<PeRow>,
    pub comp_ccdf: Vec<CcdfPoint>,
    pub censored_steps: u64,
    pub mean_computation: Option<f64>,
    /// Mean pops per step over growing prefixes of the stream.
    pub mean_computation_by_length: Vec<PrefixMean>,
    pub visits_total: u64,
    pub fitted_delay_exponent: Option<Fit>,
    pub fitted_pareto_exponent: Option<Fit>,
    pub delay_fit_error: Option<String>,
    pub pareto_fit_error: Option<String>,
}

const PREFIX_BLOCKS: usize = 4;

#[derive(Clone, Debug, Default)]
struct Tally {
    trials_observed: u64,
    cap_aborted: u64,
    errors: Vec<u64>,
    /// `errors_at[d_index * times + (m - first_time)]`.
    errors_at: Vec<u64>,
    pops: BTreeMap<u64, u64>,
    censored: u64,
    block_sum: [u128; PREFIX_BLOCKS],
    block_steps: [u64; PREFIX_BLOCKS],
    visits_total: u64,
}

impl Tally {
    fn new(delays: usize, times: usize) -> Self {
        Self {
            errors: vec![0; delays],
            errors_at: vec![0; delays * times],
            ..Self::default()
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials_observed += other.trials_observed;
        self.cap_aborted += other.cap_aborted;
        for (a, b) in self.errors.iter_mut().zip(other.errors) {
            *a += b;
        }
        for (a, b) in self.errors_at.iter_mut().zip(other.errors_at) {
            *a += b;
        }
        for (n, c) in other.pops {
            *self.pops.entry(n).or_default() += c;
        }
        self.censored += other.censored;
        for i in 0..PREFIX_BLOCKS {
            self.block_sum[i] += other.block_sum[i];
            self.block_steps[i] += other.block_steps[i];
        }
        self.visits_total += other.visits_total;
        self
    }
}

fn block_of(t: usize, warmup: usize, stream_len: usize) -> usize {
    let span = stream_len - warmup;
    ((t - warmup) * PREFIX_BLOCKS / span).min(PREFIX_BLOCKS - 1)
}

fn run_trial(cfg: &SimConfig, trial: u64, first_time: usize, times: usize) -> Result<Tally> {
    let mut tally = Tally::new(cfg.delays.len(), times);
    let mut src_rng = stream(cfg.master_seed, DOMAIN_SOURCE, trial);
    let (u, v): (Vec<usize>, Vec<usize>) = (0..cfg.stream_len)
        .map(|_| cfg.source.sample_pair(&mut src_rng))
        .unzip();
    let code = cfg.tree_code(trial);
    let dec_cfg = DecoderConfig::new(cfg.bias).with_caps(cfg.caps);
    let mut ch_rng = stream(cfg.master_seed, DOMAIN_CHANNEL, trial);
    let result = run(
        &cfg.source,
        &code,
        cfg.channel(),
        &u,
        &v,
        &dec_cfg,
        &mut ch_rng,
    )?;

    let warmup = cfg.warmup();
    let pops = &result.ledger.pops_per_step;
    let aborted = result.status == DecodeStatus::CapAborted;
    for (i, &p) in pops.iter().enumerate().skip(warmup) {
        if aborted && i + 1 == pops.len() {
            tally.censored += 1;
        }
        *tally.pops.entry(p).or_default() += 1;
        let b = block_of(i, warmup, cfg.stream_len);
        tally.block_sum[b] += p as u128;
        tally.block_steps[b] += 1;
    }
    tally.visits_total = result.ledger.visits_total;

    if aborted {
        tally.cap_aborted = 1;
        return Ok(tally);
    }
    tally.trials_observed = 1;
    for (j, &d) in cfg.delays.iter().enumerate() {
        for k in 0..times {
            let m = first_time + k;
            if result.first_error[m - 1].is_some_and(|f| f as usize <= m - d) {
                tally.errors[j] += 1;
                tally.errors_at[j * times + k] += 1;
            }
        }
    }
    Ok(tally)
}

/// Log-spaced grid `round(2^(k/4))`, deduplicated, up to `max`.
pub fn log_grid(max: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = Vec::new();
    for k in 0.. {
        let n = (2f64.powf(k as f64 / 4.0)).round() as u64;
        if n > max {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
    }
    grid
}

/// Empirical `P(C >= n)` on [`log_grid`] from a histogram of counts.
pub fn ccdf_from_histogram(hist: &BTreeMap<u64, u64>) -> Vec<CcdfPoint> {
    let total: u64 = hist.values().sum();
    let Some((&max, _)) = hist.iter().next_back() else {
        return Vec::new();
    };
    log_grid(max)
        .into_iter()
        .map(|n| {
            let at_least: u64 = hist.range(n..).map(|(_, c)| c).sum();
            CcdfPoint {
                n,
                ccdf: at_least as f64 / total as f64,
            }
        })
        .collect()
}

fn least_squares(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            found: points.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "fit abscissae are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(Fit {
        exponent: -slope,
        std_error: (ssr / (n - 2.0) / sxx).sqrt(),
        points: points.len(),
    })
}

/// Exponent of `p(d) ~ 2^(-E d)` from points with `p > 0` and `d` in the
/// inclusive window.
pub fn fit_loglinear(points: &[(f64, f64)], window: (f64, f64)) -> Result<Fit> {
    let pts: Vec<_> = points
        .iter()
        .filter(|(d, p)| *p > 0.0 && *d >= window.0 && *d <= window.1)
        .map(|&(d, p)| (d, p.log2()))
        .collect();
    least_squares(&pts)
}

/// Tail index of `P(C >= n) ~ n^(-gamma)` from points with `n` in the
/// inclusive window.
pub fn fit_pareto(points: &[CcdfPoint], window: (u64, u64)) -> Result<Fit> {
    let pts: Vec<_> = points
        .iter()
        .filter(|p| p.ccdf > 0.0 && p.n >= window.0 && p.n <= window.1)
        .map(|p| ((p.n as f64).log2(), p.ccdf.log2()))
        .collect();
    least_squares(&pts)
}

/// Runs every trial on the current rayon pool and pools the results.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let warmup = cfg.warmup();
    let first_time = (warmup + warmup).max(1);
    let times = (cfg.stream_len + 1).saturating_sub(first_time);
    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i, first_time, times))
        .try_reduce(
            || Tally::new(cfg.delays.len(), times),
            |a, b| Ok(a.merge(b)),
        )?;
    Ok(build_report(cfg, tally, times))
}

fn build_report(cfg: &SimConfig, tally: Tally, times: usize) -> SimReport {
    let pe_curve: Vec<PeRow> = cfg
        .delays
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let samples = tally.trials_observed * times as u64;
            let per_time = &tally.errors_at[j * times..(j + 1) * times];
            let observed = tally.trials_observed as f64;
            PeRow {
                d,
                trials_observed: tally.trials_observed,
                samples,
                error_count: tally.errors[j],
                pe: (samples > 0).then(|| tally.errors[j] as f64 / samples as f64),
                pe_max_over_time: (samples > 0)
                    .then(|| per_time.iter().copied().max().unwrap_or(0) as f64 / observed),
            }
        })
        .collect();

    let comp_ccdf = ccdf_from_histogram(&tally.pops);
    let steps: u64 = tally.block_steps.iter().sum();
    let sum: u128 = tally.block_sum.iter().sum();
    let warmup = cfg.warmup();
    let span = cfg.stream_len - warmup;
    let mut mean_by_len = Vec::new();
    let (mut acc_sum, mut acc_steps) = (0u128, 0u64);
    for b in 0..PREFIX_BLOCKS {
        acc_sum += tally.block_sum[b];
        acc_steps += tally.block_steps[b];
        if acc_steps > 0 {
            mean_by_len.push(PrefixMean {
                stream_len: warmup + (span * (b + 1)).div_ceil(PREFIX_BLOCKS),
                mean: acc_sum as f64 / acc_steps as f64,
            });
        }
    }

    let pe_points: Vec<_> = pe_curve
        .iter()
        .filter_map(|r| r.pe.map(|p| (r.d as f64, p)))
        .collect();
    let window = (cfg.delay_window.0 as f64, cfg.delay_window.1 as f64);
    let delay_fit = fit_loglinear(&pe_points, window);
    let pareto_fit = fit_pareto(&comp_ccdf, cfg.comp_window);

    SimReport {
        trials: cfg.trials,
        stream_len: cfg.stream_len,
        warmup,
        master_seed: cfg.master_seed,
        bias: cfg.bias,
        cap_abort_count: tally.cap_aborted,
        pe_curve,
        comp_ccdf,
        censored_steps: tally.censored,
        mean_computation: (steps > 0).then(|| sum as f64 / steps as f64),
        mean_computation_by_length: mean_by_len,
        visits_total: tally.visits_total,
        delay_fit_error: delay_fit.as_ref().err().map(ToString::to_string),
        pareto_fit_error: pareto_fit.as_ref().err().map(ToString::to_string),
        fitted_delay_exponent: delay_fit.ok(),
        fitted_pareto_exponent: pareto_fit.ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn base(source: JointSource, rate: f64, bias: f64) -> SimConfig {
        SimConfig {
            source,
            code: CodeSpec::Si {
                rate: Rate::from_f64(rate).unwrap(),
            },
            bias,
            caps: Caps::default(),
            trials: 8,
            stream_len: 400,
            delays: (1..=20).collect(),
            master_seed: 11,
            code_count: 8,
            delay_window: DEFAULT_DELAY_WINDOW,
            comp_window: DEFAULT_COMP_WINDOW,
        }
    }

    #[test]
    fn deterministic_source_never_errs() {
        let s = JointSource::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let r = simulate(&base(s, 0.2, 0.5)).unwrap();
        assert!(r
            .pe_curve
            .iter()
            .all(|row| row.error_count == 0 && row.pe == Some(0.0)));
        assert!(r.delay_fit_error.is_some());
    }

    #[test]
    fn single_symbol_ccdf_is_step() {
        let s = JointSource::new(vec![vec![0.5, 0.5]]).unwrap();
        let r = simulate(&base(s, 0.5, 0.2)).unwrap();
        assert_eq!(r.comp_ccdf, vec![CcdfPoint { n: 1, ccdf: 1.0 }]);
        assert_eq!(r.mean_computation, Some(1.0));
    }

    #[test]
    fn high_rate_errors_vanish() {
        let s = JointSource::binary_symmetric(0.1).unwrap();
        let r = simulate(&base(s, 3.0, 0.7)).unwrap();
        assert!(r
            .pe_curve
            .iter()
            .filter(|row| row.d >= 4)
            .all(|row| row.error_count == 0));
    }

    #[test]
    fn accounting_and_parallel_invariance() {
        let s = JointSource::binary_symmetric(0.1).unwrap();
        let mut cfg = base(s, 0.7, 0.7);
        cfg.caps.max_pops_per_step = 50;
        let a = simulate(&cfg).unwrap();
        for row in &a.pe_curve {
            assert_eq!(row.trials_observed + a.cap_abort_count, cfg.trials);
            assert!(row.error_count <= row.samples);
        }
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single.install(|| simulate(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation() {
        let s = JointSource::binary_symmetric(0.1).unwrap();
        let mut cfg = base(s, 0.7, 0.7);
        cfg.delays = vec![400];
        assert!(simulate(&cfg).is_err());
        cfg.delays = vec![0, 3];
        assert!(simulate(&cfg).is_err());
        cfg.delays = vec![3];
        cfg.code_count = 0;
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn zero_trials_is_empty() {
        let s = JointSource::binary_symmetric(0.1).unwrap();
        let mut cfg = base(s, 0.7, 0.7);
        cfg.trials = 0;
        let r = simulate(&cfg).unwrap();
        assert!(r.pe_curve.iter().all(|row| row.pe.is_none()));
        assert!(r.comp_ccdf.is_empty());
        assert_eq!(r.mean_computation, None);
    }

    #[test]
    fn grid_is_log_spaced() {
        assert_eq!(log_grid(8), vec![1, 2, 3, 4, 5, 6, 7, 8]);
        let g = log_grid(1 << 14);
        assert_eq!(*g.last().unwrap(), 1 << 14);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ccdf_counts() {
        let hist = BTreeMap::from([(1, 5), (2, 3), (4, 2)]);
        let c = ccdf_from_histogram(&hist);
        assert_eq!(c[0], CcdfPoint { n: 1, ccdf: 1.0 });
        assert_eq!(c[1], CcdfPoint { n: 2, ccdf: 0.5 });
        assert_eq!(c[2], CcdfPoint { n: 3, ccdf: 0.2 });
        assert_eq!(c[3], CcdfPoint { n: 4, ccdf: 0.2 });
    }

    #[test]
    fn exact_loglinear_fit() {
        let pts: Vec<_> = (1..=50)
            .map(|d| (d as f64, 2f64.powf(-0.05 * d as f64)))
            .collect();
        let f = fit_loglinear(&pts, (8.0, 40.0)).unwrap();
        assert!((f.exponent - 0.05).abs() < 1e-12);
        assert!(f.std_error < 1e-12);
        assert_eq!(f.points, 33);
    }

    #[test]
    fn noisy_loglinear_fit() {
        let mut rng = stream(3, 0, 0);
        let pts: Vec<_> = (1..=30)
            .map(|d| {
                let noise: f64 = rng.random_range(-0.2..=0.2);
                (d as f64, 2f64.powf(-0.05 * d as f64 + noise))
            })
            .collect();
        let f = fit_loglinear(&pts, (1.0, 30.0)).unwrap();
        assert!((f.exponent - 0.05).abs() < 0.01, "{}", f.exponent);
    }

    #[test]
    fn exact_pareto_fit() {
        let pts: Vec<_> = log_grid(1 << 16)
            .into_iter()
            .map(|n| CcdfPoint {
                n,
                ccdf: (n as f64).powf(-1.2),
            })
            .collect();
        let f = fit_pareto(&pts, DEFAULT_COMP_WINDOW).unwrap();
        assert!((f.exponent - 1.2).abs() < 1e-12);
    }

    #[test]
    fn noisy_pareto_fit() {
        let mut rng = stream(4, 0, 0);
        let pts: Vec<_> = log_grid(1 << 14)
            .into_iter()
            .map(|n| {
                let noise: f64 = rng.random_range(-0.2..=0.2);
                CcdfPoint {
                    n,
                    ccdf: (n as f64).powf(-1.2) * 2f64.powf(noise),
                }
            })
            .collect();
        let f = fit_pareto(&pts, DEFAULT_COMP_WINDOW).unwrap();
        assert!((f.exponent - 1.2).abs() < 0.05, "{}", f.exponent);
    }

    #[test]
    fn too_few_points() {
        let pts = [(8.0, 0.5), (9.0, 0.4), (10.0, 0.0), (11.0, 0.3)];
        assert_eq!(
            fit_loglinear(&pts, (8.0, 40.0)),
            Err(Error::InsufficientData {
                found: 3,
                required: 4
            })
        );
    }
}
