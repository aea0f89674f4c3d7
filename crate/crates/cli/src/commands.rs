use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use seqbin_core::decoder::{Emission, StackDecoder};
use seqbin_core::exponents::*;
use seqbin_core::oracle::best_path_exhaustive;
use seqbin_core::rng::{code_seed, stream, DOMAIN_SOURCE};
use seqbin_core::sim::{simulate, SimReport};
use seqbin_core::{
    BiasCap, BiasInterval, DecoderConfig, ExponentReport, ParetoRoot, StepInput, TreeCode,
};

use crate::artifacts::{self, Stamp};
use crate::config::{BiasResolution, Mode, Resolved, RunConfig};
use crate::verify::{self, VerifyReport};
use crate::CliError;

pub const RHO_GRID_STEPS: usize = 100;
pub const GAMMA_GRID_STEPS: usize = 20;

/// Closed-form quantities for the configured models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theory {
    pub conditional_entropy: f64,
    pub mutual_information: Option<f64>,
    pub exponent: ExponentReport,
    /// Root of `gamma R = E_si(gamma)`; side-information mode with
    /// `R > H(U|V)` only.
    pub pareto_root: Option<ParetoRoot>,
    pub e_si_at_1: f64,
    pub comp_interval_gamma1: BiasInterval,
    pub default_bias_gamma1: f64,
    pub error_cap_at_rho_star: BiasCap,
}

pub fn theory(r: &Resolved) -> Result<Theory, CliError> {
    let s = &r.source;
    let jsc = r.channel.as_ref().zip(r.lambda);
    let (exponent, comp, cap, root) = match (jsc, r.rate) {
        (Some((ch, l)), _) => {
            let exponent = random_coding_exponent_jsc(s, ch, l)?;
            (
                exponent,
                bias_range_comp_jsc(s, ch, l, 1.0)?,
                bias_cap_error_jsc(s, ch, l, exponent.rho_star)?,
                None,
            )
        }
        (None, Some(rate)) => {
            let rate = rate.as_f64();
            let exponent = random_coding_exponent_si(s, rate)?;
            (
                exponent,
                bias_range_comp_si(s, rate, 1.0)?,
                bias_cap_error_si(s, exponent.rho_star)?,
                pareto_root(s, rate).ok(),
            )
        }
        (None, None) => unreachable!("mode checked"),
    };
    Ok(Theory {
        conditional_entropy: s.conditional_entropy(),
        mutual_information: r.channel.as_ref().map(|c| c.mutual_information()),
        exponent,
        pareto_root: root,
        e_si_at_1: e_si(s, 1.0),
        comp_interval_gamma1: comp,
        default_bias_gamma1: default_bias(s, jsc, 1.0)?,
        error_cap_at_rho_star: cap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentsSummary {
    pub config_sha256: String,
    pub master_seed: u64,
    pub mode: Mode,
    pub bias: BiasResolution,
    pub theory: Theory,
}

fn stamp(r: &Resolved) -> Stamp<'_> {
    Stamp {
        config_sha256: &r.hash,
        master_seed: r.master_seed(),
    }
}

/// Writes `functions.csv` (all nine functions on a rho grid), `bias.csv`
/// (caps and intervals on a gamma grid) and `summary.json`.
pub fn cmd_exponents(r: &Resolved, out: &Path) -> Result<ExponentsSummary, CliError> {
    let s = &r.source;
    let ch = r.channel.as_ref();
    let pu = s.marginal_u();
    let rows: Vec<Vec<Option<f64>>> = (0..=RHO_GRID_STEPS)
        .map(|i| {
            let rho = i as f64 / RHO_GRID_STEPS as f64;
            vec![
                Some(rho),
                Some(e_si(s, rho)),
                Some(f_si(s, rho)),
                Some(g_si(s, rho)),
                Some(e_s(pu, rho)),
                Some(f_s(pu, rho)),
                Some(g_s(pu, rho)),
                ch.map(|c| e0(c, rho)),
                ch.map(|c| f_ch(c, rho)),
                ch.map(|c| g_ch(c, rho)),
            ]
        })
        .collect();
    let functions = artifacts::table_csv(
        &[
            "rho", "E_si", "F_si", "G_si", "E_s", "F_s", "G_s", "E0", "F", "G",
        ],
        &rows,
        stamp(r),
    );

    let jsc = ch.zip(r.lambda);
    let mut bias_rows = Vec::with_capacity(GAMMA_GRID_STEPS);
    for i in 1..=GAMMA_GRID_STEPS {
        let gamma = i as f64 / GAMMA_GRID_STEPS as f64;
        let (cap, iv) = match (jsc, r.rate) {
            (Some((c, l)), _) => (
                bias_cap_error_jsc(s, c, l, gamma)?,
                bias_range_comp_jsc(s, c, l, gamma)?,
            ),
            (None, Some(rate)) => (
                bias_cap_error_si(s, gamma)?,
                bias_range_comp_si(s, rate.as_f64(), gamma)?,
            ),
            (None, None) => unreachable!("mode checked"),
        };
        let cap = match cap {
            BiasCap::Bounded(c) => Some(c),
            BiasCap::Unbounded => Some(f64::INFINITY),
        };
        bias_rows.push(vec![
            Some(gamma),
            cap,
            Some(iv.lower),
            Some(iv.upper),
            Some(if iv.feasible { 1.0 } else { 0.0 }),
            Some(default_bias(s, jsc, gamma)?),
        ]);
    }
    let bias = artifacts::table_csv(
        &[
            "gamma",
            "error_cap",
            "comp_lower",
            "comp_upper",
            "comp_feasible",
            "default_bias",
        ],
        &bias_rows,
        stamp(r),
    );

    let summary = ExponentsSummary {
        config_sha256: r.hash.clone(),
        master_seed: r.master_seed(),
        mode: r.config.mode,
        bias: r.bias.clone(),
        theory: theory(r)?,
    };
    artifacts::ensure_dir(out)?;
    artifacts::write(out, "functions.csv", &functions)?;
    artifacts::write(out, "bias.csv", &bias)?;
    artifacts::write(out, "summary.json", &artifacts::json(&summary))?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub config_sha256: String,
    pub master_seed: u64,
    pub config: RunConfig,
    pub bias: BiasResolution,
    pub theory: Theory,
    pub report: SimReport,
}

/// Runs the trials and writes `pe.csv`, `comp.csv` and `summary.json`.
/// Returns [`CliError::Degenerate`] after writing if every trial hit a cap.
pub fn cmd_simulate(r: &Resolved, out: &Path) -> Result<SimulateSummary, CliError> {
    let sim = r.sim_config()?;
    let report = simulate(&sim)?;
    let summary = SimulateSummary {
        config_sha256: r.hash.clone(),
        master_seed: r.master_seed(),
        config: RunConfig {
            output_dir: None,
            ..r.config.clone()
        },
        bias: r.bias.clone(),
        theory: theory(r)?,
        report,
    };
    artifacts::ensure_dir(out)?;
    artifacts::write(out, "pe.csv", &artifacts::pe_csv(&summary.report, stamp(r)))?;
    artifacts::write(
        out,
        "comp.csv",
        &artifacts::comp_csv(&summary.report, stamp(r)),
    )?;
    artifacts::write(out, "summary.json", &artifacts::json(&summary))?;
    if sim.trials > 0 && summary.report.cap_abort_count == sim.trials {
        return Err(CliError::Degenerate(sim.trials));
    }
    Ok(summary)
}

/// Runs the property suites; writes `verify.json` when `out` is given.
pub fn cmd_verify(master: u64, out: Option<&Path>) -> Result<VerifyReport, CliError> {
    let report = verify::run_all(master);
    if let Some(dir) = out {
        artifacts::ensure_dir(dir)?;
        artifacts::write(dir, "verify.json", &artifacts::json(&report))?;
    }
    if report.passed() {
        Ok(report)
    } else {
        let failed: Vec<&str> = report
            .suites
            .iter()
            .filter(|s| !s.passed())
            .map(|s| s.name.as_str())
            .collect();
        Err(CliError::VerifyFailed(failed.join(", ")))
    }
}

/// Decoder against exhaustive search on `instances` draws of the configured
/// model at the given horizon. Returns a CSV transcript; disagreements are
/// reported, not treated as errors, since they are expected whenever some
/// branch metric can be positive.
pub fn cmd_oracle(r: &Resolved, horizon: usize, instances: u64) -> Result<String, CliError> {
    let mut out = format!(
        "# config_sha256={}\n# master_seed={}\ninstance,match,decoder_metric,exhaustive_metric\n",
        r.hash,
        r.master_seed()
    );
    let master = r.master_seed();
    let cfg = DecoderConfig::new(r.bias.value).with_caps(r.config.caps);
    for i in 0..instances {
        let mut src = stream(master, DOMAIN_SOURCE, i);
        let (u, v): (Vec<usize>, Vec<usize>) =
            (0..horizon).map(|_| r.source.sample_pair(&mut src)).unzip();
        let seed = code_seed(master, i);
        let code = match (&r.channel, r.lambda, r.rate) {
            (Some(ch), Some(l), _) => TreeCode::jsc(seed, l, ch, r.source.num_u()),
            (None, _, Some(rate)) => TreeCode::si(seed, rate, r.source.num_u()),
            _ => unreachable!("mode checked"),
        };
        let mut noise = verify::channel_rng(master, i);
        let mut key = code.root();
        let mut xs = Vec::new();
        let mut inputs = Vec::with_capacity(horizon);
        for (&sym, &side_info) in u.iter().zip(&v) {
            key = code.child(&key, sym);
            inputs.push(match &r.channel {
                None => StepInput::Si {
                    side_info,
                    bits: code.bits(&key)?,
                },
                Some(ch) => {
                    code.symbols_into(&key, &mut xs)?;
                    StepInput::Jsc {
                        side_info,
                        outputs: xs.iter().map(|&x| ch.sample(x, &mut noise)).collect(),
                    }
                }
            });
        }
        let mut dec = StackDecoder::new(&r.source, r.channel.as_ref(), &code, cfg)?;
        let mut last = Emission::Aborted;
        for input in inputs.iter().cloned() {
            last = dec.step(input)?;
        }
        let best =
            best_path_exhaustive(&r.source, r.channel.as_ref(), &code, &inputs, r.bias.value)?;
        let (matched, dm) = match (last, &best) {
            (Emission::Estimate { node, metric }, Some(b)) => {
                (dec.arena().path(node) == b.path, Some(metric))
            }
            (Emission::Estimate { metric, .. }, None) => (false, Some(metric)),
            (Emission::Aborted, _) => (false, None),
        };
        let _ = writeln!(
            out,
            "{i},{},{},{}",
            u8::from(matched),
            dm.map(artifacts::num).unwrap_or_default(),
            best.map(|b| artifacts::num(b.metric)).unwrap_or_default()
        );
    }
    Ok(out)
}
