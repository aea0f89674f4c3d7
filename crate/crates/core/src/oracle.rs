//! Exhaustive reference searches for small instances.
//!
//! Both searches score paths with the decoder's own branch metric functions
//! and accumulate them in the same order, so a disagreement with the stack
//! decoder points at the search, never at the arithmetic.

use crate::decoder::{branch_metric_jsc, branch_metric_si, StepInput};
use crate::error::{Error, Result};
use crate::models::{Channel, JointSource};
use crate::treecode::{PathKey, TreeCode};

/// Largest number of leaves either search will enumerate.
pub const MAX_LEAVES: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct BestPath {
    pub path: Vec<usize>,
    pub metric: f64,
}

fn check_size(alphabet: usize, depth: usize) -> Result<()> {
    let leaves = (alphabet as u128)
        .checked_pow(depth as u32)
        .unwrap_or(u128::MAX);
    if leaves > MAX_LEAVES {
        return Err(Error::TooLarge {
            size: leaves,
            limit: MAX_LEAVES,
        });
    }
    Ok(())
}

struct Search<'a> {
    source: &'a JointSource,
    channel: Option<&'a Channel>,
    code: &'a TreeCode,
    inputs: &'a [StepInput],
    bias: f64,
    path: Vec<usize>,
    scratch: Vec<usize>,
    best: Option<BestPath>,
}

impl Search<'_> {
    fn branch(&mut self, key: &PathKey, u: usize, t: usize) -> Result<f64> {
        match (&self.inputs[t], self.channel) {
            (StepInput::Si { side_info, bits }, None) => {
                if self.code.bits(key)? != *bits {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(branch_metric_si(u, *side_info, self.source, self.bias))
            }
            (StepInput::Jsc { side_info, outputs }, Some(channel)) => {
                self.code.symbols_into(key, &mut self.scratch)?;
                Ok(branch_metric_jsc(
                    u,
                    *side_info,
                    &self.scratch,
                    outputs,
                    self.source,
                    channel,
                    self.bias,
                ))
            }
            _ => Err(Error::InvalidParameter(
                "step input does not match code mode".into(),
            )),
        }
    }

    // Children are visited in increasing symbol order and only a strictly
    // better leaf replaces the incumbent, so ties resolve to the
    // lexicographically smallest path.
    fn dfs(&mut self, key: PathKey, metric: f64) -> Result<()> {
        let t = self.path.len();
        if t == self.inputs.len() {
            if self.best.as_ref().is_none_or(|b| metric > b.metric) {
                self.best = Some(BestPath {
                    path: self.path.clone(),
                    metric,
                });
            }
            return Ok(());
        }
        for u in 0..self.source.num_u() {
            let child = self.code.child(&key, u);
            let branch = self.branch(&child, u, t)?;
            if branch == f64::NEG_INFINITY || branch.is_nan() {
                continue;
            }
            self.path.push(u);
            self.dfs(child, metric + branch)?;
            self.path.pop();
        }
        Ok(())
    }
}

/// Highest-metric path of length `inputs.len()` among those consistent with
/// the received data, or `None` if every path has zero probability.
pub fn best_path_exhaustive(
    source: &JointSource,
    channel: Option<&Channel>,
    code: &TreeCode,
    inputs: &[StepInput],
    bias: f64,
) -> Result<Option<BestPath>> {
    check_size(source.num_u(), inputs.len())?;
    let mut search = Search {
        source,
        channel,
        code,
        inputs,
        bias,
        path: Vec::with_capacity(inputs.len()),
        scratch: Vec::new(),
        best: None,
    };
    search.dfs(code.root(), 0.0)?;
    Ok(search.best)
}

/// Everything needed to replay one side-information trial.
#[derive(Clone, Copy, Debug)]
pub struct Transcript<'a> {
    pub source: &'a JointSource,
    pub code: &'a TreeCode,
    pub source_symbols: &'a [usize],
    pub side_info: &'a [usize],
    pub bias: f64,
}

/// Whether some path `w` of length `d` with `w_1 != u_1` matches the true
/// parities through depth `d` and has metric at least
/// `min_{1<=k<=d} metric(u_1^k)`.
pub fn depth_d_failure_check(transcript: &Transcript<'_>, d: usize) -> Result<bool> {
    let Transcript {
        source,
        code,
        source_symbols: u,
        side_info: v,
        bias,
    } = *transcript;
    if d == 0 || d > u.len() || u.len() != v.len() {
        return Err(Error::InvalidParameter(format!(
            "failure depth {d} needs 1 <= d <= stream length {}",
            u.len()
        )));
    }
    check_size(source.num_u(), d)?;

    let mut key = code.root();
    let mut inputs = Vec::with_capacity(d);
    let mut truth = 0.0;
    let mut threshold = f64::INFINITY;
    for t in 0..d {
        key = code.child(&key, u[t]);
        inputs.push(StepInput::Si {
            side_info: v[t],
            bits: code.bits(&key)?,
        });
        truth += branch_metric_si(u[t], v[t], source, bias);
        threshold = threshold.min(truth);
    }

    // The best false path in each first-symbol subtree decides the event.
    for first in (0..source.num_u()).filter(|&w| w != u[0]) {
        let child = code.child(&code.root(), first);
        let mut search = Search {
            source,
            channel: None,
            code,
            inputs: &inputs,
            bias,
            path: vec![first],
            scratch: Vec::new(),
            best: None,
        };
        let branch = search.branch(&child, first, 0)?;
        if branch == f64::NEG_INFINITY {
            continue;
        }
        search.dfs(child, branch)?;
        if search.best.is_some_and(|b| b.metric >= threshold) {
            return Ok(true);
        }
    }
    Ok(false)
}
