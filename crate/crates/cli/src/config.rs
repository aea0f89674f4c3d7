//! Run configuration: a TOML document with a fixed schema.
//!
//! ```toml
//! mode = "si"                # or "jsc"
//! rate = 0.7                 # si only, bits per source symbol
//! # lambda = 2               # jsc only, channel uses per source symbol
//! bias = 0.7                 # or "auto-error:<rho>" / "auto-comp:<gamma>"
//! trials = 20
//! stream_len = 10000
//! delays = [1, 2, 3]
//! output_dir = "runs/example2"
//!
//! [source]
//! pmf = [[0.45, 0.05], [0.05, 0.45]]   # pmf[u][v] = Q(u, v)
//!
//! [channel]                  # jsc only
//! W = [[0.9, 0.1], [0.1, 0.9]]          # W[x][y]
//! beta = [0.5, 0.5]
//!
//! [seeds]
//! master = 1
//! count = 20                 # distinct code seeds, defaults to trials
//!
//! [caps]                     # optional
//! max_pops_per_step = 1000000
//! max_stack = 10000000
//!
//! [fit]                      # optional
//! delay_window = [8, 40]
//! comp_window = [8, 16384]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use seqbin_core::exponents::{
    bias_cap_error_jsc, bias_cap_error_si, bias_range_comp_jsc, bias_range_comp_si, default_bias,
};
use seqbin_core::sim::{CodeSpec, SimConfig, DEFAULT_COMP_WINDOW, DEFAULT_DELAY_WINDOW};
use seqbin_core::{BiasCap, BiasInterval, Caps, Channel, JointSource, Rate};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Si,
    Jsc,
}

/// How the decoder bias is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasSpec {
    Fixed(f64),
    /// The largest bias that keeps the delay exponent at `rho`.
    AutoError(f64),
    /// The bias balancing the delay exponent and the `gamma`-th moment of
    /// computation.
    AutoComp(f64),
}

impl fmt::Display for BiasSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BiasSpec::Fixed(g) => write!(f, "{g}"),
            BiasSpec::AutoError(rho) => write!(f, "auto-error:{rho}"),
            BiasSpec::AutoComp(gamma) => write!(f, "auto-comp:{gamma}"),
        }
    }
}

impl FromStr for BiasSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bias parameter {v:?} is not a number"))
        };
        if let Some(v) = s.strip_prefix("auto-error:") {
            Ok(BiasSpec::AutoError(parse(v)?))
        } else if let Some(v) = s.strip_prefix("auto-comp:") {
            Ok(BiasSpec::AutoComp(parse(v)?))
        } else {
            Err(format!(
                "bias {s:?} must be a number, \"auto-error:<rho>\" or \"auto-comp:<gamma>\""
            ))
        }
    }
}

impl Serialize for BiasSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            BiasSpec::Fixed(g) => serializer.serialize_f64(*g),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for BiasSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(g) => Ok(BiasSpec::Fixed(g)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub pmf: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(rename = "W")]
    pub transition: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub delay_window: [usize; 2],
    pub comp_window: [u64; 2],
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            delay_window: [DEFAULT_DELAY_WINDOW.0, DEFAULT_DELAY_WINDOW.1],
            comp_window: [DEFAULT_COMP_WINDOW.0, DEFAULT_COMP_WINDOW.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u32>,
    pub bias: BiasSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub source: SourceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSection>,
    pub seeds: Seeds,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub fit: FitSection,
}

/// What the configured bias resolved to, echoed into artifacts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasResolution {
    pub spec: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_cap: Option<BiasCap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comp_interval: Option<BiasInterval>,
}

/// A validated configuration with its models built.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub source: JointSource,
    pub channel: Option<Channel>,
    pub rate: Option<Rate>,
    pub lambda: Option<u32>,
    pub bias: BiasResolution,
    pub hash: String,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output_dir: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let source =
            JointSource::new(self.source.pmf.clone()).map_err(|e| config_err(e.to_string()))?;
        let (rate, lambda, channel) = match self.mode {
            Mode::Si => {
                if self.lambda.is_some() || self.channel.is_some() {
                    return Err(config_err(
                        "mode \"si\" takes `rate` and no `lambda` or [channel]",
                    ));
                }
                let r = self
                    .rate
                    .ok_or_else(|| config_err("mode \"si\" requires `rate`"))?;
                let rate = Rate::from_f64(r).map_err(|e| config_err(e.to_string()))?;
                (Some(rate), None, None)
            }
            Mode::Jsc => {
                if self.rate.is_some() {
                    return Err(config_err("mode \"jsc\" takes `lambda`, not `rate`"));
                }
                let lambda = self
                    .lambda
                    .ok_or_else(|| config_err("mode \"jsc\" requires `lambda`"))?;
                if lambda == 0 {
                    return Err(config_err("`lambda` must be a positive integer"));
                }
                let ch = self
                    .channel
                    .as_ref()
                    .ok_or_else(|| config_err("mode \"jsc\" requires a [channel] table"))?;
                let channel = Channel::new(ch.transition.clone(), ch.beta.clone())
                    .map_err(|e| config_err(e.to_string()))?;
                (None, Some(lambda), Some(channel))
            }
        };
        if self.caps.max_pops_per_step == 0 || self.caps.max_stack == 0 {
            return Err(config_err("caps must be positive"));
        }
        if self.seeds.count == Some(0) {
            return Err(config_err("seeds.count must be positive"));
        }
        let jsc = channel.as_ref().zip(lambda);
        let bias = resolve_bias(self.bias, &source, jsc, rate)?;
        let hash = self.hash();
        Ok(Resolved {
            config: self,
            source,
            channel,
            rate,
            lambda,
            bias,
            hash,
        })
    }
}

fn resolve_bias(
    spec: BiasSpec,
    source: &JointSource,
    jsc: Option<(&Channel, u32)>,
    rate: Option<Rate>,
) -> Result<BiasResolution, CliError> {
    let core = |e: seqbin_core::Error| config_err(format!("bias {spec}: {e}"));
    let comp_interval = |gamma: f64| -> Result<BiasInterval, CliError> {
        match (jsc, rate) {
            (Some((ch, l)), _) => bias_range_comp_jsc(source, ch, l, gamma).map_err(core),
            (None, Some(r)) => bias_range_comp_si(source, r.as_f64(), gamma).map_err(core),
            (None, None) => unreachable!("mode checked"),
        }
    };
    let resolution = match spec {
        BiasSpec::Fixed(value) => {
            if !value.is_finite() {
                return Err(config_err("bias must be finite"));
            }
            BiasResolution {
                spec: spec.to_string(),
                value,
                error_cap: None,
                comp_interval: None,
            }
        }
        BiasSpec::AutoError(rho) => {
            let cap = match jsc {
                None => bias_cap_error_si(source, rho),
                Some((ch, l)) => bias_cap_error_jsc(source, ch, l, rho),
            }
            .map_err(core)?;
            let BiasCap::Bounded(value) = cap else {
                return Err(config_err(
                    "auto-error:0 leaves the bias unbounded; use rho in (0, 1]",
                ));
            };
            BiasResolution {
                spec: spec.to_string(),
                value,
                error_cap: Some(cap),
                comp_interval: None,
            }
        }
        BiasSpec::AutoComp(gamma) => {
            let value = default_bias(source, jsc, gamma).map_err(core)?;
            BiasResolution {
                spec: spec.to_string(),
                value,
                error_cap: Some(BiasCap::Bounded(value)),
                comp_interval: Some(comp_interval(gamma)?),
            }
        }
    };
    Ok(resolution)
}

impl Resolved {
    pub fn master_seed(&self) -> u64 {
        self.config.seeds.master
    }

    /// Simulation parameters; fails if the simulation fields are missing.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let c = &self.config;
        let trials = c
            .trials
            .ok_or_else(|| config_err("simulate requires `trials`"))?;
        let stream_len = c
            .stream_len
            .ok_or_else(|| config_err("simulate requires `stream_len`"))?;
        let delays = c
            .delays
            .clone()
            .ok_or_else(|| config_err("simulate requires `delays`"))?;
        let code = match (&self.channel, self.rate, self.lambda) {
            (Some(ch), _, Some(lambda)) => CodeSpec::Jsc {
                channel: ch.clone(),
                lambda,
            },
            (None, Some(rate), _) => CodeSpec::Si { rate },
            _ => unreachable!("mode checked"),
        };
        let sim = SimConfig {
            source: self.source.clone(),
            code,
            bias: self.bias.value,
            caps: c.caps,
            trials,
            stream_len,
            delays,
            master_seed: c.seeds.master,
            code_count: c.seeds.count.unwrap_or(trials.max(1)),
            delay_window: (c.fit.delay_window[0], c.fit.delay_window[1]),
            comp_window: (c.fit.comp_window[0], c.fit.comp_window[1]),
        };
        sim.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(sim)
    }
}
