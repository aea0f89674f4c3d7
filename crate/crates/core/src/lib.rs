//! Streaming lossless source coding with decoder side information.
//!
//! The encoder bins the source sequentially with a random, time-varying tree
//! code of infinite constraint length; the decoder runs a biased stack
//! algorithm over the tree, using the side information in its branch metric.
//! The same machinery covers joint source-channel coding over a discrete
//! memoryless channel, where branches carry channel inputs instead of parity
//! bits.
//!
//! - [`models`]: joint source and channel probability models, sampling.
//! - [`exponents`]: Gallager-style functions, delay exponents, bias ranges.
//! - [`treecode`]: seed-keyed parity and channel-symbol generation.
//! - [`decoder`]: the stack decoder and its computation ledger.
//! - [`oracle`]: exhaustive reference searches for small instances.
//! - [`sim`]: Monte-Carlo estimation of `P_e(d)` and the computation tail.

pub mod decoder;
pub mod error;
pub mod exponents;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod treecode;

pub use decoder::{
    branch_metric_jsc, branch_metric_si, BranchMetric, Caps, ComputationLedger, DecodeResult,
    DecodeStatus, DecoderConfig, StackDecoder, StandardMetric, StepInput,
};
pub use error::{Error, Result};
pub use exponents::{BiasCap, BiasInterval, ExponentReport, ParetoRoot};
pub use models::{Channel, JointSource};
pub use sim::{CodeSpec, SimConfig, SimReport};
pub use treecode::{CodeMode, PathKey, Rate, TreeCode};
