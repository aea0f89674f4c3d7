//! Biased stack-algorithm decoder.
//!
//! The stack holds partial paths keyed by cumulative metric. At time `t` the
//! decoder repeatedly removes the best entry, scores its `|U|` one-symbol
//! extensions and pushes the survivors, until the best entry reaches depth
//! `t`; that path is the estimate `u_1^t(t)`. Earlier symbols may be revised
//! at any later time.
//!
//! Branch metric, side information only:
//!
//! ```text
//! G + log2 Q(u|v)                                  (parities must match)
//! ```
//!
//! and over a channel with `lambda` uses per symbol:
//!
//! ```text
//! G + log2 Q(u|v) + sum_k log2( W(y_k|x_k) / P(y_k) )
//! ```
//!
//! Ties on metric go to the deeper entry, then to the lexicographically
//! smaller path.

use std::cmp::Ordering;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Channel, JointSource};
use crate::treecode::{BranchBits, CodeMode, PathKey, TreeCode};

pub const DEFAULT_MAX_POPS_PER_STEP: u64 = 1_000_000;
pub const DEFAULT_MAX_STACK: usize = 10_000_000;

/// `G + log2 Q(u|v)`; `-inf` when `Q(u|v) = 0`.
#[inline]
pub fn branch_metric_si(u: usize, v: usize, source: &JointSource, bias: f64) -> f64 {
    bias + source.log2_conditional(u, v)
}

/// `G + log2 Q(u|v) + sum_k log2(W(y_k|x_k) / P(y_k))`; `-inf` if any factor
/// is zero.
#[inline]
pub fn branch_metric_jsc(
    u: usize,
    v: usize,
    inputs: &[usize],
    outputs: &[usize],
    source: &JointSource,
    channel: &Channel,
    bias: f64,
) -> f64 {
    debug_assert_eq!(inputs.len(), outputs.len());
    let mut m = branch_metric_si(u, v, source, bias);
    for (&x, &y) in inputs.iter().zip(outputs) {
        m += channel.log2_ratio(x, y);
    }
    m
}

/// Branch scoring used by the decoder. [`StandardMetric`] is the only
/// production implementation; the trait exists so verification suites can
/// run the search against a deliberately broken metric.
pub trait BranchMetric {
    fn si(&self, u: usize, v: usize, source: &JointSource, bias: f64) -> f64;

    #[allow(clippy::too_many_arguments)]
    fn jsc(
        &self,
        u: usize,
        v: usize,
        inputs: &[usize],
        outputs: &[usize],
        source: &JointSource,
        channel: &Channel,
        bias: f64,
    ) -> f64;
}

impl<M: BranchMetric + ?Sized> BranchMetric for &M {
    #[inline]
    fn si(&self, u: usize, v: usize, source: &JointSource, bias: f64) -> f64 {
        (**self).si(u, v, source, bias)
    }

    #[inline]
    fn jsc(
        &self,
        u: usize,
        v: usize,
        inputs: &[usize],
        outputs: &[usize],
        source: &JointSource,
        channel: &Channel,
        bias: f64,
    ) -> f64 {
        (**self).jsc(u, v, inputs, outputs, source, channel, bias)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StandardMetric;

impl BranchMetric for StandardMetric {
    #[inline]
    fn si(&self, u: usize, v: usize, source: &JointSource, bias: f64) -> f64 {
        branch_metric_si(u, v, source, bias)
    }

    #[inline]
    fn jsc(
        &self,
        u: usize,
        v: usize,
        inputs: &[usize],
        outputs: &[usize],
        source: &JointSource,
        channel: &Channel,
        bias: f64,
    ) -> f64 {
        branch_metric_jsc(u, v, inputs, outputs, source, channel, bias)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub max_pops_per_step: u64,
    pub max_stack: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_pops_per_step: DEFAULT_MAX_POPS_PER_STEP,
            max_stack: DEFAULT_MAX_STACK,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoderConfig {
    pub bias: f64,
    pub caps: Caps,
}

impl DecoderConfig {
    pub fn new(bias: f64) -> Self {
        Self {
            bias,
            caps: Caps::default(),
        }
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = caps;
        self
    }
}

/// What the decoder receives at one time step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepInput {
    Si {
        side_info: usize,
        bits: BranchBits,
    },
    Jsc {
        side_info: usize,
        outputs: Vec<usize>,
    },
}

impl StepInput {
    pub fn side_info(&self) -> usize {
        match self {
            StepInput::Si { side_info, .. } | StepInput::Jsc { side_info, .. } => *side_info,
        }
    }
}

/// Work done by the decoder.
///
/// A pop removes one stack entry and evaluates the metric of each of its
/// `|U|` children; every evaluation (including a parity mismatch) is a
/// visit, so `visits_total = |U| * sum(pops_per_step)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComputationLedger {
    pub pops_per_step: Vec<u64>,
    pub visits_total: u64,
    pub cap_hit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeStatus {
    Completed,
    CapAborted,
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    symbol: u32,
    depth: u32,
}

/// Identifier of a tree node created by the decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Arena of every node the decoder ever pushed, with parent links.
#[derive(Clone, Debug, Default)]
pub struct PathArena {
    nodes: Vec<Node>,
}

impl PathArena {
    fn with_root() -> Self {
        Self {
            nodes: vec![Node {
                parent: NO_PARENT,
                symbol: u32::MAX,
                depth: 0,
            }],
        }
    }

    fn push(&mut self, parent: u32, symbol: usize, depth: u32) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            parent,
            symbol: symbol as u32,
            depth,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.nodes[id.0 as usize].depth as usize
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        let p = self.nodes[id.0 as usize].parent;
        (p != NO_PARENT).then_some(NodeId(p))
    }

    pub fn symbol(&self, id: NodeId) -> Option<usize> {
        self.parent(id)
            .map(|_| self.nodes[id.0 as usize].symbol as usize)
    }

    /// Source symbols from the root to `id`.
    pub fn path(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.depth(id));
        let mut cur = id.0;
        while self.nodes[cur as usize].parent != NO_PARENT {
            out.push(self.nodes[cur as usize].symbol as usize);
            cur = self.nodes[cur as usize].parent;
        }
        out.reverse();
        out
    }

    /// Lexicographic order of two equal-depth paths.
    fn cmp_paths(&self, a: u32, b: u32) -> Ordering {
        let (mut a, mut b) = (a, b);
        let mut last = Ordering::Equal;
        while a != b {
            let (na, nb) = (self.nodes[a as usize], self.nodes[b as usize]);
            last = na.symbol.cmp(&nb.symbol);
            a = na.parent;
            b = nb.parent;
        }
        last
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    metric: f64,
    depth: u32,
    id: u32,
    key: PathKey,
}

impl Entry {
    /// Strict priority: higher metric, then deeper, then lexicographically
    /// smaller path.
    #[inline]
    fn outranks(&self, other: &Self, arena: &PathArena) -> bool {
        if self.metric != other.metric {
            return self.metric > other.metric;
        }
        if self.depth != other.depth {
            return self.depth > other.depth;
        }
        arena.cmp_paths(self.id, other.id) == Ordering::Less
    }
}

/// Binary max-heap whose comparisons consult the path arena, so exact
/// metric ties are ordered lexicographically during sifting.
#[derive(Clone, Debug, Default)]
struct PathHeap {
    items: Vec<Entry>,
}

impl PathHeap {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn peek(&self) -> Option<&Entry> {
        self.items.first()
    }

    fn push(&mut self, entry: Entry, arena: &PathArena) {
        let mut i = self.items.len();
        self.items.push(entry);
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.items[i].outranks(&self.items[parent], arena) {
                break;
            }
            self.items.swap(i, parent);
            i = parent;
        }
    }

    fn pop(&mut self, arena: &PathArena) -> Option<Entry> {
        let last = self.items.pop()?;
        if self.items.is_empty() {
            return Some(last);
        }
        let top = std::mem::replace(&mut self.items[0], last);
        let n = self.items.len();
        let mut i = 0;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < n && self.items[l].outranks(&self.items[best], arena) {
                best = l;
            }
            if r < n && self.items[r].outranks(&self.items[best], arena) {
                best = r;
            }
            if best == i {
                break;
            }
            self.items.swap(i, best);
            i = best;
        }
        Some(top)
    }

    fn iter(&self) -> impl Iterator<Item = &Entry> {
        self.items.iter()
    }
}

/// Outcome of one decoding step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Emission {
    /// The estimate `u_1^t(t)` ends at `node` with cumulative `metric`.
    Estimate {
        node: NodeId,
        metric: f64,
    },
    Aborted,
}

/// Stack decoder over one stream. Feed it one [`StepInput`] per time step.
pub struct StackDecoder<'a, M: BranchMetric = StandardMetric> {
    source: &'a JointSource,
    channel: Option<&'a Channel>,
    code: &'a TreeCode,
    config: DecoderConfig,
    metric: M,
    arena: PathArena,
    stack: PathHeap,
    side_info: Vec<usize>,
    bits: Vec<BranchBits>,
    outputs: Vec<usize>,
    lambda: usize,
    ledger: ComputationLedger,
    status: Option<DecodeStatus>,
    scratch: Vec<usize>,
    #[cfg(test)]
    popped: Vec<f64>,
}

impl<'a> StackDecoder<'a, StandardMetric> {
    pub fn new(
        source: &'a JointSource,
        channel: Option<&'a Channel>,
        code: &'a TreeCode,
        config: DecoderConfig,
    ) -> Result<Self> {
        Self::with_metric(source, channel, code, config, StandardMetric)
    }
}

impl<'a, M: BranchMetric> StackDecoder<'a, M> {
    pub fn with_metric(
        source: &'a JointSource,
        channel: Option<&'a Channel>,
        code: &'a TreeCode,
        config: DecoderConfig,
        metric: M,
    ) -> Result<Self> {
        if config.caps.max_pops_per_step == 0 || config.caps.max_stack == 0 {
            return Err(Error::InvalidParameter(
                "decoder caps must be positive".into(),
            ));
        }
        if code.alphabet_size() != source.num_u() {
            return Err(Error::InvalidParameter(format!(
                "tree code alphabet {} does not match source alphabet {}",
                code.alphabet_size(),
                source.num_u()
            )));
        }
        let lambda = match (code.mode(), channel) {
            (CodeMode::Si { .. }, None) => 0,
            (CodeMode::Jsc { lambda, .. }, Some(_)) => *lambda as usize,
            (CodeMode::Si { .. }, Some(_)) => {
                return Err(Error::InvalidParameter(
                    "SI-mode code with a channel".into(),
                ))
            }
            (CodeMode::Jsc { .. }, None) => {
                return Err(Error::InvalidParameter(
                    "JSC-mode code without a channel".into(),
                ))
            }
        };
        let arena = PathArena::with_root();
        let mut stack = PathHeap::default();
        stack.push(
            Entry {
                metric: 0.0,
                depth: 0,
                id: 0,
                key: code.root(),
            },
            &arena,
        );
        Ok(Self {
            source,
            channel,
            code,
            config,
            metric,
            arena,
            stack,
            side_info: Vec::new(),
            bits: Vec::new(),
            outputs: Vec::new(),
            lambda,
            ledger: ComputationLedger::default(),
            status: None,
            scratch: Vec::with_capacity(lambda),
            #[cfg(test)]
            popped: Vec::new(),
        })
    }

    pub fn time(&self) -> usize {
        self.side_info.len()
    }

    pub fn ledger(&self) -> &ComputationLedger {
        &self.ledger
    }

    pub fn arena(&self) -> &PathArena {
        &self.arena
    }

    pub fn stack_len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_aborted(&self) -> bool {
        self.status == Some(DecodeStatus::CapAborted)
    }

    /// Paths and metrics of every stack entry, in no particular order.
    pub fn stack_contents(&self) -> Vec<(Vec<usize>, f64)> {
        self.stack
            .iter()
            .map(|e| (self.arena.path(NodeId(e.id)), e.metric))
            .collect()
    }

    /// Metric of the current best entry.
    pub fn top_metric(&self) -> Option<f64> {
        self.stack.peek().map(|e| e.metric)
    }

    fn expand(&mut self, parent: &Entry) {
        let depth = parent.depth + 1;
        let t = depth as usize - 1;
        let v = self.side_info[t];
        let bias = self.config.bias;
        for u in 0..self.source.num_u() {
            self.ledger.visits_total += 1;
            let key = self.code.child(&parent.key, u);
            let branch = match self.channel {
                None => {
                    let m = self.metric.si(u, v, self.source, bias);
                    if m == f64::NEG_INFINITY {
                        continue;
                    }
                    let bits = self
                        .code
                        .bits(&key)
                        .expect("SI mode checked at construction");
                    if bits != self.bits[t] {
                        continue;
                    }
                    m
                }
                Some(channel) => {
                    self.code
                        .symbols_into(&key, &mut self.scratch)
                        .expect("JSC mode checked at construction");
                    let ys = &self.outputs[t * self.lambda..(t + 1) * self.lambda];
                    self.metric
                        .jsc(u, v, &self.scratch, ys, self.source, channel, bias)
                }
            };
            if branch == f64::NEG_INFINITY || branch.is_nan() {
                continue;
            }
            let id = self.arena.push(parent.id, u, depth);
            self.stack.push(
                Entry {
                    metric: parent.metric + branch,
                    depth,
                    id,
                    key,
                },
                &self.arena,
            );
        }
    }

    fn abort(&mut self) -> Emission {
        self.ledger.cap_hit = true;
        self.status = Some(DecodeStatus::CapAborted);
        Emission::Aborted
    }

    /// Advances to the next time step and returns the new estimate.
    pub fn step(&mut self, input: StepInput) -> Result<Emission> {
        if self.is_aborted() {
            return Ok(Emission::Aborted);
        }
        match (input, self.channel) {
            (StepInput::Si { side_info, bits }, None) => {
                self.side_info.push(side_info);
                self.bits.push(bits);
            }
            (StepInput::Jsc { side_info, outputs }, Some(_)) => {
                if outputs.len() != self.lambda {
                    return Err(Error::InvalidParameter(format!(
                        "{} channel outputs, expected {}",
                        outputs.len(),
                        self.lambda
                    )));
                }
                self.side_info.push(side_info);
                self.outputs.extend(outputs);
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "step input does not match decoder mode".into(),
                ))
            }
        }
        if self.side_info[self.side_info.len() - 1] >= self.source.num_v() {
            return Err(Error::InvalidParameter(
                "side information out of range".into(),
            ));
        }
        let t = self.time() as u32;
        let mut pops = 0u64;
        let emission = loop {
            let Some(top) = self.stack.pop(&self.arena) else {
                // Only reachable when every path has zero probability.
                break self.abort();
            };
            if top.depth == t {
                let emission = Emission::Estimate {
                    node: NodeId(top.id),
                    metric: top.metric,
                };
                self.stack.push(top, &self.arena);
                break emission;
            }
            if pops == self.config.caps.max_pops_per_step {
                self.stack.push(top, &self.arena);
                break self.abort();
            }
            pops += 1;
            #[cfg(test)]
            self.popped.push(top.metric);
            self.expand(&top);
            if self.stack.len() > self.config.caps.max_stack {
                break self.abort();
            }
        };
        self.ledger.pops_per_step.push(pops);
        Ok(emission)
    }
}

/// Estimates emitted at each time, stored as nodes of a shared path arena.
#[derive(Clone, Debug, Default)]
pub struct EstimateTrace {
    arena: PathArena,
    emitted: Vec<NodeId>,
    metrics: Vec<f64>,
}

impl EstimateTrace {
    /// Number of completed steps.
    pub fn len(&self) -> usize {
        self.emitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitted.is_empty()
    }

    /// `u_1^m(m)` for `m` in `1..=len()`.
    pub fn estimate(&self, m: usize) -> Vec<usize> {
        self.arena.path(self.emitted[m - 1])
    }

    /// Cumulative metric of the estimate at time `m`.
    pub fn metric(&self, m: usize) -> f64 {
        self.metrics[m - 1]
    }
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    pub estimates: EstimateTrace,
    /// For each time `m`, the first index (1-based) where `u_1^m(m)` differs
    /// from the truth, or `None` if the estimate is correct.
    pub first_error: Vec<Option<u32>>,
    pub ledger: ComputationLedger,
    pub status: DecodeStatus,
}

/// Encodes `source_symbols` with `code`, passes the branch labels through
/// the channel when one is given, and decodes step by step.
pub fn run<R: RngCore + ?Sized>(
    source: &JointSource,
    code: &TreeCode,
    channel: Option<&Channel>,
    source_symbols: &[usize],
    side_info: &[usize],
    config: &DecoderConfig,
    channel_rng: &mut R,
) -> Result<DecodeResult> {
    run_with_metric(
        source,
        code,
        channel,
        source_symbols,
        side_info,
        config,
        channel_rng,
        StandardMetric,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn run_with_metric<R: RngCore + ?Sized, M: BranchMetric>(
    source: &JointSource,
    code: &TreeCode,
    channel: Option<&Channel>,
    source_symbols: &[usize],
    side_info: &[usize],
    config: &DecoderConfig,
    channel_rng: &mut R,
    metric: M,
) -> Result<DecodeResult> {
    if source_symbols.len() != side_info.len() {
        return Err(Error::InvalidParameter(format!(
            "source stream has {} symbols, side information has {}",
            source_symbols.len(),
            side_info.len()
        )));
    }
    let mut decoder = StackDecoder::with_metric(source, channel, code, *config, metric)?;
    let mut truth_key = code.root();
    let mut on_truth = vec![true];
    let mut emitted = Vec::with_capacity(source_symbols.len());
    let mut metrics = Vec::with_capacity(source_symbols.len());
    let mut first_error = Vec::with_capacity(source_symbols.len());
    let mut xs = Vec::new();
    let mut status = DecodeStatus::Completed;
    for (&u, &v) in source_symbols.iter().zip(side_info) {
        truth_key = code.child(&truth_key, u);
        let input = match channel {
            None => StepInput::Si {
                side_info: v,
                bits: code.bits(&truth_key)?,
            },
            Some(ch) => {
                code.symbols_into(&truth_key, &mut xs)?;
                StepInput::Jsc {
                    side_info: v,
                    outputs: xs.iter().map(|&x| ch.sample(x, channel_rng)).collect(),
                }
            }
        };
        let emission = decoder.step(input)?;
        let arena = decoder.arena();
        for id in on_truth.len()..arena.len() {
            let node = arena.nodes[id];
            let parent_ok = on_truth[node.parent as usize];
            on_truth
                .push(parent_ok && node.symbol as usize == source_symbols[node.depth as usize - 1]);
        }
        match emission {
            Emission::Estimate { node, metric } => {
                let mut cur = node.0;
                while !on_truth[cur as usize] {
                    cur = arena.nodes[cur as usize].parent;
                }
                let correct_depth = arena.nodes[cur as usize].depth;
                first_error.push((cur != node.0).then_some(correct_depth + 1));
                emitted.push(node);
                metrics.push(metric);
            }
            Emission::Aborted => {
                status = DecodeStatus::CapAborted;
                break;
            }
        }
    }
    let StackDecoder { arena, ledger, .. } = decoder;
    Ok(DecodeResult {
        estimates: EstimateTrace {
            arena,
            emitted,
            metrics,
        },
        first_error,
        ledger,
        status,
    })
}
