//! Finite-alphabet probability models: the IID joint source `(U, V)` and the
//! discrete memoryless channel with a fixed input distribution.
//!
//! Probabilities are validated and stored in the linear domain. The base-2
//! logarithms the decoder needs are tabulated once at construction; a zero
//! probability maps to `f64::NEG_INFINITY`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::unit_f64;

/// Absolute tolerance on probability sums.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Inverse-CDF lookup over a finite distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseCdf {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl InverseCdf {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        Self {
            cumulative,
            last_positive,
        }
    }

    /// Index `i` with `cum[i-1] <= u < cum[i]`. Zero-weight entries are never
    /// returned.
    #[inline]
    pub fn index(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.last_positive)
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        self.index(unit_f64(rng.next_u64()))
    }
}

fn check_entries(what: &str, row: usize, values: &[f64]) -> Result<()> {
    for (j, &p) in values.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidModel(format!(
                "{what} row {row} column {j} is {p}; entries must be finite and non-negative"
            )));
        }
    }
    Ok(())
}

fn rectangular(what: &str, rows: &[Vec<f64>]) -> Result<usize> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || width == 0 {
        return Err(Error::InvalidModel(format!(
            "{what} must be a non-empty matrix"
        )));
    }
    if let Some(r) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::InvalidModel(format!(
            "{what} row {r} has {} entries, expected {width}",
            rows[r].len()
        )));
    }
    Ok(width)
}

/// Joint PMF `Q(u, v)` of the source symbol and the decoder's side information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceRepr", into = "SourceRepr")]
pub struct JointSource {
    num_u: usize,
    num_v: usize,
    /// Row-major `Q(u, v)`.
    joint: Vec<f64>,
    marginal_u: Vec<f64>,
    marginal_v: Vec<f64>,
    /// Row-major `Q(u | v)`.
    conditional: Vec<f64>,
    /// Row-major `log2 Q(u | v)`.
    log2_conditional: Vec<f64>,
    sampler: InverseCdf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceRepr {
    pmf: Vec<Vec<f64>>,
}

impl TryFrom<SourceRepr> for JointSource {
    type Error = Error;
    fn try_from(repr: SourceRepr) -> Result<Self> {
        JointSource::new(repr.pmf)
    }
}

impl From<JointSource> for SourceRepr {
    fn from(s: JointSource) -> Self {
        SourceRepr { pmf: s.pmf_rows() }
    }
}

impl JointSource {
    /// Builds a source from `pmf[u][v] = Q(u, v)`.
    pub fn new(pmf: Vec<Vec<f64>>) -> Result<Self> {
        let num_v = rectangular("source.pmf", &pmf)?;
        let num_u = pmf.len();
        for (u, row) in pmf.iter().enumerate() {
            check_entries("source.pmf", u, row)?;
        }
        let total: f64 = pmf.iter().flatten().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            let rows: Vec<String> = pmf
                .iter()
                .enumerate()
                .map(|(u, row)| format!("row {u} = {}", row.iter().sum::<f64>()))
                .collect();
            return Err(Error::InvalidModel(format!(
                "source.pmf sums to {total}, expected 1 ({})",
                rows.join(", ")
            )));
        }
        let joint: Vec<f64> = pmf.into_iter().flatten().collect();
        let mut marginal_u = vec![0.0; num_u];
        let mut marginal_v = vec![0.0; num_v];
        for u in 0..num_u {
            for v in 0..num_v {
                marginal_u[u] += joint[u * num_v + v];
                marginal_v[v] += joint[u * num_v + v];
            }
        }
        if let Some(v) = marginal_v.iter().position(|&q| q <= 0.0) {
            return Err(Error::InvalidModel(format!(
                "source.pmf column {v} has zero marginal Q(v)"
            )));
        }
        let conditional: Vec<f64> = (0..num_u * num_v)
            .map(|i| joint[i] / marginal_v[i % num_v])
            .collect();
        for v in 0..num_v {
            let s: f64 = (0..num_u).map(|u| conditional[u * num_v + v]).sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "conditional Q(u|v={v}) sums to {s}"
                )));
            }
        }
        let log2_conditional = conditional.iter().map(|q| q.log2()).collect();
        let sampler = InverseCdf::new(&joint);
        Ok(Self {
            num_u,
            num_v,
            joint,
            marginal_u,
            marginal_v,
            conditional,
            log2_conditional,
            sampler,
        })
    }

    /// Uniform binary `U` observed through a binary symmetric channel with
    /// crossover `eps` to give `V`.
    pub fn binary_symmetric(eps: f64) -> Result<Self> {
        Self::new(vec![
            vec![0.5 * (1.0 - eps), 0.5 * eps],
            vec![0.5 * eps, 0.5 * (1.0 - eps)],
        ])
    }

    /// `U` and `V` independent with the given marginals.
    pub fn independent(pu: &[f64], pv: &[f64]) -> Result<Self> {
        Self::new(
            pu.iter()
                .map(|a| pv.iter().map(|b| a * b).collect())
                .collect(),
        )
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_v(&self) -> usize {
        self.num_v
    }

    #[inline]
    pub fn joint(&self, u: usize, v: usize) -> f64 {
        self.joint[u * self.num_v + v]
    }

    #[inline]
    pub fn conditional(&self, u: usize, v: usize) -> f64 {
        self.conditional[u * self.num_v + v]
    }

    #[inline]
    pub fn log2_conditional(&self, u: usize, v: usize) -> f64 {
        self.log2_conditional[u * self.num_v + v]
    }

    pub fn marginal_u(&self) -> &[f64] {
        &self.marginal_u
    }

    pub fn marginal_v(&self) -> &[f64] {
        &self.marginal_v
    }

    pub fn pmf_rows(&self) -> Vec<Vec<f64>> {
        self.joint.chunks(self.num_v).map(<[f64]>::to_vec).collect()
    }

    /// True when `U` is a function of `V`.
    pub fn is_conditionally_deterministic(&self) -> bool {
        self.conditional.iter().all(|&q| q == 0.0 || q == 1.0)
    }

    pub fn conditional_entropy(&self) -> f64 {
        conditional_entropy(self)
    }

    pub fn sample_pair<R: RngCore + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        sample_pair(self, rng)
    }
}

/// `H(U|V)` in bits.
pub fn conditional_entropy(source: &JointSource) -> f64 {
    let mut h = 0.0;
    for v in 0..source.num_v {
        let qv = source.marginal_v[v];
        for u in 0..source.num_u {
            let q = source.conditional(u, v);
            if q > 0.0 {
                h -= qv * q * q.log2();
            }
        }
    }
    h
}

/// Entropy in bits of a single distribution.
pub fn entropy(pmf: &[f64]) -> f64 {
    pmf.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn sample_pair<R: RngCore + ?Sized>(source: &JointSource, rng: &mut R) -> (usize, usize) {
    let i = source.sampler.sample(rng);
    (i / source.num_v, i % source.num_v)
}

/// Discrete memoryless channel `W(y|x)` together with the input distribution
/// `beta(x)` that the tree code draws its channel symbols from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct Channel {
    num_x: usize,
    num_y: usize,
    transition: Vec<f64>,
    input_dist: Vec<f64>,
    output_dist: Vec<f64>,
    /// Row-major `log2(W(y|x) / P(y))`.
    log2_ratio: Vec<f64>,
    rows: Vec<InverseCdf>,
    input_sampler: InverseCdf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelRepr {
    #[serde(rename = "W")]
    transition: Vec<Vec<f64>>,
    beta: Vec<f64>,
}

impl TryFrom<ChannelRepr> for Channel {
    type Error = Error;
    fn try_from(repr: ChannelRepr) -> Result<Self> {
        Channel::new(repr.transition, repr.beta)
    }
}

impl From<Channel> for ChannelRepr {
    fn from(c: Channel) -> Self {
        ChannelRepr {
            transition: c.transition.chunks(c.num_y).map(<[f64]>::to_vec).collect(),
            beta: c.input_dist,
        }
    }
}

impl Channel {
    /// `transition[x][y] = W(y|x)`; `input_dist[x] = beta(x)`.
    pub fn new(transition: Vec<Vec<f64>>, input_dist: Vec<f64>) -> Result<Self> {
        let num_y = rectangular("channel.W", &transition)?;
        let num_x = transition.len();
        for (x, row) in transition.iter().enumerate() {
            check_entries("channel.W", x, row)?;
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "channel.W row {x} sums to {s}, expected 1"
                )));
            }
        }
        if input_dist.len() != num_x {
            return Err(Error::InvalidModel(format!(
                "channel.beta has {} entries, channel.W has {num_x} rows",
                input_dist.len()
            )));
        }
        check_entries("channel.beta", 0, &input_dist)?;
        let s: f64 = input_dist.iter().sum();
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "channel.beta sums to {s}, expected 1"
            )));
        }
        let mut output_dist = vec![0.0; num_y];
        for (x, row) in transition.iter().enumerate() {
            for (y, w) in row.iter().enumerate() {
                output_dist[y] += input_dist[x] * w;
            }
        }
        let s: f64 = output_dist.iter().sum();
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "channel output marginal sums to {s}, expected 1"
            )));
        }
        let rows = transition.iter().map(|r| InverseCdf::new(r)).collect();
        let flat: Vec<f64> = transition.into_iter().flatten().collect();
        let log2_ratio = flat
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let p = output_dist[i % num_y];
                if w > 0.0 && p > 0.0 {
                    (w / p).log2()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let input_sampler = InverseCdf::new(&input_dist);
        Ok(Self {
            num_x,
            num_y,
            transition: flat,
            input_dist,
            output_dist,
            log2_ratio,
            rows,
            input_sampler,
        })
    }

    /// Binary symmetric channel with crossover `p` and uniform inputs.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]], vec![0.5, 0.5])
    }

    /// Identity channel on `n` symbols with uniform inputs.
    pub fn noiseless(n: usize) -> Result<Self> {
        let w = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(w, vec![1.0 / n as f64; n])
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn num_y(&self) -> usize {
        self.num_y
    }

    #[inline]
    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.transition[x * self.num_y + y]
    }

    /// `log2(W(y|x) / P(y))`, `-inf` where `W(y|x) = 0`.
    #[inline]
    pub fn log2_ratio(&self, x: usize, y: usize) -> f64 {
        self.log2_ratio[x * self.num_y + y]
    }

    pub fn input_dist(&self) -> &[f64] {
        &self.input_dist
    }

    pub fn output_dist(&self) -> &[f64] {
        &self.output_dist
    }

    pub(crate) fn input_sampler(&self) -> &InverseCdf {
        &self.input_sampler
    }

    /// `I(X;Y)` in bits under `beta`.
    pub fn mutual_information(&self) -> f64 {
        mutual_information(self)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        sample_channel(self, x, rng)
    }
}

pub fn mutual_information(channel: &Channel) -> f64 {
    let mut i = 0.0;
    for x in 0..channel.num_x {
        for y in 0..channel.num_y {
            let w = channel.transition(x, y);
            if w > 0.0 && channel.input_dist[x] > 0.0 {
                i += channel.input_dist[x] * w * channel.log2_ratio(x, y);
            }
        }
    }
    i
}

pub fn sample_channel<R: RngCore + ?Sized>(channel: &Channel, x: usize, rng: &mut R) -> usize {
    channel.rows[x].sample(rng)
}

fn random_simplex<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    // Normalized exponentials give a uniform draw from the simplex.
    let draws: Vec<f64> = (0..n)
        .map(|_| -(1.0 - unit_f64(rng.next_u64())).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

/// Random strictly positive joint source, used by randomized property checks.
pub fn random_joint_source<R: RngCore + ?Sized>(
    rng: &mut R,
    num_u: usize,
    num_v: usize,
) -> JointSource {
    let flat = random_simplex(rng, num_u * num_v);
    JointSource::new(flat.chunks(num_v).map(<[f64]>::to_vec).collect())
        .expect("normalized positive pmf is valid")
}

/// Random channel with strictly positive transitions and input distribution.
pub fn random_channel<R: RngCore + ?Sized>(rng: &mut R, num_x: usize, num_y: usize) -> Channel {
    let rows = (0..num_x).map(|_| random_simplex(rng, num_y)).collect();
    Channel::new(rows, random_simplex(rng, num_x)).expect("normalized rows are valid")
}
