//! Random time-varying tree code with infinite constraint length.
//!
//! Every branch label is a pseudorandom function of the shared 128-bit seed
//! and the whole path from the root. The function is SipHash-2-4 keyed by
//! the seed, absorbing one 64-bit word per source symbol, so a node's state
//! is computed from its parent's in constant time. The branch at depth `t`
//! is finalized with a `(t, domain)` word and a counter word; the message
//! `u_1, ..., u_t, (t, domain), k` is an injective encoding of the node.
//!
//! In SI mode a branch at time `t` carries `floor(tR) - floor((t-1)R)` parity
//! bits. In JSC mode it carries `lambda` channel inputs drawn from `beta` by
//! inverse CDF on keyed uniforms.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Channel, InverseCdf};
use crate::rng::unit_f64;

const DOMAIN_PARITY: u64 = 1;
const DOMAIN_SYMBOL: u64 = 2;

/// Largest denominator used when converting a decimal rate.
pub const RATE_DENOMINATOR: u64 = 1_000_000;

/// Rate in bits per source symbol, held as an exact fraction so that the
/// per-step bit schedule has no floating-point drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    num: u64,
    den: u64,
}

impl Rate {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("rate denominator is zero".into()));
        }
        let g = num.gcd(&den);
        let rate = Self {
            num: num / g,
            den: den / g,
        };
        if rate.num > 64 * rate.den {
            return Err(Error::InvalidParameter(format!(
                "rate {} exceeds 64 bits per symbol",
                rate.as_f64()
            )));
        }
        Ok(rate)
    }

    /// Nearest fraction with denominator `RATE_DENOMINATOR`.
    pub fn from_f64(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rate {rate} must be non-negative"
            )));
        }
        Self::new(
            (rate * RATE_DENOMINATOR as f64).round() as u64,
            RATE_DENOMINATOR,
        )
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(t R)`.
    pub fn total_bits(&self, t: u64) -> u64 {
        (u128::from(t) * u128::from(self.num) / u128::from(self.den)) as u64
    }

    /// `floor(t R) - floor((t-1) R)` for `t >= 1`.
    pub fn bits_at(&self, t: u64) -> u32 {
        debug_assert!(t >= 1);
        (self.total_bits(t) - self.total_bits(t - 1)) as u32
    }
}

/// Parity bits on one branch, packed little-endian into `word`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct BranchBits {
    pub word: u64,
    pub len: u32,
}

impl BranchBits {
    pub fn bit(&self, i: u32) -> bool {
        (self.word >> i) & 1 == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CodeMode {
    Si { rate: Rate },
    Jsc { lambda: u32, input: InverseCdf },
}

impl CodeMode {
    pub fn name(&self) -> &'static str {
        match self {
            CodeMode::Si { .. } => "si",
            CodeMode::Jsc { .. } => "jsc",
        }
    }
}

/// SipHash state of a tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PathKey {
    v: [u64; 4],
    depth: u32,
}

impl PathKey {
    pub fn depth(&self) -> u32 {
        self.depth
    }
}

#[inline(always)]
fn sip_round(v: &mut [u64; 4]) {
    v[0] = v[0].wrapping_add(v[1]);
    v[1] = v[1].rotate_left(13);
    v[1] ^= v[0];
    v[0] = v[0].rotate_left(32);
    v[2] = v[2].wrapping_add(v[3]);
    v[3] = v[3].rotate_left(16);
    v[3] ^= v[2];
    v[0] = v[0].wrapping_add(v[3]);
    v[3] = v[3].rotate_left(21);
    v[3] ^= v[0];
    v[2] = v[2].wrapping_add(v[1]);
    v[1] = v[1].rotate_left(17);
    v[1] ^= v[2];
    v[2] = v[2].rotate_left(32);
}

#[inline(always)]
fn absorb(v: &mut [u64; 4], m: u64) {
    v[3] ^= m;
    sip_round(v);
    sip_round(v);
    v[0] ^= m;
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeCode {
    seed: u128,
    mode: CodeMode,
    alphabet_size: usize,
}

impl TreeCode {
    pub fn si(seed: u128, rate: Rate, alphabet_size: usize) -> Self {
        Self {
            seed,
            mode: CodeMode::Si { rate },
            alphabet_size,
        }
    }

    /// Joint source-channel code; branch symbols follow `channel.input_dist()`.
    pub fn jsc(seed: u128, lambda: u32, channel: &Channel, alphabet_size: usize) -> Self {
        Self {
            seed,
            mode: CodeMode::Jsc {
                lambda,
                input: channel.input_sampler().clone(),
            },
            alphabet_size,
        }
    }

    pub fn seed(&self) -> u128 {
        self.seed
    }

    pub fn mode(&self) -> &CodeMode {
        &self.mode
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn root(&self) -> PathKey {
        let k0 = self.seed as u64;
        let k1 = (self.seed >> 64) as u64;
        PathKey {
            v: [
                k0 ^ 0x736f_6d65_7073_6575,
                k1 ^ 0x646f_7261_6e64_6f6d,
                k0 ^ 0x6c79_6765_6e65_7261,
                k1 ^ 0x7465_6462_7974_6573,
            ],
            depth: 0,
        }
    }

    /// Extends `parent` by source symbol `u`.
    #[inline]
    pub fn child(&self, parent: &PathKey, u: usize) -> PathKey {
        let mut v = parent.v;
        absorb(&mut v, u as u64);
        PathKey {
            v,
            depth: parent.depth + 1,
        }
    }

    pub fn key_of(&self, path: &[usize]) -> PathKey {
        path.iter().fold(self.root(), |k, &u| self.child(&k, u))
    }

    #[inline]
    fn output(&self, node: &PathKey, domain: u64, counter: u64) -> u64 {
        let mut v = node.v;
        absorb(&mut v, (u64::from(node.depth) << 8) | domain);
        absorb(&mut v, counter);
        v[2] ^= 0xff;
        for _ in 0..4 {
            sip_round(&mut v);
        }
        v[0] ^ v[1] ^ v[2] ^ v[3]
    }

    /// Parity bits on the branch entering `node`.
    #[inline]
    pub fn bits(&self, node: &PathKey) -> Result<BranchBits> {
        match &self.mode {
            CodeMode::Si { rate } => {
                let len = rate.bits_at(u64::from(node.depth));
                let word = if len == 0 {
                    0
                } else {
                    let w = self.output(node, DOMAIN_PARITY, 0);
                    if len >= 64 {
                        w
                    } else {
                        w & ((1u64 << len) - 1)
                    }
                };
                Ok(BranchBits { word, len })
            }
            other => Err(Error::WrongMode {
                expected: "si",
                actual: other.name(),
            }),
        }
    }

    /// Channel inputs on the branch entering `node`; writes `lambda` symbols.
    #[inline]
    pub fn symbols_into(&self, node: &PathKey, out: &mut Vec<usize>) -> Result<()> {
        match &self.mode {
            CodeMode::Jsc { lambda, input } => {
                out.clear();
                out.extend(
                    (0..u64::from(*lambda))
                        .map(|k| input.index(unit_f64(self.output(node, DOMAIN_SYMBOL, k)))),
                );
                Ok(())
            }
            other => Err(Error::WrongMode {
                expected: "jsc",
                actual: other.name(),
            }),
        }
    }
}

fn check_path(path: &[usize], t: usize, alphabet: usize) -> Result<()> {
    if t == 0 || path.len() != t {
        return Err(Error::InvalidParameter(format!(
            "path of length {} at time {t}; need length t >= 1",
            path.len()
        )));
    }
    if let Some(&u) = path.iter().find(|&&u| u >= alphabet) {
        return Err(Error::InvalidParameter(format!(
            "symbol {u} outside alphabet of size {alphabet}"
        )));
    }
    Ok(())
}

/// Parity bits on the branch at time `t` of the path `u_1^t`.
pub fn branch_bits(code: &TreeCode, path: &[usize], t: usize) -> Result<BranchBits> {
    check_path(path, t, code.alphabet_size)?;
    code.bits(&code.key_of(path))
}

/// Channel inputs on the branch at time `t` of the path `u_1^t`.
pub fn branch_symbols(code: &TreeCode, path: &[usize], t: usize) -> Result<Vec<usize>> {
    check_path(path, t, code.alphabet_size)?;
    let mut out = Vec::new();
    code.symbols_into(&code.key_of(path), &mut out)?;
    Ok(out)
}
