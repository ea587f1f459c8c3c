//! Discretized q-exponential step-size distribution and its sampler.
//!
//! At time step `t` the step size `Δ ∈ {1, …, t}` is drawn with weight
//! `[1 − (1 − q)Δ]^{1/(1−q)}` (zero outside the support), `e^{−Δ}` at
//! `q = 1`, and uniformly in the `q → ∞` limit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Smallest supported entropic index; at `q = 1/2` only unit steps remain.
pub const MIN_Q: f64 = 0.5;

/// The entropic index `q` of the step distribution, including the `q → ∞`
/// (uniform, elephant walk) limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropicIndex {
    Finite(f64),
    Infinite,
}

impl EntropicIndex {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < MIN_Q {
            return Err(Error::InvalidQ(q));
        }
        Ok(if q == f64::INFINITY {
            Self::Infinite
        } else {
            Self::Finite(q)
        })
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::Finite(q) => q,
            Self::Infinite => f64::INFINITY,
        }
    }

    /// True when every draw is `Δ = 1` (the standard walk).
    pub fn is_deterministic(self) -> bool {
        matches!(self, Self::Finite(q) if q <= MIN_Q)
    }
}

impl fmt::Display for EntropicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(q) => write!(f, "{q}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for EntropicIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("invalid q `{s}`: {e}")))
                .and_then(Self::new),
        }
    }
}

impl Serialize for EntropicIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(q) => serializer.serialize_f64(*q),
            Self::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for EntropicIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;

        impl de::Visitor<'_> for Visitor {
            type Value = EntropicIndex;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number ≥ 0.5 or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                EntropicIndex::new(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// Deterministic per-trajectory random source.
///
/// ChaCha8 seeded through `seed_from_u64`; the stream is identical on every
/// platform. Trajectory `i` of an ensemble uses seed `base_seed + i`
/// (wrapping).
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_run(base_seed: u64, run_index: u64) -> Self {
        Self::new(base_seed.wrapping_add(run_index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

/// Normalized step-size distribution at one time step.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    q: EntropicIndex,
    t: usize,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    tau: f64,
}

impl StepDistribution {
    pub fn q(&self) -> EntropicIndex {
        self.q
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Normalization factor: reciprocal of the raw weight sum.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `pmf()[k]` is `Pr(Δ = k + 1)`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, delta: usize) -> f64 {
        if delta == 0 {
            0.0
        } else {
            self.pmf.get(delta - 1).copied().unwrap_or(0.0)
        }
    }

    /// Inverse-CDF draw of a step size in `{1, …, t}`.
    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        if self.cdf.len() == 1 {
            // Consume a draw anyway so streams stay aligned across q.
            rng.uniform();
            return 1;
        }
        let u = rng.uniform();
        self.cdf.partition_point(|&c| c <= u) + 1
    }
}

/// Log of the unnormalized weight of step `delta`; `None` outside the support.
fn log_weight(q: f64, delta: f64) -> Option<f64> {
    if q == 1.0 {
        return Some(-delta);
    }
    let x = (q - 1.0) * delta;
    (x > -1.0).then(|| x.ln_1p() / (1.0 - q))
}

/// Step-size distribution at time step `t ≥ 1`.
pub fn qexp_pmf(q: EntropicIndex, t: usize) -> Result<StepDistribution> {
    if t == 0 {
        return Err(Error::ZeroTime);
    }
    let (pmf, tau) = match q {
        EntropicIndex::Infinite => (vec![1.0 / t as f64; t], 1.0 / t as f64),
        EntropicIndex::Finite(qv) => {
            if qv.is_nan() || qv < MIN_Q {
                return Err(Error::InvalidQ(qv));
            }
            let logs: Vec<Option<f64>> = (1..=t).map(|d| log_weight(qv, d as f64)).collect();
            // Weights are non-increasing, so the Δ = 1 term carries the max.
            let max = logs[0].expect("Δ = 1 always lies in the support");
            let mut pmf: Vec<f64> = logs
                .iter()
                .map(|l| l.map_or(0.0, |l| (l - max).exp()))
                .collect();
            let sum: f64 = pmf.iter().sum();
            pmf.iter_mut().for_each(|w| *w /= sum);
            (pmf, (-max).exp() / sum)
        }
    };
    let mut cdf = Vec::with_capacity(t);
    let mut acc = 0.0;
    for &p in &pmf {
        acc += p;
        cdf.push(acc);
    }
    // Pin the tail to exactly 1 from the last supported step on so that
    // zero-weight steps can never be drawn.
    let last = pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    cdf[last..].iter_mut().for_each(|c| *c = 1.0);
    Ok(StepDistribution {
        q,
        t,
        pmf,
        cdf,
        tau,
    })
}

/// Draws one step size for time step `t`.
pub fn sample_step(dist: &StepDistribution, rng: &mut SeededRng) -> usize {
    dist.sample(rng)
}
