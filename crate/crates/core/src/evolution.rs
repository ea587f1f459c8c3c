//! Time evolution: one coin-then-shift step, single trajectories with a
//! freshly sampled step size at every time step, and seeded ensembles.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{
    coherence_abs, coin_density, mean_std, position_distribution, position_moments, trace_distance,
    von_neumann_entropy, CoinDensityMatrix, PositionDistribution,
};
use crate::sampler::{qexp_pmf, EntropicIndex, SeededRng};
use crate::state::{
    make_coin_state, make_gaussian_state, make_localized_state, CoinBlochParams, CoinOperator,
    GaussianInitParams, WalkerState,
};

/// Advances the walker by one time step with step size `delta ≥ 1`:
///
/// ```text
/// c↑(x, t) = C₀₀ c↑(x−Δ, t−1) + C₀₁ c↓(x−Δ, t−1)
/// c↓(x, t) = C₁₀ c↑(x+Δ, t−1) + C₁₁ c↓(x+Δ, t−1)
/// ```
///
/// The stored window grows by `delta` sites on each side.
pub fn step(state: &mut WalkerState, coin: &CoinOperator, delta: usize) {
    step_with_density(state, coin, delta);
}

/// [`step`], also returning the coin density matrix of the new state,
/// accumulated during the same pass over the amplitudes.
pub(crate) fn step_with_density(
    state: &mut WalkerState,
    coin: &CoinOperator,
    delta: usize,
) -> CoinDensityMatrix {
    assert!(delta >= 1, "step size must be positive");
    let d = delta as i64;
    // The window spans sites offset + stride·j; up moves right by Δ and down
    // moves left by Δ, so in index space up shifts by 2Δ/stride relative to down.
    let k = if state.stride == 1 {
        2 * delta
    } else {
        debug_assert_eq!(state.stride, 2);
        delta
    };
    let len = state.up.len();
    state.up.resize(len + k, C64::default());
    state.down.resize(len + k, C64::default());
    let m = coin.matrix();
    let (up, down) = (&mut state.up, &mut state.down);
    let (mut a, mut b, mut c) = (0.0, C64::default(), 0.0);
    // Descending j: each write to up[j + k] lands on an index already
    // consumed, and site j + k is final once up[j + k] is written.
    for j in (0..len).rev() {
        let (u, dn) = (up[j], down[j]);
        let new_up = m[0][0] * u + m[0][1] * dn;
        let site_down = down[j + k];
        up[j + k] = new_up;
        down[j] = m[1][0] * u + m[1][1] * dn;
        a += new_up.norm_sqr();
        c += site_down.norm_sqr();
        b += new_up * site_down.conj();
    }
    up[..k].fill(C64::default());
    for dn in &down[..k] {
        c += dn.norm_sqr();
    }
    state.offset -= d;
    state.time += 1;
    CoinDensityMatrix::new(a, b, c)
}

/// Initial walker state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialState {
    Localized { coin: CoinBlochParams },
    Gaussian { sigma2: f64, coin: CoinBlochParams },
}

impl InitialState {
    /// Localized for `σ² = 0`, Gaussian otherwise.
    pub fn with_variance(sigma2: f64, coin: CoinBlochParams) -> Self {
        if sigma2 == 0.0 {
            Self::Localized { coin }
        } else {
            Self::Gaussian { sigma2, coin }
        }
    }

    pub fn build(&self) -> Result<WalkerState> {
        match *self {
            Self::Localized { coin } => Ok(make_localized_state(make_coin_state(coin))),
            Self::Gaussian { sigma2, coin } => {
                make_gaussian_state(GaussianInitParams::new(sigma2)?, make_coin_state(coin))
            }
        }
    }
}

/// Per-step quantities a trajectory can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// Coin von Neumann entropy `S_E`.
    Entropy,
    /// `|B|`.
    Coherence,
    /// Position variance.
    Variance,
    /// Inverse participation ratio.
    Ipr,
    /// `D(ρ_c(t), ρ_c(t−1))`; zero at `t = 0`.
    TraceDistance,
}

impl Observable {
    pub const ALL: [Observable; 5] = [
        Observable::Entropy,
        Observable::Coherence,
        Observable::Variance,
        Observable::Ipr,
        Observable::TraceDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::Coherence => "coherence",
            Self::Variance => "variance",
            Self::Ipr => "ipr",
            Self::TraceDistance => "trace-distance",
        }
    }

    fn needs_position(self) -> bool {
        matches!(self, Self::Variance | Self::Ipr)
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown observable `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub coin: CoinOperator,
    pub q: EntropicIndex,
    pub total_steps: usize,
    pub initial: InitialState,
    pub base_seed: u64,
    pub ensemble_size: usize,
    pub observables: Vec<Observable>,
    /// Keep `P_T(x)` of the final state in each record.
    pub snapshot_final: bool,
}

impl WalkConfig {
    pub const DEFAULT_STEPS: usize = 1000;
    pub const DEFAULT_ENSEMBLE: usize = 50;

    /// Defaults: `T = 1000`, 50 runs, seed 0, entropy only.
    pub fn new(coin: CoinOperator, q: EntropicIndex, initial: InitialState) -> Self {
        Self {
            coin,
            q,
            total_steps: Self::DEFAULT_STEPS,
            initial,
            base_seed: 0,
            ensemble_size: Self::DEFAULT_ENSEMBLE,
            observables: vec![Observable::Entropy],
            snapshot_final: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be at least 1".into()));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables selected".into()));
        }
        Ok(())
    }
}

/// Observable series of one trajectory, each indexed by `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// `steps[t − 1]` is `Δ_t`.
    pub steps: Vec<usize>,
    pub series: BTreeMap<Observable, Vec<f64>>,
    pub final_distribution: Option<PositionDistribution>,
}

impl RunRecord {
    pub fn get(&self, obs: Observable) -> Option<&[f64]> {
        self.series.get(&obs).map(Vec::as_slice)
    }
}

struct Recorder {
    series: BTreeMap<Observable, Vec<f64>>,
    needs_position: bool,
    prev_rho: Option<CoinDensityMatrix>,
}

impl Recorder {
    fn new(observables: &[Observable], capacity: usize) -> Self {
        let series = observables
            .iter()
            .map(|&o| (o, Vec::with_capacity(capacity)))
            .collect();
        Self {
            series,
            needs_position: observables.iter().any(|o| o.needs_position()),
            prev_rho: None,
        }
    }

    fn record(&mut self, state: &WalkerState, rho: CoinDensityMatrix) {
        let (var, ipr) = if self.needs_position {
            position_moments(state)
        } else {
            (f64::NAN, f64::NAN)
        };
        for (obs, values) in self.series.iter_mut() {
            values.push(match obs {
                Observable::Entropy => von_neumann_entropy(&rho),
                Observable::Coherence => coherence_abs(&rho),
                Observable::Variance => var,
                Observable::Ipr => ipr,
                Observable::TraceDistance => self
                    .prev_rho
                    .map_or(0.0, |prev| trace_distance(&rho, &prev)),
            });
        }
        self.prev_rho = Some(rho);
    }
}

/// Runs trajectory `run_index` with seed `base_seed + run_index`.
pub fn run_trajectory(config: &WalkConfig, run_index: u64) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = SeededRng::for_run(config.base_seed, run_index);
    let mut state = config.initial.build()?;
    let total = config.total_steps;
    let mut recorder = Recorder::new(&config.observables, total + 1);
    let mut steps = Vec::with_capacity(total);
    recorder.record(&state, coin_density(&state));
    for t in 1..=total {
        let dist = qexp_pmf(config.q, t)?;
        let delta = dist.sample(&mut rng);
        let rho = step_with_density(&mut state, &config.coin, delta);
        steps.push(delta);
        recorder.record(&state, rho);
    }
    Ok(RunRecord {
        seed: rng.seed(),
        steps,
        series: recorder.series,
        final_distribution: config.snapshot_final.then(|| position_distribution(&state)),
    })
}

/// Per-`t` ensemble statistics of each recorded observable.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub runs: Vec<RunRecord>,
    pub mean: BTreeMap<Observable, Vec<f64>>,
    /// Sample standard deviation across runs (zero for a single run).
    pub std: BTreeMap<Observable, Vec<f64>>,
}

/// Runs `config.ensemble_size` independent trajectories in parallel and
/// aggregates them in run-index order, so the result does not depend on the
/// worker count.
pub fn run_ensemble(config: &WalkConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let runs = (0..config.ensemble_size as u64)
        .into_par_iter()
        .map(|i| run_trajectory(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(runs))
}

pub(crate) fn aggregate(runs: Vec<RunRecord>) -> EnsembleResult {
    let mut mean = BTreeMap::new();
    let mut std = BTreeMap::new();
    if let Some(first) = runs.first() {
        for (&obs, series) in &first.series {
            let len = series.len();
            let (m, s): (Vec<f64>, Vec<f64>) = (0..len)
                .map(|t| {
                    let column: Vec<f64> = runs.iter().map(|r| r.series[&obs][t]).collect();
                    mean_std(&column)
                })
                .unzip();
            mean.insert(obs, m);
            std.insert(obs, s);
        }
    }
    EnsembleResult { runs, mean, std }
}
