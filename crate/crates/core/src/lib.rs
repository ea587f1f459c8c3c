//! Simulation engine for one-dimensional coined discrete-time quantum walks
//! whose step size is redrawn every time step from a discretized
//! q-exponential distribution (the generalized elephant quantum walk).
//!
//! * [`state`]: walker states, coin operators and initial-state builders.
//! * [`sampler`]: the step-size distribution and its seeded sampler.
//! * [`evolution`]: single steps, trajectories and ensembles.
//! * [`observables`]: entropy, coherence, variance, IPR, trace distance and fits.
//! * [`experiments`]: parameter sweeps, config files and CSV/JSON output.

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod observables;
pub mod sampler;
pub mod state;

pub use error::{Error, Result};
pub use evolution::{
    run_ensemble, run_trajectory, step, EnsembleResult, InitialState, Observable, RunRecord,
    WalkConfig,
};
pub use observables::{
    coherence_abs, coin_density, fit_power_law, fit_power_law_points, ipr, position_distribution,
    position_variance, time_average, trace_distance, von_neumann_entropy, CoinDensityMatrix,
    PositionDistribution, PowerLawFit, QuasiStationaryWindow,
};
pub use sampler::{qexp_pmf, sample_step, EntropicIndex, SeededRng, StepDistribution};
pub use state::{
    coin_general, coin_hadamard, coin_kempe, make_coin_state, make_gaussian_state,
    make_localized_state, orthey_phase, CoinBlochParams, CoinOperator, CoinSpinor,
    GaussianInitParams, WalkerState,
};
