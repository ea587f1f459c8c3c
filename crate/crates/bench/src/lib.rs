//! Shared fixtures for the engine benchmarks.

use geqw_core::{
    coin_kempe, make_coin_state, make_gaussian_state, CoinBlochParams, CoinOperator,
    GaussianInitParams, WalkerState,
};

/// Kempe(π/4) coin and a Gaussian state of the given variance, balanced spinor.
pub fn gaussian_fixture(sigma2: f64) -> (CoinOperator, WalkerState) {
    let coin = coin_kempe(std::f64::consts::FRAC_PI_4).expect("valid angle");
    let spinor = make_coin_state(CoinBlochParams::balanced());
    let state = make_gaussian_state(GaussianInitParams::new(sigma2).expect("positive"), spinor)
        .expect("valid state");
    (coin, state)
}
