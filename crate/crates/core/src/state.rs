//! Walker states, coin operators and the initial-state constructors.
//!
//! A walker lives on the integer line with a two-level internal coin. Its
//! state is stored as a dense window of `(c_up(x), c_down(x))` amplitude
//! pairs. Localized walkers only ever occupy sites of a single parity, so
//! their window uses a stride of two lattice sites; delocalized (Gaussian)
//! walkers use a stride of one.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

/// Absolute tolerance on the total norm of a walker state.
pub const NORM_TOLERANCE: f64 = 1e-10;

const ANGLE_SLACK: f64 = 1e-12;

/// A 2×2 unitary coin toss operator
///
/// `[[cos θ, sin θ e^{iβ}], [sin θ e^{iγ}, −cos θ e^{i(β+γ)}]]`
///
/// The matrix is materialized once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinOperator {
    theta: f64,
    beta: f64,
    gamma: f64,
    m: [[C64; 2]; 2],
}

impl CoinOperator {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Matrix elements, row-major.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.m
    }

    /// Applies the coin to a single spinor.
    #[inline]
    pub fn apply(&self, up: C64, down: C64) -> (C64, C64) {
        (
            self.m[0][0] * up + self.m[0][1] * down,
            self.m[1][0] * up + self.m[1][1] * down,
        )
    }
}

fn check_theta(theta: f64) -> Result<f64> {
    finite("theta", theta)?;
    if !(-ANGLE_SLACK..=FRAC_PI_2 + ANGLE_SLACK).contains(&theta) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            range: "[0, π/2]",
        });
    }
    Ok(theta)
}

/// General U(2) coin parameterized by `theta ∈ [0, π/2]` and the phases
/// `beta`, `gamma` (radians).
pub fn coin_general(theta: f64, beta: f64, gamma: f64) -> Result<CoinOperator> {
    check_theta(theta)?;
    finite("beta", beta)?;
    finite("gamma", gamma)?;
    let (s, c) = theta.sin_cos();
    let m = [
        [C64::new(c, 0.0), C64::from_polar(s, beta)],
        [C64::from_polar(s, gamma), -C64::from_polar(c, gamma + beta)],
    ];
    Ok(CoinOperator {
        theta,
        beta,
        gamma,
        m,
    })
}

/// The Hadamard coin, `coin_general(π/4, 0, 0)`.
pub fn coin_hadamard() -> CoinOperator {
    coin_general(PI / 4.0, 0.0, 0.0).expect("π/4 is a valid angle")
}

/// Kempe coin `[[cos θ, i sin θ], [i sin θ, cos θ]]`.
///
/// This is the β = γ = π/2 member of the general family, but the matrix is
/// built directly so no phase round-off leaks into the diagonal.
pub fn coin_kempe(theta: f64) -> Result<CoinOperator> {
    check_theta(theta)?;
    let (s, c) = theta.sin_cos();
    let m = [
        [C64::new(c, 0.0), C64::new(0.0, s)],
        [C64::new(0.0, s), C64::new(c, 0.0)],
    ];
    Ok(CoinOperator {
        theta,
        beta: FRAC_PI_2,
        gamma: FRAC_PI_2,
        m,
    })
}

/// Normalized coin spinor `(c_up, c_down)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinSpinor {
    pub up: C64,
    pub down: C64,
}

impl CoinSpinor {
    pub const UP: CoinSpinor = CoinSpinor {
        up: C64::new(1.0, 0.0),
        down: C64::new(0.0, 0.0),
    };

    pub fn new(up: C64, down: C64) -> Result<Self> {
        let n = up.norm_sqr() + down.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { up, down })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }
}

/// Bloch-sphere angles of the initial coin state.
///
/// `phi` enters the spinor as `e^{iφ/2}`, i.e. the relative phase between
/// the two components is `φ/2`. Use [`CoinBlochParams::from_relative_phase`]
/// when a relation is expressed in terms of the relative phase itself
/// (such as [`orthey_phase`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinBlochParams {
    pub omega: f64,
    pub phi: f64,
}

impl CoinBlochParams {
    pub fn new(omega: f64, phi: f64) -> Result<Self> {
        finite("omega", omega)?;
        finite("phi", phi)?;
        if !(-ANGLE_SLACK..=PI + ANGLE_SLACK).contains(&omega) {
            return Err(Error::OutOfRange {
                name: "omega",
                value: omega,
                range: "[0, π]",
            });
        }
        Ok(Self { omega, phi })
    }

    /// Parameters whose spinor has relative phase `relative` between the
    /// down and up components: `cos(Ω/2)|↑⟩ + e^{i·relative} sin(Ω/2)|↓⟩`.
    pub fn from_relative_phase(omega: f64, relative: f64) -> Result<Self> {
        Self::new(omega, 2.0 * relative)
    }

    /// `(|↑⟩ + |↓⟩)/√2`.
    pub fn balanced() -> Self {
        Self {
            omega: FRAC_PI_2,
            phi: 0.0,
        }
    }
}

/// `cos(Ω/2)|↑⟩ + e^{iφ/2} sin(Ω/2)|↓⟩`.
pub fn make_coin_state(params: CoinBlochParams) -> CoinSpinor {
    let (s, c) = (params.omega / 2.0).sin_cos();
    CoinSpinor {
        up: C64::new(c, 0.0),
        down: C64::from_polar(s, params.phi / 2.0),
    }
}

/// Relative coin phase `φ = arccos(−cot Ω)` for which a Hadamard walk from
/// a broad Gaussian wave packet becomes maximally entangled.
///
/// The returned angle is the relative phase between the `|↓⟩` and `|↑⟩`
/// amplitudes. Pass it through [`CoinBlochParams::from_relative_phase`];
/// feeding it directly as the Bloch `phi` would halve it.
pub fn orthey_phase(omega: f64) -> Result<f64> {
    finite("omega", omega)?;
    let cot = omega.cos() / omega.sin();
    if !cot.is_finite() || cot.abs() > 1.0 + ANGLE_SLACK {
        return Err(Error::PhaseDomain { cot });
    }
    Ok((-cot).clamp(-1.0, 1.0).acos())
}

/// Gaussian position profile `N e^{−x²/4σ²}` truncated to
/// `x ∈ [−truncation_radius, truncation_radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianInitParams {
    pub sigma2: f64,
    pub truncation_radius: u64,
}

impl GaussianInitParams {
    /// Default truncation at `⌈6σ⌉`; the discarded tail carries < 1e-8 of
    /// the probability and is absorbed by renormalization.
    pub fn new(sigma2: f64) -> Result<Self> {
        finite("sigma2", sigma2)?;
        if sigma2 <= 0.0 {
            return Err(Error::OutOfRange {
                name: "sigma2",
                value: sigma2,
                range: "(0, ∞)",
            });
        }
        Ok(Self {
            sigma2,
            truncation_radius: (6.0 * sigma2.sqrt()).ceil() as u64,
        })
    }
}

/// Walker amplitudes on a dense window of lattice sites.
///
/// Stored index `j` corresponds to site `offset + stride·j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    pub(crate) offset: i64,
    pub(crate) stride: i64,
    pub(crate) up: Vec<C64>,
    pub(crate) down: Vec<C64>,
    pub(crate) time: u64,
}

impl WalkerState {
    /// Builds a state from raw amplitudes on consecutive sites starting at
    /// `offset`. The amplitudes must be normalized.
    pub fn from_amplitudes(offset: i64, up: Vec<C64>, down: Vec<C64>) -> Result<Self> {
        Self::with_stride(offset, 1, up, down)
    }

    pub(crate) fn with_stride(
        offset: i64,
        stride: i64,
        up: Vec<C64>,
        down: Vec<C64>,
    ) -> Result<Self> {
        if up.len() != down.len() || up.is_empty() {
            return Err(Error::Config(format!(
                "amplitude vectors must be non-empty and equally long ({} vs {})",
                up.len(),
                down.len()
            )));
        }
        let state = Self {
            offset,
            stride,
            up,
            down,
            time: 0,
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
        Ok(state)
    }

    /// Leftmost stored lattice site.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Lattice spacing between consecutive stored entries (1 or 2).
    pub fn stride(&self) -> i64 {
        self.stride
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn up(&self) -> &[C64] {
        &self.up
    }

    pub fn down(&self) -> &[C64] {
        &self.down
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    /// Lattice site of stored entry `j`.
    #[inline]
    pub fn site(&self, j: usize) -> i64 {
        self.offset + self.stride * j as i64
    }

    /// Rightmost stored lattice site.
    pub fn last_site(&self) -> i64 {
        self.site(self.len() - 1)
    }

    /// Amplitudes at lattice site `x` (zero outside the stored window).
    pub fn amplitude(&self, x: i64) -> (C64, C64) {
        let rel = x - self.offset;
        if rel < 0 || rel % self.stride != 0 {
            return (C64::default(), C64::default());
        }
        let j = (rel / self.stride) as usize;
        match (self.up.get(j), self.down.get(j)) {
            (Some(&u), Some(&d)) => (u, d),
            _ => (C64::default(), C64::default()),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up
            .iter()
            .zip(&self.down)
            .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
            .sum()
    }

    /// `(site, c_up, c_down)` for every stored entry.
    pub fn sites(&self) -> impl Iterator<Item = (i64, C64, C64)> + '_ {
        self.up
            .iter()
            .zip(&self.down)
            .enumerate()
            .map(|(j, (&u, &d))| (self.site(j), u, d))
    }
}

/// Walker at the origin with the given coin state.
pub fn make_localized_state(coin: CoinSpinor) -> WalkerState {
    WalkerState {
        offset: 0,
        stride: 2,
        up: vec![coin.up],
        down: vec![coin.down],
        time: 0,
    }
}

/// Gaussian wave packet `N e^{−x²/4σ²}` in position times the coin spinor.
pub fn make_gaussian_state(params: GaussianInitParams, coin: CoinSpinor) -> Result<WalkerState> {
    finite("sigma2", params.sigma2)?;
    if params.sigma2 <= 0.0 {
        return Err(Error::OutOfRange {
            name: "sigma2",
            value: params.sigma2,
            range: "(0, ∞); use a localized state for σ² = 0",
        });
    }
    let sigma = params.sigma2.sqrt();
    if (params.truncation_radius as f64) < 6.0 * sigma - ANGLE_SLACK {
        return Err(Error::OutOfRange {
            name: "truncation_radius",
            value: params.truncation_radius as f64,
            range: "[6σ, ∞)",
        });
    }
    let r = params.truncation_radius as i64;
    let profile: Vec<f64> = (-r..=r)
        .map(|x| (-((x * x) as f64) / (4.0 * params.sigma2)).exp())
        .collect();
    let norm = profile.iter().map(|g| g * g).sum::<f64>().sqrt();
    let coin_norm = coin.norm_sqr().sqrt();
    let up = profile
        .iter()
        .map(|g| coin.up * (g / norm / coin_norm))
        .collect();
    let down = profile
        .iter()
        .map(|g| coin.down * (g / norm / coin_norm))
        .collect();
    WalkerState::with_stride(-r, 1, up, down)
}
