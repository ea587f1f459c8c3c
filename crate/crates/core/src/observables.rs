//! Coin- and position-space observables of a walker state, plus the
//! series statistics used downstream (power-law fits, time averages).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::WalkerState;

/// Reduced coin density matrix `[[a, b], [b*, c]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinDensityMatrix {
    pub a: f64,
    pub b: C64,
    pub c: f64,
}

impl CoinDensityMatrix {
    pub fn new(a: f64, b: C64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Eigenvalues `(λ₊, λ₋)` from the closed form
    /// `λ± = ½(1 ± √(1 − 4(AC − |B|²)))`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let trace = self.a + self.c;
        let det = self.a * self.c - self.b.norm_sqr();
        let mut radicand = trace * trace - 4.0 * det;
        if radicand < 0.0 {
            debug_assert!(radicand > -1e-12, "non-Hermitian radicand {radicand}");
            radicand = 0.0;
        }
        let root = radicand.sqrt();
        ((trace + root) / 2.0, (trace - root) / 2.0)
    }
}

/// Traces out position: `A = Σ|c↑|²`, `B = Σ c↑ c↓*`, `C = Σ|c↓|²`.
pub fn coin_density(state: &WalkerState) -> CoinDensityMatrix {
    let (mut a, mut b, mut c) = (0.0, C64::default(), 0.0);
    for (u, d) in state.up().iter().zip(state.down()) {
        a += u.norm_sqr();
        c += d.norm_sqr();
        b += u * d.conj();
    }
    CoinDensityMatrix { a, b, c }
}

#[inline]
fn entropy_term(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        -lambda * lambda.log2()
    }
}

/// Base-2 von Neumann entropy of the coin, in `[0, 1]`.
pub fn von_neumann_entropy(rho: &CoinDensityMatrix) -> f64 {
    let (lp, lm) = rho.eigenvalues();
    (entropy_term(lp) + entropy_term(lm)).clamp(0.0, 1.0)
}

/// `|B|`, the magnitude of the coin coherence.
pub fn coherence_abs(rho: &CoinDensityMatrix) -> f64 {
    rho.b.norm()
}

/// `D(ρ, σ) = ½‖ρ − σ‖₁` between two coin density matrices.
pub fn trace_distance(r1: &CoinDensityMatrix, r2: &CoinDensityMatrix) -> f64 {
    let da = r1.a - r2.a;
    let dc = r1.c - r2.c;
    let db = r1.b - r2.b;
    let mean = (da + dc) / 2.0;
    let half_gap = ((da - dc) / 2.0).hypot(db.norm());
    ((mean + half_gap).abs() + (mean - half_gap).abs()) / 2.0
}

/// Position probability distribution on a strided window of sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDistribution {
    pub offset: i64,
    pub stride: i64,
    pub probs: Vec<f64>,
}

impl PositionDistribution {
    /// Distribution over consecutive sites starting at `offset`.
    pub fn contiguous(offset: i64, probs: Vec<f64>) -> Self {
        Self {
            offset,
            stride: 1,
            probs,
        }
    }

    pub fn site(&self, j: usize) -> i64 {
        self.offset + self.stride * j as i64
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| (self.site(j), p))
    }

    pub fn prob_at(&self, x: i64) -> f64 {
        let rel = x - self.offset;
        if rel < 0 || rel % self.stride != 0 {
            return 0.0;
        }
        self.probs
            .get((rel / self.stride) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `P(x) = |c↑(x)|² + |c↓(x)|²`.
pub fn position_distribution(state: &WalkerState) -> PositionDistribution {
    PositionDistribution {
        offset: state.offset(),
        stride: state.stride(),
        probs: state
            .up()
            .iter()
            .zip(state.down())
            .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
            .collect(),
    }
}

/// `Σ x² P − (Σ x P)²`.
pub fn position_variance(dist: &PositionDistribution) -> f64 {
    let (m1, m2) = dist.iter().fold((0.0, 0.0), |(m1, m2), (x, p)| {
        let x = x as f64;
        (m1 + x * p, m2 + x * x * p)
    });
    (m2 - m1 * m1).max(0.0)
}

/// Inverse participation ratio `(Σ P²)⁻¹`.
pub fn ipr(dist: &PositionDistribution) -> f64 {
    1.0 / dist.probs.iter().map(|p| p * p).sum::<f64>()
}

/// Variance and IPR of the position distribution in a single pass over the
/// amplitudes, without materializing `P(x)`.
pub(crate) fn position_moments(state: &WalkerState) -> (f64, f64) {
    let (mut m1, mut m2, mut p2) = (0.0, 0.0, 0.0);
    let mut x = state.offset() as f64;
    let stride = state.stride() as f64;
    for (u, d) in state.up().iter().zip(state.down()) {
        let p = u.norm_sqr() + d.norm_sqr();
        m1 += x * p;
        m2 += x * x * p;
        p2 += p * p;
        x += stride;
    }
    ((m2 - m1 * m1).max(0.0), 1.0 / p2)
}

/// Least-squares fit of `log y = exponent · log t + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (usize, usize),
    pub r_squared: f64,
}

/// Minimum number of points accepted by the power-law fits.
pub const MIN_FIT_POINTS: usize = 10;

/// Fits `series[t] ∝ t^exponent` over the inclusive index window
/// `(t_min, t_max)`.
pub fn fit_power_law(series: &[f64], window: (usize, usize)) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    if lo == 0 {
        return Err(Error::Fit("window must start at t ≥ 1 (log 0)".into()));
    }
    if hi >= series.len() || lo >= hi {
        return Err(Error::Fit(format!(
            "window ({lo}, {hi}) does not fit a series of length {}",
            series.len()
        )));
    }
    let ts: Vec<f64> = (lo..=hi).map(|t| t as f64).collect();
    let mut fit = fit_power_law_points(&ts, &series[lo..=hi])?;
    fit.window = window;
    Ok(fit)
}

/// Power-law fit over explicit `(t, y)` points.
pub fn fit_power_law_points(ts: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if ts.len() != ys.len() {
        return Err(Error::Fit("mismatched point counts".into()));
    }
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} points, got {}",
            ts.len()
        )));
    }
    if let Some((t, y)) = ts.iter().zip(ys).find(|(&t, &y)| !(t > 0.0 && y > 0.0)) {
        return Err(Error::Fit(format!(
            "nonpositive point ({t}, {y}) in window"
        )));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("all points share the same t".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ssr / syy };
    let window = (
        ts.iter().cloned().fold(f64::INFINITY, f64::min) as usize,
        ts.iter().cloned().fold(0.0, f64::max) as usize,
    );
    Ok(PowerLawFit {
        exponent: slope,
        stderr,
        window,
        r_squared,
    })
}

/// The trailing part of a series used for time averages and fits: indices
/// `⌊start_fraction · len⌋ ..= len − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiStationaryWindow {
    pub start_fraction: f64,
}

impl Default for QuasiStationaryWindow {
    fn default() -> Self {
        Self {
            start_fraction: 0.5,
        }
    }
}

impl QuasiStationaryWindow {
    pub fn new(start_fraction: f64) -> Result<Self> {
        if !(start_fraction > 0.0 && start_fraction < 1.0) {
            return Err(Error::OutOfRange {
                name: "window_fraction",
                value: start_fraction,
                range: "(0, 1)",
            });
        }
        Ok(Self { start_fraction })
    }

    /// Inclusive index bounds for a series of length `len ≥ 1`.
    pub fn bounds(&self, len: usize) -> (usize, usize) {
        assert!(len > 0, "empty series");
        let lo = ((self.start_fraction * len as f64).floor() as usize).min(len - 1);
        (lo, len - 1)
    }

    /// Accepts the window when a linear fit of the series over it has
    /// `|slope|` below `1e-4` per step.
    pub fn is_stationary(&self, series: &[f64]) -> bool {
        let (lo, hi) = self.bounds(series.len());
        if hi == lo {
            return true;
        }
        let n = (hi - lo + 1) as f64;
        let mt = (lo + hi) as f64 / 2.0;
        let my = series[lo..=hi].iter().sum::<f64>() / n;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (t, y) in (lo..=hi).zip(&series[lo..=hi]) {
            let dt = t as f64 - mt;
            sxx += dt * dt;
            sxy += dt * (y - my);
        }
        (sxy / sxx).abs() < 1e-4
    }
}

/// Mean and sample standard deviation of `values`.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Arithmetic mean and sample standard deviation over the window.
pub fn time_average(series: &[f64], window: QuasiStationaryWindow) -> (f64, f64) {
    let (lo, hi) = window.bounds(series.len());
    mean_std(&series[lo..=hi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_coin_state, make_localized_state, CoinBlochParams, CoinSpinor};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rho(a: f64, b: C64) -> CoinDensityMatrix {
        CoinDensityMatrix::new(a, b, 1.0 - a)
    }

    fn random_rho(rng: &mut impl Rng) -> CoinDensityMatrix {
        let a: f64 = rng.random();
        let bound = (a * (1.0 - a)).sqrt();
        let r = bound * rng.random::<f64>();
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        rho(a, C64::from_polar(r, phase))
    }

    #[test]
    fn coin_density_examples() {
        let r = coin_density(&make_localized_state(CoinSpinor::UP));
        assert_eq!(r, CoinDensityMatrix::new(1.0, C64::default(), 0.0));
        let r = coin_density(&make_localized_state(make_coin_state(
            CoinBlochParams::balanced(),
        )));
        assert!((r.a - 0.5).abs() < 1e-15 && (r.c - 0.5).abs() < 1e-15);
        assert!((r.b - 0.5).norm() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(von_neumann_entropy(&rho(1.0, C64::default())), 0.0);
        assert!((von_neumann_entropy(&rho(0.5, C64::default())) - 1.0).abs() < 1e-15);
        assert!(von_neumann_entropy(&rho(0.5, C64::new(0.5, 0.0))).abs() < 1e-15);
    }

    #[test]
    fn entropy_decreases_with_coherence() {
        for i in 1..50 {
            let a = i as f64 / 50.0;
            let bmax = (a * (1.0 - a)).sqrt();
            let mut prev = f64::INFINITY;
            for k in 0..50 {
                let s = von_neumann_entropy(&rho(a, C64::new(bmax * k as f64 / 50.0, 0.0)));
                assert!(s < prev, "a={a} k={k}");
                prev = s;
            }
        }
    }

    #[test]
    fn coherence_example() {
        assert_eq!(coherence_abs(&rho(0.5, C64::new(0.0, 0.5))), 0.5);
    }

    #[test]
    fn position_statistics_examples() {
        let d = position_distribution(&make_localized_state(CoinSpinor::UP));
        assert_eq!(d.prob_at(0), 1.0);
        assert_eq!(position_variance(&d), 0.0);
        assert_eq!(ipr(&d), 1.0);

        let two = PositionDistribution {
            offset: -1,
            stride: 2,
            probs: vec![0.5, 0.5],
        };
        assert_eq!(position_variance(&two), 1.0);
        assert_eq!(ipr(&two), 2.0);
        assert_eq!(
            ipr(&PositionDistribution::contiguous(3, vec![0.125; 8])),
            8.0
        );
    }

    #[test]
    fn trace_distance_examples() {
        let r = rho(0.3, C64::new(0.1, -0.2));
        assert_eq!(trace_distance(&r, &r), 0.0);
        assert_eq!(
            trace_distance(&rho(1.0, C64::default()), &rho(0.0, C64::default())),
            1.0
        );
        assert!(
            (trace_distance(&rho(0.75, C64::default()), &rho(0.25, C64::default())) - 0.5).abs()
                < 1e-15
        );
    }

    #[test]
    fn trace_distance_metric_axioms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (x, y, z) = (
                random_rho(&mut rng),
                random_rho(&mut rng),
                random_rho(&mut rng),
            );
            let dxy = trace_distance(&x, &y);
            assert_eq!(dxy, trace_distance(&y, &x));
            assert!((0.0..=1.0 + 1e-12).contains(&dxy));
            assert!(dxy <= trace_distance(&x, &z) + trace_distance(&z, &y) + 1e-12);
        }
    }

    #[test]
    fn fit_recovers_exact_power_laws() {
        let sq: Vec<f64> = (0..=1000).map(|t| (t as f64).powi(2)).collect();
        let f = fit_power_law(&sq, (10, 1000)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-9);
        assert!(f.stderr < 1e-9 && (f.r_squared - 1.0).abs() < 1e-12);

        let dec: Vec<f64> = (0..=1000).map(|t| 5.0 * (t as f64).powf(-1.5)).collect();
        assert!((fit_power_law(&dec, (10, 1000)).unwrap().exponent + 1.5).abs() < 1e-9);

        for planted in [-1.5, -0.25, 1.0, 2.0, 3.0] {
            let s: Vec<f64> = (0..=500).map(|t| 0.7 * (t as f64).powf(planted)).collect();
            let f = fit_power_law(&s, (50, 500)).unwrap();
            assert!((f.exponent - planted).abs() < 1e-6);
        }

        let flat = vec![0.3; 200];
        assert!(fit_power_law(&flat, (20, 199)).unwrap().exponent.abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let mut s: Vec<f64> = (0..100).map(|t| t as f64).collect();
        assert!(fit_power_law(&s, (0, 99)).is_err());
        assert!(fit_power_law(&s, (95, 99)).is_err());
        assert!(fit_power_law(&s, (10, 100)).is_err());
        s[50] = 0.0;
        assert!(matches!(fit_power_law(&s, (10, 99)), Err(Error::Fit(_))));
    }

    #[test]
    fn time_average_examples() {
        let (m, sd) = time_average(&[0.7; 40], QuasiStationaryWindow::default());
        assert!((m - 0.7).abs() < 1e-15 && sd < 1e-15);
        let s: Vec<f64> = (1..=100).map(|t| t as f64).collect();
        let (m, _) = time_average(&s, QuasiStationaryWindow::default());
        assert_eq!(m, 75.5);
        assert_eq!(QuasiStationaryWindow::default().bounds(1001), (500, 1000));
        assert!(QuasiStationaryWindow::new(1.0).is_err());
        assert!(QuasiStationaryWindow::new(0.0).is_err());
    }

    #[test]
    fn stationarity_check() {
        let w = QuasiStationaryWindow::default();
        assert!(w.is_stationary(&vec![0.87; 100]));
        let ramp: Vec<f64> = (0..100).map(|t| t as f64 * 1e-3).collect();
        assert!(!w.is_stationary(&ramp));
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_eigenvalue_sum(a in 0.0..=1.0f64, r in 0.0..=1.0f64, phase in 0.0..6.3f64) {
            let b = C64::from_polar(r * (a * (1.0 - a)).sqrt(), phase);
            let m = rho(a, b);
            let (lp, lm) = m.eigenvalues();
            prop_assert!((lp + lm - 1.0).abs() < 1e-12);
            let s = von_neumann_entropy(&m);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
