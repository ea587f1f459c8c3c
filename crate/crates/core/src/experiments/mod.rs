//! Experiment drivers: parameter sweeps over coin, initial-state and q grids
//! that produce rectangular result tables.

mod config;
mod output;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{run_ensemble, EnsembleResult, InitialState, Observable, WalkConfig};
use crate::observables::{
    fit_power_law, fit_power_law_points, mean_std, time_average, QuasiStationaryWindow,
};
use crate::sampler::EntropicIndex;
use crate::state::{
    coin_general, coin_hadamard, coin_kempe, orthey_phase, CoinBlochParams, CoinOperator,
};

pub use config::{
    parse_config, parse_grid, parse_q_list, CoinKind, ExperimentKind, ExperimentSpec,
    PhaseRelation, RawConfig, DEFAULT_SEED, DEFAULT_WINDOW_FRACTION,
    TRACE_DISTANCE_WINDOW_FRACTION,
};
pub use output::{
    read_metadata, replay, sidecar_path, table_path, verify_replay, write_results,
    ExperimentMetadata, ExperimentOutput, ResultTable, ENGINE_VERSION,
};

/// Trace-distance values at or below this are excluded from decay fits.
pub const TRACE_DISTANCE_FLOOR: f64 = 1e-12;

/// One point of the parameter grid. Angles are in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub q: EntropicIndex,
    pub sigma2: f64,
    pub theta: f64,
    pub omega: f64,
    pub beta: f64,
}

const POINT_COLUMNS: [&str; 5] = ["q", "sigma2", "theta_deg", "omega_deg", "beta_deg"];

impl GridPoint {
    fn values(&self) -> [f64; 5] {
        [
            self.q.as_f64(),
            self.sigma2,
            self.theta,
            self.omega,
            self.beta,
        ]
    }
}

impl ExperimentSpec {
    /// All grid points in q × σ² × θ × Ω × β order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &q in &self.q_grid {
            for &sigma2 in &self.sigma2_grid {
                for &theta in &self.theta_grid {
                    for &omega in &self.omega_grid {
                        for &beta in &self.beta_grid {
                            points.push(GridPoint {
                                q,
                                sigma2,
                                theta,
                                omega,
                                beta,
                            });
                        }
                    }
                }
            }
        }
        points
    }

    pub fn coin_at(&self, p: &GridPoint) -> Result<CoinOperator> {
        match self.coin {
            CoinKind::Kempe => coin_kempe(p.theta.to_radians()),
            CoinKind::Hadamard => Ok(coin_hadamard()),
            CoinKind::General => coin_general(
                p.theta.to_radians(),
                p.beta.to_radians(),
                self.gamma.to_radians(),
            ),
        }
    }

    pub fn coin_state_at(&self, p: &GridPoint) -> Result<CoinBlochParams> {
        let omega = p.omega.to_radians();
        match self.phase_relation {
            PhaseRelation::Bloch => CoinBlochParams::new(omega, self.phi.to_radians()),
            PhaseRelation::Orthey => {
                CoinBlochParams::from_relative_phase(omega, orthey_phase(omega)?)
            }
        }
    }

    /// The walk configuration at one grid point. A deterministic walk
    /// (`q = 0.5`) runs a single trajectory.
    pub fn walk_config(&self, p: &GridPoint, observables: Vec<Observable>) -> Result<WalkConfig> {
        let initial = InitialState::with_variance(p.sigma2, self.coin_state_at(p)?);
        let mut config = WalkConfig::new(self.coin_at(p)?, p.q, initial);
        config.total_steps = self.steps;
        config.base_seed = self.seed;
        config.ensemble_size = if p.q.is_deterministic() {
            1
        } else {
            self.ensemble
        };
        config.observables = observables;
        Ok(config)
    }

    fn window(&self) -> Result<QuasiStationaryWindow> {
        QuasiStationaryWindow::new(self.window_fraction)
    }
}

fn point_columns(extra: &[String]) -> Vec<String> {
    POINT_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain(extra.iter().cloned())
        .collect()
}

fn column_name(obs: Observable, suffix: &str) -> String {
    format!("{}_{suffix}", obs.name().replace('-', "_"))
}

fn run_points<T, F>(spec: &ExperimentSpec, observables: &[Observable], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&GridPoint, EnsembleResult) -> Result<T> + Sync,
{
    spec.validate()?;
    spec.grid()
        .par_iter()
        .map(|p| {
            let config = spec.walk_config(p, observables.to_vec())?;
            f(p, run_ensemble(&config)?)
        })
        .collect()
}

/// Per point: each run's time average over the quasi-stationary window,
/// then mean and sample std across runs.
fn time_averaged_table(spec: &ExperimentSpec, name: &str) -> Result<ResultTable> {
    let window = spec.window()?;
    let extra: Vec<String> = spec
        .observables
        .iter()
        .flat_map(|&o| [column_name(o, "mean"), column_name(o, "std")])
        .chain(["runs".to_string()])
        .collect();
    let rows = run_points(spec, &spec.observables, |p, e| {
        let mut row = p.values().to_vec();
        for &obs in &spec.observables {
            let per_run: Vec<f64> = e
                .runs
                .iter()
                .map(|r| time_average(r.get(obs).expect("recorded"), window).0)
                .collect();
            let (m, s) = mean_std(&per_run);
            row.extend([m, s]);
        }
        row.push(e.runs.len() as f64);
        Ok(row)
    })?;
    Ok(ResultTable::new(name, point_columns(&extra), rows))
}

/// Time-averaged entropy over the (θ, Ω) or (θ, β) grid; one row per point.
pub fn exp_entropy_surface(spec: &ExperimentSpec) -> Result<ResultTable> {
    time_averaged_table(spec, "surface")
}

/// Time-averaged entropy for each q on the grid.
pub fn exp_entropy_vs_q(spec: &ExperimentSpec) -> Result<ResultTable> {
    time_averaged_table(spec, "entropy-vs-q")
}

/// Fits `Var(t) ∝ t^α` on each run's quasi-stationary window.
pub fn diffusion_exponent(variance: &[f64], window: QuasiStationaryWindow) -> Result<f64> {
    Ok(fit_power_law(variance, window.bounds(variance.len()))?.exponent)
}

/// Mean diffusion exponent per grid point, averaged over per-run fits.
pub fn exp_diffusion_vs_q(spec: &ExperimentSpec) -> Result<ResultTable> {
    let window = spec.window()?;
    let extra = ["alpha_mean", "alpha_std", "runs"].map(String::from);
    let rows = run_points(spec, &[Observable::Variance], |p, e| {
        let alphas = e
            .runs
            .iter()
            .map(|r| diffusion_exponent(r.get(Observable::Variance).expect("recorded"), window))
            .collect::<Result<Vec<_>>>()?;
        let (m, s) = mean_std(&alphas);
        let mut row = p.values().to_vec();
        row.extend([m, s, e.runs.len() as f64]);
        Ok(row)
    })?;
    Ok(ResultTable::new(
        "diffusion-vs-q",
        point_columns(&extra),
        rows,
    ))
}

/// Ensemble mean and std of every selected observable at every `t`, one
/// curve per grid point.
pub fn exp_series(spec: &ExperimentSpec) -> Result<ResultTable> {
    let extra: Vec<String> = spec
        .observables
        .iter()
        .flat_map(|&o| [column_name(o, "mean"), column_name(o, "std")])
        .collect();
    let mut columns = vec!["t".to_string(), "curve".to_string()];
    columns.extend(point_columns(&extra));
    let curves = run_points(spec, &spec.observables, |p, e| Ok((*p, e)))?;
    let mut rows = Vec::new();
    for (curve, (p, e)) in curves.iter().enumerate() {
        for t in 0..=spec.steps {
            let mut row = vec![t as f64, curve as f64];
            row.extend(p.values());
            for obs in &spec.observables {
                row.extend([e.mean[obs][t], e.std[obs][t]]);
            }
            rows.push(row);
        }
    }
    Ok(ResultTable::new("series", columns, rows))
}

/// Fits `D(t) ∝ t^{−β}` on the window, skipping points at or below
/// [`TRACE_DISTANCE_FLOOR`]. Returns the fit with `exponent = −β`.
pub fn fit_trace_decay(
    series: &[f64],
    window: QuasiStationaryWindow,
) -> Result<crate::observables::PowerLawFit> {
    let (lo, hi) = window.bounds(series.len());
    let lo = lo.max(1);
    let (ts, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&t| series[t] > TRACE_DISTANCE_FLOOR)
        .map(|t| (t as f64, series[t]))
        .unzip();
    let mut fit = fit_power_law_points(&ts, &ys)
        .map_err(|e| Error::Fit(format!("trace-distance decay: {e}")))?;
    fit.window = (lo, hi);
    Ok(fit)
}

/// Ensemble-mean successive-state trace distance per `(q, σ², …)` point,
/// plus a companion `fits` table of decay exponents β.
pub fn exp_trace_distance(spec: &ExperimentSpec) -> Result<(ResultTable, ResultTable)> {
    let window = spec.window()?;
    let curves = run_points(spec, &[Observable::TraceDistance], |p, e| {
        let mean = e.mean[&Observable::TraceDistance].clone();
        let std = e.std[&Observable::TraceDistance].clone();
        let fit = fit_trace_decay(&mean, window)?;
        Ok((*p, mean, std, fit, e.runs.len()))
    })?;

    let mut columns = vec!["t".to_string()];
    columns.extend(point_columns(
        &["trace_distance_mean", "trace_distance_std"].map(String::from),
    ));
    let mut rows = Vec::new();
    for (p, mean, std, _, _) in &curves {
        for t in 0..mean.len() {
            let mut row = vec![t as f64];
            row.extend(p.values());
            row.extend([mean[t], std[t]]);
            rows.push(row);
        }
    }

    let fit_columns = point_columns(
        &[
            "beta",
            "beta_stderr",
            "r_squared",
            "window_start",
            "window_end",
            "runs",
        ]
        .map(String::from),
    );
    let fit_rows = curves
        .iter()
        .map(|(p, _, _, fit, runs)| {
            let mut row = p.values().to_vec();
            row.extend([
                -fit.exponent,
                fit.stderr,
                fit.r_squared,
                fit.window.0 as f64,
                fit.window.1 as f64,
                *runs as f64,
            ]);
            row
        })
        .collect();
    Ok((
        ResultTable::new("trace-distance", columns, rows),
        ResultTable::new("fits", fit_columns, fit_rows),
    ))
}

/// Runs the experiment described by `spec`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let tables = match spec.kind {
        ExperimentKind::Surface => vec![exp_entropy_surface(spec)?],
        ExperimentKind::EntropyVsQ => vec![exp_entropy_vs_q(spec)?],
        ExperimentKind::DiffusionVsQ => vec![exp_diffusion_vs_q(spec)?],
        ExperimentKind::Series => vec![exp_series(spec)?],
        ExperimentKind::TraceDistance => {
            let (data, fits) = exp_trace_distance(spec)?;
            vec![data, fits]
        }
    };
    Ok(ExperimentOutput {
        metadata: ExperimentMetadata::new(spec.clone(), started.elapsed().as_secs_f64()),
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind, text: &str) -> ExperimentSpec {
        RawConfig::from_toml_str(text)
            .unwrap()
            .resolve(kind)
            .unwrap()
    }

    #[test]
    fn surface_has_one_row_per_grid_point() {
        let spec = small(
            ExperimentKind::Surface,
            "theta-grid = \"0:30:90\"\nomega-grid = [30, 90]\nsteps = 20\nensemble = 2",
        );
        let t = exp_entropy_surface(&spec).unwrap();
        assert_eq!(t.rows.len(), 4 * 2);
        assert!(t.rows.iter().all(|r| r.len() == t.columns.len()));
        let col = t.column("entropy_mean").unwrap();
        assert!(t.rows.iter().all(|r| (0.0..=1.0).contains(&r[col])));
    }

    #[test]
    fn general_coin_surface_spans_theta_beta() {
        let spec = small(
            ExperimentKind::Surface,
            "coin = \"general\"\ntheta-grid = [0, 45]\nbeta-grid = \"0:45:90\"\nsteps = 10\nensemble = 1",
        );
        assert_eq!(exp_entropy_surface(&spec).unwrap().rows.len(), 2 * 3);
    }

    #[test]
    fn deterministic_rows_have_zero_std() {
        let spec = small(
            ExperimentKind::EntropyVsQ,
            "q = [0.5, 1.2]\nsteps = 60\nensemble = 4",
        );
        let t = exp_entropy_vs_q(&spec).unwrap();
        let (std, runs) = (t.column("entropy_std").unwrap(), t.column("runs").unwrap());
        assert_eq!(t.rows[0][std], 0.0);
        assert_eq!(t.rows[0][runs], 1.0);
        assert_eq!(t.rows[1][runs], 4.0);
    }

    #[test]
    fn planted_cubic_variance_gives_alpha_three() {
        let var: Vec<f64> = (0..=400).map(|t| (t as f64).powi(3)).collect();
        let alpha = diffusion_exponent(&var, QuasiStationaryWindow::default()).unwrap();
        assert!((alpha - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trace_distance_gives_zero_beta() {
        let d = vec![0.02; 500];
        let fit = fit_trace_decay(&d, QuasiStationaryWindow::new(0.1).unwrap()).unwrap();
        assert!(fit.exponent.abs() < 1e-9);
        assert_eq!(fit.window, (50, 499));
    }

    #[test]
    fn trace_decay_skips_vanishing_points() {
        let mut d: Vec<f64> = (0..1000).map(|t| (t.max(1) as f64).powf(-1.5)).collect();
        for t in (101..1000).step_by(2) {
            d[t] = 0.0;
        }
        let fit = fit_trace_decay(&d, QuasiStationaryWindow::new(0.1).unwrap()).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-9);
    }

    #[test]
    fn series_rows_cover_every_step_of_every_curve() {
        let spec = small(
            ExperimentKind::Series,
            "q = [0.5, \"inf\"]\nsteps = 30\nensemble = 3\nobservables = [\"entropy\", \"ipr\", \"coherence\"]",
        );
        let t = exp_series(&spec).unwrap();
        assert_eq!(t.rows.len(), 2 * 31);
        let ipr = t.column("ipr_mean").unwrap();
        assert_eq!(t.rows[0][ipr], 1.0);
        assert_eq!(t.rows[31][t.column("curve").unwrap()], 1.0);
    }

    #[test]
    fn trace_distance_produces_fit_table() {
        let spec = small(
            ExperimentKind::TraceDistance,
            "q = [0.5, 1]\nsigma2 = [0, 10]\nsteps = 200\nensemble = 3",
        );
        let (data, fits) = exp_trace_distance(&spec).unwrap();
        assert_eq!(data.rows.len(), 4 * 201);
        assert_eq!(fits.rows.len(), 4);
        let beta = fits.column("beta").unwrap();
        assert!(fits.rows.iter().all(|r| r[beta].is_finite()));
    }

    #[test]
    fn orthey_relation_builds_the_maximal_state() {
        let spec = small(
            ExperimentKind::Series,
            "coin = \"hadamard\"\nomega-grid = 60\nphase-relation = \"orthey\"",
        );
        let p = spec.grid()[0];
        let c = spec.coin_state_at(&p).unwrap();
        assert!((c.phi - 2.0 * orthey_phase(60f64.to_radians()).unwrap()).abs() < 1e-15);
    }
}
