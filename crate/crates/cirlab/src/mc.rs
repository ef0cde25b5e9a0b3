//! Monte Carlo transmission estimation over complexified trajectory
//! ensembles: event-level RNG streams for reproducibility, retry handling of
//! excluded events, sweeps over the potential depth, transmission-minimum
//! location, trajectory density maps, and winding-angle statistics.
//!
//! Every event is tied to its own counter-mode RNG stream keyed by
//! `(master_seed, attempt, event index)`, so ensembles are bit-identical
//! across thread counts and across the parallel/sequential substrates.

use crate::cdyn::{
    integrate_trajectory, integrate_trajectory_with, winding_angle, CdynError, IntegratorConfig,
    Outcome,
};
use crate::exec::map_indexed;
use crate::model::{complex_radius, ModelError, PotentialSpec, ScatterParams, UnitSystem};
use crate::quad::parabola_min_vertex;
use crate::semiclassics::{sample_initial_state, SamplingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Retries per event before it is counted excluded.
const RETRY_CAP: u64 = 3;
/// Largest tolerated excluded fraction of an ensemble.
const EXCLUDED_BUDGET: f64 = 0.05;
/// Per-point seed stride for sweeps (golden-ratio multiplier).
const SWEEP_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Errors from ensemble estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Cdyn(#[from] CdynError),
    #[error(transparent)]
    Model(#[from] ModelError),
    /// More than the tolerated fraction of events failed to classify.
    #[error("excluded budget exceeded: {n_excluded} of {n_events} events ({:.1}%) unclassified", 100.0 * *n_excluded as f64 / *n_events as f64)]
    ExcludedBudgetExceeded { n_excluded: u64, n_events: u64 },
    /// The swept transmission curve has its minimum on the boundary.
    #[error("no interior transmission minimum on the sweep grid")]
    NoInteriorMinimum,
    #[error("invalid ensemble configuration: {0}")]
    Config(String),
}

/// Ensemble size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub n_events: u64,
    pub master_seed: u64,
}

/// Transmission estimate with event bookkeeping. Excluded events (trapped,
/// branch-cut, step-budget — after retries) are removed from the
/// denominator; `n_trans + n_refl + n_excluded == n_events` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionEstimate {
    /// T = n_trans / (n_trans + n_refl).
    pub t: f64,
    /// Binomial standard error sqrt(T (1-T) / (n_trans + n_refl)).
    pub stderr: f64,
    pub n_trans: u64,
    pub n_refl: u64,
    pub n_excluded: u64,
    /// Excluded breakdown: trapped, branch-cut, step-budget.
    pub n_trapped: u64,
    pub n_branch_cut: u64,
    pub n_step_budget: u64,
}

fn event_rng(master_seed: u64, n_events: u64, event: u64, attempt: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(attempt * n_events + event);
    rng
}

/// Run one event to a classified outcome, retrying excluded draws up to the
/// cap. Returns the final outcome (the last attempt's if all retries fail).
fn run_event(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
    event: u64,
) -> Result<Outcome, McError> {
    let mut last = Outcome::Trapped;
    for attempt in 0..RETRY_CAP {
        let mut rng = event_rng(ens.master_seed, ens.n_events, event, attempt);
        let s0 = sample_initial_state(params, sampling, units, &mut rng)
            .map_err(CdynError::from)?;
        let rec = integrate_trajectory(units, spec, integrator, &s0)?;
        match rec.outcome {
            Outcome::Transmitted | Outcome::Reflected => return Ok(rec.outcome),
            other => last = other,
        }
    }
    Ok(last)
}

fn reduce_outcomes(
    outcomes: Vec<Result<Outcome, McError>>,
    ens: &EnsembleSpec,
) -> Result<TransmissionEstimate, McError> {
    let mut est = TransmissionEstimate {
        t: 0.0,
        stderr: 0.0,
        n_trans: 0,
        n_refl: 0,
        n_excluded: 0,
        n_trapped: 0,
        n_branch_cut: 0,
        n_step_budget: 0,
    };
    for outcome in outcomes {
        match outcome? {
            Outcome::Transmitted => est.n_trans += 1,
            Outcome::Reflected => est.n_refl += 1,
            Outcome::Trapped => {
                est.n_excluded += 1;
                est.n_trapped += 1;
            }
            Outcome::BranchCut => {
                est.n_excluded += 1;
                est.n_branch_cut += 1;
            }
            Outcome::StepBudgetExceeded => {
                est.n_excluded += 1;
                est.n_step_budget += 1;
            }
        }
    }
    if est.n_excluded as f64 > EXCLUDED_BUDGET * ens.n_events as f64 {
        return Err(McError::ExcludedBudgetExceeded {
            n_excluded: est.n_excluded,
            n_events: ens.n_events,
        });
    }
    let classified = est.n_trans + est.n_refl;
    est.t = est.n_trans as f64 / classified as f64;
    est.stderr = (est.t * (1.0 - est.t) / classified as f64).sqrt();
    Ok(est)
}

/// Estimate the transmission coefficient of one ensemble.
pub fn estimate_transmission(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
) -> Result<TransmissionEstimate, McError> {
    if ens.n_events == 0 {
        return Err(McError::Config("ensemble must contain at least one event".into()));
    }
    params.validate(units).map_err(CdynError::from)?;
    let outcomes = map_indexed(ens.n_events as usize, |i| {
        run_event(units, spec, params, sampling, integrator, ens, i as u64)
    });
    reduce_outcomes(outcomes, ens)
}

/// Statistics over independent repeats of the same ensemble (seeds
/// `master_seed + r`): mean transmission and the standard error of the mean
/// from the sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: f64,
    pub stderr: f64,
    pub estimates: Vec<TransmissionEstimate>,
}

/// Repeat the ensemble `n_repeats` times with consecutive master seeds.
pub fn repeat_batches(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
    n_repeats: u32,
) -> Result<BatchStats, McError> {
    if n_repeats < 2 {
        return Err(McError::Config("need at least two repeats for batch statistics".into()));
    }
    let mut estimates = Vec::with_capacity(n_repeats as usize);
    for r in 0..n_repeats {
        let seeded = EnsembleSpec {
            master_seed: ens.master_seed.wrapping_add(r as u64),
            ..*ens
        };
        estimates.push(estimate_transmission(units, spec, params, sampling, integrator, &seeded)?);
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.t).sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e.t - mean) * (e.t - mean)).sum::<f64>() / (n - 1.0);
    Ok(BatchStats { mean, stderr: (var / n).sqrt(), estimates })
}

/// Swept model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    V0,
    EPerp,
    EPar,
    Lz,
    Range,
}

impl SweepAxis {
    /// Apply one grid value to the potential/scattering parameters.
    pub fn apply(self, value: f64, spec: &PotentialSpec, params: &ScatterParams) -> (PotentialSpec, ScatterParams) {
        let mut s = *spec;
        let mut p = *params;
        match self {
            SweepAxis::V0 => s.v0 = value,
            SweepAxis::EPerp => p.e_perp = value,
            SweepAxis::EPar => p.e_par = value,
            SweepAxis::Lz => p.lz = value,
            SweepAxis::Range => s.range = value,
        }
        (s, p)
    }
}

/// Transmission as a function of one swept parameter. Per-point failures
/// (typically the excluded budget) are recorded in place, not raised.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionCurve {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub points: Vec<Result<TransmissionEstimate, String>>,
}

impl TransmissionCurve {
    /// Successfully estimated points as (axis value, estimate).
    pub fn ok_points(&self) -> impl Iterator<Item = (f64, &TransmissionEstimate)> {
        self.grid
            .iter()
            .zip(self.points.iter())
            .filter_map(|(&v, p)| p.as_ref().ok().map(|e| (v, e)))
    }
}

/// Sweep the transmission along `axis`, reseeding each point from the
/// master seed, and report each finished point through `on_point`.
pub fn sweep_transmission_with<F>(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    axis: SweepAxis,
    grid: &[f64],
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
    mut on_point: F,
) -> Result<TransmissionCurve, McError>
where
    F: FnMut(usize, f64, &Result<TransmissionEstimate, String>),
{
    if grid.is_empty() {
        return Err(McError::Config("sweep grid must be non-empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(McError::Config("sweep grid must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for (i, &value) in grid.iter().enumerate() {
        let (point_spec, point_params) = axis.apply(value, spec, params);
        let point_ens = EnsembleSpec {
            master_seed: ens.master_seed.wrapping_add((i as u64).wrapping_mul(SWEEP_SEED_STRIDE)),
            ..*ens
        };
        let point =
            estimate_transmission(units, &point_spec, &point_params, sampling, integrator, &point_ens)
                .map_err(|e| e.to_string());
        on_point(i, value, &point);
        points.push(point);
    }
    Ok(TransmissionCurve { axis, grid: grid.to_vec(), points })
}

/// [`sweep_transmission_with`] without a per-point callback.
pub fn sweep_transmission(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    axis: SweepAxis,
    grid: &[f64],
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
) -> Result<TransmissionCurve, McError> {
    sweep_transmission_with(units, spec, params, axis, grid, sampling, integrator, ens, |_, _, _| {})
}

/// Location of a transmission minimum on a swept curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TminEstimate {
    /// Refined minimum position (parabola vertex through the argmin and its
    /// neighbors in (ln v0, T); falls back to the grid argmin when the three
    /// points are degenerate).
    pub v0: f64,
    /// Grid argmin position.
    pub v0_grid: f64,
    /// Transmission at the grid argmin.
    pub t_min: f64,
    /// Index of the grid argmin in the curve's grid.
    pub index: usize,
}

/// Locate the interior minimum of a swept transmission curve, skipping
/// points whose estimates failed.
pub fn locate_tmin(curve: &TransmissionCurve) -> Result<TminEstimate, McError> {
    let pts: Vec<(usize, f64, &TransmissionEstimate)> = curve
        .grid
        .iter()
        .zip(curve.points.iter())
        .enumerate()
        .filter_map(|(i, (&v, p))| p.as_ref().ok().map(|e| (i, v, e)))
        .collect();
    if pts.len() < 3 {
        return Err(McError::Config("need at least three estimated sweep points".into()));
    }
    if pts.iter().any(|&(_, v, _)| v <= 0.0) {
        return Err(McError::Config("sweep values must be positive for the log-axis fit".into()));
    }
    let mut k = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.2.t < pts[k].2.t {
            k = i;
        }
    }
    if k == 0 || k == pts.len() - 1 {
        return Err(McError::NoInteriorMinimum);
    }
    let x = [pts[k - 1].1.ln(), pts[k].1.ln(), pts[k + 1].1.ln()];
    let y = [pts[k - 1].2.t, pts[k].2.t, pts[k + 1].2.t];
    let refined = parabola_min_vertex(x, y)
        .map(f64::exp)
        // Keep the vertex inside the bracketing interval.
        .filter(|v| *v >= pts[k - 1].1 && *v <= pts[k + 1].1)
        .unwrap_or(pts[k].1);
    Ok(TminEstimate {
        v0: refined,
        v0_grid: pts[k].1,
        t_min: pts[k].2.t,
        index: pts[k].0,
    })
}

/// Rectangular binning grid in the scattering plane (Re x, Re z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { x_min: -4.0, x_max: 4.0, nx: 32, z_min: -10.0, z_max: 10.0, nz: 80 }
    }
}

impl GridSpec {
    fn bin(&self, x: f64, z: f64) -> Option<usize> {
        if !(self.x_min..self.x_max).contains(&x) || !(self.z_min..self.z_max).contains(&z) {
            return None;
        }
        let ix = ((x - self.x_min) / (self.x_max - self.x_min) * self.nx as f64) as usize;
        let iz = ((z - self.z_min) / (self.z_max - self.z_min) * self.nz as f64) as usize;
        Some(ix * self.nz + iz)
    }

    pub fn centers(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let hx = (self.x_max - self.x_min) / self.nx as f64;
        let hz = (self.z_max - self.z_min) / self.nz as f64;
        (0..self.nx * self.nz).map(move |k| {
            let (ix, iz) = (k / self.nz, k % self.nz);
            (
                k,
                self.x_min + (ix as f64 + 0.5) * hx,
                self.z_min + (iz as f64 + 0.5) * hz,
            )
        })
    }
}

/// Time-weighted trajectory density on a scattering-plane grid, normalized
/// to unit in-grid mass. Row-major over x, then z.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub grid: GridSpec,
    pub mass: Vec<f64>,
}

impl DensityMap {
    /// Mean mass per cell inside a centered transverse band |Re x| <= half_width,
    /// over all z. A resonance piles trajectory time onto the axis, so the
    /// ratio of this statistic between two runs measures the pile-up.
    pub fn axial_band_mass(&self, half_width: f64) -> f64 {
        let mut total = 0.0;
        for (k, x, _z) in self.grid.centers() {
            if x.abs() <= half_width {
                total += self.mass[k];
            }
        }
        total
    }
}

/// Accumulate the time-weighted density of classified trajectories: each
/// accepted integration step deposits its step size at the step midpoint in
/// (Re x, Re z). Events still excluded after retries contribute nothing.
pub fn density_map(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
    grid: &GridSpec,
) -> Result<DensityMap, McError> {
    if ens.n_events == 0 || grid.nx == 0 || grid.nz == 0 {
        return Err(McError::Config("empty ensemble or grid".into()));
    }
    params.validate(units).map_err(CdynError::from)?;
    let per_event = map_indexed(ens.n_events as usize, |i| -> Result<Option<Vec<f64>>, McError> {
        for attempt in 0..RETRY_CAP {
            let mut rng = event_rng(ens.master_seed, ens.n_events, i as u64, attempt);
            let s0 = sample_initial_state(params, sampling, units, &mut rng)
                .map_err(CdynError::from)?;
            let mut local = vec![0.0f64; grid.nx * grid.nz];
            let mut prev = s0;
            let rec = integrate_trajectory_with(units, spec, integrator, &s0, &mut |s, h| {
                let x_mid = 0.5 * (prev.q.x.re + s.q.x.re);
                let z_mid = 0.5 * (prev.q.z.re + s.q.z.re);
                if let Some(k) = grid.bin(x_mid, z_mid) {
                    local[k] += h;
                }
                prev = *s;
            })?;
            if matches!(rec.outcome, Outcome::Transmitted | Outcome::Reflected) {
                return Ok(Some(local));
            }
        }
        Ok(None)
    });
    let mut mass = vec![0.0f64; grid.nx * grid.nz];
    let mut n_excluded = 0u64;
    for ev in per_event {
        match ev? {
            Some(local) => {
                for (m, v) in mass.iter_mut().zip(local) {
                    *m += v;
                }
            }
            None => n_excluded += 1,
        }
    }
    if n_excluded as f64 > EXCLUDED_BUDGET * ens.n_events as f64 {
        return Err(McError::ExcludedBudgetExceeded { n_excluded, n_events: ens.n_events });
    }
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(McError::Config("no trajectory mass landed on the grid".into()));
    }
    for m in mass.iter_mut() {
        *m /= total;
    }
    Ok(DensityMap { grid: *grid, mass })
}

/// Winding-angle statistics of one ensemble at fixed depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingPoint {
    pub v0: f64,
    /// Mean winding angle over classified events with a resolvable angle.
    pub winding_mean: f64,
    pub n_used: u64,
    /// Events whose in-region sampling was too sparse to unwrap.
    pub n_unresolved: u64,
}

/// Mean winding angle of classified trajectories: angles are accumulated
/// from accepted states inside Re r < 5 * range and compared against the
/// direct transit. Unresolvable events are counted, not guessed.
pub fn mean_winding(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
) -> Result<WindingPoint, McError> {
    if ens.n_events == 0 {
        return Err(McError::Config("ensemble must contain at least one event".into()));
    }
    params.validate(units).map_err(CdynError::from)?;
    let region = 5.0 * spec.range;
    let per_event = map_indexed(ens.n_events as usize, |i| -> Result<Option<Option<f64>>, McError> {
        for attempt in 0..RETRY_CAP {
            let mut rng = event_rng(ens.master_seed, ens.n_events, i as u64, attempt);
            let s0 = sample_initial_state(params, sampling, units, &mut rng)
                .map_err(CdynError::from)?;
            let mut in_region = Vec::new();
            let rec = integrate_trajectory_with(units, spec, integrator, &s0, &mut |s, _h| {
                if let Ok(r) = complex_radius(s.q) {
                    if r.re < region {
                        in_region.push(*s);
                    }
                }
            })?;
            if matches!(rec.outcome, Outcome::Transmitted | Outcome::Reflected) {
                return Ok(Some(winding_angle(&in_region).ok()));
            }
        }
        Ok(None)
    });
    let mut sum = 0.0;
    let mut n_used = 0u64;
    let mut n_unresolved = 0u64;
    let mut n_excluded = 0u64;
    for ev in per_event {
        match ev? {
            Some(Some(theta)) => {
                sum += theta;
                n_used += 1;
            }
            Some(None) => n_unresolved += 1,
            None => n_excluded += 1,
        }
    }
    if n_excluded as f64 > EXCLUDED_BUDGET * ens.n_events as f64 {
        return Err(McError::ExcludedBudgetExceeded { n_excluded, n_events: ens.n_events });
    }
    if n_used == 0 {
        return Err(McError::Config("no event produced a resolvable winding angle".into()));
    }
    Ok(WindingPoint {
        v0: spec.v0,
        winding_mean: sum / n_used as f64,
        n_used,
        n_unresolved,
    })
}

/// Winding-angle sweep over potential depths (seeded like
/// [`sweep_transmission_with`]).
pub fn theta_vs_v0_confined(
    units: UnitSystem,
    spec: &PotentialSpec,
    v0_values: &[f64],
    params: &ScatterParams,
    sampling: &SamplingConfig,
    integrator: &IntegratorConfig,
    ens: &EnsembleSpec,
) -> Result<Vec<WindingPoint>, McError> {
    let mut points = Vec::with_capacity(v0_values.len());
    for (i, &v0) in v0_values.iter().enumerate() {
        let point_spec = PotentialSpec { v0, ..*spec };
        let point_ens = EnsembleSpec {
            master_seed: ens.master_seed.wrapping_add((i as u64).wrapping_mul(SWEEP_SEED_STRIDE)),
            ..*ens
        };
        points.push(mean_winding(units, &point_spec, params, sampling, integrator, &point_ens)?);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn quick_setup() -> (UnitSystem, ScatterParams, SamplingConfig, IntegratorConfig) {
        let units = UnitSystem::default();
        let params = ScatterParams::new(1.0, 0.5, 0.0);
        let sampling = SamplingConfig::for_units(units);
        // Loose tolerance keeps the unit tests quick; production sweeps use
        // tighter settings from their own configs.
        let integrator = IntegratorConfig {
            atol: 1e-7,
            rtol: 1e-7,
            ..IntegratorConfig::for_units(units)
        };
        (units, params, sampling, integrator)
    }

    #[test]
    fn free_flight_transmits_every_event() {
        let (units, params, sampling, integrator) = quick_setup();
        let spec = PotentialSpec::yukawa(0.0, 1.0);
        let ens = EnsembleSpec { n_events: 16, master_seed: 1 };
        let est = estimate_transmission(units, &spec, &params, &sampling, &integrator, &ens).unwrap();
        assert_eq!(est.n_trans, 16);
        assert_eq!(est.n_refl, 0);
        assert_eq!(est.n_excluded, 0);
        assert_abs_diff_eq!(est.t, 1.0);
        assert_abs_diff_eq!(est.stderr, 0.0);
    }

    #[test]
    fn estimates_are_reproducible_and_counts_conserved() {
        let (units, params, sampling, integrator) = quick_setup();
        let spec = PotentialSpec::yukawa(0.05, 1.0);
        let ens = EnsembleSpec { n_events: 24, master_seed: 42 };
        let a = estimate_transmission(units, &spec, &params, &sampling, &integrator, &ens).unwrap();
        let b = estimate_transmission(units, &spec, &params, &sampling, &integrator, &ens).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_trans + a.n_refl + a.n_excluded, ens.n_events);
        assert_eq!(
            a.n_excluded,
            a.n_trapped + a.n_branch_cut + a.n_step_budget
        );
        if a.n_trans > 0 && a.n_refl > 0 {
            assert!(a.stderr > 0.0);
        }
    }

    #[test]
    fn deep_slow_ensemble_blows_the_excluded_budget() {
        let units = UnitSystem::default();
        let params = ScatterParams::new(1.0, 4e-3, 0.0);
        let sampling = SamplingConfig { delta_max: 1.0, z0: -10.0 };
        let integrator = IntegratorConfig {
            atol: 1e-7,
            rtol: 1e-7,
            ..IntegratorConfig::for_units(units)
        };
        let spec = PotentialSpec::yukawa(0.05, 1.0);
        let ens = EnsembleSpec { n_events: 10, master_seed: 3 };
        match estimate_transmission(units, &spec, &params, &sampling, &integrator, &ens) {
            Err(McError::ExcludedBudgetExceeded { n_excluded, n_events }) => {
                assert_eq!(n_events, 10);
                assert!(n_excluded > 1);
            }
            other => panic!("expected excluded-budget error, got {other:?}"),
        }
    }

    #[test]
    fn repeat_batches_report_spread() {
        let (units, params, sampling, integrator) = quick_setup();
        let spec = PotentialSpec::yukawa(0.05, 1.0);
        let ens = EnsembleSpec { n_events: 12, master_seed: 7 };
        let stats =
            repeat_batches(units, &spec, &params, &sampling, &integrator, &ens, 3).unwrap();
        assert_eq!(stats.estimates.len(), 3);
        assert!((0.0..=1.0).contains(&stats.mean));
        assert!(stats.stderr.is_finite());
        let mean: f64 = stats.estimates.iter().map(|e| e.t).sum::<f64>() / 3.0;
        assert_relative_eq!(stats.mean, mean, max_relative = 1e-14);
    }

    #[test]
    fn sweep_reports_points_in_order_with_fresh_seeds() {
        let (units, params, sampling, integrator) = quick_setup();
        let spec = PotentialSpec::yukawa(1.0, 1.0);
        let v0s = [0.05, 0.3];
        let ens = EnsembleSpec { n_events: 10, master_seed: 11 };
        let mut seen = Vec::new();
        let curve = sweep_transmission_with(
            units, &spec, &params, SweepAxis::V0, &v0s, &sampling, &integrator, &ens,
            |i, v0, point| seen.push((i, v0, point.is_ok())),
        )
        .unwrap();
        assert_eq!(curve.grid.len(), 2);
        assert_eq!(curve.points.len(), 2);
        assert_eq!(seen.len(), 2);
        assert_eq!(seen[0].0, 0);
        assert_abs_diff_eq!(seen[1].1, 0.3);
        // Single-point ensembles at the same depth reproduce the sweep point.
        let alone = estimate_transmission(
            units,
            &PotentialSpec::yukawa(0.05, 1.0),
            &params,
            &sampling,
            &integrator,
            &EnsembleSpec { n_events: 10, master_seed: 11 },
        )
        .unwrap();
        assert_abs_diff_eq!(alone.t, curve.points[0].as_ref().unwrap().t);
    }

    #[test]
    fn sweep_axes_map_to_the_right_parameters() {
        let spec = PotentialSpec::yukawa(1.0, 2.0);
        let params = ScatterParams::new(1.0, 1e-3, 0.5);
        let (s, p) = SweepAxis::V0.apply(7.0, &spec, &params);
        assert_abs_diff_eq!(s.v0, 7.0);
        assert_abs_diff_eq!(p.e_par, 1e-3);
        let (s, p) = SweepAxis::EPar.apply(1e-2, &spec, &params);
        assert_abs_diff_eq!(s.v0, 1.0);
        assert_abs_diff_eq!(p.e_par, 1e-2);
        let (s, _) = SweepAxis::Range.apply(0.1, &spec, &params);
        assert_abs_diff_eq!(s.range, 0.1);
        let (_, p) = SweepAxis::EPerp.apply(5.0, &spec, &params);
        assert_abs_diff_eq!(p.e_perp, 5.0);
        let (_, p) = SweepAxis::Lz.apply(6.0, &spec, &params);
        assert_abs_diff_eq!(p.lz, 6.0);
    }

    #[test]
    fn locate_tmin_refines_synthetic_parabola() {
        let fake = |t: f64| TransmissionEstimate {
            t,
            stderr: 0.01,
            n_trans: 0,
            n_refl: 0,
            n_excluded: 0,
            n_trapped: 0,
            n_branch_cut: 0,
            n_step_budget: 0,
        };
        let synth = |pairs: Vec<(f64, TransmissionEstimate)>| TransmissionCurve {
            axis: SweepAxis::V0,
            grid: pairs.iter().map(|p| p.0).collect(),
            points: pairs.into_iter().map(|p| Ok(p.1)).collect(),
        };
        // T = 0.2 + (ln v0 - ln 0.04)^2 sampled on a log grid.
        let v_star = 0.04f64;
        let curve = synth(
            (-3..=3)
                .map(|k| {
                    let v0 = v_star * (0.4 * k as f64).exp() * 1.1;
                    (v0, fake(0.2 + (v0.ln() - v_star.ln()).powi(2)))
                })
                .collect(),
        );
        let found = locate_tmin(&curve).unwrap();
        assert_relative_eq!(found.v0, v_star, max_relative = 1e-10);
        assert!(found.index > 0 && found.index < curve.grid.len() - 1);

        // A failed point in the middle is skipped, not fatal.
        let mut holed = curve.clone();
        holed.points[2] = Err("excluded budget exceeded".into());
        let refound = locate_tmin(&holed).unwrap();
        assert_relative_eq!(refound.t_min, found.t_min, max_relative = 1e-12);

        // Monotone curve: minimum on the boundary is rejected.
        let mono = synth((1..=5).map(|k| (k as f64, fake(0.1 * k as f64))).collect());
        assert!(matches!(locate_tmin(&mono), Err(McError::NoInteriorMinimum)));
    }

    #[test]
    fn density_map_is_normalized_and_nonnegative() {
        let (units, params, sampling, integrator) = quick_setup();
        let spec = PotentialSpec::yukawa(0.2, 1.0);
        let ens = EnsembleSpec { n_events: 12, master_seed: 5 };
        let grid = GridSpec { nx: 16, nz: 40, ..GridSpec::default() };
        let map = density_map(units, &spec, &params, &sampling, &integrator, &ens, &grid).unwrap();
        let total: f64 = map.mass.iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        assert!(map.mass.iter().all(|m| *m >= 0.0));
        assert!(map.axial_band_mass(1.0) > 0.0);
        assert!(map.axial_band_mass(4.0) <= 1.0 + 1e-12);
    }

    #[test]
    fn weak_potential_has_negligible_winding() {
        let (units, params, sampling, integrator) = quick_setup();
        let spec = PotentialSpec::yukawa(1e-4, 1.0);
        let ens = EnsembleSpec { n_events: 10, master_seed: 2 };
        let point =
            mean_winding(units, &spec, &params, &sampling, &integrator, &ens).unwrap();
        assert!(point.n_used > 0);
        assert!(
            point.winding_mean < 0.3,
            "weak-potential winding {} should be near zero",
            point.winding_mean
        );
    }
}
