//! Semiclassical machinery for the transverse oscillator: radial turning
//! points, the radial action integral, Bohr–Sommerfeld quantization, and
//! sampling of complexified launch states.
//!
//! A launch state lives on the complexified torus of the 2D oscillator:
//! with semi-axes `a = rho_outer` and `b = Lz / (a omega)` and complex angle
//! `theta = phi + i omega delta`,
//!
//! ```text
//! x = a cos(theta),  px = -a omega sin(theta),
//! y = b sin(theta),  py =  b omega cos(theta),
//! ```
//!
//! which keeps the transverse energy and `Lz` exactly real for any real
//! `(phi, delta)` because `cos^2 + sin^2 = 1` holds identically in the
//! complex plane. The longitudinal motion starts on the real axis at `z0`
//! with `pz = +sqrt(2 E_par)`.

use crate::model::{C64, ComplexVec3, ModelError, PhaseState, ScatterParams, UnitSystem};
use crate::quad::adaptive_simpson;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Inner and outer radial turning points of the transverse oscillator at
/// energy `e_perp` and axial angular momentum `lz`.
pub fn turning_points(e_perp: f64, lz: f64, units: UnitSystem) -> Result<(f64, f64), ModelError> {
    let w = units.omega;
    let disc = e_perp * e_perp - lz * lz * w * w;
    if disc < 0.0 {
        return Err(ModelError::Argument(format!(
            "no classical orbit: e_perp = {e_perp} below centrifugal floor |lz| omega = {}",
            lz.abs() * w
        )));
    }
    let root = disc.sqrt();
    let inner = ((e_perp - root) / (w * w)).max(0.0).sqrt();
    let outer = ((e_perp + root) / (w * w)).sqrt();
    Ok((inner, outer))
}

/// Semi-axes (a, b) of the launch ellipse: `a` is the outer turning point,
/// `b = lz / (a omega)` (signed, zero for head-on orbits).
pub fn orbit_semiaxes(e_perp: f64, lz: f64, units: UnitSystem) -> Result<(f64, f64), ModelError> {
    let (_, outer) = turning_points(e_perp, lz, units)?;
    if outer == 0.0 {
        return Err(ModelError::Argument("zero-energy transverse orbit".into()));
    }
    Ok((outer, lz / (outer * units.omega)))
}

/// Radial action integral `oint p_rho d rho` of the transverse oscillator,
/// evaluated by quadrature in the angle variable.
///
/// Substituting `u = rho^2 = c + a_u sin(phi)` with `c = e_perp / omega^2`
/// and `a_u` half the turning-point gap in `u` turns the action into
///
/// ```text
/// omega a_u^2  Int_{-pi/2}^{pi/2} cos^2(phi) / (c + a_u sin(phi)) dphi,
/// ```
///
/// a smooth integrand whose denominator approaches zero only at the lower
/// endpoint (head-on orbits), where the numerator vanishes faster.
pub fn radial_action(e_perp: f64, lz: f64, units: UnitSystem, tol: f64) -> Result<f64, ModelError> {
    let w = units.omega;
    let disc = e_perp * e_perp - lz * lz * w * w;
    if disc < 0.0 {
        return Err(ModelError::Argument(format!(
            "no classical orbit: e_perp = {e_perp} below centrifugal floor |lz| omega = {}",
            lz.abs() * w
        )));
    }
    let c = e_perp / (w * w);
    let a_u = disc.sqrt() / (w * w);
    if a_u == 0.0 {
        return Ok(0.0);
    }
    let head_on = lz == 0.0;
    let integrand = move |phi: f64| {
        if head_on {
            // a_u = c exactly: cos^2 / (c (1 + sin)) = (1 - sin) / c,
            // removing the 0/0 at the lower endpoint.
            (1.0 - phi.sin()) / c
        } else {
            let cos = phi.cos();
            cos * cos / (c + a_u * phi.sin())
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let val = adaptive_simpson(&integrand, -half_pi, half_pi, tol / (w * a_u * a_u), 60);
    Ok(w * a_u * a_u * val)
}

/// One quantized transverse level: numeric root of the quantization
/// condition next to its closed-form oscillator value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BohrLevel {
    pub n: u32,
    pub e_numeric: f64,
    pub e_closed_form: f64,
}

/// Bohr–Sommerfeld levels of the transverse oscillator at fixed `lz`:
/// solve `oint p_rho d rho = 2 pi (n + 1/2)` for the energy by bisection
/// (the action is monotone in the energy). The closed form is
/// `(2n + |lz| + 1) omega`.
pub fn bohr_sommerfeld_levels(
    lz: i32,
    n_max: u32,
    units: UnitSystem,
    tol: f64,
) -> Result<Vec<BohrLevel>, ModelError> {
    let w = units.omega;
    if !(w > 0.0) {
        return Err(ModelError::Argument(format!("omega must be positive, got {w}")));
    }
    let lz_f = lz.abs() as f64;
    let quad_tol = (tol * 1e-2).min(1e-12);
    let mut levels = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let target = 2.0 * std::f64::consts::PI * (n as f64 + 0.5);
        let mut lo = lz_f * w;
        let mut hi = (2.0 * n as f64 + 3.0 + lz_f) * w;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let action = radial_action(mid, lz as f64, units, quad_tol)?;
            if action < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < tol.max(1e-14 * hi.abs()) {
                break;
            }
        }
        levels.push(BohrLevel {
            n,
            e_numeric: 0.5 * (lo + hi),
            e_closed_form: (2.0 * n as f64 + lz_f + 1.0) * w,
        });
    }
    Ok(levels)
}

/// How launch states are drawn: the imaginary-time displacement is uniform
/// on `[0, delta_max]` and the orbit phase uniform on `[0, 2 pi)`; the
/// longitudinal coordinate starts at `z0` on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Upper bound of the imaginary-time displacement delta.
    pub delta_max: f64,
    /// Launch coordinate on the waveguide axis (upstream of the scatterer).
    pub z0: f64,
}

impl SamplingConfig {
    /// Default window scaled to the trap period: delta_max = 0.5 / omega.
    pub fn for_units(units: UnitSystem) -> Self {
        Self { delta_max: 0.5 / units.omega, z0: -10.0 }
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self::for_units(UnitSystem::default())
    }
}

/// Deterministic launch state for given `(delta, phi)` at time `t` of the
/// interaction-free motion: transverse angle advances as `phi + omega t`,
/// the longitudinal coordinate drifts with `pz = sqrt(2 e_par)`.
pub fn free_orbit_state(
    params: &ScatterParams,
    units: UnitSystem,
    delta: f64,
    phi: f64,
    z0: f64,
    t: f64,
) -> Result<PhaseState, ModelError> {
    params.validate(units)?;
    let w = units.omega;
    let (a, b) = orbit_semiaxes(params.e_perp, params.lz, units)?;
    let theta = C64::new(phi + w * t, w * delta);
    let (sin, cos) = (theta.sin(), theta.cos());
    let pz = (2.0 * params.e_par).sqrt();
    Ok(PhaseState::new(
        ComplexVec3::new(a * cos, b * sin, C64::new(z0 + pz * t, 0.0)),
        ComplexVec3::new(-a * w * sin, b * w * cos, C64::new(pz, 0.0)),
        t,
    ))
}

/// Draw one complexified launch state. The draw order (delta first, then
/// phi) is fixed so ensembles are reproducible from the RNG stream alone.
pub fn sample_initial_state(
    params: &ScatterParams,
    config: &SamplingConfig,
    units: UnitSystem,
    rng: &mut impl Rng,
) -> Result<PhaseState, ModelError> {
    let delta = rng.gen::<f64>() * config.delta_max;
    let phi = rng.gen::<f64>() * std::f64::consts::TAU;
    free_orbit_state(params, units, delta, phi, config.z0, 0.0)
}

/// Normalized histogram of `Re rho` over a batch of states: density per
/// unit radius on `bins` equal cells covering `[0, rho_max]`. States whose
/// squared transverse radius lands on the branch cut are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub rho_max: f64,
    pub density: Vec<f64>,
}

impl RadialProfile {
    pub fn bin_centers(&self) -> Vec<f64> {
        let h = self.rho_max / self.density.len() as f64;
        (0..self.density.len()).map(|i| (i as f64 + 0.5) * h).collect()
    }
}

/// Bin the real part of the transverse radius of each state.
pub fn transverse_density_profile(
    states: &[PhaseState],
    rho_max: f64,
    bins: usize,
) -> RadialProfile {
    assert!(bins >= 1 && rho_max > 0.0);
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    for s in states {
        let rho2 = s.q.x * s.q.x + s.q.y * s.q.y;
        if rho2.im == 0.0 && rho2.re <= 0.0 {
            if rho2.re == 0.0 {
                // Exactly on axis: bin at zero radius.
                counts[0] += 1;
                total += 1;
            }
            continue;
        }
        let rho = rho2.sqrt().re;
        if (0.0..rho_max).contains(&rho) {
            counts[(rho / rho_max * bins as f64) as usize] += 1;
            total += 1;
        }
    }
    let h = rho_max / bins as f64;
    let norm = if total > 0 { 1.0 / (total as f64 * h) } else { 0.0 };
    RadialProfile {
        rho_max,
        density: counts.into_iter().map(|c| c as f64 * norm).collect(),
    }
}
