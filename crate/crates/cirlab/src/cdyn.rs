//! Complexified classical dynamics: Hamilton's equations over complex phase
//! space, an embedded Runge–Kutta–Fehlberg 4(5) integrator with adaptive
//! step control, outcome classification of scattering trajectories, the PT
//! transform, and the scattering-plane winding angle.
//!
//! The equations of motion are the complex-analytic continuation of the
//! real ones,
//!
//! ```text
//! q' = p,    p' = -omega^2 (x, y, 0) - V'(r) q / r,
//! ```
//!
//! propagated as twelve coupled real ODEs (real and imaginary parts of the
//! six phase-space components, in `PhaseState::to_array` order). Time stays
//! real; total energy stays (numerically) at its real launch value.

use crate::model::{
    hamiltonian_rel, potential_gradient, ModelError, PhaseState, PotentialKind, PotentialSpec,
    UnitSystem,
};
use thiserror::Error;

/// Errors from trajectory analysis and configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdynError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Consecutive winding samples rotated by more than pi/2, so the
    /// unwrapped angle is ambiguous.
    #[error("insufficient sampling density for winding angle: |dtheta| = {dtheta:.3} > pi/2")]
    InsufficientSamples { dtheta: f64 },
    #[error("invalid integrator configuration: {0}")]
    Config(String),
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Absolute error tolerance per component.
    pub atol: f64,
    /// Relative error tolerance per component.
    pub rtol: f64,
    /// Initial step size.
    pub h_init: f64,
    /// Smallest allowed step; failure to meet the tolerance here is treated
    /// as a singular encounter (branch-cut outcome).
    pub h_min: f64,
    /// Largest allowed step.
    pub h_max: f64,
    /// Wall-clock limit in dynamical time; exceeding it means trapped.
    pub t_max: f64,
    /// Attempted-step budget (accepts plus rejects).
    pub max_steps: u64,
    /// Longitudinal exit plane: |Re z| beyond this with outgoing momentum
    /// classifies the trajectory.
    pub z_cut: f64,
    /// Propagate the 5th-order solution (local extrapolation) instead of
    /// the 4th-order one. On by default; the energy-drift budget over long
    /// waveguide transits needs the higher-order chain.
    pub local_extrapolation: bool,
    /// Step-controller safety factor; the steady-state accepted error is
    /// about safety^5, so the default keeps per-step errors well under the
    /// tolerance and a full waveguide transit inside the drift budget.
    pub safety: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-9,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 1.0,
            t_max: 1e4,
            max_steps: 10_000_000,
            z_cut: 15.0,
            local_extrapolation: true,
            safety: 0.55,
        }
    }
}

impl IntegratorConfig {
    /// Defaults with the time scales referred to the trap period.
    pub fn for_units(units: UnitSystem) -> Self {
        let w = units.omega;
        Self {
            h_max: 1.0 / w,
            t_max: 1e4 / w,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), CdynError> {
        if !(self.atol > 0.0) || !(self.rtol >= 0.0) {
            return Err(CdynError::Config(format!(
                "tolerances must be positive, got atol={} rtol={}",
                self.atol, self.rtol
            )));
        }
        if !(self.h_min > 0.0) || !(self.h_max > self.h_min) || !(self.h_init > 0.0) {
            return Err(CdynError::Config(format!(
                "step bounds must satisfy 0 < h_min < h_max, got h_min={} h_max={} h_init={}",
                self.h_min, self.h_max, self.h_init
            )));
        }
        if !(self.t_max > 0.0) || self.max_steps == 0 || !(self.z_cut > 0.0) {
            return Err(CdynError::Config(
                "t_max, max_steps and z_cut must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Crossed the downstream plane Re z >= z_cut with Re pz > 0.
    Transmitted,
    /// Crossed the upstream plane Re z <= -z_cut with Re pz < 0.
    Reflected,
    /// Still inside the interaction region at t_max.
    Trapped,
    /// Hit the branch cut of the principal radius — directly, through a
    /// non-finite state, or by failing the error test at the minimum step.
    BranchCut,
    /// Exhausted the attempted-step budget.
    StepBudgetExceeded,
}

/// Result of one integrated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub outcome: Outcome,
    /// State at the classification point (interpolated onto the exit plane
    /// for transmitted/reflected trajectories).
    pub final_state: PhaseState,
    /// Accepted steps.
    pub steps: u64,
    /// Max over accepted steps of |H(t) - H(0)|.
    pub energy_drift: f64,
}

/// Right-hand side of the twelve real ODEs at packed state `y`
/// (`PhaseState::to_array` order), via complex arithmetic.
pub fn phase_derivatives(
    units: UnitSystem,
    spec: &PotentialSpec,
    y: &[f64; 12],
) -> Result<[f64; 12], ModelError> {
    let s = PhaseState::from_array(y, 0.0);
    let grad = potential_gradient(spec, s.q)?;
    let w2 = units.omega * units.omega;
    let fx = -w2 * s.q.x - grad.x;
    let fy = -w2 * s.q.y - grad.y;
    let fz = -grad.z;
    Ok([
        y[6], y[7], y[8], y[9], y[10], y[11],
        fx.re, fx.im, fy.re, fy.im, fz.re, fz.im,
    ])
}

/// Same right-hand side assembled from the split (real/imaginary) form of
/// the complexified Hamiltonian, entirely in real arithmetic: the radius
/// comes from a polar decomposition of x^2+y^2+z^2 and the potential factor
/// from real exponentials and trigonometry. Agreement with
/// [`phase_derivatives`] checks that the analytic continuation and the
/// split equations of motion are the same dynamical system.
pub fn phase_derivatives_split(
    units: UnitSystem,
    spec: &PotentialSpec,
    y: &[f64; 12],
) -> Result<[f64; 12], ModelError> {
    let (xr, xi, yr, yi, zr, zi) = (y[0], y[1], y[2], y[3], y[4], y[5]);
    // s = x^2 + y^2 + z^2 componentwise.
    let sr = xr * xr - xi * xi + yr * yr - yi * yi + zr * zr - zi * zi;
    let si = 2.0 * (xr * xi + yr * yi + zr * zi);
    if si == 0.0 && sr <= 0.0 {
        return Err(ModelError::BranchCut { s: sr });
    }
    // Principal square root via half-angle polar form.
    let mag = sr.hypot(si);
    let ang = si.atan2(sr);
    let rr = mag.sqrt() * (0.5 * ang).cos();
    let ri = mag.sqrt() * (0.5 * ang).sin();
    if !(rr > 0.0) {
        return Err(ModelError::Domain { r: num_complex::Complex64::new(rr, ri) });
    }
    // g = V'(r) / r, split into (g_re, g_im).
    let (gre, gim) = match spec.kind {
        PotentialKind::Yukawa => {
            // g = v0 e^{-r/r0} (r + r0) / r^3.
            let r0 = spec.range;
            let amp = spec.v0 * (-rr / r0).exp();
            let (er, ei) = (amp * (ri / r0).cos(), -amp * (ri / r0).sin());
            let (nr, ni) = (rr + r0, ri);
            // numerator e * (r + r0)
            let tr = er * nr - ei * ni;
            let ti = er * ni + ei * nr;
            // r^3 = r^2 * r
            let (d2r, d2i) = (rr * rr - ri * ri, 2.0 * rr * ri);
            let (d3r, d3i) = (d2r * rr - d2i * ri, d2r * ri + d2i * rr);
            let den = d3r * d3r + d3i * d3i;
            ((tr * d3r + ti * d3i) / den, (ti * d3r - tr * d3i) / den)
        }
        PotentialKind::LennardJones => {
            // g = 24 v0 (s6 - 2 s6^2) / r^2 with s6 = (sigma/r)^6 from the
            // polar form of sigma/r.
            let m2 = rr * rr + ri * ri;
            let mag6 = (spec.range * spec.range / m2).powi(3);
            let ang6 = -6.0 * ri.atan2(rr);
            let (s6r, s6i) = (mag6 * ang6.cos(), mag6 * ang6.sin());
            let ur = s6r - 2.0 * (s6r * s6r - s6i * s6i);
            let ui = s6i - 2.0 * 2.0 * s6r * s6i;
            let (d2r, d2i) = (rr * rr - ri * ri, 2.0 * rr * ri);
            let den = d2r * d2r + d2i * d2i;
            (
                24.0 * spec.v0 * (ur * d2r + ui * d2i) / den,
                24.0 * spec.v0 * (ui * d2r - ur * d2i) / den,
            )
        }
    };
    let w2 = units.omega * units.omega;
    Ok([
        y[6], y[7], y[8], y[9], y[10], y[11],
        -w2 * xr - (gre * xr - gim * xi),
        -w2 * xi - (gre * xi + gim * xr),
        -w2 * yr - (gre * yr - gim * yi),
        -w2 * yi - (gre * yi + gim * yr),
        -(gre * zr - gim * zi),
        -(gre * zi + gim * zr),
    ])
}

fn axpy(y: &[f64; 12], h: f64, terms: &[(f64, &[f64; 12])]) -> [f64; 12] {
    let mut out = *y;
    for (c, k) in terms {
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += h * c * v;
        }
    }
    out
}

/// One embedded Fehlberg 4(5) step from `(t, y)` with step `h`. Returns the
/// 4th- and 5th-order solutions; their difference is the error estimate.
pub fn rkf45_step<F>(f: &mut F, t: f64, y: &[f64; 12], h: f64) -> Result<([f64; 12], [f64; 12]), ModelError>
where
    F: FnMut(f64, &[f64; 12]) -> Result<[f64; 12], ModelError>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + h / 4.0, &axpy(y, h, &[(0.25, &k1)]))?;
    let k3 = f(
        t + 3.0 * h / 8.0,
        &axpy(y, h, &[(3.0 / 32.0, &k1), (9.0 / 32.0, &k2)]),
    )?;
    let k4 = f(
        t + 12.0 * h / 13.0,
        &axpy(
            y,
            h,
            &[
                (1932.0 / 2197.0, &k1),
                (-7200.0 / 2197.0, &k2),
                (7296.0 / 2197.0, &k3),
            ],
        ),
    )?;
    let k5 = f(
        t + h,
        &axpy(
            y,
            h,
            &[
                (439.0 / 216.0, &k1),
                (-8.0, &k2),
                (3680.0 / 513.0, &k3),
                (-845.0 / 4104.0, &k4),
            ],
        ),
    )?;
    let k6 = f(
        t + h / 2.0,
        &axpy(
            y,
            h,
            &[
                (-8.0 / 27.0, &k1),
                (2.0, &k2),
                (-3544.0 / 2565.0, &k3),
                (1859.0 / 4104.0, &k4),
                (-11.0 / 40.0, &k5),
            ],
        ),
    )?;
    let y4 = axpy(
        y,
        h,
        &[
            (25.0 / 216.0, &k1),
            (1408.0 / 2565.0, &k3),
            (2197.0 / 4104.0, &k4),
            (-1.0 / 5.0, &k5),
        ],
    );
    let y5 = axpy(
        y,
        h,
        &[
            (16.0 / 135.0, &k1),
            (6656.0 / 12825.0, &k3),
            (28561.0 / 56430.0, &k4),
            (-9.0 / 50.0, &k5),
            (2.0 / 55.0, &k6),
        ],
    );
    Ok((y4, y5))
}

/// Mixed absolute/relative error norm of the embedded pair.
fn error_norm(y: &[f64; 12], y4: &[f64; 12], y5: &[f64; 12], atol: f64, rtol: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..12 {
        let scale = atol + rtol * y[i].abs().max(y5[i].abs());
        let e = (y5[i] - y4[i]) / scale;
        sum += e * e;
    }
    (sum / 12.0).sqrt()
}

/// Fixed-step RKF45 chain: `n` steps of size `h` from `y0`, collecting every
/// state (including the initial one). `fifth_order` selects which embedded
/// solution is propagated.
pub fn integrate_fixed<F>(
    f: &mut F,
    y0: &[f64; 12],
    t0: f64,
    h: f64,
    n: usize,
    fifth_order: bool,
) -> Result<Vec<[f64; 12]>, ModelError>
where
    F: FnMut(f64, &[f64; 12]) -> Result<[f64; 12], ModelError>,
{
    let mut states = Vec::with_capacity(n + 1);
    states.push(*y0);
    let mut y = *y0;
    for i in 0..n {
        let (y4, y5) = rkf45_step(f, t0 + i as f64 * h, &y, h)?;
        y = if fifth_order { y5 } else { y4 };
        states.push(y);
    }
    Ok(states)
}

/// Integrate one scattering trajectory to classification, invoking
/// `observer` with each accepted state and the step size that produced it.
/// The terminal partial step onto the exit plane is not reported.
pub fn integrate_trajectory_with<F>(
    units: UnitSystem,
    spec: &PotentialSpec,
    config: &IntegratorConfig,
    state0: &PhaseState,
    observer: &mut F,
) -> Result<TrajectoryRecord, CdynError>
where
    F: FnMut(&PhaseState, f64),
{
    config.validate()?;
    spec.validate()?;
    let mut field = |_t: f64, y: &[f64; 12]| phase_derivatives(units, spec, y);

    let h0 = match hamiltonian_rel(units, spec, state0) {
        Ok(v) => v,
        Err(_) => {
            return Ok(TrajectoryRecord {
                outcome: Outcome::BranchCut,
                final_state: *state0,
                steps: 0,
                energy_drift: 0.0,
            })
        }
    };

    let mut y = state0.to_array();
    let mut t = state0.t;
    let mut h = config.h_init.clamp(config.h_min, config.h_max);
    let mut drift: f64 = 0.0;
    let mut accepted: u64 = 0;
    let mut attempts: u64 = 0;
    // The Yukawa field is built from odd powers of r, so it jumps between
    // Riemann sheets when r^2 crosses the negative real axis; such
    // trajectories leave the principal sheet and are excluded. An even field
    // (Lennard-Jones depends on r^2 only) or a free flight has no cut.
    let branch_sensitive = spec.v0 != 0.0 && spec.kind == PotentialKind::Yukawa;
    let mut s_prev = state0.q.dot_self();

    let finish = |outcome, final_state, accepted, drift| {
        Ok(TrajectoryRecord {
            outcome,
            final_state,
            steps: accepted,
            energy_drift: drift,
        })
    };

    loop {
        if t - state0.t >= config.t_max {
            return finish(Outcome::Trapped, PhaseState::from_array(&y, t), accepted, drift);
        }
        if attempts >= config.max_steps {
            return finish(
                Outcome::StepBudgetExceeded,
                PhaseState::from_array(&y, t),
                accepted,
                drift,
            );
        }
        attempts += 1;
        let (y4, y5) = match rkf45_step(&mut field, t, &y, h) {
            Ok(pair) => pair,
            Err(_) => {
                return finish(Outcome::BranchCut, PhaseState::from_array(&y, t), accepted, drift)
            }
        };
        let err = error_norm(&y, &y4, &y5, config.atol, config.rtol);
        if !err.is_finite() {
            return finish(Outcome::BranchCut, PhaseState::from_array(&y, t), accepted, drift);
        }
        if err <= 1.0 {
            let y_new = if config.local_extrapolation { y5 } else { y4 };
            if y_new.iter().any(|v| !v.is_finite()) {
                return finish(Outcome::BranchCut, PhaseState::from_array(&y, t), accepted, drift);
            }
            let t_new = t + h;
            let s_new = PhaseState::from_array(&y_new, t_new);
            if branch_sensitive {
                let s_sq = s_new.q.dot_self();
                let flipped = (s_prev.im > 0.0 && s_sq.im < 0.0)
                    || (s_prev.im < 0.0 && s_sq.im > 0.0);
                if flipped {
                    let lam = s_prev.im / (s_prev.im - s_sq.im);
                    if s_prev.re + lam * (s_sq.re - s_prev.re) < 0.0 {
                        return finish(Outcome::BranchCut, s_new, accepted, drift);
                    }
                }
                s_prev = s_sq;
            }
            match hamiltonian_rel(units, spec, &s_new) {
                Ok(hv) => drift = drift.max((hv - h0).norm()),
                Err(_) => return finish(Outcome::BranchCut, s_new, accepted, drift),
            }
            // Exit-plane classification with linear interpolation onto the plane.
            let (z_prev, z_new, pz_new) = (y[4], y_new[4], y_new[10]);
            let crossing = if z_new >= config.z_cut && pz_new > 0.0 {
                Some((Outcome::Transmitted, config.z_cut))
            } else if z_new <= -config.z_cut && pz_new < 0.0 {
                Some((Outcome::Reflected, -config.z_cut))
            } else {
                None
            };
            if let Some((outcome, plane)) = crossing {
                let lambda = ((plane - z_prev) / (z_new - z_prev)).clamp(0.0, 1.0);
                let mut y_cross = [0.0; 12];
                for i in 0..12 {
                    y_cross[i] = y[i] + lambda * (y_new[i] - y[i]);
                }
                let final_state = PhaseState::from_array(&y_cross, t + lambda * h);
                return finish(outcome, final_state, accepted + 1, drift);
            }
            y = y_new;
            t = t_new;
            accepted += 1;
            observer(&s_new, h);
        } else if h <= config.h_min * (1.0 + 1e-9) {
            // Tolerance unreachable at the smallest step: singular approach.
            return finish(Outcome::BranchCut, PhaseState::from_array(&y, t), accepted, drift);
        }
        let factor = if err > 0.0 {
            (config.safety * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h * factor).clamp(config.h_min, config.h_max);
    }
}

/// [`integrate_trajectory_with`] without an observer.
pub fn integrate_trajectory(
    units: UnitSystem,
    spec: &PotentialSpec,
    config: &IntegratorConfig,
    state0: &PhaseState,
) -> Result<TrajectoryRecord, CdynError> {
    integrate_trajectory_with(units, spec, config, state0, &mut |_: &PhaseState, _| {})
}

/// PT transform: q -> -conj(q), p -> conj(p), t -> -t. An involution that
/// maps solutions of the complexified equations of motion to solutions and
/// conjugates the Hamiltonian.
pub fn pt_transform(s: &PhaseState) -> PhaseState {
    let flip = |c: num_complex::Complex64| num_complex::Complex64::new(-c.re, c.im);
    let conj = |c: num_complex::Complex64| c.conj();
    PhaseState {
        q: crate::model::ComplexVec3::new(flip(s.q.x), flip(s.q.y), flip(s.q.z)),
        p: crate::model::ComplexVec3::new(conj(s.p.x), conj(s.p.y), conj(s.p.z)),
        t: -s.t,
    }
}

fn wrap_angle(mut d: f64) -> f64 {
    d %= std::f64::consts::TAU;
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    } else if d <= -std::f64::consts::PI {
        d += std::f64::consts::TAU;
    }
    d
}

/// Accumulated scattering-plane rotation in excess of the direct transit:
/// with theta = atan2(Re x, Re z) per sample, the unwrapped total rotation
/// minus the wrapped net rotation. Zero for a straight pass, 2 pi k for k
/// completed loops around the scatterer. Consecutive samples must rotate by
/// less than pi/2 for the unwrapping to be unambiguous.
pub fn winding_angle(states: &[PhaseState]) -> Result<f64, CdynError> {
    if states.len() < 2 {
        return Ok(0.0);
    }
    let theta = |s: &PhaseState| s.q.x.re.atan2(s.q.z.re);
    let first = theta(&states[0]);
    let mut prev = first;
    let mut total = 0.0;
    for s in &states[1..] {
        let cur = theta(s);
        let d = wrap_angle(cur - prev);
        if d.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(CdynError::InsufficientSamples { dtheta: d });
        }
        total += d;
        prev = cur;
    }
    Ok((total - wrap_angle(prev - first)).abs())
}
