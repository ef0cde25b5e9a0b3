//! Physical model: unit system, interaction potentials, and the complexified
//! relative-motion Hamiltonian of a confined two-body collision.
//!
//! The relative Hamiltonian is
//!
//! ```text
//! H = p^2 / 2mu + mu omega^2 (x^2 + y^2) / 2 + V(r),   r = sqrt(x^2+y^2+z^2)
//! ```
//!
//! with hbar = mu = 1. All coordinates and momenta may be complex; `r` is
//! always the principal branch of the square root, so `Re r > 0` away from
//! the branch cut along the negative real axis of `x^2+y^2+z^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shorthand complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Errors from evaluating the model at an invalid point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// The squared radius landed on the branch cut (real and <= 0).
    #[error("branch cut: x^2+y^2+z^2 = {s} is real and non-positive")]
    BranchCut { s: f64 },
    /// A potential was evaluated at a radius outside the principal domain.
    #[error("domain: potential evaluated at r = {r} with Re r <= 0")]
    Domain { r: C64 },
    /// Inconsistent physical parameters.
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Unit system: hbar = mu = 1, trap frequency configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Transverse trap frequency omega (energies in hbar*omega when omega = 1).
    pub omega: f64,
}

impl UnitSystem {
    pub fn new(omega: f64) -> Self {
        Self { omega }
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { omega: 1.0 }
    }
}

/// Which short-range scatterer sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// Attractive screened Coulomb: V = -v0 (r0/r) exp(-r/r0).
    Yukawa,
    /// 12-6 potential: V = 4 v0 [(sigma/r)^12 - (sigma/r)^6].
    LennardJones,
}

/// A scatterer: kind, depth `v0`, and length scale `range`
/// (screening length r0 for Yukawa, sigma for Lennard-Jones).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub v0: f64,
    pub range: f64,
}

impl PotentialSpec {
    pub fn yukawa(v0: f64, r0: f64) -> Self {
        Self { kind: PotentialKind::Yukawa, v0, range: r0 }
    }

    pub fn lennard_jones(v0: f64, sigma: f64) -> Self {
        Self { kind: PotentialKind::LennardJones, v0, range: sigma }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.range > 0.0) || !self.range.is_finite() {
            return Err(ModelError::Argument(format!(
                "potential range must be positive, got {}",
                self.range
            )));
        }
        if !self.v0.is_finite() || self.v0 < 0.0 {
            return Err(ModelError::Argument(format!(
                "potential depth v0 must be finite and >= 0, got {}",
                self.v0
            )));
        }
        Ok(())
    }
}

/// Complex 3-vector (positions or momenta).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexVec3 {
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl ComplexVec3 {
    pub fn new(x: C64, y: C64, z: C64) -> Self {
        Self { x, y, z }
    }

    /// Vector with purely real components.
    pub fn real(x: f64, y: f64, z: f64) -> Self {
        Self { x: C64::new(x, 0.0), y: C64::new(y, 0.0), z: C64::new(z, 0.0) }
    }

    /// Complex (unconjugated) self-dot `x^2 + y^2 + z^2`.
    pub fn dot_self(&self) -> C64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Largest absolute value over the six real components.
    pub fn max_abs(&self) -> f64 {
        [self.x.re, self.x.im, self.y.re, self.y.im, self.z.re, self.z.im]
            .into_iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// A point of complexified phase space at a given (real) time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub q: ComplexVec3,
    pub p: ComplexVec3,
    pub t: f64,
}

impl PhaseState {
    pub fn new(q: ComplexVec3, p: ComplexVec3, t: f64) -> Self {
        Self { q, p, t }
    }

    /// Pack the twelve real phase-space components (time excluded).
    /// Order: Re/Im of x, y, z, then Re/Im of px, py, pz.
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.q.x.re, self.q.x.im, self.q.y.re, self.q.y.im, self.q.z.re, self.q.z.im,
            self.p.x.re, self.p.x.im, self.p.y.re, self.p.y.im, self.p.z.re, self.p.z.im,
        ]
    }

    pub fn from_array(y: &[f64; 12], t: f64) -> Self {
        Self {
            q: ComplexVec3::new(
                C64::new(y[0], y[1]),
                C64::new(y[2], y[3]),
                C64::new(y[4], y[5]),
            ),
            p: ComplexVec3::new(
                C64::new(y[6], y[7]),
                C64::new(y[8], y[9]),
                C64::new(y[10], y[11]),
            ),
            t,
        }
    }
}

/// Incident-channel parameters of a scattering event.
///
/// `e_perp` is the transverse (oscillator) energy, `e_par` the asymptotic
/// longitudinal energy, `lz` the angular momentum about the waveguide axis.
/// When built from quantum labels `(n, lz)` the transverse energy is exactly
/// `(2n + |lz| + 1) * omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterParams {
    pub e_perp: f64,
    pub e_par: f64,
    pub lz: f64,
    /// Radial quantum number when constructed from channel labels.
    #[serde(default)]
    pub n: Option<u32>,
}

impl ScatterParams {
    /// Build from continuous energies (no channel label attached).
    pub fn new(e_perp: f64, e_par: f64, lz: f64) -> Self {
        Self { e_perp, e_par, lz, n: None }
    }

    /// Build from oscillator channel labels; e_perp = (2n + |lz| + 1) omega exactly.
    pub fn from_channel(n: u32, lz: i32, e_par: f64, units: UnitSystem) -> Self {
        Self {
            e_perp: transverse_energy(n, lz, units),
            e_par,
            lz: lz as f64,
            n: Some(n),
        }
    }

    pub fn validate(&self, units: UnitSystem) -> Result<(), ModelError> {
        if !(self.e_par > 0.0) {
            return Err(ModelError::Argument(format!(
                "longitudinal energy must be positive, got {}",
                self.e_par
            )));
        }
        if self.e_perp < self.lz.abs() * units.omega {
            return Err(ModelError::Argument(format!(
                "transverse energy {} below centrifugal floor |lz| omega = {}",
                self.e_perp,
                self.lz.abs() * units.omega
            )));
        }
        Ok(())
    }

    /// Total (real) energy of the incident asymptotic state.
    pub fn total_energy(&self) -> f64 {
        self.e_perp + self.e_par
    }
}

/// Transverse oscillator level: E_perp = (2n + |lz| + 1) omega.
pub fn transverse_energy(n: u32, lz: i32, units: UnitSystem) -> f64 {
    (2.0 * n as f64 + lz.abs() as f64 + 1.0) * units.omega
}

/// Principal-branch interparticle distance r = sqrt(x^2 + y^2 + z^2).
///
/// Errors with `BranchCut` when the squared radius is real and non-positive,
/// i.e. the trajectory sits exactly on the cut of the principal square root.
pub fn complex_radius(q: ComplexVec3) -> Result<C64, ModelError> {
    let s = q.dot_self();
    if s.im == 0.0 && s.re <= 0.0 {
        return Err(ModelError::BranchCut { s: s.re });
    }
    Ok(s.sqrt())
}

/// Potential at (complex) radius r on the principal branch.
pub fn potential_value(spec: &PotentialSpec, r: C64) -> Result<C64, ModelError> {
    if !(r.re > 0.0) {
        return Err(ModelError::Domain { r });
    }
    let v = match spec.kind {
        PotentialKind::Yukawa => {
            // -v0 (r0/r) exp(-r/r0)
            -spec.v0 * spec.range / r * (-r / spec.range).exp()
        }
        PotentialKind::LennardJones => {
            let s2 = (C64::from(spec.range) / r) * (C64::from(spec.range) / r);
            let s6 = s2 * s2 * s2;
            4.0 * spec.v0 * (s6 * s6 - s6)
        }
    };
    Ok(v)
}

/// Radial derivative dV/dr at (complex) radius r.
pub fn potential_derivative(spec: &PotentialSpec, r: C64) -> Result<C64, ModelError> {
    if !(r.re > 0.0) {
        return Err(ModelError::Domain { r });
    }
    let d = match spec.kind {
        PotentialKind::Yukawa => {
            // v0 exp(-r/r0) (r + r0) / r^2
            spec.v0 * (-r / spec.range).exp() * (r + spec.range) / (r * r)
        }
        PotentialKind::LennardJones => {
            let s2 = (C64::from(spec.range) / r) * (C64::from(spec.range) / r);
            let s6 = s2 * s2 * s2;
            24.0 * spec.v0 / r * (s6 - 2.0 * s6 * s6)
        }
    };
    Ok(d)
}

/// Gradient of V with respect to the complex coordinates: dV/dq = V'(r) q / r.
pub fn potential_gradient(spec: &PotentialSpec, q: ComplexVec3) -> Result<ComplexVec3, ModelError> {
    let r = complex_radius(q)?;
    let factor = potential_derivative(spec, r)? / r;
    Ok(ComplexVec3::new(factor * q.x, factor * q.y, factor * q.z))
}

/// Full complexified relative Hamiltonian (kinetic + confinement + interaction).
pub fn hamiltonian_rel(
    units: UnitSystem,
    spec: &PotentialSpec,
    state: &PhaseState,
) -> Result<C64, ModelError> {
    let r = complex_radius(state.q)?;
    let v = potential_value(spec, r)?;
    Ok(hamiltonian_asymptotic(units, state) + v)
}

/// Hamiltonian without the interaction term: kinetic energy plus transverse
/// confinement. This is the conserved energy bookkeeping of the asymptotic
/// region where the scatterer is out of reach.
pub fn hamiltonian_asymptotic(units: UnitSystem, state: &PhaseState) -> C64 {
    let p2 = state.p.dot_self();
    let rho2 = state.q.x * state.q.x + state.q.y * state.q.y;
    0.5 * p2 + 0.5 * units.omega * units.omega * rho2
}
