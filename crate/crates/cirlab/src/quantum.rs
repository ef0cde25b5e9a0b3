//! Coupled-channel quantum transmission under 2D transverse harmonic
//! confinement: Legendre angular discretization, mapped radial finite
//! differences, asymptotic matching on the sphere r = r_m, and the
//! free-space s-wave scattering length.
//!
//! The wave function is collocated at the Gauss–Legendre angles θ_j; the
//! weighted radial amplitudes w_j(r) = √λ_j · r · ψ(r, θ_j) obey
//!
//! ```text
//! w″ = [2(V(r) + ½ω²r²sin²θ_j − E)] w + (1/r²) C w,
//! ```
//!
//! with the dense angular-coupling matrix
//! C_jj' = √(λ_j λ_j') Σ_l l(l+1) P̃_l(cosθ_j) P̃_l(cosθ_j'). The n_θ
//! regular solutions are propagated from the origin as ratio matrices
//! R_k = W_{k+1} W_k⁻¹ of the three-point recursion, which stay bounded
//! through deeply closed channels where the raw fundamental matrix would
//! traverse hundreds of e-foldings.

use crate::exec::map_indexed;
use crate::mc::{SweepAxis, TransmissionCurve, TransmissionEstimate};
use crate::model::{
    potential_value, transverse_energy, ModelError, PotentialKind, PotentialSpec, ScatterParams,
    UnitSystem, C64,
};
use crate::quad::{gauss_legendre, legendre_normalized};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Errors of the quantum solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Matching system condition number above 10¹² (r_m or grids too coarse).
    #[error("ill-conditioned matching system: condition number {cond:.3e}")]
    IllConditionedMatch { cond: f64 },
    /// Total energy within 10⁻¹⁰ of a channel threshold (k_n → 0).
    #[error("energy {e} too close to a channel threshold")]
    NearThreshold { e: f64 },
    /// Total energy below the lowest transverse threshold.
    #[error("no open channels at energy {e}")]
    NoOpenChannels { e: f64 },
    #[error("invalid quantum configuration: {0}")]
    Config(String),
}

fn real_potential(spec: &PotentialSpec, r: f64) -> Result<f64, ModelError> {
    Ok(potential_value(spec, C64::new(r, 0.0))?.re)
}

/// Legendre values P_0..P_lmax at one point by the three-term recurrence.
fn legendre_upto(l_max: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    if l_max == 0 {
        return p;
    }
    p.push(x);
    for l in 1..l_max {
        let next = ((2 * l + 1) as f64 * x * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
        p.push(next);
    }
    p
}

/// Laguerre value and derivative L_n(t), L_n'(t).
fn laguerre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut lm1 = 0.0;
    let mut l = 1.0;
    for k in 0..n {
        let next = ((2 * k + 1) as f64 - t) * l - (k as f64) * lm1;
        lm1 = l;
        l = next / (k + 1) as f64;
    }
    let deriv = if n == 0 {
        0.0
    } else if t.abs() < 1e-10 {
        // t L_n' = n (L_n − L_{n−1}) degenerates at t = 0 where L_n'(0) = −n.
        -(n as f64)
    } else {
        n as f64 * (l - lm1) / t
    };
    (l, deriv)
}

/// Gauss–Legendre angular collocation grid with the Legendre basis map.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    pub n_theta: usize,
    /// cosθ_j, strictly increasing in (−1, 1).
    pub x: Vec<f64>,
    /// Gauss weights λ_j (Σ λ_j = 2).
    pub lambda: Vec<f64>,
    /// P̂_lj = λ_j P_l(cosθ_j).
    pub p_hat: DMatrix<f64>,
    /// A = P̂⁻¹.
    pub a: DMatrix<f64>,
}

/// Build the angular grid; nodes from Newton iteration, A by inversion.
pub fn build_angular_grid(n_theta: usize) -> Result<AngularGrid, QuantumError> {
    if n_theta < 4 {
        return Err(QuantumError::Config(format!("n_theta must be at least 4, got {n_theta}")));
    }
    let (x, lambda) = gauss_legendre(n_theta);
    let mut p_hat = DMatrix::zeros(n_theta, n_theta);
    for (j, &xj) in x.iter().enumerate() {
        let p = legendre_upto(n_theta - 1, xj);
        for l in 0..n_theta {
            p_hat[(l, j)] = lambda[j] * p[l];
        }
    }
    let a = p_hat
        .clone()
        .try_inverse()
        .ok_or_else(|| QuantumError::Config("angular basis matrix is singular".into()))?;
    Ok(AngularGrid { n_theta, x, lambda, p_hat, a })
}

impl AngularGrid {
    /// Angular-coupling matrix
    /// C_jj' = √(λ_j λ_j') Σ_l l(l+1) P̃_l(x_j) P̃_l(x_j').
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let n = self.n_theta;
        let mut c = DMatrix::zeros(n, n);
        let ptil: Vec<Vec<f64>> =
            self.x.iter().map(|&xj| (0..n).map(|l| legendre_normalized(l, xj)).collect()).collect();
        for j in 0..n {
            for jp in j..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += (l * (l + 1)) as f64 * ptil[j][l] * ptil[jp][l];
                }
                let v = (self.lambda[j] * self.lambda[jp]).sqrt() * s;
                c[(j, jp)] = v;
                c[(jp, j)] = v;
            }
        }
        c
    }
}

/// Exponentially mapped radial grid on (0, r_m].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n_r: usize,
    pub r_m: f64,
    pub gamma: f64,
    /// r_0 = 0 (virtual origin) through r_{n_r} = r_m.
    pub r: Vec<f64>,
}

/// Build the mapped radial grid r_k = r_m (e^{γ k/n} − 1)/(e^γ − 1).
pub fn build_radial_grid(n_r: usize, r_m: f64, gamma: f64) -> Result<RadialGrid, QuantumError> {
    if n_r < 50 {
        return Err(QuantumError::Config(format!("n_r must be at least 50, got {n_r}")));
    }
    if !(r_m > 0.0) || !(gamma > 0.0) {
        return Err(QuantumError::Config(format!(
            "r_m and gamma must be positive, got r_m = {r_m}, gamma = {gamma}"
        )));
    }
    let denom = gamma.exp_m1();
    let r = (0..=n_r).map(|k| r_m * (gamma * k as f64 / n_r as f64).exp_m1() / denom).collect();
    Ok(RadialGrid { n_r, r_m, gamma, r })
}

/// Open transverse channels at total energy E (m = 0 sector).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Azimuthal quantum number (fixed 0).
    pub m: i32,
    pub e: f64,
    pub omega: f64,
    /// Number of open channels n_e.
    pub n_open: usize,
    /// Longitudinal wavenumbers k_n = √(2(E − E_n)) of the open channels.
    pub k: Vec<f64>,
}

impl ChannelSet {
    /// Enumerate open channels; rejects energies at or below threshold.
    pub fn new(units: UnitSystem, e: f64) -> Result<Self, QuantumError> {
        let mut k = Vec::new();
        let mut n = 0u32;
        loop {
            let threshold = transverse_energy(n, 0, units);
            if (e - threshold).abs() < 1e-10 {
                return Err(QuantumError::NearThreshold { e });
            }
            if e < threshold {
                break;
            }
            k.push((2.0 * (e - threshold)).sqrt());
            n += 1;
        }
        if k.is_empty() {
            return Err(QuantumError::NoOpenChannels { e });
        }
        Ok(ChannelSet { m: 0, e, omega: units.omega, n_open: k.len(), k })
    }

    /// Transverse eigenfunction Φ_n(ρ) = √(ω/π) L_n(ωρ²) e^{−ωρ²/2},
    /// normalized as ∫ |Φ|² ρ dρ dφ = 1.
    pub fn phi(&self, n: usize, rho: f64) -> f64 {
        let t = self.omega * rho * rho;
        let (l, _) = laguerre_with_derivative(n, t);
        (self.omega / std::f64::consts::PI).sqrt() * l * (-0.5 * t).exp()
    }

    /// Radial derivative dΦ_n/dρ.
    pub fn phi_prime(&self, n: usize, rho: f64) -> f64 {
        let t = self.omega * rho * rho;
        let (l, lp) = laguerre_with_derivative(n, t);
        (self.omega / std::f64::consts::PI).sqrt()
            * self.omega
            * rho
            * (-0.5 * t).exp()
            * (2.0 * lp - l)
    }
}

/// Discretization parameters of the coupled-channel solve.
///
/// The angular basis must resolve the transverse Gaussian on the matching
/// sphere, whose cosθ boundary layer shrinks like 1/(ω r_match²): the
/// required Legendre degree grows with ω r_match², so a compact sphere with
/// a dense radial mesh converges far faster than a distant one. The
/// defaults hold the free-wave transmission identity T = 1 to better than
/// 10⁻⁸ and cost about a second per solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumConfig {
    pub n_theta: usize,
    pub n_r: usize,
    pub r_match: f64,
    pub gamma: f64,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        QuantumConfig { n_theta: 48, n_r: 10240, r_match: 8.0, gamma: 4.0 }
    }
}

impl QuantumConfig {
    pub fn validate(&self) -> Result<(), QuantumError> {
        build_radial_grid(self.n_r, self.r_match, self.gamma)?;
        if self.n_theta < 4 {
            return Err(QuantumError::Config(format!(
                "n_theta must be at least 4, got {}",
                self.n_theta
            )));
        }
        Ok(())
    }
}

/// Amplitudes and flux sums of one coupled-channel solve; indices are
/// (outgoing channel, incident channel) over the open set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    pub f_plus: DMatrix<C64>,
    pub f_minus: DMatrix<C64>,
    /// Flux-normalized per-channel transmission (k_{n'}/k_n)|δ + f⁺|².
    pub t_matrix: DMatrix<f64>,
    /// Total transmission per incident channel.
    pub t: Vec<f64>,
    /// Total reflection per incident channel.
    pub r: Vec<f64>,
    /// |T + R − 1| per incident channel.
    pub unitarity_defect: Vec<f64>,
    pub n_open: usize,
    /// Condition number of the (equilibrated) matching system.
    pub cond: f64,
}

/// Propagate the regular solutions and match to the channel basis at r_m.
pub fn solve_and_match(
    units: UnitSystem,
    spec: &PotentialSpec,
    config: &QuantumConfig,
    e: f64,
) -> Result<ScatteringSolution, QuantumError> {
    config.validate()?;
    spec.validate()?;
    let channels = ChannelSet::new(units, e)?;
    let ang = build_angular_grid(config.n_theta)?;
    let rad = build_radial_grid(config.n_r, config.r_match, config.gamma)?;
    let n = config.n_theta;
    let omega = units.omega;
    let coupling = ang.coupling_matrix();

    // Ratio recursion R_k = W_{k+1} W_k⁻¹ for the three-point stencil
    // a₋ W_{k−1} + a₀ W_k + a₊ W_{k+1} = Q_k W_k, from W_0 = 0, W_1 = I.
    let q_at = |k: usize| -> Result<DMatrix<f64>, QuantumError> {
        let r = rad.r[k];
        let v = real_potential(spec, r)?;
        let mut q = &coupling / (r * r);
        for j in 0..n {
            let sin2 = 1.0 - ang.x[j] * ang.x[j];
            q[(j, j)] += 2.0 * (v + 0.5 * omega * omega * r * r * sin2 - e);
        }
        Ok(q)
    };
    let stencil = |k: usize| {
        let hm = rad.r[k] - rad.r[k - 1];
        let hp = rad.r[k + 1] - rad.r[k];
        (2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp)))
    };
    // k = 1 with W_0 = 0: R_1 = (Q_1 − a₀ I)/a₊.
    let (_, a0, ap) = stencil(1);
    let mut r_prev = {
        let mut b = q_at(1)?;
        for j in 0..n {
            b[(j, j)] -= a0;
        }
        b / ap
    };
    let mut r_last_two = [r_prev.clone(), r_prev.clone()];
    for k in 2..rad.n_r {
        let (am, a0, ap) = stencil(k);
        let inv = r_prev.clone().lu().try_inverse().ok_or_else(|| {
            QuantumError::Config("singular ratio matrix during radial propagation".into())
        })?;
        let mut b = q_at(k)?;
        for j in 0..n {
            b[(j, j)] -= a0;
        }
        let r_k = (b - inv * am) / ap;
        r_last_two = [r_last_two[1].clone(), r_k.clone()];
        r_prev = r_k;
    }
    // Fix the free right factor by W_{n_r} = I at the matching plane.
    let w_n = DMatrix::<f64>::identity(n, n);
    let w_nm1 = r_last_two[1].clone().lu().try_inverse().ok_or_else(|| {
        QuantumError::Config("singular ratio matrix at the matching plane".into())
    })?;
    let w_nm2 = r_last_two[0]
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| QuantumError::Config("singular ratio matrix at the matching plane".into()))?
        * &w_nm1;
    // One-sided three-point derivative at r_m on the non-uniform grid.
    let h1 = rad.r[rad.n_r - 1] - rad.r[rad.n_r - 2];
    let h2 = rad.r[rad.n_r] - rad.r[rad.n_r - 1];
    let d0 = h2 / (h1 * (h1 + h2));
    let d1 = -(h1 + h2) / (h1 * h2);
    let d2 = (h1 + 2.0 * h2) / (h2 * (h1 + h2));
    let w_prime = w_nm2 * d0 + w_nm1 * d1 + &w_n * d2;

    // Matching rows: w_j and w_j' at each angle against the channel basis
    // √λ_j r [Φ_n(ρ_j) e^{±i k_n z_j}] with the scattered terms gated by
    // hemisphere. Unknowns: β (n), f⁺ (n_open), f⁻ (n_open).
    let n_open = channels.n_open;
    let n_unk = n + 2 * n_open;
    let r_m = rad.r_m;
    let mut mat = DMatrix::<C64>::zeros(2 * n, n_unk);
    let mut rhs = DMatrix::<C64>::zeros(2 * n, n_open);
    for j in 0..n {
        let xj = ang.x[j];
        let sl = ang.lambda[j].sqrt();
        let z = r_m * xj;
        let rho = r_m * (1.0 - xj * xj).max(0.0).sqrt();
        let sin_t = rho / r_m;
        for c in 0..n {
            mat[(j, c)] = C64::new(w_n[(j, c)], 0.0);
            mat[(n + j, c)] = C64::new(w_prime[(j, c)], 0.0);
        }
        for m in 0..n_open {
            let k = channels.k[m];
            let phi = channels.phi(m, rho);
            let dphi = channels.phi_prime(m, rho);
            // value and radial derivative of r Φ(ρ) e^{s i k z} at fixed θ
            let term = |sign: f64| -> (C64, C64) {
                let phase = C64::from_polar(1.0, sign * k * z);
                let val = phase * (sl * r_m * phi);
                let der = phase
                    * C64::new(
                        sl * (phi + r_m * sin_t * dphi),
                        sl * r_m * phi * sign * k * xj,
                    );
                (val, der)
            };
            // incident e^{+ikz} on both hemispheres, moved to the RHS
            let (iv, id) = term(1.0);
            rhs[(j, m)] = iv;
            rhs[(n + j, m)] = id;
            // forward-scattered e^{+ikz} on cosθ > 0
            if xj > 0.0 {
                let (v, d) = term(1.0);
                mat[(j, n + m)] = -v;
                mat[(n + j, n + m)] = -d;
            }
            // back-scattered e^{−ikz} on cosθ < 0
            if xj < 0.0 {
                let (v, d) = term(-1.0);
                mat[(j, n + n_open + m)] = -v;
                mat[(n + j, n + n_open + m)] = -d;
            }
        }
    }
    // Column equilibration keeps the condition estimate meaningful.
    let mut scale = DVector::<f64>::from_element(n_unk, 1.0);
    for c in 0..n_unk {
        let m = (0..2 * n).map(|r| mat[(r, c)].norm()).fold(0.0, f64::max);
        if m > 0.0 {
            scale[c] = 1.0 / m;
            for r in 0..2 * n {
                mat[(r, c)] *= C64::new(scale[c], 0.0);
            }
        }
    }
    let svd = mat.svd(true, true);
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[svd.singular_values.len() - 1];
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < 1e12) {
        return Err(QuantumError::IllConditionedMatch { cond });
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| QuantumError::Config(format!("matching solve failed: {e}")))?;

    let mut f_plus = DMatrix::<C64>::zeros(n_open, n_open);
    let mut f_minus = DMatrix::<C64>::zeros(n_open, n_open);
    for inc in 0..n_open {
        for m in 0..n_open {
            f_plus[(m, inc)] = sol[(n + m, inc)] * scale[n + m];
            f_minus[(m, inc)] = sol[(n + n_open + m, inc)] * scale[n + n_open + m];
        }
    }
    let mut t_matrix = DMatrix::<f64>::zeros(n_open, n_open);
    let mut t = vec![0.0; n_open];
    let mut r_tot = vec![0.0; n_open];
    for inc in 0..n_open {
        for m in 0..n_open {
            let delta = if m == inc { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            let flux = channels.k[m] / channels.k[inc];
            t_matrix[(m, inc)] = flux * (delta + f_plus[(m, inc)]).norm_sqr();
            t[inc] += t_matrix[(m, inc)];
            r_tot[inc] += flux * f_minus[(m, inc)].norm_sqr();
        }
    }
    let unitarity_defect = t.iter().zip(r_tot.iter()).map(|(a, b)| (a + b - 1.0).abs()).collect();
    Ok(ScatteringSolution {
        f_plus,
        f_minus,
        t_matrix,
        t,
        r: r_tot,
        unitarity_defect,
        n_open,
        cond,
    })
}

/// One quantum transmission value with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumPoint {
    pub t: f64,
    pub r: f64,
    pub unitarity_defect: f64,
    pub n_open: usize,
}

/// Total transmission for the incident channel described by `params`
/// (channel index `params.n`, m = 0 only).
pub fn transmission_quantum(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    config: &QuantumConfig,
) -> Result<QuantumPoint, QuantumError> {
    if params.lz != 0.0 {
        return Err(QuantumError::Config(
            "quantum solves are restricted to the m = 0 sector (Lz = 0)".into(),
        ));
    }
    let inc = params.n.unwrap_or(0) as usize;
    let e = params.e_perp + params.e_par;
    let solution = solve_and_match(units, spec, config, e)?;
    if inc >= solution.n_open {
        return Err(QuantumError::Config(format!(
            "incident channel {inc} is closed at energy {e} ({} open)",
            solution.n_open
        )));
    }
    Ok(QuantumPoint {
        t: solution.t[inc],
        r: solution.r[inc],
        unitarity_defect: solution.unitarity_defect[inc],
        n_open: solution.n_open,
    })
}

/// Deterministic sweep of the quantum transmission along one axis; shares
/// the curve container with the Monte Carlo module (stderr = 0).
pub fn sweep_quantum(
    units: UnitSystem,
    spec: &PotentialSpec,
    params: &ScatterParams,
    axis: SweepAxis,
    grid: &[f64],
    config: &QuantumConfig,
) -> Result<TransmissionCurve, QuantumError> {
    if grid.is_empty() {
        return Err(QuantumError::Config("sweep grid must be non-empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QuantumError::Config("sweep grid must be strictly increasing".into()));
    }
    let points = map_indexed(grid.len(), |i| {
        let (point_spec, point_params) = axis.apply(grid[i], spec, params);
        transmission_quantum(units, &point_spec, &point_params, config)
            .map(|p| TransmissionEstimate {
                t: p.t,
                stderr: 0.0,
                n_trans: 0,
                n_refl: 0,
                n_excluded: 0,
                n_trapped: 0,
                n_branch_cut: 0,
                n_step_budget: 0,
            })
            .map_err(|e| e.to_string())
    });
    Ok(TransmissionCurve { axis, grid: grid.to_vec(), points })
}

/// Free-space s-wave scattering length and bound-state count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringLength {
    /// a_s = r − u/u' in the asymptotic linear region.
    pub a_s: f64,
    /// Set when |a_s| > 10⁸ (at a bound-state threshold).
    pub diverged: bool,
    /// Radial nodes of the zero-energy solution = bound s-states.
    pub nodes: usize,
}

/// Integrate the zero-energy s-wave equation u″ = 2V u outward and extract
/// a_s from u ∝ (r − a_s) where |V| < 10⁻¹⁴.
pub fn scattering_length(spec: &PotentialSpec) -> Result<ScatteringLength, QuantumError> {
    spec.validate()?;
    // Start just outside the origin (regular solution u ∝ r), or inside the
    // repulsive core for Lennard-Jones where u is WKB-dead.
    let r_start = match spec.kind {
        PotentialKind::Yukawa => 1e-8 * spec.range,
        PotentialKind::LennardJones => 0.35 * spec.range,
    };
    // End of the asymptotic tail: |V| < 1e-14 (absolute).
    let r_end = match spec.kind {
        PotentialKind::Yukawa => {
            if spec.v0 == 0.0 {
                10.0 * spec.range
            } else {
                let mut r = 35.0 * spec.range;
                for _ in 0..50 {
                    r = spec.range * (spec.v0.abs() * spec.range / (1e-14 * r)).ln().max(1.0);
                }
                r.max(10.0 * spec.range)
            }
        }
        PotentialKind::LennardJones => {
            if spec.v0 == 0.0 {
                10.0 * spec.range
            } else {
                spec.range * (4.0 * spec.v0.abs() / 1e-14).powf(1.0 / 6.0)
            }
        }
    };
    let rhs = |r: f64, u: f64| -> Result<f64, QuantumError> {
        Ok(2.0 * real_potential(spec, r)? * u)
    };
    let mut u = match spec.kind {
        PotentialKind::Yukawa => r_start,
        PotentialKind::LennardJones => 0.0,
    };
    let mut du = 1.0;
    let mut nodes = 0usize;
    let mut prev_sign: Option<bool> = None;
    // Two uniform RK4 phases: dense through the potential region, coarser
    // along the tail.
    let phases =
        [(r_start, (2.0 * spec.range).min(r_end), 40_000usize), ((2.0 * spec.range).min(r_end), r_end, 40_000)];
    for &(a, b, steps) in &phases {
        if b <= a {
            continue;
        }
        let h = (b - a) / steps as f64;
        for i in 0..steps {
            let rk = a + i as f64 * h;
            let k1u = du;
            let k1d = rhs(rk, u)?;
            let k2u = du + 0.5 * h * k1d;
            let k2d = rhs(rk + 0.5 * h, u + 0.5 * h * k1u)?;
            let k3u = du + 0.5 * h * k2d;
            let k3d = rhs(rk + 0.5 * h, u + 0.5 * h * k2u)?;
            let k4u = du + h * k3d;
            let k4d = rhs(rk + h, u + h * k3u)?;
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            du += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            // Renormalize against overflow near strong couplings.
            let m = u.abs().max(du.abs());
            if m > 1e100 {
                u /= m;
                du /= m;
            }
            if u != 0.0 {
                let sign = u > 0.0;
                if prev_sign.is_some_and(|p| p != sign) {
                    nodes += 1;
                }
                prev_sign = Some(sign);
            }
        }
    }
    let a_s = r_end - u / du;
    Ok(ScatteringLength { a_s, diverged: a_s.abs() > 1e8, nodes })
}
