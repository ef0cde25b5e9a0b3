//! Experiment configuration: one TOML document, one section per
//! subsystem. Every key is optional and falls back to a documented
//! default, unknown keys are parse errors rather than silent typos, and
//! validation failures name the key they reject. Parsing a serialized
//! configuration reproduces it exactly, so the echo written into the
//! output directory re-runs the experiment verbatim.

use std::path::PathBuf;

use cirlab::cdyn::IntegratorConfig;
use cirlab::mc::{GridSpec, SweepAxis};
use cirlab::model::{PotentialKind, PotentialSpec, ScatterParams, UnitSystem};
use cirlab::quantum::QuantumConfig;
use cirlab::semiclassics::SamplingConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Experiment selected by the CLI verb; the optional `mode` key must
/// agree with the verb when both are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ClassicalSweep,
    QuantumSweep,
    FreespaceTheta,
    DensityMap,
    Convergence,
    BohrSommerfeld,
    ScatteringLength,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ClassicalSweep => "classical-sweep",
            Mode::QuantumSweep => "quantum-sweep",
            Mode::FreespaceTheta => "freespace-theta",
            Mode::DensityMap => "density-map",
            Mode::Convergence => "convergence",
            Mode::BohrSommerfeld => "bohr-sommerfeld",
            Mode::ScatteringLength => "scattering-length",
        }
    }
}

/// `[units]` — trap frequency (default omega = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

/// `[potential]` — scatterer family (default Yukawa, v0 = 1, range = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<PotentialKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
}

/// `[scatter]` — incident state: either `e_perp` directly (default
/// omega, the transverse ground level) or the channel label `n`
/// (with integer `lz`), never both. Defaults e_par = 1e-5, lz = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_perp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_par: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

/// `[integrator]` — adaptive RKF45 settings over the unit-scaled defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_cut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_extrapolation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub safety: Option<f64>,
}

/// `[sampling]` — launch-state window (defaults delta_max = 0.5/omega,
/// z0 = -10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
}

/// `[ensemble]` — Monte Carlo event count (default 1600).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_events: Option<u64>,
}

/// `[quantum]` — coupled-channel grid sizes over the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_match: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Spacing rule for a generated sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Log,
    Linear,
}

/// `[sweep]` — either an explicit `grid` or `min`/`max`/`points` with a
/// `scale`; defaults to 40 log points on v0 in [1e-3, 20].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
}

/// `[freespace]` — collision energy and impact parameter for the
/// deflection sweep (defaults E = 0.1, s = 4); `confined = true` runs the
/// winding-angle sweep under confinement instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FreespaceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confined: Option<bool>,
}

/// `[density]` — binning grid in the scattering plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nz: Option<usize>,
}

/// `[convergence]` — ensemble sizes and repeat count for the statistics
/// study (defaults [100, 400, 1600] with 20 repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_events: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<u32>,
}

/// `[bohr]` — quantization scan bounds (defaults n_max = 5, lz_max = 6).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BohrSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lz_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// A full experiment document. Top-level keys identify the run (mode,
/// output directory, master seed); sections configure the subsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub units: UnitsSection,
    pub potential: PotentialSection,
    pub scatter: ScatterSection,
    pub integrator: IntegratorSection,
    pub sampling: SamplingSection,
    pub ensemble: EnsembleSection,
    pub quantum: QuantumSection,
    pub sweep: SweepSection,
    pub freespace: FreespaceSection,
    pub density: DensitySection,
    pub convergence: ConvergenceSection,
    pub bohr: BohrSection,
}

/// Parse a TOML experiment document; unknown keys and malformed values
/// are reported with the line they occur on.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Serialize a configuration for the output-directory echo.
pub fn serialize_config(cfg: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string_pretty(cfg).map_err(|e| CliError::Runtime(format!("serialize config: {e}")))
}

pub(crate) fn err_key(key: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { key: key.into(), message: message.into() }
}

/// Fully resolved run settings: every default applied, every value
/// checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub mode: Mode,
    pub out: PathBuf,
    pub master_seed: u64,
    pub units: UnitSystem,
    pub spec: PotentialSpec,
    pub params: ScatterParams,
    pub integrator: IntegratorConfig,
    pub sampling: SamplingConfig,
    pub n_events: u64,
    pub quantum: QuantumConfig,
    pub sweep_axis: SweepAxis,
    pub grid: Vec<f64>,
    pub fs_energy: f64,
    pub fs_impact: f64,
    pub fs_confined: bool,
    pub density: GridSpec,
    pub conv_events: Vec<u64>,
    pub conv_repeats: u32,
    pub bohr_n_max: u32,
    pub bohr_lz_max: u32,
    pub bohr_tol: f64,
}

fn spaced_grid(min: f64, max: f64, points: usize, scale: Scale) -> Vec<f64> {
    (0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            match scale {
                Scale::Log => min * (max / min).powf(f),
                Scale::Linear => min + (max - min) * f,
            }
        })
        .collect()
}

/// Apply defaults and validate a parsed document against the verb.
pub fn resolve(cfg: &ExperimentConfig, mode: Mode) -> Result<Resolved, CliError> {
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(err_key(
                "mode",
                format!("config says {} but the verb is {}", m.as_str(), mode.as_str()),
            ));
        }
    }

    let omega = cfg.units.omega.unwrap_or(1.0);
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(err_key("units.omega", format!("must be positive and finite, got {omega}")));
    }
    let units = UnitSystem::new(omega);

    let range = cfg.potential.range.unwrap_or(1.0);
    if !(range > 0.0) || !range.is_finite() {
        return Err(err_key("potential.range", format!("must be positive and finite, got {range}")));
    }
    let v0 = cfg.potential.v0.unwrap_or(1.0);
    if !(v0 >= 0.0) || !v0.is_finite() {
        return Err(err_key("potential.v0", format!("depth must be finite and non-negative, got {v0}")));
    }
    let spec = PotentialSpec { kind: cfg.potential.kind.unwrap_or(PotentialKind::Yukawa), v0, range };

    let e_par = cfg.scatter.e_par.unwrap_or(1e-5);
    if !(e_par > 0.0) || !e_par.is_finite() {
        return Err(err_key("scatter.e_par", format!("must be positive, got {e_par}")));
    }
    let lz = cfg.scatter.lz.unwrap_or(0.0);
    let params = match cfg.scatter.n {
        Some(n) => {
            if cfg.scatter.e_perp.is_some() {
                return Err(err_key(
                    "scatter.e_perp",
                    "give either e_perp or the channel label n, not both",
                ));
            }
            if lz.fract() != 0.0 {
                return Err(err_key("scatter.lz", format!("channel labels need integer lz, got {lz}")));
            }
            ScatterParams::from_channel(n, lz as i32, e_par, units)
        }
        None => ScatterParams::new(cfg.scatter.e_perp.unwrap_or(units.omega), e_par, lz),
    };
    params.validate(units).map_err(|e| err_key("scatter.e_perp", e.to_string()))?;

    let ib = IntegratorConfig::for_units(units);
    let integrator = IntegratorConfig {
        atol: cfg.integrator.atol.unwrap_or(ib.atol),
        rtol: cfg.integrator.rtol.unwrap_or(ib.rtol),
        h_init: cfg.integrator.h_init.unwrap_or(ib.h_init),
        h_min: cfg.integrator.h_min.unwrap_or(ib.h_min),
        h_max: cfg.integrator.h_max.unwrap_or(ib.h_max),
        t_max: cfg.integrator.t_max.unwrap_or(ib.t_max),
        max_steps: cfg.integrator.max_steps.unwrap_or(ib.max_steps),
        z_cut: cfg.integrator.z_cut.unwrap_or(ib.z_cut),
        local_extrapolation: cfg.integrator.local_extrapolation.unwrap_or(ib.local_extrapolation),
        safety: cfg.integrator.safety.unwrap_or(ib.safety),
    };
    if !(integrator.atol > 0.0) {
        return Err(err_key("integrator.atol", "must be positive"));
    }
    if !(integrator.rtol >= 0.0) {
        return Err(err_key("integrator.rtol", "must be non-negative"));
    }
    if !(integrator.h_init > 0.0) {
        return Err(err_key("integrator.h_init", "must be positive"));
    }
    if !(integrator.h_min > 0.0) || !(integrator.h_max > integrator.h_min) {
        return Err(err_key(
            "integrator.h_min",
            format!("need 0 < h_min < h_max, got h_min = {} h_max = {}", integrator.h_min, integrator.h_max),
        ));
    }
    if !(integrator.t_max > 0.0) {
        return Err(err_key("integrator.t_max", "must be positive"));
    }
    if integrator.max_steps == 0 {
        return Err(err_key("integrator.max_steps", "must be at least 1"));
    }
    if !(integrator.z_cut > 0.0) {
        return Err(err_key("integrator.z_cut", "must be positive"));
    }
    if !(integrator.safety > 0.0 && integrator.safety < 1.0) {
        return Err(err_key("integrator.safety", format!("must lie in (0, 1), got {}", integrator.safety)));
    }

    let sb = SamplingConfig::for_units(units);
    let sampling = SamplingConfig {
        delta_max: cfg.sampling.delta_max.unwrap_or(sb.delta_max),
        z0: cfg.sampling.z0.unwrap_or(sb.z0),
    };
    if !(sampling.delta_max >= 0.0) || !sampling.delta_max.is_finite() {
        return Err(err_key("sampling.delta_max", format!("must be non-negative, got {}", sampling.delta_max)));
    }
    if !(sampling.z0 < 0.0) {
        return Err(err_key("sampling.z0", format!("launch plane must sit upstream (z0 < 0), got {}", sampling.z0)));
    }

    let n_events = cfg.ensemble.n_events.unwrap_or(1600);
    if n_events == 0 {
        return Err(err_key("ensemble.n_events", "must be at least 1"));
    }

    let qb = QuantumConfig::default();
    let quantum = QuantumConfig {
        n_theta: cfg.quantum.n_theta.unwrap_or(qb.n_theta),
        n_r: cfg.quantum.n_r.unwrap_or(qb.n_r),
        r_match: cfg.quantum.r_match.unwrap_or(qb.r_match),
        gamma: cfg.quantum.gamma.unwrap_or(qb.gamma),
    };
    quantum.validate().map_err(|e| err_key("quantum", e.to_string()))?;

    let sweep_axis = cfg.sweep.axis.unwrap_or(SweepAxis::V0);
    match mode {
        Mode::FreespaceTheta | Mode::ScatteringLength if sweep_axis != SweepAxis::V0 => {
            return Err(err_key("sweep.axis", format!("{} sweeps v0 only", mode.as_str())));
        }
        _ => {}
    }
    let grid = if let Some(g) = &cfg.sweep.grid {
        if cfg.sweep.min.is_some() || cfg.sweep.max.is_some() || cfg.sweep.points.is_some() {
            return Err(err_key("sweep.grid", "give either an explicit grid or min/max/points, not both"));
        }
        if g.is_empty() {
            return Err(err_key("sweep.grid", "grid must be non-empty"));
        }
        g.clone()
    } else {
        let min = cfg.sweep.min.unwrap_or(1e-3);
        let max = cfg.sweep.max.unwrap_or(20.0);
        let points = cfg.sweep.points.unwrap_or(40);
        let scale = cfg.sweep.scale.unwrap_or(Scale::Log);
        if points < 2 {
            return Err(err_key("sweep.points", format!("need at least 2 points, got {points}")));
        }
        if !(min < max) {
            return Err(err_key("sweep.min", format!("need min < max, got min = {min} max = {max}")));
        }
        if scale == Scale::Log && !(min > 0.0) {
            return Err(err_key("sweep.min", format!("log spacing needs min > 0, got {min}")));
        }
        spaced_grid(min, max, points, scale)
    };
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(err_key("sweep.grid", "grid must be finite and strictly increasing"));
    }

    let fs_energy = cfg.freespace.e.unwrap_or(0.1);
    let fs_impact = cfg.freespace.s.unwrap_or(4.0);
    if !(fs_energy > 0.0) {
        return Err(err_key("freespace.e", format!("must be positive, got {fs_energy}")));
    }
    if !(fs_impact > 0.0) {
        return Err(err_key("freespace.s", format!("must be positive, got {fs_impact}")));
    }

    let db = GridSpec::default();
    let density = GridSpec {
        x_min: cfg.density.x_min.unwrap_or(db.x_min),
        x_max: cfg.density.x_max.unwrap_or(db.x_max),
        nx: cfg.density.nx.unwrap_or(db.nx),
        z_min: cfg.density.z_min.unwrap_or(db.z_min),
        z_max: cfg.density.z_max.unwrap_or(db.z_max),
        nz: cfg.density.nz.unwrap_or(db.nz),
    };
    if !(density.x_min < density.x_max) || !(density.z_min < density.z_max) {
        return Err(err_key("density.x_min", "need x_min < x_max and z_min < z_max"));
    }
    if density.nx == 0 || density.nz == 0 {
        return Err(err_key("density.nx", "cell counts must be at least 1"));
    }

    let conv_events = cfg.convergence.n_events.clone().unwrap_or_else(|| vec![100, 400, 1600]);
    if conv_events.is_empty() || conv_events.iter().any(|&n| n == 0) {
        return Err(err_key("convergence.n_events", "ensemble sizes must be non-empty and positive"));
    }
    let conv_repeats = cfg.convergence.repeats.unwrap_or(20);
    if conv_repeats < 2 {
        return Err(err_key("convergence.repeats", format!("need at least 2 repeats, got {conv_repeats}")));
    }

    let bohr_n_max = cfg.bohr.n_max.unwrap_or(5);
    let bohr_lz_max = cfg.bohr.lz_max.unwrap_or(6);
    let bohr_tol = cfg.bohr.tol.unwrap_or(1e-10);
    if !(bohr_tol > 0.0) {
        return Err(err_key("bohr.tol", format!("must be positive, got {bohr_tol}")));
    }

    Ok(Resolved {
        mode,
        out: cfg.out.clone().unwrap_or_else(|| PathBuf::from("cirlab-out")),
        master_seed: cfg.master_seed.unwrap_or(42),
        units,
        spec,
        params,
        integrator,
        sampling,
        n_events,
        quantum,
        sweep_axis,
        grid,
        fs_energy,
        fs_impact,
        fs_confined: cfg.freespace.confined.unwrap_or(false),
        density,
        conv_events,
        conv_repeats,
        bohr_n_max,
        bohr_lz_max,
        bohr_tol,
    })
}
