//! Experiment orchestration: create the output directory, echo the
//! configuration, dispatch to the matching library pipeline, stream CSV
//! artifacts point by point, and close with a run manifest. Results are
//! deterministic in the master seed alone; the worker count never touches
//! the artifact bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use cirlab::mc::{self, EnsembleSpec, SweepAxis};
use cirlab::model::PotentialSpec;
use cirlab::{freespace, quantum, semiclassics};
use serde::Serialize;

use crate::config::{serialize_config, ExperimentConfig, Mode, Resolved};
use crate::{error_record, CliError};

/// Run manifest: what ran, how it was seeded, and what it produced.
#[derive(Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    master_seed: u64,
    workers: usize,
    package: &'a str,
    version: &'a str,
    wall_time_s: f64,
    files: Vec<String>,
}

/// Execute one resolved experiment and write its artifacts.
pub fn run_experiment(raw: &ExperimentConfig, res: &Resolved, workers: Option<usize>) -> Result<(), CliError> {
    let start = Instant::now();
    fs::create_dir_all(&res.out)?;
    fs::write(res.out.join("config.toml"), serialize_config(raw)?)?;
    let workers = init_workers(workers)?;
    let produced = match res.mode {
        Mode::ClassicalSweep => classical_sweep(res),
        Mode::QuantumSweep => quantum_sweep(res),
        Mode::FreespaceTheta => freespace_theta(res),
        Mode::DensityMap => density_map(res),
        Mode::Convergence => convergence(res),
        Mode::BohrSommerfeld => bohr_sommerfeld(res),
        Mode::ScatteringLength => scattering_length(res),
    };
    let produced = match produced {
        Ok(p) => p,
        Err(e) => {
            // Leave a machine-readable record next to any partial artifacts.
            let _ = fs::write(res.out.join("error.toml"), error_record(&e));
            return Err(e);
        }
    };
    let mut files = vec!["config.toml".to_string()];
    files.extend(produced);
    files.push("manifest.toml".into());
    let manifest = Manifest {
        mode: res.mode.as_str(),
        master_seed: res.master_seed,
        workers,
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
    };
    let text =
        toml::to_string(&manifest).map_err(|e| CliError::Runtime(format!("serialize manifest: {e}")))?;
    fs::write(res.out.join("manifest.toml"), text)?;
    Ok(())
}

#[cfg(feature = "parallel")]
fn init_workers(requested: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = requested {
        if w == 0 {
            return Err(crate::config::err_key("workers", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn init_workers(_requested: Option<usize>) -> Result<usize, CliError> {
    // Sequential build: the ensemble map runs on the caller's thread.
    Ok(1)
}

/// Scientific-notation cell; the shortest round-trip form keeps reruns
/// byte-identical.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn artifact(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn axis_key(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::V0 => "v0",
        SweepAxis::EPerp => "e_perp",
        SweepAxis::EPar => "e_par",
        SweepAxis::Lz => "lz",
        SweepAxis::Range => "range",
    }
}

fn axis_unit(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::V0 | SweepAxis::EPerp | SweepAxis::EPar => "hbar*omega",
        SweepAxis::Lz => "hbar",
        SweepAxis::Range => "a_perp",
    }
}

fn write_error_log(out: &Path, errors: &[String], files: &mut Vec<String>) -> Result<(), CliError> {
    if errors.is_empty() {
        return Ok(());
    }
    fs::write(out.join("errors.log"), errors.join("\n") + "\n")?;
    files.push("errors.log".into());
    Ok(())
}

fn classical_sweep(res: &Resolved) -> Result<Vec<String>, CliError> {
    let mut files = vec!["curve.csv".to_string()];
    let mut curve = artifact(&res.out, "curve.csv")?;
    writeln!(
        curve,
        "{} ({}),t (1),t_stderr (1),n_trans (count),n_refl (count),n_excluded (count)",
        axis_key(res.sweep_axis),
        axis_unit(res.sweep_axis)
    )?;
    let ens = EnsembleSpec { n_events: res.n_events, master_seed: res.master_seed };
    let mut errors: Vec<String> = Vec::new();
    let mut io_err: Option<std::io::Error> = None;
    mc::sweep_transmission_with(
        res.units,
        &res.spec,
        &res.params,
        res.sweep_axis,
        &res.grid,
        &res.sampling,
        &res.integrator,
        &ens,
        |i, v, point| {
            let row = match point {
                Ok(e) => format!(
                    "{},{},{},{},{},{}",
                    num(v),
                    num(e.t),
                    num(e.stderr),
                    e.n_trans,
                    e.n_refl,
                    e.n_excluded
                ),
                Err(msg) => {
                    errors.push(format!("point {i} ({} = {}): {msg}", axis_key(res.sweep_axis), num(v)));
                    format!("{},nan,nan,0,0,0", num(v))
                }
            };
            // Flush per point so partial sweeps survive an abort.
            if let Err(e) = writeln!(curve, "{row}").and_then(|()| curve.flush()) {
                io_err.get_or_insert(e);
            }
        },
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    write_error_log(&res.out, &errors, &mut files)?;
    Ok(files)
}

fn quantum_sweep(res: &Resolved) -> Result<Vec<String>, CliError> {
    let mut files = vec!["quantum.csv".to_string()];
    let mut out = artifact(&res.out, "quantum.csv")?;
    writeln!(
        out,
        "{} ({}),t (1),r (1),unitarity_defect (1),n_open (count)",
        axis_key(res.sweep_axis),
        axis_unit(res.sweep_axis)
    )?;
    let mut errors: Vec<String> = Vec::new();
    for (i, &v) in res.grid.iter().enumerate() {
        let (spec, params) = res.sweep_axis.apply(v, &res.spec, &res.params);
        match quantum::transmission_quantum(res.units, &spec, &params, &res.quantum) {
            Ok(p) => writeln!(
                out,
                "{},{},{},{},{}",
                num(v),
                num(p.t),
                num(p.r),
                num(p.unitarity_defect),
                p.n_open
            )?,
            Err(e) => {
                errors.push(format!("point {i} ({} = {}): {e}", axis_key(res.sweep_axis), num(v)));
                writeln!(out, "{},nan,nan,nan,0", num(v))?;
            }
        }
        out.flush()?;
    }
    write_error_log(&res.out, &errors, &mut files)?;
    Ok(files)
}

fn freespace_theta(res: &Resolved) -> Result<Vec<String>, CliError> {
    if res.fs_confined {
        let mut out = artifact(&res.out, "winding.csv")?;
        writeln!(out, "v0 (hbar*omega),theta_mean (rad),n_used (count),n_unresolved (count)")?;
        let ens = EnsembleSpec { n_events: res.n_events, master_seed: res.master_seed };
        let points = mc::theta_vs_v0_confined(
            res.units,
            &res.spec,
            &res.grid,
            &res.params,
            &res.sampling,
            &res.integrator,
            &ens,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        for p in points {
            writeln!(out, "{},{},{},{}", num(p.v0), num(p.winding_mean), p.n_used, p.n_unresolved)?;
        }
        out.flush()?;
        return Ok(vec!["winding.csv".to_string()]);
    }
    let mut out = artifact(&res.out, "theta.csv")?;
    writeln!(out, "v0 (hbar*omega),theta (rad),r_min (a_perp),singular (bool)")?;
    let deflections = freespace::theta_vs_v0(&res.spec, res.fs_energy, res.fs_impact, &res.grid)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for (&v, d) in res.grid.iter().zip(&deflections) {
        writeln!(out, "{},{},{},{}", num(v), num(d.theta), num(d.r_min), u8::from(d.singular))?;
    }
    out.flush()?;
    Ok(vec!["theta.csv".to_string()])
}

fn density_map(res: &Resolved) -> Result<Vec<String>, CliError> {
    let ens = EnsembleSpec { n_events: res.n_events, master_seed: res.master_seed };
    let map = mc::density_map(
        res.units,
        &res.spec,
        &res.params,
        &res.sampling,
        &res.integrator,
        &ens,
        &res.density,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = artifact(&res.out, "density.csv")?;
    writeln!(out, "x (a_perp),z (a_perp),mass (1)")?;
    for (k, x, z) in map.grid.centers() {
        writeln!(out, "{},{},{}", num(x), num(z), num(map.mass[k]))?;
    }
    out.flush()?;
    Ok(vec!["density.csv".to_string()])
}

fn convergence(res: &Resolved) -> Result<Vec<String>, CliError> {
    let mut files = vec!["convergence.csv".to_string()];
    let mut out = artifact(&res.out, "convergence.csv")?;
    writeln!(out, "n_events (count),repeats (count),t_mean (1),t_stderr (1)")?;
    let mut errors: Vec<String> = Vec::new();
    for &n in &res.conv_events {
        let ens = EnsembleSpec { n_events: n, master_seed: res.master_seed };
        match mc::repeat_batches(
            res.units,
            &res.spec,
            &res.params,
            &res.sampling,
            &res.integrator,
            &ens,
            res.conv_repeats,
        ) {
            Ok(b) => writeln!(out, "{n},{},{},{}", res.conv_repeats, num(b.mean), num(b.stderr))?,
            Err(e) => {
                errors.push(format!("n_events = {n}: {e}"));
                writeln!(out, "{n},{},nan,nan", res.conv_repeats)?;
            }
        }
        out.flush()?;
    }
    write_error_log(&res.out, &errors, &mut files)?;
    Ok(files)
}

fn bohr_sommerfeld(res: &Resolved) -> Result<Vec<String>, CliError> {
    let mut out = artifact(&res.out, "levels.csv")?;
    writeln!(out, "n (1),lz (hbar),e_numeric (hbar*omega),e_closed_form (hbar*omega)")?;
    // Levels depend on |lz| only; the non-negative half spans the spectrum.
    for lz in 0..=res.bohr_lz_max {
        let levels = semiclassics::bohr_sommerfeld_levels(lz as i32, res.bohr_n_max, res.units, res.bohr_tol)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        for l in levels {
            writeln!(out, "{},{lz},{},{}", l.n, num(l.e_numeric), num(l.e_closed_form))?;
        }
        out.flush()?;
    }
    Ok(vec!["levels.csv".to_string()])
}

fn scattering_length(res: &Resolved) -> Result<Vec<String>, CliError> {
    let mut files = vec!["scatlen.csv".to_string()];
    let mut out = artifact(&res.out, "scatlen.csv")?;
    writeln!(out, "v0 (hbar*omega),a_s (a_perp),diverged (bool)")?;
    let mut errors: Vec<String> = Vec::new();
    for (i, &v0) in res.grid.iter().enumerate() {
        let spec = PotentialSpec { v0, ..res.spec };
        match quantum::scattering_length(&spec) {
            Ok(sl) => writeln!(out, "{},{},{}", num(v0), num(sl.a_s), u8::from(sl.diverged))?,
            Err(e) => {
                errors.push(format!("point {i} (v0 = {}): {e}", num(v0)));
                writeln!(out, "{},nan,nan", num(v0))?;
            }
        }
        out.flush()?;
    }
    write_error_log(&res.out, &errors, &mut files)?;
    Ok(files)
}
