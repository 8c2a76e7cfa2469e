//! Mode dispatch and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use giantpolaron_core::dde::{bound_state_scan, integrate_dde, DdeOptions, DdeParams, ScanOptions};
use giantpolaron_core::dynamics::{
    emission_summary, integrate, write_snapshot_csv, DynamicsOptions, EmissionSummary,
};
use giantpolaron_core::equilibrium::{fit_tail_exponent, phase_diagram, photon_profile, TailFit, TailWindow};
use giantpolaron_core::io::write_json_file;
use giantpolaron_core::markovian::{markov_row, markov_sweep, write_markov_csv};
use giantpolaron_core::polaron::{solve_with, write_solution, PolaronSolution};
use giantpolaron_core::waveguide::{build_modes, write_modes};
use giantpolaron_core::{Error, ExcitationState, C64};
use serde::Serialize;

use crate::spec::{Mode, RunSpec};

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    spec: &'a RunSpec,
    derived: Option<EmissionSummary>,
    extra: serde_json::Value,
    files: Vec<String>,
    wall_time_s: f64,
}

/// Executes `spec` and returns the artifact paths.
pub fn run(spec: &RunSpec) -> Result<Vec<PathBuf>, Error> {
    let started = Instant::now();
    let out = &spec.output_dir;
    fs::create_dir_all(out)?;
    let mut files: Vec<PathBuf> = Vec::new();
    let mut derived = None;
    let mut extra = serde_json::Value::Null;

    match spec.mode {
        Mode::Gs => {
            let (grid, sol) = solve(spec)?;
            let profile = photon_profile(&sol, &grid, &spec.system, spec.profile.convention);
            let path = out.join("profile.csv");
            profile.write_csv(&path)?;
            files.push(path);
            let (csv, json) = (out.join("solution.csv"), out.join("solution.json"));
            write_solution(&sol, &grid, &csv, &json)?;
            files.extend([csv, json]);
            let path = out.join("modes.csv");
            write_modes(&grid, &path)?;
            files.push(path);
            let mut window = TailWindow::default_for(&profile);
            if let Some(s) = spec.profile.fit_start {
                window.start = s;
            }
            if let Some(s) = spec.profile.fit_stop {
                window.stop = s;
            }
            let fit: Option<TailFit> = fit_tail_exponent(&profile, window, spec.profile.fit_model).ok();
            extra = serde_json::json!({
                "photon_number": sol.photon_number(),
                "imag_residue": profile.imag_residue,
                "tail_window": window,
                "tail_fit": fit,
            });
            derived = Some(emission_summary(&sol, &spec.system));
        }
        Mode::PhaseDiagram => {
            let alpha = spec.sweep.alpha.as_ref().map(|a| a.values()).unwrap_or_default();
            let xs = spec.sweep.x.as_ref().map(|a| a.sites()).unwrap_or_default();
            let diagram = phase_diagram(&spec.system, spec.n_contacts, &alpha, &xs, &spec.solver)?;
            let path = out.join("phase_diagram.csv");
            diagram.write_csv(&path)?;
            files.push(path);
        }
        Mode::Markov => {
            let rows = match &spec.sweep.x {
                Some(axis) => markov_sweep(&spec.system, spec.n_contacts, &axis.sites(), &spec.solver)?,
                None => vec![markov_row(&spec.system, &spec.solver)?],
            };
            let path = out.join("markov.csv");
            write_markov_csv(&rows, &path)?;
            files.push(path);
        }
        Mode::Dynamics => {
            let d = spec.dynamics.as_ref().expect("validated");
            let (grid, sol) = solve(spec)?;
            let opts = DynamicsOptions {
                dt: d.dt,
                snapshot_times: d.snapshots.clone(),
                ..DynamicsOptions::default()
            };
            let traj = integrate(&ExcitationState::excited(grid.len()), &sol, &grid, d.t_max, &opts)?;
            let path = out.join("trajectory.csv");
            traj.write_csv(&path)?;
            files.push(path);
            for (i, snap) in traj.field_snapshots.iter().enumerate() {
                let path = out.join(format!("snapshot_{i:03}.csv"));
                write_snapshot_csv(snap, &path)?;
                files.push(path);
            }
            extra = serde_json::json!({
                "dt": traj.dt,
                "steps": traj.steps,
                "max_norm_drift": traj.max_norm_drift,
                "max_energy_drift": traj.max_energy_drift,
                "snapshot_times": traj.field_snapshots.iter().map(|s| s.time).collect::<Vec<_>>(),
            });
            derived = Some(emission_summary(&sol, &spec.system));
        }
        Mode::Dde => {
            let d = spec.dde.as_ref().expect("validated");
            let (_, sol) = solve(spec)?;
            let mut params = DdeParams::from_solution(&sol, &spec.system)?;
            if d.rwa {
                params.delta_r = spec.system.delta;
                params.gamma = std::f64::consts::PI * spec.system.alpha * spec.system.delta;
            }
            let series = integrate_dde(
                &params,
                C64::new(1.0, 0.0),
                d.t_max,
                &DdeOptions {
                    max_step: d.max_step,
                },
            )?;
            let path = out.join("dde.csv");
            series.write_csv(&path)?;
            files.push(path);
            extra = serde_json::json!({ "params": params, "step": series.h });
            derived = Some(emission_summary(&sol, &spec.system));
        }
        Mode::BoundScan => {
            let b = spec.bound_scan.as_ref().expect("validated");
            let alpha = spec.sweep.alpha.as_ref().map(|a| a.values()).unwrap_or_default();
            let opts = ScanOptions {
                solver: spec.solver.clone(),
                coexistence_tolerance: b.coexistence_tolerance,
                ..ScanOptions::default()
            };
            let reports = bound_state_scan(&spec.system, &b.modes, &alpha, &opts)?;
            let path = out.join("poles.json");
            write_json_file(&path, &reports)?;
            files.push(path);
        }
    }

    let manifest_path = out.join("manifest.json");
    let manifest = Manifest {
        tool: "giantpolaron",
        version: env!("CARGO_PKG_VERSION"),
        mode: spec.mode.name(),
        spec,
        derived,
        extra,
        files: files.iter().map(|p| file_name(p)).collect(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json_file(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(files)
}

fn solve(spec: &RunSpec) -> Result<(giantpolaron_core::ModeGrid, PolaronSolution), Error> {
    let grid = build_modes(&spec.system)?;
    let sol = solve_with(&grid, &spec.system, &spec.solver)?;
    Ok((grid, sol))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
