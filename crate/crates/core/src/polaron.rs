//! Self-consistent polaron ground state and the polaron-to-lab frame maps for
//! single-excitation states.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::waveguide::{ModeGrid, SystemConfig};

/// Starting point of the damped fixed-point iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `Delta_r = Delta`.
    #[default]
    Bare,
    /// `Delta_r = 0`; selects the localized branch where several fixed points coexist.
    Localized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub damping: f64,
    /// Fixed-point residual bound, relative to `Delta`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterates below `localization_threshold * Delta` snap to the localized phase.
    pub localization_threshold: f64,
    pub initial: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 100_000,
            localization_threshold: 1e-8,
            initial: InitialGuess::Bare,
        }
    }
}

impl SolverOptions {
    pub fn localized() -> Self {
        Self {
            initial: InitialGuess::Localized,
            ..Self::default()
        }
    }
}

/// Converged displacements and renormalized splitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolaronSolution {
    /// Bare splitting the solve was run at.
    pub delta: f64,
    pub delta_r: f64,
    /// `f_k = g~_k / (omega_k + Delta_r)`, indexed like the mode grid.
    pub f: Vec<C64>,
    pub localized: bool,
    /// `|Delta exp(-2 sum |f|^2) - Delta_r|` at the final iterate.
    pub residual: f64,
    pub iterations: usize,
}

impl PolaronSolution {
    /// `Delta_r / Delta`.
    pub fn ratio(&self) -> f64 {
        self.delta_r / self.delta
    }

    /// Ground-state excitation probability `(1 - Delta_r/Delta) / 2`.
    pub fn ground_state_excitation(&self) -> f64 {
        0.5 * (1.0 - self.ratio())
    }

    /// Total virtual photon number `sum_k |f_k|^2`.
    pub fn photon_number(&self) -> f64 {
        self.f.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn weights(grid: &ModeGrid) -> Vec<(f64, f64)> {
    grid.active()
        .map(|i| (grid.omega[i], grid.g_tilde[i].norm_sqr()))
        .collect()
}

/// `Delta exp(-2 sum |g~|^2 / (omega + d)^2)`.
fn renormalize(w: &[(f64, f64)], delta: f64, d: f64) -> f64 {
    let s: f64 = w.iter().map(|&(om, g2)| g2 / ((om + d) * (om + d))).sum();
    delta * (-2.0 * s).exp()
}

fn displacements(grid: &ModeGrid, delta_r: f64) -> Vec<C64> {
    (0..grid.len())
        .map(|i| {
            if grid.is_inert(i) {
                C64::new(0.0, 0.0)
            } else {
                grid.g_tilde[i] / (grid.omega[i] + delta_r)
            }
        })
        .collect()
}

/// Solves the self-consistency with default options.
pub fn solve_self_consistent(grid: &ModeGrid, config: &SystemConfig) -> Result<PolaronSolution> {
    solve_with(grid, config, &SolverOptions::default())
}

/// Damped fixed-point iteration `d <- (1-eta) d + eta Delta exp(-2 sum |f(d)|^2)`.
///
/// The localized phase is declared when an iterate falls below the threshold,
/// or when the per-contact coupling is supercritical (`alpha G(0) >= 1`) and the
/// fixed point lies below the lowest lattice frequency, i.e. it is a finite-size
/// remnant of `Delta_r = 0`.
pub fn solve_with(
    grid: &ModeGrid,
    config: &SystemConfig,
    opts: &SolverOptions,
) -> Result<PolaronSolution> {
    let delta = config.delta;
    if !(0.0..=1.0).contains(&opts.damping) || opts.damping == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "solver damping must lie in (0, 1] (got {})",
            opts.damping
        )));
    }
    let w = weights(grid);
    let tol = opts.tolerance * delta;
    let floor = opts.localization_threshold * delta;
    let mut d = match opts.initial {
        InitialGuess::Bare => delta,
        InitialGuess::Localized => 0.0,
    };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let next = renormalize(&w, delta, d);
        residual = (next - d).abs();
        if residual < tol {
            converged = true;
            break;
        }
        d = (1.0 - opts.damping) * d + opts.damping * next;
        iterations += 1;
        if d < floor {
            residual = (renormalize(&w, delta, 0.0) - 0.0).abs();
            return Ok(localized(grid, delta, residual, iterations));
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            last_delta_r: d,
            residual,
            iterations,
        });
    }
    // G(0) = 1 for any contact set, so the supercritical test reduces to alpha >= 1.
    if d < floor || (config.alpha >= 1.0 && d < grid.lowest_frequency()) {
        return Ok(localized(grid, delta, residual, iterations));
    }
    Ok(PolaronSolution {
        delta,
        delta_r: d,
        f: displacements(grid, d),
        localized: false,
        residual,
        iterations,
    })
}

fn localized(grid: &ModeGrid, delta: f64, residual: f64, iterations: usize) -> PolaronSolution {
    PolaronSolution {
        delta,
        delta_r: 0.0,
        f: displacements(grid, 0.0),
        localized: true,
        residual,
        iterations,
    }
}

/// Ground-state energy functional of trial displacements `f`.
pub fn variational_energy(f: &[C64], delta: f64, grid: &ModeGrid) -> f64 {
    let mut n = 0.0;
    let mut e = 0.0;
    for i in grid.active() {
        n += f[i].norm_sqr();
        e += grid.omega[i] * f[i].norm_sqr() - 2.0 * (grid.g_tilde[i].conj() * f[i]).re;
    }
    -0.5 * delta * (-2.0 * n).exp() + e
}

/// `E_ZP = -Delta_r/2 + sum_k (omega_k |f_k|^2 - 2 Re(g~_k^* f_k))`.
pub fn zero_point_energy(solution: &PolaronSolution, grid: &ModeGrid) -> f64 {
    let e: f64 = grid
        .active()
        .map(|i| {
            let f = solution.f[i];
            grid.omega[i] * f.norm_sqr() - 2.0 * (grid.g_tilde[i].conj() * f).re
        })
        .sum();
    -0.5 * solution.delta_r + e
}

/// Number-conserving vertices `2 Delta_r f_k`.
pub fn effective_vertex(solution: &PolaronSolution) -> Vec<C64> {
    solution.f.iter().map(|&f| f * (2.0 * solution.delta_r)).collect()
}

/// Single-excitation amplitudes in the polaron frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationState {
    pub c: C64,
    pub phi: Vec<C64>,
    pub time: f64,
}

impl ExcitationState {
    /// Atom excited, field empty: the polaron-frame image of `sigma^+ |GS>`.
    pub fn excited(n_modes: usize) -> Self {
        Self {
            c: C64::new(1.0, 0.0),
            phi: vec![C64::new(0.0, 0.0); n_modes],
            time: 0.0,
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            c: C64::new(0.0, 0.0),
            ..Self::excited(n_modes)
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.norm_sqr() + self.phi.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Field overlap `S = sum_k f_k phi_k`.
    pub fn overlap(&self, f: &[C64]) -> C64 {
        f.iter().zip(&self.phi).map(|(a, b)| a * b).sum()
    }
}

/// Slack allowed on probabilities before they are reported as invalid.
pub const PROBABILITY_SLACK: f64 = 1e-6;

/// Lab-frame atomic excitation probability.
pub fn lab_excitation(state: &ExcitationState, solution: &PolaronSolution) -> Result<f64> {
    let s = state.overlap(&solution.f);
    let c = state.c;
    let p = solution.ground_state_excitation()
        + solution.ratio() * (c.norm_sqr() + 2.0 * (c.conj() * s).re + 2.0 * s.norm_sqr());
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p)
}

/// Lab-frame occupation of mode `k`: `|f_k|^2 + |phi_k|^2 - 2 Re(c^* phi_k f_k)`.
pub fn lab_mode_occupation(state: &ExcitationState, solution: &PolaronSolution, k: usize) -> f64 {
    let f = solution.f[k];
    let phi = state.phi[k];
    f.norm_sqr() + phi.norm_sqr() - 2.0 * (state.c.conj() * phi * f).re
}

/// Lab-frame occupations of every mode.
pub fn lab_occupations(state: &ExcitationState, solution: &PolaronSolution) -> Vec<f64> {
    (0..solution.f.len())
        .map(|k| lab_mode_occupation(state, solution, k))
        .collect()
}

/// Scalar summary written next to the displacement table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionHeader {
    pub delta_r: f64,
    pub residual: f64,
    pub iterations: usize,
    pub localized: bool,
}

impl From<&PolaronSolution> for SolutionHeader {
    fn from(s: &PolaronSolution) -> Self {
        Self {
            delta_r: s.delta_r,
            residual: s.residual,
            iterations: s.iterations,
            localized: s.localized,
        }
    }
}

/// Writes `(k, Re f_k, Im f_k)` as CSV and the scalar header as JSON.
pub fn write_solution(
    solution: &PolaronSolution,
    grid: &ModeGrid,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let rows = (0..grid.len()).map(|i| [grid.k[i], solution.f[i].re, solution.f[i].im]);
    io::write_csv_file(csv_path, &["k", "re_f", "im_f"], rows)?;
    io::write_json_file(json_path, &SolutionHeader::from(solution))
}
