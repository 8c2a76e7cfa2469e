//! Markovian rate and Lamb shift at the renormalized splitting.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::polaron::{solve_with, PolaronSolution, SolverOptions};
use crate::quadrature::Rule;
use crate::waveguide::{build_modes, modulation, spectral_density, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovObservables {
    pub gamma_r: f64,
    pub lamb_shift: f64,
    pub delta_r_used: f64,
}

/// `gamma_r = pi alpha Delta_r G(Delta_r)`.
pub fn decay_rate(solution: &PolaronSolution, config: &SystemConfig) -> f64 {
    spectral_density(solution.delta_r, config)
}

/// Default panel width: resolves `G` (period `2 pi v_g / x`) and the band.
pub fn default_panel_width(config: &SystemConfig) -> f64 {
    let span = config.contact_positions().last().copied().unwrap_or(0.0)
        - config.contact_positions().first().copied().unwrap_or(0.0);
    let nc = config.n_contacts() as f64;
    let x_max = span / (nc - 1.0).max(1.0);
    let interference = if x_max > 0.0 {
        config.v_g / (10.0 * nc * x_max)
    } else {
        f64::INFINITY
    };
    interference.min(2.0 * config.omega_c / 200.0)
}

/// Lamb shift with the default quadrature.
pub fn lamb_shift(solution: &PolaronSolution, config: &SystemConfig) -> f64 {
    lamb_shift_with(solution, config, default_panel_width(config))
}

/// `(2 Delta_r^2 / pi) PV int_0^{2 omega_c} J(w) / ((Delta_r - w)(w + Delta_r)^2) dw`
/// by pole subtraction; 0 in the localized phase.
pub fn lamb_shift_with(solution: &PolaronSolution, config: &SystemConfig, panel: f64) -> f64 {
    let dr = solution.delta_r;
    let w_max = 2.0 * config.omega_c;
    if dr <= 0.0 || dr >= w_max {
        return 0.0;
    }
    let h = |w: f64| spectral_density(w, config) / ((w + dr) * (w + dr));
    let h0 = h(dr);
    let smooth = |w: f64| (h(w) - h0) / (dr - w);
    let rule = Rule::new(10);
    // Finer panels straddling the pole, where the difference quotient loses digits.
    let near = (0.05 * dr).min(panel * 20.0);
    let lo = (dr - near).max(0.0);
    let hi = (dr + near).min(w_max);
    let fine = panel / 10.0;
    let body = rule.composite(&smooth, 0.0, lo, panel)
        + rule.composite(&smooth, lo, dr, fine)
        + rule.composite(&smooth, dr, hi, fine)
        + rule.composite(&smooth, hi, w_max, panel);
    let remainder = h0 * (dr / (w_max - dr)).ln();
    2.0 * dr * dr / PI * (body + remainder)
}

pub fn markov_observables(solution: &PolaronSolution, config: &SystemConfig) -> MarkovObservables {
    MarkovObservables {
        gamma_r: decay_rate(solution, config),
        lamb_shift: lamb_shift(solution, config),
        delta_r_used: solution.delta_r,
    }
}

/// Rate in the rotating-wave limit, `J(Delta)` with `G` at the bare splitting.
pub fn rwa_rate(config: &SystemConfig) -> f64 {
    spectral_density(config.delta, config)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovRow {
    pub x: usize,
    pub gamma_r: f64,
    pub lamb_shift: f64,
    pub delta_r: f64,
    /// `gamma_r / J_Ohm(Delta_r)`, i.e. `G(Delta_r)`.
    pub gamma_normalized: f64,
}

/// Solve and Markovian observables for one geometry.
pub fn markov_row(config: &SystemConfig, opts: &SolverOptions) -> Result<MarkovRow> {
    let grid = build_modes(config)?;
    let sol = solve_with(&grid, config, opts)?;
    let obs = markov_observables(&sol, config);
    Ok(MarkovRow {
        x: config.nearest_spacing(),
        gamma_r: obs.gamma_r,
        lamb_shift: obs.lamb_shift,
        delta_r: sol.delta_r,
        gamma_normalized: modulation(sol.delta_r, config),
    })
}

/// One solve per spacing of `n_contacts` equidistant contacts.
pub fn markov_sweep(
    template: &SystemConfig,
    n_contacts: usize,
    spacings: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<MarkovRow>> {
    spacings
        .par_iter()
        .map(|&x| {
            let cfg = template.with_geometry(n_contacts, x);
            markov_row(&cfg, opts)
                .map(|row| MarkovRow { x, ..row })
                .map_err(|e| Error::SweepCell {
                    alpha: cfg.alpha,
                    spacing: x,
                    source: Box::new(e),
                })
        })
        .collect()
}

pub fn write_markov_csv(rows: &[MarkovRow], path: &Path) -> Result<()> {
    let data = rows
        .iter()
        .map(|r| [r.x as f64, r.gamma_r, r.lamb_shift, r.delta_r, r.gamma_normalized]);
    io::write_csv_file(
        path,
        &["x", "gamma_r", "lamb_shift", "delta_r", "gamma_normalized"],
        data,
    )
}
