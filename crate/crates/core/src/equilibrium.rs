//! Ground-state photon clouds, power-law tail fits and `(alpha, x)` sweeps of
//! the renormalized splitting.

use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::polaron::{solve_with, PolaronSolution, SolverOptions};
use crate::waveguide::{build_modes, ModeGrid, SystemConfig};

/// How momentum-space displacements are carried to lattice sites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileConvention {
    /// Unitary transform of the giant-atom displacements `f_k` themselves.
    #[default]
    Direct,
    /// Single-contact cloud (`g~ -> g_k`) copied to every contact and averaged.
    Replicated,
}

/// Sign of the exponent in a lattice transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// `(1/sqrt N) sum_k a_k exp(-i k x)`.
    Minus,
    /// `(1/sqrt N) sum_k a_k exp(+i k x)`.
    Plus,
}

/// Unitary map of mode amplitudes onto the `N` lattice sites.
///
/// For even `N` the two band-edge momenta are the same lattice function and
/// are summed.
pub fn to_sites(grid: &ModeGrid, amplitudes: &[C64], phase: Phase) -> Vec<C64> {
    let n = grid.n_sites;
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (i, &m) in grid.n_index.iter().enumerate() {
        buf[m.rem_euclid(n as i64) as usize] += amplitudes[i];
    }
    let mut planner = FftPlanner::new();
    let fft = match phase {
        Phase::Minus => planner.plan_fft_forward(n),
        Phase::Plus => planner.plan_fft_inverse(n),
    };
    fft.process(&mut buf);
    let norm = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= norm);
    buf
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonProfile {
    /// Lattice sites `0..N`.
    pub x: Vec<f64>,
    /// Real part of `f_x`.
    pub amplitude: Vec<f64>,
    /// `|f_x|^2`.
    pub occupation: Vec<f64>,
    /// `max |Im f_x| / max |f_x|`.
    pub imag_residue: f64,
    pub contacts: Vec<usize>,
}

impl PhotonProfile {
    pub fn total(&self) -> f64 {
        self.occupation.iter().sum()
    }

    /// Contact centroid in sites.
    pub fn centroid(&self) -> f64 {
        self.contacts.iter().map(|&c| c as f64).sum::<f64>() / self.contacts.len() as f64
    }

    /// Sites holding a local maximum of the occupation (periodic neighbours).
    pub fn local_maxima(&self) -> Vec<usize> {
        let n = self.occupation.len();
        (0..n)
            .filter(|&i| {
                let o = self.occupation[i];
                o > self.occupation[(i + n - 1) % n] && o > self.occupation[(i + 1) % n]
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.x.iter().zip(&self.occupation).map(|(&x, &o)| [x, o]);
        io::write_csv_file(path, &["x", "occupation"], rows)
    }
}

/// Real-space ground-state cloud `f_x`.
pub fn photon_profile(
    solution: &PolaronSolution,
    grid: &ModeGrid,
    config: &SystemConfig,
    convention: ProfileConvention,
) -> PhotonProfile {
    let n = grid.n_sites;
    let fx = match convention {
        ProfileConvention::Direct => to_sites(grid, &solution.f, Phase::Minus),
        ProfileConvention::Replicated => {
            let single: Vec<C64> = (0..grid.len())
                .map(|i| {
                    if grid.is_inert(i) {
                        C64::new(0.0, 0.0)
                    } else {
                        C64::new(grid.g_single[i] / (grid.omega[i] + solution.delta_r), 0.0)
                    }
                })
                .collect();
            // The single-contact cloud sits at site 0; shift it onto each contact.
            let base = to_sites(grid, &single, Phase::Minus);
            let nc = config.contacts.len() as f64;
            (0..n)
                .map(|s| {
                    config
                        .contacts
                        .iter()
                        .map(|&c| base[(s + n - c % n) % n])
                        .sum::<C64>()
                        / nc
                })
                .collect()
        }
    };
    let peak = fx.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let imag = fx.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    PhotonProfile {
        x: (0..n).map(|s| s as f64).collect(),
        amplitude: fx.iter().map(|z| z.re).collect(),
        occupation: fx.iter().map(|z| z.norm_sqr()).collect(),
        imag_residue: if peak > 0.0 { imag / peak } else { 0.0 },
        contacts: config.contacts.clone(),
    }
}

/// Model fitted to the tail of the cloud.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModel {
    /// `f_x = A r^{-a/2} + B` with `r` measured from the contact centroid.
    ///
    /// `B` absorbs the uniform offset left by dropping the `k = 0` mode.
    #[default]
    PowerWithOffset,
    /// Straight line through `log |f_x|^2` against `log r`, `r` from the outermost contact.
    LogLog,
}

/// Distance range `[start, stop)` in sites, on the right of the reference point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailWindow {
    pub start: f64,
    pub stop: f64,
}

impl TailWindow {
    /// `[max(2 span, 10), N/10)` with `span` the contact extent.
    pub fn default_for(profile: &PhotonProfile) -> Self {
        let c = &profile.contacts;
        let span = (c[c.len() - 1] - c[0]) as f64;
        Self {
            start: (2.0 * span).max(10.0),
            stop: profile.x.len() as f64 / 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Occupation exponent `a` in `|f_x|^2 ~ r^{-a}`.
    pub exponent: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub points: usize,
}

/// Fits the occupation exponent of the cloud's tail.
pub fn fit_tail_exponent(
    profile: &PhotonProfile,
    window: TailWindow,
    model: TailModel,
) -> Result<TailFit> {
    let n = profile.x.len();
    let reference = match model {
        TailModel::PowerWithOffset => profile.centroid(),
        TailModel::LogLog => *profile.contacts.last().unwrap_or(&0) as f64,
    };
    if !(window.start > 0.0 && window.stop > window.start) {
        return Err(Error::FitWindow(format!(
            "need 0 < start < stop (got [{}, {}))",
            window.start, window.stop
        )));
    }
    if reference + window.stop > n as f64 {
        return Err(Error::FitWindow(format!(
            "window end {} runs past the lattice edge {n}",
            reference + window.stop
        )));
    }
    let mut r = Vec::new();
    let mut y = Vec::new();
    let first = (reference + window.start).ceil() as usize;
    for s in first..n {
        let d = s as f64 - reference;
        if d >= window.stop {
            break;
        }
        r.push(d);
        y.push(profile.amplitude[s]);
    }
    if r.len() < 10 {
        return Err(Error::FitWindow(format!(
            "{} points in window, need at least 10",
            r.len()
        )));
    }
    if let Some(i) = y.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        return Err(Error::FitWindow(format!("zero amplitude at distance {}", r[i])));
    }
    match model {
        TailModel::LogLog => {
            let lx: Vec<f64> = r.iter().map(|v| v.ln()).collect();
            let ly: Vec<f64> = y.iter().map(|v| (v * v).ln()).collect();
            let (slope, icpt) = line_fit(&lx, &ly);
            Ok(TailFit {
                exponent: -slope,
                amplitude: (0.5 * icpt).exp(),
                offset: 0.0,
                points: r.len(),
            })
        }
        TailModel::PowerWithOffset => {
            let cost = |p: f64| offset_fit(&r, &y, p).2;
            let p = minimize_bounded(cost, 0.025, 4.0);
            let (a, b, _) = offset_fit(&r, &y, p);
            Ok(TailFit {
                exponent: 2.0 * p,
                amplitude: a,
                offset: b,
                points: r.len(),
            })
        }
    }
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Relative least squares of `A r^{-p} + B` at fixed `p`; returns `(A, B, cost)`.
fn offset_fit(r: &[f64], y: &[f64], p: f64) -> (f64, f64, f64) {
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ri, &yi) in r.iter().zip(y) {
        let u = ri.powf(-p) / yi;
        let v = 1.0 / yi;
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        t1 += u;
        t2 += v;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (t1 * s22 - t2 * s12) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    let cost = r
        .iter()
        .zip(y)
        .map(|(&ri, &yi)| {
            let e = (a * ri.powf(-p) + b) / yi - 1.0;
            e * e
        })
        .sum();
    (a, b, cost)
}

/// Coarse scan followed by golden-section refinement on `[lo, hi]`.
fn minimize_bounded(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 80;
    let h = (hi - lo) / SCAN as f64;
    let best = (0..=SCAN)
        .map(|i| lo + i as f64 * h)
        .map(|x| (x, f(x)))
        .fold((lo, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
        .0;
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `Delta_r / Delta` over an `(alpha, spacing)` grid; rows follow `x_grid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub alpha_grid: Vec<f64>,
    pub x_grid: Vec<usize>,
    pub delta_r: Vec<Vec<f64>>,
    pub localized_mask: Vec<Vec<bool>>,
}

impl PhaseDiagram {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut rows = Vec::new();
        for (ix, &x) in self.x_grid.iter().enumerate() {
            for (ia, &a) in self.alpha_grid.iter().enumerate() {
                let loc = if self.localized_mask[ix][ia] { 1.0 } else { 0.0 };
                rows.push([a, x as f64, self.delta_r[ix][ia], loc]);
            }
        }
        io::write_csv_file(path, &["alpha", "x", "delta_r", "localized"], rows)
    }
}

/// Independent solves for every grid cell, fanned out over the rayon pool.
///
/// Each cell places `n_contacts` equidistant contacts `x` sites apart.
pub fn phase_diagram(
    template: &SystemConfig,
    n_contacts: usize,
    alpha_grid: &[f64],
    x_grid: &[usize],
    opts: &SolverOptions,
) -> Result<PhaseDiagram> {
    if alpha_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::InvalidConfig("phase diagram grids must be nonempty".into()));
    }
    let cells: Vec<(usize, usize)> = (0..x_grid.len())
        .flat_map(|ix| (0..alpha_grid.len()).map(move |ia| (ix, ia)))
        .collect();
    let solved: Vec<Result<PolaronSolution>> = cells
        .par_iter()
        .map(|&(ix, ia)| {
            let cfg = template.with_geometry(n_contacts, x_grid[ix]).with_alpha(alpha_grid[ia]);
            build_modes(&cfg)
                .and_then(|g| solve_with(&g, &cfg, opts))
                .map_err(|e| Error::SweepCell {
                    alpha: alpha_grid[ia],
                    spacing: x_grid[ix],
                    source: Box::new(e),
                })
        })
        .collect();
    let mut delta_r = vec![vec![0.0; alpha_grid.len()]; x_grid.len()];
    let mut localized_mask = vec![vec![false; alpha_grid.len()]; x_grid.len()];
    for (&(ix, ia), s) in cells.iter().zip(solved) {
        let s = s?;
        delta_r[ix][ia] = s.ratio();
        localized_mask[ix][ia] = s.localized;
    }
    Ok(PhaseDiagram {
        alpha_grid: alpha_grid.to_vec(),
        x_grid: x_grid.to_vec(),
        delta_r,
        localized_mask,
    })
}

/// First `alpha` at which a decreasing curve falls below `level`, linearly interpolated.
pub fn crossing(alpha: &[f64], ratio: &[f64], level: f64) -> Option<f64> {
    alpha
        .windows(2)
        .zip(ratio.windows(2))
        .find(|(_, r)| r[0] >= level && r[1] < level)
        .map(|(a, r)| a[0] + (a[1] - a[0]) * (r[0] - level) / (r[0] - r[1]))
}

/// Largest single-interval drop `-(r_{i+1} - r_i) / (a_{i+1} - a_i)` of a sampled curve.
pub fn steepest_drop(alpha: &[f64], ratio: &[f64]) -> f64 {
    alpha
        .windows(2)
        .zip(ratio.windows(2))
        .map(|(a, r)| (r[0] - r[1]) / (a[1] - a[0]))
        .fold(f64::NEG_INFINITY, f64::max)
}
