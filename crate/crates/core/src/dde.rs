//! Reduced multi-delay model for the atomic amplitude, its Laplace resolvent,
//! and the search for purely imaginary poles (bound states).
//!
//! With `N` contacts a hop delay `zeta` apart, the rotating-frame amplitude obeys
//!
//! ```text
//! dc~/dt = -(gamma / 2N^2) sum_{l,m} exp(i Delta_r |l-m| zeta) c~(t - |l-m| zeta)
//! ```
//!
//! where the double sum runs over ordered contact pairs: delay `j zeta` occurs
//! `N` times for `j = 0` and `2(N - j)` times for `j >= 1`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::polaron::{solve_with, PolaronSolution, SolverOptions};
use crate::waveguide::{build_modes, ohmic, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdeParams {
    /// Bare rate `J_Ohm(Delta_r) = pi alpha Delta_r`.
    pub gamma: f64,
    pub delta_r: f64,
    /// Single-hop delay `x / v_g`.
    pub zeta: f64,
    pub n_contacts: usize,
}

impl DdeParams {
    pub fn new(gamma: f64, delta_r: f64, zeta: f64, n_contacts: usize) -> Result<Self> {
        let p = Self {
            gamma,
            delta_r,
            zeta,
            n_contacts,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of an equidistant giant atom at its solved splitting.
    pub fn from_solution(solution: &PolaronSolution, config: &SystemConfig) -> Result<Self> {
        Self::new(
            ohmic(solution.delta_r, config.alpha),
            solution.delta_r,
            config.hop_delay(),
            config.n_contacts(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.zeta >= 0.0
            && self.zeta.is_finite()
            && self.gamma >= 0.0
            && self.gamma.is_finite()
            && self.delta_r.is_finite()
            && self.n_contacts >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "dde parameters need zeta >= 0, gamma >= 0, n_contacts >= 1 (got {self:?})"
            )))
        }
    }

    /// Pair multiplicities times phases, `(j, weight_j)` with the `gamma/2N^2` prefactor folded in.
    pub fn kernel(&self) -> Vec<(usize, C64)> {
        let n = self.n_contacts;
        let pre = self.gamma / (2.0 * (n * n) as f64);
        (0..n)
            .map(|j| {
                let mult = if j == 0 { n } else { 2 * (n - j) } as f64;
                (j, C64::from_polar(pre * mult, self.delta_r * j as f64 * self.zeta))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdeOptions {
    /// Upper bound on the step; the step is then shrunk to divide `zeta`.
    pub max_step: Option<f64>,
}

impl Default for DdeOptions {
    fn default() -> Self {
        Self { max_step: None }
    }
}

/// Nodes of a method-of-steps solution with one-sided derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdeSeries {
    pub t: Vec<f64>,
    pub c: Vec<C64>,
    /// Derivative from the left at each node (`d_minus[0]` is unused).
    pub d_minus: Vec<C64>,
    /// Derivative from the right at each node.
    pub d_plus: Vec<C64>,
    pub h: f64,
}

impl DdeSeries {
    /// Cubic Hermite interpolant; clamps outside the computed range.
    pub fn at(&self, t: f64) -> C64 {
        if t <= 0.0 {
            return self.c[0];
        }
        let last = self.t.len() - 1;
        let u = t / self.h;
        let i = (u.floor() as usize).min(last.saturating_sub(1));
        if i >= last {
            return self.c[last];
        }
        let s = (u - i as f64).clamp(0.0, 1.0);
        hermite(self.c[i], self.c[i + 1], self.d_plus[i], self.d_minus[i + 1], self.h, s)
    }

    /// `P_e = P_GS + (Delta_r/Delta) |c~|^2` at every node.
    pub fn lab_excitation(&self, delta_r: f64, delta: f64) -> Vec<f64> {
        let ratio = delta_r / delta;
        self.c
            .iter()
            .map(|c| 0.5 * (1.0 - ratio) + ratio * c.norm_sqr())
            .collect()
    }

    /// Rows `(t, Re c, Im c, |c|^2)`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .t
            .iter()
            .zip(&self.c)
            .map(|(&t, c)| [t, c.re, c.im, c.norm_sqr()]);
        io::write_csv_file(path, &["t", "re_c", "im_c", "abs_c2"], rows)
    }
}

fn hermite(y0: C64, y1: C64, d0: C64, d1: C64, h: f64, s: f64) -> C64 {
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * (h * (s3 - 2.0 * s2 + s))
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * (h * (s3 - s2))
}

/// Method of steps with classical RK4.
///
/// The step divides `zeta`, so every delay lands on a node or a half node;
/// half-node history comes from the Hermite interpolant of the stored nodes.
/// A delayed term `j` is active during a step iff the step starts at or after `j zeta`.
pub fn integrate_dde(params: &DdeParams, c0: C64, t_max: f64, opts: &DdeOptions) -> Result<DdeSeries> {
    params.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) || !c0.norm().is_finite() {
        return Err(Error::InvalidConfig(format!(
            "integrate_dde needs finite c0 and t_max > 0 (got {t_max})"
        )));
    }
    let target = opts.max_step.unwrap_or_else(|| {
        if params.gamma > 0.0 {
            (0.01 / params.gamma).min(t_max / 100.0)
        } else {
            t_max / 100.0
        }
    });
    let kernel = params.kernel();
    let delayed = params.zeta > 0.0 && params.n_contacts > 1;
    let (h, m) = if delayed {
        let m = (params.zeta / target).ceil().max(1.0) as usize;
        (params.zeta / m as f64, m)
    } else {
        (t_max / (t_max / target).ceil(), 0)
    };
    // Without delays every pair collapses onto the instantaneous term.
    let instant: C64 = if delayed {
        kernel[0].1
    } else {
        kernel.iter().map(|k| k.1).sum()
    };
    let steps = (t_max / h).ceil() as usize;

    let mut c = Vec::with_capacity(steps + 1);
    let mut d_minus = Vec::with_capacity(steps + 1);
    let mut d_plus = Vec::with_capacity(steps + 1);
    c.push(c0);
    d_minus.push(C64::new(0.0, 0.0));

    // History term for step `n` at fraction theta in {0, 1/2, 1}, given nodes so far.
    let history = |c: &[C64], dp: &[C64], dm: &[C64], n: usize, half: u8| -> C64 {
        if !delayed {
            return C64::new(0.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for &(j, w) in &kernel[1..] {
            let lag = j * m;
            if n < lag {
                break;
            }
            let i = n - lag;
            let v = match half {
                0 => c[i],
                2 => c[i + 1],
                _ => hermite(c[i], c[i + 1], dp[i], dm[i + 1], h, 0.5),
            };
            acc += w * v;
        }
        acc
    };
    let rhs = |y: C64, hist: C64| -(instant * y + hist);

    for n in 0..steps {
        // Right derivative at the step start uses the terms active in this step.
        let h0 = history(&c, &d_plus, &d_minus, n, 0);
        d_plus.push(rhs(c[n], h0));
        let hm = history(&c, &d_plus, &d_minus, n, 1);
        let h1 = history(&c, &d_plus, &d_minus, n, 2);
        let y = c[n];
        let k1 = d_plus[n];
        let k2 = rhs(y + k1 * (0.5 * h), hm);
        let k3 = rhs(y + k2 * (0.5 * h), hm);
        let k4 = rhs(y + k3 * h, h1);
        let next = y + (k1 + 2.0 * (k2 + k3) + k4) * (h / 6.0);
        c.push(next);
        d_minus.push(rhs(next, h1));
    }
    let hl = history(&c, &d_plus, &d_minus, steps, 0);
    d_plus.push(rhs(c[steps], hl));
    Ok(DdeSeries {
        t: (0..=steps).map(|i| i as f64 * h).collect(),
        c,
        d_minus,
        d_plus,
        h,
    })
}

/// Laplace-space bracket of the non-rotating amplitude `c = exp(-i Delta_r t/2) c~`:
/// `s + i Delta_r/2 + (gamma/2N^2) sum_{l,m} exp((-s + i Delta_r/2)|l-m| zeta)`.
pub fn laplace_bracket(s: C64, params: &DdeParams) -> C64 {
    let pre = params.gamma / (2.0 * (params.n_contacts * params.n_contacts) as f64);
    let n = params.n_contacts;
    let z = -s + C64::new(0.0, 0.5 * params.delta_r);
    let mut sum = C64::new(n as f64, 0.0);
    for j in 1..n {
        sum += 2.0 * (n - j) as f64 * (z * (j as f64 * params.zeta)).exp();
    }
    s + C64::new(0.0, 0.5 * params.delta_r) + pre * sum
}

/// Magnitude below which the bracket counts as a pole.
pub const POLE_THRESHOLD: f64 = 1e-14;

/// `c^(s) = 1 / bracket(s)` for `c(0) = 1`.
pub fn laplace_resolvent(s: C64, params: &DdeParams) -> Result<C64> {
    let b = laplace_bracket(s, params);
    if b.norm() < POLE_THRESHOLD {
        return Err(Error::AtPole {
            magnitude: b.norm(),
        });
    }
    Ok(b.inv())
}

fn check_mode(n: i64, n_contacts: usize) -> Result<()> {
    if n_contacts < 2 || n.rem_euclid(n_contacts as i64) == 0 {
        return Err(Error::SingularMode { n, n_contacts });
    }
    Ok(())
}

/// Candidate imaginary pole `s_n = -i (2 pi n / (N zeta) - Delta_r/2)` of the bracket.
///
/// There the bracket's real part vanishes identically and its imaginary part
/// is `bound_state_residual / zeta`.
pub fn pole_candidate(n: i64, params: &DdeParams) -> C64 {
    let w = 2.0 * PI * n as f64 / (params.n_contacts as f64 * params.zeta);
    C64::new(0.0, -(w - 0.5 * params.delta_r))
}

/// `Delta_r zeta - 2 pi n / N + (gamma zeta / 2N) cot(n pi / N)`.
pub fn bound_state_residual(n: i64, params: &DdeParams) -> Result<f64> {
    check_mode(n, params.n_contacts)?;
    let nc = params.n_contacts as f64;
    let theta = PI * n as f64 / nc;
    Ok(params.delta_r * params.zeta - 2.0 * n as f64 * PI / nc
        + params.gamma * params.zeta / (2.0 * nc) * (theta.cos() / theta.sin()))
}

/// Root in `Delta_r zeta` of the bound-state condition when `gamma = pi alpha Delta_r`.
pub fn delta_r_zeta_solution(n: i64, alpha: f64, n_contacts: usize) -> Result<f64> {
    check_mode(n, n_contacts)?;
    let nc = n_contacts as f64;
    let theta = PI * n as f64 / nc;
    Ok(2.0 * PI * n as f64 / nc / (1.0 + PI * alpha / (2.0 * nc) * theta.cos() / theta.sin()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub n: i64,
    pub alpha: f64,
    pub spacing: usize,
    pub delta_r: f64,
    pub delta_r_zeta_solution: f64,
    pub residual: f64,
    /// Other mode indices with a root within the coexistence tolerance in `alpha`.
    pub coexisting: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub solver: SolverOptions,
    /// Roots of different `n` closer than this in `alpha` coexist.
    pub coexistence_tolerance: f64,
    /// Bisection stops below this bracket width in `alpha`.
    pub alpha_tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            coexistence_tolerance: 1e-3,
            alpha_tolerance: 1e-9,
        }
    }
}

/// Locates `alpha` values at fixed geometry where each mode `n` becomes a bound state.
///
/// The residual `Delta_r(alpha) zeta - (Delta_r zeta)_n(alpha)` is sampled on
/// `alpha_grid`, sign changes are bisected with fresh solves, and the root is
/// polished by a finite-difference Newton step.
pub fn bound_state_scan(
    template: &SystemConfig,
    modes: &[i64],
    alpha_grid: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<PoleReport>> {
    let nc = template.n_contacts();
    for &n in modes {
        check_mode(n, nc)?;
    }
    let zeta = template.hop_delay();
    if zeta <= 0.0 {
        return Err(Error::InvalidConfig(
            "bound-state scan needs at least two separated contacts".into(),
        ));
    }
    let solve = |alpha: f64| -> Result<f64> {
        let cfg = template.with_alpha(alpha);
        let grid = build_modes(&cfg)?;
        Ok(solve_with(&grid, &cfg, &opts.solver)?.delta_r)
    };
    let dr: Vec<f64> = alpha_grid
        .par_iter()
        .map(|&a| solve(a))
        .collect::<Result<_>>()?;

    let residual = |n: i64, alpha: f64, delta_r: f64| -> f64 {
        delta_r * zeta - delta_r_zeta_solution(n, alpha, nc).unwrap_or(f64::NAN)
    };
    let brackets: Vec<(i64, f64, f64)> = modes
        .iter()
        .flat_map(|&n| {
            let dr = &dr;
            alpha_grid.windows(2).enumerate().filter_map(move |(i, a)| {
                let r0 = residual(n, a[0], dr[i]);
                let r1 = residual(n, a[1], dr[i + 1]);
                (r0 == 0.0 || r0.signum() != r1.signum()).then_some((n, a[0], a[1]))
            })
        })
        .collect();

    let mut reports: Vec<PoleReport> = brackets
        .par_iter()
        .map(|&(n, lo, hi)| -> Result<PoleReport> {
            let f = |a: f64| -> Result<(f64, f64)> {
                let d = solve(a)?;
                Ok((residual(n, a, d), d))
            };
            let (mut lo, mut hi) = (lo, hi);
            let mut flo = f(lo)?.0;
            while hi - lo > opts.alpha_tolerance {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?.0;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let mut alpha = 0.5 * (lo + hi);
            let (mut r, mut d) = f(alpha)?;
            let eps = 1e-7;
            let (rp, _) = f(alpha + eps)?;
            let slope = (rp - r) / eps;
            if slope != 0.0 && slope.is_finite() {
                let polished = alpha - r / slope;
                if (polished - alpha).abs() < 10.0 * opts.alpha_tolerance.max(1e-12) {
                    let (rn, dn) = f(polished)?;
                    if rn.abs() < r.abs() {
                        alpha = polished;
                        r = rn;
                        d = dn;
                    }
                }
            }
            Ok(PoleReport {
                n,
                alpha,
                spacing: template.nearest_spacing(),
                delta_r: d,
                delta_r_zeta_solution: delta_r_zeta_solution(n, alpha, nc)?,
                residual: r,
                coexisting: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    let roots: Vec<(i64, f64)> = reports.iter().map(|r| (r.n, r.alpha)).collect();
    for rep in &mut reports {
        rep.coexisting = roots
            .iter()
            .filter(|&&(n, a)| n != rep.n && (a - rep.alpha).abs() < opts.coexistence_tolerance)
            .map(|&(n, _)| n)
            .collect();
    }
    reports.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.n.cmp(&b.n)));
    Ok(reports)
}
