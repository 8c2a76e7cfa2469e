//! Single-excitation evolution under the number-conserving polaron Hamiltonian.
//!
//! In terms of the non-rotating amplitudes the generator is
//!
//! ```text
//! i dc/dt     = (Delta_r/2) c + 2 Delta_r S
//! i dphi_k/dt = (omega_k - Delta_r/2) phi_k + 2 Delta_r f_k^* (c + S),   S = sum_l f_l phi_l
//! ```
//!
//! The reported atomic amplitude is `c~ = exp(i Delta_r t / 2) c`.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{to_sites, Phase};
use crate::error::{Error, Result};
use crate::io;
use crate::markovian::decay_rate;
use crate::polaron::{
    lab_excitation, lab_occupations, solve_with, ExcitationState, PolaronSolution, SolverOptions,
};
use crate::waveguide::{build_modes, ModeGrid, SystemConfig};

/// Largest stable step as a fraction of `1 / omega_max`.
pub const STEP_FACTOR: f64 = 0.05;
/// Samples stored per run (at most one more, for the final time).
pub const SAMPLES: usize = 2000;

/// Largest admissible step `0.05 / (2 omega_c)`.
pub fn step_bound(grid: &ModeGrid) -> f64 {
    STEP_FACTOR / grid.band_top
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    /// Step; `None` picks the largest stable step that divides `t_max`.
    pub dt: Option<f64>,
    /// Times at which the real-space field is recorded.
    pub snapshot_times: Vec<f64>,
    /// Abort when `| |psi|^2 - 1 |` exceeds this.
    pub norm_limit: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            dt: None,
            snapshot_times: Vec::new(),
            norm_limit: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub time: f64,
    pub occupation: Vec<f64>,
}

/// Sampled observables of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Rotating-frame atomic amplitude `c~`.
    pub c: Vec<C64>,
    /// `|c|^2`.
    pub p_e_polaron: Vec<f64>,
    /// Lab-frame excitation probability.
    pub p_e: Vec<f64>,
    pub field_snapshots: Vec<FieldSnapshot>,
    pub final_state: ExcitationState,
    pub dt: f64,
    pub steps: usize,
    pub max_norm_drift: f64,
    pub max_energy_drift: f64,
}

impl Trajectory {
    /// Rows `(t, Re c, Im c, P_e polaron, P_e lab)`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = (0..self.times.len()).map(|i| {
            [
                self.times[i],
                self.c[i].re,
                self.c[i].im,
                self.p_e_polaron[i],
                self.p_e[i],
            ]
        });
        io::write_csv_file(path, &["t", "re_c", "im_c", "p_e_polaron", "p_e_lab"], rows)
    }

    /// Mean lab-frame `P_e` over samples with `t >= t0`.
    pub fn mean_p_e_after(&self, t0: f64) -> f64 {
        let v: Vec<f64> = self
            .times
            .iter()
            .zip(&self.p_e)
            .filter(|(&t, _)| t >= t0)
            .map(|(_, &p)| p)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Diagonal and coupling data of the generator.
struct Generator {
    diag: Vec<f64>,
    f: Vec<C64>,
    beta: f64,
}

impl Generator {
    fn new(solution: &PolaronSolution, grid: &ModeGrid) -> Self {
        let half = 0.5 * solution.delta_r;
        let mut diag = Vec::with_capacity(grid.len() + 1);
        diag.push(half);
        diag.extend(grid.omega.iter().map(|&w| w - half));
        Self {
            diag,
            f: solution.f.clone(),
            beta: 2.0 * solution.delta_r,
        }
    }

    fn overlap(&self, y: &[C64]) -> C64 {
        self.f.iter().zip(&y[1..]).map(|(a, b)| a * b).sum()
    }

    /// `out = -i H y`.
    fn apply(&self, y: &[C64], out: &mut [C64]) {
        self.apply_coupling(y, out);
        for ((o, a), &d) in out.iter_mut().zip(y).zip(&self.diag) {
            *o += C64::new(0.0, -d) * a;
        }
    }

    /// `out = -i V y` for the off-diagonal part `V = H - diag(d)`.
    fn apply_coupling(&self, y: &[C64], out: &mut [C64]) {
        let s = self.overlap(y);
        let mi = C64::new(0.0, -1.0);
        out[0] = mi * self.beta * s;
        let drive = mi * self.beta * (y[0] + s);
        for k in 1..y.len() {
            out[k] = self.f[k - 1].conj() * drive;
        }
    }

    fn energy(&self, y: &[C64]) -> f64 {
        let s = self.overlap(y);
        let diag: f64 = self.diag.iter().zip(y).map(|(d, z)| d * z.norm_sqr()).sum();
        // H = diag(d) with d_e shifted by -beta, plus beta |u><u|, u = (1, f^*).
        let cross = 2.0 * (y[0].conj() * s).re;
        diag + self.beta * (cross + s.norm_sqr())
    }
}

/// Time derivative `(dc/dt, dphi/dt)` of the non-rotating amplitudes.
pub fn polaron_rhs(
    state: &ExcitationState,
    solution: &PolaronSolution,
    grid: &ModeGrid,
) -> (C64, Vec<C64>) {
    let gen = Generator::new(solution, grid);
    let y = pack(state);
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    gen.apply(&y, &mut out);
    (out[0], out[1..].to_vec())
}

/// `<H_eff>` of a single-excitation state (ground-state energy excluded).
pub fn effective_energy(state: &ExcitationState, solution: &PolaronSolution, grid: &ModeGrid) -> f64 {
    Generator::new(solution, grid).energy(&pack(state))
}

fn pack(state: &ExcitationState) -> Vec<C64> {
    let mut y = Vec::with_capacity(state.phi.len() + 1);
    y.push(state.c);
    y.extend_from_slice(&state.phi);
    y
}

fn unpack(y: &[C64], time: f64) -> ExcitationState {
    ExcitationState {
        c: y[0],
        phi: y[1..].to_vec(),
        time,
    }
}

/// Phase factors `exp(-i d t)` advanced by repeated multiplication and
/// re-anchored exactly every few thousand steps.
struct Phases {
    diag: Vec<f64>,
    now: Vec<C64>,
    half: Vec<C64>,
}

impl Phases {
    const ANCHOR: usize = 4096;

    fn new(diag: &[f64], h: f64) -> Self {
        Self {
            diag: diag.to_vec(),
            now: diag.iter().map(|_| C64::new(1.0, 0.0)).collect(),
            half: diag.iter().map(|&d| C64::from_polar(1.0, -0.5 * d * h)).collect(),
        }
    }

    fn at(&mut self, t: f64) {
        for (p, &d) in self.now.iter_mut().zip(&self.diag) {
            *p = C64::from_polar(1.0, -d * t);
        }
    }

    fn advance_half(&mut self) {
        for (p, q) in self.now.iter_mut().zip(&self.half) {
            *p *= q;
        }
    }
}

/// Classical RK4 on the rotating-frame amplitudes `y~ = exp(i D t) y`, where `D`
/// is the diagonal of the generator; the free phases are then exact and only
/// the coupling is integrated.
///
/// `y~_e` is the rotating atomic amplitude `c~`, and `y~_k` carries the phase
/// `exp(i (omega_k - Delta_r/2) t)`.
pub fn integrate(
    initial: &ExcitationState,
    solution: &PolaronSolution,
    grid: &ModeGrid,
    t_max: f64,
    opts: &DynamicsOptions,
) -> Result<Trajectory> {
    if initial.phi.len() != grid.len() {
        return Err(Error::InvalidConfig(format!(
            "state has {} modes, grid has {}",
            initial.phi.len(),
            grid.len()
        )));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidConfig(format!("t_max must be > 0 (got {t_max})")));
    }
    let bound = step_bound(grid);
    let (dt, steps) = match opts.dt {
        Some(dt) if dt > bound => return Err(Error::StepTooLarge { dt, bound }),
        Some(dt) if dt <= 0.0 => {
            return Err(Error::InvalidConfig(format!("dt must be > 0 (got {dt})")))
        }
        Some(dt) => (dt, (t_max / dt).round().max(1.0) as usize),
        None => {
            let n = (t_max / bound).ceil() as usize;
            (t_max / n as f64, n)
        }
    };
    let stride = steps.div_ceil(SAMPLES).max(1);
    let mut snaps: Vec<(usize, f64)> = opts
        .snapshot_times
        .iter()
        .map(|&t| (((t / dt).round().max(0.0) as usize).min(steps), t))
        .collect();
    snaps.sort_by_key(|s| s.0);

    let gen = Generator::new(solution, grid);
    let mut phases = Phases::new(&gen.diag, dt);
    let mut y = pack(initial);
    let m = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut lab = y.clone();
    let norm0 = initial.norm_sqr();
    let e0 = gen.energy(&y);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; m], vec![zero; m], vec![zero; m], vec![zero; m], vec![zero; m]);

    // k = exp(iDt) (-i V) exp(-iDt) y~, with `now` holding exp(-iDt).
    let rotated = |y: &[C64], ph: &Phases, lab: &mut [C64], out: &mut [C64]| {
        for ((l, a), p) in lab.iter_mut().zip(y).zip(&ph.now) {
            *l = a * p;
        }
        gen.apply_coupling(lab, out);
        for (o, p) in out.iter_mut().zip(&ph.now) {
            *o *= p.conj();
        }
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        c: Vec::new(),
        p_e_polaron: Vec::new(),
        p_e: Vec::new(),
        field_snapshots: Vec::new(),
        final_state: initial.clone(),
        dt,
        steps,
        max_norm_drift: 0.0,
        max_energy_drift: 0.0,
    };
    let mut next_snap = 0;
    for step in 0..=steps {
        let t = step as f64 * dt;
        if step % Phases::ANCHOR == 0 {
            phases.at(t);
        }
        let sample = step % stride == 0 || step == steps;
        let snap = next_snap < snaps.len() && snaps[next_snap].0 == step;
        if sample || snap || step == steps {
            for ((l, a), p) in lab.iter_mut().zip(&y).zip(&phases.now) {
                *l = a * p;
            }
            let state = unpack(&lab, t);
            let drift = (state.norm_sqr() - norm0).abs();
            traj.max_norm_drift = traj.max_norm_drift.max(drift);
            traj.max_energy_drift = traj.max_energy_drift.max((gen.energy(&lab) - e0).abs());
            if drift > opts.norm_limit {
                return Err(Error::NormDrift {
                    drift,
                    time: t,
                    limit: opts.norm_limit,
                });
            }
            if sample {
                traj.times.push(t);
                traj.c.push(y[0]);
                traj.p_e_polaron.push(y[0].norm_sqr());
                traj.p_e.push(lab_excitation(&state, solution)?);
            }
            while next_snap < snaps.len() && snaps[next_snap].0 == step {
                traj.field_snapshots.push(FieldSnapshot {
                    time: t,
                    occupation: field_snapshot(&state, solution, grid),
                });
                next_snap += 1;
            }
            if step == steps {
                traj.final_state = state;
                break;
            }
        }
        rotated(&y, &phases, &mut lab, &mut k1);
        phases.advance_half();
        axpy(&y, &k1, 0.5 * dt, &mut tmp);
        rotated(&tmp, &phases, &mut lab, &mut k2);
        axpy(&y, &k2, 0.5 * dt, &mut tmp);
        rotated(&tmp, &phases, &mut lab, &mut k3);
        phases.advance_half();
        axpy(&y, &k3, dt, &mut tmp);
        rotated(&tmp, &phases, &mut lab, &mut k4);
        let h6 = dt / 6.0;
        for i in 0..m {
            y[i] += (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) * h6;
        }
    }
    Ok(traj)
}

fn axpy(y: &[C64], k: &[C64], h: f64, out: &mut [C64]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = a + b * h;
    }
}

/// Lab-frame photon occupation on the lattice sites.
pub fn field_snapshot(
    state: &ExcitationState,
    solution: &PolaronSolution,
    grid: &ModeGrid,
) -> Vec<f64> {
    let fx = to_sites(grid, &solution.f, Phase::Minus);
    let px = to_sites(grid, &state.phi, Phase::Plus);
    let cc = state.c.conj();
    fx.iter()
        .zip(&px)
        .map(|(f, p)| p.norm_sqr() - 2.0 * (f * cc * p).re + f.norm_sqr())
        .collect()
}

/// Lab-frame occupations of the modes, indexed like the grid.
pub fn mode_occupations(state: &ExcitationState, solution: &PolaronSolution) -> Vec<f64> {
    lab_occupations(state, solution)
}

/// Derived scalars recorded alongside a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmissionSummary {
    pub delta_r: f64,
    pub gamma_r: f64,
    pub p_e_ground: f64,
    pub localized: bool,
}

/// Grid, solve and evolve from `(c, phi) = (1, 0)`.
pub fn spontaneous_emission(
    config: &SystemConfig,
    solver: &SolverOptions,
    t_max: f64,
    opts: &DynamicsOptions,
) -> Result<(PolaronSolution, Trajectory)> {
    let grid = build_modes(config)?;
    let solution = solve_with(&grid, config, solver)?;
    let traj = integrate(
        &ExcitationState::excited(grid.len()),
        &solution,
        &grid,
        t_max,
        opts,
    )?;
    Ok((solution, traj))
}

pub fn emission_summary(solution: &PolaronSolution, config: &SystemConfig) -> EmissionSummary {
    EmissionSummary {
        delta_r: solution.delta_r,
        gamma_r: decay_rate(solution, config),
        p_e_ground: solution.ground_state_excitation(),
        localized: solution.localized,
    }
}

/// Writes `(x, n)` for one snapshot.
pub fn write_snapshot_csv(snapshot: &FieldSnapshot, path: &Path) -> Result<()> {
    let rows = snapshot
        .occupation
        .iter()
        .enumerate()
        .map(|(x, &n)| [x as f64, n]);
    io::write_csv_file(path, &["x", "n"], rows)
}
