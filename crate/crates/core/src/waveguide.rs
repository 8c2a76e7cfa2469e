//! Discrete transmission-line model: lattice momenta, the LC-chain dispersion,
//! and the position-dependent couplings of a multi-contact emitter.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Physical and numerical parameters of one giant-atom setup.
///
/// Energies are in units of `delta` unless it is overridden, positions are
/// lattice sites (integer multiples of `v_g / omega_c`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Bare qubit splitting.
    pub delta: f64,
    /// Dimensionless coupling strength per contact.
    pub alpha: f64,
    /// Lattice cutoff `v_g / dx`.
    pub omega_c: f64,
    /// Group velocity.
    pub v_g: f64,
    /// Number of lattice sites `N`; the line has length `N dx`.
    pub n_modes: usize,
    /// Contact sites, non-decreasing, each in `[0, n_modes)`; repeated sites model the dipole limit.
    pub contacts: Vec<usize>,
}

impl SystemConfig {
    /// Equidistant contacts `spacing` sites apart, centred on the lattice.
    pub fn giant_atom(
        alpha: f64,
        omega_c: f64,
        n_modes: usize,
        n_contacts: usize,
        spacing: usize,
    ) -> Self {
        Self {
            delta: 1.0,
            alpha,
            omega_c,
            v_g: 1.0,
            n_modes,
            contacts: equidistant_contacts(n_modes, n_contacts, spacing),
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            ..self.clone()
        }
    }

    /// Same system with `n_contacts` equidistant contacts `spacing` sites apart.
    pub fn with_geometry(&self, n_contacts: usize, spacing: usize) -> Self {
        Self {
            contacts: equidistant_contacts(self.n_modes, n_contacts, spacing),
            ..self.clone()
        }
    }

    pub fn n_contacts(&self) -> usize {
        self.contacts.len()
    }

    pub fn lattice_spacing(&self) -> f64 {
        self.v_g / self.omega_c
    }

    pub fn length(&self) -> f64 {
        self.n_modes as f64 * self.lattice_spacing()
    }

    /// Contact positions in length units.
    pub fn contact_positions(&self) -> Vec<f64> {
        let dx = self.lattice_spacing();
        self.contacts.iter().map(|&s| s as f64 * dx).collect()
    }

    /// Distance between the two closest contacts in sites (0 for one contact).
    pub fn nearest_spacing(&self) -> usize {
        self.contacts
            .windows(2)
            .map(|w| w[1] - w[0])
            .min()
            .unwrap_or(0)
    }

    /// Single-hop delay `x / v_g` between the two closest contacts.
    pub fn hop_delay(&self) -> f64 {
        self.nearest_spacing() as f64 * self.lattice_spacing() / self.v_g
    }

    /// Every violated invariant as `(field path, message)`, without stopping at the first.
    pub fn diagnostics(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |path: &str, msg: String| out.push((path.to_string(), msg));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            push("system.delta", format!("must be > 0 (got {})", self.delta));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            push("system.alpha", format!("must be >= 0 (got {})", self.alpha));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            push("system.omega_c", format!("must be > 0 (got {})", self.omega_c));
        }
        if !(self.v_g > 0.0 && self.v_g.is_finite()) {
            push("system.v_g", format!("must be > 0 (got {})", self.v_g));
        }
        if self.n_modes < 2 {
            push("system.n_modes", format!("must be >= 2 (got {})", self.n_modes));
        }
        if self.contacts.is_empty() {
            push("system.contacts", "must hold at least one contact".to_string());
        }
        for (i, &s) in self.contacts.iter().enumerate() {
            if s >= self.n_modes {
                push(
                    &format!("system.contacts[{i}]"),
                    format!("contact {i} at site {s} lies outside the lattice [0, {})", self.n_modes),
                );
            }
        }
        if self.contacts.windows(2).any(|w| w[1] < w[0]) {
            push("system.contacts", "must be sorted in increasing order".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((index, &site)) = self
            .contacts
            .iter()
            .enumerate()
            .find(|(_, &s)| s >= self.n_modes)
        {
            return Err(Error::ContactOutOfRange {
                index,
                site,
                n_sites: self.n_modes,
            });
        }
        match self.diagnostics().into_iter().next() {
            Some((path, msg)) => Err(Error::InvalidConfig(format!("{path} {msg}"))),
            None => Ok(()),
        }
    }
}

/// `n_contacts` sites `spacing` apart, centred on a lattice of `n_sites`.
/// With `spacing == 0` every contact sits on the centre site.
pub fn equidistant_contacts(n_sites: usize, n_contacts: usize, spacing: usize) -> Vec<usize> {
    if n_contacts == 0 {
        return Vec::new();
    }
    let span = (n_contacts - 1) * spacing;
    let first = n_sites.saturating_sub(span) / 2;
    (0..n_contacts).map(|j| first + j * spacing).collect()
}

/// Momenta, dispersion and couplings of the discretised line.
///
/// Momenta are `k_n = 2 pi n / L` with `n` running over `-N/2 ..= N/2`
/// (both band-edge points are kept for even `N`, giving `N + 1` entries).
#[derive(Clone, Debug)]
pub struct ModeGrid {
    pub n_index: Vec<i64>,
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    pub g_tilde: Vec<C64>,
    pub g_single: Vec<f64>,
    /// Position of the inert `k = 0` entry.
    pub zero_mode: usize,
    pub n_sites: usize,
    pub lattice_spacing: f64,
    /// Upper band edge `2 omega_c`.
    pub band_top: f64,
}

impl ModeGrid {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// `k = 0` carries no coupling and is skipped by every mode sum.
    pub fn is_inert(&self, i: usize) -> bool {
        self.omega[i] == 0.0
    }

    /// Indices of all modes that enter mode sums.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.is_inert(i))
    }

    /// Smallest nonzero mode frequency; the infrared resolution of the lattice.
    pub fn lowest_frequency(&self) -> f64 {
        self.omega
            .iter()
            .copied()
            .filter(|&w| w > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the mode with momentum `-k_n`.
    pub fn mirror(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Rows `(k, omega, Re g~, Im g~)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.len()).map(|i| {
            [
                self.k[i],
                self.omega[i],
                self.g_tilde[i].re,
                self.g_tilde[i].im,
            ]
        })
    }
}

/// LC-chain dispersion `omega_c sqrt(2 - 2 cos(k dx))`.
pub fn dispersion(k: f64, omega_c: f64, dx: f64) -> f64 {
    // 2|sin(k dx / 2)| is the cancellation-free form of sqrt(2 - 2cos).
    2.0 * omega_c * (0.5 * k * dx).sin().abs()
}

/// Builds the mode grid for `config`.
pub fn build_modes(config: &SystemConfig) -> Result<ModeGrid> {
    config.validate()?;
    let n = config.n_modes;
    let dx = config.lattice_spacing();
    let length = config.length();
    let half = (n / 2) as i64;
    let n_index: Vec<i64> = (-half..=half).collect();
    let positions = config.contact_positions();
    let n_contacts = positions.len() as f64;
    let g = (PI * config.v_g * config.alpha).sqrt();

    let mut k = Vec::with_capacity(n_index.len());
    let mut omega = Vec::with_capacity(n_index.len());
    let mut g_single = Vec::with_capacity(n_index.len());
    let mut g_tilde = Vec::with_capacity(n_index.len());
    for &m in &n_index {
        let km = 2.0 * PI * m as f64 / length;
        let w = if m == 0 {
            0.0
        } else {
            dispersion(km, config.omega_c, dx)
        };
        let gk = g * (w / (2.0 * length)).sqrt();
        // Phases from the integer site index, reduced mod N; k -> -k is an exact conjugate.
        let m_abs = m.unsigned_abs() as usize;
        let phase_sum: C64 = config
            .contacts
            .iter()
            .map(|&s| {
                let theta = 2.0 * PI * ((m_abs * s) % n) as f64 / n as f64;
                C64::from_polar(1.0, theta)
            })
            .sum();
        let phase_sum = if m < 0 { phase_sum.conj() } else { phase_sum };
        k.push(km);
        omega.push(w);
        g_single.push(gk);
        g_tilde.push(phase_sum * (gk / n_contacts));
    }
    let zero_mode = n_index.iter().position(|&m| m == 0).unwrap_or(0);
    Ok(ModeGrid {
        n_index,
        k,
        omega,
        g_tilde,
        g_single,
        zero_mode,
        n_sites: n,
        lattice_spacing: dx,
        band_top: 2.0 * config.omega_c,
    })
}

/// Interference factor `|sum_j exp(i omega x_j / v_g)|^2 / N_c^2`.
///
/// Evaluated from the contact sum, so it is finite everywhere including the
/// points where the closed equidistant ratio form is 0/0.
pub fn modulation(omega: f64, config: &SystemConfig) -> f64 {
    let positions = config.contact_positions();
    if positions.is_empty() {
        return 0.0;
    }
    let x0 = positions[0];
    let sum: C64 = positions
        .iter()
        .map(|&x| C64::from_polar(1.0, omega * (x - x0) / config.v_g))
        .sum();
    let nc = positions.len() as f64;
    (sum.norm_sqr() / (nc * nc)).clamp(0.0, 1.0)
}

/// Ohmic spectral density of a single point contact, `pi alpha omega`.
pub fn ohmic(omega: f64, alpha: f64) -> f64 {
    PI * alpha * omega
}

/// Continuum spectral density `J(omega) = pi alpha omega G(omega)`.
pub fn spectral_density(omega: f64, config: &SystemConfig) -> f64 {
    ohmic(omega, config.alpha) * modulation(omega, config)
}

/// Histogram estimate of `2 pi sum_k |g~_k|^2 delta(omega - omega_k)` on
/// `n_bins` equal bins over `[0, omega_max]`; returns `(bin centre, J)`.
pub fn binned_spectral_density(grid: &ModeGrid, omega_max: f64, n_bins: usize) -> Vec<(f64, f64)> {
    let width = omega_max / n_bins as f64;
    let mut acc = vec![0.0; n_bins];
    for i in grid.active() {
        let b = (grid.omega[i] / width) as usize;
        if b < n_bins {
            acc[b] += 2.0 * PI * grid.g_tilde[i].norm_sqr();
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(b, s)| ((b as f64 + 0.5) * width, s / width))
        .collect()
}

/// Writes the grid as CSV columns `(k, omega, re_g, im_g)`.
pub fn write_modes(grid: &ModeGrid, path: &Path) -> Result<()> {
    io::write_csv_file(path, &["k", "omega", "re_g", "im_g"], grid.rows())
}
