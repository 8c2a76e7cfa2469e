//! Independent reference computations used only by the tests.
#![allow(dead_code)]

use giantpolaron_core::{ModeGrid, PolaronSolution, C64};

/// Exact evolution of `(c, phi) = (1, 0)` under `H = D + beta |u><u|`, built from
/// the roots of the secular equation `1 + beta sum_i w_i / (D_i - lambda) = 0`.
///
/// Here `D_e = -3 Delta_r / 2`, `D_k = omega_k - Delta_r / 2`, `u = (1, f^*)`,
/// `beta = 2 Delta_r`. Degenerate `D_k` are merged: only their summed weight couples.
/// Weights below `1e-24` are treated as decoupled.
pub struct SpectralPropagator {
    lambda: Vec<f64>,
    /// `|<v|e>|^2`, the atomic amplitude weights.
    a: Vec<f64>,
    /// `<v|e> sum_k f_k v_k`, the field-overlap weights.
    b: Vec<f64>,
    pub delta_r: f64,
}

impl SpectralPropagator {
    pub fn new(solution: &PolaronSolution, grid: &ModeGrid) -> Self {
        let dr = solution.delta_r;
        let beta = 2.0 * dr;
        let d_e = -1.5 * dr;
        let mut poles: Vec<(f64, f64)> = vec![(d_e, 1.0)];
        for i in grid.active() {
            poles.push((grid.omega[i] - 0.5 * dr, solution.f[i].norm_sqr()));
        }
        poles.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (d, w) in poles {
            match merged.last_mut() {
                Some(last) if (d - last.0).abs() <= 1e-13 * d.abs().max(1.0) => last.1 += w,
                _ => merged.push((d, w)),
            }
        }
        // Modes silenced by interference only carry roundoff-level weight; they decouple.
        merged.retain(|p| p.1 > 1e-24);
        let secular = |l: f64| 1.0 + beta * merged.iter().map(|(d, w)| w / (d - l)).sum::<f64>();
        let total: f64 = merged.iter().map(|p| p.1).sum();
        let mut lambda = Vec::with_capacity(merged.len());
        for i in 0..merged.len() {
            let lo = merged[i].0;
            let hi = if i + 1 < merged.len() {
                merged[i + 1].0
            } else {
                lo + beta * total + 1.0
            };
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if secular(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            lambda.push(0.5 * (a + b));
        }
        let mut a = Vec::with_capacity(lambda.len());
        let mut b = Vec::with_capacity(lambda.len());
        for &l in &lambda {
            let n2: f64 = merged.iter().map(|(d, w)| w / ((d - l) * (d - l))).sum();
            let ve = 1.0 / (d_e - l);
            a.push(ve * ve / n2);
            b.push(ve / n2 * (-1.0 / beta - ve));
        }
        Self {
            lambda,
            a,
            b,
            delta_r: dr,
        }
    }

    /// Non-rotating `(c(t), S(t))` with `S = sum_k f_k phi_k`.
    pub fn amplitudes(&self, t: f64) -> (C64, C64) {
        let mut c = C64::new(0.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.lambda.len() {
            let e = C64::from_polar(1.0, -self.lambda[i] * t);
            c += e * self.a[i];
            s += e * self.b[i];
        }
        (c, s)
    }

    /// Lab-frame excitation probability at `t` for bare splitting `delta`.
    pub fn lab_excitation(&self, t: f64, delta: f64) -> f64 {
        let (c, s) = self.amplitudes(t);
        let ratio = self.delta_r / delta;
        0.5 * (1.0 - ratio) + ratio * (c.norm_sqr() + 2.0 * (c.conj() * s).re + 2.0 * s.norm_sqr())
    }

    pub fn weight_sum(&self) -> f64 {
        self.a.iter().sum()
    }
}

/// Gauss-Kronrod 7-15 nodes and weights on `[-1, 1]` (non-negative half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Recursive adaptive Gauss-Kronrod with absolute tolerance.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = gk15(f, a, b);
        if e <= tol || depth == 0 || (b - a) < 1e-14 * a.abs().max(1.0) {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, tol, 50)
}

/// `PV int_0^{w_max} h(w) / (p - w) dw` by excluding `(p - eps, p + eps)` and
/// Richardson-extrapolating `eps -> 0` through the odd powers `eps`, `eps^3`.
pub fn pv_by_exclusion(h: &dyn Fn(f64) -> f64, pole: f64, w_max: f64, eps0: f64) -> f64 {
    let g = |w: f64| h(w) / (pole - w);
    // Breakpoints every unit keep the adaptive rule from missing oscillations.
    let side = |a: f64, b: f64| -> f64 {
        let n = ((b - a) / 0.25).ceil().max(1.0) as usize;
        (0..n)
            .map(|i| {
                let x0 = a + (b - a) * i as f64 / n as f64;
                let x1 = a + (b - a) * (i + 1) as f64 / n as f64;
                adaptive(&g, x0, x1, 1e-13)
            })
            .sum()
    };
    let excluded = |eps: f64| side(0.0, pole - eps) + side(pole + eps, w_max);
    let i1 = excluded(eps0);
    let i2 = excluded(eps0 / 2.0);
    let i4 = excluded(eps0 / 4.0);
    // Remove the O(eps) term, then the O(eps^3) term.
    let r12 = 2.0 * i2 - i1;
    let r24 = 2.0 * i4 - i2;
    (8.0 * r24 - r12) / 7.0
}

/// Inverse Laplace transform of `1 / (s + a + sum_j b_j exp(-s j zeta))`, term by term.
///
/// Expanding in powers of the delay terms, `exp(-s m zeta) / (s + a)^{n+1}`
/// inverts to `(t - m zeta)^n exp(-a (t - m zeta)) / n!` for `t > m zeta`; only
/// finitely many `m` contribute at any finite `t`.
pub fn delay_series_inverse(a: C64, b: &[(usize, C64)], zeta: f64, t: f64) -> C64 {
    let m_max = if zeta > 0.0 { (t / zeta).floor() as usize } else { 0 };
    // coeff[n][m]: coefficient of E^m in (sum_j b_j E^j)^n.
    let mut layer = vec![C64::new(0.0, 0.0); m_max + 1];
    layer[0] = C64::new(1.0, 0.0);
    let mut total = C64::new(0.0, 0.0);
    let mut factorial = 1.0;
    for n in 0..=m_max {
        if n > 0 {
            factorial *= n as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for (m, &p) in layer.iter().enumerate() {
            if p == C64::new(0.0, 0.0) {
                continue;
            }
            let tau = t - m as f64 * zeta;
            if tau < 0.0 {
                continue;
            }
            total += p * sign * tau.powi(n as i32) * (-a * tau).exp() / factorial;
        }
        let mut next = vec![C64::new(0.0, 0.0); m_max + 1];
        for (m, &p) in layer.iter().enumerate() {
            for &(j, bj) in b {
                if m + j <= m_max {
                    next[m + j] += p * bj;
                }
            }
        }
        layer = next;
    }
    total
}

/// Position of the first interior local minimum of a sampled curve, refined by
/// the parabola through the three neighbouring samples.
pub fn first_minimum(y: &[f64]) -> Option<f64> {
    (1..y.len().saturating_sub(1))
        .find(|&i| y[i] < y[i - 1] && y[i] <= y[i + 1])
        .map(|i| {
            let curv = y[i - 1] - 2.0 * y[i] + y[i + 1];
            i as f64 + 0.5 * (y[i - 1] - y[i + 1]) / curv
        })
}

/// Parabola-refined position of the smallest interior sample.
pub fn deepest_minimum(y: &[f64]) -> f64 {
    let i = (1..y.len() - 1)
        .min_by(|&a, &b| y[a].total_cmp(&y[b]))
        .expect("need at least three samples");
    let curv = y[i - 1] - 2.0 * y[i] + y[i + 1];
    i as f64 + 0.5 * (y[i - 1] - y[i + 1]) / curv
}
