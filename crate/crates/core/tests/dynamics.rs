mod support;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use giantpolaron_core::dde::{integrate_dde, DdeOptions};
use giantpolaron_core::dynamics::{
    field_snapshot, integrate, mode_occupations, spontaneous_emission, step_bound, DynamicsOptions,
};
use giantpolaron_core::equilibrium::{photon_profile, to_sites, Phase};
use giantpolaron_core::polaron::solve_self_consistent;
use giantpolaron_core::waveguide::build_modes;
use giantpolaron_core::{
    DdeParams, Error, ExcitationState, ProfileConvention, SolverOptions, SystemConfig, C64,
};
use support::SpectralPropagator;

fn emit(c: &SystemConfig, t_max: f64, opts: &DynamicsOptions) -> (giantpolaron_core::PolaronSolution, giantpolaron_core::Trajectory) {
    spontaneous_emission(c, &SolverOptions::default(), t_max, opts).unwrap()
}

#[test]
fn decoupled_atom_keeps_its_excitation() {
    let (_, tr) = emit(&SystemConfig::giant_atom(0.0, 3.0, 200, 3, 5), 20.0, &DynamicsOptions::default());
    for (c, p) in tr.c.iter().zip(&tr.p_e) {
        assert_relative_eq!(c.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(*p, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn matches_exact_spectral_evolution() {
    for (alpha, x) in [(0.3, 5), (0.8, 2), (0.1, 12)] {
        let c = SystemConfig::giant_atom(alpha, 3.0, 240, 3, x);
        let g = build_modes(&c).unwrap();
        let s = solve_self_consistent(&g, &c).unwrap();
        let exact = SpectralPropagator::new(&s, &g);
        assert_relative_eq!(exact.weight_sum(), 1.0, epsilon = 1e-10);
        let tr = integrate(&ExcitationState::excited(g.len()), &s, &g, 60.0, &DynamicsOptions::default()).unwrap();
        for (i, &t) in tr.times.iter().enumerate() {
            let (ce, _) = exact.amplitudes(t);
            let rotated = ce * C64::from_polar(1.0, 0.5 * s.delta_r * t);
            assert!((tr.c[i] - rotated).norm() < 1e-7, "alpha {alpha} t {t}");
            assert!((tr.p_e[i] - exact.lab_excitation(t, 1.0)).abs() < 1e-7);
        }
    }
}

#[test]
fn starts_from_dressed_excitation() {
    let (s, tr) = emit(&SystemConfig::giant_atom(0.4, 3.0, 400, 3, 10), 1.0, &DynamicsOptions::default());
    assert_relative_eq!(tr.p_e[0], 0.5 * (1.0 + s.ratio()), epsilon = 1e-14);
    assert_eq!(tr.times[0], 0.0);
}

#[test]
fn weak_coupling_is_wigner_weisskopf() {
    let alpha = 1e-4;
    let c = SystemConfig::giant_atom(alpha, 3.0, 3000, 1, 0);
    // Revivals return after L / v_g = 1000.
    let (s, tr) = emit(&c, 900.0, &DynamicsOptions::default());
    let pts: Vec<(f64, f64)> = tr
        .times
        .iter()
        .zip(&tr.p_e_polaron)
        .filter(|(&t, _)| t >= 100.0)
        .map(|(&t, &p)| (t, p.ln()))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let rate = PI * alpha * c.delta;
    assert!((-slope / rate - 1.0).abs() < 0.02, "{} vs {rate}", -slope);
    assert!(s.ratio() > 0.999);
}

#[test]
fn conserves_norm_and_energy() {
    for (alpha, x) in [(0.1, 20), (0.8, 3), (0.5, 40)] {
        let c = SystemConfig::giant_atom(alpha, 3.0, 1200, 3, x);
        let (_, tr) = emit(&c, 150.0, &DynamicsOptions::default());
        assert!(tr.max_norm_drift < 1e-8, "{}", tr.max_norm_drift);
        assert!(tr.max_energy_drift < 1e-6, "{}", tr.max_energy_drift);
        assert!(tr.p_e.iter().all(|&p| (-1e-6..=1.0 + 1e-6).contains(&p)));
    }
}

#[test]
fn oversized_step_is_rejected() {
    let c = SystemConfig::giant_atom(0.1, 3.0, 200, 3, 5);
    let g = build_modes(&c).unwrap();
    let s = solve_self_consistent(&g, &c).unwrap();
    let opts = DynamicsOptions { dt: Some(2.0 * step_bound(&g)), ..Default::default() };
    let r = integrate(&ExcitationState::excited(g.len()), &s, &g, 1.0, &opts);
    assert!(matches!(r, Err(Error::StepTooLarge { .. })));
    let strict = DynamicsOptions { norm_limit: 0.0, ..Default::default() };
    let r = integrate(&ExcitationState::excited(g.len()), &s, &g, 50.0, &strict);
    assert!(matches!(r, Err(Error::NormDrift { .. })));
}

#[test]
fn early_decay_ignores_contact_spacing() {
    // Before the first hop (t < zeta) the contacts cannot have exchanged photons;
    // the dressed vertex has range ~ v_g / Delta_r, so the window stops short of zeta.
    let alpha = 0.05;
    let runs: Vec<_> = [20usize, 30, 100]
        .iter()
        .map(|&x| emit(&SystemConfig::giant_atom(alpha, 3.0, 1500, 3, x), 5.0, &DynamicsOptions::default()).1)
        .collect();
    for other in &runs[1..] {
        for (a, b) in runs[0].p_e.iter().zip(&other.p_e) {
            assert!((a - b).abs() < 5e-3);
        }
    }
}

#[test]
fn emitted_field_respects_light_cone() {
    let n = 1201;
    let c = SystemConfig::giant_atom(0.05, 3.0, n, 1, 0);
    let t = 100.0;
    let opts = DynamicsOptions { snapshot_times: vec![t], ..Default::default() };
    let (s, tr) = emit(&c, t, &opts);
    let g = build_modes(&c).unwrap();
    let cloud = photon_profile(&s, &g, &c, ProfileConvention::Direct);
    let snap = &tr.field_snapshots[0];
    let excess: Vec<f64> = snap.occupation.iter().zip(&cloud.occupation).map(|(a, b)| (a - b).abs()).collect();
    let peak = excess.iter().cloned().fold(0.0, f64::max);
    let centre = c.contacts[0] as f64;
    // The lattice front has an edge layer of finite width; allow 10% past v_g t.
    let front = t * c.v_g / c.lattice_spacing();
    for (x, e) in excess.iter().enumerate() {
        let d = (x as f64 - centre).abs();
        if d > 1.1 * front + 10.0 {
            assert!(*e < 1e-4 * peak, "site {x}: {e} vs peak {peak}");
        }
    }
}

#[test]
fn snapshot_reductions() {
    let c = SystemConfig::giant_atom(0.4, 3.0, 301, 3, 8);
    let g = build_modes(&c).unwrap();
    let s = solve_self_consistent(&g, &c).unwrap();
    let vac = ExcitationState::vacuum(g.len());
    let cloud = photon_profile(&s, &g, &c, ProfileConvention::Direct);
    for (a, b) in field_snapshot(&vac, &s, &g).iter().zip(&cloud.occupation) {
        assert_relative_eq!(a, b, epsilon = 1e-15);
    }

    let bare_cfg = SystemConfig::giant_atom(0.0, 3.0, 301, 3, 8);
    let bare_grid = build_modes(&bare_cfg).unwrap();
    let bare = solve_self_consistent(&bare_grid, &bare_cfg).unwrap();
    let mut plane = ExcitationState::vacuum(g.len());
    plane.phi[40] = C64::new(0.0, 1.0);
    for n in field_snapshot(&plane, &bare, &bare_grid) {
        assert_relative_eq!(n, 1.0 / 301.0, epsilon = 1e-15);
    }

    let mut st = ExcitationState::excited(g.len());
    st.c = C64::new(0.6, 0.0);
    st.phi[7] = C64::new(0.0, 0.8);
    let total: f64 = field_snapshot(&st, &s, &g).iter().sum();
    assert_relative_eq!(total, mode_occupations(&st, &s).iter().sum::<f64>(), max_relative = 1e-12);
    let _ = to_sites(&g, &st.phi, Phase::Plus);
}

#[test]
fn reduced_model_tracks_full_dynamics() {
    let c = SystemConfig::giant_atom(0.1, 3.0, 3000, 3, 20);
    let (s, tr) = emit(&c, 150.0, &DynamicsOptions::default());
    let p = DdeParams::from_solution(&s, &c).unwrap();
    let dde = integrate_dde(&p, C64::new(1.0, 0.0), 150.0, &DdeOptions::default()).unwrap();
    let worst = tr
        .times
        .iter()
        .zip(&tr.p_e)
        .map(|(&t, &pe)| (pe - (s.ground_state_excitation() + s.ratio() * dde.at(t).norm_sqr())).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn rwa_emission_stays_between_outer_contacts() {
    let c = SystemConfig::giant_atom(0.118, 3.0, 3002, 3, 186);
    let t = 400.0;
    let opts = DynamicsOptions { snapshot_times: vec![t], ..Default::default() };
    let (s, tr) = emit(&c, t, &opts);
    let g = build_modes(&c).unwrap();
    let cloud = photon_profile(&s, &g, &c, ProfileConvention::Direct);
    let excess: Vec<f64> = tr.field_snapshots[0]
        .occupation
        .iter()
        .zip(&cloud.occupation)
        .map(|(a, b)| (a - b).max(0.0))
        .collect();
    let (lo, hi) = (c.contacts[0], c.contacts[2]);
    let inside: f64 = excess[lo..=hi].iter().sum();
    let outside: f64 = excess.iter().sum::<f64>() - inside;
    let width = (hi - lo + 1) as f64;
    let density_in = inside / width;
    let density_out = outside / (excess.len() as f64 - width);
    assert!(density_in > 2.0 * density_out, "{density_in} vs {density_out}");
}
