use kgphase::adiabatic::{adiabaticity_report, loop_integral};
use kgphase::bessel::bessel_j_zero;
use kgphase::discretization::{tile_weights, RadialGrid, Sector};
use kgphase::linalg::{CMat, CVec};
use kgphase::scenarios::*;
use kgphase::spectral::{solve_pencil, solve_sectors, track, ModeBundle, QuadraticPencil};
use kgphase::{Error, C64};
use std::f64::consts::PI;
use std::sync::Arc;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn positive_energies(bundle: &ModeBundle, count: usize) -> Vec<f64> {
    (1..=count as i64).map(|k| bundle.radial(k).unwrap().energy.re).collect()
}

#[test]
fn free_field_mass_gap() {
    let mut prev = f64::INFINITY;
    for r in [10.0, 20.0, 40.0] {
        let grid = Arc::new(RadialGrid::cylindrical(0.0, r, (20.0 * r) as usize).unwrap());
        let e = solve_pencil(&free_field(1.0, grid, 0, 0.0).unwrap()).unwrap().radial(1).unwrap().energy.re;
        assert!(e > 1.0 && e - 1.0 < prev);
        prev = e - 1.0;
    }
    assert!(prev < 2e-3, "{prev}");
}

#[test]
fn free_field_matches_bessel_roots() {
    let (mu, p, r) = (1.0, 0.4, 5.0);
    let grid = Arc::new(RadialGrid::cylindrical(0.0, r, 400).unwrap());
    for l in [0i64, 1, 2] {
        let bundle = solve_pencil(&free_field(mu, grid.clone(), l, p).unwrap()).unwrap();
        for k in 1..=3usize {
            let e = bundle.radial(k as i64).unwrap().energy.re;
            let root = bessel_j_zero(l as f64, k).unwrap() / r;
            let k2 = e * e - p * p - mu * mu;
            assert!((k2 - root * root).abs() < 1e-4 * root * root, "l = {l}, k = {k}: {k2} vs {}", root * root);
            assert!((e - free_energy(mu, p, l, r, k).unwrap()).abs() < 1e-4 * e);
        }
    }
}

fn landau() -> LandauScenario {
    LandauScenario::new(1.0, 2.0, 0.0, 10.0).unwrap()
}

#[test]
fn landau_ladder() {
    let s = landau();
    assert_eq!(s.lambda(), 1.0);
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 8.0, 400).unwrap());
    for m in [0i64, 1, 2] {
        let bundle = solve_pencil(&landau_pencil(&s, grid.clone(), m, 0.0).unwrap()).unwrap();
        for n_rho in 0..3 {
            let e2 = bundle.radial(n_rho as i64 + 1).unwrap().energy.re.powi(2);
            let expected = s.energy_squared(n_rho, m, 0.0);
            assert!((e2 - expected).abs() < 5e-4 * expected, "m = {m}, n = {n_rho}: {e2} vs {expected}");
        }
    }
    let lowest = solve_pencil(&landau_pencil(&s, grid, 0, 0.0).unwrap()).unwrap().radial(1).unwrap().energy.re;
    assert!((lowest * lowest - 2.0).abs() < 1e-3);
}

#[test]
fn landau_m_shift_is_exact() {
    let s = landau();
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 6.0, 120).unwrap());
    for m in [1i64, 2, 3] {
        let pencil = landau_pencil(&s, grid.clone(), m, 0.3).unwrap();
        let shift = s.charge * m as f64 * s.field;
        let n = pencil.dim();
        let stripped = QuadraticPencil::new(
            &pencil.a0 - CMat::identity(n, n) * C64::from(shift),
            pencil.a1.clone(),
            pencil.a2.clone(),
            pencil.weights.clone(),
            None,
        )
        .unwrap();
        let full = positive_energies(&solve_pencil(&pencil).unwrap(), 4);
        let bare = positive_energies(&solve_pencil(&stripped).unwrap(), 4);
        for (a, b) in full.iter().zip(&bare) {
            assert!((a * a - b * b - shift).abs() < 1e-9 * a * a, "{a} {b}");
        }
    }
}

#[test]
fn landau_levels_orthogonal() {
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 7.0, 200).unwrap());
    let h = grid.spacing();
    let bundle = solve_pencil(&landau_pencil(&landau(), grid.clone(), 1, 0.0).unwrap()).unwrap();
    for a in 1..=4 {
        for b in (a + 1)..=4 {
            let ov = grid.inner(bundle.radial(a).unwrap().vector.as_slice(), bundle.radial(b).unwrap().vector.as_slice()).unwrap();
            assert!(ov.norm() <= 10.0 * h * h, "({a}, {b}): {}", ov.norm());
        }
    }
}

#[test]
fn landau_boxed_momentum_degeneracy() {
    let s = landau();
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 6.0, 100).unwrap());
    let base = positive_energies(&solve_pencil(&landau_pencil(&s, grid.clone(), 1, 0.0).unwrap()).unwrap(), 3);
    for nz in [-2i64, 1, 3] {
        let p = s.boxed_momentum(nz);
        assert!((p - 2.0 * PI * nz as f64 / 10.0).abs() < 1e-15);
        let shifted = positive_energies(&solve_pencil(&landau_pencil(&s, grid.clone(), 1, p).unwrap()).unwrap(), 3);
        for (a, b) in shifted.iter().zip(&base) {
            assert!((a * a - b * b - p * p).abs() < 1e-9 * a * a);
        }
    }
}

fn rotation() -> LandauRotation {
    let s = landau();
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 6.0, 60).unwrap());
    let p = s.boxed_momentum(1);
    LandauRotation::new(s, grid, vec![Sector { angular: 0, p }, Sector { angular: 0, p: -p }]).unwrap()
}

#[test]
fn rotation_is_isospectral() {
    let rot = rotation();
    let bundles = solve_sectors(&landau_rotation_path(&rot, &[0.0, PI / 3.0], &[0.0, PI / 4.0]).unwrap()).unwrap();
    let (a, b) = (bundles[0].energies(), bundles[1].energies());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() <= 1e-8 * x.norm(), "{x} vs {y}");
    }
    assert!(matches!(landau_rotation_path(&rot, &[0.2, PI], &[0.0, 0.0]), Err(Error::AxisCrossing { index: 1 })));
}

#[test]
fn rotation_is_ultra_adiabatic() {
    let rot = rotation();
    let k = 10;
    let times: Vec<f64> = (0..k).map(|i| i as f64).collect();
    let theta: Vec<f64> = times.iter().map(|t| 0.1 + 0.08 * t).collect();
    let phi: Vec<f64> = times.iter().map(|t| 0.15 * t).collect();
    let bundles = solve_sectors(&landau_rotation_path(&rot, &theta, &phi).unwrap()).unwrap();
    let tracked = track(&bundles, bundles[0].index_of_radial(1).unwrap()).unwrap();
    let levels = vec![(tracked.energies.clone(), tracked.vectors.clone())];
    let r = adiabaticity_report(&times, &levels, 0, &vec![I; k], &rot.weights()).unwrap();
    assert!(r.ultra_residual <= 1e-8, "{:e}", r.ultra_residual);
}

/// Tracks the three lowest `m = 0` levels while `B` ramps by 10% over `sweep`.
fn ramp_report(sweep: f64) -> kgphase::adiabatic::AdiabaticityReport {
    let grid = Arc::new(RadialGrid::cylindrical(0.0, 7.0, 120).unwrap());
    let k = 21;
    let times: Vec<f64> = (0..k).map(|i| sweep * i as f64 / (k - 1) as f64).collect();
    let pencils: Vec<QuadraticPencil> = times
        .iter()
        .map(|t| {
            let s = LandauScenario::new(1.0, 2.0 * (1.0 + 0.1 * t / sweep), 0.5, 10.0).unwrap();
            landau_pencil(&s, grid.clone(), 0, 0.0).unwrap()
        })
        .collect();
    let bundles = solve_sectors(&pencils).unwrap();
    let levels: Vec<(Vec<C64>, Vec<CVec>)> = (1..=3)
        .map(|r| {
            let t = track(&bundles, bundles[0].index_of_radial(r).unwrap()).unwrap();
            (t.energies, t.vectors)
        })
        .collect();
    adiabaticity_report(&times, &levels, 0, &vec![I; k], grid.weights()).unwrap()
}

#[test]
fn field_ramp_breaks_ultra_adiabaticity_only() {
    let slow = ramp_report(20.0);
    let slower = ramp_report(40.0);
    assert!(slow.ultra_residual > 1e-3, "{:e}", slow.ultra_residual);
    // both residuals fall like 1/T; the adiabatic one stays far below the level gap
    assert!((slow.ultra_residual / slower.ultra_residual - 2.0).abs() < 0.1);
    assert!((slow.adiabatic_residual / slower.adiabatic_residual - 2.0).abs() < 0.1);
    assert!(slow.adiabatic_residual < 1e-2 * slow.min_gap, "{:e} vs gap {}", slow.adiabatic_residual, slow.min_gap);
}

#[test]
fn string_j_zero_is_conical_free_field() {
    let alpha = 0.85;
    let s = StringScenario::with_alpha(0.0, alpha, 1.0).unwrap();
    let r = 6.0;
    let grid = s.grid(r, 400).unwrap();
    assert_eq!(grid.rho_min(), 0.0);
    for l in [1i64, 2] {
        let pencil = string_pencil(&s, &grid, l, 0.0).unwrap();
        assert!(pencil.a1.iter().all(|z| z.norm() == 0.0));
        assert!((&pencil.a2 + CMat::identity(400, 400)).iter().all(|z| z.norm() == 0.0));
        let e = solve_pencil(&pencil).unwrap().radial(1).unwrap().energy.re;
        let root = bessel_j_zero(l as f64 / alpha, 1).unwrap() / r;
        assert!((e * e - 1.0 - root * root).abs() < 1e-3 * root * root, "l = {l}");
        let oracle = string_analytic_energy(&s, l, 0.0, r, 1).unwrap();
        assert!((oracle * oracle - 1.0 - root * root).abs() < 1e-10);
    }
}

#[test]
fn string_zero_angular_momentum_sector_has_no_a1() {
    let s = StringScenario::with_alpha(0.05, 0.9, 1.0).unwrap();
    let grid = s.grid(5.0, 50).unwrap();
    assert!(string_pencil(&s, &grid, 0, 0.3).unwrap().a1.iter().all(|z| z.norm() == 0.0));
    assert!(string_pencil(&s, &grid, 2, 0.3).unwrap().a1.iter().any(|z| z.norm() > 0.0));
}

#[test]
fn string_pencil_matches_oracle() {
    let s = StringScenario::with_alpha(0.05, 0.9, 1.0).unwrap();
    let r = 10.0;
    let grid = s.grid(r, 1000).unwrap();
    let e = solve_pencil(&string_pencil(&s, &grid, 1, 0.0).unwrap()).unwrap().radial(1).unwrap().energy.re;
    let oracle = string_analytic_energy(&s, 1, 0.0, r, 1).unwrap();
    assert!((e - oracle).abs() <= 5e-3 * oracle, "{e} vs {oracle}");
}

#[test]
fn rotation_shifts_energy_with_sign_of_l() {
    let r = 8.0;
    let spinning = StringScenario::with_alpha(0.05, 0.9, 1.0).unwrap();
    let still = StringScenario { j: 0.0, ..spinning };
    // same annulus for both, so only j changes in the pencil
    let grid = spinning.grid(r, 300).unwrap();
    for l in [1i64, -1, 2] {
        let oracle_shift = string_analytic_energy(&spinning, l, 0.0, r, 1).unwrap() - string_analytic_energy(&still, l, 0.0, r, 1).unwrap();
        let lowest = |s: &StringScenario| solve_pencil(&string_pencil(s, &grid, l, 0.0).unwrap()).unwrap().radial(1).unwrap().energy.re;
        let pencil_shift = lowest(&spinning) - lowest(&still);
        assert_eq!(oracle_shift.signum(), l.signum() as f64, "l = {l}: {oracle_shift}");
        assert_eq!(pencil_shift.signum(), oracle_shift.signum(), "l = {l}: {pencil_shift} vs {oracle_shift}");
    }
}

/// Unit mode of sector `l` as a one-column frame.
fn string_mode(s: &StringScenario, grid: &RadialGrid, l: i64, radial: i64) -> (f64, CMat) {
    let m = solve_pencil(&string_pencil(s, grid, l, 0.0).unwrap()).unwrap().radial(radial).unwrap().clone();
    (m.energy.re, CMat::from_column_slice(grid.len(), 1, m.vector.as_slice()))
}

#[test]
fn box_connection_terms() {
    let s = StringScenario::with_alpha(0.05, 0.9, 1.0).unwrap();
    let grid = s.grid(6.0, 120).unwrap();
    let (e, f) = string_mode(&s, &grid, 1, 1);
    // a fixed normalized frame contributes exactly 4 j E per unit angle
    let fixed = string_box_loop(&s, e, |_| f.clone(), 1, 64, grid.weights()).unwrap();
    for c in &fixed.samples {
        assert!((c.value[(0, 0)] - C64::from(4.0 * s.j * e)).norm() < 1e-13);
    }
    // a single-valued gauge wobble integrates to zero around the loop
    let wobble = |a: f64| &f * (I * (0.3 * a.sin() + 0.2 * (2.0 * a).cos())).exp();
    let mut prev = f64::INFINITY;
    for samples in [64, 256] {
        let lp = string_box_loop(&s, e, wobble, 1, samples, grid.weights()).unwrap();
        let second = loop_integral(&lp.samples) - C64::from(2.0 * PI * 4.0 * s.j * e);
        assert!(second.norm() <= prev);
        prev = second.norm();
    }
    assert!(prev < 1e-4, "{prev:e}");
    // no rotation, no topological phase
    let still = StringScenario { j: 0.0, ..s };
    let lp = string_box_loop(&still, e, wobble, 1, 256, grid.weights()).unwrap();
    assert!(loop_integral(&lp.samples).norm() < 1e-4);
    assert!(lp.phases().unwrap()[0].abs() < 1e-4);
}

#[test]
fn phase_formula_examples() {
    assert_eq!(string_phase(0.0, 2.0, 1.0), 0.0);
    assert!((string_phase(0.05, 2.0, 1.0) - 2.513274).abs() < 1e-6);
    assert_eq!(string_phase(0.05, 2.0, 3.0), 3.0 * string_phase(0.05, 2.0, 1.0));
}

#[test]
fn holonomy_phase_tracks_energy() {
    let s = StringScenario::with_alpha(0.05, 0.95, 1.0).unwrap();
    let r = 8.0;
    let grid = s.grid(r, 400).unwrap();
    let mut gammas = Vec::new();
    let mut oracles = Vec::new();
    for radial in [1i64, 2] {
        let (e, f) = string_mode(&s, &grid, 2, radial);
        let lp = string_box_loop(&s, e, |a| &f * (I * 0.4 * a.sin()).exp(), 1, 256, grid.weights()).unwrap();
        let gamma = lp.phases().unwrap()[0];
        let oracle = string_analytic_energy(&s, 2, 0.0, r, radial).unwrap();
        assert!((gamma - string_phase(s.j, oracle, 1.0)).abs() <= 5e-3 * gamma.abs(), "n = {radial}");
        gammas.push(gamma);
        oracles.push(oracle);
    }
    // unlike a pure flux phase, gamma scales with the level energy
    let ratio = gammas[1] / gammas[0];
    assert!((ratio / (oracles[1] / oracles[0]) - 1.0).abs() <= 5e-3, "{ratio}");
    assert!(ratio > 1.2);
}

#[test]
fn degenerate_axial_pair_gives_abelian_holonomy() {
    let s = StringScenario::with_alpha(0.05, 0.9, 1.0).unwrap();
    let grid = s.grid(6.0, 150).unwrap();
    let p = 0.4;
    let plus = solve_pencil(&string_pencil(&s, &grid, 1, p).unwrap()).unwrap().radial(1).unwrap().clone();
    let minus = solve_pencil(&string_pencil(&s, &grid, 1, -p).unwrap()).unwrap().radial(1).unwrap().clone();
    assert!((plus.energy - minus.energy).norm() < 1e-10);
    let n = grid.len();
    let w = tile_weights(grid.weights(), 2);
    // the two sectors stacked, mixed by a periodic rotation of the pair
    let frame = |a: f64| {
        let (c, sn) = ((0.3 * a.sin()).cos(), (0.3 * a.sin()).sin());
        let mut f = CMat::zeros(2 * n, 2);
        for i in 0..n {
            f[(i, 0)] = plus.vector[i] * c;
            f[(n + i, 0)] = minus.vector[i] * I * sn;
            f[(i, 1)] = plus.vector[i] * I * sn;
            f[(n + i, 1)] = minus.vector[i] * c;
        }
        f
    };
    let lp = string_box_loop(&s, plus.energy.re, frame, 1, 512, &w).unwrap();
    let h = lp.holonomy().unwrap();
    assert!(h[(0, 1)].norm() <= 1e-6 && h[(1, 0)].norm() <= 1e-6, "{h}");
    assert!((h[(0, 0)] - h[(1, 1)]).norm() <= 1e-6);
    let phases = lp.phases().unwrap();
    let expected = string_phase(s.j, plus.energy.re, 1.0);
    assert!(phases.iter().all(|g| (g - expected).abs() < 1e-6), "{phases:?} vs {expected}");
}
