//! The six commands. Each renders its artifacts in memory; nothing here touches the filesystem.

use crate::config::{Scenario, Setup, SweepConfig};
use crate::output::{csv_artifact, json_artifact, Artifact};
use crate::{CliError, Command};
use kgphase::adiabatic::{berry_connection_frames, frame_overlap, wilson_loop, ConnectionSample};
use kgphase::discretization::{assemble_radial, inner_product, DiscreteOperator, Sector};
use kgphase::linalg::{eig, CMat, CVec};
use kgphase::propagator::{evolve_twocomp, overlap_deficit, FieldHamiltonian, StaticOperators};
use kgphase::scenarios::*;
use kgphase::spacetime::{build_coefficients, landau_model};
use kgphase::spectral::{solve_pencil, solve_sectors, Mode, ModeBundle, QuadraticPencil};
use kgphase::twocomp::{apply_gauge, assemble_hamiltonian, gauge_map, inner_h, inner_kg, mode_vector, HMatrix, TwoComponentState};
use kgphase::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Relative energy window for treating positive modes as one degenerate level.
const DEGENERACY: f64 = 1e-8;

/// Artifacts plus the command's own verdict; a failed verdict still writes its artifacts.
pub type Execution = (Vec<Artifact>, Result<(), CliError>);

pub fn execute(command: Command, setup: &Setup) -> Result<Execution, CliError> {
    let artifacts = match command {
        Command::Spectrum => vec![spectrum(setup)?],
        Command::Connection => vec![connection(setup)?],
        Command::Holonomy => vec![holonomy(setup)?],
        Command::Phases => vec![phases(setup)?],
        Command::Evolve => vec![evolve(setup)?],
        Command::Validate => return validate(setup),
    };
    Ok((artifacts, Ok(())))
}

fn label(s: &Sector) -> String {
    format!("l={},p={}", s.angular, s.p)
}

fn pencil(setup: &Setup, s: &Sector) -> kgphase::Result<QuadraticPencil> {
    match &setup.scenario {
        Scenario::Free { mass } => free_field(*mass, setup.grid.clone(), s.angular, s.p),
        Scenario::Landau(l) => landau_pencil(l, setup.grid.clone(), s.angular, s.p),
        Scenario::String(st) => string_pencil(st, &setup.grid, s.angular, s.p),
    }
}

fn bundles(setup: &Setup) -> Result<Vec<ModeBundle>, CliError> {
    let pencils = setup.sectors.iter().map(|s| pencil(setup, s)).collect::<kgphase::Result<Vec<_>>>()?;
    Ok(solve_sectors(&pencils)?)
}

/// `D1` and `D2` of the configured field in one sector.
fn operators(setup: &Setup, s: &Sector) -> kgphase::Result<(DiscreteOperator, DiscreteOperator)> {
    let model = match &setup.scenario {
        Scenario::Free { mass } => landau_model(0.0, 0.0, *mass),
        Scenario::Landau(l) => l.model(),
        Scenario::String(st) => return string_operators(st, setup.grid.clone(), s.angular, s.p),
    };
    let coeffs = build_coefficients(&model, 0.0, &[[setup.grid.nodes()[0], 0.0, 0.0]])?;
    assemble_radial(&coeffs, setup.grid.clone(), s.angular, s.p)
}

fn lowest(bundle: &ModeBundle) -> Result<&Mode, CliError> {
    bundle.radial(1).ok_or_else(|| CliError::Numerical("no positive-frequency mode found".into()))
}

fn sweep(setup: &Setup, command: &str) -> Result<SweepConfig, CliError> {
    setup.config.sweep.clone().ok_or_else(|| CliError::Validation(format!("sweep: required by {command}")))
}

fn string_only<'a>(setup: &'a Setup, command: &str) -> Result<&'a StringScenario, CliError> {
    match &setup.scenario {
        Scenario::String(s) => Ok(s),
        _ => Err(CliError::Validation(format!("scenario.type: {command} needs the string scenario"))),
    }
}

/// Columns of `frame` made orthonormal under `weights` by `F (F^H W F)^{-1/2}`.
fn lowdin(frame: CMat, weights: &[f64]) -> Result<CMat, CliError> {
    let gram = frame_overlap(&frame, &frame, weights)?;
    let eig = gram.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-12)) {
        return Err(CliError::Numerical("degenerate frame is rank deficient".into()));
    }
    let k = eig.eigenvalues.len();
    let inv_sqrt = CVec::from_iterator(k, eig.eigenvalues.iter().map(|&l| C64::from(1.0 / l.sqrt())));
    Ok(frame * &eig.eigenvectors * CMat::from_diagonal(&inv_sqrt) * eig.eigenvectors.adjoint())
}

/// Orthonormal frame of the lowest positive level and its energy.
fn lowest_cluster(bundle: &ModeBundle) -> Result<(f64, CMat), CliError> {
    let e1 = lowest(bundle)?.energy;
    let cols: Vec<CVec> = bundle
        .positive()
        .filter(|m| (m.energy - e1).norm() <= DEGENERACY * e1.norm())
        .map(|m| m.vector.clone())
        .collect();
    Ok((e1.re, lowdin(CMat::from_columns(&cols), &bundle.weights)?))
}

fn landau_rotation(setup: &Setup, s: &LandauScenario) -> Result<LandauRotation, CliError> {
    Ok(LandauRotation::new(*s, setup.grid.clone(), setup.sectors.clone())?)
}

fn loop_angles(samples: usize) -> Vec<f64> {
    (0..=samples).map(|k| 2.0 * PI * k as f64 / samples as f64).collect()
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SpectrumRow {
    angular: i64,
    p: f64,
    n: i64,
    re_e: f64,
    im_e: f64,
    residual: f64,
}

fn spectrum(setup: &Setup) -> Result<Artifact, CliError> {
    let levels = setup.config.levels as i64;
    let mut rows = Vec::new();
    for (sector, bundle) in setup.sectors.iter().zip(bundles(setup)?) {
        let mut modes: Vec<&Mode> = bundle.modes.iter().filter(|m| m.label.radial.abs() <= levels).collect();
        modes.sort_by_key(|m| m.label.radial);
        rows.extend(modes.into_iter().map(|m| SpectrumRow {
            angular: sector.angular,
            p: sector.p,
            n: m.label.radial,
            re_e: m.energy.re,
            im_e: m.energy.im,
            residual: m.residual,
        }));
    }
    csv_artifact("spectrum.csv", &rows)
}

#[derive(Serialize)]
struct ConnectionRow {
    label: String,
    s: f64,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

fn connection_rows(label: &str, samples: &[ConnectionSample], out: &mut Vec<ConnectionRow>) {
    for c in samples {
        for row in 0..c.value.nrows() {
            for col in 0..c.value.ncols() {
                let z = c.value[(row, col)];
                out.push(ConnectionRow { label: label.to_string(), s: c.s, row, col, re: z.re, im: z.im });
            }
        }
    }
}

/// Transported frames `U(theta, phi) F0` of the lowest level around the rotation loop.
fn rotation_frames(rot: &LandauRotation, theta: f64, samples: usize) -> Result<(f64, Vec<f64>, Vec<CMat>), CliError> {
    let (energy, f0) = lowest_cluster(&solve_pencil(&rot.pencil_at(0.0, 0.0)?)?)?;
    let phis = loop_angles(samples);
    let frames = phis.iter().map(|&phi| rot.transport_frame(theta, phi) * &f0).collect();
    Ok((energy, phis, frames))
}

fn connection(setup: &Setup) -> Result<Artifact, CliError> {
    let sw = sweep(setup, "connection")?;
    let mut rows = Vec::new();
    match &setup.scenario {
        Scenario::Free { .. } => {
            return Err(CliError::Validation("scenario.type: the free scenario has no parameter loop for connection".into()))
        }
        Scenario::String(s) => {
            for (sector, bundle) in setup.sectors.iter().zip(bundles(setup)?) {
                let m = lowest(&bundle)?;
                let f = CMat::from_column_slice(m.vector.len(), 1, m.vector.as_slice());
                let lp = string_box_loop(s, m.energy.re, |_| f.clone(), sw.winding, sw.samples, &bundle.weights)?;
                connection_rows(&label(sector), &lp.samples, &mut rows);
            }
        }
        Scenario::Landau(s) => {
            let rot = landau_rotation(setup, s)?;
            let (_, phis, frames) = rotation_frames(&rot, sw.theta, sw.samples)?;
            let samples = berry_connection_frames(&frames, &phis, &rot.weights())?;
            connection_rows("rotation", &samples, &mut rows);
        }
    }
    csv_artifact("connection.csv", &rows)
}

#[derive(Serialize)]
struct StringHolonomy {
    angular: i64,
    p: f64,
    energy: f64,
    phases: Vec<f64>,
}

#[derive(Serialize)]
#[serde(tag = "scenario", rename_all = "lowercase")]
enum HolonomyReport {
    String { winding: u32, samples: usize, sectors: Vec<StringHolonomy> },
    Landau { theta: f64, samples: usize, energy: f64, frame_size: usize, eigenvalues: Vec<[f64; 2]>, phases: Vec<f64> },
}

fn holonomy(setup: &Setup) -> Result<Artifact, CliError> {
    let sw = sweep(setup, "holonomy")?;
    let report = match &setup.scenario {
        Scenario::Free { .. } => {
            return Err(CliError::Validation("scenario.type: the free scenario has no parameter loop for holonomy".into()))
        }
        Scenario::String(s) => {
            let mut sectors = Vec::new();
            for (sector, bundle) in setup.sectors.iter().zip(bundles(setup)?) {
                let m = lowest(&bundle)?;
                let f = CMat::from_column_slice(m.vector.len(), 1, m.vector.as_slice());
                let lp = string_box_loop(s, m.energy.re, |_| f.clone(), sw.winding, sw.samples, &bundle.weights)?;
                sectors.push(StringHolonomy { angular: sector.angular, p: sector.p, energy: m.energy.re, phases: lp.phases()? });
            }
            HolonomyReport::String { winding: sw.winding, samples: sw.samples, sectors }
        }
        Scenario::Landau(s) => {
            let rot = landau_rotation(setup, s)?;
            // eigensolver frames at every sample; the Wilson loop absorbs their arbitrary gauge
            let phis = loop_angles(sw.samples);
            let mut frames = Vec::with_capacity(phis.len());
            let mut energy = 0.0;
            for &phi in &phis[..sw.samples] {
                let (e, f) = lowest_cluster(&solve_pencil(&rot.pencil_at(sw.theta, phi)?)?)?;
                if let Some(prev) = frames.last().map(|f: &CMat| f.ncols()) {
                    if prev != f.ncols() {
                        return Err(CliError::Numerical("degeneracy of the lowest level changes along the loop".into()));
                    }
                }
                energy = e;
                frames.push(f);
            }
            frames.push(frames[0].clone());
            let w = wilson_loop(&frames, &rot.weights())?;
            let (values, _) = eig(&w)?;
            let mut values: Vec<C64> = values;
            values.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
            HolonomyReport::Landau {
                theta: sw.theta,
                samples: sw.samples,
                energy,
                frame_size: w.nrows(),
                eigenvalues: values.iter().map(|z| [z.re, z.im]).collect(),
                phases: values.iter().map(|z| z.arg()).collect(),
            }
        }
    };
    Ok(json_artifact("holonomy.json", &report))
}

#[derive(Serialize)]
struct PhaseEntry {
    angular: i64,
    p: f64,
    energy: f64,
    oracle_energy: f64,
    gamma: f64,
    analytic: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct PhasesReport {
    j: f64,
    alpha: f64,
    winding: u32,
    samples: usize,
    entries: Vec<PhaseEntry>,
}

fn phases(setup: &Setup) -> Result<Artifact, CliError> {
    let s = string_only(setup, "phases")?;
    let sw = sweep(setup, "phases")?;
    let mut entries = Vec::new();
    for (sector, bundle) in setup.sectors.iter().zip(bundles(setup)?) {
        let m = lowest(&bundle)?;
        let f = CMat::from_column_slice(m.vector.len(), 1, m.vector.as_slice());
        let lp = string_box_loop(s, m.energy.re, |_| f.clone(), sw.winding, sw.samples, &bundle.weights)?;
        let gamma = lp.phases()?[0];
        let oracle = string_analytic_energy(s, sector.angular, sector.p, setup.config.grid.rho_max, 1)?;
        let analytic = string_phase(s.j, oracle, sw.winding as f64);
        let rel_error = if analytic == 0.0 { gamma.abs() } else { (gamma - analytic).abs() / analytic.abs() };
        entries.push(PhaseEntry { angular: sector.angular, p: sector.p, energy: m.energy.re, oracle_energy: oracle, gamma, analytic, rel_error });
    }
    Ok(json_artifact("phases.json", &PhasesReport { j: s.j, alpha: s.alpha(), winding: sw.winding, samples: sw.samples, entries }))
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EvolveReport {
    /// Ground level of the string carried around a loop in `j`.
    StringLoop { j0: f64, dj: f64, sweep_time: f64, times: Vec<f64>, deficits: Vec<f64>, energies: Vec<f64>, eta: Vec<[f64; 2]>, xi: Vec<[f64; 2]> },
    /// Lowest mode of the first sector under the configured `q` schedule.
    Stationary { angular: i64, p: f64, energy: [f64; 2], times: Vec<f64>, deficits: Vec<f64>, local_errors: Vec<f64> },
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn evolve(setup: &Setup) -> Result<Artifact, CliError> {
    let sw = sweep(setup, "evolve")?;
    let duration = sw.duration.ok_or_else(|| CliError::Validation("sweep.duration: required by evolve".into()))?;
    let tol = setup.config.tolerance;
    let report = match (&setup.scenario, sw.dj) {
        (Scenario::String(s), Some(dj)) => {
            let lp = StringLoop::new(*s, dj, setup.config.grid.rho_max, setup.config.grid.n_points)?;
            let run = lp.deficit_run(duration, sw.samples, tol)?;
            EvolveReport::StringLoop {
                j0: s.j,
                dj,
                sweep_time: run.sweep_time,
                times: run.times,
                deficits: run.deficits,
                energies: run.energies,
                eta: run.eta.iter().map(pair).collect(),
                xi: run.xi.iter().map(pair).collect(),
            }
        }
        (_, Some(_)) => return Err(CliError::Validation("sweep.dj: only the string scenario has a j loop".into())),
        (_, None) => {
            let sector = setup.sectors[0];
            let (d1, d2) = operators(setup, &sector)?;
            let weights = setup.grid.weights().to_vec();
            let stationary = QuadraticPencil::from_field(&d1.matrix, &d2.matrix, I, C64::from(0.0), weights.clone(), Some(sector))?;
            let bundle = solve_pencil(&stationary)?;
            let mode = lowest(&bundle)?;
            let (e, phi) = (mode.energy, mode.vector.clone());
            let times: Vec<f64> = (0..sw.samples).map(|k| duration * k as f64 / (sw.samples - 1) as f64).collect();
            let h = FieldHamiltonian { ops: StaticOperators::new(d1.matrix, d2.matrix)?, q: setup.q.clone() };
            let psi0 = mode_vector(e, &phi, setup.q.at(0.0).0)?;
            let traj = evolve_twocomp(&h, &psi0, 0.0, &times, tol)?;
            let ansatz = times
                .iter()
                .map(|&t| mode_vector(e, &(&phi * (-I * e * t).exp()), setup.q.at(t).0))
                .collect::<kgphase::Result<Vec<_>>>()?;
            let deficits = overlap_deficit(&traj, &ansatz, &weights)?;
            EvolveReport::Stationary { angular: sector.angular, p: sector.p, energy: pair(&e), times, deficits, local_errors: traj.local_errors }
        }
    };
    Ok(json_artifact("evolve.json", &report))
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckRow {
    check: String,
    value: f64,
    bound: f64,
    pass: bool,
}

fn row(check: impl Into<String>, value: f64, bound: f64) -> CheckRow {
    CheckRow { check: check.into(), value, bound, pass: value <= bound }
}

fn cnum(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

fn unit(r: &mut ChaCha8Rng, w: &[f64]) -> CVec {
    let v = CVec::from_iterator(w.len(), (0..w.len()).map(|_| cnum(r)));
    let n = inner_product(v.as_slice(), v.as_slice(), w).expect("lengths match").re.sqrt();
    v / C64::from(n)
}

fn random_weights(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(0.1..1.0)).collect()
}

/// Largest relative deviation of `W A` from Hermitian.
fn self_adjoint_defect(a: &CMat, w: &[f64]) -> f64 {
    let n = a.nrows();
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (a[(i, j)] * w[i]).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] * w[i] - (a[(j, i)] * w[j]).conj()).norm());
        }
    }
    worst / scale
}

/// Reference energy of the lowest mode when the scenario has a closed form that applies to the grid.
fn oracle_energy(setup: &Setup, s: &Sector) -> Result<Option<f64>, CliError> {
    let rho_max = setup.config.grid.rho_max;
    let from_axis = setup.config.grid.rho_min.unwrap_or(0.0) == 0.0;
    Ok(match &setup.scenario {
        Scenario::Free { mass } if from_axis => Some(free_energy(*mass, s.p, s.angular, rho_max, 1)?),
        // the oscillator ladder needs the wall far out on the Gaussian tail
        Scenario::Landau(l) if from_axis && l.lambda().abs() * rho_max * rho_max >= 40.0 => Some(l.energy_squared(0, s.angular, s.p).sqrt()),
        Scenario::String(st) if setup.config.grid.rho_min.is_none() => Some(string_analytic_energy(st, s.angular, s.p, rho_max, 1)?),
        _ => None,
    })
}

fn validate(setup: &Setup) -> Result<Execution, CliError> {
    let mut r = ChaCha8Rng::seed_from_u64(setup.config.seed);
    let mut rows = Vec::new();

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let w = random_weights(&mut r, 8);
        let (em, en, q) = (cnum(&mut r), cnum(&mut r), cnum(&mut r) + C64::new(0.0, 0.1));
        let (pm, pn) = (unit(&mut r, &w), unit(&mut r, &w));
        let lhs = inner_h(&mode_vector(em, &pm, q)?, &mode_vector(en, &pn, q)?, &HMatrix::kg(), &w)?;
        let rhs = I * (q.conj() * em.conj() - q * en) * inner_product(pm.as_slice(), pn.as_slice(), &w)?;
        worst = worst.max((lhs - rhs).norm());
    }
    rows.push(row("orthogonality_relation", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let q = [C64::new(0.0, 0.3), I, C64::new(0.0, 2.0)][k % 3];
        let w = random_weights(&mut r, 8);
        let (p1, d1, p2, d2) = (unit(&mut r, &w), unit(&mut r, &w), unit(&mut r, &w), unit(&mut r, &w));
        let a = TwoComponentState::compose(&p1, &d1, q)?;
        let b = TwoComponentState::compose(&p2, &d2, q)?;
        let kg = inner_product(p1.as_slice(), d2.as_slice(), &w)? - inner_product(d1.as_slice(), p2.as_slice(), &w)?;
        worst = worst.max((inner_h(&a, &b, &HMatrix::kg(), &w)? - q * kg).norm()).max((inner_kg(&a, &b, &w)? - kg).norm());
    }
    rows.push(row("kg_product_identity", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mut q = || C64::from_polar(r.gen_range(0.5..2.0), r.gen_range(-PI..PI));
        let (q1, q2, q3) = (q(), q(), q());
        let d = gauge_map(q3, q2)? * gauge_map(q2, q1)? - gauge_map(q3, q1)?;
        worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    rows.push(row("gauge_group_law", worst, 1e-14));

    let tol = setup.config.tolerance;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let n = 4;
        let m = CMat::from_fn(n, n, |_, _| cnum(&mut r));
        let k = CMat::from_fn(n, n, |_, _| cnum(&mut r));
        let d2 = m.adjoint() * &m + CMat::identity(n, n);
        let d1 = (&k - k.adjoint()) * C64::from(0.3);
        let q_new = C64::from_polar(r.gen_range(0.5..2.0), r.gen_range(-PI..PI));
        let phi = CVec::from_iterator(n, (0..n).map(|_| cnum(&mut r)));
        let phi_dot = CVec::from_iterator(n, (0..n).map(|_| cnum(&mut r)));
        let psi0 = TwoComponentState::compose(&phi, &phi_dot, I)?;
        let times = [0.0, 1.0, 2.0];
        let a = evolve_twocomp(&assemble_hamiltonian(&d1, &d2, I, C64::from(0.0))?, &psi0, 0.0, &times, tol)?;
        let b = evolve_twocomp(&assemble_hamiltonian(&d1, &d2, q_new, C64::from(0.0))?, &apply_gauge(&psi0, q_new)?, 0.0, &times, tol)?;
        for (x, y) in a.states.iter().zip(&b.states) {
            let moved = apply_gauge(x, q_new)?;
            let scale = y.u.camax().max(y.v.camax());
            let d = (&moved.u - &y.u).camax().max((&moved.v - &y.v).camax());
            worst = worst.max(d / scale);
        }
    }
    rows.push(row("gauge_covariance_evolution", worst, 10.0 * tol));

    let levels = setup.config.levels as i64;
    for (sector, bundle) in setup.sectors.iter().zip(bundles(setup)?) {
        let p = pencil(setup, sector)?;
        let defect = [&p.a0, &p.a1, &p.a2].iter().map(|a| self_adjoint_defect(a, &p.weights)).fold(0.0, f64::max);
        rows.push(row(format!("pencil_self_adjoint[{}]", label(sector)), defect, 1e-12));
        let residual = bundle.modes.iter().filter(|m| m.label.radial.abs() <= levels).map(|m| m.residual).fold(0.0, f64::max);
        rows.push(row(format!("mode_residual[{}]", label(sector)), residual, 1e-8));
        if let Some(e) = oracle_energy(setup, sector)? {
            let rel = (lowest(&bundle)?.energy.re - e).abs() / e;
            rows.push(row(format!("oracle_energy[{}]", label(sector)), rel, 5e-3));
        }
    }

    let failed = rows.iter().filter(|r| !r.pass).count();
    let outcome = if failed == 0 { Ok(()) } else { Err(CliError::Numerical(format!("validate: {failed} of {} checks failed", rows.len()))) };
    Ok((vec![csv_artifact("validate.csv", &rows)?], outcome))
}
