//! Berry connections, holonomies and Wilson loops along parameter paths, and
//! the phase equations for the two-term adiabatic ansatz.

use crate::discretization::inner_product;
use crate::error::{Error, Result};
use crate::linalg::{expm_i_hermitian, identity_deviation, polar_unitary, CMat, CVec};
use crate::ode;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Sampled closed or open curve in parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPath {
    pub s: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl ParameterPath {
    pub fn new(s: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if s.len() < 3 || s.len() != points.len() || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadSamples { min: 3 });
        }
        Ok(ParameterPath { s, points })
    }

    /// Distance between the first and last parameter points.
    pub fn closure_gap(&self) -> f64 {
        let a = &self.points[0];
        let b = &self.points[self.points.len() - 1];
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        self.closure_gap() <= tol
    }
}

/// Connection matrix `A_mn(s) = i <Phi_m | d Phi_n / ds>` (1x1 in the Abelian case).
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionSample {
    pub s: f64,
    pub value: CMat,
}

fn fd_weights(s: &[f64], k: usize) -> [(usize, f64); 3] {
    let n = s.len();
    if k == 0 {
        let (h1, h2) = (s[1] - s[0], s[2] - s[1]);
        [
            (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (1, (h1 + h2) / (h1 * h2)),
            (2, -h1 / (h2 * (h1 + h2))),
        ]
    } else if k == n - 1 {
        let (h1, h2) = (s[n - 2] - s[n - 3], s[n - 1] - s[n - 2]);
        [
            (n - 3, h2 / (h1 * (h1 + h2))),
            (n - 2, -(h1 + h2) / (h1 * h2)),
            (n - 1, (h1 + 2.0 * h2) / (h2 * (h1 + h2))),
        ]
    } else {
        let (h1, h2) = (s[k] - s[k - 1], s[k + 1] - s[k]);
        [
            (k - 1, -h2 / (h1 * (h1 + h2))),
            (k, (h2 - h1) / (h1 * h2)),
            (k + 1, h1 / (h2 * (h1 + h2))),
        ]
    }
}

/// Second-order finite-difference derivative of sampled vectors with respect
/// to `s` (central inside, one-sided at the ends).
pub fn derivative(values: &[CVec], s: &[f64]) -> Result<Vec<CVec>> {
    if values.len() != s.len() || s.len() < 3 || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadSamples { min: 3 });
    }
    Ok((0..s.len())
        .map(|k| {
            let w = fd_weights(s, k);
            &values[w[0].0] * C64::from(w[0].1) + &values[w[1].0] * C64::from(w[1].1) + &values[w[2].0] * C64::from(w[2].1)
        })
        .collect())
}

/// Same as [`derivative`] for scalar samples.
pub fn derivative_scalar(values: &[C64], s: &[f64]) -> Result<Vec<C64>> {
    if values.len() != s.len() || s.len() < 3 || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadSamples { min: 3 });
    }
    Ok((0..s.len())
        .map(|k| fd_weights(s, k).iter().map(|&(i, c)| values[i] * c).sum())
        .collect())
}

/// Makes successive overlaps real and positive (discrete parallel transport).
pub fn align_path(vectors: &[CVec], weights: &[f64]) -> Result<Vec<CVec>> {
    let mut out: Vec<CVec> = Vec::with_capacity(vectors.len());
    for v in vectors {
        match out.last() {
            None => out.push(v.clone()),
            Some(prev) => {
                let ov = inner_product(prev.as_slice(), v.as_slice(), weights)?;
                if ov.norm() == 0.0 {
                    return Err(Error::LevelCrossing { step: out.len(), best: 0.0, second: 0.0 });
                }
                out.push(v * (ov.conj() / ov.norm()));
            }
        }
    }
    Ok(out)
}

fn check_normalized(v: &CVec, weights: &[f64], tol: f64) -> Result<()> {
    let n2 = inner_product(v.as_slice(), v.as_slice(), weights)?.re;
    if (n2 - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm_sq: n2 });
    }
    Ok(())
}

/// Abelian connection `A(s) = i <Phi | dPhi/ds>` along a path of unit vectors.
pub fn berry_connection(path: &[CVec], s: &[f64], weights: &[f64]) -> Result<Vec<ConnectionSample>> {
    for v in path {
        check_normalized(v, weights, 1e-8)?;
    }
    let d = derivative(path, s)?;
    path.iter()
        .zip(&d)
        .zip(s)
        .map(|((v, dv), &s)| {
            let a = I * inner_product(v.as_slice(), dv.as_slice(), weights)?;
            Ok(ConnectionSample { s, value: CMat::from_element(1, 1, a) })
        })
        .collect()
}

/// Gram matrix `<F_m | G_n>` of two frames (columns are basis vectors).
pub fn frame_overlap(f: &CMat, g: &CMat, weights: &[f64]) -> Result<CMat> {
    if f.nrows() != weights.len() || g.nrows() != weights.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), got: f.nrows().max(g.nrows()) });
    }
    let wg = CMat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * weights[i]);
    Ok(f.adjoint() * wg)
}

pub fn check_orthonormal(frame: &CMat, weights: &[f64], tol: f64) -> Result<()> {
    let dev = identity_deviation(&frame_overlap(frame, frame, weights)?);
    if dev > tol {
        return Err(Error::NotOrthonormal { deviation: dev });
    }
    Ok(())
}

/// Non-Abelian connection `A_mn(s) = i <Phi_m | d Phi_n / ds>` for a degenerate frame.
pub fn berry_connection_frames(frames: &[CMat], s: &[f64], weights: &[f64]) -> Result<Vec<ConnectionSample>> {
    for f in frames {
        check_orthonormal(f, weights, 1e-8)?;
    }
    if frames.len() != s.len() || s.len() < 3 {
        return Err(Error::BadSamples { min: 3 });
    }
    (0..s.len())
        .map(|k| {
            let w = fd_weights(s, k);
            let df = &frames[w[0].0] * C64::from(w[0].1) + &frames[w[1].0] * C64::from(w[1].1) + &frames[w[2].0] * C64::from(w[2].1);
            Ok(ConnectionSample { s: s[k], value: frame_overlap(&frames[k], &df, weights)? * I })
        })
        .collect()
}

/// Rotates each frame by the unitary polar factor of its overlap with the
/// previous one, so that successive Gram matrices are Hermitian positive.
pub fn align_frames(frames: &[CMat], weights: &[f64]) -> Result<Vec<CMat>> {
    let mut out: Vec<CMat> = Vec::with_capacity(frames.len());
    for f in frames {
        match out.last() {
            None => out.push(f.clone()),
            Some(prev) => {
                let m = frame_overlap(prev, f, weights)?;
                out.push(f * polar_unitary(&m).adjoint());
            }
        }
    }
    Ok(out)
}

fn check_closed(path: &ParameterPath, samples: &[ConnectionSample]) -> Result<()> {
    if samples.len() != path.s.len() || samples.iter().zip(&path.s).any(|(c, s)| (c.s - s).abs() > 1e-12 * (1.0 + s.abs())) {
        return Err(Error::BadSamples { min: path.s.len() });
    }
    let gap = path.closure_gap();
    if gap > 1e-9 {
        return Err(Error::OpenPath { gap });
    }
    Ok(())
}

/// Path-ordered `P exp(i \oint A ds)` with later samples acting on the left.
/// The Abelian case uses the trapezoid rule for the exponent; larger frames
/// multiply midpoint exponentials and re-unitarize the product.
pub fn holonomy(path: &ParameterPath, samples: &[ConnectionSample]) -> Result<CMat> {
    check_closed(path, samples)?;
    let k = samples[0].value.nrows();
    if k == 1 {
        let phase = loop_integral(samples);
        return Ok(CMat::from_element(1, 1, (I * phase).exp()));
    }
    let mut u = CMat::identity(k, k);
    for w in samples.windows(2) {
        let mid = (&w[0].value + &w[1].value) * C64::from(0.5);
        u = expm_i_hermitian(&mid, w[1].s - w[0].s) * u;
    }
    Ok(polar_unitary(&u))
}

/// Trapezoid integral of an Abelian connection.
pub fn loop_integral(samples: &[ConnectionSample]) -> C64 {
    samples
        .windows(2)
        .map(|w| (w[0].value[(0, 0)] + w[1].value[(0, 0)]) * (0.5 * (w[1].s - w[0].s)))
        .sum()
}

/// Geometric phase `\oint A` (not reduced mod 2 pi) for a closed path.
pub fn geometric_phase(path: &ParameterPath, samples: &[ConnectionSample]) -> Result<f64> {
    check_closed(path, samples)?;
    if samples[0].value.nrows() != 1 {
        return Err(Error::InvalidParameter("geometric_phase needs an Abelian connection".into()));
    }
    Ok(loop_integral(samples).re)
}

/// Discrete Wilson loop `W = prod_k polar(<F_k | F_k+1>)` over consecutive frames.
/// The last frame closes the loop and must span the same subspace as the first.
/// Its spectrum is gauge invariant and the continuum holonomy is `W^dagger`.
pub fn wilson_loop(frames: &[CMat], weights: &[f64]) -> Result<CMat> {
    if frames.len() < 2 {
        return Err(Error::BadSamples { min: 2 });
    }
    let k = frames[0].ncols();
    let close = frame_overlap(&frames[0], &frames[frames.len() - 1], weights)?;
    let sv = close.clone().singular_values();
    let gap = sv.iter().map(|s| (1.0 - s).abs()).fold(0.0, f64::max);
    if gap > 1e-6 {
        return Err(Error::OpenPath { gap });
    }
    let mut w = CMat::identity(k, k);
    for pair in frames.windows(2) {
        w *= polar_unitary(&frame_overlap(&pair[0], &pair[1], weights)?);
    }
    Ok(w)
}

/// Sampled solution of the phase-difference equation and its companion integral.
#[derive(Clone, Debug)]
pub struct EtaSolution {
    pub times: Vec<f64>,
    pub eta: Vec<C64>,
    /// `xi(t) = 1/2 \int_0^t f (1 - cos eta)`.
    pub xi: Vec<C64>,
}

/// Integrates `eta' + f(t) sin(eta) + 2 E(t) = 0` together with
/// `xi' = f (1 - cos eta) / 2` from `times[0]`, reporting every sample.
pub fn integrate_eta<F, G>(f: F, energy: G, eta0: C64, times: &[f64], tol: f64) -> Result<EtaSolution>
where
    F: Fn(f64) -> C64,
    G: Fn(f64) -> C64,
{
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadSamples { min: 2 });
    }
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let ft = f(t);
        dy[0] = -ft * y[0].sin() - energy(t) * 2.0;
        dy[1] = ft * (C64::from(1.0) - y[0].cos()) * 0.5;
    };
    let sol = ode::integrate_refined(rhs, times[0], &[eta0, C64::from(0.0)], times, &ode::Options::with_tol(tol))?;
    Ok(EtaSolution {
        times: times.to_vec(),
        eta: sol.states.iter().map(|y| y[0]).collect(),
        xi: sol.states.iter().map(|y| y[1]).collect(),
    })
}

/// `xi = 1/2 \int f (1 - cos eta)` by the trapezoid rule on given samples.
pub fn xi_integral(times: &[f64], f: &[C64], eta: &[C64]) -> Result<Vec<C64>> {
    if times.len() != f.len() || times.len() != eta.len() || times.is_empty() {
        return Err(Error::BadSamples { min: 1 });
    }
    let g: Vec<C64> = f.iter().zip(eta).map(|(f, e)| f * (C64::from(1.0) - e.cos()) * 0.5).collect();
    let mut out = vec![C64::from(0.0)];
    for k in 1..times.len() {
        let prev = out[k - 1];
        out.push(prev + (g[k] + g[k - 1]) * (0.5 * (times[k] - times[k - 1])));
    }
    Ok(out)
}

/// Phases of the two ansatz components over time.
#[derive(Clone, Debug)]
pub struct PhaseResult {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<C64>,
    pub xi: Vec<C64>,
    pub alpha_plus: Vec<C64>,
    pub alpha_minus: Vec<C64>,
}

/// `alpha_pm = (alpha_+(0) + alpha_-(0))/2 + gamma + i xi +- eta/2`.
pub fn assemble_phases(gamma: &[f64], solution: &EtaSolution, alpha_plus0: C64, alpha_minus0: C64) -> Result<PhaseResult> {
    let n = solution.times.len();
    if gamma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: gamma.len() });
    }
    let expected = alpha_plus0 - alpha_minus0;
    if (solution.eta[0] - expected).norm() > 1e-10 * (1.0 + expected.norm()) {
        return Err(Error::InconsistentInitialPhase { given: solution.eta[0].re, expected: expected.re });
    }
    let mean = (alpha_plus0 + alpha_minus0) * 0.5;
    let mut ap = Vec::with_capacity(n);
    let mut am = Vec::with_capacity(n);
    for k in 0..n {
        let base = mean + gamma[k] + I * solution.xi[k];
        ap.push(base + solution.eta[k] * 0.5);
        am.push(base - solution.eta[k] * 0.5);
    }
    Ok(PhaseResult {
        times: solution.times.clone(),
        gamma: gamma.to_vec(),
        eta: solution.eta.clone(),
        xi: solution.xi.clone(),
        alpha_plus: ap,
        alpha_minus: am,
    })
}

const SINGULAR: f64 = 1e-12;

fn principal_ratio_log(num: C64, den: C64, branch: &'static str) -> Result<C64> {
    if den.norm() < SINGULAR {
        return Err(Error::SingularPhase { branch, endpoint: "initial", value: den.norm() });
    }
    if num.norm() < SINGULAR {
        return Err(Error::SingularPhase { branch, endpoint: "final", value: num.norm() });
    }
    let r = num / den;
    if r.re < 0.0 && r.im.abs() <= 1e-14 * r.norm() {
        return Err(Error::BranchCut);
    }
    Ok(r.ln())
}

/// Cyclic phases `(alpha, beta)` of a periodic two-term solution:
/// `alpha = gamma + i [xi - ln(cos(eta_T/2) / cos(eta_0/2))]` and the same with `sin` for `beta`,
/// using the principal logarithm.
pub fn cyclic_phases(gamma: f64, xi: C64, eta0: C64, eta_t: C64) -> Result<(C64, C64)> {
    let lc = principal_ratio_log((eta_t * 0.5).cos(), (eta0 * 0.5).cos(), "cos")?;
    let ls = principal_ratio_log((eta_t * 0.5).sin(), (eta0 * 0.5).sin(), "sin")?;
    Ok((C64::from(gamma) + I * (xi - lc), C64::from(gamma) + I * (xi - ls)))
}

/// As [`cyclic_phases`] but continues the logarithms along a sampled `eta`
/// trajectory instead of taking principal values. Consecutive samples whose
/// argument jumps by more than pi are rejected.
pub fn cyclic_phases_tracked(gamma: f64, xi: C64, eta: &[C64]) -> Result<(C64, C64)> {
    if eta.len() < 2 {
        return Err(Error::BadSamples { min: 2 });
    }
    let track = |g: &dyn Fn(C64) -> C64, branch: &'static str| -> Result<C64> {
        let z0 = g(eta[0] * 0.5);
        if z0.norm() < SINGULAR {
            return Err(Error::SingularPhase { branch, endpoint: "initial", value: z0.norm() });
        }
        let mut arg = 0.0;
        let mut prev = z0;
        for (k, e) in eta.iter().enumerate().skip(1) {
            let z = g(e * 0.5);
            if z.norm() < SINGULAR {
                return Err(Error::SingularPhase { branch, endpoint: "intermediate", value: z.norm() });
            }
            let step = (z / prev).arg();
            if step.abs() > std::f64::consts::PI * (1.0 - 1e-9) {
                return Err(Error::PhaseJump { index: k - 1, next: k, jump: step });
            }
            arg += step;
            prev = z;
        }
        Ok(C64::new((prev.norm() / z0.norm()).ln(), arg))
    };
    let lc = track(&|z: C64| z.cos(), "cos")?;
    let ls = track(&|z: C64| z.sin(), "sin")?;
    Ok((C64::from(gamma) + I * (xi - lc), C64::from(gamma) + I * (xi - ls)))
}

/// Berry-identity residual `| <m|D2'|n> / (E_n^2 - E_m^2) - <m|n'> |` for a
/// self-adjoint `D2` without first-order term.
pub fn berry_identity_residual(
    phi_m: &CVec,
    phi_n: &CVec,
    phi_n_dot: &CVec,
    d2_dot: &CMat,
    e_m: C64,
    e_n: C64,
    weights: &[f64],
) -> Result<f64> {
    let lhs = inner_product(phi_m.as_slice(), (d2_dot * phi_n).as_slice(), weights)? / (e_n * e_n - e_m * e_m);
    let rhs = inner_product(phi_m.as_slice(), phi_n_dot.as_slice(), weights)?;
    Ok((lhs - rhs).norm())
}

/// Diagnostics separating the two notions of adiabaticity along a sampled evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticityReport {
    /// `max_t |d(q E_n)/dt|`.
    pub ultra_residual: f64,
    /// `max_t max_m |<Phi_m | dPhi_n/dt>|`.
    pub adiabatic_residual: f64,
    /// `max_t max_m |<m,n><n,n'> - <m,n'><n,n>|` in the two-component product.
    pub generalized_residual: f64,
    /// Smallest `|E_n - E_m|` seen.
    pub min_gap: f64,
}

/// Builds the report for level `n` (index into `levels`) from tracked levels sampled at `times`.
///
/// `levels[k]` holds energies and vectors of one tracked level; `q` gives the
/// decomposition parameter at each time.
pub fn adiabaticity_report(
    times: &[f64],
    levels: &[(Vec<C64>, Vec<CVec>)],
    n: usize,
    q: &[C64],
    weights: &[f64],
) -> Result<AdiabaticityReport> {
    let (en, vn) = levels.get(n).ok_or(Error::ModeIndex { index: n, len: levels.len() })?;
    if q.len() != times.len() || en.len() != times.len() || vn.len() != times.len() {
        return Err(Error::BadSamples { min: times.len() });
    }
    let qe: Vec<C64> = q.iter().zip(en).map(|(q, e)| q * e).collect();
    let ultra = derivative_scalar(&qe, times)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let vn_dot = derivative(vn, times)?;
    let psi_n: Vec<CVec> = (0..times.len())
        .map(|k| mode_stack(en[k], &vn[k], q[k]))
        .collect();
    let psi_n_dot = derivative(&psi_n, times)?;
    let kg = |a: &CVec, b: &CVec| -> Result<C64> {
        let n = a.len() / 2;
        let top = inner_product(&a.as_slice()[..n], &b.as_slice()[..n], weights)?;
        let bot = inner_product(&a.as_slice()[n..], &b.as_slice()[n..], weights)?;
        Ok(top - bot)
    };
    let mut adiabatic: f64 = 0.0;
    let mut generalized: f64 = 0.0;
    let mut gap = f64::INFINITY;
    for (m, (em, vm)) in levels.iter().enumerate() {
        if m == n {
            continue;
        }
        if em.len() != times.len() || vm.len() != times.len() {
            return Err(Error::BadSamples { min: times.len() });
        }
        for k in 0..times.len() {
            adiabatic = adiabatic.max(inner_product(vm[k].as_slice(), vn_dot[k].as_slice(), weights)?.norm());
            gap = gap.min((en[k] - em[k]).norm());
            let psi_m = mode_stack(em[k], &vm[k], q[k]);
            let g = kg(&psi_m, &psi_n[k])? * kg(&psi_n[k], &psi_n_dot[k])? - kg(&psi_m, &psi_n_dot[k])? * kg(&psi_n[k], &psi_n[k])?;
            generalized = generalized.max(g.norm());
        }
    }
    Ok(AdiabaticityReport { ultra_residual: ultra, adiabatic_residual: adiabatic, generalized_residual: generalized, min_gap: gap })
}

fn mode_stack(e: C64, phi: &CVec, q: C64) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = (C64::from(1.0) - I * q * e) * s;
    let b = (C64::from(1.0) + I * q * e) * s;
    CVec::from_iterator(2 * phi.len(), phi.iter().map(|z| z * a).chain(phi.iter().map(|z| z * b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eta_closed_form_without_energy() {
        // E = 0, f = const: tan(eta/2) = tan(eta0/2) exp(-f t)
        let (f, eta0) = (0.7, 1.1);
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let sol = integrate_eta(|_| C64::from(f), |_| C64::from(0.0), C64::from(eta0), &times, 1e-12).unwrap();
        for (t, e) in times.iter().zip(&sol.eta) {
            let exact = 2.0 * ((eta0 / 2.0).tan() * (-f * t).exp()).atan();
            assert!((e - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn xi_vanishes_without_f() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let sol = integrate_eta(|_| C64::from(0.0), |t| C64::from(1.0 + 0.1 * t), C64::from(0.3), &times, 1e-12).unwrap();
        assert!(sol.xi.iter().all(|x| x.norm() == 0.0));
        // eta = eta0 - 2 \int E = 0.3 - 2 (t + 0.05 t^2)
        for (t, e) in times.iter().zip(&sol.eta) {
            assert!((e.re - (0.3 - 2.0 * (t + 0.05 * t * t))).abs() < 1e-10);
        }
    }

    #[test]
    fn cyclic_phase_singularities() {
        assert!(matches!(cyclic_phases(0.0, C64::from(0.0), C64::from(PI), C64::from(0.2)), Err(Error::SingularPhase { branch: "cos", .. })));
        assert!(matches!(cyclic_phases(0.0, C64::from(0.0), C64::from(0.0), C64::from(0.2)), Err(Error::SingularPhase { branch: "sin", .. })));
        assert!(matches!(cyclic_phases(0.0, C64::from(0.0), C64::from(1.0), C64::from(2.0 * PI - 1.0)), Err(Error::BranchCut)));
        let (a, b) = cyclic_phases(0.5, C64::from(0.0), C64::from(1.0), C64::from(1.0)).unwrap();
        assert!((a - 0.5).norm() < 1e-15 && (b - 0.5).norm() < 1e-15);
    }

    #[test]
    fn closure_is_enforced() {
        let s = vec![0.0, 1.0, 2.0];
        let open = ParameterPath::new(s.clone(), vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let samples: Vec<ConnectionSample> = s.iter().map(|&s| ConnectionSample { s, value: CMat::from_element(1, 1, C64::from(1.0)) }).collect();
        assert!(matches!(holonomy(&open, &samples), Err(Error::OpenPath { .. })));
    }
}
