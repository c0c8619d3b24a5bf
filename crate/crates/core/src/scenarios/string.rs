use crate::adiabatic::{
    assemble_phases, derivative, frame_overlap, holonomy, integrate_eta, ConnectionSample, ParameterPath,
};
use crate::bessel::{bessel_j, bisect};
use crate::discretization::{assemble_radial, radial_matrix, Closure, DiscreteOperator, RadialGrid, Sector};
use crate::error::{Error, Result};
use crate::linalg::{banded_matvec, bandwidth, identity_deviation, CMat, CVec};
use crate::propagator::{evolve_twocomp, overlap_deficit, FieldHamiltonian, FieldOperators, QSchedule};
use crate::spacetime::{build_coefficients, string_model, SpacetimeModel};
use crate::spectral::{solve_pencil, QuadraticPencil};
use crate::twocomp::{mode_vector, TwoComponentState};
use crate::C64;
use std::f64::consts::PI;
use std::sync::Arc;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Spinning cosmic string with angular momentum `j`, mass density `d` and a
/// field of mass `mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StringScenario {
    pub j: f64,
    pub d: f64,
    pub mu: f64,
}

impl StringScenario {
    pub fn new(j: f64, d: f64, mu: f64) -> Result<Self> {
        if !(j >= 0.0) || !j.is_finite() {
            return Err(Error::InvalidParameter(format!("angular momentum j must be >= 0, got {j}")));
        }
        if !(0.0..0.25).contains(&d) {
            return Err(Error::InvalidParameter(format!("mass density d must lie in [0, 1/4), got {d}")));
        }
        Ok(StringScenario { j, d, mu })
    }

    /// Builds from the cone parameter `alpha = 1 - 4d`.
    pub fn with_alpha(j: f64, alpha: f64, mu: f64) -> Result<Self> {
        Self::new(j, (1.0 - alpha) / 4.0, mu)
    }

    pub fn alpha(&self) -> f64 {
        1.0 - 4.0 * self.d
    }

    /// Radius `4j/alpha` inside which the rotating frame has closed timelike curves.
    pub fn rho_min(&self) -> f64 {
        4.0 * self.j / self.alpha()
    }

    /// Deficit angle `2 pi (1 - alpha) = 8 pi d`.
    pub fn deficit_angle(&self) -> f64 {
        2.0 * PI * (1.0 - self.alpha())
    }

    pub fn model(&self) -> SpacetimeModel {
        string_model(self.j, self.d, self.mu)
    }

    /// Grid on `(4j/alpha, rho_max)` with the cone measure `alpha rho`.
    pub fn grid(&self, rho_max: f64, n_points: usize) -> Result<RadialGrid> {
        self.grid_from(self.rho_min(), rho_max, n_points)
    }

    /// Grid with an explicit inner radius, which must not be below `4j/alpha`.
    pub fn grid_from(&self, rho_min: f64, rho_max: f64, n_points: usize) -> Result<RadialGrid> {
        self.check_inner(rho_min)?;
        let alpha = self.alpha();
        RadialGrid::new(rho_min, rho_max, n_points, move |r| alpha * r)
    }

    fn check_inner(&self, rho_min: f64) -> Result<()> {
        let limit = self.rho_min();
        if rho_min < limit * (1.0 - 1e-12) {
            return Err(Error::ClosedTimelikeRegion { limit });
        }
        Ok(())
    }
}

/// Pencil of the radial equation in sector `exp(i l phi + i p z)`:
/// `A0 = -[f'' + f'/rho - l^2/(alpha rho)^2 f] + (p^2 + mu^2) f`,
/// `A1 = 8 j l / (alpha rho)^2`, `A2 = -(1 - (4j / (alpha rho))^2)`.
pub fn string_pencil(s: &StringScenario, grid: &RadialGrid, angular: i64, p: f64) -> Result<QuadraticPencil> {
    s.check_inner(grid.rho_min())?;
    let alpha = s.alpha();
    let l = angular as f64;
    let n = grid.len();
    let mut second = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    let mut scalar = Vec::with_capacity(n);
    let mut a1 = CVec::zeros(n);
    let mut a2 = CVec::zeros(n);
    for (i, &rho) in grid.nodes().iter().enumerate() {
        let ar2 = (alpha * rho).powi(2);
        second.push(C64::from(-1.0));
        first.push(C64::from(-1.0 / rho));
        scalar.push(C64::from(l * l / ar2 + p * p + s.mu * s.mu));
        a1[i] = C64::from(8.0 * s.j * l / ar2);
        a2[i] = C64::from(-(1.0 - 16.0 * s.j * s.j / ar2));
    }
    let a0 = radial_matrix(grid, &second, &first, &scalar, Closure::for_sector(grid, angular))?;
    QuadraticPencil::new(
        a0,
        CMat::from_diagonal(&a1),
        CMat::from_diagonal(&a2),
        grid.weights().to_vec(),
        Some(Sector { angular, p }),
    )
}

/// D1 and D2 of the string derived from the metric, reduced to a sector.
pub fn string_operators(
    s: &StringScenario,
    grid: Arc<RadialGrid>,
    angular: i64,
    p: f64,
) -> Result<(DiscreteOperator, DiscreteOperator)> {
    s.check_inner(grid.rho_min())?;
    let model = s.model();
    let domain: Vec<[f64; 3]> = grid.nodes().iter().map(|&r| [r, 0.0, 0.0]).collect();
    let coeffs = build_coefficients(&model, 0.0, &domain)?;
    assemble_radial(&coeffs, grid, angular, p)
}

/// Energy of the `radial`-th mode (`+k` positive, `-k` negative) from the
/// Bessel condition `J_nu(k R) = 0`, `nu = |l + 4 j E| / alpha`,
/// `k = sqrt(E^2 - p^2 - mu^2)`, with `nu` and `k` solved self-consistently.
/// The inner wall at `4j/alpha` is ignored.
pub fn string_analytic_energy(s: &StringScenario, angular: i64, p: f64, rho_max: f64, radial: i64) -> Result<f64> {
    if radial == 0 || !(rho_max > 0.0) {
        return Err(Error::InvalidParameter(format!("need radial != 0 and rho_max > 0, got {radial}, {rho_max}")));
    }
    let sign = radial.signum() as f64;
    let count = radial.unsigned_abs() as usize;
    let threshold = (p * p + s.mu * s.mu).sqrt();
    let alpha = s.alpha();
    let l = angular as f64;
    let g = |e_abs: f64| {
        let e = sign * e_abs;
        let k = (e_abs * e_abs - threshold * threshold).max(0.0).sqrt();
        bessel_j((l + 4.0 * s.j * e).abs() / alpha, k * rho_max)
    };
    let step = PI / (64.0 * rho_max);
    let mut a = threshold + 0.5 * step;
    let mut fa = g(a);
    let mut found = 0;
    for _ in 0..200_000 {
        let b = a + step;
        let fb = g(b);
        if fa * fb < 0.0 {
            found += 1;
            if found == count {
                return Ok(sign * bisect(g, a, b));
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoBracket(format!("string oracle level {radial} in sector l = {angular}")))
}

/// `8 pi j E N_C`.
pub fn string_phase(j: f64, energy: f64, winding: f64) -> f64 {
    8.0 * PI * j * energy * winding
}

/// Connection of a box carried around the string, sampled at box angles
/// `angles`. Each value is `4 j E <F|F> + i <F | dF/dR2>`, the second term by
/// finite differences of the supplied frames.
pub fn string_box_connection(
    s: &StringScenario,
    energy: f64,
    frames: &[CMat],
    angles: &[f64],
    weights: &[f64],
) -> Result<Vec<ConnectionSample>> {
    if frames.len() != angles.len() || frames.len() < 3 {
        return Err(Error::BadSamples { min: 3 });
    }
    let k = frames[0].ncols();
    let mut grams = Vec::with_capacity(frames.len());
    for f in frames {
        let gram = frame_overlap(f, f, weights)?;
        let dev = identity_deviation(&gram);
        if dev > 1e-6 {
            return Err(if k == 1 { Error::NotNormalized { norm_sq: gram[(0, 0)].re } } else { Error::NotOrthonormal { deviation: dev } });
        }
        grams.push(gram);
    }
    let mut d_frames = vec![CMat::zeros(frames[0].nrows(), k); frames.len()];
    for c in 0..k {
        let cols: Vec<CVec> = frames.iter().map(|f| f.column(c).into_owned()).collect();
        for (df, d) in d_frames.iter_mut().zip(derivative(&cols, angles)?) {
            df.set_column(c, &d);
        }
    }
    frames
        .iter()
        .zip(&d_frames)
        .zip(grams)
        .zip(angles)
        .map(|(((f, df), gram), &a)| {
            let transported = frame_overlap(f, df, weights)? * I;
            Ok(ConnectionSample { s: a, value: gram * C64::from(4.0 * s.j * energy) + transported })
        })
        .collect()
}

/// A sampled box loop and its connection.
#[derive(Clone, Debug)]
pub struct BoxLoop {
    pub path: ParameterPath,
    pub samples: Vec<ConnectionSample>,
}

impl BoxLoop {
    pub fn holonomy(&self) -> Result<CMat> {
        holonomy(&self.path, &self.samples)
    }

    /// Trapezoid integral of the connection over the loop.
    pub fn integral(&self) -> CMat {
        let k = self.samples[0].value.nrows();
        let mut acc = CMat::zeros(k, k);
        for w in self.samples.windows(2) {
            acc += (&w[0].value + &w[1].value) * C64::from(0.5 * (w[1].s - w[0].s));
        }
        acc
    }

    /// Eigenphases of the holonomy, each unwrapped to the branch nearest the
    /// mean of the integrated connection, sorted ascending.
    pub fn phases(&self) -> Result<Vec<f64>> {
        let h = self.holonomy()?;
        let k = h.nrows();
        let reference = self.integral().trace().re / k as f64;
        let (values, _) = crate::linalg::eig(&h)?;
        let mut out: Vec<f64> = values
            .iter()
            .map(|z| {
                let a = z.arg();
                a + 2.0 * PI * ((reference - a) / (2.0 * PI)).round()
            })
            .collect();
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

/// Carries the box `winding` times around the string with `samples` steps per
/// loop. `frame_at(R2)` returns the box-centered mode frame at box angle `R2`.
pub fn string_box_loop<F>(
    s: &StringScenario,
    energy: f64,
    frame_at: F,
    winding: u32,
    samples: usize,
    weights: &[f64],
) -> Result<BoxLoop>
where
    F: Fn(f64) -> CMat,
{
    if winding == 0 || samples < 3 {
        return Err(Error::BadSamples { min: 3 });
    }
    let total = samples * winding as usize;
    let angles: Vec<f64> = (0..=total).map(|i| 2.0 * PI * winding as f64 * i as f64 / total as f64).collect();
    let frames: Vec<CMat> = angles.iter().map(|&a| frame_at(a)).collect();
    let samples = string_box_connection(s, energy, &frames, &angles, weights)?;
    let mut points: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
    // the last sample closes the loop exactly
    points[total] = points[0].clone();
    let path = ParameterPath::new(angles, points)?;
    Ok(BoxLoop { path, samples })
}

/// Chebyshev interpolant on `[a, b]`.
#[derive(Clone, Debug)]
struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    fn fit(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let x: Vec<f64> = (0..n).map(|i| (PI * (i as f64 + 0.5) / n as f64).cos()).collect();
        let fx = x.iter().map(|&x| f(0.5 * (a + b) + 0.5 * (b - a) * x)).collect::<Result<Vec<_>>>()?;
        let coeffs = (0..n)
            .map(|k| {
                2.0 / n as f64
                    * (0..n).map(|i| fx[i] * (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos()).sum::<f64>()
            })
            .collect();
        Ok(Chebyshev { a, b, coeffs })
    }

    fn clenshaw(c: &[f64], x: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * c[0]
    }

    fn local(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    fn eval(&self, t: f64) -> f64 {
        Self::clenshaw(&self.coeffs, self.local(t))
    }

    fn derivative(&self, t: f64) -> f64 {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n];
        for k in (1..n).rev() {
            let next = if k + 1 < n { d[k + 1] } else { 0.0 };
            d[k - 1] = next + 2.0 * k as f64 * self.coeffs[k];
        }
        Self::clenshaw(&d, self.local(t)) * 2.0 / (self.b - self.a)
    }
}

/// Closed loop in the string's angular momentum, `j(t) = j0 + dj P(t/T)` with
/// `P(u) = 27/4 u (1 - u)^2`, acting on the `l = 0, p = 0` sector on a fixed
/// grid whose inner radius clears the largest `4j/alpha` on the loop.
#[derive(Clone, Debug)]
pub struct StringLoop {
    pub base: StringScenario,
    pub dj: f64,
    grid: Arc<RadialGrid>,
}

/// Overlap deficit of the two-term ansatz along one sweep.
#[derive(Clone, Debug)]
pub struct DeficitRun {
    pub sweep_time: f64,
    pub times: Vec<f64>,
    pub deficits: Vec<f64>,
    pub energies: Vec<f64>,
    pub eta: Vec<C64>,
    pub xi: Vec<C64>,
}

impl DeficitRun {
    pub fn final_deficit(&self) -> f64 {
        *self.deficits.last().expect("run has samples")
    }
}

/// `D1 = 0`, `D2(t) = W(t)^-1 L` with `L` the static part of the pencil and
/// `W = 1 - (4 j(t) / (alpha rho))^2`.
#[derive(Clone, Debug)]
pub struct LoopOperators {
    lap: CMat,
    band: usize,
    inv_ar2: Vec<f64>,
    j0: f64,
    dj: f64,
    sweep: f64,
}

impl LoopOperators {
    fn j_at(&self, t: f64) -> f64 {
        self.j0 + self.dj * StringLoop::profile(t / self.sweep)
    }
}

impl FieldOperators for LoopOperators {
    fn dim(&self) -> usize {
        self.inv_ar2.len()
    }

    fn apply_d1(&self, _t: f64, _x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    }

    fn apply_d2(&self, t: f64, x: &[C64], out: &mut [C64]) {
        banded_matvec(&self.lap, self.band, x, out);
        let j = self.j_at(t);
        for (o, c) in out.iter_mut().zip(&self.inv_ar2) {
            *o /= 1.0 - 16.0 * j * j * c;
        }
    }
}

impl StringLoop {
    pub fn new(base: StringScenario, dj: f64, rho_max: f64, n_points: usize) -> Result<Self> {
        if !(dj >= 0.0) || !dj.is_finite() {
            return Err(Error::InvalidParameter(format!("loop amplitude dj must be >= 0, got {dj}")));
        }
        let top = StringScenario { j: base.j + dj, ..base };
        let grid = Arc::new(base.grid_from(top.rho_min(), rho_max, n_points)?);
        Ok(StringLoop { base, dj, grid })
    }

    /// `27/4 u (1 - u)^2`: zero at both ends, peak 1 at `u = 1/3`, flat at `u = 1`.
    pub fn profile(u: f64) -> f64 {
        6.75 * u * (1.0 - u) * (1.0 - u)
    }

    pub fn profile_rate(u: f64) -> f64 {
        6.75 * (1.0 - u) * (1.0 - 3.0 * u)
    }

    pub fn grid(&self) -> Arc<RadialGrid> {
        self.grid.clone()
    }

    pub fn j_at(&self, t: f64, sweep: f64) -> f64 {
        self.base.j + self.dj * Self::profile(t / sweep)
    }

    pub fn pencil(&self, j: f64) -> Result<QuadraticPencil> {
        string_pencil(&StringScenario { j, ..self.base }, &self.grid, 0, 0.0)
    }

    /// Lowest positive energy and its unit mode at angular momentum `j`.
    pub fn ground(&self, j: f64) -> Result<(f64, CVec)> {
        let bundle = solve_pencil(&self.pencil(j)?)?;
        let m = bundle.radial(1).ok_or(Error::NoModes)?;
        Ok((m.energy.re, m.vector.clone()))
    }

    pub fn operators(&self, sweep: f64) -> Result<LoopOperators> {
        let lap = self.pencil(self.base.j)?.a0;
        let alpha = self.base.alpha();
        Ok(LoopOperators {
            band: bandwidth(&lap),
            lap,
            inv_ar2: self.grid.nodes().iter().map(|r| 1.0 / (alpha * r).powi(2)).collect(),
            j0: self.base.j,
            dj: self.dj,
            sweep,
        })
    }

    /// Evolves the two-term state `e^{i pi/4} Psi_+ + e^{-i pi/4} Psi_-` of the
    /// ground level with `q = i` through one sweep of duration `sweep`, and
    /// compares it with the ansatz built from the phase equations at `samples`
    /// equally spaced times (including both ends).
    pub fn deficit_run(&self, sweep: f64, samples: usize, tol: f64) -> Result<DeficitRun> {
        if !(sweep > 0.0) || samples < 2 {
            return Err(Error::BadSamples { min: 2 });
        }
        let q = I;
        let j_lo = self.base.j;
        let j_hi = self.base.j + self.dj;
        let level = if self.dj > 0.0 {
            Some(Chebyshev::fit(j_lo, j_hi, 24, |j| Ok(self.ground(j)?.0))?)
        } else {
            None
        };
        let e0 = self.ground(j_lo)?.0;
        let energy = |t: f64| match &level {
            Some(c) => c.eval(self.j_at(t, sweep)),
            None => e0,
        };
        let rate = |t: f64| match &level {
            Some(c) => {
                let j_rate = self.dj * Self::profile_rate(t / sweep) / sweep;
                c.derivative(self.j_at(t, sweep)) * j_rate / c.eval(self.j_at(t, sweep))
            }
            None => 0.0,
        };

        let times: Vec<f64> = (0..samples).map(|k| sweep * k as f64 / (samples - 1) as f64).collect();
        let (ap0, am0) = (C64::from(PI / 4.0), C64::from(-PI / 4.0));
        let eta = integrate_eta(|t| C64::from(rate(t)), |t| C64::from(energy(t)), ap0 - am0, &times, tol)?;
        let phases = assemble_phases(&vec![0.0; times.len()], &eta, ap0, am0)?;

        let two_term = |t: f64, a_plus: C64, a_minus: C64| -> Result<(f64, TwoComponentState)> {
            let (e, phi) = self.ground(self.j_at(t, sweep))?;
            let plus = mode_vector(C64::from(e), &phi, q)?;
            let minus = mode_vector(C64::from(-e), &phi, q)?;
            let (cp, cm) = ((I * a_plus).exp(), (I * a_minus).exp());
            Ok((e, TwoComponentState { q, u: &plus.u * cp + &minus.u * cm, v: &plus.v * cp + &minus.v * cm }))
        };
        let (_, psi0) = two_term(0.0, ap0, am0)?;
        let h = FieldHamiltonian { ops: self.operators(sweep)?, q: QSchedule::Constant(q) };
        let trajectory = evolve_twocomp(&h, &psi0, 0.0, &times, tol)?;

        let mut energies = Vec::with_capacity(times.len());
        let mut ansatz = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let (e, state) = two_term(t, phases.alpha_plus[k], phases.alpha_minus[k])?;
            energies.push(e);
            ansatz.push(state);
        }
        let deficits = overlap_deficit(&trajectory, &ansatz, self.grid.weights())?;
        Ok(DeficitRun { sweep_time: sweep, times, deficits, energies, eta: phases.eta, xi: phases.xi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_parameters() {
        let s = StringScenario::new(0.05, 0.025, 1.0).unwrap();
        assert!((s.alpha() - 0.9).abs() < 1e-15);
        assert!((s.rho_min() - 0.2 / 0.9).abs() < 1e-15);
        assert!((s.deficit_angle() - 8.0 * PI * 0.025).abs() < 1e-14);
        assert!(StringScenario::new(0.1, 0.25, 1.0).is_err());
        assert!(StringScenario::new(-0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_inside_ctc_region_rejected() {
        let s = StringScenario::new(0.05, 0.0, 1.0).unwrap();
        assert!(matches!(s.grid_from(0.1, 5.0, 20), Err(Error::ClosedTimelikeRegion { .. })));
        let g = RadialGrid::cylindrical(0.0, 5.0, 20).unwrap();
        assert!(matches!(string_pencil(&s, &g, 1, 0.0), Err(Error::ClosedTimelikeRegion { .. })));
    }

    #[test]
    fn pencil_terms() {
        let s = StringScenario::new(0.05, 0.0, 1.0).unwrap();
        let g = s.grid(5.0, 30).unwrap();
        let l0 = string_pencil(&s, &g, 0, 0.0).unwrap();
        assert!(l0.a1.iter().all(|z| z.norm() == 0.0));
        let free = StringScenario::new(0.0, 0.0, 1.0).unwrap();
        let p = string_pencil(&free, &free.grid(5.0, 30).unwrap(), 2, 0.0).unwrap();
        assert!(p.a1.iter().all(|z| z.norm() == 0.0));
        assert!((p.a2.clone() + CMat::identity(30, 30)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn oracle_reduces_to_bessel_root() {
        let s = StringScenario::new(0.0, 0.0, 0.0).unwrap();
        let e = string_analytic_energy(&s, 0, 0.0, 10.0, 1).unwrap();
        assert!((e - 0.24048255576957728).abs() < 1e-10, "{e}");
        assert!((string_analytic_energy(&s, 0, 0.0, 10.0, -1).unwrap() + e).abs() < 1e-12);
    }

    #[test]
    fn phase_formula() {
        assert_eq!(string_phase(0.0, 2.0, 1.0), 0.0);
        assert!((string_phase(0.05, 2.0, 1.0) - 0.8 * PI).abs() < 1e-14);
        assert_eq!(string_phase(0.05, 2.0, 3.0), 3.0 * string_phase(0.05, 2.0, 1.0));
    }

    #[test]
    fn chebyshev_interpolant() {
        let c = Chebyshev::fit(0.5, 2.0, 20, |x| Ok(x.sin())).unwrap();
        for &x in &[0.5, 0.77, 1.3, 2.0] {
            assert!((c.eval(x) - x.sin()).abs() < 1e-13);
            assert!((c.derivative(x) - x.cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn box_connection_of_fixed_mode() {
        let s = StringScenario::new(0.05, 0.0, 1.0).unwrap();
        let g = s.grid(5.0, 40).unwrap();
        let mut f = CMat::from_element(40, 1, C64::from(1.0));
        let n = frame_overlap(&f, &f, g.weights()).unwrap()[(0, 0)].re.sqrt();
        f /= C64::from(n);
        let lp = string_box_loop(&s, 1.5, |_| f.clone(), 2, 64, g.weights()).unwrap();
        let phases = lp.phases().unwrap();
        assert!((phases[0] - string_phase(0.05, 1.5, 2.0)).abs() < 1e-12);
        let bad = &f * C64::from(1.1);
        assert!(matches!(
            string_box_connection(&s, 1.5, &[bad.clone(), bad.clone(), bad], &[0.0, 0.1, 0.2], g.weights()),
            Err(Error::NotNormalized { .. })
        ));
    }
}
