//! Time evolution in the two-component form and, independently, in the
//! original second-order form.

use crate::discretization::inner_product;
use crate::error::{Error, Result};
use crate::linalg::{bandwidth, banded_matvec, CMat, CVec};
use crate::ode;
use crate::twocomp::{BlockHamiltonian, TwoComponentState};
use crate::C64;
use std::sync::Arc;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Time-dependent spatial operators D1(t), D2(t) acting on grid vectors.
pub trait FieldOperators: Sync {
    fn dim(&self) -> usize;
    fn apply_d1(&self, t: f64, x: &[C64], out: &mut [C64]);
    fn apply_d2(&self, t: f64, x: &[C64], out: &mut [C64]);
}

/// Time-independent banded D1, D2.
#[derive(Clone, Debug)]
pub struct StaticOperators {
    d1: CMat,
    d2: CMat,
    b1: usize,
    b2: usize,
}

impl StaticOperators {
    pub fn new(d1: CMat, d2: CMat) -> Result<Self> {
        let n = d2.nrows();
        if d1.nrows() != n || d1.ncols() != n || d2.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: d1.nrows() });
        }
        Ok(StaticOperators { b1: bandwidth(&d1), b2: bandwidth(&d2), d1, d2 })
    }

    pub fn d1(&self) -> &CMat {
        &self.d1
    }

    pub fn d2(&self) -> &CMat {
        &self.d2
    }
}

impl FieldOperators for StaticOperators {
    fn dim(&self) -> usize {
        self.d2.nrows()
    }

    fn apply_d1(&self, _t: f64, x: &[C64], out: &mut [C64]) {
        banded_matvec(&self.d1, self.b1, x, out);
    }

    fn apply_d2(&self, _t: f64, x: &[C64], out: &mut [C64]) {
        banded_matvec(&self.d2, self.b2, x, out);
    }
}

/// `q(t)` and `q'(t)`.
#[derive(Clone)]
pub enum QSchedule {
    Constant(C64),
    Varying(Arc<dyn Fn(f64) -> (C64, C64) + Send + Sync>),
}

impl QSchedule {
    pub fn at(&self, t: f64) -> (C64, C64) {
        match self {
            QSchedule::Constant(q) => (*q, C64::new(0.0, 0.0)),
            QSchedule::Varying(f) => f(t),
        }
    }
}

impl std::fmt::Debug for QSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QSchedule::Constant(q) => write!(f, "Constant({q})"),
            QSchedule::Varying(_) => write!(f, "Varying(..)"),
        }
    }
}

/// A Hamiltonian family `H(t)` acting on stacked `[u; v]` vectors.
pub trait HamiltonianPath: Sync {
    /// Grid dimension n (the state has length 2n).
    fn dim(&self) -> usize;
    fn q(&self, t: f64) -> C64;
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);
}

impl HamiltonianPath for BlockHamiltonian {
    fn dim(&self) -> usize {
        self.h11.nrows()
    }

    fn q(&self, _t: f64) -> C64 {
        self.q
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        let n = self.dim();
        let u = nalgebra::DVectorView::from_slice(&psi[..n], n);
        let v = nalgebra::DVectorView::from_slice(&psi[n..], n);
        let top = &self.h11 * u + &self.h12 * v;
        let bot = &self.h21 * u + &self.h22 * v;
        out[..n].copy_from_slice(top.as_slice());
        out[n..].copy_from_slice(bot.as_slice());
    }
}

/// `H(t)` built on the fly from D1(t), D2(t) and a `q` schedule, using
/// `H [u; v] = (i/2) [(a - D1)(u - v) - q D2 (u + v); (b + D1)(u - v) + q D2 (u + v)]`
/// with `a = (q' + 1)/q`, `b = (1 - q')/q`.
#[derive(Clone, Debug)]
pub struct FieldHamiltonian<O> {
    pub ops: O,
    pub q: QSchedule,
}

impl<O: FieldOperators> HamiltonianPath for FieldHamiltonian<O> {
    fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn q(&self, t: f64) -> C64 {
        self.q.at(t).0
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let n = self.ops.dim();
        let (q, qd) = self.q.at(t);
        let a = (qd + 1.0) / q;
        let b = (C64::from(1.0) - qd) / q;
        let diff: Vec<C64> = (0..n).map(|i| psi[i] - psi[n + i]).collect();
        let sum: Vec<C64> = (0..n).map(|i| psi[i] + psi[n + i]).collect();
        let mut d1 = vec![C64::new(0.0, 0.0); n];
        let mut d2 = vec![C64::new(0.0, 0.0); n];
        self.ops.apply_d1(t, &diff, &mut d1);
        self.ops.apply_d2(t, &sum, &mut d2);
        let h = I * 0.5;
        for i in 0..n {
            out[i] = h * (a * diff[i] - d1[i] - q * d2[i]);
            out[n + i] = h * (b * diff[i] + d1[i] + q * d2[i]);
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TwoComponentState>,
    /// Largest scaled local error estimate accepted before each sample.
    pub local_errors: Vec<f64>,
}

fn scale(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Integrates `i Psi' = H(t) Psi` from `t0`, reporting the state at `times`.
/// Each sample carries the schedule value `q(t)`.
pub fn evolve_twocomp<H: HamiltonianPath>(h: &H, psi0: &TwoComponentState, t0: f64, times: &[f64], tol: f64) -> Result<Trajectory> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: psi0.len() });
    }
    let q0 = h.q(t0);
    if (q0 - psi0.q).norm() > 1e-12 * q0.norm() {
        return Err(Error::InvalidParameter(format!("initial state uses q = {}, schedule gives {}", psi0.q, q0)));
    }
    let y0 = psi0.stacked();
    let mut opts = ode::Options::with_tol(tol);
    opts.atol = tol * scale(&y0).max(f64::MIN_POSITIVE);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        h.apply(t, y, dy);
        dy.iter_mut().for_each(|z| *z *= -I);
    };
    let sol = ode::integrate_refined(rhs, t0, &y0, times, &opts)?;
    let states = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| TwoComponentState::from_stacked(h.q(t), y))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times: sol.times, states, local_errors: sol.local_errors })
}

#[derive(Clone, Debug)]
pub struct SecondOrderTrajectory {
    pub times: Vec<f64>,
    pub phi: Vec<CVec>,
    pub phi_dot: Vec<CVec>,
}

/// Integrates `Phi'' + D1 Phi' + D2 Phi = 0` as a first-order system in `(Phi, Phi')`.
pub fn evolve_secondorder<O: FieldOperators>(
    ops: &O,
    phi0: &CVec,
    phi_dot0: &CVec,
    t0: f64,
    times: &[f64],
    tol: f64,
) -> Result<SecondOrderTrajectory> {
    let n = ops.dim();
    if phi0.len() != n || phi_dot0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi0.len().min(phi_dot0.len()) });
    }
    let y0: Vec<C64> = phi0.iter().chain(phi_dot0.iter()).cloned().collect();
    let mut opts = ode::Options::with_tol(tol);
    opts.atol = tol * scale(&y0).max(f64::MIN_POSITIVE);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let (phi, phi_dot) = y.split_at(n);
        let mut a = vec![C64::new(0.0, 0.0); n];
        let mut b = vec![C64::new(0.0, 0.0); n];
        ops.apply_d1(t, phi_dot, &mut a);
        ops.apply_d2(t, phi, &mut b);
        dy[..n].copy_from_slice(phi_dot);
        for i in 0..n {
            dy[n + i] = -a[i] - b[i];
        }
    };
    let sol = ode::integrate_refined(rhs, t0, &y0, times, &opts)?;
    Ok(SecondOrderTrajectory {
        times: sol.times,
        phi: sol.states.iter().map(|y| CVec::from_column_slice(&y[..n])).collect(),
        phi_dot: sol.states.iter().map(|y| CVec::from_column_slice(&y[n..])).collect(),
    })
}

/// `1 - |<a, Psi>| / (|a| |Psi|)` per sample in the componentwise product.
pub fn overlap_deficit(trajectory: &Trajectory, ansatz: &[TwoComponentState], weights: &[f64]) -> Result<Vec<f64>> {
    if ansatz.len() != trajectory.states.len() {
        return Err(Error::DimensionMismatch { expected: trajectory.states.len(), got: ansatz.len() });
    }
    let w2: Vec<f64> = weights.iter().chain(weights.iter()).cloned().collect();
    trajectory
        .states
        .iter()
        .zip(ansatz)
        .enumerate()
        .map(|(index, (psi, a))| {
            let (x, y) = (a.stacked(), psi.stacked());
            let ov = inner_product(&x, &y, &w2)?;
            let nx = inner_product(&x, &x, &w2)?.re;
            let ny = inner_product(&y, &y, &w2)?.re;
            if !(nx > 0.0 && ny > 0.0) {
                return Err(Error::ZeroNorm { index });
            }
            Ok(1.0 - ov.norm() / (nx * ny).sqrt())
        })
        .collect()
}

/// Relative residual `|i Psi' - H Psi| / |H Psi|` at sample midpoints, using
/// cubic Hermite interpolation with the exact derivatives `-i H Psi` at the samples.
pub fn midpoint_residuals<H: HamiltonianPath>(h: &H, trajectory: &Trajectory) -> Vec<f64> {
    let n2 = 2 * h.dim();
    let deriv = |t: f64, y: &[C64]| {
        let mut out = vec![C64::new(0.0, 0.0); n2];
        h.apply(t, y, &mut out);
        out.iter_mut().for_each(|z| *z *= -I);
        out
    };
    trajectory
        .times
        .windows(2)
        .zip(trajectory.states.windows(2))
        .map(|(t, s)| {
            let (y0, y1) = (s[0].stacked(), s[1].stacked());
            let dt = t[1] - t[0];
            let (f0, f1) = (deriv(t[0], &y0), deriv(t[1], &y1));
            let mid: Vec<C64> = (0..n2).map(|i| (y0[i] + y1[i]) * 0.5 + (f0[i] - f1[i]) * (dt / 8.0)).collect();
            let dmid: Vec<C64> = (0..n2).map(|i| (y1[i] - y0[i]) * (1.5 / dt) - (f0[i] + f1[i]) * 0.25).collect();
            let tm = 0.5 * (t[0] + t[1]);
            let hpsi: Vec<C64> = deriv(tm, &mid).iter().map(|z| z * I).collect();
            let num: f64 = dmid.iter().zip(&hpsi).map(|(d, hp)| (I * d - hp).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = hpsi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            num / den.max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// `q <Phi|Phi'> + conj(q) <Phi'|Phi> + q <Phi|D1 Phi>` with `q = i`, which is
/// conserved for static, self-adjoint D2 and anti-self-adjoint D1. For
/// `D1 = 0` it is the Klein-Gordon product of the state with itself.
pub fn conserved_charge<O: FieldOperators>(ops: &O, t: f64, phi: &CVec, phi_dot: &CVec, weights: &[f64]) -> Result<C64> {
    let mut d1phi = vec![C64::new(0.0, 0.0); phi.len()];
    ops.apply_d1(t, phi.as_slice(), &mut d1phi);
    let kg = inner_product(phi.as_slice(), phi_dot.as_slice(), weights)? - inner_product(phi_dot.as_slice(), phi.as_slice(), weights)?;
    Ok(I * (kg + inner_product(phi.as_slice(), &d1phi, weights)?))
}
