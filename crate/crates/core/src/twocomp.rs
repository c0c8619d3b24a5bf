//! Two-component form of the second-order field equation.
//!
//! With a complex parameter `q` the state `(Phi, dPhi/dt)` is packed into
//! `u = (Phi + q Phi')/sqrt 2`, `v = (Phi - q Phi')/sqrt 2`, which evolves under
//! a first-order Schroedinger-like equation `i Psi' = H Psi`.

use crate::discretization::inner_product;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::C64;
use nalgebra::Matrix2;
use std::f64::consts::FRAC_1_SQRT_2;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn check_q(q: C64) -> Result<()> {
    if q.norm() == 0.0 || !q.re.is_finite() || !q.im.is_finite() {
        return Err(Error::ZeroParameter);
    }
    Ok(())
}

/// Rejects `q` with a real part above `1e-12 |q|`.
pub fn require_imaginary(q: C64) -> Result<()> {
    check_q(q)?;
    if q.re.abs() > 1e-12 * q.norm() {
        return Err(Error::NotImaginary { re: q.re, im: q.im });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoComponentState {
    pub q: C64,
    pub u: CVec,
    pub v: CVec,
}

impl TwoComponentState {
    pub fn compose(phi: &CVec, phi_dot: &CVec, q: C64) -> Result<Self> {
        check_q(q)?;
        if phi.len() != phi_dot.len() {
            return Err(Error::DimensionMismatch { expected: phi.len(), got: phi_dot.len() });
        }
        let qd = phi_dot * q;
        Ok(TwoComponentState {
            q,
            u: (phi + &qd) * C64::from(FRAC_1_SQRT_2),
            v: (phi - &qd) * C64::from(FRAC_1_SQRT_2),
        })
    }

    /// Returns `(Phi, dPhi/dt)`.
    pub fn decompose(&self) -> (CVec, CVec) {
        let phi = (&self.u + &self.v) * C64::from(FRAC_1_SQRT_2);
        let phi_dot = (&self.u - &self.v) * (C64::from(FRAC_1_SQRT_2) / self.q);
        (phi, phi_dot)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `[u; v]` as a single vector of length `2n`.
    pub fn stacked(&self) -> Vec<C64> {
        self.u.iter().chain(self.v.iter()).cloned().collect()
    }

    pub fn from_stacked(q: C64, data: &[C64]) -> Result<Self> {
        check_q(q)?;
        if !data.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: data.len() + 1, got: data.len() });
        }
        let n = data.len() / 2;
        Ok(TwoComponentState { q, u: CVec::from_column_slice(&data[..n]), v: CVec::from_column_slice(&data[n..]) })
    }
}

/// `G(gamma) = [[(1+gamma)/2, (1-gamma)/2], [(1-gamma)/2, (1+gamma)/2]]`, `gamma = q_new / q_old`.
pub fn gauge_map(q_new: C64, q_old: C64) -> Result<Matrix2<C64>> {
    check_q(q_new)?;
    check_q(q_old)?;
    let g = q_new / q_old;
    let a = (C64::from(1.0) + g) * 0.5;
    let b = (C64::from(1.0) - g) * 0.5;
    Ok(Matrix2::new(a, b, b, a))
}

/// Re-expresses a state in the decomposition with parameter `q_new`.
pub fn apply_gauge(state: &TwoComponentState, q_new: C64) -> Result<TwoComponentState> {
    let g = gauge_map(q_new, state.q)?;
    Ok(TwoComponentState {
        q: q_new,
        u: &state.u * g[(0, 0)] + &state.v * g[(0, 1)],
        v: &state.u * g[(1, 0)] + &state.v * g[(1, 1)],
    })
}

/// Hermitian 2x2 metric on the component index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HMatrix {
    pub h11: f64,
    pub h12: C64,
    pub h22: f64,
}

impl HMatrix {
    pub fn identity() -> Self {
        HMatrix { h11: 1.0, h12: C64::new(0.0, 0.0), h22: 1.0 }
    }

    /// `diag(1, -1)`, which realizes the Klein-Gordon product.
    pub fn kg() -> Self {
        HMatrix { h11: 1.0, h12: C64::new(0.0, 0.0), h22: -1.0 }
    }

    pub fn from_matrix(m: &Matrix2<C64>) -> Result<Self> {
        let herm = m[(0, 0)].im.abs() < 1e-14
            && m[(1, 1)].im.abs() < 1e-14
            && (m[(0, 1)] - m[(1, 0)].conj()).norm() < 1e-14 * (1.0 + m[(0, 1)].norm());
        if !herm {
            return Err(Error::NotHermitian);
        }
        Ok(HMatrix { h11: m[(0, 0)].re, h12: m[(0, 1)], h22: m[(1, 1)].re })
    }
}

/// `sum_ab h_ab <Psi1_a | Psi2_b>` under the grid weights.
pub fn inner_h(a: &TwoComponentState, b: &TwoComponentState, h: &HMatrix, weights: &[f64]) -> Result<C64> {
    let uu = inner_product(a.u.as_slice(), b.u.as_slice(), weights)?;
    let uv = inner_product(a.u.as_slice(), b.v.as_slice(), weights)?;
    let vu = inner_product(a.v.as_slice(), b.u.as_slice(), weights)?;
    let vv = inner_product(a.v.as_slice(), b.v.as_slice(), weights)?;
    Ok(uu * h.h11 + uv * h.h12 + vu * h.h12.conj() + vv * h.h22)
}

/// Klein-Gordon product `<Phi1|Phi2'> - <Phi1'|Phi2>` from the reconstructed
/// fields. Requires a common, purely imaginary `q`, for which
/// `inner_h(a, b, kg) = q inner_kg(a, b)`.
pub fn inner_kg(a: &TwoComponentState, b: &TwoComponentState, weights: &[f64]) -> Result<C64> {
    require_imaginary(a.q)?;
    require_imaginary(b.q)?;
    if (a.q - b.q).norm() > 1e-14 * a.q.norm() {
        return Err(Error::InvalidParameter("states use different q".into()));
    }
    let (p1, d1) = a.decompose();
    let (p2, d2) = b.decompose();
    Ok(inner_product(p1.as_slice(), d2.as_slice(), weights)? - inner_product(d1.as_slice(), p2.as_slice(), weights)?)
}

/// Two-component vector of a stationary mode `Phi(t) = exp(-i E t) Phi`.
pub fn mode_vector(energy: C64, phi: &CVec, q: C64) -> Result<TwoComponentState> {
    check_q(q)?;
    let s = C64::from(FRAC_1_SQRT_2);
    Ok(TwoComponentState {
        q,
        u: phi * ((C64::from(1.0) - I * q * energy) * s),
        v: phi * ((C64::from(1.0) + I * q * energy) * s),
    })
}

/// The 2n x 2n Hamiltonian as four n x n blocks.
#[derive(Clone, Debug)]
pub struct BlockHamiltonian {
    pub q: C64,
    pub q_dot: C64,
    pub h11: CMat,
    pub h12: CMat,
    pub h21: CMat,
    pub h22: CMat,
}

/// Builds `H(q)` from D1, D2 and the schedule values `q(t)`, `q'(t)`.
pub fn assemble_hamiltonian(d1: &CMat, d2: &CMat, q: C64, q_dot: C64) -> Result<BlockHamiltonian> {
    check_q(q)?;
    let n = d1.nrows();
    if d1.ncols() != n || d2.nrows() != n || d2.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d2.nrows() });
    }
    let id = CMat::identity(n, n);
    let a = q_dot / q + C64::from(1.0) / q;
    let b = -q_dot / q + C64::from(1.0) / q;
    let qd2 = d2 * q;
    let half_i = I * 0.5;
    Ok(BlockHamiltonian {
        q,
        q_dot,
        h11: (&id * a - d1 - &qd2) * half_i,
        h12: (&id * (-a) + d1 - &qd2) * half_i,
        h21: (&id * b + d1 + &qd2) * half_i,
        h22: (&id * (-b) - d1 + &qd2) * half_i,
    })
}

impl BlockHamiltonian {
    pub fn dim(&self) -> usize {
        self.h11.nrows()
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.h11);
        m.view_mut((0, n), (n, n)).copy_from(&self.h12);
        m.view_mut((n, 0), (n, n)).copy_from(&self.h21);
        m.view_mut((n, n), (n, n)).copy_from(&self.h22);
        m
    }

    pub fn apply(&self, state: &TwoComponentState) -> TwoComponentState {
        TwoComponentState {
            q: state.q,
            u: &self.h11 * &state.u + &self.h12 * &state.v,
            v: &self.h21 * &state.u + &self.h22 * &state.v,
        }
    }

    /// Recovers `(D1, D2)` from the blocks.
    pub fn reconstruct(&self) -> (CMat, CMat) {
        let n = self.dim();
        let a = self.q_dot / self.q + C64::from(1.0) / self.q;
        let d2 = (&self.h11 + &self.h12) * (I / self.q);
        let d1 = CMat::identity(n, n) * a + (&self.h11 - &self.h12) * I;
        (d1, d2)
    }
}

/// Which of the sufficient conditions for a self-adjoint `H` hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelfAdjointness {
    pub imaginary_q: bool,
    pub d2_self_adjoint: bool,
    pub d1_anti_self_adjoint: bool,
}

impl SelfAdjointness {
    pub fn all(&self) -> bool {
        self.imaginary_q && self.d2_self_adjoint && self.d1_anti_self_adjoint
    }
}

pub fn self_adjointness(q: C64, d1: &CMat, d2: &CMat, weights: &[f64]) -> SelfAdjointness {
    use crate::discretization::is_self_adjoint;
    SelfAdjointness {
        imaginary_q: require_imaginary(q).is_ok(),
        d2_self_adjoint: is_self_adjoint(d2, weights, 1e-10),
        d1_anti_self_adjoint: is_self_adjoint(&(d1 * I), weights, 1e-10),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec(vals: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(vals.len(), vals.iter().map(|&(a, b)| C64::new(a, b)))
    }

    #[test]
    fn compose_matches_definition() {
        let phi = vec(&[(1.0, 0.0)]);
        let dphi = vec(&[(0.0, 0.0)]);
        let s = TwoComponentState::compose(&phi, &dphi, I).unwrap();
        assert!((s.u[0] - C64::from(FRAC_1_SQRT_2)).norm() < 1e-16);
        assert!((s.v[0] - C64::from(FRAC_1_SQRT_2)).norm() < 1e-16);
        let (p, d) = s.decompose();
        assert!((p - phi).norm() < 1e-15);
        assert!((d - dphi).norm() < 1e-15);
    }

    #[test]
    fn zero_q_rejected() {
        let phi = vec(&[(1.0, 0.0)]);
        assert_eq!(TwoComponentState::compose(&phi, &phi, C64::new(0.0, 0.0)), Err(Error::ZeroParameter));
    }

    #[test]
    fn unit_gauge_map_is_identity() {
        let g = gauge_map(C64::new(0.3, 2.0), C64::new(0.3, 2.0)).unwrap();
        assert_eq!(g, Matrix2::identity());
    }

    #[test]
    fn plane_wave_is_an_eigenvector() {
        // q = i, D1 = 0, D2 = kappa with kappa = E^2: H Psi = E Psi
        let e = 1.7;
        let d1 = CMat::zeros(1, 1);
        let d2 = CMat::from_element(1, 1, C64::from(e * e));
        let h = assemble_hamiltonian(&d1, &d2, I, C64::new(0.0, 0.0)).unwrap();
        let psi = mode_vector(C64::from(e), &vec(&[(1.0, 0.0)]), I).unwrap();
        let hpsi = h.apply(&psi);
        assert!((&hpsi.u - &psi.u * C64::from(e)).norm() < 1e-14);
        assert!((&hpsi.v - &psi.v * C64::from(e)).norm() < 1e-14);
    }

    #[test]
    fn blocks_round_trip() {
        let d1 = CMat::from_fn(3, 3, |i, j| C64::new(i as f64 - j as f64, 0.5 * (i * j) as f64));
        let d2 = CMat::from_fn(3, 3, |i, j| C64::new((i + j) as f64, 1.0 - i as f64));
        let h = assemble_hamiltonian(&d1, &d2, C64::new(0.2, 1.1), C64::new(-0.4, 0.3)).unwrap();
        let (r1, r2) = h.reconstruct();
        assert!((r1 - d1).norm() < 1e-13 && (r2 - d2).norm() < 1e-13);
    }

    #[test]
    fn hermitian_check_on_h() {
        let bad = Matrix2::new(C64::from(1.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::from(1.0));
        assert_eq!(HMatrix::from_matrix(&bad), Err(Error::NotHermitian));
    }
}
