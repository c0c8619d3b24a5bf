use crate::discretization::{assemble_radial, tile_weights, RadialGrid, Sector};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::spacetime::{build_coefficients, landau_model, SpacetimeModel};
use crate::spectral::QuadraticPencil;
use crate::C64;
use std::f64::consts::PI;
use std::sync::Arc;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Uniform magnetic field of magnitude `field` acting on a particle of charge
/// `charge` and mass `mass`; the axial direction is boxed with length `box_length`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauScenario {
    pub charge: f64,
    pub field: f64,
    pub mass: f64,
    pub box_length: f64,
}

impl LandauScenario {
    pub fn new(charge: f64, field: f64, mass: f64, box_length: f64) -> Result<Self> {
        if !(field > 0.0) || !field.is_finite() {
            return Err(Error::InvalidParameter(format!("field magnitude must be positive, got {field}")));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidParameter(format!("box length must be positive, got {box_length}")));
        }
        Ok(LandauScenario { charge, field, mass, box_length })
    }

    /// `lambda = e B / 2`.
    pub fn lambda(&self) -> f64 {
        self.charge * self.field / 2.0
    }

    /// Axial momentum `2 pi n_z / L` of the boxed continuum.
    pub fn boxed_momentum(&self, nz: i64) -> f64 {
        2.0 * PI * nz as f64 / self.box_length
    }

    /// Oscillator ladder `k^2 = 2 |lambda| (2 n_rho + |m| + 1)`.
    pub fn ladder_k2(&self, n_rho: usize, m: i64) -> f64 {
        2.0 * self.lambda().abs() * (2.0 * n_rho as f64 + m.unsigned_abs() as f64 + 1.0)
    }

    /// `E^2 = k^2 + p^2 + mu^2 + e m B`.
    pub fn energy_squared(&self, n_rho: usize, m: i64, p: f64) -> f64 {
        self.ladder_k2(n_rho, m) + p * p + self.mass * self.mass + self.charge * m as f64 * self.field
    }

    pub fn model(&self) -> SpacetimeModel {
        landau_model(self.charge, self.field, self.mass)
    }
}

/// Field-aligned pencil of sector `(m, p)`: `A0 = D2`, `A1 = 0`, `A2 = -1`.
pub fn landau_pencil(s: &LandauScenario, grid: Arc<RadialGrid>, m: i64, p: f64) -> Result<QuadraticPencil> {
    let coeffs = build_coefficients(&s.model(), 0.0, &[[grid.nodes()[0], 0.0, 0.0]])?;
    let (d1, d2) = assemble_radial(&coeffs, grid.clone(), m, p)?;
    QuadraticPencil::from_field(&d1.matrix, &d2.matrix, I, C64::new(0.0, 0.0), grid.weights().to_vec(), d2.sector)
}

/// `dD2/dt = diag(2 lambda lambda' rho^2 + e m B')` for a field magnitude changing at rate `field_rate`.
pub fn landau_d2_dot(s: &LandauScenario, grid: &RadialGrid, m: i64, field_rate: f64) -> CMat {
    let lambda_rate = s.charge * field_rate / 2.0;
    let diag: Vec<C64> = grid
        .nodes()
        .iter()
        .map(|r| C64::from(2.0 * s.lambda() * lambda_rate * r * r + s.charge * m as f64 * field_rate))
        .collect();
    CMat::from_diagonal(&crate::linalg::CVec::from_vec(diag))
}

/// `exp(-i phi J3) exp(-i theta J2) exp(i phi J3)` in the spin-`(k-1)/2` representation.
pub fn spin_rotation(k: usize, theta: f64, phi: f64) -> CMat {
    let s = (k as f64 - 1.0) / 2.0;
    let mut j2 = CMat::zeros(k, k);
    let mut j3 = CMat::zeros(k, k);
    for a in 0..k {
        let m = s - a as f64;
        j3[(a, a)] = C64::from(m);
        if a > 0 {
            // <m+1| J+ |m>
            let c = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            j2[(a - 1, a)] = C64::new(0.0, -c / 2.0);
            j2[(a, a - 1)] = C64::new(0.0, c / 2.0);
        }
    }
    let phase = |sign: f64| CMat::from_diagonal(&crate::linalg::CVec::from_iterator(k, (0..k).map(|a| (I * (sign * phi * j3[(a, a)].re)).exp())));
    let tilt = crate::linalg::expm_i_hermitian(&j2, -theta);
    phase(-1.0) * tilt * phase(1.0)
}

/// Landau sectors mixed by a field rotation. Each direction `(theta, phi)`
/// conjugates the aligned block-diagonal operator with `U(theta, phi) (x) 1`.
#[derive(Clone, Debug)]
pub struct LandauRotation {
    pub scenario: LandauScenario,
    pub grid: Arc<RadialGrid>,
    pub sectors: Vec<Sector>,
    aligned: CMat,
}

impl LandauRotation {
    pub fn new(scenario: LandauScenario, grid: Arc<RadialGrid>, sectors: Vec<Sector>) -> Result<Self> {
        if sectors.is_empty() {
            return Err(Error::InvalidParameter("rotation needs at least one sector".into()));
        }
        let n = grid.len();
        let k = sectors.len();
        let mut aligned = CMat::zeros(k * n, k * n);
        for (b, sec) in sectors.iter().enumerate() {
            let pencil = landau_pencil(&scenario, grid.clone(), sec.angular, sec.p)?;
            aligned.view_mut((b * n, b * n), (n, n)).copy_from(&pencil.a0);
        }
        Ok(LandauRotation { scenario, grid, sectors, aligned })
    }

    pub fn dim(&self) -> usize {
        self.aligned.nrows()
    }

    pub fn weights(&self) -> Vec<f64> {
        tile_weights(self.grid.weights(), self.sectors.len())
    }

    /// `U(theta, phi) (x) 1` on the stacked sectors.
    pub fn transport_frame(&self, theta: f64, phi: f64) -> CMat {
        let n = self.grid.len();
        let u = spin_rotation(self.sectors.len(), theta, phi);
        let mut out = CMat::zeros(self.dim(), self.dim());
        for a in 0..self.sectors.len() {
            for b in 0..self.sectors.len() {
                if u[(a, b)].norm() != 0.0 {
                    for i in 0..n {
                        out[(a * n + i, b * n + i)] = u[(a, b)];
                    }
                }
            }
        }
        out
    }

    pub fn pencil_at(&self, theta: f64, phi: f64) -> Result<QuadraticPencil> {
        let u = self.transport_frame(theta, phi);
        let a0 = &u * &self.aligned * u.adjoint();
        let d = self.dim();
        QuadraticPencil::new(a0, CMat::zeros(d, d), -CMat::identity(d, d), self.weights(), None)
    }
}

/// Rotated pencils along `(theta_k, phi_k)`. The frame is singular on the
/// negative polar axis, so samples with `theta` within `1e-6` of `pi` are rejected.
pub fn landau_rotation_path(rot: &LandauRotation, theta: &[f64], phi: &[f64]) -> Result<Vec<QuadraticPencil>> {
    if theta.len() != phi.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: phi.len() });
    }
    for (index, &t) in theta.iter().enumerate() {
        if (PI - t).abs() < 1e-6 || t > PI {
            return Err(Error::AxisCrossing { index });
        }
    }
    theta.iter().zip(phi).map(|(&t, &p)| rot.pencil_at(t, p)).collect()
}
