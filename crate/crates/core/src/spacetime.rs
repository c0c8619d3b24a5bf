//! Background geometry and gauge field, and the spatial operators D1, D2 of the
//! first-order-in-time Klein-Gordon equation
//! `Phi'' + D1 Phi' + D2 Phi = 0`.
//!
//! Coordinates are `(t, x1, x2, x3)` with index 0 for time. Scenario builders
//! use cylindrical `(rho, phi, z)` for the spatial triple.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::{Matrix3, Matrix4};
use std::sync::Arc;

pub type Point = [f64; 3];
pub type Metric4 = [[f64; 4]; 4];
/// Christoffel symbols `gamma[l][m][n]` = Gamma^l_{mn}.
pub type Christoffel = [[[f64; 4]; 4]; 4];

type Field<T> = Arc<dyn Fn(f64, &Point) -> T + Send + Sync>;

/// A static or slowly varying background: metric, connection, gauge potential,
/// scalar potential, charge and mass.
#[derive(Clone)]
pub struct SpacetimeModel {
    /// Covariant metric g_{mu nu}; the inverse is derived from it.
    pub metric: Field<Metric4>,
    pub christoffel: Field<Christoffel>,
    /// Covariant potential A_mu.
    pub potential: Field<[f64; 4]>,
    /// `grad[m][n]` = d_m A_n.
    pub potential_gradient: Field<[[f64; 4]; 4]>,
    pub scalar_potential: Field<f64>,
    pub charge: f64,
    pub mass: f64,
    /// When set, `det g4 = -det g3` (unit lapse) is asserted by [`lapse_identity_check`].
    pub unit_lapse: bool,
}

impl std::fmt::Debug for SpacetimeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpacetimeModel")
            .field("charge", &self.charge)
            .field("mass", &self.mass)
            .field("unit_lapse", &self.unit_lapse)
            .finish_non_exhaustive()
    }
}

impl SpacetimeModel {
    pub fn inverse_metric(&self, t: f64, x: &Point) -> Result<Metric4> {
        let g = Matrix4::from_fn(|i, j| (self.metric)(t, x)[i][j]);
        let inv = g.try_inverse().ok_or(Error::SingularLapse { t, x: *x, g00: 0.0 })?;
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
    }

    /// Symmetry of metric and connection, and g^00 < 0, at the given points.
    pub fn validate(&self, t: f64, points: &[Point]) -> Result<()> {
        for x in points {
            let g = (self.metric)(t, x);
            let gam = (self.christoffel)(t, x);
            for m in 0..4 {
                for n in 0..4 {
                    if (g[m][n] - g[n][m]).abs() > 1e-12 * (1.0 + g[m][n].abs()) {
                        return Err(Error::InvalidParameter(format!("metric not symmetric at {x:?}")));
                    }
                    for l in 0..4 {
                        if (gam[l][m][n] - gam[l][n][m]).abs() > 1e-12 * (1.0 + gam[l][m][n].abs()) {
                            return Err(Error::InvalidParameter(format!("connection not symmetric at {x:?}")));
                        }
                    }
                }
            }
            let gi = self.inverse_metric(t, x)?;
            if gi[0][0] >= 0.0 {
                return Err(Error::SingularLapse { t, x: *x, g00: gi[0][0] });
            }
        }
        Ok(())
    }
}

/// D1 = a1 . grad + b1 and D2 = A2 : grad grad + a2 . grad + b2, at fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSample {
    pub d1_drift: [C64; 3],
    pub d1_scalar: C64,
    pub d2_second: [[C64; 3]; 3],
    pub d2_drift: [C64; 3],
    pub d2_scalar: C64,
}

/// Operator coefficients frozen at a time `t`, evaluable at any spatial point.
#[derive(Clone, Debug)]
pub struct OperatorCoefficients {
    model: SpacetimeModel,
    pub t: f64,
}

impl OperatorCoefficients {
    pub fn model(&self) -> &SpacetimeModel {
        &self.model
    }

    pub fn at(&self, x: &Point) -> Result<CoefficientSample> {
        coefficients_at(&self.model, self.t, x)
    }
}

fn coefficients_at(m: &SpacetimeModel, t: f64, x: &Point) -> Result<CoefficientSample> {
    let gi = m.inverse_metric(t, x)?;
    let g00 = gi[0][0];
    if !(g00.abs() > 1e-12) || !g00.is_finite() {
        return Err(Error::SingularLapse { t, x: *x, g00 });
    }
    let gam = (m.christoffel)(t, x);
    let a = (m.potential)(t, x);
    let da = (m.potential_gradient)(t, x);
    let e = m.charge;
    let i = C64::new(0.0, 1.0);
    let pre = 2.0 / g00;

    // contracted connection g^{mn} Gamma^l_{mn}
    let mut contracted = [0.0; 4];
    for (l, c) in contracted.iter_mut().enumerate() {
        for mu in 0..4 {
            for nu in 0..4 {
                *c += gi[mu][nu] * gam[l][mu][nu];
            }
        }
    }
    // g^{mu l} A_mu
    let raised: [f64; 4] = std::array::from_fn(|l| (0..4).map(|mu| gi[mu][l] * a[mu]).sum());
    // g^{mn} (i e nabla_m A_n - e^2 A_m A_n)
    let mut gauge_scalar = C64::new(0.0, 0.0);
    for mu in 0..4 {
        for nu in 0..4 {
            let cov = da[mu][nu] - (0..4).map(|l| gam[l][mu][nu] * a[l]).sum::<f64>();
            gauge_scalar += gi[mu][nu] * (i * e * cov - e * e * a[mu] * a[nu]);
        }
    }
    let v = (m.scalar_potential)(t, x);

    let d1_drift = std::array::from_fn(|k| C64::new(pre * gi[0][k + 1], 0.0));
    let d1_scalar = (i * e * raised[0] - 0.5 * contracted[0]) * pre;
    let d2_second = std::array::from_fn(|p| std::array::from_fn(|q| C64::new(0.5 * pre * gi[p + 1][q + 1], 0.0)));
    let d2_drift = std::array::from_fn(|k| (i * e * raised[k + 1] - 0.5 * contracted[k + 1]) * pre);
    let d2_scalar = (gauge_scalar * 0.5 + 0.5 * (v - m.mass * m.mass)) * pre;
    Ok(CoefficientSample { d1_drift, d1_scalar, d2_second, d2_drift, d2_scalar })
}

/// Freezes the model at time `t` after checking that g^00 is non-zero on `domain`.
pub fn build_coefficients(model: &SpacetimeModel, t: f64, domain: &[Point]) -> Result<OperatorCoefficients> {
    for x in domain {
        coefficients_at(model, t, x)?;
    }
    Ok(OperatorCoefficients { model: model.clone(), t })
}

/// Integration density on a constant-time slice, `sqrt(-det g4) = N sqrt(det g3)`.
/// With unit lapse this is the induced volume element `sqrt(det g3)`; for the
/// spinning string it is the cone measure `alpha rho`.
pub fn induced_measure(model: &SpacetimeModel, t: f64, x: &Point) -> Result<f64> {
    let g = (model.metric)(t, x);
    let g3 = Matrix3::from_fn(|i, j| g[i + 1][j + 1]);
    if g3.cholesky().is_none() {
        return Err(Error::NonPositiveMetric { x: *x });
    }
    let det4 = Matrix4::from_fn(|i, j| g[i][j]).determinant();
    if !(det4 < 0.0) {
        return Err(Error::NonPositiveMetric { x: *x });
    }
    Ok((-det4).sqrt())
}

/// Largest |det g4 + det g3| over the sample points.
pub fn lapse_identity_check(model: &SpacetimeModel, t: f64, points: &[Point]) -> f64 {
    points
        .iter()
        .map(|x| {
            let g = (model.metric)(t, x);
            let g4 = Matrix4::from_fn(|i, j| g[i][j]);
            let g3 = Matrix3::from_fn(|i, j| g[i + 1][j + 1]);
            (g4.determinant() + g3.determinant()).abs()
        })
        .fold(0.0, f64::max)
}

fn zero_christoffel() -> Christoffel {
    [[[0.0; 4]; 4]; 4]
}

/// Flat spacetime in Cartesian coordinates.
pub fn minkowski_cartesian(mass: f64) -> SpacetimeModel {
    SpacetimeModel {
        metric: Arc::new(|_, _| {
            let mut g = [[0.0; 4]; 4];
            g[0][0] = -1.0;
            g[1][1] = 1.0;
            g[2][2] = 1.0;
            g[3][3] = 1.0;
            g
        }),
        christoffel: Arc::new(|_, _| zero_christoffel()),
        potential: Arc::new(|_, _| [0.0; 4]),
        potential_gradient: Arc::new(|_, _| [[0.0; 4]; 4]),
        scalar_potential: Arc::new(|_, _| 0.0),
        charge: 0.0,
        mass,
        unit_lapse: true,
    }
}

/// Flat spacetime in cylindrical coordinates with a uniform magnetic field B
/// along z in the symmetric gauge, A_phi = B rho^2 / 2.
pub fn landau_model(charge: f64, field: f64, mass: f64) -> SpacetimeModel {
    SpacetimeModel {
        metric: Arc::new(|_, x| {
            let mut g = [[0.0; 4]; 4];
            g[0][0] = -1.0;
            g[1][1] = 1.0;
            g[2][2] = x[0] * x[0];
            g[3][3] = 1.0;
            g
        }),
        christoffel: Arc::new(|_, x| {
            let rho = x[0];
            let mut c = zero_christoffel();
            c[1][2][2] = -rho;
            c[2][1][2] = 1.0 / rho;
            c[2][2][1] = 1.0 / rho;
            c
        }),
        potential: Arc::new(move |_, x| [0.0, 0.0, 0.5 * field * x[0] * x[0], 0.0]),
        potential_gradient: Arc::new(move |_, x| {
            let mut d = [[0.0; 4]; 4];
            d[1][2] = field * x[0];
            d
        }),
        scalar_potential: Arc::new(|_, _| 0.0),
        charge,
        mass,
        unit_lapse: true,
    }
}

/// Spinning cosmic string with angular momentum parameter `j` and deficit
/// parameter `d` (alpha = 1 - 4d):
/// ds^2 = -(dt + 4j dphi)^2 + drho^2 + alpha^2 rho^2 dphi^2 + dz^2.
pub fn string_model(j: f64, d: f64, mass: f64) -> SpacetimeModel {
    let alpha = 1.0 - 4.0 * d;
    SpacetimeModel {
        metric: Arc::new(move |_, x| {
            let rho = x[0];
            let mut g = [[0.0; 4]; 4];
            g[0][0] = -1.0;
            g[0][2] = -4.0 * j;
            g[2][0] = -4.0 * j;
            g[1][1] = 1.0;
            g[2][2] = alpha * alpha * rho * rho - 16.0 * j * j;
            g[3][3] = 1.0;
            g
        }),
        christoffel: Arc::new(move |_, x| {
            let rho = x[0];
            let s = alpha * alpha * rho * rho;
            let mut c = zero_christoffel();
            c[0][1][2] = -4.0 * j / rho;
            c[0][2][1] = -4.0 * j / rho;
            c[2][1][2] = 1.0 / rho;
            c[2][2][1] = 1.0 / rho;
            c[1][2][2] = -s / rho;
            c
        }),
        potential: Arc::new(|_, _| [0.0; 4]),
        potential_gradient: Arc::new(|_, _| [[0.0; 4]; 4]),
        scalar_potential: Arc::new(|_, _| 0.0),
        charge: 0.0,
        mass,
        unit_lapse: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn minkowski_reduces_to_laplacian() {
        let m = minkowski_cartesian(1.3);
        let c = build_coefficients(&m, 0.0, &[[0.1, 0.2, 0.3]]).unwrap();
        let s = c.at(&[0.4, -1.0, 2.0]).unwrap();
        for k in 0..3 {
            assert_eq!(s.d1_drift[k], C64::new(0.0, 0.0));
            assert_eq!(s.d2_drift[k], C64::new(0.0, 0.0));
            for l in 0..3 {
                let expected = if k == l { -1.0 } else { 0.0 };
                assert_eq!(s.d2_second[k][l], C64::new(expected, 0.0));
            }
        }
        assert_eq!(s.d1_scalar, C64::new(0.0, 0.0));
        assert!(close(s.d2_scalar, C64::new(1.69, 0.0), 1e-14));
        assert_eq!(induced_measure(&m, 0.0, &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn string_coefficients_match_closed_form() {
        let (j, d, mu) = (0.05, 0.0375, 1.0);
        let alpha: f64 = 1.0 - 4.0 * d;
        let m = string_model(j, d, mu);
        for &rho in &[0.5, 1.0, 3.0] {
            let s = build_coefficients(&m, 0.0, &[[rho, 0.0, 0.0]]).unwrap().at(&[rho, 0.3, 0.0]).unwrap();
            let ar2 = (alpha * rho).powi(2);
            let w = 1.0 - 16.0 * j * j / ar2;
            // D1 = 8j / ((alpha rho)^2 - 16 j^2) d_phi
            assert!(close(s.d1_drift[1], C64::new(8.0 * j / (ar2 - 16.0 * j * j), 0.0), 1e-13));
            assert!(close(s.d1_scalar, C64::new(0.0, 0.0), 1e-13));
            // D2 = -(1/w)[d_rho^2 + rho^-1 d_rho + (alpha rho)^-2 d_phi^2 + d_z^2 - mu^2]
            assert!(close(s.d2_second[0][0], C64::new(-1.0 / w, 0.0), 1e-13));
            assert!(close(s.d2_second[1][1], C64::new(-1.0 / (w * ar2), 0.0), 1e-13));
            assert!(close(s.d2_second[2][2], C64::new(-1.0 / w, 0.0), 1e-13));
            assert!(close(s.d2_drift[0], C64::new(-1.0 / (w * rho), 0.0), 1e-13));
            assert!(close(s.d2_scalar, C64::new(mu * mu / w, 0.0), 1e-13));
            assert!((induced_measure(&m, 0.0, &[rho, 0.0, 0.0]).unwrap() - alpha * rho).abs() < 1e-13);
        }
        // det g4 = det g3 / g^00 in general; the lapse is not unity here
        for x in [[0.7, 0.0, 0.0], [2.0, 1.0, 0.0]] {
            let g = (m.metric)(0.0, &x);
            let g4 = Matrix4::from_fn(|i, k| g[i][k]).determinant();
            let g3 = Matrix3::from_fn(|i, k| g[i + 1][k + 1]).determinant();
            let g00 = m.inverse_metric(0.0, &x).unwrap()[0][0];
            assert!((g4 - g3 / g00).abs() < 1e-12);
        }
        assert!(lapse_identity_check(&minkowski_cartesian(1.0), 0.0, &[[0.3, 0.1, 2.0]]) < 1e-15);
        assert!(lapse_identity_check(&landau_model(1.0, 2.0, 0.0), 0.0, &[[0.3, 0.1, 2.0]]) < 1e-15);
    }

    #[test]
    fn landau_angular_term() {
        let (e, b, mu) = (1.0, 2.0, 0.5);
        let m = landau_model(e, b, mu);
        let rho = 1.7;
        let s = build_coefficients(&m, 0.0, &[[rho, 0.0, 0.0]]).unwrap().at(&[rho, 0.0, 0.0]).unwrap();
        // -i e B d_phi and e^2 B^2 rho^2 / 4 + mu^2
        assert!(close(s.d2_drift[1], C64::new(0.0, -e * b), 1e-13));
        assert!(close(s.d2_scalar, C64::new(e * e * b * b * rho * rho / 4.0 + mu * mu, 0.0), 1e-13));
        assert!(close(s.d2_drift[0], C64::new(-1.0 / rho, 0.0), 1e-13));
    }

    #[test]
    fn vanishing_lapse_is_reported() {
        // inside rho < 4j/alpha the string's g^00 changes sign through zero
        let m = string_model(0.1, 0.0, 1.0);
        let err = build_coefficients(&m, 0.0, &[[0.4, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::SingularLapse { .. }));
    }
}
