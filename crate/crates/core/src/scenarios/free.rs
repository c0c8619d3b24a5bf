use crate::bessel::bessel_j_zero;
use crate::discretization::{assemble_radial, RadialGrid};
use crate::error::Result;
use crate::spacetime::{build_coefficients, landau_model};
use crate::spectral::QuadraticPencil;
use crate::C64;
use std::sync::Arc;

/// Pencil of a free massive field in a cylinder, sector `exp(i l phi + i p z)`.
pub fn free_field(mu: f64, grid: Arc<RadialGrid>, angular: i64, p: f64) -> Result<QuadraticPencil> {
    let model = landau_model(0.0, 0.0, mu);
    let coeffs = build_coefficients(&model, 0.0, &[[grid.nodes()[0], 0.0, 0.0]])?;
    let (d1, d2) = assemble_radial(&coeffs, grid.clone(), angular, p)?;
    QuadraticPencil::from_field(
        &d1.matrix,
        &d2.matrix,
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
        grid.weights().to_vec(),
        d2.sector,
    )
}

/// `E = sqrt(mu^2 + p^2 + (j_{|l|,k} / R)^2)` for a Dirichlet wall at `R`.
pub fn free_energy(mu: f64, p: f64, angular: i64, rho_max: f64, k: usize) -> Result<f64> {
    let z = bessel_j_zero(angular.unsigned_abs() as f64, k)?;
    Ok((mu * mu + p * p + (z / rho_max).powi(2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::solve_pencil;

    #[test]
    fn pencil_structure() {
        let grid = Arc::new(RadialGrid::cylindrical(0.0, 5.0, 40).unwrap());
        let pencil = free_field(1.0, grid, 1, 0.5).unwrap();
        assert!(pencil.a1.iter().all(|z| z.norm() < 1e-14));
        assert!((pencil.a2.clone() + crate::linalg::CMat::identity(40, 40)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn lowest_level_near_bessel_root() {
        let grid = Arc::new(RadialGrid::cylindrical(0.0, 4.0, 200).unwrap());
        let bundle = solve_pencil(&free_field(1.0, grid, 0, 0.0).unwrap()).unwrap();
        let e = bundle.radial(1).unwrap().energy.re;
        let exact = free_energy(1.0, 0.0, 0, 4.0, 1).unwrap();
        assert!((e - exact).abs() / exact < 1e-4, "{e} vs {exact}");
    }
}
