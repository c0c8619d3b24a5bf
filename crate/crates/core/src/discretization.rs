//! Radial finite-difference grids, weighted inner products and sector-reduced
//! operator assembly.

use crate::error::{Error, Result};
use crate::linalg::{bandwidth, CMat, CVec};
use crate::spacetime::OperatorCoefficients;
use crate::C64;
use std::sync::Arc;

type Measure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Uniform interior nodes `rho_i = rho_min + i h`, `i = 1..=n`, with
/// `h = (rho_max - rho_min) / (n + 1)` and quadrature weights `measure(rho_i) h`.
#[derive(Clone)]
pub struct RadialGrid {
    rho_min: f64,
    rho_max: f64,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    measure: Measure,
}

impl std::fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialGrid")
            .field("rho_min", &self.rho_min)
            .field("rho_max", &self.rho_max)
            .field("n_points", &self.nodes.len())
            .finish()
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.rho_min == other.rho_min && self.rho_max == other.rho_max && self.weights == other.weights
    }
}

impl RadialGrid {
    pub fn new(rho_min: f64, rho_max: f64, n_points: usize, measure: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::with_measure(rho_min, rho_max, n_points, Arc::new(measure))
    }

    fn with_measure(rho_min: f64, rho_max: f64, n_points: usize, measure: Measure) -> Result<Self> {
        if !(rho_min >= 0.0 && rho_max > rho_min && rho_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("need 0 <= rho_min < rho_max, got [{rho_min}, {rho_max}]")));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n_points}")));
        }
        let h = (rho_max - rho_min) / (n_points as f64 + 1.0);
        let nodes: Vec<f64> = (1..=n_points).map(|i| rho_min + i as f64 * h).collect();
        let mut weights = Vec::with_capacity(n_points);
        for &rho in &nodes {
            let m = measure(rho);
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::NonPositiveMeasure { rho, value: m });
            }
            weights.push(m * h);
        }
        Ok(RadialGrid { rho_min, rho_max, spacing: h, nodes, weights, measure })
    }

    /// Cylindrical grid with measure `rho`.
    pub fn cylindrical(rho_min: f64, rho_max: f64, n_points: usize) -> Result<Self> {
        Self::new(rho_min, rho_max, n_points, |r| r)
    }

    /// The same interval with `2n + 1` points, so the spacing halves exactly.
    pub fn refined(&self) -> Result<Self> {
        Self::with_measure(self.rho_min, self.rho_max, 2 * self.len() + 1, self.measure.clone())
    }

    /// The same nodes with the measure multiplied pointwise by `factor`.
    pub fn reweighted(&self, factor: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let base = self.measure.clone();
        Self::with_measure(self.rho_min, self.rho_max, self.len(), Arc::new(move |r| base(r) * factor(r)))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn measure(&self, rho: f64) -> f64 {
        (self.measure)(rho)
    }

    pub fn inner(&self, f: &[C64], g: &[C64]) -> Result<C64> {
        inner_product(f, g, &self.weights)
    }

    pub fn norm(&self, f: &[C64]) -> Result<f64> {
        Ok(self.inner(f, f)?.re.sqrt())
    }
}

/// `sum_i w_i conj(f_i) g_i`, antilinear in the first slot.
pub fn inner_product(f: &[C64], g: &[C64], weights: &[f64]) -> Result<C64> {
    if f.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), got: f.len() });
    }
    if g.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), got: g.len() });
    }
    Ok(f.iter().zip(g).zip(weights).map(|((a, b), w)| a.conj() * b * *w).sum())
}

/// Weights for `blocks` stacked copies of a grid.
pub fn tile_weights(weights: &[f64], blocks: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(weights.len() * blocks);
    for _ in 0..blocks {
        out.extend_from_slice(weights);
    }
    out
}

/// Separation labels: azimuthal quantum number and axial momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    pub angular: i64,
    pub p: f64,
}

/// Inner boundary closure. `AxisRegular` imposes `f'(0) = 0` through the ghost
/// value `f_0 = f_1`; it is only meaningful for `rho_min = 0` and zero angular momentum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    Dirichlet,
    AxisRegular,
}

impl Closure {
    pub fn for_sector(grid: &RadialGrid, angular: i64) -> Closure {
        if grid.rho_min() == 0.0 && angular == 0 {
            Closure::AxisRegular
        } else {
            Closure::Dirichlet
        }
    }
}

/// Matrix of `a(rho) f'' + b(rho) f' + c(rho) f` by central differences, with
/// `f = 0` beyond the outer node.
pub fn radial_matrix(grid: &RadialGrid, second: &[C64], first: &[C64], scalar: &[C64], closure: Closure) -> Result<CMat> {
    let n = grid.len();
    for v in [second, first, scalar] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let h = grid.spacing();
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        let lower = second[i] / (h * h) - first[i] / (2.0 * h);
        let upper = second[i] / (h * h) + first[i] / (2.0 * h);
        m[(i, i)] = scalar[i] - second[i] * (2.0 / (h * h));
        if i > 0 {
            m[(i, i - 1)] = lower;
        } else if closure == Closure::AxisRegular {
            m[(i, i)] += lower;
        }
        if i + 1 < n {
            m[(i, i + 1)] = upper;
        }
    }
    Ok(m)
}

/// A discretized spatial operator acting on `blocks` stacked copies of a radial grid.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: CMat,
    pub grid: Arc<RadialGrid>,
    pub blocks: usize,
    pub sector: Option<Sector>,
    pub bandwidth: usize,
    pub self_adjoint: bool,
}

impl DiscreteOperator {
    pub fn new(matrix: CMat, grid: Arc<RadialGrid>, blocks: usize, sector: Option<Sector>) -> Result<Self> {
        let dim = grid.len() * blocks;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let weights = tile_weights(grid.weights(), blocks);
        let self_adjoint = is_self_adjoint(&matrix, &weights, 1e-10);
        let bandwidth = bandwidth(&matrix);
        Ok(DiscreteOperator { matrix, grid, blocks, sector, bandwidth, self_adjoint })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn weights(&self) -> Vec<f64> {
        tile_weights(self.grid.weights(), self.blocks)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        crate::linalg::banded_matvec(&self.matrix, self.bandwidth, x, &mut y);
        y
    }

    pub fn apply_vec(&self, x: &CVec) -> CVec {
        CVec::from_vec(self.apply(x.as_slice()))
    }
}

/// `<f, M g> = <M f, g>` on every basis pair, i.e. `W M` is Hermitian, to relative tolerance `tol`.
pub fn is_self_adjoint(m: &CMat, weights: &[f64], tol: f64) -> bool {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max) * weights.iter().cloned().fold(0.0, f64::max);
    for i in 0..n {
        for j in i..n {
            let a = m[(i, j)] * weights[i];
            let b = (m[(j, i)] * weights[j]).conj();
            if (a - b).norm() > tol * scale.max(1e-300) {
                return false;
            }
        }
    }
    true
}

const PROBE_PHI: [f64; 3] = [0.0, 1.3, 2.9];
const PROBE_Z: [f64; 2] = [0.0, 0.7];

fn check_uniform(label: &'static str, coordinate: &'static str, reference: C64, value: C64) -> Result<()> {
    if (reference - value).norm() > 1e-10 * (1.0 + reference.norm()) {
        return Err(Error::NotSeparable { coefficient: label, coordinate });
    }
    Ok(())
}

/// Reduces D1, D2 to the sector `exp(i l phi + i p z)`: `d_phi -> i l`, `d_z -> i p`.
///
/// The coefficients are probed at several `(phi, z)` per node; any dependence
/// on those coordinates is reported as [`Error::NotSeparable`].
pub fn assemble_radial(
    coeffs: &OperatorCoefficients,
    grid: Arc<RadialGrid>,
    angular: i64,
    p: f64,
) -> Result<(DiscreteOperator, DiscreteOperator)> {
    let n = grid.len();
    let il = C64::new(0.0, angular as f64);
    let ip = C64::new(0.0, p);
    let mut d1_first = vec![C64::new(0.0, 0.0); n];
    let mut d1_scalar = vec![C64::new(0.0, 0.0); n];
    let mut d2_second = vec![C64::new(0.0, 0.0); n];
    let mut d2_first = vec![C64::new(0.0, 0.0); n];
    let mut d2_scalar = vec![C64::new(0.0, 0.0); n];
    for (i, &rho) in grid.nodes().iter().enumerate() {
        let s = coeffs.at(&[rho, 0.0, 0.0])?;
        for &phi in &PROBE_PHI {
            for &z in &PROBE_Z {
                let o = coeffs.at(&[rho, phi, z])?;
                let coordinate = if z != 0.0 { "z" } else { "phi" };
                check_uniform("D1", coordinate, s.d1_scalar, o.d1_scalar)?;
                check_uniform("D2", coordinate, s.d2_scalar, o.d2_scalar)?;
                for k in 0..3 {
                    check_uniform("D1", coordinate, s.d1_drift[k], o.d1_drift[k])?;
                    check_uniform("D2", coordinate, s.d2_drift[k], o.d2_drift[k])?;
                    for l in 0..3 {
                        check_uniform("D2", coordinate, s.d2_second[k][l], o.d2_second[k][l])?;
                    }
                }
            }
        }
        let a = &s.d2_second;
        d1_first[i] = s.d1_drift[0];
        d1_scalar[i] = s.d1_scalar + il * s.d1_drift[1] + ip * s.d1_drift[2];
        d2_second[i] = a[0][0];
        d2_first[i] = s.d2_drift[0] + (a[0][1] + a[1][0]) * il + (a[0][2] + a[2][0]) * ip;
        d2_scalar[i] = s.d2_scalar + il * s.d2_drift[1] + ip * s.d2_drift[2]
            + (il * il) * a[1][1]
            + (ip * ip) * a[2][2]
            + (il * ip) * (a[1][2] + a[2][1]);
    }
    let closure = Closure::for_sector(&grid, angular);
    let zero = vec![C64::new(0.0, 0.0); n];
    let d1 = radial_matrix(&grid, &zero, &d1_first, &d1_scalar, closure)?;
    let d2 = radial_matrix(&grid, &d2_second, &d2_first, &d2_scalar, closure)?;
    let sector = Some(Sector { angular, p });
    Ok((
        DiscreteOperator::new(d1, grid.clone(), 1, sector)?,
        DiscreteOperator::new(d2, grid, 1, sector)?,
    ))
}
