//! Quadratic eigenproblems `(A0 + E A1 + E^2 A2) Phi = 0` and mode tracking.

use crate::discretization::{inner_product, Sector};
use crate::error::{Error, Result};
use crate::linalg::{bandwidth, banded_matvec, eig, CMat, CVec};
use crate::C64;

/// Default backward-error threshold for accepting an eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Minimum gap between the best and second-best overlap when tracking.
pub const AMBIGUITY_MARGIN: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct QuadraticPencil {
    pub a0: CMat,
    pub a1: CMat,
    pub a2: CMat,
    pub weights: Vec<f64>,
    pub sector: Option<Sector>,
}

impl QuadraticPencil {
    pub fn new(a0: CMat, a1: CMat, a2: CMat, weights: Vec<f64>, sector: Option<Sector>) -> Result<Self> {
        let n = weights.len();
        for m in [&a0, &a1, &a2] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
            }
        }
        Ok(QuadraticPencil { a0, a1, a2, weights, sector })
    }

    /// Pencil of stationary modes `Phi exp(-i E t)`:
    /// `A0 = D2`, `A1 = -i (D1 - q'/q)`, `A2 = -1`.
    pub fn from_field(d1: &CMat, d2: &CMat, q: C64, q_dot: C64, weights: Vec<f64>, sector: Option<Sector>) -> Result<Self> {
        if q.norm() == 0.0 {
            return Err(Error::ZeroParameter);
        }
        let n = d2.nrows();
        let id = CMat::identity(n, n);
        let a1 = (d1 - &id * (q_dot / q)) * C64::new(0.0, -1.0);
        Self::new(d2.clone(), a1, -id, weights, sector)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Backward error `|P(E) Phi|_w / ((|A0| + |E||A1| + |E|^2|A2|) |Phi|_w)` with infinity norms.
    pub fn residual(&self, energy: C64, phi: &[C64]) -> f64 {
        let bands = [bandwidth(&self.a0), bandwidth(&self.a1), bandwidth(&self.a2)];
        self.residual_banded(energy, phi, &bands, &self.norms())
    }

    fn norms(&self) -> [f64; 3] {
        let inf = |m: &CMat| (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        [inf(&self.a0), inf(&self.a1), inf(&self.a2)]
    }

    fn residual_banded(&self, energy: C64, phi: &[C64], bands: &[usize; 3], norms: &[f64; 3]) -> f64 {
        let n = phi.len();
        let mut r0 = vec![C64::new(0.0, 0.0); n];
        let mut r1 = r0.clone();
        let mut r2 = r0.clone();
        banded_matvec(&self.a0, bands[0], phi, &mut r0);
        banded_matvec(&self.a1, bands[1], phi, &mut r1);
        banded_matvec(&self.a2, bands[2], phi, &mut r2);
        let e2 = energy * energy;
        let r: Vec<C64> = (0..n).map(|i| r0[i] + energy * r1[i] + e2 * r2[i]).collect();
        let num = wnorm(&r, &self.weights);
        let den = (norms[0] + energy.norm() * norms[1] + energy.norm_sqr() * norms[2]) * wnorm(phi, &self.weights);
        num / den.max(f64::MIN_POSITIVE)
    }

    /// 2-norm condition number of A2.
    pub fn leading_condition(&self) -> f64 {
        let a2 = &self.a2;
        let diagonal = (0..a2.nrows()).all(|i| (0..a2.ncols()).all(|j| i == j || a2[(i, j)].norm() == 0.0));
        if diagonal {
            let mags: Vec<f64> = a2.diagonal().iter().map(|z| z.norm()).collect();
            let max = mags.iter().cloned().fold(0.0, f64::max);
            let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
            return if min == 0.0 { f64::INFINITY } else { max / min };
        }
        let sv = a2.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

fn wnorm(f: &[C64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeLabel {
    pub angular: i64,
    pub p: f64,
    /// `+k` for the k-th positive-frequency mode, `-k` for the k-th negative one.
    pub radial: i64,
}

#[derive(Clone, Debug)]
pub struct Mode {
    pub energy: C64,
    /// Unit norm under the pencil weights; largest component real and positive.
    pub vector: CVec,
    pub residual: f64,
    pub label: ModeLabel,
}

#[derive(Clone, Debug)]
pub struct ModeBundle {
    /// Sorted by `Re E`, then `Im E`.
    pub modes: Vec<Mode>,
    pub weights: Vec<f64>,
    pub sector: Option<Sector>,
}

impl ModeBundle {
    pub fn energies(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.energy).collect()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Mode with the given radial label.
    pub fn radial(&self, radial: i64) -> Option<&Mode> {
        self.modes.iter().find(|m| m.label.radial == radial)
    }

    /// Positive-frequency modes in increasing order of `Re E`.
    pub fn positive(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.label.radial > 0)
    }

    pub fn index_of_radial(&self, radial: i64) -> Option<usize> {
        self.modes.iter().position(|m| m.label.radial == radial)
    }
}

/// Multiplies `v` by a unit phase so its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut CVec) {
    let mut best = C64::new(0.0, 0.0);
    for z in v.iter() {
        if z.norm() > best.norm() * (1.0 + 1e-12) {
            best = *z;
        }
    }
    if best.norm() > 0.0 {
        let ph = best.conj() / best.norm();
        v.iter_mut().for_each(|z| *z *= ph);
    }
}

/// Solves the pencil by linearization to the companion form
/// `[[0, 1], [-A2^-1 A0, -A2^-1 A1]]` and keeps eigenpairs whose backward error
/// is at most `residual_tol`.
pub fn solve_pencil_with(pencil: &QuadraticPencil, residual_tol: f64) -> Result<ModeBundle> {
    let n = pencil.dim();
    let condition = pencil.leading_condition();
    if !(condition <= 1e12) {
        return Err(Error::SingularLeading { condition });
    }
    let (m0, m1) = {
        let lu = pencil.a2.clone().lu();
        let m0 = lu.solve(&pencil.a0).ok_or(Error::SingularLeading { condition })?;
        let m1 = lu.solve(&pencil.a1).ok_or(Error::SingularLeading { condition })?;
        (m0, m1)
    };
    let mut comp = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        comp[(i, n + i)] = C64::new(1.0, 0.0);
    }
    comp.view_mut((n, 0), (n, n)).copy_from(&(-m0));
    comp.view_mut((n, n), (n, n)).copy_from(&(-m1));
    let (values, vectors) = eig(&comp)?;

    let bands = [bandwidth(&pencil.a0), bandwidth(&pencil.a1), bandwidth(&pencil.a2)];
    let norms = pencil.norms();
    let mut modes = Vec::new();
    for (k, &energy) in values.iter().enumerate() {
        if !energy.re.is_finite() || !energy.im.is_finite() {
            continue;
        }
        let col = vectors.column(k);
        let top: Vec<C64> = (0..n).map(|i| col[i]).collect();
        let bottom: Vec<C64> = (0..n).map(|i| col[n + i]).collect();
        // for |E| > 1 the lower block E Phi carries more of the vector
        let raw = if energy.norm() > 1.0 { bottom.iter().map(|z| z / energy).collect() } else { top };
        let nrm = wnorm(&raw, &pencil.weights);
        if nrm == 0.0 {
            continue;
        }
        let mut v = CVec::from_iterator(n, raw.iter().map(|z| z / nrm));
        fix_phase(&mut v);
        let residual = pencil.residual_banded(energy, v.as_slice(), &bands, &norms);
        if residual <= residual_tol {
            modes.push((energy, v, residual));
        }
    }
    if modes.is_empty() {
        return Err(Error::NoModes);
    }
    modes.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let (angular, p) = pencil.sector.map(|s| (s.angular, s.p)).unwrap_or((0, 0.0));
    let n_negative = modes.iter().filter(|m| m.0.re < 0.0).count() as i64;
    let mut pos = 0;
    let modes = modes
        .into_iter()
        .enumerate()
        .map(|(idx, (energy, vector, residual))| {
            let radial = if energy.re < 0.0 {
                // most negative first in the sorted list
                -(n_negative - idx as i64)
            } else {
                pos += 1;
                pos
            };
            Mode { energy, vector, residual, label: ModeLabel { angular, p, radial } }
        })
        .collect();
    Ok(ModeBundle { modes, weights: pencil.weights.clone(), sector: pencil.sector })
}

pub fn solve_pencil(pencil: &QuadraticPencil) -> Result<ModeBundle> {
    solve_pencil_with(pencil, RESIDUAL_TOL)
}

/// Solves independent pencils (one per sector or path sample), in parallel
/// when the `parallel` feature is on. Output order follows the input.
pub fn solve_sectors(pencils: &[QuadraticPencil]) -> Result<Vec<ModeBundle>> {
    crate::parallel::try_map(pencils, solve_pencil)
}

/// [`solve_sectors`] on the calling thread only.
pub fn solve_sectors_sequential(pencils: &[QuadraticPencil]) -> Result<Vec<ModeBundle>> {
    crate::parallel::try_map_sequential(pencils, solve_pencil)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pairing {
    /// `(i, j)` with `E_j = -conj(E_i)` up to the tolerance and `Re E_i > 0`.
    pub pairs: Vec<(usize, usize)>,
    /// Indices (into the first bundle for positive modes, the second for
    /// negative ones) left without a partner.
    pub unpaired: Vec<usize>,
}

/// Smallest overlap modulus accepted between the two vectors of a pair.
pub const PAIR_OVERLAP: f64 = 1.0 - 1e-8;

/// Matches each positive-frequency mode with a negative-frequency partner
/// `-conj(E)` whose vector coincides up to phase. Exact pairing is expected
/// when `A1 = 0` and `A0` is self-adjoint.
pub fn pair_signs(bundle: &ModeBundle, rel_tol: f64) -> Pairing {
    let mut p = pair_between(bundle, bundle, rel_tol);
    let paired: Vec<usize> = p.pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    p.unpaired = (0..bundle.len()).filter(|k| !paired.contains(k)).collect();
    p
}

/// Pairs the positive modes of `a` with the negative modes of `b`, e.g. the
/// sectors `(l, p)` and `(-l, -p)` when `A1` is odd in the labels.
pub fn pair_sectors(a: &ModeBundle, b: &ModeBundle, rel_tol: f64) -> Pairing {
    pair_between(a, b, rel_tol)
}

fn pair_between(a: &ModeBundle, b: &ModeBundle, rel_tol: f64) -> Pairing {
    let mut used = vec![false; b.len()];
    let mut out = Pairing::default();
    for (i, m) in a.modes.iter().enumerate() {
        if m.energy.re <= 0.0 {
            continue;
        }
        let target = -m.energy.conj();
        let partner = b
            .modes
            .iter()
            .enumerate()
            .filter(|(j, o)| !used[*j] && o.energy.re < 0.0)
            .min_by(|x, y| (x.1.energy - target).norm().total_cmp(&(y.1.energy - target).norm()));
        let matched = partner.filter(|(_, o)| {
            (o.energy - target).norm() <= rel_tol * m.energy.norm()
                && a.weights.len() == o.vector.len()
                && inner_product(m.vector.as_slice(), o.vector.as_slice(), &a.weights)
                    .map(|z| z.norm() >= PAIR_OVERLAP)
                    .unwrap_or(false)
        });
        match matched {
            Some((j, _)) => {
                used[j] = true;
                out.pairs.push((i, j));
            }
            None => out.unpaired.push(i),
        }
    }
    out.unpaired.extend((0..b.len()).filter(|&j| !used[j] && b.modes[j].energy.re < 0.0));
    out
}

/// A single mode followed through a sequence of bundles.
#[derive(Clone, Debug)]
pub struct TrackedMode {
    pub indices: Vec<usize>,
    pub energies: Vec<C64>,
    /// Vectors with successive overlaps made real and positive.
    pub vectors: Vec<CVec>,
    /// `|<Phi_s | Phi_s+1>|` per step.
    pub overlaps: Vec<f64>,
}

/// Follows mode `start` of the first bundle by maximal overlap among modes
/// of the same frequency sign, breaking exact ties by the smallest energy
/// jump. Two candidates whose overlaps differ by less than
/// [`AMBIGUITY_MARGIN`] are reported as a level crossing.
pub fn track(bundles: &[ModeBundle], start: usize) -> Result<TrackedMode> {
    let first = bundles.first().ok_or(Error::BadSamples { min: 1 })?;
    let m0 = first.modes.get(start).ok_or(Error::ModeIndex { index: start, len: first.len() })?;
    let mut out = TrackedMode {
        indices: vec![start],
        energies: vec![m0.energy],
        vectors: vec![m0.vector.clone()],
        overlaps: Vec::new(),
    };
    for (step, b) in bundles.iter().enumerate().skip(1) {
        if b.weights.len() != first.weights.len() {
            return Err(Error::GridMismatch);
        }
        let prev = out.vectors.last().expect("non-empty").clone();
        let prev_e = *out.energies.last().expect("non-empty");
        let mut cands: Vec<(usize, C64, f64)> = Vec::with_capacity(b.len());
        for (k, m) in b.modes.iter().enumerate() {
            if (m.energy.re >= 0.0) != (prev_e.re >= 0.0) {
                continue;
            }
            let ov = inner_product(prev.as_slice(), m.vector.as_slice(), &b.weights)?;
            cands.push((k, ov, (m.energy - prev_e).norm()));
        }
        cands.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then(a.2.total_cmp(&b.2)));
        let (k, ov, _) = *cands.first().ok_or(Error::NoModes)?;
        if let Some(second) = cands.get(1) {
            if ov.norm() - second.1.norm() < AMBIGUITY_MARGIN {
                return Err(Error::LevelCrossing { step, best: ov.norm(), second: second.1.norm() });
            }
        }
        let phase = ov.conj() / ov.norm();
        let v = &b.modes[k].vector * phase;
        out.indices.push(k);
        out.energies.push(b.modes[k].energy);
        out.vectors.push(v);
        out.overlaps.push(ov.norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::from(v))))
    }

    #[test]
    fn diagonal_pencil_gives_square_roots() {
        let p = QuadraticPencil::new(diag(&[1.0, 4.0, 9.0]), CMat::zeros(3, 3), -CMat::identity(3, 3), vec![1.0; 3], None).unwrap();
        let b = solve_pencil(&p).unwrap();
        let e: Vec<f64> = b.energies().iter().map(|z| z.re).collect();
        let expected = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        for (a, x) in e.iter().zip(expected) {
            assert!((a - x).abs() < 1e-12);
        }
        assert_eq!(b.modes[3].label.radial, 1);
        assert_eq!(b.modes[2].label.radial, -1);
        assert_eq!(b.modes[0].label.radial, -3);
        let pairing = pair_signs(&b, 1e-10);
        assert_eq!(pairing.pairs.len(), 3);
        assert!(pairing.unpaired.is_empty());
    }

    #[test]
    fn first_order_term_shifts_pairs() {
        // E^2 - 2 b E - k = 0 per entry: E = b +- sqrt(b^2 + k)
        let b = 0.3;
        let p = QuadraticPencil::new(diag(&[2.0]), diag(&[2.0 * b]), diag(&[-1.0]), vec![1.0], None).unwrap();
        let bundle = solve_pencil(&p).unwrap();
        let r = (b * b + 2.0_f64).sqrt();
        assert!((bundle.modes[0].energy.re - (b - r)).abs() < 1e-12);
        assert!((bundle.modes[1].energy.re - (b + r)).abs() < 1e-12);
        assert_eq!(pair_signs(&bundle, 1e-8).unpaired.len(), 2);
    }

    #[test]
    fn singular_leading_rejected() {
        let p = QuadraticPencil::new(diag(&[1.0, 1.0]), CMat::zeros(2, 2), diag(&[1.0, 1e-14]), vec![1.0; 2], None).unwrap();
        assert!(matches!(solve_pencil(&p), Err(Error::SingularLeading { .. })));
    }

    #[test]
    fn tracking_detects_degeneracy() {
        let mk = |a: f64, b: f64| {
            solve_pencil(&QuadraticPencil::new(diag(&[a, b]), CMat::zeros(2, 2), -CMat::identity(2, 2), vec![1.0; 2], None).unwrap()).unwrap()
        };
        let path = vec![mk(1.0, 4.0), mk(1.5, 3.5), mk(2.0, 3.0)];
        let t = track(&path, 2).unwrap();
        assert_eq!(t.indices, vec![2, 2, 2]);
        // a rotated frame mixes the two positive modes evenly
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rot = CMat::from_row_slice(2, 2, &[C64::from(s), C64::from(-s), C64::from(s), C64::from(s)]);
        let a0 = &rot * diag(&[1.0, 4.0]) * rot.transpose();
        let mixed = solve_pencil(&QuadraticPencil::new(a0, CMat::zeros(2, 2), -CMat::identity(2, 2), vec![1.0; 2], None).unwrap()).unwrap();
        let err = track(&[mk(1.0, 4.0), mk(4.0, 1.0), mixed], 2);
        assert!(err.is_err());
    }
}
