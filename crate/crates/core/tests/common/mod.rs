#![allow(dead_code)]

use kgphase::linalg::{CMat, CVec};
use kgphase::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnum(r: &mut impl Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

pub fn cvec(r: &mut impl Rng, n: usize) -> CVec {
    CVec::from_iterator(n, (0..n).map(|_| cnum(r)))
}

pub fn cmat(r: &mut impl Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| cnum(r))
}

pub fn weights(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(0.1..1.0)).collect()
}

/// Unit vector under the given weights.
pub fn unit(r: &mut impl Rng, w: &[f64]) -> CVec {
    let v = cvec(r, w.len());
    let n: f64 = v.iter().zip(w).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt();
    v / C64::from(n)
}

pub fn diag(vals: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::from(v))))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_dist(a: &CVec, b: &CVec) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
