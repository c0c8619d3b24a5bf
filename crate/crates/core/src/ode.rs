//! Explicit adaptive Dormand-Prince 8(5,3) integration for complex vector fields.
//!
//! Steps are clamped so that every requested sample time is hit exactly; no
//! dense-output interpolation is involved.

// Tableau coefficients are kept as published.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::C64;

/// Tolerances and step bounds for [`integrate`].
#[derive(Clone, Debug)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` selects one automatically.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// Samples produced by [`integrate`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    /// Largest accepted scaled local error since the previous sample.
    pub local_errors: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;

struct Stages {
    k: [Vec<C64>; 10],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// One DOP853 step from `(t, y)` with derivative `k1 = f(t, y)` already in `st.k[0]`.
/// Returns the scaled error norm. The new state lands in `st.y_new`.
fn step<F>(f: &mut F, t: f64, y: &[C64], h: f64, st: &mut Stages, opts: &Options) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, k5, k6, k7, k8, k9, k10] = &mut st.k;
    let tmp = &mut st.tmp;
    combine(tmp, y, h, &[(A21, k1)]);
    f(t + C2 * h, tmp, k2);
    combine(tmp, y, h, &[(A31, k1), (A32, k2)]);
    f(t + C3 * h, tmp, k3);
    combine(tmp, y, h, &[(A41, k1), (A43, k3)]);
    f(t + C4 * h, tmp, k4);
    combine(tmp, y, h, &[(A51, k1), (A53, k3), (A54, k4)]);
    f(t + C5 * h, tmp, k5);
    combine(tmp, y, h, &[(A61, k1), (A64, k4), (A65, k5)]);
    f(t + C6 * h, tmp, k6);
    combine(tmp, y, h, &[(A71, k1), (A74, k4), (A75, k5), (A76, k6)]);
    f(t + C7 * h, tmp, k7);
    combine(tmp, y, h, &[(A81, k1), (A84, k4), (A85, k5), (A86, k6), (A87, k7)]);
    f(t + C8 * h, tmp, k8);
    combine(tmp, y, h, &[(A91, k1), (A94, k4), (A95, k5), (A96, k6), (A97, k7), (A98, k8)]);
    f(t + C9 * h, tmp, k9);
    combine(
        tmp,
        y,
        h,
        &[(A101, k1), (A104, k4), (A105, k5), (A106, k6), (A107, k7), (A108, k8), (A109, k9)],
    );
    f(t + C10 * h, tmp, k10);
    combine(
        tmp,
        y,
        h,
        &[
            (A111, k1),
            (A114, k4),
            (A115, k5),
            (A116, k6),
            (A117, k7),
            (A118, k8),
            (A119, k9),
            (A1110, k10),
        ],
    );
    f(t + C11 * h, tmp, k2);
    combine(
        tmp,
        y,
        h,
        &[
            (A121, k1),
            (A124, k4),
            (A125, k5),
            (A126, k6),
            (A127, k7),
            (A128, k8),
            (A129, k9),
            (A1210, k10),
            (A1211, k2),
        ],
    );
    f(t + h, tmp, k3);

    let mut err = 0.0;
    let mut err2 = 0.0;
    for i in 0..n {
        let incr = k1[i] * B1
            + k6[i] * B6
            + k7[i] * B7
            + k8[i] * B8
            + k9[i] * B9
            + k10[i] * B10
            + k2[i] * B11
            + k3[i] * B12;
        let yn = y[i] + incr * h;
        st.y_new[i] = yn;
        let sk = opts.atol + opts.rtol * y[i].norm().max(yn.norm());
        let e3 = incr - k1[i] * BHH1 - k9[i] * BHH2 - k3[i] * BHH3;
        err2 += (e3 / sk).norm_sqr();
        let e5 = k1[i] * ER1
            + k6[i] * ER6
            + k7[i] * ER7
            + k8[i] * ER8
            + k9[i] * ER9
            + k10[i] * ER10
            + k2[i] * ER11
            + k3[i] * ER12;
        err += (e5 / sk).norm_sqr();
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    h.abs() * err * (1.0 / (n as f64 * deno)).sqrt()
}

fn initial_step<F>(f: &mut F, t: f64, y: &[C64], f0: &[C64], span: f64, opts: &Options) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len() as f64;
    let sk = |v: C64| opts.atol + opts.rtol * v.norm();
    let dnf = (f0.iter().zip(y).map(|(d, v)| (d / sk(*v)).norm_sqr()).sum::<f64>() / n).sqrt();
    let dny = (y.iter().map(|v| (v / sk(*v)).norm_sqr()).sum::<f64>() / n).sqrt();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(opts.h_max).min(span);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(v, d)| v + d * h).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    f(t + h, &y1, &mut f1);
    let der2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), v)| ((a - b) / sk(*v)).norm_sqr())
        .sum::<f64>()
        / n)
        .sqrt()
        / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(opts.h_max).min(span)
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at every
/// entry of `sample_times`, which must be non-decreasing and start at or after `t0`.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[C64], sample_times: &[f64], opts: &Options) -> Result<Solution>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|&s| s < t0) {
        return Err(Error::BadSamples { min: 1 });
    }
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut st = Stages {
        k: std::array::from_fn(|_| vec![zero; n]),
        tmp: vec![zero; n],
        y_new: vec![zero; n],
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = Solution {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        local_errors: Vec::with_capacity(sample_times.len()),
        steps: 0,
        rejected: 0,
        evaluations: 0,
    };
    f(t, &y, &mut st.k[0]);
    out.evaluations += 1;
    if y.iter().chain(&st.k[0]).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite { t });
    }
    let t_end = sample_times.last().copied().unwrap_or(t0);
    let mut h = match opts.h_init {
        Some(h) => h,
        None if t_end > t0 => {
            let k0 = st.k[0].clone();
            out.evaluations += 1;
            initial_step(&mut f, t, &y, &k0, t_end - t0, opts)
        }
        None => 0.0,
    };
    let mut last_rejected = false;
    let mut max_err: f64 = 0.0;
    for &target in sample_times {
        while t < target {
            if out.steps >= opts.max_steps {
                return Err(Error::TooManySteps { t, steps: out.steps });
            }
            let remaining = target - t;
            let clamped = h >= remaining;
            let h_try = if clamped { remaining } else { h.min(opts.h_max) };
            if h_try < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h: h_try });
            }
            let err = step(&mut f, t, &y, h_try, &mut st, opts);
            out.evaluations += 11;
            if !err.is_finite() {
                h = h_try * 0.1;
                out.rejected += 1;
                last_rejected = true;
                continue;
            }
            let fac11 = err.powf(0.125);
            let fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac11 / SAFE));
            let mut h_new = h_try / fac;
            if err <= 1.0 {
                t = if clamped { target } else { t + h_try };
                std::mem::swap(&mut y, &mut st.y_new);
                if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::NonFinite { t });
                }
                f(t, &y, &mut st.k[0]);
                out.evaluations += 1;
                out.steps += 1;
                max_err = max_err.max(err);
                if last_rejected {
                    h_new = h_new.min(h_try);
                }
                last_rejected = false;
                // a step shortened to land on a sample should not shrink the next one
                h = if clamped { h.max(h_new) } else { h_new };
            } else {
                h = h_try / (1.0 / FAC1).min(fac11 / SAFE);
                last_rejected = true;
                out.rejected += 1;
            }
        }
        out.times.push(target);
        out.states.push(y.clone());
        out.local_errors.push(max_err);
        max_err = 0.0;
    }
    Ok(out)
}

/// Smallest number of base steps spread over the whole span by [`integrate_refined`].
const BASE_STEPS: f64 = 16.0;

/// Integrates like [`integrate`], but with global step doubling instead of a
/// per-step controller. Each sample interval is covered by `c_i 2^k` equal
/// DOP853 steps. The level `k` is raised until every embedded local error
/// estimate passes and the samples of two successive levels agree within
/// `atol + rtol |y|`; the finer level is returned. Because the acceptance test
/// only gets stricter as the tolerances shrink, the accepted level never
/// decreases when they are tightened.
pub fn integrate_refined<F>(mut f: F, t0: f64, y0: &[C64], sample_times: &[f64], opts: &Options) -> Result<Solution>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|&s| s < t0) {
        return Err(Error::BadSamples { min: 1 });
    }
    if y0.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut st = Stages {
        k: std::array::from_fn(|_| vec![zero; n]),
        tmp: vec![zero; n],
        y_new: vec![zero; n],
    };
    let t_end = sample_times.last().copied().unwrap_or(t0);
    let span = t_end - t0;
    let starts: Vec<f64> = std::iter::once(t0).chain(sample_times.iter().copied()).collect();
    let base: Vec<usize> = starts
        .windows(2)
        .map(|w| if w[1] > w[0] { ((BASE_STEPS * (w[1] - w[0]) / span).ceil() as usize).max(1) } else { 0 })
        .collect();
    let total_base: usize = base.iter().sum();

    // Runs one level; Err carries the first time at which the state stopped being finite.
    let mut run = |level: u32, evaluations: &mut usize| -> std::result::Result<(Vec<Vec<C64>>, Vec<f64>), f64> {
        let mut y = y0.to_vec();
        let mut states = Vec::with_capacity(sample_times.len());
        let mut errors = Vec::with_capacity(sample_times.len());
        for (w, &c) in starts.windows(2).zip(&base) {
            let steps = c << level;
            let mut max_err: f64 = 0.0;
            if steps > 0 {
                let h = (w[1] - w[0]) / steps as f64;
                for s in 0..steps {
                    let t = if s == 0 { w[0] } else { w[0] + s as f64 * h };
                    f(t, &y, &mut st.k[0]);
                    let err = step(&mut f, t, &y, h, &mut st, opts);
                    *evaluations += 12;
                    std::mem::swap(&mut y, &mut st.y_new);
                    if !err.is_finite() || y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                        return Err(t + h);
                    }
                    max_err = max_err.max(err);
                }
            }
            states.push(y.clone());
            errors.push(max_err);
        }
        Ok((states, errors))
    };

    let mut evaluations = 0;
    let mut coarse: Option<Vec<Vec<C64>>> = None;
    let mut level = 0u32;
    let mut stuck_at = t0;
    loop {
        let steps = total_base << level;
        let result = run(level, &mut evaluations);
        match result {
            Ok((states, errors)) => {
                // first sample where this level is not yet trusted
                let unsettled = (0..states.len()).find(|&i| {
                    errors[i] > 1.0
                        || coarse.as_ref().is_none_or(|prev| {
                            prev[i].iter().zip(&states[i]).any(|(x, y)| (x - y).norm() > opts.atol + opts.rtol * y.norm())
                        })
                });
                stuck_at = unsettled.map_or(t0, |i| sample_times[i]);
                if unsettled.is_none() {
                    return Ok(Solution {
                        times: sample_times.to_vec(),
                        states,
                        local_errors: errors,
                        steps,
                        rejected: 0,
                        evaluations,
                    });
                }
                coarse = Some(states);
            }
            Err(t) => {
                if (total_base << (level + 1)) > opts.max_steps {
                    return Err(Error::NonFinite { t });
                }
                coarse = None;
            }
        }
        let next = total_base << (level + 1);
        if next > opts.max_steps {
            return Err(Error::TooManySteps { t: stuck_at, steps });
        }
        let h_min = starts.windows(2).zip(&base).filter(|(_, &c)| c > 0).map(|(w, &c)| (w[1] - w[0]) / (c << (level + 1)) as f64).fold(f64::INFINITY, f64::min);
        if h_min < 1e-14 * t_end.abs().max(1.0) {
            return Err(Error::StepUnderflow { t: t0, h: h_min });
        }
        level += 1;
    }
}

/// Fixed-step DOP853 without error control.
pub fn integrate_fixed<F>(mut f: F, t0: f64, y0: &[C64], t1: f64, steps: usize) -> Vec<C64>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut st = Stages {
        k: std::array::from_fn(|_| vec![zero; n]),
        tmp: vec![zero; n],
        y_new: vec![zero; n],
    };
    let opts = Options::with_tol(1.0);
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, &y, &mut st.k[0]);
        step(&mut f, t, &y, h, &mut st, &opts);
        std::mem::swap(&mut y, &mut st.y_new);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(_t: f64, y: &[C64], dy: &mut [C64]) {
        // y' = -i diag(1, 2) y
        dy[0] = C64::new(0.0, -1.0) * y[0];
        dy[1] = C64::new(0.0, -2.0) * y[1];
    }

    #[test]
    fn hits_samples_exactly_and_matches_exponential() {
        let y0 = [C64::new(1.0, 0.0), C64::new(0.5, 0.5)];
        let times = [0.0, 0.3, 1.0, 2.5, 7.0];
        let sol = integrate(rotation, 0.0, &y0, &times, &Options::with_tol(1e-11)).unwrap();
        assert_eq!(sol.times, times);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            let e0 = y0[0] * C64::new(0.0, -t).exp();
            let e1 = y0[1] * C64::new(0.0, -2.0 * t).exp();
            assert!((y[0] - e0).norm() < 1e-9 && (y[1] - e1).norm() < 1e-9);
        }
    }

    #[test]
    fn fixed_step_order_is_eight() {
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let exact = |t: f64| [y0[0] * C64::new(0.0, -t).exp(), y0[1] * C64::new(0.0, -2.0 * t).exp()];
        let err = |steps| {
            let y = integrate_fixed(rotation, 0.0, &y0, 3.0, steps);
            let e = exact(3.0);
            ((y[0] - e[0]).norm()).max((y[1] - e[1]).norm())
        };
        let (e1, e2) = (err(10), err(20));
        let order = (e1 / e2).log2();
        assert!(order > 7.0, "observed order {order}");
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = i t y, y = exp(i t^2 / 2)
        let f = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, t) * y[0];
        let sol = integrate(f, 0.0, &[C64::new(1.0, 0.0)], &[4.0], &Options::with_tol(1e-12)).unwrap();
        let exact = C64::new(0.0, 8.0).exp();
        assert!((sol.states[0][0] - exact).norm() < 1e-9);
    }

    #[test]
    fn refined_matches_exponential_and_hits_samples() {
        let y0 = [C64::new(1.0, 0.0), C64::new(0.5, 0.5)];
        let times = [0.0, 0.3, 1.0, 1.0, 2.5, 7.0];
        let sol = integrate_refined(rotation, 0.0, &y0, &times, &Options::with_tol(1e-11)).unwrap();
        assert_eq!(sol.times, times);
        assert_eq!(sol.local_errors.len(), times.len());
        for (t, y) in sol.times.iter().zip(&sol.states) {
            let e0 = y0[0] * C64::new(0.0, -t).exp();
            let e1 = y0[1] * C64::new(0.0, -2.0 * t).exp();
            assert!((y[0] - e0).norm() < 1e-10 && (y[1] - e1).norm() < 1e-10);
        }
    }

    #[test]
    fn refined_step_count_grows_as_tolerance_shrinks() {
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let mut prev = 0;
        for k in 0..20 {
            let tol = 1e-3 / 2f64.powi(k);
            let sol = integrate_refined(rotation, 0.0, &y0, &[1.0, 5.0], &Options::with_tol(tol)).unwrap();
            assert!(sol.steps >= prev);
            prev = sol.steps;
        }
    }

    #[test]
    fn refined_reports_nan_time() {
        let f = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = if t > 1.0 { C64::new(f64::NAN, 0.0) } else { y[0] };
        let mut opts = Options::with_tol(1e-8);
        opts.max_steps = 10_000;
        match integrate_refined(f, 0.0, &[C64::new(1.0, 0.0)], &[3.0], &opts) {
            Err(Error::NonFinite { t }) => assert!(t > 1.0 && t < 1.01, "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0];
        let r = integrate(f, 0.0, &[C64::new(1.0, 0.0)], &[2.0], &Options::with_tol(1e-8));
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::NonFinite { .. }) | Err(Error::TooManySteps { .. })));
    }
}
