//! Run configuration: parsing, validation and construction of the numerical setup.

use crate::CliError;
use kgphase::discretization::{RadialGrid, Sector};
use kgphase::propagator::QSchedule;
use kgphase::scenarios::{LandauScenario, StringScenario};
use kgphase::C64;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;

pub const MIN_TOLERANCE: f64 = 1e-12;
pub const MAX_TOLERANCE: f64 = 1e-3;
pub const MIN_POINTS: usize = 64;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioConfig {
    Free {
        mass: f64,
    },
    Landau {
        charge: f64,
        field: f64,
        mass: f64,
        box_length: f64,
    },
    /// Exactly one of `alpha` and `d` must be given.
    String {
        j: f64,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        d: Option<f64>,
        mass: f64,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub rho_min: Option<f64>,
    pub rho_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    /// `l` for free and string scenarios, `m` for Landau.
    pub angular: i64,
    #[serde(default)]
    pub p: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Samples per loop (connection, holonomy, phases) or along the sweep (evolve).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Times the string box loop winds around the string.
    #[serde(default = "default_winding")]
    pub winding: u32,
    /// Polar angle of the Landau field-rotation loop.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Amplitude of the string angular-momentum loop used by `evolve`.
    #[serde(default)]
    pub dj: Option<f64>,
    /// Sweep time `T` for `evolve`.
    #[serde(default)]
    pub duration: Option<f64>,
}

fn default_samples() -> usize {
    256
}

fn default_winding() -> u32 {
    1
}

fn default_theta() -> f64 {
    0.7
}

/// `q` as `[re, im]`, or sampled and interpolated by a C1 cubic.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum QConfig {
    Constant([f64; 2]),
    Sampled { times: Vec<f64>, values: Vec<[f64; 2]> },
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig::Constant([0.0, 1.0])
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub grid: GridConfig,
    pub sectors: Vec<SectorConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub q: QConfig,
    /// Radial levels reported per sector and sign.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_levels() -> usize {
    3
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

/// Validated scenario with everything needed to build pencils and operators.
#[derive(Clone, Debug)]
pub enum Scenario {
    Free { mass: f64 },
    Landau(LandauScenario),
    String(StringScenario),
}

/// A validated run.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: RunConfig,
    pub scenario: Scenario,
    pub grid: Arc<RadialGrid>,
    /// Sorted by `(angular, p)`.
    pub sectors: Vec<Sector>,
    pub q: QSchedule,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn validate(self) -> Result<Setup, CliError> {
        if !(MIN_TOLERANCE..=MAX_TOLERANCE).contains(&self.tolerance) {
            return Err(invalid("tolerance", format!("must lie in [{MIN_TOLERANCE:e}, {MAX_TOLERANCE:e}], got {:e}", self.tolerance)));
        }
        if self.grid.n_points < MIN_POINTS {
            return Err(invalid("grid.n_points", format!("must be at least {MIN_POINTS}, got {}", self.grid.n_points)));
        }
        if self.levels == 0 {
            return Err(invalid("levels", "must be at least 1"));
        }
        let rho_max = finite("grid.rho_max", self.grid.rho_max)?;
        if let Some(r) = self.grid.rho_min {
            finite("grid.rho_min", r)?;
        }
        let scenario = match self.scenario {
            ScenarioConfig::Free { mass } => {
                if !(finite("scenario.mass", mass)? >= 0.0) {
                    return Err(invalid("scenario.mass", format!("must be >= 0, got {mass}")));
                }
                Scenario::Free { mass }
            }
            ScenarioConfig::Landau { charge, field, mass, box_length } => {
                for (name, v) in [("scenario.charge", charge), ("scenario.mass", mass)] {
                    finite(name, v)?;
                }
                if charge == 0.0 {
                    return Err(invalid("scenario.charge", "must be non-zero"));
                }
                let s = LandauScenario::new(charge, field, mass, box_length).map_err(|e| invalid("scenario", e))?;
                Scenario::Landau(s)
            }
            ScenarioConfig::String { j, alpha, d, mass } => {
                finite("scenario.mass", mass)?;
                let s = match (alpha, d) {
                    (Some(a), None) => {
                        if !(a > 0.0 && a <= 1.0) {
                            return Err(invalid("scenario.alpha", format!("must lie in (0, 1], got {a}")));
                        }
                        StringScenario::with_alpha(j, a, mass)
                    }
                    (None, Some(d)) => StringScenario::new(j, d, mass),
                    _ => return Err(invalid("scenario", "give exactly one of alpha and d")),
                }
                .map_err(|e| invalid("scenario", e))?;
                Scenario::String(s)
            }
        };
        let grid = match (&scenario, self.grid.rho_min) {
            (Scenario::String(s), None) => s.grid(rho_max, self.grid.n_points),
            (Scenario::String(s), Some(r)) => s.grid_from(r, rho_max, self.grid.n_points),
            (_, r) => RadialGrid::cylindrical(r.unwrap_or(0.0), rho_max, self.grid.n_points),
        }
        .map_err(|e| invalid("grid", e))?;

        if self.sectors.is_empty() {
            return Err(invalid("sectors", "at least one sector is required"));
        }
        let mut sectors = Vec::with_capacity(self.sectors.len());
        for (k, s) in self.sectors.iter().enumerate() {
            finite(&format!("sectors[{k}].p"), s.p)?;
            sectors.push(Sector { angular: s.angular, p: s.p });
        }
        sectors.sort_by(|a, b| a.angular.cmp(&b.angular).then(a.p.total_cmp(&b.p)));
        if sectors.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("sectors", "duplicate sector"));
        }

        if let Some(sw) = &self.sweep {
            if sw.samples < 3 {
                return Err(invalid("sweep.samples", format!("must be at least 3, got {}", sw.samples)));
            }
            if sw.winding == 0 {
                return Err(invalid("sweep.winding", "must be at least 1"));
            }
            finite("sweep.theta", sw.theta)?;
            if (sw.theta - std::f64::consts::PI).abs() < 1e-6 {
                return Err(invalid("sweep.theta", "the rotation frame is singular at theta = pi"));
            }
            if let Some(t) = sw.duration {
                if !(finite("sweep.duration", t)? > 0.0) {
                    return Err(invalid("sweep.duration", format!("must be positive, got {t}")));
                }
            }
            if let Some(dj) = sw.dj {
                if !(finite("sweep.dj", dj)? > 0.0) {
                    return Err(invalid("sweep.dj", format!("must be positive, got {dj}")));
                }
            }
        }
        let q = q_schedule(&self.q)?;
        Ok(Setup { config: self, scenario, grid: Arc::new(grid), sectors, q })
    }
}

fn q_schedule(q: &QConfig) -> Result<QSchedule, CliError> {
    match q {
        QConfig::Constant([re, im]) => {
            let q = C64::new(finite("q.constant", *re)?, finite("q.constant", *im)?);
            if q.norm() == 0.0 {
                return Err(invalid("q.constant", "must be non-zero"));
            }
            Ok(QSchedule::Constant(q))
        }
        QConfig::Sampled { times, values } => {
            if times.len() < 2 || times.len() != values.len() {
                return Err(invalid("q.sampled", "needs at least two times and one value per time"));
            }
            if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("q.sampled.times", "must be finite and strictly increasing"));
            }
            let values: Vec<C64> = values.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(invalid("q.sampled.values", "must be finite"));
            }
            let spline = Hermite::new(times.clone(), values);
            // the interpolant must stay away from zero on every segment
            let floor = 1e-8 * spline.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for k in 0..times.len() - 1 {
                let near_zero = (0..=256).any(|i| {
                    let t = times[k] + (times[k + 1] - times[k]) * i as f64 / 256.0;
                    spline.eval(t).0.norm() <= floor
                });
                if near_zero {
                    return Err(invalid("q.sampled.values", format!("interpolated q vanishes between samples {k} and {}", k + 1)));
                }
            }
            Ok(QSchedule::Varying(Arc::new(move |t| spline.eval(t))))
        }
    }
}

/// C1 cubic Hermite interpolant of sampled `q`, with three-point slopes inside
/// and zero slope at both ends so that holding `q` constant outside stays C1.
/// A continuous `q'` keeps the integrator's stages consistent across knots.
struct Hermite {
    times: Vec<f64>,
    values: Vec<C64>,
    slopes: Vec<C64>,
}

impl Hermite {
    fn new(times: Vec<f64>, values: Vec<C64>) -> Self {
        let n = times.len();
        let mut slopes = vec![C64::new(0.0, 0.0); n];
        for k in 1..n - 1 {
            let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            let (d0, d1) = ((values[k] - values[k - 1]) / h0, (values[k + 1] - values[k]) / h1);
            slopes[k] = (d1 * h0 + d0 * h1) / (h0 + h1);
        }
        Hermite { times, values, slopes }
    }

    /// `q(t)` and `q'(t)`; constant outside the sampled range.
    fn eval(&self, t: f64) -> (C64, C64) {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return (self.values[0], C64::new(0.0, 0.0));
        }
        if t >= self.times[last] {
            return (self.values[last], C64::new(0.0, 0.0));
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (p0, p1, m0, m1) = (self.values[k], self.values[k + 1], self.slopes[k] * h, self.slopes[k + 1] * h);
        let (s2, s3) = (s * s, s * s * s);
        let q = p0 * (2.0 * s3 - 3.0 * s2 + 1.0) + m0 * (s3 - 2.0 * s2 + s) + p1 * (-2.0 * s3 + 3.0 * s2) + m1 * (s3 - s2);
        let dq = (p0 * (6.0 * s2 - 6.0 * s) + m0 * (3.0 * s2 - 4.0 * s + 1.0) + p1 * (-6.0 * s2 + 6.0 * s) + m1 * (3.0 * s2 - 2.0 * s)) / h;
        (q, dq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "scenario": {"type": "free", "mass": 1.0},
            "grid": {"rho_max": 5.0, "n_points": 64},
            "sectors": [{"angular": 1, "p": 0.5}, {"angular": 0}]
        })
    }

    fn validate(v: serde_json::Value) -> Result<Setup, CliError> {
        RunConfig::parse(&v.to_string())?.validate()
    }

    #[test]
    fn defaults_and_sorting() {
        let s = validate(base()).unwrap();
        assert_eq!(s.config.tolerance, 1e-9);
        assert_eq!(s.config.levels, 3);
        assert_eq!(s.sectors, vec![Sector { angular: 0, p: 0.0 }, Sector { angular: 1, p: 0.5 }]);
        assert!(matches!(s.q, QSchedule::Constant(q) if q == C64::new(0.0, 1.0)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = base();
        v["grid"]["spacing"] = 0.1.into();
        let e = validate(v).unwrap_err().to_string();
        assert!(e.contains("spacing"), "{e}");
        let mut v = base();
        v["scenario"]["charge"] = 1.0.into();
        assert!(validate(v).is_err());
    }

    #[test]
    fn messages_name_the_field() {
        let mut v = base();
        v["tolerance"] = 1e-2.into();
        assert!(validate(v).unwrap_err().to_string().starts_with("tolerance:"));
        let mut v = base();
        v["grid"]["n_points"] = 32.into();
        assert!(validate(v).unwrap_err().to_string().starts_with("grid.n_points:"));
        let mut v = base();
        v["sectors"] = serde_json::json!([{"angular": 0}, {"angular": 0, "p": 0.0}]);
        assert!(validate(v).unwrap_err().to_string().starts_with("sectors:"));
    }

    #[test]
    fn tolerance_bounds_are_inclusive() {
        for tol in [1e-12, 1e-3] {
            let mut v = base();
            v["tolerance"] = tol.into();
            assert!(validate(v).is_ok());
        }
    }

    #[test]
    fn string_needs_one_cone_parameter() {
        let mut v = base();
        v["scenario"] = serde_json::json!({"type": "string", "j": 0.05, "mass": 1.0});
        assert!(validate(v.clone()).is_err());
        v["scenario"]["alpha"] = 0.9.into();
        let s = validate(v).unwrap();
        assert!((s.grid.rho_min() - 0.2 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn sampled_q_interpolates_and_rejects_zero() {
        let q = q_schedule(&QConfig::Sampled { times: vec![0.0, 2.0], values: vec![[0.0, 1.0], [0.0, 3.0]] }).unwrap();
        // smoothstep between the two values, flat at both ends
        let (v, d) = q.at(1.0);
        assert!((v - C64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((d - C64::new(0.0, 1.5)).norm() < 1e-15);
        assert_eq!(q.at(0.0).1, C64::new(0.0, 0.0));
        assert_eq!(q.at(5.0), (C64::new(0.0, 3.0), C64::new(0.0, 0.0)));
        assert!(q_schedule(&QConfig::Sampled { times: vec![0.0, 1.0], values: vec![[1.0, 0.0], [-1.0, 0.0]] }).is_err());
        assert!(q_schedule(&QConfig::Constant([0.0, 0.0])).is_err());
    }
}
