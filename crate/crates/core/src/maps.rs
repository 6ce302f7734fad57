//! Expanding circle maps, roof functions and the skew product on the torus.
//!
//! A [`MapSystem`] is the triple `(k, g, tau)`: the circle map is
//! `E(x) = k g(x) mod 1` and the skew product is
//! `f(x, s) = (E(x), s + tau(x) / 2pi)` on `T^2 = (R/Z)^2`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Shared real-valued evaluator.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const PERIODIC_TOL: f64 = 1e-12;
const VALIDATION_SAMPLES: usize = 257;
/// Grid used for `E_min` at construction.
pub const DEFAULT_EMIN_GRID: usize = 4096;
/// Grid used for extrema of `tau`, `tau'` and `eta'`.
pub const EXTREMA_GRID: usize = 16384;
const INVERSE_TOL: f64 = 1e-14;

/// Finite trigonometric series
/// `c + sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)`, harmonics starting at j = 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrigSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { constant, cos, sin }
    }

    pub fn cos1(amplitude: f64) -> Self {
        Self::new(0.0, vec![amplitude], vec![])
    }

    pub fn sin1(amplitude: f64) -> Self {
        Self::new(0.0, vec![], vec![amplitude])
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.constant;
        let harmonics = self.cos.len().max(self.sin.len());
        for j in 1..=harmonics {
            let (s, c) = (TAU * j as f64 * x).sin_cos();
            acc += self.cos.get(j - 1).copied().unwrap_or(0.0) * c
                + self.sin.get(j - 1).copied().unwrap_or(0.0) * s;
        }
        acc
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let harmonics = self.cos.len().max(self.sin.len());
        for j in 1..=harmonics {
            let w = TAU * j as f64;
            let (s, c) = (w * x).sin_cos();
            acc += w
                * (-self.cos.get(j - 1).copied().unwrap_or(0.0) * s
                    + self.sin.get(j - 1).copied().unwrap_or(0.0) * c);
        }
        acc
    }
}

/// Smooth 1-periodic function with its derivative.
#[derive(Clone)]
pub struct PeriodicFn {
    value: RealFn,
    deriv: RealFn,
    series: Option<TrigSeries>,
}

impl fmt::Debug for PeriodicFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.series {
            Some(s) => f.debug_tuple("PeriodicFn").field(s).finish(),
            None => f.write_str("PeriodicFn(<closure>)"),
        }
    }
}

impl PeriodicFn {
    pub fn new(value: RealFn, deriv: RealFn) -> Self {
        Self {
            value,
            deriv,
            series: None,
        }
    }

    pub fn from_series(series: TrigSeries) -> Self {
        let a = series.clone();
        let b = series.clone();
        Self {
            value: Arc::new(move |x| a.eval(x)),
            deriv: Arc::new(move |x| b.deriv(x)),
            series: Some(series),
        }
    }

    pub fn zero() -> Self {
        Self::from_series(TrigSeries::default())
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    pub fn series(&self) -> Option<&TrigSeries> {
        self.series.as_ref()
    }

    /// Sampled check of `f(x+1) = f(x)`.
    pub fn validate_periodic(&self) -> Result<()> {
        for i in 0..VALIDATION_SAMPLES {
            let x = i as f64 / VALIDATION_SAMPLES as f64;
            let d = (self.eval(x + 1.0) - self.eval(x)).abs();
            let scale = self.eval(x).abs().max(1.0);
            if !(d <= PERIODIC_TOL * scale) {
                return Err(Error::NotPeriodic { x, deviation: d });
            }
        }
        Ok(())
    }

    /// `max |f|` over a uniform grid.
    pub fn max_abs(&self) -> f64 {
        grid_fold(EXTREMA_GRID, |x| self.eval(x).abs(), f64::max, 0.0)
    }

    /// `(min f', max f')` over a uniform grid.
    pub fn deriv_range(&self) -> (f64, f64) {
        let lo = grid_fold(EXTREMA_GRID, |x| self.deriv(x), f64::min, f64::INFINITY);
        let hi = grid_fold(EXTREMA_GRID, |x| self.deriv(x), f64::max, f64::NEG_INFINITY);
        (lo, hi)
    }

    pub fn max_abs_deriv(&self) -> f64 {
        let (lo, hi) = self.deriv_range();
        lo.abs().max(hi.abs())
    }
}

fn grid_fold(n: usize, f: impl Fn(f64) -> f64, op: impl Fn(f64, f64) -> f64, init: f64) -> f64 {
    (0..n).map(|i| f(i as f64 / n as f64)).fold(init, op)
}

/// Orientation-preserving circle diffeomorphism given by its lift
/// `g: R -> R` with `g(x+1) = g(x) + 1` and `g' > 0`.
#[derive(Clone)]
pub struct CircleDiffeo {
    lift: RealFn,
    deriv: RealFn,
    inverse: Option<RealFn>,
    perturbation: Option<TrigSeries>,
}

impl fmt::Debug for CircleDiffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleDiffeo")
            .field("perturbation", &self.perturbation)
            .field("closed_form_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl CircleDiffeo {
    pub fn identity() -> Self {
        Self {
            lift: Arc::new(|x| x),
            deriv: Arc::new(|_| 1.0),
            inverse: Some(Arc::new(|y| y)),
            perturbation: Some(TrigSeries::default()),
        }
    }

    /// `g(x) = x + p(x)` for a periodic series `p`.
    pub fn from_perturbation(p: TrigSeries) -> Self {
        if p.is_zero() {
            return Self::identity();
        }
        let a = p.clone();
        let b = p.clone();
        Self {
            lift: Arc::new(move |x| x + a.eval(x)),
            deriv: Arc::new(move |x| 1.0 + b.deriv(x)),
            inverse: None,
            perturbation: Some(p),
        }
    }

    /// Black-box lift and derivative; the inverse is found numerically.
    pub fn new(lift: RealFn, deriv: RealFn) -> Self {
        Self {
            lift,
            deriv,
            inverse: None,
            perturbation: None,
        }
    }

    pub fn with_inverse(mut self, inverse: RealFn) -> Self {
        self.inverse = Some(inverse);
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.lift)(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    pub fn perturbation(&self) -> Option<&TrigSeries> {
        self.perturbation.as_ref()
    }

    /// True when `g(x) = x` on a sample grid.
    pub fn is_identity(&self) -> bool {
        if let Some(p) = &self.perturbation {
            return p.is_zero();
        }
        (0..VALIDATION_SAMPLES).all(|i| {
            let x = i as f64 / VALIDATION_SAMPLES as f64;
            (self.eval(x) - x).abs() <= PERIODIC_TOL
        })
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..VALIDATION_SAMPLES {
            let x = i as f64 / VALIDATION_SAMPLES as f64;
            let d = (self.eval(x + 1.0) - self.eval(x) - 1.0).abs();
            if !(d <= PERIODIC_TOL * self.eval(x).abs().max(1.0)) {
                return Err(Error::NotPeriodic { x, deviation: d });
            }
        }
        for i in 0..DEFAULT_EMIN_GRID {
            let x = i as f64 / DEFAULT_EMIN_GRID as f64;
            let d = self.deriv(x);
            if !(d > 0.0) {
                return Err(Error::NotMonotone { x, derivative: d });
            }
        }
        Ok(())
    }

    /// Solve `g(x) = t` on the real line: bisection to a tight bracket, then
    /// safeguarded Newton.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if let Some(inv) = &self.inverse {
            return Ok(inv(t));
        }
        let shift = self.eval(0.0);
        let mut lo = t - shift - 1.0;
        let mut hi = t - shift + 1.0;
        let mut widen = 0;
        while self.eval(lo) > t || self.eval(hi) < t {
            lo -= 1.0;
            hi += 1.0;
            widen += 1;
            if widen > 64 {
                return Err(Error::RootNotFound { target: t });
            }
        }
        for _ in 0..32 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..50 {
            let r = self.eval(x) - t;
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - r / self.deriv(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= INVERSE_TOL * x.abs().max(1.0) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::RootNotFound { target: t })
    }
}

/// Gauge function `eta` used in coboundary transformations.
#[derive(Clone, Debug)]
pub struct GaugeFunction {
    eta: PeriodicFn,
}

impl GaugeFunction {
    pub fn new(eta: PeriodicFn) -> Result<Self> {
        eta.validate_periodic()?;
        Ok(Self { eta })
    }

    pub fn from_series(series: TrigSeries) -> Self {
        Self {
            eta: PeriodicFn::from_series(series),
        }
    }

    pub fn zero() -> Self {
        Self::from_series(TrigSeries::default())
    }

    pub fn eta(&self) -> &PeriodicFn {
        &self.eta
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eta.eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.eta.deriv(x)
    }

    pub fn negated(&self) -> Self {
        let e = self.eta.clone();
        let d = self.eta.clone();
        let series = self.eta.series().map(|s| TrigSeries {
            constant: -s.constant,
            cos: s.cos.iter().map(|c| -c).collect(),
            sin: s.sin.iter().map(|c| -c).collect(),
        });
        let mut eta = PeriodicFn::new(
            Arc::new(move |x| -e.eval(x)),
            Arc::new(move |x| -d.deriv(x)),
        );
        eta.series = series;
        Self { eta }
    }
}

/// The triple `(k, g, tau)` defining `E` and the skew product `f`.
#[derive(Clone, Debug)]
pub struct MapSystem {
    k: u32,
    g: CircleDiffeo,
    tau: PeriodicFn,
    e_min: f64,
    label: String,
}

impl MapSystem {
    pub fn new(k: u32, g: CircleDiffeo, tau: PeriodicFn, label: impl Into<String>) -> Result<Self> {
        if k < 2 {
            return Err(invalid("k", format!("branch count must be >= 2, got {k}")));
        }
        g.validate()?;
        tau.validate_periodic()?;
        let e_min = min_expansion(k, &g, DEFAULT_EMIN_GRID);
        if !(e_min > 1.0) {
            return Err(Error::ExpansionViolation { e_min });
        }
        Ok(Self {
            k,
            g,
            tau,
            e_min,
            label: label.into(),
        })
    }

    /// `E(x) = k x` with roof `tau`.
    pub fn linear(k: u32, tau: TrigSeries, label: impl Into<String>) -> Result<Self> {
        Self::new(
            k,
            CircleDiffeo::identity(),
            PeriodicFn::from_series(tau),
            label,
        )
    }

    /// The running example: `E(x) = 2x`, `tau(x) = cos(2 pi x)`.
    pub fn doubling_cos() -> Self {
        Self::linear(2, TrigSeries::cos1(1.0), "doubling-cos").expect("valid preset")
    }

    /// `E(x) = 2x`, `tau = 0`.
    pub fn doubling_zero() -> Self {
        Self::linear(2, TrigSeries::default(), "doubling-zero").expect("valid preset")
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn g(&self) -> &CircleDiffeo {
        &self.g
    }

    pub fn tau(&self) -> &PeriodicFn {
        &self.tau
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `E_min` on the default grid of 4096 points.
    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Lift `k g(x)` of `E` on the real line.
    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        self.k as f64 * self.g.eval(x)
    }

    /// `E(x) mod 1`.
    #[inline]
    pub fn expand(&self, x: f64) -> f64 {
        self.lift(x).rem_euclid(1.0)
    }

    /// `E'(x) = k g'(x)`.
    #[inline]
    pub fn expand_deriv(&self, x: f64) -> f64 {
        self.k as f64 * self.g.deriv(x)
    }

    /// One step of the skew product on the torus.
    pub fn evaluate_f(&self, x: f64, s: f64) -> (f64, f64) {
        let x1 = self.expand(x);
        let s1 = (s + self.tau.eval(x) / TAU).rem_euclid(1.0);
        (wrap_unit(x1), wrap_unit(s1))
    }

    /// Preimage `g^{-1}((y + eps)/k) mod 1` on branch `eps`.
    pub fn inverse_branch(&self, y: f64, eps: u32) -> Result<f64> {
        if eps >= self.k {
            return Err(invalid(
                "eps",
                format!("branch {eps} out of range 0..{}", self.k),
            ));
        }
        let x = self.g.inverse((y + eps as f64) / self.k as f64)?;
        Ok(wrap_unit(x.rem_euclid(1.0)))
    }

    /// Inverse of the lift `k g` on the real line.
    pub fn lifted_inverse(&self, x: f64) -> Result<f64> {
        self.g.inverse(x / self.k as f64)
    }

    /// Same system with roof `tau + eta - eta o E`.
    pub fn coboundary(&self, eta: &GaugeFunction) -> MapSystem {
        let tau = self.tau.clone();
        let tau_d = self.tau.clone();
        let eta_v = eta.clone();
        let eta_d = eta.clone();
        let g = self.g.clone();
        let g_d = self.g.clone();
        let k = self.k as f64;
        let value: RealFn =
            Arc::new(move |x| tau.eval(x) + eta_v.eval(x) - eta_v.eval(k * g.eval(x)));
        let deriv: RealFn = Arc::new(move |x| {
            tau_d.deriv(x) + eta_d.deriv(x) - eta_d.deriv(k * g_d.eval(x)) * k * g_d.deriv(x)
        });
        MapSystem {
            k: self.k,
            g: self.g.clone(),
            tau: PeriodicFn::new(value, deriv),
            e_min: self.e_min,
            label: format!("{}+coboundary", self.label),
        }
    }

    /// Replace the roof, keeping `(k, g)`.
    pub fn with_tau(&self, tau: PeriodicFn, label: impl Into<String>) -> Result<MapSystem> {
        tau.validate_periodic()?;
        Ok(MapSystem {
            k: self.k,
            g: self.g.clone(),
            tau,
            e_min: self.e_min,
            label: label.into(),
        })
    }

    /// True for `E(x) = kx`.
    pub fn is_linear(&self) -> bool {
        self.g.is_identity()
    }
}

/// Values within one ulp below 1 round up to 1.0 under `rem_euclid`; keep
/// everything in `[0, 1)`.
#[inline]
pub(crate) fn wrap_unit(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        x
    }
}

fn min_expansion(k: u32, g: &CircleDiffeo, grid: usize) -> f64 {
    (0..grid)
        .map(|i| k as f64 * g.deriv(i as f64 / grid as f64))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum of `E'` over a uniform grid of `grid_size` points.
pub fn emin(sys: &MapSystem, grid_size: usize) -> Result<f64> {
    if grid_size < 64 {
        return Err(invalid("grid_size", format!("need >= 64, got {grid_size}")));
    }
    let e = min_expansion(sys.k, &sys.g, grid_size);
    if !(e > 1.0) {
        return Err(Error::ExpansionViolation { e_min: e });
    }
    Ok(e)
}

/// Serializable description of a map: a named preset or explicit series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSpec {
    pub preset: Option<String>,
    pub k: Option<u32>,
    /// Perturbation `p` in `g(x) = x + p(x)`.
    pub g: Option<TrigSeries>,
    pub tau: Option<TrigSeries>,
}

/// Names accepted by [`MapSpec::preset`].
pub const PRESETS: &[&str] = &[
    "doubling-cos",
    "doubling-zero",
    "doubling-sin",
    "tripling-cos",
];

impl MapSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<MapSystem> {
        let (mut k, mut g, mut tau, mut label) = match self.preset.as_deref() {
            None => (
                2,
                TrigSeries::default(),
                TrigSeries::default(),
                "custom".to_string(),
            ),
            Some("doubling-cos") => (
                2,
                TrigSeries::default(),
                TrigSeries::cos1(1.0),
                "doubling-cos".into(),
            ),
            Some("doubling-zero") => (
                2,
                TrigSeries::default(),
                TrigSeries::default(),
                "doubling-zero".into(),
            ),
            Some("doubling-sin") => (
                2,
                TrigSeries::default(),
                TrigSeries::sin1(1.0),
                "doubling-sin".into(),
            ),
            Some("tripling-cos") => (
                3,
                TrigSeries::default(),
                TrigSeries::cos1(1.0),
                "tripling-cos".into(),
            ),
            Some(other) => {
                return Err(invalid(
                    "preset",
                    format!("unknown preset `{other}`; known: {}", PRESETS.join(", ")),
                ))
            }
        };
        let customized = self.k.is_some() || self.g.is_some() || self.tau.is_some();
        if let Some(v) = self.k {
            k = v;
        }
        if let Some(v) = &self.g {
            g = v.clone();
        }
        if let Some(v) = &self.tau {
            tau = v.clone();
        }
        if customized && self.preset.is_some() {
            label.push_str("+custom");
        }
        MapSystem::new(
            k,
            CircleDiffeo::from_perturbation(g),
            PeriodicFn::from_series(tau),
            label,
        )
    }
}
