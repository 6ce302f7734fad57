//! Direct simulation on the torus: point clouds, density transport and
//! correlation functions propagated with the truncated transfer matrix.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::matvec;
use crate::maps::{wrap_unit, MapSystem};
use crate::par;
use crate::transfer::{assemble_quadrature, default_quad_points, FourierTruncation};

/// Seed of the reference mixing run.
pub const REFERENCE_SEED: u64 = 19;
/// Values of `|C(n)|` at or below this cannot enter a log fit.
pub const FIT_FLOOR: f64 = 1e-14;
/// Extra modes beyond `|nu| max|tau'| / 2 pi` kept clear for the Bessel tail.
pub const BAND_MARGIN: usize = 40;

/// Points `(x, s)` on the torus at time `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<(f64, f64)>,
    pub seed: Option<u64>,
    pub time: usize,
}

impl PointCloud {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        let points = points
            .into_iter()
            .map(|(x, s)| (wrap_unit(x.rem_euclid(1.0)), wrap_unit(s.rem_euclid(1.0))))
            .collect();
        Self {
            points,
            seed: None,
            time: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `count` points with independent normal offsets of width `sigma` around
/// `center`, wrapped to the torus. The generator is ChaCha20 seeded from
/// `seed`, drawing `x` then `s` for each point.
pub fn gaussian_cloud(
    center: (f64, f64),
    sigma: f64,
    count: usize,
    seed: u64,
) -> Result<PointCloud> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid("sigma", e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            let dx = normal.sample(&mut rng);
            let ds = normal.sample(&mut rng);
            (center.0 + dx, center.1 + ds)
        })
        .collect();
    let mut cloud = PointCloud::new(points);
    cloud.seed = Some(seed);
    Ok(cloud)
}

/// `count` points with `x` uniform and `s = s0`.
pub fn uniform_x_cloud(count: usize, s0: f64, seed: u64) -> PointCloud {
    use rand::Rng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let points = (0..count).map(|_| (rng.random::<f64>(), s0)).collect();
    let mut cloud = PointCloud::new(points);
    cloud.seed = Some(seed);
    cloud
}

/// Apply the skew product `steps` times to every point.
pub fn evolve_cloud(sys: &MapSystem, cloud: &PointCloud, steps: usize) -> PointCloud {
    let points = par::map_slice(&cloud.points, |&(x, s)| {
        (0..steps).fold((x, s), |(x, s), _| sys.evaluate_f(x, s))
    });
    PointCloud {
        points,
        seed: cloud.seed,
        time: cloud.time + steps,
    }
}

/// Counts on a `bins x bins` grid, row-major over `x`.
pub fn histogram(cloud: &PointCloud, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins * bins];
    for &(x, s) in &cloud.points {
        let i = ((x * bins as f64) as usize).min(bins - 1);
        let j = ((s * bins as f64) as usize).min(bins - 1);
        h[i * bins + j] += 1;
    }
    h
}

/// Pearson chi-square against the uniform distribution, divided by the
/// `cells - 1` degrees of freedom.
pub fn chi_square_per_dof(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let cells = counts.len() as f64;
    let expected = total as f64 / cells;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    chi2 / (cells - 1.0)
}

pub fn uniformity_statistic(cloud: &PointCloud, bins: usize) -> f64 {
    chi_square_per_dof(&histogram(cloud, bins))
}

/// `(L psi)(y_j) = sum_eps psi(x_eps) / E'(x_eps)` on `y_j = j / n`, the
/// Perron-Frobenius image of a fiber-independent density.
pub fn transfer_density<F>(sys: &MapSystem, psi: F, n: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let vals: Vec<Result<f64>> = par::map_range(n, |j| {
        let y = j as f64 / n as f64;
        (0..sys.k()).try_fold(0.0, |acc, eps| {
            let x = sys.inverse_branch(y, eps)?;
            Ok(acc + psi(x) / sys.expand_deriv(x))
        })
    });
    vals.into_iter().collect()
}

/// Trigonometric polynomial `sum_m c_m exp(i 2 pi m x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub coeffs: Vec<(i64, Complex64)>,
}

impl TestFunction {
    pub fn new(coeffs: Vec<(i64, Complex64)>) -> Self {
        Self { coeffs }
    }

    pub fn constant() -> Self {
        Self::mode(0)
    }

    /// `exp(i 2 pi m x)`.
    pub fn mode(m: i64) -> Self {
        Self {
            coeffs: vec![(m, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn support(&self) -> usize {
        self.coeffs
            .iter()
            .map(|(m, _)| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|&(m, c)| c * Complex64::from_polar(1.0, TAU * m as f64 * x))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.vector_norm()
    }

    fn vector_norm(&self) -> f64 {
        let mut acc = std::collections::BTreeMap::new();
        for &(m, c) in &self.coeffs {
            *acc.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        acc.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn to_vector(&self, trunc: FourierTruncation) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); trunc.dim()];
        for &(m, c) in &self.coeffs {
            v[trunc.index(m).expect("support checked")] += c;
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub nu: i64,
    /// `C(n)` for `n = 0..=n_max`.
    pub values: Vec<Complex64>,
    pub psi1: TestFunction,
    pub psi2: TestFunction,
    pub truncation: usize,
}

/// Modes `|n| <= N` only ever receive mass from modes `|n| <= N` once
/// `(E_min - 1) N >= ceil(|nu| max|tau'| / 2 pi) + BAND_MARGIN`; the
/// truncated recurrence is then exact up to the Bessel-type tail.
pub fn required_truncation(sys: &MapSystem, nu: f64) -> usize {
    let band = (nu.abs() * sys.tau().max_abs_deriv() / TAU).ceil() as usize + BAND_MARGIN;
    (band as f64 / (sys.e_min() - 1.0)).ceil() as usize
}

/// `C(n) = (psi2, F_nu^n psi1)` by repeated matrix-vector products.
pub fn correlation_series(
    sys: &MapSystem,
    nu: i64,
    psi1: &TestFunction,
    psi2: &TestFunction,
    n_max: usize,
    trunc: FourierTruncation,
) -> Result<CorrelationSeries> {
    let support = psi1.support().max(psi2.support());
    let required = required_truncation(sys, nu as f64).max(support);
    if trunc.n() < required {
        return Err(Error::TruncationOverflow {
            required,
            available: trunc.n(),
        });
    }
    let q = default_quad_points(sys, nu as f64, trunc);
    let m = assemble_quadrature(sys, nu as f64, trunc, q)?;
    let w = psi2.to_vector(trunc);
    let mut v = psi1.to_vector(trunc);
    let inner = |v: &[Complex64]| -> Complex64 { w.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(inner(&v));
    for _ in 0..n_max {
        v = matvec(&m.entries, &v);
        values.push(inner(&v));
    }
    Ok(CorrelationSeries {
        nu,
        values,
        psi1: psi1.clone(),
        psi2: psi2.clone(),
        truncation: trunc.n(),
    })
}

/// Least-squares line through `log|C(n)|` on a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `exp(slope)`.
    pub rho: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log fit.
    pub residual_rms: f64,
    pub n_lo: usize,
    pub n_hi: usize,
}

pub fn fit_decay_rate(series: &CorrelationSeries, n_lo: usize, n_hi: usize) -> Result<DecayFit> {
    fit_decay_values(&series.values, n_lo, n_hi)
}

pub fn fit_decay_values(values: &[Complex64], n_lo: usize, n_hi: usize) -> Result<DecayFit> {
    if n_hi <= n_lo {
        return Err(invalid(
            "window",
            format!("need n_lo < n_hi, got [{n_lo}, {n_hi}]"),
        ));
    }
    if n_hi >= values.len() {
        return Err(invalid(
            "window",
            format!("n_hi = {n_hi} beyond series length {}", values.len()),
        ));
    }
    let mut pts = Vec::with_capacity(n_hi - n_lo + 1);
    for (n, c) in values.iter().enumerate().take(n_hi + 1).skip(n_lo) {
        let a = c.norm();
        if a <= FIT_FLOOR {
            return Err(Error::WindowUnderflow { n, value: a });
        }
        pts.push((n as f64, a.ln()));
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_rms = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(DecayFit {
        rho: slope.exp(),
        slope,
        intercept,
        residual_rms,
        n_lo,
        n_hi,
    })
}

/// Monte Carlo estimate of `E[phi(x) exp(i 2 pi nu s)]` over a cloud.
pub fn cloud_fourier_average(cloud: &PointCloud, nu: i64, phi: &TestFunction) -> Complex64 {
    let sum: Complex64 = cloud
        .points
        .iter()
        .map(|&(x, s)| phi.eval(x) * Complex64::from_polar(1.0, TAU * nu as f64 * s))
        .sum();
    sum / cloud.len() as f64
}
