//! Lifted dynamics on the cover `R x R`: the hyperbolic fixed point, its
//! stable manifold `xi = S(x)`, the translate-counting form of captivity and
//! the complexified slice `S^c(x + m)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::maps::{MapSystem, TrigSeries};
use crate::par;
use crate::phasespace::{BranchSequence, GridSpec, PhasePoint, ENUMERATION_CAP};

/// Point on the cover; `x` is not reduced mod 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub x: f64,
    pub xi: f64,
}

impl LiftedPoint {
    pub fn new(x: f64, xi: f64) -> Self {
        Self { x, xi }
    }

    /// Projection to the cylinder.
    pub fn project(&self) -> PhasePoint {
        PhasePoint::new(self.x, self.xi)
    }
}

/// `|E(0)|` above this counts as violating the `E(0) = 0` convention.
const FIXED_POINT_TOL: f64 = 1e-12;

fn check_origin_fixed(sys: &MapSystem) -> Result<()> {
    let value = sys.lift(0.0);
    if value.abs() > FIXED_POINT_TOL {
        return Err(Error::FixedPointConvention { value });
    }
    Ok(())
}

/// `I = (0, -tau'(0) / (E'(0) - 1))`.
pub fn fixed_point(sys: &MapSystem) -> Result<LiftedPoint> {
    check_origin_fixed(sys)?;
    Ok(LiftedPoint {
        x: 0.0,
        xi: -sys.tau().deriv(0.0) / (sys.expand_deriv(0.0) - 1.0),
    })
}

/// `x' = E^{-1}(x)` on the cover, `xi' = E'(x') xi + tau'(x')`.
pub fn lifted_step(sys: &MapSystem, p: LiftedPoint) -> Result<LiftedPoint> {
    let x1 = sys.lifted_inverse(p.x)?;
    Ok(LiftedPoint {
        x: x1,
        xi: sys.expand_deriv(x1) * p.xi + sys.tau().deriv(x1),
    })
}

/// `n`-fold [`lifted_step`].
pub fn lifted_trajectory(sys: &MapSystem, p0: LiftedPoint, n: usize) -> Result<LiftedPoint> {
    (0..n).try_fold(p0, |p, _| lifted_step(sys, p))
}

/// All iterates `p_0..=p_n`.
pub fn lifted_orbit(sys: &MapSystem, p0: LiftedPoint, n: usize) -> Result<Vec<LiftedPoint>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(p0);
    for _ in 0..n {
        let next = lifted_step(sys, *out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

/// `prod_{q=1..n} E'(x_{-q})`: derivative of `E^n` at `E^{-n}(x)`.
pub fn backward_expansion(sys: &MapSystem, x: f64, n: usize) -> Result<f64> {
    let mut y = x;
    let mut d = 1.0;
    for _ in 0..n {
        y = sys.lifted_inverse(y)?;
        d *= sys.expand_deriv(y);
    }
    Ok(d)
}

/// `S(x) = -sum_{p>=1} tau'(x_{-p}) / prod_{q=1..p} E'(x_{-q})`, truncated
/// after a number of terms fixed in advance by the geometric tail bound
/// `max|tau'| E_min^{-P} / (E_min - 1) < tol`.
#[derive(Clone, Debug)]
pub struct StableManifold {
    sys: MapSystem,
    terms: usize,
    tol: f64,
}

impl StableManifold {
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `max|tau'| / (E_min - 1)`.
    pub fn sup_bound(&self) -> f64 {
        self.sys.tau().max_abs_deriv() / (self.sys.e_min() - 1.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let mut y = x;
        let mut d = 1.0;
        let mut s = 0.0;
        for _ in 0..self.terms {
            y = self.sys.lifted_inverse(y)?;
            d *= self.sys.expand_deriv(y);
            s -= self.sys.tau().deriv(y) / d;
        }
        Ok(s)
    }

    /// `S(E^{-1} x) - E'(E^{-1} x) S(x) - tau'(E^{-1} x)`.
    pub fn cohomological_residual(&self, x: f64) -> Result<f64> {
        let y = self.sys.lifted_inverse(x)?;
        Ok(self.eval(y)? - self.sys.expand_deriv(y) * self.eval(x)? - self.sys.tau().deriv(y))
    }
}

pub fn stable_manifold(sys: &MapSystem, tol: f64) -> Result<StableManifold> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    let e = sys.e_min();
    let amp = sys.tau().max_abs_deriv();
    let mut terms = 0usize;
    let mut tail = amp / (e - 1.0);
    while tail >= tol {
        terms += 1;
        tail /= e;
        if terms > 10_000 {
            return Err(invalid("tol", format!("{tol} needs more than 10000 terms")));
        }
    }
    Ok(StableManifold {
        sys: sys.clone(),
        terms,
        tol,
    })
}

/// Branch word reached from translate `p`: letter `j` is the `j`-th least
/// significant base-`k` digit of `p`, so the first branch choice is `p mod k`.
pub fn word_for_translate(p: u64, k: u32, n: usize) -> BranchSequence {
    let mut rest = p;
    let word = (0..n)
        .map(|_| {
            let d = (rest % k as u64) as u32;
            rest /= k as u64;
            d
        })
        .collect();
    BranchSequence { word }
}

pub fn translate_for_word(word: &BranchSequence, k: u32) -> u64 {
    word.word
        .iter()
        .rev()
        .fold(0u64, |acc, &d| acc * k as u64 + d as u64)
}

/// `max` over grid `x` and all `xi` of `#{p in [0, k^n) : |xi - S(x + p)| <= R~ / k^n}`.
///
/// The supremum over `xi` is exact: sort the `k^n` values and slide a window
/// of width `2 R~ / k^n`.
pub fn alt_captivity_count(
    sys: &MapSystem,
    manifold: &StableManifold,
    n: usize,
    r_tilde: f64,
    grid: GridSpec,
) -> Result<u64> {
    if !sys.is_linear() {
        return Err(Error::Unsupported {
            what: "a linear expanding map E(x) = kx",
        });
    }
    if !(r_tilde > 0.0) {
        return Err(invalid(
            "R_tilde",
            format!("must be positive, got {r_tilde}"),
        ));
    }
    let k = sys.k() as u128;
    let count = k.checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            requested: count,
            cap: ENUMERATION_CAP,
        });
    }
    let count = count as u64;
    let width = 2.0 * r_tilde / count as f64;
    let per_x: Vec<Result<u64>> = par::map_range(grid.nx, |i| {
        let x = i as f64 / grid.nx as f64;
        let mut vals = (0..count)
            .map(|p| manifold.eval(x + p as f64))
            .collect::<Result<Vec<f64>>>()?;
        vals.sort_by(f64::total_cmp);
        let mut best = 0usize;
        let mut lo = 0usize;
        for hi in 0..vals.len() {
            while vals[hi] - vals[lo] > width {
                lo += 1;
            }
            best = best.max(hi - lo + 1);
        }
        Ok(best as u64)
    });
    per_x.into_iter().try_fold(0u64, |m, c| Ok(m.max(c?)))
}

/// Terms needed for the slice series tail `2 pi 2^{-P}` to drop below 1e-10.
pub fn min_fractal_terms() -> usize {
    let mut p = 0;
    while TAU * 0.5f64.powi(p as i32) >= 1e-10 {
        p += 1;
    }
    p
}

fn is_doubling_cos(sys: &MapSystem) -> bool {
    sys.k() == 2
        && sys.is_linear()
        && sys
            .tau()
            .series()
            .is_some_and(|s| *s == TrigSeries::cos1(1.0))
}

/// `S^c(x + m) = sum_{p=1..P} (2 pi / 2^p) exp(i 2 pi (x + m) / 2^p)` for
/// `m = -m_range..=m_range`; `Im S^c = S`.
pub fn fractal_slice(
    sys: &MapSystem,
    x: f64,
    m_range: u64,
    p_terms: usize,
) -> Result<Vec<(i64, Complex64)>> {
    if !is_doubling_cos(sys) {
        return Err(Error::Unsupported {
            what: "the doubling map with roof cos 2 pi x",
        });
    }
    if m_range == 0 {
        return Err(invalid("m_range", "must be >= 1"));
    }
    let need = min_fractal_terms();
    if p_terms < need {
        return Err(invalid(
            "p_terms",
            format!("need >= {need} for a 1e-10 tail, got {p_terms}"),
        ));
    }
    let m_range = m_range as i64;
    let count = (2 * m_range + 1) as usize;
    Ok(par::map_range(count, |idx| {
        let m = idx as i64 - m_range;
        let t = x + m as f64;
        let mut scale = 1.0;
        let mut s = Complex64::new(0.0, 0.0);
        for _ in 0..p_terms {
            scale *= 0.5;
            s += Complex64::from_polar(TAU * scale, TAU * t * scale);
        }
        (m, s)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

pub fn bounding_box(points: &[(i64, Complex64)]) -> BoundingBox {
    points.iter().fold(
        BoundingBox {
            re_min: f64::INFINITY,
            re_max: f64::NEG_INFINITY,
            im_min: f64::INFINITY,
            im_max: f64::NEG_INFINITY,
        },
        |b, (_, z)| BoundingBox {
            re_min: b.re_min.min(z.re),
            re_max: b.re_max.max(z.re),
            im_min: b.im_min.min(z.im),
            im_max: b.im_max.max(z.im),
        },
    )
}
