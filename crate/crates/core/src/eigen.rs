//! Eigenvalues of dense complex non-Hermitian matrices.
//!
//! Pipeline: diagonal balancing by powers of two, Householder reduction to
//! upper Hessenberg form, then implicit single-shift complex QR with Givens
//! rotations and Wilkinson shifts. Only the active window is updated, which
//! is all that eigenvalues need.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{abs1, CMatrix, Lu};

/// Subdiagonal entries below this fraction of their diagonal neighbours are
/// set to zero.
pub const DEFLATION_TOL: f64 = 1e-14;
/// Total QR sweeps allowed per matrix dimension.
pub const SWEEPS_PER_DIM: usize = 60;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Where a spectrum came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSource {
    pub nu: f64,
    pub truncation: usize,
    pub method: String,
}

impl Default for SpectrumSource {
    fn default() -> Self {
        Self {
            nu: 0.0,
            truncation: 0,
            method: "matrix".into(),
        }
    }
}

/// Eigenvalues sorted by descending modulus, ties by ascending phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
    pub source: SpectrumSource,
    /// Max relative residual `|Mv - lv| / |v|` when eigenvectors were computed.
    pub residual_bound: Option<f64>,
}

impl Spectrum {
    pub fn from_values(mut eigenvalues: Vec<Complex64>, source: SpectrumSource) -> Self {
        sort_spectrum(&mut eigenvalues);
        Self {
            eigenvalues,
            source,
            residual_bound: None,
        }
    }

    pub fn compute(m: &CMatrix, source: SpectrumSource) -> Result<Self> {
        Ok(Self::from_values(eigenvalues(m)?, source))
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Modulus of the leading eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |z| z.norm())
    }

    /// Number of eigenvalues with `|l| >= lambda`.
    pub fn count_above(&self, lambda: f64) -> Result<usize> {
        if !(lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        Ok(self
            .eigenvalues
            .iter()
            .filter(|z| z.norm() >= lambda)
            .count())
    }

    pub fn above(&self, floor: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|z| z.norm() >= floor)
            .collect()
    }

    /// Distance from each eigenvalue with modulus `>= floor` to its nearest
    /// neighbour in that set.
    pub fn nearest_neighbor_spacings(&self, floor: f64) -> Vec<f64> {
        let pts = self.above(floor);
        pts.iter()
            .enumerate()
            .map(|(i, a)| {
                pts.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| (a - b).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    pub fn conj(&self) -> Spectrum {
        Spectrum::from_values(
            self.eigenvalues.iter().map(|z| z.conj()).collect(),
            self.source.clone(),
        )
    }
}

fn phase(z: Complex64) -> f64 {
    let p = z.im.atan2(z.re);
    if p < 0.0 {
        p + TAU
    } else {
        p
    }
}

/// Moduli are compared on a 1e-12 grid so conjugate pairs tie.
fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        let ka = (a.norm() * 1e12).round() as i64;
        let kb = (b.norm() * 1e12).round() as i64;
        kb.cmp(&ka).then(phase(*a).total_cmp(&phase(*b)))
    });
}

/// Symmetric Hausdorff distance between the eigenvalues of modulus
/// `>= floor` of two spectra.
pub fn hausdorff_gap(a: &Spectrum, b: &Spectrum, floor: f64) -> Result<f64> {
    if !(floor > 0.0) {
        return Err(invalid("floor", format!("must be positive, got {floor}")));
    }
    Ok(hausdorff(&a.above(floor), &b.above(floor)))
}

/// Symmetric Hausdorff distance between finite point sets in the plane.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |p: &[Complex64], q: &[Complex64]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Spectral radius compared against a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapVerdict {
    pub spectral_radius: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    /// `bound - spectral_radius`; negative when violated.
    pub margin: f64,
}

impl GapVerdict {
    pub fn evaluate(spec: &Spectrum, bound: f64, tolerance: f64) -> Self {
        let r = spec.spectral_radius();
        Self {
            spectral_radius: r,
            bound,
            tolerance,
            satisfied: r <= bound + tolerance,
            margin: bound - r,
        }
    }
}

/// All eigenvalues of a square complex matrix, unsorted.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let (n, cols) = m.dim();
    if n != cols {
        return Err(invalid("matrix", format!("not square: {n}x{cols}")));
    }
    if n == 0 {
        return Err(invalid("matrix", "dimension must be >= 1"));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("matrix", "entries must be finite"));
    }
    let mut a: Vec<Complex64> = m.iter().copied().collect();
    balance(&mut a, n);
    hessenberg(&mut a, n);
    hessenberg_qr(&mut a, n)
}

/// Scale rows and columns by powers of two until their off-diagonal norms
/// are comparable. Similarity transform; eigenvalues unchanged.
fn balance(a: &mut [Complex64], n: usize) {
    const RADIX: f64 = 2.0;
    let mut converged = false;
    let mut rounds = 0;
    while !converged && rounds < 100 {
        converged = true;
        rounds += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[j * n + i]);
                    r += abs1(a[i * n + j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / RADIX {
                f *= RADIX;
                cc *= RADIX;
                rr /= RADIX;
            }
            while cc >= rr * RADIX {
                f /= RADIX;
                cc /= RADIX;
                rr *= RADIX;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[i * n + j] /= f;
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form in place.
fn hessenberg(a: &mut [Complex64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n)
            .map(|i| a[i * n + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let unit = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -unit * norm;
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- (I - beta v v^H) A
        for j in k..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += v[i].conj() * a[i * n + j];
            }
            s *= beta;
            for i in k + 1..n {
                a[i * n + j] -= v[i] * s;
            }
        }
        // A <- A (I - beta v v^H)
        for i in 0..n {
            let row = &mut a[i * n..(i + 1) * n];
            let mut s = ZERO;
            for j in k + 1..n {
                s += row[j] * v[j];
            }
            s *= beta;
            for j in k + 1..n {
                row[j] -= s * v[j].conj();
            }
        }
        a[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            a[i * n + k] = ZERO;
        }
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let bc = b * c;
    let disc = (half * half + bc).sqrt();
    let plus = half + disc;
    let minus = half - disc;
    let den = if plus.norm() >= minus.norm() {
        plus
    } else {
        minus
    };
    if den == ZERO {
        d
    } else {
        d - bc / den
    }
}

fn hessenberg_qr(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    let mut ev = vec![ZERO; n];
    let cap = SWEEPS_PER_DIM * n.max(1);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n as isize - 1;
    let at = |i: usize, j: usize| i * n + j;
    while hi >= 0 {
        let hu = hi as usize;
        // locate the start of the unreduced block ending at hu
        let mut l = hu;
        while l > 0 {
            let s = abs1(h[at(l - 1, l - 1)]) + abs1(h[at(l, l)]);
            let s = if s == 0.0 {
                // fall back to the local row/column scale
                abs1(h[at(l - 1, l)]) + abs1(h[at(l, l - 1)]) + f64::MIN_POSITIVE
            } else {
                s
            };
            if abs1(h[at(l, l - 1)]) <= DEFLATION_TOL * s {
                h[at(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hu {
            ev[hu] = h[at(hu, hu)];
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > cap {
            return Err(Error::NoConvergence { iterations: total });
        }
        let mu = if its.is_multiple_of(10) {
            h[at(hu, hu)] + 0.75 * h[at(hu, hu - 1)].re.abs()
        } else {
            wilkinson_shift(
                h[at(hu - 1, hu - 1)],
                h[at(hu - 1, hu)],
                h[at(hu, hu - 1)],
                h[at(hu, hu)],
            )
        };
        for k in l..hu {
            let (x, y) = if k == l {
                (h[at(l, l)] - mu, h[at(l + 1, l)])
            } else {
                (h[at(k, k - 1)], h[at(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let jstart = if k == l { l } else { k - 1 };
            for j in jstart..=hu {
                let p = h[at(k, j)];
                let q = h[at(k + 1, j)];
                h[at(k, j)] = p * c + s * q;
                h[at(k + 1, j)] = q * c - s.conj() * p;
            }
            let iend = (k + 2).min(hu);
            for i in l..=iend {
                let p = h[at(i, k)];
                let q = h[at(i, k + 1)];
                h[at(i, k)] = p * c + q * s.conj();
                h[at(i, k + 1)] = q * c - p * s;
            }
            if k > l {
                h[at(k + 1, k - 1)] = ZERO;
            }
        }
    }
    Ok(ev)
}

/// Eigenvector for a converged eigenvalue by shifted inverse iteration.
/// Returns the unit vector and the relative residual `|Mv - lv| / |v|`.
pub fn eigenvector(m: &CMatrix, lambda: Complex64) -> Result<(Vec<Complex64>, f64)> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut shifted = m.clone();
    let mut offset = Complex64::new(1e-10 * scale, 1e-10 * scale);
    let lu = loop {
        for i in 0..n {
            shifted[[i, i]] = m[[i, i]] - lambda - offset;
        }
        match Lu::new(&shifted) {
            Ok(lu) => break lu,
            Err(_) => offset *= 10.0,
        }
        if offset.norm() > 1e-3 * scale {
            return Err(Error::Singular);
        }
    };
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * (i as f64).sin(), 0.3 * (i as f64).cos()))
        .collect();
    for _ in 0..4 {
        v = lu.solve(&v);
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= nrm);
    }
    let mv = crate::linalg::matvec(m, &v);
    let res = mv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok((v, res))
}

/// Spectrum plus eigenvectors for every eigenvalue; fills `residual_bound`.
pub fn spectrum_with_vectors(
    m: &CMatrix,
    source: SpectrumSource,
) -> Result<(Spectrum, Vec<Vec<Complex64>>)> {
    let mut spec = Spectrum::compute(m, source)?;
    let mut vecs = Vec::with_capacity(spec.len());
    let mut worst: f64 = 0.0;
    for &l in spec.eigenvalues() {
        let (v, r) = eigenvector(m, l)?;
        worst = worst.max(r);
        vecs.push(v);
    }
    spec.residual_bound = Some(worst);
    Ok((spec, vecs))
}
