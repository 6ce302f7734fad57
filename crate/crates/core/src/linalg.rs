//! Small dense complex linear-algebra helpers.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;

/// `|re| + |im|`, the cheap modulus used for scaling decisions.
#[inline]
pub(crate) fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn conj_transpose(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = a.dim();
    let (m2, p) = b.dim();
    assert_eq!(m, m2);
    let mut out = Array2::zeros((n, p));
    for i in 0..n {
        for k in 0..m {
            let aik = a[[i, k]];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..p {
                out[[i, j]] += aik * b[[k, j]];
            }
        }
    }
    out
}

pub fn matvec(a: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let (n, m) = a.dim();
    assert_eq!(m, v.len());
    (0..n)
        .map(|i| {
            let row = a.row(i);
            row.iter().zip(v).map(|(x, y)| x * y).sum()
        })
        .collect()
}

/// Principal square block of `a` shared by rows/cols `lo..hi`.
pub fn central_block(a: &CMatrix, lo: usize, hi: usize) -> CMatrix {
    a.slice(ndarray::s![lo..hi, lo..hi]).to_owned()
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let (n, m) = a.dim();
        assert_eq!(n, m, "LU needs a square matrix");
        let mut lu: Vec<Complex64> = a.iter().copied().collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = x[i] - row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum::<Complex64>();
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = x[i] - row.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum::<Complex64>();
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    pub fn det(&self) -> Complex64 {
        let n = self.n;
        (0..n).fold(Complex64::new(self.sign, 0.0), |acc, i| {
            acc * self.lu[i * n + i]
        })
    }
}

/// Determinant via LU; zero for singular input.
pub fn determinant(a: &CMatrix) -> Complex64 {
    match Lu::new(a) {
        Ok(lu) => lu.det(),
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let lu = Lu::new(a)?;
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let col = lu.solve(&e);
        for i in 0..n {
            out[[i, j]] = col[i];
        }
    }
    Ok(out)
}
