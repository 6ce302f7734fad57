//! Truncated Fourier matrices of the reduced transfer operator
//! `(F_nu phi)(x) = phi(E x) exp(i nu tau(x))` and its adjoint.
//!
//! Rows and columns are indexed by modes `n = -N..=N` in ascending order;
//! entry `(n', n)` is `<phi_n', F_nu phi_n>` with `phi_n(x) = exp(i 2 pi n x)`.

use std::f64::consts::TAU;
use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::BesselTable;
use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::maps::{GaugeFunction, MapSystem};
use crate::par;

/// Modes `|n| <= N`, matrix dimension `2N + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FourierTruncation {
    n: usize,
}

impl FourierTruncation {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "truncation must be >= 1"));
        }
        Ok(Self { n })
    }

    /// `ceil(1.6 |nu|) + 32`: the Bessel bandwidth `|m| <~ |nu|` plus a tail margin.
    pub fn auto(nu: f64) -> Self {
        Self {
            n: (1.6 * nu.abs()).ceil() as usize + 32,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let n = self.n as i64;
        -n..=n
    }

    /// Row/column position of mode `m`.
    pub fn index(&self, m: i64) -> Option<usize> {
        let n = self.n as i64;
        (m.abs() <= n).then(|| (m + n) as usize)
    }

    pub fn mode(&self, idx: usize) -> i64 {
        idx as i64 - self.n as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssemblyMethod {
    Quadrature,
    BesselClosedForm,
    AdjointQuadrature,
}

impl AssemblyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Quadrature => "quadrature",
            Self::BesselClosedForm => "bessel-closed-form",
            Self::AdjointQuadrature => "adjoint-quadrature",
        }
    }
}

impl fmt::Display for AssemblyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub entries: CMatrix,
    pub nu: f64,
    pub truncation: FourierTruncation,
    pub method: AssemblyMethod,
    /// Trapezoid nodes used; `None` for closed-form assembly.
    pub quad_points: Option<usize>,
}

impl TransferMatrix {
    pub fn entry(&self, row_mode: i64, col_mode: i64) -> Option<Complex64> {
        let i = self.truncation.index(row_mode)?;
        let j = self.truncation.index(col_mode)?;
        Some(self.entries[[i, j]])
    }

    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }

    pub fn source(&self) -> crate::eigen::SpectrumSource {
        crate::eigen::SpectrumSource {
            nu: self.nu,
            truncation: self.truncation.n(),
            method: self.method.as_str().into(),
        }
    }

    /// Eigenvalues, sorted.
    pub fn spectrum(&self) -> Result<crate::eigen::Spectrum> {
        crate::eigen::Spectrum::compute(&self.entries, self.source())
    }
}

/// `k N + N + ceil(|nu| max|tau|) + 16`: highest frequency in the integrand
/// plus a margin.
fn oscillation_budget(k: u32, n: usize, nu: f64, max_tau: f64) -> usize {
    k as usize * n + n + (nu.abs() * max_tau).ceil() as usize + 16
}

/// Smallest node count accepted by the quadrature assemblers.
pub fn min_quad_points(sys: &MapSystem, nu: f64, trunc: FourierTruncation) -> usize {
    4 * oscillation_budget(sys.k(), trunc.n(), nu, sys.tau().max_abs())
}

/// Default node count, twice the minimum.
pub fn default_quad_points(sys: &MapSystem, nu: f64, trunc: FourierTruncation) -> usize {
    8 * oscillation_budget(sys.k(), trunc.n(), nu, sys.tau().max_abs())
}

fn check_nodes(required: usize, given: usize) -> Result<()> {
    if given < required {
        return Err(Error::InsufficientQuadrature { required, given });
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if !nu.is_finite() {
        return Err(invalid("nu", format!("must be finite, got {nu}")));
    }
    Ok(())
}

/// `exp(-i 2 pi m / q)` for `m = 0..q`; row phases are looked up exactly by
/// reducing `n' j mod q` in integers.
fn root_table(q: usize) -> Vec<Complex64> {
    (0..q)
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 / q as f64))
        .collect()
}

/// Entry `(i, j) = (1/q) sum_l exp(-i 2 pi n'_i l / q) cols[j][l]` with a
/// fixed summation order per entry; parallel over rows. The `1/q` weight is
/// applied after summing so that sums of unit phases stay exact.
fn assemble_from_columns(trunc: FourierTruncation, q: usize, cols: &[Complex64]) -> CMatrix {
    let dim = trunc.dim();
    let roots = root_table(q);
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    par::for_each_chunk_mut(&mut data, dim, |i, row| {
        let np = trunc.mode(i).rem_euclid(q as i64) as usize;
        let phases: Vec<Complex64> = (0..q).map(|l| roots[(np * l) % q]).collect();
        for (j, out) in row.iter_mut().enumerate() {
            let col = &cols[j * q..(j + 1) * q];
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, c) in phases.iter().zip(col) {
                acc += p * c;
            }
            *out = acc / q as f64;
        }
    });
    Array2::from_shape_vec((dim, dim), data).expect("shape matches")
}

/// Fourier matrix of `F_nu` by the trapezoid rule on `quad_points` nodes.
pub fn assemble_quadrature(
    sys: &MapSystem,
    nu: f64,
    trunc: FourierTruncation,
    quad_points: usize,
) -> Result<TransferMatrix> {
    check_nu(nu)?;
    check_nodes(min_quad_points(sys, nu, trunc), quad_points)?;
    let q = quad_points;
    let nodes: Vec<(f64, Complex64)> = par::map_range(q, |l| {
        let x = l as f64 / q as f64;
        let w = Complex64::from_polar(1.0, nu * sys.tau().eval(x));
        (sys.lift(x), w)
    });
    let linear = sys.is_linear();
    let k = sys.k() as i64;
    let dim = trunc.dim();
    let cols: Vec<Complex64> = par::map_range(dim * q, |idx| {
        let (j, l) = (idx / q, idx % q);
        let n = trunc.mode(j);
        let (lift, w) = nodes[l];
        let phase = if linear {
            // E(x_l) = k l / q exactly
            (n * k * l as i64).rem_euclid(q as i64) as f64 / q as f64
        } else {
            (n as f64 * lift).rem_euclid(1.0)
        };
        w * Complex64::from_polar(1.0, TAU * phase)
    });
    Ok(TransferMatrix {
        entries: assemble_from_columns(trunc, q, &cols),
        nu,
        truncation: trunc,
        method: AssemblyMethod::Quadrature,
        quad_points: Some(q),
    })
}

/// `exp(-i 2 pi (3/4) m)` evaluated exactly in quarter turns.
fn three_quarter_phase(m: i64) -> Complex64 {
    match (-3 * m).rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Closed form for `E(x) = 2x`, `tau = cos 2 pi x`:
/// entry `(n', n) = exp(-i 2 pi (3/4) m) J_m(nu)` with `m = 2n - n'`.
pub fn assemble_bessel(nu: f64, trunc: FourierTruncation) -> Result<TransferMatrix> {
    check_nu(nu)?;
    let table = BesselTable::new(nu, 3 * trunc.n());
    let dim = trunc.dim();
    let entries = Array2::from_shape_fn((dim, dim), |(i, j)| {
        let m = 2 * trunc.mode(j) - trunc.mode(i);
        three_quarter_phase(m) * table.get(m)
    });
    Ok(TransferMatrix {
        entries,
        nu,
        truncation: trunc,
        method: AssemblyMethod::BesselClosedForm,
        quad_points: None,
    })
}

/// Fourier matrix of the adjoint
/// `(F_nu^* psi)(y) = sum_eps exp(-i nu tau(x_eps)) / E'(x_eps) psi(x_eps)`
/// over the `k` preimages `x_eps` of `y`.
pub fn assemble_adjoint(
    sys: &MapSystem,
    nu: f64,
    trunc: FourierTruncation,
    quad_points: usize,
) -> Result<TransferMatrix> {
    check_nu(nu)?;
    check_nodes(min_quad_points(sys, nu, trunc), quad_points)?;
    let q = quad_points;
    let k = sys.k();
    // per node: k (preimage, weight) pairs
    let pre: Vec<Result<Vec<(f64, Complex64)>>> = par::map_range(q, |l| {
        let y = l as f64 / q as f64;
        (0..k)
            .map(|eps| {
                let x = sys.inverse_branch(y, eps)?;
                let w = Complex64::from_polar(1.0 / sys.expand_deriv(x), -nu * sys.tau().eval(x));
                Ok((x, w))
            })
            .collect()
    });
    let pre: Vec<Vec<(f64, Complex64)>> = pre.into_iter().collect::<Result<_>>()?;
    let dim = trunc.dim();
    let cols: Vec<Complex64> = par::map_range(dim * q, |idx| {
        let (j, l) = (idx / q, idx % q);
        let n = trunc.mode(j) as f64;
        pre[l]
            .iter()
            .map(|&(x, w)| w * Complex64::from_polar(1.0, TAU * (n * x).rem_euclid(1.0)))
            .sum()
    });
    Ok(TransferMatrix {
        entries: assemble_from_columns(trunc, q, &cols),
        nu,
        truncation: trunc,
        method: AssemblyMethod::AdjointQuadrature,
        quad_points: Some(q),
    })
}

/// Smallest node count for [`gauge_conjugation_matrix`].
pub fn min_gauge_quad_points(eta: &GaugeFunction, nu: f64, trunc: FourierTruncation) -> usize {
    4 * oscillation_budget(1, trunc.n(), nu, eta.eta().max_abs())
}

pub fn default_gauge_quad_points(eta: &GaugeFunction, nu: f64, trunc: FourierTruncation) -> usize {
    8 * oscillation_budget(1, trunc.n(), nu, eta.eta().max_abs())
}

/// Fourier matrix of multiplication by `exp(i nu eta(x))`: the Toeplitz
/// matrix of that function's Fourier coefficients.
pub fn gauge_conjugation_matrix(
    eta: &GaugeFunction,
    nu: f64,
    trunc: FourierTruncation,
    quad_points: usize,
) -> Result<CMatrix> {
    check_nu(nu)?;
    check_nodes(min_gauge_quad_points(eta, nu, trunc), quad_points)?;
    let q = quad_points;
    let samples: Vec<Complex64> = par::map_range(q, |l| {
        let x = l as f64 / q as f64;
        Complex64::from_polar(1.0, nu * eta.eval(x))
    });
    let roots = root_table(q);
    let span = 2 * trunc.n() as i64;
    // c_m for m = -2N..=2N
    let coef: Vec<Complex64> = par::map_range((2 * span + 1) as usize, |i| {
        let m = (i as i64 - span).rem_euclid(q as i64) as usize;
        samples
            .iter()
            .enumerate()
            .map(|(l, s)| roots[(m * l) % q] * s)
            .sum::<Complex64>()
            / q as f64
    });
    let dim = trunc.dim();
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
        let m = trunc.mode(i) - trunc.mode(j);
        coef[(m + span) as usize]
    }))
}

/// Diagnostics from the essential-spectral-radius and gap estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBoundReport {
    pub m: f64,
    /// `E_min^{-|m|} sqrt(k / E_min)`.
    pub r_m: f64,
    /// `1 / sqrt(E_min)`.
    pub gap_bound: f64,
    /// `(nu / 2 pi) mu(K)`.
    pub weyl_bound: f64,
}

pub fn bound_report(
    sys: &MapSystem,
    m: f64,
    nu: f64,
    trapped_measure: f64,
) -> Result<SpectralBoundReport> {
    bound_report_raw(sys.e_min(), sys.k(), m, nu, trapped_measure)
}

pub fn bound_report_raw(
    e_min: f64,
    k: u32,
    m: f64,
    nu: f64,
    trapped_measure: f64,
) -> Result<SpectralBoundReport> {
    if !(m < 0.0) {
        return Err(invalid(
            "m",
            format!("Sobolev order must be negative, got {m}"),
        ));
    }
    if !(trapped_measure >= 0.0) {
        return Err(invalid(
            "trapped_measure",
            format!("must be >= 0, got {trapped_measure}"),
        ));
    }
    if !(e_min > 1.0) {
        return Err(Error::ExpansionViolation { e_min });
    }
    check_nu(nu)?;
    Ok(SpectralBoundReport {
        m,
        r_m: e_min.powf(-m.abs()) * (k as f64 / e_min).sqrt(),
        gap_bound: 1.0 / e_min.sqrt(),
        weyl_bound: nu.abs() / TAU * trapped_measure,
    })
}

/// Hausdorff distance above `floor` between the spectra at truncations `N`
/// and `2N`. A convergence diagnostic only: no rate is implied.
pub fn convergence_diagnostic(
    sys: &MapSystem,
    nu: f64,
    trunc: FourierTruncation,
    floor: f64,
) -> Result<f64> {
    let spectrum_at = |t: FourierTruncation| -> Result<crate::eigen::Spectrum> {
        assemble_quadrature(sys, nu, t, default_quad_points(sys, nu, t))?.spectrum()
    };
    let a = spectrum_at(trunc)?;
    let b = spectrum_at(FourierTruncation::new(2 * trunc.n())?)?;
    crate::eigen::hausdorff_gap(&a, &b, floor)
}

/// Largest singular value, from the eigenvalues of `M^H M`.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    let gram = crate::linalg::matmul(&crate::linalg::conj_transpose(m), m);
    let ev = crate::eigen::eigenvalues(&gram)?;
    Ok(ev.iter().map(|z| z.re).fold(0.0, f64::max).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;
    use crate::eigen::hausdorff;
    use crate::linalg::{conj_transpose, identity, matmul, max_abs_diff};
    use crate::maps::{CircleDiffeo, PeriodicFn, TrigSeries};

    fn tr(n: usize) -> FourierTruncation {
        FourierTruncation::new(n).unwrap()
    }

    fn quad(sys: &MapSystem, nu: f64, n: usize) -> TransferMatrix {
        let t = tr(n);
        assemble_quadrature(sys, nu, t, default_quad_points(sys, nu, t)).unwrap()
    }

    fn nonlinear() -> MapSystem {
        let g = CircleDiffeo::from_perturbation(TrigSeries::new(0.0, vec![], vec![0.05]));
        let tau = PeriodicFn::from_series(TrigSeries::new(0.1, vec![0.7, 0.2], vec![0.0, -0.3]));
        MapSystem::new(2, g, tau, "test-nonlinear").unwrap()
    }

    /// Independent oracle: direct complex-exponential trapezoid sum of one entry.
    fn entry_oracle(sys: &MapSystem, nu: f64, np: i64, n: i64, q: usize) -> Complex64 {
        (0..q)
            .map(|l| {
                let x = (l as f64 + 0.5) / q as f64;
                let arg =
                    -TAU * np as f64 * x + TAU * n as f64 * sys.lift(x) + nu * sys.tau().eval(x);
                Complex64::from_polar(1.0, arg)
            })
            .sum::<Complex64>()
            / q as f64
    }

    #[test]
    fn truncation_indexing() {
        let t = tr(3);
        assert_eq!(t.dim(), 7);
        assert_eq!(t.modes().collect::<Vec<_>>(), vec![-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(t.index(-3), Some(0));
        assert_eq!(t.index(4), None);
        assert_eq!(t.mode(6), 3);
        assert!(FourierTruncation::new(0).is_err());
        assert_eq!(FourierTruncation::auto(100.0).n(), 192);
        assert_eq!(FourierTruncation::auto(0.0).n(), 32);
    }

    #[test]
    fn doubling_nu_zero_selects_double_modes() {
        let m = quad(&MapSystem::doubling_cos(), 0.0, 2);
        assert!((m.entry(2, 1).unwrap() - 1.0).norm() < 1e-14);
        assert!(m.entry(1, 1).unwrap().norm() < 1e-14);
        for np in -2..=2 {
            for n in -2..=2 {
                let want = if np == 2 * n { 1.0 } else { 0.0 };
                assert!((m.entry(np, n).unwrap() - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn nu_zero_constant_column() {
        for sys in [MapSystem::doubling_cos(), nonlinear()] {
            let m = quad(&sys, 0.0, 6);
            for np in -6..=6 {
                let want = if np == 0 { 1.0 } else { 0.0 };
                assert!(
                    (m.entry(np, 0).unwrap() - want).norm() < 1e-13,
                    "{}",
                    sys.label()
                );
            }
        }
    }

    #[test]
    fn central_entry_is_j0() {
        let m = quad(&MapSystem::doubling_cos(), 10.0, 32);
        let want = -0.24593576445134832;
        assert!((m.entry(0, 0).unwrap() - want).norm() < 1e-10);
        assert!((bessel_j(0, 10.0) - want).abs() < 1e-14);
    }

    #[test]
    fn quadrature_matches_entry_oracle() {
        let sys = nonlinear();
        let m = quad(&sys, 7.0, 10);
        for &(np, n) in &[(0, 0), (3, 1), (-4, -2), (10, 5), (-7, 3), (1, -1)] {
            let want = entry_oracle(&sys, 7.0, np, n, 6000);
            assert!(
                (m.entry(np, n).unwrap() - want).norm() < 1e-11,
                "({np},{n})"
            );
        }
    }

    #[test]
    fn bessel_closed_form_matches_quadrature() {
        let sys = MapSystem::doubling_cos();
        for &(nu, n) in &[(0.0, 8), (5.0, 24), (37.5, 40)] {
            let b = assemble_bessel(nu, tr(n)).unwrap();
            let q = quad(&sys, nu, n);
            assert!(max_abs_diff(&b.entries, &q.entries) < 1e-10, "nu={nu}");
        }
        let b = assemble_bessel(10.0, tr(4)).unwrap();
        assert!((b.entry(0, 0).unwrap() - bessel_j(0, 10.0)).norm() < 1e-15);
    }

    #[test]
    fn three_quarter_phase_is_jacobi_anger() {
        for m in -12..=12i64 {
            let want = Complex64::from_polar(1.0, -TAU * 0.75 * m as f64);
            assert!((three_quarter_phase(m) - want).norm() < 1e-12);
            // i^{-m} J_{-m} = i^m J_m
            let lhs = Complex64::i().powi(-m as i32) * bessel_j(-m, 3.3);
            let rhs = Complex64::i().powi(m as i32) * bessel_j(m, 3.3);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn bandwidth_decay() {
        let nu = 20.0;
        let m = assemble_bessel(nu, tr(64)).unwrap();
        for np in -64..=64i64 {
            for n in -64..=64i64 {
                if ((2 * n - np) as f64).abs() > nu + 40.0 {
                    assert!(m.entry(np, n).unwrap().norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn adjoint_is_conjugate_transpose() {
        let sys = MapSystem::doubling_zero();
        let t = tr(4);
        let a = assemble_adjoint(&sys, 0.0, t, default_quad_points(&sys, 0.0, t)).unwrap();
        assert!((a.entry(0, 0).unwrap() - 1.0).norm() < 1e-14);

        for (sys, nu) in [(MapSystem::doubling_cos(), 10.0), (nonlinear(), 4.0)] {
            let t = tr(16);
            let q = default_quad_points(&sys, nu, t);
            let d = assemble_quadrature(&sys, nu, t, q).unwrap();
            let a = assemble_adjoint(&sys, nu, t, q).unwrap();
            assert!(
                max_abs_diff(&a.entries, &conj_transpose(&d.entries)) < 1e-9,
                "{}",
                sys.label()
            );
        }
    }

    #[test]
    fn adjoint_spectrum_moduli() {
        let sys = MapSystem::doubling_cos();
        let t = tr(32);
        let q = default_quad_points(&sys, 10.0, t);
        let d = assemble_quadrature(&sys, 10.0, t, q)
            .unwrap()
            .spectrum()
            .unwrap();
        let a = assemble_adjoint(&sys, 10.0, t, q)
            .unwrap()
            .spectrum()
            .unwrap();
        // eigenvalues near zero of a non-normal matrix are ill-conditioned;
        // compare the resolved part of the spectrum
        assert!(hausdorff(&d.conj().above(1e-3), &a.above(1e-3)) < 1e-8);
        let (dm, am) = (d.above(1e-3), a.above(1e-3));
        assert_eq!(dm.len(), am.len());
        for (x, y) in dm.iter().zip(am.iter()) {
            assert!((x.norm() - y.norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_circle_map_is_contraction() {
        let sys = MapSystem::doubling_cos();
        let m = quad(&sys, 6.0, 12);
        assert!(operator_norm(&m.entries).unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn insufficient_quadrature_is_an_error() {
        let sys = MapSystem::doubling_cos();
        let t = tr(8);
        let need = min_quad_points(&sys, 3.0, t);
        assert_eq!(need, 4 * (16 + 8 + 3 + 16));
        let err = assemble_quadrature(&sys, 3.0, t, need - 1).unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientQuadrature {
                required: need,
                given: need - 1
            }
        );
        assert!(assemble_adjoint(&sys, 3.0, t, need - 1).is_err());
        assert!(assemble_quadrature(&sys, 3.0, t, need).is_ok());
        assert!(assemble_quadrature(&sys, f64::NAN, t, need).is_err());
    }

    #[test]
    fn gauge_matrix_examples() {
        let t = tr(6);
        let zero = GaugeFunction::zero();
        let chi = gauge_conjugation_matrix(&zero, 5.0, t, default_gauge_quad_points(&zero, 5.0, t))
            .unwrap();
        assert!(max_abs_diff(&chi, &identity(13)) < 1e-14);

        let eta = GaugeFunction::from_series(TrigSeries::sin1(0.3));
        let chi = gauge_conjugation_matrix(&eta, 0.0, t, default_gauge_quad_points(&eta, 0.0, t))
            .unwrap();
        assert!(max_abs_diff(&chi, &identity(13)) < 1e-14);

        // exp(i nu cos 2 pi x) = sum_m i^m J_m(nu) e^{i 2 pi m x}
        let eta = GaugeFunction::from_series(TrigSeries::cos1(1.0));
        let nu = 4.5;
        let chi =
            gauge_conjugation_matrix(&eta, nu, t, default_gauge_quad_points(&eta, nu, t)).unwrap();
        for i in 0..13 {
            for j in 0..13 {
                let m = t.mode(i) - t.mode(j);
                let want = Complex64::i().powi(m as i32) * bessel_j(m, nu);
                assert!((chi[[i, j]] - want).norm() < 1e-13);
            }
        }
        assert!(gauge_conjugation_matrix(&eta, nu, t, 10).is_err());
    }

    #[test]
    fn gauge_covariance_on_central_block() {
        let sys = MapSystem::doubling_cos();
        let eta = GaugeFunction::from_series(TrigSeries::sin1(0.3));
        let shifted = sys.coboundary(&eta);
        let nu = 6.0;
        let t = tr(48);
        let q = default_quad_points(&shifted, nu, t).max(default_quad_points(&sys, nu, t));
        let mz = assemble_quadrature(&shifted, nu, t, q).unwrap();
        let mt = assemble_quadrature(&sys, nu, t, q).unwrap();
        let gq = default_gauge_quad_points(&eta, nu, t);
        let chi = gauge_conjugation_matrix(&eta, nu, t, gq).unwrap();
        let chi_inv = gauge_conjugation_matrix(&eta.negated(), nu, t, gq).unwrap();
        let conj = matmul(&matmul(&chi, &mt.entries), &chi_inv);
        // modes |n| <= 10 sit well inside the bandwidth of every factor
        let lo = 48 - 10;
        let hi = 48 + 10 + 1;
        let a = crate::linalg::central_block(&mz.entries, lo, hi);
        let b = crate::linalg::central_block(&conj, lo, hi);
        assert!(max_abs_diff(&a, &b) < 1e-10);
    }

    #[test]
    fn bound_report_examples() {
        let r = bound_report(&MapSystem::doubling_zero(), -3.0, 10.0, 2.0).unwrap();
        assert!((r.r_m - 0.125).abs() < 1e-15);
        assert!((r.gap_bound - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r.weyl_bound - 10.0 / TAU * 2.0).abs() < 1e-15);
        let far = bound_report_raw(2.0, 2, -60.0, 1.0, 0.0).unwrap();
        assert!(far.r_m < 1e-17 && far.r_m > 0.0);
        assert!(bound_report_raw(2.0, 2, 0.0, 1.0, 0.0).is_err());
        assert!(bound_report_raw(2.0, 2, -1.0, 1.0, -1.0).is_err());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn independent_of_worker_count() {
        let sys = nonlinear();
        let t = tr(20);
        let q = default_quad_points(&sys, 9.0, t);
        let many = assemble_quadrature(&sys, 9.0, t, q).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let one = pool.install(|| assemble_quadrature(&sys, 9.0, t, q).unwrap());
        assert_eq!(many.entries, one.entries);
    }

    #[test]
    fn convergence_diagnostic_shrinks() {
        let sys = MapSystem::doubling_cos();
        let coarse = convergence_diagnostic(&sys, 20.0, tr(8), 0.2).unwrap();
        let fine = convergence_diagnostic(&sys, 20.0, tr(64), 0.2).unwrap();
        assert!(fine < 1e-6, "{fine}");
        assert!(coarse > 1e-3, "{coarse}");
    }
}
