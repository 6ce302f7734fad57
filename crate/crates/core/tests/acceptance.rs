//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion must meet both its numeric tolerance and its
//! wall-clock limit.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use ruelle_core::eigen::hausdorff_gap;
use ruelle_core::manifold::{
    fractal_slice, lifted_orbit, min_fractal_terms, stable_manifold, LiftedPoint,
};
use ruelle_core::maps::{GaugeFunction, MapSystem, TrigSeries};
use ruelle_core::phasespace::{
    canonical_step, captivity_table, default_zone, trapped_set_estimate, GridSpec, PhasePoint,
};
use ruelle_core::simulate::{
    correlation_series, evolve_cloud, fit_decay_rate, gaussian_cloud, uniformity_statistic,
    TestFunction, REFERENCE_SEED,
};
use ruelle_core::transfer::{
    assemble_bessel, assemble_quadrature, default_quad_points, FourierTruncation, TransferMatrix,
};
use ruelle_core::Result;

struct Outcome {
    passed: bool,
    detail: String,
}

fn quadrature(sys: &MapSystem, nu: f64, n: usize) -> Result<TransferMatrix> {
    let trunc = FourierTruncation::new(n)?;
    assemble_quadrature(sys, nu, trunc, default_quad_points(sys, nu, trunc))
}

fn constant_mode() -> Result<Outcome> {
    let spec = quadrature(&MapSystem::doubling_cos(), 0.0, 64)?.spectrum()?;
    let d = spec
        .eigenvalues()
        .iter()
        .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        passed: d <= 1e-10,
        detail: format!("min |lambda - 1| = {d:.3e} (tol 1e-10)"),
    })
}

fn closed_form_vs_quadrature() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let mut worst: f64 = 0.0;
    for nu in [5.0, 10.0, 25.0] {
        let q = quadrature(&sys, nu, 64)?;
        let b = assemble_bessel(nu, FourierTruncation::new(64)?)?;
        let d = q
            .entries
            .iter()
            .zip(b.entries.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    Ok(Outcome {
        passed: worst <= 1e-10,
        detail: format!("max entrywise difference = {worst:.3e} (tol 1e-10)"),
    })
}

fn spectral_gap() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let bound = 1.0 / sys.e_min().sqrt() + 0.10;
    let mut radii = Vec::new();
    for nu in [50.0, 100.0, 150.0] {
        let trunc = FourierTruncation::auto(nu);
        let m = assemble_quadrature(&sys, nu, trunc, default_quad_points(&sys, nu, trunc))?;
        radii.push(m.spectrum()?.spectral_radius());
    }
    let monotone = radii.windows(2).all(|w| w[1] <= w[0]);
    let worst = radii.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        passed: worst <= bound,
        detail: format!(
            "radii at nu=50,100,150: {:.4}, {:.4}, {:.4}; max {worst:.4} <= {bound:.4}; monotone approach: {}",
            radii[0],
            radii[1],
            radii[2],
            if monotone { "yes" } else { "no" }
        ),
    })
}

fn truncation_convergence() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let a = quadrature(&sys, 20.0, 64)?.spectrum()?;
    let b = quadrature(&sys, 20.0, 128)?.spectrum()?;
    let d = hausdorff_gap(&a, &b, 0.2)?;
    Ok(Outcome {
        passed: d <= 1e-6,
        detail: format!("Hausdorff distance N=64 vs N=128 (floor 0.2) = {d:.3e} (tol 1e-6)"),
    })
}

fn gauge_invariance() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let shifted = sys.coboundary(&GaugeFunction::from_series(TrigSeries::sin1(0.3)));
    let a = quadrature(&sys, 20.0, 128)?.spectrum()?;
    let b = quadrature(&shifted, 20.0, 128)?.spectrum()?;
    let d = hausdorff_gap(&a, &b, 0.3)?;
    Ok(Outcome {
        passed: d <= 1e-4,
        detail: format!(
            "Hausdorff distance original vs coboundary (floor 0.3) = {d:.3e} (tol 1e-4)"
        ),
    })
}

fn captivity_counter() -> Result<Outcome> {
    let grid = GridSpec::CAPTIVITY_DEFAULT;
    let zero = MapSystem::doubling_zero();
    let flat = captivity_table(&zero, &default_zone(&zero), 10, grid)?;
    let exact = flat.rows.iter().all(|r| r.count == 1u64 << r.n);
    let dc = MapSystem::doubling_cos();
    let table = captivity_table(&dc, &default_zone(&dc), 10, grid)?;
    let strict = table
        .rows
        .iter()
        .filter(|r| r.n >= 3)
        .all(|r| r.count < 1u64 << r.n);
    let violations = table.subadditivity_violations();
    let counts: Vec<String> = table.rows.iter().map(|r| r.count.to_string()).collect();
    Ok(Outcome {
        passed: exact && strict && violations.is_empty(),
        detail: format!(
            "tau=0 exact 2^n: {exact}; doubling-cos N(n) = [{}], strictly below 2^n for n>=3: {strict}; sub-additivity violations: {}",
            counts.join(", "),
            violations.len()
        ),
    })
}

fn escape_lemma() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let zone = default_zone(&sys);
    let r = zone.radius;
    let mut rng = ChaCha20Rng::seed_from_u64(REFERENCE_SEED);
    let mut violations = 0;
    const SAMPLES: usize = 10_000;
    for _ in 0..SAMPLES {
        let x: f64 = rng.random();
        // |xi| uniform in (R, 10R]
        let mag = 10.0 * r - rng.random::<f64>() * 9.0 * r;
        let xi = if rng.random::<bool>() { mag } else { -mag };
        let eps = rng.random_range(0..sys.k());
        let next = canonical_step(&sys, PhasePoint::new(x, xi), eps)?;
        let escapes = next.xi.abs() > zone.kappa * xi.abs();
        if !escapes {
            violations += 1;
        }
    }
    Ok(Outcome {
        passed: violations == 0,
        detail: format!(
            "{violations} violations of |xi'| > kappa |xi| in {SAMPLES} samples (R = {r:.6}, kappa = {})",
            zone.kappa
        ),
    })
}

fn stable_manifold_check() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let s = stable_manifold(&sys, 1e-12)?;
    let mut residual: f64 = 0.0;
    for i in 0..1024 {
        residual = residual.max(s.cohomological_residual(i as f64 / 1024.0)?.abs());
    }
    let e = sys.e_min();
    let delta = 1e-6;
    let mut drift: f64 = 0.0;
    let mut growth_ok = true;
    for i in 0..16 {
        let x0 = (i as f64 + 0.37) / 16.0;
        let on = lifted_orbit(&sys, LiftedPoint::new(x0, s.eval(x0)?), 20)?;
        for p in &on {
            drift = drift.max((p.xi - s.eval(p.x)?).abs());
        }
        let off = lifted_orbit(&sys, LiftedPoint::new(x0, s.eval(x0)? + delta), 20)?;
        for (n, p) in off.iter().enumerate() {
            let dev = (p.xi - s.eval(p.x)?).abs();
            if dev < e.powi(n as i32) * delta * (1.0 - 1e-6) {
                growth_ok = false;
            }
        }
    }
    Ok(Outcome {
        passed: residual <= 1e-9 && drift <= 1e-8 && growth_ok,
        detail: format!(
            "residual {residual:.3e} (tol 1e-9); on-manifold drift {drift:.3e} (tol 1e-8); off-manifold growth >= E_min^n delta: {growth_ok}"
        ),
    })
}

fn trapped_manifold_consistency() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let k = trapped_set_estimate(&sys, &default_zone(&sys), 10, GridSpec::TRAPPED_DEFAULT)?;
    let slice: Vec<f64> = fractal_slice(&sys, 0.0, 1 << 12, min_fractal_terms())?
        .into_iter()
        .map(|(_, z)| z.im)
        .collect();
    let column = k.column(0);
    let h = k.cell_height();
    let worst = column
        .iter()
        .map(|xi| {
            slice
                .iter()
                .map(|s| (s - xi).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(Outcome {
        passed: !column.is_empty() && worst <= h,
        detail: format!(
            "{} occupied cells at x=0; max distance to Im S^c = {worst:.4} (one cell = {h:.4})",
            column.len()
        ),
    })
}

fn weyl_law() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let nu = 100.0;
    let trunc = FourierTruncation::auto(nu);
    let spec =
        assemble_quadrature(&sys, nu, trunc, default_quad_points(&sys, nu, trunc))?.spectrum()?;
    let count = spec.count_above(0.3)?;
    let k = trapped_set_estimate(&sys, &default_zone(&sys), 10, GridSpec::TRAPPED_DEFAULT)?;
    let bound = nu / std::f64::consts::TAU * k.measure * 1.5;
    Ok(Outcome {
        passed: count as f64 <= bound,
        detail: format!(
            "count_above(0.3) = {count} <= (nu/2pi) mu(K) 1.5 = {bound:.1} (mu(K) = {:.4})",
            k.measure
        ),
    })
}

fn mixing_simulation() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let cloud = gaussian_cloud((0.0, 0.0), 0.01, 100_000, REFERENCE_SEED)?;
    let chi = uniformity_statistic(&evolve_cloud(&sys, &cloud, 19), 64);
    Ok(Outcome {
        passed: chi <= 1.5,
        detail: format!(
            "chi-square per dof after 19 steps = {chi:.4} (tol 1.5, seed {REFERENCE_SEED})"
        ),
    })
}

fn correlation_consistency() -> Result<Outcome> {
    let sys = MapSystem::doubling_cos();
    let trunc = FourierTruncation::new(64)?;
    let psi = TestFunction::mode(1);
    let series = correlation_series(&sys, 10, &psi, &psi, 12, trunc)?;
    let fit = fit_decay_rate(&series, 3, 12)?;
    let rho = quadrature(&sys, 10.0, 64)?.spectrum()?.spectral_radius();
    let rel = (fit.rho / rho - 1.0).abs();
    Ok(Outcome {
        passed: rel <= 0.10,
        detail: format!(
            "fitted rho = {:.4}, largest |lambda| = {rho:.4}, relative difference {rel:.4} (tol 0.10)",
            fit.rho
        ),
    })
}

type Check = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Duration, Check); 12] = [
        (
            "constant-mode eigenvalue",
            Duration::from_secs(5),
            constant_mode,
        ),
        (
            "closed form vs quadrature",
            Duration::from_secs(30),
            closed_form_vs_quadrature,
        ),
        ("spectral gap", Duration::from_secs(600), spectral_gap),
        (
            "truncation convergence",
            Duration::from_secs(120),
            truncation_convergence,
        ),
        (
            "gauge invariance",
            Duration::from_secs(120),
            gauge_invariance,
        ),
        (
            "captivity counter",
            Duration::from_secs(180),
            captivity_counter,
        ),
        ("escape lemma", Duration::from_secs(5), escape_lemma),
        (
            "stable manifold",
            Duration::from_secs(5),
            stable_manifold_check,
        ),
        (
            "trapped set vs manifold",
            Duration::from_secs(120),
            trapped_manifold_consistency,
        ),
        ("Weyl-law consistency", Duration::from_secs(600), weyl_law),
        (
            "mixing simulation",
            Duration::from_secs(10),
            mixing_simulation,
        ),
        (
            "correlation vs spectrum",
            Duration::from_secs(60),
            correlation_consistency,
        ),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let (ok, detail) = match result {
            Ok(o) => (o.passed && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail}; {:.2}s (limit {}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
