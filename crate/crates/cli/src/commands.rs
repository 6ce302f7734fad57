//! One function per subcommand; each writes its files under the output
//! directory and returns a one-line human summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use num_complex::Complex64;
use ruelle_core::eigen::{hausdorff_gap, GapVerdict, Spectrum};
use ruelle_core::io::{self, Metadata};
use ruelle_core::manifold::{
    bounding_box, fixed_point, fractal_slice, min_fractal_terms, stable_manifold,
};
use ruelle_core::maps::{GaugeFunction, MapSystem};
use ruelle_core::par;
use ruelle_core::phasespace::{
    captivity_table, default_kappa, escape_radius, trapped_set_estimate, CompactZone, GridSpec,
};
use ruelle_core::plot::{density_pgm, occupancy_pgm, spectrum_svg, Scatter};
use ruelle_core::simulate::{
    chi_square_per_dof, correlation_series, evolve_cloud, fit_decay_rate, gaussian_cloud,
    histogram, required_truncation, TestFunction,
};
use ruelle_core::transfer::{
    assemble_quadrature, convergence_diagnostic, min_quad_points, FourierTruncation, TransferMatrix,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Context};

/// Slack on `1 / sqrt(E_min)` for the reported gap verdict at finite `nu`.
const GAP_SLACK: f64 = 0.10;
/// Modulus floor for spacing statistics and spectral distances.
const SPECTRAL_FLOOR: f64 = 0.3;

pub struct Run {
    pub config: RunConfig,
    pub sys: MapSystem,
    hash: String,
}

impl Run {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let sys = config
            .map
            .build()
            .map_err(|e| CliError::Config(format!("map: {e}")))?;
        let hash = config.hash();
        fs::create_dir_all(&config.output_dir).map_err(|source| CliError::Io {
            path: config.output_dir.clone(),
            source,
        })?;
        Ok(Self { config, sys, hash })
    }

    fn meta(&self, command: &str) -> Metadata {
        Metadata::new()
            .with("tool", concat!("ruelle ", env!("CARGO_PKG_VERSION")))
            .with("command", command)
            .with("config_hash", &self.hash)
            .with("preset", self.sys.label())
            .with("seed", self.config.seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn write_file<F>(&self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.path(name);
        let io_err = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        body(&mut w)?;
        w.flush().map_err(io_err)?;
        Ok(path)
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).expect("summary serializes");
        self.write_bytes(name, format!("{text}\n").as_bytes())
    }

    fn zone(&self) -> Result<CompactZone, CliError> {
        let kappa = self
            .config
            .kappa
            .unwrap_or_else(|| default_kappa(&self.sys));
        escape_radius(&self.sys, kappa).map_err(|e| CliError::Config(format!("kappa: {e}")))
    }

    /// `quad_factor / 4` times the minimum node count for `sys`.
    fn quad_points(&self, sys: &MapSystem, nu: f64, trunc: FourierTruncation) -> usize {
        min_quad_points(sys, nu, trunc) / 4 * self.config.quad_factor
    }

    fn assemble(
        &self,
        sys: &MapSystem,
        nu: f64,
        trunc: FourierTruncation,
    ) -> Result<TransferMatrix, CliError> {
        assemble_quadrature(sys, nu, trunc, self.quad_points(sys, nu, trunc))
            .context(|| format!("assembling nu = {nu}"))
    }

    fn transfer_meta(
        &self,
        command: &str,
        sys: &MapSystem,
        nu: f64,
        trunc: FourierTruncation,
    ) -> Metadata {
        self.meta(command)
            .with("nu", nu)
            .with("N", trunc.n())
            .with("truncation_rule", self.config.truncation_rule())
            .with("quadrature_points", self.quad_points(sys, nu, trunc))
            .with("quadrature_factor", self.config.quad_factor)
    }

    /// Spectra for several `nu`, computed in parallel, in input order.
    fn spectra(
        &self,
        nus: &[f64],
        trunc: FourierTruncation,
    ) -> Result<Vec<(TransferMatrix, Spectrum)>, CliError> {
        par::map_slice(nus, |&nu| {
            let m = self.assemble(&self.sys, nu, trunc)?;
            let s = m
                .spectrum()
                .context(|| format!("eigenvalues at nu = {nu}"))?;
            Ok((m, s))
        })
        .into_iter()
        .collect()
    }
}

fn frame_name(prefix: &str, nu: f64) -> String {
    format!("{prefix}nu_{nu:08.3}.csv")
}

fn files(paths: &[PathBuf]) -> String {
    let names: Vec<String> = paths
        .iter()
        .map(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    names.join(", ")
}

#[derive(Serialize)]
struct SpectrumSummary {
    nu: f64,
    truncation: usize,
    quadrature_points: usize,
    eigenvalue_count: usize,
    verdict: GapVerdict,
    /// Nearest-neighbour distances among eigenvalues above the floor.
    spacings: Vec<f64>,
    /// Hausdorff distance above the floor between spectra at `N` and `2N`.
    convergence_2n: Option<f64>,
}

pub fn spectrum(run: &Run) -> Result<String, CliError> {
    let nus = &run.config.nu;
    let trunc = run.config.truncation_for(nus)?;
    let results = run.spectra(nus, trunc)?;
    let gap = 1.0 / run.sys.e_min().sqrt();
    let mut written = Vec::new();
    let mut summary = Vec::new();
    let mut union = Vec::new();
    for (nu, (m, s)) in nus.iter().zip(&results) {
        let meta = run.transfer_meta("spectrum", &run.sys, *nu, trunc);
        written.push(run.write_file(&frame_name("spectrum_", *nu), |w| {
            io::write_spectrum_csv(w, std::slice::from_ref(s), &meta).map_err(CliError::numeric)
        })?);
        if run.config.export_matrix {
            let name = format!("matrix_nu_{nu:08.3}.bin");
            written.push(run.write_file(&name, |w| {
                io::write_matrix_binary(w, &m.entries).map_err(CliError::numeric)
            })?);
        }
        summary.push(SpectrumSummary {
            nu: *nu,
            truncation: trunc.n(),
            quadrature_points: m.quad_points.unwrap_or(0),
            eigenvalue_count: s.len(),
            verdict: GapVerdict::evaluate(s, gap, GAP_SLACK),
            spacings: s.nearest_neighbor_spacings(SPECTRAL_FLOOR),
            convergence_2n: if run.config.convergence_check {
                Some(
                    convergence_diagnostic(&run.sys, *nu, trunc, SPECTRAL_FLOOR)
                        .context(|| format!("N vs 2N at nu = {nu}"))?,
                )
            } else {
                None
            },
        });
        union.extend_from_slice(s.eigenvalues());
    }
    let title = format!(
        "{}: resonances for nu in {nus:?}, N = {}",
        run.sys.label(),
        trunc.n()
    );
    written.push(run.write_bytes(
        "spectrum.svg",
        spectrum_svg(&title, union, run.sys.e_min()).as_bytes(),
    )?);
    written.push(run.write_json("spectrum.json", &summary)?);
    let radii: Vec<String> = summary
        .iter()
        .map(|s| format!("{:.6}", s.verdict.spectral_radius))
        .collect();
    Ok(format!(
        "spectral radii [{}] vs 1/sqrt(E_min) = {gap:.6}; wrote {}",
        radii.join(", "),
        files(&written)
    ))
}

#[derive(Serialize)]
struct SweepSummary {
    frames: usize,
    truncation: usize,
    nu: Vec<f64>,
    spectral_radius: Vec<f64>,
    /// Hausdorff distance above floor 0.3 between consecutive frames.
    adjacent_distance: Vec<f64>,
}

pub fn sweep(run: &Run) -> Result<String, CliError> {
    let nus = run.config.sweep_values();
    let trunc = run.config.truncation_for(&nus)?;
    let results = run.spectra(&nus, trunc)?;
    for (nu, (_, s)) in nus.iter().zip(&results) {
        let meta = run.transfer_meta("sweep", &run.sys, *nu, trunc);
        run.write_file(&frame_name("", *nu), |w| {
            io::write_spectrum_csv(w, std::slice::from_ref(s), &meta).map_err(CliError::numeric)
        })?;
    }
    let adjacent = results
        .windows(2)
        .map(|w| hausdorff_gap(&w[0].1, &w[1].1, SPECTRAL_FLOOR))
        .collect::<ruelle_core::Result<Vec<f64>>>()
        .context(|| "adjacent-frame distance".into())?;
    let summary = SweepSummary {
        frames: nus.len(),
        truncation: trunc.n(),
        spectral_radius: results.iter().map(|(_, s)| s.spectral_radius()).collect(),
        nu: nus,
        adjacent_distance: adjacent,
    };
    run.write_json("sweep.json", &summary)?;
    let worst = summary
        .adjacent_distance
        .iter()
        .copied()
        .fold(0.0, f64::max);
    Ok(format!(
        "{} frames nu_*.csv, max adjacent Hausdorff distance (floor 0.3) {worst:.3e}; wrote sweep.json",
        summary.frames
    ))
}

fn grid(g: [usize; 2]) -> Result<GridSpec, CliError> {
    GridSpec::new(g[0], g[1]).map_err(|e| CliError::Config(format!("grid: {e}")))
}

#[derive(Serialize)]
struct CaptivitySummary {
    radius: f64,
    kappa: f64,
    subadditive: bool,
    violations: Vec<(usize, usize)>,
    gap_estimate: Option<f64>,
}

pub fn captivity(run: &Run) -> Result<String, CliError> {
    let zone = run.zone()?;
    let g = grid(run.config.captivity.grid)?;
    let table = captivity_table(&run.sys, &zone, run.config.captivity.n_max, g)
        .context(|| "captivity".into())?;
    let meta = run
        .meta("captivity")
        .with("grid", format!("{}x{}", g.nx, g.nxi))
        .with("radius", zone.radius)
        .with("kappa", zone.kappa);
    run.write_file("captivity.csv", |w| {
        io::write_captivity_csv(w, &table, &meta).map_err(CliError::numeric)
    })?;
    let summary = CaptivitySummary {
        radius: zone.radius,
        kappa: zone.kappa,
        subadditive: table.is_subadditive(),
        violations: table.subadditivity_violations(),
        gap_estimate: table.gap_estimate(),
    };
    run.write_json("captivity.json", &summary)?;
    let counts: Vec<String> = table.rows.iter().map(|r| r.count.to_string()).collect();
    Ok(format!(
        "N(n) = [{}], sub-additive: {}; wrote captivity.csv, captivity.json",
        counts.join(", "),
        summary.subadditive
    ))
}

#[derive(Serialize)]
struct TrappedSummary {
    depth: usize,
    radius: f64,
    occupied_cells: usize,
    cell_area: f64,
    measure: f64,
}

pub fn trapped(run: &Run) -> Result<String, CliError> {
    let zone = run.zone()?;
    let g = grid(run.config.trapped.grid)?;
    let depth = run.config.trapped.depth;
    let k = trapped_set_estimate(&run.sys, &zone, depth, g).context(|| "trapped set".into())?;
    let meta = run
        .meta("trapped")
        .with("grid", format!("{}x{}", g.nx, g.nxi))
        .with("depth", depth)
        .with("radius", zone.radius);
    run.write_file("occupancy.csv", |w| {
        io::write_occupancy_csv(w, &k, &meta).map_err(CliError::numeric)
    })?;
    run.write_bytes("trapped.pgm", &occupancy_pgm(&k))?;
    let summary = TrappedSummary {
        depth,
        radius: zone.radius,
        occupied_cells: k.occupied_count(),
        cell_area: k.cell_width() * k.cell_height(),
        measure: k.measure,
    };
    run.write_json("trapped.json", &summary)?;
    Ok(format!(
        "{} occupied cells, measure estimate {:.6}; wrote occupancy.csv, trapped.pgm, trapped.json",
        summary.occupied_cells, summary.measure
    ))
}

#[derive(Serialize)]
struct ManifoldSummary {
    terms: usize,
    tolerance: f64,
    sup_bound: f64,
    max_residual: f64,
    fixed_point_xi: Option<f64>,
}

pub fn manifold(run: &Run) -> Result<String, CliError> {
    let cfg = &run.config.manifold;
    let s = stable_manifold(&run.sys, cfg.tol).context(|| "stable manifold".into())?;
    let xs: Vec<f64> = (0..cfg.points)
        .map(|i| i as f64 / cfg.points as f64)
        .collect();
    let rows = par::map_slice(&xs, |&x| {
        Ok::<_, ruelle_core::Error>((x, s.eval(x)?, s.cohomological_residual(x)?))
    })
    .into_iter()
    .collect::<ruelle_core::Result<Vec<_>>>()
    .context(|| "evaluating S".into())?;
    let graph: Vec<(f64, f64)> = rows.iter().map(|&(x, v, _)| (x, v)).collect();
    let meta = run
        .meta("manifold")
        .with("terms", s.terms())
        .with("tolerance", cfg.tol);
    run.write_file("manifold.csv", |w| {
        io::write_manifold_csv(w, &graph, &meta).map_err(CliError::numeric)
    })?;
    let summary = ManifoldSummary {
        terms: s.terms(),
        tolerance: cfg.tol,
        sup_bound: s.sup_bound(),
        max_residual: rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max),
        fixed_point_xi: fixed_point(&run.sys).ok().map(|p| p.xi),
    };
    run.write_json("manifold.json", &summary)?;
    Ok(format!(
        "S on {} points with {} terms, max residual {:.3e}; wrote manifold.csv, manifold.json",
        cfg.points, summary.terms, summary.max_residual
    ))
}

pub fn fractal(run: &Run) -> Result<String, CliError> {
    let cfg = &run.config.fractal;
    let pts = fractal_slice(&run.sys, cfg.x, cfg.m_range, min_fractal_terms())
        .context(|| "fractal slice".into())?;
    let meta = run
        .meta("fractal")
        .with("x", cfg.x)
        .with("m_range", cfg.m_range)
        .with("terms", min_fractal_terms());
    run.write_file("fractal.csv", |w| {
        io::write_fractal_csv(w, &pts, &meta).map_err(CliError::numeric)
    })?;
    let mut plot = Scatter::new(
        format!("S^c(x + m), x = {}, |m| <= {}", cfg.x, cfg.m_range),
        pts.iter().map(|p| p.1).collect(),
    )
    .fit_to_points();
    plot.point_radius = 0.8;
    run.write_bytes("fractal.svg", plot.to_svg().as_bytes())?;
    let bbox = bounding_box(&pts);
    run.write_json("fractal.json", &bbox)?;
    Ok(format!(
        "{} points, Re in [{:.4}, {:.4}], Im in [{:.4}, {:.4}]; wrote fractal.csv, fractal.svg, fractal.json",
        pts.len(),
        bbox.re_min,
        bbox.re_max,
        bbox.im_min,
        bbox.im_max
    ))
}

#[derive(Serialize)]
struct CloudSnapshot {
    n: usize,
    chi_square_per_dof: f64,
}

pub fn cloud(run: &Run) -> Result<String, CliError> {
    let cfg = &run.config.cloud;
    let initial = gaussian_cloud(
        (cfg.center[0], cfg.center[1]),
        cfg.sigma,
        cfg.count,
        run.config.seed,
    )
    .context(|| "initial cloud".into())?;
    let mut steps = cfg.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    let mut snapshots = Vec::new();
    let mut current = initial;
    for &n in &steps {
        current = evolve_cloud(&run.sys, &current, n - current.time);
        snapshots.push(current.clone());
    }
    let meta = run
        .meta("cloud")
        .with("count", cfg.count)
        .with("sigma", cfg.sigma)
        .with("center", format!("{},{}", cfg.center[0], cfg.center[1]));
    run.write_file("cloud.csv", |w| {
        io::write_cloud_csv(w, &snapshots, &meta).map_err(CliError::numeric)
    })?;
    let mut summary = Vec::new();
    for c in &snapshots {
        let counts = histogram(c, cfg.bins);
        run.write_bytes(
            &format!("cloud_n{:03}.pgm", c.time),
            &density_pgm(&counts, cfg.bins),
        )?;
        summary.push(CloudSnapshot {
            n: c.time,
            chi_square_per_dof: chi_square_per_dof(&counts),
        });
    }
    run.write_json("cloud.json", &summary)?;
    let last = summary.last().expect("steps nonempty");
    Ok(format!(
        "{} snapshots, chi-square per dof at n = {}: {:.4}; wrote cloud.csv, cloud_n*.pgm, cloud.json",
        summary.len(),
        last.n,
        last.chi_square_per_dof
    ))
}

fn test_function(coeffs: &[[f64; 3]]) -> TestFunction {
    TestFunction::new(
        coeffs
            .iter()
            .map(|c| (c[0] as i64, Complex64::new(c[1], c[2])))
            .collect(),
    )
}

#[derive(Serialize)]
struct CorrelationSummary {
    nu: i64,
    truncation: usize,
    fitted_rho: Option<f64>,
    fit_residual_rms: Option<f64>,
    fit_error: Option<String>,
    spectral_radius: f64,
}

pub fn correlate(run: &Run) -> Result<String, CliError> {
    let cfg = &run.config.correlate;
    let psi1 = test_function(&cfg.psi1);
    let psi2 = test_function(&cfg.psi2);
    let mut nus = Vec::new();
    for &nu in &run.config.nu {
        if nu.fract() != 0.0 {
            return Err(CliError::Config(format!(
                "nu: correlate needs integer modes, got {nu}"
            )));
        }
        nus.push(nu as i64);
    }
    let base = run.config.truncation_for(&run.config.nu)?;
    let auto = matches!(run.config.truncation, crate::config::Truncation::Named(_));
    let work = par::map_slice(&nus, |&nu| -> Result<_, CliError> {
        // Auto truncation grows to what the recurrence needs; a fixed N is
        // taken as given and may be rejected.
        let needed = required_truncation(&run.sys, nu as f64)
            .max(psi1.support())
            .max(psi2.support());
        let trunc = if auto && base.n() < needed {
            FourierTruncation::new(needed).map_err(CliError::numeric)?
        } else {
            base
        };
        let series = correlation_series(&run.sys, nu, &psi1, &psi2, cfg.n_max, trunc)
            .context(|| format!("correlation at nu = {nu}"))?;
        let rho = run
            .assemble(&run.sys, nu as f64, trunc)?
            .spectrum()
            .context(|| format!("eigenvalues at nu = {nu}"))?
            .spectral_radius();
        let fit = fit_decay_rate(&series, cfg.fit_window[0], cfg.fit_window[1]);
        Ok((series, fit, rho))
    });
    let mut all = Vec::new();
    let mut summary = Vec::new();
    for item in work {
        let (series, fit, rho) = item?;
        summary.push(CorrelationSummary {
            nu: series.nu,
            truncation: series.truncation,
            fitted_rho: fit.as_ref().ok().map(|f| f.rho),
            fit_residual_rms: fit.as_ref().ok().map(|f| f.residual_rms),
            fit_error: fit.as_ref().err().map(|e| e.to_string()),
            spectral_radius: rho,
        });
        all.push(series);
    }
    let meta = run
        .meta("correlate")
        .with("truncation_rule", run.config.truncation_rule())
        .with(
            "N",
            summary
                .iter()
                .map(|s| s.truncation.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .with(
            "fit_window",
            format!("{}..={}", cfg.fit_window[0], cfg.fit_window[1]),
        );
    run.write_file("correlation.csv", |w| {
        io::write_correlation_csv(w, &all, &meta).map_err(CliError::numeric)
    })?;
    run.write_json("correlate.json", &summary)?;
    let lines: Vec<String> = summary
        .iter()
        .map(|s| match s.fitted_rho {
            Some(r) => format!(
                "nu={}: rho={r:.4} vs |lambda_max|={:.4}",
                s.nu, s.spectral_radius
            ),
            None => format!(
                "nu={}: no fit ({})",
                s.nu,
                s.fit_error.as_deref().unwrap_or("")
            ),
        })
        .collect();
    Ok(format!(
        "{}; wrote correlation.csv, correlate.json",
        lines.join("; ")
    ))
}

#[derive(Serialize)]
struct GaugeSummary {
    nu: f64,
    truncation: usize,
    floor: f64,
    hausdorff_distance: f64,
}

pub fn gauge_check(run: &Run) -> Result<String, CliError> {
    let cfg = &run.config.gauge;
    let eta = GaugeFunction::from_series(cfg.eta.clone());
    let shifted = run.sys.coboundary(&eta);
    let nus = &run.config.nu;
    let trunc = run.config.truncation_for(nus)?;
    let work = par::map_slice(nus, |&nu| -> Result<_, CliError> {
        let a = run
            .assemble(&run.sys, nu, trunc)?
            .spectrum()
            .context(|| format!("nu = {nu}"))?;
        let b = run
            .assemble(&shifted, nu, trunc)?
            .spectrum()
            .context(|| format!("nu = {nu}"))?;
        let d = hausdorff_gap(&a, &b, cfg.floor).context(|| "distance".into())?;
        Ok((nu, a, b, d))
    });
    let mut summary = Vec::new();
    for item in work {
        let (nu, a, b, d) = item?;
        for (prefix, s, sys) in [
            ("gauge_original_", &a, &run.sys),
            ("gauge_coboundary_", &b, &shifted),
        ] {
            let meta = run
                .transfer_meta("gauge-check", sys, nu, trunc)
                .with("system", sys.label());
            run.write_file(&frame_name(prefix, nu), |w| {
                io::write_spectrum_csv(w, std::slice::from_ref(s), &meta).map_err(CliError::numeric)
            })?;
        }
        summary.push(GaugeSummary {
            nu,
            truncation: trunc.n(),
            floor: cfg.floor,
            hausdorff_distance: d,
        });
    }
    run.write_json("gauge.json", &summary)?;
    let worst = summary
        .iter()
        .map(|s| s.hausdorff_distance)
        .fold(0.0, f64::max);
    Ok(format!(
        "max Hausdorff distance above floor {} = {worst:.3e}; wrote gauge_*.csv, gauge.json",
        cfg.floor
    ))
}
