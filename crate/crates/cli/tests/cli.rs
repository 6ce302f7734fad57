use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ruelle_core::io::read_spectrum_csv;

fn ruelle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruelle"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constant_mode_in_spectrum_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = ruelle(
        dir.path(),
        &[
            "spectrum",
            "--set",
            "nu=[0]",
            "--set",
            "truncation=64",
            "--set",
            "convergence_check=true",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&dir.path().join("spectrum.json"));
    assert!(summary[0]["convergence_2n"].as_f64().unwrap() < 1e-9);
    let text = fs::read_to_string(dir.path().join("spectrum_nu_0000.000.csv")).unwrap();
    for key in [
        "config_hash",
        "preset",
        "N",
        "quadrature_points",
        "seed",
        "tool",
        "truncation_rule",
    ] {
        assert!(text.contains(&format!("# {key}: ")), "missing {key}");
    }
    let (_, spectra) = read_spectrum_csv(text.as_bytes()).unwrap();
    let d = spectra[0]
        .eigenvalues()
        .iter()
        .map(|z| (z - num_complex::Complex64::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(d < 1e-10, "{d}");
}

#[test]
fn resonance_union_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = ruelle(dir.path(), &["spectrum", "--set", "nu=[10, 40, 70, 100]"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut csv: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csv.sort();
    assert_eq!(
        csv,
        [
            "spectrum_nu_0010.000.csv",
            "spectrum_nu_0040.000.csv",
            "spectrum_nu_0070.000.csv",
            "spectrum_nu_0100.000.csv"
        ]
    );
    let svg = fs::read_to_string(dir.path().join("spectrum.svg")).unwrap();
    assert_eq!(svg.matches(r#"fill="black""#).count(), 4 * (2 * 192 + 1));
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n# spectra\nnu = []\n").unwrap();
    let o = ruelle(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("line 3: nu: list is empty"),
        "{}",
        stderr(&o)
    );

    fs::write(&cfg, "[cloud]\ncount = 10\ncolour = 1\n").unwrap();
    let o = ruelle(dir.path(), &["cloud", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = ruelle(dir.path(), &["spectrum", "--set", "map.preset=no-such-map"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ruelle(
        dir.path(),
        &["sweep", "--set", "sweep.start=3", "--set", "sweep.stop=1"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reversed"));
}

#[test]
fn numeric_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = ruelle(dir.path(), &["fractal", "--set", "map.preset=doubling-sin"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = ruelle(dir.path(), &["correlate", "--set", "truncation=10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("truncation N >="));
}

#[test]
fn sweep_frames_and_continuity() {
    let dir = tempfile::tempdir().unwrap();
    let o = ruelle(
        dir.path(),
        &[
            "sweep",
            "--set",
            "sweep.start=10",
            "--set",
            "sweep.stop=11",
            "--set",
            "sweep.step=0.05",
            "--set",
            "truncation=48",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&dir.path().join("sweep.json"));
    assert_eq!(s["frames"], 21);
    assert!(dir.path().join("nu_0010.050.csv").exists());
    assert!(dir.path().join("nu_0011.000.csv").exists());
    let worst = s["adjacent_distance"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 0.1, "{worst}");
}

#[test]
fn gauge_check_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = ruelle(
        dir.path(),
        &["gauge-check", "--set", "nu=[20]", "--set", "truncation=96"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let d = json(&dir.path().join("gauge.json"))[0]["hausdorff_distance"]
        .as_f64()
        .unwrap();
    assert!(d <= 1e-4, "{d}");

    let o = ruelle(
        dir.path(),
        &[
            "gauge-check",
            "--set",
            "nu=[5]",
            "--set",
            "gauge.eta.sin=[]",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let d = json(&dir.path().join("gauge.json"))[0]["hausdorff_distance"]
        .as_f64()
        .unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn flat_roof_trapped_set_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = ruelle(
        dir.path(),
        &[
            "trapped",
            "--set",
            "map.preset=doubling-zero",
            "--set",
            "trapped.grid=[64, 33]",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&dir.path().join("trapped.json"));
    let row = s["cell_area"].as_f64().unwrap() * 64.0;
    assert!(s["measure"].as_f64().unwrap() <= row * (1.0 + 1e-12));
    let pgm = fs::read(dir.path().join("trapped.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 33\n255\n"));
}

#[test]
fn reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        for cmd in ["cloud", "correlate", "captivity"] {
            let o = ruelle(
                dir,
                &[
                    cmd,
                    "--set",
                    "cloud.count=2000",
                    "--set",
                    "captivity.n_max=6",
                ],
            );
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        }
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn remaining_commands_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("manifold", "manifold.csv"),
        ("fractal", "fractal.svg"),
        ("captivity", "captivity.csv"),
    ] {
        let o = ruelle(dir.path(), &[cmd, "--set", "fractal.m_range=64"]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let m = json(&dir.path().join("manifold.json"));
    assert!(m["max_residual"].as_f64().unwrap() <= 1e-9);
}
