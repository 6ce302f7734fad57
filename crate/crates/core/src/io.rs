//! File formats: metadata-headed CSV tables and a compact binary matrix
//! layout. Layouts are documented in `FORMATS.md`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back reproduces the written values bit for bit.

use std::io::{self, BufRead, Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use crate::eigen::{Spectrum, SpectrumSource};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::manifold::LiftedPoint;
use crate::phasespace::{CaptivityTable, TrappedSet};
use crate::simulate::{CorrelationSeries, PointCloud};

/// Ordered `key: value` pairs written as leading `# ` comment lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    /// Parse leading `# key: value` lines; returns the header and the
    /// remaining data lines.
    pub fn split<R: BufRead>(r: R) -> Result<(Self, Vec<String>)> {
        let mut meta = Metadata::new();
        let mut data = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            if let Some(rest) = line.strip_prefix("# ") {
                if data.is_empty() {
                    if let Some((k, v)) = rest.split_once(": ") {
                        meta.push(k, v);
                    }
                }
                continue;
            }
            if !line.trim().is_empty() {
                data.push(line);
            }
        }
        Ok((meta, data))
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Format(e.to_string())
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("data line {line_no}: `{field}` is not a number")))
}

/// One line per matrix row: `re_0,im_0,re_1,im_1,...`. Rows and columns run
/// over modes `-N..=N` ascending.
pub fn write_matrix_csv<W: Write>(w: &mut W, m: &CMatrix, meta: &Metadata) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "# layout: row-major, re,im pairs, modes ascending").map_err(io_err)?;
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
        writeln!(w, "{}", fields.join(",")).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<(Metadata, CMatrix)> {
    let (meta, lines) = Metadata::split(r)?;
    let mut data = Vec::new();
    let mut cols = None;
    for (i, line) in lines.iter().enumerate() {
        let vals = line
            .split(',')
            .map(|f| parse_f64(f, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() % 2 != 0 {
            return Err(Error::Format(format!(
                "data line {}: odd number of fields",
                i + 1
            )));
        }
        let n = vals.len() / 2;
        if *cols.get_or_insert(n) != n {
            return Err(Error::Format(format!("data line {}: ragged row", i + 1)));
        }
        data.extend(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])));
    }
    let rows = lines.len();
    let m = Array2::from_shape_vec((rows, cols.unwrap_or(0)), data)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((meta, m))
}

/// `u64` rows, `u64` cols, then `rows * cols` pairs of `f64` (re, im),
/// row-major; everything little-endian.
pub fn write_matrix_binary<W: Write>(w: &mut W, m: &CMatrix) -> Result<()> {
    let (rows, cols) = m.dim();
    w.write_all(&(rows as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(cols as u64).to_le_bytes()).map_err(io_err)?;
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes()).map_err(io_err)?;
        w.write_all(&z.im.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(r: &mut R) -> Result<CMatrix> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word).map_err(io_err)?;
        Ok(word)
    };
    let rows = u64::from_le_bytes(next(r)?) as usize;
    let cols = u64::from_le_bytes(next(r)?) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let re = f64::from_le_bytes(next(r)?);
        let im = f64::from_le_bytes(next(r)?);
        data.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io_err)? != 0 {
        return Err(Error::Format("trailing bytes after matrix data".into()));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))
}

pub const SPECTRUM_COLUMNS: &str = "nu,N,method,index,re,im,modulus";

pub fn write_spectrum_csv<W: Write>(
    w: &mut W,
    spectra: &[Spectrum],
    meta: &Metadata,
) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "{SPECTRUM_COLUMNS}").map_err(io_err)?;
    for s in spectra {
        for (i, z) in s.eigenvalues().iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                s.source.nu,
                s.source.truncation,
                s.source.method,
                i,
                z.re,
                z.im,
                z.norm()
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// Spectra in file order, one per `(nu, N, method)` run.
pub fn read_spectrum_csv<R: BufRead>(r: R) -> Result<(Metadata, Vec<Spectrum>)> {
    let (meta, lines) = Metadata::split(r)?;
    let mut it = lines.iter();
    match it.next() {
        Some(h) if h == SPECTRUM_COLUMNS => {}
        other => {
            return Err(Error::Format(format!(
                "expected header `{SPECTRUM_COLUMNS}`, got {other:?}"
            )))
        }
    }
    let mut out: Vec<(SpectrumSource, Vec<Complex64>)> = Vec::new();
    for (i, line) in it.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Format(format!(
                "data line {}: expected 7 fields",
                i + 1
            )));
        }
        let source = SpectrumSource {
            nu: parse_f64(f[0], i + 1)?,
            truncation: f[1]
                .parse()
                .map_err(|_| Error::Format(format!("data line {}: bad N", i + 1)))?,
            method: f[2].to_string(),
        };
        let z = Complex64::new(parse_f64(f[4], i + 1)?, parse_f64(f[5], i + 1)?);
        match out.last_mut() {
            Some((s, v)) if *s == source => v.push(z),
            _ => out.push((source, vec![z])),
        }
    }
    Ok((
        meta,
        out.into_iter()
            .map(|(s, v)| Spectrum::from_values(v, s))
            .collect(),
    ))
}

pub fn write_occupancy_csv<W: Write>(w: &mut W, k: &TrappedSet, meta: &Metadata) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "x,xi,occupied").map_err(io_err)?;
    for i in 0..k.grid.nx {
        for j in 0..k.grid.nxi {
            let c = k.center(i, j);
            writeln!(w, "{},{},{}", c.x, c.xi, u8::from(k.is_occupied(i, j))).map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn write_captivity_csv<W: Write>(w: &mut W, t: &CaptivityTable, meta: &Metadata) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "n,N,exponent,gap_estimate").map_err(io_err)?;
    for r in &t.rows {
        writeln!(w, "{},{},{},{}", r.n, r.count, r.exponent, r.gap_estimate).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_fractal_csv<W: Write>(
    w: &mut W,
    pts: &[(i64, Complex64)],
    meta: &Metadata,
) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "m,re,im").map_err(io_err)?;
    for (m, z) in pts {
        writeln!(w, "{m},{},{}", z.re, z.im).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_manifold_csv<W: Write>(
    w: &mut W,
    graph: &[(f64, f64)],
    meta: &Metadata,
) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "x,S").map_err(io_err)?;
    for (x, s) in graph {
        writeln!(w, "{x},{s}").map_err(io_err)?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    orbit: &[LiftedPoint],
    meta: &Metadata,
) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "n,x,xi").map_err(io_err)?;
    for (n, p) in orbit.iter().enumerate() {
        writeln!(w, "{n},{},{}", p.x, p.xi).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_cloud_csv<W: Write>(w: &mut W, clouds: &[PointCloud], meta: &Metadata) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "n,x,s").map_err(io_err)?;
    for c in clouds {
        for (x, s) in &c.points {
            writeln!(w, "{},{x},{s}", c.time).map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn write_correlation_csv<W: Write>(
    w: &mut W,
    series: &[CorrelationSeries],
    meta: &Metadata,
) -> Result<()> {
    meta.write(w).map_err(io_err)?;
    writeln!(w, "nu,n,re,im,modulus").map_err(io_err)?;
    for s in series {
        for (n, c) in s.values.iter().enumerate() {
            writeln!(w, "{},{n},{},{},{}", s.nu, c.re, c.im, c.norm()).map_err(io_err)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        Array2::from_shape_fn((3, 3), |(i, j)| {
            Complex64::new(0.1 * i as f64 - 1.0 / 3.0, (j as f64).exp() * 1e-17)
        })
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = sample();
        let meta = Metadata::new().with("N", 1).with("preset", "doubling-cos");
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m, &meta).unwrap();
        let (meta2, back) = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta2.get("preset"), Some("doubling-cos"));
        assert_eq!(
            meta2.get("layout"),
            Some("row-major, re,im pairs, modes ascending")
        );
    }

    #[test]
    fn matrix_binary_round_trip() {
        let m = sample();
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 9 * 16);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        assert_eq!(read_matrix_binary(&mut buf.as_slice()).unwrap(), m);
        let mut short = &buf[..buf.len() - 1];
        assert!(read_matrix_binary(&mut short).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_matrix_binary(&mut long.as_slice()).is_err());
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_matrix_csv("1,2,3\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,2\n1,2,3,4\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,x\n".as_bytes()).is_err());
        assert!(read_spectrum_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let a = Spectrum::from_values(
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.1, -0.2)],
            SpectrumSource {
                nu: 10.0,
                truncation: 48,
                method: "quadrature".into(),
            },
        );
        let b = Spectrum::from_values(
            vec![Complex64::new(0.3, 0.3)],
            SpectrumSource {
                nu: 20.5,
                truncation: 65,
                method: "bessel-closed-form".into(),
            },
        );
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[a.clone(), b.clone()], &Metadata::new()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("nu,N,method,index,re,im,modulus\n10,48,quadrature,0,1,0,1\n"));
        let (_, back) = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn header_lines_lead() {
        let meta = Metadata::new().with("seed", 19).with("version", "0.1.0");
        let mut buf = Vec::new();
        write_fractal_csv(&mut buf, &[(0, Complex64::new(1.5, 0.0))], &meta).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# seed: 19\n# version: 0.1.0\nm,re,im\n0,1.5,0\n");
    }
}
