//! Minimal SVG scatter plots and PGM raster images.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::phasespace::TrappedSet;

/// Reference circle centred at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Circle {
    pub radius: f64,
    pub color: String,
    pub label: String,
}

/// Scatter of points in the complex plane with axes and reference circles.
#[derive(Clone, Debug)]
pub struct Scatter {
    pub title: String,
    pub points: Vec<Complex64>,
    pub circles: Vec<Circle>,
    /// Half-width of the square view window, centred at the origin when
    /// `center` is `None`.
    pub extent: f64,
    pub center: Option<Complex64>,
    pub point_radius: f64,
}

impl Scatter {
    pub fn new(title: impl Into<String>, points: Vec<Complex64>) -> Self {
        let extent = points
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max)
            .max(1e-12)
            * 1.1;
        Self {
            title: title.into(),
            points,
            circles: Vec::new(),
            extent,
            center: None,
            point_radius: 2.0,
        }
    }

    /// Fit the window to the bounding box of the points.
    pub fn fit_to_points(mut self) -> Self {
        let (mut lo, mut hi) = (
            Complex64::new(f64::INFINITY, f64::INFINITY),
            Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for z in &self.points {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        if self.points.is_empty() {
            return self;
        }
        self.center = Some((lo + hi) * 0.5);
        self.extent = ((hi.re - lo.re).max(hi.im - lo.im) * 0.55).max(1e-12);
        self
    }

    pub fn circle(mut self, radius: f64, color: &str, label: &str) -> Self {
        self.extent = self.extent.max(radius * 1.1);
        self.circles.push(Circle {
            radius,
            color: color.into(),
            label: label.into(),
        });
        self
    }

    pub fn to_svg(&self) -> String {
        const SIZE: f64 = 600.0;
        let c = self.center.unwrap_or(Complex64::new(0.0, 0.0));
        let scale = SIZE / (2.0 * self.extent);
        let px = |z: Complex64| {
            (
                (z.re - c.re) * scale + SIZE / 2.0,
                SIZE / 2.0 - (z.im - c.im) * scale,
            )
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{h}" viewBox="0 0 {SIZE} {h}">"#,
            h = SIZE + 30.0
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="10" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
            SIZE + 20.0,
            escape(&self.title)
        );
        let (ox, oy) = px(Complex64::new(0.0, 0.0));
        if (0.0..=SIZE).contains(&oy) {
            let _ = writeln!(
                s,
                r##"<line x1="0" y1="{oy:.2}" x2="{SIZE}" y2="{oy:.2}" stroke="#888" stroke-width="0.5"/>"##
            );
        }
        if (0.0..=SIZE).contains(&ox) {
            let _ = writeln!(
                s,
                r##"<line x1="{ox:.2}" y1="0" x2="{ox:.2}" y2="{SIZE}" stroke="#888" stroke-width="0.5"/>"##
            );
        }
        for circle in &self.circles {
            let _ = writeln!(
                s,
                r#"<circle cx="{ox:.2}" cy="{oy:.2}" r="{:.2}" fill="none" stroke="{}" stroke-width="1.5"><title>{}</title></circle>"#,
                circle.radius * scale,
                escape(&circle.color),
                escape(&circle.label)
            );
        }
        for z in &self.points {
            let (x, y) = px(*z);
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{}" fill="black"/>"#,
                self.point_radius
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Resonance plot: eigenvalues with the unit circle (red) and the
/// `1/sqrt(E_min)` circle (green).
pub fn spectrum_svg(title: &str, eigenvalues: Vec<Complex64>, e_min: f64) -> String {
    Scatter::new(title, eigenvalues)
        .circle(1.0, "red", "unit circle")
        .circle(1.0 / e_min.sqrt(), "green", "1/sqrt(E_min)")
        .to_svg()
}

/// Binary PGM (`P5`), one byte per pixel, rows top to bottom.
pub fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Occupied cells black on white; `x` runs left to right, `xi` bottom to top.
pub fn occupancy_pgm(k: &TrappedSet) -> Vec<u8> {
    let (w, h) = (k.grid.nx, k.grid.nxi);
    let mut px = vec![255u8; w * h];
    for i in 0..w {
        for j in 0..h {
            if k.is_occupied(i, j) {
                px[(h - 1 - j) * w + i] = 0;
            }
        }
    }
    pgm(w, h, &px)
}

/// Counts from [`crate::simulate::histogram`] as grey levels, darker is
/// denser; `x` left to right, `s` bottom to top.
pub fn density_pgm(counts: &[u64], bins: usize) -> Vec<u8> {
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut px = vec![255u8; bins * bins];
    for i in 0..bins {
        for j in 0..bins {
            let level = 255.0 * (1.0 - counts[i * bins + j] as f64 / max);
            px[(bins - 1 - j) * bins + i] = level.round() as u8;
        }
    }
    pgm(bins, bins, &px)
}
