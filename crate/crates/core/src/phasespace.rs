//! The k-valued canonical map on the cotangent cylinder `S^1 x R`, escape
//! radius, captivity counts and finite-depth trapped-set estimates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::maps::{wrap_unit, MapSystem};
use crate::par;

/// Largest number of branch endpoints any enumeration may visit.
pub const ENUMERATION_CAP: u128 = 1 << 20;
/// Margin added to the escape radius beyond the lemma's bound.
pub const RADIUS_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhasePoint {
    /// `x` is reduced into `[0, 1)`.
    pub fn new(x: f64, xi: f64) -> Self {
        Self {
            x: wrap_unit(x.rem_euclid(1.0)),
            xi,
        }
    }
}

/// Branch choices `eps_1, eps_2, ...` in the order they are applied.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchSequence {
    pub word: Vec<u32>,
}

impl BranchSequence {
    pub fn new(word: Vec<u32>, k: u32) -> Result<Self> {
        if let Some(&bad) = word.iter().find(|&&e| e >= k) {
            return Err(invalid("word", format!("letter {bad} outside 0..{k}")));
        }
        Ok(Self { word })
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }
}

/// `Z = S^1 x [-R, R]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactZone {
    pub radius: f64,
    pub kappa: f64,
}

impl CompactZone {
    /// Zone of a chosen radius, for refinement studies (`R -> 2R`).
    pub fn with_radius(radius: f64, kappa: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(
                "R",
                format!("must be positive and finite, got {radius}"),
            ));
        }
        Ok(Self { radius, kappa })
    }

    #[inline]
    pub fn contains(&self, xi: f64) -> bool {
        xi.abs() <= self.radius
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            radius: self.radius * factor,
            kappa: self.kappa,
        }
    }
}

/// Uniform grid over `S^1 x [-R, R]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nxi: usize,
}

impl GridSpec {
    pub const CAPTIVITY_DEFAULT: GridSpec = GridSpec { nx: 256, nxi: 129 };
    pub const TRAPPED_DEFAULT: GridSpec = GridSpec { nx: 512, nxi: 257 };

    pub fn new(nx: usize, nxi: usize) -> Result<Self> {
        if nx == 0 || nxi < 2 {
            return Err(invalid(
                "grid",
                format!("need nx >= 1 and nxi >= 2, got ({nx}, {nxi})"),
            ));
        }
        Ok(Self { nx, nxi })
    }

    pub fn len(&self) -> usize {
        self.nx * self.nxi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `(i/nx, -R + 2R j/(nxi - 1))`, both ends of the fiber included.
    pub fn node(&self, i: usize, j: usize, radius: f64) -> PhasePoint {
        let t = 2.0 * j as f64 / (self.nxi - 1) as f64 - 1.0;
        PhasePoint::new(i as f64 / self.nx as f64, radius * t)
    }
}

/// `(E^{-1}_eps(x), E'(x') xi + tau'(x'))`.
pub fn canonical_step(sys: &MapSystem, p: PhasePoint, eps: u32) -> Result<PhasePoint> {
    let x1 = sys.inverse_branch(p.x, eps)?;
    Ok(PhasePoint {
        x: x1,
        xi: sys.expand_deriv(x1) * p.xi + sys.tau().deriv(x1),
    })
}

pub fn default_kappa(sys: &MapSystem) -> f64 {
    0.5 * (1.0 + sys.e_min())
}

/// `R = max|tau'| / (E_min - kappa)` plus a margin: beyond it every branch
/// satisfies `|xi'| > kappa |xi|`.
pub fn escape_radius(sys: &MapSystem, kappa: f64) -> Result<CompactZone> {
    let e = sys.e_min();
    if !(kappa > 1.0 && kappa < e) {
        return Err(invalid(
            "kappa",
            format!("need 1 < kappa < E_min = {e}, got {kappa}"),
        ));
    }
    Ok(CompactZone {
        radius: sys.tau().max_abs_deriv() / (e - kappa) + RADIUS_MARGIN,
        kappa,
    })
}

/// Zone with the default `kappa = (1 + E_min) / 2`.
pub fn default_zone(sys: &MapSystem) -> CompactZone {
    escape_radius(sys, default_kappa(sys)).expect("default kappa lies in (1, E_min)")
}

fn check_cap(k: u32, n: usize) -> Result<()> {
    let requested = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if requested > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            requested,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

/// All `k^n` endpoints with their words, depth-first (first branch outermost).
pub fn branch_tree(
    sys: &MapSystem,
    p: PhasePoint,
    n: usize,
) -> Result<Vec<(BranchSequence, PhasePoint)>> {
    check_cap(sys.k(), n)?;
    let mut out = Vec::with_capacity(sys.k().pow(n as u32) as usize);
    let mut word = Vec::with_capacity(n);
    fn rec(
        sys: &MapSystem,
        p: PhasePoint,
        left: usize,
        word: &mut Vec<u32>,
        out: &mut Vec<(BranchSequence, PhasePoint)>,
    ) -> Result<()> {
        if left == 0 {
            out.push((BranchSequence { word: word.clone() }, p));
            return Ok(());
        }
        for eps in 0..sys.k() {
            let q = canonical_step(sys, p, eps)?;
            word.push(eps);
            rec(sys, q, left - 1, word, out)?;
            word.pop();
        }
        Ok(())
    }
    rec(sys, p, n, &mut word, &mut out)?;
    Ok(out)
}

/// Image of `p` under a given word.
pub fn apply_word(sys: &MapSystem, p: PhasePoint, word: &BranchSequence) -> Result<PhasePoint> {
    word.word
        .iter()
        .try_fold(p, |q, &e| canonical_step(sys, q, e))
}

/// `counts[d]` = endpoints at depth `d <= depth` lying in `Z`.
///
/// Branches are cut as soon as `|xi| > R`: by the escape lemma they grow
/// geometrically from then on and never re-enter `Z`.
fn endpoint_counts(
    sys: &MapSystem,
    zone: &CompactZone,
    p: PhasePoint,
    depth: usize,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; depth + 1];
    fn rec(
        sys: &MapSystem,
        zone: &CompactZone,
        p: PhasePoint,
        d: usize,
        depth: usize,
        counts: &mut [u64],
    ) -> Result<()> {
        if !zone.contains(p.xi) {
            return Ok(());
        }
        counts[d] += 1;
        if d == depth {
            return Ok(());
        }
        for eps in 0..sys.k() {
            rec(
                sys,
                zone,
                canonical_step(sys, p, eps)?,
                d + 1,
                depth,
                counts,
            )?;
        }
        Ok(())
    }
    rec(sys, zone, p, 0, depth, &mut counts)?;
    Ok(counts)
}

/// Per-depth maxima over the grid of endpoints in `Z`, for depths `0..=n`.
fn grid_max_counts(
    sys: &MapSystem,
    zone: &CompactZone,
    n: usize,
    grid: GridSpec,
) -> Result<Vec<u64>> {
    check_cap(sys.k(), n)?;
    let per_point: Vec<Result<Vec<u64>>> = par::map_range(grid.len(), |idx| {
        let p = grid.node(idx / grid.nxi, idx % grid.nxi, zone.radius);
        endpoint_counts(sys, zone, p, n)
    });
    let mut best = vec![0u64; n + 1];
    for counts in per_point {
        for (b, c) in best.iter_mut().zip(counts?) {
            *b = (*b).max(c);
        }
    }
    Ok(best)
}

/// `N(n)`: grid maximum of the number of depth-`n` endpoints in `Z`.
pub fn captivity_count(
    sys: &MapSystem,
    zone: &CompactZone,
    n: usize,
    grid: GridSpec,
) -> Result<u64> {
    Ok(grid_max_counts(sys, zone, n, grid)?[n])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptivityRow {
    pub n: usize,
    pub count: u64,
    /// `log N(n) / n`.
    pub exponent: f64,
    /// `E_min^{-1/2} exp(exponent / 2)`.
    pub gap_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptivityTable {
    pub rows: Vec<CaptivityRow>,
    pub grid: GridSpec,
    pub zone: CompactZone,
    pub k: u32,
}

impl CaptivityTable {
    pub fn count(&self, n: usize) -> Option<u64> {
        if n == 0 {
            return Some(1);
        }
        self.rows.iter().find(|r| r.n == n).map(|r| r.count)
    }

    /// `N(a + b) <= N(a) N(b)` on every computed pair.
    pub fn is_subadditive(&self) -> bool {
        self.subadditivity_violations().is_empty()
    }

    pub fn subadditivity_violations(&self) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for a in &self.rows {
            for b in &self.rows {
                if let Some(c) = self.count(a.n + b.n) {
                    if c as u128 > a.count as u128 * b.count as u128 {
                        bad.push((a.n, b.n));
                    }
                }
            }
        }
        bad
    }

    /// Gap estimate from the last row.
    pub fn gap_estimate(&self) -> Option<f64> {
        self.rows.last().map(|r| r.gap_estimate)
    }
}

pub fn captivity_table(
    sys: &MapSystem,
    zone: &CompactZone,
    n_max: usize,
    grid: GridSpec,
) -> Result<CaptivityTable> {
    if n_max == 0 {
        return Err(invalid("n_max", "need at least one row"));
    }
    let counts = grid_max_counts(sys, zone, n_max, grid)?;
    let e = sys.e_min();
    let rows = (1..=n_max)
        .map(|n| {
            let count = counts[n];
            let exponent = if count == 0 {
                f64::NEG_INFINITY
            } else {
                (count as f64).ln() / n as f64
            };
            CaptivityRow {
                n,
                count,
                exponent,
                gap_estimate: (0.5 * exponent).exp() / e.sqrt(),
            }
        })
        .collect();
    Ok(CaptivityTable {
        rows,
        grid,
        zone: *zone,
        k: sys.k(),
    })
}

/// Finite-depth outer approximation of the trapped set on a cell grid.
///
/// Cell `(i, j)` is centred at `(i/nx, -R + (j + 1/2) 2R/nxi)`; it is marked
/// when some word of length `depth` keeps every image of the centre in `Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrappedSet {
    pub grid: GridSpec,
    pub zone: CompactZone,
    pub depth: usize,
    /// Row-major over `x`: index `i * nxi + j`.
    pub occupied: Vec<bool>,
    /// Occupied cell count times cell area.
    pub measure: f64,
}

impl TrappedSet {
    pub fn cell_width(&self) -> f64 {
        1.0 / self.grid.nx as f64
    }

    pub fn cell_height(&self) -> f64 {
        2.0 * self.zone.radius / self.grid.nxi as f64
    }

    pub fn center(&self, i: usize, j: usize) -> PhasePoint {
        trapped_cell_center(self.grid, self.zone.radius, i, j)
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[i * self.grid.nxi + j]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    /// Cell containing `(x, xi)`, if inside the zone.
    pub fn cell_of(&self, x: f64, xi: f64) -> Option<(usize, usize)> {
        let nx = self.grid.nx as f64;
        let i = ((x.rem_euclid(1.0) * nx).round() as usize) % self.grid.nx;
        let t = (xi + self.zone.radius) / self.cell_height();
        if !(0.0..self.grid.nxi as f64).contains(&t) {
            return None;
        }
        Some((i, t.floor() as usize))
    }

    /// Occupied `xi` centres of column `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.grid.nxi)
            .filter(|&j| self.is_occupied(i, j))
            .map(|j| self.center(i, j).xi)
            .collect()
    }
}

fn trapped_cell_center(grid: GridSpec, radius: f64, i: usize, j: usize) -> PhasePoint {
    let h = 2.0 * radius / grid.nxi as f64;
    PhasePoint::new(i as f64 / grid.nx as f64, -radius + (j as f64 + 0.5) * h)
}

fn survives(sys: &MapSystem, zone: &CompactZone, p: PhasePoint, left: usize) -> Result<bool> {
    if !zone.contains(p.xi) {
        return Ok(false);
    }
    if left == 0 {
        return Ok(true);
    }
    for eps in 0..sys.k() {
        if survives(sys, zone, canonical_step(sys, p, eps)?, left - 1)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn trapped_set_estimate(
    sys: &MapSystem,
    zone: &CompactZone,
    depth: usize,
    grid: GridSpec,
) -> Result<TrappedSet> {
    if depth == 0 {
        return Err(invalid("depth", "must be >= 1"));
    }
    check_cap(sys.k(), depth)?;
    let cells: Vec<Result<bool>> = par::map_range(grid.len(), |idx| {
        let p = trapped_cell_center(grid, zone.radius, idx / grid.nxi, idx % grid.nxi);
        survives(sys, zone, p, depth)
    });
    let occupied: Vec<bool> = cells.into_iter().collect::<Result<_>>()?;
    let area = (1.0 / grid.nx as f64) * (2.0 * zone.radius / grid.nxi as f64);
    let measure = occupied.iter().filter(|&&b| b).count() as f64 * area;
    Ok(TrappedSet {
        grid,
        zone: *zone,
        depth,
        occupied,
        measure,
    })
}

/// Escape function `A_m(xi) = (<max(|xi|, R)> / <R>)^m` with `<t> = sqrt(1 + t^2)`:
/// the weight `<xi>^m` outside `Z`, flattened to 1 inside.
pub fn escape_function(zone: &CompactZone, m: f64, xi: f64) -> f64 {
    let jb = |t: f64| (1.0 + t * t).sqrt();
    (jb(xi.abs().max(zone.radius)) / jb(zone.radius)).powf(m)
}

/// `A_m(F_eps(p)) / A_m(p)`: at most 1 everywhere, at most
/// `C^{|m|}` with `C = sqrt((R^2 + 1)/(kappa R^2 + 1))` when `|xi| > R`.
pub fn escape_function_ratio(
    sys: &MapSystem,
    zone: &CompactZone,
    m: f64,
    p: PhasePoint,
    eps: u32,
) -> Result<f64> {
    if !(m < 0.0) {
        return Err(invalid("m", format!("must be negative, got {m}")));
    }
    let q = canonical_step(sys, p, eps)?;
    Ok(escape_function(zone, m, q.xi) / escape_function(zone, m, p.xi))
}

/// `sqrt((R^2 + 1) / (kappa R^2 + 1))`.
pub fn escape_contraction(zone: &CompactZone) -> f64 {
    let r2 = zone.radius * zone.radius;
    ((r2 + 1.0) / (zone.kappa * r2 + 1.0)).sqrt()
}
