//! Bessel functions of the first kind of integer order.
//!
//! All orders `J_0 .. J_M` at a fixed argument come out of one Miller
//! backward recurrence `J_{m-1} = (2m/x) J_m - J_{m+1}`, normalized with
//! `J_0 + 2 sum_k J_{2k} = 1`.

/// `J_m(x)` for `m = 0..=m_max`.
pub fn bessel_j_sequence(x: f64, m_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = m_max.max(ax.ceil() as usize);
    // start well above both the requested order and the turning point |m| ~ x
    let mut start = top + 40 + (60.0 * top as f64).sqrt() as usize;
    start += start % 2;

    const BIG: f64 = 1e250;
    const RESCALE: f64 = 1e-250;
    let mut next = 0.0; // J_{m+1}
    let mut cur = 1e-30; // J_m
    let mut norm = 0.0;
    for m in (1..=start).rev() {
        let prev = 2.0 * m as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{m-1}
        let idx = m - 1;
        if idx <= m_max {
            out[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > BIG {
            cur *= RESCALE;
            next *= RESCALE;
            norm *= RESCALE;
            for v in out.iter_mut().skip(idx) {
                *v *= RESCALE;
            }
        }
    }
    norm += cur;
    for v in &mut out {
        *v /= norm;
    }
    if x < 0.0 {
        for (m, v) in out.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_m(x)` for any integer order, via `J_{-m} = (-1)^m J_m`.
pub fn bessel_j(m: i64, x: f64) -> f64 {
    let order = m.unsigned_abs() as usize;
    let v = bessel_j_sequence(x, order)[order];
    if m < 0 && order % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Precomputed `J_m(x)` for `|m| <= m_max` at one argument.
#[derive(Clone, Debug)]
pub struct BesselTable {
    x: f64,
    values: Vec<f64>,
}

impl BesselTable {
    pub fn new(x: f64, m_max: usize) -> Self {
        Self {
            x,
            values: bessel_j_sequence(x, m_max),
        }
    }

    pub fn argument(&self) -> f64 {
        self.x
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// # Panics
    /// If `|m|` exceeds the table's order.
    pub fn get(&self, m: i64) -> f64 {
        let order = m.unsigned_abs() as usize;
        let v = self.values[order];
        if m < 0 && order % 2 == 1 {
            -v
        } else {
            v
        }
    }
}
