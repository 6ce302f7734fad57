//! Transfer operators, phase-space geometry and simulation for
//! skew-product extensions of expanding circle maps.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod eigen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod maps;
pub mod par;
pub mod phasespace;
pub mod plot;
pub mod simulate;
pub mod transfer;

pub use error::{Error, Result};
