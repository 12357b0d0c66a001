//! Bisection for the crossing point of a decreasing and an increasing function.

use crate::error::{Error, Result};

/// Stop once the bracket is narrower than this.
pub const WIDTH_TOL: f64 = 1e-12;
/// Stop once `|f - g| < REL_GAP_TOL * max(f, g)`.
pub const REL_GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance {
    pub t: f64,
    pub f: f64,
    pub g: f64,
}

impl Balance {
    /// Relative mismatch `|f - g| / max(f, g)` at the returned point.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.f.abs().max(self.g.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.f - self.g).abs() / scale
        }
    }
}

/// Finds `t` in `(0, 1)` with `f(t) = g(t)`, where `f` decreases and `g`
/// increases. Requires `f(0) > g(0)` and `f(1) < g(1)`.
pub fn balance(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<Balance> {
    let (f0, g0, f1, g1) = (f(0.0)?, g(0.0)?, f(1.0)?, g(1.0)?);
    if f0 <= g0 || f1 >= g1 {
        return Err(Error::Bracket { f0, g0, f1, g1 });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    loop {
        let t = 0.5 * (lo + hi);
        let (ft, gt) = (f(t)?, g(t)?);
        if (ft - gt).abs() < REL_GAP_TOL * ft.max(gt) || hi - lo < WIDTH_TOL {
            return Ok(Balance { t, f: ft, g: gt });
        }
        if ft > gt {
            lo = t;
        } else {
            hi = t;
        }
    }
}
