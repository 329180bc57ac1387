//! Locating a point where the smoothed profile has usable curvature.
//!
//! The square construction divides by an estimate of `S''(x0)`, so it needs
//! a point where the centered second difference is comfortably above the
//! numerical noise floor. Derivatives are never computed analytically: the
//! second difference with a caller-chosen step is the estimate, and its step
//! is recorded so later stages can reason about its bias.

use crate::error::{Error, Result};
use crate::net::ScalarNet;

/// A probed point of nonzero curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePoint {
    /// Scan point maximizing the absolute second difference.
    pub x0: f64,
    /// Centered second-difference estimate of S''(x0).
    pub s2: f64,
    /// The finite-difference step the estimate used.
    pub fd_step: f64,
}

/// Scan `[−window, window]` on a uniform grid and return the point with the
/// largest |centered second difference|, `[S(x+h) − 2S(x) + S(x−h)]/h²`.
///
/// Fails with [`Error::CurvatureNotFound`] if the largest value stays below
/// the floor `1e−4 · max|S|` on the grid — as happens exactly when the
/// profile is affine, where second differences are pure rounding noise.
pub fn find_curvature(
    s_net: &ScalarNet,
    window: f64,
    grid: usize,
    fd_step: f64,
) -> Result<CurvaturePoint> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::NonFiniteParam("scan window"));
    }
    if grid < 3 {
        return Err(Error::InvalidArgument(format!(
            "curvature scan needs at least 3 grid points, got {grid}"
        )));
    }
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::NonFiniteParam("finite-difference step"));
    }

    let h = fd_step;
    let mut best_x = -window;
    let mut best_d = 0.0_f64;
    let mut max_abs_s = 0.0_f64;
    let step = 2.0 * window / (grid - 1) as f64;
    for i in 0..grid {
        let x = if i == grid - 1 { window } else { -window + i as f64 * step };
        let center = s_net.eval(x)?;
        let d = (s_net.eval(x + h)? - 2.0 * center + s_net.eval(x - h)?) / (h * h);
        max_abs_s = max_abs_s.max(center.abs());
        if d.abs() > best_d.abs() {
            best_d = d;
            best_x = x;
        }
    }

    let floor = 1e-4 * max_abs_s;
    if best_d.abs() <= floor || best_d == 0.0 {
        return Err(Error::CurvatureNotFound { max_found: best_d.abs(), floor });
    }
    Ok(CurvaturePoint { x0: best_x, s2: best_d, fd_step: h })
}
