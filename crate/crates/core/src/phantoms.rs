//! Deterministic synthetic ground truths.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Grid, ScalarGrid};

pub const MIN_SQUARE_SIZE: usize = 16;
pub const MIN_SHEPP_SIZE: usize = 32;

/// `hi` on a centred axis-aligned square of side `round(inner_fraction * size)`,
/// `lo` elsewhere.
pub fn square_phantom(size: usize, inner_fraction: f64, lo: f64, hi: f64) -> Result<ScalarGrid> {
    if size < MIN_SQUARE_SIZE {
        return Err(Error::Config(format!("square phantom needs size >= {MIN_SQUARE_SIZE}, got {size}")));
    }
    if !(inner_fraction > 0.0 && inner_fraction < 1.0) {
        return Err(Error::Config(format!("inner fraction must lie in (0, 1), got {inner_fraction}")));
    }
    let side = (inner_fraction * size as f64).round() as usize;
    let start = (size - side) / 2;
    let inside = |k: usize| k >= start && k < start + side;
    Ok(Grid::from_fn(size, size, |i, j| if inside(i) && inside(j) { hi } else { lo }))
}

/// `offset + g.0 * i + g.1 * j`, clipped to `[0, 1]` (`i` is the row).
pub fn ramp_phantom(size: usize, gradient: (f64, f64), offset: f64) -> ScalarGrid {
    Grid::from_fn(size, size, |i, j| {
        (offset + gradient.0 * i as f64 + gradient.1 * j as f64).clamp(0.0, 1.0)
    })
}

// (centre x, centre y, semi-axis a, semi-axis b, rotation, additive intensity)
// on [-1, 1]^2 with y pointing down.
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 8] = [
    (0.0, 0.0, 0.72, 0.92, 0.0, 0.9),
    (0.0, 0.02, 0.66, 0.86, 0.0, -0.6),
    (0.22, 0.0, 0.11, 0.30, -0.3, 0.45),
    (-0.22, 0.0, 0.15, 0.40, 0.3, 0.3),
    (0.0, -0.35, 0.20, 0.24, 0.0, 0.2),
    (0.0, 0.10, 0.05, 0.05, 0.0, 0.35),
    (-0.08, 0.60, 0.05, 0.03, 0.0, 0.25),
    (0.06, 0.60, 0.03, 0.05, 0.0, 0.25),
];

/// Unit-modulus phase used by [`shepp_like_phantom`]: a gentle quadratic in
/// normalised coordinates.
pub fn smooth_phase(size: usize) -> ComplexGrid {
    let s = size as f64;
    Grid::from_fn(size, size, |i, j| {
        let y = 2.0 * (i as f64 + 0.5) / s - 1.0;
        let x = 2.0 * (j as f64 + 0.5) / s - 1.0;
        Complex64::from_polar(1.0, 0.6 * x + 0.4 * y * y - 0.3 * x * y)
    })
}

/// Brain-like complex phantom: ellipse intensities (magnitude in `[0, 1]`)
/// times [`smooth_phase`].
pub fn shepp_like_phantom(size: usize) -> Result<ComplexGrid> {
    if size < MIN_SHEPP_SIZE {
        return Err(Error::Config(format!("shepp-like phantom needs size >= {MIN_SHEPP_SIZE}, got {size}")));
    }
    let s = size as f64;
    let magnitude = Grid::from_fn(size, size, |i, j| {
        let y = 2.0 * (i as f64 + 0.5) / s - 1.0;
        let x = 2.0 * (j as f64 + 0.5) / s - 1.0;
        let mut v = 0.0;
        for &(cx, cy, a, b, rot, val) in &ELLIPSES {
            let (sn, cs) = f64::sin_cos(rot);
            let dx = x - cx;
            let dy = y - cy;
            let xr = cs * dx + sn * dy;
            let yr = -sn * dx + cs * dy;
            if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                v += val;
            }
        }
        f64::clamp(v, 0.0, 1.0)
    });
    let phase = smooth_phase(size);
    Ok(magnitude.to_complex().zip_map(&phase, |m, p| m * p))
}
