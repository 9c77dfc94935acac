//! Image quality metrics and the noise model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{Grid, Scalar, ScalarGrid};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_range(data_range: f64) -> Result<()> {
    if !(data_range > 0.0 && data_range.is_finite()) {
        return Err(Error::Config(format!("data range must be positive, got {data_range}")));
    }
    Ok(())
}

/// Mean squared error between two grids of the same shape.
pub fn mse(u: &ScalarGrid, reference: &ScalarGrid) -> Result<f64> {
    u.check_same_shape(reference.shape(), "metric operands")?;
    let s: f64 = u.data().iter().zip(reference.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / u.len() as f64)
}

/// `10 log10(range^2 / MSE)`; `+inf` when the images are identical.
pub fn psnr(u: &ScalarGrid, reference: &ScalarGrid, data_range: f64) -> Result<f64> {
    check_range(data_range)?;
    let m = mse(u, reference)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / m).log10())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, t) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|t| *t /= s);
    k
}

/// Separable "valid" filtering: output is `(h - 10) x (w - 10)`.
fn filter_valid(x: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        let src = &x[i * w..(i + 1) * w];
        for j in 0..ow {
            rows[i * ow + j] = k.iter().zip(&src[j..j + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for (t, &kt) in k.iter().enumerate() {
            let src = &rows[(i + t) * ow..(i + t + 1) * ow];
            for (o, &v) in out[i * ow..(i + 1) * ow].iter_mut().zip(src) {
                *o += kt * v;
            }
        }
    }
    out
}

/// Mean structural similarity with an 11x11 Gaussian window (sd 1.5),
/// `K1 = 0.01`, `K2 = 0.03`, averaged over all fully contained windows.
pub fn ssim(u: &ScalarGrid, reference: &ScalarGrid, data_range: f64) -> Result<f64> {
    check_range(data_range)?;
    u.check_same_shape(reference.shape(), "metric operands")?;
    let (h, w) = u.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    let k = gaussian_taps();
    let (x, y) = (u.data(), reference.data());
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = filter_valid(x, h, w, &k);
    let my = filter_valid(y, h, w, &k);
    let sxx = filter_valid(&xx, h, w, &k);
    let syy = filter_valid(&yy, h, w, &k);
    let sxy = filter_valid(&xy, h, w, &k);
    let c1 = (SSIM_K1 * data_range).powi(2);
    let c2 = (SSIM_K2 * data_range).powi(2);
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|t| {
            let (a, b) = (mx[t], my[t]);
            let vx = sxx[t] - a * a;
            let vy = syy[t] - b * b;
            let cov = sxy[t] - a * b;
            ((2.0 * a * b + c1) * (2.0 * cov + c2)) / ((a * a + b * b + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// `u + eta` with i.i.d. `N(0, sd^2)` on every real component.
///
/// Complex samples get independent noise on both parts. The draw order is
/// row-major, real part first, so results are reproducible per seed.
pub fn add_gaussian_noise<T: Scalar>(u: &Grid<T>, sd: f64, seed: u64) -> Result<Grid<T>> {
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::Config(format!("noise level must be non-negative, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(u.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = u
        .data()
        .iter()
        .map(|&v| {
            let re = normal.sample(&mut rng);
            let im = if T::IS_COMPLEX { normal.sample(&mut rng) } else { 0.0 };
            v + T::from_parts(re, im)
        })
        .collect();
    Ok(Grid::from_raw(u.height(), u.width(), data))
}
