//! Undersampled Fourier acquisition `A = P F`.
//!
//! `F` is the centred, unitary 2D DFT (zero frequency at `(h/2, w/2)`), and
//! `P` zeroes every k-space location that was not acquired. Measured data
//! live on the full grid with zeros at unacquired locations, so `A* f` is the
//! zero-filled reconstruction.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{shape_mismatch, Error, Result};
use crate::grid::{ComplexGrid, Grid, ScalarGrid};
use crate::metrics::add_gaussian_noise;
use crate::tensor_io::{Tensor, ToTensor};

/// Reusable plans for one grid shape.
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Centred unitary forward transform.
    pub fn forward(&self, u: &ComplexGrid) -> ComplexGrid {
        self.transform(u, false)
    }

    /// Centred unitary inverse transform; also the adjoint of [`Fft2::forward`].
    pub fn inverse(&self, u: &ComplexGrid) -> ComplexGrid {
        self.transform(u, true)
    }

    fn transform(&self, u: &ComplexGrid, inverse: bool) -> ComplexGrid {
        let (h, w) = (self.height, self.width);
        assert_eq!(u.shape(), (h, w), "FFT plan shape mismatch");
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        // ifftshift
        let mut buf = roll(u, h - h / 2, w - w / 2).into_vec();
        for r in buf.chunks_exact_mut(w) {
            row.process(r);
        }
        let mut column = vec![Complex64::default(); h];
        for j in 0..w {
            for i in 0..h {
                column[i] = buf[i * w + j];
            }
            col.process(&mut column);
            for i in 0..h {
                buf[i * w + j] = column[i];
            }
        }
        let scale = 1.0 / ((h * w) as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= scale);
        // fftshift
        roll(&Grid::from_raw(h, w, buf), h / 2, w / 2)
    }
}

/// Circular shift: `out[(i + di) % h][(j + dj) % w] = u[i][j]`.
fn roll(u: &ComplexGrid, di: usize, dj: usize) -> ComplexGrid {
    let (h, w) = u.shape();
    let mut out = vec![Complex64::default(); h * w];
    for i in 0..h {
        let oi = (i + di) % h;
        for j in 0..w {
            out[oi * w + (j + dj) % w] = u.get(i, j);
        }
    }
    Grid::from_raw(h, w, out)
}

/// Centred unitary 2D DFT.
pub fn fft2_unitary(u: &ComplexGrid) -> ComplexGrid {
    Fft2::new(u.height(), u.width()).forward(u)
}

/// Inverse (and adjoint) of [`fft2_unitary`].
pub fn ifft2_unitary(u: &ComplexGrid) -> ComplexGrid {
    Fft2::new(u.height(), u.width()).inverse(u)
}

/// Binary Cartesian k-space mask with its generation metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    kept: Vec<bool>,
    acceleration: f64,
    center_fraction: f64,
}

impl SamplingMask {
    pub fn new(
        height: usize,
        width: usize,
        kept: Vec<bool>,
        acceleration: f64,
        center_fraction: f64,
    ) -> Result<Self> {
        if kept.len() != height * width {
            return Err(Error::Shape(format!(
                "{height}x{width} mask needs {} entries, got {}",
                height * width,
                kept.len()
            )));
        }
        Ok(Self { height, width, kept, acceleration, center_fraction })
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self { height, width, kept: vec![true; height * width], acceleration: 1.0, center_fraction: 1.0 }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            kept: vec![false; height * width],
            acceleration: f64::INFINITY,
            center_fraction: 0.0,
        }
    }

    /// Reads a 0/1 grid. The acceleration is recomputed from the kept count.
    pub fn from_grid(grid: &ScalarGrid, center_fraction: f64) -> Result<Self> {
        let mut kept = Vec::with_capacity(grid.len());
        for &v in grid.data() {
            if v == 0.0 {
                kept.push(false);
            } else if v == 1.0 {
                kept.push(true);
            } else {
                return Err(Error::Validation(format!("mask value {v} is neither 0 nor 1")));
            }
        }
        let n = kept.iter().filter(|&&k| k).count();
        let acceleration = if n == 0 { f64::INFINITY } else { kept.len() as f64 / n as f64 };
        Self::new(grid.height(), grid.width(), kept, acceleration, center_fraction)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn is_kept(&self, i: usize, j: usize) -> bool {
        self.kept[i * self.width + j]
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    /// Nominal acceleration factor `R`.
    pub fn acceleration(&self) -> f64 {
        self.acceleration
    }

    pub fn center_fraction(&self) -> f64 {
        self.center_fraction
    }

    pub fn kept_fraction(&self) -> f64 {
        self.kept.iter().filter(|&&k| k).count() as f64 / self.kept.len() as f64
    }

    pub fn to_grid(&self) -> ScalarGrid {
        Grid::from_raw(
            self.height,
            self.width,
            self.kept.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect(),
        )
    }

    /// Zeroes unacquired k-space entries.
    pub fn apply(&self, k: &ComplexGrid) -> Result<ComplexGrid> {
        self.check(k.shape())?;
        Ok(Grid::from_raw(
            self.height,
            self.width,
            k.data()
                .iter()
                .zip(&self.kept)
                .map(|(&z, &keep)| if keep { z } else { Complex64::default() })
                .collect(),
        ))
    }

    pub(crate) fn check(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return Err(shape_mismatch("mask", self.shape(), shape));
        }
        Ok(())
    }
}

impl ToTensor for SamplingMask {
    fn to_tensor(&self) -> Result<Tensor> {
        self.to_grid().to_tensor()
    }
}

/// `A u = P F u`.
pub fn forward(u: &ComplexGrid, mask: &SamplingMask) -> Result<ComplexGrid> {
    mask.check(u.shape())?;
    mask.apply(&fft2_unitary(u))
}

/// `A* f = F^-1 P f`, the zero-filled reconstruction.
pub fn adjoint(f: &ComplexGrid, mask: &SamplingMask) -> Result<ComplexGrid> {
    mask.check(f.shape())?;
    Ok(ifft2_unitary(&mask.apply(f)?))
}

/// Cartesian phase-encode (column) mask.
///
/// All `ceil(center_fraction * width)` central columns are kept; further
/// columns are drawn uniformly without replacement until `round(width / R)`
/// columns are kept in total. The draw depends only on `seed`.
pub fn make_mask(
    shape: (usize, usize),
    acceleration: u32,
    center_fraction: f64,
    seed: u64,
) -> Result<SamplingMask> {
    let (h, w) = shape;
    if h < 16 || w < 16 {
        return Err(Error::Config(format!("mask shape {h}x{w} is below the 16x16 minimum")));
    }
    if acceleration < 1 {
        return Err(Error::Config("acceleration must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&center_fraction) {
        return Err(Error::Config(format!("center fraction {center_fraction} outside [0, 1]")));
    }
    let n_center = (center_fraction * w as f64).ceil() as usize;
    let target = (w as f64 / acceleration as f64).round() as usize;
    if n_center > target {
        return Err(Error::Config(format!(
            "{n_center} central columns exceed the budget of {target} columns for R = {acceleration}"
        )));
    }
    let start = w / 2 - n_center / 2;
    let mut columns = vec![false; w];
    columns[start..start + n_center].iter_mut().for_each(|c| *c = true);
    let outer: Vec<usize> = (0..w).filter(|&j| !columns[j]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in index::sample(&mut rng, outer.len(), target - n_center) {
        columns[outer[k]] = true;
    }
    let kept = (0..h).flat_map(|_| columns.iter().copied()).collect();
    SamplingMask::new(h, w, kept, acceleration as f64, center_fraction)
}

/// Simulated single-coil acquisition: `P (F u + noise)` with i.i.d. Gaussian
/// noise of standard deviation `sd` on real and imaginary parts.
pub fn simulate_kspace(
    u: &ComplexGrid,
    mask: &SamplingMask,
    sd: f64,
    seed: u64,
) -> Result<ComplexGrid> {
    mask.check(u.shape())?;
    let noisy = add_gaussian_noise(&fft2_unitary(u), sd, seed)?;
    mask.apply(&noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_complex(h: usize, w: usize, seed: u64) -> ComplexGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_fn(h, w, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn inverse_pair_and_unitarity() {
        for &(h, w) in &[(32, 32), (17, 13), (4, 6)] {
            let u = random_complex(h, w, 3);
            let k = fft2_unitary(&u);
            assert!((k.norm() - u.norm()).abs() <= 1e-10 * u.norm());
            let back = ifft2_unitary(&k);
            assert!(back.sub(&u).norm() <= 1e-10 * u.norm());
        }
    }

    #[test]
    fn dc_coefficient_is_centred() {
        let k = fft2_unitary(&Grid::filled(4, 4, Complex64::new(1.0, 0.0)));
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (2, 2) { 4.0 } else { 0.0 };
                assert!((k.get(i, j).norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_and_empty_masks() {
        let u = random_complex(16, 16, 9);
        let full = SamplingMask::full(16, 16);
        assert!(forward(&u, &full).unwrap().sub(&fft2_unitary(&u)).norm() < 1e-12);
        let aa = adjoint(&forward(&u, &full).unwrap(), &full).unwrap();
        assert!(aa.sub(&u).norm() <= 1e-10 * u.norm());
        let empty = SamplingMask::empty(16, 16);
        assert_eq!(forward(&u, &empty).unwrap().norm(), 0.0);
        assert_eq!(adjoint(&u, &empty).unwrap().norm(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_structural() {
        let u = random_complex(16, 16, 1);
        assert!(matches!(forward(&u, &SamplingMask::full(16, 17)), Err(Error::Shape(_))));
        assert!(matches!(adjoint(&u, &SamplingMask::full(8, 16)), Err(Error::Shape(_))));
    }

    #[test]
    fn mask_generation() {
        let all = make_mask((32, 32), 1, 0.08, 1).unwrap();
        assert!(all.kept().iter().all(|&k| k));

        let m = make_mask((320, 320), 4, 0.08, 7).unwrap();
        let frac = m.kept_fraction();
        assert!((0.2..=0.3).contains(&frac), "{frac}");
        // central band of ceil(0.08 * 320) = 26 columns
        for j in 160 - 13..160 + 13 {
            assert!(m.is_kept(0, j) && m.is_kept(319, j));
        }
        assert_eq!(m, make_mask((320, 320), 4, 0.08, 7).unwrap());
        assert_ne!(m, make_mask((320, 320), 4, 0.08, 8).unwrap());
    }

    #[test]
    fn mask_fraction_within_contract() {
        for r in 4..=8u32 {
            for seed in 0..5 {
                let m = make_mask((64, 96), r, 0.08, seed).unwrap();
                let frac = m.kept_fraction() * r as f64;
                assert!((0.8..=1.2).contains(&frac), "R={r}: {frac}");
            }
        }
    }

    #[test]
    fn infeasible_center_band() {
        assert!(matches!(make_mask((64, 64), 8, 0.5, 0), Err(Error::Config(_))));
        assert!(matches!(make_mask((8, 64), 4, 0.08, 0), Err(Error::Config(_))));
    }

    #[test]
    fn mask_grid_round_trip() {
        let m = make_mask((16, 32), 4, 0.1, 2).unwrap();
        let back = SamplingMask::from_grid(&m.to_grid(), 0.1).unwrap();
        assert_eq!(back.kept(), m.kept());
        assert!((back.acceleration() - 4.0).abs() < 1e-12);
    }
}
