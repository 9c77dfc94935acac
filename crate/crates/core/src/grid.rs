//! Grid-valued data shared by every other module.
//!
//! All grids are row-major with the origin at the top-left pixel. The row
//! index `i` grows downward (the y direction) and the column index `j` grows
//! rightward (the x direction).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{shape_mismatch, Error, Result};

/// Smallest admissible regularisation weight.
pub const DEFAULT_PARAM_FLOOR: f64 = 1e-8;

/// Pixel value type: real (`f64`) or complex (`Complex64`).
///
/// Differences and projections treat a complex sample as a point in the
/// plane; inner products are the real part of `conj(a) * b`.
pub trait Scalar:
    Copy
    + Default
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    const IS_COMPLEX: bool;

    fn from_real(x: f64) -> Self;
    /// Builds a sample from real and imaginary parts; real types drop `im`.
    fn from_parts(re: f64, im: f64) -> Self;
    fn modulus(self) -> f64;
    fn norm_sqr(self) -> f64;
    /// Real inner product `Re(conj(self) * other)`.
    fn dot(self, other: Self) -> f64;
    fn is_finite(self) -> bool;
    /// Nearest point of the closed ball of the given radius about zero.
    fn project_ball(self, radius: f64) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn dot(self, other: Self) -> f64 {
        self * other
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn project_ball(self, radius: f64) -> Self {
        self.clamp(-radius, radius)
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn project_ball(self, radius: f64) -> Self {
        let m = self.norm();
        if m > radius {
            self * (radius / m)
        } else {
            self
        }
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// A `height x width` array of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

/// Real image on the pixel domain.
pub type ScalarGrid = Grid<f64>;
/// Complex image (or k-space data) on the pixel domain.
pub type ComplexGrid = Grid<Complex64>;

impl<T: Scalar> Grid<T> {
    /// Builds a grid, checking the data length and that every sample is finite.
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "{height}x{width} grid needs {} samples, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite sample at row {}, column {}",
                k / width.max(1),
                k % width.max(1)
            )));
        }
        Ok(Self { height, width, data })
    }

    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::from_raw(height, width, vec![T::default(); height * width])
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self::from_raw(height, width, vec![value; height * width])
    }

    /// Builds a grid from `f(row, column)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self::from_raw(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.width + j]
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid::from_raw(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        Grid::from_raw(
            self.height,
            self.width,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    /// Euclidean inner product (real part for complex grids).
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(&a, &b)| a.dot(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum of sample moduli.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.modulus()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise modulus.
    pub fn magnitude(&self) -> ScalarGrid {
        self.map(|v| v.modulus())
    }

    pub fn to_complex(&self) -> ComplexGrid {
        self.map(|v| v.to_complex())
    }

    pub(crate) fn check_same_shape(&self, other_shape: (usize, usize), what: &str) -> Result<()> {
        if self.shape() != other_shape {
            return Err(shape_mismatch(what, self.shape(), other_shape));
        }
        Ok(())
    }
}

impl ScalarGrid {
    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.width + j]
    }
}

/// Two-channel field of first differences: `x` holds column differences and
/// `y` holds row differences.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub x: Grid<T>,
    pub y: Grid<T>,
}

impl<T: Scalar> VectorField<T> {
    pub fn new(x: Grid<T>, y: Grid<T>) -> Result<Self> {
        x.check_same_shape(y.shape(), "vector field channels")?;
        Ok(Self { x, y })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self { x: Grid::zeros(height, width), y: Grid::zeros(height, width) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Anisotropic l1 norm: sum of channel moduli.
    pub fn l1_norm(&self) -> f64 {
        self.x.l1_norm() + self.y.l1_norm()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { x: self.x.add(&other.x), y: self.y.add(&other.y) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { x: self.x.sub(&other.x), y: self.y.sub(&other.y) }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { x: self.x.scaled(s), y: self.y.scaled(s) }
    }
}

/// Symmetric 2x2 tensor per pixel, stored as `(e11, e22, e12)`.
///
/// The off-diagonal entry appears twice in the full tensor, so inner products
/// and l1 norms count it twice.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField<T> {
    pub e11: Grid<T>,
    pub e22: Grid<T>,
    pub e12: Grid<T>,
}

impl<T: Scalar> SymTensorField<T> {
    pub fn new(e11: Grid<T>, e22: Grid<T>, e12: Grid<T>) -> Result<Self> {
        e11.check_same_shape(e22.shape(), "tensor channels")?;
        e11.check_same_shape(e12.shape(), "tensor channels")?;
        Ok(Self { e11, e22, e12 })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            e11: Grid::zeros(height, width),
            e22: Grid::zeros(height, width),
            e12: Grid::zeros(height, width),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.e11.shape()
    }

    /// `<a, b> = sum a11 b11 + a22 b22 + 2 a12 b12`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.e11.dot(&other.e11) + self.e22.dot(&other.e22) + 2.0 * self.e12.dot(&other.e12)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `sum |e11| + |e22| + 2 |e12|`.
    pub fn l1_norm(&self) -> f64 {
        self.e11.l1_norm() + self.e22.l1_norm() + 2.0 * self.e12.l1_norm()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            e11: self.e11.add(&other.e11),
            e22: self.e22.add(&other.e22),
            e12: self.e12.add(&other.e12),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { e11: self.e11.scaled(s), e22: self.e22.scaled(s), e12: self.e12.scaled(s) }
    }
}

/// Checks raw regularisation weights against a positivity floor.
///
/// Returns `Ok(true)` iff every value is at least `floor`. Non-finite values
/// and a data length that disagrees with `height * width` are structural
/// errors rather than a `false` answer.
pub fn validate_param_map(height: usize, width: usize, values: &[f64], floor: f64) -> Result<bool> {
    if values.len() != height * width {
        return Err(Error::Shape(format!(
            "{height}x{width} map needs {} values, got {}",
            height * width,
            values.len()
        )));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("non-finite weight at index {k}")));
    }
    Ok(values.iter().all(|&v| v >= floor))
}

/// Strictly positive per-pixel regularisation weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamMap(ScalarGrid);

impl ParamMap {
    /// Builds a map; every value must be finite and at least [`DEFAULT_PARAM_FLOOR`].
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if !validate_param_map(height, width, &data, DEFAULT_PARAM_FLOOR)? {
            return Err(Error::Validation(format!(
                "parameter map has a value below the positivity floor {DEFAULT_PARAM_FLOOR:e}"
            )));
        }
        Ok(Self(Grid::from_raw(height, width, data)))
    }

    pub fn from_grid(grid: ScalarGrid) -> Result<Self> {
        let (h, w) = grid.shape();
        Self::new(h, w, grid.into_vec())
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn as_grid(&self) -> &ScalarGrid {
        &self.0
    }

    pub fn into_grid(self) -> ScalarGrid {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.min()
    }

    pub fn max(&self) -> f64 {
        self.0.max()
    }

    /// Multiplies every weight by a positive factor.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_grid(self.0.scaled(s))
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize), what: &str) -> Result<()> {
        if self.shape() != shape {
            return Err(shape_mismatch(what, self.shape(), shape));
        }
        Ok(())
    }
}
