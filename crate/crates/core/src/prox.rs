//! Closed-form proximal maps and projections used by the PDHG solvers.

use crate::error::{Error, Result};
use crate::fourier::{Fft2, SamplingMask};
use crate::grid::{ComplexGrid, Grid, ParamMap, Scalar, SymTensorField, VectorField};

/// Multi-channel fields whose channels share one spatial weight.
pub trait DualField: Clone {
    fn spatial_shape(&self) -> (usize, usize);
    #[doc(hidden)]
    fn project_in_place(&mut self, lambda: &ParamMap);
}

fn project_channel<T: Scalar>(c: &mut Grid<T>, lambda: &ParamMap) {
    for (v, &l) in c.data_mut().iter_mut().zip(lambda.data()) {
        *v = v.project_ball(l);
    }
}

impl<T: Scalar> DualField for VectorField<T> {
    fn spatial_shape(&self) -> (usize, usize) {
        self.shape()
    }

    fn project_in_place(&mut self, lambda: &ParamMap) {
        project_channel(&mut self.x, lambda);
        project_channel(&mut self.y, lambda);
    }
}

impl<T: Scalar> DualField for SymTensorField<T> {
    fn spatial_shape(&self) -> (usize, usize) {
        self.shape()
    }

    fn project_in_place(&mut self, lambda: &ParamMap) {
        project_channel(&mut self.e11, lambda);
        project_channel(&mut self.e22, lambda);
        project_channel(&mut self.e12, lambda);
    }
}

/// Projects each channel of each pixel onto the ball of radius `lambda(x)`.
///
/// Real entries are clamped to `[-lambda, lambda]`; complex entries are
/// scaled radially by `min(1, lambda / |value|)`. This is the dual feasible
/// set of the anisotropic weighted l1 norm.
pub fn project_weighted_linf<F: DualField>(p: &F, lambda: &ParamMap) -> Result<F> {
    lambda.check_shape(p.spatial_shape(), "projection weight")?;
    let mut out = p.clone();
    out.project_in_place(lambda);
    Ok(out)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("prox step must be positive and finite, got {tau}")));
    }
    Ok(())
}

/// Prox of `tau * 1/2 ||. - f||^2`: `(v + tau f) / (1 + tau)`.
pub fn prox_denoise<T: Scalar>(v: &Grid<T>, f: &Grid<T>, tau: f64) -> Result<Grid<T>> {
    check_tau(tau)?;
    v.check_same_shape(f.shape(), "prox operands")?;
    let s = 1.0 / (1.0 + tau);
    Ok(v.zip_map(f, |a, b| (a + b * tau) * s))
}

pub(crate) fn prox_mri_with(
    fft: &Fft2,
    v: &ComplexGrid,
    f: &ComplexGrid,
    mask: &SamplingMask,
    tau: f64,
) -> ComplexGrid {
    let mut k = fft.forward(v);
    let s = 1.0 / (1.0 + tau);
    for ((z, &fz), &keep) in k.data_mut().iter_mut().zip(f.data()).zip(mask.kept()) {
        if keep {
            *z = (*z + fz * tau) * s;
        }
    }
    fft.inverse(&k)
}

/// Exact prox of `tau * 1/2 ||P F u - f||^2`, evaluated in k-space.
///
/// Because `F` is unitary the problem decouples per frequency: acquired
/// coefficients move to `(F v + tau f) / (1 + tau)`, the rest keep `F v`.
pub fn prox_mri(v: &ComplexGrid, f: &ComplexGrid, mask: &SamplingMask, tau: f64) -> Result<ComplexGrid> {
    check_tau(tau)?;
    v.check_same_shape(f.shape(), "prox operands")?;
    mask.check(v.shape())?;
    Ok(prox_mri_with(&Fft2::new(v.height(), v.width()), v, f, mask, tau))
}
