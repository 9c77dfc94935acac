//! Primal-dual hybrid gradient solvers for weighted TV and TGV.
//!
//! Both solvers share [`PdhgConfig`], [`SolveReport`] and the [`DataTerm`]
//! abstraction over the fidelity `1/2 ||A u - f||^2`. Denoising uses
//! `A = Id`; MRI uses `A = P F` with the exact k-space prox.

mod tgv;
mod tv;

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use crate::diff::{operator_norm_estimate, Regulariser};
use crate::error::{Error, Result};
use crate::fourier::{adjoint, Fft2, SamplingMask};
use crate::grid::{ComplexGrid, Grid, ParamMap, Scalar};
use crate::prox::prox_mri_with;

pub use tgv::{solve_tgv, solve_tgv_field, tgv_energy, unrolled_apply, TgvInit, TgvSolution};
pub use tv::{solve_tv, tv_energy, TvSolution};

/// Logistic sigmoid.
pub fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

/// Guard in the denominator of the relative-change criterion.
pub const REL_CHANGE_EPS: f64 = 1e-12;

/// Step sizes and stopping rule of a PDHG run.
#[derive(Clone, Debug, PartialEq)]
pub struct PdhgConfig {
    /// Dual step.
    pub sigma: f64,
    /// Primal step.
    pub tau: f64,
    /// Extrapolation, in `(0, 1]`.
    pub theta: f64,
    pub max_iters: usize,
    /// Stop once `||u+ - u|| / max(||u||, eps) < tol`; `0` runs all iterations.
    pub tol: f64,
    /// Skip the `sigma * tau * ||K||^2 <= 1` check. Only meant for step sizes
    /// that were obtained by training rather than from the convergence bound.
    pub unchecked_steps: bool,
}

impl PdhgConfig {
    pub const DEFAULT_ITERS: usize = 256;

    fn with_steps(sigma: f64, tau: f64, theta: f64) -> Self {
        Self {
            sigma,
            tau,
            theta,
            max_iters: Self::DEFAULT_ITERS,
            tol: 0.0,
            unchecked_steps: false,
        }
    }

    /// TV denoising: `sigma = tau = sigmoid(10) / sqrt(13)`, `theta = sigmoid(10)`.
    pub fn tv_denoise() -> Self {
        let s = sigmoid(10.0) / 13f64.sqrt();
        Self::with_steps(s, s, sigmoid(10.0))
    }

    /// TV MRI reconstruction: `sigma = 0.3414`, `tau = 0.3255`, `theta = 1`.
    pub fn tv_mri() -> Self {
        Self::with_steps(0.3414, 0.3255, 1.0)
    }

    /// TGV denoising: `sigma = tau = 0.29`, `theta = sigmoid(10)`.
    pub fn tgv_denoise() -> Self {
        Self::with_steps(0.29, 0.29, sigmoid(10.0))
    }

    /// TGV MRI reconstruction with provably convergent steps
    /// `sigma = tau = 1/sqrt(12) - 1e-6`, `theta = 1`.
    pub fn tgv_mri() -> Self {
        let s = 1.0 / 12f64.sqrt() - 1e-6;
        Self::with_steps(s, s, 1.0)
    }

    /// TGV MRI reconstruction with the learned steps `sigma = 0.1695`,
    /// `tau = 0.6553`, `theta = 1`. These violate `sigma * tau * 12 <= 1`, so
    /// the step check is switched off.
    pub fn tgv_mri_trained() -> Self {
        Self { unchecked_steps: true, ..Self::with_steps(0.1695, 0.6553, 1.0) }
    }

    /// Defaults for a model and problem kind.
    pub fn defaults(model: Regulariser, mri: bool) -> Self {
        match (model, mri) {
            (Regulariser::Tv, false) => Self::tv_denoise(),
            (Regulariser::Tv, true) => Self::tv_mri(),
            (Regulariser::Tgv, false) => Self::tgv_denoise(),
            (Regulariser::Tgv, true) => Self::tgv_mri(),
        }
    }

    pub fn with_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Checks parameter ranges and `sigma * tau * ||K||^2 <= 1 + 1e-9`, with
    /// `||K||` estimated for the given model and grid shape.
    pub fn validate(&self, model: Regulariser, shape: (usize, usize)) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "step sizes must be positive: sigma = {}, tau = {}",
                self.sigma, self.tau
            )));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta = {} is outside (0, 1]", self.theta)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tol = {} must be non-negative", self.tol)));
        }
        if self.unchecked_steps {
            return Ok(());
        }
        let norm_sq = cached_norm_sq(model, shape)?;
        let product = self.sigma * self.tau * norm_sq;
        if product > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "step sizes violate sigma * tau * ||K||^2 <= 1: {} * {} * {:.6} = {:.6}",
                self.sigma, self.tau, norm_sq, product
            )));
        }
        Ok(())
    }
}

/// Closed-form bounds on `||K||^2`: 8 for the gradient, 12 for the TGV
/// block operator.
pub fn operator_norm_sq_bound(model: Regulariser) -> f64 {
    match model {
        Regulariser::Tv => 8.0,
        Regulariser::Tgv => 12.0,
    }
}

type NormCache = Mutex<HashMap<(Regulariser, usize, usize), f64>>;

/// `||K||^2` used by the step check: the power-iteration estimate, or the
/// closed-form bound on large grids where the top of the spectrum is too
/// clustered for the estimate to settle.
fn cached_norm_sq(model: Regulariser, shape: (usize, usize)) -> Result<f64> {
    static CACHE: OnceLock<NormCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (model, shape.0, shape.1);
    if let Some(&n) = cache.lock().unwrap().get(&key) {
        return Ok(n);
    }
    let n = match operator_norm_estimate(model, shape) {
        Ok(n) => n * n,
        Err(Error::Numerical(_)) => operator_norm_sq_bound(model),
        Err(e) => return Err(e),
    };
    cache.lock().unwrap().insert(key, n);
    Ok(n)
}

/// Outcome of a solver run.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    /// Primal energy at the returned iterate.
    pub final_energy: f64,
    /// Relative change of `u` at every iteration.
    pub history: Vec<f64>,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn last_relative_change(&self) -> Option<f64> {
        self.history.last().copied()
    }
}

/// Fidelity term `1/2 ||A u - f||^2` together with its prox.
pub trait DataTerm<T: Scalar> {
    fn shape(&self) -> (usize, usize);
    /// `A* f`, the default starting point.
    fn initial_image(&self) -> Grid<T>;
    /// `argmin_u 1/2 ||A u - f||^2 + 1/(2 tau) ||u - v||^2`.
    fn prox(&self, v: &Grid<T>, tau: f64) -> Grid<T>;
    fn fidelity(&self, u: &Grid<T>) -> f64;
}

/// `A = Id`.
#[derive(Clone, Debug)]
pub struct Denoising<T> {
    f: Grid<T>,
}

impl<T: Scalar> Denoising<T> {
    pub fn new(f: Grid<T>) -> Self {
        Self { f }
    }

    pub fn data(&self) -> &Grid<T> {
        &self.f
    }
}

impl<T: Scalar> DataTerm<T> for Denoising<T> {
    fn shape(&self) -> (usize, usize) {
        self.f.shape()
    }

    fn initial_image(&self) -> Grid<T> {
        self.f.clone()
    }

    fn prox(&self, v: &Grid<T>, tau: f64) -> Grid<T> {
        let s = 1.0 / (1.0 + tau);
        v.zip_map(&self.f, |a, b| (a + b * tau) * s)
    }

    fn fidelity(&self, u: &Grid<T>) -> f64 {
        0.5 * u.data().iter().zip(self.f.data()).map(|(&a, &b)| (a - b).norm_sqr()).sum::<f64>()
    }
}

/// `A = P F` with k-space data on the full grid.
pub struct MriData {
    f: ComplexGrid,
    mask: SamplingMask,
    fft: Fft2,
}

impl MriData {
    pub fn new(kspace: ComplexGrid, mask: SamplingMask) -> Result<Self> {
        mask.check(kspace.shape())?;
        let (h, w) = kspace.shape();
        // unacquired entries carry no information; keep the data consistent with P
        let f = mask.apply(&kspace)?;
        Ok(Self { f, mask, fft: Fft2::new(h, w) })
    }

    pub fn kspace(&self) -> &ComplexGrid {
        &self.f
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    /// Zero-filled reconstruction `A* f`.
    pub fn zero_filled(&self) -> ComplexGrid {
        self.fft.inverse(&self.f)
    }
}

impl DataTerm<num_complex::Complex64> for MriData {
    fn shape(&self) -> (usize, usize) {
        self.f.shape()
    }

    fn initial_image(&self) -> ComplexGrid {
        self.zero_filled()
    }

    fn prox(&self, v: &ComplexGrid, tau: f64) -> ComplexGrid {
        prox_mri_with(&self.fft, v, &self.f, &self.mask, tau)
    }

    fn fidelity(&self, u: &ComplexGrid) -> f64 {
        let k = self.fft.forward(u);
        0.5 * k
            .data()
            .iter()
            .zip(self.f.data())
            .zip(self.mask.kept())
            .filter(|(_, &keep)| keep)
            .map(|((&a, &b), _)| (a - b).norm_sqr())
            .sum::<f64>()
    }
}

/// Zero-filled reconstruction of masked k-space data.
pub fn zero_filled(kspace: &ComplexGrid, mask: &SamplingMask) -> Result<ComplexGrid> {
    adjoint(kspace, mask)
}

/// `sum_x lambda(x) * (|g_x(x)| + |g_y(x)|)`.
pub(crate) fn weighted_l1<T: Scalar>(gx: &Grid<T>, gy: &Grid<T>, lambda: &ParamMap) -> f64 {
    gx.data()
        .iter()
        .zip(gy.data())
        .zip(lambda.data())
        .map(|((&a, &b), &l)| l * (a.modulus() + b.modulus()))
        .sum()
}

pub(crate) fn relative_change<T: Scalar>(new: &Grid<T>, old: &Grid<T>) -> f64 {
    let diff: f64 = new.data().iter().zip(old.data()).map(|(&a, &b)| (a - b).norm_sqr()).sum();
    diff.sqrt() / old.norm().max(REL_CHANGE_EPS)
}

/// `x + theta (x - x_old)` written into `out`.
pub(crate) fn extrapolate<T: Scalar>(out: &mut Grid<T>, x: &Grid<T>, x_old: &Grid<T>, theta: f64) {
    for ((o, &a), &b) in out.data_mut().iter_mut().zip(x.data()).zip(x_old.data()) {
        *o = a + (a - b) * theta;
    }
}

/// `p <- proj_lambda(p + sigma g)`, channel by channel.
pub(crate) fn ascend<T: Scalar>(p: &mut Grid<T>, g: &Grid<T>, sigma: f64, lambda: &ParamMap) {
    for ((v, &d), &l) in p.data_mut().iter_mut().zip(g.data()).zip(lambda.data()) {
        *v = (*v + d * sigma).project_ball(l);
    }
}

pub(crate) fn check_data_shape<T: Scalar, D: DataTerm<T>>(
    data: &D,
    maps: &[(&ParamMap, &str)],
) -> Result<()> {
    for (m, name) in maps {
        m.check_shape(data.shape(), name)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_steps() {
        let tv = PdhgConfig::tv_denoise();
        assert!((tv.sigma - 0.9999546 / 13f64.sqrt()).abs() < 1e-7);
        assert!((tv.theta - 0.9999546).abs() < 1e-7);
        assert_eq!(tv.max_iters, 256);
        assert_eq!(tv.tol, 0.0);
        assert!(tv.validate(Regulariser::Tv, (64, 64)).is_ok());
        assert!(PdhgConfig::tgv_denoise().validate(Regulariser::Tgv, (64, 64)).is_ok());
        assert!(PdhgConfig::tv_mri().validate(Regulariser::Tv, (64, 64)).is_ok());
        assert!(PdhgConfig::tgv_mri().validate(Regulariser::Tgv, (64, 64)).is_ok());
    }

    #[test]
    fn trained_mri_steps_need_override() {
        let trained = PdhgConfig::tgv_mri_trained();
        assert!(trained.validate(Regulariser::Tgv, (32, 32)).is_ok());
        let checked = PdhgConfig { unchecked_steps: false, ..trained };
        assert!(matches!(checked.validate(Regulariser::Tgv, (32, 32)), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_ranges() {
        let base = PdhgConfig::tv_denoise();
        for bad in [
            PdhgConfig { theta: 0.0, ..base.clone() },
            PdhgConfig { theta: 1.5, ..base.clone() },
            PdhgConfig { sigma: -1.0, ..base.clone() },
            PdhgConfig { max_iters: 0, ..base.clone() },
            PdhgConfig { tol: -1.0, ..base.clone() },
            PdhgConfig { sigma: 1.0, tau: 1.0, ..base },
        ] {
            assert!(matches!(bad.validate(Regulariser::Tv, (8, 8)), Err(Error::Config(_))), "{bad:?}");
        }
    }
}
