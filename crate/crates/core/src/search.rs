//! Scalar-parameter grid search, scored by SSIM.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ParamMap, Scalar, ScalarGrid};
use crate::metrics::{psnr, ssim};
use crate::pdhg::{solve_tgv, solve_tv, DataTerm, PdhgConfig};

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    Tv { lambdas: Vec<f64> },
    Tgv { lambda0s: Vec<f64>, lambda1s: Vec<f64> },
}

impl GridSpec {
    /// 25 log-spaced weights in `[1e-3, 1]`.
    pub fn default_tv() -> Self {
        GridSpec::Tv { lambdas: log_space(1e-3, 1.0, 25) }
    }

    /// 15 x 15 log-spaced pairs over `[1e-3, 1]^2`.
    pub fn default_tgv() -> Self {
        let v = log_space(1e-3, 1.0, 15);
        GridSpec::Tgv { lambda0s: v.clone(), lambda1s: v }
    }

    pub fn len(&self) -> usize {
        match self {
            GridSpec::Tv { lambdas } => lambdas.len(),
            GridSpec::Tgv { lambda0s, lambda1s } => lambda0s.len() * lambda1s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(lambda0, lambda1)` pairs; `lambda0` is `None` for TV.
    pub fn points(&self) -> Vec<(Option<f64>, f64)> {
        match self {
            GridSpec::Tv { lambdas } => lambdas.iter().map(|&l| (None, l)).collect(),
            GridSpec::Tgv { lambda0s, lambda1s } => lambda1s
                .iter()
                .flat_map(|&l1| lambda0s.iter().map(move |&l0| (Some(l0), l1)))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub lambda0: Option<f64>,
    pub lambda1: f64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    pub points: Vec<GridPoint>,
    best: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &GridPoint {
        &self.points[self.best]
    }

    pub fn best_ssim(&self) -> f64 {
        self.best().ssim
    }

    /// `lambda0,lambda1,psnr,ssim` rows in grid order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda0,lambda1,psnr,ssim\n");
        for p in &self.points {
            let l0 = p.lambda0.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = writeln!(s, "{l0},{:?},{:?},{:?}", p.lambda1, p.psnr, p.ssim);
        }
        s
    }
}

/// Real part for real images, modulus for complex ones.
pub fn score_image<T: Scalar>(u: &Grid<T>) -> ScalarGrid {
    if T::IS_COMPLEX {
        u.magnitude()
    } else {
        u.map(|v| v.to_complex().re)
    }
}

fn better(a: &GridPoint, b: &GridPoint) -> bool {
    let (sa, sb) = (nan_low(a.ssim), nan_low(b.ssim));
    if sa != sb {
        return sa > sb;
    }
    if a.lambda1 != b.lambda1 {
        return a.lambda1 < b.lambda1;
    }
    a.lambda0.unwrap_or(0.0) < b.lambda0.unwrap_or(0.0)
}

fn nan_low(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Solves once per grid point with constant maps and keeps the best SSIM
/// against `reference`; ties go to the smaller `lambda1`, then `lambda0`.
///
/// Points are evaluated in parallel; the result is identical to a
/// sequential sweep.
pub fn grid_search_scalar<T, D>(
    data: &D,
    reference: &ScalarGrid,
    spec: &GridSpec,
    cfg: &PdhgConfig,
    data_range: f64,
) -> Result<GridSearchResult>
where
    T: Scalar,
    D: DataTerm<T> + Sync,
{
    if spec.is_empty() {
        return Err(Error::Config("grid search needs at least one point".into()));
    }
    reference.check_same_shape(data.shape(), "grid search reference")?;
    let (h, w) = data.shape();
    let points: Vec<GridPoint> = spec
        .points()
        .into_par_iter()
        .map(|(l0, l1)| -> Result<GridPoint> {
            let lam1 = ParamMap::constant(h, w, l1)?;
            let u = match l0 {
                None => solve_tv(data, &lam1, cfg, None)?.u,
                Some(l0) => solve_tgv(data, &ParamMap::constant(h, w, l0)?, &lam1, cfg, None)?.u,
            };
            let s = score_image(&u);
            Ok(GridPoint {
                lambda0: l0,
                lambda1: l1,
                psnr: psnr(&s, reference, data_range)?,
                ssim: ssim(&s, reference, data_range)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, p) in points.iter().enumerate().skip(1) {
        if better(p, &points[best]) {
            best = k;
        }
    }
    Ok(GridSearchResult { points, best })
}
