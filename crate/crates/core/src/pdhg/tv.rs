use std::time::Instant;

use super::{
    ascend, check_data_shape, extrapolate, relative_change, weighted_l1, DataTerm, PdhgConfig,
    SolveReport,
};
use crate::diff::{div_into, grad, grad_into, Regulariser};
use crate::error::Result;
use crate::grid::{Grid, ParamMap, Scalar, VectorField};

#[derive(Clone, Debug)]
pub struct TvSolution<T> {
    pub u: Grid<T>,
    pub report: SolveReport,
}

/// `1/2 ||A u - f||^2 + sum_x lambda(x) (|(Du)_1(x)| + |(Du)_2(x)|)`.
pub fn tv_energy<T: Scalar, D: DataTerm<T>>(u: &Grid<T>, data: &D, lambda: &ParamMap) -> Result<f64> {
    u.check_same_shape(data.shape(), "tv energy image")?;
    check_data_shape(data, &[(lambda, "tv weight")])?;
    let g = grad(u);
    Ok(data.fidelity(u) + weighted_l1(&g.x, &g.y, lambda))
}

/// Weighted anisotropic TV reconstruction by Chambolle-Pock iteration:
///
/// ```text
/// p    <- proj_lambda(p + sigma grad(u_bar))
/// u+   <- prox_tau(u + tau div p)
/// u_bar <- u+ + theta (u+ - u)
/// ```
///
/// Starts from `init` or `A* f`, with `p = 0`.
pub fn solve_tv<T: Scalar, D: DataTerm<T>>(
    data: &D,
    lambda: &ParamMap,
    cfg: &PdhgConfig,
    init: Option<&Grid<T>>,
) -> Result<TvSolution<T>> {
    let shape = data.shape();
    check_data_shape(data, &[(lambda, "tv weight")])?;
    cfg.validate(Regulariser::Tv, shape)?;
    let start = Instant::now();
    let (h, w) = shape;

    let mut u = match init {
        Some(u0) => {
            u0.check_same_shape(shape, "initial image")?;
            u0.clone()
        }
        None => data.initial_image(),
    };
    let mut u_bar = u.clone();
    let mut p = VectorField::<T>::zeros(h, w);
    let mut g = VectorField::<T>::zeros(h, w);
    let mut d = Grid::<T>::zeros(h, w);
    let mut history = Vec::with_capacity(cfg.max_iters);

    for _ in 0..cfg.max_iters {
        grad_into(&u_bar, &mut g);
        ascend(&mut p.x, &g.x, cfg.sigma, lambda);
        ascend(&mut p.y, &g.y, cfg.sigma, lambda);
        div_into(&p, &mut d);
        for (dv, &uv) in d.data_mut().iter_mut().zip(u.data()) {
            *dv = uv + *dv * cfg.tau;
        }
        let u_new = data.prox(&d, cfg.tau);
        let change = relative_change(&u_new, &u);
        extrapolate(&mut u_bar, &u_new, &u, cfg.theta);
        u = u_new;
        history.push(change);
        if cfg.tol > 0.0 && change < cfg.tol {
            break;
        }
    }

    let final_energy = tv_energy(&u, data, lambda)?;
    Ok(TvSolution {
        u,
        report: SolveReport {
            iterations: history.len(),
            final_energy,
            history,
            wall_time: start.elapsed(),
        },
    })
}
