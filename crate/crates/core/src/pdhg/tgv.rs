use std::time::Instant;

use super::{
    ascend, check_data_shape, extrapolate, relative_change, weighted_l1, DataTerm, PdhgConfig,
    SolveReport,
};
use crate::diff::{div_into, grad, grad_into, sym_div_into, sym_grad, sym_grad_into, Regulariser};
use crate::error::{Error, Result};
use crate::grid::{Grid, ParamMap, Scalar, SymTensorField, VectorField};

#[derive(Clone, Debug)]
pub struct TgvSolution<T> {
    pub u: Grid<T>,
    pub w: VectorField<T>,
    pub report: SolveReport,
}

/// Optional warm start for [`solve_tgv`]; duals always start at zero.
#[derive(Clone, Debug)]
pub struct TgvInit<T> {
    pub u: Grid<T>,
    pub w: VectorField<T>,
}

fn sym_weighted_l1<T: Scalar>(e: &SymTensorField<T>, lambda: &ParamMap) -> f64 {
    e.e11
        .data()
        .iter()
        .zip(e.e22.data())
        .zip(e.e12.data())
        .zip(lambda.data())
        .map(|(((&a, &b), &c), &l)| l * (a.modulus() + b.modulus() + 2.0 * c.modulus()))
        .sum()
}

/// `sum lambda1 |Du - w|_1 + sum lambda0 (|e11| + |e22| + 2 |e12|)` of `E w`.
pub(crate) fn tgv_regulariser<T: Scalar>(
    u: &Grid<T>,
    w: &VectorField<T>,
    lambda0: &ParamMap,
    lambda1: &ParamMap,
) -> f64 {
    let r = grad(u).sub(w);
    weighted_l1(&r.x, &r.y, lambda1) + sym_weighted_l1(&sym_grad(w), lambda0)
}

/// Primal TGV energy at `(u, w)`:
/// `1/2 ||A u - f||^2 + sum lambda1 |Du - w|_1 + sum lambda0 |E w|_1`,
/// where the off-diagonal of `E w` is counted twice.
pub fn tgv_energy<T: Scalar, D: DataTerm<T>>(
    u: &Grid<T>,
    w: &VectorField<T>,
    data: &D,
    lambda0: &ParamMap,
    lambda1: &ParamMap,
) -> Result<f64> {
    u.check_same_shape(data.shape(), "tgv energy image")?;
    w.x.check_same_shape(data.shape(), "tgv energy field")?;
    check_data_shape(data, &[(lambda0, "lambda0"), (lambda1, "lambda1")])?;
    Ok(data.fidelity(u) + tgv_regulariser(u, w, lambda0, lambda1))
}

/// Weighted anisotropic second-order TGV reconstruction.
///
/// PDHG on the product space `(u, w)` with duals `(p, q)`:
///
/// ```text
/// p  <- proj_lambda1(p + sigma (grad u_bar - w_bar))
/// q  <- proj_lambda0(q + sigma sym_grad w_bar)
/// u+ <- prox_tau(u + tau div p)
/// w+ <- w + tau (p + sym_div q)
/// (u_bar, w_bar) <- (u+, w+) + theta ((u+, w+) - (u, w))
/// ```
pub fn solve_tgv<T: Scalar, D: DataTerm<T>>(
    data: &D,
    lambda0: &ParamMap,
    lambda1: &ParamMap,
    cfg: &PdhgConfig,
    init: Option<&TgvInit<T>>,
) -> Result<TgvSolution<T>> {
    let shape = data.shape();
    check_data_shape(data, &[(lambda0, "lambda0"), (lambda1, "lambda1")])?;
    cfg.validate(Regulariser::Tgv, shape)?;
    let start = Instant::now();
    let (h, w_) = shape;

    let (mut u, mut w) = match init {
        Some(i) => {
            i.u.check_same_shape(shape, "initial image")?;
            i.w.x.check_same_shape(shape, "initial field")?;
            (i.u.clone(), i.w.clone())
        }
        None => (data.initial_image(), VectorField::zeros(h, w_)),
    };
    let mut u_bar = u.clone();
    let mut w_bar = w.clone();
    let mut p = VectorField::<T>::zeros(h, w_);
    let mut q = SymTensorField::<T>::zeros(h, w_);
    let mut g = VectorField::<T>::zeros(h, w_);
    let mut e = SymTensorField::<T>::zeros(h, w_);
    let mut d = Grid::<T>::zeros(h, w_);
    let mut sd = VectorField::<T>::zeros(h, w_);
    let mut w_new = VectorField::<T>::zeros(h, w_);
    let mut history = Vec::with_capacity(cfg.max_iters);

    for _ in 0..cfg.max_iters {
        grad_into(&u_bar, &mut g);
        for (gv, &wv) in g.x.data_mut().iter_mut().zip(w_bar.x.data()) {
            *gv -= wv;
        }
        for (gv, &wv) in g.y.data_mut().iter_mut().zip(w_bar.y.data()) {
            *gv -= wv;
        }
        ascend(&mut p.x, &g.x, cfg.sigma, lambda1);
        ascend(&mut p.y, &g.y, cfg.sigma, lambda1);

        sym_grad_into(&w_bar, &mut e);
        ascend(&mut q.e11, &e.e11, cfg.sigma, lambda0);
        ascend(&mut q.e22, &e.e22, cfg.sigma, lambda0);
        ascend(&mut q.e12, &e.e12, cfg.sigma, lambda0);

        div_into(&p, &mut d);
        for (dv, &uv) in d.data_mut().iter_mut().zip(u.data()) {
            *dv = uv + *dv * cfg.tau;
        }
        let u_new = data.prox(&d, cfg.tau);

        sym_div_into(&q, &mut sd);
        for (((o, &wv), &pv), &sv) in
            w_new.x.data_mut().iter_mut().zip(w.x.data()).zip(p.x.data()).zip(sd.x.data())
        {
            *o = wv + (pv + sv) * cfg.tau;
        }
        for (((o, &wv), &pv), &sv) in
            w_new.y.data_mut().iter_mut().zip(w.y.data()).zip(p.y.data()).zip(sd.y.data())
        {
            *o = wv + (pv + sv) * cfg.tau;
        }

        let change = relative_change(&u_new, &u);
        extrapolate(&mut u_bar, &u_new, &u, cfg.theta);
        extrapolate(&mut w_bar.x, &w_new.x, &w.x, cfg.theta);
        extrapolate(&mut w_bar.y, &w_new.y, &w.y, cfg.theta);
        u = u_new;
        std::mem::swap(&mut w, &mut w_new);
        history.push(change);
        if cfg.tol > 0.0 && change < cfg.tol {
            break;
        }
    }

    let final_energy = tgv_energy(&u, &w, data, lambda0, lambda1)?;
    Ok(TgvSolution {
        u,
        w,
        report: SolveReport {
            iterations: history.len(),
            final_energy,
            history,
            wall_time: start.elapsed(),
        },
    })
}

/// Fixed-depth TGV map: exactly `n` iterations from `A* f`, returning `u`.
///
/// This is the computation an unrolled network differentiates through.
pub fn unrolled_apply<T: Scalar, D: DataTerm<T>>(
    data: &D,
    lambda0: &ParamMap,
    lambda1: &ParamMap,
    n: usize,
    cfg: &PdhgConfig,
) -> Result<Grid<T>> {
    if n == 0 {
        return Err(Error::Config("unrolling depth must be at least 1".into()));
    }
    let cfg = PdhgConfig { max_iters: n, tol: 0.0, ..cfg.clone() };
    Ok(solve_tgv(data, lambda0, lambda1, &cfg, None)?.u)
}

/// Solves the inner TGV problem for a fixed image,
/// `min_w sum lambda1 |Du - w|_1 + sum lambda0 |E w|_1`,
/// by PDHG with `K = [-I; E]` (`||K||^2 <= 9`). The report's energy is the
/// regulariser value, i.e. the weighted TGV of `u`.
pub fn solve_tgv_field<T: Scalar>(
    u: &Grid<T>,
    lambda0: &ParamMap,
    lambda1: &ParamMap,
    max_iters: usize,
    tol: f64,
    init: Option<&VectorField<T>>,
) -> Result<(VectorField<T>, SolveReport)> {
    let shape = u.shape();
    lambda0.check_shape(shape, "lambda0")?;
    lambda1.check_shape(shape, "lambda1")?;
    let start = Instant::now();
    let (h, wd) = shape;
    // sigma * tau * 9 = 0.81
    let (sigma, tau) = (0.3, 0.3);
    let du = grad(u);
    let mut w = match init {
        Some(w0) => {
            w0.x.check_same_shape(shape, "initial field")?;
            w0.clone()
        }
        None => du.clone(),
    };
    let mut w_bar = w.clone();
    let mut p = VectorField::<T>::zeros(h, wd);
    let mut q = SymTensorField::<T>::zeros(h, wd);
    let mut r = VectorField::<T>::zeros(h, wd);
    let mut e = SymTensorField::<T>::zeros(h, wd);
    let mut sd = VectorField::<T>::zeros(h, wd);
    let mut history = Vec::with_capacity(max_iters);

    for _ in 0..max_iters {
        for ((o, &a), &b) in r.x.data_mut().iter_mut().zip(du.x.data()).zip(w_bar.x.data()) {
            *o = a - b;
        }
        for ((o, &a), &b) in r.y.data_mut().iter_mut().zip(du.y.data()).zip(w_bar.y.data()) {
            *o = a - b;
        }
        ascend(&mut p.x, &r.x, sigma, lambda1);
        ascend(&mut p.y, &r.y, sigma, lambda1);
        sym_grad_into(&w_bar, &mut e);
        ascend(&mut q.e11, &e.e11, sigma, lambda0);
        ascend(&mut q.e22, &e.e22, sigma, lambda0);
        ascend(&mut q.e12, &e.e12, sigma, lambda0);
        sym_div_into(&q, &mut sd);
        let w_new = VectorField {
            x: w.x.zip_map(&p.x.add(&sd.x), |a, b| a + b * tau),
            y: w.y.zip_map(&p.y.add(&sd.y), |a, b| a + b * tau),
        };
        let change = w_new.sub(&w).norm() / w.norm().max(super::REL_CHANGE_EPS);
        extrapolate(&mut w_bar.x, &w_new.x, &w.x, 1.0);
        extrapolate(&mut w_bar.y, &w_new.y, &w.y, 1.0);
        w = w_new;
        history.push(change);
        if tol > 0.0 && change < tol {
            break;
        }
    }
    let final_energy = tgv_regulariser(u, &w, lambda0, lambda1);
    Ok((
        w,
        SolveReport { iterations: history.len(), final_energy, history, wall_time: start.elapsed() },
    ))
}
