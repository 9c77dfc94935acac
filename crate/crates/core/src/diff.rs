//! Forward differences and their exact adjoints.
//!
//! `grad` uses forward differences with a Neumann boundary: the difference
//! leaving the last column (row) is zero. `div` is minus the transpose of
//! `grad`, so `<grad u, p> = -<u, div p>` holds up to rounding. The same
//! pair of one-dimensional stencils builds the symmetrised gradient and its
//! adjoint under the pairing that counts `e12` twice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, Scalar, SymTensorField, VectorField};

/// Which regulariser an operator or solver refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regulariser {
    Tv,
    Tgv,
}

// out = d/dx src (forward, zero in last column)
fn fwd_x<T: Scalar>(src: &[T], h: usize, w: usize, out: &mut [T]) {
    for i in 0..h {
        let row = &src[i * w..(i + 1) * w];
        let o = &mut out[i * w..(i + 1) * w];
        for j in 0..w.saturating_sub(1) {
            o[j] = row[j + 1] - row[j];
        }
        if w > 0 {
            o[w - 1] = T::default();
        }
    }
}

// out = d/dy src (forward, zero in last row)
fn fwd_y<T: Scalar>(src: &[T], h: usize, w: usize, out: &mut [T]) {
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            out[k] = if i + 1 < h { src[k + w] - src[k] } else { T::default() };
        }
    }
}

// out += s * (-(d/dx)^T src)
fn adj_x_acc<T: Scalar>(src: &[T], h: usize, w: usize, s: f64, out: &mut [T]) {
    for i in 0..h {
        let row = &src[i * w..(i + 1) * w];
        let o = &mut out[i * w..(i + 1) * w];
        for j in 0..w {
            let mut v = T::default();
            if j + 1 < w {
                v += row[j];
            }
            if j > 0 {
                v -= row[j - 1];
            }
            o[j] += v * s;
        }
    }
}

// out += s * (-(d/dy)^T src)
fn adj_y_acc<T: Scalar>(src: &[T], h: usize, w: usize, s: f64, out: &mut [T]) {
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let mut v = T::default();
            if i + 1 < h {
                v += src[k];
            }
            if i > 0 {
                v -= src[k - w];
            }
            out[k] += v * s;
        }
    }
}

pub(crate) fn grad_into<T: Scalar>(u: &Grid<T>, out: &mut VectorField<T>) {
    let (h, w) = u.shape();
    fwd_x(u.data(), h, w, out.x.data_mut());
    fwd_y(u.data(), h, w, out.y.data_mut());
}

pub(crate) fn div_into<T: Scalar>(p: &VectorField<T>, out: &mut Grid<T>) {
    let (h, w) = p.shape();
    let o = out.data_mut();
    o.fill(T::default());
    adj_x_acc(p.x.data(), h, w, 1.0, o);
    adj_y_acc(p.y.data(), h, w, 1.0, o);
}

pub(crate) fn sym_grad_into<T: Scalar>(v: &VectorField<T>, out: &mut SymTensorField<T>) {
    let (h, w) = v.shape();
    fwd_x(v.x.data(), h, w, out.e11.data_mut());
    fwd_y(v.y.data(), h, w, out.e22.data_mut());
    let e12 = out.e12.data_mut();
    fwd_y(v.x.data(), h, w, e12);
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let dx = if j + 1 < w { v.y.data()[k + 1] - v.y.data()[k] } else { T::default() };
            e12[k] = (e12[k] + dx) * 0.5;
        }
    }
}

pub(crate) fn sym_div_into<T: Scalar>(q: &SymTensorField<T>, out: &mut VectorField<T>) {
    let (h, w) = q.shape();
    let ox = out.x.data_mut();
    ox.fill(T::default());
    adj_x_acc(q.e11.data(), h, w, 1.0, ox);
    adj_y_acc(q.e12.data(), h, w, 1.0, ox);
    let oy = out.y.data_mut();
    oy.fill(T::default());
    adj_y_acc(q.e22.data(), h, w, 1.0, oy);
    adj_x_acc(q.e12.data(), h, w, 1.0, oy);
}

/// Forward-difference gradient `Du` with Neumann boundary.
pub fn grad<T: Scalar>(u: &Grid<T>) -> VectorField<T> {
    let (h, w) = u.shape();
    let mut out = VectorField::zeros(h, w);
    grad_into(u, &mut out);
    out
}

/// Discrete divergence, the negative adjoint of [`grad`].
pub fn div<T: Scalar>(p: &VectorField<T>) -> Grid<T> {
    let (h, w) = p.shape();
    let mut out = Grid::zeros(h, w);
    div_into(p, &mut out);
    out
}

/// Symmetrised gradient: `e11 = dx w1`, `e22 = dy w2`, `e12 = (dy w1 + dx w2) / 2`.
pub fn sym_grad<T: Scalar>(v: &VectorField<T>) -> SymTensorField<T> {
    let (h, w) = v.shape();
    let mut out = SymTensorField::zeros(h, w);
    sym_grad_into(v, &mut out);
    out
}

/// Negative adjoint of [`sym_grad`] under the doubled-`e12` pairing.
pub fn sym_div<T: Scalar>(q: &SymTensorField<T>) -> VectorField<T> {
    let (h, w) = q.shape();
    let mut out = VectorField::zeros(h, w);
    sym_div_into(q, &mut out);
    out
}

const NORM_MAX_ITERS: usize = 10_000;
const NORM_REL_TOL: f64 = 1e-9;

/// Estimates `||K||` by power iteration on `K*K`, where `K = D` for TV and
/// `K = [[D, -I], [0, E]]` for TGV.
///
/// Iteration stops once the Rayleigh quotient changes by less than `1e-9`
/// relative; the estimate never exceeds the true norm by more than rounding.
pub fn operator_norm_estimate(which: Regulariser, shape: (usize, usize)) -> Result<f64> {
    let (h, w) = shape;
    if h == 0 || w == 0 {
        return Err(Error::Shape("operator norm of an empty grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let rand_grid = |rng: &mut ChaCha8Rng| Grid::from_fn(h, w, |_, _| rng.random::<f64>() - 0.5);

    match which {
        Regulariser::Tv => {
            let mut u = rand_grid(&mut rng);
            let mut g = VectorField::zeros(h, w);
            let mut next = Grid::zeros(h, w);
            power_iterate(|| {
                let n = u.norm();
                if n == 0.0 {
                    return None;
                }
                u = u.scaled(1.0 / n);
                grad_into(&u, &mut g);
                div_into(&g, &mut next);
                // K*K u = -div grad u; Rayleigh quotient = ||Du||^2
                let rq = g.dot(&g);
                std::mem::swap(&mut u, &mut next);
                u = u.scaled(-1.0);
                Some(rq)
            })
        }
        Regulariser::Tgv => {
            let mut u = rand_grid(&mut rng);
            let mut v = VectorField { x: rand_grid(&mut rng), y: rand_grid(&mut rng) };
            let mut du = VectorField::zeros(h, w);
            let mut ev = SymTensorField::zeros(h, w);
            let mut div_p = Grid::zeros(h, w);
            let mut sdiv_q = VectorField::zeros(h, w);
            power_iterate(|| {
                let n = (u.dot(&u) + v.dot(&v)).sqrt();
                if n == 0.0 {
                    return None;
                }
                u = u.scaled(1.0 / n);
                v = v.scaled(1.0 / n);
                grad_into(&u, &mut du);
                let p = du.sub(&v);
                sym_grad_into(&v, &mut ev);
                let rq = p.dot(&p) + ev.dot(&ev);
                div_into(&p, &mut div_p);
                sym_div_into(&ev, &mut sdiv_q);
                // K*(p, q) = (-div p, -p - sym_div q)
                u = div_p.scaled(-1.0);
                v = p.add(&sdiv_q).scaled(-1.0);
                Some(rq)
            })
        }
    }
}

fn power_iterate(mut step: impl FnMut() -> Option<f64>) -> Result<f64> {
    let mut prev = match step() {
        Some(rq) => rq,
        None => return Ok(0.0),
    };
    for _ in 0..NORM_MAX_ITERS {
        let rq = match step() {
            Some(rq) => rq,
            None => return Ok(0.0),
        };
        if rq == 0.0 || (rq - prev).abs() < NORM_REL_TOL * rq {
            return Ok(rq.sqrt());
        }
        prev = rq;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {NORM_MAX_ITERS} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn grid(h: usize, w: usize, v: &[f64]) -> Grid<f64> {
        Grid::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn grad_of_constant_vanishes() {
        let g = grad(&Grid::filled(4, 5, 3.5));
        assert_eq!(g.l1_norm(), 0.0);
    }

    #[test]
    fn grad_single_jump() {
        let g = grad(&grid(1, 2, &[0.0, 1.0]));
        assert_eq!(g.x.data(), &[1.0, 0.0]);
        assert_eq!(g.y.data(), &[0.0, 0.0]);
    }

    #[test]
    fn grad_of_unit_ramp() {
        let u = Grid::from_fn(3, 3, |_, j| j as f64);
        let g = grad(&u);
        for i in 0..3 {
            assert_eq!([g.x.get(i, 0), g.x.get(i, 1), g.x.get(i, 2)], [1.0, 1.0, 0.0]);
        }
        assert_eq!(g.y.l1_norm(), 0.0);
    }

    #[test]
    fn div_stencil_on_row() {
        let p = VectorField { x: Grid::filled(1, 3, 1.0), y: Grid::zeros(1, 3) };
        assert_eq!(div(&p).data(), &[1.0, 0.0, -1.0]);
        assert_eq!(div(&VectorField::<f64>::zeros(3, 3)).l1_norm(), 0.0);
    }

    #[test]
    fn sym_div_stencil_on_row() {
        let q = SymTensorField {
            e11: Grid::filled(1, 3, 1.0),
            e22: Grid::zeros(1, 3),
            e12: Grid::zeros(1, 3),
        };
        let r = sym_div(&q);
        assert_eq!(r.x.data(), &[1.0, 0.0, -1.0]);
        assert_eq!(r.y.l1_norm(), 0.0);
    }

    #[test]
    fn sym_grad_kernel_and_unit_strain() {
        assert_eq!(sym_grad(&VectorField::<f64>::zeros(4, 4)).l1_norm(), 0.0);
        let skew = VectorField {
            x: Grid::from_fn(6, 6, |i, _| -(i as f64)),
            y: Grid::from_fn(6, 6, |_, j| j as f64),
        };
        let e = sym_grad(&skew);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(e.e11.get(i, j), 0.0);
                assert_eq!(e.e22.get(i, j), 0.0);
                assert_eq!(e.e12.get(i, j), 0.0);
            }
        }
        let strain = VectorField { x: Grid::from_fn(5, 5, |_, j| j as f64), y: Grid::zeros(5, 5) };
        let e = sym_grad(&strain);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(e.e11.get(i, j), 1.0);
                assert_eq!(e.e22.get(i, j), 0.0);
                assert_eq!(e.e12.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn complex_differences_act_on_parts() {
        let u = Grid::from_fn(3, 4, |i, j| Complex64::new(i as f64, (j * j) as f64));
        let g = grad(&u);
        let gr = grad(&u.map(|z| z.re));
        let gi = grad(&u.map(|z| z.im));
        for k in 0..12 {
            assert_eq!(g.x.data()[k], Complex64::new(gr.x.data()[k], gi.x.data()[k]));
            assert_eq!(g.y.data()[k], Complex64::new(gr.y.data()[k], gi.y.data()[k]));
        }
    }

    #[test]
    fn norm_estimates() {
        let tv = operator_norm_estimate(Regulariser::Tv, (64, 64)).unwrap();
        assert!(tv <= 8f64.sqrt() + 1e-6 && tv > 2.7, "{tv}");
        let tgv = operator_norm_estimate(Regulariser::Tgv, (64, 64)).unwrap();
        assert!(tgv <= 12f64.sqrt() + 1e-6 && tgv > tv, "{tgv}");
        assert_eq!(operator_norm_estimate(Regulariser::Tv, (1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn tv_norm_matches_closed_form_on_two_pixels() {
        // ||D||^2 = 4 sin^2(pi/4) = 2 on a 1x2 grid
        let n = operator_norm_estimate(Regulariser::Tv, (1, 2)).unwrap();
        assert!((n * n - 2.0).abs() < 1e-9);
    }

    fn arb_grid(h: usize, w: usize) -> impl Strategy<Value = Grid<f64>> {
        prop::collection::vec(-1.0f64..1.0, h * w).prop_map(move |v| Grid::new(h, w, v).unwrap())
    }

    proptest! {
        #[test]
        fn operators_are_linear(
            a in arb_grid(4, 5), b in arb_grid(4, 5), c in arb_grid(4, 5), s in -3.0f64..3.0,
        ) {
            let lhs = grad(&a.scaled(s).add(&b));
            let rhs = grad(&a).scaled(s).add(&grad(&b));
            prop_assert!(lhs.sub(&rhs).norm() < 1e-12);
            let va = VectorField { x: a.clone(), y: c.clone() };
            let vb = VectorField { x: b.clone(), y: a.clone() };
            let lhs = sym_grad(&va.scaled(s).add(&vb));
            let rhs = sym_grad(&va).scaled(s).add(&sym_grad(&vb));
            prop_assert!(lhs.add(&rhs.scaled(-1.0)).norm() < 1e-12);
            let lhs = div(&va.scaled(s).add(&vb));
            let rhs = div(&va).scaled(s).add(&div(&vb));
            prop_assert!(lhs.sub(&rhs).norm() < 1e-12);
            let qa = SymTensorField { e11: a.clone(), e22: b.clone(), e12: c.clone() };
            let qb = SymTensorField { e11: c, e22: a, e12: b };
            let lhs = sym_div(&qa.scaled(s).add(&qb));
            let rhs = sym_div(&qa).scaled(s).add(&sym_div(&qb));
            prop_assert!(lhs.sub(&rhs).norm() < 1e-12);
        }

        #[test]
        fn skew_affine_fields_are_in_kernel(
            c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, b in -2.0f64..2.0,
        ) {
            let v = VectorField {
                x: Grid::from_fn(7, 6, |i, _| c1 - b * i as f64),
                y: Grid::from_fn(7, 6, |_, j| c2 + b * j as f64),
            };
            let e = sym_grad(&v);
            for i in 0..6 {
                for j in 0..5 {
                    prop_assert!(e.e11.get(i, j).abs() < 1e-12);
                    prop_assert!(e.e22.get(i, j).abs() < 1e-12);
                    prop_assert!(e.e12.get(i, j).abs() < 1e-12);
                }
            }
        }
    }
}
