//! Post-hoc analysis of parameter maps and TGV fields.

use std::fmt::Write as _;

use crate::diff::{grad, sym_grad};
use crate::error::{Error, Result};
use crate::grid::{Grid, ParamMap, Scalar, ScalarGrid, VectorField};
use crate::pdhg::solve_tgv_field;

/// Pointwise `lambda0 / lambda1`.
pub fn ratio_map(lambda0: &ParamMap, lambda1: &ParamMap) -> Result<ScalarGrid> {
    lambda1.check_shape(lambda0.shape(), "ratio denominator")?;
    if lambda1.data().iter().any(|&v| v <= 0.0) {
        return Err(Error::Validation("ratio denominator must be strictly positive".into()));
    }
    Ok(lambda0.as_grid().zip_map(lambda1.as_grid(), |a, b| a / b))
}

/// `log10` rendering of a positive grid, e.g. a ratio map.
pub fn log10_map(g: &ScalarGrid) -> Result<ScalarGrid> {
    if g.data().iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Validation("log rendering needs strictly positive values".into()));
    }
    Ok(g.map(f64::log10))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    Min,
    Max,
}

impl ExtremumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Min => "min",
            ExtremumKind::Max => "max",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub position: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Samples of a grid along a segment, with detected extrema.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProfile {
    /// Distance from the first endpoint, in pixels.
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    /// Alternating minima and maxima of the smoothed samples.
    pub extrema: Vec<Extremum>,
}

impl EdgeProfile {
    pub fn minima(&self) -> usize {
        self.extrema.iter().filter(|e| e.kind == ExtremumKind::Min).count()
    }

    pub fn maxima(&self) -> usize {
        self.extrema.iter().filter(|e| e.kind == ExtremumKind::Max).count()
    }

    /// Kinds in order, e.g. `["max", "min", "max"]`.
    pub fn pattern(&self) -> Vec<&'static str> {
        self.extrema.iter().map(|e| e.kind.as_str()).collect()
    }

    /// `position,value,extremum_type`; the type column is empty for plain samples.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("position,value,extremum_type\n");
        for (p, v) in self.positions.iter().zip(&self.values) {
            let _ = writeln!(s, "{p:?},{v:?},");
        }
        for e in &self.extrema {
            let _ = writeln!(s, "{:?},{:?},{}", e.position, e.value, e.kind.as_str());
        }
        s
    }
}

fn bilinear(g: &ScalarGrid, y: f64, x: f64) -> f64 {
    let (h, w) = g.shape();
    let i0 = (y.floor() as usize).min(h - 1);
    let j0 = (x.floor() as usize).min(w - 1);
    let i1 = (i0 + 1).min(h - 1);
    let j1 = (j0 + 1).min(w - 1);
    let a = y - i0 as f64;
    let b = x - j0 as f64;
    let top = g[(i0, j0)] * (1.0 - b) + g[(i0, j1)] * b;
    let bottom = g[(i1, j0)] * (1.0 - b) + g[(i1, j1)] * b;
    top * (1.0 - a) + bottom * a
}

// Written so that reversing the input reverses the output bit for bit.
fn smooth3(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| match (k.checked_sub(1), (k + 1 < n).then_some(k + 1)) {
            (Some(a), Some(b)) => ((x[a] + x[b]) + x[k]) / 3.0,
            (None, Some(b)) => (x[k] + x[b]) / 2.0,
            (Some(a), None) => (x[a] + x[k]) / 2.0,
            (None, None) => x[k],
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Run {
    value: f64,
    first: usize,
    last: usize,
}

impl Run {
    fn at(value: f64, k: usize) -> Self {
        Run { value, first: k, last: k }
    }
}

/// Zigzag detection: an extremum is reported once the signal has moved more
/// than `delta` away from it. Flat tops report their midpoint; extrema
/// touching the ends of the segment count when they are prominent.
fn detect_extrema(s: &[f64], positions: &[f64], delta: f64) -> Vec<Extremum> {
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tie = 1e-12 * (1.0 + scale);
    let delta = delta.max(tie);
    let emit = |run: Run, kind| Extremum {
        position: 0.5 * (positions[run.first] + positions[run.last]),
        value: run.value,
        kind,
    };
    let mut out = Vec::new();
    let Some(&first) = s.first() else { return out };
    let mut hi = Run::at(first, 0);
    let mut lo = Run::at(first, 0);
    // None: direction unknown; Some(true): rising; Some(false): falling.
    let mut dir: Option<bool> = None;
    let mut cand = hi;
    for (k, &v) in s.iter().enumerate().skip(1) {
        match dir {
            None => {
                if v > hi.value + tie {
                    hi = Run::at(v, k);
                } else if (v - hi.value).abs() <= tie {
                    hi.last = k;
                }
                if v < lo.value - tie {
                    lo = Run::at(v, k);
                } else if (v - lo.value).abs() <= tie {
                    lo.last = k;
                }
                if v - lo.value > delta {
                    out.push(emit(lo, ExtremumKind::Min));
                    dir = Some(true);
                    cand = Run::at(v, k);
                } else if hi.value - v > delta {
                    out.push(emit(hi, ExtremumKind::Max));
                    dir = Some(false);
                    cand = Run::at(v, k);
                }
            }
            Some(rising) => {
                let ahead = if rising { v > cand.value + tie } else { v < cand.value - tie };
                if ahead {
                    cand = Run::at(v, k);
                } else if (v - cand.value).abs() <= tie {
                    cand.last = k;
                } else if (cand.value - v).abs() > delta {
                    let kind = if rising { ExtremumKind::Max } else { ExtremumKind::Min };
                    out.push(emit(cand, kind));
                    dir = Some(!rising);
                    cand = Run::at(v, k);
                }
            }
        }
    }
    if let Some(rising) = dir {
        out.push(emit(cand, if rising { ExtremumKind::Max } else { ExtremumKind::Min }));
    }
    out
}

/// Bilinear samples of `map` from `p0` to `p1` (both `(row, col)`),
/// then extrema of the 3-tap moving average with prominence `delta`
/// (default: 5% of the map's dynamic range).
pub fn extract_profile(
    map: &ScalarGrid,
    p0: (f64, f64),
    p1: (f64, f64),
    samples: usize,
    delta: Option<f64>,
) -> Result<EdgeProfile> {
    let (h, w) = map.shape();
    if samples < 2 {
        return Err(Error::Config(format!("a profile needs at least 2 samples, got {samples}")));
    }
    let inside = |p: (f64, f64)| {
        p.0 >= 0.0 && p.1 >= 0.0 && p.0 <= (h - 1) as f64 && p.1 <= (w - 1) as f64
    };
    if h == 0 || w == 0 || !inside(p0) || !inside(p1) {
        return Err(Error::Shape(format!(
            "profile endpoints {p0:?}, {p1:?} must lie inside the {h}x{w} grid"
        )));
    }
    let length = ((p1.0 - p0.0).powi(2) + (p1.1 - p0.1).powi(2)).sqrt();
    if length == 0.0 {
        return Err(Error::Shape("profile endpoints coincide".into()));
    }
    let n = samples - 1;
    let mut positions = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = k as f64 / n as f64;
        let s = (n - k) as f64 / n as f64;
        let y = p0.0 * s + p1.0 * t;
        let x = p0.1 * s + p1.1 * t;
        positions.push(t * length);
        values.push(bilinear(map, y, x));
    }
    let delta = delta.unwrap_or(0.05 * (map.max() - map.min()));
    let extrema = detect_extrema(&smooth3(&values), &positions, delta);
    Ok(EdgeProfile { positions, values, extrema })
}

/// The skew-affine field `(c1 - b * row, c2 + b * col)`.
pub fn skew_affine_field(h: usize, w: usize, c1: f64, c2: f64, b: f64) -> VectorField<f64> {
    VectorField {
        x: Grid::from_fn(h, w, |i, _| c1 - b * i as f64),
        y: Grid::from_fn(h, w, |_, j| c2 + b * j as f64),
    }
}

pub const IRLS_MAX_ITERS: usize = 500;
pub const IRLS_TOL: f64 = 1e-10;
pub const IRLS_FLOOR: f64 = 1e-8;

/// Coefficients `(c1, c2, b)` of an l1-closest skew-affine field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerEFit {
    pub c1: f64,
    pub c2: f64,
    pub b: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn l1_residual(v: &VectorField<f64>, c1: f64, c2: f64, b: f64) -> f64 {
    let (h, w) = v.shape();
    let mut r = 0.0;
    for i in 0..h {
        for j in 0..w {
            r += (v.x[(i, j)] - (c1 - b * i as f64)).abs();
            r += (v.y[(i, j)] - (c2 + b * j as f64)).abs();
        }
    }
    r
}

fn weighted_fit(v: &VectorField<f64>, wx: &[f64], wy: &[f64]) -> (f64, f64, f64) {
    // Normal equations for unknowns (c1, c2, b) with rows
    // (1, 0, -i) for the first component and (0, 1, j) for the second.
    let (h, w) = v.shape();
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let (a, c) = (wx[k], wy[k]);
            let (fi, fj) = (i as f64, j as f64);
            let (v1, v2) = (v.x.data()[k], v.y.data()[k]);
            m[0][0] += a;
            m[0][2] -= a * fi;
            m[2][2] += a * fi * fi + c * fj * fj;
            m[1][1] += c;
            m[1][2] += c * fj;
            rhs[0] += a * v1;
            rhs[1] += c * v2;
            rhs[2] += -a * fi * v1 + c * fj * v2;
        }
    }
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];
    // Eliminate c1 and c2 (m[0][1] = 0), leaving a scalar equation for b.
    let s = m[2][2] - m[0][2] * m[0][2] / m[0][0] - m[1][2] * m[1][2] / m[1][1];
    let r = rhs[2] - m[0][2] * rhs[0] / m[0][0] - m[1][2] * rhs[1] / m[1][1];
    let b = if s > 1e-14 * m[2][2].max(1.0) { r / s } else { 0.0 };
    let c1 = (rhs[0] - m[0][2] * b) / m[0][0];
    let c2 = (rhs[1] - m[1][2] * b) / m[1][1];
    (c1, c2, b)
}

/// l1-closest skew-affine field by iteratively reweighted least squares.
///
/// Stops when the relative change of the l1 objective drops below `1e-10`,
/// or the objective itself falls below `1e-10 * ||v||_1` (an exact fit up to
/// rounding); residual weights are floored at `1e-8`.
pub fn ker_e_fit(v: &VectorField<f64>) -> Result<KerEFit> {
    let (h, w) = v.shape();
    if h == 0 || w == 0 {
        return Err(Error::Shape("cannot fit an empty field".into()));
    }
    let n = h * w;
    let mut wx = vec![1.0; n];
    let mut wy = vec![1.0; n];
    let (mut c1, mut c2, mut b) = weighted_fit(v, &wx, &wy);
    let mut obj = l1_residual(v, c1, c2, b);
    let exact = IRLS_TOL * v.l1_norm();
    for it in 1..=IRLS_MAX_ITERS {
        if obj <= exact {
            return Ok(KerEFit { c1, c2, b, residual: obj, iterations: it - 1 });
        }
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                wx[k] = 1.0 / (v.x.data()[k] - (c1 - b * i as f64)).abs().max(IRLS_FLOOR);
                wy[k] = 1.0 / (v.y.data()[k] - (c2 + b * j as f64)).abs().max(IRLS_FLOOR);
            }
        }
        let (n1, n2, nb) = weighted_fit(v, &wx, &wy);
        let new_obj = l1_residual(v, n1, n2, nb);
        let rel = (obj - new_obj).abs() / obj;
        // IRLS is monotone up to rounding; keep the better iterate.
        if new_obj <= obj {
            (c1, c2, b, obj) = (n1, n2, nb, new_obj);
        }
        if rel < IRLS_TOL {
            // The floor leaves O(1e-8) slack; w = 0 is always feasible.
            let zero = v.l1_norm();
            if zero <= obj {
                return Ok(KerEFit { c1: 0.0, c2: 0.0, b: 0.0, residual: zero, iterations: it });
            }
            return Ok(KerEFit { c1, c2, b, residual: obj, iterations: it });
        }
    }
    Err(Error::Numerical(format!(
        "IRLS did not reach relative objective change {IRLS_TOL} in {IRLS_MAX_ITERS} iterations"
    )))
}

/// The l1 projection of `v` onto skew-affine fields and its l1 distance.
pub fn ker_e_projection(v: &VectorField<f64>) -> Result<(VectorField<f64>, f64)> {
    let fit = ker_e_fit(v)?;
    let (h, w) = v.shape();
    Ok((skew_affine_field(h, w, fit.c1, fit.c2, fit.b), fit.residual))
}

/// `sum |E w|` (off-diagonal counted twice) over `sum |D u|`; zero when
/// `u` has no variation.
pub fn score_from_field<T: Scalar>(u: &Grid<T>, w: &VectorField<T>) -> Result<f64> {
    w.x.check_same_shape(u.shape(), "score field")?;
    let du = grad(u).l1_norm();
    if du == 0.0 {
        return Ok(0.0);
    }
    Ok(sym_grad(w).l1_norm() / du)
}

pub const SCORE_INNER_ITERS: usize = 5000;

/// How TV-like TGV is at `u`: solves the inner `w` problem for `u` with
/// `lambda0, lambda1` and returns [`score_from_field`]. Near zero means the
/// second-order part is inactive.
pub fn tv_equivalence_score<T: Scalar>(u: &Grid<T>, lambda0: &ParamMap, lambda1: &ParamMap) -> Result<f64> {
    tv_equivalence_score_with(u, lambda0, lambda1, SCORE_INNER_ITERS)
}

pub fn tv_equivalence_score_with<T: Scalar>(
    u: &Grid<T>,
    lambda0: &ParamMap,
    lambda1: &ParamMap,
    iters: usize,
) -> Result<f64> {
    if grad(u).l1_norm() == 0.0 {
        lambda0.check_shape(u.shape(), "lambda0")?;
        lambda1.check_shape(u.shape(), "lambda1")?;
        return Ok(0.0);
    }
    let (w, _) = solve_tgv_field(u, lambda0, lambda1, iters, 0.0, None)?;
    score_from_field(u, &w)
}
