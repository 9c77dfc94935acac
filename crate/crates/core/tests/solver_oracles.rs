mod support;

use support::oracles::{reference_tgv, reference_tgv_value, reference_tv, Lcg};
use wtgv::pdhg::solve_tgv_field;
use wtgv::{
    grad, make_mask, simulate_kspace, solve_tgv, solve_tv, tgv_energy, tv_energy, unrolled_apply,
    Denoising, Grid, MriData, ParamMap, PdhgConfig, SamplingMask,
};

const N: usize = 6;

fn instance(seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = Lcg(seed);
    let f = rng.vec(N * N, 0.0, 1.0);
    let l0 = rng.vec(N * N, 0.05, 0.5);
    let l1 = rng.vec(N * N, 0.02, 0.3);
    (f, l0, l1)
}

fn map(v: &[f64]) -> ParamMap {
    ParamMap::new(N, N, v.to_vec()).unwrap()
}

#[test]
fn tv_matches_dense_admm() {
    for seed in 0..5 {
        let (f, _, l1) = instance(seed);
        let reference = reference_tv(&f, &l1, N, N, 20_000);
        let data = Denoising::new(Grid::new(N, N, f).unwrap());
        let cfg = PdhgConfig::tv_denoise().with_iters(20_000).with_tol(0.0);
        let sol = solve_tv(&data, &map(&l1), &cfg, None).unwrap();
        let rel = (sol.report.final_energy - reference.energy).abs() / reference.energy;
        assert!(rel < 1e-5, "seed {seed}: {} vs {} (rel {rel:e})", sol.report.final_energy, reference.energy);
        let du = sol.u.data().iter().zip(&reference.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(du < 1e-3, "seed {seed}: max |u - u_ref| = {du}");
    }
}

#[test]
fn tgv_matches_dense_admm() {
    for seed in 100..105 {
        let (f, l0, l1) = instance(seed);
        let reference = reference_tgv(&f, &l0, &l1, N, N, 20_000);
        let data = Denoising::new(Grid::new(N, N, f).unwrap());
        let cfg = PdhgConfig::tgv_denoise().with_iters(20_000).with_tol(0.0);
        let sol = solve_tgv(&data, &map(&l0), &map(&l1), &cfg, None).unwrap();
        let rel = (sol.report.final_energy - reference.energy).abs() / reference.energy;
        assert!(rel < 1e-4, "seed {seed}: {} vs {} (rel {rel:e})", sol.report.final_energy, reference.energy);
    }
}

#[test]
fn reported_energy_is_recomputable() {
    let (f, l0, l1) = instance(7);
    let data = Denoising::new(Grid::new(N, N, f).unwrap());
    let tv = solve_tv(&data, &map(&l1), &PdhgConfig::tv_denoise(), None).unwrap();
    assert_eq!(tv.report.final_energy, tv_energy(&tv.u, &data, &map(&l1)).unwrap());
    let tgv = solve_tgv(&data, &map(&l0), &map(&l1), &PdhgConfig::tgv_denoise(), None).unwrap();
    assert_eq!(tgv.report.final_energy, tgv_energy(&tgv.u, &tgv.w, &data, &map(&l0), &map(&l1)).unwrap());
}

#[test]
fn two_pixel_closed_form() {
    let data = Denoising::new(Grid::new(1, 2, vec![0.0, 1.0]).unwrap());
    let lambda = ParamMap::constant(1, 2, 0.2).unwrap();
    let sol = solve_tv(&data, &lambda, &PdhgConfig::tv_denoise().with_iters(5000).with_tol(1e-12), None).unwrap();
    assert!((sol.u.data()[0] - 0.2).abs() < 1e-5 && (sol.u.data()[1] - 0.8).abs() < 1e-5, "{:?}", sol.u.data());
    // past the merge point both pixels meet at the mean
    let big = ParamMap::constant(1, 2, 0.7).unwrap();
    let sol = solve_tv(&data, &big, &PdhgConfig::tv_denoise().with_iters(5000).with_tol(1e-12), None).unwrap();
    assert!(sol.u.data().iter().all(|v| (v - 0.5).abs() < 1e-5), "{:?}", sol.u.data());
}

#[test]
fn tolerance_stops_early_and_zero_tolerance_runs_all_iterations() {
    let (f, _, l1) = instance(3);
    let data = Denoising::new(Grid::new(N, N, f).unwrap());
    let fixed = solve_tv(&data, &map(&l1), &PdhgConfig::tv_denoise().with_iters(300).with_tol(0.0), None).unwrap();
    assert_eq!(fixed.report.iterations, 300);
    let early = solve_tv(&data, &map(&l1), &PdhgConfig::tv_denoise().with_iters(100_000).with_tol(1e-6), None).unwrap();
    assert!(early.report.iterations < 100_000);
    assert!(early.report.last_relative_change().unwrap() <= 1e-6);
}

#[test]
fn full_mask_mri_equals_denoising() {
    // with P = Id the unitary transform leaves the problem unchanged
    let n = 16;
    let mut rng = Lcg(11);
    let img = Grid::new(n, n, rng.vec(n * n, 0.0, 1.0)).unwrap().to_complex();
    let mask = SamplingMask::full(n, n);
    let k = simulate_kspace(&img, &mask, 0.0, 0).unwrap();
    let mri = MriData::new(k, mask).unwrap();
    let lambda = ParamMap::constant(n, n, 0.1).unwrap();
    let cfg = PdhgConfig::tv_mri().with_iters(3000).with_tol(0.0);
    let a = solve_tv(&mri, &lambda, &cfg, None).unwrap();
    let b = solve_tv(&Denoising::new(img), &lambda, &cfg, None).unwrap();
    let diff = a.u.data().iter().zip(b.u.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "max difference {diff}");
}

#[test]
fn undersampled_tgv_reduces_energy_from_zero_filling() {
    let n = 32;
    let img = wtgv::shepp_like_phantom(n).unwrap();
    let mask = make_mask((n, n), 4, 0.08, 1).unwrap();
    let mri = MriData::new(simulate_kspace(&img, &mask, 0.02, 2).unwrap(), mask).unwrap();
    let (l0, l1) = (ParamMap::constant(n, n, 0.02).unwrap(), ParamMap::constant(n, n, 0.01).unwrap());
    let zf = mri.zero_filled();
    let e0 = tgv_energy(&zf, &grad(&zf), &mri, &l0, &l1).unwrap();
    let sol = solve_tgv(&mri, &l0, &l1, &PdhgConfig::tgv_mri().with_iters(500), None).unwrap();
    assert!(sol.report.final_energy < e0);
}

#[test]
fn unrolled_apply_is_a_fixed_depth_solve() {
    let (f, l0, l1) = instance(21);
    let data = Denoising::new(Grid::new(N, N, f).unwrap());
    let cfg = PdhgConfig::tgv_denoise().with_tol(0.5);
    let u = unrolled_apply(&data, &map(&l0), &map(&l1), 17, &cfg).unwrap();
    let full = solve_tgv(&data, &map(&l0), &map(&l1), &cfg.clone().with_iters(17).with_tol(0.0), None).unwrap();
    assert_eq!(u, full.u);
    assert!(unrolled_apply(&data, &map(&l0), &map(&l1), 0, &cfg).is_err());
}

#[test]
fn inner_field_solve_matches_dense_tgv_value() {
    let (f, l0, l1) = instance(33);
    let u = Grid::new(N, N, f.clone()).unwrap();
    let (w, report) = solve_tgv_field(&u, &map(&l0), &map(&l1), 50_000, 0.0, None).unwrap();
    assert_eq!(w.shape(), (N, N));
    let reference = reference_tgv_value(&f, &l0, &l1, N, N, 50_000);
    let rel = (report.final_energy - reference.energy).abs() / reference.energy;
    assert!(rel < 1e-5, "{} vs {}", report.final_energy, reference.energy);
}
