use wtgv::*;
fn main() -> Result<()> {
    let n = 64;
    let clean = square_phantom(n, 0.5, 0.0, 1.0)?;
    let mut cfg = PdhgConfig::tgv_denoise().with_iters(2000).with_tol(0.0);
    cfg.sigma = 0.29 * 16.0; cfg.tau = 0.29 / 16.0;
    for (sd, l0b, l1b, s) in [(0.05, 0.517947467923121, 0.05623413251903491, 0.9503), (0.1, 1.3894954943731375, 0.1, 0.9009), (0.2, 3.7275937203149416, 0.23713737056616552, 0.6814)] {
        let noisy = add_gaussian_noise(&clean, sd, 1000 + (sd * 100.0) as u64)?;
        let data = Denoising::new(noisy);
        let band = 1i64;
        let on = |i: usize, j: usize| {
            let d = |k: usize| [16i64, 48].iter().map(|&e| (k as i64 - e).abs().min((k as i64 - e + 1).abs())).min().unwrap();
            let inside = |k: usize| (k as i64) >= 16 - 1 - band && (k as i64) <= 48 + band;
            (d(i) <= band && inside(j)) || (d(j) <= band && inside(i))
        };
        for edge in [0.3, 0.5] { for flat in [1.0, 2.0, 4.0] {
            let l1 = ParamMap::new(n, n, (0..n*n).map(|t| if on(t / n, t % n) { l1b * edge } else { l1b * flat }).collect())?;
            let l0 = ParamMap::constant(n, n, l0b)?;
            let sol = solve_tgv(&data, &l0, &l1, &cfg, None)?;
            println!("sd {sd} edge {edge} flat {flat}: {:.4} vs {s}", ssim(&sol.u, &clean, 1.0)?);
        }}
    }
    Ok(())
}
