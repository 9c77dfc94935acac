//! Spatially varying total variation (TV) and second-order total generalised
//! variation (TGV) regularisation, solved with the primal-dual hybrid
//! gradient method, for denoising and single-coil Cartesian MRI.
//!
//! ```
//! use wtgv::{Denoising, ParamMap, PdhgConfig, solve_tv, square_phantom, add_gaussian_noise, psnr};
//!
//! let clean = square_phantom(32, 0.5, 0.0, 1.0)?;
//! let noisy = add_gaussian_noise(&clean, 0.1, 7)?;
//! let lambda = ParamMap::constant(32, 32, 0.08)?;
//! let sol = solve_tv(&Denoising::new(noisy.clone()), &lambda, &PdhgConfig::tv_denoise(), None)?;
//! assert!(psnr(&sol.u, &clean, 1.0)? > psnr(&noisy, &clean, 1.0)?);
//! # Ok::<(), wtgv::Error>(())
//! ```

pub mod analysis;
pub mod diff;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod metrics;
pub mod pdhg;
pub mod phantoms;
pub mod prox;
pub mod search;
pub mod tensor_io;

pub use analysis::{
    extract_profile, ker_e_projection, ratio_map, score_from_field, tv_equivalence_score, EdgeProfile,
    ExtremumKind,
};
pub use diff::{div, grad, operator_norm_estimate, sym_div, sym_grad, Regulariser};
pub use error::{Error, Result};
pub use fourier::{adjoint, forward, make_mask, simulate_kspace, SamplingMask};
pub use grid::{ComplexGrid, Grid, ParamMap, Scalar, ScalarGrid, SymTensorField, VectorField};
pub use metrics::{add_gaussian_noise, psnr, ssim};
pub use pdhg::{
    solve_tgv, solve_tv, tgv_energy, tv_energy, unrolled_apply, DataTerm, Denoising, MriData, PdhgConfig,
    SolveReport, TgvSolution, TvSolution,
};
pub use phantoms::{ramp_phantom, shepp_like_phantom, square_phantom};
pub use prox::{project_weighted_linf, prox_denoise, prox_mri};
pub use search::{grid_search_scalar, GridSearchResult, GridSpec};
pub use tensor_io::{read_tensor, write_tensor, Tensor};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/mri.md")]
    mod mri {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/trainer.md")]
    mod trainer {}
}
