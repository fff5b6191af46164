//! Total-variation denoising carried out in the feature space of a kernel.
//!
//! An image is lifted pixel by pixel through a Gaussian or polynomial kernel
//! against a coupled image, the lifted field is smoothed with a local
//! (four-neighbour) or nonlocal TV scheme, and intensities are recovered from
//! the field by inverting the kernel.
//!
//! ```
//! use kernel_tv::{denoise, psnr, Image, KernelSpec, PixelVec, SolverConfig};
//!
//! let clean = Image::constant(8, 8, PixelVec::gray(0.4));
//! let k = KernelSpec::gaussian(0.5).unwrap();
//! let out = denoise(&clean, &k, &SolverConfig::default()).unwrap();
//! assert!(psnr(&clean, &out.image).unwrap() > 100.0);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod coupling;
pub mod enhance;
pub mod error;
pub mod gtv;
pub mod image;
pub mod io;
pub mod kernels;
pub mod method;
pub mod metrics;
pub mod nltv;
pub mod noise;
pub mod solver;

pub use bench::{run_bench, write_bench_csv, BenchConfig, BenchImage, BenchRow};
pub use coupling::{kernel_field, make_coupled, reconstruct, CoupleRule, KernelField};
pub use error::{Error, Result};
pub use gtv::{denoise, denoise_color, denoise_gray, denoise_observed};
pub use image::{Image, PixelVec};
pub use kernels::{GradSample, KernelFamily, KernelSpec, MetricInner};
pub use method::Method;
pub use metrics::{area_ratio, psnr, select_kernel_param, surface_area, AreaReport, Selection};
pub use nltv::{build_graph, denoise_nltv, NlConfig, NonlocalGraph};
pub use noise::{add_multiplicative_gaussian, NoiseSpec};
pub use solver::{ChannelUpdate, Denoised, IterationStats, SolverConfig, SweepEvent};
