//! Generalized TV in kernel space on the 4-neighborhood.
//!
//! At pixel `O` with neighbors `R ∈ {E, N, W, S}` the discretized
//! Euler–Lagrange equation becomes a low-pass filter
//!
//! ```text
//! k_O = Σ_R h_R k_R + h_O k⁰_O,   h_R = w_R / (Σ w + λ),   h_O = λ / (Σ w + λ)
//! ```
//!
//! with `w_R = |∇φ|^(p-2)` evaluated halfway between `O` and `R`. Each sweep
//! is Gauss–Jacobi: it reads only the previous field.

use rayon::prelude::*;

use crate::coupling::{CoupleRule, KernelField};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernels::KernelSpec;
use crate::solver::{self, Denoised, Direction, MetricContext, Observer, Scheme, SolverConfig};

/// Normalized weights of the five-point stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilWeights {
    pub e: f64,
    pub n: f64,
    pub w: f64,
    pub s: f64,
    pub o: f64,
}

impl StencilWeights {
    pub fn get(&self, dir: Direction) -> f64 {
        match dir {
            Direction::E => self.e,
            Direction::N => self.n,
            Direction::W => self.w,
            Direction::S => self.s,
        }
    }

    pub fn sum(&self) -> f64 {
        self.e + self.n + self.w + self.s + self.o
    }
}

/// `(gxx + gyy + eps)^((p-2)/2)` halfway between `(x, y)` and its `dir` neighbor.
pub fn half_point_grad(
    metric: &MetricContext<'_>,
    x: usize,
    y: usize,
    dir: Direction,
    cfg: &SolverConfig,
) -> Result<f64> {
    let g = metric
        .kernel()
        .metric_inner(&metric.midpoint_sample(x, y, dir))?;
    Ok(cfg.diffusivity(g.trace()))
}

/// The low-pass filter coefficients at `(x, y)`.
pub fn stencil(
    metric: &MetricContext<'_>,
    x: usize,
    y: usize,
    cfg: &SolverConfig,
) -> Result<StencilWeights> {
    let mut raw = [0.0; 4];
    for (r, dir) in raw.iter_mut().zip(Direction::ALL) {
        *r = half_point_grad(metric, x, y, dir, cfg)?;
    }
    let denom = raw.iter().sum::<f64>() + cfg.lambda;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::Domain(format!(
            "stencil denominator {denom} at ({x}, {y})"
        )));
    }
    Ok(StencilWeights {
        e: raw[0] / denom,
        n: raw[1] / denom,
        w: raw[2] / denom,
        s: raw[3] / denom,
        o: cfg.lambda / denom,
    })
}

/// One Jacobi sweep: `k'_O = Σ_R h_R k_R + h_O k⁰_O`.
pub fn gtv_step(
    field: &KernelField,
    anchor: &KernelField,
    metric: &MetricContext<'_>,
    cfg: &SolverConfig,
) -> Result<KernelField> {
    FourNeighbor
        .sweep(field, anchor, metric, cfg)
        .map(|(f, _)| f)
}

/// The 4-neighborhood scheme.
#[derive(Debug, Clone, Copy, Default)]
pub struct FourNeighbor;

impl Scheme for FourNeighbor {
    fn sweep(
        &self,
        field: &KernelField,
        anchor: &KernelField,
        metric: &MetricContext<'_>,
        cfg: &SolverConfig,
    ) -> Result<(KernelField, f64)> {
        field.check_same_shape(anchor)?;
        let (w, h) = (field.width(), field.height());
        if metric.image().width() != w || metric.image().height() != h {
            return Err(Error::Dimension(
                "metric image and kernel field differ in size".into(),
            ));
        }
        let rows = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut row = Vec::with_capacity(w);
                let mut err = 0.0_f64;
                for x in 0..w {
                    let sw = stencil(metric, x, y, cfg)?;
                    err = err.max((sw.sum() - 1.0).abs());
                    let mut v = sw.o * anchor.at(x, y);
                    for dir in Direction::ALL {
                        let (nx, ny) = metric.neighbor(x, y, dir);
                        v += sw.get(dir) * field.at(nx, ny);
                    }
                    row.push(v);
                }
                Ok((row, err))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(w * h);
        let mut err = 0.0_f64;
        for (row, e) in rows {
            values.extend(row);
            err = err.max(e);
        }
        Ok((KernelField::new(w, h, values)?, err))
    }
}

/// Denoises a gray image with a constant couple.
pub fn denoise_gray(
    noisy: &Image,
    kernel: &KernelSpec,
    rule: CoupleRule,
    cfg: &SolverConfig,
) -> Result<Denoised> {
    solver::solve_gray(noisy, kernel, rule, &FourNeighbor, cfg, &mut ())
}

/// Denoises a color image with per-channel couples.
pub fn denoise_color(noisy: &Image, kernel: &KernelSpec, cfg: &SolverConfig) -> Result<Denoised> {
    solver::solve_color(noisy, kernel, &FourNeighbor, cfg, &mut ())
}

/// Dispatches on channel count; gray images use [`CoupleRule::gray_default`].
pub fn denoise(noisy: &Image, kernel: &KernelSpec, cfg: &SolverConfig) -> Result<Denoised> {
    denoise_observed(noisy, kernel, None, cfg, &mut ())
}

/// Like [`denoise`], reporting every sweep to `observer`. `rule` overrides
/// the gray couple and is ignored for color images.
pub fn denoise_observed(
    noisy: &Image,
    kernel: &KernelSpec,
    rule: Option<CoupleRule>,
    cfg: &SolverConfig,
    observer: &mut dyn Observer,
) -> Result<Denoised> {
    if noisy.channels() == 1 {
        let rule = rule.unwrap_or_else(|| CoupleRule::gray_default(kernel));
        solver::solve_gray(noisy, kernel, rule, &FourNeighbor, cfg, observer)
    } else {
        solver::solve_color(noisy, kernel, &FourNeighbor, cfg, observer)
    }
}
