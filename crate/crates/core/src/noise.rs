//! Multiplicative Gaussian noise, `I' = clamp(I * (1 + n), 0, 1)` with
//! `n ~ N(0, (sigma / 255)^2)`.
//!
//! Every sample draws from its own ChaCha stream keyed by the sample index,
//! so the output does not depend on iteration order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of `n` on the 0-255 scale.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }
}

/// The unclamped relative perturbation `n` for sample `index`.
pub fn relative_noise(ns: &NoiseSpec, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(ns.seed);
    rng.set_stream(index as u64);
    let z: f64 = rng.sample(StandardNormal);
    z * ns.sigma / 255.0
}

pub fn add_multiplicative_gaussian(img: &Image, ns: &NoiseSpec) -> Result<Image> {
    NoiseSpec::new(ns.sigma, ns.seed)?;
    if ns.sigma == 0.0 {
        return Ok(img.clone());
    }
    let data: Vec<f64> = img
        .data()
        .par_iter()
        .enumerate()
        .map(|(i, &v)| v * (1.0 + relative_noise(ns, i)))
        .collect();
    Image::from_clamped(img.width(), img.height(), img.channels(), data)
}
