//! Coupled images, kernel fields, and the inversion from kernel values back
//! to intensities.
//!
//! A gray image is paired with a constant image. A color image gets one
//! couple per channel, chosen so that the kernel value depends only on the
//! target channel:
//!
//! * Gaussian: the current image with the target channel zeroed, giving
//!   `k = exp(-I_c^2 / 2δ)`;
//! * polynomial: the one-hot image for the target channel, giving `k = I_c^d`.

use crate::error::{Error, Result};
use crate::image::{Image, PixelVec};
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoupleRule {
    /// A constant gray couple.
    GrayConstant { level: f64 },
    /// The per-channel couple for a color image.
    ColorChannel { target: usize },
}

impl CoupleRule {
    /// The constant couple that makes gray reconstruction unambiguous:
    /// level 0 for Gaussian kernels, level 1 for polynomial kernels.
    pub fn gray_default(k: &KernelSpec) -> Self {
        match k {
            KernelSpec::Gaussian { .. } => CoupleRule::GrayConstant { level: 0.0 },
            KernelSpec::Polynomial { .. } => CoupleRule::GrayConstant { level: 1.0 },
        }
    }

    /// Checks that `k` can be inverted under this rule for an image with `channels` channels.
    pub fn check(&self, k: &KernelSpec, channels: usize) -> Result<()> {
        match *self {
            CoupleRule::GrayConstant { level } => {
                if channels != 1 {
                    return Err(Error::CoupleMismatch(format!(
                        "gray constant couple on a {channels}-channel image"
                    )));
                }
                match k {
                    KernelSpec::Gaussian { .. } if level != 0.0 && level != 1.0 => {
                        Err(Error::CoupleMismatch(format!(
                            "Gaussian gray couple level must be 0 or 1, got {level}"
                        )))
                    }
                    KernelSpec::Polynomial { .. } if !(level > 0.0 && level <= 1.0) => {
                        Err(Error::CoupleMismatch(format!(
                            "polynomial gray couple level must lie in (0, 1], got {level}"
                        )))
                    }
                    _ => Ok(()),
                }
            }
            CoupleRule::ColorChannel { target } => {
                if channels != 3 {
                    return Err(Error::CoupleMismatch(format!(
                        "color channel couple on a {channels}-channel image"
                    )));
                }
                if target >= 3 {
                    return Err(Error::ChannelIndex {
                        index: target,
                        channels,
                    });
                }
                Ok(())
            }
        }
    }
}

/// Per-pixel kernel values `k(I^a(x,y), I^b(x,y))`. Values are not clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl KernelField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} kernel values for a {width}x{height} field",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, v: f64) -> Self {
        Self {
            width,
            height,
            values: vec![v; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_same_shape(&self, other: &KernelField) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{}x{} field vs {}x{} field",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Largest absolute per-pixel difference.
    pub fn max_abs_diff(&self, other: &KernelField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the couple `I^b` for `current` under `rule`.
pub fn make_coupled(rule: CoupleRule, k: &KernelSpec, current: &Image) -> Result<Image> {
    rule.check(k, current.channels())?;
    let (w, h) = (current.width(), current.height());
    match rule {
        CoupleRule::GrayConstant { level } => Ok(Image::constant(w, h, PixelVec::gray(level))),
        CoupleRule::ColorChannel { target } => match k {
            KernelSpec::Gaussian { .. } => current.with_channel(target, &vec![0.0; w * h]),
            KernelSpec::Polynomial { .. } => {
                let mut one_hot = PixelVec::zeros(3);
                one_hot.as_mut_slice()[target] = 1.0;
                Ok(Image::constant(w, h, one_hot))
            }
        },
    }
}

/// Evaluates `k` pixelwise over `a` and its couple `b`.
pub fn kernel_field(k: &KernelSpec, a: &Image, b: &Image) -> Result<KernelField> {
    a.check_same_shape(b)?;
    let values = (0..a.len())
        .map(|i| k.eval(&a.pixel_at(i), &b.pixel_at(i)))
        .collect::<Result<Vec<_>>>()?;
    KernelField::new(a.width(), a.height(), values)
}

/// An intensity recovered from a kernel value, flagged when the kernel value
/// had to be pulled back into the kernel's range first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub value: f64,
    pub warned: bool,
}

/// Inverts `v = exp(-I^2 / 2δ)`: `I = sqrt(-2δ ln v)`, clamped to `[0, 1]`.
pub fn reconstruct_gaussian(v: f64, delta: f64) -> Result<Recovered> {
    if !(delta > 0.0) {
        return Err(Error::Kernel(format!(
            "Gaussian delta must be > 0, got {delta}"
        )));
    }
    if !(v > 0.0) {
        return Err(Error::Domain(format!(
            "Gaussian kernel value {v} is not positive"
        )));
    }
    let warned = v > 1.0;
    let v = v.min(1.0);
    let value = (-v.ln() * 2.0 * delta).sqrt().min(1.0);
    Ok(Recovered { value, warned })
}

/// Inverts `v = I^d`: `I = v^(1/d)`, clamped to `[0, 1]`.
pub fn reconstruct_polynomial(v: f64, degree: f64) -> Recovered {
    if v < 0.0 || v.is_nan() {
        return Recovered {
            value: 0.0,
            warned: true,
        };
    }
    Recovered {
        value: v.powf(1.0 / degree).min(1.0),
        warned: false,
    }
}

/// Recovers the intensity of the channel that `rule` targets from its kernel value.
pub fn reconstruct(k: &KernelSpec, rule: CoupleRule, v: f64) -> Result<Recovered> {
    match (*k, rule) {
        (KernelSpec::Gaussian { delta }, CoupleRule::GrayConstant { level }) => {
            let r = reconstruct_gaussian(v, delta)?;
            if level == 1.0 {
                Ok(Recovered {
                    value: 1.0 - r.value,
                    ..r
                })
            } else {
                Ok(r)
            }
        }
        (KernelSpec::Gaussian { delta }, CoupleRule::ColorChannel { .. }) => {
            reconstruct_gaussian(v, delta)
        }
        (KernelSpec::Polynomial { degree }, CoupleRule::GrayConstant { level }) => {
            let r = reconstruct_polynomial(v, degree);
            Ok(Recovered {
                value: (r.value / level).min(1.0),
                ..r
            })
        }
        (KernelSpec::Polynomial { degree }, CoupleRule::ColorChannel { .. }) => {
            Ok(reconstruct_polynomial(v, degree))
        }
    }
}
