//! Display of images in kernel space.
//!
//! Gaussian kernels against a zero couple reverse the gray order, so their
//! fields are shown as `1 - k`. Polynomial fields are shown as they are, and
//! min-max stretched only if they leave `[0, 1]`.

use crate::coupling::{self, CoupleRule, KernelField};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernels::KernelSpec;

/// Kernel fields of `img` under the default couples, one per channel.
pub fn lift(img: &Image, kernel: &KernelSpec) -> Result<Vec<KernelField>> {
    if img.channels() == 1 {
        let rule = CoupleRule::gray_default(kernel);
        let b = coupling::make_coupled(rule, kernel, img)?;
        Ok(vec![coupling::kernel_field(kernel, img, &b)?])
    } else {
        (0..img.channels())
            .map(|c| {
                let b =
                    coupling::make_coupled(CoupleRule::ColorChannel { target: c }, kernel, img)?;
                coupling::kernel_field(kernel, img, &b)
            })
            .collect()
    }
}

/// Turns per-channel kernel fields into a displayable image.
pub fn kernel_image(fields: &[KernelField], kernel: &KernelSpec) -> Result<Image> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Dimension("no kernel fields".into()))?;
    let (w, h) = (first.width(), first.height());
    let n = fields.len();
    if n != 1 && n != 3 {
        return Err(Error::Channels(n));
    }
    for f in fields {
        f.check_same_shape(first)?;
    }
    let mut data = vec![0.0; w * h * n];
    for (c, f) in fields.iter().enumerate() {
        for (i, &v) in f.values().iter().enumerate() {
            data[i * n + c] = v;
        }
    }
    match kernel {
        KernelSpec::Gaussian { .. } => {
            for v in &mut data {
                *v = 1.0 - *v;
            }
        }
        KernelSpec::Polynomial { .. } => {
            let (lo, hi) = data
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if (lo < 0.0 || hi > 1.0) && hi > lo {
                for v in &mut data {
                    *v = (*v - lo) / (hi - lo);
                }
            }
        }
    }
    Image::from_clamped(w, h, n, data)
}
