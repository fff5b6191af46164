//! Gaussian and polynomial kernels with the inner products of mapped pixels
//! and their spatial derivatives.
//!
//! Nothing here touches the feature map directly: every quantity is expressed
//! through kernel values, pixel values and the per-channel image gradient.
//!
//! | quantity | Gaussian | polynomial |
//! |---|---|---|
//! | `k(a, b)` | `exp(-|a-b|^2 / 2δ)` | `(a·b)^d` |
//! | `<∂xφ(a), φ(b)>` | `k Σ (b_i - a_i) ∂x a_i / δ` | `d (a·b)^(d-1) Σ b_i ∂x a_i` |
//! | `<∂xφ(a), ∂xφ(a)>` | `Σ (∂x a_i)^2 / δ` | `d(d-1)(a·a)^(d-2) (Σ a_i ∂x a_i)^2 + d (a·a)^(d-1) Σ (∂x a_i)^2` |

use crate::error::{Error, Result};
use crate::image::PixelVec;

/// Bases below this are lifted before being raised to a negative power.
pub const SINGULAR_BASE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Gaussian { delta: f64 },
    Polynomial { degree: f64 },
}

/// Which kernel family a parameter sweep runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Gaussian,
    Polynomial,
}

impl KernelFamily {
    pub fn with_param(self, param: f64) -> Result<KernelSpec> {
        match self {
            KernelFamily::Gaussian => KernelSpec::gaussian(param),
            KernelFamily::Polynomial => KernelSpec::polynomial(param),
        }
    }

    /// The default sweep grid: δ = 0.1..=1.0 or d = 1.1..=2.0, step 0.1.
    pub fn default_grid(self) -> Vec<f64> {
        let start = match self {
            KernelFamily::Gaussian => 1,
            KernelFamily::Polynomial => 11,
        };
        (start..start + 10).map(|i| f64::from(i) / 10.0).collect()
    }
}

/// Derivative data for one pixel: the pixel `a`, its couple `b`, and the
/// per-channel spatial derivatives of `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradSample {
    pub a: PixelVec,
    pub b: PixelVec,
    pub dax: PixelVec,
    pub day: PixelVec,
}

impl GradSample {
    pub fn new(a: PixelVec, b: PixelVec, dax: PixelVec, day: PixelVec) -> Result<Self> {
        let n = a.len();
        if b.len() != n || dax.len() != n || day.len() != n {
            return Err(Error::Dimension(format!(
                "gradient sample channels disagree: {} {} {} {}",
                n,
                b.len(),
                dax.len(),
                day.len()
            )));
        }
        Ok(Self { a, b, dax, day })
    }

    /// The sample with x and y roles exchanged.
    pub fn swap_axes(&self) -> Self {
        Self {
            dax: self.day,
            day: self.dax,
            ..*self
        }
    }
}

/// `<∂xφ,∂xφ>`, `<∂yφ,∂yφ>` and `<∂xφ,∂yφ>` at one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricInner {
    pub gxx: f64,
    pub gyy: f64,
    pub gxy: f64,
}

impl MetricInner {
    /// `gxx + gyy`, the squared feature-space gradient magnitude.
    #[inline]
    pub fn trace(&self) -> f64 {
        self.gxx + self.gyy
    }

    /// Determinant of the first fundamental form `I + G`.
    #[inline]
    pub fn area_element(&self) -> f64 {
        ((1.0 + self.gxx) * (1.0 + self.gyy) - self.gxy * self.gxy).sqrt()
    }
}

impl KernelSpec {
    pub fn gaussian(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Kernel(format!(
                "Gaussian delta must be > 0, got {delta}"
            )));
        }
        Ok(KernelSpec::Gaussian { delta })
    }

    /// Degrees below 1 are accepted; derivatives then require positive intensities.
    pub fn polynomial(degree: f64) -> Result<Self> {
        if !(degree.is_finite() && degree > 0.0) {
            return Err(Error::Kernel(format!(
                "polynomial degree must be > 0, got {degree}"
            )));
        }
        Ok(KernelSpec::Polynomial { degree })
    }

    /// The degree-1 polynomial kernel, under which the kernel field is the image itself.
    pub fn linear() -> Self {
        KernelSpec::Polynomial { degree: 1.0 }
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            KernelSpec::Gaussian { .. } => KernelFamily::Gaussian,
            KernelSpec::Polynomial { .. } => KernelFamily::Polynomial,
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { delta } => delta,
            KernelSpec::Polynomial { degree } => degree,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { delta } => Self::gaussian(delta).map(|_| ()),
            KernelSpec::Polynomial { degree } => Self::polynomial(degree).map(|_| ()),
        }
    }

    /// `k(a, b)`.
    pub fn eval(&self, a: &PixelVec, b: &PixelVec) -> Result<f64> {
        check_len(a, b)?;
        match *self {
            KernelSpec::Gaussian { delta } => Ok((-a.dist2(b) / (2.0 * delta)).exp()),
            KernelSpec::Polynomial { degree } => real_pow(a.dot(b), degree),
        }
    }

    /// `<∂xφ(a), φ(b)>`.
    pub fn grad_k_x(&self, s: &GradSample) -> Result<f64> {
        self.grad_k_along(&s.a, &s.b, &s.dax)
    }

    /// `<∂yφ(a), φ(b)>`.
    pub fn grad_k_y(&self, s: &GradSample) -> Result<f64> {
        self.grad_k_along(&s.a, &s.b, &s.day)
    }

    fn grad_k_along(&self, a: &PixelVec, b: &PixelVec, da: &PixelVec) -> Result<f64> {
        check_len(a, b)?;
        check_len(a, da)?;
        match *self {
            KernelSpec::Gaussian { delta } => {
                let k = self.eval(a, b)?;
                let s: f64 = a
                    .as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .zip(da.as_slice())
                    .map(|((ai, bi), di)| (bi - ai) * di)
                    .sum();
                Ok(k * s / delta)
            }
            KernelSpec::Polynomial { degree } => {
                let base = a.dot(b);
                let scale = degree * guarded_pow(base, degree - 1.0, degree)?;
                Ok(scale * b.dot(da))
            }
        }
    }

    /// Feature-space metric terms at one pixel. The couple `b` does not enter.
    pub fn metric_inner(&self, s: &GradSample) -> Result<MetricInner> {
        let (a, dx, dy) = (&s.a, &s.dax, &s.day);
        check_len(a, dx)?;
        check_len(a, dy)?;
        match *self {
            KernelSpec::Gaussian { delta } => Ok(MetricInner {
                gxx: dx.dot(dx) / delta,
                gyy: dy.dot(dy) / delta,
                gxy: dx.dot(dy) / delta,
            }),
            KernelSpec::Polynomial { degree: d } => {
                let base = a.dot(a);
                let first = if d == 1.0 {
                    0.0
                } else {
                    d * (d - 1.0) * guarded_pow(base, d - 2.0, d)?
                };
                let second = d * guarded_pow(base, d - 1.0, d)?;
                let (ax, ay) = (a.dot(dx), a.dot(dy));
                Ok(MetricInner {
                    gxx: first * ax * ax + second * dx.dot(dx),
                    gyy: first * ay * ay + second * dy.dot(dy),
                    gxy: first * ax * ay + second * dx.dot(dy),
                })
            }
        }
    }

    /// `k(a,a) + k(b,b) - 2 k(a,b)`, the squared feature-space distance.
    pub fn feature_dist2(&self, a: &PixelVec, b: &PixelVec) -> Result<f64> {
        Ok(self.eval(a, a)? + self.eval(b, b)? - 2.0 * self.eval(a, b)?)
    }

    /// Largest observed `‖φ(a) - φ(b)‖² / |a - b|²` over the given pairs.
    ///
    /// A finite result on a dense grid is the empirical face of the
    /// second-order Hölder condition that keeps `φ∘I` of bounded variation.
    /// Identical pairs carry no information and are skipped.
    pub fn holder_estimate(&self, pairs: &[(PixelVec, PixelVec)]) -> Result<f64> {
        let mut best = 0.0_f64;
        for (a, b) in pairs {
            let gap = a.dist2(b);
            if gap == 0.0 {
                continue;
            }
            best = best.max(self.feature_dist2(a, b)? / gap);
        }
        Ok(best)
    }
}

fn check_len(a: &PixelVec, b: &PixelVec) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{}-channel pixel against {}-channel pixel",
            a.len(),
            b.len()
        )))
    }
}

/// `base^exp`, refusing fractional powers of negative numbers.
fn real_pow(base: f64, exp: f64) -> Result<f64> {
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "negative base {base} under fractional degree {exp}"
        )));
    }
    Ok(base.powf(exp))
}

/// `base^exp` where a negative exponent lifts small bases to the floor.
/// An exactly-zero base only errors when the kernel degree is below 1,
/// where the derivative genuinely diverges.
fn guarded_pow(base: f64, exp: f64, degree: f64) -> Result<f64> {
    if exp < 0.0 {
        if base == 0.0 && degree < 1.0 {
            return Err(Error::SingularBase { base, degree });
        }
        if base < SINGULAR_BASE_FLOOR {
            return Ok(SINGULAR_BASE_FLOOR.powf(exp));
        }
    }
    real_pow(base, exp)
}
