//! Outer fixed-point loop shared by the local (4-neighbor) and nonlocal
//! schemes.
//!
//! Each iteration evolves the kernel field by one Jacobi sweep and then maps
//! the field back to intensities, because the diffusion weights are computed
//! from intensity gradients of the current image.

use std::time::Instant;

use crate::coupling::{self, CoupleRule, KernelField};
use crate::error::{Error, Result};
use crate::image::{reflect, Image, PixelVec};
use crate::kernels::{GradSample, KernelSpec};

/// How the three channels of a color image are advanced within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelUpdate {
    /// Red, then green, then blue; later channels see the already updated ones.
    #[default]
    Sequential,
    /// All channels read the previous iterate.
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Gradient exponent.
    pub p: f64,
    /// Fidelity weight.
    pub lambda: f64,
    pub max_iters: usize,
    /// Added to the squared gradient magnitude before raising it to `(p - 2) / 2`.
    pub eps: f64,
    /// Early exit once the relative max-norm field change drops below this; 0 disables.
    pub stop_tol: f64,
    pub channel_update: ChannelUpdate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 1.2,
            lambda: 10.0,
            max_iters: 50,
            eps: 1e-6,
            stop_tol: 0.0,
            channel_update: ChannelUpdate::Sequential,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::Config(format!("p must be > 0, got {}", self.p)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config(format!(
                "stop_tol must be >= 0, got {}",
                self.stop_tol
            )));
        }
        Ok(())
    }

    /// `(g + eps)^((p - 2) / 2)` for a squared feature-space gradient `g`.
    #[inline]
    pub fn diffusivity(&self, g: f64) -> f64 {
        (g + self.eps).powf(0.5 * (self.p - 2.0))
    }
}

/// The four stencil directions. `N` is `y - 1`, `S` is `y + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    E,
    N,
    W,
    S,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::E, Direction::N, Direction::W, Direction::S];

    #[inline]
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::E => (1, 0),
            Direction::N => (0, -1),
            Direction::W => (-1, 0),
            Direction::S => (0, 1),
        }
    }

    #[inline]
    fn is_horizontal(self) -> bool {
        matches!(self, Direction::E | Direction::W)
    }
}

/// The current image together with its kernel and per-channel central
/// differences; everything the diffusion weights are computed from.
pub struct MetricContext<'a> {
    image: &'a Image,
    kernel: KernelSpec,
    cx: Vec<f64>,
    cy: Vec<f64>,
}

impl<'a> MetricContext<'a> {
    pub fn new(image: &'a Image, kernel: KernelSpec) -> Self {
        let (w, h, ch) = (image.width(), image.height(), image.channels());
        let mut cx = vec![0.0; w * h * ch];
        let mut cy = vec![0.0; w * h * ch];
        for y in 0..h {
            let (yn, ys) = (reflect(y as isize - 1, h), reflect(y as isize + 1, h));
            for x in 0..w {
                let (xw, xe) = (reflect(x as isize - 1, w), reflect(x as isize + 1, w));
                for c in 0..ch {
                    let i = (y * w + x) * ch + c;
                    cx[i] = 0.5 * (image.sample(xe, y, c) - image.sample(xw, y, c));
                    cy[i] = 0.5 * (image.sample(x, ys, c) - image.sample(x, yn, c));
                }
            }
        }
        Self {
            image,
            kernel,
            cx,
            cy,
        }
    }

    #[inline]
    pub fn image(&self) -> &Image {
        self.image
    }

    #[inline]
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// The neighbor of `(x, y)` in direction `dir`, reflected at the border.
    #[inline]
    pub fn neighbor(&self, x: usize, y: usize, dir: Direction) -> (usize, usize) {
        let (dx, dy) = dir.offset();
        (
            reflect(x as isize + dx, self.image.width()),
            reflect(y as isize + dy, self.image.height()),
        )
    }

    /// Central-difference gradient sample at a pixel.
    pub fn pixel_sample(&self, x: usize, y: usize) -> GradSample {
        let idx = self.image.index(x, y);
        let a = self.image.pixel_at(idx);
        GradSample {
            a,
            b: a,
            dax: self.slice(&self.cx, idx),
            day: self.slice(&self.cy, idx),
        }
    }

    /// Gradient sample halfway between `(x, y)` and its `dir` neighbor: the
    /// one-sided difference along the axis joining them, and the mean of the
    /// two central differences across it.
    pub fn midpoint_sample(&self, x: usize, y: usize, dir: Direction) -> GradSample {
        let (nx, ny) = self.neighbor(x, y, dir);
        let (io, ir) = (self.image.index(x, y), self.image.index(nx, ny));
        let (po, pr) = (self.image.pixel_at(io), self.image.pixel_at(ir));
        let ch = self.image.channels();
        let mut a = PixelVec::zeros(ch);
        let mut along = PixelVec::zeros(ch);
        let mut across = PixelVec::zeros(ch);
        let forward = matches!(dir, Direction::E | Direction::S);
        let transverse = if dir.is_horizontal() {
            &self.cy
        } else {
            &self.cx
        };
        for c in 0..ch {
            a.as_mut_slice()[c] = 0.5 * (po[c] + pr[c]);
            along.as_mut_slice()[c] = if forward {
                pr[c] - po[c]
            } else {
                po[c] - pr[c]
            };
            across.as_mut_slice()[c] = 0.5 * (transverse[io * ch + c] + transverse[ir * ch + c]);
        }
        let (dax, day) = if dir.is_horizontal() {
            (along, across)
        } else {
            (across, along)
        };
        GradSample { a, b: a, dax, day }
    }

    /// Gradient sample for a nonlocal edge `p -> q`: the intensity difference
    /// plays the role of the derivative along the edge.
    pub fn edge_sample(&self, p: usize, q: usize) -> GradSample {
        let (pp, pq) = (self.image.pixel_at(p), self.image.pixel_at(q));
        let ch = self.image.channels();
        let mut a = PixelVec::zeros(ch);
        let mut diff = PixelVec::zeros(ch);
        for c in 0..ch {
            a.as_mut_slice()[c] = 0.5 * (pp[c] + pq[c]);
            diff.as_mut_slice()[c] = pq[c] - pp[c];
        }
        GradSample {
            a,
            b: a,
            dax: diff,
            day: PixelVec::zeros(ch),
        }
    }

    #[inline]
    fn slice(&self, buf: &[f64], idx: usize) -> PixelVec {
        let ch = self.image.channels();
        let mut v = PixelVec::zeros(ch);
        v.as_mut_slice()
            .copy_from_slice(&buf[idx * ch..idx * ch + ch]);
        v
    }
}

/// One Jacobi sweep over a kernel field.
pub trait Scheme: Sync {
    /// Returns the next field and the largest `|Σh - 1|` seen over all pixels.
    fn sweep(
        &self,
        field: &KernelField,
        anchor: &KernelField,
        metric: &MetricContext<'_>,
        cfg: &SolverConfig,
    ) -> Result<(KernelField, f64)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub iter: usize,
    /// Largest per-pixel kernel-field change over all channels.
    pub max_change: f64,
    /// Kernel values that fell outside the kernel's range before reconstruction.
    pub clamp_warnings: usize,
    /// Largest deviation of the stencil weights from summing to one.
    pub max_weight_sum_error: f64,
    pub wall_ms: f64,
}

/// What a sweep saw, handed to an [`Observer`] after every channel update.
pub struct SweepEvent<'a> {
    pub iter: usize,
    pub channel: usize,
    pub before: &'a KernelField,
    pub anchor: &'a KernelField,
    pub after: &'a KernelField,
    pub max_weight_sum_error: f64,
}

pub trait Observer {
    fn on_sweep(&mut self, event: &SweepEvent<'_>);
}

impl Observer for () {
    fn on_sweep(&mut self, _: &SweepEvent<'_>) {}
}

impl<F: FnMut(&SweepEvent<'_>)> Observer for F {
    fn on_sweep(&mut self, event: &SweepEvent<'_>) {
        self(event)
    }
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub image: Image,
    /// The final kernel field of each channel.
    pub fields: Vec<KernelField>,
    pub diagnostics: Vec<IterationStats>,
}

impl Denoised {
    /// Writes `iter,max_change,clamp_warnings,max_weight_sum_error,wall_ms` rows.
    pub fn write_diagnostics<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "iter",
            "max_change",
            "clamp_warnings",
            "max_weight_sum_error",
            "wall_ms",
        ])?;
        for s in &self.diagnostics {
            wtr.write_record([
                s.iter.to_string(),
                format!("{:e}", s.max_change),
                s.clamp_warnings.to_string(),
                format!("{:e}", s.max_weight_sum_error),
                format!("{:.3}", s.wall_ms),
            ])?;
        }
        wtr.flush().map_err(|e| Error::Io {
            path: "<diagnostics>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Runs the fixed-point iteration on a gray image with a constant couple.
pub(crate) fn solve_gray(
    noisy: &Image,
    kernel: &KernelSpec,
    rule: CoupleRule,
    scheme: &dyn Scheme,
    cfg: &SolverConfig,
    observer: &mut dyn Observer,
) -> Result<Denoised> {
    cfg.validate()?;
    kernel.validate()?;
    if noisy.channels() != 1 {
        return Err(Error::CoupleMismatch(format!(
            "gray solver given a {}-channel image",
            noisy.channels()
        )));
    }
    rule.check(kernel, 1)?;
    let couple = coupling::make_coupled(rule, kernel, noisy)?;
    let anchor = coupling::kernel_field(kernel, noisy, &couple)?;
    let mut field = anchor.clone();
    let mut current = noisy.clone();
    let mut diagnostics = Vec::with_capacity(cfg.max_iters);

    for iter in 0..cfg.max_iters {
        let started = Instant::now();
        let metric = MetricContext::new(&current, *kernel);
        let (next, sum_err) = scheme.sweep(&field, &anchor, &metric, cfg)?;
        observer.on_sweep(&SweepEvent {
            iter,
            channel: 0,
            before: &field,
            anchor: &anchor,
            after: &next,
            max_weight_sum_error: sum_err,
        });
        let change = next.max_abs_diff(&field);
        let scale = field.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let (values, warnings) = recover_channel(kernel, rule, next.values())?;
        current = Image::from_clamped(noisy.width(), noisy.height(), 1, values)?;
        field = next;
        diagnostics.push(IterationStats {
            iter,
            max_change: change,
            clamp_warnings: warnings,
            max_weight_sum_error: sum_err,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if converged(cfg, change, scale) {
            break;
        }
    }
    Ok(Denoised {
        image: current,
        fields: vec![field],
        diagnostics,
    })
}

/// Runs the fixed-point iteration on a color image, one couple per channel.
pub(crate) fn solve_color(
    noisy: &Image,
    kernel: &KernelSpec,
    scheme: &dyn Scheme,
    cfg: &SolverConfig,
    observer: &mut dyn Observer,
) -> Result<Denoised> {
    cfg.validate()?;
    kernel.validate()?;
    if noisy.channels() != 3 {
        return Err(Error::CoupleMismatch(format!(
            "color solver given a {}-channel image",
            noisy.channels()
        )));
    }
    // Each anchor pairs the noisy image with its own couple, so it stays
    // fixed. Pairing it with the moving couple of the current iterate feeds
    // the other channels' residuals back into the target channel.
    let anchors = (0..3)
        .map(|c| {
            let rule = CoupleRule::ColorChannel { target: c };
            coupling::kernel_field(kernel, noisy, &coupling::make_coupled(rule, kernel, noisy)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut current = noisy.clone();
    let mut fields: Vec<KernelField> = Vec::with_capacity(3);
    let mut diagnostics = Vec::with_capacity(cfg.max_iters);

    for iter in 0..cfg.max_iters {
        let started = Instant::now();
        let previous = current.clone();
        let mut staged = current.clone();
        let mut change = 0.0_f64;
        let mut scale = 0.0_f64;
        let mut warnings = 0;
        let mut sum_err = 0.0_f64;
        let mut next_fields = Vec::with_capacity(3);

        for (c, anchor) in anchors.iter().enumerate() {
            let source = match cfg.channel_update {
                ChannelUpdate::Sequential => &current,
                ChannelUpdate::Simultaneous => &previous,
            };
            let rule = CoupleRule::ColorChannel { target: c };
            let couple = coupling::make_coupled(rule, kernel, source)?;
            let field = coupling::kernel_field(kernel, source, &couple)?;
            let metric = MetricContext::new(source, *kernel);
            let (next, err) = scheme.sweep(&field, anchor, &metric, cfg)?;
            observer.on_sweep(&SweepEvent {
                iter,
                channel: c,
                before: &field,
                anchor,
                after: &next,
                max_weight_sum_error: err,
            });
            change = change.max(next.max_abs_diff(&field));
            scale = scale.max(field.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            sum_err = sum_err.max(err);
            let (values, w) = recover_channel(kernel, rule, next.values())?;
            warnings += w;
            match cfg.channel_update {
                ChannelUpdate::Sequential => current = current.with_channel(c, &values)?,
                ChannelUpdate::Simultaneous => staged = staged.with_channel(c, &values)?,
            }
            next_fields.push(next);
        }
        if cfg.channel_update == ChannelUpdate::Simultaneous {
            current = staged;
        }
        fields = next_fields;
        diagnostics.push(IterationStats {
            iter,
            max_change: change,
            clamp_warnings: warnings,
            max_weight_sum_error: sum_err,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if converged(cfg, change, scale) {
            break;
        }
    }
    Ok(Denoised {
        image: current,
        fields,
        diagnostics,
    })
}

fn converged(cfg: &SolverConfig, change: f64, scale: f64) -> bool {
    cfg.stop_tol > 0.0 && change <= cfg.stop_tol * scale.max(f64::MIN_POSITIVE)
}

fn recover_channel(
    kernel: &KernelSpec,
    rule: CoupleRule,
    values: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let mut warnings = 0;
    let out = values
        .iter()
        .map(|&v| {
            let r = coupling::reconstruct(kernel, rule, v)?;
            warnings += usize::from(r.warned);
            Ok(r.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, warnings))
}
