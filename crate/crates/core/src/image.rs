//! Image container shared by every solver.
//!
//! Intensities are stored as `f64` normalized to `[0, 1]`, row-major with
//! interleaved channels. Coordinates are `(x, y)` = (column, row).

use crate::error::{Error, Result};

/// A 1- or 3-channel image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// The intensities of one pixel, one entry per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelVec {
    values: [f64; 3],
    len: usize,
}

impl PixelVec {
    pub fn gray(v: f64) -> Self {
        Self {
            values: [v, 0.0, 0.0],
            len: 1,
        }
    }

    pub fn rgb(r: f64, g: f64, b: f64) -> Self {
        Self {
            values: [r, g, b],
            len: 3,
        }
    }

    /// Builds a vector from a 1- or 3-element slice.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match *values {
            [v] => Ok(Self::gray(v)),
            [r, g, b] => Ok(Self::rgb(r, g, b)),
            _ => Err(Error::Channels(values.len())),
        }
    }

    pub fn zeros(len: usize) -> Self {
        debug_assert!(len == 1 || len == 3);
        Self {
            values: [0.0; 3],
            len,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values[..self.len]
    }

    #[inline]
    pub fn dot(&self, other: &PixelVec) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn dist2(&self, other: &PixelVec) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `self + s * dir`, componentwise.
    #[inline]
    pub fn offset(&self, dir: &PixelVec, s: f64) -> PixelVec {
        let mut out = *self;
        for (o, d) in out.as_mut_slice().iter_mut().zip(dir.as_slice()) {
            *o += s * d;
        }
        out
    }
}

impl std::ops::Index<usize> for PixelVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl Image {
    /// Wraps a buffer of intensities. Values outside `[0, 1]` are rejected.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_channels(channels)?;
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "buffer holds {} samples, {width}x{height}x{channels} needs {}",
                data.len(),
                width * height * channels
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Dimension(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Clamps every sample into `[0, 1]` (NaN maps to 0) and wraps the buffer.
    pub fn from_clamped(
        width: usize,
        height: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        Self::new(width, height, channels, data)
    }

    pub fn constant(width: usize, height: usize, pixel: PixelVec) -> Self {
        let channels = pixel.len();
        let mut data = Vec::with_capacity(width * height * channels);
        for _ in 0..width * height {
            data.extend_from_slice(pixel.as_slice());
        }
        Self::from_clamped(width, height, channels, data)
            .expect("constant image dimensions are consistent")
    }

    pub fn from_u8(raw: &[u8], width: usize, height: usize, channels: usize) -> Result<Self> {
        check_channels(channels)?;
        if raw.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "{} bytes for a {width}x{height}x{channels} image",
                raw.len()
            )));
        }
        let data = raw.iter().map(|&b| f64::from(b) / 255.0).collect();
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Quantizes to bytes with `round(i * 255)`, clamped to `0..=255`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
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
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> PixelVec {
        self.pixel_at(self.index(x, y))
    }

    #[inline]
    pub fn pixel_at(&self, idx: usize) -> PixelVec {
        let start = idx * self.channels;
        let mut p = PixelVec::zeros(self.channels);
        p.as_mut_slice()
            .copy_from_slice(&self.data[start..start + self.channels]);
        p
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Copies channel `c` out as a gray image.
    pub fn channel_view(&self, c: usize) -> Result<Image> {
        if c >= self.channels {
            return Err(Error::ChannelIndex {
                index: c,
                channels: self.channels,
            });
        }
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Ok(Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        })
    }

    /// Replaces channel `c` with clamped values taken from `values` (one per pixel).
    pub fn with_channel(&self, c: usize, values: &[f64]) -> Result<Image> {
        if c >= self.channels {
            return Err(Error::ChannelIndex {
                index: c,
                channels: self.channels,
            });
        }
        if values.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} channel values for {} pixels",
                values.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        for (i, &v) in values.iter().enumerate() {
            out.data[i * self.channels + c] = clamp_unit(v);
        }
        Ok(out)
    }

    /// Interleaves gray planes into one image.
    pub fn from_channels(planes: &[Image]) -> Result<Image> {
        let first = planes.first().ok_or(Error::Channels(0))?;
        check_channels(planes.len())?;
        let (w, h) = (first.width, first.height);
        if planes
            .iter()
            .any(|p| p.width != w || p.height != h || p.channels != 1)
        {
            return Err(Error::Dimension("channel planes differ in shape".into()));
        }
        let n = planes.len();
        let mut data = vec![0.0; w * h * n];
        for (c, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.data.iter().enumerate() {
                data[i * n + c] = v;
            }
        }
        Ok(Image {
            width: w,
            height: h,
            channels: n,
            data,
        })
    }

    /// Swaps rows and columns.
    pub fn transpose(&self) -> Image {
        let mut data = vec![0.0; self.data.len()];
        let ch = self.channels;
        for y in 0..self.height {
            for x in 0..self.width {
                let src = (y * self.width + x) * ch;
                let dst = (x * self.height + y) * ch;
                data[dst..dst + ch].copy_from_slice(&self.data[src..src + ch]);
            }
        }
        Image {
            width: self.height,
            height: self.width,
            channels: ch,
            data,
        }
    }
}

fn check_channels(channels: usize) -> Result<()> {
    if channels == 1 || channels == 3 {
        Ok(())
    } else {
        Err(Error::Channels(channels))
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[inline]
fn quantize(v: f64) -> u8 {
    (clamp_unit(v) * 255.0).round() as u8
}

/// Clamps an index into `0..n` by edge replication (half-sample symmetric reflection).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if i < 0 {
        0
    } else if i as usize >= n {
        n - 1
    } else {
        i as usize
    }
}
