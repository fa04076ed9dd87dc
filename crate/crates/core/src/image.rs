//! Rasters and the per-image normalization chain: grayscale, histogram
//! equalization and standardization into a zero-mean, unit-variance vector.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An RGB pixel, each channel in `0..=255`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Rgb(pub [u8; 3]);

/// Row-major raster with `width * height` pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image<P> {
    width: usize,
    height: usize,
    pixels: Vec<P>,
}

pub type GrayImage = Image<u8>;
pub type ColorImage = Image<Rgb>;

impl<P> Image<P> {
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<P>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidRaster { width, height, len: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> P) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
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
    pub fn pixels(&self) -> &[P] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<P> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &P {
        &self.pixels[y * self.width + x]
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> Image<Q> {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(f).collect(),
        }
    }
}

impl<P: Copy> Image<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn set(&mut self, x: usize, y: usize, value: P) {
        self.pixels[y * self.width + x] = value;
    }
}

/// Conversion of a pixel to an 8-bit luma value.
pub trait Luma: Copy {
    fn luma(self) -> u8;
}

impl Luma for u8 {
    #[inline]
    fn luma(self) -> u8 {
        self
    }
}

impl Luma for Rgb {
    /// BT.601 weights, rounded to the nearest level.
    #[inline]
    fn luma(self) -> u8 {
        let [r, g, b] = self.0;
        let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
        libm::round(y).clamp(0.0, 255.0) as u8
    }
}

pub fn to_grayscale<P: Luma>(img: &Image<P>) -> GrayImage {
    img.map(|p| p.luma())
}

/// Cumulative-histogram equalization.
///
/// Level `v` maps to `round(255 * (cdf(v) - cdf_min) / (N - cdf_min))`, where
/// `cdf_min` is the cumulative count at the lowest occupied level. The rounding
/// is done in integer arithmetic (half rounds up) so the result is exact.
/// A constant image has `N == cdf_min` and is returned unchanged.
pub fn equalize_histogram(img: &GrayImage) -> GrayImage {
    let lut = equalization_lut(img.pixels());
    img.map(|&v| lut[usize::from(v)])
}

fn equalization_lut(pixels: &[u8]) -> [u8; 256] {
    let mut hist = [0u64; 256];
    for &v in pixels {
        hist[usize::from(v)] += 1;
    }
    let total = pixels.len() as u64;
    let cdf_min = hist.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let mut lut = [0u8; 256];
    if total == cdf_min {
        for (v, slot) in lut.iter_mut().enumerate() {
            *slot = v as u8;
        }
        return lut;
    }
    let denom = total - cdf_min;
    let mut cdf = 0u64;
    for (v, slot) in lut.iter_mut().enumerate() {
        cdf += hist[v];
        let num = cdf.saturating_sub(cdf_min);
        *slot = ((2 * 255 * num + denom) / (2 * denom)) as u8;
    }
    lut
}

/// A lexicographically flattened, standardized image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVector {
    pub values: Vec<f64>,
    /// Activity class index, when known.
    pub label: Option<usize>,
    /// Position of the sample within its class.
    pub sample: usize,
}

impl ImageVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, label: None, sample: 0 }
    }

    pub fn with_label(mut self, label: usize, sample: usize) -> Self {
        self.label = Some(label);
        self.sample = sample;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Row-major flatten, then subtract the mean and divide by the population
/// standard deviation. A constant image has no spread and yields all zeros.
pub fn standardize(img: &GrayImage) -> ImageVector {
    let values = img.pixels().iter().map(|&v| f64::from(v)).collect();
    ImageVector::new(standardize_values(values))
}

pub(crate) fn standardize_values(mut values: Vec<f64>) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if std <= f64::EPSILON * mean.abs().max(1.0) {
        log::warn!("constant crop: standardized vector set to zero");
        values.iter_mut().for_each(|v| *v = 0.0);
        return values;
    }
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
    values
}
