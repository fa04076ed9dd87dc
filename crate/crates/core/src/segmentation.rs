//! Foreground silhouettes and the centroid-anchored crop.
//!
//! The background is modeled per pixel by the temporal median of a set of
//! subject-free frames, with the median absolute deviation (scaled to a
//! Gaussian-consistent sigma) as the noise scale. A pixel is foreground when
//! it departs from the median by more than `k` noise scales; one pass of 3×3
//! majority voting then removes isolated flips.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{equalize_histogram, standardize, to_grayscale, GrayImage, Image, ImageVector, Luma};
use crate::{CROP_HEIGHT, CROP_WIDTH};

/// Scales a median absolute deviation to a standard deviation under
/// Gaussian noise.
pub const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    /// Threshold multiplier on the per-pixel deviation.
    pub k: f64,
    /// Lower bound on the per-pixel deviation, in intensity levels.
    pub deviation_floor: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self { k: 3.0, deviation_floor: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    width: usize,
    height: usize,
    reference: Vec<f64>,
    deviation: Vec<f64>,
}

impl BackgroundModel {
    /// Temporal median and floored MAD deviation over `frames`.
    pub fn build(frames: &[GrayImage], deviation_floor: f64) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("background frame list"))?;
        let (width, height) = (first.width(), first.height());
        for f in frames {
            if f.width() != width || f.height() != height {
                return Err(Error::DimensionMismatch {
                    expected: width * height,
                    actual: f.width() * f.height(),
                });
            }
        }
        if !(deviation_floor > 0.0) {
            return Err(Error::InvalidParameter("deviation floor must be positive"));
        }
        let len = width * height;
        let mut reference = Vec::with_capacity(len);
        let mut deviation = Vec::with_capacity(len);
        let mut column = Vec::with_capacity(frames.len());
        for idx in 0..len {
            column.clear();
            column.extend(frames.iter().map(|f| f64::from(f.pixels()[idx])));
            let med = median(&mut column);
            column.iter_mut().for_each(|v| *v = (*v - med).abs());
            let mad = median(&mut column);
            reference.push(med);
            deviation.push((MAD_TO_SIGMA * mad).max(deviation_floor));
        }
        Ok(Self { width, height, reference, deviation })
    }

    /// Rebuilds a model from stored per-pixel values.
    pub fn from_parts(width: usize, height: usize, reference: Vec<f64>, deviation: Vec<f64>) -> Result<Self> {
        let len = width * height;
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster { width, height, len: reference.len() });
        }
        for part in [&reference, &deviation] {
            if part.len() != len {
                return Err(Error::DimensionMismatch { expected: len, actual: part.len() });
            }
        }
        Ok(Self { width, height, reference, deviation })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn deviation(&self) -> &[f64] {
        &self.deviation
    }

    fn check_frame<P>(&self, frame: &Image<P>) -> Result<()> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::DimensionMismatch {
                expected: self.width * self.height,
                actual: frame.width() * frame.height(),
            });
        }
        Ok(())
    }

    /// Raw threshold decision, before smoothing.
    pub fn threshold(&self, frame: &GrayImage, k: f64) -> Result<SilhouetteMap> {
        self.check_frame(frame)?;
        let mask = frame
            .pixels()
            .iter()
            .zip(self.reference.iter().zip(&self.deviation))
            .map(|(&v, (&r, &dev))| (f64::from(v) - r).abs() > k * dev)
            .collect();
        Ok(SilhouetteMap { width: self.width, height: self.height, mask })
    }

    /// Thresholded and majority-smoothed silhouette of `frame`.
    pub fn extract_silhouette(&self, frame: &GrayImage, k: f64) -> Result<SilhouetteMap> {
        Ok(self.threshold(frame, k)?.majority_smoothed())
    }
}

// Median of a non-empty slice; the mean of the two middle values for even
// lengths. Reorders the slice.
fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Binary foreground mask, row-major, `true` for foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SilhouetteMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl SilhouetteMap {
    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || mask.len() != width * height {
            return Err(Error::InvalidRaster { width, height, len: mask.len() });
        }
        Ok(Self { width, height, mask })
    }

    /// Foreground wherever the gray level is nonzero.
    pub fn from_binary_image(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            mask: img.pixels().iter().map(|&v| v != 0).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// One pass of 3×3 majority voting: a pixel flips when at least five of
    /// its in-frame neighbors disagree with it.
    pub fn majority_smoothed(&self) -> SilhouetteMap {
        let (w, h) = (self.width, self.height);
        let mut out = self.mask.clone();
        for y in 0..h {
            for x in 0..w {
                let here = self.is_foreground(x, y);
                let mut disagree = 0;
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        if (nx, ny) != (x, y) && self.is_foreground(nx, ny) != here {
                            disagree += 1;
                        }
                    }
                }
                if disagree >= 5 {
                    out[y * w + x] = !here;
                }
            }
        }
        SilhouetteMap { width: w, height: h, mask: out }
    }

    /// Extreme foreground coordinates along each axis.
    pub fn bounding_extremes(&self) -> Result<BoundingExtremes> {
        let mut ext: Option<BoundingExtremes> = None;
        for (idx, _) in self.mask.iter().enumerate().filter(|(_, &m)| m) {
            let (x, y) = (idx % self.width, idx / self.width);
            let e = ext.get_or_insert(BoundingExtremes { a1: x, a2: x, b1: y, b2: y });
            e.a1 = e.a1.min(x);
            e.a2 = e.a2.max(x);
            e.b1 = e.b1.min(y);
            e.b2 = e.b2.max(y);
        }
        ext.ok_or(Error::NoForeground)
    }
}

/// Extreme foreground coordinates: `a1..=a2` along x, `b1..=b2` along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingExtremes {
    pub a1: usize,
    pub a2: usize,
    pub b1: usize,
    pub b2: usize,
}

impl BoundingExtremes {
    /// Midpoint of the extremes.
    pub fn centroid(&self) -> Centroid {
        Centroid {
            a: (self.a1 + self.a2) as f64 / 2.0,
            b: (self.b1 + self.b2) as f64 / 2.0,
        }
    }
}

/// Subject anchor point; `a` is the x coordinate, `b` the y coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub a: f64,
    pub b: f64,
}

/// Cuts a `crop_h × crop_w` window centered on the rounded centroid.
///
/// Half-integer coordinates round up. A window that crosses the frame border
/// is shifted inward until it fits; along an axis where the frame is shorter
/// than the window, the whole frame is placed in the middle of the window and
/// the remainder padded with `P::default()` (black).
pub fn crop_window<P: Copy + Default>(frame: &Image<P>, c: Centroid, crop_h: usize, crop_w: usize) -> Image<P> {
    let cx = libm::floor(c.a + 0.5) as i64;
    let cy = libm::floor(c.b + 0.5) as i64;
    let rows = axis_window(cy, crop_h, frame.height());
    let cols = axis_window(cx, crop_w, frame.width());
    Image::from_fn(crop_w, crop_h, |x, y| match (rows.source(y), cols.source(x)) {
        (Some(sy), Some(sx)) => *frame.get(sx, sy),
        _ => P::default(),
    })
}

#[derive(Debug, Clone, Copy)]
enum AxisWindow {
    /// Output index `i` reads frame index `start + i`.
    Inside { start: usize },
    /// Output index `i` reads frame index `i - offset` when in range.
    Padded { offset: usize, len: usize },
}

impl AxisWindow {
    fn source(self, i: usize) -> Option<usize> {
        match self {
            AxisWindow::Inside { start } => Some(start + i),
            AxisWindow::Padded { offset, len } => i.checked_sub(offset).filter(|&s| s < len),
        }
    }
}

fn axis_window(center: i64, size: usize, len: usize) -> AxisWindow {
    if len < size {
        return AxisWindow::Padded { offset: (size - len) / 2, len };
    }
    let start = center - (size / 2) as i64;
    let start = start.clamp(0, (len - size) as i64) as usize;
    AxisWindow::Inside { start }
}

/// Full per-frame normalization: extremes, centroid, 140×130 crop,
/// grayscale, equalization and standardization.
pub fn normalize_frame<P: Luma + Default>(frame: &Image<P>, silhouette: &SilhouetteMap) -> Result<ImageVector> {
    if frame.width() != silhouette.width() || frame.height() != silhouette.height() {
        return Err(Error::DimensionMismatch {
            expected: silhouette.width() * silhouette.height(),
            actual: frame.width() * frame.height(),
        });
    }
    let centroid = silhouette.bounding_extremes()?.centroid();
    let crop = crop_window(frame, centroid, CROP_HEIGHT, CROP_WIDTH);
    Ok(standardize(&equalize_histogram(&to_grayscale(&crop))))
}

/// Segments `frame` against `model` and normalizes it.
pub fn segment_and_normalize<P: Luma + Default>(
    frame: &Image<P>,
    model: &BackgroundModel,
    k: f64,
) -> Result<ImageVector> {
    let silhouette = model.extract_silhouette(&to_grayscale(frame), k)?;
    normalize_frame(frame, &silhouette)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rgb;
    use alloc::vec;
    use proptest::prelude::*;

    fn mask_from(w: usize, h: usize, on: impl Fn(usize, usize) -> bool) -> SilhouetteMap {
        let mut mask = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                mask[y * w + x] = on(x, y);
            }
        }
        SilhouetteMap::from_mask(w, h, mask).unwrap()
    }

    #[test]
    fn identical_frames_give_floor_deviation() {
        let f = GrayImage::from_fn(4, 3, |x, y| (x * 10 + y) as u8);
        let model = BackgroundModel::build(&[f.clone(), f.clone(), f.clone()], 2.0).unwrap();
        for (r, v) in model.reference().iter().zip(f.pixels()) {
            assert_eq!(*r, f64::from(*v));
        }
        assert!(model.deviation().iter().all(|&d| d == 2.0));
    }

    #[test]
    fn median_ignores_outlier() {
        let frames: Vec<_> = [10u8, 10, 200].iter().map(|&v| GrayImage::filled(2, 2, v)).collect();
        let model = BackgroundModel::build(&frames, 2.0).unwrap();
        assert!(model.reference().iter().all(|&r| r == 10.0));
    }

    #[test]
    fn background_errors() {
        assert_eq!(BackgroundModel::build(&[], 2.0), Err(Error::Empty("background frame list")));
        let frames = [GrayImage::filled(2, 2, 0), GrayImage::filled(3, 2, 0)];
        assert!(matches!(BackgroundModel::build(&frames, 2.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn even_count_median_averages_middle() {
        let frames: Vec<_> = [1u8, 3, 9, 5].iter().map(|&v| GrayImage::filled(1, 1, v)).collect();
        let model = BackgroundModel::build(&frames, 0.5).unwrap();
        assert_eq!(model.reference(), &[4.0]);
        // |x - 4| = {3, 1, 5, 1} -> median 2
        assert_eq!(model.deviation(), &[2.0 * MAD_TO_SIGMA]);
    }

    #[test]
    fn frame_equal_to_reference_is_background() {
        let f = GrayImage::from_fn(20, 20, |x, y| ((x * 7 + y * 3) % 256) as u8);
        let model = BackgroundModel::build(&[f.clone()], 2.0).unwrap();
        assert_eq!(model.extract_silhouette(&f, 3.0).unwrap().foreground_count(), 0);
    }

    #[test]
    fn bright_square_is_recovered() {
        let bg = GrayImage::filled(40, 30, 50);
        let model = BackgroundModel::build(&[bg.clone()], 2.0).unwrap();
        let inside = |x: usize, y: usize| (12..22).contains(&x) && (8..18).contains(&y);
        let frame = GrayImage::from_fn(40, 30, |x, y| if inside(x, y) { 220 } else { 50 });
        let sil = model.extract_silhouette(&frame, 3.0).unwrap();
        for y in 0..30 {
            for x in 0..40 {
                let corner = (x == 12 || x == 21) && (y == 8 || y == 17);
                // majority voting trims only the four square corners
                assert_eq!(sil.is_foreground(x, y), inside(x, y) && !corner, "({x},{y})");
            }
        }
        assert_eq!(sil.bounding_extremes().unwrap(), BoundingExtremes { a1: 12, a2: 21, b1: 8, b2: 17 });
    }

    #[test]
    fn isolated_pixel_removed_by_smoothing() {
        let m = mask_from(5, 5, |x, y| x == 2 && y == 2);
        assert_eq!(m.majority_smoothed().foreground_count(), 0);
        let hole = mask_from(5, 5, |x, y| !(x == 2 && y == 2));
        assert_eq!(hole.majority_smoothed().foreground_count(), 25);
    }

    #[test]
    fn extremes_examples() {
        let single = mask_from(12, 8, |x, y| x == 7 && y == 3);
        assert_eq!(single.bounding_extremes().unwrap(), BoundingExtremes { a1: 7, a2: 7, b1: 3, b2: 3 });
        let rect = mask_from(16, 12, |x, y| (4..=10).contains(&x) && (2..=8).contains(&y));
        assert_eq!(rect.bounding_extremes().unwrap(), BoundingExtremes { a1: 4, a2: 10, b1: 2, b2: 8 });
        let blobs = mask_from(30, 5, |x, y| y == 2 && (x <= 2 || (20..=22).contains(&x)));
        let e = blobs.bounding_extremes().unwrap();
        assert_eq!((e.a1, e.a2), (0, 22));
        assert_eq!(mask_from(4, 4, |_, _| false).bounding_extremes(), Err(Error::NoForeground));
    }

    #[test]
    fn centroid_examples() {
        let c = BoundingExtremes { a1: 10, a2: 20, b1: 5, b2: 15 }.centroid();
        assert_eq!((c.a, c.b), (15.0, 10.0));
        let c = BoundingExtremes { a1: 7, a2: 7, b1: 3, b2: 3 }.centroid();
        assert_eq!((c.a, c.b), (7.0, 3.0));
        let c = BoundingExtremes { a1: 0, a2: 319, b1: 0, b2: 239 }.centroid();
        assert_eq!((c.a, c.b), (159.5, 119.5));
    }

    // Frame pixel value encodes its coordinates so crops reveal their origin.
    fn coord_frame(w: usize, h: usize) -> Image<(u16, u16)> {
        Image::from_fn(w, h, |x, y| (x as u16 + 1, y as u16 + 1))
    }

    #[test]
    fn crop_at_frame_center() {
        let frame = coord_frame(320, 240);
        let crop = crop_window(&frame, Centroid { a: 159.5, b: 119.5 }, 140, 130);
        assert_eq!((crop.width(), crop.height()), (130, 140));
        assert_eq!(*crop.get(0, 0), (95 + 1, 50 + 1));
        assert_eq!(*crop.get(129, 139), (224 + 1, 189 + 1));
    }

    #[test]
    fn crop_clamps_at_corner() {
        let frame = coord_frame(320, 240);
        let crop = crop_window(&frame, Centroid { a: 0.0, b: 0.0 }, 140, 130);
        assert_eq!(*crop.get(0, 0), (1, 1));
        assert_eq!(*crop.get(129, 139), (130, 140));
        let crop = crop_window(&frame, Centroid { a: 319.0, b: 239.0 }, 140, 130);
        assert_eq!(*crop.get(129, 139), (320, 240));
    }

    #[test]
    fn small_frame_is_padded_centered() {
        let frame = coord_frame(100, 100);
        let crop = crop_window(&frame, Centroid { a: 50.0, b: 50.0 }, 140, 130);
        assert_eq!(*crop.get(0, 0), (0, 0));
        assert_eq!(*crop.get(15, 20), (1, 1));
        assert_eq!(*crop.get(114, 119), (100, 100));
        assert_eq!(*crop.get(115, 120), (0, 0));
    }

    fn blob_frame() -> (Image<Rgb>, SilhouetteMap) {
        let inside = |x: usize, y: usize| (100..150).contains(&x) && (60..170).contains(&y);
        let frame = Image::from_fn(320, 240, |x, y| {
            if inside(x, y) {
                Rgb([200, (x * 5 % 256) as u8, (y * 3 % 256) as u8])
            } else {
                Rgb([((x * 13 + y * 7) % 97) as u8, 40, 60])
            }
        });
        let sil = mask_from(320, 240, inside);
        (frame, sil)
    }

    #[test]
    fn normalize_frame_postconditions_and_translation() {
        let (frame, sil) = blob_frame();
        let v = normalize_frame(&frame, &sil).unwrap();
        assert_eq!(v.len(), 18200);
        let n = v.len() as f64;
        let mean = v.values.iter().sum::<f64>() / n;
        let std = (v.values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9);

        // Background texture is not translation-periodic, so translate the
        // whole scene and compare.
        let shifted_frame = Image::from_fn(320, 240, |x, y| if x >= 40 { *frame.get(x - 40, y) } else { Rgb([0, 0, 0]) });
        let shifted_sil = mask_from(320, 240, |x, y| x >= 40 && sil.is_foreground(x - 40, y));
        let w = normalize_frame(&shifted_frame, &shifted_sil).unwrap();
        for (a, b) in v.values.iter().zip(&w.values) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn normalize_empty_silhouette() {
        let (frame, _) = blob_frame();
        let empty = mask_from(320, 240, |_, _| false);
        assert_eq!(normalize_frame(&frame, &empty), Err(Error::NoForeground));
    }

    proptest! {
        #[test]
        fn threshold_monotone_in_k(
            bg in proptest::collection::vec(any::<u8>(), 64),
            frame in proptest::collection::vec(any::<u8>(), 64),
            k1 in 0.0f64..5.0,
            dk in 0.0f64..5.0,
        ) {
            let model = BackgroundModel::build(&[GrayImage::from_pixels(8, 8, bg).unwrap()], 2.0).unwrap();
            let f = GrayImage::from_pixels(8, 8, frame).unwrap();
            let lo = model.threshold(&f, k1).unwrap();
            let hi = model.threshold(&f, k1 + dk).unwrap();
            for (a, b) in lo.mask().iter().zip(hi.mask()) {
                prop_assert!(!*b || *a);
            }
        }

        #[test]
        fn background_permutation_invariant(
            frames in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 9), 1..7),
            rot in 0usize..7,
        ) {
            let imgs: Vec<_> = frames.iter().map(|p| GrayImage::from_pixels(3, 3, p.clone()).unwrap()).collect();
            let mut perm = imgs.clone();
            perm.rotate_left(rot % imgs.len());
            perm.reverse();
            prop_assert_eq!(BackgroundModel::build(&imgs, 2.0).unwrap(), BackgroundModel::build(&perm, 2.0).unwrap());
        }

        #[test]
        fn centroid_inside_bounding_box(cells in proptest::collection::vec(any::<bool>(), 1..200), w in 1usize..20) {
            let h = cells.len().div_ceil(w);
            let mut mask = cells.clone();
            mask.resize(w * h, false);
            let sil = SilhouetteMap::from_mask(w, h, mask).unwrap();
            if let Ok(e) = sil.bounding_extremes() {
                let c = e.centroid();
                prop_assert!(c.a >= e.a1 as f64 && c.a <= e.a2 as f64);
                prop_assert!(c.b >= e.b1 as f64 && c.b <= e.b2 as f64);
            }
        }
    }
}
