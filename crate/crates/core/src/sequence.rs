//! Dynamic time warping between feature sequences and 1-NN classification.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Time-ordered `d`-dimensional feature vectors from one clip or window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSequence {
    pub frames: Vec<Vec<f64>>,
    pub label: Option<usize>,
    pub source: String,
}

impl FeatureSequence {
    pub fn new(frames: Vec<Vec<f64>>) -> Self {
        Self { frames, label: None, source: String::new() }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Dimensionality of the first frame, 0 when empty.
    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<usize> {
        let d = self.frames.first().ok_or(Error::Empty("feature sequence"))?.len();
        for f in &self.frames {
            if f.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: f.len() });
            }
        }
        Ok(d)
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    Ok(libm::sqrt(squared_distance(a, b)))
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum accumulated Euclidean cost over monotone alignments of `a` and
/// `b` using unit steps right, down and diagonal.
pub fn dtw_accumulated(a: &FeatureSequence, b: &FeatureSequence) -> Result<f64> {
    let da = a.validate()?;
    let db = b.validate()?;
    if da != db {
        return Err(Error::DimensionMismatch { expected: da, actual: db });
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for x in &a.frames {
        curr[0] = f64::INFINITY;
        for (j, y) in b.frames.iter().enumerate() {
            let cost = libm::sqrt(squared_distance(x, y));
            curr[j + 1] = cost + prev[j].min(prev[j + 1]).min(curr[j]);
        }
        core::mem::swap(&mut prev, &mut curr);
        prev[0] = f64::INFINITY;
    }
    Ok(prev[m])
}

/// Accumulated DTW cost divided by `|a| + |b|`.
pub fn dtw_distance(a: &FeatureSequence, b: &FeatureSequence) -> Result<f64> {
    let total = dtw_accumulated(a, b)?;
    Ok(total / (a.len() + b.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateDistance {
    /// Position of the template in the gallery.
    pub template: usize,
    pub class: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub predicted: usize,
    pub best_template: usize,
    pub best_distance: f64,
    pub distances: Vec<TemplateDistance>,
}

/// First-nearest-neighbor over the gallery under [`dtw_distance`]. The
/// earliest template wins a tie.
pub fn classify_1nn(probe: &FeatureSequence, gallery: &[FeatureSequence]) -> Result<MatchResult> {
    if gallery.is_empty() {
        return Err(Error::Empty("gallery"));
    }
    let mut distances = Vec::with_capacity(gallery.len());
    let mut best: Option<TemplateDistance> = None;
    for (template, g) in gallery.iter().enumerate() {
        let class = g.label.ok_or(Error::InvalidParameter("gallery template without a class"))?;
        let distance = dtw_distance(probe, g)?;
        let td = TemplateDistance { template, class, distance };
        if best.is_none_or(|b| distance < b.distance) {
            best = Some(td);
        }
        distances.push(td);
    }
    let best = best.expect("gallery is non-empty");
    Ok(MatchResult {
        predicted: best.class,
        best_template: best.template,
        best_distance: best.distance,
        distances,
    })
}
