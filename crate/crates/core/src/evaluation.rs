//! Probe windowing, actor-disjoint splits, confusion matrices and the
//! feature-count sweep.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::sequence::{classify_1nn, FeatureSequence};
use crate::subspace::{fit_snapshot, SubspaceModel, TrainingClip, TrainingSet};

/// A window with a run of more empty frames than this is "no subject".
pub const MAX_EMPTY_RUN: usize = 10;

/// Frame rate and probe window length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub fps: f64,
    pub window_sec: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self { fps: 10.0, window_sec: 1.0 }
    }
}

impl Protocol {
    /// Frames per window, `round(fps × window_sec)`.
    pub fn window_len(&self) -> Result<usize> {
        if !(self.fps > 0.0) || !(self.window_sec > 0.0) {
            return Err(Error::InvalidParameter("fps and window length must be positive"));
        }
        let len = libm::round(self.fps * self.window_sec);
        if len < 1.0 {
            return Err(Error::InvalidParameter("window shorter than one frame"));
        }
        Ok(len as usize)
    }
}

/// Consecutive non-overlapping windows over `len` frames. A trailing partial
/// window is kept when it holds at least half a window.
pub fn window_ranges(len: usize, window_len: usize) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(len / window_len.max(1) + 1);
    let mut start = 0;
    while start + window_len <= len {
        out.push(start..start + window_len);
        start += window_len;
    }
    let rest = len - start;
    if rest > 0 && 2 * rest >= window_len {
        out.push(start..len);
    }
    out
}

/// One frame of a probe stream: its features, or `None` when segmentation
/// found no subject, plus the ground-truth class when known.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeFrame {
    pub features: Option<Vec<f64>>,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeWindow {
    /// Frame indices covered, end exclusive.
    pub range: Range<usize>,
    /// Majority ground-truth label; ties go to the label seen first.
    pub label: Option<usize>,
    /// Features of the non-empty frames, `None` for a no-subject window.
    pub sequence: Option<FeatureSequence>,
}

/// Cuts a frame stream into probe windows.
pub fn window_probes(frames: &[ProbeFrame], protocol: &Protocol) -> Result<Vec<ProbeWindow>> {
    if frames.is_empty() {
        return Err(Error::Empty("frame stream"));
    }
    let window_len = protocol.window_len()?;
    Ok(window_ranges(frames.len(), window_len)
        .into_iter()
        .map(|range| {
            let window = &frames[range.clone()];
            let label = majority_label(window.iter().map(|f| f.label));
            let sequence = if has_subject(window) {
                let feats = window.iter().filter_map(|f| f.features.clone()).collect();
                let mut seq = FeatureSequence::new(feats);
                seq.label = label;
                Some(seq)
            } else {
                None
            };
            ProbeWindow { range, label, sequence }
        })
        .collect())
}

fn has_subject(window: &[ProbeFrame]) -> bool {
    let mut run = 0;
    let mut seen = false;
    for f in window {
        if f.features.is_some() {
            seen = true;
            run = 0;
        } else {
            run += 1;
            if run > MAX_EMPTY_RUN {
                return false;
            }
        }
    }
    seen
}

fn majority_label(labels: impl Iterator<Item = Option<usize>>) -> Option<usize> {
    // (label, count) in order of first appearance
    let mut tally: Vec<(usize, usize)> = Vec::new();
    for l in labels.flatten() {
        match tally.iter_mut().find(|(c, _)| *c == l) {
            Some((_, n)) => *n += 1,
            None => tally.push((l, 1)),
        }
    }
    let mut best: Option<(usize, usize)> = None;
    for (l, n) in tally {
        if best.is_none_or(|(_, bn)| n > bn) {
            best = Some((l, n));
        }
    }
    best.map(|(l, _)| l)
}

/// Counts with rows = true class and columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let p = class_names.len();
        Self { class_names, counts: vec![vec![0; p]; p] }
    }

    pub fn from_counts(class_names: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let p = class_names.len();
        if counts.len() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: counts.len() });
        }
        if let Some(row) = counts.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, actual: row.len() });
        }
        Ok(Self { class_names, counts })
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let p = self.class_names.len();
        for c in [truth, predicted] {
            if c >= p {
                return Err(Error::UnknownClass(c));
            }
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Row-normalized percentages; a row without probes is all zero.
    pub fn rates(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Diagonal of [`rates`](Self::rates).
    pub fn per_class_rates(&self) -> Vec<f64> {
        self.rates().iter().enumerate().map(|(i, r)| r[i]).collect()
    }

    /// `trace / total × 100`, zero when nothing was recorded.
    pub fn overall_rate(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            100.0 * self.correct() as f64 / total as f64
        }
    }
}

/// Settings echoed into a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub d: usize,
    pub protocol: Protocol,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub config: ReportConfig,
    /// Windows left unclassified because no subject was visible.
    pub skipped: usize,
}

impl EvaluationReport {
    pub fn overall_rate(&self) -> f64 {
        self.confusion.overall_rate()
    }

    pub fn per_class_rates(&self) -> Vec<f64> {
        self.confusion.per_class_rates()
    }
}

/// Classifies each labeled probe against the model gallery.
pub fn evaluate(probes: &[FeatureSequence], model: &SubspaceModel, config: ReportConfig) -> Result<EvaluationReport> {
    if probes.is_empty() {
        return Err(Error::Empty("probe list"));
    }
    let mut confusion = ConfusionMatrix::new(model.class_names().to_vec());
    for probe in probes {
        let truth = probe.label.ok_or(Error::InvalidParameter("probe without ground truth"))?;
        if truth >= model.class_names().len() {
            return Err(Error::UnknownClass(truth));
        }
        let m = classify_1nn(probe, model.gallery())?;
        confusion.record(truth, m.predicted)?;
    }
    Ok(EvaluationReport { confusion, config, skipped: 0 })
}

/// A labeled clip whose frames are already normalized image vectors; `None`
/// marks a frame without a visible subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityClip {
    pub actor: String,
    pub class: usize,
    pub source: String,
    pub frames: Vec<Option<Vec<f64>>>,
}

impl ActivityClip {
    fn probe_frames(&self, map: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<ProbeFrame>> {
        self.frames
            .iter()
            .map(|f| {
                Ok(ProbeFrame {
                    features: f.as_deref().map(&map).transpose()?,
                    label: Some(self.class),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityDataset {
    pub class_names: Vec<String>,
    pub clips: Vec<ActivityClip>,
}

impl ActivityDataset {
    pub fn actors(&self) -> BTreeSet<&str> {
        self.clips.iter().map(|c| c.actor.as_str()).collect()
    }
}

/// Splits clips so that training and test actors never overlap.
pub fn split_by_actor<'a>(
    dataset: &'a ActivityDataset,
    train_actors: &[String],
) -> Result<(Vec<&'a ActivityClip>, Vec<&'a ActivityClip>)> {
    let actors = dataset.actors();
    let train: BTreeSet<&str> = train_actors.iter().map(String::as_str).collect();
    if train.is_empty() {
        return Err(Error::InvalidSplit("no training actors given".into()));
    }
    if let Some(unknown) = train.iter().find(|a| !actors.contains(*a)) {
        return Err(Error::InvalidSplit(format!("unknown actor {unknown:?}")));
    }
    if train.len() == actors.len() {
        return Err(Error::InvalidSplit("training actors cover every actor, nothing left to test".into()));
    }
    Ok(dataset.clips.iter().partition(|c| train.contains(c.actor.as_str())))
}

/// Cuts training clips into probe-length windows and collects them as a
/// training set. Each window becomes one gallery template.
pub fn training_set(class_names: &[String], clips: &[&ActivityClip], protocol: &Protocol) -> Result<TrainingSet> {
    let mut out = Vec::new();
    for clip in clips {
        if clip.frames.is_empty() {
            continue;
        }
        let frames = clip.probe_frames(|f| Ok(f.to_vec()))?;
        for w in window_probes(&frames, protocol)? {
            if let Some(seq) = w.sequence {
                out.push(TrainingClip {
                    class: clip.class,
                    source: format!("{}#{}", clip.source, w.range.start),
                    frames: seq.frames,
                });
            }
        }
    }
    TrainingSet::new(class_names.to_vec(), out)
}

/// Actor-disjoint split into a training set and the held-out clips.
pub fn partition_by_actor<'a>(
    dataset: &'a ActivityDataset,
    train_actors: &[String],
    protocol: &Protocol,
) -> Result<(TrainingSet, Vec<&'a ActivityClip>)> {
    let (train, test) = split_by_actor(dataset, train_actors)?;
    Ok((training_set(&dataset.class_names, &train, protocol)?, test))
}

/// Projects, windows and classifies every held-out clip.
pub fn evaluate_clips(
    model: &SubspaceModel,
    clips: &[&ActivityClip],
    protocol: &Protocol,
    seed: Option<u64>,
) -> Result<EvaluationReport> {
    let mut probes = Vec::new();
    let mut skipped = 0;
    for clip in clips {
        if clip.frames.is_empty() {
            continue;
        }
        let frames = clip.probe_frames(|f| model.project(f))?;
        for w in window_probes(&frames, protocol)? {
            match w.sequence {
                Some(seq) => probes.push(seq.with_source(format!("{}#{}", clip.source, w.range.start))),
                None => skipped += 1,
            }
        }
    }
    let config = ReportConfig { d: model.d(), protocol: *protocol, seed };
    let mut report = evaluate(&probes, model, config)?;
    report.skipped = skipped;
    Ok(report)
}

/// Trains and evaluates once per feature count, reports in ascending `d`.
///
/// The eigendecomposition does not depend on `d`, so it is computed once and
/// truncated for each entry.
pub fn feature_sweep(
    dataset: &ActivityDataset,
    train_actors: &[String],
    d_values: &[usize],
    protocol: &Protocol,
) -> Result<Vec<EvaluationReport>> {
    if d_values.is_empty() {
        return Err(Error::Empty("feature count list"));
    }
    let (ts, test) = partition_by_actor(dataset, train_actors, protocol)?;
    let fit = fit_snapshot(&ts)?;
    let mut ds: Vec<usize> = d_values.to_vec();
    ds.sort_unstable();
    ds.into_iter()
        .map(|d| {
            let model = SubspaceModel::from_fit(&fit, d, &ts)?;
            evaluate_clips(&model, &test, protocol, None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn window_arithmetic() {
        let p = Protocol::default();
        let w = p.window_len().unwrap();
        assert_eq!(w, 10);
        let r = window_ranges(5000, w);
        assert_eq!(r.len(), 500);
        assert!(r.iter().all(|r| r.len() == 10));
        let r = window_ranges(25, w);
        assert_eq!(r, vec![0..10, 10..20, 20..25]);
        assert!(window_ranges(3, w).is_empty());
        assert!(Protocol { fps: 0.0, window_sec: 1.0 }.window_len().is_err());
        assert!(Protocol { fps: 10.0, window_sec: 0.01 }.window_len().is_err());
    }

    #[test]
    fn probe_windows_and_no_subject() {
        let frame = |f: Option<f64>, l| ProbeFrame { features: f.map(|v| vec![v]), label: Some(l) };
        assert_eq!(window_probes(&[], &Protocol::default()), Err(Error::Empty("frame stream")));

        let mut frames: Vec<_> = (0..10).map(|i| frame(Some(i as f64), 0)).collect();
        frames.extend((0..10).map(|_| frame(None, 1)));
        let w = window_probes(&frames, &Protocol::default()).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].sequence.as_ref().unwrap().len(), 10);
        assert!(w[1].sequence.is_none());

        // 11 empty frames in a row inside a 2-second window
        let mut long: Vec<_> = (0..11).map(|_| frame(None, 0)).collect();
        long.extend((0..9).map(|_| frame(Some(1.0), 0)));
        let p = Protocol { fps: 10.0, window_sec: 2.0 };
        assert!(window_probes(&long, &p).unwrap()[0].sequence.is_none());
        long.remove(0);
        long.push(frame(Some(1.0), 0));
        assert_eq!(window_probes(&long, &p).unwrap()[0].sequence.as_ref().unwrap().len(), 10);
    }

    #[test]
    fn majority_ties_go_to_earlier_label() {
        assert_eq!(majority_label([Some(2), Some(1), Some(1), Some(2)].into_iter()), Some(2));
        assert_eq!(majority_label([Some(2), Some(1), Some(1)].into_iter()), Some(1));
        assert_eq!(majority_label([None, None].into_iter()), None);
    }

    #[test]
    fn confusion_hand_count() {
        let mut cm = ConfusionMatrix::new(names(2));
        cm.record(0, 0).unwrap();
        cm.record(1, 0).unwrap();
        assert_eq!(cm.rates(), vec![vec![100.0, 0.0], vec![100.0, 0.0]]);
        assert_eq!(cm.overall_rate(), 50.0);
        assert_eq!(cm.per_class_rates(), vec![100.0, 0.0]);
        assert_eq!(cm.record(2, 0), Err(Error::UnknownClass(2)));
    }

    #[test]
    fn confusion_perfect() {
        let mut cm = ConfusionMatrix::new(names(3));
        for c in 0..3 {
            for _ in 0..=c {
                cm.record(c, c).unwrap();
            }
        }
        let rates = cm.rates();
        for (i, row) in rates.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 100.0 } else { 0.0 });
            }
        }
        assert_eq!(cm.overall_rate(), 100.0);
    }

    fn clip(actor: &str, class: usize) -> ActivityClip {
        ActivityClip { actor: actor.to_string(), class, source: actor.to_string(), frames: vec![Some(vec![class as f64, 1.0])] }
    }

    #[test]
    fn actor_split() {
        let ds = ActivityDataset { class_names: names(1), clips: vec![clip("A", 0), clip("B", 0), clip("A", 0)] };
        let (train, test) = split_by_actor(&ds, &["A".to_string()]).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(test.len(), 1);
        assert_eq!(test[0].actor, "B");
        assert!(split_by_actor(&ds, &["A".to_string(), "B".to_string()]).is_err());
        assert!(split_by_actor(&ds, &[]).is_err());
        assert!(split_by_actor(&ds, &["Z".to_string()]).is_err());
    }

    #[test]
    fn nine_actor_split() {
        let actors: Vec<String> = (1..=9).map(|i| format!("actor{i}")).collect();
        let ds = ActivityDataset {
            class_names: names(10),
            clips: actors.iter().flat_map(|a| (0..10).map(move |c| clip(a, c))).collect(),
        };
        let (train, test) = split_by_actor(&ds, &actors[..4]).unwrap();
        let train_actors: BTreeSet<_> = train.iter().map(|c| c.actor.as_str()).collect();
        let test_actors: BTreeSet<_> = test.iter().map(|c| c.actor.as_str()).collect();
        assert_eq!((train_actors.len(), test_actors.len()), (4, 5));
        assert!(train_actors.is_disjoint(&test_actors));
        assert_eq!(train.len() + test.len(), ds.clips.len());
    }
}
