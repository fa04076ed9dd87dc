//! The train, classify and evaluate commands, operating on files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::thread;

use actrec_core::evaluation::{evaluate_clips, training_set, window_probes, ActivityClip, ActivityDataset, ProbeFrame};
use actrec_core::segmentation::normalize_frame;
use actrec_core::sequence::classify_1nn;
use actrec_core::subspace::train;
use actrec_core::{
    BackgroundModel, EvaluationReport, Protocol, SegmentationParams, SilhouetteMap, CROP_HEIGHT, CROP_WIDTH, VECTOR_LEN,
};
use log::{debug, info};

use crate::dataset::{list_frames, silhouettes_for, DatasetError, DatasetManifest};
use crate::model_file::{ModelFile, ModelFileError, TrainConfig};
use crate::pnm::{self, AnyImage, ReadError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error("{context}: {source}")]
    Core { context: String, source: actrec_core::Error },
    #[error("{0}")]
    Usage(String),
}

fn core<T>(context: impl Into<String>, r: actrec_core::Result<T>) -> Result<T, PipelineError> {
    r.map_err(|source| PipelineError::Core { context: context.into(), source })
}

/// Applies `f` to every item on all available cores, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Builds the background model from subject-free frames.
pub fn load_background(paths: &[PathBuf], params: &SegmentationParams) -> Result<BackgroundModel, PipelineError> {
    let frames = paths.iter().map(|p| Ok(pnm::read(p)?.to_gray())).collect::<Result<Vec<_>, ReadError>>()?;
    core("background model", BackgroundModel::build(&frames, params.deviation_floor))
}

fn normalize_image(img: &AnyImage, silhouette: &SilhouetteMap) -> actrec_core::Result<Vec<f64>> {
    let v = match img {
        AnyImage::Gray(g) => normalize_frame(g, silhouette)?,
        AnyImage::Color(c) => normalize_frame(c, silhouette)?,
    };
    Ok(v.values)
}

/// Normalized image vector for one frame file, or `None` when no subject is
/// visible. A precomputed mask takes the place of background subtraction.
pub fn normalize_file(
    frame: &Path,
    mask: Option<&Path>,
    background: &BackgroundModel,
    k: f64,
) -> Result<Option<Vec<f64>>, PipelineError> {
    let img = pnm::read(frame)?;
    let silhouette = match mask {
        Some(m) => SilhouetteMap::from_binary_image(&pnm::read(m)?.to_gray()),
        None => core(frame.display().to_string(), background.extract_silhouette(&img.to_gray(), k))?,
    };
    match normalize_image(&img, &silhouette) {
        Ok(v) => Ok(Some(v)),
        Err(actrec_core::Error::NoForeground) => {
            debug!("{}: no foreground", frame.display());
            Ok(None)
        }
        Err(e) => Err(PipelineError::Core { context: frame.display().to_string(), source: e }),
    }
}

/// Normalizes a frame sequence in parallel.
pub fn normalize_frames(
    frames: &[PathBuf],
    masks: Option<&[PathBuf]>,
    background: &BackgroundModel,
    k: f64,
) -> Result<Vec<Option<Vec<f64>>>, PipelineError> {
    let jobs: Vec<(usize, &PathBuf)> = frames.iter().enumerate().collect();
    par_map(&jobs, |&(i, f)| normalize_file(f, masks.map(|m| m[i].as_path()), background, k)).into_iter().collect()
}

/// Normalizes every clip of the manifest whose actor passes `keep`.
pub fn load_dataset(
    manifest: &DatasetManifest,
    background: &BackgroundModel,
    k: f64,
    keep: impl Fn(&str) -> bool,
) -> Result<ActivityDataset, PipelineError> {
    let class_names = manifest.activities();
    let mut clips = Vec::new();
    for entry in manifest.clips.iter().filter(|c| keep(&c.actor)) {
        let class = class_names.iter().position(|n| *n == entry.activity).expect("activity listed");
        let frames = normalize_frames(&entry.frames, entry.silhouettes.as_deref(), background, k)?;
        let empty = frames.iter().filter(|f| f.is_none()).count();
        info!("{}: {} frames, {} without subject", entry.id(), frames.len(), empty);
        clips.push(ActivityClip { actor: entry.actor.clone(), class, source: entry.id(), frames });
    }
    Ok(ActivityDataset { class_names, clips })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub d: usize,
    /// Actors whose clips are used; empty means every actor.
    pub train_actors: Vec<String>,
    pub protocol: Protocol,
    pub segmentation: SegmentationParams,
    pub seed: Option<u64>,
}

pub fn cmd_train(manifest: &DatasetManifest, opts: &TrainOptions) -> Result<ModelFile, PipelineError> {
    let known = manifest.actors();
    let mut train_actors = if opts.train_actors.is_empty() { known.clone() } else { opts.train_actors.clone() };
    train_actors.sort();
    train_actors.dedup();
    if let Some(a) = train_actors.iter().find(|a| !known.contains(a)) {
        return Err(PipelineError::Usage(format!("unknown training actor {a:?}; dataset has {}", known.join(","))));
    }
    let background = load_background(&manifest.background, &opts.segmentation)?;
    let chosen: BTreeSet<&str> = train_actors.iter().map(String::as_str).collect();
    let dataset = load_dataset(manifest, &background, opts.segmentation.k, |a| chosen.contains(a))?;
    let clips: Vec<&ActivityClip> = dataset.clips.iter().collect();
    let ts = core("training set", training_set(&dataset.class_names, &clips, &opts.protocol))?;
    info!("training on {} templates, {} frames", ts.clips().len(), ts.sample_count());
    let subspace = core("subspace", train(&ts, opts.d))?;
    Ok(ModelFile {
        crop_height: CROP_HEIGHT,
        crop_width: CROP_WIDTH,
        config: TrainConfig {
            protocol: opts.protocol,
            segmentation: opts.segmentation,
            seed: opts.seed,
            train_actors,
        },
        subspace,
        background,
    })
}

/// Classification of one window of an unlabeled frame stream.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    /// `None` for a window without a visible subject.
    pub label: Option<String>,
    pub distance: Option<f64>,
}

impl WindowResult {
    pub fn to_line(&self) -> String {
        match (&self.label, self.distance) {
            (Some(l), Some(d)) => format!("{}\t{}\t{}\t{}", self.start, self.end, l, d),
            _ => format!("{}\t{}\tno_subject\t-", self.start, self.end),
        }
    }
}

pub fn cmd_classify(model: &ModelFile, frames_dir: &Path, protocol: &Protocol) -> Result<Vec<WindowResult>, PipelineError> {
    let sub = &model.subspace;
    if sub.n() != VECTOR_LEN || model.crop_height * model.crop_width != VECTOR_LEN {
        return Err(PipelineError::Usage(format!(
            "model vector length {} does not match the {CROP_HEIGHT}×{CROP_WIDTH} crop",
            sub.n()
        )));
    }
    let paths = list_frames(frames_dir)?;
    if paths.is_empty() {
        return Err(DatasetError::EmptyDir(frames_dir.to_path_buf()).into());
    }
    let bg = &model.background;
    for p in &paths {
        let img = pnm::read(p)?;
        if (img.width(), img.height()) != (bg.width(), bg.height()) {
            return Err(PipelineError::Usage(format!(
                "{}: frame is {}×{}, model background is {}×{}",
                p.display(),
                img.width(),
                img.height(),
                bg.width(),
                bg.height()
            )));
        }
    }
    let masks = silhouettes_for(frames_dir, paths.len())?;
    let normalized = normalize_frames(&paths, masks.as_deref(), bg, model.config.segmentation.k)?;
    let frames = normalized
        .into_iter()
        .map(|f| Ok(ProbeFrame { features: f.map(|v| sub.project(&v)).transpose()?, label: None }))
        .collect::<actrec_core::Result<Vec<_>>>();
    let frames = core("projection", frames)?;
    let windows = core("windowing", window_probes(&frames, protocol))?;
    windows
        .into_iter()
        .map(|w| {
            let (label, distance) = match &w.sequence {
                Some(seq) => {
                    let m = core("matching", classify_1nn(seq, sub.gallery()))?;
                    (Some(sub.class_names()[m.predicted].clone()), Some(m.best_distance))
                }
                None => (None, None),
            };
            Ok(WindowResult { start: w.range.start, end: w.range.end - 1, label, distance })
        })
        .collect()
}

/// Evaluates `model` on the clips of `test_actors`, or on every actor the
/// model was not trained on when the list is empty.
pub fn cmd_evaluate(
    model: &ModelFile,
    manifest: &DatasetManifest,
    test_actors: &[String],
    protocol: &Protocol,
    seed: Option<u64>,
) -> Result<EvaluationReport, PipelineError> {
    let trained = &model.config.train_actors;
    let known = manifest.actors();
    let test: Vec<String> = if test_actors.is_empty() {
        known.iter().filter(|a| !trained.contains(a)).cloned().collect()
    } else {
        test_actors.to_vec()
    };
    if let Some(a) = test.iter().find(|a| trained.contains(a)) {
        return Err(PipelineError::Usage(format!("actor {a:?} was used for training and cannot be tested")));
    }
    if let Some(a) = test.iter().find(|a| !known.contains(a)) {
        return Err(PipelineError::Usage(format!("unknown test actor {a:?}")));
    }
    if test.is_empty() {
        return Err(PipelineError::Usage("no held-out actors to evaluate".into()));
    }
    if manifest.activities() != model.subspace.class_names() {
        return Err(PipelineError::Usage(format!(
            "dataset activities {:?} differ from model classes {:?}",
            manifest.activities(),
            model.subspace.class_names()
        )));
    }
    let background = load_background(&manifest.background, &model.config.segmentation)?;
    let dataset = load_dataset(manifest, &background, model.config.segmentation.k, |a| test.iter().any(|t| t == a))?;
    let clips: Vec<&ActivityClip> = dataset.clips.iter().collect();
    core("evaluation", evaluate_clips(&model.subspace, &clips, protocol, seed))
}
