//! On-disk dataset layout.
//!
//! ```text
//! root/background/*.pgm                     subject-free frames
//! root/<actor>/<activity>/*.ppm             one clip per actor and activity
//! root/<actor>/<activity>/silhouettes/*.pgm optional precomputed masks
//! ```
//!
//! Frame files are ordered lexicographically by file name. When a clip
//! carries a `silhouettes` directory, its masks (nonzero = foreground) are
//! used instead of background subtraction; there must be one per frame.

use std::fs;
use std::path::{Path, PathBuf};

use crate::pnm::{self, ReadError};

pub const BACKGROUND_DIR: &str = "background";
pub const SILHOUETTE_DIR: &str = "silhouettes";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("missing background directory {0}")]
    MissingBackground(PathBuf),
    #[error("no frames in {0}")]
    EmptyDir(PathBuf),
    #[error("{dir}: {masks} silhouettes for {frames} frames")]
    SilhouetteCount { dir: PathBuf, masks: usize, frames: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Decode(#[from] ReadError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipEntry {
    pub actor: String,
    pub activity: String,
    pub frames: Vec<PathBuf>,
    pub silhouettes: Option<Vec<PathBuf>>,
}

impl ClipEntry {
    pub fn id(&self) -> String {
        format!("{}/{}", self.actor, self.activity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub background: Vec<PathBuf>,
    pub clips: Vec<ClipEntry>,
    pub fps: f64,
}

impl DatasetManifest {
    /// Sorted, de-duplicated activity names across all actors.
    pub fn activities(&self) -> Vec<String> {
        let mut v: Vec<String> = self.clips.iter().map(|c| c.activity.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn actors(&self) -> Vec<String> {
        let mut v: Vec<String> = self.clips.iter().map(|c| c.actor.clone()).collect();
        v.sort();
        v.dedup();
        v
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        out.push(entry.map_err(io_err(dir))?.path());
    }
    out.sort();
    Ok(out)
}

/// Image files (`.ppm` / `.pgm`) directly inside `dir`, sorted by name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.is_file())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("ppm" | "pgm")))
        .collect())
}

fn validate(paths: &[PathBuf]) -> Result<(), DatasetError> {
    for p in paths {
        pnm::read(p)?;
    }
    Ok(())
}

/// Optional precomputed masks for the clip in `dir`.
pub fn silhouettes_for(dir: &Path, frame_count: usize) -> Result<Option<Vec<PathBuf>>, DatasetError> {
    let sil_dir = dir.join(SILHOUETTE_DIR);
    if !sil_dir.is_dir() {
        return Ok(None);
    }
    let masks = list_frames(&sil_dir)?;
    if masks.len() != frame_count {
        return Err(DatasetError::SilhouetteCount { dir: sil_dir, masks: masks.len(), frames: frame_count });
    }
    Ok(Some(masks))
}

/// Enumerates and validates a dataset directory.
pub fn ingest(root: &Path, fps: f64) -> Result<DatasetManifest, DatasetError> {
    let bg_dir = root.join(BACKGROUND_DIR);
    if !bg_dir.is_dir() {
        return Err(DatasetError::MissingBackground(bg_dir));
    }
    let background = list_frames(&bg_dir)?;
    if background.is_empty() {
        return Err(DatasetError::EmptyDir(bg_dir));
    }
    validate(&background)?;

    let mut clips = Vec::new();
    for actor_dir in sorted_entries(root)? {
        if !actor_dir.is_dir() || actor_dir == bg_dir {
            continue;
        }
        let actor = actor_dir.file_name().unwrap().to_string_lossy().into_owned();
        for activity_dir in sorted_entries(&actor_dir)? {
            if !activity_dir.is_dir() {
                continue;
            }
            let activity = activity_dir.file_name().unwrap().to_string_lossy().into_owned();
            let frames = list_frames(&activity_dir)?;
            if frames.is_empty() {
                return Err(DatasetError::EmptyDir(activity_dir));
            }
            validate(&frames)?;
            let silhouettes = silhouettes_for(&activity_dir, frames.len())?;
            if let Some(s) = &silhouettes {
                validate(s)?;
            }
            clips.push(ClipEntry { actor: actor.clone(), activity, frames, silhouettes });
        }
    }
    Ok(DatasetManifest { root: root.to_path_buf(), background, clips, fps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use actrec_core::image::{ColorImage, GrayImage, Rgb};

    fn write_gray(path: &Path) {
        fs::write(path, pnm::encode_gray(&GrayImage::filled(4, 3, 9))).unwrap();
    }

    fn write_color(path: &Path) {
        fs::write(path, pnm::encode_color(&ColorImage::filled(4, 3, Rgb([1, 2, 3])))).unwrap();
    }

    fn layout(root: &Path) {
        fs::create_dir_all(root.join("background")).unwrap();
        write_gray(&root.join("background/b0.pgm"));
        for actor in ["B", "A"] {
            for act in ["walk", "bend"] {
                let dir = root.join(actor).join(act);
                fs::create_dir_all(&dir).unwrap();
                for name in ["f2.ppm", "f0.ppm", "f1.ppm"] {
                    write_color(&dir.join(name));
                }
            }
        }
    }

    #[test]
    fn enumerates_clips_in_order() {
        let tmp = tempfile::tempdir().unwrap();
        layout(tmp.path());
        let m = ingest(tmp.path(), 10.0).unwrap();
        assert_eq!(m.clips.len(), 4);
        let ids: Vec<String> = m.clips.iter().map(ClipEntry::id).collect();
        assert_eq!(ids, ["A/bend", "A/walk", "B/bend", "B/walk"]);
        for c in &m.clips {
            let names: Vec<_> = c.frames.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
            assert_eq!(names, ["f0.ppm", "f1.ppm", "f2.ppm"]);
            assert!(c.silhouettes.is_none());
        }
        assert_eq!(m.activities(), ["bend", "walk"]);
        assert_eq!(m.actors(), ["A", "B"]);
    }

    #[test]
    fn empty_activity_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        layout(tmp.path());
        let empty = tmp.path().join("A/fall");
        fs::create_dir_all(&empty).unwrap();
        match ingest(tmp.path(), 10.0) {
            Err(DatasetError::EmptyDir(p)) => assert_eq!(p, empty),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_background_and_bad_file() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(ingest(tmp.path(), 10.0), Err(DatasetError::MissingBackground(_))));
        layout(tmp.path());
        let bad = tmp.path().join("A/walk/f9.ppm");
        fs::write(&bad, b"P6 4 3 255\n").unwrap();
        let err = ingest(tmp.path(), 10.0).unwrap_err();
        assert!(err.to_string().contains("f9.ppm"), "{err}");
    }

    #[test]
    fn silhouettes_must_match_frame_count() {
        let tmp = tempfile::tempdir().unwrap();
        layout(tmp.path());
        let sil = tmp.path().join("A/walk/silhouettes");
        fs::create_dir_all(&sil).unwrap();
        write_gray(&sil.join("m0.pgm"));
        assert!(matches!(ingest(tmp.path(), 10.0), Err(DatasetError::SilhouetteCount { masks: 1, frames: 3, .. })));
        write_gray(&sil.join("m1.pgm"));
        write_gray(&sil.join("m2.pgm"));
        let m = ingest(tmp.path(), 10.0).unwrap();
        assert_eq!(m.clips[1].silhouettes.as_ref().unwrap().len(), 3);
    }
}
