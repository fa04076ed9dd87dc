//! Versioned binary model container.
//!
//! All integers are little-endian with explicit widths and every real is an
//! IEEE-754 `f64`, so `load(save(m))` reproduces the model bit for bit.
//! Strings are a `u32` byte length followed by UTF-8.
//!
//! ```text
//! magic "ACTRMODL" | version u32
//! crop_h u32 | crop_w u32 | n u64 | d u64
//! fps f64 | window_sec f64 | k f64 | deviation_floor f64
//! seed: present u8, value u64
//! train actors: u32 count, strings
//! class names:  u32 count, strings
//! mean n×f64 | eigenvalues d×f64 | basis d×n f64 (row k = φ_k)
//! background: width u32, height u32, reference w·h×f64, deviation w·h×f64
//! gallery: u32 count, then per template: class u32, source string,
//!          frame count u32, frames × d × f64
//! ```

use std::fs;
use std::path::Path;

use actrec_core::linalg::Matrix;
use actrec_core::{BackgroundModel, FeatureSequence, Protocol, SegmentationParams, SubspaceModel};

pub const MAGIC: &[u8; 8] = b"ACTRMODL";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    Magic,
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error("model file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after model payload")]
    Trailing(usize),
    #[error("invalid model field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("model file {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Settings the model was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub protocol: Protocol,
    pub segmentation: SegmentationParams,
    pub seed: Option<u64>,
    pub train_actors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub crop_height: usize,
    pub crop_width: usize,
    pub config: TrainConfig,
    pub subspace: SubspaceModel,
    pub background: BackgroundModel,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&u32::try_from(v).expect("field fits in u32").to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        v.iter().for_each(|&x| self.f64(x));
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strs(&mut self, v: &[String]) {
        self.u32(v.len());
        v.iter().for_each(|s| self.str(s));
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ModelFileError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(ModelFileError::Truncated(what))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self, what: &'static str) -> Result<u8, ModelFileError> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &'static str) -> Result<usize, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self, what: &'static str) -> Result<u64, ModelFileError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &'static str) -> Result<f64, ModelFileError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, ModelFileError> {
        let bytes = self.take(n.checked_mul(8).ok_or(ModelFileError::Truncated(what))?, what)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn str(&mut self, what: &'static str) -> Result<String, ModelFileError> {
        let len = self.u32(what)?;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|e| ModelFileError::Invalid { field: what, reason: e.to_string() })
    }
    fn strs(&mut self, what: &'static str) -> Result<Vec<String>, ModelFileError> {
        let n = self.u32(what)?;
        (0..n).map(|_| self.str(what)).collect()
    }
}

fn usize_of(v: u64, field: &'static str) -> Result<usize, ModelFileError> {
    usize::try_from(v).map_err(|_| ModelFileError::Invalid { field, reason: format!("{v} does not fit") })
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.subspace;
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(VERSION as usize);
        w.u32(self.crop_height);
        w.u32(self.crop_width);
        w.u64(m.n() as u64);
        w.u64(m.d() as u64);
        w.f64(self.config.protocol.fps);
        w.f64(self.config.protocol.window_sec);
        w.f64(self.config.segmentation.k);
        w.f64(self.config.segmentation.deviation_floor);
        w.u8(u8::from(self.config.seed.is_some()));
        w.u64(self.config.seed.unwrap_or(0));
        w.strs(&self.config.train_actors);
        w.strs(m.class_names());
        w.f64s(m.mean());
        w.f64s(m.eigenvalues());
        w.f64s(m.basis().as_slice());
        let bg = &self.background;
        w.u32(bg.width());
        w.u32(bg.height());
        w.f64s(bg.reference());
        w.f64s(bg.deviation());
        w.u32(m.gallery().len());
        for t in m.gallery() {
            w.u32(t.label.expect("gallery templates are labeled"));
            w.str(&t.source);
            w.u32(t.len());
            for f in &t.frames {
                w.f64s(f);
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFileError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8, "magic").map_err(|_| ModelFileError::Magic)? != MAGIC {
            return Err(ModelFileError::Magic);
        }
        let version = r.u32("version")? as u32;
        if version != VERSION {
            return Err(ModelFileError::Version(version));
        }
        let crop_height = r.u32("crop height")?;
        let crop_width = r.u32("crop width")?;
        let n = usize_of(r.u64("n")?, "n")?;
        let d = usize_of(r.u64("d")?, "d")?;
        if n != crop_height * crop_width {
            return Err(ModelFileError::Invalid {
                field: "n",
                reason: format!("{n} != {crop_height}×{crop_width}"),
            });
        }
        let protocol = Protocol { fps: r.f64("fps")?, window_sec: r.f64("window_sec")? };
        let segmentation = SegmentationParams { k: r.f64("k")?, deviation_floor: r.f64("deviation floor")? };
        let has_seed = r.u8("seed")?;
        let seed_value = r.u64("seed")?;
        let seed = (has_seed != 0).then_some(seed_value);
        let train_actors = r.strs("train actors")?;
        let class_names = r.strs("class names")?;
        let mean = r.f64s(n, "mean")?;
        let eigenvalues = r.f64s(d, "eigenvalues")?;
        let basis_len = d.checked_mul(n).ok_or(ModelFileError::Truncated("basis"))?;
        let basis = Matrix::from_row_major(d, n, r.f64s(basis_len, "basis")?)
            .map_err(|e| ModelFileError::Invalid { field: "basis", reason: e.to_string() })?;
        let bw = r.u32("background width")?;
        let bh = r.u32("background height")?;
        let reference = r.f64s(bw * bh, "background reference")?;
        let deviation = r.f64s(bw * bh, "background deviation")?;
        let background = BackgroundModel::from_parts(bw, bh, reference, deviation)
            .map_err(|e| ModelFileError::Invalid { field: "background", reason: e.to_string() })?;
        let count = r.u32("gallery")?;
        let mut gallery = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let class = r.u32("template class")?;
            let source = r.str("template source")?;
            let len = r.u32("template length")?;
            let frames = (0..len).map(|_| r.f64s(d, "template frame")).collect::<Result<_, _>>()?;
            gallery.push(FeatureSequence::new(frames).with_label(class).with_source(source));
        }
        if r.pos != bytes.len() {
            return Err(ModelFileError::Trailing(bytes.len() - r.pos));
        }
        let subspace = SubspaceModel::from_parts(mean, basis, eigenvalues, class_names, gallery)
            .map_err(|e| ModelFileError::Invalid { field: "subspace", reason: e.to_string() })?;
        Ok(Self {
            crop_height,
            crop_width,
            config: TrainConfig { protocol, segmentation, seed, train_actors },
            subspace,
            background,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        fs::write(path, self.to_bytes()).map_err(|source| ModelFileError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        let bytes = fs::read(path).map_err(|source| ModelFileError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use actrec_core::subspace::{train, TrainingClip, TrainingSet};

    pub(crate) fn tiny_model() -> ModelFile {
        let frames = |off: f64| (0..5).map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 5) as f64 * 0.1 + off).collect()).collect();
        let ts = TrainingSet::new(
            vec!["a".into(), "b".into()],
            vec![
                TrainingClip { class: 0, source: "x/a".into(), frames: frames(0.0) },
                TrainingClip { class: 1, source: "x/b".into(), frames: frames(1.0) },
            ],
        )
        .unwrap();
        ModelFile {
            crop_height: 2,
            crop_width: 3,
            config: TrainConfig {
                protocol: Protocol::default(),
                segmentation: SegmentationParams::default(),
                seed: Some(7),
                train_actors: vec!["x".into()],
            },
            subspace: train(&ts, 2).unwrap(),
            background: BackgroundModel::from_parts(2, 1, vec![1.5, 2.5], vec![2.0, 3.0]).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = tiny_model();
        let bytes = m.to_bytes();
        let back = ModelFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = tiny_model().to_bytes();
        assert!(matches!(ModelFile::from_bytes(b"NOTAMODEL"), Err(ModelFileError::Magic)));
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(ModelFile::from_bytes(&v2), Err(ModelFileError::Version(2))));
        assert!(matches!(ModelFile::from_bytes(&bytes[..bytes.len() - 3]), Err(ModelFileError::Truncated(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(ModelFile::from_bytes(&long), Err(ModelFileError::Trailing(1))));
    }
}
