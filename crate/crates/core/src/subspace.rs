//! PCA on the prior-weighted total scatter matrix.
//!
//! With `w_ij = c_i / q_i` for sample `j` of class `i`, the weighted mean is
//! `X̄ = Σ w_ij X_ij` and the total scatter is
//! `S = Σ w_ij (X_ij - X̄)(X_ij - X̄)^T`. Its eigenvectors, sorted by
//! descending eigenvalue, span the feature subspace; a sample is projected as
//! `Y = Φ_d^T (X - X̄)`.
//!
//! Two routes are provided. [`compute_scatter`] + [`eigendecompose`] build the
//! `n × n` matrix directly and are only practical for small `n`.
//! [`fit_snapshot`] works from the `l × l` Gram matrix of the weighted,
//! centered samples `z = √w (X - X̄)`: if `G v = μ v` with `G = Z^T Z`, then
//! `Z v / √μ` is a unit eigenvector of `S = Z Z^T` with the same eigenvalue.
//! Training always uses the snapshot route.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, dot, orthonormalize, symmetric_eigen, Matrix};
use crate::sequence::FeatureSequence;

/// Eigenvalues at or below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Symmetry tolerance, relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Tolerance on `Σ c_i = 1`.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

/// A labeled run of consecutive image vectors from one source clip.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingClip {
    pub class: usize,
    pub source: String,
    pub frames: Vec<Vec<f64>>,
}

/// Labeled training samples grouped into clips, with per-class priors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    class_names: Vec<String>,
    priors: Vec<f64>,
    clips: Vec<TrainingClip>,
    dim: usize,
}

impl TrainingSet {
    /// Builds a set with equal priors `1/p`. Every class needs at least one
    /// sample and all vectors must share one length.
    pub fn new(class_names: Vec<String>, clips: Vec<TrainingClip>) -> Result<Self> {
        let p = class_names.len();
        if p == 0 {
            return Err(Error::Empty("class list"));
        }
        let dim = clips
            .iter()
            .flat_map(|c| c.frames.first())
            .map(Vec::len)
            .next()
            .ok_or(Error::Empty("training set"))?;
        let mut counts = vec![0usize; p];
        for clip in &clips {
            if clip.class >= p {
                return Err(Error::UnknownClass(clip.class));
            }
            for f in &clip.frames {
                if f.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, actual: f.len() });
                }
            }
            counts[clip.class] += clip.frames.len();
        }
        if counts.contains(&0) {
            return Err(Error::InvalidParameter("every class needs at least one training sample"));
        }
        let priors = vec![1.0 / p as f64; p];
        Ok(Self { class_names, priors, clips, dim })
    }

    /// Replaces the equal priors. They must be non-negative and sum to one.
    pub fn with_priors(mut self, priors: Vec<f64>) -> Result<Self> {
        if priors.len() != self.class_names.len() {
            return Err(Error::DimensionMismatch { expected: self.class_names.len(), actual: priors.len() });
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL || priors.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::InvalidPriors { sum });
        }
        self.priors = priors;
        Ok(self)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn clips(&self) -> &[TrainingClip] {
        &self.clips
    }

    /// Vector length `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per class, `q_i`.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut q = vec![0; self.class_names.len()];
        for clip in &self.clips {
            q[clip.class] += clip.frames.len();
        }
        q
    }

    /// Total sample count `l`.
    pub fn sample_count(&self) -> usize {
        self.clips.iter().map(|c| c.frames.len()).sum()
    }

    /// Every sample with its weight `c_i / q_i`; weights sum to one.
    pub fn weighted_samples(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        let q = self.class_sizes();
        let weights: Vec<f64> = self.priors.iter().zip(&q).map(|(c, &q)| c / q as f64).collect();
        self.clips
            .iter()
            .flat_map(move |clip| {
                let w = weights[clip.class];
                clip.frames.iter().map(move |f| (w, f.as_slice()))
            })
    }

    pub fn weighted_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for (w, x) in self.weighted_samples() {
            mean.iter_mut().zip(x).for_each(|(m, v)| *m += w * v);
        }
        mean
    }

    fn check_trainable(&self) -> Result<()> {
        if self.sample_count() < 2 {
            return Err(Error::InvalidParameter("at least two training samples are required"));
        }
        let sum: f64 = self.priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::InvalidPriors { sum });
        }
        Ok(())
    }
}

/// The total scatter matrix and the weighted mean it is centered on.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    pub matrix: Matrix,
    pub mean: Vec<f64>,
}

/// Builds the dense `n × n` total scatter matrix.
pub fn compute_scatter(ts: &TrainingSet) -> Result<ScatterMatrix> {
    ts.check_trainable()?;
    let n = ts.dim();
    let mean = ts.weighted_mean();
    let mut matrix = Matrix::zeros(n, n);
    let mut centered = vec![0.0; n];
    for (w, x) in ts.weighted_samples() {
        centered.iter_mut().zip(x.iter().zip(&mean)).for_each(|(c, (v, m))| *c = v - m);
        for r in 0..n {
            let wr = w * centered[r];
            for c in 0..=r {
                matrix[(r, c)] += wr * centered[c];
            }
        }
    }
    for r in 0..n {
        for c in 0..r {
            matrix[(c, r)] = matrix[(r, c)];
        }
    }
    Ok(ScatterMatrix { matrix, mean })
}

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenSystem {
    /// Number of eigenvalues above `RANK_TOL × λ_1`.
    pub fn rank(&self) -> usize {
        numeric_rank(&self.values)
    }

    /// The `d` leading eigenvectors as an `n × d` matrix.
    pub fn select_basis(&self, d: usize) -> Result<Matrix> {
        let n = self.vectors.rows();
        if d == 0 || d > self.values.len() {
            return Err(Error::FeatureCount { requested: d, rank: self.values.len() });
        }
        Ok(Matrix::from_fn(n, d, |r, c| self.vectors[(r, c)]))
    }
}

fn numeric_rank(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return 0;
    }
    values.iter().take_while(|&&v| v > RANK_TOL * top).count()
}

/// Symmetric eigendecomposition of a scatter matrix.
pub fn eigendecompose(s: &Matrix) -> Result<EigenSystem> {
    s.check_symmetric(SYMMETRY_TOL)?;
    let (values, vectors) = symmetric_eigen(s)?;
    Ok(EigenSystem { values, vectors })
}

/// Mean, nonzero eigenvalues and their unit eigenvectors of the scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// Descending, all above `RANK_TOL × λ_1`.
    pub eigenvalues: Vec<f64>,
    /// One unit vector of length `n` per eigenvalue.
    pub components: Vec<Vec<f64>>,
}

impl PcaFit {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// PCA through the dense scatter matrix.
pub fn fit_direct(ts: &TrainingSet) -> Result<PcaFit> {
    let scatter = compute_scatter(ts)?;
    let es = eigendecompose(&scatter.matrix)?;
    let rank = es.rank();
    Ok(PcaFit {
        mean: scatter.mean,
        eigenvalues: es.values[..rank].to_vec(),
        components: (0..rank).map(|k| es.vectors.column(k)).collect(),
    })
}

/// PCA through the `l × l` Gram matrix of weighted, centered samples.
pub fn fit_snapshot(ts: &TrainingSet) -> Result<PcaFit> {
    ts.check_trainable()?;
    let mean = ts.weighted_mean();
    let z: Vec<Vec<f64>> = ts
        .weighted_samples()
        .map(|(w, x)| {
            let s = libm::sqrt(w);
            x.iter().zip(&mean).map(|(v, m)| s * (v - m)).collect()
        })
        .collect();
    let l = z.len();
    let mut gram = Matrix::zeros(l, l);
    for a in 0..l {
        for b in 0..=a {
            let g = dot(&z[a], &z[b]);
            gram[(a, b)] = g;
            gram[(b, a)] = g;
        }
    }
    let (values, vectors) = symmetric_eigen(&gram)?;
    let rank = numeric_rank(&values);
    let mut components: Vec<Vec<f64>> = (0..rank)
        .map(|k| {
            let scale = 1.0 / libm::sqrt(values[k]);
            let mut phi = vec![0.0; ts.dim()];
            for (i, zi) in z.iter().enumerate() {
                let coef = vectors[(i, k)] * scale;
                phi.iter_mut().zip(zi).for_each(|(p, v)| *p += coef * v);
            }
            phi
        })
        .collect();
    orthonormalize(&mut components);
    components.iter_mut().for_each(|c| canonical_sign(c));
    Ok(PcaFit { mean, eigenvalues: values[..rank].to_vec(), components })
}

/// Trained projection plus the labeled gallery templates.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    mean: Vec<f64>,
    /// `d × n`; row `k` is the basis vector `φ_k`.
    basis: Matrix,
    eigenvalues: Vec<f64>,
    class_names: Vec<String>,
    gallery: Vec<FeatureSequence>,
}

impl SubspaceModel {
    /// Keeps the `d` leading components of `fit` and projects every training
    /// clip into a gallery template.
    pub fn from_fit(fit: &PcaFit, d: usize, ts: &TrainingSet) -> Result<Self> {
        if d == 0 || d > fit.rank() {
            return Err(Error::FeatureCount { requested: d, rank: fit.rank() });
        }
        let n = fit.mean.len();
        let mut data = Vec::with_capacity(d * n);
        for comp in &fit.components[..d] {
            data.extend_from_slice(comp);
        }
        let mut model = Self {
            mean: fit.mean.clone(),
            basis: Matrix::from_row_major(d, n, data)?,
            eigenvalues: fit.eigenvalues[..d].to_vec(),
            class_names: ts.class_names().to_vec(),
            gallery: Vec::new(),
        };
        let gallery = ts
            .clips()
            .iter()
            .filter(|c| !c.frames.is_empty())
            .map(|clip| {
                let frames = clip.frames.iter().map(|f| model.project(f)).collect::<Result<_>>()?;
                Ok(FeatureSequence::new(frames).with_label(clip.class).with_source(clip.source.clone()))
            })
            .collect::<Result<_>>()?;
        model.gallery = gallery;
        Ok(model)
    }

    /// Reassembles a model from stored parts.
    pub fn from_parts(
        mean: Vec<f64>,
        basis: Matrix,
        eigenvalues: Vec<f64>,
        class_names: Vec<String>,
        gallery: Vec<FeatureSequence>,
    ) -> Result<Self> {
        if basis.cols() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), actual: basis.cols() });
        }
        if eigenvalues.len() != basis.rows() {
            return Err(Error::DimensionMismatch { expected: basis.rows(), actual: eigenvalues.len() });
        }
        for t in &gallery {
            if t.dim() != basis.rows() {
                return Err(Error::DimensionMismatch { expected: basis.rows(), actual: t.dim() });
            }
            match t.label {
                Some(c) if c < class_names.len() => {}
                Some(c) => return Err(Error::UnknownClass(c)),
                None => return Err(Error::InvalidParameter("gallery template without a class")),
            }
        }
        Ok(Self { mean, basis, eigenvalues, class_names, gallery })
    }

    /// Retained feature count `d`.
    pub fn d(&self) -> usize {
        self.basis.rows()
    }

    /// Image vector length `n`.
    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn gallery(&self) -> &[FeatureSequence] {
        &self.gallery
    }

    /// `Y = Φ_d^T (x - X̄)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok((0..self.d()).map(|k| dot(self.basis.row(k), &centered)).collect())
    }

    pub fn project_all<'a>(&self, frames: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<Vec<f64>>> {
        frames.into_iter().map(|f| self.project(f)).collect()
    }
}

/// Snapshot PCA followed by truncation to `d` features.
pub fn train(ts: &TrainingSet, d: usize) -> Result<SubspaceModel> {
    let fit = fit_snapshot(ts)?;
    SubspaceModel::from_fit(&fit, d, ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| alloc::format!("c{i}")).collect()
    }

    fn clip(class: usize, frames: Vec<Vec<f64>>) -> TrainingClip {
        TrainingClip { class, source: "t".to_string(), frames }
    }

    /// Direct double loop over (i, j) exactly as the weighted sum is written.
    fn brute_force_scatter(classes: &[Vec<Vec<f64>>], priors: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = classes[0][0].len();
        let mut mean = vec![0.0; n];
        for (i, samples) in classes.iter().enumerate() {
            for x in samples {
                for r in 0..n {
                    mean[r] += priors[i] / samples.len() as f64 * x[r];
                }
            }
        }
        let mut s = vec![vec![0.0; n]; n];
        for (i, samples) in classes.iter().enumerate() {
            let w = priors[i] / samples.len() as f64;
            for x in samples {
                for r in 0..n {
                    for c in 0..n {
                        s[r][c] += w * (x[r] - mean[r]) * (x[c] - mean[c]);
                    }
                }
            }
        }
        (mean, s)
    }

    #[test]
    fn symmetric_pair_scatter() {
        let v = vec![1.0, -2.0, 3.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let ts = TrainingSet::new(names(1), vec![clip(0, vec![v.clone(), neg])]).unwrap();
        let s = compute_scatter(&ts).unwrap();
        assert_eq!(s.mean, vec![0.0; 3]);
        for r in 0..3 {
            for c in 0..3 {
                assert!((s.matrix[(r, c)] - v[r] * v[c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identical_samples_zero_scatter() {
        let x = vec![0.5, 0.25];
        let ts = TrainingSet::new(names(2), vec![clip(0, vec![x.clone(), x.clone()]), clip(1, vec![x.clone()])]).unwrap();
        let s = compute_scatter(&ts).unwrap();
        assert!(s.matrix.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scatter_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let classes: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|_| (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
            .collect();
        let clips = classes.iter().enumerate().map(|(i, s)| clip(i, s.clone())).collect();
        let ts = TrainingSet::new(names(2), clips).unwrap();
        let s = compute_scatter(&ts).unwrap();
        let (mean, oracle) = brute_force_scatter(&classes, &[0.5, 0.5]);
        for r in 0..4 {
            assert!((s.mean[r] - mean[r]).abs() < 1e-12);
            for c in 0..4 {
                assert!((s.matrix[(r, c)] - oracle[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_set_errors() {
        let one = TrainingSet::new(names(1), vec![clip(0, vec![vec![1.0]])]).unwrap();
        assert!(compute_scatter(&one).is_err());
        assert!(matches!(
            TrainingSet::new(names(1), vec![clip(0, vec![vec![1.0], vec![1.0, 2.0]])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            TrainingSet::new(names(1), vec![clip(3, vec![vec![1.0]])]),
            Err(Error::UnknownClass(3))
        );
        let ts = TrainingSet::new(names(2), vec![clip(0, vec![vec![1.0]]), clip(1, vec![vec![2.0]])]).unwrap();
        assert!(matches!(ts.clone().with_priors(vec![0.5, 0.6]), Err(Error::InvalidPriors { .. })));
        assert!(ts.with_priors(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn select_basis_orders_columns() {
        let m = Matrix::from_row_major(3, 3, vec![5.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 9.0]).unwrap();
        let es = eigendecompose(&m).unwrap();
        let b = es.select_basis(2).unwrap();
        assert_eq!(b.column(0), vec![0.0, 0.0, 1.0]);
        assert_eq!(b.column(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(es.select_basis(3).unwrap(), es.vectors);
        assert_eq!(es.select_basis(1).unwrap().column(0), vec![0.0, 0.0, 1.0]);
        assert!(es.select_basis(0).is_err());
        assert!(es.select_basis(4).is_err());
    }

    #[test]
    fn projection_of_mean_and_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let frames: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ts = TrainingSet::new(names(1), vec![clip(0, frames)]).unwrap();
        let model = train(&ts, 3).unwrap();
        let zero = model.project(model.mean()).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-12));
        let x: Vec<f64> = model.mean().iter().zip(model.basis().row(0)).map(|(m, p)| m + p).collect();
        let y = model.project(&x).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(model.project(&[1.0]).is_err());
    }

    #[test]
    fn gallery_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut clips = Vec::new();
        for c in 0..2 {
            let frames = (0..4).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0) + c as f64).collect()).collect();
            clips.push(clip(c, frames));
        }
        let ts = TrainingSet::new(names(2), clips).unwrap();
        let model = train(&ts, 3).unwrap();
        for (t, c) in model.gallery().iter().zip(ts.clips()) {
            let again = model.project_all(c.frames.iter().map(Vec::as_slice)).unwrap();
            assert_eq!(t.frames, again);
            assert_eq!(t.label, Some(c.class));
        }
        assert_eq!(train(&ts, 3).unwrap(), model);
    }

    #[test]
    fn feature_count_beyond_rank_is_an_error() {
        let ts = TrainingSet::new(names(1), vec![clip(0, vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]])]).unwrap();
        assert_eq!(train(&ts, 2), Err(Error::FeatureCount { requested: 2, rank: 1 }));
        assert!(train(&ts, 1).is_ok());
    }
}
