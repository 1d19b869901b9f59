//! Synthetic emotion-profile corpora with known linear dynamics.
//!
//! Each class owns a real `dim x dim` transition matrix. An utterance starts
//! from a standard-normal state and evolves as `s_k = A s_{k-1} + sigma * eps_k`.
//! The raw states form the BEP frames and their softmax the EEP frames.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ep::{Dataset, EpKind, EpSequence};
use crate::error::{Error, Result};
use crate::numerics::{self, RealMatrix};

/// Largest spectral radius accepted for a class transition matrix.
pub const MAX_SPECTRAL_RADIUS: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub utterances_per_class: usize,
    pub dim: usize,
    /// Inclusive range of utterance lengths N.
    pub n_range: (usize, usize),
    /// One row-major `dim x dim` matrix per class, as a list of rows.
    pub dynamics: Vec<Vec<Vec<f64>>>,
    pub noise_sigma: f64,
    /// Mean of the standard-normal initial state, shared by every class;
    /// all zeros when empty.
    #[serde(default)]
    pub initial_mean: Vec<f64>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.utterances_per_class == 0 {
            return fail("utterances_per_class must be >= 1".into());
        }
        if self.dim == 0 {
            return fail("dim must be >= 1".into());
        }
        let (lo, hi) = self.n_range;
        if lo < 4 || hi < lo {
            return fail(format!(
                "n_range must satisfy 4 <= min <= max, got ({lo}, {hi})"
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return fail(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            ));
        }
        if !self.initial_mean.is_empty() && self.initial_mean.len() != self.dim {
            return fail(format!(
                "initial_mean has length {}, expected {}",
                self.initial_mean.len(),
                self.dim
            ));
        }
        if self.initial_mean.iter().any(|x| !x.is_finite()) {
            return fail("initial_mean must be finite".into());
        }
        if self.dynamics.len() != self.classes {
            return fail(format!(
                "{} dynamics matrices for {} classes",
                self.dynamics.len(),
                self.classes
            ));
        }
        for (c, rows) in self.dynamics.iter().enumerate() {
            if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                return fail(format!("class {c} matrix is not {0}x{0}", self.dim));
            }
            let a = RealMatrix::from_rows(rows)
                .map_err(|e| Error::Config(format!("class {c} matrix: {e}")))?;
            let radius = spectral_radius(&a)?;
            if radius > MAX_SPECTRAL_RADIUS {
                return fail(format!(
                    "class {c} matrix has spectral radius {radius:.4} > {MAX_SPECTRAL_RADIUS}"
                ));
            }
        }
        Ok(())
    }

    pub fn class_label(&self, class: usize) -> String {
        format!("class{class}")
    }
}

pub fn spectral_radius(a: &RealMatrix) -> Result<f64> {
    Ok(numerics::sorted_eigenvalues(a)?
        .first()
        .map_or(0.0, |z| z.norm()))
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Raw state trajectory `s_0, ..., s_{N-1}` for utterance `index`. The RNG
/// stream is keyed by `(seed, index)` so utterances are independent of
/// generation order.
fn trajectory(cfg: &SynthConfig, a: &DMatrix<f64>, index: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let n = rng.random_range(cfg.n_range.0..=cfg.n_range.1);
    let mut s = DVector::from_fn(cfg.dim, |i, _| {
        cfg.initial_mean.get(i).copied().unwrap_or(0.0) + rng.sample::<f64, _>(StandardNormal)
    });
    let mut frames = Vec::with_capacity(n);
    frames.push(s.iter().copied().collect());
    for _ in 1..n {
        s = a * &s;
        if cfg.noise_sigma > 0.0 {
            for v in s.iter_mut() {
                *v += cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        frames.push(s.iter().copied().collect());
    }
    frames
}

/// Generates paired (EEP, BEP) datasets sharing ids and labels.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    let matrices: Vec<DMatrix<f64>> = cfg
        .dynamics
        .iter()
        .map(|rows| DMatrix::from_fn(cfg.dim, cfg.dim, |i, j| rows[i][j]))
        .collect();
    let mut eep = Vec::with_capacity(cfg.classes * cfg.utterances_per_class);
    let mut bep = Vec::with_capacity(eep.capacity());
    for (c, a) in matrices.iter().enumerate() {
        let label = cfg.class_label(c);
        for u in 0..cfg.utterances_per_class {
            let index = c * cfg.utterances_per_class + u;
            let id = format!("utt{index:05}");
            let frames = trajectory(cfg, a, index as u64);
            if frames.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("utterance {id} diverged")));
            }
            let probs = frames.iter().map(|f| softmax(f)).collect();
            eep.push(EpSequence::new(
                id.clone(),
                label.clone(),
                EpKind::Eep,
                probs,
            )?);
            bep.push(EpSequence::new(id, label.clone(), EpKind::Bep, frames)?);
        }
    }
    Ok((
        Dataset::new(EpKind::Eep, eep)?,
        Dataset::new(EpKind::Bep, bep)?,
    ))
}

fn rotation_block(radius: f64, angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    [[radius * c, -radius * s], [radius * s, radius * c]]
}

/// Class `c` of the benchmark: three damped rotations whose angles all scale
/// with a class-specific base angle, mixed by a fixed orthogonal reflection.
/// Every class shares the same decay rates, so a class is identified only by
/// how fast its trajectories rotate.
fn benchmark_matrix(class: usize, classes: usize) -> Vec<Vec<f64>> {
    let dim = 6;
    let base = 0.35 + 1.1 * class as f64 / (classes - 1) as f64;
    let blocks = [
        rotation_block(0.97, base),
        rotation_block(0.85, 1.6 * base),
        rotation_block(0.7, 0.5 * base),
    ];
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for (b, block) in blocks.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                a[(2 * b + i, 2 * b + j)] = block[i][j];
            }
        }
    }
    // Householder reflection Q = I - 2uu^T with u = (1, 2, ..., 6)/|.|; Q = Q^T = Q^-1.
    let u = DVector::from_fn(dim, |i, _| (i + 1) as f64).normalize();
    let q = DMatrix::identity(dim, dim) - (&u * u.transpose()) * 2.0;
    let mixed = &q * a * &q;
    (0..dim)
        .map(|i| (0..dim).map(|j| mixed[(i, j)]).collect())
        .collect()
}

/// The canonical benchmark: 4 classes of 6-dimensional rotation-plus-decay
/// dynamics, 100 utterances per class, 8 to 40 frames each, noise 0.05, seed 42.
/// Every class starts from the same initial-state distribution, so class
/// differences in any statistic come from the dynamics alone.
pub fn default_benchmark() -> SynthConfig {
    let classes = 4;
    SynthConfig {
        classes,
        utterances_per_class: 100,
        dim: 6,
        n_range: (8, 40),
        dynamics: (0..classes).map(|c| benchmark_matrix(c, classes)).collect(),
        noise_sigma: 0.05,
        initial_mean: vec![4.0, -2.0, 2.0, 3.0, -1.0, 2.0],
        seed: 42,
    }
}
