use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ep::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Test-fold index for every item.
///
/// Stratified: each class's items are shuffled (one RNG stream per class) and
/// dealt round-robin, continuing from where the previous class stopped so fold
/// sizes stay within one of each other.
pub fn fold_assignment(labels: &[usize], n_classes: usize, cfg: &CvConfig) -> Result<Vec<usize>> {
    let k = cfg.folds;
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Config(format!(
            "{} items cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut assignment = vec![0; labels.len()];
    if cfg.stratified {
        let mut offset = 0;
        for class in 0..n_classes {
            let mut members: Vec<usize> =
                (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            if members.len() < k {
                return Err(Error::Config(format!(
                    "class {class} has {} instances, fewer than {k} folds",
                    members.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(class as u64);
            members.shuffle(&mut rng);
            for (i, &item) in members.iter().enumerate() {
                assignment[item] = (offset + i) % k;
            }
            offset += members.len();
        }
    } else {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        for (i, &item) in order.iter().enumerate() {
            assignment[item] = i % k;
        }
    }
    Ok(assignment)
}

/// K-fold split of a dataset's ids; train and test lists keep dataset order.
pub fn stratified_folds(dataset: &Dataset, cfg: &CvConfig) -> Result<Vec<Fold>> {
    let labels: Vec<usize> = dataset
        .sequences()
        .iter()
        .map(|s| dataset.class_index(&s.label).expect("label in class set"))
        .collect();
    let assignment = fold_assignment(&labels, dataset.class_set().len(), cfg)?;
    Ok((0..cfg.folds)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) = dataset
                .sequences()
                .iter()
                .zip(&assignment)
                .partition(|(_, &a)| a == f);
            Fold {
                train: train.into_iter().map(|(s, _)| s.id.clone()).collect(),
                test: test.into_iter().map(|(s, _)| s.id.clone()).collect(),
            }
        })
        .collect())
}
