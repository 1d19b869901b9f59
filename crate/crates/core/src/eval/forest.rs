//! Random forest of fully grown CART trees: Gini impurity, bootstrap
//! resampling, and a random feature subset evaluated at every split.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// floor(sqrt(n_features)), at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let n = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(c) => c,
        };
        n.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(class) => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_classes: usize,
    n_features: usize,
}

impl ForestModel {
    /// Majority vote over trees; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        assert_eq!(x.len(), self.n_features, "feature length mismatch");
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        argmax_first(&votes)
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Vec<usize> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &s in samples {
            c[self.y[s]] += 1;
        }
        c
    }

    /// Best threshold on `feature`, scored by sum over children of
    /// sum_c count_c^2 / n_child (higher means lower weighted Gini).
    fn best_threshold(&self, samples: &mut [usize], feature: usize) -> Option<(f64, f64)> {
        let x = self.x;
        samples.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
        let n = samples.len();
        let mut right = self.counts(samples);
        let mut left = vec![0usize; self.n_classes];
        let mut best: Option<(f64, f64)> = None;
        for i in 1..n {
            let moved = self.y[samples[i - 1]];
            left[moved] += 1;
            right[moved] -= 1;
            let (lo, hi) = (x[samples[i - 1]][feature], x[samples[i]][feature]);
            if lo >= hi || i < self.min_leaf || n - i < self.min_leaf {
                continue;
            }
            let score = purity(&left, i) + purity(&right, n - i);
            if best.is_none_or(|(s, _)| score > s) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((score, threshold));
            }
        }
        best
    }

    fn build(&mut self, samples: &mut [usize], rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(samples);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(argmax_first(&counts)));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || samples.len() < 2 * self.min_leaf {
            return id;
        }

        let n_features = self.x[0].len();
        let mut features: Vec<usize> = (0..n_features).collect();
        features.shuffle(rng);
        let mut best: Option<BestSplit> = None;
        let mut evaluated = 0;
        for &f in &features {
            if evaluated >= self.max_features {
                break;
            }
            let first = self.x[samples[0]][f];
            if samples.iter().all(|&s| self.x[s][f] == first) {
                continue;
            }
            evaluated += 1;
            if let Some((score, threshold)) = self.best_threshold(samples, f) {
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(BestSplit {
                        score,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        let Some(split) = best else {
            return id;
        };

        let x = self.x;
        samples.sort_by_key(|&s| x[s][split.feature] > split.threshold);
        let n_left = samples
            .iter()
            .filter(|&&s| x[s][split.feature] <= split.threshold)
            .count();
        let (l, r) = samples.split_at_mut(n_left);
        let left = self.build(l, rng);
        let right = self.build(r, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn purity(counts: &[usize], n: usize) -> f64 {
    counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

/// Fits a forest on rows `x` with class indices `y` in `0..n_classes`.
/// Tree `t` draws from RNG stream `t` of `cfg.seed`, so results do not depend
/// on how trees are scheduled across threads.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
) -> Result<ForestModel> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Training(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if cfg.trees == 0 || cfg.min_samples_leaf == 0 {
        return Err(Error::Config(
            "forest needs trees >= 1 and min_samples_leaf >= 1".into(),
        ));
    }
    let n_features = x[0].len();
    if n_features == 0 || x.iter().any(|r| r.len() != n_features) {
        return Err(Error::Training(
            "feature rows must share a nonzero length".into(),
        ));
    }
    if y.iter().any(|&c| c >= n_classes) {
        return Err(Error::Training("label index out of range".into()));
    }
    let mut present = vec![false; n_classes];
    y.iter().for_each(|&c| present[c] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Training(
            "training data must contain at least 2 classes".into(),
        ));
    }
    let max_features = cfg.max_features.resolve(n_features);

    let trees = (0..cfg.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let mut samples: Vec<usize> = if cfg.bootstrap {
                (0..x.len()).map(|_| rng.random_range(0..x.len())).collect()
            } else {
                (0..x.len()).collect()
            };
            let mut b = Builder {
                x,
                y,
                n_classes,
                max_features,
                min_leaf: cfg.min_samples_leaf,
                nodes: Vec::new(),
            };
            b.build(&mut samples, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_classes,
        n_features,
    })
}
