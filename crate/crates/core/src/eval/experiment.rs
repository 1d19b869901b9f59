//! Grid runner: every cell summarizes the paired corpora with one method
//! configuration and scores it with k-fold cross-validated random forests.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{fold_assignment, CvConfig};
use super::forest::{train_forest, ForestConfig};
use super::metrics::metrics;
use crate::dmd::OrderSet;
use crate::ep::{pair_eep_bep, Dataset, EpSequence, Representation};
use crate::error::{Error, Result};
use crate::summarize::{self, DctConfig, Method, PMeansConfig, CONCAT_SEP};

/// Which emotion profiles feed a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpChoice {
    #[serde(rename = "eep")]
    Eep,
    #[serde(rename = "bep")]
    Bep,
    #[serde(rename = "eep+bep")]
    EepBep,
}

impl fmt::Display for EpChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpChoice::Eep => f.write_str("EEP"),
            EpChoice::Bep => f.write_str("BEP"),
            EpChoice::EepBep => write!(f, "EEP{CONCAT_SEP}BEP"),
        }
    }
}

/// One grid cell. With `avg`, each profile's features are followed by that
/// profile's frame average.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(flatten)]
    pub method: Method,
    pub ep: EpChoice,
    #[serde(default)]
    pub avg: bool,
}

impl Cell {
    pub fn method_label(&self) -> String {
        if self.avg {
            format!("{}{CONCAT_SEP}avg", self.method)
        } else {
            self.method.to_string()
        }
    }

    pub fn label(&self) -> String {
        format!("{} & {}", self.method_label(), self.ep)
    }

    /// Feature length for EEP width `eep_dim` and BEP width `bep_dim`.
    pub fn output_len(&self, eep_dim: usize, bep_dim: usize) -> usize {
        let per = |dim| self.method.output_len(dim) + if self.avg { dim } else { 0 };
        match self.ep {
            EpChoice::Eep => per(eep_dim),
            EpChoice::Bep => per(bep_dim),
            EpChoice::EepBep => per(eep_dim) + per(bep_dim),
        }
    }

    fn features_for(&self, seq: &EpSequence) -> Result<Vec<Representation>> {
        let mut out = vec![self.method.summarize(seq)?];
        if self.avg {
            out.push(summarize::average(seq));
        }
        Ok(out)
    }

    /// Representation of one paired utterance for this cell.
    pub fn represent(&self, eep: &EpSequence, bep: &EpSequence) -> Result<Representation> {
        let mut parts = Vec::new();
        if matches!(self.ep, EpChoice::Eep | EpChoice::EepBep) {
            parts.extend(self.features_for(eep)?);
        }
        if matches!(self.ep, EpChoice::Bep | EpChoice::EepBep) {
            parts.extend(self.features_for(bep)?);
        }
        summarize::concat(&parts)
    }
}

/// Cartesian product `methods x ep x avg`, expanded in that nesting order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub methods: Vec<Method>,
    pub ep: Vec<EpChoice>,
    #[serde(default = "default_avg")]
    pub avg: Vec<bool>,
}

fn default_avg() -> Vec<bool> {
    vec![false]
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Explicit cells, run before any grid expansion.
    pub cells: Vec<Cell>,
    pub grid: Option<Grid>,
    pub cv: CvConfig,
    pub forest: ForestConfig,
}

const EEP_BEP: [EpChoice; 2] = [EpChoice::Eep, EpChoice::Bep];

impl ExperimentConfig {
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        ExperimentConfig {
            cells,
            ..Default::default()
        }
    }

    pub fn expand(&self) -> Vec<Cell> {
        let mut cells = self.cells.clone();
        if let Some(g) = &self.grid {
            for m in &g.methods {
                for &ep in &g.ep {
                    for &avg in &g.avg {
                        cells.push(Cell {
                            method: m.clone(),
                            ep,
                            avg,
                        });
                    }
                }
            }
        }
        cells
    }

    fn grid(methods: Vec<Method>, ep: &[EpChoice]) -> Self {
        ExperimentConfig {
            grid: Some(Grid {
                methods,
                ep: ep.to_vec(),
                avg: default_avg(),
            }),
            ..Default::default()
        }
    }

    /// Power sets 1, [1-2], [1-3], [1-6] on EEP and BEP.
    pub fn pmeans_table() -> Self {
        let methods = [1, 2, 3, 6]
            .iter()
            .map(|&p| Method::Pmeans {
                powers: PMeansConfig::up_to(p).expect("valid powers"),
            })
            .collect();
        Self::grid(methods, &EEP_BEP)
    }

    /// DCT with 1 to 6 coefficients on EEP and BEP.
    pub fn dct_table() -> Self {
        let methods = (1..=6)
            .map(|k| Method::Dct {
                k: DctConfig::new(k).expect("valid k"),
            })
            .collect();
        Self::grid(methods, &EEP_BEP)
    }

    /// DMD with d = 1, 2, 3, 6, [1-2], [1-3], [1-6] on EEP and BEP.
    pub fn dmd_table() -> Self {
        let sets = [
            vec![1],
            vec![2],
            vec![3],
            vec![6],
            vec![1, 2],
            vec![1, 2, 3],
            (1..=6).collect(),
        ];
        let methods = sets
            .iter()
            .map(|d| Method::Dmd {
                d: OrderSet::from_values(d).expect("valid orders"),
            })
            .collect();
        Self::grid(methods, &EEP_BEP)
    }

    /// Method comparison across EEP, BEP and EEP+BEP, including DMD with the
    /// frame average appended.
    pub fn comparison_table() -> Self {
        let all = [EpChoice::Eep, EpChoice::Bep, EpChoice::EepBep];
        let dmd = Method::Dmd {
            d: OrderSet::up_to(2).expect("valid orders"),
        };
        let mut cells = Vec::new();
        for method in [
            Method::Pmeans {
                powers: PMeansConfig::up_to(2).expect("valid powers"),
            },
            Method::Dct {
                k: DctConfig::new(3).expect("valid k"),
            },
            Method::Functionals,
            dmd.clone(),
        ] {
            cells.extend(all.iter().map(|&ep| Cell {
                method: method.clone(),
                ep,
                avg: false,
            }));
        }
        cells.extend(all.iter().map(|&ep| Cell {
            method: dmd.clone(),
            ep,
            avg: true,
        }));
        Self::from_cells(cells)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "pmeans" => Ok(Self::pmeans_table()),
            "dct" => Ok(Self::dct_table()),
            "dmd" => Ok(Self::dmd_table()),
            "comparison" => Ok(Self::comparison_table()),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected pmeans, dct, dmd or comparison)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub wa: f64,
    pub ua: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub class_set: Vec<String>,
    /// Rows are true classes, columns predicted classes, both in `class_set` order.
    pub confusion: Vec<Vec<u64>>,
    pub wa: f64,
    pub ua: f64,
    pub per_fold: Vec<FoldScore>,
    pub skipped: Vec<Skipped>,
    pub feature_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub label: String,
    pub method: String,
    pub ep: EpChoice,
    pub report: EvalReport,
}

/// Per-fold forest seed, decorrelated from the base seed.
fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add((fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Evaluates one cell. `assignment[i]` is the test fold of pair `i`; folds are
/// shared by all cells, and skipped utterances simply drop out of both sides.
pub fn run_cell(
    cell: &Cell,
    pairs: &[(&EpSequence, &EpSequence)],
    class_set: &[String],
    assignment: &[usize],
    cv: &CvConfig,
    forest: &ForestConfig,
) -> Result<EvalReport> {
    let min_frames = cell.method.min_frames();
    let reps: Vec<std::result::Result<Representation, Skipped>> = pairs
        .par_iter()
        .map(|(e, b)| {
            let n = e.len().min(b.len());
            if n < min_frames {
                return Ok(Err(Skipped {
                    id: e.id.clone(),
                    reason: format!(
                        "N = {n} frames, {} needs at least {min_frames}",
                        cell.method
                    ),
                }));
            }
            cell.represent(e, b).map(Ok)
        })
        .collect::<Result<_>>()?;

    let labels: Vec<usize> = pairs
        .iter()
        .map(|(e, _)| {
            class_set
                .iter()
                .position(|c| *c == e.label)
                .expect("label in class set")
        })
        .collect();
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for (i, r) in reps.into_iter().enumerate() {
        match r {
            Ok(rep) => kept.push((i, rep.values)),
            Err(s) => skipped.push(s),
        }
    }
    if kept.is_empty() {
        return Err(Error::Config(format!(
            "cell {} has no usable utterances",
            cell.label()
        )));
    }
    let feature_len = kept[0].1.len();
    let k = class_set.len();

    let fold_results: Vec<Option<(usize, Vec<Vec<u64>>)>> = (0..cv.folds)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<_>, Vec<_>) =
                kept.iter().partition(|(i, _)| assignment[*i] == fold);
            if test.is_empty() {
                return Ok(None);
            }
            let x: Vec<Vec<f64>> = train.iter().map(|(_, v)| v.clone()).collect();
            let y: Vec<usize> = train.iter().map(|(i, _)| labels[*i]).collect();
            let cfg = ForestConfig {
                seed: fold_seed(forest.seed, fold),
                ..forest.clone()
            };
            let model = train_forest(&x, &y, k, &cfg)?;
            let mut confusion = vec![vec![0u64; k]; k];
            for (i, v) in &test {
                confusion[labels[*i]][model.predict(v)] += 1;
            }
            Ok(Some((fold, confusion)))
        })
        .collect::<Result<_>>()?;

    let mut confusion = vec![vec![0u64; k]; k];
    let mut per_fold = Vec::new();
    for (fold, c) in fold_results.into_iter().flatten() {
        let (wa, ua) = metrics(&c)?;
        per_fold.push(FoldScore { fold, wa, ua });
        for (row, add) in confusion.iter_mut().zip(&c) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let (wa, ua) = metrics(&confusion)?;
    Ok(EvalReport {
        class_set: class_set.to_vec(),
        confusion,
        wa,
        ua,
        per_fold,
        skipped,
        feature_len,
    })
}

/// Runs every cell of `grid` over the paired corpora. Cells run in parallel;
/// results are in grid order and independent of the thread count.
pub fn run_experiment(
    grid: &ExperimentConfig,
    eep: &Dataset,
    bep: &Dataset,
) -> Result<Vec<CellReport>> {
    let cells = grid.expand();
    if cells.is_empty() {
        return Err(Error::Config("experiment grid has no cells".into()));
    }
    let pairs = pair_eep_bep(eep, bep)?;
    let class_set = eep.class_set();
    let labels: Vec<usize> = pairs
        .iter()
        .map(|(e, _)| eep.class_index(&e.label).expect("label in class set"))
        .collect();
    let assignment = fold_assignment(&labels, class_set.len(), &grid.cv)?;

    cells
        .par_iter()
        .map(|cell| {
            let report = run_cell(cell, &pairs, class_set, &assignment, &grid.cv, &grid.forest)?;
            Ok(CellReport {
                label: cell.label(),
                method: cell.method_label(),
                ep: cell.ep,
                report,
            })
        })
        .collect()
}
