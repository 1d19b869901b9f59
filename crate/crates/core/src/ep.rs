//! Emotion-profile data model and JSON-lines I/O.
//!
//! An utterance is an ordered list of segment-level frames. Estimate-level
//! profiles (EEP) carry one class-probability distribution per frame;
//! bottleneck-level profiles (BEP) carry unconstrained feature vectors.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Allowed deviation of an EEP frame's sum from 1.
pub const SIMPLEX_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpKind {
    Eep,
    Bep,
}

impl fmt::Display for EpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpKind::Eep => "EEP",
            EpKind::Bep => "BEP",
        })
    }
}

impl std::str::FromStr for EpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eep" => Ok(EpKind::Eep),
            "bep" => Ok(EpKind::Bep),
            other => Err(Error::Config(format!("unknown EP kind {other:?}"))),
        }
    }
}

/// One utterance's profile: `frames.len()` segments of `dim` values each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpSequence {
    pub id: String,
    pub label: String,
    pub kind: EpKind,
    frames: Vec<Vec<f64>>,
}

impl EpSequence {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        kind: EpKind,
        frames: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let seq = EpSequence {
            id: id.into(),
            label: label.into(),
            kind,
            frames,
        };
        seq.validate()?;
        Ok(seq)
    }

    fn invalid(&self, message: String) -> Error {
        Error::Validation {
            id: self.id.clone(),
            message,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.frames.first() else {
            return Err(self.invalid("utterance has no frames".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(self.invalid("frames have dimension 0".into()));
        }
        for (i, frame) in self.frames.iter().enumerate() {
            if frame.len() != dim {
                return Err(self.invalid(format!(
                    "frame {i} has dimension {}, expected {dim}",
                    frame.len()
                )));
            }
            if let Some(x) = frame.iter().find(|x| !x.is_finite()) {
                return Err(self.invalid(format!("frame {i} has non-finite entry {x}")));
            }
            if self.kind == EpKind::Eep {
                if let Some(x) = frame.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(self.invalid(format!("EEP frame {i} has entry {x} outside [0, 1]")));
                }
                let sum: f64 = frame.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return Err(self.invalid(format!("EEP frame {i} sums to {sum}, not 1")));
                }
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Number of segments N.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }

    /// Values of dimension `j` across time.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f[j]).collect()
    }
}

/// Fixed-length summary of one utterance, tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub id: String,
    pub label: String,
    pub method: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: EpKind,
    sequences: Vec<EpSequence>,
    class_set: Vec<String>,
}

impl Dataset {
    /// Builds a dataset; the class set is the sorted set of labels.
    pub fn new(kind: EpKind, sequences: Vec<EpSequence>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &sequences {
            if s.kind != kind {
                return Err(Error::Validation {
                    id: s.id.clone(),
                    message: format!("expected a {kind} sequence, found {}", s.kind),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Validation {
                    id: s.id.clone(),
                    message: "duplicate utterance id".into(),
                });
            }
        }
        let class_set = sequences
            .iter()
            .map(|s| s.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Dataset {
            kind,
            sequences,
            class_set,
        })
    }

    pub fn sequences(&self) -> &[EpSequence] {
        &self.sequences
    }

    pub fn class_set(&self) -> &[String] {
        &self.class_set
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_set.iter().position(|c| c == label)
    }

    /// JSON-lines encoding, one utterance per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.sequences {
            out.push_str(&serde_json::to_string(s).expect("sequence serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }
}

/// Parses a JSON-lines dataset from any reader. Blank lines are ignored.
pub fn parse_dataset<R: BufRead>(reader: R, kind: EpKind, source: &str) -> Result<Dataset> {
    let mut sequences = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let seq: EpSequence = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if seq.kind != kind {
            return Err(Error::Validation {
                id: seq.id,
                message: format!("line {} has kind {}, expected {kind}", i + 1, seq.kind),
            });
        }
        seq.validate()?;
        sequences.push(seq);
    }
    Dataset::new(kind, sequences)
}

pub fn load_dataset(path: impl AsRef<Path>, kind: EpKind) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file), kind, &path.display().to_string())
}

/// Reads the `kind` field of the first non-blank line.
pub fn detect_kind(path: impl AsRef<Path>) -> Result<EpKind> {
    #[derive(Deserialize)]
    struct KindOnly {
        kind: EpKind,
    }
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let k: KindOnly = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        return Ok(k.kind);
    }
    Err(Error::Config(format!(
        "{} contains no utterances",
        path.display()
    )))
}

fn check_uniform_lengths(reps: &[Representation]) -> Result<()> {
    let mut lengths: HashMap<&str, usize> = HashMap::new();
    for r in reps {
        if let Some(x) = r.values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Validation {
                id: r.id.clone(),
                message: format!("representation has non-finite value {x}"),
            });
        }
        let expected = *lengths.entry(r.method.as_str()).or_insert(r.values.len());
        if expected != r.values.len() {
            return Err(Error::Validation {
                id: r.id.clone(),
                message: format!(
                    "representation length {} differs from {expected} for method {}",
                    r.values.len(),
                    r.method
                ),
            });
        }
    }
    Ok(())
}

pub fn representations_to_jsonl(reps: &[Representation]) -> Result<String> {
    if reps.is_empty() {
        return Err(Error::InvalidInput("no representations to save".into()));
    }
    check_uniform_lengths(reps)?;
    let mut out = String::new();
    for r in reps {
        out.push_str(&serde_json::to_string(r).expect("representation serializes"));
        out.push('\n');
    }
    Ok(out)
}

/// Writes representations as JSON lines. Floats use the shortest decimal that
/// round-trips to the same bits, so loading restores values exactly.
pub fn save_representations(reps: &[Representation], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, representations_to_jsonl(reps)?.as_bytes())
}

pub fn load_representations(path: impl AsRef<Path>) -> Result<Vec<Representation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        reps.push(serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    check_uniform_lengths(&reps)?;
    Ok(reps)
}

/// Matches EEP and BEP sequences by id, in EEP order.
pub fn pair_eep_bep<'a>(
    eep: &'a Dataset,
    bep: &'a Dataset,
) -> Result<Vec<(&'a EpSequence, &'a EpSequence)>> {
    let by_id: HashMap<&str, &EpSequence> =
        bep.sequences.iter().map(|s| (s.id.as_str(), s)).collect();
    let eep_ids: HashSet<&str> = eep.sequences.iter().map(|s| s.id.as_str()).collect();

    let missing_in_bep: Vec<String> = eep
        .sequences
        .iter()
        .filter(|s| !by_id.contains_key(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();
    if !missing_in_bep.is_empty() {
        return Err(Error::Pairing {
            side: "BEP".into(),
            ids: missing_in_bep,
        });
    }
    let missing_in_eep: Vec<String> = bep
        .sequences
        .iter()
        .filter(|s| !eep_ids.contains(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();
    if !missing_in_eep.is_empty() {
        return Err(Error::Pairing {
            side: "EEP".into(),
            ids: missing_in_eep,
        });
    }

    eep.sequences
        .iter()
        .map(|e| {
            let b = by_id[e.id.as_str()];
            if b.label != e.label {
                return Err(Error::Validation {
                    id: e.id.clone(),
                    message: format!(
                        "EEP label {:?} differs from BEP label {:?}",
                        e.label, b.label
                    ),
                });
            }
            Ok((e, b))
        })
        .collect()
}
