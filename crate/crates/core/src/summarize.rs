//! Utterance summarizers: average, power means, functionals, truncated DCT,
//! DMD, and feature concatenation.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dmd::{self, OrderSet};
use crate::ep::{EpSequence, Representation};
use crate::error::{Error, Result};

/// Separator used when joining method descriptors of concatenated features.
pub const CONCAT_SEP: &str = "⊕";

/// Distinct ascending exponents, each >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct PMeansConfig(Vec<u32>);

impl PMeansConfig {
    pub fn new(powers: Vec<u32>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::Config("p-means needs at least one power".into()));
        }
        if powers[0] == 0 {
            return Err(Error::Config("p-means powers must be >= 1".into()));
        }
        if powers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "p-means powers must be ascending and distinct".into(),
            ));
        }
        Ok(PMeansConfig(powers))
    }

    /// Powers `1..=max`, the "[1-k]" configurations.
    pub fn up_to(max: u32) -> Result<Self> {
        Self::new((1..=max).collect())
    }

    pub fn powers(&self) -> &[u32] {
        &self.0
    }
}

impl TryFrom<Vec<u32>> for PMeansConfig {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        PMeansConfig::new(v)
    }
}

impl From<PMeansConfig> for Vec<u32> {
    fn from(c: PMeansConfig) -> Self {
        c.0
    }
}

/// Number of DCT coefficients kept per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct DctConfig(usize);

impl DctConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("DCT needs k >= 1".into()));
        }
        Ok(DctConfig(k))
    }

    pub fn k(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for DctConfig {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        DctConfig::new(k)
    }
}

impl From<DctConfig> for usize {
    fn from(c: DctConfig) -> usize {
        c.0
    }
}

/// Arithmetic mean, shifted by the first value so constant inputs come back
/// exactly, and clamped to the sample range.
fn mean(values: &[f64]) -> f64 {
    let x0 = values[0];
    let shift: f64 = values.iter().map(|x| x - x0).sum::<f64>() / values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    (x0 + shift).clamp(lo, hi)
}

fn rep(seq: &EpSequence, method: String, values: Vec<f64>) -> Representation {
    Representation {
        id: seq.id.clone(),
        label: seq.label.clone(),
        method,
        values,
    }
}

pub fn average(seq: &EpSequence) -> Representation {
    let values = (0..seq.dim()).map(|j| mean(&seq.column(j))).collect();
    rep(seq, "avg".into(), values)
}

/// Signed power mean `sign(m) |m|^(1/p)` with `m = mean(x^p)`.
fn power_mean(values: &[f64], p: u32) -> f64 {
    if p == 1 {
        return mean(values);
    }
    let powered: Vec<f64> = values.iter().map(|x| x.powi(p as i32)).collect();
    let m = mean(&powered);
    m.signum() * m.abs().powf(1.0 / p as f64)
}

/// Power means per exponent, concatenated power-major: `[M_p1(dims), M_p2(dims), ...]`.
pub fn p_means(seq: &EpSequence, cfg: &PMeansConfig) -> Representation {
    let columns: Vec<Vec<f64>> = (0..seq.dim()).map(|j| seq.column(j)).collect();
    let values = cfg
        .powers()
        .iter()
        .flat_map(|&p| columns.iter().map(move |c| power_mean(c, p)))
        .collect();
    let powers: Vec<String> = cfg.powers().iter().map(|p| p.to_string()).collect();
    rep(seq, format!("pmeans:p={}", powers.join(",")), values)
}

/// Percentile of sorted data, linearly interpolated at rank `q/100 * (n-1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Per dimension: mean, P1, Q1, median, Q3, P99 (length `6 * dim`).
pub fn functionals(seq: &EpSequence) -> Representation {
    let mut values = Vec::with_capacity(6 * seq.dim());
    for j in 0..seq.dim() {
        let mut col = seq.column(j);
        let mu = mean(&col);
        col.sort_by(f64::total_cmp);
        values.push(mu);
        for q in [1.0, 25.0, 50.0, 75.0, 99.0] {
            values.push(percentile(&col, q));
        }
    }
    rep(seq, "functionals".into(), values)
}

/// First `k` orthonormal DCT-II coefficients of `signal` zero-padded to `len`.
fn dct_ii_prefix(signal: &[f64], len: usize, k: usize) -> Vec<f64> {
    let l = len as f64;
    (0..k)
        .map(|u| {
            let scale = if u == 0 {
                (1.0 / l).sqrt()
            } else {
                (2.0 / l).sqrt()
            };
            let sum: f64 = signal
                .iter()
                .enumerate()
                .map(|(n, x)| x * (PI * (2 * n + 1) as f64 * u as f64 / (2.0 * l)).cos())
                .sum();
            scale * sum
        })
        .collect()
}

/// Orthonormal DCT-II along time for each dimension, keeping the first `k`
/// coefficients; utterances shorter than `k` are padded with zero frames.
/// Output is dimension-major, length `k * dim`.
pub fn dct_summary(seq: &EpSequence, cfg: DctConfig) -> Representation {
    let k = cfg.k();
    let len = seq.len().max(k);
    let values = (0..seq.dim())
        .flat_map(|j| dct_ii_prefix(&seq.column(j), len, k))
        .collect();
    rep(seq, format!("dct:k={k}"), values)
}

/// Concatenates representations of the same utterance in list order.
pub fn concat(reps: &[Representation]) -> Result<Representation> {
    let first = reps
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))?;
    if let Some(r) = reps
        .iter()
        .find(|r| r.id != first.id || r.label != first.label)
    {
        return Err(Error::Pairing {
            side: format!("concatenation of {:?}/{:?}", first.id, first.label),
            ids: vec![r.id.clone()],
        });
    }
    let methods: Vec<&str> = reps.iter().map(|r| r.method.as_str()).collect();
    Ok(Representation {
        id: first.id.clone(),
        label: first.label.clone(),
        method: methods.join(CONCAT_SEP),
        values: reps.iter().flat_map(|r| r.values.iter().copied()).collect(),
    })
}

/// A summarizer together with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Avg,
    Pmeans { powers: PMeansConfig },
    Functionals,
    Dct { k: DctConfig },
    Dmd { d: OrderSet },
}

impl Method {
    pub fn summarize(&self, seq: &EpSequence) -> Result<Representation> {
        Ok(match self {
            Method::Avg => average(seq),
            Method::Pmeans { powers } => p_means(seq, powers),
            Method::Functionals => functionals(seq),
            Method::Dct { k } => dct_summary(seq, *k),
            Method::Dmd { d } => dmd::representation(seq, d)?,
        })
    }

    /// Output length for frames of width `dim`.
    pub fn output_len(&self, dim: usize) -> usize {
        match self {
            Method::Avg => dim,
            Method::Pmeans { powers } => dim * powers.powers().len(),
            Method::Functionals => 6 * dim,
            Method::Dct { k } => k.k() * dim,
            Method::Dmd { d } => d.output_len(dim),
        }
    }

    /// Shortest utterance this method accepts.
    pub fn min_frames(&self) -> usize {
        match self {
            Method::Dmd { d } => d.max() + 1,
            _ => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Avg => f.write_str("avg"),
            Method::Pmeans { powers } => {
                let p: Vec<String> = powers.powers().iter().map(|p| p.to_string()).collect();
                write!(f, "pmeans:p={}", p.join(","))
            }
            Method::Functionals => f.write_str("functionals"),
            Method::Dct { k } => write!(f, "dct:k={}", k.k()),
            Method::Dmd { d } => write!(f, "dmd:d={d}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::EpKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(frames: Vec<Vec<f64>>) -> EpSequence {
        EpSequence::new("u", "x", EpKind::Bep, frames).unwrap()
    }

    fn scalar(values: &[f64]) -> EpSequence {
        seq(values.iter().map(|&v| vec![v]).collect())
    }

    fn pm(p: &[u32]) -> PMeansConfig {
        PMeansConfig::new(p.to_vec()).unwrap()
    }

    #[test]
    fn average_examples() {
        assert_eq!(
            average(&seq(vec![vec![0.0, 1.0], vec![1.0, 0.0]])).values,
            vec![0.5, 0.5]
        );
        assert_eq!(average(&seq(vec![vec![0.3, -2.0]])).values, vec![0.3, -2.0]);
    }

    #[test]
    fn average_matches_column_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frames: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let avg = average(&seq(frames.clone())).values;
        for j in 0..3 {
            let direct: f64 = frames.iter().map(|f| f[j]).sum::<f64>() / 100.0;
            assert!((avg[j] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn p_means_examples() {
        let s = scalar(&[1.0, 4.0]);
        assert_eq!(p_means(&s, &pm(&[1])).values, vec![2.5]);
        let two = p_means(&s, &pm(&[2])).values[0];
        assert!((two - 8.5f64.sqrt()).abs() < 1e-15);
        assert!((two - 2.91548).abs() < 1e-5);
        for p in 1..=6 {
            let v = p_means(&scalar(&[0.7; 5]), &pm(&[p])).values[0];
            assert!((v - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn p_means_layout_and_negatives() {
        let s = seq(vec![vec![-1.0, 2.0], vec![-3.0, 2.0]]);
        let r = p_means(&s, &pm(&[1, 3]));
        assert_eq!(r.method, "pmeans:p=1,3");
        assert_eq!(r.values.len(), 4);
        assert_eq!(r.values[0], -2.0);
        assert_eq!(r.values[1], 2.0);
        // mean of cubes = -14, signed cube root
        assert!((r.values[2] + 14f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn functionals_examples() {
        let f = functionals(&scalar(&[5.0, 1.0, 3.0, 2.0, 4.0])).values;
        assert_eq!(f.len(), 6);
        assert_eq!(f[0], 3.0);
        assert_eq!((f[2], f[3], f[4]), (2.0, 3.0, 4.0));
        assert!((f[1] - 1.04).abs() < 1e-12);
        assert!((f[5] - 4.96).abs() < 1e-12);
        assert_eq!(functionals(&scalar(&[0.1; 7])).values, vec![0.1; 6]);
        assert_eq!(functionals(&scalar(&[-2.5])).values, vec![-2.5; 6]);
    }

    /// Orthonormal DCT-II as an explicit matrix product.
    fn dct_matrix_oracle(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let a = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                (0..n)
                    .map(|i| a * (PI / n as f64 * (i as f64 + 0.5) * k as f64).cos() * x[i])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dct_constant_signal() {
        let r = dct_summary(&scalar(&[2.0; 9]), DctConfig::new(4).unwrap()).values;
        assert!((r[0] - 2.0 * 3.0).abs() < 1e-12);
        for c in &r[1..] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn dct_first_coefficient_is_scaled_mean() {
        let s = seq(vec![
            vec![1.0, -2.0],
            vec![4.0, 0.5],
            vec![0.0, 3.0],
            vec![2.0, 2.0],
        ]);
        let r = dct_summary(&s, DctConfig::new(1).unwrap()).values;
        let avg = average(&s).values;
        assert!((r[0] - 2.0 * avg[0]).abs() < 1e-12);
        assert!((r[1] - 2.0 * avg[1]).abs() < 1e-12);
    }

    #[test]
    fn dct_pads_short_utterances() {
        let r = dct_summary(&scalar(&[1.0, -1.0]), DctConfig::new(4).unwrap()).values;
        let oracle = dct_matrix_oracle(&[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(r.len(), 4);
        for (a, b) in r.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dct_layout_is_dimension_major() {
        let s = seq(vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]]);
        let r = dct_summary(&s, DctConfig::new(2).unwrap()).values;
        let c0 = dct_matrix_oracle(&[1.0, 2.0, 3.0]);
        let c1 = dct_matrix_oracle(&[10.0, 20.0, 30.0]);
        let expected = [c0[0], c0[1], c1[0], c1[1]];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn rep_of(len: usize, method: &str) -> Representation {
        Representation {
            id: "u".into(),
            label: "x".into(),
            method: method.into(),
            values: vec![1.0; len],
        }
    }

    #[test]
    fn concat_examples() {
        let c = concat(&[rep_of(4, "a"), rep_of(6, "b")]).unwrap();
        assert_eq!(c.values.len(), 10);
        assert_eq!(c.method, "a⊕b");
        assert!(concat(&[]).is_err());
        let mut other = rep_of(1, "c");
        other.id = "v".into();
        assert!(matches!(
            concat(&[rep_of(1, "a"), other]),
            Err(Error::Pairing { .. })
        ));
    }

    #[test]
    fn dmd_plus_avg_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frames: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let s = seq(frames);
        let dmd = Method::Dmd {
            d: OrderSet::up_to(2).unwrap(),
        };
        let c = concat(&[dmd.summarize(&s).unwrap(), average(&s)]).unwrap();
        assert_eq!(c.values.len(), 2 * 3 * 3 + 3);
        assert_eq!(c.method, "dmd:d=1,2⊕avg");
        assert_eq!(&c.values[18..], average(&s).values.as_slice());
    }

    #[test]
    fn method_json_and_lengths() {
        let methods: Vec<Method> = serde_json::from_str(
            r#"[{"method":"avg"},{"method":"pmeans","powers":[1,2,3]},{"method":"functionals"},
                {"method":"dct","k":4},{"method":"dmd","d":[1,2]}]"#,
        )
        .unwrap();
        let names: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
        assert_eq!(
            names,
            [
                "avg",
                "pmeans:p=1,2,3",
                "functionals",
                "dct:k=4",
                "dmd:d=1,2"
            ]
        );
        let s = seq((0..8)
            .map(|i| vec![i as f64 * 0.1, 1.0 / (i + 1) as f64])
            .collect());
        for m in &methods {
            let r = m.summarize(&s).unwrap();
            assert_eq!(r.values.len(), m.output_len(2), "{m}");
            assert_eq!(r.method, m.to_string());
        }
        assert!(serde_json::from_str::<Method>(r#"{"method":"dct","k":0}"#).is_err());
        assert!(serde_json::from_str::<Method>(r#"{"method":"pmeans","powers":[2,1]}"#).is_err());
    }

    #[test]
    fn permutation_sensitivity() {
        let a = scalar(&[1.0, 3.0, -2.0, 0.5, 4.0, 2.0, -1.0]);
        let b = scalar(&[4.0, -1.0, 0.5, 2.0, 1.0, -2.0, 3.0]);
        let (fa, fb) = (functionals(&a).values, functionals(&b).values);
        assert!((fa[0] - fb[0]).abs() < 1e-12);
        assert!((average(&a).values[0] - average(&b).values[0]).abs() < 1e-12);
        assert_eq!(fa[1..], fb[1..]);
        let (pa, pb) = (p_means(&a, &pm(&[1, 2, 3])), p_means(&b, &pm(&[1, 2, 3])));
        for (x, y) in pa.values.iter().zip(&pb.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let k = DctConfig::new(3).unwrap();
        assert_ne!(dct_summary(&a, k).values, dct_summary(&b, k).values);
        let a2 = seq(vec![
            vec![1.0, 0.2],
            vec![0.5, 0.9],
            vec![-0.3, 0.4],
            vec![0.8, -0.6],
            vec![0.1, 0.3],
        ]);
        let b2 = seq(vec![
            vec![0.8, -0.6],
            vec![1.0, 0.2],
            vec![0.1, 0.3],
            vec![-0.3, 0.4],
            vec![0.5, 0.9],
        ]);
        let d = OrderSet::from_values(&[1]).unwrap();
        assert_ne!(
            dmd::representation(&a2, &d).unwrap().values,
            dmd::representation(&b2, &d).unwrap().values
        );
    }

    fn arb_frames() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..4, 1usize..30).prop_flat_map(|(dim, n)| {
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, dim), n)
        })
    }

    proptest! {
        #[test]
        fn pmeans_unit_power_is_average(frames in arb_frames()) {
            let s = seq(frames);
            prop_assert_eq!(p_means(&s, &pm(&[1])).values, average(&s).values);
        }

        #[test]
        fn power_means_nondecreasing(frames in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..20)) {
            let s = seq(frames);
            let r = p_means(&s, &PMeansConfig::up_to(6).unwrap()).values;
            for p in 1..6 {
                for j in 0..3 {
                    let (lo, hi) = (r[(p - 1) * 3 + j], r[p * 3 + j]);
                    prop_assert!(lo <= hi * (1.0 + 1e-12) + 1e-300);
                }
            }
        }

        #[test]
        fn dct_preserves_energy(frames in arb_frames()) {
            let s = seq(frames);
            let r = dct_summary(&s, DctConfig::new(s.len()).unwrap()).values;
            let n = s.len();
            for j in 0..s.dim() {
                let e_sig: f64 = s.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
                let e_dct: f64 = r[j * n..(j + 1) * n].iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((e_sig - e_dct).abs() <= 1e-10 * e_sig.max(1.0));
            }
        }

        #[test]
        fn functionals_are_ordered(frames in arb_frames()) {
            let s = seq(frames);
            let f = functionals(&s).values;
            for j in 0..s.dim() {
                let g = &f[6 * j..6 * j + 6];
                prop_assert!(g[1] <= g[2] && g[2] <= g[3] && g[3] <= g[4] && g[4] <= g[5]);
                let col = s.column(j);
                let (lo, hi) = col.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
                prop_assert!(lo <= g[0] && g[0] <= hi);
            }
        }
    }
}
