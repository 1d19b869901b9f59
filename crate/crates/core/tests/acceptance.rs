//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use eigenemo::dmd::{fit_koopman, OrderParam, OrderSet};
use eigenemo::ep::{EpKind, EpSequence};
use eigenemo::eval::{metrics, run_experiment, Cell, EpChoice, ExperimentConfig};
use eigenemo::numerics::{pseudoinverse, sorted_eigenvalues, RealMatrix};
use eigenemo::summarize::{
    average, dct_summary, functionals, p_means, DctConfig, Method, PMeansConfig,
};
use eigenemo::synth::{default_benchmark, generate};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    let detail = format!("{} [{:.2?} of {:?}]", o.detail, elapsed, budget);
    outcome(o.pass && elapsed < budget, detail)
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let o = f();
    match budget {
        Some(b) => within_budget(o, start.elapsed(), b),
        None => o,
    }
}

/// Noiseless s_k = A s_{k-1} with A = V diag(λ) V^-1, distinct |λ|, m = 1..6.
fn dmd_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut systems = 0;
    for m in 1..=6 {
        for _ in 0..20 {
            let mut mags: Vec<f64> = Vec::new();
            while mags.len() < m {
                let x = rng.random_range(0.2..1.05);
                if mags.iter().all(|y: &f64| (x - y).abs() > 0.05) {
                    mags.push(x);
                }
            }
            let lambdas: Vec<f64> = mags
                .iter()
                .map(|&x| if rng.random_bool(0.5) { x } else { -x })
                .collect();
            let v = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0))
                + DMatrix::<f64>::identity(m, m) * 2.0;
            let a = &v
                * DMatrix::from_diagonal(&DVector::from_vec(lambdas))
                * v.clone().try_inverse().unwrap();
            let n = m + 2 + rng.random_range(0..10);
            let mut s = DVector::from_fn(m, |_, _| rng.random_range(0.5..1.5));
            let mut frames = vec![s.iter().copied().collect::<Vec<f64>>()];
            for _ in 1..n {
                s = &a * &s;
                frames.push(s.iter().copied().collect());
            }
            let seq = EpSequence::new("sys", "x", EpKind::Bep, frames).unwrap();
            let fit = fit_koopman(&seq, OrderParam::new(1).unwrap()).unwrap();
            let oracle = sorted_eigenvalues(&RealMatrix::from_dmatrix(a).unwrap()).unwrap();
            for (p, o) in fit.eigenpairs.iter().zip(&oracle) {
                worst = worst.max((p.value - o).norm());
            }
            systems += 1;
        }
    }
    outcome(
        worst <= 1e-8,
        format!("{systems} systems, max |Δλ| = {worst:.2e} (tol 1e-8)"),
    )
}

fn delay_embedding() -> Outcome {
    let omega: f64 = 0.7;
    let frames: Vec<Vec<f64>> = (1..=50).map(|k| vec![(omega * k as f64).cos()]).collect();
    let seq = EpSequence::new("cos", "x", EpKind::Bep, frames).unwrap();
    let fit = fit_koopman(&seq, OrderParam::new(2).unwrap()).unwrap();
    let targets = [
        Complex64::from_polar(1.0, -omega),
        Complex64::from_polar(1.0, omega),
    ];
    let mut worst_mod: f64 = 0.0;
    let mut worst_arg: f64 = 0.0;
    for (p, t) in fit.eigenpairs.iter().zip(targets) {
        worst_mod = worst_mod.max((p.value.norm() - t.norm()).abs());
        worst_arg = worst_arg.max((p.value.arg() - t.arg()).abs());
    }
    let ok = fit.eigenpairs.len() == 2 && worst_mod <= 1e-6 && worst_arg <= 1e-6;
    outcome(
        ok,
        format!("max |Δ|λ|| = {worst_mod:.2e}, max |Δarg| = {worst_arg:.2e} (tol 1e-6)"),
    )
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

fn pinv_conditions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let mut deficient = 0;
    for i in 0..1000 {
        let r = rng.random_range(1..=20);
        let c = rng.random_range(1..=20);
        let a = if i % 3 == 0 && r.min(c) > 1 {
            deficient += 1;
            let k = rng.random_range(1..r.min(c));
            let left = DMatrix::from_fn(r, k, |_, _| rng.random_range(-1.0..1.0));
            let right = DMatrix::from_fn(k, c, |_, _| rng.random_range(-1.0..1.0));
            left * right
        } else {
            DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
        };
        let p = pseudoinverse(&RealMatrix::from_dmatrix(a.clone()).unwrap(), None).unwrap();
        let p = p.as_dmatrix();
        let ap = &a * p;
        let pa = p * &a;
        worst = worst
            .max(rel((&ap * &a - &a).norm(), a.norm()))
            .max(rel((&pa * p - p).norm(), p.norm()))
            .max(rel((ap.transpose() - &ap).norm(), ap.norm()))
            .max(rel((pa.transpose() - &pa).norm(), pa.norm()));
    }
    outcome(
        worst <= 1e-10,
        format!("1000 matrices ({deficient} rank-deficient), max relative MP error = {worst:.2e} (tol 1e-10)"),
    )
}

fn random_seq(rng: &mut ChaCha8Rng) -> EpSequence {
    let dim = rng.random_range(1..=6);
    let n = rng.random_range(1..=40);
    let frames = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    EpSequence::new("f", "x", EpKind::Bep, frames).unwrap()
}

fn summarizer_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let unit = PMeansConfig::new(vec![1]).unwrap();
    let mut mismatches = 0;
    let mut worst_energy: f64 = 0.0;
    let mut misordered = 0;
    for _ in 0..10_000 {
        let seq = random_seq(&mut rng);
        if p_means(&seq, &unit).values != average(&seq).values {
            mismatches += 1;
        }
        let n = seq.len();
        let coeffs = dct_summary(&seq, DctConfig::new(n).unwrap()).values;
        for j in 0..seq.dim() {
            let sig: f64 = seq.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
            let dct: f64 = coeffs[j * n..(j + 1) * n]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            worst_energy = worst_energy.max((sig - dct).abs() / sig.max(1.0));
        }
        let f = functionals(&seq).values;
        for g in f.chunks(6) {
            if !(g[1] <= g[2] && g[2] <= g[3] && g[3] <= g[4] && g[4] <= g[5]) {
                misordered += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && worst_energy <= 1e-10 && misordered == 0,
        format!(
            "10000 inputs: p1!=avg {mismatches}, max DCT energy rel err {worst_energy:.2e}, functional order violations {misordered}"
        ),
    )
}

fn metrics_criterion() -> Outcome {
    let (wa, ua) = metrics(&[vec![9, 1], vec![2, 3]]).unwrap();
    let exact = wa == 0.8 && ua == 0.75;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..8);
        let per = rng.random_range(1..100u64);
        let confusion: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                let mut row = vec![0u64; k];
                for _ in 0..per {
                    row[rng.random_range(0..k)] += 1;
                }
                row
            })
            .collect();
        let (wa, ua) = metrics(&confusion).unwrap();
        worst = worst.max((wa - ua).abs());
    }
    outcome(
        exact && worst <= 1e-12,
        format!(
            "[[9,1],[2,3]] -> WA {wa}, UA {ua}; 1000 balanced matrices max |WA-UA| = {worst:.2e}"
        ),
    )
}

fn benchmark_discrimination() -> Outcome {
    let (eep, bep) = generate(&default_benchmark()).unwrap();
    let dmd = Method::Dmd {
        d: OrderSet::up_to(2).unwrap(),
    };
    let cell = |method: Method, ep, avg| Cell { method, ep, avg };
    let cells = vec![
        cell(dmd.clone(), EpChoice::Bep, false),
        cell(Method::Avg, EpChoice::Bep, false),
        cell(dmd.clone(), EpChoice::Bep, true),
        cell(dmd.clone(), EpChoice::Eep, false),
        cell(Method::Avg, EpChoice::Eep, false),
        cell(dmd, EpChoice::Eep, true),
    ];
    let cfg = ExperimentConfig::from_cells(cells);
    let reports = run_experiment(&cfg, &eep, &bep).unwrap();
    let ua: Vec<f64> = reports.iter().map(|r| r.report.ua).collect();
    let (dmd_ua, avg_ua, both_ua) = (ua[0], ua[1], ua[2]);
    let ok = dmd_ua >= 0.60 && both_ua >= dmd_ua.max(avg_ua) - 0.02;
    outcome(
        ok,
        format!(
            "BEP UA: DMD[1-2] {dmd_ua:.4} (>= 0.60), AVG {avg_ua:.4}, DMD⊕AVG {both_ua:.4} (>= {:.4}); \
             EEP UA (info): DMD {:.4}, AVG {:.4}, DMD⊕AVG {:.4}",
            dmd_ua.max(avg_ua) - 0.02,
            ua[3],
            ua[4],
            ua[5]
        ),
    )
}

fn run_cli(dir: &Path, jobs: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_eigenemo"))
        .current_dir(dir)
        .args(args)
        .args(["--seed", "42", "--jobs", jobs])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

const PIPELINE_OUTPUTS: [&str; 6] = [
    "eep.jsonl",
    "bep.jsonl",
    "reps.jsonl",
    "report.json",
    "table.txt",
    "confusion.csv",
];

fn pipeline(jobs: &str) -> Option<Vec<Vec<u8>>> {
    let dir = tempfile::tempdir().ok()?;
    let grid = r#"{"cells": [
        {"method": "dmd", "d": [1, 2], "ep": "eep+bep", "avg": true},
        {"method": "pmeans", "powers": [1, 2], "ep": "bep"},
        {"method": "dct", "k": 3, "ep": "eep"}
    ]}"#;
    std::fs::write(dir.path().join("grid.json"), grid).ok()?;
    let steps: [&[&str]; 4] = [
        &["synth", "--out-eep", "eep.jsonl", "--out-bep", "bep.jsonl"],
        &[
            "summarize",
            "--method",
            "dmd",
            "--d",
            "1,2",
            "--input",
            "eep.jsonl",
            "--output",
            "reps.jsonl",
        ],
        &[
            "eval",
            "--grid",
            "grid.json",
            "--eep",
            "eep.jsonl",
            "--bep",
            "bep.jsonl",
            "--out",
            "report.json",
            "--table",
            "table.txt",
        ],
        &[
            "report",
            "--input",
            "report.json",
            "--confusion",
            "confusion.csv",
        ],
    ];
    for step in steps {
        if !run_cli(dir.path(), jobs, step) {
            return None;
        }
    }
    PIPELINE_OUTPUTS
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).ok())
        .collect()
}

fn determinism() -> Outcome {
    let (a, b, c) = (pipeline("1"), pipeline("1"), pipeline("8"));
    match (a, b, c) {
        (Some(a), Some(b), Some(c)) => {
            let differing: Vec<&str> = PIPELINE_OUTPUTS
                .iter()
                .enumerate()
                .filter(|(i, _)| a[*i] != b[*i] || a[*i] != c[*i])
                .map(|(_, f)| *f)
                .collect();
            let bytes: usize = a.iter().map(Vec::len).sum();
            outcome(
                differing.is_empty(),
                format!(
                    "3 runs (jobs 1, 1, 8), {} files / {bytes} bytes, differing: {differing:?}",
                    a.len()
                ),
            )
        }
        _ => outcome(false, "pipeline command failed"),
    }
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("DMD exactness", Some(Duration::from_secs(1)), dmd_exactness),
        (
            "Delay-embedding recovery",
            Some(Duration::from_secs(1)),
            delay_embedding,
        ),
        (
            "Pseudoinverse",
            Some(Duration::from_secs(10)),
            pinv_conditions,
        ),
        ("Summarizer identities", None, summarizer_identities),
        ("Metrics", None, metrics_criterion),
        (
            "Synthetic benchmark discrimination",
            Some(Duration::from_secs(120)),
            benchmark_discrimination,
        ),
        ("Determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let o = timed(budget, f);
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
