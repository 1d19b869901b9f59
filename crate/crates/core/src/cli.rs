//! `eigenemo` command line: `synth`, `summarize`, `eval`, `report`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::dmd::OrderSet;
use crate::ep::{self, EpKind, Representation};
use crate::error::{Error, Result};
use crate::eval::report::{render_confusion_csv, render_table, ExperimentReport};
use crate::eval::{run_experiment, ExperimentConfig};
use crate::io::write_atomic;
use crate::summarize::{self, DctConfig, Method, PMeansConfig};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "eigenemo",
    version,
    about = "Dynamic-mode utterance representations for emotion profiles"
)]
pub struct Cli {
    /// Overrides the seed of the config in use.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = one per core). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodName {
    Avg,
    Pmeans,
    Functionals,
    Dct,
    Dmd,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a paired synthetic EEP/BEP corpus.
    Synth {
        /// JSON synthesis config; the built-in benchmark when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_eep: PathBuf,
        #[arg(long)]
        out_bep: PathBuf,
    },
    /// Summarize every utterance of a dataset into a fixed-length vector.
    Summarize {
        #[arg(long, value_enum)]
        method: MethodName,
        /// Power-mean exponents, e.g. `1,2,3` or `1-6`.
        #[arg(long)]
        powers: Option<String>,
        /// DCT coefficients kept per dimension.
        #[arg(long)]
        k: Option<usize>,
        /// DMD order parameters, e.g. `1,2,6` or `1-3`.
        #[arg(long)]
        d: Option<String>,
        /// Append the frame average to each representation.
        #[arg(long)]
        avg: bool,
        #[arg(long)]
        input: PathBuf,
        /// Profile kind of the input; read from the file when omitted.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cross-validate a grid of summarizers on paired EEP/BEP corpora.
    Eval {
        /// Experiment config JSON.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        grid: Option<PathBuf>,
        /// Built-in grid: pmeans, dct, dmd or comparison.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        eep: PathBuf,
        #[arg(long)]
        bep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the rendered table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Render an eval report as an aligned table and confusion-matrix CSV.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Table output; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
}

/// Parses `1,2,6` and ranges such as `1-3` into an ascending list.
pub fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| format!("bad range {part:?}"))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| format!("bad range {part:?}"))?;
            if a > b {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad number {part:?}"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn build_method(
    name: MethodName,
    powers: Option<&str>,
    k: Option<usize>,
    d: Option<&str>,
) -> std::result::Result<Method, Failure> {
    let need =
        |flag: &str| Failure::Usage(format!("--method {name:?} requires --{flag}").to_lowercase());
    Ok(match name {
        MethodName::Avg => Method::Avg,
        MethodName::Functionals => Method::Functionals,
        MethodName::Pmeans => {
            let list = parse_list(powers.ok_or_else(|| need("powers"))?).map_err(Failure::Usage)?;
            let list = list.into_iter().map(|p| p as u32).collect();
            Method::Pmeans {
                powers: PMeansConfig::new(list)?,
            }
        }
        MethodName::Dct => Method::Dct {
            k: DctConfig::new(k.ok_or_else(|| need("k"))?)?,
        },
        MethodName::Dmd => {
            let list = parse_list(d.ok_or_else(|| need("d"))?).map_err(Failure::Usage)?;
            Method::Dmd {
                d: OrderSet::from_values(&list)?,
            }
        }
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Synth {
            config,
            out_eep,
            out_bep,
        } => {
            let mut cfg: SynthConfig = match &config {
                Some(p) => read_json(p)?,
                None => synth::default_benchmark(),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let (eep, bep) = synth::generate(&cfg)?;
            eep.save(&out_eep)?;
            bep.save(&out_bep)?;
            eprintln!(
                "wrote {} utterances to {} and {}",
                eep.len(),
                out_eep.display(),
                out_bep.display()
            );
        }
        Command::Summarize {
            method,
            powers,
            k,
            d,
            avg,
            input,
            kind,
            output,
        } => {
            let method = build_method(method, powers.as_deref(), k, d.as_deref())?;
            let kind = match kind {
                Some(k) => k.parse::<EpKind>()?,
                None => ep::detect_kind(&input)?,
            };
            let dataset = ep::load_dataset(&input, kind)?;
            let min_frames = method.min_frames();
            let results: Vec<Option<Representation>> = dataset
                .sequences()
                .par_iter()
                .map(|seq| {
                    if seq.len() < min_frames {
                        return Ok(None);
                    }
                    let rep = method.summarize(seq)?;
                    if avg {
                        summarize::concat(&[rep, summarize::average(seq)]).map(Some)
                    } else {
                        Ok(Some(rep))
                    }
                })
                .collect::<Result<_>>()?;
            let skipped: Vec<&str> = dataset
                .sequences()
                .iter()
                .zip(&results)
                .filter(|(_, r)| r.is_none())
                .map(|(s, _)| s.id.as_str())
                .collect();
            if !skipped.is_empty() {
                eprintln!(
                    "skipped {} utterances shorter than {min_frames} frames: {}",
                    skipped.len(),
                    skipped.join(", ")
                );
            }
            let reps: Vec<Representation> = results.into_iter().flatten().collect();
            ep::save_representations(&reps, &output)?;
            eprintln!(
                "wrote {} representations to {}",
                reps.len(),
                output.display()
            );
        }
        Command::Eval {
            grid,
            preset,
            eep,
            bep,
            out,
            table,
        } => {
            let mut cfg: ExperimentConfig = match (&grid, &preset) {
                (Some(p), _) => read_json(p)?,
                (None, Some(name)) => ExperimentConfig::preset(name)?,
                (None, None) => {
                    return Err(Failure::Usage(
                        "one of --grid or --preset is required".into(),
                    ))
                }
            };
            if let Some(seed) = cli.seed {
                cfg.cv.seed = seed;
                cfg.forest.seed = seed;
            }
            let eep = ep::load_dataset(&eep, EpKind::Eep)?;
            let bep = ep::load_dataset(&bep, EpKind::Bep)?;
            let report = ExperimentReport {
                cells: run_experiment(&cfg, &eep, &bep)?,
            };
            write_json(&out, &report)?;
            let rendered = render_table(&report);
            match &table {
                Some(p) => write_atomic(p, rendered.as_bytes())?,
                None => eprint!("{rendered}"),
            }
        }
        Command::Report {
            input,
            out,
            confusion,
        } => {
            let report: ExperimentReport = read_json(&input)?;
            let rendered = render_table(&report);
            match &out {
                Some(p) => write_atomic(p, rendered.as_bytes())?,
                None => print!("{rendered}"),
            }
            if let Some(p) = &confusion {
                write_atomic(p, render_confusion_csv(&report).as_bytes())?;
            }
        }
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code: 0 success, 2 usage,
/// 3 invalid data or config, 4 numeric failure, 1 I/O.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
