//! `fgc` — discover compressing substructures in a SMILES corpus, fingerprint
//! molecules against a saved codebook, and benchmark feature tables with
//! ridge regression.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/runtime error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use fgc_core::eval::{
    benjamini_hochberg, run_benchmark, wilcoxon_signed_rank, EvalError, LabeledTable,
    RegressionReport, DEFAULT_ALPHAS, DEFAULT_REPEATS,
};
use fgc_core::fingerprint::{fingerprint_corpus, write_fingerprint_csv, MatchMode};
use fgc_core::io::{corpus_fingerprint, load_codebook, load_corpus, save_codebook};
use fgc_core::search::{fgcompress, SearchConfig};
use fgc_core::{LogStarMode, SearchState};

#[derive(Parser)]
#[command(name = "fgc", version, about = "Functional-group discovery by MML compression over SMILES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover a compressing codebook from a SMILES corpus (one per line)
    Compress(CompressArgs),
    /// Count-fingerprint a corpus against a saved codebook, as CSV
    Fingerprint(FingerprintArgs),
    /// Benchmark feature tables with ridge regression and report JSON
    Eval(EvalArgs),
    /// Symbol frequency table and the symbol-only baseline message length
    Stats(StatsArgs),
}

#[derive(Args)]
struct CompressArgs {
    /// Input corpus, one SMILES per line
    #[arg(long)]
    input: PathBuf,
    /// Output codebook (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Longest candidate window in tokens
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    /// Iteration cap
    #[arg(long, default_value_t = 500)]
    iters: usize,
    /// Minimum occurrences for a candidate to be considered (1 disables pruning)
    #[arg(long, default_value_t = 2)]
    min_count: u64,
    /// Integer code for lengths: "rissanen" or "simple"
    #[arg(long, default_value = "rissanen")]
    logstar: LogStarMode,
    /// Worker pool size (falls back to FGC_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Write the per-iteration trace as TSV
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FingerprintArgs {
    /// Saved codebook (JSON)
    #[arg(long)]
    codebook: PathBuf,
    /// Input corpus, one SMILES per line
    #[arg(long)]
    input: PathBuf,
    /// Output CSV
    #[arg(long)]
    out: PathBuf,
    /// Count every matching window (default)
    #[arg(long, overrides_with = "no_overlap")]
    overlap: bool,
    /// Count leftmost non-overlapping matches instead
    #[arg(long)]
    no_overlap: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Feature CSV (repeat the flag for multiple datasets)
    #[arg(long, required = true)]
    features: Vec<PathBuf>,
    /// Target CSV with a "smiles" column and a numeric target column
    #[arg(long, required = true)]
    targets: Vec<PathBuf>,
    /// Baseline feature CSV per dataset, for paired comparison
    #[arg(long)]
    baseline: Vec<PathBuf>,
    /// Dataset labels (defaults to feature file stems)
    #[arg(long)]
    names: Vec<String>,
    /// Name of the target column
    #[arg(long, default_value = "target")]
    target_col: String,
    /// Alpha grid for LOOCV selection
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report (JSON)
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// Input corpus, one SMILES per line
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "rissanen")]
    logstar: LogStarMode,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version are successful exits, not usage errors.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compress(args) => run_compress(args),
        Command::Fingerprint(args) => run_fingerprint(args),
        Command::Eval(args) => run_eval(args),
        Command::Stats(args) => run_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if err
                .downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
            {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("FGC_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn run_compress(args: CompressArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)
        .with_context(|| format!("reading corpus {}", args.input.display()))?;
    log::info!(
        "{} molecules ({} duplicates removed, {} lines skipped)",
        corpus.molecules.len(),
        corpus.duplicates_removed,
        corpus.skipped.len()
    );
    let config = SearchConfig {
        max_len: args.max_len,
        max_iters: args.iters,
        min_count: args.min_count,
        logstar_mode: args.logstar,
        seed: args.seed,
        threads: resolve_threads(args.threads),
    };
    let outcome = fgcompress(&corpus.molecules, &config).context("compression failed")?;
    let fingerprint = corpus_fingerprint(&corpus.molecules);
    save_codebook(
        &outcome.codebook,
        &outcome.symbol_table,
        args.logstar,
        &fingerprint,
        &args.out,
    )
    .with_context(|| format!("writing codebook {}", args.out.display()))?;

    if let Some(trace_path) = &args.trace {
        let mut w = BufWriter::new(File::create(trace_path)?);
        outcome.trace.write_tsv(&mut w)?;
    }

    let initial = outcome.trace.initial.total;
    let final_total = outcome.trace.final_total.total;
    println!(
        "{} entries in {} iterations; {:.1} -> {:.1} bits ({:.1}% of baseline)",
        outcome.codebook.len(),
        outcome.trace.rows.len(),
        initial,
        final_total,
        100.0 * final_total / initial.max(f64::MIN_POSITIVE),
    );
    Ok(())
}

fn run_fingerprint(args: FingerprintArgs) -> Result<()> {
    let loaded = load_codebook(&args.codebook)
        .with_context(|| format!("reading codebook {}", args.codebook.display()))?;
    let corpus = load_corpus(&args.input)
        .with_context(|| format!("reading corpus {}", args.input.display()))?;
    let mode = if args.no_overlap {
        MatchMode::NonOverlapping
    } else {
        MatchMode::Overlapping
    };
    let threads = resolve_threads(args.threads);
    let batch = fgc_core::with_thread_limit(threads, || {
        fingerprint_corpus(&corpus.molecules, &loaded.codebook, mode)
    });
    for (row, err) in &batch.skipped {
        log::warn!("molecule {row}: {err}");
    }
    let mut w = BufWriter::new(File::create(&args.out)?);
    write_fingerprint_csv(&mut w, &loaded.codebook, &batch.fingerprints)?;
    w.flush()?;
    println!(
        "{} molecules x {} entries -> {}",
        batch.fingerprints.len(),
        loaded.codebook.len(),
        args.out.display()
    );
    Ok(())
}

fn read_features_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let width = reader.headers()?.len();
    let mut cells: Vec<f64> = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        if record.len() != width {
            bail!(
                "{}: row {} has {} cells, header has {width}",
                path.display(),
                rows + 2,
                record.len()
            );
        }
        for field in record.iter() {
            cells.push(
                field
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}: bad numeric cell {field:?}", path.display()))?,
            );
        }
        rows += 1;
    }
    if rows == 0 {
        bail!("{}: no data rows", path.display());
    }
    Ok(DMatrix::from_row_slice(rows, width, &cells))
}

fn read_targets_csv(path: &Path, target_col: &str) -> Result<(Vec<String>, DVector<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let smiles_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("smiles"))
        .with_context(|| format!("{}: no \"smiles\" column", path.display()))?;
    let target_idx = headers
        .iter()
        .position(|h| h == target_col)
        .with_context(|| format!("{}: no {target_col:?} column", path.display()))?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        ids.push(record.get(smiles_idx).unwrap_or_default().to_owned());
        let raw = record.get(target_idx).unwrap_or_default();
        values.push(
            raw.trim()
                .parse::<f64>()
                .with_context(|| format!("{}: bad target value {raw:?}", path.display()))?,
        );
    }
    if ids.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok((ids, DVector::from_vec(values)))
}

fn dataset_name(names: &[String], index: usize, features: &Path) -> String {
    names.get(index).cloned().unwrap_or_else(|| {
        features
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("dataset{index}"))
    })
}

fn report_json(report: &RegressionReport) -> serde_json::Value {
    json!({
        "mean_mse": report.mean_mse,
        "stderr": report.std_error,
        "alphas": report.chosen_alphas,
        "per_repeat": report.per_repeat_mse,
    })
}

fn run_eval(args: EvalArgs) -> Result<()> {
    if args.targets.len() != args.features.len() {
        bail!(
            "{} feature files but {} target files",
            args.features.len(),
            args.targets.len()
        );
    }
    if !args.baseline.is_empty() && args.baseline.len() != args.features.len() {
        bail!(
            "{} baseline files but {} feature files",
            args.baseline.len(),
            args.features.len()
        );
    }
    let alphas = args.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let threads = resolve_threads(args.threads);

    struct DatasetOutcome {
        name: String,
        report: RegressionReport,
        baseline: Option<RegressionReport>,
    }

    let mut outcomes: Vec<DatasetOutcome> = Vec::new();
    for (i, features_path) in args.features.iter().enumerate() {
        let name = dataset_name(&args.names, i, features_path);
        let features = read_features_csv(features_path)?;
        let (ids, target) = read_targets_csv(&args.targets[i], &args.target_col)?;
        if features.nrows() != target.len() {
            bail!(
                "dataset {name}: {} feature rows but {} targets",
                features.nrows(),
                target.len()
            );
        }
        let table = LabeledTable::new(features, target.clone(), ids.clone())?;
        let report = fgc_core::with_thread_limit(threads, || {
            run_benchmark(&table, args.repeats, args.seed, &alphas)
        })?;
        let baseline = match args.baseline.get(i) {
            None => None,
            Some(baseline_path) => {
                let baseline_features = read_features_csv(baseline_path)?;
                if baseline_features.nrows() != table.rows() {
                    bail!("dataset {name}: baseline row count differs");
                }
                let baseline_table = LabeledTable::new(baseline_features, target, ids)?;
                Some(fgc_core::with_thread_limit(threads, || {
                    run_benchmark(&baseline_table, args.repeats, args.seed, &alphas)
                })?)
            }
        };
        outcomes.push(DatasetOutcome {
            name,
            report,
            baseline,
        });
    }

    let mut datasets = Vec::new();
    let mut per_dataset_p: Vec<(usize, f64)> = Vec::new();
    for (i, outcome) in outcomes.iter().enumerate() {
        let mut entry = json!({
            "dataset": outcome.name,
        });
        let obj = entry.as_object_mut().unwrap();
        for (key, value) in report_json(&outcome.report).as_object().unwrap() {
            obj.insert(key.clone(), value.clone());
        }
        if let Some(baseline) = &outcome.baseline {
            obj.insert("baseline".into(), report_json(baseline));
            // Paired Wilcoxon over per-repeat MSEs when enough repeats exist.
            match wilcoxon_signed_rank(&outcome.report.per_repeat_mse, &baseline.per_repeat_mse) {
                Ok(p) => {
                    obj.insert("wilcoxon_p".into(), json!(p));
                    per_dataset_p.push((i, p));
                }
                Err(EvalError::TooFewPairs { .. }) => {
                    obj.insert("wilcoxon_p".into(), serde_json::Value::Null);
                }
                Err(err) => return Err(err.into()),
            }
        }
        datasets.push(entry);
    }

    // Cross-dataset comparison: BH over the per-dataset p-values, plus one
    // signed-rank test pairing mean MSEs across datasets when possible.
    let mut comparison = serde_json::Map::new();
    if !per_dataset_p.is_empty() {
        let raw: Vec<f64> = per_dataset_p.iter().map(|&(_, p)| p).collect();
        let rejected = benjamini_hochberg(&raw, 0.05);
        for (slot, &(idx, _)) in per_dataset_p.iter().enumerate() {
            datasets[idx]
                .as_object_mut()
                .unwrap()
                .insert("bh_rejected".into(), json!(rejected[slot]));
        }
    }
    if outcomes.iter().all(|o| o.baseline.is_some()) && outcomes.len() >= 6 {
        let main: Vec<f64> = outcomes.iter().map(|o| o.report.mean_mse).collect();
        let base: Vec<f64> = outcomes
            .iter()
            .map(|o| o.baseline.as_ref().unwrap().mean_mse)
            .collect();
        match wilcoxon_signed_rank(&main, &base) {
            Ok(p) => {
                comparison.insert("cross_dataset_wilcoxon_p".into(), json!(p));
                comparison.insert(
                    "cross_dataset_bh_rejected".into(),
                    json!(benjamini_hochberg(&[p], 0.05)[0]),
                );
            }
            Err(EvalError::TooFewPairs { .. }) => {}
            Err(err) => return Err(err.into()),
        }
    }

    let report = json!({
        "repeats": args.repeats,
        "seed": args.seed,
        "alpha_grid": alphas,
        "datasets": datasets,
        "comparison": if comparison.is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::Value::Object(comparison)
        },
    });
    let mut w = BufWriter::new(File::create(&args.out)?);
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)
        .with_context(|| format!("reading corpus {}", args.input.display()))?;
    let config = SearchConfig {
        logstar_mode: args.logstar,
        ..SearchConfig::default()
    };
    let state = SearchState::new(&corpus.molecules, &config)?;
    let mut rows: Vec<(String, f64)> = state
        .symbol_table()
        .iter()
        .map(|(s, p)| (s.to_owned(), p))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "symbol\tprobability")?;
    for (symbol, p) in rows {
        writeln!(out, "{symbol}\t{p:.6}")?;
    }
    let baseline = state.total();
    writeln!(out)?;
    writeln!(out, "molecules\t{}", corpus.molecules.len())?;
    writeln!(out, "distinct_symbols\t{}", state.symbol_table().len())?;
    writeln!(out, "baseline_p1_bits\t{:.6}", baseline.p1)?;
    writeln!(out, "baseline_p2_bits\t{:.6}", baseline.p2)?;
    writeln!(out, "baseline_p3_bits\t{:.6}", baseline.p3)?;
    writeln!(out, "baseline_total_bits\t{:.6}", baseline.total)?;
    Ok(())
}
