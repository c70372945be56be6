//! `matpencil` — matrix-pencil classification experiments on MNIST, pattern
//! transformation, and invariant-basis analysis.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use matpencil::{parse_blocks, Block, Error, PencilRoute, ProjectionKind, Result};
use matpencil_cli::{
    default_binary_specs, default_multiclass_specs, emit_report, render_report, run_binary,
    run_invariant, run_multiclass, run_transform, CenteringMode, ExperimentConfig, InvariantKind,
    InvariantOptions, ReportFormat, ReportRow, TransformOptions,
};

#[derive(Parser)]
#[command(
    name = "matpencil",
    about = "Differential-information classification with matrix pencils",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Binary classification over MNIST digit pairs.
    ///
    /// Feature specs follow the block syntax `pencil(target|reference)` and
    /// `eig(label)`, joined with `;`. In `pencil(t|r)`, the target class
    /// contributes the left-hand covariance of the pencil and the reference
    /// class the right-hand one, so `--classes 1,0 --features
    /// "pencil(0|1);eig(1)"` projects onto the pencil of class 0 over
    /// reference class 1 augmented with class 1's eigenbasis.
    Binary(BinaryArgs),
    /// Multiclass classification over digit triples with pooled references,
    /// e.g. `--features "pencil(0|pool(2,8));eig(pool(2,8))"`.
    Multiclass(MulticlassArgs),
    /// Transform patterns of one class into another and render PGM images.
    Transform(TransformArgs),
    /// Build a transformation-independent basis for a random signal and
    /// report how diagonal the coefficient Gram matrix is.
    Invariant(InvariantArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Directory with the four MNIST IDX files (plain or .gz).
    #[arg(long)]
    data_dir: PathBuf,
    /// Neighbours consulted by the k-NN classifier.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Relative ridge added to covariance diagonals.
    #[arg(long, default_value_t = 1e-3)]
    ridge: f64,
    /// Per-class training subsample size; 0 uses the full split.
    #[arg(long, default_value_t = 0)]
    subsample: usize,
    /// Seed for the subsampling stream.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Pencil reduction route.
    #[arg(long, value_enum, default_value_t = RouteArg::Cholesky)]
    route: RouteArg,
    /// Feature centering rule.
    #[arg(long, value_enum, default_value_t = CenteringArg::Pooled)]
    centering: CenteringArg,
    /// Optional per-block energy truncation in (0, 1].
    #[arg(long)]
    energy: Option<f64>,
    /// Project through the reference covariance instead of the plain inner
    /// product.
    #[arg(long)]
    b_weighted: bool,
    /// Write the report to this file (.csv or .md).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BinaryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Digit pair "c1,c2"; repeatable for several pairs.
    #[arg(long, required = true)]
    classes: Vec<String>,
    /// Feature spec; repeatable. Defaults to the four standard feature sets
    /// per pair.
    #[arg(long)]
    features: Vec<String>,
}

#[derive(Args)]
struct MulticlassArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Digit triple "c1,c2,c3"; repeatable.
    #[arg(long, required = true)]
    classes: Vec<String>,
    /// Feature spec; repeatable. Defaults to the pooled-reference feature
    /// sets per triple.
    #[arg(long)]
    features: Vec<String>,
}

#[derive(Args)]
struct TransformArgs {
    /// Directory with the four MNIST IDX files (plain or .gz).
    #[arg(long)]
    data_dir: PathBuf,
    /// Source class.
    #[arg(long)]
    from: u8,
    /// Target class.
    #[arg(long)]
    to: u8,
    /// Test samples to transform.
    #[arg(long, default_value_t = 4)]
    count: usize,
    /// Patterns to generate from white noise.
    #[arg(long, default_value_t = 0)]
    noise: usize,
    #[arg(long, default_value = "transform-out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    ridge: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Skip subtracting/restoring class means around the transformation.
    #[arg(long)]
    no_means: bool,
}

#[derive(Args)]
struct InvariantArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Shift1d)]
    kind: KindArg,
    /// Signal length for 1-D shifts.
    #[arg(long, default_value_t = 32)]
    length: usize,
    /// Grid rows for 2-D translations.
    #[arg(long, default_value_t = 8)]
    rows: usize,
    /// Grid columns for 2-D translations.
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Energy kept when the correlation matrix is ill-conditioned.
    #[arg(long, default_value_t = 0.95)]
    energy: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Cholesky,
    Whitening,
}

#[derive(Clone, Copy, ValueEnum)]
enum CenteringArg {
    None,
    Pooled,
    Reference,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Shift1d,
    Translate2d,
}

fn experiment_config(common: &CommonArgs) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(&common.data_dir);
    cfg.k = common.k;
    cfg.ridge = common.ridge;
    cfg.subsample = common.subsample;
    cfg.seed = common.seed;
    cfg.route = match common.route {
        RouteArg::Cholesky => PencilRoute::Cholesky,
        RouteArg::Whitening => PencilRoute::Whitening,
    };
    cfg.centering = match common.centering {
        CenteringArg::None => CenteringMode::None,
        CenteringArg::Pooled => CenteringMode::Pooled,
        CenteringArg::Reference => CenteringMode::Reference,
    };
    cfg.energy = common.energy;
    cfg.projection = if common.b_weighted {
        ProjectionKind::BWeighted
    } else {
        ProjectionKind::Euclidean
    };
    cfg
}

fn parse_class_list(text: &str, expected: usize) -> Result<Vec<u8>> {
    let ids: Vec<u8> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .map_err(|_| Error::ConfigError(format!("invalid class id {s:?}")))
        })
        .collect::<Result<_>>()?;
    if ids.len() != expected {
        return Err(Error::ConfigError(format!(
            "expected {expected} comma-separated classes, got {text:?}"
        )));
    }
    Ok(ids)
}

fn parse_feature_args(features: &[String]) -> Result<Vec<Vec<Block>>> {
    features.iter().map(|f| parse_blocks(f)).collect()
}

fn finish_report(rows: &[ReportRow], report: &Option<PathBuf>) -> Result<()> {
    print!("{}", render_report(rows, ReportFormat::Markdown)?);
    if let Some(path) = report {
        let format = ReportFormat::from_path(path)?;
        emit_report(rows, format, path)?;
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Binary(args) => {
            let cfg = experiment_config(&args.common);
            let custom = parse_feature_args(&args.features)?;
            let mut rows = Vec::new();
            for pair_text in &args.classes {
                let ids = parse_class_list(pair_text, 2)?;
                let specs = if custom.is_empty() {
                    default_binary_specs(ids[0], ids[1])
                } else {
                    custom.clone()
                };
                rows.extend(run_binary(&cfg, ids[0], ids[1], &specs)?);
            }
            finish_report(&rows, &args.common.report)
        }
        Command::Multiclass(args) => {
            let cfg = experiment_config(&args.common);
            let custom = parse_feature_args(&args.features)?;
            let mut rows = Vec::new();
            for triple_text in &args.classes {
                let ids = parse_class_list(triple_text, 3)?;
                let specs = if custom.is_empty() {
                    default_multiclass_specs(ids[0], ids[1], ids[2])
                } else {
                    custom.clone()
                };
                rows.extend(run_multiclass(&cfg, [ids[0], ids[1], ids[2]], &specs)?);
            }
            finish_report(&rows, &args.common.report)
        }
        Command::Transform(args) => {
            let mut cfg = ExperimentConfig::new(&args.data_dir);
            cfg.ridge = args.ridge;
            cfg.seed = args.seed;
            let summary = run_transform(
                &cfg,
                &TransformOptions {
                    from: args.from,
                    to: args.to,
                    count: args.count,
                    noise: args.noise,
                    out_dir: args.out_dir,
                    use_means: !args.no_means,
                },
            )?;
            println!(
                "transport_rel_frobenius: {:.6}",
                summary.transport_rel_frobenius
            );
            println!("from_condition: {:.3e}", summary.from_condition);
            println!("to_condition: {:.3e}", summary.to_condition);
            println!("files_written: {}", summary.files.len());
            for f in &summary.files {
                println!("  {}", f.display());
            }
            Ok(())
        }
        Command::Invariant(args) => {
            let report = run_invariant(&InvariantOptions {
                kind: match args.kind {
                    KindArg::Shift1d => InvariantKind::Shift1d,
                    KindArg::Translate2d => InvariantKind::Translate2d,
                },
                length: args.length,
                rows: args.rows,
                cols: args.cols,
                energy: args.energy,
                seed: args.seed,
            })?;
            println!("signal_len: {}", report.signal_len);
            println!("transform_count: {}", report.transform_count);
            println!("condition_ratio: {:.4e}", report.condition_ratio);
            println!("truncated: {}", report.truncated);
            println!("retained_eigencount: {}", report.retained);
            println!("raw_offdiag_ratio: {:.4e}", report.raw_offdiag_ratio);
            println!(
                "normalized_offdiag_ratio: {:.4e}",
                report.normalized_offdiag_ratio
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
