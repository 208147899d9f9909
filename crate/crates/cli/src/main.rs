//! The `wsnet` binary: train / sweep / ablate / gen-synth / eval over
//! dataset directories, writing JSON + CSV reports and checkpoints under
//! `--out`. Exit codes: 0 success, 2 invalid configuration, 3 training
//! divergence, 1 other failures. Everything runs on one thread.

use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wsnet_cli::dataset::{load_dataset, save_dataset, MetaFile};
use wsnet_cli::error::CliError;
use wsnet_cli::report::{
    ablation_csv, curves_csv, sweep_csv, write_json, write_text, AblationReportFile,
    EvalReportFile, GenManifestFile, SweepReportFile, TrainReportFile,
};
use wsnet_cli::{config, Result};
use wsnet_core::checkpoint::Checkpoint;
use wsnet_core::pipeline::{
    ablate, evaluate, generate_sbm, noise_sweep, run_experiment_detailed, SbmConfig,
};
use wsnet_core::rng::derive_seed;
use wsnet_core::weak::generate_synthetic_lfs;
use wsnet_core::{CoreError, LfSynthConfig};

#[derive(Parser)]
#[command(
    name = "wsnet",
    version,
    about = "Weakly supervised graph contrastive learning: training, noise sweeps, \
             ablations, synthetic benchmarks, and checkpoint evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated protocol on a dataset; write report.json,
    /// per-fold curve CSVs, and per-fold checkpoints.
    Train(CommonArgs),
    /// Regenerate labeling functions at several accuracies and compare
    /// against the majority-vote baseline.
    Sweep(SweepArgs),
    /// Run the seven loss-component configurations (full, each removed,
    /// each alone).
    Ablate(CommonArgs),
    /// Generate a synthetic block-model dataset with labeling functions.
    GenSynth(GenSynthArgs),
    /// Score a saved checkpoint on a labeled dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset directory (edges.tsv, features.csv, lfs.csv, labels.txt, meta).
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides the configuration's [protocol] seed.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory for reports and checkpoints (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated labeling accuracies in (0, 1], e.g. 0.1,0.3,0.5.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pa_list: Vec<f64>,
}

#[derive(Args)]
struct GenSynthArgs {
    /// Number of nodes.
    #[arg(long, value_name = "INT", default_value_t = 300)]
    n_nodes: usize,
    /// Number of balanced classes.
    #[arg(long, value_name = "INT", default_value_t = 3)]
    classes: usize,
    /// Within-class edge probability.
    #[arg(long, value_name = "FLOAT", default_value_t = 0.10)]
    p_in: f64,
    /// Cross-class edge probability.
    #[arg(long, value_name = "FLOAT", default_value_t = 0.01)]
    p_out: f64,
    /// Number of labeling functions.
    #[arg(long, value_name = "INT", default_value_t = 10)]
    m: usize,
    /// Probability a cast vote equals the true label.
    #[arg(long, value_name = "FLOAT", default_value_t = 0.8)]
    pa: f64,
    /// Probability a labeling function votes rather than abstains.
    #[arg(long, value_name = "FLOAT", default_value_t = 0.7)]
    coverage: f64,
    /// TOML configuration file ([synth] noise_sigma, [protocol] seed).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides the configuration's [protocol] seed.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Directory the dataset files are written into.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint file produced by `train` (fold<K>.ckpt).
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn cmd_train(a: &CommonArgs) -> Result<()> {
    let (cfg, _) = config::load_config(a.config.as_deref(), a.seed)?;
    let bundle = load_dataset(&a.data)?;
    let wlm = bundle.require_wlm()?;
    let y = bundle.require_labels()?;
    let (run, params) = run_experiment_detailed(&bundle.graph, wlm, y, &cfg)?;
    ensure_out(&a.out)?;
    for (fold, (fold_report, fold_params)) in run.folds.iter().zip(&params).enumerate() {
        write_text(
            &a.out.join(format!("curves_fold{fold}.csv")),
            &curves_csv(&fold_report.curves),
        )?;
        let ckpt = Checkpoint {
            config_hash: run.config_hash.clone(),
            epoch: fold_report.best_epoch as u64,
            params: fold_params.clone(),
            optimizer: None,
        };
        ckpt.save(&a.out.join(format!("fold{fold}.ckpt")))?;
    }
    write_json(
        &a.out.join("report.json"),
        &TrainReportFile { config: &cfg, dataset: &bundle.provenance, report: &run },
    )?;
    println!(
        "train: mean test weighted F1 {:.4} ± {:.4} over {} folds ({:.1}s) -> {}",
        run.mean_f1,
        run.std_f1,
        run.fold_f1.len(),
        run.wall_clock_secs,
        a.out.display()
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let (cfg, file) = config::load_config(a.common.config.as_deref(), a.common.seed)?;
    for &p_a in &a.pa_list {
        if !(p_a > 0.0 && p_a <= 1.0) {
            return Err(CliError::Config {
                source_name: "--pa-list".into(),
                message: format!("accuracies must lie in (0, 1], got {p_a}"),
            });
        }
    }
    let bundle = load_dataset(&a.common.data)?;
    let y = bundle.require_labels()?;
    let report =
        noise_sweep(&bundle.graph, y, &a.pa_list, file.sweep.n_lfs, file.sweep.coverage, &cfg)?;
    ensure_out(&a.common.out)?;
    write_text(&a.common.out.join("sweep.csv"), &sweep_csv(&report))?;
    write_json(
        &a.common.out.join("sweep.json"),
        &SweepReportFile { config: &cfg, dataset: &bundle.provenance, report: &report },
    )?;
    let summary: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{}→{:.3}", r.p_a, r.wsnet_mean_f1))
        .collect();
    println!(
        "sweep: mean F1 by accuracy [{}] ({:.1}s) -> {}",
        summary.join(", "),
        report.wall_clock_secs,
        a.common.out.display()
    );
    Ok(())
}

fn cmd_ablate(a: &CommonArgs) -> Result<()> {
    let (cfg, _) = config::load_config(a.config.as_deref(), a.seed)?;
    let bundle = load_dataset(&a.data)?;
    let wlm = bundle.require_wlm()?;
    let y = bundle.require_labels()?;
    let report = ablate(&bundle.graph, wlm, y, &cfg)?;
    ensure_out(&a.out)?;
    write_text(&a.out.join("ablation.csv"), &ablation_csv(&report))?;
    write_json(
        &a.out.join("ablation.json"),
        &AblationReportFile { config: &cfg, dataset: &bundle.provenance, report: &report },
    )?;
    let full = report
        .rows
        .iter()
        .find(|r| r.label == "full")
        .map(|r| r.mean_f1)
        .unwrap_or(f64::NAN);
    println!(
        "ablate: {} configurations, full objective mean F1 {:.4} ({:.1}s) -> {}",
        report.rows.len(),
        full,
        report.wall_clock_secs,
        a.out.display()
    );
    Ok(())
}

fn cmd_gen_synth(a: &GenSynthArgs) -> Result<()> {
    let (cfg, file) = config::load_config(a.config.as_deref(), a.seed)?;
    // Flag values are configuration too: failures exit with 2.
    let as_config_error = |e: CoreError| match e {
        CoreError::InvalidParameter { .. } => CliError::Config {
            source_name: "gen-synth flags".into(),
            message: e.to_string(),
        },
        other => CliError::Core(other),
    };
    let sbm = SbmConfig {
        n_nodes: a.n_nodes,
        n_classes: a.classes,
        p_in: a.p_in,
        p_out: a.p_out,
        noise_sigma: file.synth.noise_sigma,
        seed: derive_seed(cfg.seed, "gen-sbm", &[]),
    };
    let (graph, y) = generate_sbm(&sbm).map_err(as_config_error)?;
    let lf_cfg = LfSynthConfig {
        n_lfs: a.m,
        accuracy: a.pa,
        coverage: a.coverage,
        seed: derive_seed(cfg.seed, "gen-lfs", &[]),
    };
    let wlm = generate_synthetic_lfs(&y, a.classes, &lf_cfg).map_err(as_config_error)?;
    let meta = MetaFile {
        n_classes: a.classes,
        n_nodes: Some(a.n_nodes),
        n_lfs: Some(a.m),
        accuracy: Some(a.pa),
        coverage: Some(a.coverage),
        p_in: Some(a.p_in),
        p_out: Some(a.p_out),
        noise_sigma: Some(file.synth.noise_sigma),
        seed: Some(cfg.seed),
    };
    let provenance = save_dataset(&a.out, &graph, &wlm, &y, &meta)?;
    write_json(
        &a.out.join("manifest.json"),
        &GenManifestFile {
            dataset: &provenance,
            n_nodes: graph.n_nodes(),
            n_classes: a.classes,
            n_edges: graph.edges().len(),
            n_lfs: a.m,
            accuracy: a.pa,
            coverage: a.coverage,
            seed: cfg.seed,
        },
    )?;
    println!(
        "gen-synth: {} nodes, {} classes, {} edges, {} labeling functions (p_a {}, coverage {}) -> {}",
        graph.n_nodes(),
        a.classes,
        graph.edges().len(),
        a.m,
        a.pa,
        a.coverage,
        a.out.display()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    // Even though scoring needs no hyperparameters, a provided config must
    // still be valid so broken automation fails fast.
    let (_, _) = config::load_config(a.common.config.as_deref(), a.common.seed)?;
    let bundle = load_dataset(&a.common.data)?;
    let y = bundle.require_labels()?;
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let dims = ckpt.params.dims();
    if dims.n_features != bundle.graph.feature_dim() {
        return Err(CliError::Dataset {
            path: a.checkpoint.clone(),
            message: format!(
                "checkpoint expects {} input features but the dataset has {}",
                dims.n_features,
                bundle.graph.feature_dim()
            ),
        });
    }
    if let Some(&max_label) = y.iter().max() {
        if max_label >= dims.n_classes {
            return Err(CliError::Dataset {
                path: a.checkpoint.clone(),
                message: format!(
                    "checkpoint classifies {} classes but the dataset labels reach {}",
                    dims.n_classes, max_label
                ),
            });
        }
    }
    let all: Vec<usize> = (0..bundle.graph.n_nodes()).collect();
    let eval = evaluate(&ckpt.params, &bundle.graph, y, &all)?;
    ensure_out(&a.common.out)?;
    write_json(
        &a.common.out.join("eval.json"),
        &EvalReportFile {
            checkpoint: a.checkpoint.display().to_string(),
            checkpoint_config_hash: ckpt.config_hash.clone(),
            checkpoint_epoch: ckpt.epoch,
            dataset: &bundle.provenance,
            n_nodes: all.len(),
            eval: &eval,
        },
    )?;
    println!(
        "eval: weighted F1 {:.4} on {} nodes -> {}",
        eval.weighted_f1,
        all.len(),
        a.common.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::GenSynth(a) => cmd_gen_synth(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
