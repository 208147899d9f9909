//! Report writers: pretty JSON files that embed the configuration (with
//! its hash) and the dataset content hashes, plus plain CSV companions for
//! the numeric tables (per-epoch curves, sweep rows, ablation rows).
//!
//! CSV floats use Rust's shortest-roundtrip `Display`, so identical runs
//! produce byte-identical files.

use crate::dataset::Provenance;
use crate::error::CliError;
use crate::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use wsnet_core::pipeline::{EpochRecord, SplitEval};
use wsnet_core::{AblationReport, RunReport, SweepReport, TrainConfig};

/// `report.json`: the cross-validated run with its configuration and data.
#[derive(Debug, Serialize)]
pub struct TrainReportFile<'a> {
    pub config: &'a TrainConfig,
    pub dataset: &'a Provenance,
    pub report: &'a RunReport,
}

/// `sweep.json`: one row per requested labeling accuracy.
#[derive(Debug, Serialize)]
pub struct SweepReportFile<'a> {
    pub config: &'a TrainConfig,
    pub dataset: &'a Provenance,
    pub report: &'a SweepReport,
}

/// `ablation.json`: the seven loss-component configurations.
#[derive(Debug, Serialize)]
pub struct AblationReportFile<'a> {
    pub config: &'a TrainConfig,
    pub dataset: &'a Provenance,
    pub report: &'a AblationReport,
}

/// `eval.json`: a saved checkpoint scored against a labeled dataset.
#[derive(Debug, Serialize)]
pub struct EvalReportFile<'a> {
    pub checkpoint: String,
    /// Hash stored inside the checkpoint (the config that trained it).
    pub checkpoint_config_hash: String,
    pub checkpoint_epoch: u64,
    pub dataset: &'a Provenance,
    pub n_nodes: usize,
    pub eval: &'a SplitEval,
}

/// `manifest.json` written by the generator next to the dataset files.
#[derive(Debug, Serialize)]
pub struct GenManifestFile<'a> {
    pub dataset: &'a Provenance,
    pub n_nodes: usize,
    pub n_classes: usize,
    pub n_edges: usize,
    pub n_lfs: usize,
    pub accuracy: f64,
    pub coverage: f64,
    pub seed: u64,
}

/// Writes any serializable report as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        context: format!("serializing {}", path.display()),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Per-epoch loss and validation curves for one fold.
pub fn curves_csv(curves: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,l_scon,l_wlce,l_wlcon,total,val_f1\n");
    for r in curves {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch, r.l_scon, r.l_wlce, r.l_wlcon, r.total, r.val_f1
        )
        .expect("string write");
    }
    out
}

/// One row per labeling accuracy: model vs majority-vote baseline.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "p_a,wsnet_mean_f1,wsnet_std_f1,baseline_mean_f1,baseline_std_f1,mv_label_accuracy\n",
    );
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.p_a,
            r.wsnet_mean_f1,
            r.wsnet_std_f1,
            r.baseline_mean_f1,
            r.baseline_std_f1,
            r.mv_label_accuracy
        )
        .expect("string write");
    }
    out
}

/// One row per loss-component configuration.
pub fn ablation_csv(report: &AblationReport) -> String {
    let mut out = String::from("label,scon,wlce,wlcon,mean_f1,std_f1\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.label, r.flags.scon, r.flags.wlce, r.flags.wlcon, r.mean_f1, r.std_f1
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_csv_has_the_documented_header_and_one_row_per_epoch() {
        let curves = vec![
            EpochRecord { epoch: 0, l_scon: 1.5, l_wlce: 0.25, l_wlcon: 2.0, total: 3.75, val_f1: 0.5 },
            EpochRecord { epoch: 1, l_scon: 1.0, l_wlce: 0.125, l_wlcon: 1.5, total: 2.625, val_f1: 0.75 },
        ];
        let csv = curves_csv(&curves);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "epoch,l_scon,l_wlce,l_wlcon,total,val_f1");
        assert_eq!(lines[1], "0,1.5,0.25,2,3.75,0.5");
        assert_eq!(lines[2], "1,1,0.125,1.5,2.625,0.75");
    }

    #[test]
    fn csv_floats_roundtrip_exactly() {
        let value = 0.123456789012345678_f64;
        let curves = vec![EpochRecord {
            epoch: 0,
            l_scon: value,
            l_wlce: 0.0,
            l_wlcon: 0.0,
            total: value,
            val_f1: 1.0 / 3.0,
        }];
        let csv = curves_csv(&curves);
        let row = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap().to_bits(), value.to_bits());
        assert_eq!(
            fields[5].parse::<f64>().unwrap().to_bits(),
            (1.0_f64 / 3.0).to_bits()
        );
    }
}
