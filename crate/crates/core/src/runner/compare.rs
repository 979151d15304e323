//! Side-by-side view of arms that ran the same scenario and seed.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stream::read_csv;
use super::summary::WindowSummary;
use super::{RunMeta, RunnerError};

/// One arm in one window, relative to the reference (first) arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub window: usize,
    pub t_start_s: f64,
    pub arm: String,
    pub indoor_sum_bps: f64,
    pub outdoor_mean_bps: f64,
    pub indoor_delta_pct: Option<f64>,
    pub outdoor_delta_pct: Option<f64>,
    /// Mean realised victim interference within the cap; empty without a cap or victim.
    pub constraint_ok: Option<bool>,
    pub pf_processed_mean: f64,
    pub processing_reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub arms: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RunnerError> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub struct ArmOutput {
    pub dir: PathBuf,
    pub meta: RunMeta,
    pub windows: Vec<WindowSummary>,
}

pub fn read_arm(dir: &Path) -> Result<ArmOutput, RunnerError> {
    let meta: RunMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    let windows = read_csv(&dir.join("windows.csv"))?;
    Ok(ArmOutput { dir: dir.to_path_buf(), meta, windows })
}

fn delta_pct(value: f64, reference: f64) -> Option<f64> {
    (reference != 0.0).then(|| 100.0 * (value - reference) / reference)
}

/// Aligns the arms window by window against the first one. The arms must
/// come from one scenario and seed, otherwise the comparison is meaningless.
pub fn compare_arms(arms: &[ArmOutput]) -> Result<Comparison, RunnerError> {
    let reference = arms.first().ok_or(RunnerError::NoArms)?;
    for a in &arms[1..] {
        if a.meta.seed != reference.meta.seed {
            return Err(RunnerError::Mismatch(format!(
                "{} has seed {}, {} has seed {}",
                a.dir.display(),
                a.meta.seed,
                reference.dir.display(),
                reference.meta.seed
            )));
        }
        if a.meta.config_hash != reference.meta.config_hash {
            return Err(RunnerError::Mismatch(format!(
                "{} and {} ran different scenarios",
                a.dir.display(),
                reference.dir.display()
            )));
        }
        if a.windows.len() != reference.windows.len() {
            return Err(RunnerError::Mismatch(format!("{} has a different window count", a.dir.display())));
        }
    }
    let mut rows = Vec::new();
    for (k, rw) in reference.windows.iter().enumerate() {
        for a in arms {
            let w = &a.windows[k];
            let constraint_ok = match (a.meta.i_max_dbm, w.victim_interference_mean_dbm) {
                (Some(cap), Some(i)) => Some(i <= cap),
                _ => None,
            };
            rows.push(ComparisonRow {
                window: k,
                t_start_s: w.t_start_s,
                arm: a.meta.arm.clone(),
                indoor_sum_bps: w.indoor_sum_bps,
                outdoor_mean_bps: w.outdoor_mean_bps,
                indoor_delta_pct: delta_pct(w.indoor_sum_bps, rw.indoor_sum_bps),
                outdoor_delta_pct: delta_pct(w.outdoor_mean_bps, rw.outdoor_mean_bps),
                constraint_ok,
                pf_processed_mean: w.pf_processed_mean,
                processing_reduction_pct: (rw.pf_processed_mean != 0.0)
                    .then(|| 100.0 * (1.0 - w.pf_processed_mean / rw.pf_processed_mean)),
            });
        }
    }
    Ok(Comparison { arms: arms.iter().map(|a| a.meta.arm.clone()).collect(), rows })
}
