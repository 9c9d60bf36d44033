//! CSV and JSON renderings of run results.

use std::fmt::Write;

use delaybandit::{metrics, RoundRow, RunRecord};
use serde::Serialize;

use crate::SweepAxis;

pub const TRACE_HEADER: &str = "round,arm,loss,cum_loss,epoch,beta,skipped,delivered_events";
pub const SWEEP_DETAIL_HEADER: &str = "axis,value,seed,regret,learner_loss,best_arm_loss,D,D_beta,S_beta,epochs";
pub const SWEEP_SUMMARY_HEADER: &str = "axis,value,runs,mean_regret,stderr_regret";

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Horizon => "horizon",
        SweepAxis::Beta => "beta",
        SweepAxis::Eta => "eta",
    }
}

/// Per-round trace. `beta` is empty for learners without a threshold.
pub fn trace_csv(rows: &[RoundRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let beta = r.beta.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round,
            r.arm,
            fmt_f64(r.loss),
            fmt_f64(r.cum_loss),
            r.epoch,
            beta,
            u8::from(r.skipped),
            r.delivered_events
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub regret: f64,
    pub learner_loss: f64,
    pub best_arm: usize,
    pub best_arm_loss: f64,
    #[serde(rename = "D")]
    pub total_delay: u64,
    #[serde(rename = "D_beta")]
    pub experienced_delay: u64,
    #[serde(rename = "S_beta")]
    pub skipped_rounds: u64,
    pub epochs: u32,
    pub bounds: BoundsJson,
}

#[derive(Debug, Serialize)]
pub struct BoundsJson {
    pub theorem1: f64,
    pub corollary: f64,
    pub oracle: f64,
    pub oracle_beta: f64,
}

pub fn summary(rec: &RunRecord, scale_15: bool) -> SummaryJson {
    let s = &rec.summary;
    let oracle = if scale_15 {
        metrics::scaled_oracle_bound(s.bounds.oracle, rec.arms)
    } else {
        s.bounds.oracle
    };
    SummaryJson {
        regret: s.regret,
        learner_loss: s.learner_loss,
        best_arm: s.best_arm,
        best_arm_loss: s.best_arm_loss,
        total_delay: s.total_delay,
        experienced_delay: s.experienced_delay,
        skipped_rounds: s.skipped_rounds,
        epochs: s.epochs,
        bounds: BoundsJson {
            theorem1: s.bounds.theorem1,
            corollary: s.bounds.corollary,
            oracle,
            oracle_beta: s.bounds.oracle_beta,
        },
    }
}

pub fn summary_json(rec: &RunRecord, scale_15: bool) -> String {
    let mut text = serde_json::to_string_pretty(&summary(rec, scale_15)).expect("summary serializes");
    text.push('\n');
    text
}

/// One row per (value, seed), values in sweep order, seeds in config order.
pub fn sweep_detail_csv(axis: SweepAxis, values: &[f64], results: &[Vec<RunRecord>]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_DETAIL_HEADER);
    out.push('\n');
    for (value, records) in values.iter().zip(results) {
        for rec in records {
            let s = &rec.summary;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                axis_name(axis),
                fmt_f64(*value),
                rec.seed,
                fmt_f64(s.regret),
                fmt_f64(s.learner_loss),
                fmt_f64(s.best_arm_loss),
                s.total_delay,
                s.experienced_delay,
                s.skipped_rounds,
                s.epochs
            )
            .unwrap();
        }
    }
    out
}

/// Mean regret and its standard error per sweep value.
pub fn sweep_summary_csv(axis: SweepAxis, values: &[f64], results: &[Vec<RunRecord>]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_SUMMARY_HEADER);
    out.push('\n');
    for (value, records) in values.iter().zip(results) {
        let regrets: Vec<f64> = records.iter().map(|r| r.summary.regret).collect();
        let (mean, stderr) = metrics::mean_and_stderr(&regrets);
        writeln!(
            out,
            "{},{},{},{},{}",
            axis_name(axis),
            fmt_f64(*value),
            records.len(),
            fmt_f64(mean),
            fmt_f64(stderr)
        )
        .unwrap();
    }
    out
}
