//! CSV and JSON writers for run results.
//!
//! Floats are written with fixed precision so identical runs produce
//! identical bytes. Missing values (no delay samples, non-GBR satisfaction)
//! are empty cells in CSV and `null` in JSON.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::{MetricsRecord, RunResult, Summary};
use crate::model::Scenario;
use crate::scenario::to_file;

pub const SUMMARY_HEADER: [&str; 8] = [
    "tenant",
    "subslice",
    "throughput_bps",
    "mean_delay_ms",
    "p95_delay_ms",
    "gbr_satisfaction",
    "mean_grant_rbs",
    "utilization",
];

pub const TIMELINE_HEADER: [&str; 8] = [
    "tti",
    "tenant",
    "subslice",
    "demand_rbs",
    "granted_rbs",
    "served_bits",
    "backlog_bits",
    "utilization",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fixed(v: f64) -> String {
    format!("{v:.3}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fixed).unwrap_or_default()
}

fn summary_rows(summary: &Summary) -> Vec<[String; 8]> {
    let mut rows: Vec<[String; 8]> = summary
        .subslices
        .iter()
        .map(|s| {
            [
                s.tenant.to_string(),
                s.subslice.to_string(),
                fixed(s.throughput_bps),
                opt(s.mean_delay_ms),
                opt(s.p95_delay_ms),
                opt(s.gbr_satisfaction),
                fixed(s.mean_grant_rbs),
                String::new(),
            ]
        })
        .collect();
    rows.push([
        "cell".into(),
        "-".into(),
        fixed(summary.cell.throughput_bps),
        String::new(),
        String::new(),
        String::new(),
        fixed(summary.cell.mean_used_rbs),
        fixed(summary.cell.mean_utilization),
    ]);
    rows
}

pub fn write_summary_csv<W: Write>(out: W, summary: &Summary) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for row in summary_rows(summary) {
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_timeline_csv<W: Write>(out: W, records: &[MetricsRecord]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMELINE_HEADER)?;
    for r in records {
        let tti = r.tti.to_string();
        for s in &r.subslices {
            w.write_record([
                tti.as_str(),
                &s.tenant.to_string(),
                &s.subslice.to_string(),
                &s.demand_rbs.to_string(),
                &s.granted_rbs.to_string(),
                &s.served_bits.to_string(),
                &s.backlog_bits.to_string(),
                "",
            ])?;
        }
        let demand: u32 = r.tenants.iter().map(|t| t.demand_rbs).sum();
        let served: u64 = r.subslices.iter().map(|s| s.served_bits).sum();
        let backlog: u64 = r.subslices.iter().map(|s| s.backlog_bits).sum();
        w.write_record([
            tti.as_str(),
            "cell",
            "-",
            &demand.to_string(),
            &r.used_rbs.to_string(),
            &served.to_string(),
            &backlog.to_string(),
            &fixed(r.utilization),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Long-format comparison: one summary block per policy, prefixed by the
/// policy name.
pub fn write_compare_csv<W: Write>(out: W, runs: &[(String, &Summary)]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["policy"];
    header.extend(SUMMARY_HEADER);
    w.write_record(&header)?;
    for (policy, summary) in runs {
        for row in summary_rows(summary) {
            let mut rec = vec![policy.clone()];
            rec.extend(row);
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn round3(v: f64) -> Value {
    json!((v * 1000.0).round() / 1000.0)
}

pub fn run_json(result: &RunResult, scenario: &Scenario) -> Result<Value, OutputError> {
    let s = &result.summary;
    let config = serde_json::to_value(to_file(scenario))?;
    let misrouted = result.records.last().map_or(0, |r| r.misrouted_sdus);
    Ok(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "policy": s.policy.name(),
        "decision_period_ttis": s.policy.decision_period_ttis,
        "seed": s.seed,
        "duration_ttis": s.total_ttis,
        "num_rbs": scenario.grid.num_rbs(),
        "scenario": config,
        "cell": {
            "served_bits": s.cell.served_bits,
            "throughput_bps": round3(s.cell.throughput_bps),
            "mean_used_rbs": round3(s.cell.mean_used_rbs),
            "mean_utilization": round3(s.cell.mean_utilization),
            "misrouted_sdus": misrouted,
        },
        "tenants": s.tenants.iter().map(|t| json!({
            "tenant": t.tenant.0,
            "mean_demand_rbs": round3(t.mean_demand_rbs),
            "mean_grant_rbs": round3(t.mean_grant_rbs),
            "mean_scheduled_rbs": round3(t.mean_scheduled_rbs),
        })).collect::<Vec<_>>(),
        "subslices": s.subslices.iter().map(|x| json!({
            "tenant": x.tenant.0,
            "subslice": x.subslice.0,
            "gbr": x.gbr,
            "served_bits": x.served_bits,
            "delivered_bits": x.delivered_bits,
            "completed_sdus": x.completed_sdus,
            "throughput_bps": round3(x.throughput_bps),
            "mean_delay_ms": x.mean_delay_ms.map(round3),
            "p95_delay_ms": x.p95_delay_ms.map(round3),
            "gbr_satisfaction": x.gbr_satisfaction.map(round3),
            "mean_grant_rbs": round3(x.mean_grant_rbs),
        })).collect::<Vec<_>>(),
    }))
}

fn create(path: &Path) -> Result<fs::File, OutputError> {
    fs::File::create(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes summary.csv, timeline.csv and run.json into `dir`, creating it.
pub fn write_run_dir(
    dir: &Path,
    result: &RunResult,
    scenario: &Scenario,
) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_summary_csv(
        io::BufWriter::new(create(&dir.join("summary.csv"))?),
        &result.summary,
    )?;
    write_timeline_csv(
        io::BufWriter::new(create(&dir.join("timeline.csv"))?),
        &result.records,
    )?;
    let mut f = io::BufWriter::new(create(&dir.join("run.json"))?);
    serde_json::to_writer_pretty(&mut f, &run_json(result, scenario)?)?;
    writeln!(f)
        .and_then(|_| f.flush())
        .map_err(|source| OutputError::Io {
            path: dir.join("run.json").display().to_string(),
            source,
        })?;
    Ok(())
}
