use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{AblationReport, RunReport};
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "variant,seed,final_best_loss,final_avg_reward,evaluations";

/// Episodes averaged for the early-learning comparison in ablation pairs.
pub const EARLY_EPISODES: usize = 50;

pub fn jsonl_name(report: &RunReport) -> String {
    format!("{}_seed{}.jsonl", report.label, report.seed)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One JSON object per episode record.
pub fn write_jsonl(report: &RunReport, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for r in &report.records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    create(path)?.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn write_summary(reports: &[RunReport], path: &Path) -> Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for r in reports {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.label,
            r.seed,
            fmt_opt(r.best_loss),
            fmt_opt(r.final_avg_reward()),
            r.evaluations
        ));
    }
    create(path)?.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes a JSON-Lines file per report plus `summary.csv`, returning the
/// paths written.
pub fn emit_metrics(reports: &[RunReport], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for r in reports {
        let path = dir.join(jsonl_name(r));
        write_jsonl(r, &path)?;
        written.push(path);
    }
    let summary = dir.join("summary.csv");
    write_summary(reports, &summary)?;
    written.push(summary);
    Ok(written)
}

#[derive(Serialize)]
struct CurveRow<'a> {
    variant: &'a str,
    seed: u64,
    episode: usize,
    avg_reward: f64,
    best_loss: f64,
}

#[derive(Serialize)]
struct PairRow<'a> {
    seed: u64,
    variant: &'a str,
    reference: &'a str,
    final_best_loss: Option<f64>,
    reference_final_best_loss: Option<f64>,
    early_avg_reward: f64,
    reference_early_avg_reward: f64,
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-run metrics, `ablation_curves.csv` (one row per variant, seed and
/// episode) and `ablation_pairs.csv` comparing every variant with the first
/// one on the same seed.
pub fn emit_ablation(report: &AblationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = emit_metrics(&report.runs, dir)?;
    let curves = dir.join("ablation_curves.csv");
    write_csv(
        report.runs.iter().flat_map(|r| {
            r.records.iter().map(move |m| CurveRow {
                variant: &r.label,
                seed: r.seed,
                episode: m.episode,
                avg_reward: m.avg_reward,
                best_loss: m.best_loss,
            })
        }),
        &curves,
    )?;
    written.push(curves);

    let reference = report.variants[0];
    let mut pairs = Vec::new();
    for &seed in &report.seeds {
        let base = report.run(reference, seed).expect("every variant ran on every seed");
        let early = |r: &RunReport| r.mean_reward(1, EARLY_EPISODES);
        for &v in &report.variants[1..] {
            let r = report.run(v, seed).expect("every variant ran on every seed");
            pairs.push(PairRow {
                seed,
                variant: v.name(),
                reference: reference.name(),
                final_best_loss: r.best_loss,
                reference_final_best_loss: base.best_loss,
                early_avg_reward: early(r),
                reference_early_avg_reward: early(base),
            });
        }
    }
    let path = dir.join("ablation_pairs.csv");
    write_csv(pairs, &path)?;
    written.push(path);
    Ok(written)
}
