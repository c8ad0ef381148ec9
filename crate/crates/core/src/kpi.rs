//! Success rate, mean latency and latency CDF, plus the per-run output files.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::SimError;
use crate::pipelines::DeliveryRecord;

pub const DEFAULT_CDF_RESOLUTION_MS: f64 = 0.1;

/// Aggregate over a set of delivery records.
///
/// Keeps the sorted finite latencies so that two summaries merge exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiSummary {
    pub n_expected: u64,
    pub n_success: u64,
    /// `None` when nothing was expected.
    pub success_rate: Option<f64>,
    /// Over successes only; `None` when there are none.
    pub mean_latency_ms: Option<f64>,
    #[serde(skip)]
    latencies: Vec<f64>,
}

impl KpiSummary {
    fn from_parts(n_expected: u64, mut latencies: Vec<f64>) -> Self {
        latencies.sort_by(f64::total_cmp);
        let n_success = latencies.len() as u64;
        Self {
            n_expected,
            n_success,
            success_rate: ratio(n_success, n_expected),
            mean_latency_ms: (n_success > 0)
                .then(|| latencies.iter().sum::<f64>() / n_success as f64),
            latencies,
        }
    }

    pub fn merge(&self, other: &KpiSummary) -> KpiSummary {
        let mut all = self.latencies.clone();
        all.extend_from_slice(&other.latencies);
        Self::from_parts(self.n_expected + other.n_expected, all)
    }

    pub fn latencies(&self) -> &[f64] {
        &self.latencies
    }

    /// Exact empirical CDF: one point per distinct finite latency. The last
    /// value equals the success rate.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &l) in self.latencies.iter().enumerate() {
            let f = ratio(i as u64 + 1, self.n_expected).unwrap_or(0.0);
            match out.last_mut() {
                Some(last) if last.0 == l => last.1 = f,
                _ => out.push((l, f)),
            }
        }
        out
    }

    /// Fraction of expected deliveries completed within `latency_ms`.
    pub fn fraction_within(&self, latency_ms: f64) -> f64 {
        let k = self.latencies.partition_point(|&l| l <= latency_ms + 1e-9);
        ratio(k as u64, self.n_expected).unwrap_or(0.0)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn summarize(records: &[DeliveryRecord]) -> KpiSummary {
    KpiSummary::from_parts(
        records.len() as u64,
        records.iter().filter_map(|r| r.latency.finite()).collect(),
    )
}

/// CDF step function sampled every `resolution_ms` from 0 up to the largest
/// finite latency; failures stay in the denominator.
///
/// Panics unless `resolution_ms > 0`.
pub fn cdf_points(records: &[DeliveryRecord], resolution_ms: f64) -> Vec<(f64, f64)> {
    assert!(resolution_ms > 0.0, "CDF resolution must be positive");
    if records.is_empty() {
        return Vec::new();
    }
    let s = summarize(records);
    let max = s.latencies.last().copied().unwrap_or(0.0);
    let steps = (max / resolution_ms - 1e-9).ceil().max(0.0) as u64;
    (0..=steps)
        .map(|k| {
            let x = k as f64 * resolution_ms;
            (x, s.fraction_within(x))
        })
        .collect()
}

fn opt_ms(v: Option<f64>) -> String {
    v.map_or_else(|| "INF".to_string(), |x| format!("{x:.3}"))
}

pub fn write_records_csv<W: Write>(records: &[DeliveryRecord], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "packet_id,tx_id,rx_id,gen_ms,e2e_ms,ul_ms,dl_ms,ul_attempts,dl_attempts,mode"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:.6},{},{},{},{},{},{}",
            r.packet_id,
            r.tx_id,
            r.rx_id,
            r.gen_ms,
            r.latency,
            opt_ms(r.ul_ms),
            opt_ms(r.dl_ms),
            r.ul_attempts,
            r.dl_attempts,
            r.mode.as_str()
        )?;
    }
    Ok(())
}

pub fn write_cdf_csv<W: Write>(points: &[(f64, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "latency_ms,fraction")?;
    for (x, f) in points {
        writeln!(w, "{x:.3},{f:.9}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    summary: &'a KpiSummary,
    seed: u64,
    config: &'a RunConfig,
}

pub fn write_summary_json<W: Write>(
    summary: &KpiSummary,
    cfg: &RunConfig,
    seed: u64,
    w: W,
) -> io::Result<()> {
    serde_json::to_writer_pretty(
        w,
        &SummaryFile {
            summary,
            seed,
            config: cfg,
        },
    )?;
    Ok(())
}

/// Writes `records.csv`, `summary.json` and `cdf.csv` into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    cfg: &RunConfig,
    seed: u64,
    records: &[DeliveryRecord],
) -> Result<KpiSummary, SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let create = |name: &str| {
        let p = dir.join(name);
        fs::File::create(&p)
            .map(io::BufWriter::new)
            .map_err(|e| SimError::io(&p, e))
    };
    let summary = summarize(records);
    write_records_csv(records, create("records.csv")?)
        .map_err(|e| SimError::io(dir.join("records.csv"), e))?;
    write_summary_json(&summary, cfg, seed, create("summary.json")?)
        .map_err(|e| SimError::io(dir.join("summary.json"), e))?;
    write_cdf_csv(
        &cdf_points(records, DEFAULT_CDF_RESOLUTION_MS),
        create("cdf.csv")?,
    )
    .map_err(|e| SimError::io(dir.join("cdf.csv"), e))?;
    Ok(summary)
}
