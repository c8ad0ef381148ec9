//! Parameter sweeps: a Cartesian product of sweep points and seeds, run in
//! parallel and summarized in point order.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DownlinkMode, RunConfig};
use crate::error::{ConfigError, SimError};
use crate::kpi::{summarize, write_run_outputs, KpiSummary};
use crate::pipelines::run_simulation;

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Uplink and downlink bandwidth together, in MHz.
    Bandwidth(Vec<f64>),
    /// Multicast MCS efficiency in bits per resource element.
    Mcs(Vec<f64>),
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| format!("axis `{s}` is not of the form name=v1,v2"))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("axis value `{v}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match name.trim() {
            "bandwidth" | "bw" => Ok(SweepAxis::Bandwidth(values)),
            "mcs" => Ok(SweepAxis::Mcs(values)),
            other => Err(format!(
                "unknown sweep axis `{other}` (expected bandwidth or mcs)"
            )),
        }
    }
}

/// Seeds as `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|e| format!("seed range `{s}`: {e}"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|e| format!("seed range `{s}`: {e}"))?;
        (a..=b).collect()
    } else {
        s.split(',')
            .filter(|v| !v.trim().is_empty())
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("seed `{v}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if seeds.is_empty() {
        return Err("seed list is empty".into());
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Option<SweepAxis>,
    pub modes: Vec<DownlinkMode>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub key: String,
    pub config: RunConfig,
}

/// Expands `spec` over `base`, validating every resulting configuration.
pub fn sweep_points(base: &RunConfig, spec: &SweepSpec) -> Result<Vec<SweepPoint>, ConfigError> {
    if spec.seeds.is_empty() {
        return Err(ConfigError::range("run.seeds", "seed list is empty"));
    }
    let modes = if spec.modes.is_empty() {
        vec![base.run.downlink_mode]
    } else {
        spec.modes.clone()
    };
    let variants: Vec<(String, RunConfig)> = match &spec.axis {
        None => vec![(String::new(), base.clone())],
        Some(SweepAxis::Bandwidth(values)) => values
            .iter()
            .map(|&bw| {
                let mut c = base.clone();
                c.radio.bandwidth_ul_mhz = bw;
                c.radio.bandwidth_dl_mhz = bw;
                (format!("bandwidth-{bw}_"), c)
            })
            .collect(),
        Some(SweepAxis::Mcs(values)) => values
            .iter()
            .map(|&e| {
                let mut c = base.clone();
                c.run.multicast_mcs_efficiency = e;
                (format!("mcs-{e}_"), c)
            })
            .collect(),
    };
    let mut points = Vec::new();
    for (prefix, cfg) in variants {
        for &mode in &modes {
            let mut config = cfg.clone();
            config.run.downlink_mode = mode;
            config.run.seeds = spec.seeds.clone();
            config.validate()?;
            points.push(SweepPoint {
                key: format!("{prefix}{}", mode.as_str()),
                config,
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: String,
    pub seed: u64,
    pub success_rate: Option<f64>,
    pub mean_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub point: String,
    pub seed: u64,
    pub message: String,
}

impl fmt::Display for SweepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seed {}: {}", self.point, self.seed, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<(String, u64, KpiSummary)>,
    pub failures: Vec<SweepFailure>,
    pub output_dirs: Vec<PathBuf>,
}

/// Runs every (point, seed) pair on up to `jobs` threads. With `out`, each
/// run writes its files to `out/<point>/seed-<n>/` and `sweep_summary.csv`
/// goes to `out`.
pub fn run_sweep(
    base: &RunConfig,
    spec: &SweepSpec,
    out: Option<&Path>,
    jobs: usize,
) -> Result<SweepOutcome, SimError> {
    let points = sweep_points(base, spec)?;
    let tasks: Vec<(&SweepPoint, u64)> = points
        .iter()
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::io(out.unwrap_or(Path::new(".")), io::Error::other(e)))?;
    let results: Vec<Result<(KpiSummary, Option<PathBuf>), String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(point, seed)| {
                let records = run_simulation(&point.config, *seed).map_err(|e| e.to_string())?;
                match out {
                    Some(root) => {
                        let dir = root.join(&point.key).join(format!("seed-{seed}"));
                        write_run_outputs(&dir, &point.config, *seed, &records)
                            .map(|s| (s, Some(dir)))
                            .map_err(|e| e.to_string())
                    }
                    None => Ok((summarize(&records), None)),
                }
            })
            .collect()
    });
    let mut outcome = SweepOutcome::default();
    for ((point, seed), result) in tasks.iter().zip(results) {
        match result {
            Ok((summary, dir)) => {
                outcome.rows.push(SweepRow {
                    point: point.key.clone(),
                    seed: *seed,
                    success_rate: summary.success_rate,
                    mean_latency_ms: summary.mean_latency_ms,
                });
                outcome.summaries.push((point.key.clone(), *seed, summary));
                outcome.output_dirs.extend(dir);
            }
            Err(message) => outcome.failures.push(SweepFailure {
                point: point.key.clone(),
                seed: *seed,
                message,
            }),
        }
    }
    if let Some(root) = out {
        std::fs::create_dir_all(root).map_err(|e| SimError::io(root, e))?;
        let path = root.join("sweep_summary.csv");
        let file = std::fs::File::create(&path).map_err(|e| SimError::io(&path, e))?;
        write_sweep_summary(&outcome.rows, io::BufWriter::new(file))
            .map_err(|e| SimError::io(&path, e))?;
    }
    Ok(outcome)
}

pub fn write_sweep_summary<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "point,seed,success_rate,mean_latency_ms")?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.point,
            r.seed,
            opt(r.success_rate),
            opt(r.mean_latency_ms)
        )?;
    }
    w.flush()
}
