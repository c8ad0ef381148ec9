//! System-level simulator for vehicle-to-anything messaging relayed through
//! an LTE base station.
//!
//! A vehicle's periodic status message travels uplink to its serving sector,
//! is forwarded inside the eNodeB, and is delivered on the downlink either by
//! per-receiver unicast (link adaptation + HARQ) or by a single fixed-MCS
//! multicast whose repetitions receivers chase-combine. The simulator runs on
//! a 1 ms TTI clock and reports per-(packet, receiver) end-to-end latency and
//! the delivery success rate.
//!
//! Module map:
//! - [`scenario`]: urban block grid, 3-sector site, participant drop, mobility.
//! - [`radio`]: LOS, pathloss, shadowing, antenna pattern, SINR.
//! - [`phy`]: MCS table, BLER curves, transport blocks, error draws, MRC.
//! - [`mac`]: resource grid, schedulers, HARQ timing, latency accounting.
//! - [`pipelines`]: the uplink / unicast / multicast flows and the TTI engine.
//! - [`kpi`]: success rate, mean latency, CDF and the output files.
//! - [`config`] and [`sweep`]: run configuration and parameter sweeps.

pub mod config;
pub mod error;
pub mod kpi;
pub mod mac;
pub mod phy;
pub mod pipelines;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod sweep;

pub use config::{DownlinkMode, RunConfig};
pub use error::{ConfigError, SimError};
pub use kpi::{summarize, KpiSummary};
pub use pipelines::{run_simulation, DeliveryRecord, Latency};
