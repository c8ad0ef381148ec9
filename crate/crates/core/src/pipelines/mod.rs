//! End-to-end message flows: uplink to the serving sector, then downlink to
//! every receiver by unicast or multicast, driven TTI by TTI.

mod engine;

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{DownlinkMode, PayloadMode, RunConfig};
use crate::error::SimError;
use crate::phy::{draw_transport_block, BlockOutcome, TransportBlock};
use crate::radio::Direction;
use crate::rng::{stream, Stream};
use crate::scenario::Scenario;

/// End-to-end latency of one delivery; failures are never finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Latency {
    Finite(f64),
    Infinite,
}

impl Latency {
    pub fn is_finite(self) -> bool {
        matches!(self, Latency::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Latency::Finite(v) => Some(v),
            Latency::Infinite => None,
        }
    }
}

impl fmt::Display for Latency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Latency::Finite(v) => write!(f, "{v:.3}"),
            Latency::Infinite => f.write_str("INF"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Packet {
    pub id: u64,
    pub tx_id: u32,
    pub gen_ms: f64,
    pub payload_bytes: u32,
    pub receivers: Vec<u32>,
}

/// Outcome of one (packet, receiver) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeliveryRecord {
    pub packet_id: u64,
    pub tx_id: u32,
    pub rx_id: u32,
    pub gen_ms: f64,
    pub latency: Latency,
    /// Set once the uplink succeeded.
    pub ul_ms: Option<f64>,
    pub inter_enb_ms: Option<f64>,
    /// Set only for successful deliveries.
    pub dl_ms: Option<f64>,
    pub ul_attempts: u32,
    /// HARQ attempts (unicast) or replicas transmitted (multicast).
    pub dl_attempts: u32,
    pub mode: DownlinkMode,
}

impl DeliveryRecord {
    pub fn is_success(&self) -> bool {
        self.latency.is_finite()
    }
}

/// What an error draw is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawContext {
    pub direction: Direction,
    pub packet_id: u64,
    /// `None` on the uplink.
    pub rx_id: Option<u32>,
    /// 1-based HARQ attempt or multicast replica.
    pub attempt: u32,
}

/// Decides whether a transport block is lost.
pub trait ErrorSource {
    fn fails(&mut self, ctx: &DrawContext, bler: f64, tb: &TransportBlock) -> bool;
}

impl<F> ErrorSource for F
where
    F: FnMut(&DrawContext, f64) -> bool,
{
    fn fails(&mut self, ctx: &DrawContext, bler: f64, _tb: &TransportBlock) -> bool {
        self(ctx, bler)
    }
}

/// Bernoulli draws per code block, with separate uplink and downlink streams.
#[derive(Debug, Clone)]
pub struct SeededErrors {
    uplink: ChaCha8Rng,
    downlink: ChaCha8Rng,
}

impl SeededErrors {
    pub fn new(seed: u64) -> Self {
        Self {
            uplink: stream(seed, Stream::UplinkErrors),
            downlink: stream(seed, Stream::DownlinkErrors),
        }
    }
}

impl ErrorSource for SeededErrors {
    fn fails(&mut self, ctx: &DrawContext, bler: f64, tb: &TransportBlock) -> bool {
        let rng = match ctx.direction {
            Direction::Uplink => &mut self.uplink,
            Direction::Downlink => &mut self.downlink,
        };
        draw_transport_block(tb, bler, rng) == BlockOutcome::Failure
    }
}

/// Where the packets of a run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Traffic {
    /// Every vehicle transmits once per CAM period from a uniform offset;
    /// receivers are the participants in range at generation time.
    Periodic,
    /// A fixed list; receivers are taken as given.
    Explicit(Vec<Packet>),
}

/// Periodic packet plan without receivers, ordered by generation time.
/// Generation runs through the warm-up and then the measurement horizon.
pub fn periodic_packets(cfg: &RunConfig, scenario: &Scenario, seed: u64) -> Vec<Packet> {
    let period = cfg.run.cam_period_ms;
    let horizon = (cfg.run.warmup_s + cfg.run.horizon_s) * 1000.0;
    let mut offsets = stream(seed, Stream::Generation);
    let mut plan = Vec::new();
    for v in scenario.vehicles() {
        let offset = offsets.random::<f64>() * period;
        let mut k = 0u32;
        loop {
            let gen_ms = offset + k as f64 * period;
            if gen_ms >= horizon {
                break;
            }
            plan.push((gen_ms, v.id));
            k += 1;
        }
    }
    plan.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut payload = stream(seed, Stream::Payload);
    let base = cfg.phy.payload_bytes as f64;
    plan.into_iter()
        .enumerate()
        .map(|(i, (gen_ms, tx_id))| {
            let payload_bytes = match cfg.phy.payload_mode {
                PayloadMode::Fixed => cfg.phy.payload_bytes,
                PayloadMode::Uniform => {
                    let s = cfg.phy.payload_spread;
                    (base * payload.random_range(1.0 - s..=1.0 + s))
                        .round()
                        .max(1.0) as u32
                }
            };
            Packet {
                id: i as u64,
                tx_id,
                gen_ms,
                payload_bytes,
                receivers: Vec::new(),
            }
        })
        .collect()
}

/// Builds the scenario, runs the configured traffic with seeded error draws
/// and returns the records of packets generated after the warm-up.
pub fn run_simulation(cfg: &RunConfig, seed: u64) -> Result<Vec<DeliveryRecord>, SimError> {
    cfg.validate()?;
    let scenario = Scenario::build(cfg, seed)?;
    let mut errors = SeededErrors::new(seed);
    let records = run_with(cfg, scenario, Traffic::Periodic, seed, &mut errors)?;
    let warmup_ms = cfg.run.warmup_s * 1000.0;
    Ok(records
        .into_iter()
        .filter(|r| r.gen_ms >= warmup_ms)
        .collect())
}

/// Runs `traffic` over `scenario` and returns every record, warm-up
/// included, ordered by packet then receiver.
pub fn run_with(
    cfg: &RunConfig,
    scenario: Scenario,
    traffic: Traffic,
    seed: u64,
    errors: &mut dyn ErrorSource,
) -> Result<Vec<DeliveryRecord>, SimError> {
    engine::Engine::new(cfg, scenario, traffic, seed, errors)?.run()
}
