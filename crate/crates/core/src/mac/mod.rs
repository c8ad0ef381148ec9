//! TTI-level MAC: per-sector resource grids, schedulers, HARQ timing and
//! the user-plane latency bookkeeping.

pub mod grid;
pub mod scheduler;

use serde::Serialize;

use crate::config::MacConfig;
use crate::error::AccountingError;

pub use grid::{GridError, ResourceGrid};
pub use scheduler::{
    schedule_downlink, schedule_round_robin, schedule_uplink_rr, Allocation, PrbRequest, RrCursor,
};

pub const TTI_MS: f64 = 1.0;

/// Whole TTIs covering `ms` milliseconds.
pub fn ms_to_ttis(ms: f64) -> u64 {
    (ms / TTI_MS - 1e-9).ceil().max(0.0) as u64
}

/// Fixed user-plane latency components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyBudget {
    pub ue_processing_ms: f64,
    pub frame_alignment_ms: f64,
    pub harq_retx_gap_ms: f64,
    pub enb_processing_ms: f64,
    pub inter_enb_ms: f64,
    pub packet_lifetime_ms: f64,
}

impl Default for LatencyBudget {
    fn default() -> Self {
        Self::from(&MacConfig::default())
    }
}

impl From<&MacConfig> for LatencyBudget {
    fn from(m: &MacConfig) -> Self {
        Self {
            ue_processing_ms: m.ue_processing_ms,
            frame_alignment_ms: m.frame_alignment_ms,
            harq_retx_gap_ms: m.harq_retx_gap_ms,
            enb_processing_ms: m.enb_processing_ms,
            inter_enb_ms: m.inter_enb_ms,
            packet_lifetime_ms: m.packet_lifetime_ms,
        }
    }
}

impl LatencyBudget {
    pub fn harq_gap_ttis(&self) -> u64 {
        ms_to_ttis(self.harq_retx_gap_ms)
    }

    /// First TTI in which a freshly generated packet can be sent uplink.
    pub fn ul_eligible_tti(&self, gen_ms: f64) -> u64 {
        ((gen_ms + self.ue_processing_ms) / TTI_MS - 1e-9)
            .ceil()
            .max(0.0) as u64
    }

    /// First downlink TTI for a packet whose uplink ended at `ul_end_tti`.
    pub fn dl_eligible_tti(&self, ul_end_tti: u64, same_enb: bool) -> u64 {
        let forward = self.enb_processing_ms + if same_enb { 0.0 } else { self.inter_enb_ms };
        ul_end_tti + ms_to_ttis(forward)
    }

    /// Whether a transmission starting at `tti` can still finish inside the
    /// packet lifetime.
    pub fn can_start(&self, gen_ms: f64, tti: u64) -> bool {
        (tti + 1) as f64 * TTI_MS <= gen_ms + self.packet_lifetime_ms + 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Attempt {
    pub start_tti: u64,
    /// Exclusive: the TTI boundary at which the attempt completed.
    pub end_tti: u64,
    pub prbs: u32,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarqProcess {
    pub gen_ms: f64,
    pub attempts: Vec<Attempt>,
    pub max_retx: u32,
    pub next_eligible_tti: u64,
}

impl HarqProcess {
    pub fn new(gen_ms: f64, first_eligible_tti: u64, max_retx: u32) -> Self {
        Self {
            gen_ms,
            attempts: Vec::new(),
            max_retx,
            next_eligible_tti: first_eligible_tti,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextAttempt {
    At(u64),
    Exhausted,
}

/// Start of the retransmission after a failed attempt ending at
/// `failure_end_tti`, or `Exhausted` when the retransmission cap or the
/// packet lifetime forbids one.
pub fn harq_next_attempt(
    harq: &HarqProcess,
    failure_end_tti: u64,
    budget: &LatencyBudget,
) -> NextAttempt {
    let next = failure_end_tti + budget.harq_gap_ttis();
    if (harq.attempts.len() as u32) < 1 + harq.max_retx && budget.can_start(harq.gen_ms, next) {
        NextAttempt::At(next)
    } else {
        NextAttempt::Exhausted
    }
}

/// Engine-side timing of one (packet, receiver) delivery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyTrace {
    pub gen_ms: f64,
    pub ul_eligible_tti: u64,
    pub ul_end_tti: Option<u64>,
    pub same_enb: bool,
    pub dl_eligible_tti: Option<u64>,
    pub dl_end_tti: Option<u64>,
}

/// Uplink, inter-eNodeB and downlink shares of an end-to-end latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phases {
    /// Generation to reception at the serving eNodeB.
    pub ul_ms: f64,
    pub inter_enb_ms: f64,
    /// eNodeB processing through reception processing at the receiver.
    pub dl_ms: f64,
}

impl Phases {
    pub fn total(&self) -> f64 {
        self.ul_ms + self.inter_enb_ms + self.dl_ms
    }
}

/// Uplink phase: UE processing + frame alignment + queueing, transmission
/// and retransmission TTIs.
pub fn uplink_phase_ms(
    trace: &LatencyTrace,
    budget: &LatencyBudget,
) -> Result<f64, AccountingError> {
    let end = trace
        .ul_end_tti
        .ok_or(AccountingError::IncompleteTrace("uplink end"))?;
    if end <= trace.ul_eligible_tti {
        return Err(AccountingError::Inconsistent(
            "uplink ends before it starts",
        ));
    }
    Ok(budget.ue_processing_ms
        + budget.frame_alignment_ms
        + (end - trace.ul_eligible_tti) as f64 * TTI_MS)
}

pub fn phases(trace: &LatencyTrace, budget: &LatencyBudget) -> Result<Phases, AccountingError> {
    let ul_ms = uplink_phase_ms(trace, budget)?;
    let dl_start = trace
        .dl_eligible_tti
        .ok_or(AccountingError::IncompleteTrace("downlink start"))?;
    let dl_end = trace
        .dl_end_tti
        .ok_or(AccountingError::IncompleteTrace("downlink end"))?;
    if dl_end <= dl_start {
        return Err(AccountingError::Inconsistent(
            "downlink ends before it starts",
        ));
    }
    let inter_enb_ms = if trace.same_enb {
        0.0
    } else {
        budget.inter_enb_ms
    };
    let dl_ms = budget.enb_processing_ms
        + budget.frame_alignment_ms
        + (dl_end - dl_start) as f64 * TTI_MS
        + budget.ue_processing_ms;
    Ok(Phases {
        ul_ms,
        inter_enb_ms,
        dl_ms,
    })
}

/// End-to-end user-plane latency of a completed delivery.
pub fn e2e_latency(trace: &LatencyTrace, budget: &LatencyBudget) -> Result<f64, AccountingError> {
    phases(trace, budget).map(|p| p.total())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(ul: (u64, u64), dl: (u64, u64)) -> LatencyTrace {
        LatencyTrace {
            gen_ms: ul.0 as f64 - 1.0,
            ul_eligible_tti: ul.0,
            ul_end_tti: Some(ul.1),
            same_enb: true,
            dl_eligible_tti: Some(dl.0),
            dl_end_tti: Some(dl.1),
        }
    }

    #[test]
    fn one_tti_each_way_is_six_ms() {
        let b = LatencyBudget::default();
        assert_eq!(e2e_latency(&trace((1, 2), (3, 4)), &b), Ok(6.0));
        let p = phases(&trace((1, 2), (3, 4)), &b).unwrap();
        assert_eq!(p.ul_ms, 2.5);
        assert_eq!(p.dl_ms, 3.5);
    }

    #[test]
    fn one_downlink_retransmission_adds_eight_ms() {
        let b = LatencyBudget::default();
        // first DL attempt in TTI 3 fails, retx starts at 4 + 7 = 11
        assert_eq!(e2e_latency(&trace((1, 2), (3, 12)), &b), Ok(14.0));
    }

    #[test]
    fn other_enodeb_adds_exchange_time() {
        let b = LatencyBudget::default();
        let mut t = trace((1, 2), (4, 5));
        t.same_enb = false;
        assert_eq!(b.dl_eligible_tti(2, false), 4);
        assert_eq!(e2e_latency(&t, &b), Ok(7.0));
    }

    #[test]
    fn incomplete_trace_is_an_error() {
        let b = LatencyBudget::default();
        let mut t = trace((1, 2), (3, 4));
        t.dl_end_tti = None;
        assert_eq!(
            e2e_latency(&t, &b),
            Err(AccountingError::IncompleteTrace("downlink end"))
        );
    }

    #[test]
    fn retransmission_timing() {
        let b = LatencyBudget::default();
        let mut h = HarqProcess::new(0.0, 1, 3);
        h.attempts.push(Attempt {
            start_tti: 3,
            end_tti: 4,
            prbs: 17,
            success: false,
        });
        assert_eq!(harq_next_attempt(&h, 4, &b), NextAttempt::At(11));

        let mut h0 = HarqProcess::new(0.0, 1, 0);
        h0.attempts.push(Attempt {
            start_tti: 3,
            end_tti: 4,
            prbs: 17,
            success: false,
        });
        assert_eq!(harq_next_attempt(&h0, 4, &b), NextAttempt::Exhausted);

        let mut late = HarqProcess::new(0.0, 1, 3);
        late.attempts.push(Attempt {
            start_tti: 96,
            end_tti: 97,
            prbs: 17,
            success: false,
        });
        assert_eq!(harq_next_attempt(&late, 97, &b), NextAttempt::Exhausted);
    }

    #[test]
    fn eligibility() {
        let b = LatencyBudget::default();
        assert_eq!(b.ul_eligible_tti(0.0), 1);
        assert_eq!(b.ul_eligible_tti(0.3), 2);
        assert_eq!(b.dl_eligible_tti(2, true), 3);
        assert!(b.can_start(0.0, 99));
        assert!(!b.can_start(0.0, 100));
    }
}
