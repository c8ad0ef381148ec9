//! Link-to-system abstraction: MCS table, SINR to BLER mapping, transport
//! block sizing and the chase-combining effective SINR.

use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::config::PhyConfig;
use crate::error::PhyError;

/// Spectral efficiencies (bits per resource element) of the 15 CQI levels.
pub const CQI_EFFICIENCIES: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023,
    4.5234, 5.1152, 5.5547,
];

/// Block error rate link adaptation aims for.
pub const BLER_TARGET: f64 = 0.1;
/// Slack on the target comparison so a SINR exactly at a calibration point
/// selects that MCS despite rounding.
const BLER_TOLERANCE: f64 = 1e-9;

/// Standard normal quantile at 0.9: the curve offset (in slopes) of the
/// 10% BLER point above the 50% point.
pub const Z_TARGET: f64 = 1.281_551_565_544_600_4;

pub const TB_CRC_BITS: u32 = 24;
pub const CB_CRC_BITS: u32 = 24;
pub const MAX_CODE_BLOCK_BITS: u32 = 6144;

/// `BLER(g) = 0.5 erfc((g - threshold) / (sqrt(2) slope))`, all in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlerCurve {
    pub threshold_db: f64,
    pub slope_db: f64,
}

impl BlerCurve {
    pub fn bler(&self, sinr_db: f64) -> f64 {
        0.5 * erfc((sinr_db - self.threshold_db) / (SQRT_2 * self.slope_db))
    }

    /// SINR at which the curve crosses the 10% target.
    pub fn target_sinr_db(&self) -> f64 {
        self.threshold_db + self.slope_db * Z_TARGET
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsEntry {
    pub index: u8,
    pub efficiency_bits_per_re: f64,
    pub bler_curve: BlerCurve,
}

impl McsEntry {
    /// Efficiency in units of 1e-4 bit/RE; PRB sizing is exact in this unit.
    fn efficiency_e4(&self) -> u64 {
        (self.efficiency_bits_per_re * 1e4).round() as u64
    }
}

/// SINR where `attenuation * log2(1 + snr)` reaches `efficiency`.
pub fn attenuated_shannon_sinr_db(efficiency: f64, attenuation: f64) -> f64 {
    10.0 * (2f64.powf(efficiency / attenuation) - 1.0).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    /// CQI table with each curve placed so its 10% point sits on the
    /// attenuated Shannon bound.
    pub fn calibrated(attenuation: f64, slope_db: f64) -> Self {
        let entries = CQI_EFFICIENCIES
            .iter()
            .enumerate()
            .map(|(i, &eff)| McsEntry {
                index: i as u8 + 1,
                efficiency_bits_per_re: eff,
                bler_curve: BlerCurve {
                    threshold_db: attenuated_shannon_sinr_db(eff, attenuation)
                        - slope_db * Z_TARGET,
                    slope_db,
                },
            })
            .collect();
        Self { entries }
    }

    pub fn from_entries(entries: Vec<McsEntry>) -> Result<Self, PhyError> {
        if entries.is_empty() {
            return Err(PhyError::EmptyTable);
        }
        for e in &entries {
            if !(e.efficiency_bits_per_re > 0.0 && e.efficiency_bits_per_re.is_finite()) {
                return Err(PhyError::BadEntry {
                    index: e.index,
                    message: "efficiency must be positive".into(),
                });
            }
            if !(e.bler_curve.slope_db > 0.0) || !e.bler_curve.threshold_db.is_finite() {
                return Err(PhyError::BadEntry {
                    index: e.index,
                    message: "curve needs a finite threshold and positive slope".into(),
                });
            }
        }
        for w in entries.windows(2) {
            if w[1].efficiency_e4() <= w[0].efficiency_e4() {
                return Err(PhyError::NotIncreasing(w[1].index));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_config(cfg: &PhyConfig) -> Result<Self, PhyError> {
        match &cfg.mcs_table {
            None => Ok(Self::calibrated(cfg.shannon_attenuation, cfg.bler_slope_db)),
            Some(rows) => Self::from_entries(
                rows.iter()
                    .map(|r| McsEntry {
                        index: r.index,
                        efficiency_bits_per_re: r.efficiency,
                        bler_curve: BlerCurve {
                            threshold_db: r.threshold_db,
                            slope_db: r.slope_db,
                        },
                    })
                    .collect(),
            ),
        }
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn most_robust(&self) -> &McsEntry {
        &self.entries[0]
    }

    pub fn by_index(&self, index: u8) -> Option<&McsEntry> {
        self.entries.iter().find(|e| e.index == index)
    }

    /// Entry whose efficiency matches to within 5e-4 bit/RE.
    pub fn by_efficiency(&self, efficiency: f64) -> Option<&McsEntry> {
        self.entries
            .iter()
            .find(|e| (e.efficiency_bits_per_re - efficiency).abs() < 5e-4)
    }
}

pub fn bler(sinr_db: f64, mcs: &McsEntry) -> f64 {
    mcs.bler_curve.bler(sinr_db)
}

/// Highest-efficiency MCS meeting the 10% BLER target, else the most robust.
pub fn select_mcs_unicast(sinr_db: f64, table: &McsTable) -> &McsEntry {
    select_mcs_with(table, |_| sinr_db)
}

/// Like [`select_mcs_unicast`] when the SINR itself depends on the MCS
/// (e.g. uplink power spread over the PRBs that MCS needs).
pub fn select_mcs_with<F>(table: &McsTable, sinr_for: F) -> &McsEntry
where
    F: Fn(&McsEntry) -> f64,
{
    table
        .entries
        .iter()
        .rev()
        .find(|m| bler(sinr_for(m), m) <= BLER_TARGET + BLER_TOLERANCE)
        .unwrap_or_else(|| table.most_robust())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransportBlock {
    pub payload_bits: u32,
    pub crc_bits: u32,
    /// Code block sizes including their own CRC when segmented.
    pub code_blocks: Vec<u32>,
}

impl TransportBlock {
    pub fn total_bits(&self) -> u32 {
        self.code_blocks.iter().sum()
    }

    /// TTIs needed at `available_prbs` per TTI.
    pub fn tti_span(&self, mcs: &McsEntry, data_res_per_prb: u32, available_prbs: u32) -> u32 {
        prbs_required(self, mcs, data_res_per_prb).div_ceil(available_prbs.max(1))
    }
}

/// CRC attachment and code block segmentation.
pub fn build_transport_block(payload_bytes: u32) -> TransportBlock {
    let payload_bits = payload_bytes * 8;
    let bits = payload_bits + TB_CRC_BITS;
    let code_blocks = if bits <= MAX_CODE_BLOCK_BITS {
        vec![bits]
    } else {
        let max_payload = MAX_CODE_BLOCK_BITS - CB_CRC_BITS;
        let count = bits.div_ceil(max_payload);
        let base = bits / count;
        let extra = bits % count;
        (0..count)
            .map(|i| base + u32::from(i < extra) + CB_CRC_BITS)
            .collect()
    };
    TransportBlock {
        payload_bits,
        crc_bits: TB_CRC_BITS,
        code_blocks,
    }
}

/// `ceil(total_bits / (efficiency * data REs per PRB))`.
pub fn prbs_required(tb: &TransportBlock, mcs: &McsEntry, data_res_per_prb: u32) -> u32 {
    let bits_e4 = tb.total_bits() as u64 * 10_000;
    let per_prb_e4 = mcs.efficiency_e4() * data_res_per_prb as u64;
    bits_e4.div_ceil(per_prb_e4).max(1) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockOutcome {
    Success,
    Failure,
}

pub fn draw_block_error<R: Rng + ?Sized>(bler: f64, rng: &mut R) -> BlockOutcome {
    debug_assert!((0.0..=1.0).contains(&bler));
    if rng.random::<f64>() < bler {
        BlockOutcome::Failure
    } else {
        BlockOutcome::Success
    }
}

/// One draw per code block; the transport block fails if any block does.
pub fn draw_transport_block<R: Rng + ?Sized>(
    tb: &TransportBlock,
    bler: f64,
    rng: &mut R,
) -> BlockOutcome {
    let mut outcome = BlockOutcome::Success;
    for _ in &tb.code_blocks {
        if draw_block_error(bler, rng) == BlockOutcome::Failure {
            outcome = BlockOutcome::Failure;
        }
    }
    outcome
}

/// Effective SINR after maximal ratio combining of replicas.
///
/// Panics on an empty slice.
pub fn mrc_combine(sinr_db: &[f64]) -> f64 {
    assert!(!sinr_db.is_empty(), "MRC needs at least one replica");
    10.0 * sinr_db
        .iter()
        .map(|g| 10f64.powf(g / 10.0))
        .sum::<f64>()
        .log10()
}
