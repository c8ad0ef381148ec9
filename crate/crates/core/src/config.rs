//! Run configuration.
//!
//! The on-disk format is TOML with five sections (`[scenario]`, `[radio]`,
//! `[phy]`, `[mac]`, `[run]`). Every key is optional; missing keys take the
//! defaults below and unknown keys are rejected. `ltev2x
//! --print-default-config` prints the complete schema with its defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Bandwidths (MHz) with a fixed PRB mapping.
pub const SUPPORTED_BANDWIDTHS: [(f64, u32); 4] =
    [(10.0, 50), (20.0, 100), (40.0, 200), (100.0, 500)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum DownlinkMode {
    Unicast,
    Multicast,
}

impl DownlinkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DownlinkMode::Unicast => "unicast",
            DownlinkMode::Multicast => "multicast",
        }
    }
}

impl std::str::FromStr for DownlinkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "unicast" => Ok(DownlinkMode::Unicast),
            "multicast" => Ok(DownlinkMode::Multicast),
            other => Err(format!("unknown downlink mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerPolicy {
    /// Plain round robin.
    Rr,
    /// Most recently arrived packets first; ties shared round robin.
    NewestFirstThenRr,
}

/// How much a round-robin turn hands out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RrQuantum {
    /// One PRB per turn.
    Prb,
    /// The request's whole outstanding demand per turn.
    Demand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadMode {
    Fixed,
    /// Uniform in `payload_bytes * (1 ± payload_spread)`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub block_size_m: f64,
    pub street_width_m: f64,
    /// `[row, col]` of the open-space block.
    pub park_slot: Option<[u32; 2]>,
    /// `[row, col]` of the building carrying the base station.
    pub site_slot: [u32; 2],
    pub building_height_m: f64,
    pub mast_height_m: f64,
    pub ue_height_m: f64,
    pub first_sector_azimuth_deg: f64,
    pub density_per_km2: f64,
    pub vehicle_fraction: f64,
    pub radius_m: f64,
    pub mobility: bool,
    pub vehicle_max_speed_kmh: f64,
    pub vru_max_speed_kmh: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid_rows: 4,
            grid_cols: 4,
            block_size_m: 120.0,
            street_width_m: 21.0,
            park_slot: Some([2, 2]),
            site_slot: [1, 1],
            building_height_m: 24.0,
            mast_height_m: 3.0,
            ue_height_m: 1.5,
            first_sector_azimuth_deg: 30.0,
            density_per_km2: 1000.0,
            vehicle_fraction: 0.5,
            radius_m: 200.0,
            mobility: false,
            vehicle_max_speed_kmh: 50.0,
            vru_max_speed_kmh: 5.0,
        }
    }
}

/// `slope * log10(d) + intercept + freq_coeff * log10(fc_ghz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogDistanceParams {
    pub slope: f64,
    pub intercept: f64,
    pub freq_coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_ghz: f64,
    pub bandwidth_ul_mhz: f64,
    pub bandwidth_dl_mhz: f64,
    pub allow_custom_bw: bool,
    pub prb_bandwidth_khz: f64,
    pub pathloss_los: LogDistanceParams,
    pub pathloss_nlos: LogDistanceParams,
    pub shadowing_sigma_los_db: f64,
    pub shadowing_sigma_nlos_db: f64,
    pub antenna_beamwidth_deg: f64,
    pub antenna_max_attenuation_db: f64,
    pub antenna_gain_dbi: f64,
    pub ue_antenna_gain_dbi: f64,
    pub thermal_density_dbm_hz: f64,
    pub noise_figure_enb_db: f64,
    pub noise_figure_ue_db: f64,
    /// Sector transmit power for a 10 MHz carrier; scales linearly with bandwidth.
    pub sector_power_dbm_per_10mhz: f64,
    pub ue_tx_power_dbm: f64,
    pub interference: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 0.8,
            bandwidth_ul_mhz: 10.0,
            bandwidth_dl_mhz: 10.0,
            allow_custom_bw: false,
            prb_bandwidth_khz: 180.0,
            pathloss_los: LogDistanceParams {
                slope: 22.0,
                intercept: 28.0,
                freq_coeff: 20.0,
            },
            pathloss_nlos: LogDistanceParams {
                slope: 36.7,
                intercept: 22.7,
                freq_coeff: 26.0,
            },
            shadowing_sigma_los_db: 4.0,
            shadowing_sigma_nlos_db: 6.0,
            antenna_beamwidth_deg: 65.0,
            antenna_max_attenuation_db: 30.0,
            antenna_gain_dbi: 14.0,
            ue_antenna_gain_dbi: 0.0,
            thermal_density_dbm_hz: -174.0,
            noise_figure_enb_db: 5.0,
            noise_figure_ue_db: 9.0,
            sector_power_dbm_per_10mhz: 46.0,
            ue_tx_power_dbm: 24.0,
            interference: true,
        }
    }
}

impl RadioConfig {
    pub fn prbs_ul(&self) -> Result<u32, ConfigError> {
        prbs_for_bandwidth(self.bandwidth_ul_mhz, self.allow_custom_bw)
            .map_err(|m| ConfigError::range("radio.bandwidth_ul_mhz", m))
    }

    pub fn prbs_dl(&self) -> Result<u32, ConfigError> {
        prbs_for_bandwidth(self.bandwidth_dl_mhz, self.allow_custom_bw)
            .map_err(|m| ConfigError::range("radio.bandwidth_dl_mhz", m))
    }

    /// Total sector transmit power for the configured downlink carrier.
    pub fn sector_power_dbm(&self) -> f64 {
        self.sector_power_dbm_per_10mhz + 10.0 * (self.bandwidth_dl_mhz / 10.0).log10()
    }
}

/// PRB count for a carrier bandwidth.
///
/// Custom bandwidths (when allowed) use `floor(floor(bw / 0.18) / 12) * 12`.
pub fn prbs_for_bandwidth(bw_mhz: f64, allow_custom: bool) -> Result<u32, String> {
    if let Some(&(_, prbs)) = SUPPORTED_BANDWIDTHS
        .iter()
        .find(|(bw, _)| (bw - bw_mhz).abs() < 1e-9)
    {
        return Ok(prbs);
    }
    if !allow_custom {
        return Err(format!(
            "{bw_mhz} MHz is not one of 10, 20, 40, 100 (set allow_custom_bw to override)"
        ));
    }
    if !(bw_mhz.is_finite() && bw_mhz > 0.0) {
        return Err(format!("{bw_mhz} MHz is not a positive bandwidth"));
    }
    let prbs = ((bw_mhz / 0.18).floor() as u32) / 12 * 12;
    if prbs == 0 {
        return Err(format!("{bw_mhz} MHz yields no resource blocks"));
    }
    Ok(prbs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsOverride {
    pub index: u8,
    pub efficiency: f64,
    pub threshold_db: f64,
    pub slope_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyConfig {
    pub data_res_per_prb: u32,
    pub payload_bytes: u32,
    pub payload_mode: PayloadMode,
    pub payload_spread: f64,
    /// Fraction of the Shannon bound used to place each MCS's 10% BLER point.
    pub shannon_attenuation: f64,
    pub bler_slope_db: f64,
    /// Replaces the calibrated CQI table when present.
    pub mcs_table: Option<Vec<McsOverride>>,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            data_res_per_prb: 120,
            payload_bytes: 212,
            payload_mode: PayloadMode::Fixed,
            payload_spread: 0.2,
            shannon_attenuation: 0.6,
            bler_slope_db: 1.0,
            mcs_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConfig {
    pub max_retx: u32,
    pub packet_lifetime_ms: f64,
    pub ue_processing_ms: f64,
    pub frame_alignment_ms: f64,
    pub harq_retx_gap_ms: f64,
    pub enb_processing_ms: f64,
    pub inter_enb_ms: f64,
    pub dl_scheduler: SchedulerPolicy,
    pub ul_rr_quantum: RrQuantum,
    pub dl_rr_quantum: RrQuantum,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            max_retx: 3,
            packet_lifetime_ms: 100.0,
            ue_processing_ms: 1.0,
            frame_alignment_ms: 0.5,
            harq_retx_gap_ms: 7.0,
            enb_processing_ms: 1.0,
            inter_enb_ms: 1.0,
            dl_scheduler: SchedulerPolicy::NewestFirstThenRr,
            ul_rr_quantum: RrQuantum::Prb,
            dl_rr_quantum: RrQuantum::Demand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Measured time after the warm-up.
    pub horizon_s: f64,
    pub warmup_s: f64,
    pub cam_period_ms: f64,
    pub downlink_mode: DownlinkMode,
    pub multicast_mcs_efficiency: f64,
    pub max_replicas: u32,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon_s: 2.0,
            warmup_s: 0.2,
            cam_period_ms: 100.0,
            downlink_mode: DownlinkMode::Multicast,
            multicast_mcs_efficiency: 0.877,
            max_replicas: 4,
            seeds: vec![1],
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub phy: PhyConfig,
    pub mac: MacConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn parse_str(src: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(src, s.start)).unwrap_or((0, 0));
            let message = e.message().to_string();
            if message.contains("unknown field") {
                ConfigError::UnknownKey { line, message }
            } else {
                ConfigError::Syntax {
                    line,
                    column,
                    message,
                }
            }
        })?;
        cfg.validate().map_err(|err| match err {
            ConfigError::OutOfRange { key, message, .. } => {
                let line = locate_key(src, &key);
                ConfigError::OutOfRange { key, line, message }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        positive("scenario.grid_rows", s.grid_rows as f64)?;
        positive("scenario.grid_cols", s.grid_cols as f64)?;
        positive("scenario.block_size_m", s.block_size_m)?;
        non_negative("scenario.street_width_m", s.street_width_m)?;
        if let Some([r, c]) = s.park_slot {
            if r >= s.grid_rows || c >= s.grid_cols {
                return Err(ConfigError::range("scenario.park_slot", "outside the grid"));
            }
        }
        let [r, c] = s.site_slot;
        if r >= s.grid_rows || c >= s.grid_cols {
            return Err(ConfigError::range("scenario.site_slot", "outside the grid"));
        }
        non_negative("scenario.building_height_m", s.building_height_m)?;
        non_negative("scenario.mast_height_m", s.mast_height_m)?;
        non_negative("scenario.ue_height_m", s.ue_height_m)?;
        finite(
            "scenario.first_sector_azimuth_deg",
            s.first_sector_azimuth_deg,
        )?;
        non_negative("scenario.density_per_km2", s.density_per_km2)?;
        unit_interval("scenario.vehicle_fraction", s.vehicle_fraction)?;
        positive("scenario.radius_m", s.radius_m)?;
        non_negative("scenario.vehicle_max_speed_kmh", s.vehicle_max_speed_kmh)?;
        if s.vehicle_max_speed_kmh > 50.0 {
            return Err(ConfigError::range(
                "scenario.vehicle_max_speed_kmh",
                "urban speed limit is 50 km/h",
            ));
        }
        non_negative("scenario.vru_max_speed_kmh", s.vru_max_speed_kmh)?;

        let r = &self.radio;
        positive("radio.carrier_ghz", r.carrier_ghz)?;
        self.radio.prbs_ul()?;
        self.radio.prbs_dl()?;
        positive("radio.prb_bandwidth_khz", r.prb_bandwidth_khz)?;
        for (key, p) in [
            ("radio.pathloss_los", r.pathloss_los),
            ("radio.pathloss_nlos", r.pathloss_nlos),
        ] {
            positive(key, p.slope)?;
            finite(key, p.intercept)?;
            finite(key, p.freq_coeff)?;
        }
        non_negative("radio.shadowing_sigma_los_db", r.shadowing_sigma_los_db)?;
        non_negative("radio.shadowing_sigma_nlos_db", r.shadowing_sigma_nlos_db)?;
        positive("radio.antenna_beamwidth_deg", r.antenna_beamwidth_deg)?;
        non_negative(
            "radio.antenna_max_attenuation_db",
            r.antenna_max_attenuation_db,
        )?;
        finite("radio.antenna_gain_dbi", r.antenna_gain_dbi)?;
        finite("radio.ue_antenna_gain_dbi", r.ue_antenna_gain_dbi)?;
        finite("radio.thermal_density_dbm_hz", r.thermal_density_dbm_hz)?;
        non_negative("radio.noise_figure_enb_db", r.noise_figure_enb_db)?;
        non_negative("radio.noise_figure_ue_db", r.noise_figure_ue_db)?;
        finite(
            "radio.sector_power_dbm_per_10mhz",
            r.sector_power_dbm_per_10mhz,
        )?;
        finite("radio.ue_tx_power_dbm", r.ue_tx_power_dbm)?;

        let p = &self.phy;
        positive("phy.data_res_per_prb", p.data_res_per_prb as f64)?;
        if p.payload_mode == PayloadMode::Uniform {
            unit_interval("phy.payload_spread", p.payload_spread)?;
        }
        if !(p.shannon_attenuation > 0.0 && p.shannon_attenuation <= 1.0) {
            return Err(ConfigError::range(
                "phy.shannon_attenuation",
                "must be in (0, 1]",
            ));
        }
        positive("phy.bler_slope_db", p.bler_slope_db)?;
        let table = crate::phy::McsTable::from_config(p)
            .map_err(|e| ConfigError::range("phy.mcs_table", e.to_string()))?;

        let m = &self.mac;
        positive("mac.packet_lifetime_ms", m.packet_lifetime_ms)?;
        non_negative("mac.ue_processing_ms", m.ue_processing_ms)?;
        non_negative("mac.frame_alignment_ms", m.frame_alignment_ms)?;
        non_negative("mac.harq_retx_gap_ms", m.harq_retx_gap_ms)?;
        non_negative("mac.enb_processing_ms", m.enb_processing_ms)?;
        non_negative("mac.inter_enb_ms", m.inter_enb_ms)?;

        let run = &self.run;
        positive("run.horizon_s", run.horizon_s)?;
        non_negative("run.warmup_s", run.warmup_s)?;
        positive("run.cam_period_ms", run.cam_period_ms)?;
        if table.by_efficiency(run.multicast_mcs_efficiency).is_none() {
            return Err(ConfigError::range(
                "run.multicast_mcs_efficiency",
                format!(
                    "{} is not an efficiency in the MCS table",
                    run.multicast_mcs_efficiency
                ),
            ));
        }
        if run.max_replicas == 0 {
            return Err(ConfigError::range("run.max_replicas", "must be at least 1"));
        }
        if run.seeds.is_empty() {
            return Err(ConfigError::range("run.seeds", "seed list is empty"));
        }
        Ok(())
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Missing {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::parse_str(&src)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::range(key, format!("{v} must be positive")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::range(key, format!("{v} must be non-negative")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::range(key, format!("{v} must be finite")))
    }
}

fn unit_interval(key: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::range(key, format!("{v} must lie in [0, 1]")))
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

/// Finds the line defining `section.key`, if the key appears in the source.
fn locate_key(src: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = "";
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.radio.carrier_ghz, 0.8);
        assert_eq!(cfg.radio.ue_tx_power_dbm, 24.0);
        assert_eq!(cfg.phy.payload_bytes, 212);
        assert_eq!(cfg.run.cam_period_ms, 100.0);
        assert_eq!(cfg.scenario.radius_m, 200.0);
        assert_eq!(cfg.scenario.density_per_km2, 1000.0);
        assert_eq!(cfg.radio.bandwidth_ul_mhz, 10.0);
        assert_eq!(cfg.radio.bandwidth_dl_mhz, 10.0);
        assert_eq!(cfg.run.multicast_mcs_efficiency, 0.877);
    }

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn negative_density_is_rejected_with_line() {
        let src = "[scenario]\n\ndensity_per_km2 = -1\n";
        match RunConfig::parse_str(src) {
            Err(ConfigError::OutOfRange { key, line, .. }) => {
                assert_eq!(key, "scenario.density_per_km2");
                assert_eq!(line, Some(3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsupported_bandwidth_needs_override() {
        let err = RunConfig::parse_str("[radio]\nbandwidth_dl_mhz = 15\n").unwrap_err();
        assert_eq!(err.code(), "E_CONFIG_RANGE");
        let cfg = RunConfig::parse_str("[radio]\nbandwidth_dl_mhz = 15\nallow_custom_bw = true\n")
            .unwrap();
        // floor(15 / 0.18) = 83, 83 / 12 * 12 = 72
        assert_eq!(cfg.radio.prbs_dl().unwrap(), 72);
    }

    #[test]
    fn standard_bandwidth_mapping() {
        for (bw, prbs) in SUPPORTED_BANDWIDTHS {
            assert_eq!(prbs_for_bandwidth(bw, false).unwrap(), prbs);
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = RunConfig::parse_str("[mac]\nmax_retx = 2\nbogus = 1\n").unwrap_err();
        assert_eq!(err.code(), "E_CONFIG_UNKNOWN_KEY");
        match err {
            ConfigError::UnknownKey { line, .. } => assert_eq!(line, 3),
            _ => unreachable!(),
        }
    }

    #[test]
    fn malformed_syntax_is_reported() {
        let err = RunConfig::parse_str("[run\nhorizon_s = 1").unwrap_err();
        assert_eq!(err.code(), "E_CONFIG_SYNTAX");
    }

    #[test]
    fn missing_file_has_its_own_code() {
        let err = parse_config(Path::new("/definitely/not/here.toml")).unwrap_err();
        assert_eq!(err.code(), "E_CONFIG_MISSING");
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        let err = RunConfig::parse_str("[run]\nseeds = []\n").unwrap_err();
        assert!(matches!(err, ConfigError::OutOfRange { ref key, .. } if key == "run.seeds"));
    }

    #[test]
    fn multicast_efficiency_must_be_in_table() {
        let err = RunConfig::parse_str("[run]\nmulticast_mcs_efficiency = 0.5\n").unwrap_err();
        assert_eq!(err.code(), "E_CONFIG_RANGE");
        RunConfig::parse_str("[run]\nmulticast_mcs_efficiency = 1.4766\n").unwrap();
    }

    #[test]
    fn sector_power_scales_with_bandwidth() {
        let mut r = RadioConfig::default();
        assert!((r.sector_power_dbm() - 46.0).abs() < 1e-12);
        r.bandwidth_dl_mhz = 100.0;
        assert!((r.sector_power_dbm() - 56.0).abs() < 1e-12);
    }
}
