//! Link budgets between the site's sectors and the participants.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::config::{LogDistanceParams, RunConfig};
use crate::error::ConfigError;
use crate::rng::{keyed, Stream};
use crate::scenario::{Geometry, Point2, Scenario, Sector};

pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endpoint {
    Sector(u8),
    Participant(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkState {
    pub tx_id: Endpoint,
    pub rx_id: Endpoint,
    pub distance_m: f64,
    pub los: bool,
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    /// Transmit plus receive antenna gain.
    pub antenna_gain_db: f64,
    pub direction: Direction,
}

impl LinkState {
    /// Net gain from transmitter output to receiver input.
    pub fn coupling_db(&self) -> f64 {
        self.antenna_gain_db - self.pathloss_db - self.shadowing_db
    }

    /// Same physical link seen in the opposite direction.
    pub fn reversed(&self) -> LinkState {
        LinkState {
            tx_id: self.rx_id,
            rx_id: self.tx_id,
            direction: match self.direction {
                Direction::Uplink => Direction::Downlink,
                Direction::Downlink => Direction::Uplink,
            },
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub thermal_density_dbm_hz: f64,
    pub noise_figure_enb_db: f64,
    pub noise_figure_ue_db: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            thermal_density_dbm_hz: -174.0,
            noise_figure_enb_db: 5.0,
            noise_figure_ue_db: 9.0,
        }
    }
}

impl NoiseModel {
    /// Noise power over `bandwidth_hz` at the receiving end of `direction`.
    pub fn noise_dbm(&self, bandwidth_hz: f64, direction: Direction) -> f64 {
        let nf = match direction {
            Direction::Uplink => self.noise_figure_enb_db,
            Direction::Downlink => self.noise_figure_ue_db,
        };
        self.thermal_density_dbm_hz + 10.0 * bandwidth_hz.log10() + nf
    }
}

/// True iff segment `a`-`b` crosses no building footprint.
pub fn is_los(a: Point2, b: Point2, geometry: &Geometry) -> bool {
    is_los_excluding(a, b, geometry, None)
}

/// LOS test ignoring building `skip` (the one a rooftop antenna sits on).
pub fn is_los_excluding(a: Point2, b: Point2, geometry: &Geometry, skip: Option<usize>) -> bool {
    geometry
        .buildings
        .iter()
        .enumerate()
        .all(|(i, bld)| Some(i) == skip || !bld.footprint.intersects_segment(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathlossModel {
    pub los: LogDistanceParams,
    pub nlos: LogDistanceParams,
    pub carrier_ghz: f64,
}

impl Default for PathlossModel {
    fn default() -> Self {
        let r = crate::config::RadioConfig::default();
        Self {
            los: r.pathloss_los,
            nlos: r.pathloss_nlos,
            carrier_ghz: r.carrier_ghz,
        }
    }
}

impl PathlossModel {
    pub fn pathloss_db(&self, distance_m: f64, los: bool) -> f64 {
        let p = if los { self.los } else { self.nlos };
        let d = distance_m.max(MIN_DISTANCE_M);
        p.slope * d.log10() + p.intercept + p.freq_coeff * self.carrier_ghz.log10()
    }
}

/// Urban-macro style LOS/NLOS log-distance pathloss with the default constants.
pub fn pathloss_db(distance_m: f64, los: bool, fc_ghz: f64) -> f64 {
    PathlossModel {
        carrier_ghz: fc_ghz,
        ..PathlossModel::default()
    }
    .pathloss_db(distance_m, los)
}

/// Parabolic horizontal sector pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntennaPattern {
    pub beamwidth_3db_deg: f64,
    pub max_attenuation_db: f64,
    pub boresight_gain_dbi: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self {
            beamwidth_3db_deg: 65.0,
            max_attenuation_db: 30.0,
            boresight_gain_dbi: 14.0,
        }
    }
}

impl AntennaPattern {
    pub fn gain_db(&self, offset_deg: f64) -> f64 {
        let off = wrap_deg(offset_deg);
        let att = 12.0 * (off / self.beamwidth_3db_deg).powi(2);
        self.boresight_gain_dbi - att.min(self.max_attenuation_db)
    }
}

/// Wraps an angle to [-180, 180).
pub fn wrap_deg(a: f64) -> f64 {
    (a + 180.0).rem_euclid(360.0) - 180.0
}

/// Sector antenna gain toward `target`.
pub fn antenna_gain_db(sector: &Sector, target: Point2) -> f64 {
    let site = sector.site_position;
    let az = (target.y - site.y).atan2(target.x - site.x).to_degrees();
    sector.antenna.gain_db(az - sector.boresight_azimuth_deg)
}

/// Everything needed to turn geometry into SINR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadioEnv {
    pub pathloss: PathlossModel,
    pub shadowing_sigma_los_db: f64,
    pub shadowing_sigma_nlos_db: f64,
    pub antenna: AntennaPattern,
    pub ue_antenna_gain_dbi: f64,
    pub ue_height_m: f64,
    pub noise: NoiseModel,
    pub prb_bandwidth_hz: f64,
    pub interference: bool,
    pub ue_tx_power_dbm: f64,
    pub prbs_ul: u32,
    pub prbs_dl: u32,
    /// Sector power per downlink PRB.
    pub dl_prb_power_dbm: f64,
}

impl RadioEnv {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let r = &cfg.radio;
        let prbs_dl = r.prbs_dl()?;
        Ok(Self {
            pathloss: PathlossModel {
                los: r.pathloss_los,
                nlos: r.pathloss_nlos,
                carrier_ghz: r.carrier_ghz,
            },
            shadowing_sigma_los_db: r.shadowing_sigma_los_db,
            shadowing_sigma_nlos_db: r.shadowing_sigma_nlos_db,
            antenna: AntennaPattern {
                beamwidth_3db_deg: r.antenna_beamwidth_deg,
                max_attenuation_db: r.antenna_max_attenuation_db,
                boresight_gain_dbi: r.antenna_gain_dbi,
            },
            ue_antenna_gain_dbi: r.ue_antenna_gain_dbi,
            ue_height_m: cfg.scenario.ue_height_m,
            noise: NoiseModel {
                thermal_density_dbm_hz: r.thermal_density_dbm_hz,
                noise_figure_enb_db: r.noise_figure_enb_db,
                noise_figure_ue_db: r.noise_figure_ue_db,
            },
            prb_bandwidth_hz: r.prb_bandwidth_khz * 1e3,
            interference: r.interference,
            ue_tx_power_dbm: r.ue_tx_power_dbm,
            prbs_ul: r.prbs_ul()?,
            prbs_dl,
            dl_prb_power_dbm: r.sector_power_dbm() - 10.0 * (prbs_dl as f64).log10(),
        })
    }

    /// SINR over `allocated_prbs` resource blocks.
    ///
    /// `tx_power_dbm` is the total transmit power spread over the
    /// allocation; `interferer_powers_dbm` are received powers over the same
    /// allocation and add in the linear domain.
    pub fn link_sinr_db(
        &self,
        link: &LinkState,
        tx_power_dbm: f64,
        allocated_prbs: u32,
        interferer_powers_dbm: &[f64],
    ) -> f64 {
        assert!(allocated_prbs >= 1, "allocation must hold at least one PRB");
        let signal = tx_power_dbm + link.coupling_db();
        let noise = self.noise.noise_dbm(
            self.prb_bandwidth_hz * allocated_prbs as f64,
            link.direction,
        );
        let interference: f64 = interferer_powers_dbm.iter().map(|&p| db_to_lin(p)).sum();
        lin_to_db(db_to_lin(signal) / (db_to_lin(noise) + interference))
    }

    /// Downlink transmit power over `prbs` blocks.
    pub fn dl_tx_power_dbm(&self, prbs: u32) -> f64 {
        self.dl_prb_power_dbm + 10.0 * (prbs as f64).log10()
    }

    pub fn noise_per_prb_mw(&self, direction: Direction) -> f64 {
        db_to_lin(self.noise.noise_dbm(self.prb_bandwidth_hz, direction))
    }
}

/// Every sector-participant link of a drop, with shadowing frozen per
/// `(seed, sector, participant)`.
#[derive(Debug, Clone)]
pub struct LinkTable {
    sectors: usize,
    participants: usize,
    links: Vec<LinkState>,
    coupling_lin: Vec<f64>,
}

impl LinkTable {
    pub fn build(scenario: &Scenario, env: &RadioEnv, seed: u64) -> Self {
        let sectors = scenario.sectors.len();
        let participants = scenario.participants.len();
        let mut links = Vec::with_capacity(sectors * participants);
        let mut coupling_lin = Vec::with_capacity(sectors * participants);
        for sector in &scenario.sectors {
            let site = sector.site_position;
            for p in &scenario.participants {
                let los = is_los_excluding(
                    site.xy(),
                    p.position,
                    &scenario.geometry,
                    scenario.site_building,
                );
                let d2 = site.xy().distance(p.position);
                let dz = site.z - env.ue_height_m;
                let distance_m = d2.hypot(dz).max(MIN_DISTANCE_M);
                let sigma = if los {
                    env.shadowing_sigma_los_db
                } else {
                    env.shadowing_sigma_nlos_db
                };
                let link = LinkState {
                    tx_id: Endpoint::Sector(sector.id),
                    rx_id: Endpoint::Participant(p.id),
                    distance_m,
                    los,
                    pathloss_db: env.pathloss.pathloss_db(distance_m, los),
                    shadowing_db: sigma * standard_shadow(seed, sector.id, p.id),
                    antenna_gain_db: antenna_gain_db(sector, p.position) + env.ue_antenna_gain_dbi,
                    direction: Direction::Downlink,
                };
                coupling_lin.push(db_to_lin(link.coupling_db()));
                links.push(link);
            }
        }
        Self {
            sectors,
            participants,
            links,
            coupling_lin,
        }
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn participants(&self) -> usize {
        self.participants
    }

    /// Downlink-oriented link from `sector` to the participant at `index`.
    pub fn link(&self, sector: usize, index: usize) -> &LinkState {
        &self.links[sector * self.participants + index]
    }

    /// Linear coupling (antenna gains over pathloss and shadowing).
    pub fn coupling(&self, sector: usize, index: usize) -> f64 {
        self.coupling_lin[sector * self.participants + index]
    }

    pub fn strongest_sector(&self, index: usize) -> u8 {
        let mut best = 0;
        for s in 1..self.sectors {
            if self.link(s, index).coupling_db() > self.link(best, index).coupling_db() {
                best = s;
            }
        }
        best as u8
    }

    /// Downlink SINR per PRB with every other sector transmitting on it.
    pub fn full_load_dl_sinr_db(&self, env: &RadioEnv, sector: usize, index: usize) -> f64 {
        let p = db_to_lin(env.dl_prb_power_dbm);
        let signal = p * self.coupling(sector, index);
        let interference: f64 = if env.interference {
            (0..self.sectors)
                .filter(|&s| s != sector)
                .map(|s| p * self.coupling(s, index))
                .sum()
        } else {
            0.0
        };
        lin_to_db(signal / (env.noise_per_prb_mw(Direction::Downlink) + interference))
    }

    /// Uplink SNR when the participant spreads its power over `prbs` blocks.
    pub fn ul_snr_db(&self, env: &RadioEnv, sector: usize, index: usize, prbs: u32) -> f64 {
        env.link_sinr_db(
            &self.link(sector, index).reversed(),
            env.ue_tx_power_dbm,
            prbs,
            &[],
        )
    }
}

fn standard_shadow(seed: u64, sector: u8, participant: u32) -> f64 {
    let key = ((sector as u64) << 32) | participant as u64;
    StandardNormal.sample(&mut keyed(seed, Stream::Shadowing, key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::scenario::{build_geometry, GridConfig};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn pathloss_reference_values() {
        // 22 log10(100) + 28 + 20 log10(0.8)
        close(
            pathloss_db(100.0, true, 0.8),
            44.0 + 28.0 + 20.0 * 0.8f64.log10(),
            1e-12,
        );
        close(pathloss_db(100.0, true, 0.8), 70.06, 0.005);
        close(pathloss_db(100.0, false, 0.8), 93.58, 0.005);
    }

    #[test]
    fn pathloss_grows_with_distance() {
        for los in [true, false] {
            let mut prev = pathloss_db(1.0, los, 0.8);
            for d in (2..2000).step_by(7) {
                let pl = pathloss_db(d as f64, los, 0.8);
                assert!(pl > prev);
                prev = pl;
            }
        }
    }

    #[test]
    fn antenna_pattern_points() {
        let a = AntennaPattern::default();
        close(a.gain_db(0.0), 14.0, 1e-12);
        close(a.gain_db(65.0), 2.0, 1e-12);
        close(a.gain_db(-65.0), 2.0, 1e-12);
        close(a.gain_db(180.0), -16.0, 1e-12);
        close(a.gain_db(360.0 + 65.0), 2.0, 1e-9);
    }

    #[test]
    fn los_on_a_street_and_blocked_across_a_block() {
        let g = build_geometry(&GridConfig::from(&ScenarioConfig::default())).unwrap();
        // along the horizontal street y in [120, 141]
        assert!(is_los(
            Point2::new(5.0, 130.0),
            Point2::new(530.0, 130.0),
            &g
        ));
        // from that street to the next parallel one, straight through building (1, 0)
        assert!(!is_los(
            Point2::new(60.0, 130.0),
            Point2::new(60.0, 270.0),
            &g
        ));
    }

    #[test]
    fn uplink_budget_example() {
        let env = RadioEnv::from_config(&RunConfig::default()).unwrap();
        let link = LinkState {
            tx_id: Endpoint::Participant(0),
            rx_id: Endpoint::Sector(0),
            distance_m: 100.0,
            los: true,
            pathloss_db: pathloss_db(100.0, true, 0.8),
            shadowing_db: 0.0,
            antenna_gain_db: 14.0,
            direction: Direction::Uplink,
        };
        let snr = env.link_sinr_db(&link, 24.0, 17, &[]);
        // 24 - 70.062 + 14 - (-174 + 10 log10(3.06e6) + 5)
        close(snr, 72.08, 0.01);
        let noise = env.noise.noise_dbm(180e3 * 17.0, Direction::Uplink);
        close(
            env.link_sinr_db(&link, 24.0, 17, &[noise]),
            snr - 10.0 * 2f64.log10(),
            1e-9,
        );
    }
}
