//! Urban block-grid environment, the three-sector rooftop site, and the
//! traffic participants dropped on its streets.

pub mod geometry;
pub mod mobility;

use std::io::Write;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::ScenarioError;
use crate::radio::{AntennaPattern, LinkTable, RadioEnv};
use crate::rng::{stream, Stream};

pub use geometry::{build_geometry, Geometry, GridConfig, Point2, Point3, Rect};
pub use mobility::step_mobility;

pub const SECTORS_PER_SITE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sector {
    pub id: u8,
    pub site_position: Point3,
    pub boresight_azimuth_deg: f64,
    pub tx_power_dbm: f64,
    pub antenna: AntennaPattern,
}

/// Three sectors 120 degrees apart at `site`.
pub fn deploy_site(
    site: Point3,
    first_azimuth_deg: f64,
    tx_power_dbm: f64,
    antenna: AntennaPattern,
) -> Vec<Sector> {
    (0..SECTORS_PER_SITE)
        .map(|i| Sector {
            id: i as u8,
            site_position: site,
            boresight_azimuth_deg: (first_azimuth_deg + 120.0 * i as f64).rem_euclid(360.0),
            tx_power_dbm,
            antenna,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantKind {
    Vehicle,
    Vru,
}

impl ParticipantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParticipantKind::Vehicle => "vehicle",
            ParticipantKind::Vru => "vru",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Participant {
    pub id: u32,
    pub kind: ParticipantKind,
    pub position: Point2,
    /// Metres per second.
    pub velocity: Point2,
    /// Only vehicles transmit.
    pub tx_power_dbm: Option<f64>,
    pub serving_sector: u8,
}

impl Participant {
    pub fn is_transmitter(&self) -> bool {
        self.tx_power_dbm.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropParams {
    pub density_per_km2: f64,
    pub vehicle_fraction: f64,
    pub vehicle_max_speed_kmh: f64,
    pub vru_max_speed_kmh: f64,
    pub vehicle_tx_power_dbm: f64,
}

/// Drops `round(density * extent area)` participants uniformly over the
/// street region.
pub fn drop_participants<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &DropParams,
    rng: &mut R,
) -> Result<Vec<Participant>, ScenarioError> {
    if !(params.density_per_km2 >= 0.0) {
        return Err(ScenarioError::InvalidDrop(format!(
            "density {} is negative",
            params.density_per_km2
        )));
    }
    if !(0.0..=1.0).contains(&params.vehicle_fraction) {
        return Err(ScenarioError::InvalidDrop(format!(
            "vehicle fraction {} outside [0, 1]",
            params.vehicle_fraction
        )));
    }
    let count = (params.density_per_km2 * geometry.extent.area() / 1e6).round() as u32;
    if count == 0 {
        return Ok(Vec::new());
    }
    if geometry.street_area() <= 0.0 {
        return Err(ScenarioError::EmptyStreetRegion(params.density_per_km2));
    }
    let ext = geometry.extent;
    let mut out = Vec::with_capacity(count as usize);
    for id in 0..count {
        let position = loop {
            let p = Point2::new(
                rng.random_range(ext.min.x..=ext.max.x),
                rng.random_range(ext.min.y..=ext.max.y),
            );
            if geometry.is_street(p) {
                break p;
            }
        };
        let kind = if rng.random_bool(params.vehicle_fraction) {
            ParticipantKind::Vehicle
        } else {
            ParticipantKind::Vru
        };
        let max_kmh = match kind {
            ParticipantKind::Vehicle => params.vehicle_max_speed_kmh,
            ParticipantKind::Vru => params.vru_max_speed_kmh,
        };
        let speed = rng.random_range(0.0..=max_kmh) / 3.6;
        let open = geometry.open_directions(position);
        let dir = open
            .choose(rng)
            .copied()
            .unwrap_or(geometry::AXIS_DIRECTIONS[0]);
        out.push(Participant {
            id,
            kind,
            position,
            velocity: Point2::new(dir.x * speed, dir.y * speed),
            tx_power_dbm: (kind == ParticipantKind::Vehicle).then_some(params.vehicle_tx_power_dbm),
            serving_sector: 0,
        });
    }
    Ok(out)
}

/// Sector with the strongest received power at `position`; ties go to the
/// lowest sector id.
pub fn attach_to_sector<F>(position: Point2, sectors: &[Sector], received_power_dbm: F) -> u8
where
    F: Fn(&Sector, Point2) -> f64,
{
    let mut best = (sectors[0].id, received_power_dbm(&sectors[0], position));
    for s in &sectors[1..] {
        let p = received_power_dbm(s, position);
        if p > best.1 || (p == best.1 && s.id < best.0) {
            best = (s.id, p);
        }
    }
    best.0
}

/// Everyone within `radius_m` of `transmitter`, excluding the transmitter.
pub fn receiver_set<'a>(
    transmitter: &Participant,
    participants: &'a [Participant],
    radius_m: f64,
) -> Vec<&'a Participant> {
    participants
        .iter()
        .filter(|p| p.id != transmitter.id && p.position.distance(transmitter.position) <= radius_m)
        .collect()
}

/// A built deployment: geometry, the site's sectors and the dropped
/// participants with their serving sectors.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: Geometry,
    pub sectors: Vec<Sector>,
    pub participants: Vec<Participant>,
    /// Index into `geometry.buildings` of the building carrying the site.
    pub site_building: Option<usize>,
}

impl Scenario {
    pub fn build(cfg: &RunConfig, seed: u64) -> Result<Self, ScenarioError> {
        let sc = &cfg.scenario;
        let geometry = build_geometry(&GridConfig::from(sc))?;
        let [row, col] = sc.site_slot;
        if row >= sc.grid_rows || col >= sc.grid_cols {
            return Err(ScenarioError::SlotOutOfGrid {
                row,
                col,
                rows: sc.grid_rows,
                cols: sc.grid_cols,
            });
        }
        let site_building = geometry.building_at_slot(row, col);
        let roof = if site_building.is_some() {
            sc.building_height_m
        } else {
            0.0
        };
        let c = geometry.slot_rect(row, col).center();
        let site = Point3 {
            x: c.x,
            y: c.y,
            z: roof + sc.mast_height_m,
        };
        let env =
            RadioEnv::from_config(cfg).map_err(|e| ScenarioError::InvalidDrop(e.to_string()))?;
        let sectors = deploy_site(
            site,
            sc.first_sector_azimuth_deg,
            cfg.radio.sector_power_dbm(),
            env.antenna,
        );
        let participants = drop_participants(
            &geometry,
            &DropParams {
                density_per_km2: sc.density_per_km2,
                vehicle_fraction: sc.vehicle_fraction,
                vehicle_max_speed_kmh: sc.vehicle_max_speed_kmh,
                vru_max_speed_kmh: sc.vru_max_speed_kmh,
                vehicle_tx_power_dbm: cfg.radio.ue_tx_power_dbm,
            },
            &mut stream(seed, Stream::Drop),
        )?;
        let mut scenario = Scenario {
            geometry,
            sectors,
            participants,
            site_building,
        };
        let links = LinkTable::build(&scenario, &env, seed);
        scenario.attach_all(&links);
        Ok(scenario)
    }

    /// Sets each participant's serving sector from a link table.
    pub fn attach_all(&mut self, links: &LinkTable) {
        for (i, p) in self.participants.iter_mut().enumerate() {
            p.serving_sector = links.strongest_sector(i);
        }
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &Participant> {
        self.participants.iter().filter(|p| p.is_transmitter())
    }

    /// CSV with columns `id,kind,x,y,sector`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,kind,x,y,sector")?;
        for p in &self.participants {
            writeln!(
                w,
                "{},{},{:.3},{:.3},{}",
                p.id,
                p.kind.as_str(),
                p.position.x,
                p.position.y,
                p.serving_sector
            )?;
        }
        Ok(())
    }
}
