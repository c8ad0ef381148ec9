#![allow(dead_code)]

use ltev2x::pipelines::Packet;
use ltev2x::scenario::{Participant, ParticipantKind, Point2, Scenario};
use ltev2x::RunConfig;

/// An otherwise empty deployment with `n` participants on the street just
/// east of the site's building. Participant 0 is a vehicle.
pub fn near_site_scenario(cfg: &RunConfig, n: u32) -> Scenario {
    let mut empty = cfg.clone();
    empty.scenario.density_per_km2 = 0.0;
    let mut scenario = Scenario::build(&empty, 1).unwrap();
    let [row, col] = cfg.scenario.site_slot;
    let block = scenario.geometry.slot_rect(row, col);
    let x = block.max.x + 0.5 * cfg.scenario.street_width_m;
    for id in 0..n {
        let y = block.min.y + 10.0 + id as f64 * 100.0 / n.max(1) as f64;
        let position = Point2::new(x, y);
        assert!(scenario.geometry.is_street(position));
        scenario.participants.push(Participant {
            id,
            kind: if id == 0 {
                ParticipantKind::Vehicle
            } else {
                ParticipantKind::Vru
            },
            position,
            velocity: Point2::new(0.0, 0.0),
            tx_power_dbm: (id == 0).then_some(cfg.radio.ue_tx_power_dbm),
            serving_sector: 0,
        });
    }
    scenario
}

pub fn packet(id: u64, tx_id: u32, gen_ms: f64, receivers: &[u32]) -> Packet {
    Packet {
        id,
        tx_id,
        gen_ms,
        payload_bytes: 212,
        receivers: receivers.to_vec(),
    }
}
