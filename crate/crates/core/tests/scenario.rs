use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use ltev2x::config::ScenarioConfig;
use ltev2x::radio::antenna_gain_db;
use ltev2x::rng::{stream, Stream};
use ltev2x::scenario::{
    attach_to_sector, build_geometry, drop_participants, receiver_set, step_mobility, DropParams,
    Geometry, GridConfig, Point2, Rect, Scenario,
};
use ltev2x::RunConfig;

fn geometry() -> Geometry {
    build_geometry(&GridConfig::from(&ScenarioConfig::default())).unwrap()
}

fn params() -> DropParams {
    let s = ScenarioConfig::default();
    DropParams {
        density_per_km2: s.density_per_km2,
        vehicle_fraction: s.vehicle_fraction,
        vehicle_max_speed_kmh: s.vehicle_max_speed_kmh,
        vru_max_speed_kmh: s.vru_max_speed_kmh,
        vehicle_tx_power_dbm: 24.0,
    }
}

fn overlap(a: &Rect, b: &Rect) -> f64 {
    let w = (a.max.x.min(b.max.x) - a.min.x.max(b.min.x)).max(0.0);
    let h = (a.max.y.min(b.max.y) - a.min.y.max(b.min.y)).max(0.0);
    w * h
}

#[test]
fn drops_are_uniform_over_the_streets() {
    let g = geometry();
    let cells = 8;
    let ext = g.extent;
    let (cw, ch) = (ext.width() / cells as f64, ext.height() / cells as f64);
    let rects: Vec<Rect> = (0..cells * cells)
        .map(|k| {
            let (i, j) = ((k % cells) as f64, (k / cells) as f64);
            Rect::new(
                Point2::new(ext.min.x + i * cw, ext.min.y + j * ch),
                Point2::new(ext.min.x + (i + 1.0) * cw, ext.min.y + (j + 1.0) * ch),
            )
        })
        .collect();
    let street: Vec<f64> = rects
        .iter()
        .map(|r| {
            r.area()
                - g.buildings
                    .iter()
                    .map(|b| overlap(r, &b.footprint))
                    .sum::<f64>()
        })
        .collect();
    let total_street: f64 = street.iter().sum();

    let mut counts = vec![0u64; rects.len()];
    let mut n = 0u64;
    for seed in 0..10_000u64 {
        let drop = drop_participants(&g, &params(), &mut stream(seed, Stream::Drop)).unwrap();
        for p in drop {
            assert!(g.is_street(p.position));
            let i = (((p.position.x - ext.min.x) / cw) as usize).min(cells - 1);
            let j = (((p.position.y - ext.min.y) / ch) as usize).min(cells - 1);
            counts[j * cells + i] += 1;
            n += 1;
        }
    }
    let mut stat = 0.0;
    let mut bins = 0;
    for (c, a) in counts.iter().zip(&street) {
        if *a < 1e-9 {
            assert_eq!(*c, 0);
            continue;
        }
        let expected = n as f64 * a / total_street;
        stat += (*c as f64 - expected).powi(2) / expected;
        bins += 1;
    }
    let critical = ChiSquared::new((bins - 1) as f64)
        .unwrap()
        .inverse_cdf(0.95);
    assert!(
        stat < critical,
        "chi-square {stat} over {bins} bins, critical {critical}"
    );
}

#[test]
fn receiver_count_matches_street_area_in_range() {
    let g = geometry();
    let radius = ScenarioConfig::default().radius_m;
    // street area within the disc around a point, on a 1 m lattice
    let street_in_disc = |c: Point2| -> f64 {
        let mut area = 0.0;
        let r = radius as i64;
        for dx in -r..=r {
            for dy in -r..=r {
                let p = Point2::new(c.x + dx as f64 + 0.5, c.y + dy as f64 + 0.5);
                if p.distance(c) <= radius && g.is_street(p) {
                    area += 1.0;
                }
            }
        }
        area
    };
    let mut observed = 0.0;
    let mut expected = 0.0;
    for seed in 0..40u64 {
        let drop = drop_participants(&g, &params(), &mut stream(seed, Stream::Drop)).unwrap();
        let others = (drop.len() - 1) as f64;
        for tx in drop.iter().step_by(25) {
            observed += receiver_set(tx, &drop, radius).len() as f64;
            expected += others * street_in_disc(tx.position) / g.street_area();
        }
    }
    let ratio = observed / expected;
    assert!((ratio - 1.0).abs() < 0.03, "observed/expected = {ratio}");
}

#[test]
fn default_scenario_shape() {
    let cfg = RunConfig::default();
    let s = Scenario::build(&cfg, 3).unwrap();
    assert_eq!(s.participants.len(), 295);
    assert_eq!(s.sectors.len(), 3);
    assert!(s
        .participants
        .iter()
        .enumerate()
        .all(|(i, p)| p.id as usize == i));
    let vehicles = s.vehicles().count() as f64;
    assert!((vehicles / 295.0 - 0.5).abs() < 0.1);
    assert!(s.vehicles().all(|v| v.tx_power_dbm == Some(24.0)));
    assert_eq!(
        Scenario::build(&cfg, 3).unwrap().participants,
        s.participants
    );
}

#[test]
fn mobility_keeps_everyone_on_the_streets() {
    let g = geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut people = drop_participants(&g, &params(), &mut stream(5, Stream::Drop)).unwrap();
    let speeds: Vec<f64> = people.iter().map(|p| p.velocity.norm()).collect();
    for _ in 0..600 {
        step_mobility(&mut people, 0.1, &g, &mut rng);
        for p in &people {
            assert!(g.is_street(p.position), "{:?} left the streets", p.position);
        }
    }
    for (p, s) in people.iter().zip(speeds) {
        assert!((p.velocity.norm() - s).abs() < 1e-9);
        assert!(s <= 50.0 / 3.6 + 1e-9);
    }
}

proptest! {
    #[test]
    fn attachment_ignores_sector_order(x in 0.0..543.0f64, y in 0.0..543.0f64, seed in 0u64..1000) {
        let cfg = RunConfig::default();
        let s = Scenario::build(&{
            let mut c = cfg.clone();
            c.scenario.density_per_km2 = 0.0;
            c
        }, 1).unwrap();
        let power = |sector: &ltev2x::scenario::Sector, p: Point2| {
            antenna_gain_db(sector, p) - 30.0 * sector.site_position.xy().distance(p).max(1.0).log10()
        };
        let position = Point2::new(x, y);
        let reference = attach_to_sector(position, &s.sectors, power);
        let mut shuffled = s.sectors.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(attach_to_sector(position, &shuffled, power), reference);
    }
}
