use proptest::prelude::*;

use ltev2x::radio::{wrap_deg, AntennaPattern, Direction, LinkTable, PathlossModel, RadioEnv};
use ltev2x::scenario::Scenario;
use ltev2x::RunConfig;

proptest! {
    #[test]
    fn pathloss_never_falls_with_distance(d in 0.0..2000.0f64, step in 0.0..500.0f64) {
        let m = PathlossModel::default();
        for los in [true, false] {
            prop_assert!(m.pathloss_db(d + step, los) >= m.pathloss_db(d, los));
            prop_assert!(m.pathloss_db(d, los) > 0.0);
        }
    }

    #[test]
    fn antenna_gain_is_bounded_and_symmetric(off in -720.0..720.0f64) {
        let a = AntennaPattern::default();
        let g = a.gain_db(off);
        prop_assert!(g <= a.boresight_gain_dbi);
        prop_assert!(g >= a.boresight_gain_dbi - a.max_attenuation_db);
        prop_assert!((g - a.gain_db(-off)).abs() < 1e-9);
        prop_assert!((g - a.gain_db(off + 360.0)).abs() < 1e-9);
        prop_assert!((-180.0..180.0).contains(&wrap_deg(off)));
    }
}

#[test]
fn links_are_frozen_per_drop_and_reciprocal() {
    let cfg = RunConfig::default();
    let scenario = Scenario::build(&cfg, 9).unwrap();
    let env = RadioEnv::from_config(&cfg).unwrap();
    let a = LinkTable::build(&scenario, &env, 9);
    let b = LinkTable::build(&scenario, &env, 9);
    let c = LinkTable::build(&scenario, &env, 10);
    let mut differs = false;
    for s in 0..a.sectors() {
        for i in 0..a.participants() {
            let l = a.link(s, i);
            assert_eq!(l, b.link(s, i));
            assert_eq!(l.direction, Direction::Downlink);
            let r = l.reversed();
            assert_eq!(r.direction, Direction::Uplink);
            assert_eq!(r.shadowing_db, l.shadowing_db);
            assert_eq!(r.coupling_db(), l.coupling_db());
            assert!(l.distance_m >= 1.0 && l.pathloss_db > 0.0);
            differs |= c.link(s, i).shadowing_db != l.shadowing_db;
        }
    }
    assert!(differs, "another seed should draw other shadowing");
}

#[test]
fn every_participant_is_served_by_its_strongest_sector() {
    let cfg = RunConfig::default();
    let scenario = Scenario::build(&cfg, 4).unwrap();
    let env = RadioEnv::from_config(&cfg).unwrap();
    let links = LinkTable::build(&scenario, &env, 4);
    for (i, p) in scenario.participants.iter().enumerate() {
        let serving = p.serving_sector as usize;
        for s in 0..links.sectors() {
            assert!(links.coupling(serving, i) >= links.coupling(s, i));
        }
    }
}

#[test]
fn interference_only_lowers_downlink_sinr() {
    let cfg = RunConfig::default();
    let mut quiet = cfg.clone();
    quiet.radio.interference = false;
    let scenario = Scenario::build(&cfg, 2).unwrap();
    let env = RadioEnv::from_config(&cfg).unwrap();
    let env_quiet = RadioEnv::from_config(&quiet).unwrap();
    let links = LinkTable::build(&scenario, &env, 2);
    for i in 0..links.participants() {
        let s = scenario.participants[i].serving_sector as usize;
        assert!(
            links.full_load_dl_sinr_db(&env, s, i) <= links.full_load_dl_sinr_db(&env_quiet, s, i)
        );
        // spreading the same power over more PRBs never helps
        assert!(links.ul_snr_db(&env, s, i, 10) <= links.ul_snr_db(&env, s, i, 1));
    }
}

#[test]
fn downlink_power_splits_evenly_over_the_carrier() {
    for bw in [10.0, 20.0, 40.0, 100.0] {
        let mut cfg = RunConfig::default();
        cfg.radio.bandwidth_dl_mhz = bw;
        let env = RadioEnv::from_config(&cfg).unwrap();
        let total = env.dl_tx_power_dbm(env.prbs_dl);
        assert!((total - cfg.radio.sector_power_dbm()).abs() < 1e-9);
        assert!((env.dl_prb_power_dbm - (46.0 - 10.0 * 50f64.log10())).abs() < 1e-9);
    }
}
