use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use rand_chacha::ChaCha8Rng;

use super::{periodic_packets, DeliveryRecord, DrawContext, ErrorSource, Latency, Packet, Traffic};
use crate::config::{DownlinkMode, RunConfig};
use crate::error::{PhyError, ScenarioError, SimError};
use crate::mac::{
    harq_next_attempt, ms_to_ttis, phases, schedule_downlink, schedule_round_robin,
    uplink_phase_ms, Attempt, HarqProcess, LatencyBudget, LatencyTrace, NextAttempt, PrbRequest,
    ResourceGrid, RrCursor, TTI_MS,
};
use crate::phy::{
    bler, build_transport_block, mrc_combine, prbs_required, select_mcs_unicast, select_mcs_with,
    McsEntry, McsTable, TransportBlock,
};
use crate::radio::{db_to_lin, lin_to_db, Direction, LinkTable, RadioEnv};
use crate::rng::{stream, Stream};
use crate::scenario::{receiver_set, step_mobility, Scenario};

/// Received energy summed over the PRB-TTI units of one transmission.
#[derive(Debug, Clone, Copy, Default)]
struct Energy {
    signal: f64,
    noise_interference: f64,
}

impl Energy {
    fn add(&mut self, signal: f64, noise_interference: f64) {
        self.signal += signal;
        self.noise_interference += noise_interference;
    }

    fn sinr_db(&self) -> f64 {
        lin_to_db(self.signal / self.noise_interference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Ready,
    Waiting,
    Done,
}

struct PacketState {
    records: Range<usize>,
    tb: TransportBlock,
    ul_eligible: u64,
    ul_end: Option<u64>,
}

struct UlJob {
    tx: usize,
    sector: usize,
    mcs: McsEntry,
    need: u32,
    progress: u32,
    start: u64,
    energy: Energy,
    sinrs: Vec<f64>,
    harq: HarqProcess,
    state: State,
}

struct RxState {
    rx: usize,
    record: usize,
    energy: Energy,
    sinrs: Vec<f64>,
    decoded: bool,
}

struct DlChain {
    packet: usize,
    sector: usize,
    arrival: u64,
    multicast: bool,
    mcs: McsEntry,
    need: u32,
    progress: u32,
    start: u64,
    /// Completed HARQ attempts or multicast replicas.
    rounds: u32,
    receivers: Vec<RxState>,
    harq: HarqProcess,
    state: State,
}

type DlQueue = BTreeMap<Reverse<u64>, Vec<usize>>;

pub(super) struct Engine<'a> {
    cfg: &'a RunConfig,
    seed: u64,
    env: RadioEnv,
    table: McsTable,
    multicast_mcs: McsEntry,
    budget: LatencyBudget,
    scenario: Scenario,
    links: LinkTable,
    errors: &'a mut dyn ErrorSource,
    mobility: Option<(u64, ChaCha8Rng)>,

    packets: Vec<Packet>,
    resolve_receivers: bool,
    next_packet: usize,
    state: Vec<PacketState>,
    records: Vec<DeliveryRecord>,

    ul: Vec<UlJob>,
    ul_ready: Vec<Vec<usize>>,
    ul_timers: BTreeMap<u64, Vec<usize>>,
    ul_rr: Vec<RrCursor>,
    ue_prbs: Vec<u32>,

    chains: Vec<DlChain>,
    dl_ready: Vec<DlQueue>,
    dl_timers: BTreeMap<u64, Vec<usize>>,
    dl_rr: Vec<RrCursor>,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        cfg: &'a RunConfig,
        mut scenario: Scenario,
        traffic: Traffic,
        seed: u64,
        errors: &'a mut dyn ErrorSource,
    ) -> Result<Self, SimError> {
        let env = RadioEnv::from_config(cfg)?;
        let table = McsTable::from_config(&cfg.phy)?;
        let multicast_mcs = table
            .by_efficiency(cfg.run.multicast_mcs_efficiency)
            .cloned()
            .ok_or(PhyError::UnknownEfficiency(
                cfg.run.multicast_mcs_efficiency,
            ))?;
        let n = scenario.participants.len();
        if scenario
            .participants
            .iter()
            .enumerate()
            .any(|(i, p)| p.id as usize != i)
        {
            return Err(ScenarioError::InvalidDrop(
                "participant ids must equal their index".into(),
            )
            .into());
        }
        let links = LinkTable::build(&scenario, &env, seed);
        scenario.attach_all(&links);
        let (mut packets, resolve_receivers) = match traffic {
            Traffic::Periodic => (periodic_packets(cfg, &scenario, seed), true),
            Traffic::Explicit(p) => (p, false),
        };
        packets.sort_by(|a, b| a.gen_ms.total_cmp(&b.gen_ms));
        for p in &packets {
            let out_of_range =
                p.tx_id as usize >= n || p.receivers.iter().any(|&r| r as usize >= n);
            if out_of_range || !(p.gen_ms >= 0.0) {
                return Err(
                    ScenarioError::InvalidDrop(format!("packet {} is malformed", p.id)).into(),
                );
            }
        }
        let sectors = scenario.sectors.len();
        let mobility = cfg.scenario.mobility.then(|| {
            (
                ms_to_ttis(cfg.run.cam_period_ms).max(1),
                stream(seed, Stream::Mobility),
            )
        });
        Ok(Self {
            cfg,
            seed,
            env,
            table,
            multicast_mcs,
            budget: LatencyBudget::from(&cfg.mac),
            scenario,
            links,
            errors,
            mobility,
            packets,
            resolve_receivers,
            next_packet: 0,
            state: Vec::new(),
            records: Vec::new(),
            ul: Vec::new(),
            ul_ready: vec![Vec::new(); sectors],
            ul_timers: BTreeMap::new(),
            ul_rr: vec![RrCursor::default(); sectors],
            ue_prbs: vec![0; n],
            chains: Vec::new(),
            dl_ready: vec![DlQueue::new(); sectors],
            dl_timers: BTreeMap::new(),
            dl_rr: vec![RrCursor::default(); sectors],
        })
    }

    pub(super) fn run(mut self) -> Result<Vec<DeliveryRecord>, SimError> {
        let mut t = 0u64;
        while !self.idle() {
            if let Some((period, _)) = self.mobility {
                if t > 0 && t % period == 0 {
                    self.move_participants(period as f64 * TTI_MS / 1000.0);
                }
            }
            self.generate(t);
            self.release(t);
            self.uplink_tti(t)?;
            self.downlink_tti(t)?;
            t += 1;
        }
        Ok(self.records)
    }

    /// First PRB handed out by `sector`; sectors start evenly spread over
    /// the band so that light load does not collide.
    fn prb_start(&self, sector: usize, prbs: u32) -> u32 {
        (sector as u64 * prbs as u64 / self.ul_ready.len() as u64) as u32
    }

    fn idle(&self) -> bool {
        self.next_packet == self.packets.len()
            && self.ul_timers.is_empty()
            && self.dl_timers.is_empty()
            && self.ul_ready.iter().all(Vec::is_empty)
            && self.dl_ready.iter().all(BTreeMap::is_empty)
    }

    fn move_participants(&mut self, dt_s: f64) {
        let Some((_, rng)) = self.mobility.as_mut() else {
            return;
        };
        step_mobility(
            &mut self.scenario.participants,
            dt_s,
            &self.scenario.geometry,
            rng,
        );
        self.links = LinkTable::build(&self.scenario, &self.env, self.seed);
        self.scenario.attach_all(&self.links);
    }

    fn generate(&mut self, t: u64) {
        while self.next_packet < self.packets.len()
            && self.packets[self.next_packet].gen_ms < (t + 1) as f64
        {
            let i = self.next_packet;
            self.next_packet += 1;
            let participants = &self.scenario.participants;
            let tx = self.packets[i].tx_id as usize;
            if self.resolve_receivers {
                self.packets[i].receivers =
                    receiver_set(&participants[tx], participants, self.cfg.scenario.radius_m)
                        .iter()
                        .map(|p| p.id)
                        .collect();
            }
            let p = &self.packets[i];
            let start = self.records.len();
            for &rx in &p.receivers {
                self.records.push(DeliveryRecord {
                    packet_id: p.id,
                    tx_id: p.tx_id,
                    rx_id: rx,
                    gen_ms: p.gen_ms,
                    latency: Latency::Infinite,
                    ul_ms: None,
                    inter_enb_ms: None,
                    dl_ms: None,
                    ul_attempts: 0,
                    dl_attempts: 0,
                    mode: self.cfg.run.downlink_mode,
                });
            }
            let tb = build_transport_block(p.payload_bytes);
            let ul_eligible = self.budget.ul_eligible_tti(p.gen_ms).max(t + 1);
            let sector = participants[tx].serving_sector as usize;
            let res = self.cfg.phy.data_res_per_prb;
            let (links, env) = (&self.links, &self.env);
            let mcs = select_mcs_with(&self.table, |m| {
                links.ul_snr_db(env, sector, tx, prbs_required(&tb, m, res))
            })
            .clone();
            let need = prbs_required(&tb, &mcs, res);
            self.ul.push(UlJob {
                tx,
                sector,
                mcs,
                need,
                progress: 0,
                start: 0,
                energy: Energy::default(),
                sinrs: Vec::new(),
                harq: HarqProcess::new(p.gen_ms, ul_eligible, self.cfg.mac.max_retx),
                state: State::Waiting,
            });
            self.state.push(PacketState {
                records: start..self.records.len(),
                tb,
                ul_eligible,
                ul_end: None,
            });
            self.ul_timers.entry(ul_eligible).or_default().push(i);
        }
    }

    fn release(&mut self, t: u64) {
        while let Some(entry) = self.ul_timers.first_entry() {
            if *entry.key() > t {
                break;
            }
            for j in entry.remove() {
                self.ul[j].state = State::Ready;
                self.ul_ready[self.ul[j].sector].push(j);
            }
        }
        while let Some(entry) = self.dl_timers.first_entry() {
            if *entry.key() > t {
                break;
            }
            for c in entry.remove() {
                let ch = &mut self.chains[c];
                ch.state = State::Ready;
                self.dl_ready[ch.sector]
                    .entry(Reverse(ch.arrival))
                    .or_default()
                    .push(c);
            }
        }
    }

    fn uplink_tti(&mut self, t: u64) -> Result<(), SimError> {
        let sectors = self.ul_ready.len();
        let mut grids = Vec::with_capacity(sectors);
        let mut allocs = Vec::with_capacity(sectors);
        let mut expired = Vec::new();
        for s in 0..sectors {
            let (mut retx, mut fresh) = (Vec::new(), Vec::new());
            let (ul, packets, budget) = (&self.ul, &self.packets, &self.budget);
            self.ul_ready[s].retain(|&j| {
                if budget.can_start(packets[j].gen_ms, t) {
                    let req = PrbRequest {
                        id: j as u64,
                        demand: ul[j].need - ul[j].progress,
                        arrival_tti: 0,
                    };
                    if ul[j].harq.attempts.is_empty() {
                        fresh.push(req);
                    } else {
                        retx.push(req);
                    }
                    true
                } else {
                    expired.push(j);
                    false
                }
            });
            let mut grid =
                ResourceGrid::with_start(t, self.env.prbs_ul, self.prb_start(s, self.env.prbs_ul));
            let quantum = self.cfg.mac.ul_rr_quantum;
            let mut a = schedule_round_robin(&retx, &mut grid, &mut self.ul_rr[s], quantum);
            a.extend(schedule_round_robin(
                &fresh,
                &mut grid,
                &mut self.ul_rr[s],
                quantum,
            ));
            allocs.push(a);
            grids.push(grid);
        }
        for j in expired {
            self.fail_uplink(j);
        }

        for a in allocs.iter().flatten() {
            self.ue_prbs[self.ul[a.id as usize].tx] += a.len();
        }
        let noise = self.env.noise_per_prb_mw(Direction::Uplink);
        let p_ue = db_to_lin(self.env.ue_tx_power_dbm);
        let mut completed = Vec::new();
        for (s, sector_allocs) in allocs.iter().enumerate() {
            for a in sector_allocs {
                let j = a.id as usize;
                let tx = self.ul[j].tx;
                let signal = p_ue / self.ue_prbs[tx] as f64 * self.links.coupling(s, tx);
                let mut energy = Energy::default();
                for &k in &a.prbs {
                    let mut interference = 0.0;
                    if self.env.interference {
                        for (s2, g) in grids.iter().enumerate() {
                            if s2 == s {
                                continue;
                            }
                            if let Some(owner) = g.owner(k) {
                                let u = self.ul[owner as usize].tx;
                                interference +=
                                    p_ue / self.ue_prbs[u] as f64 * self.links.coupling(s, u);
                            }
                        }
                    }
                    energy.add(signal, noise + interference);
                }
                let job = &mut self.ul[j];
                if job.progress == 0 {
                    job.start = t;
                    debug_assert!(job
                        .harq
                        .attempts
                        .last()
                        .is_none_or(|p| p.end_tti + self.budget.harq_gap_ttis() == t));
                }
                job.energy.add(energy.signal, energy.noise_interference);
                job.progress += a.len();
                if job.progress >= job.need {
                    completed.push(j);
                }
            }
        }
        for a in allocs.iter().flatten() {
            self.ue_prbs[self.ul[a.id as usize].tx] = 0;
        }
        for j in completed {
            self.finish_uplink_attempt(j, t)?;
        }
        let ul = &self.ul;
        for ready in &mut self.ul_ready {
            ready.retain(|&j| ul[j].state == State::Ready);
        }
        Ok(())
    }

    fn finish_uplink_attempt(&mut self, j: usize, t: u64) -> Result<(), SimError> {
        let end = t + 1;
        let job = &mut self.ul[j];
        job.sinrs.push(job.energy.sinr_db());
        job.energy = Energy::default();
        let p = bler(mrc_combine(&job.sinrs), &job.mcs);
        job.harq.attempts.push(Attempt {
            start_tti: job.start,
            end_tti: end,
            prbs: job.progress,
            success: false,
        });
        job.progress = 0;
        let ctx = DrawContext {
            direction: Direction::Uplink,
            packet_id: self.packets[j].id,
            rx_id: None,
            attempt: job.harq.attempts.len() as u32,
        };
        if !self.errors.fails(&ctx, p, &self.state[j].tb) {
            if let Some(last) = job.harq.attempts.last_mut() {
                last.success = true;
            }
            job.state = State::Done;
            return self.uplink_delivered(j, end);
        }
        match harq_next_attempt(&job.harq, end, &self.budget) {
            NextAttempt::At(next) => {
                job.state = State::Waiting;
                self.ul_timers.entry(next).or_default().push(j);
            }
            NextAttempt::Exhausted => self.fail_uplink(j),
        }
        Ok(())
    }

    fn fail_uplink(&mut self, j: usize) {
        self.ul[j].state = State::Done;
        let attempts = self.ul[j].harq.attempts.len() as u32;
        for r in self.state[j].records.clone() {
            self.records[r].ul_attempts = attempts;
        }
    }

    fn uplink_delivered(&mut self, j: usize, end: u64) -> Result<(), SimError> {
        let st = &mut self.state[j];
        st.ul_end = Some(end);
        let trace = LatencyTrace {
            gen_ms: self.packets[j].gen_ms,
            ul_eligible_tti: st.ul_eligible,
            ul_end_tti: Some(end),
            same_enb: true,
            dl_eligible_tti: None,
            dl_end_tti: None,
        };
        let ul_ms = uplink_phase_ms(&trace, &self.budget)?;
        let attempts = self.ul[j].harq.attempts.len() as u32;
        let range = st.records.clone();
        if range.is_empty() {
            return Ok(());
        }
        for r in range.clone() {
            self.records[r].ul_ms = Some(ul_ms);
            self.records[r].ul_attempts = attempts;
        }
        let arrival = self.budget.dl_eligible_tti(end, true);
        let res = self.cfg.phy.data_res_per_prb;
        let gen_ms = self.packets[j].gen_ms;
        let max_retx = self.cfg.mac.max_retx;
        let rx_state = |record: usize, rx: usize| RxState {
            rx,
            record,
            energy: Energy::default(),
            sinrs: Vec::new(),
            decoded: false,
        };
        let mut new_chains = Vec::new();
        match self.cfg.run.downlink_mode {
            DownlinkMode::Unicast => {
                for r in range {
                    let rx = self.records[r].rx_id as usize;
                    let sector = self.scenario.participants[rx].serving_sector as usize;
                    let sinr = self.links.full_load_dl_sinr_db(&self.env, sector, rx);
                    let mcs = select_mcs_unicast(sinr, &self.table).clone();
                    let need = prbs_required(&self.state[j].tb, &mcs, res);
                    new_chains.push((sector, false, mcs, need, vec![rx_state(r, rx)]));
                }
            }
            DownlinkMode::Multicast => {
                let mut by_sector: BTreeMap<usize, Vec<RxState>> = BTreeMap::new();
                for r in range {
                    let rx = self.records[r].rx_id as usize;
                    let sector = self.scenario.participants[rx].serving_sector as usize;
                    by_sector.entry(sector).or_default().push(rx_state(r, rx));
                }
                let need = prbs_required(&self.state[j].tb, &self.multicast_mcs, res);
                for (sector, receivers) in by_sector {
                    new_chains.push((sector, true, self.multicast_mcs.clone(), need, receivers));
                }
            }
        }
        for (sector, multicast, mcs, need, receivers) in new_chains {
            let c = self.chains.len();
            self.chains.push(DlChain {
                packet: j,
                sector,
                arrival,
                multicast,
                mcs,
                need,
                progress: 0,
                start: 0,
                rounds: 0,
                receivers,
                harq: HarqProcess::new(gen_ms, arrival, max_retx),
                state: State::Waiting,
            });
            self.dl_timers.entry(arrival).or_default().push(c);
        }
        Ok(())
    }

    fn downlink_tti(&mut self, t: u64) -> Result<(), SimError> {
        let sectors = self.dl_ready.len();
        let multicast = self.cfg.run.downlink_mode == DownlinkMode::Multicast;
        let lifetime = self.budget.packet_lifetime_ms;
        let mut grids = Vec::with_capacity(sectors);
        let mut allocs = Vec::with_capacity(sectors);
        let mut requested: Vec<Vec<PrbRequest>> = Vec::with_capacity(sectors);
        let mut expired = Vec::new();
        for s in 0..sectors {
            let queue = &mut self.dl_ready[s];
            while let Some((&Reverse(a), _)) = queue.last_key_value() {
                if (t + 1) as f64 * TTI_MS > a as f64 * TTI_MS + lifetime + 1e-9 {
                    if let Some((_, stale)) = queue.pop_last() {
                        expired.extend(stale);
                    }
                } else {
                    break;
                }
            }
            let (chains, packets, budget) = (&self.chains, &self.packets, &self.budget);
            let free = self.env.prbs_dl as u64;
            let mut demand = 0u64;
            let (mut retx, mut fresh) = (Vec::new(), Vec::new());
            for (&Reverse(a), group) in queue.iter_mut() {
                let take_fresh = multicast || demand < free;
                group.retain(|&c| {
                    let ch = &chains[c];
                    if !budget.can_start(packets[ch.packet].gen_ms, t) {
                        expired.push(c);
                        return false;
                    }
                    let req = PrbRequest {
                        id: c as u64,
                        demand: ch.need - ch.progress,
                        arrival_tti: a,
                    };
                    if !ch.harq.attempts.is_empty() {
                        retx.push(req);
                    } else if take_fresh {
                        demand += req.demand as u64;
                        fresh.push(req);
                    }
                    true
                });
            }
            queue.retain(|_, g| !g.is_empty());
            let mut grid =
                ResourceGrid::with_start(t, self.env.prbs_dl, self.prb_start(s, self.env.prbs_dl));
            let (policy, quantum) = (self.cfg.mac.dl_scheduler, self.cfg.mac.dl_rr_quantum);
            let mut a = schedule_downlink(&retx, &mut grid, &mut self.dl_rr[s], policy, quantum);
            a.extend(schedule_downlink(
                &fresh,
                &mut grid,
                &mut self.dl_rr[s],
                policy,
                quantum,
            ));
            allocs.push(a);
            retx.append(&mut fresh);
            let requests = retx;
            grids.push(grid);
            requested.push(requests);
        }
        for c in expired {
            self.end_chain(c);
        }

        let gap = self.budget.harq_gap_ttis();
        let noise = self.env.noise_per_prb_mw(Direction::Downlink);
        let p_prb = db_to_lin(self.env.dl_prb_power_dbm);
        let mut completed = Vec::new();
        let mut closed = Vec::new();
        for s in 0..sectors {
            for a in &allocs[s] {
                let c = a.id as usize;
                let mut overlap = vec![0u32; sectors];
                if self.env.interference {
                    for (s2, g) in grids.iter().enumerate() {
                        if s2 != s {
                            overlap[s2] = a.prbs.iter().filter(|&&k| g.is_used(k)).count() as u32;
                        }
                    }
                }
                let n = a.len() as f64;
                let links = &self.links;
                let ch = &mut self.chains[c];
                if ch.progress == 0 {
                    ch.start = t;
                    debug_assert!(ch.harq.attempts.last().is_none_or(|p| p.end_tti + gap == t));
                }
                for rx in ch.receivers.iter_mut().filter(|r| !r.decoded) {
                    let interference: f64 = overlap
                        .iter()
                        .enumerate()
                        .map(|(s2, &o)| o as f64 * p_prb * links.coupling(s2, rx.rx))
                        .sum();
                    rx.energy.add(
                        n * p_prb * links.coupling(s, rx.rx),
                        n * noise + interference,
                    );
                }
                ch.progress += a.len();
                if ch.progress >= ch.need {
                    completed.push(c);
                }
            }
            if multicast {
                let newest_served = allocs[s]
                    .iter()
                    .map(|a| self.chains[a.id as usize].arrival)
                    .max();
                for req in &requested[s] {
                    let c = req.id as usize;
                    let got = allocs[s]
                        .iter()
                        .find(|a| a.id == req.id)
                        .map_or(0, |a| a.len());
                    let ch = &self.chains[c];
                    if ch.rounds >= 1
                        && got < req.demand
                        && newest_served.is_some_and(|n| n > ch.arrival)
                    {
                        closed.push(c);
                    }
                }
            }
        }
        for c in closed {
            self.end_chain(c);
        }
        for c in completed {
            if self.chains[c].multicast {
                self.finish_replica(c, t)?;
            } else {
                self.finish_unicast_attempt(c, t)?;
            }
        }
        for s in 0..sectors {
            let touched: BTreeSet<u64> = requested[s].iter().map(|r| r.arrival_tti).collect();
            let chains = &self.chains;
            let queue = &mut self.dl_ready[s];
            for a in touched {
                if let Some(group) = queue.get_mut(&Reverse(a)) {
                    group.retain(|&c| chains[c].state == State::Ready);
                    if group.is_empty() {
                        queue.remove(&Reverse(a));
                    }
                }
            }
        }
        Ok(())
    }

    fn finish_unicast_attempt(&mut self, c: usize, t: u64) -> Result<(), SimError> {
        let end = t + 1;
        let ch = &mut self.chains[c];
        let rx = &mut ch.receivers[0];
        rx.sinrs.push(rx.energy.sinr_db());
        rx.energy = Energy::default();
        let p = bler(mrc_combine(&rx.sinrs), &ch.mcs);
        ch.harq.attempts.push(Attempt {
            start_tti: ch.start,
            end_tti: end,
            prbs: ch.progress,
            success: false,
        });
        ch.progress = 0;
        ch.rounds += 1;
        let ctx = DrawContext {
            direction: Direction::Downlink,
            packet_id: self.packets[ch.packet].id,
            rx_id: Some(rx.rx as u32),
            attempt: ch.rounds,
        };
        if !self.errors.fails(&ctx, p, &self.state[ch.packet].tb) {
            rx.decoded = true;
            if let Some(last) = ch.harq.attempts.last_mut() {
                last.success = true;
            }
            ch.state = State::Done;
            let (record, packet, arrival, rounds) = (rx.record, ch.packet, ch.arrival, ch.rounds);
            return self.deliver(record, packet, arrival, end, rounds);
        }
        match harq_next_attempt(&ch.harq, end, &self.budget) {
            NextAttempt::At(next) => {
                ch.state = State::Waiting;
                self.dl_timers.entry(next).or_default().push(c);
            }
            NextAttempt::Exhausted => self.end_chain(c),
        }
        Ok(())
    }

    fn finish_replica(&mut self, c: usize, t: u64) -> Result<(), SimError> {
        let end = t + 1;
        let ch = &mut self.chains[c];
        ch.rounds += 1;
        ch.progress = 0;
        let mut delivered = Vec::new();
        for rx in ch.receivers.iter_mut().filter(|r| !r.decoded) {
            rx.sinrs.push(rx.energy.sinr_db());
            rx.energy = Energy::default();
            let p = bler(mrc_combine(&rx.sinrs), &ch.mcs);
            let ctx = DrawContext {
                direction: Direction::Downlink,
                packet_id: self.packets[ch.packet].id,
                rx_id: Some(rx.rx as u32),
                attempt: ch.rounds,
            };
            if !self.errors.fails(&ctx, p, &self.state[ch.packet].tb) {
                rx.decoded = true;
                delivered.push(rx.record);
            }
        }
        let (packet, arrival, rounds) = (ch.packet, ch.arrival, ch.rounds);
        for record in delivered {
            self.deliver(record, packet, arrival, end, rounds)?;
        }
        if rounds >= self.cfg.run.max_replicas {
            self.end_chain(c);
        }
        Ok(())
    }

    /// Closes a chain; receivers still undecoded stay failures.
    fn end_chain(&mut self, c: usize) {
        let ch = &mut self.chains[c];
        ch.state = State::Done;
        for rx in ch.receivers.iter().filter(|r| !r.decoded) {
            self.records[rx.record].dl_attempts = ch.rounds;
        }
    }

    fn deliver(
        &mut self,
        record: usize,
        packet: usize,
        dl_eligible: u64,
        dl_end: u64,
        attempts: u32,
    ) -> Result<(), SimError> {
        let st = &self.state[packet];
        let trace = LatencyTrace {
            gen_ms: self.packets[packet].gen_ms,
            ul_eligible_tti: st.ul_eligible,
            ul_end_tti: st.ul_end,
            same_enb: true,
            dl_eligible_tti: Some(dl_eligible),
            dl_end_tti: Some(dl_end),
        };
        let ph = phases(&trace, &self.budget)?;
        let r = &mut self.records[record];
        r.ul_ms = Some(ph.ul_ms);
        r.inter_enb_ms = Some(ph.inter_enb_ms);
        r.dl_ms = Some(ph.dl_ms);
        r.latency = Latency::Finite(ph.total());
        r.dl_attempts = attempts;
        Ok(())
    }
}
