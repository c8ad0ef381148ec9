use std::cmp::Reverse;

use super::grid::ResourceGrid;
use crate::config::{RrQuantum, SchedulerPolicy};

/// One pending transmission's claim on this TTI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrbRequest {
    pub id: u64,
    /// PRBs still wanted in this TTI.
    pub demand: u32,
    /// TTI at which the packet became schedulable at this node.
    pub arrival_tti: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub id: u64,
    pub prbs: Vec<u32>,
}

impl Allocation {
    pub fn len(&self) -> u32 {
        self.prbs.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.prbs.is_empty()
    }
}

/// Round-robin position: the id that received the most recent PRB.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RrCursor {
    pub last_served: Option<u64>,
}

/// Hands free PRBs, in the grid's hand-out order, to `group` (any order),
/// cycling in id order from just after the cursor. Returns the allocations
/// in id order.
fn round_robin(
    group: &[PrbRequest],
    grid: &mut ResourceGrid,
    cursor: &mut RrCursor,
    quantum: RrQuantum,
) -> Vec<Allocation> {
    let mut order: Vec<&PrbRequest> = group.iter().filter(|r| r.demand > 0).collect();
    order.sort_by_key(|r| r.id);
    if let Some(last) = cursor.last_served {
        let start = order.partition_point(|r| r.id <= last);
        order.rotate_left(start);
    }
    let mut given = vec![0u32; order.len()];
    let mut prbs: Vec<Vec<u32>> = vec![Vec::new(); order.len()];
    let mut next = 0u32;
    let total = grid.prbs_total();
    'outer: loop {
        let mut progressed = false;
        for (i, req) in order.iter().enumerate() {
            let turn = match quantum {
                RrQuantum::Prb => 1,
                RrQuantum::Demand => req.demand,
            };
            let mut taken = 0;
            while taken < turn && given[i] < req.demand {
                while next < total && grid.is_used(grid.nth_in_order(next)) {
                    next += 1;
                }
                if next >= total {
                    break 'outer;
                }
                let k = grid.nth_in_order(next);
                grid.assign(req.id, k).expect("free PRB");
                prbs[i].push(k);
                given[i] += 1;
                taken += 1;
                cursor.last_served = Some(req.id);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let mut out: Vec<Allocation> = order
        .iter()
        .zip(prbs)
        .filter(|(_, p)| !p.is_empty())
        .map(|(r, prbs)| Allocation { id: r.id, prbs })
        .collect();
    out.sort_by_key(|a| a.id);
    out
}

/// Round robin over all pending requests, one PRB per turn.
pub fn schedule_uplink_rr(
    pending: &[PrbRequest],
    grid: &mut ResourceGrid,
    cursor: &mut RrCursor,
) -> Vec<Allocation> {
    round_robin(pending, grid, cursor, RrQuantum::Prb)
}

/// Round robin over all pending requests with the given turn size.
pub fn schedule_round_robin(
    pending: &[PrbRequest],
    grid: &mut ResourceGrid,
    cursor: &mut RrCursor,
    quantum: RrQuantum,
) -> Vec<Allocation> {
    round_robin(pending, grid, cursor, quantum)
}

/// Downlink scheduling. Under `NewestFirstThenRr` requests are served in
/// descending arrival order; requests sharing an arrival TTI split the
/// remaining PRBs round robin.
pub fn schedule_downlink(
    pending: &[PrbRequest],
    grid: &mut ResourceGrid,
    cursor: &mut RrCursor,
    policy: SchedulerPolicy,
    quantum: RrQuantum,
) -> Vec<Allocation> {
    match policy {
        SchedulerPolicy::Rr => round_robin(pending, grid, cursor, quantum),
        SchedulerPolicy::NewestFirstThenRr => {
            let mut sorted: Vec<PrbRequest> = pending.to_vec();
            sorted.sort_by_key(|r| (Reverse(r.arrival_tti), r.id));
            let mut out = Vec::new();
            for group in sorted.chunk_by(|a, b| a.arrival_tti == b.arrival_tti) {
                if grid.free() == 0 {
                    break;
                }
                out.extend(round_robin(group, grid, cursor, quantum));
            }
            out
        }
    }
}
