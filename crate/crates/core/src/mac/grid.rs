use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("PRB {prb} is already held by {owner} in TTI {tti}")]
    DoubleBooked { tti: u64, prb: u32, owner: u64 },
    #[error("PRB {prb} is outside the {total}-PRB grid")]
    OutOfRange { prb: u32, total: u32 },
}

/// PRB ownership for one sector, one direction, one TTI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceGrid {
    pub tti: u64,
    owner: Vec<Option<u64>>,
    used: u32,
    /// Index at which PRB hand-out starts, wrapping around.
    first: u32,
}

impl ResourceGrid {
    pub fn new(tti: u64, prbs_total: u32) -> Self {
        Self {
            tti,
            owner: vec![None; prbs_total as usize],
            used: 0,
            first: 0,
        }
    }

    /// Grid whose PRBs are handed out from `first` upward, wrapping.
    pub fn with_start(tti: u64, prbs_total: u32, first: u32) -> Self {
        let mut g = Self::new(tti, prbs_total);
        g.first = if prbs_total == 0 {
            0
        } else {
            first % prbs_total
        };
        g
    }

    /// The `n`th PRB in hand-out order.
    pub fn nth_in_order(&self, n: u32) -> u32 {
        (self.first + n) % self.prbs_total()
    }

    pub fn prbs_total(&self) -> u32 {
        self.owner.len() as u32
    }

    pub fn used(&self) -> u32 {
        self.used
    }

    pub fn free(&self) -> u32 {
        self.prbs_total() - self.used
    }

    pub fn is_used(&self, prb: u32) -> bool {
        self.owner.get(prb as usize).is_some_and(Option::is_some)
    }

    pub fn owner(&self, prb: u32) -> Option<u64> {
        self.owner.get(prb as usize).copied().flatten()
    }

    pub fn assign(&mut self, id: u64, prb: u32) -> Result<(), GridError> {
        let total = self.prbs_total();
        let slot = self
            .owner
            .get_mut(prb as usize)
            .ok_or(GridError::OutOfRange { prb, total })?;
        if let Some(owner) = *slot {
            return Err(GridError::DoubleBooked {
                tti: self.tti,
                prb,
                owner,
            });
        }
        *slot = Some(id);
        self.used += 1;
        Ok(())
    }

    /// First free PRB in hand-out order, if any.
    pub fn first_free(&self) -> Option<u32> {
        (0..self.prbs_total())
            .map(|n| self.nth_in_order(n))
            .find(|&k| !self.is_used(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_booking_is_refused() {
        let mut g = ResourceGrid::new(3, 4);
        g.assign(1, 2).unwrap();
        assert_eq!(
            g.assign(2, 2),
            Err(GridError::DoubleBooked {
                tti: 3,
                prb: 2,
                owner: 1
            })
        );
        assert_eq!(
            g.assign(2, 9),
            Err(GridError::OutOfRange { prb: 9, total: 4 })
        );
        assert_eq!(g.used(), 1);
        assert_eq!(g.first_free(), Some(0));
    }

    #[test]
    fn hand_out_order_wraps() {
        let mut g = ResourceGrid::with_start(0, 4, 3);
        assert_eq!(g.first_free(), Some(3));
        g.assign(7, 3).unwrap();
        assert_eq!(g.first_free(), Some(0));
        assert_eq!(
            (0..4).map(|n| g.nth_in_order(n)).collect::<Vec<_>>(),
            vec![3, 0, 1, 2]
        );
    }
}
