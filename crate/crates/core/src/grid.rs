//! Time-frequency resource of the cell: resource blocks per TTI, their
//! per-TTI ownership map, and the CQI to per-RB capacity mapping (AMC).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SubsliceId, TenantId, UeId};

/// TTI duration in microseconds.
pub const TTI_US: u32 = 1000;

/// Resource elements carried by one RB in one TTI (12 subcarriers x 14 symbols).
pub const RE_PER_RB: u32 = 168;

/// Cell sizes (in RBs) a grid may be configured with.
pub const VALID_NUM_RBS: [u32; 6] = [6, 15, 25, 50, 75, 100];

/// Spectral efficiency (bits per resource element) for CQI 1..=15.
pub const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023,
    4.5234, 5.1152, 5.5547,
];

pub const MIN_CQI: u8 = 1;
pub const MAX_CQI: u8 = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("cqi {0} outside 1..=15")]
    CqiOutOfRange(u8),
    #[error("num_rbs {0} is not one of 6, 15, 25, 50, 75, 100")]
    InvalidNumRbs(u32),
    #[error("rb range {start}..{end} exceeds grid of {num_rbs} RBs")]
    OutOfBounds { start: u32, end: u32, num_rbs: u32 },
    #[error("rb {rb} already owned by {existing}")]
    Conflict { rb: u32, existing: Owner },
}

/// Number of bits one RB carries in one TTI at the given CQI.
pub fn bits_per_rb(cqi: u8) -> Result<u32, GridError> {
    if !(MIN_CQI..=MAX_CQI).contains(&cqi) {
        return Err(GridError::CqiOutOfRange(cqi));
    }
    let efficiency = CQI_EFFICIENCY[usize::from(cqi - 1)];
    Ok((efficiency * f64::from(RE_PER_RB)).floor() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceGrid {
    num_rbs: u32,
}

impl ResourceGrid {
    pub fn new(num_rbs: u32) -> Result<Self, GridError> {
        if VALID_NUM_RBS.contains(&num_rbs) {
            Ok(Self { num_rbs })
        } else {
            Err(GridError::InvalidNumRbs(num_rbs))
        }
    }

    pub fn num_rbs(&self) -> u32 {
        self.num_rbs
    }

    pub fn tti_us(&self) -> u32 {
        TTI_US
    }

    /// A fresh, fully unassigned map for the given TTI.
    pub fn empty_map(&self, tti: u64) -> RbMap {
        RbMap::new(tti, self.num_rbs)
    }
}

impl Default for ResourceGrid {
    fn default() -> Self {
        Self { num_rbs: 25 }
    }
}

/// The UE (and the tenant/sub-slice it belongs to) holding an RB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Owner {
    pub tenant: TenantId,
    pub subslice: SubsliceId,
    pub ue: UeId,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(tenant {}, subslice {}, ue {})",
            self.tenant, self.subslice, self.ue
        )
    }
}

/// Ownership of every RB in one TTI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbMap {
    tti: u64,
    slots: Vec<Option<Owner>>,
}

impl RbMap {
    pub fn new(tti: u64, num_rbs: u32) -> Self {
        Self {
            tti,
            slots: vec![None; num_rbs as usize],
        }
    }

    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn num_rbs(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn slots(&self) -> &[Option<Owner>] {
        &self.slots
    }

    pub fn owner(&self, rb: u32) -> Option<Owner> {
        self.slots.get(rb as usize).copied().flatten()
    }

    /// Assigns `len` RBs starting at `start` to `owner`. On error the map is
    /// left untouched.
    pub fn assign_range(&mut self, owner: Owner, start: u32, len: u32) -> Result<(), GridError> {
        let end = start
            .checked_add(len)
            .filter(|&end| end <= self.num_rbs())
            .ok_or(GridError::OutOfBounds {
                start,
                end: start.saturating_add(len),
                num_rbs: self.num_rbs(),
            })?;
        let range = start as usize..end as usize;
        if let Some(offset) = self.slots[range.clone()].iter().position(Option::is_some) {
            let rb = start + offset as u32;
            return Err(GridError::Conflict {
                rb,
                existing: self.slots[rb as usize].expect("slot checked occupied"),
            });
        }
        for slot in &mut self.slots[range] {
            *slot = Some(owner);
        }
        Ok(())
    }

    pub fn assigned_count(&self) -> u32 {
        self.slots.iter().filter(|s| s.is_some()).count() as u32
    }

    /// Fraction of RBs carrying an owner.
    pub fn utilization(&self) -> f64 {
        if self.slots.is_empty() {
            return 0.0;
        }
        f64::from(self.assigned_count()) / self.slots.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn owner(ue: u32) -> Owner {
        Owner {
            tenant: TenantId(1),
            subslice: SubsliceId(1),
            ue: UeId(ue),
        }
    }

    #[test]
    fn amc_table_matches_hand_evaluated_floor() {
        // floor(0.1523 * 168), floor(1.4766 * 168), floor(5.5547 * 168)
        assert_eq!(bits_per_rb(1), Ok(25));
        assert_eq!(bits_per_rb(7), Ok(248));
        assert_eq!(bits_per_rb(15), Ok(933));
    }

    #[test]
    fn amc_rejects_out_of_range() {
        assert_eq!(bits_per_rb(0), Err(GridError::CqiOutOfRange(0)));
        assert_eq!(bits_per_rb(16), Err(GridError::CqiOutOfRange(16)));
    }

    #[test]
    fn amc_is_monotone_and_efficiency_strictly_increasing() {
        for w in CQI_EFFICIENCY.windows(2) {
            assert!(w[0] > 0.0 && w[0] < w[1]);
        }
        let bits: Vec<u32> = (1..=15).map(|c| bits_per_rb(c).unwrap()).collect();
        assert!(bits.windows(2).all(|w| w[0] <= w[1]), "{bits:?}");
    }

    #[test]
    fn grid_sizes() {
        assert!(ResourceGrid::new(25).is_ok());
        assert_eq!(ResourceGrid::new(24), Err(GridError::InvalidNumRbs(24)));
        assert_eq!(ResourceGrid::default().num_rbs(), 25);
        assert_eq!(ResourceGrid::default().tti_us(), 1000);
    }

    #[test]
    fn assign_range_owns_exactly_the_range() {
        let mut map = RbMap::new(0, 25);
        map.assign_range(owner(1), 0, 10).unwrap();
        for rb in 0..25 {
            assert_eq!(map.owner(rb).is_some(), rb < 10);
        }
    }

    #[test]
    fn assign_range_overlap_is_conflict() {
        let mut map = RbMap::new(0, 25);
        map.assign_range(owner(1), 0, 10).unwrap();
        let before = map.clone();
        assert_eq!(
            map.assign_range(owner(2), 5, 3),
            Err(GridError::Conflict {
                rb: 5,
                existing: owner(1)
            })
        );
        assert_eq!(map, before);
    }

    #[test]
    fn assign_range_past_end_is_bounds_error() {
        let mut map = RbMap::new(0, 25);
        assert!(matches!(
            map.assign_range(owner(1), 20, 10),
            Err(GridError::OutOfBounds { .. })
        ));
        assert_eq!(map.assigned_count(), 0);
        assert!(map.assign_range(owner(1), u32::MAX, 2).is_err());
    }

    #[test]
    fn utilization_cases() {
        let mut map = RbMap::new(3, 25);
        assert_eq!(map.utilization(), 0.0);
        map.assign_range(owner(1), 0, 20).unwrap();
        assert_eq!(map.utilization(), 0.8);
        map.assign_range(owner(2), 20, 5).unwrap();
        assert_eq!(map.utilization(), 1.0);
        assert_eq!(map.tti(), 3);
    }

    #[test]
    fn zero_length_assignment_is_noop() {
        let mut map = RbMap::new(0, 6);
        map.assign_range(owner(1), 6, 0).unwrap();
        assert_eq!(map.assigned_count(), 0);
    }
}
