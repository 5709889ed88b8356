//! Centralized sharing controller: collects one demand report per tenant MAC,
//! turns the cell's RBs into per-tenant grants under the selected policy, and
//! lays the grants out as disjoint RB ranges (the PHY coordinator role).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TenantId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharingMode {
    /// Every tenant is confined to its dedicated share.
    Static,
    /// Unused dedicated RBs are redistributed to tenants with residual demand.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlicingLevel {
    Single,
    Multi,
}

pub const POLICY_NAMES: [&str; 4] = [
    "static-single",
    "static-multi",
    "shared-single",
    "shared-multi",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharingPolicy {
    pub mode: SharingMode,
    pub slicing: SlicingLevel,
    /// 1 = per-TTI decisions; W > 1 = demands averaged and held over W TTIs.
    pub decision_period_ttis: u32,
}

impl SharingPolicy {
    pub fn new(mode: SharingMode, slicing: SlicingLevel) -> Self {
        Self {
            mode,
            slicing,
            decision_period_ttis: 1,
        }
    }

    pub fn with_period(self, decision_period_ttis: u32) -> Self {
        Self {
            decision_period_ttis,
            ..self
        }
    }

    /// One of [`POLICY_NAMES`].
    pub fn name(&self) -> String {
        let mode = match self.mode {
            SharingMode::Static => "static",
            SharingMode::Shared => "shared",
        };
        let slicing = match self.slicing {
            SlicingLevel::Single => "single",
            SlicingLevel::Multi => "multi",
        };
        format!("{mode}-{slicing}")
    }
}

impl Default for SharingPolicy {
    fn default() -> Self {
        Self::new(SharingMode::Shared, SlicingLevel::Multi)
    }
}

impl fmt::Display for SharingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy \"{0}\"; expected one of static-single, static-multi, shared-single, shared-multi")]
pub struct UnknownPolicy(pub String);

impl FromStr for SharingPolicy {
    type Err = UnknownPolicy;

    /// Parses a policy name; the decision period defaults to 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (mode, slicing) = match s {
            "static-single" => (SharingMode::Static, SlicingLevel::Single),
            "static-multi" => (SharingMode::Static, SlicingLevel::Multi),
            "shared-single" => (SharingMode::Shared, SlicingLevel::Single),
            "shared-multi" => (SharingMode::Shared, SlicingLevel::Multi),
            other => return Err(UnknownPolicy(other.to_string())),
        };
        Ok(Self::new(mode, slicing))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControllerError {
    #[error("dedicated shares sum {sum} \u{2260} {num_rbs}")]
    DedicatedMismatch { sum: u64, num_rbs: u32 },
    #[error("{demands} demands for {tenants} tenants")]
    Arity { demands: usize, tenants: usize },
    #[error("grants sum {sum} exceeds {num_rbs} RBs")]
    OverGranted { sum: u64, num_rbs: u32 },
}

/// Recent total demands per tenant, for coarse (windowed) decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandWindow {
    period: u32,
    rings: Vec<VecDeque<u32>>,
    held: Vec<u32>,
}

impl DemandWindow {
    pub fn new(tenants: usize, period: u32) -> Self {
        let period = period.max(1);
        Self {
            period,
            rings: vec![VecDeque::with_capacity(period as usize); tenants],
            held: vec![0; tenants],
        }
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    /// Records this TTI's totals and returns the demands the controller acts
    /// on. With period 1 these are the totals themselves. With period W they
    /// are the ceiling of the mean over the last W recorded totals,
    /// recomputed on TTIs divisible by W and held in between.
    pub fn effective_demands(&mut self, tti: u64, totals: &[u32]) -> Vec<u32> {
        debug_assert_eq!(totals.len(), self.rings.len());
        if self.period == 1 {
            self.held.copy_from_slice(totals);
            return totals.to_vec();
        }
        for (ring, &d) in self.rings.iter_mut().zip(totals) {
            if ring.len() == self.period as usize {
                ring.pop_front();
            }
            ring.push_back(d);
        }
        if tti.is_multiple_of(u64::from(self.period)) {
            for (held, ring) in self.held.iter_mut().zip(&self.rings) {
                let sum: u64 = ring.iter().map(|&d| u64::from(d)).sum();
                *held = sum.div_ceil(ring.len() as u64) as u32;
            }
        }
        self.held.clone()
    }

    pub fn held(&self) -> &[u32] {
        &self.held
    }

    pub fn history(&self, tenant: usize) -> impl Iterator<Item = u32> + '_ {
        self.rings[tenant].iter().copied()
    }
}

/// Per-tenant grants for one TTI.
///
/// Static: `g = min(d, D)`. Shared: the same base, then the surplus left by
/// under-using tenants is split over residual demands by largest remainder
/// (ties to the lower index), each capped at its residual, with any capped
/// overflow offered again to the tenants still short.
pub fn apportion(
    demands: &[u32],
    dedicated: &[u32],
    num_rbs: u32,
    mode: SharingMode,
) -> Result<Vec<u32>, ControllerError> {
    if demands.len() != dedicated.len() {
        return Err(ControllerError::Arity {
            demands: demands.len(),
            tenants: dedicated.len(),
        });
    }
    let sum: u64 = dedicated.iter().map(|&d| u64::from(d)).sum();
    if sum != u64::from(num_rbs) {
        return Err(ControllerError::DedicatedMismatch { sum, num_rbs });
    }
    let mut grants: Vec<u32> = demands
        .iter()
        .zip(dedicated)
        .map(|(&d, &ded)| d.min(ded))
        .collect();
    if mode == SharingMode::Static {
        return Ok(grants);
    }

    let used: u32 = grants.iter().sum();
    let mut surplus = num_rbs - used;
    let mut residual: Vec<u32> = demands.iter().zip(&grants).map(|(&d, &g)| d - g).collect();
    while surplus > 0 {
        let total: u64 = residual.iter().map(|&r| u64::from(r)).sum();
        if total == 0 {
            break;
        }
        let extra = largest_remainder(surplus, &residual, total);
        let mut handed = 0;
        for ((g, r), e) in grants.iter_mut().zip(residual.iter_mut()).zip(extra) {
            let e = e.min(*r);
            *g += e;
            *r -= e;
            handed += e;
        }
        if handed == 0 {
            break;
        }
        surplus -= handed;
    }
    Ok(grants)
}

/// Hamilton apportionment of `seats` proportionally to `weights`.
fn largest_remainder(seats: u32, weights: &[u32], total: u64) -> Vec<u32> {
    let seats64 = u64::from(seats);
    let mut out: Vec<u32> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let scaled = seats64 * u64::from(w);
        out.push((scaled / total) as u32);
        if w > 0 {
            remainders.push((scaled % total, i));
        }
    }
    let given: u32 = out.iter().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take((seats - given) as usize) {
        out[i] += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbRange {
    pub start: u32,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TenantGrant {
    pub tenant: TenantId,
    pub grant_rbs: u32,
    pub range: RbRange,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharingDecision {
    pub tti: u64,
    pub grants: Vec<TenantGrant>,
    /// RBs left unassigned at the top of the band.
    pub unassigned: RbRange,
}

/// Packs grants as contiguous ranges from RB 0 in the order given (ascending
/// tenant id); whatever is left stays at the top of the band.
pub fn assign_ranges(
    tti: u64,
    tenants: &[TenantId],
    grants: &[u32],
    num_rbs: u32,
) -> Result<SharingDecision, ControllerError> {
    let sum: u64 = grants.iter().map(|&g| u64::from(g)).sum();
    if sum > u64::from(num_rbs) {
        return Err(ControllerError::OverGranted { sum, num_rbs });
    }
    let mut next = 0;
    let grants = tenants
        .iter()
        .zip(grants)
        .map(|(&tenant, &g)| {
            let range = RbRange {
                start: next,
                len: g,
            };
            next += g;
            TenantGrant {
                tenant,
                grant_rbs: g,
                range,
            }
        })
        .collect();
    Ok(SharingDecision {
        tti,
        grants,
        unassigned: RbRange {
            start: next,
            len: num_rbs - next,
        },
    })
}

/// Controller state for one run.
#[derive(Debug, Clone)]
pub struct Controller {
    policy: SharingPolicy,
    tenants: Vec<TenantId>,
    dedicated: Vec<u32>,
    num_rbs: u32,
    window: DemandWindow,
}

/// Everything the controller decided in one TTI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlOutcome {
    pub effective_demands: Vec<u32>,
    pub decision: SharingDecision,
}

impl Controller {
    /// `tenants` and `dedicated` in ascending tenant id order.
    pub fn new(
        policy: SharingPolicy,
        tenants: Vec<TenantId>,
        dedicated: Vec<u32>,
        num_rbs: u32,
    ) -> Result<Self, ControllerError> {
        let sum: u64 = dedicated.iter().map(|&d| u64::from(d)).sum();
        if sum != u64::from(num_rbs) {
            return Err(ControllerError::DedicatedMismatch { sum, num_rbs });
        }
        let window = DemandWindow::new(tenants.len(), policy.decision_period_ttis);
        Ok(Self {
            policy,
            tenants,
            dedicated,
            num_rbs,
            window,
        })
    }

    pub fn policy(&self) -> SharingPolicy {
        self.policy
    }

    /// `totals` holds each tenant's reported total demand, in tenant order.
    pub fn decide(&mut self, tti: u64, totals: &[u32]) -> Result<ControlOutcome, ControllerError> {
        if totals.len() != self.tenants.len() {
            return Err(ControllerError::Arity {
                demands: totals.len(),
                tenants: self.tenants.len(),
            });
        }
        let effective = self.window.effective_demands(tti, totals);
        let grants = apportion(&effective, &self.dedicated, self.num_rbs, self.policy.mode)?;
        let decision = assign_ranges(tti, &self.tenants, &grants, self.num_rbs)?;
        Ok(ControlOutcome {
            effective_demands: effective,
            decision,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_redistributes_unused_share() {
        assert_eq!(
            apportion(&[20, 5], &[13, 12], 25, SharingMode::Shared),
            Ok(vec![20, 5])
        );
    }

    #[test]
    fn shared_three_tenants_largest_remainder() {
        // base (4,5,5), surplus 6 over residuals (0,15,15)
        assert_eq!(
            apportion(&[4, 20, 20], &[10, 5, 5], 20, SharingMode::Shared),
            Ok(vec![4, 8, 8])
        );
    }

    #[test]
    fn zero_demand_zero_grant() {
        for mode in [SharingMode::Static, SharingMode::Shared] {
            assert_eq!(apportion(&[0, 0], &[13, 12], 25, mode), Ok(vec![0, 0]));
        }
    }

    #[test]
    fn static_is_min_per_tenant() {
        assert_eq!(
            apportion(&[20, 5], &[13, 12], 25, SharingMode::Static),
            Ok(vec![13, 5])
        );
    }

    #[test]
    fn remainder_ties_go_to_lower_index() {
        // surplus 1 split evenly over two residuals of 3
        assert_eq!(
            apportion(&[3, 3, 0], &[1, 1, 1], 3, SharingMode::Shared),
            Ok(vec![2, 1, 0])
        );
    }

    #[test]
    fn dedicated_mismatch_is_config_error() {
        assert_eq!(
            apportion(&[1, 1], &[13, 13], 25, SharingMode::Shared),
            Err(ControllerError::DedicatedMismatch {
                sum: 26,
                num_rbs: 25
            })
        );
    }

    #[test]
    fn ranges_pack_from_zero() {
        let t = [TenantId(1), TenantId(2)];
        let d = assign_ranges(0, &t, &[10, 15], 25).unwrap();
        assert_eq!(d.grants[0].range, RbRange { start: 0, len: 10 });
        assert_eq!(d.grants[1].range, RbRange { start: 10, len: 15 });
        assert_eq!(d.unassigned.len, 0);

        let d = assign_ranges(0, &t, &[20, 5], 25).unwrap();
        assert_eq!(d.grants[1].range, RbRange { start: 20, len: 5 });

        let d = assign_ranges(0, &t, &[0, 0], 25).unwrap();
        assert!(d.grants.iter().all(|g| g.range.len == 0));
        assert_eq!(d.unassigned, RbRange { start: 0, len: 25 });
    }

    #[test]
    fn over_grant_is_invariant_violation() {
        let t = [TenantId(1), TenantId(2)];
        assert!(matches!(
            assign_ranges(0, &t, &[20, 6], 25),
            Err(ControllerError::OverGranted { sum: 26, .. })
        ));
    }

    #[test]
    fn window_period_one_is_identity() {
        let mut w = DemandWindow::new(1, 1);
        assert_eq!(w.effective_demands(0, &[20]), vec![20]);
        assert_eq!(w.effective_demands(1, &[3]), vec![3]);
    }

    #[test]
    fn window_mean_and_hold() {
        let mut w = DemandWindow::new(1, 4);
        let mut out = Vec::new();
        for (tti, d) in [(0u64, 9u32), (1, 0), (2, 4), (3, 4), (4, 8), (5, 100)] {
            out.push(w.effective_demands(tti, &[d])[0]);
        }
        // tti 0 decides on {9}; ttis 1..3 hold; tti 4 decides on (0,4,4,8); tti 5 holds
        assert_eq!(out, vec![9, 9, 9, 9, 4, 4]);
        assert_eq!(w.history(0).collect::<Vec<_>>(), vec![4, 4, 8, 100]);
    }

    #[test]
    fn policy_names_round_trip() {
        for name in POLICY_NAMES {
            assert_eq!(name.parse::<SharingPolicy>().unwrap().name(), name);
        }
        assert!("fancy".parse::<SharingPolicy>().is_err());
    }

    #[test]
    fn controller_decides_and_packs() {
        let policy = SharingPolicy::default();
        let mut c =
            Controller::new(policy, vec![TenantId(1), TenantId(2)], vec![13, 12], 25).unwrap();
        let out = c.decide(0, &[20, 5]).unwrap();
        assert_eq!(out.effective_demands, vec![20, 5]);
        assert_eq!(out.decision.grants[0].range, RbRange { start: 0, len: 20 });
        assert!(c.decide(1, &[1]).is_err());
    }

    /// Fine decisions serve the burst on its own TTI and hand the idle TTIs
    /// to the saturated tenant; a 4-TTI window holds the burst's grant
    /// through the idle TTIs.
    #[test]
    fn fine_beats_coarse_on_four_tti_miniature() {
        let dedicated = [3, 3];
        let bursty = [6u32, 0, 0, 0];
        let used_fraction = |period: u32| {
            let policy = SharingPolicy::default().with_period(period);
            let mut c = Controller::new(
                policy,
                vec![TenantId(1), TenantId(2)],
                dedicated.to_vec(),
                6,
            )
            .unwrap();
            let mut used = 0;
            for (tti, &a) in bursty.iter().enumerate() {
                let g = c.decide(tti as u64, &[a, 100]).unwrap().decision.grants;
                used += g[0].grant_rbs.min(a) + g[1].grant_rbs.min(100);
            }
            f64::from(used) / 24.0
        };
        // fine: (3+3) then three TTIs of (0+6)
        assert_eq!(used_fraction(1), 1.0);
        // coarse: (3+3) held, A idle for three TTIs -> 6 + 3*3 = 15 of 24
        assert_eq!(used_fraction(4), 0.625);
    }
}
