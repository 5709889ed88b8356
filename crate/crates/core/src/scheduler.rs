//! Per-tenant MAC scheduling.
//!
//! Multi-level mode serves GBR sub-slices first, limited to the credit in
//! their token bucket, then shares the rest of the tenant's grant among
//! non-GBR sub-slices by weighted deficit. Single-level mode is the
//! baseline: one round robin over every backlogged UE of the tenant,
//! blind to sub-slices.

use std::collections::BTreeMap;

use crate::controller::SlicingLevel;
use crate::grid::{bits_per_rb, GridError};
use crate::model::{ServiceClass, SubsliceId, TenantConfig, TenantId, UeId};
use crate::stack::SduRef;

/// Bucket depth, in TTIs of credit.
pub const GBR_BUCKET_TTIS: u64 = 20;

/// GBR token bucket. Credit is kept in millibits so `gbr_bps * 1 ms` accrues
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GbrBucket {
    credit_millibits: u64,
    cap_millibits: u64,
}

impl GbrBucket {
    /// A full bucket sized for `gbr_bps`.
    pub fn new(gbr_bps: u64) -> Self {
        let cap = gbr_bps * GBR_BUCKET_TTIS;
        Self {
            credit_millibits: cap,
            cap_millibits: cap,
        }
    }

    pub fn with_credit(credit_bits: u64, cap_bits: u64) -> Self {
        Self {
            credit_millibits: credit_bits.min(cap_bits) * 1000,
            cap_millibits: cap_bits * 1000,
        }
    }

    /// One TTI of accrual at `gbr_bps`, saturating at the cap.
    pub fn accrue(&mut self, gbr_bps: u64) {
        self.credit_millibits = (self.credit_millibits + gbr_bps).min(self.cap_millibits);
    }

    /// Whole bits of credit available.
    pub fn credit_bits(&self) -> u64 {
        self.credit_millibits / 1000
    }

    pub fn credit_millibits(&self) -> u64 {
        self.credit_millibits
    }

    pub fn cap_bits(&self) -> u64 {
        self.cap_millibits / 1000
    }

    pub fn consume(&mut self, bits: u64) {
        self.credit_millibits = self.credit_millibits.saturating_sub(bits * 1000);
    }
}

/// What the scheduler sees of one UE at the start of a TTI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UeSnapshot {
    pub ue: UeId,
    pub subslice: SubsliceId,
    pub backlog_bits: u64,
    pub cqi: u8,
    pub bits_per_rb: u32,
    /// Oldest queued SDU, used to apportion shared GBR credit FIFO.
    pub head_of_line: Option<SduRef>,
}

impl UeSnapshot {
    pub fn new(
        ue: UeId,
        subslice: SubsliceId,
        backlog_bits: u64,
        cqi: u8,
        head_of_line: Option<SduRef>,
    ) -> Result<Self, GridError> {
        Ok(Self {
            ue,
            subslice,
            backlog_bits,
            cqi,
            bits_per_rb: bits_per_rb(cqi)?,
            head_of_line,
        })
    }

    fn rbs_for(&self, bits: u64) -> u32 {
        bits.div_ceil(u64::from(self.bits_per_rb)) as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsliceDemand {
    pub subslice: SubsliceId,
    pub gbr: bool,
    pub eligible_bits: u64,
    pub demand_rbs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandReport {
    pub tenant: TenantId,
    pub subslices: Vec<SubsliceDemand>,
    pub gbr_demand_rbs: u32,
    pub total_demand_rbs: u32,
}

impl DemandReport {
    pub fn subslice(&self, id: SubsliceId) -> Option<&SubsliceDemand> {
        self.subslices.iter().find(|d| d.subslice == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub ue: UeId,
    pub subslice: SubsliceId,
    pub rb_count: u32,
    /// Capacity of the allocation: `rb_count * bits_per_rb(cqi)`.
    pub bits: u64,
    /// Bits the MAC will actually drain; at most `bits`, and for GBR service
    /// at most the credit apportioned to the UE.
    pub budget_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleList {
    pub tenant: TenantId,
    pub entries: Vec<ScheduleEntry>,
}

impl ScheduleList {
    pub fn total_rbs(&self) -> u32 {
        self.entries.iter().map(|e| e.rb_count).sum()
    }

    pub fn rbs_for(&self, subslice: SubsliceId) -> u32 {
        self.entries
            .iter()
            .filter(|e| e.subslice == subslice)
            .map(|e| e.rb_count)
            .sum()
    }
}

#[derive(Debug, Clone)]
struct SubsliceState {
    id: SubsliceId,
    class: ServiceClass,
    bucket: Option<GbrBucket>,
    ues: Vec<UeId>,
    cursor: usize,
    /// Weighted-deficit position: RBs served, normalized each TTI.
    served_rbs: u64,
}

impl SubsliceState {
    fn weight(&self) -> u64 {
        match self.class {
            ServiceClass::NonGbr { weight } => u64::from(weight),
            ServiceClass::Gbr { .. } => 1,
        }
    }
}

/// Next index in `0..len` at or after `cursor` (cyclically) satisfying
/// `wants`; advances the cursor past it.
fn rotate(len: usize, cursor: &mut usize, mut wants: impl FnMut(usize) -> bool) -> Option<usize> {
    (0..len)
        .map(|k| (*cursor + k) % len)
        .find(|&i| wants(i))
        .inspect(|&i| {
            *cursor = (i + 1) % len;
        })
}

/// Accumulates per-RB allocations into entries, ordered by first allocation.
struct Allocator<'a> {
    snapshot: &'a BTreeMap<UeId, UeSnapshot>,
    entries: Vec<ScheduleEntry>,
    index: BTreeMap<UeId, usize>,
}

impl<'a> Allocator<'a> {
    fn new(snapshot: &'a BTreeMap<UeId, UeSnapshot>) -> Self {
        Self {
            snapshot,
            entries: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    /// Gives one RB to `ue`, draining at most `remaining` bits; returns the
    /// bits it will carry.
    fn give(&mut self, ue: UeId, remaining: u64) -> u64 {
        let snap = &self.snapshot[&ue];
        let bpr = u64::from(snap.bits_per_rb);
        let budget = bpr.min(remaining);
        let idx = *self.index.entry(ue).or_insert_with(|| {
            self.entries.push(ScheduleEntry {
                ue,
                subslice: snap.subslice,
                rb_count: 0,
                bits: 0,
                budget_bits: 0,
            });
            self.entries.len() - 1
        });
        let entry = &mut self.entries[idx];
        entry.rb_count += 1;
        entry.bits += bpr;
        entry.budget_bits += budget;
        budget
    }
}

/// One tenant's MAC scheduler state, persistent across TTIs.
#[derive(Debug, Clone)]
pub struct TenantScheduler {
    tenant: TenantId,
    subslices: Vec<SubsliceState>,
    /// All UEs of the tenant, by id, for the single-level rotation.
    ues: Vec<UeId>,
    single_cursor: usize,
}

impl TenantScheduler {
    /// `ues` lists the tenant's (sub-slice, UE) pairs.
    pub fn new(cfg: &TenantConfig, ues: impl IntoIterator<Item = (SubsliceId, UeId)>) -> Self {
        let mut subslices: Vec<SubsliceState> = cfg
            .subslices
            .iter()
            .map(|s| SubsliceState {
                id: s.id,
                class: s.class,
                bucket: match s.class {
                    ServiceClass::Gbr { gbr_bps } => Some(GbrBucket::new(gbr_bps)),
                    ServiceClass::NonGbr { .. } => None,
                },
                ues: Vec::new(),
                cursor: 0,
                served_rbs: 0,
            })
            .collect();
        subslices.sort_by_key(|s| s.id);
        let mut all = Vec::new();
        for (subslice, ue) in ues {
            if let Some(s) = subslices.iter_mut().find(|s| s.id == subslice) {
                s.ues.push(ue);
                all.push(ue);
            }
        }
        for s in &mut subslices {
            s.ues.sort();
        }
        all.sort();
        Self {
            tenant: cfg.id,
            subslices,
            ues: all,
            single_cursor: 0,
        }
    }

    pub fn tenant(&self) -> TenantId {
        self.tenant
    }

    pub fn bucket(&self, subslice: SubsliceId) -> Option<&GbrBucket> {
        self.subslices
            .iter()
            .find(|s| s.id == subslice)?
            .bucket
            .as_ref()
    }

    pub fn set_bucket(&mut self, subslice: SubsliceId, bucket: GbrBucket) {
        if let Some(s) = self.subslices.iter_mut().find(|s| s.id == subslice) {
            s.bucket = Some(bucket);
        }
    }

    /// One TTI of credit for every GBR sub-slice.
    pub fn accrue_gbr(&mut self) {
        for s in &mut self.subslices {
            if let (ServiceClass::Gbr { gbr_bps }, Some(bucket)) = (s.class, s.bucket.as_mut()) {
                bucket.accrue(gbr_bps);
            }
        }
    }

    fn index(snapshot: &[UeSnapshot]) -> BTreeMap<UeId, UeSnapshot> {
        snapshot.iter().map(|s| (s.ue, *s)).collect()
    }

    /// Per-UE eligible bits of a GBR sub-slice: the shared credit handed out
    /// in head-of-line arrival order.
    fn gbr_eligible(
        state: &SubsliceState,
        snaps: &BTreeMap<UeId, UeSnapshot>,
    ) -> BTreeMap<UeId, u64> {
        let mut credit = state.bucket.map_or(0, |b| b.credit_bits());
        let mut order: Vec<&UeSnapshot> = state
            .ues
            .iter()
            .filter_map(|ue| snaps.get(ue))
            .filter(|s| s.backlog_bits > 0)
            .collect();
        order.sort_by_key(|s| (s.head_of_line.map(|h| h.id), s.ue));
        let mut out: BTreeMap<UeId, u64> = state.ues.iter().map(|&u| (u, 0)).collect();
        for snap in order {
            let take = snap.backlog_bits.min(credit);
            credit -= take;
            out.insert(snap.ue, take);
        }
        out
    }

    fn eligible_bits(
        &self,
        state: &SubsliceState,
        snaps: &BTreeMap<UeId, UeSnapshot>,
        level: SlicingLevel,
    ) -> BTreeMap<UeId, u64> {
        if state.class.is_gbr() && level == SlicingLevel::Multi {
            Self::gbr_eligible(state, snaps)
        } else {
            state
                .ues
                .iter()
                .map(|u| (*u, snaps.get(u).map_or(0, |s| s.backlog_bits)))
                .collect()
        }
    }

    /// RBs each sub-slice needs this TTI. GBR sub-slices ask only for what
    /// their credit covers in multi-level mode; single-level asks for the
    /// whole backlog.
    pub fn compute_demand(&self, snapshot: &[UeSnapshot], level: SlicingLevel) -> DemandReport {
        let snaps = Self::index(snapshot);
        let mut subslices = Vec::with_capacity(self.subslices.len());
        for state in &self.subslices {
            let eligible = self.eligible_bits(state, &snaps, level);
            let demand_rbs = eligible
                .iter()
                .filter_map(|(ue, bits)| snaps.get(ue).map(|s| s.rbs_for(*bits)))
                .sum();
            subslices.push(SubsliceDemand {
                subslice: state.id,
                gbr: state.class.is_gbr(),
                eligible_bits: eligible.values().sum(),
                demand_rbs,
            });
        }
        DemandReport {
            tenant: self.tenant,
            gbr_demand_rbs: subslices
                .iter()
                .filter(|d| d.gbr)
                .map(|d| d.demand_rbs)
                .sum(),
            total_demand_rbs: subslices.iter().map(|d| d.demand_rbs).sum(),
            subslices,
        }
    }

    pub fn schedule(
        &mut self,
        level: SlicingLevel,
        snapshot: &[UeSnapshot],
        granted_rbs: u32,
    ) -> ScheduleList {
        match level {
            SlicingLevel::Multi => self.schedule_multi(snapshot, granted_rbs),
            SlicingLevel::Single => self.schedule_single(snapshot, granted_rbs),
        }
    }

    /// GBR sub-slices first, round robin across them RB by RB up to their
    /// credit-limited demand; the remainder goes to non-GBR sub-slices by
    /// weighted deficit.
    pub fn schedule_multi(&mut self, snapshot: &[UeSnapshot], granted_rbs: u32) -> ScheduleList {
        let snaps = Self::index(snapshot);
        let mut alloc = Allocator::new(&snaps);
        let mut left = granted_rbs;

        // phase 1: GBR
        let mut gbr_remaining: Vec<(usize, BTreeMap<UeId, u64>)> = self
            .subslices
            .iter()
            .enumerate()
            .filter(|(_, s)| s.class.is_gbr())
            .map(|(i, s)| (i, Self::gbr_eligible(s, &snaps)))
            .collect();
        let mut gbr_served = vec![0u64; self.subslices.len()];
        while left > 0 {
            let mut progressed = false;
            for (i, remaining) in &mut gbr_remaining {
                if left == 0 {
                    break;
                }
                let state = &mut self.subslices[*i];
                let ues = &state.ues;
                let pick = rotate(ues.len(), &mut state.cursor, |k| {
                    remaining.get(&ues[k]).is_some_and(|&b| b > 0)
                });
                if let Some(k) = pick {
                    let ue = ues[k];
                    let rem = remaining.get_mut(&ue).expect("picked ue has eligible bits");
                    let served = alloc.give(ue, *rem);
                    *rem -= served;
                    gbr_served[*i] += served;
                    left -= 1;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        for (i, state) in self.subslices.iter_mut().enumerate() {
            if let Some(bucket) = state.bucket.as_mut() {
                bucket.consume(gbr_served[i]);
            }
        }

        // phase 2: non-GBR, weighted deficit
        let mut remaining: Vec<Option<BTreeMap<UeId, u64>>> = self
            .subslices
            .iter()
            .map(|s| {
                (!s.class.is_gbr()).then(|| {
                    s.ues
                        .iter()
                        .map(|u| (*u, snaps.get(u).map_or(0, |x| x.backlog_bits)))
                        .collect()
                })
            })
            .collect();
        let backlogged = |r: &Option<BTreeMap<UeId, u64>>| {
            r.as_ref().is_some_and(|m| m.values().any(|&b| b > 0))
        };
        let floor = self
            .subslices
            .iter()
            .zip(&remaining)
            .filter(|(_, r)| backlogged(r))
            .map(|(s, _)| s.served_rbs / s.weight())
            .min()
            .unwrap_or(0);
        for (state, r) in self.subslices.iter_mut().zip(&remaining) {
            if state.class.is_gbr() {
                continue;
            }
            if backlogged(r) {
                state.served_rbs -= floor * state.weight();
            } else {
                state.served_rbs = 0;
            }
        }
        while left > 0 {
            let mut best: Option<usize> = None;
            for (i, state) in self.subslices.iter().enumerate() {
                if !backlogged(&remaining[i]) {
                    continue;
                }
                best = match best {
                    // strictly smaller served/weight wins; ties keep the lower id
                    Some(b) => {
                        let cur = &self.subslices[b];
                        if u128::from(state.served_rbs) * u128::from(cur.weight())
                            < u128::from(cur.served_rbs) * u128::from(state.weight())
                        {
                            Some(i)
                        } else {
                            Some(b)
                        }
                    }
                    None => Some(i),
                };
            }
            let Some(i) = best else { break };
            let state = &mut self.subslices[i];
            let rem_map = remaining[i].as_mut().expect("non-GBR sub-slice");
            let ues = &state.ues;
            let k = rotate(ues.len(), &mut state.cursor, |k| {
                rem_map.get(&ues[k]).is_some_and(|&b| b > 0)
            })
            .expect("backlogged sub-slice has a UE with bits");
            let ue = ues[k];
            let rem = rem_map.get_mut(&ue).expect("ue present");
            *rem -= alloc.give(ue, *rem);
            state.served_rbs += 1;
            left -= 1;
        }

        ScheduleList {
            tenant: self.tenant,
            entries: alloc.entries,
        }
    }

    /// Round robin RB by RB over every backlogged UE of the tenant, ignoring
    /// sub-slice class, credit and weight. GBR credit is still drawn down by
    /// whatever GBR traffic happens to be served.
    pub fn schedule_single(&mut self, snapshot: &[UeSnapshot], granted_rbs: u32) -> ScheduleList {
        let snaps = Self::index(snapshot);
        let mut alloc = Allocator::new(&snaps);
        let mut remaining: BTreeMap<UeId, u64> = self
            .ues
            .iter()
            .map(|u| (*u, snaps.get(u).map_or(0, |s| s.backlog_bits)))
            .collect();
        for _ in 0..granted_rbs {
            let ues = &self.ues;
            let Some(k) = rotate(ues.len(), &mut self.single_cursor, |k| {
                remaining[&ues[k]] > 0
            }) else {
                break;
            };
            let ue = ues[k];
            let rem = remaining.get_mut(&ue).expect("ue present");
            *rem -= alloc.give(ue, *rem);
        }
        let entries = alloc.entries;
        for state in &mut self.subslices {
            if let Some(bucket) = state.bucket.as_mut() {
                let served: u64 = entries
                    .iter()
                    .filter(|e| e.subslice == state.id)
                    .map(|e| e.budget_bits)
                    .sum();
                bucket.consume(served);
            }
        }
        ScheduleList {
            tenant: self.tenant,
            entries,
        }
    }
}
