//! TTI-stepped simulation loop.
//!
//! Each step runs, in order: traffic arrivals into the MAC array, the CQI
//! snapshot, GBR accrual, per-tenant demand reports, the controller decision,
//! per-tenant scheduling, and service of every schedule entry onto the RB
//! map. One run is single-threaded and a pure function of (scenario, seed).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::controller::{Controller, ControllerError, RbRange, SharingPolicy, SlicingLevel};
use crate::grid::{GridError, Owner, ResourceGrid};
use crate::model::{Scenario, SubsliceId, TenantId, UeId};
use crate::scheduler::{ScheduleList, TenantScheduler, UeSnapshot};
use crate::stack::{BitLedger, Enqueued, MacArray, StackError};
use crate::traffic::{channel_for, CqiProcess, TrafficSource};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invariant violated at tti {tti} (state digest {digest:016x}): {detail}")]
    Invariant {
        tti: u64,
        digest: u64,
        detail: String,
    },
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Stack(#[from] StackError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TenantRecord {
    pub tenant: TenantId,
    /// Total demand reported by the tenant MAC this TTI.
    pub demand_rbs: u32,
    /// Demand the controller acted on (differs from `demand_rbs` only for
    /// windowed decisions).
    pub effective_demand_rbs: u32,
    pub dedicated_rbs: u32,
    pub grant_rbs: u32,
    pub range: RbRange,
    /// RBs the tenant MAC actually placed UEs on.
    pub scheduled_rbs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsliceRecord {
    pub tenant: TenantId,
    pub subslice: SubsliceId,
    pub gbr: bool,
    pub demand_rbs: u32,
    /// Bits the sub-slice was entitled to this TTI: the credit-limited
    /// backlog for GBR, the backlog otherwise.
    pub eligible_bits: u64,
    pub granted_rbs: u32,
    pub served_bits: u64,
    pub delivered_bits: u64,
    pub backlog_bits: u64,
    pub gbr_credit_bits: Option<u64>,
    /// Delay of every SDU whose last bit was served this TTI, in ms.
    pub delays_ms: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub tti: u64,
    pub num_rbs: u32,
    pub tenants: Vec<TenantRecord>,
    pub subslices: Vec<SubsliceRecord>,
    pub used_rbs: u32,
    pub utilization: f64,
    pub misrouted_sdus: u64,
}

struct UeRuntime {
    id: UeId,
    tenant: TenantId,
    subslice: SubsliceId,
    traffic: TrafficSource,
    channel: CqiProcess,
}

/// Full mutable state of one run.
pub struct Simulation {
    clock: u64,
    grid: ResourceGrid,
    policy: SharingPolicy,
    tenants: Vec<TenantId>,
    dedicated: Vec<u32>,
    gbr: BTreeMap<(TenantId, SubsliceId), bool>,
    macs: MacArray,
    schedulers: Vec<TenantScheduler>,
    controller: Controller,
    ues: Vec<UeRuntime>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self, EngineError> {
        let tenants: Vec<TenantId> = scenario.tenants.iter().map(|t| t.id).collect();
        let dedicated: Vec<u32> = scenario.tenants.iter().map(|t| t.dedicated_rbs).collect();
        let controller = Controller::new(
            scenario.policy,
            tenants.clone(),
            dedicated.clone(),
            scenario.grid.num_rbs(),
        )?;
        let schedulers = scenario
            .tenants
            .iter()
            .map(|t| {
                TenantScheduler::new(
                    t,
                    scenario
                        .ues
                        .iter()
                        .filter(|u| u.tenant == t.id)
                        .map(|u| (u.subslice, u.id)),
                )
            })
            .collect();
        let gbr = scenario
            .tenants
            .iter()
            .flat_map(|t| {
                t.subslices
                    .iter()
                    .map(move |s| ((t.id, s.id), s.class.is_gbr()))
            })
            .collect();
        let ues = scenario
            .ues
            .iter()
            .map(|u| UeRuntime {
                id: u.id,
                tenant: u.tenant,
                subslice: u.subslice,
                traffic: TrafficSource::new(u, seed),
                channel: channel_for(u, seed),
            })
            .collect();
        Ok(Self {
            clock: 0,
            grid: scenario.grid,
            policy: scenario.policy,
            tenants,
            dedicated,
            gbr,
            macs: MacArray::from_scenario(scenario),
            schedulers,
            controller,
            ues,
        })
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn macs(&self) -> &MacArray {
        &self.macs
    }

    pub fn scheduler(&self, tenant: TenantId) -> Option<&TenantScheduler> {
        self.schedulers.iter().find(|s| s.tenant() == tenant)
    }

    /// FNV-1a over the clock, every queue backlog and every GBR credit.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.clock);
        for (t, s, u, q) in self.macs.iter_queues() {
            eat(u64::from(t.0));
            eat(u64::from(s.0));
            eat(u64::from(u.0));
            eat(q.backlog_bits());
        }
        for sched in &self.schedulers {
            for (&(t, s), _) in self
                .gbr
                .iter()
                .filter(|(k, g)| **g && k.0 == sched.tenant())
            {
                if let Some(b) = sched.bucket(s) {
                    eat(u64::from(t.0));
                    eat(b.credit_millibits());
                }
            }
        }
        h
    }

    fn violation(&self, detail: impl Into<String>) -> EngineError {
        EngineError::Invariant {
            tti: self.clock,
            digest: self.digest(),
            detail: detail.into(),
        }
    }

    /// Advances the simulation by exactly one TTI.
    pub fn step_tti(&mut self) -> Result<MetricsRecord, EngineError> {
        let tti = self.clock;
        let level = self.policy.slicing;

        // 1. arrivals
        let mut delivered: BTreeMap<(TenantId, SubsliceId), u64> = BTreeMap::new();
        for ue in &mut self.ues {
            let backlog = self.macs.ue_backlog_bits(ue.tenant, ue.subslice, ue.id)?;
            for sdu in ue.traffic.arrivals(tti, backlog) {
                if let Enqueued::Queued {
                    tenant, subslice, ..
                } = self.macs.deliver(sdu)
                {
                    *delivered.entry((tenant, subslice)).or_default() += sdu.size_bits;
                }
            }
        }

        // 2. cqi snapshot
        let mut snapshots: BTreeMap<TenantId, Vec<UeSnapshot>> =
            self.tenants.iter().map(|t| (*t, Vec::new())).collect();
        for ue in &mut self.ues {
            let cqi = ue.channel.cqi_at(tti);
            let queue = self.macs.queue(ue.tenant, ue.subslice, ue.id)?;
            let snap = UeSnapshot::new(
                ue.id,
                ue.subslice,
                queue.backlog_bits(),
                cqi,
                queue.head().map(|s| s.sdu),
            )?;
            snapshots.entry(ue.tenant).or_default().push(snap);
        }

        // 3. GBR accrual
        for sched in &mut self.schedulers {
            sched.accrue_gbr();
        }

        // 4. demand reports
        let reports: Vec<_> = self
            .schedulers
            .iter()
            .map(|s| s.compute_demand(&snapshots[&s.tenant()], level))
            .collect();
        let entitled: Vec<_> = match level {
            SlicingLevel::Multi => reports.clone(),
            SlicingLevel::Single => self
                .schedulers
                .iter()
                .map(|s| s.compute_demand(&snapshots[&s.tenant()], SlicingLevel::Multi))
                .collect(),
        };
        let totals: Vec<u32> = reports.iter().map(|r| r.total_demand_rbs).collect();

        // 5. controller
        let outcome = self.controller.decide(tti, &totals)?;
        let num_rbs = self.grid.num_rbs();
        let granted: u32 = outcome.decision.grants.iter().map(|g| g.grant_rbs).sum();
        if granted > num_rbs {
            return Err(self.violation(format!("grants sum {granted} > {num_rbs}")));
        }

        // 6. per-tenant scheduling
        let mut lists: Vec<ScheduleList> = Vec::with_capacity(self.schedulers.len());
        for (sched, grant) in self.schedulers.iter_mut().zip(&outcome.decision.grants) {
            let list = sched.schedule(level, &snapshots[&sched.tenant()], grant.grant_rbs);
            lists.push(list);
        }
        for (list, grant) in lists.iter().zip(&outcome.decision.grants) {
            if list.total_rbs() > grant.grant_rbs {
                return Err(self.violation(format!(
                    "tenant {} scheduled {} RBs on a grant of {}",
                    grant.tenant,
                    list.total_rbs(),
                    grant.grant_rbs
                )));
            }
        }

        // 7. transmission
        let mut map = self.grid.empty_map(tti);
        let mut served: BTreeMap<(TenantId, SubsliceId), u64> = BTreeMap::new();
        let mut delays: BTreeMap<(TenantId, SubsliceId), Vec<u64>> = BTreeMap::new();
        for (list, grant) in lists.iter().zip(&outcome.decision.grants) {
            let mut next_rb = grant.range.start;
            for entry in &list.entries {
                let pdus =
                    self.macs
                        .serve(list.tenant, entry.subslice, entry.ue, entry.budget_bits)?;
                let bits: u64 = pdus.iter().map(|p| p.size_bits).sum();
                if bits > entry.bits || bits != entry.budget_bits {
                    return Err(self.violation(format!(
                        "ue {} served {bits} bits on a budget of {} (capacity {})",
                        entry.ue, entry.budget_bits, entry.bits
                    )));
                }
                let owner = Owner {
                    tenant: list.tenant,
                    subslice: entry.subslice,
                    ue: entry.ue,
                };
                if let Err(e) = map.assign_range(owner, next_rb, entry.rb_count) {
                    return Err(self.violation(e.to_string()));
                }
                next_rb += entry.rb_count;
                let key = (list.tenant, entry.subslice);
                *served.entry(key).or_default() += bits;
                let sink = delays.entry(key).or_default();
                for c in pdus.iter().flat_map(|p| &p.carried).filter(|c| c.completes) {
                    sink.push(tti - c.sdu.arrival_tti + 1);
                }
            }
        }

        // 8. record
        let mut tenants = Vec::with_capacity(self.tenants.len());
        let mut subslices = Vec::new();
        for (i, grant) in outcome.decision.grants.iter().enumerate() {
            let list = &lists[i];
            tenants.push(TenantRecord {
                tenant: grant.tenant,
                demand_rbs: reports[i].total_demand_rbs,
                effective_demand_rbs: outcome.effective_demands[i],
                dedicated_rbs: self.dedicated[i],
                grant_rbs: grant.grant_rbs,
                range: grant.range,
                scheduled_rbs: list.total_rbs(),
            });
            for d in &reports[i].subslices {
                let key = (grant.tenant, d.subslice);
                let eligible = entitled[i]
                    .subslice(d.subslice)
                    .map_or(d.eligible_bits, |e| e.eligible_bits);
                subslices.push(SubsliceRecord {
                    tenant: grant.tenant,
                    subslice: d.subslice,
                    gbr: d.gbr,
                    demand_rbs: d.demand_rbs,
                    eligible_bits: eligible,
                    granted_rbs: list.rbs_for(d.subslice),
                    served_bits: served.get(&key).copied().unwrap_or(0),
                    delivered_bits: delivered.get(&key).copied().unwrap_or(0),
                    backlog_bits: self.macs.backlog_bits(grant.tenant, d.subslice)?,
                    gbr_credit_bits: self.schedulers[i]
                        .bucket(d.subslice)
                        .map(|b| b.credit_bits()),
                    delays_ms: delays.remove(&key).unwrap_or_default(),
                });
            }
        }
        let used_rbs = map.assigned_count();
        let record = MetricsRecord {
            tti,
            num_rbs,
            tenants,
            subslices,
            used_rbs,
            utilization: map.utilization(),
            misrouted_sdus: self.macs.misrouted_sdus(),
        };
        self.clock += 1;
        Ok(record)
    }

    /// Bit ledger of every (tenant, sub-slice, UE) queue with its backlog.
    pub fn ledgers(&self) -> Vec<QueueLedger> {
        self.macs
            .iter_queues()
            .map(|(tenant, subslice, ue, q)| QueueLedger {
                tenant,
                subslice,
                ue,
                ledger: q.ledger(),
                backlog_bits: q.backlog_bits(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueLedger {
    pub tenant: TenantId,
    pub subslice: SubsliceId,
    pub ue: UeId,
    pub ledger: BitLedger,
    pub backlog_bits: u64,
}

impl QueueLedger {
    /// delivered = served + backlog + dropped
    pub fn conserved(&self) -> bool {
        self.ledger.delivered_bits
            == self.ledger.served_bits + self.backlog_bits + self.ledger.dropped_bits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<MetricsRecord>,
    pub summary: Summary,
    pub ledgers: Vec<QueueLedger>,
}

/// Runs `duration_ttis` steps of `scenario` under `seed`.
pub fn run(scenario: &Scenario, seed: u64, duration_ttis: u64) -> Result<RunResult, EngineError> {
    let mut sim = Simulation::new(scenario, seed)?;
    let mut records = Vec::with_capacity(duration_ttis as usize);
    for _ in 0..duration_ttis {
        records.push(sim.step_tti()?);
    }
    let summary = summarize(
        &records,
        RunInfo {
            seed,
            policy: scenario.policy,
        },
    );
    Ok(RunResult {
        records,
        summary,
        ledgers: sim.ledgers(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunInfo {
    pub seed: u64,
    pub policy: SharingPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsliceSummary {
    pub tenant: TenantId,
    pub subslice: SubsliceId,
    pub gbr: bool,
    pub served_bits: u64,
    pub delivered_bits: u64,
    pub throughput_bps: f64,
    pub completed_sdus: u64,
    pub mean_delay_ms: Option<f64>,
    pub p95_delay_ms: Option<f64>,
    /// Fraction of TTIs with eligible bits in which all of them were served.
    /// Only for GBR sub-slices that had eligible bits at least once.
    pub gbr_satisfaction: Option<f64>,
    pub mean_grant_rbs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TenantSummary {
    pub tenant: TenantId,
    pub mean_demand_rbs: f64,
    pub mean_grant_rbs: f64,
    pub mean_scheduled_rbs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub served_bits: u64,
    pub throughput_bps: f64,
    pub mean_utilization: f64,
    pub mean_used_rbs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total_ttis: u64,
    pub seed: u64,
    pub policy: SharingPolicy,
    pub subslices: Vec<SubsliceSummary>,
    pub tenants: Vec<TenantSummary>,
    pub cell: CellSummary,
}

impl Summary {
    pub fn subslice(&self, tenant: TenantId, subslice: SubsliceId) -> Option<&SubsliceSummary> {
        self.subslices
            .iter()
            .find(|s| s.tenant == tenant && s.subslice == subslice)
    }

    pub fn tenant(&self, tenant: TenantId) -> Option<&TenantSummary> {
        self.tenants.iter().find(|t| t.tenant == tenant)
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn nearest_rank(sorted: &[u64], percent: u64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (percent * sorted.len() as u64).div_ceil(100).max(1);
    Some(sorted[rank as usize - 1])
}

/// Aggregates a run's records. Depends on nothing but the records.
pub fn summarize(records: &[MetricsRecord], info: RunInfo) -> Summary {
    let ttis = records.len() as u64;
    let seconds = ttis as f64 / 1000.0;
    let mean = |sum: f64| if ttis == 0 { 0.0 } else { sum / ttis as f64 };

    #[derive(Default)]
    struct Acc {
        gbr: bool,
        served: u64,
        delivered: u64,
        granted: u64,
        delays: Vec<u64>,
        eligible_ttis: u64,
        satisfied_ttis: u64,
    }
    let mut subs: BTreeMap<(TenantId, SubsliceId), Acc> = BTreeMap::new();
    let mut tenants: BTreeMap<TenantId, (u64, u64, u64)> = BTreeMap::new();
    let mut used_rbs = 0u64;
    let mut utilization = 0.0;
    for r in records {
        used_rbs += u64::from(r.used_rbs);
        utilization += r.utilization;
        for t in &r.tenants {
            let acc = tenants.entry(t.tenant).or_default();
            acc.0 += u64::from(t.demand_rbs);
            acc.1 += u64::from(t.grant_rbs);
            acc.2 += u64::from(t.scheduled_rbs);
        }
        for s in &r.subslices {
            let acc = subs.entry((s.tenant, s.subslice)).or_default();
            acc.gbr = s.gbr;
            acc.served += s.served_bits;
            acc.delivered += s.delivered_bits;
            acc.granted += u64::from(s.granted_rbs);
            acc.delays.extend_from_slice(&s.delays_ms);
            if s.gbr && s.eligible_bits > 0 {
                acc.eligible_ttis += 1;
                if s.served_bits >= s.eligible_bits {
                    acc.satisfied_ttis += 1;
                }
            }
        }
    }

    let subslices = subs
        .into_iter()
        .map(|((tenant, subslice), mut acc)| {
            acc.delays.sort_unstable();
            let n = acc.delays.len() as u64;
            SubsliceSummary {
                tenant,
                subslice,
                gbr: acc.gbr,
                served_bits: acc.served,
                delivered_bits: acc.delivered,
                throughput_bps: if ttis == 0 {
                    0.0
                } else {
                    acc.served as f64 / seconds
                },
                completed_sdus: n,
                mean_delay_ms: (n > 0).then(|| acc.delays.iter().sum::<u64>() as f64 / n as f64),
                p95_delay_ms: nearest_rank(&acc.delays, 95).map(|v| v as f64),
                gbr_satisfaction: (acc.gbr && acc.eligible_ttis > 0)
                    .then(|| acc.satisfied_ttis as f64 / acc.eligible_ttis as f64),
                mean_grant_rbs: mean(acc.granted as f64),
            }
        })
        .collect::<Vec<_>>();
    let served_bits = subslices.iter().map(|s| s.served_bits).sum();
    Summary {
        total_ttis: ttis,
        seed: info.seed,
        policy: info.policy,
        tenants: tenants
            .into_iter()
            .map(|(tenant, (d, g, s))| TenantSummary {
                tenant,
                mean_demand_rbs: mean(d as f64),
                mean_grant_rbs: mean(g as f64),
                mean_scheduled_rbs: mean(s as f64),
            })
            .collect(),
        cell: CellSummary {
            served_bits,
            throughput_bps: if ttis == 0 {
                0.0
            } else {
                served_bits as f64 / seconds
            },
            mean_utilization: mean(utilization),
            mean_used_rbs: mean(used_rbs as f64),
        },
        subslices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_scenario;
    use crate::scenario::parse_scenario_str;

    fn scenario(text: &str) -> Scenario {
        validate_scenario(&parse_scenario_str(text).unwrap()).unwrap()
    }

    const ONE_UE: &str = r#"
        [cell]
        num_rbs = 25
        [[tenant]]
        id = 1
        dedicated_rbs = 25
        [[tenant.subslice]]
        id = 1
        class = "non-gbr"
        [[ue]]
        id = 1
        tenant = 1
        subslice = 1
        traffic = { model = "full-buffer", target_backlog_bits = 1000000 }
        channel = { model = "fixed", cqi = 15 }
    "#;

    #[test]
    fn zero_traffic_records_zeros() {
        let s = scenario(&ONE_UE.replace("start", "").replace(
            "channel = { model = \"fixed\", cqi = 15 }",
            "channel = { model = \"fixed\", cqi = 15 }\nstart_tti = 1000000",
        ));
        let out = run(&s, 1, 10).unwrap();
        for r in &out.records {
            assert_eq!(r.utilization, 0.0);
            assert_eq!(r.used_rbs, 0);
            assert!(r
                .subslices
                .iter()
                .all(|x| x.served_bits == 0 && x.granted_rbs == 0));
            assert!(r.tenants.iter().all(|t| t.grant_rbs == 0));
        }
        assert_eq!(out.summary.cell.throughput_bps, 0.0);
        assert_eq!(out.summary.subslices[0].mean_delay_ms, None);
        assert_eq!(out.summary.subslices[0].p95_delay_ms, None);
    }

    #[test]
    fn full_buffer_cqi15_closed_form() {
        let s = scenario(ONE_UE);
        let out = run(&s, 1, 10_000).unwrap();
        // 25 RBs * 933 bits * 1000 TTI/s
        assert_eq!(out.summary.cell.throughput_bps, 23_325_000.0);
        assert_eq!(out.summary.cell.mean_utilization, 1.0);
    }

    #[test]
    fn duration_zero_is_empty() {
        let out = run(&scenario(ONE_UE), 1, 0).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.summary.total_ttis, 0);
        assert!(out.summary.subslices.is_empty());
        assert!(out.summary.tenants.is_empty());
    }

    #[test]
    fn same_tti_service_has_one_ms_delay() {
        let s = scenario(&ONE_UE.replace(
            "{ model = \"full-buffer\", target_backlog_bits = 1000000 }",
            "{ model = \"cbr-video\", rate_bps = 100000 }",
        ));
        let out = run(&s, 1, 100).unwrap();
        // 3,300-bit frames fit in 25 RBs at CQI 15
        assert_eq!(out.records[0].subslices[0].delays_ms, vec![1]);
        assert_eq!(out.summary.subslices[0].mean_delay_ms, Some(1.0));
    }

    #[test]
    fn runs_are_deterministic() {
        let text = ONE_UE.replace(
            "{ model = \"fixed\", cqi = 15 }",
            "{ model = \"random-walk\", start_cqi = 8, step_period_ttis = 3 }",
        );
        let s = scenario(&text);
        assert_eq!(run(&s, 9, 2000).unwrap(), run(&s, 9, 2000).unwrap());
        assert_ne!(
            run(&s, 9, 2000).unwrap().records,
            run(&s, 10, 2000).unwrap().records
        );
    }

    #[test]
    fn nearest_rank_percentiles() {
        assert_eq!(nearest_rank(&[], 95), None);
        assert_eq!(nearest_rank(&[4], 95), Some(4));
        let v: Vec<u64> = (1..=20).collect();
        assert_eq!(nearest_rank(&v, 95), Some(19));
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(nearest_rank(&v, 95), Some(95));
    }

    #[test]
    fn summarize_throughput_is_bits_over_seconds() {
        let mk = |tti, served| MetricsRecord {
            tti,
            num_rbs: 25,
            tenants: vec![],
            subslices: vec![SubsliceRecord {
                tenant: TenantId(1),
                subslice: SubsliceId(1),
                gbr: false,
                demand_rbs: 0,
                eligible_bits: 0,
                granted_rbs: 0,
                served_bits: served,
                delivered_bits: served,
                backlog_bits: 0,
                gbr_credit_bits: None,
                delays_ms: vec![],
            }],
            used_rbs: 0,
            utilization: 0.0,
            misrouted_sdus: 0,
        };
        // 10 s serving 160,000 bits
        let records: Vec<_> = (0..10_000)
            .map(|t| mk(t, if t % 10 == 0 { 160 } else { 0 }))
            .collect();
        let s = summarize(
            &records,
            RunInfo {
                seed: 1,
                policy: SharingPolicy::default(),
            },
        );
        assert_eq!(s.subslices[0].served_bits, 160_000);
        assert_eq!(s.subslices[0].throughput_bps, 16_000.0);
    }

    #[test]
    fn gbr_satisfaction_counts_fully_served_ttis() {
        let mk = |eligible, served| SubsliceRecord {
            tenant: TenantId(1),
            subslice: SubsliceId(1),
            gbr: true,
            demand_rbs: 0,
            eligible_bits: eligible,
            granted_rbs: 0,
            served_bits: served,
            delivered_bits: 0,
            backlog_bits: 0,
            gbr_credit_bits: Some(0),
            delays_ms: vec![],
        };
        let records: Vec<_> = [(0, 0), (320, 320), (320, 100), (16, 16)]
            .into_iter()
            .enumerate()
            .map(|(t, (e, s))| MetricsRecord {
                tti: t as u64,
                num_rbs: 6,
                tenants: vec![],
                subslices: vec![mk(e, s)],
                used_rbs: 0,
                utilization: 0.0,
                misrouted_sdus: 0,
            })
            .collect();
        let s = summarize(
            &records,
            RunInfo {
                seed: 1,
                policy: SharingPolicy::default(),
            },
        );
        assert_eq!(s.subslices[0].gbr_satisfaction, Some(2.0 / 3.0));
    }
}
