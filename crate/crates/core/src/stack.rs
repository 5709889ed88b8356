//! Downlink packet path below PDCP: the slice coordinator routes each SDU to
//! its tenant MAC and sub-slice queue, and RLC segments it only when the MAC
//! serves a budget that ends inside it (unacknowledged, lossless).

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::model::{Registry, RoutingError, SubsliceId, TenantId, UeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sdu {
    pub ue: UeId,
    pub size_bits: u64,
    pub arrival_tti: u64,
}

/// Arrival-ordered SDU handle; ids increase with delivery order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SduRef {
    pub id: u64,
    pub arrival_tti: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub sdu: SduRef,
    pub size_bits: u64,
    pub is_last: bool,
}

/// Bits of one SDU carried in a PDU. `completes` is set when these are the
/// SDU's final bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Carried {
    pub sdu: SduRef,
    pub bits: u64,
    pub completes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdu {
    pub ue: UeId,
    pub size_bits: u64,
    pub carried: Vec<Carried>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StackError {
    #[error("unknown tenant {0}")]
    UnknownTenant(TenantId),
    #[error("unknown subslice {subslice} in tenant {tenant}")]
    UnknownSubslice {
        tenant: TenantId,
        subslice: SubsliceId,
    },
    #[error("ue {ue} is not in tenant {tenant} subslice {subslice}")]
    UnknownUe {
        tenant: TenantId,
        subslice: SubsliceId,
        ue: UeId,
    },
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enqueued {
    Queued {
        tenant: TenantId,
        subslice: SubsliceId,
        sdu: SduRef,
    },
    Misrouted,
}

/// Bit counters for one UE queue.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitLedger {
    pub delivered_bits: u64,
    pub served_bits: u64,
    pub dropped_bits: u64,
}

#[derive(Debug, Clone, Default)]
pub struct UeQueue {
    segments: VecDeque<Segment>,
    backlog_bits: u64,
    ledger: BitLedger,
}

impl UeQueue {
    pub fn backlog_bits(&self) -> u64 {
        self.backlog_bits
    }

    pub fn ledger(&self) -> BitLedger {
        self.ledger
    }

    pub fn head(&self) -> Option<&Segment> {
        self.segments.front()
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter()
    }

    fn push(&mut self, sdu: SduRef, size_bits: u64) {
        self.segments.push_back(Segment {
            sdu,
            size_bits,
            is_last: true,
        });
        self.backlog_bits += size_bits;
        self.ledger.delivered_bits += size_bits;
    }

    fn drain(&mut self, ue: UeId, budget_bits: u64) -> Vec<Pdu> {
        let mut left = budget_bits.min(self.backlog_bits);
        if left == 0 {
            return Vec::new();
        }
        let mut pdu = Pdu {
            ue,
            size_bits: left,
            carried: Vec::new(),
        };
        while left > 0 {
            let head = self
                .segments
                .front_mut()
                .expect("backlog accounts for segments");
            if head.size_bits <= left {
                let seg = self.segments.pop_front().expect("head exists");
                left -= seg.size_bits;
                pdu.carried.push(Carried {
                    sdu: seg.sdu,
                    bits: seg.size_bits,
                    completes: seg.is_last,
                });
            } else {
                head.size_bits -= left;
                pdu.carried.push(Carried {
                    sdu: head.sdu,
                    bits: left,
                    completes: false,
                });
                left = 0;
            }
        }
        self.backlog_bits -= pdu.size_bits;
        self.ledger.served_bits += pdu.size_bits;
        vec![pdu]
    }
}

/// Buffers of one tenant MAC, keyed by (sub-slice, UE).
#[derive(Debug, Clone, Default)]
pub struct MacBuffer {
    queues: BTreeMap<SubsliceId, BTreeMap<UeId, UeQueue>>,
}

impl MacBuffer {
    pub fn subslices(&self) -> impl Iterator<Item = SubsliceId> + '_ {
        self.queues.keys().copied()
    }

    pub fn queue(&self, subslice: SubsliceId, ue: UeId) -> Option<&UeQueue> {
        self.queues.get(&subslice)?.get(&ue)
    }

    pub fn queues(&self, subslice: SubsliceId) -> impl Iterator<Item = (UeId, &UeQueue)> {
        self.queues
            .get(&subslice)
            .into_iter()
            .flat_map(|m| m.iter().map(|(ue, q)| (*ue, q)))
    }

    fn backlog_bits(&self, subslice: SubsliceId) -> Option<u64> {
        Some(
            self.queues
                .get(&subslice)?
                .values()
                .map(UeQueue::backlog_bits)
                .sum(),
        )
    }
}

/// The slice coordinator together with the array of per-tenant MAC buffers.
/// MACs never see each other; every operation addresses exactly one tenant.
#[derive(Debug, Clone)]
pub struct MacArray {
    registry: Registry,
    macs: BTreeMap<TenantId, MacBuffer>,
    next_sdu: u64,
    misrouted_sdus: u64,
    misrouted_bits: u64,
}

impl MacArray {
    /// Builds one MAC per tenant with an empty queue for every declared
    /// (sub-slice, UE) pair.
    pub fn new(
        registry: Registry,
        layout: impl IntoIterator<Item = (TenantId, SubsliceId, Option<UeId>)>,
    ) -> Self {
        let mut macs: BTreeMap<TenantId, MacBuffer> = BTreeMap::new();
        for (tenant, subslice, ue) in layout {
            let queues = macs
                .entry(tenant)
                .or_default()
                .queues
                .entry(subslice)
                .or_default();
            if let Some(ue) = ue {
                queues.entry(ue).or_default();
            }
        }
        Self {
            registry,
            macs,
            next_sdu: 0,
            misrouted_sdus: 0,
            misrouted_bits: 0,
        }
    }

    pub fn from_scenario(scenario: &crate::model::Scenario) -> Self {
        let subslices = scenario
            .tenants
            .iter()
            .flat_map(|t| t.subslices.iter().map(move |s| (t.id, s.id, None)));
        let ues = scenario
            .ues
            .iter()
            .map(|u| (u.tenant, u.subslice, Some(u.id)));
        Self::new(scenario.registry(), subslices.chain(ues))
    }

    pub fn mac(&self, tenant: TenantId) -> Option<&MacBuffer> {
        self.macs.get(&tenant)
    }

    /// Routes an SDU to its tenant MAC and sub-slice queue as one segment.
    /// Unroutable SDUs are dropped and counted.
    pub fn deliver(&mut self, sdu: Sdu) -> Enqueued {
        let (tenant, subslice) = match self.registry.classify(sdu.ue) {
            Ok(route) => route,
            Err(_) => return self.misroute(sdu),
        };
        let Some(queue) = self
            .macs
            .get_mut(&tenant)
            .and_then(|m| m.queues.get_mut(&subslice))
        else {
            return self.misroute(sdu);
        };
        let sdu_ref = SduRef {
            id: self.next_sdu,
            arrival_tti: sdu.arrival_tti,
        };
        self.next_sdu += 1;
        queue
            .entry(sdu.ue)
            .or_default()
            .push(sdu_ref, sdu.size_bits);
        Enqueued::Queued {
            tenant,
            subslice,
            sdu: sdu_ref,
        }
    }

    fn misroute(&mut self, sdu: Sdu) -> Enqueued {
        self.misrouted_sdus += 1;
        self.misrouted_bits += sdu.size_bits;
        Enqueued::Misrouted
    }

    pub fn misrouted_sdus(&self) -> u64 {
        self.misrouted_sdus
    }

    pub fn misrouted_bits(&self) -> u64 {
        self.misrouted_bits
    }

    pub fn backlog_bits(&self, tenant: TenantId, subslice: SubsliceId) -> Result<u64, StackError> {
        self.macs
            .get(&tenant)
            .ok_or(StackError::UnknownTenant(tenant))?
            .backlog_bits(subslice)
            .ok_or(StackError::UnknownSubslice { tenant, subslice })
    }

    pub fn ue_backlog_bits(
        &self,
        tenant: TenantId,
        subslice: SubsliceId,
        ue: UeId,
    ) -> Result<u64, StackError> {
        self.queue(tenant, subslice, ue).map(UeQueue::backlog_bits)
    }

    pub fn queue(
        &self,
        tenant: TenantId,
        subslice: SubsliceId,
        ue: UeId,
    ) -> Result<&UeQueue, StackError> {
        let mac = self
            .macs
            .get(&tenant)
            .ok_or(StackError::UnknownTenant(tenant))?;
        let queues = mac
            .queues
            .get(&subslice)
            .ok_or(StackError::UnknownSubslice { tenant, subslice })?;
        queues.get(&ue).ok_or(StackError::UnknownUe {
            tenant,
            subslice,
            ue,
        })
    }

    /// Drains head-of-line bits FIFO up to `budget_bits`, splitting the
    /// segment the budget ends inside.
    pub fn serve(
        &mut self,
        tenant: TenantId,
        subslice: SubsliceId,
        ue: UeId,
        budget_bits: u64,
    ) -> Result<Vec<Pdu>, StackError> {
        let mac = self
            .macs
            .get_mut(&tenant)
            .ok_or(StackError::UnknownTenant(tenant))?;
        let queues = mac
            .queues
            .get_mut(&subslice)
            .ok_or(StackError::UnknownSubslice { tenant, subslice })?;
        let queue = queues.get_mut(&ue).ok_or(StackError::UnknownUe {
            tenant,
            subslice,
            ue,
        })?;
        Ok(queue.drain(ue, budget_bits))
    }

    /// Every queue with its (tenant, sub-slice, UE) key, in key order.
    pub fn iter_queues(&self) -> impl Iterator<Item = (TenantId, SubsliceId, UeId, &UeQueue)> {
        self.macs.iter().flat_map(|(t, mac)| {
            mac.queues
                .iter()
                .flat_map(move |(s, qs)| qs.iter().map(move |(u, q)| (*t, *s, *u, q)))
        })
    }
}
