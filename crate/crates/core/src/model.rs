//! Scenario object model: tenants, their sub-slices, and UEs, plus the
//! registry the slice coordinator uses to route a destination UE to its
//! tenant MAC and sub-slice.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::SharingPolicy;
use crate::grid::{GridError, ResourceGrid, VALID_NUM_RBS};
use crate::scenario::{self, ScenarioFile};
use crate::traffic::{CqiModel, TrafficModel};

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_newtype!(
    /// Operator sharing the cell.
    TenantId
);
id_newtype!(
    /// Sub-slice id, unique within its tenant.
    SubsliceId
);
id_newtype!(
    /// Globally unique UE id.
    UeId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServiceClass {
    Gbr { gbr_bps: u64 },
    NonGbr { weight: u32 },
}

impl ServiceClass {
    pub fn is_gbr(&self) -> bool {
        matches!(self, ServiceClass::Gbr { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsliceConfig {
    pub id: SubsliceId,
    pub name: String,
    pub class: ServiceClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantConfig {
    pub id: TenantId,
    pub name: String,
    pub dedicated_rbs: u32,
    /// Sorted by id.
    pub subslices: Vec<SubsliceConfig>,
}

impl TenantConfig {
    pub fn subslice(&self, id: SubsliceId) -> Option<&SubsliceConfig> {
        self.subslices.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeConfig {
    pub id: UeId,
    pub tenant: TenantId,
    pub subslice: SubsliceId,
    pub traffic: TrafficModel,
    pub channel: CqiModel,
    /// First TTI the UE generates traffic.
    pub start_tti: u64,
    /// TTI from which the UE stops generating traffic (exclusive end).
    pub stop_tti: Option<u64>,
}

/// A validated scenario. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: ResourceGrid,
    pub duration_ttis: u64,
    pub seed: u64,
    pub policy: SharingPolicy,
    /// Sorted by id.
    pub tenants: Vec<TenantConfig>,
    /// Sorted by id.
    pub ues: Vec<UeConfig>,
}

impl Scenario {
    pub fn tenant(&self, id: TenantId) -> Option<&TenantConfig> {
        self.tenants.iter().find(|t| t.id == id)
    }

    pub fn registry(&self) -> Registry {
        Registry::from_ues(&self.ues)
    }

    pub fn with_policy(&self, policy: SharingPolicy) -> Self {
        Self {
            policy,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no route for ue {0}")]
pub struct RoutingError(pub UeId);

/// Exact lookup from destination UE to (tenant, sub-slice).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    routes: BTreeMap<UeId, (TenantId, SubsliceId)>,
}

impl Registry {
    pub fn from_ues(ues: &[UeConfig]) -> Self {
        Self {
            routes: ues.iter().map(|u| (u.id, (u.tenant, u.subslice))).collect(),
        }
    }

    pub fn insert(&mut self, ue: UeId, tenant: TenantId, subslice: SubsliceId) {
        self.routes.insert(ue, (tenant, subslice));
    }

    pub fn classify(&self, ue: UeId) -> Result<(TenantId, SubsliceId), RoutingError> {
        self.routes.get(&ue).copied().ok_or(RoutingError(ue))
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }
}

/// One scenario violation, located by its config key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub(crate) fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every violation found in a scenario, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Checks every invariant of a raw scenario and builds the validated model.
/// All violations are collected; none short-circuits the others.
pub fn validate_scenario(file: &ScenarioFile) -> Result<Scenario, ValidationErrors> {
    let mut errors = scenario::schema_errors(file);

    let num_rbs = file.cell.as_ref().and_then(|c| c.num_rbs);
    let grid = match num_rbs.map(ResourceGrid::new) {
        Some(Ok(grid)) => Some(grid),
        Some(Err(GridError::InvalidNumRbs(n))) => {
            errors.push(ValidationError::new(
                "cell.num_rbs",
                format!("{n} is not one of {VALID_NUM_RBS:?}"),
            ));
            None
        }
        _ => None,
    };

    let policy = scenario::resolve_policy(file.policy.as_ref()).ok();
    if let Some(period) = file.policy.as_ref().and_then(|p| p.decision_period) {
        if period == 0 {
            errors.push(ValidationError::new(
                "policy.decision_period",
                "must be at least 1",
            ));
        }
    }

    if file.tenants.is_empty() {
        errors.push(ValidationError::new(
            "tenant",
            "at least one tenant is required",
        ));
    }

    let mut tenants = Vec::new();
    let mut tenant_paths: BTreeMap<u32, String> = BTreeMap::new();
    let mut dedicated_sum: u64 = 0;
    let mut dedicated_complete = true;
    for (ti, t) in file.tenants.iter().enumerate() {
        let path = format!("tenant[{ti}]");
        if let Some(id) = t.id {
            if let Some(first) = tenant_paths.get(&id) {
                errors.push(ValidationError::new(
                    format!("{path}.id"),
                    format!("duplicate tenant id {id} (first defined at {first})"),
                ));
            } else {
                tenant_paths.insert(id, path.clone());
            }
        }
        match t.dedicated_rbs {
            Some(d) => dedicated_sum += u64::from(d),
            None => dedicated_complete = false,
        }
        if t.subslices.is_empty() {
            errors.push(ValidationError::new(
                format!("{path}.subslice"),
                "at least one subslice is required",
            ));
        }

        let mut subslices = Vec::new();
        let mut seen = BTreeMap::new();
        for (si, s) in t.subslices.iter().enumerate() {
            let spath = format!("{path}.subslice[{si}]");
            if let Some(id) = s.id {
                if let Some(first) = seen.insert(id, spath.clone()) {
                    errors.push(ValidationError::new(
                        format!("{spath}.id"),
                        format!("duplicate subslice id {id} (first defined at {first})"),
                    ));
                }
            }
            let class = match s.class.as_deref().map(scenario::parse_class) {
                Some(Ok(true)) => match s.gbr_bps {
                    Some(0) => {
                        errors.push(ValidationError::new(
                            format!("{spath}.gbr_bps"),
                            "must be positive for a gbr subslice",
                        ));
                        None
                    }
                    Some(gbr_bps) => Some(ServiceClass::Gbr { gbr_bps }),
                    None => {
                        errors.push(ValidationError::new(
                            format!("{spath}.gbr_bps"),
                            "required for a gbr subslice",
                        ));
                        None
                    }
                },
                Some(Ok(false)) => match s.weight.unwrap_or(1) {
                    0 => {
                        errors.push(ValidationError::new(
                            format!("{spath}.weight"),
                            "must be at least 1",
                        ));
                        None
                    }
                    weight => Some(ServiceClass::NonGbr { weight }),
                },
                _ => None,
            };
            if let (Some(id), Some(class)) = (s.id, class) {
                subslices.push(SubsliceConfig {
                    id: SubsliceId(id),
                    name: s.name.clone().unwrap_or_else(|| format!("subslice-{id}")),
                    class,
                });
            }
        }
        subslices.sort_by_key(|s| s.id);

        if let (Some(id), Some(dedicated_rbs)) = (t.id, t.dedicated_rbs) {
            tenants.push(TenantConfig {
                id: TenantId(id),
                name: t.name.clone().unwrap_or_else(|| format!("tenant-{id}")),
                dedicated_rbs,
                subslices,
            });
        }
    }
    tenants.sort_by_key(|t| t.id);
    tenants.dedup_by_key(|t| t.id);

    if let (Some(n), true) = (num_rbs, dedicated_complete && !file.tenants.is_empty()) {
        if dedicated_sum != u64::from(n) {
            errors.push(ValidationError::new(
                "tenant",
                format!("dedicated shares sum {dedicated_sum} \u{2260} {n}"),
            ));
        }
    }

    let mut ues = Vec::new();
    let mut ue_paths: BTreeMap<u32, String> = BTreeMap::new();
    for (ui, u) in file.ues.iter().enumerate() {
        let path = format!("ue[{ui}]");
        if let Some(id) = u.id {
            if let Some(first) = ue_paths.get(&id) {
                errors.push(ValidationError::new(
                    format!("{path}.id"),
                    format!("duplicate ue_id {id} (first defined at {first}, again at {path})"),
                ));
            } else {
                ue_paths.insert(id, path.clone());
            }
        }
        let mut routed = true;
        if let Some(tid) = u.tenant {
            match tenants.iter().find(|t| t.id == TenantId(tid)) {
                None => {
                    routed = false;
                    errors.push(ValidationError::new(
                        format!("{path}.tenant"),
                        format!("unknown tenant {tid}"),
                    ));
                }
                Some(t) => {
                    if let Some(sid) = u.subslice {
                        let declared = file
                            .tenants
                            .iter()
                            .filter(|raw| raw.id == Some(tid))
                            .flat_map(|raw| raw.subslices.iter())
                            .any(|s| s.id == Some(sid));
                        if !declared {
                            routed = false;
                            errors.push(ValidationError::new(
                                format!("{path}.subslice"),
                                format!("unknown subslice {sid} in tenant {}", t.id),
                            ));
                        }
                    }
                }
            }
        }
        if let Some(traffic) = &u.traffic {
            for msg in traffic.violations() {
                errors.push(ValidationError::new(format!("{path}.traffic"), msg));
            }
        }
        if let Some(channel) = &u.channel {
            for msg in channel.violations() {
                errors.push(ValidationError::new(format!("{path}.channel"), msg));
            }
        }
        let start_tti = u.start_tti.unwrap_or(0);
        if let Some(stop) = u.stop_tti {
            if stop < start_tti {
                errors.push(ValidationError::new(
                    format!("{path}.stop_tti"),
                    format!("stop_tti {stop} precedes start_tti {start_tti}"),
                ));
            }
        }
        if let (Some(id), Some(tenant), Some(subslice), Some(traffic), Some(channel), true) =
            (u.id, u.tenant, u.subslice, u.traffic, u.channel, routed)
        {
            ues.push(UeConfig {
                id: UeId(id),
                tenant: TenantId(tenant),
                subslice: SubsliceId(subslice),
                traffic,
                channel,
                start_tti,
                stop_tti: u.stop_tti,
            });
        }
    }
    ues.sort_by_key(|u| u.id);

    match (errors.is_empty(), grid, policy) {
        (true, Some(grid), Some(policy)) => {
            let sim = file.sim.as_ref();
            Ok(Scenario {
                grid,
                duration_ttis: sim
                    .and_then(|s| s.duration_ttis)
                    .unwrap_or(scenario::DEFAULT_DURATION_TTIS),
                seed: sim.and_then(|s| s.seed).unwrap_or(scenario::DEFAULT_SEED),
                policy,
                tenants,
                ues,
            })
        }
        _ => {
            // Unreachable in practice: a missing grid or policy always leaves an error behind.
            if errors.is_empty() {
                errors.push(ValidationError::new("cell.num_rbs", "required"));
            }
            Err(ValidationErrors(errors))
        }
    }
}

/// Sub-slices declared by the scenario, in (tenant, subslice) order.
pub fn subslice_keys(scenario: &Scenario) -> Vec<(TenantId, SubsliceId)> {
    scenario
        .tenants
        .iter()
        .flat_map(|t| t.subslices.iter().map(move |s| (t.id, s.id)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario_str;

    const TWO_TENANTS: &str = r#"
        [cell]
        num_rbs = 25

        [[tenant]]
        id = 1
        dedicated_rbs = 13
        [[tenant.subslice]]
        id = 1
        class = "gbr"
        gbr_bps = 16000
        [[tenant.subslice]]
        id = 2
        class = "non-gbr"
        weight = 1

        [[tenant]]
        id = 2
        dedicated_rbs = 12
        [[tenant.subslice]]
        id = 1
        class = "non-gbr"

        [[ue]]
        id = 7
        tenant = 1
        subslice = 2
        traffic = { model = "full-buffer", target_backlog_bits = 100000 }
        channel = { model = "fixed", cqi = 7 }

        [[ue]]
        id = 8
        tenant = 2
        subslice = 1
        traffic = { model = "full-buffer", target_backlog_bits = 100000 }
        channel = { model = "fixed", cqi = 7 }
    "#;

    fn messages(text: &str) -> Vec<String> {
        let file = parse_scenario_str(text).expect("parses");
        match validate_scenario(&file) {
            Ok(_) => vec![],
            Err(e) => e.0.iter().map(ToString::to_string).collect(),
        }
    }

    #[test]
    fn two_tenants_summing_to_grid_is_valid() {
        let file = parse_scenario_str(TWO_TENANTS).unwrap();
        let scenario = validate_scenario(&file).unwrap();
        assert_eq!(scenario.tenants.len(), 2);
        assert_eq!(
            scenario.tenants[0].dedicated_rbs + scenario.tenants[1].dedicated_rbs,
            25
        );
        assert_eq!(scenario.grid.num_rbs(), 25);
    }

    #[test]
    fn dedicated_sum_mismatch_is_reported() {
        let text = TWO_TENANTS.replace("dedicated_rbs = 12", "dedicated_rbs = 13");
        let msgs = messages(&text);
        assert_eq!(
            msgs,
            vec!["tenant: dedicated shares sum 26 \u{2260} 25".to_string()]
        );
    }

    #[test]
    fn duplicate_ue_names_both_definitions() {
        let text = TWO_TENANTS.replace("id = 8", "id = 7");
        let msgs = messages(&text);
        assert_eq!(msgs.len(), 1, "{msgs:?}");
        assert!(msgs[0].contains("duplicate ue_id 7"), "{}", msgs[0]);
        assert!(
            msgs[0].contains("ue[0]") && msgs[0].contains("ue[1]"),
            "{}",
            msgs[0]
        );
    }

    #[test]
    fn every_violation_is_reported_individually() {
        let text = TWO_TENANTS
            .replace("gbr_bps = 16000", "")
            .replace("tenant = 2\n", "tenant = 9\n")
            .replace("dedicated_rbs = 12", "dedicated_rbs = 11");
        let msgs = messages(&text);
        assert_eq!(msgs.len(), 3, "{msgs:?}");
        assert!(msgs
            .iter()
            .any(|m| m.starts_with("tenant[0].subslice[0].gbr_bps: required")));
        assert!(msgs
            .iter()
            .any(|m| m.starts_with("ue[1].tenant: unknown tenant 9")));
        assert!(msgs.iter().any(|m| m.contains("dedicated shares sum 24")));
    }

    #[test]
    fn unknown_subslice_reference() {
        let text = TWO_TENANTS.replace("subslice = 2", "subslice = 5");
        let msgs = messages(&text);
        assert_eq!(
            msgs,
            vec!["ue[0].subslice: unknown subslice 5 in tenant 1".to_string()]
        );
    }

    #[test]
    fn validation_is_idempotent() {
        let file = parse_scenario_str(TWO_TENANTS).unwrap();
        let once = validate_scenario(&file).unwrap();
        let twice = validate_scenario(&scenario::to_file(&once)).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn classify_routes_exactly() {
        let mut reg = Registry::default();
        reg.insert(UeId(7), TenantId(1), SubsliceId(2));
        assert_eq!(reg.classify(UeId(7)), Ok((TenantId(1), SubsliceId(2))));
        assert_eq!(reg.classify(UeId(9)), Err(RoutingError(UeId(9))));
    }

    #[test]
    fn classify_single_target() {
        let file = parse_scenario_str(TWO_TENANTS).unwrap();
        let scenario = validate_scenario(&file).unwrap();
        let reg = scenario.registry();
        assert_eq!(reg.len(), 2);
        for ue in &scenario.ues {
            assert_eq!(reg.classify(ue.id), Ok((ue.tenant, ue.subslice)));
        }
    }
}
