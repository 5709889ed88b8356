//! Two-level RAN slicing simulator.
//!
//! A cell's resource blocks are split among tenants each TTI by a sharing
//! controller; each tenant's MAC then divides its grant among sub-slices
//! (GBR first, weighted non-GBR after) and UEs.

pub mod controller;
pub mod engine;
pub mod grid;
pub mod model;
pub mod output;
pub mod scenario;
pub mod scheduler;
pub mod stack;
pub mod traffic;

pub use controller::{
    apportion, assign_ranges, Controller, ControllerError, RbRange, SharingDecision, SharingMode,
    SharingPolicy, SlicingLevel, TenantGrant, POLICY_NAMES,
};
pub use engine::{
    run, summarize, EngineError, MetricsRecord, RunInfo, RunResult, Simulation, Summary,
};
pub use grid::{bits_per_rb, GridError, Owner, RbMap, ResourceGrid};
pub use model::{
    validate_scenario, Scenario, ServiceClass, SubsliceConfig, SubsliceId, TenantConfig, TenantId,
    UeConfig, UeId, ValidationError, ValidationErrors,
};
pub use output::OutputError;
pub use scenario::{parse_scenario, parse_scenario_str, ParseError, ScenarioFile};
pub use scheduler::{
    DemandReport, GbrBucket, ScheduleEntry, ScheduleList, TenantScheduler, UeSnapshot,
};
pub use stack::{MacArray, Pdu, Sdu};
pub use traffic::{CqiModel, TrafficModel};

/// Parses and validates a scenario file in one step.
pub fn load_scenario(path: impl AsRef<std::path::Path>) -> Result<Scenario, ParseError> {
    let file = parse_scenario(path)?;
    validate_scenario(&file).map_err(ParseError::Schema)
}
