//! Scenario file format: sectioned TOML with repeated `[[tenant]]`,
//! `[[tenant.subslice]]` and `[[ue]]` blocks.
//!
//! ```toml
//! [cell]
//! num_rbs = 25
//!
//! [sim]
//! duration_ttis = 10000
//! seed = 1
//!
//! [policy]
//! mode = "shared"        # static | shared, or a full policy such as "shared-multi"
//! slicing = "multi"      # single | multi
//! decision_period = 1
//!
//! [[tenant]]
//! id = 1
//! dedicated_rbs = 25
//!
//! [[tenant.subslice]]
//! id = 1
//! class = "gbr"          # gbr | non-gbr
//! gbr_bps = 16000
//!
//! [[ue]]
//! id = 1
//! tenant = 1
//! subslice = 1
//! traffic = { model = "voip", on_mean_s = 1.0, off_mean_s = 1.0 }
//! channel = { model = "fixed", cqi = 7 }
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{SharingMode, SharingPolicy, SlicingLevel, POLICY_NAMES};
use crate::model::{Scenario, ServiceClass, ValidationError, ValidationErrors};
use crate::traffic::{CqiModel, TrafficModel};

pub const DEFAULT_DURATION_TTIS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySection>,
    #[serde(default, rename = "tenant", skip_serializing_if = "Vec::is_empty")]
    pub tenants: Vec<TenantSection>,
    #[serde(default, rename = "ue", skip_serializing_if = "Vec::is_empty")]
    pub ues: Vec<UeSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_rbs: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ttis: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slicing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_period: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TenantSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedicated_rbs: Option<u32>,
    #[serde(default, rename = "subslice", skip_serializing_if = "Vec::is_empty")]
    pub subslices: Vec<SubsliceSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsliceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbr_bps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tenant: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subslice: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_tti: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tti: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<CqiModel>,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{0}")]
    Schema(ValidationErrors),
}

/// Reads and parses a scenario file. Syntax and type errors name the key
/// path; missing required keys and unknown enumeration strings are all
/// reported together.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile, ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioFile, ParseError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().message().trim().to_string();
        ParseError::Field { path, message }
    })?;
    let errors = schema_errors(&file);
    if errors.is_empty() {
        Ok(file)
    } else {
        Err(ParseError::Schema(ValidationErrors(errors)))
    }
}

/// Missing required keys and unparseable enumeration strings.
pub(crate) fn schema_errors(file: &ScenarioFile) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    let mut require = |present: bool, path: String| {
        if !present {
            errors.push(ValidationError::new(path, "required"));
        }
    };
    require(
        file.cell.as_ref().and_then(|c| c.num_rbs).is_some(),
        "cell.num_rbs".into(),
    );
    for (ti, t) in file.tenants.iter().enumerate() {
        require(t.id.is_some(), format!("tenant[{ti}].id"));
        require(
            t.dedicated_rbs.is_some(),
            format!("tenant[{ti}].dedicated_rbs"),
        );
        for (si, s) in t.subslices.iter().enumerate() {
            require(s.id.is_some(), format!("tenant[{ti}].subslice[{si}].id"));
            require(
                s.class.is_some(),
                format!("tenant[{ti}].subslice[{si}].class"),
            );
        }
    }
    for (ui, u) in file.ues.iter().enumerate() {
        require(u.id.is_some(), format!("ue[{ui}].id"));
        require(u.tenant.is_some(), format!("ue[{ui}].tenant"));
        require(u.subslice.is_some(), format!("ue[{ui}].subslice"));
        require(u.traffic.is_some(), format!("ue[{ui}].traffic"));
        require(u.channel.is_some(), format!("ue[{ui}].channel"));
    }

    if let Err(e) = resolve_policy(file.policy.as_ref()) {
        errors.push(e);
    }
    for (ti, t) in file.tenants.iter().enumerate() {
        for (si, s) in t.subslices.iter().enumerate() {
            if let Some(Err(msg)) = s.class.as_deref().map(parse_class) {
                errors.push(ValidationError::new(
                    format!("tenant[{ti}].subslice[{si}].class"),
                    msg,
                ));
            }
        }
    }
    errors
}

/// `true` for GBR, `false` for non-GBR.
pub(crate) fn parse_class(s: &str) -> Result<bool, String> {
    match s {
        "gbr" => Ok(true),
        "non-gbr" | "nongbr" => Ok(false),
        other => Err(format!(
            "unknown service class \"{other}\"; expected \"gbr\" or \"non-gbr\""
        )),
    }
}

/// Resolves `[policy]` into a sharing policy. `mode` accepts either the
/// sharing mode alone (`static`, `shared`, combined with `slicing`) or one
/// of the full policy names.
pub(crate) fn resolve_policy(
    section: Option<&PolicySection>,
) -> Result<SharingPolicy, ValidationError> {
    let default = SharingPolicy::default();
    let Some(section) = section else {
        return Ok(default);
    };
    let slicing = match section.slicing.as_deref() {
        None => None,
        Some("single") => Some(SlicingLevel::Single),
        Some("multi") => Some(SlicingLevel::Multi),
        Some(other) => {
            return Err(ValidationError::new(
                "policy.slicing",
                format!("unknown slicing \"{other}\"; expected \"single\" or \"multi\""),
            ))
        }
    };
    let period = section.decision_period.unwrap_or(1);
    let (mode, slicing) = match section.mode.as_deref() {
        None => (default.mode, slicing.unwrap_or(default.slicing)),
        Some("static") => (SharingMode::Static, slicing.unwrap_or(SlicingLevel::Multi)),
        Some("shared") => (SharingMode::Shared, slicing.unwrap_or(SlicingLevel::Multi)),
        Some(name) => match name.parse::<SharingPolicy>() {
            Ok(p) => {
                if slicing.is_some_and(|s| s != p.slicing) {
                    return Err(ValidationError::new(
                        "policy.slicing",
                        format!("conflicts with policy.mode \"{name}\""),
                    ));
                }
                (p.mode, p.slicing)
            }
            Err(_) => {
                return Err(ValidationError::new(
                    "policy.mode",
                    format!(
                        "unknown policy \"{name}\"; expected one of {} (or \"static\"/\"shared\" with policy.slicing)",
                        POLICY_NAMES.join(", ")
                    ),
                ))
            }
        },
    };
    Ok(SharingPolicy {
        mode,
        slicing,
        decision_period_ttis: period,
    })
}

/// Writes a validated scenario back into file form; validating the result
/// yields the same scenario.
pub fn to_file(scenario: &Scenario) -> ScenarioFile {
    ScenarioFile {
        cell: Some(CellSection {
            num_rbs: Some(scenario.grid.num_rbs()),
        }),
        sim: Some(SimSection {
            duration_ttis: Some(scenario.duration_ttis),
            seed: Some(scenario.seed),
        }),
        policy: Some(PolicySection {
            mode: Some(scenario.policy.name()),
            slicing: None,
            decision_period: Some(scenario.policy.decision_period_ttis),
        }),
        tenants: scenario
            .tenants
            .iter()
            .map(|t| TenantSection {
                id: Some(t.id.0),
                name: Some(t.name.clone()),
                dedicated_rbs: Some(t.dedicated_rbs),
                subslices: t
                    .subslices
                    .iter()
                    .map(|s| {
                        let (class, gbr_bps, weight) = match s.class {
                            ServiceClass::Gbr { gbr_bps } => ("gbr", Some(gbr_bps), None),
                            ServiceClass::NonGbr { weight } => ("non-gbr", None, Some(weight)),
                        };
                        SubsliceSection {
                            id: Some(s.id.0),
                            name: Some(s.name.clone()),
                            class: Some(class.into()),
                            gbr_bps,
                            weight,
                        }
                    })
                    .collect(),
            })
            .collect(),
        ues: scenario
            .ues
            .iter()
            .map(|u| UeSection {
                id: Some(u.id.0),
                tenant: Some(u.tenant.0),
                subslice: Some(u.subslice.0),
                start_tti: Some(u.start_tti),
                stop_tti: u.stop_tti,
                traffic: Some(u.traffic),
                channel: Some(u.channel),
            })
            .collect(),
    }
}

impl fmt::Display for ScenarioFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = toml::to_string_pretty(self).map_err(|_| fmt::Error)?;
        f.write_str(&text)
    }
}
