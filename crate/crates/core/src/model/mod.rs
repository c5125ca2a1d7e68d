//! Application models, module catalogs and run configuration.
//!
//! All documents are JSON. Units are fixed per field: periods in
//! milliseconds, message sizes in bits, bandwidths in Mbit/s, compute
//! demand and capacity in Mops.

mod config;
mod synth;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{
    LatencyParams, RewardWeights, RunConfig, Sp1Config, Sp2Config, Sp3Config,
};
pub use synth::{generate_synthetic_usecase, PartSpec, SyntheticSpec};

/// A periodic application process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Process {
    pub id: String,
    pub part: String,
    pub period_ms: f64,
    pub compute_demand_mops: f64,
}

/// A periodic message between two processes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub size_bits: f64,
    pub period_ms: f64,
}

impl Message {
    /// Bandwidth requirement in Mbit/s (bits per millisecond is kbit/s).
    pub fn bandwidth_mbps(&self) -> f64 {
        self.size_bits / self.period_ms / 1000.0
    }
}

/// A message with its endpoints resolved to process indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flow {
    pub message: usize,
    pub src: usize,
    pub dst: usize,
    pub bandwidth_mbps: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    processes: Vec<Process>,
    messages: Vec<Message>,
}

/// A validated set of processes and messages.
///
/// Construction through [`ApplicationModel::new`] guarantees that every
/// message endpoint resolves, periods are positive and ids are unique.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ApplicationModel {
    processes: Vec<Process>,
    messages: Vec<Message>,
    parts: Vec<String>,
    flows: Vec<Flow>,
}

impl TryFrom<RawModel> for ApplicationModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        ApplicationModel::new(raw.processes, raw.messages)
    }
}

impl From<ApplicationModel> for RawModel {
    fn from(model: ApplicationModel) -> Self {
        RawModel {
            processes: model.processes,
            messages: model.messages,
        }
    }
}

impl ApplicationModel {
    pub fn new(processes: Vec<Process>, messages: Vec<Message>) -> Result<Self> {
        if processes.is_empty() {
            return Err(Error::Model("no processes".into()));
        }
        let mut index = HashMap::with_capacity(processes.len());
        let mut parts = Vec::new();
        for (i, p) in processes.iter().enumerate() {
            if p.id.is_empty() {
                return Err(Error::Model(format!("process #{i} has an empty id")));
            }
            if !(p.period_ms > 0.0) || !p.period_ms.is_finite() {
                return Err(Error::Model(format!(
                    "process {}: period must be positive, got {}",
                    p.id, p.period_ms
                )));
            }
            if !(p.compute_demand_mops >= 0.0) || !p.compute_demand_mops.is_finite() {
                return Err(Error::Model(format!(
                    "process {}: compute demand must be non-negative, got {}",
                    p.id, p.compute_demand_mops
                )));
            }
            if index.insert(p.id.as_str(), i).is_some() {
                return Err(Error::Model(format!("duplicate process id {}", p.id)));
            }
            if !parts.contains(&p.part) {
                parts.push(p.part.clone());
            }
        }

        let mut seen = HashSet::with_capacity(messages.len());
        let mut flows = Vec::with_capacity(messages.len());
        for (k, m) in messages.iter().enumerate() {
            let src = *index.get(m.src.as_str()).ok_or_else(|| {
                Error::Model(format!("message {}: unknown source process {}", m.id, m.src))
            })?;
            let dst = *index.get(m.dst.as_str()).ok_or_else(|| {
                Error::Model(format!(
                    "message {}: unknown destination process {}",
                    m.id, m.dst
                ))
            })?;
            if src == dst {
                return Err(Error::Model(format!(
                    "message {}: source and destination are both {}",
                    m.id, m.src
                )));
            }
            if !(m.period_ms > 0.0) || !m.period_ms.is_finite() {
                return Err(Error::Model(format!(
                    "message {}: period must be positive, got {}",
                    m.id, m.period_ms
                )));
            }
            if !(m.size_bits >= 0.0) || !m.size_bits.is_finite() {
                return Err(Error::Model(format!(
                    "message {}: size must be non-negative, got {}",
                    m.id, m.size_bits
                )));
            }
            if !seen.insert((src, dst, m.id.as_str())) {
                return Err(Error::Model(format!(
                    "duplicate message {} from {} to {}",
                    m.id, m.src, m.dst
                )));
            }
            flows.push(Flow {
                message: k,
                src,
                dst,
                bandwidth_mbps: m.bandwidth_mbps(),
            });
        }

        Ok(ApplicationModel {
            processes,
            messages,
            parts,
            flows,
        })
    }

    pub fn processes(&self) -> &[Process] {
        &self.processes
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Part tags in order of first appearance.
    pub fn parts(&self) -> &[String] {
        &self.parts
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn process_index(&self, id: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.id == id)
    }

    pub fn part_index(&self, part: &str) -> Option<usize> {
        self.parts.iter().position(|p| p == part)
    }

    /// Part index of every process, aligned with [`Self::processes`].
    pub fn process_parts(&self) -> Vec<usize> {
        self.processes
            .iter()
            .map(|p| self.part_index(&p.part).expect("part registered at construction"))
            .collect()
    }

    pub fn total_compute_demand(&self) -> f64 {
        self.processes.iter().map(|p| p.compute_demand_mops).sum()
    }

    /// Restricts the model to the processes of one part, dropping messages
    /// that cross the part boundary.
    pub fn restrict_to_part(&self, part: &str) -> Result<ApplicationModel> {
        let processes: Vec<Process> = self
            .processes
            .iter()
            .filter(|p| p.part == part)
            .cloned()
            .collect();
        let members: BTreeSet<&str> = processes.iter().map(|p| p.id.as_str()).collect();
        let messages = self
            .messages
            .iter()
            .filter(|m| members.contains(m.src.as_str()) && members.contains(m.dst.as_str()))
            .cloned()
            .collect();
        ApplicationModel::new(processes, messages)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        parse_json(text, Path::new("<string>"))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

pub fn load_application_model(path: impl AsRef<Path>) -> Result<ApplicationModel> {
    read_json(path.as_ref())
}

pub fn save_application_model(model: &ApplicationModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), model)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleKind {
    Processing,
    Switch,
    Gateway,
}

impl ModuleKind {
    pub fn is_infrastructure(self) -> bool {
        !matches!(self, ModuleKind::Processing)
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModuleKind::Processing => "processing",
            ModuleKind::Switch => "switch",
            ModuleKind::Gateway => "gateway",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Duplex {
    #[default]
    Full,
}

/// One hardware module type. The same link bandwidth applies to both
/// directions of every interface (full duplex).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub type_name: String,
    pub kind: ModuleKind,
    #[serde(default)]
    pub compute_capacity_mops: f64,
    pub link_bandwidth_mbps: f64,
    pub max_ports: u32,
    #[serde(default)]
    pub duplex: Duplex,
    pub cost: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCatalog {
    module_types: Vec<ModuleSpec>,
}

/// Module types keyed by `type_name`. The type names double as the vertex
/// labels used by topology grammars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCatalog", into = "RawCatalog")]
pub struct ModuleCatalog {
    module_types: Vec<ModuleSpec>,
}

impl TryFrom<RawCatalog> for ModuleCatalog {
    type Error = Error;

    fn try_from(raw: RawCatalog) -> Result<Self> {
        ModuleCatalog::new(raw.module_types)
    }
}

impl From<ModuleCatalog> for RawCatalog {
    fn from(c: ModuleCatalog) -> Self {
        RawCatalog {
            module_types: c.module_types,
        }
    }
}

impl ModuleCatalog {
    pub fn new(module_types: Vec<ModuleSpec>) -> Result<Self> {
        let mut names = HashSet::new();
        for m in &module_types {
            if m.type_name.is_empty() || !m.type_name.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(Error::Catalog(format!(
                    "type name {:?} must be non-empty ASCII letters",
                    m.type_name
                )));
            }
            if !names.insert(m.type_name.as_str()) {
                return Err(Error::Catalog(format!("duplicate type_name {}", m.type_name)));
            }
            let finite = [m.compute_capacity_mops, m.link_bandwidth_mbps, m.cost]
                .iter()
                .all(|v| v.is_finite());
            if !finite || m.compute_capacity_mops < 0.0 || m.link_bandwidth_mbps < 0.0 {
                return Err(Error::Catalog(format!(
                    "{}: capacities must be non-negative",
                    m.type_name
                )));
            }
            if m.cost < 0.0 {
                return Err(Error::Catalog(format!("{}: negative cost", m.type_name)));
            }
            if m.max_ports < 1 {
                return Err(Error::Catalog(format!("{}: max_ports must be >= 1", m.type_name)));
            }
            if m.kind == ModuleKind::Processing
                && (m.compute_capacity_mops <= 0.0 || m.link_bandwidth_mbps <= 0.0)
            {
                return Err(Error::Catalog(format!(
                    "{}: processing modules need positive capacities",
                    m.type_name
                )));
            }
        }
        if !module_types.iter().any(|m| m.kind == ModuleKind::Processing) {
            return Err(Error::Catalog("catalog has no processing module type".into()));
        }
        Ok(ModuleCatalog { module_types })
    }

    /// The homogeneous catalog of the avionics case study: processing module
    /// `M`, switch `S` and gateway `G`.
    pub fn standard() -> Self {
        let spec = |name: &str, kind, compute, ports| ModuleSpec {
            type_name: name.into(),
            kind,
            compute_capacity_mops: compute,
            link_bandwidth_mbps: 100.0,
            max_ports: ports,
            duplex: Duplex::Full,
            cost: 10.0,
        };
        ModuleCatalog::new(vec![
            spec("M", ModuleKind::Processing, 2.7, 1),
            spec("S", ModuleKind::Switch, 0.0, 6),
            spec("G", ModuleKind::Gateway, 0.0, 2),
        ])
        .expect("built-in catalog is valid")
    }

    pub fn module_types(&self) -> &[ModuleSpec] {
        &self.module_types
    }

    pub fn get(&self, type_name: &str) -> Option<&ModuleSpec> {
        self.module_types.iter().find(|m| m.type_name == type_name)
    }

    pub fn processing_types(&self) -> impl Iterator<Item = &ModuleSpec> {
        self.module_types
            .iter()
            .filter(|m| m.kind == ModuleKind::Processing)
    }

    pub fn total_cost(&self) -> f64 {
        self.module_types.iter().map(|m| m.cost).sum()
    }
}

pub fn load_module_catalog(path: impl AsRef<Path>) -> Result<ModuleCatalog> {
    read_json(path.as_ref())
}

pub fn save_module_catalog(catalog: &ModuleCatalog, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), catalog)
}

pub fn load_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let config: RunConfig = read_json(path.as_ref())?;
    config.validate()?;
    Ok(config)
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        // Validation failures surface through serde as custom errors; keep
        // the domain error text but attach the position.
        Error::json(path, &e)
    })
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn process(id: &str, part: &str) -> Process {
        Process {
            id: id.into(),
            part: part.into(),
            period_ms: 10.0,
            compute_demand_mops: 0.5,
        }
    }

    fn message(id: &str, src: &str, dst: &str) -> Message {
        Message {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
            size_bits: 1000.0,
            period_ms: 10.0,
        }
    }

    #[test]
    fn bandwidth_is_size_over_period() {
        let m = message("m", "a", "b");
        assert!((m.bandwidth_mbps() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_model_rejected() {
        let err = ApplicationModel::new(vec![], vec![]).unwrap_err();
        assert!(err.to_string().contains("no processes"));
    }

    #[test]
    fn dangling_reference_rejected() {
        let err = ApplicationModel::new(
            vec![process("a", "X")],
            vec![message("m", "a", "ghost")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn non_positive_period_rejected() {
        let mut p = process("a", "X");
        p.period_ms = 0.0;
        assert!(ApplicationModel::new(vec![p], vec![]).is_err());
    }

    #[test]
    fn self_message_rejected() {
        let err = ApplicationModel::new(vec![process("a", "X")], vec![message("m", "a", "a")]);
        assert!(err.is_err());
    }

    #[test]
    fn parse_error_reports_position() {
        let err = ApplicationModel::from_json_str("{\n  \"processes\": [,]\n}").unwrap_err();
        match err {
            Error::Json { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn validation_error_surfaces_through_json() {
        let text = r#"{"processes": [], "messages": []}"#;
        let err = ApplicationModel::from_json_str(text).unwrap_err();
        assert!(err.to_string().contains("no processes"), "{err}");
    }

    #[test]
    fn standard_values() {
        let c = ModuleCatalog::standard();
        let m = c.get("M").unwrap();
        assert_eq!(m.kind, ModuleKind::Processing);
        assert_eq!(m.compute_capacity_mops, 2.7);
        assert_eq!(m.link_bandwidth_mbps, 100.0);
        assert_eq!(m.cost, 10.0);
        assert_eq!(c.get("S").unwrap().max_ports, 6);
        assert_eq!(c.get("G").unwrap().max_ports, 2);
    }

    #[test]
    fn catalog_rejects_duplicates_and_missing_processing() {
        let mut types = ModuleCatalog::standard().module_types().to_vec();
        types.push(types[0].clone());
        assert!(ModuleCatalog::new(types).is_err());

        let only_switch = vec![ModuleCatalog::standard().get("S").unwrap().clone()];
        let err = ModuleCatalog::new(only_switch).unwrap_err();
        assert!(err.to_string().contains("no processing"));
    }

    #[test]
    fn catalog_rejects_negative_capacity() {
        let mut types = ModuleCatalog::standard().module_types().to_vec();
        types[1].link_bandwidth_mbps = -1.0;
        assert!(ModuleCatalog::new(types).is_err());
    }
}
