//! Structured reports and the input/criterion error split behind exit codes.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use planar_transport::BipartiteGraph;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Criterion {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Criterion { name: name.into(), measured, threshold, pass: measured <= threshold }
    }

    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Criterion { name: name.into(), measured, threshold, pass: measured < threshold }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Criterion { name: name.into(), measured: v, threshold: 1.0, pass: ok }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: &'static str,
    pub graph_hash: String,
    pub config: Value,
    /// Name of the identity or quantity the numbers instantiate.
    pub anchor: String,
    pub results: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<Criterion>,
}

impl Report {
    pub fn new(command: &str, graph: &BipartiteGraph, config: Value, anchor: &str) -> Self {
        Report {
            command: command.into(),
            version: VERSION,
            graph_hash: graph_hash(graph),
            config,
            anchor: anchor.into(),
            results: Value::Null,
            criteria: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} ({})\n", self.command, self.anchor);
        for c in &self.criteria {
            s.push_str(&format!(
                "  [{}] {}: {:.3e} (limit {:.3e})\n",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.measured,
                c.threshold
            ));
        }
        s
    }
}

/// SHA-256 of the canonical JSON form of the graph.
pub fn graph_hash(graph: &BipartiteGraph) -> String {
    let text = serde_json::to_string(&graph.to_document()).expect("graph documents serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub enum Failure {
    /// Bad files, flags or documents; exit code 2.
    Input(String),
    /// Numerical failure or failed criterion; exit code 1.
    Criterion(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Criterion(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Criterion(m) => write!(f, "{m}"),
        }
    }
}

impl From<planar_transport::Error> for Failure {
    fn from(e: planar_transport::Error) -> Self {
        use planar_transport::Error as E;
        match e {
            E::NonBipartite { .. }
            | E::UnknownVertex(_)
            | E::UnknownEdge(_)
            | E::DuplicateId(_)
            | E::BrokenOpposite { .. }
            | E::Disconnected { .. }
            | E::EmptyGraph
            | E::GradingMismatch { .. }
            | E::MalformedWord { .. }
            | E::NotAPath(_)
            | E::IncompatibleImage { .. }
            | E::InvalidConfig(_)
            | E::Document(_)
            | E::Json(_) => Failure::Input(e.to_string()),
            other => Failure::Criterion(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}
