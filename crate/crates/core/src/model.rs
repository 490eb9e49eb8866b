//! Workflow and request model.
//!
//! A workflow is a DAG of micro-services; each vertex carries a normal work
//! profile in million instructions (MI) and the size of the data it emits. A
//! monolithic application is the same workflow collapsed to one vertex.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::NormalSpec;
use crate::error::{Error, Result};
use crate::federation::FogId;

pub type VertexId = u32;

/// Default instruction rate of the reference fog used to convert measured
/// milliseconds into MI.
pub const REFERENCE_MIPS: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AppType {
    Fire,
    #[serde(rename = "HAR")]
    Har,
    Oil,
    #[serde(rename = "AIE")]
    Aie,
}

impl AppType {
    pub const ALL: [AppType; 4] = [AppType::Fire, AppType::Har, AppType::Oil, AppType::Aie];

    /// Execution time (ms) of the whole application on the GPU machine class.
    pub fn gpu_profile_ms(self) -> NormalSpec {
        match self {
            AppType::Fire => NormalSpec::new(1349.5, 418.9),
            AppType::Har => NormalSpec::new(0.51, 0.006),
            AppType::Oil => NormalSpec::new(65.98, 0.47),
            AppType::Aie => NormalSpec::new(7.55, 0.04),
        }
    }

    fn label(self) -> &'static str {
        match self {
            AppType::Fire => "Fire",
            AppType::Har => "HAR",
            AppType::Oil => "Oil",
            AppType::Aie => "AIE",
        }
    }
}

impl fmt::Display for AppType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AppType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fire" => Ok(AppType::Fire),
            "har" => Ok(AppType::Har),
            "oil" => Ok(AppType::Oil),
            "aie" => Ok(AppType::Aie),
            other => Err(Error::InvalidArgument(format!("unknown application type '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroServiceSpec {
    pub id: VertexId,
    pub app: AppType,
    pub name: String,
    /// Work in million instructions.
    pub work: NormalSpec,
    /// Megabytes handed to each successor.
    pub output_data: f64,
    /// Megabytes that must reach the fog when this service starts a partition
    /// on a fog other than its predecessor's.
    pub input_data: f64,
    pub location_pinned: bool,
}

impl MicroServiceSpec {
    /// Key of this service type in the ETC/ETT matrices.
    pub fn kind(&self) -> String {
        format!("{}/{}", self.app, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: VertexId,
    pub to: VertexId,
    pub data_mb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowSpec {
    pub vertices: Vec<MicroServiceSpec>,
    pub edges: Vec<EdgeSpec>,
}

/// A broken workflow invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    DuplicateId(VertexId),
    UnknownEndpoint { from: VertexId, to: VertexId },
    SelfLoop(VertexId),
    Cycle(Vec<VertexId>),
    Disconnected,
    DataMismatch { from: VertexId, to: VertexId, edge_mb: f64, output_mb: f64 },
    NoEntry,
    NoExit,
    PinnedNonEntry(VertexId),
    InvalidWork(VertexId),
}

impl WorkflowSpec {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&MicroServiceSpec> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn ids(&self) -> Vec<VertexId> {
        self.vertices.iter().map(|v| v.id).collect()
    }

    pub fn predecessors(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.edges.iter().filter(move |e| e.to == id).map(|e| e.from)
    }

    pub fn successors(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.edges.iter().filter(move |e| e.from == id).map(|e| e.to)
    }

    /// Vertices without predecessors, ascending by id.
    pub fn entries(&self) -> Vec<VertexId> {
        let targets: BTreeSet<_> = self.edges.iter().map(|e| e.to).collect();
        let mut out: Vec<_> = self.ids().into_iter().filter(|id| !targets.contains(id)).collect();
        out.sort_unstable();
        out
    }

    /// Vertices without successors, ascending by id.
    pub fn exits(&self) -> Vec<VertexId> {
        let sources: BTreeSet<_> = self.edges.iter().map(|e| e.from).collect();
        let mut out: Vec<_> = self.ids().into_iter().filter(|id| !sources.contains(id)).collect();
        out.sort_unstable();
        out
    }

    pub fn is_pinned(&self) -> bool {
        self.vertices.iter().any(|v| v.location_pinned)
    }

    /// Induced sub-workflow over `ids`, keeping vertex order of `self`.
    pub fn subgraph(&self, ids: &[VertexId]) -> WorkflowSpec {
        let keep: BTreeSet<_> = ids.iter().copied().collect();
        WorkflowSpec {
            vertices: self.vertices.iter().filter(|v| keep.contains(&v.id)).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(&e.from) && keep.contains(&e.to))
                .copied()
                .collect(),
        }
    }

    /// Checks every structural invariant; an empty report means the workflow
    /// is a valid, weakly connected DAG.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.vertices.is_empty() {
            out.push(Violation::Empty);
            return out;
        }
        let mut seen = BTreeSet::new();
        for v in &self.vertices {
            if !seen.insert(v.id) {
                out.push(Violation::DuplicateId(v.id));
            }
            if !(v.work.mean > 0.0) || !(v.work.std_dev >= 0.0) || !(v.output_data >= 0.0) {
                out.push(Violation::InvalidWork(v.id));
            }
        }
        for e in &self.edges {
            match (self.vertex(e.from), self.vertex(e.to)) {
                (Some(from), Some(_)) => {
                    if e.from == e.to {
                        out.push(Violation::SelfLoop(e.from));
                    }
                    if (e.data_mb - from.output_data).abs() > 1e-9 {
                        out.push(Violation::DataMismatch {
                            from: e.from,
                            to: e.to,
                            edge_mb: e.data_mb,
                            output_mb: from.output_data,
                        });
                    }
                }
                _ => out.push(Violation::UnknownEndpoint { from: e.from, to: e.to }),
            }
        }
        if let Err(Error::NotADag(_)) = self.topological_order() {
            out.push(Violation::Cycle(self.cycle_members()));
        }
        if !self.weakly_connected() {
            out.push(Violation::Disconnected);
        }
        let entries = self.entries();
        if entries.is_empty() {
            out.push(Violation::NoEntry);
        }
        if self.exits().is_empty() {
            out.push(Violation::NoExit);
        }
        for v in &self.vertices {
            if v.location_pinned && !entries.contains(&v.id) {
                out.push(Violation::PinnedNonEntry(v.id));
            }
        }
        out
    }

    /// Kahn's algorithm with ties broken by ascending vertex id.
    pub fn topological_order(&self) -> Result<Vec<VertexId>> {
        let mut indegree: BTreeMap<VertexId, usize> = self.ids().into_iter().map(|id| (id, 0)).collect();
        for e in &self.edges {
            if let Some(d) = indegree.get_mut(&e.to) {
                *d += 1;
            }
        }
        let mut ready: BTreeSet<VertexId> =
            indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
        let mut order = Vec::with_capacity(self.vertices.len());
        while let Some(id) = ready.pop_first() {
            order.push(id);
            for succ in self.successors(id) {
                if let Some(d) = indegree.get_mut(&succ) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(succ);
                    }
                }
            }
        }
        if order.len() != self.vertices.len() {
            return Err(Error::NotADag(format!(
                "cycle through vertices {:?}",
                self.cycle_members()
            )));
        }
        Ok(order)
    }

    fn cycle_members(&self) -> Vec<VertexId> {
        // Repeatedly strip vertices with no in- or out-edges among the rest.
        let mut alive: BTreeSet<VertexId> = self.ids().into_iter().collect();
        loop {
            let strip: Vec<_> = alive
                .iter()
                .copied()
                .filter(|&id| {
                    let has_in = self.edges.iter().any(|e| e.to == id && alive.contains(&e.from));
                    let has_out = self.edges.iter().any(|e| e.from == id && alive.contains(&e.to));
                    !has_in || !has_out
                })
                .collect();
            if strip.is_empty() {
                break;
            }
            for id in strip {
                alive.remove(&id);
            }
        }
        alive.into_iter().collect()
    }

    fn weakly_connected(&self) -> bool {
        let Some(first) = self.vertices.first() else { return true };
        let mut seen = BTreeSet::from([first.id]);
        let mut stack = vec![first.id];
        while let Some(id) = stack.pop() {
            for e in &self.edges {
                let next = if e.from == id {
                    e.to
                } else if e.to == id {
                    e.from
                } else {
                    continue;
                };
                if self.vertex(next).is_some() && seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Collapses the workflow into a single vertex: means and variances of the
    /// work add, output is the exit output, pinning is the OR of components.
    pub fn to_monolithic(&self) -> WorkflowSpec {
        if self.vertices.len() <= 1 {
            return self.clone();
        }
        let order = self.topological_order().unwrap_or_else(|_| self.ids());
        let first = self.vertex(order[0]).expect("vertex in order");
        let entries = self.entries();
        let exits = self.exits();
        let work = NormalSpec::sum(self.vertices.iter().map(|v| &v.work));
        let output_data = exits.iter().filter_map(|id| self.vertex(*id)).map(|v| v.output_data).sum();
        let input_data = entries.iter().filter_map(|id| self.vertex(*id)).map(|v| v.input_data).sum();
        WorkflowSpec {
            vertices: vec![MicroServiceSpec {
                id: first.id,
                app: first.app,
                name: "monolithic".into(),
                work,
                output_data,
                input_data,
                location_pinned: self.is_pinned(),
            }],
            edges: vec![],
        }
    }

    /// Builds a linear chain from `(name, work, output_mb)` stages.
    pub fn chain(app: AppType, stages: &[(&str, NormalSpec, f64)]) -> WorkflowSpec {
        let vertices: Vec<MicroServiceSpec> = stages
            .iter()
            .enumerate()
            .map(|(i, (name, work, out))| MicroServiceSpec {
                id: i as VertexId,
                app,
                name: (*name).to_string(),
                work: *work,
                output_data: *out,
                input_data: if i == 0 { *out } else { stages[i - 1].2 },
                location_pinned: false,
            })
            .collect();
        let edges = vertices
            .windows(2)
            .map(|w| EdgeSpec { from: w[0].id, to: w[1].id, data_mb: w[0].output_data })
            .collect();
        WorkflowSpec { vertices, edges }
    }
}

/// One stage of a built-in application template.
struct Stage {
    name: &'static str,
    /// Fraction of the application's mean work done by this stage.
    share: f64,
    output_mb: f64,
}

const fn stage(name: &'static str, share: f64, output_mb: f64) -> Stage {
    Stage { name, share, output_mb }
}

const FIRE: [Stage; 7] = [
    stage("capture", 0.05, 10.0),
    stage("pre-processing", 0.10, 5.0),
    stage("noise removal", 0.10, 5.0),
    stage("feature extraction", 0.15, 0.1),
    stage("fire detection", 0.40, 0.1),
    stage("location mapping", 0.10, 0.1),
    stage("alert generation", 0.10, 0.1),
];

const OIL: [Stage; 5] = [
    stage("pre-processing", 0.15, 1.0),
    stage("dark spot detection", 0.35, 1.0),
    stage("feature extraction", 0.20, 1.0),
    stage("classification", 0.15, 1.0),
    stage("segmentation", 0.15, 1.0),
];

const HAR: [Stage; 4] = [
    stage("pre-processing", 0.20, 1.0),
    stage("feature extraction", 0.30, 1.0),
    stage("classification", 0.30, 1.0),
    stage("activity recognition", 0.20, 1.0),
];

const AIE: [Stage; 4] = [
    stage("pre-processing", 0.15, 1.0),
    stage("initial model development", 0.25, 1.0),
    stage("inversion", 0.40, 1.0),
    stage("acoustic impedance estimation", 0.20, 1.0),
];

fn stages(app: AppType) -> &'static [Stage] {
    match app {
        AppType::Fire => &FIRE,
        AppType::Har => &HAR,
        AppType::Oil => &OIL,
        AppType::Aie => &AIE,
    }
}

/// Built-in linear workflow for `app` calibrated against a fog running at
/// `reference_mips`: the whole chain takes the GPU-class time on that fog.
///
/// Stage `i` receives `share_i` of the mean work and `sqrt(share_i)` of the
/// standard deviation, so the monolithic collapse reproduces the measured
/// mean and variance exactly.
pub fn builtin_app_with(app: AppType, reference_mips: f64) -> WorkflowSpec {
    let profile = app.gpu_profile_ms();
    let mean_mi = profile.mean * reference_mips / 1000.0;
    let std_mi = profile.std_dev * reference_mips / 1000.0;
    let st: Vec<(&str, NormalSpec, f64)> = stages(app)
        .iter()
        .map(|s| (s.name, NormalSpec::new(mean_mi * s.share, std_mi * s.share.sqrt()), s.output_mb))
        .collect();
    let mut w = WorkflowSpec::chain(app, &st);
    if app == AppType::Fire {
        // Frames are read from the camera attached to the receiving fog.
        w.vertices[0].location_pinned = true;
    }
    w
}

pub fn builtin_app(app: AppType) -> WorkflowSpec {
    builtin_app_with(app, REFERENCE_MIPS)
}

/// Parses an application tag and returns its built-in template.
pub fn builtin_app_named(tag: &str) -> Result<WorkflowSpec> {
    Ok(builtin_app(tag.parse()?))
}

pub fn to_monolithic(w: &WorkflowSpec) -> WorkflowSpec {
    w.to_monolithic()
}

pub fn validate_dag(w: &WorkflowSpec) -> std::result::Result<(), Vec<Violation>> {
    let v = w.validate();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

pub fn topological_order(w: &WorkflowSpec) -> Result<Vec<VertexId>> {
    w.topological_order()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlinePolicy {
    /// Slack constant (ms).
    pub epsilon: f64,
    /// Mean communication delay (ms).
    pub mean_comm_delay: f64,
}

impl Default for DeadlinePolicy {
    fn default() -> Self {
        Self { epsilon: 50.0, mean_comm_delay: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Workflow(WorkflowSpec),
    Monolithic(WorkflowSpec),
}

impl Payload {
    pub fn spec(&self) -> &WorkflowSpec {
        match self {
            Payload::Workflow(w) | Payload::Monolithic(w) => w,
        }
    }

    pub fn is_monolithic(&self) -> bool {
        matches!(self, Payload::Monolithic(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    /// Milliseconds since simulation start.
    pub arrival_time: f64,
    pub payload: Payload,
    pub origin_fog: FogId,
    /// Absolute per-service deadlines (ms).
    pub per_service_deadlines: BTreeMap<VertexId, f64>,
    /// Absolute workflow deadline (ms).
    pub workflow_deadline: f64,
}

impl Request {
    pub fn spec(&self) -> &WorkflowSpec {
        self.payload.spec()
    }

    /// Arrival-relative slack of one service.
    pub fn slack(&self, id: VertexId) -> f64 {
        self.per_service_deadlines.get(&id).map_or(0.0, |d| d - self.arrival_time)
    }

    /// Arrival-relative deadline of a group of services: the sum of their slacks.
    pub fn sub_deadline(&self, ids: &[VertexId]) -> f64 {
        ids.iter().map(|id| self.slack(*id)).sum()
    }

    /// Arrival-relative workflow deadline.
    pub fn relative_deadline(&self) -> f64 {
        self.workflow_deadline - self.arrival_time
    }
}

/// Gives each service the deadline `arrival + E_i + epsilon + d_c`; the
/// workflow deadline is arrival plus the sum of the per-service slacks.
pub fn assign_deadlines(
    w: &WorkflowSpec,
    arrival: f64,
    policy: &DeadlinePolicy,
    mean_exec: &HashMap<VertexId, f64>,
) -> Result<Request> {
    let mut per_service = BTreeMap::new();
    let mut total = 0.0;
    for v in &w.vertices {
        let e = *mean_exec
            .get(&v.id)
            .ok_or_else(|| Error::IncompleteProfile(format!("no mean execution time for vertex {}", v.id)))?;
        // Services shorter than half a bin discretize to zero latency.
        if !(e >= 0.0) {
            return Err(Error::IncompleteProfile(format!("negative mean execution for vertex {}", v.id)));
        }
        let slack = e + policy.epsilon + policy.mean_comm_delay;
        per_service.insert(v.id, arrival + slack);
        total += slack;
    }
    Ok(Request {
        id: 0,
        arrival_time: arrival,
        payload: Payload::Workflow(w.clone()),
        origin_fog: FogId(0),
        per_service_deadlines: per_service,
        workflow_deadline: arrival + total,
    })
}

/// Workflow document accepted on the command line and in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowDoc {
    pub vertices: Vec<VertexDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: VertexId,
    pub name: String,
    pub app: AppType,
    pub work: WorkDoc,
    pub output_mb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_mb: Option<f64>,
    #[serde(default)]
    pub pinned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkDoc {
    pub mean_mi: f64,
    pub std_mi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: VertexId,
    pub to: VertexId,
}

impl WorkflowDoc {
    /// Converts to a validated workflow; edge data is the source's output.
    pub fn into_spec(self) -> Result<WorkflowSpec> {
        let out: HashMap<VertexId, f64> = self.vertices.iter().map(|v| (v.id, v.output_mb)).collect();
        let edges: Vec<EdgeSpec> = self
            .edges
            .iter()
            .map(|e| {
                let data_mb = *out.get(&e.from).ok_or_else(|| {
                    Error::Config(format!("edge {}->{} references unknown vertex", e.from, e.to))
                })?;
                Ok(EdgeSpec { from: e.from, to: e.to, data_mb })
            })
            .collect::<Result<_>>()?;
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                let incoming: f64 = edges.iter().filter(|e| e.to == v.id).map(|e| e.data_mb).fold(0.0, f64::max);
                let has_pred = edges.iter().any(|e| e.to == v.id);
                MicroServiceSpec {
                    id: v.id,
                    app: v.app,
                    name: v.name.clone(),
                    work: NormalSpec::new(v.work.mean_mi, v.work.std_mi),
                    output_data: v.output_mb,
                    input_data: v.input_mb.unwrap_or(if has_pred { incoming } else { v.output_mb }),
                    location_pinned: v.pinned,
                }
            })
            .collect();
        let spec = WorkflowSpec { vertices, edges };
        validate_dag(&spec).map_err(|v| Error::Config(format!("invalid workflow: {v:?}")))?;
        Ok(spec)
    }

    pub fn from_spec(w: &WorkflowSpec) -> WorkflowDoc {
        WorkflowDoc {
            vertices: w
                .vertices
                .iter()
                .map(|v| VertexDoc {
                    id: v.id,
                    name: v.name.clone(),
                    app: v.app,
                    work: WorkDoc { mean_mi: v.work.mean, std_mi: v.work.std_dev },
                    output_mb: v.output_data,
                    input_mb: Some(v.input_data),
                    pinned: v.location_pinned,
                })
                .collect(),
            edges: w.edges.iter().map(|e| EdgeDoc { from: e.from, to: e.to }).collect(),
        }
    }
}
