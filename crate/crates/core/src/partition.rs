//! Workflow partitioning: exact ancestor-closed s-t min-cut, the recursive
//! probabilistic partitioner and the single-bisection baselines.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{FogId, Federation};
use crate::model::{EdgeSpec, Request, VertexId, WorkflowSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub side_s: Vec<VertexId>,
    pub side_t: Vec<VertexId>,
    pub cut_edges: Vec<EdgeSpec>,
    pub cut_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMethod {
    #[serde(alias = "nopartition", alias = "no_partition")]
    None,
    MinCut,
    LeastData,
    ProPart,
}

impl PartitionMethod {
    pub const ALL: [PartitionMethod; 4] =
        [PartitionMethod::None, PartitionMethod::MinCut, PartitionMethod::LeastData, PartitionMethod::ProPart];

    pub fn label(self) -> &'static str {
        match self {
            PartitionMethod::None => "none",
            PartitionMethod::MinCut => "mincut",
            PartitionMethod::LeastData => "leastdata",
            PartitionMethod::ProPart => "propart",
        }
    }
}

impl fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PartitionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "none" | "nopartition" => Ok(PartitionMethod::None),
            "mincut" => Ok(PartitionMethod::MinCut),
            "leastdata" => Ok(PartitionMethod::LeastData),
            "propart" => Ok(PartitionMethod::ProPart),
            other => Err(Error::InvalidArgument(format!("unknown partition method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub method: PartitionMethod,
    pub alpha: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { method: PartitionMethod::ProPart, alpha: 0.5 }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Member vertices in topological order.
    pub vertices: Vec<VertexId>,
    #[serde(skip)]
    pub workflow: WorkflowSpec,
    pub must_run_local: bool,
    /// Best estimated on-time probability, when the method evaluated one.
    pub est_success: Option<f64>,
}

impl Partition {
    fn of(w: &WorkflowSpec, ids: &[VertexId], est_success: Option<f64>) -> Result<Self> {
        let workflow = w.subgraph(ids);
        let vertices = workflow.topological_order()?;
        Ok(Self { must_run_local: workflow.is_pinned(), vertices, workflow, est_success })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub parent: Vec<VertexId>,
    pub parent_p: f64,
    pub children: [Vec<VertexId>; 2],
    pub child_p: [f64; 2],
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionPlan {
    pub partitions: Vec<Partition>,
    /// On-time probability of the whole workflow on the local fog (ProPart only).
    pub root_p: Option<f64>,
    pub trace: Vec<SplitDecision>,
}

impl PartitionPlan {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    /// Partition index of every vertex.
    pub fn owner(&self) -> HashMap<VertexId, usize> {
        self.partitions
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.vertices.iter().map(move |v| (*v, i)))
            .collect()
    }

    /// Checks that partitions tile the vertex set and every crossing edge
    /// points from an earlier partition to a later one.
    pub fn check(&self, w: &WorkflowSpec) -> Result<()> {
        let owner = self.owner();
        let covered: usize = self.partitions.iter().map(|p| p.vertices.len()).sum();
        if covered != w.len() || owner.len() != w.len() || w.ids().iter().any(|id| !owner.contains_key(id)) {
            return Err(Error::NotPartitionable("partitions do not tile the workflow".into()));
        }
        for e in &w.edges {
            if owner[&e.from] > owner[&e.to] {
                return Err(Error::NotPartitionable(format!("edge {}->{} runs backwards", e.from, e.to)));
            }
        }
        for p in &self.partitions {
            if p.workflow.is_pinned() && !p.must_run_local {
                return Err(Error::NotPartitionable("pinned partition not flagged local".into()));
            }
        }
        Ok(())
    }
}

/// Exact minimum-weight s-t cut restricted to ancestor-closed source sides.
///
/// Entries hang off a virtual source and exits off a virtual sink with
/// unbounded capacity. Every edge also gets an unbounded reverse arc, so any
/// finite cut has no edge from the sink side back into the source side. The
/// source side is the residual-reachable set, which is the smallest minimum
/// cut.
pub fn min_cut(w: &WorkflowSpec, weights: impl Fn(&EdgeSpec) -> f64) -> Result<CutResult> {
    if w.len() < 2 {
        return Err(Error::NotPartitionable("a single vertex cannot be cut".into()));
    }
    let order = w.topological_order()?;
    let index: HashMap<VertexId, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let n = order.len();
    let (src, sink) = (n, n + 1);
    let edge_weights: Vec<f64> = w.edges.iter().map(&weights).collect();
    if let Some(bad) = edge_weights.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("edge weights must be positive, got {bad}")));
    }
    let total: f64 = edge_weights.iter().sum();
    let inf = 4.0 * total + 1.0;

    let mut net = FlowNetwork::new(n + 2);
    for (e, wt) in w.edges.iter().zip(&edge_weights) {
        let (u, v) = (index[&e.from], index[&e.to]);
        net.add_edge(u, v, *wt);
        net.add_edge(v, u, inf);
    }
    for id in w.entries() {
        net.add_edge(src, index[&id], inf);
    }
    for id in w.exits() {
        net.add_edge(index[&id], sink, inf);
    }
    net.max_flow(src, sink, total * 1e-12);
    let reach = net.reachable(src, total * 1e-12);

    let side_s: BTreeSet<VertexId> = order.iter().enumerate().filter(|(i, _)| reach[*i]).map(|(_, id)| *id).collect();
    let closed = w.edges.iter().all(|e| !(side_s.contains(&e.to) && !side_s.contains(&e.from)));
    if side_s.is_empty() || side_s.len() == n || !closed {
        // Not reachable with the reverse arcs in place; kept as a guard.
        return prefix_cut(w, &order, &weights);
    }
    Ok(cut_from_side(w, &side_s, &weights))
}

fn cut_from_side(w: &WorkflowSpec, side_s: &BTreeSet<VertexId>, weights: &impl Fn(&EdgeSpec) -> f64) -> CutResult {
    let cut_edges: Vec<EdgeSpec> = w
        .edges
        .iter()
        .filter(|e| side_s.contains(&e.from) && !side_s.contains(&e.to))
        .copied()
        .collect();
    let cut_weight = cut_edges.iter().map(weights).sum();
    CutResult {
        side_s: side_s.iter().copied().collect(),
        side_t: w.ids().into_iter().filter(|id| !side_s.contains(id)).collect::<BTreeSet<_>>().into_iter().collect(),
        cut_edges,
        cut_weight,
    }
}

/// Cheapest cut among the topological prefixes; ties go to the shortest prefix.
fn prefix_cut(w: &WorkflowSpec, order: &[VertexId], weights: &impl Fn(&EdgeSpec) -> f64) -> Result<CutResult> {
    let mut best: Option<CutResult> = None;
    for k in 1..order.len() {
        let side: BTreeSet<VertexId> = order[..k].iter().copied().collect();
        let cut = cut_from_side(w, &side, weights);
        if best.as_ref().is_none_or(|b| cut.cut_weight < b.cut_weight - 1e-12) {
            best = Some(cut);
        }
    }
    best.ok_or_else(|| Error::NotPartitionable("no prefix cut".into()))
}

/// Dinic's algorithm on floating-point capacities.
struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn levels(&self, s: usize, eps: f64) -> Vec<i64> {
        let mut level = vec![-1; self.head.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > eps && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, pushed: f64, level: &[i64], next: &mut [usize], eps: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while next[u] < self.head[u].len() {
            let e = self.head[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > eps && level[v] == level[u] + 1 {
                let got = self.augment(v, t, pushed.min(self.cap[e]), level, next, eps);
                if got > 0.0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize, eps: f64) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s, eps);
            if level[t] < 0 {
                return flow;
            }
            let mut next = vec![0; self.head.len()];
            loop {
                let got = self.augment(s, t, f64::INFINITY, &level, &mut next, eps);
                if got <= 0.0 {
                    break;
                }
                flow += got;
            }
        }
    }

    fn reachable(&self, s: usize, eps: f64) -> Vec<bool> {
        self.levels(s, eps).iter().map(|l| *l >= 0).collect()
    }
}

/// Estimates on-time probabilities for ProPart.
pub trait SuccessEstimator {
    /// Fog on which the root workflow is evaluated.
    fn local(&self) -> FogId;
    /// Fogs over which a child's best probability is taken.
    fn candidates(&self) -> &[FogId];
    /// Probability that `part` finishes within `deadline` ms on `fog`.
    fn success(&self, part: &WorkflowSpec, fog: FogId, deadline: f64) -> Result<f64>;
}

/// Computation-only estimator: the chain of ETC entries on a fog, delayed by
/// that fog's expected queue wait.
pub struct EtcEstimator<'a> {
    pub federation: &'a Federation,
    pub local: FogId,
    pub candidates: Vec<FogId>,
    /// Expected wait per fog index (ms).
    pub waits: &'a [f64],
}

impl<'a> EtcEstimator<'a> {
    /// Candidates are the local fog and its neighbors.
    pub fn new(federation: &'a Federation, local: FogId, waits: &'a [f64]) -> Result<Self> {
        let mut candidates = vec![local];
        candidates.extend_from_slice(federation.topology.neighbors(local)?);
        Ok(Self { federation, local, candidates, waits })
    }
}

impl SuccessEstimator for EtcEstimator<'_> {
    fn local(&self) -> FogId {
        self.local
    }

    fn candidates(&self) -> &[FogId] {
        &self.candidates
    }

    fn success(&self, part: &WorkflowSpec, fog: FogId, deadline: f64) -> Result<f64> {
        let wait = self.waits.get(fog.index()).copied().unwrap_or(0.0);
        Ok(self.federation.chain(part, fog)?.prob_on_time_shifted(wait, deadline))
    }
}

fn best_success(est: &dyn SuccessEstimator, part: &WorkflowSpec, deadline: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for &fog in est.candidates() {
        best = best.max(est.success(part, fog, deadline)?);
    }
    Ok(best)
}

/// Recursive probabilistic partitioning.
///
/// The root is evaluated on the local fog; when its on-time probability is
/// at least `alpha` the workflow stays whole. Otherwise it is bisected along
/// the data-weighted min-cut and the split is kept only if both halves,
/// evaluated on their best fog, beat the parent. Accepted halves are split
/// again under the same improvement rule.
pub fn propart(
    w: &WorkflowSpec,
    request: &Request,
    cfg: &PartitionConfig,
    est: &dyn SuccessEstimator,
) -> Result<PartitionPlan> {
    cfg.validate()?;
    let all = w.topological_order()?;
    let root_p = est.success(w, est.local(), request.sub_deadline(&all))?;
    let mut plan = PartitionPlan { partitions: Vec::new(), root_p: Some(root_p), trace: Vec::new() };
    if root_p >= cfg.alpha || w.len() < 2 {
        plan.partitions.push(Partition::of(w, &all, Some(root_p))?);
        return Ok(plan);
    }
    split(w, w, root_p, request, est, &mut plan)?;
    Ok(plan)
}

fn split(
    whole: &WorkflowSpec,
    part: &WorkflowSpec,
    parent_p: f64,
    request: &Request,
    est: &dyn SuccessEstimator,
    plan: &mut PartitionPlan,
) -> Result<()> {
    let ids = part.topological_order()?;
    if part.len() < 2 {
        plan.partitions.push(Partition::of(whole, &ids, Some(parent_p))?);
        return Ok(());
    }
    let cut = min_cut(part, |e| e.data_mb.max(1e-6))?;
    let left = whole.subgraph(&cut.side_s);
    let right = whole.subgraph(&cut.side_t);
    let p_left = best_success(est, &left, request.sub_deadline(&cut.side_s))?;
    let p_right = best_success(est, &right, request.sub_deadline(&cut.side_t))?;
    let accepted = p_left > parent_p && p_right > parent_p;
    plan.trace.push(SplitDecision {
        parent: ids.clone(),
        parent_p,
        children: [left.topological_order()?, right.topological_order()?],
        child_p: [p_left, p_right],
        accepted,
    });
    if !accepted {
        plan.partitions.push(Partition::of(whole, &ids, Some(parent_p))?);
        return Ok(());
    }
    split(whole, &left, p_left, request, est, plan)?;
    split(whole, &right, p_right, request, est, plan)
}

/// Single bisection along the unit-weight min-cut.
pub fn baseline_mincut(w: &WorkflowSpec) -> Result<PartitionPlan> {
    if w.len() < 2 {
        return no_partition(w);
    }
    let cut = min_cut(w, |_| 1.0)?;
    two_way(w, &cut.side_s, &cut.side_t)
}

/// Single bisection at the topological prefix with the least crossing data.
pub fn baseline_least_data(w: &WorkflowSpec) -> Result<PartitionPlan> {
    if w.len() < 2 {
        return no_partition(w);
    }
    let order = w.topological_order()?;
    let cut = prefix_cut(w, &order, &|e: &EdgeSpec| e.data_mb)?;
    two_way(w, &cut.side_s, &cut.side_t)
}

pub fn no_partition(w: &WorkflowSpec) -> Result<PartitionPlan> {
    let all = w.topological_order()?;
    Ok(PartitionPlan { partitions: vec![Partition::of(w, &all, None)?], root_p: None, trace: Vec::new() })
}

fn two_way(w: &WorkflowSpec, s: &[VertexId], t: &[VertexId]) -> Result<PartitionPlan> {
    Ok(PartitionPlan {
        partitions: vec![Partition::of(w, s, None)?, Partition::of(w, t, None)?],
        root_p: None,
        trace: Vec::new(),
    })
}

/// Runs the configured method.
pub fn partition(
    w: &WorkflowSpec,
    request: &Request,
    cfg: &PartitionConfig,
    est: &dyn SuccessEstimator,
) -> Result<PartitionPlan> {
    match cfg.method {
        PartitionMethod::None => no_partition(w),
        PartitionMethod::MinCut => baseline_mincut(w),
        PartitionMethod::LeastData => baseline_least_data(w),
        PartitionMethod::ProPart => propart(w, request, cfg, est),
    }
}
