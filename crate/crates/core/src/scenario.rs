//! Scenario configuration, built-in experiment suites, the parallel sweep
//! runner and CSV/report helpers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alloc::{AllocConfig, AllocMethod};
use crate::dist::NormalSpec;
use crate::error::{Error, Result};
use crate::federation::{build_grid_with, FogId, LinkProfile};
use crate::model::{builtin_app_with, AppType, DeadlinePolicy, WorkflowDoc, WorkflowSpec};
use crate::partition::{PartitionConfig, PartitionMethod};
use crate::sim::report::Estimate;
use crate::sim::{aggregate, run, CellSummary, RunConfig, RunTrace, SimContext, SimReport, WorkloadSpec};

pub const CSV_HEADER: &str = "scenario,method,requests,mix,degree,seed,meet_rate,avg_makespan_ms";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub bandwidth_mbps: f64,
    pub hop_mean_ms: f64,
    pub hop_std_ms: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { bandwidth_mbps: 1000.0, hop_mean_ms: 20.0, hop_std_ms: 5.0 }
    }
}

impl From<LinkConfig> for LinkProfile {
    fn from(l: LinkConfig) -> Self {
        LinkProfile { bandwidth_mbps: l.bandwidth_mbps, per_hop_latency: NormalSpec::new(l.hop_mean_ms, l.hop_std_ms) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationConfig {
    pub grid: GridSize,
    pub seed: u64,
    pub link: LinkConfig,
    pub bin_width_ms: f64,
    pub reference_mips: f64,
    pub node_count: u32,
    /// Grid position of the gateway receiving requests; defaults to the
    /// grid center.
    pub origin: Option<(i32, i32)>,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            grid: GridSize { w: 3, h: 3 },
            seed: 1,
            link: LinkConfig::default(),
            bin_width_ms: 1.0,
            reference_mips: crate::model::REFERENCE_MIPS,
            node_count: crate::federation::DEFAULT_NODE_COUNT,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub mix: f64,
    pub window_ms: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self { mix: 0.0, window_ms: 100_000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeadlineConfig {
    pub epsilon_ms: f64,
    pub mean_comm_delay_ms: f64,
}

impl Default for DeadlineConfig {
    fn default() -> Self {
        let d = DeadlinePolicy::default();
        Self { epsilon_ms: d.epsilon, mean_comm_delay_ms: d.mean_comm_delay }
    }
}

/// A (partitioning, allocation) pair compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodPair {
    pub partition: PartitionMethod,
    pub alloc: AllocMethod,
}

impl MethodPair {
    pub const fn new(partition: PartitionMethod, alloc: AllocMethod) -> Self {
        Self { partition, alloc }
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.partition, self.alloc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub requests: Vec<usize>,
    /// Federation degrees to sweep; each maps to a fixed grid and origin.
    /// Empty means use the configured grid.
    #[serde(default)]
    pub degrees: Vec<u32>,
    pub methods: Vec<MethodPair>,
}

/// Federation degree, grid size and origin position.
type DegreeTopology = (u32, GridSize, (i32, i32));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub federation: FederationConfig,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub deadline: DeadlineConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default = "default_true")]
    pub baselines_queue_aware: bool,
    #[serde(default = "default_one")]
    pub exec_scale: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_one_u64")]
    pub master_seed: u64,
    pub sweep: SweepConfig,
    /// Application templates replacing the built-in four.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workflows: Option<Vec<WorkflowDoc>>,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_ci_level() -> f64 {
    0.95
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_one_u64() -> u64 {
    1
}
fn default_repetitions() -> u32 {
    30
}

/// Grid size and origin position for a federation of the given degree.
pub fn degree_topology(degree: u32) -> Result<(GridSize, (i32, i32))> {
    match degree {
        1 => Ok((GridSize { w: 2, h: 1 }, (0, 0))),
        2 => Ok((GridSize { w: 3, h: 1 }, (1, 0))),
        3 => Ok((GridSize { w: 3, h: 2 }, (1, 0))),
        4 => Ok((GridSize { w: 3, h: 3 }, (1, 1))),
        d => Err(Error::Config(format!("degree must be between 1 and 4, got {d}"))),
    }
}

/// One simulation run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub topology: usize,
    pub degree: u32,
    pub requests: usize,
    pub method: MethodPair,
    pub repetition: u32,
    pub seed: u64,
}

/// Run seed: the master seed XOR a packed (workload cell, repetition). The
/// map is injective over cells and repetitions, and every method in a cell
/// sees the same workloads.
pub fn run_seed(master: u64, workload_cell: u32, repetition: u32) -> u64 {
    master ^ ((u64::from(workload_cell) << 32) | u64::from(repetition))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.name.is_empty() || self.name.contains(',') {
            return fail("name", "must be non-empty and contain no commas".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions", "must be at least 1".into());
        }
        if self.sweep.requests.is_empty() || self.sweep.requests.contains(&0) {
            return fail("sweep.requests", "must be a non-empty list of positive counts".into());
        }
        if self.sweep.methods.is_empty() {
            return fail("sweep.methods", "must be non-empty".into());
        }
        for d in &self.sweep.degrees {
            degree_topology(*d).map_err(|e| Error::Config(format!("sweep.degrees: {e}")))?;
        }
        let f = &self.federation;
        if f.grid.w == 0 || f.grid.h == 0 {
            return fail("federation.grid", "dimensions must be positive".into());
        }
        if !(f.bin_width_ms > 0.0) {
            return fail("federation.bin_width_ms", "must be positive".into());
        }
        if !(f.reference_mips > 0.0) {
            return fail("federation.reference_mips", "must be positive".into());
        }
        if f.node_count == 0 {
            return fail("federation.node_count", "must be at least 1".into());
        }
        if !(f.link.bandwidth_mbps > 0.0) || !(f.link.hop_mean_ms > 0.0) || !(f.link.hop_std_ms >= 0.0) {
            return fail("federation.link", "bandwidth and hop mean must be positive".into());
        }
        if let Some((x, y)) = f.origin {
            if x < 0 || y < 0 || x >= f.grid.w as i32 || y >= f.grid.h as i32 {
                return fail("federation.origin", format!("({x}, {y}) lies outside the grid"));
            }
        }
        if !(0.0..=1.0).contains(&self.workload.mix) {
            return fail("workload.mix", "must lie in [0, 1]".into());
        }
        if !(self.workload.window_ms > 0.0) {
            return fail("workload.window_ms", "must be positive".into());
        }
        if !(self.deadline.epsilon_ms >= 0.0) || !(self.deadline.mean_comm_delay_ms >= 0.0) {
            return fail("deadline", "constants must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail("alpha", "must lie in [0, 1]".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return fail("ci_level", "must lie in (0, 1)".into());
        }
        if !(self.exec_scale > 0.0) {
            return fail("exec_scale", "must be positive".into());
        }
        Ok(())
    }

    /// Application templates: user-supplied or the built-in four.
    pub fn templates(&self) -> Result<Vec<WorkflowSpec>> {
        match &self.workflows {
            Some(docs) if !docs.is_empty() => docs.iter().cloned().map(WorkflowDoc::into_spec).collect(),
            Some(_) => Err(Error::Config("workflows: must be non-empty when given".into())),
            None => Ok(AppType::ALL.iter().map(|a| builtin_app_with(*a, self.federation.reference_mips)).collect()),
        }
    }

    /// (degree, grid, origin) per topology in the sweep.
    fn topologies(&self) -> Result<Vec<DegreeTopology>> {
        if self.sweep.degrees.is_empty() {
            let g = self.federation.grid;
            let origin = self.federation.origin.unwrap_or(((g.w as i32 - 1) / 2, (g.h as i32 - 1) / 2));
            let (x, y) = origin;
            let degree = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                .iter()
                .filter(|(a, b)| *a >= 0 && *b >= 0 && *a < g.w as i32 && *b < g.h as i32)
                .count() as u32;
            return Ok(vec![(degree, g, origin)]);
        }
        self.sweep
            .degrees
            .iter()
            .map(|d| degree_topology(*d).map(|(g, o)| (*d, g, o)))
            .collect()
    }

    /// Builds the shared simulation context of each topology.
    pub fn contexts(&self) -> Result<Vec<(u32, FogId, Arc<SimContext>)>> {
        let templates = self.templates()?;
        self.topologies()?
            .into_iter()
            .map(|(degree, g, origin)| {
                let topo = build_grid_with(g.w, g.h, self.federation.seed, self.federation.node_count)?;
                let origin_id = topo
                    .fog_at(origin)
                    .ok_or_else(|| Error::Config(format!("origin {origin:?} outside the grid")))?;
                let ctx = SimContext::build(
                    topo,
                    templates.clone(),
                    &self.federation.link.into(),
                    self.federation.bin_width_ms,
                )?;
                Ok((degree, origin_id, Arc::new(ctx)))
            })
            .collect()
    }

    /// Every run of the sweep in (topology, load, method, repetition) order.
    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        let topologies = self.topologies()?;
        let mut out = Vec::new();
        for (t, (degree, _, _)) in topologies.iter().enumerate() {
            for (l, requests) in self.sweep.requests.iter().enumerate() {
                let cell = (t * self.sweep.requests.len() + l) as u32;
                for method in &self.sweep.methods {
                    for rep in 0..self.repetitions {
                        out.push(RunSpec {
                            topology: t,
                            degree: *degree,
                            requests: *requests,
                            method: *method,
                            repetition: rep,
                            seed: run_seed(self.master_seed, cell, rep),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn run_config(&self, spec: &RunSpec, origin: FogId, trace: bool) -> RunConfig {
        RunConfig {
            partition: PartitionConfig { method: spec.method.partition, alpha: self.alpha },
            alloc: AllocConfig {
                method: spec.method.alloc,
                ci_level: self.ci_level,
                baselines_queue_aware: self.baselines_queue_aware,
            },
            deadline: DeadlinePolicy {
                epsilon: self.deadline.epsilon_ms,
                mean_comm_delay: self.deadline.mean_comm_delay_ms,
            },
            workload: WorkloadSpec {
                total_requests: spec.requests,
                mix: self.workload.mix,
                window_ms: self.workload.window_ms,
            },
            origin,
            exec_scale: self.exec_scale,
            trace,
        }
    }
}

/// Result of a sweep: one report per run, in run order, plus traces when
/// requested.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub reports: Vec<SimReport>,
    pub traces: Vec<RunTrace>,
}

/// Runs the whole sweep on up to `parallel` threads. Output order does not
/// depend on the thread count.
pub fn run_scenario(cfg: &ScenarioConfig, parallel: usize, trace: bool) -> Result<SweepOutput> {
    cfg.validate()?;
    let contexts = cfg.contexts()?;
    let runs = cfg.runs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(SimReport, Option<RunTrace>)> = pool.install(|| {
        runs.par_iter()
            .map(|spec| {
                let (_, origin, ctx) = &contexts[spec.topology];
                let rc = cfg.run_config(spec, *origin, trace);
                let outcome = run(ctx, &rc, spec.seed)?;
                let report = SimReport::from_outcome(
                    &cfg.name,
                    &spec.method.label(),
                    spec.requests,
                    cfg.workload.mix,
                    spec.degree,
                    spec.seed,
                    &outcome,
                );
                Ok((report, outcome.trace))
            })
            .collect::<Result<_>>()
    })?;
    let mut reports = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (r, t) in results {
        reports.push(r);
        traces.extend(t);
    }
    Ok(SweepOutput { reports, traces })
}

pub fn write_csv<W: Write>(reports: &[SimReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    if reports.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SimReport>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header '{}', expected '{CSV_HEADER}'", header.join(","))));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Parse(format!("row {}: {e}", i + 2))))
        .collect()
}

/// Difference between two methods in one cell (`a - b`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDelta {
    pub scenario: String,
    pub requests: usize,
    pub mix: f64,
    pub degree: u32,
    pub a: String,
    pub b: String,
    pub meet_rate: Estimate,
    pub avg_makespan_ms: Estimate,
    /// Whether runs were paired by seed.
    pub paired: bool,
}

/// Pairwise method differences within each (scenario, load, mix, degree)
/// cell. Runs sharing a seed are paired; otherwise the two intervals are
/// combined as independent.
pub fn method_deltas(reports: &[SimReport]) -> Result<Vec<MethodDelta>> {
    let cells = aggregate(reports)?;
    type Key = (String, usize, u64, u32);
    let mut groups: BTreeMap<Key, Vec<&CellSummary>> = BTreeMap::new();
    let mut order: Vec<Key> = Vec::new();
    for c in &cells {
        let key = (c.scenario.clone(), c.requests, c.mix.to_bits(), c.degree);
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(c);
    }
    let runs_of = |key: &Key, method: &str| -> BTreeMap<u64, &SimReport> {
        reports
            .iter()
            .filter(|r| {
                r.scenario == key.0 && r.requests == key.1 && r.mix.to_bits() == key.2 && r.degree == key.3 && r.method == method
            })
            .map(|r| (r.seed, r))
            .collect()
    };
    let mut out = Vec::new();
    for key in order {
        let g = &groups[&key];
        for i in 0..g.len() {
            for j in (i + 1)..g.len() {
                let (a, b) = (g[i], g[j]);
                let ra = runs_of(&key, &a.method);
                let rb = runs_of(&key, &b.method);
                let paired = ra.len() == rb.len() && ra.keys().eq(rb.keys());
                let (meet, span) = if paired {
                    let dm: Vec<f64> = ra.iter().map(|(s, r)| r.meet_rate - rb[s].meet_rate).collect();
                    let ds: Vec<f64> = ra.iter().map(|(s, r)| r.avg_makespan_ms - rb[s].avg_makespan_ms).collect();
                    (Estimate::of(&dm)?, Estimate::of(&ds)?)
                } else {
                    let comb = |x: Estimate, y: Estimate| Estimate {
                        mean: x.mean - y.mean,
                        half_width: (x.half_width.powi(2) + y.half_width.powi(2)).sqrt(),
                    };
                    (comb(a.meet_rate, b.meet_rate), comb(a.avg_makespan_ms, b.avg_makespan_ms))
                };
                out.push(MethodDelta {
                    scenario: key.0.clone(),
                    requests: key.1,
                    mix: f64::from_bits(key.2),
                    degree: key.3,
                    a: a.method.clone(),
                    b: b.method.clone(),
                    meet_rate: meet,
                    avg_makespan_ms: span,
                    paired,
                });
            }
        }
    }
    Ok(out)
}

/// Text rendering of cell summaries and method deltas.
pub fn render_report(cells: &[CellSummary], deltas: &[MethodDelta]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<28} {:<18} {:>8} {:>5} {:>6} {:>4}  {:>17}  {:>21}",
        "scenario", "method", "requests", "mix", "degree", "n", "meet rate", "makespan ms"
    );
    for c in cells {
        let _ = writeln!(
            s,
            "{:<28} {:<18} {:>8} {:>5.2} {:>6} {:>4}  {:>7.4} ± {:<7.4}  {:>9.1} ± {:<9.1}",
            c.scenario,
            c.method,
            c.requests,
            c.mix,
            c.degree,
            c.runs,
            c.meet_rate.mean,
            c.meet_rate.half_width,
            c.avg_makespan_ms.mean,
            c.avg_makespan_ms.half_width
        );
    }
    if !deltas.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<28} {:>8} {:>6} {:<37} {:>19}  {:>21}",
            "scenario", "requests", "degree", "difference", "meet rate", "makespan ms"
        );
        for d in deltas {
            let _ = writeln!(
                s,
                "{:<28} {:>8} {:>6} {:<37} {:>+8.4} ± {:<8.4}  {:>+9.1} ± {:<9.1}",
                d.scenario,
                d.requests,
                d.degree,
                format!("{} - {}", d.a, d.b),
                d.meet_rate.mean,
                d.meet_rate.half_width,
                d.avg_makespan_ms.mean,
                d.avg_makespan_ms.half_width
            );
        }
    }
    s
}

pub fn write_summary_csv<W: Write>(cells: &[CellSummary], deltas: &[MethodDelta], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind", "scenario", "method", "requests", "mix", "degree", "runs", "meet_rate", "meet_rate_hw",
        "avg_makespan_ms", "avg_makespan_hw",
    ])?;
    for c in cells {
        w.write_record([
            "cell".to_string(),
            c.scenario.clone(),
            c.method.clone(),
            c.requests.to_string(),
            c.mix.to_string(),
            c.degree.to_string(),
            c.runs.to_string(),
            c.meet_rate.mean.to_string(),
            c.meet_rate.half_width.to_string(),
            c.avg_makespan_ms.mean.to_string(),
            c.avg_makespan_ms.half_width.to_string(),
        ])?;
    }
    for d in deltas {
        w.write_record([
            "delta".to_string(),
            d.scenario.clone(),
            format!("{} - {}", d.a, d.b),
            d.requests.to_string(),
            d.mix.to_string(),
            d.degree.to_string(),
            String::new(),
            d.meet_rate.mean.to_string(),
            d.meet_rate.half_width.to_string(),
            d.avg_makespan_ms.mean.to_string(),
            d.avg_makespan_ms.half_width.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub mod suites {
    //! Built-in experiment suites.

    use super::*;

    use crate::alloc::AllocMethod::{Mcc, Mect, Mr, NoFed};
    use crate::partition::PartitionMethod::{LeastData, MinCut, None as NoPart, ProPart};

    pub const NAMES: [&str; 8] = [
        "partitioning",
        "alloc_workflows",
        "alloc_monolithic",
        "alloc_mixed",
        "makespan_workflows",
        "makespan_monolithic",
        "scaling_workflows",
        "scaling_monolithic",
    ];

    /// Arrival window of the workflow suites (ms).
    pub const WORKFLOW_WINDOW_MS: f64 = 15_000.0;
    /// Arrival window of the monolithic and mixed suites (ms).
    pub const MONOLITHIC_WINDOW_MS: f64 = 10_000.0;

    const WORKFLOW_LOADS: [usize; 4] = [100, 200, 300, 400];
    const MONOLITHIC_LOADS: [usize; 4] = [400, 600, 800, 1000];

    fn partitioners() -> Vec<MethodPair> {
        [NoPart, MinCut, LeastData, ProPart].iter().map(|p| MethodPair::new(*p, Mr)).collect()
    }

    fn allocators(partition: PartitionMethod) -> Vec<MethodPair> {
        [Mr, Mect, Mcc, NoFed].iter().map(|a| MethodPair::new(partition, *a)).collect()
    }

    fn base(name: &str, mix: f64, window_ms: f64, requests: &[usize], degrees: &[u32], methods: Vec<MethodPair>) -> ScenarioConfig {
        ScenarioConfig {
            name: name.to_string(),
            federation: FederationConfig::default(),
            workload: WorkloadConfig { mix, window_ms },
            deadline: DeadlineConfig::default(),
            alpha: default_alpha(),
            ci_level: default_ci_level(),
            baselines_queue_aware: true,
            exec_scale: 1.0,
            repetitions: default_repetitions(),
            master_seed: 2024,
            sweep: SweepConfig { requests: requests.to_vec(), degrees: degrees.to_vec(), methods },
            workflows: None,
        }
    }

    /// Returns the named suite.
    pub fn get(name: &str) -> Result<ScenarioConfig> {
        let cfg = match name {
            "partitioning" | "makespan_workflows" => {
                base(name, 0.0, WORKFLOW_WINDOW_MS, &WORKFLOW_LOADS, &[], partitioners())
            }
            "alloc_workflows" => base(name, 0.0, WORKFLOW_WINDOW_MS, &WORKFLOW_LOADS, &[], allocators(ProPart)),
            "alloc_monolithic" | "makespan_monolithic" => {
                base(name, 1.0, MONOLITHIC_WINDOW_MS, &MONOLITHIC_LOADS, &[], allocators(NoPart))
            }
            "alloc_mixed" => base(name, 0.5, MONOLITHIC_WINDOW_MS, &MONOLITHIC_LOADS, &[], allocators(ProPart)),
            "scaling_workflows" => base(
                name,
                0.0,
                WORKFLOW_WINDOW_MS,
                &WORKFLOW_LOADS,
                &[1, 2, 3, 4],
                vec![MethodPair::new(ProPart, Mr)],
            ),
            "scaling_monolithic" => {
                base(name, 1.0, MONOLITHIC_WINDOW_MS, &[1000], &[1, 2, 3, 4], allocators(NoPart))
            }
            other => return Err(Error::Config(format!("unknown suite '{other}'"))),
        };
        Ok(cfg)
    }

    pub fn all() -> Vec<ScenarioConfig> {
        NAMES.iter().map(|n| get(n).expect("built-in suite")).collect()
    }

    /// Human-readable listing of every suite.
    pub fn listing() -> String {
        let mut s = String::new();
        for cfg in all() {
            let methods: Vec<String> = cfg.sweep.methods.iter().map(MethodPair::label).collect();
            let degrees = if cfg.sweep.degrees.is_empty() {
                "4".to_string()
            } else {
                cfg.sweep.degrees.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
            };
            let loads: Vec<String> = cfg.sweep.requests.iter().map(usize::to_string).collect();
            let _ = writeln!(
                s,
                "{:<26} mix={:<4} loads={{{}}} degrees={{{}}} reps={} methods={{{}}}",
                cfg.name,
                cfg.workload.mix,
                loads.join(","),
                degrees,
                cfg.repetitions,
                methods.join(",")
            );
        }
        s
    }
}
