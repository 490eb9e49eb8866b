use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{mean_exec_profile, Federation, FederationTopology, FogId, LinkProfile};
use crate::model::{assign_deadlines, AppType, DeadlinePolicy, Payload, Request, VertexId, WorkflowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub total_requests: usize,
    /// Fraction of monolithic requests.
    pub mix: f64,
    pub window_ms: f64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.total_requests == 0 {
            return Err(Error::InvalidParameter("total_requests must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return Err(Error::InvalidParameter(format!("mix must lie in [0, 1], got {}", self.mix)));
        }
        if !(self.window_ms > 0.0) {
            return Err(Error::InvalidParameter(format!("window_ms must be positive, got {}", self.window_ms)));
        }
        Ok(())
    }
}

/// One application in both forms, with the per-vertex mean execution times
/// used for deadlines.
#[derive(Debug, Clone)]
pub struct AppTemplate {
    pub app: AppType,
    pub workflow: WorkflowSpec,
    pub monolithic: WorkflowSpec,
    workflow_means: HashMap<VertexId, f64>,
    monolithic_means: HashMap<VertexId, f64>,
}

/// Federation plus the application templates requests are drawn from.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub federation: Arc<Federation>,
    pub templates: Vec<AppTemplate>,
}

impl SimContext {
    /// Builds ETC/ETT for every template in both forms. Templates are used
    /// in the order given; request `k` draws from them round-robin.
    pub fn build(
        topology: FederationTopology,
        workflows: Vec<WorkflowSpec>,
        link: &LinkProfile,
        bin_width: f64,
    ) -> Result<Self> {
        if workflows.is_empty() {
            return Err(Error::Config("at least one application template is required".into()));
        }
        let monos: Vec<WorkflowSpec> = workflows.iter().map(WorkflowSpec::to_monolithic).collect();
        let federation = Federation::for_workflows(topology, workflows.iter().chain(&monos), link, bin_width)?;
        let means = |w: &WorkflowSpec| -> Result<HashMap<VertexId, f64>> {
            w.vertices.iter().map(|v| Ok((v.id, mean_exec_profile(&federation.etc, &v.kind())?))).collect()
        };
        let templates = workflows
            .into_iter()
            .zip(monos)
            .map(|(workflow, monolithic)| {
                Ok(AppTemplate {
                    app: workflow.vertices[0].app,
                    workflow_means: means(&workflow)?,
                    monolithic_means: means(&monolithic)?,
                    workflow,
                    monolithic,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { federation: Arc::new(federation), templates })
    }

    /// A request for template `t` in the given form arriving at `arrival`.
    pub fn request(
        &self,
        id: u64,
        t: usize,
        monolithic: bool,
        arrival: f64,
        origin: FogId,
        policy: &DeadlinePolicy,
    ) -> Result<Request> {
        let tpl = self
            .templates
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("no application template {t}")))?;
        let (spec, means) =
            if monolithic { (&tpl.monolithic, &tpl.monolithic_means) } else { (&tpl.workflow, &tpl.workflow_means) };
        let mut r = assign_deadlines(spec, arrival, policy, means)?;
        r.id = id;
        r.origin_fog = origin;
        if monolithic {
            r.payload = Payload::Monolithic(spec.clone());
        }
        Ok(r)
    }
}

/// Arrival slot before deadlines are attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalSlot {
    pub time: f64,
    /// Template index.
    pub template: usize,
    pub monolithic: bool,
}

/// Template index of the `k`-th request among `n` templates. Every block of
/// `n` consecutive requests covers each template once, and the rotation
/// between blocks keeps the form split balanced across templates.
pub fn template_of(k: usize, n: usize) -> usize {
    (k + k / n) % n
}

/// Whether the `k`-th request is monolithic: the count of monolithic
/// requests among the first `k` is `floor(k * mix)`.
pub fn is_monolithic(k: usize, mix: f64) -> bool {
    ((k + 1) as f64 * mix).floor() > (k as f64 * mix).floor()
}

/// Arrival times of a Poisson process conditioned on `total` arrivals in the
/// window (sorted uniform order statistics), with templates and forms
/// interleaved deterministically.
pub fn arrival_plan(spec: &WorkloadSpec, templates: usize, seed: u64) -> Result<Vec<ArrivalSlot>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times: Vec<f64> = (0..spec.total_requests).map(|_| rng.random::<f64>() * spec.window_ms).collect();
    times.sort_by(f64::total_cmp);
    Ok(times
        .into_iter()
        .enumerate()
        .map(|(k, time)| ArrivalSlot { time, template: template_of(k, templates), monolithic: is_monolithic(k, spec.mix) })
        .collect())
}

pub fn generate_workload(
    spec: &WorkloadSpec,
    seed: u64,
    ctx: &SimContext,
    policy: &DeadlinePolicy,
    origin: FogId,
) -> Result<Vec<Request>> {
    arrival_plan(spec, ctx.templates.len(), seed)?
        .into_iter()
        .enumerate()
        .map(|(k, s)| ctx.request(k as u64, s.template, s.monolithic, s.time, origin, policy))
        .collect()
}
