//! Deterministic discrete-event simulation of a fog federation.

mod engine;
pub mod report;
pub mod workload;

use serde::{Deserialize, Serialize};

use crate::alloc::AllocConfig;
use crate::error::{Error, Result};
use crate::federation::FogId;
use crate::model::{DeadlinePolicy, Request};
use crate::partition::PartitionConfig;

pub use engine::{Completion, EventKind, PlanRecord, RunOutcome, RunTrace, SimEvent};
pub use report::{aggregate, CellSummary, SimReport};
pub use workload::{arrival_plan, generate_workload, AppTemplate, ArrivalSlot, SimContext, WorkloadSpec};

/// Everything a single run needs besides the shared context and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub partition: PartitionConfig,
    pub alloc: AllocConfig,
    pub deadline: DeadlinePolicy,
    pub workload: WorkloadSpec,
    /// Gateway receiving every request.
    pub origin: FogId,
    /// Multiplier on sampled execution times; 1.0 means the estimates are exact.
    pub exec_scale: f64,
    pub trace: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.partition.validate()?;
        self.workload.validate()?;
        if !(self.exec_scale > 0.0) {
            return Err(Error::InvalidParameter(format!("exec_scale must be positive, got {}", self.exec_scale)));
        }
        if !(self.alloc.ci_level > 0.0 && self.alloc.ci_level < 1.0) {
            return Err(Error::InvalidParameter(format!("ci_level must lie in (0, 1), got {}", self.alloc.ci_level)));
        }
        if !(self.deadline.epsilon >= 0.0 && self.deadline.mean_comm_delay >= 0.0) {
            return Err(Error::InvalidParameter("deadline constants must be non-negative".into()));
        }
        Ok(())
    }
}

/// Generates the workload for `seed` and simulates it to quiescence.
pub fn run(ctx: &SimContext, cfg: &RunConfig, seed: u64) -> Result<RunOutcome> {
    cfg.validate()?;
    ctx.federation.topology.fog(cfg.origin)?;
    let requests = generate_workload(&cfg.workload, seed, ctx, &cfg.deadline, cfg.origin)?;
    run_requests(ctx, cfg, requests, seed)
}

/// Simulates an explicit request list.
pub fn run_requests(ctx: &SimContext, cfg: &RunConfig, requests: Vec<Request>, seed: u64) -> Result<RunOutcome> {
    let mut engine = engine::Engine::new(ctx, cfg);
    engine.load(requests, seed)?;
    engine.run()
}
