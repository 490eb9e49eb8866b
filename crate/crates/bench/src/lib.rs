//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use fogfed::dist::{LatencyPmf, NormalSpec, DEFAULT_TRUNCATION};
use fogfed::scenario::{suites, RunSpec};
use fogfed::sim::SimContext;
use fogfed::{FogId, ScenarioConfig};

/// Execution-time PMF at 1 ms resolution.
pub fn pmf(mean: f64, std_dev: f64) -> LatencyPmf {
    LatencyPmf::from_normal(NormalSpec::new(mean, std_dev), 1.0, DEFAULT_TRUNCATION).expect("valid normal")
}

/// One run of a built-in suite, restricted to `requests` and the first
/// method, with its prepared context.
pub struct SuiteRun {
    pub config: ScenarioConfig,
    pub spec: RunSpec,
    pub origin: FogId,
    pub context: Arc<SimContext>,
}

pub fn suite_run(name: &str, requests: usize) -> SuiteRun {
    let mut config = suites::get(name).expect("built-in suite");
    config.sweep.requests = vec![requests];
    config.sweep.methods.truncate(1);
    config.repetitions = 1;
    let (_, origin, context) = config.contexts().expect("contexts").swap_remove(0);
    let spec = config.runs().expect("runs").swap_remove(0);
    SuiteRun { config, spec, origin, context }
}
