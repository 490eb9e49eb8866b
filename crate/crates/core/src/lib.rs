//! Probabilistic workflow partitioning and uncertainty-aware allocation for
//! fog federations, with a deterministic discrete-event simulator.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod dist;
pub mod error;
pub mod federation;
pub mod model;
pub mod partition;
pub mod scenario;
pub mod sim;

pub use dist::{CiInterval, LatencyPmf, NormalSpec, PmfSummary};
pub use error::{Error, Result};
pub use federation::{EtcMatrix, EttMatrix, Federation, FederationTopology, FogId, FogSystem, LinkProfile};
pub use model::{AppType, DeadlinePolicy, EdgeSpec, MicroServiceSpec, Payload, Request, VertexId, WorkflowSpec};
pub use partition::{PartitionConfig, PartitionMethod, PartitionPlan};
pub use alloc::{AllocConfig, AllocMethod, AllocationDecision, QueueEstimate};
pub use scenario::{MethodPair, ScenarioConfig};
pub use sim::{RunConfig, SimContext, SimReport, WorkloadSpec};
