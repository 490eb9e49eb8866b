//! Resource allocation: the maximum-probability allocator with its
//! confidence-interval test, and the MECT, MCC and no-federation baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{ci_disjoint, CiInterval, PmfSummary};
use crate::error::{Error, Result};
use crate::federation::{Federation, FogId};
use crate::partition::{Partition, PartitionPlan};
use crate::model::Request;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocMethod {
    Mr,
    Mect,
    Mcc,
    #[serde(alias = "no_federation", alias = "nofederation")]
    NoFed,
}

impl AllocMethod {
    pub const ALL: [AllocMethod; 4] = [AllocMethod::Mr, AllocMethod::Mect, AllocMethod::Mcc, AllocMethod::NoFed];

    pub fn label(self) -> &'static str {
        match self {
            AllocMethod::Mr => "mr",
            AllocMethod::Mect => "mect",
            AllocMethod::Mcc => "mcc",
            AllocMethod::NoFed => "nofed",
        }
    }
}

impl fmt::Display for AllocMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AllocMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mr" | "maxprob" => Ok(AllocMethod::Mr),
            "mect" => Ok(AllocMethod::Mect),
            "mcc" => Ok(AllocMethod::Mcc),
            "nofed" | "nofederation" => Ok(AllocMethod::NoFed),
            other => Err(Error::InvalidArgument(format!("unknown allocation method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionReason {
    /// No neighbor to consider.
    LocalDefault,
    /// No neighbor beats the local on-time probability.
    LocalHigherP,
    /// Neighbors beat the local probability but every one's interval overlaps.
    LocalCiOverlap,
    RemoteCiDisjoint,
    ForcedLocalPinned,
    /// Baselines: best expected completion (MECT) or certainty (MCC).
    BestEstimate,
    /// MCC: no fog has positive certainty.
    NoPositiveCertainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub fog: FogId,
    /// On-time probability (MR) or NaN for mean-based methods.
    pub p: f64,
    pub ci: Option<CiInterval>,
    pub end_to_end: Option<PmfSummary>,
    /// Expected completion time (ms) including queue wait.
    pub expected_completion: f64,
    pub overlap_blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDecision {
    pub request_id: u64,
    pub partition: usize,
    pub local: FogId,
    pub chosen: FogId,
    pub reason: DecisionReason,
    /// Local fog first, then neighbors by id.
    pub candidate_log: Vec<CandidateRecord>,
    /// Fogs of the improving set in the order they were examined.
    pub examined: Vec<FogId>,
}

impl AllocationDecision {
    pub fn record(&self, fog: FogId) -> Option<&CandidateRecord> {
        self.candidate_log.iter().find(|c| c.fog == fog)
    }
}

/// Expected queue wait (ms) per fog index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueueEstimate {
    pub waits: Vec<f64>,
}

impl QueueEstimate {
    pub fn zero(fogs: usize) -> Self {
        Self { waits: vec![0.0; fogs] }
    }

    pub fn wait(&self, fog: FogId) -> f64 {
        self.waits.get(fog.index()).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocConfig {
    pub method: AllocMethod,
    pub ci_level: f64,
    /// Whether MECT and MCC add the queue wait to their completion estimate.
    pub baselines_queue_aware: bool,
}

impl Default for AllocConfig {
    fn default() -> Self {
        Self { method: AllocMethod::Mr, ci_level: 0.95, baselines_queue_aware: true }
    }
}

fn candidates(fed: &Federation, local: FogId) -> Result<Vec<FogId>> {
    let mut out = vec![local];
    out.extend_from_slice(fed.topology.neighbors(local)?);
    Ok(out)
}

/// Maximum-probability allocation of every partition in precedence order.
///
/// A partition's end-to-end distribution on fog `f` is its ETC chain on `f`
/// plus the transfer of its input from the fog chosen for the previous
/// partition (the local fog for the first), delayed by `f`'s queue wait. A
/// neighbor wins only if it has a higher on-time probability than the local
/// fog and its confidence interval does not overlap the local one.
pub fn allocate_mr(
    plan: &PartitionPlan,
    request: &Request,
    local: FogId,
    fed: &Federation,
    queues: &QueueEstimate,
    ci_level: f64,
) -> Result<Vec<AllocationDecision>> {
    let mut out = Vec::with_capacity(plan.len());
    let mut prev = local;
    for (k, part) in plan.partitions.iter().enumerate() {
        let deadline = request.sub_deadline(&part.vertices);
        let d = mr_partition(part, k, request.id, local, prev, fed, queues, deadline, ci_level)?;
        prev = d.chosen;
        out.push(d);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn mr_partition(
    part: &Partition,
    index: usize,
    request_id: u64,
    local: FogId,
    prev: FogId,
    fed: &Federation,
    queues: &QueueEstimate,
    deadline: f64,
    ci_level: f64,
) -> Result<AllocationDecision> {
    let fogs = if part.must_run_local { vec![local] } else { candidates(fed, local)? };
    let mut log = Vec::with_capacity(fogs.len());
    for &fog in &fogs {
        let hop = fed.hop(prev, fog)?;
        let e2e = fed.end_to_end(&part.workflow, fog, hop)?;
        let wait = queues.wait(fog);
        let shifted = e2e.shift(wait);
        log.push(CandidateRecord {
            fog,
            p: shifted.prob_on_time(deadline),
            ci: Some(shifted.central_ci(ci_level)),
            end_to_end: Some(shifted.summary(ci_level)),
            expected_completion: shifted.mean(),
            overlap_blocked: false,
        });
    }
    let mut decision = AllocationDecision {
        request_id,
        partition: index,
        local,
        chosen: local,
        reason: DecisionReason::LocalDefault,
        candidate_log: Vec::new(),
        examined: Vec::new(),
    };
    if part.must_run_local {
        decision.reason = DecisionReason::ForcedLocalPinned;
        decision.candidate_log = log;
        return Ok(decision);
    }
    if fogs.len() == 1 {
        decision.candidate_log = log;
        return Ok(decision);
    }
    let p_local = log[0].p;
    let local_ci = log[0].ci.expect("local interval");
    let mut improving: Vec<usize> = (1..log.len()).filter(|&i| log[i].p > p_local).collect();
    improving.sort_by(|&a, &b| log[b].p.total_cmp(&log[a].p).then(log[a].fog.cmp(&log[b].fog)));
    decision.reason = DecisionReason::LocalHigherP;
    for i in improving {
        decision.examined.push(log[i].fog);
        if ci_disjoint(&log[i].ci.expect("interval"), &local_ci)? {
            decision.chosen = log[i].fog;
            decision.reason = DecisionReason::RemoteCiDisjoint;
            break;
        }
        log[i].overlap_blocked = true;
        decision.reason = DecisionReason::LocalCiOverlap;
    }
    decision.candidate_log = log;
    Ok(decision)
}

fn mean_log(
    part: &Partition,
    local: FogId,
    fed: &Federation,
    queues: &QueueEstimate,
    queue_aware: bool,
) -> Result<Vec<CandidateRecord>> {
    let fogs = if part.must_run_local { vec![local] } else { candidates(fed, local)? };
    fogs.into_iter()
        .map(|fog| {
            let wait = if queue_aware { queues.wait(fog) } else { 0.0 };
            Ok(CandidateRecord {
                fog,
                p: f64::NAN,
                ci: None,
                end_to_end: None,
                expected_completion: wait + fed.chain_mean(&part.workflow, fog)?,
                overlap_blocked: false,
            })
        })
        .collect()
}

fn local_decision(request_id: u64, index: usize, local: FogId, reason: DecisionReason, log: Vec<CandidateRecord>) -> AllocationDecision {
    AllocationDecision {
        request_id,
        partition: index,
        local,
        chosen: local,
        reason,
        candidate_log: log,
        examined: Vec::new(),
    }
}

/// Minimum expected completion time: queue wait plus the sum of ETC means.
/// Ties go to the local fog, then the lowest id.
pub fn allocate_mect(
    part: &Partition,
    index: usize,
    request_id: u64,
    local: FogId,
    fed: &Federation,
    queues: &QueueEstimate,
    queue_aware: bool,
) -> Result<AllocationDecision> {
    let log = mean_log(part, local, fed, queues, queue_aware)?;
    if part.must_run_local {
        return Ok(local_decision(request_id, index, local, DecisionReason::ForcedLocalPinned, log));
    }
    let mut best = 0;
    for i in 1..log.len() {
        if log[i].expected_completion < log[best].expected_completion {
            best = i;
        }
    }
    let mut d = local_decision(request_id, index, local, DecisionReason::BestEstimate, log);
    d.chosen = d.candidate_log[best].fog;
    Ok(d)
}

/// Maximum completion certainty: the fog with the largest positive margin
/// between deadline and expected completion; local when none is positive.
#[allow(clippy::too_many_arguments)]
pub fn allocate_mcc(
    part: &Partition,
    index: usize,
    request_id: u64,
    local: FogId,
    fed: &Federation,
    queues: &QueueEstimate,
    deadline: f64,
    queue_aware: bool,
) -> Result<AllocationDecision> {
    let log = mean_log(part, local, fed, queues, queue_aware)?;
    if part.must_run_local {
        return Ok(local_decision(request_id, index, local, DecisionReason::ForcedLocalPinned, log));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in log.iter().enumerate() {
        let certainty = deadline - c.expected_completion;
        if certainty > 0.0 && best.is_none_or(|(_, b)| certainty > b) {
            best = Some((i, certainty));
        }
    }
    let Some((i, _)) = best else {
        return Ok(local_decision(request_id, index, local, DecisionReason::NoPositiveCertainty, log));
    };
    let mut d = local_decision(request_id, index, local, DecisionReason::BestEstimate, log);
    d.chosen = d.candidate_log[i].fog;
    Ok(d)
}

pub fn allocate_no_federation(
    part: &Partition,
    index: usize,
    request_id: u64,
    local: FogId,
) -> AllocationDecision {
    let reason = if part.must_run_local { DecisionReason::ForcedLocalPinned } else { DecisionReason::LocalDefault };
    let log = vec![CandidateRecord {
        fog: local,
        p: f64::NAN,
        ci: None,
        end_to_end: None,
        expected_completion: f64::NAN,
        overlap_blocked: false,
    }];
    local_decision(request_id, index, local, reason, log)
}

/// Allocates every partition of `plan` with the configured method.
pub fn allocate(
    plan: &PartitionPlan,
    request: &Request,
    local: FogId,
    fed: &Federation,
    queues: &QueueEstimate,
    cfg: &AllocConfig,
) -> Result<Vec<AllocationDecision>> {
    match cfg.method {
        AllocMethod::Mr => allocate_mr(plan, request, local, fed, queues, cfg.ci_level),
        AllocMethod::Mect => plan
            .partitions
            .iter()
            .enumerate()
            .map(|(k, p)| allocate_mect(p, k, request.id, local, fed, queues, cfg.baselines_queue_aware))
            .collect(),
        AllocMethod::Mcc => plan
            .partitions
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let deadline = request.sub_deadline(&p.vertices);
                allocate_mcc(p, k, request.id, local, fed, queues, deadline, cfg.baselines_queue_aware)
            })
            .collect(),
        AllocMethod::NoFed => Ok(plan
            .partitions
            .iter()
            .enumerate()
            .map(|(k, p)| allocate_no_federation(p, k, request.id, local))
            .collect()),
    }
}

/// Re-checks the contract of a maximum-probability decision from its log:
/// remote choices need a higher probability and a disjoint interval, the
/// examined order is strictly descending, pinned partitions stay local and
/// overlap-blocked candidates were not chosen. Returns a description of the
/// first violation.
pub fn check_mr_decision(d: &AllocationDecision) -> std::result::Result<(), String> {
    let local = d.record(d.local).ok_or("local fog missing from log")?;
    match d.reason {
        DecisionReason::RemoteCiDisjoint => {
            let remote = d.record(d.chosen).ok_or("chosen fog missing from log")?;
            if !(remote.p > local.p) {
                return Err(format!("remote P {} not above local P {}", remote.p, local.p));
            }
            let (a, b) = (remote.ci.ok_or("no remote CI")?, local.ci.ok_or("no local CI")?);
            if !(a.hi < b.lo || b.hi < a.lo) {
                return Err(format!("remote CI {a:?} overlaps local CI {b:?}"));
            }
            if d.chosen == d.local {
                return Err("remote reason with local choice".into());
            }
        }
        _ => {
            if d.chosen != d.local {
                return Err(format!("{:?} decision chose a remote fog", d.reason));
            }
        }
    }
    for c in &d.candidate_log {
        if c.overlap_blocked && c.fog == d.chosen {
            return Err("overlap-blocked candidate was chosen".into());
        }
    }
    let ps: Vec<f64> = d.examined.iter().map(|f| d.record(*f).map_or(f64::NAN, |c| c.p)).collect();
    if ps.windows(2).any(|w| w[0] < w[1]) {
        return Err(format!("examined order not descending: {ps:?}"));
    }
    if d.reason == DecisionReason::LocalHigherP
        && d.candidate_log.iter().any(|c| c.fog != d.local && c.p > local.p)
    {
        return Err("local-higher-P decision with a better neighbor".into());
    }
    Ok(())
}
