use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alloc::{allocate, AllocationDecision, QueueEstimate};
use crate::error::{Error, Result};
use crate::federation::{Federation, FogId};
use crate::model::Request;
use crate::partition::{partition, EtcEstimator, PartitionPlan};

use super::workload::SimContext;
use super::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Arrival { job: usize },
    /// Input data of a service instance reached its fog.
    TransferDone { job: usize, vertex: usize },
    ExecDone { job: usize, vertex: usize, fog: FogId, node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the earliest event.
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeState {
    Idle,
    Busy { job: usize, vertex: usize, start: f64, until: f64, mean: f64 },
}

#[derive(Debug)]
struct FogRuntime {
    nodes: Vec<NodeState>,
    ready: VecDeque<(usize, usize)>,
    /// Mean execution time of assigned instances that have not started.
    pending_mean: f64,
}

/// Per-request execution state; vertices are indexed by their position in
/// the request's workflow.
struct Job {
    request: Request,
    kinds: Vec<String>,
    succ: Vec<Vec<(usize, usize)>>,
    preds: Vec<Vec<usize>>,
    fog: Vec<FogId>,
    mean: Vec<f64>,
    missing: Vec<u32>,
    started: Vec<bool>,
    done: Vec<bool>,
    remaining: usize,
    finish: f64,
    u_exec: Vec<f64>,
    u_edge: Vec<f64>,
    u_input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completion {
    pub request_id: u64,
    pub arrival: f64,
    pub finish: f64,
    pub deadline: f64,
    pub monolithic: bool,
}

impl Completion {
    pub fn makespan(&self) -> f64 {
        self.finish - self.arrival
    }

    pub fn met(&self) -> bool {
        self.finish <= self.deadline
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRecord {
    pub request_id: u64,
    pub plan: PartitionPlan,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunTrace {
    pub plans: Vec<PlanRecord>,
    pub decisions: Vec<AllocationDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub completions: Vec<Completion>,
    pub partitions: usize,
    pub remote_partitions: usize,
    pub trace: Option<RunTrace>,
}

pub(crate) struct Engine<'a> {
    fed: &'a Federation,
    cfg: &'a RunConfig,
    fogs: Vec<FogRuntime>,
    jobs: Vec<Job>,
    events: BinaryHeap<SimEvent>,
    seq: u64,
    now: f64,
    completions: Vec<Completion>,
    partitions: usize,
    remote_partitions: usize,
    trace: Option<RunTrace>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(ctx: &'a SimContext, cfg: &'a RunConfig) -> Self {
        let fed = ctx.federation.as_ref();
        let fogs = fed
            .topology
            .fogs()
            .iter()
            .map(|f| FogRuntime {
                nodes: vec![NodeState::Idle; f.node_count as usize],
                ready: VecDeque::new(),
                pending_mean: 0.0,
            })
            .collect();
        Self {
            fed,
            cfg,
            fogs,
            jobs: Vec::new(),
            events: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            completions: Vec::new(),
            partitions: 0,
            remote_partitions: 0,
            trace: cfg.trace.then(RunTrace::default),
        }
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.events.push(SimEvent { time, seq: self.seq, kind });
        self.seq += 1;
    }

    /// Loads requests; per-request uniforms come from a stream keyed by
    /// `(seed, request id)`, so a request sees the same draws under every
    /// method.
    pub(crate) fn load(&mut self, requests: Vec<Request>, seed: u64) -> Result<()> {
        for request in requests {
            self.fed.topology.fog(request.origin_fog)?;
            let spec = request.spec();
            let n = spec.len();
            let index = |id| spec.vertices.iter().position(|v| v.id == id).expect("edge endpoint");
            let mut succ = vec![Vec::new(); n];
            let mut preds = vec![Vec::new(); n];
            for (k, e) in spec.edges.iter().enumerate() {
                let (a, b) = (index(e.from), index(e.to));
                succ[a].push((b, k));
                preds[b].push(a);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(request.id.wrapping_add(1));
            let u_exec = (0..n).map(|_| rng.random::<f64>()).collect();
            let u_edge = (0..spec.edges.len()).map(|_| rng.random::<f64>()).collect();
            let u_input = (0..n).map(|_| rng.random::<f64>()).collect();
            let job = Job {
                kinds: spec.vertices.iter().map(|v| v.kind()).collect(),
                missing: preds.iter().map(|p| p.len() as u32).collect(),
                succ,
                preds,
                fog: vec![request.origin_fog; n],
                mean: vec![0.0; n],
                started: vec![false; n],
                done: vec![false; n],
                remaining: n,
                finish: request.arrival_time,
                u_exec,
                u_edge,
                u_input,
                request,
            };
            let idx = self.jobs.len();
            let at = job.request.arrival_time;
            self.jobs.push(job);
            self.push(at, EventKind::Arrival { job: idx });
        }
        Ok(())
    }

    pub(crate) fn run(mut self) -> Result<RunOutcome> {
        while let Some(ev) = self.events.pop() {
            assert!(ev.time >= self.now, "event time went backwards: {} < {}", ev.time, self.now);
            self.now = ev.time;
            match ev.kind {
                EventKind::Arrival { job } => self.arrive(job)?,
                EventKind::TransferDone { job, vertex } => {
                    let j = &mut self.jobs[job];
                    j.missing[vertex] -= 1;
                    if j.missing[vertex] == 0 {
                        let fog = j.fog[vertex];
                        self.enqueue(job, vertex, fog);
                    }
                }
                EventKind::ExecDone { job, vertex, fog, node } => self.finish(job, vertex, fog, node)?,
            }
        }
        if let Some(j) = self.jobs.iter().find(|j| j.remaining > 0) {
            return Err(Error::InvalidArgument(format!("request {} never completed", j.request.id)));
        }
        self.completions.sort_by_key(|c| c.request_id);
        Ok(RunOutcome {
            completions: self.completions,
            partitions: self.partitions,
            remote_partitions: self.remote_partitions,
            trace: self.trace,
        })
    }

    /// Expected wait per fog: mean work of every instance the gateways have
    /// committed to the fog but not started, plus the mean remaining work of
    /// running instances, divided by the node count.
    pub(crate) fn queue_estimate(&self) -> QueueEstimate {
        let waits = self
            .fogs
            .iter()
            .map(|f| {
                let running: f64 = f
                    .nodes
                    .iter()
                    .map(|n| match n {
                        NodeState::Busy { start, mean, .. } => (mean - (self.now - start)).max(0.0),
                        NodeState::Idle => 0.0,
                    })
                    .sum();
                (f.pending_mean.max(0.0) + running) / f.nodes.len() as f64
            })
            .collect();
        QueueEstimate { waits }
    }

    fn arrive(&mut self, job: usize) -> Result<()> {
        let queues = self.queue_estimate();
        let request = &self.jobs[job].request;
        let origin = request.origin_fog;
        let spec = request.spec();
        let est = EtcEstimator::new(self.fed, origin, &queues.waits)?;
        let plan = partition(spec, request, &self.cfg.partition, &est)?;
        let decisions = allocate(&plan, request, origin, self.fed, &queues, &self.cfg.alloc)?;

        let j = &mut self.jobs[job];
        for (p, d) in plan.partitions.iter().zip(&decisions) {
            self.partitions += 1;
            if d.chosen != origin {
                self.remote_partitions += 1;
            }
            for vid in &p.vertices {
                let i = j.request.spec().vertices.iter().position(|v| v.id == *vid).expect("plan vertex");
                j.fog[i] = d.chosen;
            }
        }
        for i in 0..j.kinds.len() {
            j.mean[i] = self.fed.etc.mean(&j.kinds[i], j.fog[i])?;
            self.fogs[j.fog[i].index()].pending_mean += j.mean[i];
        }
        let mut ready = Vec::new();
        let mut transfers = Vec::new();
        for i in 0..j.kinds.len() {
            if !j.preds[i].is_empty() {
                continue;
            }
            let fog = j.fog[i];
            if fog == origin {
                ready.push((i, fog));
            } else {
                let hop = self.fed.hop(origin, fog)?;
                let d = self.fed.ett.get(&j.kinds[i], fog, hop)?.sample_at(j.u_input[i]);
                j.missing[i] += 1;
                transfers.push((self.now + d, i));
            }
        }
        if let Some(t) = self.trace.as_mut() {
            t.plans.push(PlanRecord { request_id: j.request.id, plan });
            t.decisions.extend(decisions);
        }
        for (i, fog) in ready {
            self.enqueue(job, i, fog);
        }
        for (at, i) in transfers {
            self.push(at, EventKind::TransferDone { job, vertex: i });
        }
        Ok(())
    }

    fn enqueue(&mut self, job: usize, vertex: usize, fog: FogId) {
        self.fogs[fog.index()].ready.push_back((job, vertex));
        self.dispatch(fog);
    }

    fn dispatch(&mut self, fog: FogId) {
        loop {
            let f = &mut self.fogs[fog.index()];
            let Some(node) = f.nodes.iter().position(|n| *n == NodeState::Idle) else { return };
            let Some((job, vertex)) = f.ready.pop_front() else { return };
            let j = &mut self.jobs[job];
            assert!(
                j.missing[vertex] == 0 && j.preds[vertex].iter().all(|p| j.done[*p]),
                "instance started before its inputs were available"
            );
            assert!(!j.started[vertex], "instance started twice");
            j.started[vertex] = true;
            let pmf = self.fed.etc.get(&j.kinds[vertex], fog).expect("ETC entry checked at arrival");
            let duration = pmf.sample_at(j.u_exec[vertex]) * self.cfg.exec_scale;
            let until = self.now + duration;
            let mean = j.mean[vertex];
            f.pending_mean -= mean;
            f.nodes[node] = NodeState::Busy { job, vertex, start: self.now, until, mean };
            self.push(until, EventKind::ExecDone { job, vertex, fog, node });
        }
    }

    fn finish(&mut self, job: usize, vertex: usize, fog: FogId, node: usize) -> Result<()> {
        let slot = &mut self.fogs[fog.index()].nodes[node];
        match *slot {
            NodeState::Busy { job: bj, vertex: bv, until, .. } => {
                assert!(bj == job && bv == vertex, "node ran two instances at once");
                assert!(until == self.now, "completion at the wrong time");
            }
            NodeState::Idle => panic!("completion on an idle node"),
        }
        *slot = NodeState::Idle;

        let j = &mut self.jobs[job];
        j.done[vertex] = true;
        j.remaining -= 1;
        j.finish = j.finish.max(self.now);
        let mut local_ready = Vec::new();
        let mut transfers = Vec::new();
        for &(s, edge) in &j.succ[vertex] {
            let to = j.fog[s];
            if to == fog {
                j.missing[s] -= 1;
                if j.missing[s] == 0 {
                    local_ready.push(s);
                }
            } else {
                let hop = self.fed.hop(fog, to)?;
                let d = self.fed.ett.get(&j.kinds[s], to, hop)?.sample_at(j.u_edge[edge]);
                transfers.push((self.now + d, s));
            }
        }
        if j.remaining == 0 {
            self.completions.push(Completion {
                request_id: j.request.id,
                arrival: j.request.arrival_time,
                finish: j.finish,
                deadline: j.request.workflow_deadline,
                monolithic: j.request.payload.is_monolithic(),
            });
        }
        for (at, s) in transfers {
            self.push(at, EventKind::TransferDone { job, vertex: s });
        }
        for s in local_ready {
            self.fogs[fog.index()].ready.push_back((job, s));
        }
        self.dispatch(fog);
        Ok(())
    }
}
