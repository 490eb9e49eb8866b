mod support;

use std::collections::{BTreeMap, HashMap};

use fogfed::alloc::{allocate_mcc, allocate_mect, allocate_mr, DecisionReason};
use fogfed::dist::NormalSpec;
use fogfed::federation::{build_etc, build_grid, hop_distance, Federation, FogId, LinkProfile};
use fogfed::model::{assign_deadlines, builtin_app, AppType, DeadlinePolicy, WorkflowSpec};
use fogfed::partition::{
    baseline_least_data, baseline_mincut, no_partition, propart, PartitionConfig, PartitionMethod, SuccessEstimator,
};
use fogfed::{QueueEstimate, Request};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracles::random_dag;

fn app() -> impl Strategy<Value = AppType> {
    prop::sample::select(AppType::ALL.to_vec())
}

fn means(w: &WorkflowSpec, e: f64) -> HashMap<u32, f64> {
    w.vertices.iter().map(|v| (v.id, e * (1.0 + v.id as f64))).collect()
}

/// Deterministic stand-in for the ETC estimator: a fixed probability per
/// (vertex set, fog), derived from a hash so that any split may go either way.
struct HashEstimator {
    fogs: Vec<FogId>,
    salt: u64,
}

impl SuccessEstimator for HashEstimator {
    fn local(&self) -> FogId {
        self.fogs[0]
    }
    fn candidates(&self) -> &[FogId] {
        &self.fogs
    }
    fn success(&self, part: &WorkflowSpec, fog: FogId, _deadline: f64) -> fogfed::Result<f64> {
        let mut h = self.salt ^ (fog.0 as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for v in &part.vertices {
            h = (h ^ v.id as u64).wrapping_mul(0x1000_0000_01b3);
        }
        Ok((h >> 11) as f64 / (1u64 << 53) as f64)
    }
}

fn request_for(w: &WorkflowSpec) -> Request {
    assign_deadlines(w, 0.0, &DeadlinePolicy::default(), &means(w, 100.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deadlines_are_translation_equivariant(a in app(), arrival in 0.0..1e6f64, shift in 0.0..1e5f64, e in 0.0..500.0f64) {
        let w = builtin_app(a);
        let policy = DeadlinePolicy::default();
        let r0 = assign_deadlines(&w, arrival, &policy, &means(&w, e)).unwrap();
        let r1 = assign_deadlines(&w, arrival + shift, &policy, &means(&w, e)).unwrap();
        prop_assert!((r1.workflow_deadline - r0.workflow_deadline - shift).abs() < 1e-6);
        for (id, d) in &r0.per_service_deadlines {
            prop_assert!((r1.per_service_deadlines[id] - d - shift).abs() < 1e-6);
            prop_assert!(*d >= arrival);
        }
        prop_assert!(r0.workflow_deadline > arrival);
        let expected: f64 = w.vertices.iter().map(|v| e * (1.0 + v.id as f64) + policy.epsilon + policy.mean_comm_delay).sum();
        prop_assert!((r0.relative_deadline() - expected).abs() < 1e-6);
    }

    #[test]
    fn monolithic_form_sums_work(a in app()) {
        let w = builtin_app(a);
        let m = w.to_monolithic();
        prop_assert_eq!(m.vertices.len(), 1);
        let mean: f64 = w.vertices.iter().map(|v| v.work.mean).sum();
        let var: f64 = w.vertices.iter().map(|v| v.work.std_dev.powi(2)).sum();
        prop_assert!((m.vertices[0].work.mean - mean).abs() < 1e-6 * mean);
        prop_assert!((m.vertices[0].work.std_dev.powi(2) - var).abs() < 1e-6 * var.max(1e-12));
        prop_assert_eq!(m.vertices[0].location_pinned, w.vertices.iter().any(|v| v.location_pinned));
    }

    #[test]
    fn grid_is_deterministic_and_in_range(w in 1u32..5, h in 1u32..5, seed in any::<u64>()) {
        let a = build_grid(w, h, seed).unwrap();
        prop_assert_eq!(&a, &build_grid(w, h, seed).unwrap());
        for f in a.fogs() {
            prop_assert!((1500.0..=2500.0).contains(&f.node_mips));
            prop_assert_eq!(f.node_count, 8);
        }
        for x in a.ids() {
            for y in a.ids() {
                let d = hop_distance(&a, x, y).unwrap();
                prop_assert_eq!(d, hop_distance(&a, y, x).unwrap());
                prop_assert_eq!(d == 0, x == y);
                for z in a.ids() {
                    prop_assert!(d <= hop_distance(&a, x, z).unwrap() + hop_distance(&a, z, y).unwrap());
                }
            }
            for n in a.neighbors(x).unwrap() {
                prop_assert_eq!(hop_distance(&a, x, *n).unwrap(), 1);
            }
        }
    }

    #[test]
    fn etc_mean_decreases_with_speed(seed in any::<u64>(), mean in 100.0..5000.0f64, cv in 0.0..0.3f64) {
        let topo = build_grid(3, 3, seed).unwrap();
        let mut profiles = BTreeMap::new();
        profiles.insert("x/y".to_string(), NormalSpec::new(mean, mean * cv));
        let etc = build_etc(&topo, &profiles, 1.0).unwrap();
        let mut rows: Vec<(f64, f64)> = topo.fogs().iter().map(|f| (f.node_mips, etc.mean("x/y", f.id).unwrap())).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in rows.windows(2) {
            if pair[1].0 - pair[0].0 > 50.0 {
                prop_assert!(pair[1].1 < pair[0].1, "{:?}", pair);
            }
        }
    }

    #[test]
    fn baseline_plans_tile_and_respect_precedence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_dag(&mut rng, 9);
        for plan in [no_partition(&w).unwrap(), baseline_mincut(&w).unwrap(), baseline_least_data(&w).unwrap()] {
            plan.check(&w).unwrap();
            prop_assert!(plan.len() <= 2);
        }
    }

    #[test]
    fn propart_trace_obeys_improvement_rule(seed in any::<u64>(), alpha in 0.0..=1.0f64, salt in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_dag(&mut rng, 8);
        let request = request_for(&w);
        let est = HashEstimator { fogs: vec![FogId(0), FogId(1), FogId(2)], salt };
        let cfg = PartitionConfig { method: PartitionMethod::ProPart, alpha };
        let plan = propart(&w, &request, &cfg, &est).unwrap();
        plan.check(&w).unwrap();
        let root = plan.root_p.unwrap();
        if root >= alpha {
            prop_assert_eq!(plan.len(), 1);
            prop_assert!(plan.trace.is_empty());
        }
        for d in &plan.trace {
            prop_assert_eq!(d.accepted, d.child_p[0] > d.parent_p && d.child_p[1] > d.parent_p);
        }
        let accepted = plan.trace.iter().filter(|d| d.accepted).count();
        prop_assert_eq!(plan.len(), accepted + 1);
    }
}

fn small_federation(seed: u64) -> (Federation, Vec<WorkflowSpec>) {
    let apps: Vec<WorkflowSpec> = [AppType::Oil, AppType::Aie].iter().map(|a| builtin_app(*a).to_monolithic()).collect();
    let fed = Federation::for_workflows(build_grid(3, 3, seed).unwrap(), &apps, &LinkProfile::default(), 1.0).unwrap();
    (fed, apps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mr_stays_local_when_no_neighbor_is_better(seed in any::<u64>(), waits in prop::collection::vec(0.0..400.0f64, 9)) {
        let (fed, apps) = small_federation(seed);
        let local = FogId(4);
        for w in &apps {
            let request = request_for(w);
            let plan = no_partition(w).unwrap();
            let queues = QueueEstimate { waits: waits.clone() };
            let d = &allocate_mr(&plan, &request, local, &fed, &queues, 0.95).unwrap()[0];
            fogfed::alloc::check_mr_decision(d).unwrap();
            let p_local = d.record(local).unwrap().p;
            if d.candidate_log.iter().all(|c| c.p <= p_local) {
                prop_assert_eq!(d.chosen, local);
            }
        }
    }

    #[test]
    fn mect_and_mcc_agree_without_queues(seed in any::<u64>()) {
        let (fed, apps) = small_federation(seed);
        let local = FogId(4);
        let queues = QueueEstimate::zero(9);
        for w in &apps {
            let part = &no_partition(w).unwrap().partitions[0];
            let a = allocate_mect(part, 0, 0, local, &fed, &queues, true).unwrap();
            let b = allocate_mcc(part, 0, 0, local, &fed, &queues, 1e9, true).unwrap();
            prop_assert_eq!(a.chosen, b.chosen);
            prop_assert_eq!(b.reason, DecisionReason::BestEstimate);
        }
    }
}
