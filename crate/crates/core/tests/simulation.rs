use fogfed::alloc::{check_mr_decision, AllocMethod, DecisionReason};
use fogfed::scenario::{self, suites, MethodPair};
use fogfed::{PartitionMethod, ScenarioConfig};

fn scaled(name: &str, requests: usize, window_ms: f64) -> ScenarioConfig {
    let mut cfg = suites::get(name).unwrap();
    cfg.repetitions = 3;
    cfg.sweep.requests = vec![requests];
    cfg.workload.window_ms = window_ms;
    cfg
}

fn all_pairs() -> Vec<MethodPair> {
    let mut out = Vec::new();
    for p in [PartitionMethod::None, PartitionMethod::MinCut, PartitionMethod::LeastData, PartitionMethod::ProPart] {
        for a in [AllocMethod::Mr, AllocMethod::Mect, AllocMethod::Mcc, AllocMethod::NoFed] {
            out.push(MethodPair::new(p, a));
        }
    }
    out
}

#[test]
fn every_method_conserves_requests_and_keeps_pinned_work_local() {
    let mut cfg = scaled("alloc_workflows", 80, 3000.0);
    cfg.workload.mix = 0.5;
    cfg.sweep.methods = all_pairs();
    let out = scenario::run_scenario(&cfg, 2, true).unwrap();
    assert_eq!(out.reports.len(), 16 * 3);
    assert_eq!(out.traces.len(), out.reports.len());
    for (report, trace) in out.reports.iter().zip(&out.traces) {
        assert!((0.0..=1.0).contains(&report.meet_rate));
        assert!(report.avg_makespan_ms >= 0.0);
        assert_eq!(trace.plans.len(), 80, "{}", report.method);
        let partitions: usize = trace.plans.iter().map(|p| p.plan.len()).sum();
        assert_eq!(trace.decisions.len(), partitions);
        for rec in &trace.plans {
            for d in &rec.plan.trace {
                assert_eq!(d.accepted, d.child_p.iter().all(|c| *c > d.parent_p));
            }
        }
        for (d, part) in trace.decisions.iter().zip(trace.plans.iter().flat_map(|p| &p.plan.partitions)) {
            if part.must_run_local {
                assert_eq!(d.chosen, d.local, "{}: pinned partition placed remotely", report.method);
                assert_eq!(d.reason, DecisionReason::ForcedLocalPinned);
            }
            if report.method.ends_with("+mr") {
                check_mr_decision(d).unwrap();
            }
            if report.method.ends_with("+nofed") {
                assert_eq!(d.chosen, d.local);
            }
        }
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let cfg = scaled("partitioning", 60, 2000.0);
    let csv = |threads| {
        let out = scenario::run_scenario(&cfg, threads, false).unwrap();
        let mut buf = Vec::new();
        scenario::write_csv(&out.reports, &mut buf).unwrap();
        buf
    };
    let one = csv(1);
    assert_eq!(one, csv(3));
    let back = scenario::read_csv(one.as_slice()).unwrap();
    assert_eq!(back.len(), 4 * 3);
    assert!(fogfed::sim::aggregate(&back).is_ok());
}

#[test]
fn methods_share_seeds_within_a_cell() {
    let cfg = scaled("alloc_monolithic", 50, 2000.0);
    let out = scenario::run_scenario(&cfg, 1, false).unwrap();
    let seeds_of = |m: &str| -> Vec<u64> { out.reports.iter().filter(|r| r.method == m).map(|r| r.seed).collect() };
    let mr = seeds_of("none+mr");
    assert_eq!(mr.len(), 3);
    assert_eq!(mr, seeds_of("none+nofed"));
    let mut unique = mr.clone();
    unique.dedup();
    assert_eq!(unique.len(), 3);
}

#[test]
fn higher_load_does_not_raise_meet_rate_much() {
    let mut cfg = suites::get("alloc_workflows").unwrap();
    cfg.repetitions = 4;
    cfg.sweep.requests = vec![100, 400];
    let out = scenario::run_scenario(&cfg, 2, false).unwrap();
    for m in cfg.sweep.methods.iter().map(MethodPair::label) {
        let mean = |n: usize| {
            let v: Vec<f64> = out.reports.iter().filter(|r| r.method == m && r.requests == n).map(|r| r.meet_rate).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(400) <= mean(100) + 0.02, "{m}: {} at 400 vs {} at 100", mean(400), mean(100));
    }
}
