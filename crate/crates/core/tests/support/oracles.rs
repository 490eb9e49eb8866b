//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls into the code under test except
//! to build inputs.

#![allow(dead_code)]

use std::collections::HashMap;

use fogfed::dist::NormalSpec;
use fogfed::model::{AppType, EdgeSpec, MicroServiceSpec, WorkflowSpec};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Draws from `spec` restricted to `[max(0, mean - 4 std), mean + 4 std]` and
/// snaps the draw to the nearest multiple of `bin_width`, returned as a bin
/// index.
pub fn sample_bin<R: Rng>(spec: NormalSpec, bin_width: f64, rng: &mut R) -> i64 {
    let lo = (spec.mean - 4.0 * spec.std_dev).max(0.0);
    let hi = spec.mean + 4.0 * spec.std_dev;
    let normal = Normal::new(spec.mean, spec.std_dev).expect("valid normal");
    loop {
        let x = normal.sample(rng);
        if x >= lo && x <= hi {
            return (x / bin_width).round() as i64;
        }
    }
}

/// Histogram of the bin index of X + Y over `samples` independent pairs.
pub fn sum_histogram<R: Rng>(a: NormalSpec, b: NormalSpec, bin_width: f64, samples: usize, rng: &mut R) -> HashMap<i64, f64> {
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for _ in 0..samples {
        let k = sample_bin(a, bin_width, rng) + sample_bin(b, bin_width, rng);
        *counts.entry(k).or_default() += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / samples as f64)).collect()
}

/// L1 distance between a PMF given as (bin index, mass) pairs and a histogram.
pub fn l1_distance(pmf: &[(i64, f64)], hist: &HashMap<i64, f64>) -> f64 {
    let mut seen = 0.0;
    let mut d = 0.0;
    for (k, p) in pmf {
        let h = hist.get(k).copied().unwrap_or(0.0);
        seen += h;
        d += (p - h).abs();
    }
    let unmatched: f64 = hist.values().sum::<f64>() - seen;
    d + unmatched.max(0.0)
}

/// Fraction of histogram mass whose bin center is at most `deadline`.
pub fn tail_at_most(hist: &HashMap<i64, f64>, bin_width: f64, deadline: f64) -> f64 {
    hist.iter().filter(|(k, _)| **k as f64 * bin_width <= deadline + 1e-9).map(|(_, p)| p).sum()
}

fn vertex(id: u32) -> MicroServiceSpec {
    MicroServiceSpec {
        id,
        app: AppType::Oil,
        name: format!("v{id}"),
        work: NormalSpec::new(1000.0, 100.0),
        output_data: 1.0,
        input_data: 1.0,
        location_pinned: false,
    }
}

/// Random DAG with 2..=`max_n` vertices and forward edges only, with
/// positive weights stored in `data_mb`. No vertex is both an entry and an
/// exit, so an s-t bisection always exists.
pub fn random_dag<R: Rng>(rng: &mut R, max_n: u32) -> WorkflowSpec {
    loop {
        let n = rng.random_range(2..=max_n);
        let density = rng.random_range(0.2..0.7);
        let mut edges = Vec::new();
        for from in 0..n {
            for to in from + 1..n {
                if rng.random::<f64>() < density {
                    let data_mb = (rng.random_range(1..=20) as f64) * 0.5;
                    edges.push(EdgeSpec { from, to, data_mb });
                }
            }
        }
        let isolated = (0..n).any(|v| !edges.iter().any(|e| e.from == v || e.to == v));
        if !isolated {
            return WorkflowSpec { vertices: (0..n).map(vertex).collect(), edges };
        }
    }
}

/// Minimum cut weight over every source side that contains all entries,
/// excludes all exits and is closed under predecessors.
pub fn brute_force_min_cut(w: &WorkflowSpec, weight: impl Fn(&EdgeSpec) -> f64) -> Option<f64> {
    let n = w.vertices.len();
    let pos: HashMap<u32, usize> = w.vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
    let has_pred = |i: usize| w.edges.iter().any(|e| pos[&e.to] == i);
    let has_succ = |i: usize| w.edges.iter().any(|e| pos[&e.from] == i);
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let in_s = |i: usize| mask & (1 << i) != 0;
        if (0..n).any(|i| (!has_pred(i) && !in_s(i)) || (!has_succ(i) && in_s(i))) {
            continue;
        }
        if w.edges.iter().any(|e| in_s(pos[&e.to]) && !in_s(pos[&e.from])) {
            continue;
        }
        let cut: f64 = w.edges.iter().filter(|e| in_s(pos[&e.from]) && !in_s(pos[&e.to])).map(&weight).sum();
        best = Some(best.map_or(cut, |b: f64| b.min(cut)));
    }
    best
}
