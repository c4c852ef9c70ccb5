//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use lgseq_core::{
    generate, quantize, CodecConfig, GenSpec, KeyPointDag, Centerline, LaneGraph, Point3, QuantPoint,
};
use rand::Rng;

pub fn cfg() -> CodecConfig {
    CodecConfig::default()
}

/// Seeded synthetic DAG with per-seed generator parameters.
pub fn synth_dag(seed: u64) -> KeyPointDag {
    generate(&GenSpec::varied(seed), &cfg()).expect("varied specs are feasible")
}

/// Random lane graph with up to `max_lanes` lanes. Endpoints sit on a coarse
/// grid so shared and duplicate bins are common.
pub fn random_lanegraph<R: Rng>(rng: &mut R, max_lanes: usize) -> LaneGraph {
    let m = rng.random_range(0..=max_lanes);
    let mut grid = || {
        Point3::new(
            rng.random_range(-10..=10) as f64 * 2.0,
            rng.random_range(-5..=5) as f64 * 2.0,
            0.0,
        )
    };
    let mut lanes: Vec<Centerline> = (0..m)
        .map(|_| {
            let (a, b) = (grid(), grid());
            Centerline::new(
                (0..4)
                    .map(|k| {
                        let t = k as f64 / 3.0;
                        Point3::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, 0.0)
                    })
                    .collect(),
            )
        })
        .collect();
    for l in &mut lanes {
        if rng.random_bool(0.8) {
            l.score = Some(rng.random_range(0.0..=1.0));
        }
    }
    let mut adjacency = vec![vec![0.0; m]; m];
    for (i, row) in adjacency.iter_mut().enumerate() {
        for (j, a) in row.iter_mut().enumerate() {
            if i != j && rng.random_bool(0.08) {
                *a = rng.random_range(0.0..=1.0);
            }
        }
    }
    LaneGraph::new(lanes, adjacency)
}

/// Key-point set built straight from the definition: the end of every
/// confident lane, plus its start when no other confident lane feeds it.
pub fn prompt_oracle(g: &LaneGraph, c: &CodecConfig) -> HashSet<QuantPoint> {
    let selected: Vec<usize> = (0..g.len())
        .filter(|&j| g.lanes[j].score.unwrap_or(1.0) >= c.score_threshold)
        .collect();
    let q = |p: Point3| quantize(p.xy(), c).unwrap();
    let mut out = HashSet::new();
    for &j in &selected {
        out.insert(q(g.lanes[j].end()));
        let fed = selected
            .iter()
            .any(|&i| i != j && g.adjacency[i][j] >= c.adjacency_threshold);
        if !fed {
            out.insert(q(g.lanes[j].start()));
        }
    }
    out
}

/// Same key points (within `tol`) and the same edge relation under that matching.
pub fn isomorphic(a: &KeyPointDag, b: &KeyPointDag, tol: f64) -> bool {
    if a.keypoints.len() != b.keypoints.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut map = Vec::with_capacity(a.keypoints.len());
    for p in &a.keypoints {
        match b.keypoints.iter().position(|q| p.xy().distance(q.xy()) <= tol) {
            Some(j) => map.push(j),
            None => return false,
        }
    }
    let mut ea: Vec<(usize, usize)> = a.edges.iter().map(|e| (map[e.src], map[e.dst])).collect();
    let mut eb: Vec<(usize, usize)> = b.edges.iter().map(|e| (e.src, e.dst)).collect();
    ea.sort_unstable();
    eb.sort_unstable();
    ea == eb
}
