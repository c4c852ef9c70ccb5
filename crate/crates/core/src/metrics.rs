//! Desk-scale lane-graph evaluation.
//!
//! Simplified stand-ins for benchmark scoring: Frechet-matched average
//! precision for detection, F1 over matched connectivity pairs for topology,
//! and their geometric mean. Matching is greedy by descending score and is
//! not benchmark-exact.

use serde::Serialize;

use crate::config::CodecConfig;
use crate::graph::{LaneGraph, Point3};

/// Frechet thresholds in meters.
pub const THRESHOLDS: [f64; 3] = [1.0, 2.0, 3.0];

/// Discrete Frechet distance between two polylines.
pub fn frechet(a: &[Point3], b: &[Point3]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "frechet needs non-empty polylines");
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let d = pa.distance(*pb);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub ap: f64,
    pub top_f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub det: f64,
    pub top: f64,
    pub ols_star: f64,
    pub endpoint_gap_mean: f64,
    pub thresholds: Vec<ThresholdReport>,
}

/// Predictions in descending score order, ties by index.
fn score_order(g: &LaneGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g.score(b).total_cmp(&g.score(a)).then(a.cmp(&b)));
    order
}

/// Greedy one-to-one matching; `matched[pred] = Some(gt)`.
fn greedy_match(order: &[usize], dist: &[Vec<f64>], threshold: f64, n_gt: usize) -> Vec<Option<usize>> {
    let mut taken = vec![false; n_gt];
    let mut matched = vec![None; dist.len()];
    for &p in order {
        let best = (0..n_gt)
            .filter(|&g| !taken[g] && dist[p][g] <= threshold)
            .min_by(|&x, &y| dist[p][x].total_cmp(&dist[p][y]));
        if let Some(g) = best {
            taken[g] = true;
            matched[p] = Some(g);
        }
    }
    matched
}

/// All-point interpolated average precision over a ranked hit list.
fn average_precision(hits: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return if hits.is_empty() { 1.0 } else { 0.0 };
    }
    let mut precision = Vec::with_capacity(hits.len());
    let mut recall = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &hit) in hits.iter().enumerate() {
        if hit {
            tp += 1;
        }
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / n_gt as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut last_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        ap += (r - last_recall) * p;
        last_recall = *r;
    }
    ap
}

fn topology_f1(
    pred_pairs: &[(usize, usize)],
    gt: &LaneGraph,
    gt_pairs: usize,
    matched: &[Option<usize>],
    cfg: &CodecConfig,
    lanes_consistent: bool,
) -> f64 {
    if pred_pairs.is_empty() && gt_pairs == 0 {
        return if lanes_consistent { 1.0 } else { 0.0 };
    }
    let tp = pred_pairs
        .iter()
        .filter(|&&(i, j)| match (matched[i], matched[j]) {
            (Some(gi), Some(gj)) => cfg.binarize(gt.adjacency[gi][gj]),
            _ => false,
        })
        .count();
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / pred_pairs.len() as f64;
    let recall = tp as f64 / gt_pairs as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean distance from lane `i`'s end to lane `j`'s start over connected pairs.
pub fn endpoint_gap_mean(g: &LaneGraph, cfg: &CodecConfig) -> f64 {
    let pairs = g.connected_pairs(cfg);
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|&(i, j)| g.lanes[i].end().distance(g.lanes[j].start()))
        .sum();
    total / pairs.len() as f64
}

/// Score predicted lanes against ground truth.
///
/// When neither graph has connectivity pairs, TOP is 1 if both graphs are
/// empty or both are non-empty, and 0 otherwise.
pub fn evaluate(pred: &LaneGraph, gt: &LaneGraph, cfg: &CodecConfig) -> EvalReport {
    let dist: Vec<Vec<f64>> = pred
        .lanes
        .iter()
        .map(|p| gt.lanes.iter().map(|g| frechet(&p.points, &g.points)).collect())
        .collect();
    let order = score_order(pred);
    let pred_pairs = pred.connected_pairs(cfg);
    let gt_pairs = gt.connected_pairs(cfg).len();
    let lanes_consistent = pred.is_empty() == gt.is_empty();

    let thresholds: Vec<ThresholdReport> = THRESHOLDS
        .iter()
        .map(|&t| {
            let matched = greedy_match(&order, &dist, t, gt.len());
            let hits: Vec<bool> = order.iter().map(|&p| matched[p].is_some()).collect();
            let tp = hits.iter().filter(|&&h| h).count();
            ThresholdReport {
                threshold: t,
                ap: average_precision(&hits, gt.len()),
                top_f1: topology_f1(&pred_pairs, gt, gt_pairs, &matched, cfg, lanes_consistent),
                true_positives: tp,
                false_positives: hits.len() - tp,
                false_negatives: gt.len() - tp,
            }
        })
        .collect();
    let n = thresholds.len() as f64;
    let det = thresholds.iter().map(|r| r.ap).sum::<f64>() / n;
    let top = thresholds.iter().map(|r| r.top_f1).sum::<f64>() / n;
    EvalReport {
        det,
        top,
        ols_star: (det * top).sqrt().clamp(0.0, 1.0),
        endpoint_gap_mean: endpoint_gap_mean(pred, cfg),
        thresholds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Centerline;

    fn line(y: f64, x0: f64, x1: f64) -> Vec<Point3> {
        (0..10)
            .map(|k| Point3::new(x0 + (x1 - x0) * k as f64 / 9.0, y, 0.0))
            .collect()
    }

    /// Plain recursive definition, exponential but fine for tiny inputs.
    fn frechet_oracle(a: &[Point3], b: &[Point3]) -> f64 {
        fn c(a: &[Point3], b: &[Point3], i: usize, j: usize) -> f64 {
            let d = a[i].distance(b[j]);
            match (i, j) {
                (0, 0) => d,
                (0, _) => c(a, b, 0, j - 1).max(d),
                (_, 0) => c(a, b, i - 1, 0).max(d),
                _ => c(a, b, i - 1, j)
                    .min(c(a, b, i - 1, j - 1))
                    .min(c(a, b, i, j - 1))
                    .max(d),
            }
        }
        c(a, b, a.len() - 1, b.len() - 1)
    }

    #[test]
    fn frechet_cases() {
        let a = line(0.0, 0.0, 9.0);
        assert_eq!(frechet(&a, &a), 0.0);
        let b = line(1.5, 0.0, 9.0);
        assert!((frechet(&a, &b) - 1.5).abs() < 1e-12);
        assert!((frechet_oracle(&a[..5], &b[..6]) - frechet(&a[..5], &b[..6])).abs() < 1e-12);
        let c = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(3.0, 4.0, 0.0), Point3::new(1.0, 1.0, 1.0)];
        let d = vec![Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 2.0, 0.0)];
        assert_eq!(frechet(&c, &d), frechet(&d, &c));
        assert!((frechet(&c, &d) - frechet_oracle(&c, &d)).abs() < 1e-12);
    }

    #[test]
    fn ap_values() {
        assert_eq!(average_precision(&[true, true], 2), 1.0);
        assert_eq!(average_precision(&[false, true], 1), 0.5);
        assert_eq!(average_precision(&[], 3), 0.0);
        assert_eq!(average_precision(&[], 0), 1.0);
        assert_eq!(average_precision(&[true, false, true], 2), 1.0 * 0.5 + (2.0 / 3.0) * 0.5);
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let cfg = CodecConfig::default();
        let g = LaneGraph::from_pairs(
            vec![Centerline::new(line(0.0, 0.0, 9.0)), Centerline::new(line(0.0, 9.0, 20.0))],
            &[(0, 1)],
        );
        let r = evaluate(&g, &g, &cfg);
        assert_eq!((r.det, r.top, r.ols_star, r.endpoint_gap_mean), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn empty_prediction() {
        let cfg = CodecConfig::default();
        let g = LaneGraph::from_pairs(vec![Centerline::new(line(0.0, 0.0, 9.0))], &[]);
        let r = evaluate(&LaneGraph::default(), &g, &cfg);
        assert_eq!((r.det, r.top), (0.0, 0.0));
        let both = evaluate(&LaneGraph::default(), &LaneGraph::default(), &cfg);
        assert_eq!((both.det, both.top), (1.0, 1.0));
    }

    #[test]
    fn lateral_shift() {
        let cfg = CodecConfig::default();
        let gt = LaneGraph::from_pairs(vec![Centerline::new(line(0.0, 0.0, 9.0))], &[]);
        let pred = LaneGraph::from_pairs(vec![Centerline::new(line(1.5, 0.0, 9.0))], &[]);
        let r = evaluate(&pred, &gt, &cfg);
        assert!((r.det - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.thresholds[0].true_positives, 0);
    }

    #[test]
    fn gap_and_wrong_topology() {
        let cfg = CodecConfig::default();
        let gt = LaneGraph::from_pairs(
            vec![Centerline::new(line(0.0, 0.0, 9.0)), Centerline::new(line(0.0, 9.0, 20.0))],
            &[(0, 1)],
        );
        let pred = LaneGraph::from_pairs(
            vec![Centerline::new(line(0.0, 0.0, 9.0)), Centerline::new(line(0.0, 10.0, 20.0))],
            &[(1, 0)],
        );
        let r = evaluate(&pred, &gt, &cfg);
        assert_eq!(r.top, 0.0);
        assert_eq!(r.ols_star, 0.0);
        assert!((r.endpoint_gap_mean - 20.0).abs() < 1e-12);
    }
}
