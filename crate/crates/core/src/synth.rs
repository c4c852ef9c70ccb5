//! Seeded synthetic key-point DAGs for fixtures and property tests.
//!
//! Every edge points strictly forward in x, so generated graphs are acyclic
//! without a cycle check.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::CodecConfig;
use crate::error::SynthError;
use crate::graph::{DagEdge, KeyPointDag, Point2, Point3};

const MARGIN: f64 = 1.0;
const PLACEMENT_TRIES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    pub roots: usize,
    pub max_depth: usize,
    pub fork_prob: f64,
    pub merge_prob: f64,
    /// Largest lateral offset of a control point from its chord midpoint, meters.
    pub curvature: f64,
    /// Cap on sextets (edges plus roots).
    pub edge_cap: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            roots: 2,
            max_depth: 6,
            fork_prob: 0.3,
            merge_prob: 0.2,
            curvature: 2.0,
            edge_cap: 100,
        }
    }
}

impl GenSpec {
    /// A spec whose shape parameters are themselves drawn from `seed`.
    pub fn varied(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let roots = rng.random_range(1..=4);
        Self {
            seed,
            roots,
            max_depth: rng.random_range(1..=9),
            fork_prob: rng.random_range(0.0..0.6),
            merge_prob: rng.random_range(0.0..0.5),
            curvature: rng.random_range(0.0..3.0),
            edge_cap: rng.random_range(2 * roots..=100),
        }
    }

    fn check(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::SpecInfeasible(m.to_string()));
        if !(0.0..=1.0).contains(&self.fork_prob) || !(0.0..=1.0).contains(&self.merge_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.edge_cap == 0 || self.max_depth == 0 {
            return bad("edge_cap and max_depth must be >= 1");
        }
        if !(self.curvature.is_finite() && self.curvature >= 0.0) {
            return bad("curvature must be finite and >= 0");
        }
        Ok(())
    }
}

struct Builder<'a> {
    cfg: &'a CodecConfig,
    rng: ChaCha8Rng,
    keypoints: Vec<Point3>,
    depth: Vec<usize>,
    edges: Vec<DagEdge>,
    min_sep: f64,
}

impl Builder<'_> {
    fn fits(&self, p: Point2) -> bool {
        let [x0, x1] = self.cfg.x_range;
        let [y0, y1] = self.cfg.y_range;
        p.x >= x0 + MARGIN
            && p.x <= x1 - MARGIN
            && p.y >= y0 + MARGIN
            && p.y <= y1 - MARGIN
            && self.keypoints.iter().all(|k| k.xy().distance(p) >= self.min_sep)
    }

    fn add_keypoint(&mut self, p: Point2, depth: usize) -> usize {
        self.keypoints.push(Point3::new(p.x, p.y, 0.01 * p.x));
        self.depth.push(depth);
        self.keypoints.len() - 1
    }

    fn add_edge(&mut self, src: usize, dst: usize, curvature: f64) {
        let (a, b) = (self.keypoints[src].xy(), self.keypoints[dst].xy());
        let mid = a.lerp(b, 0.5);
        let dir = b - a;
        let len = dir.dot(dir).sqrt();
        let normal = Point2::new(-dir.y / len, dir.x / len);
        let offset = if curvature > 0.0 {
            self.rng.random_range(-curvature..=curvature)
        } else {
            0.0
        };
        let mut c = mid + normal.scale(offset);
        c.x = c.x.clamp(self.cfg.x_range[0] + MARGIN, self.cfg.x_range[1] - MARGIN);
        c.y = c.y.clamp(self.cfg.y_range[0] + MARGIN, self.cfg.y_range[1] - MARGIN);
        self.edges.push(DagEdge {
            src,
            dst,
            control: c,
            score: None,
        });
    }
}

/// Generate a DAG whose sextet count stays within `min(edge_cap, max_edges)`.
pub fn generate(spec: &GenSpec, cfg: &CodecConfig) -> Result<KeyPointDag, SynthError> {
    spec.check()?;
    cfg.validate()
        .map_err(|e| SynthError::SpecInfeasible(e.to_string()))?;
    let budget = spec.edge_cap.min(cfg.max_edges);
    // a root costs one sextet and its first edge another
    if 2 * spec.roots > budget {
        return Err(SynthError::SpecInfeasible(format!(
            "{} roots need {} sextets, budget is {budget}",
            spec.roots,
            2 * spec.roots
        )));
    }
    let diag = cfg.bin_width_x().hypot(cfg.bin_width_y());
    let mut b = Builder {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        keypoints: Vec::new(),
        depth: Vec::new(),
        edges: Vec::new(),
        // Distinct key points must also land in distinct bins.
        min_sep: (cfg.merge_eps * 1.01).max(diag * 1.01).max(1.0),
    };
    let [x0, x1] = cfg.x_range;
    let [y0, y1] = cfg.y_range;
    let span = x1 - x0;

    let mut frontier = VecDeque::new();
    for _ in 0..spec.roots {
        let placed = (0..PLACEMENT_TRIES * 4).find_map(|_| {
            let p = Point2::new(
                b.rng.random_range(x0 + MARGIN..=x0 + MARGIN + 0.35 * span),
                b.rng.random_range(y0 + MARGIN..=y1 - MARGIN),
            );
            b.fits(p).then_some(p)
        });
        let Some(p) = placed else {
            return Err(SynthError::SpecInfeasible("cannot place root key points".into()));
        };
        frontier.push_back(b.add_keypoint(p, 0));
    }
    let mut used = spec.roots;

    while let Some(u) = frontier.pop_front() {
        if b.depth[u] >= spec.max_depth {
            continue;
        }
        let children = if b.rng.random_bool(spec.fork_prob) { 2 } else { 1 };
        for child in 0..children {
            if used >= budget {
                break;
            }
            let ux = b.keypoints[u].x;
            if b.rng.random_bool(spec.merge_prob) {
                let candidates: Vec<usize> = (0..b.keypoints.len())
                    .filter(|&v| {
                        let dx = b.keypoints[v].x - ux;
                        (2.0..=25.0).contains(&dx) && !b.edges.iter().any(|e| e.src == u && e.dst == v)
                    })
                    .collect();
                if !candidates.is_empty() {
                    let v = candidates[b.rng.random_range(0..candidates.len())];
                    b.add_edge(u, v, spec.curvature);
                    used += 1;
                    continue;
                }
            }
            let uy = b.keypoints[u].y;
            let side = if children == 2 { [-1.0, 1.0][child] } else { 0.0 };
            let placed = (0..PLACEMENT_TRIES).find_map(|_| {
                let dy = if side == 0.0 {
                    b.rng.random_range(-4.0..=4.0)
                } else {
                    side * b.rng.random_range(2.0..=7.0)
                };
                let p = Point2::new(ux + b.rng.random_range(6.0..=14.0), uy + dy);
                b.fits(p).then_some(p)
            });
            if let Some(p) = placed {
                let v = b.add_keypoint(p, b.depth[u] + 1);
                b.add_edge(u, v, spec.curvature);
                used += 1;
                frontier.push_back(v);
            }
        }
    }
    Ok(drop_isolated(KeyPointDag {
        keypoints: b.keypoints,
        edges: b.edges,
    }))
}

/// Remove key points that no edge touches; they have no lane form.
fn drop_isolated(d: KeyPointDag) -> KeyPointDag {
    let mut touched = vec![false; d.keypoints.len()];
    for e in &d.edges {
        touched[e.src] = true;
        touched[e.dst] = true;
    }
    let mut remap = vec![usize::MAX; d.keypoints.len()];
    let mut keypoints = Vec::new();
    for (i, p) in d.keypoints.into_iter().enumerate() {
        if touched[i] {
            remap[i] = keypoints.len();
            keypoints.push(p);
        }
    }
    let edges = d
        .edges
        .into_iter()
        .map(|e| DagEdge { src: remap[e.src], dst: remap[e.dst], ..e })
        .collect();
    KeyPointDag { keypoints, edges }
}
