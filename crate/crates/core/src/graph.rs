//! Lane graphs (centerlines plus adjacency) and the merged key-point DAG.
//!
//! A lane graph stores every lane with its own endpoints; `A[i][j] = 1` says
//! that lane `i` ends where lane `j` starts. The key-point DAG merges those
//! coinciding endpoints into shared nodes, and every lane becomes one edge
//! whose shape is a quadratic Bezier through a single interior control point.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::bezier::{fit_control_point, sample_curve, EdgeCurve};
use crate::config::CodecConfig;
use crate::error::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn distance(self, o: Self) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lerp(self, o: Self, t: f64) -> Self {
        Self::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Ego-frame point: x forward, y left, z up, all in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn distance(self, o: Self) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self::new(x, y, z)
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Centerline {
    pub points: Vec<Point3>,
    pub score: Option<f64>,
}

impl Centerline {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points, score: None }
    }

    pub fn start(&self) -> Point3 {
        self.points[0]
    }

    pub fn end(&self) -> Point3 {
        self.points[self.points.len() - 1]
    }
}

/// Centerlines plus a dense `m x m` adjacency that may hold probabilities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaneGraph {
    pub lanes: Vec<Centerline>,
    pub adjacency: Vec<Vec<f64>>,
}

impl LaneGraph {
    pub fn new(lanes: Vec<Centerline>, adjacency: Vec<Vec<f64>>) -> Self {
        Self { lanes, adjacency }
    }

    /// Graph with a binary adjacency built from `(from, to)` pairs.
    pub fn from_pairs(lanes: Vec<Centerline>, pairs: &[(usize, usize)]) -> Self {
        let m = lanes.len();
        let mut adjacency = vec![vec![0.0; m]; m];
        for &(i, j) in pairs {
            adjacency[i][j] = 1.0;
        }
        Self { lanes, adjacency }
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Lane confidence; lanes without a score count as certain.
    pub fn score(&self, lane: usize) -> f64 {
        self.lanes[lane].score.unwrap_or(1.0)
    }

    /// Binarized `(from, to)` pairs in row-major order.
    pub fn connected_pairs(&self, cfg: &CodecConfig) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.adjacency.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if i != j && cfg.binarize(a) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Structural checks: square adjacency in `[0, 1]`, finite points, scores in `[0, 1]`.
    pub fn check(&self) -> Result<(), GraphError> {
        let m = self.lanes.len();
        if self.adjacency.len() != m || self.adjacency.iter().any(|r| r.len() != m) {
            return Err(GraphError::InvalidGraph(format!(
                "adjacency must be {m}x{m}"
            )));
        }
        for (i, row) in self.adjacency.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&a) {
                    return Err(GraphError::InvalidGraph(format!(
                        "adjacency[{i}][{j}] = {a} outside [0, 1]"
                    )));
                }
            }
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            if lane.points.len() < 2 {
                return Err(GraphError::InvalidGraph(format!(
                    "lane {i} has fewer than 2 points"
                )));
            }
            if lane.points.iter().any(|p| !p.is_finite()) {
                return Err(GraphError::InvalidGraph(format!(
                    "lane {i} has a non-finite point"
                )));
            }
            if let Some(s) = lane.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(GraphError::InvalidGraph(format!(
                        "lane {i} score {s} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagEdge {
    pub src: usize,
    pub dst: usize,
    /// Interior Bezier control point.
    pub control: Point2,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyPointDag {
    pub keypoints: Vec<Point3>,
    pub edges: Vec<DagEdge>,
}

impl KeyPointDag {
    pub fn curve(&self, edge: &DagEdge) -> EdgeCurve {
        EdgeCurve::new(
            self.keypoints[edge.src].xy(),
            edge.control,
            self.keypoints[edge.dst].xy(),
        )
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.keypoints.len()];
        for e in &self.edges {
            deg[e.dst] += 1;
        }
        deg
    }
}

/// A broken `KeyPointDag` invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DagViolation {
    NonFinite(usize),
    DanglingEdge { edge: usize, keypoint: usize },
    SelfLoop(usize),
    TooClose(usize, usize),
    Cycle(Vec<usize>),
}

/// Check every `KeyPointDag` invariant. Key points closer than `eps` in the
/// ground plane are reported as `TooClose`.
pub fn validate_dag(d: &KeyPointDag, eps: f64) -> Vec<DagViolation> {
    let mut out = Vec::new();
    let k = d.keypoints.len();
    for (i, p) in d.keypoints.iter().enumerate() {
        if !p.is_finite() {
            out.push(DagViolation::NonFinite(i));
        }
    }
    let mut dangling = false;
    for (idx, e) in d.edges.iter().enumerate() {
        for kp in [e.src, e.dst] {
            if kp >= k {
                out.push(DagViolation::DanglingEdge {
                    edge: idx,
                    keypoint: kp,
                });
                dangling = true;
            }
        }
        if e.src == e.dst {
            out.push(DagViolation::SelfLoop(e.src));
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            if d.keypoints[i].xy().distance(d.keypoints[j].xy()) < eps {
                out.push(DagViolation::TooClose(i, j));
            }
        }
    }
    if !dangling {
        if let Some(cycle) = find_cycle(k, &d.edges) {
            // A self-loop is already reported on its own.
            if cycle.len() > 1 {
                out.push(DagViolation::Cycle(cycle));
            }
        }
    }
    out
}

/// Some directed cycle, listed in traversal order, or `None` if acyclic.
fn find_cycle(k: usize, edges: &[DagEdge]) -> Option<Vec<usize>> {
    let mut succ = vec![Vec::new(); k];
    for e in edges {
        succ[e.src].push(e.dst);
    }
    // 0 = unvisited, 1 = on stack, 2 = finished
    let mut color = vec![0u8; k];
    let mut parent = vec![usize::MAX; k];
    for root in 0..k {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next < succ[u].len() {
                let v = succ[u][*next];
                *next += 1;
                match color[v] {
                    0 => {
                        color[v] = 1;
                        parent[v] = u;
                        stack.push((v, 0));
                    }
                    1 => {
                        let mut cycle = vec![u];
                        let mut w = u;
                        while w != v {
                            w = parent[w];
                            cycle.push(w);
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[u] = 2;
                stack.pop();
            }
        }
    }
    None
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins two sets, keeping the smaller root. Returns false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

fn mean_point(points: &[Point3]) -> Point3 {
    if points.iter().all(|p| *p == points[0]) {
        return points[0];
    }
    let n = points.len() as f64;
    let (sx, sy, sz) = points
        .iter()
        .fold((0.0, 0.0, 0.0), |(x, y, z), p| (x + p.x, y + p.y, z + p.z));
    Point3::new(sx / n, sy / n, sz / n)
}

/// Groups of endpoint node ids (`2i` = start of lane i, `2i + 1` = end) and their merged positions.
fn merge_groups(uf: &mut UnionFind, endpoints: &[Point3]) -> (Vec<usize>, Vec<Point3>) {
    let n = endpoints.len();
    let mut group_of = vec![usize::MAX; n];
    let mut root_group = vec![usize::MAX; n];
    let mut members: Vec<Vec<Point3>> = Vec::new();
    for node in 0..n {
        let r = uf.find(node);
        if root_group[r] == usize::MAX {
            root_group[r] = members.len();
            members.push(Vec::new());
        }
        group_of[node] = root_group[r];
        members[root_group[r]].push(endpoints[node]);
    }
    (group_of, members.iter().map(|m| mean_point(m)).collect())
}

/// Merge lane endpoints into key points and turn each lane into one DAG edge.
///
/// Endpoints are merged when the binarized adjacency links them (their gap
/// must then be within `merge_eps`) and whenever two merged positions fall
/// within `merge_eps` of each other. Key point ids follow the first lane
/// endpoint that belongs to them.
pub fn lanegraph_to_dag(g: &LaneGraph, cfg: &CodecConfig) -> Result<KeyPointDag, GraphError> {
    g.check()?;
    let m = g.len();
    let endpoints: Vec<Point3> = g.lanes.iter().flat_map(|l| [l.start(), l.end()]).collect();
    let mut uf = UnionFind::new(2 * m);

    for (i, row) in g.adjacency.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if !cfg.binarize(a) {
                continue;
            }
            let gap = g.lanes[i].end().xy().distance(g.lanes[j].start().xy());
            if gap > cfg.merge_eps {
                return Err(GraphError::InconsistentAdjacency { from: i, to: j, gap });
            }
            uf.union(2 * i + 1, 2 * j);
        }
    }

    let (group_of, keypoints) = loop {
        let (group_of, merged) = merge_groups(&mut uf, &endpoints);
        let mut changed = false;
        for a in 0..merged.len() {
            for b in a + 1..merged.len() {
                if merged[a].xy().distance(merged[b].xy()) < cfg.merge_eps {
                    let na = group_of.iter().position(|&x| x == a).unwrap();
                    let nb = group_of.iter().position(|&x| x == b).unwrap();
                    changed |= uf.union(na, nb);
                }
            }
        }
        if !changed {
            break (group_of, merged);
        }
    };

    let mut edges = Vec::with_capacity(m);
    for (i, lane) in g.lanes.iter().enumerate() {
        let (src, dst) = (group_of[2 * i], group_of[2 * i + 1]);
        if src == dst {
            return Err(if cfg.binarize(g.adjacency[i][i]) {
                GraphError::CycleDetected(vec![src])
            } else {
                GraphError::DegenerateLane(i)
            });
        }
        let (p0, p1) = (keypoints[src].xy(), keypoints[dst].xy());
        let control = if lane.points.len() < 3 {
            p0.lerp(p1, 0.5)
        } else {
            let mut pts: Vec<Point2> = lane.points.iter().map(|p| p.xy()).collect();
            let last = pts.len() - 1;
            pts[0] = p0;
            pts[last] = p1;
            // Points are finite and there are at least three.
            fit_control_point(&pts).expect("checked lane").c
        };
        edges.push(DagEdge {
            src,
            dst,
            control,
            score: lane.score,
        });
    }

    if let Some(cycle) = find_cycle(keypoints.len(), &edges) {
        return Err(GraphError::CycleDetected(cycle));
    }
    Ok(KeyPointDag { keypoints, edges })
}

/// Expand each DAG edge into a centerline of `points_per_lane` points.
///
/// `A[i][j] = 1` exactly when edge `i` ends on the key point where edge `j`
/// starts. Heights are interpolated linearly between the endpoint heights.
pub fn dag_to_lanegraph(d: &KeyPointDag, cfg: &CodecConfig) -> LaneGraph {
    let n = cfg.points_per_lane;
    let lanes = d
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (d.keypoints[e.src], d.keypoints[e.dst]);
            let mut points: Vec<Point3> = sample_curve(&d.curve(e), n)
                .into_iter()
                .enumerate()
                .map(|(k, p)| {
                    let t = k as f64 / (n - 1) as f64;
                    Point3::new(p.x, p.y, a.z + (b.z - a.z) * t)
                })
                .collect();
            points[0] = a;
            points[n - 1] = b;
            Centerline {
                points,
                score: e.score,
            }
        })
        .collect();
    let m = d.edges.len();
    let mut adjacency = vec![vec![0.0; m]; m];
    for (i, ei) in d.edges.iter().enumerate() {
        for (j, ej) in d.edges.iter().enumerate() {
            if ei.dst == ej.src {
                adjacency[i][j] = 1.0;
            }
        }
    }
    LaneGraph { lanes, adjacency }
}
