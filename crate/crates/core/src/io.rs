//! Text file formats: lane-graph and DAG JSON, token lines, prompt lines.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::CodecConfig;
use crate::error::{FormatError, GraphError};
use crate::graph::{
    dag_to_lanegraph, lanegraph_to_dag, Centerline, DagEdge, KeyPointDag, LaneGraph, Point2, Point3,
};
use crate::prompt::PromptSet;
use crate::quantizer::QuantPoint;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneJson {
    points: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneGraphJson {
    lanes: Vec<LaneJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjacency: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjacency_dense: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    src: usize,
    dst: usize,
    control: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagJson {
    keypoints: Vec<Point3>,
    edges: Vec<EdgeJson>,
}

/// A parsed graph file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphDoc {
    Lanes(LaneGraph),
    Dag(KeyPointDag),
}

impl GraphDoc {
    /// The key-point DAG; lane graphs are merged first.
    pub fn to_dag(&self, cfg: &CodecConfig) -> Result<KeyPointDag, GraphError> {
        match self {
            Self::Lanes(g) => lanegraph_to_dag(g, cfg),
            Self::Dag(d) => Ok(d.clone()),
        }
    }

    /// The lane graph; DAGs are expanded into sampled centerlines.
    pub fn to_lanes(&self, cfg: &CodecConfig) -> LaneGraph {
        match self {
            Self::Lanes(g) => g.clone(),
            Self::Dag(d) => dag_to_lanegraph(d, cfg),
        }
    }
}

fn parse_err(msg: impl Into<String>) -> FormatError {
    FormatError::Parse(msg.into())
}

impl TryFrom<LaneGraphJson> for LaneGraph {
    type Error = FormatError;

    fn try_from(j: LaneGraphJson) -> Result<Self, FormatError> {
        let m = j.lanes.len();
        let lanes: Vec<Centerline> = j
            .lanes
            .into_iter()
            .map(|l| Centerline {
                points: l.points,
                score: l.score,
            })
            .collect();
        let adjacency = match (j.adjacency, j.adjacency_dense) {
            (Some(pairs), None) => {
                let mut a = vec![vec![0.0; m]; m];
                for [i, k] in pairs {
                    if i >= m || k >= m {
                        return Err(parse_err(format!("adjacency pair [{i}, {k}] outside {m} lanes")));
                    }
                    a[i][k] = 1.0;
                }
                a
            }
            (None, Some(dense)) => dense,
            _ => {
                return Err(parse_err(
                    "exactly one of `adjacency` or `adjacency_dense` must be present",
                ))
            }
        };
        Ok(LaneGraph { lanes, adjacency })
    }
}

/// Parse a lane-graph or DAG JSON document, telling them apart by their keys.
pub fn parse_graph(text: &str) -> Result<GraphDoc, FormatError> {
    let v: Value = serde_json::from_str(text)?;
    let obj = v
        .as_object()
        .ok_or_else(|| parse_err("graph document must be a JSON object"))?;
    if obj.contains_key("lanes") {
        let j: LaneGraphJson = serde_json::from_value(v)?;
        Ok(GraphDoc::Lanes(j.try_into()?))
    } else if obj.contains_key("keypoints") {
        let j: DagJson = serde_json::from_value(v)?;
        Ok(GraphDoc::Dag(KeyPointDag {
            keypoints: j.keypoints,
            edges: j
                .edges
                .into_iter()
                .map(|e| DagEdge {
                    src: e.src,
                    dst: e.dst,
                    control: e.control,
                    score: e.score,
                })
                .collect(),
        }))
    } else {
        Err(parse_err("expected a `lanes` or `keypoints` key"))
    }
}

/// One or more graph documents: a single JSON value, or one per non-empty line.
pub fn parse_graphs(text: &str) -> Result<Vec<GraphDoc>, FormatError> {
    match parse_graph(text) {
        Ok(doc) => Ok(vec![doc]),
        Err(whole) => {
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            if lines.len() <= 1 {
                return Err(whole);
            }
            lines.into_iter().map(parse_graph).collect()
        }
    }
}

/// Compact single-line JSON. Binary adjacency is written as sparse pairs.
pub fn lanegraph_to_json(g: &LaneGraph) -> String {
    let binary = g.adjacency.iter().flatten().all(|&a| a == 0.0 || a == 1.0);
    let (adjacency, adjacency_dense) = if binary {
        let pairs = g
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &a)| a == 1.0)
                    .map(move |(j, _)| [i, j])
            })
            .collect();
        (Some(pairs), None)
    } else {
        (None, Some(g.adjacency.clone()))
    };
    let j = LaneGraphJson {
        lanes: g
            .lanes
            .iter()
            .map(|l| LaneJson {
                points: l.points.clone(),
                score: l.score,
            })
            .collect(),
        adjacency,
        adjacency_dense,
    };
    serde_json::to_string(&j).expect("lane graph serializes")
}

pub fn dag_to_json(d: &KeyPointDag) -> String {
    let j = DagJson {
        keypoints: d.keypoints.clone(),
        edges: d
            .edges
            .iter()
            .map(|e| EdgeJson {
                src: e.src,
                dst: e.dst,
                control: e.control,
                score: e.score,
            })
            .collect(),
    };
    serde_json::to_string(&j).expect("dag serializes")
}

pub fn format_tokens(tokens: &[u32]) -> String {
    tokens.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

pub fn parse_tokens(line: &str) -> Result<Vec<u32>, FormatError> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(format!("bad token `{t}`"))))
        .collect()
}

pub fn format_prompt(p: &PromptSet) -> String {
    p.points
        .iter()
        .map(|q| format!("{},{}", q.xb, q.yb))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_prompt(line: &str) -> Result<PromptSet, FormatError> {
    let points = line
        .split_whitespace()
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| parse_err(format!("bad prompt point `{pair}`")))?;
            let num = |s: &str| s.parse::<u32>().map_err(|_| parse_err(format!("bad prompt point `{pair}`")));
            Ok(QuantPoint::new(num(x)?, num(y)?))
        })
        .collect::<Result<_, FormatError>>()?;
    Ok(PromptSet::from_points(points))
}
