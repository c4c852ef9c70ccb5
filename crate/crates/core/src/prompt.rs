//! Key-point prompts: quantized, deduplicated lane endpoints in random order.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::CodecConfig;
use crate::error::GraphError;
use crate::graph::LaneGraph;
use crate::quantizer::{quantize, QuantPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Provenance {
    Real,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PromptSet {
    pub points: Vec<QuantPoint>,
    pub provenance: Vec<Provenance>,
    /// Seed of the last shuffle, if any.
    pub order_seed: Option<u64>,
}

impl PromptSet {
    pub fn from_points(points: Vec<QuantPoint>) -> Self {
        let provenance = vec![Provenance::Real; points.len()];
        Self {
            points,
            provenance,
            order_seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Key points of every confident lane, highest score first.
///
/// A lane contributes its end point, and its start point unless another
/// selected lane feeds into it. Exact duplicate bins keep their first
/// occurrence. When the result would exceed `max_prompt_points`, the lowest
/// scored lanes are dropped as a whole.
pub fn extract_keypoints(g: &LaneGraph, cfg: &CodecConfig) -> Result<PromptSet, GraphError> {
    g.check()?;
    let mut order: Vec<usize> = (0..g.len())
        .filter(|&i| g.score(i) >= cfg.score_threshold)
        .collect();
    order.sort_by(|&a, &b| g.score(b).total_cmp(&g.score(a)).then(a.cmp(&b)));
    let selected: HashSet<usize> = order.iter().copied().collect();

    let q = |p: crate::graph::Point3| quantize(p.xy(), cfg).expect("checked finite");
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for &j in &order {
        let has_selected_pred = selected
            .iter()
            .any(|&i| i != j && cfg.binarize(g.adjacency[i][j]));
        let lane = &g.lanes[j];
        let mut contribution = Vec::with_capacity(2);
        if !has_selected_pred {
            contribution.push(q(lane.start()));
        }
        contribution.push(q(lane.end()));
        let fresh: Vec<QuantPoint> = contribution
            .into_iter()
            .filter(|p| !seen.contains(p))
            .fold(Vec::new(), |mut acc, p| {
                if !acc.contains(&p) {
                    acc.push(p);
                }
                acc
            });
        if points.len() + fresh.len() > cfg.max_prompt_points {
            break;
        }
        seen.extend(fresh.iter().copied());
        points.extend(fresh);
    }
    Ok(PromptSet::from_points(points))
}

/// Uniform Fisher-Yates permutation of the prompt, seeded by `seed`.
pub fn shuffle_prompt(p: &PromptSet, seed: u64) -> PromptSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paired: Vec<(QuantPoint, Provenance)> = p
        .points
        .iter()
        .copied()
        .zip(p.provenance.iter().copied())
        .collect();
    paired.shuffle(&mut rng);
    let (points, provenance) = paired.into_iter().unzip();
    PromptSet {
        points,
        provenance,
        order_seed: Some(seed),
    }
}
