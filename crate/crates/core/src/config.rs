//! Codec configuration shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Grid, budget and threshold settings for the sequence codec.
///
/// Defaults describe a 100 m x 50 m bird's-eye-view window split into a
/// 200 x 100 grid, so one coordinate token is one 0.5 m cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub x_bins: u32,
    pub y_bins: u32,
    /// Maximum number of sextets in an edge sequence.
    pub max_edges: usize,
    /// Maximum number of key points in a prompt.
    pub max_prompt_points: usize,
    /// Endpoint merge tolerance in meters.
    pub merge_eps: f64,
    /// Minimum lane confidence for prompt extraction.
    pub score_threshold: f64,
    /// Probabilistic adjacency entries at or above this value count as edges.
    pub adjacency_threshold: f64,
    /// Points per centerline when a DAG is expanded back to lanes.
    pub points_per_lane: usize,
    pub seed: u64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            x_range: [-50.0, 50.0],
            y_range: [-25.0, 25.0],
            x_bins: 200,
            y_bins: 100,
            max_edges: 100,
            max_prompt_points: 100,
            merge_eps: 0.5,
            score_threshold: 0.3,
            adjacency_threshold: 0.5,
            points_per_lane: 10,
            seed: 0,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &'static str, reason: &str| {
            Err(ConfigError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        for (field, r) in [("x_range", self.x_range), ("y_range", self.y_range)] {
            if !r[0].is_finite() || !r[1].is_finite() || r[0] >= r[1] {
                return bad(field, "must be finite with min < max");
            }
        }
        if self.x_bins == 0 {
            return bad("x_bins", "must be >= 1");
        }
        if self.y_bins == 0 {
            return bad("y_bins", "must be >= 1");
        }
        if self.max_edges == 0 {
            return bad("max_edges", "must be >= 1");
        }
        if self.max_prompt_points == 0 {
            return bad("max_prompt_points", "must be >= 1");
        }
        if !(self.merge_eps.is_finite() && self.merge_eps >= 0.0) {
            return bad("merge_eps", "must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad("score_threshold", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.adjacency_threshold) {
            return bad("adjacency_threshold", "must lie in [0, 1]");
        }
        if self.points_per_lane < 2 {
            return bad("points_per_lane", "must be >= 2");
        }
        Ok(())
    }

    pub fn bin_width_x(&self) -> f64 {
        (self.x_range[1] - self.x_range[0]) / f64::from(self.x_bins)
    }

    pub fn bin_width_y(&self) -> f64 {
        (self.y_range[1] - self.y_range[0]) / f64::from(self.y_bins)
    }

    /// Number of numeric tokens; coordinate and parent-index slots share them.
    pub fn coord_tokens(&self) -> u32 {
        self.x_bins.max(self.y_bins)
    }

    /// Largest number of new key points a single sequence may realize.
    ///
    /// Parent indices start at 1 and must fit the numeric token range.
    pub fn max_new_keypoints(&self) -> usize {
        (self.coord_tokens() as usize - 1).min(self.max_edges)
    }

    /// Length of the padded edge-sequence token form.
    pub fn edge_tokens(&self) -> usize {
        6 * self.max_edges + 1
    }

    /// Length of the prompt region including its terminating EOK.
    pub fn prompt_tokens(&self) -> usize {
        2 * self.max_prompt_points + 1
    }

    pub fn binarize(&self, a: f64) -> bool {
        a >= self.adjacency_threshold
    }
}
