//! Lane-graph sequence language.
//!
//! Converts lane graphs into a merged key-point DAG, serializes the DAG as a
//! canonical stream of six-integer sextets, builds shuffled key-point prompts
//! and teacher-forcing pairs, decodes token streams under the sequence
//! grammar, and scores predicted lane graphs against ground truth.

pub mod bezier;
pub mod codec;
pub mod config;
pub mod engine;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod prompt;
pub mod quantizer;
pub mod synth;
pub mod vocab;

pub use bezier::{elevate_to_cubic, fit_control_point, sample_curve, CubicCurve, EdgeCurve};
pub use codec::{
    assemble_training_pair, compare_roundtrip, decode, decode_lenient, encode, validate_sequence,
    Decoded, EdgeSequence, EdgeSextet, RoundTrip, TrainingPair,
};
pub use config::CodecConfig;
pub use engine::{
    next_mask, run, run_greedy, sequence_nll, step, DecoderState, Mode, Phase, ProbTable,
    ProbabilityProvider, RunOutput, StepMask, TokenWeights,
};
pub use error::{Error, Result};
pub use graph::{
    dag_to_lanegraph, lanegraph_to_dag, validate_dag, Centerline, DagEdge, DagViolation,
    KeyPointDag, LaneGraph, Point2, Point3,
};
pub use metrics::{evaluate, frechet, EvalReport};
pub use prompt::{extract_keypoints, shuffle_prompt, PromptSet, Provenance};
pub use quantizer::{dequantize, quantize, QuantPoint};
pub use synth::{generate, GenSpec};
pub use vocab::{KeypointClass, TokenKind, Vocabulary};

/// Independent RNG stream `stream` under `seed`; batch tools use one per input line.
pub fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
