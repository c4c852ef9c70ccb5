//! Error types for each stage. Every variant has a stable name that the CLI
//! and the Python bindings surface verbatim.

use thiserror::Error;

use crate::graph::DagViolation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("malformed lane graph: {0}")]
    InvalidGraph(String),
    #[error("merged graph has a directed cycle through key points {0:?}")]
    CycleDetected(Vec<usize>),
    #[error("lane {from} -> lane {to} marked adjacent but endpoint gap is {gap:.3} m")]
    InconsistentAdjacency { from: usize, to: usize, gap: f64 },
    #[error("lane {0} starts and ends on the same merged key point")]
    DegenerateLane(usize),
    #[error("invalid key-point DAG: {0:?}")]
    InvalidDag(Vec<DagViolation>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFiniteCoordinate(f64, f64),
    #[error("bin ({0}, {1}) outside the grid")]
    BinOutOfRange(u32, u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BezierError {
    #[error("curve fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite input point")]
    NonFinite,
}

/// Failures of `encode` and `assemble_training_pair`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{sextets} sextets exceed the budget of {max}")]
    TooManyEdges { sextets: usize, max: usize },
    #[error("{count} key points exceed the index budget of {max}")]
    TooManyKeypoints { count: usize, max: usize },
    #[error("key points {0} and {1} share quantized bin ({2}, {3})")]
    CloneAmbiguity(usize, usize, u32, u32),
    #[error("training pair budget exceeded: {0}")]
    BudgetExceeded(String),
}

/// A rule broken by an edge-sequence token stream. `index` is the token
/// position where the offending sextet (or token) starts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("token stream ends inside the sextet starting at {index}")]
    TruncatedSextet { index: usize },
    #[error("token stream has no EOS")]
    MissingEos,
    #[error("token {token} at {index} is not valid in sextet slot {slot}")]
    BadSlotToken { index: usize, token: u32, slot: usize },
    #[error("parent index {con} at {index} outside 1..={emitted}")]
    ConOutOfRange { index: usize, con: u32, emitted: usize },
    #[error("clone at {index} targets bins with no emitted key point")]
    CloneTargetMissing { index: usize },
    #[error("lineal sextet at {index} has no previous key point")]
    LinealWithoutPrevious { index: usize },
    #[error("sextet at {index} re-creates an already emitted key point")]
    DuplicateKeypoint { index: usize },
    #[error("clone at {index} closes a directed cycle")]
    CloneCycle { index: usize },
    #[error("sextet at {index} exceeds the sequence budget")]
    TooManySextets { index: usize },
    #[error("non-PAD token after EOS at {index}")]
    TrailingTokens { index: usize },
}

impl DecodeError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TruncatedSextet { .. } => "TruncatedSextet",
            Self::MissingEos => "MissingEos",
            Self::BadSlotToken { .. } => "BadSlotToken",
            Self::ConOutOfRange { .. } => "ConOutOfRange",
            Self::CloneTargetMissing { .. } => "CloneTargetMissing",
            Self::LinealWithoutPrevious { .. } => "LinealWithoutPrevious",
            Self::DuplicateKeypoint { .. } => "DuplicateKeypoint",
            Self::CloneCycle { .. } => "CloneCycle",
            Self::TooManySextets { .. } => "TooManySextets",
            Self::TrailingTokens { .. } => "TrailingTokens",
        }
    }

    /// Token index the violation points at, if it has one.
    pub fn index(&self) -> Option<usize> {
        match *self {
            Self::MissingEos => None,
            Self::TruncatedSextet { index }
            | Self::BadSlotToken { index, .. }
            | Self::ConOutOfRange { index, .. }
            | Self::CloneTargetMissing { index }
            | Self::LinealWithoutPrevious { index }
            | Self::DuplicateKeypoint { index }
            | Self::CloneCycle { index }
            | Self::TooManySextets { index }
            | Self::TrailingTokens { index } => Some(index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("every allowed token has zero probability at position {position}")]
    AllMaskedZero { position: usize },
    #[error("decoder already finished")]
    DecoderDone,
    #[error("probability provider exhausted at position {position}")]
    ProviderExhausted { position: usize },
    #[error("bad distribution at position {position}: {reason}")]
    BadDistribution { position: usize, reason: String },
    #[error("target has {target} positions but the table has {rows} rows")]
    LengthMismatch { target: usize, rows: usize },
    #[error("row {row} is not a probability distribution: {reason}")]
    NonDistributionRow { row: usize, reason: String },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("generator spec infeasible: {0}")]
    SpecInfeasible(String),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

/// Umbrella error for callers that drive several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Bezier(#[from] BezierError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl Error {
    /// Every value [`name`](Self::name) can return.
    pub const NAMES: &'static [&'static str] = &[
        "InvalidConfig",
        "InvalidGraph",
        "CycleDetected",
        "InconsistentAdjacency",
        "DegenerateLane",
        "InvalidDag",
        "NonFiniteCoordinate",
        "BinOutOfRange",
        "TooFewPoints",
        "TooManyEdges",
        "TooManyKeypoints",
        "CloneAmbiguity",
        "BudgetExceeded",
        "TruncatedSextet",
        "MissingEos",
        "BadSlotToken",
        "ConOutOfRange",
        "CloneTargetMissing",
        "LinealWithoutPrevious",
        "DuplicateKeypoint",
        "CloneCycle",
        "TooManySextets",
        "TrailingTokens",
        "AllMaskedZero",
        "DecoderDone",
        "ProviderExhausted",
        "BadDistribution",
        "LengthMismatch",
        "NonDistributionRow",
        "SpecInfeasible",
        "IoError",
        "ParseError",
    ];

    /// Stable variant name, e.g. `CycleDetected`.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Config(_) => "InvalidConfig",
            Self::Graph(e) => graph_name(e),
            Self::Quant(QuantError::NonFiniteCoordinate(..)) => "NonFiniteCoordinate",
            Self::Quant(QuantError::BinOutOfRange(..)) => "BinOutOfRange",
            Self::Bezier(BezierError::TooFewPoints(_)) => "TooFewPoints",
            Self::Bezier(BezierError::NonFinite) => "NonFiniteCoordinate",
            Self::Encode(e) => match e {
                EncodeError::Graph(g) => graph_name(g),
                EncodeError::TooManyEdges { .. } => "TooManyEdges",
                EncodeError::TooManyKeypoints { .. } => "TooManyKeypoints",
                EncodeError::CloneAmbiguity(..) => "CloneAmbiguity",
                EncodeError::BudgetExceeded(_) => "BudgetExceeded",
            },
            Self::Decode(e) | Self::Engine(EngineError::Decode(e)) => e.name(),
            Self::Engine(e) => match e {
                EngineError::AllMaskedZero { .. } => "AllMaskedZero",
                EngineError::DecoderDone => "DecoderDone",
                EngineError::ProviderExhausted { .. } => "ProviderExhausted",
                EngineError::BadDistribution { .. } => "BadDistribution",
                EngineError::LengthMismatch { .. } => "LengthMismatch",
                EngineError::NonDistributionRow { .. } => "NonDistributionRow",
                EngineError::Decode(_) => unreachable!(),
            },
            Self::Synth(_) => "SpecInfeasible",
            Self::Format(FormatError::Io(_)) => "IoError",
            Self::Format(FormatError::Parse(_)) => "ParseError",
        }
    }

    /// True for failures caused by sequence or prompt budgets.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Self::Encode(
                EncodeError::TooManyEdges { .. }
                    | EncodeError::TooManyKeypoints { .. }
                    | EncodeError::BudgetExceeded(_)
            )
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Self::Format(FormatError::Io(_)))
    }
}

fn graph_name(e: &GraphError) -> &'static str {
    match e {
        GraphError::InvalidGraph(_) => "InvalidGraph",
        GraphError::CycleDetected(_) => "CycleDetected",
        GraphError::InconsistentAdjacency { .. } => "InconsistentAdjacency",
        GraphError::DegenerateLane(_) => "DegenerateLane",
        GraphError::InvalidDag(_) => "InvalidDag",
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_listed() {
        let samples: Vec<Error> = vec![
            ConfigError::Invalid { field: "x_bins", reason: "0".into() }.into(),
            GraphError::CycleDetected(vec![0, 1]).into(),
            EncodeError::TooManyEdges { sextets: 101, max: 100 }.into(),
            EncodeError::Graph(GraphError::DegenerateLane(3)).into(),
            DecodeError::MissingEos.into(),
            EngineError::Decode(DecodeError::CloneCycle { index: 4 }).into(),
            EngineError::AllMaskedZero { position: 0 }.into(),
            SynthError::SpecInfeasible("x".into()).into(),
            FormatError::Parse("x".into()).into(),
        ];
        for e in &samples {
            assert!(Error::NAMES.contains(&e.name()), "{}", e.name());
        }
        assert!(samples[2].is_budget() && !samples[1].is_budget());
    }
}
