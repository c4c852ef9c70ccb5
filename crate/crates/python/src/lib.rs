//! Python bindings: flat integer/float arrays in, flat arrays out.

use std::collections::HashMap;
use std::ffi::CString;

use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::sync::PyOnceLock;
use pyo3::types::PyType;
use rand::RngCore;

use lgseq_core::io::{self, GraphDoc};
use lgseq_core::{
    stream_rng, CodecConfig, DecoderState, Error, Mode, PromptSet, ProbTable, QuantPoint, TokenWeights,
};

pyo3::create_exception!(lgseq, LgseqError, PyException, "Base class of every lgseq error.");

static ERROR_TYPES: PyOnceLock<HashMap<&'static str, Py<PyType>>> = PyOnceLock::new();

/// Raise the exception class named after the core error.
fn raise(py: Python<'_>, e: impl Into<Error>) -> PyErr {
    let e = e.into();
    let msg = e.to_string();
    match ERROR_TYPES.get(py).and_then(|m| m.get(e.name())) {
        Some(t) => PyErr::from_type(t.bind(py).clone(), msg),
        None => LgseqError::new_err(msg),
    }
}

/// Codec settings; every keyword is optional and defaults to the core value.
#[pyclass(name = "Config", frozen, from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: CodecConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (*, x_range=None, y_range=None, x_bins=None, y_bins=None, max_edges=None,
        max_prompt_points=None, merge_eps=None, score_threshold=None, adjacency_threshold=None,
        points_per_lane=None, seed=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        x_range: Option<[f64; 2]>,
        y_range: Option<[f64; 2]>,
        x_bins: Option<u32>,
        y_bins: Option<u32>,
        max_edges: Option<usize>,
        max_prompt_points: Option<usize>,
        merge_eps: Option<f64>,
        score_threshold: Option<f64>,
        adjacency_threshold: Option<f64>,
        points_per_lane: Option<usize>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let d = CodecConfig::default();
        let inner = CodecConfig {
            x_range: x_range.unwrap_or(d.x_range),
            y_range: y_range.unwrap_or(d.y_range),
            x_bins: x_bins.unwrap_or(d.x_bins),
            y_bins: y_bins.unwrap_or(d.y_bins),
            max_edges: max_edges.unwrap_or(d.max_edges),
            max_prompt_points: max_prompt_points.unwrap_or(d.max_prompt_points),
            merge_eps: merge_eps.unwrap_or(d.merge_eps),
            score_threshold: score_threshold.unwrap_or(d.score_threshold),
            adjacency_threshold: adjacency_threshold.unwrap_or(d.adjacency_threshold),
            points_per_lane: points_per_lane.unwrap_or(d.points_per_lane),
            seed: seed.unwrap_or(d.seed),
        };
        inner.validate().map_err(|e| raise(py, e))?;
        Ok(Self { inner })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        lgseq_core::Vocabulary::new(&self.inner).size()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn cfg_of(config: Option<PyConfig>) -> CodecConfig {
    config.map(|c| c.inner).unwrap_or_default()
}

fn parse_doc(py: Python<'_>, graph_json: &str) -> PyResult<GraphDoc> {
    io::parse_graph(graph_json).map_err(|e| raise(py, e))
}

/// Graph JSON (lanes or DAG) to the padded edge-sequence tokens.
#[pyfunction]
#[pyo3(signature = (graph_json, config=None))]
fn encode(py: Python<'_>, graph_json: &str, config: Option<PyConfig>) -> PyResult<Vec<u32>> {
    let cfg = cfg_of(config);
    let dag = parse_doc(py, graph_json)?.to_dag(&cfg).map_err(|e| raise(py, e))?;
    let seq = lgseq_core::encode(&dag, &cfg).map_err(|e| raise(py, e))?;
    Ok(seq.tokens(&cfg))
}

/// Tokens to DAG JSON (or lane-graph JSON with `lanes=True`).
#[pyfunction]
#[pyo3(signature = (tokens, config=None, lenient=false, lanes=false))]
fn decode(py: Python<'_>, tokens: Vec<u32>, config: Option<PyConfig>, lenient: bool, lanes: bool) -> PyResult<String> {
    let cfg = cfg_of(config);
    let dag = if lenient {
        lgseq_core::decode_lenient(&tokens, &cfg).dag
    } else {
        lgseq_core::decode(&tokens, &cfg).map_err(|e| raise(py, e))?
    };
    Ok(if lanes {
        io::lanegraph_to_json(&lgseq_core::dag_to_lanegraph(&dag, &cfg))
    } else {
        io::dag_to_json(&dag)
    })
}

/// Grammar violation names, empty for a valid sequence.
#[pyfunction]
#[pyo3(signature = (tokens, config=None))]
fn validate_sequence(tokens: Vec<u32>, config: Option<PyConfig>) -> Vec<String> {
    lgseq_core::validate_sequence(&tokens, &cfg_of(config))
        .iter()
        .map(|e| e.name().to_string())
        .collect()
}

fn flat(p: &PromptSet) -> Vec<u32> {
    p.points.iter().flat_map(|q| [q.xb, q.yb]).collect()
}

/// Prompt key points as flat `[xb0, yb0, xb1, yb1, ...]`, extraction order.
#[pyfunction]
#[pyo3(signature = (graph_json, config=None))]
fn extract_keypoints(py: Python<'_>, graph_json: &str, config: Option<PyConfig>) -> PyResult<Vec<u32>> {
    let cfg = cfg_of(config);
    let lanes = parse_doc(py, graph_json)?.to_lanes(&cfg);
    let p = lgseq_core::extract_keypoints(&lanes, &cfg).map_err(|e| raise(py, e))?;
    Ok(flat(&p))
}

#[pyfunction]
fn shuffle_prompt(points: Vec<u32>, seed: u64) -> PyResult<Vec<u32>> {
    if points.len() % 2 != 0 {
        return Err(LgseqError::new_err("points must hold (xb, yb) pairs"));
    }
    let p = PromptSet::from_points(points.chunks(2).map(|c| QuantPoint::new(c[0], c[1])).collect());
    Ok(flat(&lgseq_core::shuffle_prompt(&p, seed)))
}

/// `(input, target)` for one graph; `line` selects the RNG stream like the
/// CLI's input line index.
#[pyfunction]
#[pyo3(signature = (graph_json, seed, line=0, config=None))]
fn assemble_training_pair(
    py: Python<'_>,
    graph_json: &str,
    seed: u64,
    line: u64,
    config: Option<PyConfig>,
) -> PyResult<(Vec<u32>, Vec<u32>)> {
    let cfg = cfg_of(config);
    let doc = parse_doc(py, graph_json)?;
    let dag = doc.to_dag(&cfg).map_err(|e| raise(py, e))?;
    let seq = lgseq_core::encode(&dag, &cfg).map_err(|e| raise(py, e))?;
    let prompt = lgseq_core::extract_keypoints(&doc.to_lanes(&cfg), &cfg).map_err(|e| raise(py, e))?;
    let pair = lgseq_core::assemble_training_pair(&seq, &prompt, &cfg, &mut stream_rng(seed, line))
        .map_err(|e| raise(py, e))?;
    Ok((pair.input, pair.target))
}

fn replay(py: Python<'_>, tokens: &[u32], cfg: &CodecConfig) -> PyResult<DecoderState> {
    let mut s = DecoderState::new();
    for &t in tokens {
        s.advance(t, cfg).map_err(|e| raise(py, e))?;
    }
    Ok(s)
}

/// Token ids allowed after the edge-sequence prefix `tokens`.
#[pyfunction]
#[pyo3(signature = (tokens, config=None))]
fn next_mask(py: Python<'_>, tokens: Vec<u32>, config: Option<PyConfig>) -> PyResult<Vec<u32>> {
    let cfg = cfg_of(config);
    let s = replay(py, &tokens, &cfg)?;
    Ok(lgseq_core::next_mask(&s, &cfg).map_err(|e| raise(py, e))?.ids())
}

/// Next token after `tokens` under `probs`, greedy unless `sample`.
#[pyfunction]
#[pyo3(signature = (tokens, probs, sample=false, seed=0, config=None))]
fn step(
    py: Python<'_>,
    tokens: Vec<u32>,
    probs: Vec<f64>,
    sample: bool,
    seed: u64,
    config: Option<PyConfig>,
) -> PyResult<u32> {
    let cfg = cfg_of(config);
    let s = replay(py, &tokens, &cfg)?;
    let mode = if sample { Mode::Sample } else { Mode::Greedy };
    let mut rng = stream_rng(seed, 0);
    let (tok, _) = lgseq_core::step(s, &probs, mode, &mut rng as &mut dyn RngCore, &cfg).map_err(|e| raise(py, e))?;
    Ok(tok)
}

/// NLL of `target` under a row-major `rows x cols` table.
#[pyfunction]
#[pyo3(signature = (target, probs, rows, cols, config=None))]
fn sequence_nll(
    py: Python<'_>,
    target: Vec<u32>,
    probs: Vec<f64>,
    rows: usize,
    cols: usize,
    config: Option<PyConfig>,
) -> PyResult<f64> {
    if probs.len() != rows * cols {
        return Err(LgseqError::new_err(format!("{} probabilities for a {rows}x{cols} table", probs.len())));
    }
    let cfg = cfg_of(config);
    let table = ProbTable::new(rows, cols, probs);
    lgseq_core::sequence_nll(&target, &table, &TokenWeights::default(), &cfg).map_err(|e| raise(py, e))
}

#[pymodule]
fn lgseq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    let base = py.get_type::<LgseqError>();
    m.add("LgseqError", &base)?;
    let mut types = HashMap::new();
    for &name in Error::NAMES {
        let qual = CString::new(format!("lgseq.{name}")).expect("no NUL in names");
        let t = PyErr::new_type(py, &qual, None, Some(&base), None)?;
        m.add(name, t.bind(py))?;
        types.insert(name, t);
    }
    let _ = ERROR_TYPES.set(py, types);
    m.add("__version__", lgseq_core::VERSION)?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(validate_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(extract_keypoints, m)?)?;
    m.add_function(wrap_pyfunction!(shuffle_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_training_pair, m)?)?;
    m.add_function(wrap_pyfunction!(next_mask, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_nll, m)?)?;
    Ok(())
}
