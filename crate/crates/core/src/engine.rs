//! Grammar-constrained auto-regressive decoding over externally supplied
//! token distributions, and the weighted sequence negative log-likelihood.
//!
//! The engine never embeds a model. Each step takes a probability vector over
//! the vocabulary, zeroes every token the sequence grammar forbids at the
//! current position, and picks a token from what remains. Any stream the
//! engine finishes therefore decodes strictly.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};

use crate::codec::{decode, EdgeSextet, KeypointRegistry};
use crate::config::CodecConfig;
use crate::error::{EngineError, FormatError};
use crate::graph::KeyPointDag;
use crate::quantizer::QuantPoint;
use crate::vocab::{KeypointClass, TokenKind, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Reading `START`, prompt pairs and `EOK`.
    Prompt,
    Edges,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Greedy,
    Sample,
}

/// Position in the sequence grammar.
#[derive(Debug, Clone)]
pub struct DecoderState {
    phase: Phase,
    /// Slot within the current sextet, or within the current prompt pair.
    slot: usize,
    partial: [u32; 6],
    registry: KeypointRegistry,
    sextets: usize,
    prompt_points: usize,
    tokens: Vec<u32>,
    edge_start: usize,
}

impl DecoderState {
    /// State at the start of an edge sequence.
    pub fn new() -> Self {
        Self {
            phase: Phase::Edges,
            slot: 0,
            partial: [0; 6],
            registry: KeypointRegistry::default(),
            sextets: 0,
            prompt_points: 0,
            tokens: Vec::new(),
            edge_start: 0,
        }
    }

    /// State before `START`: the prompt is consumed before the edges.
    pub fn with_prompt() -> Self {
        Self {
            phase: Phase::Prompt,
            ..Self::new()
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn registry(&self) -> &KeypointRegistry {
        &self.registry
    }

    pub fn emitted_keypoints(&self) -> usize {
        self.registry.emitted()
    }

    /// Every token consumed so far, prompt included.
    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    /// Tokens consumed since the edge sequence started.
    pub fn edge_tokens(&self) -> &[u32] {
        &self.tokens[self.edge_start..]
    }

    /// Consume `token`, which must be allowed by [`next_mask`].
    pub fn advance(&mut self, token: u32, cfg: &CodecConfig) -> Result<(), EngineError> {
        let mask = next_mask(self, cfg)?;
        if !mask.contains(token) {
            return Err(EngineError::BadDistribution {
                position: self.tokens.len(),
                reason: format!("token {token} is masked at this position"),
            });
        }
        self.push(token, cfg);
        Ok(())
    }

    fn push(&mut self, token: u32, cfg: &CodecConfig) {
        let vocab = Vocabulary::new(cfg);
        self.tokens.push(token);
        match self.phase {
            Phase::Prompt => {
                if token == vocab.eok() {
                    self.phase = Phase::Edges;
                    self.slot = 0;
                    self.edge_start = self.tokens.len();
                } else if token != vocab.start() {
                    self.slot ^= 1;
                    if self.slot == 0 {
                        self.prompt_points += 1;
                    }
                }
            }
            Phase::Edges => {
                if self.slot == 0 && token == vocab.eos() {
                    self.phase = Phase::Done;
                    return;
                }
                self.partial[self.slot] = token;
                self.slot += 1;
                if self.slot == 6 {
                    let p = self.partial;
                    let s = EdgeSextet {
                        xb: p[0],
                        yb: p[1],
                        cls: vocab.class_of(p[2]).expect("masked class slot"),
                        con: p[3],
                        bxb: p[4],
                        byb: p[5],
                    };
                    self.registry.apply(&s);
                    self.sextets += 1;
                    self.slot = 0;
                }
            }
            Phase::Done => {}
        }
    }
}

impl Default for DecoderState {
    fn default() -> Self {
        Self::new()
    }
}

/// Tokens allowed at the next position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepMask {
    allowed: Vec<bool>,
}

impl StepMask {
    fn empty(size: usize) -> Self {
        Self {
            allowed: vec![false; size],
        }
    }

    fn allow(&mut self, token: u32) {
        self.allowed[token as usize] = true;
    }

    fn allow_range(&mut self, range: std::ops::Range<u32>) {
        for t in range {
            self.allow(t);
        }
    }

    pub fn contains(&self, token: u32) -> bool {
        self.allowed.get(token as usize).copied().unwrap_or(false)
    }

    pub fn ids(&self) -> Vec<u32> {
        (0..self.allowed.len() as u32).filter(|&t| self.allowed[t as usize]).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.allowed
    }
}

/// Occupied bins into which no legal CLONE exists.
fn dead_bins(reg: &KeypointRegistry, max_con: usize) -> Vec<QuantPoint> {
    let bins: Vec<QuantPoint> = reg.occupied().map(|(b, _)| b).collect();
    reg.clone_dead_targets(max_con).into_iter().map(|id| bins[id]).collect()
}

pub fn next_mask(s: &DecoderState, cfg: &CodecConfig) -> Result<StepMask, EngineError> {
    let vocab = Vocabulary::new(cfg);
    let mut m = StepMask::empty(vocab.size());
    let max_con = vocab.numeric_tokens() as usize - 1;
    match s.phase {
        Phase::Done => return Err(EngineError::DecoderDone),
        Phase::Prompt => {
            if s.tokens.is_empty() {
                m.allow(vocab.start());
            } else if s.slot == 1 {
                m.allow_range(0..cfg.y_bins);
            } else {
                m.allow(vocab.eok());
                if s.prompt_points < cfg.max_prompt_points {
                    m.allow_range(0..cfg.x_bins);
                }
            }
        }
        Phase::Edges => {
            let reg = &s.registry;
            match s.slot {
                0 => {
                    m.allow(vocab.eos());
                    if s.sextets < cfg.max_edges {
                        let mut dead_per_column = vec![0u32; cfg.x_bins as usize];
                        for b in dead_bins(reg, max_con) {
                            dead_per_column[b.xb as usize] += 1;
                        }
                        for (x, &dead) in dead_per_column.iter().enumerate() {
                            if dead < cfg.y_bins {
                                m.allow(x as u32);
                            }
                        }
                    }
                }
                1 => {
                    let x = s.partial[0];
                    for y in 0..cfg.y_bins {
                        let ok = match reg.lookup(QuantPoint::new(x, y)) {
                            None => true,
                            Some(id) => !reg.clone_parents(id, max_con).is_empty(),
                        };
                        if ok {
                            m.allow(y);
                        }
                    }
                }
                2 => {
                    if reg.lookup(QuantPoint::new(s.partial[0], s.partial[1])).is_some() {
                        m.allow(vocab.class_token(KeypointClass::Clone));
                    } else {
                        m.allow(vocab.class_token(KeypointClass::Ancestor));
                        if reg.cursor().is_some() {
                            m.allow(vocab.class_token(KeypointClass::Lineal));
                        }
                        if reg.emitted() > 0 {
                            m.allow(vocab.class_token(KeypointClass::Offshoot));
                        }
                    }
                }
                3 => match vocab.class_of(s.partial[2]).expect("masked class slot") {
                    KeypointClass::Ancestor | KeypointClass::Lineal => m.allow(0),
                    KeypointClass::Offshoot => {
                        m.allow_range(1..reg.emitted().min(max_con) as u32 + 1);
                    }
                    KeypointClass::Clone => {
                        let target = reg
                            .lookup(QuantPoint::new(s.partial[0], s.partial[1]))
                            .expect("clone target checked at slot 2");
                        for con in reg.clone_parents(target, max_con) {
                            m.allow(con);
                        }
                    }
                },
                4 => m.allow_range(0..cfg.x_bins),
                5 => m.allow_range(0..cfg.y_bins),
                _ => unreachable!("slot cycles 0..6"),
            }
        }
    }
    Ok(m)
}

/// Mask `probs`, pick a token, and advance the state.
pub fn step<R: Rng + ?Sized>(
    mut s: DecoderState,
    probs: &[f64],
    mode: Mode,
    rng: &mut R,
    cfg: &CodecConfig,
) -> Result<(u32, DecoderState), EngineError> {
    let position = s.tokens.len();
    let vocab = Vocabulary::new(cfg);
    if probs.len() != vocab.size() {
        return Err(EngineError::BadDistribution {
            position,
            reason: format!("expected {} entries, got {}", vocab.size(), probs.len()),
        });
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(EngineError::BadDistribution {
            position,
            reason: format!("entry {bad} is negative or non-finite"),
        });
    }
    let mask = next_mask(&s, cfg)?;
    let allowed = mask.as_slice();
    let total: f64 = probs
        .iter()
        .zip(allowed)
        .filter(|(_, &ok)| ok)
        .map(|(p, _)| p)
        .sum();
    if total <= 0.0 {
        return Err(EngineError::AllMaskedZero { position });
    }
    let token = match mode {
        Mode::Greedy => {
            let mut best: Option<(usize, f64)> = None;
            for (t, (&p, &ok)) in probs.iter().zip(allowed).enumerate() {
                if ok && best.is_none_or(|(_, bp)| p > bp) {
                    best = Some((t, p));
                }
            }
            best.expect("total > 0").0
        }
        Mode::Sample => {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (t, (&p, &ok)) in probs.iter().zip(allowed).enumerate() {
                if ok && p > 0.0 {
                    acc += p;
                    pick = Some(t);
                    if acc > u {
                        break;
                    }
                }
            }
            pick.expect("total > 0")
        }
    } as u32;
    s.push(token, cfg);
    Ok((token, s))
}

/// Source of one next-token distribution per decoding step.
pub trait ProbabilityProvider {
    fn distribution(&mut self, position: usize, state: &DecoderState) -> Result<Vec<f64>, EngineError>;
}

impl<F> ProbabilityProvider for F
where
    F: FnMut(usize, &DecoderState) -> Option<Vec<f64>>,
{
    fn distribution(&mut self, position: usize, state: &DecoderState) -> Result<Vec<f64>, EngineError> {
        self(position, state).ok_or(EngineError::ProviderExhausted { position })
    }
}

/// Row-major table of per-position distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

const TABLE_MAGIC: &str = "TOKPROB v1";

impl ProbTable {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "table data must be rows * cols");
        Self { rows, cols, data }
    }

    /// All mass on `tokens[i]` in row `i`.
    pub fn one_hot(tokens: &[u32], cols: usize) -> Self {
        let mut data = vec![0.0; tokens.len() * cols];
        for (i, &t) in tokens.iter().enumerate() {
            data[i * cols + t as usize] = 1.0;
        }
        Self::new(tokens.len(), cols, data)
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![1.0 / cols as f64; rows * cols])
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Header line, then row-major little-endian `f32` values.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), FormatError> {
        write!(w, "{TABLE_MAGIC} {} {}\n", self.rows, self.cols)?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for &v in &self.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, FormatError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| FormatError::Parse("missing table header".into()))?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| FormatError::Parse("table header is not UTF-8".into()))?;
        let dims = header
            .strip_prefix(TABLE_MAGIC)
            .ok_or_else(|| FormatError::Parse(format!("bad table header `{header}`")))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| FormatError::Parse(format!("bad dimension `{d}`"))))
            .collect::<Result<_, _>>()?;
        let [rows, cols] = dims[..] else {
            return Err(FormatError::Parse("table header needs rows and cols".into()));
        };
        let body = &bytes[nl + 1..];
        if body.len() != rows * cols * 4 {
            return Err(FormatError::Parse(format!(
                "expected {} bytes of table data, found {}",
                rows * cols * 4,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Ok(Self { rows, cols, data })
    }
}

impl ProbabilityProvider for &ProbTable {
    fn distribution(&mut self, position: usize, _: &DecoderState) -> Result<Vec<f64>, EngineError> {
        if position >= self.rows {
            return Err(EngineError::ProviderExhausted { position });
        }
        Ok(self.row(position).to_vec())
    }
}

/// Decoded tokens (padded edge-sequence form) and the DAG they describe.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tokens: Vec<u32>,
    pub dag: KeyPointDag,
}

/// Decode an edge sequence until EOS. Provider positions count from 0 at the
/// first edge token.
pub fn run<P: ProbabilityProvider + ?Sized, R: Rng + ?Sized>(
    provider: &mut P,
    cfg: &CodecConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<RunOutput, EngineError> {
    let mut state = DecoderState::new();
    let budget = cfg.edge_tokens();
    while state.phase() != Phase::Done && state.tokens.len() < budget {
        let probs = provider.distribution(state.tokens.len(), &state)?;
        state = step(state, &probs, mode, rng, cfg)?.1;
    }
    let mut tokens = state.tokens;
    tokens.resize(budget, Vocabulary::new(cfg).pad());
    let dag = decode(&tokens, cfg)?;
    Ok(RunOutput { tokens, dag })
}

/// Greedy [`run`]; no randomness is consumed.
pub fn run_greedy<P: ProbabilityProvider + ?Sized>(provider: &mut P, cfg: &CodecConfig) -> Result<RunOutput, EngineError> {
    run(provider, cfg, Mode::Greedy, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))
}

/// Per-token-kind loss weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenWeights {
    pub numeric: f64,
    pub class: f64,
    pub noise: f64,
    pub special: f64,
}

impl Default for TokenWeights {
    fn default() -> Self {
        Self {
            numeric: 1.0,
            class: 1.0,
            noise: 1.0,
            special: 1.0,
        }
    }
}

impl TokenWeights {
    pub fn weight(&self, kind: TokenKind) -> f64 {
        match kind {
            TokenKind::Numeric => self.numeric,
            TokenKind::Class => self.class,
            TokenKind::Noise => self.noise,
            TokenKind::Special | TokenKind::Unknown => self.special,
        }
    }
}

const ROW_SUM_TOL: f64 = 1e-3;

/// Weighted negative log-likelihood of `target`, skipping PAD positions.
pub fn sequence_nll(
    target: &[u32],
    table: &ProbTable,
    weights: &TokenWeights,
    cfg: &CodecConfig,
) -> Result<f64, EngineError> {
    if table.rows != target.len() {
        return Err(EngineError::LengthMismatch {
            target: target.len(),
            rows: table.rows,
        });
    }
    let vocab = Vocabulary::new(cfg);
    let mut total = 0.0;
    for (i, &tok) in target.iter().enumerate() {
        if tok == vocab.pad() {
            continue;
        }
        let bad = |reason: String| EngineError::NonDistributionRow { row: i, reason };
        if table.cols != vocab.size() {
            return Err(bad(format!("{} columns, vocabulary has {}", table.cols, vocab.size())));
        }
        if tok as usize >= table.cols {
            return Err(bad(format!("target token {tok} outside the vocabulary")));
        }
        let row = table.row(i);
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(bad("negative or non-finite entry".into()));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(bad(format!("row sums to {sum}")));
        }
        total += weights.weight(vocab.kind(tok)) * -row[tok as usize].ln();
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;
    use crate::graph::{DagEdge, Point3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> CodecConfig {
        CodecConfig::default()
    }

    fn feed(tokens: &[u32]) -> DecoderState {
        let mut s = DecoderState::new();
        for &t in tokens {
            s.advance(t, &cfg()).unwrap();
        }
        s
    }

    #[test]
    fn initial_mask_is_x_bins_and_eos() {
        let ids = next_mask(&DecoderState::new(), &cfg()).unwrap().ids();
        let mut expect: Vec<u32> = (0..200).collect();
        expect.push(207);
        assert_eq!(ids, expect);
    }

    #[test]
    fn class_slot_rules() {
        assert_eq!(next_mask(&feed(&[120, 40]), &cfg()).unwrap().ids(), vec![200]);
        let s = feed(&[120, 40, 200, 0, 120, 40, 130, 40]);
        assert_eq!(next_mask(&s, &cfg()).unwrap().ids(), vec![200, 201, 202]);
        // Occupied bins only admit a clone.
        let s = feed(&[120, 40, 200, 0, 120, 40, 130, 40, 201, 0, 1, 1, 140, 40, 202, 1, 1, 1, 130, 40]);
        assert_eq!(next_mask(&s, &cfg()).unwrap().ids(), vec![203]);
    }

    #[test]
    fn con_slot_rules() {
        let three = [120, 40, 200, 0, 1, 1, 130, 40, 201, 0, 1, 1, 140, 40, 201, 0, 1, 1];
        let mut toks = three.to_vec();
        toks.extend([150, 40, 202]);
        assert_eq!(next_mask(&feed(&toks), &cfg()).unwrap().ids(), vec![1, 2, 3]);
        let mut toks = three.to_vec();
        toks.extend([150, 40, 201]);
        assert_eq!(next_mask(&feed(&toks), &cfg()).unwrap().ids(), vec![0]);
        // Clone into key point 2 may only come from key point 1 (3 descends from 2).
        let mut toks = three.to_vec();
        toks.extend([130, 40, 203]);
        assert_eq!(next_mask(&feed(&toks), &cfg()).unwrap().ids(), vec![1]);
    }

    #[test]
    fn dead_end_bins_are_masked() {
        // A lone key point cannot be cloned into: no parent avoids a cycle.
        let s = feed(&[120, 40, 200, 0, 1, 1, 120]);
        let ids = next_mask(&s, &cfg()).unwrap();
        assert!(!ids.contains(40));
        assert!(ids.contains(41));
    }

    #[test]
    fn budget_forces_eos() {
        let c = CodecConfig { max_edges: 1, ..cfg() };
        let mut s = DecoderState::new();
        for t in [120, 40, 200, 0, 1, 1] {
            s.advance(t, &c).unwrap();
        }
        assert_eq!(next_mask(&s, &c).unwrap().ids(), vec![207]);
    }

    #[test]
    fn prompt_phase() {
        let c = cfg();
        let mut s = DecoderState::with_prompt();
        assert_eq!(next_mask(&s, &c).unwrap().ids(), vec![205]);
        for t in [205, 3, 4, 206] {
            s.advance(t, &c).unwrap();
        }
        assert_eq!(s.phase(), Phase::Edges);
        assert!(s.edge_tokens().is_empty());
        assert!(s.advance(208, &c).is_err());
    }

    #[test]
    fn step_rules() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut one_hot = vec![0.0; 209];
        one_hot[120] = 1.0;
        for mode in [Mode::Greedy, Mode::Sample] {
            let (t, _) = step(DecoderState::new(), &one_hot, mode, &mut rng, &c).unwrap();
            assert_eq!(t, 120);
        }
        let uniform = vec![1.0 / 209.0; 209];
        let (t, s) = step(feed(&[120, 40]), &uniform, Mode::Sample, &mut rng, &c).unwrap();
        assert_eq!(t, 200);
        assert_eq!(s.slot(), 3);
        let mut illegal = vec![0.0; 209];
        illegal[208] = 1.0;
        assert_eq!(
            step(DecoderState::new(), &illegal, Mode::Greedy, &mut rng, &c).unwrap_err(),
            EngineError::AllMaskedZero { position: 0 }
        );
        // Ties go to the lowest id.
        let (t, _) = step(DecoderState::new(), &uniform, Mode::Greedy, &mut rng, &c).unwrap();
        assert_eq!(t, 0);
        assert!(matches!(
            step(DecoderState::new(), &[1.0; 3], Mode::Greedy, &mut rng, &c),
            Err(EngineError::BadDistribution { .. })
        ));
    }

    #[test]
    fn replay_and_immediate_eos() {
        let c = cfg();
        let kps = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(10.0, 2.0, 0.0), Point3::new(20.0, -1.0, 0.0)];
        let d = KeyPointDag {
            edges: vec![
                DagEdge { src: 0, dst: 1, control: kps[0].xy().lerp(kps[1].xy(), 0.5), score: None },
                DagEdge { src: 0, dst: 2, control: kps[0].xy().lerp(kps[2].xy(), 0.5), score: None },
                DagEdge { src: 1, dst: 2, control: kps[1].xy().lerp(kps[2].xy(), 0.5), score: None },
            ],
            keypoints: kps,
        };
        let toks = encode(&d, &c).unwrap().tokens(&c);
        let table = ProbTable::one_hot(&toks, 209);
        let out = run_greedy(&mut &table, &c).unwrap();
        assert_eq!(out.tokens, toks);
        assert_eq!(out.dag.edges.len(), 3);

        let eos = ProbTable::one_hot(&[207], 209);
        let out = run_greedy(&mut &eos, &c).unwrap();
        assert!(out.dag.keypoints.is_empty());
    }

    #[test]
    fn nll_cases() {
        let c = cfg();
        let target = [120, 40, 200, 0, 120, 40, 207, 208, 208];
        let w = TokenWeights::default();
        let one_hot = ProbTable::one_hot(&target, 209);
        assert!(sequence_nll(&target, &one_hot, &w, &c).unwrap().abs() < 1e-9);
        let uni = ProbTable::uniform(target.len(), 209);
        let nll = sequence_nll(&target, &uni, &w, &c).unwrap();
        assert!((nll - 7.0 * 209f64.ln()).abs() < 1e-9);
        assert_eq!(sequence_nll(&[208; 4], &ProbTable::uniform(4, 209), &w, &c).unwrap(), 0.0);
        assert!(matches!(
            sequence_nll(&target, &ProbTable::uniform(3, 209), &w, &c),
            Err(EngineError::LengthMismatch { target: 9, rows: 3 })
        ));
        let mut bad = uni.clone();
        bad.row_mut(0)[0] = 5.0;
        assert!(matches!(
            sequence_nll(&target, &bad, &w, &c),
            Err(EngineError::NonDistributionRow { row: 0, .. })
        ));
        // Garbage at PAD rows is ignored.
        let mut padded = uni.clone();
        padded.row_mut(8)[0] = -3.0;
        assert_eq!(sequence_nll(&target, &padded, &w, &c).unwrap(), nll);
        let noise_w = TokenWeights { noise: 0.5, ..w };
        let tgt = [204, 207];
        let val = sequence_nll(&tgt, &ProbTable::uniform(2, 209), &noise_w, &c).unwrap();
        assert!((val - 1.5 * 209f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn table_bytes_roundtrip() {
        let t = ProbTable::new(2, 3, vec![0.5, 0.25, 0.25, 1.0, 0.0, 0.0]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"TOKPROB v1 2 3\n"));
        assert_eq!(buf.len(), 15 + 24);
        assert_eq!(ProbTable::read_from(&buf[..]).unwrap(), t);
        assert!(ProbTable::read_from(&b"TOKPROB v1 2 3\n\0\0"[..]).is_err());
        assert!(ProbTable::read_from(&b"NOPE 1 1\n\0\0\0\0"[..]).is_err());
    }
}
