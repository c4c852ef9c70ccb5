//! Edge-sequence codec.
//!
//! A key-point DAG is serialized as a list of sextets
//! `(xb, yb, cls, con, bxb, byb)`. Every sextet realizes one key point at
//! `(xb, yb)` together with the curve that arrives there:
//!
//! * `ANCESTOR` starts a new root; no curve, control bins repeat the point.
//! * `LINEAL` adds a new key point fed by the key point of the previous sextet.
//! * `OFFSHOOT` adds a new key point fed by the new key point numbered `con`.
//! * `CLONE` adds an edge from key point `con` to the already emitted key
//!   point whose bins equal `(xb, yb)`.
//!
//! New key points are numbered 1, 2, ... in emission order. Roots and the
//! children of every key point are visited right-front first (larger `xb`,
//! then smaller `yb`), depth first.

use std::cmp::Reverse;
use std::collections::HashMap;

use rand::{Rng, RngCore};

use crate::config::CodecConfig;
use crate::error::{DecodeError, EncodeError, GraphError};
use crate::graph::{validate_dag, DagEdge, KeyPointDag, Point3};
use crate::prompt::{shuffle_prompt, Provenance, PromptSet};
use crate::quantizer::{dequantize, quantize, QuantPoint};
use crate::vocab::{KeypointClass, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeSextet {
    pub xb: u32,
    pub yb: u32,
    pub cls: KeypointClass,
    pub con: u32,
    pub bxb: u32,
    pub byb: u32,
}

impl EdgeSextet {
    pub fn point(&self) -> QuantPoint {
        QuantPoint::new(self.xb, self.yb)
    }

    pub fn control(&self) -> QuantPoint {
        QuantPoint::new(self.bxb, self.byb)
    }

    pub fn tokens(&self, vocab: &Vocabulary) -> [u32; 6] {
        [
            self.xb,
            self.yb,
            vocab.class_token(self.cls),
            self.con,
            self.bxb,
            self.byb,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeSequence {
    pub sextets: Vec<EdgeSextet>,
}

impl EdgeSequence {
    /// Flattened sextets, EOS, then PAD up to `6 * max_edges + 1` tokens.
    pub fn tokens(&self, cfg: &CodecConfig) -> Vec<u32> {
        let vocab = Vocabulary::new(cfg);
        let mut out: Vec<u32> = self.sextets.iter().flat_map(|s| s.tokens(&vocab)).collect();
        out.push(vocab.eos());
        out.resize(out.len().max(cfg.edge_tokens()), vocab.pad());
        out
    }

    /// Number of sextets that introduce a new key point.
    pub fn new_keypoints(&self) -> usize {
        self.sextets.iter().filter(|s| s.cls.is_new_keypoint()).count()
    }
}

/// Key points and edges realized so far while reading a sequence left to right.
#[derive(Debug, Clone, Default)]
pub struct KeypointRegistry {
    bins: Vec<QuantPoint>,
    index_of: HashMap<QuantPoint, usize>,
    succ: Vec<Vec<usize>>,
    edges: Vec<(usize, usize, QuantPoint)>,
    cursor: Option<usize>,
}

impl KeypointRegistry {
    /// Number of new key points emitted so far.
    pub fn emitted(&self) -> usize {
        self.bins.len()
    }

    /// Key point realized by the previous sextet.
    pub fn cursor(&self) -> Option<usize> {
        self.cursor
    }

    /// Zero-based id of the key point at `bins`.
    pub fn lookup(&self, bins: QuantPoint) -> Option<usize> {
        self.index_of.get(&bins).copied()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (QuantPoint, usize)> + '_ {
        self.bins.iter().copied().enumerate().map(|(i, b)| (b, i))
    }

    /// Marks every key point reachable from `from`, `from` included.
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.bins.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.succ[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// 1-based parent indices a CLONE into `target` may use without closing a cycle.
    pub fn clone_parents(&self, target: usize, max_index: usize) -> Vec<u32> {
        let reach = self.reachable_from(target);
        (0..self.bins.len().min(max_index))
            .filter(|&p| !reach[p])
            .map(|p| p as u32 + 1)
            .collect()
    }

    /// Key points that no legal CLONE can target.
    pub fn clone_dead_targets(&self, max_index: usize) -> Vec<usize> {
        let m = self.bins.len().min(max_index);
        // a parent among the candidates is never reachable from its child
        let mut alive = vec![false; self.bins.len()];
        for &(p, t, _) in &self.edges {
            if p < m {
                alive[t] = true;
            }
        }
        (0..self.bins.len())
            .filter(|&t| !alive[t] && self.clone_parents(t, max_index).is_empty())
            .collect()
    }

    /// Check a sextet against the emission rules without applying it.
    /// The returned error carries `index` as its position.
    pub fn check(&self, s: &EdgeSextet, index: usize) -> Result<(), DecodeError> {
        let emitted = self.emitted();
        let con_range = |con: u32| con >= 1 && (con as usize) <= emitted;
        let out_of_range = || DecodeError::ConOutOfRange {
            index,
            con: s.con,
            emitted,
        };
        match s.cls {
            KeypointClass::Ancestor | KeypointClass::Lineal => {
                if s.con != 0 {
                    return Err(out_of_range());
                }
                if s.cls == KeypointClass::Lineal && self.cursor.is_none() {
                    return Err(DecodeError::LinealWithoutPrevious { index });
                }
            }
            KeypointClass::Offshoot | KeypointClass::Clone => {
                if !con_range(s.con) {
                    return Err(out_of_range());
                }
            }
        }
        match (s.cls, self.lookup(s.point())) {
            (KeypointClass::Clone, None) => Err(DecodeError::CloneTargetMissing { index }),
            (KeypointClass::Clone, Some(target)) => {
                if self.reachable_from(target)[s.con as usize - 1] {
                    Err(DecodeError::CloneCycle { index })
                } else {
                    Ok(())
                }
            }
            (_, Some(_)) => Err(DecodeError::DuplicateKeypoint { index }),
            (_, None) => Ok(()),
        }
    }

    /// Apply a sextet that passed [`check`](Self::check).
    pub fn apply(&mut self, s: &EdgeSextet) {
        let target = match s.cls {
            KeypointClass::Clone => self.index_of[&s.point()],
            _ => {
                let id = self.bins.len();
                self.bins.push(s.point());
                self.index_of.insert(s.point(), id);
                self.succ.push(Vec::new());
                id
            }
        };
        let parent = match s.cls {
            KeypointClass::Ancestor => None,
            KeypointClass::Lineal => self.cursor,
            KeypointClass::Offshoot | KeypointClass::Clone => Some(s.con as usize - 1),
        };
        if let Some(p) = parent {
            self.succ[p].push(target);
            self.edges.push((p, target, s.control()));
        }
        self.cursor = Some(target);
    }

    /// Materialize the DAG with key points and controls at bin centers.
    pub fn to_dag(&self, cfg: &CodecConfig) -> KeyPointDag {
        let center = |q: QuantPoint| dequantize(q, cfg).expect("registry bins are in range");
        KeyPointDag {
            keypoints: self
                .bins
                .iter()
                .map(|&q| {
                    let p = center(q);
                    Point3::new(p.x, p.y, 0.0)
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(src, dst, c)| DagEdge {
                    src,
                    dst,
                    control: center(c),
                    score: None,
                })
                .collect(),
        }
    }
}

/// Right-front first: larger x bin, then smaller y bin.
fn right_front_key(q: QuantPoint) -> (Reverse<u32>, u32) {
    (Reverse(q.xb), q.yb)
}

/// Serialize a DAG into its canonical sextet list.
pub fn encode(d: &KeyPointDag, cfg: &CodecConfig) -> Result<EdgeSequence, EncodeError> {
    let violations = validate_dag(d, cfg.merge_eps);
    if !violations.is_empty() {
        return Err(GraphError::InvalidDag(violations).into());
    }
    let k = d.keypoints.len();
    let in_deg = d.in_degrees();
    let roots = in_deg.iter().filter(|&&n| n == 0).count();
    let sextets = d.edges.len() + roots;
    if sextets > cfg.max_edges {
        return Err(EncodeError::TooManyEdges {
            sextets,
            max: cfg.max_edges,
        });
    }
    let max_kp = cfg.coord_tokens() as usize - 1;
    if k > max_kp {
        return Err(EncodeError::TooManyKeypoints { count: k, max: max_kp });
    }

    let q = |p: crate::graph::Point2| quantize(p, cfg).expect("validated finite");
    let bins: Vec<QuantPoint> = d.keypoints.iter().map(|p| q(p.xy())).collect();
    let mut seen: HashMap<QuantPoint, usize> = HashMap::new();
    for (i, b) in bins.iter().enumerate() {
        if let Some(&j) = seen.get(b) {
            return Err(EncodeError::CloneAmbiguity(j, i, b.xb, b.yb));
        }
        seen.insert(*b, i);
    }

    let mut children: Vec<Vec<(usize, QuantPoint, usize)>> = vec![Vec::new(); k];
    for (idx, e) in d.edges.iter().enumerate() {
        children[e.src].push((e.dst, q(e.control), idx));
    }
    for c in &mut children {
        c.sort_by_key(|&(dst, ctrl, idx)| (right_front_key(bins[dst]), ctrl.xb, ctrl.yb, idx));
    }
    let mut root_ids: Vec<usize> = (0..k).filter(|&i| in_deg[i] == 0).collect();
    root_ids.sort_by_key(|&i| (right_front_key(bins[i]), i));

    let mut enc = Emitter {
        bins: &bins,
        children: &children,
        index: vec![None; k],
        next_index: 1,
        cursor: None,
        out: Vec::with_capacity(sextets),
    };
    for r in root_ids {
        enc.emit_new(r, KeypointClass::Ancestor, 0, bins[r]);
        enc.visit(r);
    }
    Ok(EdgeSequence { sextets: enc.out })
}

struct Emitter<'a> {
    bins: &'a [QuantPoint],
    children: &'a [Vec<(usize, QuantPoint, usize)>],
    index: Vec<Option<u32>>,
    next_index: u32,
    cursor: Option<usize>,
    out: Vec<EdgeSextet>,
}

impl Emitter<'_> {
    fn emit_new(&mut self, kp: usize, cls: KeypointClass, con: u32, ctrl: QuantPoint) {
        self.index[kp] = Some(self.next_index);
        self.next_index += 1;
        self.push(kp, cls, con, ctrl);
    }

    fn push(&mut self, kp: usize, cls: KeypointClass, con: u32, ctrl: QuantPoint) {
        let b = self.bins[kp];
        self.out.push(EdgeSextet {
            xb: b.xb,
            yb: b.yb,
            cls,
            con,
            bxb: ctrl.xb,
            byb: ctrl.yb,
        });
        self.cursor = Some(kp);
    }

    fn visit(&mut self, u: usize) {
        let parent_index = self.index[u].expect("visited key points are indexed");
        for &(v, ctrl, _) in &self.children[u] {
            if self.index[v].is_some() {
                self.push(v, KeypointClass::Clone, parent_index, ctrl);
            } else {
                if self.cursor == Some(u) {
                    self.emit_new(v, KeypointClass::Lineal, 0, ctrl);
                } else {
                    self.emit_new(v, KeypointClass::Offshoot, parent_index, ctrl);
                }
                self.visit(v);
            }
        }
    }
}

/// Result of parsing a token stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decoded {
    pub dag: KeyPointDag,
    pub sequence: EdgeSequence,
    /// Sextets skipped in lenient mode, with the rule each one broke.
    pub skipped: Vec<DecodeError>,
}

/// Strict decode: the first rule violation is an error.
pub fn decode(tokens: &[u32], cfg: &CodecConfig) -> Result<KeyPointDag, DecodeError> {
    parse(tokens, cfg, true).map(|d| d.dag)
}

/// Lenient decode: malformed sextets are skipped and reported.
pub fn decode_lenient(tokens: &[u32], cfg: &CodecConfig) -> Decoded {
    parse(tokens, cfg, false).expect("lenient parsing does not fail")
}

/// Every rule the stream breaks; empty exactly when strict decoding succeeds.
pub fn validate_sequence(tokens: &[u32], cfg: &CodecConfig) -> Vec<DecodeError> {
    decode_lenient(tokens, cfg).skipped
}

/// Read one sextet at `tokens[i..i + 6]`; `None` means an NCLS (noise) sextet.
fn read_sextet(
    tokens: &[u32],
    i: usize,
    cfg: &CodecConfig,
    vocab: &Vocabulary,
) -> Result<Option<EdgeSextet>, DecodeError> {
    let t = &tokens[i..i + 6];
    if t[2] == vocab.ncls() {
        return Ok(None);
    }
    let limits = [cfg.x_bins, cfg.y_bins, 0, vocab.numeric_tokens(), cfg.x_bins, cfg.y_bins];
    for slot in [0, 1, 3, 4, 5] {
        if t[slot] >= limits[slot] {
            return Err(DecodeError::BadSlotToken {
                index: i + slot,
                token: t[slot],
                slot,
            });
        }
    }
    let cls = vocab.class_of(t[2]).ok_or(DecodeError::BadSlotToken {
        index: i + 2,
        token: t[2],
        slot: 2,
    })?;
    Ok(Some(EdgeSextet {
        xb: t[0],
        yb: t[1],
        cls,
        con: t[3],
        bxb: t[4],
        byb: t[5],
    }))
}

fn parse(tokens: &[u32], cfg: &CodecConfig, strict: bool) -> Result<Decoded, DecodeError> {
    let vocab = Vocabulary::new(cfg);
    let mut reg = KeypointRegistry::default();
    let mut sequence = EdgeSequence::default();
    let mut skipped = Vec::new();
    let report = |e: DecodeError, skipped: &mut Vec<DecodeError>| {
        if strict {
            Err(e)
        } else {
            skipped.push(e);
            Ok(())
        }
    };

    let mut i = 0;
    let mut count = 0;
    loop {
        if i >= tokens.len() {
            report(DecodeError::MissingEos, &mut skipped)?;
            break;
        }
        if tokens[i] == vocab.eos() {
            if let Some(off) = tokens[i + 1..].iter().position(|&t| t != vocab.pad()) {
                report(DecodeError::TrailingTokens { index: i + 1 + off }, &mut skipped)?;
            }
            break;
        }
        if i + 6 > tokens.len() {
            report(DecodeError::TruncatedSextet { index: i }, &mut skipped)?;
            report(DecodeError::MissingEos, &mut skipped)?;
            break;
        }
        count += 1;
        if count > cfg.max_edges {
            report(DecodeError::TooManySextets { index: i }, &mut skipped)?;
        } else {
            match read_sextet(tokens, i, cfg, &vocab) {
                Ok(None) => {}
                Ok(Some(s)) => match reg.check(&s, i) {
                    Ok(()) => {
                        reg.apply(&s);
                        sequence.sextets.push(s);
                    }
                    Err(e) => report(e, &mut skipped)?,
                },
                Err(e) => report(e, &mut skipped)?,
            }
        }
        i += 6;
    }
    Ok(Decoded {
        dag: reg.to_dag(cfg),
        sequence,
        skipped,
    })
}

/// Outcome of comparing a DAG with its decoded reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    pub topology_exact: bool,
    /// Largest per-axis distance over key points and edge controls, in meters.
    pub max_deviation: f64,
}

/// Compare `original` with `decoded`, pairing key points by quantized bins.
pub fn compare_roundtrip(original: &KeyPointDag, decoded: &KeyPointDag, cfg: &CodecConfig) -> RoundTrip {
    let fail = RoundTrip {
        topology_exact: false,
        max_deviation: f64::INFINITY,
    };
    if original.keypoints.len() != decoded.keypoints.len() || original.edges.len() != decoded.edges.len() {
        return fail;
    }
    let bins = |p: Point3| quantize(p.xy(), cfg).ok();
    let decoded_at: HashMap<QuantPoint, usize> = decoded
        .keypoints
        .iter()
        .enumerate()
        .filter_map(|(i, p)| Some((bins(*p)?, i)))
        .collect();
    let mut map = Vec::with_capacity(original.keypoints.len());
    let mut dev: f64 = 0.0;
    let axis_dev = |a: crate::graph::Point2, b: crate::graph::Point2| (a.x - b.x).abs().max((a.y - b.y).abs());
    for p in &original.keypoints {
        let Some(&j) = bins(*p).and_then(|b| decoded_at.get(&b)) else {
            return fail;
        };
        dev = dev.max(axis_dev(p.xy(), decoded.keypoints[j].xy()));
        map.push(j);
    }
    let edge_key = |src: usize, dst: usize, c: crate::graph::Point2| {
        let q = quantize(c, cfg).unwrap_or(QuantPoint::new(u32::MAX, u32::MAX));
        (src, dst, q.xb, q.yb)
    };
    let mut a: Vec<_> = original
        .edges
        .iter()
        .map(|e| (edge_key(map[e.src], map[e.dst], e.control), e.control))
        .collect();
    let mut b: Vec<_> = decoded
        .edges
        .iter()
        .map(|e| (edge_key(e.src, e.dst, e.control), e.control))
        .collect();
    a.sort_by(|x, y| x.0.cmp(&y.0));
    b.sort_by(|x, y| x.0.cmp(&y.0));
    let mut topology_exact = true;
    for ((ka, ca), (kb, cb)) in a.iter().zip(&b) {
        if (ka.0, ka.1) != (kb.0, kb.1) {
            topology_exact = false;
        }
        dev = dev.max(axis_dev(*ca, *cb));
    }
    RoundTrip {
        topology_exact,
        max_deviation: if topology_exact { dev } else { f64::INFINITY },
    }
}

/// Aligned model input and supervision target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub input: Vec<u32>,
    pub target: Vec<u32>,
    /// Final shuffled prompt, noise key points included.
    pub prompt: PromptSet,
}

/// Random filler sextets that complete a sequence to `count` more sextets.
fn noise_sextets<R: Rng + ?Sized>(
    count: usize,
    mut new_keypoints: usize,
    cfg: &CodecConfig,
    rng: &mut R,
) -> Vec<EdgeSextet> {
    let max_con = cfg.coord_tokens() as usize - 1;
    (0..count)
        .map(|_| {
            let mut cls = KeypointClass::ALL[rng.random_range(0..4)];
            if cls.has_parent_index() && new_keypoints == 0 {
                cls = KeypointClass::Ancestor;
            }
            let con = if cls.has_parent_index() {
                rng.random_range(1..=new_keypoints.min(max_con)) as u32
            } else {
                0
            };
            if cls.is_new_keypoint() {
                new_keypoints += 1;
            }
            EdgeSextet {
                xb: rng.random_range(0..cfg.x_bins),
                yb: rng.random_range(0..cfg.y_bins),
                cls,
                con,
                bxb: rng.random_range(0..cfg.x_bins),
                byb: rng.random_range(0..cfg.y_bins),
            }
        })
        .collect()
}

/// Build the input/target pair for teacher-forced training.
///
/// Input: `START`, prompt `(xb, yb)` pairs padded to `max_prompt_points`,
/// `EOK`, the ground-truth sextets, then noise sextets up to `max_edges`.
/// Target position `t` supervises the prediction of input token `t + 1`:
/// PAD over the prompt region, the ground-truth sextets verbatim, noise
/// sextets reduced to NCLS at their class slot, and a final EOS.
/// Noise key points join the prompt before it is shuffled.
pub fn assemble_training_pair<R: RngCore + ?Sized>(
    gt: &EdgeSequence,
    prompt: &PromptSet,
    cfg: &CodecConfig,
    rng: &mut R,
) -> Result<TrainingPair, EncodeError> {
    if gt.sextets.len() > cfg.max_edges {
        return Err(EncodeError::BudgetExceeded(format!(
            "{} sextets exceed {} edge slots",
            gt.sextets.len(),
            cfg.max_edges
        )));
    }
    if prompt.points.len() > cfg.max_prompt_points {
        return Err(EncodeError::BudgetExceeded(format!(
            "{} prompt points exceed {}",
            prompt.points.len(),
            cfg.max_prompt_points
        )));
    }
    let vocab = Vocabulary::new(cfg);
    let noise = noise_sextets(cfg.max_edges - gt.sextets.len(), gt.new_keypoints(), cfg, rng);

    let mut full = prompt.clone();
    for s in noise.iter().take(cfg.max_prompt_points - prompt.points.len()) {
        full.points.push(s.point());
        full.provenance.push(Provenance::Noise);
    }
    let full = shuffle_prompt(&full, rng.next_u64());

    let len = 2 + 2 * cfg.max_prompt_points + 6 * cfg.max_edges;
    let mut input = Vec::with_capacity(len);
    input.push(vocab.start());
    for p in &full.points {
        input.extend([p.xb, p.yb]);
    }
    input.resize(1 + 2 * cfg.max_prompt_points, vocab.pad());
    input.push(vocab.eok());
    let mut target = vec![vocab.pad(); cfg.prompt_tokens()];
    for s in &gt.sextets {
        input.extend(s.tokens(&vocab));
        target.extend(s.tokens(&vocab));
    }
    let pad = vocab.pad();
    for s in &noise {
        input.extend(s.tokens(&vocab));
        target.extend([pad, pad, vocab.ncls(), pad, pad, pad]);
    }
    target.push(vocab.eos());
    debug_assert_eq!(input.len(), len);
    debug_assert_eq!(target.len(), len);
    Ok(TrainingPair {
        input,
        target,
        prompt: full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> CodecConfig {
        CodecConfig::default()
    }

    fn kp(x: f64, y: f64) -> Point3 {
        Point3::new(x, y, 0.0)
    }

    fn dag(kps: Vec<Point3>, edges: &[(usize, usize)]) -> KeyPointDag {
        let edges = edges
            .iter()
            .map(|&(s, d)| DagEdge {
                src: s,
                dst: d,
                control: kps[s].xy().lerp(kps[d].xy(), 0.5),
                score: None,
            })
            .collect();
        KeyPointDag { keypoints: kps, edges }
    }

    fn sx(xb: u32, yb: u32, cls: KeypointClass, con: u32, bxb: u32, byb: u32) -> EdgeSextet {
        EdgeSextet { xb, yb, cls, con, bxb, byb }
    }

    use KeypointClass::*;

    #[test]
    fn single_straight_lane() {
        let d = dag(vec![kp(10.0, -5.0), kp(30.0, -5.0)], &[(0, 1)]);
        let seq = encode(&d, &cfg()).unwrap();
        assert_eq!(
            seq.sextets,
            vec![sx(120, 40, Ancestor, 0, 120, 40), sx(160, 40, Lineal, 0, 140, 40)]
        );
        let toks = seq.tokens(&cfg());
        assert_eq!(toks.len(), 601);
        assert_eq!(&toks[..13], &[120, 40, 200, 0, 120, 40, 160, 40, 201, 0, 140, 40, 207]);
        assert!(toks[13..].iter().all(|&t| t == 208));
    }

    #[test]
    fn fork_uses_offshoot() {
        // a is right-front of b (same x, smaller y).
        let d = dag(vec![kp(0.0, 0.0), kp(10.0, 5.0), kp(10.0, -5.0)], &[(0, 1), (0, 2)]);
        let seq = encode(&d, &cfg()).unwrap();
        let cls: Vec<_> = seq.sextets.iter().map(|s| (s.cls, s.con, s.yb)).collect();
        assert_eq!(cls, vec![(Ancestor, 0, 50), (Lineal, 0, 40), (Offshoot, 1, 60)]);
    }

    #[test]
    fn merge_uses_clone() {
        // a (right) and b (left) both feed m.
        let d = dag(
            vec![kp(0.0, -5.0), kp(0.0, 5.0), kp(10.0, 0.0)],
            &[(0, 2), (1, 2)],
        );
        let seq = encode(&d, &cfg()).unwrap();
        assert_eq!(seq.sextets.len(), 4);
        assert_eq!(seq.sextets[0].cls, Ancestor); // a
        assert_eq!(seq.sextets[1].cls, Lineal); // m
        assert_eq!(seq.sextets[2].cls, Ancestor); // b, index 3
        let clone = seq.sextets[3];
        assert_eq!((clone.cls, clone.con), (Clone, 3));
        assert_eq!(clone.point(), seq.sextets[1].point());
        let back = decode(&seq.tokens(&cfg()), &cfg()).unwrap();
        assert_eq!(back.edges.len(), 2);
        assert_eq!(back.edges[1].src, 2);
        assert_eq!(back.edges[1].dst, 1);
    }

    #[test]
    fn empty_dag() {
        let toks = encode(&KeyPointDag::default(), &cfg()).unwrap().tokens(&cfg());
        assert_eq!(toks[0], 207);
        assert!(toks[1..].iter().all(|&t| t == 208));
        assert_eq!(decode(&[207], &cfg()).unwrap(), KeyPointDag::default());
    }

    #[test]
    fn encode_errors() {
        let small = CodecConfig { max_edges: 2, ..cfg() };
        let d = dag(vec![kp(0.0, 0.0), kp(10.0, 0.0), kp(20.0, 0.0)], &[(0, 1), (1, 2)]);
        assert!(matches!(encode(&d, &small), Err(EncodeError::TooManyEdges { sextets: 3, max: 2 })));

        let close = dag(vec![kp(0.0, 0.0), kp(0.3, 0.3)], &[]);
        assert!(matches!(encode(&close, &CodecConfig { merge_eps: 0.1, ..cfg() }), Err(EncodeError::CloneAmbiguity(0, 1, ..))));

        let cyc = dag(vec![kp(0.0, 0.0), kp(10.0, 0.0)], &[(0, 1), (1, 0)]);
        assert!(matches!(encode(&cyc, &cfg()), Err(EncodeError::Graph(GraphError::InvalidDag(_)))));

        let tiny = CodecConfig { x_bins: 3, y_bins: 2, ..cfg() };
        let many = dag(vec![kp(-40.0, 0.0), kp(0.0, 0.0), kp(40.0, 0.0)], &[]);
        assert!(matches!(encode(&many, &tiny), Err(EncodeError::TooManyKeypoints { count: 3, max: 2 })));
    }

    #[test]
    fn strict_decode_errors() {
        let c = cfg();
        // OFFSHOOT with parent 5 after one key point.
        let toks = [120, 40, 200, 0, 120, 40, 130, 40, 202, 5, 125, 40, 207];
        assert_eq!(decode(&toks, &c), Err(DecodeError::ConOutOfRange { index: 6, con: 5, emitted: 1 }));
        assert_eq!(decode(&[207, 208], &c), Ok(KeyPointDag::default()));
        assert_eq!(decode(&[120, 40, 201, 0, 1, 1, 207], &c), Err(DecodeError::LinealWithoutPrevious { index: 0 }));
        assert_eq!(decode(&[120, 40, 200, 0], &c), Err(DecodeError::TruncatedSextet { index: 0 }));
        assert_eq!(decode(&[200, 40, 200, 0, 1, 1, 207], &c), Err(DecodeError::BadSlotToken { index: 0, token: 200, slot: 0 }));
        assert_eq!(decode(&[120, 40, 200, 0, 1, 1], &c), Err(DecodeError::MissingEos));
        assert_eq!(
            decode(&[120, 40, 200, 0, 1, 1, 10, 10, 203, 1, 1, 1, 207], &c),
            Err(DecodeError::CloneTargetMissing { index: 6 })
        );
        assert_eq!(
            decode(&[120, 40, 200, 0, 1, 1, 120, 40, 200, 0, 1, 1, 207], &c),
            Err(DecodeError::DuplicateKeypoint { index: 6 })
        );
        // a -> b, then clone b -> a would close a cycle.
        assert_eq!(
            decode(&[120, 40, 200, 0, 1, 1, 130, 40, 201, 0, 1, 1, 120, 40, 203, 2, 1, 1, 207], &c),
            Err(DecodeError::CloneCycle { index: 12 })
        );
        assert_eq!(decode(&[207, 208, 5], &c), Err(DecodeError::TrailingTokens { index: 2 }));
    }

    #[test]
    fn lenient_skips_and_reports() {
        let c = cfg();
        let toks = [120, 40, 200, 0, 1, 1, 10, 10, 203, 1, 1, 1, 130, 40, 201, 0, 1, 1, 207];
        let d = decode_lenient(&toks, &c);
        assert_eq!(d.skipped, vec![DecodeError::CloneTargetMissing { index: 6 }]);
        assert_eq!(d.dag.keypoints.len(), 2);
        assert_eq!(d.dag.edges.len(), 1);
        assert_eq!(validate_sequence(&toks, &c), d.skipped);
        assert_eq!(validate_sequence(&toks[..18], &c), vec![DecodeError::CloneTargetMissing { index: 6 }, DecodeError::MissingEos]);
    }

    #[test]
    fn noise_sextets_are_discarded() {
        let c = cfg();
        let toks = [120, 40, 200, 0, 1, 1, 208, 208, 204, 208, 208, 208, 207];
        let d = decode(&toks, &c).unwrap();
        assert_eq!(d.keypoints.len(), 1);
    }

    #[test]
    fn roundtrip_compare() {
        let c = cfg();
        let d = dag(vec![kp(0.1, 0.1), kp(10.2, 3.3), kp(10.0, -5.1), kp(20.0, 0.0)], &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let back = decode(&encode(&d, &c).unwrap().tokens(&c), &c).unwrap();
        let rt = compare_roundtrip(&d, &back, &c);
        assert!(rt.topology_exact);
        assert!(rt.max_deviation <= 0.25 + 1e-9);
        let mut broken = back.clone();
        broken.edges[0].dst = 0;
        assert!(!compare_roundtrip(&d, &broken, &c).topology_exact);
    }

    #[test]
    fn training_pair_lengths_and_alignment() {
        let c = cfg();
        let d = dag(vec![kp(0.0, 0.0), kp(10.0, 5.0), kp(10.0, -5.0)], &[(0, 1), (0, 2)]);
        let seq = encode(&d, &c).unwrap();
        let prompt = PromptSet::from_points(seq.sextets.iter().map(|s| s.point()).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = assemble_training_pair(&seq, &prompt, &c, &mut rng).unwrap();
        assert_eq!(pair.input.len(), 802);
        assert_eq!(pair.target.len(), 802);
        assert!(pair.target[..201].iter().all(|&t| t == 208));
        assert_eq!(pair.input[0], 205);
        assert_eq!(pair.input[201], 206);
        assert_eq!(*pair.target.last().unwrap(), 207);
        let non_pad = pair.target.iter().filter(|&&t| t != 208).count();
        assert_eq!(non_pad, 6 * 3 + 97 + 1);
        for (t, &tok) in pair.target.iter().enumerate() {
            if tok == 204 {
                assert!((200..=203).contains(&pair.input[t + 1]));
            } else if tok != 208 && t + 1 < pair.input.len() {
                assert_eq!(tok, pair.input[t + 1]);
            }
        }
        assert_eq!(pair.prompt.points.len(), 100);
    }

    #[test]
    fn full_sequence_needs_no_noise() {
        let c = CodecConfig { max_edges: 2, ..cfg() };
        let d = dag(vec![kp(0.0, 0.0), kp(10.0, 0.0)], &[(0, 1)]);
        let seq = encode(&d, &c).unwrap();
        let prompt = PromptSet::from_points(seq.sextets.iter().map(|s| s.point()).collect());
        let pair = assemble_training_pair(&seq, &prompt, &c, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(!pair.target.contains(&204));
        assert_eq!(*pair.target.last().unwrap(), 207);
        assert_eq!(pair.target.len(), pair.input.len());

        let too_many = PromptSet::from_points(vec![QuantPoint::new(0, 0); 101]);
        assert!(matches!(
            assemble_training_pair(&seq, &too_many, &cfg(), &mut ChaCha8Rng::seed_from_u64(0)),
            Err(EncodeError::BudgetExceeded(_))
        ));
    }
}
