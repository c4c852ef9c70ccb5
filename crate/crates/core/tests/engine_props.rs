mod common;

use common::{cfg, synth_dag};
use lgseq_core::{
    assemble_training_pair, compare_roundtrip, encode, extract_keypoints, dag_to_lanegraph, run, run_greedy,
    sequence_nll, validate_sequence, Mode, ProbTable, TokenWeights, Vocabulary,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ProbTable {
    let mut data: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>().powi(4)).collect();
    for row in data.chunks_mut(cols) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
    ProbTable::new(rows, cols, data)
}

#[test]
fn one_hot_replay_reproduces_encoding() {
    let c = cfg();
    let v = Vocabulary::new(&c);
    for seed in 0..100 {
        let d = synth_dag(seed);
        let tokens = encode(&d, &c).unwrap().tokens(&c);
        let table = ProbTable::one_hot(&tokens, v.size());
        let out = run_greedy(&mut &table, &c).unwrap();
        assert_eq!(out.tokens, tokens, "seed {seed}");
        assert!(compare_roundtrip(&d, &out.dag, &c).topology_exact, "seed {seed}");
    }
}

#[test]
fn random_tables_decode_cleanly() {
    let c = cfg();
    let v = Vocabulary::new(&c);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..50 {
        let table = random_table(&mut rng, c.edge_tokens(), v.size());
        for mode in [Mode::Greedy, Mode::Sample] {
            let out = run(&mut &table, &c, mode, &mut rng).unwrap();
            assert!(validate_sequence(&out.tokens, &c).is_empty(), "case {case} {mode:?}");
        }
    }
}

#[test]
fn nll_identities() {
    let c = cfg();
    let v = Vocabulary::new(&c);
    let w = TokenWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..20 {
        let d = synth_dag(seed);
        let seq = encode(&d, &c).unwrap();
        let prompt = extract_keypoints(&dag_to_lanegraph(&d, &c), &c).unwrap();
        let pair = assemble_training_pair(&seq, &prompt, &c, &mut rng).unwrap();
        let t = &pair.target;
        let hot = ProbTable::one_hot(t, v.size());
        assert!(sequence_nll(t, &hot, &w, &c).unwrap().abs() < 1e-9);
        let non_pad = t.iter().filter(|&&x| x != v.pad()).count() as f64;
        let mut uni = ProbTable::uniform(t.len(), v.size());
        let expect = non_pad * (v.size() as f64).ln();
        assert!((sequence_nll(t, &uni, &w, &c).unwrap() - expect).abs() < 1e-6);
        for (i, &x) in t.iter().enumerate() {
            if x == v.pad() {
                uni.row_mut(i).iter_mut().for_each(|p| *p = 7.0);
            }
        }
        assert!((sequence_nll(t, &uni, &w, &c).unwrap() - expect).abs() < 1e-6);
    }
}
