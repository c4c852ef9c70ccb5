mod common;

use std::collections::HashSet;

use common::{cfg, synth_dag};
use lgseq_core::{encode, generate, validate_dag, GenSpec, KeypointClass};

#[test]
fn all_classes_appear_across_seeds() {
    let c = cfg();
    let mut seen = HashSet::new();
    for seed in 0..100 {
        let seq = encode(&synth_dag(seed), &c).unwrap();
        seen.extend(seq.sextets.iter().map(|s| s.cls));
    }
    for k in KeypointClass::ALL {
        assert!(seen.contains(&k), "{k:?} never generated");
    }
}

#[test]
fn generator_invariants() {
    let c = cfg();
    for seed in 0..200 {
        let spec = GenSpec::varied(seed);
        let d = generate(&spec, &c).unwrap();
        assert_eq!(d, generate(&spec, &c).unwrap());
        assert!(validate_dag(&d, c.merge_eps).is_empty(), "seed {seed}");
        let roots = d.in_degrees().iter().filter(|&&n| n == 0).count();
        assert!(d.edges.len() + roots <= spec.edge_cap.min(c.max_edges), "seed {seed}");
        for p in &d.keypoints {
            assert!((-50.0..=50.0).contains(&p.x) && (-25.0..=25.0).contains(&p.y));
        }
        for e in &d.edges {
            assert!(d.keypoints[e.src].x < d.keypoints[e.dst].x, "seed {seed}");
        }
    }
}
