//! Replays the fuzz seeds through the same checks as the fuzz targets.

use std::path::PathBuf;

use loxobound::freegroup::Word;
use loxobound::hyperbolic::{classify, parse_matrices, schottky_certificate, DET_TOL};
use loxobound::relations::{parse_relations, write_relations};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| std::fs::read(e.unwrap().path()).unwrap())
        .collect();
    assert!(!out.is_empty());
    out.sort();
    out
}

#[test]
fn word_seeds() {
    for data in seeds("word_parse") {
        let Some((&r, rest)) = data.split_first() else {
            continue;
        };
        let rank = 1 + (r % 8) as usize;
        let Ok(text) = std::str::from_utf8(rest) else {
            continue;
        };
        if let Ok(w) = Word::parse(rank, text) {
            assert_eq!(Word::parse(rank, &w.to_string()).unwrap(), w);
            assert!(w.multiply(&w.inverse()).unwrap().is_identity());
        }
    }
}

#[test]
fn relation_seeds() {
    let mut parsed = 0;
    for data in seeds("relation_parse") {
        let text = String::from_utf8(data).unwrap();
        if let Ok((psi, rels)) = parse_relations(&text) {
            parsed += 1;
            let (_, again) = parse_relations(&write_relations(&psi, &rels)).unwrap();
            assert_eq!(rels, again);
        }
    }
    assert!(parsed >= 1);
}

#[test]
fn matrix_seeds() {
    let mut parsed = 0;
    for data in seeds("matrix_json") {
        let text = String::from_utf8_lossy(&data);
        if let Ok(gens) = parse_matrices(&text) {
            parsed += 1;
            for g in &gens {
                let [a, b, c, d] = g.entries();
                let scale = (a * d).norm().max(1.0) + (b * c).norm();
                assert!((g.det() - 1.0).norm() <= DET_TOL * scale);
                let _ = classify(g);
            }
            let _ = schottky_certificate(&gens);
        }
    }
    assert!(parsed >= 1);
}
