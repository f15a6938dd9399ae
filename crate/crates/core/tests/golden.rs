use std::path::PathBuf;

use loxobound::freegroup::Psi;
use loxobound::relations::{build_g_from, parse_relations, write_relations};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

// regenerate with UPDATE_GOLDEN=1 after an intentional format change
#[test]
fn relations_rank_two_match_golden() {
    let psi = Psi::new(2).unwrap();
    let text = write_relations(&psi, &build_g_from(&psi));
    let path = data("relations_n2.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, golden);
}

#[test]
fn golden_relations_parse_back() {
    let golden = std::fs::read_to_string(data("relations_n2.txt")).unwrap();
    let (psi, rels) = parse_relations(&golden).unwrap();
    assert_eq!(psi.rank(), 2);
    assert_eq!(rels.len(), 60);
    assert_eq!(rels, build_g_from(&psi));
}

#[test]
fn relations_rank_three_round_trip() {
    let psi = Psi::new(3).unwrap();
    let rels = build_g_from(&psi);
    let (_, back) = parse_relations(&write_relations(&psi, &rels)).unwrap();
    assert_eq!(back, rels);
}

#[test]
fn malformed_relation_lines_report_their_line() {
    let golden = std::fs::read_to_string(data("relations_n2.txt")).unwrap();
    let mut lines: Vec<&str> = golden.lines().collect();
    lines[3] = "1a | x1 | x9 | 1 | x1";
    match parse_relations(&lines.join("\n")) {
        Err(loxobound::Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
