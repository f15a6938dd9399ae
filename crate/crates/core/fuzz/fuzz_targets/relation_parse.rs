#![no_main]

use libfuzzer_sys::fuzz_target;
use loxobound::relations::{parse_relations, write_relations};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((psi, rels)) = parse_relations(text) {
        let written = write_relations(&psi, &rels);
        let (_, again) = parse_relations(&written).expect("written relations must parse");
        assert_eq!(rels, again);
    }
});
