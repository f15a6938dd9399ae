#![no_main]

use libfuzzer_sys::fuzz_target;
use loxobound::freegroup::Word;

// first byte picks the rank, the rest is the word text
fuzz_target!(|data: &[u8]| {
    let Some((&r, rest)) = data.split_first() else {
        return;
    };
    let rank = 1 + (r % 8) as usize;
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(w) = Word::parse(rank, text) {
        let again = Word::parse(rank, &w.to_string()).expect("display output must parse");
        assert_eq!(w, again);
        assert!(w.multiply(&w.inverse()).unwrap().is_identity());
    }
});
