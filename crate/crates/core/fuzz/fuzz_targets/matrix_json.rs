#![no_main]

use libfuzzer_sys::fuzz_target;
use loxobound::hyperbolic::{classify, parse_matrices, schottky_certificate, DET_TOL};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(gens) = parse_matrices(text) {
        for g in &gens {
            let [a, b, c, d] = g.entries();
            let scale = (a * d).norm().max(1.0) + (b * c).norm();
            assert!((g.det() - 1.0).norm() <= DET_TOL * scale);
            let _ = classify(g);
        }
        let _ = schottky_certificate(&gens);
    }
});
