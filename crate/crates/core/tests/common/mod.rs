#![allow(dead_code)]

use loxobound::hyperbolic::{classify, Classification, H3Point, Moebius};
use num_complex::Complex64 as C;
use rand::Rng;

pub fn complex<R: Rng>(rng: &mut R, r: f64) -> C {
    C::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

/// Normalized matrix with entries of modulus at most about 2.
pub fn random_moebius<R: Rng>(rng: &mut R) -> Moebius {
    loop {
        let [a, b, c, d] = [0; 4].map(|_| complex(rng, 2.0));
        let det = a * d - b * c;
        if det.norm() > 0.25 {
            return Moebius::normalize(a, b, c, d).unwrap();
        }
    }
}

/// Loxodromic element with `tr²` well away from `[0, 4]`.
pub fn random_loxodromic<R: Rng>(rng: &mut R) -> Moebius {
    loop {
        let g = random_moebius(rng);
        let tau = g.trace() * g.trace();
        let off = (tau - C::new(tau.re.clamp(0.0, 4.0), 0.0)).norm();
        if classify(&g) == Classification::Loxodromic && off > 1e-2 {
            return g;
        }
    }
}

pub fn random_point<R: Rng>(rng: &mut R) -> H3Point {
    H3Point::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-1.0f64..1.0).exp(),
    )
    .unwrap()
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Distance between two angles taken modulo π.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}
