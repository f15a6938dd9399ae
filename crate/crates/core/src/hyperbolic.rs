//! Isometries of hyperbolic 3-space in the upper half-space model, acting
//! as Möbius maps on the boundary `ℂ ∪ {∞}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::freegroup::{gamma_star, Word};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Accepted `|ad - bc - 1|`, relative to `max(1, |ad| + |bc|)`, for
/// matrices supplied as unimodular.
pub const DET_TOL: f64 = 1e-12;

/// Half-width of the band around `[0, 4]` where `tr²` is not classified.
pub const CLASSIFY_BAND: f64 = 1e-9;

/// Below this distance from `[0, 4]`, `tr²` is treated as lying on it.
const ON_SEGMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    Finite(C),
    Infinity,
}

impl Boundary {
    fn close_to(&self, other: &Boundary, tol: f64) -> bool {
        match (self, other) {
            (Boundary::Infinity, Boundary::Infinity) => true,
            (Boundary::Finite(a), Boundary::Finite(b)) => {
                (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moebius {
    a: C,
    b: C,
    c: C,
    d: C,
}

impl Moebius {
    /// Scales an invertible matrix to determinant 1 and picks the sign
    /// whose first nonzero entry has argument in `[0, π)`.
    pub fn normalize(a: C, b: C, c: C, d: C) -> Result<Self> {
        let det = a * d - b * c;
        let scale = [a, b, c, d].iter().fold(0.0f64, |s, z| s.max(z.norm()));
        if !(det.norm() > 1e-300 && det.norm() > 1e-14 * scale * scale) || !det.is_finite() {
            return Err(domain("matrix is singular"));
        }
        let s = det.sqrt();
        let mut m = Moebius {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        };
        m.canonical_sign();
        Ok(m)
    }

    /// Accepts only matrices already of determinant 1 within [`DET_TOL`].
    pub fn unimodular(a: C, b: C, c: C, d: C) -> Result<Self> {
        let det = a * d - b * c;
        let scale = (a * d).norm().max(1.0) + (b * c).norm();
        if !det.is_finite() || (det - ONE).norm() > DET_TOL * scale {
            return Err(invalid(format!("determinant {det} is not 1")));
        }
        let mut m = Moebius { a, b, c, d };
        m.canonical_sign();
        Ok(m)
    }

    fn canonical_sign(&mut self) {
        let first = [self.a, self.b, self.c, self.d].into_iter().find(|z| *z != ZERO);
        if let Some(z) = first {
            let arg = z.arg();
            if !(0.0..std::f64::consts::PI).contains(&arg) {
                self.a = -self.a;
                self.b = -self.b;
                self.c = -self.c;
                self.d = -self.d;
            }
        }
    }

    pub fn identity() -> Self {
        Moebius {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: ONE,
        }
    }

    /// `diag(u, 1/u)`.
    pub fn diagonal(u: C) -> Result<Self> {
        if u == ZERO {
            return Err(domain("zero eigenvalue"));
        }
        Self::normalize(u, ZERO, ZERO, u.inv())
    }

    pub fn entries(&self) -> [C; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn trace(&self) -> C {
        self.a + self.d
    }

    pub fn mul(&self, o: &Moebius) -> Moebius {
        let mut m = self.mul_lift(o);
        m.canonical_sign();
        m
    }

    /// Product of the given `SL(2, ℂ)` representatives, without picking a
    /// canonical sign.
    fn mul_lift(&self, o: &Moebius) -> Moebius {
        Moebius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn inverse_lift(&self) -> Moebius {
        Moebius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn inverse(&self) -> Moebius {
        let mut m = self.inverse_lift();
        m.canonical_sign();
        m
    }

    /// `h M h^{-1}`.
    pub fn conjugate_by(&self, h: &Moebius) -> Moebius {
        h.mul(self).mul(&h.inverse())
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    pub fn apply_boundary(&self, z: Boundary) -> Boundary {
        match z {
            Boundary::Infinity => {
                if self.c == ZERO {
                    Boundary::Infinity
                } else {
                    Boundary::Finite(self.a / self.c)
                }
            }
            Boundary::Finite(z) => {
                let den = self.c * z + self.d;
                if den == ZERO {
                    Boundary::Infinity
                } else {
                    Boundary::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// The extension of the boundary action to the upper half-space.
    pub fn apply(&self, z: &H3Point) -> H3Point {
        let w = C::new(z.x, z.y);
        let t2 = z.t * z.t;
        let cw_d = self.c * w + self.d;
        let den = cw_d.norm_sqr() + self.c.norm_sqr() * t2;
        let num = (self.a * w + self.b) * cw_d.conj() + self.a * self.c.conj() * t2;
        let w2 = num / den;
        H3Point {
            x: w2.re,
            y: w2.im,
            t: z.t / den,
        }
    }

    /// Hyperbolic distance moved by the point `z`.
    pub fn displacement(&self, z: &H3Point) -> f64 {
        dist(z, &self.apply(z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
    /// `tr²` lies within the tolerance band around `[0, 4]`.
    Indeterminate,
}

fn dist_to_segment(tau: C) -> f64 {
    let re = tau.re.clamp(0.0, 4.0);
    (tau - C::new(re, 0.0)).norm()
}

pub fn classify(m: &Moebius) -> Classification {
    let tau = m.trace() * m.trace();
    let d = dist_to_segment(tau);
    if d > CLASSIFY_BAND {
        return Classification::Loxodromic;
    }
    if (tau - C::new(4.0, 0.0)).norm() <= ON_SEGMENT {
        let off = m.b.norm().max(m.c.norm()).max((m.a - m.d).norm());
        return if off <= ON_SEGMENT {
            Classification::Identity
        } else {
            Classification::Parabolic
        };
    }
    if d <= ON_SEGMENT && (tau - C::new(4.0, 0.0)).norm() > CLASSIFY_BAND {
        return Classification::Elliptic;
    }
    Classification::Indeterminate
}

fn require_loxodromic(m: &Moebius) -> Result<()> {
    match classify(m) {
        Classification::Loxodromic => Ok(()),
        other => Err(domain(format!("expected a loxodromic element, got {other:?}"))),
    }
}

/// Eigenvalue `u` of modulus greater than 1.
pub fn multiplier(m: &Moebius) -> Result<C> {
    require_loxodromic(m)?;
    let tr = m.trace();
    let disc = (tr * tr - 4.0).sqrt();
    let u1 = (tr + disc) / 2.0;
    let u2 = (tr - disc) / 2.0;
    Ok(if u1.norm() >= u2.norm() { u1 } else { u2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationInvariants {
    /// Translation length `2 log|u|`.
    pub length: f64,
    /// `arg u`, only defined modulo π; reported in `(-π/2, π/2]`.
    pub angle: f64,
}

pub fn translation_invariants(m: &Moebius) -> Result<TranslationInvariants> {
    let u = multiplier(m)?;
    Ok(TranslationInvariants {
        length: 2.0 * u.norm().ln(),
        angle: reduce_angle(u.arg()),
    })
}

/// Reduces an angle modulo π to `(-π/2, π/2]`.
pub fn reduce_angle(theta: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H3Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl H3Point {
    pub fn new(x: f64, y: f64, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite() && x.is_finite() && y.is_finite()) {
            return Err(invalid(format!("({x}, {y}, {t}) is not in the upper half-space")));
        }
        Ok(H3Point { x, y, t })
    }

    /// The point `j = (0, 0, 1)`.
    pub fn j() -> Self {
        H3Point {
            x: 0.0,
            y: 0.0,
            t: 1.0,
        }
    }
}

pub fn dist(p: &H3Point, q: &H3Point) -> f64 {
    let num = (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.t - q.t).powi(2);
    2.0 * (num / (4.0 * p.t * q.t)).sqrt().asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicLine {
    pub p: Boundary,
    pub q: Boundary,
}

/// Relative tolerance for deciding that two boundary points coincide.
const SAME_POINT: f64 = 1e-12;

impl GeodesicLine {
    pub fn new(p: Boundary, q: Boundary) -> Result<Self> {
        if p.close_to(&q, SAME_POINT) {
            return Err(domain("geodesic endpoints coincide"));
        }
        Ok(GeodesicLine { p, q })
    }

    pub fn image(&self, m: &Moebius) -> GeodesicLine {
        GeodesicLine {
            p: m.apply_boundary(self.p),
            q: m.apply_boundary(self.q),
        }
    }

    /// A map sending `p` to 0 and `q` to ∞.
    pub fn normalizer(&self) -> Result<Moebius> {
        match (self.p, self.q) {
            (Boundary::Finite(p), Boundary::Finite(q)) => Moebius::normalize(ONE, -p, ONE, -q),
            (Boundary::Finite(p), Boundary::Infinity) => Moebius::normalize(ONE, -p, ZERO, ONE),
            (Boundary::Infinity, Boundary::Finite(q)) => Moebius::normalize(ZERO, ONE, ONE, -q),
            (Boundary::Infinity, Boundary::Infinity) => Err(domain("degenerate geodesic")),
        }
    }
}

/// The axis of a loxodromic or elliptic element.
pub fn fixed_points(m: &Moebius) -> Result<GeodesicLine> {
    match classify(m) {
        Classification::Loxodromic | Classification::Elliptic => {}
        other => return Err(domain(format!("{other:?} element has no axis"))),
    }
    let tr = m.trace();
    let disc = (tr * tr - 4.0).sqrt();
    if m.c == ZERO {
        // fixes ∞; the other fixed point solves az + b = dz
        return GeodesicLine::new(Boundary::Finite(m.b / (m.d - m.a)), Boundary::Infinity);
    }
    let amd = m.a - m.d;
    GeodesicLine::new(
        Boundary::Finite((amd - disc) / (2.0 * m.c)),
        Boundary::Finite((amd + disc) / (2.0 * m.c)),
    )
}

pub fn dist_point_geodesic(z: &H3Point, line: &GeodesicLine) -> Result<f64> {
    let w = line.normalizer()?.apply(z);
    Ok((w.x.hypot(w.y) / w.t).asinh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommonPerpendicular {
    pub midpoint: H3Point,
    pub separation: f64,
    /// Parameter with `|w| ≥ 1` putting the lines at `(-1, 1)` and `(-w, w)`.
    pub w: C,
}

/// Map sending `p1 → 0`, `q1 → ∞`, `p2 → 1`.
fn three_point_map(p1: Boundary, q1: Boundary, p2: Boundary) -> Result<Moebius> {
    use Boundary::{Finite as F, Infinity as I};
    match (p1, q1, p2) {
        (F(p1), F(q1), F(p2)) => Moebius::normalize(p2 - q1, -p1 * (p2 - q1), p2 - p1, -q1 * (p2 - p1)),
        (I, F(q1), F(p2)) => Moebius::normalize(ZERO, p2 - q1, ONE, -q1),
        (F(p1), I, F(p2)) => Moebius::normalize(ONE, -p1, ZERO, p2 - p1),
        (F(p1), F(q1), I) => Moebius::normalize(ONE, -p1, ONE, -q1),
        _ => Err(domain("repeated point at infinity")),
    }
}

pub fn common_perpendicular(l1: &GeodesicLine, l2: &GeodesicLine) -> Result<CommonPerpendicular> {
    let pts = [l1.p, l1.q, l2.p, l2.q];
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i].close_to(&pts[j], SAME_POINT) {
                return Err(domain("geodesics share an endpoint"));
            }
        }
    }
    let s = three_point_map(l1.p, l1.q, l2.p)?;
    let x = match s.apply_boundary(l2.q) {
        Boundary::Finite(x) => x,
        Boundary::Infinity => return Err(Error::Internal("cross ratio at infinity".into())),
    };
    let root = x.sqrt();
    let mut w = (root + 1.0) / (root - 1.0);
    if w.norm() < 1.0 {
        w = w.inv();
    }
    // T: -1 → 0, 1 → ∞, -w → 1, so T⁻¹∘S puts the lines at (-1,1), (±w)
    let k = (w + 1.0) / (w - 1.0);
    let t = Moebius::normalize(k, k, ONE, -ONE)?;
    let phi = t.inverse().mul(&s);
    let top = H3Point {
        x: 0.0,
        y: 0.0,
        t: w.norm().sqrt(),
    };
    Ok(CommonPerpendicular {
        midpoint: phi.inverse().apply(&top),
        separation: w.norm().ln(),
        w,
    })
}

/// The root of `w² - (2 + 4bc)w + 1 = 0` with `|w| ≥ 1`, i.e. the solution
/// of `bc = (1 - w)² / (4w)` outside the unit disc.
pub fn solve_w(bc: C) -> C {
    let p = 2.0 + 4.0 * bc;
    let disc = (p * p - 4.0).sqrt();
    let w1 = (p + disc) / 2.0;
    let w2 = (p - disc) / 2.0;
    if w1.norm() >= w2.norm() {
        w1
    } else {
        w2
    }
}

/// `|tr²g - 4| + |tr[g, h] - 2|` with `[g, h] = ghg⁻¹h⁻¹`. The commutator
/// does not depend on the signs of the lifts.
pub fn jorgensen_lhs(g: &Moebius, h: &Moebius) -> f64 {
    let comm = g
        .mul_lift(h)
        .mul_lift(&g.inverse_lift())
        .mul_lift(&h.inverse_lift());
    let tr = g.trace();
    (tr * tr - 4.0).norm() + (comm.trace() - 2.0).norm()
}

/// `|u - 1/u|²(1 + |bc|)` for `g = diag(u, 1/u)` and `h = [[a, b], [c, d]]`.
pub fn diagonal_lhs(u: C, h: &Moebius) -> f64 {
    (u - u.inv()).norm_sqr() * (1.0 + (h.b * h.c).norm())
}

/// `2 sinh²(¼ log α_n)`.
pub fn bound_rhs(n: usize) -> Result<f64> {
    Ok(crate::quartic::trace_bound_from(crate::quartic::alpha_value(n)?))
}

/// `½ log(b(1-a) / (a(1-b)))`.
pub fn disp_lower_bound(a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(domain(format!("({a}, {b}) outside [0, 1]²")));
    }
    if a <= 0.0 || b >= 1.0 {
        return Err(domain(format!("need a > 0 and b < 1, got ({a}, {b})")));
    }
    Ok(0.5 * (b * (1.0 - a) / (a * (1.0 - b))).ln())
}

/// Right-hand side of `sinh²(d/2) = sinh²(T/2)cosh²ρ + sin²θ sinh²ρ`,
/// where `ρ` is the distance from `z` to the axis.
pub fn displacement_formula(m: &Moebius, z: &H3Point) -> Result<f64> {
    let inv = translation_invariants(m)?;
    let rho = dist_point_geodesic(z, &fixed_points(m)?)?;
    Ok((inv.length / 2.0).sinh().powi(2) * rho.cosh().powi(2) + inv.angle.sin().powi(2) * rho.sinh().powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchottkyCertificate {
    pub passed: bool,
    /// Smallest gap between two isometric circles; negative on overlap.
    pub min_gap: f64,
    pub reason: Option<String>,
}

/// Sufficient test for a Schottky group: the isometric circles of all
/// generators and their inverses are pairwise disjoint.
pub fn schottky_certificate(gens: &[Moebius]) -> SchottkyCertificate {
    let mut circles = Vec::with_capacity(2 * gens.len());
    for (k, g) in gens.iter().enumerate() {
        if g.c.norm() <= 1e-12 {
            return SchottkyCertificate {
                passed: false,
                min_gap: f64::NEG_INFINITY,
                reason: Some(format!("generator {} fixes infinity", k + 1)),
            };
        }
        let r = 1.0 / g.c.norm();
        circles.push((-g.d / g.c, r));
        circles.push((g.a / g.c, r));
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            let gap = (circles[i].0 - circles[j].0).norm() - circles[i].1 - circles[j].1;
            min_gap = min_gap.min(gap);
        }
    }
    let passed = gens.len() >= 2 && min_gap > 1e-9;
    SchottkyCertificate {
        passed,
        min_gap,
        reason: (!passed).then(|| "isometric circles are not pairwise disjoint".to_string()),
    }
}

/// Evaluates a word in the generators.
pub fn evaluate_word(gens: &[Moebius], w: &Word) -> Result<Moebius> {
    if w.rank() != gens.len() {
        return Err(invalid("word rank differs from number of generators"));
    }
    Ok(w.letters().iter().fold(Moebius::identity(), |acc, &l| {
        let g = gens[l.unsigned_abs() as usize - 1];
        acc.mul(&if l > 0 { g } else { g.inverse() })
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaDisplacement {
    pub word: String,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementTheoremReport {
    pub point: H3Point,
    pub displacements: Vec<GammaDisplacement>,
    pub max: f64,
    pub bound: f64,
    pub margin: f64,
    pub schottky: SchottkyCertificate,
    /// `None` when the hypotheses are unverified and nothing is asserted.
    pub holds: Option<bool>,
}

/// Maximal displacement at `z` over the generators and their length-3
/// conjugates, against `½ log α_n`.
pub fn check_displacement_theorem(
    gens: &[Moebius],
    z: &H3Point,
    n: usize,
) -> Result<DisplacementTheoremReport> {
    if gens.len() != n {
        return Err(invalid(format!("expected {n} generators, got {}", gens.len())));
    }
    let bound = 0.5 * crate::quartic::alpha_value(n)?.ln();
    let schottky = schottky_certificate(gens);
    let mut displacements = Vec::new();
    for w in gamma_star(n)? {
        let m = evaluate_word(gens, &w)?;
        displacements.push(GammaDisplacement {
            word: w.to_string(),
            displacement: m.displacement(z),
        });
    }
    let max = displacements
        .iter()
        .map(|d| d.displacement)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = max - bound;
    Ok(DisplacementTheoremReport {
        point: *z,
        displacements,
        max,
        bound,
        margin,
        holds: schottky.passed.then_some(margin >= -1e-9),
        schottky,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointComparison {
    pub midpoint: H3Point,
    /// `d_g z0`.
    pub g: f64,
    /// `d_{hgh⁻¹} z0`.
    pub conjugate: f64,
}

/// Displacements of `g` and `hgh⁻¹` at the midpoint of the common
/// perpendicular between the axes of `g` and `h⁻¹gh`.
pub fn midpoint_comparison(g: &Moebius, h: &Moebius) -> Result<MidpointComparison> {
    let axis_g = fixed_points(g)?;
    let axis_conj = fixed_points(&g.conjugate_by(&h.inverse()))?;
    let cp = common_perpendicular(&axis_g, &axis_conj)?;
    let z0 = cp.midpoint;
    Ok(MidpointComparison {
        midpoint: z0,
        g: g.displacement(&z0),
        conjugate: g.conjugate_by(h).displacement(&z0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePairReport {
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Both displacement hypotheses at the two midpoints hold.
    pub hypotheses_hold: bool,
}

/// For generators `g = x_i`, `h = x_j`: the trace quantity against
/// `2 sinh²(¼ log α_n)`, and whether the displacement hypotheses hold at
/// the midpoints `z1` (axes of `g`, `hgh⁻¹`) and `z2` (axes of `g`, `h⁻¹gh`).
pub fn trace_pair(gens: &[Moebius], i: usize, j: usize) -> Result<TracePairReport> {
    let n = gens.len();
    if i == j || i >= n || j >= n {
        return Err(invalid("pair indices must be distinct generator positions"));
    }
    let (g, h) = (gens[i], gens[j]);
    let half_log = 0.5 * crate::quartic::alpha_value(n)?.ln();
    let rhs = crate::quartic::trace_bound_from(crate::quartic::alpha_value(n)?);
    let axis = fixed_points(&g)?;
    let z1 = common_perpendicular(&axis, &fixed_points(&g.conjugate_by(&h))?)?.midpoint;
    let z2 = common_perpendicular(&axis, &fixed_points(&g.conjugate_by(&h.inverse()))?)?.midpoint;
    let (gi, gj) = (i as i32 + 1, j as i32 + 1);
    let excluded = |w: &Word| {
        let l = w.letters();
        match l {
            [x] => x.abs() == gi,
            [a, x, b] => x.abs() == gi && a.abs() == gj && *b == -*a,
            _ => false,
        }
    };
    let mut others_small = true;
    for w in gamma_star(n)? {
        if !excluded(&w) && evaluate_word(gens, &w)?.displacement(&z2) >= half_log {
            others_small = false;
        }
    }
    let hgh = g.conjugate_by(&h);
    let comparison = hgh.displacement(&z2) <= hgh.displacement(&z1);
    let lhs = jorgensen_lhs(&g, &h);
    Ok(TracePairReport {
        i: i + 1,
        j: j + 1,
        lhs,
        rhs,
        margin: lhs - rhs,
        hypotheses_hold: others_small && comparison,
    })
}

#[derive(Debug, Deserialize)]
#[serde(transparent)]
struct MatrixFile(Vec<[[f64; 2]; 4]>);

/// Parses a JSON array of matrices, each written as four `[re, im]` pairs
/// in the order `a, b, c, d`. Every matrix must have determinant 1.
pub fn parse_matrices(text: &str) -> Result<Vec<Moebius>> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.0.is_empty() {
        return Err(invalid("no matrices given"));
    }
    file.0
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let [a, b, c, d] = m.map(|[re, im]| C::new(re, im));
            Moebius::unimodular(a, b, c, d).map_err(|e| invalid(format!("matrix {}: {e}", k + 1)))
        })
        .collect()
}
