//! Displacement functions `f_r(x) = (1-x_r)(1-X_r)/(x_r X_r)` on the open
//! simplex indexed by the prefix set, their gradients, and the maxima F
//! and G over the two relation collections.

use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::freegroup::{psi_count, Letter, Psi, PsiType};
use crate::relations::{Family, Relation};

/// Tolerance on `Σx = 1` accepted by [`SimplexPoint::new`].
pub const SUM_TOL: f64 = 1e-12;

/// Relative band for membership in an argmax set.
pub const ARGMAX_REL_TOL: f64 = 1e-9;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    n: usize,
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n, coords, SUM_TOL)
    }

    /// Like [`SimplexPoint::new`] with a caller-chosen tolerance on the sum.
    pub fn with_tolerance(n: usize, coords: Vec<f64>, tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("rank must be at least 2, got {n}")));
        }
        if coords.len() != psi_count(n) {
            return Err(invalid(format!(
                "expected {} coordinates for rank {n}, got {}",
                psi_count(n),
                coords.len()
            )));
        }
        if let Some((k, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(domain(format!("coordinate {k} is {v}, must be positive")));
        }
        let sum = compensated_sum(coords.iter().copied());
        if (sum - 1.0).abs() > tol {
            return Err(invalid(format!("coordinates sum to {sum}, not 1")));
        }
        Ok(SimplexPoint { n, coords })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let m = psi_count(n);
        Self::new(n, vec![1.0 / m as f64; m])
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn sum(&self) -> f64 {
        compensated_sum(self.coords.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementValue {
    pub value: f64,
    pub x_r: f64,
    pub big_x_r: f64,
}

/// `x_r` and `X_r` for raw coordinates.
fn parts(coords: &[f64], r: &Relation) -> (f64, f64) {
    let x = coords[r.psi_index];
    let big = compensated_sum(r.psi_set.iter().map(|&k| coords[k]));
    (x, big)
}

fn formula(x: f64, big: f64) -> f64 {
    (1.0 - x) * (1.0 - big) / (x * big)
}

/// `f_r` on raw coordinates, without validation.
pub fn f_r_raw(coords: &[f64], r: &Relation) -> f64 {
    let (x, big) = parts(coords, r);
    formula(x, big)
}

fn check_rank(x: &SimplexPoint, r: &Relation) -> Result<()> {
    if r.rank() != x.n {
        return Err(invalid(format!(
            "relation of rank {} applied to point of rank {}",
            r.rank(),
            x.n
        )));
    }
    Ok(())
}

pub fn f_r(x: &SimplexPoint, r: &Relation) -> Result<DisplacementValue> {
    check_rank(x, r)?;
    let (x_r, big_x_r) = parts(&x.coords, r);
    if big_x_r >= 1.0 {
        return Err(domain(format!("X_r = {big_x_r} is not below 1")));
    }
    Ok(DisplacementValue {
        value: formula(x_r, big_x_r),
        x_r,
        big_x_r,
    })
}

/// Gradient of `f_r` on raw coordinates, written into `out`.
pub fn grad_f_r_raw(coords: &[f64], r: &Relation, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    let (x, big) = parts(coords, r);
    let d_big = -(1.0 - x) / (x * big * big);
    for &k in &r.psi_set {
        out[k] = d_big;
    }
    out[r.psi_index] += -(1.0 - big) / (x * x * big);
}

pub fn grad_f_r(x: &SimplexPoint, r: &Relation) -> Result<Vec<f64>> {
    check_rank(x, r)?;
    let mut out = vec![0.0; x.coords.len()];
    grad_f_r_raw(&x.coords, r, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxValue {
    pub value: f64,
    /// Positions (in the relation slice) within [`ARGMAX_REL_TOL`] of the max.
    pub argmax: Vec<usize>,
}

pub fn max_over(x: &SimplexPoint, rels: &[Relation]) -> Result<MaxValue> {
    if rels.is_empty() {
        return Err(invalid("empty relation collection"));
    }
    let values = rels
        .iter()
        .map(|r| f_r(x, r).map(|d| d.value))
        .collect::<Result<Vec<f64>>>()?;
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = values
        .iter()
        .enumerate()
        .filter(|(_, v)| (value - **v) <= ARGMAX_REL_TOL * value.abs())
        .map(|(k, _)| k)
        .collect();
    Ok(MaxValue { value, argmax })
}

/// `F(x)`; `f_rels` must be the collection F.
pub fn max_f(x: &SimplexPoint, f_rels: &[Relation]) -> Result<MaxValue> {
    max_over(x, f_rels)
}

/// `G(x)`; `g_rels` must be the collection G.
pub fn max_g(x: &SimplexPoint, g_rels: &[Relation]) -> Result<MaxValue> {
    max_over(x, g_rels)
}

/// Per-type coordinates `(a, b, c)` of the candidate optimum for a given
/// value of `alpha`: type 1, types 2/3/5, type 4.
pub fn candidate_abc(n: usize, alpha: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    let k = 2.0 * nf - 1.0;
    let a = 1.0 / (k * alpha + 1.0);
    let b = k * (alpha - 1.0)
        / ((4.0 * nf * nf - 4.0 * nf - 1.0) * k * alpha * alpha + (4.0 * nf * nf - 2.0) * alpha - k);
    let c = k / (k + alpha);
    (a, b, c)
}

/// Fills each coordinate by its prefix type.
pub fn by_type(psi: &Psi, a: f64, b: f64, c: f64) -> Vec<f64> {
    psi.elements()
        .iter()
        .map(|e| match e.kind {
            PsiType::T1 => a,
            PsiType::T4 => c,
            _ => b,
        })
        .collect()
}

/// The candidate optimum. Its coordinates sum to 1 exactly when `alpha`
/// is a root of the quartic, so the sum is only checked to `1e-9`.
pub fn candidate_y(psi: &Psi, alpha: f64) -> Result<SimplexPoint> {
    let n = psi.rank();
    if !crate::quartic::in_alpha_window(n, alpha) {
        return Err(invalid(format!(
            "alpha = {alpha} outside ((2n-1)^2, (2n-1)^3) for n = {n}"
        )));
    }
    let (a, b, c) = candidate_abc(n, alpha);
    SimplexPoint::with_tolerance(n, by_type(psi, a, b, c), 1e-9)
}

/// A tangent direction along which every non-4b displacement decreases:
/// `1` off type 4 and `-(1 + 4(n-1)^2) / (2(n-1))` on type 4.
pub fn direction_u(psi: &Psi) -> Vec<f64> {
    let m = psi.rank() as f64 - 1.0;
    let on_t4 = -(1.0 + 4.0 * m * m) / (2.0 * m);
    psi.elements()
        .iter()
        .map(|e| if e.kind == PsiType::T4 { on_t4 } else { 1.0 })
        .collect()
}

/// Directional derivative of `f_r` along `u`.
pub fn directional_derivative(x: &SimplexPoint, r: &Relation, u: &[f64]) -> Result<f64> {
    let g = grad_f_r(x, r)?;
    Ok(compensated_sum(g.iter().zip(u).map(|(a, b)| a * b)))
}

/// Membership in the region `x_r + X_r - x_r X_r < 3/4` where `f_r` is
/// strictly convex.
pub fn in_convexity_region(x: &SimplexPoint, r: &Relation) -> Result<bool> {
    let d = f_r(x, r)?;
    Ok(d.x_r + d.big_x_r - d.x_r * d.big_x_r < 0.75)
}

/// Permutation of the prefix set induced by exchanging the letter
/// `x_{i1}^{t1}` with `x_{i2}^{t2}` (and their inverses) in every word.
/// Entry `k` is the index of the image of element `k`.
pub fn tau_permutation(psi: &Psi, i1: usize, t1: i32, i2: usize, t2: i32) -> Result<Vec<usize>> {
    let n = psi.rank();
    if !(1..=n).contains(&i1) || !(1..=n).contains(&i2) || i1 == i2 || t1.abs() != 1 || t2.abs() != 1 {
        return Err(invalid(format!("bad symmetry ({i1},{t1}) <-> ({i2},{t2})")));
    }
    let p = t1 * i1 as Letter;
    let q = t2 * i2 as Letter;
    let swap = |l: Letter| match l {
        l if l == p => q,
        l if l == q => p,
        l if l == -p => -q,
        l if l == -q => -p,
        l => l,
    };
    psi.elements()
        .iter()
        .map(|e| {
            let img: Vec<Letter> = e.word.letters().iter().map(|&l| swap(l)).collect();
            psi.index_of_letters(&img)
                .ok_or_else(|| crate::Error::Internal(format!("image {img:?} left the prefix set")))
        })
        .collect()
}

/// `(τx)(ψ) = x(τψ)`.
pub fn apply_permutation(x: &SimplexPoint, perm: &[usize]) -> Result<SimplexPoint> {
    if perm.len() != x.coords.len() {
        return Err(invalid("permutation length differs from point dimension"));
    }
    SimplexPoint::new(x.n, perm.iter().map(|&k| x.coords[k]).collect())
}

/// Random interior points for property checks: the average of the uniform
/// point and a normalized vector of `Exp(1)` draws, so every coordinate is
/// at least `1/(2|Psi|)`.
pub fn random_interior_points(n: usize, count: usize, seed: u64) -> Result<Vec<SimplexPoint>> {
    let m = psi_count(n);
    crate::optimizer::random_starts(m, count, seed)
        .into_iter()
        .map(|e| SimplexPoint::new(n, e.iter().map(|v| 0.5 * v + 0.5 / m as f64).collect()))
        .collect()
}

/// Largest discrepancy between the analytic gradient and central
/// differences with step `h` along the tangent directions
/// `e_k - (1/m)·1`, relative to the largest analytic component.
pub fn gradient_fd_error(x: &SimplexPoint, r: &Relation, h: f64) -> Result<f64> {
    let g = grad_f_r(x, r)?;
    let m = g.len();
    let mean = g.iter().sum::<f64>() / m as f64;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut plus = x.coords.clone();
    let mut minus = x.coords.clone();
    for k in 0..m {
        for j in 0..m {
            let v = if j == k {
                1.0 - 1.0 / m as f64
            } else {
                -1.0 / m as f64
            };
            plus[j] = x.coords[j] + h * v;
            minus[j] = x.coords[j] - h * v;
        }
        let fd = (f_r_raw(&plus, r) - f_r_raw(&minus, r)) / (2.0 * h);
        let analytic = g[k] - mean;
        worst = worst.max((fd - analytic).abs());
        scale = scale.max(analytic.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// True for families whose `psi` lies in `Psi_r`.
pub fn uses_second_gradient_form(family: Family) -> bool {
    matches!(family, Family::R3a | Family::R4b | Family::R5a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quartic;
    use crate::relations::{build_f_from, build_g_from};

    #[test]
    fn uniform_values_n2() {
        let psi = Psi::new(2).unwrap();
        let f = build_f_from(&psi);
        let x = SimplexPoint::uniform(2).unwrap();
        let r4 = f.iter().find(|r| r.family == Family::R4b).unwrap();
        let d = f_r(&x, r4).unwrap();
        assert!((d.value - 81.0).abs() < 1e-10);
        assert!((d.big_x_r - 0.25).abs() < 1e-15);
        let r1 = f.iter().find(|r| r.family == Family::R1a).unwrap();
        assert!((f_r(&x, r1).unwrap().value - 9.0).abs() < 1e-12);
        let m = max_f(&x, &f).unwrap();
        assert!((m.value - 81.0).abs() < 1e-10);
        let fams: Vec<Family> = m.argmax.iter().map(|&k| f[k].family).collect();
        assert_eq!(fams.len(), 8);
        assert!(fams.iter().all(|&f| f == Family::R4b));
    }

    #[test]
    fn candidate_equalizes() {
        let psi = Psi::new(2).unwrap();
        let alpha = quartic::alpha_value(2).unwrap();
        let y = candidate_y(&psi, alpha).unwrap();
        assert!((y.sum() - 1.0).abs() < 1e-9);
        for r in build_f_from(&psi) {
            let v = f_r(&y, &r).unwrap().value;
            assert!(((v - alpha) / alpha).abs() < 1e-9, "{} {v}", r.family);
        }
        let g = max_g(&y, &build_g_from(&psi)).unwrap();
        assert!(g.value <= alpha * (1.0 + 1e-9));
        let c = y.coords()[psi.index_of_letters(&[1, 2, -1]).unwrap()];
        assert!((c - 3.0 / (3.0 + alpha)).abs() < 1e-15);
        assert!(candidate_y(&psi, 5.0).is_err());
    }

    #[test]
    fn rejects_bad_points() {
        assert!(SimplexPoint::new(2, vec![1.0 / 27.0; 27]).is_err());
        let mut v = vec![1.0 / 28.0; 28];
        v[0] = 0.0;
        v[1] = 2.0 / 28.0;
        assert!(matches!(SimplexPoint::new(2, v), Err(crate::Error::Domain(_))));
        assert!(SimplexPoint::new(2, vec![1.0 / 20.0; 28]).is_err());
    }

    #[test]
    fn gradient_zero_outside_support() {
        let psi = Psi::new(2).unwrap();
        let x = SimplexPoint::uniform(2).unwrap();
        for r in build_g_from(&psi) {
            let g = grad_f_r(&x, &r).unwrap();
            for (k, v) in g.iter().enumerate() {
                if k != r.psi_index && !r.psi_set.contains(&k) {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn tau_is_involution_and_preserves_f() {
        let psi = Psi::new(3).unwrap();
        let perm = tau_permutation(&psi, 1, 1, 3, -1).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            assert_eq!(perm[j], k);
            assert_eq!(psi.kind(k), psi.kind(j));
        }
        assert!(tau_permutation(&psi, 1, 1, 1, -1).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
