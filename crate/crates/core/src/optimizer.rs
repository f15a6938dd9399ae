//! The minimax problem `inf_x max_r f_r(x)`: the three-variable reduced
//! model with its closed-form optimum and KKT certificate, and a
//! multistart smoothed solver on the full simplex as an independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::displacement::{by_type, compensated_sum, f_r_raw, SimplexPoint};
use crate::error::{invalid, Error, Result};
use crate::freegroup::Psi;
use crate::relations::Relation;

/// Tolerance on the linear constraint accepted by [`ReducedPoint::new`].
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// A point whose coordinates depend only on the prefix type: `a` on type
/// 1, `b` on types 2, 3 and 5, `c` on type 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `2na + 8n(n-1)^2 b + 4n(n-1)c - 1`.
pub fn constraint_residual(n: usize, p: &ReducedPoint) -> f64 {
    let [ha, hb, hc] = grad_h(n);
    compensated_sum([ha * p.a, hb * p.b, hc * p.c, -1.0])
}

fn grad_h(n: usize) -> [f64; 3] {
    let nf = n as f64;
    [2.0 * nf, 8.0 * nf * (nf - 1.0).powi(2), 4.0 * nf * (nf - 1.0)]
}

impl ReducedPoint {
    pub fn new(n: usize, a: f64, b: f64, c: f64) -> Result<Self> {
        Self::with_tolerance(n, a, b, c, CONSTRAINT_TOL)
    }

    pub fn with_tolerance(n: usize, a: f64, b: f64, c: f64, tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("rank must be at least 2, got {n}")));
        }
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{name} = {v} outside (0, 1)")));
            }
        }
        let p = ReducedPoint { a, b, c };
        let res = constraint_residual(n, &p);
        if res.abs() > tol {
            return Err(invalid(format!("constraint residual {res:e} exceeds {tol:e}")));
        }
        Ok(p)
    }

    /// All coordinates equal to `1/|Psi|`.
    pub fn uniform(n: usize) -> Result<Self> {
        let v = 1.0 / crate::freegroup::psi_count(n) as f64;
        Self::new(n, v, v, v)
    }
}

/// Values of `f_r` on a reduced point for the 1a family, the 2b/3a/5a
/// families (all equal there), and the 4b family.
pub fn reduced_f(n: usize, p: &ReducedPoint) -> Result<[f64; 3]> {
    let res = constraint_residual(n, p);
    if res.abs() > 1e-9 {
        return Err(invalid(format!("constraint residual {res:e} exceeds 1e-9")));
    }
    Ok(reduced_f_unchecked(n, p))
}

fn reduced_f_unchecked(n: usize, p: &ReducedPoint) -> [f64; 3] {
    let nf = n as f64;
    let k = 2.0 * nf - 1.0;
    let f1 = (1.0 - p.a) / p.a / k;
    let f2 = (1.0 - p.b) / p.b * (1.0 - 2.0 * nf * p.a) / (4.0 * nf * (nf - 1.0) - 1.0 + 2.0 * nf * p.a);
    let f4 = (1.0 - p.c) / p.c * k;
    [f1, f2, f4]
}

pub fn lift(psi: &Psi, p: &ReducedPoint) -> Result<SimplexPoint> {
    SimplexPoint::with_tolerance(psi.rank(), by_type(psi, p.a, p.b, p.c), 1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub point: ReducedPoint,
    pub values: [f64; 3],
    pub constraint_residual: f64,
    /// `max_i |values[i] - alpha| / alpha`.
    pub equalization_residual: f64,
}

/// Solves the three equations `f = alpha` of [`reduced_f`] for `(a, b, c)`.
pub fn closed_form_optimum(n: usize, alpha: f64) -> Result<ClosedForm> {
    let (a, b, c) = crate::displacement::candidate_abc(n, alpha);
    let point = ReducedPoint::with_tolerance(n, a, b, c, 1e-9).map_err(|e| {
        Error::Internal(format!(
            "closed form fails the constraint at alpha = {alpha}: {e}"
        ))
    })?;
    let values = reduced_f_unchecked(n, &point);
    let equalization_residual = values
        .iter()
        .map(|v| ((v - alpha) / alpha).abs())
        .fold(0.0, f64::max);
    if equalization_residual > 1e-9 {
        return Err(Error::Internal(format!(
            "equalization residual {equalization_residual:e} at alpha = {alpha}"
        )));
    }
    Ok(ClosedForm {
        point,
        values,
        constraint_residual: constraint_residual(n, &point),
        equalization_residual,
    })
}

/// Compares the type-1 value `1/(1 + (2n-1)alpha)` used here with the
/// alternative `1/((2n-1) + alpha)`, each combined with the same `b` and `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ACandidateNote {
    pub adopted_a: f64,
    pub alternative_a: f64,
    pub adopted_constraint_residual: f64,
    pub alternative_constraint_residual: f64,
    pub adopted_equalization_residual: f64,
    pub alternative_equalization_residual: f64,
}

pub fn a_candidate_note(n: usize, alpha: f64) -> ACandidateNote {
    let k = 2.0 * n as f64 - 1.0;
    let (a, b, c) = crate::displacement::candidate_abc(n, alpha);
    let alt = 1.0 / (k + alpha);
    let eq = |a: f64| ((1.0 - a) / a / k - alpha).abs() / alpha;
    ACandidateNote {
        adopted_a: a,
        alternative_a: alt,
        adopted_constraint_residual: constraint_residual(n, &ReducedPoint { a, b, c }),
        alternative_constraint_residual: constraint_residual(n, &ReducedPoint { a: alt, b, c }),
        adopted_equalization_residual: eq(a),
        alternative_equalization_residual: eq(alt),
    }
}

/// Gradients of the objective `f = (2n-1)(1-c)/c`, the constraints
/// `g1 = (1-a)/a · c/(1-c) - (2n-1)^2`, `g2 = K(a)(1-b)/b · c/(1-c) - (2n-1)`
/// with `K(a) = (1-2na)/(4n(n-1)-1+2na)`, and `h`.
struct ReducedGradients {
    f: [f64; 3],
    g1: [f64; 3],
    g2: [f64; 3],
    h: [f64; 3],
    g1_value: f64,
    g2_value: f64,
}

fn reduced_gradients(n: usize, p: &ReducedPoint) -> ReducedGradients {
    let nf = n as f64;
    let k = 2.0 * nf - 1.0;
    let ReducedPoint { a, b, c } = *p;
    let big_a = 4.0 * nf * (nf - 1.0) - 1.0 + 2.0 * nf * a;
    let kk = (1.0 - 2.0 * nf * a) / big_a;
    let dk = -8.0 * nf * nf * (nf - 1.0) / (big_a * big_a);
    let q = c / (1.0 - c);
    let dq = 1.0 / ((1.0 - c) * (1.0 - c));
    let rb = (1.0 - b) / b;
    ReducedGradients {
        f: [0.0, 0.0, -k / (c * c)],
        g1: [-q / (a * a), 0.0, (1.0 - a) / a * dq],
        g2: [dk * rb * q, -kk * q / (b * b), kk * rb * dq],
        h: grad_h(n),
        g1_value: (1.0 - a) / a * q - k * k,
        g2_value: kk * rb * q - k,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    pub point: ReducedPoint,
    /// Multipliers of `g1`, `g2` and `h`.
    pub lambda: [f64; 3],
    /// Max-norm of `∇f + λ1∇g1 + λ2∇g2 + λ3∇h`.
    pub stationarity: f64,
    /// `max(|h|, g1⁺, g2⁺)`.
    pub feasibility: f64,
    /// `max(|λ1 g1|, |λ2 g2|)`.
    pub complementarity: f64,
    /// Largest of the three residuals above.
    pub residual: f64,
}

impl KktCertificate {
    pub fn multipliers_positive(&self) -> bool {
        self.lambda.iter().all(|&l| l > 0.0)
    }
}

/// Solves `M λ = rhs` for a 3×3 system by Gaussian elimination with
/// partial pivoting.
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Result<[f64; 3]> {
    let mut aug = [[0.0; 4]; 3];
    for i in 0..3 {
        aug[i][..3].copy_from_slice(&m[i]);
        aug[i][3] = rhs[i];
    }
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap_or(col);
        if aug[piv][col].abs() <= 1e-14 * scale {
            return Err(Error::Domain("singular KKT system".into()));
        }
        aug.swap(col, piv);
        for row in col + 1..3 {
            let factor = aug[row][col] / aug[col][col];
            for j in col..4 {
                aug[row][j] -= factor * aug[col][j];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| aug[i][j] * x[j]).sum();
        x[i] = (aug[i][3] - s) / aug[i][i];
    }
    Ok(x)
}

/// Solves the stationarity system for the multipliers at `p` and reports
/// how far `p` is from a KKT point with both inequalities active.
pub fn kkt_solve(n: usize, p: &ReducedPoint) -> Result<KktCertificate> {
    if n < 2 {
        return Err(invalid(format!("rank must be at least 2, got {n}")));
    }
    let g = reduced_gradients(n, p);
    let m = [
        [g.g1[0], g.g2[0], g.h[0]],
        [g.g1[1], g.g2[1], g.h[1]],
        [g.g1[2], g.g2[2], g.h[2]],
    ];
    let rhs = [-g.f[0], -g.f[1], -g.f[2]];
    let lambda = solve3(m, rhs)?;
    let stationarity = (0..3)
        .map(|i| (g.f[i] + lambda[0] * g.g1[i] + lambda[1] * g.g2[i] + lambda[2] * g.h[i]).abs())
        .fold(0.0, f64::max);
    let feasibility = constraint_residual(n, p)
        .abs()
        .max(g.g1_value.max(0.0))
        .max(g.g2_value.max(0.0));
    let complementarity = (lambda[0] * g.g1_value).abs().max((lambda[1] * g.g2_value).abs());
    Ok(KktCertificate {
        point: *p,
        lambda,
        stationarity,
        feasibility,
        complementarity,
        residual: stationarity.max(feasibility).max(complementarity),
    })
}

/// `(∇h·w, ∇g1·w, ∇g2·w)` for the constraint-qualification direction
/// `w = (2(n-1), 0, -1)`.
pub fn qualification_witness(n: usize, p: &ReducedPoint) -> [f64; 3] {
    let g = reduced_gradients(n, p);
    let w = [2.0 * (n as f64 - 1.0), 0.0, -1.0];
    let dot = |v: [f64; 3]| v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
    [dot(g.h), dot(g.g1), dot(g.g2)]
}

/// Moves `p` by a relative amount `scale` along a direction `d` projected
/// to keep the linear constraint; coordinates are multiplied by
/// `1 + scale·d_i` with `max|d_i| = 1`.
pub fn perturb_feasible(n: usize, p: &ReducedPoint, d: [f64; 3], scale: f64) -> Result<ReducedPoint> {
    let h = grad_h(n);
    let w = [h[0] * p.a, h[1] * p.b, h[2] * p.c];
    let ww: f64 = w.iter().map(|v| v * v).sum();
    let proj: f64 = (0..3).map(|i| d[i] * w[i]).sum::<f64>() / ww;
    let mut e = [d[0] - proj * w[0], d[1] - proj * w[1], d[2] - proj * w[2]];
    let norm = e.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if norm == 0.0 {
        return Err(invalid("perturbation direction is normal to the constraint"));
    }
    e.iter_mut().for_each(|v| *v /= norm);
    ReducedPoint::with_tolerance(
        n,
        p.a * (1.0 + scale * e[0]),
        p.b * (1.0 + scale * e[1]),
        p.c * (1.0 + scale * e[2]),
        1e-12,
    )
}

/// Default floor for [`project_simplex`].
pub const FLOOR: f64 = 1e-12;

/// Euclidean projection onto `{x ≥ floor, Σx = 1}` by the sort-based
/// method. Returns the projection and the number of coordinates clamped
/// to the floor.
pub fn project_simplex_counted(v: &[f64], floor: f64) -> (Vec<f64>, usize) {
    let m = v.len();
    if m == 0 {
        return (Vec::new(), 0);
    }
    let budget = 1.0 - m as f64 * floor;
    let mut u: Vec<f64> = v.iter().map(|x| x - floor).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - budget) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut clamped = 0;
    let out = v
        .iter()
        .map(|x| {
            let y = x - floor - theta;
            if y > 0.0 {
                y + floor
            } else {
                clamped += 1;
                floor
            }
        })
        .collect();
    (out, clamped)
}

pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    project_simplex_counted(v, FLOOR).0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeConfig {
    pub seed: u64,
    pub multistarts: usize,
    /// Gradient iterations per start, split evenly across stages.
    pub iterations: usize,
    pub t0: f64,
    /// Temperature of stage `k` is `t0 * decay^k`.
    pub decay: f64,
    pub stages: usize,
    pub armijo: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
    pub floor: f64,
    /// Record `(iteration, value)` every this many iterations.
    pub trace_every: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            seed: 42,
            multistarts: 8,
            iterations: 10_000,
            t0: 1.0,
            decay: 0.5,
            stages: 20,
            armijo: 1e-4,
            initial_step: 1e-2,
            max_halvings: 60,
            floor: FLOOR,
            trace_every: 250,
        }
    }
}

impl MinimizeConfig {
    fn validate(&self) -> Result<()> {
        if self.multistarts == 0 || self.stages == 0 || self.iterations < self.stages {
            return Err(invalid("need at least one start and one iteration per stage"));
        }
        if !(self.t0 > 0.0 && self.decay > 0.0 && self.decay <= 1.0) {
            return Err(invalid(
                "temperature schedule must be positive and non-increasing",
            ));
        }
        if !(self.floor > 0.0 && self.initial_step > 0.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(invalid("floor, step and Armijo constant must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartReport {
    pub start: usize,
    /// Unsmoothed `max_r f_r` at the final iterate.
    pub value: f64,
    pub iterations: usize,
    /// The last stage stopped because no step decreased the smoothed
    /// objective, i.e. the iterate is numerically stationary.
    pub converged: bool,
    pub floor_events: usize,
    pub trace: Vec<(usize, f64)>,
    #[serde(skip)]
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult {
    pub point: SimplexPoint,
    pub value: f64,
    pub best_start: usize,
    pub converged: bool,
    pub starts: Vec<StartReport>,
}

/// Compact view of a relation collection for repeated evaluation.
struct Objective {
    psi_idx: Vec<usize>,
    sets: Vec<Vec<usize>>,
}

impl Objective {
    fn new(rels: &[Relation]) -> Self {
        Objective {
            psi_idx: rels.iter().map(|r| r.psi_index).collect(),
            sets: rels.iter().map(|r| r.psi_set.clone()).collect(),
        }
    }

    fn log_values(&self, x: &[f64], out: &mut Vec<(f64, f64, f64)>) {
        out.clear();
        for (p, set) in self.psi_idx.iter().zip(&self.sets) {
            let xr = x[*p];
            let big: f64 = set.iter().map(|&k| x[k]).sum();
            let lf = ((1.0 - xr) / xr).ln() + ((1.0 - big) / big).ln();
            out.push((xr, big, lf));
        }
    }

    /// Log-sum-exp of `log f_r` at temperature `t`.
    fn smoothed(&self, x: &[f64], t: f64, buf: &mut Vec<(f64, f64, f64)>) -> f64 {
        self.log_values(x, buf);
        let m = buf.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = buf.iter().map(|v| ((v.2 - m) / t).exp()).sum();
        m + t * s.ln()
    }

    fn smoothed_grad(&self, x: &[f64], t: f64, buf: &mut Vec<(f64, f64, f64)>, g: &mut [f64]) -> f64 {
        self.log_values(x, buf);
        let m = buf.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = buf.iter().map(|v| ((v.2 - m) / t).exp()).collect();
        let s: f64 = w.iter().sum();
        g.iter_mut().for_each(|v| *v = 0.0);
        for (r, (&(xr, big, _), wr)) in buf.iter().zip(&w).enumerate() {
            let wr = wr / s;
            g[self.psi_idx[r]] -= wr / (xr * (1.0 - xr));
            let d = wr / (big * (1.0 - big));
            for &k in &self.sets[r] {
                g[k] -= d;
            }
        }
        m + t * s.ln()
    }
}

fn max_value(x: &[f64], rels: &[Relation]) -> f64 {
    rels.iter()
        .map(|r| f_r_raw(x, r))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn run_start(
    obj: &Objective,
    rels: &[Relation],
    x0: Vec<f64>,
    start: usize,
    cfg: &MinimizeConfig,
) -> StartReport {
    let dim = x0.len();
    let (mut x, mut floor_events) = project_simplex_counted(&x0, cfg.floor);
    let per_stage = cfg.iterations / cfg.stages;
    let mut buf = Vec::with_capacity(obj.psi_idx.len());
    let mut g = vec![0.0; dim];
    let mut iterations = 0;
    let mut trace = vec![(0, max_value(&x, rels))];
    let mut converged = false;
    for stage in 0..cfg.stages {
        let t = cfg.t0 * cfg.decay.powi(stage as i32);
        let mut step = cfg.initial_step;
        let mut stalled = false;
        for _ in 0..per_stage {
            let v = obj.smoothed_grad(&x, t, &mut buf, &mut g);
            let mean = g.iter().sum::<f64>() / dim as f64;
            g.iter_mut().for_each(|gi| *gi -= mean);
            iterations += 1;
            let mut accepted = None;
            for _ in 0..cfg.max_halvings {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
                let (xn, clamped) = project_simplex_counted(&trial, cfg.floor);
                let vn = obj.smoothed(&xn, t, &mut buf);
                let decrease: f64 = g
                    .iter()
                    .zip(x.iter().zip(&xn))
                    .map(|(gi, (a, b))| gi * (a - b))
                    .sum();
                if vn.is_finite() && vn < v && vn <= v - cfg.armijo * decrease {
                    accepted = Some((xn, clamped));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((xn, clamped)) => {
                    x = xn;
                    floor_events += clamped;
                    step *= 2.0;
                }
                None => {
                    stalled = true;
                    break;
                }
            }
            if cfg.trace_every > 0 && iterations % cfg.trace_every == 0 {
                trace.push((iterations, max_value(&x, rels)));
            }
        }
        if stage + 1 == cfg.stages {
            converged = stalled;
        }
    }
    let value = max_value(&x, rels);
    if trace.last().map(|t| t.0) != Some(iterations) {
        trace.push((iterations, value));
    }
    StartReport {
        start,
        value,
        iterations,
        converged,
        floor_events,
        trace,
        point: x,
    }
}

/// Starting points: normalized vectors of independent `Exp(1)` draws.
pub fn random_starts(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let e: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Minimizes `max_{r ∈ rels} f_r` over the simplex. Starts run in
/// parallel; the result is independent of scheduling.
pub fn minimize(psi: &Psi, rels: &[Relation], cfg: &MinimizeConfig) -> Result<MinimizeResult> {
    cfg.validate()?;
    if rels.is_empty() {
        return Err(invalid("empty relation collection"));
    }
    if rels.iter().any(|r| r.rank() != psi.rank()) {
        return Err(invalid("relation rank differs from prefix-set rank"));
    }
    let obj = Objective::new(rels);
    let starts = random_starts(psi.len(), cfg.multistarts, cfg.seed);
    let reports: Vec<StartReport> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, x0)| run_start(&obj, rels, x0, k, cfg))
        .collect();
    let best = reports
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Internal("no starts".into()))?;
    let point = SimplexPoint::with_tolerance(psi.rank(), reports[best].point.clone(), 1e-9)?;
    Ok(MinimizeResult {
        point,
        value: reports[best].value,
        best_start: best,
        converged: reports[best].converged,
        starts: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quartic::alpha_value;
    use crate::relations::build_f_from;

    #[test]
    fn uniform_reduced_values() {
        let p = ReducedPoint::uniform(2).unwrap();
        let v = reduced_f(2, &p).unwrap();
        assert!((v[0] - 9.0).abs() < 1e-12);
        assert!((v[2] - 81.0).abs() < 1e-10);
        assert!(reduced_f(
            2,
            &ReducedPoint {
                a: 0.1,
                b: 0.1,
                c: 0.1
            }
        )
        .is_err());
    }

    #[test]
    fn closed_form_equalizes() {
        for n in 2..=5 {
            let alpha = alpha_value(n).unwrap();
            let cf = closed_form_optimum(n, alpha).unwrap();
            assert!(cf.constraint_residual.abs() < 1e-9);
            assert!(cf.equalization_residual < 1e-9);
        }
        let cf = closed_form_optimum(2, alpha_value(2).unwrap()).unwrap();
        assert!((cf.point.a - 0.013227).abs() < 1e-6);
    }

    #[test]
    fn alternative_a_fails_constraint() {
        let note = a_candidate_note(2, alpha_value(2).unwrap());
        assert!(note.adopted_constraint_residual.abs() < 1e-12);
        assert!(note.alternative_constraint_residual.abs() > 1e-3);
        assert!(note.alternative_equalization_residual > 1e-3);
    }

    #[test]
    fn kkt_at_optimum() {
        for n in [2, 3] {
            let alpha = alpha_value(n).unwrap();
            let p = closed_form_optimum(n, alpha).unwrap().point;
            let cert = kkt_solve(n, &p).unwrap();
            assert!(cert.multipliers_positive(), "{cert:?}");
            assert!(cert.residual < 1e-8, "{cert:?}");
            let w = qualification_witness(n, &p);
            assert!(w[0].abs() < 1e-12 && w[1] < 0.0 && w[2] < 0.0);
            let q = perturb_feasible(n, &p, [0.3, -0.7, 0.2], 1e-2).unwrap();
            assert!(kkt_solve(n, &q).unwrap().residual > 1e-4);
        }
    }

    #[test]
    fn projection_basics() {
        let x = vec![0.1, 0.2, 0.3, 0.4];
        let p = project_simplex(&x);
        assert!(p.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-15));
        let p = project_simplex(&[5.0; 4]);
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-15));
        let mut v = vec![0.0; 28];
        v[0] = 2.0;
        let (p, clamped) = project_simplex_counted(&v, FLOOR);
        assert_eq!(clamped, 27);
        assert!((p[0] - (1.0 - 27.0 * FLOOR)).abs() < 1e-15);
        let again = project_simplex(&p);
        assert!(again.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn short_run_is_deterministic() {
        let psi = Psi::new(2).unwrap();
        let f = build_f_from(&psi);
        let cfg = MinimizeConfig {
            multistarts: 3,
            iterations: 400,
            ..Default::default()
        };
        let a = minimize(&psi, &f, &cfg).unwrap();
        let b = minimize(&psi, &f, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.value > 1.0);
    }
}
