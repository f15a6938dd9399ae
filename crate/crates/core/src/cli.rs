//! Command-line front end. Every command produces a [`Report`] that embeds
//! the configuration and crate version, rendered as JSON, CSV or text.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::displacement::{
    candidate_y, direction_u, directional_derivative, gradient_fd_error, random_interior_points,
};
use crate::error::{Error, Result};
use crate::freegroup::{default_ball_length, Psi};
use crate::hyperbolic::{
    check_displacement_theorem, classify, common_perpendicular, fixed_points, parse_matrices,
    schottky_certificate, trace_pair, Classification, DisplacementTheoremReport, H3Point,
    SchottkyCertificate, TracePairReport,
};
use crate::optimizer::{
    a_candidate_note, closed_form_optimum, kkt_solve, minimize, qualification_witness, ACandidateNote,
    ClosedForm, KktCertificate, MinimizeConfig, StartReport,
};
use crate::quartic::{self, in_alpha_window};
use crate::relations::{build_f_from, build_g_from, count_checks, drop_psi_member, verify_relation, Family};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "LOXOBOUND_THREADS";

/// Largest rank accepted by `alpha`; coefficients grow like `n^8`.
pub const MAX_ALPHA_RANK: usize = 1000;

/// Step of the central differences in the gradient suite.
pub const FD_STEP: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-5;
pub const FD_POINTS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "loxobound",
    version,
    about = "Displacement bounds for free Kleinian groups"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients, root bracket and bounds for each rank.
    Alpha(AlphaArgs),
    /// Counts, relation identities and gradient checks.
    Verify(VerifyArgs),
    /// Closed-form optimum, KKT certificate and numerical cross-check.
    Optimize(OptimizeArgs),
    /// Schottky test, displacement scan and trace margins for matrices.
    CheckMatrices(CheckArgs),
}

#[derive(Debug, Args)]
pub struct AlphaArgs {
    #[arg(long, conflicts_with = "n_range")]
    pub n: Option<usize>,
    /// Inclusive range such as `2..10`.
    #[arg(long)]
    pub n_range: Option<String>,
    /// Width of the exact root bracket.
    #[arg(long, default_value_t = quartic::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Longest word checked; defaults to 6, 5 or 4 by rank.
    #[arg(long)]
    pub ball_length: Option<usize>,
    /// Seed for the random points of the gradient suite.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Drop one member of the first relation's `Psi_r` before verifying.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = quartic::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub multistarts: usize,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    /// Relative tolerance of the numerical value against alpha; defaults
    /// to 1e-4 for n = 2 and 1e-3 otherwise.
    #[arg(long)]
    pub cross_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// JSON array of matrices, each four `[re, im]` pairs `a, b, c, d`.
    #[arg(long)]
    pub matrices: PathBuf,
}

/// Everything that determines a report, echoed into it.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub format: String,
    pub out: Option<String>,
    pub n: Option<usize>,
    pub n_range: Option<(usize, usize)>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub multistarts: Option<usize>,
    pub iterations: Option<usize>,
    pub ball_length: Option<usize>,
    pub cross_tol: Option<f64>,
    pub inject_fault: Option<bool>,
    pub matrices: Option<String>,
}

/// One named check with its threshold and observed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

fn row(
    check: impl Into<String>,
    expected: impl Into<String>,
    actual: impl Into<String>,
    passed: bool,
) -> CheckRow {
    CheckRow {
        check: check.into(),
        expected: expected.into(),
        actual: actual.into(),
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<T> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub passed: bool,
    /// Set when a hypothesis could not be verified; the exit code stays 0.
    pub warning: bool,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckRow>,
    pub detail: T,
}

impl<T> Report<T> {
    fn new(config: RunConfig, checks: Vec<CheckRow>, warnings: Vec<String>, detail: T) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            passed: checks.iter().all(|c| c.passed),
            warning: !warnings.is_empty(),
            warnings,
            checks,
            detail,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.check.as_str())
            .collect()
    }
}

pub const CHECK_CSV_HEADER: &str = "check,expected,actual,passed";
pub const ALPHA_CSV_HEADER: &str = "n,c4,c3,c2,c1,c0,lo,hi,alpha,half_log_alpha,trace_bound";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn checks_csv(checks: &[CheckRow]) -> String {
    let mut out = String::from(CHECK_CSV_HEADER);
    out.push('\n');
    for c in checks {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&c.check),
            csv_field(&c.expected),
            csv_field(&c.actual),
            c.passed
        ));
    }
    out
}

fn checks_text<T>(report: &Report<T>) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{tag} {}: {} (expected {})\n",
            c.check, c.actual, c.expected
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("WARN {w}\n"));
    }
    out.push_str(if report.passed {
        "result: pass\n"
    } else {
        "result: fail\n"
    });
    out
}

// ---------------------------------------------------------------- alpha

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub n: usize,
    /// `[c4, c3, c2, c1, c0]` as exact integers.
    pub coefficients: [String; 5],
    pub lo: String,
    pub hi: String,
    pub alpha: f64,
    pub half_log_alpha: f64,
    pub trace_bound: f64,
}

/// Parses an inclusive range `a..b` (or `a..=b`).
pub fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidInput(format!("bad range {text:?}, expected e.g. 2..10"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let lo: usize = a.trim().parse().map_err(|_| bad())?;
    let hi: usize = b.trim().parse().map_err(|_| bad())?;
    if lo < 2 || hi < lo || hi > MAX_ALPHA_RANK {
        return Err(Error::InvalidInput(format!(
            "range {lo}..{hi} must satisfy 2 <= lo <= hi <= {MAX_ALPHA_RANK}"
        )));
    }
    Ok((lo, hi))
}

pub fn cmd_alpha(args: &AlphaArgs, mut config: RunConfig) -> Result<Report<Vec<AlphaRow>>> {
    let (lo, hi) = match (&args.n, &args.n_range) {
        (_, Some(r)) => parse_range(r)?,
        (Some(n), None) => parse_range(&format!("{n}..{n}"))?,
        (None, None) => (2, 2),
    };
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tol must be positive, got {}",
            args.tol
        )));
    }
    config.n_range = Some((lo, hi));
    config.tol = Some(args.tol);
    let roots = (lo..=hi)
        .into_par_iter()
        .map(|n| Ok((quartic::coefficients(n)?, quartic::alpha(n, args.tol)?)))
        .collect::<Result<Vec<_>>>()?;
    let tol = num_rational::BigRational::from_float(args.tol)
        .ok_or_else(|| Error::InvalidInput("tol not representable".into()))?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (k, (q, root)) in roots.iter().enumerate() {
        let n = root.n;
        let width_ok = root.bracket.width() <= tol;
        let sign_ok = q.eval_exact(&root.bracket.lo) < q.eval_exact(&root.bracket.hi);
        checks.push(row(
            format!("n={n} exact bracket"),
            format!("width <= {:e}, sign change", args.tol),
            format!("width ok: {width_ok}, sign change: {sign_ok}"),
            width_ok && sign_ok && in_alpha_window(n, root.value),
        ));
        if k > 0 {
            let prev = &roots[k - 1].1.bracket;
            checks.push(row(
                format!("n={n} alpha increases"),
                "previous hi < lo",
                format!("{}", prev.hi < root.bracket.lo),
                prev.hi < root.bracket.lo,
            ));
        }
        rows.push(AlphaRow {
            n,
            coefficients: q.coeffs.clone().map(|c| c.to_string()),
            lo: root.bracket.lo.to_string(),
            hi: root.bracket.hi.to_string(),
            alpha: root.value,
            half_log_alpha: root.half_log(),
            trace_bound: root.trace_bound(),
        });
    }
    Ok(Report::new(config, checks, Vec::new(), rows))
}

fn alpha_csv(rows: &[AlphaRow]) -> String {
    let mut out = String::from(ALPHA_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let c = &r.coefficients;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n, c[0], c[1], c[2], c[3], c[4], r.lo, r.hi, r.alpha, r.half_log_alpha, r.trace_bound
        ));
    }
    out
}

fn alpha_text(report: &Report<Vec<AlphaRow>>) -> String {
    let mut out = format!(
        "{:>4}  {:>16}  {:>8}  {:>8}\n",
        "n", "alpha", "½log α", "2sinh²(¼log α)"
    );
    for r in &report.detail {
        out.push_str(&format!(
            "{:>4}  {:>16.10}  {:>8.4}  {:>8.4}\n",
            r.n, r.alpha, r.half_log_alpha, r.trace_bound
        ));
    }
    out.push_str(&checks_text(report));
    out
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyVerification {
    pub family: String,
    pub relations: usize,
    pub checked_forward: usize,
    pub checked_backward: usize,
    pub violations: usize,
    /// Relations that failed, as `gamma | psi`.
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientFamily {
    pub family: String,
    pub points: usize,
    pub max_relative_error: f64,
    /// Largest derivative along the descent direction; only for the
    /// families 1a, 2b, 3a and 5a.
    pub max_directional: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyDetail {
    pub n: usize,
    pub ball_length: usize,
    pub families: Vec<FamilyVerification>,
    pub gradients: Vec<GradientFamily>,
}

pub fn cmd_verify(args: &VerifyArgs, mut config: RunConfig) -> Result<Report<VerifyDetail>> {
    let n = args.n;
    let psi = Psi::new(n)?;
    let l = args.ball_length.unwrap_or_else(|| default_ball_length(n));
    if l < crate::relations::MIN_VERIFY_LENGTH {
        return Err(Error::InvalidInput(format!(
            "ball length must be at least 4, got {l}"
        )));
    }
    config.n = Some(n);
    config.ball_length = Some(l);
    config.seed = Some(args.seed);
    config.inject_fault = Some(args.inject_fault);

    let mut checks: Vec<CheckRow> = count_checks(n)?
        .into_iter()
        .map(|c| {
            row(
                c.name.clone(),
                c.expected.to_string(),
                c.actual.to_string(),
                c.passed(),
            )
        })
        .collect();

    let mut g = build_g_from(&psi);
    if args.inject_fault {
        g[0] = drop_psi_member(&g[0], 0)?;
    }
    let reports = g
        .par_iter()
        .map(|r| verify_relation(&psi, r, l))
        .collect::<Result<Vec<_>>>()?;
    let mut families = Vec::new();
    for fam in Family::ALL {
        let mut fv = FamilyVerification {
            family: fam.name().to_string(),
            relations: 0,
            checked_forward: 0,
            checked_backward: 0,
            violations: 0,
            failing: Vec::new(),
        };
        for (r, rep) in g.iter().zip(&reports).filter(|(r, _)| r.family == fam) {
            fv.relations += 1;
            fv.checked_forward += rep.checked_forward;
            fv.checked_backward += rep.checked_backward;
            let v = rep.forward_violations + rep.backward_violations + rep.dot_violations;
            fv.violations += v;
            if v > 0 {
                fv.failing.push(format!("{} | {}", r.gamma, r.psi.word));
            }
        }
        checks.push(row(
            format!("n={n} L={l} relations {}", fam.name()),
            "0 violations",
            format!("{} violations in {} relations", fv.violations, fv.relations),
            fv.violations == 0,
        ));
        families.push(fv);
    }

    let gradients = gradient_suite(&psi, args.seed)?;
    for gf in &gradients {
        checks.push(row(
            format!("n={n} gradient {}", gf.family),
            format!("relative error <= {FD_TOL:e}"),
            format!("{:e}", gf.max_relative_error),
            gf.max_relative_error <= FD_TOL,
        ));
        if let Some(d) = gf.max_directional {
            checks.push(row(
                format!("n={n} descent direction {}", gf.family),
                "< 0",
                format!("{d:e}"),
                d < 0.0,
            ));
        }
    }
    Ok(Report::new(
        config,
        checks,
        Vec::new(),
        VerifyDetail {
            n,
            ball_length: l,
            families,
            gradients,
        },
    ))
}

/// Families of F other than 4b, which decrease along [`direction_u`].
fn descends(fam: Family) -> bool {
    fam.in_f() && fam != Family::R4b
}

/// Central-difference check of every family's gradient at [`FD_POINTS`]
/// random interior points, plus the sign of the derivative along the
/// descent direction.
pub fn gradient_suite(psi: &Psi, seed: u64) -> Result<Vec<GradientFamily>> {
    let n = psi.rank();
    let g = build_g_from(psi);
    let points = random_interior_points(n, FD_POINTS, seed)?;
    let u = direction_u(psi);
    Family::ALL
        .par_iter()
        .filter(|&&fam| g.iter().any(|r| r.family == fam))
        .map(|&fam| {
            let rels: Vec<_> = g.iter().filter(|r| r.family == fam).collect();
            let mut max_err: f64 = 0.0;
            let mut max_dir = f64::NEG_INFINITY;
            for (k, x) in points.iter().enumerate() {
                let r = rels[k % rels.len()];
                max_err = max_err.max(gradient_fd_error(x, r, FD_STEP)?);
                if descends(fam) {
                    max_dir = max_dir.max(directional_derivative(x, r, &u)?);
                }
            }
            Ok(GradientFamily {
                family: fam.name().to_string(),
                points: points.len(),
                max_relative_error: max_err,
                max_directional: descends(fam).then_some(max_dir),
            })
        })
        .collect()
}

// ---------------------------------------------------------------- optimize

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericRun {
    pub collection: String,
    pub value: f64,
    pub relative_error: f64,
    /// Largest coordinate difference from the candidate point.
    pub max_coordinate_deviation: f64,
    /// `max_r (value - f_r) / value` over F at the returned point.
    pub equalization_spread: f64,
    pub converged: bool,
    pub best_start: usize,
    pub starts: Vec<StartReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeDetail {
    pub n: usize,
    pub alpha: f64,
    pub closed_form: ClosedForm,
    pub kkt: KktCertificate,
    /// Direction in the tangent space of the equality constraint along
    /// which both inequality gradients decrease.
    pub qualification_witness: [f64; 3],
    pub a_note: ACandidateNote,
    pub solver: MinimizeConfig,
    pub numeric: Vec<NumericRun>,
}

pub fn default_cross_tol(n: usize) -> f64 {
    if n == 2 {
        1e-4
    } else {
        1e-3
    }
}

pub fn cmd_optimize(args: &OptimizeArgs, mut config: RunConfig) -> Result<Report<OptimizeDetail>> {
    let n = args.n;
    let psi = Psi::new(n)?;
    let cross_tol = args.cross_tol.unwrap_or_else(|| default_cross_tol(n));
    if !cross_tol.is_finite() || cross_tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "cross-tol must be positive, got {cross_tol}"
        )));
    }
    config.n = Some(n);
    config.tol = Some(args.tol);
    config.seed = Some(args.seed);
    config.multistarts = Some(args.multistarts);
    config.iterations = Some(args.iterations);
    config.cross_tol = Some(cross_tol);

    let alpha = quartic::alpha(n, args.tol)?.value;
    let closed = closed_form_optimum(n, alpha)?;
    let kkt = kkt_solve(n, &closed.point)?;
    let y = candidate_y(&psi, alpha)?;
    let solver = MinimizeConfig {
        seed: args.seed,
        multistarts: args.multistarts,
        iterations: args.iterations,
        ..MinimizeConfig::default()
    };
    let f = build_f_from(&psi);
    let g = build_g_from(&psi);

    let mut checks = vec![
        row(
            format!("n={n} equalization"),
            "<= 1e-9",
            format!("{:e}", closed.equalization_residual),
            closed.equalization_residual <= 1e-9,
        ),
        row(
            format!("n={n} KKT residual"),
            "< 1e-8",
            format!("{:e}", kkt.residual),
            kkt.residual < 1e-8,
        ),
        row(
            format!("n={n} KKT multipliers"),
            "all > 0",
            format!("{:?}", kkt.lambda),
            kkt.multipliers_positive(),
        ),
    ];
    let mut numeric = Vec::new();
    for (name, rels) in [("F", &f), ("G", &g)] {
        let res = minimize(&psi, rels, &solver)?;
        let relative_error = (res.value - alpha).abs() / alpha;
        let dev = res
            .point
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let top = crate::displacement::max_f(&res.point, &f)?.value;
        let spread = f
            .iter()
            .map(|r| (top - crate::displacement::f_r_raw(res.point.coords(), r)) / top)
            .fold(0.0, f64::max);
        checks.push(row(
            format!("n={n} min max over {name}"),
            format!("relative error <= {cross_tol:e}"),
            format!("{} ({relative_error:e})", res.value),
            relative_error <= cross_tol,
        ));
        checks.push(row(
            format!("n={n} argmin over {name}"),
            "coordinates within 1e-3 of candidate",
            format!("{dev:e}"),
            dev <= 1e-3,
        ));
        numeric.push(NumericRun {
            collection: name.to_string(),
            value: res.value,
            relative_error,
            max_coordinate_deviation: dev,
            equalization_spread: spread,
            converged: res.converged,
            best_start: res.best_start,
            starts: res.starts,
        });
    }
    let mut warnings = Vec::new();
    for run in &numeric {
        if !run.converged {
            warnings.push(format!(
                "best start over {} did not reach a stationary point",
                run.collection
            ));
        }
    }
    let detail = OptimizeDetail {
        n,
        alpha,
        qualification_witness: qualification_witness(n, &closed.point),
        a_note: a_candidate_note(n, alpha),
        closed_form: closed,
        kkt,
        solver,
        numeric,
    };
    Ok(Report::new(config, checks, warnings, detail))
}

fn optimize_text(report: &Report<OptimizeDetail>) -> String {
    let d = &report.detail;
    let p = d.closed_form.point;
    let mut out = format!(
        "n={} alpha={}\nclosed form a*={} b*={} c*={}\nconstraint residual {:e}, equalization residual {:e}\n",
        d.n, d.alpha, p.a, p.b, p.c, d.closed_form.constraint_residual, d.closed_form.equalization_residual
    );
    out.push_str(&format!(
        "KKT lambda={:?} residual={:e}\n",
        d.kkt.lambda, d.kkt.residual
    ));
    out.push_str(&format!(
        "a* note: adopted {} (constraint {:e}), alternative 1/((2n-1)+alpha) = {} (constraint {:e}, equalization {:e})\n",
        d.a_note.adopted_a,
        d.a_note.adopted_constraint_residual,
        d.a_note.alternative_a,
        d.a_note.alternative_constraint_residual,
        d.a_note.alternative_equalization_residual
    ));
    for r in &d.numeric {
        out.push_str(&format!(
            "numeric {}: value={} rel.err={:e} coord.dev={:e} spread={:e} converged={}\n",
            r.collection,
            r.value,
            r.relative_error,
            r.max_coordinate_deviation,
            r.equalization_spread,
            r.converged
        ));
    }
    out.push_str(&checks_text(report));
    out
}

// ---------------------------------------------------------------- check-matrices

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScan {
    pub i: usize,
    pub j: usize,
    pub trace: Option<TracePairReport>,
    /// Displacement scans at the two midpoints `z1`, `z2`.
    pub midpoints: Vec<DisplacementTheoremReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixDetail {
    pub n: usize,
    pub classifications: Vec<Classification>,
    pub schottky: SchottkyCertificate,
    /// Scan over the generators and their length-3 conjugates at `j`.
    pub at_j: DisplacementTheoremReport,
    pub pairs: Vec<PairScan>,
    /// The hypotheses of the bounds were certified; otherwise margins are
    /// reported but nothing is asserted.
    pub hypotheses_verified: bool,
}

fn pair_scan(gens: &[crate::hyperbolic::Moebius], i: usize, j: usize) -> Result<PairScan> {
    let n = gens.len();
    let (g, h) = (gens[i], gens[j]);
    let axis = fixed_points(&g)?;
    let mut midpoints = Vec::new();
    for conj in [g.conjugate_by(&h), g.conjugate_by(&h.inverse())] {
        let z: H3Point = common_perpendicular(&axis, &fixed_points(&conj)?)?.midpoint;
        midpoints.push(check_displacement_theorem(gens, &z, n)?);
    }
    Ok(PairScan {
        i: i + 1,
        j: j + 1,
        trace: Some(trace_pair(gens, i, j)?),
        midpoints,
        error: None,
    })
}

pub fn cmd_check_matrices(args: &CheckArgs, mut config: RunConfig) -> Result<Report<MatrixDetail>> {
    config.matrices = Some(args.matrices.display().to_string());
    let text = std::fs::read_to_string(&args.matrices)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", args.matrices.display())))?;
    let gens = parse_matrices(&text)?;
    let n = gens.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 generators, got {n}"
        )));
    }
    config.n = Some(n);
    let classifications: Vec<_> = gens.iter().map(classify).collect();
    let schottky = schottky_certificate(&gens);
    let at_j = check_displacement_theorem(&gens, &H3Point::j(), n)?;
    let mut warnings = Vec::new();
    for (k, c) in classifications.iter().enumerate() {
        if *c != Classification::Loxodromic {
            warnings.push(format!("generator {} is {c:?}, not loxodromic", k + 1));
        }
    }
    if !schottky.passed {
        warnings.push(format!(
            "hypotheses unverified: {}",
            schottky
                .reason
                .clone()
                .unwrap_or_else(|| "Schottky test failed".into())
        ));
    }
    let verified = schottky.passed;
    let mut checks = vec![row(
        "displacement bound at j",
        format!(">= {}", at_j.bound),
        format!("{} (margin {})", at_j.max, at_j.margin),
        at_j.holds != Some(false),
    )];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let scan = pair_scan(&gens, i, j).unwrap_or_else(|e| PairScan {
                i: i + 1,
                j: j + 1,
                trace: None,
                midpoints: Vec::new(),
                error: Some(e.to_string()),
            });
            if let Some(e) = &scan.error {
                warnings.push(format!("pair ({}, {}) not evaluated: {e}", i + 1, j + 1));
            }
            for (k, m) in scan.midpoints.iter().enumerate() {
                checks.push(row(
                    format!("displacement bound at z{} of pair ({}, {})", k + 1, i + 1, j + 1),
                    format!(">= {}", m.bound),
                    format!("{} (margin {})", m.max, m.margin),
                    m.holds != Some(false),
                ));
            }
            if let Some(t) = &scan.trace {
                let asserted = verified && t.hypotheses_hold;
                if verified && !t.hypotheses_hold {
                    warnings.push(format!(
                        "trace bound for pair ({}, {}) not asserted: midpoint hypotheses do not hold",
                        i + 1,
                        j + 1
                    ));
                }
                checks.push(row(
                    format!("trace bound for pair ({}, {})", i + 1, j + 1),
                    format!(">= {}", t.rhs),
                    format!("{} (margin {})", t.lhs, t.margin),
                    !asserted || t.margin >= -1e-9,
                ));
            }
            pairs.push(scan);
        }
    }
    let detail = MatrixDetail {
        n,
        classifications,
        schottky,
        at_j,
        pairs,
        hypotheses_verified: verified,
    };
    Ok(Report::new(config, checks, warnings, detail))
}

// ---------------------------------------------------------------- driver

fn render<T: Serialize>(
    report: &Report<T>,
    format: Format,
    csv: impl Fn(&Report<T>) -> String,
    text: impl Fn(&Report<T>) -> String,
) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => csv(report),
        Format::Text => text(report),
    })
}

fn base_config(cli: &Cli, command: &str) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        format: format!("{:?}", cli.format).to_lowercase(),
        out: cli.out.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    }
}

/// Runs one parsed command; returns the rendered report and exit code.
pub fn execute(cli: &Cli) -> Result<(String, i32)> {
    let f = cli.format;
    match &cli.command {
        Command::Alpha(a) => {
            let r = cmd_alpha(a, base_config(cli, "alpha"))?;
            Ok((
                render(&r, f, |r| alpha_csv(&r.detail), alpha_text)?,
                r.exit_code(),
            ))
        }
        Command::Verify(a) => {
            let r = cmd_verify(a, base_config(cli, "verify"))?;
            Ok((
                render(&r, f, |r| checks_csv(&r.checks), checks_text)?,
                r.exit_code(),
            ))
        }
        Command::Optimize(a) => {
            let r = cmd_optimize(a, base_config(cli, "optimize"))?;
            Ok((
                render(&r, f, |r| checks_csv(&r.checks), optimize_text)?,
                r.exit_code(),
            ))
        }
        Command::CheckMatrices(a) => {
            let r = cmd_check_matrices(a, base_config(cli, "check-matrices"))?;
            Ok((
                render(&r, f, |r| checks_csv(&r.checks), checks_text)?,
                r.exit_code(),
            ))
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    // a pool built earlier in the same process wins; that is harmless
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Full entry point: parses `args`, runs, writes the report and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_USAGE;
    }
    let (text, code) = match execute(&cli) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return match e {
                Error::Internal(_) => EXIT_FAILURE,
                _ => EXIT_USAGE,
            };
        }
    };
    let written = match &cli.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_USAGE;
    }
    if code != EXIT_OK {
        let _ = writeln!(stderr, "verification failed");
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..10").unwrap(), (2, 10));
        assert_eq!(parse_range("3..=3").unwrap(), (3, 3));
        for bad in ["1..4", "5..3", "2-4", "a..b", "2..100000"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("x\"y"), "\"x\"\"y\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn alpha_rows() {
        let args = AlphaArgs {
            n: None,
            n_range: Some("2..4".into()),
            tol: 1e-12,
        };
        let r = cmd_alpha(&args, RunConfig::default()).unwrap();
        assert!(r.passed);
        assert_eq!(r.detail.len(), 3);
        assert_eq!(r.detail[0].coefficients[0], "21");
        let csv = alpha_csv(&r.detail);
        assert!(csv.starts_with(ALPHA_CSV_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn usage_errors() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(
            run(["loxobound", "alpha", "--n-range", "9..2"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(run(["loxobound", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(
            run(["loxobound", "verify", "--ball-length", "3"], &mut out, &mut err),
            EXIT_USAGE
        );
    }
}
