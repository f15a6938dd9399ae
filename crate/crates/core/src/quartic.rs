//! The quartic whose largest root defines `alpha_n`, evaluated and
//! bisected in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quartic {
    pub n: usize,
    /// `[c4, c3, c2, c1, c0]`, highest degree first.
    pub coeffs: [BigInt; 5],
}

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(big(v))
}

fn frac(num: i64, den: i64) -> BigRational {
    BigRational::new(big(num), big(den))
}

/// Evaluates an integer polynomial in `n` given highest degree first.
fn poly_n(n: &BigInt, coeffs: &[i64]) -> BigInt {
    coeffs.iter().fold(BigInt::zero(), |acc, &c| acc * n + c)
}

pub fn coefficients(n: usize) -> Result<Quartic> {
    if n < 2 {
        return Err(invalid(format!("rank must be at least 2, got {n}")));
    }
    let m = BigInt::from(n);
    let coeffs = [
        poly_n(&m, &[8, -12, 2, 1]),
        poly_n(&m, &[-64, 192, -192, 64, 4, 2, -4]),
        poly_n(&m, &[-96, 224, -168, 52, -18, 6]),
        poly_n(&m, &[32, -112, 128, -68, 22, -4]),
        poly_n(&m, &[16, -32, 24, -8, 1]),
    ];
    Ok(Quartic { n, coeffs })
}

impl Quartic {
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |acc, c| {
            acc * x + BigRational::from_integer(c.clone())
        })
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn coeffs_i128(&self) -> Vec<i128> {
        self.coeffs
            .iter()
            .map(|c| c.to_i128().unwrap_or(i128::MAX))
            .collect()
    }
}

/// The probe points of the sign table, in increasing order.
pub fn probe_points(n: usize) -> [BigRational; 6] {
    let n = n as i64;
    let k = 2 * n - 1;
    [
        rat(-2),
        frac(-1, n),
        frac(-1, k),
        rat(1),
        rat(k * k),
        rat(k * k * k),
    ]
}

/// Expected sign of the quartic at each probe point.
pub const EXPECTED_SIGNS: [i8; 6] = [1, -1, 1, -1, -1, 1];

/// The factored value at each probe point as printed, with two entries
/// that do not match the polynomial.
pub fn printed_forms(n: usize) -> [BigRational; 6] {
    closed_forms(n, true)
}

/// The factored values with the two misprints fixed: constant `-27` (not
/// `-17`) at `-2`, and denominator `(2n-1)^3` (not squared) at `-1/(2n-1)`.
pub fn corrected_forms(n: usize) -> [BigRational; 6] {
    closed_forms(n, false)
}

fn closed_forms(n: usize, printed: bool) -> [BigRational; 6] {
    let m = BigInt::from(n);
    let r = |v: BigInt| BigRational::from_integer(v);
    let k: BigInt = &m * 2 - 1;
    let nm1: BigInt = &m - 1;
    let n4: BigInt = m.pow(4);
    let at_minus_two = (&m * 2 - 3) * poly_n(&m, &[256, -608, 424, -36, 18, if printed { -17 } else { -27 }]);
    let at_minus_inv_n = -BigRational::new(poly_n(&m, &[16, -48, 72, -84, 33, 10, 8, -6, -1]), n4.clone());
    let den = if printed { k.pow(2) } else { k.pow(3) };
    let at_minus_inv_k = BigRational::new(&n4 * 32u32 * &nm1, den);
    let nm1_sq: BigInt = &nm1 * &nm1;
    let at_one: BigInt = -(&n4 * 64u32 * &nm1_sq);
    let at_k2: BigInt = -(&n4 * 128u32) * poly_n(&m, &[2, -3, 1]).pow(3) * poly_n(&m, &[4, -8, 5]);
    let at_k3: BigInt = k.pow(4) * 16u32 * &nm1_sq * poly_n(&m, &[32, -80, 56, 4, -22, 16, -5, 1]);
    [
        r(at_minus_two),
        at_minus_inv_n,
        at_minus_inv_k,
        r(at_one),
        r(at_k2),
        r(at_k3),
    ]
}

fn sign(x: &BigRational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignRow {
    pub point: String,
    pub value: String,
    pub expected_sign: i8,
    pub sign: i8,
    /// Value equals the corrected factored form.
    pub matches_form: bool,
    /// Value equals the factored form exactly as printed.
    pub matches_printed: bool,
}

impl SignRow {
    pub fn passed(&self) -> bool {
        self.sign == self.expected_sign && self.matches_form
    }
}

pub fn sign_table(n: usize) -> Result<Vec<SignRow>> {
    let q = coefficients(n)?;
    let printed = printed_forms(n);
    let corrected = corrected_forms(n);
    Ok(probe_points(n)
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let v = q.eval_exact(x);
            SignRow {
                point: x.to_string(),
                value: v.to_string(),
                expected_sign: EXPECTED_SIGNS[i],
                sign: sign(&v),
                matches_form: v == corrected[i],
                matches_printed: v == printed[i],
            }
        })
        .collect())
}

/// An exact bracket `(lo, hi)` with a sign change of the quartic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Bracket {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / rat(2)).to_f64().unwrap_or(f64::NAN)
    }
}

fn tol_rational(tol: f64) -> Result<BigRational> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    BigRational::from_float(tol).ok_or_else(|| invalid("tolerance not representable"))
}

/// Bisects in exact arithmetic until the bracket is no wider than `tol`.
pub fn bisect(q: &Quartic, lo: BigRational, hi: BigRational, tol: f64) -> Result<Bracket> {
    let tol = tol_rational(tol)?;
    let mut lo = lo;
    let mut hi = hi;
    let s_lo = sign(&q.eval_exact(&lo));
    let s_hi = sign(&q.eval_exact(&hi));
    if s_lo * s_hi >= 0 {
        return Err(Error::Internal(format!(
            "no sign change on ({lo}, {hi}) for n={}",
            q.n
        )));
    }
    let two = rat(2);
    while &hi - &lo > tol {
        let mid = (&lo + &hi) / &two;
        let s = sign(&q.eval_exact(&mid));
        if s == 0 {
            // exact root; shrink to a tiny bracket around it
            let eps = &tol / rat(4);
            lo = &mid - &eps;
            hi = &mid + &eps;
            break;
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket { lo, hi })
}

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRoot {
    pub n: usize,
    pub bracket: Bracket,
    pub value: f64,
}

impl AlphaRoot {
    /// `½ log α`, the displacement bound.
    pub fn half_log(&self) -> f64 {
        0.5 * self.value.ln()
    }

    /// `2 sinh²(¼ log α)`, the trace-inequality bound.
    pub fn trace_bound(&self) -> f64 {
        trace_bound_from(self.value)
    }
}

pub fn trace_bound_from(alpha: f64) -> f64 {
    2.0 * (0.25 * alpha.ln()).sinh().powi(2)
}

/// The unique root above `(2n-1)^2`, bracketed between `(2n-1)^2` and
/// `(2n-1)^3`.
pub fn alpha(n: usize, tol: f64) -> Result<AlphaRoot> {
    let q = coefficients(n)?;
    let pts = probe_points(n);
    let bracket = bisect(&q, pts[4].clone(), pts[5].clone(), tol)?;
    let value = bracket.midpoint_f64();
    Ok(AlphaRoot { n, bracket, value })
}

/// All four real roots, each bracketed between consecutive probe points
/// with a sign change.
pub fn all_roots(n: usize, tol: f64) -> Result<Vec<Bracket>> {
    let q = coefficients(n)?;
    let p = probe_points(n);
    [(0, 1), (1, 2), (2, 3), (4, 5)]
        .iter()
        .map(|&(i, j)| bisect(&q, p[i].clone(), p[j].clone(), tol))
        .collect()
}

/// `alpha(n)` at the default tolerance, as a float.
pub fn alpha_value(n: usize) -> Result<f64> {
    Ok(alpha(n, DEFAULT_TOL)?.value)
}

/// True if `x` lies strictly inside `((2n-1)^2, (2n-1)^3)`.
pub fn in_alpha_window(n: usize, x: f64) -> bool {
    let k = (2 * n - 1) as f64;
    x > k * k && x < k * k * k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_n2_n3() {
        let q = coefficients(2).unwrap();
        assert_eq!(q.coeffs_i128(), vec![21, -496, -654, 24, 81]);
        assert_eq!(
            coefficients(3).unwrap().coeffs_i128(),
            vec![115, -13786, -9300, 1610, 625]
        );
        assert!(coefficients(1).is_err());
    }

    #[test]
    fn eval_examples() {
        let q = coefficients(2).unwrap();
        assert_eq!(q.eval_exact(&rat(0)), rat(81));
        assert_eq!(q.eval_exact(&rat(1)), rat(-1024));
        assert_eq!(q.eval_exact(&rat(9)), rat(-276480));
    }

    #[test]
    fn sign_table_rows() {
        for n in [2, 5] {
            for row in sign_table(n).unwrap() {
                assert!(row.passed(), "n={n} {row:?}");
            }
        }
        let rows = sign_table(2).unwrap();
        let printed: Vec<bool> = rows.iter().map(|r| r.matches_printed).collect();
        assert_eq!(printed, [false, true, false, true, true, true]);
    }

    #[test]
    fn alpha_two() {
        let a = alpha(2, DEFAULT_TOL).unwrap();
        assert!(a.value > 24.86 && a.value < 24.87);
        assert!(a.bracket.width() <= BigRational::from_float(1e-12).unwrap());
        assert!((a.half_log() - 1.6068).abs() < 5e-4);
        assert!((a.trace_bound() - 1.5937).abs() < 5e-4);
        let q = coefficients(2).unwrap();
        assert!(q.eval_exact(&a.bracket.lo).is_negative());
        assert!(q.eval_exact(&a.bracket.hi).is_positive());
    }

    #[test]
    fn three_small_roots() {
        let roots = all_roots(2, 1e-9).unwrap();
        assert_eq!(roots.len(), 4);
        let small = roots.iter().filter(|b| b.lo > rat(-2) && b.hi < rat(1)).count();
        assert_eq!(small, 3);
        assert!(roots[0].hi <= frac(-1, 2));
        assert!(roots[1].lo >= frac(-1, 2) && roots[1].hi <= frac(-1, 3));
    }

    #[test]
    fn bad_tolerance() {
        assert!(alpha(2, 0.0).is_err());
        assert!(alpha(2, f64::NAN).is_err());
    }
}
