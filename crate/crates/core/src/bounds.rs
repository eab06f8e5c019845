//! Exact evaluation of the combinatorial quantities behind the competitive
//! ratios: the falling-product average, the IID geometric average, the
//! secretary window expectation and the hockey-stick identity.

use num_bigint::BigInt;
use num_integer::{binomial, Integer};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::online::p_alpha;
use crate::scalar::Rational;

/// Tolerance for comparisons against irrational targets.
pub const IRRATIONAL_TOL: f64 = 1e-12;
/// Slack allowed in the secretary window check.
pub const SECRETARY_TOL: f64 = 1e-9;

fn q(n: usize, d: usize) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn positive_part(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

fn check_mk(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!("need m ≥ 1 and k ≥ 1, got m={m}, k={k}")));
    }
    Ok(())
}

/// `(1/m) Σ_{t=1}^{m} Π_{i=1}^{t−1} (1 − k/(m−t+i))₊`.
pub fn falling_sum(m: usize, k: usize) -> Result<Rational> {
    check_mk(m, k)?;
    let mut total = Rational::zero();
    for t in 1..=m {
        let mut prod = Rational::one();
        for i in 1..t {
            prod *= positive_part(Rational::one() - q(k, m - t + i));
            if prod.is_zero() {
                break;
            }
        }
        total += prod;
    }
    Ok(total / q(m, 1))
}

/// `(1/m) Σ_{t=1}^{m} (1 − k/m)^{t−1}`.
pub fn iid_geometric_bound(m: usize, k: usize) -> Result<Rational> {
    check_mk(m, k)?;
    if k > m {
        return Err(Error::InvalidParameter(format!("need k ≤ m, got m={m}, k={k}")));
    }
    let ratio = Rational::one() - q(k, m);
    let mut term = Rational::one();
    let mut total = Rational::zero();
    for _ in 0..m {
        total += &term;
        term *= &ratio;
    }
    Ok(total / q(m, 1))
}

/// Closed form `(1/k)(1 − (1 − k/m)^m)` of [`iid_geometric_bound`].
pub fn iid_geometric_closed_form(m: usize, k: usize) -> Result<Rational> {
    check_mk(m, k)?;
    let ratio = Rational::one() - q(k, m);
    let power = num_traits::pow(ratio, m);
    Ok((Rational::one() - power) / q(k, 1))
}

/// `E_τ[(1/m) Σ_{t=τ+1}^{m} Π_{i=τ+1}^{t−1} (1 − k/i)₊]` for `τ ~ Bin(m, p)`,
/// by exact enumeration of τ.
///
/// The inner sum is 1 for `τ < min(k, m)` and `C(τ,k) Σ_{j=τ}^{m−1} 1/C(j,k)`
/// otherwise; swapping the sums over τ and j leaves `m` additions of integers
/// over small binomial denominators.
pub fn secretary_window_value(m: usize, k: usize, p: &Rational) -> Result<Rational> {
    check_mk(m, k)?;
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0,1]")));
    }
    let (a, d) = (p.numer().clone(), p.denom().clone());
    let b = &d - &a;
    let mut b_pows = Vec::with_capacity(m + 1);
    b_pows.push(BigInt::one());
    for i in 0..m {
        let next = &b_pows[i] * &b;
        b_pows.push(next);
    }
    // weight[τ] = C(m,τ) a^τ b^(m−τ), so P(τ) = weight[τ] / d^m
    let mut weights = Vec::with_capacity(m + 1);
    let (mut choose, mut a_pow) = (BigInt::one(), BigInt::one());
    for tau in 0..=m {
        weights.push(&choose * &a_pow * &b_pows[m - tau]);
        choose = choose * BigInt::from(m - tau) / BigInt::from(tau + 1);
        a_pow *= &a;
    }
    // terms prefix_j / C(j,k) for k ≤ j < m, summed over the lcm of the C(j,k)
    let mut terms = Vec::with_capacity(m.saturating_sub(k));
    let mut prefix = BigInt::zero();
    let mut c_jk = BigInt::one();
    let mut lcm = BigInt::one();
    for (j, w) in weights.iter().enumerate().take(m).skip(k) {
        if j > k {
            c_jk = c_jk * BigInt::from(j) / BigInt::from(j - k);
        }
        prefix += w * &c_jk;
        lcm = lcm.lcm(&c_jk);
        terms.push((prefix.clone(), c_jk.clone()));
    }
    let mut numer: BigInt = weights[..k.min(m)].iter().sum::<BigInt>() * &lcm;
    for (p, c) in terms {
        numer += p * (&lcm / c);
    }
    Ok(Rational::new(numer, lcm * num_traits::pow(d, m) * BigInt::from(m)))
}

/// Best rational approximation of `x` with `|x − p/q| ≤ tol`, by continued fractions.
pub fn rational_approximation(x: f64, tol: f64) -> Result<Rational> {
    if !x.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("cannot approximate {x} to tolerance {tol}")));
    }
    let exact = Rational::from_float(x).ok_or_else(|| Error::Numeric(format!("{x} is not representable")))?;
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact.clone();
    loop {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        let cand = Rational::new(h2.clone(), k2.clone());
        let frac = &rest - Rational::from_integer(a);
        if (&cand - &exact).abs().to_f64().unwrap_or(f64::INFINITY) <= tol || frac.is_zero() {
            return Ok(cand);
        }
        rest = frac.recip();
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
}

/// Secretary window at a rational stand-in for `p_k`, with a bound on the
/// deviation from the value at the true `p_k`.
///
/// The value is a polynomial in `p` whose derivative is at most `2m` in
/// absolute value on `[0,1]`, so the bound is `2m · |p̂ − p_k|`, where the
/// approximation error includes the floating-point evaluation of `p_k`.
pub fn secretary_window_at_pk(m: usize, k: usize) -> Result<(Rational, f64)> {
    let (p, _) = p_alpha(k)?;
    let approx = rational_approximation(p, IRRATIONAL_TOL)?;
    let value = secretary_window_value(m, k, &approx)?;
    let dp = IRRATIONAL_TOL + 4.0 * f64::EPSILON;
    Ok((value, 2.0 * m as f64 * dp))
}

/// `Σ_{t=1}^{m} C(m−t, k) = C(m, k+1)`.
pub fn hockey_stick_check(m: usize, k: usize) -> Result<bool> {
    let (lhs, rhs) = hockey_stick_sides(m, k)?;
    Ok(lhs == rhs)
}

fn hockey_stick_sides(m: usize, k: usize) -> Result<(BigInt, BigInt)> {
    if k == 0 || m < k + 1 {
        return Err(Error::InvalidParameter(format!("need m ≥ k+1 ≥ 2, got m={m}, k={k}")));
    }
    let c = |n: usize, r: usize| if r > n { BigInt::zero() } else { binomial(BigInt::from(n), BigInt::from(r)) };
    let lhs = (1..=m).map(|t| c(m - t, k)).sum();
    Ok((lhs, c(m, k + 1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Falling,
    Iid,
    Secretary,
    Hockey,
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "falling" => Ok(Self::Falling),
            "iid" => Ok(Self::Iid),
            "secretary" => Ok(Self::Secretary),
            "hockey" => Ok(Self::Hockey),
            other => Err(Error::InvalidParameter(format!("unknown bound check {other:?}"))),
        }
    }
}

/// One evaluated inequality; `lhs` and `rhs` are exact rationals rendered as `p/q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheckResult {
    pub check: BoundKind,
    pub m: usize,
    pub k: usize,
    pub p: Option<f64>,
    pub lhs: String,
    pub rhs: String,
    pub lhs_f64: f64,
    pub rhs_f64: f64,
    pub holds: bool,
    pub equality: bool,
}

fn result(check: BoundKind, m: usize, k: usize, p: Option<f64>, lhs: &Rational, rhs: &Rational, holds: bool) -> BoundCheckResult {
    BoundCheckResult {
        check,
        m,
        k,
        p,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        lhs_f64: lhs.to_f64().unwrap_or(f64::NAN),
        rhs_f64: rhs.to_f64().unwrap_or(f64::NAN),
        holds,
        equality: lhs == rhs,
    }
}

/// Evaluates one check at `(m, k)`.
///
/// * falling: value ≥ 1/(k+1), with equality when m ≥ k+1 and value 1/m when m ≤ k;
/// * iid: the sum equals its closed form, which is ≥ (1 − e^{−k})/k;
/// * secretary: value at p_k ≥ α_k − 10⁻⁹ after the approximation bound;
/// * hockey: the binomial identity.
pub fn run_check(kind: BoundKind, m: usize, k: usize) -> Result<BoundCheckResult> {
    match kind {
        BoundKind::Falling => {
            let lhs = falling_sum(m, k)?;
            let rhs = q(1, k + 1);
            let shape = if m > k { lhs == rhs } else { lhs == q(1, m) };
            Ok(result(kind, m, k, None, &lhs, &rhs, lhs >= rhs && shape))
        }
        BoundKind::Iid => {
            let lhs = iid_geometric_bound(m, k)?;
            let rhs = iid_geometric_closed_form(m, k)?;
            let limit = (1.0 - (-(k as f64)).exp()) / k as f64;
            let holds = lhs == rhs && rhs.to_f64().unwrap_or(f64::NAN) >= limit - IRRATIONAL_TOL;
            Ok(result(kind, m, k, None, &lhs, &rhs, holds))
        }
        BoundKind::Secretary => {
            let (p, alpha) = p_alpha(k)?;
            let (lhs, err) = secretary_window_at_pk(m, k)?;
            let rhs = rational_approximation(alpha, IRRATIONAL_TOL)?;
            let holds = lhs.to_f64().unwrap_or(f64::NAN) + err >= alpha - SECRETARY_TOL;
            Ok(result(kind, m, k, Some(p), &lhs, &rhs, holds))
        }
        BoundKind::Hockey => {
            let (lhs, rhs) = hockey_stick_sides(m, k)?;
            let (lhs, rhs) = (Rational::from_integer(lhs), Rational::from_integer(rhs));
            Ok(result(kind, m, k, None, &lhs, &rhs, lhs == rhs))
        }
    }
}

/// Runs a check over `1 ≤ k ≤ k_max`, `1 ≤ m ≤ m_max`, skipping pairs outside its domain.
pub fn run_grid(kind: BoundKind, m_max: usize, k_max: usize) -> Result<Vec<BoundCheckResult>> {
    let mut out = Vec::new();
    for k in 1..=k_max {
        for m in 1..=m_max {
            let in_domain = match kind {
                BoundKind::Falling | BoundKind::Secretary => true,
                BoundKind::Iid => k <= m,
                BoundKind::Hockey => m > k,
            };
            if in_domain {
                out.push(run_check(kind, m, k)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn falling_examples() {
        assert_eq!(falling_sum(1, 4).unwrap(), r(1, 1));
        assert_eq!(falling_sum(3, 1).unwrap(), r(1, 2));
        assert_eq!(falling_sum(2, 3).unwrap(), r(1, 2));
        assert!(falling_sum(0, 1).is_err());
    }

    #[test]
    fn iid_examples() {
        assert_eq!(iid_geometric_bound(3, 3).unwrap(), r(1, 3));
        let expected = r(1, 2) * (r(1, 1) - r(1_048_576, 9_765_625));
        assert_eq!(iid_geometric_bound(10, 2).unwrap(), expected);
        assert_eq!(iid_geometric_closed_form(10, 2).unwrap(), expected);
        assert!(iid_geometric_bound(2, 3).is_err());
    }

    #[test]
    fn iid_limit() {
        let v = iid_geometric_closed_form(10_000, 2).unwrap().to_f64().unwrap();
        assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-3);
    }

    #[test]
    fn secretary_examples() {
        assert_eq!(secretary_window_value(1, 1, &r(1, 1)).unwrap(), r(0, 1));
        assert_eq!(secretary_window_value(1, 1, &r(0, 1)).unwrap(), r(1, 1));
        assert!(secretary_window_value(100, 2, &r(1, 2)).unwrap() >= r(1, 4));
        assert!(secretary_window_value(3, 1, &r(3, 2)).is_err());
    }

    #[test]
    fn secretary_window_by_hand() {
        // m=2, k=2, p=1/2: τ=0 w.p. 1/4 gives 1/2, τ=1 w.p. 1/2 gives 1/2, τ=2 gives 0
        assert_eq!(secretary_window_value(2, 2, &r(1, 2)).unwrap(), r(3, 8));
    }

    /// Direct enumeration of τ and t with the products multiplied out.
    fn window_by_definition(m: usize, k: usize, p: &Rational) -> Rational {
        let mut total = Rational::zero();
        for tau in 0..=m {
            let weight = Rational::from_integer(binomial(BigInt::from(m), BigInt::from(tau)))
                * num_traits::pow(p.clone(), tau)
                * num_traits::pow(Rational::one() - p, m - tau);
            let mut inner = Rational::zero();
            for t in tau + 1..=m {
                let mut prod = Rational::one();
                for i in tau + 1..t {
                    prod *= positive_part(Rational::one() - q(k, i));
                }
                inner += prod;
            }
            total += weight * inner;
        }
        total / q(m, 1)
    }

    #[test]
    fn secretary_window_matches_definition() {
        for m in 1..=14 {
            for k in 1..=5 {
                for p in [r(0, 1), r(1, 3), r(1, 2), r(5, 7), r(1, 1)] {
                    assert_eq!(secretary_window_value(m, k, &p).unwrap(), window_by_definition(m, k, &p), "m={m} k={k} p={p}");
                }
            }
        }
    }

    #[test]
    fn hockey_examples() {
        assert!(hockey_stick_check(2, 1).unwrap());
        assert!(hockey_stick_check(5, 2).unwrap());
        assert!(hockey_stick_check(8, 7).unwrap());
        assert!(hockey_stick_check(2, 2).is_err());
    }

    #[test]
    fn continued_fraction_approximation() {
        let x = std::f64::consts::PI;
        let a = rational_approximation(x, 1e-6).unwrap();
        assert!((a.to_f64().unwrap() - x).abs() <= 1e-6);
        assert_eq!(rational_approximation(0.5, 1e-12).unwrap(), r(1, 2));
        assert_eq!(rational_approximation(3.0, 1e-12).unwrap(), r(3, 1));
    }

    #[test]
    fn check_rows() {
        let row = run_check(BoundKind::Falling, 3, 1).unwrap();
        assert!(row.holds && row.equality);
        assert_eq!(row.lhs, "1/2");
        assert!(run_check(BoundKind::Secretary, 10, 2).unwrap().holds);
        assert_eq!(run_grid(BoundKind::Hockey, 4, 3).unwrap().len(), 6);
        assert!("bogus".parse::<BoundKind>().is_err());
    }
}
