//! Closed-form reference values: Gaussian absolute moments, chi moments,
//! Gamma-ratio factors relating mixed norm moments, Gaussian tail bounds and
//! Stirling's ratio.
//!
//! Gamma arithmetic stays in log space until the final exponentiation; the
//! direct ratios overflow once `N` reaches a few hundred.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const STIRLING_MIN: f64 = 10.0;

/// A possibly huge or tiny positive quantity, kept with its natural log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    /// `exp(log_scale)`; not meaningful when `overflow` is set.
    pub value: f64,
    pub log_scale: Option<f64>,
    /// `exp(log_scale)` left the normal `f64` range.
    pub overflow: bool,
}

impl OracleValue {
    pub fn from_log(log_scale: f64) -> Self {
        let value = log_scale.exp();
        OracleValue {
            value,
            log_scale: Some(log_scale),
            overflow: !value.is_normal(),
        }
    }

    pub fn exact(value: f64) -> Self {
        OracleValue {
            value,
            log_scale: None,
            overflow: false,
        }
    }

    /// Natural log, derived from `value` when no log form was stored.
    pub fn ln(&self) -> f64 {
        self.log_scale.unwrap_or_else(|| self.value.ln())
    }
}

/// Tail of the Stirling series, `lnΓ(x) - [(x - ½) ln x - x + ½ ln 2π]`, for `x ≥ 10`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 * (1.0 / 156.0)))))))
}

/// `lnΓ(x)` for `x > 0`: upward recurrence to `x ≥ 10`, then Stirling's series.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x >= STIRLING_MIN {
        return (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_correction(x);
    }
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < STIRLING_MIN {
        product *= shifted;
        shifted += 1.0;
    }
    ln_gamma(shifted) - product.ln()
}

/// `lnΓ(a) - lnΓ(b)` without cancelling two large logarithms.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a < STIRLING_MIN || b < STIRLING_MIN {
        return ln_gamma(a) - ln_gamma(b);
    }
    // (a-½)ln a - (b-½)ln b = (a-b) ln b + (a-½) ln(a/b)
    let diff = a - b;
    diff * b.ln() + (a - 0.5) * (diff / b).ln_1p() - diff + stirling_correction(a)
        - stirling_correction(b)
}

fn require_q(q: f64) -> Result<()> {
    if q.is_finite() && q >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q must be finite and ≥ 1, got {q}")))
    }
}

/// `C(q) = (E|g|^q)^{1/q} = π^{-1/(2q)} √2 Γ((q+1)/2)^{1/q}` for standard normal `g`.
pub fn c_q(q: f64) -> Result<f64> {
    require_q(q)?;
    Ok(match integer_abs_moment(q) {
        Some(m) => m.powf(1.0 / q),
        None => ln_c_q(q).exp(),
    })
}

fn ln_c_q(q: f64) -> f64 {
    -PI.ln() / (2.0 * q) + 0.5 * LN_2 + ln_gamma(0.5 * (q + 1.0)) / q
}

/// `E|g|^q` by its product form for integer `q ≤ 40`: `(q-1)!!` for even `q`,
/// `√(2/π) (q-1)!!` for odd `q`.
fn integer_abs_moment(q: f64) -> Option<f64> {
    if q != q.round() || q > 40.0 {
        return None;
    }
    let q = q as u32;
    let double_factorial: f64 = (1..q).rev().step_by(2).map(f64::from).product();
    Some(if q.is_multiple_of(2) {
        double_factorial
    } else {
        (2.0 / PI).sqrt() * double_factorial
    })
}

/// `2^{-l/2} Γ((k-l+N)/2) / Γ((k+N)/2)`, the factor with
/// `E(‖f‖_q^k / ‖f‖_2^l) = factor · E‖f‖_q^k`.
pub fn moment_ratio_factor(k: u32, l: u32, n: u64) -> Result<OracleValue> {
    let (k, l, n) = (k as f64, l as f64, n as f64);
    if k < 1.0 || l < 1.0 || n < 1.0 {
        return Err(Error::domain("k, l and N must be positive"));
    }
    if l >= k + n {
        return Err(Error::domain(format!(
            "moment ratio diverges unless l < k + N (k={k}, l={l}, N={n})"
        )));
    }
    Ok(OracleValue::from_log(
        -0.5 * l * LN_2 + ln_gamma_ratio(0.5 * (k - l + n), 0.5 * (k + n)),
    ))
}

/// `2^{k/2} Γ((k-l+N)/2) / Γ((N-l)/2)`, the factor with
/// `E(‖f‖_2^k / ‖f‖_p^l) = factor · E(‖f‖_p^{-l})`.
pub fn recip_moment_factor(k: u32, l: u32, n: u64) -> Result<OracleValue> {
    let (k, l, n) = (k as f64, l as f64, n as f64);
    if l < 1.0 || n < 1.0 {
        return Err(Error::domain("l and N must be positive"));
    }
    if l >= n {
        return Err(Error::domain(format!(
            "reciprocal moment diverges unless l < N (l={l}, N={n})"
        )));
    }
    Ok(OracleValue::from_log(
        0.5 * k * LN_2 + ln_gamma_ratio(0.5 * (k - l + n), 0.5 * (n - l)),
    ))
}

/// `E|a|_2^k = 2^{k/2} Γ((N+k)/2) / Γ(N/2)` for `a ~ N(0, I_N)`.
pub fn chi_moment(n: u64, k: f64) -> Result<OracleValue> {
    let nf = n as f64;
    if n == 0 || !k.is_finite() {
        return Err(Error::domain("N must be positive and k finite"));
    }
    if k <= -nf {
        return Err(Error::domain(format!("chi moment requires k > -N (k={k}, N={n})")));
    }
    Ok(OracleValue::from_log(
        0.5 * k * LN_2 + ln_gamma_ratio(0.5 * (nf + k), 0.5 * nf),
    ))
}

/// `E‖f‖_q^q = C(q)^q N^{q/2}` for a real orthonormal system with `m ≡ N`.
pub fn expected_qq_norm(q: f64, n: u64) -> Result<f64> {
    require_q(q)?;
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    if q == 2.0 {
        return Ok(n as f64);
    }
    if let Some(m) = integer_abs_moment(q) {
        let root_n = (n as f64).sqrt();
        if q % 2.0 == 0.0 {
            return Ok(m * (n as f64).powi(q as i32 / 2));
        }
        return Ok(m * root_n.powi(q as i32));
    }
    Ok((q * ln_c_q(q) + 0.5 * q * (n as f64).ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    pub lower: f64,
    pub upper: f64,
    /// `P(|X| ≥ t) = erfc(t/√2)`.
    pub exact: f64,
}

/// Mills-ratio bounds around the two-sided standard normal tail.
pub fn gaussian_tail(t: f64) -> Result<TailBounds> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("tail bound requires t > 0, got {t}")));
    }
    let scale = (2.0 / PI).sqrt() * (-0.5 * t * t).exp();
    Ok(TailBounds {
        lower: scale * (1.0 / t - 1.0 / (t * t * t)),
        upper: scale / t,
        exact: statrs::function::erf::erfc(t / std::f64::consts::SQRT_2),
    })
}

/// `Γ(x+1) e^x / (√(2π) x^{x+½})`, which tends to 1.
pub fn stirling_ratio_check(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("Stirling ratio requires x > 0, got {x}")));
    }
    if x >= STIRLING_MIN {
        return Ok(stirling_correction(x).exp());
    }
    Ok((ln_gamma(x + 1.0) + x - HALF_LN_2PI - (x + 0.5) * x.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// `(1/√(2π)) ∫ |t|^q e^{-t²/2} dt` by Simpson's rule after `t = u²`.
    fn abs_moment_quadrature(q: f64) -> f64 {
        let (a, b, m) = (0.0, 4.5, 200_000usize);
        let h = (b - a) / m as f64;
        let f = |u: f64| 2.0 * u.powf(2.0 * q + 1.0) * (-0.5 * u.powi(4)).exp();
        let mut s = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        2.0 * s * h / 3.0 / (2.0 * PI).sqrt()
    }

    #[test]
    fn ln_gamma_against_statrs() {
        for &x in &[0.5, 1.0, 1.5, 2.0, 3.7, 9.99, 10.0, 10.5, 57.3, 1e3, 1e6, 5e8] {
            let ours = ln_gamma(x);
            let theirs = statrs::function::gamma::ln_gamma(x);
            assert!((ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0), "x={x}: {ours} {theirs}");
        }
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_ratio_matches_difference_for_moderate_args() {
        for &(a, b) in &[(11.5, 12.0), (50.0, 52.5), (300.25, 301.0), (3.0, 20.0)] {
            let direct = ln_gamma(a) - ln_gamma(b);
            assert!((ln_gamma_ratio(a, b) - direct).abs() < 1e-12);
        }
        // Γ(x + ½)/Γ(x) ~ √x (1 - 1/(8x))
        let x = 5e8_f64;
        let r = ln_gamma_ratio(x + 0.5, x);
        assert!((r - (0.5 * x.ln() + (-1.0 / (8.0 * x)).ln_1p())).abs() < 1e-13);
    }

    #[test]
    fn c_q_examples() {
        assert!((c_q(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((c_q(1.0).unwrap() - 0.797_884_560_8).abs() < 1e-10);
        assert!((c_q(4.0).unwrap() - 1.316_074_013_0).abs() < 1e-10);
        assert!(c_q(0.9).is_err());
        assert_eq!(c_q(2.0).unwrap(), 1.0);
        assert_eq!(expected_qq_norm(4.0, 5).unwrap(), 75.0);
    }

    #[test]
    fn product_form_matches_gamma_form() {
        for q in 1..=40 {
            let q = q as f64;
            let product = integer_abs_moment(q).unwrap();
            assert!(rel(product.ln(), q * ln_c_q(q)) < 1e-13 || (product.ln() - q * ln_c_q(q)).abs() < 1e-14, "q={q}");
        }
        assert!(integer_abs_moment(2.5).is_none());
    }

    #[test]
    fn c_q_matches_numeric_integral() {
        for q in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
            let integral = abs_moment_quadrature(q);
            let closed = c_q(q).unwrap().powf(q);
            assert!(rel(closed, integral) <= 1e-8, "q={q}: {closed} vs {integral}");
        }
    }

    #[test]
    fn moment_ratio_examples() {
        for n in [1u64, 3, 17, 1000] {
            let f = moment_ratio_factor(2, 2, n).unwrap();
            assert!(rel(f.value, 1.0 / n as f64) < 1e-13);
        }
        let f = moment_ratio_factor(1, 1, 3).unwrap();
        assert!((f.value - PI.sqrt() / (2.0 * 2f64.sqrt())).abs() < 1e-14);
        assert!((f.value - 0.626_657_068_7).abs() < 1e-10);
        let big = moment_ratio_factor(1, 1, 1_000_000).unwrap();
        let scaled = big.value * 1e3;
        assert!((0.99..=1.01).contains(&scaled), "{scaled}");
        assert!(moment_ratio_factor(1, 4, 3).is_err());
    }

    #[test]
    fn recip_factor_examples() {
        assert!((recip_moment_factor(0, 2, 5).unwrap().value - 1.0).abs() < 1e-15);
        assert!((recip_moment_factor(2, 1, 3).unwrap().value - 2.0).abs() < 1e-14);
        let big = recip_moment_factor(1, 1, 1_000_000).unwrap();
        let scaled = big.value / 1e3;
        assert!((0.99..=1.01).contains(&scaled));
        assert!(recip_moment_factor(1, 3, 3).is_err());
    }

    #[test]
    fn chi_examples() {
        for n in [1u64, 2, 33, 10_000] {
            assert!(rel(chi_moment(n, 2.0).unwrap().value, n as f64) < 1e-13);
        }
        assert!((chi_moment(3, 1.0).unwrap().value - 1.595_769_121_6).abs() < 1e-10);
        assert!((chi_moment(3, -1.0).unwrap().value - 0.797_884_560_8).abs() < 1e-10);
        assert!(chi_moment(3, -3.0).is_err());
    }

    #[test]
    fn factor_identities() {
        for n in [3u64, 11, 101, 1_000_000] {
            for k in 0..=6u32 {
                for l in 1..=6u32 {
                    if k >= 1 && (l as u64) < k as u64 + n {
                        let f = moment_ratio_factor(k, l, n).unwrap();
                        let lhs = f.ln() + chi_moment(n, k as f64).unwrap().ln();
                        let rhs = chi_moment(n, k as f64 - l as f64).unwrap().ln();
                        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
                    }
                    if (l as u64) < n {
                        let f = recip_moment_factor(k, l, n).unwrap();
                        let lhs = f.ln() + chi_moment(n, -(l as f64)).unwrap().ln();
                        let rhs = chi_moment(n, k as f64 - l as f64).unwrap().ln();
                        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn no_overflow_in_log_form() {
        let n = 1_000_000_000u64;
        for f in [
            moment_ratio_factor(6, 6, n).unwrap(),
            recip_moment_factor(6, 6, n).unwrap(),
            chi_moment(n, 6.0).unwrap(),
            chi_moment(n, 700.0).unwrap(),
        ] {
            assert!(f.log_scale.unwrap().is_finite());
        }
        let huge = chi_moment(n, 700.0).unwrap();
        assert!(huge.overflow);
    }

    #[test]
    fn expected_qq_examples() {
        assert_eq!(expected_qq_norm(2.0, 33).unwrap(), 33.0);
        assert!(rel(expected_qq_norm(4.0, 5).unwrap(), 75.0) < 1e-13);
        assert!((expected_qq_norm(1.0, 9).unwrap() - 2.393_653_682_3).abs() < 1e-9);
        assert!(expected_qq_norm(0.5, 9).is_err());
    }

    #[test]
    fn tail_examples() {
        let t2 = gaussian_tail(2.0).unwrap();
        assert!((t2.exact - 0.045_500_26).abs() < 1e-8);
        assert!(t2.lower <= t2.exact && t2.exact <= t2.upper);
        let t1 = gaussian_tail(1.0).unwrap();
        assert_eq!(t1.lower, 0.0);
        assert!((t1.exact - 0.3173).abs() < 1e-4);
        assert!((t1.upper - 0.4839).abs() < 1e-4);
        let t3 = gaussian_tail(3.0).unwrap();
        assert!((t3.exact - 0.002_699_8).abs() < 1e-7);
        assert!(t3.lower <= t3.exact && t3.exact <= t3.upper);
        assert!(gaussian_tail(0.0).is_err());
    }

    #[test]
    fn tail_bracketing_log_grid() {
        for i in 0..100 {
            let t = 1.01 * (10.0f64 / 1.01).powf(i as f64 / 99.0);
            let b = gaussian_tail(t).unwrap();
            assert!(b.lower <= b.exact && b.exact <= b.upper, "t={t}");
        }
    }

    #[test]
    fn stirling_examples() {
        let s1 = stirling_ratio_check(1.0).unwrap();
        assert!((s1 - 1.084_437_551_4).abs() < 1e-10);
        let s100 = stirling_ratio_check(100.0).unwrap();
        assert!((1.0..=1.001).contains(&s100));
        let s1e4 = stirling_ratio_check(1e4).unwrap();
        assert!((1.0..=1.00001).contains(&s1e4));
        // both branches agree near the switch
        let below = (ln_gamma(10.0 + 1.0) + 10.0 - HALF_LN_2PI - 10.5 * 10f64.ln()).exp();
        assert!(rel(stirling_ratio_check(10.0).unwrap(), below) < 1e-13);
    }
}
