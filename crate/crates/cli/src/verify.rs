//! Verification bundles run with fixed seeds.

use std::fmt;

use nikolskii_core::oracles::{chi_moment, gaussian_tail, moment_ratio_factor, recip_moment_factor, stirling_ratio_check};
use nikolskii_core::{
    derive_stream, norm, norm_l2_parseval, sample_coeffs, verify_moment_ratio_identity, verify_reciprocal_identity,
    whitening_stats, BasisSpec, GridSpec, NormMethod, NormSpec, QuadConfig, RandomSpec, Result, TrigPoly,
};
use rayon::prelude::*;

use crate::thresholds as th;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Tails,
    Quadrature,
    Whitening,
    All,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Identities => identities()?,
        Suite::Tails => tails()?,
        Suite::Quadrature => quadrature()?,
        Suite::Whitening => whitening()?,
        Suite::All => {
            let mut all = identities()?;
            all.extend(tails()?);
            all.extend(quadrature()?);
            all.extend(whitening()?);
            all
        }
    })
}

fn fin(p: f64) -> NormSpec {
    NormSpec::Finite(p)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Monte Carlo identity checks over the draws of a fixed seed.
pub fn identity_monte_carlo() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [8, 16] {
        for (q, k, l) in [(1.0, 1, 1), (4.0, 2, 2), (3.0, 1, 2)] {
            let r = verify_moment_ratio_identity(fin(q), k, l, BasisSpec::real_1d(n), th::IDENTITY_SAMPLES, th::SEED)?;
            out.push(Check::new(
                format!("moment-ratio identity q={q} k={k} l={l} n={n}"),
                r.pass,
                format!(
                    "lhs={:.6e} rhs={:.6e} |diff|={:.3e} 3se={:.3e}",
                    r.lhs,
                    r.rhs,
                    (r.lhs - r.rhs).abs(),
                    th::MC_SIGMAS * r.stderr
                ),
            ));
        }
        for (q, k, l) in [(1.0, 2, 1), (3.0, 1, 1)] {
            let r = verify_reciprocal_identity(fin(q), k, l, BasisSpec::real_1d(n), th::IDENTITY_SAMPLES, th::SEED)?;
            out.push(Check::new(
                format!("reciprocal identity q={q} k={k} l={l} n={n}"),
                r.pass,
                format!(
                    "lhs={:.6e} rhs={:.6e} |diff|={:.3e} 3se={:.3e}",
                    r.lhs,
                    r.rhs,
                    (r.lhs - r.rhs).abs(),
                    th::MC_SIGMAS * r.stderr
                ),
            ));
        }
    }
    Ok(out)
}

/// The `q = 2` case with very few draws, where both sides share every factor.
pub fn identity_q2() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, l) in [(2, 2), (3, 1), (1, 2)] {
        let r = verify_moment_ratio_identity(fin(2.0), k, l, BasisSpec::real_1d(8), th::IDENTITY_Q2_SAMPLES, th::SEED)?;
        out.push(Check::new(
            format!("moment-ratio identity q=2 k={k} l={l} ({} draws)", th::IDENTITY_Q2_SAMPLES),
            r.polar_relative_gap() <= th::IDENTITY_Q2_REL_TOL,
            format!(
                "polar relative gap {:.3e} (direct sample means differ by {:.3e})",
                r.polar_relative_gap(),
                r.relative_gap()
            ),
        ));
    }
    Ok(out)
}

/// Factor × chi moment consistency, in log form.
pub fn oracle_consistency() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [3u64, 11, 101, 1_000_000] {
        let (mut worst26, mut worst24, mut count) = (0.0f64, 0.0f64, 0usize);
        for k in 0..=6u32 {
            for l in 1..=6u32 {
                let target = |e: f64| chi_moment(n, e).map(|v| v.ln());
                if k >= 1 && (l as u64) < k as u64 + n {
                    let lhs = moment_ratio_factor(k, l, n)?.ln() + chi_moment(n, k as f64)?.ln();
                    worst26 = worst26.max((lhs - target(k as f64 - l as f64)?).exp_m1().abs());
                    count += 1;
                }
                if (l as u64) < n {
                    let lhs = recip_moment_factor(k, l, n)?.ln() + chi_moment(n, -(l as f64))?.ln();
                    worst24 = worst24.max((lhs - target(k as f64 - l as f64)?).exp_m1().abs());
                    count += 1;
                }
            }
        }
        let worst = worst26.max(worst24);
        out.push(Check::new(
            format!("chi oracle consistency N={n}"),
            worst <= th::ORACLE_REL_TOL,
            format!("{count} identities, worst relative error {worst:.3e}"),
        ));
    }
    Ok(out)
}

fn identities() -> Result<Vec<Check>> {
    let mut out = oracle_consistency()?;
    out.extend(identity_q2()?);
    out.extend(identity_monte_carlo()?);
    Ok(out)
}

pub fn tail_points() -> Vec<f64> {
    let (lo, hi) = th::TAIL_RANGE;
    (0..th::TAIL_POINTS)
        .map(|i| lo * (hi / lo).powf(i as f64 / (th::TAIL_POINTS - 1) as f64))
        .collect()
}

pub fn tail_bracketing() -> Result<Check> {
    let mut failures = Vec::new();
    for t in tail_points() {
        let b = gaussian_tail(t)?;
        if !(b.lower <= b.exact && b.exact <= b.upper) {
            failures.push(t);
        }
    }
    Ok(Check::new(
        format!("tail bracketing on {} log-spaced t in [{}, {}]", th::TAIL_POINTS, th::TAIL_RANGE.0, th::TAIL_RANGE.1),
        failures.is_empty(),
        if failures.is_empty() {
            "lower ≤ erfc ≤ upper everywhere".to_string()
        } else {
            format!("violated at t = {failures:?}")
        },
    ))
}

fn tails() -> Result<Vec<Check>> {
    let mut out = vec![tail_bracketing()?];
    let t1 = gaussian_tail(1.0)?;
    out.push(Check::new(
        "tail at t=1",
        t1.lower == 0.0 && (t1.exact - 0.3173).abs() < 1e-4 && (t1.upper - 0.4839).abs() < 1e-4,
        format!("lower={} exact={:.6} upper={:.6}", t1.lower, t1.exact, t1.upper),
    ));
    let s1 = stirling_ratio_check(1.0)?;
    let s100 = stirling_ratio_check(100.0)?;
    let s1e4 = stirling_ratio_check(1e4)?;
    out.push(Check::new(
        "stirling ratio",
        (s1 - std::f64::consts::E / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12
            && (1.0..=1.001).contains(&s100)
            && (1.0..=1.00001).contains(&s1e4),
        format!("x=1: {s1:.10}, x=100: {s100:.10}, x=1e4: {s1e4:.10}"),
    ));
    Ok(out)
}

fn random_poly(basis: BasisSpec, seed: u64, index: u64) -> TrigPoly {
    let c = sample_coeffs(&derive_stream(seed, index), basis.size(), &RandomSpec::gaussian(seed));
    TrigPoly::new(basis, c).expect("length matches")
}

fn dense_norm(poly: &TrigPoly, p: f64, points_per_axis: usize) -> Result<f64> {
    let grid = GridSpec::new(poly.dimension(), points_per_axis)?;
    let vals = poly.evaluate(&grid)?.moduli();
    let mean = vals.iter().map(|v| v.powf(p)).sum::<f64>() / vals.len() as f64;
    Ok(mean.powf(1.0 / p))
}

pub fn parseval_check() -> Result<Check> {
    let quad = QuadConfig::default();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = random_poly(BasisSpec::real_1d(16), th::SEED, i);
        let parseval = norm_l2_parseval(&p);
        let quadrature = dense_norm(&p, 2.0, quad.oversample * p.basis().axis_len())?;
        worst = worst.max(rel(quadrature, parseval));
    }
    Ok(Check::new(
        "p=2 quadrature vs Parseval",
        worst <= th::PARSEVAL_REL_TOL,
        format!("worst relative gap {worst:.3e} over 20 polynomials, n=16"),
    ))
}

pub fn even_exponent_check() -> Result<Check> {
    let quad = QuadConfig::default();
    let mut worst = 0.0f64;
    for (d, n) in [(1, 8), (1, 16), (2, 3)] {
        let basis = if d == 1 { BasisSpec::real_1d(n) } else { BasisSpec::real_tensor(d, n)? };
        for i in 0..5 {
            let poly = random_poly(basis, th::SEED + 1, i);
            for p in [4u32, 6] {
                let exact = norm(&poly, fin(p as f64), &quad)?;
                debug_assert_eq!(exact.method, NormMethod::ExactRectangle);
                let dense = dense_norm(&poly, p as f64, 64 * (2 * n + 1))?;
                worst = worst.max(rel(exact.value, dense));
            }
        }
    }
    Ok(Check::new(
        "even-p exactness at M=pn+1 vs dense grid",
        worst <= th::EVEN_P_REL_TOL,
        format!("worst relative gap {worst:.3e}, p in {{4, 6}}"),
    ))
}

pub fn sup_check() -> Result<Check> {
    let coarse = QuadConfig::default();
    let fine = QuadConfig { oversample: 256, ..coarse };
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = random_poly(BasisSpec::real_1d(8), th::SEED + 2, i);
        let a = norm(&p, NormSpec::Infinity, &coarse)?.value;
        let b = norm(&p, NormSpec::Infinity, &fine)?.value;
        worst = worst.max(rel(a, b));
    }
    Ok(Check::new(
        "sup norm oversample 16 vs 256",
        worst <= th::SUP_REL_TOL,
        format!("worst relative gap {worst:.3e} over 20 polynomials, n=8"),
    ))
}

/// Monotonicity in the exponent and the Hölder interpolation bound.
pub fn invariant_checks() -> Result<Vec<Check>> {
    let specs = [fin(1.0), fin(1.5), fin(2.0), fin(3.0), fin(4.0), NormSpec::Infinity];
    let results: Vec<(bool, bool)> = (0..th::INVARIANT_POLYS as u64)
        .into_par_iter()
        .map(|i| {
            // half one-dimensional with n ≤ 32, half two-dimensional with n ≤ 8
            let (basis, quad) = if i % 2 == 0 {
                (BasisSpec::real_1d(1 + (i as usize / 2) % 32), QuadConfig::default())
            } else {
                let cheap = QuadConfig {
                    oversample: 4,
                    max_doublings: 2,
                    ..QuadConfig::default()
                };
                (BasisSpec::real_tensor(2, 1 + (i as usize / 2) % 8)?, cheap)
            };
            let poly = random_poly(basis, th::SEED + 3, i);
            let v: Vec<f64> = specs.iter().map(|&s| norm(&poly, s, &quad).map(|n| n.value)).collect::<Result<_>>()?;
            let monotone = v.windows(2).all(|w| w[0] <= w[1] * (1.0 + th::INVARIANT_SLACK));
            let holder = v[2] * v[2] <= v[0].sqrt() * v[3].powf(1.5) * (1.0 + th::INVARIANT_SLACK);
            Ok((monotone, holder))
        })
        .collect::<Result<_>>()?;
    let bad_mono = results.iter().filter(|r| !r.0).count();
    let bad_holder = results.iter().filter(|r| !r.1).count();
    Ok(vec![
        Check::new(
            "norm monotonicity in p",
            bad_mono == 0,
            format!("{bad_mono} of {} polynomials violate", th::INVARIANT_POLYS),
        ),
        Check::new(
            "Hölder interpolation ‖T‖₂² ≤ ‖T‖₁^½‖T‖₃^{3/2}",
            bad_holder == 0,
            format!("{bad_holder} of {} polynomials violate", th::INVARIANT_POLYS),
        ),
    ])
}

fn quadrature() -> Result<Vec<Check>> {
    let mut out = vec![parseval_check()?, even_exponent_check()?, sup_check()?];
    out.extend(invariant_checks()?);
    Ok(out)
}

pub fn whitening() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (d, n) in [(1, 4), (2, 1)] {
        let basis = if d == 1 { BasisSpec::real_1d(n) } else { BasisSpec::complex(d, n)? };
        let w = whitening_stats(basis, th::WHITENING_SAMPLES, th::SEED)?;
        let bound = th::whitening_off_diag(w.samples, basis.size());
        let (lo, hi) = th::WHITENING_DIAG;
        out.push(Check::new(
            format!("whitening d={d} n={n} ({})", basis.kind()),
            w.diag_min >= lo && w.diag_max <= hi && w.max_off_diag <= bound,
            format!(
                "diag in [{:.4}, {:.4}], max off-diagonal {:.4} ≤ {:.4}",
                w.diag_min, w.diag_max, w.max_off_diag, bound
            ),
        ));
    }
    Ok(out)
}
