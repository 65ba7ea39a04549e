//! Monte Carlo estimation of expectations over random polynomials.
//!
//! Sample `i` is drawn from `derive_stream(seed, i)`. Samples may be
//! evaluated on any number of rayon workers; per-sample statistics are
//! collected in index order and reduced sequentially with compensated sums,
//! so an estimate is bitwise independent of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{chi_moment, moment_ratio_factor, recip_moment_factor};
use crate::poly::{BasisSpec, TrigPoly};
use crate::quadrature::{norm, NormSpec, QuadConfig};
use crate::sampling::{derive_stream, sample_coeffs, Law, RandomSpec};
use crate::summation::{compensated_mean, CompensatedSum};

/// Norms below this are treated as a degenerate draw and rejected.
pub const DEGENERATE_NORM: f64 = 1e-300;

const Z95: f64 = 1.96;

/// Per-sample quantity whose expectation is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Statistic {
    /// `‖T‖_q / ‖T‖_p`.
    Nikolskii { p: NormSpec, q: NormSpec },
    /// `‖T‖_q^k / ‖T‖_2^l`.
    MomentRatio { q: NormSpec, k: u32, l: u32 },
    /// `‖T‖_q^s`.
    NormMoment { q: NormSpec, s: f64 },
    /// `‖T‖_∞^{-r}`.
    RecipSupMoment { r: f64 },
}

impl Statistic {
    pub fn nikolskii(p: NormSpec, q: NormSpec) -> Self {
        Statistic::Nikolskii { p, q }
    }

    /// Short machine-readable name, e.g. `moment_ratio:k=2:l=2`.
    pub fn label(&self) -> String {
        match self {
            Statistic::Nikolskii { .. } => "nikolskii".into(),
            Statistic::MomentRatio { k, l, .. } => format!("moment_ratio:k={k}:l={l}"),
            Statistic::NormMoment { s, .. } => format!("norm_moment:s={s}"),
            Statistic::RecipSupMoment { r } => format!("recip_sup_moment:r={r}"),
        }
    }

    /// `(p, q)` columns: the denominator and numerator norms, when present.
    pub fn exponents(&self) -> (Option<NormSpec>, Option<NormSpec>) {
        match *self {
            Statistic::Nikolskii { p, q } => (Some(p), Some(q)),
            Statistic::MomentRatio { q, .. } => (Some(NormSpec::Finite(2.0)), Some(q)),
            Statistic::NormMoment { q, .. } => (None, Some(q)),
            Statistic::RecipSupMoment { .. } => (Some(NormSpec::Infinity), None),
        }
    }

    fn validate(&self, basis_size: usize) -> Result<()> {
        match *self {
            Statistic::MomentRatio { k, l, .. } if l as u64 >= k as u64 + basis_size as u64 => {
                Err(Error::domain(format!(
                    "moment_ratio requires l < k + N (k={k}, l={l}, N={basis_size})"
                )))
            }
            Statistic::NormMoment { s, .. } if !s.is_finite() => {
                Err(Error::domain("norm_moment exponent s must be finite"))
            }
            Statistic::RecipSupMoment { r } if !(r.is_finite() && r > 0.0) => {
                Err(Error::domain(format!("recip_sup_moment requires r > 0, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Value on one polynomial; `None` when a required norm is degenerate.
    pub fn evaluate(&self, poly: &TrigPoly, quad: &QuadConfig) -> Result<Option<f64>> {
        let nrm = |spec: NormSpec| norm(poly, spec, quad).map(|v| v.value);
        let ok = |x: f64| x >= DEGENERATE_NORM;
        Ok(match *self {
            Statistic::Nikolskii { p, q } => {
                let np = nrm(p)?;
                let nq = if p == q { np } else { nrm(q)? };
                (ok(np) && ok(nq)).then(|| nq / np)
            }
            Statistic::MomentRatio { q, k, l } => {
                let n2 = nrm(NormSpec::Finite(2.0))?;
                let nq = if q == NormSpec::Finite(2.0) { n2 } else { nrm(q)? };
                (ok(n2) && ok(nq)).then(|| nq.powi(k as i32) / n2.powi(l as i32))
            }
            Statistic::NormMoment { q, s } => {
                let nq = nrm(q)?;
                ok(nq).then(|| pow_real(nq, s))
            }
            Statistic::RecipSupMoment { r } => {
                let sup = nrm(NormSpec::Infinity)?;
                ok(sup).then(|| 1.0 / pow_real(sup, r))
            }
        })
    }
}

fn pow_real(x: f64, s: f64) -> f64 {
    if s == s.round() && s.abs() <= 64.0 {
        x.powi(s as i32)
    } else {
        x.powf(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorTask {
    pub basis: BasisSpec,
    pub random: RandomSpec,
    pub statistic: Statistic,
    pub samples: usize,
    #[serde(default)]
    pub quad: QuadConfig,
}

impl EstimatorTask {
    pub fn new(basis: BasisSpec, random: RandomSpec, statistic: Statistic, samples: usize) -> Self {
        EstimatorTask {
            basis,
            random,
            statistic,
            samples,
            quad: QuadConfig::default(),
        }
    }

    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::domain("at least two samples are required"));
        }
        self.quad.validate()?;
        self.statistic.validate(self.basis.size())
    }

    /// Polynomial of sample `index`.
    pub fn draw(&self, index: u64) -> TrigPoly {
        let coeffs = sample_coeffs(
            &derive_stream(self.random.seed(), index),
            self.basis.size(),
            &self.random,
        );
        TrigPoly::new(self.basis, coeffs).expect("sampled length matches basis")
    }
}

/// Monte Carlo mean with its normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub samples: usize,
    pub seed: u64,
    pub rejected: usize,
}

impl MCEstimate {
    /// Aggregates per-sample values (`None` = rejected) in index order.
    pub fn from_values(values: &[Option<f64>], seed: u64) -> Result<Self> {
        let accepted: Vec<f64> = values.iter().flatten().copied().collect();
        let rejected = values.len() - accepted.len();
        if accepted.len() < 2 {
            return Err(Error::Degenerate(format!(
                "{rejected} of {} samples rejected; fewer than two usable draws",
                values.len()
            )));
        }
        let (mean, stderr) = mean_and_stderr(&accepted);
        Ok(MCEstimate {
            mean,
            stderr,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
            samples: values.len(),
            seed,
            rejected,
        })
    }

    pub fn accepted(&self) -> usize {
        self.samples - self.rejected
    }
}

/// Compensated two-pass mean and standard error of the mean.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_mean(values.iter().copied());
    let mut acc = CompensatedSum::default();
    for &v in values {
        let dev = v - mean;
        acc.add(dev * dev);
    }
    let var = acc.value() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-sample statistic values in sample-index order.
pub fn sample_values(task: &EstimatorTask) -> Result<Vec<Option<f64>>> {
    task.validate()?;
    (0..task.samples as u64)
        .into_par_iter()
        .map(|i| task.statistic.evaluate(&task.draw(i), &task.quad))
        .collect()
}

pub fn run_estimator(task: &EstimatorTask) -> Result<MCEstimate> {
    let values = sample_values(task)?;
    MCEstimate::from_values(&values, task.random.seed())
}

/// Which Gamma-ratio identity a paired check exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `E(‖T‖_q^k / ‖T‖_2^l) = moment_ratio_factor(k, l, N) · E‖T‖_q^k`.
    MomentRatio,
    /// `E(‖T‖_2^k / ‖T‖_q^l) = recip_moment_factor(k, l, N) · E‖T‖_q^{-l}`.
    Reciprocal,
}

/// Both sides of an identity estimated on common draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub q: NormSpec,
    pub k: u32,
    pub l: u32,
    pub basis_size: usize,
    pub samples: usize,
    pub factor: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of the paired difference `lhs - rhs`.
    pub stderr: f64,
    /// `|lhs - rhs| ≤ 3 · stderr`.
    pub pass: bool,
    /// Both sides through the split `T = |a|_2 · T_ξ` with `‖T_ξ‖_2 = 1`:
    /// the radial moments are exact chi moments and only the angular mean
    /// of `ρ = ‖T‖_q / ‖T‖_2` is sampled.
    pub polar_lhs: f64,
    pub polar_rhs: f64,
}

impl IdentityReport {
    pub fn relative_gap(&self) -> f64 {
        ((self.lhs - self.rhs) / self.rhs).abs()
    }

    pub fn polar_relative_gap(&self) -> f64 {
        ((self.polar_lhs - self.polar_rhs) / self.polar_rhs).abs()
    }
}

pub fn verify_moment_ratio_identity(
    q: NormSpec,
    k: u32,
    l: u32,
    basis: BasisSpec,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    verify_identity(Identity::MomentRatio, q, k, l, basis, samples, seed, &QuadConfig::default())
}

pub fn verify_reciprocal_identity(
    q: NormSpec,
    k: u32,
    l: u32,
    basis: BasisSpec,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    verify_identity(Identity::Reciprocal, q, k, l, basis, samples, seed, &QuadConfig::default())
}

#[allow(clippy::too_many_arguments)]
pub fn verify_identity(
    identity: Identity,
    q: NormSpec,
    k: u32,
    l: u32,
    basis: BasisSpec,
    samples: usize,
    seed: u64,
    quad: &QuadConfig,
) -> Result<IdentityReport> {
    if q.is_infinite() {
        return Err(Error::domain("identity check needs a finite q"));
    }
    if samples < 2 {
        return Err(Error::domain("at least two samples are required"));
    }
    quad.validate()?;
    let big_n = basis.size() as u64;
    let (kf, lf) = (k as f64, l as f64);
    // (factor, radial exponent of lhs, radial exponent of rhs)
    let (factor, lhs_radial, rhs_radial) = match identity {
        Identity::MomentRatio => (moment_ratio_factor(k, l, big_n)?.value, kf - lf, kf),
        Identity::Reciprocal => (recip_moment_factor(k, l, big_n)?.value, kf - lf, -lf),
    };
    let task = EstimatorTask::new(basis, RandomSpec::gaussian(seed), Statistic::nikolskii(q, q), samples)
        .with_quad(*quad);

    // (‖T‖_q, ‖T‖_2) per draw, computed once and shared by both sides
    let pairs: Vec<Option<(f64, f64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let poly = task.draw(i);
            let n2 = norm(&poly, NormSpec::Finite(2.0), quad)?.value;
            let nq = if q == NormSpec::Finite(2.0) { n2 } else { norm(&poly, q, quad)?.value };
            Ok((n2 >= DEGENERATE_NORM && nq >= DEGENERATE_NORM).then_some((nq, n2)))
        })
        .collect::<Result<_>>()?;
    let usable: Vec<(f64, f64)> = pairs.into_iter().flatten().collect();
    if usable.len() < 2 {
        return Err(Error::Degenerate("fewer than two usable draws".into()));
    }

    let (ki, li) = (k as i32, l as i32);
    let (left, right): (Vec<f64>, Vec<f64>) = usable
        .iter()
        .map(|&(a, b)| match identity {
            Identity::MomentRatio => (a.powi(ki) / b.powi(li), factor * a.powi(ki)),
            Identity::Reciprocal => (b.powi(ki) / a.powi(li), factor / a.powi(li)),
        })
        .unzip();
    let diffs: Vec<f64> = left.iter().zip(&right).map(|(x, y)| x - y).collect();
    let lhs = compensated_mean(left.iter().copied());
    let rhs = compensated_mean(right.iter().copied());
    let (_, stderr) = mean_and_stderr(&diffs);

    let angular_power = match identity {
        Identity::MomentRatio => ki,
        Identity::Reciprocal => -li,
    };
    let angular = compensated_mean(usable.iter().map(|&(a, b)| (a / b).powi(angular_power)));
    let polar_lhs = chi_moment(big_n, lhs_radial)?.value * angular;
    let polar_rhs = factor * chi_moment(big_n, rhs_radial)?.value * angular;

    Ok(IdentityReport {
        identity,
        q,
        k,
        l,
        basis_size: big_n as usize,
        samples,
        factor,
        lhs,
        rhs,
        stderr,
        pass: (lhs - rhs).abs() <= 3.0 * stderr,
        polar_lhs,
        polar_rhs,
    })
}

/// Per-sample comparison of the Nikolskii ratio across coefficient scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub sigmas: Vec<f64>,
    pub estimates: Vec<MCEstimate>,
    /// Largest relative per-sample deviation from the first sigma.
    pub max_rel_deviation: f64,
    pub bitwise_identical: bool,
    pub pass: bool,
}

/// Per-sample agreement required of the scale-invariance check.
pub const SIGMA_TOLERANCE: f64 = 1e-12;

pub fn verify_sigma_invariance(
    p: NormSpec,
    q: NormSpec,
    basis: BasisSpec,
    sigmas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SigmaReport> {
    if sigmas.is_empty() {
        return Err(Error::domain("at least one sigma is required"));
    }
    let runs: Vec<Vec<Option<f64>>> = sigmas
        .iter()
        .map(|&sigma| {
            let random = RandomSpec::new(Law::Gaussian, sigma, seed)?;
            sample_values(&EstimatorTask::new(basis, random, Statistic::nikolskii(p, q), samples))
        })
        .collect::<Result<_>>()?;
    let estimates = runs
        .iter()
        .map(|v| MCEstimate::from_values(v, seed))
        .collect::<Result<Vec<_>>>()?;

    let reference = &runs[0];
    let mut max_rel: f64 = 0.0;
    let mut bitwise = true;
    for run in &runs[1..] {
        for (a, b) in reference.iter().zip(run) {
            match (a, b) {
                (Some(x), Some(y)) => {
                    bitwise &= x.to_bits() == y.to_bits();
                    max_rel = max_rel.max(((x - y) / x).abs());
                }
                (None, None) => {}
                _ => {
                    bitwise = false;
                    max_rel = f64::INFINITY;
                }
            }
        }
    }
    Ok(SigmaReport {
        sigmas: sigmas.to_vec(),
        estimates,
        max_rel_deviation: max_rel,
        bitwise_identical: bitwise,
        pass: max_rel <= SIGMA_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nik(p: f64, q: f64) -> Statistic {
        let s = |x: f64| if x.is_infinite() { NormSpec::Infinity } else { NormSpec::Finite(x) };
        Statistic::nikolskii(s(p), s(q))
    }

    #[test]
    fn equal_exponents_give_exactly_one() {
        let task = EstimatorTask::new(BasisSpec::real_1d(5), RandomSpec::gaussian(3), nik(3.0, 3.0), 100);
        let est = run_estimator(&task).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.ci95, (1.0, 1.0));
    }

    #[test]
    fn constants_have_unit_factor() {
        let task = EstimatorTask::new(BasisSpec::real_1d(0), RandomSpec::gaussian(3), nik(1.0, f64::INFINITY), 50);
        let est = run_estimator(&task).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn validation_errors() {
        let b = BasisSpec::real_1d(1);
        let one = EstimatorTask::new(b, RandomSpec::gaussian(1), nik(1.0, 2.0), 1);
        assert!(matches!(run_estimator(&one), Err(Error::Domain(_))));
        let bad = EstimatorTask::new(
            b,
            RandomSpec::gaussian(1),
            Statistic::MomentRatio { q: NormSpec::Finite(2.0), k: 1, l: 4 },
            10,
        );
        assert!(matches!(run_estimator(&bad), Err(Error::Domain(_))));
        let r = EstimatorTask::new(b, RandomSpec::gaussian(1), Statistic::RecipSupMoment { r: 0.0 }, 10);
        assert!(run_estimator(&r).is_err());
    }

    #[test]
    fn all_rejected_is_degenerate() {
        let values = vec![None; 10];
        assert!(matches!(MCEstimate::from_values(&values, 0), Err(Error::Degenerate(_))));
        let est = MCEstimate::from_values(&[Some(1.0), None, Some(3.0)], 7).unwrap();
        assert_eq!(est.rejected, 1);
        assert_eq!(est.samples, 3);
        assert_eq!(est.mean, 2.0);
        assert!((est.stderr - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ci_is_symmetric() {
        let est = MCEstimate::from_values(&[Some(1.0), Some(2.0), Some(4.0)], 0).unwrap();
        assert!((est.ci95.0 - (est.mean - 1.96 * est.stderr)).abs() < 1e-15);
        assert!((est.ci95.1 - (est.mean + 1.96 * est.stderr)).abs() < 1e-15);
    }

    #[test]
    fn q2_identity_is_exact_through_polar_split() {
        let r = verify_moment_ratio_identity(NormSpec::Finite(2.0), 3, 2, BasisSpec::real_1d(4), 10, 11).unwrap();
        assert!(r.polar_relative_gap() <= 1e-10, "{}", r.polar_relative_gap());
        let r = verify_reciprocal_identity(NormSpec::Finite(2.0), 3, 2, BasisSpec::real_1d(4), 10, 11).unwrap();
        assert!(r.polar_relative_gap() <= 1e-10, "{}", r.polar_relative_gap());
    }

    #[test]
    fn identity_requires_finite_q() {
        assert!(verify_moment_ratio_identity(NormSpec::Infinity, 1, 1, BasisSpec::real_1d(2), 10, 0).is_err());
        assert!(verify_moment_ratio_identity(NormSpec::Finite(3.0), 1, 9, BasisSpec::real_1d(2), 10, 0).is_err());
        assert!(verify_reciprocal_identity(NormSpec::Finite(3.0), 1, 5, BasisSpec::real_1d(2), 10, 0).is_err());
    }

    #[test]
    fn sigma_invariance_small() {
        let r = verify_sigma_invariance(
            NormSpec::Finite(1.0),
            NormSpec::Finite(3.0),
            BasisSpec::real_1d(8),
            &[1.0, 5.0, 0.001],
            200,
            4,
        )
        .unwrap();
        assert!(r.pass, "max deviation {}", r.max_rel_deviation);
        for e in &r.estimates[1..] {
            assert!(((e.mean - r.estimates[0].mean) / e.mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn statistic_serde() {
        let s = Statistic::Nikolskii { p: NormSpec::Finite(2.0), q: NormSpec::Infinity };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"nikolskii":{"p":2.0,"q":"inf"}}"#);
        assert_eq!(serde_json::from_str::<Statistic>(&j).unwrap(), s);
        assert!(serde_json::from_str::<Statistic>(r#"{"nikolskii":{"p":1,"q":2,"x":3}}"#).is_err());
    }
}
