//! Degree and dimension sweeps, log-log slopes and worst-case probes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{run_estimator, EstimatorTask, MCEstimate, Statistic};
use crate::poly::fejer_poly;
use crate::poly::{BasisKind, BasisSpec};
use crate::quadrature::{norm, NormSpec, QuadConfig};
use crate::sampling::{Law, RandomSpec};

/// Function of `N` that sweep means are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub enum Normalizer {
    #[serde(rename = "one")]
    #[default]
    One,
    #[serde(rename = "sqrt_log_N", alias = "sqrt_log_n")]
    SqrtLogN,
    #[serde(rename = "inv_sqrt_log_N", alias = "inv_sqrt_log_n")]
    InvSqrtLogN,
    /// `N^α`.
    #[serde(rename = "N_pow", alias = "n_pow")]
    NPow(f64),
    /// `(N ln N)^α`.
    #[serde(rename = "N_log_N_pow", alias = "n_log_n_pow")]
    NLogNPow(f64),
}


impl Normalizer {
    pub fn at(&self, big_n: usize) -> f64 {
        let n = big_n as f64;
        match *self {
            Normalizer::One => 1.0,
            Normalizer::SqrtLogN => n.ln().sqrt(),
            Normalizer::InvSqrtLogN => 1.0 / n.ln().sqrt(),
            Normalizer::NPow(a) => n.powf(a),
            Normalizer::NLogNPow(a) => (n * n.ln()).powf(a),
        }
    }
}

fn default_dimensions() -> Vec<usize> {
    vec![1]
}

fn default_basis() -> BasisKind {
    BasisKind::Real1d
}

fn default_law() -> Law {
    Law::Gaussian
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub statistic: Statistic,
    #[serde(default = "default_basis")]
    pub basis: BasisKind,
    pub degrees: Vec<usize>,
    #[serde(default = "default_dimensions")]
    pub dimensions: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub normalizer: Normalizer,
    #[serde(default = "default_law")]
    pub law: Law,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub quad: QuadConfig,
}

impl SweepPlan {
    pub fn new(statistic: Statistic, degrees: Vec<usize>, samples: usize, seed: u64) -> Self {
        SweepPlan {
            statistic,
            basis: BasisKind::Real1d,
            degrees,
            dimensions: vec![1],
            samples,
            seed,
            normalizer: Normalizer::One,
            law: Law::Gaussian,
            sigma: 1.0,
            quad: QuadConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degrees.len() < 3 {
            return Err(Error::domain("≥3 degrees required for slope"));
        }
        if self.degrees.windows(2).any(|w| w[0] >= w[1]) || self.degrees[0] == 0 {
            return Err(Error::domain("degrees must be ascending positive integers"));
        }
        if self.dimensions.is_empty() || self.dimensions.contains(&0) {
            return Err(Error::domain("dimensions must be positive"));
        }
        if self.basis == BasisKind::Real1d && self.dimensions.iter().any(|&d| d != 1) {
            return Err(Error::domain("real-1d basis only supports d = 1"));
        }
        RandomSpec::new(self.law, self.sigma, self.seed)?;
        self.quad.validate()
    }

    fn points(&self) -> Vec<(usize, usize)> {
        self.dimensions
            .iter()
            .flat_map(|&d| self.degrees.iter().map(move |&n| (d, n)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub normalized_mean: f64,
    pub estimate: MCEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub max: f64,
    pub min: f64,
    pub ratio: f64,
}

impl BandReport {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
        for v in values {
            max = max.max(v);
            min = min.min(v);
        }
        BandReport { max, min, ratio: max / min }
    }
}

/// Ordinary least squares fit of `ln y` against `ln N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

impl SlopeReport {
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("≥3 degrees required for slope"));
        }
        if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
            return Err(Error::domain("log-log fit needs positive values"));
        }
        let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
        let k = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return Err(Error::domain("log-log fit needs distinct N"));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        Ok(SlopeReport {
            slope,
            intercept,
            residual: (ss / k).sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub rows: Vec<SweepRow>,
    pub band: BandReport,
    /// Slope of the raw means.
    pub slope: SlopeReport,
    /// Slope of the normalized means.
    pub normalized_slope: SlopeReport,
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let random = RandomSpec::new(plan.law, plan.sigma, plan.seed)?;
    let mut rows: Vec<SweepRow> = plan
        .points()
        .into_par_iter()
        .map(|(d, n)| {
            let at = |source: Error| Error::AtPoint { d, n, source: Box::new(source) };
            let basis = BasisSpec::new(plan.basis, d, n).map_err(at)?;
            let task = EstimatorTask::new(basis, random, plan.statistic, plan.samples).with_quad(plan.quad);
            let estimate = run_estimator(&task).map_err(at)?;
            let big_n = basis.size();
            Ok(SweepRow {
                d,
                n,
                big_n,
                normalized_mean: estimate.mean / plan.normalizer.at(big_n),
                estimate,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.big_n, r.d, r.n));

    let band = BandReport::of(rows.iter().map(|r| r.normalized_mean));
    let raw: Vec<(f64, f64)> = rows.iter().map(|r| (r.big_n as f64, r.estimate.mean)).collect();
    let normalized: Vec<(f64, f64)> = rows.iter().map(|r| (r.big_n as f64, r.normalized_mean)).collect();
    Ok(SweepResult {
        plan: plan.clone(),
        band,
        slope: SlopeReport::fit(&raw)?,
        normalized_slope: SlopeReport::fit(&normalized)?,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub factor: f64,
}

/// Nikolskii factors of the Fejér kernel across degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub p: NormSpec,
    pub q: NormSpec,
    pub rows: Vec<ProbeRow>,
    /// `None` with fewer than two degrees.
    pub slope: Option<SlopeReport>,
}

impl ProbeTable {
    pub fn factor_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.factor)
    }
}

pub fn worst_case_probe(p: NormSpec, q: NormSpec, degrees: &[usize]) -> Result<ProbeTable> {
    worst_case_probe_with(p, q, degrees, &QuadConfig::default())
}

pub fn worst_case_probe_with(p: NormSpec, q: NormSpec, degrees: &[usize], quad: &QuadConfig) -> Result<ProbeTable> {
    let rows = degrees
        .par_iter()
        .map(|&n| {
            let fejer = fejer_poly(n);
            let np = norm(&fejer, p, quad)?.value;
            let nq = norm(&fejer, q, quad)?.value;
            Ok(ProbeRow {
                n,
                big_n: 2 * n + 1,
                factor: nq / np,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.big_n as f64, r.factor)).collect();
    let slope = if pts.len() >= 2 { Some(SlopeReport::fit(&pts)?) } else { None };
    Ok(ProbeTable { p, q, rows, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMatchReport {
    #[serde(rename = "N")]
    pub big_n: usize,
    pub rows: Vec<SweepRow>,
    pub band: BandReport,
}

/// All `(d, n)` with `(2n+1)^d = big_n`, in increasing `d`.
pub fn factorizations(big_n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if big_n < 3 || big_n.is_multiple_of(2) {
        return out;
    }
    for d in 1.. {
        if 3usize.checked_pow(d as u32).is_none_or(|m| m > big_n) {
            break;
        }
        let root = (big_n as f64).powf(1.0 / d as f64).round() as usize;
        for axis in [root.saturating_sub(1), root, root + 1] {
            if axis >= 3 && axis % 2 == 1 && axis.checked_pow(d as u32) == Some(big_n) {
                out.push((d, (axis - 1) / 2));
            }
        }
    }
    out
}

pub fn dimension_match(
    statistic: Statistic,
    big_n: usize,
    samples: usize,
    seed: u64,
    kind: BasisKind,
    quad: &QuadConfig,
) -> Result<DimensionMatchReport> {
    let points = factorizations(big_n);
    if points.len() < 2 {
        return Err(Error::domain(format!(
            "N = {big_n} is not (2n+1)^d for two or more dimensions"
        )));
    }
    if kind == BasisKind::Real1d {
        return Err(Error::domain("dimension matching needs a tensor or complex basis"));
    }
    let random = RandomSpec::gaussian(seed);
    let rows = points
        .into_par_iter()
        .map(|(d, n)| {
            let at = |source: Error| Error::AtPoint { d, n, source: Box::new(source) };
            let basis = BasisSpec::new(kind, d, n).map_err(at)?;
            let task = EstimatorTask::new(basis, random, statistic, samples).with_quad(*quad);
            let estimate = run_estimator(&task).map_err(at)?;
            Ok(SweepRow {
                d,
                n,
                big_n,
                normalized_mean: estimate.mean,
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DimensionMatchReport {
        big_n,
        band: BandReport::of(rows.iter().map(|r| r.estimate.mean)),
        rows,
    })
}
