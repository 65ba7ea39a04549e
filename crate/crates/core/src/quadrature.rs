//! `L_p` norms on the torus with the normalized measure `dx / (2π)^d`.
//!
//! Finite exponents use the periodic rectangle rule, which is exact for
//! trigonometric integrands of per-axis degree `< M`. Even integer `p` makes
//! `|T|^p` a trigonometric polynomial of degree `p·n`, so `M = p·n + 1`
//! nodes integrate it exactly. Other exponents refine the grid by doubling.
//! The sup norm is a dense grid maximum polished by golden-section search.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{GridSpec, TrigPoly};
use crate::summation::CompensatedSum;

/// Lebesgue exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    Finite(f64),
    Infinity,
}

impl NormSpec {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(NormSpec::Finite(p))
        } else if p == f64::INFINITY {
            Ok(NormSpec::Infinity)
        } else {
            Err(Error::domain(format!("exponent must satisfy p ≥ 1, got {p}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, NormSpec::Infinity)
    }

    /// The exponent as an `f64` (`+∞` for the sup norm).
    pub fn exponent(&self) -> f64 {
        match *self {
            NormSpec::Finite(p) => p,
            NormSpec::Infinity => f64::INFINITY,
        }
    }

    /// `Some(p)` when `p` is an even integer.
    pub fn even_integer(&self) -> Option<u32> {
        match *self {
            NormSpec::Finite(p) if p == p.round() && p <= u32::MAX as f64 => {
                let k = p as u32;
                k.is_multiple_of(2).then_some(k)
            }
            _ => None,
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Finite(p) => write!(f, "{p}"),
            NormSpec::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(NormSpec::Infinity);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::domain(format!("cannot parse exponent `{s}`")))?;
        NormSpec::finite(p)
    }
}

impl Serialize for NormSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormSpec::Finite(p) => s.serialize_f64(*p),
            NormSpec::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Num(p) => NormSpec::finite(p),
            Repr::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Accuracy controls for the rectangle rule and sup-norm search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Nodes per axis as a multiple of `2n + 1`.
    pub oversample: usize,
    pub rel_tol: f64,
    pub max_doublings: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            oversample: 16,
            rel_tol: 1e-9,
            max_doublings: 6,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oversample == 0 {
            return Err(Error::domain("oversample must be at least 1"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::domain("rel_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    Parseval,
    ExactRectangle,
    AdaptiveRectangle,
    GridMaxRefined,
}

/// A computed norm with its a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// Relative; for adaptive rules the last observed relative change, which
    /// exceeds `rel_tol` when the doubling budget ran out.
    pub error_estimate: f64,
    pub method: NormMethod,
}

/// `‖T‖_p` with respect to the normalized measure on `T^d`.
pub fn norm(poly: &TrigPoly, spec: NormSpec, cfg: &QuadConfig) -> Result<NormValue> {
    cfg.validate()?;
    if poly.is_constant() {
        let method = match spec {
            NormSpec::Infinity => NormMethod::GridMaxRefined,
            NormSpec::Finite(p) if p == 2.0 => NormMethod::Parseval,
            NormSpec::Finite(_) => NormMethod::ExactRectangle,
        };
        return Ok(NormValue {
            value: poly.coeffs()[0].abs(),
            error_estimate: 0.0,
            method,
        });
    }
    match spec {
        NormSpec::Infinity => Ok(sup_norm_unchecked(poly, cfg)),
        NormSpec::Finite(p) if p == 2.0 => Ok(NormValue {
            value: norm_l2_parseval(poly),
            error_estimate: 0.0,
            method: NormMethod::Parseval,
        }),
        NormSpec::Finite(p) => match spec.even_integer() {
            Some(k) => Ok(exact_even(poly, k)),
            None => Ok(adaptive(poly, p, cfg)),
        },
    }
}

/// Euclidean norm of the coefficients, equal to `‖T‖_2` for orthonormal bases.
pub fn norm_l2_parseval(poly: &TrigPoly) -> f64 {
    let scale = poly.coeffs().iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::default();
    for a in poly.coeffs() {
        let r = a / scale;
        acc.add(r * r);
    }
    scale * acc.value().sqrt()
}

fn power(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == p.round() && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

fn root(mean: f64, p: f64) -> f64 {
    if p == 1.0 {
        mean
    } else if p == 2.0 {
        mean.sqrt()
    } else if p == 3.0 {
        mean.cbrt()
    } else {
        mean.powf(1.0 / p)
    }
}

fn accumulate(acc: &mut CompensatedSum, poly: &TrigPoly, grid: &GridSpec, p: f64) {
    let vals = poly.evaluate(grid).expect("grid dimension matches polynomial");
    for v in vals.moduli() {
        acc.add(power(v, p));
    }
}

fn exact_even(poly: &TrigPoly, p: u32) -> NormValue {
    let m = p as usize * poly.degree() + 1;
    let grid = GridSpec::new(poly.dimension(), m).expect("valid grid");
    let mut acc = CompensatedSum::default();
    accumulate(&mut acc, poly, &grid, p as f64);
    NormValue {
        value: root(acc.value() / grid.len() as f64, p as f64),
        error_estimate: 0.0,
        method: NormMethod::ExactRectangle,
    }
}

/// Fraction of a cell by which adaptive grids are shifted: the root of
/// `B₂(θ) = θ² − θ + 1/6`. Kinks of `|T|^p` at zeros contribute an `h²·B₂(θ)`
/// term to the rectangle-rule error, where θ is the zero's position within its
/// cell. Zeros of structured polynomials (kernels) sit on rational points and
/// would otherwise share the grid's phase.
const KINK_SHIFT: f64 = 0.211_324_865_405_187_1;

fn shifted_grid(d: usize, m: usize) -> GridSpec {
    GridSpec::with_offset(d, m, KINK_SHIFT * 2.0 * PI / m as f64).expect("valid grid")
}

fn mean_pow(poly: &TrigPoly, grid: &GridSpec, p: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    accumulate(&mut acc, poly, grid, p);
    acc.value() / grid.len() as f64
}

fn adaptive(poly: &TrigPoly, p: f64, cfg: &QuadConfig) -> NormValue {
    let d = poly.dimension();
    let mut m = cfg.oversample * poly.basis().axis_len();
    let mut value = root(mean_pow(poly, &shifted_grid(d, m), p), p);

    if cfg.max_doublings == 0 {
        // no refinement budget: compare against the half-resolution grid
        let coarse = if m >= 2 {
            root(mean_pow(poly, &shifted_grid(d, m / 2), p), p)
        } else {
            value
        };
        return NormValue {
            value,
            error_estimate: relative_change(value, coarse),
            method: NormMethod::AdaptiveRectangle,
        };
    }

    let mut change = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        m *= 2;
        let next = root(mean_pow(poly, &shifted_grid(d, m), p), p);
        change = relative_change(next, value);
        value = next;
        if change < cfg.rel_tol {
            break;
        }
    }
    NormValue {
        value,
        error_estimate: change,
        method: NormMethod::AdaptiveRectangle,
    }
}

fn relative_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        ((new - old) / new).abs()
    }
}

const SUP_MIN_POINTS: usize = 64;
const SUP_CANDIDATES: usize = 8;
const GOLDEN_TOL: f64 = 1e-12;

/// `‖T‖_∞`: grid maximum on `max(oversample·(2n+1), 64)` nodes per axis,
/// refined around the largest grid-local maxima.
pub fn sup_norm(poly: &TrigPoly, cfg: &QuadConfig) -> Result<NormValue> {
    cfg.validate()?;
    if poly.is_constant() {
        return Ok(NormValue {
            value: poly.coeffs()[0].abs(),
            error_estimate: 0.0,
            method: NormMethod::GridMaxRefined,
        });
    }
    Ok(sup_norm_unchecked(poly, cfg))
}

fn sup_norm_unchecked(poly: &TrigPoly, cfg: &QuadConfig) -> NormValue {
    let d = poly.dimension();
    let m = (cfg.oversample * poly.basis().axis_len()).max(SUP_MIN_POINTS);
    let grid = GridSpec::new(d, m).expect("valid grid");
    let moduli = poly.evaluate(&grid).expect("grid dimension matches").moduli();
    let grid_max = moduli.iter().copied().fold(0.0, f64::max);

    let mut candidates = local_maxima(&moduli, m, d);
    candidates.sort_by(|&a, &b| moduli[b].total_cmp(&moduli[a]).then(a.cmp(&b)));
    candidates.truncate(SUP_CANDIDATES);

    let h = grid.spacing();
    let mut best = grid_max;
    for flat in candidates {
        let start = grid.point(flat);
        best = best.max(polish(poly, start, moduli[flat], h));
    }
    NormValue {
        value: best,
        error_estimate: if best > 0.0 { (best - grid_max) / best } else { 0.0 },
        method: NormMethod::GridMaxRefined,
    }
}

fn local_maxima(values: &[f64], m: usize, d: usize) -> Vec<usize> {
    let strides: Vec<usize> = (0..d).map(|a| m.pow((d - 1 - a) as u32)).collect();
    (0..values.len())
        .filter(|&flat| {
            let v = values[flat];
            strides.iter().all(|&s| {
                let j = (flat / s) % m;
                let base = flat - j * s;
                let up = base + ((j + 1) % m) * s;
                let down = base + ((j + m - 1) % m) * s;
                v >= values[up] && v >= values[down]
            })
        })
        .collect()
}

/// Coordinate-wise golden-section ascent of `|T|` inside `[x - h, x + h]^d`.
fn polish(poly: &TrigPoly, mut point: Vec<f64>, mut value: f64, h: f64) -> f64 {
    let d = point.len();
    let sweeps = if d == 1 { 1 } else { 40 };
    for _ in 0..sweeps {
        let before = value;
        for axis in 0..d {
            let centre = point[axis];
            let mut probe = point.clone();
            let mut f = |x: f64| {
                probe[axis] = x;
                poly.value_at_unchecked(&probe).norm()
            };
            let (x, fx) = golden_max(&mut f, centre - h, centre + h);
            if fx > value {
                value = fx;
                point[axis] = x;
            }
        }
        if value - before <= 1e-15 * value {
            break;
        }
    }
    value
}

fn golden_max(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut e = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + INV_PHI * (b - a);
            fe = f(e);
        }
    }
    if fc > fe {
        (c, fc)
    } else {
        (e, fe)
    }
}
