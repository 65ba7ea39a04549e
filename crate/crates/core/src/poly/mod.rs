//! Trigonometric polynomials on the torus `T^d = [0, 2π)^d`.
//!
//! Every basis here is orthonormal for the normalized Lebesgue measure
//! `dx / (2π)^d`, so the coefficient vector's Euclidean norm is the `L_2`
//! norm of the polynomial.
//!
//! # Coefficient order
//!
//! Along one axis the `2n + 1` basis functions are indexed
//!
//! | index     | real kinds      | complex kind |
//! |-----------|-----------------|--------------|
//! | `0`       | `1`             | `1`          |
//! | `2k - 1`  | `√2 cos(k x)`   | `e^{+ikx}`   |
//! | `2k`      | `√2 sin(k x)`   | `e^{-ikx}`   |
//!
//! In `d` dimensions the flat index is the lexicographic multi-index
//! `(i_1, ..., i_d)`, first axis slowest.

mod eval;
mod kernels;

pub use eval::Values;
pub use kernels::{christoffel_m, dirichlet_kernel, fejer_poly};

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family of orthonormal functions spanning the degree-`n` polynomial space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    /// `{1, √2 cos kx, √2 sin kx}` on the circle.
    #[serde(rename = "real-1d")]
    Real1d,
    /// `d`-fold tensor product of the real one-dimensional system.
    #[serde(rename = "real-tensor")]
    RealTensor,
    /// `{e^{i k·x} : |k|_∞ ≤ n}`.
    #[serde(rename = "complex-exponential")]
    ComplexExponential,
}

impl BasisKind {
    pub fn is_real(self) -> bool {
        !matches!(self, BasisKind::ComplexExponential)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BasisKind::Real1d => "real-1d",
            BasisKind::RealTensor => "real-tensor",
            BasisKind::ComplexExponential => "complex-exponential",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real-1d" => Ok(BasisKind::Real1d),
            "real-tensor" => Ok(BasisKind::RealTensor),
            "complex-exponential" | "complex" => Ok(BasisKind::ComplexExponential),
            other => Err(Error::Basis(format!("unknown basis kind `{other}`"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    kind: BasisKind,
    dimension: usize,
    degree: usize,
}

/// Basis descriptor: kind, torus dimension `d` and coordinate degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct BasisSpec {
    kind: BasisKind,
    dimension: usize,
    degree: usize,
}

impl TryFrom<RawBasis> for BasisSpec {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        BasisSpec::new(raw.kind, raw.dimension, raw.degree)
    }
}

impl BasisSpec {
    pub fn new(kind: BasisKind, dimension: usize, degree: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if kind == BasisKind::Real1d && dimension != 1 {
            return Err(Error::Basis(format!(
                "real-1d basis requires d = 1, got d = {dimension}"
            )));
        }
        let axis = degree
            .checked_mul(2)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| Error::domain("degree too large"))?;
        axis.checked_pow(dimension as u32)
            .ok_or_else(|| Error::domain(format!("(2n+1)^d overflows for n={degree}, d={dimension}")))?;
        Ok(BasisSpec { kind, dimension, degree })
    }

    pub fn real_1d(degree: usize) -> Self {
        BasisSpec::new(BasisKind::Real1d, 1, degree).expect("real-1d basis is always valid")
    }

    /// Tensor basis for `d ≥ 1`; `d = 1` coincides with [`BasisSpec::real_1d`].
    pub fn real_tensor(dimension: usize, degree: usize) -> Result<Self> {
        BasisSpec::new(BasisKind::RealTensor, dimension, degree)
    }

    pub fn complex(dimension: usize, degree: usize) -> Result<Self> {
        BasisSpec::new(BasisKind::ComplexExponential, dimension, degree)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions along one axis, `2n + 1`.
    pub fn axis_len(&self) -> usize {
        2 * self.degree + 1
    }

    /// Dimension of the polynomial space, `N = (2n+1)^d`.
    pub fn size(&self) -> usize {
        self.axis_len().pow(self.dimension as u32)
    }

    /// Values of the `2n + 1` one-dimensional basis functions at `x`.
    pub(crate) fn axis_values(&self, x: f64) -> Vec<Complex64> {
        let m = self.axis_len();
        let mut out = Vec::with_capacity(m);
        out.push(Complex64::new(1.0, 0.0));
        for k in 1..=self.degree {
            let (s, c) = (k as f64 * x).sin_cos();
            if self.kind.is_real() {
                out.push(Complex64::new(SQRT_2 * c, 0.0));
                out.push(Complex64::new(SQRT_2 * s, 0.0));
            } else {
                out.push(Complex64::new(c, s));
                out.push(Complex64::new(c, -s));
            }
        }
        out
    }
}

/// A trigonometric polynomial: basis descriptor plus coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoly")]
pub struct TrigPoly {
    basis: BasisSpec,
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoly {
    basis: BasisSpec,
    coeffs: Vec<f64>,
}

impl TryFrom<RawPoly> for TrigPoly {
    type Error = Error;

    fn try_from(raw: RawPoly) -> Result<Self> {
        TrigPoly::new(raw.basis, raw.coeffs)
    }
}

/// Builds `T(x) = Σ coeffs[i] φ_i(x)` without normalizing the coefficients.
pub fn make_poly(basis: BasisSpec, coeffs: Vec<f64>) -> Result<TrigPoly> {
    TrigPoly::new(basis, coeffs)
}

impl TrigPoly {
    pub fn new(basis: BasisSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.size() {
            return Err(Error::Size {
                expected: basis.size(),
                actual: coeffs.len(),
            });
        }
        Ok(TrigPoly { basis, coeffs })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension
    }

    /// `c · T`.
    pub fn scaled(&self, c: f64) -> TrigPoly {
        TrigPoly {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// True when every non-constant coefficient is zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&a| a == 0.0)
    }

    /// Value at one point of `T^d` (complex; imaginary part is zero for real kinds).
    pub fn value_at(&self, point: &[f64]) -> Result<Complex64> {
        if point.len() != self.basis.dimension {
            return Err(Error::Shape(format!(
                "point has {} coordinates, polynomial is {}-dimensional",
                point.len(),
                self.basis.dimension
            )));
        }
        Ok(self.value_at_unchecked(point))
    }

    pub(crate) fn value_at_unchecked(&self, point: &[f64]) -> Complex64 {
        let m = self.basis.axis_len();
        let mut cur: Vec<Complex64> = self.coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        // contract the fastest axis first
        for &x in point.iter().rev() {
            let phi = self.basis.axis_values(x);
            cur = cur
                .chunks_exact(m)
                .map(|fiber| fiber.iter().zip(&phi).map(|(c, p)| c * p).sum())
                .collect();
        }
        cur[0]
    }

    /// `|T(point)|`.
    pub fn abs_at(&self, point: &[f64]) -> Result<f64> {
        self.value_at(point).map(|v| v.norm())
    }

    /// Values on an equispaced grid, via FFT when `M ≥ 2n + 1` and direct
    /// summation otherwise.
    pub fn evaluate(&self, grid: &GridSpec) -> Result<Values> {
        if grid.points_per_axis() >= self.basis.axis_len() {
            self.evaluate_fft(grid)
        } else {
            self.evaluate_direct(grid)
        }
    }

    /// Grid values by transforming the coefficients to the exponential
    /// spectrum and running an inverse FFT along each axis.
    pub fn evaluate_fft(&self, grid: &GridSpec) -> Result<Values> {
        self.check_grid(grid)?;
        Ok(eval::fft_grid(self, grid))
    }

    /// Grid values by summing the basis expansion at every node.
    pub fn evaluate_direct(&self, grid: &GridSpec) -> Result<Values> {
        self.check_grid(grid)?;
        Ok(eval::direct_grid(self, grid))
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.dimension() != self.basis.dimension {
            return Err(Error::Shape(format!(
                "grid is {}-dimensional, polynomial is {}-dimensional",
                grid.dimension(),
                self.basis.dimension
            )));
        }
        Ok(())
    }
}

/// Tensor grid with `M` equispaced nodes per axis, `x_j = offset + 2πj/M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    points_per_axis: usize,
    offset: f64,
}

impl GridSpec {
    pub fn new(dimension: usize, points_per_axis: usize) -> Result<Self> {
        Self::with_offset(dimension, points_per_axis, 0.0)
    }

    pub fn with_offset(dimension: usize, points_per_axis: usize, offset: f64) -> Result<Self> {
        if dimension == 0 || points_per_axis == 0 {
            return Err(Error::Shape("grid needs d ≥ 1 and M ≥ 1".into()));
        }
        let spacing = 2.0 * PI / points_per_axis as f64;
        if !(0.0..spacing).contains(&offset) {
            return Err(Error::Shape(format!(
                "grid offset {offset} outside [0, 2π/M) = [0, {spacing})"
            )));
        }
        points_per_axis
            .checked_pow(dimension as u32)
            .ok_or_else(|| Error::Shape("grid point count overflows".into()))?;
        Ok(GridSpec {
            dimension,
            points_per_axis,
            offset,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points_per_axis as f64
    }

    /// `M^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        self.offset + self.spacing() * j as f64
    }

    /// Coordinates of the node with flat (lexicographic) index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let m = self.points_per_axis;
        let mut idx = vec![0usize; self.dimension];
        let mut rem = flat;
        for slot in idx.iter_mut().rev() {
            *slot = rem % m;
            rem /= m;
        }
        idx.into_iter().map(|j| self.coordinate(j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcg_coeffs(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    fn max_diff(a: &Values, b: &Values) -> f64 {
        a.to_complex()
            .iter()
            .zip(b.to_complex())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn make_poly_examples() {
        let c = make_poly(BasisSpec::real_1d(0), vec![3.0]).unwrap();
        assert_eq!(c.value_at(&[1.234]).unwrap().re, 3.0);
        let p = make_poly(BasisSpec::real_1d(1), vec![0.0, 1.0, 0.0]).unwrap();
        assert!((p.value_at(&[0.5]).unwrap().re - SQRT_2 * 0.5f64.cos()).abs() < 1e-15);
        let err = make_poly(BasisSpec::real_1d(1), vec![1.0, 2.0]).unwrap_err();
        assert_eq!(err, Error::Size { expected: 3, actual: 2 });
    }

    #[test]
    fn basis_invariants() {
        assert!(BasisSpec::new(BasisKind::Real1d, 2, 3).is_err());
        assert!(BasisSpec::new(BasisKind::RealTensor, 0, 3).is_err());
        assert_eq!(BasisSpec::real_tensor(3, 2).unwrap().size(), 125);
        assert_eq!(BasisSpec::complex(2, 4).unwrap().size(), 81);
        assert!(BasisSpec::real_tensor(64, 1000).is_err());
    }

    #[test]
    fn cosine_on_four_points() {
        let p = make_poly(BasisSpec::real_1d(1), vec![0.0, 1.0, 0.0]).unwrap();
        let v = p.evaluate(&GridSpec::new(1, 4).unwrap()).unwrap();
        let want = [SQRT_2, 0.0, -SQRT_2, 0.0];
        for (got, w) in v.as_real().unwrap().iter().zip(want) {
            assert!((got - w).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_on_any_grid() {
        let p = make_poly(BasisSpec::real_tensor(2, 0).unwrap(), vec![3.0]).unwrap();
        let v = p.evaluate(&GridSpec::with_offset(2, 5, 0.2).unwrap()).unwrap();
        assert_eq!(v.len(), 25);
        assert!(v.as_real().unwrap().iter().all(|&x| (x - 3.0).abs() < 1e-14));
    }

    #[test]
    fn fft_matches_direct_n8_m64() {
        let b = BasisSpec::real_1d(8);
        let p = make_poly(b, lcg_coeffs(b.size(), 7)).unwrap();
        let g = GridSpec::new(1, 64).unwrap();
        let d = max_diff(&p.evaluate_fft(&g).unwrap(), &p.evaluate_direct(&g).unwrap());
        assert!(d <= 1e-10, "{d}");
    }

    #[test]
    fn coarse_grid_uses_direct_path_and_aliases_correctly() {
        let b = BasisSpec::real_1d(6);
        let p = make_poly(b, lcg_coeffs(b.size(), 3)).unwrap();
        let g = GridSpec::with_offset(1, 5, 0.3).unwrap();
        let d = max_diff(&p.evaluate_fft(&g).unwrap(), &p.evaluate_direct(&g).unwrap());
        assert!(d <= 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = make_poly(BasisSpec::real_1d(1), vec![1.0; 3]).unwrap();
        assert!(matches!(p.evaluate(&GridSpec::new(2, 4).unwrap()), Err(Error::Shape(_))));
        assert!(matches!(p.value_at(&[0.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn grid_offset_range() {
        assert!(GridSpec::with_offset(1, 4, 2.0).is_err());
        assert!(GridSpec::with_offset(1, 4, -0.1).is_err());
        assert!(GridSpec::with_offset(1, 4, 1.5).is_ok());
    }

    #[test]
    fn serde_roundtrip() {
        let p = make_poly(BasisSpec::complex(2, 1).unwrap(), lcg_coeffs(9, 1)).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"complex-exponential\""));
        let back: TrigPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"basis":{"kind":"real-1d","dimension":1,"degree":1},"coeffs":[1.0]}"#;
        assert!(serde_json::from_str::<TrigPoly>(bad).is_err());
    }

    fn kind_strategy() -> impl Strategy<Value = (BasisKind, usize)> {
        prop_oneof![
            Just((BasisKind::Real1d, 1)),
            (1usize..=2).prop_map(|d| (BasisKind::RealTensor, d)),
            (1usize..=2).prop_map(|d| (BasisKind::ComplexExponential, d)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fft_and_direct_agree((kind, d) in kind_strategy(), n in 0usize..12, extra in 0usize..20,
                                 seed in any::<u64>(), off in 0.0f64..1.0) {
            let b = BasisSpec::new(kind, d, n).unwrap();
            let p = make_poly(b, lcg_coeffs(b.size(), seed)).unwrap();
            let m = 2 * n + 1 + extra;
            let g = GridSpec::with_offset(d, m, off * 2.0 * std::f64::consts::PI / m as f64).unwrap();
            let diff = max_diff(&p.evaluate_fft(&g).unwrap(), &p.evaluate_direct(&g).unwrap());
            prop_assert!(diff <= 1e-10, "diff {}", diff);
        }

        #[test]
        fn reproducing_bound((kind, d) in kind_strategy(), n in 0usize..10, seed in any::<u64>()) {
            let b = BasisSpec::new(kind, d, n).unwrap();
            let coeffs = lcg_coeffs(b.size(), seed);
            let l2 = coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
            let p = make_poly(b, coeffs).unwrap();
            let g = GridSpec::new(d, 4 * n + 3).unwrap();
            let sup = p.evaluate(&g).unwrap().moduli().into_iter().fold(0.0, f64::max);
            prop_assert!(sup <= (b.size() as f64).sqrt() * l2 * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn fft_and_direct_agree_large() {
        let b = BasisSpec::real_1d(64);
        let p = make_poly(b, lcg_coeffs(b.size(), 11)).unwrap();
        let g = GridSpec::new(1, 1024).unwrap();
        let d = max_diff(&p.evaluate_fft(&g).unwrap(), &p.evaluate_direct(&g).unwrap());
        assert!(d <= 1e-10, "{d}");
    }
}
