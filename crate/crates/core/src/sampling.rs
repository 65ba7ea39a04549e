//! Reproducible coefficient streams.
//!
//! Sample `i` of a run with root seed `s` always draws from the ChaCha20
//! stream `(key(s), i)`, so results do not depend on how samples are
//! distributed over worker threads.
//!
//! Gaussian variates use the Marsaglia polar method on 53-bit uniforms
//! (`GAUSSIAN_ALGORITHM`); both variates of each accepted pair are used, in
//! order. Rademacher signs take the top bit of a 64-bit word.

use num_complex::Complex64;
use rayon::prelude::*;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{BasisKind, BasisSpec, GridSpec, TrigPoly, Values};

/// Identifier of the fixed Gaussian generator; bump when the transform changes.
pub const GAUSSIAN_ALGORITHM: &str = "chacha20-polar-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Gaussian,
    Rademacher,
}

impl Law {
    pub fn as_str(self) -> &'static str {
        match self {
            Law::Gaussian => "gaussian",
            Law::Rademacher => "rademacher",
        }
    }
}

impl std::str::FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Law::Gaussian),
            "rademacher" => Ok(Law::Rademacher),
            other => Err(Error::domain(format!("unknown coefficient law `{other}`"))),
        }
    }
}

/// Coefficient law and root seed. `sigma` only affects the Gaussian law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRandomSpec")]
pub struct RandomSpec {
    law: Law,
    sigma: f64,
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRandomSpec {
    law: Law,
    #[serde(default = "unit")]
    sigma: f64,
    seed: u64,
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<RawRandomSpec> for RandomSpec {
    type Error = Error;

    fn try_from(raw: RawRandomSpec) -> Result<Self> {
        RandomSpec::new(raw.law, raw.sigma, raw.seed)
    }
}

impl RandomSpec {
    pub fn new(law: Law, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(RandomSpec { law, sigma, seed })
    }

    pub fn gaussian(seed: u64) -> Self {
        RandomSpec { law: Law::Gaussian, sigma: 1.0, seed }
    }

    pub fn rademacher(seed: u64) -> Self {
        RandomSpec { law: Law::Rademacher, sigma: 1.0, seed }
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        RandomSpec::new(self.law, sigma, self.seed)
    }

    pub fn law(&self) -> Law {
        self.law
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `(root seed, sample index)` naming one deterministic substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamHandle {
    seed: u64,
    index: u64,
}

pub fn derive_stream(seed: u64, index: u64) -> StreamHandle {
    StreamHandle { seed, index }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StreamHandle {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Fresh generator positioned at the start of this substream.
    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(self.index);
        StreamRng { inner, spare: None }
    }
}

pub struct StreamRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl StreamRng {
    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn sign(&mut self) -> f64 {
        if self.inner.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// `count` i.i.d. coefficients; Gaussian draws are `sigma ×` unit normals.
pub fn sample_coeffs(stream: &StreamHandle, count: usize, spec: &RandomSpec) -> Vec<f64> {
    let mut rng = stream.rng();
    match spec.law {
        Law::Gaussian => (0..count).map(|_| spec.sigma * rng.standard_normal()).collect(),
        Law::Rademacher => (0..count).map(|_| rng.sign()).collect(),
    }
}

/// `X_k = T(x_k) / √N` on the canonical grid `x_k = 2πk/(2n+1)` per axis.
///
/// For Gaussian coefficients `X` is a standard (real, or for the complex
/// basis circular in the `E X conj(X)` sense) white vector, because
/// `(1/N) Π D_n(x_k - x_l) = δ_{kl}` on these nodes.
pub fn grid_samples(poly: &TrigPoly) -> Result<Values> {
    let basis = poly.basis();
    if basis.kind() == BasisKind::RealTensor && basis.dimension() > 1 {
        return Err(Error::Basis(
            "grid sampling construction is defined for real-1d and complex-exponential bases".into(),
        ));
    }
    let grid = GridSpec::new(basis.dimension(), basis.axis_len())?;
    let scale = 1.0 / (basis.size() as f64).sqrt();
    Ok(match poly.evaluate(&grid)? {
        Values::Real(v) => Values::Real(v.into_iter().map(|x| x * scale).collect()),
        Values::Complex(v) => Values::Complex(v.into_iter().map(|z| z * scale).collect()),
    })
}

/// Parses a seed written in decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| Error::domain(format!("invalid seed `{text}`")))
}

/// Empirical covariance `E X_k conj(X_l)` over samples (used by the whitening checks).
pub fn empirical_covariance(samples: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let dim = samples.first().map_or(0, Vec::len);
    let mut cov = vec![vec![Complex64::default(); dim]; dim];
    for s in samples {
        for (k, row) in cov.iter_mut().enumerate() {
            for (l, c) in row.iter_mut().enumerate() {
                *c += s[k] * s[l].conj();
            }
        }
    }
    let inv = 1.0 / samples.len() as f64;
    for row in &mut cov {
        for c in row.iter_mut() {
            *c *= inv;
        }
    }
    cov
}

/// Extremes of the empirical covariance of whitened grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteningStats {
    pub diag_min: f64,
    pub diag_max: f64,
    pub max_off_diag: f64,
    pub samples: usize,
}

/// Draws `samples` polynomials and summarizes the covariance of their
/// scaled values on the `(2n+1)^d` grid, which should be the identity.
pub fn whitening_stats(basis: BasisSpec, samples: usize, seed: u64) -> Result<WhiteningStats> {
    let spec = RandomSpec::gaussian(seed);
    let draws: Vec<Vec<Complex64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let c = sample_coeffs(&derive_stream(seed, i), basis.size(), &spec);
            grid_samples(&TrigPoly::new(basis, c)?).map(|v| v.to_complex())
        })
        .collect::<Result<_>>()?;
    let cov = empirical_covariance(&draws);
    let (mut diag_min, mut diag_max, mut max_off_diag) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for (k, row) in cov.iter().enumerate() {
        for (l, c) in row.iter().enumerate() {
            if k == l {
                diag_min = diag_min.min(c.re);
                diag_max = diag_max.max(c.re);
            } else {
                max_off_diag = max_off_diag.max(c.norm());
            }
        }
    }
    Ok(WhiteningStats {
        diag_min,
        diag_max,
        max_off_diag,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::make_poly;

    #[test]
    fn same_stream_same_draws() {
        let spec = RandomSpec::gaussian(42);
        let a = sample_coeffs(&derive_stream(42, 0), 100, &spec);
        let b = sample_coeffs(&derive_stream(42, 0), 100, &spec);
        assert_eq!(a, b);
        let c = sample_coeffs(&derive_stream(42, 1), 100, &spec);
        assert_ne!(a, c);
        let other_seed = sample_coeffs(&derive_stream(43, 0), 100, &spec);
        assert_ne!(a, other_seed);
    }

    #[test]
    fn pooled_mean_across_streams() {
        let spec = RandomSpec::gaussian(42);
        let mut sum = 0.0;
        let mut total = 0usize;
        for k in 0..10_000 {
            for z in sample_coeffs(&derive_stream(42, k), 8, &spec) {
                sum += z;
                total += 1;
            }
        }
        let mean = sum / total as f64;
        assert!(mean.abs() <= 4.0 / (total as f64).sqrt(), "{mean}");
    }

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn gaussian_variance() {
        let v = sample_coeffs(&derive_stream(1, 0), 100_000, &RandomSpec::gaussian(1));
        let var = variance(&v);
        assert!((0.99..=1.01).contains(&var), "{var}");
        let s5 = RandomSpec::new(Law::Gaussian, 5.0, 1).unwrap();
        let w = sample_coeffs(&derive_stream(1, 0), 100_000, &s5);
        let ratio = variance(&w) / 25.0;
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
    }

    #[test]
    fn scale_equivariance_is_exact() {
        let unit = sample_coeffs(&derive_stream(9, 3), 50, &RandomSpec::gaussian(9));
        for sigma in [0.001, 5.0, 1e10] {
            let spec = RandomSpec::gaussian(9).with_sigma(sigma).unwrap();
            let scaled = sample_coeffs(&derive_stream(9, 3), 50, &spec);
            for (u, s) in unit.iter().zip(&scaled) {
                assert_eq!(*s, sigma * u);
            }
        }
    }

    #[test]
    fn rademacher_signs() {
        let n = 100_000;
        let v = sample_coeffs(&derive_stream(5, 0), n, &RandomSpec::rademacher(5));
        assert!(v.iter().all(|&x| x == 1.0 || x == -1.0));
        let mean = v.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn sigma_must_be_positive() {
        assert!(RandomSpec::new(Law::Gaussian, 0.0, 1).is_err());
        assert!(RandomSpec::new(Law::Gaussian, f64::NAN, 1).is_err());
    }

    #[test]
    fn seeds_parse_decimal_and_hex() {
        assert_eq!(parse_seed("42").unwrap(), 42);
        assert_eq!(parse_seed("0x2A").unwrap(), 42);
        assert_eq!(parse_seed("0xffffffffffffffff").unwrap(), u64::MAX);
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0xg").is_err());
    }

    #[test]
    fn grid_samples_constant() {
        let p = make_poly(BasisSpec::real_1d(0), vec![2.5]).unwrap();
        assert_eq!(grid_samples(&p).unwrap(), Values::Real(vec![2.5]));
    }

    #[test]
    fn grid_samples_rejects_real_tensor() {
        let p = make_poly(BasisSpec::real_tensor(2, 1).unwrap(), vec![0.0; 9]).unwrap();
        assert!(matches!(grid_samples(&p), Err(Error::Basis(_))));
    }

    fn whitening(basis: BasisSpec, samples: usize, seed: u64) -> (f64, f64, f64) {
        let w = whitening_stats(basis, samples, seed).unwrap();
        (w.diag_min, w.diag_max, w.max_off_diag)
    }

    #[test]
    fn whitening_real_1d() {
        let (lo, hi, off) = whitening(BasisSpec::real_1d(4), 5000, 17);
        assert!(lo >= 0.9 && hi <= 1.1, "{lo} {hi}");
        assert!(off <= 4.0 / 5000f64.sqrt(), "{off}");
    }

    #[test]
    fn whitening_complex_2d() {
        let (lo, hi, off) = whitening(BasisSpec::complex(2, 1).unwrap(), 5000, 18);
        assert!(lo >= 0.9 && hi <= 1.1, "{lo} {hi}");
        assert!(off <= 4.0 / 5000f64.sqrt(), "{off}");
    }

    #[test]
    fn whitening_converges_to_identity() {
        let s = 10_000;
        for n in [4, 8] {
            let (lo, hi, off) = whitening(BasisSpec::real_1d(n), s, 100 + n as u64);
            let tol = 5.0 / (s as f64).sqrt();
            assert!((lo - 1.0).abs() <= tol && (hi - 1.0).abs() <= tol, "n={n}: {lo} {hi}");
            assert!(off <= tol, "n={n}: {off}");
        }
    }
}
