//! Acceptance thresholds and fixed run parameters, in one place.
//!
//! Band ratios are empirical; the underlying results are order
//! equivalences without explicit constants.

/// Root seed shared by the verification bundles.
pub const SEED: u64 = 20_240_601;

/// Sigma multiplier for Monte Carlo agreement checks.
pub const MC_SIGMAS: f64 = 3.0;

pub const EXACT_MOMENT_SAMPLES: usize = 10_000;
pub const IDENTITY_SAMPLES: usize = 10_000;
/// The `q = 2` identity is checked with this few draws.
pub const IDENTITY_Q2_SAMPLES: usize = 10;
pub const IDENTITY_Q2_REL_TOL: f64 = 1e-10;
pub const ORACLE_REL_TOL: f64 = 1e-10;

pub const SWEEP_DEGREES: [usize; 6] = [8, 16, 32, 64, 128, 256];
pub const SWEEP_SAMPLES: usize = 2000;
pub const BAND_FLAT: f64 = 1.5;
pub const FLAT_SLOPE: f64 = 0.05;
pub const BAND_LOG: f64 = 2.0;
pub const BAND_SUP_GROWTH: f64 = 2.0;
pub const BAND_RECIP_SUP: f64 = 2.5;

pub const MATCHED_N: usize = 81;
pub const MATCHED_SAMPLES: usize = 2000;
pub const BAND_DIMENSION: f64 = 1.5;

pub const PROBE_DEGREES: [usize; 6] = [16, 32, 64, 128, 256, 512];
pub const PROBE_SLOPE: (f64, f64) = (0.40, 0.60);
pub const PROBE_SEPARATION: f64 = 5.0;
pub const SEPARATION_DEGREE: usize = 256;

pub const WHITENING_SAMPLES: usize = 10_000;
pub const WHITENING_OFF_DIAG_NUMERATOR: f64 = 5.0;
pub const WHITENING_DIAG: (f64, f64) = (0.9, 1.1);

pub const TAIL_POINTS: usize = 100;
pub const TAIL_RANGE: (f64, f64) = (1.01, 10.0);

pub const PARSEVAL_REL_TOL: f64 = 1e-10;
pub const EVEN_P_REL_TOL: f64 = 1e-10;
pub const SUP_REL_TOL: f64 = 1e-8;
pub const INVARIANT_SLACK: f64 = 1e-8;
pub const INVARIANT_POLYS: usize = 200;

/// Off-diagonal slack for the whitening check at basis size `big_n`.
pub fn whitening_off_diag(samples: usize, big_n: usize) -> f64 {
    WHITENING_OFF_DIAG_NUMERATOR / (samples as f64).sqrt() * (big_n as f64).ln().sqrt()
}
