//! Numerical laboratory for average Nikolskii factors of random
//! trigonometric polynomials.
//!
//! The crate is layered bottom-up:
//!
//! * [`poly`]: bases, polynomials, grid evaluation, Dirichlet/Fejér kernels;
//! * [`quadrature`]: `L_p` norms for `1 ≤ p ≤ ∞` on the normalized torus;
//! * [`sampling`]: reproducible Gaussian/Rademacher coefficient streams;
//! * [`oracles`]: closed-form Gamma-function moments and tail bounds;
//! * [`estimator`]: Monte Carlo estimates with standard errors;
//! * [`sweep`]: degree/dimension sweeps, band and slope reports, worst-case probes.

pub mod error;
pub mod estimator;
pub mod oracles;
pub mod poly;
pub mod quadrature;
pub mod sampling;
pub mod sweep;

mod summation;

pub use error::{Error, Result};
pub use estimator::{
    run_estimator, verify_moment_ratio_identity, verify_reciprocal_identity, verify_sigma_invariance, EstimatorTask,
    Identity, IdentityReport,
    MCEstimate, SigmaReport, Statistic,
};
pub use oracles::OracleValue;
pub use poly::{make_poly, BasisKind, BasisSpec, GridSpec, TrigPoly, Values};
pub use quadrature::{norm, norm_l2_parseval, sup_norm, NormMethod, NormSpec, NormValue, QuadConfig};
pub use sampling::{derive_stream, grid_samples, sample_coeffs, whitening_stats, Law, RandomSpec, StreamHandle, WhiteningStats};
pub use sweep::{
    dimension_match, run_sweep, worst_case_probe, DimensionMatchReport, Normalizer, ProbeTable,
    SweepPlan, SweepResult,
};
