use std::f64::consts::SQRT_2;

use super::{BasisSpec, TrigPoly};

/// Reciprocal Christoffel function `m(x) = Σ_i |φ_i(x)|²`.
///
/// Every torus basis here has `m ≡ N`; the sum is evaluated term by term
/// over all `N` multi-indices so the identity stays observable.
pub fn christoffel_m(basis: &BasisSpec, point: &[f64]) -> f64 {
    let axes: Vec<Vec<f64>> = point
        .iter()
        .map(|&x| basis.axis_values(x).iter().map(|z| z.norm_sqr()).collect())
        .collect();
    let m = basis.axis_len();
    let mut idx = vec![0usize; axes.len()];
    let mut total = 0.0;
    for _ in 0..basis.size() {
        total += idx.iter().zip(&axes).map(|(&i, a)| a[i]).product::<f64>();
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    total
}

const DIRICHLET_SERIES_THRESHOLD: f64 = 1e-8;

/// Dirichlet kernel `D_n(x) = 1 + 2 Σ_{k=1}^n cos kx = sin((n+½)x) / sin(x/2)`.
pub fn dirichlet_kernel(n: usize, x: f64) -> f64 {
    let half = (0.5 * x).sin();
    if half.abs() < DIRICHLET_SERIES_THRESHOLD {
        1.0 + 2.0 * (1..=n).map(|k| (k as f64 * x).cos()).sum::<f64>()
    } else {
        ((n as f64 + 0.5) * x).sin() / half
    }
}

/// Fejér kernel `F_n(x) = Σ_{|k|≤n} (1 - |k|/(n+1)) e^{ikx}` in the real-1d basis.
pub fn fejer_poly(n: usize) -> TrigPoly {
    let mut coeffs = vec![0.0; 2 * n + 1];
    coeffs[0] = 1.0;
    for k in 1..=n {
        coeffs[2 * k - 1] = SQRT_2 * (1.0 - k as f64 / (n + 1) as f64);
    }
    TrigPoly::new(BasisSpec::real_1d(n), coeffs).expect("length matches by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{BasisKind, GridSpec};
    use std::f64::consts::PI;

    fn series(n: usize, x: f64) -> f64 {
        1.0 + 2.0 * (1..=n).map(|k| (k as f64 * x).cos()).sum::<f64>()
    }

    #[test]
    fn christoffel_examples() {
        let b = BasisSpec::real_1d(3);
        for x in [0.0, 0.3, 1.7, 5.9] {
            assert!((christoffel_m(&b, &[x]) - 7.0).abs() < 1e-12);
        }
        let c = BasisSpec::complex(2, 1).unwrap();
        assert!((christoffel_m(&c, &[0.4, 2.2]) - 9.0).abs() < 1e-12);
        let t = BasisSpec::real_tensor(2, 0).unwrap();
        assert_eq!(christoffel_m(&t, &[1.0, 2.0]), 1.0);
    }

    #[test]
    fn christoffel_identity_all_kinds() {
        let mut x = 0.123_f64;
        for kind in [BasisKind::Real1d, BasisKind::RealTensor, BasisKind::ComplexExponential] {
            for d in 1..=3 {
                if kind == BasisKind::Real1d && d > 1 {
                    continue;
                }
                for n in [0, 1, 4, 16] {
                    if d == 3 && n == 16 {
                        continue; // 35937 terms per point, covered below
                    }
                    let b = BasisSpec::new(kind, d, n).unwrap();
                    let big_n = b.size() as f64;
                    for _ in 0..10 {
                        let pt: Vec<f64> = (0..d)
                            .map(|_| {
                                x = (x * 7.31 + 0.77).fract();
                                2.0 * PI * x
                            })
                            .collect();
                        let m = christoffel_m(&b, &pt);
                        assert!(((m - big_n) / big_n).abs() < 1e-9, "{kind} d={d} n={n}");
                    }
                }
            }
        }
        let b = BasisSpec::real_tensor(3, 16).unwrap();
        let m = christoffel_m(&b, &[0.3, 4.1, 2.7]);
        assert!(((m - 35937.0) / 35937.0).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_examples() {
        assert!((dirichlet_kernel(5, 0.0) - 11.0).abs() < 1e-15);
        assert!((dirichlet_kernel(1, PI) + 1.0).abs() < 1e-12);
        assert!((dirichlet_kernel(3, 2.0 * PI) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_ratio_matches_series() {
        let mut state = 0x9e37_79b9_7f4a_7c15_u64;
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 * PI - 2.0 * PI;
            worst = worst.max((dirichlet_kernel(8, x) - series(8, x)).abs());
        }
        assert!(worst <= 1e-9, "max diff {worst}");
    }

    #[test]
    fn dirichlet_whitening_design() {
        for n in [0, 1, 4, 9] {
            let big_n = 2 * n + 1;
            let grid = GridSpec::new(1, big_n).unwrap();
            for i in 0..big_n {
                for j in 0..big_n {
                    let v = dirichlet_kernel(n, grid.coordinate(i) - grid.coordinate(j)) / big_n as f64;
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn fejer_examples() {
        let f0 = fejer_poly(0);
        assert_eq!(f0.coeffs(), &[1.0]);
        let f4 = fejer_poly(4);
        assert!((f4.value_at(&[0.0]).unwrap().re - 5.0).abs() < 1e-12);
        // nonnegative
        let vals = f4.evaluate(&GridSpec::new(1, 101).unwrap()).unwrap();
        assert!(vals.as_real().unwrap().iter().all(|&v| v > -1e-12));
    }
}
