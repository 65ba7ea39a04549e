use std::cell::RefCell;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::{BasisKind, GridSpec, TrigPoly};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Grid values of a polynomial, real for the real bases.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Real(v) => v.len(),
            Values::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|T(x_j)|` for every node.
    pub fn moduli(&self) -> Vec<f64> {
        match self {
            Values::Real(v) => v.iter().map(|x| x.abs()).collect(),
            Values::Complex(v) => v.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            Values::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Values::Complex(v) => v.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Values::Real(v) => Some(v),
            Values::Complex(_) => None,
        }
    }

    fn from_complex(kind: BasisKind, raw: Vec<Complex64>) -> Self {
        if kind.is_real() {
            Values::Real(raw.into_iter().map(|z| z.re).collect())
        } else {
            Values::Complex(raw)
        }
    }
}

/// Applies `f` to every fiber of a row-major `m^d` array along `axis`.
fn for_each_fiber(
    buf: &mut [Complex64],
    m: usize,
    d: usize,
    axis: usize,
    mut f: impl FnMut(&mut [Complex64]),
) {
    let stride = m.pow((d - 1 - axis) as u32);
    if stride == 1 {
        buf.chunks_exact_mut(m).for_each(f);
        return;
    }
    let block = stride * m;
    let mut fiber = vec![Complex64::default(); m];
    for outer in (0..buf.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (j, slot) in fiber.iter_mut().enumerate() {
                *slot = buf[base + j * stride];
            }
            f(&mut fiber);
            for (j, v) in fiber.iter().enumerate() {
                buf[base + j * stride] = *v;
            }
        }
    }
}

/// Exponential spectrum of `T`: entry `k + n` per axis holds the coefficient
/// of `e^{ikx}`, laid out row-major over `(2n+1)^d`.
fn spectrum(poly: &TrigPoly) -> Vec<Complex64> {
    let basis = poly.basis();
    let n = basis.degree();
    let m = basis.axis_len();
    let d = basis.dimension();
    let kind = basis.kind();
    let mut buf: Vec<Complex64> = poly.coeffs().iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let mut out = vec![Complex64::default(); m];
    for axis in 0..d {
        for_each_fiber(&mut buf, m, d, axis, |fiber| {
            out[n] = fiber[0];
            for k in 1..=n {
                let (plus, minus) = (fiber[2 * k - 1], fiber[2 * k]);
                if kind.is_real() {
                    // √2(c cos kx + s sin kx) = (c - is)/√2 e^{ikx} + (c + is)/√2 e^{-ikx}
                    let i = Complex64::i();
                    out[n + k] = (plus - i * minus) * FRAC_1_SQRT_2;
                    out[n - k] = (plus + i * minus) * FRAC_1_SQRT_2;
                } else {
                    out[n + k] = plus;
                    out[n - k] = minus;
                }
            }
            fiber.copy_from_slice(&out);
        });
    }
    buf
}

pub(super) fn fft_grid(poly: &TrigPoly, grid: &GridSpec) -> Values {
    let basis = poly.basis();
    let n = basis.degree() as i64;
    let am = basis.axis_len();
    let d = basis.dimension();
    let big_m = grid.points_per_axis();
    let spec = spectrum(poly);

    // per-axis bin and phase e^{ik·offset} for every frequency k = -n..=n
    let (bins, phases): (Vec<usize>, Vec<Complex64>) = (-n..=n)
        .map(|k| {
            let bin = k.rem_euclid(big_m as i64) as usize;
            (bin, Complex64::from_polar(1.0, k as f64 * grid.offset()))
        })
        .unzip();

    let mut buf = vec![Complex64::default(); grid.len()];
    let mut idx = vec![0usize; d];
    for &c in &spec {
        let mut target = 0usize;
        let mut phase = Complex64::new(1.0, 0.0);
        for &i in &idx {
            target = target * big_m + bins[i];
            phase *= phases[i];
        }
        buf[target] += c * phase;
        // advance lexicographic multi-index
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < am {
                break;
            }
            *slot = 0;
        }
    }

    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(big_m, FftDirection::Inverse));
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        for_each_fiber(&mut buf, big_m, d, axis, |fiber| {
            fft.process_with_scratch(fiber, &mut scratch)
        });
    }
    Values::from_complex(basis.kind(), buf)
}

pub(super) fn direct_grid(poly: &TrigPoly, grid: &GridSpec) -> Values {
    let raw: Vec<Complex64> = (0..grid.len())
        .map(|j| poly.value_at_unchecked(&grid.point(j)))
        .collect();
    Values::from_complex(poly.basis().kind(), raw)
}
