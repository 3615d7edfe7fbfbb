//! Adaptive Gauss-Kronrod (7/15) quadrature for real and complex integrands.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error(
        "quadrature did not converge on [{a}, {b}]: estimate {estimate:e} > tolerance {tol:e}"
    )]
    NotConverged {
        a: f64,
        b: f64,
        estimate: f64,
        tol: f64,
    },
    #[error("non-finite integrand on [{a}, {b}]")]
    NonFinite { a: f64, b: f64 },
}

/// Values a quadrature rule can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64, bool) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut finite = fc.magnitude().is_finite();
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        finite &= s.magnitude().is_finite();
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    ((kron), (kron - gauss).magnitude(), finite)
}

/// Integrates `f` over `[a, b]` by bisecting the panel with the largest error
/// estimate until the summed estimate is below `max(abs_tol, rel_tol·|I|)`.
/// `a > b` flips the sign; `a == b` gives zero.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<T, QuadError> {
    if a == b {
        return Ok(T::zero());
    }
    if a > b {
        return integrate(f, b, a, opts).map(|v| v * -1.0);
    }
    let (value, err, finite) = gk15(&mut f, a, b);
    if !finite {
        return Err(QuadError::NonFinite { a, b });
    }
    let mut panels = vec![Panel { a, b, value, err }];
    loop {
        let total = panels.iter().fold(T::zero(), |acc, p| acc + p.value);
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= tol {
            return Ok(total);
        }
        if panels.len() >= opts.max_intervals {
            return Err(QuadError::NotConverged {
                a,
                b,
                estimate: total_err,
                tol,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        for (lo, hi) in [(p.a, mid), (mid, p.b)] {
            let (value, err, finite) = gk15(&mut f, lo, hi);
            if !finite {
                return Err(QuadError::NonFinite { a: lo, b: hi });
            }
            panels.push(Panel {
                a: lo,
                b: hi,
                value,
                err,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(|x| x.powi(6), -1.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((v - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory() {
        let v = integrate(
            |x: f64| (20.0 * x).cos(),
            0.0,
            PI,
            &QuadOptions::new(1e-12, 1e-12),
        )
        .unwrap();
        assert!(v.abs() < 1e-11);
        let v = integrate(|x: f64| (x).sin(), 0.0, PI, &QuadOptions::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_exponential() {
        let v = integrate(
            |x| Complex64::new(0.0, x).exp(),
            0.0,
            PI / 2.0,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((v - Complex64::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn reversed_and_empty() {
        let o = QuadOptions::default();
        assert_eq!(integrate(|x| x, 1.0, 1.0, &o).unwrap(), 0.0);
        let v = integrate(|x| x, 1.0, 0.0, &o).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity_is_integrable() {
        let v = integrate(
            |x: f64| 1.0 / x.sqrt(),
            0.0,
            1.0,
            &QuadOptions::new(1e-9, 1e-9),
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn nan_is_reported() {
        let r = integrate(|_| f64::NAN, 0.0, 1.0, &QuadOptions::default());
        assert!(matches!(r, Err(QuadError::NonFinite { .. })));
    }
}
