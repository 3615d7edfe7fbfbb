//! Closed-form reference results.

use thiserror::Error;

use crate::bath::BathSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("sweep velocity v must be positive (got {0})")]
    BadVelocity(f64),
    #[error("closed-form decoherence function needs T = 0 (got T = {0})")]
    FiniteTemperature(f64),
}

/// Exact dissipative Landau-Zener survival probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzPrediction {
    pub v: f64,
    pub omega0: f64,
    pub kappa: f64,
    pub omega_c: f64,
    /// `W² = Ω₀² + κΩ_c²/4`
    pub w2: f64,
    /// `P₁₁ = exp(−πW²/(2v))`
    pub p11: f64,
}

pub fn lz_exact(
    v: f64,
    omega0: f64,
    kappa: f64,
    omega_c: f64,
) -> Result<LzPrediction, OracleError> {
    if !(v > 0.0) {
        return Err(OracleError::BadVelocity(v));
    }
    let w2 = omega0 * omega0 + 0.25 * kappa * omega_c * omega_c;
    Ok(LzPrediction {
        v,
        omega0,
        kappa,
        omega_c,
        w2,
        p11: (-std::f64::consts::PI * w2 / (2.0 * v)).exp(),
    })
}

/// Zero-temperature decoherence function `Γ_e(t) = (κ/2) ln(1 + Ω_c²t²)`.
pub fn dephasing_gamma_e(b: &BathSpec, t: f64) -> Result<f64, OracleError> {
    if b.temperature > 0.0 {
        return Err(OracleError::FiniteTemperature(b.temperature));
    }
    Ok(0.5 * b.kappa * (b.omega_c * b.omega_c * t * t).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use crate::rates::dephasing_rates;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_system_limit() {
        let p = lz_exact(1.5, 0.7, 0.0, 8.0).unwrap();
        assert!((p.p11 - (-PI * 0.49 / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn figure_parameters() {
        let p = lz_exact(1.0, 2.0, 0.1, 8.0).unwrap();
        assert!((p.w2 - 5.6).abs() < 1e-12);
        assert!((p.p11 - (-2.8 * PI).exp()).abs() < 1e-16);
        assert!((p.p11 - 1.51e-4).abs() < 0.01e-4);
        let p = lz_exact(1.0, 0.2, 0.1, 8.0).unwrap();
        assert!((p.w2 - 1.64).abs() < 1e-12);
        assert!((p.p11 - (-0.82 * PI).exp()).abs() < 1e-15);
        assert!((p.p11 - 7.607e-2).abs() < 1e-5);
        assert!(matches!(
            lz_exact(0.0, 1.0, 0.1, 8.0),
            Err(OracleError::BadVelocity(_))
        ));
    }

    #[test]
    fn gamma_e_examples() {
        let b = BathSpec::zero_temperature(1.0, 20.0).unwrap();
        assert_eq!(dephasing_gamma_e(&b, 0.0).unwrap(), 0.0);
        let g = dephasing_gamma_e(&b, 1.0).unwrap();
        assert!((g - 0.5 * 401f64.ln()).abs() < 1e-15);
        assert!((g - 2.99698).abs() < 1e-5);
        assert!(((-g).exp() - 0.04994).abs() < 1e-5);
        let hot = BathSpec::new(1.0, 20.0, 1.0, 0.0).unwrap();
        assert!(dephasing_gamma_e(&hot, 1.0).is_err());
    }

    #[test]
    fn gamma_e_is_integrated_dephasing_rate() {
        for kappa in [0.3, 1.0, 2.5] {
            let b = BathSpec::zero_temperature(kappa, 20.0).unwrap();
            for k in 1..=10 {
                let t = 0.05 * k as f64;
                let q = integrate(
                    |s| dephasing_rates(&b, s).unwrap().0,
                    0.0,
                    t,
                    &QuadOptions::new(1e-13, 1e-13),
                )
                .unwrap();
                assert!((q - dephasing_gamma_e(&b, t).unwrap()).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn survival_is_monotone(o in 0.0..3.0f64, k in 0.0..1.0f64, wc in 0.5..10.0f64, v in 0.2..4.0f64) {
            let base = lz_exact(v, o, k, wc).unwrap().p11;
            prop_assert!(lz_exact(v, o + 0.1, k, wc).unwrap().p11 <= base);
            prop_assert!(lz_exact(v, o, k + 0.05, wc).unwrap().p11 <= base);
            prop_assert!(lz_exact(v, o, k, wc + 0.1).unwrap().p11 <= base);
            prop_assert!(lz_exact(v + 0.1, o, k, wc).unwrap().p11 >= base);
        }

        #[test]
        fn gamma_e_nondecreasing(t in 0.0..10.0f64, dt in 0.0..1.0f64, k in 0.0..2.0f64) {
            let b = BathSpec::zero_temperature(k, 20.0).unwrap();
            prop_assert!(dephasing_gamma_e(&b, t + dt).unwrap() >= dephasing_gamma_e(&b, t).unwrap());
        }
    }
}
