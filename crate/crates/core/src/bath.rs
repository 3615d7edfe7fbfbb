//! Ohmic reservoir with exponential cutoff.

use thiserror::Error;

use crate::qlinalg::C64;
use crate::quad::{integrate, QuadError, QuadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("invalid bath: {0}")]
    Invalid(String),
    #[error("Planck occupation has a pole at ω = 0 for T = {0}")]
    PlanckPole(f64),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralFamily {
    OhmicExpCutoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub family: SpectralFamily,
    /// dimensionless coupling
    pub kappa: f64,
    /// cutoff frequency
    pub omega_c: f64,
    pub temperature: f64,
    /// laser-frame offset added to the Planck argument
    pub omega_l: f64,
}

impl BathSpec {
    pub fn new(
        kappa: f64,
        omega_c: f64,
        temperature: f64,
        omega_l: f64,
    ) -> Result<Self, BathError> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(BathError::Invalid(format!(
                "kappa must be >= 0, got {kappa}"
            )));
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(BathError::Invalid(format!(
                "omega_c must be > 0, got {omega_c}"
            )));
        }
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(BathError::Invalid(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        if !omega_l.is_finite() {
            return Err(BathError::Invalid("omega_l must be finite".into()));
        }
        Ok(Self {
            family: SpectralFamily::OhmicExpCutoff,
            kappa,
            omega_c,
            temperature,
            omega_l,
        })
    }

    pub fn zero_temperature(kappa: f64, omega_c: f64) -> Result<Self, BathError> {
        Self::new(kappa, omega_c, 0.0, 0.0)
    }

    /// `J(ω) = κ ω e^{−|ω|/Ω_c}`, odd in `ω`.
    pub fn spectral_density(&self, w: f64) -> f64 {
        self.kappa * w * (-w.abs() / self.omega_c).exp()
    }

    /// `N(ω) = 1/(e^{ω/T} − 1)`; at `T = 0` this is `0` for `ω ≥ 0` and `−1`
    /// for `ω < 0`.
    pub fn planck(&self, w: f64) -> Result<f64, BathError> {
        if self.temperature == 0.0 {
            return Ok(if w < 0.0 { -1.0 } else { 0.0 });
        }
        if w == 0.0 {
            return Err(BathError::PlanckPole(self.temperature));
        }
        Ok(1.0 / (w / self.temperature).exp_m1())
    }

    /// `N(ω) + 1`, evaluated as `−N(−ω)` for `ω < 0` to avoid cancellation.
    pub fn planck_plus_one(&self, w: f64) -> Result<f64, BathError> {
        if w < 0.0 {
            Ok(-self.planck(-w)?)
        } else {
            Ok(self.planck(w)? + 1.0)
        }
    }

    /// `Λ̄^R(α) = π J(α) (N(α + ω_L) + 1)`. The removable point
    /// `α = ω_L = 0` evaluates to its limit `πκT`.
    pub fn lambda_real(&self, alpha: f64) -> Result<f64, BathError> {
        if alpha == 0.0 {
            return Ok(if self.omega_l == 0.0 {
                std::f64::consts::PI * self.kappa * self.temperature
            } else {
                0.0
            });
        }
        let n1 = self.planck_plus_one(alpha + self.omega_l)?;
        Ok(std::f64::consts::PI * self.spectral_density(alpha) * n1)
    }

    /// `(2N(ω) + 1)` weighted spectral density, finite at `ω → 0`.
    fn symmetric_weight(&self, w: f64) -> f64 {
        if self.temperature == 0.0 {
            return self.spectral_density(w);
        }
        let x = w / (2.0 * self.temperature);
        if x.abs() < 1e-8 {
            return 2.0 * self.kappa * self.temperature * (-w.abs() / self.omega_c).exp();
        }
        self.spectral_density(w) / x.tanh()
    }

    /// `C(s) = ∫₀^∞ J(ω)[(2N(ω) + 1) cos ωs − i sin ωs] dω`, closed form at
    /// `T = 0` and quadrature otherwise.
    pub fn correlation(&self, s: f64) -> Result<C64, BathError> {
        if self.temperature == 0.0 {
            Ok(self.correlation_zero_temperature(s))
        } else {
            self.correlation_quadrature(s)
        }
    }

    pub fn correlation_zero_temperature(&self, s: f64) -> C64 {
        let wc = self.omega_c;
        let x = wc * s;
        let den = (1.0 + x * x).powi(2);
        C64::new(
            self.kappa * wc * wc * (1.0 - x * x) / den,
            -2.0 * self.kappa * wc * wc * wc * s / den,
        )
    }

    /// Quadrature of the correlation integral on `[0, 50·max(Ω_c, T)]`.
    pub fn correlation_quadrature(&self, s: f64) -> Result<C64, BathError> {
        let w_max = 50.0 * self.omega_c.max(self.temperature);
        // panels at the natural scales keep the oscillatory integrand resolved
        let scale = self.omega_c.max(self.temperature);
        let n_panels = ((w_max * s.abs()) / std::f64::consts::PI).ceil().max(1.0) as usize;
        let edges: Vec<f64> = {
            let mut e: Vec<f64> = (0..=n_panels)
                .map(|k| w_max * k as f64 / n_panels as f64)
                .collect();
            e.push(scale);
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        };
        let opts = QuadOptions::new(1e-13 * self.kappa.max(1e-300) * scale * scale, 1e-11);
        let mut acc = C64::new(0.0, 0.0);
        for w in edges.windows(2) {
            acc += integrate(
                |w: f64| {
                    let (sn, cs) = (w * s).sin_cos();
                    C64::new(
                        self.symmetric_weight(w) * cs,
                        -self.spectral_density(w) * sn,
                    )
                },
                w[0],
                w[1],
                &opts,
            )?;
        }
        Ok(acc)
    }
}
