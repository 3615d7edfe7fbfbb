//! Driving protocols `Δ(t)`, `Ω(t)` for `H(t) = Δ(t)σ_z + Ω(t)σ_x`.

use thiserror::Error;

use crate::qlinalg::{ComplexMat2, SIGMA_X, SIGMA_Z};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrivingError {
    #[error("t = {t} is outside the protocol window [{start}, {end}]")]
    OutOfWindow { t: f64, start: f64, end: f64 },
    #[error("invalid protocol: {0}")]
    Invalid(String),
}

/// Drive values and their first time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub delta: f64,
    pub omega: f64,
    pub d_delta: f64,
    pub d_omega: f64,
}

impl DriveSample {
    /// Instantaneous gap parameter `√(Δ² + Ω²)`.
    pub fn energy(&self) -> f64 {
        self.delta.hypot(self.omega)
    }
}

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, DrivingError> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(DrivingError::Invalid(
                "tabulated data needs at least two (t, value) pairs of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DrivingError::Invalid(
                "tabulated times must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(DrivingError::Invalid(
                "tabulated values must be finite".into(),
            ));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    ds[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, ds })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let i = (self.xs.partition_point(|&v| v <= x).max(1) - 1).min(n - 2);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `Δ = Δ₀`, `Ω = Ω₀`
    Constant {
        delta0: f64,
        omega0: f64,
    },
    /// `Δ = Δ₀`, `Ω = Ω₀ sin²(ω_c t)`
    SineSquared {
        delta0: f64,
        omega0: f64,
        omega_c: f64,
    },
    /// `Δ = v t / 2`, `Ω = Ω₀ / 2`
    LandauZener {
        v: f64,
        omega0: f64,
    },
    /// Polar drive `Δ = R cos φ`, `Ω = R sin φ` with `R = R₀(1 + ramp·t)` and
    /// `φ' = −2μR`, which keeps `(ΩΔ' − ΔΩ')/(2R³) = μ` fixed.
    Inertial {
        r0: f64,
        ramp: f64,
        phi0: f64,
        mu: f64,
    },
    Tabulated {
        delta: Pchip,
        omega: Pchip,
    },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::SineSquared { .. } => "sine-squared",
            Family::LandauZener { .. } => "landau-zener",
            Family::Inertial { .. } => "inertial",
            Family::Tabulated { .. } => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivingProtocol {
    pub family: Family,
    pub t_start: f64,
    pub t_end: f64,
}

/// Overshoot past either end of the window still accepted by [`DrivingProtocol::eval`].
pub const WINDOW_SLACK: f64 = 1e-9;

impl DrivingProtocol {
    pub fn new(family: Family, t_start: f64, t_end: f64) -> Result<Self, DrivingError> {
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(DrivingError::Invalid(format!(
                "window [{t_start}, {t_end}] must be finite with t_end > t_start"
            )));
        }
        let bad = |what: &str| Err(DrivingError::Invalid(what.to_string()));
        match &family {
            Family::Constant { delta0, omega0 } => {
                if !delta0.is_finite() || !omega0.is_finite() {
                    return bad("constant drive needs finite delta0 and omega0");
                }
            }
            Family::SineSquared {
                delta0,
                omega0,
                omega_c,
            } => {
                if ![delta0, omega0, omega_c].iter().all(|v| v.is_finite()) {
                    return bad("sine-squared drive needs finite parameters");
                }
            }
            Family::LandauZener { v, omega0 } => {
                if !(*v > 0.0) || !v.is_finite() || !omega0.is_finite() {
                    return bad("landau-zener sweep velocity v must be positive");
                }
            }
            Family::Inertial { r0, ramp, phi0, mu } => {
                if !(*r0 > 0.0) || ![ramp, phi0, mu].iter().all(|v| v.is_finite()) {
                    return bad("inertial drive needs r0 > 0 and finite ramp, phi0, mu");
                }
                for t in [t_start, t_end] {
                    if 1.0 + ramp * t <= 0.0 {
                        return bad("inertial drive amplitude R(t) must stay positive");
                    }
                }
            }
            Family::Tabulated { delta, omega } => {
                for p in [delta, omega] {
                    let (a, b) = p.x_range();
                    if a > t_start + WINDOW_SLACK || b < t_end - WINDOW_SLACK {
                        return bad("tabulated data must cover the protocol window");
                    }
                }
            }
        }
        Ok(Self {
            family,
            t_start,
            t_end,
        })
    }

    pub fn constant(
        delta0: f64,
        omega0: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self, DrivingError> {
        Self::new(Family::Constant { delta0, omega0 }, t_start, t_end)
    }

    pub fn sine_squared(
        delta0: f64,
        omega0: f64,
        omega_c: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self, DrivingError> {
        Self::new(
            Family::SineSquared {
                delta0,
                omega0,
                omega_c,
            },
            t_start,
            t_end,
        )
    }

    /// Landau-Zener sweep; `half_window` defaults to `40/√v`.
    pub fn landau_zener(
        v: f64,
        omega0: f64,
        half_window: Option<f64>,
    ) -> Result<Self, DrivingError> {
        if !(v > 0.0) {
            return Err(DrivingError::Invalid(
                "landau-zener sweep velocity v must be positive".into(),
            ));
        }
        let w = half_window.unwrap_or(40.0 / v.sqrt());
        Self::new(Family::LandauZener { v, omega0 }, -w, w)
    }

    pub fn inertial(
        r0: f64,
        ramp: f64,
        phi0: f64,
        mu: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self, DrivingError> {
        Self::new(Family::Inertial { r0, ramp, phi0, mu }, t_start, t_end)
    }

    pub fn tabulated(
        ts: Vec<f64>,
        deltas: Vec<f64>,
        omegas: Vec<f64>,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self, DrivingError> {
        let delta = Pchip::new(ts.clone(), deltas)?;
        let omega = Pchip::new(ts, omegas)?;
        Self::new(Family::Tabulated { delta, omega }, t_start, t_end)
    }

    pub fn span(&self) -> f64 {
        self.t_end - self.t_start
    }

    fn check_window(&self, t: f64) -> Result<(), DrivingError> {
        let slack = WINDOW_SLACK * self.span().max(1.0);
        if !(t >= self.t_start - slack && t <= self.t_end + slack) {
            return Err(DrivingError::OutOfWindow {
                t,
                start: self.t_start,
                end: self.t_end,
            });
        }
        Ok(())
    }

    /// `(Δ, Ω, dΔ/dt, dΩ/dt)` at `t`.
    pub fn eval(&self, t: f64) -> Result<DriveSample, DrivingError> {
        self.check_window(t)?;
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> DriveSample {
        match &self.family {
            Family::Constant { delta0, omega0 } => DriveSample {
                delta: *delta0,
                omega: *omega0,
                d_delta: 0.0,
                d_omega: 0.0,
            },
            Family::SineSquared {
                delta0,
                omega0,
                omega_c,
            } => {
                let s = (omega_c * t).sin();
                DriveSample {
                    delta: *delta0,
                    omega: omega0 * s * s,
                    d_delta: 0.0,
                    d_omega: omega0 * omega_c * (2.0 * omega_c * t).sin(),
                }
            }
            Family::LandauZener { v, omega0 } => DriveSample {
                delta: 0.5 * v * t,
                omega: 0.5 * omega0,
                d_delta: 0.5 * v,
                d_omega: 0.0,
            },
            Family::Inertial { r0, ramp, phi0, mu } => {
                let r = r0 * (1.0 + ramp * t);
                let dr = r0 * ramp;
                let phi = phi0 - 2.0 * mu * r0 * (t + 0.5 * ramp * t * t);
                let dphi = -2.0 * mu * r;
                let (s, c) = phi.sin_cos();
                DriveSample {
                    delta: r * c,
                    omega: r * s,
                    d_delta: dr * c - r * s * dphi,
                    d_omega: dr * s + r * c * dphi,
                }
            }
            Family::Tabulated { delta, omega } => {
                let h = 1e-6 * self.span();
                let lo = (t - h).max(self.t_start);
                let hi = (t + h).min(self.t_end);
                DriveSample {
                    delta: delta.eval(t),
                    omega: omega.eval(t),
                    d_delta: (delta.eval(hi) - delta.eval(lo)) / (hi - lo),
                    d_omega: (omega.eval(hi) - omega.eval(lo)) / (hi - lo),
                }
            }
        }
    }

    /// `Δ(t)σ_z + Ω(t)σ_x`
    pub fn hamiltonian(&self, t: f64) -> Result<ComplexMat2, DrivingError> {
        let s = self.eval(t)?;
        Ok(SIGMA_Z.scale_real(s.delta) + SIGMA_X.scale_real(s.omega))
    }

    /// Largest `|Ω|` over `samples + 1` equally spaced points of the window.
    pub fn max_abs_omega(&self, samples: usize) -> f64 {
        let n = samples.max(1);
        (0..=n)
            .map(|k| {
                let t = self.t_start + self.span() * k as f64 / n as f64;
                self.eval_unchecked(t).omega.abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{ComplexMat2, IDENTITY};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_squared_example() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 10.0).unwrap();
        let s = p.eval(PI / 2.0).unwrap();
        assert_eq!(s.delta, 1.0);
        assert!((s.omega - 1.0).abs() < 1e-15);
    }

    #[test]
    fn landau_zener_example() {
        let p = DrivingProtocol::landau_zener(1.0, 2.0, None).unwrap();
        assert_eq!((p.t_start, p.t_end), (-40.0, 40.0));
        let s = p.eval(0.0).unwrap();
        assert_eq!(
            (s.delta, s.omega, s.d_delta, s.d_omega),
            (0.0, 1.0, 0.5, 0.0)
        );
    }

    #[test]
    fn constant_example() {
        let p = DrivingProtocol::constant(1.0, 0.0, 0.0, 3.0).unwrap();
        for t in [0.0, 1.3, 3.0] {
            let s = p.eval(t).unwrap();
            assert_eq!(
                (s.delta, s.omega, s.d_delta, s.d_omega),
                (1.0, 0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let p = DrivingProtocol::constant(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(
            p.hamiltonian(0.5).unwrap(),
            ComplexMat2::real(1.0, 0.0, 0.0, -1.0)
        );
        let p = DrivingProtocol::constant(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(p.hamiltonian(0.5).unwrap(), SIGMA_X);
        let p = DrivingProtocol::landau_zener(1.0, 2.0, None).unwrap();
        assert_eq!(
            p.hamiltonian(2.0).unwrap(),
            ComplexMat2::real(1.0, 1.0, 1.0, -1.0)
        );
    }

    #[test]
    fn window_is_enforced() {
        let p = DrivingProtocol::constant(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(p.eval(1.0 + 1e-10).is_ok());
        assert!(p.eval(-1e-10).is_ok());
        assert!(matches!(
            p.eval(1.01),
            Err(DrivingError::OutOfWindow { .. })
        ));
        assert!(DrivingProtocol::constant(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(DrivingProtocol::landau_zener(0.0, 1.0, None).is_err());
    }

    #[test]
    fn inertial_family_holds_mu() {
        let p = DrivingProtocol::inertial(1.0, 0.1, 2.5, 0.5, 0.0, 2.0).unwrap();
        for k in 0..=20 {
            let t = 0.1 * k as f64;
            let s = p.eval(t).unwrap();
            let r = s.energy();
            let mu = (s.omega * s.d_delta - s.delta * s.d_omega) / (2.0 * r.powi(3));
            assert!((mu - 0.5).abs() < 1e-13, "mu = {mu} at t = {t}");
        }
    }

    #[test]
    fn pchip_interpolates_and_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.9, 1.0, 1.0];
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-15);
        }
        let mut prev = -1.0;
        for k in 0..=400 {
            let v = p.eval(0.01 * k as f64);
            assert!(v >= prev - 1e-15 && v <= 1.0 + 1e-15);
            prev = v;
        }
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn tabulated_protocol_matches_linear_data() {
        let ts: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let d: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let o: Vec<f64> = ts.iter().map(|_| 0.5).collect();
        let p = DrivingProtocol::tabulated(ts, d, o, 0.0, 10.0).unwrap();
        let s = p.eval(3.3).unwrap();
        assert!((s.delta - 6.6).abs() < 1e-12);
        assert!((s.d_delta - 2.0).abs() < 1e-6);
        assert!(s.d_omega.abs() < 1e-9);
        assert!(
            DrivingProtocol::tabulated(vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2], 0.0, 2.0)
                .is_err()
        );
    }

    fn fd_check(p: &DrivingProtocol) -> Result<(), TestCaseError> {
        let h = 1e-5 * p.span();
        for k in 1..50 {
            let t = p.t_start + p.span() * k as f64 / 50.0;
            let s = p.eval(t).unwrap();
            let fd_d = (p.eval(t + h).unwrap().delta - p.eval(t - h).unwrap().delta) / (2.0 * h);
            let fd_o = (p.eval(t + h).unwrap().omega - p.eval(t - h).unwrap().omega) / (2.0 * h);
            let scale_d = s.d_delta.abs().max(1.0);
            let scale_o = s.d_omega.abs().max(1.0);
            prop_assert!((fd_d - s.d_delta).abs() <= 1e-6 * scale_d);
            prop_assert!((fd_o - s.d_omega).abs() <= 1e-6 * scale_o);
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian(v in 0.1..4.0f64, o in -3.0..3.0f64, t in -40.0..40.0f64) {
            let p = DrivingProtocol::landau_zener(v, o, Some(40.0)).unwrap();
            let h = p.hamiltonian(t).unwrap();
            prop_assert!(h.hermiticity_defect() <= 1e-14);
            prop_assert!((h * h).max_abs_diff(&IDENTITY.scale_real(p.eval(t).unwrap().energy().powi(2))) < 1e-10);
        }

        #[test]
        fn analytic_derivatives_match_differences(d0 in -2.0..2.0f64, o0 in -2.0..2.0f64, wc in 0.2..2.0f64, mu in -0.8..0.8f64) {
            fd_check(&DrivingProtocol::sine_squared(d0, o0, wc, 0.0, 5.0).unwrap())?;
            fd_check(&DrivingProtocol::landau_zener(1.0, o0, None).unwrap())?;
            fd_check(&DrivingProtocol::inertial(1.0, 0.05, 1.5, mu, 0.0, 1.0).unwrap())?;
        }
    }
}
