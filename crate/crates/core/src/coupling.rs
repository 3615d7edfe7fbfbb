//! Eigenoperator data of the system couplings `σ_x` and `σ_y` in the
//! invariant frame.
//!
//! For a coupling operator `A`, the matrix elements `A_mn = ⟨ψ_m|A|ψ_n⟩ =
//! ξ_mn e^{iφ_mn}` define amplitudes `ξ_mn ≥ 0`, transition phases
//! `θ_mn = α_n − α_m + φ_mn` and frequencies `α_mn = −∂_t θ_mn`.

use thiserror::Error;

use crate::lri::{eigenstates_of, LriError, LriFrame, LriRates, LriState};
use crate::qlinalg::{ComplexMat2, ComplexVec2, C64, I, SIGMA_X, SIGMA_Y};
use crate::quad::{integrate, QuadError, QuadOptions};

/// `ξ₁₂²` below this makes the off-diagonal frequency undefined.
pub const DEGENERATE_CHANNEL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("channel {channel:?} has no off-diagonal element at t = {t} (ξ₁₂² = {xi12_sq:e})")]
    DegenerateChannel {
        channel: Channel,
        t: f64,
        xi12_sq: f64,
    },
    #[error("delay s = {s} reaches before the frame start (t = {t})")]
    DelayOutOfRange { t: f64, s: f64 },
    #[error(transparent)]
    Lri(#[from] LriError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    X,
    Y,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::X, Channel::Y];

    pub fn operator(self) -> ComplexMat2 {
        match self {
            Channel::X => SIGMA_X,
            Channel::Y => SIGMA_Y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
        }
    }
}

/// `ξ` table for both channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub x11: f64,
    pub x12: f64,
    pub y11: f64,
    pub y12: f64,
}

impl Amplitudes {
    pub fn of(eta: f64, zeta: f64) -> Self {
        let s2 = (2.0 * eta).sin();
        let (sz, cz) = zeta.sin_cos();
        Self {
            x11: (s2 * cz).abs(),
            x12: (1.0 - s2 * s2 * cz * cz).max(0.0).sqrt(),
            y11: (s2 * sz).abs(),
            y12: (1.0 - s2 * s2 * sz * sz).max(0.0).sqrt(),
        }
    }

    /// `(ξ₁₁, ξ₁₂)` of one channel; `ξ₂₂ = ξ₁₁` and `ξ₂₁ = ξ₁₂`.
    pub fn channel(&self, c: Channel) -> (f64, f64) {
        match c {
            Channel::X => (self.x11, self.x12),
            Channel::Y => (self.y11, self.y12),
        }
    }
}

/// Matrix elements `⟨ψ_m|σ|ψ_n⟩` as a 2×2 table indexed `[m-1][n-1]`.
pub fn matrix_elements(c: Channel, eta: f64, zeta: f64) -> [[C64; 2]; 2] {
    let (p1, p2) = eigenstates_of(eta, zeta);
    let a = c.operator();
    [
        [a.sandwich(&p1, &p1), a.sandwich(&p1, &p2)],
        [a.sandwich(&p2, &p1), a.sandwich(&p2, &p2)],
    ]
}

/// Off-diagonal frequency `α₁₂` of one channel from the frame state and its
/// equations of motion.
pub fn alpha12_of(c: Channel, s: &LriState, r: &LriRates, t: f64) -> Result<f64, CouplingError> {
    let (s2, c2) = (2.0 * s.eta).sin_cos();
    let (sz, cz) = s.zeta.sin_cos();
    let sin2z = (2.0 * s.zeta).sin();
    let d = &r.drive;
    let base = -r.d_zeta * c2 - 2.0 * d.delta * c2 - 2.0 * d.omega * cz * s2;
    match c {
        Channel::X => {
            let den = 1.0 - s2 * s2 * cz * cz;
            if den < DEGENERATE_CHANNEL {
                return Err(CouplingError::DegenerateChannel {
                    channel: c,
                    t,
                    xi12_sq: den,
                });
            }
            Ok(base + (r.d_eta * s2 * sin2z + r.d_zeta * c2) / den)
        }
        Channel::Y => {
            let den = 1.0 - s2 * s2 * sz * sz;
            if den < DEGENERATE_CHANNEL {
                return Err(CouplingError::DegenerateChannel {
                    channel: c,
                    t,
                    xi12_sq: den,
                });
            }
            Ok(base - (r.d_eta * s2 * sin2z - r.d_zeta * c2) / den)
        }
    }
}

/// Three contributions to `α₁₂`: energy difference `−(⟨H⟩₁ − ⟨H⟩₂)`,
/// geometric part `i(⟨ψ₁|∂ψ₁⟩ − ⟨ψ₂|∂ψ₂⟩)` and the argument rate
/// `−∂_t arg A₁₂`, each evaluated on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParts {
    pub energy: f64,
    pub geometric: f64,
    pub argument: f64,
}

impl AlphaParts {
    pub fn total(&self) -> f64 {
        self.energy + self.geometric + self.argument
    }
}

fn eigenstate_derivatives(s: &LriState, r: &LriRates) -> (ComplexVec2, ComplexVec2) {
    let (se, ce) = s.eta.sin_cos();
    let ph = C64::from_polar(1.0, s.zeta);
    let dph = ph * I * r.d_zeta;
    (
        ComplexVec2::new(dph * ce - ph * (se * r.d_eta), C64::new(ce * r.d_eta, 0.0)),
        ComplexVec2::new(dph * se + ph * (ce * r.d_eta), C64::new(se * r.d_eta, 0.0)),
    )
}

pub fn alpha_parts(c: Channel, s: &LriState, r: &LriRates) -> AlphaParts {
    let (p1, p2) = eigenstates_of(s.eta, s.zeta);
    let (d1, d2) = eigenstate_derivatives(s, r);
    let h = ComplexMat2::pauli_combination(r.drive.omega, 0.0, r.drive.delta);
    let energy = -(h.sandwich(&p1, &p1).re - h.sandwich(&p2, &p2).re);
    let geometric = (I * (p1.inner(&d1) - p2.inner(&d2))).re;
    let a = c.operator();
    let a12 = a.sandwich(&p1, &p2);
    let da12 = d1.inner(&a.apply(&p2)) + p1.inner(&a.apply(&d2));
    AlphaParts {
        energy,
        geometric,
        argument: -(da12 / a12).im,
    }
}

/// Coupling data at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCoefficients {
    pub xi11: f64,
    pub xi12: f64,
    /// `φ₁₁ ∈ {0, π}`
    pub phi11: f64,
    /// continuous branch of `arg A₁₂`
    pub phi12: f64,
    pub theta11: f64,
    pub theta22: f64,
    pub theta12: f64,
}

/// Coupling coefficients over a solved frame. Construction tabulates
/// `arg A₁₂` on the frame grid so that later evaluations pick a continuous
/// branch.
#[derive(Debug, Clone)]
pub struct Coupling<'a> {
    frame: &'a LriFrame,
    phi_x: Vec<f64>,
    phi_y: Vec<f64>,
}

fn unwrap_next(prev: f64, raw: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    raw + tau * ((prev - raw) / tau).round()
}

impl<'a> Coupling<'a> {
    pub fn new(frame: &'a LriFrame) -> Self {
        let mut phi_x = Vec::with_capacity(frame.grid().len());
        let mut phi_y = Vec::with_capacity(frame.grid().len());
        for i in 0..frame.grid().len() {
            let s = frame.node_state(i);
            let rx = matrix_elements(Channel::X, s.eta, s.zeta)[0][1].arg();
            let ry = matrix_elements(Channel::Y, s.eta, s.zeta)[0][1].arg();
            match (phi_x.last(), phi_y.last()) {
                (Some(&px), Some(&py)) => {
                    phi_x.push(unwrap_next(px, rx));
                    phi_y.push(unwrap_next(py, ry));
                }
                _ => {
                    phi_x.push(rx);
                    phi_y.push(ry);
                }
            }
        }
        Self {
            frame,
            phi_x,
            phi_y,
        }
    }

    pub fn frame(&self) -> &'a LriFrame {
        self.frame
    }

    pub fn amplitudes(&self, t: f64) -> Result<Amplitudes, CouplingError> {
        let s = self.frame.state(t)?;
        Ok(Amplitudes::of(s.eta, s.zeta))
    }

    /// `α₁₂` for both channels; `α₂₁ = −α₁₂`, diagonal frequencies vanish.
    pub fn frequencies(&self, t: f64) -> Result<(f64, f64), CouplingError> {
        Ok((
            self.frequency(Channel::X, t)?,
            self.frequency(Channel::Y, t)?,
        ))
    }

    pub fn frequency(&self, c: Channel, t: f64) -> Result<f64, CouplingError> {
        let (s, r) = self.frame.state_and_rates(t)?;
        alpha12_of(c, &s, &r, t)
    }

    pub fn alpha_parts(&self, c: Channel, t: f64) -> Result<AlphaParts, CouplingError> {
        let (s, r) = self.frame.state_and_rates(t)?;
        Ok(alpha_parts(c, &s, &r))
    }

    fn reference_phi(&self, c: Channel, t: f64) -> f64 {
        let grid = self.frame.grid();
        let i = grid.partition_point(|&x| x <= t).max(1) - 1;
        let i = i.min(grid.len() - 1);
        // nearer node of the bracketing pair
        let j = if i + 1 < grid.len() && (grid[i + 1] - t) < (t - grid[i]) {
            i + 1
        } else {
            i
        };
        match c {
            Channel::X => self.phi_x[j],
            Channel::Y => self.phi_y[j],
        }
    }

    pub fn phases(&self, c: Channel, t: f64) -> Result<ChannelCoefficients, CouplingError> {
        let s = self.frame.state(t)?;
        let m = matrix_elements(c, s.eta, s.zeta);
        let amp = Amplitudes::of(s.eta, s.zeta);
        let (xi11, xi12) = amp.channel(c);
        let phi11 = if m[0][0].re < 0.0 {
            std::f64::consts::PI
        } else {
            0.0
        };
        let phi22 = if m[1][1].re < 0.0 {
            std::f64::consts::PI
        } else {
            0.0
        };
        let phi12 = unwrap_next(self.reference_phi(c, t), m[0][1].arg());
        Ok(ChannelCoefficients {
            xi11,
            xi12,
            phi11,
            phi12,
            theta11: phi11,
            theta22: phi22,
            theta12: s.alpha2 - s.alpha1 + phi12,
        })
    }

    /// `Θ₁₂(t, t − s) = ∫_{t−s}^{t} (α₁₂(τ) − α₁₂(t)) dτ`
    pub fn theta_memory(&self, c: Channel, t: f64, s: f64) -> Result<f64, CouplingError> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let start = self.frame.t_start();
        if t - s < start - 1e-12 * (t - start).abs().max(1.0) || s < 0.0 {
            return Err(CouplingError::DelayOutOfRange { t, s });
        }
        let a_t = self.frequency(c, t)?;
        let mut failure = None;
        let v = integrate(
            |tau| match self.frequency(c, tau) {
                Ok(a) => a - a_t,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            (t - s).max(start),
            t,
            &QuadOptions::new(1e-12, 1e-11),
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::DrivingProtocol;
    use crate::lri::{adiabatic_init, solve_lri};
    use crate::ode::OdeOptions;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn sine_frame(t_end: f64) -> LriFrame {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, t_end).unwrap();
        solve_lri(&p, adiabatic_init(&p).unwrap(), &OdeOptions::default()).unwrap()
    }

    #[test]
    fn amplitude_examples() {
        let a = Amplitudes::of(FRAC_PI_4, 0.0);
        assert!((a.x11 - 1.0).abs() < 1e-15 && a.x12.abs() < 1e-7);
        assert!(a.y11.abs() < 1e-15 && (a.y12 - 1.0).abs() < 1e-15);
        let a = Amplitudes::of(0.3, 0.0);
        assert_eq!((a.y11, a.y12), (0.0, 1.0));
        let a = Amplitudes::of(FRAC_PI_6, FRAC_PI_3);
        assert!((a.x11 - 3f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn adiabatic_phase_of_y_channel() {
        let p = DrivingProtocol::constant(0.6, 0.8, 0.0, 3.0).unwrap();
        let f = solve_lri(&p, adiabatic_init(&p).unwrap(), &OdeOptions::default()).unwrap();
        let c = Coupling::new(&f);
        let ph = c.phases(Channel::Y, 0.0).unwrap();
        assert!((ph.phi12 - FRAC_PI_2).abs() < 1e-12);
        assert!((ph.theta12 - ph.phi12).abs() < 1e-15);
        // frequency of the static drive is the full gap 2E
        let a = c.frequency(Channel::Y, 1.7).unwrap();
        assert!((a - 2.0).abs() < 1e-10, "{a}");
    }

    #[test]
    fn static_detuning_y_frequency() {
        // Ω ≡ 0, ζ₀ = π/2: η constant, ζ' = −2Δ.
        let d0 = 0.9;
        let p = DrivingProtocol::constant(d0, 0.0, 0.0, 3.0).unwrap();
        let f = solve_lri(&p, (0.35, FRAC_PI_2), &OdeOptions::default()).unwrap();
        let c = Coupling::new(&f);
        for &t in &f.grid()[1..f.grid().len() - 1] {
            let s = f.state(t).unwrap();
            let (s2, c2) = (2.0 * s.eta).sin_cos();
            let dz = -2.0 * d0;
            let den = 1.0 - (s2 * s.zeta.sin()).powi(2);
            let expected = -dz * c2 - 2.0 * d0 * c2 + dz * c2 / den;
            let got = c.frequency(Channel::Y, t).unwrap();
            assert!((got - expected).abs() < 1e-10);
            let h = 1e-5;
            let fd = -(c.phases(Channel::Y, t + h).unwrap().theta12
                - c.phases(Channel::Y, t - h).unwrap().theta12)
                / (2.0 * h);
            assert!((fd - got).abs() < 1e-5, "t = {t}: {fd} vs {got}");
        }
    }

    #[test]
    fn theta_memory_examples() {
        let f = sine_frame(6.0);
        let c = Coupling::new(&f);
        assert_eq!(c.theta_memory(Channel::X, 5.0, 0.0).unwrap(), 0.0);
        for ch in Channel::BOTH {
            let th = |t| c.phases(ch, t).unwrap().theta12;
            let direct = th(4.5) - th(5.0) - c.frequency(ch, 5.0).unwrap() * 0.5;
            let quad = c.theta_memory(ch, 5.0, 0.5).unwrap();
            assert!((quad - direct).abs() < 1e-8, "{ch:?}: {quad} vs {direct}");
        }
        assert!(matches!(
            c.theta_memory(Channel::X, 1.0, 2.0),
            Err(CouplingError::DelayOutOfRange { .. })
        ));
        let p = DrivingProtocol::constant(0.6, 0.8, 0.0, 3.0).unwrap();
        let f = solve_lri(&p, adiabatic_init(&p).unwrap(), &OdeOptions::default()).unwrap();
        let c = Coupling::new(&f);
        assert!(c.theta_memory(Channel::Y, 2.5, 2.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn degenerate_channel_is_reported() {
        let p = DrivingProtocol::constant(0.0, 1.0, 0.0, 1.0).unwrap();
        // η = π/4, ζ = 0 is the adiabatic point of σ_x: ξ^x₁₂ = 0.
        let f = solve_lri(&p, (FRAC_PI_4, 0.0), &OdeOptions::default()).unwrap();
        let c = Coupling::new(&f);
        assert!(matches!(
            c.frequency(Channel::X, 0.5),
            Err(CouplingError::DegenerateChannel {
                channel: Channel::X,
                ..
            })
        ));
        assert!(c.frequency(Channel::Y, 0.5).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn amplitude_identities(eta in 0.01..1.56f64, zeta in -6.0..6.0f64) {
            let a = Amplitudes::of(eta, zeta);
            prop_assert!((a.x11 * a.x11 + a.x12 * a.x12 - 1.0).abs() <= 1e-10);
            prop_assert!((a.y11 * a.y11 + a.y12 * a.y12 - 1.0).abs() <= 1e-10);
            for ch in Channel::BOTH {
                let m = matrix_elements(ch, eta, zeta);
                let (x11, x12) = a.channel(ch);
                prop_assert!((m[0][1].norm() - x12).abs() <= 1e-12);
                prop_assert!((m[1][0].norm() - x12).abs() <= 1e-12);
                prop_assert!((m[0][0].norm() - x11).abs() <= 1e-12);
                prop_assert!((m[0][1] - m[1][0].conj()).norm() <= 1e-15);
            }
        }

        #[test]
        fn frequency_decomposition_and_phase_rate(d0 in 0.3..1.5f64, o0 in 0.3..1.5f64, wc in 0.3..1.5f64, off in -0.3..0.3f64) {
            let p = DrivingProtocol::sine_squared(d0, o0, wc, 0.3, 4.0).unwrap();
            let (eta0, zeta0) = adiabatic_init(&p).unwrap();
            let f = solve_lri(&p, (eta0 + off, zeta0 + off), &OdeOptions::default()).unwrap();
            let c = Coupling::new(&f);
            let grid = f.grid().to_vec();
            for &t in &grid[2..grid.len() - 2] {
                for ch in Channel::BOTH {
                    let a = match c.frequency(ch, t) {
                        Ok(a) => a,
                        Err(CouplingError::DegenerateChannel { .. }) => continue,
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    };
                    prop_assert!((c.alpha_parts(ch, t).unwrap().total() - a).abs() <= 1e-6 * a.abs().max(1.0));
                    let h = 1e-4;
                    let th = |k: f64| c.phases(ch, t + k * h).unwrap().theta12;
                    let fd = -(th(-2.0) - 8.0 * th(-1.0) + 8.0 * th(1.0) - th(2.0)) / (12.0 * h);
                    prop_assert!((fd - a).abs() <= 1e-4, "{:?} t={} fd={} a={}", ch, t, fd, a);
                }
            }
        }
    }
}
