//! Lewis-Riesenfeld invariant frame of `H = Δσ_z + Ωσ_x`.
//!
//! The invariant eigenstates are parameterized as
//! `ψ₁ = (cos η e^{iζ}, sin η)`, `ψ₂ = (sin η e^{iζ}, −cos η)`, and the angles
//! obey
//!
//! ```text
//! η' = Ω sin ζ
//! ζ' = 2Ω cot(2η) cos ζ − 2Δ
//! ```
//!
//! The phases `α₁`, `α₂` are carried as two extra state components so that
//! `Σ c_n e^{iα_n}|ψ_n(t)⟩` solves the Schrödinger equation for constant `c_n`.

use thiserror::Error;

use crate::driving::{DriveSample, DrivingError, DrivingProtocol};
use crate::ode::{dopri5, DenseSolution, OdeError, OdeOptions};
use crate::qlinalg::{commutator, ComplexMat2, ComplexVec2, C64, I};

/// `|sin 2η|` below this at an accepted step aborts [`solve_lri`].
pub const SINGULAR_ETA: f64 = 1e-6;

/// Fraction of `max|Ω|` used when the start of the window has `Ω ≈ 0`.
pub const OMEGA_REGULARIZATION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LriError {
    #[error("invariant frame hit sin 2η ≈ 0 at t = {t}")]
    SingularEta { t: f64 },
    #[error("t = {t} is outside the frame range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("degenerate drive: Δ = Ω = 0 everywhere in the window")]
    DegenerateDrive,
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Driving(#[from] DrivingError),
}

/// Angles and phases at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LriState {
    pub eta: f64,
    pub zeta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl LriState {
    fn from_array(y: &[f64; 4]) -> Self {
        Self {
            eta: y[0],
            zeta: y[1],
            alpha1: y[2],
            alpha2: y[3],
        }
    }
}

/// Time derivatives of the frame variables together with the drive they
/// were computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LriRates {
    pub d_eta: f64,
    pub d_zeta: f64,
    pub d_alpha1: f64,
    pub d_alpha2: f64,
    pub drive: DriveSample,
}

/// Right-hand side of the frame equations at `(η, ζ)` for the drive sample `d`.
pub fn lri_rates(d: &DriveSample, eta: f64, zeta: f64) -> LriRates {
    let (s2, c2) = (2.0 * eta).sin_cos();
    let (sz, cz) = zeta.sin_cos();
    let d_eta = d.omega * sz;
    let d_zeta = 2.0 * d.omega * (c2 / s2) * cz - 2.0 * d.delta;
    let common = d.delta * c2 + d.omega * cz * s2;
    let (ce, se) = (eta.cos(), eta.sin());
    LriRates {
        d_eta,
        d_zeta,
        d_alpha1: -d_zeta * ce * ce - common,
        d_alpha2: -d_zeta * se * se + common,
        drive: *d,
    }
}

/// Ground state of `Δσ_z + Ωσ_x` expressed as `(η, ζ)`: `ζ = 0` and
/// `η = arccos(−(√2/2)√((E − Δ)/E))`, `E = √(Δ² + Ω²)`. For `Ω < 0` the same
/// `η` is paired with `ζ = π`.
pub fn adiabatic_point(delta: f64, omega: f64) -> Result<(f64, f64), LriError> {
    let e = delta.hypot(omega);
    if e == 0.0 {
        return Err(LriError::DegenerateDrive);
    }
    let ratio = ((e - delta) / e).clamp(0.0, 2.0);
    let eta = (-(0.5f64).sqrt() * ratio.sqrt()).acos();
    let zeta = if omega < 0.0 {
        std::f64::consts::PI
    } else {
        0.0
    };
    Ok((eta, zeta))
}

/// Default initial condition: the adiabatic point at `t_start`, with `Ω`
/// lifted to `10⁻³·max|Ω|` when the drive starts (near) zero.
pub fn adiabatic_init(p: &DrivingProtocol) -> Result<(f64, f64), LriError> {
    let d = p.eval(p.t_start)?;
    let floor = OMEGA_REGULARIZATION * p.max_abs_omega(2000);
    let mag = d.omega.abs().max(floor);
    let omega = if d.omega < 0.0 { -mag } else { mag };
    let delta = if d.delta == 0.0 && omega == 0.0 {
        return Err(LriError::DegenerateDrive);
    } else {
        d.delta
    };
    adiabatic_point(delta, omega)
}

/// Solved invariant frame on the protocol window.
#[derive(Debug, Clone)]
pub struct LriFrame {
    protocol: DrivingProtocol,
    sol: DenseSolution<4>,
    pub omega_i: f64,
    pub ode: OdeOptions,
}

/// Default step cap: a quarter period of the fastest Bloch precession `2E`
/// sampled over the window. Larger steps leave the stability region of the
/// integrator even where the error estimate stays quiet.
pub fn default_h_max(p: &DrivingProtocol) -> f64 {
    let n = 2000;
    let e_max = (0..=n)
        .filter_map(|k| p.eval(p.t_start + p.span() * k as f64 / n as f64).ok())
        .map(|d| d.energy())
        .fold(0.0, f64::max);
    if e_max > 0.0 {
        (0.25 * std::f64::consts::PI / e_max).min(p.span())
    } else {
        p.span()
    }
}

/// Integrates the frame equations over the whole protocol window. When
/// `opts.h_max` is unset, [`default_h_max`] applies. A sign change of
/// `sin 2η` between accepted steps counts as a singular crossing.
pub fn solve_lri(
    p: &DrivingProtocol,
    init: (f64, f64),
    opts: &OdeOptions,
) -> Result<LriFrame, LriError> {
    let (eta0, zeta0) = init;
    if (2.0 * eta0).sin().abs() < SINGULAR_ETA {
        return Err(LriError::SingularEta { t: p.t_start });
    }
    let mut opts = *opts;
    if opts.h_max.is_none() {
        opts.h_max = Some(default_h_max(p));
    }
    let opts = &opts;
    let sign0 = (2.0 * eta0).sin().signum();
    let sol = dopri5(
        |t, y: &[f64; 4]| {
            let d = p.eval(t)?;
            let r = lri_rates(&d, y[0], y[1]);
            Ok::<_, LriError>([r.d_eta, r.d_zeta, r.d_alpha1, r.d_alpha2])
        },
        p.t_start,
        p.t_end,
        [eta0, zeta0, 0.0, 0.0],
        opts,
        |t, y| {
            let s2 = (2.0 * y[0]).sin();
            if s2.abs() < SINGULAR_ETA || s2.signum() != sign0 {
                Err(LriError::SingularEta { t })
            } else {
                Ok(())
            }
        },
    )?;
    Ok(LriFrame {
        protocol: p.clone(),
        sol,
        omega_i: 1.0,
        ode: *opts,
    })
}

/// `ψ₁`, `ψ₂` for given angles.
pub fn eigenstates_of(eta: f64, zeta: f64) -> (ComplexVec2, ComplexVec2) {
    let (s, c) = eta.sin_cos();
    let ph = C64::from_polar(1.0, zeta);
    (
        ComplexVec2::new(ph * c, C64::new(s, 0.0)),
        ComplexVec2::new(ph * s, C64::new(-c, 0.0)),
    )
}

impl LriFrame {
    pub fn protocol(&self) -> &DrivingProtocol {
        &self.protocol
    }

    /// Accepted integrator nodes.
    pub fn grid(&self) -> &[f64] {
        &self.sol.ts
    }

    pub fn t_start(&self) -> f64 {
        self.sol.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn check_range(&self, t: f64) -> Result<(), LriError> {
        let slack = 1e-9 * (self.t_end() - self.t_start()).max(1.0);
        if !(t >= self.t_start() - slack && t <= self.t_end() + slack) {
            return Err(LriError::OutOfRange {
                t,
                start: self.t_start(),
                end: self.t_end(),
            });
        }
        Ok(())
    }

    pub fn state(&self, t: f64) -> Result<LriState, LriError> {
        self.check_range(t)?;
        Ok(LriState::from_array(&self.sol.eval(t)))
    }

    /// State at the `i`-th grid node, exactly as accepted by the integrator.
    pub fn node_state(&self, i: usize) -> LriState {
        LriState::from_array(&self.sol.ys[i])
    }

    /// Frame variables and their derivatives from the equations of motion.
    pub fn state_and_rates(&self, t: f64) -> Result<(LriState, LriRates), LriError> {
        let s = self.state(t)?;
        let d = self.protocol.eval(t)?;
        Ok((s, lri_rates(&d, s.eta, s.zeta)))
    }

    pub fn eigenstates(&self, t: f64) -> Result<(ComplexVec2, ComplexVec2), LriError> {
        let s = self.state(t)?;
        Ok(eigenstates_of(s.eta, s.zeta))
    }

    /// `U(t) = Σ_n e^{iα_n(t)} |ψ_n(t)⟩⟨ψ_n(t_start)|`
    pub fn propagator(&self, t: f64) -> Result<ComplexMat2, LriError> {
        let s = self.state(t)?;
        let s0 = self.node_state(0);
        let (a1, a2) = eigenstates_of(s.eta, s.zeta);
        let (b1, b2) = eigenstates_of(s0.eta, s0.zeta);
        Ok(a1.outer(&b1).scale(C64::from_polar(1.0, s.alpha1))
            + a2.outer(&b2).scale(C64::from_polar(1.0, s.alpha2)))
    }

    /// `I(t) = Ω_I (|ψ₁⟩⟨ψ₁| − |ψ₂⟩⟨ψ₂|)`
    pub fn invariant_at(&self, t: f64) -> Result<ComplexMat2, LriError> {
        let (p1, p2) = self.eigenstates(t)?;
        Ok((p1.projector() - p2.projector()).scale_real(self.omega_i))
    }

    /// `‖i ∂_t I − [H, I]‖_F` with a centered difference of step `h`.
    pub fn invariant_residual(&self, t: f64, h: f64) -> Result<f64, LriError> {
        let di = (self.invariant_at(t + h)? - self.invariant_at(t - h)?).scale_real(0.5 / h);
        let h_s = self.protocol.hamiltonian(t)?;
        let r = di.scale(I) - commutator(&h_s, &self.invariant_at(t)?);
        Ok(r.frobenius_norm())
    }

    /// Residuals `|η' − Ω sin ζ|` and `|sin 2η (2Δ + ζ') − 2Ω cos 2η cos ζ|`
    /// with `η'`, `ζ'` from 5-point differences of the interpolant.
    pub fn geq_residual(&self, t: f64, h: f64) -> Result<(f64, f64), LriError> {
        let f = |k: f64| self.state(t + k * h);
        let (m2, m1, p1, p2) = (f(-2.0)?, f(-1.0)?, f(1.0)?, f(2.0)?);
        let d_eta = (m2.eta - 8.0 * m1.eta + 8.0 * p1.eta - p2.eta) / (12.0 * h);
        let d_zeta = (m2.zeta - 8.0 * m1.zeta + 8.0 * p1.zeta - p2.zeta) / (12.0 * h);
        let s = self.state(t)?;
        let d = self.protocol.eval(t)?;
        Ok(geq_residual_of(&d, s.eta, s.zeta, d_eta, d_zeta))
    }

    pub fn eigenbasis(&self) -> LriEigenbasis {
        let states = self
            .sol
            .ys
            .iter()
            .map(|y| eigenstates_of(y[0], y[1]))
            .collect();
        LriEigenbasis {
            ts: self.sol.ts.clone(),
            states,
            omega_i: self.omega_i,
        }
    }

    /// Smallest `|sin 2η|` over the grid nodes.
    pub fn min_abs_sin2eta(&self) -> f64 {
        self.sol
            .ys
            .iter()
            .map(|y| (2.0 * y[0]).sin().abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Residuals of the frame equations for supplied derivatives.
pub fn geq_residual_of(
    d: &DriveSample,
    eta: f64,
    zeta: f64,
    d_eta: f64,
    d_zeta: f64,
) -> (f64, f64) {
    let (s2, c2) = (2.0 * eta).sin_cos();
    let (sz, cz) = zeta.sin_cos();
    (
        (d_eta - d.omega * sz).abs(),
        (s2 * (2.0 * d.delta + d_zeta) - 2.0 * d.omega * c2 * cz).abs(),
    )
}

/// Invariant eigenstates at every grid node.
#[derive(Debug, Clone)]
pub struct LriEigenbasis {
    pub ts: Vec<f64>,
    pub states: Vec<(ComplexVec2, ComplexVec2)>,
    pub omega_i: f64,
}

impl LriEigenbasis {
    /// Largest deviation from orthonormality over all nodes.
    pub fn orthonormality_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|(a, b)| {
                (a.norm_sqr() - 1.0)
                    .abs()
                    .max((b.norm_sqr() - 1.0).abs())
                    .max(a.inner(b).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Every consecutive overlap `⟨ψ_k(t_i)|ψ_k(t_{i+1})⟩` has positive real part.
    pub fn is_continuous(&self) -> bool {
        self.states
            .windows(2)
            .all(|w| w[0].0.inner(&w[1].0).re > 0.0 && w[0].1.inner(&w[1].1).re > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::rk4;
    use crate::qlinalg::{IDENTITY, SIGMA_Z};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn sine_protocol() -> DrivingProtocol {
        DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap()
    }

    #[test]
    fn free_precession_is_linear_in_zeta() {
        let p = DrivingProtocol::constant(1.3, 0.0, 0.0, 4.0).unwrap();
        let f = solve_lri(&p, (0.4, FRAC_PI_2), &OdeOptions::default()).unwrap();
        for k in 0..=40 {
            let t = 0.1 * k as f64;
            let s = f.state(t).unwrap();
            assert!((s.eta - 0.4).abs() < 1e-12);
            assert!((s.zeta - (FRAC_PI_2 - 2.6 * t)).abs() < 1e-9);
        }
    }

    #[test]
    fn adiabatic_point_is_fixed() {
        let p = DrivingProtocol::constant(0.7, 1.1, 0.0, 10.0).unwrap();
        let init = adiabatic_init(&p).unwrap();
        assert!(((2.0 * init.0).tan() - 1.1 / 0.7).abs() < 1e-12);
        let f = solve_lri(&p, init, &OdeOptions::default()).unwrap();
        for &t in f.grid() {
            let s = f.state(t).unwrap();
            assert!((s.eta - init.0).abs() < 1e-12 && s.zeta.abs() < 1e-12);
        }
    }

    #[test]
    fn adiabatic_point_is_ground_state() {
        for (d, o) in [(1.0, 0.5), (-0.4, 2.0), (0.3, -1.2), (0.0, 1.0)] {
            let (eta, zeta) = adiabatic_point(d, o).unwrap();
            let (psi1, _) = eigenstates_of(eta, zeta);
            let h = ComplexMat2::pauli_combination(o, 0.0, d);
            let e = h.sandwich(&psi1, &psi1).re;
            assert!((e + f64::hypot(d, o)).abs() < 1e-12, "({d}, {o})");
        }
        assert!(matches!(
            adiabatic_point(0.0, 0.0),
            Err(LriError::DegenerateDrive)
        ));
    }

    #[test]
    fn sine_frame_agrees_with_fine_rk4() {
        let p = sine_protocol();
        let init = adiabatic_init(&p).unwrap();
        let f = solve_lri(&p, init, &OdeOptions::default()).unwrap();
        let ys = rk4(
            |t, y: &[f64; 4]| {
                let r = lri_rates(&p.eval(t)?, y[0], y[1]);
                Ok::<_, LriError>([r.d_eta, r.d_zeta, r.d_alpha1, r.d_alpha2])
            },
            p.t_start,
            [init.0, init.1, 0.0, 0.0],
            f.grid(),
            1e-5,
        )
        .unwrap();
        for (i, y) in ys.iter().enumerate() {
            let s = f.node_state(i);
            let err = (s.eta - y[0])
                .abs()
                .max((s.zeta - y[1]).abs())
                .max((s.alpha1 - y[2]).abs())
                .max((s.alpha2 - y[3]).abs());
            assert!(err < 1e-7, "node {i}: {err:e}");
        }
    }

    #[test]
    fn eigenstate_examples() {
        let (a, b) = eigenstates_of(0.0, 0.0);
        assert_eq!(a, ComplexVec2::real(1.0, 0.0));
        assert_eq!(b, ComplexVec2::real(0.0, -1.0));
        let (a, _) = eigenstates_of(FRAC_PI_4, 0.0);
        assert!((a - ComplexVec2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn propagator_starts_at_identity() {
        let p = sine_protocol();
        let f = solve_lri(&p, adiabatic_init(&p).unwrap(), &OdeOptions::default()).unwrap();
        assert!(f.propagator(0.0).unwrap().max_abs_diff(&IDENTITY) < 1e-15);
    }

    #[test]
    fn propagator_of_static_detuning() {
        let d0 = 0.8;
        let p = DrivingProtocol::constant(d0, 0.0, 0.0, 5.0).unwrap();
        let f = solve_lri(&p, (0.3, FRAC_PI_2), &OdeOptions::default()).unwrap();
        for k in 1..=10 {
            let t = 0.5 * k as f64;
            let u = f.propagator(t).unwrap();
            let exact = ComplexMat2::new(
                C64::from_polar(1.0, -d0 * t),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::from_polar(1.0, d0 * t),
            );
            let fid = (exact.dagger() * u).trace().norm() / 2.0;
            assert!((fid - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn invariant_examples() {
        let p = DrivingProtocol::constant(1.0, 0.0, 0.0, 1.0).unwrap();
        let f = solve_lri(&p, (0.5, FRAC_PI_2), &OdeOptions::default()).unwrap();
        let (a, b) = eigenstates_of(0.0, 0.0);
        let inv = a.projector() - b.projector();
        assert!(inv.max_abs_diff(&SIGMA_Z) < 1e-15);
        for &t in f.grid() {
            let ev = f.invariant_at(t).unwrap().hermitian_eigenvalues();
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_start_is_rejected() {
        let p = DrivingProtocol::constant(1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            solve_lri(&p, (0.0, 0.0), &OdeOptions::default()),
            Err(LriError::SingularEta { .. })
        ));
    }

    #[test]
    fn singular_crossing_reports_time() {
        // η' = Ω sin ζ with ζ = π/2 and Δ = 0 drives η linearly through π/2.
        let p = DrivingProtocol::constant(0.0, 1.0, 0.0, 2.0).unwrap();
        match solve_lri(&p, (1.0, FRAC_PI_2), &OdeOptions::default().h_max(0.01)) {
            Err(LriError::SingularEta { t }) => assert!((t - (FRAC_PI_2 - 1.0)).abs() < 0.02),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eigenbasis_is_orthonormal_and_continuous() {
        let p = DrivingProtocol::landau_zener(1.0, 2.0, Some(10.0)).unwrap();
        let f = solve_lri(&p, adiabatic_init(&p).unwrap(), &OdeOptions::default()).unwrap();
        let b = f.eigenbasis();
        assert!(b.orthonormality_defect() < 1e-12);
        assert!(b.is_continuous());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn invariant_and_phase_properties(d0 in 0.3..1.5f64, o0 in 0.5..1.5f64, wc in 0.5..1.5f64, eta_off in -0.2..0.2f64) {
            let p = DrivingProtocol::sine_squared(d0, o0, wc, 0.2, 3.0).unwrap();
            let (eta0, zeta0) = adiabatic_init(&p).unwrap();
            let f = solve_lri(&p, (eta0 + eta_off, zeta0), &OdeOptions::default()).unwrap();
            let h = 1e-5;
            let u0 = f.propagator(f.t_start()).unwrap();
            prop_assert!(u0.max_abs_diff(&IDENTITY) < 1e-14);
            let psi0 = ComplexVec2::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
            let inv0 = f.invariant_at(f.t_start()).unwrap().sandwich(&psi0, &psi0).re;
            let grid = f.grid().to_vec();
            for &t in &grid[1..grid.len() - 1] {
                let u = f.propagator(t).unwrap();
                prop_assert!(u.unitarity_defect() <= 1e-8);
                prop_assert!(f.invariant_residual(t, h).unwrap() <= 1e-6);
                // Schrödinger residual of a propagated superposition
                let dpsi = (f.propagator(t + h).unwrap().apply(&psi0) - f.propagator(t - h).unwrap().apply(&psi0))
                    .scale(C64::new(0.5 / h, 0.0));
                let hpsi = p.hamiltonian(t).unwrap().apply(&u.apply(&psi0));
                prop_assert!((dpsi.scale(I) - hpsi).norm() <= 1e-5);
                let psi = u.apply(&psi0);
                let inv = f.invariant_at(t).unwrap().sandwich(&psi, &psi).re;
                prop_assert!((inv - inv0).abs() <= 1e-6);
            }
        }
    }
}
