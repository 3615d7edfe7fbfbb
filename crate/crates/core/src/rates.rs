//! Decoherence rates and Lamb-shift coefficients of the secular master
//! equation.
//!
//! Every [`RateSet`] holds the coefficients of the dissipators `D[Σ⁺]`,
//! `D[Σ⁻]`, `D[Σ_z]` and of the Lamb-shift Hamiltonian
//! `λ⁻Σ⁺Σ⁻ + λ⁺Σ⁻Σ⁺ + λ_dΣ_z²`.

use thiserror::Error;

use crate::bath::{BathError, BathSpec};
use crate::coupling::{matrix_elements, Channel, Coupling, CouplingError};
use crate::lri::{LriError, LriFrame, LriState};
use crate::qlinalg::C64;
use crate::quad::{integrate, QuadError, QuadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("closed-form dephasing rates need T = 0 (got T = {0})")]
    FiniteTemperatureDephasing(f64),
    #[error("memory-kernel cutoff s_max must be positive (got {0})")]
    BadCutoff(f64),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Lri(#[from] LriError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Prefactor convention of the slow-phase rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateConvention {
    /// `Γ_mn = 2ξ²Λ̄^R(α_mn) = 2πξ²J(α)(N(α) + 1)`
    Gadi,
    /// `Γ_mn = πξ²J(α)(N(α) + 1)`, half of [`RateConvention::Gadi`]
    LzSection,
}

impl RateConvention {
    pub fn name(self) -> &'static str {
        match self {
            RateConvention::Gadi => "gadi",
            RateConvention::LzSection => "lz_section",
        }
    }

    fn factor(self) -> f64 {
        match self {
            RateConvention::Gadi => 2.0,
            RateConvention::LzSection => 1.0,
        }
    }
}

/// Enabled coupling channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channels {
    pub x: bool,
    pub y: bool,
}

impl Channels {
    pub const X: Channels = Channels { x: true, y: false };
    pub const Y: Channels = Channels { x: false, y: true };
    pub const XY: Channels = Channels { x: true, y: true };

    pub fn enabled(&self) -> impl Iterator<Item = Channel> + '_ {
        Channel::BOTH.into_iter().filter(|c| match c {
            Channel::X => self.x,
            Channel::Y => self.y,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub t: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_d: f64,
    pub lamb_plus: f64,
    pub lamb_minus: f64,
    pub lamb_d: f64,
    /// `α₁₂` of each channel; `None` when the channel is off or degenerate
    pub alpha12_x: Option<f64>,
    pub alpha12_y: Option<f64>,
    /// set when a memory-kernel rate came out negative
    pub negative: bool,
}

impl RateSet {
    pub fn zero(t: f64) -> Self {
        Self {
            t,
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            gamma_d: 0.0,
            lamb_plus: 0.0,
            lamb_minus: 0.0,
            lamb_d: 0.0,
            alpha12_x: None,
            alpha12_y: None,
            negative: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.gamma_plus,
            self.gamma_minus,
            self.gamma_d,
            self.lamb_plus,
            self.lamb_minus,
            self.lamb_d,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    fn set_alpha(&mut self, c: Channel, a: Option<f64>) {
        match c {
            Channel::X => self.alpha12_x = a,
            Channel::Y => self.alpha12_y = a,
        }
    }

    /// Linear blend `(1 − w)·a + w·b` of the rate fields.
    pub fn lerp(a: &RateSet, b: &RateSet, t: f64) -> RateSet {
        let w = if b.t == a.t {
            0.0
        } else {
            ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0)
        };
        let mix = |x: f64, y: f64| x + w * (y - x);
        let mix_opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => Some(mix(x, y)),
            _ => None,
        };
        RateSet {
            t,
            gamma_plus: mix(a.gamma_plus, b.gamma_plus),
            gamma_minus: mix(a.gamma_minus, b.gamma_minus),
            gamma_d: mix(a.gamma_d, b.gamma_d),
            lamb_plus: mix(a.lamb_plus, b.lamb_plus),
            lamb_minus: mix(a.lamb_minus, b.lamb_minus),
            lamb_d: mix(a.lamb_d, b.lamb_d),
            alpha12_x: mix_opt(a.alpha12_x, b.alpha12_x),
            alpha12_y: mix_opt(a.alpha12_y, b.alpha12_y),
            negative: a.negative || b.negative,
        }
    }
}

/// Slow-phase rates summed over the enabled channels. A degenerate channel
/// (`ξ₁₂ = 0`) contributes nothing to `Γ±`. `Γ_d` always uses the
/// [`RateConvention::Gadi`] prefactor.
pub fn slow_phase_rates(
    coupling: &Coupling<'_>,
    bath: &BathSpec,
    t: f64,
    channels: Channels,
    convention: RateConvention,
) -> Result<RateSet, RateError> {
    let amp = coupling.amplitudes(t)?;
    let mut out = RateSet::zero(t);
    let lambda0 = bath.lambda_real(0.0)?;
    for c in channels.enabled() {
        let (xi11, xi12) = amp.channel(c);
        out.gamma_d += 2.0 * xi11 * xi11 * lambda0;
        match coupling.frequency(c, t) {
            Ok(a) => {
                let f = convention.factor() * xi12 * xi12;
                out.gamma_minus += f * bath.lambda_real(a)?;
                out.gamma_plus += f * bath.lambda_real(-a)?;
                out.set_alpha(c, Some(a));
            }
            Err(CouplingError::DegenerateChannel { .. }) => out.set_alpha(c, None),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Landau-Zener rates: `x` coupling only, `πξ²J(α)(N(α) + 1)` per direction.
/// At `T = 0` exactly one of `Γ⁻` (for `α₁₂ > 0`) and `Γ⁺` (for `α₁₂ < 0`)
/// is nonzero and equals `κπξ₁₂²|α₁₂|e^{−|α₁₂|/Ω_c}`.
pub fn lz_rates(coupling: &Coupling<'_>, bath: &BathSpec, t: f64) -> Result<RateSet, RateError> {
    slow_phase_rates(coupling, bath, t, Channels::X, RateConvention::LzSection)
}

/// `(Γ_D^R, Γ_D^I)` of the zero-temperature dephasing model.
pub fn dephasing_rates(bath: &BathSpec, t: f64) -> Result<(f64, f64), RateError> {
    if bath.temperature > 0.0 {
        return Err(RateError::FiniteTemperatureDephasing(bath.temperature));
    }
    let wc = bath.omega_c;
    let den = wc * wc * t * t + 1.0;
    Ok((
        bath.kappa * wc * wc * t / den,
        bath.kappa * wc * wc * wc * t * t / den,
    ))
}

/// Dephasing-model rates as a [`RateSet`]: `D[Σ_z]` carries `Γ_D^R/2`, so a
/// coherence decays by `exp(−∫Γ_D^R)`. The Lamb term `Γ_D^I Σ_z²` is
/// proportional to the identity.
pub fn dephasing_rate_set(bath: &BathSpec, t: f64) -> Result<RateSet, RateError> {
    let (re, im) = dephasing_rates(bath, t)?;
    let mut out = RateSet::zero(t);
    out.gamma_d = 0.5 * re;
    out.lamb_d = im;
    Ok(out)
}

/// System operator entering the memory kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelOperator {
    Channel(Channel),
    /// The dephasing-model coupling `I/Ω_I`, diagonal in the invariant basis.
    Dephasing,
}

fn interaction_elements(op: KernelOperator, s: &LriState) -> [[C64; 2]; 2] {
    let m = match op {
        KernelOperator::Channel(c) => matrix_elements(c, s.eta, s.zeta),
        KernelOperator::Dephasing => {
            let z = C64::new(0.0, 0.0);
            [[C64::new(1.0, 0.0), z], [z, C64::new(-1.0, 0.0)]]
        }
    };
    let alpha = [s.alpha1, s.alpha2];
    let mut out = m;
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= C64::from_polar(1.0, alpha[j] - alpha[i]);
        }
    }
    out
}

/// Default memory-kernel cutoff `min(t − t_start, 10/Ω_c)`.
pub fn default_s_max(frame: &LriFrame, bath: &BathSpec, t: f64) -> f64 {
    (t - frame.t_start()).min(10.0 / bath.omega_c)
}

/// `Γ_{mn,m'n'}(t) = ∫₀^{s_max} ds conj(Ã_{m'n'}(t)) Ã_{mn}(t − s) C(s)` with
/// `Ã_mn = ξ_mn e^{iθ_mn}`. Indices are 1-based. `s_max = None` applies
/// [`default_s_max`]; an explicit cutoff is clipped to the available history.
#[allow(clippy::too_many_arguments)]
pub fn memory_kernel_rate(
    frame: &LriFrame,
    bath: &BathSpec,
    op: KernelOperator,
    t: f64,
    s_max: Option<f64>,
    mn: (usize, usize),
    mn2: (usize, usize),
    quad: &QuadOptions,
) -> Result<C64, RateError> {
    if let Some(s) = s_max {
        if !(s > 0.0) {
            return Err(RateError::BadCutoff(s));
        }
    }
    let s_max = s_max
        .unwrap_or_else(|| default_s_max(frame, bath, t))
        .min(t - frame.t_start());
    if s_max <= 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let now = interaction_elements(op, &frame.state(t)?)[mn2.0 - 1][mn2.1 - 1].conj();
    if now.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut failure: Option<RateError> = None;
    let mut record = |e: RateError| {
        if failure.is_none() {
            failure = Some(e);
        }
    };
    // split at multiples of the correlation time so the peak near s = 0 is resolved
    let tc = 1.0 / bath.omega_c;
    let mut edges = vec![0.0];
    let mut e = tc;
    while e < s_max {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(s_max);
    let mut acc = C64::new(0.0, 0.0);
    for w in edges.windows(2) {
        acc += integrate(
            |s| {
                let past = match frame.state(t - s) {
                    Ok(st) => interaction_elements(op, &st)[mn.0 - 1][mn.1 - 1],
                    Err(e) => {
                        record(e.into());
                        return C64::new(0.0, 0.0);
                    }
                };
                match bath.correlation(s) {
                    Ok(c) => now * past * c,
                    Err(e) => {
                        record(e.into());
                        C64::new(0.0, 0.0)
                    }
                }
            },
            w[0],
            w[1],
            quad,
        )?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

/// Secular rates from the memory kernel: `Γ⁻ = 2 Re Γ_{12,12}`,
/// `Γ⁺ = 2 Re Γ_{21,21}`, `Γ_d = 2 Re Γ_{11,11}`, with Lamb coefficients from
/// the imaginary parts. Negative rates are kept and flagged.
pub fn memory_kernel_rate_set(
    coupling: &Coupling<'_>,
    bath: &BathSpec,
    ops: &[KernelOperator],
    t: f64,
    s_max: Option<f64>,
    quad: &QuadOptions,
) -> Result<RateSet, RateError> {
    let frame = coupling.frame();
    let mut out = RateSet::zero(t);
    for &op in ops {
        let g11 = memory_kernel_rate(frame, bath, op, t, s_max, (1, 1), (1, 1), quad)?;
        out.gamma_d += 2.0 * g11.re;
        out.lamb_d += g11.im;
        if let KernelOperator::Channel(c) = op {
            let g12 = memory_kernel_rate(frame, bath, op, t, s_max, (1, 2), (1, 2), quad)?;
            let g21 = memory_kernel_rate(frame, bath, op, t, s_max, (2, 1), (2, 1), quad)?;
            out.gamma_minus += 2.0 * g12.re;
            out.gamma_plus += 2.0 * g21.re;
            out.lamb_minus += g12.im;
            out.lamb_plus += g21.im;
            out.set_alpha(c, coupling.frequency(c, t).ok());
        }
    }
    out.negative = out.gamma_plus < 0.0 || out.gamma_minus < 0.0 || out.gamma_d < 0.0;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::DrivingProtocol;
    use crate::lri::{adiabatic_init, solve_lri};
    use crate::ode::OdeOptions;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn frame_of(p: &DrivingProtocol) -> LriFrame {
        solve_lri(p, adiabatic_init(p).unwrap(), &OdeOptions::default()).unwrap()
    }

    #[test]
    fn adiabatic_y_rates_reduce_to_thermal_form() {
        let p = DrivingProtocol::constant(0.6, 0.8, 0.0, 2.0).unwrap();
        let f = frame_of(&p);
        let c = Coupling::new(&f);
        let b = BathSpec::new(0.3, 8.0, 0.7, 0.0).unwrap();
        let r = slow_phase_rates(&c, &b, 1.0, Channels::Y, RateConvention::Gadi).unwrap();
        let a = r.alpha12_y.unwrap();
        let g0 = |w: f64| PI * b.spectral_density(w);
        let expect_minus = 2.0 * g0(a) * (b.planck(a).unwrap() + 1.0);
        let expect_plus = 2.0 * g0(-a) * (b.planck(-a).unwrap() + 1.0);
        assert!((r.gamma_minus - expect_minus).abs() < 1e-12);
        assert!((r.gamma_plus - expect_plus).abs() < 1e-12);
        assert!(r.gamma_d.abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_decays_toward_psi1() {
        let p = DrivingProtocol::landau_zener(1.0, 2.0, Some(10.0)).unwrap();
        let f = frame_of(&p);
        let c = Coupling::new(&f);
        let b = BathSpec::zero_temperature(0.1, 8.0).unwrap();
        for t in [-8.0, -5.0, -2.0, 5.0] {
            let r = slow_phase_rates(&c, &b, t, Channels::X, RateConvention::Gadi).unwrap();
            let a = r.alpha12_x.unwrap();
            assert!(a > 0.0);
            assert!(r.gamma_minus > 0.0);
            assert_eq!(r.gamma_plus, 0.0);
        }
    }

    #[test]
    fn degenerate_channel_contributes_nothing() {
        let p = DrivingProtocol::constant(0.0, 1.0, 0.0, 1.0).unwrap();
        let f = solve_lri(&p, (PI / 4.0, 0.0), &OdeOptions::default()).unwrap();
        let c = Coupling::new(&f);
        let b = BathSpec::new(0.3, 8.0, 0.5, 0.0).unwrap();
        let r = slow_phase_rates(&c, &b, 0.5, Channels::X, RateConvention::Gadi).unwrap();
        assert_eq!((r.gamma_plus, r.gamma_minus), (0.0, 0.0));
        assert!(r.alpha12_x.is_none());
    }

    #[test]
    fn lz_rate_examples() {
        let b = BathSpec::zero_temperature(0.1, 8.0).unwrap();
        // κπξ²|α|e^{−|α|/Ω_c} for ξ = 1, α = 2
        let g = PI * b.spectral_density(2.0) * (b.planck(2.0).unwrap() + 1.0);
        assert!((g - 0.4893).abs() < 1e-4);
        let p = DrivingProtocol::landau_zener(1.0, 2.0, Some(10.0)).unwrap();
        let f = frame_of(&p);
        let c = Coupling::new(&f);
        let r = lz_rates(&c, &b, -3.0).unwrap();
        let a = r.alpha12_x.unwrap();
        let xi12 = c.amplitudes(-3.0).unwrap().x12;
        let closed = 0.1 * PI * xi12 * xi12 * a.abs() * (-a.abs() / 8.0).exp();
        assert!(a > 0.0);
        assert!((r.gamma_minus - closed).abs() < 1e-12);
        assert_eq!(r.gamma_plus, 0.0);
    }

    #[test]
    fn lz_switch_at_zero_frequency_is_continuous() {
        let b = BathSpec::zero_temperature(0.1, 8.0).unwrap();
        let rate = |a: f64| -> (f64, f64) {
            let down = PI * b.spectral_density(a) * (b.planck(a).unwrap() + 1.0);
            let up = PI * b.spectral_density(-a) * (b.planck(-a).unwrap() + 1.0);
            (down, up)
        };
        let (d, u) = rate(1e-9);
        assert!(d > 0.0 && u == 0.0 && d < 1e-8);
        let (d, u) = rate(-1e-9);
        assert!(u > 0.0 && d == 0.0 && u < 1e-8);
    }

    #[test]
    fn dephasing_rate_examples() {
        let b = BathSpec::zero_temperature(1.0, 20.0).unwrap();
        assert_eq!(dephasing_rates(&b, 0.0).unwrap(), (0.0, 0.0));
        let (re, im) = dephasing_rates(&b, 1e7).unwrap();
        assert!(re < 1e-5 && (im - 20.0).abs() < 1e-10);
        let (re, _) = dephasing_rates(&b, 1.0).unwrap();
        assert!((re - 400.0 / 401.0).abs() < 1e-15);
        let hot = BathSpec::new(1.0, 20.0, 0.1, 0.0).unwrap();
        assert!(matches!(
            dephasing_rates(&hot, 1.0),
            Err(RateError::FiniteTemperatureDephasing(_))
        ));
    }

    fn sine_frame() -> LriFrame {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        frame_of(&p)
    }

    #[test]
    fn memory_kernel_reproduces_dephasing_closed_form() {
        let f = sine_frame();
        let b = BathSpec::zero_temperature(1.0, 20.0).unwrap();
        let q = QuadOptions::default();
        for k in 1..=20 {
            let t = (0.5 + 9.5 * k as f64 / 20.0) / 20.0;
            let g = memory_kernel_rate(
                &f,
                &b,
                KernelOperator::Dephasing,
                t,
                Some(t),
                (1, 1),
                (1, 1),
                &q,
            )
            .unwrap();
            let (re, im) = dephasing_rates(&b, t).unwrap();
            assert!((g.re - re).abs() <= 1e-3 * re, "t = {t}");
            assert!((g.im + im).abs() <= 1e-3 * im);
        }
    }

    #[test]
    fn memory_kernel_edge_cases() {
        let f = sine_frame();
        let b = BathSpec::zero_temperature(1.0, 20.0).unwrap();
        let q = QuadOptions::default();
        let op = KernelOperator::Channel(Channel::Y);
        assert!(matches!(
            memory_kernel_rate(&f, &b, op, 0.3, Some(0.0), (1, 1), (1, 1), &q),
            Err(RateError::BadCutoff(_))
        ));
        assert_eq!(
            memory_kernel_rate(&f, &b, op, 0.0, None, (1, 2), (1, 2), &q).unwrap(),
            C64::new(0.0, 0.0)
        );
        // ξ^y₁₁ ≡ 0 on the adiabatic frame of a static drive
        let p = DrivingProtocol::constant(0.6, 0.8, 0.0, 2.0).unwrap();
        let f = frame_of(&p);
        let g = memory_kernel_rate(&f, &b, op, 1.5, None, (1, 1), (1, 1), &q).unwrap();
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn memory_kernel_self_convergence() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 3.0).unwrap();
        let f = frame_of(&p);
        let b = BathSpec::zero_temperature(1.0, 20.0).unwrap();
        let op = KernelOperator::Channel(Channel::X);
        let coarse = memory_kernel_rate(
            &f,
            &b,
            op,
            2.0,
            None,
            (1, 1),
            (1, 1),
            &QuadOptions::new(1e-8, 1e-8),
        )
        .unwrap();
        let fine = memory_kernel_rate(
            &f,
            &b,
            op,
            2.0,
            None,
            (1, 1),
            (1, 1),
            &QuadOptions::new(1e-9, 1e-9),
        )
        .unwrap();
        assert!((coarse - fine).norm() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn detailed_balance(d0 in 0.3..1.5f64, o0 in 0.3..1.5f64, temp in 0.2..3.0f64, conv in 0..2usize) {
            let p = DrivingProtocol::sine_squared(d0, o0, 0.5, 0.5, 3.0).unwrap();
            let f = frame_of(&p);
            let c = Coupling::new(&f);
            let b = BathSpec::new(0.2, 8.0, temp, 0.0).unwrap();
            let convention = [RateConvention::Gadi, RateConvention::LzSection][conv];
            for chans in [Channels::X, Channels::Y] {
                for &t in f.grid() {
                    let r = slow_phase_rates(&c, &b, t, chans, convention).unwrap();
                    prop_assert!(r.gamma_plus >= 0.0 && r.gamma_minus >= 0.0 && r.gamma_d >= 0.0);
                    let a = match r.alpha12_x.or(r.alpha12_y) { Some(a) => a, None => continue };
                    if r.gamma_plus > 1e-12 && r.gamma_minus > 1e-12 {
                        let ratio = r.gamma_minus / r.gamma_plus;
                        let expect = (a / temp).exp();
                        prop_assert!((ratio - expect).abs() <= 1e-6 * expect);
                    }
                }
            }
        }
    }
}
