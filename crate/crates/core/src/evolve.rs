//! Time integrators: closed Schrödinger evolution, the driven master equation
//! in the Schrödinger picture, the adiabatic master equation, the exact
//! dephasing solution and the inertial-limit consistency checks.
//!
//! Master equations are integrated as 8 real components of `ρ`:
//!
//! ```text
//! ρ' = −i[H + H_LS, ρ] + Γ⁺D[Σ⁺]ρ + Γ⁻D[Σ⁻]ρ + Γ_d D[Σ_z]ρ
//! D[L]ρ = LρL† − ½{L†L, ρ}
//! ```
//!
//! with `Σ⁻ = |ψ₁⟩⟨ψ₂|`, `Σ⁺ = |ψ₂⟩⟨ψ₁|`, `Σ_z = |ψ₂⟩⟨ψ₂| − |ψ₁⟩⟨ψ₁|`.

use thiserror::Error;

use crate::bath::BathSpec;
use crate::coupling::Coupling;
use crate::driving::{DriveSample, DrivingError, DrivingProtocol};
use crate::lri::{default_h_max, eigenstates_of, geq_residual_of, LriError, LriFrame};
use crate::ode::{dopri5, OdeError, OdeOptions};
use crate::oracles::{dephasing_gamma_e, OracleError};
use crate::qlinalg::{
    anticommutator, commutator, ComplexMat2, ComplexVec2, DensityMatrix, LinalgError, C64, I,
    SIGMA_Y,
};
use crate::quad::QuadOptions;
use crate::rates::{
    dephasing_rate_set, lz_rates, memory_kernel_rate_set, slow_phase_rates, Channels,
    KernelOperator, RateConvention, RateError, RateSet,
};

/// Minimum eigenvalue below which a trajectory is flagged non-positive.
pub const POSITIVITY_TOL: f64 = 1e-6;

/// Tolerance on `μ(t)` drift for an inertial protocol.
pub const INERTIAL_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("invalid initial state: {0}")]
    InvalidState(#[from] LinalgError),
    #[error("degenerate Hamiltonian (Δ = Ω = 0) at t = {t}")]
    DegenerateHamiltonian { t: f64 },
    #[error("protocol is not inertial: μ drifts by {drift:e} over the window")]
    ProtocolNotInertial { drift: f64 },
    #[error("output time {t} outside [{start}, {end}]")]
    OutputOutOfRange { t: f64, start: f64, end: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Lri(#[from] LriError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Driving(#[from] DrivingError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl EvolveError {
    /// Failures of the numerical integration itself (as opposed to bad input).
    pub fn is_integrator_failure(&self) -> bool {
        match self {
            EvolveError::Ode(_) => true,
            EvolveError::Lri(e) => matches!(e, LriError::Ode(_) | LriError::SingularEta { .. }),
            EvolveError::Rate(RateError::Lri(e)) => {
                matches!(e, LriError::Ode(_) | LriError::SingularEta { .. })
            }
            EvolveError::Rate(RateError::Quad(_)) => true,
            _ => false,
        }
    }
}

/// Times at which a trajectory is reported.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputGrid {
    /// `n` equal intervals, `n + 1` points including both ends
    Uniform(usize),
    Times(Vec<f64>),
}

impl OutputGrid {
    pub fn times(&self, t0: f64, t1: f64) -> Result<Vec<f64>, EvolveError> {
        match self {
            OutputGrid::Uniform(n) => {
                let n = (*n).max(1);
                Ok((0..=n)
                    .map(|k| {
                        if k == n {
                            t1
                        } else {
                            t0 + (t1 - t0) * k as f64 / n as f64
                        }
                    })
                    .collect())
            }
            OutputGrid::Times(ts) => {
                let slack = 1e-9 * (t1 - t0).abs().max(1.0);
                for &t in ts {
                    if !(t >= t0 - slack && t <= t1 + slack) {
                        return Err(EvolveError::OutputOutOfRange {
                            t,
                            start: t0,
                            end: t1,
                        });
                    }
                }
                Ok(ts.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    pub output: OutputGrid,
    /// include `H_LS` in the coherent part
    pub lamb_shift: bool,
    /// quadrature settings for memory-kernel rates
    pub quad: QuadOptions,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            output: OutputGrid::Uniform(200),
            lamb_shift: false,
            quad: QuadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub rho: DensityMatrix,
    /// state vector of pure-state runs
    pub psi: Option<ComplexVec2>,
    pub rates: Option<RateSet>,
    pub trace_err: f64,
    pub herm_err: f64,
    pub min_eig: f64,
}

impl TrajectoryPoint {
    fn new(t: f64, rho: DensityMatrix, psi: Option<ComplexVec2>, rates: Option<RateSet>) -> Self {
        Self {
            t,
            trace_err: rho.trace_error(),
            herm_err: rho.hermiticity_error(),
            min_eig: rho.min_eigenvalue(),
            rho,
            psi,
            rates,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// some output point had an eigenvalue below `−POSITIVITY_TOL`
    pub positivity_violated: bool,
}

impl Trajectory {
    fn from_points(points: Vec<TrajectoryPoint>) -> Self {
        let positivity_violated = points.iter().any(|p| p.min_eig < -POSITIVITY_TOL);
        Self {
            points,
            positivity_violated,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points
            .last()
            .expect("trajectory has at least one point")
    }

    pub fn max_trace_error(&self) -> f64 {
        self.points.iter().map(|p| p.trace_err).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.points.iter().map(|p| p.herm_err).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.min_eig)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest Bloch-component difference against a trajectory on the same grid.
    pub fn bloch_sup_distance(&self, other: &Trajectory) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| {
                crate::qlinalg::bloch_of(&a.rho).max_abs_diff(&crate::qlinalg::bloch_of(&b.rho))
            })
            .fold(0.0, f64::max)
    }

    /// Largest trace distance against a trajectory on the same grid.
    pub fn max_trace_distance(&self, other: &Trajectory) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| a.rho.trace_distance(&b.rho))
            .fold(0.0, f64::max)
    }
}

/// Projector-form jump operators. Phases of the invariant eigenstates drop
/// out of every dissipator, so none are carried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladSet {
    pub sigma_plus: ComplexMat2,
    pub sigma_minus: ComplexMat2,
    pub sigma_z: ComplexMat2,
}

impl LindbladSet {
    pub fn of(psi1: &ComplexVec2, psi2: &ComplexVec2) -> Self {
        Self {
            sigma_minus: psi1.outer(psi2),
            sigma_plus: psi2.outer(psi1),
            sigma_z: psi2.projector() - psi1.projector(),
        }
    }

    /// `H_LS = λ⁻Σ⁺Σ⁻ + λ⁺Σ⁻Σ⁺ + λ_dΣ_z²`
    pub fn lamb_hamiltonian(&self, r: &RateSet) -> ComplexMat2 {
        (self.sigma_plus * self.sigma_minus).scale_real(r.lamb_minus)
            + (self.sigma_minus * self.sigma_plus).scale_real(r.lamb_plus)
            + (self.sigma_z * self.sigma_z).scale_real(r.lamb_d)
    }
}

pub fn lindblad_set(frame: &LriFrame, t: f64) -> Result<LindbladSet, EvolveError> {
    let (p1, p2) = frame.eigenstates(t)?;
    Ok(LindbladSet::of(&p1, &p2))
}

/// `D[L]ρ = LρL† − ½{L†L, ρ}`
pub fn dissipator(l: &ComplexMat2, rho: &ComplexMat2) -> ComplexMat2 {
    let ld = l.dagger();
    *l * *rho * ld - anticommutator(&(ld * *l), rho).scale_real(0.5)
}

/// Right-hand side of the master equation.
pub fn generator(
    h: &ComplexMat2,
    ls: &LindbladSet,
    r: &RateSet,
    lamb_shift: bool,
    rho: &ComplexMat2,
) -> ComplexMat2 {
    let h_tot = if lamb_shift {
        *h + ls.lamb_hamiltonian(r)
    } else {
        *h
    };
    let mut out = commutator(&h_tot, rho).scale(-I);
    if r.gamma_plus != 0.0 {
        out += dissipator(&ls.sigma_plus, rho).scale_real(r.gamma_plus);
    }
    if r.gamma_minus != 0.0 {
        out += dissipator(&ls.sigma_minus, rho).scale_real(r.gamma_minus);
    }
    if r.gamma_d != 0.0 {
        out += dissipator(&ls.sigma_z, rho).scale_real(r.gamma_d);
    }
    out
}

fn mat_to_array(m: &ComplexMat2) -> [f64; 8] {
    DensityMatrix::from_raw(*m).to_array()
}

fn vec_to_array(v: &ComplexVec2) -> [f64; 4] {
    [v.c1.re, v.c1.im, v.c2.re, v.c2.im]
}

fn vec_from_array(y: &[f64; 4]) -> ComplexVec2 {
    ComplexVec2::new(C64::new(y[0], y[1]), C64::new(y[2], y[3]))
}

fn default_ode(p: &DrivingProtocol, ode: &OdeOptions) -> OdeOptions {
    let mut o = *ode;
    if o.h_max.is_none() {
        o.h_max = Some(default_h_max(p));
    }
    o
}

/// Integrates `iψ' = Hψ` over the protocol window.
pub fn schrodinger_evolve(
    p: &DrivingProtocol,
    psi0: &ComplexVec2,
    opts: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    let n = psi0.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(LinalgError::BadTrace(n * n).into());
    }
    let ode = default_ode(p, &opts.ode);
    let sol = dopri5(
        |t, y: &[f64; 4]| {
            let h = p.hamiltonian(t)?;
            let d = h.apply(&vec_from_array(y)).scale(-I);
            Ok::<_, EvolveError>(vec_to_array(&d))
        },
        p.t_start,
        p.t_end,
        vec_to_array(psi0),
        &ode,
        |_, _| Ok(()),
    )?;
    let points = opts
        .output
        .times(p.t_start, p.t_end)?
        .into_iter()
        .map(|t| {
            let psi = vec_from_array(&sol.eval(t));
            TrajectoryPoint::new(t, DensityMatrix::pure(&psi), Some(psi), None)
        })
        .collect();
    Ok(Trajectory::from_points(points))
}

/// Full propagator `U(t)` from `iU' = HU`, `U(t_start) = 1`, at the given times.
pub fn unitary_evolve(
    p: &DrivingProtocol,
    times: &[f64],
    ode: &OdeOptions,
) -> Result<Vec<ComplexMat2>, EvolveError> {
    let ode = default_ode(p, ode);
    let sol = dopri5(
        |t, y: &[f64; 8]| {
            let h = p.hamiltonian(t)?;
            let u = DensityMatrix::from_array(y).mat;
            Ok::<_, EvolveError>(mat_to_array(&(h * u).scale(-I)))
        },
        p.t_start,
        p.t_end,
        mat_to_array(&ComplexMat2::real(1.0, 0.0, 0.0, 1.0)),
        &ode,
        |_, _| Ok(()),
    )?;
    OutputGrid::Times(times.to_vec()).times(p.t_start, p.t_end)?;
    Ok(times
        .iter()
        .map(|&t| DensityMatrix::from_array(&sol.eval(t)).mat)
        .collect())
}

/// Where the master-equation coefficients come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    /// all rates zero: von Neumann evolution
    Zero,
    SlowPhase {
        channels: Channels,
        convention: RateConvention,
    },
    /// `x`-channel sign-switching form
    Lz,
    /// zero-temperature dephasing model
    Dephasing,
    /// secular memory-kernel rates tabulated on a grid and interpolated
    MemoryKernel {
        ops: Vec<KernelOperator>,
        s_max: Option<f64>,
    },
}

struct RateEval<'a> {
    coupling: Coupling<'a>,
    bath: &'a BathSpec,
    source: &'a RateSource,
    table: Vec<RateSet>,
}

impl<'a> RateEval<'a> {
    fn new(
        frame: &'a LriFrame,
        bath: &'a BathSpec,
        source: &'a RateSource,
        quad: &QuadOptions,
    ) -> Result<Self, EvolveError> {
        let coupling = Coupling::new(frame);
        let table = match source {
            RateSource::MemoryKernel { ops, s_max } => {
                let ts = kernel_grid(&coupling, bath)?;
                let rows = crate::par::map(&ts, |&t| {
                    memory_kernel_rate_set(&coupling, bath, ops, t, *s_max, quad)
                });
                rows.into_iter().collect::<Result<Vec<_>, _>>()?
            }
            _ => Vec::new(),
        };
        Ok(Self {
            coupling,
            bath,
            source,
            table,
        })
    }

    fn at(&self, t: f64) -> Result<RateSet, EvolveError> {
        let frame = self.coupling.frame();
        Ok(match self.source {
            RateSource::Zero => RateSet::zero(t),
            RateSource::SlowPhase {
                channels,
                convention,
            } => slow_phase_rates(&self.coupling, self.bath, t, *channels, *convention)?,
            RateSource::Lz => lz_rates(&self.coupling, self.bath, t)?,
            RateSource::Dephasing => {
                let mut r = dephasing_rate_set(self.bath, t - frame.t_start())?;
                r.t = t;
                r
            }
            RateSource::MemoryKernel { .. } => {
                let tab = &self.table;
                let k = tab.partition_point(|r| r.t <= t);
                if k == 0 {
                    tab[0]
                } else if k >= tab.len() {
                    tab[tab.len() - 1]
                } else {
                    RateSet::lerp(&tab[k - 1], &tab[k], t)
                }
            }
        })
    }
}

/// Rate grid with spacing at most `(1/50)·2π/max|α₁₂|` and `0.1/Ω_c`.
fn kernel_grid(coupling: &Coupling<'_>, bath: &BathSpec) -> Result<Vec<f64>, EvolveError> {
    let frame = coupling.frame();
    let mut a_max: f64 = 0.0;
    for &t in frame.grid() {
        if let Ok((ax, ay)) = coupling.frequencies(t) {
            a_max = a_max.max(ax.abs()).max(ay.abs());
        }
    }
    let span = frame.t_end() - frame.t_start();
    let mut h = (span / 200.0).min(0.1 / bath.omega_c);
    if a_max > 0.0 {
        h = h.min(2.0 * std::f64::consts::PI / (50.0 * a_max));
    }
    let n = (span / h).ceil() as usize;
    Ok((0..=n)
        .map(|k| {
            if k == n {
                frame.t_end()
            } else {
                frame.t_start() + span * k as f64 / n as f64
            }
        })
        .collect())
}

/// Integrates the driven master equation in the invariant frame `frame`.
pub fn dmme_evolve(
    frame: &LriFrame,
    source: &RateSource,
    bath: &BathSpec,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    let rho0 = DensityMatrix::new(rho0.mat)?;
    let p = frame.protocol();
    let rates = RateEval::new(frame, bath, source, &opts.quad)?;
    let ode = default_ode(p, &opts.ode);
    let rhs = |t: f64, rho: &ComplexMat2| -> Result<(ComplexMat2, RateSet), EvolveError> {
        let h = p.hamiltonian(t)?;
        let ls = lindblad_set(frame, t)?;
        let r = rates.at(t)?;
        Ok((generator(&h, &ls, &r, opts.lamb_shift, rho), r))
    };
    let sol = dopri5(
        |t, y: &[f64; 8]| {
            let rho = DensityMatrix::from_array(y).mat;
            Ok::<_, EvolveError>(mat_to_array(&rhs(t, &rho)?.0))
        },
        frame.t_start(),
        frame.t_end(),
        rho0.to_array(),
        &ode,
        |_, _| Ok(()),
    )?;
    let mut points = Vec::new();
    for t in opts.output.times(frame.t_start(), frame.t_end())? {
        let rho = DensityMatrix::from_array(&sol.eval(t));
        let r = rates.at(t)?;
        points.push(TrajectoryPoint::new(t, rho, None, Some(r)));
    }
    Ok(Trajectory::from_points(points))
}

/// Rates of the adiabatic master equation at one instant: `y` coupling,
/// `α = 2E`, `Γ⁻ = 2πJ(α)(N(α) + 1)`, `Γ⁺ = 2πJ(α)N(α)`.
pub fn ame_rates(d: &DriveSample, bath: &BathSpec, t: f64) -> Result<RateSet, EvolveError> {
    let e = d.energy();
    if e == 0.0 {
        return Err(EvolveError::DegenerateHamiltonian { t });
    }
    let a = 2.0 * e;
    let mut r = RateSet::zero(t);
    r.gamma_minus = 2.0 * bath.lambda_real(a).map_err(RateError::from)?;
    r.gamma_plus = 2.0 * bath.lambda_real(-a).map_err(RateError::from)?;
    r.alpha12_y = Some(a);
    Ok(r)
}

/// Instantaneous eigenstates `(ground, excited)` of `H(t)`.
pub fn instantaneous_eigenstates(
    p: &DrivingProtocol,
    t: f64,
) -> Result<(ComplexVec2, ComplexVec2), EvolveError> {
    let d = p.eval(t)?;
    if d.energy() == 0.0 {
        return Err(EvolveError::DegenerateHamiltonian { t });
    }
    let (_, v) = p.hamiltonian(t)?.hermitian_eigen();
    Ok((v[0], v[1]))
}

/// Adiabatic master equation with jump operators built from the
/// instantaneous Hamiltonian eigenstates.
pub fn ame_evolve(
    p: &DrivingProtocol,
    bath: &BathSpec,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    let rho0 = DensityMatrix::new(rho0.mat)?;
    let ode = default_ode(p, &opts.ode);
    let rhs = |t: f64, rho: &ComplexMat2| -> Result<ComplexMat2, EvolveError> {
        let d = p.eval(t)?;
        let r = ame_rates(&d, bath, t)?;
        let (g, e) = instantaneous_eigenstates(p, t)?;
        Ok(generator(
            &p.hamiltonian(t)?,
            &LindbladSet::of(&g, &e),
            &r,
            false,
            rho,
        ))
    };
    let sol = dopri5(
        |t, y: &[f64; 8]| {
            let rho = DensityMatrix::from_array(y).mat;
            Ok::<_, EvolveError>(mat_to_array(&rhs(t, &rho)?))
        },
        p.t_start,
        p.t_end,
        rho0.to_array(),
        &ode,
        |_, _| Ok(()),
    )?;
    let mut points = Vec::new();
    for t in opts.output.times(p.t_start, p.t_end)? {
        let rho = DensityMatrix::from_array(&sol.eval(t));
        let r = ame_rates(&p.eval(t)?, bath, t)?;
        points.push(TrajectoryPoint::new(t, rho, None, Some(r)));
    }
    Ok(Trajectory::from_points(points))
}

/// Exact zero-temperature dephasing solution: coherences in the invariant
/// basis decay by `e^{−Γ_e(t)}`, then `ρ = U ρ̃ U†`.
pub fn dephasing_exact(
    frame: &LriFrame,
    bath: &BathSpec,
    rho0: &DensityMatrix,
    output: &OutputGrid,
) -> Result<Trajectory, EvolveError> {
    if bath.temperature > 0.0 {
        return Err(EvolveError::Unsupported(format!(
            "exact dephasing solution needs T = 0 (got T = {})",
            bath.temperature
        )));
    }
    let rho0 = DensityMatrix::new(rho0.mat)?;
    let (p1, p2) = frame.eigenstates(frame.t_start())?;
    let (q1, q2) = (p1.projector(), p2.projector());
    let diag = q1 * rho0.mat * q1 + q2 * rho0.mat * q2;
    let off = q1 * rho0.mat * q2 + q2 * rho0.mat * q1;
    let mut points = Vec::new();
    for t in output.times(frame.t_start(), frame.t_end())? {
        let ge = dephasing_gamma_e(bath, t - frame.t_start())?;
        let tilde = diag + off.scale_real((-ge).exp());
        let u = frame.propagator(t)?;
        let rho = DensityMatrix::from_raw(u * tilde * u.dagger());
        points.push(TrajectoryPoint::new(t, rho, None, None));
    }
    Ok(Trajectory::from_points(points))
}

/// `μ = (ΩΔ' − ΔΩ')/(2Ω̄³)` with `Ω̄ = √(Δ² + Ω²)`.
pub fn inertial_parameter(d: &DriveSample) -> f64 {
    let e = d.energy();
    (d.omega * d.d_delta - d.delta * d.d_omega) / (2.0 * e * e * e)
}

/// Inertial-limit angles `ζ = −atan2(μΩ̄, Ω)`,
/// `η = arccos(−(√2/2)√((κ̄Ω̄ − Δ)/(κ̄Ω̄)))`, `κ̄ = √(1 + μ²)`.
pub fn inertial_angles(d: &DriveSample, mu: f64) -> (f64, f64) {
    let e = d.energy();
    let kb = (1.0 + mu * mu).sqrt();
    let zeta = -(mu * e).atan2(d.omega);
    let ratio = ((kb * e - d.delta) / (kb * e)).clamp(0.0, 2.0);
    let eta = (-(0.5f64).sqrt() * ratio.sqrt()).acos();
    (eta, zeta)
}

/// `Σ_z = (H + μΩ̄σ_y)/(κ̄Ω̄)` of the inertial Lindblad operators.
pub fn inertial_sigma_z(d: &DriveSample, mu: f64) -> ComplexMat2 {
    let e = d.energy();
    let kb = (1.0 + mu * mu).sqrt();
    (ComplexMat2::pauli_combination(d.omega, 0.0, d.delta) + SIGMA_Y.scale_real(mu * e))
        .scale_real(1.0 / (kb * e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialReport {
    pub mu: f64,
    /// `max|μ(t) − μ|` over the samples
    pub mu_drift: f64,
    /// largest of the two frame-equation residuals
    pub max_geq_residual: f64,
    /// smallest `|⟨φ_n|ψ_n⟩|` between `Σ_z` eigenvectors and the angle form
    pub min_overlap: f64,
    pub samples: usize,
}

/// Checks that the inertial angles solve the frame equations and
/// diagonalize the inertial `Σ_z` at `samples` interior times.
pub fn inertial_consistency(
    p: &DrivingProtocol,
    mu: f64,
    samples: usize,
) -> Result<InertialReport, EvolveError> {
    let span = p.span();
    let h = 1e-3 * span.min(1.0);
    let samples = samples.max(2);
    let mut report = InertialReport {
        mu,
        mu_drift: 0.0,
        max_geq_residual: 0.0,
        min_overlap: f64::INFINITY,
        samples,
    };
    let angles = |t: f64| -> Result<(f64, f64), EvolveError> {
        let d = p.eval(t)?;
        if d.energy() == 0.0 {
            return Err(EvolveError::DegenerateHamiltonian { t });
        }
        Ok(inertial_angles(&d, mu))
    };
    for k in 0..samples {
        let t = p.t_start + 2.0 * h + (span - 4.0 * h) * k as f64 / (samples - 1) as f64;
        let d = p.eval(t)?;
        report.mu_drift = report.mu_drift.max((inertial_parameter(&d) - mu).abs());
        let (eta, zeta) = angles(t)?;
        let f = |j: f64| angles(t + j * h);
        let (m2, m1, p1, p2) = (f(-2.0)?, f(-1.0)?, f(1.0)?, f(2.0)?);
        let d_eta = (m2.0 - 8.0 * m1.0 + 8.0 * p1.0 - p2.0) / (12.0 * h);
        let d_zeta = (m2.1 - 8.0 * m1.1 + 8.0 * p1.1 - p2.1) / (12.0 * h);
        let (r1, r2) = geq_residual_of(&d, eta, zeta, d_eta, d_zeta);
        report.max_geq_residual = report.max_geq_residual.max(r1).max(r2);
        let (psi1, psi2) = eigenstates_of(eta, zeta);
        let (_, phi) = inertial_sigma_z(&d, mu).hermitian_eigen();
        let o = phi[0].inner(&psi1).norm().min(phi[1].inner(&psi2).norm());
        report.min_overlap = report.min_overlap.min(o);
    }
    if report.mu_drift > INERTIAL_DRIFT_TOL {
        return Err(EvolveError::ProtocolNotInertial {
            drift: report.mu_drift,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lri::{adiabatic_init, solve_lri};
    use crate::qlinalg::{bloch_of, state_of, BlochVector};
    use proptest::prelude::*;

    fn frame_of(p: &DrivingProtocol) -> LriFrame {
        solve_lri(p, adiabatic_init(p).unwrap(), &OdeOptions::default()).unwrap()
    }

    fn plus_state() -> DensityMatrix {
        state_of(&BlochVector::new(1.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn eigenstate_evolution() {
        let p = DrivingProtocol::constant(1.0, 0.0, 0.0, 3.0).unwrap();
        let tr = schrodinger_evolve(&p, &ComplexVec2::up(), &EvolveOptions::default()).unwrap();
        for pt in &tr.points {
            let psi = pt.psi.unwrap();
            let want = C64::from_polar(1.0, -pt.t);
            assert!((psi.c1 - want).norm() < 1e-7, "t = {}", pt.t);
            assert!((pt.rho.rho11() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn schrodinger_matches_frame_propagator() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let frame = frame_of(&p);
        let psi0 = ComplexVec2::real(1.0, 1.0).normalized();
        let tr = schrodinger_evolve(&p, &psi0, &EvolveOptions::default()).unwrap();
        for pt in &tr.points {
            let exact = frame.propagator(pt.t).unwrap().apply(&psi0);
            let f = exact.inner(&pt.psi.unwrap()).norm_sqr();
            assert!(f >= 1.0 - 1e-6, "t = {} fidelity {f}", pt.t);
            assert!((pt.psi.unwrap().norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unitary_propagator() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let frame = frame_of(&p);
        let ts: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
        let us = unitary_evolve(&p, &ts, &OdeOptions::default()).unwrap();
        for (t, u) in ts.iter().zip(&us) {
            assert!(u.unitarity_defect() < 1e-8);
            let v = frame.propagator(*t).unwrap();
            let f = (u.dagger() * v).trace().norm() / 2.0;
            assert!(f > 1.0 - 1e-7);
        }
    }

    #[test]
    fn lindblad_set_examples() {
        let (p1, p2) = eigenstates_of(0.0, 0.0);
        let l = LindbladSet::of(&p1, &p2);
        assert!(
            l.sigma_z
                .max_abs_diff(&ComplexMat2::real(-1.0, 0.0, 0.0, 1.0))
                < 1e-15
        );
        let (p1, p2) = eigenstates_of(0.4, 1.1);
        let l = LindbladSet::of(&p1, &p2);
        assert!(l.sigma_minus.dagger().max_abs_diff(&l.sigma_plus) < 1e-15);
        // projector form: [Σ_z, Σ⁺] = 2Σ⁺
        let c = commutator(&l.sigma_z, &l.sigma_plus);
        assert!(c.max_abs_diff(&l.sigma_plus.scale_real(2.0)) < 1e-14);
        // [Σ_z, [ρ, Σ_z]] = 2 D[Σ_z]ρ
        let rho = state_of(&BlochVector::new(0.3, -0.2, 0.5)).unwrap().mat;
        let lhs = commutator(&l.sigma_z, &commutator(&rho, &l.sigma_z));
        assert!(lhs.max_abs_diff(&dissipator(&l.sigma_z, &rho).scale_real(2.0)) < 1e-14);
    }

    #[test]
    fn unitary_limit_of_master_equation() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 2.0).unwrap();
        let frame = frame_of(&p);
        let bath = BathSpec::zero_temperature(0.0, 8.0).unwrap();
        let psi0 = ComplexVec2::real(0.6, 0.8);
        let opts = EvolveOptions::default();
        let closed = schrodinger_evolve(&p, &psi0, &opts).unwrap();
        for src in [
            RateSource::Zero,
            RateSource::SlowPhase {
                channels: Channels::XY,
                convention: RateConvention::Gadi,
            },
        ] {
            let open =
                dmme_evolve(&frame, &src, &bath, &DensityMatrix::pure(&psi0), &opts).unwrap();
            assert!(open.max_trace_distance(&closed) < 1e-7);
        }
    }

    #[test]
    fn dephasing_matches_exact_solution() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let frame = frame_of(&p);
        let bath = BathSpec::zero_temperature(1.0, 20.0).unwrap();
        let mut opts = EvolveOptions::default();
        let rho0 = plus_state();
        let exact = dephasing_exact(&frame, &bath, &rho0, &opts.output).unwrap();
        assert!(exact.points[0].rho.mat.max_abs_diff(&rho0.mat) < 1e-12);
        let dm = dmme_evolve(&frame, &RateSource::Dephasing, &bath, &rho0, &opts).unwrap();
        assert!(dm.bloch_sup_distance(&exact) < 1e-3);
        assert!(dm.max_trace_error() < 1e-8 && dm.max_hermiticity_error() < 1e-10);
        opts.lamb_shift = true;
        let dl = dmme_evolve(&frame, &RateSource::Dephasing, &bath, &rho0, &opts).unwrap();
        assert!(dl.bloch_sup_distance(&dm) < 1e-9);
    }

    #[test]
    fn dephasing_exact_rejects_temperature() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let frame = frame_of(&p);
        let hot = BathSpec::new(1.0, 20.0, 0.5, 0.0).unwrap();
        let r = dephasing_exact(&frame, &hot, &plus_state(), &OutputGrid::Uniform(4));
        assert!(matches!(r, Err(EvolveError::Unsupported(_))));
    }

    #[test]
    fn ame_zero_temperature_only_emission() {
        let b = BathSpec::zero_temperature(0.1, 8.0).unwrap();
        let d = DriveSample {
            delta: 1.0,
            omega: 0.5,
            d_delta: 0.0,
            d_omega: 0.0,
        };
        let r = ame_rates(&d, &b, 0.0).unwrap();
        assert_eq!(r.gamma_plus, 0.0);
        assert!(r.gamma_minus > 0.0);
        let z = DriveSample {
            delta: 0.0,
            omega: 0.0,
            ..d
        };
        assert!(matches!(
            ame_rates(&z, &b, 1.0),
            Err(EvolveError::DegenerateHamiltonian { .. })
        ));
    }

    #[test]
    fn ame_equals_dmme_for_static_drive() {
        let p = DrivingProtocol::constant(0.7, 0.4, 0.0, 20.0).unwrap();
        let frame = frame_of(&p);
        let bath = BathSpec::new(0.05, 8.0, 0.5, 0.0).unwrap();
        let rho0 = plus_state();
        let opts = EvolveOptions::default();
        let src = RateSource::SlowPhase {
            channels: Channels::Y,
            convention: RateConvention::Gadi,
        };
        let dm = dmme_evolve(&frame, &src, &bath, &rho0, &opts).unwrap();
        let am = ame_evolve(&p, &bath, &rho0, &opts).unwrap();
        assert!(dm.max_trace_distance(&am) < 1e-6);
    }

    #[test]
    fn inertial_constant_drive() {
        let p = DrivingProtocol::constant(0.8, 0.6, 0.0, 1.0).unwrap();
        let r = inertial_consistency(&p, 0.0, 20).unwrap();
        assert!(r.max_geq_residual < 1e-10);
        assert!(r.min_overlap > 1.0 - 1e-10);
    }

    #[test]
    fn inertial_constructed_protocol() {
        let p = DrivingProtocol::inertial(1.0, 0.1, 2.5, 0.5, 0.0, 2.0).unwrap();
        let r = inertial_consistency(&p, 0.5, 40).unwrap();
        assert!(r.mu_drift < 1e-12);
        assert!(r.max_geq_residual < 1e-8, "{r:?}");
        assert!(r.min_overlap > 1.0 - 1e-10, "{r:?}");
    }

    #[test]
    fn non_inertial_protocol_rejected() {
        let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.2, 1.0).unwrap();
        assert!(matches!(
            inertial_consistency(&p, 0.0, 10),
            Err(EvolveError::ProtocolNotInertial { .. })
        ));
    }

    #[test]
    fn output_grid() {
        assert_eq!(
            OutputGrid::Uniform(4).times(0.0, 1.0).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(OutputGrid::Times(vec![2.0]).times(0.0, 1.0).is_err());
    }

    #[test]
    fn invalid_initial_state() {
        let p = DrivingProtocol::constant(1.0, 0.0, 0.0, 1.0).unwrap();
        let bad = ComplexVec2::real(1.0, 1.0);
        assert!(schrodinger_evolve(&p, &bad, &EvolveOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn master_equation_preserves_trace_and_hermiticity(
            rx in -0.5..0.5f64, ry in -0.5..0.5f64, rz in -0.5..0.5f64,
            kappa in 0.0..0.3f64, temp in 0.0..1.0f64,
        ) {
            let p = DrivingProtocol::sine_squared(1.0, 0.8, 1.0, 0.2, 3.0).unwrap();
            let frame = frame_of(&p);
            let bath = BathSpec::new(kappa, 8.0, temp, 0.0).unwrap();
            let rho0 = state_of(&BlochVector::new(rx, ry, rz)).unwrap();
            let opts = EvolveOptions { output: OutputGrid::Uniform(30), ..Default::default() };
            let src = RateSource::SlowPhase { channels: Channels::XY, convention: RateConvention::Gadi };
            let tr = dmme_evolve(&frame, &src, &bath, &rho0, &opts).unwrap();
            prop_assert!(tr.max_trace_error() <= 1e-8);
            prop_assert!(tr.max_hermiticity_error() <= 1e-10);
            prop_assert!(!tr.positivity_violated);
            prop_assert!(bloch_of(&tr.last().rho).norm() <= 1.0 + 1e-7);
        }
    }
}
