//! Acceptance suite shared by `simulate selftest` and the `acceptance` test
//! target. Each criterion reports one pass/fail line.

use std::time::{Duration, Instant};

use crate::bath::BathSpec;
use crate::coupling::Coupling;
use crate::driving::DriveSample;
use crate::driving::DrivingProtocol;
use crate::evolve::{
    dmme_evolve, inertial_consistency, schrodinger_evolve, unitary_evolve, EvolveOptions,
    RateSource, Trajectory,
};
use crate::lri::{adiabatic_init, adiabatic_point, geq_residual_of, solve_lri, LriFrame};
use crate::ode::OdeOptions;
use crate::oracles::dephasing_gamma_e;
use crate::qlinalg::{ComplexVec2, DensityMatrix};
use crate::quad::{integrate, QuadOptions};
use crate::rates::{
    dephasing_rates, memory_kernel_rate, slow_phase_rates, Channels, KernelOperator, RateConvention,
};
use crate::scenario::{bundled, run, Outcome, ScenarioConfig, BUNDLED};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} [{:.2} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub const TITLES: [&str; 10] = [
    "dephasing model vs exact solution",
    "integrated dephasing rate identity",
    "memory-kernel dephasing rate",
    "Landau-Zener adiabatic regime",
    "Landau-Zener non-adiabatic regime",
    "propagator exactness",
    "invariant suite",
    "adiabatic limit",
    "inertial limit",
    "determinism",
];

type Verdict = Result<(bool, String), String>;

fn sine_protocol() -> DrivingProtocol {
    DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).expect("valid protocol")
}

fn frame_of(p: &DrivingProtocol) -> Result<LriFrame, String> {
    let init = adiabatic_init(p).map_err(|e| e.to_string())?;
    solve_lri(p, init, &OdeOptions::default()).map_err(|e| e.to_string())
}

fn run_bundled(name: &str) -> Result<Outcome, String> {
    let text = bundled(name).ok_or_else(|| format!("no bundled config {name}"))?;
    let cfg = ScenarioConfig::parse(text).map_err(|e| e.to_string())?;
    run(&cfg).map_err(|e| e.to_string())
}

fn value(o: &Outcome, key: &str) -> f64 {
    o.values
        .iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(f64::NAN)
}

fn c1() -> Verdict {
    let t0 = Instant::now();
    let o = run_bundled("dephasing")?;
    let secs = t0.elapsed().as_secs_f64();
    let gap = value(&o, "bloch_gap_vs_exact");
    let lamb = value(&o, "lamb_toggle_gap");
    Ok((
        gap <= 1e-3 && lamb <= 1e-9 && secs < 10.0,
        format!("sup|r_dmme - r_exact| = {gap:.3e} (<= 1e-3), lamb toggle gap = {lamb:.3e} (<= 1e-9), runtime {secs:.2} s (< 10 s)"),
    ))
}

fn c2() -> Verdict {
    let b = BathSpec::zero_temperature(1.0, 20.0).map_err(|e| e.to_string())?;
    let opts = QuadOptions::new(1e-13, 1e-13);
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let t = 0.01 * k as f64;
        let q = integrate(
            |s| dephasing_rates(&b, s).map(|r| r.0).unwrap_or(f64::NAN),
            0.0,
            t,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        let g = dephasing_gamma_e(&b, t).map_err(|e| e.to_string())?;
        worst = worst.max((q - g).abs());
    }
    Ok((
        worst <= 1e-10,
        format!("max |int Gamma_D^R - Gamma_e| over 50 t = {worst:.3e} (<= 1e-10)"),
    ))
}

fn c3() -> Verdict {
    let p = sine_protocol();
    let frame = frame_of(&p)?;
    let b = BathSpec::zero_temperature(1.0, 20.0).map_err(|e| e.to_string())?;
    let quad = QuadOptions::new(1e-12, 1e-10);
    let mut worst: f64 = 0.0;
    for k in 0..=19 {
        let x = 0.5 + 9.5 * k as f64 / 19.0;
        let t = x / b.omega_c;
        let g = memory_kernel_rate(
            &frame,
            &b,
            KernelOperator::Dephasing,
            t,
            Some(t - frame.t_start()),
            (1, 1),
            (1, 1),
            &quad,
        )
        .map_err(|e| e.to_string())?;
        let want = dephasing_rates(&b, t).map_err(|e| e.to_string())?.0;
        worst = worst.max((g.re - want).abs() / want.abs());
    }
    Ok((
        worst <= 1e-3,
        format!("max relative error over Omega_c t in [0.5, 10] = {worst:.3e} (<= 1e-3)"),
    ))
}

fn c4() -> Verdict {
    let t0 = Instant::now();
    let o = run_bundled("lz-adiabatic")?;
    let secs = t0.elapsed().as_secs_f64();
    let rho = o.final_point().rho.rho11();
    let p11 = value(&o, "oracle_p11");
    let gap = (rho - p11).abs();
    Ok((
        gap <= 5e-3 && secs < 30.0,
        format!("rho11 = {rho:.4e}, P11 = {p11:.4e}, gap {gap:.3e} (<= 5e-3), runtime {secs:.2} s (< 30 s)"),
    ))
}

fn c5() -> Verdict {
    let o = run_bundled("lz-sudden")?;
    let rho = o.final_point().rho.rho11();
    let p11 = value(&o, "oracle_p11");
    let closed = value(&o, "closed_rho11");
    let gap = (rho - p11).abs();
    let contrast = (closed - rho).abs();
    Ok((
        gap <= 0.03 && contrast > 0.2,
        format!("rho11 = {rho:.4e}, P11 = {p11:.4e}, gap {gap:.3e} (<= 0.03); closed |<1|psi(T)>|^2 = {closed:.4}, contrast {contrast:.3} (> 0.2)"),
    ))
}

fn c6() -> Verdict {
    let p = sine_protocol();
    let frame = frame_of(&p)?;
    let ts: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64 / 20.0).collect();
    let us = unitary_evolve(&p, &ts, &OdeOptions::default()).map_err(|e| e.to_string())?;
    let psi0 = ComplexVec2::real(1.0, 1.0).normalized();
    let (mut fid, mut defect) = (1.0f64, 0.0f64);
    for (t, u) in ts.iter().zip(&us) {
        let v = frame.propagator(*t).map_err(|e| e.to_string())?;
        let f_op = ((u.dagger() * v).trace().norm() / 2.0).powi(2);
        let f_state = u.apply(&psi0).inner(&v.apply(&psi0)).norm_sqr();
        fid = fid.min(f_op).min(f_state);
        defect = defect.max(u.unitarity_defect()).max(v.unitarity_defect());
    }
    Ok((
        fid >= 1.0 - 1e-6 && defect <= 1e-8,
        format!("min fidelity over 20 times = 1 - {:.3e} (>= 1 - 1e-6), unitarity defect {defect:.3e} (<= 1e-8)", 1.0 - fid),
    ))
}

fn invariant_residual_max(frame: &LriFrame) -> Result<f64, String> {
    let g = frame.grid();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for &t in g
        .iter()
        .filter(|&&t| t - h > g[0] && t + h < g[g.len() - 1])
    {
        worst = worst.max(frame.invariant_residual(t, h).map_err(|e| e.to_string())?);
    }
    Ok(worst)
}

fn traj_errors(tr: &Trajectory) -> (f64, f64) {
    (tr.max_trace_error(), tr.max_hermiticity_error())
}

fn c7() -> Verdict {
    // invariant equation at the frame nodes
    let dephasing = frame_of(&sine_protocol())?;
    // ζ winds through ~800 rad on the Landau-Zener window, so its absolute
    // interpolation error scales with rtol; the check uses a tight solve
    let lz_p = DrivingProtocol::landau_zener(1.0, 2.0, None).map_err(|e| e.to_string())?;
    let lz = solve_lri(
        &lz_p,
        adiabatic_init(&lz_p).map_err(|e| e.to_string())?,
        &OdeOptions::with_tol(1e-12, 1e-14),
    )
    .map_err(|e| e.to_string())?;
    let di = invariant_residual_max(&dephasing)?.max(invariant_residual_max(&lz)?);

    // expectation of the invariant along a Schrödinger trajectory
    let p = sine_protocol();
    let psi0 = ComplexVec2::real(1.0, 1.0).normalized();
    let tr = schrodinger_evolve(&p, &psi0, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let mut drift: f64 = 0.0;
    let mut first = None;
    for pt in &tr.points {
        let i = dephasing.invariant_at(pt.t).map_err(|e| e.to_string())?;
        let psi = pt.psi.expect("pure run");
        let e = i.sandwich(&psi, &psi).re;
        let e0 = *first.get_or_insert(e);
        drift = drift.max((e - e0).abs());
    }

    // trace and Hermiticity of every master-equation trajectory
    let mut tr_err: f64 = 0.0;
    let mut h_err: f64 = 0.0;
    for name in [
        "dephasing",
        "lz-adiabatic",
        "lz-sudden",
        "adiabatic",
        "inertial",
    ] {
        let o = run_bundled(name)?;
        let (a, b) = traj_errors(&o.trajectory);
        tr_err = tr_err.max(a);
        h_err = h_err.max(b);
    }
    let thermal_p =
        DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.5, 3.0).map_err(|e| e.to_string())?;
    let thermal_frame = frame_of(&thermal_p)?;
    let bath = BathSpec::new(0.1, 8.0, 0.5, 0.0).map_err(|e| e.to_string())?;
    let src = RateSource::SlowPhase {
        channels: Channels::XY,
        convention: RateConvention::Gadi,
    };
    let rho0 = DensityMatrix::pure(&psi0);
    let thermal = dmme_evolve(
        &thermal_frame,
        &src,
        &bath,
        &rho0,
        &EvolveOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = traj_errors(&thermal);
    tr_err = tr_err.max(a);
    h_err = h_err.max(b);

    // detailed balance of the slow-phase rates
    let coupling = Coupling::new(&thermal_frame);
    let mut db: f64 = 0.0;
    for k in 0..=20 {
        let t = 0.5 + 2.5 * k as f64 / 20.0;
        let r = slow_phase_rates(&coupling, &bath, t, Channels::Y, RateConvention::Gadi)
            .map_err(|e| e.to_string())?;
        let a = r.alpha12_y.ok_or("degenerate y channel")?;
        let want = (a / bath.temperature).exp();
        db = db.max((r.gamma_minus / r.gamma_plus - want).abs() / want);
    }

    let ok = di <= 1e-6 && drift <= 1e-6 && tr_err <= 1e-8 && h_err <= 1e-10 && db <= 1e-6;
    Ok((
        ok,
        format!("dI residual {di:.3e} (<= 1e-6), <I> drift {drift:.3e} (<= 1e-6), trace err {tr_err:.3e} (<= 1e-8), hermiticity err {h_err:.3e} (<= 1e-10), detailed balance {db:.3e} (<= 1e-6)"),
    ))
}

fn c8() -> Verdict {
    let mut stat: f64 = 0.0;
    for &(delta, omega) in &[
        (1.0, 0.5),
        (-0.7, 1.3),
        (0.0, 2.0),
        (3.0, -0.2),
        (-2.0, -1.0),
        (0.3, 1e-3),
    ] {
        let (eta, zeta) = adiabatic_point(delta, omega).map_err(|e| e.to_string())?;
        let d = DriveSample {
            delta,
            omega,
            d_delta: 0.0,
            d_omega: 0.0,
        };
        let (r1, r2) = geq_residual_of(&d, eta, zeta, 0.0, 0.0);
        stat = stat.max(r1).max(r2);
    }
    let p = DrivingProtocol::constant(0.8, 0.6, 0.0, 10.0).map_err(|e| e.to_string())?;
    let frame = frame_of(&p)?;
    let g = frame.grid().to_vec();
    for &t in &g[1..g.len() - 1] {
        if t - 2e-3 > g[0] && t + 2e-3 < g[g.len() - 1] {
            let (r1, r2) = frame.geq_residual(t, 1e-3).map_err(|e| e.to_string())?;
            stat = stat.max(r1).max(r2);
        }
    }
    let o = run_bundled("adiabatic")?;
    let td = value(&o, "final_trace_distance_vs_ame");
    Ok((
        stat <= 1e-10 && td <= 1e-2,
        format!("static residual {stat:.3e} (<= 1e-10), slow-ramp DMME vs AME trace distance {td:.3e} (<= 1e-2)"),
    ))
}

fn c9() -> Verdict {
    let p = DrivingProtocol::inertial(1.0, 0.1, 2.5, 0.5, 0.0, 2.0).map_err(|e| e.to_string())?;
    let r = inertial_consistency(&p, 0.5, 200).map_err(|e| e.to_string())?;
    Ok((
        r.max_geq_residual <= 1e-8 && r.min_overlap >= 1.0 - 1e-10,
        format!(
            "mu = 0.5 (drift {:.1e}), residual {:.3e} (<= 1e-8), overlap 1 - {:.3e} (>= 1 - 1e-10)",
            r.mu_drift,
            r.max_geq_residual,
            1.0 - r.min_overlap
        ),
    ))
}

/// Every artifact of the bundled scenarios as `(file name, contents)`.
pub fn bundled_artifacts() -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (name, _) in BUNDLED {
        out.extend(run_bundled(name)?.artifacts());
    }
    Ok(out)
}

fn c10() -> Verdict {
    let mut passes = true;
    for _ in 0..2 {
        for (name, _) in BUNDLED {
            passes &= run_bundled(name)?.passed();
        }
    }
    let a = bundled_artifacts()?;
    let b = bundled_artifacts()?;
    let csv: Vec<_> = a.iter().filter(|(n, _)| n.ends_with(".csv")).collect();
    let same = a == b;
    Ok((
        passes && same && !csv.is_empty(),
        format!(
            "bundled scenarios pass twice: {passes}; {} CSV files byte-identical across runs: {same}",
            csv.len()
        ),
    ))
}

pub fn run_criterion(id: u8) -> CriterionResult {
    let t0 = Instant::now();
    let v = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        _ => Err(format!("no criterion {id}")),
    };
    let (passed, detail) = v.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed,
        detail,
        elapsed: t0.elapsed(),
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=10).map(run_criterion).collect()
}
