//! Config-driven scenario runner: single runs, parameter sweeps and their
//! CSV, summary and SVG artifacts.

pub mod config;
pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    ConfigError, InitialState, RateConfig, RawConfig, ScenarioConfig, ScenarioKind, SourceKind,
};

use crate::driving::Family;
use crate::evolve::{
    ame_evolve, dephasing_exact, dmme_evolve, inertial_angles, inertial_consistency,
    schrodinger_evolve, EvolveError, EvolveOptions, OutputGrid, RateSource, Trajectory,
    TrajectoryPoint,
};
use crate::lri::{adiabatic_init, solve_lri, LriFrame};
use crate::oracles::{lz_exact, OracleError};
use crate::qlinalg::{bloch_of, state_of, DensityMatrix};
use crate::rates::{KernelOperator, RateError};
use svg::{LinePlot, Series, Stroke};

/// Configurations shipped with the crate, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("dephasing", include_str!("../../configs/dephasing.config")),
    (
        "lz-adiabatic",
        include_str!("../../configs/lz-adiabatic.config"),
    ),
    ("lz-sudden", include_str!("../../configs/lz-sudden.config")),
    ("adiabatic", include_str!("../../configs/adiabatic.config")),
    ("inertial", include_str!("../../configs/inertial.config")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|e| e.1)
}

pub const MAX_AXES: usize = 3;

/// Exit status of the command-line front end.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const INTEGRATOR: i32 = 3;
    pub const CHECK_FAILED: i32 = 4;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Evolve(e) if e.is_integrator_failure() => exit::INTEGRATOR,
            ScenarioError::Io { .. } => exit::IO,
            _ => exit::VALIDATION,
        }
    }

    /// Documented unsupported paths (finite-temperature closed forms).
    pub fn is_unsupported(&self) -> bool {
        matches!(
            self,
            ScenarioError::Evolve(EvolveError::Unsupported(_))
                | ScenarioError::Evolve(EvolveError::Rate(RateError::FiniteTemperatureDephasing(
                    _
                )))
                | ScenarioError::Evolve(EvolveError::Oracle(OracleError::FiniteTemperature(_)))
                | ScenarioError::Oracle(OracleError::FiniteTemperature(_))
        )
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Reads a config file, or a bundled config when `path` names one and no
/// such file exists.
pub fn load(path: &str) -> Result<ScenarioConfig, ScenarioError> {
    let p = Path::new(path);
    let text = match std::fs::read_to_string(p) {
        Ok(t) => t,
        Err(e) => match bundled(path) {
            Some(t) if !p.exists() => t.to_string(),
            _ => return Err(io_err(p, e)),
        },
    };
    Ok(ScenarioConfig::parse(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    Exceeds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub cmp: Comparison,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            cmp: Comparison::AtMost,
        }
    }

    pub fn exceeds(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            cmp: Comparison::Exceeds,
        }
    }

    pub fn passed(&self) -> bool {
        match self.cmp {
            Comparison::AtMost => self.value <= self.limit,
            Comparison::Exceeds => self.value > self.limit,
        }
    }

    pub fn describe(&self) -> String {
        let op = match self.cmp {
            Comparison::AtMost => "<=",
            Comparison::Exceeds => ">",
        };
        format!(
            "{} (value {} {op} {})",
            if self.passed() { "pass" } else { "fail" },
            fmt_num(self.value),
            fmt_num(self.limit)
        )
    }
}

/// 17 significant digits, `nan` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".into()
    }
}

pub const CSV_HEADER: &str =
    "t,rx,ry,rz,rho11,alpha12_x,alpha12_y,gamma_plus,gamma_minus,gamma_d,trace_err,min_eig";

/// Trajectory as CSV with the fixed column set.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut o = String::with_capacity(tr.len() * 220);
    o.push_str(CSV_HEADER);
    o.push('\n');
    for p in &tr.points {
        let b = bloch_of(&p.rho);
        let r = p.rates;
        let opt = |v: Option<f64>| fmt_num(v.unwrap_or(f64::NAN));
        let cols = [
            fmt_num(p.t),
            fmt_num(b.rx),
            fmt_num(b.ry),
            fmt_num(b.rz),
            fmt_num(p.rho.rho11()),
            opt(r.and_then(|r| r.alpha12_x)),
            opt(r.and_then(|r| r.alpha12_y)),
            opt(r.map(|r| r.gamma_plus)),
            opt(r.map(|r| r.gamma_minus)),
            opt(r.map(|r| r.gamma_d)),
            fmt_num(p.trace_err),
            fmt_num(p.min_eig),
        ];
        o.push_str(&cols.join(","));
        o.push('\n');
    }
    o
}

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    /// comparison trajectory (exact, closed-system or AME) on the same grid
    pub reference: Option<(String, Trajectory)>,
    pub values: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn final_point(&self) -> &TrajectoryPoint {
        self.trajectory.last()
    }

    pub fn csv(&self) -> String {
        trajectory_csv(&self.trajectory)
    }

    pub fn reference_csv(&self) -> Option<String> {
        self.reference.as_ref().map(|(_, t)| trajectory_csv(t))
    }

    pub fn summary(&self) -> String {
        let c = &self.config;
        let f = self.final_point();
        let b = bloch_of(&f.rho);
        let mut kv: Vec<(String, String)> = vec![
            ("scenario".into(), c.name.clone()),
            ("kind".into(), c.kind.name().into()),
            ("protocol".into(), c.protocol.family.tag().into()),
            ("rate_source".into(), c.rates.source.name().into()),
            ("rate_convention".into(), c.rates.convention.name().into()),
            (
                "lamb_shift".into(),
                if c.rates.lamb { "on" } else { "off" }.into(),
            ),
            ("points".into(), self.trajectory.len().to_string()),
            ("t_final".into(), fmt_num(f.t)),
            ("final_rho11".into(), fmt_num(f.rho.rho11())),
            ("final_rx".into(), fmt_num(b.rx)),
            ("final_ry".into(), fmt_num(b.ry)),
            ("final_rz".into(), fmt_num(b.rz)),
            (
                "max_trace_err".into(),
                fmt_num(self.trajectory.max_trace_error()),
            ),
            (
                "max_hermiticity_err".into(),
                fmt_num(self.trajectory.max_hermiticity_error()),
            ),
            (
                "min_eigenvalue".into(),
                fmt_num(self.trajectory.min_eigenvalue()),
            ),
            (
                "positivity_violated".into(),
                self.trajectory.positivity_violated.to_string(),
            ),
        ];
        kv.extend(self.values.iter().cloned());
        for ch in &self.checks {
            kv.push((format!("check.{}", ch.name), ch.describe()));
        }
        kv.push((
            "status".into(),
            if self.passed() { "pass" } else { "fail" }.into(),
        ));
        let mut o = String::new();
        for (k, v) in kv {
            let _ = writeln!(o, "{k}: {v}");
        }
        o
    }

    pub fn plot(&self) -> LinePlot {
        let c = &self.config;
        let dephasing = c.kind == ScenarioKind::Dephasing;
        let t0 = c.protocol.t_start;
        let xs = |tr: &Trajectory| -> Vec<f64> {
            tr.points
                .iter()
                .map(|p| {
                    if dephasing {
                        c.bath.omega_c * (p.t - t0)
                    } else {
                        p.t
                    }
                })
                .collect()
        };
        let mut series = Vec::new();
        let mut push = |tr: &Trajectory, tag: &str, stroke: Stroke| {
            if dephasing {
                for (i, comp) in ["rx", "ry", "rz"].iter().enumerate() {
                    series.push(Series {
                        label: format!("{comp} {tag}"),
                        xs: xs(tr),
                        ys: tr
                            .points
                            .iter()
                            .map(|p| bloch_of(&p.rho).as_array()[i])
                            .collect(),
                        stroke,
                    });
                }
            } else {
                series.push(Series {
                    label: format!("rho11 {tag}"),
                    xs: xs(tr),
                    ys: tr.points.iter().map(|p| p.rho.rho11()).collect(),
                    stroke,
                });
            }
        };
        push(&self.trajectory, "master eq.", Stroke::Solid);
        if let Some((name, tr)) = &self.reference {
            push(tr, name, Stroke::Dashed);
        }
        LinePlot {
            title: format!("{} ({})", c.name, c.kind.name()),
            x_label: if dephasing { "Omega_c t" } else { "t" }.into(),
            y_label: if dephasing {
                "Bloch components"
            } else {
                "rho11"
            }
            .into(),
            series,
        }
    }

    /// Enabled artifacts as `(file name, contents)`.
    pub fn artifacts(&self) -> Vec<(String, String)> {
        let stem = &self.config.output.stem;
        let mut files = Vec::new();
        if self.config.output.csv {
            files.push((format!("{stem}.csv"), self.csv()));
            if let Some(r) = self.reference_csv() {
                files.push((format!("{stem}_reference.csv"), r));
            }
        }
        if self.config.output.summary {
            files.push((format!("{stem}_summary.txt"), self.summary()));
        }
        if self.config.output.svg {
            files.push((format!("{stem}.svg"), self.plot().render()));
        }
        files
    }

    /// Writes the enabled artifacts into `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
        write_files(dir, &self.artifacts())
    }
}

/// Writes `(file name, contents)` pairs into `dir`.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

fn frame_of(cfg: &ScenarioConfig) -> Result<LriFrame, ScenarioError> {
    let p = &cfg.protocol;
    let init = match p.family {
        Family::Inertial { mu, .. } => {
            let d = p.eval(p.t_start).map_err(EvolveError::from)?;
            inertial_angles(&d, mu)
        }
        _ => adiabatic_init(p).map_err(EvolveError::from)?,
    };
    Ok(solve_lri(p, init, &cfg.ode).map_err(EvolveError::from)?)
}

fn rate_source(r: &RateConfig) -> RateSource {
    match r.source {
        SourceKind::Zero => RateSource::Zero,
        SourceKind::SlowPhase => RateSource::SlowPhase {
            channels: r.channels,
            convention: r.convention,
        },
        SourceKind::Lz => RateSource::Lz,
        SourceKind::Dephasing => RateSource::Dephasing,
        SourceKind::MemoryKernel => RateSource::MemoryKernel {
            ops: if r.kernel_dephasing {
                vec![KernelOperator::Dephasing]
            } else {
                r.channels.enabled().map(KernelOperator::Channel).collect()
            },
            s_max: r.s_max,
        },
    }
}

/// Executes one scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<Outcome, ScenarioError> {
    let frame = frame_of(cfg)?;
    let (psi1, psi2) = frame
        .eigenstates(frame.t_start())
        .map_err(EvolveError::from)?;
    let (rho0, psi0) = match cfg.initial {
        InitialState::Bloch(b) => (state_of(&b).map_err(EvolveError::from)?, None),
        InitialState::Eigenstate(1) => (DensityMatrix::pure(&psi1), Some(psi1)),
        InitialState::Eigenstate(_) => (DensityMatrix::pure(&psi2), Some(psi2)),
    };
    let opts = EvolveOptions {
        ode: cfg.ode,
        output: OutputGrid::Uniform(cfg.output_points),
        lamb_shift: cfg.rates.lamb,
        ..Default::default()
    };
    let source = rate_source(&cfg.rates);
    let main = dmme_evolve(&frame, &source, &cfg.bath, &rho0, &opts)?;
    let mut checks = vec![
        Check::at_most("trace_error", main.max_trace_error(), 1e-8),
        Check::at_most("hermiticity_error", main.max_hermiticity_error(), 1e-10),
    ];
    let mut values = Vec::new();
    let mut reference = None;
    let last = *main.last();
    match cfg.kind {
        ScenarioKind::Dephasing => {
            let exact = dephasing_exact(&frame, &cfg.bath, &rho0, &opts.output)?;
            let gap = main.bloch_sup_distance(&exact);
            let toggled = EvolveOptions {
                lamb_shift: !cfg.rates.lamb,
                ..opts.clone()
            };
            let other = dmme_evolve(&frame, &source, &cfg.bath, &rho0, &toggled)?;
            let lamb_gap = main.bloch_sup_distance(&other);
            values.push(("bloch_gap_vs_exact".into(), fmt_num(gap)));
            values.push(("lamb_toggle_gap".into(), fmt_num(lamb_gap)));
            checks.push(Check::at_most("bloch_gap_vs_exact", gap, cfg.tolerance));
            checks.push(Check::at_most("lamb_toggle_gap", lamb_gap, 1e-9));
            reference = Some(("exact".into(), exact));
        }
        ScenarioKind::LandauZener => {
            if let Family::LandauZener { v, omega0 } = cfg.protocol.family {
                let pred = lz_exact(v, omega0, cfg.bath.kappa, cfg.bath.omega_c)?;
                let gap = (last.rho.rho11() - pred.p11).abs();
                values.push(("oracle_w2".into(), fmt_num(pred.w2)));
                values.push(("oracle_p11".into(), fmt_num(pred.p11)));
                values.push(("rho11_gap_vs_oracle".into(), fmt_num(gap)));
                checks.push(Check::at_most("rho11_vs_p11", gap, cfg.tolerance));
            }
            if let Some(psi) = psi0 {
                let closed = schrodinger_evolve(&cfg.protocol, &psi, &opts)?;
                let c11 = closed.last().rho.rho11();
                values.push(("closed_rho11".into(), fmt_num(c11)));
                if let Some(min_gap) = cfg.contrast {
                    let d = (c11 - last.rho.rho11()).abs();
                    checks.push(Check::exceeds("closed_contrast", d, min_gap));
                }
                reference = Some(("closed system".into(), closed));
            }
        }
        ScenarioKind::Adiabatic => {
            let ame = ame_evolve(&cfg.protocol, &cfg.bath, &rho0, &opts)?;
            let td = last.rho.trace_distance(&ame.last().rho);
            values.push(("final_trace_distance_vs_ame".into(), fmt_num(td)));
            checks.push(Check::at_most("trace_distance_vs_ame", td, cfg.tolerance));
            reference = Some(("AME".into(), ame));
        }
        ScenarioKind::InertialCheck => {
            let mu = match cfg.protocol.family {
                Family::Inertial { mu, .. } => mu,
                _ => 0.0,
            };
            let rep = inertial_consistency(&cfg.protocol, mu, cfg.samples)?;
            values.push(("mu".into(), fmt_num(rep.mu)));
            values.push(("mu_drift".into(), fmt_num(rep.mu_drift)));
            values.push(("max_geq_residual".into(), fmt_num(rep.max_geq_residual)));
            values.push(("min_overlap".into(), fmt_num(rep.min_overlap)));
            checks.push(Check::at_most(
                "geq_residual",
                rep.max_geq_residual,
                cfg.tolerance,
            ));
            checks.push(Check::at_most(
                "overlap_defect",
                1.0 - rep.min_overlap,
                1e-10,
            ));
        }
        ScenarioKind::Custom => {}
    }
    Ok(Outcome {
        config: cfg.clone(),
        trajectory: main,
        reference,
        values,
        checks,
    })
}

/// One sweep dimension, `section.key=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self, ConfigError> {
        let (key, vals) = spec.split_once('=').ok_or_else(|| ConfigError::BadAxis {
            key: spec.into(),
            msg: "expected key=v1,v2,...".into(),
        })?;
        let key = key.trim().to_string();
        let values = vals
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::BadAxis {
                        key: key.clone(),
                        msg: format!("`{}` is not a number", s.trim()),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { key, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<f64>,
    /// `ok`, `unsupported: ...`, `invalid: ...` or `failed: ...`
    pub status: String,
    pub last: Option<TrajectoryPoint>,
    pub checks_passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

impl SweepTable {
    pub fn csv(&self) -> String {
        let mut o = String::new();
        let mut head: Vec<String> = self.axes.clone();
        head.extend(
            [
                "status",
                "t_final",
                "rho11",
                "rx",
                "ry",
                "rz",
                "trace_err",
                "min_eig",
                "checks",
            ]
            .map(String::from),
        );
        o.push_str(&head.join(","));
        o.push('\n');
        for r in &self.rows {
            let mut cols: Vec<String> = r.point.iter().map(|v| fmt_num(*v)).collect();
            cols.push(csv_field(&r.status));
            match &r.last {
                Some(p) => {
                    let b = bloch_of(&p.rho);
                    for v in [p.t, p.rho.rho11(), b.rx, b.ry, b.rz, p.trace_err, p.min_eig] {
                        cols.push(fmt_num(v));
                    }
                }
                None => cols.extend(std::iter::repeat_n("nan".to_string(), 7)),
            }
            cols.push(
                match r.checks_passed {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "n/a",
                }
                .into(),
            );
            o.push_str(&cols.join(","));
            o.push('\n');
        }
        o
    }
}

/// Runs the scenario on the Cartesian product of the axes. Per-point
/// failures are recorded as row status, not propagated.
pub fn sweep(
    cfg: &ScenarioConfig,
    axes: &[Axis],
    jobs: Option<usize>,
) -> Result<SweepTable, ScenarioError> {
    if axes.len() > MAX_AXES {
        return Err(ConfigError::BadAxis {
            key: axes[MAX_AXES].key.clone(),
            msg: format!("at most {MAX_AXES} axes"),
        }
        .into());
    }
    for a in axes {
        let mut raw = cfg.raw().clone();
        raw.set_numeric(&a.key, a.values.first().copied().unwrap_or(0.0))?;
        if a.values.is_empty() {
            return Err(ConfigError::BadAxis {
                key: a.key.clone(),
                msg: "no values".into(),
            }
            .into());
        }
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for a in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                a.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    let rows = crate::par::map_with_jobs(&points, jobs, |point| {
        let overrides: Vec<(String, f64)> = axes
            .iter()
            .zip(point)
            .map(|(a, v)| (a.key.clone(), *v))
            .collect();
        let outcome = cfg
            .with_overrides(&overrides)
            .map_err(ScenarioError::from)
            .and_then(|c| run(&c));
        match outcome {
            Ok(o) => SweepRow {
                point: point.clone(),
                status: "ok".into(),
                last: Some(*o.final_point()),
                checks_passed: Some(o.passed()),
            },
            Err(e) => {
                let tag = if e.is_unsupported() {
                    "unsupported"
                } else if e.exit_code() == exit::INTEGRATOR {
                    "failed"
                } else {
                    "invalid"
                };
                SweepRow {
                    point: point.clone(),
                    status: format!("{tag}: {e}"),
                    last: None,
                    checks_passed: None,
                }
            }
        }
    });
    Ok(SweepTable {
        axes: axes.iter().map(|a| a.key.clone()).collect(),
        rows,
    })
}
