//! INI-style scenario configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Every key is checked against a fixed schema; unknown sections or keys,
//! duplicates and malformed values are rejected with their line number.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bath::BathSpec;
use crate::driving::{DrivingProtocol, Family};
use crate::ode::OdeOptions;
use crate::qlinalg::BlochVector;
use crate::rates::{Channels, RateConvention};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { section: String, line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey {
        key: String,
        line: usize,
        first: usize,
    },
    #[error("{}: `{key}`: {msg}", at(*line))]
    Invalid {
        key: String,
        line: usize,
        msg: String,
    },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("sweep axis `{key}`: {msg}")]
    BadAxis { key: String, msg: String },
}

fn at(line: usize) -> String {
    if line == 0 {
        "override".to_string()
    } else {
        format!("line {line}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    Text,
    List,
}

const SCHEMA: &[(&str, &str, Kind)] = &[
    ("scenario", "name", Kind::Text),
    ("scenario", "kind", Kind::Text),
    ("protocol", "family", Kind::Text),
    ("protocol", "t_start", Kind::Num),
    ("protocol", "t_end", Kind::Num),
    ("protocol", "delta0", Kind::Num),
    ("protocol", "omega0", Kind::Num),
    ("protocol", "drive_frequency", Kind::Num),
    ("protocol", "v", Kind::Num),
    ("protocol", "half_window", Kind::Num),
    ("protocol", "r0", Kind::Num),
    ("protocol", "ramp", Kind::Num),
    ("protocol", "phi0", Kind::Num),
    ("protocol", "mu", Kind::Num),
    ("protocol", "times", Kind::List),
    ("protocol", "deltas", Kind::List),
    ("protocol", "omegas", Kind::List),
    ("bath", "kappa", Kind::Num),
    ("bath", "omega_c", Kind::Num),
    ("bath", "temperature", Kind::Num),
    ("bath", "omega_l", Kind::Num),
    ("initial", "bloch", Kind::List),
    ("initial", "eigenstate", Kind::Num),
    ("integrator", "rtol", Kind::Num),
    ("integrator", "atol", Kind::Num),
    ("integrator", "h_max", Kind::Num),
    ("integrator", "max_steps", Kind::Num),
    ("integrator", "output_points", Kind::Num),
    ("rates", "source", Kind::Text),
    ("rates", "convention", Kind::Text),
    ("rates", "channels", Kind::Text),
    ("rates", "kernel", Kind::Text),
    ("rates", "lamb", Kind::Text),
    ("rates", "s_max", Kind::Num),
    ("check", "tolerance", Kind::Num),
    ("check", "contrast", Kind::Num),
    ("check", "samples", Kind::Num),
    ("output", "stem", Kind::Text),
    ("output", "csv", Kind::Text),
    ("output", "svg", Kind::Text),
    ("output", "summary", Kind::Text),
];

fn kind_of(section: &str, key: &str) -> Option<Kind> {
    SCHEMA
        .iter()
        .find(|(s, k, _)| *s == section && *k == key)
        .map(|e| e.2)
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed but not yet interpreted key-value pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: format!("unterminated section header `{s}`"),
                })?;
                let name = name.trim().to_string();
                if !SCHEMA.iter().any(|e| e.0 == name) {
                    return Err(ConfigError::UnknownSection {
                        section: name,
                        line,
                    });
                }
                section = Some(name);
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{s}`"),
            })?;
            let sec = section.as_deref().ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "key outside of any section".into(),
            })?;
            let k = k.trim();
            if kind_of(sec, k).is_none() {
                return Err(ConfigError::UnknownKey {
                    key: format!("{sec}.{k}"),
                    line,
                });
            }
            let full = format!("{sec}.{k}");
            if let Some(prev) = out.entries.get(&full) {
                return Err(ConfigError::DuplicateKey {
                    key: full,
                    line,
                    first: prev.line,
                });
            }
            let v = v.split(" #").next().unwrap_or("").trim().to_string();
            out.entries.insert(full, Entry { value: v, line });
        }
        Ok(out)
    }

    /// Replaces (or adds) a numeric key, as done by sweep axes.
    pub fn set_numeric(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        let (sec, k) = key.split_once('.').ok_or_else(|| ConfigError::BadAxis {
            key: key.into(),
            msg: "expected `section.key`".into(),
        })?;
        match kind_of(sec, k) {
            None => Err(ConfigError::BadAxis {
                key: key.into(),
                msg: "unknown key".into(),
            }),
            Some(Kind::Num) => {
                self.entries.insert(
                    key.to_string(),
                    Entry {
                        value: format!("{value:?}"),
                        line: 0,
                    },
                );
                Ok(())
            }
            Some(_) => Err(ConfigError::BadAxis {
                key: key.into(),
                msg: "not a numeric field".into(),
            }),
        }
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn text(&self, key: &str) -> Option<(&str, usize)> {
        self.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn num(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => parse_num(key, &e.value, e.line).map(Some),
        }
    }

    fn req_num(&self, key: &str) -> Result<f64, ConfigError> {
        self.num(key)?
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|s| parse_num(key, s.trim(), e.line))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.get(key).map_or(0, |e| e.line)
    }

    fn invalid(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            key: key.into(),
            line: self.line(key),
            msg: msg.into(),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.text(key) {
            None => Ok(default),
            Some(("true" | "on" | "yes", _)) => Ok(true),
            Some(("false" | "off" | "no", _)) => Ok(false),
            Some((v, line)) => Err(ConfigError::Invalid {
                key: key.into(),
                line,
                msg: format!("expected on/off, got `{v}`"),
            }),
        }
    }
}

fn parse_num(key: &str, s: &str, line: usize) -> Result<f64, ConfigError> {
    let v: f64 = s.parse().map_err(|_| ConfigError::Invalid {
        key: key.into(),
        line,
        msg: format!("expected a number, got `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(ConfigError::Invalid {
            key: key.into(),
            line,
            msg: "must be finite".into(),
        });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Dephasing,
    LandauZener,
    Adiabatic,
    InertialCheck,
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Dephasing => "dephasing",
            ScenarioKind::LandauZener => "landau-zener",
            ScenarioKind::Adiabatic => "adiabatic",
            ScenarioKind::InertialCheck => "inertial-check",
            ScenarioKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Bloch(BlochVector),
    /// invariant eigenstate `ψ₁` or `ψ₂` at the start of the window
    Eigenstate(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Zero,
    SlowPhase,
    Lz,
    Dephasing,
    MemoryKernel,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Zero => "zero",
            SourceKind::SlowPhase => "slow-phase",
            SourceKind::Lz => "lz",
            SourceKind::Dephasing => "dephasing",
            SourceKind::MemoryKernel => "memory-kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConfig {
    pub source: SourceKind,
    pub convention: RateConvention,
    pub channels: Channels,
    /// memory kernel on the dephasing-model operator instead of the channels
    pub kernel_dephasing: bool,
    pub lamb: bool,
    pub s_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub stem: String,
    pub csv: bool,
    pub svg: bool,
    pub summary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: ScenarioKind,
    pub protocol: DrivingProtocol,
    pub bath: BathSpec,
    pub initial: InitialState,
    pub ode: OdeOptions,
    pub output_points: usize,
    pub rates: RateConfig,
    /// oracle tolerance of the scenario's main check
    pub tolerance: f64,
    /// minimum closed-vs-open gap (Landau-Zener only)
    pub contrast: Option<f64>,
    /// sample count of the inertial check
    pub samples: usize,
    pub output: OutputConfig,
    raw: RawConfig,
}

const FAMILY_KEYS: &[(&str, &[&str])] = &[
    ("constant", &["delta0", "omega0", "t_start", "t_end"]),
    (
        "sine-squared",
        &["delta0", "omega0", "drive_frequency", "t_start", "t_end"],
    ),
    ("landau-zener", &["v", "omega0", "half_window"]),
    (
        "inertial",
        &["r0", "ramp", "phi0", "mu", "t_start", "t_end"],
    ),
    (
        "tabulated",
        &["times", "deltas", "omegas", "t_start", "t_end"],
    ),
];

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    /// A copy with numeric overrides applied and re-validated.
    pub fn with_overrides(&self, overrides: &[(String, f64)]) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        for (k, v) in overrides {
            raw.set_numeric(k, *v)?;
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let kind = match raw.text("scenario.kind") {
            None => return Err(ConfigError::Missing("scenario.kind".into())),
            Some(("dephasing", _)) => ScenarioKind::Dephasing,
            Some(("landau-zener", _)) => ScenarioKind::LandauZener,
            Some(("adiabatic", _)) => ScenarioKind::Adiabatic,
            Some(("inertial-check", _)) => ScenarioKind::InertialCheck,
            Some(("custom", _)) => ScenarioKind::Custom,
            Some((v, line)) => {
                return Err(ConfigError::Invalid {
                    key: "scenario.kind".into(),
                    line,
                    msg: format!(
                        "expected dephasing | landau-zener | adiabatic | inertial-check | custom, got `{v}`"
                    ),
                })
            }
        };
        let name = raw
            .text("scenario.name")
            .map_or_else(|| kind.name().to_string(), |(v, _)| v.to_string());
        let protocol = protocol_of(&raw)?;
        let bath = bath_of(&raw)?;
        let initial = initial_of(&raw, kind)?;
        let (ode, output_points) = integrator_of(&raw)?;
        let rates = rates_of(&raw, kind)?;
        if kind == ScenarioKind::InertialCheck
            && !matches!(protocol.family, Family::Inertial { .. })
        {
            return Err(raw.invalid(
                "protocol.family",
                "inertial-check needs the inertial family",
            ));
        }
        let tolerance = match raw.num("check.tolerance")? {
            Some(v) if v > 0.0 => v,
            Some(_) => return Err(raw.invalid("check.tolerance", "must be > 0")),
            None => match kind {
                ScenarioKind::Dephasing => 1e-3,
                ScenarioKind::LandauZener => 0.03,
                ScenarioKind::Adiabatic => 1e-2,
                ScenarioKind::InertialCheck => 1e-8,
                ScenarioKind::Custom => f64::INFINITY,
            },
        };
        let contrast = raw.num("check.contrast")?;
        let samples = match raw.num("check.samples")? {
            None => 40,
            Some(v) if v >= 2.0 && v.fract() == 0.0 => v as usize,
            Some(_) => return Err(raw.invalid("check.samples", "must be an integer >= 2")),
        };
        let stem = raw
            .text("output.stem")
            .map_or_else(|| name.clone(), |(v, _)| v.to_string());
        if stem.is_empty() || stem.contains(['/', '\\']) {
            return Err(raw.invalid("output.stem", "must be a plain file stem"));
        }
        let output = OutputConfig {
            stem,
            csv: raw.flag("output.csv", true)?,
            svg: raw.flag("output.svg", true)?,
            summary: raw.flag("output.summary", true)?,
        };
        Ok(Self {
            name,
            kind,
            protocol,
            bath,
            initial,
            ode,
            output_points,
            rates,
            tolerance,
            contrast,
            samples,
            output,
            raw,
        })
    }
}

fn protocol_of(raw: &RawConfig) -> Result<DrivingProtocol, ConfigError> {
    let (family, line) = raw
        .text("protocol.family")
        .ok_or_else(|| ConfigError::Missing("protocol.family".into()))?;
    let allowed = FAMILY_KEYS
        .iter()
        .find(|(f, _)| *f == family)
        .map(|e| e.1)
        .ok_or_else(|| ConfigError::Invalid {
            key: "protocol.family".into(),
            line,
            msg: format!(
                "expected constant | sine-squared | landau-zener | inertial | tabulated, got `{family}`"
            ),
        })?;
    for (full, e) in &raw.entries {
        if let Some(k) = full.strip_prefix("protocol.") {
            if k != "family" && !allowed.contains(&k) {
                return Err(ConfigError::Invalid {
                    key: full.clone(),
                    line: e.line,
                    msg: format!("does not apply to family {family}"),
                });
            }
        }
    }
    let window = || -> Result<(f64, f64), ConfigError> {
        Ok((
            raw.req_num("protocol.t_start")?,
            raw.req_num("protocol.t_end")?,
        ))
    };
    let wrap = |e: crate::driving::DrivingError| raw.invalid("protocol.family", e.to_string());
    let p = match family {
        "constant" => {
            let (a, b) = window()?;
            DrivingProtocol::constant(
                raw.req_num("protocol.delta0")?,
                raw.req_num("protocol.omega0")?,
                a,
                b,
            )
        }
        "sine-squared" => {
            let (a, b) = window()?;
            DrivingProtocol::sine_squared(
                raw.req_num("protocol.delta0")?,
                raw.req_num("protocol.omega0")?,
                raw.req_num("protocol.drive_frequency")?,
                a,
                b,
            )
        }
        "landau-zener" => {
            let v = raw.req_num("protocol.v")?;
            if !(v > 0.0) {
                return Err(raw.invalid("protocol.v", "must be > 0"));
            }
            let hw = raw.num("protocol.half_window")?;
            if let Some(w) = hw {
                if !(w > 0.0) {
                    return Err(raw.invalid("protocol.half_window", "must be > 0"));
                }
            }
            DrivingProtocol::landau_zener(v, raw.req_num("protocol.omega0")?, hw)
        }
        "inertial" => {
            let (a, b) = window()?;
            DrivingProtocol::inertial(
                raw.req_num("protocol.r0")?,
                raw.num("protocol.ramp")?.unwrap_or(0.0),
                raw.req_num("protocol.phi0")?,
                raw.req_num("protocol.mu")?,
                a,
                b,
            )
        }
        _ => {
            let (a, b) = window()?;
            let get = |k: &str| {
                raw.list(k)?
                    .ok_or_else(|| ConfigError::Missing(k.to_string()))
            };
            DrivingProtocol::tabulated(
                get("protocol.times")?,
                get("protocol.deltas")?,
                get("protocol.omegas")?,
                a,
                b,
            )
        }
    };
    p.map_err(wrap)
}

fn bath_of(raw: &RawConfig) -> Result<BathSpec, ConfigError> {
    let kappa = raw.num("bath.kappa")?.unwrap_or(0.0);
    let omega_c = raw.num("bath.omega_c")?.unwrap_or(1.0);
    let temp = raw.num("bath.temperature")?.unwrap_or(0.0);
    let omega_l = raw.num("bath.omega_l")?.unwrap_or(0.0);
    if kappa < 0.0 {
        return Err(raw.invalid("bath.kappa", format!("must be >= 0, got {kappa}")));
    }
    if omega_c <= 0.0 {
        return Err(raw.invalid("bath.omega_c", format!("must be > 0, got {omega_c}")));
    }
    if temp < 0.0 {
        return Err(raw.invalid("bath.temperature", format!("must be >= 0, got {temp}")));
    }
    BathSpec::new(kappa, omega_c, temp, omega_l)
        .map_err(|e| raw.invalid("bath.kappa", e.to_string()))
}

fn initial_of(raw: &RawConfig, kind: ScenarioKind) -> Result<InitialState, ConfigError> {
    let bloch = raw.list("initial.bloch")?;
    let eig = raw.num("initial.eigenstate")?;
    match (bloch, eig) {
        (Some(_), Some(_)) => Err(raw.invalid(
            "initial.eigenstate",
            "give either `bloch` or `eigenstate`, not both",
        )),
        (Some(b), None) => {
            if b.len() != 3 {
                return Err(raw.invalid("initial.bloch", "expected three components x, y, z"));
            }
            let v = BlochVector::new(b[0], b[1], b[2]);
            if v.norm() > 1.0 + crate::qlinalg::BLOCH_RADIUS_TOL {
                return Err(raw.invalid("initial.bloch", "Bloch vector longer than 1"));
            }
            Ok(InitialState::Bloch(v))
        }
        (None, Some(n)) if n == 1.0 || n == 2.0 => Ok(InitialState::Eigenstate(n as u8)),
        (None, Some(_)) => Err(raw.invalid("initial.eigenstate", "must be 1 or 2")),
        (None, None) => Ok(match kind {
            ScenarioKind::Dephasing => InitialState::Bloch(BlochVector::new(1.0, 0.0, 0.0)),
            _ => InitialState::Eigenstate(1),
        }),
    }
}

fn integrator_of(raw: &RawConfig) -> Result<(OdeOptions, usize), ConfigError> {
    let mut ode = OdeOptions::default();
    for (key, slot) in [
        ("integrator.rtol", &mut ode.rtol),
        ("integrator.atol", &mut ode.atol),
    ] {
        if let Some(v) = raw.num(key)? {
            if !(v > 0.0) {
                return Err(raw.invalid(key, "must be > 0"));
            }
            *slot = v;
        }
    }
    if let Some(v) = raw.num("integrator.h_max")? {
        if !(v > 0.0) {
            return Err(raw.invalid("integrator.h_max", "must be > 0"));
        }
        ode.h_max = Some(v);
    }
    if let Some(v) = raw.num("integrator.max_steps")? {
        if !(v >= 1.0) || v.fract() != 0.0 {
            return Err(raw.invalid("integrator.max_steps", "must be a positive integer"));
        }
        ode.max_steps = v as usize;
    }
    let points = match raw.num("integrator.output_points")? {
        None => 400,
        Some(v) if v >= 1.0 && v.fract() == 0.0 && v <= 1e7 => v as usize,
        Some(_) => {
            return Err(raw.invalid("integrator.output_points", "must be a positive integer"))
        }
    };
    Ok((ode, points))
}

fn rates_of(raw: &RawConfig, kind: ScenarioKind) -> Result<RateConfig, ConfigError> {
    let pick = |key: &str, options: &[&str]| -> Result<Option<String>, ConfigError> {
        match raw.text(key) {
            None => Ok(None),
            Some((v, line)) if options.contains(&v) => {
                let _ = line;
                Ok(Some(v.to_string()))
            }
            Some((v, line)) => Err(ConfigError::Invalid {
                key: key.into(),
                line,
                msg: format!("expected {}, got `{v}`", options.join(" | ")),
            }),
        }
    };
    let source = match pick(
        "rates.source",
        &["zero", "slow-phase", "lz", "dephasing", "memory-kernel"],
    )?
    .as_deref()
    {
        Some("zero") => SourceKind::Zero,
        Some("slow-phase") => SourceKind::SlowPhase,
        Some("lz") => SourceKind::Lz,
        Some("dephasing") => SourceKind::Dephasing,
        Some(_) => SourceKind::MemoryKernel,
        None => match kind {
            ScenarioKind::Dephasing => SourceKind::Dephasing,
            ScenarioKind::LandauZener => SourceKind::Lz,
            _ => SourceKind::SlowPhase,
        },
    };
    let convention = match pick("rates.convention", &["gadi", "lz_section"])?.as_deref() {
        Some("gadi") => RateConvention::Gadi,
        Some(_) => RateConvention::LzSection,
        None if kind == ScenarioKind::LandauZener => RateConvention::LzSection,
        None => RateConvention::Gadi,
    };
    let channels = match pick("rates.channels", &["x", "y", "xy"])?.as_deref() {
        Some("x") => Channels::X,
        Some("y") => Channels::Y,
        Some(_) => Channels::XY,
        None => match kind {
            ScenarioKind::LandauZener => Channels::X,
            ScenarioKind::Adiabatic => Channels::Y,
            _ => Channels::XY,
        },
    };
    let kernel_dephasing = match pick("rates.kernel", &["coupling", "dephasing"])?.as_deref() {
        Some("dephasing") => true,
        Some(_) => false,
        None => kind == ScenarioKind::Dephasing,
    };
    let s_max = raw.num("rates.s_max")?;
    if let Some(s) = s_max {
        if !(s > 0.0) {
            return Err(raw.invalid("rates.s_max", "must be > 0"));
        }
    }
    Ok(RateConfig {
        source,
        convention,
        channels,
        kernel_dephasing,
        lamb: raw.flag("rates.lamb", false)?,
        s_max,
    })
}
