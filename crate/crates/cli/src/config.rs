//! Experiment configuration: a single JSON file carries every physics
//! parameter; command-line flags stay operational (seed, draw count, output).
//! Errors name the offending field path so a config can be fixed from the
//! message alone.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use bellspace_core::optics::{ArmConfig, BeamSplitter, PolarizationSetting};
use bellspace_core::qcore::{BlochVector, Complex64, Sign, TwoQubitState};
use bellspace_core::scan::{Objective, ParamKey, ParamSpec, StateSpec};
use bellspace_core::space1::{BellChoice, BellKind};
use bellspace_core::space2::particular_case_arm;

/// All variants are reported on exit code 1; the split keeps the three
/// failure classes (unreadable file, malformed JSON, bad values)
/// distinguishable in the message itself.
#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Schema(String),
    Physics(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "config io: {m}"),
            ConfigError::Parse(m) => write!(f, "config parse: {m}"),
            ConfigError::Schema(m) => write!(f, "config schema: {m}"),
            ConfigError::Physics(m) => write!(f, "config physics: {m}"),
        }
    }
}

/// Which outcome labeling the subcommands should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    One,
    Two,
}

/// Fully validated configuration, ready for the library.
pub struct Experiment {
    pub state: TwoQubitState,
    pub state_spec: StateSpec,
    pub arm_a: ArmConfig,
    pub arm_b: ArmConfig,
    pub space: Space,
    pub choice: BellChoice,
    pub scan: Option<ScanSection>,
}

pub struct ScanSection {
    pub params: Vec<ParamSpec>,
    pub objective: Objective,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    state: RawState,
    #[serde(rename = "armA")]
    arm_a: RawArm,
    #[serde(rename = "armB")]
    arm_b: RawArm,
    space: u8,
    choice: Option<RawChoice>,
    scan: Option<RawScan>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawState {
    Singlet,
    Werner { eta: f64 },
    Product { a: [f64; 3], b: [f64; 3] },
    Pure { amplitudes: [[f64; 2]; 4] },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    bs: Option<RawSplitter>,
    omega1: Option<RawSetting>,
    omega2: Option<RawSetting>,
    particular_case: Option<RawParticular>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticular {
    r: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplitter {
    r: Option<f64>,
    t_x: Option<f64>,
    r_x: Option<f64>,
    t_y: Option<f64>,
    r_y: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetting {
    theta: RawAngle,
    phi: RawAngle,
}

/// Bare numbers are radians; strings must end in `deg` or `rad`.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawAngle {
    Radians(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChoice {
    j: i8,
    k: i8,
    alpha: i8,
    beta: i8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    params: Vec<RawParam>,
    objective: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    key: String,
    lo: RawAngle,
    hi: RawAngle,
    count: usize,
}

pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let raw: RawConfig = serde_json::from_str(&text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Data {
            ConfigError::Schema(e.to_string())
        } else {
            ConfigError::Parse(e.to_string())
        }
    })?;
    let space = match raw.space {
        1 => Space::One,
        2 => Space::Two,
        other => {
            return Err(ConfigError::Physics(format!(
                "space: must be 1 or 2, got {other}"
            )))
        }
    };
    let choice = match &raw.choice {
        None => BellChoice::ALL_PLUS,
        Some(c) => BellChoice {
            j: sign(c.j, "choice.j")?,
            k: sign(c.k, "choice.k")?,
            alpha: sign(c.alpha, "choice.alpha")?,
            beta: sign(c.beta, "choice.beta")?,
        },
    };
    Ok(Experiment {
        state: build_state(&raw.state)?,
        state_spec: state_spec(&raw.state),
        arm_a: build_arm(&raw.arm_a, "armA")?,
        arm_b: build_arm(&raw.arm_b, "armB")?,
        space,
        choice,
        scan: raw.scan.as_ref().map(build_scan).transpose()?,
    })
}

fn sign(v: i8, path: &str) -> Result<Sign, ConfigError> {
    match v {
        1 => Ok(Sign::Plus),
        -1 => Ok(Sign::Minus),
        other => Err(ConfigError::Physics(format!(
            "{path}: must be +1 or -1, got {other}"
        ))),
    }
}

fn angle(raw: &RawAngle, path: &str) -> Result<f64, ConfigError> {
    match raw {
        RawAngle::Radians(x) => Ok(*x),
        RawAngle::Text(s) => {
            let t = s.trim();
            let (num, to_rad) = if let Some(n) = t.strip_suffix("deg") {
                (n, true)
            } else if let Some(n) = t.strip_suffix("rad") {
                (n, false)
            } else {
                return Err(ConfigError::Schema(format!(
                    "{path}: angle strings need a deg or rad suffix, got {s:?}"
                )));
            };
            let value: f64 = num.trim().parse().map_err(|_| {
                ConfigError::Schema(format!("{path}: cannot parse angle {s:?}"))
            })?;
            Ok(if to_rad { value.to_radians() } else { value })
        }
    }
}

fn build_state(raw: &RawState) -> Result<TwoQubitState, ConfigError> {
    match raw {
        RawState::Singlet => Ok(TwoQubitState::singlet()),
        RawState::Werner { eta } => TwoQubitState::werner(*eta)
            .map_err(|e| ConfigError::Physics(format!("state.eta: {e}"))),
        RawState::Product { a, b } => TwoQubitState::product_bloch(
            BlochVector::new(a[0], a[1], a[2]),
            BlochVector::new(b[0], b[1], b[2]),
        )
        .map_err(|e| ConfigError::Physics(format!("state: {e}"))),
        RawState::Pure { amplitudes } => {
            let amps = amplitudes.map(|p| Complex64::new(p[0], p[1]));
            TwoQubitState::from_pure(amps)
                .map_err(|e| ConfigError::Physics(format!("state.amplitudes: {e}")))
        }
    }
}

fn state_spec(raw: &RawState) -> StateSpec {
    match raw {
        RawState::Singlet => StateSpec::Singlet,
        RawState::Werner { eta } => StateSpec::Werner { eta: *eta },
        RawState::Product { a, b } => StateSpec::ProductBloch {
            a: BlochVector::new(a[0], a[1], a[2]),
            b: BlochVector::new(b[0], b[1], b[2]),
        },
        RawState::Pure { amplitudes } => StateSpec::Pure {
            amplitudes: amplitudes.map(|p| Complex64::new(p[0], p[1])),
        },
    }
}

fn build_arm(raw: &RawArm, path: &str) -> Result<ArmConfig, ConfigError> {
    if let Some(pc) = &raw.particular_case {
        if raw.bs.is_some() || raw.omega1.is_some() || raw.omega2.is_some() {
            return Err(ConfigError::Schema(format!(
                "{path}: particular_case replaces bs, omega1 and omega2"
            )));
        }
        return particular_case_arm(pc.r)
            .map_err(|e| ConfigError::Physics(format!("{path}.particular_case: {e}")));
    }
    let bs = raw
        .bs
        .as_ref()
        .ok_or_else(|| ConfigError::Schema(format!("{path}.bs: missing")))?;
    Ok(ArmConfig {
        bs: build_splitter(bs, &format!("{path}.bs"))?,
        omega1: build_setting(raw.omega1.as_ref(), &format!("{path}.omega1"))?,
        omega2: build_setting(raw.omega2.as_ref(), &format!("{path}.omega2"))?,
    })
}

fn build_splitter(raw: &RawSplitter, path: &str) -> Result<BeamSplitter, ConfigError> {
    match (raw.r, raw.t_x, raw.r_x, raw.t_y, raw.r_y) {
        (Some(r), None, None, None, None) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(ConfigError::Physics(format!(
                    "{path}.r: reflectivity {r} outside [0, 1]"
                )));
            }
            Ok(BeamSplitter::nonpolarizing(r))
        }
        (None, Some(t_x), Some(r_x), Some(t_y), Some(r_y)) => {
            BeamSplitter::new(t_x, r_x, t_y, r_y)
                .map_err(|e| ConfigError::Physics(format!("{path}: {e}")))
        }
        _ => Err(ConfigError::Schema(format!(
            "{path}: give either r alone or all of t_x, r_x, t_y, r_y"
        ))),
    }
}

fn build_setting(
    raw: Option<&RawSetting>,
    path: &str,
) -> Result<PolarizationSetting, ConfigError> {
    let raw = raw.ok_or_else(|| ConfigError::Schema(format!("{path}: missing")))?;
    Ok(PolarizationSetting::new(
        angle(&raw.theta, &format!("{path}.theta"))?,
        angle(&raw.phi, &format!("{path}.phi"))?,
    ))
}

fn build_scan(raw: &RawScan) -> Result<ScanSection, ConfigError> {
    let objective = match raw.objective.as_str() {
        "standard" => Objective::Bell(BellKind::Standard),
        "dual" => Objective::Bell(BellKind::Dual),
        "mixed" => Objective::Bell(BellKind::Mixed),
        "quasi_negativity" => Objective::QuasiNegativity,
        other => {
            return Err(ConfigError::Schema(format!(
                "scan.objective: expected standard, dual, mixed or quasi_negativity, got {other:?}"
            )))
        }
    };
    let mut params = Vec::with_capacity(raw.params.len());
    for (i, p) in raw.params.iter().enumerate() {
        let key: ParamKey = p.key.parse().map_err(|e| {
            ConfigError::Schema(format!("scan.params[{i}].key: {e}"))
        })?;
        if p.count == 0 {
            return Err(ConfigError::Schema(format!(
                "scan.params[{i}].count: must be at least 1"
            )));
        }
        params.push(ParamSpec {
            key,
            lo: angle(&p.lo, &format!("scan.params[{i}].lo"))?,
            hi: angle(&p.hi, &format!("scan.params[{i}].hi"))?,
            count: p.count,
        });
    }
    if params.is_empty() {
        return Err(ConfigError::Schema(
            "scan.params: at least one parameter required".into(),
        ));
    }
    Ok(ScanSection { params, objective })
}
