//! Parameter scans over measurement scenarios: a named set of knobs (angles,
//! reflectivities, mixing weight), a grid sweep, and a monotone coordinate
//! refinement around the best grid point. Grid evaluation is parallel but
//! merged in index order, so results are reproducible.

use rayon::prelude::*;
use thiserror::Error;

use crate::optics::{ArmConfig, BeamSplitter, PolarizationSetting};
use crate::qcore::{BlochVector, Complex64, QcoreError, TwoQubitState, TOL_VALIDITY};
use crate::space1::{bell_quantity, povm_space1, BellChoice, BellKind, Space1Error};
use crate::space2::{povm_space2, quasi_joint, Space2Error};
use crate::stats::{fmt_g17, joint_table, StatsError};

/// Starting step for angle coordinates (10 degrees).
pub const REFINE_INITIAL_ANGLE_STEP: f64 = std::f64::consts::PI / 18.0;
/// Starting step for unit-interval coordinates.
pub const REFINE_INITIAL_UNIT_STEP: f64 = 0.05;
/// Refinement stops once every step falls below this.
pub const REFINE_MIN_STEP: f64 = 1e-6;
/// Hard evaluation budget for one refinement run.
pub const REFINE_MAX_EVALS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("unknown parameter key {0:?}")]
    UnknownKey(String),
    #[error("parameter {key} does not apply here: {reason}")]
    Inapplicable { key: String, reason: String },
    #[error("parameter {key} value {value} outside {domain}")]
    OutOfDomain {
        key: String,
        value: f64,
        domain: String,
    },
    #[error("point has {got} values for {expected} parameters")]
    WrongArity { expected: usize, got: usize },
    #[error("a parameter grid with zero points is empty")]
    EmptyGrid,
    #[error("every grid point failed to evaluate")]
    NoValidPoints,
    #[error(transparent)]
    State(#[from] QcoreError),
    #[error(transparent)]
    Space1(#[from] Space1Error),
    #[error(transparent)]
    Space2(#[from] Space2Error),
    #[error(transparent)]
    Table(#[from] StatsError),
}

/// Declarative two-qubit state used by scenarios and config files.
#[derive(Debug, Clone)]
pub enum StateSpec {
    Singlet,
    Werner { eta: f64 },
    ProductBloch { a: BlochVector, b: BlochVector },
    Pure { amplitudes: [Complex64; 4] },
}

impl StateSpec {
    pub fn build(&self) -> Result<TwoQubitState, ScanError> {
        Ok(match self {
            StateSpec::Singlet => TwoQubitState::singlet(),
            StateSpec::Werner { eta } => TwoQubitState::werner(*eta)?,
            StateSpec::ProductBloch { a, b } => TwoQubitState::product_bloch(*a, *b)?,
            StateSpec::Pure { amplitudes } => TwoQubitState::from_pure(*amplitudes)?,
        })
    }
}

/// A full measurement layout: the source state and both arms.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub state: StateSpec,
    pub arm_a: ArmConfig,
    pub arm_b: ArmConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmSide {
    A,
    B,
}

impl ArmSide {
    fn label(&self) -> &'static str {
        match self {
            ArmSide::A => "armA",
            ArmSide::B => "armB",
        }
    }
}

/// One scannable knob of a scenario.
///
/// String forms: `armA.theta1`, `armA.phi2`, `armB.r`, `eta`, and so on.
/// The reflectivity key replaces the arm's splitter keeping its polarization
/// pattern: a nonpolarizing splitter stays nonpolarizing, a crossed one
/// (x-transmission equal to y-reflection) stays crossed. A 50:50 splitter
/// matches both patterns and is treated as nonpolarizing, so reflectivity
/// scans over the crossed family should start away from the balanced point.
/// Angle keys rebuild the corresponding analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKey {
    ArmTheta { side: ArmSide, setting: u8 },
    ArmPhi { side: ArmSide, setting: u8 },
    ArmReflectivity { side: ArmSide },
    WernerEta,
}

impl std::fmt::Display for ParamKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamKey::ArmTheta { side, setting } => {
                write!(f, "{}.theta{}", side.label(), setting)
            }
            ParamKey::ArmPhi { side, setting } => write!(f, "{}.phi{}", side.label(), setting),
            ParamKey::ArmReflectivity { side } => write!(f, "{}.r", side.label()),
            ParamKey::WernerEta => write!(f, "eta"),
        }
    }
}

impl std::str::FromStr for ParamKey {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<ParamKey, ScanError> {
        if s == "eta" {
            return Ok(ParamKey::WernerEta);
        }
        let (side, rest) = if let Some(rest) = s.strip_prefix("armA.") {
            (ArmSide::A, rest)
        } else if let Some(rest) = s.strip_prefix("armB.") {
            (ArmSide::B, rest)
        } else {
            return Err(ScanError::UnknownKey(s.to_string()));
        };
        match rest {
            "theta1" => Ok(ParamKey::ArmTheta { side, setting: 1 }),
            "theta2" => Ok(ParamKey::ArmTheta { side, setting: 2 }),
            "phi1" => Ok(ParamKey::ArmPhi { side, setting: 1 }),
            "phi2" => Ok(ParamKey::ArmPhi { side, setting: 2 }),
            "r" => Ok(ParamKey::ArmReflectivity { side }),
            _ => Err(ScanError::UnknownKey(s.to_string())),
        }
    }
}

impl ParamKey {
    fn is_angle(&self) -> bool {
        matches!(self, ParamKey::ArmTheta { .. } | ParamKey::ArmPhi { .. })
    }

    fn initial_step(&self) -> f64 {
        if self.is_angle() {
            REFINE_INITIAL_ANGLE_STEP
        } else {
            REFINE_INITIAL_UNIT_STEP
        }
    }

    /// Angles wrap around the circle; unit-interval knobs clamp.
    fn normalize(&self, x: f64) -> f64 {
        if self.is_angle() {
            x.rem_euclid(2.0 * std::f64::consts::PI)
        } else {
            x.clamp(0.0, 1.0)
        }
    }

    fn arm<'a>(scenario: &'a mut Scenario, side: ArmSide) -> &'a mut ArmConfig {
        match side {
            ArmSide::A => &mut scenario.arm_a,
            ArmSide::B => &mut scenario.arm_b,
        }
    }

    pub fn apply(&self, scenario: &mut Scenario, value: f64) -> Result<(), ScanError> {
        match *self {
            ParamKey::ArmTheta { side, setting } => {
                let arm = ParamKey::arm(scenario, side);
                let old = if setting == 1 { &arm.omega1 } else { &arm.omega2 };
                let new = PolarizationSetting::new(value, old.phi());
                if setting == 1 {
                    arm.omega1 = new;
                } else {
                    arm.omega2 = new;
                }
                Ok(())
            }
            ParamKey::ArmPhi { side, setting } => {
                let arm = ParamKey::arm(scenario, side);
                let old = if setting == 1 { &arm.omega1 } else { &arm.omega2 };
                let new = PolarizationSetting::new(old.theta(), value);
                if setting == 1 {
                    arm.omega1 = new;
                } else {
                    arm.omega2 = new;
                }
                Ok(())
            }
            ParamKey::ArmReflectivity { side } => {
                if !(0.0..=1.0).contains(&value) || value.is_nan() {
                    return Err(ScanError::OutOfDomain {
                        key: self.to_string(),
                        value,
                        domain: "[0, 1]".to_string(),
                    });
                }
                let arm = ParamKey::arm(scenario, side);
                let bs = &arm.bs;
                if bs.is_nonpolarizing() {
                    arm.bs = BeamSplitter::nonpolarizing(value);
                } else if (bs.t_x - bs.r_y).abs() <= TOL_VALIDITY
                    && (bs.t_y - bs.r_x).abs() <= TOL_VALIDITY
                {
                    let t = (1.0 - value * value).sqrt();
                    arm.bs = BeamSplitter::new(t, value, value, t)
                        .expect("columns normalized by construction");
                } else {
                    return Err(ScanError::Inapplicable {
                        key: self.to_string(),
                        reason: "splitter is neither nonpolarizing nor crossed".to_string(),
                    });
                }
                Ok(())
            }
            ParamKey::WernerEta => {
                if !(0.0..=1.0).contains(&value) || value.is_nan() {
                    return Err(ScanError::OutOfDomain {
                        key: self.to_string(),
                        value,
                        domain: "[0, 1]".to_string(),
                    });
                }
                match &mut scenario.state {
                    StateSpec::Werner { eta } => {
                        *eta = value;
                        Ok(())
                    }
                    other => Err(ScanError::Inapplicable {
                        key: self.to_string(),
                        reason: format!("state is {other:?}, not a mixing family"),
                    }),
                }
            }
        }
    }
}

/// One knob with its grid: `count` evenly spaced values from `lo` to `hi`
/// inclusive (a single value when `count` is 1).
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: ParamKey,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl ParamSpec {
    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }
}

/// What the scan maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Excess of a Bell quantity above its classical window.
    Bell(BellKind),
    /// Negativity of the inverted-noise joint table.
    QuasiNegativity,
}

/// Distance of a Bell quantity above the classical window [-1, 0]: zero
/// inside the window, the excess beyond the nearer edge outside.
pub fn violation_objective(c: f64) -> f64 {
    c.max(-1.0 - c).max(0.0)
}

/// Objective value of one point, with the raw quantity it came from (the
/// Bell quantity itself, or the table's minimum entry).
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub objective: f64,
    pub raw: f64,
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub values: Vec<f64>,
    pub objective: f64,
    pub raw: f64,
}

/// Scan output: the best point found, the evaluated grid (empty for pure
/// refinement), and bookkeeping.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub best_values: Vec<f64>,
    pub best_objective: f64,
    pub best_raw: f64,
    pub grid: Vec<GridPoint>,
    pub evaluations: usize,
    pub skipped: usize,
    pub converged: bool,
}

/// A scenario, the knobs to move, and the figure of merit.
#[derive(Debug, Clone)]
pub struct ScanProblem {
    pub scenario: Scenario,
    pub params: Vec<ParamSpec>,
    pub objective: Objective,
    pub choice: BellChoice,
}

impl ScanProblem {
    /// Applies the values to a copy of the scenario and computes the
    /// objective there.
    pub fn evaluate(&self, values: &[f64]) -> Result<Evaluation, ScanError> {
        if values.len() != self.params.len() {
            return Err(ScanError::WrongArity {
                expected: self.params.len(),
                got: values.len(),
            });
        }
        let mut scenario = self.scenario.clone();
        for (spec, &v) in self.params.iter().zip(values) {
            spec.key.apply(&mut scenario, v)?;
        }
        let rho = scenario.state.build()?;
        match self.objective {
            Objective::Bell(kind) => {
                let pa = povm_space1(&scenario.arm_a)?;
                let pb = povm_space1(&scenario.arm_b)?;
                let table = joint_table(&rho, &pa.labeled_a(), &pb.labeled_b())?;
                let c = bell_quantity(kind, &table, &self.choice)?;
                Ok(Evaluation {
                    objective: violation_objective(c),
                    raw: c,
                })
            }
            Objective::QuasiNegativity => {
                let pa = povm_space2(&scenario.arm_a);
                let pb = povm_space2(&scenario.arm_b);
                let q = quasi_joint(&rho, &pa, &pb)?;
                Ok(Evaluation {
                    objective: q.negativity(),
                    raw: q.min_entry(),
                })
            }
        }
    }

    fn point_values(&self, flat: usize) -> Vec<f64> {
        let mut values = vec![0.0; self.params.len()];
        let mut idx = flat;
        for (slot, spec) in values.iter_mut().zip(self.params.iter()).rev() {
            *slot = spec.value(idx % spec.count);
            idx /= spec.count;
        }
        values
    }

    /// Full sweep in lexicographic order (first parameter most significant).
    /// Points that fail to evaluate are skipped and counted; ties on the
    /// objective go to the earliest point.
    pub fn grid_scan(&self) -> Result<ScanResult, ScanError> {
        if self.params.is_empty() {
            return Err(ScanError::EmptyGrid);
        }
        let mut total = 1usize;
        for spec in &self.params {
            if spec.count == 0 {
                return Err(ScanError::EmptyGrid);
            }
            total = total
                .checked_mul(spec.count)
                .expect("grid size fits in usize");
        }
        let evaluated: Vec<Option<GridPoint>> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let values = self.point_values(flat);
                self.evaluate(&values).ok().map(|e| GridPoint {
                    values,
                    objective: e.objective,
                    raw: e.raw,
                })
            })
            .collect();
        let skipped = evaluated.iter().filter(|p| p.is_none()).count();
        let grid: Vec<GridPoint> = evaluated.into_iter().flatten().collect();
        // strict comparison: ties keep the earliest point
        let mut best: Option<&GridPoint> = None;
        for point in &grid {
            if best.is_none_or(|b| point.objective > b.objective) {
                best = Some(point);
            }
        }
        let best = best.ok_or(ScanError::NoValidPoints)?;
        Ok(ScanResult {
            best_values: best.values.clone(),
            best_objective: best.objective,
            best_raw: best.raw,
            evaluations: total - skipped,
            skipped,
            grid,
            converged: true,
        })
    }

    /// Monotone coordinate search from `start`: tries one step up and down
    /// per knob, halves every step after a sweep with no improvement, stops
    /// below [`REFINE_MIN_STEP`] or at [`REFINE_MAX_EVALS`].
    pub fn refine(&self, start: &[f64]) -> Result<ScanResult, ScanError> {
        if start.len() != self.params.len() {
            return Err(ScanError::WrongArity {
                expected: self.params.len(),
                got: start.len(),
            });
        }
        let mut current: Vec<f64> = start
            .iter()
            .zip(self.params.iter())
            .map(|(&x, spec)| spec.key.normalize(x))
            .collect();
        let mut best = self.evaluate(&current)?;
        let mut steps: Vec<f64> = self.params.iter().map(|s| s.key.initial_step()).collect();
        let mut evaluations = 1usize;
        let mut skipped = 0usize;
        let mut converged = false;
        loop {
            if steps.iter().all(|&s| s < REFINE_MIN_STEP) {
                converged = true;
                break;
            }
            if evaluations >= REFINE_MAX_EVALS {
                break;
            }
            let mut improved = false;
            'sweep: for i in 0..current.len() {
                for dir in [1.0, -1.0] {
                    if evaluations >= REFINE_MAX_EVALS {
                        break 'sweep;
                    }
                    let mut candidate = current.clone();
                    candidate[i] = self.params[i].key.normalize(current[i] + dir * steps[i]);
                    evaluations += 1;
                    match self.evaluate(&candidate) {
                        Ok(e) if e.objective > best.objective => {
                            best = e;
                            current = candidate;
                            improved = true;
                            break;
                        }
                        Ok(_) => {}
                        Err(_) => skipped += 1,
                    }
                }
            }
            if !improved {
                for s in steps.iter_mut() {
                    *s *= 0.5;
                }
            }
        }
        Ok(ScanResult {
            best_values: current,
            best_objective: best.objective,
            best_raw: best.raw,
            grid: Vec::new(),
            evaluations,
            skipped,
            converged,
        })
    }

    /// Grid sweep followed by refinement from the best grid point.
    pub fn scan_and_refine(&self) -> Result<ScanResult, ScanError> {
        let coarse = self.grid_scan()?;
        let fine = self.refine(&coarse.best_values)?;
        Ok(ScanResult {
            best_values: fine.best_values,
            best_objective: fine.best_objective,
            best_raw: fine.best_raw,
            grid: coarse.grid,
            evaluations: coarse.evaluations + fine.evaluations,
            skipped: coarse.skipped + fine.skipped,
            converged: fine.converged,
        })
    }
}

/// Landscape CSV: one row per evaluated grid point, parameter columns first,
/// then the objective and the raw quantity.
pub fn landscape_csv(params: &[ParamSpec], grid: &[GridPoint]) -> String {
    let mut out = String::new();
    let names: Vec<String> = params.iter().map(|s| s.key.to_string()).collect();
    out.push_str(&names.join(","));
    if !names.is_empty() {
        out.push(',');
    }
    out.push_str("objective,raw\n");
    for point in grid {
        for v in &point.values {
            out.push_str(&fmt_g17(*v));
            out.push(',');
        }
        out.push_str(&fmt_g17(point.objective));
        out.push(',');
        out.push_str(&fmt_g17(point.raw));
        out.push('\n');
    }
    out
}
