//! Subcommand implementations. Commands translate the experiment into
//! library calls and route errors to the two exit classes: impossible
//! requests (bad flags, arms that cannot support the operation) are
//! validation failures, everything discovered while crunching is runtime.

use std::fs;
use std::path::Path;

use bellspace_core::qcore::Sign;
use bellspace_core::scan::{landscape_csv, Objective, ScanProblem, Scenario};
use bellspace_core::selfcheck;
use bellspace_core::space1::{bell_quantity, povm_space1, BellKind, Space1Povm};
use bellspace_core::space2::{
    invert_table_axes, povm_space2, single_arm_table, tomography_reconstruct, ClampMode,
    GammaForm, Space2Error, TomographyResult,
};
use bellspace_core::stats::{joint_table, sample_counts, ProbTable, StatsError};

use crate::config::{Experiment, Space};
use crate::emit::{self, arr, num, qstr, Obj};
use crate::{CliError, Format, ScanMode};

/// Tolerance around the classical window edges in verdicts.
const WINDOW_TOL: f64 = 1e-9;

fn rt(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn val(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// The physical click table of the configured pair of arms, with the axis
/// names of the chosen labeling.
fn joint(exp: &Experiment) -> Result<ProbTable, CliError> {
    match exp.space {
        Space::One => {
            let pa = space1_povm(exp, ArmPick::A)?;
            let pb = space1_povm(exp, ArmPick::B)?;
            joint_table(&exp.state, &pa.labeled_a(), &pb.labeled_b()).map_err(rt)
        }
        Space::Two => {
            let pa = povm_space2(&exp.arm_a).labeled("jA", "kA");
            let pb = povm_space2(&exp.arm_b).labeled("jB", "kB");
            joint_table(&exp.state, &pa, &pb).map_err(rt)
        }
    }
}

#[derive(Clone, Copy)]
enum ArmPick {
    A,
    B,
}

impl ArmPick {
    fn label(self) -> &'static str {
        match self {
            ArmPick::A => "A",
            ArmPick::B => "B",
        }
    }
}

fn space1_povm(exp: &Experiment, pick: ArmPick) -> Result<Space1Povm, CliError> {
    let arm = match pick {
        ArmPick::A => &exp.arm_a,
        ArmPick::B => &exp.arm_b,
    };
    povm_space1(arm).map_err(|e| CliError::Validation(format!("arm{}: {e}", pick.label())))
}

fn gamma_json(form: &GammaForm) -> String {
    Obj::new()
        .num("gamma_x", form.gamma_x)
        .num("gamma_y", form.gamma_y)
        .num("gamma_xy", form.gamma_xy)
        .field("axis_x", emit::vector(&form.axis_x))
        .field("axis_y", emit::vector(&form.axis_y))
        .field("axis_xy", emit::vector(&form.axis_xy))
        .num("link_residual", form.link_residual())
        .close()
}

pub fn povm(exp: &Experiment, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let text = match (exp.space, format) {
        (Space::One, Format::Json) => {
            let mut arms = Vec::new();
            for pick in [ArmPick::A, ArmPick::B] {
                let p = space1_povm(exp, pick)?;
                let mut elements = Vec::new();
                for j in Sign::BOTH {
                    for alpha in Sign::BOTH {
                        elements.push(
                            Obj::new()
                                .field("j", j.value().to_string())
                                .field("alpha", alpha.value().to_string())
                                .field("matrix", emit::matrix(p.element(j, alpha)))
                                .close(),
                        );
                    }
                }
                arms.push(
                    Obj::new()
                        .field("arm", qstr(pick.label()))
                        .field(
                            "p_alpha",
                            Obj::new()
                                .num("+1", p.p_alpha(Sign::Plus))
                                .num("-1", p.p_alpha(Sign::Minus))
                                .close(),
                        )
                        .field(
                            "settings",
                            Obj::new()
                                .field("+1", emit::vector(&p.setting(Sign::Plus)))
                                .field("-1", emit::vector(&p.setting(Sign::Minus)))
                                .close(),
                        )
                        .field("mean_direction", emit::vector(&p.mean_direction()))
                        .field("elements", arr(elements))
                        .close(),
                );
            }
            Obj::new()
                .field("space", "1")
                .field("arms", arr(arms))
                .close()
        }
        (Space::Two, Format::Json) => {
            let mut arms = Vec::new();
            for (label, arm) in [("A", &exp.arm_a), ("B", &exp.arm_b)] {
                let p = povm_space2(arm);
                let mut elements = Vec::new();
                for j in Sign::BOTH {
                    for k in Sign::BOTH {
                        elements.push(
                            Obj::new()
                                .field("j", j.value().to_string())
                                .field("k", k.value().to_string())
                                .field("matrix", emit::matrix(p.element(j, k)))
                                .close(),
                        );
                    }
                }
                let mut obj = Obj::new()
                    .field("arm", qstr(label))
                    .field("elements", arr(elements));
                obj = match p.gamma_form() {
                    Ok(form) => obj.field("gamma", gamma_json(&form)),
                    Err(e) => obj
                        .field("gamma", "null")
                        .field("gamma_error", qstr(&e.to_string())),
                };
                arms.push(obj.close());
            }
            Obj::new()
                .field("space", "2")
                .field("arms", arr(arms))
                .close()
        }
        (space, Format::Csv) => {
            let second = match space {
                Space::One => "alpha",
                Space::Two => "k",
            };
            let mut text = format!(
                "arm,j,{second},re00,im00,re01,im01,re10,im10,re11,im11\n"
            );
            for (label, arm) in [("A", &exp.arm_a), ("B", &exp.arm_b)] {
                for j in Sign::BOTH {
                    for other in Sign::BOTH {
                        let element = match space {
                            Space::One => {
                                let pick = if label == "A" { ArmPick::A } else { ArmPick::B };
                                *space1_povm(exp, pick)?.element(j, other)
                            }
                            Space::Two => *povm_space2(arm).element(j, other),
                        };
                        text.push_str(&format!("{label},{},{}", j.value(), other.value()));
                        for row in 0..2 {
                            for col in 0..2 {
                                let z = element.entry(row, col);
                                text.push_str(&format!(",{},{}", num(z.re), num(z.im)));
                            }
                        }
                        text.push('\n');
                    }
                }
            }
            text
        }
    };
    emit::write_output(text, out)
}

pub fn probs(
    exp: &Experiment,
    marginal: Option<&str>,
    given: &[String],
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut table = joint(exp)?;
    if !given.is_empty() {
        let mut events: Vec<(String, Sign)> = Vec::with_capacity(given.len());
        for item in given {
            let (axis, value) = item.split_once('=').ok_or_else(|| {
                val(format!("--given needs axis=+1 or axis=-1, got {item:?}"))
            })?;
            let sign = match value.trim() {
                "1" | "+1" => Sign::Plus,
                "-1" => Sign::Minus,
                other => return Err(val(format!("--given {axis}: bad sign {other:?}"))),
            };
            events.push((axis.trim().to_string(), sign));
        }
        let refs: Vec<(&str, Sign)> = events.iter().map(|(a, s)| (a.as_str(), *s)).collect();
        table = table.condition(&refs).map_err(|e| match e {
            StatsError::ZeroProbabilityEvent { .. } => rt(e),
            other => val(other),
        })?;
    }
    if let Some(keep) = marginal {
        let axes: Vec<&str> = keep
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        table = table.marginalize(&axes).map_err(val)?;
    }
    let text = match format {
        Format::Json => emit::table_json(&table),
        Format::Csv => table.to_csv(),
    };
    emit::write_output(text, out)
}

pub fn bell(exp: &Experiment, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    if exp.space != Space::One {
        return Err(val(
            "bell quantities live in the outcome/setting labeling; set \"space\": 1",
        ));
    }
    let table = joint(exp)?;
    let kinds = [
        (BellKind::Standard, "standard", "C"),
        (BellKind::Dual, "dual", "C'"),
        (BellKind::Mixed, "mixed", "C\""),
    ];
    let mut rows = Vec::new();
    for (kind, name, symbol) in kinds {
        let value = bell_quantity(kind, &table, &exp.choice).map_err(rt)?;
        let verdict = if value < -1.0 - WINDOW_TOL || value > WINDOW_TOL {
            "VIOLATION"
        } else {
            "within window"
        };
        rows.push((name, symbol, value, verdict));
    }
    let text = match format {
        Format::Json => {
            let quantities = rows.iter().map(|(name, symbol, value, verdict)| {
                Obj::new()
                    .field("kind", qstr(name))
                    .field("symbol", qstr(symbol))
                    .num("value", *value)
                    .field("verdict", qstr(verdict))
                    .close()
            });
            Obj::new()
                .field(
                    "choice",
                    Obj::new()
                        .field("j", exp.choice.j.value().to_string())
                        .field("k", exp.choice.k.value().to_string())
                        .field("alpha", exp.choice.alpha.value().to_string())
                        .field("beta", exp.choice.beta.value().to_string())
                        .close(),
                )
                .field("window", format!("[{},{}]", num(-1.0), num(0.0)))
                .field("quantities", arr(quantities.collect::<Vec<_>>()))
                .close()
        }
        Format::Csv => {
            let mut text = String::from("kind,value,verdict\n");
            for (name, _, value, verdict) in &rows {
                text.push_str(&format!("{name},{},{verdict}\n", num(*value)));
            }
            text
        }
    };
    emit::write_output(text, out)
}

pub fn sample(
    exp: &Experiment,
    n: u64,
    seed: u64,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let table = joint(exp)?;
    let counts = sample_counts(&table, n, seed).map_err(rt)?;
    let text = match format {
        Format::Json => emit::counts_json(&counts),
        Format::Csv => counts.to_csv(),
    };
    emit::write_output(text, out)
}

pub fn invert(
    exp: &Experiment,
    table_path: Option<&Path>,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if exp.space != Space::Two {
        return Err(val(
            "noise inversion acts on the simultaneous labeling; set \"space\": 2",
        ));
    }
    let form_a = povm_space2(&exp.arm_a)
        .gamma_form()
        .map_err(|e| CliError::Validation(format!("armA: {e}")))?;
    let form_b = povm_space2(&exp.arm_b)
        .gamma_form()
        .map_err(|e| CliError::Validation(format!("armB: {e}")))?;
    let table = match table_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| val(format!("{}: {e}", path.display())))?;
            ProbTable::from_csv(&text).map_err(val)?
        }
        None => joint(exp)?,
    };
    let pairs: Vec<(&str, f64)> = if table.axes() == ["jA", "kA", "jB", "kB"] {
        vec![
            ("jA", form_a.gamma_x),
            ("kA", form_a.gamma_y),
            ("jB", form_b.gamma_x),
            ("kB", form_b.gamma_y),
        ]
    } else if table.axes() == ["j", "k"] {
        vec![("j", form_a.gamma_x), ("k", form_a.gamma_y)]
    } else {
        return Err(val(format!(
            "table axes must be jA,kA,jB,kB or j,k, got {}",
            table.axes().join(",")
        )));
    };
    let inverted = invert_table_axes(&table, &pairs).map_err(rt)?;
    let text = match format {
        Format::Json => {
            let applied = pairs.iter().map(|(axis, gamma)| {
                Obj::new()
                    .field("axis", qstr(axis))
                    .num("gamma", *gamma)
                    .close()
            });
            Obj::new()
                .field("applied", arr(applied.collect::<Vec<_>>()))
                .field("table", emit::table_json(&inverted))
                .close()
        }
        Format::Csv => inverted.to_csv(),
    };
    emit::write_output(text, out)
}

fn tomo_error(e: Space2Error) -> CliError {
    match e {
        Space2Error::NotTomographicallyComplete { .. }
        | Space2Error::SingularInversion { .. } => val(e),
        other => rt(other),
    }
}

fn tomo_result_json(r: &TomographyResult) -> String {
    Obj::new()
        .field("raw_bloch", emit::vector(&r.raw_bloch))
        .field("bloch", emit::vector(&r.bloch))
        .num("norm", r.norm)
        .field("physical", if r.physical { "true" } else { "false" })
        .field("clamped", if r.clamped { "true" } else { "false" })
        .field("state", emit::matrix(&r.state))
        .field("report", emit::density_report(&r.report))
        .close()
}

fn tomo_csv_row(label: &str, r: &TomographyResult) -> String {
    format!(
        "{label},{},{},{},{},{},{},{},{},{}\n",
        num(r.bloch.x),
        num(r.bloch.y),
        num(r.bloch.z),
        num(r.raw_bloch.x),
        num(r.raw_bloch.y),
        num(r.raw_bloch.z),
        num(r.norm),
        r.physical,
        r.clamped
    )
}

pub fn tomo(
    exp: &Experiment,
    table_path: Option<&Path>,
    clamp: bool,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if exp.space != Space::Two {
        return Err(val(
            "tomography reads the simultaneous labeling; set \"space\": 2",
        ));
    }
    let mode = if clamp {
        ClampMode::ClampToBall
    } else {
        ClampMode::Report
    };
    let mode_name = if clamp { "ball" } else { "report" };
    const TOMO_CSV_HEADER: &str =
        "arm,sx,sy,sz,raw_sx,raw_sy,raw_sz,norm,physical,clamped\n";
    let text = match table_path {
        Some(path) => {
            let csv = fs::read_to_string(path)
                .map_err(|e| val(format!("{}: {e}", path.display())))?;
            let table = ProbTable::from_csv(&csv).map_err(val)?;
            let form = povm_space2(&exp.arm_a)
                .gamma_form()
                .map_err(|e| CliError::Validation(format!("armA: {e}")))?;
            let result = tomography_reconstruct(&table, &form, mode).map_err(tomo_error)?;
            match format {
                Format::Json => Obj::new()
                    .field("clamp", qstr(mode_name))
                    .field("gamma", gamma_json(&form))
                    .field("result", tomo_result_json(&result))
                    .close(),
                Format::Csv => format!("{TOMO_CSV_HEADER}{}", tomo_csv_row("table", &result)),
            }
        }
        None => {
            let mut arms = Vec::new();
            for (label, arm, rho) in [
                ("A", &exp.arm_a, exp.state.reduced_a()),
                ("B", &exp.arm_b, exp.state.reduced_b()),
            ] {
                let povm = povm_space2(arm);
                let form = povm
                    .gamma_form()
                    .map_err(|e| CliError::Validation(format!("arm{label}: {e}")))?;
                let table = single_arm_table(&rho, &povm, "j", "k").map_err(rt)?;
                let result =
                    tomography_reconstruct(&table, &form, mode).map_err(tomo_error)?;
                arms.push((label, form, result));
            }
            match format {
                Format::Json => {
                    let rows = arms.iter().map(|(label, form, result)| {
                        Obj::new()
                            .field("arm", qstr(label))
                            .field("gamma", gamma_json(form))
                            .field("result", tomo_result_json(result))
                            .close()
                    });
                    Obj::new()
                        .field("clamp", qstr(mode_name))
                        .field("arms", arr(rows.collect::<Vec<_>>()))
                        .close()
                }
                Format::Csv => {
                    let mut text = String::from(TOMO_CSV_HEADER);
                    for (label, _, result) in &arms {
                        text.push_str(&tomo_csv_row(label, result));
                    }
                    text
                }
            }
        }
    };
    emit::write_output(text, out)
}

pub fn scan(
    exp: &Experiment,
    mode: ScanMode,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let section = exp
        .scan
        .as_ref()
        .ok_or_else(|| val("config has no scan section"))?;
    let problem = ScanProblem {
        scenario: Scenario {
            state: exp.state_spec.clone(),
            arm_a: exp.arm_a,
            arm_b: exp.arm_b,
        },
        params: section.params.clone(),
        objective: section.objective,
        choice: exp.choice,
    };
    let result = match mode {
        ScanMode::Grid => problem.grid_scan(),
        ScanMode::Refine => problem.scan_and_refine(),
    }
    .map_err(rt)?;
    let text = match format {
        Format::Json => {
            let best = problem
                .params
                .iter()
                .zip(&result.best_values)
                .map(|(spec, value)| {
                    Obj::new()
                        .field("key", qstr(&spec.key.to_string()))
                        .num("value", *value)
                        .close()
                });
            let objective_name = match section.objective {
                Objective::Bell(BellKind::Standard) => "standard",
                Objective::Bell(BellKind::Dual) => "dual",
                Objective::Bell(BellKind::Mixed) => "mixed",
                Objective::QuasiNegativity => "quasi_negativity",
            };
            Obj::new()
                .field(
                    "mode",
                    qstr(match mode {
                        ScanMode::Grid => "grid",
                        ScanMode::Refine => "refine",
                    }),
                )
                .field("objective", qstr(objective_name))
                .field("best", arr(best.collect::<Vec<_>>()))
                .num("best_objective", result.best_objective)
                .num("best_raw", result.best_raw)
                .field("evaluations", result.evaluations.to_string())
                .field("skipped", result.skipped.to_string())
                .field("converged", if result.converged { "true" } else { "false" })
                .close()
        }
        Format::Csv => landscape_csv(&problem.params, &result.grid),
    };
    emit::write_output(text, out)
}

pub fn check(seed: u64) -> Result<(), CliError> {
    let items = selfcheck::run_all(seed);
    let mut report = String::new();
    let mut failed = 0usize;
    for item in &items {
        report.push_str(&item.summary_line());
        report.push('\n');
        if !item.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        report.push_str(&format!("all {} checks passed\n", items.len()));
        emit::print_stdout(&report)
    } else {
        emit::print_stdout(&report)?;
        Err(CliError::Runtime(format!(
            "{failed} of {} checks failed",
            items.len()
        )))
    }
}
