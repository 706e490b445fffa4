//! Runtime invariant suite: each check sweeps seeded random instances of one
//! identity the library is built on and reports the worst residual against a
//! pinned tolerance. The CLI `check` command runs all of them; test code can
//! call individual checks with its own case counts.

use crate::optics::{detector_states, fock_output_oracle, ArmConfig, DetectorId};
use crate::qcore::{
    density_bloch, expectation, op_from_bloch, validate_density, BlochVector, QubitOperator,
    Sign, TwoQubitState,
};
use crate::random;
use crate::space1::{
    bell_quantity, conditional_stats, gleason_state_for_alpha, povm_space1, BellChoice, BellKind,
};
use crate::space2::{
    minimal_tomography_reflectivity, noise_forward, noise_invert, particular_case_arm,
    povm_space2, quasi_joint, single_arm_table, tomography_reconstruct, ClampMode, DichotomicDist,
};
use crate::stats::{joint_table, SplitMix64};

/// Outcome of one invariant sweep.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

impl CheckItem {
    fn from_residual(
        name: &'static str,
        max_residual: f64,
        tolerance: f64,
        cases: usize,
        detail: String,
    ) -> CheckItem {
        CheckItem {
            name,
            passed: max_residual <= tolerance,
            max_residual,
            tolerance,
            cases,
            detail,
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: residual {:.3e} vs {:.0e} over {} cases ({})",
            if self.passed { "ok  " } else { "FAIL" },
            self.name,
            self.max_residual,
            self.tolerance,
            self.cases,
            self.detail
        )
    }
}

/// The four detector projectors of any arm resolve the identity.
pub fn check_completeness(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let arm = random::arm(&mut rng);
        worst = worst.max(detector_states(&arm).completeness_residual());
    }
    CheckItem::from_residual(
        "detector completeness",
        worst,
        1e-12,
        cases,
        "random polarizing arms".to_string(),
    )
}

/// Click probabilities from the reduced detector states match the four-mode
/// amplitude computation.
pub fn check_oracle_equivalence(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let arm = random::arm(&mut rng);
        let input = random::pure_qubit(&mut rng);
        let ds = detector_states(&arm);
        let oracle = fock_output_oracle(&input, &arm).expect("input is normalized");
        for (i, d) in DetectorId::ALL.into_iter().enumerate() {
            worst = worst.max((ds.click_probability(d, &input) - oracle[i]).abs());
        }
    }
    CheckItem::from_residual(
        "mode-space oracle equivalence",
        worst,
        1e-12,
        cases,
        "random arms and pure inputs".to_string(),
    )
}

/// Conditioning on the recorded setting reproduces sharp projective
/// statistics exactly.
pub fn check_noise_removal(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let arm = random::nonpolarizing_arm(&mut rng, 0.05, 0.999);
        let povm = povm_space1(&arm).expect("nonpolarizing by construction");
        let rho = random::density(&mut rng);
        let s = density_bloch(&rho).expect("valid density");
        let stats = conditional_stats(&rho, &povm).expect("both settings fire");
        for alpha in Sign::BOTH {
            for j in Sign::BOTH {
                let exact = 0.5 * (1.0 + j.value() * s.dot(&povm.setting(alpha)));
                worst = worst.max((stats.p_j_given_alpha(j, alpha) - exact).abs());
            }
        }
    }
    CheckItem::from_residual(
        "conditioning removes splitter noise",
        worst,
        1e-12,
        cases,
        "random states and splitting ratios".to_string(),
    )
}

/// Element closed forms, retrodiction closed form, and setting-pair
/// factorization in the (outcome, setting) labeling.
pub fn check_outcome_setting_closed_forms(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let arm = random::nonpolarizing_arm(&mut rng, 0.05, 0.999);
        let povm = povm_space1(&arm).expect("nonpolarizing by construction");
        for j in Sign::BOTH {
            for alpha in Sign::BOTH {
                let closed = op_from_bloch(0.5, povm.setting(alpha) * (0.5 * j.value()))
                    .scale(povm.p_alpha(alpha));
                worst = worst.max(povm.element(j, alpha).max_abs_diff(&closed));
            }
        }
        let rho = random::density(&mut rng);
        let s = density_bloch(&rho).expect("valid density");
        let stats = conditional_stats(&rho, &povm).expect("both settings fire");
        let sa = povm.mean_direction();
        for alpha in Sign::BOTH {
            for j in Sign::BOTH {
                let closed = povm.p_alpha(alpha) * (1.0 + j.value() * povm.setting(alpha).dot(&s))
                    / (1.0 + j.value() * sa.dot(&s));
                worst = worst.max((stats.p_alpha_given_j(alpha, j) - closed).abs());
            }
        }
        // two arms: the setting pair is independent of the state
        let arm_b = random::nonpolarizing_arm(&mut rng, 0.05, 0.999);
        let povm_b = povm_space1(&arm_b).expect("nonpolarizing by construction");
        let rho2 = random::density_two(&mut rng);
        let table = joint_table(&rho2, &povm.labeled_a(), &povm_b.labeled_b())
            .expect("distinct axis names");
        let m = table.marginalize(&["alpha", "beta"]).expect("axes exist");
        for a in Sign::BOTH {
            for b in Sign::BOTH {
                let expect = povm.p_alpha(a) * povm_b.p_alpha(b);
                worst = worst.max((m.get(&[a, b]) - expect).abs());
            }
        }
    }
    CheckItem::from_residual(
        "outcome-setting closed forms",
        worst,
        1e-12,
        cases,
        "elements, retrodiction, setting factorization".to_string(),
    )
}

/// Whenever the colinear witness condition holds, the constructed state is a
/// valid density and reproduces the setting-conditioned statistics.
pub fn check_gleason_constructive(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    let mut hits = 0usize;
    while hits < cases {
        let arm = random::nonpolarizing_arm(&mut rng, 0.05, 0.999);
        let povm = povm_space1(&arm).expect("nonpolarizing by construction");
        let rho = random::density(&mut rng);
        let s = density_bloch(&rho).expect("valid density");
        for alpha in Sign::BOTH {
            if s.dot(&povm.setting(alpha)).abs() > povm.mean_direction().norm() {
                continue;
            }
            let witness = match gleason_state_for_alpha(s, &povm, alpha) {
                Some(w) => w,
                None => continue,
            };
            let report = validate_density(&witness);
            worst = worst.max((-report.min_eigenvalue).max(0.0));
            worst = worst.max(report.trace_residual);
            let stats = conditional_stats(&rho, &povm).expect("both settings fire");
            let marg = povm.marginals();
            for j in Sign::BOTH {
                let via_witness = expectation(&witness, marg.delta_j(j));
                worst = worst.max((via_witness - stats.p_j_given_alpha(j, alpha)).abs());
            }
            hits += 1;
        }
    }
    CheckItem::from_residual(
        "branch-state witness construction",
        worst,
        1e-12,
        cases,
        "instances satisfying the witness condition".to_string(),
    )
}

/// Separable states keep the standard and mixed Bell quantities inside the
/// classical window [-1, 0].
pub fn check_classical_window(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let rho = random::separable_state(&mut rng, 100);
        let arm_a = random::nonpolarizing_arm(&mut rng, 0.2, 0.98);
        let arm_b = random::nonpolarizing_arm(&mut rng, 0.2, 0.98);
        let pa = povm_space1(&arm_a).expect("nonpolarizing by construction");
        let pb = povm_space1(&arm_b).expect("nonpolarizing by construction");
        let table = joint_table(&rho, &pa.labeled_a(), &pb.labeled_b())
            .expect("distinct axis names");
        let pick = |rng: &mut SplitMix64| {
            if rng.next_f64() < 0.5 {
                Sign::Plus
            } else {
                Sign::Minus
            }
        };
        let choice = BellChoice {
            j: pick(&mut rng),
            k: pick(&mut rng),
            alpha: pick(&mut rng),
            beta: pick(&mut rng),
        };
        for kind in [BellKind::Standard, BellKind::Mixed] {
            let c = bell_quantity(kind, &table, &choice).expect("regular table");
            worst = worst.max(c.max(-1.0 - c).max(0.0));
        }
    }
    CheckItem::from_residual(
        "classical window on separable states",
        worst,
        1e-9,
        cases,
        "standard and mixed readings, random sign choices".to_string(),
    )
}

/// The singlet with the optimal planar settings lands exactly on the known
/// maximal violation.
pub fn check_singlet_extremum() -> CheckItem {
    use crate::optics::{BeamSplitter, PolarizationSetting};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, SQRT_2};
    let arm = |theta1: f64, theta2: f64| ArmConfig {
        bs: BeamSplitter::nonpolarizing(FRAC_1_SQRT_2),
        omega1: PolarizationSetting::new(theta1, 0.0),
        omega2: PolarizationSetting::new(theta2, 0.0),
    };
    let pa = povm_space1(&arm(0.0, FRAC_PI_2)).expect("nonpolarizing");
    let pb = povm_space1(&arm(FRAC_PI_4, 3.0 * FRAC_PI_4)).expect("nonpolarizing");
    let table = joint_table(&TwoQubitState::singlet(), &pa.labeled_a(), &pb.labeled_b())
        .expect("distinct axis names");
    let c = bell_quantity(BellKind::Standard, &table, &BellChoice::ALL_PLUS)
        .expect("regular table");
    let residual = (c + (1.0 + SQRT_2) / 2.0).abs();
    CheckItem::from_residual(
        "singlet maximal violation",
        residual,
        1e-9,
        1,
        "optimal planar settings".to_string(),
    )
}

/// The three noise amplitudes of the crossed-splitter family square-sum to
/// one, and the symmetric point makes them all equal.
pub fn check_gamma_link(points: usize) -> CheckItem {
    let mut worst = 0.0f64;
    for i in 0..points {
        let r = i as f64 / (points - 1).max(1) as f64;
        let form = povm_space2(&particular_case_arm(r).expect("r in range"))
            .gamma_form()
            .expect("equal weights by construction");
        worst = worst.max(form.link_residual());
    }
    let form = povm_space2(
        &particular_case_arm(minimal_tomography_reflectivity()).expect("r in range"),
    )
    .gamma_form()
    .expect("equal weights by construction");
    let symmetric = 1.0 / 3f64.sqrt();
    for g in form.gammas() {
        worst = worst.max((g - symmetric).abs());
    }
    CheckItem::from_residual(
        "noise amplitude link",
        worst,
        1e-12,
        points + 1,
        "reflectivity sweep plus the symmetric point".to_string(),
    )
}

/// Forward noise followed by exact inversion (and vice versa) is the
/// identity on dichotomic distributions.
pub fn check_inversion_round_trip(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let p = rng.next_f64();
        let gamma = 0.05 + 0.95 * rng.next_f64();
        let d = DichotomicDist::new(p);
        let there = noise_invert(&noise_forward(&d, gamma), gamma).expect("gamma nonzero");
        worst = worst.max((there.p_plus() - p).abs());
        let back = noise_forward(&noise_invert(&d, gamma).expect("gamma nonzero"), gamma);
        worst = worst.max((back.p_plus() - p).abs());
        // kernel composition is the exact identity matrix
        for target in Sign::BOTH {
            for source in Sign::BOTH {
                let mut acc = 0.0;
                for mid in Sign::BOTH {
                    let inv = 0.5 * (1.0 + target.value() * mid.value() / gamma);
                    let fwd = 0.5 * (1.0 + gamma * mid.value() * source.value());
                    acc += inv * fwd;
                }
                let expect = if target == source { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).abs());
            }
        }
    }
    CheckItem::from_residual(
        "noise inversion round trip",
        worst,
        1e-12,
        cases,
        "random distributions and amplitudes".to_string(),
    )
}

/// Reconstructing a state from its exact click table returns its Bloch
/// vector.
pub fn check_tomography_round_trip(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let povm = povm_space2(
        &particular_case_arm(minimal_tomography_reflectivity()).expect("r in range"),
    );
    let form = povm.gamma_form().expect("equal weights by construction");
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let s = random::bloch_in_ball(&mut rng);
        let rho = QubitOperator::density_from_bloch(s).expect("inside the ball");
        let table = single_arm_table(&rho, &povm, "j", "k").expect("valid axes");
        let rec = tomography_reconstruct(&table, &form, ClampMode::Report)
            .expect("symmetric arm is complete");
        worst = worst.max((rec.bloch - s).norm());
    }
    CheckItem::from_residual(
        "tomography round trip",
        worst,
        1e-10,
        cases,
        "symmetric arm, random states".to_string(),
    )
}

/// Single-variable marginals of the inverted joint table equal the sharp
/// statistics of the corresponding observable.
pub fn check_quasi_marginal_consistency(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let ra = 0.2 + 0.6 * rng.next_f64();
        let rb = 0.2 + 0.6 * rng.next_f64();
        let pa = povm_space2(&particular_case_arm(ra).expect("r in range"));
        let pb = povm_space2(&particular_case_arm(rb).expect("r in range"));
        let rho = random::density_two(&mut rng);
        let q = quasi_joint(&rho, &pa, &pb).expect("amplitudes nonzero");
        let sa = density_bloch(&rho.reduced_a()).expect("valid reduced state");
        let sb = density_bloch(&rho.reduced_b()).expect("valid reduced state");
        for (axis, sharp) in [("jA", sa.x), ("kA", sa.y), ("jB", sb.x), ("kB", sb.y)] {
            let m = q.marginalize(&[axis]).expect("axis exists");
            let e = m.get(&[Sign::Plus]) - m.get(&[Sign::Minus]);
            worst = worst.max((e - sharp).abs());
        }
    }
    CheckItem::from_residual(
        "quasi-joint marginal consistency",
        worst,
        1e-10,
        cases,
        "random two-qubit states, crossed arms".to_string(),
    )
}

/// The singlet's inverted table is genuinely negative while an aligned
/// product state's is not.
pub fn check_quasi_signatures() -> CheckItem {
    use std::f64::consts::FRAC_1_SQRT_2;
    let povm = povm_space2(&particular_case_arm(FRAC_1_SQRT_2).expect("r in range"));
    let singlet = quasi_joint(&TwoQubitState::singlet(), &povm, &povm)
        .expect("amplitudes nonzero");
    let z = BlochVector::new(0.0, 0.0, 1.0);
    let product = quasi_joint(
        &TwoQubitState::product_bloch(z, z).expect("unit vectors"),
        &povm,
        &povm,
    )
    .expect("amplitudes nonzero");
    let singlet_residual = (singlet.min_entry() + 1.0 / 16.0).abs();
    let entangled_is_negative = singlet.min_entry() < -1e-3;
    let product_clean = product.min_entry() >= -1e-10;
    let worst = singlet_residual
        .max(if entangled_is_negative { 0.0 } else { 1.0 })
        .max(if product_clean { 0.0 } else { 1.0 });
    CheckItem::from_residual(
        "quasi-joint negativity signature",
        worst,
        1e-12,
        2,
        "singlet negative, aligned product nonnegative".to_string(),
    )
}

/// Both labelings read the same four detectors: their POVM elements agree
/// operator by operator under the label translation.
pub fn check_labelings_share_detectors(seed: u64, cases: usize) -> CheckItem {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    let pairs = [
        ((Sign::Plus, Sign::Plus), (Sign::Plus, Sign::Plus)),
        ((Sign::Minus, Sign::Plus), (Sign::Minus, Sign::Minus)),
        ((Sign::Plus, Sign::Minus), (Sign::Plus, Sign::Minus)),
        ((Sign::Minus, Sign::Minus), (Sign::Minus, Sign::Plus)),
    ];
    for _ in 0..cases {
        let arm = random::nonpolarizing_arm(&mut rng, 0.0, 1.0);
        let p1 = povm_space1(&arm).expect("nonpolarizing by construction");
        let p2 = povm_space2(&arm);
        for ((j1, a1), (j2, k2)) in pairs {
            worst = worst.max(p1.element(j1, a1).max_abs_diff(p2.element(j2, k2)));
        }
    }
    CheckItem::from_residual(
        "labelings share the detectors",
        worst,
        1e-15,
        cases,
        "element-by-element identity".to_string(),
    )
}

/// Every check with moderate case counts; the CLI surfaces these lines.
pub fn run_all(seed: u64) -> Vec<CheckItem> {
    vec![
        check_completeness(seed, 200),
        check_oracle_equivalence(seed.wrapping_add(1), 200),
        check_noise_removal(seed.wrapping_add(2), 200),
        check_outcome_setting_closed_forms(seed.wrapping_add(3), 100),
        check_gleason_constructive(seed.wrapping_add(4), 100),
        check_classical_window(seed.wrapping_add(5), 40),
        check_singlet_extremum(),
        check_gamma_link(101),
        check_inversion_round_trip(seed.wrapping_add(6), 200),
        check_tomography_round_trip(seed.wrapping_add(7), 200),
        check_quasi_marginal_consistency(seed.wrapping_add(8), 40),
        check_quasi_signatures(),
        check_labelings_share_detectors(seed.wrapping_add(9), 100),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_with_default_counts() {
        for item in run_all(0x5EED_0001) {
            assert!(item.passed, "{}", item.summary_line());
        }
    }

    #[test]
    fn summary_lines_are_informative() {
        let item = check_singlet_extremum();
        let line = item.summary_line();
        assert!(line.starts_with("ok  "));
        assert!(line.contains("singlet"));
    }
}
