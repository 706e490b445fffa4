//! Second outcome labeling: the same four detectors read as a pair of
//! simultaneous dichotomic outcomes (j, k), one per port variable, with no
//! setting in sight. Every element then carries two commuting-looking labels
//! whose statistics are noisy versions of two incompatible sharp
//! observables, and exact noise inversion maps the observed table to a
//! quasi-probability joint for those observables.
//!
//! Detector map: D1x -> (+1, +1), D1y -> (-1, -1), D2x -> (+1, -1),
//! D2y -> (-1, +1).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{detector_states, ArmConfig, BeamSplitter, DetectorId, PolarizationSetting};
use crate::qcore::{
    bloch_decompose, density_bloch, expectation, validate_density, BlochVector, DensityReport,
    QubitOperator, Sign, TwoQubitState, TOL_ALGEBRA, TOL_VALIDITY,
};
use crate::stats::{joint_table, LabeledPovm, ProbTable, StatsError};

/// Noise amplitudes smaller than this make the inverse kernel numerically
/// meaningless (entries blow up as 1/gamma), so inversion refuses them.
pub const GAMMA_SINGULAR_TOL: f64 = 1e-9;

/// Each element's trace must sit this close to 1/2 for the equal-weight
/// correlation form to exist.
pub const EQUAL_WEIGHT_TOL: f64 = 1e-10;

/// Pivot threshold below which the three measurement axes are treated as
/// linearly dependent.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum Space2Error {
    #[error("element traces deviate from 1/2 by {deviation:.3e}; the equal-weight correlation form does not exist for this arm")]
    UnequalWeights { deviation: f64 },
    #[error("noise amplitude {gamma} on axis {axis} is too small to invert")]
    SingularInversion { axis: String, gamma: f64 },
    #[error("arm is not tomographically complete: {reason}")]
    NotTomographicallyComplete { reason: String },
    #[error("parameter {name} = {value} outside {expected}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error(transparent)]
    Table(#[from] StatsError),
}

/// POVM of one arm in the simultaneous (j, k) labeling.
#[derive(Debug, Clone)]
pub struct Space2Povm {
    elements: [[QubitOperator; 2]; 2],
}

/// Builds the labeled POVM. Any arm admits this labeling; whether the
/// elements take the equal-weight correlation form is decided later by
/// [`Space2Povm::gamma_form`].
pub fn povm_space2(arm: &ArmConfig) -> Space2Povm {
    let ds = detector_states(arm);
    let el = |d: DetectorId| QubitOperator::outer(&ds.state(d));
    let mut elements = [[QubitOperator::zero(); 2]; 2];
    elements[Sign::Plus.index()][Sign::Plus.index()] = el(DetectorId::D1x);
    elements[Sign::Minus.index()][Sign::Minus.index()] = el(DetectorId::D1y);
    elements[Sign::Plus.index()][Sign::Minus.index()] = el(DetectorId::D2x);
    elements[Sign::Minus.index()][Sign::Plus.index()] = el(DetectorId::D2y);
    Space2Povm { elements }
}

/// Splitter and analyzer settings for which the two labels read out the
/// x and y Bloch axes with amplitude `sqrt(2) r t` and their product reads
/// the z axis with amplitude `r^2 - t^2`.
pub fn particular_case_arm(r: f64) -> Result<ArmConfig, Space2Error> {
    if !(0.0..=1.0).contains(&r) || r.is_nan() {
        return Err(Space2Error::ParameterOutOfRange {
            name: "r",
            value: r,
            expected: "[0, 1]",
        });
    }
    let t = (1.0 - r * r).sqrt();
    let bs = BeamSplitter::new(t, r, r, t).expect("columns normalized by construction");
    let half = std::f64::consts::FRAC_PI_2;
    let quarter = std::f64::consts::FRAC_PI_4;
    Ok(ArmConfig {
        bs,
        omega1: PolarizationSetting::new(half, quarter),
        omega2: PolarizationSetting::new(half, -quarter),
    })
}

/// Reflectivity at which all three noise amplitudes equal `1/sqrt(3)`, the
/// symmetric point where one arm estimates all Bloch components at once.
pub fn minimal_tomography_reflectivity() -> f64 {
    (0.5 * (1.0 + 1.0 / 3f64.sqrt())).sqrt()
}

impl Space2Povm {
    pub fn element(&self, j: Sign, k: Sign) -> &QubitOperator {
        &self.elements[j.index()][k.index()]
    }

    /// The same four elements labeled for table building under the given
    /// axis names, j-like axis first.
    pub fn labeled(&self, j_axis: &str, k_axis: &str) -> LabeledPovm {
        let mut elements = Vec::with_capacity(4);
        for j in Sign::BOTH {
            for k in Sign::BOTH {
                elements.push(([j, k], *self.element(j, k)));
            }
        }
        LabeledPovm::new([j_axis.to_string(), k_axis.to_string()], elements)
            .expect("four distinct labels with validated names")
    }

    /// Decomposes the four elements as
    /// `(1/4)(I + j gX SX.s + k gY SY.s + jk gXY SXY.s)` with unit axes.
    ///
    /// The form exists exactly when every element has trace 1/2; the noise
    /// amplitudes then satisfy `gX^2 + gY^2 + gXY^2 = 1` automatically
    /// because the elements are rank one. Axes are canonicalized so their
    /// first non-negligible component is positive and the amplitude carries
    /// the sign; a vanishing amplitude comes with a zero axis.
    pub fn gamma_form(&self) -> Result<GammaForm, Space2Error> {
        let mut weight_dev = 0.0f64;
        let mut v = [[BlochVector::ZERO; 2]; 2];
        for j in Sign::BOTH {
            for k in Sign::BOTH {
                let (c0, vec) = bloch_decompose(self.element(j, k))
                    .expect("outer products are hermitian");
                weight_dev = weight_dev.max((c0 - 0.25).abs());
                v[j.index()][k.index()] = vec;
            }
        }
        if weight_dev > EQUAL_WEIGHT_TOL {
            return Err(Space2Error::UnequalWeights {
                deviation: weight_dev,
            });
        }
        let mut vx = BlochVector::ZERO;
        let mut vy = BlochVector::ZERO;
        let mut vxy = BlochVector::ZERO;
        let mut v0 = BlochVector::ZERO;
        for j in Sign::BOTH {
            for k in Sign::BOTH {
                let w = v[j.index()][k.index()];
                v0 = v0 + w;
                vx = vx + w * j.value();
                vy = vy + w * k.value();
                vxy = vxy + w * (j.value() * k.value());
            }
        }
        // completeness forces the constant character to vanish
        assert!(
            v0.norm() <= TOL_VALIDITY,
            "element Bloch vectors do not sum to zero ({})",
            v0.norm()
        );
        let (gamma_x, axis_x) = canonical_axis(vx);
        let (gamma_y, axis_y) = canonical_axis(vy);
        let (gamma_xy, axis_xy) = canonical_axis(vxy);
        Ok(GammaForm {
            gamma_x,
            gamma_y,
            gamma_xy,
            axis_x,
            axis_y,
            axis_xy,
        })
    }
}

/// Splits a vector into a signed amplitude and a unit axis whose first
/// non-negligible component is positive.
fn canonical_axis(v: BlochVector) -> (f64, BlochVector) {
    let norm = v.norm();
    if norm <= TOL_ALGEBRA {
        return (0.0, BlochVector::ZERO);
    }
    let unit = v * (1.0 / norm);
    let lead = [unit.x, unit.y, unit.z]
        .into_iter()
        .find(|c| c.abs() > 1e-9)
        .expect("unit vector has a component above 1e-9");
    if lead < 0.0 {
        (-norm, -unit)
    } else {
        (norm, unit)
    }
}

/// Equal-weight correlation form of a labeled POVM: two noisy readouts and
/// their product, each a sharp axis scaled by a noise amplitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaForm {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_xy: f64,
    pub axis_x: BlochVector,
    pub axis_y: BlochVector,
    pub axis_xy: BlochVector,
}

impl GammaForm {
    /// `|gX^2 + gY^2 + gXY^2 - 1|`; zero for every arm that admits the form.
    pub fn link_residual(&self) -> f64 {
        (self.gamma_x * self.gamma_x + self.gamma_y * self.gamma_y
            + self.gamma_xy * self.gamma_xy
            - 1.0)
            .abs()
    }

    pub fn gammas(&self) -> [f64; 3] {
        [self.gamma_x, self.gamma_y, self.gamma_xy]
    }

    pub fn axes(&self) -> [BlochVector; 3] {
        [self.axis_x, self.axis_y, self.axis_xy]
    }
}

/// Distribution of a single dichotomic variable, possibly outside the
/// simplex after noise inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomicDist {
    p_plus: f64,
}

impl DichotomicDist {
    pub fn new(p_plus: f64) -> DichotomicDist {
        DichotomicDist { p_plus }
    }

    pub fn from_expectation(e: f64) -> DichotomicDist {
        DichotomicDist {
            p_plus: 0.5 * (1.0 + e),
        }
    }

    pub fn p(&self, v: Sign) -> f64 {
        match v {
            Sign::Plus => self.p_plus,
            Sign::Minus => 1.0 - self.p_plus,
        }
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        1.0 - self.p_plus
    }

    pub fn expectation(&self) -> f64 {
        2.0 * self.p_plus - 1.0
    }

    pub fn is_proper(&self) -> bool {
        self.p_plus >= -TOL_ALGEBRA && self.p_plus <= 1.0 + TOL_ALGEBRA
    }

    pub fn negativity(&self) -> f64 {
        (-self.p_plus.min(1.0 - self.p_plus)).max(0.0)
    }
}

/// Pushes a sharp distribution through the noise channel
/// `p(out | in) = (1 + gamma * out * in) / 2`, which scales the expectation
/// by `gamma`.
pub fn noise_forward(d: &DichotomicDist, gamma: f64) -> DichotomicDist {
    DichotomicDist::from_expectation(gamma * d.expectation())
}

/// Exact inverse of [`noise_forward`]: divides the expectation by `gamma`.
/// The result can leave the simplex; that excess is the data, not an error.
pub fn noise_invert(d: &DichotomicDist, gamma: f64) -> Result<DichotomicDist, Space2Error> {
    if gamma.abs() <= GAMMA_SINGULAR_TOL {
        return Err(Space2Error::SingularInversion {
            axis: "expectation".to_string(),
            gamma,
        });
    }
    Ok(DichotomicDist::from_expectation(d.expectation() / gamma))
}

/// One observed readout: its distribution, noise amplitude, and sharp axis.
#[derive(Debug, Clone, Copy)]
pub struct NoisyMarginal {
    pub dist: DichotomicDist,
    pub gamma: f64,
    pub axis: BlochVector,
}

/// Single-arm statistics of a state under the (j, k) labeling, split into
/// the two noisy readouts and their product expectation.
#[derive(Debug, Clone, Copy)]
pub struct NoisyMarginals {
    pub x: NoisyMarginal,
    pub y: NoisyMarginal,
    /// expectation of the product jk, `gXY * SXY.s` for a state with Bloch
    /// vector s
    pub correlation: f64,
    pub gamma_xy: f64,
    pub axis_xy: BlochVector,
    joint: [[f64; 2]; 2],
}

impl NoisyMarginals {
    pub fn joint(&self, j: Sign, k: Sign) -> f64 {
        self.joint[j.index()][k.index()]
    }
}

/// Clicks of a valid density `rho` under the labeled POVM, organized per
/// readout and checked against the closed forms the gamma form dictates.
pub fn noisy_marginals(
    rho: &QubitOperator,
    povm: &Space2Povm,
) -> Result<NoisyMarginals, Space2Error> {
    let form = povm.gamma_form()?;
    let mut joint = [[0.0f64; 2]; 2];
    for j in Sign::BOTH {
        for k in Sign::BOTH {
            joint[j.index()][k.index()] = expectation(rho, povm.element(j, k));
        }
    }
    let p_j_plus = joint[0][0] + joint[0][1];
    let p_k_plus = joint[0][0] + joint[1][0];
    let correlation = joint[0][0] - joint[0][1] - joint[1][0] + joint[1][1];
    let s = density_bloch(rho).expect("caller passes a valid density");
    let checks = [
        (2.0 * p_j_plus - 1.0, form.gamma_x * s.dot(&form.axis_x)),
        (2.0 * p_k_plus - 1.0, form.gamma_y * s.dot(&form.axis_y)),
        (correlation, form.gamma_xy * s.dot(&form.axis_xy)),
    ];
    for (observed, closed) in checks {
        assert!(
            (observed - closed).abs() <= 1e-12,
            "observed expectation {observed} deviates from closed form {closed}"
        );
    }
    Ok(NoisyMarginals {
        x: NoisyMarginal {
            dist: DichotomicDist::new(p_j_plus),
            gamma: form.gamma_x,
            axis: form.axis_x,
        },
        y: NoisyMarginal {
            dist: DichotomicDist::new(p_k_plus),
            gamma: form.gamma_y,
            axis: form.axis_y,
        },
        correlation,
        gamma_xy: form.gamma_xy,
        axis_xy: form.axis_xy,
        joint,
    })
}

/// Observed single-arm table over the two named readout axes.
pub fn single_arm_table(
    rho: &QubitOperator,
    povm: &Space2Povm,
    j_axis: &str,
    k_axis: &str,
) -> Result<ProbTable, Space2Error> {
    Ok(ProbTable::from_fn(
        vec![j_axis.to_string(), k_axis.to_string()],
        false,
        |vals| expectation(rho, povm.element(vals[0], vals[1])),
    )?)
}

/// Applies the exact inverse noise kernel `(1 + k k' / gamma) / 2` to each
/// listed axis in turn. The kernels act on different axes, so the result
/// does not depend on the order. The output is marked quasi.
pub fn invert_table_axes(
    table: &ProbTable,
    axes: &[(&str, f64)],
) -> Result<ProbTable, Space2Error> {
    let mut out = table.clone();
    for &(axis, gamma) in axes {
        if gamma.abs() <= GAMMA_SINGULAR_TOL {
            return Err(Space2Error::SingularInversion {
                axis: axis.to_string(),
                gamma,
            });
        }
        out = out.transform_axis(axis, true, |target, source| {
            0.5 * (1.0 + target.value() * source.value() / gamma)
        })?;
    }
    Ok(out)
}

/// Quasi-probability joint for the four sharp observables (two per arm)
/// behind the observed four-variable click table.
///
/// Builds the observed table over axes `jA, kA, jB, kB`, then inverts the
/// readout noise per variable with each arm's own amplitudes. Marginals over
/// any single variable reproduce that observable's sharp statistics exactly;
/// negativity of the full table is what rules out a joint sharp description.
pub fn quasi_joint(
    rho: &TwoQubitState,
    povm_a: &Space2Povm,
    povm_b: &Space2Povm,
) -> Result<ProbTable, Space2Error> {
    let fa = povm_a.gamma_form()?;
    let fb = povm_b.gamma_form()?;
    let noisy = joint_table(rho, &povm_a.labeled("jA", "kA"), &povm_b.labeled("jB", "kB"))?;
    invert_table_axes(
        &noisy,
        &[
            ("jA", fa.gamma_x),
            ("kA", fa.gamma_y),
            ("jB", fb.gamma_x),
            ("kB", fb.gamma_y),
        ],
    )
}

/// What to do when the reconstructed Bloch vector lands outside the unit
/// ball (finite samples can push it out).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClampMode {
    /// Keep the raw vector and report `physical = false`.
    Report,
    /// Scale the vector back to the ball boundary.
    ClampToBall,
}

/// Outcome of a single-arm state reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct TomographyResult {
    /// Solution of the linear system, before any clamping.
    pub raw_bloch: BlochVector,
    /// Reconstructed vector after the clamp policy.
    pub bloch: BlochVector,
    /// Norm of the raw solution.
    pub norm: f64,
    pub physical: bool,
    pub clamped: bool,
    pub state: QubitOperator,
    pub report: DensityReport,
}

/// Reconstructs the Bloch vector behind an observed two-axis table.
///
/// The table's first axis is the x-like readout, the second the y-like one.
/// Expectations are divided by the noise amplitudes and the (generally
/// non-orthogonal) axis system is solved directly; the arm must have three
/// nonvanishing amplitudes and linearly independent axes.
pub fn tomography_reconstruct(
    table: &ProbTable,
    form: &GammaForm,
    clamp: ClampMode,
) -> Result<TomographyResult, Space2Error> {
    if table.axes().len() != 2 {
        return Err(Space2Error::Table(StatsError::AxisMismatch));
    }
    let mut e = [0.0f64; 3];
    for (vals, &p) in table.outcomes().zip(table.entries().iter()) {
        let (j, k) = (vals[0].value(), vals[1].value());
        e[0] += j * p;
        e[1] += k * p;
        e[2] += j * k * p;
    }
    let gammas = form.gammas();
    let axes = form.axes();
    let names = ["x", "y", "xy"];
    let mut rows = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for c in 0..3 {
        if gammas[c].abs() <= GAMMA_SINGULAR_TOL {
            return Err(Space2Error::NotTomographicallyComplete {
                reason: format!("noise amplitude for the {} readout vanishes", names[c]),
            });
        }
        rows[c] = axes[c].as_array();
        rhs[c] = e[c] / gammas[c];
    }
    let s = solve3(rows, rhs).ok_or_else(|| Space2Error::NotTomographicallyComplete {
        reason: "measurement axes do not span three dimensions".to_string(),
    })?;
    let raw = BlochVector::new(s[0], s[1], s[2]);
    let norm = raw.norm();
    let physical = norm <= 1.0 + TOL_VALIDITY;
    let (bloch, clamped) = match clamp {
        ClampMode::ClampToBall if norm > 1.0 => (raw * (1.0 / norm), true),
        _ => (raw, false),
    };
    let state = QubitOperator::density_from_bloch_unchecked(bloch);
    let report = validate_density(&state);
    Ok(TomographyResult {
        raw_bloch: raw,
        bloch,
        norm,
        physical,
        clamped,
        state,
        report,
    })
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls
/// below the dependence threshold.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() <= PIVOT_TOL {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in (row + 1)..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{op_from_bloch, tensor, TwoQubitOperator};
    use crate::random::{self, SplitMix64};
    use crate::space1::povm_space1;
    use std::f64::consts::FRAC_1_SQRT_2;

    const SQRT_3_INV: f64 = 0.5773502691896258;

    #[test]
    fn particular_case_matches_its_closed_form() {
        for r in [0.2, 0.5, FRAC_1_SQRT_2, 0.8, 0.97] {
            let arm = particular_case_arm(r).unwrap();
            let povm = povm_space2(&arm);
            let t = (1.0 - r * r).sqrt();
            let gx = std::f64::consts::SQRT_2 * r * t;
            let gxy = r * r - t * t;
            for j in Sign::BOTH {
                for k in Sign::BOTH {
                    let v = BlochVector::new(
                        j.value() * gx * 0.25,
                        k.value() * gx * 0.25,
                        j.value() * k.value() * gxy * 0.25,
                    );
                    let closed = op_from_bloch(0.25, v);
                    let dev = povm.element(j, k).max_abs_diff(&closed);
                    assert!(dev <= 1e-12, "r = {r}: deviation {dev}");
                }
            }
        }
    }

    #[test]
    fn gamma_extraction_axes_and_signs() {
        // r < t: the product amplitude is negative, the axis stays +z
        let arm = particular_case_arm(0.3).unwrap();
        let form = povm_space2(&arm).gamma_form().unwrap();
        assert!((form.axis_x - BlochVector::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((form.axis_y - BlochVector::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((form.axis_xy - BlochVector::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        let t2 = 1.0 - 0.09;
        assert!((form.gamma_xy - (0.09 - t2)).abs() < 1e-12);
        assert!(form.gamma_xy < 0.0);
        assert!(form.gamma_x > 0.0 && form.gamma_y > 0.0);
    }

    #[test]
    fn gamma_link_across_the_reflectivity_range() {
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            let arm = particular_case_arm(r).unwrap();
            let form = povm_space2(&arm).gamma_form().unwrap();
            assert!(form.link_residual() <= 1e-12, "r = {r}");
        }
    }

    #[test]
    fn minimal_tomography_point_is_symmetric() {
        let r = minimal_tomography_reflectivity();
        let form = povm_space2(&particular_case_arm(r).unwrap())
            .gamma_form()
            .unwrap();
        for g in form.gammas() {
            assert!((g - SQRT_3_INV).abs() <= 1e-12, "gamma = {g}");
        }
    }

    #[test]
    fn balanced_nonpolarizing_arms_also_take_the_form() {
        // equal weights only needs each trace = 1/2; a 50:50 splitter with
        // arbitrary analyzers qualifies
        let mut rng = SplitMix64::new(0x5042_0001);
        for _ in 0..50 {
            let arm = ArmConfig {
                bs: BeamSplitter::balanced(),
                omega1: random::polarization_setting(&mut rng),
                omega2: random::polarization_setting(&mut rng),
            };
            let form = povm_space2(&arm).gamma_form().unwrap();
            assert!(form.link_residual() <= 1e-12);
        }
    }

    #[test]
    fn unbalanced_generic_arm_is_rejected() {
        let arm = ArmConfig {
            bs: BeamSplitter::nonpolarizing(0.8),
            omega1: PolarizationSetting::new(0.3, 0.0),
            omega2: PolarizationSetting::new(1.9, 0.5),
        };
        assert!(matches!(
            povm_space2(&arm).gamma_form(),
            Err(Space2Error::UnequalWeights { .. })
        ));
    }

    #[test]
    fn same_detectors_as_the_other_labeling() {
        let mut rng = SplitMix64::new(0x5042_0002);
        for _ in 0..100 {
            let arm = random::nonpolarizing_arm(&mut rng, 0.0, 1.0);
            let p1 = povm_space1(&arm).unwrap();
            let p2 = povm_space2(&arm);
            // detector identity, label translation only
            let pairs = [
                ((Sign::Plus, Sign::Plus), (Sign::Plus, Sign::Plus)),
                ((Sign::Minus, Sign::Plus), (Sign::Minus, Sign::Minus)),
                ((Sign::Plus, Sign::Minus), (Sign::Plus, Sign::Minus)),
                ((Sign::Minus, Sign::Minus), (Sign::Minus, Sign::Plus)),
            ];
            for ((j1, a1), (j2, k2)) in pairs {
                let dev = p1.element(j1, a1).max_abs_diff(p2.element(j2, k2));
                assert!(dev <= 1e-15);
            }
        }
    }

    #[test]
    fn noise_kernel_worked_examples() {
        let sharp = DichotomicDist::new(1.0);
        let g = FRAC_1_SQRT_2;
        let noisy = noise_forward(&sharp, g);
        assert!((noisy.p_plus() - 0.8535533905932737).abs() < 1e-15);
        assert!((noisy.p_minus() - 0.1464466094067263).abs() < 1e-15);

        let observed = DichotomicDist::new(0.95);
        let sharp = noise_invert(&observed, g).unwrap();
        assert!((sharp.p_plus() - (0.5 + 0.45 * std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!((sharp.p_minus() - (0.5 - 0.45 * std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(!sharp.is_proper());
        assert!(sharp.negativity() > 0.13);
    }

    #[test]
    fn noise_round_trips_exactly() {
        let mut rng = SplitMix64::new(0x5042_0003);
        for _ in 0..500 {
            let p = rng.next_f64();
            let gamma = 0.05 + 0.95 * rng.next_f64();
            let d = DichotomicDist::new(p);
            let there = noise_invert(&noise_forward(&d, gamma), gamma).unwrap();
            assert!((there.p_plus() - p).abs() <= 1e-12);
            let back = noise_forward(&noise_invert(&d, gamma).unwrap(), gamma);
            assert!((back.p_plus() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_noise_amplitude_cannot_be_inverted() {
        let d = DichotomicDist::new(0.7);
        assert!(matches!(
            noise_invert(&d, 0.0),
            Err(Space2Error::SingularInversion { .. })
        ));
        let table = ProbTable::uniform(vec!["j".into(), "k".into()]).unwrap();
        assert!(matches!(
            invert_table_axes(&table, &[("j", 1e-12)]),
            Err(Space2Error::SingularInversion { .. })
        ));
    }

    #[test]
    fn marginals_follow_the_noisy_closed_forms() {
        let mut rng = SplitMix64::new(0x5042_0004);
        for _ in 0..200 {
            let r = 0.15 + 0.7 * rng.next_f64();
            let povm = povm_space2(&particular_case_arm(r).unwrap());
            let form = povm.gamma_form().unwrap();
            let rho = random::density(&mut rng);
            let s = density_bloch(&rho).unwrap();
            let m = noisy_marginals(&rho, &povm).unwrap();
            assert!(
                (m.x.dist.expectation() - form.gamma_x * s.x).abs() <= 1e-12,
                "x readout"
            );
            assert!(
                (m.y.dist.expectation() - form.gamma_y * s.y).abs() <= 1e-12,
                "y readout"
            );
            assert!((m.correlation - form.gamma_xy * s.z).abs() <= 1e-12);
            // inverting each readout recovers the sharp statistics
            let sx = noise_invert(&m.x.dist, m.x.gamma).unwrap();
            assert!((sx.expectation() - s.x).abs() <= 1e-12);
        }
    }

    #[test]
    fn quasi_joint_of_the_singlet_with_balanced_arms() {
        let povm = povm_space2(&particular_case_arm(FRAC_1_SQRT_2).unwrap());
        let q = quasi_joint(&TwoQubitState::singlet(), &povm, &povm).unwrap();
        assert!(q.is_quasi());
        for (vals, &p) in q.outcomes().zip(q.entries().iter()) {
            let (ja, ka, jb, kb) = (
                vals[0].value(),
                vals[1].value(),
                vals[2].value(),
                vals[3].value(),
            );
            let expect = (1.0 - ja * jb - ka * kb) / 16.0;
            assert!((p - expect).abs() <= 1e-12);
        }
        assert!((q.min_entry() + 1.0 / 16.0).abs() <= 1e-12);
        assert!(q.min_entry() < -1e-3);
    }

    #[test]
    fn quasi_joint_of_an_aligned_product_state_is_uniform() {
        let povm = povm_space2(&particular_case_arm(FRAC_1_SQRT_2).unwrap());
        let z = BlochVector::new(0.0, 0.0, 1.0);
        let rho = TwoQubitState::product_bloch(z, z).unwrap();
        let q = quasi_joint(&rho, &povm, &povm).unwrap();
        for &p in q.entries() {
            assert!((p - 1.0 / 16.0).abs() <= 1e-12);
        }
        assert!(q.min_entry() >= -1e-10);
    }

    #[test]
    fn quasi_marginals_reproduce_sharp_statistics() {
        let mut rng = SplitMix64::new(0x5042_0005);
        for _ in 0..60 {
            let ra = 0.2 + 0.6 * rng.next_f64();
            let rb = 0.2 + 0.6 * rng.next_f64();
            let pa = povm_space2(&particular_case_arm(ra).unwrap());
            let pb = povm_space2(&particular_case_arm(rb).unwrap());
            let rho = random::density_two(&mut rng);
            let q = quasi_joint(&rho, &pa, &pb).unwrap();
            let sa = density_bloch(&rho.reduced_a()).unwrap();
            let sb = density_bloch(&rho.reduced_b()).unwrap();
            let cases = [("jA", sa.x), ("kA", sa.y), ("jB", sb.x), ("kB", sb.y)];
            for (axis, sharp) in cases {
                let m = q.marginalize(&[axis]).unwrap();
                let e = m.get(&[Sign::Plus]) - m.get(&[Sign::Minus]);
                assert!((e - sharp).abs() <= 1e-10, "axis {axis}");
            }
        }
    }

    #[test]
    fn inversion_order_does_not_matter() {
        let pa = povm_space2(&particular_case_arm(0.6).unwrap());
        let pb = povm_space2(&particular_case_arm(0.75).unwrap());
        let fa = pa.gamma_form().unwrap();
        let fb = pb.gamma_form().unwrap();
        let rho = TwoQubitState::singlet();
        let noisy = joint_table(&rho, &pa.labeled("jA", "kA"), &pb.labeled("jB", "kB")).unwrap();
        let forward = invert_table_axes(
            &noisy,
            &[
                ("jA", fa.gamma_x),
                ("kA", fa.gamma_y),
                ("jB", fb.gamma_x),
                ("kB", fb.gamma_y),
            ],
        )
        .unwrap();
        let reversed = invert_table_axes(
            &noisy,
            &[
                ("kB", fb.gamma_y),
                ("jB", fb.gamma_x),
                ("kA", fa.gamma_y),
                ("jA", fa.gamma_x),
            ],
        )
        .unwrap();
        assert!(forward.total_variation(&reversed).unwrap() <= 1e-13);
    }

    #[test]
    fn tomography_round_trip() {
        let mut rng = SplitMix64::new(0x5042_0006);
        let r = minimal_tomography_reflectivity();
        let povm = povm_space2(&particular_case_arm(r).unwrap());
        let form = povm.gamma_form().unwrap();
        for _ in 0..300 {
            let s = random::bloch_in_ball(&mut rng);
            let rho = QubitOperator::density_from_bloch(s).unwrap();
            let table = single_arm_table(&rho, &povm, "j", "k").unwrap();
            let rec = tomography_reconstruct(&table, &form, ClampMode::Report).unwrap();
            assert!((rec.bloch - s).norm() <= 1e-10);
            assert!(rec.physical && !rec.clamped);
            assert!(rec.report.is_valid());
        }
    }

    #[test]
    fn tomography_handles_skew_axes() {
        // equal-weight family with free analyzer phases: axes rotate in the
        // equatorial plane and are generally non-orthogonal
        let mut rng = SplitMix64::new(0x5042_0007);
        let mut solved = 0;
        while solved < 100 {
            let r: f64 = 0.25 + 0.5 * rng.next_f64();
            let t = (1.0 - r * r).sqrt();
            let arm = ArmConfig {
                bs: BeamSplitter::new(t, r, r, t).unwrap(),
                omega1: PolarizationSetting::new(
                    std::f64::consts::FRAC_PI_2,
                    rng.next_f64() * std::f64::consts::PI,
                ),
                omega2: PolarizationSetting::new(
                    std::f64::consts::FRAC_PI_2,
                    rng.next_f64() * std::f64::consts::PI,
                ),
            };
            let povm = povm_space2(&arm);
            let form = povm.gamma_form().unwrap();
            let s = random::bloch_in_ball(&mut rng);
            let rho = QubitOperator::density_from_bloch(s).unwrap();
            let table = single_arm_table(&rho, &povm, "j", "k").unwrap();
            match tomography_reconstruct(&table, &form, ClampMode::Report) {
                Ok(rec) => {
                    assert!((rec.bloch - s).norm() <= 1e-8, "skew axes round trip");
                    solved += 1;
                }
                Err(Space2Error::NotTomographicallyComplete { .. }) => continue,
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn tomography_reports_or_clamps_nonphysical_solutions() {
        let r = minimal_tomography_reflectivity();
        let povm = povm_space2(&particular_case_arm(r).unwrap());
        let form = povm.gamma_form().unwrap();
        // inflate a near-pure state's table towards the extreme outcomes to
        // mimic sampling noise
        let s = BlochVector::new(0.0, 0.0, 0.98);
        let rho = QubitOperator::density_from_bloch(s).unwrap();
        let exact = single_arm_table(&rho, &povm, "j", "k").unwrap();
        let bumped: Vec<f64> = exact
            .entries()
            .iter()
            .map(|&p| 0.9 * p + 0.1 * if p > 0.25 { 0.5 } else { 0.0 })
            .collect();
        let sum: f64 = bumped.iter().sum();
        let table = ProbTable::new(
            exact.axes().to_vec(),
            bumped.iter().map(|p| p / sum).collect(),
            false,
        )
        .unwrap();
        let reported = tomography_reconstruct(&table, &form, ClampMode::Report).unwrap();
        if reported.norm > 1.0 + TOL_VALIDITY {
            assert!(!reported.physical);
            assert!(!reported.clamped);
            assert!(reported.report.min_eigenvalue < -TOL_VALIDITY);
            let clamped = tomography_reconstruct(&table, &form, ClampMode::ClampToBall).unwrap();
            assert!(clamped.clamped);
            assert!((clamped.bloch.norm() - 1.0).abs() <= 1e-12);
            assert!(clamped.report.is_valid());
        } else {
            panic!("bump failed to push the solution outside the ball: {}", reported.norm);
        }
    }

    #[test]
    fn degenerate_arm_is_not_tomographically_complete() {
        // balanced splitter: gamma_xy = 0, the z component is unreadable
        let povm = povm_space2(&particular_case_arm(FRAC_1_SQRT_2).unwrap());
        let form = povm.gamma_form().unwrap();
        let rho = QubitOperator::density_from_bloch(BlochVector::new(0.3, 0.1, 0.2)).unwrap();
        let table = single_arm_table(&rho, &povm, "j", "k").unwrap();
        assert!(matches!(
            tomography_reconstruct(&table, &form, ClampMode::Report),
            Err(Space2Error::NotTomographicallyComplete { .. })
        ));
    }

    #[test]
    fn parameter_range_is_enforced() {
        assert!(particular_case_arm(-0.1).is_err());
        assert!(particular_case_arm(1.1).is_err());
        assert!(particular_case_arm(f64::NAN).is_err());
    }

    #[test]
    fn joint_two_arm_table_is_a_true_distribution() {
        let mut rng = SplitMix64::new(0x5042_0008);
        for _ in 0..50 {
            let pa = povm_space2(&particular_case_arm(0.2 + 0.6 * rng.next_f64()).unwrap());
            let pb = povm_space2(&particular_case_arm(0.2 + 0.6 * rng.next_f64()).unwrap());
            let rho = random::density_two(&mut rng);
            let noisy =
                joint_table(&rho, &pa.labeled("jA", "kA"), &pb.labeled("jB", "kB")).unwrap();
            assert!(!noisy.is_quasi());
            assert!(noisy.min_entry() >= -1e-12);
        }
    }

    #[test]
    fn two_qubit_completeness_of_the_tensor_povm() {
        let pa = povm_space2(&particular_case_arm(0.4).unwrap());
        let pb = povm_space2(&particular_case_arm(0.9).unwrap());
        let mut sum = TwoQubitOperator::zero();
        for ja in Sign::BOTH {
            for ka in Sign::BOTH {
                for jb in Sign::BOTH {
                    for kb in Sign::BOTH {
                        sum = sum + tensor(pa.element(ja, ka), pb.element(jb, kb));
                    }
                }
            }
        }
        assert!(sum.max_abs_diff(&TwoQubitOperator::identity()) <= 1e-12);
    }
}
