//! First outcome labeling: each detector reports a measurement outcome `j`
//! together with the analyzer setting `alpha` that produced it, so one run
//! samples the joint pair (j, alpha) and the setting itself is random with
//! probability fixed by the splitter.
//!
//! Detector map: D1x -> (+1, +1), D1y -> (-1, +1), D2x -> (+1, -1),
//! D2y -> (-1, -1). The labeling requires a nonpolarizing splitter, so the
//! setting probabilities do not depend on the input polarization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{detector_states, poincare, ArmConfig, DetectorId};
use crate::qcore::{
    expectation, op_from_bloch, BlochVector, QubitOperator, Sign, TOL_ALGEBRA, TOL_VALIDITY,
};
use crate::stats::{LabeledPovm, ProbTable, StatsError};

/// Singles of a Bell quantity are recomputed from each discarded-setting
/// branch and must agree to this tolerance; exact tables pass at machine
/// precision, so a violation means the table lacks the product structure.
pub const SINGLES_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum Space1Error {
    #[error("labeling by (outcome, setting) needs a nonpolarizing splitter: {violated}")]
    PolarizingSplitter { violated: String },
    #[error("conditional undefined: event {event} has non-positive probability ({mass})")]
    ZeroProbability { event: String, mass: f64 },
    #[error(transparent)]
    Table(#[from] StatsError),
    #[error("singles depend on the discarded setting (max deviation {deviation:.3e}); the table lacks the required no-signaling structure")]
    InconsistentSingles { deviation: f64 },
    #[error("conditioning pair (alpha, k) does not factorize (max deviation {deviation:.3e})")]
    FactorizationViolated { deviation: f64 },
}

/// POVM of one arm in the (outcome j, setting alpha) labeling.
#[derive(Debug, Clone)]
pub struct Space1Povm {
    elements: [[QubitOperator; 2]; 2],
    p_alpha: [f64; 2],
    settings: [BlochVector; 2],
}

/// Builds the labeled POVM. The splitter must treat both polarizations
/// identically; otherwise the setting frequencies would leak information
/// about the state and the (j, alpha) reading breaks down.
pub fn povm_space1(arm: &ArmConfig) -> Result<Space1Povm, Space1Error> {
    let bs = &arm.bs;
    if (bs.t_x - bs.t_y).abs() > TOL_VALIDITY {
        return Err(Space1Error::PolarizingSplitter {
            violated: format!("t_x = {} differs from t_y = {}", bs.t_x, bs.t_y),
        });
    }
    if (bs.r_x - bs.r_y).abs() > TOL_VALIDITY {
        return Err(Space1Error::PolarizingSplitter {
            violated: format!("r_x = {} differs from r_y = {}", bs.r_x, bs.r_y),
        });
    }
    let ds = detector_states(arm);
    let el = |d: DetectorId| QubitOperator::outer(&ds.state(d));
    let mut elements = [[QubitOperator::zero(); 2]; 2];
    // rows indexed by j, columns by alpha
    elements[Sign::Plus.index()][Sign::Plus.index()] = el(DetectorId::D1x);
    elements[Sign::Minus.index()][Sign::Plus.index()] = el(DetectorId::D1y);
    elements[Sign::Plus.index()][Sign::Minus.index()] = el(DetectorId::D2x);
    elements[Sign::Minus.index()][Sign::Minus.index()] = el(DetectorId::D2y);
    Ok(Space1Povm {
        elements,
        p_alpha: [bs.r_x * bs.r_x, bs.t_x * bs.t_x],
        settings: [poincare(&arm.omega1), poincare(&arm.omega2)],
    })
}

impl Space1Povm {
    pub fn element(&self, j: Sign, alpha: Sign) -> &QubitOperator {
        &self.elements[j.index()][alpha.index()]
    }

    /// Setting frequency: reflectivity squared for alpha = +1, transmission
    /// squared for alpha = -1.
    pub fn p_alpha(&self, alpha: Sign) -> f64 {
        self.p_alpha[alpha.index()]
    }

    /// Measurement direction selected by the setting.
    pub fn setting(&self, alpha: Sign) -> BlochVector {
        self.settings[alpha.index()]
    }

    /// Frequency-weighted mean direction `p(+1) S_+ + p(-1) S_-`.
    pub fn mean_direction(&self) -> BlochVector {
        self.settings[0] * self.p_alpha[0] + self.settings[1] * self.p_alpha[1]
    }

    /// The same four elements labeled for table building under the given
    /// axis names, outcome axis first.
    pub fn labeled(&self, outcome_axis: &str, setting_axis: &str) -> LabeledPovm {
        let mut elements = Vec::with_capacity(4);
        for j in Sign::BOTH {
            for alpha in Sign::BOTH {
                elements.push(([j, alpha], *self.element(j, alpha)));
            }
        }
        LabeledPovm::new(
            [outcome_axis.to_string(), setting_axis.to_string()],
            elements,
        )
        .expect("four distinct labels with validated names")
    }

    pub fn labeled_a(&self) -> LabeledPovm {
        self.labeled("j", "alpha")
    }

    pub fn labeled_b(&self) -> LabeledPovm {
        self.labeled("k", "beta")
    }

    /// Marginal operators over each variable, computed by explicit summation
    /// and cross-checked against their closed forms.
    pub fn marginals(&self) -> Space1Marginals {
        let sum_over_j = |alpha: Sign| *self.element(Sign::Plus, alpha) + *self.element(Sign::Minus, alpha);
        let sum_over_alpha = |j: Sign| *self.element(j, Sign::Plus) + *self.element(j, Sign::Minus);
        let delta_alpha = [sum_over_j(Sign::Plus), sum_over_j(Sign::Minus)];
        let delta_j = [sum_over_alpha(Sign::Plus), sum_over_alpha(Sign::Minus)];
        let s_a = self.mean_direction();
        for alpha in Sign::BOTH {
            let closed = QubitOperator::identity().scale(self.p_alpha(alpha));
            let dev = delta_alpha[alpha.index()].max_abs_diff(&closed);
            assert!(
                dev <= TOL_ALGEBRA,
                "setting marginal deviates from p(alpha) * identity by {dev:e}"
            );
        }
        for j in Sign::BOTH {
            let closed = op_from_bloch(0.5, s_a * (0.5 * j.value()));
            let dev = delta_j[j.index()].max_abs_diff(&closed);
            assert!(
                dev <= TOL_ALGEBRA,
                "outcome marginal deviates from its closed form by {dev:e}"
            );
        }
        Space1Marginals {
            delta_alpha,
            delta_j,
            s_a,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Space1Marginals {
    delta_alpha: [QubitOperator; 2],
    delta_j: [QubitOperator; 2],
    s_a: BlochVector,
}

impl Space1Marginals {
    pub fn delta_alpha(&self, alpha: Sign) -> &QubitOperator {
        &self.delta_alpha[alpha.index()]
    }

    pub fn delta_j(&self, j: Sign) -> &QubitOperator {
        &self.delta_j[j.index()]
    }

    pub fn mean_direction(&self) -> BlochVector {
        self.s_a
    }
}

/// Joint and conditional statistics of one arm on a given state.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalStats {
    joint: [[f64; 2]; 2],
    p_j: [f64; 2],
    p_alpha: [f64; 2],
}

/// Outcome/setting statistics of `rho_a` under the labeled POVM. Errors when
/// a conditioning branch has no probability.
pub fn conditional_stats(
    rho_a: &QubitOperator,
    povm: &Space1Povm,
) -> Result<ConditionalStats, Space1Error> {
    let mut joint = [[0.0f64; 2]; 2];
    for j in Sign::BOTH {
        for alpha in Sign::BOTH {
            joint[j.index()][alpha.index()] = expectation(rho_a, povm.element(j, alpha));
        }
    }
    let p_j = [
        joint[0][0] + joint[0][1],
        joint[1][0] + joint[1][1],
    ];
    let p_alpha = [
        joint[0][0] + joint[1][0],
        joint[0][1] + joint[1][1],
    ];
    for j in Sign::BOTH {
        if p_j[j.index()] <= 0.0 {
            return Err(Space1Error::ZeroProbability {
                event: format!("j={j}"),
                mass: p_j[j.index()],
            });
        }
    }
    for alpha in Sign::BOTH {
        if p_alpha[alpha.index()] <= 0.0 {
            return Err(Space1Error::ZeroProbability {
                event: format!("alpha={alpha}"),
                mass: p_alpha[alpha.index()],
            });
        }
    }
    Ok(ConditionalStats {
        joint,
        p_j,
        p_alpha,
    })
}

impl ConditionalStats {
    pub fn joint(&self, j: Sign, alpha: Sign) -> f64 {
        self.joint[j.index()][alpha.index()]
    }

    pub fn p_j(&self, j: Sign) -> f64 {
        self.p_j[j.index()]
    }

    pub fn p_alpha(&self, alpha: Sign) -> f64 {
        self.p_alpha[alpha.index()]
    }

    /// Conditioning on the setting removes the splitter noise entirely:
    /// this equals the projective statistics of the selected direction.
    pub fn p_j_given_alpha(&self, j: Sign, alpha: Sign) -> f64 {
        self.joint[j.index()][alpha.index()] / self.p_alpha[alpha.index()]
    }

    /// Retrodicted setting. In general this differs from the blind setting
    /// frequency p(alpha): settings and outcomes are correlated.
    pub fn p_alpha_given_j(&self, alpha: Sign, j: Sign) -> f64 {
        self.joint[j.index()][alpha.index()] / self.p_j[j.index()]
    }
}

/// Largest gap between the retrodicted and the blind setting distribution.
#[derive(Debug, Clone, Copy)]
pub struct NonPovmReport {
    pub max_abs_deviation: f64,
    /// indexed by (alpha, j)
    pub deviations: [[f64; 2]; 2],
}

/// Measures how far p(alpha | j) sits from p(alpha). A nonzero value is the
/// operational sign that no setting-marginal POVM reproduces the
/// conditionals, even though the blind marginal is always p(alpha).
pub fn p_alpha_given_j_nonpovm_check(
    rho_a: &QubitOperator,
    povm: &Space1Povm,
) -> Result<NonPovmReport, Space1Error> {
    let stats = conditional_stats(rho_a, povm)?;
    let mut deviations = [[0.0f64; 2]; 2];
    let mut max_abs = 0.0f64;
    for alpha in Sign::BOTH {
        for j in Sign::BOTH {
            let d = (stats.p_alpha_given_j(alpha, j) - stats.p_alpha(alpha)).abs();
            deviations[alpha.index()][j.index()] = d;
            max_abs = max_abs.max(d);
        }
    }
    Ok(NonPovmReport {
        max_abs_deviation: max_abs,
        deviations,
    })
}

/// Minimal-norm conditional state for the branch `alpha`, when one exists.
///
/// A density matrix `rho_alpha` reproducing `p(j | alpha)` through the
/// outcome marginal requires a Bloch vector with
/// `s_alpha . S_A = s_A . S_alpha`; on the unit ball that is solvable exactly
/// when `|s_A . S_alpha| <= |S_A|`. The witness returned is the colinear
/// solution `s_alpha = (s_A . S_alpha / |S_A|^2) S_A`.
pub fn gleason_state_for_alpha(
    s_a: BlochVector,
    povm: &Space1Povm,
    alpha: Sign,
) -> Option<QubitOperator> {
    let mean = povm.mean_direction();
    let target = s_a.dot(&povm.setting(alpha));
    let mean_norm = mean.norm();
    if mean_norm <= TOL_ALGEBRA {
        if target.abs() <= TOL_ALGEBRA {
            return Some(QubitOperator::identity().scale(0.5));
        }
        return None;
    }
    if target.abs() > mean_norm + TOL_ALGEBRA {
        return None;
    }
    let mut s_alpha = mean * (target / (mean_norm * mean_norm));
    let norm = s_alpha.norm();
    if norm > 1.0 {
        // boundary case: round-off pushed the witness epsilon outside the ball
        s_alpha = s_alpha * (1.0 / norm);
    }
    Some(op_from_bloch(0.5, s_alpha * 0.5))
}

/// Which Bell-type combination to evaluate on a four-variable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    /// Condition on the setting pair (alpha, beta).
    Standard,
    /// Condition on the outcome pair (j, k).
    Dual,
    /// Condition on the mixed pair (alpha, k).
    Mixed,
}

/// The sign of each variable entering the combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellChoice {
    pub j: Sign,
    pub k: Sign,
    pub alpha: Sign,
    pub beta: Sign,
}

impl BellChoice {
    pub const ALL_PLUS: BellChoice = BellChoice {
        j: Sign::Plus,
        k: Sign::Plus,
        alpha: Sign::Plus,
        beta: Sign::Plus,
    };
}

struct TableView<'a> {
    table: &'a ProbTable,
}

impl<'a> TableView<'a> {
    fn mass(&self, given: &[(&str, Sign)]) -> Result<f64, Space1Error> {
        Ok(self.table.event_mass(given)?)
    }

    fn conditional(
        &self,
        num: &[(&str, Sign)],
        den: &[(&str, Sign)],
    ) -> Result<f64, Space1Error> {
        let d = self.mass(den)?;
        if d <= 0.0 {
            let event = den
                .iter()
                .map(|(name, v)| format!("{name}={v}"))
                .collect::<Vec<_>>()
                .join(",");
            return Err(Space1Error::ZeroProbability { event, mass: d });
        }
        let mut joint = Vec::with_capacity(num.len() + den.len());
        joint.extend_from_slice(num);
        joint.extend_from_slice(den);
        Ok(self.mass(&joint)? / d)
    }
}

/// Evaluates the chosen Bell combination on a joint table over the axes
/// `j, alpha, k, beta` (any order). For every kind the combination is a sum
/// of four double conditionals minus two singles; only the conditioning pair
/// changes. The classical window in all three readings is [-1, 0].
pub fn bell_quantity(
    kind: BellKind,
    table: &ProbTable,
    choice: &BellChoice,
) -> Result<f64, Space1Error> {
    let v = TableView { table };
    let BellChoice { j, k, alpha, beta } = *choice;
    match kind {
        BellKind::Standard => {
            let pjk = |a: Sign, b: Sign| {
                v.conditional(&[("j", j), ("k", k)], &[("alpha", a), ("beta", b)])
            };
            let c = pjk(alpha, beta)? - pjk(alpha, -beta)? + pjk(-alpha, beta)?
                + pjk(-alpha, -beta)?;
            // singles from the joint, checked against each discarded branch
            let pj = v.conditional(&[("j", j)], &[("alpha", -alpha)])?;
            let mut dev = 0.0f64;
            for b in Sign::BOTH {
                let branch = v.conditional(&[("j", j)], &[("alpha", -alpha), ("beta", b)])?;
                dev = dev.max((branch - pj).abs());
            }
            let pk = v.conditional(&[("k", k)], &[("beta", beta)])?;
            for a in Sign::BOTH {
                let branch = v.conditional(&[("k", k)], &[("beta", beta), ("alpha", a)])?;
                dev = dev.max((branch - pk).abs());
            }
            if dev > SINGLES_CONSISTENCY_TOL {
                return Err(Space1Error::InconsistentSingles { deviation: dev });
            }
            Ok(c - pj - pk)
        }
        BellKind::Dual => {
            let pab = |jj: Sign, kk: Sign| {
                v.conditional(&[("alpha", alpha), ("beta", beta)], &[("j", jj), ("k", kk)])
            };
            let c = pab(j, k)? - pab(j, -k)? + pab(-j, k)? + pab(-j, -k)?;
            let pa = v.conditional(&[("alpha", alpha)], &[("j", -j)])?;
            let pb = v.conditional(&[("beta", beta)], &[("k", k)])?;
            Ok(c - pa - pb)
        }
        BellKind::Mixed => {
            // the mixed conditioning pair must factorize for the window to
            // apply; verified here rather than assumed
            let mut dev = 0.0f64;
            for a in Sign::BOTH {
                for kk in Sign::BOTH {
                    let joint = v.mass(&[("alpha", a), ("k", kk)])?;
                    let product = v.mass(&[("alpha", a)])? * v.mass(&[("k", kk)])?;
                    dev = dev.max((joint - product).abs());
                }
            }
            if dev > SINGLES_CONSISTENCY_TOL {
                return Err(Space1Error::FactorizationViolated { deviation: dev });
            }
            let pjb = |a: Sign, kk: Sign| {
                v.conditional(&[("j", j), ("beta", beta)], &[("alpha", a), ("k", kk)])
            };
            let c = pjb(alpha, k)? - pjb(alpha, -k)? + pjb(-alpha, k)? + pjb(-alpha, -k)?;
            let pj = v.conditional(&[("j", j)], &[("alpha", -alpha)])?;
            let pb = v.conditional(&[("beta", beta)], &[("k", k)])?;
            Ok(c - pj - pb)
        }
    }
}

/// Assembles the standard combination from projective statistics directly,
/// bypassing tables: used as the independent path for consistency tests.
#[doc(hidden)]
pub fn standard_bell_from_projectors(
    rho: &crate::qcore::TwoQubitState,
    povm_a: &Space1Povm,
    povm_b: &Space1Povm,
    choice: &BellChoice,
) -> f64 {
    use crate::qcore::{expectation_two, tensor};
    let proj = |s: BlochVector, sign: Sign| op_from_bloch(0.5, s * (0.5 * sign.value()));
    let pjk = |a: Sign, b: Sign| {
        expectation_two(
            rho,
            &tensor(
                &proj(povm_a.setting(a), choice.j),
                &proj(povm_b.setting(b), choice.k),
            ),
        )
    };
    let single_a = expectation_two(
        rho,
        &tensor(
            &proj(povm_a.setting(-choice.alpha), choice.j),
            &QubitOperator::identity(),
        ),
    );
    let single_b = expectation_two(
        rho,
        &tensor(
            &QubitOperator::identity(),
            &proj(povm_b.setting(choice.beta), choice.k),
        ),
    );
    pjk(choice.alpha, choice.beta) - pjk(choice.alpha, -choice.beta)
        + pjk(-choice.alpha, choice.beta)
        + pjk(-choice.alpha, -choice.beta)
        - single_a
        - single_b
}
