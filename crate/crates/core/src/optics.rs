//! One arm of the experiment: a lossless two-output beam splitter followed by
//! a polarization analyzer on each output port, all acting on a single
//! photon in two polarization modes.
//!
//! The four detector states are the unnormalized qubit vectors whose overlap
//! squares give click probabilities; their outer products are the POVM
//! elements shared by both outcome labelings. `fock_output_oracle` reproduces
//! the same probabilities through the four-mode one-photon picture and serves
//! as an independent cross-check on that reduction.

use num_complex::Complex64;
use thiserror::Error;

use crate::qcore::{BlochVector, PureQubit, QubitOperator, TOL_VALIDITY};

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("input amplitudes are not normalized (|mu|^2 + |nu|^2 = {norm_sqr})")]
    InputNotNormalized { norm_sqr: f64 },
    #[error("beam splitter {which} pair violates t^2 + r^2 = 1 (residual {residual:.3e})")]
    SplitterNotNormalized { which: &'static str, residual: f64 },
    #[error("beam splitter coefficient {name} = {value} outside [0, 1]")]
    CoefficientOutOfRange { name: &'static str, value: f64 },
}

/// Analyzer direction, stored canonically with `theta` in [0, pi] and `phi`
/// in [0, 2 pi). Canonicalization uses the sphere identity
/// (theta, phi) ~ (2 pi - theta, phi + pi), which changes detector states by
/// at most a global sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationSetting {
    theta: f64,
    phi: f64,
}

impl PolarizationSetting {
    pub fn new(theta: f64, phi: f64) -> PolarizationSetting {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut th = theta.rem_euclid(two_pi);
        let mut ph = phi;
        if th > std::f64::consts::PI {
            th = two_pi - th;
            ph += std::f64::consts::PI;
        }
        ph = ph.rem_euclid(two_pi);
        PolarizationSetting { theta: th, phi: ph }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn cos_half(&self) -> f64 {
        (0.5 * self.theta).cos()
    }

    pub fn sin_half(&self) -> f64 {
        (0.5 * self.theta).sin()
    }

    pub fn phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phi)
    }
}

/// Unit vector (sin t cos p, sin t sin p, cos t) of a setting.
pub fn poincare(setting: &PolarizationSetting) -> BlochVector {
    let (st, ct) = (setting.theta.sin(), setting.theta.cos());
    let (sp, cp) = (setting.phi.sin(), setting.phi.cos());
    BlochVector::new(st * cp, st * sp, ct)
}

/// Real lossless splitter coefficients, one transmission/reflection pair per
/// polarization. Plain data: `validate_arm` reports violations, constructors
/// that cannot fail are provided for the common cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    pub t_x: f64,
    pub r_x: f64,
    pub t_y: f64,
    pub r_y: f64,
}

impl BeamSplitter {
    pub fn new(t_x: f64, r_x: f64, t_y: f64, r_y: f64) -> Result<BeamSplitter, OpticsError> {
        let bs = BeamSplitter { t_x, r_x, t_y, r_y };
        for (name, value) in [("t_x", t_x), ("r_x", r_x), ("t_y", t_y), ("r_y", r_y)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(OpticsError::CoefficientOutOfRange { name, value });
            }
        }
        let rx = bs.x_residual();
        if rx > TOL_VALIDITY {
            return Err(OpticsError::SplitterNotNormalized {
                which: "x",
                residual: rx,
            });
        }
        let ry = bs.y_residual();
        if ry > TOL_VALIDITY {
            return Err(OpticsError::SplitterNotNormalized {
                which: "y",
                residual: ry,
            });
        }
        Ok(bs)
    }

    /// Transmissions completed from reflectivities. Panics outside [0, 1];
    /// intended for programmatic sweeps where the range is already enforced.
    pub fn from_reflectivities(r_x: f64, r_y: f64) -> BeamSplitter {
        assert!(
            (0.0..=1.0).contains(&r_x) && (0.0..=1.0).contains(&r_y),
            "reflectivities must lie in [0, 1]"
        );
        BeamSplitter {
            t_x: (1.0 - r_x * r_x).sqrt(),
            r_x,
            t_y: (1.0 - r_y * r_y).sqrt(),
            r_y,
        }
    }

    /// Polarization-independent splitter with reflectivity `r`.
    pub fn nonpolarizing(r: f64) -> BeamSplitter {
        BeamSplitter::from_reflectivities(r, r)
    }

    /// 50:50 polarization-independent splitter.
    pub fn balanced() -> BeamSplitter {
        BeamSplitter::nonpolarizing(std::f64::consts::FRAC_1_SQRT_2)
    }

    pub fn x_residual(&self) -> f64 {
        (self.t_x * self.t_x + self.r_x * self.r_x - 1.0).abs()
    }

    pub fn y_residual(&self) -> f64 {
        (self.t_y * self.t_y + self.r_y * self.r_y - 1.0).abs()
    }

    pub fn is_nonpolarizing(&self) -> bool {
        (self.t_x - self.t_y).abs() <= TOL_VALIDITY && (self.r_x - self.r_y).abs() <= TOL_VALIDITY
    }
}

/// One measurement arm: splitter plus the analyzer settings on outputs 1, 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmConfig {
    pub bs: BeamSplitter,
    pub omega1: PolarizationSetting,
    pub omega2: PolarizationSetting,
}

/// The four detectors, in fixed order: output port then polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorId {
    D1x,
    D1y,
    D2x,
    D2y,
}

impl DetectorId {
    pub const ALL: [DetectorId; 4] = [
        DetectorId::D1x,
        DetectorId::D1y,
        DetectorId::D2x,
        DetectorId::D2y,
    ];

    pub fn index(self) -> usize {
        match self {
            DetectorId::D1x => 0,
            DetectorId::D1y => 1,
            DetectorId::D2x => 2,
            DetectorId::D2y => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DetectorId::D1x => "D1x",
            DetectorId::D1y => "D1y",
            DetectorId::D2x => "D2x",
            DetectorId::D2y => "D2y",
        }
    }
}

/// Unnormalized two-component detector states; click probability of detector
/// d on input chi is |<psi_d|chi>|^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorStates {
    states: [[Complex64; 2]; 4],
}

impl DetectorStates {
    pub fn state(&self, d: DetectorId) -> [Complex64; 2] {
        self.states[d.index()]
    }

    pub fn outer(&self, d: DetectorId) -> QubitOperator {
        QubitOperator::outer(&self.states[d.index()])
    }

    /// Largest entry of `sum_d |psi_d><psi_d| - I`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = QubitOperator::zero();
        for d in DetectorId::ALL {
            sum = sum + self.outer(d);
        }
        sum.max_abs_diff(&QubitOperator::identity())
    }

    pub fn click_probability(&self, d: DetectorId, input: &PureQubit) -> f64 {
        let s = self.states[d.index()];
        let overlap = s[0].conj() * input.mu + s[1].conj() * input.nu;
        overlap.norm_sqr()
    }
}

/// Reduced detector states of an arm. Output 1 carries the reflected
/// coefficients, output 2 the transmitted ones; within a port the two states
/// are the analyzer direction and its antipode at half angles.
pub fn detector_states(arm: &ArmConfig) -> DetectorStates {
    let bs = &arm.bs;
    let (c1, s1, e1) = (arm.omega1.cos_half(), arm.omega1.sin_half(), arm.omega1.phase());
    let (c2, s2, e2) = (arm.omega2.cos_half(), arm.omega2.sin_half(), arm.omega2.phase());
    let re = |x: f64| Complex64::new(x, 0.0);
    DetectorStates {
        states: [
            [re(bs.r_x * c1), e1 * (bs.r_y * s1)],
            [re(-bs.r_x * s1), e1 * (bs.r_y * c1)],
            [re(bs.t_x * c2), e2 * (bs.t_y * s2)],
            [re(-bs.t_x * s2), e2 * (bs.t_y * c2)],
        ],
    }
}

/// Click probabilities computed entirely in the four-mode one-photon space:
/// the splitter routes the input creation operators into the output modes,
/// then each analyzer projects its port pair onto the setting direction and
/// its antipode. Returns probabilities in `DetectorId` order.
///
/// This never touches `detector_states`; they must agree, which the tests
/// and the invariant suite enforce.
pub fn fock_output_oracle(input: &PureQubit, arm: &ArmConfig) -> Result<[f64; 4], OpticsError> {
    if !input.is_normalized() {
        return Err(OpticsError::InputNotNormalized {
            norm_sqr: input.norm_sqr(),
        });
    }
    let bs = &arm.bs;
    // one-photon amplitudes over output modes (1x, 2x, 1y, 2y)
    let out = [
        input.mu * bs.r_x,
        input.mu * bs.t_x,
        input.nu * bs.r_y,
        input.nu * bs.t_y,
    ];
    let (c1, s1, e1) = (arm.omega1.cos_half(), arm.omega1.sin_half(), arm.omega1.phase());
    let (c2, s2, e2) = (arm.omega2.cos_half(), arm.omega2.sin_half(), arm.omega2.phase());
    let zero = Complex64::ZERO;
    let re = |x: f64| Complex64::new(x, 0.0);
    // projection vectors on (1x, 1y) and (2x, 2y) pairs, embedded in 4 modes
    let projections = [
        [re(c1), zero, e1 * s1, zero],
        [re(-s1), zero, e1 * c1, zero],
        [zero, re(c2), zero, e2 * s2],
        [zero, re(-s2), zero, e2 * c2],
    ];
    let mut probs = [0.0f64; 4];
    for (p, proj) in probs.iter_mut().zip(projections.iter()) {
        let mut overlap = Complex64::ZERO;
        for (amp, comp) in out.iter().zip(proj.iter()) {
            overlap += comp.conj() * amp;
        }
        *p = overlap.norm_sqr();
    }
    Ok(probs)
}

/// Residual report for an arm given as raw numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmValidity {
    pub x_normalization_residual: f64,
    pub y_normalization_residual: f64,
    pub coefficients_in_range: bool,
    pub completeness_residual: f64,
}

impl ArmValidity {
    pub fn is_valid(&self) -> bool {
        self.coefficients_in_range
            && self.x_normalization_residual <= TOL_VALIDITY
            && self.y_normalization_residual <= TOL_VALIDITY
            && self.completeness_residual <= TOL_VALIDITY
    }
}

pub fn validate_arm(arm: &ArmConfig) -> ArmValidity {
    let bs = &arm.bs;
    let in_range = [bs.t_x, bs.r_x, bs.t_y, bs.r_y]
        .iter()
        .all(|v| (0.0..=1.0).contains(v));
    ArmValidity {
        x_normalization_residual: bs.x_residual(),
        y_normalization_residual: bs.y_residual(),
        coefficients_in_range: in_range,
        completeness_residual: detector_states(arm).completeness_residual(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::expectation;
    use crate::random::{self, SplitMix64};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn poincare_poles_and_equator() {
        let north = poincare(&PolarizationSetting::new(0.0, 0.0));
        assert!((north - BlochVector::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        let y = poincare(&PolarizationSetting::new(FRAC_PI_2, FRAC_PI_2));
        assert!((y - BlochVector::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        let south = poincare(&PolarizationSetting::new(PI, 0.3));
        assert!((south.z + 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonicalization_preserves_the_direction() {
        let mut rng = SplitMix64::new(0x0071_0001);
        for _ in 0..200 {
            let theta = random::uniform_in(&mut rng, -10.0, 10.0);
            let phi = random::uniform_in(&mut rng, -10.0, 10.0);
            let s = PolarizationSetting::new(theta, phi);
            assert!((0.0..=PI).contains(&s.theta()));
            assert!((0.0..2.0 * PI).contains(&s.phi()));
            // same point on the sphere as the raw angles
            let raw = BlochVector::new(
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            );
            assert!((poincare(&s) - raw).norm() < 1e-12);
        }
    }

    #[test]
    fn balanced_splitter_with_polar_analyzer() {
        // 50:50 nonpolarizing, theta1 = 0: psi_1x = (1/sqrt2, 0)
        let arm = ArmConfig {
            bs: BeamSplitter::balanced(),
            omega1: PolarizationSetting::new(0.0, 0.0),
            omega2: PolarizationSetting::new(0.0, 0.0),
        };
        let ds = detector_states(&arm);
        let psi = ds.state(DetectorId::D1x);
        assert!((psi[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(psi[0].im.abs() < 1e-15 && psi[1].norm() < 1e-15);
    }

    #[test]
    fn balanced_diagonal_analyzers() {
        // r = t = 1/sqrt2, theta1 = pi/2, phi1 = pi/4:
        // psi_1x = (1/2, e^{i pi/4}/2)
        let arm = ArmConfig {
            bs: BeamSplitter::balanced(),
            omega1: PolarizationSetting::new(FRAC_PI_2, FRAC_PI_4),
            omega2: PolarizationSetting::new(FRAC_PI_2, -FRAC_PI_4),
        };
        let psi = detector_states(&arm).state(DetectorId::D1x);
        assert!((psi[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let expect = Complex64::from_polar(0.5, FRAC_PI_4);
        assert!((psi[1] - expect).norm() < 1e-15);
    }

    #[test]
    fn completeness_over_random_arms() {
        let mut rng = SplitMix64::new(0x0071_0002);
        for _ in 0..300 {
            let arm = random::arm(&mut rng);
            let res = detector_states(&arm).completeness_residual();
            assert!(res <= 1e-12, "residual {res}");
        }
    }

    #[test]
    fn oracle_simple_routes() {
        // x-polarized photon, r_x = 1/sqrt2, polar analyzer: p(D1x) = 1/2
        let arm = ArmConfig {
            bs: BeamSplitter::balanced(),
            omega1: PolarizationSetting::new(0.0, 0.0),
            omega2: PolarizationSetting::new(0.0, 0.0),
        };
        let input = PureQubit::new(Complex64::ONE, Complex64::ZERO);
        let p = fock_output_oracle(&input, &arm).unwrap();
        assert!((p[DetectorId::D1x.index()] - 0.5).abs() < 1e-15);

        // fully transmitting in x: nothing reaches output 1 from an
        // x-polarized photon
        let arm = ArmConfig {
            bs: BeamSplitter::nonpolarizing(0.0),
            omega1: PolarizationSetting::new(1.1, 0.4),
            omega2: PolarizationSetting::new(2.0, 5.1),
        };
        let p = fock_output_oracle(&input, &arm).unwrap();
        assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15);
        assert!((p[2] + p[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_unnormalized_input() {
        let arm = ArmConfig {
            bs: BeamSplitter::balanced(),
            omega1: PolarizationSetting::new(0.0, 0.0),
            omega2: PolarizationSetting::new(0.0, 0.0),
        };
        let bad = PureQubit::new(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0));
        assert!(matches!(
            fock_output_oracle(&bad, &arm),
            Err(OpticsError::InputNotNormalized { .. })
        ));
    }

    #[test]
    fn oracle_agrees_with_detector_states() {
        let mut rng = SplitMix64::new(0x0071_0003);
        for _ in 0..300 {
            let arm = random::arm(&mut rng);
            let input = random::pure_qubit(&mut rng);
            let oracle = fock_output_oracle(&input, &arm).unwrap();
            let ds = detector_states(&arm);
            let mut total = 0.0;
            for d in DetectorId::ALL {
                let via_states = ds.click_probability(d, &input);
                let via_density = expectation(&input.density(), &ds.outer(d));
                assert!((oracle[d.index()] - via_states).abs() <= 1e-12);
                assert!((oracle[d.index()] - via_density).abs() <= 1e-12);
                total += oracle[d.index()];
            }
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn validate_arm_reports_residuals() {
        let good = ArmConfig {
            bs: BeamSplitter {
                t_x: 0.6,
                r_x: 0.8,
                t_y: 0.6,
                r_y: 0.8,
            },
            omega1: PolarizationSetting::new(0.2, 0.3),
            omega2: PolarizationSetting::new(1.2, 4.3),
        };
        assert!(validate_arm(&good).is_valid());

        let bad = ArmConfig {
            bs: BeamSplitter {
                t_x: 0.6,
                r_x: 0.7,
                t_y: 0.6,
                r_y: 0.8,
            },
            ..good
        };
        let report = validate_arm(&bad);
        assert!(!report.is_valid());
        assert!((report.x_normalization_residual - 0.15).abs() < 1e-12);
    }

    #[test]
    fn splitter_constructors() {
        assert!(BeamSplitter::new(0.6, 0.8, 0.8, 0.6).is_ok());
        assert!(matches!(
            BeamSplitter::new(0.6, 0.7, 0.6, 0.8),
            Err(OpticsError::SplitterNotNormalized { which: "x", .. })
        ));
        assert!(matches!(
            BeamSplitter::new(1.2, 0.8, 0.6, 0.8),
            Err(OpticsError::CoefficientOutOfRange { .. })
        ));
        assert!(BeamSplitter::balanced().is_nonpolarizing());
        let pol = BeamSplitter::from_reflectivities(0.3, 0.8);
        assert!(!pol.is_nonpolarizing());
    }
}
