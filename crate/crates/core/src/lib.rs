//! Simulation of generalized single-photon polarization measurements on one or
//! two arms, the dichotomic POVMs they induce, Bell-type quantities in two
//! outcome labelings, exact noise inversion, state tomography, and
//! deterministic parameter scans.
//!
//! Layering, bottom up:
//!
//! * [`qcore`]: complex 2x2 / 4x4 operators, Bloch decompositions, states.
//! * [`optics`]: beam-splitter arms, detector states, the one-photon
//!   mode-space oracle.
//! * [`stats`]: probability tables over dichotomic variables, seeded
//!   sampling, CSV round-trips.
//! * [`space1`] / [`space2`]: the two outcome labelings of the same four
//!   detectors, with their POVMs, conditionals and Bell quantities.
//! * [`scan`]: grid scans and coordinate-search refinement over arm settings.
//! * [`selfcheck`]: the runtime invariant suite behind `bellspace check`.

pub mod qcore;

pub mod optics;

pub mod stats;

pub mod space1;

pub mod space2;

pub mod random;

pub mod scan;

pub mod selfcheck;

pub use qcore::{
    bloch_decompose, expectation, expectation_two, op_from_bloch, partial_trace_a,
    partial_trace_b, tensor, validate_density, validate_density_two, BlochVector, DensityReport,
    PureQubit, QubitOperator, Sign, TwoQubitOperator, TwoQubitState, TOL_ALGEBRA, TOL_VALIDITY,
};

pub use optics::{
    detector_states, fock_output_oracle, poincare, validate_arm, ArmConfig, ArmValidity,
    BeamSplitter, DetectorId, DetectorStates, PolarizationSetting,
};

pub use stats::{joint_table, sample_counts, ClickCounts, LabeledPovm, ProbTable, SplitMix64};

pub use space1::{
    bell_quantity, conditional_stats, gleason_state_for_alpha, p_alpha_given_j_nonpovm_check,
    povm_space1, BellChoice, BellKind, ConditionalStats, NonPovmReport, Space1Error,
    Space1Marginals, Space1Povm,
};

pub use space2::{
    invert_table_axes, minimal_tomography_reflectivity, noise_forward, noise_invert,
    noisy_marginals, particular_case_arm, povm_space2, quasi_joint, single_arm_table,
    tomography_reconstruct, ClampMode, DichotomicDist, GammaForm, NoisyMarginal, NoisyMarginals,
    Space2Error, Space2Povm, TomographyResult,
};

pub use scan::{
    landscape_csv, violation_objective, ArmSide, GridPoint, Objective, ParamKey, ParamSpec,
    ScanError, ScanProblem, ScanResult, Scenario, StateSpec,
};
