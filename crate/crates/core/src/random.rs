//! Seeded samplers for states, operators and arm settings. These back the
//! invariant suite and the randomized tests; everything is deterministic in
//! the seed.

pub use crate::stats::SplitMix64;

use num_complex::Complex64;

use crate::optics::{ArmConfig, BeamSplitter, PolarizationSetting};
use crate::qcore::{BlochVector, PureQubit, QubitOperator, TwoQubitOperator, TwoQubitState};

pub fn uniform_in(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

pub fn complex_normal(rng: &mut SplitMix64) -> Complex64 {
    let (re, im) = rng.next_normal_pair();
    Complex64::new(re, im)
}

/// Uniform direction on the unit sphere.
pub fn unit_vector(rng: &mut SplitMix64) -> BlochVector {
    let z = 1.0 - 2.0 * rng.next_f64();
    let phi = 2.0 * std::f64::consts::PI * rng.next_f64();
    let r = (1.0 - z * z).max(0.0).sqrt();
    BlochVector::new(r * phi.cos(), r * phi.sin(), z)
}

/// Uniform point in the closed unit ball.
pub fn bloch_in_ball(rng: &mut SplitMix64) -> BlochVector {
    unit_vector(rng) * rng.next_f64().cbrt()
}

/// Hermitian 2x2 with entries of order one.
pub fn hermitian(rng: &mut SplitMix64) -> QubitOperator {
    let d0 = uniform_in(rng, -1.0, 1.0);
    let d1 = uniform_in(rng, -1.0, 1.0);
    let off = Complex64::new(uniform_in(rng, -1.0, 1.0), uniform_in(rng, -1.0, 1.0));
    QubitOperator::from_rows([
        [Complex64::new(d0, 0.0), off],
        [off.conj(), Complex64::new(d1, 0.0)],
    ])
}

/// Qubit density from the Ginibre ensemble: G G^dagger normalized.
pub fn density(rng: &mut SplitMix64) -> QubitOperator {
    let g = [
        [complex_normal(rng), complex_normal(rng)],
        [complex_normal(rng), complex_normal(rng)],
    ];
    let mut m = [[Complex64::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                m[i][j] += g[i][k] * g[j][k].conj();
            }
        }
    }
    let tr = (m[0][0] + m[1][1]).re;
    let op = QubitOperator::from_rows(m);
    op.scale(1.0 / tr)
}

/// Two-qubit density from the Ginibre ensemble.
pub fn density_two(rng: &mut SplitMix64) -> TwoQubitState {
    let mut g = [[Complex64::ZERO; 4]; 4];
    for row in g.iter_mut() {
        for e in row.iter_mut() {
            *e = complex_normal(rng);
        }
    }
    let mut m = [[Complex64::ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += g[i][k] * g[j][k].conj();
            }
        }
    }
    let mut tr = 0.0;
    for (i, row) in m.iter().enumerate() {
        tr += row[i].re;
    }
    let op = TwoQubitOperator::from_rows(m).scale(1.0 / tr);
    TwoQubitState::new(op).expect("Ginibre construction is a valid density")
}

/// Normalized single-photon polarization amplitudes.
pub fn pure_qubit(rng: &mut SplitMix64) -> PureQubit {
    loop {
        let mu = complex_normal(rng);
        let nu = complex_normal(rng);
        let n = (mu.norm_sqr() + nu.norm_sqr()).sqrt();
        if n > 1e-6 {
            return PureQubit::new(mu / n, nu / n);
        }
    }
}

/// Normalized two-qubit amplitudes.
pub fn pure_two_qubit(rng: &mut SplitMix64) -> [Complex64; 4] {
    loop {
        let amps = [
            complex_normal(rng),
            complex_normal(rng),
            complex_normal(rng),
            complex_normal(rng),
        ];
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            return amps.map(|a| a / n);
        }
    }
}

/// Sphere-uniform analyzer setting.
pub fn polarization_setting(rng: &mut SplitMix64) -> PolarizationSetting {
    let z = 1.0 - 2.0 * rng.next_f64();
    let phi = 2.0 * std::f64::consts::PI * rng.next_f64();
    PolarizationSetting::new(z.acos(), phi)
}

/// Fully general (possibly polarizing) splitter.
pub fn beam_splitter(rng: &mut SplitMix64) -> BeamSplitter {
    let rx = rng.next_f64();
    let ry = rng.next_f64();
    BeamSplitter::from_reflectivities(rx, ry)
}

/// General arm: independent reflectivities per polarization, sphere-uniform
/// settings on both outputs.
pub fn arm(rng: &mut SplitMix64) -> ArmConfig {
    ArmConfig {
        bs: beam_splitter(rng),
        omega1: polarization_setting(rng),
        omega2: polarization_setting(rng),
    }
}

/// Polarization-independent arm with reflectivity drawn in `[lo, hi]`.
pub fn nonpolarizing_arm(rng: &mut SplitMix64, lo: f64, hi: f64) -> ArmConfig {
    let r = uniform_in(rng, lo, hi);
    ArmConfig {
        bs: BeamSplitter::nonpolarizing(r),
        omega1: polarization_setting(rng),
        omega2: polarization_setting(rng),
    }
}

/// Convex mixture of `terms` random product states: separable by
/// construction.
pub fn separable_state(rng: &mut SplitMix64, terms: usize) -> TwoQubitState {
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.next_f64() + 1e-9).collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let mut acc = TwoQubitOperator::zero();
    for w in weights {
        let a = density(rng);
        let b = density(rng);
        acc = acc + crate::qcore::tensor(&a, &b).scale(w);
    }
    TwoQubitState::new(acc).expect("mixture of products is a valid density")
}
