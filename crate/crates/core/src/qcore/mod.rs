//! Complex 2x2 and 4x4 operators, Bloch decompositions, and the states used
//! throughout the crate.
//!
//! Conventions are fixed once here: the Pauli basis is `sigma_1 = X`,
//! `sigma_2 = Y` (with `+i` in the lower-left entry), `sigma_3 = Z`, and a
//! qubit density matrix is `(sigma_0 + s.sigma)/2` for a Bloch vector `s`.
//! Two-qubit indices are row-major Kronecker order: basis state `|a b>` maps
//! to index `2a + b` with subsystem A first.

mod eig;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use num_complex::Complex64;

/// Tolerance for validity checks on user-facing inputs: density positivity,
/// trace normalization, amplitude normalization, beam-splitter coefficients.
/// Loose enough to absorb honest round-off from upstream computations.
pub const TOL_VALIDITY: f64 = 1e-10;

/// Tolerance for exact algebraic identities recomputed in double precision:
/// decomposition round-trips, POVM completeness, closed-form comparisons.
pub const TOL_ALGEBRA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum QcoreError {
    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("state amplitudes are not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("not a valid density matrix: {report}")]
    InvalidDensity { report: DensityReport },
    #[error("Bloch vector leaves the unit ball (norm {norm})")]
    BlochOutOfBall { norm: f64 },
    #[error("parameter {name} = {value} outside {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

/// A dichotomic outcome or setting label, valued in {+1, -1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn int(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// Slot used by tables and fixed-size arrays: +1 first.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Sign {
        if i == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> Result<Sign, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("expected +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.int()
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+1"),
            Sign::Minus => write!(f, "-1"),
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;
    fn from_str(s: &str) -> Result<Sign, String> {
        match s.trim() {
            "1" | "+1" => Ok(Sign::Plus),
            "-1" => Ok(Sign::Minus),
            other => Err(format!("expected +1 or -1, got {other:?}")),
        }
    }
}

/// A real three-vector on or in the Bloch/Poincare ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> BlochVector {
        BlochVector { x, y, z }
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, k: f64) -> BlochVector {
        BlochVector::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

/// One-photon polarization amplitudes: `mu` on the x mode, `nu` on the y mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubit {
    pub mu: Complex64,
    pub nu: Complex64,
}

impl PureQubit {
    pub fn new(mu: Complex64, nu: Complex64) -> PureQubit {
        PureQubit { mu, nu }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.mu.norm_sqr() + self.nu.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOL_VALIDITY
    }

    pub fn ket(&self) -> [Complex64; 2] {
        [self.mu, self.nu]
    }

    /// Density matrix |psi><psi| of the amplitude pair.
    pub fn density(&self) -> QubitOperator {
        QubitOperator::outer(&self.ket())
    }
}

macro_rules! impl_matrix_common {
    ($ty:ident, $n:expr) => {
        impl $ty {
            pub const DIM: usize = $n;

            pub fn zero() -> $ty {
                $ty {
                    e: [[Complex64::ZERO; $n]; $n],
                }
            }

            pub fn identity() -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    m.e[i][i] = Complex64::ONE;
                }
                m
            }

            pub fn from_rows(rows: [[Complex64; $n]; $n]) -> $ty {
                $ty { e: rows }
            }

            pub fn entry(&self, i: usize, j: usize) -> Complex64 {
                self.e[i][j]
            }

            pub fn rows(&self) -> &[[Complex64; $n]; $n] {
                &self.e
            }

            /// Rank-one projector-style outer product |v><v| (no normalization).
            pub fn outer(v: &[Complex64; $n]) -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.e[i][j] = v[i] * v[j].conj();
                    }
                }
                m
            }

            pub fn scale(&self, k: f64) -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.e[i][j] = self.e[i][j] * k;
                    }
                }
                m
            }

            pub fn adjoint(&self) -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.e[i][j] = self.e[j][i].conj();
                    }
                }
                m
            }

            pub fn trace(&self) -> Complex64 {
                let mut t = Complex64::ZERO;
                for i in 0..$n {
                    t += self.e[i][i];
                }
                t
            }

            /// Largest entrywise deviation from A = A^dagger.
            pub fn hermiticity_residual(&self) -> f64 {
                let mut r = 0.0f64;
                for i in 0..$n {
                    for j in 0..$n {
                        r = r.max((self.e[i][j] - self.e[j][i].conj()).norm());
                    }
                }
                r
            }

            pub fn is_hermitian(&self, tol: f64) -> bool {
                self.hermiticity_residual() <= tol
            }

            pub fn max_abs_diff(&self, other: &$ty) -> f64 {
                let mut r = 0.0f64;
                for i in 0..$n {
                    for j in 0..$n {
                        r = r.max((self.e[i][j] - other.e[i][j]).norm());
                    }
                }
                r
            }

            pub fn max_abs(&self) -> f64 {
                self.max_abs_diff(&Self::zero())
            }
        }

        impl Add for $ty {
            type Output = $ty;
            fn add(self, o: $ty) -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.e[i][j] = self.e[i][j] + o.e[i][j];
                    }
                }
                m
            }
        }

        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, o: $ty) -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.e[i][j] = self.e[i][j] - o.e[i][j];
                    }
                }
                m
            }
        }

        impl Mul for $ty {
            type Output = $ty;
            fn mul(self, o: $ty) -> $ty {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        let mut acc = Complex64::ZERO;
                        for k in 0..$n {
                            acc += self.e[i][k] * o.e[k][j];
                        }
                        m.e[i][j] = acc;
                    }
                }
                m
            }
        }

        impl Mul<f64> for $ty {
            type Output = $ty;
            fn mul(self, k: f64) -> $ty {
                self.scale(k)
            }
        }

        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.scale(-1.0)
            }
        }
    };
}

/// A complex 2x2 operator on the polarization qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitOperator {
    e: [[Complex64; 2]; 2],
}

/// A complex 4x4 operator on two polarization qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitOperator {
    e: [[Complex64; 4]; 4],
}

impl_matrix_common!(QubitOperator, 2);
impl_matrix_common!(TwoQubitOperator, 4);

impl QubitOperator {
    pub fn sigma_x() -> QubitOperator {
        QubitOperator::from_rows([
            [Complex64::ZERO, Complex64::ONE],
            [Complex64::ONE, Complex64::ZERO],
        ])
    }

    pub fn sigma_y() -> QubitOperator {
        QubitOperator::from_rows([
            [Complex64::ZERO, Complex64::new(0.0, -1.0)],
            [Complex64::new(0.0, 1.0), Complex64::ZERO],
        ])
    }

    pub fn sigma_z() -> QubitOperator {
        QubitOperator::from_rows([
            [Complex64::ONE, Complex64::ZERO],
            [Complex64::ZERO, -Complex64::ONE],
        ])
    }

    /// Density matrix `(sigma_0 + s.sigma)/2`. Errors when `s` leaves the ball.
    pub fn density_from_bloch(s: BlochVector) -> Result<QubitOperator, QcoreError> {
        let norm = s.norm();
        if norm > 1.0 + TOL_VALIDITY {
            return Err(QcoreError::BlochOutOfBall { norm });
        }
        Ok(op_from_bloch(0.5, s * 0.5))
    }

    /// Same formula without the ball check, for reconstructions that are
    /// allowed to land outside it.
    pub fn density_from_bloch_unchecked(s: BlochVector) -> QubitOperator {
        op_from_bloch(0.5, s * 0.5)
    }

    /// Eigenvalues of the Hermitian part, ascending, in closed form.
    pub fn eigenvalues_hermitian(&self) -> [f64; 2] {
        let h = (*self + self.adjoint()).scale(0.5);
        let c0 = (h.e[0][0] + h.e[1][1]).re * 0.5;
        let v1 = (h.e[0][1] + h.e[1][0]).re * 0.5;
        let v2 = (h.e[1][0] - h.e[0][1]).im * 0.5;
        let v3 = (h.e[0][0] - h.e[1][1]).re * 0.5;
        let r = (v1 * v1 + v2 * v2 + v3 * v3).sqrt();
        [c0 - r, c0 + r]
    }
}

impl TwoQubitOperator {
    /// Eigenvalues of the Hermitian part, ascending (Jacobi sweeps).
    pub fn eigenvalues_hermitian(&self) -> [f64; 4] {
        eig::hermitian_eigenvalues(&self.e)
    }
}

/// Splits a Hermitian operator as `c0*sigma_0 + v.sigma`.
pub fn bloch_decompose(op: &QubitOperator) -> Result<(f64, BlochVector), QcoreError> {
    let residual = op.hermiticity_residual();
    if residual > TOL_VALIDITY {
        return Err(QcoreError::NotHermitian { residual });
    }
    let c0 = (op.e[0][0] + op.e[1][1]).re * 0.5;
    let v = BlochVector::new(
        (op.e[0][1] + op.e[1][0]).re * 0.5,
        (op.e[1][0] - op.e[0][1]).im * 0.5,
        (op.e[0][0] - op.e[1][1]).re * 0.5,
    );
    Ok((c0, v))
}

/// Assembles `c0*sigma_0 + v.sigma`.
pub fn op_from_bloch(c0: f64, v: BlochVector) -> QubitOperator {
    QubitOperator::from_rows([
        [
            Complex64::new(c0 + v.z, 0.0),
            Complex64::new(v.x, -v.y),
        ],
        [
            Complex64::new(v.x, v.y),
            Complex64::new(c0 - v.z, 0.0),
        ],
    ])
}

/// Kronecker product with subsystem A first: entry ((a1 a2),(b1 b2)) =
/// A(a1,b1) * B(a2,b2).
pub fn tensor(a: &QubitOperator, b: &QubitOperator) -> TwoQubitOperator {
    let mut m = TwoQubitOperator::zero();
    for a1 in 0..2 {
        for a2 in 0..2 {
            for b1 in 0..2 {
                for b2 in 0..2 {
                    m.e[2 * a1 + a2][2 * b1 + b2] = a.e[a1][b1] * b.e[a2][b2];
                }
            }
        }
    }
    m
}

/// `Re tr(rho * op)` for a valid density `rho` and Hermitian `op`.
pub fn expectation(rho: &QubitOperator, op: &QubitOperator) -> f64 {
    let mut t = Complex64::ZERO;
    for i in 0..2 {
        for j in 0..2 {
            t += rho.e[i][j] * op.e[j][i];
        }
    }
    t.re
}

/// `Re tr(rho * op)` on the two-qubit space.
pub fn expectation_two(rho: &TwoQubitState, op: &TwoQubitOperator) -> f64 {
    let r = rho.as_operator();
    let mut t = Complex64::ZERO;
    for i in 0..4 {
        for j in 0..4 {
            t += r.e[i][j] * op.e[j][i];
        }
    }
    t.re
}

/// Traces out subsystem A, leaving an operator on B.
pub fn partial_trace_a(m: &TwoQubitOperator) -> QubitOperator {
    let mut out = QubitOperator::zero();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex64::ZERO;
            for a in 0..2 {
                acc += m.e[2 * a + i][2 * a + j];
            }
            out.e[i][j] = acc;
        }
    }
    out
}

/// Traces out subsystem B, leaving an operator on A.
pub fn partial_trace_b(m: &TwoQubitOperator) -> QubitOperator {
    let mut out = QubitOperator::zero();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex64::ZERO;
            for b in 0..2 {
                acc += m.e[2 * i + b][2 * j + b];
            }
            out.e[i][j] = acc;
        }
    }
    out
}

/// Validity report for a candidate density matrix: each failure mode comes
/// with its magnitude so callers can print actionable diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    pub hermiticity_residual: f64,
    pub trace_residual: f64,
    pub min_eigenvalue: f64,
}

impl DensityReport {
    pub fn hermitian(&self) -> bool {
        self.hermiticity_residual <= TOL_VALIDITY
    }

    pub fn unit_trace(&self) -> bool {
        self.trace_residual <= TOL_VALIDITY
    }

    pub fn positive(&self) -> bool {
        self.min_eigenvalue >= -TOL_VALIDITY
    }

    pub fn is_valid(&self) -> bool {
        self.hermitian() && self.unit_trace() && self.positive()
    }
}

impl fmt::Display for DensityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity residual {:.3e}, trace residual {:.3e}, min eigenvalue {:.3e}",
            self.hermiticity_residual, self.trace_residual, self.min_eigenvalue
        )
    }
}

pub fn validate_density(op: &QubitOperator) -> DensityReport {
    let tr = op.trace();
    DensityReport {
        hermiticity_residual: op.hermiticity_residual(),
        trace_residual: ((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt(),
        min_eigenvalue: op.eigenvalues_hermitian()[0],
    }
}

pub fn validate_density_two(op: &TwoQubitOperator) -> DensityReport {
    let tr = op.trace();
    DensityReport {
        hermiticity_residual: op.hermiticity_residual(),
        trace_residual: ((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt(),
        min_eigenvalue: op.eigenvalues_hermitian()[0],
    }
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    op: TwoQubitOperator,
}

impl TwoQubitState {
    /// Wraps an arbitrary matrix, checking Hermiticity, trace and positivity.
    pub fn new(op: TwoQubitOperator) -> Result<TwoQubitState, QcoreError> {
        let report = validate_density_two(&op);
        if !report.is_valid() {
            return Err(QcoreError::InvalidDensity { report });
        }
        Ok(TwoQubitState { op })
    }

    /// Projector onto a pure state given by four amplitudes in `|ab>` order.
    pub fn from_pure(amps: [Complex64; 4]) -> Result<TwoQubitState, QcoreError> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TOL_VALIDITY {
            return Err(QcoreError::NotNormalized { norm });
        }
        Ok(TwoQubitState {
            op: TwoQubitOperator::outer(&amps),
        })
    }

    /// The singlet `(|01> - |10>)/sqrt(2)`.
    pub fn singlet() -> TwoQubitState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState {
            op: TwoQubitOperator::outer(&[
                Complex64::ZERO,
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::ZERO,
            ]),
        }
    }

    pub fn maximally_mixed() -> TwoQubitState {
        TwoQubitState {
            op: TwoQubitOperator::identity().scale(0.25),
        }
    }

    /// Product of two single-qubit densities.
    pub fn product(a: &QubitOperator, b: &QubitOperator) -> Result<TwoQubitState, QcoreError> {
        for side in [a, b] {
            let report = validate_density(side);
            if !report.is_valid() {
                return Err(QcoreError::InvalidDensity { report });
            }
        }
        Ok(TwoQubitState { op: tensor(a, b) })
    }

    pub fn product_bloch(sa: BlochVector, sb: BlochVector) -> Result<TwoQubitState, QcoreError> {
        let a = QubitOperator::density_from_bloch(sa)?;
        let b = QubitOperator::density_from_bloch(sb)?;
        Ok(TwoQubitState { op: tensor(&a, &b) })
    }

    /// Singlet mixed with white noise: `eta * singlet + (1 - eta) * I/4`.
    pub fn werner(eta: f64) -> Result<TwoQubitState, QcoreError> {
        if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
            return Err(QcoreError::InvalidParameter {
                name: "eta",
                value: eta,
                expected: "[0, 1]",
            });
        }
        let op = TwoQubitState::singlet().op.scale(eta)
            + TwoQubitOperator::identity().scale(0.25 * (1.0 - eta));
        Ok(TwoQubitState { op })
    }

    pub fn as_operator(&self) -> &TwoQubitOperator {
        &self.op
    }

    pub fn reduced_a(&self) -> QubitOperator {
        partial_trace_b(&self.op)
    }

    pub fn reduced_b(&self) -> QubitOperator {
        partial_trace_a(&self.op)
    }
}

/// Bloch vector of a qubit density matrix: `rho = (sigma_0 + s.sigma)/2`.
pub fn density_bloch(rho: &QubitOperator) -> Result<BlochVector, QcoreError> {
    let (_, v) = bloch_decompose(rho)?;
    Ok(v * 2.0)
}
