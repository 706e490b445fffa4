//! Eigenvalues of tiny Hermitian matrices via cyclic Jacobi rotations.
//!
//! Dimensions here are 2 or 4, so a dependency-free iterative sweep is both
//! simpler and faster than a general eigensolver.

use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized
/// first, so residuals below the validity tolerance do not disturb the result.
pub fn hermitian_eigenvalues<const N: usize>(m: &[[Complex64; N]; N]) -> [f64; N] {
    let mut a = [[Complex64::ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            a[i][j] = 0.5 * (m[i][j] + m[j][i].conj());
        }
    }

    let mut scale = 0.0f64;
    for row in &a {
        for e in row {
            scale += e.norm_sqr();
        }
    }
    let threshold = 1e-30 * (1.0 + scale);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[p][q].norm_sqr();
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut ev = [0.0f64; N];
    for i in 0..N {
        ev[i] = a[i][i].re;
    }
    ev.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    ev
}

/// One Jacobi rotation zeroing the (p, q) entry. The complex phase of the
/// pivot is absorbed into the rotation so the 2x2 subproblem is real.
fn rotate<const N: usize>(a: &mut [[Complex64; N]; N], p: usize, q: usize) {
    let apq = a[p][q];
    let abs = apq.norm();
    if abs < 1e-300 {
        return;
    }
    let phase = apq / abs;
    let app = a[p][p].re;
    let aqq = a[q][q].re;
    let theta = 0.5 * (2.0 * abs).atan2(app - aqq);
    let (s, c) = theta.sin_cos();
    let col_pq = s * phase.conj();
    let col_qq = c * phase.conj();

    for k in 0..N {
        let akp = a[k][p];
        let akq = a[k][q];
        a[k][p] = c * akp + col_pq * akq;
        a[k][q] = -s * akp + col_qq * akq;
    }
    for k in 0..N {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = c * apk + s * phase * aqk;
        a[q][k] = -s * apk + c * phase * aqk;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let m = [
            [c(3.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 0.0)],
        ];
        let ev = hermitian_eigenvalues(&m);
        assert_eq!(ev, [-1.0, 3.0]);
    }

    #[test]
    fn pauli_x_has_unit_eigenvalues() {
        let m = [
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 0.0)],
        ];
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] + 1.0).abs() < 1e-14);
        assert!((ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_offdiagonal_block() {
        // [[1, i],[-i, 1]] has eigenvalues {0, 2}
        let m = [
            [c(1.0, 0.0), c(0.0, 1.0)],
            [c(0.0, -1.0), c(1.0, 0.0)],
        ];
        let ev = hermitian_eigenvalues(&m);
        assert!(ev[0].abs() < 1e-14);
        assert!((ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn four_by_four_moments_match_traces() {
        // deterministic pseudo-random Hermitian matrix
        let mut vals = [0.0f64; 32];
        let mut x = 0.5f64;
        for v in vals.iter_mut() {
            x = (x * 997.0 + 0.123).fract();
            *v = 2.0 * x - 1.0;
        }
        let mut m = [[Complex64::ZERO; 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                if i == j {
                    m[i][j] = c(vals[k], 0.0);
                    k += 1;
                } else {
                    m[i][j] = c(vals[k], vals[k + 1]);
                    m[j][i] = m[i][j].conj();
                    k += 2;
                }
            }
        }
        let ev = hermitian_eigenvalues(&m);

        let mut tr1 = Complex64::ZERO;
        let mut tr2 = Complex64::ZERO;
        let mut tr3 = Complex64::ZERO;
        for i in 0..4 {
            tr1 += m[i][i];
            for j in 0..4 {
                tr2 += m[i][j] * m[j][i];
                for l in 0..4 {
                    tr3 += m[i][j] * m[j][l] * m[l][i];
                }
            }
        }
        let s1: f64 = ev.iter().sum();
        let s2: f64 = ev.iter().map(|e| e * e).sum();
        let s3: f64 = ev.iter().map(|e| e * e * e).sum();
        assert!((s1 - tr1.re).abs() < 1e-12);
        assert!((s2 - tr2.re).abs() < 1e-12);
        assert!((s3 - tr3.re).abs() < 1e-12);
    }
}
