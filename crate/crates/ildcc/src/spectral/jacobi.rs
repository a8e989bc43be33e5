//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Eigenvalues only; rotation vectors are not accumulated. Row-major flat
//! storage. Deterministic: identical input bits give identical output bits.

use crate::error::{Error, Result};
use crate::Real;

/// Sweep cap. Jacobi converges quadratically; well-conditioned symmetric
/// matrices of the sizes used here settle in well under 20 sweeps.
pub const MAX_SWEEPS: usize = 50;

/// Eigenvalues of the symmetric matrix `a` (row-major, `n` x `n`),
/// ascending. Converged when the off-diagonal magnitude sum drops to
/// `tol` or below.
pub fn symmetric_eigenvalues<F: Real>(a: &[F], n: usize, tol: F) -> Result<Vec<F>> {
    if a.len() != n * n {
        return Err(Error::Domain(format!(
            "matrix buffer holds {} entries, expected {}",
            a.len(),
            n * n
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if a[i * n + j] != a[j * n + i] {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut m = a.to_vec();
    let mut d: Vec<F> = (0..n).map(|i| m[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![F::zero(); n];

    let half = F::from_f64(0.5).unwrap();
    let hundred = F::from_f64(100.0).unwrap();
    let fifth = F::from_f64(0.2).unwrap();

    for sweep in 1..=MAX_SWEEPS {
        let mut off = F::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].abs();
            }
        }
        if off <= tol {
            d.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(d);
        }

        // First sweeps rotate only the dominant entries.
        let thresh = if sweep < 4 {
            fifth * off / F::from_usize(n * n).unwrap()
        } else {
            F::zero()
        };

        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let g = hundred * apq.abs();
                // Entries negligible against both diagonals are zeroed.
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    m[p * n + q] = F::zero();
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }

                let mut h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = half * h / apq;
                    let mut t = F::one() / (theta.abs() + (F::one() + theta * theta).sqrt());
                    if theta < F::zero() {
                        t = -t;
                    }
                    t
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                let tau = s / (F::one() + c);
                h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                m[p * n + q] = F::zero();

                let rotate = |m: &mut Vec<F>, i: usize, j: usize, k: usize, l: usize| {
                    let g = m[i * n + j];
                    let h = m[k * n + l];
                    m[i * n + j] = g - s * (h + g * tau);
                    m[k * n + l] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rotate(&mut m, j, p, j, q);
                }
                for j in (p + 1)..q {
                    rotate(&mut m, p, j, j, q);
                }
                for j in (q + 1)..n {
                    rotate(&mut m, p, j, q, j);
                }
            }
        }

        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = F::zero();
        }
    }

    Err(Error::NoConvergence(MAX_SWEEPS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_non_symmetric() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        match symmetric_eigenvalues(&a, 2, 1e-12) {
            Err(Error::NotSymmetric(0, 1)) => {}
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_buffer() {
        let a = vec![1.0; 3];
        assert!(symmetric_eigenvalues(&a, 2, 1e-12).is_err());
    }

    #[test]
    fn diagonal_matrix_is_sorted_as_is() {
        let a = vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let ev = symmetric_eigenvalues(&a, 3, 1e-12).unwrap();
        assert_eq!(ev, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_known_eigenvalues() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let ev = symmetric_eigenvalues(&a, 2, 1e-12).unwrap();
        assert_relative_eq!(ev[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(ev[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn matches_characteristic_roots_of_random_symmetric_3x3() {
        // det(A - x I) expanded by hand for a fixed matrix; roots located
        // by bisection as an independent oracle.
        let a = vec![4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 5.0];
        let ev = symmetric_eigenvalues(&a, 3, 1e-12).unwrap();
        let poly = |x: f64| {
            (4.0 - x) * ((3.0 - x) * (5.0 - x) - 0.25) - 1.0 * (1.0 * (5.0 - x) - 1.0)
                + 2.0 * (0.5 - (3.0 - x) * 2.0)
        };
        for &lambda in &ev {
            assert!(poly(lambda).abs() < 1e-8, "not a root: {lambda}");
        }
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn works_in_f32() {
        let a: Vec<f32> = vec![2.0, 1.0, 1.0, 2.0];
        let ev = symmetric_eigenvalues(&a, 2, 1e-5f32).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-4);
        assert!((ev[1] - 3.0).abs() < 1e-4);
    }
}
