use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianSpectrum {
    /// Smallest eigenvalue of `(m + m†)/2`.
    pub min_eigenvalue: f64,
    /// Largest eigenvalue of `(m + m†)/2`.
    pub max_eigenvalue: f64,
    /// Frobenius norm of `m − m†`.
    pub anti_hermitian_norm: f64,
}

pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Extreme eigenvalues of the Hermitian part of `m`, plus the Frobenius norm
/// of its anti-Hermitian defect.
pub fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> Result<HermitianSpectrum> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    let anti_hermitian_norm = (m - m.adjoint()).norm();
    if n == 0 {
        return Ok(HermitianSpectrum { min_eigenvalue: 0.0, max_eigenvalue: 0.0, anti_hermitian_norm });
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * n.max(10)).ok_or(Error::EigenNonConvergence(n))?;
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(HermitianSpectrum { min_eigenvalue, max_eigenvalue, anti_hermitian_norm })
}

/// Largest singular value of `m` (Euclidean norm) by power iteration on
/// `m†m` from a seeded random start vector.
pub fn operator_norm_estimate(m: &DMatrix<Complex64>, iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.ncols();
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let start = v.norm();
    if start == 0.0 {
        return 0.0;
    }
    v /= Complex64::new(start, 0.0);
    let adj = m.adjoint();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = m * &v;
        let u = &adj * w;
        lambda = u.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = u / Complex64::new(lambda, 0.0);
    }
    lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
        });
        hermitian_part(&a)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn det(mut a: DMatrix<Complex64>) -> Complex64 {
        let n = a.nrows();
        let mut d = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm())).unwrap();
            if a[(piv, col)].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if piv != col {
                a.swap_rows(piv, col);
                d = -d;
            }
            d *= a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / a[(col, col)];
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        d
    }

    /// Smallest root of the characteristic polynomial by scanning `det(H − λ)`
    /// for sign changes and bisecting.
    fn min_root_by_charpoly(h: &DMatrix<Complex64>) -> f64 {
        let n = h.nrows();
        let bound = h.norm() + 1.0;
        let p = |lambda: f64| {
            let shifted = h - DMatrix::<Complex64>::identity(n, n) * Complex64::new(lambda, 0.0);
            det(shifted).re
        };
        let steps = 20_000;
        let mut lo = -bound;
        let mut plo = p(lo);
        for i in 1..=steps {
            let x = -bound + 2.0 * bound * i as f64 / steps as f64;
            let px = p(x);
            if px.signum() != plo.signum() {
                let (mut a, mut b, mut pa) = (lo, x, plo);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let pm = p(mid);
                    if pm.signum() == pa.signum() {
                        a = mid;
                        pa = pm;
                    } else {
                        b = mid;
                    }
                }
                return 0.5 * (a + b);
            }
            lo = x;
            plo = px;
        }
        panic!("no root found");
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let m = DMatrix::<Complex64>::identity(4, 4);
        let s = min_hermitian_eigenvalue(&m).unwrap();
        assert!((s.min_eigenvalue - 1.0).abs() < 1e-15);
        assert_eq!(s.anti_hermitian_norm, 0.0);
    }

    #[test]
    fn diagonal_minimum() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0)]));
        assert!((min_hermitian_eigenvalue(&m).unwrap().min_eigenvalue + 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_matches_characteristic_polynomial() {
        for seed in 0..4 {
            let h = random_hermitian(8, seed);
            let solver = min_hermitian_eigenvalue(&h).unwrap().min_eigenvalue;
            let oracle = min_root_by_charpoly(&h);
            assert!((solver - oracle).abs() < 1e-10, "seed {seed}: {solver} vs {oracle}");
        }
    }

    #[test]
    fn anti_hermitian_defect_is_reported() {
        let mut m = random_hermitian(5, 9);
        m[(0, 1)] += Complex64::new(0.5, 0.0);
        let s = min_hermitian_eigenvalue(&m).unwrap();
        assert!((s.anti_hermitian_norm - 0.5 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_square_is_rejected() {
        let m = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(min_hermitian_eigenvalue(&m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn unitary_conjugation_invariance() {
        let h = random_hermitian(6, 3);
        // Unitary from the eigenvectors of another Hermitian matrix.
        let u = SymmetricEigen::new(random_hermitian(6, 4)).eigenvectors;
        let conj = &u * &h * u.adjoint();
        let a = min_hermitian_eigenvalue(&h).unwrap().min_eigenvalue;
        let b = min_hermitian_eigenvalue(&conj).unwrap().min_eigenvalue;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_finds_spectral_norm() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(
            [3.0, -5.0, 1.0, 0.5].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        ));
        assert!((operator_norm_estimate(&m, 64, 1) - 5.0).abs() < 1e-10);
        assert_eq!(operator_norm_estimate(&DMatrix::zeros(3, 3), 64, 1), 0.0);
    }
}
