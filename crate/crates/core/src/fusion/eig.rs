//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Sweeps stop once the off-diagonal Frobenius norm falls below this
/// fraction of the matrix norm.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub(crate) fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Relative distance of `m` from its conjugate transpose.
pub fn hermitian_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let norm = frobenius(m);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.adjoint())) / norm
}

/// `(m + m^H) / 2`.
pub fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).unscale(2.0)
}

pub fn hermitian_eig(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let n = m.nrows();
    let mut a = hermitize(m);
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let norm = frobenius(&a);
    let target = OFF_DIAGONAL_TOL * norm;
    // Elements this small cannot move the off-diagonal norm above `target`.
    let negligible = 1e-3 * target / n.max(1) as f64;

    let mut converged = norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged || off_diagonal(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[(p, q)];
                let magnitude = g.norm();
                if magnitude <= negligible {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, g / magnitude, magnitude);
            }
        }
    }
    if !converged && off_diagonal(&a) > target {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p, q]` with the unitary `G = diag(1, conj(u)) R(theta)`,
/// where `u` is the phase of `a[p, q]` and `R` the real Jacobi rotation of
/// the resulting real symmetric 2x2 block.
fn rotate(
    a: &mut DMatrix<Complex64>,
    v: &mut DMatrix<Complex64>,
    p: usize,
    q: usize,
    u: Complex64,
    magnitude: f64,
) {
    let n = a.nrows();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * magnitude);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let uc = u.conj();

    // A <- A G
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * uc * s;
        a[(k, q)] = akp * s + akq * uc * c;
    }
    // A <- G^H A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * u * s;
        a[(q, k)] = apk * s + aqk * u * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * uc * s;
        v[(k, q)] = vkp * s + vkq * uc * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        hermitize(&g)
    }

    #[test]
    fn diagonal_input() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)].norm(), 1.0);
        assert_eq!(e.vectors[(0, 1)].norm(), 1.0);
    }

    #[test]
    fn pauli_y() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let e = hermitian_eig(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let residual = &m * e.vectors.column(0) - e.vectors.column(0) * c(e.values[0], 0.0);
        assert!(residual.norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(hermitian_eig(&rect), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_and_empty_matrices() {
        let e = hermitian_eig(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        let e = hermitian_eig(&DMatrix::zeros(0, 0)).unwrap();
        assert!(e.values.is_empty());
    }

    #[test]
    fn reconstructs_random_matrices() {
        for seed in 0..20 {
            let m = random_hermitian(8, seed);
            let e = hermitian_eig(&m).unwrap();
            let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                8,
                e.values.iter().map(|&x| c(x, 0.0)),
            ));
            let rebuilt = &e.vectors * lambda * e.vectors.adjoint();
            assert!(frobenius(&(rebuilt - &m)) <= 1e-9 * frobenius(&m));
            let gram = e.vectors.adjoint() * &e.vectors;
            assert!(frobenius(&(gram - DMatrix::identity(8, 8))) < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn agrees_with_nalgebra_eigenvalues() {
        let m = random_hermitian(12, 77);
        let ours = hermitian_eig(&m).unwrap().values;
        let mut theirs: Vec<f64> = m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10 * frobenius(&m), "{a} vs {b}");
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        // Unitary similarity of diag(3, 3, -1, -1).
        let q = hermitian_eig(&random_hermitian(4, 5)).unwrap().vectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3.0, 0.0),
            c(3.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        let m = hermitize(&(&q * d * q.adjoint()));
        let e = hermitian_eig(&m).unwrap();
        for (got, want) in e.values.iter().zip([3.0, 3.0, -1.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
