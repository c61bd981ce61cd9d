//! Cyclic Jacobi eigensolver for real symmetric matrices, and a Hermitian
//! solver built on the real symmetric embedding [[A, -B], [B, A]] of A + iB.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::EIGEN_HERMITIAN_TOL;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric `n x n` row-major matrix.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m = a.to_vec();
    // v holds eigenvectors as columns
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q] * m[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
        .collect();
    (values, vectors)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let dev = m.hermitian_deviation();
    if dev > EIGEN_HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows();
    let n2 = 2 * n;
    let mut e = vec![0.0; n2 * n2];
    for r in 0..n {
        for c in 0..n {
            // symmetrize so tiny input asymmetries do not leak into the solver
            let z = (m.get(r, c) + m.get(c, r).conj()) * 0.5;
            e[r * n2 + c] = z.re;
            e[(r + n) * n2 + c + n] = z.re;
            e[r * n2 + c + n] = -z.im;
            e[(r + n) * n2 + c] = z.im;
        }
    }
    let (vals, vecs) = symmetric_eigen(&e, n2);

    let values: Vec<f64> = (0..n)
        .map(|i| 0.5 * (vals[2 * i] + vals[2 * i + 1]))
        .collect();
    let scale = vals.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let gap_tol = 1e-8 * scale;

    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n2 {
        let mut end = start + 1;
        while end < n2 && vals[end] - vals[end - 1] <= gap_tol {
            end += 1;
        }
        let want = (end - start).div_ceil(2);
        let mut candidates: Vec<Vec<Complex64>> = vecs[start..end]
            .iter()
            .map(|rv| (0..n).map(|k| Complex64::new(rv[k], rv[k + n])).collect())
            .collect();
        for _ in 0..want {
            if vectors.len() == n {
                break;
            }
            // pivot on the candidate with the largest component outside the accepted span
            for cand in candidates.iter_mut() {
                for acc in &vectors {
                    let proj: Complex64 =
                        acc.iter().zip(cand.iter()).map(|(a, b)| a.conj() * b).sum();
                    for (x, a) in cand.iter_mut().zip(acc) {
                        *x -= proj * a;
                    }
                }
            }
            let (best, norm) = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty cluster");
            let chosen: Vec<Complex64> = candidates
                .swap_remove(best)
                .iter()
                .map(|z| z / norm)
                .collect();
            vectors.push(chosen);
        }
        start = end;
    }
    Ok(HermitianEigen { values, vectors })
}

/// Ascending real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(
            hermitian_eigenvalues(&ComplexMatrix::identity(4)).unwrap(),
            vec![1.0; 4]
        );
        let zz = ComplexMatrix::diagonal(&[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(
            hermitian_eigenvalues(&zz).unwrap(),
            vec![-1.0, -1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_vec(
            2,
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            hermitian_eigenvalues(&m),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn pauli_y_eigenvectors() {
        let y = ComplexMatrix::from_vec(
            2,
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        let eig = hermitian_eigen(&y).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            let yv = y.matvec(v).unwrap();
            for (a, b) in yv.iter().zip(v) {
                assert!((a - b * lam).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_complex_eigenspace() {
        // projector onto a complex 2-dim subspace of C^4, eigenvalues {0,0,1,1}
        let u = [c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(0.0, -0.5)];
        let w = [c(0.0, 0.5), c(0.5, 0.0), c(0.0, -0.5), c(0.5, 0.0)];
        let p = &ComplexMatrix::outer(&u, &u) + &ComplexMatrix::outer(&w, &w);
        let eig = hermitian_eigen(&p).unwrap();
        for (x, y) in eig.values.iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        for i in 0..4 {
            for j in 0..4 {
                let ip: Complex64 = eig.vectors[i]
                    .iter()
                    .zip(&eig.vectors[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(expect, 0.0)).norm() < 1e-12, "({i},{j}) {ip}");
            }
        }
    }
}
