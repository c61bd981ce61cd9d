use num_complex::Complex64;

use super::eigen::hermitian_eigenvalues;
use super::matrix::ComplexMatrix;
use super::{EXPECTATION_IMAG_TOL, HERMITIAN_TOL, NORM_TOL, PSD_TOL, TRACE_TOL};
use crate::error::{Error, Result};

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "dimension {dim} is not 2^N with N >= 1"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Normalized state vector of an N-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm_sqr} != 1")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        PureState {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes,
        }
    }

    pub fn projector(&self) -> DensityMatrix {
        let m = ComplexMatrix::outer(&self.amplitudes, &self.amplitudes);
        DensityMatrix::new(m).expect("projector of a unit vector is a state")
    }
}

/// Validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let n_qubits = qubits_for_dim(matrix.rows())?;
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)?[0];
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// I / 2^n
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
        }
    }

    /// Σ w_i ρ_i for nonnegative weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let d = first.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative mixture weight {w}"
                )));
            }
            if rho.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: rho.dim(),
                });
            }
            acc = &acc + &rho.matrix.scale(*w);
        }
        Self::new(acc)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).expect("square").re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix).expect("validated Hermitian")[0]
    }
}

/// Tr(op·ρ); the imaginary part must vanish.
pub fn expectation(op: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    if op.rows() != rho.dim() || op.cols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: op.rows(),
        });
    }
    let tr = op.trace_product(rho.matrix())?;
    if tr.im.abs() >= EXPECTATION_IMAG_TOL {
        return Err(Error::NonHermitianExpectation(tr.im));
    }
    Ok(tr.re)
}

fn subsystem_mask(n_qubits: usize, subsystems: &[usize]) -> Result<usize> {
    let mut mask = 0usize;
    for &q in subsystems {
        if q == 0 || q > n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        mask |= 1 << (n_qubits - q);
    }
    Ok(mask)
}

/// Transposes the tensor indices of the listed qubits (1-based).
pub fn partial_transpose(rho: &DensityMatrix, subsystems: &[usize]) -> Result<ComplexMatrix> {
    partial_transpose_matrix(rho.matrix(), subsystems)
}

/// Partial transpose of any 2^n × 2^n matrix. Applying it twice is the identity.
pub fn partial_transpose_matrix(m: &ComplexMatrix, subsystems: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let d = m.rows();
    let mask = subsystem_mask(qubits_for_dim(d)?, subsystems)?;
    Ok(ComplexMatrix::from_fn(d, d, |r, c| {
        let r0 = (r & !mask) | (c & mask);
        let c0 = (c & !mask) | (r & mask);
        m.get(r0, c0)
    }))
}

/// Peres test: partial transpose has no eigenvalue below −PSD_TOL.
pub fn is_ppt(rho: &DensityMatrix, subsystems: &[usize]) -> Result<bool> {
    Ok(min_partial_transpose_eigenvalue(rho, subsystems)? >= -PSD_TOL)
}

pub fn min_partial_transpose_eigenvalue(rho: &DensityMatrix, subsystems: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, subsystems)?;
    Ok(hermitian_eigenvalues(&pt)?[0])
}

/// One representative subsystem set per bipartition: the side not holding qubit N.
pub fn bipartitions(n_qubits: usize) -> Vec<Vec<usize>> {
    let full = (1usize << n_qubits) - 1;
    (1..full)
        .filter(|m| m & 1 == 0)
        .map(|m| {
            (1..=n_qubits)
                .filter(|&q| m & (1 << (n_qubits - q)) != 0)
                .collect()
        })
        .collect()
}

/// True when the state is PPT across every bipartition.
pub fn is_ppt_all(rho: &DensityMatrix) -> Result<bool> {
    for s in bipartitions(rho.n_qubits()) {
        if !is_ppt(rho, &s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_phi00() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_bad_states() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(4)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diagonal(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale(1.0 / 3.0)).is_err());
        assert!(PureState::new(vec![Complex64::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn expectation_identity_is_one() {
        let rho = bell_phi00().projector();
        assert!((expectation(&ComplexMatrix::identity(4), &rho).unwrap() - 1.0).abs() < 1e-15);
        assert!(expectation(&ComplexMatrix::identity(2), &rho).is_err());
    }

    #[test]
    fn expectation_rejects_complex_trace() {
        let rho = DensityMatrix::maximally_mixed(1);
        let op = ComplexMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            expectation(&op, &rho),
            Err(Error::NonHermitianExpectation(_))
        ));
    }

    #[test]
    fn partial_transpose_edge_cases() {
        let rho = bell_phi00().projector();
        assert_eq!(partial_transpose(&rho, &[]).unwrap(), *rho.matrix());
        assert_eq!(
            partial_transpose(&rho, &[1, 2]).unwrap(),
            rho.matrix().transpose()
        );
        assert!(matches!(
            partial_transpose(&rho, &[3]),
            Err(Error::QubitOutOfRange {
                index: 3,
                n_qubits: 2
            })
        ));
        assert!(partial_transpose(&rho, &[0]).is_err());
        let min = min_partial_transpose_eigenvalue(&rho, &[2]).unwrap();
        assert!((min + 0.5).abs() < 1e-10);
    }

    #[test]
    fn maximally_mixed_is_ppt() {
        for n in 1..=3 {
            let rho = DensityMatrix::maximally_mixed(n);
            for s in bipartitions(n) {
                assert!(is_ppt(&rho, &s).unwrap());
            }
        }
    }

    #[test]
    fn bipartition_enumeration() {
        assert_eq!(bipartitions(2), vec![vec![1]]);
        assert_eq!(bipartitions(3).len(), 3);
        assert_eq!(bipartitions(4).len(), 7);
        assert!(bipartitions(3).iter().all(|s| !s.contains(&3)));
    }
}
