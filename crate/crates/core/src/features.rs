//! Pauli-basis feature vectors and principal component analysis.

use crate::error::{Error, Result};
use crate::qcore::{
    n_paulis, symmetric_eigen, ComplexMatrix, DensityMatrix, PauliMask, PauliString,
    EXPECTATION_IMAG_TOL,
};

/// Monomial masks for all 4^n Pauli strings in canonical order.
pub fn pauli_masks(n_qubits: usize) -> Vec<PauliMask> {
    PauliString::all(n_qubits)
        .iter()
        .map(PauliString::mask)
        .collect()
}

/// x_t = Tr(P_t ρ) for t = 0..4^N.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    n_qubits: usize,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(n_qubits: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_paulis(n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: n_paulis(n_qubits),
                got: values.len(),
            });
        }
        Ok(Self { n_qubits, values })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Feature vector using precomputed masks.
pub fn feature_vector_with(masks: &[PauliMask], rho: &DensityMatrix) -> Result<FeatureVector> {
    let n = rho.n_qubits();
    if masks.len() != n_paulis(n) {
        return Err(Error::DimensionMismatch {
            expected: n_paulis(n),
            got: masks.len(),
        });
    }
    let values = masks
        .iter()
        .map(|m| {
            let z = m.trace_with(rho.matrix());
            if z.im.abs() >= EXPECTATION_IMAG_TOL {
                Err(Error::NonHermitianExpectation(z.im))
            } else {
                Ok(z.re)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(n, values)
}

pub fn feature_vector(rho: &DensityMatrix) -> Result<FeatureVector> {
    feature_vector_with(&pauli_masks(rho.n_qubits()), rho)
}

/// Σ_t c_t P_t as a dense matrix.
pub fn operator_from_coefficients(n_qubits: usize, coeffs: &[f64]) -> Result<ComplexMatrix> {
    if coeffs.len() != n_paulis(n_qubits) {
        return Err(Error::DimensionMismatch {
            expected: n_paulis(n_qubits),
            got: coeffs.len(),
        });
    }
    let d = 1usize << n_qubits;
    let mut m = ComplexMatrix::zeros(d, d);
    for (mask, &c) in pauli_masks(n_qubits).iter().zip(coeffs) {
        if c != 0.0 {
            mask.accumulate(&mut m, c);
        }
    }
    Ok(m)
}

/// Pauli coefficients Tr(P_t M) / 2^N of a Hermitian operator.
pub fn coefficients_of(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let d = m.rows();
    if !m.is_square() || d < 2 || !d.is_power_of_two() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = d.trailing_zeros() as usize;
    Ok(pauli_masks(n)
        .iter()
        .map(|mask| mask.trace_with(m).re / d as f64)
        .collect())
}

/// ρ = 2^{−N} Σ_t x_t P_t, validated as a state.
pub fn reconstruct_state(features: &FeatureVector) -> Result<DensityMatrix> {
    let d = (1usize << features.n_qubits) as f64;
    let scaled: Vec<f64> = features.values.iter().map(|x| x / d).collect();
    let m = operator_from_coefficients(features.n_qubits, &scaled)?;
    DensityMatrix::new(m).map_err(|e| Error::NotAState(e.to_string()))
}

/// Principal component analysis on row samples.
#[derive(Debug, Clone)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// Unit principal axes, largest variance first.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaProjection {
    /// Covariance uses the 1/(m−1) normalization.
    pub fn fit(samples: &[Vec<f64>], k: usize) -> Result<Self> {
        let m = samples.len();
        if m < k + 1 || m < 2 {
            return Err(Error::DegenerateDataset(format!(
                "PCA with k = {k} needs at least {} samples, got {m}",
                k + 1
            )));
        }
        let dim = samples[0].len();
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        if k == 0 || k > dim {
            return Err(Error::InvalidParameter(format!(
                "k = {k} outside 1..={dim}"
            )));
        }
        let mut mean = vec![0.0; dim];
        for s in samples {
            for (acc, x) in mean.iter_mut().zip(s) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|x| *x /= m as f64);
        let mut cov = vec![0.0; dim * dim];
        for s in samples {
            let centered: Vec<f64> = s.iter().zip(&mean).map(|(x, mu)| x - mu).collect();
            for i in 0..dim {
                if centered[i] == 0.0 {
                    continue;
                }
                for j in i..dim {
                    cov[i * dim + j] += centered[i] * centered[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let v = cov[i * dim + j] / (m - 1) as f64;
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, dim);
        let mut components = Vec::with_capacity(k);
        let mut explained_variance = Vec::with_capacity(k);
        for idx in (0..dim).rev().take(k) {
            let mut v = vectors[idx].clone();
            // sign convention: largest-magnitude entry positive
            let pivot = v
                .iter()
                .cloned()
                .fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
            explained_variance.push(values[idx].max(0.0));
        }
        Ok(Self {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn transform(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: sample.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(sample)
                    .zip(&self.mean)
                    .map(|((a, x), mu)| a * (x - mu))
                    .sum()
            })
            .collect())
    }
}

pub fn pca_fit(samples: &[Vec<f64>], k: usize) -> Result<PcaProjection> {
    PcaProjection::fit(samples, k)
}

pub fn pca_transform(proj: &PcaProjection, sample: &[f64]) -> Result<Vec<f64>> {
    proj.transform(sample)
}
