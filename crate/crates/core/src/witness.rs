//! Witness operators assembled from SVM hyperplanes, product-state
//! minimization, calibration, and verification.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{coefficients_of, feature_vector, operator_from_coefficients};
use crate::qcore::{
    hermitian_eigen, is_ppt_all, n_paulis, ComplexMatrix, DensityMatrix, PureState,
    EIGEN_HERMITIAN_TOL,
};
use crate::states::{derive_seed, rng_from_seed, werner, ProductState};
use crate::svm::SvmModel;

/// Validity tolerance on the product-state minimum.
pub const EPS_VALID: f64 = 1e-6;
/// Default number of multi-start restarts.
pub const DEFAULT_RESTARTS: usize = 256;
const SWEEP_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// How the coefficient vector is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    UnitTrace,
    Unnormalized,
}

impl Normalization {
    pub fn tag(self) -> &'static str {
        match self {
            Normalization::UnitTrace => "unit-trace",
            Normalization::Unnormalized => "unnormalized",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "unit-trace" => Some(Normalization::UnitTrace),
            "unnormalized" => Some(Normalization::Unnormalized),
            _ => None,
        }
    }
}

/// W = Σ_t c_t P_t with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessOperator {
    n_qubits: usize,
    coefficients: Vec<f64>,
    matrix: ComplexMatrix,
    normalization: Normalization,
}

impl WitnessOperator {
    pub fn from_coefficients(
        n_qubits: usize,
        coefficients: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParameter("witness needs n >= 1".into()));
        }
        let matrix = operator_from_coefficients(n_qubits, &coefficients)?;
        Ok(Self {
            n_qubits,
            coefficients,
            matrix,
            normalization,
        })
    }

    /// Builds from a Hermitian matrix; the stored matrix is the Pauli re-expansion.
    pub fn from_matrix(matrix: &ComplexMatrix, normalization: Normalization) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if dev > EIGEN_HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let coefficients = coefficients_of(matrix)?;
        let n = matrix.rows().trailing_zeros() as usize;
        Self::from_coefficients(n, coefficients, normalization)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn trace(&self) -> f64 {
        self.coefficients[0] * self.dim() as f64
    }

    /// Tr(Wρ) via the dense matrix.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        crate::qcore::expectation(&self.matrix, rho)
    }

    /// Tr(Wρ) = Σ_t c_t x_t(ρ).
    pub fn expectation_from_features(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                got: features.len(),
            });
        }
        Ok(self
            .coefficients
            .iter()
            .zip(features)
            .map(|(c, x)| c * x)
            .sum())
    }

    /// ⟨ψ|W|ψ⟩
    pub fn pure_value(&self, amplitudes: &[Complex64]) -> f64 {
        self.matrix.quadratic_form(amplitudes).re
    }

    pub fn product_value(&self, state: &ProductState) -> f64 {
        self.pure_value(&state.amplitudes())
    }

    /// Divides by Tr(W) when it is positive.
    pub fn normalized(&self) -> Self {
        let tr = self.trace();
        if tr > 0.0 {
            let coefficients = self.coefficients.iter().map(|c| c / tr).collect();
            Self {
                n_qubits: self.n_qubits,
                coefficients,
                matrix: self.matrix.scale(1.0 / tr),
                normalization: Normalization::UnitTrace,
            }
        } else {
            Self {
                normalization: Normalization::Unnormalized,
                ..self.clone()
            }
        }
    }

    /// Adds `delta` to the identity coefficient.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut coefficients = self.coefficients.clone();
        coefficients[0] += delta;
        let mut matrix = self.matrix.clone();
        for i in 0..self.dim() {
            matrix.add_at(i, i, Complex64::new(delta, 0.0));
        }
        Self {
            n_qubits: self.n_qubits,
            coefficients,
            matrix,
            normalization: Normalization::Unnormalized,
        }
    }

    pub fn min_eigen(&self) -> Result<(f64, Vec<Complex64>)> {
        let eig = hermitian_eigen(&self.matrix)?;
        Ok((eig.values[0], eig.vectors[0].clone()))
    }
}

/// Folds b into the identity coefficient and rescales to unit trace when possible.
/// Returns the witness and the factor s with Tr(Wρ) = s·(w·x + b).
pub fn assemble_witness(model: &SvmModel) -> Result<(WitnessOperator, f64)> {
    let len = model.weights.len();
    let n = (0..=8)
        .find(|&n| n_paulis(n) == len)
        .filter(|&n| n > 0)
        .ok_or(Error::DimensionMismatch {
            expected: n_paulis(2),
            got: len,
        })?;
    let mut coefficients = model.weights.clone();
    coefficients[0] += model.bias;
    let raw = WitnessOperator::from_coefficients(n, coefficients, Normalization::Unnormalized)?;
    let tr = raw.trace();
    let w = raw.normalized();
    let scale = if tr > 0.0 { 1.0 / tr } else { 1.0 };
    Ok((w, scale))
}

/// Best product state found by multi-start coordinate descent.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMinimum {
    pub value: f64,
    pub state: ProductState,
}

/// Smallest eigenpair of a 2x2 Hermitian [[p, q], [q*, r]].
fn min_eig_2x2(p: f64, q: Complex64, r: f64) -> (f64, [Complex64; 2]) {
    let half = 0.5 * (p - r);
    let lam = 0.5 * (p + r) - (half * half + q.norm_sqr()).sqrt();
    let v1 = [q, Complex64::new(lam - p, 0.0)];
    let v2 = [Complex64::new(lam - r, 0.0), q.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    if n == 0.0 {
        return (lam, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    }
    let s = n.sqrt();
    (lam, [v[0] / s, v[1] / s])
}

fn product_amplitudes(qubits: &[[Complex64; 2]]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(1.0, 0.0)];
    for q in qubits {
        v = v.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
    }
    v
}

/// Exact coordinate descent from a starting product state.
pub fn descend_from(w: &WitnessOperator, start: &ProductState) -> ProductMinimum {
    let n = w.n_qubits();
    let mut qubits: Vec<[Complex64; 2]> = start
        .angles()
        .iter()
        .map(|&(t, a)| ProductState::qubit_vector(t, a))
        .collect();
    let mut value = w.pure_value(&product_amplitudes(&qubits));
    for _ in 0..MAX_SWEEPS {
        let before = value;
        for k in 0..n {
            let saved = qubits[k];
            qubits[k] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            let phi0 = product_amplitudes(&qubits);
            qubits[k] = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
            let phi1 = product_amplitudes(&qubits);
            let wphi1 = w.matrix().matvec(&phi1).expect("dimension");
            let wphi0 = w.matrix().matvec(&phi0).expect("dimension");
            let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
                a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
            };
            let p = inner(&phi0, &wphi0).re;
            let r = inner(&phi1, &wphi1).re;
            let q = inner(&phi0, &wphi1);
            let (lam, vec) = min_eig_2x2(p, q, r);
            let current = saved[0].norm_sqr() * p
                + saved[1].norm_sqr() * r
                + 2.0 * (saved[0].conj() * q * saved[1]).re;
            qubits[k] = if lam <= current { vec } else { saved };
            value = lam.min(current);
        }
        if (before - value).abs() < SWEEP_TOL {
            break;
        }
    }
    let angles: Vec<(f64, f64)> = qubits
        .iter()
        .map(|q| ProductState::qubit_angles(q[0], q[1]))
        .collect();
    let state = ProductState::new(angles).expect("angles from qubit_angles are canonical");
    ProductMinimum {
        value: w.product_value(&state),
        state,
    }
}

/// Local minima from `restarts` seeded random starts, in restart order.
pub fn product_local_minima(
    w: &WitnessOperator,
    restarts: usize,
    seed: u64,
) -> Vec<ProductMinimum> {
    (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = ProductState::random(
                w.n_qubits(),
                &mut rng_from_seed(derive_seed(seed, r as u64)),
            );
            descend_from(w, &start)
        })
        .collect()
}

/// Minimum of ⟨ν|W|ν⟩ over product states; ties resolved by restart index.
pub fn min_over_product_states(w: &WitnessOperator, restarts: usize, seed: u64) -> ProductMinimum {
    product_local_minima(w, restarts, seed)
        .into_iter()
        .reduce(|best, m| if m.value < best.value { m } else { best })
        .expect("at least one restart")
}

/// When the identity shift is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Shift only when the product minimum is negative.
    RaiseOnly,
    /// Shift whenever the minimum is nonzero, making W tangent to the separable set.
    Touch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub witness: WitnessOperator,
    /// Product minimum before the shift.
    pub min_before: f64,
    /// Amount subtracted from the identity coefficient before renormalizing.
    pub shift: f64,
}

/// Shifts W by −m·I (m = product minimum) and renormalizes to unit trace.
pub fn calibrate(
    w: &WitnessOperator,
    restarts: usize,
    seed: u64,
    mode: CalibrationMode,
) -> Result<Calibration> {
    let m = min_over_product_states(w, restarts, seed).value;
    let apply = match mode {
        CalibrationMode::RaiseOnly => m < 0.0,
        CalibrationMode::Touch => m != 0.0,
    };
    let witness = if apply {
        w.shifted(-m).normalized()
    } else {
        w.normalized()
    };
    let (min_eig, _) = witness.min_eigen()?;
    if min_eig >= 0.0 {
        return Err(Error::NoWitness(min_eig));
    }
    Ok(Calibration {
        witness,
        min_before: m,
        shift: if apply { m } else { 0.0 },
    })
}

/// Outcome of the two witness conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub min_product_value: f64,
    pub min_product_state: ProductState,
    pub min_eigenvalue: f64,
    /// Eigenvector of the minimum eigenvalue, a detected state when it is negative.
    pub detected_state: PureState,
    pub detected_value: f64,
    pub detected_is_npt: bool,
    pub valid: bool,
}

impl WitnessReport {
    pub fn verdict(&self) -> String {
        if self.valid {
            "valid".into()
        } else if self.min_product_value < -EPS_VALID {
            format!(
                "not a witness: product-state minimum {:.6e}",
                self.min_product_value
            )
        } else {
            format!(
                "not a witness: minimum eigenvalue {:.6e}",
                self.min_eigenvalue
            )
        }
    }
}

pub fn verify_witness(w: &WitnessOperator, restarts: usize, seed: u64) -> Result<WitnessReport> {
    let min = min_over_product_states(w, restarts, seed);
    let (min_eigenvalue, vec) = w.min_eigen()?;
    let detected_state = PureState::normalized(vec)?;
    let rho = detected_state.projector();
    let detected_value = w.expectation(&rho)?;
    let detected_is_npt = !is_ppt_all(&rho)?;
    Ok(WitnessReport {
        valid: min.value >= -EPS_VALID && min_eigenvalue < 0.0,
        min_product_value: min.value,
        min_product_state: min.state,
        min_eigenvalue,
        detected_state,
        detected_value,
        detected_is_npt,
    })
}

/// Affine profile of Tr(Wρ_p) along a Werner family.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub family: String,
    pub slope: f64,
    pub intercept: f64,
    pub p_star: Option<f64>,
    pub residual: f64,
    pub detected: bool,
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: Tr(W rho_p) = {:.6}*p + {:.6}",
            self.family, self.slope, self.intercept
        )?;
        match (self.detected, self.p_star) {
            (true, Some(p)) => write!(f, ", p* = {p:.6}"),
            _ => write!(f, ", family not detected"),
        }
    }
}

const AFFINE_TOL: f64 = 1e-10;

pub fn detection_threshold(
    w: &WitnessOperator,
    base: &PureState,
    family: &str,
) -> Result<ThresholdReport> {
    let at = |p: f64| -> Result<f64> { w.expectation(&werner(base, p)?) };
    let v0 = at(0.0)?;
    let vh = at(0.5)?;
    let v1 = at(1.0)?;
    let slope = v1 - v0;
    let intercept = v0;
    let residual = (vh - (intercept + 0.5 * slope)).abs();
    if residual >= AFFINE_TOL * (1.0 + v0.abs().max(v1.abs())) {
        return Err(Error::NotAffine(residual));
    }
    let p_star = (slope != 0.0).then(|| -intercept / slope);
    let detected = slope < 0.0 && p_star.is_some_and(|p| p < 1.0);
    Ok(ThresholdReport {
        family: family.to_string(),
        slope,
        intercept,
        p_star,
        residual,
        detected,
    })
}

/// Tr(Wρ) for every state, via feature vectors.
pub fn expectations(w: &WitnessOperator, states: &[DensityMatrix]) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|rho| w.expectation_from_features(feature_vector(rho)?.values()))
        .collect()
}
