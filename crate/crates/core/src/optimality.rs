//! Optimality certificates from tangent product states, and
//! non-decomposability certificates from detected PPT entangled edge states.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::feature_vector;
use crate::qcore::min_partial_transpose_eigenvalue;
use crate::qcore::PSD_TOL;
use crate::states::{edge_ppt_state, EdgeStateParams, ProductState};
use crate::witness::{product_local_minima, WitnessOperator};

/// Tangency tolerance |⟨ν|W|ν⟩| < EPS_TANGENT.
pub const EPS_TANGENT: f64 = 1e-6;
/// Two tangent states are distinct when their fidelity is below 1 − DISTINCT_TOL.
pub const DISTINCT_TOL: f64 = 1e-6;
/// Singular values above this count toward the span rank.
pub const RANK_TOL: f64 = 1e-8;
/// Trace below which a grid point counts as detected.
pub const HIT_TOL: f64 = 1e-8;
/// Edge-state parameters at which the ew22 reference is negative.
pub const NAMED_EDGE_POINT: (f64, f64, f64) = (0.3525, 0.3196, 0.81642);

#[derive(Debug, Clone, PartialEq)]
pub struct TangentState {
    pub state: ProductState,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentSet {
    pub states: Vec<TangentState>,
    pub span_rank: usize,
    /// False when fewer than the requested number of states were found.
    pub reached_target: bool,
}

fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

/// Numerical rank of the matrix whose columns are the given vectors.
pub fn span_rank(vectors: &[Vec<Complex64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let d = vectors[0].len();
    let a = DMatrix::from_fn(d, vectors.len(), |r, c| vectors[c][r]);
    match a.clone().try_svd(false, false, f64::EPSILON, 10_000) {
        Some(svd) => svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL)
            .count(),
        // σ² are the eigenvalues of A A†
        None => {
            let gram = &a * a.adjoint();
            gram.symmetric_eigenvalues()
                .iter()
                .filter(|&&l| l > RANK_TOL * RANK_TOL)
                .count()
        }
    }
}

/// Distinct product minima within EPS_TANGENT of zero, in restart order.
pub fn tangent_states(
    w: &WitnessOperator,
    target_count: usize,
    restarts: usize,
    seed: u64,
) -> TangentSet {
    tangent_states_within(w, target_count, restarts, seed, EPS_TANGENT)
}

/// As [`tangent_states`] with tangency tolerance `eps`.
pub fn tangent_states_within(
    w: &WitnessOperator,
    target_count: usize,
    restarts: usize,
    seed: u64,
    eps: f64,
) -> TangentSet {
    let mut states: Vec<TangentState> = Vec::new();
    let mut amps: Vec<Vec<Complex64>> = Vec::new();
    for m in product_local_minima(w, restarts, seed) {
        if m.value.abs() >= eps {
            continue;
        }
        let v = m.state.amplitudes();
        if amps.iter().all(|u| fidelity(u, &v) < 1.0 - DISTINCT_TOL) {
            amps.push(v);
            states.push(TangentState {
                state: m.state,
                value: m.value,
            });
        }
    }
    TangentSet {
        span_rank: span_rank(&amps),
        reached_target: states.len() >= target_count,
        states,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalityVerdict {
    Optimal { rank: usize },
    Inconclusive { rank: usize },
}

impl fmt::Display for OptimalityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimalityVerdict::Optimal { rank } => write!(f, "OPTIMAL (rank {rank})"),
            OptimalityVerdict::Inconclusive { rank } => write!(f, "INCONCLUSIVE (rank {rank})"),
        }
    }
}

/// OPTIMAL iff the tangent states span the full 2^N-dimensional space.
pub fn optimality_verdict(ts: &TangentSet, n_qubits: usize) -> OptimalityVerdict {
    if ts.span_rank == 1 << n_qubits {
        OptimalityVerdict::Optimal { rank: ts.span_rank }
    } else {
        OptimalityVerdict::Inconclusive { rank: ts.span_rank }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptesHit {
    pub params: EdgeStateParams,
    pub trace_value: f64,
}

/// Uniform grid over [lo, hi]³ plus optional extra points.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    pub points_per_axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub extra: Vec<(f64, f64, f64)>,
}

impl Default for EdgeGrid {
    fn default() -> Self {
        Self {
            points_per_axis: 20,
            lo: 0.05,
            hi: 0.95,
            extra: vec![NAMED_EDGE_POINT],
        }
    }
}

impl EdgeGrid {
    pub fn with_points(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            ..Self::default()
        }
    }

    fn axis(&self) -> Vec<f64> {
        let k = self.points_per_axis;
        match k {
            0 => vec![],
            1 => vec![0.5 * (self.lo + self.hi)],
            _ => (0..k)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (k - 1) as f64)
                .collect(),
        }
    }

    /// Grid points in (a, b, c) lexicographic order, then the extras.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let ax = self.axis();
        let mut out = Vec::with_capacity(ax.len().pow(3) + self.extra.len());
        for &a in &ax {
            for &b in &ax {
                for &c in &ax {
                    out.push((a, b, c));
                }
            }
        }
        out.extend(self.extra.iter().copied());
        out
    }
}

/// Tr(Wρ_edge) computed in coefficient space and as a dense trace.
pub fn edge_trace(w: &WitnessOperator, params: EdgeStateParams) -> Result<(f64, f64)> {
    let rho = edge_ppt_state(params)?;
    let coeff = w.expectation_from_features(feature_vector(&rho)?.values())?;
    let dense = w.expectation(&rho)?;
    Ok((coeff, dense))
}

/// Edge states on the grid detected by W, in grid order.
pub fn pptes_scan(w: &WitnessOperator, grid: &EdgeGrid) -> Result<Vec<PptesHit>> {
    if w.n_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: w.n_qubits(),
        });
    }
    let results: Vec<Option<PptesHit>> = grid
        .points()
        .into_par_iter()
        .map(|(a, b, c)| -> Result<Option<PptesHit>> {
            let params = EdgeStateParams::new(a, b, c)?;
            let rho = edge_ppt_state(params)?;
            for q in 1..=3 {
                let min = min_partial_transpose_eigenvalue(&rho, &[q])?;
                if min < -PSD_TOL {
                    return Err(Error::InvalidState(format!(
                        "edge state ({a}, {b}, {c}) not PPT on qubit {q}: {min:e}"
                    )));
                }
            }
            let (coeff, dense) = edge_trace(w, params)?;
            if (coeff - dense).abs() > 1e-12 {
                return Err(Error::InvalidState(format!(
                    "trace paths disagree at ({a}, {b}, {c}): {coeff} vs {dense}"
                )));
            }
            Ok((dense < -HIT_TOL).then_some(PptesHit {
                params,
                trace_value: dense,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposabilityVerdict {
    Nondecomposable,
    Inconclusive,
}

impl fmt::Display for DecomposabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecomposabilityVerdict::Nondecomposable => write!(f, "NONDECOMPOSABLE"),
            DecomposabilityVerdict::Inconclusive => write!(f, "INCONCLUSIVE"),
        }
    }
}

pub fn nondecomposability_verdict(hits: &[PptesHit]) -> DecomposabilityVerdict {
    if hits.is_empty() {
        DecomposabilityVerdict::Inconclusive
    } else {
        DecomposabilityVerdict::Nondecomposable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeAxis {
    A,
    B,
    C,
}

impl EdgeAxis {
    fn params(self, x: f64, fixed: (f64, f64)) -> Result<EdgeStateParams> {
        match self {
            EdgeAxis::A => EdgeStateParams::new(x, fixed.0, fixed.1),
            EdgeAxis::B => EdgeStateParams::new(fixed.0, x, fixed.1),
            EdgeAxis::C => EdgeStateParams::new(fixed.0, fixed.1, x),
        }
    }
}

/// n·Tr(Wρ) along one axis, fitted as α + β/x + γx.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTraceCurve {
    pub axis: EdgeAxis,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// (x, Tr(Wρ)) samples.
    pub samples: Vec<(f64, f64)>,
    pub residual: f64,
}

impl EdgeTraceCurve {
    /// Tr(Wρ) from the fitted numerator.
    pub fn trace_at(&self, x: f64, fixed: (f64, f64)) -> Result<f64> {
        let n = self.axis.params(x, fixed)?.normalization();
        Ok((self.alpha + self.beta / x + self.gamma * x) / n)
    }
}

pub fn edge_trace_curve(
    w: &WitnessOperator,
    axis: EdgeAxis,
    fixed: (f64, f64),
) -> Result<EdgeTraceCurve> {
    if w.n_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: w.n_qubits(),
        });
    }
    let numerator = |x: f64| -> Result<f64> {
        let params = axis.params(x, fixed)?;
        Ok(edge_trace(w, params)?.1 * params.normalization())
    };
    let nodes = [0.2, 0.5, 0.8];
    let m = DMatrix::from_fn(3, 3, |r, c| match c {
        0 => 1.0,
        1 => 1.0 / nodes[r],
        _ => nodes[r],
    });
    let rhs = nalgebra::DVector::from_vec(
        nodes
            .iter()
            .map(|&x| numerator(x))
            .collect::<Result<Vec<_>>>()?,
    );
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidState("singular three-point fit".into()))?;
    let (alpha, beta, gamma) = (sol[0], sol[1], sol[2]);
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 1.0;
    let mut samples = Vec::new();
    for i in 0..10 {
        let x = 0.05 + 0.9 * (i as f64 + 0.5) / 10.0;
        let params = axis.params(x, fixed)?;
        let tr = edge_trace(w, params)?.1;
        let num = tr * params.normalization();
        residual = residual.max((num - (alpha + beta / x + gamma * x)).abs());
        scale = scale.max(num.abs());
        samples.push((x, tr));
    }
    if residual >= 1e-9 * scale {
        return Err(Error::NotRationalAffine(residual));
    }
    Ok(EdgeTraceCurve {
        axis,
        alpha,
        beta,
        gamma,
        samples,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::ComplexMatrix;
    use crate::states::bell_state;
    use crate::witness::Normalization;
    use std::f64::consts::PI;

    fn ideal() -> WitnessOperator {
        let m =
            &ComplexMatrix::identity(4).scale(0.5) - bell_state(0, 0).unwrap().projector().matrix();
        WitnessOperator::from_matrix(&m, Normalization::UnitTrace).unwrap()
    }

    #[test]
    fn ideal_witness_tangent_examples() {
        let w = ideal();
        for angles in [vec![(0.0, 0.0), (0.0, 0.0)], vec![(PI, 0.0), (PI, 0.0)]] {
            let v = w.product_value(&ProductState::new(angles).unwrap());
            assert!(v.abs() < 1e-15);
        }
        let ts = tangent_states(&w, 4, 64, 0);
        assert!(ts.states.len() >= 4);
        assert!(ts.states.iter().all(|t| t.value.abs() < EPS_TANGENT));
        assert_eq!(ts.span_rank, 4);
        assert_eq!(
            optimality_verdict(&ts, 2),
            OptimalityVerdict::Optimal { rank: 4 }
        );
    }

    #[test]
    fn verdict_examples() {
        let empty = TangentSet {
            states: vec![],
            span_rank: 0,
            reached_target: false,
        };
        assert_eq!(
            optimality_verdict(&empty, 2),
            OptimalityVerdict::Inconclusive { rank: 0 }
        );
        let v = |t: f64| {
            ProductState::new(vec![(t, 0.0), (t, 0.0)])
                .unwrap()
                .amplitudes()
        };
        assert_eq!(span_rank(&[v(0.0), v(PI)]), 2);
    }

    #[test]
    fn rank_ignores_global_phase() {
        let v = ProductState::new(vec![(1.0, 2.0), (0.5, 0.3)])
            .unwrap()
            .amplitudes();
        let u: Vec<Complex64> = v
            .iter()
            .map(|z| z * Complex64::from_polar(1.0, 0.7))
            .collect();
        assert_eq!(span_rank(&[v.clone(), u]), 1);
    }

    #[test]
    fn nondecomposability_examples() {
        assert_eq!(
            nondecomposability_verdict(&[]),
            DecomposabilityVerdict::Inconclusive
        );
        let hit = PptesHit {
            params: EdgeStateParams::new(0.5, 0.5, 0.5).unwrap(),
            trace_value: -0.1,
        };
        assert_eq!(
            nondecomposability_verdict(&[hit]),
            DecomposabilityVerdict::Nondecomposable
        );
    }

    #[test]
    fn identity_curve() {
        let w = WitnessOperator::from_matrix(
            &ComplexMatrix::identity(8).scale(0.125),
            Normalization::UnitTrace,
        )
        .unwrap();
        let curve = edge_trace_curve(&w, EdgeAxis::A, (0.3196, 0.81642)).unwrap();
        assert!(curve.samples.iter().all(|(_, t)| (t - 0.125).abs() < 1e-14));
        assert!((curve.beta - 0.125).abs() < 1e-12 && (curve.gamma - 0.125).abs() < 1e-12);
        assert!(pptes_scan(&w, &EdgeGrid::with_points(4))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn grid_layout() {
        let g = EdgeGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 8001);
        assert_eq!(pts[0], (0.05, 0.05, 0.05));
        assert!((pts[7999].0 - 0.95).abs() < 1e-15);
        assert_eq!(pts[8000], NAMED_EDGE_POINT);
    }
}
