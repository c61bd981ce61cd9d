//! Primal soft-margin linear SVM trained by full-batch subgradient descent,
//! with an optional second-order polish of the final hyperplane.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::states::{rng_from_seed, Label};

/// Labeled feature rows with a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::DegenerateDataset("no samples".into()));
        }
        let dim = features[0].len();
        for row in &features {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("non-finite feature".into()));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn push(&mut self, x: Vec<f64>, label: Label) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.features.push(x);
        self.labels.push(label);
        Ok(())
    }

    fn has_both_classes(&self) -> bool {
        self.labels.contains(&Label::Separable) && self.labels.contains(&Label::Entangled)
    }
}

/// Hyperplane w·x + b = 0 with regularization C.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn zeros(dim: usize, c: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            c,
        }
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    pub learning_rate: f64,
    /// Decay scale T₀ in η_t = η₀/(1 + t/T₀).
    pub decay_epochs: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Relative objective change over `stall_window` epochs that stops training.
    pub tolerance: f64,
    pub stall_window: usize,
    /// Run the smoothed-Newton and active-set polish after descent.
    pub polish: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            learning_rate: 0.1,
            decay_epochs: 100.0,
            epochs: 2000,
            seed: 0,
            tolerance: 1e-9,
            stall_window: 50,
            polish: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("C", self.c),
            ("learning rate", self.learning_rate),
            ("decay epochs", self.decay_epochs),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.epochs == 0 || self.stall_window == 0 {
            return Err(Error::InvalidParameter(
                "epochs and stall window must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which refinement produced the returned model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolishStage {
    Subgradient,
    SmoothedNewton,
    ActiveSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub initial_objective: f64,
    pub subgradient_objective: f64,
    pub final_objective: f64,
    /// Best-so-far objective after each epoch; non-increasing.
    pub best_history: Vec<f64>,
    pub stage: PolishStage,
    pub training_accuracy: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ½‖w‖² + C Σ max(0, 1 − y(w·x + b))
pub fn hinge_objective(model: &SvmModel, data: &TrainingSet) -> Result<f64> {
    if model.weights.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: model.weights.len(),
        });
    }
    Ok(objective(&model.weights, model.bias, model.c, data, None))
}

fn objective(w: &[f64], b: f64, c: f64, data: &TrainingSet, order: Option<&[usize]>) -> f64 {
    let hinge = |i: usize| (1.0 - data.labels[i].sign() * (dot(w, &data.features[i]) + b)).max(0.0);
    let loss: f64 = match order {
        Some(o) => o.iter().map(|&i| hinge(i)).sum(),
        None => (0..data.len()).map(hinge).sum(),
    };
    0.5 * dot(w, w) + c * loss
}

/// Subgradient (∂w, ∂b); samples with margin ≤ 1 count as active.
pub fn subgradient(model: &SvmModel, data: &TrainingSet) -> Result<(Vec<f64>, f64)> {
    if model.weights.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: model.weights.len(),
        });
    }
    let order: Vec<usize> = (0..data.len()).collect();
    Ok(subgradient_ordered(
        &model.weights,
        model.bias,
        model.c,
        data,
        &order,
    ))
}

fn subgradient_ordered(
    w: &[f64],
    b: f64,
    c: f64,
    data: &TrainingSet,
    order: &[usize],
) -> (Vec<f64>, f64) {
    let mut gw = w.to_vec();
    let mut gb = 0.0;
    for &i in order {
        let y = data.labels[i].sign();
        let x = &data.features[i];
        if y * (dot(w, x) + b) <= 1.0 {
            for (g, xi) in gw.iter_mut().zip(x) {
                *g -= c * y * xi;
            }
            gb -= c * y;
        }
    }
    (gw, gb)
}

/// Canonical order (label, then features) followed by a seeded shuffle, so
/// the schedule does not depend on input order.
fn schedule(data: &TrainingSet, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| {
        let li = data.labels[i].sign();
        let lj = data.labels[j].sign();
        li.total_cmp(&lj).then_with(|| {
            data.features[i]
                .iter()
                .zip(&data.features[j])
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order.shuffle(&mut rng_from_seed(seed));
    order
}

/// Trains the soft-margin SVM. Labels: +1 separable, −1 entangled.
pub fn train(data: &TrainingSet, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    config.validate()?;
    if !data.has_both_classes() {
        return Err(Error::DegenerateDataset(
            "training data holds a single class".into(),
        ));
    }
    let m = data.len() as f64;
    let scheduled = schedule(data, config.seed);
    let data = &TrainingSet {
        features: scheduled
            .iter()
            .map(|&i| data.features[i].clone())
            .collect(),
        labels: scheduled.iter().map(|&i| data.labels[i]).collect(),
    };
    let order: Vec<usize> = (0..data.len()).collect();
    let c = config.c;
    let mut w = vec![0.0; data.dim()];
    let mut b = 0.0;
    let initial = objective(&w, b, c, data, Some(&order));
    let mut prev = initial;
    let mut best = (w.clone(), b, initial);
    let mut history: Vec<f64> = Vec::with_capacity(config.epochs);
    let mut raw: Vec<f64> = Vec::with_capacity(config.epochs);

    let mut epochs_run = 0;
    for t in 0..config.epochs {
        epochs_run = t + 1;
        let eta = config.learning_rate / (1.0 + t as f64 / config.decay_epochs);
        // step scaled by 1/m: descent on the per-sample average objective
        let step = eta / m;
        let (gw, gb) = subgradient_ordered(&w, b, c, data, &order);
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= step * gi;
        }
        b -= step * gb;
        let obj = objective(&w, b, c, data, Some(&order));
        // a 10x jump counts as divergence once it also exceeds the w = 0 objective
        if !obj.is_finite() || (prev > 0.0 && obj > 10.0 * prev && obj > initial) {
            return Err(Error::Diverged {
                epoch: t,
                previous: prev,
                current: obj,
            });
        }
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
        history.push(best.2);
        raw.push(obj);
        prev = obj;
        let win = config.stall_window;
        if raw.len() > win {
            let old = raw[raw.len() - 1 - win];
            if (old - obj).abs() <= config.tolerance * obj.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }

    let (mut w, mut b, sub_obj) = best;
    let mut stage = PolishStage::Subgradient;
    let mut final_obj = sub_obj;
    if config.polish {
        let (nw, nb) = smoothed_newton(data, &w, b, c);
        let newton_obj = objective(&nw, nb, c, data, Some(&order));
        if newton_obj <= final_obj {
            w = nw;
            b = nb;
            final_obj = newton_obj;
            stage = PolishStage::SmoothedNewton;
            if let Some((ew, eb)) = active_set_solve(data, &w, b, c) {
                let exact_obj = objective(&ew, eb, c, data, Some(&order));
                if exact_obj <= final_obj * (1.0 + 1e-7) {
                    w = ew;
                    b = eb;
                    final_obj = exact_obj;
                    stage = PolishStage::ActiveSet;
                }
            }
        }
    }

    let model = SvmModel {
        weights: w,
        bias: b,
        c,
    };
    let correct = (0..data.len())
        .filter(|&i| predict_values(&model, &data.features[i]).0 == data.labels[i])
        .count();
    let report = TrainReport {
        epochs_run,
        initial_objective: initial,
        subgradient_objective: sub_obj,
        final_objective: final_obj,
        best_history: history,
        stage,
        training_accuracy: correct as f64 / m,
    };
    Ok((model, report))
}

fn smoothed_value(z: &[f64], c: f64, mu: f64, data: &TrainingSet) -> f64 {
    let d = z.len() - 1;
    let w = &z[..d];
    let mut loss = 0.0;
    for (x, l) in data.features.iter().zip(&data.labels) {
        let m = l.sign() * (dot(w, x) + z[d]);
        loss += if m >= 1.0 {
            0.0
        } else if m > 1.0 - mu {
            (1.0 - m).powi(2) / (2.0 * mu)
        } else {
            1.0 - m - mu / 2.0
        };
    }
    0.5 * dot(w, w) + c * loss
}

/// Newton's method on the Huber-smoothed hinge with continuation in the smoothing width.
fn smoothed_newton(data: &TrainingSet, w0: &[f64], b0: f64, c: f64) -> (Vec<f64>, f64) {
    let d = data.dim();
    let mut z: Vec<f64> = w0.iter().copied().chain(std::iter::once(b0)).collect();
    for k in 1..=6 {
        let mu = 10f64.powi(-k);
        for _ in 0..100 {
            let mut g = z.clone();
            g[d] = 0.0;
            let mut h = DMatrix::<f64>::identity(d + 1, d + 1);
            h[(d, d)] = 1e-10;
            for (x, l) in data.features.iter().zip(&data.labels) {
                let y = l.sign();
                let m = y * (dot(&z[..d], x) + z[d]);
                if m >= 1.0 {
                    continue;
                }
                let quad = m > 1.0 - mu;
                let dh = if quad { -(1.0 - m) / mu } else { -1.0 };
                for j in 0..d {
                    g[j] += c * dh * y * x[j];
                }
                g[d] += c * dh * y;
                if quad {
                    let s = c / mu;
                    for r in 0..=d {
                        let xr = if r < d { x[r] } else { 1.0 };
                        if xr == 0.0 {
                            continue;
                        }
                        for col in r..=d {
                            let xc = if col < d { x[col] } else { 1.0 };
                            h[(r, col)] += s * xr * xc;
                        }
                    }
                }
            }
            for r in 0..=d {
                for col in 0..r {
                    h[(r, col)] = h[(col, r)];
                }
            }
            let gnorm = dot(&g, &g).sqrt();
            if gnorm < 1e-11 * (1.0 + dot(&z, &z).sqrt()) {
                break;
            }
            let rhs = DVector::from_iterator(d + 1, g.iter().map(|v| -v));
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => match h.lu().solve(&rhs) {
                    Some(s) => s,
                    None => break,
                },
            };
            let slope: f64 = g.iter().zip(step.iter()).map(|(a, b)| a * b).sum();
            let f0 = smoothed_value(&z, c, mu, data);
            let mut t = 1.0;
            let accepted = loop {
                let next = z
                    .iter()
                    .zip(step.iter())
                    .map(|(a, s)| a + t * s)
                    .collect::<Vec<f64>>();
                if smoothed_value(&next, c, mu, data) <= f0 + 1e-4 * t * slope {
                    break Some(next);
                }
                t *= 0.5;
                if t < 1e-12 {
                    break None;
                }
            };
            // no Armijo step: z is stationary to rounding at this width
            match accepted {
                Some(next) => z = next,
                None => break,
            }
        }
    }
    let b = z[d];
    z.truncate(d);
    (z, b)
}

/// Primal-dual active-set solve of the exact KKT system, started from the
/// margin pattern of (w, b). Returns None when the pattern does not settle.
fn active_set_solve(data: &TrainingSet, w: &[f64], b: f64, c: f64) -> Option<(Vec<f64>, f64)> {
    const TAU: f64 = 1e-5;
    const SLACK: f64 = 1e-9;
    let n = data.len();
    let y: Vec<f64> = data.labels.iter().map(|l| l.sign()).collect();
    let x = &data.features;
    let margins: Vec<f64> = (0..n).map(|i| y[i] * (dot(w, &x[i]) + b)).collect();
    let mut on_margin: Vec<bool> = margins.iter().map(|m| (m - 1.0).abs() <= TAU).collect();
    let mut violator: Vec<bool> = margins.iter().map(|&m| m < 1.0 - TAU).collect();
    let d = data.dim();

    for _ in 0..50 {
        let s_idx: Vec<usize> = (0..n).filter(|&i| on_margin[i]).collect();
        let v_idx: Vec<usize> = (0..n).filter(|&i| violator[i]).collect();
        let mut w_v = vec![0.0; d];
        for &i in &v_idx {
            for (acc, xi) in w_v.iter_mut().zip(&x[i]) {
                *acc += c * y[i] * xi;
            }
        }
        let c_v = c * v_idx.iter().map(|&i| y[i]).sum::<f64>();
        let (new_w, new_b, sol) = pattern_solve(x, &y, &s_idx, &w_v, c_v)?;
        let mm: Vec<f64> = (0..n)
            .map(|i| y[i] * (dot(&new_w, &x[i]) + new_b))
            .collect();

        let mut changed = false;
        let (mut next_s, mut next_v) = (on_margin.clone(), violator.clone());
        for (a, &i) in s_idx.iter().enumerate() {
            if sol[a] < -SLACK {
                next_s[i] = false;
                changed = true;
            } else if sol[a] > c + SLACK {
                next_s[i] = false;
                next_v[i] = true;
                changed = true;
            }
        }
        for i in 0..n {
            let outside = !on_margin[i] && !violator[i];
            if outside && mm[i] < 1.0 - SLACK {
                next_s[i] = true;
                changed = true;
            }
            if violator[i] && mm[i] > 1.0 + SLACK {
                next_v[i] = false;
                next_s[i] = true;
                changed = true;
            }
        }
        if !changed {
            return Some((new_w, new_b));
        }
        on_margin = next_s;
        violator = next_v;
    }
    None
}

/// nalgebra's plain `svd` iterates without bound on some inputs.
const SVD_MAX_ITER: usize = 10_000;

/// Stationary point of ½|w|² − w·w_V − b·c_V subject to y_i(w·x_i + b) = 1 on
/// the margin set, with the margin multipliers α satisfying
/// (w − w_V, −c_V) = Σ α_i y_i (x_i, 1). Minimum-norm where underdetermined.
fn pattern_solve(
    x: &[Vec<f64>],
    y: &[f64],
    s_idx: &[usize],
    w_v: &[f64],
    c_v: f64,
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let d = w_v.len();
    let k = s_idx.len();
    // zero rows pad A so the thin SVD returns a full right basis
    let rows = k.max(d + 1);
    let a = DMatrix::<f64>::from_fn(rows, d + 1, |r, col| {
        if r >= k {
            0.0
        } else {
            let i = s_idx[r];
            y[i] * if col < d { x[i][col] } else { 1.0 }
        }
    });
    let svd = a.try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)?;
    let (u, v_t) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
    let sv = &svd.singular_values;
    let cutoff = 1e-12 * sv.max().max(f64::MIN_POSITIVE);
    let ranked: Vec<usize> = (0..sv.len()).filter(|&j| sv[j] > cutoff).collect();
    let null: Vec<usize> = (0..d + 1).filter(|j| !ranked.contains(j)).collect();

    let ones = DVector::<f64>::from_fn(rows, |r, _| if r < k { 1.0 } else { 0.0 });
    let mut z = DVector::<f64>::zeros(d + 1);
    for &j in &ranked {
        let coef = u.column(j).dot(&ones) / sv[j];
        z += v_t.row(j).transpose() * coef;
    }
    let q = DVector::<f64>::from_fn(d + 1, |r, _| if r < d { w_v[r] } else { c_v });
    let dz = |z: &DVector<f64>| {
        let mut out = z.clone();
        out[d] = 0.0;
        out
    };
    if !null.is_empty() {
        let nb = DMatrix::<f64>::from_fn(d + 1, null.len(), |r, col| v_t[(null[col], r)]);
        let mut dn = nb.clone();
        dn.row_mut(d).fill(0.0);
        let h = nb.transpose() * &dn;
        let rhs = nb.transpose() * (&q - dz(&z));
        let hs = h.try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)?;
        let hmax = hs.singular_values.max().max(f64::MIN_POSITIVE);
        let t = hs.solve(&rhs, 1e-12 * hmax).ok()?;
        z += nb * t;
    }
    let grad = dz(&z) - &q;
    // α = (Aᵀ)⁺ grad through the same factorization
    let vg = v_t * &grad;
    let mut alpha_full = DVector::<f64>::zeros(rows);
    for &j in &ranked {
        alpha_full += u.column(j) * (vg[j] / sv[j]);
    }
    let alpha: Vec<f64> = alpha_full.iter().take(k).copied().collect();
    let w: Vec<f64> = z.iter().take(d).copied().collect();
    Some((w, z[d], alpha))
}

fn predict_values(model: &SvmModel, x: &[f64]) -> (Label, f64) {
    let v = dot(&model.weights, x) + model.bias;
    (Label::from_sign(v), v)
}

/// Label +1 (separable) when the decision value is ≥ 0.
pub fn predict(model: &SvmModel, x: &[f64]) -> Result<(Label, f64)> {
    let v = model.decision_value(x)?;
    Ok((Label::from_sign(v), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TrainingSet {
        TrainingSet::new(
            vec![vec![2.0], vec![-2.0]],
            vec![Label::Separable, Label::Entangled],
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let data = toy();
        assert_eq!(
            hinge_objective(&SvmModel::zeros(1, 10.0), &data).unwrap(),
            20.0
        );
        let m = SvmModel {
            weights: vec![0.5],
            bias: 0.0,
            c: 10.0,
        };
        assert!((hinge_objective(&m, &data).unwrap() - 0.125).abs() < 1e-15);
        let m1 = SvmModel {
            weights: vec![0.25],
            bias: 0.0,
            c: 1.0,
        };
        let m2 = SvmModel {
            c: 2.0,
            ..m1.clone()
        };
        let pen = |m: &SvmModel| hinge_objective(m, &data).unwrap() - 0.5 * 0.0625;
        assert!((pen(&m2) - 2.0 * pen(&m1)).abs() < 1e-15);
    }

    #[test]
    fn toy_training_reaches_analytic_solution() {
        let cfg = TrainConfig {
            c: 100.0,
            ..TrainConfig::default()
        };
        let (m, report) = train(&toy(), &cfg).unwrap();
        assert!((m.weights[0] - 0.5).abs() < 0.02, "{m:?}");
        assert!(m.bias.abs() < 0.02);
        assert!(report.final_objective <= report.initial_objective);
        assert_eq!(report.training_accuracy, 1.0);
        assert!(report.best_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = TrainingSet::new(vec![vec![1.0], vec![2.0]], vec![Label::Separable; 2]).unwrap();
        assert!(matches!(
            train(&data, &TrainConfig::default()),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn predict_examples() {
        let m = SvmModel {
            weights: vec![0.0, 0.0],
            bias: 1.0,
            c: 1.0,
        };
        assert_eq!(predict(&m, &[5.0, -3.0]).unwrap().0, Label::Separable);
        let toy_model = SvmModel {
            weights: vec![0.5],
            bias: 0.0,
            c: 1.0,
        };
        assert_eq!(
            predict(&toy_model, &[2.0]).unwrap(),
            (Label::Separable, 1.0)
        );
        assert!(predict(&toy_model, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn huge_rate_reports_divergence() {
        let cfg = TrainConfig {
            learning_rate: 1e6,
            polish: false,
            ..TrainConfig::default()
        };
        let data = TrainingSet::new(
            vec![
                vec![1.0, 0.5],
                vec![-1.0, 0.2],
                vec![0.8, -0.1],
                vec![-0.3, -0.9],
            ],
            vec![
                Label::Separable,
                Label::Entangled,
                Label::Separable,
                Label::Entangled,
            ],
        )
        .unwrap();
        assert!(matches!(train(&data, &cfg), Err(Error::Diverged { .. })));
    }
}
