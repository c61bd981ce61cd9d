//! Dataset → SVM → witness → calibration, with hard-negative refinement.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::Result;
use crate::features::{feature_vector, feature_vector_with, pauli_masks};
use crate::io::{model_text, num, witness_text, write_dataset, write_text, KeyValues};
use crate::optimality::DISTINCT_TOL;
use crate::states::{
    derive_seed, generate_dataset, DatasetConfig, EntangledFamily, Label, LabeledSample, Symmetry,
};
use crate::svm::{predict, train, SvmModel, TrainConfig, TrainReport, TrainingSet};
use crate::witness::{
    assemble_witness, calibrate, detection_threshold, product_local_minima, Calibration,
    CalibrationMode, ThresholdReport, WitnessOperator, WitnessReport, DEFAULT_RESTARTS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessTrainingConfig {
    pub train: TrainConfig,
    /// Rounds of adding product-state minimizers of the current witness to the separable class.
    pub refine_rounds: usize,
    pub refine_restarts: usize,
    /// Restarts for the calibration minimum.
    pub restarts: usize,
    pub calibration: CalibrationMode,
    pub seed: u64,
}

impl Default for WitnessTrainingConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            refine_rounds: 16,
            refine_restarts: 64,
            restarts: DEFAULT_RESTARTS,
            calibration: CalibrationMode::Touch,
            seed: 0,
        }
    }
}

impl WitnessTrainingConfig {
    /// Defaults with the family's refinement depth. PPT entangled samples sit
    /// inside the margin of every valid witness, and minimizer refinement then
    /// tilts the plane toward the class mean; edge families train unrefined.
    pub fn for_family(family: &EntangledFamily, seed: u64) -> Self {
        let refine_rounds = match family {
            EntangledFamily::Werner(_) => 16,
            EntangledFamily::EdgePpt => 0,
        };
        let mut cfg = Self {
            refine_rounds,
            seed,
            ..Self::default()
        };
        cfg.train.seed = seed;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub round: usize,
    pub product_minimum: f64,
    pub added: usize,
    pub training_size: usize,
}

#[derive(Debug, Clone)]
pub struct TrainedWitness {
    pub model: SvmModel,
    pub report: TrainReport,
    /// Witness assembled from the final model, before calibration.
    pub assembled: WitnessOperator,
    pub calibration: Calibration,
    pub rounds: Vec<RoundSummary>,
    pub training_set: TrainingSet,
}

impl TrainedWitness {
    pub fn witness(&self) -> &WitnessOperator {
        &self.calibration.witness
    }
}

pub fn training_set_from_samples(samples: &[LabeledSample]) -> Result<TrainingSet> {
    let n = samples.first().map(|s| s.rho.n_qubits()).unwrap_or(1);
    let masks = pauli_masks(n);
    let features = samples
        .par_iter()
        .map(|s| Ok(feature_vector_with(&masks, &s.rho)?.into_values()))
        .collect::<Result<Vec<_>>>()?;
    TrainingSet::new(features, samples.iter().map(|s| s.label).collect())
}

/// Trains, refines against product-state minimizers, and calibrates.
/// Minimizers enter the separable class after the dataset's twirl.
pub fn train_witness(
    data: &TrainingSet,
    cfg: &WitnessTrainingConfig,
    symmetry: Symmetry,
) -> Result<TrainedWitness> {
    let mut set = data.clone();
    let mut rounds = Vec::with_capacity(cfg.refine_rounds);
    for round in 0..cfg.refine_rounds {
        let (model, _) = train(&set, &cfg.train)?;
        let (w, _) = assemble_witness(&model)?;
        let minima = product_local_minima(
            &w,
            cfg.refine_restarts,
            derive_seed(cfg.seed, 1 << 32 | round as u64),
        );
        let product_minimum = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        let mut kept: Vec<Vec<num_complex::Complex64>> = Vec::new();
        for m in &minima {
            let amps = m.state.amplitudes();
            let distinct = kept.iter().all(|u| {
                let ip: num_complex::Complex64 =
                    u.iter().zip(&amps).map(|(a, b)| a.conj() * b).sum();
                ip.norm_sqr() < 1.0 - DISTINCT_TOL
            });
            if distinct {
                set.push(
                    feature_vector(&symmetry.apply(&m.state.density())?)?.into_values(),
                    Label::Separable,
                )?;
                kept.push(amps);
            }
        }
        rounds.push(RoundSummary {
            round,
            product_minimum,
            added: kept.len(),
            training_size: set.len(),
        });
    }
    let (model, report) = train(&set, &cfg.train)?;
    let (assembled, _) = assemble_witness(&model)?;
    let calibration = calibrate(
        &assembled,
        cfg.restarts,
        derive_seed(cfg.seed, 2 << 32),
        cfg.calibration,
    )?;
    Ok(TrainedWitness {
        model,
        report,
        assembled,
        calibration,
        rounds,
        training_set: set,
    })
}

/// Threshold report on the family's representative Werner line, when it has one.
pub fn family_threshold(
    w: &WitnessOperator,
    family: &EntangledFamily,
) -> Result<Option<ThresholdReport>> {
    match family {
        EntangledFamily::Werner(base) => {
            let psi = base.representative()?;
            Ok(Some(detection_threshold(w, &psi, &family.tag())?))
        }
        EntangledFamily::EdgePpt => Ok(None),
    }
}

/// Fraction of samples whose predicted label matches.
pub fn accuracy(model: &SvmModel, samples: &[LabeledSample]) -> Result<f64> {
    let masks = pauli_masks(samples.first().map(|s| s.rho.n_qubits()).unwrap_or(1));
    let mut correct = 0usize;
    for s in samples {
        let x = feature_vector_with(&masks, &s.rho)?;
        if predict(model, x.values())?.0 == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len().max(1) as f64)
}

/// Full run from a dataset recipe.
pub struct PipelineRun {
    pub samples: Vec<LabeledSample>,
    pub trained: TrainedWitness,
    pub threshold: Option<ThresholdReport>,
}

pub fn run_pipeline(dataset: &DatasetConfig, cfg: &WitnessTrainingConfig) -> Result<PipelineRun> {
    let samples = generate_dataset(dataset)?;
    let set = training_set_from_samples(&samples)?;
    let trained = train_witness(&set, cfg, dataset.family.symmetry())?;
    let threshold = family_threshold(trained.witness(), &dataset.family)?;
    Ok(PipelineRun {
        samples,
        trained,
        threshold,
    })
}

/// Report fields for a verified witness.
pub fn verification_fields(report: &WitnessReport) -> KeyValues {
    let mut kv = KeyValues::new();
    let angles: Vec<String> = report
        .min_product_state
        .angles()
        .iter()
        .map(|(t, a)| format!("{} {}", num(*t), num(*a)))
        .collect();
    kv.push("min_product_value", num(report.min_product_value))
        .push("min_product_angles", angles.join(" "))
        .push("min_eigenvalue", num(report.min_eigenvalue))
        .push("detected_value", num(report.detected_value))
        .push("detected_is_npt", report.detected_is_npt)
        .push("verdict", report.verdict());
    kv
}

pub fn threshold_fields(kv: &mut KeyValues, t: &ThresholdReport) {
    kv.push("threshold.family", &t.family)
        .push("threshold.slope", num(t.slope))
        .push("threshold.intercept", num(t.intercept))
        .push("threshold.p_star", t.p_star.map_or("none".to_string(), num))
        .push("threshold.residual", num(t.residual))
        .push("threshold.detected", t.detected);
}

/// Paths written by [`write_run`].
pub struct RunFiles {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub witness: PathBuf,
    pub report: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            dataset: dir.join("dataset.csv"),
            model: dir.join("model.txt"),
            witness: dir.join("witness.txt"),
            report: dir.join("report.txt"),
        }
    }
}

/// Writes dataset, model, witness and report for a pipeline run.
pub fn write_run(
    dir: &Path,
    dataset: &DatasetConfig,
    cfg: &WitnessTrainingConfig,
    run: &PipelineRun,
    verification: &WitnessReport,
) -> Result<RunFiles> {
    let files = RunFiles::in_dir(dir);
    write_dataset(&files.dataset, &run.samples, dataset)?;
    let t = &run.trained;
    let mut meta = KeyValues::new();
    meta.push("seed", cfg.train.seed)
        .push("epochs_run", t.report.epochs_run)
        .push("final_objective", num(t.report.final_objective))
        .push("training_accuracy", num(t.report.training_accuracy))
        .push("stage", format!("{:?}", t.report.stage))
        .push("training_size", t.training_set.len());
    write_text(&files.model, &model_text(&t.model, &meta))?;
    let mut report = verification_fields(verification);
    report.push("calibration_shift", num(t.calibration.shift));
    if let Some(th) = &run.threshold {
        threshold_fields(&mut report, th);
    }
    for r in &t.rounds {
        report.push(
            format!("refine.{}", r.round),
            format!(
                "min {} added {} size {}",
                num(r.product_minimum),
                r.added,
                r.training_size
            ),
        );
    }
    write_text(&files.witness, &witness_text(t.witness(), &report))?;
    write_text(&files.report, &report.render())?;
    Ok(files)
}
