//! Kernel SVM trained by sequential minimal optimization, plus the
//! leave-one-speaker-out evaluation harness.
//!
//! The solver works on the soft-margin dual: maximize
//! W(α) = Σαᵢ − ½ ΣΣ αᵢαⱼyᵢyⱼK(xᵢ,xⱼ) subject to 0 ≤ αᵢ ≤ C and Σαᵢyᵢ = 0,
//! optimizing one pair of multipliers at a time until every point satisfies
//! the KKT conditions within tolerance.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fit_norm_stats_rows, zscore_slice, NormStats};
use crate::seed;

/// Binary class label. Human is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Synthetic,
}

impl Label {
    /// Signed target used by the solver: human +1, synthetic −1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Human => 1.0,
            Label::Synthetic => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Human => "human",
            Label::Synthetic => "synthetic",
        })
    }
}

/// One training or evaluation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample_id: String,
    pub speaker_id: String,
    pub label: Label,
    pub features: Vec<f64>,
}

/// Kernel family. `Polynomial { degree: 2, coef0: 1.0 }` is the quadratic
/// kernel K(x, y) = (x·y + 1)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelKind {
    pub fn quadratic() -> Self {
        KernelKind::Polynomial {
            degree: 2,
            coef0: 1.0,
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        match *self {
            KernelKind::Linear => dot,
            KernelKind::Polynomial { degree, coef0 } => (dot + coef0).powi(degree as i32),
        }
    }
}

/// Solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: KernelKind,
    /// Box constraint C.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Consecutive sweeps without an update before the solver stops.
    pub max_passes: usize,
    /// Seed for working-pair selection, making training deterministic.
    pub seed: u64,
    /// Record the dual objective after every successful pair update and
    /// assert (in debug builds) that it never decreases. Costs O(n²) per
    /// update, so it is off by default.
    pub track_objective: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::quadratic(),
            c: 1.0,
            tol: 1e-3,
            max_passes: 100,
            seed: 0,
            track_objective: false,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c <= 0.0 || !self.c.is_finite() {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if self.tol <= 0.0 || !self.tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidConfig("max_passes must be at least 1".into()));
        }
        if let KernelKind::Polynomial { degree, coef0 } = self.kernel {
            if degree == 0 {
                return Err(Error::InvalidConfig("polynomial degree must be at least 1".into()));
            }
            if !coef0.is_finite() {
                return Err(Error::InvalidConfig("coef0 must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Trained classifier: support vectors with signed dual coefficients αᵢyᵢ
/// and the bias term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelKind,
    pub c: f64,
    pub feature_dim: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed coefficients αᵢ·yᵢ, one per support vector.
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Content id of the normalization statistics the features were scaled
    /// with, or "none".
    pub norm_stats_id: String,
}

/// Versioned on-disk form of [`SvmModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModelFile {
    pub version: u32,
    pub kernel: KernelKind,
    pub c: f64,
    pub feature_dim: usize,
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub norm_stats_id: String,
}

impl SvmModelFile {
    pub fn from_model(m: &SvmModel) -> Self {
        Self {
            version: 1,
            kernel: m.kernel,
            c: m.c,
            feature_dim: m.feature_dim,
            support_vectors: m.support_vectors.clone(),
            alphas: m.alphas.clone(),
            bias: m.bias,
            norm_stats_id: m.norm_stats_id.clone(),
        }
    }

    pub fn into_model(self) -> SvmModel {
        SvmModel {
            kernel: self.kernel,
            c: self.c,
            feature_dim: self.feature_dim,
            support_vectors: self.support_vectors,
            alphas: self.alphas,
            bias: self.bias,
            norm_stats_id: self.norm_stats_id,
        }
    }
}

/// Solver byproducts kept for diagnostics and verification.
#[derive(Debug, Clone)]
pub struct TrainDiagnostics {
    /// Final multiplier per training point (unsigned, in [0, C]).
    pub alphas: Vec<f64>,
    /// Total sweeps over the data.
    pub sweeps: usize,
    /// True if the solver stopped because no update was possible, false if
    /// it hit the internal sweep cap.
    pub converged: bool,
    /// Dual objective after each successful pair update, when
    /// `track_objective` was set.
    pub objective_trace: Vec<f64>,
}

/// Predicted label with the raw decision value for thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub decision: f64,
}

struct Solver {
    y: Vec<f64>,
    gram: Vec<f64>,
    n: usize,
    c: f64,
    tol: f64,
    alphas: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
    rng: ChaCha8Rng,
    track_objective: bool,
    objective_trace: Vec<f64>,
}

impl Solver {
    fn new(x: Vec<&[f64]>, y: Vec<f64>, cfg: &SvmConfig) -> Self {
        let n = x.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = cfg.kernel.eval(x[i], x[j]);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        // With α = 0 and b = 0, f(xᵢ) = 0 so Eᵢ = −yᵢ.
        let errors = y.iter().map(|&v| -v).collect();
        Self {
            y,
            gram,
            n,
            c: cfg.c,
            tol: cfg.tol,
            alphas: vec![0.0; n],
            bias: 0.0,
            errors,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            track_objective: cfg.track_objective,
            objective_trace: Vec::new(),
        }
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn dual_objective(&self) -> f64 {
        let obj: f64 = self.alphas.iter().sum();
        let mut quad = 0.0;
        for i in 0..self.n {
            if self.alphas[i] == 0.0 {
                continue;
            }
            for j in 0..self.n {
                if self.alphas[j] == 0.0 {
                    continue;
                }
                quad += self.alphas[i] * self.alphas[j] * self.y[i] * self.y[j] * self.k(i, j);
            }
        }
        obj - 0.5 * quad
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.errors[i] * self.y[i];
        (r < -self.tol && self.alphas[i] < self.c) || (r > self.tol && self.alphas[i] > 0.0)
    }

    /// Optimize the pair (i, j). Returns true if either multiplier moved.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (ai_old, aj_old) = (self.alphas[i], self.alphas[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ei, ej) = (self.errors[i], self.errors[j]);
        let s = yi * yj;
        let (lo, hi) = if s < 0.0 {
            ((aj_old - ai_old).max(0.0), (self.c + aj_old - ai_old).min(self.c))
        } else {
            ((ai_old + aj_old - self.c).max(0.0), (ai_old + aj_old).min(self.c))
        };
        if hi - lo < 1e-12 * self.c {
            return false;
        }
        let (kii, kjj, kij) = (self.k(i, i), self.k(j, j), self.k(i, j));
        let eta = kii + kjj - 2.0 * kij;
        let aj_new = if eta > 0.0 {
            (aj_old + yj * (ei - ej) / eta).clamp(lo, hi)
        } else {
            // Flat or degenerate direction: the objective is linear in the
            // step, so move to whichever bound improves it.
            let gradient = yj * (ei - ej);
            if gradient > 0.0 {
                hi
            } else if gradient < 0.0 {
                lo
            } else {
                return false;
            }
        };
        if (aj_new - aj_old).abs() < 1e-12 * (aj_new + aj_old + 1e-12) {
            return false;
        }
        let ai_new = (ai_old + s * (aj_old - aj_new)).clamp(0.0, self.c);
        let (d_i, d_j) = (ai_new - ai_old, aj_new - aj_old);

        let b_old = self.bias;
        let b1 = b_old - ei - yi * d_i * kii - yj * d_j * kij;
        let b2 = b_old - ej - yi * d_i * kij - yj * d_j * kjj;
        let b_new = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        self.alphas[i] = ai_new;
        self.alphas[j] = aj_new;
        self.bias = b_new;
        let db = b_new - b_old;
        for k in 0..self.n {
            self.errors[k] += yi * d_i * self.k(i, k) + yj * d_j * self.k(j, k) + db;
        }

        if self.track_objective {
            let obj = self.dual_objective();
            if let Some(&prev) = self.objective_trace.last() {
                debug_assert!(
                    obj >= prev - 1e-9 * (1.0 + prev.abs()),
                    "dual objective decreased: {prev} -> {obj}"
                );
            }
            self.objective_trace.push(obj);
        }
        true
    }

    /// Try to improve point i: pick the partner maximizing |Eᵢ − Eⱼ|, then
    /// fall back to a seeded random-start scan over all points.
    fn examine(&mut self, i: usize) -> bool {
        if !self.violates_kkt(i) {
            return false;
        }
        let ei = self.errors[i];
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if j == i {
                continue;
            }
            let gap = (ei - self.errors[j]).abs();
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((j, gap));
            }
        }
        if let Some((j, _)) = best {
            if self.take_step(i, j) {
                return true;
            }
        }
        let start = self.rng.random_range(0..self.n);
        for off in 0..self.n {
            let j = (start + off) % self.n;
            if j != i && self.take_step(i, j) {
                return true;
            }
        }
        false
    }

    fn solve(&mut self, max_passes: usize) -> (usize, bool) {
        let sweep_cap = 1000.max(20 * max_passes);
        let mut quiet_passes = 0;
        let mut sweeps = 0;
        while quiet_passes < max_passes && sweeps < sweep_cap {
            let mut changed = 0;
            for i in 0..self.n {
                if self.examine(i) {
                    changed += 1;
                }
            }
            sweeps += 1;
            if changed == 0 {
                quiet_passes += 1;
            } else {
                quiet_passes = 0;
            }
        }
        (sweeps, sweeps < sweep_cap)
    }
}

fn validate_training_data(data: &[LabeledSample]) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = data[0].features.len();
    for s in data {
        if s.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.features.len(),
            });
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                sample_id: s.sample_id.clone(),
            });
        }
    }
    let has_human = data.iter().any(|s| s.label == Label::Human);
    let has_synth = data.iter().any(|s| s.label == Label::Synthetic);
    if !has_human || !has_synth {
        return Err(Error::SingleClass);
    }
    Ok(dim)
}

/// Train a soft-margin kernel SVM with SMO.
pub fn train_svm(data: &[LabeledSample], cfg: &SvmConfig) -> Result<SvmModel> {
    train_svm_detailed(data, cfg).map(|(m, _)| m)
}

/// [`train_svm`] plus solver diagnostics (per-point multipliers, sweep count,
/// optional objective trace).
pub fn train_svm_detailed(
    data: &[LabeledSample],
    cfg: &SvmConfig,
) -> Result<(SvmModel, TrainDiagnostics)> {
    cfg.validate()?;
    let dim = validate_training_data(data)?;
    let x: Vec<&[f64]> = data.iter().map(|s| s.features.as_slice()).collect();
    let y: Vec<f64> = data.iter().map(|s| s.label.sign()).collect();
    let mut solver = Solver::new(x, y, cfg);
    let (sweeps, converged) = solver.solve(cfg.max_passes);

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (i, &a) in solver.alphas.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(data[i].features.clone());
            alphas.push(a * solver.y[i]);
        }
    }
    let model = SvmModel {
        kernel: cfg.kernel,
        c: cfg.c,
        feature_dim: dim,
        support_vectors,
        alphas,
        bias: solver.bias,
        norm_stats_id: "none".into(),
    };
    let diagnostics = TrainDiagnostics {
        alphas: solver.alphas,
        sweeps,
        converged,
        objective_trace: solver.objective_trace,
    };
    Ok((model, diagnostics))
}

/// Raw decision value Σ αᵢyᵢ·K(svᵢ, x) + b.
pub fn decision_value(model: &SvmModel, features: &[f64]) -> Result<f64> {
    if features.len() != model.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim,
            got: features.len(),
        });
    }
    let mut sum = model.bias;
    for (sv, &a) in model.support_vectors.iter().zip(model.alphas.iter()) {
        sum += a * model.kernel.eval(sv, features);
    }
    Ok(sum)
}

/// Classify a feature vector. A decision value of exactly zero resolves to
/// synthetic, the conservative call for a spoofing detector.
pub fn predict(model: &SvmModel, features: &[f64]) -> Result<Prediction> {
    let decision = decision_value(model, features)?;
    let label = if decision > 0.0 {
        Label::Human
    } else {
        Label::Synthetic
    };
    Ok(Prediction { label, decision })
}

/// Worst KKT violation over a training set, given the per-point multipliers
/// the solver ended with. Zero means every condition holds exactly;
/// training should leave this at or below the configured tolerance.
pub fn max_kkt_violation(
    model: &SvmModel,
    data: &[LabeledSample],
    alphas: &[f64],
) -> Result<f64> {
    if alphas.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: alphas.len(),
        });
    }
    let c = model.c;
    let bound_eps = 1e-9 * c;
    let mut worst: f64 = 0.0;
    for (s, &a) in data.iter().zip(alphas.iter()) {
        let margin = s.label.sign() * decision_value(model, &s.features)?;
        let violation = if a <= bound_eps {
            // α = 0 requires margin ≥ 1
            (1.0 - margin).max(0.0)
        } else if a >= c - bound_eps {
            // α = C requires margin ≤ 1
            (margin - 1.0).max(0.0)
        } else {
            // free vector: margin = 1
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}

/// Confusion counts with human as the positive class. Rows are true labels,
/// columns predicted: tp/fn on the human row, fp/tn on the synthetic row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Human, Label::Human) => self.tp += 1,
            (Label::Human, Label::Synthetic) => self.fn_ += 1,
            (Label::Synthetic, Label::Human) => self.fp += 1,
            (Label::Synthetic, Label::Synthetic) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

/// Headline rates derived from a confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub misclassification_rate: f64,
    pub recall_human: Option<f64>,
    pub recall_synthetic: Option<f64>,
}

/// Accuracy, misclassification rate, and per-class recall.
pub fn report_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyConfusion);
    }
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let humans = cm.tp + cm.fn_;
    let synths = cm.fp + cm.tn;
    Ok(Metrics {
        accuracy,
        misclassification_rate: 1.0 - accuracy,
        recall_human: (humans > 0).then(|| cm.tp as f64 / humans as f64),
        recall_synthetic: (synths > 0).then(|| cm.tn as f64 / synths as f64),
    })
}

/// Result of one held-out-speaker fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldRecord {
    pub held_out_speaker: String,
    /// Speakers the fold trained on; never contains the held-out speaker.
    pub train_speakers: Vec<String>,
    /// Normalization fitted from this fold's training rows only.
    pub norm_stats: NormStats,
    pub predictions: Vec<SamplePrediction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub sample_id: String,
    pub true_label: Label,
    pub predicted: Label,
    pub decision: f64,
}

/// Aggregate LOSO outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LosoOutcome {
    pub confusion: ConfusionMatrix,
    pub folds: Vec<FoldRecord>,
}

/// Leave-one-speaker-out cross-validation over raw (unnormalized) features.
///
/// For every distinct speaker, all of that speaker's samples are held out,
/// normalization statistics and the SVM are fitted on the remainder, and the
/// held-out samples are predicted. Refitting the z-scoring inside each fold
/// keeps the held-out speaker's distribution out of the training pipeline.
pub fn loso_cv(data: &[LabeledSample], cfg: &SvmConfig) -> Result<LosoOutcome> {
    cfg.validate()?;
    validate_training_data(data)?;
    for label in [Label::Human, Label::Synthetic] {
        let speakers: BTreeSet<&str> = data
            .iter()
            .filter(|s| s.label == label)
            .map(|s| s.speaker_id.as_str())
            .collect();
        if speakers.len() < 2 {
            return Err(Error::TooFewSpeakers {
                label: label.to_string(),
                speakers: speakers.len(),
            });
        }
    }
    let speakers: Vec<String> = data
        .iter()
        .map(|s| s.speaker_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let folds: Vec<FoldRecord> = speakers
        .par_iter()
        .enumerate()
        .map(|(fold_idx, held_out)| run_fold(data, cfg, fold_idx, held_out))
        .collect::<Result<_>>()?;

    let mut confusion = ConfusionMatrix::default();
    for fold in &folds {
        for p in &fold.predictions {
            confusion.record(p.true_label, p.predicted);
        }
    }
    Ok(LosoOutcome { confusion, folds })
}

fn run_fold(
    data: &[LabeledSample],
    cfg: &SvmConfig,
    fold_idx: usize,
    held_out: &str,
) -> Result<FoldRecord> {
    let (train, test): (Vec<&LabeledSample>, Vec<&LabeledSample>) =
        data.iter().partition(|s| s.speaker_id != held_out);
    debug_assert!(!test.is_empty());
    let single_class = {
        let first = train.first().map(|s| s.label);
        train.iter().all(|s| Some(s.label) == first)
    };
    if train.is_empty() || single_class {
        return Err(Error::SingleClassFold {
            speaker: held_out.to_string(),
        });
    }

    let rows: Vec<&[f64]> = train.iter().map(|s| s.features.as_slice()).collect();
    let stats = fit_norm_stats_rows(&rows)?;

    let train_scaled: Vec<LabeledSample> = train
        .iter()
        .map(|s| {
            Ok(LabeledSample {
                features: zscore_slice(&s.features, &stats)?,
                ..(*s).clone()
            })
        })
        .collect::<Result<_>>()?;

    let fold_cfg = SvmConfig {
        seed: seed::mix(cfg.seed, fold_idx as u64),
        ..cfg.clone()
    };
    let mut model = train_svm(&train_scaled, &fold_cfg)?;
    model.norm_stats_id = stats.digest_id();

    let mut predictions = Vec::with_capacity(test.len());
    for s in &test {
        let z = zscore_slice(&s.features, &stats)?;
        let p = predict(&model, &z)?;
        predictions.push(SamplePrediction {
            sample_id: s.sample_id.clone(),
            true_label: s.label,
            predicted: p.label,
            decision: p.decision,
        });
    }

    let train_speakers: Vec<String> = train
        .iter()
        .map(|s| s.speaker_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    debug_assert!(!train_speakers.iter().any(|s| s == held_out));

    Ok(FoldRecord {
        held_out_speaker: held_out.to_string(),
        train_speakers,
        norm_stats: stats,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(id: &str, speaker: &str, label: Label, features: &[f64]) -> LabeledSample {
        LabeledSample {
            sample_id: id.into(),
            speaker_id: speaker.into(),
            label,
            features: features.to_vec(),
        }
    }

    fn linear_toy() -> Vec<LabeledSample> {
        vec![
            sample("a0", "s0", Label::Human, &[0.0, 0.0]),
            sample("a1", "s0", Label::Human, &[0.3, 0.1]),
            sample("a2", "s1", Label::Human, &[0.1, 0.4]),
            sample("b0", "s2", Label::Synthetic, &[2.0, 2.0]),
            sample("b1", "s2", Label::Synthetic, &[1.8, 2.1]),
            sample("b2", "s3", Label::Synthetic, &[2.2, 1.7]),
        ]
    }

    fn xor_set() -> Vec<LabeledSample> {
        vec![
            sample("x0", "s0", Label::Human, &[0.0, 0.0]),
            sample("x1", "s1", Label::Human, &[1.0, 1.0]),
            sample("x2", "s2", Label::Synthetic, &[0.0, 1.0]),
            sample("x3", "s3", Label::Synthetic, &[1.0, 0.0]),
        ]
    }

    fn training_error(model: &SvmModel, data: &[LabeledSample]) -> usize {
        data.iter()
            .filter(|s| predict(model, &s.features).unwrap().label != s.label)
            .count()
    }

    #[test]
    fn linearly_separable_toy_reaches_zero_training_error() {
        let data = linear_toy();
        let cfg = SvmConfig {
            kernel: KernelKind::Linear,
            c: 10.0,
            ..SvmConfig::default()
        };
        let model = train_svm(&data, &cfg).unwrap();
        assert_eq!(training_error(&model, &data), 0);
    }

    #[test]
    fn xor_needs_the_quadratic_kernel() {
        let data = xor_set();
        let quad_cfg = SvmConfig {
            kernel: KernelKind::quadratic(),
            c: 10.0,
            ..SvmConfig::default()
        };
        let model = train_svm(&data, &quad_cfg).unwrap();
        assert_eq!(training_error(&model, &data), 0, "QSVM must solve XOR");
        // Enumerated decision values: positive on the human corners,
        // negative on the synthetic ones.
        for s in &data {
            let d = decision_value(&model, &s.features).unwrap();
            assert!(d * s.label.sign() > 0.0, "{}: {d}", s.sample_id);
        }

        let lin_cfg = SvmConfig {
            kernel: KernelKind::Linear,
            c: 10.0,
            ..SvmConfig::default()
        };
        let lin_model = train_svm(&data, &lin_cfg).unwrap();
        assert!(
            training_error(&lin_model, &data) > 0,
            "a linear kernel cannot separate XOR"
        );
    }

    #[test]
    fn duplicated_training_points_leave_grid_predictions_unchanged() {
        let data = linear_toy();
        let mut doubled = data.clone();
        for s in &data {
            let mut dup = s.clone();
            dup.sample_id = format!("{}-dup", s.sample_id);
            doubled.push(dup);
        }
        let cfg = SvmConfig {
            kernel: KernelKind::Linear,
            c: 5.0,
            // Tight tolerance so both runs land on the same optimum; grid
            // points sit well away from the boundary relative to it.
            tol: 1e-6,
            ..SvmConfig::default()
        };
        let m1 = train_svm(&data, &cfg).unwrap();
        let m2 = train_svm(&doubled, &cfg).unwrap();
        // Incommensurate grid steps keep every point off the exact boundary.
        for gx in 0..10 {
            for gy in 0..10 {
                let p = [gx as f64 * 0.31 - 0.437, gy as f64 * 0.29 - 0.351];
                assert_eq!(
                    predict(&m1, &p).unwrap().label,
                    predict(&m2, &p).unwrap().label,
                    "grid point {p:?}"
                );
            }
        }
    }

    #[test]
    fn predicting_training_points_of_separable_set_reproduces_labels() {
        let data = linear_toy();
        let cfg = SvmConfig {
            kernel: KernelKind::Linear,
            c: 10.0,
            ..SvmConfig::default()
        };
        let model = train_svm(&data, &cfg).unwrap();
        for s in &data {
            assert_eq!(predict(&model, &s.features).unwrap().label, s.label);
        }
    }

    #[test]
    fn decision_value_is_antisymmetric_under_label_swap() {
        let data = linear_toy();
        let cfg = SvmConfig {
            kernel: KernelKind::quadratic(),
            c: 3.0,
            ..SvmConfig::default()
        };
        let mut model = train_svm(&data, &cfg).unwrap();
        let probe = [0.7, 0.9];
        let d = decision_value(&model, &probe).unwrap();
        for a in model.alphas.iter_mut() {
            *a = -*a;
        }
        model.bias = -model.bias;
        let flipped = decision_value(&model, &probe).unwrap();
        assert_abs_diff_eq!(d, -flipped, epsilon = 1e-12);
    }

    #[test]
    fn decision_matches_brute_force_kernel_sum() {
        // Hand-built five-support-vector model.
        let model = SvmModel {
            kernel: KernelKind::quadratic(),
            c: 1.0,
            feature_dim: 3,
            support_vectors: vec![
                vec![0.1, -0.2, 0.3],
                vec![1.0, 0.5, -0.5],
                vec![-0.4, 0.8, 0.2],
                vec![0.9, -0.9, 0.1],
                vec![0.0, 0.3, -0.7],
            ],
            alphas: vec![0.4, -0.2, 0.7, -0.5, 0.1],
            bias: -0.23,
            norm_stats_id: "none".into(),
        };
        let x = [0.25, -0.5, 0.75];
        let mut expect = -0.23;
        for (sv, a) in model.support_vectors.iter().zip(model.alphas.iter()) {
            let dot: f64 = sv.iter().zip(x.iter()).map(|(u, v)| u * v).sum();
            expect += a * (dot + 1.0) * (dot + 1.0);
        }
        assert_abs_diff_eq!(decision_value(&model, &x).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let data = linear_toy();
        let model = train_svm(&data, &SvmConfig::default()).unwrap();
        assert!(matches!(
            predict(&model, &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn single_class_data_is_rejected() {
        let data = vec![
            sample("a", "s0", Label::Human, &[0.0]),
            sample("b", "s1", Label::Human, &[1.0]),
        ];
        assert!(matches!(
            train_svm(&data, &SvmConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn kkt_conditions_hold_after_training() {
        let data = xor_set();
        let cfg = SvmConfig {
            kernel: KernelKind::quadratic(),
            c: 10.0,
            track_objective: true,
            ..SvmConfig::default()
        };
        let (model, diag) = train_svm_detailed(&data, &cfg).unwrap();
        assert!(diag.converged);
        let worst = max_kkt_violation(&model, &data, &diag.alphas).unwrap();
        assert!(worst <= cfg.tol + 1e-9, "violation {worst}");
        // |signed alphas| are bounded by C.
        assert!(model.alphas.iter().all(|a| a.abs() <= cfg.c + 1e-12));
        // Tracked dual objective never decreased.
        for w in diag.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn metrics_from_reference_confusion_matrix() {
        let cm = ConfusionMatrix {
            tp: 181,
            fn_: 19,
            fp: 15,
            tn: 185,
        };
        let m = report_metrics(&cm).unwrap();
        assert_abs_diff_eq!(m.accuracy, 0.915, epsilon = 1e-12);
        assert_abs_diff_eq!(m.misclassification_rate, 0.085, epsilon = 1e-12);
        assert_abs_diff_eq!(m.recall_human.unwrap(), 181.0 / 200.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.recall_synthetic.unwrap(), 185.0 / 200.0, epsilon = 1e-12);

        let perfect = ConfusionMatrix {
            tp: 7,
            fn_: 0,
            fp: 0,
            tn: 5,
        };
        assert_eq!(report_metrics(&perfect).unwrap().accuracy, 1.0);

        let half = ConfusionMatrix {
            tp: 1,
            fn_: 1,
            fp: 1,
            tn: 1,
        };
        assert_eq!(report_metrics(&half).unwrap().accuracy, 0.5);

        assert!(matches!(
            report_metrics(&ConfusionMatrix::default()),
            Err(Error::EmptyConfusion)
        ));
    }

    fn loso_corpus() -> Vec<LabeledSample> {
        // Constant features per class with per-speaker jitter: zero overlap.
        let mut data = Vec::new();
        for spk in 0..4 {
            for utt in 0..3 {
                let dx = spk as f64 * 0.01 + utt as f64 * 0.001;
                data.push(sample(
                    &format!("h-{spk}-{utt}"),
                    &format!("hs{spk}"),
                    Label::Human,
                    &[0.1 + dx, 0.2],
                ));
                data.push(sample(
                    &format!("s-{spk}-{utt}"),
                    &format!("ss{spk}"),
                    Label::Synthetic,
                    &[5.0 + dx, 4.0],
                ));
            }
        }
        data
    }

    #[test]
    fn loso_on_disjoint_classes_is_perfect() {
        let data = loso_corpus();
        let outcome = loso_cv(&data, &SvmConfig::default()).unwrap();
        let metrics = report_metrics(&outcome.confusion).unwrap();
        assert_eq!(metrics.accuracy, 1.0);
    }

    #[test]
    fn loso_folds_partition_the_data_and_never_leak_the_speaker() {
        let data = loso_corpus();
        let outcome = loso_cv(&data, &SvmConfig::default()).unwrap();
        assert_eq!(outcome.folds.len(), 8); // 4 human + 4 synthetic speakers
        let evaluated: usize = outcome.folds.iter().map(|f| f.predictions.len()).sum();
        assert_eq!(evaluated, data.len());
        assert_eq!(outcome.confusion.total(), data.len());
        for fold in &outcome.folds {
            assert!(!fold.train_speakers.contains(&fold.held_out_speaker));
            for p in &fold.predictions {
                let s = data.iter().find(|s| s.sample_id == p.sample_id).unwrap();
                assert_eq!(s.speaker_id, fold.held_out_speaker);
            }
            // Leakage guard: the recorded stats equal stats refit from the
            // training rows alone.
            let train_rows: Vec<&[f64]> = data
                .iter()
                .filter(|s| s.speaker_id != fold.held_out_speaker)
                .map(|s| s.features.as_slice())
                .collect();
            let refit = fit_norm_stats_rows(&train_rows).unwrap();
            assert_eq!(refit, fold.norm_stats);
        }
    }

    #[test]
    fn loso_requires_two_speakers_per_class() {
        let mut data = loso_corpus();
        data.retain(|s| s.label == Label::Human || s.speaker_id == "ss0");
        assert!(matches!(
            loso_cv(&data, &SvmConfig::default()),
            Err(Error::TooFewSpeakers { .. })
        ));
    }

    #[test]
    fn model_file_round_trips_as_json() {
        let data = linear_toy();
        let model = train_svm(&data, &SvmConfig::default()).unwrap();
        let file = SvmModelFile::from_model(&model);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back: SvmModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_model(), model);
        assert!(json.contains("\"version\": 1"));
        assert!(json.contains("\"type\": \"polynomial\""));
    }
}
