//! Shared domain types: image batches, labels, logits, keys, attack
//! configuration, and the binary confusion matrix.

use ndarray::{Array1, Array2, Array4, ArrayD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A batch of images in pixel space, shape `(n, h, w, c)`, every value in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch {
    data: Array4<f64>,
}

impl ImageBatch {
    /// Builds a batch, enforcing the pixel-range and dimension invariants.
    pub fn new(data: Array4<f64>) -> Result<Self> {
        let (n, h, w, c) = data.dim();
        if n < 1 || h == 0 || w == 0 || c == 0 {
            return Err(Error::Shape(format!(
                "image batch dims must be positive, got ({n}, {h}, {w}, {c})"
            )));
        }
        for &v in data.iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range(format!(
                    "pixel value {v} outside [0,1]"
                )));
            }
        }
        Ok(Self { data })
    }

    /// Builds a batch from a dynamic-rank array, rejecting rank ≠ 4.
    pub fn from_dyn(data: ArrayD<f64>) -> Result<Self> {
        if data.ndim() != 4 {
            return Err(Error::Shape(format!(
                "image batch must be rank 4, got rank {}",
                data.ndim()
            )));
        }
        let fixed = data
            .into_dimensionality::<ndarray::Ix4>()
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(fixed)
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array4<f64> {
        self.data
    }

    /// Number of images in the batch.
    pub fn len(&self) -> usize {
        self.data.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(height, width, channels)` of each image.
    pub fn image_dims(&self) -> (usize, usize, usize) {
        let (_, h, w, c) = self.data.dim();
        (h, w, c)
    }

    /// Selects the rows at `indices` into a new batch.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        for &i in indices {
            if i >= n {
                return Err(Error::Size(format!("index {i} out of range for batch of {n}")));
            }
        }
        if indices.is_empty() {
            let (_, h, w, c) = self.data.dim();
            return Ok(Self {
                data: Array4::zeros((0, h, w, c)),
            });
        }
        Ok(Self {
            data: self.data.select(ndarray::Axis(0), indices),
        })
    }
}

/// Validates an image batch against its invariants and returns it unchanged.
///
/// Idempotent: a batch that passes once passes again.
pub fn validate_batch(images: ImageBatch) -> Result<ImageBatch> {
    ImageBatch::new(images.into_data())
}

/// Integer class labels for a paired [`ImageBatch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelBatch {
    labels: Array1<usize>,
    num_classes: usize,
}

impl LabelBatch {
    pub fn new(labels: Array1<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        for &y in labels.iter() {
            if y >= num_classes {
                return Err(Error::Range(format!(
                    "label {y} outside [0, {num_classes})"
                )));
            }
        }
        Ok(Self { labels, num_classes })
    }

    pub fn labels(&self) -> &Array1<usize> {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        for &i in indices {
            if i >= n {
                return Err(Error::Size(format!("index {i} out of range for labels of {n}")));
            }
        }
        let picked = indices.iter().map(|&i| self.labels[i]).collect::<Array1<_>>();
        Ok(Self {
            labels: picked,
            num_classes: self.num_classes,
        })
    }
}

/// Pre-softmax classifier outputs, shape `(n, num_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitBatch {
    values: Array2<f64>,
}

impl LogitBatch {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("logits contain NaN or Inf".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Per-row argmax.
    pub fn predictions(&self) -> Vec<usize> {
        self.values
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// Secret key for the block-wise pixel permutation: a 64-bit seed `K`
/// plus the block size `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationKey {
    pub seed: u64,
    pub block_size: usize,
}

impl PermutationKey {
    pub fn new(seed: u64, block_size: usize) -> Result<Self> {
        if block_size < 1 {
            return Err(Error::Config("block_size must be >= 1".into()));
        }
        Ok(Self { seed, block_size })
    }

    /// Checks that the block size divides the image height and width.
    pub fn check_divides(&self, h: usize, w: usize) -> Result<()> {
        if h % self.block_size != 0 || w % self.block_size != 0 {
            return Err(Error::Shape(format!(
                "block size {} does not divide image dims {}x{}",
                self.block_size, h, w
            )));
        }
        Ok(())
    }
}

/// Attack family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AttackFamily {
    Fgsm,
    Pgd,
    Jsma,
    Cw,
}

impl AttackFamily {
    pub fn name(&self) -> &'static str {
        match self {
            AttackFamily::Fgsm => "FGSM",
            AttackFamily::Pgd => "PGD",
            AttackFamily::Jsma => "JSMA",
            AttackFamily::Cw => "CW",
        }
    }

    pub const ALL: [AttackFamily; 4] = [
        AttackFamily::Fgsm,
        AttackFamily::Pgd,
        AttackFamily::Jsma,
        AttackFamily::Cw,
    ];
}

impl std::fmt::Display for AttackFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How a targeted attack picks its target class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE", tag = "rule", content = "class")]
pub enum TargetRule {
    Untargeted,
    /// Target = (true label + 1) mod num_classes.
    NextClass,
    /// A fixed target class for every sample.
    Fixed(usize),
}

/// Optimizer settings for the L2 attack's inner minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwOptConfig {
    pub lr: f64,
    pub iters: usize,
    pub initial_c: f64,
    pub binary_search_steps: usize,
}

impl Default for CwOptConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            iters: 100,
            initial_c: 1e-2,
            binary_search_steps: 5,
        }
    }
}

/// Attack family plus its parameters. Fields irrelevant to the chosen
/// family are ignored by the attack engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub family: AttackFamily,
    /// L∞ budget in [0,1] pixel units (FGSM, PGD).
    pub epsilon: f64,
    /// PGD step size.
    pub alpha: f64,
    /// PGD iteration count.
    pub steps: usize,
    /// PGD uniform random start inside the ε-ball.
    pub random_start: bool,
    /// CW confidence margin C.
    pub confidence: f64,
    /// JSMA per-pixel perturbation magnitude θ.
    pub theta_mag: f64,
    /// JSMA budget: maximum fraction of pixels perturbed, γ ∈ [0,1].
    pub gamma: f64,
    pub target_rule: TargetRule,
    pub cw_opt: CwOptConfig,
}

impl AttackConfig {
    /// Paper-parameter defaults for each family: ε = 8/255 (FGSM, PGD),
    /// α = 2/255 and 10 steps for PGD, C = 0 for CW, θ = 1.0 and γ = 0.1
    /// for JSMA. FGSM/PGD default untargeted, JSMA/CW target the next class.
    pub fn for_family(family: AttackFamily) -> Self {
        let target_rule = match family {
            AttackFamily::Fgsm | AttackFamily::Pgd => TargetRule::Untargeted,
            AttackFamily::Jsma | AttackFamily::Cw => TargetRule::NextClass,
        };
        Self {
            family,
            epsilon: 8.0 / 255.0,
            alpha: 2.0 / 255.0,
            steps: 10,
            random_start: true,
            confidence: 0.0,
            theta_mag: 1.0,
            gamma: 0.1,
            target_rule,
            cw_opt: CwOptConfig::default(),
        }
    }

    /// Validates the parameters relevant to the configured family.
    pub fn validate(&self) -> Result<()> {
        match self.family {
            AttackFamily::Fgsm => {
                if self.epsilon < 0.0 {
                    return Err(Error::Config("epsilon must be >= 0".into()));
                }
            }
            AttackFamily::Pgd => {
                if self.epsilon < 0.0 {
                    return Err(Error::Config("epsilon must be >= 0".into()));
                }
                if self.alpha <= 0.0 {
                    return Err(Error::Config("alpha must be > 0".into()));
                }
                if self.steps < 1 {
                    return Err(Error::Config("steps must be >= 1".into()));
                }
            }
            AttackFamily::Jsma => {
                if !(0.0..=1.0).contains(&self.gamma) {
                    return Err(Error::Range(format!(
                        "gamma {} outside [0,1]",
                        self.gamma
                    )));
                }
            }
            AttackFamily::Cw => {
                if self.confidence < 0.0 {
                    return Err(Error::Config("confidence must be >= 0".into()));
                }
                if self.cw_opt.iters == 0 {
                    return Err(Error::Config("cw iters must be positive".into()));
                }
                if self.cw_opt.lr <= 0.0 {
                    return Err(Error::Config("cw lr must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Binary confusion-matrix counts; positive class = adversarial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{ArrayD, IxDyn};

    #[test]
    fn validate_batch_accepts_all_zeros() {
        let batch = ImageBatch::new(Array4::zeros((4, 8, 8, 3))).unwrap();
        let out = validate_batch(batch.clone()).unwrap();
        assert_eq!(out, batch);
    }

    #[test]
    fn validate_batch_rejects_out_of_range() {
        let mut data = Array4::zeros((1, 2, 2, 1));
        data[[0, 1, 1, 0]] = 1.5;
        match ImageBatch::new(data) {
            Err(Error::Range(_)) => {}
            other => panic!("expected RangeError, got {other:?}"),
        }
    }

    #[test]
    fn validate_batch_rejects_rank_3() {
        let data = ArrayD::zeros(IxDyn(&[4, 8, 8]));
        match ImageBatch::from_dyn(data) {
            Err(Error::Shape(_)) => {}
            other => panic!("expected ShapeError, got {other:?}"),
        }
    }

    #[test]
    fn validate_batch_is_idempotent() {
        let batch = ImageBatch::new(Array4::from_elem((2, 4, 4, 3), 0.25)).unwrap();
        let once = validate_batch(batch).unwrap();
        let twice = validate_batch(once.clone()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn labels_reject_out_of_range() {
        let labels = Array1::from(vec![0usize, 9, 10]);
        assert!(LabelBatch::new(labels, 10).is_err());
    }

    #[test]
    fn logits_reject_non_finite() {
        let mut v = Array2::zeros((1, 3));
        v[[0, 2]] = f64::NAN;
        assert!(LogitBatch::new(v).is_err());
    }

    #[test]
    fn predictions_take_argmax() {
        let v = Array2::from_shape_vec((2, 3), vec![0.1, 2.0, -1.0, 5.0, 4.0, 4.5]).unwrap();
        let logits = LogitBatch::new(v).unwrap();
        assert_eq!(logits.predictions(), vec![1, 0]);
    }

    #[test]
    fn key_divides_check() {
        let key = PermutationKey::new(7, 4).unwrap();
        assert!(key.check_divides(32, 32).is_ok());
        assert!(key.check_divides(30, 32).is_err());
    }

    #[test]
    fn attack_config_defaults_follow_paper_params() {
        let cfg = AttackConfig::for_family(AttackFamily::Pgd);
        assert!((cfg.epsilon - 8.0 / 255.0).abs() < 1e-15);
        assert!((cfg.alpha - 2.0 / 255.0).abs() < 1e-15);
        assert_eq!(cfg.steps, 10);
        let cw = AttackConfig::for_family(AttackFamily::Cw);
        assert_eq!(cw.confidence, 0.0);
        assert_eq!(cw.target_rule, TargetRule::NextClass);
        let jsma = AttackConfig::for_family(AttackFamily::Jsma);
        assert_eq!(jsma.theta_mag, 1.0);
        assert_eq!(jsma.gamma, 0.1);
    }

    #[test]
    fn attack_config_validation_catches_bad_gamma() {
        let mut cfg = AttackConfig::for_family(AttackFamily::Jsma);
        cfg.gamma = 1.5;
        assert!(cfg.validate().is_err());
    }
}
