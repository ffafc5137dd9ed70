use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OutputKind, DEFAULT_TABLE_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Averaged context words predict the target word.
    Cbow,
    /// The target word predicts each context word.
    Sg,
    /// Averaged context words plus the target's annotations predict the target.
    Aawp,
    /// The target word predicts each context word and each of its annotations.
    Jwap,
    /// Paragraph vector, distributed memory.
    Dm,
    /// Paragraph vector, distributed bag of words.
    Dbow,
    /// Skip-gram with domain-vocabulary-dependent objectives.
    Dis2vec,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Cbow,
        Mode::Sg,
        Mode::Aawp,
        Mode::Jwap,
        Mode::Dm,
        Mode::Dbow,
        Mode::Dis2vec,
    ];

    pub fn uses_annotations(self) -> bool {
        matches!(self, Mode::Aawp | Mode::Jwap)
    }

    /// Whether annotations are prediction targets, i.e. leaves of the output layer.
    pub fn predicts_annotations(self) -> bool {
        self == Mode::Jwap
    }

    pub fn uses_documents(self) -> bool {
        matches!(self, Mode::Dm | Mode::Dbow)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Cbow => "cbow",
            Mode::Sg => "sg",
            Mode::Aawp => "aawp",
            Mode::Jwap => "jwap",
            Mode::Dm => "dm",
            Mode::Dbow => "dbow",
            Mode::Dis2vec => "dis2vec",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dis2VecParams {
    /// Probability that a negative for an in-domain pair comes from the
    /// out-of-domain context distribution.
    pub pi_s: f64,
    /// Probability that a mixed pair uses the dissimilarity objective.
    pub pi_o: f64,
    /// Smoothing exponent of the context distributions.
    pub alpha: f64,
}

impl Default for Dis2VecParams {
    fn default() -> Self {
        Dis2VecParams {
            pi_s: 0.5,
            pi_o: 0.5,
            alpha: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub output: OutputKind,
    pub dim: usize,
    /// Maximum context offset on each side.
    pub window: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub min_lr: f64,
    /// Noise draws per positive example under negative sampling.
    pub negatives: usize,
    pub seed: u64,
    pub workers: usize,
    /// Frequent-word subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
    pub dis2vec: Dis2VecParams,
    /// Sampled target words per position in DBOW.
    pub dbow_samples: usize,
    pub table_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Jwap,
            output: OutputKind::Hs,
            dim: 100,
            window: 5,
            epochs: 5,
            lr0: 0.025,
            min_lr: 0.025 * 1e-4,
            negatives: 5,
            seed: 1,
            workers: 1,
            subsample: None,
            dis2vec: Dis2VecParams::default(),
            dbow_samples: 1,
            table_size: DEFAULT_TABLE_SIZE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Invalid(m.to_owned()));
        if self.dim == 0 {
            return fail("dimension must be at least 1");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if !(self.lr0 > self.min_lr && self.min_lr >= 0.0) {
            return fail("learning rates must satisfy lr0 > min_lr >= 0");
        }
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        if self.output == OutputKind::Ns && self.negatives == 0 {
            return fail("negative sampling needs at least one negative");
        }
        if self.mode == Mode::Dis2vec && self.output != OutputKind::Ns {
            return fail("dis2vec requires negative sampling (--output-layer ns)");
        }
        if let Some(t) = self.subsample {
            if t.is_nan() || t <= 0.0 {
                return fail("subsampling threshold must be positive");
            }
        }
        let p = self.dis2vec;
        if !(0.0..=1.0).contains(&p.pi_s)
            || !(0.0..=1.0).contains(&p.pi_o)
            || p.alpha.is_nan()
            || p.alpha <= 0.0
        {
            return fail("dis2vec parameters must satisfy 0 <= pi_s, pi_o <= 1 and alpha > 0");
        }
        if self.mode == Mode::Dbow && self.dbow_samples == 0 {
            return fail("dbow needs at least one sample per position");
        }
        if self.table_size == 0 {
            return fail("negative table size must be positive");
        }
        Ok(())
    }
}

/// Linear decay: `max(min_lr, lr0 * (1 - done / total))`.
#[inline]
pub fn learning_rate(lr0: f64, min_lr: f64, done: u64, total: u64) -> f64 {
    if total == 0 {
        return lr0;
    }
    (lr0 * (1.0 - done as f64 / total as f64)).max(min_lr)
}
