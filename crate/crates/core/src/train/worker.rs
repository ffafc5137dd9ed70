use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{learning_rate, Mode, TrainConfig};
use crate::corpus::subsample_keep_probability;
use crate::knowledge::TokenAnnotations;
use crate::model::output::{draw_negatives, logistic_update, ns_update_with};
use crate::model::{hs_update, EmbeddingModel, NegativeTable, OutputLayer};

/// A target position and the context words inside its (reduced) window.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainingWindow {
    pub target: u32,
    pub contexts: Vec<u32>,
}

impl TrainingWindow {
    pub fn new(target: u32, contexts: impl Into<Vec<u32>>) -> Self {
        TrainingWindow {
            target,
            contexts: contexts.into(),
        }
    }

    /// Fill with the neighbours of `pos` at offsets `-reach..=reach`, clipped
    /// to the document.
    pub fn fill(&mut self, doc: &[u32], pos: usize, reach: usize) {
        self.target = doc[pos];
        self.contexts.clear();
        let lo = pos.saturating_sub(reach);
        let hi = (pos + reach).min(doc.len() - 1);
        self.contexts.extend_from_slice(&doc[lo..pos]);
        self.contexts.extend_from_slice(&doc[pos + 1..=hi]);
    }
}

/// Dis2Vec pair categories by domain-vocabulary membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCategory {
    /// Both words in the domain vocabulary.
    InDomain,
    /// Neither word in the domain vocabulary.
    OutOfDomain,
    /// Exactly one of the two in the domain vocabulary.
    Mixed,
}

pub fn classify_pair(word_in_domain: bool, context_in_domain: bool) -> PairCategory {
    match (word_in_domain, context_in_domain) {
        (true, true) => PairCategory::InDomain,
        (false, false) => PairCategory::OutOfDomain,
        _ => PairCategory::Mixed,
    }
}

/// Noise distributions for negative sampling.
#[derive(Debug, Clone, Default)]
pub struct NoiseTables {
    /// Over every output leaf.
    pub global: NegativeTable,
    /// Dis2Vec: in-domain words only.
    pub in_domain: NegativeTable,
    /// Dis2Vec: words outside the domain vocabulary.
    pub out_of_domain: NegativeTable,
}

/// Per-thread training state: its own RNG and scratch buffers over a shared model.
pub struct Worker<'a> {
    pub(super) model: &'a EmbeddingModel,
    pub(super) annotations: &'a TokenAnnotations,
    pub(super) tables: &'a NoiseTables,
    pub(super) config: &'a TrainConfig,
    pub(super) in_domain: &'a [bool],
    pub(super) word_counts: &'a [u64],
    total_words: u64,
    pub(super) rng: ChaCha8Rng,
    h: Vec<f64>,
    grad: Vec<f64>,
    negatives: Vec<u32>,
    window: TrainingWindow,
    kept: Vec<u32>,
    /// When set, every negative-sample set drawn is appended here.
    pub trace: Option<Vec<Vec<u32>>>,
    warned_empty_pool: bool,
}

impl<'a> Worker<'a> {
    pub(super) fn new(
        model: &'a EmbeddingModel,
        annotations: &'a TokenAnnotations,
        tables: &'a NoiseTables,
        config: &'a TrainConfig,
        in_domain: &'a [bool],
        word_counts: &'a [u64],
        rng: ChaCha8Rng,
    ) -> Self {
        let d = model.dim;
        Worker {
            model,
            annotations,
            tables,
            config,
            in_domain,
            word_counts,
            total_words: word_counts.iter().sum(),
            rng,
            h: vec![0.0; d],
            grad: vec![0.0; d],
            negatives: Vec::with_capacity(config.negatives),
            window: TrainingWindow::default(),
            kept: Vec::new(),
            trace: None,
            warned_empty_pool: false,
        }
    }

    fn num_words(&self) -> u32 {
        self.model.words.rows() as u32
    }

    /// One output-layer update predicting `leaf` from `h`; accumulates into `grad`.
    fn predict(&mut self, h: &[f64], leaf: u32, lr: f64, grad: &mut [f64]) -> f64 {
        match &self.model.output {
            OutputLayer::Hierarchical { tree, nodes } => {
                hs_update(h, leaf as usize, lr, tree, nodes, grad)
            }
            OutputLayer::Negative { vectors } => {
                draw_negatives(
                    leaf,
                    self.config.negatives,
                    &self.tables.global,
                    &mut self.rng,
                    &mut self.negatives,
                );
                if let Some(trace) = &mut self.trace {
                    trace.push(self.negatives.clone());
                }
                ns_update_with(h, leaf, &self.negatives, lr, vectors, grad)
            }
        }
    }

    /// Average of the given input rows predicts `target`; the input gradient
    /// is shared equally by every contributing row.
    fn averaged_step(
        &mut self,
        target: u32,
        contexts: &[u32],
        annotations: &[u32],
        doc: Option<usize>,
        lr: f64,
    ) {
        let n = contexts.len() + annotations.len() + doc.is_some() as usize;
        if n == 0 {
            return;
        }
        let model = self.model;
        let mut h = std::mem::take(&mut self.h);
        let mut grad = std::mem::take(&mut self.grad);
        h.fill(0.0);
        grad.fill(0.0);
        for &c in contexts {
            model.words.accumulate_row(c as usize, &mut h);
        }
        for &a in annotations {
            model.annotations.accumulate_row(a as usize, &mut h);
        }
        if let Some(d) = doc {
            model.documents.accumulate_row(d, &mut h);
        }
        let inv = 1.0 / n as f64;
        h.iter_mut().for_each(|x| *x *= inv);

        self.predict(&h, target, lr, &mut grad);

        let scale = lr * inv;
        for &c in contexts {
            model.words.add_to_row(c as usize, scale, &grad);
        }
        for &a in annotations {
            model.annotations.add_to_row(a as usize, scale, &grad);
        }
        if let Some(d) = doc {
            model.documents.add_to_row(d, scale, &grad);
        }
        self.h = h;
        self.grad = grad;
    }

    /// `h = Q_w[target]` predicts each context word, and with `with_annotations`
    /// each annotation of each context word as well; then each annotation
    /// vector of a context word predicts that word.
    fn skipgram_step(&mut self, window: &TrainingWindow, with_annotations: bool, lr: f64) {
        let model = self.model;
        let annotations = self.annotations;
        let mut h = std::mem::take(&mut self.h);
        let mut grad = std::mem::take(&mut self.grad);
        model.words.read_row(window.target as usize, &mut h);
        grad.fill(0.0);
        let offset = self.num_words();
        for &c in &window.contexts {
            self.predict(&h, c, lr, &mut grad);
            if with_annotations {
                for &a in annotations.of(c) {
                    self.predict(&h, offset + a, lr, &mut grad);
                }
            }
        }
        model.words.add_to_row(window.target as usize, lr, &grad);

        if with_annotations {
            for &c in &window.contexts {
                for &a in annotations.of(c) {
                    model.annotations.read_row(a as usize, &mut h);
                    grad.fill(0.0);
                    self.predict(&h, c, lr, &mut grad);
                    model.annotations.add_to_row(a as usize, lr, &grad);
                }
            }
        }
        self.h = h;
        self.grad = grad;
    }

    pub fn cbow_step(&mut self, window: &TrainingWindow, lr: f64) {
        self.averaged_step(window.target, &window.contexts, &[], None, lr);
    }

    pub fn aawp_step(&mut self, window: &TrainingWindow, lr: f64) {
        let annotations = self.annotations.of(window.target);
        self.averaged_step(window.target, &window.contexts, annotations, None, lr);
    }

    pub fn sg_step(&mut self, window: &TrainingWindow, lr: f64) {
        self.skipgram_step(window, false, lr);
    }

    pub fn jwap_step(&mut self, window: &TrainingWindow, lr: f64) {
        self.skipgram_step(window, true, lr);
    }

    pub fn dm_step(&mut self, window: &TrainingWindow, doc: usize, lr: f64) {
        self.averaged_step(window.target, &window.contexts, &[], Some(doc), lr);
    }

    /// The document vector predicts `dbow_samples` words drawn uniformly from `tokens`.
    pub fn dbow_step(&mut self, tokens: &[u32], doc: usize, lr: f64) {
        if tokens.is_empty() {
            return;
        }
        let model = self.model;
        let mut h = std::mem::take(&mut self.h);
        let mut grad = std::mem::take(&mut self.grad);
        for _ in 0..self.config.dbow_samples {
            let target = tokens[self.rng.random_range(0..tokens.len())];
            model.documents.read_row(doc, &mut h);
            grad.fill(0.0);
            self.predict(&h, target, lr, &mut grad);
            model.documents.add_to_row(doc, lr, &grad);
        }
        self.h = h;
        self.grad = grad;
    }

    fn domain_negative(&mut self, exclude: u32) -> Option<u32> {
        let x: f64 = self.rng.random();
        let pool = if x < self.config.dis2vec.pi_s {
            &self.tables.out_of_domain
        } else {
            &self.tables.in_domain
        };
        match pool.sample_excluding(exclude, &mut self.rng) {
            Some(n) => Some(n),
            None => {
                if !self.warned_empty_pool {
                    log::warn!(
                        "dis2vec context pool is empty; falling back to the global noise table"
                    );
                    self.warned_empty_pool = true;
                }
                self.tables.global.sample_excluding(exclude, &mut self.rng)
            }
        }
    }

    /// Skip-gram pairs `(target, context)` scored by the objective of their
    /// domain-vocabulary category.
    pub fn dis2vec_step(&mut self, window: &TrainingWindow, lr: f64) {
        let OutputLayer::Negative { vectors } = &self.model.output else {
            panic!("dis2vec requires a negative-sampling output layer");
        };
        let model = self.model;
        let mut h = std::mem::take(&mut self.h);
        let mut grad = std::mem::take(&mut self.grad);
        model.words.read_row(window.target as usize, &mut h);
        grad.fill(0.0);
        let w_in = self
            .in_domain
            .get(window.target as usize)
            .copied()
            .unwrap_or(false);
        for &c in &window.contexts {
            let c_in = self.in_domain.get(c as usize).copied().unwrap_or(false);
            match classify_pair(w_in, c_in) {
                PairCategory::OutOfDomain => {
                    self.predict(&h, c, lr, &mut grad);
                }
                PairCategory::InDomain => {
                    let mut drawn = std::mem::take(&mut self.negatives);
                    drawn.clear();
                    for _ in 0..self.config.negatives {
                        if let Some(n) = self.domain_negative(c) {
                            drawn.push(n);
                        }
                    }
                    if let Some(trace) = &mut self.trace {
                        trace.push(drawn.clone());
                    }
                    ns_update_with(&h, c, &drawn, lr, vectors, &mut grad);
                    self.negatives = drawn;
                }
                PairCategory::Mixed => {
                    let z: f64 = self.rng.random();
                    let similar = z >= self.config.dis2vec.pi_o;
                    logistic_update(&h, c as usize, similar, lr, vectors, &mut grad);
                }
            }
        }
        model.words.add_to_row(window.target as usize, lr, &grad);
        self.h = h;
        self.grad = grad;
    }

    /// Run every position of one document, advancing the shared progress counter.
    pub fn train_document(&mut self, doc_id: usize, doc: &[u32], progress: &AtomicU64, total: u64) {
        let config = self.config;
        let mut kept = std::mem::take(&mut self.kept);
        kept.clear();
        match config.subsample {
            None => kept.extend_from_slice(doc),
            Some(t) => {
                let counts = self.word_counts;
                let total_words = self.total_words;
                for &w in doc {
                    let p = subsample_keep_probability(counts[w as usize], total_words, Some(t));
                    if p >= 1.0 || self.rng.random::<f64>() < p {
                        kept.push(w);
                    }
                }
                progress.fetch_add((doc.len() - kept.len()) as u64, Ordering::Relaxed);
            }
        }

        let mut window = std::mem::take(&mut self.window);
        for pos in 0..kept.len() {
            let done = progress.fetch_add(1, Ordering::Relaxed);
            let lr = learning_rate(config.lr0, config.min_lr, done, total);
            if config.mode == Mode::Dbow {
                self.dbow_step(&kept, doc_id, lr);
                continue;
            }
            let reach = self.rng.random_range(1..=config.window);
            window.fill(&kept, pos, reach);
            match config.mode {
                Mode::Cbow => self.cbow_step(&window, lr),
                Mode::Sg => self.sg_step(&window, lr),
                Mode::Aawp => self.aawp_step(&window, lr),
                Mode::Jwap => self.jwap_step(&window, lr),
                Mode::Dm => self.dm_step(&window, doc_id, lr),
                Mode::Dis2vec => self.dis2vec_step(&window, lr),
                Mode::Dbow => unreachable!(),
            }
        }
        self.window = window;
        self.kept = kept;
    }
}
