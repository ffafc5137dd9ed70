//! Training procedures over an encoded corpus.

mod config;
mod worker;

pub use config::{learning_rate, Dis2VecParams, Mode, TrainConfig};
pub use worker::{classify_pair, NoiseTables, PairCategory, TrainingWindow, Worker};

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::EncodedCorpus;
use crate::error::{Error, Result};
use crate::knowledge::TokenAnnotations;
use crate::model::{EmbeddingModel, NegativeTable, OutputKind, OutputLayer, DEFAULT_POWER};

/// A model being trained on one corpus.
pub struct Trainer<'a> {
    corpus: &'a EncodedCorpus,
    config: TrainConfig,
    annotations: TokenAnnotations,
    in_domain: Vec<bool>,
    word_counts: Vec<u64>,
    tables: NoiseTables,
    model: EmbeddingModel,
}

impl<'a> Trainer<'a> {
    /// Build the output layer and initialize parameters. Annotations are taken
    /// from the corpus when the mode uses them.
    pub fn new(corpus: &'a EncodedCorpus, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if corpus.num_tokens() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let num_words = corpus.vocab().len();
        let annotations = if config.mode.uses_annotations() {
            if corpus.annotations().is_empty() {
                log::warn!(
                    "mode {} uses annotations but none were given; training reduces to {}",
                    config.mode,
                    if config.mode == Mode::Aawp {
                        "cbow"
                    } else {
                        "sg"
                    }
                );
            }
            corpus.annotations().clone()
        } else {
            TokenAnnotations::empty(num_words)
        };

        let mut leaves = corpus.vocab().counts();
        if config.mode.predicts_annotations() {
            leaves.extend(
                annotations
                    .frequencies(corpus.documents())
                    .into_iter()
                    .map(|f| f.max(1)),
            );
        }
        if config.output == OutputKind::Hs && leaves.len() < 2 {
            return Err(Error::Invalid(
                "hierarchical softmax needs at least two distinct output items".into(),
            ));
        }
        let output = OutputLayer::new(config.output, &leaves, config.dim)?;
        let tables = NoiseTables {
            global: match config.output {
                OutputKind::Ns => {
                    NegativeTable::from_counts(&leaves, DEFAULT_POWER, config.table_size)
                }
                OutputKind::Hs => NegativeTable::default(),
            },
            ..Default::default()
        };
        let num_documents = if config.mode.uses_documents() {
            corpus.documents().len()
        } else {
            0
        };
        let model = EmbeddingModel::init(
            num_words,
            annotations.num_annotations(),
            num_documents,
            config.dim,
            output,
            config.seed,
        );
        Ok(Trainer {
            corpus,
            config,
            annotations,
            in_domain: vec![false; num_words],
            word_counts: corpus.vocab().counts(),
            tables,
            model,
        })
    }

    /// Mark the given surfaces as the domain vocabulary and build the
    /// in-domain and out-of-domain noise tables. Surfaces outside the corpus
    /// vocabulary are ignored.
    pub fn with_domain_vocabulary<S: AsRef<str>>(
        mut self,
        terms: impl IntoIterator<Item = S>,
    ) -> Self {
        let vocab = self.corpus.vocab();
        self.in_domain.fill(false);
        for t in terms {
            if let Some(i) = vocab.get(t.as_ref()) {
                self.in_domain[i as usize] = true;
            }
        }
        let alpha = self.config.dis2vec.alpha;
        let size = self.config.table_size;
        let (counts, flags) = (&self.word_counts, &self.in_domain);
        let split = |inside: bool| {
            counts
                .iter()
                .zip(flags)
                .enumerate()
                .filter(move |&(_, (_, &f))| f == inside)
                .map(|(i, (&c, _))| (i as u32, c))
        };
        let in_domain = NegativeTable::new(split(true), alpha, size);
        let out_of_domain = NegativeTable::new(split(false), alpha, size);
        self.tables.in_domain = in_domain;
        self.tables.out_of_domain = out_of_domain;
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn annotations(&self) -> &TokenAnnotations {
        &self.annotations
    }

    pub fn in_domain(&self) -> &[bool] {
        &self.in_domain
    }

    pub fn into_model(self) -> EmbeddingModel {
        self.model
    }

    /// Worker `id` over this trainer's model. Worker streams are independent
    /// of the stream used for initialization.
    pub fn worker(&self, id: usize) -> Worker<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(id as u64 + 1);
        Worker::new(
            &self.model,
            &self.annotations,
            &self.tables,
            &self.config,
            &self.in_domain,
            &self.word_counts,
            rng,
        )
    }

    /// Total scheduled updates: one per token per epoch.
    pub fn scheduled_updates(&self) -> u64 {
        (self.config.epochs * self.corpus.num_tokens()) as u64
    }

    /// Run every epoch. With one worker documents are visited in order on the
    /// calling thread; otherwise workers pull documents from a shared counter.
    pub fn run(&self) {
        let docs = self.corpus.documents();
        let total = self.scheduled_updates();
        let progress = AtomicU64::new(0);
        let mut workers: Vec<Worker<'_>> =
            (0..self.config.workers).map(|id| self.worker(id)).collect();
        for epoch in 0..self.config.epochs {
            log::debug!("epoch {}/{}", epoch + 1, self.config.epochs);
            if let [worker] = workers.as_mut_slice() {
                for (id, doc) in docs.iter().enumerate() {
                    worker.train_document(id, doc, &progress, total);
                }
                continue;
            }
            let next = AtomicUsize::new(0);
            std::thread::scope(|s| {
                for worker in workers.iter_mut() {
                    let (next, progress) = (&next, &progress);
                    s.spawn(move || loop {
                        let id = next.fetch_add(1, Ordering::Relaxed);
                        let Some(doc) = docs.get(id) else { break };
                        worker.train_document(id, doc, progress, total);
                    });
                }
            });
        }
    }
}

/// Train a model on `corpus` with `config`, using the corpus annotations.
pub fn train(corpus: &EncodedCorpus, config: TrainConfig) -> Result<EmbeddingModel> {
    let trainer = Trainer::new(corpus, config)?;
    trainer.run();
    Ok(trainer.into_model())
}
