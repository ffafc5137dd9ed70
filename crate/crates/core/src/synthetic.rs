//! A generated corpus of rare alias pairs that share only a type annotation.
//!
//! Each pair has two names. Each name is
//! mentioned twice, a short distance apart, in its own document, surrounded by
//! context words private to that name. Partners therefore never share a
//! context word; the only thing linking them is the annotation `TYPE_family{p}`.
//! The remaining documents are drawn from a pool of general words.
//!
//! Surface forms are numbered through random permutations so that vocabulary
//! order, and with it the Huffman tree, carries no trace of the pairing.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::EncodedCorpus;
use crate::error::Result;
use crate::eval::{mrr, EvalPairSet};
use crate::io::VectorSet;
use crate::knowledge::AnnotationMap;
use crate::model::OutputKind;
use crate::train::{train, Mode, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SyntheticParams {
    pub documents: usize,
    pub vocabulary: usize,
    pub pairs: usize,
    /// Private context words per name.
    pub private_words: usize,
    /// Tokens per general document.
    pub document_length: usize,
    /// Largest distance between the two mentions of a name.
    pub max_gap: usize,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            documents: 200,
            vocabulary: 500,
            pairs: 20,
            private_words: 8,
            document_length: 12,
            max_gap: 2,
            seed: 7,
        }
    }
}

pub struct SyntheticBenchmark {
    pub corpus: EncodedCorpus,
    pub annotations: AnnotationMap,
    pub pairs: EvalPairSet,
    pub text: String,
}

fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Build the corpus. Panics if the vocabulary budget cannot hold the names
/// and their private words with at least one general word, or if there are
/// fewer documents than names.
pub fn generate(params: &SyntheticParams) -> SyntheticBenchmark {
    let names = 2 * params.pairs;
    let private = names * params.private_words;
    assert!(
        params.vocabulary > names + private,
        "vocabulary budget too small"
    );
    assert!(params.documents >= names, "need one document per name");
    let general: Vec<String> = (0..params.vocabulary - names - private)
        .map(|k| format!("word{k:03}"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let name_ids = permutation(names, &mut rng);
    let ctx_ids = permutation(private, &mut rng);
    let name = |n: usize| format!("alias{:03}", name_ids[n]);
    let mut docs: Vec<Vec<String>> = Vec::with_capacity(params.documents);

    for n in 0..names {
        let mut doc: Vec<String> = (0..params.private_words)
            .map(|k| format!("ctx{:04}", ctx_ids[n * params.private_words + k]))
            .collect();
        doc.shuffle(&mut rng);
        let first = rng.random_range(0..=doc.len());
        doc.insert(first, name(n));
        let second = (first + rng.random_range(1..=params.max_gap)).min(doc.len());
        doc.insert(second, name(n));
        docs.push(doc);
    }
    let mut next_general = 0;
    while docs.len() < params.documents {
        let doc = (0..params.document_length)
            .map(|_| {
                // cycle first so every general word occurs at least once
                let k = if next_general < general.len() {
                    next_general += 1;
                    next_general - 1
                } else {
                    rng.random_range(0..general.len())
                };
                general[k].clone()
            })
            .collect();
        docs.push(doc);
    }
    docs.shuffle(&mut rng);

    let mut text = String::new();
    for d in &docs {
        let _ = writeln!(text, "{}", d.join(" "));
    }
    let mut corpus =
        EncodedCorpus::from_text(&text, None, 1).expect("generated corpus is nonempty");
    let mut annotations = AnnotationMap::new();
    let mut pairs = Vec::with_capacity(params.pairs);
    let mut universe = Vec::with_capacity(names);
    for p in 0..params.pairs {
        let (a, b) = (name(2 * p), name(2 * p + 1));
        let family = format!("TYPE_family{p:02}");
        annotations.attach(&a, &family);
        annotations.attach(&b, &family);
        universe.push(a.clone());
        universe.push(b.clone());
        pairs.push((a, b));
    }
    corpus.set_annotations(annotations.resolve(corpus.vocab()));
    let pairs = EvalPairSet::new(universe, pairs).expect("generated pairs are valid");
    SyntheticBenchmark {
        corpus,
        annotations,
        pairs,
        text,
    }
}

pub const BENCHMARK_LEARNING_RATE: f64 = 0.2;

/// Hyperparameters shared by both models of the comparison. The corpus holds
/// only a few thousand tokens, so the initial learning rate is raised well
/// above the usual default.
pub fn benchmark_config(mode: Mode, seed: u64) -> TrainConfig {
    TrainConfig {
        mode,
        output: OutputKind::Hs,
        dim: 100,
        window: 5,
        epochs: 5,
        lr0: BENCHMARK_LEARNING_RATE,
        min_lr: BENCHMARK_LEARNING_RATE * 1e-4,
        seed,
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub seeds: Vec<u64>,
    /// Per-seed score of each mode; lower is better.
    pub jwap: Vec<f64>,
    pub sg: Vec<f64>,
    /// Per-seed mean cosine between partners.
    pub jwap_cosine: Vec<f64>,
    pub sg_cosine: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl BenchmarkResult {
    pub fn mean_jwap(&self) -> f64 {
        mean(&self.jwap)
    }

    pub fn mean_sg(&self) -> f64 {
        mean(&self.sg)
    }

    /// `(sg - jwap) / sg` of the means.
    pub fn relative_improvement(&self) -> f64 {
        (self.mean_sg() - self.mean_jwap()) / self.mean_sg()
    }
}

fn partner_cosine(set: &EvalPairSet, vectors: &VectorSet) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in set.pairs() {
        total += crate::eval::cosine(vectors.vector(a)?, vectors.vector(b)?)?;
    }
    Ok(total / set.pairs().len() as f64)
}

/// Train JWAP and SG, both with hierarchical softmax, on `bench` for each
/// seed and score the alias pairs.
pub fn run_benchmark(bench: &SyntheticBenchmark, seeds: &[u64]) -> Result<BenchmarkResult> {
    let mut result = BenchmarkResult {
        seeds: seeds.to_vec(),
        jwap: Vec::new(),
        sg: Vec::new(),
        jwap_cosine: Vec::new(),
        sg_cosine: Vec::new(),
    };
    let tokens: Vec<&str> = bench
        .corpus
        .vocab()
        .entries()
        .iter()
        .map(|e| e.surface.as_str())
        .collect();
    for &seed in seeds {
        for mode in [Mode::Jwap, Mode::Sg] {
            let model = train(&bench.corpus, benchmark_config(mode, seed))?;
            let vectors = VectorSet::from_matrix(&tokens, &model.words)?;
            let score = mrr(&bench.pairs, &vectors)?;
            let cos = partner_cosine(&bench.pairs, &vectors)?;
            if mode == Mode::Jwap {
                result.jwap.push(score);
                result.jwap_cosine.push(cos);
            } else {
                result.sg.push(score);
                result.sg_cosine.push(cos);
            }
        }
    }
    Ok(result)
}
