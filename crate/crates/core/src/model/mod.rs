//! Embedding matrices and the output layers shared by every trainer.

mod huffman;
mod matrix;
pub mod output;
mod sampling;

pub use huffman::HuffmanTree;
pub use matrix::SharedMatrix;
pub use output::{hs_log_probability, hs_probability, hs_update, ns_update, ns_update_with};
pub use sampling::{NegativeTable, DEFAULT_POWER, DEFAULT_TABLE_SIZE};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    /// Hierarchical softmax over a Huffman tree.
    Hs,
    /// Negative sampling.
    Ns,
}

impl std::fmt::Display for OutputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputKind::Hs => "hs",
            OutputKind::Ns => "ns",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputLayer {
    Hierarchical {
        tree: HuffmanTree,
        nodes: SharedMatrix,
    },
    Negative {
        vectors: SharedMatrix,
    },
}

impl OutputLayer {
    /// Zero-initialized output parameters over leaves with the given frequencies.
    pub fn new(kind: OutputKind, frequencies: &[u64], dim: usize) -> Result<Self> {
        Ok(match kind {
            OutputKind::Hs => {
                let tree = HuffmanTree::build(frequencies)?;
                let nodes = SharedMatrix::zeros(tree.num_internal(), dim);
                OutputLayer::Hierarchical { tree, nodes }
            }
            OutputKind::Ns => OutputLayer::Negative {
                vectors: SharedMatrix::zeros(frequencies.len(), dim),
            },
        })
    }

    pub fn kind(&self) -> OutputKind {
        match self {
            OutputLayer::Hierarchical { .. } => OutputKind::Hs,
            OutputLayer::Negative { .. } => OutputKind::Ns,
        }
    }

    pub fn params(&self) -> &SharedMatrix {
        match self {
            OutputLayer::Hierarchical { nodes, .. } => nodes,
            OutputLayer::Negative { vectors } => vectors,
        }
    }
}

/// Input matrices for words, annotations and (for paragraph vectors)
/// documents, plus the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub words: SharedMatrix,
    pub annotations: SharedMatrix,
    pub documents: SharedMatrix,
    pub output: OutputLayer,
}

impl EmbeddingModel {
    /// Input matrices uniform in `[-0.5/d, 0.5/d)` drawn in the order words,
    /// annotations, documents from a generator seeded with `seed`.
    pub fn init(
        num_words: usize,
        num_annotations: usize,
        num_documents: usize,
        dim: usize,
        output: OutputLayer,
        seed: u64,
    ) -> Self {
        assert!(dim >= 1, "embedding dimension must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize| {
            let v = (0..rows * dim)
                .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
                .collect();
            SharedMatrix::from_vec(rows, dim, v)
        };
        let words = uniform(num_words);
        let annotations = uniform(num_annotations);
        let documents = uniform(num_documents);
        EmbeddingModel {
            dim,
            words,
            annotations,
            documents,
            output,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.words.is_finite()
            && self.annotations.is_finite()
            && self.documents.is_finite()
            && self.output.params().is_finite()
    }
}
