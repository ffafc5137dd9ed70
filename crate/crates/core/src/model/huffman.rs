use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Binary Huffman code over a set of leaves, used by the hierarchical softmax.
///
/// Internal nodes are numbered in creation order, so the root is the last one.
/// For every leaf `code[i]` is the branch taken at internal node `path[i]`,
/// listed from the root downwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTree {
    codes: Vec<Vec<u8>>,
    paths: Vec<Vec<u32>>,
}

impl HuffmanTree {
    /// Build an optimal prefix code. Merges take the two lightest nodes;
    /// equal weights resolve to the node created earliest, leaves before
    /// internal nodes and lower leaf indices first.
    pub fn build(frequencies: &[u64]) -> Result<Self> {
        let n = frequencies.len();
        if n < 2 {
            return Err(Error::Invalid(format!(
                "a Huffman tree needs at least 2 leaves, got {n}"
            )));
        }
        if frequencies.contains(&0) {
            return Err(Error::Invalid(
                "Huffman frequencies must be positive".into(),
            ));
        }
        let mut leaves: Vec<usize> = (0..n).collect();
        leaves.sort_by_key(|&i| frequencies[i]);
        let mut leaves: VecDeque<usize> = leaves.into();
        let mut internal: VecDeque<usize> = VecDeque::with_capacity(n - 1);

        // node ids: 0..n leaves, n.. internal
        let mut weight: Vec<u64> = frequencies.to_vec();
        weight.resize(2 * n - 1, 0);
        let mut parent = vec![0usize; 2 * n - 1];
        let mut bit = vec![0u8; 2 * n - 1];

        let pop_min =
            |leaves: &mut VecDeque<usize>, internal: &mut VecDeque<usize>, weight: &[u64]| {
                match (leaves.front(), internal.front()) {
                    (Some(&l), Some(&i)) if weight[l] <= weight[i] => leaves.pop_front(),
                    (Some(_), Some(_)) => internal.pop_front(),
                    (Some(_), None) => leaves.pop_front(),
                    (None, _) => internal.pop_front(),
                }
                .expect("queue holds at least two nodes")
            };

        for next in n..2 * n - 1 {
            let a = pop_min(&mut leaves, &mut internal, &weight);
            let b = pop_min(&mut leaves, &mut internal, &weight);
            weight[next] = weight[a] + weight[b];
            parent[a] = next;
            parent[b] = next;
            bit[b] = 1;
            internal.push_back(next);
        }

        let root = 2 * n - 2;
        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for leaf in 0..n {
            let mut code = Vec::new();
            let mut path = Vec::new();
            let mut node = leaf;
            while node != root {
                code.push(bit[node]);
                node = parent[node];
                path.push((node - n) as u32);
            }
            code.reverse();
            path.reverse();
            codes.push(code);
            paths.push(path);
        }
        Ok(HuffmanTree { codes, paths })
    }

    pub fn num_leaves(&self) -> usize {
        self.codes.len()
    }

    pub fn num_internal(&self) -> usize {
        self.codes.len() - 1
    }

    #[inline]
    pub fn code(&self, leaf: usize) -> &[u8] {
        &self.codes[leaf]
    }

    #[inline]
    pub fn path(&self, leaf: usize) -> &[u32] {
        &self.paths[leaf]
    }

    pub fn code_lengths(&self) -> Vec<usize> {
        self.codes.iter().map(Vec::len).collect()
    }

    /// Σ freq · code length.
    pub fn weighted_length(&self, frequencies: &[u64]) -> u64 {
        frequencies
            .iter()
            .zip(&self.codes)
            .map(|(&f, c)| f * c.len() as u64)
            .sum()
    }
}
