//! Output-layer primitives: hierarchical softmax and negative sampling.
//!
//! Every update function accumulates the log-likelihood gradient with
//! respect to the input vector `h` into `grad` (unscaled by the learning
//! rate) and applies one SGD step to the output parameters it touches.
//! The caller applies `lr * grad` to whatever vectors produced `h`.

use rand::Rng;

use super::huffman::HuffmanTree;
use super::matrix::SharedMatrix;
use super::sampling::NegativeTable;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln σ(x)` without overflow.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Probability of `leaf` given input `h`: the product over the leaf's path of
/// `σ(h·v)` for a 0 branch and `σ(-h·v)` for a 1 branch.
pub fn hs_probability(h: &[f64], leaf: usize, tree: &HuffmanTree, nodes: &SharedMatrix) -> f64 {
    tree.code(leaf)
        .iter()
        .zip(tree.path(leaf))
        .map(|(&bit, &node)| {
            let x = nodes.dot_row(node as usize, h);
            if bit == 0 {
                sigmoid(x)
            } else {
                sigmoid(-x)
            }
        })
        .product()
}

pub fn hs_log_probability(h: &[f64], leaf: usize, tree: &HuffmanTree, nodes: &SharedMatrix) -> f64 {
    tree.code(leaf)
        .iter()
        .zip(tree.path(leaf))
        .map(|(&bit, &node)| {
            let x = nodes.dot_row(node as usize, h);
            log_sigmoid(if bit == 0 { x } else { -x })
        })
        .sum()
}

/// One SGD step on `log P(leaf | h)`. Returns the log-probability before the step.
pub fn hs_update(
    h: &[f64],
    leaf: usize,
    lr: f64,
    tree: &HuffmanTree,
    nodes: &SharedMatrix,
    grad: &mut [f64],
) -> f64 {
    let mut log_p = 0.0;
    for (&bit, &node) in tree.code(leaf).iter().zip(tree.path(leaf)) {
        let node = node as usize;
        let x = nodes.dot_row(node, h);
        let f = sigmoid(x);
        // d/dx ln σ(±x)
        let g = (1 - bit) as f64 - f;
        log_p += log_sigmoid(if bit == 0 { x } else { -x });
        nodes.backprop_row(node, g, lr * g, h, grad);
    }
    log_p
}

/// Single logistic term `ln σ(h·o)` (label 1) or `ln σ(-h·o)` (label 0)
/// against output row `row`. Returns the term before the step.
#[inline]
pub fn logistic_update(
    h: &[f64],
    row: usize,
    label: bool,
    lr: f64,
    vectors: &SharedMatrix,
    grad: &mut [f64],
) -> f64 {
    let x = vectors.dot_row(row, h);
    let g = if label { 1.0 } else { 0.0 } - sigmoid(x);
    vectors.backprop_row(row, g, lr * g, h, grad);
    log_sigmoid(if label { x } else { -x })
}

/// Fill `out` with `k` noise draws, each redrawn while it equals `target`.
pub fn draw_negatives<R: Rng + ?Sized>(
    target: u32,
    k: usize,
    table: &NegativeTable,
    rng: &mut R,
    out: &mut Vec<u32>,
) {
    out.clear();
    for _ in 0..k {
        match table.sample_excluding(target, rng) {
            Some(n) => out.push(n),
            None => break,
        }
    }
}

/// One SGD step on `ln σ(h·o_target) + Σ_n ln σ(-h·o_n)` for the given noise
/// draws. Returns the objective before the step.
pub fn ns_update_with(
    h: &[f64],
    target: u32,
    negatives: &[u32],
    lr: f64,
    vectors: &SharedMatrix,
    grad: &mut [f64],
) -> f64 {
    let mut obj = logistic_update(h, target as usize, true, lr, vectors, grad);
    for &n in negatives {
        obj += logistic_update(h, n as usize, false, lr, vectors, grad);
    }
    obj
}

/// Draw `k` negatives from `table` into `drawn` and run [`ns_update_with`].
#[allow(clippy::too_many_arguments)]
pub fn ns_update<R: Rng + ?Sized>(
    h: &[f64],
    target: u32,
    k: usize,
    table: &NegativeTable,
    rng: &mut R,
    lr: f64,
    vectors: &SharedMatrix,
    grad: &mut [f64],
    drawn: &mut Vec<u32>,
) -> f64 {
    draw_negatives(target, k, table, rng, drawn);
    ns_update_with(h, target, drawn, lr, vectors, grad)
}

/// Objective of [`ns_update_with`] without touching any parameter.
pub fn ns_objective(h: &[f64], target: u32, negatives: &[u32], vectors: &SharedMatrix) -> f64 {
    let mut v = vec![0.0; h.len()];
    vectors.read_row(target as usize, &mut v);
    let mut obj = log_sigmoid(dot(h, &v));
    for &n in negatives {
        vectors.read_row(n as usize, &mut v);
        obj += log_sigmoid(-dot(h, &v));
    }
    obj
}
