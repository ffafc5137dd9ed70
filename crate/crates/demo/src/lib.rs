//! WebAssembly bindings for the browser demo. Every function takes and
//! returns plain strings so the page needs no bundler.

use annembed::knowledge::{assign_annotations, derive_predicates, KnowledgeGraph};
use annembed::model::HuffmanTree;
use annembed::synthetic::{benchmark_config, generate, SyntheticParams};
use annembed::train::{train, Mode};
use annembed::{eval, io};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Compile a graph to predicate-argument structures and per-token annotations.
/// Returns `{"predicates": [...], "annotations": "<tsv>"}`.
pub fn annotate_json(
    triples: &str,
    node_types: &str,
    vocabulary: &str,
) -> annembed::Result<String> {
    let graph = KnowledgeGraph::parse(triples, node_types, vocabulary)?;
    let pas = derive_predicates(&graph);
    let map = assign_annotations(&pas, None);
    let predicates: Vec<String> = pas.predicates.iter().map(ToString::to_string).collect();
    Ok(json!({ "predicates": predicates, "annotations": map.to_tsv() }).to_string())
}

#[wasm_bindgen]
pub fn annotate(triples: &str, node_types: &str, vocabulary: &str) -> Result<String, JsValue> {
    annotate_json(triples, node_types, vocabulary).map_err(js_err)
}

/// Huffman codes for whitespace-separated frequencies, as
/// `[{"frequency": f, "code": "010"}, ...]` plus the weighted length.
pub fn huffman_json(frequencies: &str) -> Result<String, String> {
    let freqs = frequencies
        .split([',', ' ', '\n', '\t'])
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| format!("`{s}` is not a positive integer"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tree = HuffmanTree::build(&freqs).map_err(|e| e.to_string())?;
    let codes: Vec<_> = freqs
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let code: String = tree.code(i).iter().map(|b| char::from(b'0' + b)).collect();
            json!({ "frequency": f, "code": code })
        })
        .collect();
    Ok(json!({ "codes": codes, "weighted_length": tree.weighted_length(&freqs) }).to_string())
}

#[wasm_bindgen]
pub fn huffman(frequencies: &str) -> Result<String, JsValue> {
    huffman_json(frequencies).map_err(js_err)
}

/// Train JWAP and Skip-Gram on the synthetic alias corpus with one seed and
/// report both scores plus the nearest names to the first alias.
pub fn benchmark_json(corpus_seed: u64, seed: u64, dim: usize) -> annembed::Result<String> {
    let bench = generate(&SyntheticParams {
        seed: corpus_seed,
        ..SyntheticParams::default()
    });
    let tokens: Vec<&str> = bench
        .corpus
        .vocab()
        .entries()
        .iter()
        .map(|e| e.surface.as_str())
        .collect();
    let (query, partner) = bench.pairs.pairs()[0].clone();
    let mut runs = Vec::new();
    for mode in [Mode::Jwap, Mode::Sg] {
        let config = annembed::train::TrainConfig {
            dim,
            ..benchmark_config(mode, seed)
        };
        let model = train(&bench.corpus, config)?;
        let vectors = io::VectorSet::from_matrix(&tokens, &model.words)?;
        let score = eval::mrr(&bench.pairs, &vectors)?;
        let rank = eval::rank_of_pair(&query, &partner, bench.pairs.universe(), &vectors)?;
        let neighbours: Vec<_> =
            eval::nearest_neighbors(&query, 5, &vectors, Some(bench.pairs.universe()))?
                .into_iter()
                .map(|(t, c)| json!({ "token": t, "cosine": c }))
                .collect();
        runs.push(json!({ "mode": mode.name(), "mrr": score, "partner_rank": rank, "nearest": neighbours }));
    }
    Ok(json!({ "query": query, "partner": partner, "universe": bench.pairs.universe().len(), "runs": runs }).to_string())
}

#[wasm_bindgen]
pub fn benchmark(corpus_seed: u32, seed: u32, dim: u32) -> Result<String, JsValue> {
    benchmark_json(corpus_seed as u64, seed as u64, dim.clamp(1, 300) as usize).map_err(js_err)
}
