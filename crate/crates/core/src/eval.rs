//! Rank-based evaluation of related-entity pairs and nearest-neighbour queries.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{read_file, Error, Result};
use crate::io::VectorSet;

/// `u·v / (|u| |v|)`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

fn cosine_of(vectors: &VectorSet, a: &str, b: &str) -> Result<f64> {
    let (u, v) = (vectors.vector(a)?, vectors.vector(b)?);
    cosine(u, v).map_err(|_| {
        let zero = if u.iter().all(|&x| x == 0.0) { a } else { b };
        Error::Invalid(format!("`{zero}` has a zero vector"))
    })
}

/// A universe of entities and ordered pairs of related members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPairSet {
    universe: Vec<String>,
    pairs: Vec<(String, String)>,
}

impl EvalPairSet {
    /// Requires at least 3 distinct universe members, at least one pair, and
    /// pairs of distinct universe members.
    pub fn new(universe: Vec<String>, pairs: Vec<(String, String)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &universe {
            if !seen.insert(m.as_str()) {
                return Err(Error::DuplicateToken(m.clone()));
            }
        }
        if universe.len() < 3 {
            return Err(Error::Invalid(format!(
                "the universe needs at least 3 members, got {}",
                universe.len()
            )));
        }
        if pairs.is_empty() {
            return Err(Error::Invalid("no evaluation pairs".into()));
        }
        for (a, b) in &pairs {
            if a == b {
                return Err(Error::Invalid(format!(
                    "pair ({a}, {a}) repeats one member"
                )));
            }
            for m in [a, b] {
                if !seen.contains(m.as_str()) {
                    return Err(Error::Invalid(format!(
                        "pair member `{m}` is not in the universe"
                    )));
                }
            }
        }
        Ok(EvalPairSet { universe, pairs })
    }

    /// Pairs from `token<TAB>token` lines; `#` and blank lines skipped.
    pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 2 || f.iter().any(|s| s.is_empty()) {
                return Err(Error::parse(i + 1, "expected `token<TAB>token`"));
            }
            pairs.push((f[0].to_owned(), f[1].to_owned()));
        }
        Ok(pairs)
    }

    /// One token per line.
    pub fn parse_universe(text: &str) -> Vec<String> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect()
    }

    pub fn from_files(pairs: &Path, universe: &Path) -> Result<Self> {
        let p = Self::parse_pairs(&read_file(pairs)?).map_err(|e| Error::in_file(pairs, e))?;
        let u = Self::parse_universe(&read_file(universe)?);
        Self::new(u, p)
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// Every universe member must have a vector.
    pub fn check_vocabulary(&self, vectors: &VectorSet) -> Result<()> {
        match self.universe.iter().find(|m| vectors.get(m).is_none()) {
            Some(m) => Err(Error::UnknownToken(m.clone())),
            None => Ok(()),
        }
    }
}

/// `1 +` the number of universe members other than `query` and `target`
/// strictly more similar to `query` than `target` is.
pub fn rank_of_pair<S: AsRef<str>>(
    query: &str,
    target: &str,
    universe: &[S],
    vectors: &VectorSet,
) -> Result<usize> {
    if query == target {
        return Err(Error::Invalid(format!(
            "query and target are both `{query}`"
        )));
    }
    let reference = cosine_of(vectors, query, target)?;
    let mut rank = 1;
    for c in universe {
        let c = c.as_ref();
        if c == query || c == target {
            continue;
        }
        if cosine_of(vectors, query, c)? > reference {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Ranks of one pair in both directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairRanks {
    pub first: String,
    pub second: String,
    /// Rank of `second` for query `first`.
    pub forward: usize,
    /// Rank of `first` for query `second`.
    pub backward: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Normalized mean rank; lower is better.
    pub mrr: f64,
    pub universe_size: usize,
    pub num_pairs: usize,
    pub pairs: Vec<PairRanks>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "MRR (normalized mean rank, lower is better): {:.6}",
            self.mrr
        );
        let _ = writeln!(
            out,
            "universe size T = {}, pairs L = {}",
            self.universe_size, self.num_pairs
        );
        let _ = writeln!(out, "first\tsecond\trank(second|first)\trank(first|second)");
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                p.first, p.second, p.forward, p.backward
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Score every pair in both directions.
pub fn evaluate(set: &EvalPairSet, vectors: &VectorSet) -> Result<EvalReport> {
    set.check_vocabulary(vectors)?;
    let u = set.universe();
    let mut pairs = Vec::with_capacity(set.pairs.len());
    let mut total = 0usize;
    for (a, b) in set.pairs() {
        let forward = rank_of_pair(a, b, u, vectors)?;
        let backward = rank_of_pair(b, a, u, vectors)?;
        total += forward + backward;
        pairs.push(PairRanks {
            first: a.clone(),
            second: b.clone(),
            forward,
            backward,
        });
    }
    let mrr = total as f64 / (u.len() * 2 * set.pairs.len()) as f64;
    Ok(EvalReport {
        mrr,
        universe_size: u.len(),
        num_pairs: set.pairs.len(),
        pairs,
    })
}

/// `Σ (forward + backward rank) / (T · 2L)`.
pub fn mrr(set: &EvalPairSet, vectors: &VectorSet) -> Result<f64> {
    evaluate(set, vectors).map(|r| r.mrr)
}

/// The `k` tokens most similar to `token` (itself excluded), optionally
/// restricted to `restrict`. Ties keep the earlier vector first.
pub fn nearest_neighbors(
    token: &str,
    k: usize,
    vectors: &VectorSet,
    restrict: Option<&[String]>,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let q = vectors.vector(token)?;
    let candidates: Vec<usize> = match restrict {
        Some(r) => {
            let mut idx = r
                .iter()
                .map(|t| {
                    vectors
                        .index_of(t)
                        .ok_or_else(|| Error::UnknownToken(t.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            idx.sort_unstable();
            idx.dedup();
            idx
        }
        None => (0..vectors.len()).collect(),
    };
    let mut scored = Vec::with_capacity(candidates.len());
    for i in candidates {
        let t = &vectors.tokens()[i];
        if t == token {
            continue;
        }
        let c = cosine(q, vectors.row(i))
            .map_err(|_| Error::Invalid(format!("`{t}` or `{token}` has a zero vector")))?;
        scored.push((i, c));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(i, c)| (vectors.tokens()[i].clone(), c))
        .collect())
}
