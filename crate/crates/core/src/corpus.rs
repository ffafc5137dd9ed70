//! Tokenization, phrase merging and vocabulary indexing.
//!
//! A corpus file holds one document per line. Tokens are whitespace runs with
//! surrounding punctuation trimmed, so identifiers such as `TROJ_RANSOM.SMAR`
//! or `CVE-2014-0160` survive intact while sentence punctuation is dropped.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{read_file, Error, Result};
use crate::knowledge::TokenAnnotations;

/// Split a document into tokens, preserving case.
pub fn tokenize(document: &str) -> Vec<String> {
    document
        .split_whitespace()
        .map(|run| run.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|tok| !tok.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Multi-word surface forms mapped to single merged tokens.
#[derive(Debug, Clone, Default)]
pub struct PhraseTable {
    entries: HashMap<Vec<String>, String>,
    longest: usize,
}

impl PhraseTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an entry. The merged token must be non-empty without whitespace,
    /// and no surface may contain a merged token of another entry (which keeps
    /// application idempotent).
    pub fn insert(&mut self, surface: &[&str], merged: &str) -> Result<()> {
        if surface.is_empty() || surface.iter().any(|t| t.is_empty()) {
            return Err(Error::Invalid("phrase surface is empty".into()));
        }
        if merged.is_empty() || merged.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!(
                "merged token `{merged}` is empty or contains whitespace"
            )));
        }
        let surface: Vec<String> = surface.iter().map(|s| s.to_string()).collect();
        let identity = surface.len() == 1 && surface[0] == merged;
        let clashes = surface
            .iter()
            .any(|t| t == merged || self.entries.values().any(|m| m == t));
        if clashes && !identity {
            return Err(Error::Invalid(format!(
                "phrase `{}` contains a merged token",
                surface.join(" ")
            )));
        }
        if self.entries.keys().any(|k| k.iter().any(|t| t == merged)) {
            return Err(Error::Invalid(format!(
                "merged token `{merged}` already occurs inside a phrase surface"
            )));
        }
        self.longest = self.longest.max(surface.len());
        self.entries.insert(surface, merged.to_owned());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse `surface phrase<TAB>merged_token` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = PhraseTable::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (surface, merged) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected `phrase<TAB>token`"))?;
            let words: Vec<&str> = surface.split_whitespace().collect();
            table
                .insert(&words, merged.trim())
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?).map_err(|e| Error::in_file(path, e))
    }

    /// Left-to-right longest-match replacement.
    pub fn apply<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        let mut out = Vec::with_capacity(tokens.len());
        let mut key: Vec<String> = Vec::with_capacity(self.longest);
        let mut i = 0;
        'outer: while i < tokens.len() {
            let max = self.longest.min(tokens.len() - i);
            for len in (1..=max).rev() {
                key.clear();
                key.extend(tokens[i..i + len].iter().map(|t| t.to_string()));
                if let Some(merged) = self.entries.get(&key) {
                    out.push(merged.clone());
                    i += len;
                    continue 'outer;
                }
            }
            out.push(tokens[i].to_owned());
            i += 1;
        }
        out
    }
}

/// Free-function form of [`PhraseTable::apply`].
pub fn apply_phrases<S: AsRef<str>>(tokens: &[S], table: &PhraseTable) -> Vec<String> {
    table.apply(tokens)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub surface: String,
    pub count: u64,
}

/// Retained word types, indexed densely by descending count (ties by surface).
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, u32>,
    min_count: u64,
    discarded: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, idx: u32) -> &str {
        &self.entries[idx as usize].surface
    }

    pub fn count(&self, idx: u32) -> u64 {
        self.entries[idx as usize].count
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.count).collect()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Occurrences of retained types.
    pub fn retained_tokens(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    /// Occurrences of types that fell below `min_count`.
    pub fn discarded_tokens(&self) -> u64 {
        self.discarded
    }

    pub fn total_tokens(&self) -> u64 {
        self.retained_tokens() + self.discarded
    }
}

/// Count tokens over all documents and index the types reaching `min_count`.
pub fn build_vocabulary<S: AsRef<str>>(documents: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Invalid("min_count must be at least 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for tok in documents.iter().flatten() {
        *counts.entry(tok.as_ref()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut discarded = 0;
    let mut entries: Vec<VocabEntry> = Vec::with_capacity(counts.len());
    for (surface, count) in counts {
        if count >= min_count {
            entries.push(VocabEntry {
                surface: surface.to_owned(),
                count,
            });
        } else {
            discarded += count;
        }
    }
    entries.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.surface.cmp(&b.surface))
    });
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.surface.clone(), i as u32))
        .collect();
    Ok(Vocabulary {
        entries,
        index,
        min_count,
        discarded,
    })
}

/// Probability of keeping one occurrence of a word under frequent-word
/// subsampling with threshold `t`; `None` disables subsampling.
pub fn subsample_keep_probability(count: u64, total: u64, t: Option<f64>) -> f64 {
    match t {
        None => 1.0,
        Some(t) => {
            let ratio = t / (count as f64 / total as f64);
            (ratio.sqrt() + ratio).min(1.0)
        }
    }
}

/// Documents as vocabulary indices, with the annotation sets of each type.
#[derive(Debug, Clone)]
pub struct EncodedCorpus {
    documents: Vec<Vec<u32>>,
    vocab: Vocabulary,
    annotations: TokenAnnotations,
}

impl EncodedCorpus {
    /// Index `documents` against `vocab`; tokens outside it are dropped.
    pub fn encode<S: AsRef<str>>(documents: &[Vec<S>], vocab: Vocabulary) -> Self {
        let documents = documents
            .iter()
            .map(|doc| doc.iter().filter_map(|t| vocab.get(t.as_ref())).collect())
            .collect();
        let annotations = TokenAnnotations::empty(vocab.len());
        EncodedCorpus {
            documents,
            vocab,
            annotations,
        }
    }

    /// Tokenize, merge phrases, count and index a corpus given one document per line.
    pub fn from_text(text: &str, phrases: Option<&PhraseTable>, min_count: u64) -> Result<Self> {
        let docs = tokenize_documents(text, phrases);
        let vocab = build_vocabulary(&docs, min_count)?;
        Ok(Self::encode(&docs, vocab))
    }

    pub fn from_file(path: &Path, phrases: Option<&PhraseTable>, min_count: u64) -> Result<Self> {
        Self::from_text(&read_file(path)?, phrases, min_count).map_err(|e| Error::in_file(path, e))
    }

    pub fn documents(&self) -> &[Vec<u32>] {
        &self.documents
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn annotations(&self) -> &TokenAnnotations {
        &self.annotations
    }

    pub fn set_annotations(&mut self, annotations: TokenAnnotations) {
        assert_eq!(annotations.num_words(), self.vocab.len());
        self.annotations = annotations;
    }

    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn decode(&self) -> Vec<Vec<&str>> {
        self.documents
            .iter()
            .map(|doc| doc.iter().map(|&i| self.vocab.surface(i)).collect())
            .collect()
    }
}

/// One token list per input line, phrases merged.
pub fn tokenize_documents(text: &str, phrases: Option<&PhraseTable>) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| {
            let toks = tokenize(line);
            match phrases {
                Some(p) if !p.is_empty() => p.apply(&toks),
                _ => toks,
            }
        })
        .collect()
}
