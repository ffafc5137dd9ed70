//! Knowledge graphs compiled into predicate-argument structures and token annotations.
//!
//! A graph is read from three TSV-ish inputs (triples, node categories, domain
//! vocabulary) and rewritten into four predicate families:
//!
//! * `Voc` lists the domain vocabulary,
//! * `TYPE_<category>` lists all nodes of one semantic category,
//! * `R_D_<relation>_<i>` holds the two endpoints of the i-th edge with that relation,
//! * `R_I_<node>` holds all neighbours of a node with at least two neighbours.
//!
//! Every predicate then becomes an annotation of each of its arguments.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub relation: String,
    pub target: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    domain: Vec<usize>,
    in_domain: std::collections::HashSet<usize>,
}

/// Replace whitespace runs and commas so a name is a single token.
fn sanitize(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .replace(',', "_")
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).collect()
}

const REGISTRY_PREFIX: &str = "#annotations\t";

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a node (idempotent) and return its index.
    pub fn add_node(&mut self, name: &str) -> usize {
        let name = sanitize(name);
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(name.clone(), i);
        self.nodes.push(Node {
            name,
            category: None,
        });
        i
    }

    pub fn add_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<()> {
        let relation = sanitize(relation);
        if relation.is_empty() {
            return Err(Error::Invalid("relation label is empty".into()));
        }
        let source = self.add_node(source);
        let target = self.add_node(target);
        self.edges.push(Edge {
            source,
            relation,
            target,
        });
        Ok(())
    }

    pub fn set_category(&mut self, node: &str, category: &str) -> Result<()> {
        let category = sanitize(category);
        let i = self.add_node(node);
        match &self.nodes[i].category {
            Some(existing) if *existing != category => Err(Error::Invalid(format!(
                "node `{}` has conflicting categories `{existing}` and `{category}`",
                self.nodes[i].name
            ))),
            _ => {
                self.nodes[i].category = Some(category);
                Ok(())
            }
        }
    }

    pub fn add_domain_term(&mut self, node: &str) {
        let i = self.add_node(node);
        if self.in_domain.insert(i) {
            self.domain.push(i);
        }
    }

    /// Build a graph from the contents of the triples, node-type and
    /// domain-vocabulary files. Nodes are declared in order of first mention.
    pub fn parse(triples: &str, node_types: &str, domain_vocabulary: &str) -> Result<Self> {
        let mut g = KnowledgeGraph::new();
        g.load_triples(triples)?;
        g.load_node_types(node_types)?;
        g.load_domain_vocabulary(domain_vocabulary)?;
        Ok(g)
    }

    /// `subject<TAB>relation<TAB>object` rows.
    pub fn load_triples(&mut self, text: &str) -> Result<()> {
        for (line, row) in content_lines(text) {
            let f = fields(row);
            if f.len() != 3 || f.iter().any(|s| s.is_empty()) {
                return Err(Error::parse(
                    line,
                    "expected `subject<TAB>relation<TAB>object`",
                ));
            }
            self.add_edge(f[0], f[1], f[2])
                .map_err(|e| Error::parse(line, e.to_string()))?;
        }
        Ok(())
    }

    /// `node<TAB>category` rows.
    pub fn load_node_types(&mut self, text: &str) -> Result<()> {
        for (line, row) in content_lines(text) {
            let f = fields(row);
            if f.len() != 2 || f.iter().any(|s| s.is_empty()) {
                return Err(Error::parse(line, "expected `node<TAB>category`"));
            }
            self.set_category(f[0], f[1])
                .map_err(|e| Error::parse(line, e.to_string()))?;
        }
        Ok(())
    }

    /// One concept per line.
    pub fn load_domain_vocabulary(&mut self, text: &str) -> Result<()> {
        for (line, row) in content_lines(text) {
            if row.contains('\t') {
                return Err(Error::parse(line, "expected one concept per line"));
            }
            self.add_domain_term(row.trim());
        }
        Ok(())
    }

    pub fn from_files(
        triples: &Path,
        node_types: Option<&Path>,
        domain_vocabulary: Option<&Path>,
    ) -> Result<Self> {
        let mut g = KnowledgeGraph::new();
        g.load_triples(&read_file(triples)?)
            .map_err(|e| Error::in_file(triples, e))?;
        if let Some(p) = node_types {
            g.load_node_types(&read_file(p)?)
                .map_err(|e| Error::in_file(p, e))?;
        }
        if let Some(p) = domain_vocabulary {
            g.load_domain_vocabulary(&read_file(p)?)
                .map_err(|e| Error::in_file(p, e))?;
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn domain_vocabulary(&self) -> impl Iterator<Item = &str> {
        self.domain.iter().map(|&i| self.nodes[i].name.as_str())
    }

    /// Distinct neighbours of every node in order of first edge mention;
    /// self-loops excluded.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if e.source == e.target {
                continue;
            }
            for (a, b) in [(e.source, e.target), (e.target, e.source)] {
                if seen.insert((a, b)) {
                    adj[a].push(b);
                }
            }
        }
        adj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateKind {
    Vocabulary,
    Category,
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub kind: PredicateKind,
    pub arguments: Vec<String>,
}

impl std::fmt::Display for Predicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.name, self.arguments.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateArgumentSet {
    pub predicates: Vec<Predicate>,
}

impl PredicateArgumentSet {
    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    /// One `Name(arg, ...)` line per predicate.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.predicates {
            let _ = writeln!(out, "{p}");
        }
        out
    }
}

/// Rewrite a graph into predicate-argument structures.
///
/// Indirect predicates name their centre node with phrase joiners (`_`)
/// removed, except for domain-vocabulary identifiers which keep their exact
/// spelling: `Windows_XP` yields `R_I_WindowsXP` while `TSPY_USTEAL.USRJ`
/// yields `R_I_TSPY_USTEAL.USRJ`.
pub fn derive_predicates(graph: &KnowledgeGraph) -> PredicateArgumentSet {
    let name_of = |i: usize| graph.nodes[i].name.clone();
    let mut predicates = Vec::new();

    if !graph.domain.is_empty() {
        predicates.push(Predicate {
            name: "Voc".into(),
            kind: PredicateKind::Vocabulary,
            arguments: graph.domain.iter().map(|&i| name_of(i)).collect(),
        });
    }

    let mut categories: Vec<(&str, Vec<String>)> = Vec::new();
    for n in &graph.nodes {
        if let Some(c) = &n.category {
            match categories.iter_mut().find(|(name, _)| name == c) {
                Some((_, members)) => members.push(n.name.clone()),
                None => categories.push((c, vec![n.name.clone()])),
            }
        }
    }
    for (c, members) in categories {
        predicates.push(Predicate {
            name: format!("TYPE_{c}"),
            kind: PredicateKind::Category,
            arguments: members,
        });
    }

    let mut per_label: HashMap<&str, usize> = HashMap::new();
    for e in &graph.edges {
        let n = per_label.entry(&e.relation).or_default();
        *n += 1;
        predicates.push(Predicate {
            name: format!("R_D_{}_{}", e.relation, n),
            kind: PredicateKind::Direct,
            arguments: vec![name_of(e.source), name_of(e.target)],
        });
    }

    let mut taken: std::collections::HashSet<String> =
        predicates.iter().map(|p| p.name.clone()).collect();
    for (i, neighbors) in graph.adjacency().into_iter().enumerate() {
        if neighbors.len() < 2 {
            continue;
        }
        let node = &graph.nodes[i].name;
        let compact = if graph.in_domain.contains(&i) {
            node.clone()
        } else {
            node.replace('_', "")
        };
        let mut name = format!("R_I_{compact}");
        if taken.contains(&name) {
            name = format!("R_I_{node}");
        }
        taken.insert(name.clone());
        predicates.push(Predicate {
            name,
            kind: PredicateKind::Indirect,
            arguments: neighbors.into_iter().map(name_of).collect(),
        });
    }

    PredicateArgumentSet { predicates }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedArgument {
    pub predicate: String,
    pub argument: String,
}

/// Annotation sets per token surface, with a dense annotation registry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationMap {
    names: Vec<String>,
    name_index: HashMap<String, u32>,
    tokens: Vec<(String, Vec<u32>)>,
    token_index: HashMap<String, usize>,
    skipped: Vec<SkippedArgument>,
}

impl AnnotationMap {
    pub fn new() -> Self {
        Self::default()
    }

    fn annotation_id(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.name_index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.name_index.insert(name.to_owned(), id);
        id
    }

    /// Attach annotation `name` to `token`; set semantics.
    pub fn attach(&mut self, token: &str, name: &str) {
        let id = self.annotation_id(name);
        let slot = match self.token_index.get(token) {
            Some(&s) => s,
            None => {
                self.tokens.push((token.to_owned(), Vec::new()));
                self.token_index
                    .insert(token.to_owned(), self.tokens.len() - 1);
                self.tokens.len() - 1
            }
        };
        let set = &mut self.tokens[slot].1;
        if let Err(pos) = set.binary_search(&id) {
            set.insert(pos, id);
        }
    }

    pub fn annotation_names(&self) -> &[String] {
        &self.names
    }

    pub fn num_annotations(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Annotation names of `token`, in registry order.
    pub fn annotations_of(&self, token: &str) -> Vec<&str> {
        self.token_index
            .get(token)
            .map(|&s| {
                self.tokens[s]
                    .1
                    .iter()
                    .map(|&id| self.names[id as usize].as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Annotated tokens in order of first attachment.
    pub fn tokens(&self) -> impl Iterator<Item = (&str, Vec<&str>)> {
        self.tokens.iter().map(|(t, ids)| {
            (
                t.as_str(),
                ids.iter()
                    .map(|&id| self.names[id as usize].as_str())
                    .collect(),
            )
        })
    }

    /// Tokens that carry annotation `name`.
    pub fn carriers(&self, name: &str) -> Vec<&str> {
        let Some(&id) = self.name_index.get(name) else {
            return Vec::new();
        };
        self.tokens
            .iter()
            .filter(|(_, ids)| ids.binary_search(&id).is_ok())
            .map(|(t, _)| t.as_str())
            .collect()
    }

    /// Arguments dropped because they were absent from the vocabulary.
    pub fn skipped(&self) -> &[SkippedArgument] {
        &self.skipped
    }

    /// One `token<TAB>a1,a2` line per token, preceded by a comment line
    /// listing the registry so ids survive a round trip.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REGISTRY_PREFIX}{}", self.names.join(","));
        for (token, names) in self.tokens() {
            let _ = writeln!(out, "{token}\t{}", names.join(","));
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut map = AnnotationMap::new();
        if let Some(registry) = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix(REGISTRY_PREFIX))
        {
            for name in registry.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                map.annotation_id(name);
            }
        }
        for (line, row) in content_lines(text) {
            let (token, anns) = row
                .split_once('\t')
                .ok_or_else(|| Error::parse(line, "expected `token<TAB>annotations`"))?;
            let token = token.trim();
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(Error::parse(line, "token is empty or contains whitespace"));
            }
            for name in anns.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                map.attach(token, name);
            }
        }
        Ok(map)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_tsv(&read_file(path)?).map_err(|e| Error::in_file(path, e))
    }

    /// Index-level annotation sets for `vocab`. Annotations carried by no
    /// vocabulary word are left out of the resolved registry.
    pub fn resolve(&self, vocab: &Vocabulary) -> TokenAnnotations {
        let mut remap: Vec<Option<u32>> = vec![None; self.names.len()];
        let mut names = Vec::new();
        let mut per_word = vec![Vec::new(); vocab.len()];
        for (token, ids) in &self.tokens {
            let Some(w) = vocab.get(token) else { continue };
            for &id in ids {
                if remap[id as usize].is_none() {
                    remap[id as usize] = Some(0);
                }
            }
            per_word[w as usize] = ids.clone();
        }
        // Dense ids in registry order.
        for (id, slot) in remap.iter_mut().enumerate() {
            if slot.is_some() {
                *slot = Some(names.len() as u32);
                names.push(self.names[id].clone());
            }
        }
        for set in &mut per_word {
            for id in set.iter_mut() {
                *id = remap[*id as usize].expect("carried annotation has an id");
            }
        }
        TokenAnnotations { names, per_word }
    }
}

/// Translate each predicate into an annotation of each argument. With a
/// vocabulary, arguments outside it are recorded in [`AnnotationMap::skipped`].
pub fn assign_annotations(pas: &PredicateArgumentSet, vocab: Option<&Vocabulary>) -> AnnotationMap {
    let mut map = AnnotationMap::new();
    for p in &pas.predicates {
        for arg in &p.arguments {
            if vocab.is_some_and(|v| v.get(arg).is_none()) {
                map.skipped.push(SkippedArgument {
                    predicate: p.name.clone(),
                    argument: arg.clone(),
                });
                continue;
            }
            map.attach(arg, &p.name);
        }
    }
    map
}

/// Emit each token followed by `[a1,a2,...]` when it has annotations; one line per document.
pub fn render_annotated_text<S: AsRef<str>>(documents: &[Vec<S>], map: &AnnotationMap) -> String {
    let mut out = String::new();
    for doc in documents {
        let rendered: Vec<String> = doc
            .iter()
            .map(|t| {
                let t = t.as_ref();
                let anns = map.annotations_of(t);
                if anns.is_empty() {
                    t.to_owned()
                } else {
                    format!("{t}[{}]", anns.join(","))
                }
            })
            .collect();
        out.push_str(&rendered.join(" "));
        out.push('\n');
    }
    out
}

/// Annotation-id sets indexed by word id, for one vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenAnnotations {
    names: Vec<String>,
    per_word: Vec<Vec<u32>>,
}

impl TokenAnnotations {
    pub fn empty(num_words: usize) -> Self {
        TokenAnnotations {
            names: Vec::new(),
            per_word: vec![Vec::new(); num_words],
        }
    }

    pub fn num_words(&self) -> usize {
        self.per_word.len()
    }

    pub fn num_annotations(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    #[inline]
    pub fn of(&self, word: u32) -> &[u32] {
        &self.per_word[word as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of annotated token occurrences per annotation.
    pub fn frequencies(&self, documents: &[Vec<u32>]) -> Vec<u64> {
        let mut freq = vec![0u64; self.names.len()];
        for &w in documents.iter().flatten() {
            for &a in self.of(w) {
                freq[a as usize] += 1;
            }
        }
        freq
    }
}
