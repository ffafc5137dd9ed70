//! Oracles and checks shared by the integration tests and the acceptance runner.
//!
//! Every check returns `Ok(summary)` or `Err(reason)`.

#![allow(dead_code)]

use std::collections::HashMap;
use std::time::Instant;

use annembed::corpus::EncodedCorpus;
use annembed::eval::{cosine, mrr, rank_of_pair, EvalPairSet};
use annembed::io::VectorSet;
use annembed::knowledge::{derive_predicates, AnnotationMap, KnowledgeGraph};
use annembed::model::{
    hs_probability, EmbeddingModel, HuffmanTree, OutputKind, OutputLayer, SharedMatrix,
};
use annembed::retrofit::{objective_value, retrofit, retrofit_observed, RetrofitGraph};
use annembed::synthetic::{generate, run_benchmark, SyntheticParams};
use annembed::train::{train, Dis2VecParams, Mode, TrainConfig, Trainer, TrainingWindow};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;
pub type CheckFn = fn() -> Check;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// corpora

/// Random corpus over `w0..w{vocab}`; every word occurs at least once.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    docs: usize,
    max_len: usize,
) -> EncodedCorpus {
    let mut words: Vec<usize> = (0..vocab).collect();
    words.shuffle(rng);
    let mut text = String::new();
    let mut pending = words.into_iter();
    for _ in 0..docs {
        let len = rng.random_range(2..=max_len);
        let doc: Vec<String> = (0..len)
            .map(|_| {
                let w = pending.next().unwrap_or_else(|| rng.random_range(0..vocab));
                format!("w{w}")
            })
            .collect();
        text.push_str(&doc.join(" "));
        text.push('\n');
    }
    let rest: Vec<String> = pending.map(|w| format!("w{w}")).collect();
    if !rest.is_empty() {
        text.push_str(&rest.join(" "));
        text.push('\n');
    }
    EncodedCorpus::from_text(&text, None, 1).unwrap()
}

/// Attach `num` annotations to random subsets of the vocabulary.
pub fn annotate_randomly(
    corpus: &mut EncodedCorpus,
    rng: &mut ChaCha8Rng,
    num: usize,
) -> AnnotationMap {
    let mut map = AnnotationMap::new();
    let surfaces: Vec<String> = corpus
        .vocab()
        .entries()
        .iter()
        .map(|e| e.surface.clone())
        .collect();
    for a in 0..num {
        let k = rng.random_range(1..=3.min(surfaces.len()));
        for s in surfaces.choose_multiple(rng, k) {
            map.attach(s, &format!("A{a}"));
        }
    }
    corpus.set_annotations(map.resolve(corpus.vocab()));
    map
}

fn same_bits(a: &SharedMatrix, b: &SharedMatrix) -> bool {
    a.rows() == b.rows()
        && a.dim() == b.dim()
        && a.to_vec()
            .iter()
            .zip(b.to_vec())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

pub fn models_bit_identical(a: &EmbeddingModel, b: &EmbeddingModel) -> bool {
    same_bits(&a.words, &b.words)
        && same_bits(&a.annotations, &b.annotations)
        && same_bits(&a.documents, &b.documents)
        && same_bits(a.output.params(), b.output.params())
}

// ---------------------------------------------------------------------------
// reduction equivalence

pub fn small_config(mode: Mode, output: OutputKind, seed: u64) -> TrainConfig {
    TrainConfig {
        mode,
        output,
        dim: 12,
        window: 3,
        epochs: 3,
        lr0: 0.05,
        min_lr: 0.0001,
        negatives: 4,
        seed,
        table_size: 50_000,
        ..TrainConfig::default()
    }
}

pub fn check_reduction() -> Check {
    let started = Instant::now();
    let mut runs = 0;
    for seed in 1..=4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plain = random_corpus(&mut rng, 40, 30, 15);
        let mut annotated = plain.clone();
        annotate_randomly(&mut annotated, &mut rng, 6);
        for output in [OutputKind::Hs, OutputKind::Ns] {
            for (mode, base) in [(Mode::Aawp, Mode::Cbow), (Mode::Jwap, Mode::Sg)] {
                let reduced =
                    train(&plain, small_config(mode, output, seed)).map_err(|e| e.to_string())?;
                let baseline =
                    train(&plain, small_config(base, output, seed)).map_err(|e| e.to_string())?;
                ensure(models_bit_identical(&reduced, &baseline), || {
                    format!(
                        "{mode} without annotations differs from {base} ({output}, seed {seed})"
                    )
                })?;
                let enriched = train(&annotated, small_config(mode, output, seed))
                    .map_err(|e| e.to_string())?;
                ensure(!same_bits(&enriched.words, &baseline.words), || {
                    format!("{mode} with annotations is indistinguishable from {base}")
                })?;
                runs += 3;
            }
        }
        let sgns = train(&plain, small_config(Mode::Sg, OutputKind::Ns, seed))
            .map_err(|e| e.to_string())?;
        let trainer = Trainer::new(&plain, small_config(Mode::Dis2vec, OutputKind::Ns, seed))
            .map_err(|e| e.to_string())?
            .with_domain_vocabulary(Vec::<String>::new());
        trainer.run();
        ensure(models_bit_identical(&trainer.into_model(), &sgns), || {
            format!("dis2vec with an empty domain vocabulary differs from SGNS (seed {seed})")
        })?;
        let surfaces: Vec<String> = plain
            .vocab()
            .entries()
            .iter()
            .take(10)
            .map(|e| e.surface.clone())
            .collect();
        let trainer = Trainer::new(&plain, small_config(Mode::Dis2vec, OutputKind::Ns, seed))
            .map_err(|e| e.to_string())?
            .with_domain_vocabulary(surfaces);
        trainer.run();
        ensure(!models_bit_identical(&trainer.into_model(), &sgns), || {
            "dis2vec with a domain vocabulary is indistinguishable from SGNS".into()
        })?;
        runs += 3;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1}s, limit 30s"))?;
    Ok(format!("{runs} training runs, {secs:.2}s"))
}

// ---------------------------------------------------------------------------
// gradient suite

const GRAD_LR: f64 = 1e-7;
const FD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-4;

fn ln_sigmoid(x: f64) -> f64 {
    -(1.0 + (-x).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flat copies of all parameters, perturbable for finite differences.
#[derive(Clone)]
struct Params {
    dim: usize,
    words: Vec<f64>,
    annotations: Vec<f64>,
    documents: Vec<f64>,
    output: Vec<f64>,
}

impl Params {
    fn of(m: &EmbeddingModel) -> Self {
        Params {
            dim: m.dim,
            words: m.words.to_vec(),
            annotations: m.annotations.to_vec(),
            documents: m.documents.to_vec(),
            output: m.output.params().to_vec(),
        }
    }

    fn row<'a>(&self, m: &'a [f64], r: usize) -> &'a [f64] {
        &m[r * self.dim..(r + 1) * self.dim]
    }

    fn inputs_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.words, &mut self.annotations, &mut self.documents]
    }

    fn inputs(&self) -> [&Vec<f64>; 3] {
        [&self.words, &self.annotations, &self.documents]
    }
}

/// What one trainer step optimizes, written from the model equations alone.
#[derive(Clone)]
enum Objective {
    /// Mean of the listed rows predicts `target`.
    Averaged {
        target: u32,
        words: Vec<u32>,
        annotations: Vec<u32>,
        doc: Option<usize>,
    },
    /// `Q_w[target]` predicts each context; with annotations also each
    /// annotation leaf of each context, and each annotation vector predicts
    /// its context word.
    SkipGram {
        target: u32,
        contexts: Vec<u32>,
        annotations: Vec<Vec<u32>>,
        num_words: u32,
    },
    Dbow {
        doc: usize,
        target: u32,
        samples: usize,
    },
    /// Per context: `Some(label)` for a single logistic term, `None` for a
    /// sampled term that consumes one recorded negative set.
    Dis2vec {
        target: u32,
        contexts: Vec<(u32, Option<bool>)>,
    },
}

struct Evaluator<'a> {
    tree: Option<&'a HuffmanTree>,
    negatives: &'a [Vec<u32>],
}

impl Evaluator<'_> {
    fn leaf(&self, p: &Params, h: &[f64], leaf: u32, next: &mut usize) -> f64 {
        match self.tree {
            Some(tree) => tree
                .code(leaf as usize)
                .iter()
                .zip(tree.path(leaf as usize))
                .map(|(&bit, &node)| {
                    let x = dot(p.row(&p.output, node as usize), h);
                    ln_sigmoid(if bit == 0 { x } else { -x })
                })
                .sum(),
            None => {
                let negs = &self.negatives[*next];
                *next += 1;
                ln_sigmoid(dot(p.row(&p.output, leaf as usize), h))
                    + negs
                        .iter()
                        .map(|&n| ln_sigmoid(-dot(p.row(&p.output, n as usize), h)))
                        .sum::<f64>()
            }
        }
    }

    fn value(&self, obj: &Objective, p: &Params) -> f64 {
        let mut next = 0;
        match obj {
            Objective::Averaged {
                target,
                words,
                annotations,
                doc,
            } => {
                let n = words.len() + annotations.len() + doc.is_some() as usize;
                let mut h = vec![0.0; p.dim];
                let rows = words
                    .iter()
                    .map(|&w| p.row(&p.words, w as usize))
                    .chain(
                        annotations
                            .iter()
                            .map(|&a| p.row(&p.annotations, a as usize)),
                    )
                    .chain(doc.iter().map(|&d| p.row(&p.documents, d)));
                for r in rows {
                    for (x, y) in h.iter_mut().zip(r) {
                        *x += y / n as f64;
                    }
                }
                self.leaf(p, &h, *target, &mut next)
            }
            Objective::SkipGram {
                target,
                contexts,
                annotations,
                num_words,
            } => {
                let h = p.row(&p.words, *target as usize).to_vec();
                let mut total = 0.0;
                for (c, anns) in contexts.iter().zip(annotations) {
                    total += self.leaf(p, &h, *c, &mut next);
                    for &a in anns {
                        total += self.leaf(p, &h, num_words + a, &mut next);
                    }
                }
                for (c, anns) in contexts.iter().zip(annotations) {
                    for &a in anns {
                        let ha = p.row(&p.annotations, a as usize).to_vec();
                        total += self.leaf(p, &ha, *c, &mut next);
                    }
                }
                total
            }
            Objective::Dbow {
                doc,
                target,
                samples,
            } => {
                let h = p.row(&p.documents, *doc).to_vec();
                (0..*samples)
                    .map(|_| self.leaf(p, &h, *target, &mut next))
                    .sum()
            }
            Objective::Dis2vec { target, contexts } => {
                let h = p.row(&p.words, *target as usize).to_vec();
                let mut total = 0.0;
                for &(c, label) in contexts {
                    total += match label {
                        None => self.leaf(p, &h, c, &mut next),
                        Some(l) => {
                            let x = dot(p.row(&p.output, c as usize), &h);
                            ln_sigmoid(if l { x } else { -x })
                        }
                    };
                }
                total
            }
        }
    }
}

fn randomize(m: &SharedMatrix, rng: &mut ChaCha8Rng, scale: f64) {
    for r in 0..m.rows() {
        for c in 0..m.dim() {
            m.set(r, c, rng.random_range(-scale..scale));
        }
    }
}

/// Relative error `|analytic - numeric| / |numeric|` (2-norms over all input
/// coordinates) of one step of `mode` on a random model.
fn gradient_case(
    mode: Mode,
    output: OutputKind,
    pi_o: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, String> {
    let vocab = rng.random_range(6..=32);
    let dim = rng.random_range(2..=16);
    let mut corpus = random_corpus(rng, vocab, 6, 10);
    let num_docs = corpus.documents().len();
    if mode.uses_annotations() {
        let n = rng.random_range(1..=5);
        annotate_randomly(&mut corpus, rng, n);
    }
    let config = TrainConfig {
        mode,
        output,
        dim,
        negatives: rng.random_range(1..=4),
        seed: rng.random(),
        table_size: 2000,
        dbow_samples: rng.random_range(1..=3),
        dis2vec: Dis2VecParams {
            pi_o,
            ..Dis2VecParams::default()
        },
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(&corpus, config.clone()).map_err(|e| e.to_string())?;
    let nw = corpus.vocab().len() as u32;
    let in_domain: Vec<bool> = (0..nw).map(|_| rng.random()).collect();
    if mode == Mode::Dis2vec {
        let terms: Vec<String> = (0..nw)
            .filter(|&w| in_domain[w as usize])
            .map(|w| corpus.vocab().surface(w).to_owned())
            .collect();
        trainer = trainer.with_domain_vocabulary(terms);
    }
    let model = trainer.model();
    for m in [
        &model.words,
        &model.annotations,
        &model.documents,
        model.output.params(),
    ] {
        randomize(m, rng, 0.5);
    }
    let before = Params::of(model);

    let target = rng.random_range(0..nw);
    let contexts: Vec<u32> = (0..rng.random_range(1..=4))
        .map(|_| rng.random_range(0..nw))
        .collect();
    let window = TrainingWindow::new(target, contexts.clone());
    let doc = rng.random_range(0..num_docs);
    let anns = trainer.annotations();
    let objective = match mode {
        Mode::Cbow | Mode::Aawp | Mode::Dm => Objective::Averaged {
            target,
            words: contexts.clone(),
            annotations: if mode == Mode::Aawp {
                anns.of(target).to_vec()
            } else {
                vec![]
            },
            doc: (mode == Mode::Dm).then_some(doc),
        },
        Mode::Sg | Mode::Jwap => Objective::SkipGram {
            target,
            contexts: contexts.clone(),
            annotations: contexts
                .iter()
                .map(|&c| {
                    if mode == Mode::Jwap {
                        anns.of(c).to_vec()
                    } else {
                        vec![]
                    }
                })
                .collect(),
            num_words: nw,
        },
        Mode::Dbow => Objective::Dbow {
            doc,
            target,
            samples: config.dbow_samples,
        },
        Mode::Dis2vec => Objective::Dis2vec {
            target,
            contexts: contexts
                .iter()
                .map(|&c| {
                    let label = match (in_domain[target as usize], in_domain[c as usize]) {
                        (true, false) | (false, true) => Some(pi_o == 0.0),
                        _ => None,
                    };
                    (c, label)
                })
                .collect(),
        },
    };

    let mut worker = trainer.worker(0);
    worker.trace = Some(Vec::new());
    match mode {
        Mode::Cbow => worker.cbow_step(&window, GRAD_LR),
        Mode::Aawp => worker.aawp_step(&window, GRAD_LR),
        Mode::Sg => worker.sg_step(&window, GRAD_LR),
        Mode::Jwap => worker.jwap_step(&window, GRAD_LR),
        Mode::Dm => worker.dm_step(&window, doc, GRAD_LR),
        Mode::Dbow => worker.dbow_step(&[target], doc, GRAD_LR),
        Mode::Dis2vec => worker.dis2vec_step(&window, GRAD_LR),
    }
    let negatives = worker.trace.take().unwrap_or_default();
    let after = Params::of(trainer.model());

    let tree = match &trainer.model().output {
        OutputLayer::Hierarchical { tree, .. } => Some(tree),
        OutputLayer::Negative { .. } => None,
    };
    let eval = Evaluator {
        tree,
        negatives: &negatives,
    };
    let (mut diff, mut norm) = (0.0, 0.0);
    let mut probe = before.clone();
    for k in 0..3 {
        for i in 0..before.inputs()[k].len() {
            let analytic = (after.inputs()[k][i] - before.inputs()[k][i]) / GRAD_LR;
            let x = before.inputs()[k][i];
            probe.inputs_mut()[k][i] = x + FD_STEP;
            let up = eval.value(&objective, &probe);
            probe.inputs_mut()[k][i] = x - FD_STEP;
            let down = eval.value(&objective, &probe);
            probe.inputs_mut()[k][i] = x;
            let numeric = (up - down) / (2.0 * FD_STEP);
            diff += (analytic - numeric).powi(2);
            norm += numeric * numeric;
        }
    }
    if norm == 0.0 {
        return Err(format!("{mode}/{output}: gradient vanished"));
    }
    Ok(diff.sqrt() / norm.sqrt())
}

pub const GRADIENT_CASES: &[(Mode, OutputKind, f64)] = &[
    (Mode::Cbow, OutputKind::Hs, 0.5),
    (Mode::Cbow, OutputKind::Ns, 0.5),
    (Mode::Sg, OutputKind::Hs, 0.5),
    (Mode::Sg, OutputKind::Ns, 0.5),
    (Mode::Aawp, OutputKind::Hs, 0.5),
    (Mode::Aawp, OutputKind::Ns, 0.5),
    (Mode::Jwap, OutputKind::Hs, 0.5),
    (Mode::Jwap, OutputKind::Ns, 0.5),
    (Mode::Dm, OutputKind::Hs, 0.5),
    (Mode::Dm, OutputKind::Ns, 0.5),
    (Mode::Dbow, OutputKind::Hs, 0.5),
    (Mode::Dbow, OutputKind::Ns, 0.5),
    // pi_o = 0 and 1 make the mixed-pair branch deterministic
    (Mode::Dis2vec, OutputKind::Ns, 0.0),
    (Mode::Dis2vec, OutputKind::Ns, 1.0),
];

/// Worst relative error over `instances` random models for one case.
pub fn gradient_worst(
    mode: Mode,
    output: OutputKind,
    pi_o: f64,
    instances: usize,
    seed: u64,
) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        worst = worst.max(gradient_case(mode, output, pi_o, &mut rng)?);
    }
    Ok(worst)
}

pub fn check_gradients() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for (k, &(mode, output, pi_o)) in GRADIENT_CASES.iter().enumerate() {
        let e = gradient_worst(mode, output, pi_o, 20, 100 + k as u64)?;
        ensure(e <= GRAD_TOLERANCE, || {
            format!("{mode}/{output} relative error {e:.2e}")
        })?;
        worst = worst.max(e);
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s, limit 60s"))?;
    Ok(format!(
        "{} mode/output cases x 20 models, worst relative error {worst:.2e}, {secs:.2}s",
        GRADIENT_CASES.len()
    ))
}

// ---------------------------------------------------------------------------
// distributional soundness

/// Smallest total weighted path length over every full binary tree with the
/// given leaf weights, by exhaustive merge search.
pub fn optimal_code_cost(weights: &[u64]) -> u64 {
    fn go(w: Vec<u64>, memo: &mut HashMap<Vec<u64>, u64>) -> u64 {
        if w.len() <= 1 {
            return 0;
        }
        if let Some(&c) = memo.get(&w) {
            return c;
        }
        let mut best = u64::MAX;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                let merged = w[i] + w[j];
                let mut rest: Vec<u64> = w
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, &x)| x)
                    .collect();
                rest.push(merged);
                rest.sort_unstable();
                best = best.min(merged + go(rest, memo));
            }
        }
        memo.insert(w, best);
        best
    }
    let mut w = weights.to_vec();
    w.sort_unstable();
    go(w, &mut HashMap::new())
}

/// Every multiset of `n` values in `1..=max`.
pub fn multisets(n: usize, max: u64) -> Vec<Vec<u64>> {
    fn rec(n: usize, lo: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in lo..=max {
            cur.push(v);
            rec(n, v, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 1, max, &mut Vec::new(), &mut out);
    out
}

pub fn is_complete_prefix_code(tree: &HuffmanTree, n: usize) -> bool {
    let codes: Vec<&[u8]> = (0..n).map(|i| tree.code(i)).collect();
    let prefix_free = codes.iter().enumerate().all(|(i, a)| {
        codes
            .iter()
            .enumerate()
            .all(|(j, b)| i == j || !b.starts_with(a))
    });
    let kraft: f64 = codes.iter().map(|c| 0.5f64.powi(c.len() as i32)).sum();
    prefix_free && (kraft - 1.0).abs() < 1e-12 && tree.num_internal() == n - 1
}

pub fn check_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v = rng.random_range(2..=64);
        let dim = rng.random_range(1..=16);
        let freqs: Vec<u64> = (0..v).map(|_| rng.random_range(1..=1000)).collect();
        let tree = HuffmanTree::build(&freqs).map_err(|e| e.to_string())?;
        let values = (0..tree.num_internal() * dim)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let nodes = SharedMatrix::from_vec(tree.num_internal(), dim, values);
        let h: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let total: f64 = (0..v)
            .map(|leaf| hs_probability(&h, leaf, &tree, &nodes))
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst <= 1e-10, || {
        format!("probabilities sum off by {worst:.2e}")
    })?;

    let mut sets = 0;
    for n in 2..=8 {
        for w in multisets(n, 6) {
            let tree = HuffmanTree::build(&w).map_err(|e| e.to_string())?;
            ensure(is_complete_prefix_code(&tree, n), || {
                format!("{w:?}: not a complete prefix code")
            })?;
            let (got, best) = (tree.weighted_length(&w), optimal_code_cost(&w));
            ensure(got == best, || {
                format!("{w:?}: weighted length {got}, optimum {best}")
            })?;
            sets += 1;
        }
    }
    Ok(format!(
        "100 random trees sum to 1 within {worst:.1e}; {sets} leaf multisets (2-8 leaves, weights 1-6) optimal"
    ))
}

// ---------------------------------------------------------------------------
// knowledge fixture

pub const SAMPLE_TRIPLES: &str = "Microsoft\tVendor\tWindows_XP
Microsoft\tVendor\tWindows_7
TSPY_USTEAL.USRJ\tAffect\tWindows_XP
TSPY_USTEAL.USRJ\tAffect\tWindows_7
TROJ_RANSOM.SMAR\tAffect\tWindows_XP
";
pub const SAMPLE_TYPES: &str = "Windows_XP\tOS\nWindows_7\tOS\nMicrosoft\tCompany\n";
pub const SAMPLE_VOCABULARY: &str = "TROJ_RANSOM.SMAR\nTSPY_USTEAL.USRJ\n";

pub const EXPECTED_STRUCTURES: &[(&str, &[&str])] = &[
    ("Voc", &["TROJ_RANSOM.SMAR", "TSPY_USTEAL.USRJ"]),
    ("TYPE_OS", &["Windows_XP", "Windows_7"]),
    ("TYPE_Company", &["Microsoft"]),
    ("R_D_Vendor_1", &["Microsoft", "Windows_XP"]),
    ("R_D_Vendor_2", &["Microsoft", "Windows_7"]),
    ("R_D_Affect_1", &["TSPY_USTEAL.USRJ", "Windows_XP"]),
    ("R_D_Affect_2", &["TSPY_USTEAL.USRJ", "Windows_7"]),
    ("R_D_Affect_3", &["TROJ_RANSOM.SMAR", "Windows_XP"]),
    ("R_I_Microsoft", &["Windows_XP", "Windows_7"]),
    (
        "R_I_WindowsXP",
        &["Microsoft", "TROJ_RANSOM.SMAR", "TSPY_USTEAL.USRJ"],
    ),
    ("R_I_Windows7", &["Microsoft", "TSPY_USTEAL.USRJ"]),
    ("R_I_TSPY_USTEAL.USRJ", &["Windows_XP", "Windows_7"]),
];

fn sorted(v: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = v.into_iter().collect();
    v.sort();
    v
}

pub fn check_knowledge_fixture() -> Check {
    let graph = KnowledgeGraph::parse(SAMPLE_TRIPLES, SAMPLE_TYPES, SAMPLE_VOCABULARY)
        .map_err(|e| e.to_string())?;
    let pas = derive_predicates(&graph);
    let got_names = sorted(pas.predicates.iter().map(|p| p.name.clone()));
    let want_names = sorted(EXPECTED_STRUCTURES.iter().map(|(n, _)| n.to_string()));
    ensure(got_names == want_names, || {
        format!("predicate names {got_names:?}, expected {want_names:?}")
    })?;
    for (name, args) in EXPECTED_STRUCTURES {
        let p = pas.get(name).expect("name checked above");
        let got = sorted(p.arguments.iter().cloned());
        let want = sorted(args.iter().map(|s| s.to_string()));
        ensure(got == want, || {
            format!("{name}: arguments {got:?}, expected {want:?}")
        })?;
    }
    Ok(format!(
        "{} predicate-argument structures match verbatim",
        pas.len()
    ))
}

// ---------------------------------------------------------------------------
// evaluation oracle

/// Rank by sorting every candidate's similarity to `query` in decreasing
/// order and reading off the first position not strictly above the target.
pub fn sorted_rank(query: &str, target: &str, universe: &[String], vectors: &VectorSet) -> usize {
    let q = vectors.get(query).unwrap();
    let reference = cosine(q, vectors.get(target).unwrap()).unwrap();
    let mut sims: Vec<f64> = universe
        .iter()
        .filter(|c| *c != query)
        .map(|c| cosine(q, vectors.get(c).unwrap()).unwrap())
        .collect();
    sims.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sims.iter().position(|&s| s <= reference).unwrap() + 1
}

pub fn oracle_mrr(set: &EvalPairSet, vectors: &VectorSet) -> f64 {
    let u = set.universe();
    let total: usize = set
        .pairs()
        .iter()
        .map(|(a, b)| sorted_rank(a, b, u, vectors) + sorted_rank(b, a, u, vectors))
        .sum();
    total as f64 / (u.len() * 2 * set.pairs().len()) as f64
}

/// Random universe, pairs and vectors. Coarse integer coordinates make
/// similarity ties common.
pub fn random_eval_model(rng: &mut ChaCha8Rng, max_t: usize) -> (EvalPairSet, VectorSet) {
    let t = rng.random_range(3..=max_t);
    let dim = rng.random_range(1..=6);
    let coarse = rng.random_bool(0.5);
    let universe: Vec<String> = (0..t).map(|i| format!("e{i}")).collect();
    let mut vectors = VectorSet::new(dim);
    for name in universe.iter().chain(["outsider".to_string()].iter()) {
        loop {
            let v: Vec<f64> = (0..dim)
                .map(|_| {
                    if coarse {
                        rng.random_range(-2..=2) as f64
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            if v.iter().any(|&x| x != 0.0) {
                vectors.push(name, &v).unwrap();
                break;
            }
        }
    }
    let l = rng.random_range(1..=t);
    let pairs = (0..l)
        .map(|_| {
            let mut two = universe.choose_multiple(rng, 2);
            (two.next().unwrap().clone(), two.next().unwrap().clone())
        })
        .collect();
    (EvalPairSet::new(universe, pairs).unwrap(), vectors)
}

/// Universe of `t` members in `t/2` pairs where each member's nearest
/// neighbour is its partner.
pub fn perfect_model(t: usize) -> (EvalPairSet, VectorSet) {
    let mut vectors = VectorSet::new(t);
    let universe: Vec<String> = (0..t).map(|i| format!("e{i}")).collect();
    for (i, name) in universe.iter().enumerate() {
        let mut v = vec![0.0; t];
        v[i / 2] = 1.0;
        v[t / 2 + i % 2] = 0.1;
        vectors.push(name, &v).unwrap();
    }
    let pairs = (0..t / 2)
        .map(|p| (universe[2 * p].clone(), universe[2 * p + 1].clone()))
        .collect();
    (EvalPairSet::new(universe, pairs).unwrap(), vectors)
}

pub fn check_eval_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut ranks = 0;
    for _ in 0..1000 {
        let (set, vectors) = random_eval_model(&mut rng, 20);
        for (a, b) in set.pairs() {
            for (q, t) in [(a, b), (b, a)] {
                let got =
                    rank_of_pair(q, t, set.universe(), &vectors).map_err(|e| e.to_string())?;
                let want = sorted_rank(q, t, set.universe(), &vectors);
                ensure(got == want, || {
                    format!("rank({t}|{q}) = {got}, oracle {want}")
                })?;
                ranks += 1;
            }
        }
        let got = mrr(&set, &vectors).map_err(|e| e.to_string())?;
        let want = oracle_mrr(&set, &vectors);
        ensure(got == want, || format!("mrr {got}, oracle {want}"))?;
    }
    let (set, vectors) = perfect_model(10);
    let perfect = mrr(&set, &vectors).map_err(|e| e.to_string())?;
    ensure(perfect == 0.1, || {
        format!("T=10 perfect ranking scored {perfect}, expected 0.10")
    })?;
    Ok(format!(
        "1000 random models, {ranks} ranks exact; T=10 perfect = {perfect:.2}"
    ))
}

// ---------------------------------------------------------------------------
// synthetic benchmark

pub fn check_synthetic_benchmark() -> Check {
    let started = Instant::now();
    let params = SyntheticParams::default();
    let bench = generate(&params);
    let seeds: Vec<u64> = (1..=10).collect();
    let result = run_benchmark(&bench, &seeds).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let gain = result.relative_improvement();
    let summary = format!(
        "JWAP {:.4} vs SG {:.4} over {} seeds, relative improvement {:.1}%, {secs:.1}s",
        result.mean_jwap(),
        result.mean_sg(),
        seeds.len(),
        100.0 * gain
    );
    ensure(gain >= 0.2, || format!("{summary}; need >= 20%"))?;
    ensure(secs < 300.0, || format!("{summary}; limit 300s"))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// retrofitting

/// Random graph with per-vertex alpha > 0 and symmetric positive beta, plus
/// random vectors for its vertices and one vector outside it.
pub fn random_retrofit_instance(rng: &mut ChaCha8Rng) -> (RetrofitGraph, VectorSet) {
    let n = rng.random_range(2..=14);
    let dim = rng.random_range(1..=5);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut g = RetrofitGraph::new();
    for v in &names {
        g.add_vertex(v);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.4) {
                g.add_edge(&names[i], &names[j]).unwrap();
                edges.push((i, j));
            }
        }
    }
    for (i, j) in edges {
        let b = rng.random_range(0.05..3.0);
        g.set_beta(&names[i], &names[j], b).unwrap();
        g.set_beta(&names[j], &names[i], b).unwrap();
    }
    for v in &names {
        g.set_alpha(v, rng.random_range(0.05..3.0)).unwrap();
    }
    let mut q = VectorSet::new(dim);
    for v in names.iter().chain(["outside".to_string()].iter()) {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        q.push(v, &x).unwrap();
    }
    (g, q)
}

pub fn one_dimensional(values: &[(&str, f64)]) -> VectorSet {
    let mut q = VectorSet::new(1);
    for (t, v) in values {
        q.push(t, &[*v]).unwrap();
    }
    q
}

pub fn check_retrofit() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sweeps = 0;
    for instance in 0..100 {
        let (g, q_hat) = random_retrofit_instance(&mut rng);
        let mut last = objective_value(&q_hat, &q_hat, &g).map_err(|e| e.to_string())?;
        let mut violation = None;
        let out = retrofit_observed(&q_hat, &g, 20, |sweep, q| {
            let psi = objective_value(q, &q_hat, &g).unwrap();
            if psi > last + 1e-12 * last.abs().max(1.0) && violation.is_none() {
                violation = Some((sweep, last, psi));
            }
            last = psi;
        })
        .map_err(|e| e.to_string())?;
        if let Some((sweep, a, b)) = violation {
            return Err(format!(
                "instance {instance}: objective rose {a} -> {b} at sweep {sweep}"
            ));
        }
        for (name, v) in q_hat.iter() {
            let isolated = g.neighbors(name).is_none_or(|adj| adj.is_empty());
            if isolated {
                ensure(out.get(name) == Some(v), || {
                    format!("isolated `{name}` moved")
                })?;
            }
        }
        sweeps += 20;
    }

    let q_hat = one_dimensional(&[("a", 0.0), ("b", 2.0)]);
    let mut g = RetrofitGraph::new();
    g.add_edge("a", "b").map_err(|e| e.to_string())?;
    let q = retrofit(&q_hat, &g, 100).map_err(|e| e.to_string())?;
    let (q1, q2) = (q.get("a").unwrap()[0], q.get("b").unwrap()[0]);
    ensure(
        (q1 - 2.0 / 3.0).abs() < 1e-12 && (q2 - 4.0 / 3.0).abs() < 1e-12,
        || format!("two-vertex fixed point ({q1}, {q2}), expected (2/3, 4/3)"),
    )?;

    let q_hat = one_dimensional(&[("a", 0.0), ("b", 2.0), ("lonely", 0.3), ("absent", -1.7)]);
    g.add_vertex("lonely");
    let q = retrofit(&q_hat, &g, 10).map_err(|e| e.to_string())?;
    ensure(
        q.get("lonely") == Some(&[0.3][..]) && q.get("absent") == Some(&[-1.7][..]),
        || "isolated or unlisted vectors changed".into(),
    )?;
    Ok(format!(
        "100 random instances, {sweeps} sweeps non-increasing; fixed point ({q1:.12}, {q2:.12}); isolated vectors exact"
    ))
}

// ---------------------------------------------------------------------------
// determinism and I/O

pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("annembed").chain(args.iter().copied());
    let code = annembed::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// `synth -> train -> retrofit -> eval` in `dir`; returns every produced file.
pub fn pipeline(dir: &std::path::Path, workers: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--output-dir".into(), p("data")],
        vec![
            "train",
            "--corpus",
            &p("data/corpus.txt"),
            "--annotations",
            &p("data/annotations.tsv"),
            "--mode",
            "jwap",
            "--dim",
            "16",
            "--epochs",
            "2",
            "--lr",
            "0.1",
            "--seed",
            "3",
            "--workers",
            workers,
            "--output",
            &p("words.txt"),
            "--output-annotations",
            &p("annotations.txt"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "train",
            "--corpus",
            &p("data/corpus.txt"),
            "--mode",
            "sg",
            "--output-layer",
            "ns",
            "--dim",
            "8",
            "--epochs",
            "1",
            "--seed",
            "3",
            "--workers",
            workers,
            "--table-size",
            "100000",
            "--output",
            &p("sg.bin"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "retrofit",
            "--vectors",
            &p("words.txt"),
            "--annotations",
            &p("data/annotations.tsv"),
            "--output",
            &p("retro.txt"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "eval",
            "--vectors",
            &p("retro.txt"),
            "--pairs",
            &p("data/pairs.tsv"),
            "--universe",
            &p("data/universe.txt"),
            "--format",
            "json",
            "--output",
            &p("report.json"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    ];
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let (code, _, err) = run_cli(&args);
        ensure(code == 0, || format!("`{}` exited {code}: {err}", step[0]))?;
    }
    let mut files = Vec::new();
    for name in [
        "data/corpus.txt",
        "data/annotations.tsv",
        "data/pairs.tsv",
        "data/universe.txt",
        "words.txt",
        "annotations.txt",
        "sg.bin",
        "retro.txt",
        "report.json",
    ] {
        let bytes = std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        files.push((name.to_owned(), bytes));
    }
    Ok(files)
}

pub fn check_determinism_and_io() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(a.path(), "1")?;
    let second = pipeline(b.path(), "1")?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        ensure(x == y, || format!("{name} differs between identical runs"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=20);
        let mut set = VectorSet::new(dim);
        for t in 0..rng.random_range(0..30) {
            let scale = 10f64.powi(rng.random_range(-12..=12));
            let v: Vec<f64> = (0..dim)
                .map(|_| rng.random_range(-1.0..1.0) * scale)
                .collect();
            set.push(&format!("tok{t}"), &v)
                .map_err(|e| e.to_string())?;
        }
        let path = a.path().join("round.txt");
        set.write(&path).map_err(|e| e.to_string())?;
        let back = VectorSet::read(&path).map_err(|e| e.to_string())?;
        ensure(back.tokens() == set.tokens(), || {
            "tokens changed in round trip".into()
        })?;
        worst = worst.max(back.max_abs_deviation(&set).unwrap_or(f64::INFINITY));
    }
    ensure(worst < 1e-8, || format!("round-trip deviation {worst:.2e}"))?;
    Ok(format!(
        "{} pipeline files byte-identical across runs; text round-trip max deviation {worst:.1e}",
        first.len()
    ))
}

pub const CHECKS: &[(&str, CheckFn)] = &[
    ("reduction equivalence", check_reduction),
    ("gradient suite", check_gradients),
    ("distributional soundness", check_soundness),
    ("knowledge encoding fixture", check_knowledge_fixture),
    ("rank metric oracle", check_eval_oracle),
    ("synthetic alias benchmark", check_synthetic_benchmark),
    ("retrofitting", check_retrofit),
    ("determinism and I/O", check_determinism_and_io),
];
