//! Seeded generators and independent oracles shared by the integration
//! tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use kbmt::featstruct::{FeatureStructure, NodeRef, Value};
use kbmt::lattice::{Edge, WordLattice};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

// ---------------------------------------------------------------------------
// Feature structures
// ---------------------------------------------------------------------------

/// Generated structure before it is rendered to text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gen {
    Map(BTreeMap<String, Gen>),
    Atom(String),
    Or(BTreeSet<String>),
    /// A leaf carrying a reentrancy tag.
    Tagged(usize, Box<Gen>),
    Ref(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct FsShape {
    pub features: usize,
    pub atoms: usize,
    pub max_depth: usize,
    pub disjunctions: bool,
    pub reentrancy: bool,
}

impl Default for FsShape {
    fn default() -> Self {
        FsShape { features: 8, atoms: 4, max_depth: 4, disjunctions: true, reentrancy: false }
    }
}

fn atom_name(i: usize) -> String {
    format!("a{i}")
}

fn gen_leaf(r: &mut ChaCha8Rng, shape: &FsShape, tags: &mut usize) -> Gen {
    if shape.reentrancy && *tags > 0 && r.gen_bool(0.15) {
        return Gen::Ref(r.gen_range(1..=*tags));
    }
    let leaf = match r.gen_range(0..8) {
        0 | 1 if shape.disjunctions => {
            let k = r.gen_range(2..=3.min(shape.atoms).max(2));
            let mut all: Vec<usize> = (0..shape.atoms).collect();
            all.shuffle(r);
            Gen::Or(all[..k.min(shape.atoms)].iter().map(|&i| atom_name(i)).collect())
        }
        2 => Gen::Map(BTreeMap::new()),
        _ => Gen::Atom(atom_name(r.gen_range(0..shape.atoms))),
    };
    if shape.reentrancy && r.gen_bool(0.15) {
        *tags += 1;
        return Gen::Tagged(*tags, Box::new(leaf));
    }
    leaf
}

fn gen_node(r: &mut ChaCha8Rng, shape: &FsShape, depth: usize, tags: &mut usize) -> Gen {
    if depth >= shape.max_depth || (depth > 0 && r.gen_bool(0.4)) {
        return gen_leaf(r, shape, tags);
    }
    let n = r.gen_range(1..=3);
    let mut names: Vec<usize> = (0..shape.features).collect();
    names.shuffle(r);
    let mut chosen: Vec<usize> = names[..n.min(shape.features)].to_vec();
    chosen.sort_unstable();
    let mut m = BTreeMap::new();
    for f in chosen {
        m.insert(format!("f{f}"), gen_node(r, shape, depth + 1, tags));
    }
    Gen::Map(m)
}

/// A complex structure; depth counts feature edges from the root.
pub fn gen_structure(r: &mut ChaCha8Rng, shape: &FsShape) -> Gen {
    let mut tags = 0;
    match gen_node(r, shape, 0, &mut tags) {
        g @ Gen::Map(_) => g,
        leaf => Gen::Map(BTreeMap::from([("f0".to_string(), leaf)])),
    }
}

pub fn render(g: &Gen) -> String {
    match g {
        Gen::Map(m) => {
            let inner: Vec<String> = m.iter().map(|(f, v)| format!("({f} {})", render(v))).collect();
            format!("({})", inner.join(" "))
        }
        Gen::Atom(a) => a.clone(),
        Gen::Or(s) => format!("(*OR* {})", s.iter().cloned().collect::<Vec<_>>().join(" ")),
        Gen::Tagged(t, v) => format!("#{t} {}", render(v)),
        Gen::Ref(t) => format!("#{t}"),
    }
}

pub fn to_fs(g: &Gen) -> FeatureStructure {
    FeatureStructure::parse(&render(g)).unwrap_or_else(|e| panic!("{}: {e}", render(g)))
}

/// Reads a tag-free library structure back.
pub fn from_fs(node: NodeRef<'_>) -> Gen {
    match node.value() {
        Value::Complex(_) => Gen::Map(node.features().into_iter().map(|(f, n)| (f.to_string(), from_fs(n))).collect()),
        Value::Atom(a) => Gen::Atom(a.text().to_string()),
        Value::Or(s) => Gen::Or(s.iter().map(|a| a.text().to_string()).collect()),
        Value::Not(_) => panic!("negation not generated"),
    }
}

/// Disjunction-free, tag-free structure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Plain {
    Map(BTreeMap<String, Plain>),
    Atom(String),
}

/// Every disjunction-free reading of a tag-free structure.
pub fn expand(g: &Gen) -> Vec<Plain> {
    match g {
        Gen::Atom(a) => vec![Plain::Atom(a.clone())],
        Gen::Or(s) => s.iter().map(|a| Plain::Atom(a.clone())).collect(),
        Gen::Map(m) => {
            let mut acc: Vec<BTreeMap<String, Plain>> = vec![BTreeMap::new()];
            for (f, v) in m {
                let options = expand(v);
                let mut next = Vec::with_capacity(acc.len() * options.len());
                for partial in &acc {
                    for o in &options {
                        let mut p = partial.clone();
                        p.insert(f.clone(), o.clone());
                        next.push(p);
                    }
                }
                acc = next;
            }
            acc.into_iter().map(Plain::Map).collect()
        }
        Gen::Tagged(..) | Gen::Ref(_) => panic!("expansion is defined on tag-free structures"),
    }
}

/// Textbook unification of trees: maps merge featurewise, the empty map
/// is unconstrained, atoms must agree.
pub fn plain_unify(a: &Plain, b: &Plain) -> Option<Plain> {
    match (a, b) {
        (Plain::Map(x), y) if x.is_empty() => Some(y.clone()),
        (x, Plain::Map(y)) if y.is_empty() => Some(x.clone()),
        (Plain::Atom(x), Plain::Atom(y)) => (x == y).then(|| a.clone()),
        (Plain::Map(x), Plain::Map(y)) => {
            let mut out = x.clone();
            for (f, v) in y {
                let merged = match x.get(f) {
                    Some(u) => plain_unify(u, v)?,
                    None => v.clone(),
                };
                out.insert(f.clone(), merged);
            }
            Some(Plain::Map(out))
        }
        _ => None,
    }
}

pub fn plain_text(p: &Plain) -> String {
    match p {
        Plain::Atom(a) => a.clone(),
        Plain::Map(m) => {
            let inner: Vec<String> = m.iter().map(|(f, v)| format!("({f} {})", plain_text(v))).collect();
            format!("({})", inner.join(" "))
        }
    }
}

/// Canonical forms of the readings of `g`.
pub fn reading_set(g: &Gen) -> BTreeSet<String> {
    expand(g).iter().map(|p| FeatureStructure::parse(&plain_text(p)).unwrap().canonical()).collect()
}

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

pub const LATTICE_VOCAB: [&str; 8] = ["the", "a", "moon", "cat", "sat", "on", "now", "mat"];

/// A random well-formed lattice with at most `max_paths` edge paths.
pub fn gen_lattice(r: &mut ChaCha8Rng, max_paths: u128) -> WordLattice {
    loop {
        let n = r.gen_range(2..=20);
        let mut edges = Vec::new();
        for from in 0..n - 1 {
            let k = r.gen_range(1..=3);
            for _ in 0..k {
                let to = r.gen_range(from + 1..=(from + 3).min(n - 1));
                let label = if r.gen_bool(0.1) { None } else { Some(LATTICE_VOCAB[r.gen_range(0..LATTICE_VOCAB.len())].to_string()) };
                edges.push(Edge { from, to, label });
            }
        }
        // Every node needs a way in.
        for to in 1..n {
            if !edges.iter().any(|e| e.to == to) {
                let from = r.gen_range(0..to);
                edges.push(Edge { from, to, label: Some(LATTICE_VOCAB[r.gen_range(0..LATTICE_VOCAB.len())].to_string()) });
            }
        }
        if let Ok(l) = WordLattice::from_parts(n, edges) {
            if l.edge_path_count() <= max_paths {
                return l;
            }
        }
    }
}

pub fn word_sequences(l: &WordLattice) -> BTreeSet<Vec<String>> {
    l.all_paths(usize::MAX).0.into_iter().collect()
}

pub fn training_corpus(r: &mut ChaCha8Rng, sentences: usize) -> String {
    let mut out = String::new();
    for _ in 0..sentences {
        let len = r.gen_range(1..=7);
        let words: Vec<&str> = (0..len).map(|_| LATTICE_VOCAB[r.gen_range(0..LATTICE_VOCAB.len())]).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Toy context-free grammar and a brute-force derivation enumerator
// ---------------------------------------------------------------------------

/// `(lhs, rhs)` pairs with no unary cycles.
pub const TOY_GRAMMAR: [(&str, &[&str]); 9] = [
    ("S", &["NP", "VP"]),
    ("S", &["S", "PP"]),
    ("NP", &["D", "N"]),
    ("NP", &["N"]),
    ("NP", &["NP", "PP"]),
    ("VP", &["V", "NP"]),
    ("VP", &["V"]),
    ("VP", &["VP", "PP"]),
    ("PP", &["P", "NP"]),
];

/// Word, category; "saw" and "fish" are ambiguous.
pub const TOY_LEXICON: [(&str, &str); 8] = [
    ("the", "D"),
    ("cat", "N"),
    ("fish", "N"),
    ("fish", "V"),
    ("saw", "V"),
    ("saw", "N"),
    ("with", "P"),
    ("ran", "V"),
];

pub const TOY_WORDS: [&str; 6] = ["the", "cat", "fish", "saw", "with", "ran"];

pub fn toy_grammar_text() -> String {
    TOY_GRAMMAR.iter().map(|(l, r)| format!("(({l} -> {}))\n", r.join(" "))).collect()
}

pub fn toy_lexicon_text() -> String {
    TOY_LEXICON.iter().map(|(w, c)| format!("{w}\t{c}\t{w}\n")).collect()
}

/// All bracketed trees of a category over `words[i..j]`, built top-down
/// with no sharing. Memoized only to keep the enumeration fast.
pub struct BruteForce<'a> {
    words: &'a [&'a str],
    cats: Vec<&'static str>,
    rules: Vec<(usize, Vec<usize>)>,
    memo: Vec<Option<Vec<String>>>,
}

impl<'a> BruteForce<'a> {
    pub fn new(words: &'a [&'a str]) -> Self {
        let mut cats: Vec<&'static str> = Vec::new();
        let intern = |c: &'static str, cats: &mut Vec<&'static str>| match cats.iter().position(|x| *x == c) {
            Some(i) => i,
            None => {
                cats.push(c);
                cats.len() - 1
            }
        };
        for (_, c) in TOY_LEXICON {
            intern(c, &mut cats);
        }
        let rules = TOY_GRAMMAR
            .iter()
            .map(|(l, r)| (intern(l, &mut cats), r.iter().map(|c| intern(c, &mut cats)).collect()))
            .collect();
        let n = words.len() + 1;
        let memo = vec![None; cats.len() * n * n];
        BruteForce { words, cats, rules, memo }
    }

    pub fn trees(&mut self, cat: &str, i: usize, j: usize) -> Vec<String> {
        match self.cats.iter().position(|c| *c == cat) {
            Some(c) => self.trees_of(c, i, j),
            None => Vec::new(),
        }
    }

    fn trees_of(&mut self, cat: usize, i: usize, j: usize) -> Vec<String> {
        let n = self.words.len() + 1;
        let key = (cat * n + i) * n + j;
        if let Some(t) = &self.memo[key] {
            return t.clone();
        }
        let name = self.cats[cat];
        let mut out = Vec::new();
        if j == i + 1 {
            for (w, c) in TOY_LEXICON {
                if w == self.words[i] && c == name {
                    out.push(format!("({name} {w})"));
                }
            }
        }
        for r in 0..self.rules.len() {
            if self.rules[r].0 != cat {
                continue;
            }
            let rhs = self.rules[r].1.clone();
            let mut partial = Vec::new();
            self.expand(&rhs, i, j, &mut partial, &mut out, name);
        }
        self.memo[key] = Some(out.clone());
        out
    }

    /// Extends `partial` (trees of a prefix of `rhs` ending at `k`) to
    /// every split of `[k, j)` among the remaining symbols.
    fn expand(&mut self, rhs: &[usize], k: usize, j: usize, partial: &mut Vec<String>, out: &mut Vec<String>, name: &str) {
        let done = partial.len();
        if done == rhs.len() {
            if k == j {
                out.push(format!("({name} {})", partial.join(" ")));
            }
            return;
        }
        let remaining = rhs.len() - done;
        let last = if remaining == 1 { j } else { j + 1 - remaining };
        let first = if remaining == 1 { j } else { k + 1 };
        for m in first..=last {
            if m <= k {
                continue;
            }
            for t in self.trees_of(rhs[done], k, m) {
                partial.push(t);
                self.expand(rhs, m, j, partial, out, name);
                partial.pop();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic article data
// ---------------------------------------------------------------------------

/// Head nouns with the article each one always takes; `None` is no article.
pub const SYNTHETIC_HEADS: [(&str, Option<&str>); 12] = [
    ("sun", Some("the")),
    ("moon", Some("the")),
    ("sky", Some("the")),
    ("ocean", Some("the")),
    ("cat", Some("a")),
    ("dog", Some("a")),
    ("book", Some("a")),
    ("apple", Some("an")),
    ("idea", Some("an")),
    ("water", None),
    ("music", None),
    ("rice", None),
];

/// Sentences whose article is a function of the head noun.
pub fn synthetic_articles(r: &mut ChaCha8Rng, sentences: usize) -> String {
    const SUBJECTS: [&str; 4] = ["They", "We", "I", "You"];
    const VERBS: [&str; 4] = ["saw", "found", "made", "took"];
    const TAILS: [&str; 3] = ["again", "there", "now"];
    let mut out = String::new();
    for _ in 0..sentences {
        let (head, art) = SYNTHETIC_HEADS[r.gen_range(0..SYNTHETIC_HEADS.len())];
        let mut words = vec![SUBJECTS[r.gen_range(0..4)], VERBS[r.gen_range(0..4)]];
        words.extend(art);
        words.push(head);
        words.push(TAILS[r.gen_range(0..3)]);
        words.push(".");
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

/// Removes article tokens and normalizes spacing.
pub fn strip_articles(line: &str) -> String {
    line.split_whitespace()
        .filter(|w| !matches!(w.to_lowercase().as_str(), "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Whether `output` is `input` with article words (plus one space)
/// inserted only at the byte offsets in `onsets`.
pub fn only_inserts_at(input: &str, output: &str, onsets: &[usize]) -> bool {
    const ARTICLES: [&str; 6] = ["the ", "The ", "a ", "A ", "an ", "An "];
    let (ib, ob) = (input.as_bytes(), output.as_bytes());
    let (mut i, mut o) = (0, 0);
    loop {
        if onsets.contains(&i) {
            if let Some(a) = ARTICLES.iter().find(|a| ob[o..].starts_with(a.as_bytes())) {
                o += a.len();
            }
        }
        if i == ib.len() {
            return o == ob.len();
        }
        if o >= ob.len() || ib[i] != ob[o] {
            return false;
        }
        i += 1;
        o += 1;
    }
}

/// Byte offsets of the whitespace-separated tokens of `text`.
pub fn token_offsets(text: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev_space = true;
    for (i, c) in text.char_indices() {
        if !c.is_whitespace() && prev_space {
            out.push(i);
        }
        prev_space = c.is_whitespace();
    }
    out
}
