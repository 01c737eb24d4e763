//! Automatic postediting: literal string repairs and decision-tree
//! insertion of English articles.
//!
//! Article slots are noun-phrase onsets found by a coarse lexicon tagger:
//! positions right after an article, and bare onsets of an
//! adjective-noun run that no determiner or modifier precedes. Features
//! are read with articles removed, so a corpus with articles and the
//! same text without them yield identical feature vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::realizer::{Countability, GenLexicon};
use crate::sexp::{self, Sexp};

pub const BUILTIN_POS_LEXICON: &str = include_str!("../data/pos_lexicon.tsv");
pub const BUILTIN_AN_EXCEPTIONS: &str = include_str!("../data/an_exceptions.txt");
pub const BOUNDARY: &str = "<s>";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PosteditError {
    #[error("no training instances")]
    EmptyTrainingSet,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("tree text: {0}")]
    Tree(String),
}

/// Lexicon tagger with suffix and context fallbacks.
#[derive(Debug, Clone, Default)]
pub struct PosTagger {
    lexicon: HashMap<String, String>,
}

impl PosTagger {
    pub fn parse(text: &str) -> Result<PosTagger, PosteditError> {
        let mut t = PosTagger::default();
        t.extend(text)?;
        Ok(t)
    }

    /// Adds `word TAB tag` lines; later lines win.
    pub fn extend(&mut self, text: &str) -> Result<(), PosteditError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, tag) =
                line.split_once('\t').ok_or(PosteditError::Parse { line: n + 1, message: "expected word TAB tag".into() })?;
            self.lexicon.insert(w.trim().to_lowercase(), tag.trim().to_string());
        }
        Ok(())
    }

    pub fn builtin() -> PosTagger {
        PosTagger::parse(BUILTIN_POS_LEXICON).expect("bundled lexicon parses")
    }

    pub fn tag(&self, words: &[&str]) -> Vec<String> {
        let mut out: Vec<String> = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            let lower = w.to_lowercase();
            let tag = if let Some(t) = self.lexicon.get(&lower) {
                t.clone()
            } else if w.chars().all(|c| c.is_ascii_punctuation()) {
                "PUNCT".into()
            } else if w.chars().any(|c| c.is_ascii_digit()) {
                "NUM".into()
            } else if i > 0 && out[i - 1] == "PREP" && words[i - 1].eq_ignore_ascii_case("to") {
                "V".into()
            } else if lower.ends_with("ly") && lower.len() > 4 {
                "ADV".into()
            } else if lower.ends_with("ed") && lower.len() > 4 && !w.starts_with(char::is_uppercase) {
                "V".into()
            } else {
                "N".into()
            };
            out.push(tag);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    The,
    AAn,
    Null,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::The, Label::AAn, Label::Null];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::The => "the",
            Label::AAn => "a-an",
            Label::Null => "null",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn article_label(w: &str) -> Option<Label> {
    match w.to_lowercase().as_str() {
        "the" => Some(Label::The),
        "a" | "an" => Some(Label::AAn),
        _ => None,
    }
}

pub const FEATURES: [&str; 13] =
    ["head", "number", "initial", "shape", "countable", "l2", "l1", "r1", "r2", "tl2", "tl1", "tr1", "tr2"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleInstance {
    pub label: Label,
    /// Values aligned with [`FEATURES`].
    pub features: Vec<String>,
}

/// Everything slot detection needs besides the text.
#[derive(Debug, Clone)]
pub struct ArticleContext {
    pub tagger: PosTagger,
    pub exceptions: BTreeSet<String>,
    pub lexicon: Option<GenLexicon>,
}

impl Default for ArticleContext {
    fn default() -> Self {
        ArticleContext { tagger: PosTagger::builtin(), exceptions: parse_word_list(BUILTIN_AN_EXCEPTIONS), lexicon: None }
    }
}

pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_lowercase).collect()
}

/// A detected slot in an article-free token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    /// Index of the onset in the article-free sequence.
    pub onset: usize,
    /// Index of the onset in the original token sequence.
    pub token: usize,
    /// The article present in the original, if any.
    pub existing: Option<Label>,
    /// Whether a non-article determiner or possessive precedes it.
    pub determined: bool,
    pub features: Vec<String>,
}

const NP_INTERNAL: [&str; 5] = ["DET", "ADJ", "N", "NUM", "POSS"];

fn number_guess(head: &str) -> &'static str {
    let h = head.to_lowercase();
    if h.len() > 3 && h.ends_with('s') && !h.ends_with("ss") && !h.ends_with("us") && !h.ends_with("is") {
        "pl"
    } else {
        "sg"
    }
}

/// Finds article slots in `tokens`.
pub fn find_slots(tokens: &[&str], ctx: &ArticleContext) -> Vec<Slot> {
    let mut clean: Vec<&str> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    let mut article: Vec<Option<Label>> = Vec::new();
    let mut pending = None;
    for (i, t) in tokens.iter().enumerate() {
        match article_label(t) {
            Some(l) => pending = Some(l),
            None => {
                clean.push(t);
                origin.push(i);
                article.push(pending.take());
            }
        }
    }
    let tags = ctx.tagger.tag(&clean);
    let word = |k: isize| -> String {
        if k < 0 || k as usize >= clean.len() {
            BOUNDARY.to_string()
        } else {
            clean[k as usize].to_lowercase()
        }
    };
    let tag = |k: isize| -> String {
        if k < 0 || k as usize >= clean.len() {
            BOUNDARY.to_string()
        } else {
            tags[k as usize].clone()
        }
    };
    let mut out = Vec::new();
    for j in 0..clean.len() {
        let prev = if j == 0 { None } else { Some(tags[j - 1].as_str()) };
        let run_head = (j..clean.len()).take_while(|&k| k == j || tags[k - 1] == "ADJ").find(|&k| tags[k] == "N");
        let starts_np = (tags[j] == "N" || tags[j] == "ADJ") && run_head.is_some();
        let bare = starts_np && !prev.is_some_and(|p| NP_INTERNAL.contains(&p));
        if article[j].is_none() && !bare {
            continue;
        }
        let head_index = run_head.unwrap_or(j);
        let head = clean[head_index].to_lowercase();
        let countable = match ctx.lexicon.as_ref().and_then(|l| l.countability_of_lemma(&head)) {
            Some(Countability::Countable) => "yes",
            Some(Countability::Mass) => "no",
            Some(Countability::Name) => "name",
            None => "unknown",
        };
        let shape = if clean[j].chars().next().is_some_and(char::is_uppercase) { "cap" } else { "lower" };
        let ji = j as isize;
        let features = vec![
            head.clone(),
            number_guess(&head).to_string(),
            if j == 0 { "yes" } else { "no" }.to_string(),
            shape.to_string(),
            countable.to_string(),
            word(ji - 2),
            word(ji - 1),
            word(ji),
            word(ji + 1),
            tag(ji - 2),
            tag(ji - 1),
            tag(ji),
            tag(ji + 1),
        ];
        out.push(Slot {
            onset: j,
            token: origin[j],
            existing: article[j],
            determined: prev.is_some_and(|p| p == "DET" || p == "POSS"),
            features,
        });
    }
    out
}

/// One instance per slot; bare slots are labelled null.
pub fn extract_instances(corpus: &str, ctx: &ArticleContext) -> Vec<ArticleInstance> {
    let mut out = Vec::new();
    for line in corpus.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        for s in find_slots(&tokens, ctx) {
            out.push(ArticleInstance { label: s.existing.unwrap_or(Label::Null), features: s.features });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf { counts: [usize; 3] },
    Split { feature: usize, value: String, yes: Box<DecisionTree>, no: Box<DecisionTree> },
}

#[derive(Debug, Clone, Copy)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { max_depth: 10, min_leaf: 5 }
    }
}

fn entropy(counts: &[usize; 3]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts.iter().filter(|&&c| c > 0).map(|&c| {
        let p = c as f64 / n as f64;
        -p * p.log2()
    }).sum()
}

fn tally(data: &[&ArticleInstance]) -> [usize; 3] {
    let mut c = [0; 3];
    for i in data {
        c[i.label.index()] += 1;
    }
    c
}

/// Majority label; ties go to the earlier label in [`Label::ALL`].
fn majority(counts: &[usize; 3]) -> Label {
    let mut best = 0;
    for k in 1..3 {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    Label::ALL[best]
}

/// Top-down induction with information-gain equality splits.
pub fn train_tree(instances: &[ArticleInstance], cfg: TreeConfig) -> Result<DecisionTree, PosteditError> {
    if instances.is_empty() {
        return Err(PosteditError::EmptyTrainingSet);
    }
    let refs: Vec<&ArticleInstance> = instances.iter().collect();
    Ok(grow(&refs, cfg, 0))
}

fn grow(data: &[&ArticleInstance], cfg: TreeConfig, depth: usize) -> DecisionTree {
    let counts = tally(data);
    let n = data.len();
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= cfg.max_depth || n < 2 * cfg.min_leaf.max(1) {
        return DecisionTree::Leaf { counts };
    }
    let parent = entropy(&counts);
    let mut best: Option<(f64, usize, String)> = None;
    for f in 0..FEATURES.len() {
        let mut by_value: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
        for i in data {
            by_value.entry(i.features[f].as_str()).or_default()[i.label.index()] += 1;
        }
        for (value, yes) in by_value {
            let ny: usize = yes.iter().sum();
            let nn = n - ny;
            if ny < cfg.min_leaf.max(1) || nn < cfg.min_leaf.max(1) {
                continue;
            }
            let no = [counts[0] - yes[0], counts[1] - yes[1], counts[2] - yes[2]];
            let gain = parent - (ny as f64 * entropy(&yes) + nn as f64 * entropy(&no)) / n as f64;
            if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.0 + 1e-12) {
                best = Some((gain, f, value.to_string()));
            }
        }
    }
    let Some((_, feature, value)) = best else {
        return DecisionTree::Leaf { counts };
    };
    let (yes, no): (Vec<&ArticleInstance>, Vec<&ArticleInstance>) = data.iter().partition(|i| i.features[feature] == value);
    DecisionTree::Split {
        feature,
        value,
        yes: Box::new(grow(&yes, cfg, depth + 1)),
        no: Box::new(grow(&no, cfg, depth + 1)),
    }
}

impl DecisionTree {
    pub fn classify(&self, features: &[String]) -> Label {
        match self {
            DecisionTree::Leaf { counts } => majority(counts),
            DecisionTree::Split { feature, value, yes, no } => {
                if features[*feature] == *value {
                    yes.classify(features)
                } else {
                    no.classify(features)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Split { yes, no, .. } => 1 + yes.depth().max(no.depth()),
        }
    }

    pub fn accuracy(&self, data: &[ArticleInstance]) -> f64 {
        if data.is_empty() {
            return 1.0;
        }
        data.iter().filter(|i| self.classify(&i.features) == i.label).count() as f64 / data.len() as f64
    }

    /// Nested text: `(leaf THE A-AN NULL)` or `(split "feature" "value" YES NO)`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            DecisionTree::Leaf { counts } => out.push_str(&format!("(leaf {} {} {})", counts[0], counts[1], counts[2])),
            DecisionTree::Split { feature, value, yes, no } => {
                out.push_str("(split ");
                sexp::write_string(out, FEATURES[*feature]);
                out.push(' ');
                sexp::write_string(out, value);
                for child in [yes, no] {
                    out.push('\n');
                    out.push_str(&" ".repeat(indent + 2));
                    child.write(out, indent + 2);
                }
                out.push(')');
            }
        }
    }

    pub fn parse(text: &str) -> Result<DecisionTree, PosteditError> {
        let s = sexp::read_one(text).map_err(|e| PosteditError::Tree(e.to_string()))?;
        Self::from_sexp(&s)
    }

    fn from_sexp(s: &Sexp) -> Result<DecisionTree, PosteditError> {
        let bad = |m: &str| PosteditError::Tree(m.to_string());
        let items = s.as_list().ok_or_else(|| bad("expected a list"))?;
        let text = |x: &Sexp| match x {
            Sexp::Str(t) => Some(t.clone()),
            Sexp::Sym(t) => Some(t.clone()),
            Sexp::List(_) => None,
        };
        match items.first().and_then(Sexp::as_sym) {
            Some("leaf") if items.len() == 4 => {
                let mut counts = [0; 3];
                for k in 0..3 {
                    counts[k] = items[k + 1].as_sym().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad leaf count"))?;
                }
                Ok(DecisionTree::Leaf { counts })
            }
            Some("split") if items.len() == 5 => {
                let name = text(&items[1]).ok_or_else(|| bad("bad feature"))?;
                let feature = FEATURES.iter().position(|f| *f == name).ok_or_else(|| bad("unknown feature"))?;
                let value = text(&items[2]).ok_or_else(|| bad("bad value"))?;
                Ok(DecisionTree::Split {
                    feature,
                    value,
                    yes: Box::new(Self::from_sexp(&items[3])?),
                    no: Box::new(Self::from_sexp(&items[4])?),
                })
            }
            _ => Err(bad("expected (leaf ...) or (split ...)")),
        }
    }
}

/// "a" or "an" for the following word.
pub fn indefinite_article(next: &str, exceptions: &BTreeSet<String>) -> &'static str {
    let lower = next.to_lowercase();
    let vowel = lower.chars().next().is_some_and(|c| "aeiou".contains(c));
    if vowel != exceptions.contains(&lower) {
        "an"
    } else {
        "a"
    }
}

/// Inserts articles at undetermined bare slots. Everything else in the
/// text is copied unchanged.
pub fn insert_articles(text: &str, tree: &DecisionTree, ctx: &ArticleContext) -> String {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    let tokens: Vec<&str> = spans.iter().map(|&(s, e)| &text[s..e]).collect();
    let mut inserts: Vec<(usize, String)> = Vec::new();
    for slot in find_slots(&tokens, ctx) {
        if slot.existing.is_some() || slot.determined {
            continue;
        }
        let onset = tokens[slot.token];
        let article = match tree.classify(&slot.features) {
            Label::Null => continue,
            Label::The => "the",
            Label::AAn => indefinite_article(onset, &ctx.exceptions),
        };
        let at = spans[slot.token].0;
        let article = if at == 0 { capitalize(article) } else { article.to_string() };
        inserts.push((at, format!("{article} ")));
    }
    let mut out = String::with_capacity(text.len() + inserts.len() * 4);
    let mut last = 0;
    for (at, s) in inserts {
        out.push_str(&text[last..at]);
        out.push_str(&s);
        last = at;
    }
    out.push_str(&text[last..]);
    out
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairRule {
    pub pattern: String,
    pub replacement: String,
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('s') => out.push(' '),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// `pattern TAB replacement` lines; `\s` writes a space, `\t` a tab.
pub fn parse_repairs(text: &str) -> Result<Vec<RepairRule>, PosteditError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (p, r) = line.split_once('\t').unwrap_or((line, ""));
        let pattern = unescape(p);
        if pattern.is_empty() {
            return Err(PosteditError::Parse { line: n + 1, message: "empty pattern".into() });
        }
        out.push(RepairRule { pattern, replacement: unescape(r) });
    }
    Ok(out)
}

/// Each rule in turn replaces every non-overlapping occurrence in one
/// left-to-right pass over the current text.
pub fn apply_repairs(text: &str, rules: &[RepairRule]) -> String {
    rules.iter().fold(text.to_string(), |t, r| t.replace(&r.pattern, &r.replacement))
}
