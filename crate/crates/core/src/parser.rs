//! Bottom-up chart parser producing a packed parse forest.
//!
//! Spans are completed shortest first; within a span n-ary rules run over
//! already-complete children, then unary rules are closed over. Entries
//! with the same category, span and (mutually subsuming) features share
//! one constituent carrying several derivations.

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};
use std::fmt;

use crate::chunker::{barrier_spans, Token, NUMBER_TAG};
use crate::featstruct::{EquationEngine, FeatureStructure, DEFAULT_SOLUTION_CAP};
use crate::rulebase::{RuleBase, RuleKey};

pub const UNKNOWN_CATEGORY: &str = "UNKNOWN";
pub const DEFAULT_EDGE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: RuleKey,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Constituent {
    pub id: usize,
    pub category: String,
    pub start: usize,
    pub end: usize,
    pub features: FeatureStructure,
    /// Empty for lexical constituents.
    pub derivations: Vec<Derivation>,
    pub lexical: bool,
}

#[derive(Debug, Clone)]
pub struct ParserConfig {
    pub edge_cap: usize,
    pub solution_cap: usize,
    pub root_categories: Vec<String>,
    /// Tie-break order for fragment covers.
    pub fragment_order: Vec<String>,
    /// Tags that keep their category when the word is not in the lexicon.
    pub open_tags: Vec<String>,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            edge_cap: DEFAULT_EDGE_CAP,
            solution_cap: DEFAULT_SOLUTION_CAP,
            root_categories: vec!["S".into()],
            fragment_order: Vec::new(),
            open_tags: vec![NUMBER_TAG.into(), "NAME".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("no constituent with id {0}")]
    UnknownId(usize),
}

#[derive(Debug, Clone, Default)]
pub struct ParseForest {
    pub constituents: Vec<Constituent>,
    /// Non-marker tokens; spans index into this.
    pub tokens: Vec<Token>,
    pub roots: Vec<usize>,
    pub truncated: bool,
    /// Category, then start position.
    by_start: HashMap<String, HashMap<usize, Vec<usize>>>,
    by_end: HashMap<usize, Vec<usize>>,
}

impl ParseForest {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Constituent> {
        self.constituents.get(id)
    }

    /// Constituents of `category` starting at `start`, in creation order.
    pub fn starting(&self, category: &str, start: usize) -> &[usize] {
        self.by_start.get(category).and_then(|m| m.get(&start)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn ending(&self, end: usize) -> &[usize] {
        self.by_end.get(&end).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_full_parse(&self) -> bool {
        !self.roots.is_empty()
    }

    /// One line per constituent:
    /// `id TAB category TAB start TAB end TAB derivations TAB features`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in &self.constituents {
            let derivs = if c.lexical {
                "lex".to_string()
            } else {
                c.derivations
                    .iter()
                    .map(|d| {
                        let kids: Vec<String> = d.children.iter().map(usize::to_string).collect();
                        format!("{} [{}]", d.rule, kids.join(" "))
                    })
                    .collect::<Vec<_>>()
                    .join(" | ")
            };
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\n", c.id, c.category, c.start, c.end, derivs, c.features));
        }
        out
    }
}

struct Chart<'a> {
    forest: ParseForest,
    /// Per span, `(canonical features, id)` of each constituent.
    packing: HashMap<(usize, usize), Vec<(String, usize)>>,
    engine: EquationEngine,
    cfg: &'a ParserConfig,
    barriers: Vec<(String, usize, usize)>,
    edges: usize,
}

impl Chart<'_> {
    fn blocked(&self, category: &str, start: usize, end: usize) -> bool {
        self.barriers.iter().any(|(c, s, e)| {
            c == category && ((start < *s && *s < end && end < *e) || (*s < start && start < *e && *e < end))
        })
    }

    fn descends_from(&self, ancestor: usize, node: usize) -> bool {
        let mut stack = vec![node];
        let mut seen = HashSet::default();
        while let Some(n) = stack.pop() {
            if n == ancestor {
                return true;
            }
            if seen.insert(n) {
                for d in &self.forest.constituents[n].derivations {
                    stack.extend(d.children.iter().copied());
                }
            }
        }
        false
    }

    /// Adds an entry; returns its id when a new constituent was created.
    fn add(
        &mut self,
        category: &str,
        start: usize,
        end: usize,
        features: FeatureStructure,
        derivation: Option<Derivation>,
    ) -> Option<usize> {
        if self.edges >= self.cfg.edge_cap {
            self.forest.truncated = true;
            return None;
        }
        let canonical = features.canonical();
        let packed = self.packing.get(&(start, end)).and_then(|v| {
            v.iter().find(|(k, id)| *k == canonical && self.forest.constituents[*id].category == category).map(|&(_, id)| id)
        });
        if let Some(id) = packed {
            let Some(d) = derivation else { return None };
            if self.forest.constituents[id].derivations.contains(&d) {
                return None;
            }
            // only a same-span child can close a cycle
            let same_span = |&c: &usize| self.forest.constituents[c].start == start && self.forest.constituents[c].end == end;
            if d.children.iter().filter(|c| same_span(c)).any(|&c| self.descends_from(id, c)) {
                return None;
            }
            self.edges += 1;
            self.forest.constituents[id].derivations.push(d);
            return None;
        }
        self.edges += 1;
        let id = self.forest.constituents.len();
        let lexical = derivation.is_none();
        self.forest.constituents.push(Constituent {
            id,
            category: category.to_string(),
            start,
            end,
            features,
            derivations: derivation.into_iter().collect(),
            lexical,
        });
        self.packing.entry((start, end)).or_default().push((canonical, id));
        self.forest.by_start.entry(category.to_string()).or_default().entry(start).or_default().push(id);
        self.forest.by_end.entry(end).or_default().push(id);
        Some(id)
    }

    /// Applies every syntax equation set of `rule` to `children`.
    fn apply(&mut self, rule: &RuleKey, eq_sets: &[Vec<crate::featstruct::Equation>], children: &[usize]) -> Vec<usize> {
        let start = self.forest.constituents[children[0]].start;
        let end = self.forest.constituents[*children.last().unwrap()].end;
        if self.blocked(&rule.lhs, start, end) {
            return Vec::new();
        }
        if eq_sets.iter().any(Vec::is_empty) {
            let d = Derivation { rule: rule.clone(), children: children.to_vec() };
            let mut created: Vec<usize> = self.add(&rule.lhs, start, end, FeatureStructure::new(), Some(d)).into_iter().collect();
            let rest: Vec<Vec<crate::featstruct::Equation>> = eq_sets.iter().filter(|e| !e.is_empty()).cloned().collect();
            if !rest.is_empty() {
                created.extend(self.apply(rule, &rest, children));
            }
            return created;
        }
        let mut bindings = Vec::with_capacity(children.len() + 1);
        bindings.push(FeatureStructure::new());
        bindings.extend(children.iter().map(|&c| self.forest.constituents[c].features.clone()));
        let mut created = Vec::new();
        for eqs in eq_sets {
            let app = match self.engine.apply(&bindings, eqs) {
                Ok(app) => app,
                Err(e) => {
                    log::warn!("rule {rule}: {e}");
                    continue;
                }
            };
            for mut sol in app.solutions {
                let features = sol.swap_remove(0);
                let d = Derivation { rule: rule.clone(), children: children.to_vec() };
                if let Some(id) = self.add(&rule.lhs, start, end, features, Some(d)) {
                    created.push(id);
                }
            }
        }
        created
    }
}

fn lexical_entries(rb: &RuleBase, token: &Token, cfg: &ParserConfig) -> Vec<(String, FeatureStructure)> {
    let entries = rb.entries(&token.surface);
    let tagged: Vec<_> = entries.iter().filter(|e| e.pos == token.tag).collect();
    let chosen: Vec<_> = if tagged.is_empty() { entries.iter().collect() } else { tagged };
    if chosen.is_empty() {
        let cat = if cfg.open_tags.iter().any(|t| *t == token.tag) { token.tag.clone() } else { UNKNOWN_CATEGORY.to_string() };
        return vec![(cat, FeatureStructure::new())];
    }
    chosen.into_iter().map(|e| (e.pos.clone(), e.features.clone())).collect()
}

pub fn parse(tokens: &[Token], rb: &RuleBase, cfg: &ParserConfig) -> Result<ParseForest, ParseError> {
    let words: Vec<Token> = tokens.iter().filter(|t| !t.is_marker()).cloned().collect();
    if words.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let n = words.len();
    let mut chart = Chart {
        forest: ParseForest { tokens: words, ..Default::default() },
        packing: HashMap::default(),
        engine: EquationEngine::new(cfg.solution_cap),
        cfg,
        barriers: barrier_spans(tokens),
        edges: 0,
    };

    let mut unary: HashMap<&str, Vec<usize>> = HashMap::default();
    let mut nary: HashMap<&str, Vec<usize>> = HashMap::default();
    let rules: Vec<_> = rb.syntax_rules().collect();
    for (i, r) in rules.iter().enumerate() {
        let table = if r.key.arity() == 1 { &mut unary } else { &mut nary };
        table.entry(r.key.rhs[0].as_str()).or_default().push(i);
    }

    for len in 1..=n {
        for start in 0..=n - len {
            let end = start + len;
            let mut agenda = Vec::new();
            if len == 1 {
                let token = chart.forest.tokens[start].clone();
                for (cat, fs) in lexical_entries(rb, &token, cfg) {
                    agenda.extend(chart.add(&cat, start, end, fs, None));
                }
            } else {
                let firsts: Vec<usize> = chart
                    .forest
                    .constituents
                    .iter()
                    .filter(|c| c.start == start && c.end < end)
                    .map(|c| c.id)
                    .collect();
                for first in firsts {
                    let cat = chart.forest.constituents[first].category.clone();
                    for &ri in nary.get(cat.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                        let rule = rules[ri];
                        let mut seqs = Vec::new();
                        extend_children(&chart.forest, &rule.key.rhs, vec![first], end, &mut seqs);
                        for children in seqs {
                            agenda.extend(chart.apply(&rule.key, &rule.syntax, &children));
                        }
                    }
                }
            }
            let mut i = 0;
            while i < agenda.len() {
                let id = agenda[i];
                i += 1;
                let cat = chart.forest.constituents[id].category.clone();
                for &ri in unary.get(cat.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                    let rule = rules[ri];
                    let created = chart.apply(&rule.key, &rule.syntax, &[id]);
                    agenda.extend(created);
                }
            }
        }
    }

    let mut forest = chart.forest;
    forest.roots = forest
        .constituents
        .iter()
        .filter(|c| c.start == 0 && c.end == n && cfg.root_categories.iter().any(|r| *r == c.category))
        .map(|c| c.id)
        .collect();
    Ok(forest)
}

/// Completes child sequences for `rhs` whose first children are `prefix`,
/// with the last child ending exactly at `end`.
fn extend_children(forest: &ParseForest, rhs: &[String], prefix: Vec<usize>, end: usize, out: &mut Vec<Vec<usize>>) {
    let k = prefix.len();
    let pos = forest.constituents[prefix[k - 1]].end;
    if k == rhs.len() {
        if pos == end {
            out.push(prefix);
        }
        return;
    }
    let remaining = rhs.len() - k;
    if pos + remaining > end {
        return;
    }
    for &c in forest.starting(&rhs[k], pos) {
        let ce = forest.constituents[c].end;
        if ce + (remaining - 1) <= end && (remaining > 1 || ce == end) {
            let mut next = prefix.clone();
            next.push(c);
            extend_children(forest, rhs, next, end, out);
        }
    }
}

/// One unpacked derivation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub id: usize,
    pub category: String,
    pub start: usize,
    pub end: usize,
    pub features: FeatureStructure,
    pub rule: Option<RuleKey>,
    pub children: Vec<Tree>,
}

impl fmt::Display for Tree {
    /// Bracketed form with canonical features, e.g. `(NP[0,1] ((a b)) ...)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}[{},{}] {}", self.category, self.start, self.end, self.features)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

/// Unpacks up to `cap` trees rooted at `id`, in derivation order with the
/// rightmost child varying fastest.
pub fn enumerate_trees(forest: &ParseForest, id: usize, cap: usize) -> Result<Vec<Tree>, ParseError> {
    if id >= forest.constituents.len() {
        return Err(ParseError::UnknownId(id));
    }
    let mut memo = HashMap::default();
    Ok(trees_of(forest, id, cap, &mut memo))
}

fn trees_of(forest: &ParseForest, id: usize, cap: usize, memo: &mut HashMap<usize, Vec<Tree>>) -> Vec<Tree> {
    if let Some(t) = memo.get(&id) {
        return t.clone();
    }
    let c = &forest.constituents[id];
    let node = |rule: Option<RuleKey>, children: Vec<Tree>| Tree {
        id,
        category: c.category.clone(),
        start: c.start,
        end: c.end,
        features: c.features.clone(),
        rule,
        children,
    };
    let mut out = Vec::new();
    if c.lexical {
        out.push(node(None, Vec::new()));
    }
    for d in &c.derivations {
        if out.len() >= cap {
            break;
        }
        let kids: Vec<Vec<Tree>> = d.children.iter().map(|&k| trees_of(forest, k, cap, memo)).collect();
        if kids.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; kids.len()];
        'product: loop {
            if out.len() >= cap {
                break;
            }
            let children = idx.iter().zip(&kids).map(|(&i, ts)| ts[i].clone()).collect();
            out.push(node(Some(d.rule.clone()), children));
            let mut pos = kids.len();
            loop {
                if pos == 0 {
                    break 'product;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < kids[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    memo.insert(id, out.clone());
    out
}

/// The root if one exists, otherwise a greedy leftmost-longest cover.
pub fn fragment_cover(forest: &ParseForest, category_order: &[String]) -> Vec<usize> {
    if let Some(&r) = forest.roots.first() {
        return vec![r];
    }
    let rank = |cat: &str| category_order.iter().position(|c| c == cat).unwrap_or(category_order.len());
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < forest.len() {
        let best = forest
            .constituents
            .iter()
            .filter(|c| c.start == pos)
            .min_by(|a, b| b.end.cmp(&a.end).then(rank(&a.category).cmp(&rank(&b.category))).then(a.id.cmp(&b.id)));
        match best {
            Some(c) => {
                out.push(c.id);
                pos = c.end;
            }
            None => break,
        }
    }
    out
}
