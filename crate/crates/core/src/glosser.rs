//! Direct transfer from a parse forest to an English word lattice.
//!
//! Leaves receive dictionary strings; gloss rules compose the children's
//! structures into `op1 .. opN` sequences. Verbal leaves carry a `base`
//! plus a shared `tmp` node, so flags set higher in the tree (past,
//! passive, ...) reach the verb before it is inflected at flattening.

use std::collections::{BTreeMap, HashMap};

use crate::compose::compose_into;
use crate::featstruct::{Atom, EquationEngine, FeatureStructure, NodeRef, Value, DEFAULT_SOLUTION_CAP};
use crate::lattice::WordLattice;
use crate::morphology::{realize_verbgroup, Morphology, VerbGroupSpec};
use crate::parser::{fragment_cover, ParseForest};
use crate::rulebase::{RuleBase, RuleKey};

pub const FRAGMENT_SEPARATOR: &str = "##";

#[derive(Debug, Clone)]
pub struct GlossConfig {
    /// Lexical categories glossed as uninflected verb groups.
    pub verbal_tags: Vec<String>,
    /// Gloss alternatives kept per constituent, in arrival order.
    pub cap: usize,
    pub solution_cap: usize,
    pub fragment_order: Vec<String>,
}

impl Default for GlossConfig {
    fn default() -> Self {
        GlossConfig { verbal_tags: vec!["V".into()], cap: 64, solution_cap: DEFAULT_SOLUTION_CAP, fragment_order: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GlossError {
    #[error("no gloss rule for {}", .0.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "))]
    MissingRules(Vec<RuleKey>),
}

fn alternatives(strings: &[String]) -> FeatureStructure {
    FeatureStructure::disjunction(strings.iter().map(|s| Atom::string(s.clone())))
        .unwrap_or_else(|| FeatureStructure::atom(Atom::string(String::new())))
}

/// Leaf gloss of one token under lexical category `category`.
pub fn gloss_leaf(surface: &str, category: &str, rb: &RuleBase, cfg: &GlossConfig) -> FeatureStructure {
    let entries = rb.entries(surface);
    let mut strings: Vec<String> = Vec::new();
    for e in entries.iter().filter(|e| e.pos == category) {
        for t in &e.translations {
            if !strings.contains(t) {
                strings.push(t.clone());
            }
        }
    }
    if strings.is_empty() {
        let text = format!("((gloss {}) (unknown +))", quoted(surface));
        return FeatureStructure::parse(&text).expect("leaf literal");
    }
    let alts = alternatives(&strings);
    if cfg.verbal_tags.iter().any(|t| t == category) {
        let shell = FeatureStructure::parse("((gloss ((base ()) (tmp #1 ()))) (tmp #1))").expect("leaf literal");
        return shell.unify_at(&["gloss", "base"], &alts).expect("base slot is open");
    }
    FeatureStructure::from_path(&["gloss"], &alts)
}

fn quoted(s: &str) -> String {
    let mut out = String::new();
    crate::sexp::write_string(&mut out, s);
    out
}

/// Computes gloss alternatives for constituents on demand.
pub struct Glosser<'a> {
    forest: &'a ParseForest,
    rb: &'a RuleBase,
    cfg: &'a GlossConfig,
    engine: EquationEngine,
    memo: HashMap<usize, Vec<FeatureStructure>>,
    missing: Vec<RuleKey>,
}

impl<'a> Glosser<'a> {
    pub fn new(forest: &'a ParseForest, rb: &'a RuleBase, cfg: &'a GlossConfig) -> Self {
        Glosser { forest, rb, cfg, engine: EquationEngine::new(cfg.solution_cap), memo: HashMap::new(), missing: Vec::new() }
    }

    /// Gloss structures of constituent `id`, one per surviving derivation
    /// and solution.
    pub fn glosses(&mut self, id: usize) -> Vec<FeatureStructure> {
        if let Some(g) = self.memo.get(&id) {
            return g.clone();
        }
        let c = &self.forest.constituents[id];
        let mut out: Vec<FeatureStructure> = Vec::new();
        if c.lexical {
            let surface = &self.forest.tokens[c.start].surface;
            out.push(gloss_leaf(surface, &c.category, self.rb, self.cfg));
        }
        for d in &c.derivations {
            let eq_sets: Vec<_> = match self.rb.rule(&d.rule) {
                Some(r) if !r.gloss.is_empty() => r.gloss.clone(),
                _ => {
                    if !self.missing.contains(&d.rule) {
                        self.missing.push(d.rule.clone());
                    }
                    continue;
                }
            };
            let kids: Vec<Vec<FeatureStructure>> = d.children.iter().map(|&k| self.glosses(k)).collect();
            compose_into(&self.engine, &d.rule, &eq_sets, &kids, self.cfg.cap, &mut out);
        }
        self.memo.insert(id, out.clone());
        out
    }

    /// Backbones met so far that had no gloss rule.
    pub fn missing_rules(&self) -> &[RuleKey] {
        &self.missing
    }

    /// Greedy leftmost-longest cover over constituents that have a gloss.
    pub fn glossable_cover(&mut self) -> Vec<usize> {
        for &r in &self.forest.roots {
            if !self.glosses(r).is_empty() {
                return vec![r];
            }
        }
        let rank = |cat: &str| {
            self.cfg.fragment_order.iter().position(|c| c == cat).unwrap_or(self.cfg.fragment_order.len())
        };
        let mut order: Vec<usize> = (0..self.forest.constituents.len()).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.forest.constituents[a], &self.forest.constituents[b]);
            ca.start.cmp(&cb.start).then(cb.end.cmp(&ca.end)).then(rank(&ca.category).cmp(&rank(&cb.category))).then(a.cmp(&b))
        });
        let mut out = Vec::new();
        let mut pos = 0;
        for id in order {
            let c = &self.forest.constituents[id];
            if c.start == pos && !self.glosses(id).is_empty() {
                out.push(id);
                pos = c.end;
            }
        }
        out
    }
}

/// The output of glossing a whole forest.
#[derive(Debug, Clone)]
pub struct GlossOutput {
    pub cover: Vec<usize>,
    /// Gloss alternatives of each cover element.
    pub glosses: Vec<Vec<FeatureStructure>>,
    pub lattice: WordLattice,
}

/// Glosses the forest's root, or its fragment cover joined by `##`.
pub fn gloss_forest(
    forest: &ParseForest,
    rb: &RuleBase,
    morph: &Morphology,
    cfg: &GlossConfig,
) -> Result<GlossOutput, GlossError> {
    let cover = fragment_cover(forest, &cfg.fragment_order);
    let mut g = Glosser::new(forest, rb, cfg);
    let glosses: Vec<Vec<FeatureStructure>> = cover.iter().map(|&id| g.glosses(id)).collect();
    if glosses.iter().any(Vec::is_empty) {
        return Err(GlossError::MissingRules(g.missing_rules().to_vec()));
    }
    Ok(assemble(cover, glosses, morph))
}

/// Like [`gloss_forest`], but falls back to smaller glossable pieces when
/// rules are missing, so every input yields a lattice.
pub fn gloss_forest_robust(forest: &ParseForest, rb: &RuleBase, morph: &Morphology, cfg: &GlossConfig) -> GlossOutput {
    match gloss_forest(forest, rb, morph, cfg) {
        Ok(out) => out,
        Err(e) => {
            log::info!("{e}; using a glossable cover");
            let mut g = Glosser::new(forest, rb, cfg);
            let cover = g.glossable_cover();
            let glosses = cover.iter().map(|&id| g.glosses(id)).collect();
            assemble(cover, glosses, morph)
        }
    }
}

fn assemble(cover: Vec<usize>, glosses: Vec<Vec<FeatureStructure>>, morph: &Morphology) -> GlossOutput {
    let mut parts = Vec::new();
    for (i, alts) in glosses.iter().enumerate() {
        if i > 0 {
            parts.push(WordLattice::from_word(FRAGMENT_SEPARATOR));
        }
        let lats: Vec<WordLattice> = alts.iter().map(|g| flatten_gloss(g, morph)).collect();
        parts.push(WordLattice::alternate_all(&lats));
    }
    GlossOutput { cover, glosses, lattice: WordLattice::concat_all(&parts) }
}

fn string_lattice(s: &str) -> WordLattice {
    let words: Vec<&str> = s.split_whitespace().collect();
    WordLattice::from_words(&words)
}

fn atom_strings(node: NodeRef<'_>) -> Vec<String> {
    match node.value() {
        Value::Atom(a) => vec![a.text().to_string()],
        Value::Or(set) => set.iter().map(|a| a.text().to_string()).collect(),
        _ => Vec::new(),
    }
}

fn op_index(feature: &str) -> Option<u32> {
    feature.strip_prefix("op").and_then(|n| n.parse().ok())
}

fn flatten_node(node: NodeRef<'_>, morph: &Morphology) -> WordLattice {
    match node.value() {
        Value::Atom(a) => string_lattice(a.text()),
        Value::Or(set) => {
            let alts: Vec<WordLattice> = set.iter().map(|a| string_lattice(a.text())).collect();
            WordLattice::alternate_all(&alts)
        }
        Value::Not(_) => WordLattice::epsilon(),
        Value::Complex(_) => {
            if let Some(base) = node.get("base") {
                let mut spec = VerbGroupSpec::new(atom_strings(base));
                if let Some(tmp) = node.get("tmp") {
                    for (flag, v) in tmp.features() {
                        if let Some(a) = v.atom() {
                            spec.flags.insert(flag.to_string(), a.text().to_string());
                        }
                    }
                }
                let forms = realize_verbgroup(&spec, morph);
                let alts: Vec<WordLattice> = forms.iter().map(|f| string_lattice(f)).collect();
                return WordLattice::alternate_all(&alts);
            }
            let ops: BTreeMap<u32, NodeRef<'_>> =
                node.features().into_iter().filter_map(|(f, n)| op_index(f).map(|i| (i, n))).collect();
            let parts: Vec<WordLattice> = ops.values().map(|n| flatten_node(*n, morph)).collect();
            WordLattice::concat_all(&parts)
        }
    }
}

/// Flattens a gloss structure (or a structure holding one under `gloss`).
pub fn flatten_gloss(g: &FeatureStructure, morph: &Morphology) -> WordLattice {
    let root = g.root();
    match root.get("gloss") {
        Some(node) => flatten_node(node, morph),
        None => flatten_node(root, morph),
    }
}
