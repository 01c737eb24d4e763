//! Compositional semantic analysis over the parse forest, inference, and
//! ranking of candidate meanings against a concept taxonomy.
//!
//! Constituent meanings are feature structures of the form
//! `((sem S) (map M))`. Inside `S`, `instance` names the concept; every
//! other feature is a role whose value is either another instance or an
//! atom (a scalar attribute such as `MONTH-INDEX 2`).

mod graph;
mod taxonomy;

pub use graph::{Filler, GraphError, Instance, MeaningGraph, SplError};
pub use taxonomy::{Relation, Taxonomy, TaxonomyError};

use std::collections::HashMap;

use crate::compose::compose_into;
use crate::featstruct::{Atom, EquationEngine, FeatureStructure, NodeRef, Value, DEFAULT_SOLUTION_CAP};
use crate::parser::ParseForest;
use crate::rulebase::{RuleBase, RuleKey};

pub const DEFAULT_CANDIDATE_CAP: usize = 256;
/// Sense marking a semantically empty word in the semantic lexicon.
pub const EMPTY_SENSE: &str = "-";
pub const GAP_ROLES: [&str; 3] = ["subject-role", "object-role", "object2-role"];
pub const TOPIC_ROLE: &str = "topic";
pub const REL_MOD: &str = "rel-mod";
pub const RC_WRAPPER: &str = "rc-modified-object";
/// Roles a topic may fill, highest priority first.
pub const TOPIC_TARGETS: [&str; 3] = ["AGENT", "THEME", "SENSER"];
pub const INVERSE_SUFFIX: &str = "-OF";

#[derive(Debug, Clone)]
pub struct SemConfig {
    pub candidate_cap: usize,
    pub solution_cap: usize,
}

impl Default for SemConfig {
    fn default() -> Self {
        SemConfig { candidate_cap: DEFAULT_CANDIDATE_CAP, solution_cap: DEFAULT_SOLUTION_CAP }
    }
}

/// Candidate structures per constituent, indexed like the forest.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub candidates: Vec<Vec<FeatureStructure>>,
    /// Derivation backbones that had no semantic rule.
    pub missing: Vec<RuleKey>,
}

impl Analysis {
    /// Meaning graphs of the constituent's candidates that carry an instance.
    pub fn graphs(&self, id: usize) -> Vec<MeaningGraph> {
        self.candidates[id].iter().filter_map(graph_from_structure).collect()
    }
}

/// Leaf candidates: one per sense, with the lexicon's extra features.
pub fn leaf_candidates(surface: &str, rb: &RuleBase) -> Vec<FeatureStructure> {
    let extra = rb.sense_features(surface);
    let mut out = Vec::new();
    for sense in rb.senses(surface) {
        let base = if sense == EMPTY_SENSE {
            FeatureStructure::new()
        } else {
            FeatureStructure::from_path(&["sem", "instance"], &FeatureStructure::atom(Atom::string(sense.clone())))
        };
        let fs = match extra {
            Some(x) => match base.unify(x) {
                Some(fs) => fs,
                None => {
                    log::warn!("sense {sense} of {surface} conflicts with its features");
                    continue;
                }
            },
            None => base,
        };
        if !out.contains(&fs) {
            out.push(fs);
        }
    }
    out
}

/// Computes candidates for every constituent bottom-up.
pub fn analyze(forest: &ParseForest, rb: &RuleBase, cfg: &SemConfig) -> Analysis {
    let engine = EquationEngine::new(cfg.solution_cap);
    let mut memo: HashMap<usize, Vec<FeatureStructure>> = HashMap::new();
    let mut missing = Vec::new();
    for id in 0..forest.constituents.len() {
        candidates_of(id, forest, rb, cfg, &engine, &mut memo, &mut missing);
    }
    let candidates = (0..forest.constituents.len()).map(|i| memo.remove(&i).unwrap_or_default()).collect();
    Analysis { candidates, missing }
}

fn candidates_of(
    id: usize,
    forest: &ParseForest,
    rb: &RuleBase,
    cfg: &SemConfig,
    engine: &EquationEngine,
    memo: &mut HashMap<usize, Vec<FeatureStructure>>,
    missing: &mut Vec<RuleKey>,
) -> Vec<FeatureStructure> {
    if let Some(c) = memo.get(&id) {
        return c.clone();
    }
    let c = &forest.constituents[id];
    let mut out = Vec::new();
    if c.lexical {
        out = leaf_candidates(&forest.tokens[c.start].surface, rb);
        out.truncate(cfg.candidate_cap);
    }
    for d in &c.derivations {
        let eq_sets = match rb.rule(&d.rule) {
            Some(r) if !r.semantics.is_empty() => r.semantics.clone(),
            _ => {
                if !missing.contains(&d.rule) {
                    missing.push(d.rule.clone());
                }
                continue;
            }
        };
        let kids: Vec<Vec<FeatureStructure>> =
            d.children.iter().map(|&k| candidates_of(k, forest, rb, cfg, engine, memo, missing)).collect();
        compose_into(engine, &d.rule, &eq_sets, &kids, cfg.candidate_cap, &mut out);
    }
    memo.insert(id, out.clone());
    out
}

fn id_prefix(concept: &str) -> char {
    concept.chars().find(|c| c.is_alphanumeric()).map_or('x', |c| c.to_ascii_lowercase())
}

fn atom_text(node: NodeRef<'_>) -> Option<String> {
    match node.value() {
        Value::Atom(a) => Some(a.text().to_string()),
        _ => None,
    }
}

/// Reads the `sem` part of a candidate as a graph. Structure sharing
/// becomes reentrancy; role slots without an instance are left out.
pub fn graph_from_structure(fs: &FeatureStructure) -> Option<MeaningGraph> {
    let sem = fs.get(&["sem"])?;
    let concept = atom_text(sem.get("instance")?)?;
    let mut counter = 1;
    let mut g = MeaningGraph::new(format!("{}-{counter}", id_prefix(&concept)), concept);
    let mut seen: HashMap<usize, usize> = HashMap::from([(sem.id(), 0)]);
    let mut stack = vec![(sem, 0usize)];
    while let Some((node, gi)) = stack.pop() {
        for (role, child) in node.features() {
            if role == "instance" {
                continue;
            }
            if let Some(text) = atom_text(child) {
                g.roles_mut(gi).push((role.to_string(), Filler::Scalar(text)));
                continue;
            }
            let Some(concept) = child.get("instance").and_then(atom_text) else {
                continue;
            };
            let ci = match seen.get(&child.id()) {
                Some(&ci) => ci,
                None => {
                    counter += 1;
                    let ci = g.add_node(format!("{}-{counter}", id_prefix(&concept)), concept).ok()?;
                    seen.insert(child.id(), ci);
                    stack.push((child, ci));
                    ci
                }
            };
            g.roles_mut(gi).push((role.to_string(), Filler::Node(ci)));
        }
    }
    g.is_acyclic().then_some(g)
}

/// A (head concept, relation, filler concept) triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assertion {
    pub head: String,
    pub relation: String,
    pub filler: String,
}

/// One triple per relation edge, in depth-first preorder.
pub fn to_assertions(g: &MeaningGraph) -> Vec<Assertion> {
    let mut out = Vec::new();
    for n in g.preorder() {
        let inst = g.node(n);
        for (role, f) in &inst.roles {
            if let Filler::Node(c) = f {
                out.push(Assertion { head: inst.concept.clone(), relation: role.clone(), filler: g.node(*c).concept.clone() });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    /// Hard-violation floor keeping every score positive.
    pub floor: f64,
    pub unknown_relation: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { floor: 1e-6, unknown_relation: 0.5 }
    }
}

/// Plausibility of one triple. `R-OF` edges are checked as `R` with head
/// and filler exchanged.
pub fn score_assertion(a: &Assertion, t: &Taxonomy, cfg: &ScoreConfig) -> f64 {
    let (rel, head, filler) = match t.relation(&a.relation) {
        Some(r) => (r, &a.head, &a.filler),
        None => match a.relation.strip_suffix(INVERSE_SUFFIX).and_then(|b| t.relation(b)) {
            Some(r) => (r, &a.filler, &a.head),
            None => {
                log::warn!("relation {} not in taxonomy", a.relation);
                return cfg.unknown_relation;
            }
        },
    };
    if t.disjoint(filler, &rel.range) || t.disjoint(head, &rel.domain) {
        return cfg.floor;
    }
    if t.is_a(head, &rel.domain) && t.is_a(filler, &rel.range) {
        return 1.0;
    }
    if rel.level == 0 {
        return cfg.floor;
    }
    rel.penalty.unwrap_or_else(|| t.level_penalty(rel.level)).max(cfg.floor)
}

/// Product of triple scores, multiplied in ascending order of magnitude.
pub fn score_assertions(list: &[Assertion], t: &Taxonomy, cfg: &ScoreConfig) -> f64 {
    let mut scores: Vec<f64> = list.iter().map(|a| score_assertion(a, t, cfg)).collect();
    scores.sort_by(f64::total_cmp);
    scores.iter().product::<f64>().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemCandidate {
    pub graph: MeaningGraph,
    pub score: f64,
}

pub fn score_graph(g: &MeaningGraph, t: &Taxonomy, cfg: &ScoreConfig) -> SemCandidate {
    SemCandidate { graph: g.clone(), score: score_assertions(&to_assertions(g), t, cfg) }
}

/// Descending by score; equal scores keep input order.
pub fn rank_candidates(mut cs: Vec<SemCandidate>) -> Vec<SemCandidate> {
    cs.sort_by(|a, b| b.score.total_cmp(&a.score));
    cs
}

fn admissible(g: &MeaningGraph, head: usize, role: &str, filler: usize, t: Option<&Taxonomy>) -> bool {
    let Some(t) = t else { return true };
    let a = Assertion { head: g.node(head).concept.clone(), relation: role.to_string(), filler: g.node(filler).concept.clone() };
    score_assertion(&a, t, &ScoreConfig::default()) == 1.0
}

fn has_role(g: &MeaningGraph, n: usize, role: &str) -> bool {
    g.node(n).roles.iter().any(|(r, f)| r == role && matches!(f, Filler::Node(_)))
}

fn inverse_filled(g: &MeaningGraph, clause: usize, role: &str) -> bool {
    let inv = format!("{role}{INVERSE_SUFFIX}");
    g.nodes().iter().any(|n| n.roles.iter().any(|(r, f)| *r == inv && *f == Filler::Node(clause)))
}

/// Unfilled gap roles of a clause, in gap priority order.
fn open_gaps(g: &MeaningGraph, clause: usize) -> Vec<String> {
    GAP_ROLES
        .iter()
        .filter_map(|gap| g.node(clause).scalar(gap))
        .filter(|role| !has_role(g, clause, role) && !inverse_filled(g, clause, role))
        .map(String::from)
        .collect()
}

/// Reorganizes relative clauses and places topics into roles.
///
/// A `rel-mod` clause with an open gap role `R` is attached to its head
/// noun by an inverse edge `R-OF`, replacing any `rc-modified-object`
/// wrapper. A `topic` filler of the root moves into the first open role
/// among AGENT, THEME, SENSER. With a taxonomy, only roles whose
/// constraints the filler satisfies are chosen when any exists. Gap
/// annotations are removed afterwards.
pub fn infer(g: &MeaningGraph, t: Option<&Taxonomy>) -> MeaningGraph {
    let mut g = g.clone();
    loop {
        let site = (0..g.len()).find_map(|n| {
            g.node(n).roles.iter().enumerate().find_map(|(k, (r, f))| match f {
                Filler::Node(c) if r == REL_MOD && !open_gaps(&g, *c).is_empty() => Some((n, k, *c)),
                _ => None,
            })
        });
        let Some((owner, k, clause)) = site else { break };
        let head = match (g.node(owner).concept == RC_WRAPPER, g.node(owner).role("head")) {
            (true, Some(Filler::Node(h))) => *h,
            _ => owner,
        };
        let gaps = open_gaps(&g, clause);
        let role = gaps.iter().find(|r| admissible(&g, clause, r, head, t)).unwrap_or(&gaps[0]).clone();
        let inverse = format!("{role}{INVERSE_SUFFIX}");
        if head == owner {
            g.roles_mut(owner)[k] = (inverse, Filler::Node(clause));
        } else {
            if g.reaches(clause, head) {
                // Attaching would close a cycle; drop the rel-mod edge.
                g.roles_mut(owner).remove(k);
                continue;
            }
            for n in 0..g.len() {
                for (_, f) in g.roles_mut(n).iter_mut() {
                    if *f == Filler::Node(owner) {
                        *f = Filler::Node(head);
                    }
                }
            }
            if g.root() == owner {
                g.set_root(head);
            }
            g.roles_mut(owner).clear();
            g.roles_mut(head).push((inverse, Filler::Node(clause)));
        }
        g.compact();
    }

    let root = g.root();
    let topic = g.node(root).roles.iter().position(|(r, f)| r == TOPIC_ROLE && matches!(f, Filler::Node(_)));
    if let Some(pos) = topic {
        let Filler::Node(item) = g.node(root).roles[pos].1.clone() else { unreachable!() };
        let open: Vec<&str> = TOPIC_TARGETS.iter().copied().filter(|r| !has_role(&g, root, r)).collect();
        let chosen = open.iter().find(|r| admissible(&g, root, r, item, t)).or(open.first()).copied();
        if let Some(role) = chosen {
            g.roles_mut(root)[pos] = (role.to_string(), Filler::Node(item));
        }
    }
    for n in 0..g.len() {
        g.roles_mut(n).retain(|(r, f)| !(GAP_ROLES.contains(&r.as_str()) && matches!(f, Filler::Scalar(_))));
    }
    g.compact();
    g
}
