//! Template realization of meaning graphs into English word lattices.
//!
//! Events realize as subject, verb, object, then the remaining roles as
//! prepositional phrases in role order. Unspecified definiteness gives
//! "the"; unspecified tense gives the present. Where the lexicon has no
//! preposition for a role the lattice branches over a fixed set.

use std::collections::{BTreeMap, BTreeSet};

use crate::lattice::WordLattice;
use crate::morphology::Morphology;
use crate::semantics::{Filler, MeaningGraph, INVERSE_SUFFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GenCategory {
    Noun,
    Verb,
    Adjective,
    Preposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Countability {
    Countable,
    Mass,
    /// Proper name: never takes an article.
    Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenEntry {
    pub concept: String,
    pub lemma: String,
    pub category: GenCategory,
    pub countable: Option<Countability>,
    /// Preferred preposition when this concept fills the role.
    pub prepositions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RealizeError {
    #[error("generation lexicon line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no generation entry for {}", .0.join(", "))]
    MissingEntries(Vec<String>),
    #[error("root {0} is neither an event nor a thing")]
    NoRootEvent(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenLexicon {
    entries: BTreeMap<String, GenEntry>,
}

impl GenLexicon {
    /// Reads `concept TAB lemma TAB category TAB countable TAB rel=prep;...`
    /// lines. The last two columns may be empty or `-`.
    pub fn parse(text: &str) -> Result<GenLexicon, RealizeError> {
        let mut lex = GenLexicon::default();
        for (n, line) in text.lines().enumerate() {
            let err = |message: String| RealizeError::Parse { line: n + 1, message };
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 {
                return Err(err("expected concept, lemma and category".into()));
            }
            let lemma = cols[1].trim();
            if lemma.is_empty() {
                return Err(err("empty lemma".into()));
            }
            let category = match cols[2].trim() {
                "noun" => GenCategory::Noun,
                "verb" => GenCategory::Verb,
                "adjective" => GenCategory::Adjective,
                "preposition" => GenCategory::Preposition,
                other => return Err(err(format!("unknown category {other}"))),
            };
            let countable = match cols.get(3).map(|c| c.trim()).unwrap_or("") {
                "" | "-" => None,
                "yes" => Some(Countability::Countable),
                "no" => Some(Countability::Mass),
                "name" => Some(Countability::Name),
                other => return Err(err(format!("unknown countability {other}"))),
            };
            let mut prepositions = BTreeMap::new();
            for item in cols.get(4).map(|c| c.trim()).unwrap_or("").split(';').filter(|s| !s.is_empty() && *s != "-") {
                let (rel, prep) = item.split_once('=').ok_or_else(|| err(format!("expected relation=prep, got {item}")))?;
                prepositions.insert(rel.trim().to_string(), prep.trim().to_string());
            }
            let concept = cols[0].to_string();
            lex.entries.insert(concept.clone(), GenEntry { concept, lemma: lemma.to_string(), category, countable, prepositions });
        }
        Ok(lex)
    }

    pub fn get(&self, concept: &str) -> Option<&GenEntry> {
        self.entries.get(concept)
    }

    pub fn entries(&self) -> impl Iterator<Item = &GenEntry> {
        self.entries.values()
    }

    /// Countability of a noun lemma, if some entry has it.
    pub fn countability_of_lemma(&self, lemma: &str) -> Option<Countability> {
        self.entries.values().find(|e| e.category == GenCategory::Noun && e.lemma.eq_ignore_ascii_case(lemma)).and_then(|e| e.countable)
    }
}

#[derive(Debug, Clone)]
pub struct RealizerConfig {
    /// Prepositions offered when the lexicon has no preference.
    pub prepositions: Vec<String>,
    /// Roles that can supply the clause subject, by priority.
    pub subject_roles: Vec<String>,
    /// Roles that can supply the direct object, by priority.
    pub object_roles: Vec<String>,
    pub final_punctuation: String,
}

impl Default for RealizerConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        RealizerConfig {
            prepositions: s(&["in", "on", "at", "for", "of"]),
            subject_roles: s(&["SENSER", "AGENT", "THEME"]),
            object_roles: s(&["PHENOMENON", "THEME"]),
            final_punctuation: ".".into(),
        }
    }
}

pub const MONTHS: [&str; 12] =
    ["January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November", "December"];

/// Alternatives for one position: each a word sequence.
type Slot = Vec<Vec<String>>;

fn word(w: &str) -> Slot {
    vec![w.split_whitespace().map(String::from).collect()]
}

struct Builder<'a> {
    g: &'a MeaningGraph,
    lex: &'a GenLexicon,
    morph: &'a Morphology,
    cfg: &'a RealizerConfig,
    done: BTreeSet<usize>,
}

fn starts_with_vowel(w: &str) -> bool {
    w.chars().next().is_some_and(|c| "aeiouAEIOU".contains(c))
}

impl<'a> Builder<'a> {
    fn entry(&self, n: usize) -> &'a GenEntry {
        self.lex.get(&self.g.node(n).concept).expect("entries checked up front")
    }

    fn node_fillers(&self, n: usize) -> Vec<(String, usize)> {
        self.g
            .node(n)
            .roles
            .iter()
            .filter_map(|(r, f)| match f {
                Filler::Node(c) => Some((r.clone(), *c)),
                Filler::Scalar(_) => None,
            })
            .collect()
    }

    fn noun_phrase(&mut self, n: usize, out: &mut Vec<Slot>) {
        self.done.insert(n);
        let inst = self.g.node(n);
        let e = self.entry(n);
        if let Some(k) = inst.scalar("MONTH-INDEX").and_then(|k| k.parse::<usize>().ok()).filter(|k| (1..=12).contains(k)) {
            out.push(word(MONTHS[k - 1]));
            return;
        }
        let fillers = self.node_fillers(n);
        let adjectives: Vec<usize> = fillers
            .iter()
            .filter(|(_, c)| !self.done.contains(c) && self.entry(*c).category == GenCategory::Adjective)
            .map(|(_, c)| *c)
            .collect();
        if e.countable != Some(Countability::Name) {
            let first = adjectives.first().map_or(e.lemma.as_str(), |&a| self.entry(a).lemma.as_str());
            let article = match inst.scalar("definiteness") {
                Some("indefinite") if starts_with_vowel(first) => "an",
                Some("indefinite") => "a",
                _ => "the",
            };
            out.push(word(article));
        }
        for a in adjectives {
            self.done.insert(a);
            out.push(word(&self.entry(a).lemma));
        }
        out.push(word(&e.lemma));
        self.modifiers(n, fillers, out);
    }

    /// Remaining role fillers of `n` as trailing phrases.
    fn modifiers(&mut self, n: usize, fillers: Vec<(String, usize)>, out: &mut Vec<Slot>) {
        for (role, c) in fillers {
            if self.done.contains(&c) {
                continue;
            }
            if let Some(base) = role.strip_suffix(INVERSE_SUFFIX) {
                out.push(word("that"));
                self.clause(c, Some(base), false, out);
                continue;
            }
            if self.entry(c).category == GenCategory::Adjective {
                self.done.insert(c);
                out.push(word(&self.entry(c).lemma));
                continue;
            }
            let pref = self.entry(c).prepositions.get(&role).or_else(|| self.entry(n).prepositions.get(&role));
            match pref {
                Some(p) => out.push(word(p)),
                None => out.push(self.cfg.prepositions.iter().map(|p| vec![p.clone()]).collect()),
            }
            self.argument(c, out);
        }
    }

    fn argument(&mut self, n: usize, out: &mut Vec<Slot>) {
        if self.entry(n).category == GenCategory::Verb {
            out.push(word("to"));
            self.clause(n, None, true, out);
        } else {
            self.noun_phrase(n, out);
        }
    }

    /// A clause headed by event `n`. `gap` names a role filled from
    /// outside; `infinitive` drops the subject and uses the base form.
    fn clause(&mut self, n: usize, gap: Option<&str>, infinitive: bool, out: &mut Vec<Slot>) {
        self.done.insert(n);
        let inst = self.g.node(n);
        let e = self.entry(n);
        // The gap filler is the head noun already realized outside.
        let fillers: Vec<(String, usize)> =
            self.node_fillers(n).into_iter().filter(|(r, c)| !(Some(r.as_str()) == gap && self.done.contains(c))).collect();
        let pick = |roles: &[String], skip: Option<usize>| {
            roles.iter().find_map(|r| fillers.iter().find(|(fr, c)| fr == r && Some(*c) != skip).map(|(_, c)| *c))
        };
        let subject = if infinitive || gap.is_some_and(|g| self.cfg.subject_roles.iter().any(|r| r == g)) {
            None
        } else {
            pick(&self.cfg.subject_roles, None)
        };
        if let Some(s) = subject {
            if !self.done.contains(&s) {
                self.noun_phrase(s, out);
            }
        }
        let forms: Vec<String> = if infinitive {
            vec![e.lemma.clone()]
        } else if inst.scalar("tense") == Some("past") {
            self.morph.past(&e.lemma)
        } else {
            vec![self.morph.third_singular(&e.lemma)]
        };
        out.push(forms.into_iter().map(|f| f.split_whitespace().map(String::from).collect()).collect());
        if let Some(o) = pick(&self.cfg.object_roles, subject) {
            if !self.done.contains(&o) {
                self.argument(o, out);
            }
        }
        let rest: Vec<(String, usize)> = fillers.into_iter().filter(|(_, c)| Some(*c) != subject).collect();
        self.modifiers(n, rest, out);
    }
}

/// Realizes `g` as a lattice of candidate sentences.
pub fn realize(g: &MeaningGraph, lex: &GenLexicon, morph: &Morphology, cfg: &RealizerConfig) -> Result<WordLattice, RealizeError> {
    let missing: BTreeSet<String> =
        g.preorder().iter().map(|&n| g.node(n).concept.clone()).filter(|c| lex.get(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(RealizeError::MissingEntries(missing.into_iter().collect()));
    }
    let mut b = Builder { g, lex, morph, cfg, done: BTreeSet::new() };
    let root = g.root();
    let mut slots: Vec<Slot> = Vec::new();
    match b.entry(root).category {
        GenCategory::Verb => b.clause(root, None, false, &mut slots),
        GenCategory::Noun => b.noun_phrase(root, &mut slots),
        _ => return Err(RealizeError::NoRootEvent(g.node(root).concept.clone())),
    }
    if let Some(first) = slots.first_mut() {
        for alt in first.iter_mut() {
            if let Some(w) = alt.first_mut() {
                *w = capitalize(w);
            }
        }
    }
    if !cfg.final_punctuation.is_empty() {
        slots.push(word(&cfg.final_punctuation));
    }
    let parts: Vec<WordLattice> = slots
        .iter()
        .map(|slot| WordLattice::alternate_all(&slot.iter().map(|ws| WordLattice::from_words(ws)).collect::<Vec<_>>()))
        .collect();
    Ok(WordLattice::concat_all(&parts))
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEX: &str = "have as a goal\tplan\tverb\t-\t-
company/business\tcompany\tnoun\tyes\t
new~virgin\tnew\tadjective
found, launch\tlaunching\tnoun\tyes
calendar month\tmonth\tnoun\tyes\tTEMPORAL-LOCATING=in
live\tlive\tverb
person\tperson\tnoun\tyes
Japan\tJapan\tnoun\tname
apple\tapple\tnoun\tyes
";

    fn paths(l: &WordLattice) -> Vec<String> {
        let mut p: Vec<String> = l.all_paths(1000).0.into_iter().map(|w| w.join(" ")).collect();
        p.sort();
        p
    }

    fn run(spl: &str) -> Result<Vec<String>, RealizeError> {
        let g = MeaningGraph::parse_spl(spl).unwrap();
        let lex = GenLexicon::parse(LEX).unwrap();
        realize(&g, &lex, &Morphology::builtin(), &RealizerConfig::default()).map(|l| paths(&l))
    }

    const DEMO: &str = "(|h-1| / |have as a goal|
 :SENSER (|c-2| / |company/business|)
 :PHENOMENON (|f-3| / |found, launch|
              :TEMPORAL-LOCATING (|c-4| / |calendar month| :MONTH-INDEX 2)
              :AGENT |c-2|)
 :THEME |c-2|)";

    #[test]
    fn demo_graph() {
        assert_eq!(run(DEMO).unwrap(), ["The company plans the launching in February ."]);
    }

    #[test]
    fn adjectives_precede_nouns() {
        let spl = DEMO.replace("(|c-2| / |company/business|)", "(|c-2| / |company/business| :Q-MOD (|n-5| / |new~virgin|))");
        assert_eq!(run(&spl).unwrap(), ["The new company plans the launching in February ."]);
    }

    #[test]
    fn unknown_preposition_branches() {
        let got = run("(|l| / |live| :AGENT (|p| / |person|) :LOCATION (|j| / |Japan|))").unwrap();
        assert_eq!(
            got,
            [
                "The person lives at Japan .",
                "The person lives for Japan .",
                "The person lives in Japan .",
                "The person lives of Japan .",
                "The person lives on Japan .",
            ]
        );
    }

    #[test]
    fn defaults_and_flags() {
        assert_eq!(run("(|a| / |apple|)").unwrap(), ["The apple ."]);
        assert_eq!(run("(|a| / |apple| :definiteness indefinite)").unwrap(), ["An apple ."]);
        assert_eq!(run("(|l| / |live| :AGENT (|p| / |person|) :tense past)").unwrap(), ["The person lived ."]);
    }

    #[test]
    fn errors() {
        assert_eq!(run("(|a| / |pear|)").unwrap_err(), RealizeError::MissingEntries(vec!["pear".into()]));
        let lex = GenLexicon::parse("in\tin\tpreposition\n").unwrap();
        let g = MeaningGraph::new("x", "in");
        assert!(matches!(realize(&g, &lex, &Morphology::default(), &RealizerConfig::default()), Err(RealizeError::NoRootEvent(_))));
    }
}
