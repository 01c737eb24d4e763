//! Synchronized syntax / semantic / gloss rule sets and the lexicons they
//! reference.
//!
//! All three rule kinds share one file format: a context-free backbone
//! followed by equations, e.g.
//!
//! ```text
//! ((NP -> S NP)
//!   ((X1 syn infl) = (*OR* kihon ta-form rentai))
//!   ((X0 syn) = (X2 syn)))
//! ```
//!
//! Rules of different kinds are keyed to one another by their backbone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::featstruct::{equation_from_sexp, Equation, FeatureStructure};
use crate::sexp::{self, Sexp};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleKey {
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl RuleKey {
    pub fn new<S: Into<String>>(lhs: impl Into<String>, rhs: impl IntoIterator<Item = S>) -> Self {
        RuleKey { lhs: lhs.into(), rhs: rhs.into_iter().map(Into::into).collect() }
    }

    pub fn arity(&self) -> usize {
        self.rhs.len()
    }
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        for c in &self.rhs {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Syntax,
    Semantics,
    Gloss,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Syntax => "syntax",
            RuleKind::Semantics => "semantics",
            RuleKind::Gloss => "gloss",
        })
    }
}

/// One backbone with every equation set attached to it. Duplicate
/// backbones in a file become extra alternatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynchronizedRule {
    pub key: RuleKey,
    pub syntax: Vec<Vec<Equation>>,
    pub semantics: Vec<Vec<Equation>>,
    pub gloss: Vec<Vec<Equation>>,
}

impl SynchronizedRule {
    fn new(key: RuleKey) -> Self {
        SynchronizedRule { key, syntax: Vec::new(), semantics: Vec::new(), gloss: Vec::new() }
    }

    pub fn equations(&self, kind: RuleKind) -> &[Vec<Equation>] {
        match kind {
            RuleKind::Syntax => &self.syntax,
            RuleKind::Semantics => &self.semantics,
            RuleKind::Gloss => &self.gloss,
        }
    }

    fn equations_mut(&mut self, kind: RuleKind) -> &mut Vec<Vec<Equation>> {
        match kind {
            RuleKind::Syntax => &mut self.syntax,
            RuleKind::Semantics => &mut self.semantics,
            RuleKind::Gloss => &mut self.gloss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub surface: String,
    pub pos: String,
    pub features: FeatureStructure,
    pub senses: Vec<String>,
    pub translations: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse { file: file.to_string(), line, message: message.into() }
}

/// Locations of the files a rulebase is built from. Any may be absent.
#[derive(Debug, Clone, Default)]
pub struct RuleFiles {
    pub grammar: Option<PathBuf>,
    pub semantics: Option<PathBuf>,
    pub gloss: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub sem_lexicon: Option<PathBuf>,
}

/// The textual form of a whole rulebase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleTexts {
    pub grammar: String,
    pub semantics: String,
    pub gloss: String,
    pub lexicon: String,
    pub sem_lexicon: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleBase {
    rules: Vec<SynchronizedRule>,
    index: HashMap<RuleKey, usize>,
    lexicon: BTreeMap<String, Vec<LexiconEntry>>,
    senses: BTreeMap<String, Vec<String>>,
    sense_features: BTreeMap<String, FeatureStructure>,
}

fn read_file(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

/// Loads and indexes every rule file and lexicon.
pub fn load_rulebase(files: &RuleFiles) -> Result<RuleBase, LoadError> {
    let mut rb = RuleBase::default();
    let kinds = [
        (&files.grammar, RuleKind::Syntax),
        (&files.semantics, RuleKind::Semantics),
        (&files.gloss, RuleKind::Gloss),
    ];
    for (path, kind) in kinds {
        if let Some(p) = path {
            rb.add_rules(&read_file(p)?, kind, &p.display().to_string())?;
        }
    }
    if let Some(p) = &files.sem_lexicon {
        rb.add_sem_lexicon(&read_file(p)?, &p.display().to_string())?;
    }
    if let Some(p) = &files.lexicon {
        rb.add_lexicon(&read_file(p)?, &p.display().to_string())?;
    }
    Ok(rb)
}

fn parse_key(e: &Sexp) -> Option<RuleKey> {
    let items = e.as_list()?;
    let (lhs, rest) = items.split_first()?;
    let (arrow, rhs) = rest.split_first()?;
    if !arrow.is_sym("->") || rhs.is_empty() {
        return None;
    }
    let rhs = rhs.iter().map(|c| c.as_sym().map(str::to_string)).collect::<Option<Vec<_>>>()?;
    Some(RuleKey { lhs: lhs.as_sym()?.to_string(), rhs })
}

impl RuleBase {
    pub fn from_texts(texts: &RuleTexts) -> Result<RuleBase, LoadError> {
        let mut rb = RuleBase::default();
        rb.add_rules(&texts.grammar, RuleKind::Syntax, "<grammar>")?;
        rb.add_rules(&texts.semantics, RuleKind::Semantics, "<semantics>")?;
        rb.add_rules(&texts.gloss, RuleKind::Gloss, "<gloss>")?;
        rb.add_sem_lexicon(&texts.sem_lexicon, "<sem-lexicon>")?;
        rb.add_lexicon(&texts.lexicon, "<lexicon>")?;
        Ok(rb)
    }

    /// Parses a rule file and attaches its equation sets as `kind`.
    pub fn add_rules(&mut self, text: &str, kind: RuleKind, file: &str) -> Result<(), LoadError> {
        let items = sexp::read_all(text).map_err(|e| parse_err(file, e.line, e.message))?;
        for (item, line) in items {
            let Some(parts) = item.as_list() else {
                return Err(parse_err(file, line, "expected a rule list"));
            };
            let Some(key) = parts.first().and_then(parse_key) else {
                return Err(parse_err(file, line, "rule must start with (LHS -> RHS ...)"));
            };
            let eqs = parts[1..]
                .iter()
                .map(equation_from_sexp)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(file, line, e.to_string()))?;
            self.insert(key, kind, eqs);
        }
        Ok(())
    }

    pub fn insert(&mut self, key: RuleKey, kind: RuleKind, eqs: Vec<Equation>) {
        let idx = match self.index.get(&key) {
            Some(&i) => i,
            None => {
                self.rules.push(SynchronizedRule::new(key.clone()));
                self.index.insert(key, self.rules.len() - 1);
                self.rules.len() - 1
            }
        };
        self.rules[idx].equations_mut(kind).push(eqs);
    }

    /// Bilingual lexicon: `surface TAB pos TAB alt1|alt2 [TAB features]`.
    pub fn add_lexicon(&mut self, text: &str, file: &str) -> Result<(), LoadError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 || cols.len() > 4 {
                return Err(parse_err(file, n + 1, "expected surface, pos, translations[, features]"));
            }
            let translations: Vec<String> =
                cols[2].split('|').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            if translations.is_empty() {
                return Err(parse_err(file, n + 1, "empty translation list"));
            }
            let features = match cols.get(3) {
                Some(t) if !t.trim().is_empty() => FeatureStructure::parse(t)
                    .map_err(|e| parse_err(file, n + 1, e.to_string()))?,
                _ => FeatureStructure::new(),
            };
            let surface = cols[0].to_string();
            let entry = LexiconEntry {
                senses: self.senses.get(&surface).cloned().unwrap_or_default(),
                surface: surface.clone(),
                pos: cols[1].to_string(),
                features,
                translations,
            };
            self.lexicon.entry(surface).or_default().push(entry);
        }
        Ok(())
    }

    /// Semantic lexicon: `surface TAB concept1|concept2 [TAB FS]`. The
    /// optional structure is shared by every sense of the surface; the
    /// concept `-` marks a semantically empty word.
    pub fn add_sem_lexicon(&mut self, text: &str, file: &str) -> Result<(), LoadError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.splitn(3, '\t');
            let (Some(surface), Some(concepts)) = (cols.next(), cols.next()) else {
                return Err(parse_err(file, n + 1, "expected surface TAB concepts"));
            };
            if let Some(fs_text) = cols.next().filter(|t| !t.trim().is_empty()) {
                let fs = FeatureStructure::parse(fs_text).map_err(|e| parse_err(file, n + 1, e.to_string()))?;
                let merged = match self.sense_features.get(surface) {
                    Some(old) => old
                        .unify(&fs)
                        .ok_or_else(|| parse_err(file, n + 1, format!("features for {surface} do not unify")))?,
                    None => fs,
                };
                self.sense_features.insert(surface.to_string(), merged);
            }
            let list = self.senses.entry(surface.to_string()).or_default();
            for c in concepts.split('|').map(str::trim).filter(|c| !c.is_empty()) {
                if !list.iter().any(|x| x == c) {
                    list.push(c.to_string());
                }
            }
            if list.is_empty() {
                return Err(parse_err(file, n + 1, "no concepts (use - for an empty word)"));
            }
            if let Some(entries) = self.lexicon.get_mut(surface) {
                for e in entries {
                    e.senses = list.clone();
                }
            }
        }
        Ok(())
    }

    pub fn rules(&self) -> &[SynchronizedRule] {
        &self.rules
    }

    pub fn rule(&self, key: &RuleKey) -> Option<&SynchronizedRule> {
        self.index.get(key).map(|&i| &self.rules[i])
    }

    /// Rules carrying at least one syntax equation set.
    pub fn syntax_rules(&self) -> impl Iterator<Item = &SynchronizedRule> {
        self.rules.iter().filter(|r| !r.syntax.is_empty())
    }

    pub fn entries(&self, surface: &str) -> &[LexiconEntry] {
        self.lexicon.get(surface).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn lexicon(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.lexicon.values().flatten()
    }

    pub fn senses(&self, surface: &str) -> &[String] {
        self.senses.get(surface).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Extra semantic features attached to every sense of `surface`.
    pub fn sense_features(&self, surface: &str) -> Option<&FeatureStructure> {
        self.sense_features.get(surface)
    }

    /// Distinct syntax backbones by arity: (unary, binary, n-ary).
    pub fn arity_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for r in self.syntax_rules() {
            match r.key.arity() {
                1 => counts.0 += 1,
                2 => counts.1 += 1,
                _ => counts.2 += 1,
            }
        }
        counts
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.lexicon.is_empty() && self.senses.is_empty()
    }

    /// Serializes back into the file formats `from_texts` reads.
    pub fn to_texts(&self) -> RuleTexts {
        let mut texts = RuleTexts::default();
        for rule in &self.rules {
            for (kind, out) in [
                (RuleKind::Syntax, &mut texts.grammar),
                (RuleKind::Semantics, &mut texts.semantics),
                (RuleKind::Gloss, &mut texts.gloss),
            ] {
                for eqs in rule.equations(kind) {
                    out.push_str(&format!("(({})", rule.key));
                    for e in eqs {
                        out.push_str(&format!("\n  {e}"));
                    }
                    out.push_str(")\n");
                }
            }
        }
        for e in self.lexicon() {
            texts.lexicon.push_str(&format!("{}\t{}\t{}", e.surface, e.pos, e.translations.join("|")));
            if !e.features.is_empty() {
                texts.lexicon.push_str(&format!("\t{}", e.features));
            }
            texts.lexicon.push('\n');
        }
        for (surface, concepts) in &self.senses {
            texts.sem_lexicon.push_str(&format!("{surface}\t{}", concepts.join("|")));
            if let Some(fs) = self.sense_features.get(surface) {
                texts.sem_lexicon.push_str(&format!("\t{fs}"));
            }
            texts.sem_lexicon.push('\n');
        }
        texts
    }

    pub fn validate(&self, mode: ValidationMode) -> ValidationReport {
        validate_rulebase(self, mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Gloss,
    Interlingua,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Syntax backbones with no counterpart of the mode's kind.
    pub missing: Vec<RuleKey>,
    /// Equation sets naming variables outside `X0..Xn`.
    pub bad_variables: Vec<(RuleKey, RuleKind, usize)>,
    pub mode: Option<ValidationMode>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.bad_variables.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.mode {
            Some(ValidationMode::Gloss) => "missing-gloss",
            _ => "missing-semantics",
        };
        for k in &self.missing {
            writeln!(f, "{label}\t{k}")?;
        }
        for (k, kind, v) in &self.bad_variables {
            writeln!(f, "bad-variable\t{kind}\t{k}\tX{v}")?;
        }
        Ok(())
    }
}

pub fn validate_rulebase(rb: &RuleBase, mode: ValidationMode) -> ValidationReport {
    let mut report = ValidationReport { mode: Some(mode), ..Default::default() };
    let wanted = match mode {
        ValidationMode::Gloss => RuleKind::Gloss,
        ValidationMode::Interlingua => RuleKind::Semantics,
    };
    for rule in &rb.rules {
        if !rule.syntax.is_empty() && rule.equations(wanted).is_empty() {
            report.missing.push(rule.key.clone());
        }
        for kind in [RuleKind::Syntax, RuleKind::Semantics, RuleKind::Gloss] {
            let mut vars = BTreeSet::new();
            for e in rule.equations(kind).iter().flatten() {
                e.variables(&mut vars);
            }
            for v in vars.into_iter().filter(|&v| v > rule.key.arity()) {
                report.bad_variables.push((rule.key.clone(), kind, v));
            }
        }
    }
    report
}
