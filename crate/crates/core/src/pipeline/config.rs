//! Line-oriented `key = value` pipeline configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::featstruct::DEFAULT_SOLUTION_CAP;
use crate::lm::DEFAULT_CUTOFF;
use crate::parser::DEFAULT_EDGE_CAP;
use crate::semantics::DEFAULT_CANDIDATE_CAP;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Gloss,
    Interlingua,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::Gloss => "gloss",
            PathKind::Interlingua => "interlingua",
        })
    }
}

/// Where inference sits relative to semantic ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferOrder {
    BeforeRank,
    AfterRank,
}

/// Resource keys that name input files.
pub const FILE_KEYS: [&str; 16] = [
    "patterns",
    "compounds",
    "gazetteer",
    "grammar",
    "semantics",
    "gloss",
    "lexicon",
    "sem_lexicon",
    "taxonomy",
    "gen_lexicon",
    "repairs",
    "an_exceptions",
    "pos_lexicon",
    "irregulars",
    "lm_corpus",
    "article_corpus",
];

/// Resource keys that name trained models, written by training.
pub const MODEL_KEYS: [&str; 2] = ["lm", "tree"];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub path: PathKind,
    /// `(key, resolved path)` for every configured file, in file order.
    pub files: Vec<(String, PathBuf)>,
    pub solution_cap: usize,
    pub edge_cap: usize,
    pub candidate_cap: usize,
    pub gloss_cap: usize,
    pub gt_cutoff: usize,
    pub top_n: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    /// Only used by test data generators.
    pub seed: u64,
    pub fallback: bool,
    pub infer_order: InferOrder,
    pub root_categories: Vec<String>,
    pub fragment_order: Vec<String>,
    pub verbal_tags: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            path: PathKind::Gloss,
            files: Vec::new(),
            solution_cap: DEFAULT_SOLUTION_CAP,
            edge_cap: DEFAULT_EDGE_CAP,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            gloss_cap: DEFAULT_SOLUTION_CAP,
            gt_cutoff: DEFAULT_CUTOFF,
            top_n: 5,
            tree_max_depth: 10,
            tree_min_leaf: 5,
            seed: 0,
            fallback: true,
            infer_order: InferOrder::BeforeRank,
            root_categories: vec!["S".into()],
            fragment_order: Vec::new(),
            verbal_tags: vec!["V".into()],
        }
    }
}

fn list(value: &str) -> Vec<String> {
    value.split([',', ' ']).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl PipelineConfig {
    /// Parses configuration text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| PipelineError::Config { line: n + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let number = || value.parse::<usize>().map_err(|_| err(format!("{key}: expected a count, got {value:?}")));
            match key {
                "path" => {
                    cfg.path = match value {
                        "gloss" => PathKind::Gloss,
                        "interlingua" => PathKind::Interlingua,
                        _ => return Err(err(format!("path must be gloss or interlingua, got {value:?}"))),
                    }
                }
                "solution_cap" => cfg.solution_cap = number()?,
                "edge_cap" => cfg.edge_cap = number()?,
                "candidate_cap" => cfg.candidate_cap = number()?,
                "gloss_cap" => cfg.gloss_cap = number()?,
                "gt_cutoff" => cfg.gt_cutoff = number()?,
                "top_n" => cfg.top_n = number()?.max(1),
                "tree_max_depth" => cfg.tree_max_depth = number()?,
                "tree_min_leaf" => cfg.tree_min_leaf = number()?,
                "seed" => cfg.seed = value.parse().map_err(|_| err(format!("bad seed {value:?}")))?,
                "fallback" => {
                    cfg.fallback = match value {
                        "on" | "true" | "yes" => true,
                        "off" | "false" | "no" => false,
                        _ => return Err(err(format!("fallback must be on or off, got {value:?}"))),
                    }
                }
                "infer_order" => {
                    cfg.infer_order = match value {
                        "before-rank" => InferOrder::BeforeRank,
                        "after-rank" => InferOrder::AfterRank,
                        _ => return Err(err(format!("infer_order must be before-rank or after-rank, got {value:?}"))),
                    }
                }
                "root_categories" => cfg.root_categories = list(value),
                "fragment_order" => cfg.fragment_order = list(value),
                "verbal_tags" => cfg.verbal_tags = list(value),
                k if FILE_KEYS.contains(&k) || MODEL_KEYS.contains(&k) => {
                    let p = base.join(value);
                    cfg.files.retain(|(key, _)| key != k);
                    cfg.files.push((k.to_string(), p));
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    /// Reads a configuration file and checks that its input files exist.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = PipelineConfig::parse(&text, base)?;
        cfg.check_inputs()?;
        Ok(cfg)
    }

    pub fn check_inputs(&self) -> Result<(), PipelineError> {
        for (key, p) in &self.files {
            if FILE_KEYS.contains(&key.as_str()) && !p.is_file() {
                return Err(PipelineError::MissingFile { key: key.clone(), path: p.clone() });
            }
        }
        Ok(())
    }

    pub fn file(&self, key: &str) -> Option<&Path> {
        self.files.iter().find(|(k, _)| k == key).map(|(_, p)| p.as_path())
    }

    pub fn set_file(&mut self, key: &str, path: impl Into<PathBuf>) {
        self.files.retain(|(k, _)| k != key);
        self.files.push((key.to_string(), path.into()));
    }
}
