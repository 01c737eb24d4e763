//! The stage harness: resource loading, translation along either path,
//! model training and batch reporting.

mod config;
mod trace;

use std::path::{Path, PathBuf};

pub use config::{InferOrder, PathKind, PipelineConfig, FILE_KEYS, MODEL_KEYS};
pub use trace::{run_trace_report, Counters, Report, Stage, StageKind, StageTotal, Trace};

use crate::chunker::{chunk, parse_token, resegment, PatternSet, SegmentDict, Token};
use crate::extract::top_n;
use crate::glosser::{gloss_forest_robust, GlossConfig};
use crate::lattice::WordLattice;
use crate::lm::{LmConfig, TrigramModel};
use crate::morphology::{Morphology, BUILTIN_IRREGULARS};
use crate::parser::{parse, ParseForest, ParserConfig, UNKNOWN_CATEGORY};
use crate::posteditor::{
    apply_repairs, extract_instances, insert_articles, parse_repairs, parse_word_list, train_tree, ArticleContext,
    DecisionTree, PosTagger, RepairRule, TreeConfig,
};
use crate::realizer::{realize, GenLexicon, RealizerConfig};
use crate::rulebase::{load_rulebase, RuleBase, RuleFiles};
use crate::semantics::{analyze, infer, rank_candidates, score_graph, MeaningGraph, ScoreConfig, SemCandidate, SemConfig, Taxonomy};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{key}: file {path} does not exist")]
    MissingFile { key: String, path: PathBuf },
    #[error("{0}: not configured")]
    MissingResource(String),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{key}: {message}")]
    Resource { key: String, message: String },
}

fn resource_err(key: &str, e: impl ToString) -> PipelineError {
    PipelineError::Resource { key: key.to_string(), message: e.to_string() }
}

fn read(cfg: &PipelineConfig, key: &str) -> Result<Option<String>, PipelineError> {
    match cfg.file(key) {
        None => Ok(None),
        Some(p) => std::fs::read_to_string(p)
            .map(Some)
            .map_err(|source| PipelineError::Io { path: p.to_path_buf(), source }),
    }
}

fn require(cfg: &PipelineConfig, key: &str) -> Result<String, PipelineError> {
    read(cfg, key)?.ok_or_else(|| PipelineError::MissingResource(key.to_string()))
}

/// Everything translation needs, immutable once loaded.
#[derive(Debug, Clone)]
pub struct Resources {
    pub config: PipelineConfig,
    pub rulebase: RuleBase,
    pub patterns: PatternSet,
    pub compounds: SegmentDict,
    pub gazetteer: SegmentDict,
    pub morphology: Morphology,
    pub taxonomy: Option<Taxonomy>,
    pub gen_lexicon: Option<GenLexicon>,
    pub lm: TrigramModel,
    pub tree: Option<DecisionTree>,
    pub repairs: Vec<RepairRule>,
    pub articles: ArticleContext,
}

/// Tagger, exception list and generation lexicon for article handling.
pub fn article_context(cfg: &PipelineConfig) -> Result<ArticleContext, PipelineError> {
    let mut ctx = ArticleContext::default();
    if let Some(t) = read(cfg, "pos_lexicon")? {
        let mut tagger = PosTagger::builtin();
        tagger.extend(&t).map_err(|e| resource_err("pos_lexicon", e))?;
        ctx.tagger = tagger;
    }
    if let Some(t) = read(cfg, "an_exceptions")? {
        ctx.exceptions.extend(parse_word_list(&t));
    }
    if let Some(t) = read(cfg, "gen_lexicon")? {
        ctx.lexicon = Some(GenLexicon::parse(&t).map_err(|e| resource_err("gen_lexicon", e))?);
    }
    Ok(ctx)
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Resources, PipelineError> {
        cfg.check_inputs()?;
        let files = RuleFiles {
            grammar: cfg.file("grammar").map(Path::to_path_buf),
            semantics: cfg.file("semantics").map(Path::to_path_buf),
            gloss: cfg.file("gloss").map(Path::to_path_buf),
            lexicon: cfg.file("lexicon").map(Path::to_path_buf),
            sem_lexicon: cfg.file("sem_lexicon").map(Path::to_path_buf),
        };
        let rulebase = load_rulebase(&files).map_err(|e| resource_err("rules", e))?;
        let patterns = match read(cfg, "patterns")? {
            Some(t) => PatternSet::parse(&t).map_err(|e| resource_err("patterns", e))?,
            None => PatternSet::default(),
        };
        let dict = |key: &str| -> Result<SegmentDict, PipelineError> {
            match read(cfg, key)? {
                Some(t) => SegmentDict::parse(&t).map_err(|e| resource_err(key, e)),
                None => Ok(SegmentDict::default()),
            }
        };
        let morphology = match read(cfg, "irregulars")? {
            Some(t) => Morphology::parse(&format!("{BUILTIN_IRREGULARS}\n{t}")).map_err(|e| resource_err("irregulars", e))?,
            None => Morphology::builtin(),
        };
        let taxonomy = match read(cfg, "taxonomy")? {
            Some(t) => Some(Taxonomy::parse(&t).map_err(|e| resource_err("taxonomy", e))?),
            None => None,
        };
        let gen_lexicon = match read(cfg, "gen_lexicon")? {
            Some(t) => Some(GenLexicon::parse(&t).map_err(|e| resource_err("gen_lexicon", e))?),
            None => None,
        };
        if cfg.path == PathKind::Interlingua {
            for (key, present) in [("taxonomy", taxonomy.is_some()), ("gen_lexicon", gen_lexicon.is_some())] {
                if !present {
                    return Err(PipelineError::MissingResource(key.into()));
                }
            }
        }
        let lm = match read_model(cfg, "lm")? {
            Some(t) => TrigramModel::from_text(&t).map_err(|e| resource_err("lm", e))?,
            None => match read(cfg, "lm_corpus")? {
                Some(corpus) => train_lm_text(&corpus, cfg),
                None => TrigramModel::train_text("", lm_config(cfg)),
            },
        };
        let tree = match read_model(cfg, "tree")? {
            Some(t) => Some(DecisionTree::parse(&t).map_err(|e| resource_err("tree", e))?),
            None => None,
        };
        let repairs = match read(cfg, "repairs")? {
            Some(t) => parse_repairs(&t).map_err(|e| resource_err("repairs", e))?,
            None => Vec::new(),
        };
        Ok(Resources {
            rulebase,
            patterns,
            compounds: dict("compounds")?,
            gazetteer: dict("gazetteer")?,
            morphology,
            taxonomy,
            gen_lexicon,
            lm,
            tree,
            repairs,
            articles: article_context(cfg)?,
            config: cfg.clone(),
        })
    }

    pub fn parser_config(&self) -> ParserConfig {
        let c = &self.config;
        ParserConfig {
            edge_cap: c.edge_cap,
            solution_cap: c.solution_cap,
            root_categories: c.root_categories.clone(),
            fragment_order: c.fragment_order.clone(),
            ..ParserConfig::default()
        }
    }

    pub fn gloss_config(&self) -> GlossConfig {
        let c = &self.config;
        GlossConfig {
            verbal_tags: c.verbal_tags.clone(),
            cap: c.gloss_cap,
            solution_cap: c.solution_cap,
            fragment_order: c.fragment_order.clone(),
        }
    }
}

/// A configured model file; absent files are not an error.
fn read_model(cfg: &PipelineConfig, key: &str) -> Result<Option<String>, PipelineError> {
    match cfg.file(key) {
        Some(p) if p.is_file() => read(cfg, key),
        Some(p) => Err(PipelineError::MissingFile { key: key.to_string(), path: p.to_path_buf() }),
        None => Ok(None),
    }
}

fn lm_config(cfg: &PipelineConfig) -> LmConfig {
    LmConfig { cutoff: cfg.gt_cutoff, ..LmConfig::default() }
}

fn train_lm_text(corpus: &str, cfg: &PipelineConfig) -> TrigramModel {
    TrigramModel::train_text(corpus, lm_config(cfg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub text: String,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct SentenceError {
    pub message: String,
    pub trace: Trace,
}

/// Reads `surface/POS` tokens. Anything else becomes an unknown word so
/// that every line can still be translated.
pub fn read_tokens(line: &str) -> Vec<Token> {
    line.split_whitespace().map(|t| parse_token(t).unwrap_or_else(|| Token::new(t, UNKNOWN_CATEGORY))).collect()
}

fn saturate(n: u128) -> u64 {
    n.min(u64::MAX as u128) as u64
}

struct Front {
    forest: ParseForest,
    trace: Trace,
}

fn front_end(line: &str, res: &Resources) -> Result<Option<Front>, SentenceError> {
    let mut trace = Trace::new(res.config.path);
    let tokens = read_tokens(line);
    if tokens.is_empty() {
        return Ok(None);
    }
    let tokens = resegment(&tokens, &res.compounds, &res.gazetteer);
    let chunked = chunk(&tokens, &res.patterns);
    trace.stages.push(Stage::transformer("chunk", "tokens", "tokens", 1, 1));
    let forest = match parse(&chunked, &res.rulebase, &res.parser_config()) {
        Ok(f) => f,
        Err(e) => return Err(SentenceError { message: e.to_string(), trace }),
    };
    trace.stages.push(Stage::transformer("parse", "tokens", "forest", 1, forest.constituents.len() as u64));
    trace.full_parse = forest.has_full_parse();
    Ok(Some(Front { forest, trace }))
}

/// Best path, repairs and article insertion.
fn back_end(lattice: &WordLattice, res: &Resources, trace: &mut Trace) -> String {
    let paths = lattice.edge_path_count();
    trace.lattice_paths = paths;
    let best = top_n(lattice, &res.lm, res.config.top_n);
    trace.stages.push(Stage::ranker("extract", "lattice", saturate(paths), best.len().min(1) as u64));
    trace.alternatives = best.iter().map(|s| (s.words.join(" "), s.score)).collect();
    let text = best.first().map(|s| s.words.join(" ")).unwrap_or_default();
    let text = apply_repairs(&text, &res.repairs);
    trace.stages.push(Stage::transformer("repairs", "text", "text", 1, 1));
    let text = match &res.tree {
        Some(tree) => {
            trace.stages.push(Stage::transformer("articles", "text", "text", 1, 1));
            insert_articles(&text, tree, &res.articles)
        }
        None => text,
    };
    text
}

fn gloss_path(front: Front, res: &Resources) -> Translation {
    let Front { forest, mut trace } = front;
    let out = gloss_forest_robust(&forest, &res.rulebase, &res.morphology, &res.gloss_config());
    trace.cover = out.cover.len();
    trace.candidates = out.glosses.iter().map(Vec::len).sum();
    trace.stages.push(Stage::transformer("gloss", "forest", "lattice", out.cover.len() as u64, 1));
    let text = back_end(&out.lattice, res, &mut trace);
    Translation { text, trace }
}

/// Root meaning graphs, deduplicated up to isomorphism.
fn root_graphs(forest: &ParseForest, res: &Resources) -> (Vec<MeaningGraph>, usize) {
    let cfg = SemConfig { candidate_cap: res.config.candidate_cap, solution_cap: res.config.solution_cap };
    let analysis = analyze(forest, &res.rulebase, &cfg);
    let mut keys = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for &r in &forest.roots {
        for g in analysis.graphs(r) {
            if keys.insert(g.canonical()) {
                out.push(g);
            }
        }
    }
    (out, forest.constituents.len())
}

fn interlingua_path(front: Front, res: &Resources) -> Result<Translation, SentenceError> {
    let Front { forest, mut trace } = front;
    let fallback = |mut trace: Trace, forest: ParseForest, why: &str| -> Result<Translation, SentenceError> {
        if !res.config.fallback {
            return Err(SentenceError { message: why.to_string(), trace });
        }
        log::info!("{why}; falling back to the gloss path");
        trace.fell_back = true;
        trace.path = PathKind::Gloss;
        Ok(gloss_path(Front { forest, trace }, res))
    };
    let (graphs, constituents) = root_graphs(&forest, res);
    trace.stages.push(Stage::transformer("analyze", "forest", "graphs", constituents as u64, graphs.len() as u64));
    if graphs.is_empty() {
        return fallback(trace, forest, "no root meaning graph");
    }
    trace.cover = 1;
    let taxonomy = res.taxonomy.as_ref().expect("checked at load");
    let lexicon = res.gen_lexicon.as_ref().expect("checked at load");
    let score_cfg = ScoreConfig::default();
    let n = graphs.len() as u64;
    let ranked = match res.config.infer_order {
        InferOrder::BeforeRank => {
            let inferred: Vec<MeaningGraph> = graphs.iter().map(|g| infer(g, Some(taxonomy))).collect();
            trace.stages.push(Stage::transformer("infer", "graphs", "graphs", n, n));
            let mut r = rank_candidates(inferred.iter().map(|g| score_graph(g, taxonomy, &score_cfg)).collect());
            r.truncate(res.config.candidate_cap);
            trace.stages.push(Stage::ranker("rank", "graphs", n, r.len() as u64));
            r
        }
        InferOrder::AfterRank => {
            let mut r = rank_candidates(graphs.iter().map(|g| score_graph(g, taxonomy, &score_cfg)).collect());
            r.truncate(res.config.candidate_cap);
            trace.stages.push(Stage::ranker("rank", "graphs", n, r.len() as u64));
            let r: Vec<SemCandidate> =
                r.into_iter().map(|c| SemCandidate { graph: infer(&c.graph, Some(taxonomy)), score: c.score }).collect();
            trace.stages.push(Stage::transformer("infer", "graphs", "graphs", r.len() as u64, r.len() as u64));
            r
        }
    };
    trace.candidates = ranked.len();
    let rcfg = RealizerConfig::default();
    let mut realized = None;
    for c in &ranked {
        match realize(&c.graph, lexicon, &res.morphology, &rcfg) {
            Ok(l) => {
                realized = Some((l, c.score));
                break;
            }
            Err(e) => log::info!("candidate not realizable: {e}"),
        }
    }
    let Some((lattice, score)) = realized else {
        trace.stages.push(Stage::transformer("realize", "graphs", "lattice", ranked.len() as u64, 0));
        return fallback(trace, forest, "no realizable meaning graph");
    };
    trace.stages.push(Stage::transformer("realize", "graphs", "lattice", 1, 1));
    trace.semantic_score = Some(score);
    let text = back_end(&lattice, res, &mut trace);
    Ok(Translation { text, trace })
}

/// Translates one line of `surface/POS` tokens.
pub fn translate(line: &str, res: &Resources) -> Result<Translation, SentenceError> {
    let Some(front) = front_end(line, res)? else {
        return Ok(Translation { text: String::new(), trace: Trace::new(res.config.path) });
    };
    match res.config.path {
        PathKind::Gloss => Ok(gloss_path(front, res)),
        PathKind::Interlingua => interlingua_path(front, res),
    }
}

pub fn translate_batch<S: AsRef<str>>(lines: &[S], res: &Resources) -> Vec<Result<Translation, SentenceError>> {
    lines.iter().map(|l| translate(l.as_ref(), res)).collect()
}

/// Serialized models produced by training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainedModels {
    pub lm: String,
    pub tree: String,
}

pub fn train_lm(cfg: &PipelineConfig) -> Result<TrigramModel, PipelineError> {
    let corpus = require(cfg, "lm_corpus")?;
    if corpus.split_whitespace().next().is_none() {
        return Err(resource_err("lm_corpus", "corpus is empty"));
    }
    Ok(train_lm_text(&corpus, cfg))
}

pub fn train_postedit(cfg: &PipelineConfig) -> Result<DecisionTree, PipelineError> {
    let corpus = require(cfg, "article_corpus")?;
    let instances = extract_instances(&corpus, &article_context(cfg)?);
    train_tree(&instances, TreeConfig { max_depth: cfg.tree_max_depth, min_leaf: cfg.tree_min_leaf })
        .map_err(|e| resource_err("article_corpus", e))
}

/// Trains both models and writes them to the configured `lm` and `tree`
/// paths when set.
pub fn train_models(cfg: &PipelineConfig) -> Result<TrainedModels, PipelineError> {
    let models = TrainedModels { lm: train_lm(cfg)?.to_text(), tree: train_postedit(cfg)?.to_text() };
    for (key, text) in [("lm", &models.lm), ("tree", &models.tree)] {
        if let Some(p) = cfg.file(key) {
            std::fs::write(p, text).map_err(|source| PipelineError::Io { path: p.to_path_buf(), source })?;
        }
    }
    Ok(models)
}
