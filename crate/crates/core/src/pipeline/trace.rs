//! Per-sentence stage traces and batch reports.

use std::fmt;

use super::config::PathKind;
use super::{SentenceError, Translation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Transformer,
    RankerPruner,
}

impl StageKind {
    pub fn code(self) -> &'static str {
        match self {
            StageKind::Transformer => "T",
            StageKind::RankerPruner => "R",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub input: u64,
    pub output: u64,
    pub pruned: u64,
}

impl Counters {
    fn add(&mut self, other: &Counters) {
        self.input += other.input;
        self.output += other.output;
        self.pruned += other.pruned;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: &'static str,
    pub kind: StageKind,
    /// Structure type consumed.
    pub takes: &'static str,
    /// Structure type produced.
    pub gives: &'static str,
    pub counters: Counters,
}

impl Stage {
    pub fn transformer(name: &'static str, takes: &'static str, gives: &'static str, input: u64, output: u64) -> Stage {
        Stage { name, kind: StageKind::Transformer, takes, gives, counters: Counters { input, output, pruned: 0 } }
    }

    /// A ranker-pruner keeps at most what it receives.
    pub fn ranker(name: &'static str, takes: &'static str, input: u64, output: u64) -> Stage {
        let output = output.min(input);
        Stage {
            name,
            kind: StageKind::RankerPruner,
            takes,
            gives: takes,
            counters: Counters { input, output, pruned: input - output },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// The path that produced the output.
    pub path: PathKind,
    pub fell_back: bool,
    pub full_parse: bool,
    /// Number of pieces glossed or analysed; 1 for a full parse.
    pub cover: usize,
    pub stages: Vec<Stage>,
    pub lattice_paths: u128,
    /// Candidate structures entering the last ranking decision.
    pub candidates: usize,
    pub semantic_score: Option<f64>,
    /// Extracted alternatives with natural-log LM scores, best first.
    pub alternatives: Vec<(String, f64)>,
}

impl Trace {
    pub fn new(path: PathKind) -> Trace {
        Trace {
            path,
            fell_back: false,
            full_parse: false,
            cover: 0,
            stages: Vec::new(),
            lattice_paths: 0,
            candidates: 0,
            semantic_score: None,
            alternatives: Vec::new(),
        }
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "path {}{} full-parse {} cover {} paths {} candidates {}",
            self.path,
            if self.fell_back { " (fallback)" } else { "" },
            self.full_parse,
            self.cover,
            self.lattice_paths,
            self.candidates
        )?;
        for s in &self.stages {
            let c = &s.counters;
            writeln!(
                f,
                "  {} {:<9} {}->{} in {} out {} pruned {}",
                s.kind.code(),
                s.name,
                s.takes,
                s.gives,
                c.input,
                c.output,
                c.pruned
            )?;
        }
        if let Some(s) = self.semantic_score {
            writeln!(f, "  semantic score {s:e}")?;
        }
        for (text, score) in &self.alternatives {
            writeln!(f, "  lm {score:.6} {text}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTotal {
    pub name: &'static str,
    pub kind: StageKind,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub sentences: usize,
    pub errors: usize,
    pub fallbacks: usize,
    /// Summed counters per stage name, in order of first appearance.
    pub stages: Vec<StageTotal>,
    pub full_parse_rate: f64,
    pub average_paths: f64,
    pub average_candidates: f64,
}

/// Aggregates the traces of a batch.
pub fn run_trace_report(results: &[Result<Translation, SentenceError>]) -> Report {
    let traces: Vec<&Trace> = results
        .iter()
        .map(|r| match r {
            Ok(t) => &t.trace,
            Err(e) => &e.trace,
        })
        .collect();
    let mut stages: Vec<StageTotal> = Vec::new();
    for t in &traces {
        for s in &t.stages {
            match stages.iter_mut().find(|x| x.name == s.name) {
                Some(x) => x.counters.add(&s.counters),
                None => stages.push(StageTotal { name: s.name, kind: s.kind, counters: s.counters }),
            }
        }
    }
    let n = traces.len();
    let mean = |f: &dyn Fn(&Trace) -> f64| if n == 0 { 0.0 } else { traces.iter().map(|t| f(t)).sum::<f64>() / n as f64 };
    Report {
        sentences: n,
        errors: results.iter().filter(|r| r.is_err()).count(),
        fallbacks: traces.iter().filter(|t| t.fell_back).count(),
        stages,
        full_parse_rate: mean(&|t| if t.full_parse { 1.0 } else { 0.0 }),
        average_paths: mean(&|t| t.lattice_paths as f64),
        average_candidates: mean(&|t| t.candidates as f64),
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentences {} errors {} fallbacks {}", self.sentences, self.errors, self.fallbacks)?;
        writeln!(f, "full-parse rate {:.4}", self.full_parse_rate)?;
        writeln!(f, "average lattice paths {:.4}", self.average_paths)?;
        writeln!(f, "average candidates {:.4}", self.average_candidates)?;
        for s in &self.stages {
            let c = &s.counters;
            writeln!(f, "{} {:<9} in {} out {} pruned {}", s.kind.code(), s.name, c.input, c.output, c.pruned)?;
        }
        Ok(())
    }
}
