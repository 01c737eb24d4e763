use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kbmt::chunker::{chunk, format_tokens, resegment};
use kbmt::extract::top_n;
use kbmt::glosser::gloss_forest_robust;
use kbmt::lattice::WordLattice;
use kbmt::parser::parse;
use kbmt::pipeline::{
    read_tokens, run_trace_report, train_lm, train_postedit, translate, translate_batch, PipelineConfig, PipelineError,
    Resources,
};
use kbmt::posteditor::{apply_repairs, insert_articles};
use kbmt::realizer::{realize, RealizerConfig};
use kbmt::semantics::{analyze, infer, rank_candidates, score_graph, MeaningGraph, ScoreConfig, SemConfig};

#[derive(Parser)]
#[command(name = "kbmt", version, about = "Japanese to English translation pipeline")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Io {
    /// Input file; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Resegment and insert chunk barriers into token lines.
    Chunk(Io),
    /// Dump the parse forest of each token line.
    Parse(Io),
    /// Gloss each token line into a word lattice.
    Gloss(Io),
    /// Print the root meaning graphs of each token line.
    Analyze {
        #[command(flatten)]
        io: Io,
        /// Apply inference to each graph.
        #[arg(long)]
        infer: bool,
    },
    /// Score and sort meaning graphs given as SPL records.
    Rank(Io),
    /// Realize SPL records into word lattices.
    Realize(Io),
    /// Extract the best paths of lattice records.
    Extract {
        #[command(flatten)]
        io: Io,
        /// Number of paths per lattice.
        #[arg(long, default_value_t = 1)]
        top: usize,
    },
    /// Apply repairs and article insertion to text lines.
    Postedit(Io),
    /// Translate token lines.
    Translate {
        #[command(flatten)]
        io: Io,
        /// Write per-sentence traces here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train the trigram model.
    TrainLm(Io),
    /// Train the article decision tree.
    TrainPostedit(Io),
    /// Translate token lines and summarize the stage traces.
    Report(Io),
}

enum Failure {
    Resource(String),
    Usage(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Resource(e.to_string())
    }
}

fn io_err(path: &std::path::Path, e: io::Error) -> Failure {
    Failure::Resource(format!("{}: {e}", path.display()))
}

fn read_input(io: &Io) -> Result<String, Failure> {
    match &io.input {
        Some(p) => std::fs::read_to_string(p).map_err(|e| io_err(p, e)),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Failure::Resource(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn write_output(io: &Io, text: &str) -> Result<(), Failure> {
    match &io.output {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Resource(format!("stdout: {e}"))),
    }
}

/// Blank-line separated records; `;` lines are comments.
fn records(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !cur.trim().is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            cur.clear();
        } else if !line.trim_start().starts_with(';') {
            cur.push_str(line);
            cur.push('\n');
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

fn spl_records(text: &str) -> Result<Vec<MeaningGraph>, Failure> {
    records(text)
        .iter()
        .enumerate()
        .map(|(i, r)| MeaningGraph::parse_spl(r).map_err(|e| Failure::Usage(format!("record {}: {e}", i + 1))))
        .collect()
}

fn config(cli_config: &Option<PathBuf>) -> Result<PipelineConfig, Failure> {
    match cli_config {
        Some(p) => Ok(PipelineConfig::load(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = config(&cli.config)?;
    match cli.command {
        Command::TrainLm(io) => {
            if let Some(p) = &io.input {
                cfg.set_file("lm_corpus", p);
            }
            let text = train_lm(&cfg)?.to_text();
            let target = io.output.clone().or_else(|| cfg.file("lm").map(PathBuf::from));
            write_output(&Io { input: None, output: target }, &text)
        }
        Command::TrainPostedit(io) => {
            if let Some(p) = &io.input {
                cfg.set_file("article_corpus", p);
            }
            let text = train_postedit(&cfg)?.to_text();
            let target = io.output.clone().or_else(|| cfg.file("tree").map(PathBuf::from));
            write_output(&Io { input: None, output: target }, &text)
        }
        command => {
            let res = Resources::load(&cfg)?;
            run_with(command, &res)
        }
    }
}

fn run_with(command: Command, res: &Resources) -> Result<(), Failure> {
    let parser_cfg = res.parser_config();
    let lines = |io: &Io| -> Result<Vec<String>, Failure> { Ok(read_input(io)?.lines().map(String::from).collect()) };
    let chunked = |line: &str| chunk(&resegment(&read_tokens(line), &res.compounds, &res.gazetteer), &res.patterns);
    let mut out = String::new();
    match command {
        Command::Chunk(io) => {
            for l in lines(&io)? {
                out.push_str(&format_tokens(&chunked(&l)));
                out.push('\n');
            }
            write_output(&io, &out)
        }
        Command::Parse(io) => {
            for l in lines(&io)? {
                match parse(&chunked(&l), &res.rulebase, &parser_cfg) {
                    Ok(f) => out.push_str(&f.dump()),
                    Err(e) => out.push_str(&format!("; {e}\n")),
                }
                out.push('\n');
            }
            write_output(&io, &out)
        }
        Command::Gloss(io) => {
            let gcfg = res.gloss_config();
            for l in lines(&io)? {
                match parse(&chunked(&l), &res.rulebase, &parser_cfg) {
                    Ok(f) => out.push_str(&gloss_forest_robust(&f, &res.rulebase, &res.morphology, &gcfg).lattice.to_string()),
                    Err(e) => out.push_str(&format!("; {e}\n")),
                }
                out.push('\n');
            }
            write_output(&io, &out)
        }
        Command::Analyze { io, infer: do_infer } => {
            let scfg = SemConfig { candidate_cap: res.config.candidate_cap, solution_cap: res.config.solution_cap };
            for (n, l) in lines(&io)?.iter().enumerate() {
                out.push_str(&format!("; sentence {}\n", n + 1));
                let Ok(f) = parse(&chunked(l), &res.rulebase, &parser_cfg) else {
                    out.push('\n');
                    continue;
                };
                let a = analyze(&f, &res.rulebase, &scfg);
                for &r in &f.roots {
                    for g in a.graphs(r) {
                        let g = if do_infer { infer(&g, res.taxonomy.as_ref()) } else { g };
                        out.push_str(&g.to_spl());
                        out.push_str("\n\n");
                    }
                }
            }
            write_output(&io, &out)
        }
        Command::Rank(io) => {
            let t = res.taxonomy.as_ref().ok_or_else(|| Failure::Resource("taxonomy: not configured".into()))?;
            let graphs = spl_records(&read_input(&io)?)?;
            let ranked = rank_candidates(graphs.iter().map(|g| score_graph(g, t, &ScoreConfig::default())).collect());
            for c in ranked {
                out.push_str(&format!("; score {:e}\n{}\n\n", c.score, c.graph.to_spl()));
            }
            write_output(&io, &out)
        }
        Command::Realize(io) => {
            let lex = res.gen_lexicon.as_ref().ok_or_else(|| Failure::Resource("gen_lexicon: not configured".into()))?;
            for g in spl_records(&read_input(&io)?)? {
                match realize(&g, lex, &res.morphology, &RealizerConfig::default()) {
                    Ok(l) => out.push_str(&l.to_string()),
                    Err(e) => out.push_str(&format!("; {e}\n")),
                }
                out.push('\n');
            }
            write_output(&io, &out)
        }
        Command::Extract { io, top } => {
            if top == 0 {
                return Err(Failure::Usage("--top must be at least 1".into()));
            }
            for (i, r) in records(&read_input(&io)?).iter().enumerate() {
                let l = WordLattice::parse(r).map_err(|e| Failure::Usage(format!("record {}: {e}", i + 1)))?;
                let best = top_n(&l, &res.lm, top);
                if top == 1 {
                    out.push_str(&best.first().map(|s| s.words.join(" ")).unwrap_or_default());
                    out.push('\n');
                } else {
                    for s in best {
                        out.push_str(&format!("{:.6}\t{}\n", s.score, s.words.join(" ")));
                    }
                    out.push('\n');
                }
            }
            write_output(&io, &out)
        }
        Command::Postedit(io) => {
            for l in lines(&io)? {
                let t = apply_repairs(&l, &res.repairs);
                let t = match &res.tree {
                    Some(tree) => insert_articles(&t, tree, &res.articles),
                    None => t,
                };
                out.push_str(&t);
                out.push('\n');
            }
            write_output(&io, &out)
        }
        Command::Translate { io, trace } => {
            let mut traces = String::new();
            for (n, l) in lines(&io)?.iter().enumerate() {
                let r = translate(l, res);
                let (text, t) = match &r {
                    Ok(t) => (t.text.clone(), &t.trace),
                    Err(e) => {
                        eprintln!("line {}: {}", n + 1, e.message);
                        (String::new(), &e.trace)
                    }
                };
                out.push_str(&text);
                out.push('\n');
                traces.push_str(&format!("; sentence {}\n{t}\n", n + 1));
            }
            if let Some(p) = trace {
                std::fs::write(&p, traces).map_err(|e| io_err(&p, e))?;
            }
            write_output(&io, &out)
        }
        Command::Report(io) => {
            let results = translate_batch(&lines(&io)?, res);
            write_output(&io, &run_trace_report(&results).to_string())
        }
        Command::TrainLm(_) | Command::TrainPostedit(_) => unreachable!("handled before loading resources"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Resource(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
