//! Meaning graphs and their SPL text form.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Filler {
    Node(usize),
    Scalar(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub concept: String,
    /// Role edges in declaration order.
    pub roles: Vec<(String, Filler)>,
}

impl Instance {
    pub fn role(&self, name: &str) -> Option<&Filler> {
        self.roles.iter().find(|(r, _)| r == name).map(|(_, f)| f)
    }

    pub fn scalar(&self, name: &str) -> Option<&str> {
        match self.role(name) {
            Some(Filler::Scalar(s)) => Some(s),
            _ => None,
        }
    }
}

/// A rooted, acyclic graph of typed instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeaningGraph {
    nodes: Vec<Instance>,
    root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("role edge would create a cycle")]
    Cycle,
    #[error("no node {0}")]
    NoNode(usize),
}

impl MeaningGraph {
    pub fn new(id: impl Into<String>, concept: impl Into<String>) -> Self {
        MeaningGraph { nodes: vec![Instance { id: id.into(), concept: concept.into(), roles: Vec::new() }], root: 0 }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Instance] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Instance {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn add_node(&mut self, id: impl Into<String>, concept: impl Into<String>) -> Result<usize, GraphError> {
        let id = id.into();
        if self.find(&id).is_some() {
            return Err(GraphError::DuplicateId(id));
        }
        self.nodes.push(Instance { id, concept: concept.into(), roles: Vec::new() });
        Ok(self.nodes.len() - 1)
    }

    /// Adds a role edge, refusing edges that would close a cycle.
    pub fn add_role(&mut self, from: usize, role: impl Into<String>, filler: Filler) -> Result<(), GraphError> {
        if from >= self.nodes.len() {
            return Err(GraphError::NoNode(from));
        }
        if let Filler::Node(to) = filler {
            if to >= self.nodes.len() {
                return Err(GraphError::NoNode(to));
            }
            if self.reaches(to, from) {
                return Err(GraphError::Cycle);
            }
        }
        self.nodes[from].roles.push((role.into(), filler));
        Ok(())
    }

    pub(crate) fn roles_mut(&mut self, i: usize) -> &mut Vec<(String, Filler)> {
        &mut self.nodes[i].roles
    }

    pub(crate) fn set_root(&mut self, i: usize) {
        self.root = i;
    }

    /// Whether `to` is reachable from `from` (reflexively).
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.children(n));
            }
        }
        false
    }

    pub fn children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[i].roles.iter().filter_map(|(_, f)| match f {
            Filler::Node(c) => Some(*c),
            Filler::Scalar(_) => None,
        })
    }

    /// Nodes in depth-first preorder from the root, each once.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.nodes.len()];
        fn go(g: &MeaningGraph, n: usize, seen: &mut [bool], out: &mut Vec<usize>) {
            if seen[n] {
                return;
            }
            seen[n] = true;
            out.push(n);
            for c in g.children(n) {
                go(g, c, seen, out);
            }
        }
        go(self, self.root, &mut seen, &mut out);
        out
    }

    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm over all nodes.
        let mut indeg = vec![0usize; self.nodes.len()];
        for i in 0..self.nodes.len() {
            for c in self.children(i) {
                indeg[c] += 1;
            }
        }
        let mut queue: Vec<usize> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut done = 0;
        while let Some(n) = queue.pop() {
            done += 1;
            for c in self.children(n) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        done == self.nodes.len()
    }

    /// Drops unreachable nodes, renumbering the rest in preorder.
    pub fn compact(&mut self) {
        let order = self.preorder();
        let mut map = HashMap::new();
        for (new, &old) in order.iter().enumerate() {
            map.insert(old, new);
        }
        let mut nodes = Vec::with_capacity(order.len());
        for &old in &order {
            let mut inst = self.nodes[old].clone();
            for (_, f) in &mut inst.roles {
                if let Filler::Node(c) = f {
                    *c = map[c];
                }
            }
            nodes.push(inst);
        }
        self.nodes = nodes;
        self.root = 0;
    }

    /// Relation-edge count (scalar attributes excluded), over reachable nodes.
    pub fn relation_edge_count(&self) -> usize {
        self.preorder().iter().map(|&n| self.children(n).count()).sum()
    }

    /// Isomorphism key: ids dropped, roles ordered by name then content,
    /// shared nodes written once and referenced by visit number.
    pub fn canonical(&self) -> String {
        let mut sig_memo: HashMap<usize, String> = HashMap::new();
        fn sig(g: &MeaningGraph, n: usize, memo: &mut HashMap<usize, String>) -> String {
            if let Some(s) = memo.get(&n) {
                return s.clone();
            }
            let mut parts: Vec<String> = g.nodes[n]
                .roles
                .iter()
                .map(|(r, f)| match f {
                    Filler::Node(c) => format!(":{r} {}", sig(g, *c, memo)),
                    Filler::Scalar(s) => format!(":{r} ={s}"),
                })
                .collect();
            parts.sort();
            let s = format!("({} {})", g.nodes[n].concept, parts.join(" "));
            memo.insert(n, s.clone());
            s
        }
        fn emit(g: &MeaningGraph, n: usize, memo: &mut HashMap<usize, String>, seen: &mut HashMap<usize, usize>, out: &mut String) {
            if let Some(k) = seen.get(&n) {
                out.push_str(&format!("#{k}"));
                return;
            }
            let k = seen.len();
            seen.insert(n, k);
            out.push_str(&format!("(#{k} {}", g.nodes[n].concept));
            let mut roles: Vec<(String, String, &Filler)> = g.nodes[n]
                .roles
                .iter()
                .map(|(r, f)| {
                    let key = match f {
                        Filler::Node(c) => sig(g, *c, memo),
                        Filler::Scalar(s) => format!("={s}"),
                    };
                    (r.clone(), key, f)
                })
                .collect();
            roles.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
            for (r, _, f) in roles {
                out.push_str(&format!(" :{r} "));
                match f {
                    Filler::Node(c) => emit(g, *c, memo, seen, out),
                    Filler::Scalar(s) => out.push_str(&format!("={s}")),
                }
            }
            out.push(')');
        }
        let mut out = String::new();
        emit(self, self.root, &mut sig_memo, &mut HashMap::new(), &mut out);
        out
    }

    pub fn is_isomorphic(&self, other: &MeaningGraph) -> bool {
        self.canonical() == other.canonical()
    }

    /// SPL text in the indented layout: instances whose fillers are all
    /// scalars or back-references stay on one line.
    pub fn to_spl(&self) -> String {
        let mut out = String::new();
        let mut seen = HashSet::new();
        self.write_spl(self.root, 0, &mut seen, &mut out);
        out
    }

    fn write_spl(&self, n: usize, col: usize, seen: &mut HashSet<usize>, out: &mut String) {
        let inst = &self.nodes[n];
        if !seen.insert(n) {
            out.push_str(&quote_name(&inst.id));
            return;
        }
        out.push_str(&format!("({} / {}", quote_name(&inst.id), quote_name(&inst.concept)));
        let inline = inst.roles.iter().all(|(_, f)| match f {
            Filler::Scalar(_) => true,
            Filler::Node(c) => seen.contains(c),
        });
        for (role, f) in &inst.roles {
            if inline {
                out.push(' ');
            } else {
                out.push('\n');
                out.push_str(&" ".repeat(col + 1));
            }
            out.push_str(&format!(":{role} "));
            match f {
                Filler::Scalar(s) => out.push_str(&quote_scalar(s)),
                Filler::Node(c) => self.write_spl(*c, col + 1 + role.len() + 2, seen, out),
            }
        }
        out.push(')');
    }

    pub fn parse_spl(text: &str) -> Result<MeaningGraph, SplError> {
        SplParser::new(text).parse()
    }
}

impl fmt::Display for MeaningGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_spl())
    }
}

fn quote_name(s: &str) -> String {
    format!("|{s}|")
}

fn bare_safe(s: &str) -> bool {
    !s.is_empty() && !s.contains(|c: char| c.is_whitespace() || "()|:/".contains(c))
}

fn quote_scalar(s: &str) -> String {
    if bare_safe(s) {
        s.to_string()
    } else {
        quote_name(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SPL {line}:{column}: {message}")]
pub struct SplError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Name(String),
}

struct SplParser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

enum RawFiller {
    Inst(usize),
    Word(String),
}

impl<'a> SplParser<'a> {
    fn new(text: &'a str) -> Self {
        SplParser { text, toks: Vec::new(), pos: 0 }
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> SplError {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        SplError { line, column, message: message.into() }
    }

    fn lex(&mut self) -> Result<(), SplError> {
        let bytes = self.text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => i += 1,
                b'(' => {
                    self.toks.push((Tok::Open, i));
                    i += 1;
                }
                b')' => {
                    self.toks.push((Tok::Close, i));
                    i += 1;
                }
                b'/' => {
                    self.toks.push((Tok::Slash, i));
                    i += 1;
                }
                b'|' => {
                    let end = self.text[i + 1..].find('|').ok_or_else(|| self.error(i, "unterminated |name|"))?;
                    self.toks.push((Tok::Name(self.text[i + 1..i + 1 + end].to_string()), i));
                    i += end + 2;
                }
                _ => {
                    let start = i;
                    while i < bytes.len() && !b" \t\n\r()|/".contains(&bytes[i]) {
                        i += 1;
                    }
                    let word = &self.text[start..i];
                    match word.strip_prefix(':') {
                        Some("") => return Err(self.error(start, "empty role name")),
                        Some(r) => self.toks.push((Tok::Role(r.to_string()), start)),
                        None => self.toks.push((Tok::Name(word.to_string()), start)),
                    }
                }
            }
        }
        Ok(())
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.text.len(), |t| t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect_name(&mut self, what: &str) -> Result<String, SplError> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            _ => Err(self.error(at, format!("expected {what}"))),
        }
    }

    fn parse(mut self) -> Result<MeaningGraph, SplError> {
        self.lex()?;
        let mut insts: Vec<(String, String, usize, Vec<(String, RawFiller)>)> = Vec::new();
        let root_at = self.offset();
        if self.toks.first().map(|t| &t.0) != Some(&Tok::Open) {
            return Err(self.error(root_at, "expected ("));
        }
        self.instance(&mut insts)?;
        if self.pos < self.toks.len() {
            return Err(self.error(self.offset(), "trailing text after instance"));
        }
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for (i, (id, _, at, _)) in insts.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(self.error(*at, format!("duplicate id {id}")));
            }
        }
        let mut nodes: Vec<Instance> = Vec::with_capacity(insts.len());
        for (id, concept, _, roles) in insts.iter() {
            let roles = roles
                .iter()
                .map(|(r, f)| {
                    let filler = match f {
                        RawFiller::Inst(k) => Filler::Node(*k),
                        RawFiller::Word(w) => match index.get(w) {
                            Some(&k) => Filler::Node(k),
                            None => Filler::Scalar(w.clone()),
                        },
                    };
                    (r.clone(), filler)
                })
                .collect();
            nodes.push(Instance { id: id.clone(), concept: concept.clone(), roles });
        }
        let g = MeaningGraph { nodes, root: 0 };
        if !g.is_acyclic() {
            return Err(self.error(root_at, "graph has a cycle"));
        }
        Ok(g)
    }

    fn instance(&mut self, insts: &mut Vec<(String, String, usize, Vec<(String, RawFiller)>)>) -> Result<usize, SplError> {
        let at = self.offset();
        self.next();
        let id = self.expect_name("instance id")?;
        let slash = self.offset();
        if self.next() != Some(Tok::Slash) {
            return Err(self.error(slash, "expected /"));
        }
        let concept = self.expect_name("concept")?;
        let me = insts.len();
        insts.push((id, concept, at, Vec::new()));
        loop {
            let here = self.offset();
            match self.next() {
                Some(Tok::Close) => return Ok(me),
                Some(Tok::Role(r)) => {
                    let fat = self.offset();
                    let filler = match self.toks.get(self.pos).map(|t| t.0.clone()) {
                        Some(Tok::Open) => RawFiller::Inst(self.instance(insts)?),
                        Some(Tok::Name(n)) => {
                            self.pos += 1;
                            RawFiller::Word(n)
                        }
                        _ => return Err(self.error(fat, format!("expected filler for :{r}"))),
                    };
                    insts[me].3.push((r, filler));
                }
                _ => return Err(self.error(here, "expected :ROLE or )")),
            }
        }
    }
}
