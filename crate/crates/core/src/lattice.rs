//! Acyclic word lattices with a unique source and sink.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

pub const EPSILON: &str = "<eps>";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// `None` is epsilon.
    pub label: Option<String>,
}

/// Node 0 is the source and node `node_count - 1` the sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordLattice {
    node_count: usize,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("malformed lattice: {0}")]
    Malformed(String),
}

impl WordLattice {
    /// Builds from raw parts and checks well-formedness.
    pub fn from_parts(node_count: usize, edges: Vec<Edge>) -> Result<WordLattice, LatticeError> {
        let l = WordLattice { node_count, edges };
        l.check()?;
        Ok(l)
    }

    pub fn from_word(w: impl Into<String>) -> WordLattice {
        WordLattice { node_count: 2, edges: vec![Edge { from: 0, to: 1, label: Some(w.into()) }] }
    }

    /// A two-node lattice whose only path is empty.
    pub fn epsilon() -> WordLattice {
        WordLattice { node_count: 2, edges: vec![Edge { from: 0, to: 1, label: None }] }
    }

    /// A chain of words; empty input gives the epsilon lattice.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> WordLattice {
        if words.is_empty() {
            return WordLattice::epsilon();
        }
        let edges = words
            .iter()
            .enumerate()
            .map(|(i, w)| Edge { from: i, to: i + 1, label: Some(w.as_ref().to_string()) })
            .collect();
        WordLattice { node_count: words.len() + 1, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.node_count - 1
    }

    fn shifted(&self, offset: usize) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(move |e| Edge { from: e.from + offset, to: e.to + offset, label: e.label.clone() })
    }

    /// Splices `a`'s sink to `b`'s source with an epsilon edge.
    pub fn concat(a: &WordLattice, b: &WordLattice) -> WordLattice {
        let mut edges: Vec<Edge> = a.edges.clone();
        edges.push(Edge { from: a.sink(), to: a.node_count, label: None });
        edges.extend(b.shifted(a.node_count));
        WordLattice { node_count: a.node_count + b.node_count, edges }
    }

    /// Concatenation of a sequence; empty input gives the epsilon lattice.
    pub fn concat_all(parts: &[WordLattice]) -> WordLattice {
        match parts {
            [] => WordLattice::epsilon(),
            [first, rest @ ..] => rest.iter().fold(first.clone(), |acc, p| WordLattice::concat(&acc, p)),
        }
    }

    /// Fresh source and sink with epsilon edges to and from both operands.
    pub fn alternate(a: &WordLattice, b: &WordLattice) -> WordLattice {
        WordLattice::alternate_all(&[a.clone(), b.clone()])
    }

    /// N-way alternation sharing one fresh source and sink.
    pub fn alternate_all(parts: &[WordLattice]) -> WordLattice {
        match parts {
            [] => WordLattice::epsilon(),
            [only] => only.clone(),
            _ => {
                let total: usize = parts.iter().map(|p| p.node_count).sum();
                let sink = total + 1;
                let mut edges = Vec::new();
                let mut offset = 1;
                for p in parts {
                    edges.push(Edge { from: 0, to: offset, label: None });
                    edges.extend(p.shifted(offset));
                    edges.push(Edge { from: offset + p.sink(), to: sink, label: None });
                    offset += p.node_count;
                }
                WordLattice { node_count: total + 2, edges }
            }
        }
    }

    /// Outgoing edge indices per node, in insertion order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.from].push(i);
        }
        out
    }

    /// Number of epsilon-only paths from `from` to every node.
    fn epsilon_paths(&self, from: usize, order: &[usize], out: &[Vec<usize>]) -> Vec<u128> {
        let mut count = vec![0u128; self.node_count];
        count[from] = 1;
        for &n in order {
            if count[n] == 0 {
                continue;
            }
            for &ei in &out[n] {
                let e = &self.edges[ei];
                if e.label.is_none() {
                    count[e.to] = count[e.to].saturating_add(count[n]);
                }
            }
        }
        count
    }

    /// An equivalent lattice without epsilon edges, except one direct
    /// source-sink edge per empty path. Edge paths correspond one to one,
    /// so the multiset of word sequences is unchanged.
    pub fn without_epsilons(&self) -> WordLattice {
        let order = self.topological_order().expect("acyclic lattice");
        let out = self.out_edges();
        let sink = self.sink();
        let to_sink: Vec<u128> = (0..self.node_count).map(|t| self.epsilon_paths(t, &order, &out)[sink]).collect();
        let mut edges = Vec::new();
        let mut push = |from: usize, to: usize, label: &Option<String>, times: u128| {
            for _ in 0..times {
                edges.push(Edge { from, to, label: label.clone() });
            }
        };
        for a in 0..self.node_count {
            let reach = self.epsilon_paths(a, &order, &out);
            if a == 0 {
                push(0, sink, &None, reach[sink]);
            }
            for e in self.edges.iter().filter(|e| e.label.is_some() && reach[e.from] > 0) {
                push(a, e.to, &e.label, reach[e.from]);
                if e.to != sink {
                    push(a, sink, &e.label, reach[e.from] * to_sink[e.to]);
                }
            }
        }
        // Keep nodes on some source-sink path, renumbered in index order.
        let mut fwd = vec![false; self.node_count];
        let mut bwd = vec![false; self.node_count];
        fwd[0] = true;
        bwd[sink] = true;
        for &n in &order {
            if fwd[n] {
                for e in edges.iter().filter(|e| e.from == n) {
                    fwd[e.to] = true;
                }
            }
        }
        for &n in order.iter().rev() {
            if edges.iter().any(|e| e.from == n && bwd[e.to]) {
                bwd[n] = true;
            }
        }
        let mut index = vec![usize::MAX; self.node_count];
        let mut kept = 0;
        for n in 0..self.node_count {
            if fwd[n] && bwd[n] {
                index[n] = kept;
                kept += 1;
            }
        }
        let edges = edges
            .into_iter()
            .filter(|e| index[e.from] != usize::MAX && index[e.to] != usize::MAX)
            .map(|e| Edge { from: index[e.from], to: index[e.to], label: e.label })
            .collect();
        WordLattice { node_count: kept, edges }
    }

    /// Nodes in topological order, or `None` if there is a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.node_count];
        for e in &self.edges {
            indeg[e.to] += 1;
        }
        let out = self.out_edges();
        let mut stack: Vec<usize> = (0..self.node_count).rev().filter(|&n| indeg[n] == 0).collect();
        let mut order = Vec::with_capacity(self.node_count);
        while let Some(n) = stack.pop() {
            order.push(n);
            for &ei in out[n].iter().rev() {
                let t = self.edges[ei].to;
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    stack.push(t);
                }
            }
        }
        (order.len() == self.node_count).then_some(order)
    }

    fn check(&self) -> Result<(), LatticeError> {
        let bad = |m: &str| Err(LatticeError::Malformed(m.to_string()));
        if self.node_count < 2 {
            return bad("needs at least a source and a sink");
        }
        if self.edges.iter().any(|e| e.from >= self.node_count || e.to >= self.node_count) {
            return bad("edge refers to a missing node");
        }
        if self.edges.iter().any(|e| e.to == self.source()) {
            return bad("source has an incoming edge");
        }
        if self.edges.iter().any(|e| e.from == self.sink()) {
            return bad("sink has an outgoing edge");
        }
        if self.topological_order().is_none() {
            return bad("cycle");
        }
        let mut fwd = vec![false; self.node_count];
        let mut bwd = vec![false; self.node_count];
        fwd[0] = true;
        bwd[self.sink()] = true;
        let order = self.topological_order().unwrap();
        for &n in &order {
            for e in self.edges.iter().filter(|e| e.from == n) {
                if fwd[n] {
                    fwd[e.to] = true;
                }
            }
        }
        for &n in order.iter().rev() {
            for e in self.edges.iter().filter(|e| e.from == n) {
                if bwd[e.to] {
                    bwd[n] = true;
                }
            }
        }
        if (0..self.node_count).any(|n| !(fwd[n] && bwd[n])) {
            return bad("node not on any source-sink path");
        }
        Ok(())
    }

    pub fn is_well_formed(&self) -> bool {
        self.check().is_ok()
    }

    /// Number of distinct edge paths (saturating).
    pub fn edge_path_count(&self) -> u128 {
        let order = self.topological_order().expect("acyclic lattice");
        let mut count = vec![0u128; self.node_count];
        count[0] = 1;
        let out = self.out_edges();
        for n in order {
            for &ei in &out[n] {
                let t = self.edges[ei].to;
                count[t] = count[t].saturating_add(count[n]);
            }
        }
        count[self.sink()]
    }

    /// Distinct word sequences in depth-first edge order, at most `cap`;
    /// the flag reports truncation.
    pub fn all_paths(&self, cap: usize) -> (Vec<Vec<String>>, bool) {
        let out = self.out_edges();
        let mut seen = HashSet::new();
        let mut paths = Vec::new();
        let mut words = Vec::new();
        let mut truncated = false;
        self.walk(0, &out, &mut words, &mut seen, &mut paths, cap, &mut truncated);
        (paths, truncated)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        node: usize,
        out: &[Vec<usize>],
        words: &mut Vec<String>,
        seen: &mut HashSet<Vec<String>>,
        paths: &mut Vec<Vec<String>>,
        cap: usize,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        if node == self.sink() {
            if seen.insert(words.clone()) {
                if paths.len() == cap {
                    *truncated = true;
                    return;
                }
                paths.push(words.clone());
            }
            return;
        }
        for &ei in &out[node] {
            let e = &self.edges[ei];
            if let Some(w) = &e.label {
                words.push(w.clone());
            }
            self.walk(e.to, out, words, seen, paths, cap, truncated);
            if e.label.is_some() {
                words.pop();
            }
        }
    }

    /// Every word label on some edge.
    pub fn words(&self) -> BTreeSet<&str> {
        self.edges.iter().filter_map(|e| e.label.as_deref()).collect()
    }

    /// Parses the `N <count>` / `E <from> <to> <label>` format.
    pub fn parse(text: &str) -> Result<WordLattice, LatticeError> {
        let mut node_count = None;
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let syntax = |m: &str| LatticeError::Syntax { line: i + 1, message: m.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [c, ..] if c.starts_with('#') => {}
                ["N", n] if node_count.is_none() => {
                    node_count = Some(n.parse::<usize>().map_err(|_| syntax("bad node count"))?);
                }
                ["E", from, to, label] if node_count.is_some() => {
                    let from = from.parse().map_err(|_| syntax("bad node id"))?;
                    let to = to.parse().map_err(|_| syntax("bad node id"))?;
                    let label = (*label != EPSILON).then(|| label.to_string());
                    edges.push(Edge { from, to, label });
                }
                _ => return Err(syntax("expected `N <count>` first, then `E <from> <to> <label>` lines")),
            }
        }
        let n = node_count.ok_or(LatticeError::Syntax { line: 1, message: "missing N header".into() })?;
        WordLattice::from_parts(n, edges)
    }
}

impl fmt::Display for WordLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N {}", self.node_count)?;
        for e in &self.edges {
            writeln!(f, "E {} {} {}", e.from, e.to, e.label.as_deref().unwrap_or(EPSILON))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(l: &WordLattice) -> Vec<String> {
        let mut p: Vec<String> = l.all_paths(1000).0.into_iter().map(|w| w.join(" ")).collect();
        p.sort();
        p
    }

    #[test]
    fn single_word() {
        let l = WordLattice::from_word("now");
        assert_eq!(paths(&l), ["now"]);
        assert!(l.is_well_formed());
    }

    #[test]
    fn alternation_gives_two_paths() {
        let l = WordLattice::alternate(&WordLattice::from_word("which"), &WordLattice::from_word("that"));
        assert_eq!(paths(&l), ["that", "which"]);
        assert!(l.is_well_formed());
    }

    #[test]
    fn concat_is_cross_product() {
        let a = WordLattice::alternate(&WordLattice::from_word("the"), &WordLattice::from_word("a"));
        let l = WordLattice::concat(&a, &WordLattice::from_word("moon"));
        assert_eq!(paths(&l), ["a moon", "the moon"]);
        assert_eq!(l.edge_path_count(), 2);
    }

    #[test]
    fn duplicate_sequences_collapse() {
        let l = WordLattice::alternate(&WordLattice::from_word("x"), &WordLattice::from_word("x"));
        assert_eq!(l.all_paths(10).0.len(), 1);
        assert_eq!(l.edge_path_count(), 2);
    }

    #[test]
    fn cap_truncates() {
        let ab = WordLattice::alternate(&WordLattice::from_word("a"), &WordLattice::from_word("b"));
        let l = WordLattice::concat(&ab, &ab);
        let (p, truncated) = l.all_paths(3);
        assert_eq!(p.len(), 3);
        assert!(truncated);
        assert!(!l.all_paths(4).1);
    }

    #[test]
    fn text_round_trip() {
        let l = WordLattice::concat(&WordLattice::epsilon(), &WordLattice::from_words(&["in", "Japan"]));
        let again = WordLattice::parse(&l.to_string()).unwrap();
        assert_eq!(again, l);
    }

    #[test]
    fn malformed_rejected() {
        assert!(WordLattice::parse("N 3\nE 0 1 a\n").is_err());
        assert!(WordLattice::parse("N 2\nE 0 1 a\nE 1 0 b\n").is_err());
        assert!(WordLattice::parse("E 0 1 a\n").is_err());
        assert!(WordLattice::parse("N 2\nE 0 1\n").is_err());
    }
}
