//! Feature structures: rooted, edge-labelled DAGs with atomic leaves,
//! atomic disjunctions (`*OR*`) and negated atom sets (`*NOT*`).
//!
//! A [`FeatureStructure`] is an immutable value stored as a compact node
//! arena (root at index 0, every node reachable, no forwarding). All
//! destructive work happens on a private [`Workspace`] copy, so inputs are
//! never mutated.

mod equation;
mod text;

pub use equation::{
    apply_equations, evaluate_test, Application, EquationEngine, EquationError, Equation,
    FeaturePath, Operand, DEFAULT_SOLUTION_CAP,
};
pub use text::{equation_from_sexp, parse_equation, parse_equations, structure_from_sexp, FsParseError};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(String),
    Str(String),
}

impl Atom {
    pub fn sym(s: impl Into<String>) -> Self {
        Atom::Sym(s.into())
    }

    pub fn string(s: impl Into<String>) -> Self {
        Atom::Str(s.into())
    }

    pub fn text(&self) -> &str {
        match self {
            Atom::Sym(s) | Atom::Str(s) => s,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        match self {
            Atom::Sym(x) => crate::sexp::write_symbol(&mut s, x),
            Atom::Str(x) => crate::sexp::write_string(&mut s, x),
        }
        f.write_str(&s)
    }
}

/// Node content. Child references in `Complex` are indices into the owning
/// structure. An empty `Complex` map is the unconstrained value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Complex(BTreeMap<String, usize>),
    Atom(Atom),
    /// Atomic disjunction; always at least two members.
    Or(BTreeSet<Atom>),
    /// Negative residue: any atom outside the set, or structure.
    Not(BTreeSet<Atom>),
}

impl Value {
    pub fn top() -> Self {
        Value::Complex(BTreeMap::new())
    }

    fn is_top(&self) -> bool {
        matches!(self, Value::Complex(m) if m.is_empty())
    }

    /// Makes a disjunction value, collapsing singletons. `None` when empty.
    pub fn disjunction(atoms: BTreeSet<Atom>) -> Option<Self> {
        match atoms.len() {
            0 => None,
            1 => Some(Value::Atom(atoms.into_iter().next().unwrap())),
            _ => Some(Value::Or(atoms)),
        }
    }
}

/// Meet of two values where at most one is a non-empty complex.
fn meet(a: Value, b: Value) -> Option<Value> {
    use Value::*;
    match (a, b) {
        (x, y) if x.is_top() => Some(y),
        (x, y) if y.is_top() => Some(x),
        (Complex(m), Not(_)) | (Not(_), Complex(m)) => Some(Complex(m)),
        (Complex(_), _) | (_, Complex(_)) => None,
        (Atom(x), Atom(y)) => (x == y).then_some(Atom(x)),
        (Atom(x), Or(s)) | (Or(s), Atom(x)) => s.contains(&x).then_some(Atom(x)),
        (Or(s), Or(t)) => Value::disjunction(s.intersection(&t).cloned().collect()),
        (Atom(x), Not(n)) | (Not(n), Atom(x)) => (!n.contains(&x)).then_some(Atom(x)),
        (Or(s), Not(n)) | (Not(n), Or(s)) => Value::disjunction(s.difference(&n).cloned().collect()),
        (Not(n), Not(m)) => Some(Not(n.union(&m).cloned().collect())),
    }
}

#[derive(Clone)]
pub struct FeatureStructure {
    nodes: Vec<Value>,
}

impl Default for FeatureStructure {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureStructure {
    /// The unconstrained structure.
    pub fn new() -> Self {
        FeatureStructure { nodes: vec![Value::top()] }
    }

    pub fn atom(a: Atom) -> Self {
        FeatureStructure { nodes: vec![Value::Atom(a)] }
    }

    pub fn disjunction(atoms: impl IntoIterator<Item = Atom>) -> Option<Self> {
        Value::disjunction(atoms.into_iter().collect()).map(|v| FeatureStructure { nodes: vec![v] })
    }

    pub fn negation(atoms: impl IntoIterator<Item = Atom>) -> Option<Self> {
        let set: BTreeSet<Atom> = atoms.into_iter().collect();
        (!set.is_empty()).then(|| FeatureStructure { nodes: vec![Value::Not(set)] })
    }

    /// Embeds `value` under `path` in an otherwise empty structure.
    pub fn from_path<S: AsRef<str>>(path: &[S], value: &FeatureStructure) -> Self {
        let mut ws = Workspace::default();
        let root = ws.add(Value::top());
        let target = ws.resolve_create(root, path).expect("fresh path");
        let v = ws.import(value);
        ws.unify(target, v);
        ws.extract(root).expect("acyclic by construction")
    }

    pub fn root(&self) -> NodeRef<'_> {
        NodeRef { fs: self, id: 0 }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes[0].is_top()
    }

    pub fn get<S: AsRef<str>>(&self, path: &[S]) -> Option<NodeRef<'_>> {
        let mut node = self.root();
        for f in path {
            node = node.get(f.as_ref())?;
        }
        Some(node)
    }

    /// Copy of the sub-structure at `path`.
    pub fn sub<S: AsRef<str>>(&self, path: &[S]) -> Option<FeatureStructure> {
        self.get(path).map(|n| n.to_structure())
    }

    /// Most general structure subsumed by both inputs, or `None` on clash.
    pub fn unify(&self, other: &FeatureStructure) -> Option<FeatureStructure> {
        let mut ws = Workspace::default();
        let a = ws.import(self);
        let b = ws.import(other);
        if !ws.unify(a, b) {
            return None;
        }
        ws.extract(a)
    }

    /// Unifies `value` into the node at `path`, creating the path.
    pub fn unify_at<S: AsRef<str>>(&self, path: &[S], value: &FeatureStructure) -> Option<FeatureStructure> {
        self.unify(&FeatureStructure::from_path(path, value))
    }

    /// True iff every commitment (values and reentrancies) of `self` also
    /// holds in `other`.
    pub fn subsumes(&self, other: &FeatureStructure) -> bool {
        let mut map = HashMap::new();
        subsumes_node(self, 0, other, 0, &mut map)
    }

    pub fn is_isomorphic(&self, other: &FeatureStructure) -> bool {
        self.canonical() == other.canonical()
    }

    fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for v in &self.nodes {
            if let Value::Complex(m) = v {
                for &c in m.values() {
                    deg[c] += 1;
                }
            }
        }
        deg
    }

    /// Canonical single-line text. Equal strings iff isomorphic structures.
    pub fn canonical(&self) -> String {
        let deg = self.in_degrees();
        let mut tags = HashMap::new();
        let mut out = String::new();
        self.write_node(0, &deg, &mut tags, &mut out);
        out
    }

    fn write_node(&self, id: usize, deg: &[usize], tags: &mut HashMap<usize, usize>, out: &mut String) {
        match &self.nodes[id] {
            Value::Complex(m) => {
                out.push('(');
                for (i, (f, &c)) in m.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push('(');
                    crate::sexp::write_symbol(out, f);
                    out.push(' ');
                    if deg[c] > 1 {
                        if let Some(t) = tags.get(&c) {
                            out.push_str(&format!("#{t})"));
                            continue;
                        }
                        let t = tags.len() + 1;
                        tags.insert(c, t);
                        out.push_str(&format!("#{t} "));
                    }
                    self.write_node(c, deg, tags, out);
                    out.push(')');
                }
                out.push(')');
            }
            Value::Atom(a) => out.push_str(&a.to_string()),
            Value::Or(s) | Value::Not(s) => {
                out.push_str(if matches!(self.nodes[id], Value::Or(_)) { "(*OR*" } else { "(*NOT*" });
                for a in s {
                    out.push(' ');
                    out.push_str(&a.to_string());
                }
                out.push(')');
            }
        }
    }

    pub fn parse(text: &str) -> Result<FeatureStructure, FsParseError> {
        text::parse_structure(text)
    }
}

fn subsumes_node(
    a: &FeatureStructure,
    na: usize,
    b: &FeatureStructure,
    nb: usize,
    map: &mut HashMap<usize, usize>,
) -> bool {
    if let Some(&m) = map.get(&na) {
        return m == nb;
    }
    map.insert(na, nb);
    match (&a.nodes[na], &b.nodes[nb]) {
        (Value::Complex(ma), _) if ma.is_empty() => true,
        (Value::Complex(ma), Value::Complex(mb)) => ma.iter().all(|(f, &ca)| match mb.get(f) {
            Some(&cb) => subsumes_node(a, ca, b, cb, map),
            None => false,
        }),
        (Value::Complex(_), _) => false,
        (Value::Atom(x), Value::Atom(y)) => x == y,
        (Value::Atom(_), _) => false,
        (Value::Or(s), Value::Atom(x)) => s.contains(x),
        (Value::Or(s), Value::Or(t)) => t.is_subset(s),
        (Value::Or(_), _) => false,
        (Value::Not(n), Value::Atom(x)) => !n.contains(x),
        (Value::Not(n), Value::Or(t)) => t.is_disjoint(n),
        (Value::Not(n), Value::Not(m)) => n.is_subset(m),
        (Value::Not(_), Value::Complex(mb)) => !mb.is_empty(),
    }
}

impl PartialEq for FeatureStructure {
    fn eq(&self, other: &Self) -> bool {
        self.is_isomorphic(other)
    }
}

impl Eq for FeatureStructure {}

impl Hash for FeatureStructure {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical().hash(state)
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl fmt::Debug for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FS{}", self.canonical())
    }
}

/// Borrowed view of one node.
#[derive(Clone, Copy)]
pub struct NodeRef<'a> {
    fs: &'a FeatureStructure,
    id: usize,
}

impl<'a> NodeRef<'a> {
    /// Node identity within its structure; equal ids mean reentrancy.
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> &'a Value {
        &self.fs.nodes[self.id]
    }

    pub fn get(&self, feature: &str) -> Option<NodeRef<'a>> {
        match self.value() {
            Value::Complex(m) => m.get(feature).map(|&id| NodeRef { fs: self.fs, id }),
            _ => None,
        }
    }

    pub fn features(&self) -> Vec<(&'a str, NodeRef<'a>)> {
        match self.value() {
            Value::Complex(m) => {
                m.iter().map(|(f, &id)| (f.as_str(), NodeRef { fs: self.fs, id })).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn atom(&self) -> Option<&'a Atom> {
        match self.value() {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Atom alternatives of an atom or disjunction leaf.
    pub fn alternatives(&self) -> Option<Vec<&'a Atom>> {
        match self.value() {
            Value::Atom(a) => Some(vec![a]),
            Value::Or(s) => Some(s.iter().collect()),
            _ => None,
        }
    }

    /// Absent in the existence-test sense: unconstrained or residue only.
    pub fn is_absent(&self) -> bool {
        matches!(self.value(), Value::Not(_)) || self.value().is_top()
    }

    pub fn to_structure(&self) -> FeatureStructure {
        let mut ws = Workspace::default();
        let offset = ws.nodes.len();
        ws.import(self.fs);
        ws.extract(offset + self.id).expect("sub-structure of an acyclic structure")
    }
}

/// Mutable union-find arena used for all destructive operations.
#[derive(Clone, Default)]
pub(crate) struct Workspace {
    nodes: Vec<Value>,
    parent: Vec<usize>,
}

impl Workspace {
    pub(crate) fn add(&mut self, v: Value) -> usize {
        self.nodes.push(v);
        self.parent.push(self.parent.len());
        self.nodes.len() - 1
    }

    /// Copies a structure in; returns its root.
    pub(crate) fn import(&mut self, fs: &FeatureStructure) -> usize {
        let offset = self.nodes.len();
        for v in &fs.nodes {
            let v = match v {
                Value::Complex(m) => {
                    Value::Complex(m.iter().map(|(f, &c)| (f.clone(), c + offset)).collect())
                }
                other => other.clone(),
            };
            self.add(v);
        }
        offset
    }

    pub(crate) fn find(&self, mut n: usize) -> usize {
        while self.parent[n] != n {
            n = self.parent[n];
        }
        n
    }

    pub(crate) fn value(&self, n: usize) -> &Value {
        &self.nodes[self.find(n)]
    }

    pub(crate) fn unify(&mut self, a: usize, b: usize) -> bool {
        let a = self.find(a);
        let b = self.find(b);
        if a == b {
            return true;
        }
        let va = std::mem::replace(&mut self.nodes[a], Value::top());
        let vb = std::mem::replace(&mut self.nodes[b], Value::top());
        self.parent[b] = a;
        match (va, vb) {
            (Value::Complex(ma), Value::Complex(mb)) => {
                self.nodes[a] = Value::Complex(ma);
                for (f, cb) in mb {
                    let ra = self.find(a);
                    let existing = match &self.nodes[ra] {
                        Value::Complex(m) => m.get(&f).copied(),
                        // only reachable through a cycle; extraction rejects it
                        _ => return false,
                    };
                    match existing {
                        Some(ca) => {
                            if !self.unify(ca, cb) {
                                return false;
                            }
                        }
                        None => {
                            if let Value::Complex(m) = &mut self.nodes[ra] {
                                m.insert(f, cb);
                            }
                        }
                    }
                }
                true
            }
            (va, vb) => match meet(va, vb) {
                Some(v) => {
                    self.nodes[a] = v;
                    true
                }
                None => false,
            },
        }
    }

    /// Follows an existing path without building anything.
    pub(crate) fn resolve<S: AsRef<str>>(&self, root: usize, path: &[S]) -> Option<usize> {
        let mut n = self.find(root);
        for f in path {
            match &self.nodes[n] {
                Value::Complex(m) => n = self.find(*m.get(f.as_ref())?),
                _ => return None,
            }
        }
        Some(n)
    }

    /// Follows a path, creating empty nodes as needed. `None` when the path
    /// runs into an atomic value.
    pub(crate) fn resolve_create<S: AsRef<str>>(&mut self, root: usize, path: &[S]) -> Option<usize> {
        let mut n = self.find(root);
        for f in path {
            if matches!(self.nodes[n], Value::Not(_)) {
                self.nodes[n] = Value::top();
            }
            let next = match &self.nodes[n] {
                Value::Complex(m) => m.get(f.as_ref()).copied(),
                _ => return None,
            };
            n = match next {
                Some(c) => self.find(c),
                None => {
                    let c = self.add(Value::top());
                    if let Value::Complex(m) = &mut self.nodes[n] {
                        m.insert(f.as_ref().to_string(), c);
                    }
                    c
                }
            };
        }
        Some(n)
    }

    pub(crate) fn is_present(&self, n: usize) -> bool {
        let v = self.value(n);
        !(v.is_top() || matches!(v, Value::Not(_)))
    }

    /// Compacts the structure reachable from `root`; `None` if cyclic.
    pub(crate) fn extract(&self, root: usize) -> Option<FeatureStructure> {
        let mut out = Vec::new();
        let mut done: HashMap<usize, usize> = HashMap::new();
        let mut on_path = std::collections::HashSet::new();
        self.extract_node(root, &mut out, &mut done, &mut on_path)?;
        Some(FeatureStructure { nodes: out })
    }

    fn extract_node(
        &self,
        n: usize,
        out: &mut Vec<Value>,
        done: &mut HashMap<usize, usize>,
        on_path: &mut std::collections::HashSet<usize>,
    ) -> Option<usize> {
        let n = self.find(n);
        if let Some(&id) = done.get(&n) {
            return Some(id);
        }
        if !on_path.insert(n) {
            return None;
        }
        let id = out.len();
        out.push(Value::top());
        let v = match &self.nodes[n] {
            Value::Complex(m) => {
                let mut nm = BTreeMap::new();
                for (f, &c) in m {
                    nm.insert(f.clone(), self.extract_node(c, out, done, on_path)?);
                }
                Value::Complex(nm)
            }
            other => other.clone(),
        };
        out[id] = v;
        on_path.remove(&n);
        done.insert(n, id);
        Some(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(s: &str) -> FeatureStructure {
        FeatureStructure::parse(s).unwrap()
    }

    #[test]
    fn empty_is_identity() {
        let f = fs("((syn ((infl ta-form) (agr #1 ((num sg))))) (subj ((agr #1))))");
        assert_eq!(FeatureStructure::new().unify(&f).unwrap(), f);
        assert_eq!(f.unify(&FeatureStructure::new()).unwrap(), f);
    }

    #[test]
    fn disjunction_narrows_to_member() {
        let a = fs("((infl ta-form))");
        let b = fs("((infl (*OR* kihon ta-form rentai)))");
        assert_eq!(a.unify(&b).unwrap(), a);
        let c = fs("((infl (*OR* kihon rentai)))");
        assert!(a.unify(&c).is_none());
        let d = fs("((infl (*OR* ta-form rentai renyo)))");
        assert_eq!(b.unify(&d).unwrap(), fs("((infl (*OR* rentai ta-form)))"));
    }

    #[test]
    fn distinct_atoms_clash() {
        assert!(fs("((a x))").unify(&fs("((a y))")).is_none());
        assert!(fs("((a x))").unify(&fs("((a ((b c))))")).is_none());
    }

    #[test]
    fn negation_residue() {
        let neg = fs("((form (*NOT* rentaidome)))");
        assert!(neg.unify(&fs("((form rentaidome))")).is_none());
        assert_eq!(neg.unify(&fs("((form plain))")).unwrap(), fs("((form plain))"));
        assert_eq!(
            neg.unify(&fs("((form (*OR* rentaidome plain)))")).unwrap(),
            fs("((form plain))")
        );
        assert_eq!(
            neg.unify(&fs("((form (*NOT* other)))")).unwrap(),
            fs("((form (*NOT* other rentaidome)))")
        );
    }

    #[test]
    fn reentrancy_propagates() {
        let a = fs("((x #1 ((p q))) (y #1))");
        let b = fs("((y ((r s))))");
        let u = a.unify(&b).unwrap();
        assert_eq!(u, fs("((x #1 ((p q) (r s))) (y #1))"));
        assert!(a.unify(&fs("((x ((p q))) (y ((p z))))")).is_none());
    }

    #[test]
    fn cycles_fail() {
        let a = fs("((f #1 ()) (g ((h #1))))");
        // forces f = g, making g contain itself
        let b = fs("((f #1 ()) (g #1))");
        assert!(a.unify(&b).is_none());
    }

    #[test]
    fn subsumption_basics() {
        let f = fs("((a x) (b #1 ((c d))) (e #1))");
        assert!(FeatureStructure::new().subsumes(&f));
        assert!(f.subsumes(&f));
        assert!(fs("((a x))").subsumes(&f));
        assert!(!f.subsumes(&fs("((a x))")));
        // reentrancy in the general structure must hold in the specific one
        assert!(!fs("((b #1 ()) (e #1))").subsumes(&fs("((b ((c d))) (e ((c d))))")));
        assert!(fs("((a (*OR* x y)))").subsumes(&fs("((a x))")));
        assert!(fs("((a (*NOT* y)))").subsumes(&fs("((a x))")));
        assert!(!fs("((a (*NOT* x)))").subsumes(&fs("((a x))")));
    }

    #[test]
    fn inputs_not_mutated() {
        let a = fs("((x #1 ()) (y #1))");
        let before = a.canonical();
        let _ = a.unify(&fs("((x ((k v))))"));
        assert_eq!(a.canonical(), before);
    }

    #[test]
    fn path_access() {
        let f = fs(r#"((gloss ((op1 "John") (op2 (*or* "wants" "want")))))"#);
        let op2 = f.get(&["gloss", "op2"]).unwrap();
        assert_eq!(op2.alternatives().unwrap().len(), 2);
        assert_eq!(f.get(&["gloss", "op1"]).unwrap().atom(), Some(&Atom::string("John")));
        assert!(f.get(&["gloss", "op9"]).is_none());
        assert_eq!(
            FeatureStructure::from_path(&["a", "b"], &FeatureStructure::atom(Atom::sym("c"))),
            fs("((a ((b c))))")
        );
    }
}
