//! Rule equations over variables `X0..Xn` and their application.

use std::collections::{BTreeSet, HashSet};

use super::{Atom, FeatureStructure, Value, Workspace};

pub const DEFAULT_SOLUTION_CAP: usize = 64;

/// A path rooted at rule variable `X<var>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeaturePath {
    pub var: usize,
    pub features: Vec<String>,
}

impl FeaturePath {
    pub fn new<S: Into<String>>(var: usize, features: impl IntoIterator<Item = S>) -> Self {
        FeaturePath { var, features: features.into_iter().map(Into::into).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Path(FeaturePath),
    Value(FeatureStructure),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equation {
    /// `(path = path|value)`
    Unify(FeaturePath, Operand),
    /// `(path =c path|value)`: test only.
    Constrain(FeaturePath, Operand),
    /// `(path = (*NOT* a ...))`: stored as a residue, re-checked on specialization.
    Negate(FeaturePath, BTreeSet<Atom>),
    /// `(is path)`
    Exists(FeaturePath),
    Or(Vec<Vec<Equation>>),
    Xor(Vec<Vec<Equation>>),
}

impl Equation {
    pub fn is_test(&self) -> bool {
        matches!(self, Equation::Constrain(..) | Equation::Negate(..) | Equation::Exists(..))
    }

    /// Every variable index mentioned, including inside blocks.
    pub fn variables(&self, out: &mut BTreeSet<usize>) {
        match self {
            Equation::Unify(p, o) | Equation::Constrain(p, o) => {
                out.insert(p.var);
                if let Operand::Path(q) = o {
                    out.insert(q.var);
                }
            }
            Equation::Negate(p, _) | Equation::Exists(p) => {
                out.insert(p.var);
            }
            Equation::Or(groups) | Equation::Xor(groups) => {
                for e in groups.iter().flatten() {
                    e.variables(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquationError {
    #[error("equation mentions X{0} but only {1} variables are bound")]
    UnboundVariable(usize, usize),
}

/// Result of applying an equation list to one set of bindings.
#[derive(Debug, Clone, Default)]
pub struct Application {
    /// Each solution holds one structure per variable, in variable order.
    pub solutions: Vec<Vec<FeatureStructure>>,
    /// Set when the solution cap discarded alternatives.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EquationEngine {
    pub solution_cap: usize,
}

impl Default for EquationEngine {
    fn default() -> Self {
        EquationEngine { solution_cap: DEFAULT_SOLUTION_CAP }
    }
}

#[derive(Clone)]
struct State<'e> {
    ws: Workspace,
    roots: Vec<usize>,
    pending: Vec<&'e Equation>,
}

impl<'e> State<'e> {
    fn from_bindings(bindings: &[FeatureStructure]) -> Self {
        let mut ws = Workspace::default();
        let roots = bindings.iter().map(|b| ws.import(b)).collect();
        State { ws, roots, pending: Vec::new() }
    }

    fn operand_node(&mut self, op: &Operand) -> Option<usize> {
        match op {
            Operand::Path(p) => self.ws.resolve_create(self.roots[p.var], &p.features),
            Operand::Value(v) => Some(self.ws.import(v)),
        }
    }

    fn unify_eq(mut self, path: &FeaturePath, op: &Operand) -> Option<Self> {
        let lhs = self.ws.resolve_create(self.roots[path.var], &path.features)?;
        let rhs = self.operand_node(op)?;
        self.ws.unify(lhs, rhs).then_some(self)
    }

    fn negate(mut self, path: &FeaturePath, atoms: &BTreeSet<Atom>) -> Option<Self> {
        let lhs = self.ws.resolve_create(self.roots[path.var], &path.features)?;
        let residue = self.ws.add(Value::Not(atoms.clone()));
        self.ws.unify(lhs, residue).then_some(self)
    }

    /// Evaluates a test-only equation against the current state.
    fn test(&self, eq: &Equation) -> bool {
        match eq {
            Equation::Exists(p) => match self.ws.resolve(self.roots[p.var], &p.features) {
                Some(n) => self.ws.is_present(n),
                None => false,
            },
            Equation::Negate(p, atoms) => match self.ws.resolve(self.roots[p.var], &p.features) {
                None => true,
                Some(n) => match self.ws.value(n) {
                    Value::Atom(a) => !atoms.contains(a),
                    Value::Or(s) => !s.is_subset(atoms),
                    Value::Not(_) | Value::Complex(_) => true,
                },
            },
            Equation::Constrain(p, op) => {
                let Some(lhs) = self.ws.resolve(self.roots[p.var], &p.features) else {
                    return false;
                };
                if !self.ws.is_present(lhs) {
                    return false;
                }
                let mut scratch = self.clone();
                let rhs = match op {
                    Operand::Path(q) => match scratch.ws.resolve(scratch.roots[q.var], &q.features) {
                        Some(n) => n,
                        None => return true,
                    },
                    Operand::Value(v) => scratch.ws.import(v),
                };
                scratch.ws.unify(lhs, rhs)
            }
            _ => true,
        }
    }

    fn finish(self) -> Option<Vec<FeatureStructure>> {
        if !self.pending.iter().all(|eq| self.test(eq)) {
            return None;
        }
        self.roots.iter().map(|&r| self.ws.extract(r)).collect()
    }
}

impl EquationEngine {
    pub fn new(solution_cap: usize) -> Self {
        EquationEngine { solution_cap: solution_cap.max(1) }
    }

    /// Applies `eqs` to `bindings` (`bindings[i]` is `X<i>`), returning every
    /// consistent specialization. An empty solution list means failure.
    pub fn apply(
        &self,
        bindings: &[FeatureStructure],
        eqs: &[Equation],
    ) -> Result<Application, EquationError> {
        let mut vars = BTreeSet::new();
        for e in eqs {
            e.variables(&mut vars);
        }
        if let Some(&v) = vars.iter().find(|&&v| v >= bindings.len()) {
            return Err(EquationError::UnboundVariable(v, bindings.len()));
        }

        let mut truncated = false;
        let states = self.run(vec![State::from_bindings(bindings)], eqs, &mut truncated);

        let mut seen = HashSet::new();
        let mut solutions = Vec::new();
        for st in states {
            if let Some(sol) = st.finish() {
                let key: Vec<String> = sol.iter().map(|s| s.canonical()).collect();
                if seen.insert(key) {
                    solutions.push(sol);
                }
            }
        }
        if solutions.len() > self.solution_cap {
            solutions.truncate(self.solution_cap);
            truncated = true;
        }
        if truncated {
            log::warn!("equation solutions truncated at cap {}", self.solution_cap);
        }
        Ok(Application { solutions, truncated })
    }

    fn run<'e>(&self, states: Vec<State<'e>>, eqs: &'e [Equation], truncated: &mut bool) -> Vec<State<'e>> {
        let mut states = states;
        for eq in eqs {
            let mut next = Vec::new();
            for st in states {
                match eq {
                    Equation::Unify(p, op) => next.extend(st.unify_eq(p, op)),
                    Equation::Negate(p, atoms) => next.extend(st.negate(p, atoms)),
                    Equation::Constrain(..) | Equation::Exists(..) => {
                        let mut st = st;
                        st.pending.push(eq);
                        next.push(st);
                    }
                    Equation::Or(groups) => {
                        for g in groups {
                            next.extend(self.run(vec![st.clone()], g, truncated));
                        }
                    }
                    Equation::Xor(groups) => {
                        let mut satisfiable = Vec::new();
                        for g in groups {
                            let base = st.pending.len();
                            let results: Vec<State<'e>> = self
                                .run(vec![st.clone()], g, truncated)
                                .into_iter()
                                .filter_map(|mut s| {
                                    let local: Vec<&Equation> = s.pending.drain(base..).collect();
                                    local.iter().all(|t| s.test(t)).then_some(s)
                                })
                                .collect();
                            if !results.is_empty() {
                                satisfiable.push(results);
                            }
                        }
                        if satisfiable.len() == 1 {
                            next.extend(satisfiable.pop().unwrap());
                        }
                    }
                }
            }
            // duplicates are only removed at the end, so leave headroom
            if next.len() > self.solution_cap * 4 {
                next.truncate(self.solution_cap * 4);
                *truncated = true;
            }
            states = next;
            if states.is_empty() {
                break;
            }
        }
        states
    }
}

/// [`EquationEngine::apply`] with the default solution cap.
pub fn apply_equations(
    bindings: &[FeatureStructure],
    eqs: &[Equation],
) -> Result<Application, EquationError> {
    EquationEngine::default().apply(bindings, eqs)
}

/// Evaluates a test-only equation. Never builds structure.
pub fn evaluate_test(bindings: &[FeatureStructure], test: &Equation) -> bool {
    let mut vars = BTreeSet::new();
    test.variables(&mut vars);
    if vars.iter().any(|&v| v >= bindings.len()) {
        return false;
    }
    State::from_bindings(bindings).test(test)
}
