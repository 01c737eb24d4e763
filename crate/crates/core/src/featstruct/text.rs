//! Parenthesized text syntax for feature structures and equations.
//!
//! Structures are lists of `(feature value)` pairs; values are symbols,
//! `"strings"`, `(*OR* ...)`, `(*NOT* ...)` or nested structures. A shared
//! node is written `#n value` at its first occurrence and `#n` afterwards.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::equation::{Equation, FeaturePath, Operand};
use super::{Atom, FeatureStructure, Value, Workspace};
use crate::sexp::{self, Sexp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FsParseError {
    #[error(transparent)]
    Read(#[from] sexp::ReadError),
    #[error("{0}")]
    Syntax(String),
}

fn syntax<T>(msg: impl Into<String>) -> Result<T, FsParseError> {
    Err(FsParseError::Syntax(msg.into()))
}

pub(crate) fn parse_structure(text: &str) -> Result<FeatureStructure, FsParseError> {
    structure_from_sexp(&sexp::read_one(text)?)
}

pub(crate) fn atom_from_sexp(e: &Sexp) -> Option<Atom> {
    match e {
        Sexp::Sym(s) => Some(Atom::Sym(s.clone())),
        Sexp::Str(s) => Some(Atom::Str(s.clone())),
        Sexp::List(_) => None,
    }
}

fn atom_set(items: &[Sexp]) -> Result<BTreeSet<Atom>, FsParseError> {
    let mut set = BTreeSet::new();
    for e in items {
        match atom_from_sexp(e) {
            Some(a) => {
                set.insert(a);
            }
            None => return syntax(format!("expected an atom inside *OR*/*NOT*, found {e}")),
        }
    }
    if set.is_empty() {
        return syntax("empty *OR*/*NOT* set");
    }
    Ok(set)
}

/// Builds a structure from an already-read expression.
pub fn structure_from_sexp(e: &Sexp) -> Result<FeatureStructure, FsParseError> {
    let mut ws = Workspace::default();
    let mut tags = HashMap::new();
    let root = build(e, &mut ws, &mut tags)?;
    match ws.extract(root) {
        Some(fs) => Ok(fs),
        None => syntax("cyclic structure"),
    }
}

fn build(e: &Sexp, ws: &mut Workspace, tags: &mut HashMap<String, usize>) -> Result<usize, FsParseError> {
    match e {
        Sexp::Sym(_) | Sexp::Str(_) => Ok(ws.add(Value::Atom(atom_from_sexp(e).unwrap()))),
        Sexp::List(items) => {
            if let Some(head) = items.first() {
                if head.is_sym("*OR*") {
                    let v = Value::disjunction(atom_set(&items[1..])?).unwrap();
                    return Ok(ws.add(v));
                }
                if head.is_sym("*NOT*") {
                    return Ok(ws.add(Value::Not(atom_set(&items[1..])?)));
                }
            }
            let mut map = BTreeMap::new();
            for pair in items {
                let Some(parts) = pair.as_list() else {
                    return syntax(format!("expected (feature value), found {pair}"));
                };
                let Some(feature) = parts.first().and_then(Sexp::as_sym) else {
                    return syntax(format!("feature name must be a symbol in {pair}"));
                };
                let node = match &parts[1..] {
                    [Sexp::Sym(t)] if t.starts_with('#') => match tags.get(t) {
                        Some(&n) => n,
                        None => return syntax(format!("reference to undefined tag {t}")),
                    },
                    [Sexp::Sym(t), v] if t.starts_with('#') => {
                        let n = build(v, ws, tags)?;
                        if tags.insert(t.clone(), n).is_some() {
                            return syntax(format!("tag {t} defined twice"));
                        }
                        n
                    }
                    [v] => build(v, ws, tags)?,
                    _ => return syntax(format!("malformed feature pair {pair}")),
                };
                if map.insert(feature.to_string(), node).is_some() {
                    return syntax(format!("duplicate feature {feature}"));
                }
            }
            Ok(ws.add(Value::Complex(map)))
        }
    }
}

fn variable_index(s: &str) -> Option<usize> {
    let rest = s.strip_prefix('X').or_else(|| s.strip_prefix('x'))?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

fn path_from_sexp(e: &Sexp) -> Result<FeaturePath, FsParseError> {
    match e {
        Sexp::Sym(s) => match variable_index(s) {
            Some(v) => Ok(FeaturePath { var: v, features: Vec::new() }),
            None => syntax(format!("expected a variable, found {s}")),
        },
        Sexp::List(items) => {
            let Some(var) = items.first().and_then(Sexp::as_sym).and_then(variable_index) else {
                return syntax(format!("path must start with a variable X0..Xn: {e}"));
            };
            let mut features = Vec::new();
            for f in &items[1..] {
                match f.as_sym() {
                    Some(s) => features.push(s.to_string()),
                    None => return syntax(format!("path features must be symbols: {e}")),
                }
            }
            Ok(FeaturePath { var, features })
        }
        Sexp::Str(_) => syntax(format!("expected a path, found {e}")),
    }
}

fn is_path(e: &Sexp) -> bool {
    match e {
        Sexp::Sym(s) => variable_index(s).is_some(),
        Sexp::List(items) => items.first().and_then(Sexp::as_sym).and_then(variable_index).is_some(),
        Sexp::Str(_) => false,
    }
}

fn operand_from_sexp(e: &Sexp) -> Result<Operand, FsParseError> {
    if is_path(e) {
        Ok(Operand::Path(path_from_sexp(e)?))
    } else {
        Ok(Operand::Value(structure_from_sexp(e)?))
    }
}

fn group_from_sexp(e: &Sexp) -> Result<Vec<Equation>, FsParseError> {
    match e.as_list() {
        Some(items) => items.iter().map(equation_from_sexp).collect(),
        None => syntax(format!("expected a group of equations, found {e}")),
    }
}

pub fn equation_from_sexp(e: &Sexp) -> Result<Equation, FsParseError> {
    let Some(items) = e.as_list() else {
        return syntax(format!("expected an equation, found {e}"));
    };
    match items {
        [head, groups @ ..] if head.is_sym("*OR*") || head.is_sym("*XOR*") => {
            if groups.is_empty() {
                return syntax("empty disjunction block");
            }
            let groups = groups.iter().map(group_from_sexp).collect::<Result<Vec<_>, _>>()?;
            Ok(if head.is_sym("*OR*") { Equation::Or(groups) } else { Equation::Xor(groups) })
        }
        [head, path] if head.is_sym("is") => Ok(Equation::Exists(path_from_sexp(path)?)),
        [lhs, op, rhs] if op.is_sym("=") => {
            let lhs = path_from_sexp(lhs)?;
            if let Some([neg, rest @ ..]) = rhs.as_list() {
                if neg.is_sym("*NOT*") {
                    return Ok(Equation::Negate(lhs, atom_set(rest)?));
                }
            }
            Ok(Equation::Unify(lhs, operand_from_sexp(rhs)?))
        }
        [lhs, op, rhs] if op.is_sym("=c") => {
            Ok(Equation::Constrain(path_from_sexp(lhs)?, operand_from_sexp(rhs)?))
        }
        _ => syntax(format!("unrecognized equation {e}")),
    }
}

pub fn parse_equation(text: &str) -> Result<Equation, FsParseError> {
    equation_from_sexp(&sexp::read_one(text)?)
}

/// Parses a whitespace-separated sequence of equations.
pub fn parse_equations(text: &str) -> Result<Vec<Equation>, FsParseError> {
    sexp::read_all(text)?.iter().map(|(e, _)| equation_from_sexp(e)).collect()
}

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(X{}", self.var)?;
        for feat in &self.features {
            let mut s = String::new();
            sexp::write_symbol(&mut s, feat);
            write!(f, " {s}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Path(p) if p.features.is_empty() => write!(f, "X{}", p.var),
            Operand::Path(p) => write!(f, "{p}"),
            Operand::Value(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Equation::Unify(p, o) => write!(f, "({p} = {o})"),
            Equation::Constrain(p, o) => write!(f, "({p} =c {o})"),
            Equation::Negate(p, atoms) => {
                write!(f, "({p} = (*NOT*")?;
                for a in atoms {
                    write!(f, " {a}")?;
                }
                f.write_str("))")
            }
            Equation::Exists(p) => write!(f, "(is {p})"),
            Equation::Or(groups) | Equation::Xor(groups) => {
                f.write_str(if matches!(self, Equation::Or(_)) { "(*OR*" } else { "(*XOR*" })?;
                for g in groups {
                    f.write_str(" (")?;
                    for (i, e) in g.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" ")?;
                        }
                        write!(f, "{e}")?;
                    }
                    f.write_str(")")?;
                }
                f.write_str(")")
            }
        }
    }
}
