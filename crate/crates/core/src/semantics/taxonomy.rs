//! Concept inheritance network with relation constraints and disjointness.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub name: String,
    pub domain: String,
    pub range: String,
    /// 0 is a hard constraint; higher levels are softer.
    pub level: u32,
    /// Overrides the level's default penalty.
    pub penalty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("taxonomy line {line}: {message}")]
pub struct TaxonomyError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    parents: BTreeMap<String, Vec<String>>,
    ancestors: BTreeMap<String, BTreeSet<String>>,
    relations: BTreeMap<String, Relation>,
    relation_order: Vec<String>,
    disjoint: BTreeSet<(String, String)>,
    level_penalties: BTreeMap<u32, f64>,
}

/// Splits a line into words; `|...|` quotes a name containing spaces or
/// commas. Commas outside quotes separate words.
fn words(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() || c == ',' {
            chars.next();
        } else if c == '|' {
            chars.next();
            let mut w = String::new();
            loop {
                match chars.next() {
                    Some('|') => break,
                    Some(ch) => w.push(ch),
                    None => return Err("unterminated |name|".into()),
                }
            }
            out.push(w);
        } else {
            let mut w = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == ',' || ch == '|' {
                    break;
                }
                w.push(ch);
                chars.next();
            }
            out.push(w);
        }
    }
    Ok(out)
}

fn quote(name: &str) -> String {
    if name.is_empty() || name.contains(|c: char| c.is_whitespace() || c == ',' || c == '|') {
        format!("|{name}|")
    } else {
        name.to_string()
    }
}

impl Taxonomy {
    /// Reads `concept C [isa P1,P2]`, `relation R domain D range G
    /// [relax L] [penalty P]`, `disjoint A B` and `penalty L P` lines.
    pub fn parse(text: &str) -> Result<Taxonomy, TaxonomyError> {
        let mut t = Taxonomy::default();
        t.level_penalties.insert(1, 0.1);
        t.level_penalties.insert(2, 0.3);
        let mut pending: Vec<(usize, Vec<String>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| TaxonomyError { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let w = words(body).map_err(err)?;
            match w[0].as_str() {
                "concept" => {
                    let name = w.get(1).ok_or_else(|| err("concept needs a name".into()))?;
                    let parents = match w.get(2).map(String::as_str) {
                        None => Vec::new(),
                        Some("isa") if w.len() > 3 => w[3..].to_vec(),
                        _ => return Err(err("expected `isa P1,P2`".into())),
                    };
                    t.parents.entry(name.clone()).or_default().extend(parents);
                }
                "relation" => {
                    let name = w.get(1).ok_or_else(|| err("relation needs a name".into()))?.clone();
                    let mut rel = Relation { name: name.clone(), domain: String::new(), range: String::new(), level: 0, penalty: None };
                    let mut i = 2;
                    while i < w.len() {
                        let value = w.get(i + 1).ok_or_else(|| err(format!("{} needs a value", w[i])))?;
                        match w[i].as_str() {
                            "domain" => rel.domain = value.clone(),
                            "range" => rel.range = value.clone(),
                            "relax" => rel.level = value.parse().map_err(|_| err(format!("bad level {value}")))?,
                            "penalty" => {
                                let p: f64 = value.parse().map_err(|_| err(format!("bad penalty {value}")))?;
                                if !(p > 0.0 && p <= 1.0) {
                                    return Err(err(format!("penalty {p} outside (0, 1]")));
                                }
                                rel.penalty = Some(p);
                            }
                            other => return Err(err(format!("unknown relation field {other}"))),
                        }
                        i += 2;
                    }
                    if rel.domain.is_empty() || rel.range.is_empty() {
                        return Err(err(format!("relation {name} needs domain and range")));
                    }
                    pending.push((line, vec![rel.domain.clone(), rel.range.clone()]));
                    if !t.relations.contains_key(&name) {
                        t.relation_order.push(name.clone());
                    }
                    t.relations.insert(name, rel);
                }
                "disjoint" => {
                    let [_, a, b] = w.as_slice() else {
                        return Err(err("expected `disjoint A B`".into()));
                    };
                    pending.push((line, vec![a.clone(), b.clone()]));
                    t.disjoint.insert((a.clone(), b.clone()));
                    t.disjoint.insert((b.clone(), a.clone()));
                }
                "penalty" => {
                    let [_, l, p] = w.as_slice() else {
                        return Err(err("expected `penalty LEVEL VALUE`".into()));
                    };
                    let l: u32 = l.parse().map_err(|_| err(format!("bad level {l}")))?;
                    let p: f64 = p.parse().map_err(|_| err(format!("bad penalty {p}")))?;
                    if l == 0 || !(p > 0.0 && p <= 1.0) {
                        return Err(err("penalty needs level >= 1 and value in (0, 1]".into()));
                    }
                    t.level_penalties.insert(l, p);
                }
                other => return Err(err(format!("unknown declaration {other}"))),
            }
        }
        for (name, ps) in &t.parents {
            for p in ps {
                if !t.parents.contains_key(p) {
                    return Err(TaxonomyError { line: 0, message: format!("{name}: undeclared parent {p}") });
                }
            }
        }
        for (line, names) in pending {
            if let Some(missing) = names.iter().find(|c| !t.parents.contains_key(*c)) {
                return Err(TaxonomyError { line, message: format!("undeclared concept {missing}") });
            }
        }
        t.close()?;
        Ok(t)
    }

    fn close(&mut self) -> Result<(), TaxonomyError> {
        // Depth-first with colouring; 1 = on stack, 2 = done.
        fn visit(
            c: &str,
            parents: &BTreeMap<String, Vec<String>>,
            state: &mut BTreeMap<String, u8>,
            anc: &mut BTreeMap<String, BTreeSet<String>>,
        ) -> Result<(), String> {
            match state.get(c) {
                Some(2) => return Ok(()),
                Some(1) => return Err(format!("is-a cycle through {c}")),
                _ => {}
            }
            state.insert(c.to_string(), 1);
            let mut set = BTreeSet::from([c.to_string()]);
            for p in &parents[c] {
                visit(p, parents, state, anc)?;
                set.extend(anc[p].iter().cloned());
            }
            state.insert(c.to_string(), 2);
            anc.insert(c.to_string(), set);
            Ok(())
        }
        let mut state = BTreeMap::new();
        let mut anc = BTreeMap::new();
        for c in self.parents.keys() {
            visit(c, &self.parents, &mut state, &mut anc).map_err(|message| TaxonomyError { line: 0, message })?;
        }
        self.ancestors = anc;
        Ok(())
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.parents.contains_key(concept)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.parents.keys().map(String::as_str)
    }

    pub fn parents(&self, concept: &str) -> &[String] {
        self.parents.get(concept).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Reflexive, transitive is-a. Undeclared concepts are only themselves.
    pub fn is_a(&self, concept: &str, ancestor: &str) -> bool {
        concept == ancestor || self.ancestors.get(concept).is_some_and(|s| s.contains(ancestor))
    }

    /// Declared disjointness, inherited by all descendants of either side.
    pub fn disjoint(&self, a: &str, b: &str) -> bool {
        let single = |c: &str| BTreeSet::from([c.to_string()]);
        let aa = self.ancestors.get(a).cloned().unwrap_or_else(|| single(a));
        let bb = self.ancestors.get(b).cloned().unwrap_or_else(|| single(b));
        aa.iter().any(|x| bb.iter().any(|y| self.disjoint.contains(&(x.clone(), y.clone()))))
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Relations in declaration order.
    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relation_order.iter().map(|n| &self.relations[n])
    }

    /// Penalty for violating a constraint at `level` (>= 1). Levels above
    /// the highest declared one use the highest declared penalty.
    pub fn level_penalty(&self, level: u32) -> f64 {
        self.level_penalties.range(..=level).next_back().or_else(|| self.level_penalties.iter().next()).map(|(_, &p)| p).unwrap_or(0.1)
    }

    /// Serializes into the form `parse` reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (l, p) in &self.level_penalties {
            out.push_str(&format!("penalty {l} {p}\n"));
        }
        for (c, ps) in &self.parents {
            out.push_str(&format!("concept {}", quote(c)));
            if !ps.is_empty() {
                let list: Vec<String> = ps.iter().map(|p| quote(p)).collect();
                out.push_str(&format!(" isa {}", list.join(",")));
            }
            out.push('\n');
        }
        for r in self.relations() {
            out.push_str(&format!("relation {} domain {} range {} relax {}", quote(&r.name), quote(&r.domain), quote(&r.range), r.level));
            if let Some(p) = r.penalty {
                out.push_str(&format!(" penalty {p}"));
            }
            out.push('\n');
        }
        for (a, b) in self.disjoint.iter().filter(|(a, b)| a <= b) {
            out.push_str(&format!("disjoint {} {}\n", quote(a), quote(b)));
        }
        out
    }
}
