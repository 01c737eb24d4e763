//! Pre-parsing transformations: number and compound resegmentation, name
//! recognition, and phrase-barrier insertion driven by finite-state
//! patterns.
//!
//! Pattern files look like
//!
//! ```text
//! (TOPIC-HA      (N+ HA DATE COMMA ~))
//! (VP-BEGIN     == (is TOPIC-LEAD))
//! (VP           (VP-BEGIN < ANY1+ > VP-END) :left <<VP :right VP>>)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::sexp::{self, Sexp};

pub const NUMBER_TAG: &str = "NUMBER";
pub const COMMA_TAG: &str = "COMMA";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Marker {
    Begin(String),
    End(String),
}

impl Marker {
    pub fn category(&self) -> &str {
        match self {
            Marker::Begin(c) | Marker::End(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub tag: String,
    pub marker: Option<Marker>,
}

impl Token {
    pub fn new(surface: impl Into<String>, tag: impl Into<String>) -> Self {
        Token { surface: surface.into(), tag: tag.into(), marker: None }
    }

    pub fn marker(m: Marker) -> Self {
        let surface = match &m {
            Marker::Begin(c) => format!("BEGIN-{c}"),
            Marker::End(c) => format!("END-{c}"),
        };
        Token { tag: surface.clone(), surface, marker: Some(m) }
    }

    pub fn is_marker(&self) -> bool {
        self.marker.is_some()
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_marker() {
            f.write_str(&self.surface)
        } else {
            write!(f, "{}/{}", self.surface, self.tag)
        }
    }
}

/// Parses one `surface/POS` token. Bare `BEGIN-X` / `END-X` are markers.
pub fn parse_token(text: &str) -> Option<Token> {
    if let Some((surface, tag)) = text.rsplit_once('/') {
        if !surface.is_empty() && !tag.is_empty() {
            return Some(Token::new(surface, tag));
        }
    }
    if let Some(c) = text.strip_prefix("BEGIN-").filter(|c| !c.is_empty()) {
        return Some(Token::marker(Marker::Begin(c.to_string())));
    }
    if let Some(c) = text.strip_prefix("END-").filter(|c| !c.is_empty()) {
        return Some(Token::marker(Marker::End(c.to_string())));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("token {index} ({text:?}) is not of the form surface/POS")]
pub struct TokenError {
    pub index: usize,
    pub text: String,
}

/// Parses a whitespace-separated line of tokens.
pub fn parse_tokens(line: &str) -> Result<Vec<Token>, TokenError> {
    line.split_whitespace()
        .enumerate()
        .map(|(index, t)| parse_token(t).ok_or_else(|| TokenError { index, text: t.to_string() }))
        .collect()
}

pub fn format_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(Token::to_string).collect::<Vec<_>>().join(" ")
}

/// Surface-string dictionary used both for compounds and for the name
/// gazetteer: `surface TAB tag` per line.
#[derive(Debug, Clone, Default)]
pub struct SegmentDict {
    entries: HashMap<String, String>,
}

impl SegmentDict {
    pub fn parse(text: &str) -> Result<SegmentDict, String> {
        let mut dict = SegmentDict::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((surface, tag)) = line.split_once('\t') else {
                return Err(format!("line {}: expected surface TAB tag", n + 1));
            };
            dict.insert(surface.trim(), tag.trim());
        }
        Ok(dict)
    }

    pub fn insert(&mut self, surface: &str, tag: &str) {
        self.entries.insert(surface.to_string(), tag.to_string());
    }

    pub fn get(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

/// Merges leftmost-longest runs of at least `min` tokens whose concatenated
/// surfaces appear in `dict`.
fn merge_runs(tokens: Vec<Token>, dict: &SegmentDict, min: usize) -> Vec<Token> {
    if dict.is_empty() {
        return tokens;
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut best = None;
        let mut surface = String::new();
        for j in i..tokens.len() {
            if tokens[j].is_marker() {
                break;
            }
            surface.push_str(&tokens[j].surface);
            if j + 1 - i >= min {
                if let Some(tag) = dict.get(&surface) {
                    best = Some((j + 1, surface.clone(), tag.to_string()));
                }
            }
        }
        match best {
            Some((end, surface, tag)) => {
                out.push(Token::new(surface, tag));
                i = end;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Number, compound and name resegmentation.
pub fn resegment(tokens: &[Token], compounds: &SegmentDict, gazetteer: &SegmentDict) -> Vec<Token> {
    let mut merged: Vec<Token> = Vec::with_capacity(tokens.len());
    for t in tokens {
        if !t.is_marker() && is_digits(&t.surface) {
            if let Some(last) = merged.last_mut() {
                if !last.is_marker() && last.tag == NUMBER_TAG && is_digits(&last.surface) {
                    last.surface.push_str(&t.surface);
                    continue;
                }
            }
            merged.push(Token::new(t.surface.clone(), NUMBER_TAG));
        } else {
            merged.push(t.clone());
        }
    }
    let merged = merge_runs(merged, compounds, 2);
    merge_runs(merged, gazetteer, 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    /// A tag or class name. `ANY` matches every token.
    Cat(String),
    /// One or more tokens matching the category.
    Plus(String),
    AnchorOpen,
    AnchorClose,
    /// Everything up to (not including) the next comma, or to the end.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPattern {
    pub name: String,
    pub elements: Vec<Element>,
    /// Barrier category; markers go around the anchor region if present,
    /// otherwise around the whole match.
    pub barrier: String,
}

#[derive(Debug, Clone, Default)]
pub struct PatternSet {
    pub patterns: Vec<ChunkPattern>,
    /// Class name to the set of tags it accepts.
    classes: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern line {line}: {message}")]
pub struct PatternError {
    pub line: usize,
    pub message: String,
}

const WILDCARD: &str = "ANY";

fn parse_element(s: &str) -> Result<Element, String> {
    match s {
        "<" => Ok(Element::AnchorOpen),
        ">" => Ok(Element::AnchorClose),
        "~" => Ok(Element::Tail),
        "ANY1+" => Ok(Element::Plus(WILDCARD.into())),
        _ => match s.strip_suffix('+') {
            Some(cat) if cat.is_empty() || matches!(cat, "<" | ">" | "~") => {
                Err(format!("quantifier on non-category {s:?}"))
            }
            Some(cat) => Ok(Element::Plus(cat.into())),
            None => Ok(Element::Cat(s.into())),
        },
    }
}

fn validate_elements(elements: &[Element]) -> Result<(), String> {
    if elements.is_empty() {
        return Err("empty element list".into());
    }
    let find = |x: &Element| elements.iter().enumerate().filter(|(_, e)| *e == x).map(|(i, _)| i).collect::<Vec<_>>();
    match (find(&Element::AnchorOpen).as_slice(), find(&Element::AnchorClose).as_slice()) {
        ([], []) => Ok(()),
        ([o], [c]) if o < c => Ok(()),
        _ => Err("at most one well-formed < > anchor region".into()),
    }
}

impl PatternSet {
    pub fn parse(text: &str) -> Result<PatternSet, PatternError> {
        let items = sexp::read_all(text).map_err(|e| PatternError { line: e.line, message: e.message })?;
        let mut set = PatternSet::default();
        for (item, line) in items {
            let err = |m: String| PatternError { line, message: m };
            let parts = item.as_list().ok_or_else(|| err(format!("expected a list, found {item}")))?;
            let name = parts
                .first()
                .and_then(Sexp::as_sym)
                .ok_or_else(|| err("pattern must start with its label".into()))?;
            if parts.get(1).is_some_and(|p| p.is_sym("==")) {
                let test = parts.get(2).and_then(Sexp::as_list);
                match test {
                    Some([is, Sexp::Sym(tag)]) if is.is_sym("is") && parts.len() == 3 => {
                        set.classes.entry(name.to_string()).or_default().insert(tag.clone());
                    }
                    _ => return Err(err(format!("class definition must be (NAME == (is TAG)): {item}"))),
                }
                continue;
            }
            let elems = parts
                .get(1)
                .and_then(Sexp::as_list)
                .ok_or_else(|| err(format!("missing element list in {item}")))?;
            let elements = elems
                .iter()
                .map(|e| e.as_sym().ok_or_else(|| format!("element must be a symbol: {e}")).and_then(parse_element))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            validate_elements(&elements).map_err(err)?;
            let (mut left, mut right) = (None, None);
            let mut rest = parts[2..].iter();
            while let Some(key) = rest.next() {
                let value = rest.next().and_then(Sexp::as_sym).ok_or_else(|| err("directive needs a value".into()))?;
                if key.is_sym(":left") {
                    let cat = value.strip_prefix("<<").filter(|c| !c.is_empty());
                    left = Some(cat.ok_or_else(|| err(format!(":left expects <<CAT, found {value}")))?.to_string());
                } else if key.is_sym(":right") {
                    let cat = value.strip_suffix(">>").filter(|c| !c.is_empty());
                    right = Some(cat.ok_or_else(|| err(format!(":right expects CAT>>, found {value}")))?.to_string());
                } else {
                    return Err(err(format!("unknown directive {key}")));
                }
            }
            let barrier = match (left, right) {
                (None, None) => name.to_string(),
                (Some(l), Some(r)) if l == r => l,
                _ => return Err(err(":left and :right must both be given with the same category".into())),
            };
            set.patterns.push(ChunkPattern { name: name.to_string(), elements, barrier });
        }
        Ok(set)
    }

    /// Does `tag` satisfy category `cat`, directly or via `==` classes?
    pub fn accepts(&self, cat: &str, tag: &str) -> bool {
        let mut seen = BTreeSet::new();
        self.accepts_inner(cat, tag, &mut seen)
    }

    fn accepts_inner<'a>(&'a self, cat: &'a str, tag: &str, seen: &mut BTreeSet<&'a str>) -> bool {
        if cat == WILDCARD || cat == tag {
            return true;
        }
        if !seen.insert(cat) {
            return false;
        }
        self.classes
            .get(cat)
            .is_some_and(|tags| tags.iter().any(|t| self.accepts_inner(t, tag, seen)))
    }
}

/// A successful pattern match over token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternMatch {
    pub start: usize,
    pub end: usize,
    pub anchor: Option<(usize, usize)>,
}

impl PatternMatch {
    /// The span barrier markers surround.
    pub fn region(&self) -> (usize, usize) {
        self.anchor.unwrap_or((self.start, self.end))
    }
}

struct Matcher<'a> {
    set: &'a PatternSet,
    elements: &'a [Element],
    tokens: &'a [Token],
    best: Option<PatternMatch>,
}

impl Matcher<'_> {
    fn token_ok(&self, cat: &str, i: usize) -> bool {
        self.tokens.get(i).is_some_and(|t| !t.is_marker() && self.set.accepts(cat, &t.tag))
    }

    fn run(&mut self, k: usize, i: usize, start: usize, open: Option<usize>, anchor: Option<(usize, usize)>) {
        let Some(e) = self.elements.get(k) else {
            if self.best.is_none_or(|b| i > b.end) {
                self.best = Some(PatternMatch { start, end: i, anchor });
            }
            return;
        };
        match e {
            Element::Cat(c) => {
                if self.token_ok(c, i) {
                    self.run(k + 1, i + 1, start, open, anchor);
                }
            }
            Element::Plus(c) => {
                let mut j = i;
                while self.token_ok(c, j) {
                    j += 1;
                }
                for end in (i + 1..=j).rev() {
                    self.run(k + 1, end, start, open, anchor);
                }
            }
            Element::AnchorOpen => self.run(k + 1, i, start, Some(i), anchor),
            Element::AnchorClose => self.run(k + 1, i, start, None, open.map(|o| (o, i))),
            Element::Tail => {
                let mut j = i;
                while j < self.tokens.len() && !(self.tokens[j].tag == COMMA_TAG && !self.tokens[j].is_marker()) {
                    j += 1;
                }
                self.run(k + 1, j, start, open, anchor);
            }
        }
    }
}

/// Longest match of `pattern` starting exactly at `start`. Marker tokens
/// never match an element.
pub fn match_pattern(set: &PatternSet, pattern: &ChunkPattern, tokens: &[Token], start: usize) -> Option<PatternMatch> {
    if start >= tokens.len() {
        return None;
    }
    let mut m = Matcher { set, elements: &pattern.elements, tokens, best: None };
    m.run(0, start, start, None, None);
    m.best.filter(|b| b.end > b.start)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Region {
    start: usize,
    end: usize,
    category: String,
}

fn crosses(a: &Region, b: &Region) -> bool {
    (a.start < b.start && b.start < a.end && a.end < b.end) || (b.start < a.start && a.start < b.end && b.end < a.end)
}

/// Applies every pattern in order, each in one left-to-right pass, and
/// inserts barrier markers. Markers already present are kept.
pub fn chunk(tokens: &[Token], set: &PatternSet) -> Vec<Token> {
    let mut words = Vec::with_capacity(tokens.len());
    let mut regions: Vec<Region> = Vec::new();
    let mut open: Vec<(String, usize)> = Vec::new();
    for t in tokens {
        match &t.marker {
            None => words.push(t.clone()),
            Some(Marker::Begin(c)) => open.push((c.clone(), words.len())),
            Some(Marker::End(c)) => {
                if let Some(k) = open.iter().rposition(|(oc, _)| oc == c) {
                    let (category, start) = open.remove(k);
                    if start < words.len() {
                        regions.push(Region { start, end: words.len(), category });
                    }
                }
            }
        }
    }

    for pattern in &set.patterns {
        let mut pos = 0;
        while pos < words.len() {
            let Some(m) = match_pattern(set, pattern, &words, pos) else {
                pos += 1;
                continue;
            };
            let (start, end) = m.region();
            let region = Region { start, end, category: pattern.barrier.clone() };
            if start < end && !regions.iter().any(|r| crosses(r, &region) || *r == region) {
                regions.push(region);
                pos = m.end;
            } else {
                pos += 1;
            }
        }
    }
    render(&words, &regions)
}

fn render(words: &[Token], regions: &[Region]) -> Vec<Token> {
    let mut out = Vec::with_capacity(words.len() + 2 * regions.len());
    for gap in 0..=words.len() {
        let mut ends: Vec<(usize, &Region)> = regions.iter().enumerate().filter(|(_, r)| r.end == gap).collect();
        ends.sort_by(|(ia, a), (ib, b)| b.start.cmp(&a.start).then(ib.cmp(ia)));
        for (_, r) in ends {
            out.push(Token::marker(Marker::End(r.category.clone())));
        }
        let mut begins: Vec<(usize, &Region)> = regions.iter().enumerate().filter(|(_, r)| r.start == gap).collect();
        begins.sort_by(|(ia, a), (ib, b)| b.end.cmp(&a.end).then(ia.cmp(ib)));
        for (_, r) in begins {
            out.push(Token::marker(Marker::Begin(r.category.clone())));
        }
        if let Some(w) = words.get(gap) {
            out.push(w.clone());
        }
    }
    out
}

/// Barrier spans `(category, start, end)` over word positions, recovered
/// from marker tokens.
pub fn barrier_spans(tokens: &[Token]) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut open: Vec<(String, usize)> = Vec::new();
    let mut pos = 0;
    for t in tokens {
        match &t.marker {
            None => pos += 1,
            Some(Marker::Begin(c)) => open.push((c.clone(), pos)),
            Some(Marker::End(c)) => {
                if let Some(k) = open.iter().rposition(|(oc, _)| oc == c) {
                    let (c, s) = open.remove(k);
                    out.push((c, s, pos));
                }
            }
        }
    }
    out
}
