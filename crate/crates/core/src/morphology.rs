//! English verb inflection and verb-group realization from abstract flags.

use std::collections::{BTreeMap, HashMap};

/// The irregular-verb table bundled with the crate.
pub const BUILTIN_IRREGULARS: &str = include_str!("../data/irregular_verbs.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Forms {
    past: Vec<String>,
    participle: String,
    third: String,
}

#[derive(Debug, Clone, Default)]
pub struct Morphology {
    irregular: HashMap<String, Forms>,
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Consonant-vowel-consonant endings double their final consonant.
fn doubles_final(base: &str) -> bool {
    let c: Vec<char> = base.chars().collect();
    let n = c.len();
    n >= 3
        && n <= 4
        && !is_vowel(c[n - 1])
        && !matches!(c[n - 1], 'w' | 'x' | 'y')
        && is_vowel(c[n - 2])
        && !is_vowel(c[n - 3])
        && (n == 3 || !is_vowel(c[0]))
}

impl Morphology {
    /// Parses `base TAB past TAB participle TAB 3sg` lines; `past` may hold
    /// `|`-separated alternatives.
    pub fn parse(text: &str) -> Result<Morphology, String> {
        let mut m = Morphology::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [base, past, participle, third] = cols.as_slice() else {
                return Err(format!("line {}: expected base, past, participle, 3sg", n + 1));
            };
            m.irregular.insert(
                base.to_string(),
                Forms {
                    past: past.split('|').map(String::from).collect(),
                    participle: participle.to_string(),
                    third: third.to_string(),
                },
            );
        }
        Ok(m)
    }

    pub fn builtin() -> Morphology {
        Morphology::parse(BUILTIN_IRREGULARS).expect("bundled irregular table parses")
    }

    /// Inflects the first word of a possibly multiword base ("set up").
    fn inflect(&self, base: &str, f: impl Fn(&Self, &str) -> Vec<String>) -> Vec<String> {
        match base.split_once(' ') {
            Some((head, rest)) => f(self, head).into_iter().map(|h| format!("{h} {rest}")).collect(),
            None => f(self, base),
        }
    }

    pub fn past(&self, base: &str) -> Vec<String> {
        self.inflect(base, |m, b| match m.irregular.get(b) {
            Some(f) => f.past.clone(),
            None => vec![regular_ed(b)],
        })
    }

    pub fn participle(&self, base: &str) -> String {
        self.inflect(base, |m, b| match m.irregular.get(b) {
            Some(f) => vec![f.participle.clone()],
            None => vec![regular_ed(b)],
        })
        .remove(0)
    }

    pub fn third_singular(&self, base: &str) -> String {
        self.inflect(base, |m, b| match m.irregular.get(b) {
            Some(f) => vec![f.third.clone()],
            None => vec![regular_s(b)],
        })
        .remove(0)
    }

    pub fn present_participle(&self, base: &str) -> String {
        self.inflect(base, |_, b| vec![regular_ing(b)]).remove(0)
    }
}

fn regular_ed(b: &str) -> String {
    if b.ends_with('e') {
        format!("{b}d")
    } else if let Some(stem) = b.strip_suffix('y').filter(|s| s.chars().last().is_some_and(|c| !is_vowel(c))) {
        format!("{stem}ied")
    } else if doubles_final(b) {
        format!("{b}{}ed", b.chars().last().unwrap())
    } else {
        format!("{b}ed")
    }
}

fn regular_s(b: &str) -> String {
    if ["s", "x", "z", "ch", "sh", "o"].iter().any(|e| b.ends_with(e)) {
        format!("{b}es")
    } else if let Some(stem) = b.strip_suffix('y').filter(|s| s.chars().last().is_some_and(|c| !is_vowel(c))) {
        format!("{stem}ies")
    } else {
        format!("{b}s")
    }
}

fn regular_ing(b: &str) -> String {
    if b == "be" || b.ends_with("ee") || b.ends_with("ye") || b.ends_with("oe") {
        format!("{b}ing")
    } else if let Some(stem) = b.strip_suffix("ie") {
        format!("{stem}ying")
    } else if let Some(stem) = b.strip_suffix('e') {
        format!("{stem}ing")
    } else if doubles_final(b) {
        format!("{b}{}ing", b.chars().last().unwrap())
    } else {
        format!("{b}ing")
    }
}

pub const VERB_FLAGS: [&str; 4] = ["past", "passive", "negative", "progressive"];

/// Base-form alternatives plus accumulated abstract flags.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerbGroupSpec {
    pub base: Vec<String>,
    /// Flag name to value; `+` sets a flag.
    pub flags: BTreeMap<String, String>,
}

impl VerbGroupSpec {
    pub fn new<S: Into<String>>(base: impl IntoIterator<Item = S>) -> Self {
        VerbGroupSpec { base: base.into_iter().map(Into::into).collect(), flags: BTreeMap::new() }
    }

    pub fn with(mut self, flag: &str) -> Self {
        self.flags.insert(flag.to_string(), "+".to_string());
        self
    }

    fn is_set(&self, flag: &str) -> bool {
        self.flags.get(flag).is_some_and(|v| v == "+")
    }
}

/// Realizes a verb group as full-string alternatives such as
/// `"was eaten"`/`"were eaten"`. Subject number is unknown here, so both
/// agreement forms of auxiliaries are offered.
pub fn realize_verbgroup(v: &VerbGroupSpec, morph: &Morphology) -> Vec<String> {
    let unknown: Vec<&String> =
        v.flags.iter().filter(|(f, val)| *val == "+" && !VERB_FLAGS.contains(&f.as_str())).map(|(f, _)| f).collect();
    if !unknown.is_empty() {
        log::warn!("unsupported verb flags {unknown:?}; using base forms");
        return v.base.clone();
    }
    let past = v.is_set("past");
    let passive = v.is_set("passive");
    let negative = v.is_set("negative");
    let progressive = v.is_set("progressive");

    let mut out = Vec::new();
    for base in &v.base {
        let mut push = |s: String| {
            if !out.contains(&s) {
                out.push(s);
            }
        };
        if !passive && !progressive {
            match (past, negative) {
                (false, false) => push(base.clone()),
                (true, false) => morph.past(base).into_iter().for_each(&mut push),
                (false, true) => {
                    push(format!("does not {base}"));
                    push(format!("do not {base}"));
                }
                (true, true) => push(format!("did not {base}")),
            }
            continue;
        }
        let be: [&str; 2] = if past { ["was", "were"] } else { ["is", "are"] };
        let mut tail = Vec::new();
        if negative {
            tail.push("not");
        }
        if passive && progressive {
            tail.push("being");
        }
        let main = if passive { morph.participle(base) } else { morph.present_participle(base) };
        for aux in be {
            let mut words = vec![aux];
            words.extend(&tail);
            words.push(&main);
            push(words.join(" "));
        }
    }
    out
}
