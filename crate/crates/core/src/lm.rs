//! Word trigram model with Good-Turing discounting and Katz backoff.
//!
//! Sentences are padded as `<s> <s> w1 .. wn </s>`. Seen events of each
//! order get Good-Turing adjusted counts `r* = (r+1) N_{r+1} / N_r` for
//! `r < k`; the mass freed by discounting goes to unseen events through
//! the next lower order. The unigram level spreads its left-over mass
//! uniformly over the vocabulary plus `</s>` and `<unk>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const OOV: &str = "<unk>";
pub const DEFAULT_CUTOFF: usize = 5;

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const OOV_ID: u32 = 2;
const TINY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LmConfig {
    /// Good-Turing cutoff `k`; counts `>= k` are left undiscounted.
    pub cutoff: usize,
    /// Map words seen once in training to `<unk>`.
    pub singletons_to_oov: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig { cutoff: DEFAULT_CUTOFF, singletons_to_oov: false }
    }
}

/// One row of a per-order Good-Turing table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRow {
    pub r: u64,
    pub n_r: u64,
    pub n_r1: u64,
    /// The adjusted count actually used.
    pub adjusted: f64,
    /// Whether the Good-Turing formula was applied for this `r`.
    pub applied: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct History {
    /// Denominator for seen events (total count, plus one pseudo-count when
    /// discounting frees no mass).
    denom: f64,
    /// Weight on the lower-order distribution for unseen events.
    alpha: f64,
    /// Rescales seen events when nothing is left for unseen ones.
    seen_scale: f64,
}

#[derive(Debug, Clone)]
pub struct TrigramModel {
    cfg: LmConfig,
    words: Vec<String>,
    index: HashMap<String, u32>,
    uni: Vec<u64>,
    bi: HashMap<(u32, u32), u64>,
    tri: HashMap<(u32, u32, u32), u64>,
    /// Adjusted counts per order (index 0..3 for orders 1..3), by r.
    gt: [Vec<f64>; 3],
    gt_rows: [Vec<GtRow>; 3],
    uni_hist: History,
    bi_hist: HashMap<u32, History>,
    tri_hist: HashMap<(u32, u32), History>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("model line {line}: {message}")]
pub struct ModelError {
    pub line: usize,
    pub message: String,
}

fn count_of_counts<'a>(counts: impl Iterator<Item = &'a u64>) -> BTreeMap<u64, u64> {
    let mut nr = BTreeMap::new();
    for &c in counts {
        if c > 0 {
            *nr.entry(c).or_insert(0) += 1;
        }
    }
    nr
}

fn gt_table(order: usize, nr: &BTreeMap<u64, u64>, k: usize) -> (Vec<f64>, Vec<GtRow>) {
    let mut adjusted: Vec<f64> = (0..k as u64).map(|r| r as f64).collect();
    let mut rows = Vec::new();
    for r in 1..k as u64 {
        let n_r = nr.get(&r).copied().unwrap_or(0);
        let n_r1 = nr.get(&(r + 1)).copied().unwrap_or(0);
        if n_r == 0 {
            continue;
        }
        let mut row = GtRow { r, n_r, n_r1, adjusted: r as f64, applied: false };
        if n_r1 == 0 {
            log::info!("order {order}: N_{} is zero, count {r} left undiscounted", r + 1);
        } else {
            let r_star = (r + 1) as f64 * n_r1 as f64 / n_r as f64;
            if r_star > r as f64 {
                log::info!("order {order}: adjusted count {r_star} exceeds {r}, left undiscounted");
            } else {
                row.adjusted = r_star;
                row.applied = true;
                adjusted[r as usize] = r_star;
            }
        }
        rows.push(row);
    }
    (adjusted, rows)
}

impl TrigramModel {
    pub fn train<S: AsRef<str>>(sentences: &[Vec<S>], cfg: LmConfig) -> TrigramModel {
        assert!(cfg.cutoff >= 1, "Good-Turing cutoff must be at least 1");
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for s in sentences {
            for w in s {
                *freq.entry(w.as_ref()).or_insert(0) += 1;
            }
        }
        let keep = |w: &str| !(cfg.singletons_to_oov && freq.get(w) == Some(&1));
        let vocab: BTreeSet<&str> =
            freq.keys().copied().filter(|w| keep(w) && ![BOS, EOS, OOV].contains(w)).collect();
        let mut m = TrigramModel::empty(cfg, vocab.into_iter().map(String::from).collect());
        for s in sentences {
            let mut ids = vec![BOS_ID, BOS_ID];
            ids.extend(s.iter().map(|w| m.id(w.as_ref())));
            ids.push(EOS_ID);
            for i in 2..ids.len() {
                m.uni[ids[i] as usize] += 1;
                *m.bi.entry((ids[i - 1], ids[i])).or_insert(0) += 1;
                *m.tri.entry((ids[i - 2], ids[i - 1], ids[i])).or_insert(0) += 1;
            }
        }
        m.finish();
        m
    }

    /// One sentence per line, space-separated tokens; blank lines skipped.
    pub fn train_text(text: &str, cfg: LmConfig) -> TrigramModel {
        let sentences: Vec<Vec<&str>> =
            text.lines().map(|l| l.split_whitespace().collect::<Vec<_>>()).filter(|s| !s.is_empty()).collect();
        TrigramModel::train(&sentences, cfg)
    }

    fn empty(cfg: LmConfig, vocab: Vec<String>) -> TrigramModel {
        let mut words = vec![BOS.to_string(), EOS.to_string(), OOV.to_string()];
        words.extend(vocab);
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        TrigramModel {
            cfg,
            uni: vec![0; words.len()],
            words,
            index,
            bi: HashMap::new(),
            tri: HashMap::new(),
            gt: Default::default(),
            gt_rows: Default::default(),
            uni_hist: History::default(),
            bi_hist: HashMap::new(),
            tri_hist: HashMap::new(),
        }
    }

    /// Builds discount tables and backoff weights from the raw counts.
    fn finish(&mut self) {
        let k = self.cfg.cutoff;
        let tables = [
            count_of_counts(self.uni.iter()),
            count_of_counts(self.bi.values()),
            count_of_counts(self.tri.values()),
        ];
        for (o, nr) in tables.iter().enumerate() {
            let (adj, rows) = gt_table(o + 1, nr, k);
            self.gt[o] = adj;
            self.gt_rows[o] = rows;
        }

        let uni_events: Vec<(u32, u64)> =
            self.uni.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as u32, c)).collect();
        self.uni_hist = self.history(1, &uni_events, |_| 0.0);

        let mut by_v: BTreeMap<u32, Vec<(u32, u64)>> = BTreeMap::new();
        for (&(v, w), &c) in &self.bi {
            by_v.entry(v).or_default().push((w, c));
        }
        let mut bi_hist = HashMap::new();
        for (v, mut events) in by_v {
            events.sort_unstable();
            bi_hist.insert(v, self.history(2, &events, |w| self.p1(w)));
        }
        self.bi_hist = bi_hist;

        let mut by_uv: BTreeMap<(u32, u32), Vec<(u32, u64)>> = BTreeMap::new();
        for (&(u, v, w), &c) in &self.tri {
            by_uv.entry((u, v)).or_default().push((w, c));
        }
        let mut tri_hist = HashMap::new();
        for ((u, v), mut events) in by_uv {
            events.sort_unstable();
            tri_hist.insert((u, v), self.history(3, &events, |w| self.p2(w, v)));
        }
        self.tri_hist = tri_hist;
    }

    fn history(&self, order: usize, events: &[(u32, u64)], lower: impl Fn(u32) -> f64) -> History {
        let total: u64 = events.iter().map(|e| e.1).sum();
        if total == 0 {
            return History { denom: 1.0, alpha: 1.0, seen_scale: 1.0 };
        }
        let discounted: f64 = events.iter().map(|&(_, c)| self.adjusted(order, c)).sum();
        let mut denom = total as f64;
        if 1.0 - discounted / denom <= TINY {
            denom += 1.0;
        }
        let left = 1.0 - discounted / denom;
        if order == 1 {
            return History { denom, alpha: left, seen_scale: 1.0 };
        }
        let lower_seen: f64 = events.iter().map(|&(w, _)| lower(w)).sum();
        let lower_unseen = 1.0 - lower_seen;
        if lower_unseen <= TINY {
            History { denom, alpha: 0.0, seen_scale: 1.0 / (1.0 - left) }
        } else {
            History { denom, alpha: left / lower_unseen, seen_scale: 1.0 }
        }
    }

    fn adjusted(&self, order: usize, r: u64) -> f64 {
        self.gt[order - 1].get(r as usize).copied().unwrap_or(r as f64)
    }

    /// Size of the prediction domain: vocabulary plus `</s>` and `<unk>`.
    pub fn domain_size(&self) -> usize {
        self.words.len() - 1
    }

    /// Non-reserved vocabulary, sorted.
    pub fn vocabulary(&self) -> &[String] {
        &self.words[3..]
    }

    /// Every word a probability is defined over (vocabulary, `</s>`, `<unk>`).
    pub fn domain(&self) -> Vec<&str> {
        self.words[1..].iter().map(String::as_str).collect()
    }

    pub fn id(&self, w: &str) -> u32 {
        self.index.get(w).copied().filter(|&i| i != BOS_ID || w == BOS).unwrap_or(OOV_ID)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    fn p1(&self, w: u32) -> f64 {
        let uniform = 1.0 / self.domain_size() as f64;
        let c = self.uni.get(w as usize).copied().unwrap_or(0);
        let h = self.uni_hist;
        let seen = if c > 0 { self.adjusted(1, c) / h.denom } else { 0.0 };
        seen + h.alpha * uniform
    }

    fn p2(&self, w: u32, v: u32) -> f64 {
        let Some(h) = self.bi_hist.get(&v) else { return self.p1(w) };
        match self.bi.get(&(v, w)) {
            Some(&c) => self.adjusted(2, c) / h.denom * h.seen_scale,
            None => h.alpha * self.p1(w),
        }
    }

    /// P(w | u v) over ids.
    pub fn prob_id(&self, w: u32, u: u32, v: u32) -> f64 {
        let Some(h) = self.tri_hist.get(&(u, v)) else { return self.p2(w, v) };
        match self.tri.get(&(u, v, w)) {
            Some(&c) => self.adjusted(3, c) / h.denom * h.seen_scale,
            None => h.alpha * self.p2(w, v),
        }
    }

    /// P(w | u v); unknown words map to `<unk>`.
    pub fn prob(&self, w: &str, u: &str, v: &str) -> f64 {
        self.prob_id(self.id(w), self.id(u), self.id(v))
    }

    /// Natural-log score of a sentence, including the `</s>` transition.
    pub fn score<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let (mut u, mut v) = (BOS_ID, BOS_ID);
        let mut total = 0.0;
        for w in words {
            let id = self.id(w.as_ref());
            total += self.prob_id(id, u, v).ln();
            (u, v) = (v, id);
        }
        total + self.prob_id(EOS_ID, u, v).ln()
    }

    pub fn cutoff(&self) -> usize {
        self.cfg.cutoff
    }

    /// Raw count of an n-gram of order 1..=3 (`<s>` allowed in histories).
    pub fn count(&self, ngram: &[&str]) -> u64 {
        let ids: Vec<u32> = ngram.iter().map(|w| self.id(w)).collect();
        match ids.as_slice() {
            [w] => self.uni[*w as usize],
            [v, w] => self.bi.get(&(*v, *w)).copied().unwrap_or(0),
            [u, v, w] => self.tri.get(&(*u, *v, *w)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// N_r for the given order (1..=3).
    pub fn count_of_counts(&self, order: usize, r: u64) -> u64 {
        match order {
            1 => self.uni.iter().filter(|&&c| c == r).count() as u64,
            2 => self.bi.values().filter(|&&c| c == r).count() as u64,
            3 => self.tri.values().filter(|&&c| c == r).count() as u64,
            _ => 0,
        }
    }

    pub fn adjusted_count(&self, order: usize, r: u64) -> f64 {
        self.adjusted(order, r)
    }

    pub fn gt_rows(&self, order: usize) -> &[GtRow] {
        &self.gt_rows[order - 1]
    }

    /// All seen event counts of an order, for mass-conservation checks.
    pub fn event_counts(&self, order: usize) -> Vec<u64> {
        let mut v: Vec<u64> = match order {
            1 => self.uni.iter().copied().filter(|&c| c > 0).collect(),
            2 => self.bi.values().copied().collect(),
            3 => self.tri.values().copied().collect(),
            _ => Vec::new(),
        };
        v.sort_unstable();
        v
    }

    /// Histories `(u, v)` seen in training, sorted.
    pub fn trigram_histories(&self) -> Vec<(String, String)> {
        let mut h: Vec<(u32, u32)> = self.tri_hist.keys().copied().collect();
        h.sort_unstable();
        h.into_iter().map(|(u, v)| (self.words[u as usize].clone(), self.words[v as usize].clone())).collect()
    }

    /// Tab-separated count tables with a header recording `k` and the
    /// vocabulary size. Lines are sorted, so output is deterministic.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#trigram\tk={}\tvocab={}\toov={}",
            self.cfg.cutoff,
            self.vocabulary().len(),
            u8::from(self.cfg.singletons_to_oov)
        );
        let w = |i: u32| self.words[i as usize].as_str();
        let mut lines: Vec<String> = Vec::new();
        for (i, &c) in self.uni.iter().enumerate() {
            if c > 0 || i >= 3 {
                lines.push(format!("1\t{}\t{c}", w(i as u32)));
            }
        }
        let mut bi: Vec<String> = self.bi.iter().map(|(&(v, x), c)| format!("2\t{}\t{}\t{c}", w(v), w(x))).collect();
        let mut tri: Vec<String> =
            self.tri.iter().map(|(&(u, v, x), c)| format!("3\t{}\t{}\t{}\t{c}", w(u), w(v), w(x))).collect();
        lines.sort();
        bi.sort();
        tri.sort();
        for l in lines.iter().chain(&bi).chain(&tri) {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<TrigramModel, ModelError> {
        let err = |line: usize, m: &str| ModelError { line, message: m.to_string() };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty model file"))?;
        let mut cfg = LmConfig::default();
        let mut vocab_size = None;
        let mut fields = header.split('\t');
        if fields.next() != Some("#trigram") {
            return Err(err(1, "missing #trigram header"));
        }
        for f in fields {
            match f.split_once('=') {
                Some(("k", v)) => cfg.cutoff = v.parse().map_err(|_| err(1, "bad k"))?,
                Some(("vocab", v)) => vocab_size = Some(v.parse::<usize>().map_err(|_| err(1, "bad vocab"))?),
                Some(("oov", v)) => cfg.singletons_to_oov = v == "1",
                _ => return Err(err(1, "unknown header field")),
            }
        }
        if cfg.cutoff == 0 {
            return Err(err(1, "k must be at least 1"));
        }
        let rows: Vec<(usize, Vec<&str>)> =
            lines.filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l.split('\t').collect())).collect();
        let mut vocab = BTreeSet::new();
        for (n, f) in &rows {
            if f.first() == Some(&"1") && f.len() == 3 && ![BOS, EOS, OOV].contains(&f[1]) {
                vocab.insert(f[1].to_string());
            } else if !matches!((f.first(), f.len()), (Some(&"1"), 3) | (Some(&"2"), 4) | (Some(&"3"), 5)) {
                return Err(err(*n, "malformed count line"));
            }
        }
        if vocab_size.is_some_and(|v| v != vocab.len()) {
            return Err(err(1, "vocabulary size does not match the unigram table"));
        }
        let mut m = TrigramModel::empty(cfg, vocab.into_iter().collect());
        for (n, f) in &rows {
            let c: u64 = f.last().unwrap().parse().map_err(|_| err(*n, "bad count"))?;
            let ids: Vec<u32> = f[1..f.len() - 1].iter().map(|w| m.index.get(*w).copied()).collect::<Option<_>>().ok_or_else(|| err(*n, "word missing from the unigram table"))?;
            match ids.as_slice() {
                [w] => m.uni[*w as usize] = c,
                [v, w] => {
                    m.bi.insert((*v, *w), c);
                }
                [u, v, w] => {
                    m.tri.insert((*u, *v, *w), c);
                }
                _ => unreachable!(),
            }
        }
        m.finish();
        Ok(m)
    }
}
