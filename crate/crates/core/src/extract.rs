//! Exact best-path and top-N extraction from word lattices under a trigram
//! model.
//!
//! Dynamic programming runs over states `(node, u, v)` in topological
//! node order; epsilon edges move a state without touching its history.
//! Each state keeps the N best distinct prefixes. Ties are broken by the
//! lexicographically smallest word sequence; to keep that exact, prefixes
//! tied at the cut-off score are retained per prefix length.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use crate::lattice::WordLattice;
use crate::lm::{TrigramModel, BOS, EOS};

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub words: Vec<String>,
    /// Natural-log probability including sentence boundaries.
    pub score: f64,
}

fn rank(a: &Scored, b: &Scored) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.words.cmp(&b.words))
}

/// Sorts and keeps what could still contribute to the final top `n`.
fn prune(list: &mut Vec<Scored>, n: usize) {
    list.sort_by(rank);
    let mut kept: Vec<Scored> = Vec::with_capacity(list.len().min(2 * n));
    let mut per_tie: HashMap<(u64, usize), usize> = HashMap::new();
    let mut better = 0;
    let mut last_score = None;
    let mut run = 0;
    for s in list.drain(..) {
        if last_score != Some(s.score.to_bits()) {
            better += run;
            run = 0;
            last_score = Some(s.score.to_bits());
        }
        if better >= n {
            break;
        }
        let slot = per_tie.entry((s.score.to_bits(), s.words.len())).or_insert(0);
        if *slot < n {
            *slot += 1;
            run += 1;
            kept.push(s);
        }
    }
    *list = kept;
}

/// The `n` best distinct word sequences, best first.
pub fn top_n(lattice: &WordLattice, model: &TrigramModel, n: usize) -> Vec<Scored> {
    assert!(n >= 1, "top_n needs n >= 1");
    let order = lattice.topological_order().expect("lattice must be acyclic");
    let out = lattice.out_edges();
    let bos = model.id(BOS);
    let mut states: Vec<HashMap<(u32, u32), Vec<Scored>>> = vec![HashMap::new(); lattice.node_count()];
    states[0].insert((bos, bos), vec![Scored { words: Vec::new(), score: 0.0 }]);

    let mut finals: Vec<Scored> = Vec::new();
    for node in order {
        let mut here = std::mem::take(&mut states[node]);
        let mut keys: Vec<(u32, u32)> = here.keys().copied().collect();
        keys.sort_unstable();
        for key in &keys {
            let list = here.get_mut(key).unwrap();
            dedup(list);
            prune(list, n);
        }
        if node == lattice.sink() {
            let eos = model.id(EOS);
            for key in keys {
                let p = model.prob_id(eos, key.0, key.1).ln();
                for s in &here[&key] {
                    finals.push(Scored { words: s.words.clone(), score: s.score + p });
                }
            }
            continue;
        }
        for key in keys {
            let (u, v) = key;
            for &ei in &out[node] {
                let e = &lattice.edges()[ei];
                let (next, delta, word) = match &e.label {
                    None => ((u, v), 0.0, None),
                    Some(w) => {
                        let id = model.id(w);
                        ((v, id), model.prob_id(id, u, v).ln(), Some(w))
                    }
                };
                let target = states[e.to].entry(next).or_default();
                for s in &here[&key] {
                    let mut words = s.words.clone();
                    if let Some(w) = word {
                        words.push(w.clone());
                    }
                    target.push(Scored { words, score: s.score + delta });
                }
            }
        }
    }
    dedup(&mut finals);
    finals.sort_by(rank);
    finals.truncate(n);
    finals
}

fn dedup(list: &mut Vec<Scored>) {
    let mut seen = HashSet::new();
    list.retain(|s| seen.insert(s.words.clone()));
}

pub fn best_path(lattice: &WordLattice, model: &TrigramModel) -> Scored {
    top_n(lattice, model, 1).pop().expect("well-formed lattice has a path")
}

/// Scores every distinct path independently; used by tests and reports.
pub fn exhaustive(lattice: &WordLattice, model: &TrigramModel, cap: usize) -> (Vec<Scored>, bool) {
    let (paths, truncated) = lattice.all_paths(cap);
    let mut scored: Vec<Scored> =
        paths.into_iter().map(|words| Scored { score: model.score(&words), words }).collect();
    scored.sort_by(rank);
    (scored, truncated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::LmConfig;

    fn alt(words: &[&str]) -> WordLattice {
        let parts: Vec<WordLattice> = words.iter().map(|w| WordLattice::from_word(*w)).collect();
        WordLattice::alternate_all(&parts)
    }

    #[test]
    fn single_path_wins_regardless() {
        let m = TrigramModel::train_text("x y z\n", LmConfig::default());
        let l = WordLattice::from_words(&["the", "moon"]);
        let best = best_path(&l, &m);
        assert_eq!(best.words, ["the", "moon"]);
        assert_eq!(best.score, m.score(&["the", "moon"]));
    }

    #[test]
    fn prefers_the_moon() {
        let m = TrigramModel::train_text("the moon is bright\nwe saw the moon\na cat sat\n", LmConfig::default());
        let l = WordLattice::concat(&alt(&["the", "a"]), &WordLattice::from_word("moon"));
        assert_eq!(best_path(&l, &m).words, ["the", "moon"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let m = TrigramModel::train_text("", LmConfig::default());
        let l = WordLattice::concat(&alt(&["b", "a", "c"]), &alt(&["y", "x"]));
        assert_eq!(best_path(&l, &m).words, ["a", "x"]);
        let all = top_n(&l, &m, 10);
        assert_eq!(all.len(), 6);
        let (ex, _) = exhaustive(&l, &m, 100);
        assert_eq!(all, ex);
    }

    #[test]
    fn top_n_matches_exhaustive() {
        let m = TrigramModel::train_text("in japan it rains\nthe moon in japan\nat home on time\n", LmConfig::default());
        let l = WordLattice::concat_all(&[alt(&["in", "on", "at"]), alt(&["japan", "home"]), WordLattice::epsilon(), alt(&["it", "time"])]);
        let (ex, _) = exhaustive(&l, &m, 100);
        for n in 1..=ex.len() + 2 {
            let got = top_n(&l, &m, n);
            assert_eq!(got, ex[..n.min(ex.len())].to_vec(), "n = {n}");
        }
    }
}
