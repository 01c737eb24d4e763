mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::*;
use kbmt::lattice::WordLattice;

/// Word sequence of every edge path, with multiplicity.
fn path_multiset(l: &WordLattice) -> BTreeMap<Vec<String>, u64> {
    fn walk(l: &WordLattice, node: usize, words: &mut Vec<String>, out: &mut BTreeMap<Vec<String>, u64>) {
        if node == l.sink() {
            *out.entry(words.clone()).or_default() += 1;
            return;
        }
        for e in l.edges().iter().filter(|e| e.from == node) {
            if let Some(w) = &e.label {
                words.push(w.clone());
            }
            walk(l, e.to, words, out);
            if e.label.is_some() {
                words.pop();
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(l, l.source(), &mut Vec::new(), &mut out);
    out
}

/// Small lattices built from the algebra, with their path sets.
fn gen_algebraic(r: &mut ChaCha8Rng, depth: usize) -> (WordLattice, BTreeSet<Vec<String>>) {
    if depth == 0 || r.gen_bool(0.3) {
        if r.gen_bool(0.1) {
            return (WordLattice::epsilon(), BTreeSet::from([Vec::new()]));
        }
        let w = LATTICE_VOCAB[r.gen_range(0..LATTICE_VOCAB.len())];
        return (WordLattice::from_word(w), BTreeSet::from([vec![w.to_string()]]));
    }
    let (a, pa) = gen_algebraic(r, depth - 1);
    let (b, pb) = gen_algebraic(r, depth - 1);
    if r.gen_bool(0.5) {
        let cross = pa.iter().flat_map(|x| pb.iter().map(move |y| x.iter().chain(y).cloned().collect())).collect();
        (WordLattice::concat(&a, &b), cross)
    } else {
        (WordLattice::alternate(&a, &b), pa.union(&pb).cloned().collect())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn algebra_matches_path_set_semantics(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (l, want) = gen_algebraic(&mut r, 4);
        prop_assert!(l.is_well_formed());
        prop_assert_eq!(word_sequences(&l), want);
    }

    #[test]
    fn path_count_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let l = gen_lattice(&mut r, 3000);
        let multiset = path_multiset(&l);
        prop_assert_eq!(l.edge_path_count(), multiset.values().map(|&c| c as u128).sum::<u128>());
        let (paths, truncated) = l.all_paths(usize::MAX);
        prop_assert!(!truncated);
        prop_assert_eq!(paths.len(), multiset.len());
        prop_assert_eq!(paths.iter().cloned().collect::<BTreeSet<_>>(), multiset.keys().cloned().collect::<BTreeSet<_>>());
        prop_assert_eq!(l.all_paths(usize::MAX).0, paths);
    }

    #[test]
    fn epsilon_elimination_preserves_the_path_multiset(seed in any::<u64>()) {
        let mut r = rng(seed);
        let l = if r.gen_bool(0.5) { gen_lattice(&mut r, 2000) } else { gen_algebraic(&mut r, 4).0 };
        let free = l.without_epsilons();
        prop_assert!(free.is_well_formed());
        let epsilons: Vec<_> = free.edges().iter().filter(|e| e.label.is_none()).collect();
        prop_assert!(epsilons.iter().all(|e| e.from == free.source() && e.to == free.sink()));
        prop_assert_eq!(path_multiset(&free), path_multiset(&l));
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let l = gen_lattice(&mut r, 10_000);
        prop_assert_eq!(WordLattice::parse(&l.to_string()).unwrap(), l);
    }
}

#[test]
fn alternation_of_two_words() {
    let l = WordLattice::alternate(&WordLattice::from_word("which"), &WordLattice::from_word("that"));
    assert_eq!(word_sequences(&l).len(), 2);
    assert_eq!(l.edge_path_count(), 2);
}

#[test]
fn malformed_lattices_are_rejected() {
    assert!(WordLattice::parse("N 3\nE 0 1 a\n").is_err());
    assert!(WordLattice::parse("N 2\nE 0 1 a\nE 1 0 b\n").is_err());
    assert!(WordLattice::parse("E 0 1 a\n").is_err());
}
