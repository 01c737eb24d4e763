//! Bottom-up composition of per-constituent structures through rule
//! equations, shared by the glosser and the semantic analyzer.

use crate::featstruct::{EquationEngine, Equation, FeatureStructure};
use crate::rulebase::RuleKey;

/// Applies every equation set of `rule` to every combination of child
/// alternatives (rightmost child varies fastest), appending distinct `X0`
/// results to `out` until it holds `cap` structures.
pub(crate) fn compose_into(
    engine: &EquationEngine,
    rule: &RuleKey,
    eq_sets: &[Vec<Equation>],
    kids: &[Vec<FeatureStructure>],
    cap: usize,
    out: &mut Vec<FeatureStructure>,
) {
    if kids.iter().any(Vec::is_empty) || out.len() >= cap {
        return;
    }
    let mut idx = vec![0usize; kids.len()];
    loop {
        let mut bindings = vec![FeatureStructure::new()];
        bindings.extend(idx.iter().zip(kids).map(|(&i, ks)| ks[i].clone()));
        for eqs in eq_sets {
            match engine.apply(&bindings, eqs) {
                Ok(app) => {
                    for mut sol in app.solutions {
                        let x0 = sol.swap_remove(0);
                        if out.len() < cap && !out.contains(&x0) {
                            out.push(x0);
                        }
                    }
                }
                Err(e) => log::warn!("rule {rule}: {e}"),
            }
        }
        if out.len() >= cap {
            return;
        }
        let mut p = kids.len();
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < kids[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}
