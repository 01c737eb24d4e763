//! A hybrid knowledge-based / statistical translation pipeline.
//!
//! Tagged source tokens are chunked and chart-parsed under a unification
//! grammar. Two routes lead to English from there: the glosser composes
//! target strings over the parse forest, and the interlingua route builds
//! meaning graphs, ranks them against a concept taxonomy and realizes the
//! winner. Both routes end in a word lattice from which a trigram model
//! extracts the best path, followed by automatic postediting.

pub mod chunker;
mod compose;
pub mod extract;
pub mod featstruct;
pub mod glosser;
pub mod lattice;
pub mod lm;
pub mod morphology;
pub mod parser;
pub mod pipeline;
pub mod posteditor;
pub mod realizer;
pub mod rulebase;
pub mod semantics;
pub mod sexp;
