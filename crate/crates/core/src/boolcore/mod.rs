//! Boolean-function substrate: inputs, clauses, decision trees, samplers and
//! the disagreement error between two functions.

mod clause;
mod sampler;
mod tree;

pub use clause::{eval_and, total_possible_probes, BitInput, Clause, Literal};
pub use sampler::{
    disagreement, enumerate_inputs, exact_disagreement_uniform, BooleanFunction,
    DistributionSampler, FnBool, SampleBits, SampleMask, MAX_ENUMERATION_DIM,
};
pub use tree::{random_tree, DecisionTree, Node};
