//! Finite function classes and sample-complexity experiments for
//! distillation: VC dimension, error-pattern classes `f ⊕ G`, Pareto
//! frontiers, and Monte-Carlo runs of simple distillers.

mod class;
mod simulate;

pub use class::{pareto_frontier, triple_indicator_class, vc_dimension, vcdim_pf, xor_class, FiniteClass, MAX_VC_INPUTS};
pub use simulate::{
    agnostic_instance_error, class_errors, erm_sample_count, erm_surplus, simulate_threshold_distillation,
    threshold_sample_count, AgnosticInstance, ErmTrialSummary, MassFunction, ThresholdFamily, ThresholdSimulation,
    ERM_CONSTANT,
};
