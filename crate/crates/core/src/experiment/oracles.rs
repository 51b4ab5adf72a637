//! Slow, direct implementations used to cross-check the fast routines.
//! None of these share code with the functions they check.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::boolcore::{BitInput, BooleanFunction, Clause, Literal};
use crate::juntadistill::JuntaSpec;
use crate::statlab::AgnosticInstance;

/// A tree shape for the brute-force search: leaves carry their clause.
#[derive(Debug, Clone)]
enum Shape {
    Leaf(Clause, bool),
    Split(Box<Shape>, Box<Shape>),
}

fn shape_value(shape: &Shape, values: &BTreeMap<Clause, f64>) -> f64 {
    match shape {
        Shape::Leaf(c, label) => {
            let v = values[c];
            if *label {
                v
            } else {
                -v
            }
        }
        Shape::Split(a, b) => shape_value(a, values) + shape_value(b, values),
    }
}

/// Every tree rooted at `clause` with at most `size` nodes and depth at most
/// `depth`, all of whose node clauses are keys of `values`.
fn all_shapes(clause: &Clause, values: &BTreeMap<Clause, f64>, size: usize, depth: usize) -> Vec<Shape> {
    let mut out = vec![Shape::Leaf(clause.clone(), false), Shape::Leaf(clause.clone(), true)];
    if size < 3 || depth == 0 {
        return out;
    }
    for var in 0..clause.dim() {
        if clause.mentions(var) {
            continue;
        }
        let (Ok(low), Ok(high)) = (clause.with(Literal::neg(var)), clause.with(Literal::pos(var))) else {
            continue;
        };
        if !values.contains_key(&low) || !values.contains_key(&high) {
            continue;
        }
        let mut left_size = 1;
        while left_size <= size - 2 {
            let right_size = size - 1 - left_size;
            for a in all_shapes(&low, values, left_size, depth - 1) {
                for b in all_shapes(&high, values, right_size, depth - 1) {
                    out.push(Shape::Split(Box::new(a.clone()), Box::new(b)));
                }
            }
            left_size += 2;
        }
    }
    out
}

/// Maximum of `Σ_{leaves} ±v_S` over every admissible tree, found by listing
/// all of them. `values` must contain the empty clause.
pub fn brute_force_best_value(values: &BTreeMap<Clause, f64>, d: usize, s: usize, r: usize) -> f64 {
    let root = Clause::empty(d);
    all_shapes(&root, values, s, r)
        .iter()
        .map(|t| shape_value(t, values))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ones(h) ⊊ ones(g)`: `h` has zeros wherever `g` does and more besides.
fn pareto_dominates(h: &[bool], g: &[bool]) -> bool {
    h != g && h.iter().zip(g).all(|(&a, &b)| !a || b)
}

/// Pareto frontier by comparing every pair of distinct rows.
pub fn pairwise_pareto_frontier(rows: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let mut seen = HashSet::new();
    let distinct: Vec<&Vec<bool>> = rows.iter().filter(|r| seen.insert(*r)).collect();
    let mut out = Vec::new();
    for (i, g) in distinct.iter().enumerate() {
        let mut dominated = false;
        for (j, h) in distinct.iter().enumerate() {
            if i != j && pareto_dominates(h, g) {
                dominated = true;
            }
        }
        if !dominated {
            out.push((*g).clone());
        }
    }
    out
}

/// VC dimension by checking every subset of the inputs.
pub fn naive_vc_dimension(rows: &[Vec<bool>], n: usize) -> usize {
    assert!(n <= 16, "naive VC enumeration is limited to 16 inputs");
    let mut best = 0;
    for subset in 0u32..1 << n {
        let points: Vec<usize> = (0..n).filter(|i| subset >> i & 1 == 1).collect();
        let patterns: HashSet<Vec<bool>> = rows.iter().map(|r| points.iter().map(|&p| r[p]).collect()).collect();
        if patterns.len() == 1 << points.len() {
            best = best.max(points.len());
        }
    }
    best
}

/// Error of `g_θ'` against zero under `D_θ`, summed point by point.
pub fn direct_agnostic_error(inst: &AgnosticInstance, theta_prime: &[u8]) -> f64 {
    let m = inst.m();
    let mut total = 0.0;
    for i in 1..=2u8 {
        for j in 0..m {
            let truth_one = inst.theta[j] == i;
            let mass = if truth_one {
                (1.0 - inst.alpha) / (2 * m) as f64
            } else {
                (1.0 + inst.alpha) / (2 * m) as f64
            };
            if theta_prime[j] == i {
                total += mass;
            }
        }
    }
    total
}

/// Whether two functions on `{0,1}^d` that each depend only on the given
/// variable lists agree everywhere. Enumerates assignments to the union of
/// the lists with every other coordinate at 0.
pub fn equal_on_union(a: &dyn BooleanFunction, a_vars: &[usize], b: &dyn BooleanFunction, b_vars: &[usize]) -> bool {
    let union: Vec<usize> = a_vars.iter().chain(b_vars).copied().collect::<BTreeSet<_>>().into_iter().collect();
    assert!(union.len() <= 20, "union of {} variables is too large", union.len());
    let d = a.dim();
    (0u64..1 << union.len()).all(|bits| {
        let mut x = BitInput::zeros(d);
        for (i, &v) in union.iter().enumerate() {
            x.set(v, bits >> i & 1 == 1);
        }
        a.eval_bit(&x) == b.eval_bit(&x)
    })
}

/// Whether every variable of `j` changes its output somewhere.
pub fn all_variables_relevant(j: &JuntaSpec) -> bool {
    let k = j.k();
    (0..k).all(|pos| {
        // table index is MSB-first in variable order
        let bit = 1usize << (k - 1 - pos);
        (0..1usize << k).any(|a| j.table()[a] != j.table()[a ^ bit])
    })
}
