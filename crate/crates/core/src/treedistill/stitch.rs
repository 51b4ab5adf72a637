use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolcore::{enumerate_inputs, BooleanFunction, Clause, DecisionTree, DistributionSampler, Literal, Node, SampleBits, SampleMask};
use crate::error::{Error, Result};

/// Estimates `v̂_S ≈ E[AND_S(x) (2 f(x) - 1)]` for every clause in the final
/// clause set.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafValues {
    pub values: BTreeMap<Clause, f64>,
    pub s: usize,
    pub eps: f64,
    /// Shared samples behind every estimate (0 for exact values).
    pub samples: usize,
}

impl LeafValues {
    pub fn get(&self, clause: &Clause) -> Option<f64> {
        self.values.get(clause).copied()
    }
}

/// Samples for a joint `±ε/s` guarantee over `count` clauses:
/// `⌈2 s² / ε² · ln(4 count / δ)⌉`.
///
/// Each term `AND_S(x)(2f(x) - 1)` lies in `[-1, 1]`, a range of width 2.
pub fn leaf_sample_count(count: usize, eps: f64, s: usize, delta: f64) -> usize {
    let s = s as f64;
    (2.0 * s * s / (eps * eps) * (4.0 * count.max(1) as f64 / delta).ln()).ceil() as usize
}

/// Estimates every `v̂_S` from one shared batch of samples. `samples`
/// overrides the Hoeffding count.
pub fn estimate_leaf_values<R: Rng + ?Sized>(
    clauses: &BTreeSet<Clause>,
    f: &dyn BooleanFunction,
    dist: &DistributionSampler,
    eps: f64,
    s: usize,
    delta: f64,
    samples: Option<usize>,
    rng: &mut R,
) -> Result<LeafValues> {
    if s == 0 {
        return Err(Error::invalid("size budget must be at least 1"));
    }
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("eps must be > 0 and delta in (0, 1)"));
    }
    if f.dim() != dist.dim() {
        return Err(Error::invalid("function and distribution dimensions differ"));
    }
    let n = samples.unwrap_or_else(|| leaf_sample_count(clauses.len(), eps, s, delta));
    if n == 0 {
        return Err(Error::invalid("leaf estimation needs at least one sample"));
    }
    let xs = dist.draw(n, rng);
    let labels = SampleMask::from_bools(&f.eval_many(&xs));
    let bits = SampleBits::from_inputs(&xs);
    let values = clauses
        .iter()
        .map(|c| {
            let and = bits.clause_mask(c);
            let agree = and.count_and(&labels) as f64;
            let total = and.count_ones() as f64;
            (c.clone(), (2.0 * agree - total) / n as f64)
        })
        .collect();
    Ok(LeafValues {
        values,
        s,
        eps,
        samples: n,
    })
}

/// Exact `v_S` under the uniform distribution by enumerating `{0,1}^d`.
pub fn exact_leaf_values_uniform(clauses: &BTreeSet<Clause>, f: &dyn BooleanFunction, s: usize) -> Result<LeafValues> {
    let xs = enumerate_inputs(f.dim())?;
    let signs: Vec<f64> = f.eval_many(&xs).into_iter().map(|y| if y { 1.0 } else { -1.0 }).collect();
    let n = xs.len() as f64;
    let values = clauses
        .iter()
        .map(|c| {
            let sum: f64 = xs
                .iter()
                .zip(&signs)
                .filter(|(x, _)| c.eval_unchecked(x))
                .map(|(_, s)| s)
                .sum();
            (c.clone(), sum / n)
        })
        .collect();
    Ok(LeafValues {
        values,
        s,
        eps: 0.0,
        samples: 0,
    })
}

/// `val(T, v) = Σ_{leaf clauses S} v_S (2 T(S) - 1)`. Fails if a leaf
/// clause has no value.
pub fn tree_value(tree: &DecisionTree, values: &LeafValues) -> Result<f64> {
    tree.leaf_clauses()
        .iter()
        .map(|(c, label)| {
            let v = values
                .get(c)
                .ok_or_else(|| Error::invalid(format!("no value for leaf clause {c}")))?;
            Ok(if *label { v } else { -v })
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Choice {
    Leaf,
    Split { var: usize, left_budget: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchResult {
    pub tree: DecisionTree,
    pub value: f64,
}

/// The tree of size `<= s` and depth `<= r`, with every node's clause in the
/// value table, that maximizes [`tree_value`].
///
/// Dynamic program over `(clause, odd budget)`. A leaf is worth `|v̂_S|`
/// with label `v̂_S > 0`. A split on `x_i` needs both `S ∪ {¬x_i}` and
/// `S ∪ {x_i}` in the table; child budgets sum to `σ - 1`. Ties go to the
/// leaf, then the smaller variable, then the smaller left budget.
pub fn stitch_optimal_tree(values: &LeafValues, s: usize, r: usize) -> Result<StitchResult> {
    if s == 0 || s % 2 == 0 {
        return Err(Error::invalid(format!("size budget must be odd and >= 1, got {s}")));
    }
    let root = values
        .values
        .keys()
        .find(|c| c.is_empty())
        .ok_or_else(|| Error::invalid("clause set does not contain the empty clause"))?;
    let d = root.dim();
    let clauses: Vec<&Clause> = values.values.keys().collect();
    let vals: Vec<f64> = values.values.values().copied().collect();
    let index: HashMap<&Clause, usize> = clauses.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let budgets = s.div_ceil(2);
    let slot = |sigma: usize| (sigma - 1) / 2;

    // children[i]: splits available at clause i as (var, low, high)
    let children: Vec<Vec<(usize, usize, usize)>> = clauses
        .iter()
        .map(|c| {
            if c.len() >= r {
                return Vec::new();
            }
            (0..d)
                .filter(|&v| !c.mentions(v))
                .filter_map(|v| {
                    let lo = index.get(&c.with(Literal::neg(v)).ok()?)?;
                    let hi = index.get(&c.with(Literal::pos(v)).ok()?)?;
                    Some((v, *lo, *hi))
                })
                .collect()
        })
        .collect();

    let mut best = vec![vec![0.0f64; budgets]; clauses.len()];
    let mut choice = vec![vec![Choice::Leaf; budgets]; clauses.len()];
    let mut order: Vec<usize> = (0..clauses.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(clauses[i].len()));
    for &i in &order {
        for sigma in (1..=s).step_by(2) {
            let mut top = vals[i].abs();
            let mut pick = Choice::Leaf;
            for &(var, lo, hi) in &children[i] {
                for left in (1..sigma.saturating_sub(1)).step_by(2) {
                    let right = sigma - 1 - left;
                    let v = best[lo][slot(left)] + best[hi][slot(right)];
                    if v > top {
                        top = v;
                        pick = Choice::Split { var, left_budget: left };
                    }
                }
            }
            best[i][slot(sigma)] = top;
            choice[i][slot(sigma)] = pick;
        }
    }

    fn build(
        i: usize,
        sigma: usize,
        clauses: &[&Clause],
        vals: &[f64],
        choice: &[Vec<Choice>],
        index: &HashMap<&Clause, usize>,
    ) -> Node {
        match choice[i][(sigma - 1) / 2] {
            Choice::Leaf => Node::Leaf(vals[i] > 0.0),
            Choice::Split { var, left_budget } => {
                let c = clauses[i];
                let lo = index[&c.with(Literal::neg(var)).expect("free variable")];
                let hi = index[&c.with(Literal::pos(var)).expect("free variable")];
                Node::split(
                    var,
                    build(lo, left_budget, clauses, vals, choice, index),
                    build(hi, sigma - 1 - left_budget, clauses, vals, choice, index),
                )
            }
        }
    }

    let root_index = index[root];
    let node = build(root_index, s, &clauses, &vals, &choice, &index);
    Ok(StitchResult {
        tree: DecisionTree::new(d, node)?,
        value: best[root_index][slot(s)],
    })
}
