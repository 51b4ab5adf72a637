//! Query-only junta extraction.
//!
//! Relevant coordinates are found by testing random pairs that agree on the
//! current set `S`. Any disagreement is narrowed to a single coordinate by a
//! binary search over the hybrids between the two inputs. The truth table is
//! then read off with `2^|S|` queries. No distribution samples are used.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolcore::{BitInput, BooleanFunction, DecisionTree, Node};
use crate::error::{Error, Result};

/// `f(x) = h(x_S)`.
///
/// `table` is indexed by assignments to `S` with the first variable of `S` as
/// the most significant bit, so the table reads left to right along the
/// leaves of [`junta_to_tree`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "JuntaRepr", into = "JuntaRepr")]
pub struct JuntaSpec {
    d: usize,
    vars: Vec<usize>,
    table: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct JuntaRepr {
    d: usize,
    #[serde(rename = "S")]
    vars: Vec<usize>,
    table: Vec<u8>,
}

impl TryFrom<JuntaRepr> for JuntaSpec {
    type Error = Error;

    fn try_from(r: JuntaRepr) -> Result<Self> {
        if let Some(b) = r.table.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("table entry {b} is not a bit")));
        }
        JuntaSpec::new(r.d, r.vars, r.table.into_iter().map(|b| b == 1).collect())
    }
}

impl From<JuntaSpec> for JuntaRepr {
    fn from(j: JuntaSpec) -> Self {
        JuntaRepr {
            d: j.d,
            vars: j.vars,
            table: j.table.into_iter().map(u8::from).collect(),
        }
    }
}

impl JuntaSpec {
    pub fn new(d: usize, vars: Vec<usize>, table: Vec<bool>) -> Result<Self> {
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("junta variables must be strictly increasing"));
        }
        if vars.last().is_some_and(|&v| v >= d) {
            return Err(Error::invalid(format!("junta variable out of range for d = {d}")));
        }
        if vars.len() >= usize::BITS as usize || table.len() != 1usize << vars.len() {
            return Err(Error::invalid(format!(
                "truth table has {} entries, expected 2^{}",
                table.len(),
                vars.len()
            )));
        }
        Ok(Self { d, vars, table })
    }

    /// A uniformly random table on the given variables.
    pub fn random<R: Rng + ?Sized>(d: usize, vars: Vec<usize>, rng: &mut R) -> Result<Self> {
        let table = (0..1usize << vars.len().min(usize::BITS as usize - 1))
            .map(|_| rng.random::<bool>())
            .collect();
        Self::new(d, vars, table)
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn k(&self) -> usize {
        self.vars.len()
    }

    fn index_of(&self, x: &BitInput) -> usize {
        self.vars.iter().fold(0, |acc, &v| (acc << 1) | x.get(v) as usize)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("junta serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::error::parse_json("junta", text)
    }
}

impl BooleanFunction for JuntaSpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_bit(&self, x: &BitInput) -> bool {
        self.table[self.index_of(x)]
    }
}

/// Wraps an oracle and counts every evaluation.
pub struct QueryCounter<'a> {
    f: &'a dyn BooleanFunction,
    count: AtomicU64,
}

impl<'a> QueryCounter<'a> {
    pub fn new(f: &'a dyn BooleanFunction) -> Self {
        Self {
            f,
            count: AtomicU64::new(0),
        }
    }

    pub fn query(&self, x: &BitInput) -> bool {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.f.eval_bit(x)
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }
}

/// Pair tests per round: `⌈2^k_max · ln(2^(k_max+1) / δ)⌉`.
pub fn pair_tests(k_max: usize, delta: f64) -> u64 {
    let two_k = (1u64 << k_max) as f64;
    (two_k * (2.0 * two_k / delta).ln()).ceil() as u64
}

fn ceil_log2(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as u64
    }
}

/// Worst-case learning queries of [`distill_junta`]:
/// `2t(k_max + 1) + k_max⌈log₂ d⌉ + 2^k_max` with `t` from [`pair_tests`].
pub fn query_budget(k_max: usize, delta: f64, d: usize) -> u64 {
    let t = pair_tests(k_max, delta);
    2 * t * (k_max as u64 + 1) + k_max as u64 * ceil_log2(d) + (1u64 << k_max)
}

/// Constant in [`asymptotic_query_budget`].
pub const QUERY_BUDGET_CONSTANT: f64 = 8.0;

/// `C · (2^k_max · ln(1/δ) · log₂ d + 2^k_max)` with `C = 8`.
pub fn asymptotic_query_budget(k_max: usize, delta: f64, d: usize) -> f64 {
    let two_k = (1u64 << k_max) as f64;
    QUERY_BUDGET_CONSTANT * (two_k * (1.0 / delta).ln() * (d.max(2) as f64).log2() + two_k)
}

fn validate(k_max: usize, delta: f64, d: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k_max > 20 {
        return Err(Error::invalid(format!("k_max = {k_max} is too large (limit 20)")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

fn random_input<R: Rng + ?Sized>(d: usize, rng: &mut R) -> BitInput {
    BitInput::new((0..d).map(|_| rng.random::<bool>()).collect())
}

/// Given `f(x) != f(y)`, returns a coordinate where they differ whose flip
/// changes `f` along the hybrid path from `x` to `y`.
fn isolate(oracle: &QueryCounter, x: &BitInput, y: &BitInput, fx: bool) -> usize {
    let diff: Vec<usize> = (0..x.dim()).filter(|&i| x.get(i) != y.get(i)).collect();
    let hybrid = |j: usize| -> BitInput {
        let mut z = x.clone();
        for &i in &diff[..j] {
            z.set(i, y.get(i));
        }
        z
    };
    // invariant: f(hybrid(lo)) == fx != f(hybrid(hi))
    let (mut lo, mut hi) = (0, diff.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if oracle.query(&hybrid(mid)) == fx {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    diff[lo]
}

/// Finds the relevant coordinates of a promised `k`-junta with `k <= k_max`.
/// Returns the sorted set and the number of queries spent.
pub fn find_relevant_variables<R: Rng + ?Sized>(
    f: &dyn BooleanFunction,
    k_max: usize,
    delta: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, u64)> {
    let oracle = QueryCounter::new(f);
    let vars = find_with(&oracle, k_max, delta, rng)?;
    Ok((vars, oracle.count()))
}

fn find_with<R: Rng + ?Sized>(oracle: &QueryCounter, k_max: usize, delta: f64, rng: &mut R) -> Result<Vec<usize>> {
    let d = oracle.dim();
    validate(k_max, delta, d)?;
    let t = pair_tests(k_max, delta);
    let mut relevant: Vec<usize> = Vec::new();
    'rounds: loop {
        for _ in 0..t {
            let x = random_input(d, rng);
            let mut y = random_input(d, rng);
            for &v in &relevant {
                y.set(v, x.get(v));
            }
            let fx = oracle.query(&x);
            if fx != oracle.query(&y) {
                let v = isolate(oracle, &x, &y, fx);
                relevant.push(v);
                relevant.sort_unstable();
                if relevant.len() > k_max {
                    return Err(Error::PromiseViolation(format!(
                        "found {} relevant variables, more than k_max = {k_max}",
                        relevant.len()
                    )));
                }
                continue 'rounds;
            }
        }
        return Ok(relevant);
    }
}

/// Reads the table of `f` on `vars` with every other coordinate at 0, using
/// exactly `2^|vars|` queries.
pub fn build_truth_table(f: &dyn BooleanFunction, vars: &[usize]) -> Result<JuntaSpec> {
    let oracle = QueryCounter::new(f);
    table_with(&oracle, vars)
}

fn table_with(oracle: &QueryCounter, vars: &[usize]) -> Result<JuntaSpec> {
    let d = oracle.dim();
    let k = vars.len();
    if k > 20 {
        return Err(Error::invalid(format!("{k} variables is too many for a truth table")));
    }
    let table = (0..1usize << k)
        .map(|a| {
            let mut x = BitInput::zeros(d);
            for (j, &v) in vars.iter().enumerate() {
                x.set(v, (a >> (k - 1 - j)) & 1 == 1);
            }
            oracle.query(&x)
        })
        .collect();
    JuntaSpec::new(d, vars.to_vec(), table)
}

/// The complete depth-`k` tree whose level-`j` nodes all split on the `j`-th
/// variable of the junta.
pub fn junta_to_tree(j: &JuntaSpec) -> DecisionTree {
    fn build(j: &JuntaSpec, level: usize, prefix: usize) -> Node {
        if level == j.k() {
            return Node::Leaf(j.table[prefix]);
        }
        Node::split(
            j.vars[level],
            build(j, level + 1, prefix << 1),
            build(j, level + 1, (prefix << 1) | 1),
        )
    }
    DecisionTree::new(j.d, build(j, 0, 0)).expect("junta variables are distinct and in range")
}

/// Random inputs checked after recovery.
pub const VERIFICATION_QUERIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JuntaReport {
    pub junta: JuntaSpec,
    /// Queries spent finding variables and reading the table.
    pub learning_queries: u64,
    /// Queries spent on the final agreement check.
    pub verification_queries: u64,
    /// Always 0: the procedure uses queries only.
    pub samples: u64,
    pub budget: u64,
}

/// Finds the relevant set, reads the table, then checks agreement on
/// [`VERIFICATION_QUERIES`] random inputs. Disagreement raises
/// [`Error::PromiseViolation`].
pub fn distill_junta<R: Rng + ?Sized>(
    f: &dyn BooleanFunction,
    k_max: usize,
    delta: f64,
    rng: &mut R,
) -> Result<JuntaReport> {
    let oracle = QueryCounter::new(f);
    let vars = find_with(&oracle, k_max, delta, rng)?;
    let junta = table_with(&oracle, &vars)?;
    let learning_queries = oracle.count();
    let check = QueryCounter::new(f);
    for _ in 0..VERIFICATION_QUERIES {
        let x = random_input(f.dim(), rng);
        if check.query(&x) != junta.eval_bit(&x) {
            return Err(Error::PromiseViolation(format!(
                "recovered junta on {:?} disagrees with the oracle",
                junta.vars
            )));
        }
    }
    Ok(JuntaReport {
        junta,
        learning_queries,
        verification_queries: check.count(),
        samples: 0,
        budget: query_budget(k_max, delta, f.dim()),
    })
}
