use std::path::Path;

use rand::Rng;

use super::clause::{BitInput, Clause};
use super::tree::DecisionTree;
use crate::error::{Error, Result};

/// Anything computing `{0,1}^d -> {0,1}`.
pub trait BooleanFunction: Sync {
    fn dim(&self) -> usize;

    fn eval_bit(&self, x: &BitInput) -> bool;

    /// Batch evaluation; models with vectorized forward passes override this.
    fn eval_many(&self, xs: &[BitInput]) -> Vec<bool> {
        xs.iter().map(|x| self.eval_bit(x)).collect()
    }
}

impl BooleanFunction for DecisionTree {
    fn dim(&self) -> usize {
        DecisionTree::dim(self)
    }

    fn eval_bit(&self, x: &BitInput) -> bool {
        self.eval_unchecked(x)
    }
}

impl BooleanFunction for Clause {
    fn dim(&self) -> usize {
        Clause::dim(self)
    }

    fn eval_bit(&self, x: &BitInput) -> bool {
        self.eval_unchecked(x)
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_bit(&self, x: &BitInput) -> bool {
        (**self).eval_bit(x)
    }

    fn eval_many(&self, xs: &[BitInput]) -> Vec<bool> {
        (**self).eval_many(xs)
    }
}

/// Adapts a closure into a [`BooleanFunction`].
pub struct FnBool<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&BitInput) -> bool + Sync> FnBool<F> {
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f }
    }
}

impl<F: Fn(&BitInput) -> bool + Sync> BooleanFunction for FnBool<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_bit(&self, x: &BitInput) -> bool {
        (self.f)(x)
    }
}

/// Source of i.i.d. inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSampler {
    Uniform { d: usize },
    /// Uniform over a fixed list of inputs (with replacement).
    Empirical { inputs: Vec<BitInput> },
}

impl DistributionSampler {
    pub fn uniform(d: usize) -> Self {
        DistributionSampler::Uniform { d }
    }

    pub fn empirical(inputs: Vec<BitInput>) -> Result<Self> {
        let Some(first) = inputs.first() else {
            return Err(Error::invalid("empirical distribution needs at least one input"));
        };
        let d = first.dim();
        if inputs.iter().any(|x| x.dim() != d) {
            return Err(Error::invalid("empirical inputs have mixed dimensions"));
        }
        Ok(DistributionSampler::Empirical { inputs })
    }

    /// Reads a CSV of 0/1 columns with a header row. A trailing column named
    /// `label` is ignored, so dataset files can be reused directly.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let width = match headers.iter().last() {
            Some("label") => headers.len() - 1,
            _ => headers.len(),
        };
        let mut inputs = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let bytes = record
                .iter()
                .take(width)
                .map(|f| f.trim().parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("row {}: {e}", row + 1)))?;
            inputs.push(BitInput::from_bytes(&bytes)?);
        }
        Self::empirical(inputs)
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSampler::Uniform { d } => *d,
            DistributionSampler::Empirical { inputs } => inputs[0].dim(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, DistributionSampler::Uniform { .. })
    }

    pub fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> BitInput {
        match self {
            DistributionSampler::Uniform { d } => {
                let mut bits = Vec::with_capacity(*d);
                while bits.len() < *d {
                    let word: u64 = rng.random();
                    let take = (*d - bits.len()).min(64);
                    bits.extend((0..take).map(|i| (word >> i) & 1 == 1));
                }
                BitInput::new(bits)
            }
            DistributionSampler::Empirical { inputs } => {
                inputs[rng.random_range(0..inputs.len())].clone()
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<BitInput> {
        (0..count).map(|_| self.draw_one(rng)).collect()
    }
}

/// A bit mask over sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMask {
    words: Vec<u64>,
    n: usize,
}

impl SampleMask {
    pub fn from_bools(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self {
            words,
            n: bits.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Popcount of `self & other`.
    pub fn count_and(&self, other: &SampleMask) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }
}

/// Column-major bit storage for a sample set: one bitset per variable, so
/// that `AND_S` over all samples costs `|S|` word-wise ANDs.
#[derive(Debug, Clone)]
pub struct SampleBits {
    d: usize,
    n: usize,
    columns: Vec<Vec<u64>>,
}

impl SampleBits {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            n: 0,
            columns: vec![Vec::new(); d],
        }
    }

    pub fn from_inputs(xs: &[BitInput]) -> Self {
        let d = xs.first().map_or(0, BitInput::dim);
        let mut out = Self::new(d);
        for x in xs {
            out.push(x);
        }
        out
    }

    pub fn push(&mut self, x: &BitInput) {
        debug_assert_eq!(x.dim(), self.d);
        let (word, bit) = (self.n / 64, self.n % 64);
        for (j, col) in self.columns.iter_mut().enumerate() {
            if bit == 0 {
                col.push(0);
            }
            if x.get(j) {
                col[word] |= 1 << bit;
            }
        }
        self.n += 1;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `AND_S` evaluated on every stored sample.
    pub fn clause_mask(&self, clause: &Clause) -> SampleMask {
        let nwords = self.n.div_ceil(64);
        let mut words = vec![u64::MAX; nwords];
        if let Some(last) = words.last_mut() {
            if self.n % 64 != 0 {
                *last = (1u64 << (self.n % 64)) - 1;
            }
        }
        for lit in clause.literals() {
            let col = &self.columns[lit.var];
            if lit.positive {
                words.iter_mut().zip(col).for_each(|(w, c)| *w &= c);
            } else {
                words.iter_mut().zip(col).for_each(|(w, c)| *w &= !c);
            }
        }
        SampleMask { words, n: self.n }
    }
}

fn check_dims(f: &dyn BooleanFunction, g: &dyn BooleanFunction, d: usize) -> Result<()> {
    if f.dim() != d || g.dim() != d {
        return Err(Error::invalid(format!(
            "dimensions differ: f has {}, g has {}, distribution has {d}",
            f.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of `P_{x~D}[f(x) != g(x)]` from `n` fresh draws.
pub fn disagreement<R: Rng + ?Sized>(
    f: &dyn BooleanFunction,
    g: &dyn BooleanFunction,
    dist: &DistributionSampler,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("disagreement needs n >= 1"));
    }
    check_dims(f, g, dist.dim())?;
    let xs = dist.draw(n, rng);
    let a = f.eval_many(&xs);
    let b = g.eval_many(&xs);
    let differ = a.iter().zip(&b).filter(|(p, q)| p != q).count();
    Ok(differ as f64 / n as f64)
}

/// Largest dimension accepted by exhaustive enumeration.
pub const MAX_ENUMERATION_DIM: usize = 24;

/// All of `{0,1}^d` in enumeration order.
pub fn enumerate_inputs(d: usize) -> Result<Vec<BitInput>> {
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::BudgetExceeded(format!(
            "enumerating 2^{d} inputs (limit 2^{MAX_ENUMERATION_DIM})"
        )));
    }
    Ok((0..1u64 << d).map(|i| BitInput::from_index(i, d)).collect())
}

/// Exact `P_{x~Unif{0,1}^d}[f(x) != g(x)]` by enumeration.
pub fn exact_disagreement_uniform(
    f: &dyn BooleanFunction,
    g: &dyn BooleanFunction,
    d: usize,
) -> Result<f64> {
    check_dims(f, g, d)?;
    let xs = enumerate_inputs(d)?;
    let a = f.eval_many(&xs);
    let b = g.eval_many(&xs);
    let differ = a.iter().zip(&b).filter(|(p, q)| p != q).count();
    Ok(differ as f64 / xs.len() as f64)
}
