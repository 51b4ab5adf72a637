use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `{0,1}^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitInput {
    bits: Vec<bool>,
}

impl BitInput {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            bits: vec![false; d],
        }
    }

    /// Builds an input from 0/1 bytes. Any other byte value is rejected.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::invalid(format!("bit value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// The `index`-th input of `{0,1}^d` in enumeration order (bit `i` of
    /// `index` is coordinate `i`).
    pub fn from_index(index: u64, d: usize) -> Self {
        Self {
            bits: (0..d).map(|i| i < 64 && (index >> i) & 1 == 1).collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Input as 0.0/1.0 reals, the encoding fed to networks.
    pub fn to_reals(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// A literal `x_var` (positive) or `¬x_var` (negative).
///
/// Ordered by variable, then negative before positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self {
            var,
            positive: true,
        }
    }

    pub fn neg(var: usize) -> Self {
        Self {
            var,
            positive: false,
        }
    }

    #[inline]
    pub fn satisfied_by(&self, x: &BitInput) -> bool {
        x.get(self.var) == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var)
        } else {
            write!(f, "!x{}", self.var)
        }
    }
}

/// A nondegenerate conjunction of literals over `d` variables.
///
/// Literals are kept sorted by variable index so that equality and hashing
/// are canonical. The empty clause is the constant-1 function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
    d: usize,
}

impl Clause {
    pub fn empty(d: usize) -> Self {
        Self {
            literals: Vec::new(),
            d,
        }
    }

    /// Builds a clause, rejecting out-of-range variables and any variable
    /// that appears twice.
    pub fn new(d: usize, mut literals: Vec<Literal>) -> Result<Self> {
        literals.sort();
        for lit in &literals {
            if lit.var >= d {
                return Err(Error::invalid(format!(
                    "literal on x{} out of range for d = {d}",
                    lit.var
                )));
            }
        }
        if literals.windows(2).any(|w| w[0].var == w[1].var) {
            return Err(Error::invalid("clause mentions a variable twice"));
        }
        Ok(Self { literals, d })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.literals.binary_search_by(|l| l.var.cmp(&var)).is_ok()
    }

    /// Adds a literal on an unused variable.
    pub fn with(&self, lit: Literal) -> Result<Self> {
        if lit.var >= self.d {
            return Err(Error::invalid(format!("x{} out of range", lit.var)));
        }
        match self.literals.binary_search_by(|l| l.var.cmp(&lit.var)) {
            Ok(_) => Err(Error::invalid(format!("x{} already in clause", lit.var))),
            Err(pos) => {
                let mut literals = self.literals.clone();
                literals.insert(pos, lit);
                Ok(Self { literals, d: self.d })
            }
        }
    }

    /// `AND_S(x)`: true iff every literal is satisfied.
    pub fn eval(&self, x: &BitInput) -> Result<bool> {
        if x.dim() != self.d {
            return Err(Error::invalid(format!(
                "input has dimension {}, clause expects {}",
                x.dim(),
                self.d
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &BitInput) -> bool {
        self.literals.iter().all(|l| l.satisfied_by(x))
    }

    /// All one-literal extensions by a variable not yet in the clause, in
    /// canonical order (by variable, negative first).
    pub fn successors(&self) -> Vec<Clause> {
        let mut out = Vec::with_capacity(2 * (self.d - self.len()));
        for var in 0..self.d {
            if self.mentions(var) {
                continue;
            }
            for lit in [Literal::neg(var), Literal::pos(var)] {
                let pos = self.literals.partition_point(|l| l.var < var);
                let mut literals = self.literals.clone();
                literals.insert(pos, lit);
                out.push(Clause { literals, d: self.d });
            }
        }
        out
    }
}

impl PartialOrd for Clause {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic over the sorted literal lists (a prefix sorts first).
impl Ord for Clause {
    fn cmp(&self, other: &Self) -> Ordering {
        self.literals
            .cmp(&other.literals)
            .then(self.d.cmp(&other.d))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("TRUE");
        }
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str("&")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// `AND_S(x)` with a dimension check.
pub fn eval_and(clause: &Clause, x: &BitInput) -> Result<bool> {
    clause.eval(x)
}

/// `Σ_{i=0}^{r} 2^i C(d, i)`: the number of nondegenerate clauses with at most
/// `r` literals, i.e. what a brute-force search would have to probe.
pub fn total_possible_probes(d: usize, r: usize) -> Result<BigUint> {
    if r > d {
        return Err(Error::invalid(format!("depth {r} exceeds dimension {d}")));
    }
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for i in 0..=r {
        if i > 0 {
            binom = binom * BigUint::from(d - i + 1) / BigUint::from(i);
        }
        total += &binom << i;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_with(d: usize, ones: &[usize]) -> BitInput {
        let mut x = BitInput::zeros(d);
        for &i in ones {
            x.set(i, true);
        }
        x
    }

    #[test]
    fn empty_clause_is_true() {
        let c = Clause::empty(5);
        assert!(eval_and(&c, &BitInput::zeros(5)).unwrap());
        assert!(eval_and(&c, &x_with(5, &[0, 1, 2, 3, 4])).unwrap());
    }

    #[test]
    fn mixed_polarity_clause() {
        let c = Clause::new(100, vec![Literal::pos(70), Literal::neg(24)]).unwrap();
        assert!(eval_and(&c, &x_with(100, &[70])).unwrap());
        assert!(!eval_and(&c, &x_with(100, &[24, 70])).unwrap());
        assert_eq!(c.to_string(), "!x24&x70");
    }

    #[test]
    fn single_literal_on_zeros() {
        let c = Clause::new(4, vec![Literal::pos(1)]).unwrap();
        assert!(!eval_and(&c, &BitInput::zeros(4)).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let c = Clause::empty(3);
        assert!(matches!(
            eval_and(&c, &BitInput::zeros(4)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn degenerate_clause_rejected() {
        assert!(Clause::new(4, vec![Literal::pos(1), Literal::neg(1)]).is_err());
        assert!(Clause::new(4, vec![Literal::pos(4)]).is_err());
    }

    #[test]
    fn successors_of_empty_are_all_one_clauses() {
        let s = Clause::empty(100).successors();
        assert_eq!(s.len(), 200);
        assert!(s.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn successors_of_negated_first_variable() {
        let s = Clause::new(3, vec![Literal::neg(0)]).unwrap().successors();
        let expected: Vec<Clause> = [
            Literal::neg(1),
            Literal::pos(1),
            Literal::neg(2),
            Literal::pos(2),
        ]
        .into_iter()
        .map(|l| Clause::new(3, vec![Literal::neg(0), l]).unwrap())
        .collect();
        assert_eq!(s, expected);
    }

    #[test]
    fn full_clause_has_no_successors() {
        let c = Clause::new(2, vec![Literal::pos(0), Literal::neg(1)]).unwrap();
        assert!(c.successors().is_empty());
    }

    #[test]
    fn probe_totals() {
        assert_eq!(total_possible_probes(100, 2).unwrap(), BigUint::from(20001u32));
        assert_eq!(total_possible_probes(100, 3).unwrap(), BigUint::from(1313601u32));
        assert_eq!(total_possible_probes(17, 0).unwrap(), BigUint::from(1u32));
        assert!(total_possible_probes(3, 4).is_err());
        // wide enough for the documented range
        let big = total_possible_probes(1000, 16).unwrap();
        assert!(big.bits() > 128);
    }

    #[test]
    fn clause_order_is_lexicographic() {
        let a = Clause::new(5, vec![Literal::neg(0)]).unwrap();
        let b = Clause::new(5, vec![Literal::pos(0)]).unwrap();
        let c = Clause::new(5, vec![Literal::neg(0), Literal::pos(3)]).unwrap();
        assert!(Clause::empty(5) < a);
        assert!(a < c && c < b);
    }
}
