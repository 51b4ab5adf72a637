use std::path::Path;

use crate::error::{Error, Result};

/// Largest input set [`vc_dimension`] will enumerate.
pub const MAX_VC_INPUTS: usize = 24;

/// A finite set of `{0,1}`-valued functions on a finite input set, one row
/// per function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteClass {
    name: String,
    inputs: Vec<String>,
    functions: Vec<Vec<bool>>,
}

impl FiniteClass {
    pub fn new(name: impl Into<String>, inputs: Vec<String>, functions: Vec<Vec<bool>>) -> Result<Self> {
        let n = inputs.len();
        if let Some(bad) = functions.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "function {bad} has {} values, expected {n}",
                functions[bad].len()
            )));
        }
        Ok(Self {
            name: name.into(),
            inputs,
            functions,
        })
    }

    /// Inputs named `0..n`.
    pub fn from_rows(name: impl Into<String>, n: usize, functions: Vec<Vec<bool>>) -> Result<Self> {
        Self::new(name, (0..n).map(|i| i.to_string()).collect(), functions)
    }

    /// All `2^n` functions on `n` points.
    pub fn all_functions(n: usize) -> Result<Self> {
        if n > 20 {
            return Err(Error::invalid(format!("2^{n} functions is too many")));
        }
        let rows = (0..1u64 << n).map(|m| (0..n).map(|i| (m >> i) & 1 == 1).collect()).collect();
        Self::from_rows(format!("all-{n}"), n, rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn functions(&self) -> &[Vec<bool>] {
        &self.functions
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Duplicate rows removed, first appearance kept.
    pub fn canonical(&self) -> Self {
        let mut seen = std::collections::HashSet::new();
        let functions = self.functions.iter().filter(|r| seen.insert(*r)).cloned().collect();
        Self {
            name: self.name.clone(),
            inputs: self.inputs.clone(),
            functions,
        }
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let inputs: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut functions = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let bits = record
                .iter()
                .map(|v| match v.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::invalid(format!("row {}: value {other:?} is not 0 or 1", row + 1))),
                })
                .collect::<Result<Vec<_>>>()?;
            functions.push(bits);
        }
        let name = path.file_stem().map_or("class".into(), |s| s.to_string_lossy().into_owned());
        Self::new(name, inputs, functions)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.inputs)?;
        for row in &self.functions {
            w.write_record(row.iter().map(|&b| if b { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn row_mask(row: &[bool]) -> u32 {
    row.iter().enumerate().fold(0, |m, (i, &b)| m | ((b as u32) << i))
}

/// Restriction of `row` to the points in `subset`, packed into the low bits.
fn project(row: u32, subset: u32) -> u32 {
    let mut out = 0;
    let mut bit = 0;
    let mut s = subset;
    while s != 0 {
        let i = s.trailing_zeros();
        out |= ((row >> i) & 1) << bit;
        bit += 1;
        s &= s - 1;
    }
    out
}

/// Next larger integer with the same popcount.
fn next_combination(v: u32) -> Option<u32> {
    let t = v | (v.wrapping_sub(1));
    let w = (t.checked_add(1)?) | (((!t & (!t).wrapping_neg()) - 1) >> (v.trailing_zeros() + 1));
    Some(w)
}

/// Size of the largest shattered subset of inputs.
///
/// Subsets are tried by increasing size. Shattering is hereditary, so the
/// first size with no shattered subset ends the search, as does the
/// cardinality cutoff `|C| < 2^t`.
pub fn vc_dimension(c: &FiniteClass) -> Result<usize> {
    let n = c.n_inputs();
    if n > MAX_VC_INPUTS {
        return Err(Error::BudgetExceeded(format!(
            "VC dimension enumerates subsets of at most {MAX_VC_INPUTS} inputs, class has {n}"
        )));
    }
    let rows: Vec<u32> = {
        let mut r: Vec<u32> = c.functions().iter().map(|r| row_mask(r)).collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    if rows.is_empty() {
        return Ok(0);
    }
    let mut best = 0;
    for t in 1..=n {
        if rows.len() < 1 << t {
            break;
        }
        let limit = 1u32 << n;
        let mut subset = (1u32 << t) - 1;
        let mut seen = vec![false; 1 << t];
        let mut found = false;
        while subset < limit {
            seen.iter_mut().for_each(|s| *s = false);
            let mut distinct = 0;
            for &r in &rows {
                let p = project(r, subset) as usize;
                if !seen[p] {
                    seen[p] = true;
                    distinct += 1;
                    if distinct == 1 << t {
                        break;
                    }
                }
            }
            if distinct == 1 << t {
                found = true;
                break;
            }
            match next_combination(subset) {
                Some(s) => subset = s,
                None => break,
            }
        }
        if !found {
            break;
        }
        best = t;
    }
    Ok(best)
}

/// `f ⊕ G`: each row becomes the indicator of disagreement with `f`.
pub fn xor_class(f: &[bool], g: &FiniteClass) -> Result<FiniteClass> {
    if f.len() != g.n_inputs() {
        return Err(Error::invalid(format!(
            "function has {} values, class has {} inputs",
            f.len(),
            g.n_inputs()
        )));
    }
    let rows = g
        .functions()
        .iter()
        .map(|row| row.iter().zip(f).map(|(a, b)| a != b).collect())
        .collect();
    FiniteClass::new(format!("f^{}", g.name()), g.inputs().to_vec(), rows)
}

/// Rows `g` with no distinct `g'` in the class whose zeros include the
/// zeros of `g`. Duplicates are removed; output keeps first-appearance
/// order.
pub fn pareto_frontier(c: &FiniteClass) -> FiniteClass {
    let canon = c.canonical();
    let ones: Vec<Vec<usize>> = canon
        .functions()
        .iter()
        .map(|r| r.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
        .collect();
    let mut order: Vec<usize> = (0..canon.len()).collect();
    order.sort_by_key(|&i| ones[i].len());
    // a dominating row has strictly fewer ones; some frontier row lies below
    // any dominated row, so checking against the frontier suffices
    let mut frontier: Vec<usize> = Vec::new();
    for &i in &order {
        let row = &canon.functions()[i];
        let dominated = frontier
            .iter()
            .any(|&j| ones[j].len() < ones[i].len() && ones[j].iter().all(|&x| row[x]));
        if !dominated {
            frontier.push(i);
        }
    }
    frontier.sort_unstable();
    FiniteClass {
        name: format!("PF({})", c.name()),
        inputs: c.inputs().to_vec(),
        functions: frontier.into_iter().map(|i| canon.functions()[i].clone()).collect(),
    }
}

/// `max_{f ∈ F} VCdim(PF(f ⊕ G))`.
pub fn vcdim_pf(f: &FiniteClass, g: &FiniteClass) -> Result<usize> {
    f.functions()
        .iter()
        .map(|row| vc_dimension(&pareto_frontier(&xor_class(row, g)?)))
        .try_fold(0, |acc, v| v.map(|v| acc.max(v)))
}

/// The truncation to `{1,2,3} × {1..N}` of the class
/// `{g_{S,{j},∅} : S ≠ ∅, j} ∪ {g_{∅,∅,{j}} : j}`, where `g_{S,T,U}` is 1 on
/// `(1,i)` for `i ∈ S`, on `(2,i)` for `i ∈ T` and on `(3,i)` for `i ∈ U`.
pub fn triple_indicator_class(n: usize) -> Result<FiniteClass> {
    if n == 0 || n > 12 {
        return Err(Error::invalid(format!("truncation N = {n} must be in 1..=12")));
    }
    let inputs = (1..=3).flat_map(|b| (1..=n).map(move |i| format!("({b},{i})"))).collect();
    let point = |block: usize, i: usize| (block - 1) * n + (i - 1);
    let mut rows = Vec::new();
    for s in 1u32..(1 << n) {
        for j in 1..=n {
            let mut row = vec![false; 3 * n];
            for i in 1..=n {
                if (s >> (i - 1)) & 1 == 1 {
                    row[point(1, i)] = true;
                }
            }
            row[point(2, j)] = true;
            rows.push(row);
        }
    }
    for j in 1..=n {
        let mut row = vec![false; 3 * n];
        row[point(3, j)] = true;
        rows.push(row);
    }
    FiniteClass::new(format!("triple-indicator-{n}"), inputs, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use rand::Rng;

    fn dominated_by(g: &[bool], h: &[bool]) -> bool {
        g != h && g.iter().zip(h).all(|(&a, &b)| a || !b)
    }

    #[test]
    fn vc_of_small_classes() {
        for m in 1..=4 {
            assert_eq!(vc_dimension(&FiniteClass::all_functions(m).unwrap()).unwrap(), m);
        }
        let single = FiniteClass::from_rows("one", 3, vec![vec![true, false, true]]).unwrap();
        assert_eq!(vc_dimension(&single).unwrap(), 0);
        // g_i(x) = 1(x > i) on {1..8}, i = 0..8
        let thresholds = (0..=8).map(|i| (1..=8).map(|x| x > i).collect()).collect();
        let c = FiniteClass::from_rows("thr", 8, thresholds).unwrap();
        assert_eq!(vc_dimension(&c).unwrap(), 1);
        let big = FiniteClass::from_rows("big", 25, vec![vec![false; 25]]).unwrap();
        assert!(matches!(vc_dimension(&big), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn vc_matches_naive_enumeration() {
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let n = rng.random_range(1..=6);
            let rows = (0..rng.random_range(1..=20))
                .map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect())
                .collect();
            let c = FiniteClass::from_rows("r", n, rows).unwrap();
            let mut naive = 0;
            for subset in 0u32..(1 << n) {
                let patterns: std::collections::HashSet<Vec<bool>> = c
                    .functions()
                    .iter()
                    .map(|r| (0..n).filter(|&i| (subset >> i) & 1 == 1).map(|i| r[i]).collect())
                    .collect();
                if patterns.len() == 1 << subset.count_ones() {
                    naive = naive.max(subset.count_ones() as usize);
                }
            }
            assert_eq!(vc_dimension(&c).unwrap(), naive);
        }
    }

    #[test]
    fn xor_examples() {
        let g = FiniteClass::from_rows("g", 3, vec![vec![true, false, true], vec![false, false, true]]).unwrap();
        assert_eq!(xor_class(&[false; 3], &g).unwrap().functions(), g.functions());
        let x = xor_class(&[true, false, true], &g).unwrap();
        assert_eq!(x.functions()[0], vec![false; 3]);
        let zero = FiniteClass::from_rows("z", 3, vec![vec![false; 3]]).unwrap();
        assert_eq!(xor_class(&[true; 3], &zero).unwrap().functions(), &[vec![true; 3]]);
        assert!(xor_class(&[true; 2], &zero).is_err());
    }

    #[test]
    fn frontier_matches_pairwise_oracle() {
        let mut rng = rng_from_seed(4);
        for _ in 0..200 {
            let rows: Vec<Vec<bool>> = (0..6).map(|_| (0..5).map(|_| rng.random_bool(0.5)).collect()).collect();
            let c = FiniteClass::from_rows("r", 5, rows).unwrap();
            let canon = c.canonical();
            let expected: Vec<Vec<bool>> = canon
                .functions()
                .iter()
                .filter(|g| !canon.functions().iter().any(|h| dominated_by(g, h)))
                .cloned()
                .collect();
            let pf = pareto_frontier(&c);
            assert_eq!(pf.functions(), expected.as_slice());
            assert_eq!(pareto_frontier(&pf).functions(), pf.functions());
        }
        let zero = FiniteClass::from_rows("z", 4, vec![vec![false; 4]]).unwrap();
        assert_eq!(pareto_frontier(&zero).functions(), zero.functions());
    }

    #[test]
    fn self_distillation_has_zero_vcdim_pf() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let rows = (0..5).map(|_| (0..6).map(|_| rng.random_bool(0.5)).collect()).collect();
            let c = FiniteClass::from_rows("r", 6, rows).unwrap();
            assert_eq!(vcdim_pf(&c, &c).unwrap(), 0);
        }
    }

    #[test]
    fn triple_indicator_shape() {
        let c = triple_indicator_class(3).unwrap();
        assert_eq!(c.n_inputs(), 9);
        assert_eq!(c.len(), 7 * 3 + 3);
        // the block-1 points {(1,1),(1,2),(1,3)} are not shattered because
        // S is never empty, but any two of them are
        assert_eq!(vc_dimension(&c).unwrap(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cls.csv");
        let c = FiniteClass::new("cls", vec!["a".into(), "b".into()], vec![vec![true, false], vec![false, false]]).unwrap();
        c.write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,0\n0,0\n");
        assert_eq!(FiniteClass::read_csv(&path).unwrap(), c);
    }
}
