use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boolcore::{BitInput, BooleanFunction, DecisionTree, DistributionSampler};
use crate::error::{Error, Result};
use crate::juntadistill::JuntaSpec;
use crate::rng_from_seed;

/// A labeling function a dataset can be generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Tree(DecisionTree),
    Junta(JuntaSpec),
}

impl Target {
    pub fn as_function(&self) -> &dyn BooleanFunction {
        match self {
            Target::Tree(t) => t,
            Target::Junta(j) => j,
        }
    }

    pub fn dim(&self) -> usize {
        self.as_function().dim()
    }
}

/// Where a dataset came from; enough to regenerate it bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub target: Target,
    pub seed: u64,
    /// `"uniform"` or `"empirical"`.
    pub distribution: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    inputs: Vec<BitInput>,
    labels: Vec<bool>,
    provenance: Option<Provenance>,
}

impl LabeledDataset {
    pub fn new(inputs: Vec<BitInput>, labels: Vec<bool>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(first) = inputs.first() {
            if inputs.iter().any(|x| x.dim() != first.dim()) {
                return Err(Error::invalid("inputs have mixed dimensions"));
            }
        }
        Ok(Self {
            inputs,
            labels,
            provenance: None,
        })
    }

    pub fn inputs(&self) -> &[BitInput] {
        &self.inputs
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, BitInput::dim)
    }

    /// Writes `x0,...,x{d-1},label` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (x, &y) in self.inputs.iter().zip(&self.labels) {
            let row: Vec<&str> = x
                .bits()
                .iter()
                .chain(std::iter::once(&y))
                .map(|&b| if b { "1" } else { "0" })
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().last() != Some("label") {
            return Err(Error::invalid("dataset CSV must end with a `label` column"));
        }
        let d = headers.len() - 1;
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let bytes = record
                .iter()
                .map(|f| f.trim().parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("row {}: {e}", row + 1)))?;
            if bytes.len() != d + 1 {
                return Err(Error::invalid(format!("row {} has {} fields", row + 1, bytes.len())));
            }
            let all = BitInput::from_bytes(&bytes)?;
            labels.push(all.get(d));
            inputs.push(BitInput::new(all.bits()[..d].to_vec()));
        }
        Self::new(inputs, labels)
    }
}

/// `n` i.i.d. draws from `dist`, labeled by `target`. The same seed always
/// yields the same dataset.
pub fn gen_dataset(
    target: &Target,
    n: usize,
    dist: &DistributionSampler,
    seed: u64,
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    if target.dim() != dist.dim() {
        return Err(Error::invalid(format!(
            "target has dimension {}, distribution {}",
            target.dim(),
            dist.dim()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let inputs = dist.draw(n, &mut rng);
    let labels = target.as_function().eval_many(&inputs);
    Ok(LabeledDataset {
        inputs,
        labels,
        provenance: Some(Provenance {
            target: target.clone(),
            seed,
            distribution: if dist.is_uniform() { "uniform" } else { "empirical" }.into(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolcore::{Clause, Literal};

    fn dictator_tree(d: usize) -> DecisionTree {
        use crate::boolcore::Node;
        DecisionTree::new(d, Node::split(0, Node::Leaf(false), Node::Leaf(true))).unwrap()
    }

    #[test]
    fn empty_dataset_rejected() {
        let t = Target::Tree(dictator_tree(3));
        assert!(gen_dataset(&t, 0, &DistributionSampler::uniform(3), 0).is_err());
    }

    #[test]
    fn labels_reproducible_from_provenance() {
        let t = Target::Tree(dictator_tree(5));
        let data = gen_dataset(&t, 200, &DistributionSampler::uniform(5), 42).unwrap();
        let p = data.provenance().unwrap();
        let again = gen_dataset(&p.target, 200, &DistributionSampler::uniform(5), p.seed).unwrap();
        assert_eq!(again, data);
        let relabeled = p.target.as_function().eval_many(data.inputs());
        assert_eq!(relabeled, data.labels());
    }

    #[test]
    fn label_mean_of_single_variable_and() {
        // AND_{x0} on d = 1 is a fair coin under the uniform distribution
        let and = Clause::new(1, vec![Literal::pos(0)]).unwrap();
        let n = 20_000;
        let data = gen_dataset(&Target::Tree(dictator_tree(1)), n, &DistributionSampler::uniform(1), 8).unwrap();
        let ones = data.inputs().iter().filter(|x| and.eval(x).unwrap()).count() as f64;
        let mean = ones / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * sigma, "mean {mean}");
        assert_eq!(data.labels().iter().filter(|&&y| y).count() as f64, ones);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let data = gen_dataset(&Target::Tree(dictator_tree(4)), 37, &DistributionSampler::uniform(4), 3).unwrap();
        data.write_csv(&path).unwrap();
        let back = LabeledDataset::read_csv(&path).unwrap();
        assert_eq!(back.inputs(), data.inputs());
        assert_eq!(back.labels(), data.labels());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x0,x1,x2,x3,label\n"));
    }
}
