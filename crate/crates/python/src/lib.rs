//! Python bindings: trees, juntas, trained models, both distillers and the
//! statistics routines.

use std::str::FromStr;
use std::sync::Arc;

use pacdist::boolcore::{
    exact_disagreement_uniform, random_tree, total_possible_probes, BitInput, BooleanFunction, DecisionTree,
    DistributionSampler,
};
use pacdist::experiment::{run_suite as run_suite_core, SuiteName};
use pacdist::juntadistill::{distill_junta as distill_junta_core, junta_to_tree, JuntaSpec};
use pacdist::nnmodel::{gen_dataset, train, PlantedIndicators, RepresentationOracle, ResidualMLP, Target, TrainConfig};
use pacdist::probe::ProbeMode;
use pacdist::rng_from_seed;
use pacdist::statlab::{pareto_frontier as pareto_frontier_core, vc_dimension as vc_dimension_core, vcdim_pf as vcdim_pf_core, FiniteClass};
use pacdist::treedistill::{distill_tree as distill_tree_core, DistillConfig, SearchConfig};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: pacdist::Error) -> PyErr {
    match err {
        pacdist::Error::InvalidArgument(_) | pacdist::Error::Parse { .. } => PyValueError::new_err(err.to_string()),
        pacdist::Error::Io(_) | pacdist::Error::Csv(_) => PyIOError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn input(f: &dyn BooleanFunction, bits: Vec<bool>) -> PyResult<BitInput> {
    if bits.len() != f.dim() {
        return Err(PyValueError::new_err(format!("expected {} bits, got {}", f.dim(), bits.len())));
    }
    Ok(BitInput::new(bits))
}

#[pyclass(name = "Tree", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTree(DecisionTree);

#[pymethods]
impl PyTree {
    /// Full tree of the given depth with random split variables and labels.
    #[staticmethod]
    fn random(d: usize, depth: usize, seed: u64) -> PyResult<Self> {
        random_tree(d, depth, &mut rng_from_seed(seed)).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        DecisionTree::from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn __call__(&self, bits: Vec<bool>) -> PyResult<bool> {
        Ok(self.0.eval_bit(&input(&self.0, bits)?))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Tree(d={}, size={}, depth={})", self.0.dim(), self.0.size(), self.0.depth())
    }
}

#[pyclass(name = "Junta", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyJunta(JuntaSpec);

#[pymethods]
impl PyJunta {
    /// `table` is indexed MSB-first in the order of `vars`.
    #[new]
    fn new(d: usize, vars: Vec<usize>, table: Vec<bool>) -> PyResult<Self> {
        JuntaSpec::new(d, vars, table).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn random(d: usize, vars: Vec<usize>, seed: u64) -> PyResult<Self> {
        JuntaSpec::random(d, vars, &mut rng_from_seed(seed)).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        JuntaSpec::from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn vars(&self) -> Vec<usize> {
        self.0.vars().to_vec()
    }

    #[getter]
    fn table(&self) -> Vec<bool> {
        self.0.table().to_vec()
    }

    fn to_tree(&self) -> PyTree {
        PyTree(junta_to_tree(&self.0))
    }

    fn __call__(&self, bits: Vec<bool>) -> PyResult<bool> {
        Ok(self.0.eval_bit(&input(&self.0, bits)?))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Junta(d={}, vars={:?})", self.0.dim(), self.0.vars())
    }
}

#[pyclass(name = "Model", frozen)]
struct PyModel(Arc<ResidualMLP>);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ResidualMLP::from_json(text).map(|m| Self(Arc::new(m))).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __call__(&self, bits: Vec<bool>) -> PyResult<bool> {
        Ok(self.0.eval_bit(&input(self.0.as_ref(), bits)?))
    }
}

enum Source {
    Tree(DecisionTree),
    Junta(JuntaSpec),
    Model(Arc<ResidualMLP>),
}

impl Source {
    fn extract(obj: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(t) = obj.cast::<PyTree>() {
            return Ok(Source::Tree(t.get().0.clone()));
        }
        if let Ok(j) = obj.cast::<PyJunta>() {
            return Ok(Source::Junta(j.get().0.clone()));
        }
        if let Ok(m) = obj.cast::<PyModel>() {
            return Ok(Source::Model(m.get().0.clone()));
        }
        Err(PyValueError::new_err("expected a Tree, Junta or Model"))
    }

    fn function(&self) -> &dyn BooleanFunction {
        match self {
            Source::Tree(t) => t,
            Source::Junta(j) => j,
            Source::Model(m) => m.as_ref(),
        }
    }
}

/// Trains a network on uniform samples labeled by `target`. Returns the model
/// and its training accuracy.
#[pyfunction]
#[pyo3(signature = (target, n_samples, seed=0, layers=5, width=128, epochs=10, learning_rate=1e-3))]
fn train_model(
    target: &Bound<'_, PyAny>,
    n_samples: usize,
    seed: u64,
    layers: usize,
    width: usize,
    epochs: usize,
    learning_rate: f64,
) -> PyResult<(PyModel, f64)> {
    let target = match Source::extract(target)? {
        Source::Tree(t) => Target::Tree(t),
        Source::Junta(j) => Target::Junta(j),
        Source::Model(_) => return Err(PyValueError::new_err("the target must be a Tree or Junta")),
    };
    let dist = DistributionSampler::uniform(target.dim());
    let data = gen_dataset(&target, n_samples, &dist, seed).map_err(to_py)?;
    let cfg = TrainConfig {
        layers,
        width,
        epochs,
        learning_rate,
        seed,
        ..TrainConfig::default()
    };
    let (model, report) = train(&data, &cfg).map_err(to_py)?;
    Ok((PyModel(Arc::new(model)), report.train_accuracy))
}

/// Distills a model or tree into a decision tree of depth `<= depth` and size
/// `<= size`. Trees are probed through their own clause indicators. Returns
/// the tree and the run report as JSON.
#[pyfunction]
#[pyo3(signature = (source, depth, size, mode="empirical", k=100, tau=10.0, eps=0.1, delta=0.1, leaf_samples=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn distill_tree(
    source: &Bound<'_, PyAny>,
    depth: usize,
    size: usize,
    mode: &str,
    k: usize,
    tau: f64,
    eps: f64,
    delta: f64,
    leaf_samples: Option<usize>,
    seed: u64,
) -> PyResult<(PyTree, String)> {
    let mode = match mode {
        "empirical" => ProbeMode::Empirical,
        "theoretical" => ProbeMode::Theoretical,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let source = Source::extract(source)?;
    let phi = match &source {
        Source::Model(m) => RepresentationOracle::estimated(m.clone(), seed),
        Source::Tree(t) => {
            let planted = PlantedIndicators::new(t.dim(), t.intermediate_computations().into_iter().collect(), 1.0, 0)
                .map_err(to_py)?;
            let bound = planted.norm_upper_bound();
            RepresentationOracle::with_bound(Arc::new(planted), bound).map_err(to_py)?
        }
        Source::Junta(_) => return Err(PyValueError::new_err("use distill_junta for junta sources")),
    };
    let cfg = DistillConfig {
        r: depth,
        s: size,
        depth_budget: Some(depth),
        eps,
        delta,
        leaf_samples,
        search: SearchConfig {
            mode,
            k,
            tau,
            delta,
            ..SearchConfig::default()
        },
    };
    let f = source.function();
    let dist = DistributionSampler::uniform(f.dim());
    let (tree, report) = distill_tree_core(f, &phi, &dist, &cfg, &mut rng_from_seed(seed)).map_err(to_py)?;
    let report = serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((PyTree(tree), report))
}

/// Recovers a junta on at most `k_max` variables from queries alone. Returns
/// the junta and the number of queries spent.
#[pyfunction]
#[pyo3(signature = (source, k_max, delta=0.01, seed=0))]
fn distill_junta(source: &Bound<'_, PyAny>, k_max: usize, delta: f64, seed: u64) -> PyResult<(PyJunta, u64)> {
    let source = Source::extract(source)?;
    let report = distill_junta_core(source.function(), k_max, delta, &mut rng_from_seed(seed)).map_err(to_py)?;
    Ok((PyJunta(report.junta), report.learning_queries + report.verification_queries))
}

/// Fraction of `{0,1}^d` on which the two functions disagree.
#[pyfunction]
fn disagreement(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<f64> {
    let (a, b) = (Source::extract(a)?, Source::extract(b)?);
    let d = a.function().dim();
    exact_disagreement_uniform(a.function(), b.function(), d).map_err(to_py)
}

/// `Σ_{i<=r} 2^i C(d, i)`.
#[pyfunction]
fn total_probes(d: usize, r: usize) -> PyResult<u128> {
    let total = total_possible_probes(d, r).map_err(to_py)?;
    u128::from_str(&total.to_string()).map_err(|_| PyValueError::new_err("total exceeds 128 bits"))
}

fn class_of(rows: Vec<Vec<bool>>) -> PyResult<FiniteClass> {
    let n = rows.first().map_or(0, Vec::len);
    FiniteClass::from_rows("class", n, rows).map_err(to_py)
}

/// VC dimension of the class whose functions are the given truth rows.
#[pyfunction]
fn vc_dimension(rows: Vec<Vec<bool>>) -> PyResult<usize> {
    vc_dimension_core(&class_of(rows)?).map_err(to_py)
}

/// Rows not dominated by another row with strictly fewer ones.
#[pyfunction]
fn pareto_frontier(rows: Vec<Vec<bool>>) -> PyResult<Vec<Vec<bool>>> {
    Ok(pareto_frontier_core(&class_of(rows)?).functions().to_vec())
}

#[pyfunction]
fn vcdim_pf(f_rows: Vec<Vec<bool>>, g_rows: Vec<Vec<bool>>) -> PyResult<usize> {
    vcdim_pf_core(&class_of(f_rows)?, &class_of(g_rows)?).map_err(to_py)
}

/// Runs a named check suite and returns its report as JSON.
#[pyfunction]
#[pyo3(signature = (name, seed=0))]
fn run_suite(py: Python<'_>, name: &str, seed: u64) -> PyResult<String> {
    let name = SuiteName::from_str(name).map_err(to_py)?;
    let report = py.detach(|| run_suite_core(name, seed)).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn pacdist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyJunta>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train_model, m)?)?;
    m.add_function(wrap_pyfunction!(distill_tree, m)?)?;
    m.add_function(wrap_pyfunction!(distill_junta, m)?)?;
    m.add_function(wrap_pyfunction!(disagreement, m)?)?;
    m.add_function(wrap_pyfunction!(total_probes, m)?)?;
    m.add_function(wrap_pyfunction!(vc_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_frontier, m)?)?;
    m.add_function(wrap_pyfunction!(vcdim_pf, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
