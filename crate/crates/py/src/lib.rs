//! Python bindings: problem instances, learners, constructions, bounds and
//! experiments.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rssl_core::bench::{self, ExperimentConfig, LearnerId, Prepared, SeparationConfig};
use rssl_core::constructions::{self, Construction};
use rssl_core::dims::{self, SearchLimits};
use rssl_core::partial::{oig_predict, to_partial};
use rssl_core::{compress, io, loss, sample as sampling};
use rssl_core::{Atom, Distribution, Example, HypothesisTable, InstanceSpace, PacParams, Perturbation, ProblemInstance};

fn err(e: rssl_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json_text(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    from_json_text(py, &text)
}

/// Labels arrive as ints or bools.
fn bit(v: u8) -> PyResult<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(PyValueError::new_err(format!("label must be 0 or 1, got {v}"))),
    }
}

fn examples(pairs: Vec<(usize, u8)>) -> PyResult<Vec<Example>> {
    pairs.into_iter().map(|(x, y)| Ok(Example::new(x, bit(y)?))).collect()
}

fn labels(values: Vec<u8>) -> PyResult<Vec<bool>> {
    values.into_iter().map(bit).collect()
}

/// A finite robust learning problem.
#[pyclass(name = "Instance", module = "rssl", frozen)]
struct PyInstance {
    inner: ProblemInstance,
}

#[pymethods]
impl PyInstance {
    /// `hypotheses`: rows of 0/1 labels; `perturbation[x]`: the set U(x);
    /// `distribution`: `(x, y, p)` atoms.
    #[new]
    #[pyo3(signature = (hypotheses, perturbation, distribution, names=None))]
    fn new(
        hypotheses: Vec<Vec<u8>>,
        perturbation: Vec<Vec<usize>>,
        distribution: Vec<(usize, u8, f64)>,
        names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let n = perturbation.len();
        let space = InstanceSpace::new(n, names).map_err(err)?;
        let u = Perturbation::new(n, perturbation).map_err(err)?;
        let rows = hypotheses.into_iter().map(labels).collect::<PyResult<Vec<_>>>()?;
        let h = HypothesisTable::new(n, rows).map_err(err)?;
        let atoms = distribution
            .into_iter()
            .map(|(x, y, p)| Ok(Atom { x, y: bit(y)?, p }))
            .collect::<PyResult<Vec<_>>>()?;
        let d = Distribution::new(atoms).map_err(err)?;
        Ok(Self {
            inner: ProblemInstance::new(space, u, h, d).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::instance_from_json(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::read_instance(path).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        io::instance_to_json(&self.inner).map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_instance(path, &self.inner).map_err(err)
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn n_hypotheses(&self) -> usize {
        self.inner.hypotheses.n_rows()
    }

    #[getter]
    fn hypotheses(&self) -> Vec<Vec<bool>> {
        self.inner.hypotheses.rows().to_vec()
    }

    #[getter]
    fn perturbation(&self) -> Vec<Vec<usize>> {
        self.inner.perturbation.sets().to_vec()
    }

    #[getter]
    fn distribution(&self) -> Vec<(usize, bool, f64)> {
        self.inner.distribution.atoms().iter().map(|a| (a.x, a.y, a.p)).collect()
    }

    /// Dimension report as a dict.
    #[pyo3(signature = (override_guard=false))]
    fn dims(&self, py: Python<'_>, override_guard: bool) -> PyResult<Py<PyAny>> {
        let limits = SearchLimits {
            override_guard,
            ..SearchLimits::default()
        };
        let r = dims::dimension_report(&self.inner.hypotheses, &self.inner.perturbation, limits).map_err(err)?;
        to_py(py, &r)
    }

    /// VC dimension of the robustly self-consistent partial class.
    #[pyo3(signature = (override_guard=false))]
    fn partial_vc(&self, override_guard: bool) -> PyResult<usize> {
        let limits = SearchLimits {
            override_guard,
            ..SearchLimits::default()
        };
        let p = to_partial(&self.inner.hypotheses, &self.inner.perturbation).map_err(err)?;
        Ok(dims::partial_vc(&p, limits).map_err(err)?.size)
    }

    fn robust_risk(&self, labels: Vec<u8>) -> PyResult<f64> {
        let labels = self::labels(labels)?;
        self.check_labels(&labels)?;
        Ok(loss::robust_risk(&labels, &self.inner.perturbation, &self.inner.distribution))
    }

    fn risk(&self, labels: Vec<u8>) -> PyResult<f64> {
        let labels = self::labels(labels)?;
        self.check_labels(&labels)?;
        Ok(loss::risk(&labels, &self.inner.distribution))
    }

    fn optimal_robust_risk(&self) -> f64 {
        constructions::optimal_robust_risk(&self.inner)
    }

    /// `m` i.i.d. labeled draws.
    fn sample(&self, m: usize, seed: u64) -> Vec<(usize, bool)> {
        sampling::sample(&self.inner.distribution, m, seed)
            .into_iter()
            .map(|e| (e.x, e.y))
            .collect()
    }

    fn sample_marginal(&self, m: usize, seed: u64) -> Vec<usize> {
        sampling::sample_marginal(&self.inner.distribution, m, seed)
    }

    /// One-inclusion prediction at `x` over the robustly self-consistent
    /// partial class, given labeled points.
    fn oig_predict(&self, known: Vec<(usize, u8)>, x: usize) -> PyResult<bool> {
        let p = to_partial(&self.inner.hypotheses, &self.inner.perturbation).map_err(err)?;
        oig_predict(&p, &examples(known)?, x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(size={}, hypotheses={}, atoms={})",
            self.inner.size(),
            self.inner.hypotheses.n_rows(),
            self.inner.distribution.atoms().len()
        )
    }
}

impl PyInstance {
    fn check_labels(&self, labels: &[bool]) -> PyResult<()> {
        if labels.len() != self.inner.size() {
            return Err(PyValueError::new_err(format!(
                "expected {} labels, got {}",
                self.inner.size(),
                labels.len()
            )));
        }
        Ok(())
    }
}

/// A labeling of the instance space with provenance.
#[pyclass(name = "Predictor", module = "rssl", frozen)]
struct PyPredictor {
    inner: rssl_core::Predictor,
}

#[pymethods]
impl PyPredictor {
    #[getter]
    fn outputs(&self) -> Vec<bool> {
        self.inner.outputs.clone()
    }

    #[getter]
    fn learner(&self) -> String {
        self.inner.provenance.learner.clone()
    }

    #[getter]
    fn provenance(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.provenance)
    }

    fn to_json(&self) -> PyResult<String> {
        io::predictor_to_json(&self.inner).map_err(err)
    }

    fn __call__(&self, x: usize) -> PyResult<bool> {
        self.inner
            .outputs
            .get(x)
            .copied()
            .ok_or_else(|| PyValueError::new_err(format!("instance {x} out of range")))
    }

    fn __len__(&self) -> usize {
        self.inner.outputs.len()
    }

    fn __repr__(&self) -> String {
        format!("Predictor(learner={:?}, size={})", self.inner.provenance.learner, self.inner.outputs.len())
    }
}

/// Runs a learner: `grass`, `robust-supervised`, `known-support`,
/// `robust-01` or `partial-realizable`.
#[pyfunction]
#[pyo3(signature = (learner, instance, sample, unlabeled=None, epsilon=0.1, delta=0.1, alpha_factor=1.0, seed=0, support=None))]
#[allow(clippy::too_many_arguments)]
fn learn(
    py: Python<'_>,
    learner: &str,
    instance: &PyInstance,
    sample: Vec<(usize, u8)>,
    unlabeled: Option<Vec<usize>>,
    epsilon: f64,
    delta: f64,
    alpha_factor: f64,
    seed: u64,
    support: Option<Vec<usize>>,
) -> PyResult<PyPredictor> {
    let id: LearnerId = learner.parse().map_err(err)?;
    let params = PacParams::new(epsilon, delta, alpha_factor).map_err(err)?;
    let s = examples(sample)?;
    let u = unlabeled.unwrap_or_default();
    let inst = &instance.inner;
    let pred = py.detach(|| match (id, support) {
        (LearnerId::KnownSupport, Some(support)) => {
            rssl_core::robust::learn_known_support(&inst.hypotheses, &inst.perturbation, &support, &s)
        }
        _ => Prepared::new(id, inst)?.learn(&s, &u, &params, seed),
    });
    Ok(PyPredictor { inner: pred.map_err(err)? })
}

fn wrap(py: Python<'_>, c: Construction) -> PyResult<(PyInstance, Py<PyAny>)> {
    let meta = to_py(py, &c.meta)?;
    Ok((PyInstance { inner: c.instance }, meta))
}

/// Gap family; `sigma` is the per-block target as a 0/1 string.
#[pyfunction]
#[pyo3(signature = (n, sigma=None))]
fn gen_gap(py: Python<'_>, n: usize, sigma: Option<&str>) -> PyResult<(PyInstance, Py<PyAny>)> {
    let c = match sigma {
        Some(s) => {
            let bits: Vec<bool> = s.chars().map(|c| c == '1').collect();
            if s.chars().any(|c| c != '0' && c != '1') {
                return Err(PyValueError::new_err("sigma must be a 0/1 string"));
            }
            constructions::gen_gap_with_target(n, &bits)
        }
        None => constructions::gen_gap(n),
    };
    wrap(py, c.map_err(err)?)
}

#[pyfunction]
fn gen_allfns_overlap(py: Python<'_>, m: usize) -> PyResult<(PyInstance, Py<PyAny>)> {
    wrap(py, constructions::gen_allfns_overlap(m).map_err(err)?)
}

#[pyfunction]
fn gen_three_halves(py: Python<'_>, n: usize) -> PyResult<(PyInstance, Py<PyAny>)> {
    wrap(py, constructions::gen_three_halves(n).map_err(err)?)
}

#[pyfunction]
fn gen_improper(py: Python<'_>, m: usize) -> PyResult<Vec<(PyInstance, Py<PyAny>)>> {
    let fam = constructions::gen_improper(m).map_err(err)?;
    fam.members.into_iter().map(|c| wrap(py, c)).collect()
}

#[pyfunction]
fn gen_agnostic_sigma(py: Python<'_>, k: usize, alpha: f64) -> PyResult<Vec<(PyInstance, Py<PyAny>)>> {
    let fam = constructions::gen_agnostic_sigma(k, alpha).map_err(err)?;
    fam.into_iter().map(|c| wrap(py, c)).collect()
}

#[pyfunction]
fn graepel_bound(kappa: usize, m: usize, delta: f64) -> PyResult<f64> {
    compress::graepel_bound(kappa, m, delta).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (kappa, m, delta, empirical_risk=0.0))]
fn bernstein_bound(kappa: usize, m: usize, delta: f64, empirical_risk: f64) -> PyResult<f64> {
    compress::bernstein_bound(kappa, m, delta, empirical_risk).map_err(err)
}

/// Minimal-budget search from a JSON experiment config; returns one result
/// per target.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<Py<PyAny>> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    let runs = py.detach(|| cfg.run(None)).map_err(err)?;
    to_py(py, &runs)
}

#[pyfunction]
#[pyo3(signature = (n_values, epsilon=0.1, delta=0.1, trials=200, seed=7, unlabeled=None))]
fn separation_experiment(
    py: Python<'_>,
    n_values: Vec<usize>,
    epsilon: f64,
    delta: f64,
    trials: usize,
    seed: u64,
    unlabeled: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let mut cfg = SeparationConfig::new(n_values, epsilon, delta, trials, seed);
    cfg.unlabeled = unlabeled;
    let report = py.detach(|| bench::separation_experiment(&cfg)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn rssl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyPredictor>()?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add_function(wrap_pyfunction!(gen_gap, m)?)?;
    m.add_function(wrap_pyfunction!(gen_allfns_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(gen_three_halves, m)?)?;
    m.add_function(wrap_pyfunction!(gen_improper, m)?)?;
    m.add_function(wrap_pyfunction!(gen_agnostic_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(graepel_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(separation_experiment, m)?)?;
    Ok(())
}
