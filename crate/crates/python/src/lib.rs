//! Python bindings: model configuration, evaluation, gradients, training and
//! the data helpers needed to drive them.
//!
//! ```python
//! import protqtn
//! cfg = protqtn.ModelConfig(topology="ptn", sharing="hierarchical", mode="discard")
//! model = protqtn.Model(cfg, max_len=8, seed=1)
//! model.evaluate("AGSQ")   # {'p0': ..., 'p1': ..., 'raw_weight': ..., 'predicted': ...}
//! ```

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use protqtn_core::ansatz::{ansatz_sequence, Family};
use protqtn_core::checkpoint::Checkpoint;
use protqtn_core::data::{self, split, SequenceRecord};
use protqtn_core::engine::EngineError;
use protqtn_core::grad::{grad_adjoint, grad_finite_diff, grad_param_shift, Gradient};
use protqtn_core::prelude::*;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn engine_err(e: EngineError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn tokens(sequence: &str) -> PyResult<Vec<TokenId>> {
    if sequence.is_empty() {
        return Err(value_err("empty sequence"));
    }
    Ok(Vocabulary::standard().encode(&sequence.to_ascii_uppercase()))
}

/// Topology, sharing, semantics and ansatz of a classifier.
#[pyclass(module = "protqtn", name = "ModelConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModelConfig {
    inner: ModelConfig,
}

#[pymethods]
impl PyModelConfig {
    #[new]
    #[pyo3(signature = (topology="ptn", sharing="hierarchical", mode="discard", q=1, family="sim14", depth=1))]
    fn new(topology: &str, sharing: &str, mode: &str, q: usize, family: &str, depth: usize) -> PyResult<Self> {
        let ansatz = AnsatzFamily::new(family.parse::<Family>().map_err(value_err)?, depth);
        let inner = ModelConfig::new(
            topology.parse().map_err(value_err)?,
            sharing.parse().map_err(value_err)?,
            mode.parse().map_err(value_err)?,
            q,
            ansatz,
        );
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn topology(&self) -> String {
        self.inner.topology.to_string()
    }

    #[getter]
    fn sharing(&self) -> String {
        self.inner.sharing.to_string()
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode.to_string()
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q
    }

    fn __repr__(&self) -> String {
        let a = self.inner.ansatz.merge;
        format!(
            "ModelConfig(topology='{}', sharing='{}', mode='{}', q={}, family='{}', depth={})",
            self.inner.topology,
            self.inner.sharing,
            self.inner.mode,
            self.inner.q,
            a.family.name(),
            a.depth
        )
    }
}

/// A configuration with bound parameters.
#[pyclass(module = "protqtn", name = "Model")]
struct PyModel {
    config: ModelConfig,
    store: ParamStore,
}

impl PyModel {
    fn plan(&self, sequence: &str) -> PyResult<CircuitPlan> {
        let d = self.config.build_diagram(&tokens(sequence)?).map_err(value_err)?;
        let p = plan(&d, &self.config).map_err(engine_err)?;
        if let Some(k) = p.keys().into_iter().find(|k| self.store.get(k).is_err()) {
            return Err(value_err(format!("sequence too long for this model: no parameters for `{k}`")));
        }
        Ok(p)
    }
}

fn outcome_dict<'py>(py: Python<'py>, o: &Outcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("p0", o.p0)?;
    d.set_item("p1", o.p1)?;
    d.set_item("raw_weight", o.raw_weight)?;
    d.set_item("predicted", o.predicted())?;
    Ok(d)
}

#[pymethods]
impl PyModel {
    /// Fresh parameters able to serve sequences up to `max_len`.
    #[new]
    #[pyo3(signature = (config, max_len, seed=0))]
    fn new(config: PyRef<'_, PyModelConfig>, max_len: usize, seed: u64) -> PyResult<Self> {
        if max_len == 0 {
            return Err(value_err("max_len must be positive"));
        }
        let schema = config.inner.schema_for_max_len(max_len).map_err(value_err)?;
        Ok(Self { config: config.inner, store: init_params(&schema, seed, InitScheme::UniformAngle) })
    }

    /// Load the parameters of a checkpoint file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| value_err(format!("{path}: {e}")))?;
        let ck = Checkpoint::from_json(&text).map_err(value_err)?;
        Ok(Self { config: ck.config.model, store: ck.store().map_err(value_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let config = TrainConfig { model: self.config, ..TrainConfig::default() };
        std::fs::write(path, Checkpoint::new(config, &self.store, None).to_json()).map_err(|e| value_err(format!("{path}: {e}")))
    }

    #[getter]
    fn config(&self) -> PyModelConfig {
        PyModelConfig { inner: self.config }
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.store.total_params()
    }

    /// Parameter keys in the order used by `params` and `gradient`.
    fn keys(&self) -> Vec<(String, usize)> {
        self.store.entries.iter().map(|(k, v)| (k.to_string(), v.len())).collect()
    }

    fn params(&self) -> Vec<f64> {
        self.store.flatten()
    }

    fn set_params(&mut self, values: Vec<f64>) -> PyResult<()> {
        if values.len() != self.store.total_params() {
            return Err(value_err(format!("expected {} values, got {}", self.store.total_params(), values.len())));
        }
        self.store.assign(&values);
        Ok(())
    }

    /// `{p0, p1, raw_weight, predicted}` for one sequence.
    fn evaluate<'py>(&self, py: Python<'py>, sequence: &str) -> PyResult<Bound<'py, PyDict>> {
        let p = self.plan(sequence)?;
        let o = py.detach(|| evaluate(&p, &self.store)).map_err(engine_err)?;
        outcome_dict(py, &o)
    }

    /// Loss and flat loss gradient for `(sequence, label)`.
    #[pyo3(signature = (sequence, label, method="adjoint"))]
    fn gradient(&self, py: Python<'_>, sequence: &str, label: u8, method: &str) -> PyResult<(f64, Vec<f64>)> {
        if label > 1 {
            return Err(value_err("label must be 0 or 1"));
        }
        let p = self.plan(sequence)?;
        let mode = self.config.mode;
        let g: Gradient = py
            .detach(|| match method {
                "adjoint" => Ok(grad_adjoint(&p, &self.store, label, mode)),
                "param_shift" => Ok(grad_param_shift(&p, &self.store, label, mode)),
                "finite_diff" => Ok(grad_finite_diff(&p, &self.store, label, mode, 1e-5)),
                other => Err(format!("unknown method `{other}` (valid: adjoint, param_shift, finite_diff)")),
            })
            .map_err(value_err)?
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok((g.loss, g.flatten()))
    }

    /// Diagram listing, one box per line.
    fn diagram(&self, sequence: &str) -> PyResult<String> {
        Ok(self.config.build_diagram(&tokens(sequence)?).map_err(value_err)?.to_text())
    }

    /// Gate listing, one gate per line.
    fn circuit(&self, sequence: &str) -> PyResult<String> {
        Ok(self.plan(sequence)?.to_text())
    }

    fn __repr__(&self) -> String {
        format!("Model({} parameters, {} {} {})", self.store.total_params(), self.config.topology, self.config.sharing, self.config.mode)
    }
}

/// `(accession, sequence)` pairs of a FASTA text.
#[pyfunction]
fn parse_fasta(text: &str) -> PyResult<Vec<(String, String)>> {
    data::parse_fasta(text).map_err(value_err)
}

/// Balanced motif-detection records as `(id, label, sequence)`.
#[pyfunction]
#[pyo3(signature = (n, seq_len=8, vocab_size=4, motif="AC", seed=0))]
fn synth_motif(n: usize, seq_len: usize, vocab_size: usize, motif: &str, seed: u64) -> PyResult<Vec<(String, u8, String)>> {
    let m = tokens(motif)?;
    if m.len() != 2 {
        return Err(value_err("motif must be two residues"));
    }
    let recs = data::synth_motif_dataset(n, seq_len, vocab_size, (m[0], m[1]), seed).map_err(value_err)?;
    Ok(recs.into_iter().map(|r| (r.id, r.label, r.sequence)).collect())
}

/// Split `records` and train; returns the best-validation model and the
/// per-epoch history as `(epoch, train_loss, train_acc, val_loss, val_acc)`.
#[pyfunction(name = "train")]
#[pyo3(signature = (records, config, seed=0, max_epochs=50, batch_size=16, learning_rate=0.01, patience=5, ratios=(0.8, 0.1, 0.1)))]
#[allow(clippy::too_many_arguments)]
fn train_model(
    py: Python<'_>,
    records: Vec<(String, u8, String)>,
    config: PyRef<'_, PyModelConfig>,
    seed: u64,
    max_epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    patience: usize,
    ratios: (f64, f64, f64),
) -> PyResult<(PyModel, Vec<(usize, f64, f64, f64, f64)>)> {
    let records: Vec<SequenceRecord> = records.into_iter().map(|(id, label, seq)| SequenceRecord::new(id, seq, label)).collect();
    let mut cfg = TrainConfig {
        model: config.inner,
        batch_size,
        max_epochs,
        early_stop_patience: patience,
        seed,
        ..TrainConfig::default()
    };
    cfg.optimizer.learning_rate = learning_rate;
    cfg.validate().map_err(value_err)?;
    let splits = split(&records, [ratios.0, ratios.1, ratios.2], seed).map_err(value_err)?;
    let (store, history) = py
        .detach(|| protqtn_core::train::train(&cfg, &splits))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let rows = history.rows.iter().map(|r| (r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc)).collect();
    Ok((PyModel { config: cfg.model, store }, rows))
}

/// Dense unitary of one ansatz instance, as a list of rows.
#[pyfunction]
fn unitary(family: &str, depth: usize, n_qubits: usize, angles: Vec<f64>) -> PyResult<Vec<Vec<Complex64>>> {
    let a = AnsatzFamily::new(family.parse::<Family>().map_err(value_err)?, depth);
    if n_qubits == 0 || depth == 0 {
        return Err(value_err("need at least one qubit and one layer"));
    }
    let u = unitary_of(&ansatz_sequence(a, n_qubits), &angles).map_err(value_err)?;
    Ok((0..u.dim).map(|r| (0..u.dim).map(|c| u.get(r, c)).collect()).collect())
}

#[pyfunction]
fn param_count_of(family: &str, depth: usize, n_qubits: usize) -> PyResult<usize> {
    Ok(param_count(AnsatzFamily::new(family.parse::<Family>().map_err(value_err)?, depth), n_qubits))
}

#[pymodule]
fn protqtn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(parse_fasta, m)?)?;
    m.add_function(wrap_pyfunction!(synth_motif, m)?)?;
    m.add_function(wrap_pyfunction!(train_model, m)?)?;
    m.add_function(wrap_pyfunction!(unitary, m)?)?;
    m.add_function(wrap_pyfunction!(param_count_of, m)?)?;
    Ok(())
}
