//! Python bindings for the mbgnn pipeline: the file-based commands
//! (gen-synthetic, build-graphs, train, predict, evaluate), the core graph
//! operations, the metric functions, and an ensemble handle for in-memory
//! prediction.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use mbgnn_core::cli::{
    cmd_build_graphs, cmd_evaluate, cmd_gen_synthetic, cmd_predict, cmd_train, BuildGraphsArgs,
    EvaluateArgs, GenSyntheticArgs, PredictArgs, TrainArgs,
};
use mbgnn_core::error::Error;
use mbgnn_core::eval::{self, MetricsReport, PipelineMetrics};
use mbgnn_core::io::read_checkpoint;
use mbgnn_core::netbuild::{self, ChainSeq, ContactRecord};
use mbgnn_core::numcore::DenseMatrix;
use mbgnn_core::pipeline::MetalType;
use mbgnn_core::trainer::{ensemble_predict_batch, EnsembleCheckpoint, Task};

fn pyerr(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_task(task: &str) -> PyResult<Task> {
    match task {
        "binding" => Ok(Task::Binding),
        "type" => Ok(Task::MetalType),
        other => Err(PyValueError::new_err(format!(
            "task must be 'binding' or 'type', got {other:?}"
        ))),
    }
}

fn contacts_from_tuples(contacts: Vec<(usize, usize, f64)>) -> PyResult<Vec<ContactRecord>> {
    contacts
        .into_iter()
        .map(|(a, b, s)| ContactRecord::new(a, b, s).map_err(pyerr))
        .collect()
}

fn class_metrics_dict(
    prefix: &str,
    m: &eval::ClassMetrics,
    out: &Bound<'_, PyDict>,
) -> PyResult<()> {
    out.set_item(format!("{prefix}precision"), m.precision)?;
    out.set_item(format!("{prefix}recall"), m.recall)?;
    out.set_item(format!("{prefix}f1"), m.f1)?;
    out.set_item(format!("{prefix}support"), m.support)?;
    Ok(())
}

fn metrics_dict<'py>(py: Python<'py>, metrics: &PipelineMetrics) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    class_metrics_dict("binding_", metrics.binding.positive(), &out)?;
    for metal in MetalType::all() {
        let prefix = format!("metal_{}_", metal.name());
        class_metrics_dict(&prefix, &metrics.metal.classes[metal.id() as usize], &out)?;
    }
    out.set_item("macro_precision", metrics.metal.macro_precision)?;
    out.set_item("macro_recall", metrics.metal.macro_recall)?;
    out.set_item("macro_f1", metrics.metal.macro_f1)?;
    Ok(out)
}

fn report_dict<'py>(py: Python<'py>, report: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("macro_precision", report.macro_precision)?;
    out.set_item("macro_recall", report.macro_recall)?;
    out.set_item("macro_f1", report.macro_f1)?;
    let classes = PyList::empty(py);
    for c in &report.classes {
        let d = PyDict::new(py);
        d.set_item("precision", c.precision)?;
        d.set_item("recall", c.recall)?;
        d.set_item("f1", c.f1)?;
        d.set_item("support", c.support)?;
        classes.append(d)?;
    }
    out.set_item("classes", classes)?;
    Ok(out)
}

/// Generate a synthetic corpus under `out_dir`.
#[pyfunction(signature = (out_dir, chains, seed = 0, dim = 32))]
fn gen_synthetic<'py>(
    py: Python<'py>,
    out_dir: PathBuf,
    chains: usize,
    seed: u64,
    dim: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let summary = cmd_gen_synthetic(&GenSyntheticArgs {
        chains,
        seed,
        dim,
        out_dir,
    })
    .map_err(pyerr)?;
    let out = PyDict::new(py);
    out.set_item("chains", summary.chains)?;
    out.set_item("labeled_residues", summary.labeled_residues)?;
    out.set_item("binders", summary.binders)?;
    Ok(out)
}

/// Build stage-1 networks from contact maps and embeddings into a bundle.
#[pyfunction(signature = (contacts_dir, fasta, embeddings_dir, out, labels = None, threshold = 0.1))]
fn build_graphs<'py>(
    py: Python<'py>,
    contacts_dir: PathBuf,
    fasta: PathBuf,
    embeddings_dir: PathBuf,
    out: PathBuf,
    labels: Option<PathBuf>,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let counts = cmd_build_graphs(&BuildGraphsArgs {
        contacts_dir,
        fasta,
        embeddings_dir,
        labels,
        threshold,
        out,
    })
    .map_err(pyerr)?;
    let dict = PyDict::new(py);
    dict.set_item("graphs", counts.graphs)?;
    dict.set_item("residues", counts.residues)?;
    dict.set_item("binders", counts.binders)?;
    Ok(dict)
}

/// Train an M-fold ensemble from a labeled bundle; returns per-fold stats.
#[pyfunction(signature = (
    bundle, task, out_checkpoint, folds = 6, lr = 0.001, weight_decay = None,
    hidden = None, layers = 5, max_epochs = 200, patience = 20,
    batch_graphs = 64, seed = 0, threads = 0
))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    bundle: PathBuf,
    task: &str,
    out_checkpoint: PathBuf,
    folds: usize,
    lr: f64,
    weight_decay: Option<f64>,
    hidden: Option<usize>,
    layers: usize,
    max_epochs: usize,
    patience: usize,
    batch_graphs: usize,
    seed: u64,
    threads: usize,
) -> PyResult<Bound<'py, PyList>> {
    let run = cmd_train(&TrainArgs {
        bundle,
        task: parse_task(task)?,
        folds,
        lr,
        weight_decay,
        hidden,
        layers,
        max_epochs,
        patience,
        batch_graphs,
        seed,
        out_checkpoint,
        threads,
    })
    .map_err(pyerr)?;
    let list = PyList::empty(py);
    for (fold, stats) in run.checkpoint.fold_stats.iter().enumerate() {
        let d = PyDict::new(py);
        d.set_item("fold", fold)?;
        d.set_item("best_val_f1", stats.best_val_f1)?;
        d.set_item("best_epoch", stats.best_epoch)?;
        d.set_item("epochs_run", stats.epochs_run)?;
        list.append(d)?;
    }
    Ok(list)
}

/// Run the two-stage pipeline on one chain and write the report.
#[pyfunction(signature = (contacts, fasta, embeddings, binding_ck, type_ck, out_report, threshold = 0.1))]
fn predict<'py>(
    py: Python<'py>,
    contacts: PathBuf,
    fasta: PathBuf,
    embeddings: PathBuf,
    binding_ck: PathBuf,
    type_ck: PathBuf,
    out_report: PathBuf,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report = cmd_predict(&PredictArgs {
        contacts,
        fasta,
        embeddings,
        binding_ck,
        type_ck,
        threshold,
        out_report,
    })
    .map_err(pyerr)?;
    let out = PyDict::new(py);
    out.set_item("chain", &report.chain_id)?;
    out.set_item("stage1_networks", report.stage1.len())?;
    out.set_item("stage2_networks", report.stage2.len())?;
    out.set_item("calls", report.binding_calls.len())?;
    out.set_item(
        "positive_calls",
        report.binding_calls.iter().filter(|c| c.call).count(),
    )?;
    out.set_item("type_calls", report.type_calls.len())?;
    Ok(out)
}

/// Score a report against truth labels; optionally writes the metrics file.
#[pyfunction(signature = (report, labels, out_metrics = None))]
fn evaluate<'py>(
    py: Python<'py>,
    report: PathBuf,
    labels: PathBuf,
    out_metrics: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let metrics = cmd_evaluate(&EvaluateArgs {
        report,
        labels,
        out_metrics,
    })
    .map_err(pyerr)?;
    metrics_dict(py, &metrics)
}

/// Contacts above `threshold` whose endpoints are both CHED residues.
#[pyfunction(signature = (contacts, sequence, threshold = 0.1))]
fn extract_ched_pairs(
    contacts: Vec<(usize, usize, f64)>,
    sequence: &str,
    threshold: f64,
) -> PyResult<Vec<(usize, usize, f64)>> {
    let chain = ChainSeq::new("py", sequence).map_err(pyerr)?;
    let records = contacts_from_tuples(contacts)?;
    let kept = netbuild::extract_ched_pairs(&records, &chain, threshold).map_err(pyerr)?;
    Ok(kept.into_iter().map(|r| (r.a, r.b, r.score)).collect())
}

/// Connected components of a CHED pair list, as residue-index lists.
#[pyfunction]
fn assemble_networks(
    pairs: Vec<(usize, usize, f64)>,
    sequence: &str,
) -> PyResult<Vec<Vec<usize>>> {
    let chain = ChainSeq::new("py", sequence).map_err(pyerr)?;
    let records = contacts_from_tuples(pairs)?;
    let nets = netbuild::assemble_networks(&records, &chain).map_err(pyerr)?;
    Ok(nets
        .networks
        .iter()
        .map(|n| n.nodes.iter().map(|r| r.index).collect())
        .collect())
}

/// Binary precision/recall/F1 of the positive class.
#[pyfunction]
fn binary_metrics<'py>(
    py: Python<'py>,
    truth: Vec<bool>,
    pred: Vec<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let report = eval::binary_metrics(&truth, &pred).map_err(pyerr)?;
    let out = PyDict::new(py);
    class_metrics_dict("", report.positive(), &out)?;
    Ok(out)
}

/// One-vs-rest metrics with unweighted macro averages.
#[pyfunction(signature = (truth, pred, n_classes = 11))]
fn macro_metrics<'py>(
    py: Python<'py>,
    truth: Vec<usize>,
    pred: Vec<usize>,
    n_classes: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let report = eval::multiclass_macro_metrics(&truth, &pred, n_classes).map_err(pyerr)?;
    report_dict(py, &report)
}

/// The 11 metal class names in id order.
#[pyfunction]
fn metal_names() -> Vec<&'static str> {
    MetalType::all().map(|m| m.name()).to_vec()
}

/// A loaded ensemble checkpoint.
#[pyclass(frozen)]
struct Ensemble {
    ck: EnsembleCheckpoint,
}

#[pymethods]
impl Ensemble {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Ensemble> {
        Ok(Ensemble {
            ck: read_checkpoint(&path).map_err(pyerr)?,
        })
    }

    #[getter]
    fn task(&self) -> &'static str {
        self.ck.task.name()
    }

    #[getter]
    fn n_models(&self) -> usize {
        self.ck.m()
    }

    #[getter]
    fn d_in(&self) -> usize {
        self.ck.model_config.d_in
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.ck.model_config.n_classes
    }

    /// Ensemble-averaged class probabilities for a raw node batch given as
    /// feature rows plus undirected edges (node-index pairs).
    fn predict_probs(
        &self,
        features: Vec<Vec<f64>>,
        edges: Vec<(usize, usize)>,
    ) -> PyResult<Vec<Vec<f64>>> {
        let n = features.len();
        let d = features.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n * d);
        for row in &features {
            if row.len() != d {
                return Err(PyValueError::new_err("ragged feature rows"));
            }
            data.extend_from_slice(row);
        }
        let x = DenseMatrix::from_vec(n, d, data).map_err(pyerr)?;
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(PyValueError::new_err(format!(
                    "bad edge ({a},{b}) for {n} nodes"
                )));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for lst in &mut neighbors {
            lst.sort_unstable();
            lst.dedup();
        }
        let probs = ensemble_predict_batch(&self.ck, &x, &neighbors).map_err(pyerr)?;
        Ok((0..probs.rows()).map(|r| probs.row(r).to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Ensemble(task={}, models={}, d_in={}, n_classes={})",
            self.ck.task.name(),
            self.ck.m(),
            self.ck.model_config.d_in,
            self.ck.model_config.n_classes
        )
    }
}

#[pymodule]
fn mbgnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Ensemble>()?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(build_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(extract_ched_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_networks, m)?)?;
    m.add_function(wrap_pyfunction!(binary_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(macro_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(metal_names, m)?)?;
    Ok(())
}
