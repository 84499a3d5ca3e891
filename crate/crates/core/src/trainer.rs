//! M-fold ensemble training: deterministic fold splitting, the mini-batch
//! epoch loop with validation-F1 model selection and early stopping, and
//! post-softmax probability averaging at inference.

use crate::error::{Error, Result};
use crate::eval::{binary_metrics, multiclass_macro_metrics};
use crate::gnn::{init_model, ModelConfig, SageModel};
use crate::netbuild::CoevNetwork;
use crate::numcore::{adam_step, AdamConfig, DenseMatrix};
use crate::parallel::run_indexed;
use crate::rng::Rng;

const TAG_FOLD_MODEL: u64 = 0xF0;
const TAG_EPOCH_SHUFFLE: u64 = 0xE5;

/// Which of the two predictors is being trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Binding,
    MetalType,
}

impl Task {
    pub fn n_classes(&self) -> usize {
        match self {
            Task::Binding => 2,
            Task::MetalType => 11,
        }
    }

    pub fn default_weight_decay(&self) -> f64 {
        match self {
            Task::Binding => 0.0001,
            Task::MetalType => 0.0005,
        }
    }

    pub fn default_hidden(&self) -> usize {
        match self {
            Task::Binding => 64,
            Task::MetalType => 512,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Binding => "binding",
            Task::MetalType => "type",
        }
    }

    /// Per-node class ids for this task; errors when a label is missing.
    pub fn labels_of(&self, net: &CoevNetwork) -> Result<Vec<usize>> {
        match self {
            Task::Binding => net
                .binding_labels
                .as_ref()
                .map(|ls| ls.iter().map(|&b| b as usize).collect())
                .ok_or_else(|| {
                    Error::Input(format!(
                        "network in chain {} lacks binding labels",
                        net.chain_id
                    ))
                }),
            Task::MetalType => {
                let ml = net.metal_labels.as_ref().ok_or_else(|| {
                    Error::Input(format!(
                        "network in chain {} lacks metal labels",
                        net.chain_id
                    ))
                })?;
                ml.iter()
                    .enumerate()
                    .map(|(i, m)| {
                        let id = m.ok_or_else(|| {
                            Error::Input(format!(
                                "node {} of a chain {} network lacks a metal label",
                                i, net.chain_id
                            ))
                        })?;
                        if (id as usize) >= self.n_classes() {
                            return Err(Error::Input(format!(
                                "metal id {id} out of range 0-10"
                            )));
                        }
                        Ok(id as usize)
                    })
                    .collect()
            }
        }
    }
}

/// Ensemble-training hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub m_folds: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_graphs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn for_task(task: Task, seed: u64) -> Self {
        TrainConfig {
            m_folds: 6,
            lr: 0.001,
            weight_decay: task.default_weight_decay(),
            max_epochs: 200,
            patience: 20,
            batch_graphs: 64,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_folds < 2 {
            return Err(Error::Input(format!(
                "ensemble needs at least 2 folds, got {}",
                self.m_folds
            )));
        }
        if self.lr < 0.0 || !self.lr.is_finite() {
            return Err(Error::Input(format!(
                "learning rate must be finite and >= 0, got {}",
                self.lr
            )));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::Input(format!(
                "patience {} must be smaller than max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.batch_graphs == 0 {
            return Err(Error::Input("batch_graphs must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Graph-index to fold-id assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    pub assignments: Vec<usize>,
    pub m: usize,
}

impl FoldSplit {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Deterministic shuffle by seed followed by round-robin assignment; fold
/// sizes differ by at most 1.
pub fn split_folds(n_graphs: usize, m: usize, seed: u64) -> Result<FoldSplit> {
    if m < 2 {
        return Err(Error::Input(format!("need at least 2 folds, got {m}")));
    }
    if n_graphs < m {
        return Err(Error::Input(format!(
            "cannot split {n_graphs} graphs into {m} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n_graphs).collect();
    let mut rng = Rng::stream(seed, &[]);
    rng.shuffle(&mut order);
    let mut assignments = vec![0; n_graphs];
    for (pos, &graph) in order.iter().enumerate() {
        assignments[graph] = pos % m;
    }
    Ok(FoldSplit { assignments, m })
}

/// One line of the per-epoch training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub fold: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
}

/// Result of training one fold.
#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub model: SageModel,
    pub best_val_f1: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub log: Vec<EpochRecord>,
}

/// Training metadata of one fold, persisted with the checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldStats {
    pub best_val_f1: f64,
    pub best_epoch: u32,
    pub epochs_run: u32,
}

/// M trained model snapshots whose softmax outputs are averaged at inference.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCheckpoint {
    pub task: Task,
    pub model_config: ModelConfig,
    pub models: Vec<SageModel>,
    pub fold_stats: Vec<FoldStats>,
}

impl EnsembleCheckpoint {
    pub fn m(&self) -> usize {
        self.models.len()
    }
}

/// Checkpoint plus the per-fold epoch logs (not persisted).
#[derive(Clone, Debug)]
pub struct TrainRun {
    pub checkpoint: EnsembleCheckpoint,
    pub epoch_logs: Vec<Vec<EpochRecord>>,
}

/// Pools the nodes of several graphs into one block-diagonal batch.
fn build_batch(
    graphs: &[&CoevNetwork],
    task: Task,
    d_in: usize,
) -> Result<(DenseMatrix, Vec<Vec<usize>>, Vec<usize>)> {
    let total: usize = graphs.iter().map(|g| g.node_count()).sum();
    let mut features = DenseMatrix::zeros(total, d_in);
    let mut neighbors = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut offset = 0;
    for g in graphs {
        if g.features.cols() != d_in {
            return Err(Error::Shape(format!(
                "graph in chain {} has feature dim {}, model expects {}",
                g.chain_id,
                g.features.cols(),
                d_in
            )));
        }
        for (i, adj) in g.neighbor_lists().into_iter().enumerate() {
            features
                .row_mut(offset + i)
                .copy_from_slice(g.features.row(i));
            neighbors.push(adj.into_iter().map(|j| j + offset).collect());
        }
        labels.extend(task.labels_of(g)?);
        offset += g.node_count();
    }
    Ok((features, neighbors, labels))
}

/// Positive-class F1 (binding) or macro F1 (metal type) of infer-mode
/// predictions over a set of graphs.
fn validation_f1(model: &SageModel, graphs: &[&CoevNetwork], task: Task) -> Result<f64> {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for g in graphs {
        let probs = model.infer_network(g)?;
        let labels = task.labels_of(g)?;
        for (i, lab) in labels.into_iter().enumerate() {
            truth.push(lab);
            pred.push(match task {
                Task::Binding => (probs.get(i, 1) >= 0.5) as usize,
                Task::MetalType => crate::eval::argmax(probs.row(i)),
            });
        }
    }
    match task {
        Task::Binding => {
            let t: Vec<bool> = truth.iter().map(|&v| v == 1).collect();
            let p: Vec<bool> = pred.iter().map(|&v| v == 1).collect();
            Ok(binary_metrics(&t, &p)?.positive().f1)
        }
        Task::MetalType => {
            Ok(multiclass_macro_metrics(&truth, &pred, task.n_classes())?.macro_f1)
        }
    }
}

/// Trains one fold: epochs of graph mini-batches with node batches pooled for
/// batch norm, validation F1 after each epoch, snapshot of the best epoch
/// (ties keep the earlier one), early stop after `patience` epochs without
/// improvement.
pub fn train_fold(
    train: &[&CoevNetwork],
    val: &[&CoevNetwork],
    task: Task,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    fold: usize,
) -> Result<FoldOutcome> {
    train_cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Input(format!("fold {fold}: empty training set")));
    }
    if val.is_empty() {
        return Err(Error::Input(format!("fold {fold}: empty validation set")));
    }
    let mut fold_cfg = model_cfg.clone();
    fold_cfg.seed = Rng::stream(model_cfg.seed, &[TAG_FOLD_MODEL, fold as u64]).next_u64();
    let mut model = init_model(&fold_cfg)?;
    let adam = AdamConfig {
        lr: train_cfg.lr,
        weight_decay: train_cfg.weight_decay,
        ..AdamConfig::default()
    };

    let mut best: Option<(f64, usize, SageModel)> = None;
    let mut log = Vec::new();
    let mut stale = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 1..=train_cfg.max_epochs {
        epochs_run = epoch;
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = Rng::stream(train_cfg.seed, &[TAG_EPOCH_SHUFFLE, fold as u64, epoch as u64]);
        rng.shuffle(&mut order);

        // chunk into graph mini-batches; a trailing chunk too small for batch
        // norm is merged into its predecessor
        let mut chunks: Vec<Vec<usize>> = order
            .chunks(train_cfg.batch_graphs)
            .map(|c| c.to_vec())
            .collect();
        if chunks.len() >= 2 {
            let last_nodes: usize = chunks
                .last()
                .unwrap()
                .iter()
                .map(|&g| train[g].node_count())
                .sum();
            if last_nodes < 2 {
                let tail = chunks.pop().unwrap();
                chunks.last_mut().unwrap().extend(tail);
            }
        }

        let mut loss_sum = 0.0;
        let mut node_sum = 0usize;
        for chunk in &chunks {
            let batch: Vec<&CoevNetwork> = chunk.iter().map(|&g| train[g]).collect();
            let (x, neighbors, labels) = build_batch(&batch, task, model_cfg.d_in)?;
            let (_, cache) = model.train_forward(&x, &neighbors)?;
            model.zero_grads();
            let loss = model.backward(&cache, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "fold {fold} epoch {epoch}: loss is {loss}"
                )));
            }
            for p in model.params_mut() {
                adam_step(p, &adam)?;
            }
            loss_sum += loss * labels.len() as f64;
            node_sum += labels.len();
        }
        let train_loss = loss_sum / node_sum as f64;
        let val_f1 = validation_f1(&model, val, task)?;
        log.push(EpochRecord {
            fold,
            epoch,
            train_loss,
            val_f1,
        });

        let improved = best.as_ref().map(|(f, _, _)| val_f1 > *f).unwrap_or(true);
        if improved {
            best = Some((val_f1, epoch, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= train_cfg.patience {
                break;
            }
        }
    }

    let (best_val_f1, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(FoldOutcome {
        model,
        best_val_f1,
        best_epoch,
        epochs_run,
        log,
    })
}

/// Trains M folds (fold j validates on fold j, trains on the rest), possibly
/// in parallel (`threads` = 0 means auto). Results are combined in fold order
/// so the checkpoint does not depend on scheduling.
pub fn train_ensemble(
    graphs: &[CoevNetwork],
    task: Task,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    threads: usize,
) -> Result<TrainRun> {
    train_cfg.validate()?;
    model_cfg.validate()?;
    if model_cfg.n_classes != task.n_classes() {
        return Err(Error::Input(format!(
            "{} task requires {} classes, model config has {}",
            task.name(),
            task.n_classes(),
            model_cfg.n_classes
        )));
    }
    let split = split_folds(graphs.len(), train_cfg.m_folds, train_cfg.seed)?;

    let outcomes: Vec<Result<FoldOutcome>> = run_indexed(train_cfg.m_folds, threads, |fold| {
        let train: Vec<&CoevNetwork> = graphs
            .iter()
            .zip(&split.assignments)
            .filter(|(_, &f)| f != fold)
            .map(|(g, _)| g)
            .collect();
        let val: Vec<&CoevNetwork> = graphs
            .iter()
            .zip(&split.assignments)
            .filter(|(_, &f)| f == fold)
            .map(|(g, _)| g)
            .collect();
        train_fold(&train, &val, task, model_cfg, train_cfg, fold)
    });

    let mut models = Vec::with_capacity(train_cfg.m_folds);
    let mut fold_stats = Vec::with_capacity(train_cfg.m_folds);
    let mut epoch_logs = Vec::with_capacity(train_cfg.m_folds);
    for outcome in outcomes {
        let o = outcome?;
        fold_stats.push(FoldStats {
            best_val_f1: o.best_val_f1,
            best_epoch: o.best_epoch as u32,
            epochs_run: o.epochs_run as u32,
        });
        epoch_logs.push(o.log);
        models.push(o.model);
    }
    Ok(TrainRun {
        checkpoint: EnsembleCheckpoint {
            task,
            model_config: model_cfg.clone(),
            models,
            fold_stats,
        },
        epoch_logs,
    })
}

/// Arithmetic mean of the M models' infer-mode softmax outputs over a raw
/// node batch; rows remain on the probability simplex.
pub fn ensemble_predict_batch(
    ck: &EnsembleCheckpoint,
    x: &DenseMatrix,
    neighbors: &[Vec<usize>],
) -> Result<DenseMatrix> {
    if ck.models.is_empty() {
        return Err(Error::Input("checkpoint holds no models".to_string()));
    }
    let mut mean = DenseMatrix::zeros(x.rows(), ck.model_config.n_classes);
    for model in &ck.models {
        mean.add_assign(&model.infer(x, neighbors)?)?;
    }
    mean.scale(1.0 / ck.models.len() as f64);
    Ok(mean)
}

/// Ensemble prediction for one network.
pub fn ensemble_predict(ck: &EnsembleCheckpoint, net: &CoevNetwork) -> Result<DenseMatrix> {
    ensemble_predict_batch(ck, &net.features, &net.neighbor_lists())
}
