//! Command implementations behind the `mbgnn` binary; the Python bindings
//! call these directly.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{pipeline_metrics, render_metrics, PipelineMetrics, ResidueTruth};
use crate::gnn::ModelConfig;
use crate::io::{
    read_bundle, read_checkpoint, read_contacts, read_embeddings, read_fasta, read_labels,
    read_report, write_bundle, write_checkpoint, write_report, GraphBundle, LabelTable,
};
use crate::netbuild::{
    assemble_networks, attach_embeddings, binder_induced_networks, extract_ched_pairs, ChainSeq,
    CoevNetwork, EmbeddingTable, NetworkSet,
};
use crate::pipeline::{full_predict, PredictionReport};
use crate::synth::{generate, write_corpus, SynthConfig};
use crate::trainer::{train_ensemble, Task, TrainConfig, TrainRun};

/// Inputs of `build-graphs`.
#[derive(Clone, Debug)]
pub struct BuildGraphsArgs {
    pub contacts_dir: PathBuf,
    pub fasta: PathBuf,
    pub embeddings_dir: PathBuf,
    pub labels: Option<PathBuf>,
    pub threshold: f64,
    pub out: PathBuf,
}

/// Counts printed by `build-graphs`, shaped like the dataset summary table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildCounts {
    pub graphs: usize,
    pub residues: usize,
    pub binders: Option<usize>,
}

impl BuildCounts {
    pub fn render(&self) -> String {
        let mut out = format!(
            "Graphs\t{}\nCo-evolved Residues\t{}\n",
            self.graphs, self.residues
        );
        if let Some(b) = self.binders {
            out.push_str(&format!("Co-evolved Metal-binding Residues\t{b}\n"));
        }
        out
    }
}

fn apply_labels(net: &mut CoevNetwork, labels: &LabelTable) {
    let by_residue = labels.by_residue();
    let mut binding = Vec::with_capacity(net.node_count());
    let mut metal = Vec::with_capacity(net.node_count());
    for node in &net.nodes {
        match by_residue.get(&(net.chain_id.as_str(), node.index)) {
            Some(rec) => {
                binding.push(rec.binding);
                metal.push(rec.metal);
            }
            // residues absent from the label file are non-binding
            None => {
                binding.push(false);
                metal.push(None);
            }
        }
    }
    net.binding_labels = Some(binding);
    net.metal_labels = Some(metal);
}

/// Builds stage-1 networks for every chain in the FASTA file, attaches
/// embeddings, optionally labels the nodes, and writes a graph bundle.
pub fn cmd_build_graphs(args: &BuildGraphsArgs) -> Result<BuildCounts> {
    let chains = read_fasta(&args.fasta)?;
    let labels = args.labels.as_deref().map(read_labels).transpose()?;

    let mut networks: Vec<CoevNetwork> = Vec::new();
    let mut feat_dim: Option<usize> = None;
    for chain in &chains {
        let contact_path = args.contacts_dir.join(format!("{}.contacts", chain.id));
        let contact_file = read_contacts(&contact_path)?;
        if contact_file.chain_id != chain.id {
            return Err(Error::Input(format!(
                "{}: header chain {} does not match FASTA chain {}",
                contact_path.display(),
                contact_file.chain_id,
                chain.id
            )));
        }
        if contact_file.length != chain.len() {
            return Err(Error::Input(format!(
                "{}: header length {} does not match sequence length {}",
                contact_path.display(),
                contact_file.length,
                chain.len()
            )));
        }
        let emb_path = args.embeddings_dir.join(format!("{}.emb", chain.id));
        let table = read_embeddings(&emb_path)?;
        if table.matrix.rows() != chain.len() {
            return Err(Error::Input(format!(
                "{}: {} embedding rows for a {}-residue chain",
                emb_path.display(),
                table.matrix.rows(),
                chain.len()
            )));
        }
        match feat_dim {
            None => feat_dim = Some(table.dim()),
            Some(d) if d != table.dim() => {
                return Err(Error::Input(format!(
                    "{}: embedding dim {} differs from earlier chains ({d})",
                    emb_path.display(),
                    table.dim()
                )))
            }
            _ => {}
        }

        let pairs = extract_ched_pairs(&contact_file.records, chain, args.threshold)?;
        let nets = assemble_networks(&pairs, chain)?;
        let mut nets = attach_embeddings(&nets, &table)?;
        if let Some(labels) = &labels {
            for net in &mut nets.networks {
                apply_labels(net, labels);
            }
        }
        networks.extend(nets.networks);
    }

    let bundle = GraphBundle::new(feat_dim.unwrap_or(0), networks)?;
    let counts = BuildCounts {
        graphs: bundle.networks.len(),
        residues: bundle.total_nodes(),
        binders: bundle.total_binders(),
    };
    write_bundle(&args.out, &bundle)?;
    Ok(counts)
}

/// Inputs of `train`.
#[derive(Clone, Debug)]
pub struct TrainArgs {
    pub bundle: PathBuf,
    pub task: Task,
    pub folds: usize,
    pub lr: f64,
    pub weight_decay: Option<f64>,
    pub hidden: Option<usize>,
    pub layers: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_graphs: usize,
    pub seed: u64,
    pub out_checkpoint: PathBuf,
    pub threads: usize,
}

/// Trains an M-fold ensemble from a labeled bundle and writes the checkpoint.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainRun> {
    let bundle = read_bundle(&args.bundle)?;
    if !bundle.has_binding_labels() {
        return Err(Error::Input(format!(
            "{}: bundle is unlabeled; train needs labels",
            args.bundle.display()
        )));
    }
    let graphs: Vec<CoevNetwork> = match args.task {
        Task::Binding => bundle.networks.clone(),
        Task::MetalType => {
            if !bundle.has_metal_labels() {
                return Err(Error::Input(format!(
                    "{}: bundle lacks metal labels required by the type task",
                    args.bundle.display()
                )));
            }
            let set = NetworkSet {
                networks: bundle.networks.clone(),
            };
            binder_induced_networks(&set)?.networks
        }
    };
    if graphs.is_empty() {
        return Err(Error::Input("no training graphs after preparation".to_string()));
    }
    let model_cfg = ModelConfig {
        n_layers: args.layers,
        d_in: bundle.feat_dim,
        d_hidden: args.hidden.unwrap_or_else(|| args.task.default_hidden()),
        n_classes: args.task.n_classes(),
        bias_enabled: true,
        seed: args.seed,
    };
    let train_cfg = TrainConfig {
        m_folds: args.folds,
        lr: args.lr,
        weight_decay: args
            .weight_decay
            .unwrap_or_else(|| args.task.default_weight_decay()),
        max_epochs: args.max_epochs,
        patience: args.patience,
        batch_graphs: args.batch_graphs,
        seed: args.seed,
    };
    let run = train_ensemble(&graphs, args.task, &model_cfg, &train_cfg, args.threads)?;
    write_checkpoint(&args.out_checkpoint, &run.checkpoint)?;
    Ok(run)
}

/// Inputs of `predict`.
#[derive(Clone, Debug)]
pub struct PredictArgs {
    pub contacts: PathBuf,
    pub fasta: PathBuf,
    pub embeddings: PathBuf,
    pub binding_ck: PathBuf,
    pub type_ck: PathBuf,
    pub threshold: f64,
    pub out_report: PathBuf,
}

fn load_chain_inputs(
    contacts: &Path,
    fasta: &Path,
    embeddings: &Path,
) -> Result<(ChainSeq, Vec<crate::netbuild::ContactRecord>, EmbeddingTable)> {
    let contact_file = read_contacts(contacts)?;
    let chains = read_fasta(fasta)?;
    let chain = chains
        .into_iter()
        .find(|c| c.id == contact_file.chain_id)
        .ok_or_else(|| {
            Error::Input(format!(
                "{}: no FASTA record for chain {}",
                fasta.display(),
                contact_file.chain_id
            ))
        })?;
    if contact_file.length != chain.len() {
        return Err(Error::Input(format!(
            "{}: header length {} does not match sequence length {}",
            contacts.display(),
            contact_file.length,
            chain.len()
        )));
    }
    let table = read_embeddings(embeddings)?;
    if table.chain_id != chain.id {
        return Err(Error::Input(format!(
            "{}: embedding file is for chain {}, contacts are for chain {}",
            embeddings.display(),
            table.chain_id,
            chain.id
        )));
    }
    if table.matrix.rows() != chain.len() {
        return Err(Error::Input(format!(
            "{}: {} embedding rows for a {}-residue chain",
            embeddings.display(),
            table.matrix.rows(),
            chain.len()
        )));
    }
    Ok((chain, contact_file.records, table))
}

/// Runs the full two-stage pipeline on one chain and writes the report.
pub fn cmd_predict(args: &PredictArgs) -> Result<PredictionReport> {
    let (chain, contacts, table) = load_chain_inputs(&args.contacts, &args.fasta, &args.embeddings)?;
    let binding_ck = read_checkpoint(&args.binding_ck)?;
    let type_ck = read_checkpoint(&args.type_ck)?;
    for (name, ck) in [("binding", &binding_ck), ("type", &type_ck)] {
        if ck.model_config.d_in != table.dim() {
            return Err(Error::Input(format!(
                "{name} checkpoint expects feature dim {}, embeddings have {}",
                ck.model_config.d_in,
                table.dim()
            )));
        }
    }
    let report = full_predict(
        &chain,
        &contacts,
        &table,
        &binding_ck,
        &type_ck,
        args.threshold,
    )?;
    write_report(&args.out_report, &report)?;
    Ok(report)
}

/// Inputs of `evaluate`.
#[derive(Clone, Debug)]
pub struct EvaluateArgs {
    pub report: PathBuf,
    pub labels: PathBuf,
    pub out_metrics: Option<PathBuf>,
}

/// Scores a report against truth labels and writes the metrics file.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<PipelineMetrics> {
    let report = read_report(&args.report)?;
    let labels = read_labels(&args.labels)?;
    let mut chains: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    chains.insert(report.chain_id.as_str());
    for p in &report.predictions {
        chains.insert(p.chain_id.as_str());
    }
    let truth: Vec<ResidueTruth> = labels
        .records
        .iter()
        .filter(|r| chains.contains(r.chain_id.as_str()))
        .map(|r| ResidueTruth {
            chain_id: r.chain_id.clone(),
            index: r.index,
            binding: r.binding,
            metal: r.metal,
        })
        .collect();
    if truth.is_empty() {
        return Err(Error::Input(format!(
            "{}: no labels for chain(s) {:?}",
            args.labels.display(),
            chains
        )));
    }
    let metrics = pipeline_metrics(&truth, &report.predictions)?;
    if let Some(out) = &args.out_metrics {
        std::fs::write(out, render_metrics(&metrics)).map_err(|e| Error::io(out, e))?;
    }
    Ok(metrics)
}

/// Inputs of `gen-synthetic`.
#[derive(Clone, Debug)]
pub struct GenSyntheticArgs {
    pub chains: usize,
    pub seed: u64,
    pub dim: usize,
    pub out_dir: PathBuf,
}

/// Summary of a generated corpus.
#[derive(Clone, Copy, Debug)]
pub struct SynthSummary {
    pub chains: usize,
    pub labeled_residues: usize,
    pub binders: usize,
}

pub fn cmd_gen_synthetic(args: &GenSyntheticArgs) -> Result<SynthSummary> {
    let corpus = generate(&SynthConfig {
        chains: args.chains,
        seed: args.seed,
        feat_dim: args.dim,
    })?;
    write_corpus(&args.out_dir, &corpus)?;
    Ok(SynthSummary {
        chains: corpus.chains.len(),
        labeled_residues: corpus.labels.records.len(),
        binders: corpus.labels.records.iter().filter(|r| r.binding).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_dir(chains: usize, seed: u64) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        cmd_gen_synthetic(&GenSyntheticArgs {
            chains,
            seed,
            dim: 16,
            out_dir: dir.path().to_path_buf(),
        })
        .unwrap();
        dir
    }

    fn build_args(dir: &Path, labeled: bool, out: PathBuf) -> BuildGraphsArgs {
        BuildGraphsArgs {
            contacts_dir: dir.join("contacts"),
            fasta: dir.join("chains.fasta"),
            embeddings_dir: dir.join("embeddings"),
            labels: labeled.then(|| dir.join("labels.tsv")),
            threshold: 0.1,
            out,
        }
    }

    #[test]
    fn build_graphs_counts_match_the_bundle() {
        let dir = corpus_dir(6, 13);
        let out = dir.path().join("graphs.bundle");
        let counts = cmd_build_graphs(&build_args(dir.path(), true, out.clone())).unwrap();
        let bundle = read_bundle(&out).unwrap();
        assert_eq!(counts.graphs, bundle.networks.len());
        assert_eq!(counts.residues, bundle.total_nodes());
        assert_eq!(counts.binders, bundle.total_binders());
        assert!(counts.graphs >= 6, "each chain plants several groups");
        // labeled corpus: every network carries labels
        assert!(bundle.has_binding_labels());
        assert!(bundle.has_metal_labels());
    }

    #[test]
    fn threshold_one_keeps_no_graphs() {
        let dir = corpus_dir(3, 14);
        let out = dir.path().join("graphs.bundle");
        let mut args = build_args(dir.path(), false, out);
        args.threshold = 1.0;
        let counts = cmd_build_graphs(&args).unwrap();
        assert_eq!(counts.graphs, 0);
        assert_eq!(counts.residues, 0);
    }

    #[test]
    fn unlabeled_bundle_is_rejected_by_train() {
        let dir = corpus_dir(4, 15);
        let bundle_path = dir.path().join("graphs.bundle");
        cmd_build_graphs(&build_args(dir.path(), false, bundle_path.clone())).unwrap();
        let err = cmd_train(&TrainArgs {
            bundle: bundle_path,
            task: Task::Binding,
            folds: 2,
            lr: 0.001,
            weight_decay: None,
            hidden: Some(8),
            layers: 2,
            max_epochs: 3,
            patience: 2,
            batch_graphs: 8,
            seed: 0,
            out_checkpoint: dir.path().join("ck.mbgn"),
            threads: 1,
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
