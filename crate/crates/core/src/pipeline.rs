//! The end-to-end two-stage flow: binding calls over stage-1 networks,
//! reassembly of predicted binders into stage-2 networks, and one metal type
//! per predicted binder.

use crate::error::{Error, Result};
use crate::netbuild::{
    assemble_networks, attach_embeddings, build_stage2_networks, extract_ched_pairs, ChainSeq,
    ContactRecord, EmbeddingTable, NetworkSet, ResidueRef,
};
use crate::trainer::{ensemble_predict, EnsembleCheckpoint, Task};

/// Probability threshold for a positive binding call.
pub const BINDING_THRESHOLD: f64 = 0.5;

/// The 11 supported metal classes, in fixed id order 0-10.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetalType {
    Zn = 0,
    Ca = 1,
    Mg = 2,
    Mn = 3,
    Fe = 4,
    Sf4 = 5,
    Ni = 6,
    Cu = 7,
    Co = 8,
    FeS = 9,
    Fe3S = 10,
}

impl MetalType {
    pub const COUNT: usize = 11;

    pub fn all() -> [MetalType; Self::COUNT] {
        use MetalType::*;
        [Zn, Ca, Mg, Mn, Fe, Sf4, Ni, Cu, Co, FeS, Fe3S]
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::all()
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::Input(format!("metal type id {id} out of range 0-10")))
    }

    pub fn name(self) -> &'static str {
        match self {
            MetalType::Zn => "Zn",
            MetalType::Ca => "Ca",
            MetalType::Mg => "Mg",
            MetalType::Mn => "Mn",
            MetalType::Fe => "Fe",
            MetalType::Sf4 => "SF4",
            MetalType::Ni => "Ni",
            MetalType::Cu => "Cu",
            MetalType::Co => "Co",
            MetalType::FeS => "FeS",
            MetalType::Fe3S => "Fe3S",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown metal type {s:?}")))
    }
}

/// Binary metal-binding decision for one residue.
#[derive(Clone, Debug, PartialEq)]
pub struct BindingCall {
    pub residue: ResidueRef,
    /// Ensemble-averaged probability of the binding class.
    pub prob_binding: f64,
    /// prob_binding >= 0.5.
    pub call: bool,
}

/// Metal-type assignment for one predicted binder.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeCall {
    pub residue: ResidueRef,
    /// Ensemble-averaged probabilities over the 11 metal classes.
    pub probs: [f64; MetalType::COUNT],
    /// Argmax class; ties resolve to the lowest id.
    pub metal: MetalType,
}

pub use crate::eval::argmax;

fn check_task(ck: &EnsembleCheckpoint, expected: Task) -> Result<()> {
    if ck.task != expected || ck.model_config.n_classes != expected.n_classes() {
        return Err(Error::Input(format!(
            "checkpoint is a {}-class {} ensemble, expected {} ({} classes)",
            ck.model_config.n_classes,
            ck.task.name(),
            expected.name(),
            expected.n_classes()
        )));
    }
    Ok(())
}

/// Runs the binding ensemble over every stage-1 network: one call per covered
/// residue, ordered by residue index. Residues outside every network receive
/// no call.
pub fn run_binding_stage(
    nets: &NetworkSet,
    ck: &EnsembleCheckpoint,
) -> Result<Vec<BindingCall>> {
    check_task(ck, Task::Binding)?;
    let mut calls = Vec::new();
    for net in &nets.networks {
        let probs = ensemble_predict(ck, net)?;
        for (i, node) in net.nodes.iter().enumerate() {
            let p = probs.get(i, 1);
            calls.push(BindingCall {
                residue: node.clone(),
                prob_binding: p,
                call: p >= BINDING_THRESHOLD,
            });
        }
    }
    calls.sort_by(|a, b| {
        (a.residue.chain_id.as_str(), a.residue.index)
            .cmp(&(b.residue.chain_id.as_str(), b.residue.index))
    });
    Ok(calls)
}

/// Builds stage-2 networks from the positive calls, re-attaches embeddings,
/// and assigns exactly one metal per predicted binder.
pub fn run_type_stage(
    calls: &[BindingCall],
    contacts: &[ContactRecord],
    table: &EmbeddingTable,
    ck: &EnsembleCheckpoint,
    threshold: f64,
) -> Result<(NetworkSet, Vec<TypeCall>)> {
    check_task(ck, Task::MetalType)?;
    let positives: Vec<ResidueRef> = calls
        .iter()
        .filter(|c| c.call)
        .map(|c| c.residue.clone())
        .collect();
    if positives.is_empty() {
        return Ok((NetworkSet::default(), Vec::new()));
    }
    let nets = build_stage2_networks(&positives, contacts, threshold)?;
    let nets = attach_embeddings(&nets, table)?;
    let mut type_calls = Vec::new();
    for net in &nets.networks {
        let probs = ensemble_predict(ck, net)?;
        for (i, node) in net.nodes.iter().enumerate() {
            let row = probs.row(i);
            let mut arr = [0.0; MetalType::COUNT];
            arr.copy_from_slice(row);
            type_calls.push(TypeCall {
                residue: node.clone(),
                probs: arr,
                metal: MetalType::from_id(argmax(row) as u8)?,
            });
        }
    }
    type_calls.sort_by(|a, b| {
        (a.residue.chain_id.as_str(), a.residue.index)
            .cmp(&(b.residue.chain_id.as_str(), b.residue.index))
    });
    Ok((nets, type_calls))
}

/// Node and edge listing of one network, by residue index.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSummary {
    pub residue_indices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl NetworkSummary {
    fn of(net: &crate::netbuild::CoevNetwork) -> NetworkSummary {
        NetworkSummary {
            residue_indices: net.nodes.iter().map(|n| n.index).collect(),
            edges: net
                .edges
                .iter()
                .map(|&(a, b)| (net.nodes[a].index, net.nodes[b].index))
                .collect(),
        }
    }
}

/// Everything `full_predict` produces for one chain; a pure function of its
/// inputs, rendered byte-identically by the report writer.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionReport {
    pub chain_id: String,
    pub chain_len: usize,
    pub stage1: Vec<NetworkSummary>,
    pub stage2: Vec<NetworkSummary>,
    pub binding_calls: Vec<BindingCall>,
    pub type_calls: Vec<TypeCall>,
    /// CHED residues with no co-evolution evidence (absent from every
    /// stage-1 network); they are not predicted.
    pub uncovered_ched: Vec<ResidueRef>,
    /// Present when no stage-1 network exists at all.
    pub no_network_reason: Option<String>,
}

/// The full two-stage prediction for one chain.
pub fn full_predict(
    chain: &ChainSeq,
    contacts: &[ContactRecord],
    table: &EmbeddingTable,
    binding_ck: &EnsembleCheckpoint,
    type_ck: &EnsembleCheckpoint,
    contact_threshold: f64,
) -> Result<PredictionReport> {
    if table.chain_id != chain.id {
        return Err(Error::Input(format!(
            "embedding table is for chain {}, sequence is chain {}",
            table.chain_id, chain.id
        )));
    }
    check_task(binding_ck, Task::Binding)?;
    check_task(type_ck, Task::MetalType)?;

    let pairs = extract_ched_pairs(contacts, chain, contact_threshold)?;
    let nets = assemble_networks(&pairs, chain)?;

    let covered: std::collections::BTreeSet<usize> = nets
        .networks
        .iter()
        .flat_map(|n| n.nodes.iter().map(|r| r.index))
        .collect();
    let uncovered_ched: Vec<ResidueRef> = chain
        .ched_indices()
        .into_iter()
        .filter(|i| !covered.contains(i))
        .map(|i| ResidueRef {
            chain_id: chain.id.clone(),
            index: i,
            amino_acid: chain.aa(i).expect("index from the chain itself"),
        })
        .collect();

    if nets.is_empty() {
        return Ok(PredictionReport {
            chain_id: chain.id.clone(),
            chain_len: chain.len(),
            stage1: Vec::new(),
            stage2: Vec::new(),
            binding_calls: Vec::new(),
            type_calls: Vec::new(),
            uncovered_ched,
            no_network_reason: Some(format!(
                "no co-evolved CHED pairs above threshold {contact_threshold}"
            )),
        });
    }

    let nets = attach_embeddings(&nets, table)?;
    let binding_calls = run_binding_stage(&nets, binding_ck)?;
    let (stage2_nets, type_calls) =
        run_type_stage(&binding_calls, contacts, table, type_ck, contact_threshold)?;

    Ok(PredictionReport {
        chain_id: chain.id.clone(),
        chain_len: chain.len(),
        stage1: nets.networks.iter().map(NetworkSummary::of).collect(),
        stage2: stage2_nets.networks.iter().map(NetworkSummary::of).collect(),
        binding_calls,
        type_calls,
        uncovered_ched,
        no_network_reason: None,
    })
}
