//! Synthetic corpus generator for desk-scale end-to-end validation.
//!
//! Per chain it plants disjoint CHED groups connected by above-threshold
//! contacts. Every grouped residue carries a hidden activity bit written into
//! feature coordinate 0 and a group-level metal type written into coordinate
//! 1 + type id, both under bounded uniform noise. A residue is a binder iff
//! its own bit is set AND at least one co-evolved neighbor's bit is set, so
//! a per-node classifier cannot reach the label rule without aggregation.
//! Connected binders share their group's metal, and group metals follow a
//! skewed frequency profile.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{write_contacts, write_embeddings, write_fasta, write_labels, ContactFile};
use crate::netbuild::{ChainSeq, ContactRecord, EmbeddingTable, CHED};
use crate::numcore::DenseMatrix;
use crate::pipeline::MetalType;
use crate::rng::Rng;

/// Signal magnitude on coordinate 0 and on the metal coordinate.
pub const SIGNAL_GAIN: f64 = 1.0;
/// Uniform feature noise is drawn from [-NOISE, NOISE].
pub const NOISE: f64 = 0.3;
/// Decision level separating active from inactive signal coordinates; exact
/// because NOISE < ACTIVE_LEVEL < SIGNAL_GAIN - NOISE.
pub const ACTIVE_LEVEL: f64 = 0.5;
/// Probability that a grouped residue's activity bit is set.
const P_ACTIVE: f64 = 0.5;
/// Per-position probability of emitting a CHED residue.
const P_CHED: f64 = 0.55;

/// Relative frequencies of the 11 metal classes, most to least common.
const METAL_WEIGHTS: [f64; MetalType::COUNT] = [
    0.30, 0.18, 0.13, 0.10, 0.08, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01,
];

const TAG_CHAIN: u64 = 0xC4A1;

/// Generator parameters.
#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub chains: usize,
    pub seed: u64,
    pub feat_dim: usize,
}

/// One generated chain: sequence, contact map, and embedding table.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthChain {
    pub chain: ChainSeq,
    pub contacts: Vec<ContactRecord>,
    pub embedding: EmbeddingTable,
}

/// A full generated corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub chains: Vec<SynthChain>,
    pub labels: crate::io::LabelTable,
}

const NON_CHED: [char; 16] = [
    'A', 'F', 'G', 'I', 'K', 'L', 'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'V', 'W', 'Y',
];

fn sample_metal(rng: &mut Rng) -> u8 {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (id, w) in METAL_WEIGHTS.iter().enumerate() {
        acc += w;
        if u < acc {
            return id as u8;
        }
    }
    (MetalType::COUNT - 1) as u8
}

struct ChainDraft {
    sequence: String,
    groups: Vec<Vec<usize>>,
    group_edges: Vec<(usize, usize, f64)>,
    active: Vec<bool>,
    group_metal: Vec<u8>,
}

fn draft_chain(rng: &mut Rng) -> ChainDraft {
    let length = 40 + rng.below(41);
    let sequence: String = (0..length)
        .map(|_| {
            if rng.next_f64() < P_CHED {
                CHED[rng.below(4)]
            } else {
                NON_CHED[rng.below(16)]
            }
        })
        .collect();
    let mut ched: Vec<usize> = sequence
        .chars()
        .enumerate()
        .filter(|(_, c)| CHED.contains(c))
        .map(|(i, _)| i)
        .collect();
    rng.shuffle(&mut ched);

    let target_groups = 3 + rng.below(3);
    let mut groups = Vec::new();
    let mut cursor = 0;
    while groups.len() < target_groups && cursor + 2 <= ched.len() {
        let size = (2 + rng.below(3)).min(ched.len() - cursor);
        if size < 2 {
            break;
        }
        groups.push(ched[cursor..cursor + size].to_vec());
        cursor += size;
    }

    let mut group_edges = Vec::new();
    for group in &groups {
        for pair in group.windows(2) {
            group_edges.push((pair[0], pair[1], rng.uniform(0.15, 0.95)));
        }
        if group.len() >= 3 && rng.next_f64() < 0.4 {
            group_edges.push((group[0], group[2], rng.uniform(0.15, 0.95)));
        }
    }

    let mut active = vec![false; length];
    for group in &groups {
        for &i in group {
            active[i] = rng.next_f64() < P_ACTIVE;
        }
    }
    let group_metal: Vec<u8> = groups.iter().map(|_| sample_metal(rng)).collect();
    ChainDraft {
        sequence,
        groups,
        group_edges,
        active,
        group_metal,
    }
}

/// Deterministic corpus generation; the same config reproduces the same
/// corpus byte for byte.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.chains == 0 {
        return Err(Error::Input("need at least one chain".to_string()));
    }
    // coordinate 0 carries the activity signal, 1..=11 the metal classes
    if cfg.feat_dim < 12 {
        return Err(Error::Input(format!(
            "feature dim must be >= 12, got {}",
            cfg.feat_dim
        )));
    }
    let mut chains = Vec::with_capacity(cfg.chains);
    let mut label_records = Vec::new();
    for c in 0..cfg.chains {
        let mut rng = Rng::stream(cfg.seed, &[TAG_CHAIN, c as u64]);
        let draft = draft_chain(&mut rng);
        let chain_id = format!("c{c:05}");
        let length = draft.sequence.len();

        // contacts: the planted group edges plus decoys that the CHED/score
        // filter must drop
        let mut used: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
        let mut contacts = Vec::new();
        for &(a, b, score) in &draft.group_edges {
            let key = (a.min(b), a.max(b));
            if used.insert(key) {
                contacts.push(ContactRecord::new(a, b, score)?);
            }
        }
        let ched_positions: Vec<usize> = draft
            .sequence
            .chars()
            .enumerate()
            .filter(|(_, ch)| CHED.contains(ch))
            .map(|(i, _)| i)
            .collect();
        for _ in 0..3 {
            // sub-threshold CHED-CHED noise
            if ched_positions.len() >= 2 {
                let a = ched_positions[rng.below(ched_positions.len())];
                let b = ched_positions[rng.below(ched_positions.len())];
                let key = (a.min(b), a.max(b));
                if a != b && used.insert(key) {
                    contacts.push(ContactRecord::new(a, b, rng.uniform(0.01, 0.099))?);
                }
            }
            // contacts touching a non-CHED residue, any score
            let non_ched: Vec<usize> = (0..length)
                .filter(|&i| !CHED.contains(&draft.sequence.as_bytes()[i].into()))
                .collect();
            if !non_ched.is_empty() {
                let a = non_ched[rng.below(non_ched.len())];
                let b = rng.below(length);
                let key = (a.min(b), a.max(b));
                if a != b && used.insert(key) {
                    contacts.push(ContactRecord::new(a, b, rng.next_f64())?);
                }
            }
        }
        contacts.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));

        // neighbor lists over the planted (above-threshold CHED) edges only
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); length];
        for &(a, b, _) in &draft.group_edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }

        // features, rounded through f32 so files carry the exact values
        let mut matrix = DenseMatrix::zeros(length, cfg.feat_dim);
        let mut group_of = vec![usize::MAX; length];
        for (g, group) in draft.groups.iter().enumerate() {
            for &i in group {
                group_of[i] = g;
            }
        }
        for i in 0..length {
            let row = matrix.row_mut(i);
            for v in row.iter_mut() {
                *v = rng.uniform(-NOISE, NOISE);
            }
            if group_of[i] != usize::MAX {
                if draft.active[i] {
                    row[0] += SIGNAL_GAIN;
                }
                row[1 + draft.group_metal[group_of[i]] as usize] += SIGNAL_GAIN;
            }
            for v in row.iter_mut() {
                *v = *v as f32 as f64;
            }
        }

        for (g, group) in draft.groups.iter().enumerate() {
            let mut members = group.clone();
            members.sort_unstable();
            for &i in &members {
                let binder =
                    draft.active[i] && neighbors[i].iter().any(|&j| draft.active[j]);
                label_records.push(crate::io::LabelRecord {
                    chain_id: chain_id.clone(),
                    index: i,
                    binding: binder,
                    metal: binder.then_some(draft.group_metal[g]),
                });
            }
        }

        chains.push(SynthChain {
            chain: ChainSeq::new(chain_id.clone(), draft.sequence)?,
            contacts,
            embedding: EmbeddingTable {
                chain_id,
                matrix,
            },
        });
    }
    Ok(SynthCorpus {
        chains,
        labels: crate::io::LabelTable::new(label_records)?,
    })
}

/// Writes the corpus layout:
///   <dir>/chains.fasta
///   <dir>/contacts/<chain>.contacts
///   <dir>/embeddings/<chain>.emb
///   <dir>/labels.tsv
pub fn write_corpus(dir: &Path, corpus: &SynthCorpus) -> Result<()> {
    let contacts_dir = dir.join("contacts");
    let embeddings_dir = dir.join("embeddings");
    std::fs::create_dir_all(&contacts_dir).map_err(|e| Error::io(&contacts_dir, e))?;
    std::fs::create_dir_all(&embeddings_dir).map_err(|e| Error::io(&embeddings_dir, e))?;

    let seqs: Vec<ChainSeq> = corpus.chains.iter().map(|c| c.chain.clone()).collect();
    write_fasta(&dir.join("chains.fasta"), &seqs)?;
    for c in &corpus.chains {
        write_contacts(
            &contacts_dir.join(format!("{}.contacts", c.chain.id)),
            &ContactFile {
                chain_id: c.chain.id.clone(),
                length: c.chain.len(),
                records: c.contacts.clone(),
            },
        )?;
        write_embeddings(
            &embeddings_dir.join(format!("{}.emb", c.chain.id)),
            &c.embedding,
        )?;
    }
    write_labels(&dir.join("labels.tsv"), &corpus.labels)
}
