//! Co-evolved residue network construction: CHED pair extraction from contact
//! maps, connected-component assembly, embedding attachment, and reassembly
//! of predicted binders into second-stage networks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;

/// The 20 standard one-letter amino-acid codes.
pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

/// The residues classified by this pipeline: Cys, His, Glu, Asp.
pub const CHED: [char; 4] = ['C', 'H', 'E', 'D'];

pub fn is_standard_aa(c: char) -> bool {
    AMINO_ACIDS.contains(c)
}

pub fn is_ched(c: char) -> bool {
    CHED.contains(&c)
}

/// A residue position within a named chain. Indexing is 0-based everywhere.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResidueRef {
    pub chain_id: String,
    pub index: usize,
    pub amino_acid: char,
}

/// An undirected contact between two residues of one chain, stored with
/// a < b and a co-evolution score in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactRecord {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

impl ContactRecord {
    /// Normalizes endpoint order; rejects self-contacts and invalid scores.
    pub fn new(a: usize, b: usize, score: f64) -> Result<Self> {
        if a == b {
            return Err(Error::Input(format!("self-contact at residue {a}")));
        }
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(Error::Input(format!(
                "contact ({a},{b}) has score {score}, expected a finite value in [0,1]"
            )));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Ok(ContactRecord { a, b, score })
    }
}

/// A chain identifier with its validated one-letter sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSeq {
    pub id: String,
    pub sequence: String,
}

impl ChainSeq {
    pub fn new(id: impl Into<String>, sequence: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let sequence = sequence.into();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::Input(format!("invalid chain id {id:?}")));
        }
        for (i, c) in sequence.chars().enumerate() {
            if !is_standard_aa(c) {
                return Err(Error::Input(format!(
                    "chain {id}: invalid amino-acid code {c:?} at position {i}"
                )));
            }
        }
        Ok(ChainSeq { id, sequence })
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Amino acid at 0-based position `i`, bounds-checked.
    pub fn aa(&self, i: usize) -> Result<char> {
        self.sequence.as_bytes().get(i).map(|&b| b as char).ok_or_else(|| {
            Error::Input(format!(
                "chain {}: residue index {} out of range (length {})",
                self.id,
                i,
                self.len()
            ))
        })
    }

    /// Indices of the CHED residues in this chain.
    pub fn ched_indices(&self) -> Vec<usize> {
        self.sequence
            .chars()
            .enumerate()
            .filter(|(_, c)| is_ched(*c))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A connected network of co-evolved residues with per-node feature rows.
///
/// `features` has one row per node; its width is 0 until embeddings are
/// attached. Labels are optional and parallel to `nodes`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoevNetwork {
    pub chain_id: String,
    pub nodes: Vec<ResidueRef>,
    /// Local node-index pairs, each stored with a < b, sorted, deduplicated.
    pub edges: Vec<(usize, usize)>,
    pub features: DenseMatrix,
    pub binding_labels: Option<Vec<bool>>,
    /// Metal type ids 0-10; None for nodes without a metal annotation.
    pub metal_labels: Option<Vec<Option<u8>>>,
}

impl CoevNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Smallest residue index in the network, used for deterministic ordering.
    pub fn min_residue_index(&self) -> usize {
        self.nodes.iter().map(|n| n.index).min().unwrap_or(usize::MAX)
    }

    /// Symmetric neighbor lists (sorted, no self-loops).
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// An ordered collection of node-disjoint networks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkSet {
    pub networks: Vec<CoevNetwork>,
}

impl NetworkSet {
    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.networks.iter().map(|n| n.node_count()).sum()
    }
}

/// A chain's per-residue embedding matrix: row i is residue i's feature row.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub chain_id: String,
    pub matrix: DenseMatrix,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !threshold.is_finite() || threshold <= 0.0 || threshold > 1.0 {
        return Err(Error::Input(format!(
            "contact threshold must lie in (0, 1], got {threshold}"
        )));
    }
    Ok(())
}

/// Keeps exactly the contacts with score strictly above `threshold` whose
/// endpoints are both CHED residues. Non-CHED contacts are dropped silently;
/// out-of-range indices are an input error naming the offending record.
/// Output is sorted by (a, b).
pub fn extract_ched_pairs(
    contacts: &[ContactRecord],
    chain: &ChainSeq,
    threshold: f64,
) -> Result<Vec<ContactRecord>> {
    check_threshold(threshold)?;
    let mut kept = Vec::new();
    for rec in contacts {
        let aa_a = chain.aa(rec.a).map_err(|_| {
            Error::Input(format!(
                "contact ({},{}) references residue {} beyond chain {} length {}",
                rec.a,
                rec.b,
                rec.a,
                chain.id,
                chain.len()
            ))
        })?;
        let aa_b = chain.aa(rec.b).map_err(|_| {
            Error::Input(format!(
                "contact ({},{}) references residue {} beyond chain {} length {}",
                rec.a,
                rec.b,
                rec.b,
                chain.id,
                chain.len()
            ))
        })?;
        if rec.score > threshold && is_ched(aa_a) && is_ched(aa_b) {
            kept.push(*rec);
        }
    }
    kept.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    Ok(kept)
}

/// Groups local edges (keyed by residue index) into connected components and
/// materializes one `CoevNetwork` per component. `index_aa` supplies the
/// amino acid per residue index.
fn components_to_networks(
    chain_id: &str,
    mut residue_indices: Vec<usize>,
    edges_by_residue: &[(usize, usize)],
    aa_of: impl Fn(usize) -> Result<char>,
) -> Result<NetworkSet> {
    residue_indices.sort_unstable();
    residue_indices.dedup();
    let slot_of: BTreeMap<usize, usize> = residue_indices
        .iter()
        .enumerate()
        .map(|(slot, &idx)| (idx, slot))
        .collect();

    let mut uf = UnionFind::new(residue_indices.len());
    for &(a, b) in edges_by_residue {
        uf.union(slot_of[&a], slot_of[&b]);
    }

    // group slots by component root; BTreeMap keyed by smallest member keeps
    // the network order deterministic
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut root_to_min: BTreeMap<usize, usize> = BTreeMap::new();
    for (slot, &idx) in residue_indices.iter().enumerate() {
        let root = uf.find(slot);
        let entry = root_to_min.entry(root).or_insert(idx);
        if idx < *entry {
            *entry = idx;
        }
    }
    for (slot, &idx) in residue_indices.iter().enumerate() {
        let root = uf.find(slot);
        groups.entry(root_to_min[&root]).or_default().push(idx);
    }

    let mut networks = Vec::with_capacity(groups.len());
    for (_, mut members) in groups {
        members.sort_unstable();
        let local_of: BTreeMap<usize, usize> = members
            .iter()
            .enumerate()
            .map(|(local, &idx)| (idx, local))
            .collect();
        let mut nodes = Vec::with_capacity(members.len());
        for &idx in &members {
            nodes.push(ResidueRef {
                chain_id: chain_id.to_string(),
                index: idx,
                amino_acid: aa_of(idx)?,
            });
        }
        let mut edges: Vec<(usize, usize)> = edges_by_residue
            .iter()
            .filter(|(a, _)| local_of.contains_key(a))
            .map(|&(a, b)| {
                let (x, y) = (local_of[&a], local_of[&b]);
                if x < y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let rows = nodes.len();
        networks.push(CoevNetwork {
            chain_id: chain_id.to_string(),
            nodes,
            edges,
            features: DenseMatrix::zeros(rows, 0),
            binding_labels: None,
            metal_labels: None,
        });
    }
    Ok(NetworkSet { networks })
}

/// Assembles CHED pairs into their connected components (Eq.-style stage-1
/// networks). Networks are sorted by smallest residue index, nodes by index.
pub fn assemble_networks(pairs: &[ContactRecord], chain: &ChainSeq) -> Result<NetworkSet> {
    let mut residues = Vec::with_capacity(pairs.len() * 2);
    let mut edges = Vec::with_capacity(pairs.len());
    for rec in pairs {
        chain.aa(rec.a)?;
        chain.aa(rec.b)?;
        residues.push(rec.a);
        residues.push(rec.b);
        edges.push((rec.a, rec.b));
    }
    components_to_networks(&chain.id, residues, &edges, |i| chain.aa(i))
}

/// Copies the table row of each node into the network feature matrix.
/// All other fields are unchanged.
pub fn attach_embeddings(nets: &NetworkSet, table: &EmbeddingTable) -> Result<NetworkSet> {
    let mut out = nets.clone();
    for net in &mut out.networks {
        if net.chain_id != table.chain_id {
            return Err(Error::Input(format!(
                "embedding table is for chain {} but network belongs to chain {}",
                table.chain_id, net.chain_id
            )));
        }
        let mut features = DenseMatrix::zeros(net.nodes.len(), table.dim());
        for (row, node) in net.nodes.iter().enumerate() {
            if node.index >= table.matrix.rows() {
                return Err(Error::Input(format!(
                    "chain {}: residue index {} exceeds embedding table with {} rows",
                    net.chain_id,
                    node.index,
                    table.matrix.rows()
                )));
            }
            features
                .row_mut(row)
                .copy_from_slice(table.matrix.row(node.index));
        }
        net.features = features;
    }
    Ok(out)
}

/// Rebuilds networks over predicted binders: nodes are exactly `positives`,
/// edges are the contacts above `threshold` with both endpoints positive, and
/// isolated positives become singleton networks. Features are attached
/// afterwards via `attach_embeddings`.
pub fn build_stage2_networks(
    positives: &[ResidueRef],
    contacts: &[ContactRecord],
    threshold: f64,
) -> Result<NetworkSet> {
    check_threshold(threshold)?;
    if positives.is_empty() {
        return Ok(NetworkSet::default());
    }
    let chain_id = positives[0].chain_id.clone();
    let mut aa_by_index: BTreeMap<usize, char> = BTreeMap::new();
    for p in positives {
        if p.chain_id != chain_id {
            return Err(Error::Input(format!(
                "positives span chains {} and {}; expected a single chain",
                chain_id, p.chain_id
            )));
        }
        if aa_by_index.insert(p.index, p.amino_acid).is_some() {
            return Err(Error::Input(format!(
                "duplicate positive residue {} in chain {}",
                p.index, chain_id
            )));
        }
    }
    let edges: Vec<(usize, usize)> = contacts
        .iter()
        .filter(|c| {
            c.score > threshold
                && aa_by_index.contains_key(&c.a)
                && aa_by_index.contains_key(&c.b)
        })
        .map(|c| (c.a, c.b))
        .collect();
    let residues: Vec<usize> = aa_by_index.keys().copied().collect();
    components_to_networks(&chain_id, residues, &edges, |i| {
        aa_by_index.get(&i).copied().ok_or_else(|| {
            Error::Input(format!("residue {i} missing from positives"))
        })
    })
}

/// Derives second-stage training networks from binding-labeled networks: the
/// subgraph induced on binder nodes, split into components with singletons
/// kept. Feature rows and metal labels follow their nodes.
pub fn binder_induced_networks(nets: &NetworkSet) -> Result<NetworkSet> {
    let mut out = Vec::new();
    for net in &nets.networks {
        let binding = net.binding_labels.as_ref().ok_or_else(|| {
            Error::Input(format!(
                "network in chain {} has no binding labels",
                net.chain_id
            ))
        })?;
        if binding.len() != net.nodes.len() {
            return Err(Error::Input(format!(
                "chain {}: {} binding labels for {} nodes",
                net.chain_id,
                binding.len(),
                net.nodes.len()
            )));
        }
        let keep: Vec<usize> = (0..net.nodes.len()).filter(|&i| binding[i]).collect();
        if keep.is_empty() {
            continue;
        }
        let local_of: BTreeMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();

        let mut uf = UnionFind::new(keep.len());
        for &(a, b) in &net.edges {
            if let (Some(&x), Some(&y)) = (local_of.get(&a), local_of.get(&b)) {
                uf.union(x, y);
            }
        }
        // group binder nodes by component, keyed by smallest residue index
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (new, &old) in keep.iter().enumerate() {
            by_root.entry(uf.find(new)).or_default().push(old);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (_, members) in by_root {
            let min_index = members.iter().map(|&m| net.nodes[m].index).min().unwrap();
            groups.insert(min_index, members);
        }

        for (_, members) in groups {
            let sub_local: BTreeMap<usize, usize> = members
                .iter()
                .enumerate()
                .map(|(new, &old)| (old, new))
                .collect();
            let nodes: Vec<ResidueRef> =
                members.iter().map(|&m| net.nodes[m].clone()).collect();
            let mut edges: Vec<(usize, usize)> = net
                .edges
                .iter()
                .filter(|(a, b)| sub_local.contains_key(a) && sub_local.contains_key(b))
                .map(|&(a, b)| {
                    let (x, y) = (sub_local[&a], sub_local[&b]);
                    if x < y {
                        (x, y)
                    } else {
                        (y, x)
                    }
                })
                .collect();
            edges.sort_unstable();
            edges.dedup();
            let mut features = DenseMatrix::zeros(members.len(), net.features.cols());
            for (row, &m) in members.iter().enumerate() {
                features.row_mut(row).copy_from_slice(net.features.row(m));
            }
            let metal_labels = net
                .metal_labels
                .as_ref()
                .map(|ml| members.iter().map(|&m| ml[m]).collect());
            out.push(CoevNetwork {
                chain_id: net.chain_id.clone(),
                nodes,
                edges,
                features,
                binding_labels: Some(vec![true; members.len()]),
                metal_labels,
            });
        }
    }
    Ok(NetworkSet { networks: out })
}
