//! Graph-bundle binary format: the networks produced by `build-graphs`,
//! with feature rows (32-bit floats) and optional labels.
//!
//! Layout (all integers little-endian):
//!   magic `MBGB`, u32 version,
//!   u32 graph_count, u32 feat_dim, u8 has_binding, u8 has_metal,
//!   then per graph: u16 chain-id length + bytes, u32 n_nodes, u32 n_edges,
//!   per node (u32 residue_index, u8 amino_acid), optional n_nodes binding
//!   bytes, optional n_nodes metal bytes (255 = none), per edge (u32, u32)
//!   local indices with a < b, then n_nodes*feat_dim f32 features.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::bytes::ByteReader;
use crate::netbuild::{is_standard_aa, CoevNetwork, NetworkSet, ResidueRef};
use crate::numcore::DenseMatrix;
use crate::pipeline::MetalType;

pub const BUNDLE_MAGIC: &[u8; 4] = b"MBGB";
pub const BUNDLE_VERSION: u32 = 1;

/// A set of networks plus their shared feature dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphBundle {
    pub feat_dim: usize,
    pub networks: Vec<CoevNetwork>,
}

impl GraphBundle {
    pub fn new(feat_dim: usize, networks: Vec<CoevNetwork>) -> Result<Self> {
        let bundle = GraphBundle { feat_dim, networks };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn has_binding_labels(&self) -> bool {
        self.networks
            .first()
            .map(|n| n.binding_labels.is_some())
            .unwrap_or(false)
    }

    pub fn has_metal_labels(&self) -> bool {
        self.networks
            .first()
            .map(|n| n.metal_labels.is_some())
            .unwrap_or(false)
    }

    pub fn total_nodes(&self) -> usize {
        self.networks.iter().map(|n| n.node_count()).sum()
    }

    pub fn total_binders(&self) -> Option<usize> {
        self.has_binding_labels().then(|| {
            self.networks
                .iter()
                .map(|n| {
                    n.binding_labels
                        .as_ref()
                        .map(|b| b.iter().filter(|&&x| x).count())
                        .unwrap_or(0)
                })
                .sum()
        })
    }

    fn validate(&self) -> Result<()> {
        let has_binding = self.has_binding_labels();
        let has_metal = self.has_metal_labels();
        let mut seen = std::collections::BTreeSet::new();
        for net in &self.networks {
            if net.features.shape() != (net.node_count(), self.feat_dim) {
                return Err(Error::Input(format!(
                    "network in chain {}: feature matrix {}x{} does not match {} nodes x dim {}",
                    net.chain_id,
                    net.features.rows(),
                    net.features.cols(),
                    net.node_count(),
                    self.feat_dim
                )));
            }
            if net.binding_labels.is_some() != has_binding
                || net.metal_labels.is_some() != has_metal
            {
                return Err(Error::Input(
                    "bundle requires uniform label presence across networks".to_string(),
                ));
            }
            if let Some(b) = &net.binding_labels {
                if b.len() != net.node_count() {
                    return Err(Error::Input("binding label count mismatch".to_string()));
                }
            }
            if let Some(m) = &net.metal_labels {
                if m.len() != net.node_count() {
                    return Err(Error::Input("metal label count mismatch".to_string()));
                }
            }
            for node in &net.nodes {
                if node.chain_id != net.chain_id {
                    return Err(Error::Input(format!(
                        "node chain {} differs from network chain {}",
                        node.chain_id, net.chain_id
                    )));
                }
                if !seen.insert((net.chain_id.clone(), node.index)) {
                    return Err(Error::Input(format!(
                        "residue {}:{} appears in two networks",
                        net.chain_id, node.index
                    )));
                }
            }
            for &(a, b) in &net.edges {
                if a >= b || b >= net.node_count() {
                    return Err(Error::Input(format!(
                        "bad edge ({a},{b}) in a {}-node network",
                        net.node_count()
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn render_bundle(bundle: &GraphBundle) -> Result<Vec<u8>> {
    bundle.validate()?;
    let has_binding = bundle.has_binding_labels();
    let has_metal = bundle.has_metal_labels();
    let mut out = Vec::new();
    out.extend_from_slice(BUNDLE_MAGIC);
    out.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
    out.extend_from_slice(&(bundle.networks.len() as u32).to_le_bytes());
    out.extend_from_slice(&(bundle.feat_dim as u32).to_le_bytes());
    out.push(has_binding as u8);
    out.push(has_metal as u8);
    for net in &bundle.networks {
        let chain = net.chain_id.as_bytes();
        if chain.len() > u16::MAX as usize {
            return Err(Error::Input("chain id longer than 65535 bytes".to_string()));
        }
        out.extend_from_slice(&(chain.len() as u16).to_le_bytes());
        out.extend_from_slice(chain);
        out.extend_from_slice(&(net.node_count() as u32).to_le_bytes());
        out.extend_from_slice(&(net.edge_count() as u32).to_le_bytes());
        for node in &net.nodes {
            out.extend_from_slice(&(node.index as u32).to_le_bytes());
            out.push(node.amino_acid as u8);
        }
        if let Some(b) = &net.binding_labels {
            out.extend(b.iter().map(|&x| x as u8));
        }
        if let Some(m) = &net.metal_labels {
            out.extend(m.iter().map(|x| x.unwrap_or(255)));
        }
        for &(a, b) in &net.edges {
            out.extend_from_slice(&(a as u32).to_le_bytes());
            out.extend_from_slice(&(b as u32).to_le_bytes());
        }
        for v in net.features.data() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_bundle(path: &Path, bundle: &GraphBundle) -> Result<()> {
    std::fs::write(path, render_bundle(bundle)?).map_err(|e| Error::io(path, e))
}

pub fn parse_bundle(bytes: &[u8], path: &str) -> Result<GraphBundle> {
    let fail = |msg: String| Error::Input(format!("{path}: {msg}"));
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4).map_err(&fail)?;
    if magic != BUNDLE_MAGIC {
        return Err(fail("bad magic, expected MBGB".to_string()));
    }
    let version = r.u32().map_err(&fail)?;
    if version != BUNDLE_VERSION {
        return Err(fail(format!("unsupported bundle version {version}")));
    }
    let graph_count = r.u32().map_err(&fail)? as usize;
    let feat_dim = r.u32().map_err(&fail)? as usize;
    let has_binding = r.u8().map_err(&fail)? != 0;
    let has_metal = r.u8().map_err(&fail)? != 0;

    let mut networks = Vec::with_capacity(graph_count);
    for _ in 0..graph_count {
        let chain_len = r.u16().map_err(&fail)? as usize;
        let chain_bytes = r.take(chain_len).map_err(&fail)?;
        let chain_id = std::str::from_utf8(chain_bytes)
            .map_err(|_| fail("chain id is not valid UTF-8".to_string()))?
            .to_string();
        let n_nodes = r.u32().map_err(&fail)? as usize;
        let n_edges = r.u32().map_err(&fail)? as usize;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let index = r.u32().map_err(&fail)? as usize;
            let aa = r.u8().map_err(&fail)? as char;
            if !is_standard_aa(aa) {
                return Err(fail(format!(
                    "offset {}: invalid amino-acid byte {aa:?}",
                    r.offset() - 1
                )));
            }
            nodes.push(ResidueRef {
                chain_id: chain_id.clone(),
                index,
                amino_acid: aa,
            });
        }
        let binding_labels = if has_binding {
            let mut b = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                match r.u8().map_err(&fail)? {
                    0 => b.push(false),
                    1 => b.push(true),
                    other => {
                        return Err(fail(format!("bad binding label byte {other}")));
                    }
                }
            }
            Some(b)
        } else {
            None
        };
        let metal_labels = if has_metal {
            let mut m = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                match r.u8().map_err(&fail)? {
                    255 => m.push(None),
                    id if (id as usize) < MetalType::COUNT => m.push(Some(id)),
                    other => return Err(fail(format!("bad metal label byte {other}"))),
                }
            }
            Some(m)
        } else {
            None
        };
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let a = r.u32().map_err(&fail)? as usize;
            let b = r.u32().map_err(&fail)? as usize;
            edges.push((a, b));
        }
        let mut data = Vec::with_capacity(n_nodes * feat_dim);
        for _ in 0..n_nodes * feat_dim {
            let v = r.f32().map_err(&fail)?;
            if !v.is_finite() {
                return Err(fail("non-finite feature value".to_string()));
            }
            data.push(v as f64);
        }
        networks.push(CoevNetwork {
            chain_id,
            nodes,
            edges,
            features: DenseMatrix::from_vec(n_nodes, feat_dim, data)?,
            binding_labels,
            metal_labels,
        });
    }
    r.expect_eof().map_err(&fail)?;
    GraphBundle::new(feat_dim, networks)
}

pub fn read_bundle(path: &Path) -> Result<GraphBundle> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_bundle(&bytes, &path.display().to_string())
}

/// Networks wrapped back into a `NetworkSet` for the graph operations.
impl From<GraphBundle> for NetworkSet {
    fn from(b: GraphBundle) -> NetworkSet {
        NetworkSet {
            networks: b.networks,
        }
    }
}
