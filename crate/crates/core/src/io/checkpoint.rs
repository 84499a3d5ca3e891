//! Ensemble checkpoint binary format: magic `MBGN`, u32 format version, a
//! model-config block, per-model fold stats and parameter/batch-norm payloads
//! as 64-bit floats with dimension headers, and a trailing CRC-32 of the
//! payload. Any single corrupted byte fails the load.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gnn::{ModelConfig, SageLayer, SageModel};
use crate::io::bytes::ByteReader;
use crate::numcore::{BatchNormState, DenseMatrix, Parameter};
use crate::trainer::{EnsembleCheckpoint, FoldStats, Task};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MBGN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn render_checkpoint(ck: &EnsembleCheckpoint) -> Result<Vec<u8>> {
    if ck.models.len() != ck.fold_stats.len() || ck.models.is_empty() {
        return Err(Error::Input(format!(
            "checkpoint needs matching model and fold-stat counts, got {} and {}",
            ck.models.len(),
            ck.fold_stats.len()
        )));
    }
    let cfg = &ck.model_config;
    let mut payload = Vec::new();
    payload.push(match ck.task {
        Task::Binding => 0u8,
        Task::MetalType => 1u8,
    });
    payload.extend_from_slice(&(cfg.n_layers as u32).to_le_bytes());
    payload.extend_from_slice(&(cfg.d_in as u32).to_le_bytes());
    payload.extend_from_slice(&(cfg.d_hidden as u32).to_le_bytes());
    payload.extend_from_slice(&(cfg.n_classes as u32).to_le_bytes());
    payload.push(cfg.bias_enabled as u8);
    payload.extend_from_slice(&cfg.seed.to_le_bytes());
    payload.extend_from_slice(&(ck.models.len() as u32).to_le_bytes());
    for stats in &ck.fold_stats {
        payload.extend_from_slice(&stats.best_val_f1.to_le_bytes());
        payload.extend_from_slice(&stats.best_epoch.to_le_bytes());
        payload.extend_from_slice(&stats.epochs_run.to_le_bytes());
    }
    for model in &ck.models {
        if model.config.n_layers != cfg.n_layers
            || model.config.d_in != cfg.d_in
            || model.config.d_hidden != cfg.d_hidden
            || model.config.n_classes != cfg.n_classes
            || model.config.bias_enabled != cfg.bias_enabled
        {
            return Err(Error::Input(
                "ensemble members must share the checkpoint architecture".to_string(),
            ));
        }
        for (l, layer) in model.layers.iter().enumerate() {
            let (rows, cols) = layer.w_self.value.shape();
            payload.extend_from_slice(&(rows as u32).to_le_bytes());
            payload.extend_from_slice(&(cols as u32).to_le_bytes());
            push_f64s(&mut payload, layer.w_self.value.data());
            push_f64s(&mut payload, layer.w_neigh.value.data());
            // with bias enabled, only the final layer carries one
            let expect_bias = cfg.bias_enabled && l == cfg.n_layers - 1;
            match (&layer.bias, expect_bias) {
                (Some(bias), true) => push_f64s(&mut payload, bias.value.data()),
                (None, false) => {}
                _ => {
                    return Err(Error::Input(
                        "model bias layout does not match its config".to_string(),
                    ))
                }
            }
        }
        for bn in &model.bns {
            payload.extend_from_slice(&(bn.num_features() as u32).to_le_bytes());
            push_f64s(&mut payload, bn.gamma.value.data());
            push_f64s(&mut payload, bn.beta.value.data());
            push_f64s(&mut payload, &bn.running_mean);
            push_f64s(&mut payload, &bn.running_var);
            payload.extend_from_slice(&bn.momentum.to_le_bytes());
            payload.extend_from_slice(&bn.epsilon.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&payload);
    let mut out = Vec::with_capacity(8 + payload.len() + 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn write_checkpoint(path: &Path, ck: &EnsembleCheckpoint) -> Result<()> {
    std::fs::write(path, render_checkpoint(ck)?).map_err(|e| Error::io(path, e))
}

fn parse_payload(payload: &[u8]) -> std::result::Result<EnsembleCheckpoint, String> {
    let mut r = ByteReader::new(payload);
    let task = match r.u8()? {
        0 => Task::Binding,
        1 => Task::MetalType,
        other => return Err(format!("unknown task byte {other}")),
    };
    let n_layers = r.u32()? as usize;
    let d_in = r.u32()? as usize;
    let d_hidden = r.u32()? as usize;
    let n_classes = r.u32()? as usize;
    let bias_enabled = r.u8()? != 0;
    let seed = r.u64()?;
    let config = ModelConfig {
        n_layers,
        d_in,
        d_hidden,
        n_classes,
        bias_enabled,
        seed,
    };
    config.validate().map_err(|e| e.to_string())?;
    let m = r.u32()? as usize;
    if m == 0 {
        return Err("checkpoint holds zero models".to_string());
    }
    let mut fold_stats = Vec::with_capacity(m);
    for _ in 0..m {
        fold_stats.push(FoldStats {
            best_val_f1: r.f64()?,
            best_epoch: r.u32()?,
            epochs_run: r.u32()?,
        });
    }
    let dims = config.layer_dims();
    let mut models = Vec::with_capacity(m);
    for _ in 0..m {
        let mut layers = Vec::with_capacity(n_layers);
        for (l, &(want_in, want_out)) in dims.iter().enumerate() {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            if (rows, cols) != (want_out, want_in) {
                return Err(format!(
                    "offset {}: layer dims {rows}x{cols} do not match config {want_out}x{want_in}",
                    r.offset()
                ));
            }
            let w_self =
                DenseMatrix::from_vec(rows, cols, r.f64_vec(rows * cols)?).map_err(|e| e.to_string())?;
            let w_neigh =
                DenseMatrix::from_vec(rows, cols, r.f64_vec(rows * cols)?).map_err(|e| e.to_string())?;
            let bias = if bias_enabled && l == n_layers - 1 {
                Some(Parameter::new(
                    DenseMatrix::from_vec(1, rows, r.f64_vec(rows)?).map_err(|e| e.to_string())?,
                ))
            } else {
                None
            };
            layers.push(SageLayer {
                w_self: Parameter::new(w_self),
                w_neigh: Parameter::new(w_neigh),
                bias,
            });
        }
        let mut bns = Vec::with_capacity(n_layers - 1);
        for &(_, d_out) in dims.iter().take(n_layers - 1) {
            let len = r.u32()? as usize;
            if len != d_out {
                return Err(format!(
                    "offset {}: batch-norm width {len} does not match layer width {d_out}",
                    r.offset()
                ));
            }
            let gamma = DenseMatrix::from_vec(1, len, r.f64_vec(len)?).map_err(|e| e.to_string())?;
            let beta = DenseMatrix::from_vec(1, len, r.f64_vec(len)?).map_err(|e| e.to_string())?;
            let running_mean = r.f64_vec(len)?;
            let running_var = r.f64_vec(len)?;
            let momentum = r.f64()?;
            let epsilon = r.f64()?;
            if epsilon <= 0.0 || running_var.iter().any(|v| *v < 0.0) {
                return Err(format!("offset {}: invalid batch-norm state", r.offset()));
            }
            bns.push(BatchNormState {
                gamma: Parameter::new(gamma),
                beta: Parameter::new(beta),
                running_mean,
                running_var,
                momentum,
                epsilon,
            });
        }
        models.push(SageModel {
            layers,
            bns,
            config: config.clone(),
        });
    }
    r.expect_eof()?;
    if task.n_classes() != n_classes {
        return Err(format!(
            "task {} does not match {n_classes} classes",
            task.name()
        ));
    }
    Ok(EnsembleCheckpoint {
        task,
        model_config: config,
        models,
        fold_stats,
    })
}

pub fn parse_checkpoint(bytes: &[u8], path: &str) -> Result<EnsembleCheckpoint> {
    let fail = |msg: String| Error::Corrupt(format!("{path}: {msg}"));
    if bytes.len() < 12 {
        return Err(fail("file shorter than header plus CRC".to_string()));
    }
    if &bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(fail("bad magic, expected MBGN".to_string()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(fail(format!("unsupported checkpoint version {version}")));
    }
    let payload = &bytes[8..bytes.len() - 4];
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let actual_crc = crc32fast::hash(payload);
    if stored_crc != actual_crc {
        return Err(fail(format!(
            "CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )));
    }
    parse_payload(payload).map_err(fail)
}

pub fn read_checkpoint(path: &Path) -> Result<EnsembleCheckpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes, &path.display().to_string())
}
