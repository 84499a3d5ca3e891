//! Mean-aggregation graph layers and the stacked per-node classifier:
//! [sage -> batchnorm -> ReLU] x (n_layers - 1), then sage -> softmax.
//! Gradients are hand-chained per layer in a fixed order.

use crate::error::{Error, Result};
use crate::netbuild::CoevNetwork;
use crate::numcore::{
    batchnorm_bwd, batchnorm_infer, batchnorm_train, cross_entropy, matmul, matmul_nt, matmul_tn,
    relu_bwd, relu_fwd, softmax_rows, BatchNormCache, BatchNormState, DenseMatrix, Parameter,
};
use crate::rng::Rng;

/// One graph layer computing h'_i = W1·h_i + W2·mean_{j in N(i)} h_j (+ bias).
///
/// Both weight matrices are stored d_out × d_in; nodes without neighbors use
/// the zero vector as their neighbor mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SageLayer {
    /// Self-feature transform W1.
    pub w_self: Parameter,
    /// Neighbor-aggregation transform W2.
    pub w_neigh: Parameter,
    /// Optional per-output bias, shape 1 × d_out.
    pub bias: Option<Parameter>,
}

impl SageLayer {
    pub fn d_in(&self) -> usize {
        self.w_self.value.cols()
    }

    pub fn d_out(&self) -> usize {
        self.w_self.value.rows()
    }
}

/// Architecture parameters of one stacked model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_in: usize,
    pub d_hidden: usize,
    pub n_classes: usize,
    pub bias_enabled: bool,
    pub seed: u64,
}

/// Batch-norm defaults: the momentum applied to running statistics and the
/// variance floor. The architecture defaults below mirror the published
/// MBGNN configurations.
pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPSILON: f64 = 1e-5;

impl ModelConfig {
    /// Binding predictor: 5 layers, hidden 64, 2 classes.
    pub fn binding(d_in: usize, seed: u64) -> Self {
        ModelConfig {
            n_layers: 5,
            d_in,
            d_hidden: 64,
            n_classes: 2,
            bias_enabled: true,
            seed,
        }
    }

    /// Metal-type predictor: 5 layers, hidden 512, 11 classes.
    pub fn metal_type(d_in: usize, seed: u64) -> Self {
        ModelConfig {
            n_layers: 5,
            d_in,
            d_hidden: 512,
            n_classes: 11,
            bias_enabled: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers < 2 {
            return Err(Error::Input(format!(
                "model needs at least 2 layers, got {}",
                self.n_layers
            )));
        }
        if self.d_in == 0 || self.d_hidden == 0 || self.n_classes == 0 {
            return Err(Error::Input(
                "model dimensions must be positive".to_string(),
            ));
        }
        Ok(())
    }

    /// (d_in, d_out) of every layer in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.n_layers);
        dims.push((self.d_in, self.d_hidden));
        for _ in 1..self.n_layers - 1 {
            dims.push((self.d_hidden, self.d_hidden));
        }
        dims.push((self.d_hidden, self.n_classes));
        dims
    }
}

/// A stack of sage layers with batch norm after every layer except the last.
#[derive(Clone, Debug, PartialEq)]
pub struct SageModel {
    pub layers: Vec<SageLayer>,
    pub bns: Vec<BatchNormState>,
    pub config: ModelConfig,
}

/// Per-layer values recorded by a train-mode forward pass.
#[derive(Clone, Debug)]
struct LayerCache {
    input: DenseMatrix,
    neigh_mean: DenseMatrix,
    bn: Option<BatchNormCache>,
    /// Batch-norm output, i.e. the ReLU input (hidden layers only).
    pre_relu: Option<DenseMatrix>,
}

/// Backward-pass state from a train-mode forward.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    logits: DenseMatrix,
    neighbors: Vec<Vec<usize>>,
}

/// Per-node mean of neighbor feature rows; zero vector for isolated nodes.
fn neighbor_mean(x: &DenseMatrix, neighbors: &[Vec<usize>]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(x.rows(), x.cols());
    for (i, nbrs) in neighbors.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        let row = m.row_mut(i);
        for &j in nbrs {
            for (acc, &v) in row.iter_mut().zip(x.row(j)) {
                *acc += v;
            }
        }
        let inv = 1.0 / nbrs.len() as f64;
        row.iter_mut().for_each(|v| *v *= inv);
    }
    m
}

fn check_graph(x: &DenseMatrix, neighbors: &[Vec<usize>], d_in: usize) -> Result<()> {
    if x.cols() != d_in {
        return Err(Error::Shape(format!(
            "node features have {} columns, layer expects {}",
            x.cols(),
            d_in
        )));
    }
    if neighbors.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} neighbor lists for {} nodes",
            neighbors.len(),
            x.rows()
        )));
    }
    Ok(())
}

/// H = X·W1ᵀ + mean(neighbors)·W2ᵀ (+ bias).
pub fn sage_forward(
    layer: &SageLayer,
    x: &DenseMatrix,
    neighbors: &[Vec<usize>],
) -> Result<DenseMatrix> {
    let (h, _) = sage_forward_cached(layer, x, neighbors)?;
    Ok(h)
}

fn sage_forward_cached(
    layer: &SageLayer,
    x: &DenseMatrix,
    neighbors: &[Vec<usize>],
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_graph(x, neighbors, layer.d_in())?;
    let m = neighbor_mean(x, neighbors);
    let mut h = matmul_nt(x, &layer.w_self.value)?;
    h.add_assign(&matmul_nt(&m, &layer.w_neigh.value)?)?;
    if let Some(bias) = &layer.bias {
        let b = bias.value.row(0);
        for r in 0..h.rows() {
            for (hv, &bv) in h.row_mut(r).iter_mut().zip(b) {
                *hv += bv;
            }
        }
    }
    Ok((h, m))
}

/// Backpropagates dH through one layer: accumulates weight/bias gradients and
/// returns dX (which includes the adjoint of the neighbor mean).
fn sage_backward(
    layer: &mut SageLayer,
    input: &DenseMatrix,
    neigh_mean_mat: &DenseMatrix,
    neighbors: &[Vec<usize>],
    dh: &DenseMatrix,
) -> Result<DenseMatrix> {
    layer.w_self.grad.add_assign(&matmul_tn(dh, input)?)?;
    layer
        .w_neigh
        .grad
        .add_assign(&matmul_tn(dh, neigh_mean_mat)?)?;
    if let Some(bias) = &mut layer.bias {
        let g = bias.grad.row_mut(0);
        for r in 0..dh.rows() {
            for (gv, &dv) in g.iter_mut().zip(dh.row(r)) {
                *gv += dv;
            }
        }
    }
    let mut dx = matmul(dh, &layer.w_self.value)?;
    let dm = matmul(dh, &layer.w_neigh.value)?;
    for (i, nbrs) in neighbors.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        let inv = 1.0 / nbrs.len() as f64;
        for &j in nbrs {
            let src = dm.row(i);
            for (d, &s) in dx.row_mut(j).iter_mut().zip(src) {
                *d += s * inv;
            }
        }
    }
    Ok(dx)
}

impl SageModel {
    /// Infer-mode forward over a node batch; uses running batch-norm stats.
    /// Safe to call concurrently on a shared model.
    pub fn infer(&self, x: &DenseMatrix, neighbors: &[Vec<usize>]) -> Result<DenseMatrix> {
        check_graph(x, neighbors, self.config.d_in)?;
        if x.rows() == 0 {
            return Err(Error::Input("cannot run a model on an empty graph".into()));
        }
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (mut out, _) = sage_forward_cached(layer, &h, neighbors)?;
            if l < last {
                out = batchnorm_infer(&out, &self.bns[l])?;
                out = relu_fwd(&out);
            }
            h = out;
        }
        Ok(softmax_rows(&h))
    }

    /// Convenience wrapper: infer-mode class probabilities for one network.
    pub fn infer_network(&self, net: &CoevNetwork) -> Result<DenseMatrix> {
        self.infer(&net.features, &net.neighbor_lists())
    }

    /// Train-mode forward over a pooled node batch (>= 2 nodes). Updates
    /// batch-norm running statistics and returns the backward cache.
    pub fn train_forward(
        &mut self,
        x: &DenseMatrix,
        neighbors: &[Vec<usize>],
    ) -> Result<(DenseMatrix, ForwardCache)> {
        check_graph(x, neighbors, self.config.d_in)?;
        if x.rows() < 2 {
            return Err(Error::Input(format!(
                "train-mode forward needs a node batch of >= 2, got {}",
                x.rows()
            )));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for l in 0..self.layers.len() {
            let (out, m) = sage_forward_cached(&self.layers[l], &h, neighbors)?;
            if l < last {
                let (bn_out, bn_cache) = batchnorm_train(&out, &mut self.bns[l])?;
                let activated = relu_fwd(&bn_out);
                caches.push(LayerCache {
                    input: h,
                    neigh_mean: m,
                    bn: Some(bn_cache),
                    pre_relu: Some(bn_out),
                });
                h = activated;
            } else {
                caches.push(LayerCache {
                    input: h,
                    neigh_mean: m,
                    bn: None,
                    pre_relu: None,
                });
                h = out;
            }
        }
        let probs = softmax_rows(&h);
        Ok((
            probs,
            ForwardCache {
                layers: caches,
                logits: h,
                neighbors: neighbors.to_vec(),
            },
        ))
    }

    /// Mean cross-entropy of the cached logits against `labels`, with exact
    /// gradients accumulated into every parameter. Returns the loss.
    pub fn backward(&mut self, cache: &ForwardCache, labels: &[usize]) -> Result<f64> {
        let (loss, dlogits) = cross_entropy(&cache.logits, labels)?;
        let last = self.layers.len() - 1;
        let mut dh = sage_backward(
            &mut self.layers[last],
            &cache.layers[last].input,
            &cache.layers[last].neigh_mean,
            &cache.neighbors,
            &dlogits,
        )?;
        for l in (0..last).rev() {
            let lc = &cache.layers[l];
            let d_relu = relu_bwd(lc.pre_relu.as_ref().unwrap(), &dh)?;
            let (d_bn, dgamma, dbeta) = batchnorm_bwd(lc.bn.as_ref().unwrap(), &d_relu)?;
            for (g, v) in self.bns[l].gamma.grad.row_mut(0).iter_mut().zip(&dgamma) {
                *g += v;
            }
            for (g, v) in self.bns[l].beta.grad.row_mut(0).iter_mut().zip(&dbeta) {
                *g += v;
            }
            dh = sage_backward(
                &mut self.layers[l],
                &lc.input,
                &lc.neigh_mean,
                &cache.neighbors,
                &d_bn,
            )?;
        }
        Ok(loss)
    }

    /// Zeroes every gradient accumulator.
    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.w_self.zero_grad();
            layer.w_neigh.zero_grad();
            if let Some(b) = &mut layer.bias {
                b.zero_grad();
            }
        }
        for bn in &mut self.bns {
            bn.gamma.zero_grad();
            bn.beta.zero_grad();
        }
    }

    /// All trainable parameters in a fixed order: per layer w_self, w_neigh,
    /// bias; then per batch-norm gamma, beta.
    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(&mut layer.w_self);
            out.push(&mut layer.w_neigh);
            if let Some(b) = &mut layer.bias {
                out.push(b);
            }
        }
        for bn in &mut self.bns {
            out.push(&mut bn.gamma);
            out.push(&mut bn.beta);
        }
        out
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(&layer.w_self);
            out.push(&layer.w_neigh);
            if let Some(b) = &layer.bias {
                out.push(b);
            }
        }
        for bn in &self.bns {
            out.push(&bn.gamma);
            out.push(&bn.beta);
        }
        out
    }

    /// Concatenated parameter values in `params()` order.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for p in self.params() {
            flat.extend_from_slice(p.value.data());
        }
        flat
    }

    /// Concatenated gradients in `params()` order.
    pub fn flatten_grads(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for p in self.params() {
            flat.extend_from_slice(p.grad.data());
        }
        flat
    }

    /// (offset, len) of each parameter inside the flat vector.
    pub fn param_segments(&self) -> Vec<(usize, usize)> {
        let mut segs = Vec::new();
        let mut offset = 0;
        for p in self.params() {
            let len = p.value.data().len();
            segs.push((offset, len));
            offset += len;
        }
        segs
    }

    pub fn set_params_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.params().iter().map(|p| p.value.data().len()).sum();
        if flat.len() != total {
            return Err(Error::Shape(format!(
                "flat vector has {} values, model has {} parameters",
                flat.len(),
                total
            )));
        }
        let mut offset = 0;
        for p in self.params_mut() {
            let len = p.value.data().len();
            p.value.data_mut().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }
}

/// Builds a model with Glorot-uniform weights (bound sqrt(6/(d_in+d_out)))
/// drawn from a counter-based stream keyed by `config.seed`; biases start at
/// zero, batch norms at gamma=1, beta=0, running mean 0, running var 1.
///
/// With `bias_enabled` only the final layer carries a bias: on hidden layers
/// the following batch normalization subtracts any constant column shift, so
/// a bias there is an inert parameter (its gradient is identically zero) and
/// the learnable shift is batch norm's beta.
pub fn init_model(config: &ModelConfig) -> Result<SageModel> {
    config.validate()?;
    let dims = config.layer_dims();
    let mut layers = Vec::with_capacity(config.n_layers);
    for (l, &(d_in, d_out)) in dims.iter().enumerate() {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        let draw = |tag: u64| -> Result<Parameter> {
            let mut rng = Rng::stream(config.seed, &[l as u64, tag]);
            let data: Vec<f64> = (0..d_out * d_in)
                .map(|_| rng.uniform(-bound, bound))
                .collect();
            Ok(Parameter::new(DenseMatrix::from_vec(d_out, d_in, data)?))
        };
        let w_self = draw(0)?;
        let w_neigh = draw(1)?;
        let bias = (config.bias_enabled && l == config.n_layers - 1)
            .then(|| Parameter::new(DenseMatrix::zeros(1, d_out)));
        layers.push(SageLayer {
            w_self,
            w_neigh,
            bias,
        });
    }
    let mut bns = Vec::with_capacity(config.n_layers - 1);
    for &(_, d_out) in dims.iter().take(config.n_layers - 1) {
        bns.push(BatchNormState::new(d_out, BN_MOMENTUM, BN_EPSILON)?);
    }
    Ok(SageModel {
        layers,
        bns,
        config: config.clone(),
    })
}

/// Train-mode forward plus cross-entropy, without a backward pass.
pub fn train_loss(
    model: &mut SageModel,
    x: &DenseMatrix,
    neighbors: &[Vec<usize>],
    labels: &[usize],
) -> Result<f64> {
    let (_, cache) = model.train_forward(x, neighbors)?;
    let (loss, _) = cross_entropy(&cache.logits, labels)?;
    Ok(loss)
}
