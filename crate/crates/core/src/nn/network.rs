use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::loss::softmax_rows;
use super::{EpochRecord, LayerOrder, NetworkConfig, NnError, Result};
use crate::rng;

/// Weights are `out × in`; the layer computes `x · Wᵀ + b` for row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl DenseLayer {
    fn uniform<R: Rng>(fan_in: usize, fan_out: usize, limit: f64, rng: &mut R) -> Self {
        let weights = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..=limit));
        Self { weights, biases: Array1::zeros(fan_out) }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.biases
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNorm {
    fn new(width: usize, momentum: f64, epsilon: f64) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum,
            epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenBlock {
    pub dense: DenseLayer,
    pub norm: BatchNorm,
}

/// Network parameters plus the per-epoch history of the run that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: NetworkConfig,
    pub hidden: Vec<HiddenBlock>,
    pub output: DenseLayer,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (best validation accuracy).
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub dense: usize,
    pub batchnorm: usize,
}

/// Builds an untrained network: He-uniform weights for hidden layers,
/// Glorot-uniform for the output layer, zero biases, identity batch norm.
pub fn init_network(config: &NetworkConfig) -> Result<TrainedModel> {
    config.validate()?;
    let mut rng = rng::seeded(config.weight_init_seed);
    let mut fan_in = config.input_dim;
    let mut hidden = Vec::with_capacity(config.hidden_widths.len());
    for &width in &config.hidden_widths {
        let limit = (6.0 / fan_in as f64).sqrt();
        hidden.push(HiddenBlock {
            dense: DenseLayer::uniform(fan_in, width, limit, &mut rng),
            norm: BatchNorm::new(width, config.batchnorm_momentum, config.batchnorm_epsilon),
        });
        fan_in = width;
    }
    let k = config.output_classes;
    let limit = (6.0 / (fan_in + k) as f64).sqrt();
    let output = DenseLayer::uniform(fan_in, k, limit, &mut rng);
    Ok(TrainedModel { config: config.clone(), hidden, output, history: Vec::new(), best_epoch: None })
}

/// Which statistics batch normalization uses in a train-mode pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchNormStats {
    /// Mean and variance of the current batch (normal training).
    Batch,
    /// Frozen running statistics, as in inference.
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainPass {
    pub dropout_seed: u64,
    pub batchnorm: BatchNormStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    /// Running statistics, no dropout.
    Infer,
    Train(TrainPass),
}

impl ForwardMode {
    pub fn train(dropout_seed: u64) -> Self {
        ForwardMode::Train(TrainPass { dropout_seed, batchnorm: BatchNormStats::Batch })
    }
}

#[derive(Debug, Clone)]
struct BlockCache {
    dense_in: Array2<f64>,
    /// Input of the ReLU, needed for its mask.
    relu_in: Array2<f64>,
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    batch_mean: Array1<f64>,
    batch_var: Array1<f64>,
}

/// Intermediates of a train-mode pass, consumed by [`TrainedModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batchnorm: BatchNormStats,
    blocks: Vec<BlockCache>,
    last_hidden: Array2<f64>,
    probs: Array2<f64>,
}

impl ForwardCache {
    pub fn batch_len(&self) -> usize {
        self.probs.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub probs: Array2<f64>,
    pub cache: Option<ForwardCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGradients {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGradients {
    pub dense: DenseGradients,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

/// Gradients in parameter declaration order (per hidden block: W, b, γ, β; then output W, b).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<BlockGradients>,
    pub output: DenseGradients,
    /// Gradient of the loss with respect to the output logits.
    pub logits: Array2<f64>,
}

impl Gradients {
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(4 * self.hidden.len() + 2);
        for b in &self.hidden {
            out.push(b.dense.weights.as_slice().expect("standard layout"));
            out.push(b.dense.biases.as_slice().expect("standard layout"));
            out.push(b.gamma.as_slice().expect("standard layout"));
            out.push(b.beta.as_slice().expect("standard layout"));
        }
        out.push(self.output.weights.as_slice().expect("standard layout"));
        out.push(self.output.biases.as_slice().expect("standard layout"));
        out
    }
}

/// Inverted-dropout multipliers: each entry is 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`. Drawn row-major from stream 0 of `seed`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, seed: u64) -> Array2<f64> {
    if rate <= 0.0 {
        return Array2::ones((rows, cols));
    }
    let mut rng = rng::seeded(seed);
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Array2::from_shape_fn((rows, cols), |_| if rng.random::<f64>() < keep { scale } else { 0.0 })
}

/// Normalized output, `x̂`, inverse std, mean and variance of one batchnorm pass.
type Normalized = (Array2<f64>, Array2<f64>, Array1<f64>, Array1<f64>, Array1<f64>);

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

impl TrainedModel {
    pub fn param_count(&self) -> ParamCount {
        let dense = self
            .hidden
            .iter()
            .map(|b| &b.dense)
            .chain(std::iter::once(&self.output))
            .map(|d| d.weights.len() + d.biases.len())
            .sum();
        let batchnorm = self.hidden.iter().map(|b| b.norm.gamma.len() + b.norm.beta.len()).sum();
        ParamCount { dense, batchnorm }
    }

    /// Mutable views of every trainable tensor in declaration order.
    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for b in &mut self.hidden {
            out.push(b.dense.weights.as_slice_mut().expect("standard layout"));
            out.push(b.dense.biases.as_slice_mut().expect("standard layout"));
            out.push(b.norm.gamma.as_slice_mut().expect("standard layout"));
            out.push(b.norm.beta.as_slice_mut().expect("standard layout"));
        }
        out.push(self.output.weights.as_slice_mut().expect("standard layout"));
        out.push(self.output.biases.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn param_tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for b in &self.hidden {
            out.push(b.dense.weights.as_slice().expect("standard layout"));
            out.push(b.dense.biases.as_slice().expect("standard layout"));
            out.push(b.norm.gamma.as_slice().expect("standard layout"));
            out.push(b.norm.beta.as_slice().expect("standard layout"));
        }
        out.push(self.output.weights.as_slice().expect("standard layout"));
        out.push(self.output.biases.as_slice().expect("standard layout"));
        out
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for b in &self.hidden {
            out.extend([b.dense.weights.len(), b.dense.biases.len(), b.norm.gamma.len(), b.norm.beta.len()]);
        }
        out.extend([self.output.weights.len(), self.output.biases.len()]);
        out
    }

    pub fn all_finite(&self) -> bool {
        let bn_ok = self
            .hidden
            .iter()
            .all(|b| [&b.norm.running_mean, &b.norm.running_var].iter().all(|a| a.iter().all(|v| v.is_finite())));
        bn_ok && self.param_tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Class probabilities for a batch (`n × input_dim`).
    pub fn forward(&self, batch: ArrayView2<'_, f64>, mode: ForwardMode) -> Result<ForwardOutput> {
        if batch.ncols() != self.config.input_dim {
            return Err(NnError::DimensionMismatch { expected: self.config.input_dim, found: batch.ncols() });
        }
        let n = batch.nrows();
        let pass = match mode {
            ForwardMode::Infer => None,
            ForwardMode::Train(p) => {
                if p.batchnorm == BatchNormStats::Batch && n < 2 {
                    return Err(NnError::BatchTooSmall(n));
                }
                Some(p)
            }
        };

        let mut x = batch.to_owned();
        if let Some(p) = pass {
            if self.config.input_dropout_rate > 0.0 {
                x *= &dropout_mask(n, x.ncols(), self.config.input_dropout_rate, p.dropout_seed);
            }
        }

        let mut blocks = Vec::with_capacity(self.hidden.len());
        for block in &self.hidden {
            let z = block.dense.forward(&x);
            let bn = &block.norm;
            let use_batch = matches!(pass, Some(TrainPass { batchnorm: BatchNormStats::Batch, .. }));
            let normalize = |input: &Array2<f64>| -> Normalized {
                let (mean, var) = if use_batch {
                    let mean = input.mean_axis(Axis(0)).expect("n >= 2");
                    let var = input.var_axis(Axis(0), 0.0);
                    (mean, var)
                } else {
                    (bn.running_mean.clone(), bn.running_var.clone())
                };
                let inv_std = var.mapv(|v| 1.0 / (v + bn.epsilon).sqrt());
                let xhat = (input - &mean) * &inv_std;
                let out = &xhat * &bn.gamma + &bn.beta;
                (out, xhat, inv_std, mean, var)
            };
            let (out, relu_in, xhat, inv_std, mean, var) = match self.config.layer_order {
                LayerOrder::DenseReluBatchNorm => {
                    let a = relu(&z);
                    let (out, xhat, inv_std, mean, var) = normalize(&a);
                    (out, z, xhat, inv_std, mean, var)
                }
                LayerOrder::DenseBatchNormRelu => {
                    let (y, xhat, inv_std, mean, var) = normalize(&z);
                    (relu(&y), y, xhat, inv_std, mean, var)
                }
            };
            if pass.is_some() {
                blocks.push(BlockCache { dense_in: x, relu_in, xhat, inv_std, batch_mean: mean, batch_var: var });
            }
            x = out;
        }
        let probs = softmax_rows(&self.output.forward(&x));
        let cache = pass.map(|p| ForwardCache { batchnorm: p.batchnorm, blocks, last_hidden: x, probs: probs.clone() });
        Ok(ForwardOutput { probs, cache })
    }

    /// Gradients of the mean cross-entropy for the batch that produced `cache`.
    pub fn backward(&self, cache: &ForwardCache, labels: &[usize]) -> Result<Gradients> {
        let n = cache.batch_len();
        if labels.len() != n || cache.blocks.len() != self.hidden.len() {
            return Err(NnError::StaleCache { expected: labels.len(), found: n });
        }
        let mut dlogits = cache.probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            dlogits[[i, y]] -= 1.0;
        }
        dlogits /= n as f64;

        let output = DenseGradients { weights: dlogits.t().dot(&cache.last_hidden), biases: dlogits.sum_axis(Axis(0)) };
        let mut grad = dlogits.dot(&self.output.weights);

        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (block, bc) in self.hidden.iter().zip(&cache.blocks).rev() {
            let bn = &block.norm;
            let bn_backward = |dy: &Array2<f64>| -> (Array2<f64>, Array1<f64>, Array1<f64>) {
                let dgamma = (dy * &bc.xhat).sum_axis(Axis(0));
                let dbeta = dy.sum_axis(Axis(0));
                let dxhat = dy * &bn.gamma;
                let dx = match cache.batchnorm {
                    BatchNormStats::Batch => {
                        let nf = n as f64;
                        let sum_dxhat = dxhat.sum_axis(Axis(0));
                        let sum_dxhat_xhat = (&dxhat * &bc.xhat).sum_axis(Axis(0));
                        ((&dxhat * nf - &sum_dxhat) - &bc.xhat * &sum_dxhat_xhat) * &(&bc.inv_std / nf)
                    }
                    BatchNormStats::Running => &dxhat * &bc.inv_std,
                };
                (dx, dgamma, dbeta)
            };
            let relu_mask = |d: Array2<f64>| {
                let mut d = d;
                d.zip_mut_with(&bc.relu_in, |g, &v| {
                    if v <= 0.0 {
                        *g = 0.0
                    }
                });
                d
            };
            let (dz, dgamma, dbeta) = match self.config.layer_order {
                LayerOrder::DenseReluBatchNorm => {
                    let (da, dgamma, dbeta) = bn_backward(&grad);
                    (relu_mask(da), dgamma, dbeta)
                }
                LayerOrder::DenseBatchNormRelu => {
                    let dy = relu_mask(grad);
                    bn_backward(&dy)
                }
            };
            let dense = DenseGradients { weights: dz.t().dot(&bc.dense_in), biases: dz.sum_axis(Axis(0)) };
            grad = dz.dot(&block.dense.weights);
            hidden.push(BlockGradients { dense, gamma: dgamma, beta: dbeta });
        }
        hidden.reverse();
        Ok(Gradients { hidden, output, logits: dlogits })
    }

    /// Folds the batch statistics of a train-mode pass into the running averages.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        if cache.batchnorm != BatchNormStats::Batch {
            return;
        }
        let n = cache.batch_len() as f64;
        for (block, bc) in self.hidden.iter_mut().zip(&cache.blocks) {
            let bn = &mut block.norm;
            let m = bn.momentum;
            let unbiased = &bc.batch_var * (n / (n - 1.0));
            bn.running_mean = &bn.running_mean * m + &bc.batch_mean * (1.0 - m);
            bn.running_var = &bn.running_var * m + unbiased * (1.0 - m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::cross_entropy_loss;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn small_config(order: LayerOrder) -> NetworkConfig {
        NetworkConfig {
            input_dim: 4,
            hidden_widths: vec![5, 3],
            output_classes: 3,
            input_dropout_rate: 0.0,
            batchnorm_momentum: 0.9,
            batchnorm_epsilon: 1e-5,
            layer_order: order,
            weight_init_seed: 3,
        }
    }

    fn random_batch(n: usize, d: usize, seed: u64, scale: f64) -> Array2<f64> {
        let mut r = rng::seeded(seed);
        Array2::from_shape_fn((n, d), |_| {
            let z: f64 = StandardNormal.sample(&mut r);
            scale * z
        })
    }

    #[test]
    fn table_one_parameter_count() {
        let m = init_network(&NetworkConfig::baseline(512)).unwrap();
        let c = m.param_count();
        assert_eq!(c.dense, (512 * 256 + 256) + (256 * 128 + 128) + (128 * 64 + 64) + (64 * 3 + 3));
        assert_eq!(c.dense, 172_675);
        assert_eq!(c.batchnorm, 896);
        assert_eq!(m.output.weights.dim(), (3, 64));
        assert!(m.hidden.iter().all(|b| b.norm.gamma.iter().all(|&g| g == 1.0)
            && b.norm.running_var.iter().all(|&v| v == 1.0)
            && b.norm.running_mean.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_network(&NetworkConfig::baseline(16)).unwrap();
        let b = init_network(&NetworkConfig::baseline(16)).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(a.hidden[0].dense.weights.iter().all(|w| w.abs() <= limit));
        let mut cfg = NetworkConfig::baseline(16);
        cfg.weight_init_seed = 1;
        assert_ne!(init_network(&cfg).unwrap().output, a.output);
    }

    #[test]
    fn single_hidden_neuron() {
        let mut cfg = small_config(LayerOrder::DenseReluBatchNorm);
        cfg.hidden_widths = vec![1];
        let m = init_network(&cfg).unwrap();
        let out = m.forward(random_batch(3, 4, 1, 1.0).view(), ForwardMode::train(0)).unwrap();
        assert_eq!(out.probs.dim(), (3, 3));
    }

    #[test]
    fn equal_logits_give_uniform_probs() {
        let mut m = init_network(&small_config(LayerOrder::DenseReluBatchNorm)).unwrap();
        m.output.weights.fill(0.0);
        let out = m.forward(random_batch(2, 4, 2, 1.0).view(), ForwardMode::Infer).unwrap();
        for p in out.probs.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_simplex_points() {
        let m = init_network(&NetworkConfig::baseline(8)).unwrap();
        let x = random_batch(16, 8, 4, 3.0);
        for mode in [ForwardMode::Infer, ForwardMode::train(9)] {
            let p = m.forward(x.view(), mode).unwrap().probs;
            for row in p.outer_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn infer_is_deterministic_and_train_batch_of_one_fails() {
        let m = init_network(&NetworkConfig::baseline(8)).unwrap();
        let x = random_batch(5, 8, 4, 1.0);
        let a = m.forward(x.view(), ForwardMode::Infer).unwrap().probs;
        let b = m.forward(x.view(), ForwardMode::Infer).unwrap().probs;
        assert_eq!(a, b);
        let one = random_batch(1, 8, 4, 1.0);
        assert!(matches!(m.forward(one.view(), ForwardMode::train(0)), Err(NnError::BatchTooSmall(1))));
        assert!(m.forward(one.view(), ForwardMode::Infer).is_ok());
        let wrong = random_batch(2, 7, 4, 1.0);
        assert!(matches!(
            m.forward(wrong.view(), ForwardMode::Infer),
            Err(NnError::DimensionMismatch { expected: 8, found: 7 })
        ));
    }

    #[test]
    fn dropout_mask_fraction_and_reproducibility() {
        let a = dropout_mask(1, 512, 0.5, 77);
        assert_eq!(a, dropout_mask(1, 512, 0.5, 77));
        let zeros = a.iter().filter(|&&v| v == 0.0).count() as f64 / 512.0;
        assert!((zeros - 0.5).abs() <= 0.05, "zero fraction {zeros}");
        assert!(a.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_preserves_expectation() {
        let x: Vec<f64> = (0..8).map(|i| 1.0 + i as f64 * 0.5).collect();
        let plain: f64 = x.iter().sum::<f64>() / x.len() as f64;
        let mut total = 0.0;
        for s in 0..10_000 {
            let m = dropout_mask(1, x.len(), 0.5, s);
            total += x.iter().zip(m.iter()).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64;
        }
        let masked = total / 10_000.0;
        assert!((masked - plain).abs() / plain < 0.02, "{masked} vs {plain}");
    }

    #[test]
    fn batchnorm_output_moments() {
        let mut m = init_network(&small_config(LayerOrder::DenseBatchNormRelu)).unwrap();
        m.hidden[0].norm.gamma = array![1.5, 0.5, 2.0, 1.0, 3.0];
        m.hidden[0].norm.beta = array![0.1, -0.2, 0.3, 0.0, 1.0];
        // Large inputs keep batch variances far above epsilon.
        let x = random_batch(64, 4, 5, 20.0);
        let z = m.hidden[0].dense.forward(&x);
        let bn = &m.hidden[0].norm;
        let mean = z.mean_axis(Axis(0)).unwrap();
        let var = z.var_axis(Axis(0), 0.0);
        let y = (&z - &mean) / &var.mapv(|v| (v + bn.epsilon).sqrt()) * &bn.gamma + &bn.beta;
        let ym = y.mean_axis(Axis(0)).unwrap();
        let yv = y.var_axis(Axis(0), 0.0);
        for j in 0..5 {
            assert!((ym[j] - bn.beta[j]).abs() < 1e-6);
            assert!((yv[j] - bn.gamma[j] * bn.gamma[j]).abs() < 1e-6 * bn.gamma[j].powi(2).max(1.0));
        }
        // The cached normalized activations of the real pass agree.
        let out = m.forward(x.view(), ForwardMode::train(0)).unwrap();
        let cache = out.cache.unwrap();
        let xm = cache.blocks[0].xhat.mean_axis(Axis(0)).unwrap();
        assert!(xm.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn logit_gradient_is_probs_minus_onehot() {
        let mut m = init_network(&small_config(LayerOrder::DenseReluBatchNorm)).unwrap();
        m.output.weights.fill(0.0);
        m.output.biases = array![0.2f64.ln(), 0.5f64.ln(), 0.3f64.ln()];
        let x = random_batch(2, 4, 1, 1.0);
        let out = m.forward(x.view(), ForwardMode::train(0)).unwrap();
        let g = m.backward(out.cache.as_ref().unwrap(), &[1, 1]).unwrap();
        let expected = [0.2, -0.5, 0.3];
        for i in 0..2 {
            for (c, e) in expected.iter().enumerate() {
                assert!((g.logits[[i, c]] * 2.0 - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_output_weights_bias_gradient() {
        let mut m = init_network(&small_config(LayerOrder::DenseReluBatchNorm)).unwrap();
        m.output.weights.fill(0.0);
        let x = random_batch(4, 4, 6, 1.0);
        let labels = [0, 2, 2, 1];
        let out = m.forward(x.view(), ForwardMode::train(0)).unwrap();
        let g = m.backward(out.cache.as_ref().unwrap(), &labels).unwrap();
        for c in 0..3 {
            let mean: f64 = labels.iter().map(|&y| 1.0 / 3.0 - if y == c { 1.0 } else { 0.0 }).sum::<f64>() / 4.0;
            assert!((g.output.biases[c] - mean).abs() < 1e-12);
        }
        // Zero output weights block everything upstream.
        assert!(g.hidden.iter().all(|b| b.dense.weights.iter().all(|&v| v == 0.0)));
    }

    /// Central differences over every trainable parameter.
    fn max_rel_error(m: &TrainedModel, x: &Array2<f64>, labels: &[usize], stats: BatchNormStats) -> f64 {
        let mode = ForwardMode::Train(TrainPass { dropout_seed: 0, batchnorm: stats });
        let out = m.forward(x.view(), mode).unwrap();
        let g = m.backward(out.cache.as_ref().unwrap(), labels).unwrap();
        let analytic: Vec<Vec<f64>> = g.tensors().iter().map(|t| t.to_vec()).collect();
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        let mut probe = m.clone();
        for (ti, grads) in analytic.iter().enumerate() {
            for (pi, &a) in grads.iter().enumerate() {
                let orig = probe.param_tensors_mut()[ti][pi];
                probe.param_tensors_mut()[ti][pi] = orig + h;
                let fp = cross_entropy_loss(probe.forward(x.view(), mode).unwrap().probs.view(), labels);
                probe.param_tensors_mut()[ti][pi] = orig - h;
                let fm = cross_entropy_loss(probe.forward(x.view(), mode).unwrap().probs.view(), labels);
                probe.param_tensors_mut()[ti][pi] = orig;
                let numeric = (fp - fm) / (2.0 * h);
                let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
                worst = worst.max(err);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for order in [LayerOrder::DenseReluBatchNorm, LayerOrder::DenseBatchNormRelu] {
            let mut m = init_network(&small_config(order)).unwrap();
            m.hidden[0].norm.running_mean = array![0.1, 0.2, 0.0, -0.1, 0.3];
            m.hidden[0].norm.running_var = array![1.5, 0.7, 1.0, 2.0, 0.9];
            let x = random_batch(4, 4, 11, 1.0);
            let labels = [0, 1, 2, 1];
            for stats in [BatchNormStats::Batch, BatchNormStats::Running] {
                let e = max_rel_error(&m, &x, &labels, stats);
                assert!(e < 1e-4, "{order:?} {stats:?}: {e}");
            }
        }
    }

    #[test]
    fn running_stats_update() {
        let mut m = init_network(&small_config(LayerOrder::DenseReluBatchNorm)).unwrap();
        let x = random_batch(8, 4, 2, 1.0);
        let out = m.forward(x.view(), ForwardMode::train(0)).unwrap();
        let cache = out.cache.unwrap();
        m.update_running_stats(&cache);
        let bc = &cache.blocks[0];
        let expected = &bc.batch_mean * 0.1;
        assert!((&m.hidden[0].norm.running_mean - &expected).iter().all(|d| d.abs() < 1e-15));
        assert!(m.hidden[0].norm.running_var.iter().all(|&v| v >= 0.0));
    }
}
