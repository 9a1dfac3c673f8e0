//! The kernel classifier: three conv→ReLU→pool blocks, a ReLU dense layer and
//! a single sigmoid output giving the probability that a kernel is Normal.

mod decision;
mod loss;
mod optim;
mod params;

pub use decision::{accuracy, classify};
pub use loss::{bce_loss, BCE_EPSILON};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use params::ModelParameters;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    conv2d_backward, conv2d_backward_weights, conv2d_forward, gemm, maxpool2d, maxpool2d_backward,
    relu, relu_backward, sigmoid, sigmoid_backward, ConvCache, ConvSpec, PoolCache, Tensor,
};

pub const CONV_BLOCKS: usize = 3;

const CONV_WEIGHT: [&str; CONV_BLOCKS] = ["conv1.weight", "conv2.weight", "conv3.weight"];
const CONV_BIAS: [&str; CONV_BLOCKS] = ["conv1.bias", "conv2.bias", "conv3.bias"];
const HIDDEN_WEIGHT: &str = "dense1.weight";
const HIDDEN_BIAS: &str = "dense1.bias";
const OUTPUT_WEIGHT: &str = "dense2.weight";
const OUTPUT_BIAS: &str = "dense2.bias";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub input_channels: usize,
    /// Filter count of each conv block.
    pub filters: [usize; CONV_BLOCKS],
    /// Odd square kernel size; convolutions are zero-padded to keep spatial size.
    pub kernel_size: usize,
    pub dense_width: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_height: 64,
            input_width: 64,
            input_channels: 3,
            filters: [16, 32, 64],
            kernel_size: 3,
            dense_width: 64,
            seed: 42,
        }
    }
}

impl ModelConfig {
    /// Default architecture at a square input size.
    pub fn with_size(size: usize) -> Self {
        Self {
            input_height: size,
            input_width: size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pool_factor = 1 << CONV_BLOCKS;
        if self.input_height == 0
            || self.input_width == 0
            || !self.input_height.is_multiple_of(pool_factor)
            || !self.input_width.is_multiple_of(pool_factor)
        {
            return Err(Error::Config(format!(
                "input size {}×{} must be a positive multiple of {pool_factor} in both axes",
                self.input_height, self.input_width
            )));
        }
        if self.input_channels == 0 || self.dense_width == 0 || self.filters.contains(&0) {
            return Err(Error::Config(
                "channel, filter and dense widths must all be positive".into(),
            ));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "kernel size {} must be odd",
                self.kernel_size
            )));
        }
        Ok(())
    }

    pub fn conv_spec(&self, block: usize) -> ConvSpec {
        let in_channels = if block == 0 {
            self.input_channels
        } else {
            self.filters[block - 1]
        };
        ConvSpec::square(
            in_channels,
            self.filters[block],
            self.kernel_size,
            self.kernel_size / 2,
        )
    }

    /// Width of the flattened feature vector entering the dense head.
    pub fn flatten_width(&self) -> usize {
        let shrink = 1 << CONV_BLOCKS;
        self.filters[CONV_BLOCKS - 1] * (self.input_height / shrink) * (self.input_width / shrink)
    }

    /// Closed-form number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        let conv: usize = (0..CONV_BLOCKS)
            .map(|b| {
                let s = self.conv_spec(b);
                s.out_channels * (s.in_channels * s.kernel_height * s.kernel_width + 1)
            })
            .sum();
        conv + self.dense_width * (self.flatten_width() + 1) + self.dense_width + 1
    }

    /// Expected `[C, H, W]` of one input image.
    pub fn input_shape(&self) -> [usize; 3] {
        [self.input_channels, self.input_height, self.input_width]
    }
}

/// Everything [`Model::backward`] needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    revision: u64,
    batch: usize,
    conv: Vec<ConvCache>,
    /// Conv outputs before ReLU.
    pre_relu: Vec<Tensor>,
    pool: Vec<PoolCache>,
    pooled_shape: Vec<usize>,
    features: Tensor,
    hidden_pre: Tensor,
    hidden: Tensor,
    probabilities: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ModelParameters,
}

impl Model {
    /// Fresh parameters: He-uniform for layers feeding a ReLU, Glorot-uniform
    /// for the output layer, zero biases. Deterministic in `config.seed`.
    pub fn build(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ModelParameters::new();

        for block in 0..CONV_BLOCKS {
            let spec = config.conv_spec(block);
            let fan_in = spec.in_channels * spec.kernel_height * spec.kernel_width;
            let limit = (6.0 / fan_in as f64).sqrt();
            params.insert(
                CONV_WEIGHT[block],
                uniform(&spec.weight_shape(), limit, &mut rng),
            );
            params.insert(CONV_BIAS[block], Tensor::zeros(&[spec.out_channels]));
        }

        let flat = config.flatten_width();
        let hidden = config.dense_width;
        params.insert(
            HIDDEN_WEIGHT,
            uniform(&[hidden, flat], (6.0 / flat as f64).sqrt(), &mut rng),
        );
        params.insert(HIDDEN_BIAS, Tensor::zeros(&[hidden]));
        params.insert(
            OUTPUT_WEIGHT,
            uniform(&[1, hidden], (6.0 / (hidden + 1) as f64).sqrt(), &mut rng),
        );
        params.insert(OUTPUT_BIAS, Tensor::zeros(&[1]));

        Ok(Self { config, params })
    }

    /// Reassemble a model from stored parameters, checking every shape.
    pub fn from_parts(config: ModelConfig, params: ModelParameters) -> Result<Self> {
        let reference = Self::build(config.clone())?;
        reference
            .params
            .check_compatible(&params)
            .map_err(|e| Error::Config(format!("parameters do not fit the configuration: {e}")))?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParameters {
        &mut self.params
    }

    pub fn into_params(self) -> ModelParameters {
        self.params
    }

    /// Probabilities (Normal class) for an `N×C×H×W` batch.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        self.forward(batch).map(|(p, _)| p)
    }

    pub fn forward(&self, batch: &Tensor) -> Result<(Tensor, ForwardCache)> {
        let [c, h, w] = self.config.input_shape();
        if batch.ndim() != 4 || batch.shape()[1..] != [c, h, w] {
            return Err(Error::dim(format!(
                "model expects a batch of shape [N, {c}, {h}, {w}], got {:?}",
                batch.shape()
            )));
        }
        let n = batch.shape()[0];
        let p = &self.params;

        let mut conv = Vec::with_capacity(CONV_BLOCKS);
        let mut pre_relu = Vec::with_capacity(CONV_BLOCKS);
        let mut pool = Vec::with_capacity(CONV_BLOCKS);
        let mut x = batch.clone();
        for block in 0..CONV_BLOCKS {
            let (z, cc) = conv2d_forward(
                &x,
                p.require(CONV_WEIGHT[block])?,
                p.require(CONV_BIAS[block])?,
                &self.config.conv_spec(block),
            )?;
            let (pooled, pc) = maxpool2d(&relu(&z))?;
            conv.push(cc);
            pre_relu.push(z);
            pool.push(pc);
            x = pooled;
        }
        let pooled_shape = x.shape().to_vec();
        let flat = self.config.flatten_width();
        let features = x.reshape(&[n, flat])?;

        let hidden_pre = dense(
            &features,
            p.require(HIDDEN_WEIGHT)?,
            p.require(HIDDEN_BIAS)?,
        )?;
        let hidden = relu(&hidden_pre);
        let logits = dense(&hidden, p.require(OUTPUT_WEIGHT)?, p.require(OUTPUT_BIAS)?)?;
        let probabilities = sigmoid(&logits).reshape(&[n])?;

        let cache = ForwardCache {
            revision: p.revision(),
            batch: n,
            conv,
            pre_relu,
            pool,
            pooled_shape,
            features,
            hidden_pre,
            hidden,
            probabilities: probabilities.clone(),
        };
        Ok((probabilities, cache))
    }

    /// Gradients of the loss with respect to every parameter, given the loss
    /// gradient with respect to the output probabilities.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &Tensor) -> Result<ModelParameters> {
        if cache.revision != self.params.revision() {
            return Err(Error::Usage(
                "forward cache is stale: parameters changed since the forward pass".into(),
            ));
        }
        if loss_grad.shape() != [cache.batch] {
            return Err(Error::Usage(format!(
                "loss gradient must have shape [{}], got {:?}",
                cache.batch,
                loss_grad.shape()
            )));
        }
        let n = cache.batch;
        let p = &self.params;
        let mut grads = self.params.zeros_like();

        let probs = cache.probabilities.clone().reshape(&[n, 1])?;
        let upstream = loss_grad.clone().reshape(&[n, 1])?;
        let d_logits = sigmoid_backward(&probs, &upstream)?;

        let d_hidden = dense_backward(
            &cache.hidden,
            p.require(OUTPUT_WEIGHT)?,
            &d_logits,
            &mut grads,
            OUTPUT_WEIGHT,
            OUTPUT_BIAS,
        )?;
        let d_hidden_pre = relu_backward(&cache.hidden_pre, &d_hidden)?;
        let d_features = dense_backward(
            &cache.features,
            p.require(HIDDEN_WEIGHT)?,
            &d_hidden_pre,
            &mut grads,
            HIDDEN_WEIGHT,
            HIDDEN_BIAS,
        )?;

        let mut d_x = d_features.reshape(&cache.pooled_shape)?;
        for block in (0..CONV_BLOCKS).rev() {
            let d_relu = maxpool2d_backward(&cache.pool[block], &d_x)?;
            let d_z = relu_backward(&cache.pre_relu[block], &d_relu)?;
            let (d_w, d_b) = if block == 0 {
                conv2d_backward_weights(&cache.conv[block], &d_z)?
            } else {
                let g = conv2d_backward(&cache.conv[block], &d_z)?;
                d_x = g.input;
                (g.weights, g.bias)
            };
            *grads.get_mut(CONV_WEIGHT[block]).expect("conv weight") = d_w;
            *grads.get_mut(CONV_BIAS[block]).expect("conv bias") = d_b;
        }
        Ok(grads)
    }
}

fn uniform(shape: &[usize], limit: f64, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-limit..limit))
}

/// `x · Wᵀ + b` for `x: N×D`, `W: O×D`, `b: O`.
fn dense(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, d) = (x.shape()[0], x.shape()[1]);
    let o = weight.shape()[0];
    if weight.shape() != [o, d] || bias.shape() != [o] {
        return Err(Error::dim(format!(
            "dense layer weight {:?} / bias {:?} incompatible with input {:?}",
            weight.shape(),
            bias.shape(),
            x.shape()
        )));
    }
    let mut out = Vec::with_capacity(n * o);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    gemm(n, d, o, x.data(), false, weight.data(), true, 1.0, &mut out);
    Tensor::new(&[n, o], out)
}

/// Stores weight/bias gradients in `grads` and returns the input gradient.
fn dense_backward(
    x: &Tensor,
    weight: &Tensor,
    d_out: &Tensor,
    grads: &mut ModelParameters,
    weight_name: &str,
    bias_name: &str,
) -> Result<Tensor> {
    let (n, d) = (x.shape()[0], x.shape()[1]);
    let o = weight.shape()[0];

    let mut d_w = vec![0.0; o * d];
    gemm(o, n, d, d_out.data(), true, x.data(), false, 0.0, &mut d_w);
    let mut d_b = vec![0.0; o];
    for row in d_out.data().chunks_exact(o) {
        d_b.iter_mut().zip(row).for_each(|(b, g)| *b += g);
    }
    let mut d_x = vec![0.0; n * d];
    gemm(
        n,
        o,
        d,
        d_out.data(),
        false,
        weight.data(),
        false,
        0.0,
        &mut d_x,
    );

    *grads.get_mut(weight_name).expect("dense weight") = Tensor::new(&[o, d], d_w)?;
    *grads.get_mut(bias_name).expect("dense bias") = Tensor::new(&[o], d_b)?;
    Tensor::new(&[n, d], d_x)
}
