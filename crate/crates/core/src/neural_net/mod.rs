//! Dense feed-forward encoder and decoder of the inner (n₁, k₁) neural code.
//!
//! The encoder maps a one-hot vector of width 2^k₁ through two ReLU layers and
//! a linear output layer to n₁ reals; the batch is then power-normalized per
//! dimension. The decoder maps n₁ channel outputs through two ReLU layers to
//! 2^k₁ logits. Gradients are hand-derived reverse mode and include the
//! dependence of the normalization statistics on the batch.

mod format;
mod nadam;
mod ops;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelRealization;
use crate::error::{CcnError, Result};
use crate::scalar::Scalar;

pub use format::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use nadam::{Nadam, NadamConfig};
pub use ops::{
    apply_stats, argmax, batch_stats, cross_entropy_from_logits, cross_entropy_from_probs, decide_symbol,
    log_sum_exp, normalize_power, normalize_power_backward, softmax, softmax_rows, top_symbol_from_logits,
    BatchStats, SymbolDecision, VARIANCE_FLOOR,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Linear),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// One affine map W·x + b with W stored as (out × in).
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> LayerParams<T> {
    pub fn zeros(out_dim: usize, in_dim: usize, activation: Activation) -> Self {
        LayerParams {
            weights: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
            activation,
        }
    }

    /// He-uniform weights for ReLU layers, Glorot-uniform for linear ones; zero bias.
    pub fn init<R: Rng + ?Sized>(out_dim: usize, in_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / in_dim as f64).sqrt(),
            Activation::Linear => (6.0 / (in_dim + out_dim) as f64).sqrt(),
        };
        let weights = Array2::from_shape_simple_fn((out_dim, in_dim), || T::lit(rng.random_range(-limit..limit)));
        LayerParams { weights, bias: Array1::zeros(out_dim), activation }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Batch forward: rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        let mut out = x.dot(&self.weights.t());
        out += &self.bias;
        if self.activation == Activation::Relu {
            out.mapv_inplace(relu);
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[inline]
fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// Zeroes the gradient where the layer output was not strictly positive.
fn relu_mask<T: Scalar>(grad: &mut Array2<T>, activated: &Array2<T>) {
    ndarray::Zip::from(grad).and(activated).for_each(|g, &a| {
        if a <= T::zero() {
            *g = T::zero();
        }
    });
}

/// How encoder outputs are scaled to the power constraint at inference time.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Normalization<T> {
    /// Statistics recomputed over every transmitted batch (as in training).
    #[default]
    PerBatch,
    /// Fixed statistics, e.g. the population moments over all 2^k₁ symbols.
    Frozen(BatchStats<T>),
}

/// Parameters θ of the encoder and θ′ of the decoder plus architecture metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralCodeModel<T> {
    k1: usize,
    n1: usize,
    batch_size: usize,
    pub encoder: Vec<LayerParams<T>>,
    pub decoder: Vec<LayerParams<T>>,
    pub normalization: Normalization<T>,
}

/// Forward intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    pub indices: Vec<usize>,
    enc_h1: Array2<T>,
    enc_h2: Array2<T>,
    /// Encoder output before normalization.
    pub encoded: Array2<T>,
    /// Transmitted (normalized) batch.
    pub transmitted: Array2<T>,
    pub stats: BatchStats<T>,
    pub received: Array2<T>,
    dec_h1: Array2<T>,
    dec_h2: Array2<T>,
    pub logits: Array2<T>,
}

/// Gradients with the same layout as the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads<T> {
    pub encoder: Vec<LayerParams<T>>,
    pub decoder: Vec<LayerParams<T>>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn slices(&self) -> Vec<&[T]> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

impl<T: Scalar> NeuralCodeModel<T> {
    /// Randomly initialized (n₁, k₁) code with hidden widths 2^k₁ on both sides.
    pub fn new<R: Rng + ?Sized>(k1: usize, n1: usize, batch_size: usize, rng: &mut R) -> Result<Self> {
        Self::with_widths(k1, n1, 1 << k1, 1 << k1, batch_size, rng)
    }

    pub fn with_widths<R: Rng + ?Sized>(
        k1: usize,
        n1: usize,
        encoder_hidden: usize,
        decoder_hidden: usize,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k1 == 0 || k1 > 16 || n1 == 0 {
            return Err(CcnError::InvalidInput(format!("unsupported inner code ({n1}, {k1})")));
        }
        if batch_size < 2 {
            return Err(CcnError::InvalidInput(format!("batch size {batch_size} < 2")));
        }
        let q = 1usize << k1;
        let (he, hd) = (encoder_hidden, decoder_hidden);
        let encoder = vec![
            LayerParams::init(he, q, Activation::Relu, rng),
            LayerParams::init(he, he, Activation::Relu, rng),
            LayerParams::init(n1, he, Activation::Linear, rng),
        ];
        let decoder = vec![
            LayerParams::init(hd, n1, Activation::Relu, rng),
            LayerParams::init(hd, hd, Activation::Relu, rng),
            LayerParams::init(q, hd, Activation::Linear, rng),
        ];
        Ok(NeuralCodeModel { k1, n1, batch_size, encoder, decoder, normalization: Normalization::PerBatch })
    }

    /// Assembles a model from explicit layers, checking the architecture.
    pub fn from_layers(
        k1: usize,
        n1: usize,
        batch_size: usize,
        encoder: Vec<LayerParams<T>>,
        decoder: Vec<LayerParams<T>>,
        normalization: Normalization<T>,
    ) -> Result<Self> {
        let model = NeuralCodeModel { k1, n1, batch_size, encoder, decoder, normalization };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CcnError::InvalidInput(msg));
        if self.k1 == 0 || self.k1 > 16 {
            return bad(format!("k1 = {} unsupported", self.k1));
        }
        if self.batch_size < 2 {
            return bad(format!("batch size {} < 2", self.batch_size));
        }
        let q = 1usize << self.k1;
        for (name, layers, input, output) in
            [("encoder", &self.encoder, q, self.n1), ("decoder", &self.decoder, self.n1, q)]
        {
            if layers.len() != 3 {
                return bad(format!("{name} has {} layers, expected 3", layers.len()));
            }
            let mut width = input;
            for (i, l) in layers.iter().enumerate() {
                if l.in_dim() != width || l.bias.len() != l.out_dim() {
                    return bad(format!("{name} layer {i} has inconsistent shape"));
                }
                let want = if i < 2 { Activation::Relu } else { Activation::Linear };
                if l.activation != want {
                    return bad(format!("{name} layer {i} activation {:?}, expected {want:?}", l.activation));
                }
                width = l.out_dim();
            }
            if width != output {
                return bad(format!("{name} output width {width}, expected {output}"));
            }
        }
        if let Normalization::Frozen(stats) = &self.normalization {
            if stats.mean.len() != self.n1 || stats.std.len() != self.n1 {
                return bad("frozen statistics do not match n1".into());
            }
            if stats.std.iter().any(|s| s.as_f64() <= 0.0) {
                return bad("frozen standard deviation must be positive".into());
            }
        }
        if !self.encoder.iter().chain(&self.decoder).all(LayerParams::is_finite) {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Number of messages, 2^k₁.
    pub fn num_symbols(&self) -> usize {
        1 << self.k1
    }

    /// Batch size m used for training and for per-batch normalization.
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn set_batch_size(&mut self, m: usize) -> Result<()> {
        if m < 2 {
            return Err(CcnError::InvalidInput(format!("batch size {m} < 2")));
        }
        self.batch_size = m;
        Ok(())
    }

    pub fn encoder_hidden(&self) -> usize {
        self.encoder[0].out_dim()
    }

    pub fn decoder_hidden(&self) -> usize {
        self.decoder[0].out_dim()
    }

    pub fn num_parameters(&self) -> usize {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Mutable views of every parameter tensor, in a fixed order matching [`ModelGrads::slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        if let Some(&j) = indices.iter().find(|&&j| j >= self.num_symbols()) {
            return Err(CcnError::InvalidInput(format!(
                "symbol index {j} outside [0, {})",
                self.num_symbols()
            )));
        }
        Ok(())
    }

    /// First encoder layer for one-hot inputs: column j of W₁ plus b₁.
    fn encoder_first_layer(&self, indices: &[usize]) -> Array2<T> {
        let l = &self.encoder[0];
        let mut h = Array2::zeros((indices.len(), l.out_dim()));
        for (mut row, &j) in h.rows_mut().into_iter().zip(indices) {
            row.assign(&l.weights.column(j));
            row += &l.bias;
        }
        h.mapv_inplace(relu);
        h
    }

    /// Encoder output x̃ (before power normalization) for a batch of symbol indices.
    pub fn encoder_forward(&self, indices: &[usize]) -> Result<Array2<T>> {
        self.check_indices(indices)?;
        let h1 = self.encoder_first_layer(indices);
        let h2 = self.encoder[1].forward(h1.view());
        Ok(self.encoder[2].forward(h2.view()))
    }

    /// Encoder on explicit (dense) input vectors of width 2^k₁.
    pub fn encoder_forward_dense(&self, inputs: ArrayView2<'_, T>) -> Array2<T> {
        let h1 = self.encoder[0].forward(inputs);
        let h2 = self.encoder[1].forward(h1.view());
        self.encoder[2].forward(h2.view())
    }

    /// x̃ for every symbol, one row per index 0 … 2^k₁ − 1.
    pub fn encoder_table(&self) -> Array2<T> {
        let all: Vec<usize> = (0..self.num_symbols()).collect();
        self.encoder_forward(&all).expect("indices in range")
    }

    /// Moments of the encoder output under uniformly distributed symbols.
    pub fn population_stats(&self) -> Result<BatchStats<T>> {
        batch_stats(self.encoder_table().view())
    }

    /// Switches inference to fixed population statistics.
    pub fn freeze_normalization(&mut self) -> Result<()> {
        self.normalization = Normalization::Frozen(self.population_stats()?);
        Ok(())
    }

    /// Channel input for a batch of symbols under the model's normalization mode.
    pub fn transmit(&self, indices: &[usize]) -> Result<Array2<T>> {
        let x = self.encoder_forward(indices)?;
        self.normalize(x.view())
    }

    /// Normalizes encoder outputs according to [`Self::normalization`].
    pub fn normalize(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        match &self.normalization {
            Normalization::PerBatch => Ok(normalize_power(x)?.0),
            Normalization::Frozen(stats) => Ok(apply_stats(x, stats)),
        }
    }

    /// Decoder logits z for channel outputs y (rows are samples).
    pub fn decoder_logits(&self, y: ArrayView2<'_, T>) -> Array2<T> {
        let h1 = self.decoder[0].forward(y);
        let h2 = self.decoder[1].forward(h1.view());
        self.decoder[2].forward(h2.view())
    }

    /// Logits and softmax confidences ŝ.
    pub fn decoder_forward(&self, y: ArrayView2<'_, T>) -> (Array2<T>, Array2<T>) {
        let z = self.decoder_logits(y);
        let p = softmax_rows(z.view());
        (z, p)
    }

    /// Hard decisions (argmax index, top probability) for each row of y.
    pub fn decode_top(&self, y: ArrayView2<'_, T>) -> Vec<(usize, f64)> {
        const CHUNK: usize = 2048;
        let mut out = Vec::with_capacity(y.nrows());
        let mut start = 0;
        while start < y.nrows() {
            let end = (start + CHUNK).min(y.nrows());
            let z = self.decoder_logits(y.slice(s![start..end, ..]));
            out.extend(z.rows().into_iter().map(top_symbol_from_logits));
            start = end;
        }
        out
    }

    /// Full training graph: encode, normalize, pass through a fixed channel
    /// realization, decode. Normalization is always per batch here.
    pub fn forward_train(&self, indices: &[usize], channel: &ChannelRealization<T>) -> Result<ForwardCache<T>> {
        self.check_indices(indices)?;
        let enc_h1 = self.encoder_first_layer(indices);
        let enc_h2 = self.encoder[1].forward(enc_h1.view());
        let encoded = self.encoder[2].forward(enc_h2.view());
        let (transmitted, stats) = normalize_power(encoded.view())?;
        let received = channel.apply(transmitted.view())?;
        let dec_h1 = self.decoder[0].forward(received.view());
        let dec_h2 = self.decoder[1].forward(dec_h1.view());
        let logits = self.decoder[2].forward(dec_h2.view());
        Ok(ForwardCache {
            indices: indices.to_vec(),
            enc_h1,
            enc_h2,
            encoded,
            transmitted,
            stats,
            received,
            dec_h1,
            dec_h2,
            logits,
        })
    }

    /// Mean cross-entropy of a cached forward pass.
    pub fn loss(&self, cache: &ForwardCache<T>) -> T {
        cross_entropy_from_logits(cache.logits.view(), &cache.indices)
    }

    /// Exact gradients of the mean cross-entropy with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache<T>, channel: &ChannelRealization<T>) -> ModelGrads<T> {
        let m = cache.indices.len();
        let inv_m = T::lit(1.0 / m as f64);

        // dL/dz = (softmax(z) − onehot) / m
        let mut dz = softmax_rows(cache.logits.view());
        for (mut row, &j) in dz.rows_mut().into_iter().zip(&cache.indices) {
            row[j] -= T::one();
        }
        dz *= inv_m;

        let dec = &self.decoder;
        let (g_dec3, mut d_h2) = dense_backward(&dz, &cache.dec_h2, &dec[2]);
        relu_mask(&mut d_h2, &cache.dec_h2);
        let (g_dec2, mut d_h1) = dense_backward(&d_h2, &cache.dec_h1, &dec[1]);
        relu_mask(&mut d_h1, &cache.dec_h1);
        let (g_dec1, d_received) = dense_backward(&d_h1, &cache.received, &dec[0]);

        let d_transmitted = channel.backward(d_received);
        let d_encoded =
            normalize_power_backward(cache.transmitted.view(), d_transmitted.view(), &cache.stats);

        let enc = &self.encoder;
        let (g_enc3, mut d_eh2) = dense_backward(&d_encoded, &cache.enc_h2, &enc[2]);
        relu_mask(&mut d_eh2, &cache.enc_h2);
        let (g_enc2, mut d_eh1) = dense_backward(&d_eh2, &cache.enc_h1, &enc[1]);
        relu_mask(&mut d_eh1, &cache.enc_h1);

        // One-hot input: only column j_i of W₁ receives sample i's gradient.
        let mut g_enc1 = LayerParams::zeros(enc[0].out_dim(), enc[0].in_dim(), enc[0].activation);
        for (row, &j) in d_eh1.rows().into_iter().zip(&cache.indices) {
            let mut col = g_enc1.weights.column_mut(j);
            col += &row;
        }
        g_enc1.bias = d_eh1.sum_axis(Axis(0));

        ModelGrads { encoder: vec![g_enc1, g_enc2, g_enc3], decoder: vec![g_dec1, g_dec2, g_dec3] }
    }

    /// Loss and gradients for one batch under a fixed channel realization.
    pub fn loss_and_grads(&self, indices: &[usize], channel: &ChannelRealization<T>) -> Result<(T, ModelGrads<T>)> {
        let cache = self.forward_train(indices, channel)?;
        let loss = self.loss(&cache);
        Ok((loss, self.backward(&cache, channel)))
    }

    /// Converts to another scalar type (e.g. f64 training, f32 inference).
    pub fn cast<U: Scalar>(&self) -> NeuralCodeModel<U> {
        let conv = |l: &LayerParams<T>| LayerParams {
            weights: l.weights.mapv(|v| U::lit(v.as_f64())),
            bias: l.bias.mapv(|v| U::lit(v.as_f64())),
            activation: l.activation,
        };
        NeuralCodeModel {
            k1: self.k1,
            n1: self.n1,
            batch_size: self.batch_size,
            encoder: self.encoder.iter().map(conv).collect(),
            decoder: self.decoder.iter().map(conv).collect(),
            normalization: match &self.normalization {
                Normalization::PerBatch => Normalization::PerBatch,
                Normalization::Frozen(s) => Normalization::Frozen(BatchStats {
                    mean: s.mean.mapv(|v| U::lit(v.as_f64())),
                    std: s.std.mapv(|v| U::lit(v.as_f64())),
                }),
            },
        }
    }
}

/// Gradients of an affine layer given the gradient at its pre-activation.
/// Returns (parameter grads, gradient w.r.t. the layer input).
fn dense_backward<T: Scalar>(
    d_pre: &Array2<T>,
    input: &Array2<T>,
    layer: &LayerParams<T>,
) -> (LayerParams<T>, Array2<T>) {
    let weights = d_pre.t().dot(input);
    let weights = if weights.is_standard_layout() {
        weights
    } else {
        weights.as_standard_layout().into_owned()
    };
    let grads = LayerParams {
        weights,
        bias: d_pre.sum_axis(Axis(0)),
        activation: layer.activation,
    };
    let d_input = d_pre.dot(&layer.weights);
    (grads, d_input)
}
