//! The stereo masking separator: encoder, dilated separator stack, mask
//! application and decoder, plus the budget calculator and weight plumbing.
//!
//! The encoder views stereo input as `[1, 2, T]` and applies a height-3
//! zero-padded 2-D convolution with stride `(1, S)`, so each of the two
//! embedding rows sees both input channels. The rows are stacked to a
//! `2N`-channel sequence for the separator, whose mask is un-stacked and
//! multiplied into the embedding before the transposed-conv decoder mirrors
//! the encoder back to stereo samples.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::clip::AudioClip;
use crate::config::{MaskActivation, ModelConfig, TensorInit};
use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{
    conv1d, conv2d, conv2d_transposed, cumulative_layer_norm, prelu, sigmoid, ConvSpec,
    PaddingMode, Tensor,
};
use crate::weights::WeightStore;

/// Epsilon of every normalization in the network.
pub const NORM_EPS: f64 = 1e-8;

/// Receptive field, look-ahead and parameter count implied by a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    pub receptive_field_s: f64,
    pub lookahead_s: f64,
    pub param_count: usize,
    pub receptive_field_samples: usize,
    pub lookahead_samples: usize,
}

/// Computes the budget without building the model.
///
/// The receptive field spans `1 + sum((P-1) * dilation)` separator frames
/// plus the encoder kernel; the look-ahead counts only the symmetric
/// layers' future taps. The parameter count enumerates every tensor the
/// config implies, exactly.
pub fn budget(config: &ModelConfig) -> Result<BudgetReport> {
    config.validate()?;
    let stride = config.encoder.stride;
    let kernel = config.encoder.kernel;
    let rf_frames = config.receptive_frames();
    let receptive_field_samples = (rf_frames - 1) * stride + kernel;
    let lookahead_samples = config.lookahead_frames() * stride;
    let rate = config.sample_rate as f64;
    Ok(BudgetReport {
        receptive_field_s: receptive_field_samples as f64 / rate,
        lookahead_s: lookahead_samples as f64 / rate,
        param_count: config.param_count(),
        receptive_field_samples,
        lookahead_samples,
    })
}

/// Seeded weight generation: `uniform(-k, k)` with `k = 1/sqrt(fan_in)` for
/// convolution weights and biases, 0.25 for PReLU slopes, identity for the
/// norm affine parameters. The same seed always yields the same bytes.
pub fn random_init(config: &ModelConfig, seed: u64) -> Result<WeightStore> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore::new(config.config_hash());
    for spec in config.tensor_specs() {
        let count = spec.elements();
        let data = match spec.init {
            TensorInit::Uniform { fan_in } => {
                let k = 1.0 / math::sqrt(fan_in as f64) as f32;
                (0..count).map(|_| (uniform01(&mut rng) * 2.0 - 1.0) * k).collect()
            }
            TensorInit::Constant(c) => vec![c; count],
        };
        store.insert(spec.name, Tensor::new(spec.shape, data)?)?;
    }
    Ok(store)
}

#[inline]
fn uniform01(rng: &mut ChaCha8Rng) -> f32 {
    // 24 high bits -> [0, 1); exact on f32.
    (rng.next_u32() >> 8) as f32 * (1.0 / (1 << 24) as f32)
}

#[derive(Debug, Clone)]
pub(crate) struct Conv1x1 {
    pub(crate) weight: Tensor,
    pub(crate) bias: Vec<f32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub(crate) pw1: Conv1x1,
    pub(crate) prelu1: Vec<f32>,
    pub(crate) norm1_gain: Vec<f32>,
    pub(crate) norm1_bias: Vec<f32>,
    pub(crate) dw_weight: Tensor,
    pub(crate) dw_bias: Vec<f32>,
    pub(crate) dilation: usize,
    pub(crate) causal: bool,
    pub(crate) prelu2: Vec<f32>,
    pub(crate) norm2_gain: Vec<f32>,
    pub(crate) norm2_bias: Vec<f32>,
    pub(crate) pw2: Conv1x1,
}

impl Block {
    /// Future frames this block needs before it can emit a frame.
    pub(crate) fn lookahead(&self, kernel: usize) -> usize {
        if self.causal {
            0
        } else {
            (kernel - 1) * self.dilation / 2
        }
    }
}

/// An immutable, ready-to-run model. Safe to share across threads; the
/// offline forward pass is reentrant.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    pub(crate) encoder_weight: Tensor,
    pub(crate) encoder_bias: Vec<f32>,
    pub(crate) entry: Conv1x1,
    pub(crate) blocks: Vec<Block>,
    pub(crate) mask: Conv1x1,
    pub(crate) decoder_weight: Tensor,
    pub(crate) decoder_bias: f32,
}

/// Validates the store against the config and assembles the model.
///
/// Every tensor the config requires must be present with the exact shape;
/// unexpected extras are rejected too.
pub fn build_model(config: &ModelConfig, weights: &WeightStore) -> Result<Model> {
    config.validate()?;
    let specs = config.tensor_specs();
    for spec in &specs {
        match weights.get(&spec.name) {
            None => return Err(Error::Weight(format!("missing tensor `{}`", spec.name))),
            Some(t) if t.shape() != spec.shape.as_slice() => {
                return Err(Error::Weight(format!(
                    "tensor `{}` has shape {:?}, expected {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )))
            }
            Some(_) => {}
        }
    }
    if weights.len() != specs.len() {
        let expected: alloc::collections::BTreeSet<&str> =
            specs.iter().map(|s| s.name.as_str()).collect();
        let extra = weights
            .names()
            .find(|n| !expected.contains(n))
            .unwrap_or("?");
        return Err(Error::Weight(format!("unexpected tensor `{extra}`")));
    }

    let tensor = |name: &str| weights.get(name).unwrap().clone();
    let vector = |name: &str| weights.get(name).unwrap().data().to_vec();
    let conv = |name: &str| Conv1x1 {
        weight: tensor(&format!("{name}.weight")),
        bias: vector(&format!("{name}.bias")),
    };

    let blocks = config
        .layers()
        .iter()
        .map(|layer| {
            let base = format!("separator.g{}.l{}", layer.group, layer.index);
            Block {
                pw1: conv(&format!("{base}.pw1")),
                prelu1: vector(&format!("{base}.prelu1.slope")),
                norm1_gain: vector(&format!("{base}.norm1.gain")),
                norm1_bias: vector(&format!("{base}.norm1.bias")),
                dw_weight: tensor(&format!("{base}.dw.weight")),
                dw_bias: vector(&format!("{base}.dw.bias")),
                dilation: layer.dilation,
                causal: layer.causal,
                prelu2: vector(&format!("{base}.prelu2.slope")),
                norm2_gain: vector(&format!("{base}.norm2.gain")),
                norm2_bias: vector(&format!("{base}.norm2.bias")),
                pw2: conv(&format!("{base}.pw2")),
            }
        })
        .collect();

    Ok(Model {
        config: config.clone(),
        encoder_weight: tensor("encoder.weight"),
        encoder_bias: vector("encoder.bias"),
        entry: conv("separator.input"),
        blocks,
        mask: conv("separator.mask"),
        decoder_weight: tensor("decoder.weight"),
        decoder_bias: weights.get("decoder.bias").unwrap().data()[0],
    })
}

/// Convenience: build from a fresh seeded initialization.
pub fn build_random(config: &ModelConfig, seed: u64) -> Result<Model> {
    build_model(config, &random_init(config, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MaskMode {
    Normal,
    /// Test hook: bypass the separator and apply an all-ones mask, turning
    /// the network into the plain encoder/decoder reconstruction path.
    #[allow(dead_code)]
    AllOnes,
}

impl Model {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Separator look-ahead in embedding frames.
    pub fn lookahead_frames(&self) -> usize {
        self.config.lookahead_frames()
    }

    /// Operational look-ahead in samples: how far input must run ahead
    /// before an output sample is determined. Covers the separator's future
    /// frames plus the encoder window alignment.
    pub fn lookahead_samples(&self) -> usize {
        self.lookahead_frames() * self.config.encoder.stride + self.config.encoder.kernel - 1
    }

    /// Rebuilds the weight store (e.g. for saving).
    pub fn to_weight_store(&self) -> WeightStore {
        let mut store = WeightStore::new(self.config.config_hash());
        let mut put = |name: String, t: Tensor| store.insert(name, t).unwrap();
        let vec1 = |v: &[f32]| Tensor::new([v.len()], v.to_vec()).unwrap();

        put("encoder.weight".into(), self.encoder_weight.clone());
        put("encoder.bias".into(), vec1(&self.encoder_bias));
        put("separator.input.weight".into(), self.entry.weight.clone());
        put("separator.input.bias".into(), vec1(&self.entry.bias));
        for (layer, block) in self.config.layers().iter().zip(&self.blocks) {
            let base = format!("separator.g{}.l{}", layer.group, layer.index);
            put(format!("{base}.pw1.weight"), block.pw1.weight.clone());
            put(format!("{base}.pw1.bias"), vec1(&block.pw1.bias));
            put(format!("{base}.prelu1.slope"), vec1(&block.prelu1));
            put(format!("{base}.norm1.gain"), vec1(&block.norm1_gain));
            put(format!("{base}.norm1.bias"), vec1(&block.norm1_bias));
            put(format!("{base}.dw.weight"), block.dw_weight.clone());
            put(format!("{base}.dw.bias"), vec1(&block.dw_bias));
            put(format!("{base}.prelu2.slope"), vec1(&block.prelu2));
            put(format!("{base}.norm2.gain"), vec1(&block.norm2_gain));
            put(format!("{base}.norm2.bias"), vec1(&block.norm2_bias));
            put(format!("{base}.pw2.weight"), block.pw2.weight.clone());
            put(format!("{base}.pw2.bias"), vec1(&block.pw2.bias));
        }
        put("separator.mask.weight".into(), self.mask.weight.clone());
        put("separator.mask.bias".into(), vec1(&self.mask.bias));
        put("decoder.weight".into(), self.decoder_weight.clone());
        put("decoder.bias".into(), vec1(&[self.decoder_bias]));
        store
    }

    /// Offline forward pass: stereo mix in, stereo accompaniment estimate
    /// out, same length as the input.
    ///
    /// The input is zero-padded on the right by the look-ahead (plus frame
    /// alignment), exactly as the streaming path pads the end of a stream,
    /// so block streaming reproduces this output bit for bit.
    pub fn forward_offline(&self, mix: &AudioClip) -> Result<AudioClip> {
        self.forward_offline_impl(mix, MaskMode::Normal)
    }

    pub(crate) fn forward_offline_impl(
        &self,
        mix: &AudioClip,
        mask_mode: MaskMode,
    ) -> Result<AudioClip> {
        if !mix.is_stereo() {
            return Err(Error::Shape(String::from("model input must be stereo")));
        }
        if mix.sample_rate() != self.config.sample_rate {
            return Err(Error::Rate {
                expected: self.config.sample_rate,
                got: mix.sample_rate(),
            });
        }
        let t = mix.frames();
        let l = self.config.encoder.kernel;
        let s = self.config.encoder.stride;
        if t < l {
            return Err(Error::TooShort { len: t, min: l });
        }

        // Frames whose masked embedding is needed to cover sample t-1, plus
        // the separator's look-ahead on top.
        let m = (t + s - 1) / s; // mask frames
        let f_enc = m + self.lookahead_frames();
        let t_in = (f_enc - 1) * s + l;

        let mut input = Tensor::zeros([1, 2, t_in]);
        for (ch, row) in input.data_mut().chunks_mut(t_in).enumerate() {
            row[..t].copy_from_slice(mix.channel(ch));
        }

        let embedding = self.encode(&input)?; // [N, 2, F]
        let stacked = stack_embedding(&embedding); // [2N, F]
        let mask = match mask_mode {
            MaskMode::Normal => self.separator_mask(&stacked)?,
            MaskMode::AllOnes => {
                let mut ones = Tensor::zeros(stacked.shape().to_vec());
                ones.data_mut().fill(1.0);
                ones
            }
        };
        let masked = apply_mask(&embedding, &mask, m)?; // [N, 2, M]
        let decoded = self.decode(&masked)?; // [1, 2, (M-1)S + L]

        let width = decoded.shape()[2];
        let data = decoded.data();
        let left = data[..t].to_vec();
        let right = data[width..width + t].to_vec();
        AudioClip::stereo(left, right, self.config.sample_rate)
    }

    /// Encoder: `[1, 2, T]` -> `[N, 2, F]`.
    pub(crate) fn encode(&self, input: &Tensor) -> Result<Tensor> {
        conv2d(
            input,
            &self.encoder_weight,
            Some(&self.encoder_bias),
            (1, self.config.encoder.stride),
            (1, 0),
        )
    }

    /// Separator: stacked embedding `[2N, F]` -> mask `[2N, F]` in `(0, 1)`.
    pub(crate) fn separator_mask(&self, stacked: &Tensor) -> Result<Tensor> {
        let k1 = ConvSpec::causal(1, 1);
        let mut x = conv1d(stacked, &self.entry.weight, Some(&self.entry.bias), &k1)?;
        for block in &self.blocks {
            let mut y = conv1d(&x, &block.pw1.weight, Some(&block.pw1.bias), &k1)?;
            y = prelu(&y, &block.prelu1)?;
            y = cumulative_layer_norm(&y, &block.norm1_gain, &block.norm1_bias, NORM_EPS)?;
            let spec = ConvSpec {
                kernel_size: self.config.separator.kernel,
                dilation: block.dilation,
                padding_mode: if block.causal {
                    PaddingMode::Causal
                } else {
                    PaddingMode::Symmetric
                },
                stride: 1,
                groups: self.config.separator.channels,
            };
            y = conv1d(&y, &block.dw_weight, Some(&block.dw_bias), &spec)?;
            y = prelu(&y, &block.prelu2)?;
            y = cumulative_layer_norm(&y, &block.norm2_gain, &block.norm2_bias, NORM_EPS)?;
            y = conv1d(&y, &block.pw2.weight, Some(&block.pw2.bias), &k1)?;
            x = x.add(&y)?;
        }
        let logits = conv1d(&x, &self.mask.weight, Some(&self.mask.bias), &k1)?;
        Ok(match self.config.mask_activation {
            MaskActivation::Sigmoid => sigmoid(&logits),
        })
    }

    /// Decoder: masked embedding `[N, 2, M]` -> samples `[1, 2, (M-1)S+L]`.
    pub(crate) fn decode(&self, masked: &Tensor) -> Result<Tensor> {
        conv2d_transposed(
            masked,
            &self.decoder_weight,
            Some(&[self.decoder_bias]),
            (1, self.config.encoder.stride),
            (1, 0),
        )
    }
}

/// `[N, 2, F]` -> `[2N, F]`, left rows first.
pub(crate) fn stack_embedding(embedding: &Tensor) -> Tensor {
    let (n, h, f) = (
        embedding.shape()[0],
        embedding.shape()[1],
        embedding.shape()[2],
    );
    debug_assert_eq!(h, 2);
    let mut out = Tensor::zeros([2 * n, f]);
    for ch in 0..2 {
        for nn in 0..n {
            let src = &embedding.data()[(nn * 2 + ch) * f..(nn * 2 + ch + 1) * f];
            out.data_mut()[(ch * n + nn) * f..(ch * n + nn + 1) * f].copy_from_slice(src);
        }
    }
    out
}

/// Mask the first `m` frames of the embedding: `[N, 2, F]` x `[2N, F]` ->
/// `[N, 2, m]`.
pub(crate) fn apply_mask(embedding: &Tensor, mask: &Tensor, m: usize) -> Result<Tensor> {
    let (n, _, f) = (
        embedding.shape()[0],
        embedding.shape()[1],
        embedding.shape()[2],
    );
    if mask.shape() != [2 * n, f] || m > f {
        return Err(Error::Shape(format!(
            "mask {:?} does not fit embedding {:?} ({m} frames)",
            mask.shape(),
            embedding.shape()
        )));
    }
    let mut out = Tensor::zeros([n, 2, m]);
    for nn in 0..n {
        for ch in 0..2 {
            for t in 0..m {
                let e = embedding.data()[(nn * 2 + ch) * f + t];
                let g = mask.data()[(ch * n + nn) * f + t];
                out.data_mut()[(nn * 2 + ch) * m + t] = e * g;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::config::{EncoderConfig, SeparatorConfig};

    pub(crate) fn tiny_config() -> ModelConfig {
        ModelConfig {
            sample_rate: 8_000,
            encoder: EncoderConfig { embed_dim: 6, kernel: 8, stride: 4 },
            separator: SeparatorConfig {
                channels: 8,
                kernel: 3,
                layers_per_group: vec![3, 2],
                noncausal_groups: 1,
            },
            mask_activation: MaskActivation::Sigmoid,
        }
    }

    fn toy_config() -> ModelConfig {
        ModelConfig {
            sample_rate: 1,
            encoder: EncoderConfig { embed_dim: 1, kernel: 1, stride: 1 },
            separator: SeparatorConfig {
                channels: 1,
                kernel: 3,
                layers_per_group: vec![2],
                noncausal_groups: 0,
            },
            mask_activation: MaskActivation::Sigmoid,
        }
    }

    #[test]
    fn toy_budget_receptive_field() {
        // One causal group, X=2, P=3: 1 + 2*1 + 2*2 = 7 frames, no look-ahead.
        let report = budget(&toy_config()).unwrap();
        assert_eq!(report.receptive_field_samples, 7);
        assert_eq!(report.lookahead_samples, 0);
        assert_eq!(report.receptive_field_s, 7.0);
    }

    #[test]
    fn toy_budget_symmetric_lookahead() {
        let mut cfg = toy_config();
        cfg.separator.noncausal_groups = 1;
        let report = budget(&cfg).unwrap();
        assert_eq!(report.lookahead_samples, 3); // 1 + 2 future taps
        assert_eq!(report.receptive_field_samples, 7);
    }

    #[test]
    fn random_init_is_deterministic() {
        let cfg = tiny_config();
        let a = random_init(&cfg, 42).unwrap();
        let b = random_init(&cfg, 42).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = random_init(&cfg, 43).unwrap();
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn param_count_matches_store() {
        let cfg = tiny_config();
        let store = random_init(&cfg, 1).unwrap();
        assert_eq!(budget(&cfg).unwrap().param_count, store.param_count());
    }

    #[test]
    fn misshapen_tensor_is_named() {
        let cfg = tiny_config();
        let mut store = random_init(&cfg, 1).unwrap();
        let bad = Tensor::zeros([9]); // off by one
        store.insert("separator.g0.l0.prelu1.slope", bad).unwrap();
        match build_model(&cfg, &store) {
            Err(Error::Weight(msg)) => assert!(msg.contains("separator.g0.l0.prelu1.slope")),
            other => panic!("expected Weight error, got {other:?}"),
        }
    }

    #[test]
    fn missing_tensor_is_named() {
        let cfg = tiny_config();
        let store = random_init(&cfg, 1).unwrap();
        let mut pruned = WeightStore::new(store.config_hash());
        for (name, tensor) in store.iter() {
            if name != "decoder.bias" {
                pruned.insert(name, tensor.clone()).unwrap();
            }
        }
        match build_model(&cfg, &pruned) {
            Err(Error::Weight(msg)) => assert!(msg.contains("decoder.bias")),
            other => panic!("expected Weight error, got {other:?}"),
        }
    }

    #[test]
    fn store_round_trips_through_model() {
        let cfg = tiny_config();
        let store = random_init(&cfg, 7).unwrap();
        let model = build_model(&cfg, &store).unwrap();
        assert_eq!(model.to_weight_store().to_bytes(), store.to_bytes());
    }

    #[test]
    fn zero_biases_map_zero_to_zero() {
        let cfg = tiny_config();
        let mut store = random_init(&cfg, 3).unwrap();
        let zeroed: Vec<(String, Tensor)> = store
            .iter()
            .filter(|(name, _)| name.ends_with(".bias"))
            .map(|(name, t)| (String::from(name), Tensor::zeros(t.shape().to_vec())))
            .collect();
        for (name, t) in zeroed {
            store.insert(name, t).unwrap();
        }
        let model = build_model(&cfg, &store).unwrap();
        let silence = AudioClip::silence(2, 4_000, 8_000).unwrap();
        let out = model.forward_offline(&silence).unwrap();
        assert!(out.channel(0).iter().all(|&v| v == 0.0));
        assert!(out.channel(1).iter().all(|&v| v == 0.0));
        assert_eq!(out.frames(), 4_000);
    }

    #[test]
    fn all_ones_mask_reduces_to_reconstruction() {
        let cfg = tiny_config();
        let model = build_random(&cfg, 11).unwrap();
        let mix = test_signal(&cfg, 2_000);
        let hooked = model.forward_offline_impl(&mix, MaskMode::AllOnes).unwrap();

        // Manual encoder -> decoder composition.
        let t = mix.frames();
        let s = cfg.encoder.stride;
        let m = (t + s - 1) / s;
        let f_enc = m + cfg.lookahead_frames();
        let t_in = (f_enc - 1) * s + cfg.encoder.kernel;
        let mut input = Tensor::zeros([1, 2, t_in]);
        for (ch, row) in input.data_mut().chunks_mut(t_in).enumerate() {
            row[..t].copy_from_slice(mix.channel(ch));
        }
        let embedding = model.encode(&input).unwrap();
        let ones = {
            let mut m = Tensor::zeros([2 * cfg.encoder.embed_dim, f_enc]);
            m.data_mut().fill(1.0);
            m
        };
        let masked = apply_mask(&embedding, &ones, m).unwrap();
        let decoded = model.decode(&masked).unwrap();
        let width = decoded.shape()[2];
        assert_eq!(hooked.channel(0), &decoded.data()[..t]);
        assert_eq!(hooked.channel(1), &decoded.data()[width..width + t]);
    }

    #[test]
    fn output_length_equals_input_length() {
        let cfg = tiny_config();
        let model = build_random(&cfg, 5).unwrap();
        for t in [8usize, 9, 100, 1_000, 4_001] {
            let out = model.forward_offline(&test_signal(&cfg, t)).unwrap();
            assert_eq!(out.frames(), t);
            assert_eq!(out.channels(), 2);
        }
    }

    #[test]
    fn output_shape_at_44100() {
        // 1 s of stereo at 44.1 kHz comes back as [2 x 44100].
        let mut cfg = tiny_config();
        cfg.sample_rate = 44_100;
        let model = build_random(&cfg, 5).unwrap();
        let out = model.forward_offline(&test_signal(&cfg, 44_100)).unwrap();
        assert_eq!((out.channels(), out.frames()), (2, 44_100));
    }

    #[test]
    fn mono_input_rejected() {
        let cfg = tiny_config();
        let model = build_random(&cfg, 5).unwrap();
        let mono = AudioClip::mono(vec![0.0; 100], 8_000).unwrap();
        assert!(matches!(model.forward_offline(&mono), Err(Error::Shape(_))));
    }

    #[test]
    fn rate_mismatch_rejected() {
        let cfg = tiny_config();
        let model = build_random(&cfg, 5).unwrap();
        let wrong = AudioClip::silence(2, 100, 16_000).unwrap();
        assert!(matches!(
            model.forward_offline(&wrong),
            Err(Error::Rate { expected: 8_000, got: 16_000 })
        ));
    }

    #[test]
    fn right_channel_perturbation_reaches_left_output() {
        let cfg = tiny_config();
        let model = build_random(&cfg, 21).unwrap();
        let base = test_signal(&cfg, 1_500);
        let mut perturbed = base.clone();
        perturbed.channel_mut(1)[700] += 0.5;
        let a = model.forward_offline(&base).unwrap();
        let b = model.forward_offline(&perturbed).unwrap();
        let diff: f32 = a
            .channel(0)
            .iter()
            .zip(b.channel(0))
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(diff > 0.0, "left output ignored right input");
    }

    #[test]
    fn masks_stay_in_unit_interval() {
        let cfg = tiny_config();
        let model = build_random(&cfg, 9).unwrap();
        let mix = test_signal(&cfg, 1_000);
        let t_in = 1_024;
        let mut input = Tensor::zeros([1, 2, t_in]);
        for (ch, row) in input.data_mut().chunks_mut(t_in).enumerate() {
            row[..1_000].copy_from_slice(mix.channel(ch));
        }
        let embedding = model.encode(&input).unwrap();
        let stacked = stack_embedding(&embedding);
        let mask = model.separator_mask(&stacked).unwrap();
        assert!(mask.data().iter().all(|&v| v > 0.0 && v < 1.0));
        // masked magnitude never exceeds the unmasked embedding
        let masked = apply_mask(&embedding, &mask, embedding.shape()[2]).unwrap();
        for (m, e) in masked.data().iter().zip(embedding.data()) {
            assert!(m.abs() <= e.abs());
        }
    }

    pub(crate) fn test_signal(cfg: &ModelConfig, frames: usize) -> AudioClip {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA0D10);
        let mut channel = |phase: f64| -> Vec<f32> {
            (0..frames)
                .map(|i| {
                    let noise = uniform01(&mut rng) - 0.5;
                    (0.4 * math::sin(0.013 * i as f64 + phase)) as f32 + 0.2 * noise
                })
                .collect()
        };
        AudioClip::stereo(channel(0.0), channel(1.1), cfg.sample_rate).unwrap()
    }
}
