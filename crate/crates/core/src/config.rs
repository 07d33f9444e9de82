//! Model hyperparameters and the tensor layout they imply.
//!
//! The separator is a stack of dilated depthwise-separable blocks grouped
//! into dilation cycles: layer `x` of a group uses dilation `2^x`, and the
//! first `noncausal_groups` groups use symmetric (look-ahead) convolutions
//! while the rest are causal. Block width is fixed at `channels` throughout.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Encoder geometry: a 2-D convolution over `[1, 2, T]` producing one
/// embedding row per stereo channel.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EncoderConfig {
    /// Embedding channels (N).
    pub embed_dim: usize,
    /// Kernel length in samples along time (L).
    pub kernel: usize,
    /// Hop in samples along time (S).
    pub stride: usize,
}

/// Separator geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparatorConfig {
    /// Block width (B); both input and output width of every block.
    pub channels: usize,
    /// Depthwise kernel length in frames (P).
    pub kernel: usize,
    /// Number of layers in each dilation group; group `g` has layers with
    /// dilations `2^0 .. 2^(layers_per_group[g]-1)`.
    pub layers_per_group: Vec<usize>,
    /// How many leading groups use symmetric (non-causal) convolutions.
    pub noncausal_groups: usize,
}

/// Nonlinearity applied to the mask logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MaskActivation {
    #[default]
    Sigmoid,
}

/// Full architecture description.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub sample_rate: u32,
    pub encoder: EncoderConfig,
    pub separator: SeparatorConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mask_activation: MaskActivation,
}

/// One separator layer resolved from the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub group: usize,
    pub index: usize,
    pub dilation: usize,
    pub causal: bool,
}

/// How a tensor is initialized when no trained weights are supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TensorInit {
    /// `uniform(-k, k)` with `k = 1 / sqrt(fan_in)`.
    Uniform { fan_in: usize },
    Constant(f32),
}

/// Name, shape and init scheme of one model tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: TensorInit,
}

impl TensorSpec {
    pub fn elements(&self) -> usize {
        self.shape.iter().product()
    }
}

impl ModelConfig {
    /// The configuration this crate ships as its default model: a 44.1 kHz
    /// stereo separator solved against a ~1.85 s receptive field, ~0.37 s
    /// look-ahead and ~7.5 M parameters.
    pub fn reference() -> Self {
        Self {
            sample_rate: 44_100,
            encoder: EncoderConfig { embed_dim: 256, kernel: 128, stride: 64 },
            separator: SeparatorConfig {
                channels: 344,
                kernel: 3,
                layers_per_group: alloc::vec![8, 7, 7, 7],
                noncausal_groups: 1,
            },
            mask_activation: MaskActivation::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config(String::from("sample_rate must be positive")));
        }
        let e = &self.encoder;
        if e.embed_dim == 0 || e.kernel == 0 || e.stride == 0 {
            return Err(Error::Config(String::from(
                "encoder dimensions must be positive",
            )));
        }
        if e.kernel < e.stride {
            return Err(Error::Config(format!(
                "encoder kernel {} must be >= stride {}",
                e.kernel, e.stride
            )));
        }
        let s = &self.separator;
        if s.channels == 0 || s.kernel == 0 {
            return Err(Error::Config(String::from(
                "separator dimensions must be positive",
            )));
        }
        if s.layers_per_group.is_empty() {
            return Err(Error::Config(String::from("separator needs at least one group")));
        }
        if s.layers_per_group.iter().any(|&x| x == 0) {
            return Err(Error::Config(String::from("groups need at least one layer")));
        }
        if s.noncausal_groups > s.layers_per_group.len() {
            return Err(Error::Config(format!(
                "noncausal_groups {} exceeds group count {}",
                s.noncausal_groups,
                s.layers_per_group.len()
            )));
        }
        // Dilations are 2^x; cap so frame arithmetic cannot overflow.
        if s.layers_per_group.iter().any(|&x| x > 24) {
            return Err(Error::Config(String::from("more than 24 layers per group")));
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.separator.layers_per_group.len()
    }

    /// All separator layers in execution order.
    pub fn layers(&self) -> Vec<LayerSpec> {
        let mut out = Vec::new();
        for (group, &count) in self.separator.layers_per_group.iter().enumerate() {
            for index in 0..count {
                out.push(LayerSpec {
                    group,
                    index,
                    dilation: 1 << index,
                    causal: group >= self.separator.noncausal_groups,
                });
            }
        }
        out
    }

    /// Future frames needed by the separator: the sum of the symmetric
    /// layers' right-side context.
    pub fn lookahead_frames(&self) -> usize {
        self.layers()
            .iter()
            .filter(|l| !l.causal)
            .map(|l| (self.separator.kernel - 1) * l.dilation / 2)
            .sum()
    }

    /// Total span, in frames, of the separator's receptive field
    /// (`1 + sum over layers of (P-1) * dilation`).
    pub fn receptive_frames(&self) -> usize {
        1 + self
            .layers()
            .iter()
            .map(|l| (self.separator.kernel - 1) * l.dilation)
            .sum::<usize>()
    }

    /// Every tensor the model owns, in a fixed enumeration order. This is
    /// the single source of truth shared by random initialization, weight
    /// validation and the parameter budget.
    pub fn tensor_specs(&self) -> Vec<TensorSpec> {
        let n = self.encoder.embed_dim;
        let l = self.encoder.kernel;
        let b = self.separator.channels;
        let p = self.separator.kernel;
        let stacked = 2 * n;

        let mut specs = Vec::new();
        push_conv(&mut specs, String::from("encoder"), alloc::vec![n, 1, 3, l], 3 * l);
        push_conv(
            &mut specs,
            String::from("separator.input"),
            alloc::vec![b, stacked, 1],
            stacked,
        );
        for layer in self.layers() {
            let base = format!("separator.g{}.l{}", layer.group, layer.index);
            push_conv(&mut specs, format!("{base}.pw1"), alloc::vec![b, b, 1], b);
            specs.push(TensorSpec {
                name: format!("{base}.prelu1.slope"),
                shape: alloc::vec![b],
                init: TensorInit::Constant(0.25),
            });
            push_norm(&mut specs, &base, "norm1", b);
            push_conv(&mut specs, format!("{base}.dw"), alloc::vec![b, 1, p], p);
            specs.push(TensorSpec {
                name: format!("{base}.prelu2.slope"),
                shape: alloc::vec![b],
                init: TensorInit::Constant(0.25),
            });
            push_norm(&mut specs, &base, "norm2", b);
            push_conv(&mut specs, format!("{base}.pw2"), alloc::vec![b, b, 1], b);
        }
        push_conv(&mut specs, String::from("separator.mask"), alloc::vec![stacked, b, 1], b);
        // Transposed conv: weight layout [C_in, C_out, KH, KW].
        specs.push(TensorSpec {
            name: String::from("decoder.weight"),
            shape: alloc::vec![n, 1, 3, l],
            init: TensorInit::Uniform { fan_in: 3 * l },
        });
        specs.push(TensorSpec {
            name: String::from("decoder.bias"),
            shape: alloc::vec![1],
            init: TensorInit::Uniform { fan_in: 3 * l },
        });
        specs
    }

    /// Exact number of scalar parameters implied by the config.
    pub fn param_count(&self) -> usize {
        self.tensor_specs().iter().map(TensorSpec::elements).sum()
    }

    /// Deterministic textual form used for hashing.
    pub fn canonical_text(&self) -> String {
        let layers: Vec<String> = self
            .separator
            .layers_per_group
            .iter()
            .map(|x| format!("{x}"))
            .collect();
        format!(
            "sample_rate={}\nencoder.embed_dim={}\nencoder.kernel={}\nencoder.stride={}\n\
             separator.channels={}\nseparator.kernel={}\nseparator.layers_per_group={}\n\
             separator.noncausal_groups={}\nmask_activation=sigmoid\n",
            self.sample_rate,
            self.encoder.embed_dim,
            self.encoder.kernel,
            self.encoder.stride,
            self.separator.channels,
            self.separator.kernel,
            layers.join(","),
            self.separator.noncausal_groups,
        )
    }

    /// FNV-1a hash of the canonical text; stored in weight containers so a
    /// file can be matched to the architecture it was saved for.
    pub fn config_hash(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for byte in self.canonical_text().as_bytes() {
            hash ^= *byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash
    }
}

fn push_conv(specs: &mut Vec<TensorSpec>, name: String, shape: Vec<usize>, fan_in: usize) {
    specs.push(TensorSpec {
        name: format!("{name}.weight"),
        shape: shape.clone(),
        init: TensorInit::Uniform { fan_in },
    });
    specs.push(TensorSpec {
        name: format!("{name}.bias"),
        shape: alloc::vec![shape[0]],
        init: TensorInit::Uniform { fan_in },
    });
}

fn push_norm(specs: &mut Vec<TensorSpec>, base: &str, which: &str, channels: usize) {
    specs.push(TensorSpec {
        name: format!("{base}.{which}.gain"),
        shape: alloc::vec![channels],
        init: TensorInit::Constant(1.0),
    });
    specs.push(TensorSpec {
        name: format!("{base}.{which}.bias"),
        shape: alloc::vec![channels],
        init: TensorInit::Constant(0.0),
    });
}
