//! Dense tensors and the convolutional primitives the model is built from.
//!
//! All kernels are plain loops: `[channels, time]` for 1-D ops and
//! `[channels, height, width]` for 2-D ops, row-major. Convolution follows
//! the deep-learning convention (cross-correlation, no kernel flip).
//! Accumulation runs in f64 with a fixed summation order — input channels
//! first, then taps — so offline and streaming execution produce identical
//! bits; results are stored as f32.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A dense real tensor with an explicit shape, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f32>) -> Result<Self> {
        let shape = shape.into();
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} wants {} elements, data has {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let len = shape.iter().product();
        Self { shape, data: vec![0.0; len] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Element-wise sum; shapes must match exactly.
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    fn expect_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.rank() != rank {
            return Err(Error::Shape(format!(
                "{what}: expected rank {rank}, got shape {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

/// How a 1-D convolution pads its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingMode {
    /// Left-pad by the full context: output frame `t` sees inputs `<= t`.
    Causal,
    /// Split the total pad evenly, extra frame on the left.
    Symmetric,
}

/// Geometry of a 1-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub kernel_size: usize,
    pub dilation: usize,
    pub padding_mode: PaddingMode,
    pub stride: usize,
    pub groups: usize,
}

impl ConvSpec {
    pub fn causal(kernel_size: usize, dilation: usize) -> Self {
        Self {
            kernel_size,
            dilation,
            padding_mode: PaddingMode::Causal,
            stride: 1,
            groups: 1,
        }
    }

    pub fn symmetric(kernel_size: usize, dilation: usize) -> Self {
        Self {
            padding_mode: PaddingMode::Symmetric,
            ..Self::causal(kernel_size, dilation)
        }
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    /// Span of the dilated kernel in frames.
    pub fn effective_kernel(&self) -> usize {
        (self.kernel_size - 1) * self.dilation + 1
    }

    /// Total padding so that stride-1 convolution preserves length.
    pub fn total_pad(&self) -> usize {
        self.effective_kernel() - 1
    }

    pub fn pad_left(&self) -> usize {
        match self.padding_mode {
            PaddingMode::Causal => self.total_pad(),
            PaddingMode::Symmetric => self.total_pad().div_ceil(2),
        }
    }

    pub fn pad_right(&self) -> usize {
        self.total_pad() - self.pad_left()
    }

    /// Number of future frames an output frame depends on.
    pub fn lookahead_frames(&self) -> usize {
        self.pad_right()
    }

    fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.dilation == 0 || self.stride == 0 || self.groups == 0 {
            return Err(Error::Shape(String::from(
                "kernel_size, dilation, stride and groups must be positive",
            )));
        }
        Ok(())
    }
}

/// 1-D convolution over `[C_in, T]` with weights `[C_out, C_in/groups, K]`.
///
/// With stride 1 the output length equals the input length; in causal mode
/// output frame `t` depends only on input frames `<= t`.
pub fn conv1d(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&[f32]>,
    spec: &ConvSpec,
) -> Result<Tensor> {
    spec.validate()?;
    input.expect_rank(2, "conv1d input")?;
    weight.expect_rank(3, "conv1d weight")?;
    let (c_in, t_in) = (input.shape[0], input.shape[1]);
    let (c_out, w_cin, k) = (weight.shape[0], weight.shape[1], weight.shape[2]);
    if k != spec.kernel_size {
        return Err(Error::Shape(format!(
            "weight kernel {} != spec kernel {}",
            k, spec.kernel_size
        )));
    }
    if c_in % spec.groups != 0 || c_out % spec.groups != 0 {
        return Err(Error::Shape(format!(
            "channels ({c_in} in, {c_out} out) not divisible by groups {}",
            spec.groups
        )));
    }
    if w_cin != c_in / spec.groups {
        return Err(Error::Shape(format!(
            "weight expects {} input channels per group, input provides {}",
            w_cin,
            c_in / spec.groups
        )));
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::Shape(format!(
                "bias length {} != output channels {}",
                b.len(),
                c_out
            )));
        }
    }

    let eff = spec.effective_kernel();
    let padded = t_in + spec.total_pad();
    if padded < eff {
        return Err(Error::Shape(format!(
            "input of {t_in} frames too short for effective kernel {eff}"
        )));
    }
    let t_out = (padded - eff) / spec.stride + 1;
    let pad_left = spec.pad_left() as isize;
    let in_per_group = c_in / spec.groups;
    let out_per_group = c_out / spec.groups;

    let mut out = Tensor::zeros([c_out, t_out]);
    for oc in 0..c_out {
        let group = oc / out_per_group;
        let w_base = oc * w_cin * k;
        for t in 0..t_out {
            let origin = (t * spec.stride) as isize - pad_left;
            let mut acc = bias.map_or(0.0, |b| b[oc] as f64);
            for icg in 0..in_per_group {
                let ic = group * in_per_group + icg;
                let row = &input.data[ic * t_in..(ic + 1) * t_in];
                let w_row = &weight.data[w_base + icg * k..w_base + (icg + 1) * k];
                for (tap, &w) in w_row.iter().enumerate() {
                    let pos = origin + (tap * spec.dilation) as isize;
                    if pos >= 0 && (pos as usize) < t_in {
                        acc += w as f64 * row[pos as usize] as f64;
                    }
                }
            }
            out.data[oc * t_out + t] = acc as f32;
        }
    }
    Ok(out)
}

/// Depthwise dilated convolution followed by a 1x1 pointwise convolution.
///
/// `dw_weight` is `[C, 1, K]` applied with `groups = C`; `pw_weight` is
/// `[C_out, C, 1]`.
pub fn depthwise_separable(
    input: &Tensor,
    dw_weight: &Tensor,
    dw_bias: Option<&[f32]>,
    pw_weight: &Tensor,
    pw_bias: Option<&[f32]>,
    spec: &ConvSpec,
) -> Result<Tensor> {
    input.expect_rank(2, "depthwise input")?;
    let channels = input.shape[0];
    let dw_spec = ConvSpec { groups: channels, ..*spec };
    let depthwise = conv1d(input, dw_weight, dw_bias, &dw_spec)?;
    let pw_spec = ConvSpec::causal(1, 1);
    conv1d(&depthwise, pw_weight, pw_bias, &pw_spec)
}

/// 2-D convolution over `[C_in, H, W]` with weights `[C_out, C_in, KH, KW]`.
///
/// Explicit zero padding `pad_hw` is applied on both sides of each axis.
pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&[f32]>,
    stride_hw: (usize, usize),
    pad_hw: (usize, usize),
) -> Result<Tensor> {
    input.expect_rank(3, "conv2d input")?;
    weight.expect_rank(4, "conv2d weight")?;
    let (c_in, h_in, w_in) = (input.shape[0], input.shape[1], input.shape[2]);
    let (c_out, w_cin, kh, kw) = (
        weight.shape[0],
        weight.shape[1],
        weight.shape[2],
        weight.shape[3],
    );
    if w_cin != c_in {
        return Err(Error::Shape(format!(
            "conv2d weight expects {w_cin} input channels, input has {c_in}"
        )));
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::Shape(format!(
                "bias length {} != output channels {}",
                b.len(),
                c_out
            )));
        }
    }
    let (sh, sw) = stride_hw;
    let (ph, pw) = pad_hw;
    if sh == 0 || sw == 0 {
        return Err(Error::Shape(String::from("stride must be positive")));
    }
    if h_in + 2 * ph < kh || w_in + 2 * pw < kw {
        return Err(Error::Shape(format!(
            "input {h_in}x{w_in} (pad {ph},{pw}) smaller than kernel {kh}x{kw}"
        )));
    }
    let h_out = (h_in + 2 * ph - kh) / sh + 1;
    let w_out = (w_in + 2 * pw - kw) / sw + 1;

    let mut out = Tensor::zeros([c_out, h_out, w_out]);
    for oc in 0..c_out {
        for ho in 0..h_out {
            for wo in 0..w_out {
                let mut acc = bias.map_or(0.0, |b| b[oc] as f64);
                for ic in 0..c_in {
                    for dh in 0..kh {
                        let h = (ho * sh + dh) as isize - ph as isize;
                        if h < 0 || h as usize >= h_in {
                            continue;
                        }
                        let in_row = &input.data
                            [(ic * h_in + h as usize) * w_in..(ic * h_in + h as usize + 1) * w_in];
                        let w_row = &weight.data[((oc * c_in + ic) * kh + dh) * kw
                            ..((oc * c_in + ic) * kh + dh + 1) * kw];
                        for (dw, &wv) in w_row.iter().enumerate() {
                            let w = (wo * sw + dw) as isize - pw as isize;
                            if w >= 0 && (w as usize) < w_in {
                                acc += wv as f64 * in_row[w as usize] as f64;
                            }
                        }
                    }
                }
                out.data[(oc * h_out + ho) * w_out + wo] = acc as f32;
            }
        }
    }
    Ok(out)
}

/// Transposed 2-D convolution (gradient-of-conv semantics) over
/// `[C_in, H, W]` with weights `[C_in, C_out, KH, KW]`.
///
/// Output size per axis is `(in - 1) * stride + kernel - 2 * pad`. For
/// stride `(1, S)` this upsamples the time axis by `S`. The kernel is
/// scatter-added input-position by input-position (time-major) with f64
/// accumulation, and the bias is added once per output element at readout;
/// the streaming decoder reproduces the identical order.
pub fn conv2d_transposed(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&[f32]>,
    stride_hw: (usize, usize),
    pad_hw: (usize, usize),
) -> Result<Tensor> {
    input.expect_rank(3, "conv2d_transposed input")?;
    weight.expect_rank(4, "conv2d_transposed weight")?;
    let (c_in, h_in, w_in) = (input.shape[0], input.shape[1], input.shape[2]);
    let (w_cin, c_out, kh, kw) = (
        weight.shape[0],
        weight.shape[1],
        weight.shape[2],
        weight.shape[3],
    );
    if w_cin != c_in {
        return Err(Error::Shape(format!(
            "weight expects {w_cin} input channels, input has {c_in}"
        )));
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::Shape(format!(
                "bias length {} != output channels {}",
                b.len(),
                c_out
            )));
        }
    }
    let (sh, sw) = stride_hw;
    let (ph, pw) = pad_hw;
    if sh == 0 || sw == 0 {
        return Err(Error::Shape(String::from("stride must be positive")));
    }
    if h_in == 0 || w_in == 0 {
        return Err(Error::Shape(String::from("empty input")));
    }
    let h_full = (h_in - 1) * sh + kh;
    let w_full = (w_in - 1) * sw + kw;
    if h_full < 2 * ph || w_full < 2 * pw {
        return Err(Error::Shape(String::from("padding exceeds output extent")));
    }
    let h_out = h_full - 2 * ph;
    let w_out = w_full - 2 * pw;

    let mut acc = vec![0.0f64; c_out * h_out * w_out];
    for wi in 0..w_in {
        for ic in 0..c_in {
            for hi in 0..h_in {
                let x = input.data[(ic * h_in + hi) * w_in + wi] as f64;
                for oc in 0..c_out {
                    for dh in 0..kh {
                        let h = (hi * sh + dh) as isize - ph as isize;
                        if h < 0 || h as usize >= h_out {
                            continue;
                        }
                        let w_row = &weight.data[((ic * c_out + oc) * kh + dh) * kw
                            ..((ic * c_out + oc) * kh + dh + 1) * kw];
                        for (dw, &wv) in w_row.iter().enumerate() {
                            let w = (wi * sw + dw) as isize - pw as isize;
                            if w >= 0 && (w as usize) < w_out {
                                acc[(oc * h_out + h as usize) * w_out + w as usize] +=
                                    x * wv as f64;
                            }
                        }
                    }
                }
            }
        }
    }

    let mut out = Tensor::zeros([c_out, h_out, w_out]);
    for oc in 0..c_out {
        let b = bias.map_or(0.0, |b| b[oc] as f64);
        for i in 0..h_out * w_out {
            out.data[oc * h_out * w_out + i] = (acc[oc * h_out * w_out + i] + b) as f32;
        }
    }
    Ok(out)
}

/// Parametric ReLU with one slope per channel (dimension 0).
pub fn prelu(input: &Tensor, slope_per_channel: &[f32]) -> Result<Tensor> {
    if input.rank() == 0 || input.shape[0] != slope_per_channel.len() {
        return Err(Error::Shape(format!(
            "prelu: {} slopes for shape {:?}",
            slope_per_channel.len(),
            input.shape
        )));
    }
    let per_channel = input.len() / input.shape[0];
    let mut out = input.clone();
    for (c, &slope) in slope_per_channel.iter().enumerate() {
        for v in &mut out.data[c * per_channel..(c + 1) * per_channel] {
            if *v < 0.0 {
                *v *= slope;
            }
        }
    }
    Ok(out)
}

/// Element-wise logistic sigmoid, `1 / (1 + e^-x)`, range `(0, 1)`.
pub fn sigmoid(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in &mut out.data {
        *v = sigmoid_scalar(*v);
    }
    out
}

#[inline]
pub(crate) fn sigmoid_scalar(x: f32) -> f32 {
    (1.0 / (1.0 + math::exp(-(x as f64)))) as f32
}

/// Running statistics for cumulative layer normalization.
///
/// Holds the count, sum and sum of squares over all channels and all frames
/// seen so far, in double precision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CumulativeNormState {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl CumulativeNormState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one frame (one value per channel) into the statistics and
    /// normalizes it in place: `gain * (x - mean) / sqrt(var + eps) + bias`.
    pub fn normalize_frame(&mut self, frame: &mut [f32], gain: &[f32], bias: &[f32], eps: f64) {
        for &v in frame.iter() {
            self.sum += v as f64;
            self.sum_sq += v as f64 * v as f64;
        }
        self.count += frame.len() as u64;
        let mean = self.sum / self.count as f64;
        let var = (self.sum_sq / self.count as f64 - mean * mean).max(0.0);
        let inv = 1.0 / math::sqrt(var + eps);
        for (c, v) in frame.iter_mut().enumerate() {
            *v = (gain[c] as f64 * ((*v as f64 - mean) * inv) + bias[c] as f64) as f32;
        }
    }
}

/// Cumulative layer normalization over `[C, T]`.
///
/// Frame `t` is normalized with the mean and variance of all channels over
/// frames `0..=t`, then shifted per channel by `gain`/`bias`. Causal by
/// construction: the statistics never look ahead.
pub fn cumulative_layer_norm(
    input: &Tensor,
    gain: &[f32],
    bias: &[f32],
    eps: f64,
) -> Result<Tensor> {
    input.expect_rank(2, "cumulative_layer_norm input")?;
    let (channels, frames) = (input.shape[0], input.shape[1]);
    if gain.len() != channels || bias.len() != channels {
        return Err(Error::Shape(format!(
            "gain/bias of {}/{} for {} channels",
            gain.len(),
            bias.len(),
            channels
        )));
    }
    if eps <= 0.0 {
        return Err(Error::Shape(String::from("eps must be positive")));
    }
    let mut out = input.clone();
    let mut state = CumulativeNormState::new();
    let mut frame = vec![0.0f32; channels];
    for t in 0..frames {
        for c in 0..channels {
            frame[c] = input.data[c * frames + t];
        }
        state.normalize_frame(&mut frame, gain, bias, eps);
        for c in 0..channels {
            out.data[c * frames + t] = frame[c];
        }
    }
    Ok(out)
}
