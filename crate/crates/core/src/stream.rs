//! Stateful block-by-block execution of the model.
//!
//! A stream consumes arbitrary-length stereo blocks and emits output under a
//! hard schedule: after every push, exactly `max(0, samples_in -
//! lookahead_samples)` samples have been emitted in total, and `close`
//! flushes the rest by zero-padding the unseen future, so the emitted total
//! equals the pushed total. Internally the engine advances one encoder
//! frame (one stride) at a time; symmetric separator layers run as delayed
//! causal convolutions over fixed ring buffers, cumulative norms carry
//! running double-precision sums, and the decoder overlap-adds into a ring
//! the size of one encoder kernel.
//!
//! Every arithmetic step replicates the offline forward pass' operation and
//! summation order, so a stream reproduces `forward_offline` bit for bit,
//! regardless of how the input is split into blocks. All buffers are sized
//! at `open_stream`; pushing never grows state.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::clip::AudioClip;
use crate::error::{Error, Result};
use crate::model::{Block, Model, NORM_EPS};
use crate::tensor::CumulativeNormState;

/// Fixed-size ring of equally sized frames, zero-initialized and always
/// "full": pushing overwrites the oldest frame, and reading an age beyond
/// what was pushed yields the zero history that offline padding sees.
#[derive(Debug, Clone)]
struct FrameRing {
    data: Vec<f32>,
    frame_size: usize,
    frames: usize,
    next: usize,
}

impl FrameRing {
    fn new(frame_size: usize, frames: usize) -> Self {
        Self { data: vec![0.0; frame_size * frames], frame_size, frames, next: 0 }
    }

    fn push(&mut self, frame: &[f32]) {
        debug_assert_eq!(frame.len(), self.frame_size);
        let base = self.next * self.frame_size;
        self.data[base..base + self.frame_size].copy_from_slice(frame);
        self.next = (self.next + 1) % self.frames;
    }

    /// Frame pushed `age` pushes ago (0 = newest).
    fn frame(&self, age: usize) -> &[f32] {
        debug_assert!(age < self.frames);
        let idx = (self.next + self.frames - 1 - age) % self.frames;
        &self.data[idx * self.frame_size..(idx + 1) * self.frame_size]
    }

    fn bytes(&self) -> usize {
        self.data.len() * core::mem::size_of::<f32>()
    }
}

/// Overlap-add accumulator over absolute sample positions, one encoder
/// kernel wide.
#[derive(Debug, Clone)]
struct OlaBuffer {
    data: Vec<f64>,
    frontier: usize,
}

impl OlaBuffer {
    fn new(cap: usize) -> Self {
        Self { data: vec![0.0; cap], frontier: 0 }
    }

    #[inline]
    fn add(&mut self, pos: usize, value: f64) {
        debug_assert!(pos >= self.frontier && pos < self.frontier + self.data.len());
        let cap = self.data.len();
        self.data[pos % cap] += value;
    }

    /// Pops the accumulator at the frontier, resetting the slot.
    #[inline]
    fn finalize_one(&mut self) -> f64 {
        let cap = self.data.len();
        let slot = self.frontier % cap;
        let v = self.data[slot];
        self.data[slot] = 0.0;
        self.frontier += 1;
        v
    }

    fn bytes(&self) -> usize {
        self.data.len() * core::mem::size_of::<f64>()
    }
}

/// Fixed-capacity FIFO of finalized samples awaiting their emission slot.
#[derive(Debug, Clone)]
struct SampleRing {
    data: Vec<f32>,
    head: usize,
    len: usize,
}

impl SampleRing {
    fn new(cap: usize) -> Self {
        Self { data: vec![0.0; cap], head: 0, len: 0 }
    }

    fn push(&mut self, v: f32) {
        assert!(self.len < self.data.len(), "staging ring overflow");
        let cap = self.data.len();
        self.data[(self.head + self.len) % cap] = v;
        self.len += 1;
    }

    fn pop(&mut self) -> f32 {
        debug_assert!(self.len > 0);
        let v = self.data[self.head];
        self.head = (self.head + 1) % self.data.len();
        self.len -= 1;
        v
    }

    fn bytes(&self) -> usize {
        self.data.len() * core::mem::size_of::<f32>()
    }
}

#[derive(Debug, Clone)]
struct BlockState {
    dw_ring: FrameRing,
    res_delay: FrameRing,
    norm1: CumulativeNormState,
    norm2: CumulativeNormState,
    /// Future frames this block buffers before emitting (0 when causal).
    lookahead: usize,
    frames_in: u64,
}

/// Per-stream memory, by buffer class. `total_bytes` is the sum of the
/// other fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFootprint {
    pub input_window_bytes: usize,
    pub encoder_delay_bytes: usize,
    pub separator_bytes: usize,
    pub overlap_add_bytes: usize,
    pub staging_bytes: usize,
    pub scratch_bytes: usize,
    pub total_bytes: usize,
}

/// Streaming execution state over a shared, immutable model.
///
/// Single-owner: one caller at a time; distinct streams over one model may
/// run in parallel.
#[derive(Debug, Clone)]
pub struct StreamState<'m> {
    model: &'m Model,
    closed: bool,
    samples_in: u64,
    samples_out: u64,
    mask_frames_done: u64,
    lookahead: usize,
    lookahead_frames: usize,

    window: [Vec<f32>; 2],
    window_fill: usize,
    enc_delay: FrameRing,
    blocks: Vec<BlockState>,
    ola: [OlaBuffer; 2],
    staging: [SampleRing; 2],

    frame_flat: Vec<f32>,
    mask_flat: Vec<f32>,
    x_cur: Vec<f32>,
    y_tmp: Vec<f32>,
    z_tmp: Vec<f32>,
}

impl Model {
    /// Opens a zero-initialized stream. All buffers are allocated here;
    /// their sizes never change while streaming.
    pub fn open_stream(&self) -> StreamState<'_> {
        let cfg = self.config();
        let l = cfg.encoder.kernel;
        let s = cfg.encoder.stride;
        let n = cfg.encoder.embed_dim;
        let b = cfg.separator.channels;
        let p = cfg.separator.kernel;
        let la_frames = cfg.lookahead_frames();

        let blocks = self
            .blocks
            .iter()
            .map(|blk| {
                let lookahead = blk.lookahead(p);
                BlockState {
                    dw_ring: FrameRing::new(b, (p - 1) * blk.dilation + 1),
                    res_delay: FrameRing::new(b, lookahead + 1),
                    norm1: CumulativeNormState::new(),
                    norm2: CumulativeNormState::new(),
                    lookahead,
                    frames_in: 0,
                }
            })
            .collect();

        StreamState {
            model: self,
            closed: false,
            samples_in: 0,
            samples_out: 0,
            mask_frames_done: 0,
            lookahead: self.lookahead_samples(),
            lookahead_frames: la_frames,
            window: [vec![0.0; l], vec![0.0; l]],
            window_fill: 0,
            enc_delay: FrameRing::new(2 * n, la_frames + 1),
            blocks,
            ola: [OlaBuffer::new(l), OlaBuffer::new(l)],
            staging: [SampleRing::new(l + 2 * s), SampleRing::new(l + 2 * s)],
            frame_flat: vec![0.0; 2 * n],
            mask_flat: vec![0.0; 2 * n],
            x_cur: vec![0.0; b],
            y_tmp: vec![0.0; b],
            z_tmp: vec![0.0; b],
        }
    }
}

impl<'m> StreamState<'m> {
    /// Samples of input that must be pushed beyond a position before that
    /// position's output is emitted.
    pub fn lookahead_samples(&self) -> usize {
        self.lookahead
    }

    pub fn samples_in(&self) -> u64 {
        self.samples_in
    }

    pub fn samples_out(&self) -> u64 {
        self.samples_out
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Per-stream memory by buffer class.
    pub fn footprint(&self) -> StreamFootprint {
        let input_window_bytes = self.window.iter().map(|w| w.len() * 4).sum();
        let encoder_delay_bytes = self.enc_delay.bytes();
        let separator_bytes = self
            .blocks
            .iter()
            .map(|b| b.dw_ring.bytes() + b.res_delay.bytes() + 2 * core::mem::size_of::<CumulativeNormState>())
            .sum();
        let overlap_add_bytes = self.ola.iter().map(OlaBuffer::bytes).sum();
        let staging_bytes = self.staging.iter().map(SampleRing::bytes).sum();
        let scratch_bytes = (self.frame_flat.len()
            + self.mask_flat.len()
            + self.x_cur.len()
            + self.y_tmp.len()
            + self.z_tmp.len())
            * 4;
        StreamFootprint {
            input_window_bytes,
            encoder_delay_bytes,
            separator_bytes,
            overlap_add_bytes,
            staging_bytes,
            scratch_bytes,
            total_bytes: input_window_bytes
                + encoder_delay_bytes
                + separator_bytes
                + overlap_add_bytes
                + staging_bytes
                + scratch_bytes,
        }
    }

    /// Pushes a stereo block, returning whatever output its arrival makes
    /// emittable (possibly empty).
    pub fn push(&mut self, block: &AudioClip) -> Result<AudioClip> {
        if !block.is_stereo() {
            return Err(Error::Shape(String::from("stream input must be stereo")));
        }
        if block.sample_rate() != self.model.config().sample_rate {
            return Err(Error::Rate {
                expected: self.model.config().sample_rate,
                got: block.sample_rate(),
            });
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        self.push_into(block.channel(0), block.channel(1), &mut left, &mut right)?;
        AudioClip::stereo(left, right, self.model.config().sample_rate)
    }

    /// Allocation-free variant of [`push`](Self::push): appends emitted
    /// samples to the caller's buffers.
    pub fn push_into(
        &mut self,
        left: &[f32],
        right: &[f32],
        out_left: &mut Vec<f32>,
        out_right: &mut Vec<f32>,
    ) -> Result<()> {
        if self.closed {
            return Err(Error::State(String::from("push after close")));
        }
        if left.len() != right.len() {
            return Err(Error::Shape(alloc::format!(
                "left block has {} samples, right {}",
                left.len(),
                right.len()
            )));
        }
        self.samples_in += left.len() as u64;
        self.advance(left, right, out_left, out_right);
        self.drain(out_left, out_right);
        debug_assert_eq!(
            self.samples_out,
            self.samples_in.saturating_sub(self.lookahead as u64)
        );
        Ok(())
    }

    /// Flushes the final `lookahead_samples` by zero-padding the unseen
    /// future. Total emitted over the stream's life equals total pushed.
    pub fn close(&mut self) -> Result<AudioClip> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        self.close_into(&mut left, &mut right)?;
        AudioClip::stereo(left, right, self.model.config().sample_rate)
    }

    /// Allocation-free variant of [`close`](Self::close).
    pub fn close_into(&mut self, out_left: &mut Vec<f32>, out_right: &mut Vec<f32>) -> Result<()> {
        if self.closed {
            return Err(Error::State(String::from("stream already closed")));
        }
        self.closed = true;
        let total = self.samples_in;
        if total == 0 {
            return Ok(());
        }
        let stride = self.model.config().encoder.stride;
        let frames_needed = (total as usize).div_ceil(stride) as u64;
        let zeros = [0.0f32; 256];
        while self.mask_frames_done < frames_needed {
            let n = zeros.len().min(stride);
            self.advance(&zeros[..n], &zeros[..n], out_left, out_right);
        }
        self.drain(out_left, out_right);
        debug_assert_eq!(self.samples_out, self.samples_in);
        Ok(())
    }

    /// Feeds samples through the framing pipeline without touching the
    /// emission schedule; `close` reuses it for the zero tail.
    fn advance(
        &mut self,
        left: &[f32],
        right: &[f32],
        out_left: &mut Vec<f32>,
        out_right: &mut Vec<f32>,
    ) {
        let l = self.model.config().encoder.kernel;
        let s = self.model.config().encoder.stride;
        let mut consumed = 0;
        while consumed < left.len() {
            let take = (l - self.window_fill).min(left.len() - consumed);
            let at = self.window_fill;
            self.window[0][at..at + take].copy_from_slice(&left[consumed..consumed + take]);
            self.window[1][at..at + take].copy_from_slice(&right[consumed..consumed + take]);
            self.window_fill += take;
            consumed += take;
            if self.window_fill == l {
                self.process_frame();
                self.window[0].copy_within(s.., 0);
                self.window[1].copy_within(s.., 0);
                self.window_fill = l - s;
                self.drain(out_left, out_right);
            }
        }
    }

    /// Encodes the current window, cascades it through the separator, and,
    /// when a mask frame comes out, masks + decodes it, finalizing one
    /// stride of output.
    fn process_frame(&mut self) {
        let cfg = self.model.config();
        let n = cfg.encoder.embed_dim;
        let l = cfg.encoder.kernel;
        let s = cfg.encoder.stride;
        let p = cfg.separator.kernel;

        // Encoder: same loop order as conv2d (input channel, kernel row,
        // kernel column), bias first, f64 accumulation.
        let enc_w = self.model.encoder_weight.data();
        for ho in 0..2 {
            for oc in 0..n {
                let mut acc = self.model.encoder_bias[oc] as f64;
                for kh in 0..3 {
                    let h = ho + kh;
                    if h == 0 || h > 2 {
                        continue; // zero pad above/below the stereo axis
                    }
                    let row = &self.window[h - 1];
                    let w_row = &enc_w[(oc * 3 + kh) * l..(oc * 3 + kh + 1) * l];
                    for (x, w) in row.iter().zip(w_row) {
                        acc += *w as f64 * *x as f64;
                    }
                }
                self.frame_flat[ho * n + oc] = acc as f32;
            }
        }
        self.enc_delay.push(&self.frame_flat);

        // Separator entry: 2N -> B pointwise.
        pointwise(
            &self.model.entry.weight.data(),
            &self.model.entry.bias,
            &self.frame_flat,
            &mut self.x_cur,
        );

        // Cascade through the blocks; a warming-up symmetric block swallows
        // the frame and the cascade stops for this stride.
        for (state, weights) in self.blocks.iter_mut().zip(&self.model.blocks) {
            if !process_block(state, weights, p, &mut self.x_cur, &mut self.y_tmp, &mut self.z_tmp)
            {
                return;
            }
        }

        // Mask for frame m, multiplied into the encoder frame from la ago.
        pointwise(
            &self.model.mask.weight.data(),
            &self.model.mask.bias,
            &self.x_cur,
            &mut self.mask_flat,
        );
        for v in self.mask_flat.iter_mut() {
            *v = crate::tensor::sigmoid_scalar(*v);
        }
        let enc_frame = self.enc_delay.frame(self.lookahead_frames);
        for (m, e) in self.mask_flat.iter_mut().zip(enc_frame) {
            *m *= e;
        }

        // Decoder scatter for this frame: same order as conv2d_transposed
        // (time-major, then input channel, row, kernel row, kernel column).
        let m = self.mask_frames_done as usize;
        let dec_w = self.model.decoder_weight.data();
        for ic in 0..n {
            for hi in 0..2 {
                let x = self.mask_flat[hi * n + ic] as f64;
                for kh in 0..3 {
                    let h = hi + kh;
                    if h == 0 || h > 2 {
                        continue;
                    }
                    let w_row = &dec_w[(ic * 3 + kh) * l..(ic * 3 + kh + 1) * l];
                    let ola = &mut self.ola[h - 1];
                    for (kw, w) in w_row.iter().enumerate() {
                        ola.add(m * s + kw, x * *w as f64);
                    }
                }
            }
        }
        self.mask_frames_done += 1;

        // Samples [m*S, (m+1)*S) are final now: no later frame reaches them.
        let bias = self.model.decoder_bias as f64;
        for ch in 0..2 {
            for _ in 0..s {
                let v = (self.ola[ch].finalize_one() + bias) as f32;
                self.staging[ch].push(v);
            }
        }
    }

    /// Emits staged samples up to the schedule: `samples_in - lookahead`
    /// while streaming, everything pushed once the stream is closed.
    fn drain(&mut self, out_left: &mut Vec<f32>, out_right: &mut Vec<f32>) {
        let target = if self.closed {
            self.samples_in
        } else {
            self.samples_in.saturating_sub(self.lookahead as u64)
        };
        if target > self.samples_out {
            let take = ((target - self.samples_out) as usize).min(self.staging[0].len);
            self.emit(take, out_left, out_right);
        }
    }

    fn emit(&mut self, count: usize, out_left: &mut Vec<f32>, out_right: &mut Vec<f32>) {
        for _ in 0..count {
            out_left.push(self.staging[0].pop());
            out_right.push(self.staging[1].pop());
        }
        self.samples_out += count as u64;
    }
}

/// Pointwise (1x1) convolution of one frame, conv1d's summation order.
#[inline]
fn pointwise(weight: &[f32], bias: &[f32], input: &[f32], out: &mut [f32]) {
    let c_in = input.len();
    for (oc, o) in out.iter_mut().enumerate() {
        let mut acc = bias[oc] as f64;
        let w_row = &weight[oc * c_in..(oc + 1) * c_in];
        for (w, x) in w_row.iter().zip(input) {
            acc += *w as f64 * *x as f64;
        }
        *o = acc as f32;
    }
}

#[inline]
fn prelu_frame(frame: &mut [f32], slopes: &[f32]) {
    for (v, s) in frame.iter_mut().zip(slopes) {
        if *v < 0.0 {
            *v *= s;
        }
    }
}

/// One block step. `x` holds the block input frame on entry and, when the
/// block emits, the block output frame on exit. Returns false while a
/// symmetric block is still buffering its look-ahead.
fn process_block(
    state: &mut BlockState,
    weights: &Block,
    kernel: usize,
    x: &mut [f32],
    y: &mut [f32],
    z: &mut [f32],
) -> bool {
    pointwise(weights.pw1.weight.data(), &weights.pw1.bias, x, y);
    prelu_frame(y, &weights.prelu1);
    state
        .norm1
        .normalize_frame(y, &weights.norm1_gain, &weights.norm1_bias, NORM_EPS);
    state.res_delay.push(x);
    state.dw_ring.push(y);
    state.frames_in += 1;
    if state.frames_in <= state.lookahead as u64 {
        return false;
    }

    // Depthwise dilated tap sum; ages run oldest-to-newest as conv1d's tap
    // loop runs left-to-right.
    let d = weights.dilation;
    let dw_w = weights.dw_weight.data();
    for (c, out) in z.iter_mut().enumerate() {
        let mut acc = weights.dw_bias[c] as f64;
        for k in 0..kernel {
            let age = (kernel - 1 - k) * d;
            acc += dw_w[c * kernel + k] as f64 * state.dw_ring.frame(age)[c] as f64;
        }
        *out = acc as f32;
    }
    prelu_frame(z, &weights.prelu2);
    state
        .norm2
        .normalize_frame(z, &weights.norm2_gain, &weights.norm2_bias, NORM_EPS);
    pointwise(weights.pw2.weight.data(), &weights.pw2.bias, z, y);
    let residual = state.res_delay.frame(state.lookahead);
    for (o, (r, v)) in x.iter_mut().zip(residual.iter().zip(y.iter())) {
        *o = r + v;
    }
    true
}
