//! Dense f32 tensors and the raw compute kernels behind the autodiff tape.
//!
//! Tensors are plain row-major buffers. Convolutions go through im2col plus
//! a single sgemm call; the three conv kernels (`conv2d`, `conv2d_dinput`,
//! `conv2d_dweight`) are each other's adjoints, which is what makes
//! double-backward through the critic possible. All full reductions
//! accumulate in f64 so results are independent of summation tiling.

use crate::{Error, Result};

/// Dense row-major f32 tensor. Rank 0 (scalar) through rank 4 are used.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, data.len(), "shape {:?} does not match data len {}", shape, data.len());
        Tensor { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn full(shape: &[usize], v: f32) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; n],
        }
    }

    pub fn scalar(v: f32) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
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

    /// Value of a rank-0 or single-element tensor.
    pub fn item(&self) -> f32 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// (channels, height, width) of a rank-3 tensor.
    pub fn chw(&self) -> (usize, usize, usize) {
        assert_eq!(self.shape.len(), 3, "expected rank-3 tensor, got {:?}", self.shape);
        (self.shape[0], self.shape[1], self.shape[2])
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn require_same_shape(&self, other: &Tensor, what: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f32, f32) -> f32) -> Tensor {
    assert_eq!(a.shape, b.shape, "elementwise op on {:?} vs {:?}", a.shape, b.shape);
    Tensor {
        shape: a.shape.clone(),
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

pub fn add(a: &Tensor, b: &Tensor) -> Tensor {
    zip(a, b, |x, y| x + y)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Tensor {
    zip(a, b, |x, y| x - y)
}

pub fn mul(a: &Tensor, b: &Tensor) -> Tensor {
    zip(a, b, |x, y| x * y)
}

pub fn scale(a: &Tensor, s: f32) -> Tensor {
    a.map(|x| x * s)
}

pub fn add_scalar(a: &Tensor, s: f32) -> Tensor {
    a.map(|x| x + s)
}

pub fn neg(a: &Tensor) -> Tensor {
    a.map(|x| -x)
}

pub fn abs(a: &Tensor) -> Tensor {
    a.map(f32::abs)
}

/// Sign with sign(0) = 0, used as the (constant) derivative of `abs`.
pub fn sign(a: &Tensor) -> Tensor {
    a.map(|x| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn square(a: &Tensor) -> Tensor {
    a.map(|x| x * x)
}

pub fn sqrt(a: &Tensor) -> Tensor {
    a.map(f32::sqrt)
}

pub fn recip(a: &Tensor) -> Tensor {
    a.map(|x| 1.0 / x)
}

pub fn tanh(a: &Tensor) -> Tensor {
    a.map(f32::tanh)
}

/// Returns (y, mask) where mask holds the local slope (1 or `slope`).
pub fn leaky_relu(a: &Tensor, slope: f32) -> (Tensor, Tensor) {
    let mut y = a.clone();
    let mut mask = Tensor::zeros(&a.shape);
    for (i, v) in a.data.iter().enumerate() {
        if *v >= 0.0 {
            mask.data[i] = 1.0;
        } else {
            y.data[i] = v * slope;
            mask.data[i] = slope;
        }
    }
    (y, mask)
}

/// Returns (y, mask) where mask is 1 strictly inside the clamp range.
pub fn clamp(a: &Tensor, lo: f32, hi: f32) -> (Tensor, Tensor) {
    let mut y = a.clone();
    let mut mask = Tensor::zeros(&a.shape);
    for (i, v) in a.data.iter().enumerate() {
        if *v < lo {
            y.data[i] = lo;
        } else if *v > hi {
            y.data[i] = hi;
        } else {
            mask.data[i] = 1.0;
        }
    }
    (y, mask)
}

pub fn sum_all(a: &Tensor) -> f32 {
    a.data.iter().map(|&v| v as f64).sum::<f64>() as f32
}

pub fn bcast_scalar(v: f32, shape: &[usize]) -> Tensor {
    Tensor::full(shape, v)
}

/// Per-channel spatial sum: [C,H,W] -> [C].
pub fn sum_spatial(a: &Tensor) -> Tensor {
    let (c, h, w) = a.chw();
    let hw = h * w;
    let mut out = Tensor::zeros(&[c]);
    for ci in 0..c {
        let s: f64 = a.data[ci * hw..(ci + 1) * hw].iter().map(|&v| v as f64).sum();
        out.data[ci] = s as f32;
    }
    out
}

/// Broadcast a [C] vector over spatial dims: [C] -> [C,H,W].
pub fn bcast_channel(a: &Tensor, h: usize, w: usize) -> Tensor {
    assert_eq!(a.shape.len(), 1, "bcast_channel expects rank-1, got {:?}", a.shape);
    let c = a.shape[0];
    let hw = h * w;
    let mut out = Tensor::zeros(&[c, h, w]);
    for ci in 0..c {
        out.data[ci * hw..(ci + 1) * hw].fill(a.data[ci]);
    }
    out
}

/// x + per-channel bias: x [C,H,W], b [C].
pub fn add_chan_bias(x: &Tensor, b: &Tensor) -> Tensor {
    let (c, h, w) = x.chw();
    assert_eq!(b.shape, [c], "bias shape {:?} for {} channels", b.shape, c);
    let hw = h * w;
    let mut out = x.clone();
    for ci in 0..c {
        let bias = b.data[ci];
        for v in &mut out.data[ci * hw..(ci + 1) * hw] {
            *v += bias;
        }
    }
    out
}

fn sgemm_rowmajor(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Like `sgemm_rowmajor` but with A transposed (A is stored [k, m]).
fn sgemm_at_rowmajor(m: usize, k: usize, n: usize, a_t: &[f32], b: &[f32], c: &mut [f32]) {
    debug_assert_eq!(a_t.len(), k * m);
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a_t.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Like `sgemm_rowmajor` but with B transposed (B is stored [n, k]).
fn sgemm_bt_rowmajor(m: usize, k: usize, n: usize, a: &[f32], b_t: &[f32], c: &mut [f32]) {
    debug_assert_eq!(b_t.len(), n * k);
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b_t.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// im2col with zero padding: x [Ci,H,W] -> cols [Ci*K*K, Ho*Wo].
fn im2col(x: &Tensor, kernel: usize, stride: usize, pad: usize, ho: usize, wo: usize) -> Vec<f32> {
    let (ci, h, w) = x.chw();
    let mut cols = vec![0.0f32; ci * kernel * kernel * ho * wo];
    let x_data = &x.data;
    for c in 0..ci {
        for ka in 0..kernel {
            for kb in 0..kernel {
                let row = (c * kernel + ka) * kernel + kb;
                let out_base = row * ho * wo;
                for oh in 0..ho {
                    let ih = (oh * stride + ka) as isize - pad as isize;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    let in_base = (c * h + ih as usize) * w;
                    let dst = &mut cols[out_base + oh * wo..out_base + (oh + 1) * wo];
                    for (ow, d) in dst.iter_mut().enumerate() {
                        let iw = (ow * stride + kb) as isize - pad as isize;
                        if iw >= 0 && iw < w as isize {
                            *d = x_data[in_base + iw as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of im2col: scatter-add cols [Ci*K*K, Ho*Wo] back into [Ci,H,W].
fn col2im_add(
    cols: &[f32],
    ci: usize,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
) -> Tensor {
    let mut x = Tensor::zeros(&[ci, h, w]);
    for c in 0..ci {
        for ka in 0..kernel {
            for kb in 0..kernel {
                let row = (c * kernel + ka) * kernel + kb;
                let src_base = row * ho * wo;
                for oh in 0..ho {
                    let ih = (oh * stride + ka) as isize - pad as isize;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    let dst_base = (c * h + ih as usize) * w;
                    for ow in 0..wo {
                        let iw = (ow * stride + kb) as isize - pad as isize;
                        if iw >= 0 && iw < w as isize {
                            x.data[dst_base + iw as usize] += cols[src_base + oh * wo + ow];
                        }
                    }
                }
            }
        }
    }
    x
}

/// 2-D convolution: x [Ci,H,W], w [Co,Ci,K,K] -> y [Co,Ho,Wo].
pub fn conv2d(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Tensor {
    let (ci, h, wd) = x.chw();
    assert_eq!(w.shape.len(), 4, "conv weight must be rank 4, got {:?}", w.shape);
    let (co, wci, k) = (w.shape[0], w.shape[1], w.shape[2]);
    assert_eq!(w.shape[2], w.shape[3], "only square kernels supported");
    assert_eq!(ci, wci, "conv input channels {ci} vs weight {wci}");
    assert!(h + 2 * pad >= k && wd + 2 * pad >= k, "conv input {h}x{wd} too small for kernel {k} pad {pad}");
    let ho = conv_out_dim(h, k, stride, pad);
    let wo = conv_out_dim(wd, k, stride, pad);
    let cols = im2col(x, k, stride, pad, ho, wo);
    let mut y = Tensor::zeros(&[co, ho, wo]);
    sgemm_rowmajor(co, ci * k * k, ho * wo, &w.data, &cols, &mut y.data);
    y
}

/// Gradient of `conv2d` w.r.t. its input; also the forward pass of a
/// transposed convolution. gy [Co,Ho,Wo], w [Co,Ci,K,K] -> dx [Ci,H,W].
pub fn conv2d_dinput(
    gy: &Tensor,
    w: &Tensor,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
) -> Tensor {
    let (co, ho, wo) = gy.chw();
    let (wco, ci, k) = (w.shape[0], w.shape[1], w.shape[2]);
    assert_eq!(co, wco, "dinput channels {co} vs weight {wco}");
    assert_eq!(
        conv_out_dim(out_h, k, stride, pad),
        ho,
        "dinput spatial mismatch: out_h {out_h} k {k} s {stride} p {pad} vs ho {ho}"
    );
    assert_eq!(conv_out_dim(out_w, k, stride, pad), wo, "dinput spatial mismatch on width");
    let mut cols = vec![0.0f32; ci * k * k * ho * wo];
    sgemm_at_rowmajor(ci * k * k, co, ho * wo, &w.data, &gy.data, &mut cols);
    col2im_add(&cols, ci, out_h, out_w, k, stride, pad, ho, wo)
}

/// Gradient of `conv2d` w.r.t. its weight. x [Ci,H,W], gy [Co,Ho,Wo] -> dw [Co,Ci,K,K].
pub fn conv2d_dweight(x: &Tensor, gy: &Tensor, stride: usize, pad: usize, kernel: usize) -> Tensor {
    let (ci, h, w) = x.chw();
    let (co, ho, wo) = gy.chw();
    assert_eq!(conv_out_dim(h, kernel, stride, pad), ho, "dweight spatial mismatch on height");
    assert_eq!(conv_out_dim(w, kernel, stride, pad), wo, "dweight spatial mismatch on width");
    let cols = im2col(x, kernel, stride, pad, ho, wo);
    let mut dw = Tensor::zeros(&[co, ci, kernel, kernel]);
    sgemm_bt_rowmajor(co, ho * wo, ci * kernel * kernel, &gy.data, &cols, &mut dw.data);
    dw
}

/// 2x2 average pooling, stride 2. Requires even spatial dims.
pub fn avg_pool2(x: &Tensor) -> Tensor {
    let (c, h, w) = x.chw();
    assert!(h % 2 == 0 && w % 2 == 0, "avg_pool2 needs even dims, got {h}x{w}");
    let (ho, wo) = (h / 2, w / 2);
    let mut y = Tensor::zeros(&[c, ho, wo]);
    for ci in 0..c {
        for oh in 0..ho {
            for ow in 0..wo {
                let base = (ci * h + 2 * oh) * w + 2 * ow;
                let s = x.data[base] + x.data[base + 1] + x.data[base + w] + x.data[base + w + 1];
                y.data[(ci * ho + oh) * wo + ow] = s * 0.25;
            }
        }
    }
    y
}

/// Nearest-neighbour 2x upsampling; adjoint partner of `avg_pool2`.
pub fn upsample2(x: &Tensor) -> Tensor {
    let (c, h, w) = x.chw();
    let (ho, wo) = (h * 2, w * 2);
    let mut y = Tensor::zeros(&[c, ho, wo]);
    for ci in 0..c {
        for ih in 0..h {
            for iw in 0..w {
                let v = x.data[(ci * h + ih) * w + iw];
                let base = (ci * ho + 2 * ih) * wo + 2 * iw;
                y.data[base] = v;
                y.data[base + 1] = v;
                y.data[base + wo] = v;
                y.data[base + wo + 1] = v;
            }
        }
    }
    y
}

/// 2x2 max pooling with ceil semantics (windows clipped at the border), so
/// odd and even inputs both work. Returns the pooled map and flat argmax
/// indices into the input.
pub fn max_pool2(x: &Tensor) -> (Tensor, Vec<u32>) {
    let (c, h, w) = x.chw();
    let ho = h.div_ceil(2);
    let wo = w.div_ceil(2);
    let mut y = Tensor::zeros(&[c, ho, wo]);
    let mut idx = vec![0u32; c * ho * wo];
    for ci in 0..c {
        for oh in 0..ho {
            for ow in 0..wo {
                let mut best = f32::NEG_INFINITY;
                let mut best_i = 0usize;
                for dh in 0..2usize.min(h - 2 * oh) {
                    for dw in 0..2usize.min(w - 2 * ow) {
                        let i = (ci * h + 2 * oh + dh) * w + 2 * ow + dw;
                        if x.data[i] > best {
                            best = x.data[i];
                            best_i = i;
                        }
                    }
                }
                let o = (ci * ho + oh) * wo + ow;
                y.data[o] = best;
                idx[o] = best_i as u32;
            }
        }
    }
    (y, idx)
}

/// Scatter g through recorded argmax indices into an input-shaped tensor.
pub fn max_unpool2(g: &Tensor, idx: &[u32], in_shape: &[usize]) -> Tensor {
    assert_eq!(g.numel(), idx.len());
    let mut out = Tensor::zeros(in_shape);
    for (v, &i) in g.data.iter().zip(idx) {
        out.data[i as usize] += v;
    }
    out
}

/// Gather by recorded argmax indices; adjoint of `max_unpool2`.
pub fn gather_idx(g: &Tensor, idx: &[u32], out_shape: &[usize]) -> Tensor {
    let n: usize = out_shape.iter().product();
    assert_eq!(n, idx.len());
    let mut out = Tensor::zeros(out_shape);
    for (o, &i) in out.data.iter_mut().zip(idx) {
        *o = g.data[i as usize];
    }
    out
}

fn reflect_index(o: usize, pad: usize, len: usize) -> usize {
    let mut s = (o as isize - pad as isize).abs() as usize;
    if s >= len {
        s = 2 * len - 2 - s;
    }
    s
}

/// Reflection padding (edge not repeated). Requires pad <= dim - 1.
pub fn reflect_pad(x: &Tensor, pad: usize) -> Tensor {
    let (c, h, w) = x.chw();
    assert!(pad < h && pad < w, "reflect pad {pad} too large for {h}x{w}");
    let (ho, wo) = (h + 2 * pad, w + 2 * pad);
    let mut y = Tensor::zeros(&[c, ho, wo]);
    for ci in 0..c {
        for oh in 0..ho {
            let ih = reflect_index(oh, pad, h);
            for ow in 0..wo {
                let iw = reflect_index(ow, pad, w);
                y.data[(ci * ho + oh) * wo + ow] = x.data[(ci * h + ih) * w + iw];
            }
        }
    }
    y
}

/// Adjoint of `reflect_pad`: scatter-add back to the unpadded shape.
pub fn reflect_pad_adjoint(g: &Tensor, pad: usize, in_h: usize, in_w: usize) -> Tensor {
    let (c, ho, wo) = g.chw();
    assert_eq!(ho, in_h + 2 * pad);
    assert_eq!(wo, in_w + 2 * pad);
    let mut x = Tensor::zeros(&[c, in_h, in_w]);
    for ci in 0..c {
        for oh in 0..ho {
            let ih = reflect_index(oh, pad, in_h);
            for ow in 0..wo {
                let iw = reflect_index(ow, pad, in_w);
                x.data[(ci * in_h + ih) * in_w + iw] += g.data[(ci * ho + oh) * wo + ow];
            }
        }
    }
    x
}

/// Spatial crop: keep rows top..top+h, cols left..left+w.
pub fn crop(x: &Tensor, top: usize, left: usize, h: usize, w: usize) -> Tensor {
    let (c, ih, iw) = x.chw();
    assert!(top + h <= ih && left + w <= iw, "crop out of range");
    let mut y = Tensor::zeros(&[c, h, w]);
    for ci in 0..c {
        for r in 0..h {
            let src = (ci * ih + top + r) * iw + left;
            let dst = (ci * h + r) * w;
            y.data[dst..dst + w].copy_from_slice(&x.data[src..src + w]);
        }
    }
    y
}

/// Adjoint of `crop`: place x into a zero tensor of the larger shape.
pub fn pad_zero_insert(x: &Tensor, top: usize, left: usize, out_h: usize, out_w: usize) -> Tensor {
    let (c, h, w) = x.chw();
    assert!(top + h <= out_h && left + w <= out_w, "pad insert out of range");
    let mut y = Tensor::zeros(&[c, out_h, out_w]);
    for ci in 0..c {
        for r in 0..h {
            let dst = (ci * out_h + top + r) * out_w + left;
            let src = (ci * h + r) * w;
            y.data[dst..dst + w].copy_from_slice(&x.data[src..src + w]);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Tensor {
        let (ci, h, wd) = x.chw();
        let (co, _, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
        let ho = conv_out_dim(h, k, stride, pad);
        let wo = conv_out_dim(wd, k, stride, pad);
        let mut y = Tensor::zeros(&[co, ho, wo]);
        for o in 0..co {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut acc = 0.0f64;
                    for c in 0..ci {
                        for a in 0..k {
                            for b in 0..k {
                                let ih = (oh * stride + a) as isize - pad as isize;
                                let iw = (ow * stride + b) as isize - pad as isize;
                                if ih >= 0 && ih < h as isize && iw >= 0 && iw < wd as isize {
                                    let xv = x.data()[(c * h + ih as usize) * wd + iw as usize];
                                    let wv = w.data()[((o * ci + c) * k + a) * k + b];
                                    acc += (xv * wv) as f64;
                                }
                            }
                        }
                    }
                    y.data_mut()[(o * ho + oh) * wo + ow] = acc as f32;
                }
            }
        }
        y
    }

    fn arange(shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|i| (i as f32 * 0.37).sin()).collect())
    }

    #[test]
    fn conv_matches_naive() {
        for &(s, p) in &[(1usize, 0usize), (1, 1), (2, 1), (1, 3), (2, 2)] {
            let x = arange(&[3, 9, 11]);
            let k = if p >= 2 { 7 } else { 3 };
            let w = arange(&[4, 3, k, k]);
            let got = conv2d(&x, &w, s, p);
            let want = naive_conv(&x, &w, s, p);
            assert_eq!(got.shape(), want.shape());
            for (a, b) in got.data().iter().zip(want.data()) {
                assert!((a - b).abs() < 1e-4, "{a} vs {b} at s={s} p={p}");
            }
        }
    }

    // The adjoint identity <conv(x,w), gy> == <x, dinput(gy,w)> == <w, dweight(x,gy)>
    // pins all three kernels against each other.
    #[test]
    fn conv_adjoint_identities() {
        let x = arange(&[2, 8, 6]);
        let w = arange(&[3, 2, 3, 3]);
        for &(s, p) in &[(1usize, 1usize), (2, 1), (1, 0)] {
            let y = conv2d(&x, &w, s, p);
            let gy = arange(y.shape());
            let lhs: f64 = y.data().iter().zip(gy.data()).map(|(a, b)| (a * b) as f64).sum();
            let dx = conv2d_dinput(&gy, &w, s, p, 8, 6);
            let rhs_x: f64 = x.data().iter().zip(dx.data()).map(|(a, b)| (a * b) as f64).sum();
            let dw = conv2d_dweight(&x, &gy, s, p, 3);
            let rhs_w: f64 = w.data().iter().zip(dw.data()).map(|(a, b)| (a * b) as f64).sum();
            assert!((lhs - rhs_x).abs() < 1e-3 * lhs.abs().max(1.0), "dinput adjoint s={s} p={p}");
            assert!((lhs - rhs_w).abs() < 1e-3 * lhs.abs().max(1.0), "dweight adjoint s={s} p={p}");
        }
    }

    #[test]
    fn transposed_conv_shape_doubles() {
        // decoder usage: k3 s2 p1, explicit 2x output size
        let x = arange(&[4, 5, 7]);
        let w = arange(&[4, 2, 3, 3]);
        let y = conv2d_dinput(&x, &w, 2, 1, 10, 14);
        assert_eq!(y.shape(), &[2, 10, 14]);
    }

    #[test]
    fn pooling_pairs_are_adjoint() {
        let x = arange(&[2, 6, 4]);
        let y = avg_pool2(&x);
        assert_eq!(y.shape(), &[2, 3, 2]);
        let g = arange(y.shape());
        let up = upsample2(&g);
        let lhs: f64 = y.data().iter().zip(g.data()).map(|(a, b)| (a * b) as f64).sum();
        let rhs: f64 = x.data().iter().zip(up.data()).map(|(a, b)| (a * b * 0.25) as f64).sum();
        assert!((lhs - rhs).abs() < 1e-4);
    }

    #[test]
    fn max_pool_odd_dims_and_unpool() {
        let x = arange(&[1, 5, 3]);
        let (y, idx) = max_pool2(&x);
        assert_eq!(y.shape(), &[1, 3, 2]);
        let g = Tensor::full(y.shape(), 1.0);
        let back = max_unpool2(&g, &idx, x.shape());
        assert_eq!(sum_all(&back), y.numel() as f32);
        let again = gather_idx(&back, &idx, y.shape());
        assert_eq!(again.shape(), y.shape());
    }

    #[test]
    fn reflect_pad_roundtrip_adjoint() {
        let x = arange(&[1, 4, 5]);
        let y = reflect_pad(&x, 2);
        assert_eq!(y.shape(), &[1, 8, 9]);
        // interior keeps source values
        assert_eq!(y.data()[(2) * 9 + 2], x.data()[0]);
        let g = arange(y.shape());
        let adj = reflect_pad_adjoint(&g, 2, 4, 5);
        let lhs: f64 = y.data().iter().zip(g.data()).map(|(a, b)| (a * b) as f64).sum();
        let rhs: f64 = x.data().iter().zip(adj.data()).map(|(a, b)| (a * b) as f64).sum();
        assert!((lhs - rhs).abs() < 1e-4);
    }

    #[test]
    fn crop_pad_roundtrip() {
        let x = arange(&[2, 6, 7]);
        let c = crop(&x, 1, 2, 3, 4);
        assert_eq!(c.shape(), &[2, 3, 4]);
        let back = pad_zero_insert(&c, 1, 2, 6, 7);
        let c2 = crop(&back, 1, 2, 3, 4);
        assert_eq!(c.data(), c2.data());
    }

    #[test]
    fn channel_reductions() {
        let x = arange(&[3, 2, 2]);
        let s = sum_spatial(&x);
        assert_eq!(s.shape(), &[3]);
        let manual: f32 = x.data()[0..4].iter().sum();
        assert!((s.data()[0] - manual).abs() < 1e-6);
        let b = bcast_channel(&s, 2, 2);
        assert_eq!(b.shape(), &[3, 2, 2]);
        assert_eq!(b.data()[0], s.data()[0]);
    }
}
