//! Residual temporal-convolution classifier.
//!
//! Three residual blocks of (same-padded 1D convolution, width 7, 32
//! channels, per-channel normalization over time, ReLU), a 1x1
//! projection on the skip path where channel counts differ, global
//! average pooling over time, and a linear head. The normalization is
//! per instance, so inference is batch-independent and training stays
//! bit-deterministic.

use crate::matrix::Matrix;
use crate::nn::params::{ParamLayout, TensorSpec};
use crate::rng::SeedStream;
use crate::Scalar;

const NORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalConvNet<F> {
    pub(crate) n_features: usize,
    pub(crate) t_steps: usize,
    pub(crate) channels: usize,
    pub(crate) kernel: usize,
    pub(crate) n_blocks: usize,
    pub(crate) seed: u64,
    pub(crate) layout: ParamLayout,
    pub(crate) params: Vec<F>,
    blocks: Vec<BlockIdx>,
    head_w: usize,
    head_b: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BlockIdx {
    conv_w: usize,
    conv_b: usize,
    gamma: usize,
    beta: usize,
    proj: Option<usize>,
    in_ch: usize,
}

struct BlockCache<F> {
    /// Channel-normalized conv output, before scale and shift.
    normed: Matrix<F>,
    /// 1 / sqrt(var + eps) per channel.
    inv_std: Vec<F>,
    /// Pre-ReLU activation (scaled norm plus skip).
    pre: Matrix<F>,
}

pub(crate) struct TcnCache<F> {
    /// `acts[0]` is the input; `acts[b + 1]` the output of block `b`.
    acts: Vec<Matrix<F>>,
    blocks: Vec<BlockCache<F>>,
    pooled: Vec<F>,
    pub logits: Vec<F>,
}

impl<F: Scalar> TemporalConvNet<F> {
    pub fn new(
        n_features: usize,
        t_steps: usize,
        channels: usize,
        kernel: usize,
        n_blocks: usize,
        seed: u64,
    ) -> Self {
        assert!(kernel % 2 == 1, "same padding needs an odd kernel");
        assert!(n_blocks >= 1 && channels >= 1 && n_features >= 1 && t_steps >= 1);
        let mut tensors = Vec::new();
        let mut blocks = Vec::new();
        let mut in_ch = n_features;
        for b in 0..n_blocks {
            let conv_w = tensors.len();
            tensors.push(TensorSpec::weight(
                &format!("block{b}.conv.weight"),
                vec![channels, in_ch, kernel],
                in_ch * kernel,
            ));
            let conv_b = tensors.len();
            tensors.push(TensorSpec::bias(&format!("block{b}.conv.bias"), channels));
            let gamma = tensors.len();
            tensors.push(TensorSpec::bias(&format!("block{b}.norm.gamma"), channels));
            let beta = tensors.len();
            tensors.push(TensorSpec::bias(&format!("block{b}.norm.beta"), channels));
            let proj = (in_ch != channels).then(|| {
                let idx = tensors.len();
                tensors.push(TensorSpec::weight(
                    &format!("block{b}.proj.weight"),
                    vec![channels, in_ch],
                    in_ch,
                ));
                idx
            });
            blocks.push(BlockIdx { conv_w, conv_b, gamma, beta, proj, in_ch });
            in_ch = channels;
        }
        let head_w = tensors.len();
        tensors.push(TensorSpec::weight("head.weight", vec![2, channels], channels));
        let head_b = tensors.len();
        tensors.push(TensorSpec::bias("head.bias", 2));

        let layout = ParamLayout::new(tensors);
        let mut stream = SeedStream::derived(seed, &["init", "temporal_conv"], &[]);
        let mut params: Vec<F> = layout.init(&mut stream);
        // Normalization starts as the identity map.
        for block in &blocks {
            for slot in layout.slice_mut(&mut params, block.gamma) {
                *slot = F::one();
            }
        }
        TemporalConvNet {
            n_features,
            t_steps,
            channels,
            kernel,
            n_blocks,
            seed,
            layout,
            params,
            blocks,
            head_w,
            head_b,
        }
    }

    fn pad(&self, x: &Matrix<F>) -> Matrix<F> {
        let p = self.kernel / 2;
        let mut out = Matrix::zeros(x.rows(), x.cols() + self.kernel - 1);
        for i in 0..x.rows() {
            for t in 0..x.cols() {
                *out.get_mut(i, t + p) = *x.get(i, t);
            }
        }
        out
    }

    pub(crate) fn forward_cached(&self, input: &Matrix<F>) -> TcnCache<F> {
        let t_len = self.t_steps;
        let c = self.channels;
        let k = self.kernel;
        let t_scale = F::from_usize(t_len).unwrap();
        let eps = crate::num::<F>(NORM_EPS);
        let mut acts = Vec::with_capacity(self.n_blocks + 1);
        let mut block_caches = Vec::with_capacity(self.n_blocks);
        acts.push(input.clone());

        for block in &self.blocks {
            let x = acts.last().unwrap();
            let xpad = self.pad(x);
            let w = self.layout.slice(&self.params, block.conv_w);
            let bias = self.layout.slice(&self.params, block.conv_b);
            let mut y = Matrix::<F>::zeros(c, t_len);
            for o in 0..c {
                let row = &mut y.data_mut()[o * t_len..(o + 1) * t_len];
                for v in row.iter_mut() {
                    *v = bias[o];
                }
                for i in 0..block.in_ch {
                    let xrow = xpad.row(i);
                    for kk in 0..k {
                        let wv = w[(o * block.in_ch + i) * k + kk];
                        if wv == F::zero() {
                            continue;
                        }
                        for t in 0..t_len {
                            row[t] += wv * xrow[t + kk];
                        }
                    }
                }
            }

            // Per-channel normalization over time.
            let gamma = self.layout.slice(&self.params, block.gamma);
            let beta = self.layout.slice(&self.params, block.beta);
            let mut normed = Matrix::<F>::zeros(c, t_len);
            let mut inv_std = Vec::with_capacity(c);
            let mut pre = Matrix::<F>::zeros(c, t_len);
            for o in 0..c {
                let row = y.row(o);
                let mean = row.iter().fold(F::zero(), |a, &v| a + v) / t_scale;
                let var =
                    row.iter().fold(F::zero(), |a, &v| a + (v - mean) * (v - mean)) / t_scale;
                let istd = F::one() / (var + eps).sqrt();
                inv_std.push(istd);
                let nrow = &mut normed.data_mut()[o * t_len..(o + 1) * t_len];
                let prow = &mut pre.data_mut()[o * t_len..(o + 1) * t_len];
                for t in 0..t_len {
                    let xhat = (row[t] - mean) * istd;
                    nrow[t] = xhat;
                    prow[t] = gamma[o] * xhat + beta[o];
                }
            }

            // Skip path: identity when channels match, 1x1 projection otherwise.
            match block.proj {
                Some(pidx) => {
                    let pw = self.layout.slice(&self.params, pidx);
                    for o in 0..c {
                        for i in 0..block.in_ch {
                            let wv = pw[o * block.in_ch + i];
                            if wv == F::zero() {
                                continue;
                            }
                            let xrow = x.row(i);
                            let prow = &mut pre.data_mut()[o * t_len..(o + 1) * t_len];
                            for t in 0..t_len {
                                prow[t] += wv * xrow[t];
                            }
                        }
                    }
                }
                None => {
                    for (pv, xv) in pre.data_mut().iter_mut().zip(x.data()) {
                        *pv += *xv;
                    }
                }
            }
            let act = pre.map(|&v| if v > F::zero() { v } else { F::zero() });
            block_caches.push(BlockCache { normed, inv_std, pre });
            acts.push(act);
        }

        let last = acts.last().unwrap();
        let pooled: Vec<F> = (0..c)
            .map(|ch| last.row(ch).iter().fold(F::zero(), |a, &v| a + v) / t_scale)
            .collect();
        let hw = self.layout.slice(&self.params, self.head_w);
        let hb = self.layout.slice(&self.params, self.head_b);
        let logits: Vec<F> = (0..2)
            .map(|j| {
                hb[j] + pooled.iter().enumerate().fold(F::zero(), |a, (ch, &g)| a + hw[j * c + ch] * g)
            })
            .collect();
        TcnCache { acts, blocks: block_caches, pooled, logits }
    }

    /// Reverse pass from `dlogits`; accumulates parameter gradients into
    /// `grads` (same layout as `params`) when given, and returns the
    /// gradient with respect to the input.
    pub(crate) fn backward(
        &self,
        cache: &TcnCache<F>,
        dlogits: &[F],
        mut grads: Option<&mut [F]>,
    ) -> Matrix<F> {
        let t_len = self.t_steps;
        let c = self.channels;
        let k = self.kernel;
        let t_scale = F::from_usize(t_len).unwrap();
        let hw = self.layout.slice(&self.params, self.head_w);

        if let Some(g) = grads.as_deref_mut() {
            for j in 0..2 {
                let range = self.layout.range(self.head_w);
                for ch in 0..c {
                    g[range.start + j * c + ch] += dlogits[j] * cache.pooled[ch];
                }
                let brange = self.layout.range(self.head_b);
                g[brange.start + j] += dlogits[j];
            }
        }

        let mut da = Matrix::<F>::zeros(c, t_len);
        for ch in 0..c {
            let dg = (0..2).fold(F::zero(), |a, j| a + dlogits[j] * hw[j * c + ch]) / t_scale;
            for v in &mut da.data_mut()[ch * t_len..(ch + 1) * t_len] {
                *v = dg;
            }
        }

        for (b, block) in self.blocks.iter().enumerate().rev() {
            let bcache = &cache.blocks[b];
            let x = &cache.acts[b];
            // ReLU gate.
            let mut dpre = da;
            for (d, &pre) in dpre.data_mut().iter_mut().zip(bcache.pre.data()) {
                if pre <= F::zero() {
                    *d = F::zero();
                }
            }

            // Normalization backward: dpre covers both the scaled-norm
            // branch and the skip branch (they were summed).
            let gamma = self.layout.slice(&self.params, block.gamma);
            let mut dy = Matrix::<F>::zeros(c, t_len);
            for o in 0..c {
                let drow = dpre.row(o);
                let nrow = bcache.normed.row(o);
                if let Some(g) = grads.as_deref_mut() {
                    let grange = self.layout.range(block.gamma);
                    let brange = self.layout.range(block.beta);
                    let mut dgamma = F::zero();
                    let mut dbeta = F::zero();
                    for t in 0..t_len {
                        dgamma += drow[t] * nrow[t];
                        dbeta += drow[t];
                    }
                    g[grange.start + o] += dgamma;
                    g[brange.start + o] += dbeta;
                }
                let mut mean_dxhat = F::zero();
                let mut mean_dxhat_xhat = F::zero();
                for t in 0..t_len {
                    let dxhat = drow[t] * gamma[o];
                    mean_dxhat += dxhat;
                    mean_dxhat_xhat += dxhat * nrow[t];
                }
                mean_dxhat /= t_scale;
                mean_dxhat_xhat /= t_scale;
                let istd = bcache.inv_std[o];
                let dyrow = &mut dy.data_mut()[o * t_len..(o + 1) * t_len];
                for t in 0..t_len {
                    let dxhat = drow[t] * gamma[o];
                    dyrow[t] = istd * (dxhat - mean_dxhat - nrow[t] * mean_dxhat_xhat);
                }
            }

            let w = self.layout.slice(&self.params, block.conv_w);
            let xpad = self.pad(x);
            let mut dxpad = Matrix::<F>::zeros(block.in_ch, t_len + k - 1);
            for o in 0..c {
                let dyrow = dy.row(o);
                for i in 0..block.in_ch {
                    let xrow = xpad.row(i);
                    let drow = &mut dxpad.data_mut()[i * (t_len + k - 1)..(i + 1) * (t_len + k - 1)];
                    for kk in 0..k {
                        let wv = w[(o * block.in_ch + i) * k + kk];
                        let mut dw_acc = F::zero();
                        for t in 0..t_len {
                            let d = dyrow[t];
                            dw_acc += d * xrow[t + kk];
                            drow[t + kk] += d * wv;
                        }
                        if let Some(g) = grads.as_deref_mut() {
                            let range = self.layout.range(block.conv_w);
                            g[range.start + (o * block.in_ch + i) * k + kk] += dw_acc;
                        }
                    }
                }
                if let Some(g) = grads.as_deref_mut() {
                    let brange = self.layout.range(block.conv_b);
                    g[brange.start + o] += dyrow.iter().fold(F::zero(), |a, &v| a + v);
                }
            }
            // Unpad the convolution's input gradient.
            let p = k / 2;
            let mut dx = Matrix::<F>::zeros(block.in_ch, t_len);
            for i in 0..block.in_ch {
                for t in 0..t_len {
                    *dx.get_mut(i, t) = *dxpad.get(i, t + p);
                }
            }
            // Skip path.
            match block.proj {
                Some(pidx) => {
                    let pw = self.layout.slice(&self.params, pidx);
                    for o in 0..c {
                        let dprow = dpre.row(o);
                        for i in 0..block.in_ch {
                            let wv = pw[o * block.in_ch + i];
                            let xrow = x.row(i);
                            let mut dpw_acc = F::zero();
                            let dxrow = &mut dx.data_mut()[i * t_len..(i + 1) * t_len];
                            for t in 0..t_len {
                                dpw_acc += dprow[t] * xrow[t];
                                dxrow[t] += dprow[t] * wv;
                            }
                            if let Some(g) = grads.as_deref_mut() {
                                let range = self.layout.range(pidx);
                                g[range.start + o * block.in_ch + i] += dpw_acc;
                            }
                        }
                    }
                }
                None => {
                    for (dxv, dpv) in dx.data_mut().iter_mut().zip(dpre.data()) {
                        *dxv += *dpv;
                    }
                }
            }
            da = dx;
        }
        da
    }
}
