//! Gated recurrent classifier: a single LSTM-style layer (hidden size 10)
//! with a linear head on the final hidden state.

use crate::matrix::Matrix;
use crate::nn::params::{ParamLayout, TensorSpec};
use crate::rng::SeedStream;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct GatedRecurrentNet<F> {
    pub(crate) n_features: usize,
    pub(crate) t_steps: usize,
    pub(crate) hidden: usize,
    pub(crate) seed: u64,
    pub(crate) layout: ParamLayout,
    pub(crate) params: Vec<F>,
    wx: usize,
    wh: usize,
    bias: usize,
    head_w: usize,
    head_b: usize,
}

struct StepCache<F> {
    gate_i: Vec<F>,
    gate_f: Vec<F>,
    gate_g: Vec<F>,
    gate_o: Vec<F>,
    cell_prev: Vec<F>,
    hidden_prev: Vec<F>,
    cell_tanh: Vec<F>,
}

pub(crate) struct GatedCache<F> {
    steps: Vec<StepCache<F>>,
    hidden_last: Vec<F>,
    pub logits: Vec<F>,
}

fn sigmoid<F: Scalar>(v: F) -> F {
    F::one() / (F::one() + (-v).exp())
}

impl<F: Scalar> GatedRecurrentNet<F> {
    pub fn new(n_features: usize, t_steps: usize, hidden: usize, seed: u64) -> Self {
        assert!(n_features >= 1 && t_steps >= 1 && hidden >= 1);
        let tensors = vec![
            TensorSpec::weight("lstm.wx", vec![4 * hidden, n_features], n_features),
            TensorSpec::weight("lstm.wh", vec![4 * hidden, hidden], hidden),
            TensorSpec::bias("lstm.bias", 4 * hidden),
            TensorSpec::weight("head.weight", vec![2, hidden], hidden),
            TensorSpec::bias("head.bias", 2),
        ];
        let layout = ParamLayout::new(tensors);
        let mut stream = SeedStream::derived(seed, &["init", "gated_recurrent"], &[]);
        let mut params: Vec<F> = layout.init(&mut stream);
        // Forget-gate bias starts at 1 so the cell state can carry
        // mid-sequence evidence to the final step from the outset.
        let bias_range = layout.range(2);
        for slot in &mut params[bias_range][hidden..2 * hidden] {
            *slot = F::one();
        }
        GatedRecurrentNet {
            n_features,
            t_steps,
            hidden,
            seed,
            layout,
            params,
            wx: 0,
            wh: 1,
            bias: 2,
            head_w: 3,
            head_b: 4,
        }
    }

    pub(crate) fn forward_cached(&self, input: &Matrix<F>) -> GatedCache<F> {
        let h = self.hidden;
        let n = self.n_features;
        let wx = self.layout.slice(&self.params, self.wx);
        let wh = self.layout.slice(&self.params, self.wh);
        let bias = self.layout.slice(&self.params, self.bias);

        let mut hid = vec![F::zero(); h];
        let mut cell = vec![F::zero(); h];
        let mut steps = Vec::with_capacity(self.t_steps);
        for t in 0..self.t_steps {
            let mut z = bias.to_vec();
            for (r, zv) in z.iter_mut().enumerate() {
                let mut acc = *zv;
                for i in 0..n {
                    acc += wx[r * n + i] * *input.get(i, t);
                }
                for j in 0..h {
                    acc += wh[r * h + j] * hid[j];
                }
                *zv = acc;
            }
            let gate_i: Vec<F> = (0..h).map(|j| sigmoid(z[j])).collect();
            let gate_f: Vec<F> = (0..h).map(|j| sigmoid(z[h + j])).collect();
            let gate_g: Vec<F> = (0..h).map(|j| z[2 * h + j].tanh()).collect();
            let gate_o: Vec<F> = (0..h).map(|j| sigmoid(z[3 * h + j])).collect();
            let cell_prev = cell.clone();
            let hidden_prev = hid.clone();
            for j in 0..h {
                cell[j] = gate_f[j] * cell_prev[j] + gate_i[j] * gate_g[j];
            }
            let cell_tanh: Vec<F> = cell.iter().map(|&cv| cv.tanh()).collect();
            for j in 0..h {
                hid[j] = gate_o[j] * cell_tanh[j];
            }
            steps.push(StepCache { gate_i, gate_f, gate_g, gate_o, cell_prev, hidden_prev, cell_tanh });
        }

        let hw = self.layout.slice(&self.params, self.head_w);
        let hb = self.layout.slice(&self.params, self.head_b);
        let logits: Vec<F> = (0..2)
            .map(|j| hb[j] + (0..h).fold(F::zero(), |a, c| a + hw[j * h + c] * hid[c]))
            .collect();
        GatedCache { steps, hidden_last: hid, logits }
    }

    pub(crate) fn backward(
        &self,
        input: &Matrix<F>,
        cache: &GatedCache<F>,
        dlogits: &[F],
        mut grads: Option<&mut [F]>,
    ) -> Matrix<F> {
        let h = self.hidden;
        let n = self.n_features;
        let wx = self.layout.slice(&self.params, self.wx);
        let wh = self.layout.slice(&self.params, self.wh);
        let hw = self.layout.slice(&self.params, self.head_w);

        if let Some(g) = grads.as_deref_mut() {
            let wrange = self.layout.range(self.head_w);
            let brange = self.layout.range(self.head_b);
            for j in 0..2 {
                for c in 0..h {
                    g[wrange.start + j * h + c] += dlogits[j] * cache.hidden_last[c];
                }
                g[brange.start + j] += dlogits[j];
            }
        }

        let mut dh: Vec<F> =
            (0..h).map(|c| (0..2).fold(F::zero(), |a, j| a + dlogits[j] * hw[j * h + c])).collect();
        let mut dc = vec![F::zero(); h];
        let mut dx = Matrix::<F>::zeros(n, self.t_steps);

        for t in (0..self.t_steps).rev() {
            let step = &cache.steps[t];
            let mut dz = vec![F::zero(); 4 * h];
            for j in 0..h {
                let tc = step.cell_tanh[j];
                let d_o = dh[j] * tc;
                let d_c = dc[j] + dh[j] * step.gate_o[j] * (F::one() - tc * tc);
                let d_i = d_c * step.gate_g[j];
                let d_g = d_c * step.gate_i[j];
                let d_f = d_c * step.cell_prev[j];
                dc[j] = d_c * step.gate_f[j];
                dz[j] = d_i * step.gate_i[j] * (F::one() - step.gate_i[j]);
                dz[h + j] = d_f * step.gate_f[j] * (F::one() - step.gate_f[j]);
                dz[2 * h + j] = d_g * (F::one() - step.gate_g[j] * step.gate_g[j]);
                dz[3 * h + j] = d_o * step.gate_o[j] * (F::one() - step.gate_o[j]);
            }
            if let Some(g) = grads.as_deref_mut() {
                let xrange = self.layout.range(self.wx);
                let hrange = self.layout.range(self.wh);
                let brange = self.layout.range(self.bias);
                for (r, &dzr) in dz.iter().enumerate() {
                    for i in 0..n {
                        g[xrange.start + r * n + i] += dzr * *input.get(i, t);
                    }
                    for j in 0..h {
                        g[hrange.start + r * h + j] += dzr * step.hidden_prev[j];
                    }
                    g[brange.start + r] += dzr;
                }
            }
            for i in 0..n {
                let mut acc = F::zero();
                for (r, &dzr) in dz.iter().enumerate() {
                    acc += dzr * wx[r * n + i];
                }
                *dx.get_mut(i, t) = acc;
            }
            for j in 0..h {
                let mut acc = F::zero();
                for (r, &dzr) in dz.iter().enumerate() {
                    acc += dzr * wh[r * h + j];
                }
                dh[j] = acc;
            }
        }
        dx
    }
}
