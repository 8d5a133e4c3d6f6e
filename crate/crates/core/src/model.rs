//! Single-layer LSTM with additive attention over its hidden states and a
//! logistic read-out, plus reverse-mode gradients, Adam training and TSS
//! evaluation.
//!
//! Per step `t` with input `x_t` (12 features):
//!
//! ```text
//! i, f, o = σ(W x_t + U h_{t-1} + b)      g = tanh(W_g x_t + U_g h_{t-1} + b_g)
//! c_t = f ⊙ c_{t-1} + i ⊙ g               h_t = o ⊙ tanh(c_t)
//! e_t = v · tanh(W_a h_t + b_a)           α = softmax(e)
//! p   = σ(w_out · Σ_t α_t h_t + b_out)
//! ```

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{feature_names, NormStats, SequenceSet, N_FEATURES};
use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Anything that maps a `T × d` window to a probability-like scalar.
pub trait Predictor: Sync {
    fn predict(&self, window: &Mat) -> Result<f64>;
}

/// A predictor with an exact input gradient.
pub trait GradientModel: Predictor {
    /// `∂f/∂x_{t,j}` for every cell of the window.
    fn input_gradient(&self, window: &Mat) -> Result<Mat>;
}

impl<F> Predictor for F
where
    F: Fn(&Mat) -> f64 + Sync,
{
    fn predict(&self, window: &Mat) -> Result<f64> {
        Ok(self(window))
    }
}

/// `f(x) = bias + w · x_T`: looks only at the final time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalStepLinear {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Predictor for FinalStepLinear {
    fn predict(&self, window: &Mat) -> Result<f64> {
        let last = window.row(window.rows() - 1);
        Ok(self.bias + last.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
    }
}

impl GradientModel for FinalStepLinear {
    fn input_gradient(&self, window: &Mat) -> Result<Mat> {
        let mut g = Mat::zeros(window.rows(), window.cols());
        g.row_mut(window.rows() - 1).copy_from_slice(&self.weights);
        Ok(g)
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gate weights: input projection `w` (H×d), recurrent `u` (H×H), bias `b` (H).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl Gate {
    fn zeros(hidden: usize, input: usize) -> Self {
        Gate {
            w: vec![0.0; hidden * input],
            u: vec![0.0; hidden * hidden],
            b: vec![0.0; hidden],
        }
    }

    /// `W x + U h + b` into `out`.
    fn preactivation(&self, x: &[f64], h: &[f64], out: &mut [f64]) {
        let (d, hd) = (x.len(), h.len());
        for (k, o) in out.iter_mut().enumerate() {
            let wr = &self.w[k * d..(k + 1) * d];
            let ur = &self.u[k * hd..(k + 1) * hd];
            *o = self.b[k]
                + wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                + ur.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input: usize,
    pub hidden: usize,
    pub input_gate: Gate,
    pub forget_gate: Gate,
    pub output_gate: Gate,
    pub cell_gate: Gate,
    /// Attention projection `W_a` (H×H).
    pub attn_w: Vec<f64>,
    pub attn_b: Vec<f64>,
    /// Attention score vector `v` (H).
    pub attn_v: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            input,
            hidden,
            input_gate: Gate::zeros(hidden, input),
            forget_gate: Gate::zeros(hidden, input),
            output_gate: Gate::zeros(hidden, input),
            cell_gate: Gate::zeros(hidden, input),
            attn_w: vec![0.0; hidden * hidden],
            attn_b: vec![0.0; hidden],
            attn_v: vec![0.0; hidden],
            out_w: vec![0.0; hidden],
            out_b: 0.0,
        }
    }

    /// Uniform ±1/√H for every weight, forget-gate bias +1.
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input, hidden);
        let bound = 1.0 / (hidden as f64).sqrt();
        for slice in p.slices_mut() {
            for v in slice.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        p.forget_gate.b.iter_mut().for_each(|b| *b = 1.0);
        p
    }

    /// Every parameter array in a fixed order, for optimizers and tests.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(17);
        for g in [&self.input_gate, &self.forget_gate, &self.output_gate, &self.cell_gate] {
            v.extend([g.w.as_slice(), g.u.as_slice(), g.b.as_slice()]);
        }
        v.extend([
            self.attn_w.as_slice(),
            self.attn_b.as_slice(),
            self.attn_v.as_slice(),
            self.out_w.as_slice(),
            std::slice::from_ref(&self.out_b),
        ]);
        v
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(17);
        for g in [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.cell_gate,
        ] {
            v.extend([g.w.as_mut_slice(), g.u.as_mut_slice(), g.b.as_mut_slice()]);
        }
        v.extend([
            self.attn_w.as_mut_slice(),
            self.attn_b.as_mut_slice(),
            self.attn_v.as_mut_slice(),
            self.out_w.as_mut_slice(),
            std::slice::from_mut(&mut self.out_b),
        ]);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn validate(&self) -> Result<()> {
        let (d, h) = (self.input, self.hidden);
        let gates = [&self.input_gate, &self.forget_gate, &self.output_gate, &self.cell_gate];
        let shapes_ok = gates
            .iter()
            .all(|g| g.w.len() == h * d && g.u.len() == h * h && g.b.len() == h)
            && self.attn_w.len() == h * h
            && self.attn_b.len() == h
            && self.attn_v.len() == h
            && self.out_w.len() == h;
        if !shapes_ok {
            return Err(Error::invalid("parameter shapes inconsistent with input/hidden sizes"));
        }
        if !self.is_finite() {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(())
    }
}

/// Forward activations of one window, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    steps: usize,
    hidden: usize,
    /// Gate activations, `T × H` each.
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    /// `tanh(W_a h_t + b_a)`, `T × H`.
    s: Vec<f64>,
    context: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub attention: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub params: LstmParams,
}

impl LstmModel {
    pub fn new(params: LstmParams) -> Result<Self> {
        params.validate()?;
        Ok(LstmModel { params })
    }

    pub fn forward(&self, window: &Mat) -> Result<Prediction> {
        self.forward_cached(window).map(|(p, _)| p)
    }

    pub fn forward_cached(&self, window: &Mat) -> Result<(Prediction, ForwardCache)> {
        let p = &self.params;
        let (steps, hd) = (window.rows(), p.hidden);
        if steps == 0 {
            return Err(Error::invalid("window must have at least one time step"));
        }
        if window.cols() != p.input {
            return Err(Error::LengthMismatch {
                expected: p.input,
                actual: window.cols(),
            });
        }
        let mut cache = ForwardCache {
            steps,
            hidden: hd,
            i: vec![0.0; steps * hd],
            f: vec![0.0; steps * hd],
            o: vec![0.0; steps * hd],
            g: vec![0.0; steps * hd],
            c: vec![0.0; steps * hd],
            tanh_c: vec![0.0; steps * hd],
            h: vec![0.0; steps * hd],
            s: vec![0.0; steps * hd],
            context: vec![0.0; hd],
        };
        let zeros = vec![0.0; hd];
        let mut scores = vec![0.0; steps];
        for t in 0..steps {
            let x = window.row(t);
            let range = t * hd..(t + 1) * hd;
            let (h_prev, c_prev) = if t == 0 {
                (zeros.clone(), zeros.clone())
            } else {
                let r = (t - 1) * hd..t * hd;
                (cache.h[r.clone()].to_vec(), cache.c[r].to_vec())
            };
            p.input_gate.preactivation(x, &h_prev, &mut cache.i[range.clone()]);
            p.forget_gate.preactivation(x, &h_prev, &mut cache.f[range.clone()]);
            p.output_gate.preactivation(x, &h_prev, &mut cache.o[range.clone()]);
            p.cell_gate.preactivation(x, &h_prev, &mut cache.g[range.clone()]);
            for k in 0..hd {
                let idx = t * hd + k;
                let (ai, af, ao, ag) = (cache.i[idx], cache.f[idx], cache.o[idx], cache.g[idx]);
                if !(ai.is_finite() && af.is_finite() && ao.is_finite() && ag.is_finite()) {
                    return Err(Error::Overflow { step: t });
                }
                let (i, f, o, g) = (sigmoid(ai), sigmoid(af), sigmoid(ao), ag.tanh());
                let c = f * c_prev[k] + i * g;
                let tc = c.tanh();
                cache.i[idx] = i;
                cache.f[idx] = f;
                cache.o[idx] = o;
                cache.g[idx] = g;
                cache.c[idx] = c;
                cache.tanh_c[idx] = tc;
                cache.h[idx] = o * tc;
            }
            let h_t = &cache.h[range.clone()];
            let mut e = 0.0;
            for k in 0..hd {
                let row = &p.attn_w[k * hd..(k + 1) * hd];
                let a = p.attn_b[k] + row.iter().zip(h_t).map(|(w, h)| w * h).sum::<f64>();
                let s = a.tanh();
                cache.s[t * hd + k] = s;
                e += p.attn_v[k] * s;
            }
            if !e.is_finite() {
                return Err(Error::Overflow { step: t });
            }
            scores[t] = e;
        }

        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut attention: Vec<f64> = scores.iter().map(|e| (e - max).exp()).collect();
        let total: f64 = attention.iter().sum();
        attention.iter_mut().for_each(|a| *a /= total);

        for t in 0..steps {
            for k in 0..hd {
                cache.context[k] += attention[t] * cache.h[t * hd + k];
            }
        }
        let z = p.out_b + p.out_w.iter().zip(&cache.context).map(|(w, c)| w * c).sum::<f64>();
        if !z.is_finite() {
            return Err(Error::Overflow { step: steps - 1 });
        }
        Ok((
            Prediction {
                probability: sigmoid(z),
                attention,
            },
            cache,
        ))
    }

    /// Backpropagates `dz = ∂L/∂logit` through one cached forward pass.
    ///
    /// Accumulates parameter gradients into `grads` when given and returns
    /// the input gradient `∂L/∂x` (`T × d`).
    pub fn backward(
        &self,
        window: &Mat,
        pred: &Prediction,
        cache: &ForwardCache,
        dz: f64,
        mut grads: Option<&mut LstmParams>,
    ) -> Mat {
        let p = &self.params;
        let (steps, hd, d) = (cache.steps, cache.hidden, p.input);
        let alpha = &pred.attention;

        let d_context: Vec<f64> = p.out_w.iter().map(|w| dz * w).collect();
        if let Some(g) = grads.as_deref_mut() {
            g.out_b += dz;
            for (gw, c) in g.out_w.iter_mut().zip(&cache.context) {
                *gw += dz * c;
            }
        }

        // attention: dα_t = dctx·h_t, softmax Jacobian, then into h_t
        let d_alpha: Vec<f64> = (0..steps)
            .map(|t| {
                let h = &cache.h[t * hd..(t + 1) * hd];
                d_context.iter().zip(h).map(|(a, b)| a * b).sum()
            })
            .collect();
        let weighted: f64 = alpha.iter().zip(&d_alpha).map(|(a, b)| a * b).sum();
        let mut dh_attn = vec![0.0; steps * hd];
        for t in 0..steps {
            let de = alpha[t] * (d_alpha[t] - weighted);
            let h = &cache.h[t * hd..(t + 1) * hd];
            let dh = &mut dh_attn[t * hd..(t + 1) * hd];
            for k in 0..hd {
                dh[k] = alpha[t] * d_context[k];
            }
            for k in 0..hd {
                let s = cache.s[t * hd + k];
                let da = de * p.attn_v[k] * (1.0 - s * s);
                if let Some(g) = grads.as_deref_mut() {
                    g.attn_v[k] += de * s;
                    g.attn_b[k] += da;
                    for (gw, hj) in g.attn_w[k * hd..(k + 1) * hd].iter_mut().zip(h) {
                        *gw += da * hj;
                    }
                }
                let row = &p.attn_w[k * hd..(k + 1) * hd];
                for (dhj, w) in dh.iter_mut().zip(row) {
                    *dhj += da * w;
                }
            }
        }

        let mut dx = Mat::zeros(steps, d);
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut da = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
        let gates = [&p.input_gate, &p.forget_gate, &p.output_gate, &p.cell_gate];
        for t in (0..steps).rev() {
            for k in 0..hd {
                let idx = t * hd + k;
                let dh = dh_attn[idx] + dh_next[k];
                let (i, f, o, g, tc) = (cache.i[idx], cache.f[idx], cache.o[idx], cache.g[idx], cache.tanh_c[idx]);
                let c_prev = if t == 0 { 0.0 } else { cache.c[idx - hd] };
                let d_o = dh * tc;
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                da[0][k] = dc * g * i * (1.0 - i);
                da[1][k] = dc * c_prev * f * (1.0 - f);
                da[2][k] = d_o * o * (1.0 - o);
                da[3][k] = dc * i * (1.0 - g * g);
                dc_next[k] = dc * f;
            }
            let x = window.row(t);
            let h_prev: &[f64] = if t == 0 { &[] } else { &cache.h[(t - 1) * hd..t * hd] };
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            let dxt = dx.row_mut(t);
            for (gi, gate) in gates.iter().enumerate() {
                let a = &da[gi];
                for k in 0..hd {
                    let ak = a[k];
                    if ak == 0.0 {
                        continue;
                    }
                    for (dxj, w) in dxt.iter_mut().zip(&gate.w[k * d..(k + 1) * d]) {
                        *dxj += ak * w;
                    }
                    for (dhj, u) in dh_next.iter_mut().zip(&gate.u[k * hd..(k + 1) * hd]) {
                        *dhj += ak * u;
                    }
                }
            }
            if let Some(g) = grads.as_deref_mut() {
                let gg = [
                    &mut g.input_gate,
                    &mut g.forget_gate,
                    &mut g.output_gate,
                    &mut g.cell_gate,
                ];
                for (gi, gate) in gg.into_iter().enumerate() {
                    for k in 0..hd {
                        let ak = da[gi][k];
                        gate.b[k] += ak;
                        for (gw, xj) in gate.w[k * d..(k + 1) * d].iter_mut().zip(x) {
                            *gw += ak * xj;
                        }
                        if t > 0 {
                            for (gu, hj) in gate.u[k * hd..(k + 1) * hd].iter_mut().zip(h_prev) {
                                *gu += ak * hj;
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

impl Predictor for LstmModel {
    fn predict(&self, window: &Mat) -> Result<f64> {
        self.forward(window).map(|p| p.probability)
    }
}

impl GradientModel for LstmModel {
    fn input_gradient(&self, window: &Mat) -> Result<Mat> {
        let (pred, cache) = self.forward_cached(window)?;
        let p = pred.probability;
        Ok(self.backward(window, &pred, &cache, p * (1.0 - p), None))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 32,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: LstmParams,
    /// Mean class-weighted cross-entropy over each epoch.
    pub loss_history: Vec<f64>,
}

struct Adam {
    m: LstmParams,
    v: LstmParams,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(shape: &LstmParams, lr: f64) -> Self {
        Adam {
            m: LstmParams::zeros(shape.input, shape.hidden),
            v: LstmParams::zeros(shape.input, shape.hidden),
            step: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        let groups = params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut().into_iter().zip(self.v.slices_mut()));
        for ((p, g), (m, v)) in groups {
            for k in 0..p.len() {
                m[k] = Self::BETA1 * m[k] + (1.0 - Self::BETA1) * g[k];
                v[k] = Self::BETA2 * v[k] + (1.0 - Self::BETA2) * g[k] * g[k];
                p[k] -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Minibatch Adam on inverse-class-frequency weighted cross-entropy.
/// Deterministic for a fixed seed.
pub fn train(set: &SequenceSet, config: &TrainConfig) -> Result<TrainOutcome> {
    if set.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if config.hidden == 0 || config.batch_size == 0 {
        return Err(Error::invalid("hidden size and batch size must be >= 1"));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let n = set.len();
    let n_pos = set.positives();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }
    let input = set.windows[0].data.cols();
    let class_weight = |positive: bool| {
        let count = if positive { n_pos } else { n - n_pos };
        n as f64 / (2.0 * count as f64)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LstmModel {
        params: LstmParams::init(input, config.hidden, &mut rng),
    };
    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut grads = LstmParams::zeros(input, config.hidden);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            for s in grads.slices_mut() {
                s.iter_mut().for_each(|v| *v = 0.0);
            }
            for &idx in batch {
                let w = &set.windows[idx];
                let y = if w.label.is_positive() { 1.0 } else { 0.0 };
                let cw = class_weight(w.label.is_positive());
                let (pred, cache) = model.forward_cached(&w.data)?;
                let p = pred.probability;
                let eps = 1e-12;
                epoch_loss -= cw * (y * (p + eps).ln() + (1.0 - y) * (1.0 - p + eps).ln());
                let dz = cw * (p - y) / batch.len() as f64;
                model.backward(&w.data, &pred, &cache, dz, Some(&mut grads));
            }
            adam.update(&mut model.params, &grads);
        }
        loss_history.push(epoch_loss / n as f64);
    }
    Ok(TrainOutcome {
        params: model.params,
        loss_history,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub counts: ConfusionCounts,
    pub tss: f64,
    /// Set when a class is absent and its TSS term was taken as 0.
    pub degenerate: bool,
    pub threshold: f64,
}

/// `TP/(TP+FN) − FP/(FP+TN)`; an empty class contributes 0 and sets the flag.
pub fn tss(c: &ConfusionCounts) -> (f64, bool) {
    let mut degenerate = false;
    let mut term = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let sensitivity = term(c.tp, c.tp + c.fn_);
    let false_alarm = term(c.fp, c.fp + c.tn);
    (sensitivity - false_alarm, degenerate)
}

pub fn evaluate(model: &impl Predictor, test: &SequenceSet, threshold: f64) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut counts = ConfusionCounts::default();
    for w in &test.windows {
        let predicted = model.predict(&w.data)? >= threshold;
        match (predicted, w.label.is_positive()) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    let (tss, degenerate) = tss(&counts);
    Ok(Evaluation {
        counts,
        tss,
        degenerate,
        threshold,
    })
}

pub const CHECKPOINT_SCHEMA: &str = "stormlens-model/1";

/// Everything needed to rebuild the trained pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub features: Vec<String>,
    pub window_length: usize,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub norm: NormStats,
    pub config: TrainConfig,
    pub trained: bool,
    pub params: LstmParams,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        if ckpt.schema != CHECKPOINT_SCHEMA {
            return Err(Error::invalid(format!(
                "{}: unsupported checkpoint schema {:?}",
                path.display(),
                ckpt.schema
            )));
        }
        ckpt.params.validate()?;
        Ok(ckpt)
    }

    /// Fails unless the checkpoint was trained on the catalog feature order.
    pub fn check_features(&self) -> Result<()> {
        let expected = feature_names();
        if self.features.len() != N_FEATURES || self.features.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::invalid(format!(
                "checkpoint feature order {:?} does not match dataset order {:?}",
                self.features, expected
            )));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<LstmModel> {
        LstmModel::new(self.params.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, Window};

    fn random_params(input: usize, hidden: usize, scale: f64, seed: u64) -> LstmParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = LstmParams::zeros(input, hidden);
        for s in p.slices_mut() {
            for v in s.iter_mut() {
                *v = rng.random_range(-scale..scale);
            }
        }
        p
    }

    fn random_window(steps: usize, input: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..steps * input).map(|_| rng.random_range(-2.0..2.0)).collect();
        Mat::from_vec(steps, input, data).unwrap()
    }

    #[test]
    fn zero_params_give_half_and_uniform_attention() {
        let m = LstmModel::new(LstmParams::zeros(12, 4)).unwrap();
        let pred = m.forward(&random_window(5, 12, 1)).unwrap();
        assert_eq!(pred.probability, 0.5);
        assert!(pred.attention.iter().all(|&a| a == 0.2));
    }

    #[test]
    fn single_step_attention_is_one() {
        let m = LstmModel::new(random_params(12, 6, 1.0, 3)).unwrap();
        let pred = m.forward(&random_window(1, 12, 2)).unwrap();
        assert_eq!(pred.attention, vec![1.0]);
    }

    /// Step-by-step recurrence written out with scalar arithmetic for H = 2.
    fn oracle_h2(p: &LstmParams, x: &Mat) -> f64 {
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let d = p.input;
        let lin = |g: &Gate, k: usize, x: &[f64], h: [f64; 2]| {
            let mut s = g.b[k];
            for j in 0..d {
                s += g.w[k * d + j] * x[j];
            }
            s + g.u[k * 2] * h[0] + g.u[k * 2 + 1] * h[1]
        };
        let (mut h, mut c) = ([0.0; 2], [0.0; 2]);
        let mut hs = Vec::new();
        let mut es = Vec::new();
        for t in 0..x.rows() {
            let xt = x.row(t);
            let mut hn = [0.0; 2];
            let mut cn = [0.0; 2];
            for k in 0..2 {
                let i = sig(lin(&p.input_gate, k, xt, h));
                let f = sig(lin(&p.forget_gate, k, xt, h));
                let o = sig(lin(&p.output_gate, k, xt, h));
                let g = lin(&p.cell_gate, k, xt, h).tanh();
                cn[k] = f * c[k] + i * g;
                hn[k] = o * cn[k].tanh();
            }
            h = hn;
            c = cn;
            let s0 = (p.attn_w[0] * h[0] + p.attn_w[1] * h[1] + p.attn_b[0]).tanh();
            let s1 = (p.attn_w[2] * h[0] + p.attn_w[3] * h[1] + p.attn_b[1]).tanh();
            es.push(p.attn_v[0] * s0 + p.attn_v[1] * s1);
            hs.push(h);
        }
        let z: f64 = es.iter().map(|e| e.exp()).sum();
        let mut ctx = [0.0; 2];
        for (e, h) in es.iter().zip(&hs) {
            ctx[0] += e.exp() / z * h[0];
            ctx[1] += e.exp() / z * h[1];
        }
        sig(p.out_w[0] * ctx[0] + p.out_w[1] * ctx[1] + p.out_b)
    }

    #[test]
    fn forward_matches_scalar_oracle() {
        for seed in 0..5 {
            let p = random_params(3, 2, 0.8, seed);
            let x = random_window(4, 3, 100 + seed);
            let m = LstmModel::new(p.clone()).unwrap();
            let got = m.predict(&x).unwrap();
            assert!((got - oracle_h2(&p, &x)).abs() < 1e-14, "seed {seed}");
        }
    }

    fn finite_difference(m: &LstmModel, x: &Mat, h: f64) -> Mat {
        let mut g = Mat::zeros(x.rows(), x.cols());
        for t in 0..x.rows() {
            for j in 0..x.cols() {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus.set(t, j, x.get(t, j) + h);
                minus.set(t, j, x.get(t, j) - h);
                let d = (m.predict(&plus).unwrap() - m.predict(&minus).unwrap()) / (2.0 * h);
                g.set(t, j, d);
            }
        }
        g
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let m = LstmModel::new(random_params(12, 8, 0.5, seed)).unwrap();
            let x = random_window(5, 12, 50 + seed);
            let g = m.input_gradient(&x).unwrap();
            let fd = finite_difference(&m, &x, 1e-5);
            for (a, b) in g.as_slice().iter().zip(fd.as_slice()) {
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
                assert!(rel < 1e-4, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let m = LstmModel::new(random_params(3, 3, 0.7, 9)).unwrap();
        let x = random_window(4, 3, 10);
        let (pred, cache) = m.forward_cached(&x).unwrap();
        let mut grads = LstmParams::zeros(3, 3);
        // dz = 1 gives ∂logit/∂θ; compare against the logit
        m.backward(&x, &pred, &cache, 1.0, Some(&mut grads));
        let logit = |p: &LstmParams| {
            let prob = LstmModel { params: p.clone() }.predict(&x).unwrap();
            (prob / (1.0 - prob)).ln()
        };
        let n_slices = m.params.slices().len();
        for s in 0..n_slices {
            let len = m.params.slices()[s].len();
            for k in 0..len {
                let mut plus = m.params.clone();
                let mut minus = m.params.clone();
                plus.slices_mut()[s][k] += 1e-6;
                minus.slices_mut()[s][k] -= 1e-6;
                let fd = (logit(&plus) - logit(&minus)) / 2e-6;
                let an = grads.slices()[s][k];
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "slice {s}[{k}]: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn dead_output_has_zero_gradient() {
        let mut p = random_params(12, 5, 1.0, 4);
        p.out_w.iter_mut().for_each(|w| *w = 0.0);
        let m = LstmModel::new(p).unwrap();
        let g = m.input_gradient(&random_window(3, 12, 5)).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tied_duplicate_columns_get_identical_gradients() {
        let mut p = random_params(12, 4, 0.6, 12);
        for g in [&mut p.input_gate, &mut p.forget_gate, &mut p.output_gate, &mut p.cell_gate] {
            for k in 0..4 {
                g.w[k * 12 + 7] = g.w[k * 12 + 3];
            }
        }
        let m = LstmModel::new(p).unwrap();
        let mut x = random_window(4, 12, 13);
        for t in 0..4 {
            x.set(t, 7, x.get(t, 3));
        }
        let g = m.input_gradient(&x).unwrap();
        for t in 0..4 {
            assert_eq!(g.get(t, 3), g.get(t, 7));
        }
    }

    #[test]
    fn overflow_is_reported_with_step() {
        let m = LstmModel::new(random_params(12, 3, 1.0, 1)).unwrap();
        let mut x = random_window(3, 12, 2);
        x.set(1, 0, f64::INFINITY);
        assert!(matches!(m.forward(&x), Err(Error::Overflow { step: 1 })));
    }

    fn separable_set(n: usize, seed: u64) -> SequenceSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let windows = (0..n)
            .map(|_| {
                let data: Vec<f64> = (0..4 * 12).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut m = Mat::from_vec(4, 12, data).unwrap();
                let positive = rng.random_bool(0.5);
                let shift = if positive { 1.0 } else { -1.0 };
                for t in 0..4 {
                    m.set(t, 2, m.get(t, 2) * 0.3 + shift);
                }
                Window {
                    data: m,
                    label: if positive { Label::P } else { Label::N },
                    ar_id: "A".into(),
                    end: chrono::DateTime::UNIX_EPOCH,
                }
            })
            .collect();
        SequenceSet {
            windows,
            window_length: 4,
            dropped: 0,
        }
    }

    #[test]
    fn training_reduces_loss_on_separable_data() {
        let set = separable_set(200, 1);
        let cfg = TrainConfig {
            hidden: 8,
            epochs: 30,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let out = train(&set, &cfg).unwrap();
        assert_eq!(out.loss_history.len(), 30);
        assert!(*out.loss_history.last().unwrap() < 0.3, "{:?}", out.loss_history);
    }

    #[test]
    fn zero_epochs_return_initialization() {
        let set = separable_set(20, 2);
        let cfg = TrainConfig { hidden: 4, epochs: 0, ..TrainConfig::default() };
        let out = train(&set, &cfg).unwrap();
        let init = LstmParams::init(12, 4, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
        assert_eq!(out.params, init);
        assert!(out.loss_history.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let set = separable_set(40, 3);
        let cfg = TrainConfig { hidden: 4, epochs: 3, ..TrainConfig::default() };
        assert_eq!(train(&set, &cfg).unwrap(), train(&set, &cfg).unwrap());
    }

    #[test]
    fn single_class_rejected() {
        let mut set = separable_set(10, 4);
        set.windows.iter_mut().for_each(|w| w.label = Label::N);
        assert!(matches!(train(&set, &TrainConfig::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn tss_examples() {
        let c = ConfusionCounts { tp: 40, fn_: 10, fp: 20, tn: 30 };
        assert!((tss(&c).0 - 0.4).abs() < 1e-15);
        let perfect = ConfusionCounts { tp: 5, fn_: 0, fp: 0, tn: 7 };
        assert_eq!(tss(&perfect), (1.0, false));
        let all_pos = ConfusionCounts { tp: 5, fn_: 0, fp: 7, tn: 0 };
        assert_eq!(tss(&all_pos), (0.0, false));
        let no_neg = ConfusionCounts { tp: 3, fn_: 1, fp: 0, tn: 0 };
        assert_eq!(tss(&no_neg), (0.75, true));
    }

    #[test]
    fn tss_role_swap_on_symmetric_counts() {
        // swapping P/N with complemented threshold maps (tp, fn, fp, tn) → (tn, fp, fn, tp)
        let c = ConfusionCounts { tp: 12, tn: 12, fp: 5, fn_: 5 };
        let swapped = ConfusionCounts { tp: c.tn, fn_: c.fp, fp: c.fn_, tn: c.tp };
        assert_eq!(tss(&c), tss(&swapped));
    }

    #[test]
    fn evaluate_counts_every_window() {
        let set = separable_set(30, 5);
        let e = evaluate(&|w: &Mat| if w.get(3, 2) > 0.0 { 0.9 } else { 0.1 }, &set, 0.5).unwrap();
        assert_eq!(e.counts.total(), 30);
        assert_eq!(e.tss, 1.0);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let params = random_params(12, 5, 0.9, 21);
        let ckpt = Checkpoint {
            schema: CHECKPOINT_SCHEMA.into(),
            features: feature_names().iter().map(|s| s.to_string()).collect(),
            window_length: 3,
            train_fraction: 0.8,
            split_seed: 42,
            norm: NormStats { features: vec![] },
            config: TrainConfig::default(),
            trained: true,
            params,
        };
        let path = dir.path().join("model.json");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        let x = random_window(3, 12, 8);
        assert_eq!(
            ckpt.model().unwrap().predict(&x).unwrap().to_bits(),
            back.model().unwrap().predict(&x).unwrap().to_bits()
        );
    }

    proptest::proptest! {
        #[test]
        fn attention_is_a_distribution(seed in 0u64..500, steps in 1usize..8) {
            let m = LstmModel::new(random_params(12, 4, 2.0, seed)).unwrap();
            let x = random_window(steps, 12, seed + 1);
            let pred = m.forward(&x).unwrap();
            let total: f64 = pred.attention.iter().sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-10);
            proptest::prop_assert!(pred.attention.iter().all(|&a| a >= 0.0));
            proptest::prop_assert!((0.0..=1.0).contains(&pred.probability));

            // reversing time keeps it a distribution
            let mut rev = x.clone();
            for t in 0..steps {
                rev.row_mut(t).copy_from_slice(x.row(steps - 1 - t));
            }
            let total: f64 = m.forward(&rev).unwrap().attention.iter().sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
