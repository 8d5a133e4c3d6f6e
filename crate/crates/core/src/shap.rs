//! Global attribution: exact coalition enumeration, kernel-weighted
//! regression, expected gradients, and their aggregation into global
//! importance and decision paths.
//!
//! A coalition masks whole features: a feature outside the coalition takes
//! its column from a background window at every time step. Gradient
//! attributions are per cell and are summed over time to give one value per
//! feature.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GradientModel, Predictor};
use crate::numerics::{derive_seed, weighted_least_squares, Mat};

/// Largest feature count the exact enumerator accepts.
pub const EXACT_FEATURE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Kernel,
    Gradient,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Kernel => "kernel",
            Method::Gradient => "gradient",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "kernel" => Ok(Method::Kernel),
            "gradient" => Ok(Method::Gradient),
            other => Err(Error::invalid(format!(
                "unknown method {other:?} (expected exact, kernel or gradient)"
            ))),
        }
    }
}

/// Reference windows that stand in for absent features.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    windows: Vec<Mat>,
}

impl Background {
    pub fn new(windows: Vec<Mat>) -> Result<Self> {
        let first = windows
            .first()
            .ok_or_else(|| Error::invalid("background needs at least one window"))?;
        let (r, c) = (first.rows(), first.cols());
        if let Some(bad) = windows.iter().find(|w| w.rows() != r || w.cols() != c) {
            return Err(Error::invalid(format!(
                "background window shape {}x{} differs from {r}x{c}",
                bad.rows(),
                bad.cols()
            )));
        }
        Ok(Background { windows })
    }

    /// Draws `k` windows uniformly without replacement (all of them if
    /// `k >= windows.len()`), keeping their original order.
    pub fn sample(windows: &[Mat], k: usize, seed: u64) -> Result<Self> {
        if windows.len() <= k {
            return Self::new(windows.to_vec());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, windows.len(), k).into_vec();
        picked.sort_unstable();
        Self::new(picked.into_iter().map(|i| windows[i].clone()).collect())
    }

    pub fn windows(&self) -> &[Mat] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    fn check_sample(&self, sample: &Mat) -> Result<()> {
        let b = &self.windows[0];
        if sample.rows() != b.rows() || sample.cols() != b.cols() {
            return Err(Error::invalid(format!(
                "sample shape {}x{} differs from background {}x{}",
                sample.rows(),
                sample.cols(),
                b.rows(),
                b.cols()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub phi: Vec<f64>,
    /// Expected model output under the background.
    pub base: f64,
    pub fx: f64,
    pub method: Method,
}

impl ShapExplanation {
    /// `base + Σφ − fx`.
    pub fn efficiency_gap(&self) -> f64 {
        self.base + self.phi.iter().sum::<f64>() - self.fx
    }
}

/// Keeps `sample`'s columns where `mask` has a bit set, `background`'s
/// elsewhere, at every time step.
fn mix(sample: &Mat, background: &Mat, mask: u64) -> Mat {
    let mut out = background.clone();
    for t in 0..sample.rows() {
        let (src, dst) = (sample.row(t), out.row_mut(t));
        for j in 0..src.len() {
            if mask >> j & 1 == 1 {
                dst[j] = src[j];
            }
        }
    }
    out
}

fn mask_of(coalition: &[bool]) -> u64 {
    coalition
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0, |m, (j, _)| m | 1 << j)
}

fn value_of_mask(model: &impl Predictor, sample: &Mat, background: &Background, mask: u64) -> Result<f64> {
    let mut total = 0.0;
    for b in &background.windows {
        total += model.predict(&mix(sample, b, mask))?;
    }
    Ok(total / background.len() as f64)
}

/// Mean model output over background windows with the coalition's features
/// taken from `sample`.
pub fn coalition_value(
    model: &impl Predictor,
    sample: &Mat,
    background: &Background,
    coalition: &[bool],
) -> Result<f64> {
    background.check_sample(sample)?;
    if coalition.len() != sample.cols() {
        return Err(Error::LengthMismatch {
            expected: sample.cols(),
            actual: coalition.len(),
        });
    }
    value_of_mask(model, sample, background, mask_of(coalition))
}

/// Values of all `2^d` coalitions, indexed by bitmask.
fn value_table(model: &impl Predictor, sample: &Mat, background: &Background) -> Result<Vec<f64>> {
    let full = (1u64 << sample.cols()) - 1;
    (0..=full)
        .into_par_iter()
        .map(|mask| value_of_mask(model, sample, background, mask))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley values by enumerating every coalition:
/// `φ_i = Σ_{S ∌ i} |S|!(d−1−|S|)!/d! · (v(S ∪ i) − v(S))`.
pub fn exact_shapley(model: &impl Predictor, sample: &Mat, background: &Background) -> Result<ShapExplanation> {
    background.check_sample(sample)?;
    let d = sample.cols();
    if d > EXACT_FEATURE_LIMIT {
        return Err(Error::TooManyFeatures {
            features: d,
            limit: EXACT_FEATURE_LIMIT,
        });
    }
    let fx = model.predict(sample)?;
    let v = value_table(model, sample, background)?;
    // weight for |S| = s: 1 / (d · C(d−1, s))
    let weights: Vec<f64> = (0..d).map(|s| 1.0 / (d as f64 * binomial(d - 1, s))).collect();
    let mut phi = vec![0.0; d];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        let mut acc = 0.0;
        for mask in 0..v.len() as u64 {
            if mask & bit == 0 {
                acc += weights[mask.count_ones() as usize] * (v[(mask | bit) as usize] - v[mask as usize]);
            }
        }
        *phi_i = acc;
    }
    Ok(ShapExplanation {
        phi,
        base: v[0],
        fx,
        method: Method::Exact,
    })
}

/// Shapley kernel weight `(d−1) / (C(d,s)·s·(d−s))` for a coalition of size `s`.
pub fn shapley_kernel_weight(d: usize, s: usize) -> f64 {
    (d - 1) as f64 / (binomial(d, s) * s as f64 * (d - s) as f64)
}

/// Draws coalitions with probability proportional to the Shapley kernel,
/// each paired with its complement. Returns multiplicities by mask.
fn sample_coalitions(d: usize, n: usize, rng: &mut ChaCha8Rng) -> BTreeMap<u64, f64> {
    let size_mass: Vec<f64> = (1..d).map(|s| (d - 1) as f64 / (s * (d - s)) as f64).collect();
    let total: f64 = size_mass.iter().sum();
    let full = (1u64 << d) - 1;
    let mut counts = BTreeMap::new();
    let mut drawn = 0;
    while drawn < n {
        let mut u = rng.random::<f64>() * total;
        let mut size = d - 1;
        for (k, m) in size_mass.iter().enumerate() {
            if u < *m {
                size = k + 1;
                break;
            }
            u -= m;
        }
        let picked = rand::seq::index::sample(rng, d, size);
        let mask = picked.iter().fold(0u64, |m, j| m | 1 << j);
        *counts.entry(mask).or_insert(0.0) += 1.0;
        *counts.entry(full ^ mask).or_insert(0.0) += 1.0;
        drawn += 2;
    }
    counts
}

/// Kernel-weighted regression estimate of the Shapley values with the
/// efficiency constraint eliminated exactly.
///
/// When `n_coalitions` covers all `2^d − 2` proper coalitions they are
/// enumerated with exact kernel weights, which reproduces [`exact_shapley`].
/// Otherwise coalitions are drawn from the kernel distribution with `seed`.
pub fn kernel_shap(
    model: &impl Predictor,
    sample: &Mat,
    background: &Background,
    n_coalitions: usize,
    seed: u64,
) -> Result<ShapExplanation> {
    background.check_sample(sample)?;
    let d = sample.cols();
    if !(2..=62).contains(&d) {
        return Err(Error::invalid(format!("kernel_shap supports 2..=62 features, got {d}")));
    }
    if n_coalitions < d + 2 {
        return Err(Error::invalid(format!(
            "n_coalitions must be >= d + 2 = {}, got {n_coalitions}",
            d + 2
        )));
    }
    let fx = model.predict(sample)?;
    let base = value_of_mask(model, sample, background, 0)?;
    let full = (1u64 << d) - 1;

    let coalitions: Vec<(u64, f64)> = if (n_coalitions as u128) >= (1u128 << d) - 2 {
        (1..full)
            .map(|m| (m, shapley_kernel_weight(d, m.count_ones() as usize)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_coalitions(d, n_coalitions, &mut rng).into_iter().collect()
    };

    let values: Vec<f64> = coalitions
        .par_iter()
        .map(|&(mask, _)| value_of_mask(model, sample, background, mask))
        .collect::<Result<_>>()?;

    // y − z_last·Δ = Σ_{i<d−1} φ_i (z_i − z_last)
    let delta = fx - base;
    let last = d - 1;
    let mut x = Mat::zeros(coalitions.len(), last);
    let mut y = Vec::with_capacity(coalitions.len());
    let mut w = Vec::with_capacity(coalitions.len());
    for (r, (&(mask, weight), &value)) in coalitions.iter().zip(&values).enumerate() {
        let z_last = (mask >> last & 1) as f64;
        for i in 0..last {
            x.set(r, i, (mask >> i & 1) as f64 - z_last);
        }
        y.push(value - base - z_last * delta);
        w.push(weight);
    }
    let beta = weighted_least_squares(&x, &y, &w).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "{msg}; too few distinct coalitions, increase n_coalitions"
        )),
        other => other,
    })?;
    let mut phi = beta;
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(ShapExplanation {
        phi,
        base,
        fx,
        method: Method::Kernel,
    })
}

/// Expected-gradients attribution.
///
/// For every background window `b` and each of `n_steps` strata of
/// `α ∈ (0, 1)`, accumulates `(x − b) ⊙ ∇f(b + α(x − b))`; the average is
/// summed over time steps per feature.
pub fn gradient_shap(
    model: &impl GradientModel,
    sample: &Mat,
    background: &Background,
    n_steps: usize,
    seed: u64,
) -> Result<ShapExplanation> {
    background.check_sample(sample)?;
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be >= 1"));
    }
    let (steps, d) = (sample.rows(), sample.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; steps * d];
    let mut base = 0.0;
    let mut point = sample.clone();
    for b in &background.windows {
        base += model.predict(b)?;
        for s in 0..n_steps {
            let alpha = (s as f64 + rng.random::<f64>()) / n_steps as f64;
            for ((p, &xv), &bv) in point.as_mut_slice().iter_mut().zip(sample.as_slice()).zip(b.as_slice()) {
                *p = bv + alpha * (xv - bv);
            }
            let grad = model.input_gradient(&point)?;
            for (k, a) in acc.iter_mut().enumerate() {
                *a += (sample.as_slice()[k] - b.as_slice()[k]) * grad.as_slice()[k];
            }
        }
    }
    let draws = (background.len() * n_steps) as f64;
    let mut phi = vec![0.0; d];
    for t in 0..steps {
        for j in 0..d {
            phi[j] += acc[t * d + j] / draws;
        }
    }
    Ok(ShapExplanation {
        phi,
        base: base / background.len() as f64,
        fx: model.predict(sample)?,
        method: Method::Gradient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainerConfig {
    pub method: Method,
    pub n_coalitions: usize,
    pub n_steps: usize,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            method: Method::Gradient,
            n_coalitions: 2048,
            n_steps: 8,
        }
    }
}

/// Explains one window with the configured method.
pub fn explain(
    model: &impl GradientModel,
    sample: &Mat,
    background: &Background,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<ShapExplanation> {
    match config.method {
        Method::Exact => exact_shapley(model, sample, background),
        Method::Kernel => kernel_shap(model, sample, background, config.n_coalitions, seed),
        Method::Gradient => gradient_shap(model, sample, background, config.n_steps, seed),
    }
}

/// Explains many windows in parallel. Sample `i` uses the sub-seed
/// `derive_seed(seed, i)`, so results do not depend on the thread count.
pub fn explain_all(
    model: &impl GradientModel,
    samples: &[&Mat],
    background: &Background,
    config: &ExplainerConfig,
    seed: u64,
) -> Result<Vec<ShapExplanation>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| explain(model, s, background, config, derive_seed(seed, i as u64)))
        .collect()
}

/// Mean model output over the given windows.
pub fn base_value(model: &impl Predictor, windows: &[&Mat]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::invalid("base value needs at least one window"));
    }
    let mut total = 0.0;
    for w in windows {
        total += model.predict(w)?;
    }
    Ok(total / windows.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    /// Mean |φ| per feature, catalog order.
    pub mean_abs: Vec<f64>,
    /// Feature indices, most important first; ties keep catalog order.
    pub ranking: Vec<usize>,
}

pub fn global_importance(explanations: &[ShapExplanation]) -> Result<GlobalImportance> {
    let first = explanations
        .first()
        .ok_or_else(|| Error::invalid("global importance needs at least one explanation"))?;
    let d = first.phi.len();
    let mut mean_abs = vec![0.0; d];
    for e in explanations {
        if e.method != first.method {
            return Err(Error::MixedMethods(first.method.to_string(), e.method.to_string()));
        }
        if e.phi.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: e.phi.len(),
            });
        }
        for (m, p) in mean_abs.iter_mut().zip(&e.phi) {
            *m += p.abs();
        }
    }
    mean_abs.iter_mut().for_each(|m| *m /= explanations.len() as f64);
    let mut ranking: Vec<usize> = (0..d).collect();
    ranking.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]));
    Ok(GlobalImportance { mean_abs, ranking })
}

/// Running sums `base, base + φ_(1), …` adding features from least to most
/// important. Each series has `d + 1` points.
pub fn decision_path(explanations: &[ShapExplanation], ranking: &[usize], base: f64) -> Result<Vec<Vec<f64>>> {
    let d = ranking.len();
    let mut seen = vec![false; d];
    for &r in ranking {
        if r >= d || std::mem::replace(&mut seen[r], true) {
            return Err(Error::invalid("ranking is not a permutation of the features"));
        }
    }
    explanations
        .iter()
        .map(|e| {
            if e.phi.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    actual: e.phi.len(),
                });
            }
            let mut series = Vec::with_capacity(d + 1);
            let mut acc = base;
            series.push(acc);
            for &j in ranking.iter().rev() {
                acc += e.phi[j];
                series.push(acc);
            }
            Ok(series)
        })
        .collect()
}

/// One row of the explanations export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRecord {
    pub sample_id: usize,
    pub method: Method,
    pub base: f64,
    pub fx: f64,
    pub phi: Vec<f64>,
}

impl ShapRecord {
    pub fn new(sample_id: usize, e: &ShapExplanation) -> Self {
        ShapRecord {
            sample_id,
            method: e.method,
            base: e.base,
            fx: e.fx,
            phi: e.phi.clone(),
        }
    }

    pub fn explanation(&self) -> ShapExplanation {
        ShapExplanation {
            phi: self.phi.clone(),
            base: self.base,
            fx: self.fx,
            method: self.method,
        }
    }
}
