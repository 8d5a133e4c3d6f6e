//! Local surrogate explanations on the final step of a window.
//!
//! Perturbed feature rows replace the last time step; earlier steps stay as
//! they are. The surrogate is a proximity-weighted ridge regression on
//! binary "same quartile bin as the sample" indicators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Predictor;
use crate::numerics::{mean, population_std, quantiles, ridge_regression, zscore_fit, Mat, ZScore};

pub const N_BINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Share of training rows in the bin.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub name: String,
    /// Quartile cuts (q25, q50, q75).
    pub cuts: [f64; 3],
    pub bins: [BinStats; N_BINS],
    /// Bins that received no training rows because cuts coincide.
    pub collapsed: [bool; N_BINS],
}

impl FeatureBins {
    /// Number of cuts strictly below `x`.
    pub fn bin_of(&self, x: f64) -> usize {
        self.cuts.iter().filter(|&&c| c < x).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub features: Vec<FeatureBins>,
    /// Whole-column statistics, used by raw sampling.
    pub scale: Vec<ZScore>,
}

impl Discretizer {
    /// Fits quartile bins on the rows of `rows` (one row per sample).
    pub fn fit(rows: &Mat, names: &[&str]) -> Result<Self> {
        if rows.rows() < 4 {
            return Err(Error::invalid(format!(
                "discretizer needs at least 4 rows, got {}",
                rows.rows()
            )));
        }
        if names.len() != rows.cols() {
            return Err(Error::LengthMismatch {
                expected: rows.cols(),
                actual: names.len(),
            });
        }
        let n = rows.rows() as f64;
        let mut features = Vec::with_capacity(rows.cols());
        for (j, name) in names.iter().enumerate() {
            let col = rows.column(j);
            let q = quantiles(&col, &[0.25, 0.5, 0.75])?;
            let cuts = [q[0], q[1], q[2]];
            let mut members: [Vec<f64>; N_BINS] = Default::default();
            let probe = FeatureBins {
                name: String::new(),
                cuts,
                bins: [BinStats { mean: 0.0, std: 0.0, min: 0.0, max: 0.0, frequency: 0.0 }; N_BINS],
                collapsed: [false; N_BINS],
            };
            for &v in &col {
                members[probe.bin_of(v)].push(v);
            }
            let mut bins = probe.bins;
            let mut collapsed = [false; N_BINS];
            for (b, m) in members.iter().enumerate() {
                if m.is_empty() {
                    collapsed[b] = true;
                    let edge = cuts[b.min(2)];
                    bins[b] = BinStats { mean: edge, std: 0.0, min: edge, max: edge, frequency: 0.0 };
                } else {
                    bins[b] = BinStats {
                        mean: mean(m),
                        std: population_std(m),
                        min: m.iter().copied().fold(f64::INFINITY, f64::min),
                        max: m.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        frequency: m.len() as f64 / n,
                    };
                }
            }
            features.push(FeatureBins {
                name: name.to_string(),
                cuts,
                bins,
                collapsed,
            });
        }
        Ok(Discretizer {
            features,
            scale: zscore_fit(rows)?,
        })
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.n_features(),
                actual: row.len(),
            });
        }
        Ok(())
    }
}

fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Rule describing the bin `value` falls in: `F <= a`, `a < F <= b` or `F > a`.
pub fn rule_text(feature: &str, value: f64, cuts: &[f64; 3]) -> String {
    let bin = cuts.iter().filter(|&&c| c < value).count();
    match bin {
        0 => format!("{feature} <= {}", fmt2(cuts[0])),
        3 => format!("{feature} > {}", fmt2(cuts[2])),
        b => format!("{} < {feature} <= {}", fmt2(cuts[b - 1]), fmt2(cuts[b])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Bin drawn from training frequencies, value from the bin's truncated normal.
    Discretized,
    /// Values drawn from each feature's training normal; the surrogate sees
    /// standardized values instead of bin indicators.
    Raw,
}

/// Perturbation design: the matrix the surrogate regresses on, and the raw
/// feature rows fed to the model. Row 0 is the sample itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub interpretable: Mat,
    pub raw: Mat,
}

fn truncated_normal(rng: &mut ChaCha8Rng, s: &BinStats) -> f64 {
    if !(s.std > 0.0) || s.max <= s.min {
        return s.mean;
    }
    for _ in 0..64 {
        let z: f64 = StandardNormal.sample(rng);
        let v = s.mean + s.std * z;
        if v >= s.min && v <= s.max {
            return v;
        }
    }
    s.mean.clamp(s.min, s.max)
}

fn pick_bin(rng: &mut ChaCha8Rng, bins: &[BinStats; N_BINS]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (b, s) in bins.iter().enumerate() {
        if s.frequency > 0.0 {
            acc += s.frequency;
            last = b;
            if u < acc {
                return b;
            }
        }
    }
    last
}

pub fn perturb(
    sample: &[f64],
    discretizer: &Discretizer,
    n: usize,
    mode: Sampling,
    seed: u64,
) -> Result<Perturbation> {
    discretizer.check_row(sample)?;
    if n == 0 {
        return Err(Error::invalid("perturbation count must be >= 1"));
    }
    let d = discretizer.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interpretable = Mat::zeros(n, d);
    let mut raw = Mat::zeros(n, d);
    raw.row_mut(0).copy_from_slice(sample);
    let home: Vec<usize> = discretizer
        .features
        .iter()
        .zip(sample)
        .map(|(f, &x)| f.bin_of(x))
        .collect();
    match mode {
        Sampling::Discretized => {
            interpretable.row_mut(0).fill(1.0);
            for r in 1..n {
                for (j, f) in discretizer.features.iter().enumerate() {
                    let b = pick_bin(&mut rng, &f.bins);
                    raw.set(r, j, truncated_normal(&mut rng, &f.bins[b]));
                    interpretable.set(r, j, if b == home[j] { 1.0 } else { 0.0 });
                }
            }
        }
        Sampling::Raw => {
            for r in 1..n {
                for (j, s) in discretizer.scale.iter().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    raw.set(r, j, s.mean + s.std * z);
                }
            }
            for r in 0..n {
                for (j, s) in discretizer.scale.iter().enumerate() {
                    interpretable.set(r, j, s.apply(raw.get(r, j)));
                }
            }
        }
    }
    Ok(Perturbation { interpretable, raw })
}

pub fn default_kernel_width(d: usize) -> f64 {
    0.75 * (d as f64).sqrt()
}

/// `exp(−D²/width²)` with `D` the Euclidean distance from row 0.
pub fn proximity(rows: &Mat, width: f64) -> Result<Vec<f64>> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::invalid(format!("kernel width must be > 0, got {width}")));
    }
    if rows.rows() == 0 {
        return Ok(Vec::new());
    }
    let origin = rows.row(0);
    Ok((0..rows.rows())
        .map(|r| {
            let d2: f64 = rows.row(r).iter().zip(origin).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2 / (width * width)).exp()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub top_k: usize,
    /// Defaults to `0.75·√d` when unset.
    pub kernel_width: Option<f64>,
    pub ridge_lambda: f64,
    pub sampling: Sampling,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 5000,
            top_k: 12,
            kernel_width: None,
            ridge_lambda: 1.0,
            sampling: Sampling::Discretized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeEntry {
    pub feature: String,
    pub rule: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    /// Top-k by |weight|, descending; ties keep feature order.
    pub entries: Vec<LimeEntry>,
    /// Surrogate coefficient for every feature, feature order.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Surrogate prediction on the sample's own row.
    pub local_pred: f64,
    pub model_pred: f64,
    /// Proximity-weighted R² of the surrogate on the perturbations.
    pub fidelity: f64,
    /// Features whose indicator column was constant and left out of the fit.
    pub dropped: Vec<String>,
    pub flags: Vec<String>,
}

pub const FLAG_CONSTANT_RESPONSE: &str = "degenerate: constant response";

/// Explains the model around `window` by perturbing its final step.
pub fn explain_local(
    model: &impl Predictor,
    window: &Mat,
    discretizer: &Discretizer,
    config: &LimeConfig,
    seed: u64,
) -> Result<LimeExplanation> {
    if window.rows() == 0 {
        return Err(Error::invalid("window has no time steps"));
    }
    let last = window.rows() - 1;
    let sample = window.row(last);
    let d = discretizer.n_features();
    let p = perturb(sample, discretizer, config.n_samples, config.sampling, seed)?;
    let width = config.kernel_width.unwrap_or_else(|| default_kernel_width(d));
    let w = proximity(&p.interpretable, width)?;

    let y: Vec<f64> = (0..config.n_samples)
        .into_par_iter()
        .map(|r| {
            let mut probe = window.clone();
            probe.row_mut(last).copy_from_slice(p.raw.row(r));
            model.predict(&probe)
        })
        .collect::<Result<_>>()?;

    let x = &p.interpretable;
    let n = x.rows();
    let mut flags = Vec::new();
    let mut dropped = Vec::new();
    let kept: Vec<usize> = (0..d)
        .filter(|&j| {
            let first = x.get(0, j);
            let constant = (1..n).all(|r| x.get(r, j) == first);
            if constant {
                dropped.push(discretizer.features[j].name.clone());
            }
            !constant
        })
        .collect();
    if !dropped.is_empty() {
        flags.push(format!("dropped constant columns: {}", dropped.join(", ")));
    }

    // weighted centering leaves the intercept unpenalized
    let sw: f64 = w.iter().sum();
    let y_bar = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let x_bar: Vec<f64> = kept
        .iter()
        .map(|&j| (0..n).map(|r| w[r] * x.get(r, j)).sum::<f64>() / sw)
        .collect();
    let mut xc = Mat::zeros(n, kept.len());
    for r in 0..n {
        for (k, &j) in kept.iter().enumerate() {
            xc.set(r, k, x.get(r, j) - x_bar[k]);
        }
    }
    let yc: Vec<f64> = y.iter().map(|v| v - y_bar).collect();
    let beta = if kept.is_empty() {
        Vec::new()
    } else {
        ridge_regression(&xc, &yc, &w, config.ridge_lambda)?
    };
    let mut coefficients = vec![0.0; d];
    for (k, &j) in kept.iter().enumerate() {
        coefficients[j] = beta[k];
    }
    let intercept = y_bar - beta.iter().zip(&x_bar).map(|(b, m)| b * m).sum::<f64>();

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for r in 0..n {
        let fit = intercept + (0..d).map(|j| coefficients[j] * x.get(r, j)).sum::<f64>();
        ss_res += w[r] * (y[r] - fit) * (y[r] - fit);
        ss_tot += w[r] * (y[r] - y_bar) * (y[r] - y_bar);
    }
    let fidelity = if ss_tot <= 1e-24 * sw {
        flags.push(FLAG_CONSTANT_RESPONSE.to_string());
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };

    let local_pred = intercept + (0..d).map(|j| coefficients[j] * x.get(0, j)).sum::<f64>();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| coefficients[b].abs().total_cmp(&coefficients[a].abs()));
    let entries = order
        .into_iter()
        .take(config.top_k.min(d))
        .map(|j| {
            let f = &discretizer.features[j];
            LimeEntry {
                feature: f.name.clone(),
                rule: rule_text(&f.name, sample[j], &f.cuts),
                weight: coefficients[j],
            }
        })
        .collect();
    Ok(LimeExplanation {
        entries,
        coefficients,
        intercept,
        local_pred,
        model_pred: y[0],
        fidelity,
        dropped,
        flags,
    })
}

/// Export form of one local explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeRecord {
    pub sample_id: usize,
    pub intercept: f64,
    pub fidelity: f64,
    pub local_pred: f64,
    pub model_pred: f64,
    pub flags: Vec<String>,
    pub entries: Vec<LimeEntry>,
}

impl LimeRecord {
    pub fn new(sample_id: usize, e: &LimeExplanation) -> Self {
        LimeRecord {
            sample_id,
            intercept: e.intercept,
            fidelity: e.fidelity,
            local_pred: e.local_pred,
            model_pred: e.model_pred,
            flags: e.flags.clone(),
            entries: e.entries.clone(),
        }
    }
}
