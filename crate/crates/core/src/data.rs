//! Labeled SHARP-style samples: the feature catalog, CSV ingest, per-region
//! windowing, region-level splitting, normalization and a synthetic
//! generator with a planted ground truth.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{zscore_fit, Mat, ZScore};

pub const N_FEATURES: usize = 12;

pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct FeatureInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub units: &'static str,
    /// Typical magnitude, used only to give synthetic data physical scale.
    center: f64,
    spread: f64,
}

/// The twelve SHARP magnetic-field parameters, in the fixed order used by
/// every matrix, attribution vector and plot in this crate.
pub const CATALOG: [FeatureInfo; N_FEATURES] = [
    FeatureInfo { name: "TOTUSJZ", description: "Total unsigned vertical current", units: "A", center: 2.0e13, spread: 8.0e12 },
    FeatureInfo { name: "USFLUX", description: "Total unsigned flux", units: "Mx", center: 3.0e22, spread: 1.0e22 },
    FeatureInfo { name: "TOTPOT", description: "Total magnetic free energy density", units: "erg/cm", center: 5.0e23, spread: 2.0e23 },
    FeatureInfo { name: "SAVNCPP", description: "Sum of the net current per polarity", units: "A", center: 4.0e12, spread: 1.5e12 },
    FeatureInfo { name: "ABSNJZH", description: "Absolute value of net current helicity", units: "G^2/m", center: 300.0, spread: 120.0 },
    FeatureInfo { name: "MEANPOT", description: "Mean magnetic free energy", units: "erg/cm^3", center: 8000.0, spread: 2500.0 },
    FeatureInfo { name: "MEANSHR", description: "Mean shear angle", units: "deg", center: 45.0, spread: 8.0 },
    FeatureInfo { name: "SHRGT45", description: "Area fraction with shear >= 45 deg", units: "%", center: 45.0, spread: 12.0 },
    FeatureInfo { name: "MEANJZH", description: "Mean current helicity", units: "G^2/m", center: 0.002, spread: 0.004 },
    FeatureInfo { name: "MEANGAM", description: "Mean angle of field from radial", units: "deg", center: 40.0, spread: 6.0 },
    FeatureInfo { name: "MEANALP", description: "Mean characteristic twist parameter", units: "1/Mm", center: 0.005, spread: 0.01 },
    FeatureInfo { name: "MEANGBZ", description: "Mean gradient of vertical field", units: "G/Mm", center: 100.0, spread: 25.0 },
];

pub fn feature_names() -> [&'static str; N_FEATURES] {
    CATALOG.map(|f| f.name)
}

pub fn feature_index(name: &str) -> Result<usize> {
    CATALOG
        .iter()
        .position(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFeature(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    P,
    N,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::P
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::P => "P",
            Label::N => "N",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub ar_id: String,
    pub timestamp: DateTime<Utc>,
    pub features: [f64; N_FEATURES],
    pub label: Label,
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|n| Utc.from_utc_datetime(&n))
}

/// Reads samples from CSV. Columns may appear in any order; extra columns
/// are ignored. The result is sorted by `(ar_id, timestamp)`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path)
}

pub fn read_csv<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<Sample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let ar_col = column("ar_id")?;
    let ts_col = column("timestamp")?;
    let mut feature_cols = [0usize; N_FEATURES];
    for (slot, info) in feature_cols.iter_mut().zip(CATALOG.iter()) {
        *slot = column(info.name)?;
    }
    let label_col = column("label")?;

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| Error::Row {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |i: usize| record.get(i).unwrap_or("");

        let ar_id = field(ar_col).to_string();
        if ar_id.is_empty() {
            return Err(row_err("empty ar_id".into()));
        }
        let ts_text = field(ts_col);
        let timestamp = parse_timestamp(ts_text)
            .ok_or_else(|| row_err(format!("invalid ISO-8601 timestamp {ts_text:?}")))?;
        let mut features = [0.0; N_FEATURES];
        for (j, &col) in feature_cols.iter().enumerate() {
            let text = field(col);
            let v: f64 = text.parse().map_err(|_| {
                row_err(format!("non-numeric value {text:?} in column {}", CATALOG[j].name))
            })?;
            if !v.is_finite() {
                return Err(row_err(format!("non-finite value in column {}", CATALOG[j].name)));
            }
            features[j] = v;
        }
        let label = match field(label_col) {
            "P" => Label::P,
            "N" => Label::N,
            other => {
                return Err(row_err(format!(
                    "invalid label {other:?}; allowed labels are {{P, N}}"
                )))
            }
        };
        if !seen.insert((ar_id.clone(), timestamp)) {
            return Err(row_err(format!(
                "duplicate sample for ar_id {ar_id} at {}",
                format_timestamp(&timestamp)
            )));
        }
        samples.push(Sample {
            ar_id,
            timestamp,
            features,
            label,
        });
    }
    sort_samples(&mut samples);
    Ok(samples)
}

pub fn sort_samples(samples: &mut [Sample]) {
    samples.sort_by(|a, b| (&a.ar_id, a.timestamp).cmp(&(&b.ar_id, b.timestamp)));
}

/// Writes samples with the header `ar_id,timestamp,<catalog>,label`.
pub fn write_csv(path: impl AsRef<Path>, samples: &[Sample]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv_to(&mut buf, samples)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(out: W, samples: &[Sample]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["ar_id", "timestamp"];
    header.extend(feature_names());
    header.push("label");
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.ar_id.clone(), format_timestamp(&s.timestamp)];
        rec.extend(s.features.iter().map(|v| v.to_string()));
        rec.push(s.label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// One model input: `T` consecutive samples of a single region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// `T × 12`, oldest step first.
    pub data: Mat,
    pub label: Label,
    pub ar_id: String,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn final_step(&self) -> &[f64] {
        self.data.row(self.data.rows() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub windows: Vec<Window>,
    pub window_length: usize,
    /// Samples that could not end a full window.
    pub dropped: usize,
}

impl SequenceSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.windows.iter().filter(|w| w.label.is_positive()).count()
    }
}

/// Builds one window per sample that has at least `T − 1` predecessors in
/// its own region. Windows never cross region boundaries.
pub fn windowize(samples: &[Sample], window_length: usize) -> Result<SequenceSet> {
    if window_length == 0 {
        return Err(Error::invalid("window length must be >= 1"));
    }
    let mut sorted: Vec<&Sample> = samples.iter().collect();
    sorted.sort_by(|a, b| (&a.ar_id, a.timestamp).cmp(&(&b.ar_id, b.timestamp)));

    let mut windows = Vec::new();
    let mut dropped = 0;
    for group in sorted.chunk_by(|a, b| a.ar_id == b.ar_id) {
        if group.len() < window_length {
            dropped += group.len();
            continue;
        }
        dropped += window_length - 1;
        for span in group.windows(window_length) {
            let mut data = Mat::zeros(window_length, N_FEATURES);
            for (t, s) in span.iter().enumerate() {
                data.row_mut(t).copy_from_slice(&s.features);
            }
            let last = span[window_length - 1];
            windows.push(Window {
                data,
                label: last.label,
                ar_id: last.ar_id.clone(),
                end: last.timestamp,
            });
        }
    }
    Ok(SequenceSet {
        windows,
        window_length,
        dropped,
    })
}

/// Splits at region granularity: every region lands wholly in one half.
pub fn split(samples: &[Sample], train_fraction: f64, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let ars: BTreeSet<&str> = samples.iter().map(|s| s.ar_id.as_str()).collect();
    if ars.len() < 2 {
        return Err(Error::invalid(format!(
            "splitting needs at least 2 active regions, found {}",
            ars.len()
        )));
    }
    let mut order: Vec<&str> = ars.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((train_fraction * order.len() as f64).round() as usize).clamp(1, order.len() - 1);
    let train_ars: HashSet<&str> = order[..n_train].iter().copied().collect();
    let (train, test) = samples
        .iter()
        .cloned()
        .partition(|s| train_ars.contains(s.ar_id.as_str()));
    Ok((train, test))
}

/// Per-feature z-score statistics fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub features: Vec<ZScore>,
}

impl NormStats {
    pub fn fit(train: &[Sample]) -> Result<Self> {
        let rows: Vec<[f64; N_FEATURES]> = train.iter().map(|s| s.features).collect();
        let m = Mat::from_rows(&rows)?;
        Ok(NormStats {
            features: zscore_fit(&m)?,
        })
    }

    pub fn apply(&self, samples: &[Sample]) -> Vec<Sample> {
        samples
            .iter()
            .map(|s| {
                let mut out = s.clone();
                for (v, z) in out.features.iter_mut().zip(&self.features) {
                    *v = z.apply(*v);
                }
                out
            })
            .collect()
    }
}

/// A train/test split, normalized and windowed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train_samples: Vec<Sample>,
    pub test_samples: Vec<Sample>,
    pub norm: NormStats,
    pub train: SequenceSet,
    pub test: SequenceSet,
}

pub fn prepare(samples: &[Sample], train_fraction: f64, seed: u64, window_length: usize) -> Result<Prepared> {
    let (train_samples, test_samples) = split(samples, train_fraction, seed)?;
    let norm = NormStats::fit(&train_samples)?;
    let train = windowize(&norm.apply(&train_samples), window_length)?;
    let test = windowize(&norm.apply(&test_samples), window_length)?;
    Ok(Prepared {
        train_samples,
        test_samples,
        norm,
        train,
        test,
    })
}

/// Ground truth planted into synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    /// Feature whose latent trend alone decides the label.
    pub dominant: String,
    /// Feature correlated with `dominant` at `rho`.
    pub partner: String,
    pub rho: f64,
    /// Probability of flipping a label, at most 0.02.
    pub label_noise: f64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            dominant: "TOTPOT".into(),
            partner: "SAVNCPP".into(),
            rho: 0.95,
            label_noise: 0.01,
        }
    }
}

impl PlantSpec {
    pub fn validate(&self) -> Result<(usize, usize)> {
        let d = feature_index(&self.dominant)?;
        let c = feature_index(&self.partner)?;
        if d == c {
            return Err(Error::invalid("dominant and partner features must differ"));
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::invalid(format!("|rho| must be <= 1, got {}", self.rho)));
        }
        if !(0.0..=0.02).contains(&self.label_noise) {
            return Err(Error::invalid(format!(
                "label noise must lie in [0, 0.02], got {}",
                self.label_noise
            )));
        }
        Ok((d, c))
    }
}

/// Lag-one autocorrelation of the per-region latent processes.
const LATENT_PERSISTENCE: f64 = 0.7;
const MEASUREMENT_NOISE: f64 = 0.05;
/// Steepness `k` of the dominant driver `tanh(k·z)`: regions sit mostly in
/// a quiet or an active state and move between them smoothly.
const DRIVER_STEEPNESS: f64 = 4.0;
/// Slope of the logistic link on the dominant driver.
const LABEL_GAIN: f64 = 4.0;

/// Standard deviation of `tanh(k·z)` for `z ~ N(0, 1)`, by Simpson's rule.
fn driver_scale(k: f64) -> f64 {
    let (lo, hi, n) = (-10.0f64, 10.0f64, 4000);
    let h = (hi - lo) / n as f64;
    let f = |z: f64| (k * z).tanh().powi(2) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    (acc * h / 3.0).sqrt()
}

/// Generates `n_ars × samples_per_ar` samples at hourly cadence.
///
/// Each feature follows a stationary AR(1) latent process per region. The
/// dominant feature carries `tanh(k·z)` of its latent, rescaled to unit
/// variance, and the partner is mixed from it so the two correlate at
/// `rho`. The label is P when the logistic of the dominant driver exceeds
/// 0.5, then flipped with probability `label_noise`.
pub fn synth_generate(n_ars: usize, samples_per_ar: usize, seed: u64, plant: &PlantSpec) -> Result<Vec<Sample>> {
    let (d, c) = plant.validate()?;
    if n_ars == 0 || samples_per_ar == 0 {
        return Err(Error::invalid("synthetic dataset needs at least one region and one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - LATENT_PERSISTENCE * LATENT_PERSISTENCE).sqrt();
    let mix = (1.0 - plant.rho * plant.rho).max(0.0).sqrt();
    let scale = driver_scale(DRIVER_STEEPNESS);
    let epoch = Utc.with_ymd_and_hms(2012, 1, 1, 0, 0, 0).unwrap();

    let mut out = Vec::with_capacity(n_ars * samples_per_ar);
    for a in 0..n_ars {
        let ar_id = format!("AR{:05}", 11000 + a);
        let start = epoch + Duration::days(10 * a as i64);
        let mut latent: [f64; N_FEATURES] = std::array::from_fn(|_| rng.sample(StandardNormal));
        for t in 0..samples_per_ar {
            if t > 0 {
                for z in latent.iter_mut() {
                    let e: f64 = rng.sample(StandardNormal);
                    *z = LATENT_PERSISTENCE * *z + innovation * e;
                }
            }
            let mut signal = latent;
            signal[d] = (DRIVER_STEEPNESS * latent[d]).tanh() / scale;
            signal[c] = plant.rho * signal[d] + mix * latent[c];
            let mut features = [0.0; N_FEATURES];
            for j in 0..N_FEATURES {
                let noise: f64 = rng.sample(StandardNormal);
                let unit = signal[j] + MEASUREMENT_NOISE * noise;
                features[j] = CATALOG[j].center + CATALOG[j].spread * unit;
            }
            let p = 1.0 / (1.0 + (-LABEL_GAIN * signal[d]).exp());
            let mut positive = p > 0.5;
            if rng.random::<f64>() < plant.label_noise {
                positive = !positive;
            }
            out.push(Sample {
                ar_id: ar_id.clone(),
                timestamp: start + Duration::hours(t as i64),
                features,
                label: if positive { Label::P } else { Label::N },
            });
        }
    }
    Ok(out)
}

/// Sample and window counts per label, for reports.
pub fn label_counts(samples: &[Sample]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(s.label.as_str()).or_insert(0) += 1;
    }
    m
}
