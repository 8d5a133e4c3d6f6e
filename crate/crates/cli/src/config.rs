//! Run configuration: a flat `key = value` file with `#` comments.
//!
//! Precedence, lowest first: built-in defaults, the config file, `--set`
//! pairs, then dedicated flags such as `--seed`.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use stormlens::data::PlantSpec;
use stormlens::lime::Sampling;
use stormlens::{ExplainerConfig, LimeConfig, Method, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub out: PathBuf,
    /// Defaults to `<out>/synth.csv`.
    pub data: Option<PathBuf>,
    /// Defaults to `<out>/model.json`.
    pub model: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,

    pub n_ars: usize,
    pub samples_per_ar: usize,
    pub dominant: String,
    pub partner: String,
    pub rho: f64,
    pub label_noise: f64,

    pub window_length: usize,
    pub train_fraction: f64,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub threshold: f64,

    pub method: Method,
    pub background: usize,
    pub n_coalitions: usize,
    pub n_steps: usize,
    pub explain_limit: usize,

    pub lime_samples: usize,
    pub lime_top_k: usize,
    pub lime_kernel_width: Option<f64>,
    pub lime_lambda: f64,
    pub lime_sampling: Sampling,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let explain = ExplainerConfig::default();
        let lime = LimeConfig::default();
        let plant = PlantSpec::default();
        RunConfig {
            out: PathBuf::from("out"),
            data: None,
            model: None,
            seed: 42,
            threads: None,
            n_ars: 125,
            samples_per_ar: 29,
            dominant: plant.dominant,
            partner: plant.partner,
            rho: plant.rho,
            label_noise: plant.label_noise,
            window_length: stormlens::data::DEFAULT_WINDOW,
            train_fraction: 0.8,
            hidden: train.hidden,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            threshold: 0.5,
            method: explain.method,
            background: 50,
            n_coalitions: explain.n_coalitions,
            n_steps: explain.n_steps,
            explain_limit: 100,
            lime_samples: lime.n_samples,
            lime_top_k: lime.top_k,
            lime_kernel_width: lime.kernel_width,
            lime_lambda: lime.ridge_lambda,
            lime_sampling: lime.sampling,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "out" => self.out = PathBuf::from(v),
            "data" => self.data = Some(PathBuf::from(v)),
            "model" => self.model = Some(PathBuf::from(v)),
            "seed" => self.seed = parse(key, v)?,
            "threads" => self.threads = Some(parse(key, v)?),
            "n_ars" => self.n_ars = parse(key, v)?,
            "samples_per_ar" => self.samples_per_ar = parse(key, v)?,
            "dominant" => self.dominant = v.to_string(),
            "partner" => self.partner = v.to_string(),
            "rho" => self.rho = parse(key, v)?,
            "label_noise" => self.label_noise = parse(key, v)?,
            "window_length" => self.window_length = parse(key, v)?,
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "hidden" => self.hidden = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "threshold" => self.threshold = parse(key, v)?,
            "method" => self.method = parse(key, v)?,
            "background" => self.background = parse(key, v)?,
            "n_coalitions" => self.n_coalitions = parse(key, v)?,
            "n_steps" => self.n_steps = parse(key, v)?,
            "explain_limit" => self.explain_limit = parse(key, v)?,
            "lime_samples" => self.lime_samples = parse(key, v)?,
            "lime_top_k" => self.lime_top_k = parse(key, v)?,
            "lime_kernel_width" => self.lime_kernel_width = Some(parse(key, v)?),
            "lime_lambda" => self.lime_lambda = parse(key, v)?,
            "lime_sampling" => {
                self.lime_sampling = match v {
                    "discretized" => Sampling::Discretized,
                    "raw" => Sampling::Raw,
                    _ => return Err(format!("bad value {v:?} for lime_sampling: expected discretized or raw")),
                }
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies a config document; `origin` names it in error messages.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Usage(format!("{origin}:{}: {msg}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(at(format!("duplicate key {key:?}")));
            }
            self.set(key, value).map_err(at)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        self.set(key.trim(), value)
            .map_err(|e| CliError::Usage(format!("--set: {e}")))
    }

    pub fn data_path(&self) -> PathBuf {
        self.data.clone().unwrap_or_else(|| self.out.join("synth.csv"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    pub fn plant(&self) -> PlantSpec {
        PlantSpec {
            dominant: self.dominant.clone(),
            partner: self.partner.clone(),
            rho: self.rho,
            label_noise: self.label_noise,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
        }
    }

    pub fn explainer(&self) -> ExplainerConfig {
        ExplainerConfig {
            method: self.method,
            n_coalitions: self.n_coalitions,
            n_steps: self.n_steps,
        }
    }

    pub fn lime(&self) -> LimeConfig {
        LimeConfig {
            n_samples: self.lime_samples,
            top_k: self.lime_top_k,
            kernel_width: self.lime_kernel_width,
            ridge_lambda: self.lime_lambda,
            sampling: self.lime_sampling,
        }
    }

    /// Range checks shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_string());
            }
        };
        need(self.threads != Some(0), "threads must be >= 1");
        need(self.n_ars >= 1 && self.samples_per_ar >= 1, "n_ars and samples_per_ar must be >= 1");
        need(self.window_length >= 1, "window_length must be >= 1");
        need(
            self.train_fraction > 0.0 && self.train_fraction < 1.0,
            "train_fraction must lie in (0, 1)",
        );
        need(self.hidden >= 1 && self.batch_size >= 1, "hidden and batch_size must be >= 1");
        need(self.learning_rate > 0.0 && self.learning_rate.is_finite(), "learning_rate must be positive");
        need((0.0..=1.0).contains(&self.threshold), "threshold must lie in [0, 1]");
        need(self.background >= 1, "background must be >= 1");
        need(self.n_steps >= 1, "n_steps must be >= 1");
        need(self.explain_limit >= 1, "explain_limit must be >= 1");
        need(self.lime_samples >= 2 && self.lime_top_k >= 1, "lime_samples must be >= 2 and lime_top_k >= 1");
        need(
            self.lime_kernel_width.is_none_or(|w| w > 0.0 && w.is_finite()),
            "lime_kernel_width must be positive",
        );
        need(self.lime_lambda >= 0.0 && self.lime_lambda.is_finite(), "lime_lambda must be >= 0");
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("invalid configuration: {}", bad.join("; "))))
        }
    }
}
