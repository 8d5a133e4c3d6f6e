use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stormlens::analysis::{correlation_matrix, dependence_data};
use stormlens::data::{self, feature_names, label_counts, Sample};
use stormlens::lime::{explain_local, LimeRecord};
use stormlens::model::{evaluate, train, Evaluation, CHECKPOINT_SCHEMA};
use stormlens::numerics::derive_seed;
use stormlens::plot;
use stormlens::shap::{base_value, decision_path, explain_all, global_importance, ShapRecord};
use stormlens::{Background, Checkpoint, Discretizer, LstmModel, Mat, Method, SequenceSet};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest;

/// Forecast horizon behind the P/N labels, in hours. Recorded, not used.
pub const FORECAST_HORIZON_HOURS: u32 = 24;

/// Sub-seed streams derived from the run seed.
const STREAM_BACKGROUND: u64 = 1;
const STREAM_SHAP: u64 = 2;
const STREAM_LIME: u64 = 3;

fn ensure_out(config: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(&config.out).map_err(|e| CliError::input(&config.out, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::input(path, e))?;
    Ok(path.to_path_buf())
}

fn load_samples(path: &Path) -> CliResult<Vec<Sample>> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{}: data file not found", path.display())));
    }
    Ok(data::load_csv(path)?)
}

/// Checkpoint plus the dataset rebuilt with its split and normalization.
struct Pipeline {
    model: LstmModel,
    train_samples: Vec<Sample>,
    train: SequenceSet,
    test: SequenceSet,
    inputs: Vec<PathBuf>,
}

fn load_pipeline(config: &RunConfig) -> CliResult<Pipeline> {
    let data_path = config.data_path();
    let model_path = config.model_path();
    let samples = load_samples(&data_path)?;
    if !model_path.exists() {
        return Err(CliError::Usage(format!("{}: model file not found", model_path.display())));
    }
    let ckpt = Checkpoint::load(&model_path)?;
    ckpt.check_features()?;
    let (train_samples, test_samples) = data::split(&samples, ckpt.train_fraction, ckpt.split_seed)?;
    let train = data::windowize(&ckpt.norm.apply(&train_samples), ckpt.window_length)?;
    let test = data::windowize(&ckpt.norm.apply(&test_samples), ckpt.window_length)?;
    Ok(Pipeline {
        model: ckpt.model()?,
        train_samples,
        train,
        test,
        inputs: vec![data_path, model_path],
    })
}

fn final_steps(windows: &[&Mat]) -> Vec<Vec<f64>> {
    windows.iter().map(|w| w.row(w.rows() - 1).to_vec()).collect()
}

pub fn synth(config: &RunConfig) -> CliResult<()> {
    let plant = config.plant();
    plant.validate()?;
    let samples = data::synth_generate(config.n_ars, config.samples_per_ar, config.seed, &plant)?;
    ensure_out(config)?;
    let path = config.data_path();
    data::write_csv(&path, &samples)?;
    manifest::write(config, "synth", &[], std::slice::from_ref(&path))?;
    let counts = label_counts(&samples);
    println!(
        "wrote {} ({} samples, {} positive)",
        path.display(),
        samples.len(),
        counts.get("P").copied().unwrap_or(0)
    );
    Ok(())
}

#[derive(Serialize)]
struct Metrics<'a> {
    status: &'static str,
    trained: bool,
    epochs: usize,
    forecast_horizon_hours: u32,
    train_windows: usize,
    test_windows: usize,
    loss_history: &'a [f64],
    evaluation: &'a Evaluation,
}

pub fn train_cmd(config: &RunConfig) -> CliResult<()> {
    let data_path = config.data_path();
    let samples = load_samples(&data_path)?;
    let prep = data::prepare(&samples, config.train_fraction, config.seed, config.window_length)?;
    let outcome = train(&prep.train, &config.train_config())?;
    if !outcome.params.is_finite() {
        return Err(CliError::Internal("training diverged to non-finite parameters".into()));
    }
    let model = LstmModel::new(outcome.params.clone())?;
    let evaluation = evaluate(&model, &prep.test, config.threshold)?;
    let trained = config.epochs > 0;

    ensure_out(config)?;
    let model_path = config.model_path();
    Checkpoint {
        schema: CHECKPOINT_SCHEMA.into(),
        features: feature_names().iter().map(|s| s.to_string()).collect(),
        window_length: config.window_length,
        train_fraction: config.train_fraction,
        split_seed: config.seed,
        norm: prep.norm,
        config: config.train_config(),
        trained,
        params: outcome.params,
    }
    .save(&model_path)?;
    let metrics = Metrics {
        status: if trained { "trained" } else { "untrained" },
        trained,
        epochs: config.epochs,
        forecast_horizon_hours: FORECAST_HORIZON_HOURS,
        train_windows: prep.train.len(),
        test_windows: prep.test.len(),
        loss_history: &outcome.loss_history,
        evaluation: &evaluation,
    };
    let metrics_path = write_json(&config.out.join("metrics.json"), &metrics)?;
    manifest::write(config, "train", &[data_path], &[model_path.clone(), metrics_path])?;
    println!(
        "wrote {} ({}, test TSS {:.3}{})",
        model_path.display(),
        metrics.status,
        evaluation.tss,
        if evaluation.degenerate { ", degenerate" } else { "" }
    );
    Ok(())
}

#[derive(Serialize)]
struct EvaluationReport<'a> {
    train_windows: usize,
    test_windows: usize,
    evaluation: &'a Evaluation,
}

pub fn evaluate_cmd(config: &RunConfig) -> CliResult<()> {
    let p = load_pipeline(config)?;
    let evaluation = evaluate(&p.model, &p.test, config.threshold)?;
    ensure_out(config)?;
    let report = EvaluationReport {
        train_windows: p.train.len(),
        test_windows: p.test.len(),
        evaluation: &evaluation,
    };
    let path = write_json(&config.out.join("evaluation.json"), &report)?;
    manifest::write(config, "evaluate", &p.inputs, &[path])?;
    println!("test TSS {:.3} on {} windows", evaluation.tss, p.test.len());
    Ok(())
}

#[derive(Serialize)]
struct ImportanceReport {
    method: Method,
    explained: usize,
    background: usize,
    /// Mean prediction over the background windows; the explanations' base.
    base_value: f64,
    /// Mean prediction over the whole training set.
    training_base_value: f64,
    max_efficiency_gap: f64,
    features: Vec<String>,
    mean_abs: Vec<f64>,
    ranking: Vec<String>,
}

pub fn explain_global(config: &RunConfig) -> CliResult<()> {
    let p = load_pipeline(config)?;
    if p.test.is_empty() {
        return Err(CliError::Usage("test split has no windows to explain".into()));
    }
    let names = feature_names();
    let n = config.explain_limit.min(p.test.len());
    let windows: Vec<&Mat> = p.test.windows[..n].iter().map(|w| &w.data).collect();
    let train_windows: Vec<Mat> = p.train.windows.iter().map(|w| w.data.clone()).collect();
    let background = Background::sample(
        &train_windows,
        config.background,
        derive_seed(config.seed, STREAM_BACKGROUND),
    )?;
    let explanations = explain_all(
        &p.model,
        &windows,
        &background,
        &config.explainer(),
        derive_seed(config.seed, STREAM_SHAP),
    )?;
    let importance = global_importance(&explanations)?;
    let base = explanations[0].base;
    let train_refs: Vec<&Mat> = train_windows.iter().collect();

    ensure_out(config)?;
    let records: Vec<ShapRecord> = explanations
        .iter()
        .enumerate()
        .map(|(i, e)| ShapRecord::new(i, e))
        .collect();
    let mut artifacts = vec![write_json(&config.out.join("shap.json"), &records)?];
    let report = ImportanceReport {
        method: config.method,
        explained: n,
        background: background.len(),
        base_value: base,
        training_base_value: base_value(&p.model, &train_refs)?,
        max_efficiency_gap: explanations
            .iter()
            .map(|e| e.efficiency_gap().abs())
            .fold(0.0, f64::max),
        features: names.iter().map(|s| s.to_string()).collect(),
        mean_abs: importance.mean_abs.clone(),
        ranking: importance.ranking.iter().map(|&j| names[j].to_string()).collect(),
    };
    artifacts.push(write_json(&config.out.join("importance.json"), &report)?);

    let values = final_steps(&windows);
    let paths = decision_path(&explanations, &importance.ranking, base)?;
    let specs = [
        ("beeswarm", plot::beeswarm(&explanations, &values, &importance.ranking, &names)?),
        ("bar", plot::bar(&importance, &names)?),
        ("decision", plot::decision(&paths, &importance.ranking, &names, base)?),
    ];
    for (name, spec) in &specs {
        artifacts.extend(plot::write_plot(&config.out, name, spec)?);
    }
    manifest::write(config, "explain-global", &p.inputs, &artifacts)?;
    println!(
        "explained {n} windows with {} SHAP; most important feature {}",
        config.method,
        report.ranking[0]
    );
    Ok(())
}

pub fn explain_local_cmd(config: &RunConfig, sample_id: Option<usize>) -> CliResult<()> {
    let id = sample_id.ok_or_else(|| CliError::Usage("explain-local needs --sample-id".into()))?;
    let p = load_pipeline(config)?;
    let window = p.test.windows.get(id).ok_or_else(|| {
        CliError::Usage(format!(
            "sample id {id} is out of range: the test split has {} windows",
            p.test.len()
        ))
    })?;
    let train_refs: Vec<&Mat> = p.train.windows.iter().map(|w| &w.data).collect();
    let rows = Mat::from_rows(&final_steps(&train_refs))?;
    let discretizer = Discretizer::fit(&rows, &feature_names())?;
    let seed = derive_seed(derive_seed(config.seed, STREAM_LIME), id as u64);
    let explanation = explain_local(&p.model, &window.data, &discretizer, &config.lime(), seed)?;

    ensure_out(config)?;
    let mut artifacts = vec![write_json(
        &config.out.join(format!("lime_{id}.json")),
        &LimeRecord::new(id, &explanation),
    )?];
    artifacts.extend(plot::write_plot(
        &config.out,
        &format!("lime_local_{id}"),
        &plot::lime_local(&explanation)?,
    )?);
    manifest::write(config, "explain-local", &p.inputs, &artifacts)?;
    println!(
        "sample {id}: model {:.3}, surrogate {:.3}, fidelity {:.3}",
        explanation.model_pred, explanation.local_pred, explanation.fidelity
    );
    for flag in &explanation.flags {
        println!("  flag: {flag}");
    }
    Ok(())
}

pub fn correlate(config: &RunConfig) -> CliResult<()> {
    let shap_path = config.out.join("shap.json");
    if !shap_path.exists() {
        return Err(CliError::Usage(format!(
            "{}: not found; run explain-global first",
            shap_path.display()
        )));
    }
    let p = load_pipeline(config)?;
    let text = fs::read_to_string(&shap_path).map_err(|e| CliError::input(&shap_path, e))?;
    let records: Vec<ShapRecord> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", shap_path.display())))?;
    let explanations: Vec<_> = records.iter().map(ShapRecord::explanation).collect();
    let windows = records
        .iter()
        .map(|r| {
            p.test.windows.get(r.sample_id).map(|w| &w.data).ok_or_else(|| {
                CliError::Usage(format!(
                    "{}: sample id {} does not exist in the test split",
                    shap_path.display(),
                    r.sample_id
                ))
            })
        })
        .collect::<CliResult<Vec<&Mat>>>()?;
    let importance = global_importance(&explanations)?;
    let matrix = correlation_matrix(&p.train_samples)?;

    ensure_out(config)?;
    let csv_path = config.out.join("corr.csv");
    fs::write(&csv_path, matrix.to_csv()?).map_err(|e| CliError::input(&csv_path, e))?;
    let mut artifacts = vec![csv_path, write_json(&config.out.join("corr.json"), &matrix)?];

    let top = importance.ranking[0];
    let bottom = *importance.ranking.last().expect("ranking is nonempty");
    let mut picked = vec![top];
    if bottom != top {
        picked.push(bottom);
    }
    for j in picked {
        let feature = &matrix.names[j];
        let dep = dependence_data(feature, &explanations, &windows, &matrix)?;
        artifacts.extend(plot::write_plot(
            &config.out,
            &format!("dependence_{feature}"),
            &plot::dependence(&dep)?,
        )?);
        println!("{feature}: strongest correlate {} (r = {:.3})", dep.correlate, dep.correlate_r);
    }
    let mut inputs = p.inputs;
    inputs.push(shap_path);
    manifest::write(config, "correlate", &inputs, &artifacts)?;
    Ok(())
}
