//! The per-seed experiment pipeline and the grid runner behind `run`:
//! split, fit every model, score every (model, score) pair once, run every
//! weighting scheme, and evaluate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conformal::{
    compute_scores, conformal_predict, CalibrationRecord, ConformalOutput, PointPredictor,
    SchemeKind, ScoreConfig, Scorer, WeightScheme,
};
use crate::dataset::{load_transactions, three_way_split, Transaction};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy_metrics, coverage_report, district_report};
use crate::experiment::config::{DataSource, ExperimentConfig, ModelKind, ScoreKind};
use crate::experiment::simulate::simulated_csv_path;
use crate::experiment::synthetic::generate_dataset;
use crate::features::{DataPanel, FeatureEncoder};
use crate::predictors::{
    fit_difficulty, fit_gbt, fit_ols, fit_qrf, fit_random_forest, DifficultyModel,
    DifficultyVariant, GbtParams, ProximityKernel, QrfParams, QuantileForest, RandomForestParams,
};
use crate::spatial::{fit_mle, GlsModel, MleOptions, SpatialParams};

/// One grid cell's evaluation for one seed. Failed cells carry the error
/// text and NaN metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRow {
    pub seed: u64,
    pub model: String,
    pub score: String,
    pub scheme: String,
    pub coverage: f64,
    pub coverage_gap: f64,
    pub mean_width: f64,
    pub relative_efficiency: f64,
    pub n_infinite: usize,
    pub n_empty: usize,
    pub n_zero_weight: usize,
    pub mean_effective_sample_size: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictRow {
    pub seed: u64,
    pub model: String,
    pub score: String,
    pub scheme: String,
    pub district: u32,
    pub count: usize,
    pub coverage: f64,
    pub coverage_gap: f64,
    pub mean_relative_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub seed: u64,
    pub model: String,
    pub rmse: f64,
    pub mdae: f64,
    pub per10: f64,
    pub per20: f64,
}

/// Per-test-instance output row (the prediction interface).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRow {
    pub test_id: usize,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub covered: u8,
    pub district: u32,
    pub effective_sample_size: f64,
    pub scheme: String,
    pub score_kind: String,
    pub model: String,
}

/// Seed-averaged summary of one grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub score: String,
    pub scheme: String,
    pub n_seeds: usize,
    pub coverage: f64,
    pub coverage_gap: f64,
    pub mean_width: f64,
    pub relative_efficiency: f64,
    pub n_infinite_total: usize,
}

/// Fixed facts about a finished run, consumed by `report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub n: usize,
    pub seeds: u64,
    pub alpha: f64,
    pub n_train: usize,
    pub n_calibration: usize,
    pub n_test: usize,
    pub n_districts: usize,
}

/// Output file locations of a run.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub out_dir: PathBuf,
    pub cells: PathBuf,
    pub districts: PathBuf,
    pub accuracy: PathBuf,
    pub summary: PathBuf,
    pub accuracy_summary: PathBuf,
    pub meta: PathBuf,
}

impl RunPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            out_dir: dir.to_path_buf(),
            cells: dir.join("cells.csv"),
            districts: dir.join("districts.csv"),
            accuracy: dir.join("accuracy.csv"),
            summary: dir.join("summary.csv"),
            accuracy_summary: dir.join("accuracy_summary.csv"),
            meta: dir.join("run_meta.json"),
        }
    }
}

struct SeedOutput {
    cells: Vec<CellRow>,
    districts: Vec<DistrictRow>,
    accuracy: Vec<AccuracyRow>,
    predictions: Vec<PredictionRow>,
    n_districts: usize,
}

/// Everything trained once per seed and shared across grid cells.
struct SeedModels {
    predictors: BTreeMap<&'static str, std::result::Result<PointPredictor, String>>,
    train_predictions: BTreeMap<&'static str, Vec<f64>>,
    qrf: Option<QuantileForest>,
    oracle: Option<GlsModel>,
}

/// Run the configured experiment grid and write the result tables.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunPaths> {
    config.validate()?;
    let out_dir = PathBuf::from(&config.output.dir);
    std::fs::create_dir_all(&out_dir)?;
    let paths = RunPaths::in_dir(&out_dir);

    let source = config.data.resolved_source()?;
    let csv_pool = match &source {
        DataSource::Csv { path } => Some(load_transactions(path)?),
        _ => None,
    };

    let mut all_cells = Vec::new();
    let mut all_districts = Vec::new();
    let mut all_accuracy = Vec::new();
    let mut meta: Option<RunMeta> = None;

    for replication in 0..config.data.seeds {
        let seed = config.seed_for(replication);
        let transactions = seed_transactions(config, &source, csv_pool.as_deref(), replication)?;
        let output = run_seed(config, &transactions, seed)?;

        if meta.is_none() {
            let n = transactions.len();
            let split = three_way_split(n, config.data.fractions, seed)?;
            meta = Some(RunMeta {
                n,
                seeds: config.data.seeds,
                alpha: config.cp.alpha,
                n_train: split.train.len(),
                n_calibration: split.calibration.len(),
                n_test: split.test.len(),
                n_districts: output.n_districts,
            });
        }
        if config.output.predictions {
            let path = out_dir.join(format!("predictions_seed{seed}.csv"));
            write_csv(&path, &output.predictions)?;
        }
        all_cells.extend(output.cells);
        all_districts.extend(output.districts);
        all_accuracy.extend(output.accuracy);
    }

    sort_cells(&mut all_cells);
    all_districts.sort_by(|a, b| {
        (a.seed, &a.model, &a.score, &a.scheme, a.district).cmp(&(
            b.seed, &b.model, &b.score, &b.scheme, b.district,
        ))
    });
    all_accuracy.sort_by(|a, b| (a.seed, &a.model).cmp(&(b.seed, &b.model)));

    let summary = summarize(&all_cells);
    let accuracy_summary = summarize_accuracy(&all_accuracy);

    write_csv(&paths.cells, &all_cells)?;
    write_csv(&paths.districts, &all_districts)?;
    write_csv(&paths.accuracy, &all_accuracy)?;
    write_csv(&paths.summary, &summary)?;
    write_csv(&paths.accuracy_summary, &accuracy_summary)?;
    std::fs::write(
        &paths.meta,
        serde_json::to_string_pretty(&meta.expect("at least one seed ran"))?,
    )?;
    Ok(paths)
}

fn sort_cells(cells: &mut [CellRow]) {
    cells.sort_by(|a, b| {
        (a.seed, &a.model, &a.score, &a.scheme).cmp(&(b.seed, &b.model, &b.score, &b.scheme))
    });
}

fn seed_transactions(
    config: &ExperimentConfig,
    source: &DataSource,
    csv_pool: Option<&[Transaction]>,
    replication: u64,
) -> Result<Vec<Transaction>> {
    let seed = config.seed_for(replication);
    match source {
        DataSource::Synthetic => {
            Ok(generate_dataset(config.data.n, &config.dgp, seed)?.transactions)
        }
        DataSource::Csv { .. } => {
            let pool = csv_pool.expect("csv pool loaded");
            Ok(subsample(pool, config.data.n, seed))
        }
        DataSource::Simulated { dir } => {
            let path = simulated_csv_path(Path::new(dir), seed);
            if !path.exists() {
                return Err(Error::MissingResults(path.display().to_string()));
            }
            load_transactions(path)
        }
    }
}

/// Random subset of size `n` (all rows when the pool is smaller).
pub(crate) fn subsample(pool: &[Transaction], n: usize, seed: u64) -> Vec<Transaction> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    indices.shuffle(&mut rng);
    indices.truncate(n.min(pool.len()));
    indices.sort_unstable();
    indices.into_iter().map(|i| pool[i].clone()).collect()
}

fn run_seed(config: &ExperimentConfig, transactions: &[Transaction], seed: u64) -> Result<SeedOutput> {
    let split = three_way_split(transactions.len(), config.data.fractions, seed)?;
    let encoder = FeatureEncoder::fit(transactions);
    let full = DataPanel::build(transactions, &encoder)?;
    let train = full.select(&split.train);
    let calibration = full.select(&split.calibration);
    let test = full.select(&split.test);

    let models = fit_seed_models(config, &train, &calibration, seed);
    let schemes = build_schemes(config, &train, &calibration, seed)?;

    let mut cells = Vec::new();
    let mut districts = Vec::new();
    let mut accuracy = Vec::new();
    let mut predictions = Vec::new();

    for &model_kind in &config.grid.models {
        let model_label = model_kind.label();
        let predictor = match models.predictors.get(model_label) {
            Some(Ok(p)) => p,
            Some(Err(message)) => {
                for &score_kind in &config.grid.scores {
                    if !score_kind.defined_for(model_kind) {
                        continue;
                    }
                    for (scheme_kind, _) in &schemes {
                        cells.push(error_cell(seed, model_label, score_kind, *scheme_kind, message));
                    }
                }
                continue;
            }
            None => continue,
        };

        match predictor.predict_panel(&test) {
            Ok(test_predictions) => match accuracy_metrics(&test_predictions, &test.y) {
                Ok(m) => accuracy.push(AccuracyRow {
                    seed,
                    model: model_label.to_string(),
                    rmse: m.rmse,
                    mdae: m.mdae,
                    per10: m.per10,
                    per20: m.per20,
                }),
                Err(e) => {
                    return Err(e);
                }
            },
            Err(e) => return Err(e),
        }

        for &score_kind in &config.grid.scores {
            if !score_kind.defined_for(model_kind) {
                continue;
            }
            let scorer = match build_scorer(config, &models, model_kind, score_kind, &train, predictor)
            {
                Ok(s) => s,
                Err(e) => {
                    for (scheme_kind, _) in &schemes {
                        cells.push(error_cell(
                            seed,
                            model_label,
                            score_kind,
                            *scheme_kind,
                            &e.to_string(),
                        ));
                    }
                    continue;
                }
            };

            let records = match compute_scores(&scorer, &calibration) {
                Ok(r) => r,
                Err(e) => {
                    for (scheme_kind, _) in &schemes {
                        cells.push(error_cell(
                            seed,
                            model_label,
                            score_kind,
                            *scheme_kind,
                            &e.to_string(),
                        ));
                    }
                    continue;
                }
            };

            for (scheme_kind, scheme) in &schemes {
                match evaluate_cell(config, &scorer, &records, &test, scheme, seed) {
                    Ok((cell_row, district_rows, prediction_rows)) => {
                        let mut cell_row = cell_row;
                        cell_row.model = model_label.to_string();
                        cell_row.score = score_kind.label().to_string();
                        cell_row.scheme = scheme_kind.label().to_string();
                        cells.push(cell_row);
                        districts.extend(district_rows.into_iter().map(|mut r| {
                            r.model = model_label.to_string();
                            r.score = score_kind.label().to_string();
                            r.scheme = scheme_kind.label().to_string();
                            r
                        }));
                        if config.output.predictions {
                            predictions.extend(prediction_rows.into_iter().map(|mut r| {
                                r.model = model_label.to_string();
                                r.score_kind = score_kind.label().to_string();
                                r.scheme = scheme_kind.label().to_string();
                                r
                            }));
                        }
                    }
                    Err(e) => cells.push(error_cell(
                        seed,
                        model_label,
                        score_kind,
                        *scheme_kind,
                        &e.to_string(),
                    )),
                }
            }
        }
    }

    let mut district_ids: Vec<u32> = full.districts.clone();
    district_ids.sort_unstable();
    district_ids.dedup();

    Ok(SeedOutput {
        cells,
        districts,
        accuracy,
        predictions,
        n_districts: district_ids.len(),
    })
}

fn error_cell(
    seed: u64,
    model: &str,
    score: ScoreKind,
    scheme: SchemeKind,
    message: &str,
) -> CellRow {
    CellRow {
        seed,
        model: model.to_string(),
        score: score.label().to_string(),
        scheme: scheme.label().to_string(),
        coverage: f64::NAN,
        coverage_gap: f64::NAN,
        mean_width: f64::NAN,
        relative_efficiency: f64::NAN,
        n_infinite: 0,
        n_empty: 0,
        n_zero_weight: 0,
        mean_effective_sample_size: f64::NAN,
        error: message.to_string(),
    }
}

fn fit_seed_models(
    config: &ExperimentConfig,
    train: &DataPanel,
    calibration: &DataPanel,
    seed: u64,
) -> SeedModels {
    let mut predictors: BTreeMap<&'static str, std::result::Result<PointPredictor, String>> =
        BTreeMap::new();
    let mut train_predictions = BTreeMap::new();
    let mut spatial_params = None;
    let mut oracle = None;

    let wants_oracle = config.grid.scores.contains(&ScoreKind::Oracle);

    for &kind in &config.grid.models {
        let fitted: std::result::Result<PointPredictor, String> = match kind {
            ModelKind::Ols => fit_ols(&train.linear_x, &train.y)
                .map(PointPredictor::Linear)
                .map_err(|e| e.to_string()),
            ModelKind::RandomForest => {
                let mut params = RandomForestParams::new(seed.wrapping_add(101));
                params.n_trees = config.models.rf_trees;
                params.min_leaf = config.models.rf_min_leaf;
                fit_random_forest(&train.tree_x, &train.y, params)
                    .map(PointPredictor::Ensemble)
                    .map_err(|e| e.to_string())
            }
            ModelKind::Gbt => {
                let params = GbtParams {
                    n_trees: config.models.gbt_trees,
                    max_depth: config.models.gbt_max_depth,
                    learning_rate: config.models.gbt_learning_rate,
                    seed: seed.wrapping_add(202),
                };
                fit_gbt(&train.tree_x, &train.y, params)
                    .map(PointPredictor::Ensemble)
                    .map_err(|e| e.to_string())
            }
            ModelKind::Spatial => fit_spatial(config, train).map(|(model, params)| {
                spatial_params = Some(params);
                PointPredictor::Spatial(model)
            }),
        };

        if let Ok(p) = &fitted {
            if let Ok(pred) = p.predict_panel(train) {
                train_predictions.insert(kind.label(), pred);
            }
            if kind == ModelKind::Spatial && wants_oracle {
                if let (PointPredictor::Spatial(model), Some(params)) = (p, spatial_params.as_ref())
                {
                    oracle = GlsModel::with_coefficients(
                        model.beta().to_vec(),
                        &calibration.linear_x,
                        &calibration.y,
                        &calibration.locations,
                        params,
                    )
                    .ok();
                }
            }
        }
        predictors.insert(kind.label(), fitted);
    }

    let qrf = if config.grid.models.contains(&ModelKind::RandomForest)
        && config.grid.scores.contains(&ScoreKind::Cqr)
    {
        fit_qrf(
            &train.tree_x,
            &train.y,
            QrfParams {
                n_trees: config.models.qrf_trees,
                min_leaf: config.models.qrf_min_leaf,
                seed: seed.wrapping_add(303),
            },
        )
        .ok()
    } else {
        None
    };

    SeedModels {
        predictors,
        train_predictions,
        qrf,
        oracle,
    }
}

fn fit_spatial(
    config: &ExperimentConfig,
    train: &DataPanel,
) -> std::result::Result<(GlsModel, SpatialParams), String> {
    let ols = fit_ols(&train.linear_x, &train.y).map_err(|e| e.to_string())?;
    let fitted = ols.predict(&train.linear_x).map_err(|e| e.to_string())?;
    let resid_var = train
        .y
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .sum::<f64>()
        / train.len().max(1) as f64;
    let init = SpatialParams {
        sigma_eps2: (resid_var / 2.0).max(1e-4),
        sigma2: (resid_var / 2.0).max(1e-4),
        rho: config.models.mle_rho_init,
    };
    let mle = fit_mle(
        &train.linear_x,
        &train.y,
        &train.locations,
        &init,
        MleOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let model = GlsModel::fit(&train.linear_x, &train.y, &train.locations, &mle.params)
        .map_err(|e| e.to_string())?;
    Ok((model, mle.params))
}

fn build_schemes(
    config: &ExperimentConfig,
    train: &DataPanel,
    calibration: &DataPanel,
    seed: u64,
) -> Result<Vec<(SchemeKind, WeightScheme)>> {
    let mut schemes = Vec::with_capacity(config.grid.schemes.len());
    for &kind in &config.grid.schemes {
        let scheme = match kind {
            SchemeKind::Cp => WeightScheme::Uniform,
            SchemeKind::Mcp => WeightScheme::Mondrian,
            SchemeKind::Scp => WeightScheme::SpatialGaussian {
                eta_km2: config.cp.eta_km2,
            },
            SchemeKind::Nncp => WeightScheme::NearestNeighbor {
                radius_km: config.cp.neighbor_radius_km,
            },
            SchemeKind::Fwcp => {
                let params = RandomForestParams {
                    n_trees: config.models.proximity_trees,
                    mtry: None,
                    min_leaf: config.models.rf_min_leaf,
                    bootstrap: true,
                    max_depth: Some(config.models.proximity_max_depth),
                    seed: seed.wrapping_add(404),
                };
                let forest = fit_random_forest(&train.proximity_x, &train.y, params)?;
                WeightScheme::FeatureRf(ProximityKernel::new(forest, &calibration.proximity_x)?)
            }
        };
        schemes.push((kind, scheme));
    }
    Ok(schemes)
}

fn build_scorer(
    config: &ExperimentConfig,
    models: &SeedModels,
    model_kind: ModelKind,
    score_kind: ScoreKind,
    train: &DataPanel,
    predictor: &PointPredictor,
) -> Result<Scorer> {
    let score_config = match score_kind {
        ScoreKind::Standard => ScoreConfig::Standard,
        ScoreKind::Normalized1 | ScoreKind::Normalized2 | ScoreKind::Normalized3 => {
            let variant = match score_kind {
                ScoreKind::Normalized1 => DifficultyVariant::PredictionItself,
                ScoreKind::Normalized2 => DifficultyVariant::DistrictMean,
                _ => DifficultyVariant::LinearOnFeatures,
            };
            let difficulty = fit_seed_difficulty(models, model_kind, variant, train)?;
            ScoreConfig::Normalized(difficulty)
        }
        ScoreKind::Cqr => {
            let forest = models
                .qrf
                .clone()
                .ok_or(Error::MissingAttachment("quantile forest"))?;
            ScoreConfig::Cqr {
                forest,
                alpha: config.cp.alpha,
            }
        }
        ScoreKind::Oracle => {
            let model = models
                .oracle
                .clone()
                .ok_or(Error::MissingAttachment("calibration-conditioned GLS model"))?;
            ScoreConfig::Oracle(model)
        }
    };
    Ok(Scorer::new(predictor.clone(), score_config))
}

fn fit_seed_difficulty(
    models: &SeedModels,
    model_kind: ModelKind,
    variant: DifficultyVariant,
    train: &DataPanel,
) -> Result<DifficultyModel> {
    let fallback = vec![0.0; train.len()];
    let train_predictions = models
        .train_predictions
        .get(model_kind.label())
        .unwrap_or(&fallback);
    fit_difficulty(variant, train, train_predictions)
}

type CellEvaluation = (CellRow, Vec<DistrictRow>, Vec<PredictionRow>);

fn evaluate_cell(
    config: &ExperimentConfig,
    scorer: &Scorer,
    records: &[CalibrationRecord],
    test: &DataPanel,
    scheme: &WeightScheme,
    seed: u64,
) -> Result<CellEvaluation> {
    let level = 1.0 - config.cp.alpha;
    let outputs: Vec<ConformalOutput> = conformal_predict(scorer, records, test, scheme, level)?;
    let sets: Vec<_> = outputs.iter().map(|o| o.set).collect();

    let report = coverage_report(&sets, &test.y, config.cp.alpha)?;
    let by_district = district_report(&sets, &test.y, &test.districts, config.cp.alpha, records.len())?;

    let n_empty = outputs.iter().filter(|o| o.empty_clamped).count();
    let n_zero_weight = outputs.iter().filter(|o| o.zero_weight).count();
    let mean_ess = outputs
        .iter()
        .map(|o| o.effective_sample_size)
        .sum::<f64>()
        / outputs.len().max(1) as f64;

    let cell = CellRow {
        seed,
        model: String::new(),
        score: String::new(),
        scheme: String::new(),
        coverage: report.coverage,
        coverage_gap: report.coverage_gap,
        mean_width: report.mean_width,
        relative_efficiency: report.relative_efficiency,
        n_infinite: report.n_infinite_sets,
        n_empty,
        n_zero_weight,
        mean_effective_sample_size: mean_ess,
        error: String::new(),
    };

    let district_rows = by_district
        .entries
        .iter()
        .map(|e| DistrictRow {
            seed,
            model: String::new(),
            score: String::new(),
            scheme: String::new(),
            district: e.district,
            count: e.count,
            coverage: e.coverage,
            coverage_gap: e.coverage_gap,
            mean_relative_width: e.mean_relative_width,
        })
        .collect();

    let prediction_rows = if config.output.predictions {
        outputs
            .iter()
            .enumerate()
            .map(|(i, o)| PredictionRow {
                test_id: i,
                lower: o.set.lower,
                upper: o.set.upper,
                width: o.set.width(),
                covered: u8::from(o.set.contains(test.y[i])),
                district: test.districts[i],
                effective_sample_size: o.effective_sample_size,
                scheme: String::new(),
                score_kind: String::new(),
                model: String::new(),
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok((cell, district_rows, prediction_rows))
}

fn summarize(cells: &[CellRow]) -> Vec<SummaryRow> {
    let mut grouped: BTreeMap<(String, String, String), Vec<&CellRow>> = BTreeMap::new();
    for cell in cells {
        if !cell.error.is_empty() {
            continue;
        }
        grouped
            .entry((cell.model.clone(), cell.score.clone(), cell.scheme.clone()))
            .or_default()
            .push(cell);
    }
    grouped
        .into_iter()
        .map(|((model, score, scheme), rows)| {
            let n = rows.len() as f64;
            SummaryRow {
                model,
                score,
                scheme,
                n_seeds: rows.len(),
                coverage: rows.iter().map(|r| r.coverage).sum::<f64>() / n,
                coverage_gap: rows.iter().map(|r| r.coverage_gap).sum::<f64>() / n,
                mean_width: rows.iter().map(|r| r.mean_width).sum::<f64>() / n,
                relative_efficiency: rows.iter().map(|r| r.relative_efficiency).sum::<f64>() / n,
                n_infinite_total: rows.iter().map(|r| r.n_infinite).sum(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracySummaryRow {
    pub model: String,
    pub n_seeds: usize,
    pub rmse: f64,
    pub mdae: f64,
    pub per10: f64,
    pub per20: f64,
}

fn summarize_accuracy(rows: &[AccuracyRow]) -> Vec<AccuracySummaryRow> {
    let mut grouped: BTreeMap<String, Vec<&AccuracyRow>> = BTreeMap::new();
    for row in rows {
        grouped.entry(row.model.clone()).or_default().push(row);
    }
    grouped
        .into_iter()
        .map(|(model, rows)| {
            let n = rows.len() as f64;
            AccuracySummaryRow {
                model,
                n_seeds: rows.len(),
                rmse: rows.iter().map(|r| r.rmse).sum::<f64>() / n,
                mdae: rows.iter().map(|r| r.mdae).sum::<f64>() / n,
                per10: rows.iter().map(|r| r.per10).sum::<f64>() / n,
                per20: rows.iter().map(|r| r.per20).sum::<f64>() / n,
            }
        })
        .collect()
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub(crate) fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingResults(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}
