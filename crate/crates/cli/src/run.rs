//! Experiment execution.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use dre_core::dataio::{
    add_feature_noise, make_binary_pair, noise_std_for_level, simulate_single_neuron, DataSplit, FmnistData,
    PairConfig, SimConfig,
};
use dre_core::network::{evaluate, flat_random_feature_baseline, write_model, DreConfig, DreModel, Metrics};
use dre_core::theory::{
    common_penalty_ensemble_risk, ensemble_risk, flat_optima, flat_risk, hetero_penalty_solution, monte_carlo_risk,
    optimal_alpha_k, optimal_lambda_k, risk_curves, sub_model_risk, Estimator, TheoryParams,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::*;

pub const DATA_DIR_ENV: &str = "DRE_DATA_DIR";
const FMNIST_DIM: usize = 784;
const FMNIST_TEST_PER_CLASS: usize = 1000;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub rows: Vec<ResultRow>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    kind: &'static str,
    config_sha256: String,
    seeds: &'a [u64],
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    results: Vec<ResultRow>,
    timings: Vec<TimingRow>,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn save(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }
}

fn log(msg: impl AsRef<str>) {
    eprintln!("[dre] {}", msg.as_ref());
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, opts: &RunOptions) {
    if let Some(seed) = opts.seed_override {
        cfg.seeds = vec![seed];
    }
    if let Some(dir) = &opts.output_dir {
        cfg.output_dir = dir.clone();
    }
}

pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    apply_overrides(&mut cfg, opts);
    run(&cfg)
}

/// Runs every seed of the experiment and writes the CSVs and manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    check_resources(cfg)?;
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        results: Vec::new(),
        timings: Vec::new(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;

    match cfg.kind {
        ExperimentKind::Simulate | ExperimentKind::Baseline | ExperimentKind::AblationK => run_simulated(cfg, &mut out)?,
        ExperimentKind::AblationDepth => run_depth_ablation(cfg, &mut out)?,
        ExperimentKind::Fmnist => run_fmnist(cfg, &mut out)?,
        ExperimentKind::TheoryCurves => {
            let curves = risk_curves(&cfg.theory.b, &cfg.theory.c_grid)?;
            out.save("theory_curves.csv", &to_csv(&curves, &CURVE_HEADER)?)?;
        }
        ExperimentKind::MonteCarlo => {
            let rows = run_monte_carlo(cfg)?;
            out.save("monte_carlo.csv", &to_csv(&rows, &MONTE_CARLO_HEADER)?)?;
        }
    }

    if !matches!(cfg.kind, ExperimentKind::TheoryCurves | ExperimentKind::MonteCarlo) {
        let results = to_csv(&out.results, &RESULT_HEADER)?;
        out.save("results.csv", &results)?;
        let timings = to_csv(&out.timings, &TIMING_HEADER)?;
        out.save("timings.csv", &timings)?;
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.name(),
        config_sha256: cfg.hash(),
        seeds: &cfg.seeds,
        config: cfg,
        files: out.files.iter().map(|f| f.display().to_string()).collect(),
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    out.save("manifest.json", &json)?;
    Ok(RunSummary {
        output_dir: out.dir,
        files: out.files,
        rows: out.results,
    })
}

/// Refuses configurations whose features or memory exceed the limits.
pub fn check_resources(cfg: &ExperimentConfig) -> Result<()> {
    let limits = &cfg.limits;
    let (input_dim, rows) = match cfg.kind {
        ExperimentKind::Fmnist => (FMNIST_DIM, 2 * (cfg.data.per_class_cap + FMNIST_TEST_PER_CLASS)),
        _ => (cfg.data.d, cfg.data.n),
    };
    let mut models = vec![cfg.model.clone()];
    match cfg.kind {
        ExperimentKind::TheoryCurves | ExperimentKind::MonteCarlo => return Ok(()),
        ExperimentKind::AblationK => {
            models = cfg.ablation.k_values.iter().map(|&k| ablation_model(cfg, k)).collect();
        }
        ExperimentKind::AblationDepth => {
            models[0].depth = cfg.ablation.depths.iter().copied().max().unwrap_or(1);
        }
        _ => {}
    }
    let budget = limits.max_memory_gb * 1e9;
    if cfg.kind != ExperimentKind::Baseline {
        for m in &models {
            let features = m.blocks * m.features_per_block;
            if features > limits.max_features {
                bail!(
                    "resource guard: K*P = {features} random features per layer exceeds limits.max_features = {}",
                    limits.max_features
                );
            }
            let bytes = m.memory_estimate(input_dim, rows);
            if bytes > budget {
                bail!(
                    "resource guard: estimated {:.1} GB for K={} P={} M={} exceeds limits.max_memory_gb = {}",
                    bytes / 1e9,
                    m.blocks,
                    m.features_per_block,
                    m.depth,
                    limits.max_memory_gb
                );
            }
        }
    }
    if cfg.baseline.enabled || cfg.kind == ExperimentKind::Baseline {
        let p = cfg.baseline_features();
        if p > limits.max_features {
            bail!(
                "resource guard: baseline with {p} features exceeds limits.max_features = {}",
                limits.max_features
            );
        }
        let (r, pf) = (rows as f64, p as f64);
        let bytes = 8.0 * (r * pf + r.min(pf).powi(2) + pf * (input_dim as f64 + cfg.model.n_lambdas() as f64));
        if bytes > budget {
            bail!(
                "resource guard: baseline needs about {:.1} GB, above limits.max_memory_gb = {}",
                bytes / 1e9,
                limits.max_memory_gb
            );
        }
    }
    Ok(())
}

fn ablation_model(cfg: &ExperimentConfig, k: usize) -> DreConfig {
    DreConfig {
        blocks: k,
        features_per_block: cfg.total_features() / k,
        ..cfg.model.clone()
    }
}

fn simulated_split(cfg: &ExperimentConfig, seed: u64, level: u32) -> Result<DataSplit> {
    Ok(simulate_single_neuron(&SimConfig {
        n: cfg.data.n,
        d: cfg.data.d,
        noise_std: noise_std_for_level(level),
        activation: cfg.data.activation,
        seed,
    })?)
}

struct Setting {
    seed: u64,
    level: u32,
}

fn metrics_for(pred: &ndarray::Array1<f64>, split: &DataSplit) -> Result<Metrics> {
    let mean = split.y_train().mean().unwrap_or(0.0);
    Ok(evaluate(pred.view(), split.y_test().view(), mean)?)
}

fn train_dre(
    cfg: &ExperimentConfig,
    out: &mut Outputs,
    model_cfg: &DreConfig,
    split: &DataSplit,
    at: &Setting,
) -> Result<()> {
    let start = Instant::now();
    let trained = DreModel::train(split, model_cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let m = metrics_for(&trained.test_predictions, split)?;
    log(format!(
        "{} seed {} level {} K={} P={} M={}: test mse {:.6}, 1-R2 {:.6} ({wall:.1}s)",
        cfg.kind.name(),
        at.seed,
        at.level,
        model_cfg.blocks,
        model_cfg.features_per_block,
        model_cfg.depth,
        m.mse,
        m.one_minus_r2
    ));
    out.results.push(ResultRow {
        kind: cfg.kind.name(),
        seed: at.seed,
        method: "dre",
        noise_level: at.level,
        k: model_cfg.blocks,
        p: model_cfg.features_per_block,
        depth: model_cfg.depth,
        lambda_star: trained.model.lambda_star(),
        test_mse: m.mse,
        one_minus_r2: m.one_minus_r2,
        accuracy: m.accuracy,
    });
    out.timings.push(TimingRow {
        kind: cfg.kind.name(),
        seed: at.seed,
        method: "dre",
        noise_level: at.level,
        k: model_cfg.blocks,
        depth: model_cfg.depth,
        wall_seconds: wall,
    });
    if cfg.save_models {
        save_model(out, &trained.model, &format!("dre_seed{}_level{}_k{}", at.seed, at.level, model_cfg.blocks))?;
    }
    Ok(())
}

fn save_model(out: &mut Outputs, model: &DreModel, stem: &str) -> Result<()> {
    let mut bytes = Vec::new();
    write_model(model, &mut bytes)?;
    out.save(&format!("models/{stem}.dre"), &bytes)
}

fn run_baseline(cfg: &ExperimentConfig, out: &mut Outputs, split: &DataSplit, at: &Setting) -> Result<()> {
    let p = cfg.baseline_features();
    let start = Instant::now();
    let res = flat_random_feature_baseline(split, p, &cfg.model.gamma_source, &cfg.model.lambdas, at.seed)?;
    let wall = start.elapsed().as_secs_f64();
    log(format!(
        "{} seed {} level {} baseline P={p}: test mse {:.6}, 1-R2 {:.6} ({wall:.1}s)",
        cfg.kind.name(),
        at.seed,
        at.level,
        res.metrics.mse,
        res.metrics.one_minus_r2
    ));
    out.results.push(ResultRow {
        kind: cfg.kind.name(),
        seed: at.seed,
        method: "baseline",
        noise_level: at.level,
        k: 1,
        p,
        depth: 0,
        lambda_star: res.lambda_star,
        test_mse: res.metrics.mse,
        one_minus_r2: res.metrics.one_minus_r2,
        accuracy: res.metrics.accuracy,
    });
    out.timings.push(TimingRow {
        kind: cfg.kind.name(),
        seed: at.seed,
        method: "baseline",
        noise_level: at.level,
        k: 1,
        depth: 0,
        wall_seconds: wall,
    });
    Ok(())
}

fn run_simulated(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    for &seed in &cfg.seeds {
        for level in cfg.noise_levels() {
            let split = simulated_split(cfg, seed, level)?;
            let at = Setting { seed, level };
            let model_cfg = DreConfig {
                seed,
                ..cfg.model.clone()
            };
            match cfg.kind {
                ExperimentKind::Simulate => {
                    train_dre(cfg, out, &model_cfg, &split, &at)?;
                    if cfg.baseline.enabled {
                        run_baseline(cfg, out, &split, &at)?;
                    }
                }
                ExperimentKind::Baseline => run_baseline(cfg, out, &split, &at)?,
                ExperimentKind::AblationK => {
                    for &k in &cfg.ablation.k_values {
                        let m = DreConfig {
                            seed,
                            ..ablation_model(cfg, k)
                        };
                        train_dre(cfg, out, &m, &split, &at)?;
                    }
                }
                _ => unreachable!("not a simulated kind"),
            }
        }
    }
    Ok(())
}

/// Trains once at the deepest requested depth and scores every shallower
/// depth from the same layers through its own final ridge.
fn run_depth_ablation(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let deepest = cfg.ablation.depths.iter().copied().max().expect("validated non-empty");
    for &seed in &cfg.seeds {
        for level in cfg.noise_levels() {
            let split = simulated_split(cfg, seed, level)?;
            let model_cfg = DreConfig {
                seed,
                depth: deepest,
                per_depth: true,
                ..cfg.model.clone()
            };
            let start = Instant::now();
            let model = DreModel::train(&split, &model_cfg)?.model;
            let wall = start.elapsed().as_secs_f64();
            for &depth in &cfg.ablation.depths {
                let pred = model.predict(split.x_test().view(), Some(depth))?;
                let m = metrics_for(&pred, &split)?;
                log(format!(
                    "ablation_depth seed {seed} level {level} M={depth}: test mse {:.6}, 1-R2 {:.6}",
                    m.mse, m.one_minus_r2
                ));
                out.results.push(ResultRow {
                    kind: cfg.kind.name(),
                    seed,
                    method: "dre",
                    noise_level: level,
                    k: model_cfg.blocks,
                    p: model_cfg.features_per_block,
                    depth,
                    lambda_star: model.head(depth).expect("per-depth head").lambda_star(),
                    test_mse: m.mse,
                    one_minus_r2: m.one_minus_r2,
                    accuracy: m.accuracy,
                });
            }
            out.timings.push(TimingRow {
                kind: cfg.kind.name(),
                seed,
                method: "dre",
                noise_level: level,
                k: model_cfg.blocks,
                depth: deepest,
                wall_seconds: wall,
            });
            if cfg.save_models {
                save_model(out, &model, &format!("dre_seed{seed}_level{level}_m{deepest}"))?;
            }
        }
    }
    Ok(())
}

pub fn data_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.data
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data/fmnist"))
}

fn run_fmnist(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let dir = data_dir(cfg);
    let data = FmnistData::load(&dir).with_context(|| {
        format!(
            "loading FMNIST IDX files from {} (set data.data_dir or {DATA_DIR_ENV})",
            dir.display()
        )
    })?;
    let pair = PairConfig {
        pair_index: cfg.data.pair_index,
        per_class_cap: cfg.data.per_class_cap,
        valid_fraction: cfg.data.valid_fraction,
    };
    for &seed in &cfg.seeds {
        let clean = make_binary_pair(&data, &pair, seed)?;
        for level in cfg.noise_levels() {
            let split = add_feature_noise(&clean, level, seed)?;
            let at = Setting { seed, level };
            let model_cfg = DreConfig {
                seed,
                ..cfg.model.clone()
            };
            train_dre(cfg, out, &model_cfg, &split, &at)?;
            if cfg.baseline.enabled {
                run_baseline(cfg, out, &split, &at)?;
            }
        }
    }
    Ok(())
}

/// Simulated risks of the closed-form optimal estimators next to their
/// theoretical values.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<Vec<MonteCarloRow>> {
    let mc = &cfg.monte_carlo;
    let scenario = mc.scenario();
    let params = TheoryParams::new(scenario.ratios(), scenario.b.clone())?;
    let groups = params.groups();
    let mut estimators = vec![Estimator::Zero];
    let mut names = vec!["zero".to_string()];
    let mut theory = vec![params.b_bar()];

    let lambda_star = (0..groups)
        .map(|k| optimal_lambda_k(&params, k))
        .collect::<dre_core::Result<Vec<_>>>()?;
    for (k, &lambda) in lambda_star.iter().enumerate() {
        estimators.push(Estimator::SubModel { k, lambda, alpha: 1.0 });
        names.push(format!("sub_model_{k}"));
        theory.push(sub_model_risk(1.0, lambda, k, &params)?);
    }
    estimators.push(Estimator::Ensemble {
        lambdas: lambda_star.clone(),
        alphas: vec![1.0; groups],
    });
    names.push("ensemble_optimal".into());
    theory.push(ensemble_risk(&vec![1.0; groups], &lambda_star, &params)?);

    let equal_sizes = scenario.p.iter().all(|&p| p == scenario.p[0]);
    if equal_sizes {
        let (lambda_bar, a_bar) = flat_optima(&params, None)?;
        estimators.push(Estimator::Flat {
            lambda: lambda_bar,
            a: a_bar,
        });
        names.push("flat".into());
        theory.push(flat_risk(a_bar, lambda_bar, &params)?);

        let alphas = (0..groups)
            .map(|k| optimal_alpha_k(lambda_bar, &params, k))
            .collect::<dre_core::Result<Vec<_>>>()?;
        estimators.push(Estimator::Ensemble {
            lambdas: vec![lambda_bar; groups],
            alphas,
        });
        names.push("ensemble_common_penalty".into());
        theory.push(common_penalty_ensemble_risk(lambda_bar, &params)?);

        let sol = hetero_penalty_solution(&params.flattened(), &mc.penalty_grid)?;
        estimators.push(Estimator::MultiPenalty {
            lambdas: mc.penalty_grid.clone(),
            weights: sol.weights.to_vec(),
        });
        names.push("multi_penalty".into());
        theory.push(sol.optimal_risk);
    }
    let fmt_list = |v: Vec<String>| v.join("/");
    let name = format!(
        "n={};p={};b={}",
        scenario.n,
        fmt_list(scenario.p.iter().map(|p| p.to_string()).collect()),
        fmt_list(scenario.b.iter().map(|b| b.to_string()).collect())
    );
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let est = monte_carlo_risk(&scenario, &estimators, mc.replications, seed)?;
        for ((e, t), label) in est.into_iter().zip(&theory).zip(&names) {
            log(format!("monte_carlo seed {seed} {label}: {:.5} ± {:.5} (theory {t:.5})", e.risk, e.stderr));
            rows.push(MonteCarloRow {
                seed,
                scenario: name.clone(),
                estimator: label.clone(),
                risk: e.risk,
                stderr: e.stderr,
                theory: *t,
            });
        }
    }
    Ok(rows)
}
