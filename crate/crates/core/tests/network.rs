use dre_core::dataio::DataSplit;
use dre_core::features::{FeatureBlock, FeatureBlockSpec, DEFAULT_BIAS_RANGE};
use dre_core::network::{
    flat_random_feature_baseline, train_layer, DreConfig, DreLayerModel, DreModel, GammaSource, Representation,
    BASELINE_LAYER,
};
use dre_core::ridge::fit_grid;
use dre_core::rng::{Purpose, StreamKey};
use dre_core::DreError;
use ndarray::{Array1, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = StreamKey::new(seed, 99, 0).rng(Purpose::Data);
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
}

fn split_with(n: usize, d: usize, seed: u64, f: impl Fn(ndarray::ArrayView1<f64>) -> f64) -> DataSplit {
    let x = gaussian(3 * n, d, seed);
    let y: Array1<f64> = x.rows().into_iter().map(|r| f(r)).collect();
    let part = |i: usize| {
        (
            x.slice(ndarray::s![i * n..(i + 1) * n, ..]).to_owned(),
            y.slice(ndarray::s![i * n..(i + 1) * n]).to_owned(),
        )
    };
    let (a, b, c) = (part(0), part(1), part(2));
    DataSplit::new(a.0, a.1, b.0, b.1, c.0, c.1).unwrap()
}

fn smooth_split(seed: u64) -> DataSplit {
    split_with(120, 5, seed, |r| (r[0] + 0.5 * r[1]).max(0.0) + 0.3 * r[2].sin())
}

fn small_config(depth: usize, blocks: usize) -> DreConfig {
    DreConfig {
        depth,
        blocks,
        features_per_block: 20,
        lambdas: vec![1e-3, 0.1, 1.0, 10.0],
        seed: 5,
        ..DreConfig::default()
    }
}

fn rep_of(split: &DataSplit) -> Representation {
    Representation {
        train: split.x_train().clone(),
        valid: split.x_valid().clone(),
        test: split.x_test().clone(),
    }
}

#[test]
fn width_is_k_times_l() {
    let split = smooth_split(1);
    for (k, lambdas) in [(1, vec![1.0]), (2, vec![0.1, 1.0, 10.0])] {
        let cfg = DreConfig {
            blocks: k,
            lambdas: lambdas.clone(),
            ..small_config(1, k)
        };
        let (layer, next) = train_layer(&rep_of(&split), split.y_train().view(), &cfg, 0).unwrap();
        assert_eq!(next.width(), k * lambdas.len());
        assert_eq!(next.valid.ncols(), next.width());
        assert_eq!(next.test.ncols(), next.width());
        assert_eq!(layer.output_width(), next.width());
    }
    let model = DreModel::train(&split, &small_config(3, 3)).unwrap().model;
    for layer in &model.layers()[1..] {
        assert_eq!(layer.input_dim(), 3 * 4);
    }
}

#[test]
fn training_columns_have_unit_uncentered_std() {
    let split = smooth_split(2);
    let cfg = small_config(1, 3);
    let (_, next) = train_layer(&rep_of(&split), split.y_train().view(), &cfg, 0).unwrap();
    let n = next.train.nrows() as f64;
    for col in next.train.axis_iter(Axis(1)) {
        let s = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        assert!((s - 1.0).abs() < 1e-12, "column scale {s}");
    }
}

#[test]
fn single_block_matches_direct_ridge() {
    let split = smooth_split(3);
    let cfg = DreConfig {
        gamma_source: GammaSource::Grid { values: vec![0.8] },
        ..small_config(1, 1)
    };
    let (_, next) = train_layer(&rep_of(&split), split.y_train().view(), &cfg, 0).unwrap();

    let spec = FeatureBlockSpec {
        gamma: 0.8,
        p: cfg.features_per_block,
        bias_range: DEFAULT_BIAS_RANGE,
        key: StreamKey::new(cfg.seed, 0, 0),
    };
    let block = FeatureBlock::draw(&spec, split.dim()).unwrap();
    let z = block.apply(split.x_train().view()).unwrap();
    let fit = fit_grid(z.view(), split.y_train().view(), &cfg.lambdas).unwrap();
    let raw = fit.predict(z.view()).unwrap();
    let n = raw.nrows() as f64;
    for (j, col) in raw.axis_iter(Axis(1)).enumerate() {
        let s = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        for (a, b) in col.iter().zip(next.train.column(j)) {
            assert!((a / s - b).abs() < 1e-8);
        }
    }
}

#[test]
fn planted_block_signal_is_recovered() {
    let n = 200;
    let x = gaussian(3 * n, 4, 11);
    let cfg = DreConfig {
        blocks: 1,
        features_per_block: 15,
        lambdas: vec![1e-4],
        gamma_source: GammaSource::Grid { values: vec![1.0] },
        seed: 21,
        ..DreConfig::default()
    };
    let spec = FeatureBlockSpec {
        gamma: 1.0,
        p: 15,
        bias_range: DEFAULT_BIAS_RANGE,
        key: StreamKey::new(21, 0, 0),
    };
    let block = FeatureBlock::draw(&spec, 4).unwrap();
    let w: Array1<f64> = (0..15).map(|i| (i as f64 * 0.7).cos()).collect();
    let y = block.apply(x.view()).unwrap().dot(&w);
    let input = Representation {
        train: x.slice(ndarray::s![..n, ..]).to_owned(),
        valid: x.slice(ndarray::s![n..2 * n, ..]).to_owned(),
        test: x.slice(ndarray::s![2 * n.., ..]).to_owned(),
    };
    let y_train = y.slice(ndarray::s![..n]);
    let (_, next) = train_layer(&input, y_train, &cfg, 0).unwrap();
    let col = next.train.column(0);
    let (ma, mb) = (col.mean().unwrap(), y_train.mean().unwrap());
    let cov: f64 = col.iter().zip(y_train).map(|(a, b)| (a - ma) * (b - mb)).sum();
    let va: f64 = col.iter().map(|a| (a - ma).powi(2)).sum();
    let vb: f64 = y_train.iter().map(|b| (b - mb).powi(2)).sum();
    assert!(cov / (va * vb).sqrt() > 0.999);
}

#[test]
fn predict_reproduces_cached_predictions() {
    let split = smooth_split(4);
    let trained = DreModel::train(&split, &small_config(2, 3)).unwrap();
    let test = trained.model.predict(split.x_test().view(), None).unwrap();
    assert_eq!(test, trained.test_predictions);
    let valid = trained.model.predict(split.x_valid().view(), Some(2)).unwrap();
    assert_eq!(valid, trained.valid_predictions);
}

#[test]
fn row_prediction_matches_batch() {
    let split = smooth_split(5);
    let model = DreModel::train(&split, &small_config(2, 2)).unwrap().model;
    let batch = model.predict(split.x_test().view(), None).unwrap();
    for i in [0, 17, 119] {
        let row = split.x_test().slice(ndarray::s![i..i + 1, ..]).to_owned();
        let one = model.predict(row.view(), None).unwrap();
        assert!((one[0] - batch[i]).abs() < 1e-10);
    }
}

#[test]
fn shallow_prediction_ignores_deeper_layers() {
    let split = smooth_split(6);
    let model = DreModel::train(&split, &small_config(3, 2)).unwrap().model;
    let mut layers: Vec<DreLayerModel> = model.layers().to_vec();
    let last = layers.pop().unwrap();
    layers.push(DreLayerModel::from_parts(last.blocks().to_vec(), last.fits().to_vec(), last.scales() * 3.0).unwrap());
    let altered =
        DreModel::from_parts(model.config().clone(), model.input_dim(), layers, model.heads().to_vec()).unwrap();
    let x = split.x_test().view();
    assert_eq!(model.predict(x, Some(1)).unwrap(), altered.predict(x, Some(1)).unwrap());
    assert_eq!(model.predict(x, Some(2)).unwrap(), altered.predict(x, Some(2)).unwrap());
    assert_ne!(model.predict(x, Some(3)).unwrap(), altered.predict(x, Some(3)).unwrap());
}

#[test]
fn depth_errors() {
    let split = smooth_split(7);
    let model = DreModel::train(&split, &small_config(2, 2)).unwrap().model;
    assert!(matches!(model.predict(split.x_test().view(), Some(0)), Err(DreError::InvalidConfig(_))));
    assert!(matches!(model.predict(split.x_test().view(), Some(3)), Err(DreError::InvalidConfig(_))));
    let narrow = Array2::zeros((2, 4));
    assert!(matches!(model.predict(narrow.view(), None), Err(DreError::DimensionMismatch(_))));

    let cfg = DreConfig {
        per_depth: false,
        ..small_config(2, 2)
    };
    let model = DreModel::train(&split, &cfg).unwrap().model;
    assert_eq!(model.heads().len(), 1);
    assert!(model.predict(split.x_test().view(), Some(1)).is_err());
    assert!(model.predict(split.x_test().view(), Some(2)).is_ok());
    assert!(matches!(model.select_depth(&split), Err(DreError::InvalidConfig(_))));
}

#[test]
fn select_depth_is_validation_argmin() {
    let split = smooth_split(8);
    let model = DreModel::train(&split, &small_config(1, 2)).unwrap().model;
    assert_eq!(model.select_depth(&split).unwrap(), 1);

    let model = DreModel::train(&split, &small_config(3, 2)).unwrap().model;
    let y = split.y_valid();
    let direct: Vec<f64> = (1..=3)
        .map(|d| {
            let p = model.predict(split.x_valid().view(), Some(d)).unwrap();
            p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
        })
        .collect();
    let best = direct
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc })
        .0;
    assert_eq!(model.select_depth(&split).unwrap(), best + 1);
    for (a, b) in direct.iter().zip(model.depth_scores(&split).unwrap()) {
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
    for (h, d) in model.heads().iter().zip(&direct) {
        assert!((h.valid_mse() - d).abs() <= 1e-12 * d.max(1.0));
    }
}

#[test]
fn selected_lambda_minimizes_validation_error() {
    let split = smooth_split(9);
    let cfg = small_config(1, 2);
    let model = DreModel::train(&split, &cfg).unwrap().model;
    let head = model.final_head();
    let rep = model.layers()[0].forward(split.x_valid().view()).unwrap();
    let all = head.fit().predict(rep.view()).unwrap();
    let sse: Vec<f64> = all
        .axis_iter(Axis(1))
        .map(|c| c.iter().zip(split.y_valid()).map(|(p, y)| (p - y).powi(2)).sum())
        .collect();
    let chosen = sse[head.lambda_star_index()];
    assert!(sse.iter().all(|&s| chosen <= s));
}

#[test]
fn thread_count_does_not_change_results() {
    let split = smooth_split(10);
    let cfg = small_config(2, 6);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| DreModel::train(&split, &cfg).unwrap())
    };
    let (a, b) = (run(1), run(8));
    assert_eq!(a.model, b.model);
    assert_eq!(a.model.lambda_star(), b.model.lambda_star());
    let bits = |v: &Array1<f64>| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.test_predictions), bits(&b.test_predictions));
}

#[test]
fn model_file_round_trip() {
    let split = smooth_split(11);
    let model = DreModel::train(&split, &small_config(2, 2)).unwrap().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.dre");
    model.save(&path).unwrap();
    let loaded = DreModel::load(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(
        loaded.predict(split.x_test().view(), None).unwrap(),
        model.predict(split.x_test().view(), None).unwrap()
    );

    let bytes = std::fs::read(&path).unwrap();
    let mut wrong_version = bytes.clone();
    wrong_version[8] = 99;
    let err = dre_core::network::read_model(&wrong_version[..]).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");

    let err = dre_core::network::read_model(&bytes[..bytes.len() - 5]).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");

    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(dre_core::network::read_model(&bad_magic[..]).is_err());

    let mut extra = bytes;
    extra.push(0);
    assert!(dre_core::network::read_model(&extra[..]).is_err());
}

#[test]
fn one_feature_baseline_is_scalar_ridge() {
    let split = smooth_split(12);
    let lambdas = [0.01, 1.0];
    let source = GammaSource::default();
    let res = flat_random_feature_baseline(&split, 1, &source, &lambdas, 3).unwrap();
    assert_eq!(res.block.n_features(), 1);

    let z = res.block.apply(split.x_train().view()).unwrap();
    let n = z.nrows() as f64;
    let zz: f64 = z.column(0).iter().map(|v| v * v).sum::<f64>() / n;
    let zy: f64 = z.column(0).iter().zip(split.y_train()).map(|(a, b)| a * b).sum::<f64>() / n;
    let beta = zy / (res.lambda_star + zz);
    let zt = res.block.apply(split.x_test().view()).unwrap();
    for (p, z) in res.test_predictions.iter().zip(zt.column(0)) {
        assert!((p - beta * z).abs() < 1e-10);
    }
    assert!(flat_random_feature_baseline(&split, 0, &source, &lambdas, 3).is_err());
}

#[test]
fn baseline_recovers_planted_features() {
    let seed = 8;
    let source = GammaSource::default();
    let p = 30;
    let key = StreamKey::new(seed, BASELINE_LAYER, 0);
    let block =
        FeatureBlock::draw_with_gammas(&source.gammas_for_columns(key, p), 6, DEFAULT_BIAS_RANGE, key).unwrap();
    let w: Array1<f64> = (0..p).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let split = split_with(150, 6, 13, |r| {
        let row = r.to_owned().insert_axis(Axis(0));
        block.apply(row.view()).unwrap().dot(&w)[0]
    });
    let res = flat_random_feature_baseline(&split, p, &source, &[1e-8, 1e-4, 1.0], seed).unwrap();
    assert_eq!(res.block, block);
    assert!(res.metrics.one_minus_r2 < 0.01, "{}", res.metrics.one_minus_r2);
}
