//! Experiment orchestration: load MNIST splits, train class models, build
//! feature maps, classify, and report.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use matpencil::{
    accuracy, build_feature_map_with, estimate_class_model, extract_features_batch, knn,
    load_split, pencil, pool_classes, transform, vectorize, Block, Centering, ClassModel, Error,
    FeatureOptions, FeatureSpec, Label, LabeledSet, Matrix, PencilRoute, ProjectionKind, Result,
    Split, TransformationSet, WhiteningOperator,
};

use crate::report::ReportRow;

/// How extracted features are centered, resolved per experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenteringMode {
    None,
    /// Pooled training mean over all classes in the experiment. Default.
    #[default]
    Pooled,
    /// Mean of the first pencil block's reference model (first block's label
    /// when the spec has no pencil block).
    Reference,
}

/// Shared experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub k: usize,
    pub ridge: f64,
    /// Per-class training subsample size; 0 means use everything.
    pub subsample: usize,
    pub seed: u64,
    pub route: PencilRoute,
    pub centering: CenteringMode,
    pub energy: Option<f64>,
    pub projection: ProjectionKind,
}

impl ExperimentConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            k: 3,
            ridge: 1e-3,
            subsample: 0,
            seed: 42,
            route: PencilRoute::Cholesky,
            centering: CenteringMode::Pooled,
            energy: None,
            projection: ProjectionKind::Euclidean,
        }
    }
}

struct ExperimentData {
    train_by_class: BTreeMap<u8, Vec<Vec<f64>>>,
    test_vectors: Vec<Vec<f64>>,
    test_labels: Vec<u8>,
}

fn load_experiment_data(cfg: &ExperimentConfig, classes: &[u8]) -> Result<ExperimentData> {
    let wanted: BTreeSet<u8> = classes.iter().copied().collect();
    let train = load_split(&cfg.data_dir, Split::Train)?;
    let test = load_split(&cfg.data_dir, Split::Test)?;
    let (train_vectors, train_labels) = vectorize(&train, &wanted)?;
    let (test_vectors, test_labels) = vectorize(&test, &wanted)?;

    let mut train_by_class: BTreeMap<u8, Vec<Vec<f64>>> = BTreeMap::new();
    for (v, l) in train_vectors.into_iter().zip(train_labels) {
        train_by_class.entry(l).or_default().push(v);
    }
    for c in classes {
        if !train_by_class.contains_key(c) {
            return Err(Error::NoMatchingSamples);
        }
    }
    if cfg.subsample > 0 {
        for (class, samples) in train_by_class.iter_mut() {
            if samples.len() > cfg.subsample {
                *samples = subsample_preserving_order(samples, cfg.subsample, cfg.seed, *class);
            }
        }
    }
    Ok(ExperimentData {
        train_by_class,
        test_vectors,
        test_labels,
    })
}

/// Draw `amount` samples without replacement, keeping original order. The
/// stream is keyed by both the experiment seed and the class id.
fn subsample_preserving_order(
    samples: &[Vec<f64>],
    amount: usize,
    seed: u64,
    class: u8,
) -> Vec<Vec<f64>> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(class as u64 + 1)));
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, samples.len(), amount).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| samples[i].clone()).collect()
}

/// Every label a spec needs models for.
fn labels_in_blocks(blocks: &[Block]) -> BTreeSet<Label> {
    let mut labels = BTreeSet::new();
    for block in blocks {
        match block {
            Block::Pencil { target, reference } => {
                labels.insert(target.clone());
                labels.insert(reference.clone());
            }
            Block::ClassEigen { label } => {
                labels.insert(label.clone());
            }
        }
    }
    labels
}

fn build_models(
    data: &ExperimentData,
    needed: &BTreeSet<Label>,
    ridge: f64,
) -> Result<BTreeMap<Label, Arc<ClassModel>>> {
    let mut models = BTreeMap::new();
    // Single-class models are always built: blocks reference them and the
    // pooled center needs every class mean.
    for (id, samples) in &data.train_by_class {
        let label = Label::single(*id);
        models.insert(
            label.clone(),
            Arc::new(estimate_class_model(samples, label, ridge)?),
        );
    }
    for label in needed {
        if label.is_pooled() {
            let groups: Vec<(Label, &[Vec<f64>])> = label
                .ids()
                .iter()
                .map(|id| {
                    data.train_by_class
                        .get(id)
                        .map(|s| (Label::single(*id), s.as_slice()))
                        .ok_or_else(|| Error::UnknownLabel(id.to_string()))
                })
                .collect::<Result<_>>()?;
            models.insert(label.clone(), Arc::new(pool_classes(&groups, ridge)?));
        }
    }
    Ok(models)
}

fn resolve_centering(
    mode: CenteringMode,
    classes: &[u8],
    blocks: &[Block],
) -> Result<Centering> {
    match mode {
        CenteringMode::None => Ok(Centering::None),
        CenteringMode::Pooled => Ok(Centering::Pooled(Label::pooled(classes))),
        CenteringMode::Reference => {
            let label = blocks
                .iter()
                .find_map(|b| match b {
                    Block::Pencil { reference, .. } => Some(reference.clone()),
                    _ => None,
                })
                .or_else(|| match &blocks[0] {
                    Block::ClassEigen { label } => Some(label.clone()),
                    Block::Pencil { reference, .. } => Some(reference.clone()),
                });
            label
                .map(Centering::Reference)
                .ok_or_else(|| Error::ConfigError("empty feature spec".into()))
        }
    }
}

fn validate_blocks(classes: &[u8], specs: &[Vec<Block>]) -> Result<()> {
    let class_set: BTreeSet<u8> = classes.iter().copied().collect();
    for blocks in specs {
        if blocks.is_empty() {
            return Err(Error::ConfigError("feature spec has no blocks".into()));
        }
        for label in labels_in_blocks(blocks) {
            for id in label.ids() {
                if !class_set.contains(id) {
                    return Err(Error::ConfigError(format!(
                        "feature spec references class {id} outside the experiment set {classes:?}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn format_classes(classes: &[u8]) -> String {
    classes
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn run_experiment(
    cfg: &ExperimentConfig,
    classes: &[u8],
    specs: &[Vec<Block>],
) -> Result<Vec<ReportRow>> {
    validate_blocks(classes, specs)?;
    let data = load_experiment_data(cfg, classes)?;

    let mut needed = BTreeSet::new();
    for blocks in specs {
        needed.extend(labels_in_blocks(blocks));
    }
    let models = build_models(&data, &needed, cfg.ridge)?;

    let train_labels: Vec<u8> = data
        .train_by_class
        .iter()
        .flat_map(|(id, samples)| std::iter::repeat(*id).take(samples.len()))
        .collect();
    let train_vectors: Vec<Vec<f64>> = data
        .train_by_class
        .values()
        .flat_map(|s| s.iter().cloned())
        .collect();

    let opts = FeatureOptions {
        route: cfg.route,
        energy: cfg.energy,
        projection: cfg.projection,
    };

    let mut rows = Vec::with_capacity(specs.len());
    for blocks in specs {
        let start = Instant::now();
        let centering = resolve_centering(cfg.centering, classes, blocks)?;
        let spec = FeatureSpec::new(blocks.clone(), centering)?;
        let map = build_feature_map_with(&spec, &models, &opts)?;

        let train_features = extract_features_batch(&map, &train_vectors)?;
        let test_features = extract_features_batch(&map, &data.test_vectors)?;
        let train_set = LabeledSet::new(train_features, train_labels.clone())?;
        let predicted = knn::knn_classify_batch(&train_set, &test_features, cfg.k)?;
        let acc = accuracy(&predicted, &data.test_labels)?;

        rows.push(ReportRow {
            classes: format_classes(classes),
            feature_spec: spec.text(),
            k: cfg.k,
            ridge: cfg.ridge,
            n_train: train_vectors.len(),
            n_test: data.test_vectors.len(),
            accuracy_pct: acc,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

/// The four feature sets evaluated for a binary pair `(c1, c2)`: pencil plus
/// reference eigenbasis in both orientations, then the bare pencils.
pub fn default_binary_specs(c1: u8, c2: u8) -> Vec<Vec<Block>> {
    let (c1, c2) = (Label::single(c1), Label::single(c2));
    vec![
        vec![
            Block::Pencil {
                target: c2.clone(),
                reference: c1.clone(),
            },
            Block::ClassEigen { label: c1.clone() },
        ],
        vec![
            Block::Pencil {
                target: c1.clone(),
                reference: c2.clone(),
            },
            Block::ClassEigen { label: c2.clone() },
        ],
        vec![Block::Pencil {
            target: c2.clone(),
            reference: c1.clone(),
        }],
        vec![Block::Pencil {
            target: c1,
            reference: c2,
        }],
    ]
}

/// The three feature sets evaluated for a class triple: the bare pencil
/// against the pooled reference, then augmented with either eigenbasis.
pub fn default_multiclass_specs(c1: u8, c2: u8, c3: u8) -> Vec<Vec<Block>> {
    let target = Label::single(c1);
    let pooled = Label::pooled(&[c2, c3]);
    let pencil = Block::Pencil {
        target: target.clone(),
        reference: pooled.clone(),
    };
    vec![
        vec![pencil.clone()],
        vec![pencil.clone(), Block::ClassEigen { label: target }],
        vec![pencil, Block::ClassEigen { label: pooled }],
    ]
}

/// Binary classification of one digit pair: one report row per feature spec.
pub fn run_binary(
    cfg: &ExperimentConfig,
    c1: u8,
    c2: u8,
    specs: &[Vec<Block>],
) -> Result<Vec<ReportRow>> {
    if c1 == c2 {
        return Err(Error::ConfigError(format!(
            "binary classification needs two distinct classes, got {c1} and {c2}"
        )));
    }
    run_experiment(cfg, &[c1, c2], specs)
}

/// Multiclass classification of a class triple.
pub fn run_multiclass(
    cfg: &ExperimentConfig,
    classes: [u8; 3],
    specs: &[Vec<Block>],
) -> Result<Vec<ReportRow>> {
    let distinct: BTreeSet<u8> = classes.iter().copied().collect();
    if distinct.len() != classes.len() {
        return Err(Error::ConfigError(format!(
            "multiclass classification needs distinct classes, got {classes:?}"
        )));
    }
    run_experiment(cfg, &classes, specs)
}

/// Settings for pattern transformation runs.
#[derive(Debug, Clone)]
pub struct TransformOptions {
    pub from: u8,
    pub to: u8,
    /// Test samples of the source class to transform and render.
    pub count: usize,
    /// Patterns to generate from white noise.
    pub noise: usize,
    pub out_dir: PathBuf,
    /// Subtract/restore class means around the whiten-color pipeline.
    pub use_means: bool,
}

/// Outcome of a transformation run.
#[derive(Debug, Clone)]
pub struct TransformSummary {
    /// Relative Frobenius distance between the covariance of the transformed
    /// source population and the target model covariance.
    pub transport_rel_frobenius: f64,
    pub from_condition: f64,
    pub to_condition: f64,
    pub files: Vec<PathBuf>,
}

/// Transform test patterns of one class into another, render PGM triptychs,
/// and measure how well the transformation transports the covariance.
pub fn run_transform(cfg: &ExperimentConfig, opts: &TransformOptions) -> Result<TransformSummary> {
    let classes: Vec<u8> = if opts.from == opts.to {
        vec![opts.from]
    } else {
        vec![opts.from, opts.to]
    };
    let wanted: BTreeSet<u8> = classes.iter().copied().collect();
    let train = load_split(&cfg.data_dir, Split::Train)?;
    let test = load_split(&cfg.data_dir, Split::Test)?;
    let (rows, cols) = (train.rows, train.cols);
    let (train_vectors, train_labels) = vectorize(&train, &wanted)?;
    let (test_vectors, test_labels) = vectorize(&test, &wanted)?;

    let collect = |vectors: &[Vec<f64>], labels: &[u8], class: u8| -> Vec<Vec<f64>> {
        vectors
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == class)
            .map(|(v, _)| v.clone())
            .collect()
    };
    let from_train = collect(&train_vectors, &train_labels, opts.from);
    let to_train = collect(&train_vectors, &train_labels, opts.to);
    let from_test = collect(&test_vectors, &test_labels, opts.from);
    let to_test = collect(&test_vectors, &test_labels, opts.to);

    let from_model = estimate_class_model(&from_train, Label::single(opts.from), cfg.ridge)?;
    let to_model = if opts.from == opts.to {
        from_model.clone()
    } else {
        estimate_class_model(&to_train, Label::single(opts.to), cfg.ridge)?
    };
    let mut op_from = pencil::whitening_operator(&from_model)?;
    let mut op_to = pencil::whitening_operator(&to_model)?;
    if !opts.use_means {
        op_from.mean = vec![0.0; op_from.dim()];
        op_to.mean = vec![0.0; op_to.dim()];
    }

    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let mut files = Vec::new();

    let exemplar = to_test.first().or(to_train.first());
    for (i, source) in from_test.iter().take(opts.count).enumerate() {
        let output = transform::transform_pattern(source, &op_from, &op_to)?;
        let out_path = opts
            .out_dir
            .join(format!("transform_{}to{}_{i:03}.pgm", opts.from, opts.to));
        transform::write_pgm(&output, rows, cols, &out_path)?;
        files.push(out_path);

        if let Some(ex) = exemplar {
            let trip = triptych(source, ex, &output);
            let trip_path = opts
                .out_dir
                .join(format!("triptych_{}to{}_{i:03}.pgm", opts.from, opts.to));
            transform::write_pgm(&trip, rows, 3 * cols + 2, &trip_path)?;
            files.push(trip_path);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in 0..opts.noise {
        let p: Vec<f64> = (0..op_to.dim())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let pattern = transform::generate_from_noise(&p, &op_to)?;
        let path = opts
            .out_dir
            .join(format!("noise_{}_{i:03}.pgm", opts.to));
        transform::write_pgm(&pattern, rows, cols, &path)?;
        files.push(path);
    }

    // Covariance transport over the whole source training population.
    let moved: Vec<Vec<f64>> = from_train
        .iter()
        .map(|x| transform::transform_pattern(x, &op_from, &op_to))
        .collect::<Result<_>>()?;
    let emp = empirical_covariance(&moved);
    let mut diff_sq = 0.0;
    for i in 0..emp.rows() {
        for j in 0..emp.cols() {
            let d = emp.get(i, j) - to_model.cov.get(i, j);
            diff_sq += d * d;
        }
    }
    let transport = diff_sq.sqrt() / to_model.cov.frobenius_norm();

    Ok(TransformSummary {
        transport_rel_frobenius: transport,
        from_condition: from_model.condition_number(),
        to_condition: to_model.condition_number(),
        files,
    })
}

/// Panels side by side with one white separator column:
/// source | exemplar | output, each min-max normalized on its own.
fn triptych(source: &[f64], exemplar: &[f64], output: &[f64]) -> Vec<f64> {
    let cols = (source.len() as f64).sqrt() as usize;
    let rows = source.len() / cols;
    let norm = |v: &[f64]| -> Vec<f64> {
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        if range <= 0.0 {
            vec![0.0; v.len()]
        } else {
            v.iter().map(|x| (x - min) / range).collect()
        }
    };
    let panels = [norm(source), norm(exemplar), norm(output)];
    let out_cols = 3 * cols + 2;
    let mut out = vec![1.0; rows * out_cols];
    for r in 0..rows {
        for (p, panel) in panels.iter().enumerate() {
            let offset = r * out_cols + p * (cols + 1);
            out[offset..offset + cols].copy_from_slice(&panel[r * cols..(r + 1) * cols]);
        }
    }
    out
}

fn empirical_covariance(samples: &[Vec<f64>]) -> Matrix {
    let n = samples[0].len();
    let count = samples.len() as f64;
    let mut mean = vec![0.0; n];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut data = vec![0.0; n * n];
    let mut centered = vec![0.0; n];
    for s in samples {
        for ((c, v), m) in centered.iter_mut().zip(s).zip(&mean) {
            *c = v - m;
        }
        for i in 0..n {
            let ci = centered[i];
            let row = &mut data[i * n..(i + 1) * n];
            for (r, cj) in row.iter_mut().zip(&centered) {
                *r += ci * cj;
            }
        }
    }
    for v in &mut data {
        *v /= count;
    }
    Matrix::new(n, n, data).expect("covariance entries are finite")
}

/// Settings for invariant-basis analysis.
#[derive(Debug, Clone)]
pub struct InvariantOptions {
    pub kind: InvariantKind,
    /// Signal length for 1-D shifts.
    pub length: usize,
    /// Grid geometry for 2-D translations.
    pub rows: usize,
    pub cols: usize,
    /// Energy fraction used when the correlation matrix is ill-conditioned.
    pub energy: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    Shift1d,
    Translate2d,
}

/// Outcome of an invariant-basis run.
#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub signal_len: usize,
    pub transform_count: usize,
    /// Ratio of the largest to the smallest correlation eigenvalue.
    pub condition_ratio: f64,
    /// Whether the energy truncation was applied (condition ratio > 100).
    pub truncated: bool,
    pub retained: usize,
    /// Max |G_kl| over max G_kk, raw coefficient Gram.
    pub raw_offdiag_ratio: f64,
    /// Max |G_kl| / sqrt(G_kk G_ll) over k != l.
    pub normalized_offdiag_ratio: f64,
}

/// Build a random signal, accumulate its transformation correlation matrix,
/// and measure how diagonal the coefficient Gram is on the eigenbasis.
pub fn run_invariant(opts: &InvariantOptions) -> Result<InvariantReport> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (signal, ts) = match opts.kind {
        InvariantKind::Shift1d => {
            let x: Vec<f64> = (0..opts.length).map(|_| rng.random_range(-1.0..1.0)).collect();
            (x, TransformationSet::all_shifts_1d(opts.length))
        }
        InvariantKind::Translate2d => {
            let x: Vec<f64> = (0..opts.rows * opts.cols)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            (x, TransformationSet::all_translations_2d(opts.rows, opts.cols))
        }
    };

    let r = matpencil::transformation_correlation(&signal, &ts)?;
    let full = matpencil::invariant_eigenbasis(&r, 1.0)?;
    let max_eig = full.eigenvalues[0];
    let min_eig = *full.eigenvalues.last().unwrap();
    let condition_ratio = if min_eig > 0.0 {
        max_eig / min_eig
    } else {
        f64::INFINITY
    };

    let truncated = condition_ratio > 100.0;
    let basis = if truncated {
        matpencil::invariant_eigenbasis(&r, opts.energy)?
    } else {
        full
    };
    let g = matpencil::coefficient_gram(&signal, &ts, &basis.eigenvectors)?;

    let k = g.rows();
    let mut max_diag = 0.0f64;
    for i in 0..k {
        max_diag = max_diag.max(g.get(i, i));
    }
    let mut raw = 0.0f64;
    let mut normalized = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let off = g.get(i, j).abs();
                raw = raw.max(off);
                normalized = normalized.max(off / (g.get(i, i) * g.get(j, j)).sqrt());
            }
        }
    }

    Ok(InvariantReport {
        signal_len: signal.len(),
        transform_count: ts.len(),
        condition_ratio,
        truncated,
        retained: basis.len(),
        raw_offdiag_ratio: if max_diag > 0.0 { raw / max_diag } else { 0.0 },
        normalized_offdiag_ratio: normalized,
    })
}

/// One whitening operator per class, as used by [`run_transform`]. Exposed
/// for tests that need the operators without the file output.
pub fn class_operator(
    cfg: &ExperimentConfig,
    class: u8,
) -> Result<(WhiteningOperator, ClassModel)> {
    let wanted: BTreeSet<u8> = [class].into_iter().collect();
    let train = load_split(&cfg.data_dir, Split::Train)?;
    let (vectors, _) = vectorize(&train, &wanted)?;
    let model = estimate_class_model(&vectors, Label::single(class), cfg.ridge)?;
    let op = pencil::whitening_operator(&model)?;
    Ok((op, model))
}
