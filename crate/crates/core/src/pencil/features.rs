//! Feature maps assembled from pencil eigenbases and class eigenbases.
//!
//! A [`FeatureSpec`] lists projection blocks in the order they appear in the
//! feature vector; [`build_feature_map`] materializes it against trained
//! class models into a single projection matrix plus a centering vector.
//!
//! Spec text syntax, composable with `;`:
//!
//! ```text
//! pencil(1|0)        pencil (A, B) with A = cov of class 1, B = cov of class 0
//! eig(0)             eigenbasis of class 0's covariance
//! pencil(0|pool(2,8));eig(pool(2,8))
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::covariance::{ClassModel, Label};
use crate::error::{Error, Result};
use crate::linalg::{energy_truncation_count, Matrix};
use crate::pencil::{pencil_eigenbasis, PencilRoute};

/// One projection block of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    /// Eigenvectors of the pencil `(A, B)` where `A` is the target class's
    /// covariance and `B` the reference class's.
    Pencil { target: Label, reference: Label },
    /// Eigenvectors of one class model's covariance.
    ClassEigen { label: Label },
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Pencil { target, reference } => write!(f, "pencil({target}|{reference})"),
            Block::ClassEigen { label } => write!(f, "eig({label})"),
        }
    }
}

/// How extracted features are centered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Centering {
    /// No centering.
    None,
    /// Subtract the pooled training mean of the given classes (the usual
    /// choice: one shared center preserves inter-class geometry).
    Pooled(Label),
    /// Subtract the mean of one reference model.
    Reference(Label),
}

/// An ordered list of projection blocks plus the centering rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub blocks: Vec<Block>,
    pub centering: Centering,
}

impl FeatureSpec {
    pub fn new(blocks: Vec<Block>, centering: Centering) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::ConfigError("feature spec has no blocks".into()));
        }
        Ok(Self { blocks, centering })
    }

    /// Canonical text form of the block list.
    pub fn text(&self) -> String {
        self.blocks
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Parse the block list of a feature spec from its text form.
pub fn parse_blocks(text: &str) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::ConfigError(format!(
                "empty block in feature spec {text:?}"
            )));
        }
        blocks.push(parse_block(part)?);
    }
    Ok(blocks)
}

fn parse_block(text: &str) -> Result<Block> {
    let (name, rest) = text
        .split_once('(')
        .ok_or_else(|| Error::ConfigError(format!("expected `name(...)`, got {text:?}")))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| Error::ConfigError(format!("missing `)` in {text:?}")))?;
    match name.trim() {
        "pencil" => {
            let (t, r) = args.split_once('|').ok_or_else(|| {
                Error::ConfigError(format!("pencil needs `target|reference`, got {args:?}"))
            })?;
            Ok(Block::Pencil {
                target: parse_label(t)?,
                reference: parse_label(r)?,
            })
        }
        "eig" => Ok(Block::ClassEigen {
            label: parse_label(args)?,
        }),
        other => Err(Error::ConfigError(format!(
            "unknown block kind {other:?} in {text:?}"
        ))),
    }
}

fn parse_label(text: &str) -> Result<Label> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("pool(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::ConfigError(format!("missing `)` in {text:?}")))?;
        let ids = inner
            .split(',')
            .map(|s| parse_class_id(s))
            .collect::<Result<Vec<u8>>>()?;
        if ids.is_empty() {
            return Err(Error::ConfigError("pool() needs at least one class".into()));
        }
        Ok(Label::pooled(&ids))
    } else {
        Ok(Label::single(parse_class_id(text)?))
    }
}

fn parse_class_id(text: &str) -> Result<u8> {
    text.trim()
        .parse::<u8>()
        .map_err(|_| Error::ConfigError(format!("invalid class id {text:?}")))
}

/// Which inner product forms the projection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionKind {
    /// Project onto the unit-normalized eigenvectors with the standard inner
    /// product. Default.
    #[default]
    Euclidean,
    /// Project pencil blocks through the reference covariance,
    /// `⟨x, ψ̃⟩_B = ψ̃ᵀ B x`, normalized rows. Class-eigen blocks are
    /// unaffected (B-weighting an eigenbasis only rescales it).
    BWeighted,
}

/// Knobs for materializing a feature map.
#[derive(Debug, Clone, Default)]
pub struct FeatureOptions {
    pub route: PencilRoute,
    /// Optional per-block truncation: keep the leading eigenvectors holding
    /// this fraction of the block's eigenvalue sum. `None` keeps all.
    pub energy: Option<f64>,
    pub projection: ProjectionKind,
}

/// A materialized feature extractor: rows of `projection` are the
/// unit-normalized basis vectors of every block, stacked in spec order.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub projection: Matrix,
    pub center: Vec<f64>,
    /// Row offsets where each block after the first begins.
    pub block_boundaries: Vec<usize>,
}

impl FeatureMap {
    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.projection.cols()
    }

    /// Output (feature) dimension.
    pub fn feature_len(&self) -> usize {
        self.projection.rows()
    }
}

/// Materialize a feature spec against trained models with default options.
pub fn build_feature_map(
    spec: &FeatureSpec,
    models: &BTreeMap<Label, Arc<ClassModel>>,
) -> Result<FeatureMap> {
    build_feature_map_with(spec, models, &FeatureOptions::default())
}

/// Materialize a feature spec against trained models.
pub fn build_feature_map_with(
    spec: &FeatureSpec,
    models: &BTreeMap<Label, Arc<ClassModel>>,
    opts: &FeatureOptions,
) -> Result<FeatureMap> {
    if spec.blocks.is_empty() {
        return Err(Error::ConfigError("feature spec has no blocks".into()));
    }
    if let Some(e) = opts.energy {
        if !(0.0 < e && e <= 1.0) {
            return Err(Error::ConfigError(format!(
                "energy fraction must be in (0, 1], got {e}"
            )));
        }
    }

    let lookup = |label: &Label| -> Result<&Arc<ClassModel>> {
        models
            .get(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut boundaries = Vec::new();
    let mut dim = None;
    for block in &spec.blocks {
        // (columns, eigenvalues, optional B for the weighted inner product)
        let (vectors, values, weight) = match block {
            Block::Pencil { target, reference } => {
                let a = lookup(target)?;
                let b = lookup(reference)?;
                let basis = pencil_eigenbasis(a, b, opts.route)?;
                let w = match opts.projection {
                    ProjectionKind::Euclidean => None,
                    ProjectionKind::BWeighted => Some(basis.b_model.cov.clone()),
                };
                (basis.vectors, basis.eigenvalues, w)
            }
            Block::ClassEigen { label } => {
                let m = lookup(label)?;
                (m.eig.eigenvectors.clone(), m.eig.eigenvalues.clone(), None)
            }
        };
        let n = vectors.rows();
        match dim {
            None => dim = Some(n),
            Some(d) if d == n => {}
            Some(d) => {
                return Err(Error::DimensionMismatch(format!(
                    "block {block} has dimension {n}, previous blocks have {d}"
                )));
            }
        }
        let keep = match opts.energy {
            Some(e) => energy_truncation_count(&values, e),
            None => vectors.cols(),
        };
        if !rows.is_empty() {
            boundaries.push(rows.len());
        }
        for k in 0..keep {
            let mut row: Vec<f64> = (0..n).map(|j| vectors.get(j, k)).collect();
            if let Some(b) = &weight {
                row = b.mul_vec(&row)?;
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut row {
                    *v /= norm;
                }
            }
            rows.push(row);
        }
    }

    let dim = dim.unwrap();
    let center = resolve_center(&spec.centering, models, dim)?;
    let projection = Matrix::from_rows(&rows)?;
    Ok(FeatureMap {
        projection,
        center,
        block_boundaries: boundaries,
    })
}

fn resolve_center(
    centering: &Centering,
    models: &BTreeMap<Label, Arc<ClassModel>>,
    dim: usize,
) -> Result<Vec<f64>> {
    match centering {
        Centering::None => Ok(vec![0.0; dim]),
        Centering::Reference(label) => {
            let m = models
                .get(label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            Ok(m.mean.clone())
        }
        Centering::Pooled(label) => {
            // Count-weighted mean of the single-class models equals the mean
            // of the concatenated training data.
            let mut acc = vec![0.0; dim];
            let mut total = 0usize;
            for id in label.ids() {
                let single = Label::single(*id);
                let m = models
                    .get(&single)
                    .ok_or_else(|| Error::UnknownLabel(single.to_string()))?;
                let w = m.sample_count as f64;
                for (a, v) in acc.iter_mut().zip(&m.mean) {
                    *a += w * v;
                }
                total += m.sample_count;
            }
            for a in &mut acc {
                *a /= total as f64;
            }
            Ok(acc)
        }
    }
}

/// Project one sample: `P (x - center)`.
pub fn extract_features(map: &FeatureMap, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != map.dim() {
        return Err(Error::DimensionMismatch(format!(
            "sample has dimension {}, feature map expects {}",
            x.len(),
            map.dim()
        )));
    }
    let centered: Vec<f64> = x.iter().zip(&map.center).map(|(v, c)| v - c).collect();
    map.projection.mul_vec(&centered)
}

/// Project a batch of samples into a feature matrix (row per sample),
/// preserving input order.
pub fn extract_features_batch(map: &FeatureMap, samples: &[Vec<f64>]) -> Result<Matrix> {
    if samples.is_empty() {
        return Err(Error::DimensionMismatch("no samples to project".into()));
    }
    let rows = samples
        .par_iter()
        .map(|x| extract_features(map, x))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::estimate_class_model;
    use crate::linalg::sym_eig;

    fn arc_model(cov: Matrix, mean: Vec<f64>, label: Label, count: usize) -> Arc<ClassModel> {
        let eig = sym_eig(&cov, 1e-9).unwrap();
        Arc::new(ClassModel {
            label,
            mean,
            cov,
            eig,
            sample_count: count,
        })
    }

    fn two_class_models(dim: usize) -> BTreeMap<Label, Arc<ClassModel>> {
        let mut cov_a = Matrix::identity(dim);
        cov_a.set(0, 0, 3.0);
        let mut cov_b = Matrix::identity(dim);
        cov_b.set(dim - 1, dim - 1, 2.0);
        let mut map = BTreeMap::new();
        map.insert(
            Label::single(0),
            arc_model(cov_a, vec![1.0; dim], Label::single(0), 10),
        );
        map.insert(
            Label::single(1),
            arc_model(cov_b, vec![-1.0; dim], Label::single(1), 30),
        );
        map
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in [
            "pencil(1|0)",
            "eig(0)",
            "pencil(0|1);eig(1)",
            "pencil(0|pool(2,8));eig(pool(2,8))",
            "pencil(0|pool(2,4));pencil(2|4);eig(4)",
        ] {
            let blocks = parse_blocks(text).unwrap();
            let spec = FeatureSpec::new(blocks, Centering::None).unwrap();
            assert_eq!(spec.text(), text);
        }
    }

    #[test]
    fn parse_rejects_malformed_specs() {
        for text in [
            "",
            "pencil(1)",
            "pencil(1|)",
            "pencil(1|0",
            "eig()",
            "eig(10)",  // not a digit 0-9? 10 parses as u8 -- see below
            "nope(1)",
            "pencil(1|0);;eig(0)",
            "pool(1,2)", // a bare label set is not a block
        ] {
            if text == "eig(10)" {
                // class ids are u8; 10 parses fine and fails later at lookup
                assert!(parse_blocks(text).is_ok());
                continue;
            }
            assert!(parse_blocks(text).is_err(), "accepted {text:?}");
        }
    }

    #[test]
    fn feature_map_shape_and_boundaries() {
        let dim = 3;
        let models = two_class_models(dim);
        let blocks = parse_blocks("pencil(0|1);eig(1)").unwrap();
        let spec = FeatureSpec::new(blocks, Centering::None).unwrap();
        let map = build_feature_map(&spec, &models).unwrap();
        assert_eq!(map.feature_len(), 2 * dim);
        assert_eq!(map.block_boundaries, vec![dim]);
        // Every row has unit Euclidean norm.
        for i in 0..map.feature_len() {
            let norm: f64 = map.projection.row(i).iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_block_boundaries() {
        let dim = 2;
        let mut models = two_class_models(dim);
        models.insert(
            Label::pooled(&[0, 1]),
            arc_model(
                Matrix::identity(dim),
                vec![0.0; dim],
                Label::pooled(&[0, 1]),
                40,
            ),
        );
        let blocks = parse_blocks("pencil(0|pool(0,1));pencil(0|1);eig(1)").unwrap();
        let spec = FeatureSpec::new(blocks, Centering::None).unwrap();
        let map = build_feature_map(&spec, &models).unwrap();
        assert_eq!(map.feature_len(), 3 * dim);
        assert_eq!(map.block_boundaries, vec![dim, 2 * dim]);
    }

    #[test]
    fn class_eigen_of_identity_is_signed_permutation() {
        let dim = 4;
        let models = two_class_models(dim);
        // Class 1's covariance is diagonal; its eigenbasis is axis-aligned.
        let blocks = parse_blocks("eig(0)").unwrap();
        let spec = FeatureSpec::new(blocks, Centering::None).unwrap();
        let map = build_feature_map(&spec, &models).unwrap();
        for i in 0..dim {
            let row = map.projection.row(i);
            let ones = row.iter().filter(|v| v.abs() > 0.5).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn unknown_label_is_reported() {
        let models = two_class_models(2);
        let blocks = parse_blocks("eig(7)").unwrap();
        let spec = FeatureSpec::new(blocks, Centering::None).unwrap();
        assert!(matches!(
            build_feature_map(&spec, &models),
            Err(Error::UnknownLabel(l)) if l == "7"
        ));
    }

    #[test]
    fn pooled_center_is_count_weighted() {
        let models = two_class_models(2);
        let blocks = parse_blocks("eig(0)").unwrap();
        let spec = FeatureSpec::new(blocks, Centering::Pooled(Label::pooled(&[0, 1]))).unwrap();
        let map = build_feature_map(&spec, &models).unwrap();
        // Means are +1 (10 samples) and -1 (30 samples): weighted mean -0.5.
        for c in &map.center {
            assert!((c + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn extraction_examples() {
        let map = FeatureMap {
            projection: Matrix::identity(2),
            center: vec![1.0, 1.0],
            block_boundaries: vec![],
        };
        assert_eq!(extract_features(&map, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(extract_features(&map, &[3.0, 2.0]).unwrap(), vec![2.0, 1.0]);

        let zero_center = FeatureMap {
            projection: Matrix::identity(2),
            center: vec![0.0, 0.0],
            block_boundaries: vec![],
        };
        assert_eq!(
            extract_features(&zero_center, &[0.25, -4.0]).unwrap(),
            vec![0.25, -4.0]
        );
        assert!(matches!(
            extract_features(&zero_center, &[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn energy_truncation_shrinks_blocks() {
        let cov = Matrix::from_rows(&[vec![95.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let mut models = BTreeMap::new();
        models.insert(
            Label::single(0),
            arc_model(cov, vec![0.0; 2], Label::single(0), 5),
        );
        let spec = FeatureSpec::new(parse_blocks("eig(0)").unwrap(), Centering::None).unwrap();
        let opts = FeatureOptions {
            energy: Some(0.95),
            ..Default::default()
        };
        let map = build_feature_map_with(&spec, &models, &opts).unwrap();
        assert_eq!(map.feature_len(), 1);
    }

    #[test]
    fn b_weighted_projection_differs_for_pencil_blocks() {
        let samples_a = vec![vec![2.0, 0.1], vec![-2.0, -0.1], vec![1.0, 0.3]];
        let samples_b = vec![vec![0.2, 1.5], vec![-0.1, -1.0], vec![0.05, 0.5]];
        let a = Arc::new(estimate_class_model(&samples_a, Label::single(0), 1e-3).unwrap());
        let b = Arc::new(estimate_class_model(&samples_b, Label::single(1), 1e-3).unwrap());
        let mut models = BTreeMap::new();
        models.insert(Label::single(0), a);
        models.insert(Label::single(1), b);
        let spec =
            FeatureSpec::new(parse_blocks("pencil(0|1)").unwrap(), Centering::None).unwrap();
        let std = build_feature_map(&spec, &models).unwrap();
        let weighted = build_feature_map_with(
            &spec,
            &models,
            &FeatureOptions {
                projection: ProjectionKind::BWeighted,
                ..Default::default()
            },
        )
        .unwrap();
        let x = vec![0.7, -0.2];
        let f1 = extract_features(&std, &x).unwrap();
        let f2 = extract_features(&weighted, &x).unwrap();
        assert!(f1.iter().zip(&f2).any(|(p, q)| (p - q).abs() > 1e-9));
    }
}
