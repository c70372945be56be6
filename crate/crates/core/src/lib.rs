//! Quantifying the differential information between classes with symmetric-
//! definite matrix pencils.
//!
//! The pipeline: estimate per-class covariance models ([`covariance`]), build
//! the whitening operator of a reference class and solve the pencil
//! `A ψ̃ = μ B ψ̃` ([`pencil`]), stack pencil and class eigenbases into feature
//! maps, and classify projections with k-NN ([`knn`]). Side quests: pattern
//! transformation between classes ([`transform`]) and transformation-
//! independent bases for deterministic signals ([`invariant`]).
//!
//! All arithmetic is `f64`; every operation is a pure function of immutable
//! inputs, so values can be shared freely across threads. Batch operations
//! parallelize internally with deterministic output.

pub mod covariance;
pub mod error;
pub mod invariant;
pub mod knn;
pub mod linalg;
pub mod mnist;
pub mod pencil;
pub mod transform;

pub use covariance::{
    estimate_class_model, estimate_class_model_with, pool_classes, ClassModel, Label,
    Normalization,
};
pub use error::{Error, Result};
pub use invariant::{
    coefficient_gram, coefficient_table, invariant_eigenbasis, transformation_correlation,
    CoefficientTable, TransformationSet,
};
pub use knn::{accuracy, knn_classify, knn_classify_batch, LabeledSet};
pub use linalg::{
    cholesky, invert_spd, solve_triangular, sym_eig, sym_eig_with, CholeskyFactor,
    EigenDecomposition, Matrix, TriangularSide,
};
pub use mnist::{load_image_set, load_split, read_idx_images, read_idx_labels, vectorize, ImageSet, Split};
pub use pencil::{
    build_feature_map, build_feature_map_with, color, color_one, extract_features,
    extract_features_batch, parse_blocks, pencil_eigenbasis, whiten, whiten_one,
    whitening_operator, Block, Centering, FeatureMap, FeatureOptions, FeatureSpec, PencilBasis,
    PencilRoute, ProjectionKind, WhiteningOperator,
};
pub use transform::{generate_from_noise, transform_pattern, write_pgm};
