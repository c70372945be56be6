//! MNIST ingestion: the IDX binary container, label filtering, and
//! vectorization of images into unit-scaled feature vectors.
//!
//! IDX layout is big-endian throughout: a 4-byte magic, one 4-byte count per
//! dimension, then the raw payload bytes. Files may optionally be
//! gzip-compressed; compression is sniffed from the first two bytes.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Conventional file names of the standard train/test split.
pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Images and their geometry, before pairing with labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    /// One `rows * cols` byte grid per image, row-major.
    pub images: Vec<Vec<u8>>,
}

/// Images paired with digit labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::TruncatedFile {
            expected: end,
            found: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Parse an IDX image payload from memory.
pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::BadMagic {
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let pixel_count = rows * cols;
    let expected = 16 + count * pixel_count;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    let images = (0..count)
        .map(|i| {
            let start = 16 + i * pixel_count;
            bytes[start..start + pixel_count].to_vec()
        })
        .collect();
    Ok(RawImages { rows, cols, images })
}

/// Parse an IDX label payload from memory. Labels must be digits 0-9.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::BadMagic {
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    let labels = &bytes[8..8 + count];
    if let Some(bad) = labels.iter().find(|l| **l > 9) {
        return Err(Error::LabelOutOfRange { value: *bad });
    }
    Ok(labels.to_vec())
}

/// Read an IDX image file (optionally gzip-compressed).
pub fn read_idx_images(path: &Path) -> Result<RawImages> {
    parse_idx_images(&read_maybe_gzip(path)?)
}

/// Read an IDX label file (optionally gzip-compressed).
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&read_maybe_gzip(path)?)
}

/// Serialize images to IDX bytes.
pub fn idx_image_bytes(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

/// Serialize labels to IDX bytes.
pub fn idx_label_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_idx_images(path: &Path, rows: usize, cols: usize, images: &[Vec<u8>]) -> Result<()> {
    std::fs::write(path, idx_image_bytes(rows, cols, images)).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    std::fs::write(path, idx_label_bytes(labels)).map_err(|e| Error::io(path, e))
}

/// Load and pair an image file with its label file.
pub fn load_image_set(images_path: &Path, labels_path: &Path) -> Result<ImageSet> {
    let raw = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if raw.images.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: raw.images.len(),
            right: labels.len(),
        });
    }
    Ok(ImageSet {
        rows: raw.rows,
        cols: raw.cols,
        images: raw.images,
        labels,
    })
}

/// The train or test half of the standard split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

fn locate(dir: &Path, name: &str) -> Result<PathBuf> {
    let plain = dir.join(name);
    if plain.is_file() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::io(
        plain,
        std::io::Error::new(std::io::ErrorKind::NotFound, "file not found (also tried .gz)"),
    ))
}

/// Load one split from a directory holding the conventionally named files,
/// plain or gzipped.
pub fn load_split(dir: &Path, split: Split) -> Result<ImageSet> {
    let (images, labels) = match split {
        Split::Train => (TRAIN_IMAGES, TRAIN_LABELS),
        Split::Test => (TEST_IMAGES, TEST_LABELS),
    };
    load_image_set(&locate(dir, images)?, &locate(dir, labels)?)
}

/// Flatten images with labels in `wanted` into row-major vectors scaled to
/// `[0, 1]`, preserving order. Returns the vectors and their labels.
pub fn vectorize(set: &ImageSet, wanted: &BTreeSet<u8>) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (img, label) in set.images.iter().zip(&set.labels) {
        if wanted.contains(label) {
            vectors.push(img.iter().map(|p| *p as f64 / 255.0).collect());
            labels.push(*label);
        }
    }
    if vectors.is_empty() {
        return Err(Error::NoMatchingSamples);
    }
    Ok((vectors, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture_set() -> ImageSet {
        ImageSet {
            rows: 2,
            cols: 2,
            images: vec![vec![0, 255, 128, 1], vec![10, 20, 30, 40]],
            labels: vec![7, 0],
        }
    }

    #[test]
    fn parse_image_fixture() {
        let bytes = idx_image_bytes(2, 2, &[vec![0, 255, 128, 1]]);
        let raw = parse_idx_images(&bytes).unwrap();
        assert_eq!(raw.rows, 2);
        assert_eq!(raw.cols, 2);
        assert_eq!(raw.images, vec![vec![0, 255, 128, 1]]);
    }

    #[test]
    fn wrong_magic_in_image_position() {
        let bytes = idx_label_bytes(&[1, 2, 3]);
        assert!(matches!(
            parse_idx_images(&bytes),
            Err(Error::BadMagic {
                expected: IMAGE_MAGIC,
                found: LABEL_MAGIC
            })
        ));
    }

    #[test]
    fn truncated_image_payload() {
        // Header claims two images but only one is present.
        let mut bytes = idx_image_bytes(2, 2, &[vec![0, 255, 128, 1]]);
        bytes[7] = 2;
        assert!(matches!(
            parse_idx_images(&bytes),
            Err(Error::TruncatedFile {
                expected: 24,
                found: 20
            })
        ));
    }

    #[test]
    fn parse_label_fixture() {
        let bytes = idx_label_bytes(&[0, 7, 9]);
        assert_eq!(parse_idx_labels(&bytes).unwrap(), vec![0, 7, 9]);
    }

    #[test]
    fn label_out_of_range() {
        let bytes = idx_label_bytes(&[1, 12]);
        assert!(matches!(
            parse_idx_labels(&bytes),
            Err(Error::LabelOutOfRange { value: 12 })
        ));
    }

    #[test]
    fn empty_file_is_truncated() {
        assert!(matches!(
            parse_idx_labels(&[]),
            Err(Error::TruncatedFile { .. })
        ));
        assert!(matches!(
            parse_idx_images(&[]),
            Err(Error::TruncatedFile { .. })
        ));
    }

    #[test]
    fn idx_round_trip_is_bit_exact() {
        let set = fixture_set();
        let img_bytes = idx_image_bytes(set.rows, set.cols, &set.images);
        let lbl_bytes = idx_label_bytes(&set.labels);
        let raw = parse_idx_images(&img_bytes).unwrap();
        let labels = parse_idx_labels(&lbl_bytes).unwrap();
        assert_eq!(raw.images, set.images);
        assert_eq!(labels, set.labels);
        // And the serialized form is reproduced exactly.
        assert_eq!(idx_image_bytes(raw.rows, raw.cols, &raw.images), img_bytes);
        assert_eq!(idx_label_bytes(&labels), lbl_bytes);
    }

    #[test]
    fn file_round_trip_with_gzip() {
        let dir = tempfile::tempdir().unwrap();
        let set = fixture_set();

        let plain = dir.path().join("images-idx3-ubyte");
        write_idx_images(&plain, set.rows, set.cols, &set.images).unwrap();
        assert_eq!(read_idx_images(&plain).unwrap().images, set.images);

        let gz_path = dir.path().join("images-idx3-ubyte.gz");
        let mut enc = flate2::write::GzEncoder::new(
            std::fs::File::create(&gz_path).unwrap(),
            flate2::Compression::default(),
        );
        enc.write_all(&idx_image_bytes(set.rows, set.cols, &set.images))
            .unwrap();
        enc.finish().unwrap();
        assert_eq!(read_idx_images(&gz_path).unwrap().images, set.images);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_idx_images(Path::new("/nonexistent/dir/images")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/images"));
    }

    #[test]
    fn vectorize_scales_and_filters() {
        let set = fixture_set();
        let wanted: BTreeSet<u8> = [7].into_iter().collect();
        let (vecs, labels) = vectorize(&set, &wanted).unwrap();
        assert_eq!(labels, vec![7]);
        assert_eq!(vecs.len(), 1);
        let expect = [0.0, 1.0, 128.0 / 255.0, 1.0 / 255.0];
        for (v, e) in vecs[0].iter().zip(&expect) {
            assert!((v - e).abs() < 1e-15);
        }

        let all: BTreeSet<u8> = [0, 7].into_iter().collect();
        let (vecs, labels) = vectorize(&set, &all).unwrap();
        assert_eq!(vecs.len(), 2);
        assert_eq!(labels, vec![7, 0]);

        let none: BTreeSet<u8> = [5].into_iter().collect();
        assert!(matches!(
            vectorize(&set, &none),
            Err(Error::NoMatchingSamples)
        ));
    }

    #[test]
    fn vectorize_zero_image() {
        let set = ImageSet {
            rows: 2,
            cols: 2,
            images: vec![vec![0, 0, 0, 0]],
            labels: vec![3],
        };
        let wanted: BTreeSet<u8> = [3].into_iter().collect();
        let (vecs, _) = vectorize(&set, &wanted).unwrap();
        assert!(vecs[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mismatched_image_label_counts() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = dir.path().join("i");
        let lbls = dir.path().join("l");
        write_idx_images(&imgs, 1, 1, &[vec![5], vec![6]]).unwrap();
        write_idx_labels(&lbls, &[1]).unwrap();
        assert!(matches!(
            load_image_set(&imgs, &lbls),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }
}
