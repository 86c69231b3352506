//! Labelled feature matrices, synthetic blob generation and CSV I/O.
//!
//! CSV layout: one sample per row, the feature columns followed by an
//! integer class label in the last column. A header row is optional and is
//! detected by its first row failing to parse as numbers.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{OptimError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    /// `features` is row-major with `labels.len()` rows of `dim` columns.
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(OptimError::Dataset(
                "feature dimension must be positive".into(),
            ));
        }
        if features.len() != labels.len() * dim {
            return Err(OptimError::Dataset(format!(
                "{} feature values for {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if classes < 2 {
            return Err(OptimError::Dataset(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(OptimError::Dataset(format!(
                "label {label} at row {row} outside [0, {classes})"
            )));
        }
        if let Some(i) = features.iter().position(|x| !x.is_finite()) {
            return Err(OptimError::Dataset(format!(
                "non-finite feature at row {}",
                i / dim
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.classes];
        out[self.labels[i]] = 1.0;
        out
    }

    /// Gathers the given rows into a new dataset with the same class count.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            dim: self.dim,
            classes: self.classes,
        }
    }

    /// Shuffles rows with `seed` and holds out `round(test_fraction * len)` of
    /// them as a test set. Returns `(train, test)`.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(OptimError::Dataset(format!(
                "test fraction must lie in [0, 1), got {test_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = (test_fraction * self.len() as f64).round() as usize;
        let (test, train) = order.split_at(n_test);
        Ok((self.subset(train), self.subset(test)))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut dim: Option<usize> = None;
        for (idx, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| OptimError::Dataset(e.to_string()))?;
            if record.len() < 2 {
                return Err(OptimError::Dataset(format!(
                    "row {} has {} columns, need features and a label",
                    idx + 1,
                    record.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> = record
                .iter()
                .take(record.len() - 1)
                .map(str::parse::<f64>)
                .collect();
            let label = record[record.len() - 1].parse::<usize>();
            let (row, label) = match (parsed, label) {
                (Ok(row), Ok(label)) => (row, label),
                _ if idx == 0 => continue,
                _ => {
                    return Err(OptimError::Dataset(format!(
                        "row {} is not numeric",
                        idx + 1
                    )));
                }
            };
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(OptimError::Dataset(format!(
                        "row {} has {} features, expected {d}",
                        idx + 1,
                        row.len()
                    )));
                }
                _ => {}
            }
            features.extend(row);
            labels.push(label);
        }
        let dim = dim.ok_or_else(|| OptimError::Dataset("no data rows".into()))?;
        let classes = labels.iter().max().map_or(0, |&m| m + 1).max(2);
        Dataset::new(features, labels, dim, classes)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            OptimError::Dataset(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::read_csv(file)
    }

    /// Writes the dataset with a `x0,...,x{D-1},label` header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let to_err = |e: csv::Error| OptimError::Dataset(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(to_err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|x| format!("{x:?}")).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush().map_err(|e| OptimError::Dataset(e.to_string()))
    }
}

/// Gaussian blobs centred on the unit circle, one per class, `per_class`
/// points each, grouped by class. Each coordinate gets independent
/// `spread * N(0, 1)` noise.
pub fn make_synthetic(classes: usize, per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 {
        return Err(OptimError::Dataset(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(OptimError::Dataset(format!(
            "spread must be non-negative, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(classes * per_class * 2);
    let mut labels = Vec::with_capacity(classes * per_class);
    for class in 0..classes {
        let angle = TAU * class as f64 / classes as f64;
        let (cy, cx) = angle.sin_cos();
        for _ in 0..per_class {
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            features.push(cx + spread * nx);
            features.push(cy + spread * ny);
            labels.push(class);
        }
    }
    Dataset::new(features, labels, 2, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_shape_and_balance() {
        let d = make_synthetic(2, 50, 0.1, 7).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels().iter().filter(|&&l| l == 0).count(), 50);
        assert_eq!(d.labels().iter().filter(|&&l| l == 1).count(), 50);
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(
            make_synthetic(4, 30, 0.2, 11).unwrap(),
            make_synthetic(4, 30, 0.2, 11).unwrap()
        );
        assert_ne!(
            make_synthetic(4, 30, 0.2, 11).unwrap(),
            make_synthetic(4, 30, 0.2, 12).unwrap()
        );
    }

    #[test]
    fn zero_spread_hits_centres() {
        let d = make_synthetic(4, 3, 0.0, 1).unwrap();
        for i in 0..d.len() {
            let angle = TAU * d.labels()[i] as f64 / 4.0;
            assert_eq!(d.row(i), &[angle.cos(), angle.sin()]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_synthetic(1, 10, 0.1, 0).is_err());
        assert!(Dataset::new(vec![0.0; 4], vec![0, 2], 2, 2).is_err());
        assert!(Dataset::new(vec![0.0; 3], vec![0, 1], 2, 2).is_err());
    }

    #[test]
    fn csv_round_trip_with_and_without_header() {
        let d = make_synthetic(3, 5, 0.3, 9).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);

        let raw = "0.5,1.0,1\n-0.5,2.0,0\n";
        let d = Dataset::read_csv(raw.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(1), &[-0.5, 2.0]);
        assert_eq!(d.labels(), &[1, 0]);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(Dataset::read_csv("1,2,0\n1,0\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("a,b,label\n1,2,x\n".as_bytes()).is_err());
    }

    #[test]
    fn split_partitions_rows() {
        let d = make_synthetic(4, 25, 0.1, 3).unwrap();
        let (train, test) = d.split(0.2, 5).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        assert_eq!(d.split(0.2, 5).unwrap(), (train, test));
    }
}
