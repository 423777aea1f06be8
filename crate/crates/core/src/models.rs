//! Probabilistic classifiers and data ingestion.
//!
//! The harnesses only need a map from features to a [`ProbVector`]. Two small
//! reference learners provide one without external dependencies:
//! a Laplace-smoothed k-nearest-neighbour vote and a multinomial logistic
//! regression trained by full-batch gradient descent. Externally computed
//! probabilities (e.g. from a pretrained network) enter through
//! [`load_proba_matrix`].

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scores::ProbVector;

/// Row-sum tolerance for ingested probability matrices.
pub const PROBA_ROW_TOLERANCE: f64 = 1e-6;

/// Dense feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("feature dimension must be positive".into()));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature values for {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::ClassOutOfRange {
                index: bad,
                classes: class_count,
            });
        }
        Ok(Dataset {
            features,
            dim,
            labels,
            class_count,
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

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            dim: self.dim,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Header `f0,...,f{d-1},label`, one row per instance.
    pub fn to_csv(&self) -> String {
        let mut out = (0..self.dim).map(|j| format!("f{j}")).collect::<Vec<_>>().join(",");
        out.push_str(",label\n");
        for (row, y) in self.rows().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{y}\n"));
        }
        out
    }

    /// Reads the format written by [`to_csv`](Self::to_csv). The class count
    /// is `max label + 1` unless `class_count` is given.
    pub fn from_csv_path(path: &Path, class_count: Option<usize>) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let columns = headers.len();
        if columns < 2 || &headers[columns - 1] != "label" {
            return Err(Error::parse(path, "expected feature columns followed by a `label` column"));
        }
        for (j, h) in headers.iter().take(columns - 1).enumerate() {
            if h != format!("f{j}") {
                return Err(Error::parse(path, format!("column {j} should be named f{j}, found `{h}`")));
            }
        }
        let dim = columns - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            for j in 0..dim {
                features.push(parse_f64(path, line + 2, &record[j])?);
            }
            labels.push(record[dim].parse::<usize>().map_err(|_| {
                Error::parse(path, format!("line {}: label `{}` is not a class index", line + 2, &record[dim]))
            })?);
        }
        if labels.is_empty() {
            return Err(Error::parse(path, "no data rows"));
        }
        let k = class_count.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        Dataset::new(features, dim, labels, k)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(path, format!("line {line}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, format!("line {line}: non-finite value")));
    }
    Ok(v)
}

/// Settings for [`gaussian_blobs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub classes: usize,
    pub dim: usize,
    /// Standard deviation of the class centres around the origin.
    pub center_scale: f64,
    /// Within-class standard deviation.
    pub noise: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            classes: 10,
            dim: 10,
            center_scale: 1.0,
            noise: 1.0,
        }
    }
}

/// Isotropic Gaussian classes with seeded random centres.
#[derive(Debug, Clone)]
pub struct BlobGenerator {
    spec: BlobSpec,
    centers: Vec<f64>,
}

impl BlobGenerator {
    pub fn new(spec: BlobSpec, seed: u64) -> Result<Self> {
        if spec.classes < 2 || spec.dim == 0 || !(spec.noise > 0.0) || !(spec.center_scale >= 0.0) {
            return Err(Error::Config(format!("invalid blob spec {spec:?}")));
        }
        let mut draws = rng::stream(seed, "blob-centers", 0);
        let centers = (0..spec.classes * spec.dim)
            .map(|_| spec.center_scale * draws.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(BlobGenerator { spec, centers })
    }

    pub fn spec(&self) -> &BlobSpec {
        &self.spec
    }

    pub fn center(&self, class: usize) -> &[f64] {
        &self.centers[class * self.spec.dim..(class + 1) * self.spec.dim]
    }

    /// `n` points with uniformly drawn labels.
    pub fn sample(&self, n: usize, draws: &mut rng::Rng) -> Dataset {
        let d = self.spec.dim;
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = draws.random_range(0..self.spec.classes);
            for j in 0..d {
                features.push(self.center(y)[j] + self.spec.noise * draws.sample::<f64, _>(StandardNormal));
            }
            labels.push(y);
        }
        Dataset::new(features, d, labels, self.spec.classes).expect("consistent by construction")
    }

    /// Exact class posterior under equal priors.
    pub fn posterior(&self, x: &[f64]) -> ProbVector {
        let var = self.spec.noise * self.spec.noise;
        let logits: Vec<f64> = (0..self.spec.classes)
            .map(|c| -squared_distance(x, self.center(c)) / (2.0 * var))
            .collect();
        softmax(&logits)
    }
}

/// Convenience wrapper: fresh centres from `seed`, `n` samples.
pub fn gaussian_blobs(spec: BlobSpec, n: usize, seed: u64) -> Result<Dataset> {
    let generator = BlobGenerator::new(spec, seed)?;
    Ok(generator.sample(n, &mut rng::stream(seed, "blob-points", 0)))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn softmax(logits: &[f64]) -> ProbVector {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    ProbVector::from_weights(&exps).expect("softmax weights are positive")
}

/// Which reference learner to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerKind {
    Knn { k: usize },
    SoftmaxLinear { learning_rate: f64, epochs: usize, l2: f64 },
}

impl LearnerKind {
    pub fn knn(k: usize) -> Self {
        LearnerKind::Knn { k }
    }

    pub fn softmax() -> Self {
        LearnerKind::SoftmaxLinear {
            learning_rate: 0.5,
            epochs: 200,
            l2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Fitted {
    Knn {
        train: Dataset,
    },
    Softmax {
        /// `classes x (dim + 1)`, bias last, over standardized features.
        weights: Vec<f64>,
        mean: Vec<f64>,
        scale: Vec<f64>,
        classes: usize,
    },
}

/// A reference classifier; must be fitted before predicting.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    kind: LearnerKind,
    seed: u64,
    fitted: Option<Fitted>,
}

impl Learner {
    pub fn new(kind: LearnerKind, seed: u64) -> Self {
        Learner {
            kind,
            seed,
            fitted: None,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    pub fn fit(&mut self, train: &Dataset) -> Result<()> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        self.fitted = Some(match self.kind {
            LearnerKind::Knn { k } => {
                if k == 0 {
                    return Err(Error::Config("k must be positive".into()));
                }
                Fitted::Knn { train: train.clone() }
            }
            LearnerKind::SoftmaxLinear {
                learning_rate,
                epochs,
                l2,
            } => fit_softmax(train, learning_rate, epochs, l2),
        });
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbVector> {
        match self.fitted.as_ref().ok_or(Error::NotFitted)? {
            Fitted::Knn { train } => {
                check_dim(x, train.dim())?;
                let LearnerKind::Knn { k } = self.kind else { unreachable!() };
                Ok(knn_vote(train, x, k))
            }
            Fitted::Softmax {
                weights,
                mean,
                scale,
                classes,
            } => {
                check_dim(x, mean.len())?;
                let z: Vec<f64> = x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect();
                Ok(softmax(&logits(weights, &z, *classes)))
            }
        }
    }

    /// Predictions for every row of `data`.
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<ProbVector>> {
        data.rows().map(|x| self.predict_proba(x)).collect()
    }
}

fn check_dim(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch(format!("input of length {} for a model of dimension {dim}", x.len())));
    }
    Ok(())
}

/// `(count + 1) / (k + K)` over the `k` nearest training rows; distance ties
/// go to the lower training index.
fn knn_vote(train: &Dataset, x: &[f64], k: usize) -> ProbVector {
    let mut dist: Vec<(f64, usize)> = train.rows().map(|r| squared_distance(r, x)).zip(0..).collect();
    let k = k.min(dist.len());
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by_distance);
    }
    let classes = train.class_count();
    let mut counts = vec![1.0; classes];
    for &(_, i) in &dist[..k] {
        counts[train.labels()[i]] += 1.0;
    }
    let total = (k + classes) as f64;
    ProbVector::new(counts.into_iter().map(|c| c / total).collect()).expect("smoothed counts form a distribution")
}

fn logits(weights: &[f64], z: &[f64], classes: usize) -> Vec<f64> {
    let stride = z.len() + 1;
    (0..classes)
        .map(|c| {
            let w = &weights[c * stride..(c + 1) * stride];
            w[..z.len()].iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + w[z.len()]
        })
        .collect()
}

fn fit_softmax(train: &Dataset, learning_rate: f64, epochs: usize, l2: f64) -> Fitted {
    let (n, d, classes) = (train.len(), train.dim(), train.class_count());
    let mut mean = vec![0.0; d];
    for row in train.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    let mut scale = vec![0.0; d];
    for row in train.rows() {
        for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n as f64;
        }
    }
    for s in &mut scale {
        *s = if *s > 1e-12 { s.sqrt() } else { 1.0 };
    }
    let z: Vec<Vec<f64>> = train
        .rows()
        .map(|row| row.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
        .collect();

    let stride = d + 1;
    let mut weights = vec![0.0; classes * stride];
    let mut grad = vec![0.0; classes * stride];
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (zi, &yi) in z.iter().zip(train.labels()) {
            let p = softmax(&logits(&weights, zi, classes));
            for c in 0..classes {
                let err = p.as_slice()[c] - if c == yi { 1.0 } else { 0.0 };
                let g = &mut grad[c * stride..(c + 1) * stride];
                for j in 0..d {
                    g[j] += err * zi[j];
                }
                g[d] += err;
            }
        }
        for c in 0..classes {
            for j in 0..stride {
                let idx = c * stride + j;
                let penalty = if j < d { l2 * weights[idx] } else { 0.0 };
                weights[idx] -= learning_rate * (grad[idx] / n as f64 + penalty);
            }
        }
    }
    Fitted::Softmax {
        weights,
        mean,
        scale,
        classes,
    }
}

/// Reads an `n x K` probability CSV (no header) and an optional label file
/// (one class index per line, optional `label` header).
///
/// Rows within [`PROBA_ROW_TOLERANCE`] of summing to 1 are renormalized;
/// rows further off are rejected.
pub fn load_proba_matrix(path: &Path, labels_path: Option<&Path>) -> Result<(Vec<ProbVector>, Option<Vec<usize>>)> {
    let mut rows = Vec::new();
    for (line, values) in load_matrix(path)?.into_iter().enumerate() {
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > PROBA_ROW_TOLERANCE {
            return Err(Error::parse(path, format!("line {}: row sums to {total}", line + 1)));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::parse(path, format!("line {}: negative probability", line + 1)));
        }
        let row = ProbVector::from_weights(&values).map_err(|e| Error::parse(path, format!("line {}: {e}", line + 1)))?;
        rows.push(row);
    }
    let labels = match labels_path {
        None => None,
        Some(lp) => {
            let labels = load_labels(lp)?;
            if labels.len() != rows.len() {
                return Err(Error::parse(
                    lp,
                    format!("{} labels for {} probability rows", labels.len(), rows.len()),
                ));
            }
            let k = rows[0].classes();
            if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
                return Err(Error::ClassOutOfRange { index: bad, classes: k });
            }
            Some(labels)
        }
    };
    Ok((rows, labels))
}

/// A headerless rectangular CSV of finite numbers with at least one row.
pub fn load_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let values = record
            .iter()
            .map(|f| parse_f64(path, line + 1, f))
            .collect::<Result<Vec<f64>>>()?;
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(Error::parse(path, format!("line {}: ragged row", line + 1)));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no rows"));
    }
    Ok(rows)
}

/// One class index per line; a leading `label` header is skipped.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "label") {
            continue;
        }
        labels.push(
            line.parse()
                .map_err(|_| Error::parse(path, format!("line {}: `{line}` is not a class index", i + 1)))?,
        );
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn knn_smoothing_example() {
        let train = Dataset::new(vec![0.0, 0.1, 0.2, 5.0], 1, vec![0, 0, 1, 1], 2).unwrap();
        let mut knn = Learner::new(LearnerKind::knn(3), 0);
        knn.fit(&train).unwrap();
        let p = knn.predict_proba(&[0.0]).unwrap();
        assert!((p.as_slice()[0] - 0.6).abs() < 1e-15 && (p.as_slice()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn single_class_training() {
        let train = Dataset::new(vec![0.0, 1.0, 2.0], 1, vec![2, 2, 2], 3).unwrap();
        for kind in [LearnerKind::knn(2), LearnerKind::softmax()] {
            let mut l = Learner::new(kind, 0);
            l.fit(&train).unwrap();
            assert_eq!(l.predict_proba(&[1.5]).unwrap().argmax(), 2);
        }
    }

    #[test]
    fn unfitted_and_mismatched() {
        let l = Learner::new(LearnerKind::softmax(), 0);
        assert!(matches!(l.predict_proba(&[0.0]), Err(Error::NotFitted)));
        let train = Dataset::new(vec![0.0, 1.0], 2, vec![0], 2).unwrap();
        let mut l = Learner::new(LearnerKind::knn(1), 0);
        l.fit(&train).unwrap();
        assert!(matches!(l.predict_proba(&[0.0]), Err(Error::DimensionMismatch(_))));
        assert!(Dataset::new(vec![0.0; 3], 2, vec![0, 1], 2).is_err());
        assert!(Dataset::new(vec![0.0; 4], 2, vec![0, 2], 2).is_err());
    }

    #[test]
    fn zero_weight_softmax_is_uniform() {
        let train = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0, 1, 2, 0], 3).unwrap();
        let mut l = Learner::new(
            LearnerKind::SoftmaxLinear {
                learning_rate: 0.1,
                epochs: 0,
                l2: 0.0,
            },
            0,
        );
        l.fit(&train).unwrap();
        let p = l.predict_proba(&[7.0]).unwrap();
        assert!(p.as_slice().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn duplicated_training_set_gives_identical_parameters() {
        let data = gaussian_blobs(BlobSpec { classes: 3, dim: 2, center_scale: 3.0, noise: 1.0 }, 60, 4).unwrap();
        let mut doubled_idx: Vec<usize> = (0..data.len()).collect();
        doubled_idx.extend(0..data.len());
        let doubled = data.subset(&doubled_idx);
        let mut a = Learner::new(LearnerKind::softmax(), 1);
        let mut b = Learner::new(LearnerKind::softmax(), 1);
        a.fit(&data).unwrap();
        b.fit(&data).unwrap();
        assert_eq!(a, b);
        let mut c = Learner::new(LearnerKind::softmax(), 1);
        c.fit(&doubled).unwrap();
        // same normalized gradient, so the fit agrees up to summation order
        for x in data.rows().take(10) {
            let (pa, pc) = (a.predict_proba(x).unwrap(), c.predict_proba(x).unwrap());
            for (u, v) in pa.as_slice().iter().zip(pc.as_slice()) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn separable_blobs_are_learned() {
        let spec = BlobSpec { classes: 2, dim: 2, center_scale: 4.0, noise: 0.5 };
        let data = gaussian_blobs(spec, 200, 3).unwrap();
        for kind in [LearnerKind::softmax(), LearnerKind::knn(5)] {
            let mut l = Learner::new(kind, 0);
            l.fit(&data).unwrap();
            let correct = data
                .rows()
                .zip(data.labels())
                .filter(|(x, y)| l.predict_proba(x).unwrap().argmax() == **y)
                .count();
            assert!(correct as f64 / data.len() as f64 >= 0.95, "{kind:?}: {correct}");
        }
    }

    #[test]
    fn probabilities_are_normalized() {
        let spec = BlobSpec { classes: 4, dim: 3, center_scale: 1.0, noise: 1.0 };
        let data = gaussian_blobs(spec, 100, 8).unwrap();
        let probe = gaussian_blobs(spec, 1000, 9).unwrap();
        for kind in [LearnerKind::softmax(), LearnerKind::knn(7)] {
            let mut l = Learner::new(kind, 0);
            l.fit(&data).unwrap();
            for p in l.predict_all(&probe).unwrap() {
                let total: f64 = p.as_slice().iter().sum();
                assert!((total - 1.0).abs() < 1e-9 && p.as_slice().iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn proba_matrix_loading() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write(&dir, "ok.csv", "0.5,0.5\n0.9,0.1\n0.25,0.75\n");
        let labels = write(&dir, "labels.csv", "label\n0\n0\n1\n");
        let (rows, ys) = load_proba_matrix(&ok, Some(&labels)).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(ys.unwrap(), vec![0, 0, 1]);

        let short = write(&dir, "short.csv", "0.5,0.3\n");
        assert!(matches!(load_proba_matrix(&short, None), Err(Error::Parse { .. })));

        let near = write(&dir, "near.csv", "0.50000001,0.5\n");
        let (rows, _) = load_proba_matrix(&near, None).unwrap();
        assert!((rows[0].as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let two = write(&dir, "two.csv", "0\n1\n");
        assert!(load_proba_matrix(&ok, Some(&two)).is_err());
        let junk = write(&dir, "junk.csv", "0.5,abc\n");
        assert!(load_proba_matrix(&junk, None).is_err());
        assert!(matches!(load_proba_matrix(&dir.path().join("missing.csv"), None), Err(Error::Io { .. })));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let data = gaussian_blobs(BlobSpec { classes: 3, dim: 2, center_scale: 1.0, noise: 1.0 }, 20, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "d.csv", &data.to_csv());
        assert_eq!(Dataset::from_csv_path(&path, Some(3)).unwrap(), data);
        let bad = write(&dir, "bad.csv", "a,b,label\n1,2,0\n");
        assert!(Dataset::from_csv_path(&bad, None).is_err());
    }
}
