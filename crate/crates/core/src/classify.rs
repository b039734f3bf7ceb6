//! Nearest-centroid classification in the discriminant space, plus evaluation.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::config::PipelineConfig;
use crate::io::fmt_f64;
use crate::srkda::ProjectionModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub projection: ProjectionModel,
    /// One row per class, in `class_names` order.
    pub centroids: DMatrix<f64>,
    /// Sorted lexicographically; label indices refer to this order.
    pub class_names: Vec<String>,
    /// Settings used to build the model. The kernel carries the resolved bandwidth.
    pub pipeline: PipelineConfig,
}

/// Fits the projection on `signatures` (one row per clip) and stores the class
/// centroids of the projected training set.
pub fn train_model(signatures: &DMatrix<f64>, labels: &[String], pipeline: &PipelineConfig) -> Result<TrainedModel> {
    if labels.len() != signatures.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} signatures",
            labels.len(),
            signatures.nrows()
        )));
    }
    let class_names: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if class_names.len() < 2 {
        return Err(Error::MissingClass(format!(
            "training needs two classes, found {}",
            class_names.len()
        )));
    }
    let index: Vec<usize> = labels
        .iter()
        .map(|l| class_names.binary_search(l).expect("label from the set"))
        .collect();
    for (k, name) in class_names.iter().enumerate() {
        let n = index.iter().filter(|&&i| i == k).count();
        if n < 2 {
            return Err(Error::InsufficientSamples {
                class: name.clone(),
                have: n,
                need: 1,
            });
        }
    }

    let projection = ProjectionModel::fit(signatures, &index, class_names.clone(), &pipeline.kernel)?;
    let projected = projection.project(signatures)?;
    let dims = projected.ncols();
    let mut centroids = DMatrix::zeros(class_names.len(), dims);
    let mut counts = vec![0usize; class_names.len()];
    for (row, &k) in projected.row_iter().zip(&index) {
        counts[k] += 1;
        for j in 0..dims {
            centroids[(k, j)] += row[j];
        }
    }
    for (k, &n) in counts.iter().enumerate() {
        for j in 0..dims {
            centroids[(k, j)] /= n as f64;
        }
    }

    let mut pipeline = pipeline.clone();
    pipeline.kernel = projection.kernel;
    let model = TrainedModel {
        projection,
        centroids,
        class_names,
        pipeline,
    };
    for (a, b) in model.degenerate_classes() {
        log::warn!("classes {a:?} and {b:?} share a centroid; they cannot be told apart");
    }
    Ok(model)
}

impl TrainedModel {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Pairs of classes whose centroids coincide in the projected space.
    pub fn degenerate_classes(&self) -> Vec<(String, String)> {
        let scale = self.centroids.amax().max(f64::MIN_POSITIVE);
        let mut out = Vec::new();
        for a in 0..self.num_classes() {
            for b in a + 1..self.num_classes() {
                let d = (self.centroids.row(a) - self.centroids.row(b)).norm();
                if d <= 1e-9 * scale {
                    out.push((self.class_names[a].clone(), self.class_names[b].clone()));
                }
            }
        }
        out
    }

    /// Euclidean distance from a projected point to every centroid.
    pub fn centroid_distances(&self, projected: &[f64]) -> Vec<f64> {
        self.centroids
            .row_iter()
            .map(|c| {
                c.iter()
                    .zip(projected)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    /// Distance to each class centroid, in `class_names` order.
    pub distances: Vec<f64>,
}

impl Prediction {
    /// Gap between the runner-up and the winning distance.
    pub fn margin(&self) -> f64 {
        let mut d = self.distances.clone();
        d.sort_by(f64::total_cmp);
        if d.len() < 2 {
            0.0
        } else {
            d[1] - d[0]
        }
    }
}

/// Index of the smallest distance; ties go to the earliest (lexicographically
/// smallest) class.
pub fn nearest(distances: &[f64]) -> usize {
    let mut best = 0;
    for (k, &d) in distances.iter().enumerate().skip(1) {
        if d < distances[best] {
            best = k;
        }
    }
    best
}

pub fn predict(model: &TrainedModel, signature: &[f64]) -> Result<Prediction> {
    if signature.len() != model.projection.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "signature length {} vs model {}",
            signature.len(),
            model.projection.dimension()
        )));
    }
    let z = model.projection.project_one(signature)?;
    let distances = model.centroid_distances(&z);
    Ok(Prediction {
        label: model.class_names[nearest(&distances)].clone(),
        distances,
    })
}

/// One clip to evaluate. `signature` is `None` when feature extraction failed.
#[derive(Debug, Clone)]
pub struct TestClip {
    pub clip_id: String,
    pub label: String,
    pub signature: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipOutcome {
    pub clip_id: String,
    pub truth: String,
    /// `None` when the clip produced no features.
    pub predicted: Option<String>,
    pub margin: Option<f64>,
}

/// Rows are true classes, columns predicted classes. Clips that could not be
/// classified are counted per true class in `unclassified`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub unclassified: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let c = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; c]; c],
            unclassified: vec![0; c],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.unclassified.iter().sum::<u64>()
    }

    pub fn correct(&self) -> u64 {
        (0..self.class_names.len()).map(|k| self.counts[k][k]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    /// `None` when nothing was predicted as class `k`.
    pub fn precision(&self, k: usize) -> Option<f64> {
        let col: u64 = self.counts.iter().map(|r| r[k]).sum();
        (col > 0).then(|| self.counts[k][k] as f64 / col as f64)
    }

    /// `None` when class `k` has no test clips.
    pub fn recall(&self, k: usize) -> Option<f64> {
        let row = self.counts[k].iter().sum::<u64>() + self.unclassified[k];
        (row > 0).then(|| self.counts[k][k] as f64 / row as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub clips: Vec<ClipOutcome>,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }

    /// `clip_id,true,predicted,distance_margin`; unclassified clips have an
    /// empty prediction and margin.
    pub fn clip_log_csv(&self) -> String {
        let mut out = String::from("clip_id,true,predicted,distance_margin\n");
        for c in &self.clips {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                c.clip_id,
                c.truth,
                c.predicted.as_deref().unwrap_or(""),
                c.margin.map(fmt_f64).unwrap_or_default()
            );
        }
        out
    }

    /// Key-value report with the confusion matrix, per-class precision and
    /// recall, the effective configuration and the per-clip log.
    pub fn report(&self, config: &PipelineConfig) -> String {
        let cm = &self.confusion;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "nan".into());
        let mut out = String::new();
        let _ = writeln!(out, "[summary]");
        let _ = writeln!(out, "accuracy={}", fmt_f64(cm.accuracy()));
        let _ = writeln!(out, "correct={}", cm.correct());
        let _ = writeln!(out, "total={}", cm.total());
        let _ = writeln!(out, "unclassified={}", cm.unclassified.iter().sum::<u64>());
        let _ = writeln!(out, "classes={}", cm.class_names.join(","));
        let _ = writeln!(out, "\n[per_class]");
        for (k, name) in cm.class_names.iter().enumerate() {
            let _ = writeln!(out, "precision.{name}={}", opt(cm.precision(k)));
            let _ = writeln!(out, "recall.{name}={}", opt(cm.recall(k)));
        }
        let _ = writeln!(out, "\n[confusion]");
        let _ = writeln!(out, "true\\predicted,{},unclassified", cm.class_names.join(","));
        for (k, name) in cm.class_names.iter().enumerate() {
            let row: Vec<String> = cm.counts[k].iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{name},{},{}", row.join(","), cm.unclassified[k]);
        }
        let _ = writeln!(out, "\n[config]");
        out.push_str(&config.to_text());
        let _ = writeln!(out, "\n[clips]");
        out.push_str(&self.clip_log_csv());
        out
    }
}

/// Classifies every test clip and tallies the confusion matrix.
pub fn evaluate(model: &TrainedModel, test: &[TestClip]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut confusion = ConfusionMatrix::new(model.class_names.clone());
    let mut clips = Vec::with_capacity(test.len());
    for clip in test {
        let truth = model
            .class_names
            .binary_search(&clip.label)
            .map_err(|_| Error::MissingClass(format!("test label {:?} unknown to the model", clip.label)))?;
        let outcome = match &clip.signature {
            Some(sig) => {
                let p = predict(model, sig)?;
                let k = nearest(&p.distances);
                confusion.counts[truth][k] += 1;
                ClipOutcome {
                    clip_id: clip.clip_id.clone(),
                    truth: clip.label.clone(),
                    margin: Some(p.margin()),
                    predicted: Some(p.label),
                }
            }
            None => {
                confusion.unclassified[truth] += 1;
                ClipOutcome {
                    clip_id: clip.clip_id.clone(),
                    truth: clip.label.clone(),
                    predicted: None,
                    margin: None,
                }
            }
        };
        clips.push(outcome);
    }
    Ok(Evaluation { confusion, clips })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srkda::KernelConfig;

    #[test]
    fn tie_goes_to_first_class() {
        assert_eq!(nearest(&[1.0, 1.0]), 0);
        assert_eq!(nearest(&[2.0, 1.0, 1.0]), 1);
    }

    #[test]
    fn confusion_metrics() {
        let mut cm = ConfusionMatrix::new(vec!["a".into(), "b".into()]);
        cm.counts = vec![vec![3, 1], vec![0, 4]];
        cm.unclassified = vec![0, 2];
        assert_eq!(cm.total(), 10);
        assert_eq!(cm.correct(), 7);
        assert!((cm.accuracy() - 0.7).abs() < 1e-15);
        assert_eq!(cm.precision(0), Some(1.0));
        assert_eq!(cm.recall(1), Some(4.0 / 6.0));
    }

    #[test]
    fn single_class_is_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let labels = vec!["a".to_string(); 3];
        let r = train_model(&x, &labels, &PipelineConfig::default());
        assert!(matches!(r, Err(Error::MissingClass(_))));
    }

    fn identity_model() -> TrainedModel {
        TrainedModel {
            projection: ProjectionModel {
                train_signatures: DMatrix::from_row_slice(1, 1, &[1.0]),
                omega: DMatrix::from_row_slice(1, 1, &[1.0]),
                kernel: KernelConfig::linear(0.01),
                class_names: vec!["alpha".into(), "zeta".into()],
            },
            centroids: DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]),
            class_names: vec!["alpha".into(), "zeta".into()],
            pipeline: PipelineConfig::default(),
        }
    }

    #[test]
    fn equidistant_point_picks_lexicographic_first() {
        let model = identity_model();
        let p = predict(&model, &[0.0]).unwrap();
        assert_eq!(p.distances, vec![1.0, 1.0]);
        assert_eq!(p.label, "alpha");
        assert_eq!(predict(&model, &[0.5]).unwrap().label, "zeta");
        assert!(matches!(predict(&model, &[0.0, 1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn unclassified_clips_count_against_truth() {
        let model = identity_model();
        let test = vec![
            TestClip { clip_id: "a".into(), label: "alpha".into(), signature: Some(vec![-2.0]) },
            TestClip { clip_id: "b".into(), label: "zeta".into(), signature: None },
        ];
        let e = evaluate(&model, &test).unwrap();
        assert_eq!(e.confusion.counts, vec![vec![1, 0], vec![0, 0]]);
        assert_eq!(e.confusion.unclassified, vec![0, 1]);
        assert_eq!(e.accuracy(), 0.5);
        assert_eq!(e.clips[1].predicted, None);
        let log = e.clip_log_csv();
        assert!(log.starts_with("clip_id,true,predicted,distance_margin\n"));
        assert!(log.contains("\nb,zeta,,\n"));
        let report = e.report(&model.pipeline);
        assert!(report.contains("accuracy=5.0000000000000000e-1"));
    }

    #[test]
    fn empty_test_set() {
        let x = DMatrix::from_row_slice(4, 1, &[-1.0, -1.1, 1.0, 1.1]);
        let labels: Vec<String> = ["a", "a", "b", "b"].map(String::from).to_vec();
        let model = train_model(&x, &labels, &PipelineConfig::default()).unwrap();
        assert!(matches!(evaluate(&model, &[]), Err(Error::EmptyTestSet)));
    }
}
