//! Category-aware edge detection benchmark.
//!
//! Every class of every image contributes its false positives, whether or
//! not the class appears in the image. Counts are accumulated at dataset
//! level and turned into precision-recall curves, the maximum F-measure
//! over thresholds (MF at ODS), and average precision.

mod correspond;
mod labels;
mod thin;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{extract_class, EdgeLabelMap, GridError, MultiLabelMap, ProbMap};

pub use correspond::{correspond, correspond_detailed, Correspondence};
pub use labels::{label_agreement, LabelAgreement};
pub use thin::{dilate_gt, thin};

/// Matching tolerances as fractions of the image diagonal.
pub const TOLERANCE_STANDARD: f64 = 0.02;
pub const TOLERANCE_STRICT: f64 = 0.0075;
pub const TOLERANCE_CITYSCAPES: f64 = 0.0035;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("accumulators disagree on {0}")]
    Incompatible(&'static str),
    #[error("recall increases from {previous} to {next} as the threshold rises; average precision needs a raw-mode curve")]
    NonMonotoneRecall { previous: f64, next: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    /// Thinned prediction against thinned one-pixel ground truth.
    Thin,
    /// Raw binarized prediction against dilated ground truth.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub tolerance: f64,
    pub mode: BenchMode,
    pub thresholds: Vec<f64>,
    pub border_ignore: usize,
    pub raw_gt_dilation: usize,
}

/// `n` evenly spaced thresholds strictly inside (0, 1): 0.01..0.99 for 99.
pub fn default_thresholds(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            tolerance: TOLERANCE_STANDARD,
            mode: BenchMode::Thin,
            thresholds: default_thresholds(99),
            border_ignore: 5,
            raw_gt_dilation: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(BenchError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.thresholds.is_empty() {
            return Err(BenchError::InvalidConfig("no thresholds".into()));
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(BenchError::InvalidConfig(
                "thresholds must lie in (0, 1)".into(),
            ));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::InvalidConfig(
                "thresholds must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Matching radius in pixels for an image of the given size.
    pub fn max_dist(&self, height: usize, width: usize) -> f64 {
        self.tolerance * ((height * height + width * width) as f64).sqrt()
    }
}

/// Counts for one class at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub matched_pred: u64,
    pub total_pred: u64,
    pub matched_gt: u64,
    pub total_gt: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.matched_pred += o.matched_pred;
        self.total_pred += o.total_pred;
        self.matched_gt += o.matched_gt;
        self.total_gt += o.total_gt;
    }

    pub fn precision(&self) -> f64 {
        if self.total_pred == 0 {
            0.0
        } else {
            self.matched_pred as f64 / self.total_pred as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.total_gt == 0 {
            0.0
        } else {
            self.matched_gt as f64 / self.total_gt as f64
        }
    }
}

/// Dataset-level counts, per class and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAccumulator {
    thresholds: Vec<f64>,
    num_classes: usize,
    counts: Vec<Counts>,
}

impl BenchAccumulator {
    pub fn new(num_classes: usize, thresholds: &[f64]) -> Self {
        Self {
            thresholds: thresholds.to_vec(),
            num_classes,
            counts: vec![Counts::default(); num_classes * thresholds.len()],
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn counts(&self, class: usize, threshold_index: usize) -> Counts {
        self.counts[class * self.thresholds.len() + threshold_index]
    }

    fn counts_mut(&mut self, class: usize, threshold_index: usize) -> &mut Counts {
        &mut self.counts[class * self.thresholds.len() + threshold_index]
    }

    /// Field-wise sum.
    pub fn merge(&self, other: &BenchAccumulator) -> Result<BenchAccumulator, BenchError> {
        if self.num_classes != other.num_classes {
            return Err(BenchError::Incompatible("class count"));
        }
        if self.thresholds != other.thresholds {
            return Err(BenchError::Incompatible("thresholds"));
        }
        let mut out = self.clone();
        for (a, b) in out.counts.iter_mut().zip(&other.counts) {
            a.add(b);
        }
        Ok(out)
    }

    pub fn curve(&self, class: usize) -> PrCurve {
        let t = self.thresholds.len();
        let counts = &self.counts[class * t..(class + 1) * t];
        PrCurve {
            thresholds: self.thresholds.clone(),
            precision: counts.iter().map(Counts::precision).collect(),
            recall: counts.iter().map(Counts::recall).collect(),
        }
    }

    pub fn has_ground_truth(&self, class: usize) -> bool {
        self.counts(class, 0).total_gt > 0
    }
}

/// Zeroes everything within `border` pixels of the image border.
fn mask_border(map: &mut EdgeLabelMap, border: usize) {
    if border == 0 {
        return;
    }
    let (h, w) = map.dims();
    for r in 0..h {
        for c in 0..w {
            if r < border || c < border || r + border >= h || c + border >= w {
                map.set(crate::grid::PixelCoord::new(r, c), false);
            }
        }
    }
}

/// Counts for one image, every class and threshold.
pub fn evaluate_image(
    prob: &ProbMap,
    gt: &MultiLabelMap,
    cfg: &BenchConfig,
) -> Result<BenchAccumulator, BenchError> {
    cfg.validate()?;
    if prob.dims() != gt.dims() {
        return Err(GridError::ShapeMismatch {
            expected: gt.dims(),
            actual: prob.dims(),
        }
        .into());
    }
    if prob.num_classes() != gt.num_classes() {
        return Err(GridError::ClassOutOfRange {
            index: gt.num_classes(),
            num_classes: prob.num_classes(),
        }
        .into());
    }
    let (h, w) = gt.dims();
    let max_dist = cfg.max_dist(h, w);
    let per_class: Vec<Vec<Counts>> = (0..gt.num_classes())
        .into_par_iter()
        .map(|k| {
            let raw_gt = extract_class(gt, k)?;
            let mut target = match cfg.mode {
                BenchMode::Thin => thin(&raw_gt),
                BenchMode::Raw => dilate_gt(&raw_gt, cfg.raw_gt_dilation),
            };
            mask_border(&mut target, cfg.border_ignore);
            let plane = prob.plane(k);
            cfg.thresholds
                .iter()
                .map(|&t| {
                    let bits = plane.iter().map(|&v| v as f64 >= t).collect();
                    let raw = EdgeLabelMap::from_bits(h, w, k, bits)?;
                    let mut pred = match cfg.mode {
                        BenchMode::Thin => thin(&raw),
                        BenchMode::Raw => raw,
                    };
                    mask_border(&mut pred, cfg.border_ignore);
                    let c = correspond_detailed(&pred, &target, max_dist);
                    Ok(Counts {
                        matched_pred: c.matched() as u64,
                        total_pred: c.total_pred as u64,
                        matched_gt: c.matched() as u64,
                        total_gt: c.total_gt as u64,
                    })
                })
                .collect::<Result<Vec<_>, BenchError>>()
        })
        .collect::<Result<_, BenchError>>()?;
    let mut acc = BenchAccumulator::new(gt.num_classes(), &cfg.thresholds);
    for (k, row) in per_class.iter().enumerate() {
        for (t, c) in row.iter().enumerate() {
            acc.counts_mut(k, t).add(c);
        }
    }
    Ok(acc)
}

/// Adds one image's counts into `acc`.
pub fn pr_accumulate(
    acc: &mut BenchAccumulator,
    prob: &ProbMap,
    gt: &MultiLabelMap,
    cfg: &BenchConfig,
) -> Result<(), BenchError> {
    if acc.thresholds != cfg.thresholds {
        return Err(BenchError::Incompatible("thresholds"));
    }
    *acc = acc.merge(&evaluate_image(prob, gt, cfg)?)?;
    Ok(())
}

/// Evaluates a dataset in parallel; results are merged in input order.
pub fn evaluate_dataset(
    items: &[(ProbMap, MultiLabelMap)],
    num_classes: usize,
    cfg: &BenchConfig,
) -> Result<BenchAccumulator, BenchError> {
    let parts: Vec<BenchAccumulator> = items
        .par_iter()
        .map(|(p, g)| evaluate_image(p, g, cfg))
        .collect::<Result<_, _>>()?;
    parts.iter().try_fold(
        BenchAccumulator::new(num_classes, &cfg.thresholds),
        |a, b| a.merge(b),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

impl PrCurve {
    pub fn f_measure(&self) -> Vec<f64> {
        self.precision
            .iter()
            .zip(&self.recall)
            .map(|(&p, &r)| {
                if p + r > 0.0 {
                    2.0 * p * r / (p + r)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub mf: f64,
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub has_ground_truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfReport {
    pub per_class: Vec<ClassScore>,
    /// Mean MF over classes that have ground truth somewhere in the dataset.
    pub mean: f64,
}

/// Maximum F-measure over the shared threshold grid, per class.
pub fn mf_ods(acc: &BenchAccumulator) -> MfReport {
    let per_class: Vec<ClassScore> = (0..acc.num_classes)
        .map(|k| {
            let curve = acc.curve(k);
            let f = curve.f_measure();
            let mut best = 0;
            for (i, &v) in f.iter().enumerate() {
                if v > f[best] {
                    best = i;
                }
            }
            ClassScore {
                mf: f[best],
                threshold: curve.thresholds[best],
                precision: curve.precision[best],
                recall: curve.recall[best],
                has_ground_truth: acc.has_ground_truth(k),
            }
        })
        .collect();
    let scored: Vec<f64> = per_class
        .iter()
        .filter(|c| c.has_ground_truth)
        .map(|c| c.mf)
        .collect();
    let mean = if scored.is_empty() {
        0.0
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    MfReport { per_class, mean }
}

/// Area under the precision-recall curve. Points are taken from the highest
/// threshold down; the precision of the lowest-recall point is held flat
/// back to recall zero, consecutive points are joined by trapezoids, and
/// nothing is extrapolated past the largest recall reached. Points with zero
/// recall contribute nothing.
pub fn average_precision(curve: &PrCurve) -> Result<f64, BenchError> {
    for w in curve.recall.windows(2) {
        if w[1] > w[0] {
            return Err(BenchError::NonMonotoneRecall {
                previous: w[0],
                next: w[1],
            });
        }
    }
    let points: Vec<(f64, f64)> = curve
        .recall
        .iter()
        .zip(&curve.precision)
        .rev()
        .filter(|(&r, _)| r > 0.0)
        .map(|(&r, &p)| (r, p))
        .collect();
    let Some(&(r0, p0)) = points.first() else {
        return Ok(0.0);
    };
    let mut area = r0 * p0;
    for w in points.windows(2) {
        let ((ra, pa), (rb, pb)) = (w[0], w[1]);
        area += (rb - ra) * (pa + pb) / 2.0;
    }
    Ok(area)
}
