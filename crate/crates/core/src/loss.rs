//! Sigmoid cross-entropy on edge labels and its gradient with respect to the
//! pre-sigmoid logits. Losses are summed over pixels and classes.

use thiserror::Error;

use crate::grid::{MultiLabelMap, ProbMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: probabilities {prob:?}, labels {labels:?} (height, width, classes)")]
    ShapeMismatch {
        prob: (usize, usize, usize),
        labels: (usize, usize, usize),
    },
    #[error("probability {value} at index {index} is not clamped into (0, 1)")]
    Unclamped { index: usize, value: f32 },
    #[error("beta {0} outside (0, 1)")]
    BetaOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub per_class: Vec<f64>,
    pub pixel_count: usize,
}

impl LossReport {
    /// Loss per pixel and class, for display.
    pub fn mean(&self) -> f64 {
        let n = self.pixel_count * self.per_class.len();
        if n == 0 {
            0.0
        } else {
            self.total / n as f64
        }
    }
}

/// Per-pixel, per-class derivative of the loss, planar like [`ProbMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientGrid {
    height: usize,
    width: usize,
    num_classes: usize,
    values: Vec<f64>,
}

impl GradientGrid {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn plane(&self, k: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[k * n..(k + 1) * n]
    }
}

fn check(prob: &ProbMap, labels: &MultiLabelMap) -> Result<(), LossError> {
    let p = (prob.height(), prob.width(), prob.num_classes());
    let l = (labels.height(), labels.width(), labels.num_classes());
    if p != l {
        return Err(LossError::ShapeMismatch { prob: p, labels: l });
    }
    if let Some((index, &value)) = prob
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0 && v < 1.0))
    {
        return Err(LossError::Unclamped { index, value });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), LossError> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(LossError::BetaOutOfRange(beta))
    }
}

/// Iterates `(class, pixel index, probability, label)` over the grid.
fn cells<'a>(
    prob: &'a ProbMap,
    labels: &'a MultiLabelMap,
) -> impl Iterator<Item = (usize, usize, f64, bool)> + 'a {
    let n = prob.height() * prob.width();
    let fields = labels.fields();
    (0..prob.num_classes()).flat_map(move |k| {
        prob.plane(k)
            .iter()
            .enumerate()
            .map(move |(i, &v)| (k, i, v as f64, fields[i] >> k & 1 == 1))
            .take(n)
    })
}

fn weighted_loss(prob: &ProbMap, labels: &MultiLabelMap, pos: f64, neg: f64) -> LossReport {
    let mut per_class = vec![0.0; prob.num_classes()];
    for (k, _, p, y) in cells(prob, labels) {
        per_class[k] -= if y {
            pos * p.ln()
        } else {
            neg * (1.0 - p).ln()
        };
    }
    LossReport {
        total: per_class.iter().sum(),
        per_class,
        pixel_count: prob.height() * prob.width(),
    }
}

/// Unweighted sigmoid cross-entropy.
pub fn sigmoid_ce_loss(prob: &ProbMap, labels: &MultiLabelMap) -> Result<LossReport, LossError> {
    check(prob, labels)?;
    Ok(weighted_loss(prob, labels, 1.0, 1.0))
}

/// Cross-entropy with positives weighted by `beta` and negatives by
/// `1 - beta`.
pub fn reweighted_ce_loss(
    prob: &ProbMap,
    labels: &MultiLabelMap,
    beta: f64,
) -> Result<LossReport, LossError> {
    check(prob, labels)?;
    check_beta(beta)?;
    Ok(weighted_loss(prob, labels, beta, 1.0 - beta))
}

/// Fraction of non-edge pixels over all classes, the usual per-image
/// choice of `beta`.
pub fn non_edge_fraction(labels: &MultiLabelMap) -> f64 {
    let total = labels.height() * labels.width() * labels.num_classes();
    let edges: usize = (0..labels.num_classes())
        .map(|k| labels.class_count(k))
        .sum();
    (total - edges) as f64 / total as f64
}

/// Derivative of the (optionally `beta`-weighted) loss with respect to each
/// logit: `p - y` unweighted, `beta * y * (p - 1) + (1 - beta) * (1 - y) * p`
/// weighted.
pub fn loss_gradient(
    prob: &ProbMap,
    labels: &MultiLabelMap,
    weighted: Option<f64>,
) -> Result<GradientGrid, LossError> {
    check(prob, labels)?;
    let (pos, neg) = match weighted {
        Some(beta) => {
            check_beta(beta)?;
            (beta, 1.0 - beta)
        }
        None => (1.0, 1.0),
    };
    let values = cells(prob, labels)
        .map(|(_, _, p, y)| if y { pos * (p - 1.0) } else { neg * p })
        .collect();
    Ok(GradientGrid {
        height: prob.height(),
        width: prob.width(),
        num_classes: prob.num_classes(),
        values,
    })
}
