//! Label-vs-label agreement, used to score refined annotations against a
//! clean reference. Neither side is thinned.

use serde::{Deserialize, Serialize};

use super::correspond::correspond_detailed;
use crate::grid::{extract_class, GridError, MultiLabelMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelAgreement {
    pub matched: u64,
    pub total_pred: u64,
    pub total_gt: u64,
    /// Summed distance over matched pairs, pixels.
    pub total_distance: f64,
}

impl LabelAgreement {
    pub fn add(&mut self, o: &LabelAgreement) {
        self.matched += o.matched;
        self.total_pred += o.total_pred;
        self.total_gt += o.total_gt;
        self.total_distance += o.total_distance;
    }

    pub fn precision(&self) -> f64 {
        if self.total_pred == 0 {
            0.0
        } else {
            self.matched as f64 / self.total_pred as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.total_gt == 0 {
            0.0
        } else {
            self.matched as f64 / self.total_gt as f64
        }
    }

    pub fn f_measure(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn mean_distance(&self) -> Option<f64> {
        (self.matched > 0).then(|| self.total_distance / self.matched as f64)
    }
}

/// Matches `labels` against `reference` class by class within `max_dist`
/// pixels and sums the counts.
pub fn label_agreement(
    labels: &MultiLabelMap,
    reference: &MultiLabelMap,
    max_dist: f64,
) -> Result<LabelAgreement, GridError> {
    if labels.dims() != reference.dims() {
        return Err(GridError::ShapeMismatch {
            expected: reference.dims(),
            actual: labels.dims(),
        });
    }
    let mut out = LabelAgreement::default();
    for k in 0..reference.num_classes() {
        let c = correspond_detailed(
            &extract_class(labels, k)?,
            &extract_class(reference, k)?,
            max_dist,
        );
        out.add(&LabelAgreement {
            matched: c.matched() as u64,
            total_pred: c.total_pred as u64,
            total_gt: c.total_gt as u64,
            total_distance: c.total_distance,
        });
    }
    Ok(out)
}
