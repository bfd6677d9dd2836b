//! Per-correspondence costs of the alignment objective.

use crate::grid::{Mapping, PixelCoord};

use super::chain::{geodesic_neighborhood, EdgeChain};
use super::AlignError;

/// Symmetric 2x2 precision matrix acting on `(dx, dy)` = `(d_col, d_row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl PrecisionMatrix {
    pub fn isotropic(sigma: f64) -> Self {
        let d = 1.0 / (2.0 * sigma * sigma);
        Self {
            a11: d,
            a12: 0.0,
            a22: d,
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a11 > 0.0 && self.a11 * self.a22 - self.a12 * self.a12 > 0.0
    }

    pub fn quad_form(&self, dx: f64, dy: f64) -> f64 {
        self.a11 * dx * dx + 2.0 * self.a12 * dx * dy + self.a22 * dy * dy
    }
}

/// Biased Gaussian precision for an edge whose tangent makes angle `theta`
/// with the x-axis: `sigma_x` along the tangent, `sigma_y` across it.
pub fn precision_matrix(theta: f64, sigma_x: f64, sigma_y: f64) -> PrecisionMatrix {
    let (s, c) = theta.sin_cos();
    let s2 = (2.0 * theta).sin();
    let vx = sigma_x * sigma_x;
    let vy = sigma_y * sigma_y;
    PrecisionMatrix {
        a11: c * c / (2.0 * vx) + s * s / (2.0 * vy),
        a12: s2 / (4.0 * vy) - s2 / (4.0 * vx),
        a22: s * s / (2.0 * vx) + c * c / (2.0 * vy),
    }
}

/// `log((1 - prob) / prob)`, the cost of turning pixel `p` on.
pub fn log_odds_cost(prob: f64) -> Result<f64, AlignError> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(AlignError::Domain(prob));
    }
    Ok((1.0 - prob).ln() - prob.ln())
}

pub fn unary_cost_isotropic(
    p: PixelCoord,
    q: PixelCoord,
    prob_p: f64,
    sigma: f64,
) -> Result<f64, AlignError> {
    Ok(p.dist_sq(q) / (2.0 * sigma * sigma) + log_odds_cost(prob_p)?)
}

pub fn unary_cost_biased(
    p: PixelCoord,
    q: PixelCoord,
    prob_p: f64,
    precision: &PrecisionMatrix,
) -> Result<f64, AlignError> {
    if !precision.is_positive_definite() {
        return Err(AlignError::NotPositiveDefinite(*precision));
    }
    let (dx, dy) = p.displacement_from(q);
    Ok(precision.quad_form(dx, dy) + log_odds_cost(prob_p)?)
}

/// Markov smoothness cost of `m` given the neighbours' vectors in `m_prev`:
/// `lambda * sum_q sum_{v in N(q)} |m_q - m_prev_v|^2` over ordered pairs.
pub fn pairwise_cost(
    m: &Mapping,
    m_prev: &Mapping,
    chain: &EdgeChain,
    lambda: f64,
    g: usize,
) -> Result<f64, AlignError> {
    if m.len() != m_prev.len() || m.sources().ne(m_prev.sources()) {
        return Err(AlignError::MappingMismatch(
            "mappings cover different source pixels".into(),
        ));
    }
    let mut total = 0.0;
    for (q, (mx, my)) in m.vectors() {
        for v in geodesic_neighborhood(chain, q, g)? {
            let u = m_prev
                .target_of(v)
                .ok_or_else(|| AlignError::MappingMismatch(format!("neighbour {v} is unmapped")))?;
            let (vx, vy) = u.displacement_from(v);
            total += (mx - vx).powi(2) + (my - vy).powi(2);
        }
    }
    Ok(lambda * total)
}
