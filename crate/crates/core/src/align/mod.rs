//! Per-class latent edge alignment.
//!
//! Annotated edge pixels are matched one-to-one to nearby positions so that
//! the sum of a spatial prior and the predictor's log-odds is minimal. The
//! isotropic prior needs a single exact assignment. The biased prior with
//! Markov smoothness runs an exact unary-only assignment first, then
//! `assign_steps - 1` further exact assignments in which every pixel's
//! smoothness term reads its neighbours' vectors from the previous round.

mod chain;
mod config;
mod cost;

use rayon::prelude::*;
use thiserror::Error;

use crate::assign::{solve_assignment, AssignError, CostArc, SparseCostGraph};
use crate::grid::{
    clamp_prob, edge_pixels, extract_class, EdgeLabelMap, GridError, Mapping, MultiLabelMap,
    PixelCoord, ProbMap,
};

pub use chain::{estimate_tangent, geodesic_neighborhood, EdgeChain, Tangent};
pub use config::{default_window, AlignConfig, AlignMode};
pub use cost::{
    log_odds_cost, pairwise_cost, precision_matrix, unary_cost_biased, unary_cost_isotropic,
    PrecisionMatrix,
};

/// Window doublings attempted after the first infeasible solve.
pub const MAX_WINDOW_DOUBLINGS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignError {
    #[error("invalid alignment config: {0}")]
    InvalidConfig(String),
    #[error("probability {0} is not clamped into (0, 1)")]
    Domain(f64),
    #[error("precision matrix {0:?} is not positive definite")]
    NotPositiveDefinite(PrecisionMatrix),
    #[error("pixel {0} is not an edge pixel")]
    NotOnChain(PixelCoord),
    #[error("mapping does not match labels: {0}")]
    MappingMismatch(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("alignment infeasible at window radius {radius}: {count} edge pixels starting at {first} compete for too few positions")]
    Infeasible {
        radius: usize,
        count: usize,
        first: PixelCoord,
        deficient: Vec<PixelCoord>,
    },
    #[error(transparent)]
    Assign(AssignError),
}

/// Everything produced by one alignment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignOutput {
    /// Final mapping.
    pub mapping: Mapping,
    /// Mapping after every Assign step; `iterates[0]` is the unary-only
    /// initialization and the last entry equals `mapping`.
    pub iterates: Vec<Mapping>,
    /// Window radius at which the assignment became feasible.
    pub window_radius: usize,
    /// Real objective of the final Assign step.
    pub total_cost: f64,
    /// Integer (scaled) objective of the final Assign step.
    pub scaled_cost: i64,
}

/// Precomputed per-source data for one class of one image.
struct Problem<'a> {
    height: usize,
    width: usize,
    sources: Vec<PixelCoord>,
    kernels: Vec<PrecisionMatrix>,
    neighbours: Vec<Vec<usize>>,
    probs: Vec<f64>,
    cfg: &'a AlignConfig,
    mode: AlignMode,
}

impl<'a> Problem<'a> {
    fn new(
        y: &EdgeLabelMap,
        prob: &ProbMap,
        cfg: &'a AlignConfig,
        mode: AlignMode,
    ) -> Result<Self, AlignError> {
        cfg.validate(mode)?;
        if y.dims() != prob.dims() {
            return Err(GridError::ShapeMismatch {
                expected: y.dims(),
                actual: prob.dims(),
            }
            .into());
        }
        if y.class_id() >= prob.num_classes() {
            return Err(GridError::ClassOutOfRange {
                index: y.class_id(),
                num_classes: prob.num_classes(),
            }
            .into());
        }
        let sources = edge_pixels(y);
        let probs = prob
            .plane(y.class_id())
            .iter()
            .map(|&v| clamp_prob(v, cfg.epsilon))
            .collect();

        let (kernels, neighbours) = match mode {
            AlignMode::Isotropic => (
                vec![PrecisionMatrix::isotropic(cfg.sigma); sources.len()],
                vec![Vec::new(); sources.len()],
            ),
            AlignMode::BiasedMrf => {
                let chain = EdgeChain::trace(y);
                let mut kernels = Vec::with_capacity(sources.len());
                let mut neighbours = Vec::with_capacity(sources.len());
                for &q in &sources {
                    let t = estimate_tangent(&chain, q, cfg.fit_radius)?;
                    kernels.push(if t.isotropic_fallback {
                        PrecisionMatrix::isotropic(cfg.sigma)
                    } else {
                        precision_matrix(t.theta, cfg.sigma_x, cfg.sigma_y)
                    });
                    let idx = geodesic_neighborhood(&chain, q, cfg.geodesic_radius)?
                        .into_iter()
                        .map(|v| sources.binary_search(&v).expect("chain pixels are sources"))
                        .collect();
                    neighbours.push(idx);
                }
                (kernels, neighbours)
            }
        };

        Ok(Self {
            height: y.height(),
            width: y.width(),
            sources,
            kernels,
            neighbours,
            probs,
            cfg,
            mode,
        })
    }

    fn window(&self, q: PixelCoord, radius: usize) -> impl Iterator<Item = PixelCoord> + '_ {
        candidate_window(q, radius, (self.height, self.width))
    }

    /// Cost of moving source `i` to `p`, with the smoothness term reading
    /// neighbour vectors from `prev` when given.
    fn arc_cost(&self, i: usize, p: PixelCoord, prev: Option<&[(f64, f64)]>) -> f64 {
        let q = self.sources[i];
        let (dx, dy) = p.displacement_from(q);
        let prob = self.probs[p.row * self.width + p.col];
        let prior = match self.mode {
            AlignMode::Isotropic => p.dist_sq(q) / (2.0 * self.cfg.sigma * self.cfg.sigma),
            AlignMode::BiasedMrf => self.kernels[i].quad_form(dx, dy),
        };
        let mut cost = prior + (1.0 - prob).ln() - prob.ln();
        if let Some(prev) = prev {
            let smooth: f64 = self.neighbours[i]
                .iter()
                .map(|&v| (dx - prev[v].0).powi(2) + (dy - prev[v].1).powi(2))
                .sum();
            cost += self.cfg.lambda * smooth;
        }
        cost
    }

    fn solve(
        &self,
        radius: usize,
        prev: Option<&Mapping>,
    ) -> Result<(Mapping, f64, i64), AlignError> {
        let prev_vectors: Option<Vec<(f64, f64)>> =
            prev.map(|m| m.vectors().map(|(_, v)| v).collect());

        let mut cand: Vec<usize> = self
            .sources
            .iter()
            .flat_map(|&q| self.window(q, radius).map(|p| p.row * self.width + p.col))
            .collect();
        cand.sort_unstable();
        cand.dedup();
        let mut right_of = vec![usize::MAX; self.height * self.width];
        for (j, &lin) in cand.iter().enumerate() {
            right_of[lin] = j;
        }

        let mut arcs = Vec::new();
        for (i, &q) in self.sources.iter().enumerate() {
            for p in self.window(q, radius) {
                arcs.push(CostArc {
                    left: i,
                    right: right_of[p.row * self.width + p.col],
                    cost: self.arc_cost(i, p, prev_vectors.as_deref()),
                });
            }
        }
        let graph = SparseCostGraph::new(self.sources.len(), cand.len(), arcs)
            .map_err(AlignError::Assign)?;
        let matching = solve_assignment(&graph).map_err(|e| match e {
            AssignError::Infeasible { deficient_left, .. } => AlignError::Infeasible {
                radius,
                count: deficient_left.len(),
                first: self.sources[deficient_left[0]],
                deficient: deficient_left.iter().map(|&i| self.sources[i]).collect(),
            },
            other => AlignError::Assign(other),
        })?;
        let pairs = matching
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let lin = cand[j];
                (
                    self.sources[i],
                    PixelCoord::new(lin / self.width, lin % self.width),
                )
            })
            .collect();
        Ok((
            Mapping::new(pairs),
            matching.total_cost,
            matching.scaled_cost,
        ))
    }
}

/// In-bounds pixels within Chebyshev distance `radius` of `q`, row-major.
pub fn candidate_window(
    q: PixelCoord,
    radius: usize,
    (height, width): (usize, usize),
) -> impl Iterator<Item = PixelCoord> {
    let r0 = q.row.saturating_sub(radius);
    let r1 = (q.row + radius).min(height - 1);
    let c0 = q.col.saturating_sub(radius);
    let c1 = (q.col + radius).min(width - 1);
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| PixelCoord::new(r, c)))
}

/// Aligns the edge pixels of `y` against plane `y.class_id()` of `prob`.
pub fn align(
    y: &EdgeLabelMap,
    prob: &ProbMap,
    cfg: &AlignConfig,
    mode: AlignMode,
) -> Result<Mapping, AlignError> {
    align_detailed(y, prob, cfg, mode).map(|out| out.mapping)
}

/// Like [`align`], also returning every Assign iterate and the objective.
pub fn align_detailed(
    y: &EdgeLabelMap,
    prob: &ProbMap,
    cfg: &AlignConfig,
    mode: AlignMode,
) -> Result<AlignOutput, AlignError> {
    let problem = Problem::new(y, prob, cfg, mode)?;
    if problem.sources.is_empty() {
        return Ok(AlignOutput {
            mapping: Mapping::default(),
            iterates: vec![Mapping::default()],
            window_radius: cfg.window_radius,
            total_cost: 0.0,
            scaled_cost: 0,
        });
    }

    let mut radius = cfg.window_radius;
    let mut attempt = 0;
    let (mut mapping, mut total_cost, mut scaled_cost) = loop {
        match problem.solve(radius, None) {
            Ok(found) => break found,
            Err(AlignError::Infeasible { .. })
                if attempt < MAX_WINDOW_DOUBLINGS && radius < y.height().max(y.width()) =>
            {
                attempt += 1;
                radius *= 2;
            }
            Err(e) => return Err(e),
        }
    };

    let mut iterates = vec![mapping.clone()];
    if mode == AlignMode::BiasedMrf {
        for _ in 1..cfg.assign_steps {
            (mapping, total_cost, scaled_cost) = problem.solve(radius, Some(&mapping))?;
            iterates.push(mapping.clone());
        }
    }
    Ok(AlignOutput {
        mapping,
        iterates,
        window_radius: radius,
        total_cost,
        scaled_cost,
    })
}

/// Exact Assign step: minimizes unary cost plus the smoothness term whose
/// neighbour vectors come from `prev`, at a fixed window radius.
pub fn assign_step(
    y: &EdgeLabelMap,
    prob: &ProbMap,
    cfg: &AlignConfig,
    radius: usize,
    prev: &Mapping,
) -> Result<(Mapping, i64), AlignError> {
    let problem = Problem::new(y, prob, cfg, AlignMode::BiasedMrf)?;
    if prev.sources().ne(problem.sources.iter().copied()) {
        return Err(AlignError::MappingMismatch(
            "previous mapping covers different pixels".into(),
        ));
    }
    if problem.sources.is_empty() {
        return Ok((Mapping::default(), 0));
    }
    let (m, _, scaled) = problem.solve(radius, Some(prev))?;
    Ok((m, scaled))
}

/// Builds the aligned label map: exactly the targets of `m` are set.
pub fn realize_labels(y: &EdgeLabelMap, m: &Mapping) -> Result<EdgeLabelMap, AlignError> {
    let sources = edge_pixels(y);
    if m.len() != sources.len() || m.sources().ne(sources.iter().copied()) {
        return Err(AlignError::MappingMismatch(format!(
            "mapping has {} sources, labels have {} edge pixels",
            m.len(),
            sources.len()
        )));
    }
    let mut out = EdgeLabelMap::new(y.height(), y.width(), y.class_id())?;
    for t in m.targets() {
        if !out.in_bounds(t) {
            return Err(AlignError::MappingMismatch(format!(
                "target {t} out of bounds"
            )));
        }
        if out.get(t) {
            return Err(AlignError::MappingMismatch(format!(
                "target {t} used twice"
            )));
        }
        out.set(t, true);
    }
    Ok(out)
}

/// Aligned labels for every class of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedLabels {
    pub labels: MultiLabelMap,
    pub mappings: Vec<Mapping>,
}

/// Aligns all classes independently (in parallel) and recombines them.
pub fn align_labels(
    labels: &MultiLabelMap,
    prob: &ProbMap,
    cfg: &AlignConfig,
    mode: AlignMode,
) -> Result<AlignedLabels, AlignError> {
    if labels.num_classes() != prob.num_classes() {
        return Err(AlignError::MappingMismatch(format!(
            "{} label classes vs {} probability planes",
            labels.num_classes(),
            prob.num_classes()
        )));
    }
    let per_class: Vec<(EdgeLabelMap, Mapping)> = (0..labels.num_classes())
        .into_par_iter()
        .map(|k| {
            let y = extract_class(labels, k)?;
            let m = align(&y, prob, cfg, mode)?;
            Ok((realize_labels(&y, &m)?, m))
        })
        .collect::<Result<_, AlignError>>()?;
    let (planes, mappings): (Vec<_>, Vec<_>) = per_class.into_iter().unzip();
    let mut out = MultiLabelMap::new(labels.height(), labels.width(), labels.num_classes())?;
    for (k, plane) in planes.iter().enumerate() {
        out.set_class(k, plane)?;
    }
    Ok(AlignedLabels {
        labels: out,
        mappings,
    })
}

/// Sum of squared differences between neighbouring assignment vectors,
/// `sum_q sum_{v in N(q)} |m_q - m_v|^2`, over the chains of `y`.
pub fn assignment_discontinuity(
    y: &EdgeLabelMap,
    m: &Mapping,
    geodesic_radius: usize,
) -> Result<f64, AlignError> {
    let chain = EdgeChain::trace(y);
    pairwise_cost(m, m, &chain, 1.0, geodesic_radius)
}
