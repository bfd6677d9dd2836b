//! Exhaustive reference solvers for small instances.
//!
//! Nothing here calls the assignment solver or the alignment cost functions:
//! costs are re-derived from first principles (the biased prior is evaluated
//! in tangent/normal coordinates rather than through the precision matrix),
//! and minimization is plain enumeration. Only the chain geometry (tangent
//! angle and geodesic neighbours) is shared with the library.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::align::{
    align_detailed, assign_step, candidate_window, estimate_tangent, geodesic_neighborhood,
    realize_labels, AlignConfig, AlignError, AlignMode, EdgeChain,
};
use crate::assign::{Matching, SparseCostGraph, COST_SCALE};
use crate::grid::{edge_pixels, EdgeLabelMap, Mapping, PixelCoord, ProbMap};

/// Largest enumeration the oracles accept.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;
/// Largest left side accepted by [`brute_force_matching`].
pub const MATCHING_LEFT_LIMIT: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration of {0} candidates exceeds the limit")]
    TooLarge(u64),
    #[error("no injective assignment exists")]
    Infeasible,
    #[error(transparent)]
    Align(#[from] AlignError),
}

/// A single-class alignment instance small enough to enumerate.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub y: EdgeLabelMap,
    pub prob: ProbMap,
    pub cfg: AlignConfig,
    pub mode: AlignMode,
}

/// Exhaustive optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub latent: EdgeLabelMap,
    pub mapping: Mapping,
    pub cost: f64,
    pub scaled_cost: i64,
}

fn scaled(x: f64) -> i64 {
    (x * COST_SCALE as f64).round() as i64
}

/// Per-source, per-target cost table built from first principles.
struct CostTable {
    sources: Vec<PixelCoord>,
    windows: Vec<Vec<PixelCoord>>,
    width: usize,
    costs: Vec<Vec<f64>>,
}

impl CostTable {
    fn new(inst: &SmallInstance, prev: Option<&Mapping>) -> Result<Self, OracleError> {
        let y = &inst.y;
        let cfg = &inst.cfg;
        cfg.validate(inst.mode)?;
        let sources = edge_pixels(y);
        let chain = EdgeChain::trace(y);
        let plane = inst.prob.plane(y.class_id());
        let windows: Vec<Vec<PixelCoord>> = sources
            .iter()
            .map(|&q| candidate_window(q, cfg.window_radius, y.dims()).collect())
            .collect();

        let mut costs = Vec::with_capacity(sources.len());
        for (&q, window) in sources.iter().zip(&windows) {
            let tangent = match inst.mode {
                AlignMode::BiasedMrf => Some(estimate_tangent(&chain, q, cfg.fit_radius)?),
                AlignMode::Isotropic => None,
            };
            let neighbours = match prev {
                Some(_) => geodesic_neighborhood(&chain, q, cfg.geodesic_radius)?,
                None => Vec::new(),
            };
            let row = window
                .iter()
                .map(|&p| {
                    let dx = p.col as f64 - q.col as f64;
                    let dy = p.row as f64 - q.row as f64;
                    let prior = match tangent {
                        Some(t) if !t.isotropic_fallback => {
                            let (s, c) = t.theta.sin_cos();
                            let along = dx * c - dy * s;
                            let across = dx * s + dy * c;
                            along * along / (2.0 * cfg.sigma_x * cfg.sigma_x)
                                + across * across / (2.0 * cfg.sigma_y * cfg.sigma_y)
                        }
                        _ => (dx * dx + dy * dy) / (2.0 * cfg.sigma * cfg.sigma),
                    };
                    let pi = (plane[p.row * y.width() + p.col] as f64)
                        .max(cfg.epsilon)
                        .min(1.0 - cfg.epsilon);
                    let mut cost = prior + ((1.0 - pi) / pi).ln();
                    if let Some(prev) = prev {
                        let mut smooth = 0.0;
                        for &v in &neighbours {
                            let u = prev.target_of(v).expect("previous mapping covers sources");
                            let ex = dx - (u.col as f64 - v.col as f64);
                            let ey = dy - (u.row as f64 - v.row as f64);
                            smooth += ex * ex + ey * ey;
                        }
                        cost += cfg.lambda * smooth;
                    }
                    cost
                })
                .collect();
            costs.push(row);
        }
        Ok(Self {
            sources,
            windows,
            width: y.width(),
            costs,
        })
    }

    fn lookup(&self, i: usize, p: PixelCoord) -> Option<f64> {
        self.windows[i]
            .iter()
            .position(|&w| w == p)
            .map(|k| self.costs[i][k])
    }

    fn lin(&self, p: PixelCoord) -> usize {
        p.row * self.width + p.col
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// Minimum over bijections from sources onto `targets` (respecting windows).
fn best_bijection(table: &CostTable, targets: &[PixelCoord]) -> Option<(i64, f64, Vec<usize>)> {
    fn go(
        table: &CostTable,
        targets: &[PixelCoord],
        i: usize,
        used: &mut Vec<bool>,
        perm: &mut Vec<usize>,
        acc: (i64, f64),
        best: &mut Option<(i64, f64, Vec<usize>)>,
    ) {
        if i == table.sources.len() {
            if best.as_ref().is_none_or(|b| acc.0 < b.0) {
                *best = Some((acc.0, acc.1, perm.clone()));
            }
            return;
        }
        for k in 0..targets.len() {
            if used[k] {
                continue;
            }
            if let Some(c) = table.lookup(i, targets[k]) {
                used[k] = true;
                perm.push(k);
                go(
                    table,
                    targets,
                    i + 1,
                    used,
                    perm,
                    (acc.0 + scaled(c), acc.1 + c),
                    best,
                );
                perm.pop();
                used[k] = false;
            }
        }
    }
    let mut best = None;
    go(
        table,
        targets,
        0,
        &mut vec![false; targets.len()],
        &mut Vec::new(),
        (0, 0.0),
        &mut best,
    );
    best
}

fn enumerate_by_subset(
    inst: &SmallInstance,
    prev: Option<&Mapping>,
) -> Result<BruteForceResult, OracleError> {
    let table = CostTable::new(inst, prev)?;
    let n = table.sources.len();
    let mut union: Vec<PixelCoord> = table.windows.iter().flatten().copied().collect();
    union.sort_by_key(|&p| table.lin(p));
    union.dedup();
    let size = binomial(union.len() as u64, n as u64).saturating_mul(factorial(n as u64));
    if size >= ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(size));
    }

    let mut best: Option<(i64, f64, Vec<PixelCoord>, Vec<usize>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let subset: Vec<PixelCoord> = idx.iter().map(|&k| union[k]).collect();
        if let Some((s, c, perm)) = best_bijection(&table, &subset) {
            if best.as_ref().is_none_or(|b| s < b.0) {
                best = Some((s, c, subset, perm));
            }
        }
        // Next combination in lexicographic order.
        let mut k = n;
        loop {
            if k == 0 {
                let (scaled_cost, cost, subset, perm) = best.ok_or(OracleError::Infeasible)?;
                let pairs = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| (table.sources[i], subset[k]))
                    .collect();
                let latent = EdgeLabelMap::from_pixels(
                    inst.y.height(),
                    inst.y.width(),
                    inst.y.class_id(),
                    &subset,
                )
                .map_err(AlignError::from)?;
                return Ok(BruteForceResult {
                    latent,
                    mapping: Mapping::new(pairs),
                    cost,
                    scaled_cost,
                });
            }
            k -= 1;
            if idx[k] < union.len() - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exhaustive minimizer of the alignment objective: latent label sets `ŷ`
/// with `|ŷ| = |y|` inside the candidate windows in lexicographic order,
/// each scored by its cheapest realizing mapping.
pub fn brute_force_align(inst: &SmallInstance) -> Result<BruteForceResult, OracleError> {
    enumerate_by_subset(inst, None)
}

/// Exhaustive minimizer of the unary cost plus the smoothness term frozen at
/// `prev`.
pub fn brute_force_assign_step(
    inst: &SmallInstance,
    prev: &Mapping,
) -> Result<BruteForceResult, OracleError> {
    enumerate_by_subset(inst, Some(prev))
}

/// Minimum scaled objective found by walking injective mappings directly
/// (sources in order, targets in window order). Shares no control flow with
/// the subset enumeration.
pub fn brute_force_align_by_mapping(
    inst: &SmallInstance,
    prev: Option<&Mapping>,
) -> Result<i64, OracleError> {
    let table = CostTable::new(inst, prev)?;
    let size = table
        .windows
        .iter()
        .fold(1u64, |acc, w| acc.saturating_mul(w.len() as u64));
    if size >= ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(size));
    }
    let scaled_rows: Vec<Vec<i64>> = table
        .costs
        .iter()
        .map(|row| row.iter().map(|&c| scaled(c)).collect())
        .collect();
    let mut used = vec![false; inst.y.height() * inst.y.width()];
    let mut best = None;
    let mut stack: Vec<(usize, usize, i64)> = vec![(0, 0, 0)];
    // Iterative DFS: (source index, next window slot, accumulated cost).
    while let Some(&mut (i, ref mut slot, acc)) = stack.last_mut() {
        if i == table.sources.len() {
            if best.is_none_or(|b| acc < b) {
                best = Some(acc);
            }
            stack.pop();
            if let Some(&(pi, ps, _)) = stack.last() {
                used[table.lin(table.windows[pi][ps - 1])] = false;
            }
            continue;
        }
        if *slot == table.windows[i].len() {
            stack.pop();
            if let Some(&(pi, ps, _)) = stack.last() {
                used[table.lin(table.windows[pi][ps - 1])] = false;
            }
            continue;
        }
        let k = *slot;
        *slot += 1;
        let p = table.windows[i][k];
        if !used[table.lin(p)] {
            used[table.lin(p)] = true;
            stack.push((i + 1, 0, acc + scaled_rows[i][k]));
        }
    }
    best.ok_or(OracleError::Infeasible)
}

/// Exact assignment by enumerating injective choices of lefts in order and
/// rights in increasing order; only strictly cheaper solutions replace the
/// incumbent, so ties resolve to the lexicographically smallest assignment.
pub fn brute_force_matching(g: &SparseCostGraph) -> Result<Matching, OracleError> {
    let n = g.num_left();
    if n > MATCHING_LEFT_LIMIT {
        return Err(OracleError::TooLarge(n as u64));
    }
    fn go(
        g: &SparseCostGraph,
        i: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        acc: i64,
        best: &mut Option<(i64, Vec<usize>)>,
    ) {
        if i == g.num_left() {
            if best.as_ref().is_none_or(|b| acc < b.0) {
                *best = Some((acc, cur.clone()));
            }
            return;
        }
        for j in 0..g.num_right() {
            if used[j] {
                continue;
            }
            if let Some(c) = g.scaled_cost(i, j) {
                used[j] = true;
                cur.push(j);
                go(g, i + 1, used, cur, acc + c, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = None;
    go(
        g,
        0,
        &mut vec![false; g.num_right()],
        &mut Vec::new(),
        0,
        &mut best,
    );
    let (scaled_cost, assignment) = best.ok_or(OracleError::Infeasible)?;
    let total_cost = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| g.cost(i, j).expect("arc exists"))
        .sum();
    Ok(Matching {
        assignment,
        total_cost,
        scaled_cost,
    })
}

/// Objective of a fixed latent label set: its cheapest realizing mapping
/// within the candidate windows. `None` when no mapping realizes it.
pub fn latent_objective(
    inst: &SmallInstance,
    latent: &EdgeLabelMap,
) -> Result<Option<i64>, OracleError> {
    let table = CostTable::new(inst, None)?;
    let targets = edge_pixels(latent);
    if targets.len() != table.sources.len() {
        return Ok(None);
    }
    Ok(best_bijection(&table, &targets).map(|(s, _, _)| s))
}

/// Outcome of one exactness check of the sparse assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Check {
    pub holds: bool,
    pub align_scaled: i64,
    pub brute_scaled: i64,
    pub realized_scaled: Option<i64>,
}

/// Solves with the assignment-based aligner, realizes the labels, and checks
/// that they attain the exhaustive optimum over latent label sets.
pub fn check_theorem1_detailed(inst: &SmallInstance) -> Result<Theorem1Check, OracleError> {
    let out = align_detailed(&inst.y, &inst.prob, &inst.cfg, inst.mode)?;
    let brute = brute_force_align(inst)?;
    let realized = realize_labels(&inst.y, &out.mapping)?;
    let realized_scaled = latent_objective(inst, &realized)?;
    Ok(Theorem1Check {
        holds: out.window_radius == inst.cfg.window_radius
            && out.scaled_cost == brute.scaled_cost
            && realized_scaled == Some(brute.scaled_cost),
        align_scaled: out.scaled_cost,
        brute_scaled: brute.scaled_cost,
        realized_scaled,
    })
}

pub fn check_theorem1(inst: &SmallInstance) -> Result<bool, OracleError> {
    check_theorem1_detailed(inst).map(|c| c.holds)
}

/// Checks that one Assign step from `prev` is the exhaustive minimizer of
/// unary plus frozen smoothness cost.
pub fn check_assign_step(inst: &SmallInstance, prev: &Mapping) -> Result<bool, OracleError> {
    let (_, solved) = assign_step(&inst.y, &inst.prob, &inst.cfg, inst.cfg.window_radius, prev)?;
    let brute = brute_force_assign_step(inst, prev)?;
    let second = brute_force_align_by_mapping(inst, Some(prev))?;
    Ok(solved == brute.scaled_cost && second == brute.scaled_cost)
}

/// Every label set of the same size as `y` on the grid is the realization of
/// some mapping: pairing sources and targets in row-major order builds one.
/// Returns the number of label sets checked, or the first counterexample.
pub fn check_lemma1(y: &EdgeLabelMap) -> Result<Result<usize, EdgeLabelMap>, OracleError> {
    let sources = edge_pixels(y);
    let n = sources.len();
    let cells = y.height() * y.width();
    let size = binomial(cells as u64, n as u64);
    if size >= ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(size));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut checked = 0;
    loop {
        let targets: Vec<PixelCoord> = idx
            .iter()
            .map(|&k| PixelCoord::new(k / y.width(), k % y.width()))
            .collect();
        let want = EdgeLabelMap::from_pixels(y.height(), y.width(), y.class_id(), &targets)
            .map_err(AlignError::from)?;
        let m = Mapping::new(
            sources
                .iter()
                .copied()
                .zip(targets.iter().copied())
                .collect(),
        );
        match realize_labels(y, &m) {
            Ok(got) if got == want => checked += 1,
            _ => return Ok(Err(want)),
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(Ok(checked));
            }
            k -= 1;
            if idx[k] < cells - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Negative log-likelihood of a binary label set under independent
/// Bernoulli pixels.
pub fn negative_log_likelihood(latent: &EdgeLabelMap, plane: &[f32], epsilon: f64) -> f64 {
    latent
        .bits()
        .iter()
        .zip(plane)
        .map(|(&b, &v)| {
            let pi = (v as f64).max(epsilon).min(1.0 - epsilon);
            if b {
                -pi.ln()
            } else {
                -(1.0 - pi).ln()
            }
        })
        .sum()
}

/// `|NLL(ŷ) − NLL(0) − Σ_{p∈ŷ} log((1−π_p)/π_p)|`: turning pixels on costs
/// exactly their log-odds.
pub fn lemma2_residual(latent: &EdgeLabelMap, plane: &[f32], epsilon: f64) -> f64 {
    let empty = EdgeLabelMap::new(latent.height(), latent.width(), latent.class_id())
        .expect("dimensions already valid");
    let lhs = negative_log_likelihood(latent, plane, epsilon)
        - negative_log_likelihood(&empty, plane, epsilon);
    let rhs: f64 = edge_pixels(latent)
        .iter()
        .map(|p| {
            let pi = (plane[p.row * latent.width() + p.col] as f64)
                .max(epsilon)
                .min(1.0 - epsilon);
            (1.0 - pi).ln() - pi.ln()
        })
        .sum();
    (lhs - rhs).abs()
}

/// Draws a random instance on a grid of at most `max_side` x `max_side`
/// with at most `max_edges` annotated pixels.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_side: usize,
    max_edges: usize,
    mode: AlignMode,
    lambda: f64,
) -> SmallInstance {
    let h = rng.gen_range(2..=max_side);
    let w = rng.gen_range(2..=max_side);
    let n = rng.gen_range(0..=max_edges.min(h * w));

    // Half the time a random walk (gives chains with tangents), otherwise
    // scattered pixels.
    let mut pts: Vec<PixelCoord> = Vec::new();
    if rng.gen_bool(0.5) && n > 0 {
        let mut cur = PixelCoord::new(rng.gen_range(0..h), rng.gen_range(0..w));
        pts.push(cur);
        let mut tries = 0;
        while pts.len() < n && tries < 100 {
            tries += 1;
            let dr = rng.gen_range(-1i64..=1);
            let dc = rng.gen_range(-1i64..=1);
            let r = cur.row as i64 + dr;
            let c = cur.col as i64 + dc;
            if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
                continue;
            }
            let next = PixelCoord::new(r as usize, c as usize);
            if !pts.contains(&next) {
                pts.push(next);
            }
            cur = next;
        }
    }
    while pts.len() < n {
        let p = PixelCoord::new(rng.gen_range(0..h), rng.gen_range(0..w));
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let y = EdgeLabelMap::from_pixels(h, w, 0, &pts).expect("in bounds");

    let values: Vec<f32> = match rng.gen_range(0..6) {
        0 => vec![0.5; h * w],
        1 => (0..h * w)
            .map(|_| {
                *[0.0f32, 1.0, 0.5, 0.01, 0.99]
                    .get(rng.gen_range(0..5))
                    .unwrap()
            })
            .collect(),
        _ => (0..h * w).map(|_| rng.gen::<f32>()).collect(),
    };
    let prob = ProbMap::from_values(h, w, 1, values).expect("values in range");

    let sigma_x = rng.gen_range(0.5..2.0);
    let mut cfg = AlignConfig {
        sigma: rng.gen_range(0.5..3.0),
        sigma_x,
        sigma_y: sigma_x + rng.gen_range(0.0..3.0),
        lambda,
        window_radius: rng.gen_range(1..=2),
        assign_steps: rng.gen_range(1..=3),
        geodesic_radius: rng.gen_range(1..=2),
        fit_radius: rng.gen_range(1..=4),
        epsilon: 1e-6,
    };
    let inst = SmallInstance {
        y,
        prob,
        cfg: cfg.clone(),
        mode,
    };
    if subset_size(&inst) >= ENUMERATION_LIMIT / 10 {
        cfg.window_radius = 1;
    }
    SmallInstance { cfg, ..inst }
}

fn subset_size(inst: &SmallInstance) -> u64 {
    let src = edge_pixels(&inst.y);
    let mut union: Vec<PixelCoord> = src
        .iter()
        .flat_map(|&q| candidate_window(q, inst.cfg.window_radius, inst.y.dims()))
        .collect();
    union.sort();
    union.dedup();
    binomial(union.len() as u64, src.len() as u64).saturating_mul(factorial(src.len() as u64))
}

/// Aggregate result of a randomized oracle run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub passed: usize,
    pub failures: Vec<usize>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.instances
    }

    fn from_results(name: &str, results: Vec<bool>) -> Self {
        let failures: Vec<usize> = results
            .iter()
            .enumerate()
            .filter(|(_, &ok)| !ok)
            .map(|(i, _)| i)
            .collect();
        Self {
            name: name.to_string(),
            instances: results.len(),
            passed: results.len() - failures.len(),
            failures,
        }
    }
}

fn instance_rng(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(i as u128 * 4096);
    rng
}

/// Exactness of the sparse assignment against brute force over `count` random
/// instances per prior, with zero smoothness.
pub fn theorem1_suite(seed: u64, count: usize) -> Vec<SuiteReport> {
    [(AlignMode::Isotropic, 1), (AlignMode::BiasedMrf, 2)]
        .into_iter()
        .map(|(mode, stream)| {
            let results = (0..count)
                .into_par_iter()
                .map(|i| {
                    let inst = random_instance(&mut instance_rng(seed, stream, i), 6, 4, mode, 0.0);
                    let second = brute_force_align_by_mapping(&inst, None);
                    match (check_theorem1_detailed(&inst), second) {
                        (Ok(c), Ok(s)) => c.holds && s == c.brute_scaled,
                        _ => false,
                    }
                })
                .collect();
            let name = match mode {
                AlignMode::Isotropic => "theorem1-isotropic",
                AlignMode::BiasedMrf => "theorem1-biased",
            };
            SuiteReport::from_results(name, results)
        })
        .collect()
}

/// Assign-step exactness with positive smoothness: the previous mapping is
/// the instance's own unary-only initialization.
pub fn assign_step_suite(seed: u64, count: usize) -> SuiteReport {
    let results = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, 3, i);
            let lambda = rng.gen_range(0.01..2.0);
            let inst = random_instance(&mut rng, 6, 3, AlignMode::BiasedMrf, lambda);
            let run = || -> Result<bool, OracleError> {
                let out = align_detailed(&inst.y, &inst.prob, &inst.cfg, inst.mode)?;
                let mut ok = true;
                for pair in out.iterates.windows(2) {
                    let (next, _) =
                        assign_step(&inst.y, &inst.prob, &inst.cfg, out.window_radius, &pair[0])?;
                    ok &= next == pair[1];
                }
                Ok(ok && check_assign_step(&inst, &out.iterates[0])?)
            };
            run().unwrap_or(false)
        })
        .collect();
    SuiteReport::from_results("assign-step", results)
}

/// Surjectivity of the mapping on small grids and the flip-cost identity on
/// random instances.
pub fn lemma_suite(seed: u64, count: usize) -> Vec<SuiteReport> {
    let lemma1 = (0..count)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(
                &mut instance_rng(seed, 4, i),
                4,
                4,
                AlignMode::Isotropic,
                0.0,
            );
            matches!(check_lemma1(&inst.y), Ok(Ok(_)))
        })
        .collect();
    let lemma2 = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, 5, i);
            let inst = random_instance(&mut rng, 8, 8, AlignMode::Isotropic, 0.0);
            let bits: Vec<bool> = (0..inst.y.height() * inst.y.width())
                .map(|_| rng.gen_bool(0.3))
                .collect();
            let latent = EdgeLabelMap::from_bits(inst.y.height(), inst.y.width(), 0, bits)
                .expect("sizes agree");
            lemma2_residual(&latent, inst.prob.plane(0), inst.cfg.epsilon) < 1e-9
        })
        .collect();
    vec![
        SuiteReport::from_results("lemma1", lemma1),
        SuiteReport::from_results("lemma2", lemma2),
    ]
}
