//! Exact min-cost sparse bipartite assignment.
//!
//! Every left node must be matched; right nodes may stay free. Real costs
//! are rounded onto an integer grid ([`COST_SCALE`]) and solved exactly with
//! shortest augmenting paths over reduced costs. Among all optimal
//! assignments the lexicographically smallest `(left, right)` sequence is
//! returned, which makes results independent of search order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

/// Fixed-point scale applied to real costs before solving.
pub const COST_SCALE: i64 = 1_000_000;

/// Largest magnitude a scaled arc cost may take.
pub const COST_LIMIT: i64 = 1 << 50;

const NONE: usize = usize::MAX;
const INF: i64 = i64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignError {
    #[error("scale must be positive, got {0}")]
    InvalidScale(i64),
    #[error("cost {cost} at index {index} overflows the integer cost range")]
    Overflow { index: usize, cost: f64 },
    #[error("arc {index} references node ({left}, {right}) outside {num_left}x{num_right}")]
    IndexOutOfRange {
        index: usize,
        left: usize,
        right: usize,
        num_left: usize,
        num_right: usize,
    },
    #[error("duplicate arc ({left}, {right})")]
    DuplicateArc { left: usize, right: usize },
    #[error("left node {0} has no arcs")]
    NoArcs(usize),
    #[error("instance too large: {num_left} left nodes times cost bound exceeds i64 range")]
    TooLarge { num_left: usize },
    #[error("no assignment covers every left node; left set {deficient_left:?} reaches only {neighbour_count} right nodes")]
    Infeasible {
        deficient_left: Vec<usize>,
        neighbour_count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostArc {
    pub left: usize,
    pub right: usize,
    pub cost: f64,
}

/// A sparse bipartite assignment instance.
///
/// Arcs are stored grouped by left node and sorted by right node.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCostGraph {
    num_left: usize,
    num_right: usize,
    arcs: Vec<CostArc>,
    row_start: Vec<usize>,
    scaled: Vec<i64>,
}

impl SparseCostGraph {
    pub fn new(
        num_left: usize,
        num_right: usize,
        mut arcs: Vec<CostArc>,
    ) -> Result<Self, AssignError> {
        for (index, a) in arcs.iter().enumerate() {
            if a.left >= num_left || a.right >= num_right {
                return Err(AssignError::IndexOutOfRange {
                    index,
                    left: a.left,
                    right: a.right,
                    num_left,
                    num_right,
                });
            }
        }
        arcs.sort_by_key(|a| (a.left, a.right));
        if let Some(w) = arcs
            .windows(2)
            .find(|w| (w[0].left, w[0].right) == (w[1].left, w[1].right))
        {
            return Err(AssignError::DuplicateArc {
                left: w[0].left,
                right: w[0].right,
            });
        }
        let mut row_start = vec![0usize; num_left + 1];
        for a in &arcs {
            row_start[a.left + 1] += 1;
        }
        for i in 0..num_left {
            if row_start[i + 1] == 0 {
                return Err(AssignError::NoArcs(i));
            }
            row_start[i + 1] += row_start[i];
        }
        let costs: Vec<f64> = arcs.iter().map(|a| a.cost).collect();
        let scaled = scale_costs(&costs, COST_SCALE)?;
        // Potentials and path lengths stay within num_left * (2 * max |cost|).
        let max_abs = scaled.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        if (num_left as u128 + 1) * 4 * max_abs as u128 >= i64::MAX as u128 {
            return Err(AssignError::TooLarge { num_left });
        }
        Ok(Self {
            num_left,
            num_right,
            arcs,
            row_start,
            scaled,
        })
    }

    pub fn num_left(&self) -> usize {
        self.num_left
    }

    pub fn num_right(&self) -> usize {
        self.num_right
    }

    pub fn arcs(&self) -> &[CostArc] {
        &self.arcs
    }

    /// Arcs leaving `left`, sorted by right node.
    pub fn row(&self, left: usize) -> &[CostArc] {
        &self.arcs[self.row_start[left]..self.row_start[left + 1]]
    }

    fn row_scaled(&self, left: usize) -> &[i64] {
        &self.scaled[self.row_start[left]..self.row_start[left + 1]]
    }

    fn arc_index(&self, left: usize, right: usize) -> Option<usize> {
        let row = self.row(left);
        row.binary_search_by_key(&right, |a| a.right)
            .ok()
            .map(|k| self.row_start[left] + k)
    }

    /// Real cost of arc `(left, right)` if present.
    pub fn cost(&self, left: usize, right: usize) -> Option<f64> {
        self.arc_index(left, right).map(|k| self.arcs[k].cost)
    }

    /// Integer (scaled) cost of arc `(left, right)` if present.
    pub fn scaled_cost(&self, left: usize, right: usize) -> Option<i64> {
        self.arc_index(left, right).map(|k| self.scaled[k])
    }
}

/// Solution of an assignment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `assignment[left]` is the right node matched to `left`.
    pub assignment: Vec<usize>,
    /// Sum of the real costs of the chosen arcs.
    pub total_cost: f64,
    /// Sum of the scaled integer costs of the chosen arcs.
    pub scaled_cost: i64,
}

/// Rounds `cost * scale` half away from zero.
pub fn scale_costs(costs: &[f64], scale: i64) -> Result<Vec<i64>, AssignError> {
    if scale <= 0 {
        return Err(AssignError::InvalidScale(scale));
    }
    costs
        .iter()
        .enumerate()
        .map(|(index, &cost)| {
            let v = (cost * scale as f64).round();
            if !v.is_finite() || v.abs() > COST_LIMIT as f64 {
                Err(AssignError::Overflow { index, cost })
            } else {
                Ok(v as i64)
            }
        })
        .collect()
}

/// Minimum-cost assignment covering every left node.
///
/// Ties on the scaled cost are broken toward the lexicographically smallest
/// assignment vector.
pub fn solve_assignment(g: &SparseCostGraph) -> Result<Matching, AssignError> {
    let mut solver = Solver::new(g);
    for row in 0..g.num_left {
        solver.augment_from(row)?;
    }
    solver.lexicographic_ties();

    let assignment = solver.col4row;
    let mut total_cost = 0.0;
    let mut scaled_cost = 0i64;
    for (left, &right) in assignment.iter().enumerate() {
        let k = g.arc_index(left, right).expect("matched arc exists");
        total_cost += g.arcs[k].cost;
        scaled_cost += g.scaled[k];
    }
    Ok(Matching {
        assignment,
        total_cost,
        scaled_cost,
    })
}

/// Checks that `m` is a complete injective assignment over existing arcs
/// whose recorded costs agree with the graph.
pub fn verify_matching(g: &SparseCostGraph, m: &Matching) -> bool {
    if m.assignment.len() != g.num_left {
        return false;
    }
    let mut used = vec![false; g.num_right];
    let mut total = 0.0;
    let mut scaled = 0i64;
    for (left, &right) in m.assignment.iter().enumerate() {
        if right >= g.num_right || used[right] {
            return false;
        }
        used[right] = true;
        match g.arc_index(left, right) {
            Some(k) => {
                total += g.arcs[k].cost;
                scaled += g.scaled[k];
            }
            None => return false,
        }
    }
    scaled == m.scaled_cost && (total - m.total_cost).abs() <= 1e-9 * total.abs().max(1.0)
}

struct Solver<'a> {
    g: &'a SparseCostGraph,
    u: Vec<i64>,
    v: Vec<i64>,
    col4row: Vec<usize>,
    row4col: Vec<usize>,
    dist: Vec<i64>,
    path: Vec<usize>,
    done: Vec<bool>,
}

impl<'a> Solver<'a> {
    fn new(g: &'a SparseCostGraph) -> Self {
        Self {
            g,
            u: vec![0; g.num_left],
            v: vec![0; g.num_right],
            col4row: vec![NONE; g.num_left],
            row4col: vec![NONE; g.num_right],
            dist: vec![INF; g.num_right],
            path: vec![NONE; g.num_right],
            done: vec![false; g.num_right],
        }
    }

    /// Dijkstra over reduced costs from `start` to the nearest free column,
    /// then dual update and augmentation.
    fn augment_from(&mut self, start: usize) -> Result<(), AssignError> {
        let mut touched: Vec<usize> = Vec::new();
        let mut scanned_rows: Vec<usize> = Vec::new();
        let mut scanned_cols: Vec<usize> = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut min_val = 0i64;
        let mut row = start;

        let sink = loop {
            scanned_rows.push(row);
            let ur = self.u[row];
            for (arc, &c) in self.g.row(row).iter().zip(self.g.row_scaled(row)) {
                let j = arc.right;
                if self.done[j] {
                    continue;
                }
                let r = min_val + c - ur - self.v[j];
                if r < self.dist[j] {
                    if self.dist[j] == INF {
                        touched.push(j);
                    }
                    self.dist[j] = r;
                    self.path[j] = row;
                    let assigned = (self.row4col[j] != NONE) as u8;
                    heap.push(Reverse((r, assigned, j)));
                }
            }
            let next = loop {
                match heap.pop() {
                    Some(Reverse((d, _, j))) if !self.done[j] && d == self.dist[j] => {
                        break Some(j)
                    }
                    Some(_) => continue,
                    None => break None,
                }
            };
            let Some(j) = next else {
                let mut deficient_left = scanned_rows.clone();
                deficient_left.sort_unstable();
                let neighbour_count = touched.len();
                self.reset(&touched);
                return Err(AssignError::Infeasible {
                    deficient_left,
                    neighbour_count,
                });
            };
            self.done[j] = true;
            scanned_cols.push(j);
            min_val = self.dist[j];
            if self.row4col[j] == NONE {
                break j;
            }
            row = self.row4col[j];
        };

        self.u[start] += min_val;
        for &i in &scanned_rows {
            if i != start {
                self.u[i] += min_val - self.dist[self.col4row[i]];
            }
        }
        for &j in &scanned_cols {
            self.v[j] -= min_val - self.dist[j];
        }

        let mut j = sink;
        loop {
            let i = self.path[j];
            self.row4col[j] = i;
            let prev = std::mem::replace(&mut self.col4row[i], j);
            if i == start {
                break;
            }
            j = prev;
        }
        self.reset(&touched);
        Ok(())
    }

    fn reset(&mut self, touched: &[usize]) {
        for &j in touched {
            self.dist[j] = INF;
            self.path[j] = NONE;
            self.done[j] = false;
        }
    }

    fn reduced(&self, row: usize, col: usize, c: i64) -> i64 {
        c - self.u[row] - self.v[col]
    }

    /// Moves to the lexicographically smallest optimal assignment.
    ///
    /// With the final duals fixed, every optimal assignment uses only
    /// zero-reduced-cost arcs and leaves free only columns with `v == 0`.
    /// Two optimal assignments differ by zero-cost alternating cycles, so row
    /// `i` can switch to a smaller column `j` iff such a cycle through arc
    /// `(i, j)` exists that avoids rows already fixed.
    fn lexicographic_ties(&mut self) {
        for i in 0..self.g.num_left {
            let current = self.col4row[i];
            let candidates: Vec<usize> = self
                .g
                .row(i)
                .iter()
                .zip(self.g.row_scaled(i))
                .filter(|(a, &c)| a.right < current && self.reduced(i, a.right, c) == 0)
                .map(|(a, _)| a.right)
                .collect();
            for j in candidates {
                if let Some(moves) = self.find_cycle(i, j, current) {
                    self.apply_moves(&moves);
                    break;
                }
            }
        }
    }

    /// Searches the tight residual graph for a path from column `start` back
    /// to column `target` (row `fixed`'s column), touching only rows > `fixed`.
    /// Returns the row moves that realize the cycle.
    fn find_cycle(&self, fixed: usize, start: usize, target: usize) -> Option<Vec<(usize, usize)>> {
        #[derive(Clone, Copy)]
        enum Node {
            Col(usize),
            Row(usize),
            Sink,
        }
        let nr = self.g.num_right;
        let nl = self.g.num_left;
        let mut col_parent = vec![None::<Node>; nr];
        let mut col_seen = vec![false; nr];
        let mut row_parent = vec![NONE; nl];
        let mut sink_parent = NONE;
        let mut sink_seen = false;
        let mut queue = VecDeque::new();
        col_seen[start] = true;
        queue.push_back(Node::Col(start));

        let mut found = false;
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Col(x) => {
                    if x == target {
                        found = true;
                        break;
                    }
                    let r = self.row4col[x];
                    if r == NONE {
                        if !sink_seen {
                            sink_seen = true;
                            sink_parent = x;
                            queue.push_back(Node::Sink);
                        }
                    } else if r > fixed && row_parent[r] == NONE {
                        row_parent[r] = x;
                        queue.push_back(Node::Row(r));
                    }
                }
                Node::Row(r) => {
                    let own = self.col4row[r];
                    for (a, &c) in self.g.row(r).iter().zip(self.g.row_scaled(r)) {
                        let y = a.right;
                        if y != own && !col_seen[y] && self.reduced(r, y, c) == 0 {
                            col_seen[y] = true;
                            col_parent[y] = Some(Node::Row(r));
                            queue.push_back(Node::Col(y));
                        }
                    }
                }
                Node::Sink => {
                    for y in 0..nr {
                        if !col_seen[y] && self.row4col[y] != NONE && self.v[y] == 0 {
                            col_seen[y] = true;
                            col_parent[y] = Some(Node::Sink);
                            queue.push_back(Node::Col(y));
                        }
                    }
                }
            }
        }
        if !found {
            return None;
        }

        // Walk back from target to start, collecting row -> column moves.
        let mut moves = Vec::new();
        let mut col = target;
        while col != start {
            match col_parent[col].expect("reached columns have parents") {
                Node::Row(r) => {
                    moves.push((r, col));
                    col = row_parent[r];
                }
                Node::Sink => col = sink_parent,
                Node::Col(_) => unreachable!(),
            }
        }
        moves.push((fixed, start));
        Some(moves)
    }

    fn apply_moves(&mut self, moves: &[(usize, usize)]) {
        for &(r, _) in moves {
            let old = self.col4row[r];
            if self.row4col[old] == r {
                self.row4col[old] = NONE;
            }
        }
        for &(r, c) in moves {
            self.col4row[r] = c;
            self.row4col[c] = r;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(left: usize, right: usize, cost: f64) -> CostArc {
        CostArc { left, right, cost }
    }

    fn dense(costs: &[&[f64]]) -> SparseCostGraph {
        let nr = costs[0].len();
        let arcs = costs
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &c)| arc(i, j, c)))
            .collect();
        SparseCostGraph::new(costs.len(), nr, arcs).unwrap()
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale_costs(&[0.0], 1_000_000).unwrap(), vec![0]);
        assert_eq!(scale_costs(&[1.5, -2.25], 4).unwrap(), vec![6, -9]);
        assert_eq!(scale_costs(&[0.1234567], 1_000_000).unwrap(), vec![123457]);
        assert_eq!(scale_costs(&[-0.5, 0.5], 1).unwrap(), vec![-1, 1]);
    }

    #[test]
    fn scale_errors() {
        assert_eq!(scale_costs(&[1.0], 0), Err(AssignError::InvalidScale(0)));
        assert!(matches!(
            scale_costs(&[1e300], 1_000_000),
            Err(AssignError::Overflow { index: 0, .. })
        ));
        assert!(matches!(
            scale_costs(&[f64::NAN], 1),
            Err(AssignError::Overflow { .. })
        ));
    }

    #[test]
    fn single_arc() {
        let g = SparseCostGraph::new(1, 1, vec![arc(0, 0, 3.25)]).unwrap();
        let m = solve_assignment(&g).unwrap();
        assert_eq!(m.assignment, vec![0]);
        assert_eq!(m.total_cost, 3.25);
        assert!(verify_matching(&g, &m));
    }

    #[test]
    fn symmetric_two_by_two() {
        let g = dense(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let m = solve_assignment(&g).unwrap();
        assert_eq!(m.assignment, vec![0, 1]);
        assert_eq!(m.total_cost, 2.0);
    }

    #[test]
    fn ties_pick_lexicographic_smallest() {
        let g = dense(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]);
        assert_eq!(solve_assignment(&g).unwrap().assignment, vec![0, 1]);

        // Anti-diagonal and diagonal both cost 2; diagonal is smaller.
        let g = dense(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(solve_assignment(&g).unwrap().assignment, vec![0, 1]);

        // Several zero-cost assignments exist; (1, 0) is the smallest.
        let g = dense(&[&[5.0, 0.0, 0.0], &[0.0, 9.0, 0.0]]);
        assert_eq!(solve_assignment(&g).unwrap().assignment, vec![1, 0]);
    }

    #[test]
    fn tie_through_free_column() {
        // Row 0 can use column 0 or 2 at equal cost; column 2 starts free.
        let g = SparseCostGraph::new(
            2,
            3,
            vec![
                arc(0, 0, 1.0),
                arc(0, 2, 1.0),
                arc(1, 1, 0.0),
                arc(1, 0, 4.0),
            ],
        )
        .unwrap();
        let m = solve_assignment(&g).unwrap();
        assert_eq!(m.assignment, vec![0, 1]);
    }

    #[test]
    fn infeasible_names_deficient_set() {
        let g = SparseCostGraph::new(3, 3, vec![arc(0, 0, 1.0), arc(1, 0, 1.0), arc(2, 2, 1.0)])
            .unwrap();
        match solve_assignment(&g) {
            Err(AssignError::Infeasible {
                deficient_left,
                neighbour_count,
            }) => {
                assert_eq!(deficient_left, vec![0, 1]);
                assert_eq!(neighbour_count, 1);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            SparseCostGraph::new(1, 1, vec![arc(0, 1, 0.0)]),
            Err(AssignError::IndexOutOfRange { .. })
        ));
        assert_eq!(
            SparseCostGraph::new(1, 2, vec![arc(0, 1, 0.0), arc(0, 1, 2.0)]),
            Err(AssignError::DuplicateArc { left: 0, right: 1 })
        );
        assert_eq!(
            SparseCostGraph::new(2, 2, vec![arc(0, 1, 0.0)]),
            Err(AssignError::NoArcs(1))
        );
    }

    #[test]
    fn verify_rejects_bad_matchings() {
        let g = dense(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let good = solve_assignment(&g).unwrap();
        assert!(verify_matching(&g, &good));

        let dup = Matching {
            assignment: vec![0, 0],
            total_cost: 3.0,
            scaled_cost: 3 * COST_SCALE,
        };
        assert!(!verify_matching(&g, &dup));

        let stale = Matching {
            total_cost: 7.0,
            ..good.clone()
        };
        assert!(!verify_matching(&g, &stale));

        let short = Matching {
            assignment: vec![0],
            ..good
        };
        assert!(!verify_matching(&g, &short));
    }

    #[test]
    fn negative_costs() {
        let g = dense(&[&[-3.0, -1.0, 0.0], &[-2.0, -4.0, 1.0]]);
        let m = solve_assignment(&g).unwrap();
        assert_eq!(m.assignment, vec![0, 1]);
        assert_eq!(m.total_cost, -7.0);
    }
}
