//! One-to-one matching of predicted and ground-truth edge pixels under a
//! distance tolerance.

use crate::assign::{solve_assignment, CostArc, SparseCostGraph};
use crate::grid::{edge_pixels, EdgeLabelMap, PixelCoord};

/// Result of matching a prediction against ground truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Correspondence {
    /// Matched `(pred, gt)` pixel pairs, sorted by prediction pixel.
    pub pairs: Vec<(PixelCoord, PixelCoord)>,
    pub total_pred: usize,
    pub total_gt: usize,
    /// Sum of Euclidean distances over matched pairs.
    pub total_distance: f64,
}

impl Correspondence {
    pub fn matched(&self) -> usize {
        self.pairs.len()
    }

    pub fn mean_distance(&self) -> Option<f64> {
        (!self.pairs.is_empty()).then(|| self.total_distance / self.pairs.len() as f64)
    }
}

/// Maximum number of matches with Euclidean distance at most `max_dist`,
/// and among those the smallest total distance. Returns
/// `(matched_pred, matched_gt)`, which are equal for a one-to-one matching.
pub fn correspond(pred: &EdgeLabelMap, gt: &EdgeLabelMap, max_dist: f64) -> (usize, usize) {
    let c = correspond_detailed(pred, gt, max_dist);
    (c.matched(), c.matched())
}

/// Union-find over prediction and ground-truth nodes.
struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

pub fn correspond_detailed(
    pred: &EdgeLabelMap,
    gt: &EdgeLabelMap,
    max_dist: f64,
) -> Correspondence {
    assert_eq!(
        pred.dims(),
        gt.dims(),
        "prediction and ground truth differ in size"
    );
    let preds = edge_pixels(pred);
    let gts = edge_pixels(gt);
    let (h, w) = gt.dims();
    let mut gt_index = vec![usize::MAX; h * w];
    for (j, g) in gts.iter().enumerate() {
        gt_index[g.row * w + g.col] = j;
    }

    let reach = max_dist.max(0.0).floor() as usize;
    let limit = max_dist * max_dist;
    let mut candidates: Vec<Vec<(usize, f64)>> = Vec::with_capacity(preds.len());
    let mut comps = Components {
        parent: (0..preds.len() + gts.len()).collect(),
    };
    for (i, p) in preds.iter().enumerate() {
        let mut list = Vec::new();
        for r in p.row.saturating_sub(reach)..=(p.row + reach).min(h - 1) {
            for c in p.col.saturating_sub(reach)..=(p.col + reach).min(w - 1) {
                let j = gt_index[r * w + c];
                if j == usize::MAX {
                    continue;
                }
                let d2 = p.dist_sq(PixelCoord::new(r, c));
                if d2 <= limit {
                    list.push((j, d2.sqrt()));
                    comps.union(i, preds.len() + j);
                }
            }
        }
        candidates.push(list);
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); preds.len()];
    for (i, list) in candidates.iter().enumerate() {
        if !list.is_empty() {
            let root = comps.find(i);
            groups[root].push(i);
        }
    }

    let mut pairs = Vec::new();
    let mut total_distance = 0.0;
    for members in groups.into_iter().filter(|g| !g.is_empty()) {
        let mut local_gt: Vec<usize> = members
            .iter()
            .flat_map(|&i| candidates[i].iter().map(|&(j, _)| j))
            .collect();
        local_gt.sort_unstable();
        local_gt.dedup();
        let n = members.len();
        // Leaving a prediction unmatched must cost more than any change in
        // total distance a larger matching could bring.
        let outlier = (n.min(local_gt.len()) + 1) as f64 * max_dist + 1.0;
        let mut arcs = Vec::new();
        for (li, &i) in members.iter().enumerate() {
            for &(j, d) in &candidates[i] {
                let right = local_gt.binary_search(&j).expect("collected above");
                arcs.push(CostArc {
                    left: li,
                    right,
                    cost: d,
                });
            }
            arcs.push(CostArc {
                left: li,
                right: local_gt.len() + li,
                cost: outlier,
            });
        }
        let graph =
            SparseCostGraph::new(n, local_gt.len() + n, arcs).expect("bounded non-negative costs");
        let m = solve_assignment(&graph).expect("outlier arcs make every instance feasible");
        for (li, &right) in m.assignment.iter().enumerate() {
            if right < local_gt.len() {
                let (p, g) = (preds[members[li]], gts[local_gt[right]]);
                total_distance += p.dist_sq(g).sqrt();
                pairs.push((p, g));
            }
        }
    }
    pairs.sort_unstable();
    Correspondence {
        pairs,
        total_pred: preds.len(),
        total_gt: gts.len(),
        total_distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn px(r: usize, c: usize) -> PixelCoord {
        PixelCoord::new(r, c)
    }

    fn line(row: usize, shift: usize) -> EdgeLabelMap {
        let pts: Vec<_> = (0..10).map(|c| px(row + shift, c + 2)).collect();
        EdgeLabelMap::from_pixels(20, 14, 0, &pts).unwrap()
    }

    /// Exhaustive matching: for each prediction in order, skip it or pair
    /// it with any unused ground-truth pixel in range. Ranks by count, then
    /// distance.
    fn brute(pred: &EdgeLabelMap, gt: &EdgeLabelMap, max_dist: f64) -> (usize, f64) {
        fn go(
            p: &[PixelCoord],
            g: &[PixelCoord],
            i: usize,
            used: &mut Vec<bool>,
            acc: (usize, f64),
            max_dist: f64,
            best: &mut (usize, f64),
        ) {
            if i == p.len() {
                if acc.0 > best.0 || (acc.0 == best.0 && acc.1 < best.1 - 1e-9) {
                    *best = acc;
                }
                return;
            }
            go(p, g, i + 1, used, acc, max_dist, best);
            for j in 0..g.len() {
                let d = p[i].dist_sq(g[j]).sqrt();
                if !used[j] && d <= max_dist {
                    used[j] = true;
                    go(p, g, i + 1, used, (acc.0 + 1, acc.1 + d), max_dist, best);
                    used[j] = false;
                }
            }
        }
        let (p, g) = (edge_pixels(pred), edge_pixels(gt));
        let mut best = (0, 0.0);
        go(
            &p,
            &g,
            0,
            &mut vec![false; g.len()],
            (0, 0.0),
            max_dist,
            &mut best,
        );
        best
    }

    #[test]
    fn identical_maps_fully_match() {
        let a = line(5, 0);
        let c = correspond_detailed(&a, &a, 1.0);
        assert_eq!((c.matched(), c.total_pred, c.total_gt), (10, 10, 10));
        assert_eq!(c.total_distance, 0.0);
    }

    #[test]
    fn shifted_line() {
        let gt = line(5, 0);
        let pred = line(5, 3);
        assert_eq!(correspond(&pred, &gt, 4.0), (10, 10));
        assert_eq!(correspond(&pred, &gt, 2.0), (0, 0));
        assert_eq!(correspond(&pred, &gt, 3.0), (10, 10));
    }

    #[test]
    fn prefers_more_matches_over_shorter_ones() {
        // Greedy nearest matching pairs (0,1)-(0,1) and leaves (0,0) unmatched;
        // the optimum matches both with total distance 2.
        let pred = EdgeLabelMap::from_pixels(1, 3, 0, &[px(0, 0), px(0, 1)]).unwrap();
        let gt = EdgeLabelMap::from_pixels(1, 3, 0, &[px(0, 1), px(0, 2)]).unwrap();
        let c = correspond_detailed(&pred, &gt, 1.0);
        assert_eq!(c.matched(), 2);
        assert_eq!(c.total_distance, 2.0);
    }

    proptest! {
        #[test]
        fn agrees_with_exhaustive_matching(
            pb in proptest::collection::vec(prop::bool::weighted(0.25), 25),
            gb in proptest::collection::vec(prop::bool::weighted(0.25), 25),
            max_dist in 0.5f64..3.0,
        ) {
            let pred = EdgeLabelMap::from_bits(5, 5, 0, pb).unwrap();
            let gt = EdgeLabelMap::from_bits(5, 5, 0, gb).unwrap();
            prop_assume!(pred.edge_count() <= 7 && gt.edge_count() <= 7);
            let c = correspond_detailed(&pred, &gt, max_dist);
            let (count, dist) = brute(&pred, &gt, max_dist);
            prop_assert_eq!(c.matched(), count);
            prop_assert!((c.total_distance - dist).abs() < 1e-5);
        }

        #[test]
        fn matches_grow_with_tolerance(
            pb in proptest::collection::vec(prop::bool::weighted(0.2), 64),
            gb in proptest::collection::vec(prop::bool::weighted(0.2), 64),
            d in 0.0f64..3.0,
            extra in 0.0f64..3.0,
        ) {
            let pred = EdgeLabelMap::from_bits(8, 8, 0, pb).unwrap();
            let gt = EdgeLabelMap::from_bits(8, 8, 0, gb).unwrap();
            prop_assert!(correspond(&pred, &gt, d).0 <= correspond(&pred, &gt, d + extra).0);
        }
    }
}
