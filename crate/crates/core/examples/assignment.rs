//! Solve a small sparse assignment problem and inspect the matching.

use seal_core::{solve_assignment, CostArc, SparseCostGraph};

fn main() {
    // Three workers, four jobs; not every worker can do every job.
    let arcs = vec![
        CostArc {
            left: 0,
            right: 0,
            cost: 4.0,
        },
        CostArc {
            left: 0,
            right: 1,
            cost: 1.0,
        },
        CostArc {
            left: 1,
            right: 1,
            cost: 2.0,
        },
        CostArc {
            left: 1,
            right: 2,
            cost: 5.0,
        },
        CostArc {
            left: 2,
            right: 1,
            cost: 3.0,
        },
        CostArc {
            left: 2,
            right: 3,
            cost: 2.5,
        },
    ];
    let g = SparseCostGraph::new(3, 4, arcs).expect("valid graph");
    let m = solve_assignment(&g).expect("feasible");
    for (left, right) in m.assignment.iter().enumerate() {
        println!("left {left} -> right {right}");
    }
    println!("total cost {:.3} (scaled {})", m.total_cost, m.scaled_cost);
}
