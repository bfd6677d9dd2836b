//! Run the brute-force reference checks on random small instances.

use seal_core::oracle::{assign_step_suite, lemma_suite, theorem1_suite};

fn main() {
    let seed = 2024;
    let mut reports = theorem1_suite(seed, 100);
    reports.push(assign_step_suite(seed, 50));
    reports.extend(lemma_suite(seed, 50));
    for r in reports {
        println!("{:<20} {}/{}", r.name, r.passed, r.instances);
    }
}
