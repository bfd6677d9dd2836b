//! Benchmark an edge map against perturbed annotations in Thin and Raw
//! modes, at the standard and the strict tolerance.

use seal_core::bench::{
    average_precision, evaluate_dataset, mf_ods, BenchConfig, BenchMode, TOLERANCE_STANDARD,
    TOLERANCE_STRICT,
};
use seal_core::io::synth::{ideal_prob, synth_dataset, SynthSpec};

fn main() {
    let spec = SynthSpec {
        num_images: 8,
        height: 96,
        width: 96,
        seed: 5,
        ..SynthSpec::default()
    };
    let data = synth_dataset(&spec).unwrap();
    // A wider, weaker ridge than the generator's own, scored against the
    // perturbed labels.
    let items: Vec<_> = data
        .iter()
        .map(|d| (ideal_prob(&d.truth, 1.5, 0.8, 0.02), d.noisy.clone()))
        .collect();
    for (mode, tolerance) in [
        (BenchMode::Thin, TOLERANCE_STANDARD),
        (BenchMode::Thin, TOLERANCE_STRICT),
        (BenchMode::Raw, TOLERANCE_STANDARD),
        (BenchMode::Raw, TOLERANCE_STRICT),
    ] {
        let cfg = BenchConfig {
            mode,
            tolerance,
            ..BenchConfig::default()
        };
        let acc = evaluate_dataset(&items, spec.num_classes, &cfg).unwrap();
        let report = mf_ods(&acc);
        print!("{mode:?} @ {tolerance}: mean MF {:.4}", report.mean);
        if mode == BenchMode::Raw {
            let aps: Vec<f64> = (0..spec.num_classes)
                .filter(|&k| acc.has_ground_truth(k))
                .map(|k| average_precision(&acc.curve(k)).unwrap())
                .collect();
            print!(
                ", mean AP {:.4}",
                aps.iter().sum::<f64>() / aps.len() as f64
            );
        }
        println!();
    }
}
