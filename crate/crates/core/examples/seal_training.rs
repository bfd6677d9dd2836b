//! Train the built-in predictor on perturbed labels, with and without
//! alignment, and watch the latent labels approach the clean ones.

use seal_core::bench::{label_agreement, LabelAgreement};
use seal_core::io::synth::{synth_dataset, SynthSpec};
use seal_core::train::{train, SealConfig, ToyPredictor, TrainSample, TrainSchedule};

fn main() {
    let spec = SynthSpec {
        num_images: 20,
        jitter: 3.0,
        seed: 2,
        ..SynthSpec::default()
    };
    let data = synth_dataset(&spec).unwrap();
    let distance = |samples: &[TrainSample<_>]| {
        let mut acc = LabelAgreement::default();
        for (s, d) in samples.iter().zip(&data) {
            acc.add(&label_agreement(&s.latent, &d.truth, 6.0).unwrap());
        }
        acc.mean_distance().unwrap()
    };

    for align_enabled in [false, true] {
        let mut samples: Vec<_> = data
            .iter()
            .map(|d| TrainSample::new(d.image.clone(), d.noisy.clone()))
            .collect();
        let before = distance(&samples);
        let mut predictor = ToyPredictor::new(spec.num_classes, 1);
        let cfg = SealConfig {
            align_enabled,
            ..SealConfig::default()
        };
        let losses = train(
            &mut predictor,
            &mut samples,
            &cfg,
            &TrainSchedule::default(),
            |t, step| {
                if t % 50 == 0 {
                    println!("  step {t:3} loss {:.5}", step.loss.mean());
                }
            },
        )
        .unwrap();
        println!(
            "align {align_enabled}: final loss {:.5}, latent-to-truth distance {before:.3} -> {:.3}",
            losses.last().unwrap(),
            distance(&samples)
        );
    }
}
