//! Render a synthetic image's probabilities and labels as PNGs.

use seal_core::io::manifest::sbd_palette;
use seal_core::io::synth::{synth_dataset, SynthSpec};
use seal_core::io::viz::{visualize, visualize_labels};

fn main() {
    let out = std::env::temp_dir().join("seal_visualize");
    std::fs::create_dir_all(&out).unwrap();
    let spec = SynthSpec {
        num_images: 1,
        height: 128,
        width: 128,
        seed: 9,
        ..SynthSpec::default()
    };
    let img = &synth_dataset(&spec).unwrap()[0];
    let colors: Vec<[u8; 3]> = sbd_palette()
        .iter()
        .take(spec.num_classes)
        .map(|c| c.color)
        .collect();
    visualize(&img.prob, &colors)
        .unwrap()
        .save_png(&out.join("prob.png"))
        .unwrap();
    visualize_labels(&img.noisy, &colors)
        .unwrap()
        .save_png(&out.join("noisy.png"))
        .unwrap();
    visualize_labels(&img.truth, &colors)
        .unwrap()
        .save_png(&out.join("truth.png"))
        .unwrap();
    println!(
        "wrote prob.png, noisy.png and truth.png to {}",
        out.display()
    );
}
