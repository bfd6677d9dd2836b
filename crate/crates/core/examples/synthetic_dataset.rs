//! Write a synthetic dataset to disk and read it back through its manifest.

use seal_core::io::container::read_labels;
use seal_core::io::manifest::{base_dir, resolve, DatasetManifest};
use seal_core::io::synth::{write_dataset, SynthSpec};

fn main() {
    let dir = std::env::temp_dir().join("seal_synthetic");
    let spec = SynthSpec {
        num_images: 5,
        jitter: 2.0,
        seed: 1,
        ..SynthSpec::default()
    };
    let path = write_dataset(&spec, &dir).unwrap();
    let manifest = DatasetManifest::load(&path).unwrap();
    manifest.validate(&base_dir(&path)).unwrap();
    for e in &manifest.images {
        let labels = read_labels(
            &resolve(&base_dir(&path), &e.labels),
            manifest.num_classes(),
        )
        .unwrap();
        let counts: Vec<usize> = (0..manifest.num_classes())
            .map(|k| labels.class_count(k))
            .collect();
        println!(
            "{}: {}x{}, edge pixels per class {counts:?}",
            e.id, e.height, e.width
        );
    }
    println!("manifest at {}", path.display());
}
