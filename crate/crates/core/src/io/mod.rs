//! File formats, dataset manifests, rendering and synthetic data.

pub mod container;
pub mod manifest;
pub mod synth;
pub mod viz;

pub use container::{
    read_container, read_labels, read_prob, write_container, ContainerError, Grid,
};
pub use manifest::{cityscapes_palette, sbd_palette, ClassInfo, DatasetManifest, ImageEntry};
pub use synth::{synth_dataset, write_dataset, SynthImage, SynthSpec};
pub use viz::{visualize, RgbImage};
