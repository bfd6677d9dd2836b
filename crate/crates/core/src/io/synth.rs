//! Synthetic images with known edges, perturbed annotations and an ideal
//! edge predictor output.
//!
//! Each image is divided into a grid of cells, one shape per cell (an
//! ellipse or a star-shaped blob given by a radial function). True labels are
//! the region pixels with a 4-neighbour outside the region. Noisy labels are
//! the boundary of the same shape with its radius perturbed by a smooth,
//! low-frequency offset whose largest magnitude is exactly the jitter.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::container::{write_container, ContainerError, Grid};
use super::manifest::{sbd_palette, ClassInfo, DatasetManifest, ImageEntry, ManifestError};
use crate::grid::{MultiLabelMap, PixelCoord, ProbMap};
use crate::train::FeatureImage;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_images: usize,
    pub height: usize,
    pub width: usize,
    pub num_classes: usize,
    /// Shapes per image, laid out on a `grid_rows` x `grid_cols` grid.
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Largest radial displacement of the noisy contour, pixels.
    pub jitter: f64,
    /// Width of the ideal predictor's ridge, pixels.
    pub sharpness: f64,
    pub prob_high: f64,
    pub prob_low: f64,
    /// Half-width of the uniform intensity noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_images: 50,
            height: 64,
            width: 64,
            num_classes: 3,
            grid_rows: 2,
            grid_cols: 2,
            jitter: 3.0,
            sharpness: 0.5,
            prob_high: 0.99,
            prob_low: 0.01,
            noise: 0.02,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.num_images == 0 || self.num_classes == 0 || self.num_classes > 20 {
            return bad("need at least one image and 1..=20 classes".into());
        }
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return bad("shape grid must be non-empty".into());
        }
        let cell = (self.height / self.grid_rows).min(self.width / self.grid_cols);
        if cell < 16 {
            return bad(format!(
                "cells of {cell} pixels are too small; need at least 16"
            ));
        }
        if self.jitter.is_nan() || self.jitter < 0.0 || self.jitter > cell as f64 / 8.0 {
            return bad(format!("jitter must lie in [0, {}]", cell as f64 / 8.0));
        }
        if self.sharpness.is_nan() || self.sharpness <= 0.0 {
            return bad("sharpness must be positive".into());
        }
        if !(0.0 <= self.prob_low && self.prob_low < self.prob_high && self.prob_high <= 1.0) {
            return bad("need 0 <= prob_low < prob_high <= 1".into());
        }
        if !(0.0..0.1).contains(&self.noise) {
            return bad("noise must lie in [0, 0.1)".into());
        }
        Ok(())
    }
}

/// One generated image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub id: String,
    pub image: FeatureImage,
    pub truth: MultiLabelMap,
    pub noisy: MultiLabelMap,
    pub prob: ProbMap,
}

/// Smooth periodic function of the polar angle.
#[derive(Debug, Clone)]
struct Harmonics(Vec<(f64, f64, f64)>);

impl Harmonics {
    fn random(rng: &mut ChaCha8Rng, orders: std::ops::RangeInclusive<u32>, amplitude: f64) -> Self {
        Self(
            orders
                .map(|h| {
                    (
                        h as f64,
                        rng.gen_range(-amplitude..amplitude),
                        rng.gen_range(0.0..TAU),
                    )
                })
                .collect(),
        )
    }

    fn eval(&self, phi: f64) -> f64 {
        self.0
            .iter()
            .map(|&(h, a, p)| a * (h * phi + p).cos())
            .sum()
    }

    /// Rescaled so that the largest magnitude over the circle equals `target`.
    fn normalized(mut self, target: f64) -> Self {
        let peak = (0..3600)
            .map(|i| self.eval(i as f64 * TAU / 3600.0).abs())
            .fold(0.0, f64::max);
        let s = if peak > 0.0 { target / peak } else { 0.0 };
        for t in &mut self.0 {
            t.1 *= s;
        }
        self
    }
}

struct Shape {
    class: usize,
    center: (f64, f64),
    base: f64,
    ellipse: Option<(f64, f64, f64)>,
    wobble: Harmonics,
    offset: Harmonics,
}

impl Shape {
    fn radius(&self, phi: f64) -> f64 {
        match self.ellipse {
            Some((a, b, rot)) => {
                let t = phi - rot;
                a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt()
            }
            None => self.base * (1.0 + self.wobble.eval(phi)),
        }
    }

    fn inside(&self, r: usize, c: usize, perturbed: bool) -> bool {
        let dy = r as f64 - self.center.0;
        let dx = c as f64 - self.center.1;
        let phi = (-dy).atan2(dx);
        let mut rad = self.radius(phi);
        if perturbed {
            rad += self.offset.eval(phi);
        }
        (dx * dx + dy * dy).sqrt() <= rad
    }
}

fn boundary(mask: &[bool], h: usize, w: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !mask[i] {
                continue;
            }
            let outside = (r == 0 || !mask[i - w])
                || (r + 1 == h || !mask[i + w])
                || (c == 0 || !mask[i - 1])
                || (c + 1 == w || !mask[i + 1]);
            if outside {
                out.push(i);
            }
        }
    }
    out
}

fn generate_one(spec: &SynthSpec, index: usize) -> SynthImage {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);
    let (h, w) = (spec.height, spec.width);
    let cell_h = h as f64 / spec.grid_rows as f64;
    let cell_w = w as f64 / spec.grid_cols as f64;
    let cell = cell_h.min(cell_w);

    let mut shapes = Vec::new();
    for gr in 0..spec.grid_rows {
        for gc in 0..spec.grid_cols {
            let base = cell * rng.gen_range(0.22..0.3);
            let slack = cell / 2.0 - base * 1.15 - spec.jitter - 1.5;
            let jiggle = |rng: &mut ChaCha8Rng| {
                if slack > 0.0 {
                    rng.gen_range(-slack..slack) * 0.5
                } else {
                    0.0
                }
            };
            let center = (
                (gr as f64 + 0.5) * cell_h + jiggle(&mut rng),
                (gc as f64 + 0.5) * cell_w + jiggle(&mut rng),
            );
            let ellipse = rng.gen_bool(0.5).then(|| {
                let a = base * rng.gen_range(0.9..1.15);
                let b = base * rng.gen_range(0.7..1.0);
                (a, b, rng.gen_range(0.0..TAU))
            });
            shapes.push(Shape {
                class: rng.gen_range(0..spec.num_classes),
                center,
                base,
                ellipse,
                wobble: Harmonics::random(&mut rng, 2..=4, 1.0).normalized(0.15),
                offset: Harmonics::random(&mut rng, 1..=3, 1.0).normalized(spec.jitter),
            });
        }
    }

    let k = spec.num_classes;
    let mut intensity: Vec<f32> = (0..h * w)
        .map(|_| 0.1 + rng.gen_range(-spec.noise..=spec.noise) as f32)
        .collect();
    let mut truth = MultiLabelMap::new(h, w, k).expect("validated dimensions");
    let mut noisy = truth.clone();
    for s in &shapes {
        let mut region = vec![false; h * w];
        let mut moved = vec![false; h * w];
        for r in 0..h {
            for c in 0..w {
                region[r * w + c] = s.inside(r, c, false);
                moved[r * w + c] = s.inside(r, c, true);
            }
        }
        let level = 0.35 + 0.55 * (s.class + 1) as f32 / k as f32;
        for (i, &inside) in region.iter().enumerate() {
            if inside {
                intensity[i] = level + rng.gen_range(-spec.noise..=spec.noise) as f32;
            }
        }
        for i in boundary(&region, h, w) {
            truth.set(PixelCoord::new(i / w, i % w), s.class, true);
        }
        for i in boundary(&moved, h, w) {
            noisy.set(PixelCoord::new(i / w, i % w), s.class, true);
        }
    }
    for v in &mut intensity {
        *v = v.clamp(0.0, 1.0);
    }

    let prob = ideal_prob(&truth, spec.sharpness, spec.prob_high, spec.prob_low);
    SynthImage {
        id: format!("synth_{index:04}"),
        image: FeatureImage::new(h, w, intensity).expect("sizes agree"),
        truth,
        noisy,
        prob,
    }
}

/// `lo + (hi - lo) * exp(-d^2 / (2 s^2))` per class, with `d` the distance
/// to the nearest true edge pixel of that class.
pub fn ideal_prob(truth: &MultiLabelMap, sharpness: f64, hi: f64, lo: f64) -> ProbMap {
    let (h, w) = truth.dims();
    let k = truth.num_classes();
    let reach = (6.0 * sharpness).ceil() as isize + 1;
    let mut values = vec![lo as f32; h * w * k];
    for (i, &f) in truth.fields().iter().enumerate() {
        let (r0, c0) = ((i / w) as isize, (i % w) as isize);
        for class in 0..k {
            if f >> class & 1 == 0 {
                continue;
            }
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let (r, c) = (r0 + dr, c0 + dc);
                    if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
                        continue;
                    }
                    let d2 = (dr * dr + dc * dc) as f64;
                    let v = (lo + (hi - lo) * (-d2 / (2.0 * sharpness * sharpness)).exp()) as f32;
                    let slot = &mut values[class * h * w + r as usize * w + c as usize];
                    *slot = slot.max(v);
                }
            }
        }
    }
    ProbMap::from_values(h, w, k, values).expect("values in [lo, hi]")
}

/// Generates the images of `spec` in memory, in index order.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Vec<SynthImage>, SynthError> {
    spec.validate()?;
    Ok((0..spec.num_images)
        .into_par_iter()
        .map(|i| generate_one(spec, i))
        .collect())
}

/// Class names and colours for a synthetic dataset with `k` classes.
pub fn synth_classes(k: usize) -> Vec<ClassInfo> {
    sbd_palette().into_iter().take(k).collect()
}

/// Writes every image as containers plus `manifest.json` into `dir`;
/// returns the manifest path.
pub fn write_dataset(spec: &SynthSpec, dir: &Path) -> Result<PathBuf, SynthError> {
    let images = synth_dataset(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| SynthError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let entries = images
        .par_iter()
        .map(|img| {
            let name = |kind: &str| format!("{}_{kind}.sebg", img.id);
            write_container(&Grid::Prob(img.image.to_plane()), &dir.join(name("image")))?;
            write_container(&Grid::Prob(img.prob.clone()), &dir.join(name("prob")))?;
            write_container(&Grid::Labels(img.noisy.clone()), &dir.join(name("labels")))?;
            write_container(&Grid::Labels(img.truth.clone()), &dir.join(name("truth")))?;
            Ok(ImageEntry {
                id: img.id.clone(),
                height: spec.height,
                width: spec.width,
                prob: name("prob"),
                labels: name("labels"),
                refined: None,
                image: Some(name("image")),
                truth: Some(name("truth")),
            })
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    let manifest = DatasetManifest {
        classes: synth_classes(spec.num_classes),
        images: entries,
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}
