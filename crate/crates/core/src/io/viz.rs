//! Colour-coded rendering of multi-class edge maps.

use std::path::Path;

use thiserror::Error;

use crate::grid::{MultiLabelMap, ProbMap};

#[derive(Debug, Error)]
pub enum VizError {
    #[error("{colors} colours for {classes} classes")]
    ColorCount { colors: usize, classes: usize },
    #[error("{path}: {message}")]
    Write { path: String, message: String },
}

/// Row-major RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = 3 * (row * self.width + col);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn save_png(&self, path: &Path) -> Result<(), VizError> {
        image::save_buffer(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ColorType::Rgb8,
        )
        .map_err(|e| VizError::Write {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Blends class colours weighted by probability, darkened by the strongest
/// response: `255 - max_c P_c * sum_c P_c (255 - M_c) / sum_c P_c` per
/// channel, white where every probability is zero. Channels round half up.
pub fn visualize(prob: &ProbMap, colors: &[[u8; 3]]) -> Result<RgbImage, VizError> {
    if colors.len() != prob.num_classes() {
        return Err(VizError::ColorCount {
            colors: colors.len(),
            classes: prob.num_classes(),
        });
    }
    let n = prob.height() * prob.width();
    let mut data = Vec::with_capacity(3 * n);
    for i in 0..n {
        let mut sum = 0.0f64;
        let mut max = 0.0f64;
        let mut acc = [0.0f64; 3];
        for (k, color) in colors.iter().enumerate() {
            let p = prob.plane(k)[i] as f64;
            sum += p;
            max = max.max(p);
            for ch in 0..3 {
                acc[ch] += p * (255.0 - color[ch] as f64);
            }
        }
        for a in acc {
            let v = if sum > 0.0 {
                255.0 - max * a / sum
            } else {
                255.0
            };
            data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(RgbImage {
        height: prob.height(),
        width: prob.width(),
        data,
    })
}

/// Renders binary labels by treating set bits as probability one.
pub fn visualize_labels(labels: &MultiLabelMap, colors: &[[u8; 3]]) -> Result<RgbImage, VizError> {
    let (h, w) = labels.dims();
    let k = labels.num_classes();
    let mut values = vec![0.0f32; h * w * k];
    for (i, &f) in labels.fields().iter().enumerate() {
        for c in 0..k {
            if f >> c & 1 == 1 {
                values[c * h * w + i] = 1.0;
            }
        }
    }
    let prob = ProbMap::from_values(h, w, k, values).expect("values are 0 or 1");
    visualize(&prob, colors)
}

/// Precision-recall plot: one polyline per curve on a white canvas with a
/// light grid at every 0.1. Recall runs along x, precision along y.
pub fn plot_pr(curves: &[(Vec<f64>, Vec<f64>, [u8; 3])], size: usize) -> RgbImage {
    let mut img = RgbImage {
        height: size,
        width: size,
        data: vec![255; 3 * size * size],
    };
    let margin = size / 10;
    let span = (size - 2 * margin) as f64;
    let to_px = |r: f64, p: f64| {
        let x = margin as f64 + r * span;
        let y = (size - margin) as f64 - p * span;
        (x, y)
    };
    let put = |img: &mut RgbImage, x: f64, y: f64, c: [u8; 3]| {
        let (xi, yi) = (x.round() as isize, y.round() as isize);
        if xi >= 0 && yi >= 0 && (xi as usize) < size && (yi as usize) < size {
            let i = 3 * (yi as usize * size + xi as usize);
            img.data[i..i + 3].copy_from_slice(&c);
        }
    };
    let line = |img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: [u8; 3]| {
        let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            put(img, a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), c);
        }
    };
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let shade = if i == 0 { [0, 0, 0] } else { [220, 220, 220] };
        line(&mut img, to_px(v, 0.0), to_px(v, 1.0), shade);
        line(&mut img, to_px(0.0, v), to_px(1.0, v), shade);
    }
    for (recall, precision, color) in curves {
        let pts: Vec<_> = recall
            .iter()
            .zip(precision)
            .filter(|(&r, &p)| r > 0.0 || p > 0.0)
            .map(|(&r, &p)| to_px(r, p))
            .collect();
        for w in pts.windows(2) {
            line(&mut img, w[0], w[1], *color);
        }
        if let [only] = pts[..] {
            put(&mut img, only.0, only.1, *color);
        }
    }
    img
}
