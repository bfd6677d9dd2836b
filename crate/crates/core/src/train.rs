//! Alternating training: align the noisy labels against the current
//! prediction, then take a gradient step on the aligned labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{align_labels, AlignConfig, AlignError, AlignMode};
use crate::grid::{clamp_probs, GridError, MultiLabelMap, ProbMap};
use crate::loss::{loss_gradient, sigmoid_ce_loss, GradientGrid, LossError, LossReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("predictor: {0}")]
    Predictor(String),
    #[error("latent labels no longer match the annotation: {0}")]
    LatentMismatch(String),
}

/// A trainable per-pixel edge predictor.
pub trait PredictorAdapter {
    type Input;

    fn num_classes(&self) -> usize;

    /// Edge probabilities; deterministic for fixed parameters.
    fn forward(&self, input: &Self::Input) -> ProbMap;

    /// Applies one gradient step given the loss derivative with respect to
    /// every output logit.
    fn backward(
        &mut self,
        input: &Self::Input,
        grad: &GradientGrid,
        step_size: f64,
    ) -> Result<(), TrainError>;
}

/// Single-channel image in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    pub height: usize,
    pub width: usize,
    pub intensity: Vec<f32>,
}

impl FeatureImage {
    pub fn new(height: usize, width: usize, intensity: Vec<f32>) -> Result<Self, GridError> {
        if height == 0 || width == 0 {
            return Err(GridError::EmptyGrid { height, width });
        }
        if intensity.len() != height * width {
            return Err(GridError::BufferLength {
                expected: height * width,
                actual: intensity.len(),
            });
        }
        Ok(Self {
            height,
            width,
            intensity,
        })
    }

    /// Stored as a one-plane [`ProbMap`] in containers.
    pub fn from_plane(p: &ProbMap) -> Result<Self, GridError> {
        Self::new(p.height(), p.width(), p.plane(0).to_vec())
    }

    pub fn to_plane(&self) -> ProbMap {
        ProbMap::from_values(self.height, self.width, 1, self.intensity.clone())
            .expect("intensity lies in [0, 1]")
    }

    fn at(&self, r: isize, c: isize) -> f64 {
        let r = r.clamp(0, self.height as isize - 1) as usize;
        let c = c.clamp(0, self.width as isize - 1) as usize;
        self.intensity[r * self.width + c] as f64
    }

    /// Intensity and central-difference gradient magnitude per pixel,
    /// borders replicated.
    fn channels(&self) -> [Vec<f64>; 2] {
        let mut grad = Vec::with_capacity(self.height * self.width);
        for r in 0..self.height as isize {
            for c in 0..self.width as isize {
                let gx = (self.at(r, c + 1) - self.at(r, c - 1)) / 2.0;
                let gy = (self.at(r + 1, c) - self.at(r - 1, c)) / 2.0;
                grad.push((gx * gx + gy * gy).sqrt());
            }
        }
        [self.intensity.iter().map(|&v| v as f64).collect(), grad]
    }
}

const PATCH: usize = 3;
const INPUTS: usize = 2 * PATCH * PATCH;
const HIDDEN: usize = 8;

/// Two-layer per-pixel network on 3x3 patches of intensity and gradient
/// magnitude: 18 inputs, 8 tanh units, one sigmoid output per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPredictor {
    pub num_classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ToyPredictor {
    /// Uniform Glorot initialization; output biases start at the log-odds
    /// of a 5% edge rate.
    pub fn new(num_classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (6.0 / (INPUTS + HIDDEN) as f64).sqrt();
        let b = (6.0 / (HIDDEN + num_classes) as f64).sqrt();
        Self {
            num_classes,
            w1: (0..HIDDEN * INPUTS).map(|_| rng.gen_range(-a..a)).collect(),
            b1: vec![0.0; HIDDEN],
            w2: (0..num_classes * HIDDEN)
                .map(|_| rng.gen_range(-b..b))
                .collect(),
            b2: vec![(0.05f64 / 0.95).ln(); num_classes],
        }
    }

    fn inputs(img: &FeatureImage) -> Vec<[f64; INPUTS]> {
        let ch = img.channels();
        let (h, w) = (img.height as isize, img.width as isize);
        let mut out = Vec::with_capacity(img.height * img.width);
        for r in 0..h {
            for c in 0..w {
                let mut x = [0.0; INPUTS];
                let mut i = 0;
                for plane in &ch {
                    for dr in -1..=1 {
                        for dc in -1..=1 {
                            let rr = (r + dr).clamp(0, h - 1) as usize;
                            let cc = (c + dc).clamp(0, w - 1) as usize;
                            x[i] = plane[rr * img.width + cc];
                            i += 1;
                        }
                    }
                }
                out.push(x);
            }
        }
        out
    }

    fn hidden(&self, x: &[f64; INPUTS]) -> [f64; HIDDEN] {
        let mut h = [0.0; HIDDEN];
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * INPUTS..(j + 1) * INPUTS];
            *hj = (self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh();
        }
        h
    }

    fn logit(&self, k: usize, h: &[f64; HIDDEN]) -> f64 {
        let row = &self.w2[k * HIDDEN..(k + 1) * HIDDEN];
        self.b2[k] + row.iter().zip(h).map(|(w, v)| w * v).sum::<f64>()
    }
}

impl PredictorAdapter for ToyPredictor {
    type Input = FeatureImage;

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn forward(&self, img: &FeatureImage) -> ProbMap {
        let n = img.height * img.width;
        let mut values = vec![0.0f32; n * self.num_classes];
        for (i, x) in Self::inputs(img).iter().enumerate() {
            let h = self.hidden(x);
            for k in 0..self.num_classes {
                values[k * n + i] = sigmoid(self.logit(k, &h)) as f32;
            }
        }
        ProbMap::from_values(img.height, img.width, self.num_classes, values)
            .expect("sigmoid outputs lie in [0, 1]")
    }

    /// Gradient step on the per-pixel mean of the loss.
    fn backward(
        &mut self,
        img: &FeatureImage,
        grad: &GradientGrid,
        step_size: f64,
    ) -> Result<(), TrainError> {
        let n = img.height * img.width;
        if grad.height() != img.height
            || grad.width() != img.width
            || grad.num_classes() != self.num_classes
        {
            return Err(TrainError::Predictor(format!(
                "gradient is {}x{}x{}, predictor expects {}x{}x{}",
                grad.height(),
                grad.width(),
                grad.num_classes(),
                img.height,
                img.width,
                self.num_classes
            )));
        }
        let mut dw1 = vec![0.0; self.w1.len()];
        let mut db1 = vec![0.0; HIDDEN];
        let mut dw2 = vec![0.0; self.w2.len()];
        let mut db2 = vec![0.0; self.num_classes];
        for (i, x) in Self::inputs(img).iter().enumerate() {
            let h = self.hidden(x);
            let mut dh = [0.0; HIDDEN];
            for k in 0..self.num_classes {
                let g = grad.plane(k)[i];
                db2[k] += g;
                for j in 0..HIDDEN {
                    dw2[k * HIDDEN + j] += g * h[j];
                    dh[j] += g * self.w2[k * HIDDEN + j];
                }
            }
            for j in 0..HIDDEN {
                let d = dh[j] * (1.0 - h[j] * h[j]);
                db1[j] += d;
                for (m, &xm) in x.iter().enumerate() {
                    dw1[j * INPUTS + m] += d * xm;
                }
            }
        }
        let scale = step_size / n as f64;
        for (p, d) in [
            (&mut self.w1, &dw1),
            (&mut self.b1, &db1),
            (&mut self.w2, &dw2),
            (&mut self.b2, &db2),
        ] {
            for (w, g) in p.iter_mut().zip(d) {
                *w -= scale * g;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SealConfig {
    pub align: AlignConfig,
    pub mode: AlignMode,
    /// When false the annotation is used as-is (plain cross-entropy
    /// training on noisy labels).
    pub align_enabled: bool,
}

impl Default for SealConfig {
    fn default() -> Self {
        Self {
            align: AlignConfig::default(),
            mode: AlignMode::BiasedMrf,
            align_enabled: true,
        }
    }
}

/// Outcome of one alternating step.
#[derive(Debug, Clone, PartialEq)]
pub struct SealStep {
    pub latent: MultiLabelMap,
    pub loss: LossReport,
}

/// One alternating step: predict, realign the annotation against the
/// prediction, then update the predictor on the realigned labels.
pub fn seal_step<P: PredictorAdapter>(
    input: &P::Input,
    noisy: &MultiLabelMap,
    latent: &MultiLabelMap,
    predictor: &mut P,
    cfg: &SealConfig,
    step_size: f64,
) -> Result<SealStep, TrainError> {
    if latent.dims() != noisy.dims() || latent.num_classes() != noisy.num_classes() {
        return Err(TrainError::LatentMismatch("shape differs".into()));
    }
    for k in 0..noisy.num_classes() {
        if latent.class_count(k) != noisy.class_count(k) {
            return Err(TrainError::LatentMismatch(format!(
                "class {k} has {} latent and {} annotated pixels",
                latent.class_count(k),
                noisy.class_count(k)
            )));
        }
    }
    let prob = predictor.forward(input);
    let aligned = if cfg.align_enabled {
        align_labels(noisy, &prob, &cfg.align, cfg.mode)?.labels
    } else {
        noisy.clone()
    };
    let clamped = clamp_probs(&prob, cfg.align.epsilon)?;
    let loss = sigmoid_ce_loss(&clamped, &aligned)?;
    if step_size != 0.0 {
        let grad = loss_gradient(&clamped, &aligned, None)?;
        predictor.backward(input, &grad, step_size)?;
    }
    Ok(SealStep {
        latent: aligned,
        loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    /// Alternating steps; step `t` visits sample `t mod n`.
    pub steps: usize,
    pub step_size: f64,
    /// Leading steps trained on the annotation without realignment, so the
    /// predictor has a signal worth aligning to.
    pub warmup: usize,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            steps: 200,
            step_size: 0.5,
            warmup: 50,
        }
    }
}

/// One training image with its annotation and current latent labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample<I> {
    pub input: I,
    pub noisy: MultiLabelMap,
    pub latent: MultiLabelMap,
}

impl<I> TrainSample<I> {
    /// Latent labels start as the annotation.
    pub fn new(input: I, noisy: MultiLabelMap) -> Self {
        Self {
            input,
            latent: noisy.clone(),
            noisy,
        }
    }
}

/// Runs `schedule.steps` alternating steps, storing each step's latent
/// labels back into its sample. Returns the per-pixel mean loss of every
/// step.
pub fn train<P: PredictorAdapter>(
    predictor: &mut P,
    samples: &mut [TrainSample<P::Input>],
    cfg: &SealConfig,
    schedule: &TrainSchedule,
    mut on_step: impl FnMut(usize, &SealStep),
) -> Result<Vec<f64>, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::Predictor("no training samples".into()));
    }
    let mut losses = Vec::with_capacity(schedule.steps);
    for t in 0..schedule.steps {
        let s = &mut samples[t % samples.len()];
        let step_cfg = SealConfig {
            align_enabled: cfg.align_enabled && t >= schedule.warmup,
            ..cfg.clone()
        };
        let out = seal_step(
            &s.input,
            &s.noisy,
            &s.latent,
            predictor,
            &step_cfg,
            schedule.step_size,
        )?;
        on_step(t, &out);
        losses.push(out.loss.mean());
        s.latent = out.latent;
    }
    Ok(losses)
}
