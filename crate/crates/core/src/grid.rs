//! Pixel-grid types shared by alignment, training and benchmarking.
//!
//! Every grid is row-major with a top-left origin, and coordinates are
//! always `(row, col)`.

use std::fmt;

use thiserror::Error;

/// Maximum number of classes a [`MultiLabelMap`] pixel can carry.
pub const MAX_CLASSES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("class index {index} out of range for {num_classes} classes")]
    ClassOutOfRange { index: usize, num_classes: usize },
    #[error("epsilon {0} outside (0, 0.5)")]
    EpsilonOutOfRange(f64),
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("buffer length {actual} does not match {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("grid dimensions must be positive, got {height}x{width}")]
    EmptyGrid { height: usize, width: usize },
    #[error("probability {value} at index {index} is outside [0, 1]")]
    ProbabilityRange { index: usize, value: f32 },
    #[error("{num_classes} classes exceed the {MAX_CLASSES}-bit label field")]
    TooManyClasses { num_classes: usize },
    #[error("label bit {bit} set but only {num_classes} classes declared")]
    StrayLabelBit { bit: usize, num_classes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Displacement `self - other` as `(d_col, d_row)`, i.e. image x then y.
    pub fn displacement_from(&self, other: PixelCoord) -> (f64, f64) {
        (
            self.col as f64 - other.col as f64,
            self.row as f64 - other.row as f64,
        )
    }

    pub fn dist_sq(&self, other: PixelCoord) -> f64 {
        let (dx, dy) = self.displacement_from(other);
        dx * dx + dy * dy
    }

    pub fn chebyshev(&self, other: PixelCoord) -> usize {
        self.row
            .abs_diff(other.row)
            .max(self.col.abs_diff(other.col))
    }
}

impl fmt::Display for PixelCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

impl From<(usize, usize)> for PixelCoord {
    fn from((row, col): (usize, usize)) -> Self {
        Self { row, col }
    }
}

fn check_dims(height: usize, width: usize) -> Result<(), GridError> {
    if height == 0 || width == 0 {
        return Err(GridError::EmptyGrid { height, width });
    }
    Ok(())
}

/// Binary edge annotation of a single class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeLabelMap {
    height: usize,
    width: usize,
    class_id: usize,
    bits: Vec<bool>,
}

impl EdgeLabelMap {
    pub fn new(height: usize, width: usize, class_id: usize) -> Result<Self, GridError> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            class_id,
            bits: vec![false; height * width],
        })
    }

    pub fn from_bits(
        height: usize,
        width: usize,
        class_id: usize,
        bits: Vec<bool>,
    ) -> Result<Self, GridError> {
        check_dims(height, width)?;
        if bits.len() != height * width {
            return Err(GridError::BufferLength {
                expected: height * width,
                actual: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            class_id,
            bits,
        })
    }

    /// Builds a map with the given pixels set. Out-of-bounds pixels are an error.
    pub fn from_pixels(
        height: usize,
        width: usize,
        class_id: usize,
        pixels: &[PixelCoord],
    ) -> Result<Self, GridError> {
        let mut map = Self::new(height, width, class_id)?;
        for &p in pixels {
            if !map.in_bounds(p) {
                return Err(GridError::ShapeMismatch {
                    expected: (height, width),
                    actual: (p.row + 1, p.col + 1),
                });
            }
            map.set(p, true);
        }
        Ok(map)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn in_bounds(&self, p: PixelCoord) -> bool {
        p.row < self.height && p.col < self.width
    }

    pub fn get(&self, p: PixelCoord) -> bool {
        self.bits[p.row * self.width + p.col]
    }

    pub fn set(&mut self, p: PixelCoord, value: bool) {
        self.bits[p.row * self.width + p.col] = value;
    }

    /// Signed lookup; anything outside the grid reads as unset.
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            return false;
        }
        self.bits[row as usize * self.width + col as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Set pixels of `map` in row-major order.
pub fn edge_pixels(map: &EdgeLabelMap) -> Vec<PixelCoord> {
    map.bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| PixelCoord::new(i / map.width, i % map.width))
        .collect()
}

/// Multilabel annotation: each pixel carries a 32-bit class field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiLabelMap {
    height: usize,
    width: usize,
    num_classes: usize,
    fields: Vec<u32>,
}

impl MultiLabelMap {
    pub fn new(height: usize, width: usize, num_classes: usize) -> Result<Self, GridError> {
        Self::from_fields(height, width, num_classes, vec![0; height * width])
    }

    pub fn from_fields(
        height: usize,
        width: usize,
        num_classes: usize,
        fields: Vec<u32>,
    ) -> Result<Self, GridError> {
        check_dims(height, width)?;
        if num_classes > MAX_CLASSES {
            return Err(GridError::TooManyClasses { num_classes });
        }
        if fields.len() != height * width {
            return Err(GridError::BufferLength {
                expected: height * width,
                actual: fields.len(),
            });
        }
        let allowed = if num_classes == MAX_CLASSES {
            u32::MAX
        } else {
            (1u32 << num_classes) - 1
        };
        if let Some(stray) = fields.iter().find(|&&f| f & !allowed != 0) {
            let bit = (stray & !allowed).trailing_zeros() as usize;
            return Err(GridError::StrayLabelBit { bit, num_classes });
        }
        Ok(Self {
            height,
            width,
            num_classes,
            fields,
        })
    }

    /// Recombines per-class maps; the class of each plane is its position.
    pub fn from_classes(planes: &[EdgeLabelMap]) -> Result<Self, GridError> {
        let first = planes.first().ok_or(GridError::EmptyGrid {
            height: 0,
            width: 0,
        })?;
        let (h, w) = first.dims();
        let mut out = Self::new(h, w, planes.len())?;
        for (k, plane) in planes.iter().enumerate() {
            out.set_class(k, plane)?;
        }
        Ok(out)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn fields(&self) -> &[u32] {
        &self.fields
    }

    pub fn get(&self, p: PixelCoord, class: usize) -> bool {
        self.fields[p.row * self.width + p.col] >> class & 1 == 1
    }

    /// Sets or clears bit `class` at `p`. Panics if `class` is out of range.
    pub fn set(&mut self, p: PixelCoord, class: usize, value: bool) {
        assert!(class < self.num_classes, "class {class} out of range");
        let f = &mut self.fields[p.row * self.width + p.col];
        if value {
            *f |= 1 << class;
        } else {
            *f &= !(1 << class);
        }
    }

    /// Overwrites class `k` with the bits of `plane`.
    pub fn set_class(&mut self, k: usize, plane: &EdgeLabelMap) -> Result<(), GridError> {
        if k >= self.num_classes {
            return Err(GridError::ClassOutOfRange {
                index: k,
                num_classes: self.num_classes,
            });
        }
        if plane.dims() != self.dims() {
            return Err(GridError::ShapeMismatch {
                expected: self.dims(),
                actual: plane.dims(),
            });
        }
        let mask = 1u32 << k;
        for (field, &bit) in self.fields.iter_mut().zip(plane.bits()) {
            if bit {
                *field |= mask;
            } else {
                *field &= !mask;
            }
        }
        Ok(())
    }

    pub fn class_count(&self, k: usize) -> usize {
        self.fields.iter().filter(|&&f| f >> k & 1 == 1).count()
    }
}

/// Binary map of class `k`.
pub fn extract_class(m: &MultiLabelMap, k: usize) -> Result<EdgeLabelMap, GridError> {
    if k >= m.num_classes {
        return Err(GridError::ClassOutOfRange {
            index: k,
            num_classes: m.num_classes,
        });
    }
    let bits = m.fields.iter().map(|&f| f >> k & 1 == 1).collect();
    EdgeLabelMap::from_bits(m.height, m.width, k, bits)
}

/// Per-class edge probabilities, stored planar (class-major, then row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    height: usize,
    width: usize,
    num_classes: usize,
    values: Vec<f32>,
}

impl ProbMap {
    pub fn from_values(
        height: usize,
        width: usize,
        num_classes: usize,
        values: Vec<f32>,
    ) -> Result<Self, GridError> {
        check_dims(height, width)?;
        if values.len() != height * width * num_classes {
            return Err(GridError::BufferLength {
                expected: height * width * num_classes,
                actual: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(GridError::ProbabilityRange { index, value });
        }
        Ok(Self {
            height,
            width,
            num_classes,
            values,
        })
    }

    pub fn filled(
        height: usize,
        width: usize,
        num_classes: usize,
        value: f32,
    ) -> Result<Self, GridError> {
        Self::from_values(
            height,
            width,
            num_classes,
            vec![value; height * width * num_classes],
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn plane(&self, k: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn get(&self, p: PixelCoord, class: usize) -> f32 {
        self.values[(class * self.height + p.row) * self.width + p.col]
    }

    /// Writes a value, clamped to `[0, 1]`.
    pub fn set(&mut self, p: PixelCoord, class: usize, value: f32) {
        self.values[(class * self.height + p.row) * self.width + p.col] = value.clamp(0.0, 1.0);
    }
}

/// Widens `v` to `f64` and clamps it into `[epsilon, 1 - epsilon]`.
pub fn clamp_prob(v: f32, epsilon: f64) -> f64 {
    (v as f64).max(epsilon).min(1.0 - epsilon)
}

/// Clamps every probability into `[epsilon, 1 - epsilon]`.
pub fn clamp_probs(p: &ProbMap, epsilon: f64) -> Result<ProbMap, GridError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(GridError::EpsilonOutOfRange(epsilon));
    }
    let lo = epsilon as f32;
    let hi = (1.0 - epsilon) as f32;
    Ok(ProbMap {
        values: p.values.iter().map(|&v| v.max(lo).min(hi)).collect(),
        ..p.clone()
    })
}

/// One-to-one correspondence between annotated pixels (sources) and
/// aligned positions (targets). Pairs are kept sorted by source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mapping {
    pairs: Vec<(PixelCoord, PixelCoord)>,
}

impl Mapping {
    pub fn new(mut pairs: Vec<(PixelCoord, PixelCoord)>) -> Self {
        pairs.sort_by_key(|&(src, _)| src);
        Self { pairs }
    }

    pub fn identity(sources: &[PixelCoord]) -> Self {
        Self::new(sources.iter().map(|&q| (q, q)).collect())
    }

    pub fn pairs(&self) -> &[(PixelCoord, PixelCoord)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        self.pairs.iter().map(|&(s, _)| s)
    }

    pub fn targets(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        self.pairs.iter().map(|&(_, t)| t)
    }

    /// Target of `source`, if mapped.
    pub fn target_of(&self, source: PixelCoord) -> Option<PixelCoord> {
        self.pairs
            .binary_search_by_key(&source, |&(s, _)| s)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    /// Assignment vector `target - source` as `(dx, dy)` for every pair.
    pub fn vectors(&self) -> impl Iterator<Item = (PixelCoord, (f64, f64))> + '_ {
        self.pairs.iter().map(|&(s, t)| (s, t.displacement_from(s)))
    }

    /// True when no two sources share a target.
    pub fn is_injective(&self) -> bool {
        let mut targets: Vec<_> = self.targets().collect();
        targets.sort_unstable();
        targets.windows(2).all(|w| w[0] != w[1])
    }
}
