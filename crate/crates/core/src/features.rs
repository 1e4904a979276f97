//! Per-superpixel descriptors and the Gaussian affinities built on them.
//!
//! Two descriptor spaces are supported: 512-bin CIE-Lab histograms compared
//! with the chi-square distance, and pooled deep feature vectors compared with
//! the Euclidean distance. Deep features arrive as an FTNS tensor:
//!
//! ```text
//! offset  size       content
//! 0       4          b"FTNS"
//! 4       4          H  (u32 LE)
//! 8       4          W  (u32 LE)
//! 12      4          C  (u32 LE)
//! 16      4*H*W*C    f32 LE values, [row][col][channel]
//! ```

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::color::Lab;
use crate::error::{Error, Result};
use crate::segmentation::Segmentation;

/// Bins per Lab axis.
pub const HIST_BINS_PER_AXIS: usize = 8;
/// Length of a color histogram.
pub const HIST_LEN: usize = HIST_BINS_PER_AXIS * HIST_BINS_PER_AXIS * HIST_BINS_PER_AXIS;
/// Guard added to chi-square denominators.
pub const CHI2_GUARD: f64 = 1e-10;

const FTNS_MAGIC: &[u8; 4] = b"FTNS";
const FTNS_HEADER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Color,
    Deep,
}

/// `N` descriptors of one dimension plus the bandwidth used to compare them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    kind: FeatureKind,
    dim: usize,
    vectors: Vec<f64>,
    sigma: f64,
}

impl FeatureSpace {
    pub fn new(kind: FeatureKind, dim: usize, vectors: Vec<f64>, sigma: f64) -> Result<Self> {
        if dim == 0 || vectors.len() % dim != 0 {
            return Err(Error::invalid("feature vectors do not share one dimension"));
        }
        if !(sigma > 0.0) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature vectors must be finite"));
        }
        if kind == FeatureKind::Color {
            for row in vectors.chunks_exact(dim) {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("color histograms must be nonnegative and sum to 1"));
                }
            }
        }
        Ok(Self { kind, dim, vectors, sigma })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }
}

/// Dense symmetric `N x N` affinity with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl AffinityMatrix {
    /// Checks symmetry, the unit diagonal and the `(0, 1]` range.
    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::invalid("affinity matrix must be N x N"));
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::invalid("affinity diagonal must be 1"));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v > 0.0 && v <= 1.0) || v != values[j * n + i] {
                    return Err(Error::invalid("affinity must be symmetric with entries in (0, 1]"));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn bin(value: f64, lo: f64, hi: f64) -> usize {
    let t = (value - lo) / (hi - lo) * HIST_BINS_PER_AXIS as f64;
    (libm::floor(t).max(0.0) as usize).min(HIST_BINS_PER_AXIS - 1)
}

/// Histogram bin of one Lab color on the uniform 8x8x8 partition of
/// `L in [0, 100]`, `a, b in [-128, 127]`.
pub fn lab_bin(c: Lab) -> usize {
    let l = bin(c.l, 0.0, 100.0);
    let a = bin(c.a, -128.0, 127.0);
    let b = bin(c.b, -128.0, 127.0);
    (l * HIST_BINS_PER_AXIS + a) * HIST_BINS_PER_AXIS + b
}

/// L1-normalized 512-bin Lab histogram of every superpixel.
pub fn color_histogram(seg: &Segmentation, lab: &[Lab], sigma: f64) -> Result<FeatureSpace> {
    if lab.len() != seg.labels().len() {
        return Err(Error::invalid("Lab raster does not match the segmentation"));
    }
    let n = seg.len();
    let mut counts = vec![0usize; n * HIST_LEN];
    for (&l, &c) in seg.labels().iter().zip(lab) {
        counts[l * HIST_LEN + lab_bin(c)] += 1;
    }
    let vectors = counts
        .chunks_exact(HIST_LEN)
        .zip(seg.sizes())
        .flat_map(|(row, &size)| row.iter().map(move |&c| c as f64 / size as f64))
        .collect();
    FeatureSpace::new(FeatureKind::Color, HIST_LEN, vectors, sigma)
}

/// `½ Σ (a−b)² / (a+b+ε₀)`.
pub fn chi_square(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d / (x + y + CHI2_GUARD)
        })
        .sum::<f64>()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Gaussian affinity `exp(−d/σ²)` where `d` is chi-square for color spaces
/// and squared Euclidean distance for deep spaces. Entries are clamped below
/// at the smallest positive normal so the matrix stays strictly positive.
pub fn affinity(space: &FeatureSpace) -> AffinityMatrix {
    let n = space.len();
    let s2 = space.sigma * space.sigma;
    let mut values = vec![1.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = match space.kind {
                FeatureKind::Color => chi_square(space.vector(i), space.vector(j)),
                FeatureKind::Deep => squared_euclidean(space.vector(i), space.vector(j)),
            };
            let a = libm::exp(-d / s2).clamp(f64::MIN_POSITIVE, 1.0);
            values[i * n + j] = a;
            values[j * n + i] = a;
        }
    }
    AffinityMatrix { n, values }
}

/// Dense `H x W x C` float32 feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid("tensor dimensions must be positive"));
        }
        if data.len() != height * width * channels {
            return Err(Error::invalid("tensor data length does not match its dimensions"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tensor values must be finite"));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn at(&self, row: usize, col: usize) -> &[f32] {
        let o = (row * self.width + col) * self.channels;
        &self.data[o..o + self.channels]
    }

    /// Serializes to the FTNS byte layout.
    pub fn to_ftns(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FTNS_HEADER + 4 * self.data.len());
        out.extend_from_slice(FTNS_MAGIC);
        for d in [self.height, self.width, self.channels] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the FTNS byte layout. Errors carry the offending byte offset.
    pub fn from_ftns(bytes: &[u8]) -> Result<Self> {
        let fail = |offset: usize, reason: &str| Error::Format { offset, reason: reason.to_string() };
        if bytes.len() < 4 || &bytes[..4] != FTNS_MAGIC {
            return Err(fail(0, "missing FTNS magic"));
        }
        if bytes.len() < FTNS_HEADER {
            return Err(fail(bytes.len(), "truncated header"));
        }
        let dim = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize;
        let (height, width, channels) = (dim(4), dim(8), dim(12));
        for (o, d) in [(4, height), (8, width), (12, channels)] {
            if d == 0 {
                return Err(fail(o, "zero dimension"));
            }
        }
        let count = height
            .checked_mul(width)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| fail(4, "dimensions overflow"))?;
        let expected = count.checked_mul(4).and_then(|v| v.checked_add(FTNS_HEADER));
        match expected {
            Some(e) if bytes.len() < e => return Err(fail(bytes.len(), "truncated data")),
            Some(e) if bytes.len() > e => return Err(fail(e, "trailing bytes after data")),
            None => return Err(fail(4, "dimensions overflow")),
            _ => {}
        }
        let mut data = Vec::with_capacity(count);
        for (k, chunk) in bytes[FTNS_HEADER..].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(fail(FTNS_HEADER + 4 * k, "non-finite value"));
            }
            data.push(v);
        }
        Ok(Self { height, width, channels, data })
    }
}

/// Source sample positions for half-pixel-centered linear resampling of one
/// axis: `(lower index, upper index, upper weight)`.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = libm::floor(s) as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// Calls `visit(row, col, values)` with the bilinearly resampled channel
/// vector of every output pixel, without materializing the resized tensor.
fn for_each_resampled(t: &FeatureTensor, height: usize, width: usize, mut visit: impl FnMut(usize, usize, &[f64])) {
    let rows = axis_taps(t.height, height);
    let cols = axis_taps(t.width, width);
    let mut buf = vec![0.0f64; t.channels];
    for (r, &(y0, y1, fy)) in rows.iter().enumerate() {
        for (c, &(x0, x1, fx)) in cols.iter().enumerate() {
            let (a, b, cc, d) = (t.at(y0, x0), t.at(y0, x1), t.at(y1, x0), t.at(y1, x1));
            for k in 0..t.channels {
                let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
                let bottom = cc[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
                buf[k] = top * (1.0 - fy) + bottom * fy;
            }
            visit(r, c, &buf);
        }
    }
}

/// Bilinear resize with half-pixel-centered sampling and edge clamping.
pub fn resize_bilinear(t: &FeatureTensor, height: usize, width: usize) -> FeatureTensor {
    let mut data = Vec::with_capacity(height * width * t.channels);
    for_each_resampled(t, height, width, |_, _, v| data.extend(v.iter().map(|&x| x as f32)));
    FeatureTensor { height, width, channels: t.channels, data }
}

/// Per-superpixel channel means of the tensor resampled to the image size.
pub fn pool_mean(seg: &Segmentation, t: &FeatureTensor) -> Vec<f64> {
    let c = t.channels;
    let mut sums = vec![0.0f64; seg.len() * c];
    let labels = seg.labels();
    let width = seg.width();
    for_each_resampled(t, seg.height(), width, |r, col, v| {
        let l = labels[r * width + col];
        for (s, &x) in sums[l * c..(l + 1) * c].iter_mut().zip(v) {
            *s += x;
        }
    });
    for (row, &size) in sums.chunks_exact_mut(c).zip(seg.sizes()) {
        row.iter_mut().for_each(|s| *s /= size as f64);
    }
    sums
}

/// Pooled deep descriptors, each scaled to unit Euclidean norm. A zero
/// pooled vector is left as zero.
pub fn pool_deep_features(seg: &Segmentation, t: &FeatureTensor, sigma: f64) -> Result<FeatureSpace> {
    let c = t.channels;
    let mut vectors = pool_mean(seg, t);
    for row in vectors.chunks_exact_mut(c) {
        let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    FeatureSpace::new(FeatureKind::Deep, c, vectors, sigma)
}
