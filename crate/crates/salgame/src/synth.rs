//! Deterministic synthetic scenes with exact ground truth.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salgame_core::{BinaryMask, RgbImage};

/// Scene families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneKind {
    /// A red square covering the central quarter of the frame.
    CenteredSquare,
    /// A disk placed away from the center.
    OffCenterBlob,
    /// A bar that runs into the bottom edge of the frame.
    BoundaryTouching,
    /// Two separated disks.
    TwoObject,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] =
        [SceneKind::CenteredSquare, SceneKind::OffCenterBlob, SceneKind::BoundaryTouching, SceneKind::TwoObject];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::CenteredSquare => "centered-square",
            SceneKind::OffCenterBlob => "off-center-blob",
            SceneKind::BoundaryTouching => "boundary-touching",
            SceneKind::TwoObject => "two-object",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scene kind `{s}`"))
    }
}

/// An image with its ground-truth mask.
#[derive(Debug, Clone)]
pub struct Scene {
    pub kind: SceneKind,
    pub image: RgbImage,
    pub truth: BinaryMask,
}

const BACKGROUND: [u8; 3] = [128, 128, 128];
const NOISE: i16 = 6;

/// Renders `kind` at `width x height`. The seed drives pixel noise and, for
/// the blob scenes, object placement.
pub fn generate(kind: SceneKind, width: usize, height: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let (w, h) = (width as f64, height as f64);
    let short = w.min(h);
    let mut truth = BinaryMask::empty(width, height);
    let mut color = vec![BACKGROUND; width * height];

    let mut paint = |inside: &dyn Fn(f64, f64) -> bool, rgb: [u8; 3]| {
        for y in 0..height {
            for x in 0..width {
                if inside(x as f64 + 0.5, y as f64 + 0.5) {
                    truth.set(x, y, true);
                    color[y * width + x] = rgb;
                }
            }
        }
    };

    match kind {
        SceneKind::CenteredSquare => {
            let (x0, x1) = (width / 4, 3 * width / 4);
            let (y0, y1) = (height / 4, 3 * height / 4);
            paint(
                &|x, y| (x0 as f64..x1 as f64).contains(&x) && (y0 as f64..y1 as f64).contains(&y),
                [200, 40, 40],
            );
        }
        SceneKind::OffCenterBlob => {
            let r = 0.2 * short;
            let cx = w * rng.gen_range(0.25..0.35);
            let cy = h * rng.gen_range(0.3..0.7);
            paint(&|x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r, [40, 70, 200]);
        }
        SceneKind::BoundaryTouching => {
            let (x0, x1) = (0.3 * w, 0.7 * w);
            let y0 = 0.4 * h;
            paint(&|x, y| x >= x0 && x < x1 && y >= y0, [40, 170, 60]);
        }
        SceneKind::TwoObject => {
            let r = 0.14 * short;
            let cy = h * rng.gen_range(0.4..0.6);
            let (ax, bx) = (0.3 * w, 0.7 * w);
            paint(&|x, y| (x - ax).powi(2) + (y - cy).powi(2) <= r * r, [210, 60, 50]);
            paint(&|x, y| (x - bx).powi(2) + (y - cy).powi(2) <= r * r, [220, 180, 40]);
        }
    }

    let mut data = Vec::with_capacity(width * height * 3);
    for rgb in color {
        for c in rgb {
            let v = c as i16 + rng.gen_range(-NOISE..=NOISE);
            data.push(v.clamp(0, 255) as u8);
        }
    }
    let image = RgbImage::new(width, height, data).expect("scene dimensions are valid");
    Scene { kind, image, truth }
}
