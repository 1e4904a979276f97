//! sRGB to CIE-Lab (D65 white point, 2 degree observer).

use alloc::vec::Vec;

use crate::image::RgbImage;

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

/// A CIE-Lab triplet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

fn linearize(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        libm::pow((c + 0.055) / 1.055, 2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        libm::cbrt(t)
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one 8-bit sRGB color.
pub fn srgb_to_lab(rgb: [u8; 3]) -> Lab {
    let [r, g, b] = rgb.map(linearize);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let fx = lab_f(x / WHITE[0]);
    let fy = lab_f(y / WHITE[1]);
    let fz = lab_f(z / WHITE[2]);
    Lab {
        l: (116.0 * fy - 16.0).clamp(0.0, 100.0),
        a: (500.0 * (fx - fy)).clamp(-128.0, 127.0),
        b: (200.0 * (fy - fz)).clamp(-128.0, 127.0),
    }
}

/// Per-pixel Lab values in row-major order.
pub fn rgb_to_lab(img: &RgbImage) -> Vec<Lab> {
    img.data().chunks_exact(3).map(|p| srgb_to_lab([p[0], p[1], p[2]])).collect()
}
