//! Images, masks, FTNS tensors, proposal manifests and segmentation dumps.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat, ImageReader};
use salgame_core::{BinaryMask, FeatureTensor, RgbImage, SaliencyMap, Segmentation};
use serde::{Deserialize, Serialize};

use crate::error::{SgError, SgResult};

fn decode(path: &Path) -> SgResult<image::DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| SgError::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| SgError::io(path, e))?;
    reader.decode().map_err(|e| SgError::format(path, e))
}

/// Reads a PNG or binary PPM as 8-bit RGB. Alpha is dropped, gray is
/// replicated, 16-bit samples are truncated to their high byte.
pub fn read_rgb(path: &Path) -> SgResult<RgbImage> {
    let rgb = decode(path)?.into_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(RgbImage::new(w as usize, h as usize, rgb.into_raw())?)
}

/// Reads an 8-bit grayscale image; any nonzero pixel is set.
pub fn read_mask(path: &Path) -> SgResult<BinaryMask> {
    let gray = decode(path)?.into_luma8();
    let (w, h) = gray.dimensions();
    Ok(BinaryMask::from_gray(w as usize, h as usize, gray.as_raw())?)
}

pub fn write_gray_png(path: &Path, width: usize, height: usize, data: Vec<u8>) -> SgResult<()> {
    let img = GrayImage::from_raw(width as u32, height as u32, data)
        .ok_or_else(|| SgError::format(path, "pixel buffer does not match the dimensions"))?;
    img.save_with_format(path, ImageFormat::Png).map_err(|e| SgError::format(path, e))
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> SgResult<()> {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .ok_or_else(|| SgError::format(path, "pixel buffer does not match the dimensions"))?;
    buf.save_with_format(path, ImageFormat::Png).map_err(|e| SgError::format(path, e))
}

/// Saliency as 8-bit grayscale, `round(255·s)`.
pub fn write_map_png(path: &Path, map: &SaliencyMap) -> SgResult<()> {
    write_gray_png(path, map.width(), map.height(), map.to_gray8())
}

pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> SgResult<()> {
    write_gray_png(path, mask.width(), mask.height(), mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect())
}

/// Reads a grayscale PNG back into `[0, 1]` saliency values.
pub fn read_map(path: &Path) -> SgResult<SaliencyMap> {
    let gray = decode(path)?.into_luma8();
    let (w, h) = gray.dimensions();
    let values = gray.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
    Ok(SaliencyMap::new(w as usize, h as usize, values)?)
}

pub fn read_ftns(path: &Path) -> SgResult<FeatureTensor> {
    let bytes = fs::read(path).map_err(|e| SgError::io(path, e))?;
    FeatureTensor::from_ftns(&bytes).map_err(|e| SgError::format(path, e))
}

pub fn write_ftns(path: &Path, t: &FeatureTensor) -> SgResult<()> {
    fs::write(path, t.to_ftns()).map_err(|e| SgError::io(path, e))
}

/// The saliency map as an `H x W x 1` tensor.
pub fn map_tensor(map: &SaliencyMap) -> FeatureTensor {
    let data = map.values().iter().map(|&v| v as f32).collect();
    FeatureTensor::new(map.height(), map.width(), 1, data).expect("saliency values are finite")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub masks: Vec<String>,
}

/// Loads every mask a manifest lists. Paths are relative to the manifest's
/// directory. All masks must be `width x height`.
pub fn read_manifest(path: &Path, width: usize, height: usize) -> SgResult<Vec<BinaryMask>> {
    let text = fs::read_to_string(path).map_err(|e| SgError::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| SgError::format(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    manifest
        .masks
        .iter()
        .map(|name| {
            let mask_path = dir.join(name);
            let m = read_mask(&mask_path)?;
            if m.width() != width || m.height() != height {
                return Err(SgError::format(
                    &mask_path,
                    format!("mask is {}x{}, image is {width}x{height}", m.width(), m.height()),
                ));
            }
            Ok(m)
        })
        .collect()
}

/// Writes `m0.png, m1.png, ...` (0/255) and `manifest.json` into `dir`.
pub fn write_manifest(dir: &Path, masks: &[BinaryMask]) -> SgResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| SgError::io(dir, e))?;
    let mut names = Vec::with_capacity(masks.len());
    for (i, m) in masks.iter().enumerate() {
        let name = format!("m{i}.png");
        write_mask_png(&dir.join(&name), m)?;
        names.push(name);
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&Manifest { masks: names }).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| SgError::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct SegmentationDump<'a> {
    n: usize,
    centroids: &'a [(f64, f64)],
    boundary: &'a [usize],
}

/// Debug export: `<stem>.png` holds `label mod 256`, `<stem>.json` holds
/// `{n, centroids, boundary}`.
pub fn write_segmentation(dir: &Path, stem: &str, seg: &Segmentation) -> SgResult<()> {
    fs::create_dir_all(dir).map_err(|e| SgError::io(dir, e))?;
    let labels = seg.labels().iter().map(|&l| (l % 256) as u8).collect();
    write_gray_png(&dir.join(format!("{stem}.png")), seg.width(), seg.height(), labels)?;
    let dump = SegmentationDump { n: seg.len(), centroids: seg.centroids(), boundary: seg.boundary() };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string(&dump).expect("dump serializes")).map_err(|e| SgError::io(&path, e))
}
