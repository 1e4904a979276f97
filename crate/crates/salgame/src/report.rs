//! Batch evaluation of saliency maps against ground-truth masks.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use salgame_core::eval::{adaptive_f_measure, auc, pr_curve, PrCurve};
use serde::Serialize;

use crate::error::{SgError, SgResult};
use crate::io;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "pgm"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageScore {
    pub image: String,
    pub f_adaptive: f64,
    pub auc: f64,
    #[serde(skip)]
    pub curve: PrCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sorted by image name.
    pub images: Vec<ImageScore>,
    pub mean_f: f64,
    pub mean_auc: f64,
}

fn image_files(dir: &Path) -> SgResult<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| SgError::io(dir, e))? {
        let path = entry.map_err(|e| SgError::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !path.is_file() || !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// Pairs maps and masks by file stem. Any name present on only one side is
/// a usage error that lists the differences.
pub fn pair_files(map_dir: &Path, gt_dir: &Path) -> SgResult<Vec<(String, PathBuf, PathBuf)>> {
    let maps = image_files(map_dir)?;
    let gts = image_files(gt_dir)?;
    let only_maps: Vec<&str> = maps.keys().filter(|k| !gts.contains_key(*k)).map(String::as_str).collect();
    let only_gts: Vec<&str> = gts.keys().filter(|k| !maps.contains_key(*k)).map(String::as_str).collect();
    if !only_maps.is_empty() || !only_gts.is_empty() {
        return Err(SgError::Usage(format!(
            "map and ground-truth sets differ: without ground truth [{}]; without map [{}]",
            only_maps.join(", "),
            only_gts.join(", ")
        )));
    }
    if maps.is_empty() {
        return Err(SgError::Usage(format!("no images found in {}", map_dir.display())));
    }
    Ok(maps.into_iter().map(|(k, m)| (k.clone(), m, gts[&k].clone())).collect())
}

fn score(name: &str, map_path: &Path, gt_path: &Path) -> SgResult<ImageScore> {
    let map = io::read_map(map_path)?;
    let gt = io::read_mask(gt_path)?;
    Ok(ImageScore {
        image: name.to_string(),
        f_adaptive: adaptive_f_measure(&map, &gt)?,
        auc: auc(&map, &gt)?,
        curve: pr_curve(&map, &gt)?,
    })
}

/// Scores every pair, `jobs` at a time (0 = one per core). Means are
/// accumulated in name order, so they do not depend on scheduling.
pub fn evaluate_dirs(map_dir: &Path, gt_dir: &Path, jobs: usize) -> SgResult<EvalReport> {
    let pairs = pair_files(map_dir, gt_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SgError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    let images: Vec<ImageScore> =
        pool.install(|| pairs.par_iter().map(|(name, m, g)| score(name, m, g)).collect::<SgResult<_>>())?;
    let k = images.len() as f64;
    let mean_f = images.iter().map(|s| s.f_adaptive).sum::<f64>() / k;
    let mean_auc = images.iter().map(|s| s.auc).sum::<f64>() / k;
    Ok(EvalReport { images, mean_f, mean_auc })
}

#[derive(Serialize)]
struct CurveDump<'a> {
    image: &'a str,
    thresholds: &'a [f64],
    precision: &'a [f64],
    recall: &'a [f64],
    f_measure: Vec<f64>,
    tpr: &'a [f64],
    fpr: &'a [f64],
}

/// Writes `scores.csv` (`image,f_adaptive,auc`) and `curves.json`.
pub fn write_report(report: &EvalReport, out_dir: &Path) -> SgResult<()> {
    fs::create_dir_all(out_dir).map_err(|e| SgError::io(out_dir, e))?;
    let csv_path = out_dir.join("scores.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| SgError::format(&csv_path, e))?;
    for s in &report.images {
        w.serialize(s).map_err(|e| SgError::format(&csv_path, e))?;
    }
    w.flush().map_err(|e| SgError::io(&csv_path, e))?;

    let curves: Vec<CurveDump<'_>> = report
        .images
        .iter()
        .map(|s| CurveDump {
            image: &s.image,
            thresholds: &s.curve.thresholds,
            precision: &s.curve.precision,
            recall: &s.curve.recall,
            f_measure: s.curve.f_measures(),
            tpr: &s.curve.tpr,
            fpr: &s.curve.fpr,
        })
        .collect();
    let json_path = out_dir.join("curves.json");
    fs::write(&json_path, serde_json::to_string(&curves).expect("curves serialize")).map_err(|e| SgError::io(&json_path, e))
}
