//! Multi-scale detection with scales run in parallel and per-stage timing.

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use salgame_core::pipeline::{average_maps, run_scale_observed, PreparedImage, ScaleReport};
use salgame_core::{BinaryMask, FeatureTensor, PipelineConfig, RgbImage, SaliencyMap, Stage};

use crate::config::RunConfig;
use crate::error::SgResult;
use crate::io;

/// Wall time per stage, summed over scales.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub prepare: Duration,
    pub stages: [Duration; 5],
    pub total: Duration,
}

impl Timings {
    pub fn stage(&self, s: Stage) -> Duration {
        self.stages[Stage::ALL.iter().position(|&x| x == s).expect("stage is listed")]
    }

    /// One `name seconds` line per stage, then the wall-clock total.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!("{:<12} {:>9.4} s", "prepare", self.prepare.as_secs_f64())];
        for (s, d) in Stage::ALL.iter().zip(&self.stages) {
            out.push(format!("{:<12} {:>9.4} s", s.name(), d.as_secs_f64()));
        }
        out.push(format!("{:<12} {:>9.4} s", "total", self.total.as_secs_f64()));
        out
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub map: SaliencyMap,
    /// One report per configured scale, in configuration order.
    pub scales: Vec<ScaleReport>,
    pub timings: Timings,
}

fn timed_scale(prepared: &PreparedImage<'_>, cfg: &PipelineConfig, scale: usize) -> salgame_core::Result<(ScaleReport, [Duration; 5])> {
    let mut marks: Vec<(Stage, Instant)> = Vec::with_capacity(5);
    let report = run_scale_observed(prepared, cfg, scale, &mut |s| marks.push((s, Instant::now())))?;
    let end = Instant::now();
    let mut spent = [Duration::ZERO; 5];
    for (k, &(stage, start)) in marks.iter().enumerate() {
        let stop = marks.get(k + 1).map_or(end, |m| m.1);
        let idx = Stage::ALL.iter().position(|&x| x == stage).expect("stage is listed");
        spent[idx] += stop - start;
    }
    log::debug!("scale {scale}: {} superpixels", report.segmentation.len());
    Ok((report, spent))
}

/// Runs every scale (in parallel when `parallel`) and averages them. The
/// result is bit-identical to the sequential library call.
pub fn detect(
    img: &RgbImage,
    cfg: &PipelineConfig,
    features: Option<&FeatureTensor>,
    proposals: &[BinaryMask],
    parallel: bool,
) -> SgResult<Detection> {
    cfg.validate()?;
    let start = Instant::now();
    let prepared = PreparedImage::new(img, features, proposals)?;
    let prepare = start.elapsed();
    let results: Vec<(ScaleReport, [Duration; 5])> = if parallel {
        cfg.scales.par_iter().map(|&s| timed_scale(&prepared, cfg, s)).collect::<salgame_core::Result<_>>()?
    } else {
        cfg.scales.iter().map(|&s| timed_scale(&prepared, cfg, s)).collect::<salgame_core::Result<_>>()?
    };
    let mut timings = Timings { prepare, ..Timings::default() };
    let maps: Vec<SaliencyMap> = results.iter().map(|(r, _)| r.map.clone()).collect();
    for (_, spent) in &results {
        for (acc, d) in timings.stages.iter_mut().zip(spent) {
            *acc += *d;
        }
    }
    let map = average_maps(&maps)?;
    timings.total = start.elapsed();
    Ok(Detection { map, scales: results.into_iter().map(|(r, _)| r).collect(), timings })
}

/// Loads the feature tensor and proposal masks named by `cfg`.
pub fn load_inputs(img: &RgbImage, cfg: &RunConfig) -> SgResult<(Option<FeatureTensor>, Vec<BinaryMask>)> {
    let features = cfg.feature_tensor.as_deref().map(io::read_ftns).transpose()?;
    let proposals = match cfg.proposals.as_deref() {
        Some(p) => io::read_manifest(p, img.width(), img.height())?,
        None => Vec::new(),
    };
    Ok((features, proposals))
}

/// Reads the image and inputs, then detects.
pub fn detect_file(path: &Path, cfg: &RunConfig, parallel: bool) -> SgResult<Detection> {
    let img = io::read_rgb(path)?;
    let (features, proposals) = load_inputs(&img, cfg)?;
    detect(&img, &cfg.pipeline, features.as_ref(), &proposals, parallel)
}
