//! End-to-end detector: per scale, segment, describe, play the saliency game
//! in both feature spaces, refine with the iterative random walk, combine;
//! then average the scales.

use alloc::vec;
use alloc::vec::Vec;

use crate::color::{rgb_to_lab, Lab};
use crate::error::{Error, Result};
use crate::features::{affinity, color_histogram, pool_deep_features, AffinityMatrix, FeatureTensor};
use crate::game::{init_profile, objectness_prior, position_prior, Equilibrium, GameInstance, InitKind, PayoffParams, Priors};
use crate::image::{min_max_normalize, BinaryMask, RgbImage, SaliencyMap};
use crate::randomwalk::{build_walk_matrices, combine, iterate_irw, WalkState};
use crate::segmentation::{slic_on_lab, Segmentation, SlicParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Superpixel counts, one run per entry.
    pub scales: Vec<usize>,
    /// Bandwidth of both affinities and the position prior.
    pub sigma: f64,
    pub epsilon: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Random-walk rounds.
    pub rounds: usize,
    /// Weight of the color-space labels in the final combination.
    pub rho1: f64,
    /// Weight of the deep-space labels.
    pub rho2: f64,
    pub init: InitKind,
    pub max_iters: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scales: vec![100, 150, 200, 250],
            sigma: 0.1,
            epsilon: 1e-4,
            lambda1: 2.1e-6,
            lambda2: 9e-7,
            alpha: 0.007,
            beta: 1.0,
            rounds: 20,
            rho1: 0.3,
            rho2: 0.7,
            init: InitKind::Half,
            max_iters: 10_000,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() || self.scales.contains(&0) {
            return Err(Error::invalid("scales must be a nonempty list of positive counts"));
        }
        let positive = [self.sigma, self.epsilon, self.lambda1, self.lambda2, self.alpha, self.beta];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("numeric parameters must be positive and finite"));
        }
        // a zero weight switches one feature space off
        let rho = [self.rho1, self.rho2];
        if rho.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || self.rho1 + self.rho2 <= 0.0 {
            return Err(Error::invalid("rho1 and rho2 must be nonnegative and not both zero"));
        }
        if self.rounds == 0 || self.max_iters == 0 {
            return Err(Error::invalid("T and max_iters must be positive"));
        }
        Ok(())
    }

    pub fn payoff_params(&self) -> PayoffParams {
        PayoffParams {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            alpha: self.alpha,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            const_birthrate: None,
        }
    }
}

/// Pipeline stages, reported to observers as each one starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Segment,
    Features,
    Game,
    RandomWalk,
    Render,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Segment, Stage::Features, Stage::Game, Stage::RandomWalk, Stage::Render];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Segment => "segment",
            Stage::Features => "features",
            Stage::Game => "game",
            Stage::RandomWalk => "random-walk",
            Stage::Render => "render",
        }
    }
}

/// Per-image data shared by every scale.
#[derive(Debug, Clone)]
pub struct PreparedImage<'a> {
    pub image: &'a RgbImage,
    pub lab: Vec<Lab>,
    /// Deep feature map: the supplied tensor or the blurred-Lab stand-in.
    pub deep: FeatureTensor,
    pub proposals: &'a [BinaryMask],
}

impl<'a> PreparedImage<'a> {
    pub fn new(image: &'a RgbImage, features: Option<&FeatureTensor>, proposals: &'a [BinaryMask]) -> Result<Self> {
        for m in proposals {
            if m.width() != image.width() || m.height() != image.height() {
                return Err(Error::invalid("proposal masks must match the image resolution"));
            }
        }
        let lab = rgb_to_lab(image);
        let deep = match features {
            Some(t) => t.clone(),
            None => blurred_lab_tensor(image.width(), image.height(), &lab),
        };
        Ok(Self { image, lab, deep, proposals })
    }
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            libm::exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Lab channels blurred with a Gaussian whose support radius is 5% of the
/// image diagonal (σ = radius / 2), as a 3-channel tensor at full resolution.
pub fn blurred_lab_tensor(width: usize, height: usize, lab: &[Lab]) -> FeatureTensor {
    let diag = libm::sqrt((width * width + height * height) as f64);
    let radius = (libm::round(0.05 * diag) as usize).max(1);
    let kernel = gaussian_kernel(radius as f64 / 2.0, radius);
    let mut planes: Vec<Vec<f64>> = vec![
        lab.iter().map(|c| c.l).collect(),
        lab.iter().map(|c| c.a).collect(),
        lab.iter().map(|c| c.b).collect(),
    ];
    let mut tmp = vec![0.0; width * height];
    for plane in planes.iter_mut() {
        for y in 0..height {
            for x in 0..width {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    let sx = (x + k).saturating_sub(radius).min(width - 1);
                    acc += w * plane[y * width + sx];
                }
                tmp[y * width + x] = acc;
            }
        }
        for y in 0..height {
            for x in 0..width {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    let sy = (y + k).saturating_sub(radius).min(height - 1);
                    acc += w * tmp[sy * width + x];
                }
                plane[y * width + x] = acc;
            }
        }
    }
    let data = (0..width * height).flat_map(|p| [planes[0][p] as f32, planes[1][p] as f32, planes[2][p] as f32]).collect();
    FeatureTensor::new(height, width, 3, data).expect("blurred Lab is finite")
}

/// Boundary-contrast prior used by [`InitKind::Prior`]: one minus the mean
/// affinity to the border superpixels, min-max normalized.
pub fn boundary_contrast_prior(seg: &Segmentation, a: &AffinityMatrix) -> Vec<f64> {
    let border = seg.boundary();
    let mut prior: Vec<f64> = (0..seg.len())
        .map(|i| {
            let others: Vec<f64> = border.iter().filter(|&&b| b != i).map(|&b| a.get(i, b)).collect();
            if others.is_empty() {
                0.0
            } else {
                1.0 - others.iter().sum::<f64>() / others.len() as f64
            }
        })
        .collect();
    min_max_normalize(&mut prior);
    prior
}

/// Everything produced at one scale.
#[derive(Debug, Clone)]
pub struct ScaleReport {
    pub segmentation: Segmentation,
    pub color_game: Equilibrium,
    pub deep_game: Equilibrium,
    /// Random-walk labels after the last round.
    pub l_c: Vec<f64>,
    pub l_d: Vec<f64>,
    /// Combined per-superpixel saliency.
    pub saliency: Vec<f64>,
    pub map: SaliencyMap,
}

fn play(a: AffinityMatrix, seg: &Segmentation, priors: &Priors, cfg: &PipelineConfig) -> Result<Equilibrium> {
    let prior_map = (cfg.init == InitKind::Prior).then(|| boundary_contrast_prior(seg, &a));
    let init = init_profile(cfg.init, seg, priors, prior_map.as_deref())?;
    let game = GameInstance::new(a, priors.clone(), cfg.payoff_params())?;
    game.solve(init)
}

/// Runs one scale, calling `observe` as each stage starts.
pub fn run_scale_observed(
    prepared: &PreparedImage<'_>,
    cfg: &PipelineConfig,
    scale: usize,
    observe: &mut dyn FnMut(Stage),
) -> Result<ScaleReport> {
    cfg.validate()?;
    let img = prepared.image;
    observe(Stage::Segment);
    let seg = slic_on_lab(img.width(), img.height(), &prepared.lab, scale, SlicParams::default())?;

    observe(Stage::Features);
    let a_c = affinity(&color_histogram(&seg, &prepared.lab, cfg.sigma)?);
    let a_d = affinity(&pool_deep_features(&seg, &prepared.deep, cfg.sigma)?);

    observe(Stage::Game);
    let priors = Priors::new(position_prior(&seg, cfg.sigma), objectness_prior(&seg, prepared.proposals)?)?;
    let walk = build_walk_matrices(&a_d, &a_c, seg.neighbor_sets())?;
    let color_game = play(a_c, &seg, &priors, cfg)?;
    let deep_game = play(a_d, &seg, &priors, cfg)?;

    observe(Stage::RandomWalk);
    let mut l_c = color_game.profile.foreground();
    let mut l_d = deep_game.profile.foreground();
    min_max_normalize(&mut l_c);
    min_max_normalize(&mut l_d);
    let state = iterate_irw(WalkState::new(walk, l_d, l_c, cfg.beta)?, cfg.rounds)?;

    observe(Stage::Render);
    let saliency = combine(&state.l_c, &state.l_d, cfg.rho1, cfg.rho2);
    let map = SaliencyMap::new(img.width(), img.height(), seg.paint(&saliency))?;
    Ok(ScaleReport { segmentation: seg, color_game, deep_game, l_c: state.l_c, l_d: state.l_d, saliency, map })
}

pub fn run_scale(prepared: &PreparedImage<'_>, cfg: &PipelineConfig, scale: usize) -> Result<ScaleReport> {
    run_scale_observed(prepared, cfg, scale, &mut |_| {})
}

/// Saliency map of one scale. Without a feature tensor the blurred-Lab
/// stand-in supplies the deep space.
pub fn run_single_scale(
    img: &RgbImage,
    cfg: &PipelineConfig,
    scale: usize,
    features: Option<&FeatureTensor>,
    proposals: &[BinaryMask],
) -> Result<SaliencyMap> {
    let prepared = PreparedImage::new(img, features, proposals)?;
    Ok(run_scale(&prepared, cfg, scale)?.map)
}

/// Pixel-wise mean of equally sized maps, min-max normalized.
pub fn average_maps(maps: &[SaliencyMap]) -> Result<SaliencyMap> {
    let first = maps.first().ok_or_else(|| Error::invalid("no maps to average"))?;
    let (w, h) = (first.width(), first.height());
    if maps.iter().any(|m| m.width() != w || m.height() != h) {
        return Err(Error::invalid("maps differ in size"));
    }
    let mut acc = vec![0.0; w * h];
    for m in maps {
        acc.iter_mut().zip(m.values()).for_each(|(a, v)| *a += v);
    }
    let k = maps.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    min_max_normalize(&mut acc);
    SaliencyMap::new(w, h, acc)
}

/// Runs every configured scale in order and averages them.
pub fn run_multiscale(
    img: &RgbImage,
    cfg: &PipelineConfig,
    features: Option<&FeatureTensor>,
    proposals: &[BinaryMask],
) -> Result<SaliencyMap> {
    cfg.validate()?;
    let prepared = PreparedImage::new(img, features, proposals)?;
    let maps = cfg.scales.iter().map(|&s| run_scale(&prepared, cfg, s).map(|r| r.map)).collect::<Result<Vec<_>>>()?;
    average_maps(&maps)
}
