//! The saliency game: every superpixel is a player choosing background (0) or
//! foreground (1), playing a two-strategy game against every other player.
//!
//! The pairwise payoff of player `i` against `j` is
//! `λ₁·pos_i(s_i) + λ₂·obj_i(s_i) + spt_ij(s_i, s_j)` where the support term is
//! `A(i,j) − (α/N)Σ_k A(i,k)` when both pick the same strategy and zero
//! otherwise. The pairwise 2x2 matrices are never built; the payoff of a pure
//! strategy against a mixed profile collapses to
//!
//! ```text
//! U[i][h] = (N−1)(λ₁ pos_i(h) + λ₂ obj_i(h)) + Σ_{j≠i} z_j^h (A(i,j) − offset_i)
//! ```
//!
//! which costs `O(N)` per player. Equilibria are found with discrete-time
//! replicator dynamics.

use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::features::AffinityMatrix;
use crate::image::{min_max_normalize, BinaryMask, SaliencyMap};
use crate::segmentation::Segmentation;

/// Background strategy index.
pub const BACKGROUND: usize = 0;
/// Foreground strategy index.
pub const FOREGROUND: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffParams {
    /// Position prior weight.
    pub lambda1: f64,
    /// Objectness prior weight.
    pub lambda2: f64,
    /// Support penalty.
    pub alpha: f64,
    /// L∞ convergence threshold on successive profiles.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Background birthrate. `None` derives a value that keeps every
    /// replicator denominator positive.
    pub const_birthrate: Option<f64>,
}

impl Default for PayoffParams {
    fn default() -> Self {
        Self {
            lambda1: 2.1e-6,
            lambda2: 9e-7,
            alpha: 0.007,
            epsilon: 1e-4,
            max_iters: 10_000,
            const_birthrate: None,
        }
    }
}

impl PayoffParams {
    fn validate(&self) -> Result<()> {
        let positive = [self.lambda1, self.lambda2, self.alpha, self.epsilon];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Configuration("lambda1, lambda2, alpha and epsilon must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Configuration("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Position and objectness payoffs for each pure strategy, each pair summing
/// to `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub pos1: Vec<f64>,
    pub pos0: Vec<f64>,
    pub obj1: Vec<f64>,
    pub obj0: Vec<f64>,
}

impl Priors {
    pub fn new(pos: (Vec<f64>, Vec<f64>), obj: (Vec<f64>, Vec<f64>)) -> Result<Self> {
        let n = pos.0.len();
        if [pos.1.len(), obj.0.len(), obj.1.len()].iter().any(|&l| l != n) {
            return Err(Error::invalid("prior vectors differ in length"));
        }
        let cap = 1.0 / n as f64;
        for (one, zero) in [(&pos.0, &pos.1), (&obj.0, &obj.1)] {
            for (&a, &b) in one.iter().zip(zero.iter()) {
                if !(a >= -1e-15 && b >= -1e-15 && a <= cap + 1e-12 && b <= cap + 1e-12) || (a + b - cap).abs() > 1e-12 {
                    return Err(Error::invalid("prior entries must lie in [0, 1/N] and pair up to 1/N"));
                }
            }
        }
        Ok(Self { pos1: pos.0, pos0: pos.1, obj1: obj.0, obj0: obj.1 })
    }

    /// Zero position weight and neutral objectness, for tests and ablations.
    pub fn neutral(n: usize) -> Self {
        let half = 0.5 / n as f64;
        Self { pos1: vec![half; n], pos0: vec![half; n], obj1: vec![half; n], obj0: vec![half; n] }
    }

    pub fn len(&self) -> usize {
        self.pos1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos1.is_empty()
    }

    fn pos(&self, i: usize, h: usize) -> f64 {
        if h == FOREGROUND { self.pos1[i] } else { self.pos0[i] }
    }

    fn obj(&self, i: usize, h: usize) -> f64 {
        if h == FOREGROUND { self.obj1[i] } else { self.obj0[i] }
    }
}

/// Center prior. Centroids and the image center are first mapped to `[0,1]²`
/// (pixel 0 to 0, last pixel to 1), then `pos1 = exp(−d²/σ)/N` and
/// `pos0 = (1 − exp(−d²/σ))/N`. Note the exponent divides by `σ`, not `σ²`.
pub fn position_prior(seg: &Segmentation, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let n = seg.len() as f64;
    let sx = (seg.width().max(2) - 1) as f64;
    let sy = (seg.height().max(2) - 1) as f64;
    seg.centroids()
        .iter()
        .map(|&(x, y)| {
            let dx = x / sx - 0.5;
            let dy = y / sy - 0.5;
            let g = libm::exp(-(dx * dx + dy * dy) / sigma);
            (g / n, (1.0 - g) / n)
        })
        .unzip()
}

/// Objectness prior from binary proposal masks: the mean overlap ratio
/// `|O_j ∩ P_i| / |P_i|` over proposals, scaled by `1/N`. With no proposals
/// both strategies get the neutral `1/(2N)`.
pub fn objectness_prior(seg: &Segmentation, proposals: &[BinaryMask]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = seg.len();
    let inv_n = 1.0 / n as f64;
    if proposals.is_empty() {
        return Ok((vec![0.5 * inv_n; n], vec![0.5 * inv_n; n]));
    }
    for m in proposals {
        if m.width() != seg.width() || m.height() != seg.height() {
            return Err(Error::invalid(alloc::format!(
                "proposal mask is {}x{}, image is {}x{}",
                m.width(),
                m.height(),
                seg.width(),
                seg.height()
            )));
        }
    }
    let mut ratio_sum = vec![0.0f64; n];
    let mut overlap = vec![0usize; n];
    for m in proposals {
        overlap.iter_mut().for_each(|c| *c = 0);
        for (&l, &on) in seg.labels().iter().zip(m.bits()) {
            if on {
                overlap[l] += 1;
            }
        }
        for i in 0..n {
            ratio_sum[i] += overlap[i] as f64 / seg.sizes()[i] as f64;
        }
    }
    let no = proposals.len() as f64;
    let obj1: Vec<f64> = ratio_sum.iter().map(|&r| r / (n as f64 * no)).collect();
    let obj0 = obj1.iter().map(|&o| (inv_n - o).max(0.0)).collect();
    Ok((obj1, obj0))
}

/// One `(z⁰, z¹)` row per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    rows: Vec<[f64; 2]>,
}

impl MixedProfile {
    /// Validates that every row is a point of the 2-simplex.
    pub fn new(rows: Vec<[f64; 2]>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if !(r[0] >= 0.0 && r[1] >= 0.0) || (r[0] + r[1] - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(alloc::format!("row {i} is not a mixed strategy: {r:?}")));
            }
        }
        Ok(Self { rows })
    }

    /// Every player mixes 50/50.
    pub fn uniform(n: usize) -> Self {
        Self { rows: vec![[0.5, 0.5]; n] }
    }

    /// Pure profile from foreground flags.
    pub fn pure(foreground: &[bool]) -> Self {
        Self { rows: foreground.iter().map(|&f| if f { [0.0, 1.0] } else { [1.0, 0.0] }).collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    /// Foreground probabilities `z¹`.
    pub fn foreground(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[FOREGROUND]).collect()
    }

    /// Nearest pure profile (ties go to foreground).
    pub fn rounded(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r[FOREGROUND] >= r[BACKGROUND]).collect()
    }

    /// Largest absolute component change between two profiles.
    pub fn max_change(&self, other: &MixedProfile) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Starting points for replicator dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Every row `(0.5, 0.5)`.
    Half,
    /// Border superpixels start at `(0.6, 0.4)`, the rest at `(0.5, 0.5)`.
    Boundary,
    /// Rows `(N·pos0, N·pos1)`.
    Position,
    /// Rows `(N·obj0, N·obj1)`.
    Objectness,
    /// Rows `(1 − prior, prior)` from an external saliency estimate.
    Prior,
}

impl InitKind {
    pub const ALL: [InitKind; 5] =
        [InitKind::Half, InitKind::Boundary, InitKind::Position, InitKind::Objectness, InitKind::Prior];

    pub fn name(self) -> &'static str {
        match self {
            InitKind::Half => "half",
            InitKind::Boundary => "bd",
            InitKind::Position => "pos",
            InitKind::Objectness => "obj",
            InitKind::Prior => "prior",
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown init kind `{s}` (half|bd|pos|obj|prior)")))
    }
}

/// Builds the initial profile for `kind`. `prior_map` holds one value in
/// `[0, 1]` per superpixel and is required only for [`InitKind::Prior`].
pub fn init_profile(kind: InitKind, seg: &Segmentation, priors: &Priors, prior_map: Option<&[f64]>) -> Result<MixedProfile> {
    let n = seg.len();
    if priors.len() != n {
        return Err(Error::invalid("priors do not match the segmentation"));
    }
    let nf = n as f64;
    let rows = match kind {
        InitKind::Half => vec![[0.5, 0.5]; n],
        InitKind::Boundary => (0..n).map(|i| if seg.is_boundary(i) { [0.6, 0.4] } else { [0.5, 0.5] }).collect(),
        InitKind::Position => (0..n).map(|i| simplex_row(nf * priors.pos1[i])).collect(),
        InitKind::Objectness => (0..n).map(|i| simplex_row(nf * priors.obj1[i])).collect(),
        InitKind::Prior => {
            let map = prior_map.ok_or_else(|| Error::invalid("the prior init requires a prior saliency map"))?;
            if map.len() != n {
                return Err(Error::invalid("prior map must hold one value per superpixel"));
            }
            if map.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid("prior map values must lie in [0, 1]"));
            }
            map.iter().map(|&p| [1.0 - p, p]).collect()
        }
    };
    MixedProfile::new(rows)
}

fn simplex_row(fg: f64) -> [f64; 2] {
    let fg = fg.clamp(0.0, 1.0);
    [1.0 - fg, fg]
}

/// Result of running replicator dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub profile: MixedProfile,
    pub iterations: usize,
    pub converged: bool,
}

/// A fully specified saliency game.
#[derive(Debug, Clone)]
pub struct GameInstance {
    affinity: AffinityMatrix,
    priors: Priors,
    params: PayoffParams,
    support_offset: Vec<f64>,
    payoff_bound: f64,
    birthrate: f64,
}

impl GameInstance {
    pub fn new(affinity: AffinityMatrix, priors: Priors, params: PayoffParams) -> Result<Self> {
        params.validate()?;
        let n = affinity.len();
        if priors.len() != n {
            return Err(Error::invalid("priors do not match the affinity matrix"));
        }
        if n < 2 {
            return Err(Error::invalid("a game needs at least two players"));
        }
        let nf = n as f64;
        let support_offset: Vec<f64> =
            (0..n).map(|i| params.alpha / nf * affinity.row(i).iter().sum::<f64>()).collect();
        let support_bound = (0..n)
            .map(|i| {
                let off = support_offset[i];
                affinity.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &a)| (a - off).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max);
        let payoff_bound = support_bound + (nf - 1.0) * (params.lambda1 + params.lambda2) / nf;
        let birthrate = params.const_birthrate.unwrap_or(1.0 + payoff_bound);
        Ok(Self { affinity, priors, params, support_offset, payoff_bound, birthrate })
    }

    pub fn len(&self) -> usize {
        self.affinity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.affinity.is_empty()
    }

    pub fn affinity(&self) -> &AffinityMatrix {
        &self.affinity
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn params(&self) -> &PayoffParams {
        &self.params
    }

    /// `(α/N) Σ_k A(i,k)` for every player.
    pub fn support_offset(&self) -> &[f64] {
        &self.support_offset
    }

    /// Upper bound on `|U[i][h]|` over all profiles.
    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }

    pub fn birthrate(&self) -> f64 {
        self.birthrate
    }

    /// Pure-strategy payoffs `U[i][h] = u_i(e^h, Z₋ᵢ)` against profile `z`.
    pub fn expected_payoffs(&self, z: &MixedProfile) -> Vec<[f64; 2]> {
        let n = self.len();
        assert_eq!(z.len(), n, "profile size does not match the game");
        let rows = z.rows();
        let totals = rows.iter().fold([0.0, 0.0], |acc, r| [acc[0] + r[0], acc[1] + r[1]]);
        let scale = (n - 1) as f64;
        let (l1, l2) = (self.params.lambda1, self.params.lambda2);
        (0..n)
            .map(|i| {
                let a = self.affinity.row(i);
                let mut support = [0.0f64; 2];
                for (j, (&aij, r)) in a.iter().zip(rows).enumerate() {
                    if j != i {
                        support[0] += r[0] * aij;
                        support[1] += r[1] * aij;
                    }
                }
                let off = self.support_offset[i];
                let mut u = [0.0f64; 2];
                for h in 0..2 {
                    let prior = scale * (l1 * self.priors.pos(i, h) + l2 * self.priors.obj(i, h));
                    u[h] = prior + support[h] - off * (totals[h] - rows[i][h]);
                }
                u
            })
            .collect()
    }

    /// One discrete replicator update
    /// `z_i^h ← z_i^h (c + U[i][h]) / (c + Σ_h z_i^h U[i][h])`.
    pub fn replicator_step(&self, z: &MixedProfile) -> Result<MixedProfile> {
        let u = self.expected_payoffs(z);
        let c = self.birthrate;
        let mut rows = Vec::with_capacity(z.len());
        for (i, (r, ui)) in z.rows().iter().zip(&u).enumerate() {
            let num = [r[0] * (c + ui[0]), r[1] * (c + ui[1])];
            let den = c + r[0] * ui[0] + r[1] * ui[1];
            if !(den > 0.0) || !(c + ui[0] > 0.0) || !(c + ui[1] > 0.0) {
                return Err(Error::Configuration(alloc::format!(
                    "birthrate {c} too small: player {i} has payoffs {ui:?}"
                )));
            }
            let mut next = [num[0] / den, num[1] / den];
            let sum = next[0] + next[1];
            next[0] /= sum;
            next[1] /= sum;
            rows.push(next);
        }
        Ok(MixedProfile { rows })
    }

    /// Iterates replicator steps from `init` until no component moves by
    /// `epsilon` or more, or `max_iters` steps have run.
    pub fn solve(&self, init: MixedProfile) -> Result<Equilibrium> {
        let mut z = init;
        for t in 1..=self.params.max_iters {
            let next = self.replicator_step(&z)?;
            let change = next.max_change(&z);
            z = next;
            if change < self.params.epsilon {
                return Ok(Equilibrium { profile: z, iterations: t, converged: true });
            }
        }
        Ok(Equilibrium { profile: z, iterations: self.params.max_iters, converged: false })
    }
}

/// Replicator dynamics from an initial profile.
pub fn solve_equilibrium(g: &GameInstance, init: MixedProfile) -> Result<Equilibrium> {
    g.solve(init)
}

/// Per-player regret `max_h U[i][h] − Σ_h z_i^h U[i][h]`. The profile is a
/// `tol`-Nash equilibrium when every regret is at most `tol`.
pub fn verify_approx_nash(g: &GameInstance, z: &MixedProfile) -> Vec<f64> {
    g.expected_payoffs(z)
        .iter()
        .zip(z.rows())
        .map(|(u, r)| (u[0].max(u[1]) - (r[0] * u[0] + r[1] * u[1])).max(0.0))
        .collect()
}

pub fn is_approx_nash(g: &GameInstance, z: &MixedProfile, tol: f64) -> bool {
    verify_approx_nash(g, z).iter().all(|&r| r <= tol)
}

/// Per-pixel map of each superpixel's foreground probability, min-max
/// normalized. A constant profile yields an all-zero map.
pub fn saliency_from_profile(z: &MixedProfile, seg: &Segmentation) -> SaliencyMap {
    assert_eq!(z.len(), seg.len(), "profile size does not match the segmentation");
    let mut fg = z.foreground();
    min_max_normalize(&mut fg);
    SaliencyMap::new(seg.width(), seg.height(), seg.paint(&fg)).expect("normalized values lie in [0, 1]")
}
