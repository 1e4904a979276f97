//! Iterative random walk across the color and deep feature spaces.
//!
//! Each space contributes a complete-graph transition matrix `P` and a
//! neighbor-graph transition matrix `Pn`. Every round fuses each space's `P`
//! between the other space's `Pn`, then re-solves each space's labels as a
//! Laplacian-regularized fit to the other space's previous labels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::AffinityMatrix;
use crate::image::min_max_normalize;
use crate::linalg::solve_spd;

/// Residual bound every penalized solve must meet.
pub const SOLVE_TOLERANCE: f64 = 1e-9;

/// Dense row-stochastic `N x N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    values: Vec<f64>,
}

impl StochasticMatrix {
    /// Checks nonnegativity and unit row sums (within 1e-9).
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::invalid("stochastic matrix must be N x N"));
        }
        for row in values.chunks_exact(n.max(1)) {
            if row.iter().any(|&v| !(v >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("rows must be nonnegative and sum to 1"));
            }
        }
        Ok(Self { n, values })
    }

    /// Row-normalizes nonnegative weights. A row with no weight becomes
    /// uniform over `fallback(i)` (or over every column if that is empty).
    fn from_weights(n: usize, mut w: Vec<f64>, fallback: impl Fn(usize) -> Vec<usize>) -> Self {
        for i in 0..n {
            let row = &mut w[i * n..(i + 1) * n];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            } else {
                let mut support = fallback(i);
                if support.is_empty() {
                    support = (0..n).collect();
                }
                let u = 1.0 / support.len() as f64;
                for j in support {
                    row[j] = u;
                }
            }
        }
        Self { n, values: w }
    }

    pub fn identity(n: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self { n, values }
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

    /// Largest `|row sum − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.values
            .chunks_exact(self.n.max(1))
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// The four transition matrices of one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkMatrices {
    /// Complete graph, deep space.
    pub p_d: StochasticMatrix,
    /// Complete graph, color space.
    pub p_c: StochasticMatrix,
    /// Neighbor graph, deep space.
    pub pn_d: StochasticMatrix,
    /// Neighbor graph, color space.
    pub pn_c: StochasticMatrix,
}

fn complete_transition(a: &AffinityMatrix) -> StochasticMatrix {
    let n = a.len();
    let mut w = a.values().to_vec();
    for i in 0..n {
        w[i * n + i] = 0.0;
    }
    StochasticMatrix::from_weights(n, w, |i| (0..n).filter(|&j| j != i).collect())
}

fn neighbor_transition(a: &AffinityMatrix, neighbors: &[Vec<usize>]) -> StochasticMatrix {
    let n = a.len();
    let mut w = vec![0.0; n * n];
    for (i, set) in neighbors.iter().enumerate() {
        for &j in set {
            if j != i {
                w[i * n + j] = a.get(i, j);
            }
        }
    }
    StochasticMatrix::from_weights(n, w, |i| neighbors[i].iter().copied().filter(|&j| j != i).collect())
}

/// Builds the complete-graph (zero diagonal) and neighbor-graph transition
/// matrices of both spaces.
pub fn build_walk_matrices(a_d: &AffinityMatrix, a_c: &AffinityMatrix, neighbors: &[Vec<usize>]) -> Result<WalkMatrices> {
    let n = a_d.len();
    if a_c.len() != n || neighbors.len() != n {
        return Err(Error::invalid("affinities and neighbor sets disagree on N"));
    }
    Ok(WalkMatrices {
        p_d: complete_transition(a_d),
        p_c: complete_transition(a_c),
        pn_d: neighbor_transition(a_d, neighbors),
        pn_c: neighbor_transition(a_c, neighbors),
    })
}

/// `outer · inner · outer`, skipping the zeros of the (sparse) outer matrix.
pub fn sandwich(outer: &StochasticMatrix, inner: &StochasticMatrix) -> StochasticMatrix {
    let n = outer.n;
    assert_eq!(inner.n, n, "matrix sizes differ");
    let sparse: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| outer.row(i).iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect())
        .collect();
    let mut left = vec![0.0; n * n];
    for i in 0..n {
        let dst = &mut left[i * n..(i + 1) * n];
        for &(k, v) in &sparse[i] {
            for (d, &s) in dst.iter_mut().zip(inner.row(k)) {
                *d += v * s;
            }
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let src = &left[i * n..(i + 1) * n];
        let dst = &mut out[i * n..(i + 1) * n];
        for (k, &c) in src.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for &(j, v) in &sparse[k] {
                dst[j] += c * v;
            }
        }
    }
    StochasticMatrix { n, values: out }
}

/// Walk state between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub matrices: WalkMatrices,
    pub l_d: Vec<f64>,
    pub l_c: Vec<f64>,
    pub beta: f64,
    pub round: usize,
}

impl WalkState {
    pub fn new(matrices: WalkMatrices, l_d: Vec<f64>, l_c: Vec<f64>, beta: f64) -> Result<Self> {
        let n = matrices.p_d.len();
        if l_d.len() != n || l_c.len() != n {
            return Err(Error::invalid("label vectors must have one entry per superpixel"));
        }
        if !(beta > 0.0) {
            return Err(Error::invalid("beta must be positive"));
        }
        Ok(Self { matrices, l_d, l_c, beta, round: 0 })
    }
}

/// Cross fusion: `P_d ← Pn_c·P_d·Pn_c` and `P_c ← Pn_d·P_c·Pn_d`.
pub fn cross_fuse(state: WalkState) -> WalkState {
    let WalkMatrices { p_d, p_c, pn_d, pn_c } = state.matrices;
    let fused_d = sandwich(&pn_c, &p_d);
    let fused_c = sandwich(&pn_d, &p_c);
    WalkState { matrices: WalkMatrices { p_d: fused_d, p_c: fused_c, pn_d, pn_c }, ..state }
}

/// System matrix `L + βI` with `L` the Laplacian of the symmetric weights
/// `P + Pᵀ`. With these weights `lᵀLl = Σ_{i,j} P(i,j)(l_i − l_j)²`, so at
/// `β = 1` the solution minimizes `Σ_{i,j} P(i,j)(l_i − l_j)² + β‖l − l_other‖²`.
pub fn penalized_system(p: &StochasticMatrix, beta: f64) -> Vec<f64> {
    let n = p.n;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = p.get(i, j) + p.get(j, i);
            m[i * n + j] = -w;
            degree += w;
        }
        m[i * n + i] = degree + beta;
    }
    m
}

/// Labels `(L + βI)⁻¹ l_other`, solved to a residual of at most 1e-9.
pub fn penalized_solve(p: &StochasticMatrix, l_other: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta must be positive"));
    }
    if l_other.len() != p.n {
        return Err(Error::invalid("label vector does not match the matrix"));
    }
    let m = penalized_system(p, beta);
    solve_spd(p.n, &m, l_other, SOLVE_TOLERANCE)
}

/// One round: fuse, solve both spaces against the other's previous labels,
/// renormalize the labels to `[0, 1]`.
pub fn irw_round(state: WalkState) -> Result<WalkState> {
    let fused = cross_fuse(state);
    let mut l_d = penalized_solve(&fused.matrices.p_d, &fused.l_c, fused.beta)?;
    let mut l_c = penalized_solve(&fused.matrices.p_c, &fused.l_d, fused.beta)?;
    min_max_normalize(&mut l_d);
    min_max_normalize(&mut l_c);
    Ok(WalkState { l_d, l_c, round: fused.round + 1, ..fused })
}

/// Runs `rounds` rounds and returns the final state.
pub fn iterate_irw(state: WalkState, rounds: usize) -> Result<WalkState> {
    (0..rounds).try_fold(state, |s, _| irw_round(s))
}

/// `ρ₁·l_c + ρ₂·l_d`, min-max normalized.
pub fn combine(l_c: &[f64], l_d: &[f64], rho1: f64, rho2: f64) -> Vec<f64> {
    assert_eq!(l_c.len(), l_d.len(), "label vectors differ in length");
    let mut s: Vec<f64> = l_c.iter().zip(l_d).map(|(&c, &d)| rho1 * c + rho2 * d).collect();
    min_max_normalize(&mut s);
    s
}
