#![allow(dead_code)]

use rand::Rng;
use salgame_core::game::{GameInstance, PayoffParams, Priors};
use salgame_core::AffinityMatrix;

/// Symmetric affinity with unit diagonal and off-diagonal entries in (0, 1].
pub fn random_affinity(rng: &mut impl Rng, n: usize) -> AffinityMatrix {
    let mut v = vec![1.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let a = rng.gen_range(1e-6..=1.0);
            v[i * n + j] = a;
            v[j * n + i] = a;
        }
    }
    AffinityMatrix::from_dense(n, v).unwrap()
}

pub fn random_priors(rng: &mut impl Rng, n: usize) -> Priors {
    let inv = 1.0 / n as f64;
    let pos1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=inv)).collect();
    let obj1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=inv)).collect();
    let pos0 = pos1.iter().map(|p| inv - p).collect();
    let obj0 = obj1.iter().map(|p| inv - p).collect();
    Priors::new((pos1, pos0), (obj1, obj0)).unwrap()
}

pub fn random_params(rng: &mut impl Rng) -> PayoffParams {
    PayoffParams {
        lambda1: rng.gen_range(1e-3..2.0),
        lambda2: rng.gen_range(1e-3..2.0),
        alpha: rng.gen_range(1e-3..0.5),
        ..PayoffParams::default()
    }
}

pub fn random_game(rng: &mut impl Rng, n: usize) -> GameInstance {
    let a = random_affinity(rng, n);
    let p = random_priors(rng, n);
    GameInstance::new(a, p, random_params(rng)).unwrap()
}

/// The 2x2 payoff matrix `B_ij[s_i][s_j]` materialized term by term.
pub fn payoff_matrix(g: &GameInstance, i: usize, j: usize) -> [[f64; 2]; 2] {
    let n = g.len() as f64;
    let p = g.params();
    let pr = g.priors();
    let row_sum: f64 = g.affinity().row(i).iter().sum();
    let mut b = [[0.0; 2]; 2];
    for (si, row) in b.iter_mut().enumerate() {
        let pos = if si == 1 { pr.pos1[i] } else { pr.pos0[i] };
        let obj = if si == 1 { pr.obj1[i] } else { pr.obj0[i] };
        for (sj, cell) in row.iter_mut().enumerate() {
            let spt = if si == sj { g.affinity().get(i, j) - p.alpha / n * row_sum } else { 0.0 };
            *cell = p.lambda1 * pos + p.lambda2 * obj + spt;
        }
    }
    b
}

/// Pure-strategy payoff `π_i(t, s₋ᵢ)` summed over opponents.
pub fn pure_payoff(g: &GameInstance, s: &[bool], i: usize, t: bool) -> f64 {
    (0..g.len()).filter(|&j| j != i).map(|j| payoff_matrix(g, i, j)[t as usize][s[j] as usize]).sum()
}

/// Whether every player's pure strategy is a best reply.
pub fn is_pure_nash(g: &GameInstance, s: &[bool]) -> bool {
    (0..g.len()).all(|i| pure_payoff(g, s, i, s[i]) >= pure_payoff(g, s, i, !s[i]))
}
