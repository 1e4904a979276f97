mod common;

use common::random_affinity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salgame_core::randomwalk::{
    build_walk_matrices, combine, cross_fuse, iterate_irw, penalized_solve, sandwich, StochasticMatrix, WalkState,
};

type Dense = Vec<Vec<f64>>;

fn dense(m: &StochasticMatrix) -> Dense {
    (0..m.len()).map(|i| m.row(i).to_vec()).collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn random_stochastic(rng: &mut impl Rng, n: usize, density: f64) -> StochasticMatrix {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut v[i * n..(i + 1) * n];
        for x in row.iter_mut() {
            if rng.gen_bool(density) {
                *x = rng.gen::<f64>();
            }
        }
        row[(i + 1) % n] += 0.1;
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    StochasticMatrix::new(n, v).unwrap()
}

fn random_neighbors(rng: &mut impl Rng, n: usize) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.3) || j == i + 1 {
                sets[i].push(j);
                sets[j].push(i);
            }
        }
    }
    sets.iter_mut().for_each(|s| s.sort());
    sets
}

/// Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Reference minimizer of Σ P_ij (l_i − l_j)² + β‖l − o‖² via its normal
/// equations, assembled entry by entry from the energy's gradient.
fn reference_solve(p: &Dense, o: &[f64], beta: f64) -> Vec<f64> {
    let n = o.len();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // ∂/∂l_i of P_ij (l_i − l_j)² + P_ji (l_j − l_i)², halved
            h[i][i] += p[i][j] + p[j][i];
            h[i][j] -= p[i][j] + p[j][i];
        }
        h[i][i] += beta;
    }
    let rhs = o.iter().map(|v| beta * v).collect();
    gauss_solve(h, rhs)
}

fn normalize(v: &mut [f64]) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 0.0 {
        v.iter_mut().for_each(|x| *x = (*x - lo) / (hi - lo));
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

#[test]
fn sandwich_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(2..25);
        let outer = random_stochastic(&mut rng, n, 0.3);
        let inner = random_stochastic(&mut rng, n, 1.0);
        let want = matmul(&matmul(&dense(&outer), &dense(&inner)), &dense(&outer));
        let got = sandwich(&outer, &inner);
        for i in 0..n {
            for j in 0..n {
                assert!((got.get(i, j) - want[i][j]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn identity_fusion_leaves_matrices_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_stochastic(&mut rng, 9, 1.0);
    let id = StochasticMatrix::identity(9);
    assert_eq!(sandwich(&id, &p), p);
}

#[test]
fn scripted_three_rounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 12;
    let a_d = random_affinity(&mut rng, n);
    let a_c = random_affinity(&mut rng, n);
    let nb = random_neighbors(&mut rng, n);
    let l_d0: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let l_c0: Vec<f64> = (0..n).map(|_| rng.gen()).collect();

    // reference matrices straight from the affinities
    let complete = |a: &salgame_core::AffinityMatrix| -> Dense {
        (0..n)
            .map(|i| {
                let s: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j)).sum();
                (0..n).map(|j| if j == i { 0.0 } else { a.get(i, j) / s }).collect()
            })
            .collect()
    };
    let masked = |a: &salgame_core::AffinityMatrix| -> Dense {
        (0..n)
            .map(|i| {
                let s: f64 = nb[i].iter().map(|&j| a.get(i, j)).sum();
                (0..n).map(|j| if nb[i].contains(&j) { a.get(i, j) / s } else { 0.0 }).collect()
            })
            .collect()
    };
    let (mut pd, mut pc) = (complete(&a_d), complete(&a_c));
    let (pnd, pnc) = (masked(&a_d), masked(&a_c));
    let (mut ld, mut lc) = (l_d0.clone(), l_c0.clone());
    for _ in 0..3 {
        pd = matmul(&matmul(&pnc, &pd), &pnc);
        pc = matmul(&matmul(&pnd, &pc), &pnd);
        let mut nd = reference_solve(&pd, &lc, 1.0);
        let mut nc = reference_solve(&pc, &ld, 1.0);
        normalize(&mut nd);
        normalize(&mut nc);
        ld = nd;
        lc = nc;
    }

    let m = build_walk_matrices(&a_d, &a_c, &nb).unwrap();
    let out = iterate_irw(WalkState::new(m, l_d0, l_c0, 1.0).unwrap(), 3).unwrap();
    assert_eq!(out.round, 3);
    for i in 0..n {
        assert!((out.l_d[i] - ld[i]).abs() <= 1e-9, "l_d[{i}]");
        assert!((out.l_c[i] - lc[i]).abs() <= 1e-9, "l_c[{i}]");
        for j in 0..n {
            assert!((out.matrices.p_d.get(i, j) - pd[i][j]).abs() <= 1e-12);
        }
    }
}

#[test]
fn neighbor_matrices_vanish_outside_the_neighbor_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let n = rng.gen_range(3..20);
        let nb = random_neighbors(&mut rng, n);
        let m = build_walk_matrices(&random_affinity(&mut rng, n), &random_affinity(&mut rng, n), &nb).unwrap();
        for i in 0..n {
            for j in 0..n {
                if !nb[i].contains(&j) {
                    assert_eq!(m.pn_d.get(i, j), 0.0);
                    assert_eq!(m.pn_c.get(i, j), 0.0);
                }
            }
            assert_eq!(m.p_d.get(i, i), 0.0);
        }
    }
}

#[test]
fn finite_difference_gradient_vanishes_at_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 15;
    let p = random_stochastic(&mut rng, n, 0.6);
    let o: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let l = penalized_solve(&p, &o, 1.0).unwrap();
    let energy = |l: &[f64]| {
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                e += p.get(i, j) * (l[i] - l[j]).powi(2);
            }
            e += (l[i] - o[i]).powi(2);
        }
        e
    };
    let h = 1e-6;
    for i in 0..n {
        let mut up = l.clone();
        let mut dn = l.clone();
        up[i] += h;
        dn[i] -= h;
        let g = (energy(&up) - energy(&dn)) / (2.0 * h);
        assert!(g.abs() <= 1e-6, "gradient component {i} = {g}");
    }
}

#[test]
fn constant_labels_are_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = random_stochastic(&mut rng, 10, 0.5);
    let l = penalized_solve(&p, &[0.37; 10], 1.0).unwrap();
    assert!(l.iter().all(|v| (v - 0.37).abs() < 1e-12));
}

#[test]
fn identical_spaces_stay_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let n = 10;
    let a = random_affinity(&mut rng, n);
    let nb = random_neighbors(&mut rng, n);
    let l: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let mut s = WalkState::new(build_walk_matrices(&a, &a, &nb).unwrap(), l.clone(), l, 1.0).unwrap();
    for _ in 0..5 {
        s = iterate_irw(s, 1).unwrap();
        assert_eq!(s.l_c, s.l_d);
    }
    let s0 = WalkState::new(build_walk_matrices(&a, &a, &nb).unwrap(), vec![0.1; n], vec![0.2; n], 1.0).unwrap();
    let same = iterate_irw(s0.clone(), 0).unwrap();
    assert_eq!(same, s0);
    let fused = cross_fuse(s0);
    assert!(fused.matrices.p_d.row_sum_error() < 1e-12);
}

#[test]
fn combination_examples() {
    let v = [0.2, 0.5, 0.9];
    let s = combine(&v, &v, 0.3, 0.7);
    assert!((s[0]).abs() < 1e-15 && (s[2] - 1.0).abs() < 1e-15);
    assert!((s[1] - 3.0 / 7.0).abs() < 1e-12);
    assert_eq!(combine(&v, &[5.0, 1.0, 3.0], 1.0, 0.0), s);
    assert_eq!(combine(&[0.0, 1.0], &[1.0, 0.0], 0.5, 0.5), vec![0.0, 0.0]);
}
