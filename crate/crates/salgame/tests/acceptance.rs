//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salgame::io;
use salgame::runner::detect;
use salgame::synth::{generate, SceneKind};
use salgame_core::eval::{adaptive_f_measure, auc, f_measure};
use salgame_core::game::{is_approx_nash, verify_approx_nash, GameInstance, MixedProfile, PayoffParams, Priors};
use salgame_core::linalg::residual_inf;
use salgame_core::pipeline::run_scale;
use salgame_core::pipeline::PreparedImage;
use salgame_core::randomwalk::{
    build_walk_matrices, cross_fuse, irw_round, penalized_solve, penalized_system, WalkState,
};
use salgame_core::segmentation::Segmentation;
use salgame_core::{AffinityMatrix, BinaryMask, FeatureTensor, InitKind, PipelineConfig, SaliencyMap};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond { Ok(detail) } else { Err(detail) }
}

// ---------------------------------------------------------------- fixtures

fn random_affinity(rng: &mut impl Rng, n: usize) -> AffinityMatrix {
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

fn random_priors(rng: &mut impl Rng, n: usize) -> Priors {
    let inv = 1.0 / n as f64;
    let pos1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=inv)).collect();
    let obj1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=inv)).collect();
    let pos0 = pos1.iter().map(|p| inv - p).collect();
    let obj0 = obj1.iter().map(|p| inv - p).collect();
    Priors::new((pos1, pos0), (obj1, obj0)).unwrap()
}

fn random_game(rng: &mut impl Rng, n: usize) -> GameInstance {
    let a = random_affinity(rng, n);
    let p = random_priors(rng, n);
    let params = PayoffParams {
        lambda1: rng.gen_range(1e-3..2.0),
        lambda2: rng.gen_range(1e-3..2.0),
        alpha: rng.gen_range(1e-3..0.5),
        ..PayoffParams::default()
    };
    GameInstance::new(a, p, params).unwrap()
}

fn random_profile(rng: &mut impl Rng, n: usize) -> MixedProfile {
    MixedProfile::new(
        (0..n)
            .map(|_| {
                let f = rng.gen_range(0.01..0.99);
                [1.0 - f, f]
            })
            .collect(),
    )
    .unwrap()
}

/// `B_ij[s_i][s_j]`, written out term by term from the payoff definition.
fn payoff_matrix(g: &GameInstance, i: usize, j: usize) -> [[f64; 2]; 2] {
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

fn pure_payoff(g: &GameInstance, s: &[bool], i: usize, t: bool) -> f64 {
    (0..g.len()).filter(|&j| j != i).map(|j| payoff_matrix(g, i, j)[t as usize][s[j] as usize]).sum()
}

fn is_pure_nash(g: &GameInstance, s: &[bool]) -> bool {
    (0..g.len()).all(|i| pure_payoff(g, s, i, s[i]) >= pure_payoff(g, s, i, !s[i]))
}

// ---------------------------------------------------------------- criteria

fn a1_simplex_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut worst_sum = 0.0f64;
    let mut min_entry = f64::INFINITY;
    for _ in 0..200 {
        let g = random_game(&mut rng, 50);
        let mut z = random_profile(&mut rng, 50);
        for _ in 0..1000 {
            z = g.replicator_step(&z).map_err(|e| e.to_string())?;
            for r in z.rows() {
                worst_sum = worst_sum.max((r[0] + r[1] - 1.0).abs());
                min_entry = min_entry.min(r[0].min(r[1]));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_sum <= 1e-9 && min_entry >= 0.0 && secs < 60.0,
        format!("200 games (N=50) x 1000 steps: max |row sum - 1| = {worst_sum:.1e}, min entry = {min_entry:.1e}, {secs:.2} s"),
    )
}

fn a2_payoff_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let g = random_game(&mut rng, n);
        let z = random_profile(&mut rng, n);
        let u = g.expected_payoffs(&z);
        for i in 0..n {
            for h in 0..2 {
                let want: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let b = payoff_matrix(&g, i, j);
                        b[h][0] * z.rows()[j][0] + b[h][1] * z.rows()[j][1]
                    })
                    .sum();
                worst = worst.max((u[i][h] - want).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("100 games (N<=20): max |U - brute force| = {worst:.1e}"))
}

fn a3_approximate_nash() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let (mut good, mut unconverged, mut worst_ratio) = (0, 0, 0.0f64);
    for _ in 0..100 {
        let g = random_game(&mut rng, 50);
        let eq = g.solve(MixedProfile::uniform(50)).map_err(|e| e.to_string())?;
        if !eq.converged {
            unconverged += 1;
            continue;
        }
        let regret = verify_approx_nash(&g, &eq.profile).into_iter().fold(0.0, f64::max);
        let ratio = regret / g.payoff_bound();
        worst_ratio = worst_ratio.max(ratio);
        if ratio <= 1e-3 {
            good += 1;
        }
    }
    check(
        good >= 95,
        format!(
            "{good}/100 converged runs with max regret <= 1e-3 x payoff scale; {unconverged} not converged (flagged); worst regret/scale = {worst_ratio:.1e}"
        ),
    )
}

fn a4_pure_equilibria() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    let n = 10;
    let (mut disagreements, mut equilibria, mut replicator_hits) = (0, 0, 0);
    for _ in 0..50 {
        let a = random_affinity(&mut rng, n);
        let p = random_priors(&mut rng, n);
        // support dominates: prior weights far below the affinity scale
        let params = PayoffParams {
            lambda1: rng.gen_range(1e-6..1e-3),
            lambda2: rng.gen_range(1e-6..1e-3),
            alpha: rng.gen_range(1e-3..0.5),
            epsilon: 1e-10,
            max_iters: 50_000,
            ..PayoffParams::default()
        };
        let g = GameInstance::new(a, p, params).unwrap();
        for mask in 0u32..(1 << n) {
            let s: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let oracle = is_pure_nash(&g, &s);
            equilibria += oracle as usize;
            if is_approx_nash(&g, &MixedProfile::pure(&s), 1e-12) != oracle {
                disagreements += 1;
            }
        }
        for _ in 0..4 {
            let eq = g.solve(random_profile(&mut rng, n)).map_err(|e| e.to_string())?;
            let s = eq.profile.rounded();
            if is_approx_nash(&g, &MixedProfile::pure(&s), 1e-12) {
                replicator_hits += 1;
                if !is_pure_nash(&g, &s) {
                    disagreements += 1;
                }
            }
        }
    }
    check(
        disagreements == 0 && equilibria > 0,
        format!(
            "50 games (N=10), 2^10 profiles each: {equilibria} pure equilibria, {replicator_hits} rounded replicator outputs verified, {disagreements} disagreements"
        ),
    )
}

fn a5_minimizer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    let n = 30;
    let (mut worst_grad, mut worst_res, mut worst_rows) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let a_d = random_affinity(&mut rng, n);
        let a_c = random_affinity(&mut rng, n);
        let mut nb = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || rng.gen_bool(0.15) {
                    nb[i].push(j);
                    nb[j].push(i);
                }
            }
        }
        nb.iter_mut().for_each(|s| s.sort());
        let l0: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let l1: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let state = WalkState::new(build_walk_matrices(&a_d, &a_c, &nb).unwrap(), l0, l1, 1.0).unwrap();

        let fused = cross_fuse(state.clone());
        let p = &fused.matrices.p_d;
        let target = &fused.l_c;
        let l = penalized_solve(p, target, 1.0).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(residual_inf(n, &penalized_system(p, 1.0), &l, target));
        let energy = |v: &[f64]| {
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..n {
                    e += p.get(i, j) * (v[i] - v[j]).powi(2);
                }
                e += (v[i] - target[i]).powi(2);
            }
            e
        };
        let h = 1e-6;
        for i in 0..n {
            let (mut up, mut dn) = (l.clone(), l.clone());
            up[i] += h;
            dn[i] -= h;
            worst_grad = worst_grad.max(((energy(&up) - energy(&dn)) / (2.0 * h)).abs());
        }

        let mut s = state;
        for _ in 0..20 {
            s = irw_round(s).map_err(|e| e.to_string())?;
            worst_rows = worst_rows.max(s.matrices.p_d.row_sum_error()).max(s.matrices.p_c.row_sum_error());
        }
    }
    check(
        worst_grad <= 1e-6 && worst_res <= 1e-9 && worst_rows <= 1e-9,
        format!(
            "50 walks (N=30, beta=1): max |grad E| = {worst_grad:.1e}, max residual = {worst_res:.1e}, max row-sum drift over 20 rounds = {worst_rows:.1e}"
        ),
    )
}

fn a6_synthetic_end_to_end() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, floor) in [(SceneKind::CenteredSquare, 0.90), (SceneKind::BoundaryTouching, 0.70)] {
        let scene = generate(kind, 64, 64, 7);
        let start = Instant::now();
        let d = detect(&scene.image, &cfg, None, &[], false).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let f = adaptive_f_measure(&d.map, &scene.truth).map_err(|e| e.to_string())?;
        ok &= f >= floor && secs <= 10.0;
        parts.push(format!("{kind}: F = {f:.4} (>= {floor}), {secs:.2} s"));
    }
    check(ok, parts.join("; "))
}

fn a7_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let gt = BinaryMask::new(16, 16, (0..256).map(|p| (4..12).contains(&(p % 16)) && (5..13).contains(&(p / 16))).collect()).unwrap();
    let same = SaliencyMap::new(16, 16, gt.bits().iter().map(|&b| b as u8 as f64).collect()).unwrap();
    let (f1, a1) = (adaptive_f_measure(&same, &gt).unwrap(), auc(&same, &gt).unwrap());
    let f065 = f_measure(0.8, 0.4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let bits: Vec<bool> = (0..256).map(|_| rng.gen_bool(0.35)).collect();
        let values: Vec<f64> = bits.iter().map(|&b| (rng.gen::<f64>() * 0.8 + if b { 0.2 } else { 0.0 }).min(1.0)).collect();
        let gt = BinaryMask::new(16, 16, bits).unwrap();
        let map = SaliencyMap::new(16, 16, values).unwrap();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (&p, _) in map.values().iter().zip(gt.bits()).filter(|(_, &g)| g) {
            for (&q, _) in map.values().iter().zip(gt.bits()).filter(|(_, &g)| !g) {
                wins += if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 };
                pairs += 1.0;
            }
        }
        worst = worst.max((auc(&map, &gt).unwrap() - wins / pairs).abs());
    }
    check(
        (f1 - 1.0).abs() <= 1e-6 && (a1 - 1.0).abs() <= 1e-6 && f065 == 0.65 && worst <= 0.01,
        format!("map = gt: F = {f1}, AUC = {a1}; F(0.8, 0.4) = {f065}; max |AUC - Mann-Whitney| over 50 maps = {worst:.4}"),
    )
}

fn a8_initializations() -> Outcome {
    let mut table = vec![format!("    {:<18} {:<6} {:>8} {:>8} {:>10} {:>10}", "scene", "init", "F", "AUC", "max iters", "converged")];
    let mut ok = true;
    for kind in SceneKind::ALL {
        let scene = generate(kind, 64, 64, 7);
        let prepared = PreparedImage::new(&scene.image, None, &[]).map_err(|e| e.to_string())?;
        for init in InitKind::ALL {
            let cfg = PipelineConfig { init, ..PipelineConfig::default() };
            let mut maps = Vec::new();
            let (mut all_converged, mut max_iters) = (true, 0);
            for &scale in &cfg.scales {
                let r = run_scale(&prepared, &cfg, scale).map_err(|e| e.to_string())?;
                all_converged &= r.color_game.converged && r.deep_game.converged;
                max_iters = max_iters.max(r.color_game.iterations).max(r.deep_game.iterations);
                maps.push(r.map);
            }
            let map = salgame_core::pipeline::average_maps(&maps).map_err(|e| e.to_string())?;
            let valid = map.width() == 64
                && map.height() == 64
                && map.values().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v));
            let f = adaptive_f_measure(&map, &scene.truth).map_err(|e| e.to_string())?;
            let a = auc(&map, &scene.truth).map_err(|e| e.to_string())?;
            ok &= all_converged && valid;
            table.push(format!(
                "    {:<18} {:<6} {:>8.4} {:>8.4} {:>10} {:>10}",
                kind.name(),
                init.name(),
                f,
                a,
                max_iters,
                all_converged
            ));
        }
    }
    let detail = format!("all five init kinds on the 4-scene corpus converge and give valid maps\n{}", table.join("\n"));
    check(ok, detail)
}

fn a9_throughput() -> Outcome {
    let scene = generate(SceneKind::CenteredSquare, 400, 300, 1);
    let cfg = PipelineConfig::default();
    let start = Instant::now();
    let d = detect(&scene.image, &cfg, None, &[], true).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        secs <= 30.0 && d.map.width() == 400,
        format!("400x300, scales {:?}: {secs:.2} s (bound 30 s)", cfg.scales),
    )
}

fn a10_exporter_round_trip(dir: &Path) -> Outcome {
    // Independent writer: the byte layout assembled by hand.
    let (h, w, c) = (5u32, 7u32, 3u32);
    let mut rng = ChaCha8Rng::seed_from_u64(0xA10);
    let source: Vec<f32> = (0..h * w * c).map(|_| rng.gen_range(-50.0f32..50.0)).collect();
    let mut bytes = b"FTNS".to_vec();
    for v in [h, w, c] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for v in &source {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let path = dir.join("export.ftns");
    std::fs::write(&path, &bytes).map_err(|e| e.to_string())?;
    let t: FeatureTensor = io::read_ftns(&path).map_err(|e| e.to_string())?;
    let exact = t.data().iter().zip(&source).all(|(a, b)| a.to_bits() == b.to_bits()) && t.data().len() == source.len();

    let (mw, mh) = (20usize, 16usize);
    let labels: Vec<usize> = (0..mw * mh).map(|p| (p % mw) / 5 + 4 * ((p / mw) / 8)).collect();
    let seg = Segmentation::from_labels(mw, mh, labels).map_err(|e| e.to_string())?;
    let masks: Vec<BinaryMask> = (0..3).map(|_| BinaryMask::new(mw, mh, (0..mw * mh).map(|_| rng.gen_bool(0.5)).collect()).unwrap()).collect();
    let manifest = io::write_manifest(&dir.join("proposals"), &masks).map_err(|e| e.to_string())?;
    let loaded = io::read_manifest(&manifest, mw, mh).map_err(|e| e.to_string())?;
    let (obj1, _) = salgame_core::game::objectness_prior(&seg, &loaded).map_err(|e| e.to_string())?;
    let n = seg.len() as f64;
    let mut worst = 0.0f64;
    for i in 0..seg.len() {
        let mut ratio = 0.0;
        for m in &masks {
            let members: Vec<usize> = (0..mw * mh).filter(|&p| seg.labels()[p] == i).collect();
            let hits = members.iter().filter(|&&p| m.bits()[p]).count();
            ratio += hits as f64 / members.len() as f64;
        }
        worst = worst.max((obj1[i] - ratio / (n * masks.len() as f64)).abs());
    }
    check(
        exact && loaded == masks && worst <= 1e-12,
        format!("FTNS {h}x{w}x{c} bit-exact: {exact}; manifest masks reloaded: {}; max overlap error = {worst:.1e}", loaded == masks),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, &str, Box<dyn Fn() -> Outcome>)> = vec![
        ("A1", "simplex invariance", Box::new(a1_simplex_invariance)),
        ("A2", "payoff oracle equivalence", Box::new(a2_payoff_oracle)),
        ("A3", "approximate Nash", Box::new(a3_approximate_nash)),
        ("A4", "pure-equilibrium oracle", Box::new(a4_pure_equilibria)),
        ("A5", "minimizer correctness", Box::new(a5_minimizer)),
        ("A6", "synthetic end-to-end", Box::new(a6_synthetic_end_to_end)),
        ("A7", "metric correctness", Box::new(a7_metrics)),
        ("A8", "initialization study", Box::new(a8_initializations)),
        ("A9", "throughput sanity", Box::new(a9_throughput)),
        ("A10", "exporter round trip", Box::new(|| a10_exporter_round_trip(dir.path()))),
    ];
    let mut failed = 0;
    for (id, name, run) in &criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
