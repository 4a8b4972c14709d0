mod common;

use std::collections::HashMap;

use common::*;
use tree_zigzag::diagnostics::stats::{chi_square, ks_test};
use tree_zigzag::diagnostics::{ess, tree_height};
use tree_zigzag::engine::{
    simulate, simulate_with, stream_rng, EventKind, EventTrace, HybridState, MhMoveKind, NullRecorder, Pure,
    SimOptions, TargetModel,
};
use tree_zigzag::ism::{IsmDataset, IsmTarget};
use tree_zigzag::mh::{run_mh, spr_step, times_step, HybridMoves, MhConfig, MhStats};
use tree_zigzag::tau::{merger_rate, KingmanPrior, RankedTopology};
use tree_zigzag::theta::ThetaPrior;

fn prior_state(n: usize, seed: u64) -> HybridState<RankedTopology, f64> {
    let mut rng = rng(seed);
    let (topo, times) = RankedTopology::simulate_coalescent(n, &mut rng).unwrap();
    let vels = tree_zigzag::tau::default_speeds(n);
    HybridState::new(topo, times, vels)
}

fn mh_trace<T: tree_zigzag::tau::TreeTarget<f64>>(
    target: &T,
    init: HybridState<T::Mode, f64>,
    iterations: usize,
    cfg: MhConfig,
    seed: u64,
) -> (EventTrace<T::Mode, f64>, MhStats) {
    let mut trace = EventTrace::new(init.clone());
    let run = run_mh(target, init, iterations, 2000, cfg, seed, &mut trace).unwrap();
    (trace, run.stats)
}

#[test]
fn prior_means_for_three_leaves() {
    let target = KingmanPrior::<f64>::new(3);
    let (trace, _) = mh_trace(&target, prior_state(3, 1), 100_000, MhConfig::default(), 2);
    for (i, expect) in [(0usize, 1.0 / 3.0), (1, 1.0)] {
        let x = trace.discretize_fn(20_000, |_, c| c[i]);
        let e = ess(&x).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let se = (e.variance / e.ess).sqrt();
        assert!((m - expect).abs() < 3.0 * se, "t_{}: {m} vs {expect} (se {se})", i + 1);
    }
}

#[test]
fn prior_marginals_for_four_leaves() {
    let n = 4;
    let target = KingmanPrior::<f64>::new(n);
    let (trace, stats) = mh_trace(&target, prior_state(n, 3), 200_000, MhConfig::default(), 4);
    assert!(stats.acceptance(MhMoveKind::Spr).unwrap() > 0.05);
    // thin to roughly independent draws
    let states = trace.discretize(5_000);
    for i in 0..n - 1 {
        let rate: f64 = merger_rate(n, i + 1);
        let x: Vec<f64> = states.iter().map(|s| s.coords[i]).collect();
        let (_, p) = ks_test(&x, |t| 1.0 - (-rate * t.max(0.0)).exp());
        assert!(p > 1e-3, "holding time {}: p = {p}", i + 1);
    }
    let topos = RankedTopology::enumerate(n);
    assert_eq!(topos.len(), 18);
    let index: HashMap<u64, usize> = topos.iter().enumerate().map(|(k, t)| (t.mode_id(), k)).collect();
    let mut counts = vec![0.0; 18];
    for s in &states {
        counts[index[&s.mode.mode_id()]] += 1.0;
    }
    let expected = vec![states.len() as f64 / 18.0; 18];
    let (_, p) = chi_square(&counts, &expected);
    assert!(p > 1e-3, "topology chi-square p = {p}: {counts:?}");
}

/// Density of theta for the three-leaf, mutation-free infinite-sites target
/// with a flat prior: E[exp(-theta L / 2)] over the coalescent prior.
fn theta_density(theta: f64) -> f64 {
    (3.0 / (3.0 + 1.5 * theta)) * (1.0 / (1.0 + theta))
}

fn theta_cdf_by_quadrature() -> impl Fn(f64) -> f64 {
    // composite Simpson on a mapped grid u = theta / (1 + theta)
    let m = 20_000;
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let th = u / (1.0 - u);
        theta_density(th) / ((1.0 - u) * (1.0 - u))
    };
    let h = 1.0 / m as f64;
    let mut cum = vec![0.0; m + 1];
    for k in 0..m {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        cum[k + 1] = cum[k] + h / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
    }
    let total = cum[m];
    move |th: f64| {
        if th <= 0.0 {
            return 0.0;
        }
        let u = th / (1.0 + th);
        let pos = u / h;
        let k = (pos.floor() as usize).min(m - 1);
        let frac = pos - k as f64;
        (cum[k] + frac * (cum[k + 1] - cum[k])) / total
    }
}

#[test]
fn theta_marginal_without_mutations() {
    let target = IsmTarget::<f64>::new(IsmDataset::empty(3).unwrap());
    let mut rng = rng(5);
    let init = target.initial_state(&mut rng, 10, 1.0).unwrap();
    let cfg = MhConfig {
        sigma_theta: 3.0,
        sigma_times: 1.0,
        kappa: 0.0,
    };
    let (trace, _) = mh_trace(&target, init, 200_000, cfg, 6);
    let x = trace.discretize_fn(5_000, |_, c| c[2]);
    let cdf = theta_cdf_by_quadrature();
    let (d, p) = ks_test(&x, cdf);
    assert!(p > 1e-3, "theta KS d = {d}, p = {p}");
}

#[test]
fn incompatible_spr_proposals_skip_the_density() {
    let (target, state) = random_ism(31, ThetaPrior::Flat);
    let mut state = state;
    let mut lp = target.log_density(&state.mode, &state.coords);
    let mut rng = stream_rng(1, 0);
    let mut stats = MhStats::default();
    let before = target.density_evals();
    let tries = 5000;
    for _ in 0..tries {
        let o = spr_step(&target, &mut state, &mut lp, &mut rng, &mut stats);
        stats.count(o.kind, o.accepted);
    }
    let evals = target.density_evals() - before;
    assert!(stats.spr_incompatible > 0);
    assert_eq!(evals, tries - stats.spr_infeasible - stats.spr_incompatible);
}

#[test]
fn tiny_time_steps_are_accepted() {
    let target = KingmanPrior::<f64>::new(5);
    let mut state = prior_state(5, 8);
    let mut lp = target.log_density(&state.mode, &state.coords);
    let mut rng = stream_rng(2, 0);
    let mut acc = 0;
    for _ in 0..200 {
        acc += usize::from(times_step(&target, &mut state, &mut lp, 1e-9, &mut rng).accepted);
    }
    assert!(acc >= 198);
}

#[test]
fn zero_kappa_reproduces_pure_zigzag() {
    let target = KingmanPrior::<f64>::new(5);
    let init = prior_state(5, 9);
    let pure = simulate(&target, init.clone(), 50.0, 7).unwrap();
    let mut hybrid = HybridMoves::new(0.0, 1.0).unwrap();
    let mut trace = EventTrace::new(init.clone());
    simulate_with(&target, init, 50.0, 7, SimOptions::default(), &mut hybrid, &mut trace).unwrap();
    assert_eq!(pure, trace);
}

#[test]
fn hybrid_move_rate_matches_kappa() {
    let target = KingmanPrior::<f64>::new(4);
    let init = prior_state(4, 10);
    let mut hybrid = HybridMoves::new(10.0, 1.0).unwrap();
    let t_end = 500.0;
    let (_, stats) = simulate_with(
        &target,
        init,
        t_end,
        3,
        SimOptions::default(),
        &mut hybrid,
        &mut NullRecorder,
    )
    .unwrap();
    let expect = 10.0 * t_end;
    assert!(
        (stats.mh_moves as f64 - expect).abs() < 3.0 * expect.sqrt(),
        "{}",
        stats.mh_moves
    );
}

#[test]
fn hybrid_keeps_the_prior_topology_marginal() {
    let n = 4;
    let target = KingmanPrior::<f64>::new(n);
    let init = prior_state(n, 11);
    let mut hybrid = HybridMoves::new(2.0, 1.0).unwrap();
    let mut trace = EventTrace::new(init.clone());
    simulate_with(
        &target,
        init,
        20_000.0,
        12,
        SimOptions::default(),
        &mut hybrid,
        &mut trace,
    )
    .unwrap();
    assert!(trace.count(|k| matches!(k, EventKind::MhMove { accepted: true, .. })) > 100);
    let occ = trace.occupation();
    let mut counts: Vec<f64> = RankedTopology::enumerate(n)
        .iter()
        .map(|t| occ.get(&t.mode_id()).copied().unwrap_or(0.0) * 4000.0)
        .collect();
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c *= 4000.0 / total);
    let (_, p) = chi_square(&counts, &[4000.0 / 18.0; 18]);
    assert!(p > 1e-3, "p = {p}");
    let h = trace.path_mean(|_, c| tree_height(c, n));
    assert!((h - 1.5).abs() < 0.05, "{h}");
}

#[test]
fn warmup_moves_scales_towards_a_quarter() {
    let (target, state) = random_ism(40, ThetaPrior::Flat);
    let cfg = MhConfig {
        sigma_theta: 50.0,
        sigma_times: 5.0,
        kappa: 0.0,
    };
    let run = run_mh(&target, state, 4000, 4000, cfg, 1, &mut NullRecorder).unwrap();
    let a = run.stats.acceptance(MhMoveKind::Theta).unwrap();
    assert!(run.config.sigma_theta < 50.0);
    assert!((0.1..0.5).contains(&a), "theta acceptance {a}");
}

#[test]
fn mh_is_deterministic_and_uses_zero_velocities() {
    let target = KingmanPrior::<f64>::new(4);
    let (a, _) = mh_trace(&target, prior_state(4, 1), 500, MhConfig::default(), 9);
    let (b, _) = mh_trace(&target, prior_state(4, 1), 500, MhConfig::default(), 9);
    assert_eq!(a, b);
    assert!(a.events.iter().all(|e| e.state.vels.iter().all(|&v| v == 0.0)));
    assert_eq!(a.end_time, 500.0);
    assert_eq!(a.events.len(), 1000);
}

#[test]
fn pure_marker_has_no_rate() {
    let target = KingmanPrior::<f64>::new(3);
    let mut p = Pure;
    let rate: f64 = tree_zigzag::engine::Interleave::<KingmanPrior<f64>, f64>::rate(&p);
    assert_eq!(rate, 0.0);
    let mut s = prior_state(3, 0);
    let mut r = stream_rng(0, 0);
    assert!(tree_zigzag::engine::Interleave::apply(&mut p, &target, &mut s, &mut r).is_err());
}
