#![allow(dead_code)]

use rand::Rng;
use tree_zigzag::engine::{stream_rng, HybridState, SimRng, TargetModel};
use tree_zigzag::fsm::{simulate_fsm_data, FsmTarget};
use tree_zigzag::ism::{perfect_phylogeny, simulate_ism_data, IsmMode, IsmTarget};
use tree_zigzag::tau::{prior_mean, RankedTopology};
use tree_zigzag::theta::ThetaPrior;

pub fn rng(seed: u64) -> SimRng {
    stream_rng(seed, 0)
}

pub fn exp(rng: &mut SimRng, mean: f64) -> f64 {
    -mean * (1.0 - rng.random::<f64>()).ln()
}

fn random_vels(rng: &mut SimRng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..n).map(|i| prior_mean(n, i)).collect();
    v.push(0.5 + rng.random::<f64>());
    for x in v.iter_mut() {
        if rng.random::<bool>() {
            *x = -*x;
        }
    }
    v
}

/// ISM target on data simulated from a coalescent tree, and a random interior
/// state consistent with the data.
pub fn random_ism(seed: u64, prior: ThetaPrior) -> (IsmTarget<f64>, HybridState<IsmMode, f64>) {
    let mut rng = rng(seed);
    let n = rng.random_range(3..9);
    let (topo, times) = RankedTopology::simulate_coalescent(n, &mut rng).unwrap();
    let theta = 1.0 + 5.0 * rng.random::<f64>();
    let data = simulate_ism_data(&topo, &times, theta, &mut rng).unwrap();
    let target = IsmTarget::new(data).with_prior(prior);
    let mut mode = None;
    for _ in 0..2000 {
        let (t, _) = RankedTopology::simulate_coalescent(n, &mut rng).unwrap();
        if let Some(m) = target.mode(t) {
            mode = Some(m);
            break;
        }
    }
    let mode = mode.unwrap_or_else(|| target.mode(perfect_phylogeny(target.data()).unwrap()).unwrap());
    let mut coords: Vec<f64> = (1..n).map(|i| exp(&mut rng, prior_mean(n, i)) + 1e-3).collect();
    coords.push(0.3 + 5.0 * rng.random::<f64>());
    let vels = random_vels(&mut rng, n);
    (target, HybridState::new(mode, coords, vels))
}

/// FSM target on data simulated from a coalescent tree, and a random state.
pub fn random_fsm(seed: u64, prior: ThetaPrior) -> (FsmTarget<f64>, HybridState<RankedTopology, f64>) {
    let mut rng = rng(seed);
    let n = rng.random_range(3..8);
    let sites = rng.random_range(1..12);
    let (topo, times) = RankedTopology::simulate_coalescent(n, &mut rng).unwrap();
    let theta = 1.0 + 5.0 * rng.random::<f64>();
    let data = simulate_fsm_data(&topo, &times, theta, sites, &mut rng).unwrap();
    let target = FsmTarget::new(data).unwrap().with_prior(prior);
    let (t, _) = RankedTopology::simulate_coalescent(n, &mut rng).unwrap();
    let mut coords: Vec<f64> = (1..n).map(|i| exp(&mut rng, prior_mean(n, i)) + 1e-3).collect();
    coords.push(0.3 + 5.0 * rng.random::<f64>());
    let vels = random_vels(&mut rng, n);
    (target, HybridState::new(t, coords, vels))
}

/// Central-difference derivative of the log density along coordinate `i`,
/// refined by one Richardson step.
pub fn fd_partial<T: TargetModel<f64>>(target: &T, state: &HybridState<T::Mode, f64>, i: usize) -> f64 {
    let f = |x: f64| {
        let mut c = state.coords.clone();
        c[i] = x;
        target.log_density(&state.mode, &c)
    };
    let x = state.coords[i];
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let h = 1e-3 * x;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Signed derivative recovered from the two flip rates:
/// `lambda(v) - lambda(-v) = -v d_i log pi`.
pub fn rate_partial<T: TargetModel<f64>>(target: &T, state: &HybridState<T::Mode, f64>, i: usize) -> f64 {
    let ctx = target.prepare(state);
    let fwd = target.flip_rate(state, &ctx, i, 0.0);
    let mut flipped = state.clone();
    flipped.vels[i] = -flipped.vels[i];
    let ctx2 = target.prepare(&flipped);
    let bwd = target.flip_rate(&flipped, &ctx2, i, 0.0);
    -(fwd - bwd) / state.vels[i]
}

/// Largest normalized excess `(lambda(s) - lambda*) / max(1, lambda*)` over a
/// grid on `[0, window]`, for a window of `fraction` times the localization.
pub fn dominance_excess<T: TargetModel<f64>>(
    target: &T,
    state: &HybridState<T::Mode, f64>,
    fraction: f64,
    grid: usize,
) -> f64 {
    let ctx = target.prepare(state);
    let loc = target.localize(state, &ctx);
    let window = loc.horizon * fraction;
    let bounds = target.flip_bounds(state, &ctx, window);
    let mut worst = f64::NEG_INFINITY;
    for (i, &b) in bounds.iter().enumerate() {
        for k in 0..grid {
            let s = window * k as f64 / (grid - 1) as f64;
            let r = target.flip_rate(state, &ctx, i, s);
            assert!(r.is_finite(), "rate not finite at coordinate {i}, offset {s}");
            worst = worst.max((r - b) / b.max(1.0));
        }
    }
    worst
}

/// Likelihood of one site by summing over all internal-node types.
pub fn brute_force_site(topo: &RankedTopology, times: &[f64], rate: f64, leaves: &[u8]) -> f64 {
    let n = topo.n();
    let mut node_time = vec![0.0; topo.node_count()];
    let mut acc = 0.0;
    for r in 1..n {
        acc += times[r - 1];
        node_time[n + r - 1] = acc;
    }
    let q = |h: u8, g: u8, t: f64| 0.5 + (if h == g { 0.5 } else { -0.5 }) * (-rate * t).exp();
    let internal = n - 1;
    let mut total = 0.0;
    for mask in 0u32..(1 << internal) {
        let ty = |node: usize| -> u8 {
            if node < n {
                leaves[node]
            } else {
                ((mask >> (node - n)) & 1) as u8
            }
        };
        let mut prod = 0.5;
        for c in 0..topo.root() {
            let p = topo.parent(c).unwrap();
            prod *= q(ty(p), ty(c), node_time[p] - node_time[c]);
        }
        total += prod;
    }
    total
}
