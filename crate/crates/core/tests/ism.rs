mod common;

use common::*;
use tree_zigzag::engine::{simulate, EventKind, TargetModel};
use tree_zigzag::ism::{perfect_phylogeny, simulate_ism_data, IsmDataset, IsmTarget};
use tree_zigzag::tau::{prior_mean, RankedTopology};
use tree_zigzag::theta::ThetaPrior;
use tree_zigzag::Error;

#[test]
fn rates_match_finite_differences() {
    for seed in 0..100 {
        let prior = match seed % 3 {
            0 => ThetaPrior::Flat,
            1 => ThetaPrior::Gamma { shape: 2.0, rate: 0.5 },
            _ => ThetaPrior::Gamma { shape: 0.7, rate: 2.0 },
        };
        let (target, state) = random_ism(seed, prior);
        for i in 0..target.dim() {
            let g = rate_partial(&target, &state, i);
            let fd = fd_partial(&target, &state, i);
            assert!(
                (g - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "seed {seed} coord {i}: {g} vs {fd}"
            );
        }
    }
}

#[test]
fn bounds_dominate_rates() {
    for seed in 0..200 {
        let prior = if seed % 2 == 0 {
            ThetaPrior::Flat
        } else {
            ThetaPrior::Gamma { shape: 2.0, rate: 1.5 }
        };
        let (target, state) = random_ism(1000 + seed, prior);
        for frac in [1.0, 0.3, 1e-3] {
            let excess = dominance_excess(&target, &state, frac, 200);
            assert!(excess <= 1e-12, "seed {seed} fraction {frac}: excess {excess}");
        }
    }
}

#[test]
fn rejects_incompatible_carrier_sets() {
    let err = IsmDataset::new(vec![vec![0.1, 0.2], vec![0.1], vec![0.2], vec![]]).unwrap_err();
    assert!(matches!(err, Error::Data(_)));
    assert!(IsmDataset::new(vec![vec![0.5], vec![0.5]]).is_err());
    assert!(IsmDataset::new(vec![vec![1.5], vec![]]).is_err());
}

#[test]
fn text_and_summary_round_trip() {
    let data = IsmDataset::new(vec![vec![0.25, 0.5], vec![0.25], vec![], vec![0.75]]).unwrap();
    let back = IsmDataset::parse(&data.to_text()).unwrap();
    assert_eq!(back, data);
    let summary = IsmDataset::from_summary(&data.to_summary()).unwrap();
    assert_eq!(summary.n(), 4);
    assert_eq!(summary.total_mutations(), 3);
}

#[test]
fn perfect_phylogeny_always_fits() {
    for seed in 0..50 {
        let mut rng = rng(seed);
        let n = 3 + (seed as usize % 10);
        let (topo, times) = RankedTopology::simulate_coalescent(n, &mut rng).unwrap();
        let data = simulate_ism_data(&topo, &times, 6.0, &mut rng).unwrap();
        assert!(data.assign(&topo).is_some());
        let pp = perfect_phylogeny(&data).unwrap();
        assert!(data.assign(&pp).is_some(), "seed {seed}");
    }
}

#[test]
fn simulated_mutation_count_matches_tree_length() {
    // E[M] = theta / 2 * total branch length, conditional on the tree
    let mut rng = rng(3);
    let topo = RankedTopology::parse(3, "({1,2},{{1,2},3})").unwrap();
    let times = [0.4, 0.9];
    let total = 3.0 * 0.4 + 2.0 * 0.9;
    let theta = 2.5;
    let reps = 20000;
    let sum: u32 = (0..reps)
        .map(|_| {
            simulate_ism_data(&topo, &times, theta, &mut rng)
                .unwrap()
                .total_mutations()
        })
        .sum();
    let mean = sum as f64 / reps as f64;
    let expect = theta / 2.0 * total;
    assert!(
        (mean - expect).abs() < 4.0 * (expect / reps as f64).sqrt(),
        "{mean} vs {expect}"
    );
}

#[test]
fn run_keeps_data_consistent_and_continuous() {
    let (target, state) = random_ism(7, ThetaPrior::Flat);
    let n = target.data().n();
    let trace = simulate(&target, state, 200.0, 11).unwrap();
    let mut prev = trace.initial.clone();
    let mut prev_t = 0.0;
    let mut crosses = 0;
    for e in &trace.events {
        let dt = e.time - prev_t;
        for j in 0..n {
            let expect = (prev.coords[j] + prev.vels[j] * dt).max(0.0);
            assert!((e.state.coords[j] - expect).abs() <= 1e-9 * expect.max(1.0));
        }
        assert!(target.data().assign(&e.state.mode.topo).as_deref() == Some(&e.state.mode.mutations[..]));
        assert!(target.log_density(&e.state.mode, &e.state.coords).is_finite());
        if matches!(e.kind, EventKind::BoundaryCross { .. }) {
            crosses += 1;
        }
        prev = e.state.clone();
        prev_t = e.time;
    }
    assert!(crosses > 0);
}

#[test]
fn initial_state_respects_speeds() {
    let (target, _) = random_ism(12, ThetaPrior::Flat);
    let mut rng = rng(1);
    let s = target.initial_state(&mut rng, 100, 0.7).unwrap();
    let n = target.data().n();
    for i in 1..n {
        assert!((s.vels[i - 1].abs() - prior_mean(n, i)).abs() < 1e-15);
    }
    assert!((s.vels[n - 1].abs() - 0.7).abs() < 1e-15);
    assert!(s.coords[n - 1] >= 0.1);
}

#[test]
fn empty_data_is_prior_in_tree_coordinates() {
    let target = IsmTarget::<f64>::new(IsmDataset::empty(4).unwrap());
    let mode = target
        .mode(RankedTopology::parse(4, "({1,2},{3,4},{{1,2},{3,4}})").unwrap())
        .unwrap();
    let a = target.log_density(&mode, &[0.1, 0.2, 0.3, 1.0]);
    let b = target.log_density(&mode, &[0.2, 0.2, 0.3, 1.0]);
    // coefficient of t_1 is (4)(3 + theta)/2 = 8 at theta = 1
    assert!(((a - b) - 0.8).abs() < 1e-12);
}
