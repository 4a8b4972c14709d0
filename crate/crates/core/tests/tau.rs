mod common;

use std::collections::BTreeSet;

use common::rng;
use proptest::prelude::*;
use tree_zigzag::tau::{cross_boundary, BoundaryType, PivotDir, RankedTopology};

fn random_topology(n: usize, seed: u64) -> RankedTopology {
    RankedTopology::simulate_coalescent(n, &mut rng(seed)).unwrap().0
}

/// Unranked clades (leaf sets of internal nodes).
fn clades(t: &RankedTopology) -> BTreeSet<Vec<usize>> {
    t.leaf_sets().into_iter().skip(t.n()).collect()
}

proptest! {
    #[test]
    fn swap_is_an_involution(n in 4usize..12, seed in any::<u64>(), pick in any::<usize>()) {
        let t = random_topology(n, seed);
        let swappable: Vec<usize> = (2..=n - 2).filter(|&i| !t.nested_at(i)).collect();
        prop_assume!(!swappable.is_empty());
        let i = swappable[pick % swappable.len()];
        let s = t.swap(i).unwrap();
        s.validate().unwrap();
        prop_assert_ne!(&s, &t);
        prop_assert_eq!(clades(&s), clades(&t));
        prop_assert_eq!(s.swap(i).unwrap(), t);
    }

    #[test]
    fn pivots_cycle_through_the_three_resolutions(n in 3usize..12, seed in any::<u64>(), pick in any::<usize>()) {
        let t = random_topology(n, seed);
        let nested: Vec<usize> = (2..n).filter(|&i| t.nested_at(i)).collect();
        prop_assume!(!nested.is_empty());
        let i = nested[pick % nested.len()];
        let family = |t: &RankedTopology| -> BTreeSet<u64> {
            [Some(t.clone()), t.pivot(i, PivotDir::Up).ok(), t.pivot(i, PivotDir::Down).ok()]
                .into_iter()
                .flatten()
                .map(|x| x.mode_id())
                .collect()
        };
        let base = family(&t);
        prop_assert_eq!(base.len(), 3);
        for dir in [PivotDir::Up, PivotDir::Down] {
            let p = t.pivot(i, dir).unwrap();
            p.validate().unwrap();
            prop_assert!(p.nested_at(i));
            prop_assert_eq!(family(&p), base.clone());
            // all clades except the one created at merger i - 1 survive
            let lost = clades(&t).difference(&clades(&p)).count();
            prop_assert_eq!(lost, 1);
        }
    }

    #[test]
    fn crossings_only_touch_the_face_mergers(n in 3usize..10, seed in any::<u64>(), k in 2usize..9) {
        prop_assume!(k < n);
        let t = random_topology(n, seed);
        let mut r = rng(seed ^ 1);
        match cross_boundary(&t, k - 1, &mut r).unwrap() {
            None => prop_assert_eq!(t.classify_boundary(k).kind, BoundaryType::Type1),
            Some(s) => {
                s.validate().unwrap();
                // only the two mergers meeting at the face change their clades
                let (a, b) = (t.leaf_sets(), s.leaf_sets());
                for r in (1..n).filter(|&r| r + 1 != k && r != k) {
                    prop_assert_eq!(&a[t.merger_node(r)], &b[s.merger_node(r)]);
                }
                let (x, y) = (t.merger_node(k - 1), t.merger_node(k));
                if t.classify_boundary(k).kind == BoundaryType::Type2 {
                    // a swap exchanges the two clades between ranks
                    prop_assert_eq!(&a[x], &b[y]);
                    prop_assert_eq!(&a[y], &b[x]);
                } else {
                    prop_assert_eq!(&a[y], &b[y]);
                }
                prop_assert_eq!(s.classify_boundary(k).kind, t.classify_boundary(k).kind);
            }
        }
    }

    #[test]
    fn display_parses_back(n in 2usize..15, seed in any::<u64>()) {
        let t = random_topology(n, seed);
        let text = t.to_string();
        prop_assert_eq!(RankedTopology::parse(n, &text).unwrap(), t);
    }
}

#[test]
fn crossing_kernel_is_symmetric_for_four_leaves() {
    // number of ways to go T -> S equals the number S -> T for every face
    let all = RankedTopology::enumerate(4);
    for t in &all {
        for k in 2..4 {
            let targets: Vec<RankedTopology> = match t.classify_boundary(k).kind {
                BoundaryType::Type1 => continue,
                BoundaryType::Type2 => vec![t.swap(k).unwrap()],
                BoundaryType::Type3 => vec![t.pivot(k, PivotDir::Up).unwrap(), t.pivot(k, PivotDir::Down).unwrap()],
            };
            for s in &targets {
                let back: Vec<RankedTopology> = match s.classify_boundary(k).kind {
                    BoundaryType::Type2 => vec![s.swap(k).unwrap()],
                    BoundaryType::Type3 => vec![s.pivot(k, PivotDir::Up).unwrap(), s.pivot(k, PivotDir::Down).unwrap()],
                    BoundaryType::Type1 => unreachable!(),
                };
                assert_eq!(back.len(), targets.len());
                assert!(back.contains(t), "{t} -> {s} has no way back on face {k}");
            }
        }
    }
}

#[test]
fn coalescent_draws_are_uniform_on_ranked_topologies() {
    let all = RankedTopology::enumerate(5);
    assert_eq!(all.len(), 180);
    let mut r = rng(77);
    let mut counts = std::collections::HashMap::new();
    let draws = 90_000;
    for _ in 0..draws {
        let (t, _) = RankedTopology::simulate_coalescent(5, &mut r).unwrap();
        *counts.entry(t.mode_id()).or_insert(0.0) += 1.0;
    }
    let obs: Vec<f64> = all
        .iter()
        .map(|t| counts.get(&t.mode_id()).copied().unwrap_or(0.0))
        .collect();
    let (_, p) = tree_zigzag::diagnostics::stats::chi_square(&obs, &vec![draws as f64 / 180.0; 180]);
    assert!(p > 1e-3, "p = {p}");
}
