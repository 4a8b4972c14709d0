use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::data::IsmDataset;
use crate::error::Result;
use crate::tau::{EdgeTable, RankedTopology};

/// Drops Poisson(`theta * l / 2`) mutations with uniform positions on every
/// edge and hands each one to all leaves below it.
pub fn simulate_ism_data<G: Rng + ?Sized>(
    topo: &RankedTopology,
    times: &[f64],
    theta: f64,
    rng: &mut G,
) -> Result<IsmDataset> {
    let n = topo.n();
    let edges = EdgeTable::build(topo, times, None);
    let sets = topo.leaf_sets();
    let mut leaves = vec![Vec::new(); n];
    let mut used = HashSet::new();
    for e in edges.edges() {
        let count = poisson(theta * e.length / 2.0, rng);
        for _ in 0..count {
            let pos = loop {
                let x: f64 = rng.random();
                if x > 0.0 && used.insert(x.to_bits()) {
                    break x;
                }
            };
            for &leaf in &sets[e.child] {
                leaves[leaf].push(pos);
            }
        }
    }
    IsmDataset::new(leaves)
}

pub(crate) fn poisson<G: Rng + ?Sized>(mean: f64, rng: &mut G) -> u64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    } else {
        0
    }
}
