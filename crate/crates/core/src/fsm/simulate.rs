use rand::Rng;

use super::data::FsmDataset;
use crate::error::Result;
use crate::ism::poisson;
use crate::tau::{EdgeTable, RankedTopology};

/// Draws root types uniformly and lets each site flip along every edge at rate
/// `theta / (2 |S|)`.
pub fn simulate_fsm_data<G: Rng + ?Sized>(
    topo: &RankedTopology,
    times: &[f64],
    theta: f64,
    sites: usize,
    rng: &mut G,
) -> Result<FsmDataset> {
    let n = topo.n();
    let edges = EdgeTable::build(topo, times, None);
    let rate = theta / (2.0 * sites as f64);
    let mut types = vec![vec![0u8; sites]; topo.node_count()];
    for h in types[topo.root()].iter_mut() {
        *h = u8::from(rng.random::<bool>());
    }
    // parents have larger ids than their children
    for node in (0..topo.root()).rev() {
        let p = topo.parent(node).expect("non-root node has a parent");
        let l = edges.edge(node).length;
        let parent = types[p].clone();
        for (h, &g) in types[node].iter_mut().zip(&parent) {
            *h = g ^ (poisson(rate * l, rng) % 2) as u8;
        }
    }
    types.truncate(n);
    FsmDataset::new(vec!['0', '1'], types)
}
