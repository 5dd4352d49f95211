#![allow(dead_code)]

use nukc::gadgets::{random_euclidean, random_metric};
use nukc::metric::MetricSpace;
use nukc::model::{NukcInstance, RadiusClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Euclidean plane for even seeds, a random graph metric for odd ones.
pub fn space(n: usize, seed: u64) -> MetricSpace {
    if seed.is_multiple_of(2) {
        random_euclidean(n, 2, seed).unwrap()
    } else {
        random_metric(n, seed).unwrap()
    }
}

/// Radii drawn from the pairwise distances (halved or not), so candidate dilations are varied.
pub fn radius(space: &MetricSpace, rng: &mut ChaCha8Rng) -> f64 {
    let d = space.distinct_distances();
    let pick = d[rng.gen_range(0..d.len())];
    let r = if rng.gen_bool(0.5) { pick } else { pick / 2.0 };
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Random instance with `n` points and the given multiplicities, radii non-increasing.
pub fn instance(n: usize, multiplicities: &[usize], seed: u64) -> NukcInstance {
    let mut g = rng(seed ^ 0x9e37_79b9);
    let sp = space(n, seed);
    let mut radii: Vec<f64> = multiplicities.iter().map(|_| radius(&sp, &mut g)).collect();
    radii.sort_by(|a, b| b.total_cmp(a));
    let classes = multiplicities
        .iter()
        .zip(radii)
        .map(|(&k, r)| RadiusClass::new(k, r))
        .collect();
    NukcInstance::with_levels(sp, classes).unwrap()
}

/// Random instance with `k` singleton radii.
pub fn singletons(n: usize, k: usize, seed: u64) -> NukcInstance {
    instance(n, &vec![1; k], seed)
}

/// Independent per-level sums and per-leaf path sums of a tree's `y`.
pub fn tree_sums(tree: &nukc::rmfct::LayeredTree, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let levels = (0..=tree.height())
        .map(|l| tree.level_nodes(l).iter().map(|&v| y[v]).sum())
        .collect();
    let paths = tree
        .leaves()
        .iter()
        .map(|&leaf| {
            let mut v = leaf;
            let mut s = 0.0;
            while let Some(p) = tree.parent(v) {
                s += y[v];
                v = p;
            }
            s
        })
        .collect();
    (levels, paths)
}

/// Whether every leaf has a chosen node (itself included) on its way to the root.
pub fn hits_all_paths(tree: &nukc::rmfct::LayeredTree, chosen: &[usize]) -> bool {
    tree.leaves().iter().all(|&leaf| {
        let mut v = leaf;
        loop {
            if chosen.contains(&v) {
                return true;
            }
            match tree.parent(v) {
                Some(p) if p != tree.root() => v = p,
                _ => return false,
            }
        }
    })
}
