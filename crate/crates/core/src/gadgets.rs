//! Instance generators: the firefighter-to-NUkC gadget and seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::model::{NukcInstance, RadiusClass};
use crate::rmfct::LayeredTree;

/// A gadget instance with its exact integer data.
#[derive(Debug, Clone, PartialEq)]
pub struct Gadget {
    /// Points are the tree leaves, classes are `r_1 ≥ … ≥ r_h` with one ball each.
    pub instance: NukcInstance,
    /// Tree node of each point.
    pub leaves: Vec<usize>,
    /// `r_0, r_1, …, r_h` with `r_h = 0`.
    pub level_radii: Vec<u64>,
    /// Leaf distances in integer arithmetic.
    pub int_dist: Vec<Vec<u64>>,
}

impl Gadget {
    /// Class index of tree level `t` (levels `1..=h`).
    pub fn class_of_level(t: usize) -> usize {
        t - 1
    }
}

fn overflow() -> Error {
    Error::SizeBudget("gadget arithmetic overflows 64 bits".into())
}

/// Builds the gadget of `tree`: edges entering level `i` weigh `(2c+1)^(h-i+1)`, points are the
/// leaves under the tree metric, and radii follow `r_h = 0`, `r_(i-1) = (2c+1)·r_i + 2(2c+1)`.
/// Two leaves whose lca sits at level `t` end up exactly `r_t` apart; this is checked.
pub fn hardness_gadget(tree: &LayeredTree, c: u64) -> Result<Gadget> {
    let h = tree.height();
    if h < 2 {
        return Err(Error::InvalidTree(format!(
            "gadget needs height at least 2, got {h}"
        )));
    }
    if c < 1 {
        return Err(Error::Contract(
            "gadget parameter c must be at least 1".into(),
        ));
    }
    let base = 2 * c + 1;
    if h as f64 * (base as f64).log2() > 62.0 {
        return Err(Error::SizeBudget(format!(
            "h·log2(2c+1) = {:.2} exceeds 62",
            h as f64 * (base as f64).log2()
        )));
    }
    // weight[i] for the edge between levels i-1 and i.
    let mut weight = vec![0u64; h + 1];
    for (i, w) in weight.iter_mut().enumerate().skip(1) {
        *w = base.checked_pow((h - i + 1) as u32).ok_or_else(overflow)?;
    }
    let mut level_radii = vec![0u64; h + 1];
    for i in (1..=h).rev() {
        level_radii[i - 1] = base
            .checked_mul(level_radii[i])
            .and_then(|v| v.checked_add(2 * base))
            .ok_or_else(overflow)?;
    }
    let leaves = tree.leaves().to_vec();
    let n = leaves.len();
    let mut int_dist = vec![vec![0u64; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let (mut u, mut v) = (leaves[a], leaves[b]);
            let mut d = 0u64;
            while u != v {
                let l = tree.level(u);
                d = d.checked_add(2 * weight[l]).ok_or_else(overflow)?;
                u = tree
                    .parent(u)
                    .expect("equal-depth leaves meet below the root");
                v = tree
                    .parent(v)
                    .expect("equal-depth leaves meet below the root");
            }
            let t = tree.level(u);
            if d != level_radii[t] {
                return Err(Error::Invariant(format!(
                    "leaves {} and {} with lca at level {t} are {d} apart, expected {}",
                    leaves[a], leaves[b], level_radii[t]
                )));
            }
            int_dist[a][b] = d;
            int_dist[b][a] = d;
        }
    }
    let matrix = int_dist
        .iter()
        .map(|row| row.iter().map(|&d| d as f64).collect())
        .collect();
    let classes = (1..=h)
        .map(|t| RadiusClass::new(1, level_radii[t] as f64))
        .collect();
    let instance = NukcInstance::with_levels(MetricSpace::new(matrix)?, classes)?;
    Ok(Gadget {
        instance,
        leaves,
        level_radii,
        int_dist,
    })
}

fn require_points(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInstance(
            "at least one point is required".into(),
        ));
    }
    Ok(())
}

/// `n` points uniform in `[0, 10)^dim`.
pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect()
}

pub fn random_euclidean(n: usize, dim: usize, seed: u64) -> Result<MetricSpace> {
    require_points(n)?;
    MetricSpace::from_coords(&random_points(n, dim, seed))
}

/// Shortest-path closure of a random graph: a path through all points plus each other edge with
/// probability 1/2, integer weights in `1..=10`.
pub fn random_metric(n: usize, seed: u64) -> Result<MetricSpace> {
    require_points(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.gen_bool(0.5) {
                let w = f64::from(rng.gen_range(1u32..=10));
                d[i][j] = w;
                d[j][i] = w;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    MetricSpace::new(d)
}

/// A tree with every leaf at `depth`, each internal node having `1..=max_branching` children,
/// and budget 1 on every level.
pub fn random_layered_tree(depth: usize, max_branching: usize, seed: u64) -> Result<LayeredTree> {
    if depth == 0 || max_branching == 0 {
        return Err(Error::InvalidTree(
            "depth and branching must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parent = vec![None];
    let mut frontier = vec![0];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &v in &frontier {
            for _ in 0..rng.gen_range(1..=max_branching) {
                next.push(parent.len());
                parent.push(Some(v));
            }
        }
        frontier = next;
    }
    LayeredTree::new(parent, vec![1; depth])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::validate_metric;

    fn binary(h: usize) -> LayeredTree {
        let mut parent = vec![None];
        let mut frontier = vec![0];
        for _ in 0..h {
            let mut next = Vec::new();
            for &v in &frontier {
                for _ in 0..2 {
                    next.push(parent.len());
                    parent.push(Some(v));
                }
            }
            frontier = next;
        }
        LayeredTree::new(parent, vec![1; h]).unwrap()
    }

    #[test]
    fn height_two_binary_gadget() {
        let g = hardness_gadget(&binary(2), 1).unwrap();
        assert_eq!(g.level_radii, vec![24, 6, 0]);
        assert_eq!(g.instance.num_points(), 4);
        let radii: Vec<f64> = (0..2).map(|t| g.instance.radius(t)).collect();
        assert_eq!(radii, vec![6.0, 0.0]);
        assert_eq!(g.int_dist[0][1], 6);
        assert_eq!(g.int_dist[0][2], 24);
    }

    #[test]
    fn gadget_rejects_short_trees_and_overflow() {
        assert!(hardness_gadget(&binary(1), 1).is_err());
        let deep = random_layered_tree(40, 1, 0).unwrap();
        assert!(matches!(
            hardness_gadget(&deep, 1),
            Err(Error::SizeBudget(_))
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            random_euclidean(5, 2, 7).unwrap(),
            random_euclidean(5, 2, 7).unwrap()
        );
        assert_eq!(random_metric(6, 3).unwrap(), random_metric(6, 3).unwrap());
        assert_eq!(
            random_layered_tree(3, 3, 1).unwrap(),
            random_layered_tree(3, 3, 1).unwrap()
        );
        assert_eq!(random_euclidean(1, 3, 0).unwrap().len(), 1);
        assert!(random_metric(0, 0).is_err());
    }

    #[test]
    fn random_metric_is_valid() {
        for seed in 0..20 {
            let m = random_metric(8, seed).unwrap();
            assert!(validate_metric(&m.to_matrix()).unwrap().is_ok());
        }
    }
}
