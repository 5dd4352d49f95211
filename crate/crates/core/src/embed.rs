//! LP-aware reduction from a fractional NUkC solution to a layered firefighter tree, and the
//! lift of integral tree solutions back to ball placements.
//!
//! Tree level `l ∈ 1..=h` stands for class `l - 1`; level `h + 1` holds one leaf per point and
//! has budget 0. The tree is built bottom-up: each round clusters the current winners around
//! minimum-coverage representatives, which become the nodes one level up.

use crate::error::{Error, Result};
use crate::metric::{within, COVER_TOL};
use crate::model::{coverage, FractionalSolution, NukcInstance, NukcSolution};
use crate::rmfct::{rmfct_violation, FirefighterSolution, LayeredTree};

/// Slack for the tree constraints when checking an embedding.
pub const EMBED_TOL: f64 = 1e-7;

/// Ancestor distance bound of barrier trees, in units of the ancestor's radius.
pub const BARRIER_FACTOR: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    /// One clustering round per class; lifted balls have radius `2·r_{≥t}`.
    Basic,
    /// Clusters only where the radius more than doubles; lifted balls have radius `8·r_t`.
    Barrier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedResult {
    pub tree: LayeredTree,
    pub mode: EmbedMode,
    /// Levels where a clustering round ended (barrier mode only), descending.
    pub barrier_levels: Vec<usize>,
    /// `winners[l]`: sorted points mapped to level `l` (entry 0 is empty).
    pub winners: Vec<Vec<usize>>,
    /// Class radii of the embedded instance, `radii[l - 1]` for level `l`.
    pub radii: Vec<f64>,
}

impl EmbedResult {
    /// Number of class levels `h` (the leaves sit at `h + 1`).
    pub fn num_classes(&self) -> usize {
        self.radii.len()
    }

    /// `r_{≥t}` for tree level `l`: the sum of the radii of levels `l..=h`.
    pub fn radius_suffix(&self, l: usize) -> f64 {
        self.radii[l - 1..].iter().sum()
    }

    /// Radius the lift assigns to a chosen node at level `l`.
    pub fn lift_radius(&self, l: usize) -> f64 {
        match self.mode {
            EmbedMode::Basic => 2.0 * self.radius_suffix(l),
            EmbedMode::Barrier => BARRIER_FACTOR * self.radii[l - 1],
        }
    }

    /// Largest `d(ψ(a), ψ(v)) / r_{level(a)}` over ancestor/descendant pairs below the root.
    /// Pairs at distance zero count as ratio 0 even when the radius is 0.
    pub fn max_ancestor_ratio(&self, instance: &NukcInstance) -> f64 {
        let psi = self.tree.psi().expect("embedded trees carry psi");
        let space = instance.space();
        let mut worst: f64 = 0.0;
        for v in 0..self.tree.len() {
            let mut cur = self.tree.parent(v);
            while let Some(a) = cur {
                if a == self.tree.root() {
                    break;
                }
                let d = space.dist(psi[a], psi[v]);
                let r = self.radii[self.tree.level(a) - 1];
                let ratio = if d <= COVER_TOL {
                    0.0
                } else if r > 0.0 {
                    d / r
                } else {
                    f64::INFINITY
                };
                worst = worst.max(ratio);
                cur = self.tree.parent(a);
            }
        }
        worst
    }
}

/// Runs the reduction in basic mode over all points, checking that `x` is feasible at dilation
/// 1 and that the produced `y` satisfies the tree LP.
pub fn embed_basic(instance: &NukcInstance, x: &FractionalSolution) -> Result<EmbedResult> {
    embed(instance, x, EmbedMode::Basic, None, true)
}

/// Barrier-mode reduction over all points, with the same checks as [`embed_basic`] plus the
/// ancestor distance audit.
pub fn embed_barrier(instance: &NukcInstance, x: &FractionalSolution) -> Result<EmbedResult> {
    embed(instance, x, EmbedMode::Barrier, None, true)
}

/// General form: `leaves` restricts the leaf set (default all points) and `check` toggles the
/// feasibility checks on `x` and `y`. The barrier distance audit always runs.
pub fn embed(
    instance: &NukcInstance,
    x: &FractionalSolution,
    mode: EmbedMode,
    leaves: Option<&[usize]>,
    check: bool,
) -> Result<EmbedResult> {
    let h = instance.num_classes();
    let n = instance.num_points();
    let leaf_points: Vec<usize> = match leaves {
        Some(points) => {
            let mut p = points.to_vec();
            p.sort_unstable();
            p.dedup();
            p
        }
        None => (0..n).collect(),
    };
    if leaf_points.is_empty() {
        return Err(Error::Contract("no points to embed".into()));
    }
    let cov = coverage(instance, x, 1.0);
    if check {
        for &p in &leaf_points {
            if cov.total(p) < 1.0 - EMBED_TOL {
                return Err(Error::Contract(format!(
                    "point {p} is covered {} < 1 by the fractional solution",
                    cov.total(p)
                )));
            }
        }
        for t in 0..h {
            let mass = x.class_mass(t);
            if mass > instance.multiplicity(t) as f64 + EMBED_TOL {
                return Err(Error::Contract(format!(
                    "class {t} carries mass {mass} above its budget {}",
                    instance.multiplicity(t)
                )));
            }
        }
    }
    let radius = |level: usize| instance.radius(level - 1);
    let space = instance.space();

    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut node_level: Vec<usize> = Vec::new();
    let mut psi: Vec<usize> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut new_node = |level: usize, point: usize, value: f64| {
        parent.push(None);
        node_level.push(level);
        psi.push(point);
        y.push(value);
        parent.len() - 1
    };

    let mut winners = vec![Vec::new(); h + 2];
    let mut current: Vec<(usize, usize)> = leaf_points
        .iter()
        .map(|&p| (new_node(h + 1, p, 0.0), p))
        .collect();
    winners[h + 1] = leaf_points.clone();
    let mut barrier_levels = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut t = h + 1;
    while t >= 2 {
        let (top, gather) = match mode {
            EmbedMode::Basic => (t - 1, 2.0 * radius(t - 1)),
            EmbedMode::Barrier => {
                let limit = 2.0 * radius(t - 1);
                let top = (1..t)
                    .find(|&s| radius(s) <= limit)
                    .expect("level t-1 qualifies");
                (top, 2.0 * radius(top))
            }
        };
        // Winners of level t in ascending Cov_{≥t}, ties by point id. Cov_{≥h+1} is zero.
        let mut order: Vec<(usize, usize)> = current.clone();
        order.sort_by(|a, b| {
            cov.at_least(a.1, t - 1)
                .total_cmp(&cov.at_least(b.1, t - 1))
                .then(a.1.cmp(&b.1))
        });
        let mut alive = vec![true; order.len()];
        let mut next: Vec<(usize, usize)> = Vec::new();
        for i in 0..order.len() {
            if !alive[i] {
                continue;
            }
            let p = order[i].1;
            let mut below = Vec::new();
            for j in i..order.len() {
                if alive[j] && within(space.dist(p, order[j].1), gather + COVER_TOL) {
                    alive[j] = false;
                    below.push(order[j].0);
                }
            }
            let mut child_nodes = below;
            for level in (top..t).rev() {
                let w = new_node(level, p, cov.get(p, level - 1).min(1.0));
                for &c in &child_nodes {
                    edges.push((c, w));
                }
                child_nodes = vec![w];
                if level == top {
                    next.push((w, p));
                }
            }
        }
        for level in top..t {
            let mut pts: Vec<usize> = next.iter().map(|&(_, p)| p).collect();
            pts.sort_unstable();
            winners[level] = pts;
        }
        if mode == EmbedMode::Barrier {
            barrier_levels.push(top);
        }
        current = next;
        t = top;
    }
    let root = new_node(0, usize::MAX, 0.0);
    for &(w, _) in &current {
        edges.push((w, root));
    }
    for (c, p) in edges {
        parent[c] = Some(p);
    }

    // Renumber level by level so the root is 0 and the leaves come last.
    let mut order: Vec<usize> = (0..parent.len()).collect();
    order.sort_by_key(|&v| (node_level[v], v));
    let mut new_id = vec![0; parent.len()];
    for (i, &v) in order.iter().enumerate() {
        new_id[v] = i;
    }
    let tree_parent = order
        .iter()
        .map(|&v| parent[v].map(|p| new_id[p]))
        .collect();
    let mut budgets: Vec<usize> = instance.classes().iter().map(|c| c.multiplicity).collect();
    budgets.push(0);
    let mut tree_psi: Vec<usize> = order.iter().map(|&v| psi[v]).collect();
    tree_psi[0] = tree_psi.get(1).copied().unwrap_or(0);
    let tree = LayeredTree::new(tree_parent, budgets)?
        .with_psi(tree_psi)?
        .with_y(order.iter().map(|&v| y[v]).collect())?;

    let result = EmbedResult {
        tree,
        mode,
        barrier_levels,
        winners,
        radii: instance.classes().iter().map(|c| c.radius).collect(),
    };
    if check {
        let viol = rmfct_violation(&result.tree, result.tree.y().unwrap(), 1.0);
        if viol > EMBED_TOL {
            return Err(Error::Invariant(format!(
                "embedded y violates the tree LP by {viol}"
            )));
        }
    }
    if mode == EmbedMode::Barrier {
        let ratio = result.max_ancestor_ratio(instance);
        if ratio > BARRIER_FACTOR * (1.0 + 1e-9) {
            return Err(Error::Invariant(format!(
                "ancestor distance ratio {ratio} exceeds {BARRIER_FACTOR}"
            )));
        }
    }
    Ok(result)
}

/// Opens a ball at `ψ(w)` for every chosen node `w` at a class level, with radius
/// [`EmbedResult::lift_radius`]. Chosen leaves are rejected; leaves left unprotected, or
/// farther from their protector than the lift radius, are reported as uncovered points.
pub fn lift_tree_solution(embed: &EmbedResult, ff: &FirefighterSolution) -> Result<NukcSolution> {
    lift_with(embed, ff, |l| embed.lift_radius(l), None)
}

/// [`lift_tree_solution`] with a custom radius per level. When `space` is given, every leaf is
/// checked against its protector's radius.
pub(crate) fn lift_with(
    embed: &EmbedResult,
    ff: &FirefighterSolution,
    radius_of_level: impl Fn(usize) -> f64,
    space: Option<&crate::metric::MetricSpace>,
) -> Result<NukcSolution> {
    let tree = &embed.tree;
    let psi = tree.psi().expect("embedded trees carry psi");
    let h = embed.num_classes();
    let mut chosen = vec![false; tree.len()];
    let mut solution = NukcSolution::default();
    for &w in &ff.chosen {
        let l = tree.level(w);
        if l == 0 || l > h {
            return Err(Error::Contract(format!(
                "node {w} at level {l} has no ball class"
            )));
        }
        chosen[w] = true;
        solution.push(psi[w], l - 1, radius_of_level(l));
    }
    let mut uncovered = Vec::new();
    for &leaf in tree.leaves() {
        let protector = tree.path_to_root(leaf).into_iter().find(|&v| chosen[v]);
        let ok = match (protector, space) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(w), Some(space)) => {
                let tol = COVER_TOL * (2 * h + 2) as f64;
                within(
                    space.dist(psi[w], psi[leaf]),
                    radius_of_level(tree.level(w)) + tol,
                )
            }
        };
        if !ok {
            uncovered.push(psi[leaf]);
        }
    }
    if !uncovered.is_empty() {
        uncovered.sort_unstable();
        return Err(Error::Uncovered(uncovered));
    }
    Ok(solution)
}

/// [`lift_tree_solution`] that also checks every leaf's distance to its protector.
pub fn lift_tree_solution_checked(
    embed: &EmbedResult,
    ff: &FirefighterSolution,
    instance: &NukcInstance,
) -> Result<NukcSolution> {
    lift_with(embed, ff, |l| embed.lift_radius(l), Some(instance.space()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;
    use crate::model::{min_feasible_dilation, RadiusClass};

    fn line(xs: &[f64]) -> MetricSpace {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_coords(&coords).unwrap()
    }

    #[test]
    fn single_point() {
        let inst = NukcInstance::from_radii(line(&[0.0]), &[1.0]).unwrap();
        let x = FractionalSolution::new(1, 1, vec![1.0], false);
        let e = embed_basic(&inst, &x).unwrap();
        assert_eq!(e.tree.height(), 2);
        assert_eq!(e.tree.len(), 3);
        assert_eq!(e.tree.y().unwrap()[1], 1.0);
        let ball = lift_tree_solution(&e, &FirefighterSolution::new(vec![1])).unwrap();
        assert_eq!(ball.balls.len(), 1);
        assert_eq!(ball.balls[0].center, 0);
    }

    #[test]
    fn far_apart_points_stay_separate() {
        let inst = NukcInstance::new(line(&[0.0, 10.0]), vec![RadiusClass::new(2, 1.0)]).unwrap();
        let x = FractionalSolution::new(2, 1, vec![1.0, 1.0], false);
        let e = embed_basic(&inst, &x).unwrap();
        assert_eq!(e.winners[1], vec![0, 1]);
        assert_eq!(e.tree.level_nodes(1).len(), 2);
        assert!(e
            .tree
            .level_nodes(1)
            .iter()
            .all(|&v| e.tree.y().unwrap()[v] == 1.0));
    }

    #[test]
    fn rejects_infeasible_x() {
        let inst = NukcInstance::from_radii(line(&[0.0, 10.0]), &[1.0]).unwrap();
        let x = FractionalSolution::new(2, 1, vec![1.0, 0.0], false);
        assert!(matches!(embed_basic(&inst, &x), Err(Error::Contract(_))));
    }

    #[test]
    fn uniform_radii_lift_radii() {
        let inst =
            NukcInstance::with_levels(line(&[0.0, 1.0, 2.0]), vec![RadiusClass::new(1, 1.0); 3])
                .unwrap();
        let x = FractionalSolution::new(
            3,
            3,
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            false,
        );
        let basic = embed_basic(&inst, &x).unwrap();
        assert_eq!(basic.lift_radius(1), 6.0);
        let barrier = embed_barrier(&inst, &x).unwrap();
        assert_eq!(barrier.lift_radius(1), 8.0);
        assert_eq!(barrier.barrier_levels, vec![1]);
    }

    #[test]
    fn lift_reports_unprotected_leaves() {
        let inst = NukcInstance::new(line(&[0.0, 10.0]), vec![RadiusClass::new(2, 1.0)]).unwrap();
        let x = FractionalSolution::new(2, 1, vec![1.0, 1.0], false);
        let e = embed_basic(&inst, &x).unwrap();
        let first = e.tree.level_nodes(1)[0];
        let err = lift_tree_solution(&e, &FirefighterSolution::new(vec![first])).unwrap_err();
        assert_eq!(err, Error::Uncovered(vec![1]));
    }

    #[test]
    fn embeds_fractional_optimum() {
        let inst = NukcInstance::from_radii(line(&[0.0, 1.0, 3.0, 7.0, 8.0]), &[2.0, 0.5]).unwrap();
        let (alpha, x) = min_feasible_dilation(&inst).unwrap();
        let scaled = inst.scaled(alpha);
        for e in [
            embed_basic(&scaled, &x).unwrap(),
            embed_barrier(&scaled, &x).unwrap(),
        ] {
            assert!(rmfct_violation(&e.tree, e.tree.y().unwrap(), 1.0) <= EMBED_TOL);
            assert_eq!(e.tree.leaves().len(), 5);
        }
    }
}
