//! Budgeted firefighter instances on layered trees: the covering LP, two integral roundings and
//! a small exact solver.
//!
//! Level 0 holds the root; levels `1..=height` are the non-root layers. Every leaf sits at the
//! deepest level, so each leaf-to-root path meets every layer exactly once.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lp::{LpProblem, Relation};

/// Values within this of 0 or 1 count as integral.
pub const INTEGRAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredTree {
    parent: Vec<Option<usize>>,
    level: Vec<usize>,
    children: Vec<Vec<usize>>,
    levels: Vec<Vec<usize>>,
    /// `budgets[l - 1]` is the budget of level `l`.
    budgets: Vec<usize>,
    psi: Option<Vec<usize>>,
    y: Option<Vec<f64>>,
}

impl LayeredTree {
    /// `parent[v]` is `None` for the root only. `budgets` has one entry per non-root level.
    pub fn new(parent: Vec<Option<usize>>, budgets: Vec<usize>) -> Result<Self> {
        let n = parent.len();
        let (children, level, levels) = layer(&parent)?;
        let height = levels.len() - 1;
        if let Some(v) = (0..n).find(|&v| children[v].is_empty() && level[v] != height) {
            return Err(Error::InvalidTree(format!(
                "leaf {v} at level {} but the tree has height {height}",
                level[v]
            )));
        }
        if budgets.len() != height {
            return Err(Error::InvalidTree(format!(
                "{} budgets for {height} non-root levels",
                budgets.len()
            )));
        }
        Ok(Self {
            parent,
            level,
            children,
            levels,
            budgets,
            psi: None,
            y: None,
        })
    }

    /// Attaches the node-to-point mapping; it must be injective within each level.
    pub fn with_psi(mut self, psi: Vec<usize>) -> Result<Self> {
        if psi.len() != self.len() {
            return Err(Error::InvalidTree("psi length mismatch".into()));
        }
        for (l, nodes) in self.levels.iter().enumerate() {
            let mut seen: Vec<usize> = nodes.iter().map(|&v| psi[v]).collect();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidTree(format!(
                    "psi not injective on level {l}"
                )));
            }
        }
        self.psi = Some(psi);
        Ok(self)
    }

    pub fn with_y(mut self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(Error::InvalidTree("y length mismatch".into()));
        }
        self.y = Some(y);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.levels[0][0]
    }

    /// Number of non-root levels.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Nodes of level `l`, ascending.
    pub fn level_nodes(&self, l: usize) -> &[usize] {
        &self.levels[l]
    }

    pub fn leaves(&self) -> &[usize] {
        &self.levels[self.height()]
    }

    pub fn budget(&self, l: usize) -> usize {
        self.budgets[l - 1]
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn psi(&self) -> Option<&[usize]> {
        self.psi.as_deref()
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    /// Non-root nodes from `v` up to (excluding) the root, `v` first.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.height());
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            out.push(cur);
            cur = p;
        }
        out
    }

    pub fn is_ancestor(&self, a: usize, mut v: usize) -> bool {
        loop {
            if v == a {
                return true;
            }
            match self.parent[v] {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    /// Removes the deepest level; the former parents of leaves become the leaves and the last
    /// budget is dropped. Node ids are compacted in ascending order.
    pub fn without_leaf_level(&self) -> Result<Self> {
        if self.height() < 2 {
            return Err(Error::InvalidTree(
                "cannot drop the only non-root level".into(),
            ));
        }
        let h = self.height();
        let keep: Vec<usize> = (0..self.len()).filter(|&v| self.level[v] < h).collect();
        let mut new_id = vec![usize::MAX; self.len()];
        for (i, &v) in keep.iter().enumerate() {
            new_id[v] = i;
        }
        let parent = keep
            .iter()
            .map(|&v| self.parent[v].map(|p| new_id[p]))
            .collect();
        let mut tree = Self::new(parent, self.budgets[..h - 1].to_vec())?;
        if let Some(psi) = &self.psi {
            tree = tree.with_psi(keep.iter().map(|&v| psi[v]).collect())?;
        }
        if let Some(y) = &self.y {
            tree = tree.with_y(keep.iter().map(|&v| y[v]).collect())?;
        }
        Ok(tree)
    }

    /// A `budgets b1 b2 ...` line, then one line per node: `node-id level parent-id psi y`,
    /// with `-` for absent fields.
    pub fn dump(&self) -> String {
        let mut out = String::from("budgets");
        for b in &self.budgets {
            let _ = write!(out, " {b}");
        }
        out.push('\n');
        for v in 0..self.len() {
            let parent = self.parent[v].map_or("-".to_string(), |p| p.to_string());
            let psi = self
                .psi
                .as_ref()
                .map_or("-".to_string(), |m| m[v].to_string());
            let y = match &self.y {
                Some(y) if self.parent[v].is_some() => format!("{}", y[v]),
                _ => "-".to_string(),
            };
            let _ = writeln!(out, "{v} {} {parent} {psi} {y}", self.level[v]);
        }
        out
    }

    /// Parses [`Self::dump`] output. Lines starting with `#` are skipped; a line
    /// `budgets b1 b2 ...` sets the level budgets (default all zero).
    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidTree(format!("line {}: {msg}", line + 1));
        let mut rows: Vec<DumpRow> = Vec::new();
        let mut budgets: Option<Vec<usize>> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "budgets" {
                let parsed: std::result::Result<Vec<usize>, _> =
                    fields[1..].iter().map(|f| f.parse()).collect();
                budgets = Some(parsed.map_err(|_| bad(i, "bad budget"))?);
                continue;
            }
            if fields.len() != 5 {
                return Err(bad(i, "expected 5 fields"));
            }
            let opt = |s: &str| -> std::result::Result<Option<usize>, Error> {
                if s == "-" {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad(i, "bad integer"))
                }
            };
            let id: usize = fields[0].parse().map_err(|_| bad(i, "bad node id"))?;
            if id != rows.len() {
                return Err(bad(i, "node ids must be consecutive from 0"));
            }
            let y = if fields[4] == "-" {
                None
            } else {
                Some(fields[4].parse::<f64>().map_err(|_| bad(i, "bad y"))?)
            };
            rows.push((id, opt(fields[2])?, opt(fields[3])?, y));
        }
        let parent: Vec<Option<usize>> = rows.iter().map(|r| r.1).collect();
        let height = layer(&parent)?.2.len() - 1;
        let mut tree = Self::new(parent, budgets.unwrap_or_else(|| vec![0; height]))?;
        if rows.iter().all(|r| r.2.is_some()) && !rows.is_empty() {
            tree = tree.with_psi(rows.iter().map(|r| r.2.unwrap()).collect())?;
        }
        if rows.iter().any(|r| r.3.is_some()) {
            tree = tree.with_y(rows.iter().map(|r| r.3.unwrap_or(0.0)).collect())?;
        }
        Ok(tree)
    }
}

/// `(id, parent, psi, y)` of one dump line.
type DumpRow = (usize, Option<usize>, Option<usize>, Option<f64>);

type Layers = (Vec<Vec<usize>>, Vec<usize>, Vec<Vec<usize>>);

/// Children lists, per-node level and per-level node lists of a parent array.
fn layer(parent: &[Option<usize>]) -> Result<Layers> {
    let n = parent.len();
    let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
    if roots.len() != 1 {
        return Err(Error::InvalidTree(format!(
            "expected one root, found {}",
            roots.len()
        )));
    }
    let mut children = vec![Vec::new(); n];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            if p >= n || p == v {
                return Err(Error::InvalidTree(format!("node {v} has bad parent {p}")));
            }
            children[p].push(v);
        }
    }
    let mut level = vec![usize::MAX; n];
    let mut levels: Vec<Vec<usize>> = vec![vec![roots[0]]];
    level[roots[0]] = 0;
    loop {
        let mut next: Vec<usize> = levels
            .last()
            .unwrap()
            .iter()
            .flat_map(|&v| children[v].iter().copied())
            .collect();
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        for &v in &next {
            level[v] = levels.len();
        }
        levels.push(next);
    }
    if let Some(v) = level.iter().position(|&l| l == usize::MAX) {
        return Err(Error::InvalidTree(format!(
            "node {v} is not connected to the root"
        )));
    }
    Ok((children, level, levels))
}

/// A set of non-root nodes meant to hit every leaf-to-root path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FirefighterSolution {
    pub chosen: Vec<usize>,
}

impl FirefighterSolution {
    pub fn new(mut chosen: Vec<usize>) -> Self {
        chosen.sort_unstable();
        chosen.dedup();
        Self { chosen }
    }

    /// Leaves whose path misses every chosen node.
    pub fn unprotected_leaves(&self, tree: &LayeredTree) -> Vec<usize> {
        let mut mark = vec![false; tree.len()];
        for &v in &self.chosen {
            mark[v] = true;
        }
        tree.leaves()
            .iter()
            .copied()
            .filter(|&leaf| !tree.path_to_root(leaf).iter().any(|&v| mark[v]))
            .collect()
    }

    pub fn is_feasible(&self, tree: &LayeredTree) -> bool {
        self.unprotected_leaves(tree).is_empty()
    }

    /// Chosen count per level, indexed by level (entry 0 is the root level).
    pub fn level_counts(&self, tree: &LayeredTree) -> Vec<usize> {
        let mut counts = vec![0; tree.height() + 1];
        for &v in &self.chosen {
            counts[tree.level(v)] += 1;
        }
        counts
    }

    /// `max_l |N ∩ L_l| / k_l`; infinite when a zero-budget level is used.
    pub fn budget_ratio(&self, tree: &LayeredTree) -> f64 {
        budget_ratio(&self.level_counts(tree), tree)
    }
}

fn budget_ratio(counts: &[usize], tree: &LayeredTree) -> f64 {
    (1..=tree.height())
        .map(|l| match (counts[l], tree.budget(l)) {
            (0, _) => 0.0,
            (_, 0) => f64::INFINITY,
            (c, k) => c as f64 / k as f64,
        })
        .fold(0.0, f64::max)
}

/// Variable index of node `v` in [`build_rmfct_lp`] (the root has no variable).
pub fn node_var(tree: &LayeredTree, v: usize) -> usize {
    debug_assert_ne!(v, tree.root());
    if v < tree.root() {
        v
    } else {
        v - 1
    }
}

/// One covering row per leaf over its path, one budget row `Σ_{L_l} y ≤ alpha·k_l` per level,
/// `y ∈ [0,1]`. Variables are the non-root nodes in id order, skipping the root.
pub fn build_rmfct_lp(tree: &LayeredTree, alpha: f64) -> LpProblem {
    let m = tree.len() - 1;
    let mut lp = LpProblem::unit_box(m);
    for &leaf in tree.leaves() {
        let row: Vec<(usize, f64)> = tree
            .path_to_root(leaf)
            .iter()
            .map(|&v| (node_var(tree, v), 1.0))
            .collect();
        lp.add_sparse(&row, Relation::Ge, 1.0);
    }
    for l in 1..=tree.height() {
        let row: Vec<(usize, f64)> = tree
            .level_nodes(l)
            .iter()
            .map(|&v| (node_var(tree, v), 1.0))
            .collect();
        lp.add_sparse(&row, Relation::Le, alpha * tree.budget(l) as f64);
    }
    lp
}

/// Expands LP values (one per non-root node) to a per-node vector with 0 at the root.
pub fn lp_values_to_nodes(tree: &LayeredTree, values: &[f64]) -> Vec<f64> {
    (0..tree.len())
        .map(|v| {
            if v == tree.root() {
                0.0
            } else {
                values[node_var(tree, v)]
            }
        })
        .collect()
}

/// Largest violation of the RMFC-T constraints by per-node `y` at `alpha`.
pub fn rmfct_violation(tree: &LayeredTree, y: &[f64], alpha: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &leaf in tree.leaves() {
        let s: f64 = tree.path_to_root(leaf).iter().map(|&v| y[v]).sum();
        worst = worst.max(1.0 - s);
    }
    for l in 1..=tree.height() {
        let s: f64 = tree.level_nodes(l).iter().map(|&v| y[v]).sum();
        worst = worst.max(s - alpha * tree.budget(l) as f64);
    }
    for v in 0..tree.len() {
        if v != tree.root() {
            worst = worst.max(-y[v]).max(y[v] - 1.0);
        }
    }
    worst
}

/// Integral rounding for trees with two non-root levels: the result respects every budget
/// exactly.
///
/// Each leaf is first lowered to `max(0, 1 - y_parent)`. Then the two lowest-id fractional
/// level-1 nodes trade mass: the one with more children gains `ε`, the other loses it, and their
/// children move the opposite way, with `ε` the largest shift keeping everything in `[0,1]`.
/// A lone fractional level-1 node is raised to 1.
pub fn round_depth2(tree: &LayeredTree, y: &[f64]) -> Result<FirefighterSolution> {
    if tree.height() != 2 {
        return Err(Error::Contract(format!(
            "tree has height {}, expected 2",
            tree.height()
        )));
    }
    let viol = rmfct_violation(tree, y, 1.0);
    if viol > 10.0 * INTEGRAL_TOL {
        return Err(Error::Contract(format!("y violates the tree LP by {viol}")));
    }
    let mut y1: Vec<f64> = tree
        .level_nodes(1)
        .iter()
        .map(|&v| y[v].clamp(0.0, 1.0))
        .collect();
    let snap = |v: &mut f64| {
        if *v <= INTEGRAL_TOL {
            *v = 0.0;
        } else if *v >= 1.0 - INTEGRAL_TOL {
            *v = 1.0;
        }
    };
    loop {
        y1.iter_mut().for_each(snap);
        let frac: Vec<usize> = (0..y1.len())
            .filter(|&i| y1[i] > 0.0 && y1[i] < 1.0)
            .collect();
        match frac.len() {
            0 => break,
            1 => y1[frac[0]] = 1.0,
            _ => {
                let (a, b) = (frac[0], frac[1]);
                let nodes = tree.level_nodes(1);
                let (w, w2) = if tree.children(nodes[a]).len() >= tree.children(nodes[b]).len() {
                    (a, b)
                } else {
                    (b, a)
                };
                // Children sit at 1 - y_parent, so their slacks coincide with the parents'.
                let eps = (1.0 - y1[w]).min(y1[w2]);
                y1[w] += eps;
                y1[w2] -= eps;
            }
        }
    }
    let mut chosen = Vec::new();
    for (i, &v) in tree.level_nodes(1).iter().enumerate() {
        if y1[i] == 1.0 {
            chosen.push(v);
        } else {
            chosen.extend_from_slice(tree.children(v));
        }
    }
    let sol = FirefighterSolution::new(chosen);
    let counts = sol.level_counts(tree);
    for l in 1..=2 {
        if counts[l] > tree.budget(l) {
            return Err(Error::Invariant(format!(
                "depth-2 rounding used {} nodes on level {l} with budget {}",
                counts[l],
                tree.budget(l)
            )));
        }
    }
    Ok(sol)
}

/// Outcome of [`round_loose`].
#[derive(Debug, Clone, PartialEq)]
pub struct LooseRounding {
    pub solution: FirefighterSolution,
    /// Nodes with `y = 1`.
    pub integral: Vec<usize>,
    /// Nodes with positive `y` whose inclusive root-prefix sum stays below 1.
    pub loose: Vec<usize>,
}

/// Takes every node with `y_v = 1` plus every loose node. The result hits every path whenever
/// `y` is feasible; for a vertex solution at most `height` nodes are loose, so each level gets
/// at most `k_l + height` nodes.
pub fn round_loose(tree: &LayeredTree, y: &[f64], is_basic: bool) -> Result<LooseRounding> {
    let mut prefix = vec![0.0; tree.len()];
    for l in 1..=tree.height() {
        for &v in tree.level_nodes(l) {
            let up = tree.parent(v).map_or(0.0, |p| prefix[p]);
            prefix[v] = up + y[v];
        }
    }
    let mut integral = Vec::new();
    let mut loose = Vec::new();
    for l in 1..=tree.height() {
        for &v in tree.level_nodes(l) {
            if y[v] >= 1.0 - INTEGRAL_TOL {
                integral.push(v);
            } else if y[v] > INTEGRAL_TOL && prefix[v] < 1.0 - INTEGRAL_TOL {
                loose.push(v);
            }
        }
    }
    if loose.len() > tree.height() {
        return Err(if is_basic {
            Error::Invariant(format!(
                "vertex solution has {} loose nodes on a tree of height {}",
                loose.len(),
                tree.height()
            ))
        } else {
            Error::NonBasic {
                loose: loose.len(),
                height: tree.height(),
            }
        });
    }
    let solution = FirefighterSolution::new(integral.iter().chain(&loose).copied().collect());
    Ok(LooseRounding {
        solution,
        integral,
        loose,
    })
}

/// Largest tree [`exact_rmfct`] accepts, counted in non-root nodes.
pub const EXACT_RMFCT_MAX_NODES: usize = 32;

/// Minimum of `max_l |N ∩ L_l| / k_l` over path-hitting node sets, by branch and bound on the
/// lowest-id unprotected leaf. Returns `f64::INFINITY` when every solution needs a zero-budget
/// level.
pub fn exact_rmfct(tree: &LayeredTree) -> Result<(f64, FirefighterSolution)> {
    let m = tree.len() - 1;
    if m > EXACT_RMFCT_MAX_NODES {
        return Err(Error::SizeBudget(format!(
            "{m} non-root nodes exceeds the exact solver limit of {EXACT_RMFCT_MAX_NODES}"
        )));
    }
    let paths: Vec<Vec<usize>> = tree
        .leaves()
        .iter()
        .map(|&leaf| {
            let mut p = tree.path_to_root(leaf);
            p.reverse();
            p
        })
        .collect();
    struct Search<'a> {
        tree: &'a LayeredTree,
        paths: Vec<Vec<usize>>,
        chosen: Vec<bool>,
        counts: Vec<usize>,
        best: f64,
        best_set: Option<Vec<usize>>,
    }
    impl Search<'_> {
        fn run(&mut self) {
            let ratio = budget_ratio(&self.counts, self.tree);
            if ratio >= self.best && self.best_set.is_some() {
                return;
            }
            let open = self
                .paths
                .iter()
                .position(|p| !p.iter().any(|&v| self.chosen[v]));
            let Some(i) = open else {
                self.best = ratio;
                self.best_set = Some((0..self.chosen.len()).filter(|&v| self.chosen[v]).collect());
                return;
            };
            for j in 0..self.paths[i].len() {
                let v = self.paths[i][j];
                let l = self.tree.level(v);
                self.chosen[v] = true;
                self.counts[l] += 1;
                self.run();
                self.counts[l] -= 1;
                self.chosen[v] = false;
            }
        }
    }
    let mut search = Search {
        tree,
        paths,
        chosen: vec![false; tree.len()],
        counts: vec![0; tree.height() + 1],
        best: f64::INFINITY,
        best_set: None,
    };
    search.run();
    let set = search
        .best_set
        .expect("choosing every leaf is always feasible");
    Ok((search.best, FirefighterSolution::new(set)))
}
