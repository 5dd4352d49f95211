//! Approximation pipelines built on the tree reduction: k-center with outliers, two radius
//! classes, bottom-heavy rounding and the guess-q bi-criteria solver.

use crate::embed::{embed, embed_basic, lift_with, EmbedMode, BARRIER_FACTOR};
use crate::error::{Error, Result};
use crate::lp;
use crate::metric::{gonzalez_kcenter, within, MetricSpace};
use crate::model::{
    build_nukc_lp, coverage, min_feasible_dilation, var_index, FractionalSolution, NukcInstance,
    NukcSolution, RadiusClass,
};
use crate::rmfct::{build_rmfct_lp, lp_values_to_nodes, node_var, round_depth2, round_loose};

/// `(1 + √5) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Coverage thresholds compare with this slack.
const SPLIT_TOL: f64 = 1e-9;

/// Largest number of center guesses [`solve_guess_q`] will try per dilation.
pub const GUESS_BUDGET: u64 = 5_000;

/// Centers plus excused points. Points at distance zero from each other share one outlier
/// slot, matching `l` zero-radius balls.
#[derive(Debug, Clone, PartialEq)]
pub struct KcwoResult {
    pub centers: Vec<usize>,
    pub outliers: Vec<usize>,
    pub radius_used: f64,
}

impl KcwoResult {
    /// Whether at most `k` centers and `l` outlier locations cover everything at
    /// `radius_used`.
    pub fn is_valid(&self, space: &MetricSpace, k: usize, l: usize) -> bool {
        let mut excused = vec![false; space.len()];
        for &p in &self.outliers {
            excused[p] = true;
        }
        self.centers.len() <= k
            && space.count_locations(&self.outliers) <= l
            && (0..space.len()).all(|p| {
                excused[p]
                    || self
                        .centers
                        .iter()
                        .any(|&c| within(space.dist(p, c), self.radius_used))
            })
    }
}

fn all_outliers(n: usize) -> KcwoResult {
    KcwoResult {
        centers: Vec::new(),
        outliers: (0..n).collect(),
        radius_used: 0.0,
    }
}

/// 2-approximation for k-center with `l` outliers: the smallest radius `r` whose two-class LP
/// `(k, r), (l, 0)` is feasible, rounded through a depth-2 tree.
pub fn solve_kcwo(space: &MetricSpace, k: usize, l: usize) -> Result<KcwoResult> {
    let n = space.len();
    if space.count_locations(&(0..n).collect::<Vec<_>>()) <= l {
        return Ok(all_outliers(n));
    }
    if k == 0 {
        return Err(Error::NoCover(n));
    }
    let radii = space.distinct_distances();
    let feasible = |r: f64| -> Result<Option<FractionalSolution>> {
        let inst = kcwo_instance(space, k, l, r);
        let sol = lp::solve(&build_nukc_lp(&inst, 1.0, None))?;
        Ok(sol
            .is_feasible()
            .then(|| FractionalSolution::new(n, inst.num_classes(), sol.values, true)))
    };
    let (mut lo, mut hi) = (0, radii.len() - 1);
    let mut best = feasible(radii[hi])?.expect("one ball of the diameter covers everything");
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match feasible(radii[mid])? {
            Some(x) => {
                hi = mid;
                best = x;
            }
            None => lo = mid + 1,
        }
    }
    round_kcwo(space, k, l, radii[hi], &best)
}

fn kcwo_instance(space: &MetricSpace, k: usize, l: usize, r: f64) -> NukcInstance {
    let mut classes = vec![RadiusClass::new(k, r)];
    if l > 0 {
        classes.push(RadiusClass::new(l, 0.0));
    }
    NukcInstance::with_levels(space.clone(), classes).expect("valid kCwO classes")
}

/// Rounds a feasible kCwO LP solution at radius `r` to centers within `2r` of every
/// non-outlier.
fn round_kcwo(
    space: &MetricSpace,
    k: usize,
    l: usize,
    r: f64,
    x: &FractionalSolution,
) -> Result<KcwoResult> {
    let inst = kcwo_instance(space, k, l, r);
    let e = embed_basic(&inst, x)?;
    // With outliers, the leaf level is dropped so the zero-radius level becomes the leaves;
    // without them the embedded tree already has two levels (budget 0 at the leaves).
    let tree = if l > 0 {
        e.tree.without_leaf_level()?
    } else {
        e.tree.clone()
    };
    let ff = round_depth2(&tree, tree.y().expect("embedded trees carry y"))?;
    let psi = tree.psi().expect("embedded trees carry psi");
    let centers: Vec<usize> = ff
        .chosen
        .iter()
        .filter(|&&v| tree.level(v) == 1)
        .map(|&v| psi[v])
        .collect();
    let near = |p: usize| {
        centers
            .iter()
            .map(|&c| space.dist(p, c))
            .fold(f64::INFINITY, f64::min)
    };
    let outliers: Vec<usize> = (0..space.len())
        .filter(|&p| !within(near(p), 2.0 * r))
        .collect();
    if space.count_locations(&outliers) > l {
        return Err(Error::Invariant(format!(
            "kCwO rounding left {} outlier locations with budget {l}",
            space.count_locations(&outliers)
        )));
    }
    let radius_used = (0..space.len())
        .filter(|p| outliers.binary_search(p).is_err())
        .map(near)
        .fold(0.0, f64::max);
    Ok(KcwoResult {
        centers,
        outliers,
        radius_used,
    })
}

/// Greedy test at radius `r`: `k` times open the radius-`r` ball holding the most uncovered
/// points (ties to the lowest id) and mark its `3r` ball covered. Succeeds with radius `3r` if
/// at most `l` outlier locations remain.
pub fn charikar_kcwo(space: &MetricSpace, k: usize, l: usize, r: f64) -> Option<KcwoResult> {
    let n = space.len();
    let mut uncovered = vec![true; n];
    let mut centers = Vec::new();
    for _ in 0..k {
        if !uncovered.iter().any(|&u| u) {
            break;
        }
        let gain = |c: usize| {
            (0..n)
                .filter(|&p| uncovered[p] && within(space.dist(p, c), r))
                .count()
        };
        let best = (0..n).max_by_key(|&c| (gain(c), std::cmp::Reverse(c)))?;
        centers.push(best);
        for p in 0..n {
            if within(space.dist(p, best), 3.0 * r) {
                uncovered[p] = false;
            }
        }
    }
    let outliers: Vec<usize> = (0..n).filter(|&p| uncovered[p]).collect();
    (space.count_locations(&outliers) <= l).then_some(KcwoResult {
        centers,
        outliers,
        radius_used: 3.0 * r,
    })
}

/// [`charikar_kcwo`] at increasing candidate radii until it succeeds: the 3-approximation
/// baseline.
pub fn charikar_kcwo_search(space: &MetricSpace, k: usize, l: usize) -> Result<KcwoResult> {
    let n = space.len();
    if space.count_locations(&(0..n).collect::<Vec<_>>()) <= l {
        return Ok(all_outliers(n));
    }
    if k == 0 {
        return Err(Error::NoCover(n));
    }
    space
        .distinct_distances()
        .into_iter()
        .find_map(|r| charikar_kcwo(space, k, l, r))
        .ok_or_else(|| Error::Invariant("greedy failed at the diameter".into()))
}

/// `(1 + √5)`-approximation for two radius classes with `first.radius ≥ second.radius`.
///
/// Close radii (`r1 < θ·r2`) run farthest-first k-center with `k1 + k2` centers; otherwise the
/// LP optimum is embedded, rounded on the depth-2 tree, and lifted with radii `2α(r1 + r2)`
/// and `2α·r2`.
pub fn solve_two_radii(
    space: &MetricSpace,
    first: RadiusClass,
    second: RadiusClass,
) -> Result<NukcSolution> {
    if first.radius < second.radius {
        return Err(Error::InvalidInstance(format!(
            "first radius {} is smaller than second radius {}",
            first.radius, second.radius
        )));
    }
    let inst = NukcInstance::with_levels(space.clone(), vec![first, second])?;
    let mut solution = NukcSolution::default();
    if first.radius < GOLDEN_RATIO * second.radius {
        let (centers, radius) = gonzalez_kcenter(space, first.multiplicity + second.multiplicity)?;
        for (i, &c) in centers.iter().enumerate() {
            let class = usize::from(i >= first.multiplicity);
            solution.push(c, class, radius);
        }
        return Ok(solution);
    }
    let (alpha, x) = min_feasible_dilation(&inst)?;
    let scaled = inst.scaled(alpha);
    let e = embed_basic(&scaled, &x)?;
    let tree = e.tree.without_leaf_level()?;
    let ff = round_depth2(&tree, tree.y().expect("embedded trees carry y"))?;
    let psi = tree.psi().expect("embedded trees carry psi");
    let (r1, r2) = (alpha * first.radius, alpha * second.radius);
    for &v in &ff.chosen {
        match tree.level(v) {
            1 => solution.push(psi[v], 0, 2.0 * (r1 + r2)),
            _ => solution.push(psi[v], 1, 2.0 * r2),
        }
    }
    let missed = solution.uncovered(space);
    if !missed.is_empty() {
        return Err(Error::Uncovered(missed));
    }
    Ok(solution)
}

/// Last level of the upper window used by [`round_bottom_heavy`]:
/// `min(max(τ, ceil(log2 L)), L)`.
pub fn bottom_heavy_split(num_levels: usize, tau: usize) -> usize {
    let top = num_levels.saturating_sub(1);
    tau.max(ceil_log2(top)).min(top)
}

/// Count bound per level for [`round_bottom_heavy`]: `4·k_t` plus the embedded tree height
/// (`L + 2` with `L + 1` levels).
pub fn bottom_heavy_count_bound(instance: &NukcInstance, t: usize) -> usize {
    4 * instance.multiplicity(t) + instance.num_classes() + 1
}

fn ceil_log2(v: usize) -> usize {
    if v <= 1 {
        0
    } else {
        (usize::BITS - (v - 1).leading_zeros()) as usize
    }
}

/// Covers `targets`, each with `Cov_{≥τ} ≥ 1/2` under `x`, using only levels `≥ τ`.
///
/// Targets with at least `1/4` of coverage from levels `τ..=mid` (see [`bottom_heavy_split`])
/// are handled with `4x` restricted to that window, the rest with `4x` restricted to the levels
/// above `mid`. Each part is embedded in barrier mode, re-solved to a vertex of the tree LP,
/// rounded by [`round_loose`] and lifted with radius `8·r_t`. Per level the result opens at
/// most [`bottom_heavy_count_bound`] balls.
pub fn round_bottom_heavy(
    instance: &NukcInstance,
    x: &FractionalSolution,
    tau: usize,
    targets: &[usize],
) -> Result<NukcSolution> {
    let mut solution = NukcSolution::default();
    if targets.is_empty() {
        return Ok(solution);
    }
    let top = instance.num_classes() - 1;
    if tau > top {
        return Err(Error::Contract(format!(
            "tau {tau} beyond the last level {top}"
        )));
    }
    let cov = coverage(instance, x, 1.0);
    if let Some(&p) = targets
        .iter()
        .find(|&&p| cov.at_least(p, tau) < 0.5 - SPLIT_TOL)
    {
        return Err(Error::Contract(format!(
            "point {p} has coverage {} < 1/2 from levels >= {tau}",
            cov.at_least(p, tau)
        )));
    }
    let mid = bottom_heavy_split(instance.num_classes(), tau);
    let (upper, lower): (Vec<usize>, Vec<usize>) = targets
        .iter()
        .partition(|&&p| cov.window(p, tau, mid) >= 0.25 - SPLIT_TOL);
    log::debug!(
        "bottom-heavy: tau {tau}, split {mid}, {} upper / {} lower points",
        upper.len(),
        lower.len()
    );
    if !upper.is_empty() {
        solution.extend(round_window(instance, x, &upper, tau, mid)?);
    }
    if !lower.is_empty() {
        if mid >= top {
            return Err(Error::Invariant("lower window is empty".into()));
        }
        solution.extend(round_window(instance, x, &lower, mid + 1, top)?);
    }
    Ok(solution)
}

fn round_window(
    instance: &NukcInstance,
    x: &FractionalSolution,
    points: &[usize],
    lo: usize,
    hi: usize,
) -> Result<NukcSolution> {
    let x4 = x.scaled_window(4.0, lo..=hi);
    let budgets: Vec<usize> = instance
        .classes()
        .iter()
        .map(|c| 4 * c.multiplicity)
        .collect();
    let sub = instance.with_budgets(&budgets)?;
    let e = embed(&sub, &x4, EmbedMode::Barrier, Some(points), true)?;
    let tree = &e.tree;
    let mut problem = build_rmfct_lp(tree, 1.0);
    for v in 0..tree.len() {
        let l = tree.level(v);
        if l > 0 && !(lo + 1..=hi + 1).contains(&l) {
            problem.fix(node_var(tree, v), 0.0);
        }
    }
    let sol = lp::solve(&problem)?;
    if !sol.is_feasible() {
        return Err(Error::Invariant(
            "tree LP infeasible although the embedding is feasible".into(),
        ));
    }
    let y = lp_values_to_nodes(tree, &sol.values);
    let rounded = round_loose(tree, &y, sol.is_basic)?;
    lift_with(
        &e,
        &rounded.solution,
        |l| BARRIER_FACTOR * e.radii[l - 1],
        Some(instance.space()),
    )
}

/// The guessing threshold: `L` passed through `q` rounds of `v ↦ ceil(log2 v)` (with
/// `v ≤ 1 ↦ 0`), clamped to `[0, L]`.
pub fn tau_q(top_level: usize, q: usize) -> usize {
    let mut v = top_level;
    for _ in 0..q {
        v = ceil_log2(v);
    }
    v.min(top_level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuessQResult {
    pub solution: NukcSolution,
    /// Dilation at which the winning guess was found.
    pub alpha: f64,
    /// Fractional lower bound.
    pub alpha_lower: f64,
    pub tau: usize,
}

/// Bi-criteria solver for a compressed instance: enumerate every placement of `min(k_t, n)`
/// centers for the levels below `τ = tau_q(L, q)`, cover the remaining points with the LP
/// restricted to levels `≥ τ`, and round with [`round_bottom_heavy`]. The dilation is the
/// smallest candidate at which some guess succeeds. Guessed balls have radius `α·r_t`; the
/// rest `8α·r_t` with counts within [`bottom_heavy_count_bound`].
pub fn solve_guess_q(instance: &NukcInstance, q: usize) -> Result<GuessQResult> {
    let n = instance.num_points();
    let tau = tau_q(instance.num_classes() - 1, q);
    let sizes: Vec<usize> = (0..tau).map(|t| instance.multiplicity(t).min(n)).collect();
    let combos = sizes
        .iter()
        .fold(1u64, |acc, &s| acc.saturating_mul(binomial(n, s)));
    if combos > GUESS_BUDGET {
        return Err(Error::SizeBudget(format!(
            "{combos} center guesses for the {tau} levels below tau exceeds {GUESS_BUDGET}"
        )));
    }
    let (alpha_lower, _) = min_feasible_dilation(instance)?;
    let candidates: Vec<f64> = instance
        .candidate_dilations()
        .into_iter()
        .filter(|&a| a >= alpha_lower)
        .collect();
    let attempt = |alpha: f64| guess_at(instance, alpha, tau, &sizes);
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    let mut best = attempt(candidates[hi])?
        .ok_or_else(|| Error::Infeasible("no guess succeeds at the largest dilation".into()))?;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match attempt(candidates[mid])? {
            Some(sol) => {
                hi = mid;
                best = sol;
            }
            None => lo = mid + 1,
        }
    }
    Ok(GuessQResult {
        solution: best,
        alpha: candidates[hi],
        alpha_lower,
        tau,
    })
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n as u64 - i) / (i + 1))
}

fn guess_at(
    instance: &NukcInstance,
    alpha: f64,
    tau: usize,
    sizes: &[usize],
) -> Result<Option<NukcSolution>> {
    let n = instance.num_points();
    let scaled = instance.scaled(alpha);
    let space = instance.space();
    let mut choice: Vec<Vec<usize>> = sizes.iter().map(|&s| (0..s).collect()).collect();
    loop {
        let mut guessed = NukcSolution::default();
        for (t, centers) in choice.iter().enumerate() {
            for &c in centers {
                guessed.push(c, t, scaled.radius(t));
            }
        }
        let rest = guessed.uncovered(space);
        if rest.is_empty() {
            return Ok(Some(guessed));
        }
        let mut problem = build_nukc_lp(&scaled, 1.0, Some(&rest));
        for t in 0..tau {
            for p in 0..n {
                problem.fix(var_index(n, p, t), 0.0);
            }
        }
        let sol = lp::solve(&problem)?;
        if sol.is_feasible() {
            let x = FractionalSolution::new(n, scaled.num_classes(), sol.values, sol.is_basic);
            let mut out = round_bottom_heavy(&scaled, &x, tau, &rest)?;
            out.balls.splice(0..0, guessed.balls);
            return Ok(Some(out));
        }
        if !advance(&mut choice, n) {
            return Ok(None);
        }
    }
}

/// Steps a list of lexicographic combinations like an odometer; false once all are exhausted.
fn advance(choice: &mut [Vec<usize>], n: usize) -> bool {
    for combo in choice.iter_mut().rev() {
        let size = combo.len();
        if let Some(i) = (0..size).rev().find(|&i| combo[i] < n - size + i) {
            combo[i] += 1;
            for j in i + 1..size {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
        for (j, c) in combo.iter_mut().enumerate() {
            *c = j;
        }
    }
    false
}
