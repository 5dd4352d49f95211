//! Bi-criteria solver by guided enumeration of large-radius centers.
//!
//! The search keeps affirmative guesses `A` (a ball of level `t` near `p`) and negative
//! guesses `D` (no level-`t` ball at `p`). Each node solves the guess-aware LP on the points not
//! yet covered by the affirmative balls, rounds the bottom-heavy points, and either finishes the
//! top-heavy points with the large levels forbidden or branches on the winners of per-level
//! embeddings.

use std::collections::{BTreeSet, HashSet};

use crate::approx::{bottom_heavy_count_bound, round_bottom_heavy, solve_guess_q};
use crate::embed::{embed, EmbedMode};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, Relation};
use crate::metric::within;
use crate::model::{
    compress_radii, coverage, lift_compressed_solution, min_feasible_dilation, var_index,
    FractionalSolution, NukcInstance, NukcSolution,
};

/// Radius factor of the balls opened for affirmative guesses.
pub const GUESS_RADIUS_FACTOR: f64 = 22.0;
/// Neighbourhood radius factor of a negative guess.
pub const EXCLUSION_FACTOR: f64 = 11.0;
/// Instances with at most this many balls go straight to [`solve_guess_q`] unless forced.
pub const SHORT_CIRCUIT_K: usize = 16;

const HALF_TOL: f64 = 1e-9;

/// `(point, level)` tuples.
pub type Tuples = BTreeSet<(usize, usize)>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GuessPair {
    pub affirmative: Tuples,
    pub negative: Tuples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumConfig {
    /// Recursion depth budget.
    pub gamma0: usize,
    /// Levels `0..=tau` are guessed; levels `≥ tau` are rounded.
    pub tau: usize,
    /// Maximum number of search nodes per dilation.
    pub node_budget: usize,
    /// Run the enumeration even when [`SHORT_CIRCUIT_K`] would skip it.
    pub force: bool,
}

fn ceil_log2_f(v: f64) -> f64 {
    v.log2().ceil()
}

impl EnumConfig {
    /// Desk-scale defaults for `k` balls and top compressed level `top`:
    /// `τ = ceil(log2 max(2, ceil(log2 max(2, L + 1))))` clamped to `L`, and
    /// `γ0 = max(1, 4·ceil(log2 log2 max(4, k))·ceil(log2 log2 log2 max(16, k)))`.
    pub fn desk(k: usize, top: usize) -> Self {
        let inner = ceil_log2_f(((top + 1) as f64).max(2.0));
        let tau = (ceil_log2_f(inner.max(2.0)) as usize).min(top);
        let k = k as f64;
        let a = ceil_log2_f(k.max(4.0).log2());
        let b = ceil_log2_f(k.max(16.0).log2().log2());
        let gamma0 = ((4.0 * a * b) as usize).max(1);
        Self {
            gamma0,
            tau,
            node_budget: 4_000,
            force: false,
        }
    }
}

/// Count bound per compressed level of an enumeration result: `k_t` affirmative balls plus two
/// bottom-heavy roundings.
pub fn enum_count_bound(compressed: &NukcInstance, t: usize) -> usize {
    compressed.multiplicity(t) + 2 * bottom_heavy_count_bound(compressed, t)
}

/// Count factor against the original instance after lifting: `3·(9 + 2·(L + 2))`.
pub fn documented_count_factor(compressed: &NukcInstance) -> f64 {
    let top = compressed.num_classes() - 1;
    3.0 * (9.0 + 2.0 * (top + 2) as f64)
}

/// Radius factor against the original instance, in units of the dilation found.
pub const DOCUMENTED_RADIUS_FACTOR: f64 = GUESS_RADIUS_FACTOR;

/// Number of leading levels `t = 0, 1, …` for which every `q ∈ B(p, r_t)` has `(q, t)` in
/// `negative`. Levels past a gap stay open even if they are blocked too, so a consistent
/// `negative` never hides a level that covers `p`.
pub fn min_level(negative: &Tuples, instance: &NukcInstance, p: usize) -> usize {
    (0..instance.num_classes())
        .take_while(|&t| {
            instance
                .space()
                .ball(p, instance.radius(t))
                .iter()
                .all(|&q| negative.contains(&(q, t)))
        })
        .count()
}

/// Covering rows for `points` summing from each point's [`min_level`], one budget row per
/// level over all points, negative tuples pinned to 0 and affirmative tuples pinned to 1 (the
/// affirmative pin wins on a clash).
pub fn build_guess_lp(
    instance: &NukcInstance,
    points: &[usize],
    affirmative: &Tuples,
    negative: &Tuples,
) -> LpProblem {
    let n = instance.num_points();
    let h = instance.num_classes();
    let mut problem = LpProblem::unit_box(n * h);
    for &p in points {
        let from = min_level(negative, instance, p);
        let mut row = Vec::new();
        for t in from..h {
            for q in instance.space().ball(p, instance.radius(t)) {
                row.push((var_index(n, q, t), 1.0));
            }
        }
        problem.add_sparse(&row, Relation::Ge, 1.0);
    }
    for t in 0..h {
        let row: Vec<(usize, f64)> = (0..n).map(|p| (var_index(n, p, t), 1.0)).collect();
        problem.add_sparse(&row, Relation::Le, instance.multiplicity(t) as f64);
    }
    for &(p, t) in negative {
        problem.fix(var_index(n, p, t), 0.0);
    }
    for &(p, t) in affirmative {
        problem.fix(var_index(n, p, t), 1.0);
    }
    problem
}

/// Points within `22·r_t` of some affirmative tuple `(q, t)`.
pub fn guessed_cover(instance: &NukcInstance, affirmative: &Tuples) -> Vec<usize> {
    let space = instance.space();
    (0..instance.num_points())
        .filter(|&p| {
            affirmative
                .iter()
                .any(|&(q, t)| within(space.dist(p, q), GUESS_RADIUS_FACTOR * instance.radius(t)))
        })
        .collect()
}

fn solve_guess_lp(
    instance: &NukcInstance,
    points: &[usize],
    pair_a: &Tuples,
    pair_d: &Tuples,
) -> Result<Option<FractionalSolution>> {
    let sol = lp::solve(&build_guess_lp(instance, points, pair_a, pair_d))?;
    Ok(sol.is_feasible().then(|| {
        FractionalSolution::new(
            instance.num_points(),
            instance.num_classes(),
            sol.values,
            sol.is_basic,
        )
    }))
}

/// One run of the recursion at a fixed dilation (radii already scaled).
pub struct EnumSearch<'a> {
    instance: &'a NukcInstance,
    config: EnumConfig,
    forbidden: Tuples,
    memo: HashSet<GuessPair>,
    /// Search nodes visited.
    pub nodes: usize,
    /// Whether the node budget stopped the search.
    pub exhausted: bool,
}

impl<'a> EnumSearch<'a> {
    pub fn new(instance: &'a NukcInstance, config: EnumConfig) -> Self {
        let tau = config.tau.min(instance.num_classes() - 1);
        let forbidden = (0..instance.num_points())
            .flat_map(|p| (0..=tau).map(move |t| (p, t)))
            .collect();
        Self {
            instance,
            config: EnumConfig { tau, ..config },
            forbidden,
            memo: HashSet::new(),
            nodes: 0,
            exhausted: false,
        }
    }

    /// Runs from the empty guess pair.
    pub fn run(&mut self) -> Result<Option<NukcSolution>> {
        self.visit(GuessPair::default(), self.config.gamma0, 0)
    }

    fn visit(
        &mut self,
        pair: GuessPair,
        gamma: usize,
        depth: usize,
    ) -> Result<Option<NukcSolution>> {
        if self.exhausted || !self.memo.insert(pair.clone()) {
            return Ok(None);
        }
        self.nodes += 1;
        if self.nodes > self.config.node_budget {
            self.exhausted = true;
            return Ok(None);
        }
        let inst = self.instance;
        let tau = self.config.tau;
        let covered = guessed_cover(inst, &pair.affirmative);
        let rest: Vec<usize> = (0..inst.num_points())
            .filter(|p| covered.binary_search(p).is_err())
            .collect();
        let Some(x) = solve_guess_lp(inst, &rest, &pair.affirmative, &pair.negative)? else {
            log::debug!(
                "enum depth {depth} |A|={} |D|={} lp infeasible",
                pair.affirmative.len(),
                pair.negative.len()
            );
            return Ok(None);
        };
        let cov = coverage(inst, &x, 1.0);
        let (bottom, top): (Vec<usize>, Vec<usize>) = rest
            .iter()
            .partition(|&&p| cov.at_least(p, tau) >= 0.5 - HALF_TOL);
        let mut solution = NukcSolution::default();
        for &(p, t) in &pair.affirmative {
            solution.push(p, t, GUESS_RADIUS_FACTOR * inst.radius(t));
        }
        solution.extend(round_bottom_heavy(inst, &x, tau, &bottom)?);
        if top.is_empty() {
            log::debug!(
                "enum depth {depth} |A|={} done without top-heavy points",
                pair.affirmative.len()
            );
            return Ok(Some(solution));
        }
        let blocked: Tuples = pair.negative.union(&self.forbidden).copied().collect();
        if let Some(xt) = solve_guess_lp(inst, &top, &pair.affirmative, &blocked)? {
            solution.extend(round_bottom_heavy(inst, &xt, tau, &top)?);
            log::debug!(
                "enum depth {depth} |A|={} |D|={} top-heavy points finished",
                pair.affirmative.len(),
                pair.negative.len()
            );
            return Ok(Some(solution));
        }
        log::debug!(
            "enum depth {depth} |A|={} |D|={} branching on {} top-heavy points",
            pair.affirmative.len(),
            pair.negative.len(),
            top.len()
        );
        if gamma == 0 {
            return Ok(None);
        }
        let winner_cap: usize = 2 * (0..=tau).map(|s| inst.multiplicity(s)).sum::<usize>();
        for t in 0..=tau {
            let bucket: Vec<usize> = top
                .iter()
                .copied()
                .filter(|&p| min_level(&pair.negative, inst, p) == t)
                .collect();
            if bucket.is_empty() {
                continue;
            }
            let e = embed(inst, &x, EmbedMode::Barrier, Some(&bucket), false)?;
            let winners = e.winners[t + 1].clone();
            let heavy = winners
                .iter()
                .filter(|&&p| {
                    (t..=tau).map(|s| cov.get(p, s).min(1.0)).sum::<f64>() >= 0.5 - HALF_TOL
                })
                .count();
            if heavy > winner_cap {
                return Err(Error::Invariant(format!(
                    "{heavy} heavy winners at level {t} exceed the cap {winner_cap}"
                )));
            }
            for p in winners {
                let mut yes = pair.clone();
                yes.affirmative.insert((p, t));
                log::debug!("enum depth {depth} affirmative ({p}, {t})");
                if let Some(found) = self.visit(yes, gamma - 1, depth + 1)? {
                    return Ok(Some(found));
                }
                let mut no = pair.clone();
                let reach = EXCLUSION_FACTOR * inst.radius(t);
                no.negative
                    .extend(inst.space().ball(p, reach).into_iter().map(|q| (q, t)));
                log::debug!("enum depth {depth} negative around ({p}, {t})");
                if let Some(found) = self.visit(no, gamma - 1, depth + 1)? {
                    return Ok(Some(found));
                }
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumOutcome {
    /// Solution for the original instance.
    pub solution: NukcSolution,
    pub compressed: NukcInstance,
    pub compressed_solution: NukcSolution,
    /// Dilation of the compressed instance at which the solution was found.
    pub alpha: f64,
    /// Fractional lower bound of the compressed instance.
    pub alpha_lower: f64,
    pub config: EnumConfig,
    /// Search nodes over all dilations tried.
    pub nodes: usize,
    /// The small-instance shortcut to the guess-q solver was taken.
    pub short_circuit: bool,
    /// The enumeration found nothing and the guess-q solver produced the answer.
    pub fallback: bool,
}

/// Compresses, searches with [`EnumConfig::desk`] settings, and lifts back.
pub fn enum_solve(raw: &NukcInstance) -> Result<EnumOutcome> {
    enum_solve_with(raw, None)
}

pub fn enum_solve_with(raw: &NukcInstance, config: Option<EnumConfig>) -> Result<EnumOutcome> {
    let compressed = compress_radii(raw);
    let top = compressed.num_classes() - 1;
    let config = config.unwrap_or_else(|| EnumConfig::desk(raw.total_balls(), top));
    let (alpha_lower, _) = min_feasible_dilation(&compressed)?;
    let finish =
        |sol: NukcSolution, alpha: f64, nodes: usize, short: bool, fallback: bool| EnumOutcome {
            solution: lift_compressed_solution(&sol, raw),
            compressed: compressed.clone(),
            compressed_solution: sol,
            alpha,
            alpha_lower,
            config,
            nodes,
            short_circuit: short,
            fallback,
        };
    if !config.force && raw.total_balls() <= SHORT_CIRCUIT_K {
        let res = guess_q_smallest(&compressed)?;
        return Ok(finish(res.solution, res.alpha, 0, true, false));
    }
    let candidates: Vec<f64> = compressed
        .candidate_dilations()
        .into_iter()
        .filter(|&a| a >= alpha_lower)
        .collect();
    let mut nodes = 0;
    let mut attempt = |alpha: f64| -> Result<Option<NukcSolution>> {
        let scaled = compressed.scaled(alpha);
        let mut search = EnumSearch::new(&scaled, config);
        let found = search.run();
        nodes += search.nodes;
        log::debug!(
            "enum at dilation {alpha}: {} nodes, found {}",
            search.nodes,
            matches!(found, Ok(Some(_)))
        );
        found
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    let Some(mut best) = attempt(candidates[hi])? else {
        log::warn!("enumeration failed at every dilation; falling back to the guess-q solver");
        let res = guess_q_smallest(&compressed)?;
        return Ok(finish(res.solution, res.alpha, nodes, false, true));
    };
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
    Ok(finish(best, candidates[hi], nodes, false, false))
}

/// [`solve_guess_q`] with the smallest `q` whose guesses fit the budget.
fn guess_q_smallest(compressed: &NukcInstance) -> Result<crate::approx::GuessQResult> {
    let mut q = 1;
    loop {
        match solve_guess_q(compressed, q) {
            Err(Error::SizeBudget(msg)) if q < 8 => {
                log::debug!("guess-q with q = {q} refused: {msg}");
                q += 1;
            }
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;
    use crate::model::{validate_solution, RadiusClass};

    fn line(xs: &[f64]) -> MetricSpace {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_coords(&coords).unwrap()
    }

    fn sample() -> NukcInstance {
        NukcInstance::with_levels(
            line(&[0.0, 1.0, 4.0, 9.0, 10.0, 30.0]),
            vec![RadiusClass::new(1, 4.0), RadiusClass::new(2, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn min_level_definition() {
        let inst = sample();
        let empty = Tuples::new();
        assert!((0..6).all(|p| min_level(&empty, &inst, p) == 0));
        // B(0, 4) = {0, 1, 4}.
        let d: Tuples = [(0, 0), (1, 0), (2, 0)].into_iter().collect();
        assert_eq!(min_level(&d, &inst, 0), 1);
        assert_eq!(min_level(&d, &inst, 3), 0);
        // Level 1 blocked around 3 but level 0 open.
        let d: Tuples = [(3, 1), (4, 1)].into_iter().collect();
        assert_eq!(min_level(&d, &inst, 3), 0);
    }

    #[test]
    fn guess_lp_without_guesses_matches_plain_lp() {
        let inst = sample();
        let all: Vec<usize> = (0..6).collect();
        let plain = crate::model::build_nukc_lp(&inst, 1.0, None);
        let guessed = build_guess_lp(&inst, &all, &Tuples::new(), &Tuples::new());
        assert_eq!(
            plain.max_violation(&[0.5; 12]),
            guessed.max_violation(&[0.5; 12])
        );
        assert_eq!(plain.constraints.len(), guessed.constraints.len());
    }

    #[test]
    fn pinned_ball_covering_everything() {
        let inst = NukcInstance::from_radii(line(&[0.0, 1.0, 2.0]), &[2.0]).unwrap();
        let a: Tuples = [(1, 0)].into_iter().collect();
        let sol = lp::solve(&build_guess_lp(&inst, &[0, 1, 2], &a, &Tuples::new())).unwrap();
        assert!(sol.is_feasible());
        assert_eq!(sol.values, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn guessed_cover_radius() {
        let inst = sample();
        let a: Tuples = [(0, 1)].into_iter().collect();
        // 22 * 1 reaches 10 but not 30.
        assert_eq!(guessed_cover(&inst, &a), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn desk_config_values() {
        let c = EnumConfig::desk(16, 4);
        assert_eq!(c.tau, 2);
        assert_eq!(c.gamma0, 8);
        let c = EnumConfig::desk(1, 0);
        assert_eq!(c.tau, 0);
        assert!(c.gamma0 >= 1);
    }

    #[test]
    fn forced_search_covers() {
        let raw =
            NukcInstance::from_radii(line(&[0.0, 1.0, 4.0, 9.0, 10.0, 30.0]), &[4.0, 2.0, 1.0])
                .unwrap();
        let cfg = EnumConfig {
            force: true,
            ..EnumConfig::desk(3, 1)
        };
        let out = enum_solve_with(&raw, Some(cfg)).unwrap();
        assert!(out.solution.uncovered(raw.space()).is_empty());
        let report = validate_solution(
            &raw,
            &out.solution,
            documented_count_factor(&out.compressed),
            DOCUMENTED_RADIUS_FACTOR * out.alpha,
        );
        assert!(report.is_clean(), "{report}");
        assert!(!out.short_circuit);
    }

    #[test]
    fn single_class_short_circuits() {
        let raw =
            NukcInstance::new(line(&[0.0, 5.0, 10.0]), vec![RadiusClass::new(2, 1.0)]).unwrap();
        let out = enum_solve(&raw).unwrap();
        assert!(out.short_circuit);
        assert!(out.solution.uncovered(raw.space()).is_empty());
    }
}
