//! One line per acceptance criterion; exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use nukc::approx::{solve_guess_q, solve_kcwo, solve_two_radii};
use nukc::embed::{embed, EmbedMode};
use nukc::enumerate::{documented_count_factor, enum_solve_with, EnumConfig};
use nukc::gadgets::{hardness_gadget, random_layered_tree};
use nukc::model::{
    compress_radii, compression_depth, lift_compressed_solution, min_feasible_dilation,
    validate_solution, FractionalSolution, NukcInstance, RadiusClass,
};
use nukc::oracle::{exact_kcwo, exact_nukc};
use nukc::rmfct::{
    build_rmfct_lp, exact_rmfct, lp_values_to_nodes, round_depth2, round_loose, LayeredTree,
};
use rand::Rng;

use common::{hits_all_paths, instance, rng, singletons, space, tree_sums};

const TOL: f64 = 1e-9;
const TREE_TOL: f64 = 1e-7;
/// Regression threshold for the bi-criteria count factor against the original `k_t`.
const E2E_COUNT_FACTOR: f64 = 51.0;
/// Regression threshold for `radius factor / fractional lower bound`.
const E2E_DILATION_FACTOR: f64 = 44.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn kcwo_factor() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..200u64 {
        let mut g = rng(seed);
        let n = g.gen_range(2..=10);
        let k = g.gen_range(1..=3);
        let l = g.gen_range(0..=3);
        let sp = space(n, seed);
        let got = solve_kcwo(&sp, k, l).unwrap();
        let (opt, _) = exact_kcwo(&sp, k, l).unwrap();
        let ok = got.is_valid(&sp, k, l) && got.radius_used <= 2.0 * opt + TOL;
        if !ok {
            failures += 1;
        }
        if opt > 0.0 {
            worst = worst.max(got.radius_used / opt);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs <= 60.0,
        format!("200 trials, {failures} failures, worst ratio {worst:.4} (bound 2), {secs:.2}s (limit 60s)"),
    )
}

fn two_radii_factor() -> Outcome {
    let bound = 1.0 + 5f64.sqrt();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..200u64 {
        let mut g = rng(1000 + seed);
        let n = g.gen_range(2..=9);
        let k1 = g.gen_range(1..=2);
        let k2 = g.gen_range(1..=2);
        let inst = instance(n, &[k1, k2], 1000 + seed);
        let (c1, c2) = (inst.classes()[0], inst.classes()[1]);
        let sol = solve_two_radii(inst.space(), c1, c2).unwrap();
        let (opt, _) = exact_nukc(&inst).unwrap();
        let achieved = sol.radius_factor(&inst);
        let report = validate_solution(&inst, &sol, 1.0, achieved);
        let ok = report.is_clean() && achieved <= bound * opt + TOL;
        if !ok {
            failures += 1;
        }
        if opt > 0.0 {
            worst = worst.max(achieved / opt);
        }
    }
    outcome(
        failures == 0,
        format!("200 trials, {failures} failures, worst ratio {worst:.4} (bound {bound:.4})"),
    )
}

/// Fractional solutions of the corpus: the LP optimum at the smallest feasible dilation, and at
/// the next larger candidate, each with its scaled instance.
fn lp_corpus(count: u64, base: u64) -> Vec<(NukcInstance, FractionalSolution)> {
    let mut out = Vec::new();
    for seed in 0..count {
        let mut g = rng(base + seed);
        let n = g.gen_range(2..=12);
        let h = g.gen_range(1..=4);
        let ks: Vec<usize> = (0..h).map(|_| g.gen_range(1..=2)).collect();
        let inst = instance(n, &ks, base + seed);
        let (alpha, x) = min_feasible_dilation(&inst).unwrap();
        out.push((inst.scaled(alpha), x));
        if let Some(&next) = inst.candidate_dilations().iter().find(|&&a| a > alpha) {
            let scaled = inst.scaled(next);
            let sol = nukc::lp::solve(&nukc::model::build_nukc_lp(&inst, next, None)).unwrap();
            if sol.is_feasible() {
                let x = FractionalSolution::new(n, h, sol.values, sol.is_basic);
                out.push((scaled, x));
            }
        }
    }
    out
}

fn embedding_feasible() -> Outcome {
    let mut checked = 0;
    let mut failures = 0;
    let mut worst_budget: f64 = f64::NEG_INFINITY;
    let mut worst_path: f64 = f64::INFINITY;
    for (inst, x) in lp_corpus(100, 2000) {
        for mode in [EmbedMode::Basic, EmbedMode::Barrier] {
            checked += 1;
            let Ok(e) = embed(&inst, &x, mode, None, false) else {
                failures += 1;
                continue;
            };
            let y = e.tree.y().unwrap();
            let (levels, paths) = tree_sums(&e.tree, y);
            let mut ok = true;
            for (l, &s) in levels.iter().enumerate().skip(1) {
                let excess = s - e.tree.budget(l) as f64;
                worst_budget = worst_budget.max(excess);
                ok &= excess <= TREE_TOL;
            }
            for &p in &paths {
                worst_path = worst_path.min(p);
                ok &= p >= 1.0 - TREE_TOL;
            }
            if !ok {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!(
            "{checked} embeddings, {failures} failures, max level excess {worst_budget:.2e}, \
             min path sum {worst_path:.9}"
        ),
    )
}

fn barrier_distance_audit() -> Outcome {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut g = rng(3000 + seed);
        let n = g.gen_range(3..=12);
        let h = g.gen_range(2..=5);
        let ks: Vec<usize> = (0..h).map(|_| g.gen_range(1..=2)).collect();
        let inst = if seed % 2 == 0 {
            instance(n, &ks, 3000 + seed)
        } else {
            // Geometric radii with ratio 3 put a barrier at every level.
            let top = space(n, seed)
                .distinct_distances()
                .last()
                .copied()
                .unwrap()
                .max(1.0);
            let classes = ks
                .iter()
                .enumerate()
                .map(|(t, &k)| RadiusClass::new(k, top / 3f64.powi(t as i32)))
                .collect();
            NukcInstance::with_levels(space(n, seed), classes).unwrap()
        };
        let (alpha, x) = min_feasible_dilation(&inst).unwrap();
        let scaled = inst.scaled(alpha);
        match embed(&scaled, &x, EmbedMode::Barrier, None, false) {
            Ok(e) => {
                let ratio = e.max_ancestor_ratio(&scaled);
                worst = worst.max(ratio);
                if ratio > 8.0 + TREE_TOL {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("100 instances, {failures} failures, worst ratio {worst:.4} (bound 8)"),
    )
}

fn tree_with_budgets(tree: &LayeredTree, budgets: Vec<usize>) -> LayeredTree {
    let parent = (0..tree.len()).map(|v| tree.parent(v)).collect();
    LayeredTree::new(parent, budgets).unwrap()
}

fn depth2_rounding() -> Outcome {
    let mut failures = 0;
    for seed in 0..500u64 {
        let mut g = rng(4000 + seed);
        let shape = random_layered_tree(2, 4, 4000 + seed).unwrap();
        let mut y = vec![0.0; shape.len()];
        for &w in shape.level_nodes(1) {
            y[w] = match g.gen_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => g.gen_range(0.0..1.0),
            };
            for &c in shape.children(w) {
                let slack: f64 = g.gen_range(0.0..0.3);
                y[c] = (1.0 - y[w] + slack * y[w]).min(1.0);
            }
        }
        let budgets = (1..=2)
            .map(|l| {
                let s: f64 = shape.level_nodes(l).iter().map(|&v| y[v]).sum();
                (s - 1e-9).ceil().max(0.0) as usize
            })
            .collect();
        let tree = tree_with_budgets(&shape, budgets);
        let ok = match round_depth2(&tree, &y) {
            Ok(sol) => {
                let counts = sol.level_counts(&tree);
                hits_all_paths(&tree, &sol.chosen)
                    && (1..=2).all(|l| counts[l] <= tree.budget(l))
                    && sol.chosen.iter().all(|&v| v != tree.root())
            }
            Err(_) => false,
        };
        if !ok {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("500 inputs, {failures} failures"))
}

fn loose_rounding() -> Outcome {
    let mut trials = 0;
    let mut failures = 0;
    let mut worst_excess: i64 = i64::MIN;
    let mut seed = 5000u64;
    while trials < 200 {
        seed += 1;
        let mut g = rng(seed);
        let depth = g.gen_range(2..=4);
        let shape = random_layered_tree(depth, 3, seed).unwrap();
        let budgets = (0..depth).map(|_| g.gen_range(1..=2)).collect();
        let tree = tree_with_budgets(&shape, budgets);
        let sol = nukc::lp::solve(&build_rmfct_lp(&tree, 1.0)).unwrap();
        if !sol.is_feasible() {
            continue;
        }
        trials += 1;
        let y = lp_values_to_nodes(&tree, &sol.values);
        let ok = match round_loose(&tree, &y, sol.is_basic) {
            Ok(r) => {
                let counts = r.solution.level_counts(&tree);
                let excess = (1..=depth)
                    .map(|l| counts[l] as i64 - tree.budget(l) as i64)
                    .max()
                    .unwrap();
                worst_excess = worst_excess.max(excess);
                sol.is_basic && hits_all_paths(&tree, &r.solution.chosen) && excess <= depth as i64
            }
            Err(_) => false,
        };
        if !ok {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{trials} basic solutions, {failures} failures, worst level excess {worst_excess} (bound: height)"),
    )
}

fn compression() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let mut g = rng(6000 + seed);
        let n = g.gen_range(2..=10);
        let k = g.gen_range(1..=8);
        let raw = singletons(n, k, 6000 + seed);
        let comp = compress_radii(&raw);
        let radii = raw.singleton_radii();
        let top = compression_depth(k);
        // (i) multiplicities 2^i below the top level, at most 2^L on it, radius r_{2^i}.
        let structural = comp.num_classes() == top + 1
            && (0..=top).all(|i| {
                let m = comp.multiplicity(i);
                let shape = if i < top {
                    m == 1 << i
                } else {
                    m >= 1 && m <= 1 << i
                };
                shape && comp.radius(i) == radii[(1 << i) - 1]
            })
            && comp.total_balls() == k;
        // (ii) an original solution maps to a compressed one: the compressed optimum is no worse.
        let mapped = if k <= 4 {
            let (opt_raw, _) = exact_nukc(&raw).unwrap();
            let (opt_comp, _) = exact_nukc(&comp).unwrap();
            opt_comp <= opt_raw + TOL
        } else {
            let (f_raw, _) = min_feasible_dilation(&raw).unwrap();
            let (f_comp, _) = min_feasible_dilation(&comp).unwrap();
            f_comp <= f_raw + TOL
        };
        // (iii) an (a, b) compressed solution lifts to a (3a, b) one.
        let res = solve_guess_q(&comp, 1).unwrap();
        let a = res.solution.count_factor(&comp);
        let b = res.solution.radius_factor(&comp);
        let lifted = lift_compressed_solution(&res.solution, &raw);
        let lift_ok = validate_solution(&comp, &res.solution, a, b).is_clean()
            && validate_solution(&raw, &lifted, 3.0 * a, b).is_clean();
        if !(structural && mapped && lift_ok) {
            failures.push(format!(
                "seed {seed}: (i) {structural} (ii) {mapped} (iii) {lift_ok}"
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!("100 instances, {} failures {:?}", failures.len(), failures),
    )
}

fn gadget_trees(want_yes: bool, count: usize) -> Vec<(u64, LayeredTree, f64)> {
    let mut out = Vec::new();
    let mut seed = if want_yes { 7000 } else { 8000 };
    while out.len() < count {
        seed += 1;
        let depth = 2 + (seed % 2) as usize;
        let Ok(tree) = random_layered_tree(depth, 3, seed) else {
            continue;
        };
        if tree.leaves().len() > 12 || tree.leaves().len() < 2 || tree.len() - 1 > 32 {
            continue;
        }
        let (value, _) = exact_rmfct(&tree).unwrap();
        if (want_yes && value <= 1.0) || (!want_yes && value >= 2.0) {
            out.push((seed, tree, value));
        }
    }
    out
}

fn hardness_gadget_check() -> Outcome {
    let mut yes_values = Vec::new();
    for (_, tree, _) in gadget_trees(true, 20) {
        let g = hardness_gadget(&tree, 1).unwrap();
        let (opt, _) = exact_nukc(&g.instance).unwrap();
        yes_values.push(opt);
    }
    let mut no_values = Vec::new();
    for (_, tree, _) in gadget_trees(false, 10) {
        let g = hardness_gadget(&tree, 2).unwrap();
        let (opt, _) = exact_nukc(&g.instance).unwrap();
        no_values.push(opt);
    }
    let yes_ok = yes_values.iter().all(|&v| v == 2.0);
    let no_ok = no_values.iter().all(|&v| v >= 4.0 - TOL);
    let yes_max = yes_values.iter().copied().fold(0.0, f64::max);
    let no_min = no_values.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        yes_ok && no_ok,
        format!(
            "(a) YES trees: {} of 20 at dilation exactly 2, largest optimum {yes_max}: {}; \
             (b) NO trees with c = 2: smallest optimum {no_min} (bound 4): {}",
            yes_values.iter().filter(|&&v| v == 2.0).count(),
            if yes_ok { "PASS" } else { "FAIL" },
            if no_ok { "PASS" } else { "FAIL" },
        ),
    )
}

fn end_to_end() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_count: f64 = 0.0;
    let mut worst_dilation: f64 = 0.0;
    let mut nodes = 0;
    let start = Instant::now();
    for seed in 0..100u64 {
        let mut g = rng(9000 + seed);
        let n = g.gen_range(2..=12);
        let k = g.gen_range(1..=7);
        let raw = singletons(n, k, 9000 + seed);
        let top = compression_depth(k);
        let config = EnumConfig {
            force: true,
            ..EnumConfig::desk(k, top)
        };
        let out = enum_solve_with(&raw, Some(config)).unwrap();
        nodes += out.nodes;
        let (lower, _) = min_feasible_dilation(&raw).unwrap();
        let count = out.solution.count_factor(&raw);
        let radius = out.solution.radius_factor(&raw);
        let covers = out.solution.uncovered(raw.space()).is_empty();
        let documented = documented_count_factor(&out.compressed);
        worst_count = worst_count.max(count);
        let ratio = if lower > 0.0 {
            radius / lower
        } else if radius <= TOL {
            0.0
        } else {
            f64::INFINITY
        };
        worst_dilation = worst_dilation.max(ratio);
        let ok = covers
            && count <= E2E_COUNT_FACTOR.min(documented)
            && ratio <= E2E_DILATION_FACTOR
            && !out.fallback;
        if !ok {
            failures.push(format!(
                "seed {seed}: covers {covers} count {count} radius ratio {ratio} fallback {}",
                out.fallback
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 instances, {} failures, documented constants: count ≤ {E2E_COUNT_FACTOR}·k_t, \
             dilation ≤ {E2E_DILATION_FACTOR}·(fractional bound); measured worst count factor \
             {worst_count:.3}, worst dilation ratio {worst_dilation:.3}, {nodes} search nodes, \
             {:.2}s {:?}",
            failures.len(),
            start.elapsed().as_secs_f64(),
            failures
        ),
    )
}

fn oracle_sanity() -> Outcome {
    let mut failures = 0;
    let mut trials = 0;
    for seed in 0..150u64 {
        let mut g = rng(10_000 + seed);
        let n = g.gen_range(1..=10);
        let h = g.gen_range(1..=3);
        let ks: Vec<usize> = (0..h).map(|_| 1).collect();
        let mut ks = ks;
        if g.gen_bool(0.5) {
            ks[h - 1] += 1;
        }
        let inst = instance(n, &ks, 10_000 + seed);
        trials += 1;
        let (lower, _) = min_feasible_dilation(&inst).unwrap();
        let (opt, sol) = exact_nukc(&inst).unwrap();
        let valid = validate_solution(&inst.scaled(opt), &sol, 1.0, 1.0).is_clean();
        if !(lower <= opt + TOL && valid) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{trials} instances, {failures} failures"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 kcwo factor 2", kcwo_factor),
        ("2 two-radii factor 1+sqrt5", two_radii_factor),
        ("3 embedding feasibility", embedding_feasible),
        ("4 barrier distance audit", barrier_distance_audit),
        ("5 depth-2 rounding", depth2_rounding),
        ("6 loose-vertex rounding", loose_rounding),
        ("7 radii compression", compression),
        ("8 hardness gadget", hardness_gadget_check),
        ("9 end-to-end bi-criteria", end_to_end),
        ("10 oracle sanity", oracle_sanity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
