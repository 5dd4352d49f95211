//! Brute-force exact solvers for small instances.

use crate::approx::KcwoResult;
use crate::error::{Error, Result};
use crate::metric::{within, MetricSpace};
use crate::model::{NukcInstance, NukcSolution};

/// Size limits for [`exact_nukc_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_points: usize,
    pub max_balls: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_points: 12,
            max_balls: 4,
        }
    }
}

/// Bitsets limit the search to this many points whatever the configured limits say.
const HARD_MAX_POINTS: usize = 64;

/// Largest number of center subsets [`exact_kcwo`] will scan.
pub const EXACT_KCWO_MAX_SUBSETS: u64 = 2_000_000;

/// Optimal dilation with default limits; see [`exact_nukc_with`].
pub fn exact_nukc(instance: &NukcInstance) -> Result<(f64, NukcSolution)> {
    exact_nukc_with(instance, OracleLimits::default())
}

/// Smallest candidate dilation at which `k_t` balls of radius `α·r_t` cover every point, with a
/// witness whose balls carry radius `α·r_t`.
pub fn exact_nukc_with(
    instance: &NukcInstance,
    limits: OracleLimits,
) -> Result<(f64, NukcSolution)> {
    let n = instance.num_points();
    let k = instance.total_balls();
    if n > limits.max_points.min(HARD_MAX_POINTS) || k > limits.max_balls {
        return Err(Error::SizeBudget(format!(
            "exact search over n = {n} points and k = {k} balls exceeds the limits \
             n <= {}, k <= {}",
            limits.max_points.min(HARD_MAX_POINTS),
            limits.max_balls
        )));
    }
    let candidates = instance.candidate_dilations();
    let top = candidates.len() - 1;
    let Some(mut best) = cover_at(instance, candidates[top]) else {
        return Err(Error::Infeasible(format!(
            "{n} points cannot be covered by {k} zero-radius balls"
        )));
    };
    let (mut lo, mut hi) = (0, top);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match cover_at(instance, candidates[mid]) {
            Some(sol) => {
                hi = mid;
                best = sol;
            }
            None => lo = mid + 1,
        }
    }
    Ok((candidates[hi], best))
}

/// A placement covering every point at dilation `alpha`, if one exists.
pub fn cover_at(instance: &NukcInstance, alpha: f64) -> Option<NukcSolution> {
    let n = instance.num_points();
    let space = instance.space();
    let radii: Vec<f64> = instance
        .classes()
        .iter()
        .map(|c| alpha * c.radius)
        .collect();
    // balls[t][q]: points within radii[t] of q.
    let balls: Vec<Vec<u64>> = radii
        .iter()
        .map(|&r| {
            (0..n)
                .map(|q| {
                    (0..n)
                        .filter(|&p| within(space.dist(p, q), r))
                        .fold(0u64, |m, p| m | (1 << p))
                })
                .collect()
        })
        .collect();
    let mut search = CoverSearch {
        balls: &balls,
        remaining: instance.classes().iter().map(|c| c.multiplicity).collect(),
        chosen: Vec::new(),
        all: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
    };
    search.run(0).then(|| {
        NukcSolution::new(
            search
                .chosen
                .iter()
                .map(|&(q, t)| crate::model::Ball {
                    center: q,
                    class: t,
                    radius: radii[t],
                })
                .collect(),
        )
    })
}

struct CoverSearch<'a> {
    balls: &'a [Vec<u64>],
    remaining: Vec<usize>,
    chosen: Vec<(usize, usize)>,
    all: u64,
}

impl CoverSearch<'_> {
    fn run(&mut self, covered: u64) -> bool {
        let open = self.all & !covered;
        if open == 0 {
            return true;
        }
        let need = open.count_ones() as usize;
        let capacity: usize = self
            .balls
            .iter()
            .zip(&self.remaining)
            .map(|(b, &left)| {
                left * b
                    .iter()
                    .map(|m| (m & open).count_ones() as usize)
                    .max()
                    .unwrap_or(0)
            })
            .sum();
        if capacity < need {
            return false;
        }
        let p = open.trailing_zeros() as usize;
        for t in 0..self.balls.len() {
            if self.remaining[t] == 0 {
                continue;
            }
            let options: Vec<(usize, u64)> = (0..self.balls[t].len())
                .filter(|&q| self.balls[t][q] >> p & 1 == 1)
                .map(|q| (q, self.balls[t][q] & open))
                .collect();
            for (i, &(q, gain)) in options.iter().enumerate() {
                let dominated = options.iter().enumerate().any(|(j, &(_, other))| {
                    j != i && gain & !other == 0 && (gain != other || j < i)
                });
                if dominated {
                    continue;
                }
                self.remaining[t] -= 1;
                self.chosen.push((q, t));
                if self.run(covered | gain) {
                    return true;
                }
                self.chosen.pop();
                self.remaining[t] += 1;
            }
        }
        false
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exact k-center with outliers: the minimum over center sets of size `min(k, n)` of the
/// radius leaving at most `l` outlier locations (points at distance zero share a location).
pub fn exact_kcwo(space: &MetricSpace, k: usize, l: usize) -> Result<(f64, KcwoResult)> {
    let n = space.len();
    let loc = space.locations();
    if space.count_locations(&(0..n).collect::<Vec<_>>()) <= l {
        return Ok((
            0.0,
            KcwoResult {
                centers: vec![],
                outliers: (0..n).collect(),
                radius_used: 0.0,
            },
        ));
    }
    if k == 0 {
        return Err(Error::NoCover(n));
    }
    let size = k.min(n);
    let subsets = binomial(n as u64, size as u64);
    if subsets > EXACT_KCWO_MAX_SUBSETS {
        return Err(Error::SizeBudget(format!(
            "{subsets} center subsets exceeds the limit of {EXACT_KCWO_MAX_SUBSETS}"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut combo: Vec<usize> = (0..size).collect();
    loop {
        let r = radius_with_outliers(space, &loc, &combo, l);
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, combo.clone()));
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..size).rev().find(|&i| combo[i] < n - size + i) else {
            break;
        };
        combo[i] += 1;
        for j in i + 1..size {
            combo[j] = combo[j - 1] + 1;
        }
    }
    let (radius, centers) = best.expect("at least one subset");
    let outliers = (0..n)
        .filter(|&p| !centers.iter().any(|&c| within(space.dist(p, c), radius)))
        .collect();
    Ok((
        radius,
        KcwoResult {
            centers,
            outliers,
            radius_used: radius,
        },
    ))
}

/// Smallest `r` such that the points farther than `r` from `centers` occupy at most `l`
/// locations.
fn radius_with_outliers(space: &MetricSpace, loc: &[usize], centers: &[usize], l: usize) -> f64 {
    let mut far: Vec<(f64, usize)> = (0..space.len())
        .map(|p| {
            (
                centers
                    .iter()
                    .map(|&c| space.dist(p, c))
                    .fold(f64::INFINITY, f64::min),
                p,
            )
        })
        .collect();
    far.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut seen: Vec<usize> = Vec::new();
    let mut i = 0;
    // Drop whole groups of equal distance while the excused locations fit in `l`.
    while i < far.len() {
        let d = far[i].0;
        let mut j = i;
        let mut extra = Vec::new();
        while j < far.len() && far[j].0 == d {
            let location = loc[far[j].1];
            if !seen.contains(&location) && !extra.contains(&location) {
                extra.push(location);
            }
            j += 1;
        }
        if seen.len() + extra.len() > l {
            return d;
        }
        seen.extend(extra);
        i = j;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_solution, RadiusClass};

    fn line(xs: &[f64]) -> MetricSpace {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_coords(&coords).unwrap()
    }

    #[test]
    fn one_ball_per_point() {
        let inst =
            NukcInstance::new(line(&[0.0, 1.0, 5.0]), vec![RadiusClass::new(3, 1.0)]).unwrap();
        assert_eq!(exact_nukc(&inst).unwrap().0, 0.0);
    }

    #[test]
    fn two_points_unit_ball() {
        let inst = NukcInstance::from_radii(line(&[0.0, 1.0]), &[1.0]).unwrap();
        let (alpha, sol) = exact_nukc(&inst).unwrap();
        assert_eq!(alpha, 1.0);
        assert!(validate_solution(&inst, &sol, 1.0, alpha).is_clean());
    }

    #[test]
    fn mixed_radii_on_a_line() {
        // Radius 2 covers [0, 4]; radius 0 takes 10. Any cheaper placement leaves a gap.
        let inst = NukcInstance::from_radii(line(&[0.0, 2.0, 4.0, 10.0]), &[2.0, 0.0]).unwrap();
        let (alpha, sol) = exact_nukc(&inst).unwrap();
        assert_eq!(alpha, 1.0);
        assert!(validate_solution(&inst.scaled(alpha), &sol, 1.0, 1.0).is_clean());
    }

    #[test]
    fn refuses_large_instances() {
        let pts: Vec<f64> = (0..13).map(f64::from).collect();
        let inst = NukcInstance::from_radii(line(&pts), &[1.0]).unwrap();
        assert!(matches!(exact_nukc(&inst), Err(Error::SizeBudget(_))));
        let zero = NukcInstance::from_radii(line(&[0.0, 1.0]), &[0.0]).unwrap();
        assert!(matches!(exact_nukc(&zero), Err(Error::Infeasible(_))));
    }

    #[test]
    fn kcwo_trivial_cases() {
        let space = line(&[0.0, 1.0, 5.0]);
        assert_eq!(exact_kcwo(&space, 1, 3).unwrap().0, 0.0);
        assert_eq!(exact_kcwo(&space, 3, 0).unwrap().0, 0.0);
        assert_eq!(exact_kcwo(&space, 1, 1).unwrap().0, 1.0);
        assert_eq!(exact_kcwo(&space, 1, 0).unwrap().0, 4.0);
        let (r, w) = exact_kcwo(&space, 1, 1).unwrap();
        assert_eq!(w.outliers, vec![2]);
        assert_eq!(r, w.radius_used);
        assert!(matches!(exact_kcwo(&space, 0, 1), Err(Error::NoCover(3))));
    }

    #[test]
    fn duplicate_points_share_an_outlier() {
        let space = line(&[0.0, 1.0, 9.0, 9.0]);
        assert_eq!(exact_kcwo(&space, 1, 1).unwrap().0, 1.0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(12, 0), 1);
        assert_eq!(binomial(3, 3), 1);
    }
}
