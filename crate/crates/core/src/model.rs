//! NUkC instances and solutions, the covering LP, coverage accounting, and the two radius
//! transformations (power-of-two clubbing and geometric compression).

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, Relation};
use crate::metric::{sort_dedup, within, MetricSpace, COVER_TOL};

/// `multiplicity` balls of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusClass {
    pub multiplicity: usize,
    pub radius: f64,
}

impl RadiusClass {
    pub fn new(multiplicity: usize, radius: f64) -> Self {
        Self {
            multiplicity,
            radius,
        }
    }
}

/// A metric space plus radius classes ordered by non-increasing radius.
///
/// [`NukcInstance::new`] sorts and merges equal radii, giving strictly decreasing classes.
/// [`NukcInstance::with_levels`] keeps the classes as given; compressed instances need this
/// because their per-level budgets `2^i` must survive even when two barriers coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct NukcInstance {
    space: MetricSpace,
    classes: Vec<RadiusClass>,
}

fn check_classes(classes: &[RadiusClass]) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::InvalidInstance("no radius classes".into()));
    }
    for (t, c) in classes.iter().enumerate() {
        if c.multiplicity == 0 {
            return Err(Error::InvalidInstance(format!(
                "class {t} has multiplicity 0"
            )));
        }
        if !(c.radius >= 0.0 && c.radius.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "class {t} has radius {}",
                c.radius
            )));
        }
    }
    Ok(())
}

impl NukcInstance {
    pub fn new(space: MetricSpace, mut classes: Vec<RadiusClass>) -> Result<Self> {
        check_classes(&classes)?;
        classes.sort_by(|a, b| b.radius.total_cmp(&a.radius));
        let mut merged: Vec<RadiusClass> = Vec::with_capacity(classes.len());
        for c in classes {
            match merged.last_mut() {
                Some(last) if last.radius == c.radius => last.multiplicity += c.multiplicity,
                _ => merged.push(c),
            }
        }
        Ok(Self {
            space,
            classes: merged,
        })
    }

    /// Keeps `classes` exactly; they must already be ordered by non-increasing radius.
    pub fn with_levels(space: MetricSpace, classes: Vec<RadiusClass>) -> Result<Self> {
        check_classes(&classes)?;
        if classes.windows(2).any(|w| w[0].radius < w[1].radius) {
            return Err(Error::InvalidInstance(
                "radii must be non-increasing".into(),
            ));
        }
        Ok(Self { space, classes })
    }

    /// One class per radius (merged when equal).
    pub fn from_radii(space: MetricSpace, radii: &[f64]) -> Result<Self> {
        Self::new(
            space,
            radii.iter().map(|&r| RadiusClass::new(1, r)).collect(),
        )
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn classes(&self) -> &[RadiusClass] {
        &self.classes
    }

    pub fn num_points(&self) -> usize {
        self.space.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn radius(&self, t: usize) -> f64 {
        self.classes[t].radius
    }

    pub fn multiplicity(&self, t: usize) -> usize {
        self.classes[t].multiplicity
    }

    /// Total number of balls `k`.
    pub fn total_balls(&self) -> usize {
        self.classes.iter().map(|c| c.multiplicity).sum()
    }

    /// Same classes with every radius multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> NukcInstance {
        NukcInstance {
            space: self.space.clone(),
            classes: self
                .classes
                .iter()
                .map(|c| RadiusClass::new(c.multiplicity, c.radius * alpha))
                .collect(),
        }
    }

    /// Same classes with different multiplicities.
    pub fn with_budgets(&self, budgets: &[usize]) -> Result<NukcInstance> {
        let classes = self
            .classes
            .iter()
            .zip(budgets)
            .map(|(c, &k)| RadiusClass::new(k, c.radius))
            .collect();
        Self::with_levels(self.space.clone(), classes)
    }

    /// The `k` individual radii `r_1 ≥ … ≥ r_k`.
    pub fn singleton_radii(&self) -> Vec<f64> {
        self.classes
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.radius, c.multiplicity))
            .collect()
    }

    /// Class index of each individual radius, aligned with [`Self::singleton_radii`].
    pub fn singleton_classes(&self) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(t, c)| std::iter::repeat_n(t, c.multiplicity))
            .collect()
    }

    /// Candidate dilations `{ d(p,q)/r_t : r_t > 0 } ∪ {0}`, sorted.
    pub fn candidate_dilations(&self) -> Vec<f64> {
        let dists = self.space.distinct_distances();
        let mut out = vec![0.0];
        for c in &self.classes {
            if c.radius > 0.0 {
                out.extend(dists.iter().map(|d| d / c.radius));
            }
        }
        sort_dedup(&mut out);
        out
    }
}

/// Variable index of `x_{p,t}` in every NUkC-shaped LP built here.
#[inline]
pub fn var_index(num_points: usize, p: usize, t: usize) -> usize {
    t * num_points + p
}

/// Fractional `x_{p,t}` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    num_points: usize,
    num_classes: usize,
    values: Vec<f64>,
    /// Whether the values are a vertex of the LP that produced them.
    pub is_basic: bool,
}

impl FractionalSolution {
    pub fn new(num_points: usize, num_classes: usize, values: Vec<f64>, is_basic: bool) -> Self {
        assert_eq!(values.len(), num_points * num_classes);
        Self {
            num_points,
            num_classes,
            values,
            is_basic,
        }
    }

    pub fn zeros(num_points: usize, num_classes: usize) -> Self {
        Self::new(
            num_points,
            num_classes,
            vec![0.0; num_points * num_classes],
            false,
        )
    }

    #[inline]
    pub fn get(&self, p: usize, t: usize) -> f64 {
        self.values[var_index(self.num_points, p, t)]
    }

    pub fn set(&mut self, p: usize, t: usize, v: f64) {
        self.values[var_index(self.num_points, p, t)] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Mass placed on class `t`.
    pub fn class_mass(&self, t: usize) -> f64 {
        (0..self.num_points).map(|p| self.get(p, t)).sum()
    }

    /// Multiplies every value by `factor` and zeroes the classes outside `keep`.
    pub fn scaled_window(&self, factor: f64, keep: std::ops::RangeInclusive<usize>) -> Self {
        let mut out = Self::zeros(self.num_points, self.num_classes);
        for t in keep {
            if t >= self.num_classes {
                break;
            }
            for p in 0..self.num_points {
                out.set(p, t, self.get(p, t) * factor);
            }
        }
        out
    }
}

/// The covering LP at a given dilation:
/// `Σ_t Σ_{q ∈ B(p, dilation·r_t)} x_{q,t} ≥ 1` for each point `p` in `restrict_points`
/// (all points by default) and `Σ_p x_{p,t} ≤ k_t` per class, with `x ∈ [0,1]`.
pub fn build_nukc_lp(
    instance: &NukcInstance,
    dilation: f64,
    restrict_points: Option<&[usize]>,
) -> LpProblem {
    let n = instance.num_points();
    let h = instance.num_classes();
    let mut lp = LpProblem::unit_box(n * h);
    let all: Vec<usize>;
    let rows = match restrict_points {
        Some(points) => points,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    for &p in rows {
        let mut coeffs = vec![0.0; n * h];
        for t in 0..h {
            let r = dilation * instance.radius(t);
            for q in instance.space().ball(p, r) {
                coeffs[var_index(n, q, t)] = 1.0;
            }
        }
        lp.add_constraint(coeffs, Relation::Ge, 1.0);
    }
    for t in 0..h {
        let mut coeffs = vec![0.0; n * h];
        for p in 0..n {
            coeffs[var_index(n, p, t)] = 1.0;
        }
        lp.add_constraint(coeffs, Relation::Le, instance.multiplicity(t) as f64);
    }
    lp
}

fn solve_nukc_lp(instance: &NukcInstance, dilation: f64) -> Result<Option<FractionalSolution>> {
    let lp = build_nukc_lp(instance, dilation, None);
    let sol = lp::solve(&lp)?;
    Ok(sol.is_feasible().then(|| {
        FractionalSolution::new(
            instance.num_points(),
            instance.num_classes(),
            sol.values,
            true,
        )
    }))
}

/// Smallest candidate dilation at which the covering LP is feasible, with a vertex solution.
/// Lower-bounds the integral optimum.
pub fn min_feasible_dilation(instance: &NukcInstance) -> Result<(f64, FractionalSolution)> {
    let candidates = instance.candidate_dilations();
    let top = *candidates.last().expect("0 is always a candidate");
    let Some(mut best) = solve_nukc_lp(instance, top)? else {
        return Err(Error::Infeasible(format!(
            "{} points cannot be covered by {} zero-radius balls",
            instance.num_points(),
            instance.total_balls()
        )));
    };
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    // Invariant: candidates[hi] feasible; everything below lo is infeasible.
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match solve_nukc_lp(instance, candidates[mid])? {
            Some(x) => {
                hi = mid;
                best = x;
            }
            None => lo = mid + 1,
        }
    }
    Ok((candidates[hi], best))
}

/// `cov[p][t] = Σ_{q ∈ B(p, dilation·r_t)} x_{q,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageProfile {
    num_classes: usize,
    cov: Vec<f64>,
}

impl CoverageProfile {
    #[inline]
    pub fn get(&self, p: usize, t: usize) -> f64 {
        self.cov[p * self.num_classes + t]
    }

    /// `Cov_{≥t}(p)`: coverage from class `t` and all smaller radii. Zero for `t ≥ h`.
    pub fn at_least(&self, p: usize, t: usize) -> f64 {
        (t..self.num_classes).map(|s| self.get(p, s)).sum()
    }

    /// Coverage from classes `lo..=hi`.
    pub fn window(&self, p: usize, lo: usize, hi: usize) -> f64 {
        (lo..=hi.min(self.num_classes.saturating_sub(1)))
            .map(|s| self.get(p, s))
            .sum()
    }

    pub fn total(&self, p: usize) -> f64 {
        self.at_least(p, 0)
    }

    pub fn num_points(&self) -> usize {
        self.cov.len() / self.num_classes.max(1)
    }
}

pub fn coverage(instance: &NukcInstance, x: &FractionalSolution, dilation: f64) -> CoverageProfile {
    let n = instance.num_points();
    let h = instance.num_classes();
    let space = instance.space();
    let mut cov = vec![0.0; n * h];
    for p in 0..n {
        for t in 0..h {
            let r = dilation * instance.radius(t);
            cov[p * h + t] = (0..n)
                .filter(|&q| within(space.dist(p, q), r))
                .map(|q| x.get(q, t))
                .sum();
        }
    }
    CoverageProfile {
        num_classes: h,
        cov,
    }
}

/// A placed ball. `radius` is the radius actually used, which validators compare to `r_class`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub class: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NukcSolution {
    pub balls: Vec<Ball>,
}

impl NukcSolution {
    pub fn new(balls: Vec<Ball>) -> Self {
        Self { balls }
    }

    pub fn push(&mut self, center: usize, class: usize, radius: f64) {
        self.balls.push(Ball {
            center,
            class,
            radius,
        });
    }

    pub fn extend(&mut self, other: NukcSolution) {
        self.balls.extend(other.balls);
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for b in &self.balls {
            if b.class < num_classes {
                counts[b.class] += 1;
            }
        }
        counts
    }

    /// Points not inside any ball (using each ball's `radius`).
    pub fn uncovered(&self, space: &MetricSpace) -> Vec<usize> {
        (0..space.len())
            .filter(|&p| {
                !self
                    .balls
                    .iter()
                    .any(|b| within(space.dist(p, b.center), b.radius))
            })
            .collect()
    }

    /// Dilation realised by the centers alone: `max_p min_b d(p, c_b) / r_{class(b)}`.
    /// Zero-radius balls cover only points at distance zero. Infinite if some point cannot be
    /// reached.
    pub fn dilation(&self, instance: &NukcInstance) -> f64 {
        let space = instance.space();
        (0..space.len())
            .map(|p| {
                self.balls
                    .iter()
                    .map(|b| {
                        let d = space.dist(p, b.center);
                        let r = instance.radius(b.class);
                        if d <= COVER_TOL {
                            0.0
                        } else if r > 0.0 {
                            d / r
                        } else {
                            f64::INFINITY
                        }
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `count_t / k_t` over classes.
    pub fn count_factor(&self, instance: &NukcInstance) -> f64 {
        self.class_counts(instance.num_classes())
            .iter()
            .zip(instance.classes())
            .map(|(&c, cls)| c as f64 / cls.multiplicity as f64)
            .fold(0.0, f64::max)
    }

    /// Largest `radius / r_t` over balls; zero-radius classes count only if the ball is
    /// inflated.
    pub fn radius_factor(&self, instance: &NukcInstance) -> f64 {
        self.balls
            .iter()
            .map(|b| {
                let r = instance.radius(b.class);
                if b.radius <= COVER_TOL {
                    0.0
                } else if r > 0.0 {
                    b.radius / r
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusViolation {
    pub ball: usize,
    pub used: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountViolation {
    pub class: usize,
    pub count: usize,
    pub allowed: usize,
}

/// Everything wrong with a solution. Validators report, they never fail.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub uncovered: Vec<usize>,
    pub radius_violations: Vec<RadiusViolation>,
    pub count_violations: Vec<CountViolation>,
    /// Balls whose center or class index is out of range.
    pub malformed: Vec<usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.uncovered.is_empty()
            && self.radius_violations.is_empty()
            && self.count_violations.is_empty()
            && self.malformed.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_clean() {
            return write!(f, "ok");
        }
        for &b in &self.malformed {
            writeln!(f, "ball {b}: center or class out of range")?;
        }
        for p in &self.uncovered {
            writeln!(f, "point {p}: not covered")?;
        }
        for v in &self.radius_violations {
            writeln!(
                f,
                "ball {}: radius {} exceeds allowed {}",
                v.ball, v.used, v.allowed
            )?;
        }
        for v in &self.count_violations {
            writeln!(
                f,
                "class {}: {} balls exceed allowed {}",
                v.class, v.count, v.allowed
            )?;
        }
        Ok(())
    }
}

/// Allowed ball count for a class: `ceil(count_factor · k_t)`.
pub fn allowed_count(count_factor: f64, multiplicity: usize) -> usize {
    (count_factor * multiplicity as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Checks coverage, `radius ≤ radius_factor · r_t` per ball and
/// `count_t ≤ ceil(count_factor · k_t)` per class.
pub fn validate_solution(
    instance: &NukcInstance,
    solution: &NukcSolution,
    count_factor: f64,
    radius_factor: f64,
) -> ValidationReport {
    let n = instance.num_points();
    let h = instance.num_classes();
    let mut report = ValidationReport::default();
    let mut good = Vec::with_capacity(solution.balls.len());
    for (i, b) in solution.balls.iter().enumerate() {
        if b.center >= n || b.class >= h || b.radius.is_nan() || b.radius < 0.0 {
            report.malformed.push(i);
            continue;
        }
        good.push(*b);
        let allowed = radius_factor * instance.radius(b.class);
        if b.radius > allowed * (1.0 + 1e-12) + COVER_TOL {
            report.radius_violations.push(RadiusViolation {
                ball: i,
                used: b.radius,
                allowed,
            });
        }
    }
    report.uncovered = NukcSolution::new(good.clone()).uncovered(instance.space());
    let counts = NukcSolution::new(good).class_counts(h);
    for (t, &count) in counts.iter().enumerate() {
        let allowed = allowed_count(count_factor, instance.multiplicity(t));
        if count > allowed {
            report.count_violations.push(CountViolation {
                class: t,
                count,
                allowed,
            });
        }
    }
    report
}

/// Smallest power of two `≥ r`; zero stays zero.
pub fn round_up_pow2(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let mut p = 2f64.powi(r.log2().ceil() as i32);
    while p < r {
        p *= 2.0;
    }
    while p / 2.0 >= r {
        p /= 2.0;
    }
    p
}

/// For each clubbed class, the original classes merged into it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClubMap {
    pub groups: Vec<Vec<usize>>,
}

impl ClubMap {
    /// Maps a solution of the clubbed instance back to the original classes. Balls of a clubbed
    /// class are dealt out to its original classes, giving each at most
    /// `ceil(count_factor · k_t)` of them, so an `(a, b)` solution becomes an `(a, 2b)` one.
    pub fn lift(
        &self,
        solution: &NukcSolution,
        original: &NukcInstance,
        count_factor: f64,
    ) -> NukcSolution {
        let mut out = NukcSolution::default();
        let mut used = vec![0usize; original.num_classes()];
        for b in &solution.balls {
            let group = &self.groups[b.class];
            let target = group
                .iter()
                .copied()
                .find(|&t| used[t] < allowed_count(count_factor, original.multiplicity(t)))
                .unwrap_or(*group.last().expect("groups are non-empty"));
            used[target] += 1;
            out.push(b.center, target, b.radius);
        }
        out
    }
}

/// Rounds every radius up to a power of two and merges classes that collide.
pub fn club_radii(instance: &NukcInstance) -> (NukcInstance, ClubMap) {
    let mut classes: Vec<RadiusClass> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (t, c) in instance.classes().iter().enumerate() {
        let r = round_up_pow2(c.radius);
        match classes.last_mut() {
            Some(last) if last.radius == r => {
                last.multiplicity += c.multiplicity;
                groups.last_mut().unwrap().push(t);
            }
            _ => {
                classes.push(RadiusClass::new(c.multiplicity, r));
                groups.push(vec![t]);
            }
        }
    }
    let clubbed = NukcInstance::with_levels(instance.space().clone(), classes)
        .expect("rounding up preserves order");
    (clubbed, ClubMap { groups })
}

/// `floor(log2 k)` for `k ≥ 1`.
pub fn compression_depth(k: usize) -> usize {
    assert!(k >= 1);
    (usize::BITS - 1 - k.leading_zeros()) as usize
}

/// Geometric compression: with `r_1 ≥ … ≥ r_k` the individual radii and `L = floor(log2 k)`,
/// level `i ∈ 0..=L` gets radius `r_{2^i}` and one ball per original radius `r_j` with
/// `2^i ≤ j < 2^{i+1}` (so `2^i`, except possibly at the last level).
pub fn compress_radii(instance: &NukcInstance) -> NukcInstance {
    let radii = instance.singleton_radii();
    let k = radii.len();
    let depth = compression_depth(k);
    let classes = (0..=depth)
        .map(|i| {
            let first = 1usize << i;
            let last = ((1usize << (i + 1)) - 1).min(k);
            RadiusClass::new(last - first + 1, radii[first - 1])
        })
        .collect();
    NukcInstance::with_levels(instance.space().clone(), classes)
        .expect("barrier radii inherit the sorted order")
}

/// Lifts a solution of [`compress_radii`]`(original)` back to `original`.
///
/// Level-0 centers go to `r_1`; the centers of level `i ≥ 1` are dealt round-robin over the
/// `2^{i-1}` radii `r_j` with `2^{i-1} ≤ j < 2^i`. Every such `r_j ≥ r̂_i`, so each ball keeps
/// its radius and still satisfies the radius factor. An `(α, β)` solution lifts to a
/// `(3α, β)` one.
pub fn lift_compressed_solution(
    compressed: &NukcSolution,
    original: &NukcInstance,
) -> NukcSolution {
    let slot_class = original.singleton_classes();
    let mut next_slot: Vec<usize> = Vec::new();
    let mut out = NukcSolution::default();
    for b in &compressed.balls {
        let i = b.class;
        let j = if i == 0 {
            1
        } else {
            if next_slot.len() <= i {
                next_slot.resize(i + 1, 0);
            }
            let width = 1usize << (i - 1);
            let j = width + next_slot[i] % width;
            next_slot[i] += 1;
            j
        };
        out.push(b.center, slot_class[j - 1], b.radius);
    }
    out
}
