//! Finite metric spaces given by explicit distance matrices.

use crate::error::{Error, Result};

/// Absolute slack used by every coverage comparison. Balls are closed.
pub const COVER_TOL: f64 = 1e-9;

/// Tolerance for the triangle inequality and symmetry checks.
pub const METRIC_TOL: f64 = 1e-9;

/// `d ≤ r` up to [`COVER_TOL`].
#[inline]
pub fn within(d: f64, r: f64) -> bool {
    d <= r + COVER_TOL
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricViolation {
    Asymmetric {
        i: usize,
        j: usize,
    },
    Negative {
        i: usize,
        j: usize,
    },
    NonZeroDiagonal {
        i: usize,
    },
    NotFinite {
        i: usize,
        j: usize,
    },
    /// `dist[i][k] > dist[i][j] + dist[j][k]`.
    Triangle {
        i: usize,
        j: usize,
        k: usize,
    },
}

/// Every violation found in a candidate distance matrix. Empty means the matrix is a metric.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn triangle_violations(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.violations.iter().filter_map(|v| match *v {
            MetricViolation::Triangle { i, j, k } => Some((i, j, k)),
            _ => None,
        })
    }
}

fn check_square(matrix: &[Vec<f64>]) -> Result<usize> {
    let n = matrix.len();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
    }
    Ok(n)
}

fn scan(matrix: &[Vec<f64>], triangle: bool) -> MetricReport {
    let n = matrix.len();
    let mut violations = Vec::new();
    for i in 0..n {
        if matrix[i][i].abs() > METRIC_TOL {
            violations.push(MetricViolation::NonZeroDiagonal { i });
        }
        for j in 0..n {
            let d = matrix[i][j];
            if !d.is_finite() {
                violations.push(MetricViolation::NotFinite { i, j });
            } else if d < 0.0 {
                violations.push(MetricViolation::Negative { i, j });
            }
            if j > i && (matrix[i][j] - matrix[j][i]).abs() > METRIC_TOL {
                violations.push(MetricViolation::Asymmetric { i, j });
            }
        }
    }
    if triangle {
        // Only i < k is reported; the mirrored triple is implied by symmetry.
        for i in 0..n {
            for k in (i + 1)..n {
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    if matrix[i][k] > matrix[i][j] + matrix[j][k] + METRIC_TOL {
                        violations.push(MetricViolation::Triangle { i, j, k });
                    }
                }
            }
        }
    }
    MetricReport { violations }
}

/// Checks the metric axioms on a square matrix. O(n³).
pub fn validate_metric(matrix: &[Vec<f64>]) -> Result<MetricReport> {
    check_square(matrix)?;
    Ok(scan(matrix, true))
}

/// A finite metric space. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl MetricSpace {
    /// Builds a space from a distance matrix, checking every metric axiom.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_options(matrix, true)
    }

    /// Like [`MetricSpace::new`], but `check_triangle = false` skips the O(n³) triangle scan.
    /// Symmetry, sign and the zero diagonal are always checked.
    pub fn with_options(matrix: Vec<Vec<f64>>, check_triangle: bool) -> Result<Self> {
        let n = check_square(&matrix)?;
        if n == 0 {
            return Err(Error::InvalidMetric("empty point set".into()));
        }
        let report = scan(&matrix, check_triangle);
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidMetric(format!(
                "{:?} ({} violations in total)",
                v,
                report.violations.len()
            )));
        }
        let mut dist = Vec::with_capacity(n * n);
        for row in &matrix {
            dist.extend_from_slice(row);
        }
        // Symmetrize exactly so later comparisons never depend on orientation.
        for i in 0..n {
            dist[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let d = dist[i * n + j];
                dist[j * n + i] = d;
            }
        }
        Ok(Self {
            n,
            dist,
            labels: None,
        })
    }

    /// Euclidean distances between coordinate vectors.
    pub fn from_coords(coords: &[Vec<f64>]) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidMetric("empty point set".into()));
        }
        let dim = coords[0].len();
        if let Some((i, c)) = coords.iter().enumerate().find(|(_, c)| c.len() != dim) {
            return Err(Error::InvalidMetric(format!(
                "point {i} has dimension {}, expected {dim}",
                c.len()
            )));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric("non-finite coordinate".into()));
        }
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| euclidean(&coords[i], &coords[j])).collect())
            .collect();
        Self::with_options(matrix, false)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidMetric(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Closed ball `{ p : dist(center, p) ≤ radius }` in increasing point order.
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        assert!(
            center < self.n,
            "center {center} out of range for {} points",
            self.n
        );
        self.row(center)
            .iter()
            .enumerate()
            .filter(|&(_, &d)| within(d, radius))
            .map(|(p, _)| p)
            .collect()
    }

    /// Sub-space induced by `points`, in the given order.
    pub fn restrict(&self, points: &[usize]) -> MetricSpace {
        let m = points.len();
        let mut dist = Vec::with_capacity(m * m);
        for &i in points {
            for &j in points {
                dist.push(self.dist(i, j));
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| points.iter().map(|&p| l[p].clone()).collect());
        MetricSpace { n: m, dist, labels }
    }

    /// All pairwise distances, sorted and deduplicated (including 0).
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut ds: Vec<f64> = Vec::with_capacity(self.n * (self.n + 1) / 2 + 1);
        ds.push(0.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                ds.push(self.dist(i, j));
            }
        }
        sort_dedup(&mut ds);
        ds
    }

    /// Largest distance from any point to its nearest center; infinite if `centers` is empty.
    /// Lowest-id point at distance zero from each point. Zero-radius balls cover exactly one
    /// such location.
    pub fn locations(&self) -> Vec<usize> {
        (0..self.n)
            .map(|p| (0..=p).find(|&q| within(self.dist(p, q), 0.0)).unwrap_or(p))
            .collect()
    }

    /// Number of distinct locations among `points`.
    pub fn count_locations(&self, points: &[usize]) -> usize {
        let loc = self.locations();
        let mut seen: Vec<usize> = points.iter().map(|&p| loc[p]).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn covering_radius(&self, centers: &[usize]) -> f64 {
        (0..self.n)
            .map(|p| {
                centers
                    .iter()
                    .map(|&c| self.dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sorts ascending and removes exact duplicates.
pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
}

/// Farthest-first traversal. The first center is point 0 and ties go to the lowest point id,
/// so runs are reproducible. Stops early once every point is a center distance 0 away.
pub fn gonzalez_kcenter(space: &MetricSpace, k: usize) -> Result<(Vec<usize>, f64)> {
    let n = space.len();
    if k == 0 {
        return Err(Error::NoCover(n));
    }
    let mut centers = vec![0];
    let mut nearest: Vec<f64> = space.row(0).to_vec();
    while centers.len() < k.min(n) {
        let (far, &d) = nearest
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| {
                if *cur.1 > *best.1 {
                    cur
                } else {
                    best
                }
            });
        if d <= 0.0 {
            break;
        }
        centers.push(far);
        for (p, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(space.dist(far, p));
        }
    }
    let radius = nearest.iter().copied().fold(0.0, f64::max);
    Ok((centers, radius))
}
