//! Origin-to-boundary path counting and the geometric-series bound on its
//! expectation.
//!
//! A qualifying path is a tuple of distinct pattern points (X1, ..., Xk)
//! with |X1| <= r (euclidean distance to the origin), consecutive hops at
//! most r, and the last point within r of the window boundary in sup norm.
//! Paths of every length are counted, one count per tuple. The hop radius
//! is r, not 2r: this is the graph whose expected path count the geometric
//! bound controls, not the Boolean-model adjacency.

use super::{dist2, BucketGrid};
use crate::error::{Error, Result};
use crate::generators::PointPattern;
use crate::special::unit_ball_volume;

/// Enumeration budget. Exceeding either cap sets `cap_hit` on the result.
#[derive(Clone, Copy, Debug)]
pub struct PathCaps {
    /// Longest path, in points, that gets enumerated.
    pub max_length: usize,
    /// Stop counting once this many qualifying paths have been found.
    pub max_count: u64,
}

impl Default for PathCaps {
    fn default() -> Self {
        PathCaps {
            max_length: 20,
            max_count: 10_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PathCountResult {
    /// `counts_by_length[k]` is the number of qualifying paths with exactly
    /// k points; index 0 is always zero.
    pub counts_by_length: Vec<u64>,
    pub total: u64,
    /// floor(m/r) - 1: no path with fewer points can qualify.
    pub m_r: u64,
    /// True only when enumeration was actually truncated: a path hit the
    /// count cap, or a length-capped path had an unvisited in-range
    /// continuation.
    pub cap_hit: bool,
}

struct Dfs<'a> {
    pattern: &'a PointPattern,
    grid: &'a BucketGrid,
    r2: f64,
    visited: Vec<bool>,
    /// Indexed by path size in points.
    counts: Vec<u64>,
    total: u64,
    cap_hit: bool,
    max_points: usize,
    max_count: u64,
    /// Smallest path size, in points, that gets counted.
    min_count_points: usize,
    /// Count a node only when its sup norm is at least this; None counts
    /// every node.
    sup_threshold: Option<f64>,
}

impl Dfs<'_> {
    fn qualifies(&self, idx: usize) -> bool {
        match self.sup_threshold {
            None => true,
            Some(t) => {
                let p = self.pattern.point(idx);
                p.iter().fold(0.0f64, |m, &c| m.max(c.abs())) >= t
            }
        }
    }

    /// Extends the path ending at `idx` (already marked visited) with
    /// `depth` points so far. Returns false when the count budget is
    /// exhausted, which unwinds the whole search.
    fn visit(&mut self, idx: usize, depth: usize) -> bool {
        if depth >= self.min_count_points && self.qualifies(idx) {
            if self.total == self.max_count {
                self.cap_hit = true;
                return false;
            }
            self.total += 1;
            self.counts[depth] += 1;
        }
        let pattern = self.pattern;
        let p = pattern.point(idx);
        let mut next = Vec::new();
        {
            let visited = &self.visited;
            let r2 = self.r2;
            self.grid.for_candidates(p, |j| {
                let j = j as usize;
                if j != idx && !visited[j] && dist2(p, pattern.point(j)) <= r2 {
                    next.push(j);
                }
            });
        }
        if depth == self.max_points {
            if !next.is_empty() {
                self.cap_hit = true;
            }
            return true;
        }
        for j in next {
            self.visited[j] = true;
            let ok = self.visit(j, depth + 1);
            self.visited[j] = false;
            if !ok {
                return false;
            }
        }
        true
    }
}

fn centered_half_width(pattern: &PointPattern) -> Result<f64> {
    let window = pattern.window();
    let m = window.upper()[0];
    for axis in 0..pattern.dim() {
        let lo = window.lower()[axis];
        let hi = window.upper()[axis];
        if hi != m || lo != -m {
            return Err(Error::Precondition(format!(
                "path counting needs a centered cube window [-m, m]^d, got [{}, {}) on axis {}",
                lo, hi, axis
            )));
        }
    }
    Ok(m)
}

fn validate_caps(max_length: usize, max_count: u64) -> Result<()> {
    if max_length == 0 {
        return Err(Error::Parameter(
            "path length cap must be at least 1".to_string(),
        ));
    }
    if max_count == 0 {
        return Err(Error::Parameter(
            "path count cap must be at least 1".to_string(),
        ));
    }
    Ok(())
}

/// Count origin-to-boundary paths in the window [-m, m]^d.
pub fn count_paths(pattern: &PointPattern, r: f64, caps: &PathCaps) -> Result<PathCountResult> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "hop radius must be positive, got {}",
            r
        )));
    }
    validate_caps(caps.max_length, caps.max_count)?;
    let m = centered_half_width(pattern)?;
    let m_r = ((m / r).floor() as i64 - 1).max(0) as u64;
    let grid = BucketGrid::build(pattern, r, false);
    let mut dfs = Dfs {
        pattern,
        grid: &grid,
        r2: r * r,
        visited: vec![false; pattern.n_points()],
        counts: vec![0; caps.max_length + 1],
        total: 0,
        cap_hit: false,
        max_points: caps.max_length,
        max_count: caps.max_count,
        min_count_points: 1,
        sup_threshold: Some(m - r),
    };
    let origin = vec![0.0; pattern.dim()];
    for i in 0..pattern.n_points() {
        if dist2(pattern.point(i), &origin) <= r * r {
            dfs.visited[i] = true;
            let ok = dfs.visit(i, 1);
            dfs.visited[i] = false;
            if !ok {
                break;
            }
        }
    }
    Ok(PathCountResult {
        counts_by_length: dfs.counts,
        total: dfs.total,
        m_r,
        cap_hit: dfs.cap_hit,
    })
}

/// The geometric-series bound on the expected qualifying-path count.
#[derive(Clone, Copy, Debug)]
pub struct PathBoundReport {
    /// Volume of the unit ball in the ambient dimension.
    pub theta: f64,
    /// theta * r^d * intensity, the per-hop expected neighbor count.
    pub ratio: f64,
    pub m_r: u64,
    /// ratio^{m_r} / (1 - ratio); None when ratio >= 1 and the series
    /// diverges.
    pub bound: Option<f64>,
}

/// Expected qualifying-path count is at most sum_{k >= m_r} ratio^k.
pub fn path_count_bound(dim: usize, r: f64, m: f64, intensity: f64) -> Result<PathBoundReport> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".to_string()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "hop radius must be positive, got {}",
            r
        )));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Parameter(format!(
            "window half width must be positive, got {}",
            m
        )));
    }
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::Parameter(format!(
            "intensity must be positive, got {}",
            intensity
        )));
    }
    let theta = unit_ball_volume(dim);
    let ratio = theta * r.powi(dim as i32) * intensity;
    let m_r = ((m / r).floor() as i64 - 1).max(0) as u64;
    let bound = (ratio < 1.0).then(|| ratio.powi(m_r as i32) / (1.0 - ratio));
    Ok(PathBoundReport {
        theta,
        ratio,
        m_r,
        bound,
    })
}

/// Self-avoiding walk counts by hop count, rooted at the pattern point
/// nearest the origin.
#[derive(Clone, Debug)]
pub struct SawCounts {
    /// `counts[h - 1]` is the number of self-avoiding walks with h hops.
    pub counts: Vec<u64>,
    pub cap_hit: bool,
}

pub fn saw_counts(
    pattern: &PointPattern,
    r: f64,
    max_hops: usize,
    max_count: u64,
) -> Result<SawCounts> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "hop radius must be positive, got {}",
            r
        )));
    }
    validate_caps(max_hops, max_count)?;
    if pattern.n_points() == 0 {
        return Err(Error::Precondition(
            "self-avoiding walks need a nonempty pattern".to_string(),
        ));
    }
    let origin = vec![0.0; pattern.dim()];
    let start = (0..pattern.n_points())
        .min_by(|&a, &b| {
            dist2(pattern.point(a), &origin)
                .partial_cmp(&dist2(pattern.point(b), &origin))
                .unwrap()
        })
        .unwrap();
    let grid = BucketGrid::build(pattern, r, false);
    let mut dfs = Dfs {
        pattern,
        grid: &grid,
        r2: r * r,
        visited: vec![false; pattern.n_points()],
        counts: vec![0; max_hops + 2],
        total: 0,
        cap_hit: false,
        max_points: max_hops + 1,
        max_count,
        min_count_points: 2,
        sup_threshold: None,
    };
    dfs.visited[start] = true;
    dfs.visit(start, 1);
    Ok(SawCounts {
        counts: dfs.counts[2..].to_vec(),
        cap_hit: dfs.cap_hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{GeneratorSpec, Provenance, Window};
    use crate::rng::rep_seed;
    use std::f64::consts::PI;

    fn pattern_from(window: Window, pts: &[[f64; 2]]) -> PointPattern {
        let coords: Vec<f64> = pts.iter().flatten().copied().collect();
        PointPattern::from_coords(window, coords, Provenance::explicit(), false).unwrap()
    }

    fn centered(m: f64) -> Window {
        Window::new(vec![-m, -m], vec![m, m]).unwrap()
    }

    /// Full indicator on one tuple, evaluated from scratch.
    fn tuple_qualifies(pattern: &PointPattern, tuple: &[usize], r: f64, m: f64) -> bool {
        let first = pattern.point(tuple[0]);
        if dist2(first, &[0.0, 0.0]) > r * r {
            return false;
        }
        for w in tuple.windows(2) {
            if dist2(pattern.point(w[0]), pattern.point(w[1])) > r * r {
                return false;
            }
        }
        let last = pattern.point(tuple[tuple.len() - 1]);
        let sup = last.iter().fold(0.0f64, |acc, &c| acc.max(c.abs()));
        m - sup <= r
    }

    /// Enumerate every ordered tuple of distinct indices up to max_len and
    /// apply the indicator, with no pruning at all.
    fn oracle_counts(pattern: &PointPattern, r: f64, m: f64, max_len: usize) -> Vec<u64> {
        fn rec(
            pattern: &PointPattern,
            r: f64,
            m: f64,
            max_len: usize,
            tuple: &mut Vec<usize>,
            used: &mut Vec<bool>,
            counts: &mut Vec<u64>,
        ) {
            if !tuple.is_empty() && tuple_qualifies(pattern, tuple, r, m) {
                counts[tuple.len()] += 1;
            }
            if tuple.len() == max_len {
                return;
            }
            for i in 0..pattern.n_points() {
                if used[i] {
                    continue;
                }
                used[i] = true;
                tuple.push(i);
                rec(pattern, r, m, max_len, tuple, used, counts);
                tuple.pop();
                used[i] = false;
            }
        }
        let mut counts = vec![0u64; max_len + 1];
        let mut used = vec![false; pattern.n_points()];
        rec(pattern, r, m, max_len, &mut Vec::new(), &mut used, &mut counts);
        counts
    }

    #[test]
    fn hand_enumerated_three_point_case() {
        // a starts but is not terminal; b and c are terminal, reachable
        // from a only; b and c are not adjacent (distance 0.743 > 0.6).
        let p = pattern_from(centered(1.0), &[[0.3, 0.0], [0.8, 0.0], [0.3, 0.55]]);
        let caps = PathCaps::default();
        let out = count_paths(&p, 0.6, &caps).unwrap();
        assert_eq!(out.counts_by_length[1], 0);
        assert_eq!(out.counts_by_length[2], 2);
        assert_eq!(out.counts_by_length[3], 0);
        assert_eq!(out.total, 2);
        assert_eq!(out.m_r, 0);
        assert!(!out.cap_hit);

        // A single point can be both start and terminal.
        let p = pattern_from(centered(1.0), &[[0.5, 0.0]]);
        let out = count_paths(&p, 0.6, &caps).unwrap();
        assert_eq!(out.counts_by_length[1], 1);
        assert_eq!(out.total, 1);
    }

    #[test]
    fn dfs_matches_unpruned_tuple_enumeration() {
        let m = 1.5;
        let window = centered(m);
        let spec = GeneratorSpec::poisson(0.8).unwrap();
        let caps = PathCaps {
            max_length: 5,
            max_count: 10_000_000,
        };
        let mut checked = 0;
        for rep in 0..60u64 {
            let p = spec.sample(&window, rep_seed(77, rep)).unwrap();
            if p.n_points() == 0 || p.n_points() > 10 {
                continue;
            }
            let got = count_paths(&p, 0.5, &caps).unwrap();
            let want = oracle_counts(&p, 0.5, m, caps.max_length);
            assert_eq!(got.counts_by_length, want, "rep {}", rep);
            assert_eq!(got.total, want.iter().sum::<u64>());
            checked += 1;
        }
        assert!(checked >= 20, "only {} instances checked", checked);
    }

    #[test]
    fn caps_report_truncation_honestly() {
        // Eight points in a tight cluster at the origin with r = 1: every
        // point is a valid start, every point is terminal (m - r = 0), and
        // the hop graph is complete, so paths are all ordered tuples.
        let pts: Vec<[f64; 2]> = (0..8)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 8.0;
                [0.1 * a.cos(), 0.1 * a.sin()]
            })
            .collect();
        let p = pattern_from(centered(1.0), &pts);

        // All tuples: sum_k 8!/(8-k)! = 109600.
        let full = count_paths(
            &p,
            1.0,
            &PathCaps {
                max_length: 8,
                max_count: 10_000_000,
            },
        )
        .unwrap();
        assert_eq!(full.total, 109_600);
        assert!(!full.cap_hit);

        // Length cap: complete counts up to the cap, flagged truncation.
        let cut = count_paths(
            &p,
            1.0,
            &PathCaps {
                max_length: 3,
                max_count: 10_000_000,
            },
        )
        .unwrap();
        assert_eq!(cut.counts_by_length, vec![0, 8, 56, 336]);
        assert!(cut.cap_hit);

        // Count cap: stops exactly at the budget.
        let capped = count_paths(
            &p,
            1.0,
            &PathCaps {
                max_length: 8,
                max_count: 100,
            },
        )
        .unwrap();
        assert_eq!(capped.total, 100);
        assert!(capped.cap_hit);
    }

    #[test]
    fn short_paths_cannot_reach_the_boundary() {
        let spec = GeneratorSpec::poisson(1.5).unwrap();
        let window = centered(2.0);
        for rep in 0..20u64 {
            let p = spec.sample(&window, rep_seed(909, rep)).unwrap();
            let out = count_paths(&p, 0.3, &PathCaps::default()).unwrap();
            assert_eq!(out.m_r, 5);
            for k in 1..out.m_r as usize {
                assert_eq!(out.counts_by_length[k], 0, "rep {} length {}", rep, k);
            }
        }
    }

    #[test]
    fn bound_report_values() {
        let rep = path_count_bound(2, 0.3, 2.0, 1.0).unwrap();
        assert_eq!(rep.theta, PI);
        assert_eq!(rep.m_r, 5);
        let ratio = PI * 0.09;
        assert!((rep.ratio - ratio).abs() <= 1e-16);
        let want = ratio.powi(5) / (1.0 - ratio);
        assert!((rep.bound.unwrap() - want).abs() <= 1e-15 * want);

        assert_eq!(path_count_bound(3, 0.3, 2.0, 1.0).unwrap().theta, 4.0 * PI / 3.0);

        // Divergent series: no finite bound.
        let rep = path_count_bound(2, 1.0, 2.0, 1.0).unwrap();
        assert!(rep.ratio > 1.0);
        assert!(rep.bound.is_none());
        assert_eq!(rep.m_r, 1);
    }

    #[test]
    fn saw_counts_on_a_complete_quad() {
        // Four pairwise-adjacent points; the walk roots at the point
        // nearest the origin, which is deliberately not index 0.
        let pts = [[0.1, 0.0], [0.1, 0.1], [0.0, 0.0], [0.0, 0.1]];
        let p = pattern_from(Window::cube(1.0, 2).unwrap(), &pts);
        let out = saw_counts(&p, 0.2, 3, 10_000_000).unwrap();
        assert_eq!(out.counts, vec![3, 6, 6]);
        assert!(!out.cap_hit);

        let out = saw_counts(&p, 0.2, 2, 10_000_000).unwrap();
        assert_eq!(out.counts, vec![3, 6]);
        assert!(out.cap_hit);

        let out = saw_counts(&p, 0.2, 5, 10_000_000).unwrap();
        assert_eq!(out.counts, vec![3, 6, 6, 0, 0]);
        assert!(!out.cap_hit);
    }

    #[test]
    fn path_validation_errors() {
        let p = pattern_from(Window::cube(1.0, 2).unwrap(), &[[0.5, 0.5]]);
        // Window is not centered.
        assert!(count_paths(&p, 0.3, &PathCaps::default()).is_err());
        let p = pattern_from(centered(1.0), &[[0.5, 0.5]]);
        assert!(count_paths(&p, 0.0, &PathCaps::default()).is_err());
        assert!(count_paths(
            &p,
            0.3,
            &PathCaps {
                max_length: 0,
                max_count: 1
            }
        )
        .is_err());
        let empty = PointPattern::empty(centered(1.0), Provenance::explicit(), true);
        assert!(saw_counts(&empty, 0.3, 2, 100).is_err());
        assert!(path_count_bound(0, 0.3, 2.0, 1.0).is_err());
    }
}
