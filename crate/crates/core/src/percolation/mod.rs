//! Continuum percolation: the Boolean model with balls of radius r, its
//! connected components, and the percolation-onset sweep over r.
//!
//! Two points are adjacent when their distance is at most 2r (their balls
//! of radius r overlap). Component extraction uses a bucket grid of cell
//! side at least 2r, so the 3^d neighborhood scan around each point covers
//! every possible neighbor; a brute-force quadratic oracle cross-checks
//! this in the tests.

mod paths;
mod union_find;

pub use paths::{
    count_paths, path_count_bound, saw_counts, PathBoundReport, PathCaps, PathCountResult,
    SawCounts,
};
pub use union_find::UnionFind;

use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, PointPattern, Window};
use crate::rng::{mix_all, rep_seed, salt, stream};
use rand::Rng;
use rayon::prelude::*;

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn torus_dist2(a: &[f64], b: &[f64], sides: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(sides)
        .map(|((x, y), s)| {
            let d = (x - y).abs();
            let d = d.min(s - d);
            d * d
        })
        .sum()
}

/// Uniform bucket grid over the pattern window. Cells are at least `cut`
/// wide on every axis, so points within `cut` of each other always sit in
/// the same or adjacent cells (with wraparound when `torus` is set).
pub(crate) struct BucketGrid {
    ncells: Vec<i64>,
    lower: Vec<f64>,
    cell_side: Vec<f64>,
    buckets: Vec<Vec<u32>>,
    torus: bool,
}

impl BucketGrid {
    pub(crate) fn build(pattern: &PointPattern, cut: f64, torus: bool) -> Self {
        let dim = pattern.dim();
        let window = pattern.window();
        let mut ncells = Vec::with_capacity(dim);
        let mut cell_side = Vec::with_capacity(dim);
        for axis in 0..dim {
            let n = ((window.side(axis) / cut).floor() as i64).max(1);
            ncells.push(n);
            cell_side.push(window.side(axis) / n as f64);
        }
        let total: i64 = ncells.iter().product();
        let mut buckets = vec![Vec::new(); total as usize];
        for (i, p) in pattern.points().enumerate() {
            let idx = Self::flat_index(&ncells, &cell_side, window.lower(), p);
            buckets[idx].push(i as u32);
        }
        BucketGrid {
            ncells,
            lower: window.lower().to_vec(),
            cell_side,
            buckets,
            torus,
        }
    }

    fn flat_index(ncells: &[i64], cell_side: &[f64], lower: &[f64], p: &[f64]) -> usize {
        let mut idx = 0i64;
        for axis in 0..ncells.len() {
            let c = (((p[axis] - lower[axis]) / cell_side[axis]).floor() as i64)
                .clamp(0, ncells[axis] - 1);
            idx = idx * ncells[axis] + c;
        }
        idx as usize
    }

    /// Visit the indices of all points in the 3^d cell neighborhood of `p`
    /// (cells deduplicated, so small or wrapped grids stay correct).
    pub(crate) fn for_candidates(&self, p: &[f64], mut f: impl FnMut(u32)) {
        let dim = self.ncells.len();
        let mut base = Vec::with_capacity(dim);
        for axis in 0..dim {
            let c = (((p[axis] - self.lower[axis]) / self.cell_side[axis]).floor() as i64)
                .clamp(0, self.ncells[axis] - 1);
            base.push(c);
        }
        let mut cells: Vec<usize> = Vec::with_capacity(3usize.pow(dim as u32));
        let mut offset = vec![-1i64; dim];
        'outer: loop {
            let mut idx = 0i64;
            let mut valid = true;
            for axis in 0..dim {
                let mut c = base[axis] + offset[axis];
                if self.torus {
                    c = c.rem_euclid(self.ncells[axis]);
                } else if c < 0 || c >= self.ncells[axis] {
                    valid = false;
                    break;
                }
                idx = idx * self.ncells[axis] + c;
            }
            if valid {
                cells.push(idx as usize);
            }
            let mut axis = dim;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                offset[axis] += 1;
                if offset[axis] <= 1 {
                    break;
                }
                offset[axis] = -1;
            }
        }
        cells.sort_unstable();
        cells.dedup();
        for cell in cells {
            for &q in &self.buckets[cell] {
                f(q);
            }
        }
    }
}

/// Component label per point: the smallest point index in its component.
/// Adjacency is distance <= 2r, measured on the torus of the window when
/// `torus` is set.
pub fn components(pattern: &PointPattern, r: f64, torus: bool) -> Result<Vec<usize>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "ball radius must be positive, got {}",
            r
        )));
    }
    let n = pattern.n_points();
    if n == 0 {
        return Ok(Vec::new());
    }
    let cut = 2.0 * r;
    let cut2 = cut * cut;
    let sides: Vec<f64> = (0..pattern.dim()).map(|a| pattern.window().side(a)).collect();
    if torus {
        for (axis, s) in sides.iter().enumerate() {
            if cut > *s {
                return Err(Error::Precondition(format!(
                    "torus adjacency needs 2r <= window side, got 2r = {} vs side {} on axis {}",
                    cut, s, axis
                )));
            }
        }
    }
    let grid = BucketGrid::build(pattern, cut, torus);
    let mut uf = UnionFind::new(n);
    for (i, p) in pattern.points().enumerate() {
        grid.for_candidates(p, |j| {
            if (j as usize) > i {
                let q = pattern.point(j as usize);
                let d2 = if torus {
                    torus_dist2(p, q, &sides)
                } else {
                    dist2(p, q)
                };
                if d2 <= cut2 {
                    uf.union(i as u32, j);
                }
            }
        });
    }
    let mut first_seen = vec![usize::MAX; n];
    let mut labels = vec![0usize; n];
    for i in 0..n {
        let root = uf.find(i as u32) as usize;
        if first_seen[root] == usize::MAX {
            first_seen[root] = i;
        }
        labels[i] = first_seen[root];
    }
    Ok(labels)
}

/// Fractions of points in the largest and second-largest components.
pub fn largest_fractions(labels: &[usize]) -> Result<(f64, f64)> {
    if labels.is_empty() {
        return Err(Error::Precondition(
            "largest component fraction of an empty pattern is undefined".to_string(),
        ));
    }
    let mut counts = std::collections::HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let mut sizes: Vec<usize> = counts.into_values().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let n = labels.len() as f64;
    let f1 = sizes[0] as f64 / n;
    let f2 = sizes.get(1).copied().unwrap_or(0) as f64 / n;
    Ok((f1, f2))
}

/// Bootstrap percentile interval for the crossing radius. `hi` is `None`
/// when the upper percentile falls on resamples whose curve never reaches
/// the level inside the swept range (an open-ended interval).
#[derive(Clone, Copy, Debug)]
pub struct CrossingCi {
    pub lo: f64,
    pub hi: Option<f64>,
}

/// Result of a percolation sweep over ball radii.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub radii: Vec<f64>,
    pub f1_mean: Vec<f64>,
    pub f1_se: Vec<f64>,
    pub f2_mean: Vec<f64>,
    pub f2_se: Vec<f64>,
    /// Radius where the mean largest-component fraction crosses `level`,
    /// linearly interpolated; None when the curve stays below.
    pub crossing: Option<f64>,
    pub crossing_ci: Option<CrossingCi>,
    pub level: f64,
    pub reps: u64,
}

fn crossing_of(radii: &[f64], f1: &[f64], level: f64) -> Option<f64> {
    if f1[0] >= level {
        return Some(radii[0]);
    }
    for i in 0..f1.len() - 1 {
        if f1[i] < level && f1[i + 1] >= level {
            let t = (level - f1[i]) / (f1[i + 1] - f1[i]);
            return Some(radii[i] + t * (radii[i + 1] - radii[i]));
        }
    }
    None
}

/// Sweep the Boolean model over `radii` (strictly increasing).
///
/// Each replicate samples one pattern and reuses it for every radius, so
/// f1 is non-decreasing in r replicate by replicate, and so are the means;
/// observed monotonicity is exact, not statistical. Empty patterns
/// contribute (0, 0). The crossing of `level` by the mean f1 curve gets a
/// 200-resample bootstrap percentile interval.
pub fn threshold_sweep(
    spec: &GeneratorSpec,
    window: &Window,
    radii: &[f64],
    reps: u64,
    seed: u64,
    level: f64,
    torus: bool,
) -> Result<SweepResult> {
    if radii.is_empty() {
        return Err(Error::Precondition("radius sweep is empty".to_string()));
    }
    for w in radii.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Precondition(format!(
                "radii must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if !(radii[0].is_finite() && radii[0] > 0.0) {
        return Err(Error::Parameter(format!(
            "radii must be positive, got {}",
            radii[0]
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter(format!(
            "crossing level must lie in (0,1), got {}",
            level
        )));
    }
    if reps < 2 {
        return Err(Error::Precondition(format!(
            "sweep needs at least 2 replicates, got {}",
            reps
        )));
    }
    let rows: Vec<Vec<(f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<(f64, f64)>> {
            let pattern = spec.sample(window, rep_seed(seed, rep))?;
            let mut row = Vec::with_capacity(radii.len());
            for &r in radii {
                if pattern.n_points() == 0 {
                    row.push((0.0, 0.0));
                } else {
                    let labels = components(&pattern, r, torus)?;
                    row.push(largest_fractions(&labels)?);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let nr = radii.len();
    let nf = reps as f64;
    let mut f1_mean = vec![0.0; nr];
    let mut f2_mean = vec![0.0; nr];
    for row in &rows {
        for (i, &(a, b)) in row.iter().enumerate() {
            f1_mean[i] += a;
            f2_mean[i] += b;
        }
    }
    for v in f1_mean.iter_mut().chain(f2_mean.iter_mut()) {
        *v /= nf;
    }
    let mut f1_se = vec![0.0; nr];
    let mut f2_se = vec![0.0; nr];
    for row in &rows {
        for (i, &(a, b)) in row.iter().enumerate() {
            f1_se[i] += (a - f1_mean[i]).powi(2);
            f2_se[i] += (b - f2_mean[i]).powi(2);
        }
    }
    for v in f1_se.iter_mut().chain(f2_se.iter_mut()) {
        *v = (*v / (nf - 1.0)).sqrt() / nf.sqrt();
    }

    let crossing = crossing_of(radii, &f1_mean, level);
    let crossing_ci = bootstrap_crossing_ci(&rows, radii, level, reps, seed);

    Ok(SweepResult {
        radii: radii.to_vec(),
        f1_mean,
        f1_se,
        f2_mean,
        f2_se,
        crossing,
        crossing_ci,
        level,
        reps,
    })
}

const BOOTSTRAP_RESAMPLES: usize = 200;

fn bootstrap_crossing_ci(
    rows: &[Vec<(f64, f64)>],
    radii: &[f64],
    level: f64,
    reps: u64,
    seed: u64,
) -> Option<CrossingCi> {
    let mut rng = stream(mix_all(seed, &[salt::BOOTSTRAP]));
    let nr = radii.len();
    // Crossings sorted with "never crosses" treated as +infinity.
    let mut draws: Vec<f64> = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut f1 = vec![0.0; nr];
        for _ in 0..reps {
            let pick = rng.random_range(0..rows.len());
            for (i, &(a, _)) in rows[pick].iter().enumerate() {
                f1[i] += a;
            }
        }
        for v in f1.iter_mut() {
            *v /= reps as f64;
        }
        draws.push(crossing_of(radii, &f1, level).unwrap_or(f64::INFINITY));
    }
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = draws[(0.025 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    let hi = draws[(0.975 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    if lo.is_infinite() {
        return None;
    }
    Some(CrossingCi {
        lo,
        hi: hi.is_finite().then_some(hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Provenance, TranslationKernel};
    use crate::kernels::DiscreteLaw;

    fn pattern_from(window: Window, pts: &[[f64; 2]]) -> PointPattern {
        let coords: Vec<f64> = pts.iter().flatten().copied().collect();
        PointPattern::from_coords(window, coords, Provenance::explicit(), false).unwrap()
    }

    /// Quadratic-time oracle with the same smallest-index labeling.
    fn components_oracle(pattern: &PointPattern, r: f64, torus: bool) -> Vec<usize> {
        let n = pattern.n_points();
        let sides: Vec<f64> = (0..pattern.dim())
            .map(|a| pattern.window().side(a))
            .collect();
        let cut2 = 4.0 * r * r;
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let d2 = if torus {
                    torus_dist2(pattern.point(i), pattern.point(j), &sides)
                } else {
                    dist2(pattern.point(i), pattern.point(j))
                };
                if d2 <= cut2 {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let mut labels = vec![usize::MAX; n];
        for start in 0..n {
            if labels[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            labels[start] = start;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if labels[w] == usize::MAX {
                        labels[w] = start;
                        stack.push(w);
                    }
                }
            }
        }
        labels
    }

    #[test]
    fn adjacency_boundary_is_inclusive_at_two_r() {
        let window = Window::cube(4.0, 2).unwrap();
        // Dyadic coordinates so the distance is exactly representable.
        let p = pattern_from(window.clone(), &[[1.0, 1.0], [1.5, 1.0]]);
        // Distance 0.5 == 2r for r = 0.25: one component.
        let labels = components(&p, 0.25, false).unwrap();
        assert_eq!(labels, vec![0, 0]);
        // Just below: two components.
        let labels = components(&p, 0.249, false).unwrap();
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn torus_wraps_across_the_window() {
        let window = Window::cube(4.0, 2).unwrap();
        let p = pattern_from(window, &[[0.1, 2.0], [3.9, 2.0]]);
        // Plain distance 3.8; torus distance 0.2.
        assert_eq!(components(&p, 0.15, false).unwrap(), vec![0, 1]);
        assert_eq!(components(&p, 0.15, true).unwrap(), vec![0, 0]);
    }

    #[test]
    fn grid_components_match_the_quadratic_oracle() {
        // Random patterns across densities and radii, plain and torus.
        let window = Window::cube(6.0, 2).unwrap();
        for (i, &intensity) in [2.0f64, 8.0, 14.0].iter().enumerate() {
            let spec = GeneratorSpec::poisson(intensity).unwrap();
            for rep in 0..12u64 {
                let p = spec.sample(&window, rep_seed(600 + i as u64, rep)).unwrap();
                if p.n_points() == 0 {
                    continue;
                }
                for &r in &[0.12f64, 0.3, 0.7, 2.0] {
                    for torus in [false, true] {
                        let got = components(&p, r, torus).unwrap();
                        let want = components_oracle(&p, r, torus);
                        assert_eq!(got, want, "intensity {} r {} torus {}", intensity, r, torus);
                    }
                }
            }
        }
    }

    #[test]
    fn labels_are_smallest_indices_and_fractions_sorted() {
        let window = Window::cube(10.0, 2).unwrap();
        let p = pattern_from(
            window,
            &[[1.0, 1.0], [5.0, 5.0], [1.2, 1.0], [5.2, 5.0], [5.4, 5.0], [9.0, 9.0]],
        );
        let labels = components(&p, 0.15, false).unwrap();
        assert_eq!(labels, vec![0, 1, 0, 1, 1, 5]);
        let (f1, f2) = largest_fractions(&labels).unwrap();
        assert!((f1 - 0.5).abs() < 1e-15);
        assert!((f2 - 2.0 / 6.0).abs() < 1e-15);
        assert!(largest_fractions(&[]).is_err());
    }

    #[test]
    fn sweep_is_exactly_monotone_with_shared_replicates() {
        let spec = GeneratorSpec::perturbed_lattice(
            1.0,
            DiscreteLaw::poisson(1.0).unwrap(),
            TranslationKernel::UniformCell,
        )
        .unwrap();
        let window = Window::cube(12.0, 2).unwrap();
        let radii: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
        let sweep = threshold_sweep(&spec, &window, &radii, 40, 5150, 0.5, false).unwrap();
        for w in sweep.f1_mean.windows(2) {
            assert!(
                w[1] >= w[0],
                "f1 means must be non-decreasing, got {} then {}",
                w[0],
                w[1]
            );
        }
        for (f1, f2) in sweep.f1_mean.iter().zip(&sweep.f2_mean) {
            assert!(f1 >= f2);
        }
        // With radii up to 1.0 on a unit-intensity pattern the giant
        // component forms; the crossing must exist and sit inside the range.
        let c = sweep.crossing.expect("crossing exists");
        assert!(c >= radii[0] && c <= radii[9]);
        let ci = sweep.crossing_ci.expect("bootstrap interval exists");
        assert!(ci.lo <= c);
        if let Some(hi) = ci.hi {
            assert!(hi >= c);
        }
    }

    #[test]
    fn sweep_validation() {
        let spec = GeneratorSpec::poisson(1.0).unwrap();
        let window = Window::cube(4.0, 2).unwrap();
        assert!(threshold_sweep(&spec, &window, &[], 10, 1, 0.5, false).is_err());
        assert!(threshold_sweep(&spec, &window, &[0.2, 0.2], 10, 1, 0.5, false).is_err());
        assert!(threshold_sweep(&spec, &window, &[0.2, 0.3], 10, 1, 1.5, false).is_err());
        assert!(threshold_sweep(&spec, &window, &[0.2, 0.3], 1, 1, 0.5, false).is_err());
    }
}
