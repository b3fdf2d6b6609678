//! k-coverage of the Boolean model and single-crossing detection for
//! ball-count laws.
//!
//! The k-covered volume fraction E|C_k(r) cap W| / |W| equals the chance
//! that a uniformly placed location in W lies within r of at least k
//! points. Two estimators measure it through different machinery: a
//! stratified probe grid scoring covered area geometrically, and a
//! count-law route that counts points in the ball around one uniform
//! location per replicate. Patterns are sampled on the window dilated by
//! r, so boundary coverage is exact and the two estimands coincide for
//! any generator, anchored lattices included; they must agree within
//! combined standard errors.

pub mod geometry;

pub use geometry::disk_rect_overlap;

use crate::error::{Error, Result};
use crate::estimators::EstimateWithCI;
use crate::generators::{GeneratorSpec, PointPattern, Window};
use crate::kernels::DiscreteLaw;
use crate::percolation::{dist2, BucketGrid};
use crate::rng::{mix_all, rep_seed, salt, stream};
use rand::Rng;
use rayon::prelude::*;

/// Sign tolerance for tail differences.
const CROSSING_TOL: f64 = 1e-12;
/// Slack for second differences of the log pmf ratio.
const RATIO_TOL: f64 = 1e-9;
/// Cells whose overlap probability falls below this are dropped from the
/// ball-count convolution.
const CELL_PROB_FLOOR: f64 = 1e-15;

/// k-coverage fractions over k = 1..=k_max, by both estimators.
#[derive(Clone, Debug)]
pub struct CoverageCurve {
    pub ks: Vec<u64>,
    pub frac_geometric: Vec<f64>,
    pub se_geometric: Vec<f64>,
    pub frac_countlaw: Vec<f64>,
    pub se_countlaw: Vec<f64>,
    pub reps: u64,
    pub generator: String,
    pub r: f64,
}

fn count_within(grid: &BucketGrid, pattern: &PointPattern, p: &[f64], r2: f64) -> usize {
    let mut c = 0usize;
    grid.for_candidates(p, |j| {
        if dist2(pattern.point(j as usize), p) <= r2 {
            c += 1;
        }
    });
    c
}

/// Estimate the k-coverage curve of the Boolean model with ball radius
/// `r` over the window, for k = 1..=k_max.
///
/// Each replicate samples one pattern on the dilated window and feeds
/// both estimators: the stratified probe grid (one jittered probe per
/// grid cell) and the single-location count-law indicator. Both per-
/// replicate curves are non-increasing in k by construction, so the
/// reported means are exactly monotone as well.
pub fn coverage_curve(
    spec: &GeneratorSpec,
    window: &Window,
    r: f64,
    k_max: u64,
    probes_per_axis: usize,
    reps: u64,
    seed: u64,
) -> Result<CoverageCurve> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "ball radius must be positive, got {}",
            r
        )));
    }
    if k_max == 0 {
        return Err(Error::Parameter(
            "coverage order k must be at least 1".to_string(),
        ));
    }
    if reps < 2 {
        return Err(Error::Precondition(format!(
            "coverage estimation needs at least 2 replicates, got {}",
            reps
        )));
    }
    let dim = window.dim();
    let n_probes = probes_per_axis
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::Parameter("probe grid size overflows".to_string()))?;
    if n_probes < 1000 {
        return Err(Error::Precondition(format!(
            "probe grid needs at least 1000 points, got {}^{} = {}",
            probes_per_axis, dim, n_probes
        )));
    }
    let dilated = window.dilate(r)?;
    let kk = k_max as usize;
    let r2 = r * r;

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<(Vec<f64>, Vec<f64>)> {
            let pattern = spec.sample(&dilated, rep_seed(seed, rep))?;
            let grid = BucketGrid::build(&pattern, r, false);
            let mut rng = stream(mix_all(seed, &[salt::PROBE_JITTER, rep]));

            // Count-law route: one uniform location per replicate.
            let mut loc = vec![0.0; dim];
            for axis in 0..dim {
                loc[axis] = window.lower()[axis] + rng.random::<f64>() * window.side(axis);
            }
            let c_loc = count_within(&grid, &pattern, &loc, r2);
            let count_row: Vec<f64> = (1..=kk)
                .map(|k| if c_loc >= k { 1.0 } else { 0.0 })
                .collect();

            // Geometric route: stratified probes, one per grid cell.
            let mut hist = vec![0u64; kk + 1];
            let mut idx = vec![0usize; dim];
            let mut probe = vec![0.0; dim];
            loop {
                for axis in 0..dim {
                    let u: f64 = rng.random();
                    probe[axis] = window.lower()[axis]
                        + (idx[axis] as f64 + u) * window.side(axis) / probes_per_axis as f64;
                }
                let c = count_within(&grid, &pattern, &probe, r2);
                hist[c.min(kk)] += 1;
                let mut axis = dim;
                loop {
                    if axis == 0 {
                        break;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < probes_per_axis {
                        break;
                    }
                    idx[axis] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
            let mut frac_row = vec![0.0; kk];
            let mut acc = 0u64;
            for k in (1..=kk).rev() {
                acc += hist[k];
                frac_row[k - 1] = acc as f64 / n_probes as f64;
            }
            Ok((frac_row, count_row))
        })
        .collect::<Result<_>>()?;

    let nf = reps as f64;
    let mut frac_geometric = vec![0.0; kk];
    let mut frac_countlaw = vec![0.0; kk];
    for (g, c) in &rows {
        for k in 0..kk {
            frac_geometric[k] += g[k];
            frac_countlaw[k] += c[k];
        }
    }
    for v in frac_geometric.iter_mut().chain(frac_countlaw.iter_mut()) {
        *v /= nf;
    }
    let mut se_geometric = vec![0.0; kk];
    let mut se_countlaw = vec![0.0; kk];
    for (g, c) in &rows {
        for k in 0..kk {
            se_geometric[k] += (g[k] - frac_geometric[k]).powi(2);
            se_countlaw[k] += (c[k] - frac_countlaw[k]).powi(2);
        }
    }
    for v in se_geometric.iter_mut().chain(se_countlaw.iter_mut()) {
        *v = (*v / (nf - 1.0)).sqrt() / nf.sqrt();
    }

    Ok(CoverageCurve {
        ks: (1..=k_max).collect(),
        frac_geometric,
        se_geometric,
        frac_countlaw,
        se_countlaw,
        reps,
        generator: spec.label(),
        r,
    })
}

/// Both estimates of the k-coverage fraction for a single k.
pub fn coverage_fraction(
    spec: &GeneratorSpec,
    window: &Window,
    r: f64,
    k: u64,
    probes_per_axis: usize,
    reps: u64,
    seed: u64,
) -> Result<(EstimateWithCI, EstimateWithCI)> {
    let curve = coverage_curve(spec, window, r, k, probes_per_axis, reps, seed)?;
    let last = curve.ks.len() - 1;
    let geometric = EstimateWithCI {
        value: curve.frac_geometric[last],
        std_error: curve.se_geometric[last],
        reps,
        seed,
        estimand: format!("{}-coverage fraction of {} (geometric)", k, curve.generator),
    };
    let count_law = EstimateWithCI {
        value: curve.frac_countlaw[last],
        std_error: curve.se_countlaw[last],
        reps,
        seed,
        estimand: format!("{}-coverage fraction of {} (count law)", k, curve.generator),
    };
    Ok((geometric, count_law))
}

/// Exact count law of a perturbed lattice (cell kernel, spacing s) in the
/// disk of radius r around `center`, in the plane.
///
/// Cell z holds N_z points i.i.d. by `replication`, each uniform in the
/// cell, so the count landing in the disk is the independent thinning of
/// N_z with probability |disk cap cell| / s^2, and the ball count is the
/// convolution over cells. Cell overlaps sum to the disk area, hence the
/// mean is replication mean times pi r^2 / s^2 regardless of the phase of
/// `center` in the lattice.
pub fn ball_count_law(
    replication: &DiscreteLaw,
    spacing: f64,
    r: f64,
    center: [f64; 2],
) -> Result<DiscreteLaw> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Parameter(format!(
            "lattice spacing must be positive, got {}",
            spacing
        )));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "ball radius must be positive, got {}",
            r
        )));
    }
    let cell_area = spacing * spacing;
    let mut law: Option<DiscreteLaw> = None;
    for axis0 in ((center[0] - r) / spacing).floor() as i64..=((center[0] + r) / spacing).floor() as i64
    {
        for axis1 in
            ((center[1] - r) / spacing).floor() as i64..=((center[1] + r) / spacing).floor() as i64
        {
            let lower = [axis0 as f64 * spacing, axis1 as f64 * spacing];
            let upper = [lower[0] + spacing, lower[1] + spacing];
            let p = (disk_rect_overlap(center, r, lower, upper)? / cell_area).clamp(0.0, 1.0);
            if p < CELL_PROB_FLOOR {
                continue;
            }
            let thinned = replication.thin(p)?;
            law = Some(match law {
                None => thinned,
                Some(acc) => acc.convolve(&thinned)?,
            });
        }
    }
    match law {
        Some(l) => Ok(l),
        None => DiscreteLaw::dirac(0),
    }
}

/// Sign-change structure of k -> Pr{A >= k} - Pr{B >= k} over k >= 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailCrossing {
    /// All tail differences share one sign (or vanish).
    NoCrossing,
    /// Exactly one sign change; k0 is the last k carrying the initial
    /// sign.
    SingleCrossing { k0: u64 },
    MultipleCrossings,
}

/// Scan the tail differences of two count laws for sign changes.
/// Differences within 1e-12 of zero are skipped.
pub fn crossing_detect(a: &DiscreteLaw, b: &DiscreteLaw) -> TailCrossing {
    let k_max = a.truncation().max(b.truncation());
    let mut signs: Vec<(u64, i8)> = Vec::new();
    for k in 1..=k_max {
        let d = a.tail_prob(k) - b.tail_prob(k);
        if d > CROSSING_TOL {
            signs.push((k as u64, 1));
        } else if d < -CROSSING_TOL {
            signs.push((k as u64, -1));
        }
    }
    if signs.is_empty() {
        return TailCrossing::NoCrossing;
    }
    let mut changes = 0usize;
    let mut k0 = signs[0].0;
    for w in signs.windows(2) {
        if w[1].1 != w[0].1 {
            if changes == 0 {
                k0 = w[0].0;
            }
            changes += 1;
        }
    }
    match changes {
        0 => TailCrossing::NoCrossing,
        1 => TailCrossing::SingleCrossing { k0 },
        _ => TailCrossing::MultipleCrossings,
    }
}

/// Numeric log-concavity check of the pmf ratio f/g, the sufficient
/// condition for single-crossing tails. Checked on the longest contiguous
/// run where both pmfs are bounded away from underflow.
#[derive(Clone, Copy, Debug)]
pub struct RatioLogConcavity {
    pub log_concave: bool,
    /// Largest second difference of ln f - ln g; log-concavity needs this
    /// to stay at or below zero (up to slack).
    pub worst_second_difference: f64,
    pub lo: u64,
    pub hi: u64,
}

pub fn pmf_ratio_log_concave(f: &DiscreteLaw, g: &DiscreteLaw) -> Result<RatioLogConcavity> {
    const FLOOR: f64 = 1e-300;
    let k_max = f.truncation().min(g.truncation());
    let mut lo = None;
    let mut hi = 0usize;
    for k in 0..=k_max {
        if f.pmf(k) > FLOOR && g.pmf(k) > FLOOR {
            if lo.is_none() {
                lo = Some(k);
            }
            hi = k;
        } else if lo.is_some() {
            break;
        }
    }
    let lo = lo.ok_or_else(|| {
        Error::Precondition("pmf ratio has no common support".to_string())
    })?;
    if hi - lo + 1 < 3 {
        return Err(Error::Precondition(format!(
            "pmf ratio support [{}, {}] is too short for a concavity check",
            lo, hi
        )));
    }
    let h: Vec<f64> = (lo..=hi).map(|k| f.pmf(k).ln() - g.pmf(k).ln()).collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..h.len() - 1 {
        worst = worst.max(h[i + 1] - 2.0 * h[i] + h[i - 1]);
    }
    Ok(RatioLogConcavity {
        log_concave: worst <= RATIO_TOL,
        worst_second_difference: worst,
        lo: lo as u64,
        hi: hi as u64,
    })
}
