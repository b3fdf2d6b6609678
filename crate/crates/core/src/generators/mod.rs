//! Point pattern generators: Poisson, perturbed lattices, and cluster
//! processes driven by a replication kernel and a translation kernel.
//!
//! All generators draw from keyed ChaCha8 streams derived from the caller's
//! seed. Perturbed lattices key one stream per lattice cell from the cell's
//! integer coordinates, so enlarging the observation window never changes
//! the daughters an existing cell produces: the pattern sampled on a window
//! W agrees bit-for-bit with the restriction to W of the pattern sampled on
//! any dilation of W under the same seed.

pub mod io;

use crate::error::{Error, Result};
use crate::kernels::DiscreteLaw;
use crate::rng::{mix, mix_all, salt, stream, zigzag};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson as PoissonDist};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Axis-aligned box window with half-open extent [lower, upper) on every
/// axis. The half-open convention is used consistently for point retention
/// and for counting, so counts over a partition of a window add exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Parameter(format!(
                "window bounds must be non-empty and of equal dimension, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, up)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && up.is_finite() && lo < up) {
                return Err(Error::Parameter(format!(
                    "window axis {} must satisfy lower < upper with finite bounds, got [{}, {})",
                    i, lo, up
                )));
            }
        }
        Ok(Window { lower, upper })
    }

    /// Cube [0, side)^dim.
    pub fn cube(side: f64, dim: usize) -> Result<Self> {
        Window::new(vec![0.0; dim], vec![side; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, up)| up - lo)
            .product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, up)| 0.5 * (lo + up))
            .collect()
    }

    /// Half-open membership test.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, up))| *lo <= *x && *x < *up)
    }

    /// Window grown by `r >= 0` on every side.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Parameter(format!(
                "dilation radius must be non-negative, got {}",
                r
            )));
        }
        Window::new(
            self.lower.iter().map(|lo| lo - r).collect(),
            self.upper.iter().map(|up| up + r).collect(),
        )
    }
}

/// How a pattern was produced; carried through to disk artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
}

impl Provenance {
    pub fn explicit() -> Self {
        Provenance {
            generator: "explicit".to_string(),
            seed: 0,
        }
    }
}

/// A finite point configuration in a window, coordinates stored flat
/// (point i occupies coords[i*dim .. (i+1)*dim]).
#[derive(Clone, Debug)]
pub struct PointPattern {
    dim: usize,
    coords: Vec<f64>,
    window: Window,
    provenance: Provenance,
    simple: bool,
}

impl PointPattern {
    pub fn empty(window: Window, provenance: Provenance, simple: bool) -> Self {
        PointPattern {
            dim: window.dim(),
            coords: Vec::new(),
            window,
            provenance,
            simple,
        }
    }

    /// Build from a flat coordinate vector; every point must lie in the
    /// window under the half-open convention.
    pub fn from_coords(
        window: Window,
        coords: Vec<f64>,
        provenance: Provenance,
        simple: bool,
    ) -> Result<Self> {
        let dim = window.dim();
        if coords.len() % dim != 0 {
            return Err(Error::Dimension {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            if !window.contains(p) {
                return Err(Error::Parameter(format!(
                    "point {} at {:?} lies outside the window",
                    i, p
                )));
            }
        }
        Ok(PointPattern {
            dim,
            coords,
            window,
            provenance,
            simple,
        })
    }

    fn push(&mut self, point: &[f64]) {
        debug_assert_eq!(point.len(), self.dim);
        self.coords.extend_from_slice(point);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn simple(&self) -> bool {
        self.simple
    }

    /// Number of points in `b` (half-open), which must match in dimension.
    pub fn count_in(&self, b: &Window) -> Result<usize> {
        if b.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: b.dim(),
            });
        }
        Ok(self.points().filter(|p| b.contains(p)).count())
    }
}

/// Translation kernel for daughter offsets.
#[derive(Clone, Debug, PartialEq)]
pub enum TranslationKernel {
    /// Uniform over the lattice cell [0, spacing)^d; lattice bases only.
    UniformCell,
    /// Uniform over the closed ball of the given radius.
    UniformBall { radius: f64 },
    /// Centered isotropic Gaussian, rejection-truncated to a ball.
    Gaussian { sigma: f64, truncation_radius: f64 },
}

impl TranslationKernel {
    pub fn uniform_ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!(
                "ball radius must be positive, got {}",
                radius
            )));
        }
        Ok(TranslationKernel::UniformBall { radius })
    }

    /// Gaussian kernel with the default truncation at 6 sigma.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::gaussian_truncated(sigma, 6.0 * sigma)
    }

    pub fn gaussian_truncated(sigma: f64, truncation_radius: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "gaussian sigma must be positive, got {}",
                sigma
            )));
        }
        if !(truncation_radius.is_finite() && truncation_radius > 0.0) {
            return Err(Error::Parameter(format!(
                "gaussian truncation radius must be positive, got {}",
                truncation_radius
            )));
        }
        Ok(TranslationKernel::Gaussian {
            sigma,
            truncation_radius,
        })
    }

    /// Per-axis reach: offsets never exceed this in any coordinate, so
    /// enumerating base cells within reach of the window is exhaustive.
    fn reach(&self, spacing: f64) -> f64 {
        match self {
            TranslationKernel::UniformCell => spacing,
            TranslationKernel::UniformBall { radius } => *radius,
            TranslationKernel::Gaussian {
                truncation_radius, ..
            } => *truncation_radius,
        }
    }

    fn sample_offset(&self, rng: &mut ChaCha8Rng, spacing: f64, dim: usize) -> Vec<f64> {
        match self {
            TranslationKernel::UniformCell => (0..dim)
                .map(|_| rng.random::<f64>() * spacing)
                .collect(),
            TranslationKernel::UniformBall { radius } => loop {
                let cand: Vec<f64> = (0..dim)
                    .map(|_| (2.0 * rng.random::<f64>() - 1.0) * radius)
                    .collect();
                if cand.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
                    break cand;
                }
            },
            TranslationKernel::Gaussian {
                sigma,
                truncation_radius,
            } => {
                let normal = Normal::new(0.0, *sigma).expect("sigma validated at construction");
                loop {
                    let cand: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
                    if cand.iter().map(|x| x * x).sum::<f64>()
                        <= truncation_radius * truncation_radius
                    {
                        break cand;
                    }
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TranslationKernel::UniformCell => "cell".to_string(),
            TranslationKernel::UniformBall { radius } => format!("ball({})", radius),
            TranslationKernel::Gaussian {
                sigma,
                truncation_radius,
            } => {
                if (*truncation_radius - 6.0 * sigma).abs() < 1e-12 * sigma {
                    format!("gauss({})", sigma)
                } else {
                    format!("gauss({},{})", sigma, truncation_radius)
                }
            }
        }
    }
}

impl fmt::Display for TranslationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Replication law plus translation kernel.
#[derive(Clone, Debug)]
pub struct PerturbationSpec {
    pub replication: DiscreteLaw,
    pub translation: TranslationKernel,
}

/// Support of the parent process being perturbed.
#[derive(Clone, Debug)]
pub enum BaseProcess {
    IntegerLattice { spacing: f64 },
    Explicit(PointPattern),
}

/// A reproducible point process generator.
#[derive(Clone, Debug)]
pub enum GeneratorSpec {
    /// Homogeneous Poisson process of the given intensity.
    Poisson { intensity: f64 },
    /// Lattice with spacing `s`, each site replicated by the kernel law and
    /// daughters translated independently.
    PerturbedLattice {
        spacing: f64,
        perturbation: PerturbationSpec,
    },
    /// Poisson parent process with i.i.d. cluster sizes and offsets.
    PerturbedPoisson {
        intensity: f64,
        perturbation: PerturbationSpec,
    },
}

impl GeneratorSpec {
    pub fn poisson(intensity: f64) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(Error::Parameter(format!(
                "poisson intensity must be positive, got {}",
                intensity
            )));
        }
        Ok(GeneratorSpec::Poisson { intensity })
    }

    pub fn perturbed_lattice(
        spacing: f64,
        replication: DiscreteLaw,
        translation: TranslationKernel,
    ) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Parameter(format!(
                "lattice spacing must be positive, got {}",
                spacing
            )));
        }
        Ok(GeneratorSpec::PerturbedLattice {
            spacing,
            perturbation: PerturbationSpec {
                replication,
                translation,
            },
        })
    }

    pub fn perturbed_poisson(
        intensity: f64,
        replication: DiscreteLaw,
        translation: TranslationKernel,
    ) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(Error::Parameter(format!(
                "cluster intensity must be positive, got {}",
                intensity
            )));
        }
        if translation == TranslationKernel::UniformCell {
            return Err(Error::Parameter(
                "uniform-cell translation requires a lattice base".to_string(),
            ));
        }
        Ok(GeneratorSpec::PerturbedPoisson {
            intensity,
            perturbation: PerturbationSpec {
                replication,
                translation,
            },
        })
    }

    /// Expected points per unit volume in dimension `dim` (the lattice case
    /// depends on it; the others do not).
    pub fn intensity(&self, dim: usize) -> f64 {
        match self {
            GeneratorSpec::Poisson { intensity } => *intensity,
            GeneratorSpec::PerturbedLattice {
                spacing,
                perturbation,
            } => perturbation.replication.mean() / spacing.powi(dim as i32),
            GeneratorSpec::PerturbedPoisson {
                intensity,
                perturbation,
            } => intensity * perturbation.replication.mean(),
        }
    }

    /// Generator grammar label, e.g. `lattice(1; poi(1); cell)`.
    pub fn label(&self) -> String {
        match self {
            GeneratorSpec::Poisson { intensity } => format!("poisson({})", intensity),
            GeneratorSpec::PerturbedLattice {
                spacing,
                perturbation,
            } => format!(
                "lattice({}; {}; {})",
                spacing, perturbation.replication, perturbation.translation
            ),
            GeneratorSpec::PerturbedPoisson {
                intensity,
                perturbation,
            } => format!(
                "cluster({}; {}; {})",
                intensity, perturbation.replication, perturbation.translation
            ),
        }
    }

    /// Sample one pattern on `window`. Fixed (seed, window) gives a
    /// bit-identical pattern on every call.
    pub fn sample(&self, window: &Window, seed: u64) -> Result<PointPattern> {
        match self {
            GeneratorSpec::Poisson { intensity } => {
                sample_poisson(*intensity, window, seed, self.label())
            }
            GeneratorSpec::PerturbedLattice {
                spacing,
                perturbation,
            } => perturb_lattice(*spacing, perturbation, window, seed, self.label()),
            GeneratorSpec::PerturbedPoisson {
                intensity,
                perturbation,
            } => {
                let reach = perturbation.translation.reach(0.0);
                let parent_window = window.dilate(reach)?;
                let parent = sample_poisson(
                    *intensity,
                    &parent_window,
                    mix(seed, salt::CLUSTER_BASE),
                    "parent".to_string(),
                )?;
                perturb_explicit(&parent, perturbation, window, seed, self.label())
            }
        }
    }
}

fn sample_poisson(
    intensity: f64,
    window: &Window,
    seed: u64,
    label: String,
) -> Result<PointPattern> {
    let lambda = intensity * window.volume();
    let mut count_rng = stream(mix_all(seed, &[salt::POISSON_COUNT]));
    let n = PoissonDist::new(lambda)
        .map_err(|e| Error::Parameter(format!("poisson mean {} rejected: {}", lambda, e)))?
        .sample(&mut count_rng) as usize;
    let mut loc_rng = stream(mix_all(seed, &[salt::POISSON_LOCATION]));
    let mut pattern = PointPattern::empty(
        window.clone(),
        Provenance {
            generator: label,
            seed,
        },
        true,
    );
    let dim = window.dim();
    let mut point = vec![0.0; dim];
    for _ in 0..n {
        for (axis, x) in point.iter_mut().enumerate() {
            let u: f64 = loc_rng.random();
            *x = window.lower[axis] + u * window.side(axis);
        }
        pattern.push(&point);
    }
    Ok(pattern)
}

/// Iterate integer tuples over per-axis inclusive ranges in lexicographic
/// order.
fn for_each_cell(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    let d = ranges.len();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            cur[axis] += 1;
            if cur[axis] <= ranges[axis].1 {
                break;
            }
            cur[axis] = ranges[axis].0;
        }
    }
}

fn perturb_lattice(
    spacing: f64,
    perturbation: &PerturbationSpec,
    window: &Window,
    seed: u64,
    label: String,
) -> Result<PointPattern> {
    let dim = window.dim();
    let reach = perturbation.translation.reach(spacing);
    // Guard ring of one extra cell on each side; cells that cannot place a
    // daughter inside the window only cost the retention test.
    let ranges: Vec<(i64, i64)> = (0..dim)
        .map(|axis| {
            let lo = ((window.lower[axis] - reach) / spacing).floor() as i64 - 1;
            let hi = ((window.upper[axis] + reach) / spacing).ceil() as i64 + 1;
            (lo, hi)
        })
        .collect();
    let mut pattern = PointPattern::empty(
        window.clone(),
        Provenance {
            generator: label,
            seed,
        },
        true,
    );
    let mut site = vec![0.0; dim];
    let mut key_parts = vec![0u64; dim + 1];
    key_parts[0] = salt::LATTICE_CELL;
    for_each_cell(&ranges, |cell| {
        for (axis, &c) in cell.iter().enumerate() {
            site[axis] = c as f64 * spacing;
            key_parts[axis + 1] = zigzag(c);
        }
        let mut rng = stream(mix_all(seed, &key_parts));
        let n = perturbation.replication.sample(&mut rng);
        for _ in 0..n {
            let offset = perturbation.translation.sample_offset(&mut rng, spacing, dim);
            let daughter: Vec<f64> = site.iter().zip(&offset).map(|(s, o)| s + o).collect();
            if window.contains(&daughter) {
                pattern.push(&daughter);
            }
        }
    });
    Ok(pattern)
}

/// Replicate and translate every point of an explicit base pattern,
/// retaining daughters that land in `window`. Stream keys depend only on
/// (seed, base index), so the same base replays identically.
pub fn perturb_explicit(
    base: &PointPattern,
    perturbation: &PerturbationSpec,
    window: &Window,
    seed: u64,
    label: String,
) -> Result<PointPattern> {
    if base.dim() != window.dim() {
        return Err(Error::Dimension {
            expected: window.dim(),
            got: base.dim(),
        });
    }
    if perturbation.translation == TranslationKernel::UniformCell {
        return Err(Error::Parameter(
            "uniform-cell translation requires a lattice base".to_string(),
        ));
    }
    let dim = window.dim();
    let mut pattern = PointPattern::empty(
        window.clone(),
        Provenance {
            generator: label,
            seed,
        },
        true,
    );
    for (i, site) in base.points().enumerate() {
        let mut rng = stream(mix_all(seed, &[salt::EXPLICIT_POINT, i as u64]));
        let n = perturbation.replication.sample(&mut rng);
        for _ in 0..n {
            let offset = perturbation.translation.sample_offset(&mut rng, 0.0, dim);
            let daughter: Vec<f64> = site.iter().zip(&offset).map(|(s, o)| s + o).collect();
            if window.contains(&daughter) {
                pattern.push(&daughter);
            }
        }
    }
    Ok(pattern)
}

/// Draw the counterexample count vector: a uniform random permutation of
/// {0, ..., k-1} assigned to k cells. Marginals are uniform with mean
/// (k-1)/2, the void probability of a cell is the large value 1/k, yet
/// pairwise product moments fall below the Poisson benchmark.
pub fn sample_counterexample(k: usize, seed: u64) -> Result<Vec<u64>> {
    if k < 2 {
        return Err(Error::Parameter(format!(
            "counterexample needs k >= 2 cells, got {}",
            k
        )));
    }
    let mut values: Vec<u64> = (0..k as u64).collect();
    let mut rng = stream(seed);
    values.shuffle(&mut rng);
    Ok(values)
}

/// E[N_i] = (k-1)/2 for the counterexample.
pub fn counterexample_mean(k: usize) -> f64 {
    (k as f64 - 1.0) / 2.0
}

/// Pr{N_i = 0} = 1/k.
pub fn counterexample_void(k: usize) -> f64 {
    1.0 / k as f64
}

/// Var N_i = (k^2 - 1)/12.
pub fn counterexample_variance(k: usize) -> f64 {
    let kf = k as f64;
    (kf * kf - 1.0) / 12.0
}

fn power_sums(k: usize) -> (f64, f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for v in 0..k {
        let x = v as f64;
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    (s1, s2, s3)
}

/// E[N_i N_j] for distinct cells i != j: (S1^2 - S2) / (k (k-1)).
pub fn counterexample_pair_moment(k: usize) -> f64 {
    let kf = k as f64;
    let (s1, s2, _) = power_sums(k);
    (s1 * s1 - s2) / (kf * (kf - 1.0))
}

/// E[N_i N_j N_l] for distinct cells: (S1^3 - 3 S1 S2 + 2 S3) / (k(k-1)(k-2)).
pub fn counterexample_triple_moment(k: usize) -> f64 {
    let kf = k as f64;
    let (s1, s2, s3) = power_sums(k);
    (s1 * s1 * s1 - 3.0 * s1 * s2 + 2.0 * s3) / (kf * (kf - 1.0) * (kf - 2.0))
}
