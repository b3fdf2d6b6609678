//! Count laws of determinantal and permanental processes from explicit
//! kernel eigenvalues, the Ginibre disk/annuli spectra, and the radial
//! sampler for the infinite Ginibre ensemble.
//!
//! For a kernel with eigenvalues lambda_j on a compact set, the number of
//! determinantal points is distributed as an independent sum of
//! Bernoulli(lambda_j), and the permanental count as an independent sum of
//! geometric laws with mean lambda_j. Both are materialized exactly as
//! convolutions, which is what makes the void-probability and convex-order
//! sandwiches around the Poisson law of the same mean checkable to
//! near-machine precision.

use crate::error::{Error, Result};
use crate::kernels::DiscreteLaw;
use crate::rng::stream;
use crate::special::gamma_p;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Which count law a spectrum generates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralMode {
    Determinantal,
    Permanental,
    /// Poisson law with the same mean; the reference the other two bracket.
    PoissonRef,
}

/// Eigenvalue list plus mode; the count law source.
#[derive(Clone, Debug)]
pub struct SpectralCountLaw {
    eigenvalues: Vec<f64>,
    mode: SpectralMode,
}

impl SpectralCountLaw {
    pub fn new(eigenvalues: Vec<f64>, mode: SpectralMode) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Parameter(
                "spectral count law needs at least one eigenvalue".to_string(),
            ));
        }
        for (j, &l) in eigenvalues.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Parameter(format!(
                    "eigenvalue {} is {}, must be finite and non-negative",
                    j, l
                )));
            }
            if mode == SpectralMode::Determinantal && l > 1.0 {
                return Err(Error::Parameter(format!(
                    "determinantal eigenvalue {} is {} > 1",
                    j, l
                )));
            }
        }
        Ok(SpectralCountLaw { eigenvalues, mode })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode(&self) -> SpectralMode {
        self.mode
    }

    /// E N = sum of eigenvalues in every mode.
    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Var N: determinantal sum l(1-l), Poisson sum l, permanental
    /// sum l(1+l). The strict sandwich around the Poisson reference.
    pub fn variance(&self) -> f64 {
        match self.mode {
            SpectralMode::Determinantal => {
                self.eigenvalues.iter().map(|l| l * (1.0 - l)).sum()
            }
            SpectralMode::PoissonRef => self.mean(),
            SpectralMode::Permanental => {
                self.eigenvalues.iter().map(|l| l * (1.0 + l)).sum()
            }
        }
    }

    /// Pr{N = 0}: product of (1-l), exp(-sum l), or product of 1/(1+l).
    pub fn void_probability(&self) -> f64 {
        match self.mode {
            SpectralMode::Determinantal => {
                self.eigenvalues.iter().map(|l| 1.0 - l).product()
            }
            SpectralMode::PoissonRef => (-self.mean()).exp(),
            SpectralMode::Permanental => {
                self.eigenvalues.iter().map(|l| 1.0 / (1.0 + l)).product()
            }
        }
    }

    /// Materialize the full count law.
    pub fn count_law(&self) -> Result<DiscreteLaw> {
        match self.mode {
            SpectralMode::Determinantal => {
                // Exact finite convolution of Bernoulli(l_j).
                let mut law = DiscreteLaw::empirical(&[1.0])?;
                for &l in &self.eigenvalues {
                    if l == 0.0 {
                        continue;
                    }
                    let bern = DiscreteLaw::empirical(&[1.0 - l, l])?;
                    law = law.convolve(&bern)?;
                }
                Ok(law)
            }
            SpectralMode::PoissonRef => DiscreteLaw::poisson(self.mean()),
            SpectralMode::Permanental => {
                let mut law = DiscreteLaw::empirical(&[1.0])?;
                for &l in &self.eigenvalues {
                    if l == 0.0 {
                        continue;
                    }
                    let geo = DiscreteLaw::geometric(1.0 / (1.0 + l))?;
                    law = law.convolve(&geo)?;
                }
                Ok(law)
            }
        }
    }
}

/// Ginibre kernel eigenvalues on the centered disk of radius `r`:
/// lambda_k = P(k, r^2) for k = 1, 2, ... until they drop below
/// `tail_tol`. Their full sum is exactly r^2.
pub fn ginibre_disk_eigenvalues(r: f64, tail_tol: f64) -> Result<Vec<f64>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!(
            "disk radius must be positive, got {}",
            r
        )));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::Parameter(format!(
            "tail tolerance must lie in (0,1), got {}",
            tail_tol
        )));
    }
    let x = r * r;
    let mut out = Vec::new();
    let mut k = 1u32;
    loop {
        let l = gamma_p(k as f64, x);
        if l < tail_tol {
            break;
        }
        out.push(l);
        k += 1;
        if k > 100_000 {
            return Err(Error::Budget(format!(
                "ginibre spectrum for r = {} did not decay below {}",
                r, tail_tol
            )));
        }
    }
    if out.is_empty() {
        return Err(Error::Parameter(format!(
            "no ginibre eigenvalue above tolerance {} for radius {}",
            tail_tol, r
        )));
    }
    Ok(out)
}

/// Ginibre eigenvalue matrix for the annuli between consecutive `radii`
/// (the bounds are radii; they are squared internally). Row k holds
/// lambda_{k,i} = P(k, r_i^2) - P(k, r_{i-1}^2) over the annuli i; rows
/// stop once an entire row sums below `tail_tol`.
pub fn annuli_eigenvalues(radii: &[f64], tail_tol: f64) -> Result<Vec<Vec<f64>>> {
    if radii.len() < 2 {
        return Err(Error::Parameter(format!(
            "annuli need at least two radii, got {}",
            radii.len()
        )));
    }
    for (i, w) in radii.windows(2).enumerate() {
        if !(w[0].is_finite() && w[1].is_finite() && w[0] >= 0.0 && w[0] < w[1]) {
            return Err(Error::Parameter(format!(
                "radii must be non-negative and strictly increasing; bounds {} and {} are {} and {}",
                i,
                i + 1,
                w[0],
                w[1]
            )));
        }
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::Parameter(format!(
            "tail tolerance must lie in (0,1), got {}",
            tail_tol
        )));
    }
    let squares: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let mut rows = Vec::new();
    let mut k = 1u32;
    loop {
        let row: Vec<f64> = squares
            .windows(2)
            .map(|w| {
                let inner = if w[0] == 0.0 { 0.0 } else { gamma_p(k as f64, w[0]) };
                (gamma_p(k as f64, w[1]) - inner).max(0.0)
            })
            .collect();
        let total: f64 = row.iter().sum();
        if total < tail_tol {
            break;
        }
        rows.push(row);
        k += 1;
        if k > 100_000 {
            return Err(Error::Budget(
                "annuli spectrum did not decay below tolerance".to_string(),
            ));
        }
    }
    if rows.is_empty() {
        return Err(Error::Parameter(format!(
            "no annuli eigenvalue row above tolerance {}",
            tail_tol
        )));
    }
    Ok(rows)
}

/// Draw a joint vector of annuli counts for the given eigenvalue matrix.
///
/// Each eigenrow k contributes an independent count with mean equal to the
/// row sum (Bernoulli, geometric, or Poisson by mode); its points land in
/// the annuli independently with probabilities proportional to the row.
/// Marginally, annulus i then counts an independent sum over k of the same
/// family with parameter lambda_{k,i}, matching the column count laws.
pub fn sample_joint_annuli_counts<R: Rng + ?Sized>(
    matrix: &[Vec<f64>],
    mode: SpectralMode,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if matrix.is_empty() {
        return Err(Error::Parameter("eigenvalue matrix is empty".to_string()));
    }
    let m = matrix[0].len();
    if m == 0 || matrix.iter().any(|row| row.len() != m) {
        return Err(Error::Parameter(
            "eigenvalue matrix rows must be non-empty and of equal length".to_string(),
        ));
    }
    let mut counts = vec![0u64; m];
    for (k, row) in matrix.iter().enumerate() {
        let total: f64 = row.iter().sum();
        if total == 0.0 {
            continue;
        }
        let n = match mode {
            SpectralMode::Determinantal => {
                if total > 1.0 + 1e-12 {
                    return Err(Error::Parameter(format!(
                        "determinantal row {} sums to {} > 1",
                        k, total
                    )));
                }
                u64::from(rng.random::<f64>() < total)
            }
            SpectralMode::PoissonRef => {
                rand_distr::Poisson::new(total)
                    .map_err(|e| Error::Parameter(format!("row {} mean {}: {}", k, total, e)))?
                    .sample(rng) as u64
            }
            SpectralMode::Permanental => {
                // Geometric with mean `total` by cdf inversion.
                let p = 1.0 / (1.0 + total);
                let u: f64 = rng.random();
                (((1.0 - u).ln() / (1.0 - p).ln()).floor() as i64).max(0) as u64
            }
        };
        for _ in 0..n {
            let mut u = rng.random::<f64>() * total;
            let mut idx = m - 1;
            for (i, &l) in row.iter().enumerate() {
                if u < l {
                    idx = i;
                    break;
                }
                u -= l;
            }
            counts[idx] += 1;
        }
    }
    Ok(counts)
}

/// Radial positions of the infinite Ginibre ensemble up to `r_max`: the
/// squared moduli are independent Gamma(k, 1) variables, one per index k.
/// Indices stop once Pr{Gamma(k,1) <= r_max^2} falls below 1e-12.
pub fn sample_ginibre_radial(r_max: f64, seed: u64) -> Result<Vec<f64>> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::Parameter(format!(
            "r_max must be positive, got {}",
            r_max
        )));
    }
    let x = r_max * r_max;
    let mut rng = stream(seed);
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        if gamma_p(k as f64, x) < 1e-12 {
            break;
        }
        let g = Gamma::new(k as f64, 1.0)
            .expect("positive shape")
            .sample(&mut rng);
        if g <= x {
            out.push(g.sqrt());
        }
        k += 1;
        if k > 10_000_000 {
            return Err(Error::Budget(format!(
                "radial sampler index for r_max = {} exceeded the cap",
                r_max
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{cx_compare_default, CxVerdict};
    use crate::rng::rep_seed;

    const TAIL: f64 = 1e-12;

    #[test]
    fn first_eigenvalue_is_exponential_complement() {
        // lambda_1 = P(1, r^2) = 1 - e^{-r^2}.
        for &r in &[0.5f64, 1.0, 2.0] {
            let eig = ginibre_disk_eigenvalues(r, TAIL).unwrap();
            let want = -(-r * r).exp_m1();
            assert!(
                (eig[0] - want).abs() < 1e-14,
                "r = {}: {} vs {}",
                r,
                eig[0],
                want
            );
        }
    }

    #[test]
    fn eigenvalue_sum_is_the_squared_radius() {
        for &r in &[0.5f64, 1.0, 2.0] {
            let eig = ginibre_disk_eigenvalues(r, TAIL).unwrap();
            let sum: f64 = eig.iter().sum();
            assert!(
                (sum - r * r).abs() < 1e-9,
                "r = {}: sum {} vs {}",
                r,
                sum,
                r * r
            );
            // Eigenvalues decrease in k.
            for w in eig.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn annuli_rows_telescope_to_disk_eigenvalues() {
        let radii = [0.0, 0.5, 1.0, 1.5, 2.0];
        let matrix = annuli_eigenvalues(&radii, TAIL).unwrap();
        let disk = ginibre_disk_eigenvalues(2.0, TAIL).unwrap();
        for (k, row) in matrix.iter().enumerate() {
            let row_sum: f64 = row.iter().sum();
            let want = if k < disk.len() { disk[k] } else { 0.0 };
            assert!(
                (row_sum - want).abs() < 1e-12,
                "row {}: {} vs {}",
                k,
                row_sum,
                want
            );
        }
    }

    #[test]
    fn annuli_validation() {
        assert!(annuli_eigenvalues(&[1.0], TAIL).is_err());
        assert!(annuli_eigenvalues(&[1.0, 0.5], TAIL).is_err());
        assert!(annuli_eigenvalues(&[-1.0, 0.5], TAIL).is_err());
        assert!(SpectralCountLaw::new(vec![], SpectralMode::Determinantal).is_err());
        assert!(SpectralCountLaw::new(vec![1.2], SpectralMode::Determinantal).is_err());
        assert!(SpectralCountLaw::new(vec![1.2], SpectralMode::Permanental).is_ok());
        assert!(SpectralCountLaw::new(vec![-0.1], SpectralMode::Permanental).is_err());
    }

    #[test]
    fn count_laws_match_closed_form_moments() {
        let eig = ginibre_disk_eigenvalues(1.0, TAIL).unwrap();
        for mode in [
            SpectralMode::Determinantal,
            SpectralMode::PoissonRef,
            SpectralMode::Permanental,
        ] {
            let spec = SpectralCountLaw::new(eig.clone(), mode).unwrap();
            let law = spec.count_law().unwrap();
            assert!(
                (law.mean() - spec.mean()).abs() < 1e-10,
                "{:?} mean {} vs {}",
                mode,
                law.mean(),
                spec.mean()
            );
            assert!(
                (law.variance() - spec.variance()).abs() < 1e-10,
                "{:?} variance {} vs {}",
                mode,
                law.variance(),
                spec.variance()
            );
            assert!(
                (law.pmf(0) - spec.void_probability()).abs() < 1e-12,
                "{:?} void {} vs {}",
                mode,
                law.pmf(0),
                spec.void_probability()
            );
        }
    }

    #[test]
    fn void_probabilities_sandwich_the_poisson() {
        // Product over (1 - l) < e^{-sum l} < product over 1/(1 + l),
        // strictly when some l > 0.
        for &r in &[0.5f64, 1.0, 2.0] {
            let eig = ginibre_disk_eigenvalues(r, TAIL).unwrap();
            let det = SpectralCountLaw::new(eig.clone(), SpectralMode::Determinantal).unwrap();
            let poi = SpectralCountLaw::new(eig.clone(), SpectralMode::PoissonRef).unwrap();
            let perm = SpectralCountLaw::new(eig, SpectralMode::Permanental).unwrap();
            assert!(det.void_probability() < poi.void_probability());
            assert!(poi.void_probability() < perm.void_probability());
            assert!(det.variance() < poi.variance());
            assert!(poi.variance() < perm.variance());
        }
    }

    #[test]
    fn counts_are_convexly_sandwiched() {
        let eig = ginibre_disk_eigenvalues(1.0, TAIL).unwrap();
        let det = SpectralCountLaw::new(eig.clone(), SpectralMode::Determinantal)
            .unwrap()
            .count_law()
            .unwrap();
        let poi = SpectralCountLaw::new(eig.clone(), SpectralMode::PoissonRef)
            .unwrap()
            .count_law()
            .unwrap();
        let perm = SpectralCountLaw::new(eig, SpectralMode::Permanental)
            .unwrap()
            .count_law()
            .unwrap();
        // Means agree up to the eigenvalue tail; certify with matching tol.
        let lo = cx_compare_default(&det, &poi, 1e-9).unwrap();
        assert_eq!(lo.verdict, CxVerdict::Ordered, "{:?}", lo);
        let hi = cx_compare_default(&poi, &perm, 1e-9).unwrap();
        assert_eq!(hi.verdict, CxVerdict::Ordered, "{:?}", hi);
    }

    #[test]
    fn radial_sampler_matches_disk_means() {
        // Expected count of moduli below sqrt(t) is exactly t.
        let r_max = 3.0;
        let reps = 2_000u64;
        let mut count4 = 0usize;
        let mut count1 = 0usize;
        for rep in 0..reps {
            let radii = sample_ginibre_radial(r_max, rep_seed(400, rep)).unwrap();
            count4 += radii.iter().filter(|&&x| x <= 2.0).count();
            count1 += radii.iter().filter(|&&x| x <= 1.0).count();
        }
        let eig4 = ginibre_disk_eigenvalues(2.0, TAIL).unwrap();
        let var4: f64 = eig4.iter().map(|l| l * (1.0 - l)).sum();
        let mean4 = count4 as f64 / reps as f64;
        let se4 = (var4 / reps as f64).sqrt();
        assert!((mean4 - 4.0).abs() <= 3.0 * se4, "mean {} se {}", mean4, se4);
        let eig1 = ginibre_disk_eigenvalues(1.0, TAIL).unwrap();
        let var1: f64 = eig1.iter().map(|l| l * (1.0 - l)).sum();
        let mean1 = count1 as f64 / reps as f64;
        let se1 = (var1 / reps as f64).sqrt();
        assert!((mean1 - 1.0).abs() <= 3.0 * se1, "mean {} se {}", mean1, se1);
    }

    #[test]
    fn joint_sampler_marginals_match_column_laws() {
        let radii = [0.0, 1.0, 2.0];
        let matrix = annuli_eigenvalues(&radii, TAIL).unwrap();
        let n = 20_000u64;
        let m = matrix[0].len();
        let mut hists: Vec<Vec<u64>> = vec![Vec::new(); m];
        let mut rng = stream(4242);
        for _ in 0..n {
            let counts = sample_joint_annuli_counts(&matrix, SpectralMode::Determinantal, &mut rng)
                .unwrap();
            for (i, &c) in counts.iter().enumerate() {
                let c = c as usize;
                if hists[i].len() <= c {
                    hists[i].resize(c + 1, 0);
                }
                hists[i][c] += 1;
            }
        }
        // Compare empirical cdf per annulus with the column count law.
        for (i, hist) in hists.iter().enumerate() {
            let column: Vec<f64> = matrix.iter().map(|row| row[i]).collect();
            let law = SpectralCountLaw::new(column, SpectralMode::Determinantal)
                .unwrap()
                .count_law()
                .unwrap();
            let mut emp_cum = 0.0;
            let mut law_cum = 0.0;
            let mut sup = 0.0f64;
            for c in 0..hist.len().max(law.truncation() + 1) {
                emp_cum += hist.get(c).copied().unwrap_or(0) as f64 / n as f64;
                law_cum += law.pmf(c);
                sup = sup.max((emp_cum - law_cum).abs());
            }
            // Kolmogorov bound at the 1% level.
            let crit = 1.63 / (n as f64).sqrt();
            assert!(sup <= crit, "annulus {}: sup {} > {}", i, sup, crit);
        }
    }
}
