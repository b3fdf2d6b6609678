//! Discrete replication kernels and the convex-order certifier.
//!
//! A [`DiscreteLaw`] is a probability law on {0, 1, 2, ...} from one of the
//! families used as replication kernels, together with a materialized pmf
//! table. Infinite supports are truncated where the remaining tail mass
//! drops below [`TAIL_TOL`]; the discarded mass and its contribution to the
//! mean are tracked explicitly so that order verdicts remain rigorous.
//!
//! Convex order is certified through stop-loss transforms. For laws on the
//! integers the stop-loss function a -> E[(X - a)^+] is piecewise linear
//! with knots at the integers, so comparing two laws on the half-integer
//! grid decides the pointwise inequality everywhere. The stop-loss value
//! itself is computed through the identity
//!
//! E[(X - a)^+] = E[X] - a + E[(a - X)^+]
//!
//! whose right-hand side only touches the finitely many atoms below `a`,
//! so no upper-tail truncation error enters beyond the tracked defect.

mod parse;

pub use parse::parse_law;

use crate::error::{Error, Result};
use crate::special::{ln_choose, ln_gamma};
use rand::Rng;
use std::fmt;

/// Truncation threshold: tails with mass below this are dropped.
pub const TAIL_TOL: f64 = 1e-15;

/// Stored pmf vectors must carry total mass within this of 1.
pub const MASS_TOL: f64 = 1e-12;

/// Second differences above `-SECOND_DIFF_TOL` count as convex.
pub const SECOND_DIFF_TOL: f64 = 1e-12;

/// Hard cap on materialized support length.
const MAX_SUPPORT: usize = 1 << 22;

/// Secondary stopping rule: once individual terms fall this low the
/// remaining tail is far below MASS_TOL even for slow geometric decay,
/// and rounding in the accumulated mass may keep the primary TAIL_TOL
/// criterion from ever firing. The dropped mass stays recorded in
/// `tail_mass` either way.
const TINY_TERM: f64 = 1e-18;

/// Compensated accumulator; construction sums mass to ~1e-15, which plain
/// summation cannot resolve over long supports.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum
    }
}

/// Parametric family of a [`DiscreteLaw`].
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Poisson { lambda: f64 },
    Binomial { n: u64, p: f64 },
    HyperGeometric { n: u64, m: u64, k: u64 },
    NegBinomial { r: f64, p: f64 },
    Geometric { p: f64 },
    GeoMixture { weights: Vec<f64>, ps: Vec<f64> },
    Dirac { n: u64 },
    Empirical,
    Convolution { parts: Vec<Family> },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Poisson { lambda } => write!(f, "poi({})", lambda),
            Family::Binomial { n, p } => write!(f, "bin({},{})", n, p),
            Family::HyperGeometric { n, m, k } => write!(f, "hgeo({},{},{})", n, m, k),
            Family::NegBinomial { r, p } => write!(f, "nbin({},{})", r, p),
            Family::Geometric { p } => write!(f, "geo({})", p),
            Family::GeoMixture { weights, ps } => {
                let ws: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                let qs: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                write!(f, "mixgeo([{}],[{}])", ws.join(","), qs.join(","))
            }
            Family::Dirac { n } => write!(f, "dirac({})", n),
            Family::Empirical => write!(f, "empirical"),
            Family::Convolution { parts } => {
                let ps: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "conv({})", ps.join(","))
            }
        }
    }
}

/// A law on the non-negative integers with materialized pmf and cdf.
#[derive(Clone, Debug)]
pub struct DiscreteLaw {
    family: Family,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    variance: f64,
    tail_mass: f64,
    tail_mean_defect: f64,
}

impl fmt::Display for DiscreteLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.family.fmt(f)
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg()))
    }
}

impl DiscreteLaw {
    /// Poisson law with mean `lambda > 0`.
    pub fn poisson(lambda: f64) -> Result<Self> {
        require(lambda.is_finite() && lambda > 0.0, || {
            format!("poisson lambda must be positive and finite, got {}", lambda)
        })?;
        let mode = lambda.floor() as usize;
        let ln_anchor = mode as f64 * lambda.ln() - lambda - crate::special::ln_factorial(mode as u64);
        let pmf = build_two_sided(
            mode,
            ln_anchor,
            |i| lambda / (i as f64 + 1.0),
            None,
            true,
        )?;
        Self::finish(Family::Poisson { lambda }, pmf, lambda, lambda)
    }

    /// Binomial law: number of successes in `n` trials at probability `p`.
    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        require(p.is_finite() && (0.0..=1.0).contains(&p), || {
            format!("binomial p must lie in [0,1], got {}", p)
        })?;
        require((n as usize) < MAX_SUPPORT, || {
            format!("binomial n = {} exceeds the support cap", n)
        })?;
        let mean = n as f64 * p;
        let variance = n as f64 * p * (1.0 - p);
        if p == 0.0 || n == 0 {
            return Self::finish(Family::Binomial { n, p }, vec![1.0], 0.0, 0.0);
        }
        if p == 1.0 {
            let mut pmf = vec![0.0; n as usize + 1];
            pmf[n as usize] = 1.0;
            return Self::finish(Family::Binomial { n, p }, pmf, mean, variance);
        }
        let mode = (((n + 1) as f64 * p).floor() as u64).min(n) as usize;
        let ln_anchor =
            ln_choose(n, mode as u64) + mode as f64 * p.ln() + (n - mode as u64) as f64 * (1.0 - p).ln();
        let odds = p / (1.0 - p);
        let pmf = build_two_sided(
            mode,
            ln_anchor,
            |i| (n as f64 - i as f64) / (i as f64 + 1.0) * odds,
            Some(n as usize),
            false,
        )?;
        Self::finish(Family::Binomial { n, p }, pmf, mean, variance)
    }

    /// Hypergeometric law: `k` draws without replacement from `n` items of
    /// which `m` are marked; counts marked draws.
    pub fn hypergeometric(n: u64, m: u64, k: u64) -> Result<Self> {
        require(m <= n, || format!("hgeo requires m <= n, got m={} n={}", m, n))?;
        require(k <= n, || format!("hgeo requires k <= n, got k={} n={}", k, n))?;
        require(n > 0, || "hgeo requires n >= 1".to_string())?;
        require((n as usize) < MAX_SUPPORT, || {
            format!("hgeo n = {} exceeds the support cap", n)
        })?;
        let lo = (k + m).saturating_sub(n) as usize;
        let hi = m.min(k) as usize;
        let mean = k as f64 * m as f64 / n as f64;
        let variance = if n > 1 {
            mean * ((n - m) as f64 / n as f64) * ((n - k) as f64 / (n - 1) as f64)
        } else {
            0.0
        };
        let mode = ((((k + 1) * (m + 1)) as f64 / (n + 2) as f64).floor() as usize).clamp(lo, hi);
        let ln_anchor = ln_choose(m, mode as u64) + ln_choose(n - m, k - mode as u64) - ln_choose(n, k);
        // Two-sided ratio recurrence over the finite support [lo, hi].
        let mut pmf = vec![0.0; hi + 1];
        pmf[mode] = ln_anchor.exp();
        let up = |i: usize| {
            ((m as f64 - i as f64) * (k as f64 - i as f64))
                / ((i as f64 + 1.0) * ((n - m) as f64 - (k as f64 - i as f64) + 1.0))
        };
        for i in mode..hi {
            pmf[i + 1] = pmf[i] * up(i);
        }
        for i in (lo + 1..=mode).rev() {
            let r = up(i - 1);
            pmf[i - 1] = if r > 0.0 { pmf[i] / r } else { 0.0 };
        }
        Self::finish(Family::HyperGeometric { n, m, k }, pmf, mean, variance)
    }

    /// Negative binomial with pmf C(r+i-1, i) p^i (1-p)^r; mean r p / (1-p).
    pub fn neg_binomial(r: f64, p: f64) -> Result<Self> {
        require(r.is_finite() && r > 0.0, || {
            format!("nbin r must be positive, got {}", r)
        })?;
        require(p.is_finite() && p > 0.0 && p < 1.0, || {
            format!("nbin p must lie in (0,1), got {}", p)
        })?;
        let mean = r * p / (1.0 - p);
        let variance = r * p / ((1.0 - p) * (1.0 - p));
        let mode = if r > 1.0 {
            (p * (r - 1.0) / (1.0 - p)).floor().max(0.0) as usize
        } else {
            0
        };
        let ln_anchor = ln_gamma(r + mode as f64) - ln_gamma(mode as f64 + 1.0) - ln_gamma(r)
            + mode as f64 * p.ln()
            + r * (1.0 - p).ln();
        let pmf = build_two_sided(
            mode,
            ln_anchor,
            |i| p * (r + i as f64) / (i as f64 + 1.0),
            None,
            true,
        )?;
        Self::finish(Family::NegBinomial { r, p }, pmf, mean, variance)
    }

    /// Geometric law with pmf p (1-p)^i; mean 1/p - 1.
    pub fn geometric(p: f64) -> Result<Self> {
        require(p.is_finite() && p > 0.0 && p <= 1.0, || {
            format!("geo p must lie in (0,1], got {}", p)
        })?;
        let mean = 1.0 / p - 1.0;
        let variance = (1.0 - p) / (p * p);
        let mut pmf = Vec::new();
        let mut mass = Kahan::default();
        let mut v = p;
        while 1.0 - mass.value() > TAIL_TOL && (pmf.is_empty() || v >= TINY_TERM) {
            pmf.push(v);
            mass.add(v);
            v *= 1.0 - p;
            if pmf.len() >= MAX_SUPPORT {
                return Err(Error::Budget(format!(
                    "geo({}) truncation exceeds the support cap",
                    p
                )));
            }
        }
        Self::finish(Family::Geometric { p }, pmf, mean, variance)
    }

    /// Mixture of geometric laws: pmf(i) = sum_j w_j p_j (1-p_j)^i.
    /// Weights must be non-negative and sum to 1.
    pub fn geo_mixture(weights: &[f64], ps: &[f64]) -> Result<Self> {
        require(!weights.is_empty(), || "mixgeo needs at least one component".to_string())?;
        require(weights.len() == ps.len(), || {
            format!(
                "mixgeo weight/parameter lengths differ: {} vs {}",
                weights.len(),
                ps.len()
            )
        })?;
        for &w in weights {
            require(w.is_finite() && w >= 0.0, || {
                format!("mixgeo weights must be non-negative, got {}", w)
            })?;
        }
        for &p in ps {
            require(p.is_finite() && p > 0.0 && p <= 1.0, || {
                format!("mixgeo component p must lie in (0,1], got {}", p)
            })?;
        }
        let total: f64 = weights.iter().sum();
        require((total - 1.0).abs() <= MASS_TOL, || {
            format!("mixgeo weights must sum to 1, got {}", total)
        })?;
        let mean: f64 = weights
            .iter()
            .zip(ps)
            .map(|(w, p)| w * (1.0 / p - 1.0))
            .sum();
        let second: f64 = weights
            .iter()
            .zip(ps)
            .map(|(w, p)| w * (1.0 - p) * (2.0 - p) / (p * p))
            .sum();
        let variance = second - mean * mean;
        let mut terms: Vec<f64> = weights.iter().zip(ps).map(|(w, p)| w * p).collect();
        let mut pmf = Vec::new();
        let mut mass = Kahan::default();
        loop {
            let v: f64 = terms.iter().sum();
            if 1.0 - mass.value() <= TAIL_TOL || (!pmf.is_empty() && v < TINY_TERM) {
                break;
            }
            pmf.push(v);
            mass.add(v);
            for (t, p) in terms.iter_mut().zip(ps) {
                *t *= 1.0 - p;
            }
            if pmf.len() >= MAX_SUPPORT {
                return Err(Error::Budget(
                    "mixgeo truncation exceeds the support cap".to_string(),
                ));
            }
        }
        Self::finish(
            Family::GeoMixture {
                weights: weights.to_vec(),
                ps: ps.to_vec(),
            },
            pmf,
            mean,
            variance,
        )
    }

    /// Point mass at `n`.
    pub fn dirac(n: u64) -> Result<Self> {
        require((n as usize) < MAX_SUPPORT, || {
            format!("dirac({}) exceeds the support cap", n)
        })?;
        let mut pmf = vec![0.0; n as usize + 1];
        pmf[n as usize] = 1.0;
        Self::finish(Family::Dirac { n }, pmf, n as f64, 0.0)
    }

    /// Law given directly by a pmf vector over {0, ..., len-1}.
    pub fn empirical(pmf: &[f64]) -> Result<Self> {
        require(!pmf.is_empty(), || "empirical pmf must be non-empty".to_string())?;
        for &v in pmf {
            require(v.is_finite() && v >= 0.0, || {
                format!("empirical pmf entries must be non-negative, got {}", v)
            })?;
        }
        let mut mass = Kahan::default();
        let mut m1 = Kahan::default();
        let mut m2 = Kahan::default();
        for (i, &v) in pmf.iter().enumerate() {
            mass.add(v);
            m1.add(i as f64 * v);
            m2.add(i as f64 * i as f64 * v);
        }
        require((mass.value() - 1.0).abs() <= MASS_TOL, || {
            format!("empirical pmf mass is {}, must be within {} of 1", mass.value(), MASS_TOL)
        })?;
        let mean = m1.value();
        let variance = m2.value() - mean * mean;
        Self::finish(Family::Empirical, pmf.to_vec(), mean, variance)
    }

    /// Law of the sum of independent draws from `parts`.
    pub fn convolution(parts: &[DiscreteLaw]) -> Result<Self> {
        require(!parts.is_empty(), || {
            "convolution needs at least one part".to_string()
        })?;
        let mut acc = parts[0].clone();
        for part in &parts[1..] {
            acc = acc.convolve(part)?;
        }
        Ok(acc)
    }

    /// Sum of `self` and an independent `other`.
    pub fn convolve(&self, other: &DiscreteLaw) -> Result<Self> {
        let la = self.pmf.len();
        let lb = other.pmf.len();
        require(la + lb - 1 < MAX_SUPPORT, || {
            "convolution support exceeds the cap".to_string()
        })?;
        let mut out = vec![0.0; la + lb - 1];
        for (i, &a) in self.pmf.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.pmf.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        let family = Family::Convolution {
            parts: flatten_conv(&self.family, &other.family),
        };
        let mut law = Self::finish(
            family,
            out,
            self.mean + other.mean,
            self.variance + other.variance,
        )?;
        // Mass missing from the product of two truncated vectors is at most
        // the sum of the component tails.
        law.tail_mass = (self.tail_mass + other.tail_mass).max(law.tail_mass);
        Ok(law)
    }

    /// Independent thinning: each unit is kept with probability `p`.
    ///
    /// The thinned pmf is sum_n pmf(n) Bin(n, p)(j); mean scales by p and
    /// the variance follows the thinning identity p^2 Var + p(1-p) E.
    pub fn thin(&self, p: f64) -> Result<Self> {
        require(p.is_finite() && (0.0..=1.0).contains(&p), || {
            format!("thinning probability must lie in [0,1], got {}", p)
        })?;
        if p == 0.0 {
            return Self::finish(Family::Empirical, vec![1.0], 0.0, 0.0);
        }
        if p == 1.0 {
            let mut law = self.clone();
            law.family = Family::Empirical;
            return Ok(law);
        }
        let mut out = vec![0.0; self.pmf.len()];
        for (n, &w) in self.pmf.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            // Binomial(n, p) row via the ratio recurrence.
            let mut row = (1.0 - p).powi(n as i32);
            let odds = p / (1.0 - p);
            for j in 0..=n {
                out[j] += w * row;
                row *= (n as f64 - j as f64) / (j as f64 + 1.0) * odds;
            }
        }
        let mean = p * self.mean;
        let variance = p * p * self.variance + p * (1.0 - p) * self.mean;
        let mut law = Self::finish(Family::Empirical, out, mean, variance)?;
        law.tail_mass = law.tail_mass.max(self.tail_mass);
        Ok(law)
    }

    fn finish(family: Family, pmf: Vec<f64>, mean: f64, variance: f64) -> Result<Self> {
        let mut mass = Kahan::default();
        let mut m1 = Kahan::default();
        let mut cdf = Vec::with_capacity(pmf.len());
        for (i, &v) in pmf.iter().enumerate() {
            mass.add(v);
            m1.add(i as f64 * v);
            cdf.push(mass.value().min(1.0));
        }
        let total = mass.value();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Parameter(format!(
                "law {} materialized mass {} is outside 1 +/- {}",
                family, total, MASS_TOL
            )));
        }
        let tail_mass = (1.0 - total).max(0.0);
        let tail_mean_defect = (mean - m1.value()).max(0.0);
        Ok(DiscreteLaw {
            family,
            pmf,
            cdf,
            mean,
            variance,
            tail_mass,
            tail_mean_defect,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// pmf at `i`; zero beyond the truncation point.
    pub fn pmf(&self, i: usize) -> f64 {
        self.pmf.get(i).copied().unwrap_or(0.0)
    }

    pub fn pmf_slice(&self) -> &[f64] {
        &self.pmf
    }

    /// Largest materialized support index.
    pub fn truncation(&self) -> usize {
        self.pmf.len() - 1
    }

    /// Upper bound on the mass dropped by truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Upper bound on the mean contribution of the dropped tail.
    pub fn tail_mean_defect(&self) -> f64 {
        self.tail_mean_defect
    }

    /// Exact (closed-form) mean of the untruncated law.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Exact (closed-form) variance of the untruncated law.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Pr{X >= k} from the materialized cdf.
    pub fn tail_prob(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else if k - 1 < self.cdf.len() {
            (1.0 - self.cdf[k - 1]).max(0.0)
        } else {
            self.tail_mass
        }
    }

    /// k-th falling factorial moment E[X (X-1) ... (X-k+1)] from the
    /// materialized pmf. Accurate up to the truncation defect.
    pub fn falling_factorial_moment(&self, k: usize) -> f64 {
        let mut acc = Kahan::default();
        for (i, &v) in self.pmf.iter().enumerate() {
            if i < k || v == 0.0 {
                continue;
            }
            let mut w = 1.0;
            for j in 0..k {
                w *= (i - j) as f64;
            }
            acc.add(w * v);
        }
        acc.value()
    }

    /// Draw by inversion on the materialized cdf. Consumes exactly one
    /// uniform variate per call for every family.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.pmf.len() - 1) as u64
    }

    /// Stop-loss transform E[(X - a)^+].
    ///
    /// Evaluated through E[X] - a + E[(a - X)^+]; the second term touches
    /// only atoms below `a`, so the value is exact up to the truncation
    /// defect regardless of how far the upper tail extends.
    pub fn stop_loss(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return self.mean - a;
        }
        let ub = (a.ceil() as usize).min(self.pmf.len());
        let mut below = Kahan::default();
        for i in 0..ub {
            let w = a - i as f64;
            if w > 0.0 {
                below.add(w * self.pmf[i]);
            }
        }
        (self.mean - a + below.value()).max(0.0)
    }
}

/// Build a pmf by a two-sided ratio recurrence anchored at the mode.
///
/// `ratio_up(i)` is pmf(i+1)/pmf(i). With `stop_by_mass` the support grows
/// until the accumulated mass reaches 1 - TAIL_TOL; otherwise it runs to
/// `support_hi`.
fn build_two_sided(
    anchor: usize,
    ln_anchor: f64,
    ratio_up: impl Fn(usize) -> f64,
    support_hi: Option<usize>,
    stop_by_mass: bool,
) -> Result<Vec<f64>> {
    let anchor_value = ln_anchor.exp();
    let mut below = vec![0.0; anchor];
    let mut v = anchor_value;
    for i in (0..anchor).rev() {
        let r = ratio_up(i);
        v = if r > 0.0 { v / r } else { 0.0 };
        below[i] = v;
    }
    let mut pmf = below;
    pmf.push(anchor_value);
    let mut mass = Kahan::default();
    for &x in &pmf {
        mass.add(x);
    }
    let mut i = anchor;
    let mut cur = anchor_value;
    loop {
        let done = match (stop_by_mass, support_hi) {
            (true, _) => {
                1.0 - mass.value() <= TAIL_TOL || (i > anchor && cur < TINY_TERM)
            }
            (false, Some(hi)) => i >= hi,
            (false, None) => unreachable!("finite support requires support_hi"),
        };
        if done {
            break;
        }
        cur *= ratio_up(i);
        i += 1;
        pmf.push(cur);
        mass.add(cur);
        if pmf.len() >= MAX_SUPPORT {
            return Err(Error::Budget(
                "law truncation exceeds the support cap".to_string(),
            ));
        }
    }
    Ok(pmf)
}

fn flatten_conv(a: &Family, b: &Family) -> Vec<Family> {
    let mut parts = Vec::new();
    for f in [a, b] {
        match f {
            Family::Convolution { parts: inner } => parts.extend(inner.iter().cloned()),
            other => parts.push(other.clone()),
        }
    }
    parts
}

/// Outcome of a stop-loss comparison over a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxVerdict {
    /// lo <=_cx hi certified on the grid (holds for equal laws too).
    Ordered,
    /// hi <=_cx lo certified on the grid.
    Reversed,
    /// Both directions are violated beyond tolerance and rigor slack.
    Crossed,
    /// Violations fall inside the numerical slack; no certificate.
    Inconclusive,
}

/// Comparison report: verdict plus the largest violation in each direction.
#[derive(Clone, Copy, Debug)]
pub struct CxComparison {
    pub verdict: CxVerdict,
    /// max over the grid of stop_loss(lo) - stop_loss(hi).
    pub max_excess_lo: f64,
    /// max over the grid of stop_loss(hi) - stop_loss(lo).
    pub max_excess_hi: f64,
    /// mean(lo) - mean(hi).
    pub mean_gap: f64,
    /// Rigorous bound on stop-loss evaluation error from truncation.
    pub rigor_slack: f64,
}

/// The pinned evaluation grid: all half-integers j/2 up to the larger
/// truncation point of the two laws. Stop-loss transforms of integer laws
/// are piecewise linear with integer knots, so pointwise inequality on
/// this grid certifies it on all of [0, truncation].
pub fn half_integer_grid(a: &DiscreteLaw, b: &DiscreteLaw) -> Vec<f64> {
    let hi = a.truncation().max(b.truncation());
    (0..=2 * hi).map(|j| j as f64 / 2.0).collect()
}

/// Certify convex order between two equal-mean laws by comparing stop-loss
/// transforms on `grid`.
///
/// Preconditions: equal means within `tol` (the comparison is meaningless
/// otherwise and an error naming both means is returned).
pub fn cx_compare(
    lo: &DiscreteLaw,
    hi: &DiscreteLaw,
    grid: &[f64],
    tol: f64,
) -> Result<CxComparison> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Parameter(format!(
            "cx tolerance must be non-negative, got {}",
            tol
        )));
    }
    let mean_gap = lo.mean() - hi.mean();
    if mean_gap.abs() > tol {
        return Err(Error::Precondition(format!(
            "convex order requires equal means: mean(lo) = {}, mean(hi) = {}, gap {} exceeds tol {}",
            lo.mean(),
            hi.mean(),
            mean_gap,
            tol
        )));
    }
    if grid.is_empty() {
        return Err(Error::Precondition(
            "cx comparison grid must be non-empty".to_string(),
        ));
    }
    let rigor_slack = lo.tail_mean_defect() + hi.tail_mean_defect() + 1e-13;
    let mut max_excess_lo = 0.0f64;
    let mut max_excess_hi = 0.0f64;
    for &a in grid {
        let d = lo.stop_loss(a) - hi.stop_loss(a);
        max_excess_lo = max_excess_lo.max(d);
        max_excess_hi = max_excess_hi.max(-d);
    }
    let verdict = if max_excess_lo <= tol {
        CxVerdict::Ordered
    } else if max_excess_hi <= tol {
        CxVerdict::Reversed
    } else if max_excess_lo > tol + rigor_slack && max_excess_hi > tol + rigor_slack {
        CxVerdict::Crossed
    } else {
        CxVerdict::Inconclusive
    };
    Ok(CxComparison {
        verdict,
        max_excess_lo,
        max_excess_hi,
        mean_gap,
        rigor_slack,
    })
}

/// Convenience wrapper using the pinned half-integer grid.
pub fn cx_compare_default(lo: &DiscreteLaw, hi: &DiscreteLaw, tol: f64) -> Result<CxComparison> {
    let grid = half_integer_grid(lo, hi);
    cx_compare(lo, hi, &grid, tol)
}

/// Check discrete convexity of `values[i]` over a contiguous integer range:
/// all second differences must be >= -SECOND_DIFF_TOL.
///
/// Needs at least three points; fewer is an error, not a trivial `true`.
pub fn second_difference_convex(values: &[f64]) -> Result<bool> {
    if values.len() < 3 {
        return Err(Error::Precondition(format!(
            "convexity check needs at least 3 points, got {}",
            values.len()
        )));
    }
    Ok(values
        .windows(3)
        .all(|w| w[0] + w[2] - 2.0 * w[1] >= -SECOND_DIFF_TOL))
}
