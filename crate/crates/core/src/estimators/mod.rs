//! Monte Carlo estimators for void probabilities and product moments, and
//! the weak sub/super-Poisson classifier.
//!
//! A process is weakly sub-Poisson when its void probabilities fall below
//! the Poisson benchmark exp(-E N(B)) and its off-diagonal product moments
//! fall below the product of means; weakly super-Poisson when both point
//! the other way. The classifier estimates both functionals on a family of
//! test boxes and declares a side only at |z| >= 3; conflicting declared
//! sides yield `Neither`, which is exactly what the permutation
//! counterexample exhibits.
//!
//! Every estimator draws its replicates from independent keyed streams, so
//! benchmark quantities (means) and tested quantities (voids, moments) are
//! statistically independent and their standard errors combine by squares.

use crate::error::{Error, Result};
use crate::generators::{
    counterexample_mean, counterexample_pair_moment, counterexample_triple_moment,
    counterexample_void, GeneratorSpec, Window,
};
use crate::kernels::DiscreteLaw;
use crate::rng::{mix_all, rep_seed, salt, stream};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Declaration threshold in standard errors.
pub const Z_DECLARE: f64 = 3.0;

/// Relative tolerance for the exact (closed-form) classification paths.
pub const EXACT_REL_TOL: f64 = 1e-9;

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
    pub estimand: String,
}

/// Which side of the Poisson benchmark a functional falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Sub,
    Super,
    Inconclusive,
}

/// A side declaration with its z-score. In Monte Carlo paths z is the
/// usual standardized gap; in exact paths it is the certified gap in units
/// of the numerical tolerance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SideCall {
    pub side: Side,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OverallVerdict {
    WeaklySub,
    WeaklySuper,
    /// Declared sides conflict: not weakly sub- nor super-Poisson.
    Neither,
    Inconclusive,
}

/// Classifier output: the void call, product-moment calls by order, and
/// the aggregate verdict.
#[derive(Clone, Debug, Serialize)]
pub struct WeakClassVerdict {
    pub void: SideCall,
    pub moments: Vec<(usize, SideCall)>,
    pub overall: OverallVerdict,
}

fn side_of(z: f64) -> Side {
    if z >= Z_DECLARE {
        Side::Super
    } else if z <= -Z_DECLARE {
        Side::Sub
    } else {
        Side::Inconclusive
    }
}

fn aggregate(calls: impl Iterator<Item = Side>) -> OverallVerdict {
    let mut sub = false;
    let mut sup = false;
    for c in calls {
        match c {
            Side::Sub => sub = true,
            Side::Super => sup = true,
            Side::Inconclusive => {}
        }
    }
    match (sub, sup) {
        (true, true) => OverallVerdict::Neither,
        (true, false) => OverallVerdict::WeaklySub,
        (false, true) => OverallVerdict::WeaklySuper,
        (false, false) => OverallVerdict::Inconclusive,
    }
}

/// Run `reps` independent replicates in parallel; the result order and
/// content are independent of the thread count because every replicate is
/// keyed by its index and the fold happens after an ordered collect.
fn par_reps<T: Send>(
    reps: u64,
    seed: u64,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if reps < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 replicates, got {}",
            reps
        )));
    }
    (0..reps)
        .into_par_iter()
        .map(|rep| f(rep_seed(seed, rep)))
        .collect()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let se = (ss / (n - 1.0)).sqrt() / n.sqrt();
    (mean, se)
}

fn check_box_in_window(window: &Window, b: &Window) -> Result<()> {
    if b.dim() != window.dim() {
        return Err(Error::Dimension {
            expected: window.dim(),
            got: b.dim(),
        });
    }
    let inside = b
        .lower()
        .iter()
        .zip(b.upper())
        .zip(window.lower().iter().zip(window.upper()))
        .all(|((bl, bu), (wl, wu))| wl <= bl && bu <= wu);
    if !inside {
        return Err(Error::Precondition(format!(
            "test box [{:?}, {:?}) is not contained in the sampling window",
            b.lower(),
            b.upper()
        )));
    }
    Ok(())
}

fn boxes_overlap(a: &Window, b: &Window) -> bool {
    a.lower()
        .iter()
        .zip(a.upper())
        .zip(b.lower().iter().zip(b.upper()))
        .all(|((al, au), (bl, bu))| al < bu && bl < au)
}

/// Mean count in `b` under `spec`, sampled on `window`.
pub fn estimate_mean_count(
    spec: &GeneratorSpec,
    window: &Window,
    b: &Window,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI> {
    check_box_in_window(window, b)?;
    let run_seed = mix_all(seed, &[salt::MEAN_RUN]);
    let counts = par_reps(reps, run_seed, |s| {
        Ok(spec.sample(window, s)?.count_in(b)? as f64)
    })?;
    let (value, std_error) = mean_and_se(&counts);
    Ok(EstimateWithCI {
        value,
        std_error,
        reps,
        seed,
        estimand: format!("mean count in box of volume {}", b.volume()),
    })
}

/// Void probability of `b` under `spec`.
pub fn estimate_void(
    spec: &GeneratorSpec,
    window: &Window,
    b: &Window,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI> {
    check_box_in_window(window, b)?;
    let run_seed = mix_all(seed, &[salt::VOID_RUN]);
    let hits = par_reps(reps, run_seed, |s| {
        Ok(f64::from(spec.sample(window, s)?.count_in(b)? == 0))
    })?;
    let (value, std_error) = mean_and_se(&hits);
    Ok(EstimateWithCI {
        value,
        std_error,
        reps,
        seed,
        estimand: format!("void probability of box of volume {}", b.volume()),
    })
}

/// Product moment E[N(B_1) ... N(B_k)] over pairwise disjoint boxes.
pub fn estimate_factorial_moment(
    spec: &GeneratorSpec,
    window: &Window,
    boxes: &[Window],
    reps: u64,
    seed: u64,
) -> Result<EstimateWithCI> {
    if boxes.len() < 2 {
        return Err(Error::Precondition(format!(
            "product moment needs at least 2 boxes, got {}",
            boxes.len()
        )));
    }
    for b in boxes {
        check_box_in_window(window, b)?;
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes_overlap(&boxes[i], &boxes[j]) {
                return Err(Error::Precondition(format!(
                    "boxes {} and {} overlap; the product-moment comparison needs disjoint boxes",
                    i, j
                )));
            }
        }
    }
    let run_seed = mix_all(seed, &[salt::MOMENT_RUN]);
    let products = par_reps(reps, run_seed, |s| {
        let p = spec.sample(window, s)?;
        let mut prod = 1.0;
        for b in boxes {
            prod *= p.count_in(b)? as f64;
        }
        Ok(prod)
    })?;
    let (value, std_error) = mean_and_se(&products);
    Ok(EstimateWithCI {
        value,
        std_error,
        reps,
        seed,
        estimand: format!("order-{} product moment over disjoint boxes", boxes.len()),
    })
}

/// Test boxes for the classifier: groups of pairwise disjoint equal-size
/// cubes.
#[derive(Clone, Debug)]
pub struct BoxFamily {
    pub groups: Vec<Vec<Window>>,
}

/// The default family: three disjoint cubes for each side in
/// {0.5, 1, 2}, placed at seeded random offsets in disjoint strips along
/// the first axis. The window must span at least 3 * side on axis 0 and
/// at least side elsewhere.
pub fn default_box_family(window: &Window, seed: u64) -> Result<BoxFamily> {
    let dim = window.dim();
    let mut rng = stream(mix_all(seed, &[salt::BOX_FAMILY]));
    let mut groups = Vec::new();
    for &side in &[0.5f64, 1.0, 2.0] {
        if window.side(0) < 3.0 * side
            || (1..dim).any(|a| window.side(a) < side)
        {
            return Err(Error::Precondition(format!(
                "window cannot hold 3 disjoint cubes of side {}: needs {} along axis 0 and {} elsewhere",
                side,
                3.0 * side,
                side
            )));
        }
        let strip = window.side(0) / 3.0;
        let mut cubes = Vec::new();
        for j in 0..3 {
            let strip_lo = window.lower()[0] + j as f64 * strip;
            let x0 = strip_lo + rng.random::<f64>() * (strip - side);
            let mut lo = vec![0.0; dim];
            let mut up = vec![0.0; dim];
            lo[0] = x0;
            up[0] = x0 + side;
            for a in 1..dim {
                let xa = window.lower()[a] + rng.random::<f64>() * (window.side(a) - side);
                lo[a] = xa;
                up[a] = xa + side;
            }
            cubes.push(Window::new(lo, up)?);
        }
        groups.push(cubes);
    }
    Ok(BoxFamily { groups })
}

/// Monte Carlo weak-class verdict for a generator over a box family.
///
/// For each group: the void of the first box is tested against
/// exp(-estimated mean), the order-2 moment over the first two boxes and
/// the order-3 moment over all three against the product of independently
/// estimated means. Per functional the most significant group is reported.
pub fn classify_weak_mc(
    spec: &GeneratorSpec,
    window: &Window,
    family: &BoxFamily,
    reps: u64,
    seed: u64,
) -> Result<WeakClassVerdict> {
    if family.groups.is_empty() {
        return Err(Error::Precondition("box family is empty".to_string()));
    }
    let mut best_void: Option<SideCall> = None;
    let mut best_m2: Option<SideCall> = None;
    let mut best_m3: Option<SideCall> = None;
    for (g, cubes) in family.groups.iter().enumerate() {
        if cubes.len() < 3 {
            return Err(Error::Precondition(format!(
                "box group {} has {} cubes, need 3",
                g,
                cubes.len()
            )));
        }
        let gseed = mix_all(seed, &[g as u64 + 1]);
        // Independent means per box (the benchmark side).
        let means: Vec<EstimateWithCI> = cubes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                estimate_mean_count(spec, window, b, reps, mix_all(gseed, &[i as u64]))
            })
            .collect::<Result<_>>()?;

        // Void z against exp(-mean).
        let void = estimate_void(spec, window, &cubes[0], reps, gseed)?;
        let bench = (-means[0].value).exp();
        let bench_se = bench * means[0].std_error;
        let denom = (void.std_error.powi(2) + bench_se.powi(2)).sqrt();
        let z = if denom > 0.0 {
            (void.value - bench) / denom
        } else {
            0.0
        };
        let call = SideCall { side: side_of(z), z };
        if best_void.map_or(true, |b| z.abs() > b.z.abs()) {
            best_void = Some(call);
        }

        // Product moments of orders 2 and 3.
        for (order, slot) in [(2usize, &mut best_m2), (3usize, &mut best_m3)] {
            let boxes = &cubes[..order];
            let moment = estimate_factorial_moment(spec, window, boxes, reps, gseed)?;
            let mut bench = 1.0;
            let mut bench_var = 0.0;
            for m in &means[..order] {
                bench *= m.value;
            }
            for m in &means[..order] {
                if m.value != 0.0 {
                    bench_var += (bench / m.value * m.std_error).powi(2);
                } else {
                    let others: f64 = means[..order]
                        .iter()
                        .filter(|o| !std::ptr::eq(*o, m))
                        .map(|o| o.value)
                        .product();
                    bench_var += (others * m.std_error).powi(2);
                }
            }
            let denom = (moment.std_error.powi(2) + bench_var).sqrt();
            let z = if denom > 0.0 {
                (moment.value - bench) / denom
            } else {
                0.0
            };
            let call = SideCall { side: side_of(z), z };
            if slot.map_or(true, |b: SideCall| z.abs() > b.z.abs()) {
                *slot = Some(call);
            }
        }
    }
    let void = best_void.expect("at least one group");
    let m2 = best_m2.expect("at least one group");
    let m3 = best_m3.expect("at least one group");
    let overall = aggregate([void.side, m2.side, m3.side].into_iter());
    Ok(WeakClassVerdict {
        void,
        moments: vec![(2, m2), (3, m3)],
        overall,
    })
}

/// Exact weak-class verdict for a count law: pmf(0) against exp(-mean) and
/// falling factorial moments against powers of the mean. A Poisson law
/// lands within tolerance everywhere and comes back `Inconclusive`.
pub fn classify_weak_count_law(law: &DiscreteLaw) -> Result<WeakClassVerdict> {
    let mean = law.mean();
    if mean <= 0.0 {
        return Err(Error::Precondition(format!(
            "count-law classification needs a positive mean, got {}",
            mean
        )));
    }
    let call = |value: f64, bench: f64| -> SideCall {
        let scale = bench.abs().max(1e-300);
        let z = (value - bench) / (EXACT_REL_TOL * scale);
        SideCall { side: side_of(z), z }
    };
    let void = call(law.pmf(0), (-mean).exp());
    let m2 = call(law.falling_factorial_moment(2), mean * mean);
    let m3 = call(law.falling_factorial_moment(3), mean * mean * mean);
    let overall = aggregate([void.side, m2.side, m3.side].into_iter());
    Ok(WeakClassVerdict {
        void,
        moments: vec![(2, m2), (3, m3)],
        overall,
    })
}

/// Exact weak-class verdict for the k-cell permutation counterexample.
/// The void probability 1/k dwarfs exp(-(k-1)/2) (super side) while the
/// distinct-cell product moments fall below the corresponding power of the
/// mean (sub side), so the aggregate is `Neither`.
pub fn classify_weak_counterexample(k: usize) -> Result<WeakClassVerdict> {
    if k < 3 {
        return Err(Error::Parameter(format!(
            "counterexample classification needs k >= 3, got {}",
            k
        )));
    }
    let mean = counterexample_mean(k);
    let call = |value: f64, bench: f64| -> SideCall {
        let scale = bench.abs().max(1e-300);
        let z = (value - bench) / (EXACT_REL_TOL * scale);
        SideCall { side: side_of(z), z }
    };
    let void = call(counterexample_void(k), (-mean).exp());
    let m2 = call(counterexample_pair_moment(k), mean * mean);
    let m3 = call(counterexample_triple_moment(k), mean * mean * mean);
    let overall = aggregate([void.side, m2.side, m3.side].into_iter());
    Ok(WeakClassVerdict {
        void,
        moments: vec![(2, m2), (3, m3)],
        overall,
    })
}
