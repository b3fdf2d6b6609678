//! Experiment dispatch. Every run follows the same shape: load and
//! validate the config, apply flag overrides, execute, write artifacts
//! under the output directory, and finish with a manifest that hashes
//! every file written.

use crate::config::{Experiment, ExperimentConfig};
use crate::manifest::{record, write_manifest, OutputRecord};
use crate::plot::{emit_plot, Series};
use clap::Args;
use pplab_core::coverage::{
    ball_count_law, coverage_curve, crossing_detect, pmf_ratio_log_concave, TailCrossing,
};
use pplab_core::estimators::{classify_weak_mc, default_box_family, OverallVerdict};
use pplab_core::generators::{
    io::write_pattern, GeneratorSpec, PerturbationSpec, TranslationKernel, Window,
};
use pplab_core::kernels::{cx_compare_default, parse_law, CxVerdict, DiscreteLaw};
use pplab_core::percolation::{count_paths, path_count_bound, threshold_sweep, PathCaps};
use pplab_core::rng::rep_seed;
use pplab_core::spectral::{
    annuli_eigenvalues, ginibre_disk_eigenvalues, SpectralCountLaw, SpectralMode,
};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Eigenvalue tail cutoff for spectral runs.
const SPECTRAL_TAIL: f64 = 1e-12;
/// Default certification tolerance for cx-chain.
const CX_CHAIN_TOL: f64 = 1e-6;
/// Resolution threshold for empirical crossing directions.
const Z_RESOLVE: f64 = 3.0;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Experiment configuration file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the replication count.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Size of the worker pool (default: one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub enum Outcome {
    Done,
    /// The run finished but its statistical budget could not settle the
    /// question; exit code 3.
    Inconclusive(String),
}

pub fn execute(subcommand: Experiment, args: &RunArgs) -> Result<Outcome, String> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if config.experiment != subcommand {
        return Err(format!(
            "subcommand '{}' does not match config experiment '{}'",
            subcommand.name(),
            config.experiment.name()
        ));
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(r) = args.reps {
        config.reps = Some(r);
    }
    if let Some(t) = args.threads {
        config.threads = Some(t);
    }
    if let Some(o) = &args.out {
        config.out = Some(o.clone());
    }
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("threads: {}", e))?;
    }
    let out_dir = config
        .out
        .clone()
        .ok_or_else(|| "config field `out` is required (or pass --out DIR)".to_string())?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| format!("output directory {}: {}", out_dir.display(), e))?;

    let t0 = Instant::now();
    let (mut outputs, outcome) = match config.experiment {
        Experiment::Generate => run_generate(&config, &out_dir)?,
        Experiment::Classify => run_classify(&config, &out_dir)?,
        Experiment::CxChain => run_cx_chain(&config, &out_dir)?,
        Experiment::Spectral => run_spectral(&config, &out_dir)?,
        Experiment::PercolationSweep => run_perc_sweep(&config, &out_dir)?,
        Experiment::PathBound => run_path_bound(&config, &out_dir)?,
        Experiment::Coverage => run_coverage(&config, &out_dir)?,
        Experiment::Crossing => run_crossing(&config, &out_dir)?,
    };
    outputs.sort_by(|a, b| a.path.cmp(&b.path));
    write_manifest(&out_dir, &config, t0.elapsed().as_secs_f64(), &outputs)?;
    Ok(outcome)
}

fn core_err(e: pplab_core::Error) -> String {
    e.to_string()
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {}", path.display(), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| format!("{}: {}", path.display(), e))?;
    text.push('\n');
    write_text(path, &text)
}

type RunOutput = (Vec<OutputRecord>, Outcome);

fn run_generate(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let window = config.required_window()?;
    let generators = config.required_generators()?;
    let mut outputs = Vec::new();
    for (i, (label, spec)) in generators.iter().enumerate() {
        let pattern = spec
            .sample(&window, rep_seed(config.seed, i as u64))
            .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
        let csv = out_dir.join(format!("pattern_{}.csv", i + 1));
        write_pattern(&pattern, &csv).map_err(core_err)?;
        outputs.push(record(out_dir, &csv)?);
        outputs.push(record(out_dir, &csv.with_extension("json"))?);
    }
    Ok((outputs, Outcome::Done))
}

fn run_classify(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let window = config.required_window()?;
    let generators = config.required_generators()?;
    let reps = config.required_reps()?;
    let family = default_box_family(&window, config.seed).map_err(core_err)?;
    let mut outputs = Vec::new();
    let mut undecided = Vec::new();
    for (i, (label, spec)) in generators.iter().enumerate() {
        let verdict =
            classify_weak_mc(spec, &window, &family, reps, rep_seed(config.seed, i as u64))
                .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
        if verdict.overall == OverallVerdict::Inconclusive {
            undecided.push(label.clone());
        }
        let path = out_dir.join(format!("classify_{}.json", i + 1));
        write_json(
            &path,
            &json!({
                "generator": label,
                "reps": reps,
                "verdict": verdict,
            }),
        )?;
        outputs.push(record(out_dir, &path)?);
    }
    let outcome = if undecided.is_empty() {
        Outcome::Done
    } else {
        Outcome::Inconclusive(format!(
            "no side declared for {} at {} reps; raise reps",
            undecided.join(", "),
            reps
        ))
    };
    Ok((outputs, outcome))
}

fn run_cx_chain(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    if config.laws.len() < 2 {
        return Err("cx-chain needs at least two entries in `laws`".to_string());
    }
    let tol = config.tolerance.unwrap_or(CX_CHAIN_TOL);
    let laws: Vec<(String, DiscreteLaw)> = config
        .laws
        .iter()
        .map(|s| Ok((s.clone(), parse_law(s).map_err(core_err)?)))
        .collect::<Result<_, String>>()?;
    let mut pairs = Vec::new();
    let mut undecided = Vec::new();
    for w in laws.windows(2) {
        let cmp = cx_compare_default(&w[0].1, &w[1].1, tol).map_err(core_err)?;
        if cmp.verdict == CxVerdict::Inconclusive {
            undecided.push(format!("{} vs {}", w[0].0, w[1].0));
        }
        pairs.push(json!({
            "lo": w[0].0,
            "hi": w[1].0,
            "verdict": format!("{:?}", cmp.verdict),
            "max_excess_lo": cmp.max_excess_lo,
            "max_excess_hi": cmp.max_excess_hi,
            "mean_gap": cmp.mean_gap,
            "rigor_slack": cmp.rigor_slack,
        }));
    }
    let path = out_dir.join("chain.json");
    write_json(&path, &json!({ "tolerance": tol, "pairs": pairs }))?;
    let outputs = vec![record(out_dir, &path)?];
    let outcome = if undecided.is_empty() {
        Outcome::Done
    } else {
        Outcome::Inconclusive(format!(
            "certification inconclusive at tolerance {} for {}",
            tol,
            undecided.join("; ")
        ))
    };
    Ok((outputs, outcome))
}

fn law_summary(law: &DiscreteLaw) -> serde_json::Value {
    json!({
        "mean": law.mean(),
        "variance": law.variance(),
        "void_probability": law.pmf(0),
    })
}

fn run_spectral(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let radius = config.required_scalar("spectral_radius")?;
    let eig = ginibre_disk_eigenvalues(radius, SPECTRAL_TAIL).map_err(core_err)?;
    let mut csv = String::from("k,lambda\n");
    for (k, l) in eig.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k, l));
    }
    let eigen_path = out_dir.join("eigen.csv");
    write_text(&eigen_path, &csv)?;
    let mut outputs = vec![record(out_dir, &eigen_path)?];

    let sum: f64 = eig.iter().sum();
    let det = SpectralCountLaw::new(eig.clone(), SpectralMode::Determinantal).map_err(core_err)?;
    let perm = SpectralCountLaw::new(eig.clone(), SpectralMode::Permanental).map_err(core_err)?;
    let det_law = det.count_law().map_err(core_err)?;
    let perm_law = perm.count_law().map_err(core_err)?;
    let poisson = DiscreteLaw::poisson(sum).map_err(core_err)?;
    let json_path = out_dir.join("spectral.json");
    write_json(
        &json_path,
        &json!({
            "radius": radius,
            "eigenvalues": eig.len(),
            "eigenvalue_sum": sum,
            "determinantal": law_summary(&det_law),
            "poisson": law_summary(&poisson),
            "permanental": law_summary(&perm_law),
        }),
    )?;
    outputs.push(record(out_dir, &json_path)?);

    if let Some(bounds) = &config.annuli {
        let rows = annuli_eigenvalues(bounds, SPECTRAL_TAIL).map_err(core_err)?;
        let n_annuli = bounds.len().saturating_sub(1);
        let mut csv = String::from("k");
        for j in 1..=n_annuli {
            csv.push_str(&format!(",annulus_{}", j));
        }
        csv.push('\n');
        for (k, row) in rows.iter().enumerate() {
            csv.push_str(&k.to_string());
            for v in row {
                csv.push_str(&format!(",{}", v));
            }
            csv.push('\n');
        }
        let annuli_path = out_dir.join("annuli.csv");
        write_text(&annuli_path, &csv)?;
        outputs.push(record(out_dir, &annuli_path)?);
    }
    Ok((outputs, Outcome::Done))
}

fn run_perc_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let window = config.required_window()?;
    let generators = config.required_generators()?;
    let reps = config.required_reps()?;
    let radii = config
        .radii
        .clone()
        .ok_or_else(|| "config field `radii` is required for this experiment".to_string())?;
    let level = config.level.unwrap_or(0.5);
    let torus = config.torus.unwrap_or(false);

    let mut csv =
        String::from("generator,r,rep_count,f1_mean,f1_se,f2_mean,f2_se\n");
    let mut crossings = Vec::new();
    let mut series = Vec::new();
    for (label, spec) in &generators {
        // One base seed for every generator: common random numbers for
        // the curve comparison.
        let sweep = threshold_sweep(spec, &window, &radii, reps, config.seed, level, torus)
            .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
        for i in 0..radii.len() {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                label,
                radii[i],
                reps,
                sweep.f1_mean[i],
                sweep.f1_se[i],
                sweep.f2_mean[i],
                sweep.f2_se[i]
            ));
        }
        crossings.push(json!({
            "generator": label,
            "level": level,
            "crossing": sweep.crossing,
            "ci_lo": sweep.crossing_ci.as_ref().map(|c| c.lo),
            "ci_hi": sweep.crossing_ci.as_ref().and_then(|c| c.hi),
        }));
        series.push(Series {
            label: label.clone(),
            points: (0..radii.len())
                .map(|i| (radii[i], sweep.f1_mean[i], sweep.f1_se[i]))
                .collect(),
        });
    }
    let csv_path = out_dir.join("sweep.csv");
    write_text(&csv_path, &csv)?;
    let json_path = out_dir.join("sweep.json");
    write_json(&json_path, &json!({ "crossings": crossings }))?;
    let svg_path = out_dir.join("sweep.svg");
    emit_plot(&series, "largest component fraction vs r", &svg_path)?;
    let outputs = vec![
        record(out_dir, &csv_path)?,
        record(out_dir, &json_path)?,
        record(out_dir, &svg_path)?,
    ];
    Ok((outputs, Outcome::Done))
}

fn run_path_bound(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let dim = config
        .dim
        .ok_or_else(|| "config field `dim` is required for this experiment".to_string())?;
    let r = config.required_scalar("r")?;
    let m = config.required_scalar("m")?;
    let intensity = config.required_scalar("intensity")?;
    let report = path_count_bound(dim, r, m, intensity).map_err(core_err)?;
    let mut doc = json!({
        "dim": dim,
        "r": r,
        "m": m,
        "intensity": intensity,
        "theta": report.theta,
        "ratio": report.ratio,
        "m_r": report.m_r,
        "bound": report.bound,
    });

    if !config.generators.is_empty() {
        let window = config.required_window()?;
        if window.dim() != dim {
            return Err(format!(
                "config `dim` is {} but the window has dimension {}",
                dim,
                window.dim()
            ));
        }
        let generators = config.required_generators()?;
        let reps = config.required_reps()?;
        let caps = PathCaps::default();
        let mut empirical = Vec::new();
        for (i, (label, spec)) in generators.iter().enumerate() {
            let mut total = 0u64;
            let mut capped = 0u64;
            for rep in 0..reps {
                let pattern = spec
                    .sample(&window, rep_seed(rep_seed(config.seed, i as u64), rep))
                    .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
                let out = count_paths(&pattern, r, &caps)
                    .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
                total += out.total;
                capped += u64::from(out.cap_hit);
            }
            empirical.push(json!({
                "generator": label,
                "reps": reps,
                "mean_total": total as f64 / reps as f64,
                "capped_reps": capped,
            }));
        }
        doc["empirical"] = json!(empirical);
    }
    let path = out_dir.join("path_bound.json");
    write_json(&path, &doc)?;
    Ok((vec![record(out_dir, &path)?], Outcome::Done))
}

fn coverage_csv(curve: &pplab_core::coverage::CoverageCurve) -> String {
    let mut csv = String::from("k,frac_geometric,se_g,frac_countlaw,se_c\n");
    for i in 0..curve.ks.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            curve.ks[i],
            curve.frac_geometric[i],
            curve.se_geometric[i],
            curve.frac_countlaw[i],
            curve.se_countlaw[i]
        ));
    }
    csv
}

fn coverage_inputs(
    config: &ExperimentConfig,
) -> Result<(Window, Vec<(String, GeneratorSpec)>, f64, u64, usize, u64), String> {
    let window = config.required_window()?;
    let generators = config.required_generators()?;
    let r = config.required_scalar("r")?;
    let k_max = config
        .k_max
        .ok_or_else(|| "config field `k_max` is required for this experiment".to_string())?;
    let probes = config.probes_per_axis.unwrap_or(128);
    let reps = config.required_reps()?;
    Ok((window, generators, r, k_max, probes, reps))
}

fn run_coverage(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let (window, generators, r, k_max, probes, reps) = coverage_inputs(config)?;
    let mut outputs = Vec::new();
    let mut series = Vec::new();
    for (i, (label, spec)) in generators.iter().enumerate() {
        let curve = coverage_curve(spec, &window, r, k_max, probes, reps, config.seed)
            .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
        let path = out_dir.join(format!("coverage_{}.csv", i + 1));
        write_text(&path, &coverage_csv(&curve))?;
        outputs.push(record(out_dir, &path)?);
        series.push(Series {
            label: label.clone(),
            points: (0..curve.ks.len())
                .map(|j| {
                    (
                        curve.ks[j] as f64,
                        curve.frac_geometric[j],
                        curve.se_geometric[j],
                    )
                })
                .collect(),
        });
    }
    let svg_path = out_dir.join("coverage.svg");
    emit_plot(&series, "k-coverage fraction", &svg_path)?;
    outputs.push(record(out_dir, &svg_path)?);
    Ok((outputs, Outcome::Done))
}

/// The exact ball-count laws behind a crossing run, available when both
/// generators are unit-cell lattices in the plane.
fn exact_crossing(
    specs: &[(String, GeneratorSpec)],
    window: &Window,
    r: f64,
) -> Result<serde_json::Value, String> {
    let lattice_kernel = |spec: &GeneratorSpec| -> Option<(f64, DiscreteLaw)> {
        match spec {
            GeneratorSpec::PerturbedLattice {
                spacing,
                perturbation:
                    PerturbationSpec {
                        replication,
                        translation: TranslationKernel::UniformCell,
                    },
            } => Some((*spacing, replication.clone())),
            _ => None,
        }
    };
    let (a, b) = (&specs[0].1, &specs[1].1);
    let center = window.center();
    let (sa, la) = match lattice_kernel(a) {
        Some(v) => v,
        None => return Ok(json!({ "available": false })),
    };
    let (sb, lb) = match lattice_kernel(b) {
        Some(v) => v,
        None => return Ok(json!({ "available": false })),
    };
    if window.dim() != 2 {
        return Ok(json!({ "available": false }));
    }
    let c = [center[0], center[1]];
    let law_a = ball_count_law(&la, sa, r, c).map_err(core_err)?;
    let law_b = ball_count_law(&lb, sb, r, c).map_err(core_err)?;
    let (verdict, k0) = match crossing_detect(&law_a, &law_b) {
        TailCrossing::NoCrossing => ("none", None),
        TailCrossing::SingleCrossing { k0 } => ("single", Some(k0)),
        TailCrossing::MultipleCrossings => ("multiple", None),
    };
    let ratio = pmf_ratio_log_concave(&law_a, &law_b);
    let ratio_json = match ratio {
        Ok(rep) => json!({
            "log_concave": rep.log_concave,
            "worst_second_difference": rep.worst_second_difference,
            "support_lo": rep.lo,
            "support_hi": rep.hi,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(json!({
        "available": true,
        "center": center,
        "verdict": verdict,
        "k0": k0,
        "pmf_ratio": ratio_json,
    }))
}

fn run_crossing(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, String> {
    let (window, generators, r, k_max, probes, reps) = coverage_inputs(config)?;
    if generators.len() != 2 {
        return Err(format!(
            "crossing compares exactly 2 generators, got {}",
            generators.len()
        ));
    }
    let mut curves = Vec::new();
    let mut outputs = Vec::new();
    for (i, (label, spec)) in generators.iter().enumerate() {
        let curve = coverage_curve(spec, &window, r, k_max, probes, reps, config.seed)
            .map_err(|e| format!("generator '{}': {}", label, core_err(e)))?;
        let path = out_dir.join(format!("coverage_{}.csv", i + 1));
        write_text(&path, &coverage_csv(&curve))?;
        outputs.push(record(out_dir, &path)?);
        curves.push(curve);
    }

    // Resolved sign per k of curve_1 - curve_2 on the geometric route.
    let mut z_scores = Vec::new();
    let mut directions = Vec::new();
    let mut resolved: Vec<(u64, i8)> = Vec::new();
    for i in 0..curves[0].ks.len() {
        let gap = curves[0].frac_geometric[i] - curves[1].frac_geometric[i];
        let se = (curves[0].se_geometric[i].powi(2) + curves[1].se_geometric[i].powi(2)).sqrt();
        let z = if se > 0.0 {
            gap / se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(gap)
        };
        z_scores.push(z);
        let dir = if z >= Z_RESOLVE {
            1i8
        } else if z <= -Z_RESOLVE {
            -1
        } else {
            0
        };
        directions.push(dir);
        if dir != 0 {
            resolved.push((curves[0].ks[i], dir));
        }
    }
    let changes = resolved.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let k0 = if changes >= 1 {
        let flip = resolved
            .windows(2)
            .position(|w| w[0].1 != w[1].1)
            .expect("a sign change exists");
        Some(resolved[flip].0)
    } else {
        None
    };

    let exact = exact_crossing(&generators, &window, r)?;
    let path = out_dir.join("crossing.json");
    write_json(
        &path,
        &json!({
            "k0": k0,
            "directions": directions,
            "z_scores": z_scores,
            "crossings": changes,
            "multiple_crossings": changes > 1,
            "exact": exact,
        }),
    )?;
    outputs.push(record(out_dir, &path)?);
    let outcome = if changes == 0 {
        Outcome::Inconclusive(format!(
            "no resolved sign change across k = 1..{} at {} reps; raise reps",
            k_max, reps
        ))
    } else {
        Outcome::Done
    };
    Ok((outputs, outcome))
}
