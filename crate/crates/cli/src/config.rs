//! Declarative experiment configuration. Each run reads one JSON file;
//! the subcommand must agree with the `experiment` field, and the
//! `--seed`, `--reps`, `--threads`, `--out` flags override the
//! corresponding fields. The seed is mandatory: there is no wall-clock
//! fallback, so every run is replayable from its config alone.

use pplab_core::generators::{GeneratorSpec, TranslationKernel, Window};
use pplab_core::kernels::parse_law;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Generate,
    Classify,
    CxChain,
    Spectral,
    PercolationSweep,
    PathBound,
    Coverage,
    Crossing,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Generate => "generate",
            Experiment::Classify => "classify",
            Experiment::CxChain => "cx-chain",
            Experiment::Spectral => "spectral",
            Experiment::PercolationSweep => "percolation-sweep",
            Experiment::PathBound => "path-bound",
            Experiment::Coverage => "coverage",
            Experiment::Crossing => "crossing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl WindowSpec {
    pub fn to_window(&self) -> Result<Window, String> {
        Window::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| format!("window: {}", e))
    }
}

/// One experiment, fully described. Optional fields belong to specific
/// experiments; the dispatcher reports exactly which field a run is
/// missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Generator expressions, e.g. `poisson(1.0)` or
    /// `lattice(1.0; bin(2,0.5); cell)`.
    #[serde(default)]
    pub generators: Vec<String>,
    pub window: Option<WindowSpec>,
    /// Law expressions for cx-chain, e.g. `poi(1)`.
    #[serde(default)]
    pub laws: Vec<String>,
    /// Radius grid for percolation sweeps.
    pub radii: Option<Vec<f64>>,
    /// Largest-component level whose crossing radius is estimated.
    pub level: Option<f64>,
    pub torus: Option<bool>,
    /// Ball radius for coverage, crossing, and path-bound runs.
    pub r: Option<f64>,
    pub k_max: Option<u64>,
    pub probes_per_axis: Option<usize>,
    /// Half-width of the centered box for path-bound runs.
    pub m: Option<f64>,
    pub dim: Option<usize>,
    pub intensity: Option<f64>,
    /// Ginibre disk radius for spectral runs.
    pub spectral_radius: Option<f64>,
    /// Annulus boundaries (including the inner edge) for spectral runs.
    pub annuli: Option<Vec<f64>>,
    /// Certification tolerance for cx-chain; default 1e-6.
    pub tolerance: Option<f64>,
    pub reps: Option<u64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("config {}: {}", path.display(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| format!("config {}: {}", path.display(), e))
    }

    pub fn required_window(&self) -> Result<Window, String> {
        self.window
            .as_ref()
            .ok_or_else(|| missing("window"))?
            .to_window()
    }

    pub fn required_reps(&self) -> Result<u64, String> {
        self.reps.ok_or_else(|| missing("reps"))
    }

    pub fn required_generators(&self) -> Result<Vec<(String, GeneratorSpec)>, String> {
        if self.generators.is_empty() {
            return Err(missing("generators"));
        }
        self.generators
            .iter()
            .map(|g| Ok((g.clone(), parse_generator(g)?)))
            .collect()
    }

    pub fn required_scalar(&self, field: &str) -> Result<f64, String> {
        let v = match field {
            "r" => self.r,
            "m" => self.m,
            "intensity" => self.intensity,
            "spectral_radius" => self.spectral_radius,
            _ => unreachable!("unknown scalar field {}", field),
        };
        v.ok_or_else(|| missing(field))
    }
}

fn missing(field: &str) -> String {
    format!("config field `{}` is required for this experiment", field)
}

/// Split at top-level semicolons; parentheses nest, semicolons inside
/// argument lists never occur in the grammar.
fn split_parts(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ';' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

fn parse_translation(s: &str) -> Result<TranslationKernel, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("cell") {
        return Ok(TranslationKernel::UniformCell);
    }
    let open = t
        .find('(')
        .ok_or_else(|| format!("translation '{}': expected cell, ball(R), or gauss(sigma[,R])", t))?;
    if !t.ends_with(')') {
        return Err(format!("translation '{}': missing closing parenthesis", t));
    }
    let name = t[..open].trim().to_ascii_lowercase();
    let args: Vec<f64> = t[open + 1..t.len() - 1]
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| format!("translation '{}': argument '{}' is not a number", t, a.trim()))
        })
        .collect::<Result<_, _>>()?;
    match (name.as_str(), args.len()) {
        ("ball", 1) => Ok(TranslationKernel::UniformBall { radius: args[0] }),
        ("gauss", 1) => Ok(TranslationKernel::Gaussian {
            sigma: args[0],
            truncation_radius: 4.0 * args[0],
        }),
        ("gauss", 2) => Ok(TranslationKernel::Gaussian {
            sigma: args[0],
            truncation_radius: args[1],
        }),
        _ => Err(format!(
            "translation '{}': expected cell, ball(R), or gauss(sigma[,R])",
            t
        )),
    }
}

/// Generator grammar: `poisson(intensity)`,
/// `lattice(spacing; law; translation)`,
/// `cluster(intensity; law; translation)`.
pub fn parse_generator(input: &str) -> Result<GeneratorSpec, String> {
    let s = input.trim();
    let open = s
        .find('(')
        .ok_or_else(|| format!("generator '{}': missing argument list", s))?;
    if !s.ends_with(')') {
        return Err(format!("generator '{}': missing closing parenthesis", s));
    }
    let name = s[..open].trim().to_ascii_lowercase();
    let body = &s[open + 1..s.len() - 1];
    match name.as_str() {
        "poisson" => {
            let intensity = body.trim().parse::<f64>().map_err(|_| {
                format!("generator '{}': intensity '{}' is not a number", s, body.trim())
            })?;
            GeneratorSpec::poisson(intensity).map_err(|e| format!("generator '{}': {}", s, e))
        }
        "lattice" | "cluster" => {
            let parts = split_parts(body);
            if parts.len() != 3 {
                return Err(format!(
                    "generator '{}': expected {}(scale; law; translation), got {} part(s)",
                    s,
                    name,
                    parts.len()
                ));
            }
            let scale = parts[0].parse::<f64>().map_err(|_| {
                format!("generator '{}': scale '{}' is not a number", s, parts[0])
            })?;
            let law = parse_law(parts[1]).map_err(|e| format!("generator '{}': {}", s, e))?;
            let translation = parse_translation(parts[2])
                .map_err(|e| format!("generator '{}': {}", s, e))?;
            let built = if name == "lattice" {
                GeneratorSpec::perturbed_lattice(scale, law, translation)
            } else {
                GeneratorSpec::perturbed_poisson(scale, law, translation)
            };
            built.map_err(|e| format!("generator '{}': {}", s, e))
        }
        other => Err(format!(
            "generator '{}': unknown family '{}'; expected poisson, lattice, or cluster",
            s, other
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            experiment: Experiment::PercolationSweep,
            generators: vec!["poisson(1.0)".into(), "lattice(1; bin(1,1); cell)".into()],
            window: Some(WindowSpec {
                lower: vec![0.0, 0.0],
                upper: vec![10.0, 10.0],
            }),
            laws: Vec::new(),
            radii: Some(vec![0.4, 0.5, 0.6]),
            level: Some(0.5),
            torus: None,
            r: None,
            k_max: None,
            probes_per_axis: None,
            m: None,
            dim: None,
            intensity: None,
            spectral_radius: None,
            annuli: None,
            tolerance: None,
            reps: Some(20),
            seed: 7,
            out: Some(PathBuf::from("out")),
            threads: None,
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = base_config();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn seed_has_no_default() {
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"experiment": "generate", "generators": ["poisson(1)"]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("seed"), "{}", err);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"experiment": "generate", "seed": 1, "grains": 3}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("grains"), "{}", err);
    }

    #[test]
    fn experiment_names_are_kebab_case() {
        for (e, name) in [
            (Experiment::CxChain, "\"cx-chain\""),
            (Experiment::PercolationSweep, "\"percolation-sweep\""),
            (Experiment::PathBound, "\"path-bound\""),
        ] {
            assert_eq!(serde_json::to_string(&e).unwrap(), name);
        }
    }

    #[test]
    fn generator_grammar_accepts_the_three_families() {
        assert!(matches!(
            parse_generator("poisson(1.5)").unwrap(),
            GeneratorSpec::Poisson { .. }
        ));
        assert!(matches!(
            parse_generator("lattice(1.0; bin(2,0.5); cell)").unwrap(),
            GeneratorSpec::PerturbedLattice { .. }
        ));
        assert!(matches!(
            parse_generator("cluster(0.5; geo(0.5); ball(0.25))").unwrap(),
            GeneratorSpec::PerturbedPoisson { .. }
        ));
        // Nested commas in the law survive the semicolon split, and
        // gauss defaults its truncation radius.
        let g = parse_generator("lattice(2.0; hgeo(12,6,2); gauss(0.3))").unwrap();
        match g {
            GeneratorSpec::PerturbedLattice { perturbation, .. } => match perturbation.translation
            {
                TranslationKernel::Gaussian {
                    sigma,
                    truncation_radius,
                } => {
                    assert_eq!(sigma, 0.3);
                    assert_eq!(truncation_radius, 1.2);
                }
                other => panic!("wrong translation {:?}", other),
            },
            other => panic!("wrong generator {:?}", other),
        }
    }

    #[test]
    fn generator_errors_name_the_offending_piece() {
        let cases = [
            ("latice(1.0)", "latice"),
            ("poisson(fast)", "fast"),
            ("lattice(1.0; bin(2,0.5))", "2 part(s)"),
            ("lattice(1.0; weird(2); cell)", "weird"),
            ("lattice(1.0; bin(2,0.5); wedge(1))", "wedge"),
            ("cluster(0.5; geo(0.5); cell)", "cell"),
        ];
        for (input, needle) in cases {
            let err = parse_generator(input).unwrap_err();
            assert!(err.contains(needle), "'{}' missing '{}': {}", input, needle, err);
        }
    }
}
