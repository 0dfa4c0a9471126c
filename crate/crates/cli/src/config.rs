//! Experiment configuration files.

use serde::Deserialize;

use cvmbqc_core::analysis::AmplitudeConvention;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub name: String,
    pub resource_squeezing_db: f64,
    #[serde(default)]
    pub amplitude_convention: AmplitudeConvention,
    pub input: InputSpec,
    pub gate: GateSpec,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputSpec>,
}

fn default_outputs() -> Vec<OutputSpec> {
    vec![OutputSpec::Report]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Vacuum,
    Coherent { amplitude_db: f64, phase: Phase },
}

/// Phase of a coherent input: `"x"`, `"p"` or an angle in degrees.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Phase {
    Named(NamedPhase),
    Degrees(f64),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedPhase {
    X,
    P,
}

impl Phase {
    pub fn degrees(self) -> f64 {
        match self {
            Phase::Named(NamedPhase::X) => 0.0,
            Phase::Named(NamedPhase::P) => 90.0,
            Phase::Degrees(d) => d,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateSpec {
    Fourier,
    XSqueeze {
        a_db: f64,
    },
    /// Row-major `[a, b, c, d]`.
    Custom {
        matrix: [f64; 4],
        #[serde(default)]
        objective: cvmbqc_core::NoiseObjective,
    },
    ExplicitAngles {
        degrees: [f64; 4],
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    #[default]
    Analytic,
    MonteCarlo {
        shots: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputSpec {
    Report,
    PhaseScan {
        #[serde(default = "default_scan_points")]
        n_points: usize,
    },
    RawOutcomes,
}

fn default_scan_points() -> usize {
    360
}

pub const PRESETS: [(&str, &str); 7] = [
    ("fourier_paper", include_str!("../../../presets/fourier_paper.toml")),
    ("fourier_vacuum", include_str!("../../../presets/fourier_vacuum.toml")),
    ("squeeze3_paper", include_str!("../../../presets/squeeze3_paper.toml")),
    ("squeeze6_paper", include_str!("../../../presets/squeeze6_paper.toml")),
    ("squeeze10_paper", include_str!("../../../presets/squeeze10_paper.toml")),
    ("squeeze10_vacuum", include_str!("../../../presets/squeeze10_vacuum.toml")),
    ("fourier_monte_carlo", include_str!("../../../presets/fourier_monte_carlo.toml")),
];

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(format!("unsupported schema {} (expected {SCHEMA_VERSION})", cfg.schema));
    }
    if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
        return Err(format!("name {:?} is not usable as a file stem", cfg.name));
    }
    if let ModeSpec::MonteCarlo { shots: 0, .. } = cfg.mode {
        return Err("monte_carlo needs shots >= 1".into());
    }
    if cfg.outputs.is_empty() {
        return Err("at least one output is required".into());
    }
    Ok(cfg)
}

/// Reads a config file, or a preset when `source` names one and no such file exists.
pub fn load(source: &str) -> Result<ExperimentConfig, String> {
    let path = std::path::Path::new(source);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{source}: {e}"))?;
        return parse(&text).map_err(|e| format!("{source}: {e}"));
    }
    match PRESETS.iter().find(|(name, _)| *name == source) {
        Some((name, text)) => parse(text).map_err(|e| format!("preset {name}: {e}")),
        None => Err(format!("{source}: no such file or preset")),
    }
}
