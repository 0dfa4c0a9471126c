#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiment;
mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cvmbqc_core::analysis::{
    max_steps_at_fidelity, max_steps_at_output_squeezing, nstep_fidelity, squeezing_db_to_r,
};
use cvmbqc_core::engine::excess_noise_coefficients;
use cvmbqc_core::{excess_noise, heisenberg_model, run_analytic, NoiseObjective};

use config::{ExperimentConfig, GateSpec, InputSpec, OutputSpec, Phase};
use format::{r12, r12_matrix};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(cvmbqc_core::Error),
    Io(String),
}

impl From<cvmbqc_core::Error> for CliError {
    fn from(e: cvmbqc_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use cvmbqc_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::InvalidArgument(_)) => 1,
            CliError::Core(E::SingularSchedule(_)) => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "cvmbqc", version, about = "One-way computation on a four-mode cluster")]
struct Cli {
    /// Directory for report files.
    #[arg(long, global = true, env = "CVMBQC_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a named preset.
    Run { config: String },
    /// Re-run a config over a list of gate or resource levels.
    Sweep {
        config: String,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Compile a target gate and print its schedule and noise budget.
    Compile {
        /// fourier, xsq:<a_db> or custom:<a,b,c,d>
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, default_value_t = -5.5, allow_negative_numbers = true)]
        r_db: f64,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Sum)]
        objective: ObjectiveArg,
    },
    /// Fidelity and step-count calculators.
    Analyze(AnalyzeArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Report n-step fidelity.
    #[arg(long)]
    fidelity: bool,
    #[arg(long, allow_negative_numbers = true)]
    r_db: f64,
    #[arg(long, default_value_t = 4)]
    steps: u32,
    /// Fidelity bound for the step budget.
    #[arg(long, default_value_t = 0.5)]
    f0: f64,
    /// Output squeezing bound `c` for the squeezing-limited step count.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    #[value(name = "a_db")]
    ADb,
    #[value(name = "r_db")]
    RDb,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Sum,
    #[value(name = "x_only")]
    XOnly,
}

impl From<ObjectiveArg> for NoiseObjective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Sum => NoiseObjective::Sum,
            ObjectiveArg::XOnly => NoiseObjective::XOnly,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config, &cli.out_dir),
        Command::Sweep {
            config,
            param,
            values,
        } => cmd_sweep(&config, param, &values, &cli.out_dir),
        Command::Compile {
            target,
            r_db,
            objective,
        } => cmd_compile(&target, r_db, objective.into()),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Presets => {
            for (name, _) in config::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(source: &str) -> Result<ExperimentConfig, CliError> {
    config::load(source).map_err(CliError::Config)
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct RawRow {
    shot: usize,
    m_in: f64,
    m_1: f64,
    m_2: f64,
    m_3: f64,
    out_x: f64,
    out_p: f64,
}

fn cmd_run(source: &str, out_dir: &Path) -> Result<(), CliError> {
    let cfg = load(source)?;
    let exp = experiment::run(&cfg)?;
    let report = &exp.report;
    if let (Some(rows), Some(file)) = (&report.phase_scan, &report.phase_scan_file) {
        let path = out_dir.join(file);
        write(&path, &to_csv(rows)?)?;
        println!("wrote {}", path.display());
    }
    if let Some(file) = report.monte_carlo.as_ref().and_then(|m| m.raw_outcomes_file.as_ref()) {
        let rows: Vec<RawRow> = exp
            .mc
            .as_ref()
            .expect("monte carlo run present")
            .shots
            .iter()
            .enumerate()
            .map(|(shot, s)| RawRow {
                shot,
                m_in: r12(s.outcomes[0].value),
                m_1: r12(s.outcomes[1].value),
                m_2: r12(s.outcomes[2].value),
                m_3: r12(s.outcomes[3].value),
                out_x: r12(s.output_mean[0]),
                out_p: r12(s.output_mean[1]),
            })
            .collect();
        let path = out_dir.join(file);
        write(&path, &to_csv(&rows)?)?;
        println!("wrote {}", path.display());
    }
    if cfg.outputs.contains(&OutputSpec::Report) {
        let path = out_dir.join(format!("{}.json", cfg.name));
        write(&path, &to_json(report))?;
        println!("wrote {}", path.display());
    }
    let g = &report.gate.angles_deg;
    println!(
        "{}: angles ({}, {}, {}, {}) deg, output variances ({} dB, {} dB)",
        report.name, g[0], g[1], g[2], g[3], report.output.variance_db_x, report.output.variance_db_p
    );
    if let Some(f) = report.fidelity.fidelity {
        println!("fidelity {f}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    param: &'static str,
    value: f64,
    input: &'static str,
    quadrature: &'static str,
    level_db: f64,
}

const DEFAULT_SWEEP_AMPLITUDE_DB: f64 = 14.7;

fn cmd_sweep(source: &str, param: SweepParam, values: &[f64], out_dir: &Path) -> Result<(), CliError> {
    let cfg = load(source)?;
    let amplitude = match cfg.input {
        InputSpec::Coherent { amplitude_db, .. } => amplitude_db,
        InputSpec::Vacuum => DEFAULT_SWEEP_AMPLITUDE_DB,
    };
    let inputs = [
        ("vacuum", InputSpec::Vacuum, 0usize, "x"),
        ("vacuum", InputSpec::Vacuum, 1, "p"),
        (
            "x_coherent",
            InputSpec::Coherent {
                amplitude_db: amplitude,
                phase: Phase::Degrees(0.0),
            },
            0,
            "x",
        ),
        (
            "p_coherent",
            InputSpec::Coherent {
                amplitude_db: amplitude,
                phase: Phase::Degrees(90.0),
            },
            1,
            "p",
        ),
    ];
    let mut rows = Vec::new();
    for &value in values {
        let (gate, db, name) = match param {
            SweepParam::ADb => (GateSpec::XSqueeze { a_db: value }, cfg.resource_squeezing_db, "a_db"),
            SweepParam::RDb => (cfg.gate.clone(), value, "r_db"),
        };
        let compiled = experiment::compile_gate(&gate)?;
        let resource = experiment::resource(db)?;
        for (label, spec, quad, quad_name) in &inputs {
            let (state, _) = experiment::input_state(spec, cfg.amplitude_convention)?;
            let out = run_analytic(&state, &compiled.schedule, &resource)?;
            let m = out.output_mean[*quad];
            let power = m * m + out.output_cov[(*quad, *quad)];
            rows.push(SweepRow {
                param: name,
                value: r12(value),
                input: label,
                quadrature: quad_name,
                level_db: r12(cvmbqc_core::analysis::variance_to_db(power)),
            });
        }
    }
    let csv = to_csv(&rows)?;
    let stem = format!("{}_sweep_{}", cfg.name, rows.first().map_or("a_db", |r| r.param));
    write(&out_dir.join(format!("{stem}.csv")), &csv)?;
    write(&out_dir.join(format!("{stem}.json")), &to_json(&rows))?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

#[derive(Serialize)]
struct CompileReport {
    target: String,
    angles_deg: [f64; 4],
    k_values: [Option<f64>; 4],
    gate: [[f64; 2]; 2],
    custom: Option<experiment::CustomInfo>,
    resource_squeezing_db: f64,
    noise_coefficients: [f64; 2],
    excess_var_x: f64,
    excess_var_p: f64,
    excess_db_x: f64,
    excess_db_p: f64,
}

fn parse_target(target: &str, objective: NoiseObjective) -> Result<GateSpec, CliError> {
    let bad = |m: String| CliError::Config(m);
    if target == "fourier" {
        return Ok(GateSpec::Fourier);
    }
    if let Some(a) = target.strip_prefix("xsq:") {
        let a_db = a.trim().parse().map_err(|_| bad(format!("bad squeezing level {a:?}")))?;
        return Ok(GateSpec::XSqueeze { a_db });
    }
    if let Some(rest) = target.strip_prefix("custom:") {
        let vals: Vec<f64> = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("bad matrix {rest:?}")))?;
        let matrix: [f64; 4] = vals
            .try_into()
            .map_err(|_| bad("custom target needs four entries a,b,c,d".into()))?;
        return Ok(GateSpec::Custom { matrix, objective });
    }
    Err(bad(format!("unknown target {target:?}")))
}

fn cmd_compile(target: &str, r_db: f64, objective: NoiseObjective) -> Result<(), CliError> {
    let gate = parse_target(target, objective)?;
    let compiled = experiment::compile_gate(&gate)?;
    let model = heisenberg_model(&compiled.schedule)?;
    let r = squeezing_db_to_r(r_db);
    let [_, _, k2, k3] = compiled.schedule.k_values();
    let (cx, cp) = excess_noise_coefficients(k2, k3)?;
    let (vx, vp) = excess_noise(&compiled.schedule, r)?;
    let report = CompileReport {
        target: compiled.label,
        angles_deg: compiled.schedule.degrees().map(r12),
        k_values: compiled.schedule.k_values().map(|k| k.is_finite().then(|| r12(k))),
        gate: r12_matrix(&model.gate),
        custom: compiled.custom,
        resource_squeezing_db: r12(r_db),
        noise_coefficients: [r12(cx), r12(cp)],
        excess_var_x: r12(vx),
        excess_var_p: r12(vp),
        excess_db_x: r12(cvmbqc_core::analysis::variance_to_db(vx)),
        excess_db_p: r12(cvmbqc_core::analysis::variance_to_db(vp)),
    };
    print!("{}", String::from_utf8_lossy(&to_json(&report)));
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    r_db: f64,
    r: f64,
    steps: u32,
    nstep_fidelity: Option<f64>,
    f0: f64,
    max_steps_at_fidelity: i64,
    c: Option<f64>,
    max_steps_at_output_squeezing: Option<f64>,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let r = squeezing_db_to_r(args.r_db);
    let report = AnalyzeReport {
        r_db: r12(args.r_db),
        r: r12(r),
        steps: args.steps,
        nstep_fidelity: if args.fidelity {
            Some(r12(nstep_fidelity(args.steps, r)?))
        } else {
            None
        },
        f0: args.f0,
        max_steps_at_fidelity: max_steps_at_fidelity(r, args.f0)?,
        c: args.c,
        max_steps_at_output_squeezing: args
            .c
            .map(|c| max_steps_at_output_squeezing(r, c).map(r12))
            .transpose()?,
    };
    print!("{}", String::from_utf8_lossy(&to_json(&report)));
    Ok(())
}
