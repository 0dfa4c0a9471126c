//! Turns a config into core objects and a report.

use serde::Serialize;

use cvmbqc_core::analysis::{
    amplitude_db_to_mean, fidelity_from_variances, variance_to_db, AmplitudeConvention,
};
use cvmbqc_core::engine::{
    phase_scan, quadrature_power_trace, run_monte_carlo, AngleSchedule, MonteCarloRun, RunResult,
};
use cvmbqc_core::{
    build_cluster, compile_custom, compile_fourier, compile_x_squeeze, heisenberg_model,
    run_analytic, ClusterResource, GaussianState, LuboTarget, Matrix2, PhaseScanPoint, Vector2,
};

use crate::config::{ExperimentConfig, GateSpec, InputSpec, ModeSpec, OutputSpec};
use crate::format::{r12, r12_matrix, r12_vec};
use crate::CliError;

pub struct Compiled {
    pub schedule: AngleSchedule,
    pub label: String,
    pub target: Option<Matrix2<f64>>,
    pub custom: Option<CustomInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CustomInfo {
    pub objective: cvmbqc_core::NoiseObjective,
    pub gate_error: f64,
    pub feasible_points: usize,
    pub grid_points: usize,
}

pub fn compile_gate(gate: &GateSpec) -> Result<Compiled, CliError> {
    Ok(match gate {
        GateSpec::Fourier => Compiled {
            schedule: compile_fourier(),
            label: "fourier".into(),
            target: Some(*LuboTarget::fourier().matrix()),
            custom: None,
        },
        GateSpec::XSqueeze { a_db } => {
            if !(*a_db > 0.0) {
                return Err(CliError::Config(format!("x_squeeze needs a_db > 0, got {a_db}")));
            }
            Compiled {
                schedule: compile_x_squeeze(*a_db)?,
                label: format!("x_squeeze {a_db} dB"),
                target: Some(*LuboTarget::x_squeeze(*a_db)?.matrix()),
                custom: None,
            }
        }
        GateSpec::Custom { matrix, objective } => {
            let [a, b, c, d] = *matrix;
            let target = LuboTarget::new(Matrix2::new(a, b, c, d))?;
            let comp = compile_custom(&target, *objective)?;
            Compiled {
                schedule: comp.schedule,
                label: "custom".into(),
                target: Some(*target.matrix()),
                custom: Some(CustomInfo {
                    objective: comp.objective,
                    gate_error: r12(comp.gate_error),
                    feasible_points: comp.feasible_points,
                    grid_points: comp.grid_points,
                }),
            }
        }
        GateSpec::ExplicitAngles { degrees } => Compiled {
            schedule: AngleSchedule::from_degrees(*degrees),
            label: "explicit_angles".into(),
            target: None,
            custom: None,
        },
    })
}

pub fn input_state(
    input: &InputSpec,
    convention: AmplitudeConvention,
) -> Result<(GaussianState, InputReport), CliError> {
    Ok(match input {
        InputSpec::Vacuum => (
            GaussianState::vacuum(1)?,
            InputReport {
                kind: "vacuum",
                amplitude_db: None,
                phase_deg: None,
                mean: [0.0, 0.0],
            },
        ),
        InputSpec::Coherent {
            amplitude_db,
            phase,
        } => {
            let m = amplitude_db_to_mean(*amplitude_db, convention)?;
            let phi = phase.degrees().to_radians();
            let (s, c) = phi.sin_cos();
            let (x, p) = (m * c, m * s);
            (
                GaussianState::coherent(x, p),
                InputReport {
                    kind: "coherent",
                    amplitude_db: Some(r12(*amplitude_db)),
                    phase_deg: Some(r12(phase.degrees())),
                    mean: [r12(x), r12(p)],
                },
            )
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InputReport {
    pub kind: &'static str,
    pub amplitude_db: Option<f64>,
    pub phase_deg: Option<f64>,
    pub mean: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    pub label: String,
    pub angles_deg: [f64; 4],
    pub k_values: [Option<f64>; 4],
    pub matrix: [[f64; 2]; 2],
    pub target: Option<[[f64; 2]; 2]>,
    pub custom: Option<CustomInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub excess_var_x: f64,
    pub excess_var_p: f64,
    pub excess_db_x: f64,
    pub excess_db_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputReport {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub variance_db_x: f64,
    pub variance_db_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelitySection {
    pub fidelity: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub shots: usize,
    pub seed: u64,
    pub mean: [f64; 2],
    pub mean_std_err: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub conditional_cov: [[f64; 2]; 2],
    pub averaged_cov: [[f64; 2]; 2],
    pub raw_outcomes_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub theta_deg: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub name: String,
    pub resource_squeezing_db: f64,
    pub r: f64,
    pub amplitude_convention: AmplitudeConvention,
    pub input: InputReport,
    pub gate: GateReport,
    pub noise: NoiseReport,
    pub output: OutputReport,
    pub fidelity: FidelitySection,
    pub monte_carlo: Option<MonteCarloReport>,
    pub phase_scan_file: Option<String>,
    pub phase_scan: Option<Vec<ScanRow>>,
}

pub struct Experiment {
    pub report: Report,
    pub mc: Option<MonteCarloRun>,
}

fn output_report(mean: &Vector2<f64>, cov: &Matrix2<f64>) -> OutputReport {
    OutputReport {
        mean: r12_vec(mean),
        cov: r12_matrix(cov),
        variance_db_x: r12(variance_to_db(cov[(0, 0)])),
        variance_db_p: r12(variance_to_db(cov[(1, 1)])),
    }
}

fn is_orthogonal(m: &Matrix2<f64>) -> bool {
    (m.transpose() * m - Matrix2::identity()).amax() < 1e-9
}

pub fn resource(db: f64) -> Result<ClusterResource, CliError> {
    Ok(build_cluster(db)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let compiled = compile_gate(&cfg.gate)?;
    let model = heisenberg_model(&compiled.schedule)?;
    let resource = resource(cfg.resource_squeezing_db)?;
    let (input, input_report) = input_state(&cfg.input, cfg.amplitude_convention)?;
    let analytic = run_analytic(&input, &compiled.schedule, &resource)?;
    let (ex, ep) = analytic.excess_var;

    let fidelity = if is_orthogonal(&model.gate) {
        FidelitySection {
            fidelity: Some(r12(fidelity_from_variances(ex, ep)?)),
            note: None,
        }
    } else {
        FidelitySection {
            fidelity: None,
            note: Some("gate is not a rotation; coherent inputs do not stay coherent".into()),
        }
    };

    let mc = match cfg.mode {
        ModeSpec::Analytic => None,
        ModeSpec::MonteCarlo { shots, seed } => Some(run_monte_carlo(
            &input,
            &compiled.schedule,
            &resource,
            shots,
            seed,
        )?),
    };
    let observed: &RunResult = mc.as_ref().map_or(&analytic, |m| &m.empirical);

    let scan_points = cfg.outputs.iter().find_map(|o| match o {
        OutputSpec::PhaseScan { n_points } => Some(*n_points),
        _ => None,
    });
    let phase_scan = match scan_points {
        Some(n) => Some(scan_rows(&if mc.is_some() {
            quadrature_power_trace(&observed.output_mean, &observed.output_cov, n)?
        } else {
            phase_scan(observed, n)?
        })),
        None => None,
    };
    let wants_raw = cfg.outputs.contains(&OutputSpec::RawOutcomes);

    let k_values = compiled
        .schedule
        .k_values()
        .map(|k| k.is_finite().then(|| r12(k)));
    let report = Report {
        schema: cfg.schema,
        name: cfg.name.clone(),
        resource_squeezing_db: r12(cfg.resource_squeezing_db),
        r: r12(resource.r),
        amplitude_convention: cfg.amplitude_convention,
        input: input_report,
        gate: GateReport {
            label: compiled.label,
            angles_deg: compiled.schedule.degrees().map(r12),
            k_values,
            matrix: r12_matrix(&model.gate),
            target: compiled.target.as_ref().map(r12_matrix),
            custom: compiled.custom,
        },
        noise: NoiseReport {
            excess_var_x: r12(ex),
            excess_var_p: r12(ep),
            excess_db_x: r12(variance_to_db(ex)),
            excess_db_p: r12(variance_to_db(ep)),
        },
        output: output_report(&analytic.output_mean, &analytic.output_cov),
        fidelity,
        monte_carlo: mc.as_ref().map(|m| MonteCarloReport {
            shots: m.shots.len(),
            seed: m.seed,
            mean: r12_vec(&m.empirical.output_mean),
            mean_std_err: r12_vec(&m.mean_std_err),
            cov: r12_matrix(&m.empirical.output_cov),
            conditional_cov: r12_matrix(&m.conditional_cov),
            averaged_cov: r12_matrix(&m.averaged_cov),
            raw_outcomes_file: wants_raw.then(|| format!("{}_raw_outcomes.csv", cfg.name)),
        }),
        phase_scan_file: phase_scan.as_ref().map(|_| format!("{}_phase_scan.csv", cfg.name)),
        phase_scan,
    };
    Ok(Experiment { report, mc })
}

fn scan_rows(points: &[PhaseScanPoint]) -> Vec<ScanRow> {
    points
        .iter()
        .map(|p| ScanRow {
            theta_deg: r12(p.theta.to_degrees()),
            power_db: r12(p.power_db),
        })
        .collect()
}
