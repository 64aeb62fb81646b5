use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use opinion_core::estimate::{
    algorithm1, draw_scenarios, sample_bound, solve_estimation, Algorithm1Config, BoundFormula, ScenarioConfig,
    SampleBoundQuery,
};
use opinion_core::fixtures::FixtureCatalog;
use opinion_core::io;
use opinion_core::nalgebra::{DVector, Complex};
use opinion_core::netcore::{InteractingLaplacian, SystemSpec};
use opinion_core::reproduce::{reproduce, EXPERIMENTS};
use opinion_core::simulate::{run, run_multi_issue, RunOptions};
use opinion_core::spectral::{classify_multi_issue, classify_system, predict_limit_from};
use opinion_core::stepsize::{
    default_rho_max, feasible_rho_corollary1, feasible_rho_cubic, feasible_rho_direct, feasible_rho_hb,
    magnitude_samples, theorem_hb_check, CubicVariant, ScanMode, THETA_POINTS,
};
use opinion_core::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "opinion", version, about = "Two-network opinion dynamics toolkit")]
struct Cli {
    /// Tolerance for treating an eigenvalue as 1.
    #[arg(long, global = true, default_value_t = opinion_core::spectral::TOL_EIG)]
    tol_eig: f64,
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SystemArgs {
    /// System JSON file.
    #[arg(long, conflicts_with = "fixture")]
    system: Option<PathBuf>,
    /// Name of a built-in system (see `fixtures`).
    #[arg(long)]
    fixture: Option<String>,
}

impl SystemArgs {
    fn load(&self) -> Result<SystemSpec, Error> {
        match (&self.system, &self.fixture) {
            (Some(path), _) => io::load_system(path),
            (None, Some(name)) => fixture(name),
            (None, None) => Err(Error::Precondition("pass --system <json> or --fixture <name>".into())),
        }
    }
}

fn fixture(name: &str) -> Result<SystemSpec, Error> {
    FixtureCatalog::new().get(name).cloned().ok_or_else(|| {
        let names: Vec<&str> = FixtureCatalog::new().entries().map(|(n, _, _)| n).collect();
        Error::Precondition(format!("unknown fixture '{name}'; available: {}", names.join(", ")))
    })
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FixedEps,
    RhoSquared,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Corollary1,
    Cubic,
    CubicPaper,
    Hb,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaArg {
    Campi,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral classification and predicted limit.
    Analyze {
        #[command(flatten)]
        system: SystemArgs,
        /// Initial opinions (CSV row or column).
        #[arg(long)]
        x0: Option<PathBuf>,
    },
    /// Iterate the opinion dynamics and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        /// Initial opinions; defaults to the fixture's opinions.
        #[arg(long)]
        x0: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Trajectory CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feasible step-size region.
    Stepsize {
        /// Laplacian CSV.
        #[arg(long, conflicts_with = "fixture")]
        laplacian: Option<PathBuf>,
        /// Take the Laplacian of a built-in system.
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::RhoSquared)]
        mode: ModeArg,
        /// ε for `--mode fixed-eps`.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-3)]
        grid: f64,
        /// Upper end of the scan; defaults to a bound from the spectrum.
        #[arg(long)]
        rho_max: Option<f64>,
        /// Also report per-eigenvalue excluded-root diagnostics at this ϱ.
        #[arg(long)]
        check_rho: Option<f64>,
        /// Region JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of (ϱ, max magnitude) samples.
        #[arg(long)]
        samples_csv: Option<PathBuf>,
    },
    /// Estimate the appraisal matrix from simulated observations.
    Estimate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        /// Residual target; grows the sample set from --samples until met.
        #[arg(long)]
        gamma0: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        m_cap: usize,
        #[arg(long, default_value_t = 1.0)]
        r#box: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Result JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scenario sample-size bound.
    Samplebound {
        /// Number of agents; the dimension is N².
        #[arg(long, conflicts_with = "dim")]
        agents: Option<u64>,
        /// Decision dimension.
        #[arg(long)]
        dim: Option<u64>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = FormulaArg::Campi)]
        formula: FormulaArg,
    },
    /// Re-run a named experiment (or `all`).
    Reproduce { name: String },
    /// List the built-in systems.
    Fixtures {
        /// Write each system as JSON into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPINION_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn print_json(value: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(value).expect("json values serialise"));
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    io::write_text_file(path, &(serde_json::to_string_pretty(value).expect("json values serialise") + "\n"))
}

fn out_path(cli: &Cli, explicit: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    explicit.clone().or_else(|| cli.out_dir.as_ref().map(|d| d.join(default_name)))
}

fn complex_pairs(v: &[Complex<f64>]) -> Value {
    json!(v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Analyze { system, x0 } => analyze(cli, system, x0.as_deref()),
        Command::Simulate { system, x0, steps, tol, window, stride, out } => {
            let opts = RunOptions {
                max_steps: *steps,
                tol_conv: *tol,
                window: *window,
                stride: *stride,
                ..RunOptions::default()
            };
            simulate(cli, system, x0.as_deref(), &opts, out)
        }
        Command::Stepsize { .. } => stepsize(cli),
        Command::Estimate { system, samples, gamma0, m_cap, r#box, noise, out } => {
            let truth = system.load()?;
            let scenario = ScenarioConfig { box_size: *r#box, noise: *noise };
            let (m, res) = match gamma0 {
                Some(g) => algorithm1(
                    &truth,
                    &Algorithm1Config { gamma0: *g, m0: *samples, m_cap: *m_cap, seed: cli.seed, scenario },
                )?,
                None => {
                    let scen = draw_scenarios(&truth, *samples, cli.seed, scenario)?;
                    (*samples, solve_estimation(&scen, &truth.lambda, &truth.laplacian)?)
                }
            };
            let rows = |m: &opinion_core::nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
                m.row_iter().map(|r| r.iter().copied().collect()).collect()
            };
            let value = json!({
                "m": m,
                "gamma_star": res.gamma_star,
                "rank": res.rank,
                "unique": res.unique,
                "null_dim": res.null_dim,
                "d_hat": rows(&res.d_hat),
                "d_projected": rows(&res.d_projected),
                "zeta_hat": res.zeta_hat.as_slice(),
                "seed": cli.seed,
            });
            if let Some(p) = out_path(cli, out, "estimate.json") {
                write_json(&p, &value)?;
            }
            print_json(&value);
            Ok(())
        }
        Command::Samplebound { agents, dim, eps, beta, formula } => {
            let d = match (agents, dim) {
                (Some(n), _) => n * n,
                (None, Some(d)) => *d,
                (None, None) => return Err(Error::Precondition("pass --agents or --dim".into())),
            };
            let formula = match formula {
                FormulaArg::Campi => BoundFormula::CampiGaratti,
                FormulaArg::Paper => BoundFormula::PaperLiteral,
            };
            let r = sample_bound(&SampleBoundQuery { d, epsilon: *eps, beta: *beta, formula })?;
            println!("m = {}", r.m);
            println!("tail = {:e}", r.tail);
            Ok(())
        }
        Command::Reproduce { name } => {
            let names: Vec<&str> = if name == "all" { EXPERIMENTS.to_vec() } else { vec![name.as_str()] };
            let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let mut reports = Vec::new();
            for n in names {
                let r = reproduce(n, Some(&dir), cli.seed)?;
                println!("{}", r.line());
                reports.push(r);
            }
            let value = serde_json::to_value(&reports).expect("reports serialise");
            write_json(&dir.join("reproduce-report.json"), &value)
        }
        Command::Fixtures { export } => {
            for (name, desc, sys) in FixtureCatalog::new().entries() {
                println!("{name:<24} {desc}");
                if let Some(dir) = export {
                    io::save_system(&dir.join(format!("{name}.json")), sys)?;
                }
            }
            Ok(())
        }
    }
}

fn analyze(cli: &Cli, system: &SystemArgs, x0: Option<&Path>) -> Result<(), Error> {
    let sys = system.load()?;
    let report = classify_system(&sys, cli.tol_eig)?;
    let mut value = json!({
        "eigenvalues": complex_pairs(&report.eigenvalues),
        "classification": report.classification.as_str(),
        "unit_eigen_count": report.unit_eigen_count,
        "rho_rest": report.rho_rest,
        "left_vec": report.left_vec.as_ref().map(|v| v.as_slice().to_vec()),
        "right_vec": report.right_vec.as_ref().map(|v| v.as_slice().to_vec()),
    });
    if sys.mids.is_some() {
        let multi = classify_multi_issue(&sys, cli.tol_eig)?;
        value["multi_issue"] = json!({
            "verdict": multi.verdict,
            "c_radius": multi.c_radius,
            "rest_radius": multi.rest_radius,
            "c_eigenvalues": complex_pairs(&multi.c_eigenvalues),
            "unit_direction_diverges": multi.unit_direction_diverges,
        });
    }
    if let Some(path) = x0 {
        let xi0 = io::read_vector_csv(path)?;
        let pred = predict_limit_from(&report, &xi0)?;
        value["phi"] = json!(pred.phi.as_slice());
        value["alpha"] = json!(pred.alpha);
    }
    if let Some(dir) = &cli.out_dir {
        write_json(&dir.join("analysis.json"), &value)?;
    }
    print_json(&value);
    Ok(())
}

fn simulate(
    cli: &Cli,
    system: &SystemArgs,
    x0: Option<&Path>,
    opts: &RunOptions,
    out: &Option<PathBuf>,
) -> Result<(), Error> {
    let sys = system.load()?;
    let xi0 = match (x0, &system.fixture) {
        (Some(p), _) => io::read_vector_csv(p)?,
        (None, Some(name)) => DVector::from_vec(
            FixtureCatalog::new().initial_opinions(name).expect("fixture exists after load"),
        ),
        (None, None) => return Err(Error::Precondition("pass --x0 <csv>".into())),
    };
    let traj = if sys.mids.is_some() { run_multi_issue(&sys, &xi0, opts)? } else { run(&sys, &xi0, opts)? };
    if let Some(p) = out_path(cli, out, "trajectory.csv") {
        io::write_trajectory_csv(&p, &traj)?;
    }
    print_json(&json!({
        "stop_reason": traj.stop_reason.as_str(),
        "steps": traj.steps(),
        "final_spread": traj.final_spread(),
        "final_state": traj.last().xi.as_slice(),
    }));
    Ok(())
}

fn stepsize(cli: &Cli) -> Result<(), Error> {
    let Command::Stepsize { laplacian, fixture: fx, mode, eps, method, grid, rho_max, check_rho, out, samples_csv } =
        &cli.command
    else {
        unreachable!("dispatched on Stepsize")
    };
    let l: InteractingLaplacian = match (laplacian, fx) {
        (Some(p), _) => InteractingLaplacian::new(io::read_matrix_csv(p)?)?,
        (None, Some(name)) => fixture(name)?.laplacian,
        (None, None) => return Err(Error::Precondition("pass --laplacian <csv> or --fixture <name>".into())),
    };
    let scan_mode = match (mode, eps) {
        (ModeArg::FixedEps, Some(e)) => ScanMode::EpsFixed(*e),
        (ModeArg::FixedEps, None) => return Err(Error::Precondition("--mode fixed-eps needs --eps".into())),
        (ModeArg::RhoSquared, _) => ScanMode::EpsEqualsRho,
    };
    let rho_max = match rho_max {
        Some(r) => *r,
        None => default_rho_max(&l, scan_mode)?,
    };
    let needs_rho_squared = || match scan_mode {
        ScanMode::EpsEqualsRho => Ok(()),
        ScanMode::EpsFixed(_) => Err(Error::Precondition("this method applies to --mode rho-squared".into())),
    };
    let region = match method {
        MethodArg::Direct => feasible_rho_direct(&l, scan_mode, *grid, rho_max)?,
        MethodArg::Corollary1 => match scan_mode {
            ScanMode::EpsFixed(e) => feasible_rho_corollary1(&l, e)?,
            ScanMode::EpsEqualsRho => {
                return Err(Error::Precondition("corollary1 needs --mode fixed-eps --eps <v>".into()))
            }
        },
        MethodArg::Cubic => {
            needs_rho_squared()?;
            feasible_rho_cubic(&l, CubicVariant::Corrected)?
        }
        MethodArg::CubicPaper => {
            needs_rho_squared()?;
            feasible_rho_cubic(&l, CubicVariant::Paper)?
        }
        MethodArg::Hb => {
            needs_rho_squared()?;
            feasible_rho_hb(&l, *grid, rho_max)?
        }
    };
    let mut value = json!({ "region": region, "rho_max": rho_max });
    if let Some(rho) = check_rho {
        value["diagnostics"] = serde_json::to_value(theorem_hb_check(&l, *rho, THETA_POINTS)?).expect("serialise");
    }
    if let Some(p) = out_path(cli, out, "region.json") {
        write_json(&p, &value)?;
    }
    if let Some(p) = out_path(cli, samples_csv, "samples.csv") {
        io::write_text_file(&p, &io::samples_to_csv(&magnitude_samples(&l, scan_mode, *grid, rho_max)?))?;
    }
    print_json(&json!({ "region": region, "rho_max": rho_max }));
    Ok(())
}
