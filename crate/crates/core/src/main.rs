use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use capflow::config::RunConfig;
use capflow::gridset::write_snapshot;
use capflow::oracle2d::{run_front, FrontOptions};
use capflow::shapes::{isoperimetric_constant, rasterize, winterbottom_constant, WinterbottomShape};
use capflow::stepper::{FlatFlowState, StepRecord};
use capflow::verify::{check_comparison_suite, run_checks, run_flows, CheckReport, ComparisonSuite, REPORT_HEADER};
use capflow::{Error, Result};

const METRICS_HEADER: &str = "# capflow metrics v1";
const METRICS_COLUMNS: &str = "k,t,volume,perimeter_phi,adhesion,capillary,dissipation,forcing,total,previous_value,\
mincut_value,max_flip_distance,contact,ms";

#[derive(Parser)]
#[command(name = "capflow", version, about = "Anisotropic capillary flat flows on a half-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flat flow for every τ of a configuration.
    Simulate {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the planar front-tracking oracle from the configured datum.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Spacing of the written curve samples.
        #[arg(long, default_value_t = 0.05)]
        sample_dt: f64,
    },
    /// Paired flat flows on randomized nested data.
    Compare {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        h: f64,
        #[arg(long, default_value_t = 4e-3)]
        tau: f64,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run checks over the flows of a configuration.
    Verify {
        config: PathBuf,
        /// Comma-separated check names; defaults to the configured list, then to all.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Isoperimetric and Winterbottom constants, optionally with rasterized fixtures.
    Shapes {
        #[arg(long, default_value = "euclidean")]
        anisotropy: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        beta0: Vec<f64>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Writes one Winterbottom fixture per β₀ at this cell size (n = 2).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Exit code for failed checks.
const CHECK_FAILURE: u8 = 5;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILURE),
        Err(e) => {
            eprintln!("capflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate { config, output } => simulate(&config, output).map(|_| true),
        Command::Oracle { config, output, sample_dt } => oracle(&config, output, sample_dt).map(|_| true),
        Command::Compare { seed, instances, h, tau, steps, output } => {
            let rep = check_comparison_suite(seed, &ComparisonSuite { instances, h, tau, steps })?;
            emit_reports(&[rep], output.as_deref())
        }
        Command::Verify { config, checks, output } => verify(&config, checks, output),
        Command::Shapes { anisotropy, dim, beta0, resolution, h, output } => {
            shapes(&anisotropy, dim, &beta0, resolution, h, output.as_deref()).map(|_| true)
        }
    }
}

fn run_dir(cfg: &RunConfig, output: Option<PathBuf>) -> Result<PathBuf> {
    let dir = output.unwrap_or_else(|| cfg.output.join(&cfg.name));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn metrics_row(r: &StepRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        r.k,
        r.t,
        r.volume,
        r.perimeter_phi,
        r.adhesion,
        r.capillary,
        r.dissipation,
        r.forcing,
        r.total,
        r.previous_value,
        r.mincut_value,
        r.max_flip_distance,
        r.contact,
        r.ms
    )
}

/// Metrics rows for k = 1..K and snapshots every `stride` steps (and the last).
fn write_flow(dir: &Path, flow: &FlatFlowState, stride: usize, single: bool) -> Result<()> {
    let mut csv = format!("{METRICS_HEADER}\n{METRICS_COLUMNS}\n");
    for r in &flow.records[1..] {
        csv.push_str(&metrics_row(r));
        csv.push('\n');
    }
    let name = if single { "metrics.csv".to_string() } else { format!("metrics_tau{}.csv", flow.tau) };
    std::fs::write(dir.join(name), csv)?;
    let ext = if flow.sets[0].grid().dim() == 2 { "pgm" } else { "bin" };
    for (k, e) in flow.sets.iter().enumerate() {
        if k % stride == 0 || k == flow.steps() {
            write_snapshot(e, &dir.join(format!("E_tau{}_k{k}.{ext}", flow.tau)))?;
        }
    }
    Ok(())
}

fn simulate(config: &Path, output: Option<PathBuf>) -> Result<()> {
    let cfg = RunConfig::from_file(config)?;
    let scheme = cfg.scheme()?;
    let dir = run_dir(&cfg, output)?;
    std::fs::copy(config, dir.join("config.cfg"))?;
    let flows = run_flows(&cfg, &scheme)?;
    for f in &flows {
        write_flow(&dir, f, cfg.snapshot_stride, flows.len() == 1)?;
        println!("τ = {}: {} steps, final volume {:.6}", f.tau, f.steps(), f.records.last().map_or(0.0, |r| r.volume));
    }
    if let Some(step) = flows.iter().find_map(|f| f.truncated) {
        return Err(Error::Truncation { step });
    }
    Ok(())
}

fn oracle(config: &Path, output: Option<PathBuf>, sample_dt: f64) -> Result<()> {
    let cfg = RunConfig::from_file(config)?;
    let scheme = cfg.scheme()?;
    let curve = cfg.initial_curve()?;
    let dir = run_dir(&cfg, output)?;
    let opts = FrontOptions { dt_max: cfg.oracle_dt, sample_dt };
    let run = run_front(&curve, &scheme.phi, cfg.beta_fn()?, &scheme.forcing, cfg.t_end, &opts)?;
    let beta = cfg.beta_fn()?;
    let mut csv = String::from("# capflow oracle v1\nt,area,length,perimeter_phi,capillary,contact_left,contact_right\n");
    for (j, c) in run.samples.iter().enumerate() {
        let (l, r) = c.contact();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{l},{r}",
            c.time(),
            c.area(),
            c.length(),
            c.perimeter_phi(&scheme.phi),
            c.capillary(&scheme.phi, beta)
        );
        std::fs::write(dir.join(format!("curve_{j:04}.csv")), c.to_csv())?;
    }
    std::fs::write(dir.join("oracle.csv"), csv)?;
    match &run.stopped {
        Some((t, why)) => println!("oracle stopped at t = {t:.6}: {why}"),
        None => println!("oracle reached t = {} in {} steps", cfg.t_end, run.steps),
    }
    Ok(())
}

fn emit_reports(reports: &[CheckReport], dir: Option<&Path>) -> Result<bool> {
    let mut csv = format!("{REPORT_HEADER}\n");
    for r in reports {
        println!("{r}");
        for row in r.csv_rows() {
            csv.push_str(&row);
            csv.push('\n');
        }
    }
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
        std::fs::write(d.join("report.csv"), csv)?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} checks, {failed} failed", reports.len());
    Ok(failed == 0)
}

fn verify(config: &Path, checks: Vec<String>, output: Option<PathBuf>) -> Result<bool> {
    let cfg = RunConfig::from_file(config)?;
    let scheme = cfg.scheme()?;
    let dir = run_dir(&cfg, output)?;
    let flows = run_flows(&cfg, &scheme)?;
    if let Some(step) = flows.iter().find_map(|f| f.truncated) {
        return Err(Error::Truncation { step });
    }
    let names = if checks.is_empty() { cfg.checks.clone() } else { checks };
    let reports = run_checks(&cfg, &scheme, &flows, &names)?;
    emit_reports(&reports, Some(&dir))
}

fn shapes(spec: &str, dim: usize, beta0: &[f64], resolution: Option<usize>, h: Option<f64>, out: Option<&Path>) -> Result<()> {
    let text = format!("dim = {dim}\nanisotropy = {spec}\nh = {}\ntau = 0.5\nt_end = 1\ninitial = box:0,0,0\n", h.unwrap_or(0.01));
    let cfg = RunConfig::parse(&text, Path::new("."))?;
    let phi = cfg.anisotropy()?;
    let res = resolution.unwrap_or(if dim == 2 { 4096 } else { 128 });
    let c = isoperimetric_constant(&phi, res)?;
    let mut csv = String::from("# capflow shapes v1\nanisotropy,n,beta0,c_phi_n,c_winterbottom\n");
    for &b in beta0 {
        let w = winterbottom_constant(&phi, b, res)?;
        let _ = writeln!(csv, "{spec},{dim},{b},{c:.6},{w:.6}");
    }
    print!("{csv}");
    if let Some(d) = out {
        std::fs::create_dir_all(d)?;
        std::fs::write(d.join("shapes.csv"), &csv)?;
        if let (Some(_), 2) = (h, dim) {
            let grid = cfg.grid()?;
            for &b in beta0 {
                let w = WinterbottomShape::new(&phi, b, 0.5, &[0.0])?;
                write_snapshot(&rasterize(&w, &grid)?.set, &d.join(format!("winterbottom_beta{b}.pgm")))?;
            }
        }
    }
    Ok(())
}
