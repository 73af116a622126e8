//! `cirfuse` command-line tool.

mod output;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cirfuse_core::calib::calibrate;
use cirfuse_core::io::{read_recording, write_recording};
use cirfuse_core::pipeline::{compare_methods, run_recording, run_sweep, SweepSpec, WindowCount};
use cirfuse_core::{
    BandOfInterest, CalibrationConfig, CirRecording, Method, Scenario, ScenarioPreset, WindowConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{CliError, ConfigEcho, Summary};

#[derive(Parser)]
#[command(
    name = "cirfuse",
    version,
    about = "Breathing-rate estimation from UWB channel impulse responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording from a scenario file or a preset.
    Simulate(SimulateArgs),
    /// Align and amplitude-normalize a recording against its reference path.
    Calibrate(CalibrateArgs),
    /// Estimate the breathing rate in every window with one method.
    Estimate(EstimateArgs),
    /// Run selection and fusion on the same windows.
    Compare(CompareArgs),
    /// Median-error table over displacements and scenario presets.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario such as `los-2mm-0.3hz` or `nlos-spread-4mm-0.2hz`.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the resolved scenario as TOML.
    #[arg(long, value_name = "PATH")]
    write_scenario: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct CalibArgs {
    /// First bin searched for the reference peak.
    #[arg(long, default_value_t = 75)]
    search_start_bin: usize,
    /// Bins on each side of the reference peak counted as its energy.
    #[arg(long, default_value_t = 2)]
    neighbor_radius: usize,
    /// Bin the reference peak is moved to.
    #[arg(long, default_value_t = CalibrationConfig::default().target_ref_bin)]
    target_ref_bin: usize,
    #[arg(long, default_value_t = 1.0)]
    target_ref_energy: f64,
}

impl CalibArgs {
    fn config(&self) -> CalibrationConfig {
        CalibrationConfig {
            search_start_bin: self.search_start_bin,
            neighbor_radius: self.neighbor_radius,
            target_ref_bin: self.target_ref_bin,
            target_ref_energy: self.target_ref_energy,
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    calib: CalibArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CountArg {
    /// Windows followed by at least one more snapshot (165 for 965 of 800).
    Exclusive,
    /// Every full window.
    Inclusive,
}

#[derive(Args, Clone)]
struct WindowArgs {
    /// Band of interest as `low:high` in Hz.
    #[arg(long, default_value = "0.1:0.5")]
    band: BandOfInterest,
    /// Window length in snapshots.
    #[arg(long, default_value_t = 800)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    hop: usize,
    /// Nominal sampling rate the windows are resampled to.
    #[arg(long, default_value_t = 19.3)]
    rate: f64,
    /// Peak-search grid spacing in Hz.
    #[arg(long, default_value_t = 0.001)]
    resolution: f64,
    /// Relative eigenvalue floor when whitening the fusion problem.
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    #[arg(long, value_enum, default_value_t = CountArg::Exclusive)]
    window_count: CountArg,
    #[command(flatten)]
    calib: CalibArgs,
}

impl WindowArgs {
    fn config(&self, method: Method) -> WindowConfig {
        WindowConfig {
            window_snapshots: self.window,
            hop_snapshots: self.hop,
            nominal_rate_hz: self.rate,
            resolution_hz: self.resolution,
            band: self.band,
            method,
            rank_tol: self.rank_tol,
            window_count: match self.window_count {
                CountArg::Exclusive => WindowCount::Exclusive,
                CountArg::Inclusive => WindowCount::Inclusive,
            },
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Directory receiving `windows.csv` and `summary.json`.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "fusion")]
    method: Method,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep TOML: displacements_mm, presets, seeds, optional rate_hz and hop_snapshots.
    #[arg(long)]
    spec: PathBuf,
    /// Directory receiving `sweep.md` and `sweep.json`.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Estimate(a) => estimate(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn read_config_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_recording(path: &Path) -> Result<CirRecording, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_recording(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn save_recording(rec: &CirRecording, path: &Path) -> Result<(), CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    write_recording(rec, BufWriter::new(file)).map_err(CliError::from_core)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut scenario = match (&a.scenario, &a.preset) {
        (Some(path), _) => Scenario::from_toml_str(&read_config_file(path)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => name
            .parse::<ScenarioPreset>()
            .map_err(|e| CliError::Config(e.to_string()))?
            .scenario(0),
        (None, None) => unreachable!("clap requires --scenario or --preset"),
    };
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    if let Some(path) = &a.write_scenario {
        fs::write(path, scenario.to_toml_string())
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    let rec = scenario.generate().map_err(CliError::from_core)?;
    save_recording(&rec, &a.out)?;
    let truth = rec
        .meta
        .ground_truth_hz
        .map_or_else(|| "none (static scene)".to_string(), |f| format!("{f} Hz"));
    println!(
        "wrote {} snapshots x {} bins to {}; ground truth {truth}",
        rec.len(),
        rec.n_bins(),
        a.out.display()
    );
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<(), CliError> {
    let rec = load_recording(&a.input)?;
    let calibrated = calibrate(&rec, &a.calib.config()).map_err(CliError::from_core)?;
    save_recording(&calibrated, &a.out)?;
    println!(
        "calibrated {} snapshots -> {}",
        calibrated.len(),
        a.out.display()
    );
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    let cfg = a.window.config(a.method);
    let calib = a.window.calib.config();
    let rec = load_recording(&a.input)?;
    let report = run_recording(&rec, &cfg, &calib).map_err(CliError::from_core)?;
    output::prepare_dir(&a.out_dir)?;
    output::write_windows_csv(&a.out_dir.join("windows.csv"), [&report])?;
    let echo = ConfigEcho::new(&a.input, &cfg, &calib);
    output::write_json(
        &a.out_dir.join("summary.json"),
        &Summary::single(&report, echo),
    )?;
    output::print_report_line(&report);
    output::require_estimates(&[&report])
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let cfg = a.window.config(Method::Fusion);
    let calib = a.window.calib.config();
    let rec = load_recording(&a.input)?;
    let both = compare_methods(&rec, &cfg, &calib).map_err(CliError::from_core)?;
    output::prepare_dir(&a.out_dir)?;
    output::write_windows_csv(
        &a.out_dir.join("windows.csv"),
        [&both.selection, &both.fusion],
    )?;
    let echo = ConfigEcho::new(&a.input, &cfg, &calib);
    output::write_json(&a.out_dir.join("summary.json"), &Summary::pair(&both, echo))?;
    output::print_report_line(&both.selection);
    output::print_report_line(&both.fusion);
    output::require_estimates(&[&both.selection, &both.fusion])
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let text = read_config_file(&a.spec)?;
    let spec = SweepSpec::from_toml_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.spec.display())))?;
    spec.validate().map_err(CliError::from_core)?;
    let cfg = WindowConfig {
        hop_snapshots: spec.hop_snapshots,
        ..a.window.config(Method::Fusion)
    };
    let table = run_sweep(&spec, &cfg, &a.window.calib.config()).map_err(CliError::from_core)?;
    output::prepare_dir(&a.out_dir)?;
    let markdown = table.to_markdown();
    fs::write(a.out_dir.join("sweep.md"), &markdown)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.out_dir.display())))?;
    output::write_json(&a.out_dir.join("sweep.json"), &table)?;
    print!("{markdown}");
    Ok(())
}
