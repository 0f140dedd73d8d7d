use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbm_cli::{
    describe_frame, generate_suite, load_config, run_methods, run_sweep, summarize, summary_table,
    RunConfig, SweepAxis,
};
use cbm_core::io::{export_results, read_frames, write_frames};
use cbm_core::LocOffsetMode;

#[derive(Parser, Debug)]
#[command(
    name = "cbm",
    about = "Context-based matching experiments: synthetic suites, method runs, sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a deterministic frame suite and write it as a frame file.
    Generate(GenerateArgs),
    /// Run methods over a frame file and write a results CSV.
    Run(RunArgs),
    /// Sweep one axis, regenerating the suite per setting, one CSV out.
    Sweep(SweepArgs),
    /// Pretty-print one frame of a frame file.
    Inspect(InspectArgs),
}

/// Knobs shared by every verb that builds a config.
#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Config file (JSON; any subset of fields, defaults fill the rest).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base RNG seed; frame k of a suite uses stream k of this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of frames (per sweep setting for sweeps).
    #[arg(long)]
    frames: Option<u64>,
    /// Co-visible object rate in [0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Perception position noise std per axis, meters.
    #[arg(long)]
    sigma_p: Option<f64>,
    /// Perception heading noise std, radians.
    #[arg(long)]
    sigma_theta: Option<f64>,
    /// Localization position noise std, meters; switches the localization
    /// offset to the Gaussian mode.
    #[arg(long)]
    sigma_p_l: Option<f64>,
    /// Localization heading noise std, radians; switches the localization
    /// offset to the Gaussian mode.
    #[arg(long)]
    sigma_theta_l: Option<f64>,
    /// Comma-separated methods: cbm, cbm_no_consensus, icp, gnss.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Write 0 in the runtime column so output is byte-reproducible.
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output frame file path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Input frame file.
    frames_file: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Axis to sweep: eta, sigma-p, sigma-theta, sigma-p-l, sigma-theta-l.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    /// Input frame file.
    frames_file: PathBuf,
    /// Frame index to print.
    #[arg(long, default_value_t = 0)]
    index: usize,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn build_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => load_config(path).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.noise.seed = seed;
    }
    if let Some(frames) = args.frames {
        config.n_frames = frames;
    }
    if let Some(eta) = args.eta {
        config.scene.eta = eta;
    }
    if let Some(sigma_p) = args.sigma_p {
        config.noise.sigma_p = sigma_p;
    }
    if let Some(sigma_theta) = args.sigma_theta {
        config.noise.sigma_theta = sigma_theta;
    }
    if args.sigma_p_l.is_some() || args.sigma_theta_l.is_some() {
        let (old_p, old_t) = match config.noise.loc_offset_mode {
            LocOffsetMode::Gaussian {
                sigma_p_l,
                sigma_theta_l,
            } => (sigma_p_l, sigma_theta_l),
            LocOffsetMode::Fixed { .. } => (0.0, 0.0),
        };
        config.noise.loc_offset_mode = LocOffsetMode::Gaussian {
            sigma_p_l: args.sigma_p_l.unwrap_or(old_p),
            sigma_theta_l: args.sigma_theta_l.unwrap_or(old_t),
        };
    }
    if let Some(methods) = &args.methods {
        config.methods = methods.clone();
    }
    if args.no_runtime {
        config.record_runtime = false;
    }
    config.validate().map_err(CliError::Usage)?;
    Ok(config)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let config = build_config(&args.config)?;
    let frames = generate_suite(&config)
        .map_err(|e| CliError::Runtime(format!("generating frames: {e}")))?;
    write_frames(&frames, &args.out)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out.display())))?;
    println!("wrote {} frames to {}", frames.len(), args.out.display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let config = build_config(&args.config)?;
    let frames = read_frames(&args.frames_file)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", args.frames_file.display())))?;
    let rows = run_methods(&config, &frames);
    export_results(&rows, &args.out)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out.display())))?;
    println!(
        "ran {:?} over {} frames -> {} rows in {}",
        config.methods,
        frames.len(),
        rows.len(),
        args.out.display()
    );
    print!("{}", summary_table(&summarize(&rows)));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = build_config(&args.config)?;
    let axis = SweepAxis::parse(&args.axis)
        .ok_or_else(|| CliError::Usage(format!("axis: unknown sweep axis {:?}", args.axis)))?;
    if args.values.is_empty() {
        return Err(CliError::Usage(
            "values: sweep needs at least one value".to_string(),
        ));
    }
    let rows = run_sweep(&config, axis, &args.values)
        .map_err(|e| CliError::Runtime(format!("sweep failed: {e}")))?;
    export_results(&rows, &args.out)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out.display())))?;
    println!(
        "swept {} over {:?} ({} frames per setting) -> {} rows in {}",
        args.axis,
        args.values,
        config.n_frames,
        rows.len(),
        args.out.display()
    );
    print!("{}", summary_table(&summarize(&rows)));
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<(), CliError> {
    let frames = read_frames(&args.frames_file)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", args.frames_file.display())))?;
    let frame = frames.get(args.index).ok_or_else(|| {
        CliError::Usage(format!(
            "index: {} out of range ({} frames)",
            args.index,
            frames.len()
        ))
    })?;
    print!("{}", describe_frame(frame, args.index));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (label, message) = match &err {
                CliError::Usage(m) => ("usage error", m),
                CliError::Runtime(m) => ("error", m),
            };
            eprintln!("cbm: {label}: {message}");
            ExitCode::from(err.code())
        }
    }
}
