use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use surround::config::RunConfig;
use surround::core::ground_plane::fit_initial_plane;
use surround::core::WorldPoint;
use surround::eval::{evaluate, evaluate_dirs, Estimates, Truth};
use surround::report::{format_key_values, run_sequence, write_report};
use surround::sequence::{load_sequence, read_sequence_calibration, TRUTH_DIR};
use surround::synth::{emit_sequence, Scene, SceneSpec};

#[derive(Parser)]
#[command(name = "surround", version, about = "Monocular ego and surrounding-vehicle state estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a sequence directory and write ego.csv, vehicles.csv,
    /// plane.csv and metrics.txt.
    Run(RunArgs),
    /// Compare an output directory against a truth directory.
    Eval(EvalArgs),
    /// Render a synthetic sequence from a scene file.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with run settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    no_correction: bool,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    /// Meters per normalized depth unit.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    fps: Option<f64>,
    /// Ego rotation center to camera distance, meters.
    #[arg(long)]
    d0: Option<f64>,
    /// RANSAC seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Ego flow region as X,Y,W,H.
    #[arg(long, value_parser = parse_roi)]
    roi: Option<[u32; 4]>,
    /// Fraction trimmed from each tail when averaging flow.
    #[arg(long)]
    trimmed_mean: Option<f64>,
    /// Fit the initial plane from known road points, one `x,y,z` per line.
    #[arg(long)]
    init_vertices: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    estimates: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Also write the metrics to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    noise_depth: Option<f64>,
    #[arg(long)]
    noise_flow: Option<f64>,
    #[arg(long)]
    noise_det: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_roi(s: &str) -> Result<[u32; 4], String> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected X,Y,W,H".to_string())
}

fn read_points(path: &Path) -> anyhow::Result<Vec<WorldPoint>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let [x, y, z] = v[..] else {
            bail!("{}:{}: expected x,y,z", path.display(), i + 1);
        };
        points.push(WorldPoint::new(x, y, z));
    }
    Ok(points)
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let calib = read_sequence_calibration(&args.seq)?;
    let file = match &args.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    let cli = RunConfig {
        fps: args.fps,
        k: args.k,
        theta0: args.theta0,
        theta1: args.theta1,
        theta2: args.theta2,
        seed: args.seed,
        roi: args.roi,
        d0: args.d0,
        correction: args.no_correction.then_some(false),
        trimmed_mean: args.trimmed_mean,
        ..Default::default()
    };
    let layered = cli.over(file);
    let init = match &args.init_vertices {
        Some(p) => {
            let mut params = surround::core::RansacParams::default();
            if let Some(s) = layered.seed {
                params.seed = s;
            }
            Some(fit_initial_plane(&read_points(p)?, &params)?)
        }
        None => None,
    };
    let config = layered.resolve(&calib, init)?;
    let seq = load_sequence(&args.seq, &config)?;
    let report = run_sequence(seq.frames(), &config)?;

    let truth_dir = args.seq.join(TRUTH_DIR);
    let extra = if truth_dir.exists() {
        let est = Estimates {
            ego: report.ego_records(),
            vehicles: report.vehicle_records(),
            plane: report.plane_records(),
        };
        evaluate(&est, &Truth::read(&truth_dir)?).key_values()
    } else {
        Vec::new()
    };
    write_report(&report, &args.out, &extra)?;
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let text = format_key_values(&evaluate_dirs(&args.estimates, &args.truth)?.key_values());
    print!("{text}");
    if let Some(out) = &args.out {
        fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let mut spec = SceneSpec::read(&args.spec)?;
    let n = &mut spec.noise;
    n.depth = args.noise_depth.unwrap_or(n.depth);
    n.flow = args.noise_flow.unwrap_or(n.flow);
    n.det = args.noise_det.unwrap_or(n.det);
    n.seed = args.seed.unwrap_or(n.seed);
    let noise = spec.noise;
    let scene = Scene::new(spec)?;
    emit_sequence(&scene, &noise, &args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
