use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use trimatch::config::Config;
use trimatch::experiment::run_experiment;
use trimatch::io::{read_detections, read_tracks, write_detections, write_matchings, write_tracks};
use trimatch::metrics::evaluate;
use trimatch::simulator::simulate;
use trimatch::tripartite::SigmaMode;
use trimatch::{track, Error, Method, Result};

/// Exit status for bad command-line usage.
const EXIT_USAGE: u8 = 64;
/// Exit status for malformed input files.
const EXIT_PARSE: u8 = 65;
/// Exit status for runtime failures (I/O, oversized spaces).
const EXIT_RUNTIME: u8 = 70;
/// Exit status for invalid configuration.
const EXIT_CONFIG: u8 = 78;

#[derive(Parser)]
#[command(name = "trimatch", version, about = "Velocity-smoothness multi-object tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Link detections into tracks.
    Track(TrackArgs),
    /// Generate a synthetic video with ground truth.
    Simulate(SimulateArgs),
    /// Score predicted tracks against ground-truth tracks.
    Evaluate(EvaluateArgs),
    /// Run a simulation grid and write result tables.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct TrackerFlags {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Association method: bmcf or tri.
    #[arg(long)]
    method: Option<Method>,
    /// Neighbourhood of departure counts searched around the bipartite solution.
    #[arg(long)]
    delta: Option<usize>,
    /// per-frame, pooled or fixed:<v>.
    #[arg(long)]
    sigma_mode: Option<SigmaMode>,
}

impl TrackerFlags {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(m) = self.method {
            cfg.tracker.method = m;
        }
        if let Some(d) = self.delta {
            cfg.tracker.delta = d;
        }
        if let Some(s) = self.sigma_mode {
            cfg.tracker.sigma_mode = s;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrackArgs {
    /// Detections CSV (`frame_index,x,y`).
    #[arg(long)]
    input: PathBuf,
    /// Tracks CSV to write.
    #[arg(long)]
    output: PathBuf,
    /// Diagnostics JSON; defaults to the output path with a `.diagnostics.json` suffix.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[command(flatten)]
    tracker: TrackerFlags,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted tracks CSV.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth tracks CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Per frame pair report CSV; the summary goes next to it as JSON.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    tracker: TrackerFlags,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::InvalidInput(_) => EXIT_PARSE,
        Error::InvalidConfig(_) => EXIT_CONFIG,
        Error::TooLarge { .. } | Error::Undefined(_) | Error::Io(_) => EXIT_RUNTIME,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_track(args: &TrackArgs) -> Result<()> {
    let cfg = args.tracker.load()?;
    let tracker = cfg.tracker.tracker_config()?;
    let seq = read_detections(open(&args.input)?, cfg.tracker.dt)?;
    let out = track(&seq, &tracker)?;
    write_tracks(&seq, &out.trajectories, create(&args.output)?)?;
    let diag = args
        .diagnostics
        .clone()
        .unwrap_or_else(|| with_suffix(&args.output, ".diagnostics.json"));
    write_json(&diag, &out.diagnostics)?;
    log_line(format!(
        "{} tracks over {} frames, score {:.4}",
        out.trajectories.len(),
        seq.len(),
        out.diagnostics.score
    ));
    Ok(())
}

#[derive(Serialize)]
struct SimMetadata<'a> {
    seed: u64,
    cells: usize,
    frames: usize,
    detections: usize,
    visible_counts: Vec<usize>,
    simulation: &'a trimatch::simulator::SimConfig,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = args.seed {
        cfg.simulation.seed = s;
    }
    let out = simulate(&cfg.simulation)?;
    fs::create_dir_all(&args.output)?;
    let dir = &args.output;
    write_detections(&out.sequence, create(&dir.join("detections.csv"))?)?;
    write_tracks(&out.sequence, &out.truth, create(&dir.join("truth.csv"))?)?;
    let mut m = create(&dir.join("truth_matchings.txt"))?;
    write_matchings(&out.truth_matchings, &mut m)?;
    m.flush()?;
    write_json(
        &dir.join("metadata.json"),
        &SimMetadata {
            seed: cfg.simulation.seed,
            cells: cfg.simulation.cell_count(),
            frames: out.sequence.len(),
            detections: out.sequence.total_detections(),
            visible_counts: out.sequence.counts(),
            simulation: &cfg.simulation,
        },
    )
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (seq, truth) = read_tracks(open(&args.truth)?)?.to_sequence(1.0)?;
    let pred = read_tracks(open(&args.pred)?)?.resolve(&seq)?;
    let counts = seq.counts();
    let report = evaluate(
        &seq,
        &pred.to_matchings(&counts)?,
        &truth.to_matchings(&counts)?,
        None,
        args.beta,
    )?;
    report.write_csv(create(&args.output)?)?;
    let summary = report.summary_json();
    let mut w = create(&with_suffix(&args.output, ".summary.json"))?;
    writeln!(w, "{summary}")?;
    w.flush()?;
    println!("{summary}");
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut cfg = args.tracker.load()?;
    if let Some(s) = args.seed {
        cfg.experiment.seed = s;
    }
    if let Some(r) = args.replicates {
        cfg.experiment.replicates = r;
    }
    if let Some(m) = args.tracker.method {
        cfg.experiment.methods = vec![m];
    }
    if let Some(d) = args.tracker.delta {
        cfg.experiment.deltas = vec![d];
    }
    let tracker = cfg.tracker.tracker_config()?;
    let res = run_experiment(&cfg.experiment, &cfg.simulation, &tracker)?;
    fs::create_dir_all(&args.output)?;
    let dir = &args.output;
    write_csv(&dir.join("results.csv"), &res.rows())?;
    write_csv(&dir.join("aggregate.csv"), &res.aggregate())?;
    write_csv(&dir.join("series.csv"), &res.series())?;
    write_csv(&dir.join("timing.csv"), &res.timings())?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    log_line(format!("{} replicates written to {}", res.replicates.len(), dir.display()));
    Ok(())
}

fn log_line(msg: String) {
    eprintln!("trimatch: {msg}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Track(a) => cmd_track(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trimatch: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
