//! Command-line front end: synthesize line-spectrum signals, build prolate
//! bases, interpolate band-limited samples, recover spectra from records,
//! run the hybrid quantum pipeline, and drive parameter scans.

mod parse;

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prolate_core::io::{
    read_samples_csv, read_spectrum_json, write_qpd_report_json, write_samples_csv,
    write_solution_json,
};
use prolate_core::pswf::PswfBasis;
use prolate_core::sampling::{prolate_interpolate, sinc_interpolate, BandWindow};
use prolate_core::scan::{read_rows, run_scan, ScanConfig};
use prolate_core::signal::{linspace, sample, LineSpectrum, SampleRecord};
use prolate_core::solver::{
    assemble_from_lines, assemble_from_samples, solve, ObservationWindow, RankPolicy,
};
use prolate_core::quantum::{build_hamiltonian, qpd_pipeline, QpdParams, ShotModel};

#[derive(Parser)]
#[command(
    name = "prolate",
    version,
    about = "Spectral recovery from finite-time samples in a prolate basis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a prolate basis and print (or dump) its eigenvalues and samples.
    Pswf(PswfArgs),
    /// Sample a line spectrum onto a uniform grid, optionally with noise.
    Synth(SynthArgs),
    /// Reconstruct a band-limited signal from samples on a fresh grid.
    Interp(InterpArgs),
    /// Recover frequencies and amplitudes from samples or an exact spectrum.
    Solve(SolveArgs),
    /// Simulate a quantum autocorrelation signal and recover its energies.
    Qpd(QpdArgs),
    /// Run a parameter scan (resumable; rerun with the same --out to extend).
    Scan(ScanArgs),
}

#[derive(Args)]
struct PswfArgs {
    /// Bandwidth-duration product c = W*T of the basis.
    #[arg(long)]
    c: f64,
    /// Number of modes to build.
    #[arg(long)]
    n: usize,
    /// Write a CSV table (n, chi, lambda, psi on a grid) instead of a summary.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Points in the x grid used by --dump.
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Line spectrum JSON: {"lines": [{"omega": f, "re": f, "im": f}]}.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    tmin: f64,
    #[arg(long)]
    tmax: f64,
    /// Number of uniform samples.
    #[arg(long)]
    n: usize,
    /// Noise model: none, gauss:SIGMA, growing:SIGMA:RATE, or shot:M.
    #[arg(long, default_value = "none")]
    noise: String,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV of samples (columns t, re, im and, when exact, dre, dim).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InterpArgs {
    /// Reconstruction method.
    #[arg(long, value_parser = ["prolate", "sinc"])]
    method: String,
    /// Input samples CSV.
    #[arg(long)]
    samples: PathBuf,
    /// Half-bandwidth of the signal.
    #[arg(long = "W")]
    w: f64,
    /// Half-length of the concentration interval.
    #[arg(long = "T")]
    t: f64,
    /// Output CSV with the reconstruction evaluated on [-0.9T, 0.9T].
    #[arg(long = "eval-grid")]
    eval_grid: PathBuf,
    /// Points in the evaluation grid.
    #[arg(long, default_value_t = 201)]
    grid: usize,
}

#[derive(Args)]
struct SolveArgs {
    /// Input samples CSV (mutually exclusive with --spec).
    #[arg(long, conflicts_with = "spec")]
    samples: Option<PathBuf>,
    /// Exact line-spectrum JSON (mutually exclusive with --samples).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Centre of the analysis band.
    #[arg(long, default_value_t = 0.0)]
    omega0: f64,
    /// Half-bandwidth of the analysis band.
    #[arg(long = "W")]
    w: f64,
    /// Half-length of the observation window.
    #[arg(long = "T")]
    t: f64,
    /// Basis size override (default: capacity plus a fixed margin).
    #[arg(long)]
    nbasis: Option<usize>,
    /// Explicit noise-floor threshold for rank detection.
    #[arg(long = "noise-floor")]
    noise_floor: Option<f64>,
    /// Output JSON: {rank, lines, discarded, delta_eff, capacity_T_over_pi}.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QpdArgs {
    /// Hamiltonian: random:DIM:SEED, heis:N:J=..:h=.., or file:PATH
    /// (CSV of 2*d^2 reals, row-major re, im).
    #[arg(long)]
    ham: String,
    /// Initial state: random:SEED, basis:INDEX, or uniform (equal weight on
    /// every eigenmode).
    #[arg(long, default_value = "uniform")]
    psi0: String,
    /// Centre of the analysis band (default: mid-spectrum with a margin).
    #[arg(long)]
    omega0: Option<f64>,
    /// Half-bandwidth of the analysis band (default: full spectrum width
    /// with a margin).
    #[arg(long = "W")]
    w: Option<f64>,
    /// Half-length of the observation window.
    #[arg(long = "T")]
    t: f64,
    /// Uniform samples across [-2T, 2T] for the finite-shot route.
    #[arg(long = "n-samples")]
    n_samples: Option<usize>,
    /// Shot budget per sample; omit for perfect readout.
    #[arg(long)]
    shots: Option<u64>,
    /// Seed for the shot-noise draws.
    #[arg(long = "shot-seed", default_value_t = 0)]
    shot_seed: u64,
    /// Output JSON report (recovered lines, truth, per-line errors, cost).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    /// Which axis family to sweep.
    #[arg(value_parser = ["transition", "sampling", "noise"])]
    experiment: String,
    /// Scan configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; existing rows are kept and only missing cells run.
    /// Thread count follows RAYON_NUM_THREADS (default: all cores).
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pswf(args) => cmd_pswf(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Interp(args) => cmd_interp(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Qpd(args) => cmd_qpd(args),
        Command::Scan(args) => cmd_scan(args),
    }
}

fn cmd_pswf(args: PswfArgs) -> Result<()> {
    let basis = PswfBasis::build(args.c, args.n)?;
    match args.dump {
        Some(path) => {
            parse::dump_basis_csv(&path, &basis, args.grid)?;
            println!("wrote {} modes to {}", basis.len(), path.display());
        }
        None => {
            println!("c = {}, {} modes", basis.c(), basis.len());
            println!("{:>4} {:>24} {:>24}", "n", "chi", "lambda");
            for n in 0..basis.len() {
                println!(
                    "{n:>4} {:>24.16e} {:>24.16e}",
                    basis.chi()[n],
                    basis.lambda()[n]
                );
            }
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = read_spectrum_json(&args.spec)
        .with_context(|| format!("reading spectrum {}", args.spec.display()))?;
    let noise = parse::noise_model(&args.noise, args.seed)?;
    let grid = linspace(args.tmin, args.tmax, args.n)?;
    let record = sample(&spec, &grid, &noise)?;
    write_samples_csv(&args.out, &record)?;
    println!(
        "wrote {} samples on [{}, {}] to {}",
        record.len(),
        args.tmin,
        args.tmax,
        args.out.display()
    );
    Ok(())
}

fn cmd_interp(args: InterpArgs) -> Result<()> {
    let record = read_samples_csv(&args.samples)
        .with_context(|| format!("reading samples {}", args.samples.display()))?;
    let win = BandWindow::new(args.w, args.t)?;
    let grid = linspace(-0.9 * args.t, 0.9 * args.t, args.grid)?;
    let values = match args.method.as_str() {
        "prolate" => {
            let basis = Arc::new(PswfBasis::build(win.c(), win.required_samples() + 10)?);
            prolate_interpolate(&record, &win, &basis)?.eval_many(&grid)
        }
        "sinc" => sinc_interpolate(&record, &win)?.eval_many(&grid),
        other => bail!("unknown method {other}"),
    };
    parse::write_eval_csv(&args.eval_grid, &grid, &values)?;
    println!(
        "wrote {} reconstruction at {} points to {}",
        args.method,
        grid.len(),
        args.eval_grid.display()
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let win = ObservationWindow::new(args.omega0, args.w, args.t)?;
    let n_basis = args.nbasis.unwrap_or_else(|| win.default_basis_len());
    let basis = Arc::new(PswfBasis::build(win.c(), n_basis)?);
    let problem = match (&args.samples, &args.spec) {
        (Some(path), None) => {
            let record: SampleRecord = read_samples_csv(path)
                .with_context(|| format!("reading samples {}", path.display()))?;
            assemble_from_samples(&record, &win, &basis, None)?
        }
        (None, Some(path)) => {
            let spec: LineSpectrum = read_spectrum_json(path)
                .with_context(|| format!("reading spectrum {}", path.display()))?;
            assemble_from_lines(&spec, &win, &basis, None)?
        }
        _ => bail!("exactly one of --samples or --spec is required"),
    };
    let spectrum = solve(
        &problem,
        RankPolicy::Auto {
            noise_floor: args.noise_floor,
        },
    )?;
    write_solution_json(&args.out, &spectrum, &win)?;
    println!(
        "rank {} ({} lines kept, {} discarded) -> {}",
        spectrum.rank(),
        spectrum.lines().len(),
        spectrum.discarded().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_qpd(args: QpdArgs) -> Result<()> {
    let ham = build_hamiltonian(&parse::hamiltonian_kind(&args.ham)?)?;
    let psi0 = parse::initial_state(&args.psi0, &ham)?;
    let (omega0, w) = match (args.omega0, args.w) {
        (Some(omega0), Some(w)) => (omega0, w),
        (None, None) => ham.full_band(1.15)?,
        _ => bail!("--omega0 and --W must be given together (or both omitted)"),
    };
    let params = QpdParams {
        omega0,
        w,
        t: args.t,
        n_samples: args.n_samples,
        shots: args
            .shots
            .map(|m| ShotModel::new(m, args.shot_seed))
            .transpose()?,
    };
    let report = qpd_pipeline(&ham, &psi0, &params)?;
    write_qpd_report_json(&args.out, &report)?;
    let recovered = report
        .frequency_errors
        .iter()
        .filter(|e| e.is_some())
        .count();
    println!(
        "recovered {} of {} in-band energies (rank {}, {} queries, total evolution time {:.1}) -> {}",
        recovered,
        report.true_lines.len(),
        report.spectrum.rank(),
        report.n_signal_queries,
        report.total_evolution_time,
        args.out.display()
    );
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut config: ScanConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", args.config.display()))?;
    if config.experiment.is_empty() {
        config.experiment = args.experiment.clone();
    } else if config.experiment != args.experiment {
        bail!(
            "config says experiment '{}' but the command line says '{}'",
            config.experiment,
            args.experiment
        );
    }
    config.out = Some(args.out.display().to_string());
    let existing = if args.out.exists() {
        read_rows(&args.out)?
    } else {
        Vec::new()
    };
    let kept = existing.len();
    let result = run_scan(&config, &existing)?;
    result.write(&args.out)?;
    println!(
        "{} rows ({} kept from a previous run) -> {}",
        result.rows.len(),
        kept,
        args.out.display()
    );
    Ok(())
}
