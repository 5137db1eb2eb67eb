use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qrng_kit::config::PipelineConfig;
use qrng_kit::{commands, KitError};

#[derive(Parser)]
#[command(
    name = "qrng",
    version,
    about = "Vacuum-noise random number generation: simulation, calibration, entropy bounds and extraction"
)]
struct Cli {
    /// Configuration file (`key = value` lines); defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for stage artifacts.
    #[arg(long, global = true, default_value = "qrng-out")]
    out: PathBuf,
    /// Toeplitz seed, at least n_in + m_out − 1 bits.
    #[arg(long, global = true)]
    seed_file: Option<PathBuf>,
    /// Number of simulated samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    eps_pe: Option<f64>,
    #[arg(long, global = true)]
    eps_hash: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize samples and a calibration sweep.
    Simulate,
    /// Build the detector transfer function from the sweep.
    Calibrate,
    /// Estimate σ², σ_X² and σ_U² with confidence intervals.
    Estimate,
    /// Worst-case min-entropy and secure output length.
    Bound,
    /// Hash samples into output.bin.
    Extract {
        /// Time single-threaded extraction on pseudo-random blocks instead.
        #[arg(long)]
        bench: bool,
        #[arg(long, default_value_t = 200_000)]
        bench_blocks: usize,
    },
    /// Run every stage and write report.txt.
    Pipeline,
    /// Optimized min-entropy versus quantum-to-excess noise ratio.
    Figure2,
    /// Fine-resolution lower bound, homodyne upper bound and their gap.
    AppendixA,
    /// PSD, autocorrelation and Q-Q plot data.
    Report,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, KitError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &cli.seed_file {
        cfg.seed_file = Some(p.clone());
    }
    if let Some(n) = cli.samples {
        cfg.sim.samples = n;
    }
    if let Some(e) = cli.eps_pe {
        cfg.eps_pe = e;
    }
    if let Some(e) = cli.eps_hash {
        cfg.eps_hash = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), KitError> {
    let out = &cli.out;
    match cli.command {
        Command::Figure2 => {
            let n = commands::figure2(out)?.len();
            println!("wrote {} ({n} points)", out.join("figure2.csv").display());
            return Ok(());
        }
        Command::AppendixA => {
            let n = commands::appendix_a(out)?.len();
            println!("wrote {} ({n} points)", out.join("appendix_a.csv").display());
            return Ok(());
        }
        Command::Extract { bench: true, bench_blocks } => {
            let cfg = load_config(cli)?;
            let b = commands::bench_extractor(cfg.n_in, cfg.m_out, bench_blocks)?;
            println!("blocks: {}", b.blocks);
            println!("seconds: {:.3}", b.seconds);
            println!("input_mbit_per_s: {:.1}", b.input_mbit_per_s);
            println!("output_mbit_per_s: {:.1}", b.output_mbit_per_s);
            return Ok(());
        }
        _ => {}
    }
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, out)?,
        Command::Calibrate => commands::calibrate(&cfg, out)?,
        Command::Estimate => print!("{}", commands::estimate(&cfg, out)?.to_text()),
        Command::Bound => print!("{}", commands::bound(&cfg, out)?),
        Command::Extract { .. } => println!("extracted_len_bits: {}", commands::extract(&cfg, out)?),
        Command::Report => commands::report(&cfg, out)?,
        Command::Pipeline => {
            let outcome = commands::run_pipeline(&cfg, out)?;
            print!("{}", outcome.report_text);
            outcome.report?;
        }
        Command::Figure2 | Command::AppendixA => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
