use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thinlaw_cli::config::{parse_spec, Experiment};
use thinlaw_cli::{assemble_config, run, FileFormat, EXIT_CONFIG, EXIT_IO};
use thinlaw_core::point_process::{thinned_superposition_sample, write_pattern};
use thinlaw_core::{Streams, Window};

#[derive(Parser)]
#[command(name = "thinlaw", version, about = "Seeded convergence experiments for thinned sums and thinned superpositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled sums against the point-mass limit.
    LargeNumbers(RunArgs),
    /// Thinned sums against the Poisson limit.
    ThinNumbers(RunArgs),
    /// Thinned superpositions of point processes against the Poisson process.
    ThinProcesses(RunArgs),
    /// Identities of thinning and superposition.
    VerifyProperties(RunArgs),
    /// Writes thinned-superposition patterns in the pattern text format.
    Sample(SampleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file, flat key=value or TOML (by .toml extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix; writes <OUT>.csv and <OUT>.summary.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config overrides, e.g. n=1,2,4 samples=20000.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SampleArgs {
    /// Catalog name or kind:params (poisson:4, binomial:5, neyman-scott:2:3:0.1, atoms:x,y;...).
    #[arg(long)]
    spec: String,
    #[arg(long, default_value = "[0,1]x[0,1]")]
    window: String,
    /// Number of superposed copies; each point is kept with probability 1/n.
    #[arg(long, default_value_t = 1)]
    n: u64,
    /// Number of patterns to write.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_experiment(experiment: Experiment, args: RunArgs) -> i32 {
    let file = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some((text, FileFormat::for_path(path))),
            Err(e) => {
                eprintln!("thinlaw: cannot read {}: {e}", path.display());
                return EXIT_IO;
            }
        },
        None => None,
    };
    let cfg = match assemble_config(
        experiment,
        file.as_ref().map(|(t, f)| (t.as_str(), *f)),
        &args.overrides,
        args.seed,
        args.out,
    ) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("thinlaw: config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            let r = &outcome.report;
            println!(
                "{}: {} rows, {} hard / {} soft failures; wrote {} and {}",
                r.experiment,
                r.rows.len(),
                r.hard_failures(),
                r.soft_failures(),
                outcome.csv.display(),
                outcome.summary.display()
            );
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("thinlaw: {e}");
            e.exit_code()
        }
    }
}

fn sample(args: SampleArgs) -> i32 {
    let window: Window = match args.window.parse() {
        Ok(w) => w,
        Err(e) => {
            eprintln!("thinlaw: config error: invalid `window`: {e}");
            return EXIT_CONFIG;
        }
    };
    let spec = match parse_spec(&args.spec, &window) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("thinlaw: config error: invalid `spec`: {e}");
            return EXIT_CONFIG;
        }
    };
    if args.n == 0 {
        eprintln!("thinlaw: config error: invalid `n`: must be at least 1");
        return EXIT_CONFIG;
    }
    let mut rng = Streams::new(args.seed).derive_str("sample").rng(0);
    let result = (|| -> io::Result<()> {
        let mut sink: Box<dyn Write> = match &args.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        for _ in 0..args.count {
            let pattern = thinned_superposition_sample(&spec, args.n, &mut rng).expect("validated spec");
            write_pattern(&mut sink, &pattern, &window)?;
        }
        sink.flush()
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("thinlaw: I/O error: {e}");
            EXIT_IO
        }
    }
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::LargeNumbers(a) => run_experiment(Experiment::LargeNumbers, a),
        Command::ThinNumbers(a) => run_experiment(Experiment::ThinNumbers, a),
        Command::ThinProcesses(a) => run_experiment(Experiment::ThinProcesses, a),
        Command::VerifyProperties(a) => run_experiment(Experiment::VerifyProperties, a),
        Command::Sample(a) => sample(a),
    };
    ExitCode::from(code as u8)
}
