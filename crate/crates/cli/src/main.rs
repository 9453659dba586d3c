use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpwitness::detector::{self, parse_sweep, DetectionConfig};
use dpwitness::mechanisms::NAMES;
use dpwitness::report::{self, ReportOptions};

#[derive(Parser)]
#[command(
    name = "dpwitness",
    version,
    about = "Search for counterexamples to differential privacy claims"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a registered mechanism against its claimed budget.
    Detect(DetectArgs),
    /// List registered mechanisms.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    mechanism: String,
    /// Claimed privacy budget.
    #[arg(long)]
    epsilon0: f64,
    /// Single test budget.
    #[arg(long, conflicts_with = "sweep")]
    test_eps: Option<f64>,
    /// Test budgets as lo:hi:step [default: 0.05:epsilon0+1.5:0.1].
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value_t = 500_000)]
    n_detect: usize,
    #[arg(long, default_value_t = 100_000)]
    n_select: usize,
    #[arg(long, default_value_t = 10)]
    resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Spacing of interval end points for numeric events.
    #[arg(long, default_value_t = 0.2)]
    grid_step: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Leave the seconds column empty, making reports byte-reproducible.
    #[arg(long)]
    omit_timing: bool,
}

const CONFIG_ERROR: u8 = 2;
const POINT_ERROR: u8 = 3;

fn config_from(args: &DetectArgs) -> dpwitness::Result<DetectionConfig> {
    let mut config = DetectionConfig::new(args.mechanism.clone(), args.epsilon0);
    if let Some(eps) = args.test_eps {
        config.test_epsilons = vec![eps];
    } else if let Some(spec) = &args.sweep {
        config.test_epsilons = parse_sweep(spec)?;
    }
    config.n_detect = args.n_detect;
    config.n_select = args.n_select;
    config.resamples = args.resamples;
    config.alpha = args.alpha;
    config.seed = args.seed;
    config.workers = args.workers;
    config.grid_step = args.grid_step;
    config.validate()?;
    Ok(config)
}

fn detect(args: DetectArgs) -> ExitCode {
    let config = match config_from(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let points = match detector::run(&config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let out: Box<dyn Write> = match &args.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", path.display());
                return ExitCode::from(CONFIG_ERROR);
            }
        },
        None => Box::new(io::stdout().lock()),
    };
    let options = ReportOptions {
        omit_timing: args.omit_timing,
    };
    let written = match args.format {
        Format::Csv => report::write_csv(out, &config, &points, options),
        Format::Json => report::to_json(&config, &points, options).and_then(|s| {
            let mut out = out;
            writeln!(out, "{s}").map_err(|e| dpwitness::Error::InvalidParameter(e.to_string()))
        }),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let mut failed = false;
    for p in &points {
        if let Err(e) = &p.outcome {
            eprintln!("point epsilon={}: {e}", p.test_epsilon);
            failed = true;
        }
    }
    let verdict = if detector::violation_detected(&points, config.epsilon0, config.alpha) {
        "violation detected"
    } else {
        "no violation detected"
    };
    eprintln!("{}: {verdict} at alpha={}", config.mechanism, config.alpha);
    if failed {
        ExitCode::from(POINT_ERROR)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Detect(args) => detect(args),
        Command::List => {
            for name in NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
