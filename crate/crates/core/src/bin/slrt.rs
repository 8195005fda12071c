use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slrt::scan::{analyze_matrix, average_matrix, run_oracle, run_scan, OracleConfig, ScanConfig};
use slrt::{BandWindow, CouplingMatrix, Error, LineShape};

#[derive(Parser)]
#[command(name = "slrt", version, about = "Linear and semi-linear response of driven mesoscopic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SvgFlag {
    /// Write SVG plots.
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    /// Skip SVG plots.
    #[arg(long, overrides_with = "svg")]
    no_svg: bool,
}

impl SvgFlag {
    fn value(&self) -> Option<bool> {
        if self.svg {
            Some(true)
        } else if self.no_svg {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parameter scan over a ring or ensemble model.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        svg: SvgFlag,
    },
    /// Sparsity report of a coupling-matrix CSV.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_r: usize,
        #[arg(long)]
        max_r: Option<usize>,
        /// Window center (default: middle of the matrix).
        #[arg(long)]
        center: Option<usize>,
        /// Window half size (default: whole matrix).
        #[arg(long)]
        half_size: Option<usize>,
        #[arg(long, default_value = "slrt-analysis")]
        out: PathBuf,
        #[command(flatten)]
        svg: SvgFlag,
    },
    /// Spreading versus network cross-check on seeded sparse networks.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "slrt-oracle")]
        out: PathBuf,
    },
    /// Algebraic, network and reference averages of a matrix file.
    Avg {
        #[arg(long)]
        input: PathBuf,
        /// Band `b_c` in levels.
        #[arg(long, default_value_t = 10.0)]
        band: f64,
        #[arg(long, value_enum, default_value = "rectangular")]
        shape: Shape,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Shape {
    Rectangular,
    Lorentzian,
    Gaussian,
}

impl From<Shape> for LineShape {
    fn from(s: Shape) -> Self {
        match s {
            Shape::Rectangular => LineShape::Rectangular,
            Shape::Lorentzian => LineShape::Lorentzian,
            Shape::Gaussian => LineShape::Gaussian,
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) | Error::Argument(_) | Error::Parse { .. } | Error::Dimension(_) => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Scan { config, seed, out, svg } => {
            let mut config = ScanConfig::read(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(out) = out {
                config.output_dir = out;
            }
            if let Some(svg) = svg.value() {
                config.svg = svg;
            }
            let outcome = run_scan(&config)?;
            let m = &outcome.manifest;
            println!(
                "{} rows, {} failures, {:.2} s -> {}",
                m.rows,
                m.failures.len(),
                m.wall_time_seconds,
                config.output_dir.display()
            );
            for f in &m.failures {
                eprintln!("failed: param {} realization {}: {}", f.param, f.realization, f.error);
            }
            Ok(if outcome.all_succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Analyze {
            input,
            min_r,
            max_r,
            center,
            half_size,
            out,
            svg,
        } => {
            let n = CouplingMatrix::read_csv(&input)?.size();
            let window = BandWindow::new(
                center.unwrap_or(n / 2),
                half_size.unwrap_or(n),
                min_r,
                max_r.unwrap_or(usize::MAX),
            );
            let report = analyze_matrix(&input, &window, &out, svg.value().unwrap_or(true))?;
            println!("{}", serde_json::to_string_pretty(&report.sparsity)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config, seed, out } => {
            let mut config = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                    serde_json::from_str::<OracleConfig>(&text).map_err(|e| Error::Config(e.to_string()))?
                }
                None => OracleConfig::default(),
            };
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let cases = run_oracle(&config, &out)?;
            println!("seed,spreading,network,deviation,ok");
            for c in &cases {
                println!(
                    "{},{:.6},{:.6},{:.4},{}",
                    c.seed, c.spreading, c.network, c.relative_deviation, c.within_tolerance
                );
            }
            Ok(if cases.iter().all(|c| c.within_tolerance) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Avg { input, band, shape } => {
            let report = average_matrix(&input, shape.into(), band)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
