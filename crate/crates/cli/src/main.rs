use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mvip::bench::{rate_from_csv, run_file};
use mvip::problems::{gen_cs, gen_lpa, InstanceFile, L2Instance, LpaParams};

#[derive(Parser)]
#[command(
    name = "mvip-bench",
    version,
    about = "Benchmark harness for monotone inclusion solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Cs,
    Lpa,
    L2,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML spec; exits non-zero unless every cell is VALID.
    Run {
        spec: PathBuf,
        /// Output directory (overrides `output_dir` in the spec).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an instance file. Dimensions: cs/lpa take `d m l`, l2 takes `n case`.
    Gen {
        family: Family,
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise level in dB; omit together with --noiseless for exact data.
        #[arg(long, default_value_t = 40.0)]
        snr: f64,
        #[arg(long)]
        noiseless: bool,
        /// l1 weight; defaults to the data-driven rule for cs, 0.01 for lpa.
        #[arg(long)]
        rho: Option<f64>,
        /// Write here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the rate slope of a convergence CSV.
    Rate { trace: PathBuf },
}

fn dims3(dims: &[usize], default: [usize; 3]) -> Result<(usize, usize, usize)> {
    match dims.len() {
        0 => Ok((default[0], default[1], default[2])),
        3 => Ok((dims[0], dims[1], dims[2])),
        n => bail!("expected 3 dimensions (d m l), got {n}"),
    }
}

fn gen(
    family: Family,
    dims: &[usize],
    seed: u64,
    snr: Option<f64>,
    rho: Option<f64>,
) -> Result<InstanceFile> {
    Ok(match family {
        Family::Cs => {
            let (d, m, l) = dims3(dims, [512, 256, 10])?;
            InstanceFile::from(&gen_cs(d, m, l, snr, rho, seed)?)
        }
        Family::Lpa => {
            let (d, m, l) = dims3(dims, [512, 256, 10])?;
            let mut params = LpaParams::default();
            if let Some(r) = rho {
                params.rho = r;
            }
            InstanceFile::from(&gen_lpa(d, m, l, snr, params, seed)?)
        }
        Family::L2 => {
            let (n, case) = match dims.len() {
                0 => (1001, 1),
                2 => (dims[0], dims[1]),
                k => bail!("expected 2 dimensions (n case), got {k}"),
            };
            let case = u8::try_from(case).context("case id out of range")?;
            InstanceFile::from(&L2Instance::new(n, case)?)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { spec, out } => {
            let (_, report) = run_file(&spec, out.as_deref())
                .with_context(|| format!("running {}", spec.display()))?;
            print!("{}", report.to_text());
            Ok(if report.all_valid() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Gen {
            family,
            dims,
            seed,
            snr,
            noiseless,
            rho,
            out,
        } => {
            let snr = (!noiseless).then_some(snr);
            let file = gen(family, &dims, seed, snr, rho)?;
            match out {
                Some(path) => file
                    .write(&path)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", file.to_json()?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rate { trace } => {
            let slope =
                rate_from_csv(&trace).with_context(|| format!("reading {}", trace.display()))?;
            println!("{slope:.6}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
