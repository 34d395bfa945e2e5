//! `hyperent`: simulate HOM scans and polarization sweeps, fit the frequency
//! fringe, and certify the two-ququart fidelity.

mod config;
mod error;
mod output;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperent::certification::ConstraintKind;

use crate::config::{Format, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_sig, OutDir};
use crate::stages::Balance;

#[derive(Parser)]
#[command(
    name = "hyperent",
    version,
    about = "Polarization-frequency hyperentanglement: simulate, fit, certify"
)]
#[command(
    after_help = "Config keys can be overridden with HYPERENT_<SECTION>__<KEY>=value, e.g. HYPERENT_SCAN__SEED=7.\nExit codes: 0 success, 1 usage or config error, 2 numeric failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the fringe scan, noiseless model curve, mode spectra and
    /// polarization sweeps.
    Simulate(RunArgs),
    /// Fit a fringe scan and build the restricted frequency state.
    Fit(FitArgs),
    /// Lower-bound the global fidelity from the two subspace fidelities.
    Certify(CertifyArgs),
    /// Simulate, fit and certify in one run, with a summary of every stage.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override scan.seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override output.directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override output.format for the tabular outputs.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Override certification.tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Fringe scan (`tau_ps,coincidences,total` CSV, or JSON).
    #[arg(value_name = "FRINGE")]
    fringe: PathBuf,
    /// Mode spectra (`abscissa,counts_a,counts_b` CSV, or JSON) giving the
    /// pair balance.
    #[arg(value_name = "SPECTRA", required_unless_present = "p_omega")]
    spectra: Option<PathBuf>,
    /// Pair balance `p_w`, used instead of spectra.
    #[arg(long, value_name = "P", conflicts_with = "spectra")]
    p_omega: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Subspace fidelities hold with equality.
    Equal,
    /// Subspace fidelities are lower bounds.
    AtLeast,
}

#[derive(Args)]
struct CertifyArgs {
    /// Polarization subspace fidelity.
    #[arg(value_name = "F_P", allow_negative_numbers = true)]
    f_p: f64,
    /// Frequency subspace fidelity.
    #[arg(value_name = "F_OMEGA", allow_negative_numbers = true)]
    f_omega: f64,
    /// Solver duality-gap tolerance.
    #[arg(long, value_name = "X", default_value_t = hyperent::certification::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, value_enum, default_value = "equal")]
    mode: Mode,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

fn load_config(args: &RunArgs) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.scan.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.directory = out.clone();
    }
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            let out = OutDir::create(&cfg.output.directory)?;
            let sim = stages::simulate(&cfg)?;
            stages::write_simulation(&sim, &out, cfg.output.format)
        }
        Command::Fit(args) => {
            let scan = stages::load_scan(&args.fringe)?;
            let spectra = args
                .spectra
                .as_deref()
                .map(stages::load_spectra)
                .transpose()?;
            let balance = match (&spectra, args.p_omega) {
                (Some(s), _) => Balance::Spectra(s),
                (None, Some(p)) => {
                    stages::check_unit("--p-omega", p)?;
                    Balance::Given(p)
                }
                (None, None) => return Err(CliError::Usage("give SPECTRA or --p-omega".into())),
            };
            let outcome = stages::fit(&scan, balance)?;
            let out = OutDir::create(&args.out)?;
            stages::write_fit(&outcome, &out)?;
            println!(
                "V_w {} (raw {}), F_w {}, C_w {}",
                fmt_sig(outcome.fit.params.visibility),
                fmt_sig(outcome.bounds.raw_visibility),
                fmt_sig(outcome.rho.f_omega),
                fmt_sig(outcome.rho.concurrence_wootters)
            );
            if !outcome.fit.converged {
                return Err(CliError::Numeric("fringe fit did not converge".into()));
            }
            Ok(())
        }
        Command::Certify(args) => {
            let mode = match args.mode {
                Mode::Equal => ConstraintKind::Equal,
                Mode::AtLeast => ConstraintKind::AtLeast,
            };
            let cert = stages::certify(args.f_p, args.f_omega, args.tol, mode)?;
            let out = OutDir::create(&args.out)?;
            out.write_json("certificate.json", &cert)?;
            println!(
                "F_pw >= {}, d_ent = {}",
                fmt_sig(cert.fidelity_lower_bound),
                cert.d_ent
            );
            stages::require_optimal(&cert)
        }
        Command::Pipeline(args) => {
            let mut cfg = load_config(&args.run)?;
            if let Some(tol) = args.tol {
                cfg.certification.tolerance = tol;
            }
            cfg.validate()
                .map_err(|e| CliError::Usage(format!("config: {e}")))?;
            let out = OutDir::create(&cfg.output.directory)?;
            let result = stages::pipeline(&cfg, &out)?;
            let s = &result.summary;
            println!(
                "F_p {}, F_w {}, F_pw >= {}, d_ent = {}",
                fmt_sig(s.certified.f_p),
                fmt_sig(s.certified.f_omega),
                fmt_sig(s.certified.fidelity_lower_bound),
                s.certified.d_ent
            );
            stages::require_optimal(&result.certificate)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
