//! Command-line pipeline: simulate a broadband scan, analyse it into a
//! reflectance map, fit the connector model, bound the leakage and verify
//! the fidelity bound.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thaspec::spectral::ConstantsSet;
use thaspec::trace::AcquisitionMode;
use thaspec::Error;

use crate::commands::{Overrides, SecurityInputs};
use crate::config::PipelineConfig;

/// Exit status for invalid input, configuration or I/O failures.
pub const EXIT_INPUT: u8 = 2;
/// Exit status for numerical failures and violated bounds.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "thaspec",
    version,
    about = "Broadband photon-counting OTDR and Trojan-horse leakage analysis"
)]
pub struct Cli {
    /// JSON pipeline config; relative paths inside resolve against it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for Monte-Carlo acquisition and random-state trials.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Acquisition mode: mc or analytic.
    #[arg(long, global = true)]
    pub mode: Option<AcquisitionMode>,
    /// Eve's pulse repetition rate in Hz.
    #[arg(long, global = true)]
    pub f_eve_hz: Option<f64>,
    /// Quantum bit error rate of the protocol.
    #[arg(long, global = true)]
    pub qber: Option<f64>,
    /// Physical constants: codata or paper.
    #[arg(long, global = true)]
    pub constants: Option<ConstantsSet>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate traces over the wavelength grid.
    Simulate,
    /// Detect and calibrate peaks in a simulated or measured scan.
    Analyze {
        /// Directory holding manifest.json and the trace CSVs.
        #[arg(long)]
        scan: PathBuf,
    },
    /// Fit the connector cavity model to a reflectance spectrum in dB.
    FitConnector {
        #[arg(long)]
        spectrum: PathBuf,
    },
    /// Leakage bound from a reflectance spectrum and the power budget.
    SecurityReport {
        #[arg(long)]
        reflectance: PathBuf,
        /// Flat power limit in dBm; overrides the config.
        #[arg(long, allow_negative_numbers = true)]
        p_max_dbm: Option<f64>,
        /// Flat transmittance in dB; overrides the config.
        #[arg(long, allow_negative_numbers = true)]
        transmittance_db: Option<f64>,
    },
    /// Check the fidelity bound on random states and the optimal states.
    VerifyFidelity {
        /// Trials per truncation dimension; overrides the config.
        #[arg(long)]
        trials: Option<usize>,
    },
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Runs one command and returns the lines to print on success.
pub fn execute(cli: &Cli) -> Result<Vec<String>, Failure> {
    let mut cfg = PipelineConfig::load_or_default(cli.config.as_deref())?;
    Overrides {
        seed: cli.seed,
        mode: cli.mode,
        f_eve_hz: cli.f_eve_hz,
        qber: cli.qber,
        constants: cli.constants,
    }
    .apply(&mut cfg);
    let out = &cli.out;

    match &cli.command {
        Command::Simulate => {
            let s = commands::simulate(&cfg, out)?;
            let mut lines = s.warnings.iter().map(|w| format!("warning: {w}")).collect::<Vec<_>>();
            lines.push(format!("wrote {} traces to {}", s.traces, out.display()));
            Ok(lines)
        }
        Command::Analyze { scan } => {
            let s = commands::analyze(&cfg, scan, out)?;
            Ok(vec![format!(
                "{} wavelengths, {} peaks; worst case {:.2} dB at {} nm",
                s.wavelengths, s.peaks, s.worst_case_db, s.worst_case_nm
            )])
        }
        Command::FitConnector { spectrum } => {
            let r = commands::fit(&cfg, spectrum, out)?;
            let mut lines = vec![format!(
                "n_d = {:.4}, h = {:.5} um, rms = {:.3} dB",
                r.model.n_d, r.model.h_um, r.residual_rms_db
            )];
            if r.at_bound {
                lines.push("warning: fit parameter at bound".into());
            }
            Ok(lines)
        }
        Command::SecurityReport {
            reflectance,
            p_max_dbm,
            transmittance_db,
        } => {
            let inputs = SecurityInputs {
                reflectance: Some(reflectance.clone()),
                p_max_dbm: *p_max_dbm,
                transmittance_db: *transmittance_db,
            };
            let r = commands::security_report(&cfg, &inputs, out)?;
            let w = r.worst_case;
            Ok(vec![format!(
                "worst case at {} nm: mu_eve = {:e}, chi <= {:e} bits",
                w.wavelength_nm, w.mu_eve, w.chi_upper
            )])
        }
        Command::VerifyFidelity { trials } => {
            if let Some(t) = trials {
                cfg.fidelity.trials = *t;
            }
            let s = commands::verify_fidelity(&cfg, out)?;
            let worst_opt = s.optimal.iter().map(|o| o.deviation).fold(0.0, f64::max);
            let line = format!(
                "{} violations, min gap {:e}, optimal-state deviation {:e}",
                s.violations, s.min_gap, worst_opt
            );
            if s.violations > 0 || worst_opt > cfg.fidelity.tolerance {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    message: format!("fidelity bound violated: {line}"),
                });
            }
            Ok(vec![line])
        }
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
