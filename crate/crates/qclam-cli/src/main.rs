//! `qclam`: reproducible numerical experiments on quasiconformal maps,
//! holomorphic motions, laminar currents and smooth approximation.

mod commands;
mod options;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use options::{parse_complex, Options};
use qclam::{Error, C64};

#[derive(Parser, Debug)]
#[command(name = "qclam", version, about = "Grid experiments with Beltrami equations, motions and currents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal solution of a Beltrami equation on the grid.
    BeltramiSolve {
        /// Built-in coefficient (`zero`, `radial-stretch:K=2`, `bump:A=0.001`) or a CSV grid.
        field: String,
    },
    /// Disjointness, holomorphy, Schwarz and Harnack checks of a motion.
    MotionCheck {
        /// Built-in family name or motion JSON file.
        motion: String,
    },
    /// Holonomy between two fibers and the Beltrami coefficient of `h_{0,z}`.
    MotionHolonomy {
        motion: String,
        #[arg(long, value_parser = parse_complex, default_value = "0,0")]
        source: C64,
        #[arg(long, value_parser = parse_complex)]
        target: C64,
    },
    /// Mass of a current over a disk in the base.
    CurrentMass {
        current: String,
        #[arg(long, value_parser = parse_complex, default_value = "0,0")]
        center: C64,
        #[arg(long, default_value_t = 0.9)]
        radius: f64,
    },
    /// Closedness and directedness residuals over the default dictionary.
    CurrentResiduals { current: String },
    /// Leafwise density of S with respect to a dominating T.
    CurrentDecompose { s: String, t: String },
    /// Refinement of a current toward a single leaf.
    CurrentRefine {
        current: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// `psi(z, w)`: real part of this expression, times a bump in z, is the 2-form coefficient.
        #[arg(long, default_value = "1")]
        form: String,
    },
    /// Smooth approximation pipeline over a sweep of epsilon.
    ApproxRun {
        /// Approximation config JSON; defaults apply when omitted.
        config: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::BeltramiSolve { field } => commands::beltrami_solve(&cli.options, &field),
        Command::MotionCheck { motion } => commands::motion_check(&cli.options, &motion),
        Command::MotionHolonomy { motion, source, target } => {
            commands::motion_holonomy(&cli.options, &motion, source, target)
        }
        Command::CurrentMass { current, center, radius } => commands::current_mass(&cli.options, &current, center, radius),
        Command::CurrentResiduals { current } => commands::current_residuals(&cli.options, &current),
        Command::CurrentDecompose { s, t } => commands::current_decompose(&cli.options, &s, &t),
        Command::CurrentRefine { current, depth, form } => commands::current_refine(&cli.options, &current, depth, &form),
        Command::ApproxRun { config } => commands::approx_run(&cli.options, config.as_deref()),
    };
    match result {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qclam: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for bad input, 2 when the numerics fail on valid input.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical { .. } | Error::Domain(_) | Error::Degenerate { .. } | Error::ContradictionWitness { .. } => 2,
        _ => 1,
    }
}
