//! Command-line front end for the `timdp` solvers.

pub mod args;
pub mod commands;
pub mod exit;
pub mod repro;

use args::{Cli, Command};

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Bench(a) => commands::bench(a),
        Command::Repro(a) => repro::repro(a),
    }
}
