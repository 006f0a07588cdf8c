use clap::Parser;
use dreamplan_cli::args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => dreamplan_cli::run::cmd_run(&a.common),
        Command::Sweep(a) => dreamplan_cli::sweep::cmd_sweep(&a.common),
        Command::Ablate(a) => dreamplan_cli::ablate::cmd_ablate(a),
        Command::Profile(a) => dreamplan_cli::profile::cmd_profile(&a.common),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
