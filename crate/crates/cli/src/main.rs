//! `rlens`: dataset generation, training, explanation, metric evaluation,
//! and chart emission for the waveform spoof-detector toolkit.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numeric
//! degeneracy.

mod commands;
mod config;
mod provenance;
mod svg;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rlens", version, about = "Waveform attribution toolkit driver")]
struct Cli {
    /// Rayon worker threads (0 = library default). Output bytes are
    /// identical for any setting.
    #[arg(long, global = true, env = "RLENS_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic train/eval/partial splits.
    Gen(commands::gen::GenArgs),
    /// Train the toy classifier and report the held-out EER.
    Train(commands::train::TrainArgs),
    /// Write per-utterance heatmaps for one attribution method.
    Explain(commands::explain::ExplainArgs),
    /// Evaluate heatmaps: faithfulness, perturbation, partial-spoof
    /// localization, category RCQ.
    Eval(commands::eval::EvalArgs),
    /// Render normalized RCQ reports as a grouped bar chart (SVG).
    Report(commands::report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Ignore failure if a pool already exists (tests build one).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Gen(args) => commands::gen::run(&args),
        Command::Train(args) => commands::train::run(&args),
        Command::Explain(args) => commands::explain::run(&args),
        Command::Eval(args) => commands::eval::run(&args),
        Command::Report(args) => commands::report::run(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
