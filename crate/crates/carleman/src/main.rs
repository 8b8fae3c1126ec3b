use carleman::experiment::{list_corpus, load_config, run};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "carleman", about = "Config-driven experiments on Denjoy-Carleman numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML experiment config; exit 0 iff every assertion passes
    Run {
        config: PathBuf,
        /// Output directory for CSV/JSON artifacts
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads for grid-parallel stages
        #[arg(long)]
        threads: Option<usize>,
        /// Seed for randomized sampling (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the corpus table (functions, distributions, charts, systems)
    List {
        /// Substring filter on name or category
        filter: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    match Cli::parse().command {
        Command::List { filter } => {
            let rows = list_corpus(filter.as_deref().unwrap_or(""));
            println!("{:<22} {:<14} {:<5} {}", "name", "category", "dim", "jet order");
            for (name, cat, dim, order) in rows {
                println!("{name:<22} {cat:<14} {dim:<5} {order}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out_dir = cfg
                .out_dir
                .clone()
                .map(PathBuf::from)
                .unwrap_or(out);
            let body = || match run(&cfg, &out_dir) {
                Ok(outcome) => {
                    for a in &outcome.artifacts {
                        println!("wrote {}", a.display());
                    }
                    if outcome.passed {
                        println!("{}: all assertions passed", outcome.kind);
                        ExitCode::SUCCESS
                    } else {
                        for f in &outcome.failures {
                            eprintln!("contract failure: {f}");
                        }
                        ExitCode::from(1)
                    }
                }
                Err(carleman::Error::Config(msg)) => {
                    eprintln!("config error: {msg}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
            match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .expect("thread pool")
                    .install(body),
                None => body(),
            }
        }
    }
}
