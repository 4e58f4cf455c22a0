//! Command-line entry point. `LMAPF_LOG` selects log verbosity
//! (error/warn/info/debug/trace).

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lmapf::mapgen::make_instance;
use lmapf::GridMap;
use lmapf_bench::{config::RunConfig, runner, summary, trace};

#[derive(Parser)]
#[command(name = "lmapf-bench", about = "Lifelong multi-agent pathfinding benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured maps and instance files into the output dir.
    Gen {
        /// Suite configuration file (flat key = value lines).
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured suite; writes results.csv and results.jsonl.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Reduce a results.csv to per-group means and confidence intervals.
    Summarize {
        /// Path to a results.csv produced by `run`.
        #[arg(long)]
        results: PathBuf,
        /// Summary CSV destination (defaults to summary.csv next to results).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a recorded episode trace and verify the positions.
    Replay {
        /// Map file the trace was recorded on.
        #[arg(long)]
        map: PathBuf,
        /// Episode trace (JSON lines).
        #[arg(long)]
        trace: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(RunConfig::parse(&text)?)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LMAPF_LOG", "info")).init();
    match Cli::parse().command {
        Command::Gen { config } => {
            let cfg = load_config(&config)?;
            fs::create_dir_all(&cfg.out_dir)?;
            for (spec, map) in runner::suite_maps(&cfg)? {
                let map_path = cfg.out_dir.join(format!("{}.map", spec.id()));
                fs::write(&map_path, map.format())?;
                println!("wrote {}", map_path.display());
                for &n_agents in &cfg.agents {
                    for &seed in &cfg.seeds {
                        let instance = make_instance(&map, n_agents, cfg.family, seed)?;
                        let path = cfg
                            .out_dir
                            .join(format!("{}-a{}-s{}.inst", spec.id(), n_agents, seed));
                        fs::write(&path, instance.format())?;
                        println!("wrote {}", path.display());
                    }
                }
            }
        }
        Command::Run { config, out_dir } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = out_dir {
                cfg.out_dir = dir;
            }
            let rows = runner::run_suite(&cfg)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} runs recorded in {} ({} failed)",
                rows.len(),
                cfg.out_dir.join("results.csv").display(),
                failed
            );
        }
        Command::Summarize { results, out } => {
            let rows = runner::read_rows(&results)?;
            let summary_rows = summary::summarize(&rows);
            let out = out.unwrap_or_else(|| {
                results.parent().unwrap_or(std::path::Path::new(".")).join("summary.csv")
            });
            summary::write_summary(&out, &summary_rows)?;
            println!("{}", summary::SUMMARY_HEADER);
            for row in &summary_rows {
                println!("{}", row.to_csv());
            }
            println!("summary written to {}", out.display());
        }
        Command::Replay { map, trace: trace_path } => {
            let text = fs::read_to_string(&map)
                .with_context(|| format!("reading map {}", map.display()))?;
            let grid = GridMap::parse(&text)?;
            let records = trace::read_trace(&trace_path)?;
            let checked = trace::replay_check(&grid, &records)?;
            println!(
                "replayed {} transitions over {} steps: positions confirmed",
                checked,
                records.len()
            );
        }
    }
    Ok(())
}
