use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tics_core::domains::{optimal_policy, AnyDomain, Domain, DomainKind, MazeAction, MazeDomain};
use tics_core::harness::{run_batch, sweep, write_batch, write_sweep, BatchSummary, ExperimentConfig, SweepAxis};
use tics_core::teacher::ORACLE_GAMMA;

#[derive(Parser)]
#[command(name = "tics", version, about = "Interactive task learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one batch of seeded sessions.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sessions: Option<usize>,
        /// Base seed; session k uses seed + k.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run one batch per value of a teacher parameter.
    Sweep {
        /// p_instruction, p_feedback, e_instruction or e_feedback.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the canonical optimal policy of a domain.
    Oracle {
        #[arg(long)]
        domain: DomainKind,
    },
    /// Serve live teaching sessions over HTTP.
    Serve {
        /// Listen address.
        #[arg(long, env = "TICS_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Overrides the port of the listen address.
        #[arg(long)]
        port: Option<u16>,
    },
}

fn load_config(
    path: &Path,
    sessions: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(n) = sessions {
        cfg.sessions = n;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn describe(s: &BatchSummary) -> String {
    let p99 = s
        .p99_steps_to_convergence
        .map_or_else(|| "NA".to_string(), |p| p.to_string());
    format!(
        "{} {}: p99 {} ({} not converged of {}), max signals {} (feedback {}, instructions {})",
        s.domain,
        s.model,
        p99,
        s.non_converged_count,
        s.sessions,
        s.max_total_teaching_signals,
        s.max_feedback_count,
        s.max_instruction_count
    )
}

fn print_oracle(kind: DomainKind) {
    let domain = AnyDomain::build(kind);
    match &domain {
        AnyDomain::Sorting(d) => print_policy(d),
        AnyDomain::Maze(d) => {
            print_policy(d);
            print_maze_arrows(d);
        }
    }
}

fn print_policy<D: Domain>(d: &D) {
    let oracle = optimal_policy(d, ORACLE_GAMMA);
    println!("# {}: {} decision states, gamma {ORACLE_GAMMA}", d.name(), oracle.decision_states.len());
    println!("state\tdescription\taction\tvalue\toptimal_actions");
    for s in d.decision_states() {
        let id = d.state_id(&s);
        let set: Vec<&str> = oracle.optimal_sets[id.0].iter().map(|&a| d.action_name(a)).collect();
        println!(
            "{}\t{:?}\t{}\t{:.6}\t{}",
            id.0,
            s,
            d.action_name(oracle.action(id)),
            oracle.values[id.0],
            set.join(",")
        );
    }
}

fn print_maze_arrows(d: &MazeDomain) {
    let oracle = optimal_policy(d, ORACLE_GAMMA);
    let map = d.map();
    let text = map.render();
    println!();
    for (y, line) in text.lines().enumerate() {
        let row: String = line
            .chars()
            .enumerate()
            .map(|(x, c)| {
                if c != '.' {
                    return c;
                }
                let id = y * map.width() + x;
                match MazeAction::ALL[oracle.canonical[id].0] {
                    MazeAction::North => '^',
                    MazeAction::East => '>',
                    MazeAction::South => 'v',
                    MazeAction::West => '<',
                }
            })
            .collect();
        println!("{row}");
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            sessions,
            seed,
            out,
            workers,
        } => {
            let cfg = load_config(&config, sessions, seed, workers)?;
            let batch = run_batch(&cfg)?;
            write_batch(&batch.summary, &out)?;
            println!("{}", describe(&batch.summary));
        }
        Command::Sweep {
            axis,
            values,
            config,
            sessions,
            seed,
            out,
            workers,
        } => {
            let cfg = load_config(&config, sessions, seed, workers)?;
            let table = sweep(&cfg, axis, &values)?;
            write_sweep(&table, &out)?;
            for e in &table.entries {
                println!("{axis}={}: {}", e.value, describe(&e.summary));
                println!("{axis}={}: baseline {}", e.value, describe(&e.baseline));
            }
        }
        Command::Oracle { domain } => print_oracle(domain),
        Command::Serve { bind, port } => {
            let mut addr: std::net::SocketAddr = bind
                .parse()
                .with_context(|| format!("invalid listen address `{bind}`"))?;
            if let Some(p) = port {
                addr.set_port(p);
            }
            tics_service::serve(addr)?;
        }
    }
    Ok(())
}
