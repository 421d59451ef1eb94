use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use domsim::arena::{benchmark_kingdom, benchmark_table, run_match, FirstPlayerRule, KingdomChoice, MatchConfig};
use domsim::bots::{preset, Policy, RandomBot, PRESET_NAMES};
use domsim::cards::{sample_kingdom, Kingdom};
use domsim::evolve::{evolve_run, load_candidate, EvolutionConfig};
use domsim::logformat::{corpus_stats, parse_log, read_log_file, summarize, write_document, write_log};
use domsim::rating::{interval, parse_results, rate_games, DEFAULT_TAU};
use domsim::rl::{evaluate_policy, load_checkpoint, self_play_train, DqnBot, TrainConfig};
use domsim::Error;

#[derive(Parser)]
#[command(name = "domsim", version, about = "Two-player Dominion simulator and agent toolkit")]
struct Cli {
    /// Base seed; identical arguments give identical output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for game execution (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KingdomArg {
    /// Ten comma-separated card names, or `random` (drawn from --seed).
    #[arg(long)]
    kingdom: Option<String>,
}

impl KingdomArg {
    fn resolve(&self, seed: u64) -> Result<Kingdom, Error> {
        match self.kingdom.as_deref() {
            None => Ok(benchmark_kingdom()),
            Some("random") => Ok(sample_kingdom(seed)),
            Some(list) => Kingdom::parse(list),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum First {
    A,
    B,
    Alternate,
}

#[derive(Subcommand)]
enum Command {
    /// Play a match between two bots.
    Simulate {
        /// Preset name, `random`, a bot/leaderboard JSON file, or a DQN checkpoint.
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_enum, default_value = "a")]
        first: First,
        #[command(flatten)]
        kingdom: KingdomArg,
        /// Write one log file per game into this directory.
        #[arg(long)]
        logs: Option<PathBuf>,
    },
    /// Candidates against reference bots, the reference moving first.
    Benchmark {
        #[arg(long, required = true)]
        candidate: Vec<String>,
        /// Reference bots (default: every preset).
        #[arg(long)]
        reference: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[command(flatten)]
        kingdom: KingdomArg,
    },
    /// Coevolve buy menus by round-robin tournament.
    Evolve {
        /// JSON evolution config; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        games: Option<usize>,
        #[arg(long)]
        final_games: Option<usize>,
        /// Where to write the leaderboard JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        kingdom: KingdomArg,
    },
    /// Train a DQN buyer by self-play.
    Train {
        #[arg(long)]
        checkpoint: PathBuf,
        /// JSON training config; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Self-play game budget.
        #[arg(long)]
        games: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[command(flatten)]
        kingdom: KingdomArg,
    },
    /// Evaluate a DQN checkpoint against a bot that moves first.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "big-money")]
        opponent: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[command(flatten)]
        kingdom: KingdomArg,
    },
    /// Parse game logs and print what they record.
    Parse {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Print the re-serialized log instead of a summary.
        #[arg(long)]
        echo: bool,
    },
    /// Corpus statistics over every log in a directory.
    Stats { dir: PathBuf },
    /// Glicko-2 ratings from a `player opponent score` results file.
    Rate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownCard(_) | Error::InvalidKingdom(_) | Error::UnknownPreset(_) | Error::Config(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn load_policy(spec: &str) -> Result<Box<dyn Policy>, Failure> {
    if spec == "random" {
        return Ok(Box::new(RandomBot));
    }
    let path = Path::new(spec);
    if path.is_file() {
        let name = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
        if spec.ends_with(".json") {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            return Ok(Box::new(load_candidate(&text, &name).map_err(|e| Failure::Data(e.to_string()))?));
        }
        let (net, _) = load_checkpoint(path).map_err(|e| Failure::Data(e.to_string()))?;
        return Ok(Box::new(DqnBot::new(name, net)));
    }
    Ok(Box::new(preset(spec)?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Simulate { a, b, n, first, kingdom, logs } => {
            let (pa, pb) = (load_policy(&a)?, load_policy(&b)?);
            let first_player = match first {
                First::A => FirstPlayerRule::AlwaysA,
                First::B => FirstPlayerRule::AlwaysB,
                First::Alternate => FirstPlayerRule::Alternate,
            };
            let choice = match kingdom.kingdom.as_deref() {
                Some("random") => KingdomChoice::Sampled,
                _ => KingdomChoice::Fixed(kingdom.resolve(seed)?),
            };
            let config = MatchConfig {
                kingdom: choice,
                first_player,
                keep_logs: logs.is_some(),
                ..MatchConfig::new(pa.as_ref(), pb.as_ref(), n, seed)
            };
            let result = run_match(&config);
            if let Some(dir) = logs {
                fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                for (i, record) in result.records.iter().enumerate() {
                    let path = dir.join(format!("game_{i:06}.txt"));
                    fs::write(&path, write_log(record)).map_err(|e| io_err(&path, e))?;
                }
            }
            if cli.json {
                print_json(&json!({
                    "policy_a": result.policy_a,
                    "policy_b": result.policy_b,
                    "wins_a": result.wins_a,
                    "ties": result.ties,
                    "wins_b": result.wins_b,
                    "aborted": result.aborted,
                    "mean_vp": result.mean_vp,
                    "mean_margin": result.mean_margin,
                    "first_mover_wins": result.first_mover_wins,
                    "second_mover_wins": result.second_mover_wins,
                }));
            } else {
                println!("{result}");
                println!("first mover wins {} / second mover wins {}", result.first_mover_wins, result.second_mover_wins);
            }
        }
        Command::Benchmark { candidate, reference, n, kingdom } => {
            let candidates = candidate.iter().map(|c| load_policy(c)).collect::<Result<Vec<_>, _>>()?;
            let references = if reference.is_empty() {
                PRESET_NAMES.iter().map(|p| load_policy(p)).collect::<Result<Vec<_>, _>>()?
            } else {
                reference.iter().map(|r| load_policy(r)).collect::<Result<Vec<_>, _>>()?
            };
            let c: Vec<&dyn Policy> = candidates.iter().map(|p| p.as_ref()).collect();
            let r: Vec<&dyn Policy> = references.iter().map(|p| p.as_ref()).collect();
            let table = benchmark_table(&c, &r, n, kingdom.resolve(seed)?, seed)?;
            if cli.json {
                print_json(&table);
            } else {
                println!("{table}");
            }
        }
        Command::Evolve { config, generations, population, games, final_games, out, kingdom } => {
            let mut cfg: EvolutionConfig = match config {
                Some(p) => read_json(&p)?,
                None => EvolutionConfig::default(),
            };
            cfg.seed = seed;
            cfg.generations = generations.unwrap_or(cfg.generations);
            cfg.population_size = population.unwrap_or(cfg.population_size);
            cfg.games_per_pairing = games.unwrap_or(cfg.games_per_pairing);
            cfg.final_games_per_pairing = final_games.unwrap_or(cfg.final_games_per_pairing);
            let board = evolve_run(kingdom.resolve(seed)?, &cfg)?;
            if let Some(p) = out {
                fs::write(&p, board.to_json()).map_err(|e| io_err(&p, e))?;
            }
            if cli.json {
                println!("{}", board.to_json());
            } else {
                println!("{board}");
            }
        }
        Command::Train { checkpoint, config, games, iterations, kingdom } => {
            let mut cfg: TrainConfig = match config {
                Some(p) => read_json(&p)?,
                None => TrainConfig::default(),
            };
            cfg.seed = seed;
            cfg.games = games.unwrap_or(cfg.games);
            cfg.iterations = iterations.unwrap_or(cfg.iterations).min(cfg.games.max(1));
            if kingdom.kingdom.is_some() {
                cfg.kingdom = kingdom.resolve(seed)?;
            }
            let (_, report) = self_play_train(&cfg, Some(&checkpoint))?;
            if cli.json {
                print_json(&report);
            } else {
                println!(
                    "trained {} games, {} transitions, {} updates, final epsilon {:.3}, final loss {}",
                    report.games,
                    report.transitions,
                    report.updates,
                    report.final_epsilon,
                    report.losses.last().map_or("n/a".to_string(), |l| format!("{l:.5}"))
                );
                println!("checkpoint written to {}", checkpoint.display());
            }
        }
        Command::Eval { checkpoint, opponent, n, kingdom } => {
            let (net, cfg) = load_checkpoint(&checkpoint).map_err(|e| Failure::Data(e.to_string()))?;
            let k = if kingdom.kingdom.is_some() { kingdom.resolve(seed)? } else { cfg.kingdom };
            let opp = load_policy(&opponent)?;
            let r = evaluate_policy(&net, opp.as_ref(), k, n, seed);
            if cli.json {
                print_json(&json!({
                    "opponent": r.policy_a,
                    "wins": r.wins_b,
                    "ties": r.ties,
                    "losses": r.wins_a,
                    "win_rate": f64::from(r.wins_b) / f64::from(r.completed().max(1)),
                }));
            } else {
                println!(
                    "dqn vs {} (opponent first): W {} / T {} / L {}, win rate {:.3}",
                    r.policy_a,
                    r.wins_b,
                    r.ties,
                    r.wins_a,
                    f64::from(r.wins_b) / f64::from(r.completed().max(1))
                );
            }
        }
        Command::Parse { files, echo } => {
            let mut reports = Vec::new();
            for path in &files {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                let doc = parse_log(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
                if echo {
                    print!("{}", write_document(&doc));
                    continue;
                }
                let s = summarize(&doc);
                reports.push(json!({
                    "file": path.display().to_string(),
                    "events": doc.events.len(),
                    "length": s.length,
                    "turns": s.turns,
                    "vp": s.vp,
                    "winner": format!("{:?}", s.winner),
                    "gains": s.gains,
                    "plays": s.plays,
                }));
            }
            if echo {
                return Ok(());
            }
            if cli.json {
                print_json(&reports);
            } else {
                for r in &reports {
                    println!(
                        "{}: {} events, length {}, VP {} - {}, winner {}",
                        r["file"].as_str().unwrap_or_default(),
                        r["events"],
                        r["length"],
                        r["vp"][0],
                        r["vp"][1],
                        r["winner"].as_str().unwrap_or_default()
                    );
                }
            }
        }
        Command::Stats { dir } => {
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| io_err(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            paths.sort();
            let docs = paths
                .iter()
                .map(|p| read_log_file(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))))
                .collect::<Result<Vec<_>, _>>()?;
            let stats = corpus_stats(&docs).map_err(|e| Failure::Data(e.to_string()))?;
            if cli.json {
                print_json(&stats);
            } else {
                println!("{stats}");
            }
        }
        Command::Rate { file, tau } => {
            let text = fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
            let games = parse_results(&text).map_err(|e| Failure::Data(format!("{}: {e}", file.display())))?;
            let table = rate_games(&games, tau).map_err(|e| Failure::Data(e.to_string()))?;
            let rows: Vec<_> = table
                .iter()
                .map(|(name, r)| {
                    let (lo, hi) = interval(*r);
                    json!({ "player": name, "mu": r.mu, "phi": r.phi, "sigma": r.sigma, "interval": [lo, hi] })
                })
                .collect();
            if cli.json {
                print_json(&rows);
            } else {
                println!("{:<20} {:>8} {:>8} {:>9}  {:>19}", "Player", "mu", "phi", "sigma", "95% interval");
                for (name, r) in &table {
                    let (lo, hi) = interval(*r);
                    println!("{name:<20} {:>8.4} {:>8.4} {:>9.6}  ({lo:>8.4}, {hi:>8.4})", r.mu, r.phi, r.sigma);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nUsage: domsim [OPTIONS] <COMMAND>\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
