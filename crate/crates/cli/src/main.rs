use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coform_core::campaign::{load_config, run_campaign};
use coform_core::complexity::{complexity_table, complexity_table_csv};
use coform_core::deviation::{DeviationModel, HistoryLedger, ModelKind};
use coform_core::engine::{brute_force_stable_set, run_formation, CachedOracle, FormationOptions};
use coform_core::miso::{
    generate_realization_given_tx, place_transmitters, realization_rng, substream_rng,
    NetworkConfig, RateOracle, DEPLOYMENT_STREAM,
};
use coform_core::{CoalitionStructure, Error, PlayerSet};

const EXIT_VALIDATION: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "coform",
    about = "Coalition formation simulator for MISO interference channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo coalition formation campaign from a config file.
    Run {
        /// Campaign configuration file (key = value lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the realization count from the config file.
        #[arg(long)]
        realizations: Option<usize>,
        /// Override the output directory from the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the merge/split deviation complexity table as CSV.
    Complexity {
        /// Largest player count n to tabulate.
        #[arg(long = "n-max")]
        n_max: usize,
        /// Deviation bound q; repeat the flag for several columns.
        #[arg(long = "q", required = true)]
        q: Vec<usize>,
    },
    /// Run one formation on a random network and cross-check the result
    /// against the brute-force stability oracle.
    Oracle {
        /// Number of links (2..=7; brute force enumerates all partitions).
        #[arg(long)]
        n: usize,
        /// Deviation model: merge, split, merge_split, or individual.
        #[arg(long)]
        model: String,
        /// Deviation bound for the group-based models.
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Seed for the channel realization.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::StepLimit { .. } => EXIT_INVARIANT,
        _ => EXIT_VALIDATION,
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run {
            config,
            seed,
            realizations,
            out,
        } => cmd_run(&config, seed, realizations, out),
        Command::Complexity { n_max, q } => cmd_complexity(n_max, &q),
        Command::Oracle { n, model, q, seed } => cmd_oracle(n, &model, q, seed),
    }
}

fn cmd_run(
    config_path: &Path,
    seed: Option<u64>,
    realizations: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, Error> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
        config.network.seed = seed;
    }
    if let Some(realizations) = realizations {
        config.realizations = realizations;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    config.validate()?;

    let output = run_campaign(&config)?;
    println!(
        "campaign: {} links, {} antennas, {} realizations, seed {}",
        config.network.n_links, config.network.antennas, config.realizations, config.seed
    );
    println!("model        q  mean_sum_rate  se      link_rate  coop   coalitions  steps   evals");
    for m in &output.stats.per_model {
        println!(
            "{:<12} {:<2} {:<14.4} {:<7.4} {:<10.4} {:<6.2} {:<11.2} {:<7.2} {:<.1}",
            m.model,
            m.q,
            m.mean_sum_rate,
            m.se_sum_rate,
            m.mean_link_rate,
            m.mean_cooperating,
            m.mean_coalitions,
            m.mean_steps,
            m.mean_evals
        );
    }
    println!("artifacts written to {}", config.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_complexity(n_max: usize, qs: &[usize]) -> Result<ExitCode, Error> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("--n-max must be at least 1".into()));
    }
    if let Some(&bad) = qs.iter().find(|&&q| q < 2) {
        return Err(Error::InvalidParameter(format!(
            "--q must be at least 2, got {bad}"
        )));
    }
    print!("{}", complexity_table_csv(&complexity_table(n_max, qs)));
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(n: usize, model_text: &str, q: usize, seed: u64) -> Result<ExitCode, Error> {
    if !(2..=7).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "--n must be in 2..=7 for the brute-force cross-check, got {n}"
        )));
    }
    let kind: ModelKind = model_text.parse()?;
    let model = match kind {
        ModelKind::Individual => DeviationModel::individual(),
        other => DeviationModel::new(other, q)?,
    };
    let network = NetworkConfig {
        n_links: n,
        antennas: n,
        seed,
        ..NetworkConfig::default()
    };
    let tx = place_transmitters(&network, &mut substream_rng(seed, DEPLOYMENT_STREAM))?;
    let chan = generate_realization_given_tx(&network, &tx, &mut realization_rng(seed, 0))?;

    let players = PlayerSet::new(n)?;
    let init = if kind == ModelKind::Split {
        CoalitionStructure::grand(players)
    } else {
        CoalitionStructure::singletons(players)
    };
    let mut oracle = CachedOracle::new(RateOracle::new(&chan, &network));
    let outcome = run_formation(&mut oracle, &model, &init, &FormationOptions::default())?;

    println!("n={n} t={n} seed={seed} model={kind} q={}", model.q());
    println!("initial structure: {init}");
    if outcome.trace.is_empty() {
        println!("trace: (no accepted deviations)");
    } else {
        println!("trace:");
        for step in &outcome.trace {
            println!("  {}", step.render());
        }
    }
    println!("stable structure: {}", outcome.state.current);
    println!(
        "steps: {}  candidate evaluations: {}  unrestricted-stable: {}",
        outcome.state.step_count, outcome.state.candidate_evals, outcome.unrestricted_stable
    );

    let ledger = match kind {
        ModelKind::MergeSplit | ModelKind::Individual => outcome.state.ledger.clone(),
        _ => HistoryLedger::empty(players),
    };
    let stable_set = brute_force_stable_set(&mut oracle, &model, n, &ledger)?;
    println!("brute-force stable set: {} structures", stable_set.len());
    if stable_set.contains(&outcome.state.current) {
        println!("agreement: OK");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("agreement: FAILED (formation output is not in the stable set)");
        Ok(ExitCode::from(EXIT_INVARIANT))
    }
}
