//! `topics-lab`: simulate epoch-based interest disclosure over browsing
//! traces and score denoising / re-identification attacks against it.

mod commands;
mod config;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::MissingAsset;
use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "topics-lab", version, about)]
struct Cli {
    /// Base seed for every random decision.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 uses all cores. Outputs never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Also emit SVG step plots next to the CSV outputs.
    #[arg(long, global = true)]
    svg: bool,

    /// Collapse lookups to registrable domains (reserved, not implemented).
    #[arg(long, global = true)]
    psl_fallback: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one domain, or a top-list into a rarity prior and ECDF.
    Classify {
        /// Taxonomy TSV (default: $TOPICS_LAB_ASSETS/taxonomy.tsv).
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Static mapping TSV (default: $TOPICS_LAB_ASSETS/mapping.tsv).
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Single domain to classify (printed to stdout).
        #[arg(long)]
        domain: Option<String>,
        /// Top-list file to classify into refdist.json + ecdf.csv.
        #[arg(long)]
        toplist: Option<PathBuf>,
        /// Top-list layout: plain, tranco, or crux.
        #[arg(long, default_value = "plain")]
        format: String,
        /// Top-list file (same as --toplist).
        #[arg(value_name = "TOPLIST")]
        input: Option<PathBuf>,
    },

    /// Build weekly top profiles plus stability/uniqueness tables.
    Profiles {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Browsing trace to ingest.
        #[arg(long)]
        history: PathBuf,
        /// Trace layout: history or web-routineness.
        #[arg(long, default_value = "history")]
        adapter: String,
        /// Top-list size T.
        #[arg(long = "top", default_value_t = 5)]
        top_size: usize,
        /// Pad short tops with uniform random topics.
        #[arg(long)]
        padding: bool,
        /// Count each domain once per epoch instead of once per visit.
        #[arg(long)]
        distinct_domains: bool,
        /// Epoch length in seconds.
        #[arg(long, default_value_t = topics_lab::epoch::DEFAULT_EPOCH_SECONDS)]
        epoch_length: i64,
        /// Epoch-1 start (Unix seconds); default: first visit's midnight.
        #[arg(long)]
        origin: Option<i64>,
    },

    /// Simulate API calls over weekly profiles.
    Simulate {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Profile report CSV (as written by `profiles`).
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Alternatively, a trace to build profiles from.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, default_value = "history")]
        adapter: String,
        /// Noise probability.
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        /// Disclosure window length in epochs.
        #[arg(long, default_value_t = 3)]
        tau: u32,
        #[arg(long = "top", default_value_t = 5)]
        top_size: usize,
        /// Weekly calls per user, modeled as distinct callers.
        #[arg(long, default_value_t = 100)]
        calls: u32,
        /// Enforce the witness requirement (needs --witness-allowed).
        #[arg(long)]
        witness: bool,
        /// Shuffle returned entries instead of epoch order.
        #[arg(long)]
        shuffle: bool,
        /// Pad short tops with uniform random topics.
        #[arg(long)]
        padding: bool,
        /// JSON file mapping caller id to allowed topic ids.
        #[arg(long)]
        witness_allowed: Option<PathBuf>,
    },

    /// Run an adversary evaluation.
    Attack {
        #[command(subcommand)]
        attack: AttackCommand,
    },

    /// Generate a synthetic population trace (and assets when absent).
    Synth {
        /// Pipeline-style TOML whose [synth] section seeds the values
        /// below; explicit flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reuse an existing taxonomy instead of synthesizing one.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Reuse an existing mapping instead of synthesizing one.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Population size [default: 1000].
        #[arg(long)]
        users: Option<usize>,
        /// Trace length in weeks [default: 5].
        #[arg(long)]
        weeks: Option<u32>,
        /// Top-list size T [default: 5].
        #[arg(long = "top")]
        top_size: Option<usize>,
        /// Probability a top topic persists to the next week [default: 0.6].
        #[arg(long)]
        stability: Option<f64>,
        /// Zipf exponent of topic popularity; 0 = uniform [default: 1].
        #[arg(long)]
        exponent: Option<f64>,
        /// Mean visits per user-week [default: 50].
        #[arg(long)]
        visits: Option<u32>,
        /// Synthesized taxonomy size [default: 469].
        #[arg(long)]
        omega: Option<usize>,
        /// Fraction of synthesized topics labeled higher-utility
        /// [default: 0.3].
        #[arg(long)]
        higher_fraction: Option<f64>,
        /// Domain-count ceiling in the synthesized mapping [default: 20].
        #[arg(long)]
        max_domains: Option<usize>,
    },

    /// Run the whole pipeline from a config file.
    Pipeline {
        /// TOML config; CLI flags override file values.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideFlags,
    },
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Flag noisy topics via the rarity prior and score the verdicts.
    Denoise {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Observation log (observations.jsonl).
        #[arg(long)]
        observations: PathBuf,
        /// Rarity prior (refdist.json from `classify --toplist`).
        #[arg(long)]
        prior: PathBuf,
        /// Flag topics observed on fewer than this many domains.
        #[arg(long, default_value_t = 10)]
        theta: u32,
        /// Disable the repeated-epoch override.
        #[arg(long)]
        no_repeat_rule: bool,
    },

    /// Cross-site re-identification over repeated simulation runs.
    Reid {
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Profile report CSV (as written by `profiles`).
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        tau: u32,
        #[arg(long = "top", default_value_t = 5)]
        top_size: usize,
    },
}

/// Pipeline-level overrides mirroring the config file sections.
#[derive(Args, Default)]
struct OverrideFlags {
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long)]
    toplist: Option<PathBuf>,
    /// Top-list layout: plain, tranco, or crux.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    tau: Option<u32>,
    #[arg(long = "top")]
    top_size: Option<usize>,
    #[arg(long)]
    theta: Option<u32>,
    #[arg(long)]
    witness: bool,
    #[arg(long)]
    shuffle: bool,
    #[arg(long)]
    padding: bool,
    #[arg(long)]
    calls: Option<u32>,
    #[arg(long)]
    runs: Option<u32>,
}

impl OverrideFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if self.taxonomy.is_some() {
            cfg.assets.taxonomy = self.taxonomy.clone();
        }
        if self.mapping.is_some() {
            cfg.assets.mapping = self.mapping.clone();
        }
        if self.history.is_some() {
            cfg.assets.history = self.history.clone();
        }
        if self.adapter.is_some() {
            cfg.assets.adapter = self.adapter.clone();
        }
        if self.toplist.is_some() {
            cfg.assets.toplist = self.toplist.clone();
        }
        if self.format.is_some() {
            cfg.assets.toplist_format = self.format.clone();
        }
        if let Some(p) = self.p {
            cfg.sim.p = p;
        }
        if let Some(tau) = self.tau {
            cfg.sim.tau = tau;
        }
        if let Some(top) = self.top_size {
            cfg.epoch.top_size = top;
        }
        if let Some(theta) = self.theta {
            cfg.attack.theta = theta;
        }
        if self.witness {
            cfg.sim.witness = true;
        }
        if self.shuffle {
            cfg.sim.shuffle = true;
        }
        if self.padding {
            cfg.epoch.padding = true;
        }
        if let Some(calls) = self.calls {
            cfg.sim.calls_per_user_per_week = calls;
        }
        if let Some(runs) = self.runs {
            cfg.attack.runs = runs;
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            eprintln!("error: cannot configure {} worker threads: {e}", cli.jobs);
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure_exit_code(&err))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if cli.psl_fallback {
        return Err(topics_lab::Error::Config(
            "--psl-fallback is reserved and not implemented".into(),
        )
        .into());
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Classify {
            taxonomy,
            mapping,
            domain,
            toplist,
            format,
            input,
        } => commands::classify(&commands::ClassifyArgs {
            taxonomy: taxonomy.clone(),
            mapping: mapping.clone(),
            domain: domain.clone(),
            toplist: toplist.clone().or_else(|| input.clone()),
            format: format.clone(),
            out: cli.out.clone(),
            svg: cli.svg,
        }),
        Command::Profiles {
            taxonomy,
            mapping,
            history,
            adapter,
            top_size,
            padding,
            distinct_domains,
            epoch_length,
            origin,
        } => commands::profiles(&commands::ProfilesArgs {
            taxonomy: taxonomy.clone(),
            mapping: mapping.clone(),
            history: history.clone(),
            adapter: adapter.clone(),
            top_size: *top_size,
            padding: *padding,
            distinct_domains: *distinct_domains,
            epoch_length: *epoch_length,
            origin_time: *origin,
            seed,
            out: cli.out.clone(),
        }),
        Command::Simulate {
            taxonomy,
            mapping,
            profiles,
            history,
            adapter,
            p,
            tau,
            top_size,
            calls,
            witness,
            shuffle,
            padding,
            witness_allowed,
        } => commands::simulate(&commands::SimulateArgs {
            taxonomy: taxonomy.clone(),
            mapping: mapping.clone(),
            profiles: profiles.clone(),
            history: history.clone(),
            adapter: adapter.clone(),
            p: *p,
            tau: *tau,
            top_size: *top_size,
            calls: *calls,
            witness: *witness,
            shuffle: *shuffle,
            padding: *padding,
            witness_allowed: witness_allowed.clone(),
            seed,
            out: cli.out.clone(),
        }),
        Command::Attack { attack } => match attack {
            AttackCommand::Denoise {
                taxonomy,
                observations,
                prior,
                theta,
                no_repeat_rule,
            } => commands::attack_denoise(&commands::DenoiseArgs {
                taxonomy: taxonomy.clone(),
                observations: observations.clone(),
                prior: prior.clone(),
                theta: *theta,
                no_repeat_rule: *no_repeat_rule,
                out: cli.out.clone(),
            }),
            AttackCommand::Reid {
                taxonomy,
                profiles,
                runs,
                p,
                tau,
                top_size,
            } => commands::attack_reid(&commands::ReidArgs {
                taxonomy: taxonomy.clone(),
                profiles: profiles.clone(),
                runs: *runs,
                p: *p,
                tau: *tau,
                top_size: *top_size,
                seed,
                out: cli.out.clone(),
                svg: cli.svg,
            }),
        },
        Command::Synth {
            config,
            taxonomy,
            mapping,
            users,
            weeks,
            top_size,
            stability,
            exponent,
            visits,
            omega,
            higher_fraction,
            max_domains,
        } => {
            let base = match config {
                Some(path) => PipelineConfig::load(path)?,
                None => PipelineConfig::default(),
            };
            commands::synth(&commands::SynthArgs {
                taxonomy: taxonomy.clone(),
                mapping: mapping.clone(),
                users: users.unwrap_or(base.synth.n_users),
                weeks: weeks.unwrap_or(base.synth.weeks),
                top_size: top_size.unwrap_or(base.epoch.top_size),
                stability: stability.unwrap_or(base.synth.stability),
                exponent: exponent.unwrap_or(base.synth.topic_popularity_exponent),
                visits: visits.unwrap_or(base.synth.visits_per_week),
                omega: omega.unwrap_or(base.synth.omega),
                higher_fraction: higher_fraction.unwrap_or(base.synth.higher_fraction),
                max_domains: max_domains.unwrap_or(base.synth.max_domains_per_topic),
                seed: cli.seed.unwrap_or(base.seed),
                out: cli.out.clone(),
            })
        }
        Command::Pipeline { config, overrides } => {
            let mut cfg = PipelineConfig::load(config)?;
            overrides.apply(&mut cfg);
            commands::pipeline(&cfg, &cli.out, cli.svg, cli.seed)
        }
    }
}

fn failure_exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<MissingAsset>().is_some() {
        return 2;
    }
    if let Some(core) = err.downcast_ref::<topics_lab::Error>() {
        return match core {
            topics_lab::Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
            topics_lab::Error::Io(_) => 1,
            _ => 3,
        };
    }
    1
}
