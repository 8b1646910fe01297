//! Subcommand implementations. Every command is a pure function from
//! (inputs, flags, seed) to output bytes under `--out`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use topics_lab::adversary::{
    denoise_attack, denoise_evaluate, reid_experiment, write_cdf_csv, write_denoise_csv,
    write_kanon_csv, write_runs_csv, write_summary_csv, DenoiseParams,
};
use topics_lab::classifier::{
    ecdf_topics_per_domain, load_toplist, Classifier, ReferenceDistribution, StaticMapping,
    ToplistFormat,
};
use topics_lab::datagen::{
    generate_histories, load_real_dataset, synth_mapping, synth_taxonomy, write_history_csv,
    DatasetAdapter, LoadedTrace, SynthConfig,
};
use topics_lab::epoch::{
    build_weekly_profiles, filter_active_users, read_profile_report_file, stability_stats,
    uniqueness_stats, write_profile_report, EpochTopProfile,
};
use topics_lab::sim::{default_callers, ObservationLog, ProfileStore, SimConfig, Simulator};
use topics_lab::{Taxonomy, TopicId};

use crate::config::PipelineConfig;
use crate::manifest::Manifest;
use crate::report::{step_plot_svg, write_ecdf_csv, write_stability_csv, write_uniqueness_csv};

pub const ASSETS_ENV: &str = "TOPICS_LAB_ASSETS";

/// A required input file that could not be located.
#[derive(Debug, thiserror::Error)]
#[error("missing asset: {0}")]
pub struct MissingAsset(pub String);

/// Resolve an asset path: explicit flag first, then `TOPICS_LAB_ASSETS`.
pub fn resolve_asset(flag: &Option<PathBuf>, filename: &str) -> anyhow::Result<PathBuf> {
    if let Some(path) = flag {
        if path.is_file() {
            return Ok(path.clone());
        }
        return Err(MissingAsset(path.display().to_string()).into());
    }
    if let Ok(dir) = std::env::var(ASSETS_ENV) {
        let candidate = Path::new(&dir).join(filename);
        if candidate.is_file() {
            return Ok(candidate);
        }
        return Err(MissingAsset(candidate.display().to_string()).into());
    }
    Err(MissingAsset(format!("{filename} (pass a flag or set {ASSETS_ENV})")).into())
}

fn load_taxonomy_asset(flag: &Option<PathBuf>) -> anyhow::Result<(Taxonomy, PathBuf)> {
    let path = resolve_asset(flag, "taxonomy.tsv")?;
    let taxonomy = Taxonomy::load(&path)?;
    Ok((taxonomy, path))
}

fn load_mapping_asset(
    flag: &Option<PathBuf>,
    taxonomy: &Taxonomy,
) -> anyhow::Result<(StaticMapping, PathBuf)> {
    let path = resolve_asset(flag, "mapping.tsv")?;
    let mapping = StaticMapping::load(&path, taxonomy)?;
    Ok((mapping, path))
}

fn out_file(out: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    std::fs::create_dir_all(out)?;
    let file = File::create(out.join(name))
        .with_context(|| format!("cannot create {}", out.join(name).display()))?;
    Ok(BufWriter::new(file))
}

fn parse_toplist_format(s: &str) -> anyhow::Result<ToplistFormat> {
    s.parse::<ToplistFormat>()
        .map_err(topics_lab::Error::Config)
        .map_err(Into::into)
}

fn parse_adapter(s: &str) -> anyhow::Result<DatasetAdapter> {
    s.parse::<DatasetAdapter>()
        .map_err(topics_lab::Error::Config)
        .map_err(Into::into)
}

fn load_trace(path: &Path, adapter: DatasetAdapter) -> anyhow::Result<LoadedTrace> {
    if !path.is_file() {
        return Err(MissingAsset(path.display().to_string()).into());
    }
    Ok(load_real_dataset(path, adapter)?)
}

// ---------------------------------------------------------------------------
// classify

pub struct ClassifyArgs {
    pub taxonomy: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub domain: Option<String>,
    pub toplist: Option<PathBuf>,
    pub format: String,
    pub out: PathBuf,
    pub svg: bool,
}

pub fn classify(args: &ClassifyArgs) -> anyhow::Result<()> {
    let (taxonomy, _) = load_taxonomy_asset(&args.taxonomy)?;
    let (mapping, _) = load_mapping_asset(&args.mapping, &taxonomy)?;
    let classifier = Classifier::new(&taxonomy, &mapping, None);

    match (&args.domain, &args.toplist) {
        (Some(domain), _) => {
            let topics = classifier.classify(domain)?;
            for id in topics {
                let path = taxonomy
                    .get(id)
                    .map(|t| t.path.as_str())
                    .unwrap_or("Unknown");
                println!("{id}\t{path}");
            }
            Ok(())
        }
        (None, Some(toplist)) => {
            let format = parse_toplist_format(&args.format)?;
            if !toplist.is_file() {
                return Err(MissingAsset(toplist.display().to_string()).into());
            }
            let domains = load_toplist(toplist, format)?;
            let dist = classifier.classify_toplist(&domains)?;
            emit_prior(&args.out, &dist, args.svg)?;
            println!(
                "classified {} unique domains; {} of {} topics never observed",
                dist.list_size(),
                dist.never_observed(),
                dist.omega()
            );
            Ok(())
        }
        (None, None) => Err(topics_lab::Error::Config(
            "classify needs --domain or --toplist".into(),
        )
        .into()),
    }
}

fn emit_prior(out: &Path, dist: &ReferenceDistribution, svg: bool) -> anyhow::Result<()> {
    dist.to_json(out_file(out, "refdist.json")?)?;
    let ecdf = ecdf_topics_per_domain(dist);
    write_ecdf_csv(out_file(out, "ecdf.csv")?, &ecdf)?;
    if svg {
        let series = vec![(
            "topics".to_string(),
            ecdf.iter().map(|(x, y)| (*x as f64, *y)).collect(),
        )];
        let plot = step_plot_svg(
            "Topics per unique-domain count",
            "unique domains",
            "fraction of topics",
            &series,
        );
        out_file(out, "ecdf.svg")?.write_all(plot.as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// profiles

pub struct ProfilesArgs {
    pub taxonomy: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub history: PathBuf,
    pub adapter: String,
    pub top_size: usize,
    pub padding: bool,
    pub distinct_domains: bool,
    pub epoch_length: i64,
    pub origin_time: Option<i64>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn profiles(args: &ProfilesArgs) -> anyhow::Result<()> {
    let (taxonomy, _) = load_taxonomy_asset(&args.taxonomy)?;
    let (mapping, _) = load_mapping_asset(&args.mapping, &taxonomy)?;
    let classifier = Classifier::new(&taxonomy, &mapping, None);
    let trace = load_trace(&args.history, parse_adapter(&args.adapter)?)?;

    let section = crate::config::EpochSection {
        epoch_length: args.epoch_length,
        origin_time: args.origin_time,
        top_size: args.top_size,
        padding: args.padding,
        distinct_domains: args.distinct_domains,
    };
    let profiles = build_weekly_profiles(
        trace.visits,
        &section.epoch_config(),
        &section.profile_options(args.seed),
        &classifier,
    )?;
    emit_profile_stats(&args.out, &profiles, args.top_size)?;
    let users = profiles
        .iter()
        .map(|p| p.user_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let active = filter_active_users(profiles)
        .iter()
        .map(|p| p.user_id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    println!(
        "{} rows ({} malformed); {} users, {} active",
        trace.total_rows, trace.malformed_rows, users, active
    );
    Ok(())
}

fn emit_profile_stats(
    out: &Path,
    profiles: &[EpochTopProfile],
    top_size: usize,
) -> anyhow::Result<()> {
    write_profile_report(out_file(out, "profiles.csv")?, profiles)?;
    let active = filter_active_users(profiles.to_vec());
    write_stability_csv(
        out_file(out, "stability.csv")?,
        &stability_stats(&active, top_size),
    )?;
    write_uniqueness_csv(out_file(out, "uniqueness.csv")?, &uniqueness_stats(&active))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

pub struct SimulateArgs {
    pub taxonomy: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub adapter: String,
    pub p: f64,
    pub tau: u32,
    pub top_size: usize,
    pub calls: u32,
    pub witness: bool,
    pub shuffle: bool,
    pub padding: bool,
    pub witness_allowed: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let (taxonomy, _) = load_taxonomy_asset(&args.taxonomy)?;
    let profiles = load_profiles_input(
        &taxonomy,
        &args.mapping,
        &args.profiles,
        &args.history,
        &args.adapter,
        args.top_size,
        args.padding,
        args.seed,
    )?;
    let store = ProfileStore::from_profiles(&profiles);

    let mut cfg = SimConfig {
        p: args.p,
        top_size: args.top_size,
        tau: args.tau,
        witness_enabled: args.witness,
        shuffle_enabled: args.shuffle,
        padding: args.padding,
        seed: args.seed,
        calls_per_user_per_week: args.calls,
        witness_allowed: BTreeMap::new(),
    };
    if let Some(path) = &args.witness_allowed {
        let file = File::open(path)
            .map_err(|e| topics_lab::Error::Config(format!("witness allowed sets: {e}")))?;
        let raw: BTreeMap<String, Vec<u32>> = serde_json::from_reader(BufReader::new(file))?;
        cfg.witness_allowed = raw
            .into_iter()
            .map(|(caller, ids)| (caller, ids.into_iter().map(TopicId).collect()))
            .collect();
    }

    let log = run_simulation(&store, &taxonomy, &cfg)?;
    log.write_jsonl(out_file(&args.out, "observations.jsonl")?)?;
    let entries = log.entries().count();
    let noisy = log.entries().filter(|(_, e)| e.noisy).count();
    println!(
        "{} calls, {} entries, noisy fraction {:.4}",
        log.len(),
        entries,
        if entries == 0 {
            0.0
        } else {
            noisy as f64 / entries as f64
        }
    );
    Ok(())
}

fn run_simulation(
    store: &ProfileStore,
    taxonomy: &Taxonomy,
    cfg: &SimConfig,
) -> anyhow::Result<ObservationLog> {
    if store.max_epoch() < cfg.tau {
        return Err(topics_lab::Error::Simulation(format!(
            "profiles span {} epochs, fewer than tau={}",
            store.max_epoch(),
            cfg.tau
        ))
        .into());
    }
    let callers = default_callers(cfg.calls_per_user_per_week);
    let weeks: Vec<u32> = (cfg.tau..=store.max_epoch()).collect();
    let sim = Simulator::new(store, taxonomy, cfg);
    Ok(sim.simulate(&callers, &weeks)?)
}

#[allow(clippy::too_many_arguments)]
fn load_profiles_input(
    taxonomy: &Taxonomy,
    mapping_flag: &Option<PathBuf>,
    profiles: &Option<PathBuf>,
    history: &Option<PathBuf>,
    adapter: &str,
    top_size: usize,
    padding: bool,
    seed: u64,
) -> anyhow::Result<Vec<EpochTopProfile>> {
    match (profiles, history) {
        (Some(path), _) => {
            if !path.is_file() {
                return Err(MissingAsset(path.display().to_string()).into());
            }
            Ok(read_profile_report_file(path)?)
        }
        (None, Some(history)) => {
            let (mapping, _) = load_mapping_asset(mapping_flag, taxonomy)?;
            let classifier = Classifier::new(taxonomy, &mapping, None);
            let trace = load_trace(history, parse_adapter(adapter)?)?;
            let section = crate::config::EpochSection {
                top_size,
                padding,
                ..Default::default()
            };
            let profiles = build_weekly_profiles(
                trace.visits,
                &section.epoch_config(),
                &section.profile_options(seed),
                &classifier,
            )?;
            Ok(filter_active_users(profiles))
        }
        (None, None) => {
            Err(topics_lab::Error::Config("need --profiles or --history".into()).into())
        }
    }
}

// ---------------------------------------------------------------------------
// attack denoise

pub struct DenoiseArgs {
    pub taxonomy: Option<PathBuf>,
    pub observations: PathBuf,
    pub prior: PathBuf,
    pub theta: u32,
    pub no_repeat_rule: bool,
    pub out: PathBuf,
}

pub fn attack_denoise(args: &DenoiseArgs) -> anyhow::Result<()> {
    let (taxonomy, _) = load_taxonomy_asset(&args.taxonomy)?;
    if !args.observations.is_file() {
        return Err(MissingAsset(args.observations.display().to_string()).into());
    }
    if !args.prior.is_file() {
        return Err(MissingAsset(args.prior.display().to_string()).into());
    }
    let log = ObservationLog::read_jsonl(BufReader::new(File::open(&args.observations)?))?;
    let prior = ReferenceDistribution::from_json(BufReader::new(File::open(&args.prior)?))?;
    let params = DenoiseParams {
        theta: args.theta,
        repeat_rule: !args.no_repeat_rule,
    };
    let verdicts = denoise_attack(&log, &prior, &taxonomy, params)?;
    let reports = denoise_evaluate(&log, &verdicts);
    write_denoise_csv(out_file(&args.out, "denoise.csv")?, &reports)?;
    println!(
        "theta {}, repeat rule {}",
        params.theta,
        if params.repeat_rule { "on" } else { "off" }
    );
    for r in &reports {
        println!(
            "week {}: accuracy {:.3}, precision {}, tpr {}, fpr {}",
            r.week,
            r.accuracy,
            fmt_ratio(r.precision),
            fmt_ratio(r.tpr),
            fmt_ratio(r.fpr),
        );
    }
    Ok(())
}

fn fmt_ratio(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

// ---------------------------------------------------------------------------
// attack reid

pub struct ReidArgs {
    pub taxonomy: Option<PathBuf>,
    pub profiles: PathBuf,
    pub runs: u32,
    pub p: f64,
    pub tau: u32,
    pub top_size: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
}

pub fn attack_reid(args: &ReidArgs) -> anyhow::Result<()> {
    let (taxonomy, _) = load_taxonomy_asset(&args.taxonomy)?;
    if !args.profiles.is_file() {
        return Err(MissingAsset(args.profiles.display().to_string()).into());
    }
    let profiles = read_profile_report_file(&args.profiles)?;
    let store = ProfileStore::from_profiles(&profiles);
    let cfg = SimConfig {
        p: args.p,
        top_size: args.top_size,
        tau: args.tau,
        seed: args.seed,
        ..SimConfig::default()
    };
    let outcome = reid_experiment(&store, &taxonomy, &cfg, args.runs)?;
    emit_reid(&args.out, &outcome, args.svg)?;
    for s in &outcome.summary {
        println!(
            "week {}: {:.1} +/- {:.1} of {} users re-identified",
            s.week, s.mean_reid, s.std_reid, outcome.n_users
        );
    }
    Ok(())
}

fn emit_reid(
    out: &Path,
    outcome: &topics_lab::adversary::ReidOutcome,
    svg: bool,
) -> anyhow::Result<()> {
    write_kanon_csv(out_file(out, "kanon.csv")?, &outcome.results)?;
    write_runs_csv(out_file(out, "runs.csv")?, &outcome.run_counts)?;
    write_summary_csv(out_file(out, "summary.csv")?, &outcome.summary)?;
    write_cdf_csv(out_file(out, "cdf.csv")?, &outcome.cdf)?;
    if svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = outcome
            .cdf
            .iter()
            .map(|(week, points)| {
                (
                    format!("week {week}"),
                    points.iter().map(|(k, f)| (*k as f64, *f)).collect(),
                )
            })
            .collect();
        let plot = step_plot_svg(
            "Anonymity CDF (run 1)",
            "k",
            "fraction of users",
            &series,
        );
        out_file(out, "reid_cdf.svg")?.write_all(plot.as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// synth

pub struct SynthArgs {
    pub taxonomy: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub users: usize,
    pub weeks: u32,
    pub top_size: usize,
    pub stability: f64,
    pub exponent: f64,
    pub visits: u32,
    pub omega: usize,
    pub higher_fraction: f64,
    pub max_domains: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let taxonomy = match &args.taxonomy {
        Some(path) => {
            if !path.is_file() {
                return Err(MissingAsset(path.display().to_string()).into());
            }
            Taxonomy::load(path)?
        }
        None => {
            let taxonomy = synth_taxonomy(args.omega, args.higher_fraction, args.seed)?;
            taxonomy.write_tsv(out_file(&args.out, "taxonomy.tsv")?)?;
            taxonomy
        }
    };
    let mapping = match &args.mapping {
        Some(path) => StaticMapping::load(path, &taxonomy)?,
        None => {
            let mapping = synth_mapping(&taxonomy, args.max_domains)?;
            mapping.write_tsv(out_file(&args.out, "mapping.tsv")?)?;
            mapping
        }
    };
    let cfg = SynthConfig {
        n_users: args.users,
        weeks: args.weeks,
        top_size: args.top_size,
        stability: args.stability,
        topic_popularity_exponent: args.exponent,
        visits_per_week: args.visits,
        seed: args.seed,
    };
    let visits = generate_histories(&cfg, &taxonomy, &mapping)?;
    write_history_csv(out_file(&args.out, "history.csv")?, &visits)?;
    println!(
        "{} visits for {} users over {} weeks",
        visits.len(),
        args.users,
        args.weeks
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// pipeline

pub fn pipeline(
    cfg: &PipelineConfig,
    out: &Path,
    svg_flag: bool,
    seed_flag: Option<u64>,
) -> anyhow::Result<()> {
    let seed = seed_flag.unwrap_or(cfg.seed);
    let svg = svg_flag || cfg.output.svg;
    std::fs::create_dir_all(out)?;
    let mut manifest = Manifest::new(seed, cfg.clone());

    // assets: taxonomy and mapping, loaded or synthesized
    let taxonomy = match &cfg.assets.taxonomy {
        Some(path) => {
            if !path.is_file() {
                return Err(MissingAsset(path.display().to_string()).into());
            }
            let taxonomy = Taxonomy::load(path)?;
            manifest.record_asset("taxonomy.tsv", format!("provided:{}", path.display()), path)?;
            taxonomy
        }
        None => {
            let taxonomy = synth_taxonomy(cfg.synth.omega, cfg.synth.higher_fraction, seed)?;
            taxonomy.write_tsv(out_file(out, "taxonomy.tsv")?)?;
            manifest.record_asset("taxonomy.tsv", "synthesized".into(), &out.join("taxonomy.tsv"))?;
            taxonomy
        }
    };
    let mapping = match &cfg.assets.mapping {
        Some(path) => {
            if !path.is_file() {
                return Err(MissingAsset(path.display().to_string()).into());
            }
            let mapping = StaticMapping::load(path, &taxonomy)?;
            manifest.record_asset("mapping.tsv", format!("provided:{}", path.display()), path)?;
            mapping
        }
        None => {
            let mapping = synth_mapping(&taxonomy, cfg.synth.max_domains_per_topic)?;
            mapping.write_tsv(out_file(out, "mapping.tsv")?)?;
            manifest.record_asset("mapping.tsv", "synthesized".into(), &out.join("mapping.tsv"))?;
            mapping
        }
    };
    println!(
        "assets: {} topics, {} mapped domains",
        taxonomy.omega(),
        mapping.len()
    );

    // trace: ingested or synthesized
    let visits = match &cfg.assets.history {
        Some(path) => {
            let adapter = parse_adapter(cfg.assets.adapter.as_deref().unwrap_or("history"))?;
            let trace = load_trace(path, adapter)?;
            manifest.record_asset("history.csv", format!("provided:{}", path.display()), path)?;
            println!(
                "trace: {} rows, {} malformed, {} visits",
                trace.total_rows,
                trace.malformed_rows,
                trace.visits.len()
            );
            trace.visits
        }
        None => {
            let synth_cfg = cfg.synth.synth_config(cfg.epoch.top_size, seed);
            let visits = generate_histories(&synth_cfg, &taxonomy, &mapping)?;
            write_history_csv(out_file(out, "history.csv")?, &visits)?;
            manifest.record_asset("history.csv", "synthesized".into(), &out.join("history.csv"))?;
            println!("trace: {} synthetic visits", visits.len());
            visits
        }
    };

    // weekly profiles and their statistics
    let classifier = Classifier::new(&taxonomy, &mapping, None);
    let profiles = build_weekly_profiles(
        visits,
        &cfg.epoch.epoch_config(),
        &cfg.epoch.profile_options(seed),
        &classifier,
    )?;
    write_profile_report(out_file(out, "profiles.csv")?, &profiles)?;
    let active = filter_active_users(profiles);
    let active_count = active
        .iter()
        .map(|p| p.user_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    write_stability_csv(
        out_file(out, "stability.csv")?,
        &stability_stats(&active, cfg.epoch.top_size),
    )?;
    write_uniqueness_csv(out_file(out, "uniqueness.csv")?, &uniqueness_stats(&active))?;
    println!("profiles: {active_count} active users");

    // adversary prior
    let toplist_domains: Vec<String> = match &cfg.assets.toplist {
        Some(path) => {
            let format =
                parse_toplist_format(cfg.assets.toplist_format.as_deref().unwrap_or("plain"))?;
            if !path.is_file() {
                return Err(MissingAsset(path.display().to_string()).into());
            }
            let domains = load_toplist(path, format)?;
            manifest.record_asset("toplist", format!("provided:{}", path.display()), path)?;
            domains
        }
        None => mapping.iter().map(|(d, _)| d.to_string()).collect(),
    };
    let prior = classifier.classify_toplist(&toplist_domains)?;
    emit_prior(out, &prior, svg)?;
    println!(
        "prior: {} domains, {} topics never observed",
        prior.list_size(),
        prior.never_observed()
    );

    // simulation
    let store = ProfileStore::from_profiles(&active);
    let sim_cfg = cfg
        .sim
        .sim_config(cfg.epoch.top_size, cfg.epoch.padding, seed);
    let log = run_simulation(&store, &taxonomy, &sim_cfg)?;
    log.write_jsonl(out_file(out, "observations.jsonl")?)?;
    println!("simulated: {} calls", log.len());

    // attacks
    let params = DenoiseParams {
        theta: cfg.attack.theta,
        repeat_rule: cfg.attack.repeat_rule,
    };
    let verdicts = denoise_attack(&log, &prior, &taxonomy, params)?;
    let reports = denoise_evaluate(&log, &verdicts);
    write_denoise_csv(out_file(out, "denoise.csv")?, &reports)?;

    let outcome = reid_experiment(&store, &taxonomy, &sim_cfg, cfg.attack.runs)?;
    emit_reid(out, &outcome, svg)?;
    for s in &outcome.summary {
        println!(
            "reid week {}: {:.1} +/- {:.1} of {} users",
            s.week, s.mean_reid, s.std_reid, outcome.n_users
        );
    }

    for name in [
        "profiles.csv",
        "stability.csv",
        "uniqueness.csv",
        "refdist.json",
        "ecdf.csv",
        "observations.jsonl",
        "denoise.csv",
        "kanon.csv",
        "runs.csv",
        "summary.csv",
        "cdf.csv",
    ] {
        manifest.record_output(name, &out.join(name))?;
    }
    if svg {
        manifest.record_output("ecdf.svg", &out.join("ecdf.svg"))?;
        manifest.record_output("reid_cdf.svg", &out.join("reid_cdf.svg"))?;
    }
    manifest.write(&out.join("manifest.json"))?;
    println!("manifest: {}", out.join("manifest.json").display());
    Ok(())
}
