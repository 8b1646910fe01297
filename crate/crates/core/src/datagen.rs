//! Synthetic populations and dataset ingestion.
//!
//! Synthetic generation runs profile-first: draw each user's weekly top
//! sets from a Zipf-like popularity distribution with a configurable
//! week-over-week stability, then (optionally) emit a browsing trace that
//! classifies back to exactly those profiles. Frequencies are spaced
//! (base, base-1, ...) so rankings have no ties and the round trip through
//! the real pipeline is exact.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::StaticMapping;
use crate::epoch::{EpochTopProfile, TopEntry, Visit, DEFAULT_EPOCH_SECONDS};
use crate::error::{Error, Result};
use crate::rng::{derive_rng, shuffle, uniform_f64, SimRng};
use crate::taxonomy::{Taxonomy, Topic, TopicId, UtilityBucket};

/// Synthetic population parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_users: usize,
    pub weeks: u32,
    pub top_size: usize,
    /// Probability that a top topic persists into the next week.
    pub stability: f64,
    /// Zipf exponent over seed-permuted topic ranks; 0 = uniform.
    pub topic_popularity_exponent: f64,
    /// Mean visits per user-week in emitted traces.
    pub visits_per_week: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 1000,
            weeks: 5,
            top_size: 5,
            stability: 0.6,
            topic_popularity_exponent: 1.0,
            visits_per_week: 50,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 1 {
            return Err(Error::Config("n_users must be at least 1".into()));
        }
        if self.weeks < 1 {
            return Err(Error::Config("weeks must be at least 1".into()));
        }
        if self.top_size < 1 {
            return Err(Error::Config("top_size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.stability) {
            return Err(Error::Config(format!(
                "stability must be in [0, 1], got {}",
                self.stability
            )));
        }
        if self.topic_popularity_exponent < 0.0 {
            return Err(Error::Config("popularity exponent must be nonnegative".into()));
        }
        if self.visits_per_week < 1 {
            return Err(Error::Config("visits_per_week must be at least 1".into()));
        }
        Ok(())
    }
}

fn user_name(index: usize) -> String {
    format!("u{index:05}")
}

/// Popularity distribution: taxonomy topics permuted by seed, weight
/// `1 / (rank+1)^s`.
struct Popularity {
    by_rank: Vec<TopicId>,
    rank_of: BTreeMap<TopicId, usize>,
    cumulative: Vec<f64>,
    total: f64,
}

impl Popularity {
    fn new(taxonomy: &Taxonomy, exponent: f64, seed: u64) -> Self {
        let mut by_rank: Vec<TopicId> = taxonomy.topics().iter().map(|t| t.id).collect();
        let mut rng = derive_rng(seed, "popularity", &[]);
        shuffle(&mut rng, &mut by_rank);
        let mut cumulative = Vec::with_capacity(by_rank.len());
        let mut total = 0.0;
        for rank in 0..by_rank.len() {
            total += (rank as f64 + 1.0).powf(-exponent);
            cumulative.push(total);
        }
        let rank_of = by_rank
            .iter()
            .enumerate()
            .map(|(rank, id)| (*id, rank))
            .collect();
        Self {
            by_rank,
            rank_of,
            cumulative,
            total,
        }
    }

    fn draw(&self, rng: &mut SimRng) -> TopicId {
        let x = uniform_f64(rng) * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= x);
        self.by_rank[idx.min(self.by_rank.len() - 1)]
    }

    fn draw_distinct(&self, rng: &mut SimRng, exclude: &BTreeSet<TopicId>) -> Result<TopicId> {
        for _ in 0..1_000_000 {
            let id = self.draw(rng);
            if !exclude.contains(&id) {
                return Ok(id);
            }
        }
        Err(Error::Generation(
            "rejection sampling failed to find a fresh topic".into(),
        ))
    }
}

/// Draw per-user weekly top profiles. Week 1 tops are sampled without
/// replacement from the popularity distribution; each following week keeps
/// every topic with probability `stability` and redraws the rest.
pub fn generate_profiles(cfg: &SynthConfig, taxonomy: &Taxonomy) -> Result<Vec<EpochTopProfile>> {
    cfg.validate()?;
    if taxonomy.omega() < cfg.top_size {
        return Err(Error::Config(format!(
            "taxonomy has {} topics, fewer than top_size {}",
            taxonomy.omega(),
            cfg.top_size
        )));
    }
    let popularity = Popularity::new(taxonomy, cfg.topic_popularity_exponent, cfg.seed);
    let base = frequency_base(cfg.visits_per_week, cfg.top_size);

    let mut profiles = Vec::with_capacity(cfg.n_users * cfg.weeks as usize);
    for user_index in 0..cfg.n_users {
        let user_id = user_name(user_index);
        let mut rng = derive_rng(
            cfg.seed,
            "synth-user",
            &[&(user_index as u64).to_le_bytes()],
        );
        let mut current: Vec<TopicId> = Vec::new();
        for week in 1..=cfg.weeks {
            let mut kept: Vec<TopicId> = Vec::new();
            for &topic in &current {
                if uniform_f64(&mut rng) < cfg.stability {
                    kept.push(topic);
                }
            }
            let mut chosen: BTreeSet<TopicId> = kept.iter().copied().collect();
            while chosen.len() < cfg.top_size {
                let fresh = popularity.draw_distinct(&mut rng, &chosen)?;
                chosen.insert(fresh);
            }
            let ordered = order_for_ranking(&chosen, taxonomy, &popularity);
            let top: Vec<TopEntry> = ordered
                .iter()
                .enumerate()
                .map(|(slot, &topic)| TopEntry {
                    topic,
                    frequency: base - slot as u32,
                    padded: false,
                })
                .collect();
            profiles.push(EpochTopProfile {
                user_id: user_id.clone(),
                epoch_index: week,
                frequencies: top.iter().map(|e| (e.topic, e.frequency)).collect(),
                unknown_visits: 0,
                top,
            });
            current = ordered;
        }
    }
    Ok(profiles)
}

/// Descending frequencies start here so that the per-week total
/// approximates `visits_per_week` and every slot stays >= 1.
fn frequency_base(visits_per_week: u32, top_size: usize) -> u32 {
    let t = top_size as u32;
    let target = visits_per_week + t * (t - 1) / 2;
    (target.div_ceil(t)).max(t)
}

/// Order a chosen set the way top-topic selection will rank it once
/// descending frequencies are assigned: higher-utility bucket first, more
/// popular first inside a bucket.
fn order_for_ranking(
    chosen: &BTreeSet<TopicId>,
    taxonomy: &Taxonomy,
    popularity: &Popularity,
) -> Vec<TopicId> {
    let mut ordered: Vec<TopicId> = chosen.iter().copied().collect();
    ordered.sort_by_key(|id| {
        let bucket = taxonomy
            .bucket(*id)
            .map(|b| b.selection_rank())
            .unwrap_or(u8::MAX);
        (bucket, popularity.rank_of[id])
    });
    ordered
}

/// Emit a browsing trace whose classification through the full pipeline
/// reproduces `generate_profiles(cfg)` exactly. Each top topic needs a
/// domain mapping to that topic alone.
pub fn generate_histories(
    cfg: &SynthConfig,
    taxonomy: &Taxonomy,
    mapping: &StaticMapping,
) -> Result<Vec<Visit>> {
    let profiles = generate_profiles(cfg, taxonomy)?;

    let mut singleton_domain: BTreeMap<TopicId, &str> = BTreeMap::new();
    for (domain, ids) in mapping.iter() {
        if let [only] = ids {
            singleton_domain.entry(*only).or_insert(domain);
        }
    }
    let needed: BTreeSet<TopicId> = profiles
        .iter()
        .flat_map(|p| p.top.iter().map(|e| e.topic))
        .collect();
    let unreachable: Vec<String> = needed
        .iter()
        .filter(|id| !singleton_domain.contains_key(id))
        .map(|id| id.to_string())
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::Generation(format!(
            "no single-topic domain maps to topics: {}",
            unreachable.join(", ")
        )));
    }

    let mut visits = Vec::new();
    for profile in &profiles {
        let total: u32 = profile.top.iter().map(|e| e.frequency).sum();
        let week_start = (profile.epoch_index as i64 - 1) * DEFAULT_EPOCH_SECONDS;
        let spacing = DEFAULT_EPOCH_SECONDS / (total as i64 + 1);
        let mut slot = 0i64;
        for entry in &profile.top {
            let domain = singleton_domain[&entry.topic];
            for _ in 0..entry.frequency {
                slot += 1;
                visits.push(Visit {
                    user_id: profile.user_id.clone(),
                    timestamp: week_start + slot * spacing,
                    domain: domain.to_string(),
                });
            }
        }
    }
    visits.sort_by(|a, b| {
        (&a.user_id, a.timestamp, &a.domain).cmp(&(&b.user_id, b.timestamp, &b.domain))
    });
    Ok(visits)
}

/// Synthetic taxonomy: `omega` topics, a leading fraction of a seeded
/// permutation labeled higher-utility.
pub fn synth_taxonomy(omega: usize, higher_fraction: f64, seed: u64) -> Result<Taxonomy> {
    if !(0.0..=1.0).contains(&higher_fraction) {
        return Err(Error::Config(format!(
            "higher_fraction must be in [0, 1], got {higher_fraction}"
        )));
    }
    let mut indices: Vec<usize> = (0..omega).collect();
    let mut rng = derive_rng(seed, "synth-buckets", &[]);
    shuffle(&mut rng, &mut indices);
    let higher_count = (omega as f64 * higher_fraction).round() as usize;
    let higher: BTreeSet<usize> = indices.into_iter().take(higher_count).collect();
    Taxonomy::new(
        (0..omega)
            .map(|i| Topic {
                id: TopicId(i as u32 + 1),
                path: format!("/Synthetic/Topic {:03}", i + 1),
                bucket: if higher.contains(&i) {
                    UtilityBucket::Higher
                } else {
                    UtilityBucket::Standard
                },
            })
            .collect(),
    )
}

/// Synthetic override list: every topic gets at least one dedicated
/// domain; domain counts decay linearly from `max_domains_per_topic` to 1
/// across the taxonomy so the rarity prior has structure.
pub fn synth_mapping(taxonomy: &Taxonomy, max_domains_per_topic: usize) -> Result<StaticMapping> {
    let omega = taxonomy.omega();
    let mut entries = Vec::new();
    for (i, topic) in taxonomy.topics().iter().enumerate() {
        let count = if omega <= 1 || max_domains_per_topic <= 1 {
            1
        } else {
            1 + (omega - 1 - i) * (max_domains_per_topic - 1) / (omega - 1)
        };
        entries.push((format!("topic-{:04}.example", topic.id.0), vec![topic.id]));
        for alt in 1..count {
            entries.push((
                format!("topic-{:04}-alt{alt:02}.example", topic.id.0),
                vec![topic.id],
            ));
        }
    }
    StaticMapping::from_entries(entries, taxonomy)
}

/// Supported trace layouts for ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetAdapter {
    /// Canonical `user_id,timestamp,domain` CSV, integer Unix seconds.
    History,
    /// Public browsing-history release: header-named columns
    /// `panelist_id`, `used_at`, `domain`; datetimes or integer seconds.
    WebRoutineness,
}

impl FromStr for DatasetAdapter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "history" => Ok(Self::History),
            "web-routineness" => Ok(Self::WebRoutineness),
            other => Err(format!("unknown dataset adapter {other:?}")),
        }
    }
}

/// Ingestion outcome: parsed visits plus malformed-row accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedTrace {
    pub visits: Vec<Visit>,
    pub total_rows: usize,
    pub malformed_rows: usize,
}

/// Parse a trace file. Malformed rows are counted, not silently dropped;
/// more than 1% malformed fails the whole ingestion.
pub fn load_real_dataset(path: impl AsRef<Path>, adapter: DatasetAdapter) -> Result<LoadedTrace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));

    let (user_col, time_col, domain_col) = match adapter {
        DatasetAdapter::History => {
            let headers = reader.headers()?;
            let expected = ["user_id", "timestamp", "domain"];
            if headers.iter().collect::<Vec<_>>() != expected {
                return Err(Error::Ingestion(format!(
                    "expected header user_id,timestamp,domain in {}",
                    path.display()
                )));
            }
            (0, 1, 2)
        }
        DatasetAdapter::WebRoutineness => {
            let headers = reader.headers()?;
            let find = |name: &str| {
                headers
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(name))
                    .ok_or_else(|| {
                        Error::Ingestion(format!("column {name:?} missing from {}", path.display()))
                    })
            };
            (find("panelist_id")?, find("used_at")?, find("domain")?)
        }
    };

    let mut visits = Vec::new();
    let mut total_rows = 0usize;
    let mut malformed_rows = 0usize;
    for record in reader.records() {
        let record = record?;
        total_rows += 1;
        let fields = (
            record.get(user_col),
            record.get(time_col),
            record.get(domain_col),
        );
        let (Some(user), Some(time), Some(domain)) = fields else {
            malformed_rows += 1;
            continue;
        };
        let Some(timestamp) = parse_timestamp(time) else {
            malformed_rows += 1;
            continue;
        };
        if user.is_empty() || domain.is_empty() || timestamp < 0 {
            malformed_rows += 1;
            continue;
        }
        visits.push(Visit {
            user_id: user.to_string(),
            timestamp,
            domain: domain.to_string(),
        });
    }

    if malformed_rows * 100 > total_rows {
        return Err(Error::Ingestion(format!(
            "{malformed_rows} of {total_rows} rows malformed in {} (over 1%)",
            path.display()
        )));
    }
    Ok(LoadedTrace {
        visits,
        total_rows,
        malformed_rows,
    })
}

fn parse_timestamp(field: &str) -> Option<i64> {
    if let Ok(seconds) = field.parse::<i64>() {
        return Some(seconds);
    }
    chrono::NaiveDateTime::parse_from_str(field, "%Y-%m-%d %H:%M:%S")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Write the canonical `user_id,timestamp,domain` CSV.
pub fn write_history_csv(w: impl Write, visits: &[Visit]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["user_id", "timestamp", "domain"])?;
    for visit in visits {
        writer.write_record([
            visit.user_id.as_str(),
            &visit.timestamp.to_string(),
            &visit.domain,
        ])?;
    }
    writer.flush()?;
    Ok(())
}
