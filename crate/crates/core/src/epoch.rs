//! Weekly epochs: partition traces, rank top topics, measure stability.
//!
//! A visit at timestamp `t` lands in epoch `floor((t - origin) / length) + 1`
//! (half-open intervals, 1-based). Per epoch and user, visited domains are
//! classified and tallied into topic frequencies, and the top `T` topics are
//! selected by utility bucket first, then frequency, then ascending topic id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, SimRng};
use crate::taxonomy::{Taxonomy, TopicId};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_EPOCH_SECONDS: i64 = 7 * SECONDS_PER_DAY;
pub const DEFAULT_TOP_SIZE: usize = 5;

/// One page load, reduced to its domain by upstream anonymization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub user_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub domain: String,
}

/// Epoch grid: length plus the timestamp where epoch 1 starts. With no
/// explicit origin, the grid anchors at the trace's earliest timestamp
/// truncated to midnight UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochConfig {
    pub epoch_length: i64,
    pub origin_time: Option<i64>,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            epoch_length: DEFAULT_EPOCH_SECONDS,
            origin_time: None,
        }
    }
}

impl EpochConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epoch_length <= 0 {
            return Err(Error::Config(format!(
                "epoch_length must be positive, got {}",
                self.epoch_length
            )));
        }
        Ok(())
    }

    /// Concrete origin for a trace.
    pub fn resolve_origin(&self, visits: &[Visit]) -> Result<i64> {
        if let Some(origin) = self.origin_time {
            return Ok(origin);
        }
        let min_ts = visits
            .iter()
            .map(|v| v.timestamp)
            .min()
            .ok_or_else(|| Error::Ingestion("cannot infer epoch origin from an empty trace".into()))?;
        Ok(min_ts - min_ts.rem_euclid(SECONDS_PER_DAY))
    }

    fn index_for(&self, origin: i64, visit: &Visit) -> Result<u32> {
        if visit.timestamp < origin {
            return Err(Error::Ingestion(format!(
                "visit by {:?} to {:?} at {} precedes the epoch origin {origin}",
                visit.user_id, visit.domain, visit.timestamp
            )));
        }
        Ok(((visit.timestamp - origin) / self.epoch_length) as u32 + 1)
    }
}

/// Partition visits into per-(user, epoch) buckets. Every accepted visit
/// lands in exactly one bucket; visits before the origin are rejected.
pub fn partition_epochs(
    visits: Vec<Visit>,
    cfg: &EpochConfig,
) -> Result<BTreeMap<(String, u32), Vec<Visit>>> {
    cfg.validate()?;
    let origin = cfg.resolve_origin(&visits)?;
    let mut buckets: BTreeMap<(String, u32), Vec<Visit>> = BTreeMap::new();
    for visit in visits {
        let index = cfg.index_for(origin, &visit)?;
        buckets
            .entry((visit.user_id.clone(), index))
            .or_default()
            .push(visit);
    }
    Ok(buckets)
}

/// What "most visited" counts: every page load, or each domain once per
/// epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyMode {
    #[default]
    PerVisit,
    DistinctDomains,
}

/// Count topic frequencies for one epoch's visits. Visits classifying only
/// to Unknown are tallied separately and excluded from the mapping.
pub fn topic_frequencies(
    visits: &[Visit],
    classifier: &Classifier<'_>,
    mode: FrequencyMode,
) -> Result<(BTreeMap<TopicId, u32>, u32)> {
    let mut cache: HashMap<&str, (String, BTreeSet<TopicId>)> = HashMap::new();
    for visit in visits {
        if !cache.contains_key(visit.domain.as_str()) {
            let normalized = crate::classifier::normalize_domain(&visit.domain)?;
            let topics = classifier.classify(&visit.domain)?;
            cache.insert(visit.domain.as_str(), (normalized, topics));
        }
    }
    let per_visit = visits.iter().map(|v| {
        let (normalized, topics) = &cache[v.domain.as_str()];
        (normalized.as_str(), topics)
    });
    Ok(tally_visits(per_visit, mode))
}

fn tally_visits<'a>(
    per_visit: impl Iterator<Item = (&'a str, &'a BTreeSet<TopicId>)>,
    mode: FrequencyMode,
) -> (BTreeMap<TopicId, u32>, u32) {
    let mut counts: BTreeMap<TopicId, u32> = BTreeMap::new();
    let mut unknown = 0u32;
    let mut seen_domains: BTreeSet<&str> = BTreeSet::new();
    for (domain, topics) in per_visit {
        if mode == FrequencyMode::DistinctDomains && !seen_domains.insert(domain) {
            continue;
        }
        let mut real = false;
        for id in topics {
            if !id.is_unknown() {
                *counts.entry(*id).or_insert(0) += 1;
                real = true;
            }
        }
        if !real {
            unknown += 1;
        }
    }
    (counts, unknown)
}

/// One slot of a ranked top list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopEntry {
    pub topic: TopicId,
    pub frequency: u32,
    pub padded: bool,
}

/// Rank topics by utility bucket (higher first), then frequency
/// (descending), then topic id (ascending), and keep the first `top_size`.
/// With `padding` on, uniform random distinct topics fill short lists.
pub fn select_top_topics(
    freqs: &BTreeMap<TopicId, u32>,
    taxonomy: &Taxonomy,
    top_size: usize,
    padding: bool,
    rng: &mut SimRng,
) -> Vec<TopEntry> {
    let mut ranked: Vec<(u8, std::cmp::Reverse<u32>, TopicId)> = freqs
        .iter()
        .filter(|(id, count)| !id.is_unknown() && **count > 0)
        .map(|(id, count)| {
            let bucket_rank = taxonomy
                .bucket(*id)
                .map(|b| b.selection_rank())
                .unwrap_or(u8::MAX);
            (bucket_rank, std::cmp::Reverse(*count), *id)
        })
        .collect();
    ranked.sort_unstable();
    ranked.truncate(top_size);

    let mut top: Vec<TopEntry> = ranked
        .into_iter()
        .map(|(_, std::cmp::Reverse(frequency), topic)| TopEntry {
            topic,
            frequency,
            padded: false,
        })
        .collect();

    if padding {
        let mut chosen: BTreeSet<TopicId> = top.iter().map(|e| e.topic).collect();
        while top.len() < top_size && chosen.len() < taxonomy.omega() {
            let candidate = taxonomy
                .random_topic(rng)
                .expect("taxonomy is nonempty when chosen < omega");
            if chosen.insert(candidate.id) {
                top.push(TopEntry {
                    topic: candidate.id,
                    frequency: 0,
                    padded: true,
                });
            }
        }
    }
    top
}

/// Per-user, per-epoch topic frequencies and the ranked top list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochTopProfile {
    pub user_id: String,
    /// 1-based week number.
    pub epoch_index: u32,
    pub frequencies: BTreeMap<TopicId, u32>,
    /// Visits that classified only to Unknown.
    pub unknown_visits: u32,
    pub top: Vec<TopEntry>,
}

impl EpochTopProfile {
    pub fn top_set(&self) -> BTreeSet<TopicId> {
        self.top.iter().map(|e| e.topic).collect()
    }
}

/// Profile construction knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub top_size: usize,
    pub padding: bool,
    pub frequency_mode: FrequencyMode,
    /// Drives padding draws only; keyed per (user, epoch).
    pub seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            top_size: DEFAULT_TOP_SIZE,
            padding: false,
            frequency_mode: FrequencyMode::PerVisit,
            seed: 0,
        }
    }
}

/// Full pipeline for a trace: partition, classify, tally, select. Every
/// user gets a profile for every epoch in the trace's global range, so an
/// empty week shows up as an empty top rather than a gap.
pub fn build_weekly_profiles(
    visits: Vec<Visit>,
    cfg: &EpochConfig,
    opts: &ProfileOptions,
    classifier: &Classifier<'_>,
) -> Result<Vec<EpochTopProfile>> {
    if visits.is_empty() {
        return Ok(Vec::new());
    }
    let buckets = partition_epochs(visits, cfg)?;
    let max_epoch = buckets.keys().map(|(_, e)| *e).max().unwrap_or(0);

    // Classify each unique domain once, in sorted order for determinism.
    let unique_domains: BTreeSet<&str> = buckets
        .values()
        .flatten()
        .map(|v| v.domain.as_str())
        .collect();
    let domain_topics: HashMap<&str, (String, BTreeSet<TopicId>)> = unique_domains
        .into_par_iter()
        .map(|domain| {
            let normalized = crate::classifier::normalize_domain(domain)?;
            let topics = classifier.classify(domain)?;
            Ok((domain, (normalized, topics)))
        })
        .collect::<Result<_>>()?;

    let mut per_user: BTreeMap<&str, BTreeMap<u32, &[Visit]>> = BTreeMap::new();
    for ((user, epoch), visits) in &buckets {
        per_user
            .entry(user.as_str())
            .or_default()
            .insert(*epoch, visits.as_slice());
    }

    let taxonomy = classifier.taxonomy();
    let domain_topics = &domain_topics;
    let users: Vec<(&str, &BTreeMap<u32, &[Visit]>)> =
        per_user.iter().map(|(u, m)| (*u, m)).collect();
    let mut profiles: Vec<EpochTopProfile> = users
        .into_par_iter()
        .flat_map_iter(|(user, epochs)| {
            (1..=max_epoch).map(move |epoch| {
                let visits = epochs.get(&epoch).copied().unwrap_or(&[]);
                let per_visit = visits
                    .iter()
                    .map(|v| {
                        let (normalized, topics) = &domain_topics[v.domain.as_str()];
                        (normalized.as_str(), topics)
                    })
                    .collect::<Vec<_>>();
                let (frequencies, unknown_visits) =
                    tally_visits(per_visit.into_iter(), opts.frequency_mode);
                let mut rng = pad_rng(opts.seed, user, epoch);
                let top =
                    select_top_topics(&frequencies, taxonomy, opts.top_size, opts.padding, &mut rng);
                EpochTopProfile {
                    user_id: user.to_string(),
                    epoch_index: epoch,
                    frequencies,
                    unknown_visits,
                    top,
                }
            })
        })
        .collect();
    profiles.sort_by(|a, b| (&a.user_id, a.epoch_index).cmp(&(&b.user_id, b.epoch_index)));
    Ok(profiles)
}

fn pad_rng(seed: u64, user: &str, epoch: u32) -> SimRng {
    derive_rng(seed, "padding", &[user.as_bytes(), &epoch.to_le_bytes()])
}

/// Keep exactly the users whose top list is nonempty in every epoch of the
/// global range spanned by `profiles`.
pub fn filter_active_users(profiles: Vec<EpochTopProfile>) -> Vec<EpochTopProfile> {
    let (min_epoch, max_epoch) = match epoch_range(&profiles) {
        Some(range) => range,
        None => return profiles,
    };
    let mut covered: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for p in &profiles {
        if !p.top.is_empty() {
            covered.entry(p.user_id.as_str()).or_default().insert(p.epoch_index);
        }
    }
    let required = (max_epoch - min_epoch + 1) as usize;
    let active: BTreeSet<String> = covered
        .into_iter()
        .filter(|(_, epochs)| epochs.len() == required)
        .map(|(user, _)| user.to_string())
        .collect();
    profiles
        .into_iter()
        .filter(|p| active.contains(&p.user_id))
        .collect()
}

fn epoch_range(profiles: &[EpochTopProfile]) -> Option<(u32, u32)> {
    let min = profiles.iter().map(|p| p.epoch_index).min()?;
    let max = profiles.iter().map(|p| p.epoch_index).max()?;
    Some((min, max))
}

/// Stability of top profiles across one consecutive week pair: how many
/// users kept exactly 0..=T topics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub from_week: u32,
    pub to_week: u32,
    /// counts[c] = users with exactly c topics in common.
    pub counts: Vec<u64>,
    pub total_users: u64,
}

impl StabilityRow {
    pub fn proportions(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| {
                if self.total_users == 0 {
                    0.0
                } else {
                    c as f64 / self.total_users as f64
                }
            })
            .collect()
    }
}

/// Table of week-over-week top-set intersections. Expects profiles already
/// filtered to active users; row sums equal the user count.
pub fn stability_stats(profiles: &[EpochTopProfile], top_size: usize) -> Vec<StabilityRow> {
    let (min_epoch, max_epoch) = match epoch_range(profiles) {
        Some(range) => range,
        None => return Vec::new(),
    };
    let mut by_user_week: BTreeMap<(&str, u32), BTreeSet<TopicId>> = BTreeMap::new();
    for p in profiles {
        by_user_week.insert((p.user_id.as_str(), p.epoch_index), p.top_set());
    }
    let users: BTreeSet<&str> = profiles.iter().map(|p| p.user_id.as_str()).collect();

    let mut rows = Vec::new();
    for week in min_epoch..max_epoch {
        let mut counts = vec![0u64; top_size + 1];
        let mut total = 0u64;
        for user in &users {
            let (Some(a), Some(b)) = (
                by_user_week.get(&(*user, week)),
                by_user_week.get(&(*user, week + 1)),
            ) else {
                continue;
            };
            let common = a.intersection(b).count().min(top_size);
            counts[common] += 1;
            total += 1;
        }
        rows.push(StabilityRow {
            from_week: week,
            to_week: week + 1,
            counts,
            total_users: total,
        });
    }
    rows
}

/// Per-week distinct topics and users with a unique top set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniquenessRow {
    pub week: u32,
    pub users: u64,
    pub distinct_topics: u64,
    pub unique_profiles: u64,
}

pub fn uniqueness_stats(profiles: &[EpochTopProfile]) -> Vec<UniquenessRow> {
    let mut weeks: BTreeMap<u32, Vec<BTreeSet<TopicId>>> = BTreeMap::new();
    for p in profiles {
        weeks.entry(p.epoch_index).or_default().push(p.top_set());
    }
    weeks
        .into_iter()
        .map(|(week, sets)| {
            let mut union: BTreeSet<TopicId> = BTreeSet::new();
            let mut occurrences: BTreeMap<&BTreeSet<TopicId>, u64> = BTreeMap::new();
            for set in &sets {
                union.extend(set.iter().copied());
                *occurrences.entry(set).or_insert(0) += 1;
            }
            let unique = occurrences.values().filter(|&&n| n == 1).count() as u64;
            UniquenessRow {
                week,
                users: sets.len() as u64,
                distinct_topics: union.len() as u64,
                unique_profiles: unique,
            }
        })
        .collect()
}

/// Write the profile report: `user_id,week,rank,topic_id,frequency,padded`,
/// sorted by (user, week, rank). Weeks with an empty top emit no rows.
pub fn write_profile_report(w: impl Write, profiles: &[EpochTopProfile]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["user_id", "week", "rank", "topic_id", "frequency", "padded"])?;
    let mut sorted: Vec<&EpochTopProfile> = profiles.iter().collect();
    sorted.sort_by_key(|p| (p.user_id.as_str(), p.epoch_index));
    for profile in sorted {
        for (rank, entry) in profile.top.iter().enumerate() {
            writer.write_record([
                profile.user_id.as_str(),
                &profile.epoch_index.to_string(),
                &(rank + 1).to_string(),
                &entry.topic.to_string(),
                &entry.frequency.to_string(),
                if entry.padded { "true" } else { "false" },
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Read a profile report back. Frequencies carry only the reported top
/// entries; empty weeks are restored for every user over the report's
/// global week range.
pub fn read_profile_report(r: impl Read) -> Result<Vec<EpochTopProfile>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut tops: BTreeMap<(String, u32), Vec<(u32, TopEntry)>> = BTreeMap::new();
    let mut users: BTreeSet<String> = BTreeSet::new();
    let mut max_week = 0u32;
    for record in reader.records() {
        let record = record?;
        if record.len() != 6 {
            return Err(Error::Ingestion(format!(
                "profile report row has {} fields, expected 6",
                record.len()
            )));
        }
        let parse_u32 = |field: &str, what: &str| -> Result<u32> {
            field
                .parse()
                .map_err(|_| Error::Ingestion(format!("bad {what} {field:?} in profile report")))
        };
        let user = record[0].to_string();
        let week = parse_u32(&record[1], "week")?;
        let rank = parse_u32(&record[2], "rank")?;
        let topic = TopicId(parse_u32(&record[3], "topic_id")?);
        let frequency = parse_u32(&record[4], "frequency")?;
        let padded = match &record[5] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Ingestion(format!("bad padded flag {other:?}")));
            }
        };
        users.insert(user.clone());
        max_week = max_week.max(week);
        tops.entry((user, week)).or_default().push((
            rank,
            TopEntry {
                topic,
                frequency,
                padded,
            },
        ));
    }
    let mut profiles = Vec::new();
    for user in &users {
        for week in 1..=max_week {
            let mut entries = tops.remove(&(user.clone(), week)).unwrap_or_default();
            entries.sort_by_key(|(rank, _)| *rank);
            let top: Vec<TopEntry> = entries.into_iter().map(|(_, e)| e).collect();
            let frequencies = top
                .iter()
                .filter(|e| !e.padded)
                .map(|e| (e.topic, e.frequency))
                .collect();
            profiles.push(EpochTopProfile {
                user_id: user.clone(),
                epoch_index: week,
                frequencies,
                unknown_visits: 0,
                top,
            });
        }
    }
    Ok(profiles)
}

/// Convenience wrapper writing the report to a file path.
pub fn write_profile_report_file(path: impl AsRef<Path>, profiles: &[EpochTopProfile]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_profile_report(std::io::BufWriter::new(file), profiles)
}

pub fn read_profile_report_file(path: impl AsRef<Path>) -> Result<Vec<EpochTopProfile>> {
    let file = std::fs::File::open(path)?;
    read_profile_report(std::io::BufReader::new(file))
}
