//! Disclosure simulation: one topic per window epoch, noise with
//! probability `p`, per-caller stable draws.
//!
//! Every (user, epoch, caller) triple resolves to one outcome: with
//! probability `p` a uniform taxonomy topic flagged noisy, otherwise a
//! uniform member of that epoch's top list flagged real. The outcome is a
//! pure function of `(seed, user, epoch, caller)`, so repeated calls by the
//! same caller return the same value, replays are bit-identical, and
//! parallel execution order cannot change the log.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epoch::EpochTopProfile;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, shuffle, uniform_f64, uniform_index};
use crate::taxonomy::{Taxonomy, TopicId};

/// Simulation parameters. `q = 1 - p` is implied, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Probability of disclosing a uniform random topic instead of a real
    /// one.
    pub p: f64,
    /// Top-list size per epoch.
    pub top_size: usize,
    /// Disclosure window length in epochs.
    pub tau: u32,
    pub witness_enabled: bool,
    pub shuffle_enabled: bool,
    pub padding: bool,
    pub seed: u64,
    /// Weekly call volume, modeled as this many distinct callers.
    pub calls_per_user_per_week: u32,
    /// Per-caller topic sets for the witness requirement; consulted only
    /// when `witness_enabled`.
    pub witness_allowed: BTreeMap<String, BTreeSet<TopicId>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            p: 0.05,
            top_size: 5,
            tau: 3,
            witness_enabled: false,
            shuffle_enabled: false,
            padding: false,
            seed: 0,
            calls_per_user_per_week: 100,
            witness_allowed: BTreeMap::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("p must be in [0, 1], got {}", self.p)));
        }
        if self.tau < 1 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if self.top_size < 1 {
            return Err(Error::Config("top_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Caller ids `caller-000`, `caller-001`, ... for a weekly call volume.
pub fn default_callers(n: u32) -> Vec<String> {
    (0..n).map(|i| format!("caller-{i:03}")).collect()
}

/// One disclosed (epoch, topic) with its ground-truth noise flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosedEntry {
    #[serde(rename = "epoch")]
    pub epoch_index: u32,
    pub topic: TopicId,
    pub noisy: bool,
}

/// What one caller sees for one user in one week.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicsCallResult {
    #[serde(rename = "user")]
    pub user_id: String,
    pub week: u32,
    #[serde(rename = "caller")]
    pub caller_id: String,
    pub entries: Vec<DisclosedEntry>,
}

/// Canonically sorted call results: (user, week, caller).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservationLog {
    results: Vec<TopicsCallResult>,
}

impl ObservationLog {
    pub fn from_results(mut results: Vec<TopicsCallResult>) -> Self {
        results.sort_by(|a, b| {
            (&a.user_id, a.week, &a.caller_id).cmp(&(&b.user_id, b.week, &b.caller_id))
        });
        Self { results }
    }

    pub fn results(&self) -> &[TopicsCallResult] {
        &self.results
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    /// All entries in canonical order, with their call context.
    pub fn entries(&self) -> impl Iterator<Item = (&TopicsCallResult, &DisclosedEntry)> {
        self.results
            .iter()
            .flat_map(|call| call.entries.iter().map(move |e| (call, e)))
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for result in &self.results {
            serde_json::to_writer(&mut w, result)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl Read) -> Result<Self> {
        let mut results = Vec::new();
        for line in BufReader::new(r).lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            results.push(serde_json::from_str(&line)?);
        }
        Ok(Self::from_results(results))
    }
}

/// Top lists indexed for simulation.
#[derive(Debug, Clone, Default)]
pub struct ProfileStore {
    tops: BTreeMap<String, BTreeMap<u32, Vec<TopicId>>>,
    users: Vec<String>,
    max_epoch: u32,
}

impl ProfileStore {
    pub fn from_profiles(profiles: &[EpochTopProfile]) -> Self {
        let mut tops: BTreeMap<String, BTreeMap<u32, Vec<TopicId>>> = BTreeMap::new();
        let mut max_epoch = 0;
        for p in profiles {
            max_epoch = max_epoch.max(p.epoch_index);
            tops.entry(p.user_id.clone())
                .or_default()
                .insert(p.epoch_index, p.top.iter().map(|e| e.topic).collect());
        }
        let users = tops.keys().cloned().collect();
        Self {
            tops,
            users,
            max_epoch,
        }
    }

    pub fn top(&self, user: &str, epoch: u32) -> Option<&[TopicId]> {
        self.tops.get(user)?.get(&epoch).map(Vec::as_slice)
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn max_epoch(&self) -> u32 {
        self.max_epoch
    }
}

/// Bound simulator: profiles + taxonomy + config.
pub struct Simulator<'a> {
    profiles: &'a ProfileStore,
    taxonomy: &'a Taxonomy,
    cfg: &'a SimConfig,
}

impl<'a> Simulator<'a> {
    pub fn new(profiles: &'a ProfileStore, taxonomy: &'a Taxonomy, cfg: &'a SimConfig) -> Self {
        Self {
            profiles,
            taxonomy,
            cfg,
        }
    }

    /// The stable outcome for one (user, epoch, caller) triple. `None`
    /// when the epoch's top is empty and the noise branch did not fire.
    pub fn epoch_disclosure(
        &self,
        user: &str,
        epoch: u32,
        caller: &str,
    ) -> Result<Option<DisclosedEntry>> {
        let top = self.profiles.top(user, epoch).ok_or_else(|| {
            Error::Simulation(format!("no profile computed for user {user:?} epoch {epoch}"))
        })?;
        let mut rng = derive_rng(
            self.cfg.seed,
            "disclosure",
            &[user.as_bytes(), &epoch.to_le_bytes(), caller.as_bytes()],
        );
        if uniform_f64(&mut rng) < self.cfg.p {
            let topic = self.taxonomy.random_topic(&mut rng)?;
            return Ok(Some(DisclosedEntry {
                epoch_index: epoch,
                topic: topic.id,
                noisy: true,
            }));
        }
        if top.is_empty() {
            return Ok(None);
        }
        let topic = top[uniform_index(&mut rng, top.len())];
        Ok(Some(DisclosedEntry {
            epoch_index: epoch,
            topic,
            noisy: false,
        }))
    }

    /// One API call: disclosures for the `tau` epochs ending at `week`,
    /// witness-filtered and shuffled when enabled.
    pub fn browsing_topics(&self, user: &str, week: u32, caller: &str) -> Result<TopicsCallResult> {
        if week < self.cfg.tau {
            return Err(Error::Simulation(format!(
                "week {week} precedes a full tau={} window",
                self.cfg.tau
            )));
        }
        let mut entries = Vec::with_capacity(self.cfg.tau as usize);
        for epoch in (week + 1 - self.cfg.tau)..=week {
            if let Some(entry) = self.epoch_disclosure(user, epoch, caller)? {
                entries.push(entry);
            }
        }
        if self.cfg.witness_enabled {
            let allowed = self.cfg.witness_allowed.get(caller).ok_or_else(|| {
                Error::Config(format!("witness enabled but caller {caller:?} has no allowed set"))
            })?;
            entries = witness_filter(entries, allowed);
        }
        if self.cfg.shuffle_enabled {
            let mut rng = derive_rng(
                self.cfg.seed,
                "shuffle",
                &[user.as_bytes(), &week.to_le_bytes(), caller.as_bytes()],
            );
            shuffle(&mut rng, &mut entries);
        }
        Ok(TopicsCallResult {
            user_id: user.to_string(),
            week,
            caller_id: caller.to_string(),
            entries,
        })
    }

    /// Run every (user, week, caller) call and return the canonical log.
    pub fn simulate(&self, callers: &[String], weeks: &[u32]) -> Result<ObservationLog> {
        self.cfg.validate()?;
        for &week in weeks {
            if week < self.cfg.tau || week > self.profiles.max_epoch() {
                return Err(Error::Simulation(format!(
                    "week {week} outside the simulatable range [{}, {}]",
                    self.cfg.tau,
                    self.profiles.max_epoch()
                )));
            }
        }
        let results: Vec<TopicsCallResult> = self
            .profiles
            .users()
            .par_iter()
            .map(|user| {
                let mut per_user = Vec::with_capacity(weeks.len() * callers.len());
                for &week in weeks {
                    for caller in callers {
                        per_user.push(self.browsing_topics(user, week, caller)?);
                    }
                }
                Ok(per_user)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(ObservationLog::from_results(results))
    }
}

/// Drop real entries whose topic the caller is not a witness of; noisy
/// entries pass through untouched.
pub fn witness_filter(
    entries: Vec<DisclosedEntry>,
    caller_allowed_topics: &BTreeSet<TopicId>,
) -> Vec<DisclosedEntry> {
    entries
        .into_iter()
        .filter(|e| e.noisy || caller_allowed_topics.contains(&e.topic))
        .collect()
}
