//! Pipeline configuration: flat TOML sections mirroring the simulator,
//! epoch, and generator parameter names. CLI flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topics_lab::datagen::SynthConfig;
use topics_lab::epoch::{FrequencyMode, ProfileOptions, DEFAULT_EPOCH_SECONDS};
use topics_lab::sim::SimConfig;
use topics_lab::TopicId;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub assets: AssetsSection,
    pub epoch: EpochSection,
    pub synth: SynthSection,
    pub sim: SimSection,
    pub attack: AttackSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AssetsSection {
    /// Taxonomy TSV; synthesized from [synth] when absent.
    pub taxonomy: Option<PathBuf>,
    /// Static mapping TSV; synthesized when absent.
    pub mapping: Option<PathBuf>,
    /// Browsing trace; synthesized from [synth] when absent.
    pub history: Option<PathBuf>,
    /// Trace layout: "history" or "web-routineness".
    pub adapter: Option<String>,
    /// Reference list for the rarity prior; defaults to classifying the
    /// mapping's own domains.
    pub toplist: Option<PathBuf>,
    /// "plain", "tranco", or "crux".
    pub toplist_format: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EpochSection {
    pub epoch_length: i64,
    pub origin_time: Option<i64>,
    pub top_size: usize,
    pub padding: bool,
    pub distinct_domains: bool,
}

impl Default for EpochSection {
    fn default() -> Self {
        Self {
            epoch_length: DEFAULT_EPOCH_SECONDS,
            origin_time: None,
            top_size: 5,
            padding: false,
            distinct_domains: false,
        }
    }
}

impl EpochSection {
    pub fn profile_options(&self, seed: u64) -> ProfileOptions {
        ProfileOptions {
            top_size: self.top_size,
            padding: self.padding,
            frequency_mode: if self.distinct_domains {
                FrequencyMode::DistinctDomains
            } else {
                FrequencyMode::PerVisit
            },
            seed,
        }
    }

    pub fn epoch_config(&self) -> topics_lab::epoch::EpochConfig {
        topics_lab::epoch::EpochConfig {
            epoch_length: self.epoch_length,
            origin_time: self.origin_time,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_users: usize,
    pub weeks: u32,
    pub stability: f64,
    pub topic_popularity_exponent: f64,
    pub visits_per_week: u32,
    /// Taxonomy size when synthesizing the taxonomy asset.
    pub omega: usize,
    /// Fraction of synthesized topics labeled higher-utility.
    pub higher_fraction: f64,
    /// Domain-count ceiling when synthesizing the mapping asset.
    pub max_domains_per_topic: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            n_users: 1000,
            weeks: 5,
            stability: 0.6,
            topic_popularity_exponent: 1.0,
            visits_per_week: 50,
            omega: 469,
            higher_fraction: 0.3,
            max_domains_per_topic: 20,
        }
    }
}

impl SynthSection {
    pub fn synth_config(&self, top_size: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_users: self.n_users,
            weeks: self.weeks,
            top_size,
            stability: self.stability,
            topic_popularity_exponent: self.topic_popularity_exponent,
            visits_per_week: self.visits_per_week,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub p: f64,
    pub tau: u32,
    pub calls_per_user_per_week: u32,
    pub witness: bool,
    pub shuffle: bool,
    /// Caller id -> allowed topic ids, consulted when witness is on.
    pub witness_allowed: BTreeMap<String, Vec<u32>>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            p: 0.05,
            tau: 3,
            calls_per_user_per_week: 100,
            witness: false,
            shuffle: false,
            witness_allowed: BTreeMap::new(),
        }
    }
}

impl SimSection {
    pub fn sim_config(&self, top_size: usize, padding: bool, seed: u64) -> SimConfig {
        SimConfig {
            p: self.p,
            top_size,
            tau: self.tau,
            witness_enabled: self.witness,
            shuffle_enabled: self.shuffle,
            padding,
            seed,
            calls_per_user_per_week: self.calls_per_user_per_week,
            witness_allowed: self
                .witness_allowed
                .iter()
                .map(|(caller, ids)| {
                    (caller.clone(), ids.iter().map(|&i| TopicId(i)).collect())
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub theta: u32,
    pub repeat_rule: bool,
    pub runs: u32,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            theta: 10,
            repeat_rule: true,
            runs: 10,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub svg: bool,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        Ok(config)
    }
}
