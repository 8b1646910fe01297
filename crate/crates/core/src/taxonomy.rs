//! The closed topic universe and uniform noise draws.
//!
//! A taxonomy is a flat list of interest categories, each carrying a
//! `standard` or `higher` utility label that the top-topic selection ranks
//! ahead of visit frequency. Topic id `0` is reserved for the *Unknown*
//! sentinel: it marks unclassifiable domains, never appears in a loaded
//! taxonomy, and is never produced by a noise draw.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{uniform_index, SimRng};

/// Identifier of a topic. Strictly positive in a taxonomy; `0` is the
/// Unknown sentinel.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct TopicId(pub u32);

impl TopicId {
    pub const UNKNOWN: TopicId = TopicId(0);

    pub fn is_unknown(self) -> bool {
        self == Self::UNKNOWN
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Utility label attached to every topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityBucket {
    Standard,
    Higher,
}

impl UtilityBucket {
    /// Rank used by top-topic selection: higher-utility topics sort first.
    pub fn selection_rank(self) -> u8 {
        match self {
            UtilityBucket::Higher => 0,
            UtilityBucket::Standard => 1,
        }
    }
}

impl FromStr for UtilityBucket {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "standard" => Ok(UtilityBucket::Standard),
            "higher" => Ok(UtilityBucket::Higher),
            other => Err(format!("unknown bucket label {other:?}")),
        }
    }
}

impl fmt::Display for UtilityBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityBucket::Standard => f.write_str("standard"),
            UtilityBucket::Higher => f.write_str("higher"),
        }
    }
}

/// One interest category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: TopicId,
    /// Slash-separated category name, e.g. `/Arts & Entertainment/Music`.
    pub path: String,
    pub bucket: UtilityBucket,
}

/// Immutable, validated topic universe. Safe to share across workers.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    topics: Vec<Topic>,
    index: HashMap<TopicId, usize>,
}

impl Taxonomy {
    /// Build a taxonomy from topics, enforcing the invariants: strictly
    /// positive unique ids and non-empty paths.
    pub fn new(topics: Vec<Topic>) -> Result<Self> {
        let mut index = HashMap::with_capacity(topics.len());
        for (pos, topic) in topics.iter().enumerate() {
            if topic.id.is_unknown() {
                return Err(Error::Validation(format!(
                    "topic id 0 is reserved for Unknown (path {:?})",
                    topic.path
                )));
            }
            if topic.path.is_empty() {
                return Err(Error::Validation(format!("topic {} has an empty path", topic.id)));
            }
            if index.insert(topic.id, pos).is_some() {
                return Err(Error::Validation(format!("duplicate topic id {}", topic.id)));
            }
        }
        Ok(Self { topics, index })
    }

    /// Load a taxonomy from a TSV asset: `id<TAB>path<TAB>bucket`, no
    /// header, LF line endings, bucket in {standard, higher}.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let display = path.display().to_string();
        let mut topics = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            topics.push(parse_taxonomy_line(&line).map_err(|message| Error::Parse {
                path: display.clone(),
                line: lineno,
                message,
            })?);
        }
        Self::new(topics)
    }

    /// Number of topics (the Unknown sentinel is not counted).
    pub fn omega(&self) -> usize {
        self.topics.len()
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn get(&self, id: TopicId) -> Option<&Topic> {
        self.index.get(&id).map(|&pos| &self.topics[pos])
    }

    pub fn contains(&self, id: TopicId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn bucket(&self, id: TopicId) -> Option<UtilityBucket> {
        self.get(id).map(|t| t.bucket)
    }

    /// Uniform draw over the whole taxonomy, Unknown excluded. Consumes
    /// exactly one generator output per call.
    pub fn random_topic(&self, rng: &mut SimRng) -> Result<&Topic> {
        if self.topics.is_empty() {
            return Err(Error::Domain("random draw from an empty taxonomy".into()));
        }
        Ok(&self.topics[uniform_index(rng, self.topics.len())])
    }

    /// Serialize back to the TSV asset format.
    pub fn write_tsv(&self, mut w: impl std::io::Write) -> Result<()> {
        for topic in &self.topics {
            writeln!(w, "{}\t{}\t{}", topic.id, topic.path, topic.bucket)?;
        }
        Ok(())
    }
}

fn parse_taxonomy_line(line: &str) -> std::result::Result<Topic, String> {
    let mut cols = line.split('\t');
    let (id, path, bucket) = match (cols.next(), cols.next(), cols.next(), cols.next()) {
        (Some(id), Some(path), Some(bucket), None) => (id, path, bucket),
        _ => return Err("expected 3 tab-separated columns".into()),
    };
    let id: u32 = id
        .parse()
        .map_err(|_| format!("non-integer topic id {id:?}"))?;
    if id == 0 {
        return Err("topic id 0 is reserved for Unknown".into());
    }
    if path.is_empty() {
        return Err("empty topic path".into());
    }
    let bucket = UtilityBucket::from_str(bucket)?;
    Ok(Topic {
        id: TopicId(id),
        path: path.to_string(),
        bucket,
    })
}
