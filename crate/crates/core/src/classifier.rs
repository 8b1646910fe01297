//! Domain-to-topics classification via the static override list.
//!
//! Lookup order is fixed: exact normalized domain, then the domain with a
//! leading `www.` stripped, then an optional fallback provider, and finally
//! the Unknown sentinel. The same classifier also builds the adversary's
//! prior: classify a top-sites list and count, per topic, the number of
//! unique domains it was observed on.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{Taxonomy, TopicId};

/// Pluggable fallback invoked for domains absent from the static mapping.
/// The default build ships none; unmapped domains classify to Unknown.
pub trait ClassificationProvider: Sync {
    fn classify(&self, domain: &str) -> std::result::Result<BTreeSet<TopicId>, String>;
}

/// Normalize a raw domain or origin string: lowercase (ASCII only, so
/// internationalized labels stay byte-wise as given), strip scheme, port,
/// path, query, fragment, and trailing dots.
pub fn normalize_domain(raw: &str) -> Result<String> {
    let mut s = raw.trim();
    if let Some(pos) = s.find("://") {
        s = &s[pos + 3..];
    }
    if let Some(pos) = s.find(['/', '?', '#']) {
        s = &s[..pos];
    }
    if let Some(pos) = s.rfind(':') {
        let suffix = &s[pos + 1..];
        if !suffix.is_empty() && suffix.bytes().all(|b| b.is_ascii_digit()) {
            s = &s[..pos];
        }
    }
    let s = s.trim_end_matches('.');
    if s.is_empty() {
        return Err(Error::Normalization(raw.to_string()));
    }
    Ok(s.to_ascii_lowercase())
}

/// The annotated domain -> topics override list.
///
/// Domains are stored normalized; topic lists are sorted and deduplicated.
/// Iteration order is deterministic.
#[derive(Debug, Clone, Default)]
pub struct StaticMapping {
    entries: BTreeMap<String, Vec<TopicId>>,
}

impl StaticMapping {
    /// Build from `(domain, topics)` pairs, validating every topic id
    /// against the active taxonomy and rejecting duplicate domains.
    pub fn from_entries<I, T>(entries: I, taxonomy: &Taxonomy) -> Result<Self>
    where
        I: IntoIterator<Item = (String, T)>,
        T: IntoIterator<Item = TopicId>,
    {
        let mut map = BTreeMap::new();
        for (domain, topics) in entries {
            let domain = normalize_domain(&domain)?;
            let mut ids: Vec<TopicId> = topics.into_iter().collect();
            ids.sort_unstable();
            ids.dedup();
            if ids.is_empty() {
                return Err(Error::Validation(format!("domain {domain:?} maps to no topics")));
            }
            for id in &ids {
                if !taxonomy.contains(*id) {
                    return Err(Error::Validation(format!(
                        "domain {domain:?} references topic {id} absent from the taxonomy"
                    )));
                }
            }
            if map.insert(domain.clone(), ids).is_some() {
                return Err(Error::Validation(format!("duplicate domain {domain:?}")));
            }
        }
        Ok(Self { entries: map })
    }

    /// Load the TSV asset: `domain<TAB>id[,id]*`, no header.
    pub fn load(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = std::fs::File::open(path)?;
        let mut pairs = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            let (domain, ids) = parse_mapping_line(&line).map_err(|message| Error::Parse {
                path: display.clone(),
                line: lineno,
                message,
            })?;
            pairs.push((domain, ids));
        }
        Self::from_entries(pairs, taxonomy)
    }

    pub fn get(&self, normalized_domain: &str) -> Option<&[TopicId]> {
        self.entries.get(normalized_domain).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Domains in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[TopicId])> {
        self.entries.iter().map(|(d, t)| (d.as_str(), t.as_slice()))
    }

    /// Serialize back to the TSV asset format.
    pub fn write_tsv(&self, mut w: impl std::io::Write) -> Result<()> {
        for (domain, ids) in &self.entries {
            let ids = ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
            writeln!(w, "{domain}\t{ids}")?;
        }
        Ok(())
    }
}

fn parse_mapping_line(line: &str) -> std::result::Result<(String, Vec<TopicId>), String> {
    let mut cols = line.split('\t');
    let (domain, ids) = match (cols.next(), cols.next(), cols.next()) {
        (Some(domain), Some(ids), None) => (domain, ids),
        _ => return Err("expected 2 tab-separated columns".into()),
    };
    let ids = ids
        .split(',')
        .map(|id| {
            id.parse::<u32>()
                .map(TopicId)
                .map_err(|_| format!("non-integer topic id {id:?}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((domain.to_string(), ids))
}

/// Static mapping plus optional fallback bound to a taxonomy.
pub struct Classifier<'a> {
    taxonomy: &'a Taxonomy,
    mapping: &'a StaticMapping,
    fallback: Option<&'a dyn ClassificationProvider>,
}

impl<'a> Classifier<'a> {
    pub fn new(
        taxonomy: &'a Taxonomy,
        mapping: &'a StaticMapping,
        fallback: Option<&'a dyn ClassificationProvider>,
    ) -> Self {
        Self {
            taxonomy,
            mapping,
            fallback,
        }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        self.taxonomy
    }

    /// Classify one domain. The result is never empty: unmapped domains
    /// yield `{Unknown}`.
    pub fn classify(&self, domain: &str) -> Result<BTreeSet<TopicId>> {
        let normalized = normalize_domain(domain)?;
        if let Some(ids) = self.mapping.get(&normalized) {
            return Ok(ids.iter().copied().collect());
        }
        if let Some(stripped) = normalized.strip_prefix("www.") {
            if let Some(ids) = self.mapping.get(stripped) {
                return Ok(ids.iter().copied().collect());
            }
        }
        if let Some(provider) = self.fallback {
            let ids = provider
                .classify(&normalized)
                .map_err(|message| Error::Classification {
                    domain: normalized.clone(),
                    message,
                })?;
            for id in &ids {
                if !id.is_unknown() && !self.taxonomy.contains(*id) {
                    return Err(Error::Classification {
                        domain: normalized.clone(),
                        message: format!("provider returned topic {id} absent from the taxonomy"),
                    });
                }
            }
            if !ids.is_empty() {
                return Ok(ids);
            }
        }
        Ok(std::iter::once(TopicId::UNKNOWN).collect())
    }

    /// Classify a list of domains and count, per topic, the unique domains
    /// it appears on. Input duplicates collapse after normalization;
    /// Unknown is excluded from counts.
    pub fn classify_toplist(&self, list: &[String]) -> Result<ReferenceDistribution> {
        let mut unique = BTreeSet::new();
        for raw in list {
            unique.insert(normalize_domain(raw)?);
        }
        let mut counts: BTreeMap<TopicId, u32> = BTreeMap::new();
        for domain in &unique {
            for id in self.classify(domain)? {
                if !id.is_unknown() {
                    *counts.entry(id).or_insert(0) += 1;
                }
            }
        }
        Ok(ReferenceDistribution {
            counts,
            list_size: unique.len(),
            omega: self.taxonomy.omega(),
        })
    }
}

/// Topic -> number of unique domains the topic was observed on, over one
/// classified top-list. This is the adversary's rarity prior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    counts: BTreeMap<TopicId, u32>,
    list_size: usize,
    omega: usize,
}

impl ReferenceDistribution {
    pub fn new(counts: BTreeMap<TopicId, u32>, list_size: usize, omega: usize) -> Result<Self> {
        if counts.len() > omega {
            return Err(Error::Validation(format!(
                "{} topics counted but taxonomy has {omega}",
                counts.len()
            )));
        }
        for (id, count) in &counts {
            if *count as usize > list_size {
                return Err(Error::Validation(format!(
                    "topic {id} counted on {count} domains but the list has {list_size}"
                )));
            }
        }
        Ok(Self {
            counts,
            list_size,
            omega,
        })
    }

    pub fn count(&self, id: TopicId) -> u32 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<TopicId, u32> {
        &self.counts
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    /// Topics of the taxonomy never observed on the list.
    pub fn never_observed(&self) -> usize {
        self.omega - self.counts.values().filter(|&&c| c > 0).count()
    }

    /// Number of taxonomy topics with a domain count strictly below
    /// `theta` (the fraction the denoising attack will flag).
    pub fn below(&self, theta: u32) -> usize {
        let nonzero_below = self.counts.values().filter(|&&c| c > 0 && c < theta).count();
        let zeros = self.omega - self.counts.values().filter(|&&c| c > 0).count();
        if theta == 0 {
            0
        } else {
            nonzero_below + zeros
        }
    }

    pub fn to_json(&self, w: impl std::io::Write) -> Result<()> {
        #[derive(Serialize)]
        struct Flat {
            omega: usize,
            list_size: usize,
            counts: Vec<(TopicId, u32)>,
        }
        let flat = Flat {
            omega: self.omega,
            list_size: self.list_size,
            counts: self.counts.iter().map(|(k, v)| (*k, *v)).collect(),
        };
        serde_json::to_writer_pretty(w, &flat)?;
        Ok(())
    }

    pub fn from_json(r: impl Read) -> Result<Self> {
        #[derive(Deserialize)]
        struct Flat {
            omega: usize,
            list_size: usize,
            counts: Vec<(TopicId, u32)>,
        }
        let flat: Flat = serde_json::from_reader(r)?;
        Self::new(flat.counts.into_iter().collect(), flat.list_size, flat.omega)
    }
}

/// Empirical CDF of domain counts over all taxonomy topics: for each
/// distinct count value `x` (ascending, zeros included), the fraction of
/// topics observed on at most `x` domains. Ends at 1.
pub fn ecdf_topics_per_domain(dist: &ReferenceDistribution) -> Vec<(u32, f64)> {
    let omega = dist.omega();
    if omega == 0 {
        return Vec::new();
    }
    let mut tally: BTreeMap<u32, usize> = BTreeMap::new();
    let zeros = omega - dist.counts().values().filter(|&&c| c > 0).count();
    if zeros > 0 {
        tally.insert(0, zeros);
    }
    for &count in dist.counts().values() {
        if count > 0 {
            *tally.entry(count).or_insert(0) += 1;
        }
    }
    let mut points = Vec::with_capacity(tally.len());
    let mut cumulative = 0usize;
    for (count, topics) in tally {
        cumulative += topics;
        points.push((count, cumulative as f64 / omega as f64));
    }
    points
}

/// Supported top-list file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToplistFormat {
    /// One domain per line.
    Plain,
    /// `rank,domain` CSV without header.
    Tranco,
    /// `origin,rank` CSV with header.
    Crux,
}

impl FromStr for ToplistFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Self::Plain),
            "tranco" => Ok(Self::Tranco),
            "crux" => Ok(Self::Crux),
            other => Err(format!("unknown toplist format {other:?}")),
        }
    }
}

/// Read the raw domain/origin column of a top-list file.
pub fn load_toplist(path: impl AsRef<Path>, format: ToplistFormat) -> Result<Vec<String>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Ingestion(format!("cannot read top-list {display}: {e}")))?;
    let reader = BufReader::new(file);
    let mut domains = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match format {
            ToplistFormat::Plain => domains.push(trimmed.to_string()),
            ToplistFormat::Tranco => {
                let (_, domain) = trimmed.split_once(',').ok_or_else(|| Error::Parse {
                    path: display.clone(),
                    line: lineno,
                    message: "expected rank,domain".into(),
                })?;
                domains.push(domain.trim().to_string());
            }
            ToplistFormat::Crux => {
                if lineno == 1 && trimmed.eq_ignore_ascii_case("origin,rank") {
                    continue;
                }
                let (origin, _) = trimmed.split_once(',').ok_or_else(|| Error::Parse {
                    path: display.clone(),
                    line: lineno,
                    message: "expected origin,rank".into(),
                })?;
                domains.push(origin.trim().to_string());
            }
        }
    }
    if domains.is_empty() {
        return Err(Error::Ingestion(format!("top-list {display} is empty")));
    }
    Ok(domains)
}
