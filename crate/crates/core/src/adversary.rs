//! The two attacks: noise flagging via rarity priors, and cross-site
//! re-identification via minimal Hamming distance.
//!
//! Attack code never reads the log's ground-truth noise flags: the masked
//! entry view strips them, and scoring joins flags back by record position
//! afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::ReferenceDistribution;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sim::{ObservationLog, SimConfig, Simulator, ProfileStore};
use crate::taxonomy::{Taxonomy, TopicId};

/// Observed entry with the ground-truth flag masked out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskedEntry<'a> {
    pub user: &'a str,
    pub caller: &'a str,
    pub week: u32,
    pub epoch: u32,
    pub topic: TopicId,
}

/// The adversary's view of a log, in canonical entry order.
pub fn masked_entries(log: &ObservationLog) -> impl Iterator<Item = MaskedEntry<'_>> {
    log.entries().map(|(call, entry)| MaskedEntry {
        user: &call.user_id,
        caller: &call.caller_id,
        week: call.week,
        epoch: entry.epoch_index,
        topic: entry.topic,
    })
}

/// Noise-flagging parameters: rarity threshold and the repeated-epoch
/// override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DenoiseParams {
    /// A topic observed on fewer than `theta` domains of the reference
    /// list is flagged noisy (strict less-than).
    pub theta: u32,
    /// A topic observed for the same user in two or more distinct epochs
    /// is ruled real regardless of rarity.
    pub repeat_rule: bool,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self {
            theta: 10,
            repeat_rule: true,
        }
    }
}

/// Verdict for one observed topic: noisy iff rarer than `theta` on the
/// reference list, unless the repeat rule vouches for it.
pub fn flag_noisy(
    prior: &ReferenceDistribution,
    topic: TopicId,
    distinct_epochs_seen: usize,
    params: DenoiseParams,
) -> bool {
    if params.repeat_rule && distinct_epochs_seen >= 2 {
        return false;
    }
    prior.count(topic) < params.theta
}

/// Produce one verdict per log entry (canonical order): `true` = flagged
/// noisy. Consumes only the masked view of the log.
pub fn denoise_attack(
    log: &ObservationLog,
    prior: &ReferenceDistribution,
    taxonomy: &Taxonomy,
    params: DenoiseParams,
) -> Result<Vec<bool>> {
    let mut epochs_seen: BTreeMap<(&str, TopicId), BTreeSet<u32>> = BTreeMap::new();
    for entry in masked_entries(log) {
        if !taxonomy.contains(entry.topic) {
            return Err(Error::Evaluation(format!(
                "observed topic {} absent from the taxonomy",
                entry.topic
            )));
        }
        epochs_seen
            .entry((entry.user, entry.topic))
            .or_default()
            .insert(entry.epoch);
    }
    Ok(masked_entries(log)
        .map(|entry| {
            let seen = epochs_seen[&(entry.user, entry.topic)].len();
            flag_noisy(prior, entry.topic, seen, params)
        })
        .collect())
}

/// Confusion counts and derived ratios for one week. Positive = noisy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseReport {
    pub week: u32,
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
    pub accuracy: f64,
    /// Absent when nothing was flagged.
    pub precision: Option<f64>,
    /// Absent when the log has no noisy entries.
    pub tpr: Option<f64>,
    /// Absent when the log has no real entries.
    pub fpr: Option<f64>,
}

impl DenoiseReport {
    pub fn from_confusion(week: u32, tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let total = tp + fp + tn + fn_;
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        Self {
            week,
            true_pos: tp,
            false_pos: fp,
            true_neg: tn,
            false_neg: fn_,
            accuracy: if total == 0 {
                0.0
            } else {
                (tp + tn) as f64 / total as f64
            },
            precision: ratio(tp, tp + fp),
            tpr: ratio(tp, tp + fn_),
            fpr: ratio(fp, fp + tn),
        }
    }
}

/// Score verdicts against the log's ground truth, one report per week.
///
/// `verdicts` must align positionally with `masked_entries(log)`.
pub fn denoise_evaluate(log: &ObservationLog, verdicts: &[bool]) -> Vec<DenoiseReport> {
    let total: usize = log.entries().count();
    assert_eq!(
        verdicts.len(),
        total,
        "verdicts must cover every log entry"
    );
    let mut confusion: BTreeMap<u32, (u64, u64, u64, u64)> = BTreeMap::new();
    for ((call, entry), &flagged) in log.entries().zip(verdicts) {
        let slot = confusion.entry(call.week).or_insert((0, 0, 0, 0));
        match (flagged, entry.noisy) {
            (true, true) => slot.0 += 1,
            (true, false) => slot.1 += 1,
            (false, false) => slot.2 += 1,
            (false, true) => slot.3 += 1,
        }
    }
    confusion
        .into_iter()
        .map(|(week, (tp, fp, tn, fn_))| DenoiseReport::from_confusion(week, tp, fp, tn, fn_))
        .collect()
}

/// Hamming distance between two topic sets seen as indicator vectors over
/// the taxonomy: the size of their symmetric difference.
pub fn hamming_distance(a: &BTreeSet<TopicId>, b: &BTreeSet<TopicId>) -> usize {
    let common = a.intersection(b).count();
    a.len() + b.len() - 2 * common
}

/// Cumulative topic sets per user: everything `caller` observed in calls
/// up to and including `through_week`.
pub fn observed_profiles(
    log: &ObservationLog,
    caller: &str,
    through_week: u32,
) -> BTreeMap<String, BTreeSet<TopicId>> {
    let mut profiles: BTreeMap<String, BTreeSet<TopicId>> = BTreeMap::new();
    for call in log.results() {
        if call.caller_id != caller || call.week > through_week {
            continue;
        }
        let topics = profiles.entry(call.user_id.clone()).or_default();
        topics.extend(call.entries.iter().map(|e| e.topic));
    }
    profiles
}

/// Anonymity-set size for one user in one week. `k = 1` means the user was
/// re-identified; `k = n` means the match failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KAnonymityResult {
    pub user_id: String,
    pub week: u32,
    pub k: usize,
}

/// Match every user observed by `site_b` against the candidates observed
/// by `site_a`, keeping minimal-distance ties as a group.
pub fn reidentify(
    site_a: &BTreeMap<String, BTreeSet<TopicId>>,
    site_b: &BTreeMap<String, BTreeSet<TopicId>>,
    week: u32,
) -> Result<Vec<KAnonymityResult>> {
    if site_a.len() != site_b.len() || !site_a.keys().eq(site_b.keys()) {
        return Err(Error::Evaluation(
            "the two vantage points observed different user populations".into(),
        ));
    }
    let n = site_a.len();
    let candidates: Vec<(&String, &BTreeSet<TopicId>)> = site_a.iter().collect();
    let mut results: Vec<KAnonymityResult> = site_b
        .par_iter()
        .map(|(target, observed_b)| {
            let mut best = usize::MAX;
            let mut group: Vec<&String> = Vec::new();
            for (candidate, observed_a) in &candidates {
                let d = hamming_distance(observed_b, observed_a);
                match d.cmp(&best) {
                    std::cmp::Ordering::Less => {
                        best = d;
                        group.clear();
                        group.push(candidate);
                    }
                    std::cmp::Ordering::Equal => group.push(candidate),
                    std::cmp::Ordering::Greater => {}
                }
            }
            let k = if group.contains(&target) {
                group.len()
            } else {
                n
            };
            KAnonymityResult {
                user_id: target.clone(),
                week,
                k,
            }
        })
        .collect();
    results.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok(results)
}

/// CDF over anonymity levels: for each observed k (ascending), the
/// fraction of users with anonymity at most k. Ends at 1.
pub fn kanon_cdf(results: &[KAnonymityResult]) -> Vec<(usize, f64)> {
    if results.is_empty() {
        return Vec::new();
    }
    let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
    for r in results {
        *tally.entry(r.k).or_insert(0) += 1;
    }
    let total = results.len() as f64;
    let mut cumulative = 0usize;
    tally
        .into_iter()
        .map(|(k, count)| {
            cumulative += count;
            (k, cumulative as f64 / total)
        })
        .collect()
}

/// Re-identified user count for one run and week.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunWeekCount {
    pub run: u32,
    pub week: u32,
    pub reidentified: u64,
}

/// Mean and sample standard deviation of re-identified counts per week.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekSummary {
    pub week: u32,
    pub mean_reid: f64,
    pub std_reid: f64,
}

/// Full output of the two-site experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ReidOutcome {
    /// Every (run, user, week, k), sorted by (run, week, user).
    pub results: Vec<(u32, KAnonymityResult)>,
    pub run_counts: Vec<RunWeekCount>,
    pub summary: Vec<WeekSummary>,
    /// Anonymity CDF per week for the first run.
    pub cdf: Vec<(u32, Vec<(usize, f64)>)>,
    pub n_users: usize,
}

pub const REID_CALLERS: [&str; 2] = ["site1", "site2"];

/// Two colluding vantage points observe every user weekly; each week they
/// match cumulative observations by minimal Hamming distance. Repeated for
/// `runs` derived seeds.
pub fn reid_experiment(
    profiles: &ProfileStore,
    taxonomy: &Taxonomy,
    base_cfg: &SimConfig,
    runs: u32,
) -> Result<ReidOutcome> {
    if runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    base_cfg.validate()?;
    let weeks: Vec<u32> = (base_cfg.tau..=profiles.max_epoch()).collect();
    if weeks.is_empty() {
        return Err(Error::Simulation(format!(
            "profiles span {} epochs, fewer than tau={}",
            profiles.max_epoch(),
            base_cfg.tau
        )));
    }
    let callers: Vec<String> = REID_CALLERS.iter().map(|s| s.to_string()).collect();

    let mut all_results = Vec::new();
    let mut run_counts = Vec::new();
    let mut cdf = Vec::new();
    let mut per_week_counts: BTreeMap<u32, Vec<u64>> = BTreeMap::new();

    for run in 1..=runs {
        let mut cfg = base_cfg.clone();
        cfg.seed = derive_seed(base_cfg.seed, "reid-run", &[&run.to_le_bytes()]);
        let sim = Simulator::new(profiles, taxonomy, &cfg);
        let log = sim.simulate(&callers, &weeks)?;

        let mut observed_a: BTreeMap<String, BTreeSet<TopicId>> = BTreeMap::new();
        let mut observed_b: BTreeMap<String, BTreeSet<TopicId>> = BTreeMap::new();
        for &week in &weeks {
            accumulate_week(&log, REID_CALLERS[0], week, &mut observed_a);
            accumulate_week(&log, REID_CALLERS[1], week, &mut observed_b);
            let results = reidentify(&observed_a, &observed_b, week)?;
            let reidentified = results.iter().filter(|r| r.k == 1).count() as u64;
            run_counts.push(RunWeekCount {
                run,
                week,
                reidentified,
            });
            per_week_counts.entry(week).or_default().push(reidentified);
            if run == 1 {
                cdf.push((week, kanon_cdf(&results)));
            }
            all_results.extend(results.into_iter().map(|r| (run, r)));
        }
    }

    let summary = per_week_counts
        .into_iter()
        .map(|(week, counts)| {
            let (mean, std) = mean_std(&counts);
            WeekSummary {
                week,
                mean_reid: mean,
                std_reid: std,
            }
        })
        .collect();

    Ok(ReidOutcome {
        results: all_results,
        run_counts,
        summary,
        cdf,
        n_users: profiles.users().len(),
    })
}

fn accumulate_week(
    log: &ObservationLog,
    caller: &str,
    week: u32,
    into: &mut BTreeMap<String, BTreeSet<TopicId>>,
) {
    for call in log.results() {
        if call.caller_id != caller || call.week != week {
            continue;
        }
        into.entry(call.user_id.clone())
            .or_default()
            .extend(call.entries.iter().map(|e| e.topic));
    }
}

fn mean_std(counts: &[u64]) -> (f64, f64) {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    if counts.len() < 2 {
        return (mean, 0.0);
    }
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    (mean, var.sqrt())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// `week,tp,fp,tn,fn,accuracy,precision,tpr,fpr` — absent ratios emit
/// empty cells.
pub fn write_denoise_csv(w: impl Write, reports: &[DenoiseReport]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["week", "tp", "fp", "tn", "fn", "accuracy", "precision", "tpr", "fpr"])?;
    for r in reports {
        writer.write_record([
            r.week.to_string(),
            r.true_pos.to_string(),
            r.false_pos.to_string(),
            r.true_neg.to_string(),
            r.false_neg.to_string(),
            format!("{:.6}", r.accuracy),
            fmt_opt(r.precision),
            fmt_opt(r.tpr),
            fmt_opt(r.fpr),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `run,week,user_id,k`.
pub fn write_kanon_csv(w: impl Write, results: &[(u32, KAnonymityResult)]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["run", "week", "user_id", "k"])?;
    for (run, r) in results {
        writer.write_record([
            run.to_string(),
            r.week.to_string(),
            r.user_id.clone(),
            r.k.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `run,week,reidentified`: the per-run counts behind the summary.
pub fn write_runs_csv(w: impl Write, counts: &[RunWeekCount]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["run", "week", "reidentified"])?;
    for c in counts {
        writer.write_record([
            c.run.to_string(),
            c.week.to_string(),
            c.reidentified.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `week,mean_reid,std_reid`.
pub fn write_summary_csv(w: impl Write, summary: &[WeekSummary]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["week", "mean_reid", "std_reid"])?;
    for s in summary {
        writer.write_record([
            s.week.to_string(),
            format!("{:.6}", s.mean_reid),
            format!("{:.6}", s.std_reid),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `week,k,cum_fraction`.
pub fn write_cdf_csv(w: impl Write, cdf: &[(u32, Vec<(usize, f64)>)]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["week", "k", "cum_fraction"])?;
    for (week, points) in cdf {
        for (k, fraction) in points {
            writer.write_record([
                week.to_string(),
                k.to_string(),
                format!("{fraction:.6}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
