//! Cross-module integration: synthetic assets -> trace -> weekly profiles
//! -> observation log -> both attacks, all replayable from one seed.

use std::collections::BTreeSet;

use topics_lab::adversary::{
    denoise_attack, denoise_evaluate, masked_entries, observed_profiles, reidentify,
    DenoiseParams,
};
use topics_lab::classifier::{ecdf_topics_per_domain, Classifier};
use topics_lab::datagen::{
    generate_histories, synth_mapping, synth_taxonomy, write_history_csv, SynthConfig,
};
use topics_lab::epoch::{
    build_weekly_profiles, filter_active_users, stability_stats, uniqueness_stats, EpochConfig,
    ProfileOptions,
};
use topics_lab::sim::{default_callers, ProfileStore, SimConfig, Simulator};
use topics_lab::TopicId;

fn world(seed: u64) -> (topics_lab::Taxonomy, topics_lab::classifier::StaticMapping) {
    let taxonomy = synth_taxonomy(80, 0.25, seed).unwrap();
    let mapping = synth_mapping(&taxonomy, 15).unwrap();
    (taxonomy, mapping)
}

#[test]
fn full_pipeline_is_consistent_and_replayable() {
    let (taxonomy, mapping) = world(17);
    let synth = SynthConfig {
        n_users: 30,
        weeks: 5,
        visits_per_week: 30,
        seed: 17,
        ..SynthConfig::default()
    };

    let run = || {
        let visits = generate_histories(&synth, &taxonomy, &mapping).unwrap();
        let classifier = Classifier::new(&taxonomy, &mapping, None);
        let profiles = build_weekly_profiles(
            visits,
            &EpochConfig::default(),
            &ProfileOptions::default(),
            &classifier,
        )
        .unwrap();
        let active = filter_active_users(profiles);
        let store = ProfileStore::from_profiles(&active);
        let cfg = SimConfig {
            p: 0.05,
            seed: 17,
            calls_per_user_per_week: 10,
            ..SimConfig::default()
        };
        let sim = Simulator::new(&store, &taxonomy, &cfg);
        let weeks: Vec<u32> = (3..=5).collect();
        let log = sim.simulate(&default_callers(10), &weeks).unwrap();
        (active, log)
    };

    let (active, log) = run();
    // every user browses every week by construction
    let users: BTreeSet<&str> = active.iter().map(|p| p.user_id.as_str()).collect();
    assert_eq!(users.len(), 30);
    assert_eq!(log.len(), 30 * 3 * 10);

    // every disclosed topic is a real taxonomy topic, never Unknown
    for (_, entry) in log.entries() {
        assert!(taxonomy.contains(entry.topic));
        assert!(!entry.topic.is_unknown());
    }

    // stability and uniqueness cover the whole active population
    let stability = stability_stats(&active, 5);
    assert_eq!(stability.len(), 4);
    assert!(stability.iter().all(|r| r.total_users == 30));
    let uniqueness = uniqueness_stats(&active);
    assert_eq!(uniqueness.len(), 5);

    // denoise over a self-classified prior: flagged implies rare
    let classifier = Classifier::new(&taxonomy, &mapping, None);
    let domains: Vec<String> = mapping.iter().map(|(d, _)| d.to_string()).collect();
    let prior = classifier.classify_toplist(&domains).unwrap();
    let ecdf = ecdf_topics_per_domain(&prior);
    assert!((ecdf.last().unwrap().1 - 1.0).abs() < 1e-12);
    let params = DenoiseParams::default();
    let verdicts = denoise_attack(&log, &prior, &taxonomy, params).unwrap();
    for (entry, flagged) in masked_entries(&log).zip(&verdicts) {
        if *flagged {
            assert!(prior.count(entry.topic) < params.theta);
        }
    }
    let reports = denoise_evaluate(&log, &verdicts);
    assert_eq!(reports.len(), 3);
    let total: u64 = reports
        .iter()
        .map(|r| r.true_pos + r.false_pos + r.true_neg + r.false_neg)
        .sum();
    assert_eq!(total, log.entries().count() as u64);

    // re-identification k values are in [1, n] and cumulative profiles match
    let a = observed_profiles(&log, "caller-000", 5);
    let b = observed_profiles(&log, "caller-001", 5);
    let results = reidentify(&a, &b, 5).unwrap();
    assert_eq!(results.len(), 30);
    assert!(results.iter().all(|r| r.k >= 1 && r.k <= 30));

    // full replay: the pipeline is a pure function of the seed
    let (active2, log2) = run();
    assert_eq!(active, active2);
    assert_eq!(log, log2);
}

#[test]
fn p_zero_log_discloses_only_top_topics() {
    let (taxonomy, mapping) = world(23);
    let synth = SynthConfig {
        n_users: 8,
        weeks: 4,
        seed: 23,
        ..SynthConfig::default()
    };
    let visits = generate_histories(&synth, &taxonomy, &mapping).unwrap();
    let classifier = Classifier::new(&taxonomy, &mapping, None);
    let profiles = build_weekly_profiles(
        visits,
        &EpochConfig::default(),
        &ProfileOptions::default(),
        &classifier,
    )
    .unwrap();
    let store = ProfileStore::from_profiles(&profiles);
    let cfg = SimConfig {
        p: 0.0,
        seed: 23,
        ..SimConfig::default()
    };
    let sim = Simulator::new(&store, &taxonomy, &cfg);
    let log = sim.simulate(&default_callers(5), &[3, 4]).unwrap();
    for (call, entry) in log.entries() {
        assert!(!entry.noisy, "p=0 produced a noisy entry");
        let top: BTreeSet<TopicId> = store
            .top(&call.user_id, entry.epoch_index)
            .unwrap()
            .iter()
            .copied()
            .collect();
        assert!(top.contains(&entry.topic));
    }
}

#[test]
fn history_file_round_trip_feeds_the_same_pipeline() {
    let (taxonomy, mapping) = world(29);
    let synth = SynthConfig {
        n_users: 6,
        weeks: 3,
        seed: 29,
        ..SynthConfig::default()
    };
    let visits = generate_histories(&synth, &taxonomy, &mapping).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("history.csv");
    let file = std::fs::File::create(&path).unwrap();
    write_history_csv(std::io::BufWriter::new(file), &visits).unwrap();
    let trace =
        topics_lab::datagen::load_real_dataset(&path, topics_lab::datagen::DatasetAdapter::History)
            .unwrap();
    assert_eq!(trace.visits, visits);
    assert_eq!(trace.malformed_rows, 0);

    let classifier = Classifier::new(&taxonomy, &mapping, None);
    let from_file = build_weekly_profiles(
        trace.visits,
        &EpochConfig::default(),
        &ProfileOptions::default(),
        &classifier,
    )
    .unwrap();
    let direct = build_weekly_profiles(
        visits,
        &EpochConfig::default(),
        &ProfileOptions::default(),
        &classifier,
    )
    .unwrap();
    assert_eq!(from_file, direct);
}
