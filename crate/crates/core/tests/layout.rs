use std::collections::BTreeMap;

use polytope_core::layout::{position_distribution, ExternalScores, LayoutConfig, LexicalF1};
use polytope_core::{Corpus, Sample, Target};
use proptest::prelude::*;

/// Sentence `j` of sample `i`, with vocabulary unique to that sentence.
fn sentence(i: usize, j: usize) -> String {
    format!("Item{i}x{j} alpha{j} bravo{i}q{j} charlie{j}z{i}.")
}

fn sample(i: usize, order: &[usize], picked: &[usize]) -> Sample {
    let source: Vec<String> = order.iter().map(|&j| sentence(i, j)).collect();
    let summary: Vec<String> = picked.iter().map(|&j| sentence(i, j)).collect();
    Sample {
        id: format!("doc{i:03}"),
        source: source.join(" "),
        reference: "Reference.".into(),
        system_outputs: BTreeMap::from([("lead3".to_string(), summary.join(" "))]),
    }
}

fn lead3_corpus(n: usize) -> Corpus {
    let order: Vec<usize> = (0..10).collect();
    Corpus::new((0..n).map(|i| sample(i, &order, &[0, 1, 2])).collect()).unwrap()
}

#[test]
fn lead3_mass_on_first_three_positions() {
    let dist = position_distribution::<f64, _>(
        &lead3_corpus(100),
        &Target::system("lead3"),
        &LexicalF1,
        &LayoutConfig::default(),
    )
    .unwrap();
    assert_eq!(dist.buckets.len(), 10);
    assert_eq!(dist.sentences_processed, 300);
    let coverage = dist.coverage();
    for (p, c) in coverage.iter().enumerate() {
        let expected = if p < 3 { 1.0 / 3.0 } else { 0.0 };
        assert!((c - expected).abs() < 1e-9, "position {}: {c}", p + 1);
    }
    assert!(dist.neg_log().iter().all(|v| v.is_finite()));
    assert!((dist.neg_log()[9] - -(1e-6f64).ln()).abs() < 1e-9);
}

#[test]
fn external_table_drives_alignment() {
    let corpus = lead3_corpus(2);
    let mut table = ExternalScores::new();
    for i in 0..2 {
        for summary_pos in 1..=3 {
            for source_pos in 1..=10 {
                // always prefer the last source sentence
                table.insert(format!("doc{i:03}#{summary_pos}"), source_pos, source_pos as f64);
            }
        }
    }
    let dist = position_distribution(&corpus, &Target::system("lead3"), &table, &LayoutConfig::default()).unwrap();
    assert_eq!(dist.counts(), [0, 0, 0, 0, 0, 0, 0, 0, 0, 6]);
}

#[test]
fn long_sources_pool_into_tail_bucket() {
    let order: Vec<usize> = (0..60).collect();
    let corpus = Corpus::new(vec![sample(0, &order, &[0, 55, 59])]).unwrap();
    let dist = position_distribution::<f64, _>(&corpus, &Target::system("lead3"), &LexicalF1, &LayoutConfig::default())
        .unwrap();
    assert_eq!(dist.buckets.len(), 51);
    assert_eq!(dist.buckets[50].label, "51+");
    assert_eq!(dist.buckets[50].count, 2);
    assert_eq!(dist.buckets[0].count, 1);
}

proptest! {
    #[test]
    fn permuting_sources_permutes_the_histogram(
        perm in Just((0..10).collect::<Vec<usize>>()).prop_shuffle(),
        picked in prop::collection::vec(0usize..10, 1..5),
        docs in 1usize..6,
    ) {
        let identity: Vec<usize> = (0..10).collect();
        let base = Corpus::new((0..docs).map(|i| sample(i, &identity, &picked)).collect()).unwrap();
        let shuffled = Corpus::new((0..docs).map(|i| sample(i, &perm, &picked)).collect()).unwrap();
        let target = Target::system("lead3");
        let a = position_distribution::<f64, _>(&base, &target, &LexicalF1, &LayoutConfig::default()).unwrap().counts();
        let b = position_distribution::<f64, _>(&shuffled, &target, &LexicalF1, &LayoutConfig::default()).unwrap().counts();
        // sentence j sits at position j in `base` and at perm⁻¹(j) in `shuffled`
        for (new_pos, &j) in perm.iter().enumerate() {
            prop_assert_eq!(b[new_pos], a[j]);
        }
    }
}
