use polytope_core::rouge::{lcs_length, rouge_l, rouge_l_tokens, rouge_n, rouge_scores, tokenize};
use polytope_core::{LcsMode, Rational, RougeConfig};
use proptest::prelude::*;

const CAND: &str = "the cat sat";
const REF: &str = "the cat was sat on the mat";

/// Every sequence over {0,1,2} of length 0..=6, shortest first.
fn all_sequences() -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..6 {
        frontier =
            frontier.iter().flat_map(|s: &Vec<u8>| (0..3u8).map(move |c| [s.as_slice(), &[c]].concat())).collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

#[test]
fn lcs_matches_exhaustive_subsequence_enumeration() {
    let seqs = all_sequences();
    assert_eq!(seqs.len(), 1093);
    let index: std::collections::HashMap<&[u8], usize> =
        seqs.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let words = seqs.len().div_ceil(64);

    // subs[i]: bitset over sequence ids of every subsequence of seqs[i],
    // found by enumerating all 2^len index masks
    let subs: Vec<Vec<u64>> = seqs
        .iter()
        .map(|s| {
            let mut bits = vec![0u64; words];
            for mask in 0u32..(1 << s.len()) {
                let sub: Vec<u8> = (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
                let id = index[sub.as_slice()];
                bits[id / 64] |= 1 << (id % 64);
            }
            bits
        })
        .collect();

    // ids are ordered by length, so the highest common id is a longest
    // common subsequence
    let mut checked = 0u64;
    for (i, a) in seqs.iter().enumerate() {
        for (j, b) in seqs.iter().enumerate() {
            let highest = (0..words)
                .rev()
                .find_map(|w| {
                    let both = subs[i][w] & subs[j][w];
                    (both != 0).then(|| w * 64 + 63 - both.leading_zeros() as usize)
                })
                .expect("the empty sequence is always common");
            let oracle = seqs[highest].len();
            assert_eq!(lcs_length(a, b), oracle, "{a:?} vs {b:?}");
            let prf = rouge_l_tokens::<Rational, u8>(a, b);
            if !a.is_empty() && !b.is_empty() {
                assert_eq!(prf.precision, Rational::new(oracle as i64, a.len() as i64));
                assert_eq!(prf.recall, Rational::new(oracle as i64, b.len() as i64));
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 1093 * 1093);
}

#[test]
fn hand_oracle_pair() {
    let config = RougeConfig::lexical();
    let s = rouge_scores::<f64>(CAND, REF, &config);
    assert!((s.rouge1.f1 - 0.6).abs() < 1e-9);
    assert!((s.rouge2.f1 - 0.25).abs() < 1e-9);
    assert!((s.rouge_l.f1 - 0.6).abs() < 1e-9);

    let r1 = rouge_n::<Rational>(CAND, REF, 1, &config);
    assert_eq!((r1.precision, r1.recall, r1.f1), (Rational::from_integer(1), Rational::new(3, 7), Rational::new(3, 5)));
    let r2 = rouge_n::<Rational>(CAND, REF, 2, &config);
    assert_eq!((r2.precision, r2.recall, r2.f1), (Rational::new(1, 2), Rational::new(1, 6), Rational::new(1, 4)));
    let rl = rouge_l::<Rational>(CAND, REF, &config);
    assert_eq!(rl.f1, Rational::new(3, 5));
    // stemming does not change this pair
    assert_eq!(rouge_scores::<f64>(CAND, REF, &RougeConfig::default()), s);
}

#[test]
fn identity_is_one_everywhere() {
    let text = "Officials said the storm was moving north. Residents were told to stay indoors.";
    for config in [
        RougeConfig::default(),
        RougeConfig::lexical(),
        RougeConfig { lcs_mode: LcsMode::SentenceUnion, ..Default::default() },
        RougeConfig { remove_stopwords: true, ..Default::default() },
    ] {
        let s = rouge_scores::<Rational>(text, text, &config);
        for prf in [s.rouge1, s.rouge2, s.rouge_l] {
            assert_eq!((prf.precision, prf.recall, prf.f1), (1.into(), 1.into(), 1.into()), "{config:?}");
        }
    }
}

#[test]
fn stemming_is_visible() {
    let stemmed = rouge_n::<f64>("running", "run", 1, &RougeConfig::default());
    let plain = rouge_n::<f64>("running", "run", 1, &RougeConfig::lexical());
    assert_eq!(stemmed.f1, 1.0);
    assert_eq!(plain.f1, 0.0);
    assert_eq!(tokenize("The Cat, sat!", &RougeConfig::lexical()), ["the", "cat", "sat"]);
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["a", "b", "c", "the", "cat", "sat", "mat", "runs", "running"]),
        0..14,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rouge_l_never_exceeds_rouge_1(cand in sentence(), reference in sentence()) {
        for config in [RougeConfig::default(), RougeConfig::lexical()] {
            let s = rouge_scores::<Rational>(&cand, &reference, &config);
            prop_assert!(s.rouge_l.f1 <= s.rouge1.f1);
            prop_assert!(s.rouge_l.precision <= s.rouge1.precision);
            prop_assert!(s.rouge_l.recall <= s.rouge1.recall);
        }
    }

    #[test]
    fn swapping_arguments_swaps_precision_and_recall(a in sentence(), b in sentence(), n in 1usize..3) {
        let config = RougeConfig::default();
        let ab = rouge_n::<Rational>(&a, &b, n, &config);
        let ba = rouge_n::<Rational>(&b, &a, n, &config);
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert_eq!(ab.f1, ba.f1);
        let lab = rouge_l::<Rational>(&a, &b, &config);
        let lba = rouge_l::<Rational>(&b, &a, &config);
        prop_assert_eq!(lab.precision, lba.recall);
    }

    #[test]
    fn scores_are_in_unit_interval(a in sentence(), b in sentence()) {
        let config = RougeConfig { lcs_mode: LcsMode::SentenceUnion, ..Default::default() };
        let s = rouge_scores::<f64>(&a, &b, &config);
        for prf in [s.rouge1, s.rouge2, s.rouge_l] {
            for v in [prf.precision, prf.recall, prf.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
