use std::collections::BTreeMap;

use curriculum::competence::{competence_linear, competence_root_p, CompetenceSchedule};
use curriculum::corpus::{Corpus, FrequencyTable, VocabConfig, Vocabulary};
use curriculum::difficulty::{
    compute_cdf, score_rarity, DifficultyMetric, MetricKind, ScoredCorpus, ScoringPlan,
};
use curriculum::sampler::{eligible_pool, Sampler, SamplerConfig};
use proptest::prelude::*;

const LETTERS: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h"];

fn corpus_strategy() -> impl Strategy<Value = Vec<(String, String)>> {
    let sentence =
        prop::collection::vec(prop::sample::select(LETTERS), 1..8).prop_map(|w| w.join(" "));
    prop::collection::vec((sentence.clone(), sentence), 1..40)
}

fn build(pairs: &[(String, String)]) -> Corpus {
    Corpus::from_pairs(pairs.iter().map(|(s, t)| (s.as_str(), t.as_str())), 200).unwrap()
}

fn vocab_strategy() -> impl Strategy<Value = VocabConfig> {
    (1usize..10, 1u64..4).prop_map(|(max_size, min_count)| VocabConfig {
        max_size,
        min_count,
    })
}

/// Equal-cost scored corpus from raw scores.
fn scored_from(raw: Vec<f64>) -> ScoredCorpus {
    let costs = vec![1; raw.len()];
    ScoredCorpus::from_raw(MetricKind::SentenceLength, raw, &costs).unwrap()
}

proptest! {
    #[test]
    fn frequency_mass_is_one(pairs in corpus_strategy(), vocab in vocab_strategy()) {
        let corpus = build(&pairs);
        let v = Vocabulary::build(&corpus, vocab).unwrap();
        let table = FrequencyTable::build(&corpus, &v);
        prop_assert!((table.total_mass() - 1.0).abs() <= 1e-9);
        let words: usize = pairs.iter().map(|(s, _)| s.split(' ').count()).sum();
        prop_assert_eq!(v.total_token_count(), words as u64);
        prop_assert_eq!(corpus.source_token_count(), words as u64);
    }

    #[test]
    fn cdf_is_rank_over_m(raw in prop::collection::vec(0u8..6, 1..50)) {
        let raw: Vec<f64> = raw.into_iter().map(f64::from).collect();
        let cdf = compute_cdf(&raw).unwrap();
        let m = raw.len();
        for (i, &x) in raw.iter().enumerate() {
            let k = raw.iter().filter(|&&y| y <= x).count();
            prop_assert_eq!(cdf[i].to_bits(), (k as f64 / m as f64).to_bits());
        }
        for i in 0..m {
            for j in 0..m {
                if raw[i] < raw[j] {
                    prop_assert!(cdf[i] < cdf[j]);
                } else if raw[i] == raw[j] {
                    prop_assert_eq!(cdf[i], cdf[j]);
                }
            }
        }
        prop_assert_eq!(cdf.iter().copied().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn planner_matches_sequential_loop(pairs in corpus_strategy(), vocab in vocab_strategy()) {
        let corpus = build(&pairs);
        let metric = DifficultyMetric::rarity_with(vocab);
        let planned = ScoringPlan::for_metric(&metric).execute(&corpus).unwrap();

        let v = Vocabulary::build(&corpus, vocab).unwrap();
        let table = FrequencyTable::build(&corpus, &v);
        let mut raw = Vec::new();
        for s in corpus.samples() {
            raw.push(score_rarity(s, &table).unwrap());
        }
        let cdf = compute_cdf(&raw).unwrap();
        for (i, s) in planned.samples().iter().enumerate() {
            prop_assert_eq!(s.raw_score.to_bits(), raw[i].to_bits());
            prop_assert_eq!(s.cdf.to_bits(), cdf[i].to_bits());
        }
    }

    #[test]
    fn rarity_matches_brute_force(pairs in corpus_strategy(), vocab in vocab_strategy()) {
        let corpus = build(&pairs);
        let v = Vocabulary::build(&corpus, vocab).unwrap();
        let table = FrequencyTable::build(&corpus, &v);

        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for (s, _) in &pairs {
            for w in s.split(' ') {
                *counts.entry(w).or_default() += 1;
            }
        }
        let total: u64 = counts.values().sum();
        let mut ranked: Vec<(&str, u64)> = counts.iter().map(|(&w, &c)| (w, c)).filter(|&(_, c)| c >= vocab.min_count).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(vocab.max_size);
        let kept: BTreeMap<&str, u64> = ranked.into_iter().collect();
        let unk = total - kept.values().sum::<u64>();

        for (i, (s, _)) in pairs.iter().enumerate() {
            let expected: f64 = s
                .split(' ')
                .map(|w| {
                    let c = kept.get(w).copied().unwrap_or(unk);
                    -(c as f64 / total as f64).ln()
                })
                .sum();
            let got = score_rarity(corpus.sample(i), &table).unwrap();
            prop_assert!((got - expected).abs() <= 1e-9 * expected.max(1.0), "{} vs {}", got, expected);
        }
    }

    #[test]
    fn repeated_token_rarity_scales_with_length(n in 1usize..30, other in 1usize..30) {
        // the sentence `a a ... a` of length n, next to `b` filler
        let first = vec!["a"; n].join(" ");
        let filler = vec!["b"; other].join(" ");
        let corpus = Corpus::from_pairs([(first.as_str(), "x"), (filler.as_str(), "y")], 200).unwrap();
        let config = VocabConfig { max_size: 10, min_count: 1 };
        let v = Vocabulary::build(&corpus, config).unwrap();
        let table = FrequencyTable::build(&corpus, &v);
        let p = table.get("a").unwrap();
        let got = score_rarity(corpus.sample(0), &table).unwrap();
        prop_assert!((got - n as f64 * -p.ln()).abs() <= 1e-9);
    }

    #[test]
    fn competence_is_monotone_and_bounded(c0 in 0.001f64..1.0, duration in 1u64..5000, p in 1.0f64..10.0) {
        let mut prev = 0.0;
        for t in (0..=duration + 10).step_by(((duration / 200) as usize).max(1)) {
            let c = competence_root_p(t, c0, duration, p);
            prop_assert!(c >= prev && c >= c0 && c <= 1.0);
            prev = c;
        }
        prop_assert_eq!(competence_root_p(duration, c0, duration, p), 1.0);
        prop_assert_eq!(competence_linear(0, c0, duration), c0);
    }

    #[test]
    fn pool_is_cdf_prefix(raw in prop::collection::vec(0u8..10, 1..40), c in 0.0f64..1.2, min_pool in 1usize..5) {
        let raw: Vec<f64> = raw.into_iter().map(f64::from).collect();
        let scored = scored_from(raw);
        let pool = eligible_pool(&scored, c, min_pool);
        let qualifying: Vec<usize> = (0..scored.len()).filter(|&i| scored.get(i).cdf <= c).collect();
        if qualifying.len() >= min_pool.min(scored.len()) {
            prop_assert!(!pool.clamped);
            prop_assert_eq!(pool.ids, qualifying);
        } else {
            prop_assert!(pool.clamped);
            prop_assert_eq!(pool.ids.len(), min_pool.min(scored.len()));
            prop_assert!(qualifying.iter().all(|i| pool.ids.contains(i)));
        }
    }
}

#[test]
fn root_dominance_grid() {
    for &c0 in &[0.01, 0.1, 0.3] {
        for &duration in &[100u64, 1000] {
            for t in 1..duration {
                let values: Vec<f64> = [1.0, 2.0, 3.0, 5.0, 10.0]
                    .iter()
                    .map(|&p| competence_root_p(t, c0, duration, p))
                    .collect();
                assert_eq!(
                    values[0].to_bits(),
                    competence_linear(t, c0, duration).to_bits()
                );
                for w in values.windows(2) {
                    assert!(w[1] >= w[0], "c0 {c0} T {duration} t {t}: {values:?}");
                }
            }
        }
    }
}

#[test]
fn quarter_way_pools() {
    let m = 10_000;
    let scored = scored_from((0..m).map(|i| i as f64).collect());
    let linear = CompetenceSchedule::linear(0.01, 1000).unwrap();
    let sqrt = CompetenceSchedule::sqrt(0.01, 1000).unwrap();
    assert!((linear.at(250) - 0.2575).abs() < 1e-12);
    assert!((sqrt.at(250) - 0.500075).abs() < 1e-6);
    assert_eq!(eligible_pool(&scored, linear.at(250), 1).ids.len(), 2575);
    assert_eq!(eligible_pool(&scored, sqrt.at(250), 1).ids.len(), 5000);
}

#[test]
fn draws_from_small_pool_converge_to_uniform() {
    let scored = scored_from(vec![0.0, 1.0, 2.0, 3.0]);
    let mut sampler = Sampler::uniform(&scored, 8, 42).unwrap();
    let mut counts = [0usize; 4];
    let mut draws = 0;
    while draws < 100_000 {
        for id in sampler.next_batch().unwrap().sample_ids {
            counts[id] += 1;
            draws += 1;
        }
    }
    for c in counts {
        let share = c as f64 / draws as f64;
        assert!((share - 0.25).abs() <= 0.01, "{counts:?}");
    }
}

#[test]
fn draws_pass_chi_squared_within_fixed_pool() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    // c stays at 0.5 for the whole run: the 8 easiest of 16 samples
    let scored = scored_from((0..16).map(f64::from).collect());
    let schedule = CompetenceSchedule::linear(0.5, u64::MAX / 2).unwrap();
    let config = SamplerConfig::new(schedule)
        .with_token_budget(16)
        .with_seed(7);
    let mut sampler = Sampler::new(&scored, &config).unwrap();
    let mut counts = [0u64; 16];
    let mut total = 0u64;
    while total < 100_000 {
        for id in sampler.next_batch().unwrap().sample_ids {
            counts[id] += 1;
            total += 1;
        }
    }
    assert!(counts[8..].iter().all(|&c| c == 0));
    let expected = total as f64 / 8.0;
    let stat: f64 = counts[..8]
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi2 {stat} p {p}");
}

#[test]
fn after_full_competence_matches_uniform_sampler() {
    let raw: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
    let costs: Vec<u32> = (0..50).map(|i| 1 + (i % 7)).collect();
    let scored = ScoredCorpus::from_raw(MetricKind::SentenceRarity, raw, &costs).unwrap();
    let duration = 40;
    let config = SamplerConfig::new(CompetenceSchedule::sqrt(0.01, duration).unwrap())
        .with_token_budget(30)
        .with_seed(3);
    let mut curriculum = Sampler::new(&scored, &config).unwrap();
    for _ in 0..duration {
        curriculum.next_batch().unwrap();
    }
    let mut uniform = curriculum.fork_uniform();
    for _ in 0..200 {
        let a = curriculum.next_batch().unwrap();
        let b = uniform.next_batch().unwrap();
        assert_eq!(a.sample_ids, b.sample_ids);
        assert_eq!(a.token_count, b.token_count);
        assert_eq!(a.competence, 1.0);
    }
}

#[test]
fn full_initial_competence_is_plain_sampling() {
    let scored = scored_from((0..30).map(|i| (i % 4) as f64).collect());
    let config = SamplerConfig::new(CompetenceSchedule::linear(1.0, 10).unwrap())
        .with_token_budget(5)
        .with_seed(11);
    let curriculum: Vec<_> = Sampler::new(&scored, &config)
        .unwrap()
        .batches(100)
        .map(|b| b.unwrap().sample_ids)
        .collect();
    let plain: Vec<_> = Sampler::uniform(&scored, 5, 11)
        .unwrap()
        .batches(100)
        .map(|b| b.unwrap().sample_ids)
        .collect();
    assert_eq!(curriculum, plain);
}
