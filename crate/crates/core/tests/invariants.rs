//! Cross-cutting property tests: serialization round-trips, encoding
//! injectivity, pruning arithmetic, and voting recounts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use llm4perf::config_space::{
    encode_configuration, enumerate_space, prune_space, ConfigOption, ConfigSpace, Configuration,
    OptionKind, OptionValue,
};
use llm4perf::pipeline::{vote_candidates, vote_tally};

fn arb_option(index: usize) -> impl Strategy<Value = ConfigOption> {
    let numeric = (2usize..=4).prop_map(move |n| {
        ConfigOption::new(
            format!("n{index}"),
            OptionKind::NumericDiscrete,
            (0..n as i64).map(OptionValue::Int).collect(),
        )
        .unwrap()
    });
    let categorical = (2usize..=4).prop_map(move |n| {
        ConfigOption::new(
            format!("c{index}"),
            OptionKind::Categorical,
            (0..n).map(|v| OptionValue::Symbol(format!("v{v}"))).collect(),
        )
        .unwrap()
    });
    let boolean = Just(
        ConfigOption::new(
            format!("b{index}"),
            OptionKind::Boolean,
            vec![OptionValue::Bool(false), OptionValue::Bool(true)],
        )
        .unwrap(),
    );
    prop_oneof![numeric, categorical, boolean]
}

fn arb_space() -> impl Strategy<Value = ConfigSpace> {
    (1usize..=4)
        .prop_flat_map(|n| (0..n).map(arb_option).collect::<Vec<_>>())
        .prop_map(|options| ConfigSpace::new(options, vec![]).unwrap())
}

proptest! {
    #[test]
    fn space_json_round_trips(space in arb_space()) {
        let text = serde_json::to_string_pretty(&space).unwrap();
        let back: ConfigSpace = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&space, &back);
        prop_assert_eq!(text, serde_json::to_string_pretty(&back).unwrap());
    }

    #[test]
    fn encode_then_decode_is_identity(space in arb_space()) {
        let all = enumerate_space(&space, 1000).unwrap();
        prop_assume!(all.len() <= 1000);
        // the injectivity table is the decoder
        let mut table: HashMap<Vec<u64>, &Configuration> = HashMap::new();
        for cfg in &all {
            let bits: Vec<u64> = encode_configuration(&space, cfg)
                .unwrap()
                .iter()
                .map(|x| x.to_bits())
                .collect();
            prop_assert!(table.insert(bits, cfg).is_none(), "encoding collision");
        }
        for cfg in &all {
            let bits: Vec<u64> = encode_configuration(&space, cfg)
                .unwrap()
                .iter()
                .map(|x| x.to_bits())
                .collect();
            prop_assert_eq!(table[&bits], cfg);
        }
    }

    #[test]
    fn prune_ratio_is_exact_without_constraints(space in arb_space(), keep_mask in 1u8..15) {
        let names: Vec<String> = space.options().iter().map(|o| o.name.clone()).collect();
        let keep: BTreeSet<String> = names
            .iter()
            .enumerate()
            .filter(|(i, _)| keep_mask & (1 << i) != 0 || *i >= 8)
            .map(|(_, n)| n.clone())
            .collect();
        prop_assume!(!keep.is_empty());
        let defaults: BTreeMap<String, OptionValue> = space
            .options()
            .iter()
            .filter(|o| !keep.contains(&o.name))
            .map(|o| (o.name.clone(), o.values[0].clone()))
            .collect();
        let pruned = prune_space(&space, &keep, &defaults).unwrap();
        let dropped_product: u128 = space
            .options()
            .iter()
            .filter(|o| !keep.contains(&o.name))
            .map(|o| o.values.len() as u128)
            .product();
        prop_assert_eq!(pruned.cardinality() * dropped_product, space.cardinality());

        // pruning to the full name set leaves enumeration untouched
        let all: BTreeSet<String> = names.into_iter().collect();
        let identity = prune_space(&space, &all, &BTreeMap::new()).unwrap();
        prop_assert_eq!(
            enumerate_space(&identity, 10_000).unwrap(),
            enumerate_space(&space, 10_000).unwrap()
        );
    }
}

fn cfg(v: i64) -> Configuration {
    Configuration::from_pairs([("x", OptionValue::Int(v))])
}

#[test]
fn vote_recount_fuzz_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n_generators = rng.random_range(1..=6);
        let universe = rng.random_range(1..=8);
        let lists: Vec<Vec<Configuration>> = (0..n_generators)
            .map(|_| {
                let len = rng.random_range(0..=7);
                (0..len).map(|_| cfg(rng.random_range(0..universe))).collect()
            })
            .collect();
        let measured: HashSet<Configuration> = (0..universe)
            .filter(|_| rng.random_bool(0.2))
            .map(cfg)
            .collect();
        let k = rng.random_range(1..=8);
        let tally = vote_tally(&lists, &measured, k);

        // counts are non-increasing along the returned order
        for pair in tally.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
        // brute-force recount: number of lists containing the configuration
        for (config, count) in &tally {
            let recount = lists.iter().filter(|l| l.contains(config)).count();
            assert_eq!(*count, recount, "lists: {lists:?}");
            assert!(!measured.contains(config));
        }
        // plain variant agrees
        let plain = vote_candidates(&lists, &measured, k);
        assert_eq!(plain.len(), tally.len());
        for (a, (b, _)) in plain.iter().zip(&tally) {
            assert_eq!(a, b);
        }
        assert!(tally.len() <= k);
    }
}

#[test]
fn nsbs_greedy_max_min_on_random_spaces() {
    use llm4perf::baselines::{sample_nsbs, NsbsParams};
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for round in 0..10 {
        let n_opts = rng.random_range(1..=3);
        let options: Vec<ConfigOption> = (0..n_opts)
            .map(|i| {
                let n_vals = rng.random_range(2..=6);
                ConfigOption::new(
                    format!("o{i}"),
                    OptionKind::NumericDiscrete,
                    (0..n_vals as i64).map(OptionValue::Int).collect(),
                )
                .unwrap()
            })
            .collect();
        let space = ConfigSpace::new(options, vec![]).unwrap();
        if space.cardinality() > 500 {
            continue;
        }
        let k = (space.cardinality() as usize).min(12);
        let outcome = sample_nsbs(&space, k, round, &NsbsParams::default()).unwrap();
        let enc: Vec<Vec<f64>> = outcome
            .sampled
            .iter()
            .map(|c| encode_configuration(&space, c).unwrap())
            .collect();
        let manhattan = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        };
        let mut prev = f64::INFINITY;
        for i in 1..enc.len() {
            let min_dist = (0..i).map(|j| manhattan(&enc[i], &enc[j])).fold(f64::INFINITY, f64::min);
            assert!(min_dist <= prev + 1e-12, "max-min violated at pick {i}");
            prev = min_dist;
        }
    }
}
