use std::collections::BTreeSet;

use proptest::prelude::*;

use fmner::corpus::{corpus_stats, extract_candidates, filter_unknown, Sentence};
use fmner::eval::{evaluate, sweep_k};
use fmner::featurizer::{extract_features, FeatureSpace};
use fmner::fixtures::{xor_corpus, xor_instances};
use fmner::multiclass::train_ova;
use fmner::sparse_text::{read_binary, write_binary};
use fmner::trainer::{init_model, objective, sgd_step, train_binary};
use fmner::{Candidate, FmModel, LabeledInstance, SparseVector, TrainConfig};

fn model_strategy(max_n: usize, max_k: usize) -> impl Strategy<Value = FmModel> {
    (1..=max_n, 0..=max_k).prop_flat_map(|(n, k)| {
        (
            -2.0f64..2.0,
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(prop::collection::vec(-1.5f64..1.5, k), n),
        )
            .prop_map(move |(w0, w, v)| FmModel::from_parts(w0, w, k, v).unwrap())
    })
}

fn instance_for(n: usize) -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map(0..n, prop_oneof![-3.0f64..-0.01, 0.01f64..3.0], 0..12)
        .prop_map(|m| SparseVector::from_sorted(m.into_iter().collect()).unwrap())
}

fn model_and_instance() -> impl Strategy<Value = (FmModel, SparseVector)> {
    model_strategy(60, 12).prop_flat_map(|m| {
        let n = m.n();
        (Just(m), instance_for(n))
    })
}

fn tag() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["PER", "LOC", "ORG", "MISC", "O"])
}

proptest! {
    #[test]
    fn factorized_matches_naive((m, x) in model_and_instance()) {
        let fast = m.predict_raw(&x).unwrap();
        let naive = m.predict_raw_naive(&x).unwrap();
        prop_assert!((fast - naive).abs() <= 1e-9 * (1.0 + naive.abs()));
    }

    #[test]
    fn single_feature_is_linear((m, i, xi) in model_strategy(30, 6).prop_flat_map(|m| {
        let n = m.n();
        (Just(m), 0..n, 0.1f64..4.0)
    })) {
        let x = SparseVector::from_sorted(vec![(i, xi)]).unwrap();
        prop_assert_eq!(m.predict_raw(&x).unwrap(), m.w0() + m.w()[i] * xi);
    }

    #[test]
    fn linear_model_scales((m, x, alpha) in model_strategy(30, 0).prop_flat_map(|m| {
        let n = m.n();
        (Just(m), instance_for(n), 0.25f64..4.0)
    })) {
        let scaled = SparseVector::from_sorted(x.iter().map(|(i, v)| (i, alpha * v)).collect()).unwrap();
        let a = m.predict_raw(&scaled).unwrap() - m.w0();
        let b = alpha * (m.predict_raw(&x).unwrap() - m.w0());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn sgd_step_is_local((m, x, positive) in model_and_instance().prop_flat_map(|(m, x)| (Just(m), Just(x), any::<bool>()))) {
        let cfg = TrainConfig { k: m.k(), ..Default::default() };
        let mut after = m.clone();
        sgd_step(&mut after, &LabeledInstance::new(x.clone(), positive), &cfg).unwrap();
        let active: BTreeSet<usize> = x.iter().map(|(i, _)| i).collect();
        for i in (0..m.n()).filter(|i| !active.contains(i)) {
            prop_assert_eq!(after.w()[i], m.w()[i]);
            prop_assert_eq!(after.factor_row(i), m.factor_row(i));
        }
    }

    #[test]
    fn evaluate_is_permutation_equivariant(
        pairs in prop::collection::vec((tag(), tag()), 1..40),
        seed in any::<u64>(),
    ) {
        let gold: Vec<&str> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<&str> = pairs.iter().map(|p| p.1).collect();
        let base = evaluate(&gold, &pred).unwrap();
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        idx.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let g2: Vec<&str> = idx.iter().map(|&i| gold[i]).collect();
        let p2: Vec<&str> = idx.iter().map(|&i| pred[i]).collect();
        prop_assert_eq!(&evaluate(&g2, &p2).unwrap(), &base);
        prop_assert_eq!(base.instances(), pairs.len());
        for (row, l) in base.confusion.iter().zip(&base.labels) {
            prop_assert_eq!(row.iter().sum::<usize>(), gold.iter().filter(|g| *g == l).count());
        }
        for c in base.per_tag.values().chain([&base.micro]) {
            for v in [c.precision(), c.recall(), c.f1()] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        if base.micro.predicted == base.micro.gold {
            prop_assert_eq!(base.micro.precision(), base.micro.recall());
        }
    }

    #[test]
    fn extraction_partitions_sentence(tags in prop::collection::vec(tag(), 1..25), bio in prop::collection::vec(any::<bool>(), 25)) {
        let tokens: Vec<(String, String)> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let surface = if i % 3 == 0 { format!("W{i}") } else { format!("w{i}") };
                let tag = if *t == "O" { "O".to_string() } else if bio[i] { format!("B-{t}") } else { format!("I-{t}") };
                (surface, tag)
            })
            .collect();
        let sentence = Sentence::new(tokens).unwrap();
        let words = sentence.surfaces();
        let cands = extract_candidates(std::slice::from_ref(&sentence));
        for c in &cands {
            let mut joined = c.left.clone();
            joined.extend(c.span.iter().cloned());
            joined.extend(c.right.iter().cloned());
            prop_assert_eq!(&joined, &words);
        }
        prop_assert_eq!(corpus_stats(&cands).total_tokens(), cands.len());
        for (_, c) in corpus_stats(&cands).per_tag {
            prop_assert!(c.types <= c.tokens);
        }
    }

    #[test]
    fn unknown_filter_is_idempotent(
        train in prop::collection::vec("[A-Ca-c]{1,2}", 0..8),
        eval in prop::collection::vec("[A-Ca-c]{1,2}", 0..12),
    ) {
        let mk = |s: &String| Candidate::new(vec![s.clone()], vec![], vec![], Some("PER".into())).unwrap();
        let train: Vec<_> = train.iter().map(mk).collect();
        let eval: Vec<_> = eval.iter().map(mk).collect();
        let once = filter_unknown(&eval, &train);
        prop_assert_eq!(&filter_unknown(&once, &train), &once);
        let seen: BTreeSet<String> = train.iter().map(|c| c.surface().to_lowercase()).collect();
        for c in &eval {
            if !seen.contains(&c.surface().to_lowercase()) {
                prop_assert!(once.contains(c));
            }
        }
    }

    #[test]
    fn vectorize_is_sorted_binary(
        names in prop::collection::btree_set("[a-e]{1,3}", 1..20),
        query in prop::collection::btree_set("[a-f]{1,3}", 0..20),
    ) {
        let space = FeatureSpace::from_names(names.into_iter().collect()).unwrap();
        let v = space.vectorize(&query);
        prop_assert!(v.entries().windows(2).all(|p| p[0].0 < p[1].0));
        prop_assert!(v.iter().all(|(_, x)| x == 1.0));
        prop_assert_eq!(v.nnz(), query.iter().filter(|q| space.index_of(q).is_some()).count());
    }

    #[test]
    fn context_bag_ignores_order(ctx in prop::collection::vec("[a-z]{1,4}", 0..8), cut in 0usize..8) {
        let cut = cut.min(ctx.len());
        let a = Candidate::new(vec!["Foo".into()], ctx[..cut].to_vec(), ctx[cut..].to_vec(), None).unwrap();
        let mut rev = ctx.clone();
        rev.reverse();
        rev.extend(ctx.iter().cloned());
        let b = Candidate::new(vec!["Foo".into()], vec![], rev, None).unwrap();
        prop_assert_eq!(extract_features(&a), extract_features(&b));
    }
}

#[test]
fn sparse_text_round_trip_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.txt");
    let data: Vec<LabeledInstance> = (0..100)
        .map(|i: usize| {
            let entries = (0..(i % 7))
                .map(|j| (j * 13 + i % 5, (i as f64 * 0.37 - j as f64).sin() + 2.0))
                .collect();
            LabeledInstance::new(
                SparseVector::from_unsorted(entries).unwrap(),
                i.is_multiple_of(3),
            )
        })
        .collect();
    write_binary(&path, &data).unwrap();
    assert_eq!(read_binary(&path).unwrap(), data);
}

#[test]
fn training_reduces_objective() {
    // label: feature 0, or features 3 and 5 together; every 10th label flipped
    let data: Vec<LabeledInstance> = (0..200u64)
        .map(|i| {
            let idx: Vec<usize> = (0..8)
                .filter(|b| (i.wrapping_mul(2654435761) >> (b + 3)) & 1 == 1)
                .collect();
            let y = idx.contains(&0) || (idx.contains(&3) && idx.contains(&5));
            LabeledInstance::new(SparseVector::indicators(idx).unwrap(), y ^ (i % 10 == 0))
        })
        .collect();
    for k in [0, 2, 4] {
        let cfg = TrainConfig {
            k,
            seed: 5,
            ..Default::default()
        };
        let before = objective(&init_model(8, &cfg), &data, &cfg).unwrap();
        let after = objective(&train_binary(&data, 8, &cfg).unwrap(), &data, &cfg).unwrap();
        assert!(after <= before, "k={k}: {after} > {before}");
    }
}

#[test]
fn ova_training_is_deterministic() {
    let data: Vec<(SparseVector, String)> = (0..60)
        .map(|i: usize| {
            (
                SparseVector::indicators([i % 5, 5 + i % 4]).unwrap(),
                ["LOC", "O", "PER"][i % 3].to_string(),
            )
        })
        .collect();
    let cfg = TrainConfig {
        k: 3,
        epochs: 10,
        ..Default::default()
    };
    let a = train_ova(&data, 9, &cfg).unwrap();
    let b = train_ova(&data, 9, &cfg).unwrap();
    assert_eq!(a, b);
    // data order must not change the label set or its order
    let mut reversed = data.clone();
    reversed.reverse();
    assert_eq!(train_ova(&reversed, 9, &cfg).unwrap().labels(), a.labels());
}

type Tagged = Vec<(SparseVector, String)>;

fn xor_tagged(copies: usize, seed: u64) -> (Tagged, Tagged, usize) {
    let split = xor_instances(copies, 0.1, 0.8, seed);
    let conv = |d: &[LabeledInstance]| {
        d.iter()
            .map(|i| {
                (
                    i.x.clone(),
                    if i.is_positive() { "PER" } else { "O" }.to_string(),
                )
            })
            .collect::<Vec<_>>()
    };
    (conv(&split.train), conv(&split.test), 2)
}

#[test]
fn sweep_separates_linear_from_factorized() {
    let (train, dev, n) = xor_tagged(100, 2);
    let cfg = TrainConfig {
        learning_rate: 0.01,
        ..Default::default()
    };
    let a = sweep_k(&train, &dev, n, &[0, 4], &cfg).unwrap();
    let b = sweep_k(&train, &dev, n, &[0, 4], &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].0, 0);
    assert!(a[0].1 < a[1].1, "{a:?}");
}

#[test]
fn corpus_fixture_prepares_cleanly() {
    let c = xor_corpus(30, 0.0, 9);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("train.conll");
    std::fs::write(&p, &c.train).unwrap();
    let sentences = fmner::corpus::parse_column_file(&p, 0, 3).unwrap();
    let cands = extract_candidates(&sentences);
    assert_eq!(cands.len(), sentences.len());
    assert!(cands
        .iter()
        .all(|c| c.span.len() == 1 && c.span[0].starts_with("Name")));
}
