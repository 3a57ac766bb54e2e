mod support;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rumour_core::classifiers::{class_weights, train, Classifier, ClassWeight, ModelKind, Penalty, TrainConfig};
use rumour_core::corpus::{Dataset, PostKey, SequenceItem, SequenceRecord, StanceLabel, VeracityLabel};
use rumour_core::evaluation::{ablation, cross_validate, grid_search, learning_curve, random_search, ParamGrid};
use rumour_core::features::{Category, FeatureConfig, FeatureExtractor, FeatureMatrix, PostContext};
use rumour_core::resources::{Resources, SynonymDictionary};
use rumour_core::sampling::{
    pair_constraint, replace_synonyms, sub_sample, super_sample, super_sampled_cv, write_augmented_jsonl,
    PairPlacement, DEFAULT_REPLACE_FRACTION,
};
use rumour_core::veracity::{
    auto_label, protocol_cv3, protocol_mix, protocol_transfer, stance_string, to_sequences, EmConfig, HmmClassifier,
    HmmOptions, StructureMode, UnverifiedMode, VbBaseline, Variant, VeracitySpec,
};

fn contexts(ds: &Dataset) -> Vec<PostContext<'_>> {
    ds.posts().into_iter().map(Into::into).collect()
}

fn matrix(ds: &Dataset, cfg: &FeatureConfig, res: &Resources) -> (FeatureExtractor, FeatureMatrix, Vec<usize>) {
    let ctx = contexts(ds);
    let fx = FeatureExtractor::fit(&ctx, &ctx, cfg, res).unwrap();
    let x = fx.extract_all(&ctx, res).unwrap();
    let y = ctx.iter().map(|c| c.post.sdqc_submission.index()).collect();
    (fx, x, y)
}

#[test]
fn fixture_feature_layout() {
    let ds = support::fixture_dataset();
    let res = support::fixture_resources();
    let (fx, x, _) = matrix(&ds, &FeatureConfig::all(), &res);
    let width = |c: Category| x.category_width(c);
    assert_eq!(width(Category::Text), 13);
    assert_eq!(width(Category::Lexicon), 4);
    assert_eq!(width(Category::Sentiment), 1);
    assert_eq!(width(Category::Reddit), 10);
    assert_eq!(width(Category::Pos), 17);
    assert_eq!(width(Category::Embeddings), 303);
    assert_eq!(width(Category::Bow), fx.vocabulary.len());
    assert_eq!(x.n_cols(), fx.dimension());
    assert_eq!(x.n_rows(), 18);
    let names: Vec<String> = fx.columns().iter().map(|c| c.name.clone()).collect();
    assert!(names.iter().any(|n| n == "cos_parent"));
    assert!(names.iter().any(|n| n.starts_with("S:")));
}

#[test]
fn embeddings_need_vectors() {
    let ds = support::fixture_dataset();
    let mut res = support::fixture_resources();
    res.vectors = None;
    let ctx = contexts(&ds);
    let err = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all(), &res).unwrap_err();
    assert!(err.to_string().contains("word-vector"), "{err}");
    let cfg = FeatureConfig::all().without(&[Category::Embeddings]);
    assert!(FeatureExtractor::fit(&ctx, &ctx, &cfg, &res).is_ok());
}

#[test]
fn negative_variance_threshold_is_rejected() {
    let ds = support::fixture_dataset();
    let res = support::fixture_resources();
    let ctx = contexts(&ds);
    let cfg = FeatureConfig { variance_threshold: Some(-1.0), ..FeatureConfig::all() };
    assert!(FeatureExtractor::fit(&ctx, &ctx, &cfg, &res).is_err());
}

#[test]
fn model_round_trip_and_layout_guard() {
    let ds = support::synthetic_dataset(10, 1);
    let res = support::fixture_resources();
    let cfg = FeatureConfig::all().without(&[Category::Embeddings]);
    let (_, x, y) = matrix(&ds, &cfg, &res);
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Svm, ModelKind::Logistic, ModelKind::Tree, ModelKind::Forest, ModelKind::Stratified] {
        let mut tc = TrainConfig::new(kind).with_seed(3);
        tc.forest.n_trees = 5;
        let clf = train(&x, &y, &tc).unwrap();
        let path = dir.path().join(format!("{kind:?}.json"));
        clf.save(&path).unwrap();
        let back = Classifier::load(&path).unwrap();
        assert_eq!(back.predict_batch(&x).unwrap(), clf.predict_batch(&x).unwrap(), "{kind:?}");
    }
    let clf = train(&x, &y, &TrainConfig::new(ModelKind::Svm)).unwrap();
    let narrower = x.drop_category(Category::Pos);
    assert!(clf.predict_batch(&narrower).is_err());
    let other = FeatureMatrix::from_dense_anonymous(&vec![vec![0.0; x.n_cols()]; 1]).unwrap();
    assert!(clf.predict_batch(&other).is_err(), "same width, different columns");
}

#[test]
fn training_input_errors() {
    let x = FeatureMatrix::from_dense_anonymous(&[vec![1.0], vec![2.0]]).unwrap();
    assert!(train(&x, &[0], &TrainConfig::default()).is_err());
    assert!(train(&x, &[1, 1], &TrainConfig::default()).is_err());
    let bad = FeatureMatrix::from_dense_anonymous(&[vec![f64::NAN], vec![2.0]]);
    if let Ok(bad) = bad {
        assert!(train(&bad, &[0, 1], &TrainConfig::default()).is_err());
    }
    let l1 = TrainConfig { penalty: Penalty::L1, ..TrainConfig::default() };
    assert!(train(&x, &[0, 1], &l1).is_err());
    assert!(train(&x, &[0, 1], &TrainConfig::default().with_c(0.0)).is_err());
}

#[test]
fn balanced_weights_example() {
    let y: Vec<usize> = std::iter::repeat_n(0, 90).chain(std::iter::repeat_n(1, 10)).collect();
    let w = class_weights(&y, &[0, 1], true);
    assert!((w[0] - 100.0 / 180.0).abs() < 1e-12);
    assert!((w[1] - 5.0).abs() < 1e-12);
    assert_eq!(class_weights(&y, &[0, 1], false), [1.0, 1.0]);
}

#[test]
fn learned_models_beat_majority_on_synthetic_corpus() {
    let ds = support::synthetic_dataset(30, 2);
    let res = support::fixture_resources();
    let (_, x, y) = matrix(&ds, &FeatureConfig::all().without(&[Category::Embeddings]), &res);
    let mv = cross_validate(&x, &y, 4, &TrainConfig::new(ModelKind::Majority), 5, 0).unwrap();
    let svm = cross_validate(&x, &y, 4, &TrainConfig::new(ModelKind::Svm), 5, 0).unwrap();
    let logit = cross_validate(
        &x,
        &y,
        4,
        &TrainConfig::new(ModelKind::Logistic).with_class_weight(ClassWeight::Balanced),
        5,
        0,
    )
    .unwrap();
    assert!(svm.macro_f1.mean > mv.macro_f1.mean + 0.1, "{} vs {}", svm.macro_f1, mv.macro_f1);
    assert!(logit.macro_f1.mean > mv.macro_f1.mean + 0.1);
    assert_eq!(svm.folds.len(), 5);
    assert_eq!(svm.pooled.confusion.total() as usize, y.len());
    let again = cross_validate(&x, &y, 4, &TrainConfig::new(ModelKind::Svm), 5, 0).unwrap();
    assert_eq!(again, svm);
}

#[test]
fn search_ablation_and_learning_curve() {
    let ds = support::synthetic_dataset(24, 4);
    let res = support::fixture_resources();
    let (_, x, y) = matrix(&ds, &FeatureConfig::all().without(&[Category::Embeddings]), &res);
    let base = TrainConfig::new(ModelKind::Logistic);
    let one = grid_search(&x, &y, 4, &base, &ParamGrid::singleton(&base), 3, 0).unwrap();
    assert_eq!(one.best, base);
    assert_eq!(one.fits, 3);
    let grid = ParamGrid { c: vec![1.0, 10.0], ..ParamGrid::singleton(&base) };
    let two = grid_search(&x, &y, 4, &base, &grid, 3, 0).unwrap();
    assert_eq!(two.scores.len(), 2);
    let best = two.scores.iter().map(|s| s.1.mean).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(two.scores.iter().find(|s| s.1.mean == best).unwrap().0, two.best);
    let empty = ParamGrid { c: vec![], ..grid.clone() };
    assert!(grid_search(&x, &y, 4, &base, &empty, 3, 0).is_err());
    let rs = random_search(&x, &y, 4, &base, &ParamGrid::linear_space_l2(), 3, 3, 0).unwrap();
    assert_eq!(rs.scores.len(), 3);
    let mut cs: Vec<_> = rs.scores.iter().map(|s| format!("{:?}", s.0)).collect();
    cs.sort();
    cs.dedup();
    assert_eq!(cs.len(), 3, "random search samples without replacement");

    let rows = ablation(&x, &y, 4, &TrainConfig::new(ModelKind::Svm), 3, 0).unwrap();
    assert!(rows[0].held_out.is_none());
    assert_eq!(rows.len(), 1 + 7);
    let curve = learning_curve(&x, &y, 4, &TrainConfig::new(ModelKind::Svm), &[0.5, 1.0], 3, 0).unwrap();
    assert_eq!(curve.len(), 2);
    assert!(curve[0].n_samples < curve[1].n_samples);
}

#[test]
fn synonym_threshold_arithmetic() {
    let dict = SynonymDictionary::new([
        ("en".to_string(), vec!["et".to_string()]),
        ("to".to_string(), vec!["2".to_string()]),
        ("tre".to_string(), vec!["3".to_string()]),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (text, n) = replace_synonyms("en to tre fire fem seks syv otte", &dict, &mut rng);
    assert_eq!((text.as_str(), n), ("et 2 3 fire fem seks syv otte", 3));
    let (quoted, n) = replace_synonyms("> en to\nen https://x.dk/en", &dict, &mut rng);
    assert_eq!((quoted.as_str(), n), ("> en to\net https://x.dk/en", 1));

    let ds = support::fixture_dataset();
    let r = ds.posts().into_iter().find(|r| r.post().sdqc_submission == StanceLabel::Supporting).unwrap();
    let mut eight = r.post().clone();
    eight.raw_text = "en to tre fire fem seks syv otte".into();
    eight.tokens = rumour_core::corpus::preprocess(&eight.raw_text);
    let mut seven = eight.clone();
    seven.raw_text = "en to fire fem seks syv otte".into();
    seven.tokens = rumour_core::corpus::preprocess(&seven.raw_text);
    let posts = [(r.key(), &eight)];
    assert_eq!(super_sample(&posts, &dict, DEFAULT_REPLACE_FRACTION, 0).len(), 1, "3 of 8 passes");
    let posts = [(r.key(), &seven)];
    assert!(super_sample(&posts, &dict, DEFAULT_REPLACE_FRACTION, 0).is_empty(), "2 of 7 fails");
}

#[test]
fn super_sampling_links_and_determinism() {
    let ds = support::fixture_dataset();
    let res = support::fixture_resources();
    let refs = ds.posts();
    let keyed: Vec<(PostKey, _)> = refs.iter().map(|r| (r.key(), r.post())).collect();
    let a = super_sample(&keyed, &res.synonyms, 0.1, 7);
    let b = super_sample(&keyed, &res.synonyms, 0.1, 7);
    assert_eq!(a, b);
    assert!(!a.is_empty());
    for s in &a {
        let orig = keyed.iter().find(|(k, _)| *k == s.synthetic_of).unwrap().1;
        assert_ne!(orig.sdqc_submission, StanceLabel::Commenting);
        assert_eq!(s.post.comment_id, format!("{}_syn", orig.comment_id));
        assert_eq!(s.post.sdqc_submission, orig.sdqc_submission);
        assert_ne!(s.post.raw_text, orig.raw_text);
        assert!(s.replaced as f64 >= 0.1 * s.token_count as f64);
    }
    assert_eq!(support::fixture_dataset(), ds, "originals untouched");
    assert!(super_sample(&keyed, &SynonymDictionary::default(), 0.1, 7).is_empty());

    let mut buf = Vec::new();
    write_augmented_jsonl(&ds, &a, &mut buf).unwrap();
    let lines: Vec<serde_json::Value> =
        std::str::from_utf8(&buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), ds.post_count() + a.len());
    assert!(lines[..ds.post_count()].iter().all(|v| v["synthetic_of"].is_null()));
    assert!(lines[ds.post_count()..].iter().all(|v| v["synthetic_of"].is_string()));
}

#[test]
fn pair_constraints() {
    let folds = vec![vec![0, 2], vec![1, 3]];
    assert!(pair_constraint(&folds, &[(0, 2)], PairPlacement::CoLocated).is_ok());
    let err = pair_constraint(&folds, &[(0, 3)], PairPlacement::CoLocated).unwrap_err();
    assert!(err.to_string().contains("(0, 3)"), "{err}");
    assert!(pair_constraint(&folds, &[(0, 2)], PairPlacement::TrainOnly).is_err());
    assert!(pair_constraint(&[vec![0], vec![1]], &[(0, 2)], PairPlacement::TrainOnly).is_ok());
    assert_eq!(pair_constraint(&folds, &[], PairPlacement::CoLocated).unwrap(), folds);
}

#[test]
fn super_sampled_cv_runs_in_both_placements() {
    let ds = sub_sample(&support::synthetic_dataset(30, 5));
    let res = support::fixture_resources();
    let dict = SynonymDictionary::new(
        ["ja", "nej", "hvorfor", "sandt", "falsk", "kilde", "løgn", "enig"]
            .iter()
            .map(|w| (w.to_string(), vec![format!("{w}x")])),
    );
    let refs = ds.posts();
    let ctx: Vec<PostContext> = refs.iter().map(|r| (*r).into()).collect();
    let cfg = FeatureConfig::all().without(&[Category::Embeddings]);
    let fx = FeatureExtractor::fit(&ctx, &ctx, &cfg, &res).unwrap();
    let x = fx.extract_all(&ctx, &res).unwrap();
    let y: Vec<usize> = ctx.iter().map(|c| c.post.sdqc_submission.index()).collect();
    let keyed: Vec<_> = refs.iter().map(|r| (r.key(), r.post())).collect();
    let syn = super_sample(&keyed, &dict, 0.2, 1);
    assert!(!syn.is_empty());
    let index: HashMap<_, usize> = keyed.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
    let of: Vec<usize> = syn.iter().map(|s| index[&s.synthetic_of]).collect();
    let sctx: Vec<PostContext> = syn.iter().zip(&of).map(|(s, &o)| ctx[o].with_post(&s.post)).collect();
    let xs = fx.extract_all(&sctx, &res).unwrap();
    let ys: Vec<usize> = of.iter().map(|&o| y[o]).collect();
    let tc = TrainConfig::new(ModelKind::Svm);
    let co = super_sampled_cv(&x, &y, &xs, &ys, &of, PairPlacement::CoLocated, 4, &tc, 3, 0).unwrap();
    let tr = super_sampled_cv(&x, &y, &xs, &ys, &of, PairPlacement::TrainOnly, 4, &tc, 3, 0).unwrap();
    assert_eq!(co.pooled.confusion.total() as usize, y.len() + ys.len());
    assert_eq!(tr.pooled.confusion.total() as usize, y.len());
    assert!(super_sampled_cv(&x, &y, &xs, &ys[1..], &of, PairPlacement::TrainOnly, 4, &tc, 3, 0).is_err());
}

fn quick_hmm(variant: Variant, unverified: UnverifiedMode) -> HmmOptions {
    HmmOptions {
        variant,
        unverified,
        n_range: (1..=3).collect(),
        em: EmConfig { restarts: 2, max_iter: 30, ..Default::default() },
        ..Default::default()
    }
}

/// Sequences whose stance mix depends on the label.
fn labelled_sequences(n: usize, seed: u64) -> Vec<SequenceRecord> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let veracity = VeracityLabel::ALL[i % 3];
            let deny = match veracity {
                VeracityLabel::True => 0.05,
                VeracityLabel::False => 0.6,
                VeracityLabel::Unverified => 0.3,
            };
            let len = rng.random_range(3..10);
            SequenceRecord {
                dataset_tag: "synthetic".into(),
                event: format!("e{}", i % 2),
                rumour_id: format!("r{i}"),
                veracity,
                items: (0..len)
                    .map(|t| SequenceItem {
                        stance: if rng.random_bool(deny) {
                            StanceLabel::Denying
                        } else if rng.random_bool(0.3) {
                            StanceLabel::Supporting
                        } else {
                            StanceLabel::Commenting
                        },
                        t: t as f64 * 60.0,
                    })
                    .collect(),
            }
        })
        .collect()
}

#[test]
fn hmm_classifier_fit_predict_and_persist() {
    let recs = labelled_sequences(60, 1);
    for mode in [UnverifiedMode::AsFalse, UnverifiedMode::AsTrue, UnverifiedMode::ThreeWay] {
        let clf = HmmClassifier::fit(&recs, &quick_hmm(Variant::Omega, mode)).unwrap();
        assert_eq!(clf.models.len(), mode.labels().len());
        assert!((1..=3).contains(&clf.n_states));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hmm.json");
        clf.save(&path).unwrap();
        let back = HmmClassifier::load(&path).unwrap();
        for r in &recs {
            let p = clf.predict(r).unwrap();
            assert!(mode.labels().contains(&p));
            assert_eq!(back.predict(r).unwrap(), p);
        }
    }
    let only_true: Vec<_> = recs.iter().filter(|r| r.veracity == VeracityLabel::True).cloned().collect();
    let err = HmmClassifier::fit(&only_true, &quick_hmm(Variant::Lambda, UnverifiedMode::AsFalse)).unwrap_err();
    assert!(err.to_string().contains("no training sequences for label false"), "{err}");
}

#[test]
fn veracity_protocols() {
    let recs = labelled_sequences(60, 2);
    let spec = VeracitySpec::Hmm(quick_hmm(Variant::Lambda, UnverifiedMode::AsFalse));
    let cv = protocol_cv3(&recs, &spec, 0).unwrap();
    assert_eq!(cv.folds.len(), 3);
    assert!(cv.accuracy.mean > 0.6, "{}", cv.accuracy);
    let vb = VeracitySpec::Vb { unverified: UnverifiedMode::AsFalse };
    assert!(protocol_cv3(&recs, &vb, 0).is_ok());
    let (a, b) = recs.split_at(30);
    let t = protocol_transfer(a, b, &spec).unwrap();
    assert_eq!(t.confusion.total(), 30);
    let err = protocol_transfer(&[], b, &spec).unwrap_err();
    assert!(err.to_string().contains("missing training sequences"));
    let mix = protocol_mix(a, b, &vb, 0).unwrap();
    assert_eq!(mix.pooled.confusion.total(), 60);
}

#[test]
fn vb_baseline_picks_nearest_distribution() {
    let recs = labelled_sequences(30, 3);
    let vb = VbBaseline::fit(&recs, UnverifiedMode::ThreeWay).unwrap();
    let all_deny = SequenceRecord {
        items: vec![SequenceItem { stance: StanceLabel::Denying, t: 0.0 }; 5],
        ..recs[0].clone()
    };
    assert_eq!(vb.predict(&all_deny), VeracityLabel::False);
    assert_eq!(stance_string(&all_deny), "DDDDD");
}

#[test]
fn auto_label_leaves_each_rumour_out() {
    let ds = support::synthetic_dataset(12, 6);
    let res = support::fixture_resources();
    let cfg = FeatureConfig::all().without(&[Category::Embeddings, Category::Lexicon, Category::Reddit, Category::Mfw]);
    let out = auto_label(&ds, &cfg, &res, &TrainConfig::new(ModelKind::Svm)).unwrap();
    let rumours = ds.rumour_subset();
    assert_eq!(out.audit.len(), rumours.submissions.len());
    assert!(out.audit.iter().all(|a| a.leaked == 0 && a.train_posts + a.test_posts == ds.post_count()));
    assert_eq!(out.stances.len(), rumours.post_count());
    assert_eq!(out.relabelled.post_count(), rumours.post_count());
    for r in out.relabelled.posts() {
        assert_eq!(r.post().sdqc_submission, out.stances[&r.key()]);
    }
    assert_eq!(out.report.confusion.total() as usize, rumours.post_count());
    let bas = to_sequences(&out.relabelled, StructureMode::Bas);
    assert_eq!(bas.len(), rumours.branch_count());
}
