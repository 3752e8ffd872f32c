use std::collections::BTreeMap;

use proptest::prelude::*;

use shapecf_core::blackbox::{Classifier, KnnClassifier};
use shapecf_core::cfgen::{EngineConfig, EngineError, Explainer, PerturbationKind, SearchPhase};
use shapecf_core::dataset::{train_test_split, Label, MtsDataset, MtsInstance};
use shapecf_core::eval::{baseline_dim_substitution, proximity, sparsity};
use shapecf_core::mining::{mine_contracted, Budget, MiningConfig, ShapeletStore};
use shapecf_core::synthetic::{motif_dataset, MotifConfig, MotifDataset};

fn mining(seed: u64, candidates: usize) -> MiningConfig {
    MiningConfig {
        budget: Budget::Candidates(candidates),
        seed,
        ..Default::default()
    }
}

/// Best fraction, over class-shapelets on the motif dimension, of that
/// class's training instances whose motif window is hit by an occurrence.
fn motif_recovery(m: &MotifDataset<f64>, train: &MtsDataset<f64>, store: &ShapeletStore<f64>) -> f64 {
    let starts: BTreeMap<usize, usize> = m
        .dataset
        .instances()
        .iter()
        .zip(&m.motif_starts)
        .map(|(i, &s)| (i.id, s))
        .collect();
    let width = m.config.motif_width;
    let mut best = 0.0f64;
    for sh in store.shapelets.iter().filter(|s| s.shapelet.dim == m.config.motif_dim) {
        let class = sh.shapelet.class_assoc.as_ref().unwrap();
        let members: Vec<usize> = train
            .iter()
            .filter(|(_, l)| *l == class)
            .map(|(i, _)| i.id)
            .collect();
        let len = sh.shapelet.len();
        let hit = members
            .iter()
            .filter(|id| {
                let s = starts[id];
                sh.occurrences
                    .iter()
                    .any(|o| o.instance_id == **id && o.start < s + width && s < o.start + len)
            })
            .count();
        best = best.max(hit as f64 / members.len() as f64);
    }
    best
}

#[test]
fn mining_recovers_the_injected_motif() {
    let mut ok = 0;
    for seed in 0..3 {
        let m = motif_dataset::<f64>(&MotifConfig { seed, ..Default::default() });
        let (train, _) = train_test_split(&m.dataset, 0.7, seed).unwrap();
        let out = mine_contracted(&train, &mining(seed, 2000), 2).unwrap();
        if motif_recovery(&m, &train, &out.store) >= 0.5 {
            ok += 1;
        }
    }
    assert!(ok >= 2, "{ok}/3 seeds recovered the motif");
}

#[test]
fn mining_is_independent_of_thread_count() {
    let m = motif_dataset::<f64>(&MotifConfig { n_per_class: 20, seed: 4, ..Default::default() });
    let a = mine_contracted(&m.dataset, &mining(9, 400), 1).unwrap();
    let b = mine_contracted(&m.dataset, &mining(9, 400), 4).unwrap();
    assert_eq!(a.store.to_json(), b.store.to_json());
    let c = mine_contracted(&m.dataset, &mining(10, 400), 4).unwrap();
    assert_ne!(a.store.to_json(), c.store.to_json());
}

#[test]
fn zero_budget_mines_nothing() {
    let m = motif_dataset::<f64>(&MotifConfig { n_per_class: 10, ..Default::default() });
    let out = mine_contracted(&m.dataset, &mining(0, 0), 1).unwrap();
    assert!(out.is_empty());
    assert_eq!(out.log.candidates_evaluated, 0);
    let model = KnnClassifier::fit(&m.dataset, 1).unwrap();
    let err = Explainer::new(&out.store, &model, &m.dataset, EngineConfig::default()).err();
    assert!(matches!(err, Some(EngineError::EmptyStore)));
}

#[test]
fn single_dimension_data_works_end_to_end() {
    let m = motif_dataset::<f64>(&MotifConfig { dims: 1, n_per_class: 30, seed: 2, ..Default::default() });
    let (train, test) = train_test_split(&m.dataset, 0.7, 2).unwrap();
    let out = mine_contracted(&train, &mining(2, 1000), 2).unwrap();
    assert!(out.store.shapelets.iter().all(|s| s.shapelet.dim == 0));
    let model = KnnClassifier::fit(&train, 1).unwrap();
    let ex = Explainer::new(&out.store, &model, &train, EngineConfig::default()).unwrap();
    let mut valid = 0;
    for (x, label) in test.iter() {
        let target = Label::from(if label.as_str() == "A" { "B" } else { "A" });
        let original = model.predict(x).unwrap().argmax().clone();
        let cf = ex.explain(x, &original, &target).unwrap();
        assert!(cf.perturbed_dims().iter().all(|&d| d == 0));
        valid += cf.valid as usize;
    }
    assert!(valid * 10 >= test.len() * 9, "{valid}/{}", test.len());
}

#[test]
fn baseline_on_one_dimension_returns_the_nun() {
    let m = motif_dataset::<f64>(&MotifConfig { dims: 1, n_per_class: 15, seed: 6, ..Default::default() });
    let (train, test) = train_test_split(&m.dataset, 0.7, 6).unwrap();
    let model = KnnClassifier::fit(&train, 1).unwrap();
    for (x, _) in test.iter() {
        let original = model.predict(x).unwrap().argmax().clone();
        let target = Label::from(if original.as_str() == "A" { "B" } else { "A" });
        let cf = baseline_dim_substitution(x, &original, &target, &train, &model).unwrap();
        let nun = shapecf_core::cfgen::nearest_unlike_neighbor(x, &target, &train).unwrap();
        assert_eq!(cf.values, nun.values());
        // the NUN is a training point of the target class under 1-NN
        assert!(cf.valid);
    }
}

#[test]
fn baseline_needs_one_dimension_when_one_decides_the_class() {
    let m = motif_dataset::<f64>(&MotifConfig { n_per_class: 30, seed: 8, ..Default::default() });
    let (train, test) = train_test_split(&m.dataset, 0.7, 8).unwrap();
    let model = KnnClassifier::fit(&train, 1).unwrap();
    for (x, _) in test.iter() {
        let original = model.predict(x).unwrap().argmax().clone();
        let target = Label::from(if original.as_str() == "A" { "B" } else { "A" });
        let cf = baseline_dim_substitution(x, &original, &target, &train, &model).unwrap();
        if cf.valid && cf.phase == SearchPhase::SingleDimension {
            assert_eq!(cf.perturbed_dims().len(), 1);
            let sp = sparsity(x.values(), &cf.values, 0.0).unwrap();
            assert!(sp as f64 >= 0.9 * 60.0);
        }
    }
}

struct Fixture {
    train: MtsDataset<f64>,
    test: MtsDataset<f64>,
    store: ShapeletStore<f64>,
    model: KnnClassifier<f64>,
}

fn fixture(seed: u64) -> Fixture {
    let m = motif_dataset::<f64>(&MotifConfig { n_per_class: 30, seed, ..Default::default() });
    let (train, test) = train_test_split(&m.dataset, 0.7, seed).unwrap();
    let store = mine_contracted(&train, &mining(seed, 800), 2).unwrap().store;
    let model = KnnClassifier::fit(&train, 1).unwrap();
    Fixture { train, test, store, model }
}

fn check_counterfactual(f: &Fixture, x: &MtsInstance<f64>, original: &Label, target: &Label) -> Result<(), TestCaseError> {
    let ex = Explainer::new(&f.store, &f.model, &f.train, EngineConfig::default()).unwrap();
    let cf = ex.explain(x, original, target).unwrap();
    let p = proximity(x.values(), &cf.values).unwrap();
    prop_assert!(p.linf <= p.l2 + 1e-12 && p.l2 <= p.l1 + 1e-12);

    // every changed cell lies inside a recorded window
    let sp = sparsity(x.values(), &cf.values, 0.0).unwrap();
    let budget: usize = cf.perturbations.iter().map(|r| r.window.1 - r.window.0).sum();
    prop_assert!(sp <= budget);
    for (d, (a, b)) in x.values().iter().zip(&cf.values).enumerate() {
        for (t, (u, v)) in a.iter().zip(b).enumerate() {
            if u != v {
                prop_assert!(cf
                    .perturbations
                    .iter()
                    .any(|r| r.dim == d && r.window.0 <= t && t < r.window.1));
            }
        }
    }
    for r in &cf.perturbations {
        prop_assert!(r.kind != PerturbationKind::Substitution);
        let sh = f.store.get(r.shapelet_id.unwrap()).unwrap();
        prop_assert_eq!(r.window.1 - r.window.0, sh.shapelet.len());
    }

    // validity is exactly what the model says about the returned values
    let again = f.model.predict(&x.with_values(cf.values.clone()).unwrap()).unwrap();
    prop_assert_eq!(cf.valid, again.argmax() == target);
    prop_assert_eq!(&cf.model_scores, &again);
    if cf.phase == SearchPhase::SingleDimension {
        prop_assert_eq!(cf.perturbed_dims().len(), 1);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counterfactual_properties(seed in 0u64..3, pick in 0usize..1000) {
        let f = fixture(seed);
        let (x, _) = f.test.iter().nth(pick % f.test.len()).unwrap();
        let original = f.model.predict(x).unwrap().argmax().clone();
        let target = Label::from(if original.as_str() == "A" { "B" } else { "A" });
        check_counterfactual(&f, x, &original, &target)?;
    }
}

#[test]
fn explain_all_matches_sequential_calls() {
    let f = fixture(5);
    let ex = Explainer::new(&f.store, &f.model, &f.train, EngineConfig::default()).unwrap();
    let queries: Vec<(&MtsInstance<f64>, Label, Label)> = f
        .test
        .iter()
        .map(|(x, l)| {
            let other = Label::from(if l.as_str() == "A" { "B" } else { "A" });
            (x, l.clone(), other)
        })
        .collect();
    let par = ex.explain_all(&queries, 4).unwrap();
    for ((x, o, t), cf) in queries.iter().zip(&par) {
        assert_eq!(&ex.explain(x, o, t).unwrap(), cf);
    }
}

#[test]
fn already_target_is_returned_unchanged() {
    let f = fixture(1);
    let ex = Explainer::new(&f.store, &f.model, &f.train, EngineConfig::default()).unwrap();
    let (x, _) = f.test.iter().next().unwrap();
    let predicted = f.model.predict(x).unwrap().argmax().clone();
    let cf = ex.explain(x, &predicted, &predicted).unwrap();
    assert_eq!(cf.phase, SearchPhase::AlreadyTarget);
    assert!(cf.valid);
    assert_eq!(cf.values, x.values());
    assert!(cf.perturbations.is_empty());
}
