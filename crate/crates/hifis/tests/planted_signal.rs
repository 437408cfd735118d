use std::collections::BTreeSet;

use hifis::checkpoint::train_final;
use hifis::dataset::build_dataset;
use hifis::eval::LossChoice;
use hifis::explain::Explainer;
use hifis::features::PipelineConfig;
use hifis::schema::FeatureSchema;
use hifis::synth::{generate_synthetic, SynthConfig};
use hifis_core::lime::LimeConfig;
use hifis_core::metrics::compute_metrics;
use hifis_core::train::predict;
use hifis_core::ModelConfig;

fn recall(ck: &hifis::checkpoint::Checkpoint, ds: &hifis::dataset::Dataset, idx: &[usize]) -> f64 {
    let (mut x, y) = ds.matrix(idx);
    ck.scaler.transform(&mut x, ds.width());
    let (p, _) = predict(&ck.params, &x, ck.cfg.threshold).unwrap();
    compute_metrics(&y, &p, ck.cfg.threshold).unwrap().recall.unwrap()
}

#[test]
fn trained_model_is_optimistic_in_sample_and_explains_with_planted_drivers() {
    let rs = generate_synthetic(&SynthConfig { clients: 800, pilot_clients: 300, ..SynthConfig::default() }, 17).unwrap();
    let ds = build_dataset(&rs, &FeatureSchema::default(), &PipelineConfig::default()).unwrap();
    let cfg = ModelConfig { fc_layers: 3, max_epochs: 80, seed: 17, ..ModelConfig::default() };
    // the last grid date is held out entirely
    let last = *ds.dates().last().unwrap();
    let mut train_part = ds.clone();
    train_part.examples.retain(|e| e.date < last);
    let ck = train_final(&train_part, &cfg, LossChoice::WeightedF1, 1).unwrap();
    let holdout: Vec<usize> = (0..ds.len()).filter(|&i| ds.examples[i].date == last).collect();
    let seen = ck.train_examples(&ds);
    let (r_train, r_holdout) = (recall(&ck, &ds, &seen), recall(&ck, &ds, &holdout));
    assert!(r_train >= r_holdout, "train recall {r_train} < holdout recall {r_holdout}");

    let (train_rows, _) = ds.matrix(&seen);
    let explainer = Explainer::new(&ck.params, &ck.scaler, &ds.schema, &train_rows, LimeConfig::default()).unwrap();
    let (mut x, _) = ds.matrix(&holdout);
    ck.scaler.transform(&mut x, ds.width());
    let probs = hifis_core::net::predict_proba(&ck.params, &x).unwrap();
    let chronic = holdout
        .iter()
        .zip(&probs)
        .filter(|(&i, _)| ds.examples[i].y == 1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(&i, _)| i)
        .expect("a chronic client in the holdout");
    let e = explainer.explain_example(&ds, chronic, 17).unwrap();
    let top = &e.bars()[0].0;
    assert!(["Stay", "Housing Subsidy", "CurrentAge"].iter().any(|d| top.contains(d)), "top entry {top:?}");

    // stability is judged at the production sample size
    let stable = Explainer::new(&ck.params, &ck.scaler, &ds.schema, &train_rows, LimeConfig { sample_size: 40_000, ..LimeConfig::default() }).unwrap();
    let top3: Vec<BTreeSet<String>> = (0..10u64)
        .map(|seed| stable.explain_example(&ds, chronic, seed).unwrap().entries.iter().take(3).map(|c| c.statement.clone()).collect())
        .collect();
    for (i, a) in top3.iter().enumerate() {
        for b in &top3[i + 1..] {
            assert!(a.intersection(b).count() >= 2, "unstable top-3: {a:?} vs {b:?}");
        }
    }
}
