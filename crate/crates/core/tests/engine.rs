use badac::config::{ExperimentConfig, ExperimentKind};
use badac::engine::{
    class_log_evidence, compress_to_template, make_tophat_from_data, online_update, posterior, rank_anomalies,
    template_log_likelihood, AnomalyHypothesis, AnomalyLikelihood, Hypothesis, OnlineConfig,
};
use badac::harness::class_models;
use badac::simulators::generate_dataset;
use badac::Instance;

fn data(kind: ExperimentKind) -> badac::simulators::SimulatedData {
    generate_dataset(&ExperimentConfig::new(kind).with_counts(200, 300).with_seed(21)).unwrap()
}

#[test]
fn posterior_probabilities_sum_to_one_on_simulated_data() {
    let d = data(ExperimentKind::Gaussian);
    let models = class_models(&d.train).unwrap();
    let all = d.train.instances().iter().chain(d.test.instances()).cloned().collect();
    let hyp = AnomalyHypothesis {
        likelihood: AnomalyLikelihood::TopHat(make_tophat_from_data(&badac::Dataset::new(all).unwrap()).unwrap()),
        prior: 1.0 / 3.0,
    };
    for t in d.test.instances() {
        let r = posterior(t, &models, Some(&hyp)).unwrap();
        let total: f64 = r.class_probs.iter().sum::<f64>() + r.anomaly_prob.unwrap();
        assert!((total - 1.0).abs() <= 1e-12);
        assert_eq!(r.anomaly_score, -r.known_log_evidence);
    }
}

#[test]
fn ranking_is_sorted_and_complete() {
    let d = data(ExperimentKind::Compact);
    let models = class_models(&d.train).unwrap();
    let ranked = rank_anomalies(d.test.instances(), &models).unwrap();
    assert_eq!(ranked.len(), d.test.len());
    assert!(ranked.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
    let mut ids: Vec<usize> = ranked.iter().map(|r| r.0).collect();
    ids.sort_unstable();
    assert_eq!(ids, (0..d.test.len()).collect::<Vec<_>>());
}

#[test]
fn full_and_template_scores_are_finite() {
    let d = data(ExperimentKind::Gaussian);
    let models = class_models(&d.train).unwrap();
    for m in &models {
        let tmpl = compress_to_template(m).unwrap();
        for t in d.test.instances().iter().take(20) {
            let full = class_log_evidence(t, m).unwrap();
            assert!(full.is_finite());
            assert!(template_log_likelihood(t, &tmpl).unwrap().is_finite());
        }
    }
}

#[test]
fn far_instance_starts_a_class_that_claims_its_twin() {
    let d = data(ExperimentKind::Gaussian);
    let models = class_models(&d.train).unwrap();
    let grid = d.train.grid().unwrap().clone();
    let m = grid.len();
    let odd = Instance::new(grid.clone(), (0..m).map(|j| 4.0 + (j % 3) as f64).collect(), vec![0.3; m], None).unwrap();
    let twin = Instance::new(grid, odd.values().iter().map(|v| v + 0.05).collect(), vec![0.3; m], None).unwrap();
    let hyp = AnomalyHypothesis {
        likelihood: AnomalyLikelihood::Calibrated(-200.0),
        prior: 1.0 / 3.0,
    };
    let r = posterior(&odd, &models, Some(&hyp)).unwrap();
    assert_eq!(r.argmax(), Hypothesis::Anomaly);
    let grown = online_update(&models, &odd, &r, &OnlineConfig::default()).unwrap();
    assert_eq!(grown.len(), 3);
    let new_id = grown[2].class_id();
    let again = posterior(&twin, &grown, Some(&hyp)).unwrap();
    assert_eq!(again.argmax(), Hypothesis::Class(new_id));
}
