use mbe_core::violations::{run_scenario, run_suite, Scenario, ScenarioKind};
use mbe_core::Execution;

#[test]
fn bias_grows_with_drift_strength() {
    let biases: Vec<f64> = [2.5, 5.0, 10.0]
        .iter()
        .map(|&drift| {
            let mut s = Scenario::preset(ScenarioKind::TransportabilityDrift, 404);
            s.shift.secular_dose_drift = drift;
            run_scenario(&s, Execution::Parallel).unwrap().mean_bias.abs()
        })
        .collect();
    assert!(biases[0] <= biases[1] && biases[1] <= biases[2], "{biases:?}");
}

#[test]
fn identical_scenarios_give_identical_reports() {
    let s = Scenario {
        n_replicates: 40,
        ..Scenario::preset(ScenarioKind::IgnorabilityConfounder, 12)
    };
    let suite = run_suite(&[s.clone(), s], Execution::Parallel).unwrap();
    assert_eq!(suite.scenarios[0], suite.scenarios[1]);
}

#[test]
fn baseline_has_the_smallest_bias_in_the_catalog() {
    let scenarios: Vec<Scenario> = ScenarioKind::ALL
        .iter()
        .map(|&k| Scenario {
            n_replicates: 200,
            ..Scenario::preset(k, 2718)
        })
        .collect();
    let suite = run_suite(&scenarios, Execution::Parallel).unwrap();
    assert_eq!(suite.reports().count(), 5);
    let baseline = suite.get("baseline").unwrap().mean_bias.abs();
    for r in suite.reports().filter(|r| r.label != "baseline") {
        assert!(
            baseline < r.mean_bias.abs(),
            "{}: {} vs baseline {baseline}",
            r.label,
            r.mean_bias
        );
    }
}
