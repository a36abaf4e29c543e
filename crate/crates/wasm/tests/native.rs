use zeno_demo::{emission, projection_curve, zeno_populations};

#[test]
fn emission_decays_near_golden_rule() {
    let d = emission(801, 0.01, 0.01, 10.0).unwrap();
    assert_eq!(d.times.len(), d.population.len());
    assert_eq!(d.population[0], 1.0);
    assert!((d.gamma_fit - d.gamma_golden).abs() / d.gamma_golden < 0.05, "{} vs {}", d.gamma_fit, d.gamma_golden);
}

#[test]
fn demo_curve_agrees_with_simulation_for_two_pulses() {
    let rows = zeno_populations(2, 400.0, 800.0, 0.05).unwrap();
    let p2 = rows[rows.len() - 2];
    assert!((p2 - projection_curve(2)[1]).abs() < 0.01, "{p2}");
}
