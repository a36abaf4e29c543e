use zeno_core::bath::{
    coherence_fit, coherence_ratio, default_fit_window, fit_decay_rate, golden_rule_rate, ww_evolve,
    ww_evolve_past_recurrence, BathConfig, BathState,
};

fn excited_rate(cfg: &BathConfig) -> (f64, f64) {
    let series = ww_evolve(cfg, &BathState::excited(cfg.n_modes)).unwrap();
    let rate = fit_decay_rate(&series.times, &series.excited_population(), default_fit_window(cfg)).unwrap();
    (rate, series.max_norm_drift)
}

#[test]
fn golden_rule_emerges_for_a_broad_band() {
    // bandwidth 4 = 25 Γ_GR
    let cfg = BathConfig { coupling: 0.005, t_max: 32.0, ..BathConfig::reference() };
    assert!(cfg.is_markovian());
    let (rate, drift) = excited_rate(&cfg);
    let gamma = golden_rule_rate(&cfg);
    assert!(((rate - gamma) / gamma).abs() <= 0.05, "{rate} vs {gamma}");
    assert!(drift <= 1e-7);
}

#[test]
fn narrow_band_decays_faster_than_golden_rule() {
    // The reference band is only 6.4 Γ_GR wide. A flat band of half-width W
    // raises the rate by about Γ/(πW) ≈ 10%; 0.690859 comes from an
    // independent numpy RK4 run of the same equations.
    let cfg = BathConfig::reference();
    let (rate, drift) = excited_rate(&cfg);
    assert!((rate - 0.690_859).abs() <= 1e-5, "{rate}");
    assert!(drift <= 1e-7);
}

#[test]
fn fitted_rate_is_converged_in_dt() {
    let cfg = BathConfig::reference();
    let half = BathConfig { dt: cfg.dt / 2.0, record_stride: 2, ..cfg };
    let (a, _) = excited_rate(&cfg);
    let (b, _) = excited_rate(&half);
    assert!(((a - b) / b).abs() < 0.002);
}

#[test]
fn coherence_decays_at_half_the_population_rate() {
    let cfg = BathConfig::reference();
    let ratio = coherence_ratio(&cfg).unwrap();
    assert!((ratio - 0.5).abs() <= 0.02, "{ratio}");

    let doubled = BathConfig { coupling: 2.0 * cfg.coupling, ..cfg };
    let fit = coherence_fit(&doubled).unwrap();
    assert!((fit.ratio().unwrap() - 0.5).abs() <= 0.02);
    assert!(fit.population_rate > 3.0 * golden_rule_rate(&cfg));
    assert!(fit.series.max_norm_drift <= 1e-7);
}

#[test]
fn discrete_band_revives_after_recurrence_time() {
    let cfg = BathConfig { n_modes: 201, mode_spacing: 0.05, coupling: 0.05, t_max: 0.0, dt: 0.01, record_stride: 10 };
    let t_rec = cfg.recurrence_time();
    let cfg = BathConfig { t_max: 1.2 * t_rec, ..cfg };
    assert!(ww_evolve(&cfg, &BathState::excited(cfg.n_modes)).is_err());

    let series = ww_evolve_past_recurrence(&cfg, &BathState::excited(cfg.n_modes)).unwrap();
    let pop = series.excited_population();
    let before = series.times.iter().zip(&pop).filter(|(t, _)| **t > 30.0 && **t < 0.5 * t_rec);
    assert!(before.map(|(_, p)| *p).fold(0.0, f64::max) < 1e-3);
    let (t_peak, peak) = series
        .times
        .iter()
        .zip(&pop)
        .filter(|(t, _)| **t > 0.5 * t_rec)
        .fold((0.0, 0.0), |acc, (t, p)| if *p > acc.1 { (*t, *p) } else { acc });
    assert!(peak > 0.5, "{peak}");
    assert!((t_peak - t_rec).abs() < 0.1 * t_rec, "{t_peak}");
}

#[test]
fn reduced_state_trace_is_conserved() {
    let cfg = BathConfig { t_max: 2.0, ..BathConfig::reference() };
    let series = ww_evolve(&cfg, &BathState::superposition(cfg.n_modes)).unwrap();
    assert!(series.norm.iter().all(|n| (n - 1.0).abs() <= 1e-7));
}
