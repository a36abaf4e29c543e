//! wasm-bindgen exports for `www/index.html`. The plain functions hold the
//! logic and are tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use wasm_bindgen::prelude::*;
use zeno_core::bath::{default_fit_window, fit_decay_rate, golden_rule_rate, ww_evolve, BathConfig, BathState};
use zeno_core::lindblad::IntegratorConfig;
use zeno_core::zeno::{projection_formula, run_zeno, ZenoConfig};

/// Points kept per plotted curve.
const PLOT_POINTS: usize = 400;

/// `P₂(n)` for `n = 1..=n_max`.
pub fn projection_curve(n_max: usize) -> Vec<f64> {
    (1..=n_max).map(projection_formula).collect()
}

/// Populations over one π-pulse, flattened as `[t, p1, p2, p3]` rows.
pub fn zeno_populations(n_pulses: usize, gamma: f64, omega_opt: f64, pulse_duration: f64) -> Result<Vec<f64>, String> {
    let mut cfg = ZenoConfig::with_rates(1.0, omega_opt, gamma, n_pulses, pulse_duration);
    let steps = (cfg.duration() / cfg.integrator.dt).ceil() as usize;
    cfg.integrator = IntegratorConfig { record_stride: (steps / PLOT_POINTS).max(1), ..cfg.integrator };
    let result = run_zeno(&cfg).map_err(|e| e.to_string())?;
    let traj = &result.trajectory;
    let mut out = Vec::with_capacity(4 * traj.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.push(*t);
        out.extend(s.populations());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decay {
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    pub gamma_golden: f64,
    pub gamma_fit: f64,
}

/// Excited population of an emitter in a discrete bath.
pub fn emission(n_modes: usize, mode_spacing: f64, coupling: f64, t_max: f64) -> Result<Decay, String> {
    let half_band = 0.5 * n_modes.saturating_sub(1) as f64 * mode_spacing;
    let dt = if half_band > 0.0 { 0.01f64.min(0.025 / half_band) } else { 0.01 };
    let steps = (t_max / dt).ceil() as usize;
    let cfg = BathConfig {
        n_modes,
        mode_spacing,
        coupling,
        t_max,
        dt,
        record_stride: (steps / PLOT_POINTS).max(1),
    };
    let series = ww_evolve(&cfg, &BathState::excited(n_modes)).map_err(|e| e.to_string())?;
    let population = series.excited_population();
    let gamma_fit = fit_decay_rate(&series.times, &population, default_fit_window(&cfg)).unwrap_or(f64::NAN);
    Ok(Decay { times: series.times, population, gamma_golden: golden_rule_rate(&cfg), gamma_fit })
}

#[wasm_bindgen(js_name = projectionCurve)]
pub fn projection_curve_js(n_max: usize) -> Vec<f64> {
    projection_curve(n_max)
}

#[wasm_bindgen(js_name = zenoPopulations)]
pub fn zeno_populations_js(n_pulses: usize, gamma: f64, omega_opt: f64, pulse_duration: f64) -> Result<Vec<f64>, JsError> {
    zeno_populations(n_pulses, gamma, omega_opt, pulse_duration).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = EmissionResult)]
pub struct EmissionJs(Decay);

#[wasm_bindgen(js_class = EmissionResult)]
impl EmissionJs {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn population(&self) -> Vec<f64> {
        self.0.population.clone()
    }

    #[wasm_bindgen(getter, js_name = gammaGolden)]
    pub fn gamma_golden(&self) -> f64 {
        self.0.gamma_golden
    }

    #[wasm_bindgen(getter, js_name = gammaFit)]
    pub fn gamma_fit(&self) -> f64 {
        self.0.gamma_fit
    }
}

#[wasm_bindgen(js_name = emission)]
pub fn emission_js(n_modes: usize, mode_spacing: f64, coupling: f64, t_max: f64) -> Result<EmissionJs, JsError> {
    emission(n_modes, mode_spacing, coupling, t_max).map(EmissionJs).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_starts_at_one() {
        let c = projection_curve(4);
        assert_eq!(c.len(), 4);
        assert_eq!(c[0], 1.0);
        assert!((c[3] - 0.375).abs() < 1e-15);
        assert!(projection_curve(0).is_empty());
    }

    #[test]
    fn populations_are_rows_of_four() {
        let rows = zeno_populations(4, 400.0, 800.0, 0.05).unwrap();
        assert_eq!(rows.len() % 4, 0);
        assert!(rows.len() / 4 <= PLOT_POINTS + 2);
        let last = &rows[rows.len() - 4..];
        assert!((last[0] - std::f64::consts::PI).abs() < 1e-9);
        assert!((last[1] + last[2] + last[3] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bad_inputs_become_messages() {
        let err = zeno_populations(8, 400.0, 800.0, 1.0).unwrap_err();
        assert!(err.contains("pulse_duration"), "{err}");
        assert!(emission(400, 0.01, 0.01, 1.0).is_err());
    }
}
