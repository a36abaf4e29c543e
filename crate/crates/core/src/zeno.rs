//! The pulsed-measurement Zeno experiment.
//!
//! An RF π-pulse of duration `T = π/Ω_rf` drives level 1 → level 2. It is
//! interrupted by `n` optical pulses on 1 ↔ 3, each of length `τ_p`, placed
//! at the end of each interval of length `τ = T/n`: pulse `k` occupies
//! `[kτ − τ_p, kτ]`. Level 3 decays back to level 1, so a pulse leaves the
//! 1–2 coherence destroyed and acts as a measurement of "level 1 or not".

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{
    evolve, hamiltonian, rk4_const, DecayChannel, DriveLevels, IntegratorConfig, PulseSchedule, Segment,
    Trajectory,
};
use crate::linalg::{Complex, DensityMatrix3, Matrix3};
use crate::parallel::map_ordered;

/// Horizon of [`decoherence_time`], in units of the SE lifetime `1/Γ`.
pub const DECOHERENCE_HORIZON: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZenoConfig {
    pub omega_rf: f64,
    pub omega_opt: f64,
    pub gamma: f64,
    pub n_pulses: usize,
    pub pulse_duration: f64,
    pub rf_during_pulse: bool,
    pub integrator: IntegratorConfig,
}

impl Default for ZenoConfig {
    /// Strong-measurement regime: `Γτ_p = 20`, `Ω_opt = 2Γ`, eight pulses.
    fn default() -> Self {
        Self::with_rates(1.0, 800.0, 400.0, 8, 0.05)
    }
}

impl ZenoConfig {
    /// A config whose integrator is the default for the given rates.
    pub fn with_rates(omega_rf: f64, omega_opt: f64, gamma: f64, n_pulses: usize, pulse_duration: f64) -> Self {
        let mut cfg = Self {
            omega_rf,
            omega_opt,
            gamma,
            n_pulses,
            pulse_duration,
            rf_during_pulse: true,
            integrator: IntegratorConfig::for_max_rate(1.0, IntegratorConfig::DEFAULT_STRIDE),
        };
        cfg.integrator = IntegratorConfig::for_max_rate(cfg.max_rate(), IntegratorConfig::DEFAULT_STRIDE);
        cfg
    }

    /// Length of the full RF π-pulse.
    pub fn duration(&self) -> f64 {
        PI / self.omega_rf
    }

    /// Measurement spacing `τ = T/n`.
    pub fn spacing(&self) -> f64 {
        self.duration() / self.n_pulses as f64
    }

    pub fn max_rate(&self) -> f64 {
        self.omega_rf.max(self.omega_opt).max(self.gamma)
    }

    pub fn decay(&self) -> DecayChannel {
        DecayChannel { gamma: self.gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_rf.is_finite() && self.omega_rf > 0.0) {
            return Err(Error::config("omega_rf", "must be finite and > 0"));
        }
        if !(self.omega_opt.is_finite() && self.omega_opt >= 0.0) {
            return Err(Error::config("omega_opt", "must be finite and >= 0"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::config("gamma", "must be finite and >= 0"));
        }
        if self.n_pulses == 0 {
            return Err(Error::config("n_pulses", "must be >= 1"));
        }
        if !(self.pulse_duration.is_finite() && self.pulse_duration >= 0.0) {
            return Err(Error::config("pulse_duration", "must be finite and >= 0"));
        }
        let tau = self.spacing();
        if self.pulse_duration >= tau {
            return Err(Error::config(
                "pulse_duration",
                format!("{} must be shorter than the pulse spacing T/n = {tau}", self.pulse_duration),
            ));
        }
        self.integrator.check(self.max_rate())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZenoResult {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub trajectory: Trajectory,
    pub formula_p2: f64,
    /// `|p2 − formula_p2|`.
    pub deviation: f64,
}

impl ZenoResult {
    pub fn trace_drift(&self) -> f64 {
        self.trajectory.final_state().trace_error()
    }
}

/// Level-2 population after `n` ideal projective measurements spread over a
/// π-pulse: `½[1 − cosⁿ(π/n)]`.
pub fn projection_formula(n: usize) -> f64 {
    assert!(n >= 1, "projection_formula needs n >= 1");
    0.5 * (1.0 - (PI / n as f64).cos().powi(n as i32))
}

/// The same quantity obtained by brute force: `n` rounds of unitary RF
/// evolution for `τ` followed by complete dephasing of the 1–2 coherence.
pub fn projective_chain(n: usize) -> f64 {
    assert!(n >= 1, "projective_chain needs n >= 1");
    // Ω_rf = 1, so each interval rotates by θ = π/n; U = exp(−iθσx/2) on 1–2
    let half = 0.5 * PI / n as f64;
    let mut u = Matrix3::zero();
    u[(0, 0)] = Complex::new(half.cos(), 0.0);
    u[(1, 1)] = Complex::new(half.cos(), 0.0);
    u[(0, 1)] = Complex::new(0.0, -half.sin());
    u[(1, 0)] = Complex::new(0.0, -half.sin());
    u[(2, 2)] = Complex::new(1.0, 0.0);
    let u_dag = u.adjoint();

    let mut rho = *DensityMatrix3::pure(0).matrix();
    for _ in 0..n {
        rho = u * rho * u_dag;
        // ρ → P₁ρP₁ + P₂ρP₂
        let mut projected = Matrix3::zero();
        projected[(0, 0)] = rho[(0, 0)];
        projected[(1, 1)] = rho[(1, 1)];
        rho = projected;
    }
    rho[(1, 1)].re
}

pub fn build_schedule(cfg: &ZenoConfig) -> Result<PulseSchedule> {
    cfg.validate()?;
    let total = cfg.duration();
    let n = cfg.n_pulses;
    let free = DriveLevels::new(cfg.omega_rf, 0.0);
    let pulsed = DriveLevels::new(if cfg.rf_during_pulse { cfg.omega_rf } else { 0.0 }, cfg.omega_opt);

    let mut segments = Vec::with_capacity(2 * n);
    let mut t_prev = 0.0;
    for k in 1..=n {
        let t_k = if k == n { total } else { total * k as f64 / n as f64 };
        let t_on = t_k - cfg.pulse_duration;
        segments.push(Segment { t_start: t_prev, t_end: t_on, drives: free });
        if cfg.pulse_duration > 0.0 {
            segments.push(Segment { t_start: t_on, t_end: t_k, drives: pulsed });
        }
        t_prev = t_k;
    }
    PulseSchedule::new(segments)
}

pub fn run_zeno(cfg: &ZenoConfig) -> Result<ZenoResult> {
    let schedule = build_schedule(cfg)?;
    let trajectory = evolve(&DensityMatrix3::pure(0), &schedule, cfg.decay(), &cfg.integrator)?;
    let [p1, p2, p3] = trajectory.final_state().populations();
    let formula_p2 = projection_formula(cfg.n_pulses);
    Ok(ZenoResult {
        p1,
        p2,
        p3,
        trajectory,
        formula_p2,
        deviation: (p2 - formula_p2).abs(),
    })
}

fn check_rates(omega_opt: f64, gamma: f64) -> Result<()> {
    if !(omega_opt.is_finite() && omega_opt >= 0.0) {
        return Err(Error::config("omega_opt", "must be finite and >= 0"));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::config("gamma", "must be finite and >= 0"));
    }
    Ok(())
}

/// How much of the 1–2 coherence survives one optical pulse of length
/// `tau_p` with the RF off, starting from the equal superposition:
/// `|ρ12(τ_p)| / |ρ12(0)|`.
pub fn pulse_kill_ratio(omega_opt: f64, gamma: f64, tau_p: f64) -> Result<f64> {
    check_rates(omega_opt, gamma)?;
    if !(tau_p.is_finite() && tau_p >= 0.0) {
        return Err(Error::config("pulse_duration", "must be finite and >= 0"));
    }
    let rho0 = DensityMatrix3::rf_superposition();
    let schedule = PulseSchedule::constant(tau_p, DriveLevels::new(0.0, omega_opt))?;
    let integrator = IntegratorConfig::for_max_rate(omega_opt.max(gamma), usize::MAX);
    let traj = evolve(&rho0, &schedule, DecayChannel { gamma }, &integrator)?;
    Ok(traj.final_state().element(0, 1).norm() / rho0.element(0, 1).norm())
}

/// First time at which `|ρ12|` falls to `1/e` of its initial value under a
/// continuous optical drive with the RF off, linearly interpolated between
/// integration steps.
pub fn decoherence_time(omega_opt: f64, gamma: f64) -> Result<f64> {
    check_rates(omega_opt, gamma)?;
    if gamma <= 0.0 {
        return Err(Error::config("gamma", "must be > 0"));
    }
    let horizon = DECOHERENCE_HORIZON / gamma;
    let decay = DecayChannel { gamma };
    let h = hamiltonian(DriveLevels::new(0.0, omega_opt));
    let dt = IntegratorConfig::for_max_rate(omega_opt.max(gamma), 1).dt;
    let n_steps = (horizon / dt).ceil() as usize;

    let mut rho = *DensityMatrix3::rf_superposition().matrix();
    let threshold = rho[(0, 1)].norm() / E;
    let mut prev = rho[(0, 1)].norm();
    for j in 1..=n_steps {
        let (next, _) = rk4_const(&rho, &h, decay, dt);
        if !next.is_finite() {
            return Err(Error::StepUnstable { t: j as f64 * dt });
        }
        rho = next;
        let cur = rho[(0, 1)].norm();
        if cur <= threshold {
            let t_prev = (j - 1) as f64 * dt;
            return Ok(t_prev + dt * (prev - threshold) / (prev - cur));
        }
        prev = cur;
    }
    Err(Error::NotReached { horizon })
}

/// Pulse length used when sweeping `Γ`: long enough to be a complete
/// measurement (`Γτ_p = 10`) but never more than a quarter of the spacing.
pub fn sweep_pulse_duration(spacing: f64, gamma: f64) -> f64 {
    let quarter = 0.25 * spacing;
    if gamma > 0.0 {
        quarter.min(10.0 / gamma)
    } else {
        quarter
    }
}

/// `base` moved to decay rate `gamma`: `Ω_opt` keeps the base `Ω_opt/Γ`
/// ratio, `τ_p` follows [`sweep_pulse_duration`] and `dt` shrinks if the new
/// rates require it.
pub fn spacing_point_config(base: &ZenoConfig, gamma: f64) -> ZenoConfig {
    let mut cfg = *base;
    cfg.gamma = gamma;
    if base.gamma > 0.0 {
        cfg.omega_opt = base.omega_opt / base.gamma * gamma;
    }
    cfg.pulse_duration = sweep_pulse_duration(cfg.spacing(), gamma);
    let bound = IntegratorConfig::for_max_rate(cfg.max_rate(), base.integrator.record_stride).dt;
    cfg.integrator.dt = base.integrator.dt.min(bound);
    cfg
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingPoint {
    pub gamma: f64,
    /// `Γτ`: measurement spacing in units of the SE lifetime.
    pub gamma_tau: f64,
    pub omega_opt: f64,
    pub pulse_duration: f64,
    pub p2_sim: f64,
    pub p2_formula: f64,
    pub deviation: f64,
}

/// Deviation from the projection formula as the measurement spacing shrinks
/// relative to the SE lifetime, at fixed `n`. Rows are sorted by `Γ`
/// descending.
pub fn spacing_deviation_curve(base: &ZenoConfig, gamma_list: &[f64]) -> Result<Vec<SpacingPoint>> {
    if gamma_list.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::config("gamma_list", "values must be finite and >= 0"));
    }
    let max = gamma_list.iter().copied().fold(0.0, f64::max);
    let min_pos = gamma_list.iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    if !(max >= 10.0 * min_pos) {
        return Err(Error::config("gamma_list", "must span at least a decade"));
    }
    let results = map_ordered(gamma_list, |&gamma| {
        let cfg = spacing_point_config(base, gamma);
        run_zeno(&cfg).map(|r| SpacingPoint {
            gamma,
            gamma_tau: gamma * cfg.spacing(),
            omega_opt: cfg.omega_opt,
            pulse_duration: cfg.pulse_duration,
            p2_sim: r.p2,
            p2_formula: r.formula_p2,
            deviation: r.deviation,
        })
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn formula_examples() {
        assert_eq!(projection_formula(1), 1.0);
        assert_abs_diff_eq!(projection_formula(2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(projection_formula(4), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(projection_formula(32), 0.0716, epsilon = 1e-4);
    }

    #[test]
    fn chain_examples() {
        assert_abs_diff_eq!(projective_chain(1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(projective_chain(8), 0.23461, epsilon = 1e-5);
        assert_abs_diff_eq!(projective_chain(16), 0.13343, epsilon = 1e-5);
    }

    #[test]
    fn schedule_examples() {
        let cfg = ZenoConfig { n_pulses: 1, pulse_duration: 0.1, ..ZenoConfig::default() };
        let s = build_schedule(&cfg).unwrap();
        let segs = s.segments();
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].t_start, segs[0].t_end), (0.0, PI - 0.1));
        assert_eq!((segs[1].t_start, segs[1].t_end), (PI - 0.1, PI));
        assert_eq!(segs[0].drives, DriveLevels::new(1.0, 0.0));
        assert_eq!(segs[1].drives, DriveLevels::new(1.0, 800.0));

        let cfg = ZenoConfig { n_pulses: 2, pulse_duration: 0.05, ..ZenoConfig::default() };
        let s = build_schedule(&cfg).unwrap();
        let segs = s.segments();
        assert_eq!(segs.len(), 4);
        assert_abs_diff_eq!(segs[1].t_end, PI / 2.0, epsilon = 1e-15);
        assert_eq!(segs[3].t_end, PI);
        assert!(segs[1].drives.omega_opt > 0.0 && segs[3].drives.omega_opt > 0.0);
        assert_eq!(s.span(), PI);

        let ok = ZenoConfig { n_pulses: 4, pulse_duration: 0.5, ..ZenoConfig::default() };
        assert!(build_schedule(&ok).is_ok());
        let bad = ZenoConfig { n_pulses: 4, pulse_duration: 0.8, ..ZenoConfig::default() };
        assert!(matches!(build_schedule(&bad), Err(Error::ConfigInvalid { .. })));
    }

    #[test]
    fn schedule_rf_switch() {
        let cfg = ZenoConfig { rf_during_pulse: false, ..ZenoConfig::default() };
        let s = build_schedule(&cfg).unwrap();
        assert!(s.segments().iter().all(|seg| (seg.drives.omega_opt > 0.0) != (seg.drives.omega_rf > 0.0)));
    }

    #[test]
    fn zero_pulse_duration_has_no_pulse_segments() {
        let cfg = ZenoConfig { pulse_duration: 0.0, ..ZenoConfig::default() };
        let s = build_schedule(&cfg).unwrap();
        assert_eq!(s.segments().len(), 8);
    }

    #[test]
    fn undisturbed_pi_pulse() {
        let cfg = ZenoConfig::with_rates(1.0, 0.0, 0.0, 5, 0.05);
        let r = run_zeno(&cfg).unwrap();
        assert_abs_diff_eq!(r.p2, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn kill_ratio_trivial_cases() {
        assert_abs_diff_eq!(pulse_kill_ratio(0.0, 0.0, 0.05).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(pulse_kill_ratio(800.0, 400.0, 0.0).unwrap(), 1.0);
        assert!(pulse_kill_ratio(-1.0, 400.0, 0.1).is_err());
    }

    #[test]
    fn decoherence_time_needs_coupling() {
        assert!(matches!(decoherence_time(0.0, 100.0), Err(Error::NotReached { .. })));
        assert!(matches!(decoherence_time(200.0, 0.0), Err(Error::ConfigInvalid { .. })));
    }

    #[test]
    fn sweep_pulse_rule() {
        assert_eq!(sweep_pulse_duration(0.4, 0.0), 0.1);
        assert_eq!(sweep_pulse_duration(0.4, 1000.0), 0.01);
        let base = ZenoConfig::default();
        let c = spacing_point_config(&base, 100.0);
        assert_eq!(c.omega_opt, 200.0);
        assert!(c.validate().is_ok());
        let c = spacing_point_config(&base, 0.0);
        assert_eq!(c.omega_opt, 0.0);
    }

    #[test]
    fn spacing_curve_rejects_narrow_grid() {
        let base = ZenoConfig::default();
        assert!(spacing_deviation_curve(&base, &[10.0, 50.0]).is_err());
        assert!(spacing_deviation_curve(&base, &[-1.0, 50.0]).is_err());
        assert!(spacing_deviation_curve(&base, &[]).is_err());
    }
}
