//! Weisskopf–Wigner emission into a discretized vacuum.
//!
//! A two-level emitter (ground = level 1, excited = level 3) couples with a
//! flat coupling `g` to `N` field modes detuned by
//! `Δ_k = (k − (N−1)/2)·δω`. In the single-excitation sector the state is
//! `c_g|g,0⟩ + c_e|e,0⟩ + Σ c_k|g,1_k⟩` and, in the interaction picture,
//!
//! ```text
//! ċ_e = −i g Σ_k e^{+iΔ_k t} c_k,    ċ_k = −i g e^{−iΔ_k t} c_e,    ċ_g = 0
//! ```
//!
//! For a dense, broad band this gives exponential decay at the golden-rule
//! rate `Γ = 2πg²/δω`. Two regimes are excluded from rate fits: the short
//! quadratic region `t ≲ 1/bandwidth` and anything near the recurrence
//! time `2π/δω`, where the discrete band sends the photon back.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Complex;

/// Required ratio of bandwidth to golden-rule rate for a Markovian band.
pub const MARKOV_BANDWIDTH_FACTOR: f64 = 20.0;
/// `t_max` may not exceed this fraction of the recurrence time.
pub const MAX_RECURRENCE_FRACTION: f64 = 0.5;
/// Largest allowed `dt · bandwidth/2`.
pub const PHASE_STEP_BOUND: f64 = 0.05;
/// Rate below which a fit is considered "not decaying".
const DECAY_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    pub n_modes: usize,
    pub mode_spacing: f64,
    pub coupling: f64,
    pub t_max: f64,
    pub dt: f64,
    pub record_stride: usize,
}

impl BathConfig {
    /// The `N = 4001, g = 0.01, δω = 0.001, t_max = 8` emission run.
    pub fn reference() -> Self {
        Self {
            n_modes: 4001,
            mode_spacing: 0.001,
            coupling: 0.01,
            t_max: 8.0,
            dt: 0.01,
            record_stride: 1,
        }
    }

    /// `(N − 1)·δω`.
    pub fn bandwidth(&self) -> f64 {
        (self.n_modes.saturating_sub(1)) as f64 * self.mode_spacing
    }

    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.mode_spacing
    }

    pub fn detunings(&self) -> Vec<f64> {
        let center = (self.n_modes as f64 - 1.0) / 2.0;
        (0..self.n_modes).map(|k| (k as f64 - center) * self.mode_spacing).collect()
    }

    /// Whether the band is broad enough (`bandwidth ≥ 20 Γ_GR`) for the
    /// golden-rule rate to hold to a few percent. Narrower bands still run;
    /// their decay rate exceeds `Γ_GR` by roughly `Γ_GR/(π·bandwidth/2)`.
    pub fn is_markovian(&self) -> bool {
        self.bandwidth() >= MARKOV_BANDWIDTH_FACTOR * golden_rule_rate(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 || self.n_modes % 2 == 0 {
            return Err(Error::config("n_modes", "must be a positive odd number"));
        }
        if !(self.mode_spacing.is_finite() && self.mode_spacing > 0.0) {
            return Err(Error::config("mode_spacing", "must be finite and > 0"));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::config("coupling", "must be finite and >= 0"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::config("t_max", "must be finite and > 0"));
        }
        let limit = MAX_RECURRENCE_FRACTION * self.recurrence_time();
        if self.t_max > limit {
            return Err(Error::config(
                "t_max",
                format!("{} exceeds half the recurrence time ({limit})", self.t_max),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt", "must be finite and > 0"));
        }
        if self.dt * self.bandwidth() / 2.0 > PHASE_STEP_BOUND * (1.0 + 1e-12) {
            return Err(Error::config(
                "dt",
                format!("dt * bandwidth/2 = {} exceeds {PHASE_STEP_BOUND}", self.dt * self.bandwidth() / 2.0),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::config("record_stride", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathState {
    pub c_e: Complex,
    pub c_g: Complex,
    pub c_modes: Vec<Complex>,
}

impl BathState {
    /// Excited emitter, empty field.
    pub fn excited(n_modes: usize) -> Self {
        Self {
            c_e: Complex::new(1.0, 0.0),
            c_g: Complex::new(0.0, 0.0),
            c_modes: vec![Complex::new(0.0, 0.0); n_modes],
        }
    }

    pub fn ground(n_modes: usize) -> Self {
        Self {
            c_e: Complex::new(0.0, 0.0),
            c_g: Complex::new(1.0, 0.0),
            c_modes: vec![Complex::new(0.0, 0.0); n_modes],
        }
    }

    /// `(|g⟩ + |e⟩)/√2` with the field empty.
    pub fn superposition(n_modes: usize) -> Self {
        let a = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            c_e: a,
            c_g: a,
            c_modes: vec![Complex::new(0.0, 0.0); n_modes],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr() + self.c_modes.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `Re⟨self, other⟩` over all amplitudes.
    pub fn real_inner(&self, other: &BathState) -> f64 {
        let modes: f64 = self.c_modes.iter().zip(&other.c_modes).map(|(a, b)| (a.conj() * b).re).sum();
        (self.c_g.conj() * other.c_g).re + (self.c_e.conj() * other.c_e).re + modes
    }

    fn is_finite(&self) -> bool {
        let ok = |c: &Complex| c.re.is_finite() && c.im.is_finite();
        ok(&self.c_e) && ok(&self.c_g) && self.c_modes.iter().all(ok)
    }

    /// `self + h·k`, written into `out`.
    fn axpy_into(&self, h: f64, k: &BathState, out: &mut BathState) {
        out.c_e = self.c_e + k.c_e * h;
        out.c_g = self.c_g + k.c_g * h;
        for ((o, a), b) in out.c_modes.iter_mut().zip(&self.c_modes).zip(&k.c_modes) {
            *o = a + b * h;
        }
    }
}

/// `Γ = 2πg²/δω`.
pub fn golden_rule_rate(cfg: &BathConfig) -> f64 {
    2.0 * PI * cfg.coupling * cfg.coupling / cfg.mode_spacing
}

struct Model {
    detunings: Vec<f64>,
    g: f64,
}

impl Model {
    fn new(cfg: &BathConfig) -> Self {
        Self { detunings: cfg.detunings(), g: cfg.coupling }
    }

    /// `e^{+iΔ_k t}` for every mode.
    fn phases_into(&self, t: f64, out: &mut [Complex]) {
        for (p, d) in out.iter_mut().zip(&self.detunings) {
            let (s, c) = (d * t).sin_cos();
            *p = Complex::new(c, s);
        }
    }

    fn rhs_into(&self, state: &BathState, phases: &[Complex], out: &mut BathState) {
        let minus_ig = Complex::new(0.0, -self.g);
        let mut sum = Complex::new(0.0, 0.0);
        for ((o, c), p) in out.c_modes.iter_mut().zip(&state.c_modes).zip(phases) {
            sum += p * c;
            *o = minus_ig * p.conj() * state.c_e;
        }
        out.c_e = minus_ig * sum;
        out.c_g = Complex::new(0.0, 0.0);
    }
}

/// Time derivative of the amplitudes at time `t`.
pub fn ww_rhs(state: &BathState, t: f64, cfg: &BathConfig) -> BathState {
    let model = Model::new(cfg);
    let mut phases = vec![Complex::new(0.0, 0.0); cfg.n_modes];
    model.phases_into(t, &mut phases);
    let mut out = BathState::ground(cfg.n_modes);
    model.rhs_into(state, &phases, &mut out);
    out
}

/// Sampled emitter amplitudes from [`ww_evolve`].
#[derive(Clone, Debug, PartialEq)]
pub struct BathSeries {
    pub times: Vec<f64>,
    pub c_e: Vec<Complex>,
    pub c_g: Vec<Complex>,
    pub norm: Vec<f64>,
    pub max_norm_drift: f64,
    pub final_state: BathState,
}

impl BathSeries {
    pub fn excited_population(&self) -> Vec<f64> {
        self.c_e.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `|ρ_eg| = |c_g|·|c_e|` after tracing out the field.
    pub fn coherence(&self) -> Vec<f64> {
        self.c_e.iter().zip(&self.c_g).map(|(e, g)| e.norm() * g.norm()).collect()
    }
}

/// RK4 integration of the amplitude equations from `0` to `t_max`.
pub fn ww_evolve(cfg: &BathConfig, initial: &BathState) -> Result<BathSeries> {
    cfg.validate()?;
    integrate(cfg, initial)
}

/// [`ww_evolve`] without the recurrence-time limit on `t_max`, for looking
/// at the revival that a discrete band produces at `2π/δω`.
pub fn ww_evolve_past_recurrence(cfg: &BathConfig, initial: &BathState) -> Result<BathSeries> {
    let mut probe = *cfg;
    probe.t_max = probe.t_max.min(MAX_RECURRENCE_FRACTION * cfg.recurrence_time());
    probe.validate()?;
    integrate(cfg, initial)
}

fn integrate(cfg: &BathConfig, initial: &BathState) -> Result<BathSeries> {
    if initial.c_modes.len() != cfg.n_modes {
        return Err(Error::config("initial", "mode count does not match n_modes"));
    }
    let model = Model::new(cfg);
    let n = cfg.n_modes;
    let n_steps = ((cfg.t_max / cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = cfg.t_max / n_steps as f64;

    let zero = || vec![Complex::new(0.0, 0.0); n];
    let (mut ph_start, mut ph_mid, mut ph_end) = (zero(), zero(), zero());
    let blank = BathState::ground(n);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (blank.clone(), blank.clone(), blank.clone(), blank.clone(), blank);

    let norm0 = initial.norm_sqr();
    let mut state = initial.clone();
    let mut series = BathSeries {
        times: vec![0.0],
        c_e: vec![state.c_e],
        c_g: vec![state.c_g],
        norm: vec![norm0],
        max_norm_drift: 0.0,
        final_state: BathState::ground(0),
    };
    model.phases_into(0.0, &mut ph_start);

    for j in 0..n_steps {
        let t = j as f64 * h;
        model.phases_into(t + 0.5 * h, &mut ph_mid);
        model.phases_into(t + h, &mut ph_end);

        model.rhs_into(&state, &ph_start, &mut k1);
        state.axpy_into(0.5 * h, &k1, &mut tmp);
        model.rhs_into(&tmp, &ph_mid, &mut k2);
        state.axpy_into(0.5 * h, &k2, &mut tmp);
        model.rhs_into(&tmp, &ph_mid, &mut k3);
        state.axpy_into(h, &k3, &mut tmp);
        model.rhs_into(&tmp, &ph_end, &mut k4);

        let w = h / 6.0;
        state.c_e += (k1.c_e + k2.c_e * 2.0 + k3.c_e * 2.0 + k4.c_e) * w;
        for (i, c) in state.c_modes.iter_mut().enumerate() {
            *c += (k1.c_modes[i] + k2.c_modes[i] * 2.0 + k3.c_modes[i] * 2.0 + k4.c_modes[i]) * w;
        }
        std::mem::swap(&mut ph_start, &mut ph_end);

        let step = j + 1;
        let t_next = if step == n_steps { cfg.t_max } else { step as f64 * h };
        if !state.is_finite() {
            return Err(Error::StepUnstable { t: t_next });
        }
        let norm = state.norm_sqr();
        series.max_norm_drift = series.max_norm_drift.max((norm - norm0).abs());
        if step % cfg.record_stride == 0 || step == n_steps {
            series.times.push(t_next);
            series.c_e.push(state.c_e);
            series.c_g.push(state.c_g);
            series.norm.push(norm);
        }
    }
    series.final_state = state;
    Ok(series)
}

/// Fit window that skips the quadratic short-time region and stays well
/// before the recurrence: `[2/bandwidth, min(5/Γ_GR, 0.4·T_rec, t_max)]`.
pub fn default_fit_window(cfg: &BathConfig) -> (f64, f64) {
    let bw = cfg.bandwidth();
    let t_lo = if bw > 0.0 { 2.0 / bw } else { 0.0 };
    let gamma = golden_rule_rate(cfg);
    let by_rate = if gamma > 0.0 { 5.0 / gamma } else { f64::INFINITY };
    let t_hi = by_rate.min(0.4 * cfg.recurrence_time()).min(cfg.t_max);
    (t_lo, t_hi)
}

/// Least-squares slope of `ln(value)` against `t` over the samples inside
/// `window` (inclusive), negated.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let (t_lo, t_hi) = window;
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        if t < t_lo || t > t_hi {
            continue;
        }
        if !(v > 1e-12) {
            return Err(Error::NonPositiveSamples { t, value: v });
        }
        let y = v.ln();
        n += 1.0;
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    let denom = n * sxx - sx * sx;
    if n < 2.0 || denom <= 0.0 {
        return Err(Error::WindowEmpty { t_lo, t_hi });
    }
    Ok(-(n * sxy - sx * sy) / denom)
}

/// Fitted decay rates from one run starting in `(|g⟩ + |e⟩)/√2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceFit {
    pub population_rate: f64,
    pub coherence_rate: f64,
    pub series: BathSeries,
}

impl CoherenceFit {
    pub fn ratio(&self) -> Result<f64> {
        if self.population_rate.abs() <= DECAY_FLOOR {
            return Err(Error::NotDecaying { rate: self.population_rate });
        }
        Ok(self.coherence_rate / self.population_rate)
    }
}

pub fn coherence_fit(cfg: &BathConfig) -> Result<CoherenceFit> {
    let series = ww_evolve(cfg, &BathState::superposition(cfg.n_modes))?;
    let window = default_fit_window(cfg);
    let population_rate = fit_decay_rate(&series.times, &series.excited_population(), window)?;
    let coherence_rate = fit_decay_rate(&series.times, &series.coherence(), window)?;
    Ok(CoherenceFit { population_rate, coherence_rate, series })
}

/// Decay rate of the reduced emitter coherence `|ρ_eg|` divided by the decay
/// rate of the excited population.
pub fn coherence_ratio(cfg: &BathConfig) -> Result<f64> {
    coherence_fit(cfg)?.ratio()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> BathConfig {
        BathConfig { n_modes: 201, mode_spacing: 0.01, coupling: 0.02, t_max: 10.0, dt: 0.01, record_stride: 1 }
    }

    #[test]
    fn golden_rule_examples() {
        let mut cfg = BathConfig::reference();
        assert_abs_diff_eq!(golden_rule_rate(&cfg), 0.62832, epsilon = 1e-5);
        cfg.coupling = 0.0;
        assert_eq!(golden_rule_rate(&cfg), 0.0);
        cfg.coupling = 0.02;
        cfg.mode_spacing = 0.002;
        assert_abs_diff_eq!(golden_rule_rate(&cfg), 1.25664, epsilon = 1e-5);
    }

    #[test]
    fn rhs_examples() {
        let cfg = small();
        let d = ww_rhs(&BathState::excited(cfg.n_modes), 0.0, &cfg);
        assert!(d.c_modes.iter().all(|c| (*c - Complex::new(0.0, -0.02)).norm() < 1e-15));
        assert_eq!(d.c_e, Complex::new(0.0, 0.0));

        let mut silent = cfg;
        silent.coupling = 0.0;
        let d = ww_rhs(&BathState::superposition(cfg.n_modes), 1.3, &silent);
        assert_eq!(d.norm_sqr(), 0.0);

        let mut s = BathState::ground(cfg.n_modes);
        s.c_g = Complex::new(0.0, 0.0);
        for (k, c) in s.c_modes.iter_mut().enumerate() {
            *c = Complex::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()) * 0.05;
        }
        let t = 0.7;
        let d = ww_rhs(&s, t, &cfg);
        assert!(d.c_modes.iter().all(|c| c.norm() == 0.0));
        let expect: Complex = cfg
            .detunings()
            .iter()
            .zip(&s.c_modes)
            .map(|(dk, c)| Complex::new(0.0, dk * t).exp() * c)
            .sum::<Complex>()
            * Complex::new(0.0, -cfg.coupling);
        assert!((d.c_e - expect).norm() < 1e-13);
    }

    #[test]
    fn rhs_preserves_norm_to_first_order() {
        let cfg = small();
        let mut s = BathState::superposition(cfg.n_modes);
        for (k, c) in s.c_modes.iter_mut().enumerate() {
            *c = Complex::new(0.01 * (k as f64).cos(), 0.002 * k as f64 % 0.03);
        }
        let d = ww_rhs(&s, 2.5, &cfg);
        assert!(s.real_inner(&d).abs() < 1e-12);
    }

    #[test]
    fn evolve_trivial_cases() {
        let mut cfg = small();
        cfg.coupling = 0.0;
        let series = ww_evolve(&cfg, &BathState::excited(cfg.n_modes)).unwrap();
        assert!(series.excited_population().iter().all(|p| (p - 1.0).abs() < 1e-15));

        let cfg = small();
        let series = ww_evolve(&cfg, &BathState::ground(cfg.n_modes)).unwrap();
        assert!(series.c_g.iter().all(|c| *c == Complex::new(1.0, 0.0)));
        assert!(series.c_e.iter().all(|c| c.norm() == 0.0));
        assert!(series.final_state.c_modes.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(BathConfig::reference().validate().is_ok());
        assert!(!BathConfig::reference().is_markovian());
        let even = BathConfig { n_modes: 4000, ..BathConfig::reference() };
        assert!(even.validate().is_err());
        let long = BathConfig { t_max: 4000.0, ..BathConfig::reference() };
        assert!(long.validate().is_err());
        let coarse = BathConfig { dt: 0.05, ..BathConfig::reference() };
        assert!(coarse.validate().is_err());
    }

    #[test]
    fn fit_exact_exponential() {
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| (-0.5 * t).exp()).collect();
        assert_abs_diff_eq!(fit_decay_rate(&times, &values, (0.0, 10.0)).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn fit_errors() {
        let times = [0.0, 1.0, 2.0];
        let values = [1.0, 0.5, 0.0];
        assert!(matches!(fit_decay_rate(&times, &values, (5.0, 6.0)), Err(Error::WindowEmpty { .. })));
        assert!(matches!(fit_decay_rate(&times, &[1.0, 0.5, 0.25], (1.5, 6.0)), Err(Error::WindowEmpty { .. })));
        assert!(matches!(fit_decay_rate(&times, &values, (0.0, 6.0)), Err(Error::NonPositiveSamples { .. })));
    }

    #[test]
    fn no_coupling_is_not_decaying() {
        let cfg = BathConfig { coupling: 0.0, ..small() };
        assert!(matches!(coherence_ratio(&cfg), Err(Error::NotDecaying { .. })));
    }
}
