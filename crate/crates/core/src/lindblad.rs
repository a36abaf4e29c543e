//! Optical Bloch equations for the three-level atom.
//!
//! Both drives are resonant and treated in the rotating frame:
//!
//! ```text
//! H(t) = Ω_rf(t)/2 (|1⟩⟨2| + |2⟩⟨1|) + Ω_opt(t)/2 (|1⟩⟨3| + |3⟩⟨1|)
//! dρ/dt = −i[H, ρ] + Γ (σρσ† − ½{σ†σ, ρ}),   σ = |1⟩⟨3|
//! ```
//!
//! Drives are piecewise constant over a [`PulseSchedule`]; integration is
//! fixed-step RK4 with every segment edge landing on a step boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Complex, DensityMatrix3, Matrix3, I};

/// Largest allowed `dt · max(rate)`.
pub const STABILITY_BOUND: f64 = 0.02;
/// A run whose `|tr ρ − 1|` exceeds this fails with [`Error::TraceDrift`].
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveLevels {
    pub omega_rf: f64,
    pub omega_opt: f64,
}

impl DriveLevels {
    pub fn new(omega_rf: f64, omega_opt: f64) -> Self {
        Self { omega_rf, omega_opt }
    }

    pub fn max_rate(&self) -> f64 {
        self.omega_rf.max(self.omega_opt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub drives: DriveLevels,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Contiguous, time-ordered drive segments starting at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if let Some(first) = segments.first() {
            if first.t_start != 0.0 {
                return Err(Error::config("segments", "first segment must start at t = 0"));
            }
        }
        for (k, s) in segments.iter().enumerate() {
            if !(s.t_start.is_finite() && s.t_end.is_finite()) || s.t_end < s.t_start {
                return Err(Error::config("segments", format!("segment {k} has an invalid interval")));
            }
            let d = s.drives;
            if !(d.omega_rf >= 0.0 && d.omega_opt >= 0.0 && d.omega_rf.is_finite() && d.omega_opt.is_finite()) {
                return Err(Error::config("segments", format!("segment {k} has a negative or non-finite drive")));
            }
        }
        for (k, w) in segments.windows(2).enumerate() {
            if w[0].t_end != w[1].t_start {
                return Err(Error::config(
                    "segments",
                    format!("segments {k} and {} are not contiguous", k + 1),
                ));
            }
        }
        Ok(Self { segments })
    }

    /// A single segment `[0, duration]` with constant drives.
    pub fn constant(duration: f64, drives: DriveLevels) -> Result<Self> {
        Self::new(vec![Segment { t_start: 0.0, t_end: duration, drives }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn span(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    pub fn max_drive(&self) -> f64 {
        self.segments.iter().map(|s| s.drives.max_rate()).fold(0.0, f64::max)
    }

    /// Drives active at `t`. A time exactly on an edge belongs to the later
    /// segment; `t = span` belongs to the last one.
    pub fn drives_at(&self, t: f64) -> Result<DriveLevels> {
        let span = self.span();
        if !(0.0..=span).contains(&t) || self.segments.is_empty() {
            return Err(Error::OutOfSchedule { t, span });
        }
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        // last segment starting at or before t; zero-length segments on the
        // same edge precede it and are skipped
        Ok(self.segments[idx.saturating_sub(1)].drives)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    /// Spontaneous-emission rate of level 3 into level 1.
    pub gamma: f64,
}

impl DecayChannel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::config("gamma", "must be finite and >= 0"));
        }
        Ok(Self { gamma })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub const DEFAULT_STRIDE: usize = 50;
    pub const MAX_DT: f64 = 1e-3;

    /// Half the stability bound for the given largest rate, capped at
    /// [`Self::MAX_DT`].
    pub fn for_max_rate(max_rate: f64, record_stride: usize) -> Self {
        let dt = if max_rate > 0.0 {
            (0.5 * STABILITY_BOUND / max_rate).min(Self::MAX_DT)
        } else {
            Self::MAX_DT
        };
        Self { dt, record_stride }
    }

    pub fn check(&self, max_rate: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("integrator.dt", "must be > 0"));
        }
        if self.record_stride == 0 {
            return Err(Error::config("integrator.record_stride", "must be >= 1"));
        }
        if self.dt * max_rate > STABILITY_BOUND * (1.0 + 1e-12) {
            return Err(Error::config(
                "integrator.dt",
                format!(
                    "dt * max rate = {} exceeds {STABILITY_BOUND} (dt must be <= {})",
                    self.dt * max_rate,
                    STABILITY_BOUND / max_rate
                ),
            ));
        }
        Ok(())
    }
}

/// Numerical health of one integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveStats {
    pub steps: usize,
    pub max_trace_error: f64,
    /// Worst Hermiticity residual seen before the per-step symmetrization.
    pub max_hermitian_residual: f64,
    /// Smallest eigenvalue over the recorded states.
    pub min_eigenvalue: f64,
}

impl Default for EvolveStats {
    fn default() -> Self {
        Self {
            steps: 0,
            max_trace_error: 0.0,
            max_hermitian_residual: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

impl EvolveStats {
    pub fn merge(&mut self, other: &EvolveStats) {
        self.steps += other.steps;
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermitian_residual = self.max_hermitian_residual.max(other.max_hermitian_residual);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
    pub stats: EvolveStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix3 {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn hamiltonian(drives: DriveLevels) -> Matrix3 {
    let mut h = Matrix3::zero();
    let rf = Complex::new(0.5 * drives.omega_rf, 0.0);
    let opt = Complex::new(0.5 * drives.omega_opt, 0.0);
    h[(0, 1)] = rf;
    h[(1, 0)] = rf;
    h[(0, 2)] = opt;
    h[(2, 0)] = opt;
    h
}

pub fn hamiltonian_at(t: f64, schedule: &PulseSchedule) -> Result<Matrix3> {
    schedule.drives_at(t).map(hamiltonian)
}

/// The Lindblad generator applied to an arbitrary matrix (RK4 stages are
/// not themselves density matrices).
pub fn generator(rho: &Matrix3, h: &Matrix3, decay: DecayChannel) -> Matrix3 {
    let mut out = (*h * *rho - *rho * *h).scale(-I);
    let g = decay.gamma;
    if g != 0.0 {
        // σρσ† = ρ33 |1⟩⟨1|;  σ†σ = |3⟩⟨3|
        out[(0, 0)] += rho[(2, 2)] * g;
        for k in 0..3 {
            out[(2, k)] -= rho[(2, k)] * (0.5 * g);
            out[(k, 2)] -= rho[(k, 2)] * (0.5 * g);
        }
    }
    out
}

pub fn lindblad_rhs(rho: &DensityMatrix3, h: &Matrix3, decay: DecayChannel) -> Matrix3 {
    generator(rho.matrix(), h, decay)
}

/// One RK4 step of length `dt` with the Hamiltonian held fixed. Returns the
/// symmetrized state and the Hermiticity residual before symmetrization.
pub(crate) fn rk4_const(rho: &Matrix3, h: &Matrix3, decay: DecayChannel, dt: f64) -> (Matrix3, f64) {
    let k1 = generator(rho, h, decay);
    let k2 = generator(&(*rho + k1.scale_re(0.5 * dt)), h, decay);
    let k3 = generator(&(*rho + k2.scale_re(0.5 * dt)), h, decay);
    let k4 = generator(&(*rho + k3.scale_re(dt)), h, decay);
    let incr = (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(dt / 6.0);
    let next = *rho + incr;
    let residual = next.hermitian_residual();
    (next.hermitian_part(), residual)
}

/// Advances `rho` by `dt` from time `t` using the drives active at `t`.
/// The step is assumed not to straddle a segment edge.
pub fn rk4_step(
    rho: &DensityMatrix3,
    t: f64,
    dt: f64,
    schedule: &PulseSchedule,
    decay: DecayChannel,
) -> Result<DensityMatrix3> {
    let h = hamiltonian_at(t, schedule)?;
    let (next, _) = rk4_const(rho.matrix(), &h, decay, dt);
    if !next.is_finite() {
        return Err(Error::StepUnstable { t: t + dt });
    }
    Ok(DensityMatrix3::from_matrix_unchecked(next))
}

/// Integrates ρ over the whole schedule.
///
/// Each segment of length `L` is split into `ceil(L/dt)` equal steps, so
/// segment edges are always step boundaries. States are recorded every
/// `record_stride` steps plus the initial and final state.
pub fn evolve(
    rho0: &DensityMatrix3,
    schedule: &PulseSchedule,
    decay: DecayChannel,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.check(schedule.max_drive().max(decay.gamma))?;

    let mut stats = EvolveStats {
        min_eigenvalue: rho0.min_eigenvalue(),
        max_trace_error: rho0.trace_error(),
        ..EvolveStats::default()
    };
    let mut times = vec![0.0];
    let mut states = vec![*rho0];
    let mut rho = *rho0.matrix();
    let mut recorded_last = true;

    for seg in schedule.segments() {
        let len = seg.duration();
        if len <= 0.0 {
            continue;
        }
        let n_steps = ((len / cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h_step = len / n_steps as f64;
        let h = hamiltonian(seg.drives);
        for j in 1..=n_steps {
            let (next, residual) = rk4_const(&rho, &h, decay, h_step);
            let t = if j == n_steps { seg.t_end } else { seg.t_start + j as f64 * h_step };
            if !next.is_finite() {
                return Err(Error::StepUnstable { t });
            }
            rho = next;
            stats.steps += 1;
            stats.max_hermitian_residual = stats.max_hermitian_residual.max(residual);
            let drift = (rho.trace() - Complex::new(1.0, 0.0)).norm();
            stats.max_trace_error = stats.max_trace_error.max(drift);
            if drift > TRACE_DRIFT_LIMIT {
                return Err(Error::TraceDrift { t, drift, limit: TRACE_DRIFT_LIMIT });
            }
            recorded_last = stats.steps % cfg.record_stride == 0;
            if recorded_last {
                record(&mut times, &mut states, &mut stats, t, rho);
            }
        }
    }
    if !recorded_last {
        record(&mut times, &mut states, &mut stats, schedule.span(), rho);
    }
    Ok(Trajectory { times, states, stats })
}

fn record(times: &mut Vec<f64>, states: &mut Vec<DensityMatrix3>, stats: &mut EvolveStats, t: f64, rho: Matrix3) {
    let state = DensityMatrix3::from_matrix_unchecked(rho);
    stats.min_eigenvalue = stats.min_eigenvalue.min(state.min_eigenvalue());
    times.push(t);
    states.push(state);
}
