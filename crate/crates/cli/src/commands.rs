//! Subcommand implementations. Each builds its CSV tables in memory, then
//! [`execute`] writes them together with the manifest that reproduces them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use zeno_core::bath::{
    coherence_fit, default_fit_window, fit_decay_rate, golden_rule_rate, ww_evolve, BathConfig, BathState,
};
use zeno_core::lindblad::IntegratorConfig;
use zeno_core::parallel::map_ordered;
use zeno_core::zeno::{decoherence_time, projection_formula, run_zeno, spacing_point_config, ZenoConfig, ZenoResult};

use crate::error::{lift, CliError, Result};
use crate::table::{fmt_num, fmt_text, write_file, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "ZENO_SIM_THREADS";

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "rho11", "rho22", "rho33", "re_rho12", "im_rho12", "re_rho13", "im_rho13", "re_rho23", "im_rho23",
    "trace_err", "min_eig",
];
pub const SUMMARY_HEADER: [&str; 7] = ["n", "p1", "p2", "p3", "formula_p2", "deviation", "trace_drift"];
pub const ORACLE_HEADER: [&str; 3] = ["n", "p2_formula", "n_times_p2"];
pub const SWEEP_HEADER: [&str; 6] = ["param_value", "gamma_tau", "p2_sim", "p2_formula", "deviation", "error"];
pub const WW_HEADER: [&str; 4] = ["t", "abs_ce_sq", "abs_coherence", "norm"];
pub const WW_SUMMARY_HEADER: [&str; 4] = ["gamma_golden", "gamma_fit", "rel_err", "coherence_ratio"];
pub const DECOHERE_HEADER: [&str; 3] = ["gamma", "tau_dec", "gamma_times_tau_dec"];
pub const DECOHERE_SUMMARY_HEADER: [&str; 3] = ["slope", "n_points", "status"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NPulses,
    Gamma,
    OmegaOpt,
    PulseDuration,
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_pulses" => Ok(SweepParam::NPulses),
            "gamma" => Ok(SweepParam::Gamma),
            "omega_opt" => Ok(SweepParam::OmegaOpt),
            "pulse_duration" => Ok(SweepParam::PulseDuration),
            other => Err(CliError::validation(
                "param",
                format!("`{other}` is not one of n_pulses, gamma, omega_opt, pulse_duration"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub base: ZenoConfig,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, base: ZenoConfig) -> Result<Self> {
        if values.is_empty() {
            return Err(CliError::validation("values", "must not be empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::validation("values", "must be finite"));
        }
        Ok(Self { param, values, base })
    }

    /// Config for one sweep point. Sweeping `gamma` also moves `Ω_opt` (fixed
    /// ratio) and `τ_p` (see [`spacing_point_config`]); `dt` shrinks when a
    /// point's rates need it.
    pub fn point_config(&self, value: f64) -> Result<ZenoConfig> {
        let mut cfg = self.base;
        match self.param {
            SweepParam::NPulses => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(CliError::validation("n_pulses", format!("{value} is not a positive integer")));
                }
                cfg.n_pulses = value as usize;
            }
            SweepParam::Gamma => {
                if value < 0.0 {
                    return Err(CliError::validation("gamma", "must be >= 0"));
                }
                cfg = spacing_point_config(&self.base, value);
            }
            SweepParam::OmegaOpt => {
                cfg.omega_opt = value;
                let bound = IntegratorConfig::for_max_rate(cfg.max_rate(), cfg.integrator.record_stride).dt;
                cfg.integrator.dt = cfg.integrator.dt.min(bound);
            }
            SweepParam::PulseDuration => cfg.pulse_duration = value,
        }
        cfg.validate().map_err(lift)?;
        Ok(cfg)
    }
}

/// Everything needed to regenerate an output. Serialized with a
/// `subcommand` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Request {
    Oracle { n_list: Vec<usize> },
    Run { config: ZenoConfig },
    Sweep { spec: SweepSpec },
    Ww { config: BathConfig },
    Decohere { gamma_list: Vec<f64>, omega_opt_ratio: f64 },
}

impl Request {
    pub fn name(&self) -> &'static str {
        match self {
            Request::Oracle { .. } => "oracle",
            Request::Run { .. } => "run",
            Request::Sweep { .. } => "sweep",
            Request::Ww { .. } => "ww",
            Request::Decohere { .. } => "decohere",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub request: Request,
    /// Output role (`out`, `traj`, `summary`) to path.
    pub outputs: BTreeMap<String, PathBuf>,
}

impl RunManifest {
    pub fn new(request: Request, outputs: BTreeMap<String, PathBuf>) -> Self {
        Self { version: VERSION.to_string(), request, outputs }
    }

    /// `<primary output>.manifest.json`.
    pub fn path(&self) -> Option<PathBuf> {
        let primary = self.outputs.get("out").or_else(|| self.outputs.get("traj"))?;
        let mut name = primary.file_name()?.to_os_string();
        name.push(".manifest.json");
        Some(primary.with_file_name(name))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(&name, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(&name, e))
    }

    /// Same file names, moved into `dir`.
    pub fn relocate(&mut self, dir: &Path) {
        for path in self.outputs.values_mut() {
            if let Some(name) = path.file_name() {
                *path = dir.join(name);
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::validation(THREADS_ENV, format!("`{v}` is not a positive integer"))),
        },
    }
}

/// Runs `f` on a pool of `threads` workers, or on rayon's default pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::validation(THREADS_ENV, e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn oracle_table(n_list: &[usize]) -> Result<Table> {
    let mut table = Table::new(&ORACLE_HEADER);
    for &n in n_list {
        if n == 0 {
            return Err(CliError::validation("n", "values must be >= 1"));
        }
        let p2 = projection_formula(n);
        table.row_nums(&[n as f64, p2, n as f64 * p2]);
    }
    Ok(table)
}

pub fn trajectory_table(result: &ZenoResult) -> Table {
    let mut table = Table::new(&TRAJECTORY_HEADER);
    for (t, s) in result.trajectory.times.iter().zip(&result.trajectory.states) {
        let [p1, p2, p3] = s.populations();
        let (r12, r13, r23) = (s.element(0, 1), s.element(0, 2), s.element(1, 2));
        table.row_nums(&[
            *t,
            p1,
            p2,
            p3,
            r12.re,
            r12.im,
            r13.re,
            r13.im,
            r23.re,
            r23.im,
            s.trace_error(),
            s.min_eigenvalue(),
        ]);
    }
    table
}

pub fn summary_table(cfg: &ZenoConfig, result: &ZenoResult) -> Table {
    let mut table = Table::new(&SUMMARY_HEADER);
    table.row_nums(&[
        cfg.n_pulses as f64,
        result.p1,
        result.p2,
        result.p3,
        result.formula_p2,
        result.deviation,
        result.trajectory.stats.max_trace_error,
    ]);
    table
}

pub fn run_tables(cfg: &ZenoConfig) -> Result<(Table, Table, ZenoResult)> {
    let result = run_zeno(cfg).map_err(lift)?;
    Ok((trajectory_table(&result), summary_table(cfg, &result), result))
}

/// The sweep table and the number of failed points. Points run in
/// parallel; rows keep the input order.
pub fn sweep_table(spec: &SweepSpec) -> (Table, usize) {
    let rows = map_ordered(&spec.values, |&value| -> Result<(f64, ZenoResult)> {
        let cfg = spec.point_config(value)?;
        let r = run_zeno(&cfg).map_err(lift)?;
        Ok((cfg.gamma * cfg.spacing(), r))
    });
    let mut table = Table::new(&SWEEP_HEADER);
    let mut failed = 0;
    for (value, row) in spec.values.iter().zip(rows) {
        match row {
            Ok((gamma_tau, r)) => {
                let mut cells: Vec<String> =
                    [*value, gamma_tau, r.p2, r.formula_p2, r.deviation].iter().map(|x| fmt_num(*x)).collect();
                cells.push(String::new());
                table.row(&cells);
            }
            Err(e) => {
                failed += 1;
                let gamma_tau = spec.point_config(*value).map(|c| fmt_num(c.gamma * c.spacing())).unwrap_or_default();
                table.row(&[fmt_num(*value), gamma_tau, String::new(), String::new(), String::new(), fmt_text(&e.to_string())]);
            }
        }
    }
    (table, failed)
}

pub struct WwOutput {
    pub series: Table,
    pub summary: Table,
    pub gamma_golden: f64,
    pub gamma_fit: f64,
    pub rel_err: f64,
    pub coherence_ratio: f64,
    pub max_norm_drift: f64,
    pub warnings: Vec<String>,
}

pub fn ww_tables(cfg: &BathConfig) -> Result<WwOutput> {
    cfg.validate().map_err(lift)?;
    let mut warnings = Vec::new();
    if !cfg.is_markovian() {
        warnings.push(format!(
            "bandwidth {} is below 20 x golden-rule rate ({}); expect the fitted rate to exceed it by ~{:.1}%",
            fmt_num(cfg.bandwidth()),
            fmt_num(golden_rule_rate(cfg)),
            100.0 * golden_rule_rate(cfg) / (std::f64::consts::PI * 0.5 * cfg.bandwidth()),
        ));
    }
    let (excited, coherence) = rayon::join(
        || ww_evolve(cfg, &BathState::excited(cfg.n_modes)),
        || coherence_fit(cfg),
    );
    let excited = excited.map_err(lift)?;
    let coherence = coherence.map_err(lift)?;

    let population = excited.excited_population();
    let gamma_golden = golden_rule_rate(cfg);
    let gamma_fit = fit_decay_rate(&excited.times, &population, default_fit_window(cfg)).map_err(lift)?;
    let rel_err = if gamma_golden > 0.0 { (gamma_fit - gamma_golden).abs() / gamma_golden } else { f64::NAN };
    let coherence_ratio = match coherence.ratio() {
        Ok(r) => r,
        Err(e) => {
            warnings.push(format!("coherence ratio undefined: {e}"));
            f64::NAN
        }
    };

    let mut series = Table::new(&WW_HEADER);
    let abs_coherence = coherence.series.coherence();
    for (k, t) in excited.times.iter().enumerate() {
        series.row_nums(&[*t, population[k], abs_coherence[k], excited.norm[k]]);
    }
    let mut summary = Table::new(&WW_SUMMARY_HEADER);
    summary.row_nums(&[gamma_golden, gamma_fit, rel_err, coherence_ratio]);
    Ok(WwOutput {
        series,
        summary,
        gamma_golden,
        gamma_fit,
        rel_err,
        coherence_ratio,
        max_norm_drift: excited.max_norm_drift.max(coherence.series.max_norm_drift),
        warnings,
    })
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct abscissae.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    if lx.len() < 2 {
        return None;
    }
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx)
}

pub struct DecohereOutput {
    pub rows: Table,
    pub summary: Table,
    pub tau_dec: Vec<f64>,
    pub slope: Option<f64>,
}

pub fn decohere_tables(gamma_list: &[f64], omega_opt_ratio: f64) -> Result<DecohereOutput> {
    if !(omega_opt_ratio.is_finite() && omega_opt_ratio > 0.0) {
        return Err(CliError::validation("omega_opt_ratio", "must be finite and > 0"));
    }
    if gamma_list.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(CliError::validation("gamma", "values must be finite and > 0"));
    }
    let tau_dec = map_ordered(gamma_list, |&g| decoherence_time(omega_opt_ratio * g, g))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(lift)?;
    let mut rows = Table::new(&DECOHERE_HEADER);
    for (g, t) in gamma_list.iter().zip(&tau_dec) {
        rows.row_nums(&[*g, *t, g * t]);
    }
    let slope = log_log_slope(gamma_list, &tau_dec);
    let mut summary = Table::new(&DECOHERE_SUMMARY_HEADER);
    let status = if slope.is_some() { "ok" } else { "insufficient points" };
    summary.row(&[fmt_num(slope.unwrap_or(f64::NAN)), gamma_list.len().to_string(), status.to_string()]);
    Ok(DecohereOutput { rows, summary, tau_dec, slope })
}

fn output(outputs: &BTreeMap<String, PathBuf>, role: &str) -> Result<PathBuf> {
    outputs
        .get(role)
        .cloned()
        .ok_or_else(|| CliError::validation(role, "output path missing"))
}

/// `<out stem>_summary.csv` next to `out`.
pub fn default_summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}_summary.csv"))
}

/// Computes a request, writes its CSVs and manifest.
pub fn execute(manifest: &RunManifest, threads: Option<usize>) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let emit = |path: PathBuf, table: &Table, outcome: &mut Outcome| -> Result<()> {
        table.write(&path)?;
        outcome.files.push(path);
        Ok(())
    };
    let outputs = &manifest.outputs;
    let mut sweep_failures = None;
    match &manifest.request {
        Request::Oracle { n_list } => {
            emit(output(outputs, "out")?, &oracle_table(n_list)?, &mut outcome)?;
        }
        Request::Run { config } => {
            let (traj, summary, _) = run_tables(config)?;
            emit(output(outputs, "traj")?, &traj, &mut outcome)?;
            emit(output(outputs, "summary")?, &summary, &mut outcome)?;
        }
        Request::Sweep { spec } => {
            let (table, failed) = with_threads(threads, || sweep_table(spec))?;
            emit(output(outputs, "out")?, &table, &mut outcome)?;
            if failed > 0 {
                sweep_failures = Some(CliError::SweepPoints { failed, total: spec.values.len() });
            }
        }
        Request::Ww { config } => {
            let ww = with_threads(threads, || ww_tables(config))??;
            emit(output(outputs, "out")?, &ww.series, &mut outcome)?;
            emit(output(outputs, "summary")?, &ww.summary, &mut outcome)?;
            outcome.warnings.extend(ww.warnings);
        }
        Request::Decohere { gamma_list, omega_opt_ratio } => {
            let dec = with_threads(threads, || decohere_tables(gamma_list, *omega_opt_ratio))??;
            emit(output(outputs, "out")?, &dec.rows, &mut outcome)?;
            emit(output(outputs, "summary")?, &dec.summary, &mut outcome)?;
        }
    }
    if let Some(path) = manifest.path() {
        write_file(&path, &manifest.to_json())?;
        outcome.files.push(path);
    }
    match sweep_failures {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}
