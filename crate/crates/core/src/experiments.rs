//! Seeded Monte Carlo campaigns: SCA convergence traces, the average-EE
//! sweep over the SBS power budget and the comparison against the grid
//! oracle.
//!
//! Trial `t` always draws its channels from stream `t` of the base seed, so
//! every scheme and every sweep point sees the same realizations and a row
//! can be reproduced from `(seed, trial)` alone. Jobs run through
//! [`crate::par`] and are merged by index; CSVs carry no timings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::{draw_channels, ChannelGenConfig, Pathloss};
use crate::config::{dbm_to_watt, SystemConfig};
use crate::error::{Error, Result};
use crate::oracle::{grid_search_ee, GridSpec};
use crate::par;
use crate::model::DesignPoint;
use crate::reformulation::Scheme;
use crate::sca::{resume_from, solve_scheme, ScaOptions, SolveTrace, StopReason};

/// Defaults that stand in for unreadable reference values, listed in the
/// metadata file.
pub const ASSUMED_KEYS: &[&str] = &[
    "M_T", "M_R", "K_D", "K_U", "eta", "epsilon", "P_rf", "P_st", "beta", "sigma2_dl", "sigma2_ul", "sigma2_si",
    "P_u_max", "r_min_ul", "bandwidth_hz", "rician_K", "pathloss", "sweep_dbm",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Convergence,
    Aee,
    Oracle,
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(Self::Convergence),
            "aee" => Ok(Self::Aee),
            "oracle" => Ok(Self::Oracle),
            _ => Err(Error::Parse(format!("unknown experiment '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSet {
    Harvest,
    Baseline,
    Both,
}

impl SchemeSet {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            Self::Harvest => vec![Scheme::Harvest],
            Self::Baseline => vec![Scheme::Baseline],
            Self::Both => vec![Scheme::Harvest, Scheme::Baseline],
        }
    }
}

impl std::str::FromStr for SchemeSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harvest" => Ok(Self::Harvest),
            "baseline" => Ok(Self::Baseline),
            "both" => Ok(Self::Both),
            _ => Err(Error::Parse(format!("unknown scheme set '{s}'"))),
        }
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Harvest => "harvest",
        Scheme::Baseline => "baseline",
    }
}

/// Whether jobs may run on the thread pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Parallel,
    Sequential,
}

fn run_jobs<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Parallel => par::map_indexed(n, f),
        Exec::Sequential => par::map_indexed_seq(n, f),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    /// SBS power budgets of the sweep (dBm).
    pub sweep_dbm: Vec<f64>,
    /// Budget used by the convergence and oracle runs (dBm).
    pub fixed_dbm: f64,
    pub trials: usize,
    pub schemes: SchemeSet,
    /// Base seed; also keys the channel generator.
    pub seed: u64,
    pub cfg: SystemConfig,
    pub gen: ChannelGenConfig,
    pub sca: ScaOptions,
    pub grid: GridSpec,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            sweep_dbm: vec![10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            fixed_dbm: 25.0,
            trials: 1000,
            schemes: SchemeSet::Both,
            seed: 1,
            cfg: SystemConfig::default(),
            gen: ChannelGenConfig { pathloss: Pathloss::Fixed { loss_db: 104.0 }, ..Default::default() },
            sca: ScaOptions::default(),
            grid: GridSpec::default(),
        }
    }
}

/// Overlays every key of `user` that `base` also has.
fn overlay<T: Serialize + serde::de::DeserializeOwned>(base: &T, user: &toml::Table, used: &mut Vec<String>) -> Result<T> {
    let mut table = toml::Table::try_from(base).map_err(|e| Error::Parse(e.to_string()))?;
    for (k, v) in user {
        if table.contains_key(k) {
            table.insert(k.clone(), v.clone());
            used.push(k.clone());
        }
    }
    table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("need at least one trial".into()));
        }
        if self.sweep_dbm.is_empty() {
            return Err(Error::InvalidConfig("sweep must not be empty".into()));
        }
        if self.sweep_dbm.iter().chain([&self.fixed_dbm]).any(|d| !d.is_finite()) {
            return Err(Error::InvalidConfig("sweep powers must be finite".into()));
        }
        self.cfg.validate()?;
        self.gen.validate()?;
        self.sca.validate()?;
        self.grid.validate()
    }

    /// Reads a flat TOML file whose keys are the field names of
    /// [`SystemConfig`], [`ChannelGenConfig`], [`ScaOptions`], [`GridSpec`]
    /// and the campaign itself. A key shared by several structs (such as
    /// `sigma2_si` or `seed`) sets all of them. Unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let base = Self::default();
        let mut used = Vec::new();
        let cfg: SystemConfig = overlay(&base.cfg, &user, &mut used)?;
        let mut gen: ChannelGenConfig = overlay(&base.gen, &user, &mut used)?;
        let sca: ScaOptions = overlay(&base.sca, &user, &mut used)?;
        let grid: GridSpec = overlay(&base.grid, &user, &mut used)?;
        let top = CampaignKeys { sweep_dbm: base.sweep_dbm, fixed_dbm: base.fixed_dbm, trials: base.trials, schemes: base.schemes, seed: base.seed };
        let top: CampaignKeys = overlay(&top, &user, &mut used)?;
        if let Some(k) = user.keys().find(|k| !used.contains(k)) {
            return Err(Error::Parse(format!("unknown config key '{k}'")));
        }
        // User counts may change without the per-UE vectors being given.
        let cfg = if cfg.beta.len() != cfg.k_u || cfg.sigma2_dl.len() != cfg.k_d || cfg.r_min_ul.len() != cfg.k_u {
            let (kd, ku) = (cfg.k_d, cfg.k_u);
            cfg.with_users(kd, ku)
        } else {
            cfg
        };
        gen.seed = top.seed;
        let spec = Self {
            sweep_dbm: top.sweep_dbm,
            fixed_dbm: top.fixed_dbm,
            trials: top.trials,
            schemes: top.schemes,
            seed: top.seed,
            cfg,
            gen,
            sca,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn gen(&self) -> ChannelGenConfig {
        ChannelGenConfig { seed: self.seed, ..self.gen.clone() }
    }
}

#[derive(Serialize, Deserialize)]
struct CampaignKeys {
    sweep_dbm: Vec<f64>,
    fixed_dbm: f64,
    trials: usize,
    schemes: SchemeSet,
    seed: u64,
}

/// Outcome of one SCA solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub trial: u64,
    pub dbm: f64,
    pub scheme: Scheme,
    /// `converged`, `max_iters`, `solver_failure` or `error`.
    pub status: String,
    /// Restarted from the design found at a smaller budget.
    pub warm: bool,
    pub ee: f64,
    pub alpha: f64,
    /// Largest phase-1 UE power (W).
    pub p1_max: f64,
    pub init_iters: usize,
    /// Subproblem optimum per iteration (bit/s/Hz per W).
    pub objectives: Vec<f64>,
    pub ees: Vec<f64>,
}

impl RunRecord {
    /// A design was produced (possibly at the iteration cap).
    pub fn ok(&self) -> bool {
        self.status == "converged" || self.status == "max_iters"
    }

    pub fn iterations(&self) -> usize {
        self.objectives.len()
    }

    /// Largest decrease between consecutive objectives.
    pub fn max_drop(&self) -> f64 {
        self.objectives.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

fn record(trial: u64, dbm: f64, scheme: Scheme, trace: Result<SolveTrace>) -> (RunRecord, Option<DesignPoint>) {
    let mut rec = RunRecord {
        trial,
        dbm,
        scheme,
        status: "error".into(),
        warm: false,
        ee: f64::NAN,
        alpha: f64::NAN,
        p1_max: f64::NAN,
        init_iters: 0,
        objectives: Vec::new(),
        ees: Vec::new(),
    };
    match trace {
        Ok(t) => {
            rec.status = match t.reason {
                StopReason::Converged => "converged",
                StopReason::MaxIters => "max_iters",
                StopReason::SolverFailure(_) => "solver_failure",
            }
            .into();
            rec.ee = t.ee;
            rec.alpha = t.design.alpha;
            rec.p1_max = t.design.p1.iter().copied().fold(0.0, f64::max);
            rec.init_iters = t.init_iters;
            rec.objectives = t.records.iter().map(|r| r.q2 / std::f64::consts::LN_2).collect();
            rec.ees = t.records.iter().map(|r| r.ee).collect();
            let ok = rec.ok();
            (rec, ok.then_some(t.design))
        }
        Err(e) => {
            rec.status = format!("error: {e}").replace(',', ";");
            (rec, None)
        }
    }
}

fn at_budget(cfg: &SystemConfig, dbm: f64) -> SystemConfig {
    SystemConfig { p_b_max: dbm_to_watt(dbm), ..cfg.clone() }
}

fn solve_one(cfg: &SystemConfig, spec: &CampaignSpec, trial: u64, dbm: f64, scheme: Scheme) -> RunRecord {
    let cfg = at_budget(cfg, dbm);
    let trace = draw_channels(&cfg, &spec.gen(), trial).and_then(|ch| solve_scheme(&cfg, &ch, &spec.sca, scheme));
    record(trial, dbm, scheme, trace).0
}

/// Solves one trial at every budget of the sweep in ascending order. A
/// design that is optimal for a smaller budget stays feasible for a larger
/// one, so whenever it beats the cold-started result the SCA is rerun from
/// it. Records come back in sweep order.
fn solve_sweep(cfg: &SystemConfig, spec: &CampaignSpec, trial: u64, scheme: Scheme) -> Vec<RunRecord> {
    let dbms = &spec.sweep_dbm;
    let mut order: Vec<usize> = (0..dbms.len()).collect();
    order.sort_by(|a, b| dbms[*a].total_cmp(&dbms[*b]));
    let ch = match draw_channels(cfg, &spec.gen(), trial) {
        Ok(ch) => ch,
        Err(e) => {
            let msg = e.to_string();
            return dbms.iter().map(|d| record(trial, *d, scheme, Err(Error::InvalidConfig(msg.clone()))).0).collect();
        }
    };
    let mut out: Vec<Option<RunRecord>> = vec![None; dbms.len()];
    let mut best: Option<(DesignPoint, f64)> = None;
    for i in order {
        let c = at_budget(cfg, dbms[i]);
        let (mut rec, mut design) = record(trial, dbms[i], scheme, solve_scheme(&c, &ch, &spec.sca, scheme));
        if let Some((prev, prev_ee)) = &best {
            if !rec.ok() || *prev_ee > rec.ee {
                let (w, wd) = record(trial, dbms[i], scheme, resume_from(&c, &ch, &spec.sca, scheme, prev));
                if w.ok() && (!rec.ok() || w.ee > rec.ee) {
                    rec = RunRecord { warm: true, init_iters: rec.init_iters, ..w };
                    design = wd;
                }
            }
        }
        if let Some(d) = design {
            if best.as_ref().map_or(true, |(_, e)| rec.ee >= *e) {
                best = Some((d, rec.ee));
            }
        }
        out[i] = Some(rec);
    }
    out.into_iter().flatten().collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceData {
    pub runs: Vec<RunRecord>,
}

impl ConvergenceData {
    /// `channel,scheme,iteration,objective,ee`.
    pub fn traces_csv(&self) -> String {
        let mut s = String::from("channel,scheme,iteration,objective,ee\n");
        for r in &self.runs {
            for (k, (q, e)) in r.objectives.iter().zip(&r.ees).enumerate() {
                let _ = writeln!(s, "{},{},{},{},{}", r.trial, scheme_name(r.scheme), k + 1, fmt(*q), fmt(*e));
            }
        }
        s
    }

    /// One row per run with the stop status and iteration counts.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("channel,scheme,status,iterations,init_iters,ee,alpha,max_drop\n");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.trial,
                scheme_name(r.scheme),
                r.status,
                r.iterations(),
                r.init_iters,
                fmt(r.ee),
                fmt(r.alpha),
                fmt(r.max_drop())
            );
        }
        s
    }
}

/// Per-iteration traces for `trials` channels at `fixed_dbm` with single
/// antennas at the SBS.
pub fn run_convergence_experiment(spec: &CampaignSpec) -> Result<ConvergenceData> {
    run_convergence_on(spec, Exec::Parallel)
}

pub fn run_convergence_on(spec: &CampaignSpec, exec: Exec) -> Result<ConvergenceData> {
    spec.validate()?;
    let cfg = spec.cfg.clone().with_antennas(1, 1);
    let schemes = spec.schemes.schemes();
    let ns = schemes.len();
    let runs = run_jobs(spec.trials * ns, exec, |k| {
        solve_one(&cfg, spec, (k / ns) as u64, spec.fixed_dbm, schemes[k % ns])
    });
    Ok(ConvergenceData { runs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeePoint {
    pub dbm: f64,
    pub scheme: Scheme,
    /// Trials where every scheme of the set produced a design.
    pub paired: usize,
    pub mean_ee: f64,
    pub ci_ee: f64,
    pub mean_alpha: f64,
    pub ci_alpha: f64,
    pub median_p1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeeData {
    pub runs: Vec<RunRecord>,
    pub points: Vec<AeePoint>,
}

/// Sample mean and 95% normal-approximation half-width.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl AeeData {
    /// `dbm,scheme,paired,mean_ee,ci_ee,mean_alpha,ci_alpha,median_p1`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("dbm,scheme,paired,mean_ee,ci_ee,mean_alpha,ci_alpha,median_p1\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                p.dbm,
                scheme_name(p.scheme),
                p.paired,
                fmt(p.mean_ee),
                fmt(p.ci_ee),
                fmt(p.mean_alpha),
                fmt(p.ci_alpha),
                fmt(p.median_p1)
            );
        }
        s
    }

    pub fn trials_csv(&self) -> String {
        let mut s = String::from("dbm,trial,scheme,status,warm,iterations,ee,alpha,p1_max\n");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.dbm,
                r.trial,
                scheme_name(r.scheme),
                r.status,
                r.warm,
                r.iterations(),
                fmt(r.ee),
                fmt(r.alpha),
                fmt(r.p1_max)
            );
        }
        s
    }

    pub fn point(&self, dbm: f64, scheme: Scheme) -> Option<&AeePoint> {
        self.points.iter().find(|p| p.dbm == dbm && p.scheme == scheme)
    }
}

/// Paired sweep over `sweep_dbm`: every scheme is solved on the same
/// channels, and the averages use only trials where all of them succeeded.
pub fn run_aee_sweep(spec: &CampaignSpec) -> Result<AeeData> {
    run_aee_sweep_on(spec, Exec::Parallel)
}

pub fn run_aee_sweep_on(spec: &CampaignSpec, exec: Exec) -> Result<AeeData> {
    spec.validate()?;
    let schemes = spec.schemes.schemes();
    let ns = schemes.len();
    let per_point = spec.trials * ns;
    let sweeps = run_jobs(per_point, exec, |k| solve_sweep(&spec.cfg, spec, (k / ns) as u64, schemes[k % ns]));
    // Regroup as (budget, trial, scheme).
    let mut runs = Vec::with_capacity(spec.sweep_dbm.len() * per_point);
    for d in 0..spec.sweep_dbm.len() {
        runs.extend(sweeps.iter().map(|s| s[d].clone()));
    }
    let mut points = Vec::new();
    for (d, &dbm) in spec.sweep_dbm.iter().enumerate() {
        let block = &runs[d * per_point..(d + 1) * per_point];
        let paired: Vec<&[RunRecord]> = block.chunks(ns).filter(|c| c.iter().all(RunRecord::ok)).collect();
        for (si, &scheme) in schemes.iter().enumerate() {
            let ee: Vec<f64> = paired.iter().map(|c| c[si].ee).collect();
            let alpha: Vec<f64> = paired.iter().map(|c| c[si].alpha).collect();
            let p1: Vec<f64> = paired.iter().map(|c| c[si].p1_max).collect();
            let (mean_ee, ci_ee) = mean_ci(&ee);
            let (mean_alpha, ci_alpha) = mean_ci(&alpha);
            points.push(AeePoint {
                dbm,
                scheme,
                paired: paired.len(),
                mean_ee,
                ci_ee,
                mean_alpha,
                ci_alpha,
                median_p1: median(&p1),
            });
        }
    }
    Ok(AeeData { runs, points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub trial: u64,
    pub status: String,
    pub sca_ee: f64,
    pub grid_ee: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleData {
    pub rows: Vec<OracleRow>,
}

impl OracleData {
    pub fn csv(&self) -> String {
        let mut s = String::from("trial,status,sca_ee,grid_ee,ratio\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.trial, r.status, fmt(r.sca_ee), fmt(r.grid_ee), fmt(r.ratio));
        }
        s
    }

    /// Ratios of trials where both sides produced a value.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect()
    }
}

/// SCA (harvest scheme) against the exhaustive grid on scalar instances
/// with one DL and one UL UE at `fixed_dbm`.
pub fn run_oracle_comparison(spec: &CampaignSpec) -> Result<OracleData> {
    spec.validate()?;
    let mut cfg = spec.cfg.clone().with_antennas(1, 1).with_users(1, 1);
    cfg.p_b_max = dbm_to_watt(spec.fixed_dbm);
    let rows = par::map_indexed(spec.trials, |t| {
        let trial = t as u64;
        let mut row = OracleRow { trial, status: "error".into(), sca_ee: f64::NAN, grid_ee: f64::NAN, ratio: f64::NAN };
        let ch = match draw_channels(&cfg, &spec.gen(), trial) {
            Ok(ch) => ch,
            Err(e) => {
                row.status = format!("error: {e}").replace(',', ";");
                return row;
            }
        };
        let grid = grid_search_ee(&cfg, &ch, &spec.grid);
        let sca = solve_scheme(&cfg, &ch, &spec.sca, Scheme::Harvest);
        match (grid, sca) {
            (Ok(g), Ok(s)) => {
                row.status = "ok".into();
                row.grid_ee = g.ee;
                row.sca_ee = s.ee;
                row.ratio = s.ee / g.ee;
            }
            (Err(Error::Infeasible(_)), Err(_)) => row.status = "infeasible".into(),
            (Ok(g), Err(e)) => {
                row.grid_ee = g.ee;
                row.status = format!("sca error: {e}").replace(',', ";");
            }
            (Err(e), Ok(s)) => {
                row.sca_ee = s.ee;
                row.status = format!("grid error: {e}").replace(',', ";");
            }
            (Err(e), Err(_)) => row.status = format!("error: {e}").replace(',', ";"),
        }
        row
    });
    Ok(OracleData { rows })
}

#[derive(Serialize)]
struct Metadata<'a> {
    experiment: Experiment,
    version: &'static str,
    spec: &'a CampaignSpec,
    /// Keys whose defaults are assumed rather than sourced.
    assumed_defaults: &'static [&'static str],
    files: Vec<String>,
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

/// Runs `exp` and writes its CSVs plus `metadata.json` into `out_dir`.
pub fn run_to_dir(spec: &CampaignSpec, exp: Experiment, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    match exp {
        Experiment::Convergence => {
            let d = run_convergence_experiment(spec)?;
            write(out_dir, "convergence.csv", &d.traces_csv(), &mut files)?;
            write(out_dir, "convergence_summary.csv", &d.summary_csv(), &mut files)?;
        }
        Experiment::Aee => {
            let d = run_aee_sweep(spec)?;
            write(out_dir, "aee.csv", &d.summary_csv(), &mut files)?;
            write(out_dir, "aee_trials.csv", &d.trials_csv(), &mut files)?;
        }
        Experiment::Oracle => {
            let d = run_oracle_comparison(spec)?;
            write(out_dir, "oracle.csv", &d.csv(), &mut files)?;
        }
    }
    let names = files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let meta = Metadata {
        experiment: exp,
        version: env!("CARGO_PKG_VERSION"),
        spec,
        assumed_defaults: ASSUMED_KEYS,
        files: names,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Parse(e.to_string()))?;
    write(out_dir, "metadata.json", &json, &mut files)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CampaignSpec {
        let mut s = CampaignSpec { trials: 2, sweep_dbm: vec![20.0, 30.0], ..Default::default() };
        s.cfg = s.cfg.with_antennas(1, 1).with_users(1, 1);
        s
    }

    #[test]
    fn rejects_empty_campaigns() {
        let s = CampaignSpec { trials: 0, ..Default::default() };
        assert!(matches!(s.validate(), Err(Error::InvalidConfig(_))));
        let s = CampaignSpec { sweep_dbm: vec![], ..Default::default() };
        assert!(matches!(s.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn toml_overlays_every_struct() {
        let s = CampaignSpec::from_toml(
            "M_T = 1\nK_U = 1\nsigma2_si = 1e-12\nrician_K = 3.0\nmax_iters = 40\ntrials = 5\nsweep_dbm = [20.0]\nschemes = \"harvest\"\nseed = 9\nalpha_points = 60\n",
        )
        .unwrap();
        assert_eq!(s.cfg.m_t, 1);
        assert_eq!(s.cfg.k_u, 1);
        assert_eq!(s.cfg.beta.len(), 1);
        assert_eq!(s.cfg.sigma2_si, 1e-12);
        assert_eq!(s.gen.sigma2_si, 1e-12);
        assert_eq!(s.gen.rician_k, 3.0);
        assert_eq!(s.gen.seed, 9);
        assert_eq!(s.sca.max_iters, 40);
        assert_eq!(s.grid.alpha_points, 60);
        assert_eq!((s.trials, s.seed, s.schemes), (5, 9, SchemeSet::Harvest));
        assert!(matches!(CampaignSpec::from_toml("M_X = 2"), Err(Error::Parse(_))));
    }

    #[test]
    fn sweep_pairs_schemes_on_shared_channels() {
        let d = run_aee_sweep(&tiny()).unwrap();
        assert_eq!(d.runs.len(), 2 * 2 * 2);
        assert_eq!(d.points.len(), 4);
        for c in d.runs.chunks(2) {
            assert_eq!(c[0].trial, c[1].trial);
            assert_eq!((c[0].scheme, c[1].scheme), (Scheme::Harvest, Scheme::Baseline));
        }
        let seq = run_aee_sweep_on(&tiny(), Exec::Sequential).unwrap();
        assert_eq!(seq.summary_csv(), d.summary_csv());
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, ci) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci - 1.96 * 1.0).abs() < 1e-12);
        assert!(mean_ci(&[]).0.is_nan());
    }
}
