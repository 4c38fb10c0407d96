//! Monte Carlo sweep over channel realizations and rate requirements, and
//! emission of per-record CSV plus a JSON summary.
//!
//! Realization `k` draws its channel from the ChaCha stream `k` of the master
//! seed, so results do not depend on how realizations are scheduled.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{solve_ops, solve_otcm, OpsCovariance, DEFAULT_OTCM_RHO};
use crate::channel::{dbm_to_watts, decompose, generate_channel_with, SimRng};
use crate::eh_model::{EhModel, Rectifier};
use crate::error::{Result, SwiptError};
use crate::joint_opt::{compute_rate_threshold, solve_joint, threshold_closed_form, Branch, JointSolution, SwiptProblem, KKT_ACCEPT};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 20_190_321;

/// Column order of the records CSV.
pub const CSV_HEADER: [&str; 11] = [
    "realization",
    "rate_index",
    "rate",
    "scheme",
    "branch",
    "rho",
    "p_re",
    "p_h",
    "rate_achieved",
    "kkt_residual",
    "powers",
];

/// Fraction of joint records re-checked against the solver invariants.
const SPOT_CHECK_FRACTION: f64 = 0.01;
const SPOT_CHECK_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Joint,
    Ops,
    Otcm,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Joint, Scheme::Ops, Scheme::Otcm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Joint => "joint",
            Scheme::Ops => "ops",
            Scheme::Otcm => "otcm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = SwiptError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "joint" => Ok(Scheme::Joint),
            "ops" => Ok(Scheme::Ops),
            "otcm" => Ok(Scheme::Otcm),
            other => Err(SwiptError::invalid("schemes", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateGrid {
    /// `points` rates from 0 to `max_fraction · R_max` of each realization.
    Auto { points: usize, max_fraction: f64 },
    /// The same absolute rates (bps/Hz) for every realization.
    Values(Vec<f64>),
}

impl Default for RateGrid {
    fn default() -> Self {
        RateGrid::Auto {
            points: 20,
            max_fraction: 0.98,
        }
    }
}

impl RateGrid {
    pub fn len(&self) -> usize {
        match self {
            RateGrid::Auto { points, .. } => *points,
            RateGrid::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rates(&self, r_max: f64) -> Vec<f64> {
        match self {
            RateGrid::Auto { points, max_fraction } => {
                let top = max_fraction * r_max;
                (0..*points)
                    .map(|k| top * k as f64 / (points - 1).max(1) as f64)
                    .collect()
            }
            RateGrid::Values(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_r: usize,
    pub n_t: usize,
    pub theta: f64,
    /// Noise power in dBm.
    pub sigma2_dbm: f64,
    pub p_t_watts: f64,
    pub rate_grid: RateGrid,
    pub n_realizations: usize,
    pub rng_seed: u64,
    pub schemes: Vec<Scheme>,
    /// Also locate `R_th` by bisection for every realization (costly).
    pub compute_threshold: bool,
    pub eh_model: EhModel,
    pub ops_covariance: OpsCovariance,
    pub otcm_rho: f64,
    /// Output directory for `records.csv`, `curves.csv` and `summary.json`.
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_r: 4,
            n_t: 4,
            theta: 0.1,
            sigma2_dbm: -70.0,
            p_t_watts: 10.0,
            rate_grid: RateGrid::default(),
            n_realizations: 1000,
            rng_seed: DEFAULT_SEED,
            schemes: Scheme::ALL.to_vec(),
            compute_threshold: true,
            eh_model: EhModel::default(),
            ops_covariance: OpsCovariance::default(),
            otcm_rho: DEFAULT_OTCM_RHO,
            output_path: PathBuf::from("results"),
            output_format: OutputFormat::default(),
        }
    }
}

impl SimConfig {
    pub fn sigma2_watts(&self) -> f64 {
        dbm_to_watts(self.sigma2_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(SwiptError::invalid(field, reason));
        if self.n_r == 0 {
            return bad("n_r", "must be at least 1");
        }
        if self.n_t == 0 {
            return bad("n_t", "must be at least 1");
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad("theta", "must be positive");
        }
        if !self.sigma2_dbm.is_finite() {
            return bad("sigma2_dbm", "must be finite");
        }
        if !(self.p_t_watts > 0.0 && self.p_t_watts.is_finite()) {
            return bad("p_t_watts", "must be positive");
        }
        match &self.rate_grid {
            RateGrid::Auto { points, max_fraction } => {
                if *points < 2 {
                    return bad("rate_grid.auto.points", "must be at least 2");
                }
                if !(*max_fraction > 0.0 && *max_fraction <= 1.0) {
                    return bad("rate_grid.auto.max_fraction", "must lie in (0, 1]");
                }
            }
            RateGrid::Values(values) => {
                if values.is_empty() {
                    return bad("rate_grid.values", "must not be empty");
                }
                if values.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                    return bad("rate_grid.values", "rates must be finite and non-negative");
                }
            }
        }
        if self.n_realizations == 0 {
            return bad("n_realizations", "must be at least 1");
        }
        if self.schemes.is_empty() {
            return bad("schemes", "must name at least one scheme");
        }
        let mut sorted = self.schemes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.schemes.len() {
            return bad("schemes", "must not repeat a scheme");
        }
        if !(0.0..1.0).contains(&self.otcm_rho) {
            return bad("otcm_rho", "must lie in [0, 1)");
        }
        self.eh_model.validate()
    }

    fn sorted_schemes(&self) -> Vec<Scheme> {
        let mut s = self.schemes.clone();
        s.sort();
        s
    }
}

/// One solved (realization, rate, scheme) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub realization: u64,
    pub rate_index: usize,
    pub rate: f64,
    pub scheme: Scheme,
    pub branch: Branch,
    pub rho: f64,
    pub p_re: f64,
    pub p_h: f64,
    pub rate_achieved: f64,
    pub kkt_residual: f64,
    pub powers: Vec<f64>,
}

/// A (realization, rate, scheme) triple with no feasible design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasiblePair {
    pub realization: u64,
    pub rate_index: usize,
    pub rate: f64,
    pub scheme: Scheme,
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationInfo {
    pub realization: u64,
    pub singular_values: Vec<f64>,
    pub r_max: f64,
    pub r_th: Option<f64>,
    pub r_th_closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rate_index: usize,
    pub scheme: Scheme,
    pub count: usize,
    pub mean_rate: f64,
    pub mean_p_re: f64,
    pub std_p_re: f64,
    pub mean_p_h: f64,
    pub std_p_h: f64,
}

/// Percentage by which `scheme` beats `baseline` in mean `p_re` at one rate
/// index, over realizations where both were feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub rate_index: usize,
    pub scheme: Scheme,
    pub baseline: Scheme,
    pub paired: usize,
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub config: SimConfig,
    pub rng_seed: u64,
    pub n_records: usize,
    pub n_infeasible: usize,
    pub mean_r_max: f64,
    pub mean_r_th: Option<f64>,
    pub mean_r_th_closed_form: f64,
    pub aggregates: Vec<Aggregate>,
    pub gains: Vec<Gain>,
    pub spot_check: SpotCheck,
    pub infeasible: Vec<InfeasiblePair>,
    pub realizations: Vec<RealizationInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

struct RealizationOutput {
    info: RealizationInfo,
    records: Vec<SweepRecord>,
    infeasible: Vec<InfeasiblePair>,
    spot_check: SpotCheck,
}

/// Runs every configured scheme on every (realization, rate) pair.
pub fn run_sweep(cfg: &SimConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let outputs: Vec<RealizationOutput> = (0..cfg.n_realizations as u64)
        .into_par_iter()
        .map(|id| run_realization(cfg, id))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut infeasible = Vec::new();
    let mut realizations = Vec::with_capacity(outputs.len());
    let mut spot_check = SpotCheck::default();
    for out in outputs {
        records.extend(out.records);
        infeasible.extend(out.infeasible);
        realizations.push(out.info);
        spot_check.checked += out.spot_check.checked;
        spot_check.violations += out.spot_check.violations;
    }
    let summary = summarize(cfg, &records, infeasible, realizations, spot_check);
    Ok(SweepResult { records, summary })
}

/// Channel realization `id` of the sweep seeded with `seed`.
pub fn realization_rng(seed: u64, id: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn run_realization(cfg: &SimConfig, id: u64) -> Result<RealizationOutput> {
    let mut rng = realization_rng(cfg.rng_seed, id);
    let channel = generate_channel_with(&mut rng, cfg.n_r, cfg.n_t, cfg.theta);
    let svd = decompose(&channel)?;
    let sigma2 = cfg.sigma2_watts();
    let base = SwiptProblem::new(svd, cfg.p_t_watts, sigma2, 0.0)?;
    let r_max = base.max_rate();
    let r_th = if cfg.compute_threshold {
        Some(compute_rate_threshold(base.svd(), cfg.p_t_watts, sigma2)?)
    } else {
        None
    };
    let info = RealizationInfo {
        realization: id,
        singular_values: base.svd().singular_values().to_vec(),
        r_max,
        r_th,
        r_th_closed_form: threshold_closed_form(base.svd(), cfg.p_t_watts, sigma2),
    };

    let ops_cov = if cfg.schemes.contains(&Scheme::Ops) {
        Some(cfg.ops_covariance.build(&base)?)
    } else {
        None
    };
    let mut check_rng = realization_rng(cfg.rng_seed ^ SPOT_CHECK_STREAM_SALT, id);
    let mut spot_check = SpotCheck::default();
    let mut records = Vec::new();
    let mut infeasible = Vec::new();
    for (rate_index, rate) in cfg.rate_grid.rates(r_max).into_iter().enumerate() {
        let prob = base.with_rate(rate)?;
        for scheme in cfg.sorted_schemes() {
            let outcome = match scheme {
                Scheme::Joint => solve_joint(&prob),
                Scheme::Ops => solve_ops(&prob, ops_cov.as_ref().expect("built when OPS is selected")),
                Scheme::Otcm => solve_otcm(&prob, cfg.otcm_rho),
            };
            let sol = match outcome {
                Ok(sol) => sol,
                Err(SwiptError::InfeasibleRate { max_rate, .. }) => {
                    infeasible.push(InfeasiblePair {
                        realization: id,
                        rate_index,
                        rate,
                        scheme,
                        max_rate,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            if scheme == Scheme::Joint && check_rng.random::<f64>() < SPOT_CHECK_FRACTION {
                spot_check.checked += 1;
                if !satisfies_invariants(&prob, &sol) {
                    spot_check.violations += 1;
                }
            }
            records.push(SweepRecord {
                realization: id,
                rate_index,
                rate,
                scheme,
                branch: sol.branch,
                rho: sol.rho(),
                p_re: sol.p_re,
                p_h: cfg.eh_model.rectify(sol.p_re),
                rate_achieved: sol.rate_achieved,
                kkt_residual: sol.kkt_residual,
                powers: sol.allocation.powers,
            });
        }
    }
    Ok(RealizationOutput {
        info,
        records,
        infeasible,
        spot_check,
    })
}

/// Feasibility, full power use, `p_re` consistency and the KKT residual.
pub fn satisfies_invariants(prob: &SwiptProblem, sol: &JointSolution) -> bool {
    let powers = &sol.allocation.powers;
    let total: f64 = powers.iter().sum();
    let received: f64 = prob.gains().iter().zip(powers).map(|(a, p)| a * p).sum();
    sol.rate_achieved >= prob.rate_req() - 1e-7
        && (total - prob.p_t()).abs() <= 1e-9 * prob.p_t()
        && (0.0..=1.0).contains(&sol.rho())
        && powers.iter().all(|p| *p >= 0.0)
        && (sol.p_re - sol.rho() * received).abs() <= 1e-12 * prob.reference_power()
        && sol.kkt_residual <= KKT_ACCEPT
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Per-(rate index, scheme) means and sample standard deviations, in
/// canonical order.
pub fn aggregate(records: &[SweepRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, Scheme), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.rate_index, r.scheme)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((rate_index, scheme), rs)| {
            let rates: Vec<f64> = rs.iter().map(|r| r.rate).collect();
            let p_re: Vec<f64> = rs.iter().map(|r| r.p_re).collect();
            let p_h: Vec<f64> = rs.iter().map(|r| r.p_h).collect();
            let (mean_p_re, std_p_re) = mean_std(&p_re);
            let (mean_p_h, std_p_h) = mean_std(&p_h);
            Aggregate {
                rate_index,
                scheme,
                count: rs.len(),
                mean_rate: mean_std(&rates).0,
                mean_p_re,
                std_p_re,
                mean_p_h,
                std_p_h,
            }
        })
        .collect()
}

/// Pairwise gains in mean `p_re` over realizations where both schemes are
/// feasible at the same rate index.
pub fn pairwise_gains(records: &[SweepRecord], schemes: &[Scheme]) -> Vec<Gain> {
    let mut by_key: BTreeMap<(usize, Scheme), BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records {
        by_key.entry((r.rate_index, r.scheme)).or_default().insert(r.realization, r.p_re);
    }
    let rate_indices: Vec<usize> = {
        let mut v: Vec<usize> = records.iter().map(|r| r.rate_index).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut schemes = schemes.to_vec();
    schemes.sort();
    let mut gains = Vec::new();
    for &rate_index in &rate_indices {
        for (i, &scheme) in schemes.iter().enumerate() {
            for &baseline in &schemes[i + 1..] {
                let empty = BTreeMap::new();
                let a = by_key.get(&(rate_index, scheme)).unwrap_or(&empty);
                let b = by_key.get(&(rate_index, baseline)).unwrap_or(&empty);
                let (mut sum_a, mut sum_b, mut paired) = (0.0, 0.0, 0usize);
                for (id, pa) in a {
                    if let Some(pb) = b.get(id) {
                        sum_a += pa;
                        sum_b += pb;
                        paired += 1;
                    }
                }
                let percent = (paired > 0 && sum_b > 0.0).then(|| 100.0 * (sum_a - sum_b) / sum_b);
                gains.push(Gain {
                    rate_index,
                    scheme,
                    baseline,
                    paired,
                    percent,
                });
            }
        }
    }
    gains
}

fn summarize(
    cfg: &SimConfig,
    records: &[SweepRecord],
    infeasible: Vec<InfeasiblePair>,
    realizations: Vec<RealizationInfo>,
    spot_check: SpotCheck,
) -> SweepSummary {
    let n = realizations.len().max(1) as f64;
    let mean_r_max = realizations.iter().map(|r| r.r_max).sum::<f64>() / n;
    let mean_r_th_closed_form = realizations.iter().map(|r| r.r_th_closed_form).sum::<f64>() / n;
    let thresholds: Vec<f64> = realizations.iter().filter_map(|r| r.r_th).collect();
    let mean_r_th = (!thresholds.is_empty()).then(|| thresholds.iter().sum::<f64>() / thresholds.len() as f64);
    SweepSummary {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        rng_seed: cfg.rng_seed,
        n_records: records.len(),
        n_infeasible: infeasible.len(),
        mean_r_max,
        mean_r_th,
        mean_r_th_closed_form,
        aggregates: aggregate(records),
        gains: pairwise_gains(records, &cfg.schemes),
        spot_check,
        infeasible,
        realizations,
    }
}

fn join_powers(powers: &[f64]) -> String {
    powers.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_records_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.realization.to_string(),
            r.rate_index.to_string(),
            r.rate.to_string(),
            r.scheme.to_string(),
            r.branch.to_string(),
            r.rho.to_string(),
            r.p_re.to_string(),
            r.p_h.to_string(),
            r.rate_achieved.to_string(),
            r.kkt_residual.to_string(),
            join_powers(&r.powers),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a records CSV written by [`write_records_csv`].
pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| SwiptError::invalid(CSV_HEADER[i], format!("not a number: `{}`", field(i))))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse()
                .map_err(|_| SwiptError::invalid(CSV_HEADER[i], format!("not an integer: `{}`", field(i))))
        };
        let branch = match field(4) {
            "EB" => Branch::EnergyBeamforming,
            "SM" => Branch::SpatialMultiplexing,
            other => return Err(SwiptError::invalid("branch", format!("unknown branch `{other}`"))),
        };
        let powers = if field(10).is_empty() {
            Vec::new()
        } else {
            field(10)
                .split(';')
                .map(|p| p.parse().map_err(|_| SwiptError::invalid("powers", format!("not a number: `{p}`"))))
                .collect::<Result<_>>()?
        };
        out.push(SweepRecord {
            realization: int(0)?,
            rate_index: int(1)? as usize,
            rate: num(2)?,
            scheme: field(3).parse()?,
            branch,
            rho: num(5)?,
            p_re: num(6)?,
            p_h: num(7)?,
            rate_achieved: num(8)?,
            kkt_residual: num(9)?,
            powers,
        });
    }
    Ok(out)
}

/// `(R, mean p_re)`-style curves, one row per (rate index, scheme).
pub fn write_curves_csv<W: Write>(aggregates: &[Aggregate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rate_index",
        "scheme",
        "count",
        "mean_rate",
        "mean_p_re",
        "std_p_re",
        "mean_p_h",
        "std_p_h",
    ])?;
    for a in aggregates {
        w.write_record([
            a.rate_index.to_string(),
            a.scheme.to_string(),
            a.count.to_string(),
            a.mean_rate.to_string(),
            a.mean_p_re.to_string(),
            a.std_p_re.to_string(),
            a.mean_p_h.to_string(),
            a.std_p_h.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const RECORDS_FILE: &str = "records.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Writes the requested artifacts into directory `dir`; returns their paths.
pub fn emit(result: &SweepResult, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = dir.join(RECORDS_FILE);
        write_records_csv(&result.records, fs::File::create(&path)?)?;
        written.push(path);
        let path = dir.join(CURVES_FILE);
        write_curves_csv(&result.summary.aggregates, fs::File::create(&path)?)?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = dir.join(SUMMARY_FILE);
        let mut file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, &result.summary)?;
        file.write_all(b"\n")?;
        written.push(path);
    }
    Ok(written)
}
