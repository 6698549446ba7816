//! Experiment harness: holdout, sparsity subsampling, method fits, metric
//! aggregation and parameter sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::longtail::{long_tail_from_predictions, BucketRow};
use super::metrics::{mae, rmse};
use crate::boost::{run_stlcf, BoostConfig};
use crate::data::{
    align_domains, read_ratings_file, split_holdout, subsample, AlignedCollection, Orientation, RatingBounds, RatingsMatrix,
};
use crate::error::{invalid, Error, Result};
use crate::gplsa::{constant_weights, fit_gplsa, fit_tgplsa, Predictor};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gplsa,
    Tgplsa,
    StlcfE,
    StlcfEv,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gplsa, Method::Tgplsa, Method::StlcfE, Method::StlcfEv];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gplsa => "gplsa",
            Method::Tgplsa => "tgplsa",
            Method::StlcfE => "stlcf-e",
            Method::StlcfEv => "stlcf-ev",
        }
    }

    pub fn is_boosted(self) -> bool {
        matches!(self, Method::StlcfE | Method::StlcfEv)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}; expected gplsa, tgplsa, stlcf-e or stlcf-ev")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileData {
    pub target: PathBuf,
    #[serde(default)]
    pub sources: Vec<PathBuf>,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default = "one")]
    pub rating_min: f64,
    #[serde(default = "five")]
    pub rating_max: f64,
}

fn one() -> f64 {
    1.0
}
fn five() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSpec {
    Synth(SynthConfig),
    Files(FileData),
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Synth(SynthConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Tau,
    Gamma,
    #[serde(rename = "T", alias = "rounds")]
    Rounds,
    K,
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(SweepParam::Tau),
            "gamma" => Ok(SweepParam::Gamma),
            "T" | "rounds" => Ok(SweepParam::Rounds),
            "k" => Ok(SweepParam::K),
            _ => invalid(format!("unknown sweep parameter {s:?}; expected tau, gamma, T or k")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSpec,
    pub methods: Vec<Method>,
    /// Target training densities, as fractions of all target cells.
    pub densities: Vec<f64>,
    /// Fraction of target ratings held out for testing.
    pub holdout_fraction: f64,
    pub holdout_seed: u64,
    pub seeds: Vec<u64>,
    /// Regenerate synthetic data (and its holdout) for every seed.
    pub resample_data: bool,
    /// Boosting settings; `boost.em` also configures gplsa and tgplsa.
    pub boost: BoostConfig<f64>,
    pub long_tail: bool,
    /// Record held-out RMSE of the committee after every boosting round.
    pub record_prefix: bool,
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSpec::default(),
            methods: Method::ALL.to_vec(),
            densities: vec![0.001, 0.002, 0.003],
            holdout_fraction: 0.3,
            holdout_seed: 0,
            seeds: vec![0],
            resample_data: false,
            boost: BoostConfig::default(),
            long_tail: true,
            record_prefix: false,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.densities.is_empty() || self.seeds.is_empty() {
            return invalid("methods, densities and seeds must be nonempty");
        }
        if !self.densities.iter().all(|&d| d > 0.0 && d <= 1.0) {
            return invalid("densities must lie in (0, 1]");
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return invalid("holdout_fraction must lie in (0, 1)");
        }
        if let DataSpec::Synth(s) = &self.data {
            s.validate()?;
        }
        if let Some(sw) = &self.sweep {
            if sw.grid.is_empty() {
                return invalid("sweep grid must be nonempty");
            }
            if matches!(sw.param, SweepParam::Rounds | SweepParam::K) && !sw.grid.iter().all(|&v| v >= 1.0 && v.fract() == 0.0) {
                return invalid("T and k sweep values must be positive integers");
            }
        }
        Ok(())
    }

    /// First 12 hex digits of the SHA-256 of the config's JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub density: f64,
    pub seed: u64,
    pub method: Method,
    pub n_train: usize,
    pub n_test: usize,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub error: Option<String>,
    pub long_tail: Vec<BucketRow>,
    /// α of every boosting round, including rounds left out of the committee.
    pub alphas: Vec<f64>,
    /// Held-out RMSE of the committee after each round; `None` while empty.
    pub prefix_rmse: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub density: f64,
    pub method: Method,
    pub n_runs: usize,
    pub failures: usize,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub mae_mean: Option<f64>,
    pub mae_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTailSummary {
    pub density: f64,
    pub bucket: String,
    pub method: Method,
    pub n_runs: usize,
    pub rmse_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub density: f64,
    pub method: Method,
    pub n_runs: usize,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTrace {
    pub density: f64,
    pub seed: u64,
    pub method: Method,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Per-round α of the longest run, for T sweeps.
    pub alpha_traces: Vec<AlphaTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub cells: Vec<CellResult>,
    pub summary: Vec<CellSummary>,
    pub long_tail: Vec<LongTailSummary>,
    pub sweep: Option<SweepReport>,
}

impl MetricsReport {
    pub fn cell(&self, density: f64, method: Method) -> Option<&CellSummary> {
        self.summary.iter().find(|c| c.density == density && c.method == method)
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Target-domain holdout of one dataset draw, in shared-users orientation.
struct Prepared {
    data: AlignedCollection<f64>,
    train: RatingsMatrix<f64>,
    test: RatingsMatrix<f64>,
}

fn load(spec: &DataSpec, seed_offset: u64) -> Result<AlignedCollection<f64>> {
    match spec {
        DataSpec::Synth(s) => {
            let mut s = s.clone();
            s.seed = s.seed.wrapping_add(seed_offset);
            Ok(generate::<f64>(&s)?.0)
        }
        DataSpec::Files(f) => {
            let bounds = RatingBounds::new(f.rating_min, f.rating_max)?;
            let target = read_ratings_file(&f.target, bounds)?;
            let sources = f.sources.iter().map(|p| read_ratings_file(p, bounds)).collect::<Result<Vec<_>>>()?;
            Ok(align_domains(&target, &sources, f.orientation))
        }
    }
}

fn prepare(cfg: &ExperimentConfig, seed_offset: u64) -> Result<Prepared> {
    let data = load(&cfg.data, seed_offset)?.shared_users_view().into_owned();
    let split = split_holdout(&data.target, cfg.holdout_fraction, cfg.holdout_seed.wrapping_add(seed_offset))?;
    Ok(Prepared { data, train: split.train, test: split.test })
}

/// Fails if any test entry also appears in the training matrix.
pub fn check_holdout(train: &RatingsMatrix<f64>, test: &RatingsMatrix<f64>) -> Result<()> {
    if train.n_users() != test.n_users() || train.n_items() != test.n_items() {
        return invalid("train and test matrices have different shapes");
    }
    if let Some(t) = test.triples().find(|t| train.get(t.user, t.item).is_some()) {
        return invalid(format!("test entry ({}, {}) leaked into training data", t.user, t.item));
    }
    Ok(())
}

fn mix(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k)
}

struct Fitted {
    preds: Vec<f64>,
    alphas: Vec<f64>,
    prefix: Vec<Option<f64>>,
}

fn predict_all(p: &dyn Predictor<f64>, test: &RatingsMatrix<f64>) -> Result<Vec<f64>> {
    test.triples().map(|t| p.predict(t.user, t.item)).collect()
}

fn fit_method(
    method: Method,
    data: &AlignedCollection<f64>,
    test: &RatingsMatrix<f64>,
    boost: &BoostConfig<f64>,
    record_prefix: bool,
) -> Result<Fitted> {
    let plain = |preds| Fitted { preds, alphas: Vec::new(), prefix: Vec::new() };
    match method {
        Method::Gplsa => Ok(plain(predict_all(&fit_gplsa(&data.target, &boost.em)?.model, test)?)),
        Method::Tgplsa => {
            let fit = fit_tgplsa(data, &constant_weights(data, 1.0), &boost.em)?;
            Ok(plain(predict_all(&fit.model, test)?))
        }
        Method::StlcfE | Method::StlcfEv => {
            let mut cfg = boost.clone();
            if method == Method::StlcfE {
                cfg.gamma = 0.0;
            }
            let run = run_stlcf(data, &cfg)?;
            let preds = predict_all(&run.ensemble, test)?;
            let alphas = run.rounds.iter().map(|r| r.alpha).collect();
            let prefix = if record_prefix { prefix_curve(&run.ensemble, run.rounds.len(), test)? } else { Vec::new() };
            Ok(Fitted { preds, alphas, prefix })
        }
    }
}

fn prefix_curve(ens: &crate::boost::Ensemble<f64>, rounds: usize, test: &RatingsMatrix<f64>) -> Result<Vec<Option<f64>>> {
    let truths = test.values();
    let mut num = vec![0.0; test.nnz()];
    let mut den = 0.0;
    let mut member = 0;
    let bounds = test.bounds();
    let mut out = Vec::with_capacity(rounds);
    for t in 0..rounds {
        while member < ens.len() && ens.member_rounds[member] == t {
            let (h, a) = (&ens.learners[member], ens.alphas[member]);
            for (pos, tr) in test.triples().enumerate() {
                num[pos] += a * h.predict(tr.user, tr.item)?;
            }
            den += a;
            member += 1;
        }
        if member == 0 {
            out.push(None);
        } else {
            let preds: Vec<f64> = num.iter().map(|&n| bounds.clamp(n / den)).collect();
            out.push(Some(rmse(&preds, truths)?));
        }
    }
    Ok(out)
}

fn run_cell(prep: &Prepared, density: f64, di: usize, seed: u64, method: Method, cfg: &ExperimentConfig) -> CellResult {
    let mut cell = CellResult {
        density,
        seed,
        method,
        n_train: 0,
        n_test: prep.test.nnz(),
        rmse: None,
        mae: None,
        error: None,
        long_tail: Vec::new(),
        alphas: Vec::new(),
        prefix_rmse: Vec::new(),
    };
    let outcome = (|| -> Result<()> {
        let cells = prep.train.n_users() as f64 * prep.train.n_items() as f64;
        let n_keep = (density * cells).round() as usize;
        if n_keep > prep.train.nnz() {
            return invalid(format!("density {density} needs {n_keep} training ratings but only {} are available", prep.train.nnz()));
        }
        let train = subsample(&prep.train, n_keep, mix(seed, di as u64))?;
        check_holdout(&train, &prep.test)?;
        cell.n_train = train.nnz();
        let data = prep.data.with_target(train);
        let mut boost = cfg.boost.clone();
        boost.em.seed = boost.em.seed.wrapping_add(seed.wrapping_mul(1 << 20));
        let fitted = fit_method(method, &data, &prep.test, &boost, cfg.record_prefix)?;
        cell.rmse = Some(rmse(&fitted.preds, prep.test.values())?);
        cell.mae = Some(mae(&fitted.preds, prep.test.values())?);
        if cfg.long_tail {
            cell.long_tail = long_tail_from_predictions(&data.target, &prep.test, &[(method.name().to_string(), fitted.preds)])?;
        }
        cell.alphas = fitted.alphas;
        cell.prefix_rmse = fitted.prefix;
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("{method} at density {density}, seed {seed} failed: {e}");
        cell.rmse = None;
        cell.mae = None;
        cell.error = Some(e.to_string());
    }
    cell
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() < 2 { 0.0 } else { (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt() };
    (Some(mean), Some(std))
}

fn summarize(cfg: &ExperimentConfig, cells: &[CellResult]) -> (Vec<CellSummary>, Vec<LongTailSummary>) {
    let mut summary = Vec::new();
    let mut tails = Vec::new();
    for &density in &cfg.densities {
        for &method in &cfg.methods {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.density == density && c.method == method).collect();
            let rmses: Vec<f64> = group.iter().filter_map(|c| c.rmse).collect();
            let maes: Vec<f64> = group.iter().filter_map(|c| c.mae).collect();
            let (rmse_mean, rmse_std) = mean_std(&rmses);
            let (mae_mean, mae_std) = mean_std(&maes);
            summary.push(CellSummary {
                density,
                method,
                n_runs: rmses.len(),
                failures: group.len() - rmses.len(),
                rmse_mean,
                rmse_std,
                mae_mean,
                mae_std,
            });
            let mut buckets: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
            for c in &group {
                for row in &c.long_tail {
                    let order = super::longtail::bucket_order(&row.bucket);
                    buckets.entry((order, row.bucket.clone())).or_default().extend(row.rmse.values());
                }
            }
            for ((_, bucket), v) in buckets {
                tails.push(LongTailSummary { density, bucket, method, n_runs: v.len(), rmse_mean: v.iter().sum::<f64>() / v.len() as f64 });
            }
        }
    }
    (summary, tails)
}

/// Runs every (density, seed, method) cell of the grid. Failures are
/// recorded in their cell; an error is returned only for an invalid config
/// or unloadable data.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let resample = cfg.resample_data && matches!(cfg.data, DataSpec::Synth(_));
    let prepared: Vec<Prepared> =
        if resample { cfg.seeds.par_iter().map(|&s| prepare(cfg, s)).collect::<Result<_>>()? } else { vec![prepare(cfg, 0)?] };
    let mut jobs = Vec::new();
    for (di, &density) in cfg.densities.iter().enumerate() {
        for (si, &seed) in cfg.seeds.iter().enumerate() {
            for &method in &cfg.methods {
                jobs.push((di, density, si, seed, method));
            }
        }
    }
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(di, density, si, seed, method)| {
            let prep = &prepared[if resample { si } else { 0 }];
            run_cell(prep, density, di, seed, method, cfg)
        })
        .collect();
    let (summary, long_tail) = summarize(cfg, &cells);
    Ok(MetricsReport { config: cfg.clone(), config_hash: cfg.hash(), cells, summary, long_tail, sweep: None })
}

fn with_param(base: &ExperimentConfig, param: SweepParam, value: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.sweep = None;
    match param {
        SweepParam::Tau => cfg.boost.tau = value,
        SweepParam::Gamma => cfg.boost.gamma = value,
        SweepParam::Rounds => cfg.boost.rounds = value as usize,
        SweepParam::K => cfg.boost.em.k = value as usize,
    }
    cfg
}

fn rows_from(value: f64, report: &MetricsReport) -> Vec<SweepRow> {
    report
        .summary
        .iter()
        .map(|c| SweepRow { value, density: c.density, method: c.method, n_runs: c.n_runs, rmse_mean: c.rmse_mean, rmse_std: c.rmse_std })
        .collect()
}

/// Reruns the base experiment at every grid value of one parameter.
///
/// A T sweep is served from a single run at the largest T: boosting is
/// causal, so the committee after round T of a longer run is the committee
/// of a T-round run.
pub fn sweep(param: SweepParam, grid: &[f64], base: &ExperimentConfig) -> Result<SweepReport> {
    if grid.is_empty() {
        return invalid("sweep grid must be nonempty");
    }
    let mut rows = Vec::new();
    let mut alpha_traces = Vec::new();
    if param == SweepParam::Rounds {
        let t_max = grid.iter().cloned().fold(1.0, f64::max);
        let mut cfg = with_param(base, param, t_max);
        cfg.record_prefix = true;
        let report = run_experiment(&cfg)?;
        for &value in grid {
            let t = value as usize;
            for s in &report.summary {
                let group: Vec<&CellResult> = report.cells.iter().filter(|c| c.density == s.density && c.method == s.method).collect();
                let vals: Vec<f64> = if s.method.is_boosted() {
                    group.iter().filter_map(|c| c.prefix_rmse.get(t - 1).copied().flatten()).collect()
                } else {
                    group.iter().filter_map(|c| c.rmse).collect()
                };
                let (rmse_mean, rmse_std) = mean_std(&vals);
                rows.push(SweepRow { value, density: s.density, method: s.method, n_runs: vals.len(), rmse_mean, rmse_std });
            }
        }
        alpha_traces = report
            .cells
            .iter()
            .filter(|c| c.method.is_boosted())
            .map(|c| AlphaTrace { density: c.density, seed: c.seed, method: c.method, alphas: c.alphas.clone() })
            .collect();
    } else {
        for &value in grid {
            rows.extend(rows_from(value, &run_experiment(&with_param(base, param, value))?));
        }
    }
    Ok(SweepReport { param, rows, alpha_traces })
}

/// Runs the base grid and, when configured, the sweep.
pub fn run_spec(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let mut report = run_experiment(cfg)?;
    if let Some(sw) = &cfg.sweep {
        report.sweep = Some(sweep(sw.param, &sw.grid, cfg)?);
    }
    Ok(report)
}
