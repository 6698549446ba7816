use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use stlcf::boost::run_stlcf;
use stlcf::data::{align_domains, parse_pairs, read_ratings_file, split_holdout, Orientation, RatingBounds};
use stlcf::eval::{run_spec, write_report, ExperimentConfig, Method};
use stlcf::gplsa::{constant_weights, fit_gplsa, fit_tgplsa};
use stlcf::persist::{PredictPath, SavedModel, Trained};
use stlcf::synth::{generate, write_synthetic, SynthConfig};
use stlcf::{Boost, Error};

use crate::{ExperimentArgs, ModelFlags, PredictArgs, SplitArgs, SynthArgs, TrainArgs};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T = ()> = Result<T, Failure>;

trait Classify<T> {
    fn usage(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Outcome<T> {
        self.map_err(|e| Failure { code: 1, error: e.into() })
    }
    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| Failure { code: 2, error: e.into() })
    }
}

/// Invalid arguments are the caller's fault; everything else is a runtime failure.
fn by_kind<T>(r: stlcf::Result<T>) -> Outcome<T> {
    match r {
        Err(e @ Error::InvalidArgument(_)) => Err(e).usage(),
        other => other.runtime(),
    }
}

fn read_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Outcome<C> {
    let Some(path) = path else { return Ok(C::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display())).usage()?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display())).usage()
}

fn write_config<C: Serialize>(path: &Path, cfg: &C) -> Outcome {
    let text = toml::to_string(cfg).context("serializing effective config").runtime()?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).runtime()
}

/// `dir/name.model` → `dir/name.<suffix>`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn ensure_parent(path: &Path) -> Outcome {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).with_context(|| format!("creating {}", p.display())).runtime(),
        _ => Ok(()),
    }
}

fn apply_model_flags(boost: &mut Boost, f: &ModelFlags) {
    if let Some(k) = f.k {
        boost.em.k = k;
    }
    if let Some(l) = f.lambda {
        boost.em.lambda = l;
    }
    if let Some(t) = f.tau {
        boost.tau = t;
    }
    if let Some(g) = f.gamma {
        boost.gamma = g;
    }
    if let Some(t) = f.rounds {
        boost.rounds = t;
    }
}

pub fn synth(a: SynthArgs) -> Outcome {
    let mut cfg: SynthConfig = read_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate().usage()?;
    let (data, truth) = by_kind(generate::<f64>(&cfg))?;
    let written = write_synthetic(&a.out, &data, &truth).runtime()?;
    write_config(&a.out.join("synth.toml"), &cfg)?;
    log::info!("wrote {} files to {}", written.len() + 1, a.out.display());
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SplitConfig {
    input: Option<PathBuf>,
    fraction: f64,
    seed: u64,
    rating_min: f64,
    rating_max: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { input: None, fraction: 0.3, seed: 0, rating_min: 1.0, rating_max: 5.0 }
    }
}

pub fn split(a: SplitArgs) -> Outcome {
    let mut cfg: SplitConfig = read_config(a.config.as_deref())?;
    cfg.input = a.input.or(cfg.input);
    cfg.fraction = a.fraction.unwrap_or(cfg.fraction);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.rating_min = a.rating_min.unwrap_or(cfg.rating_min);
    cfg.rating_max = a.rating_max.unwrap_or(cfg.rating_max);
    let input = cfg.input.clone().ok_or_else(|| anyhow!("--input is required")).usage()?;
    let bounds = RatingBounds::new(cfg.rating_min, cfg.rating_max).usage()?;
    let m = read_ratings_file(&input, bounds).with_context(|| format!("reading {}", input.display())).runtime()?;
    let s = by_kind(split_holdout(&m, cfg.fraction, cfg.seed))?;
    s.write(&a.out).runtime()?;
    write_config(&a.out.join("split.toml"), &cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainConfig {
    method: Method,
    target: Option<PathBuf>,
    sources: Vec<PathBuf>,
    orientation: Orientation,
    rating_min: f64,
    rating_max: f64,
    boost: Boost,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::StlcfEv,
            target: None,
            sources: Vec::new(),
            orientation: Orientation::SharedUsers,
            rating_min: 1.0,
            rating_max: 5.0,
            boost: Boost::default(),
        }
    }
}

fn trace_csv(saved: &SavedModel<f64>) -> String {
    let mut s = String::new();
    match &saved.trained {
        Trained::Model { trace, .. } => {
            s.push_str("iteration,nll,objective\n");
            for (t, (n, o)) in trace.nll.iter().zip(&trace.objective).enumerate() {
                let _ = writeln!(s, "{t},{n},{o}");
            }
        }
        Trained::Ensemble { rounds, .. } => {
            let n_sources = rounds.first().map_or(0, |r| r.betas.len());
            s.push_str("round,alpha");
            for k in 1..=n_sources {
                let _ = write!(s, ",beta_{k}");
            }
            s.push_str(",mispredicted,within,train_rmse,em_iterations\n");
            for (t, r) in rounds.iter().enumerate() {
                let _ = write!(s, "{},{}", t + 1, r.alpha);
                for b in &r.betas {
                    let _ = write!(s, ",{b}");
                }
                let _ = writeln!(s, ",{},{},{},{}", r.mispredicted.len(), r.within.len(), r.train_rmse, r.em_iterations);
            }
        }
    }
    s
}

pub fn train(a: TrainArgs) -> Outcome {
    let mut cfg: TrainConfig = read_config(a.config.as_deref())?;
    if let Some(m) = a.method {
        cfg.method = m;
    }
    if let Some(t) = a.target {
        cfg.target = Some(t);
    }
    if !a.sources.is_empty() {
        cfg.sources = a.sources;
    }
    if let Some(o) = a.orientation {
        cfg.orientation = o;
    }
    if let Some(s) = a.seed {
        cfg.boost.em.seed = s;
    }
    cfg.rating_min = a.rating_min.unwrap_or(cfg.rating_min);
    cfg.rating_max = a.rating_max.unwrap_or(cfg.rating_max);
    apply_model_flags(&mut cfg.boost, &a.model);
    if cfg.method == Method::StlcfE {
        cfg.boost.gamma = 0.0;
    }
    if cfg.method == Method::Gplsa && !cfg.sources.is_empty() {
        log::warn!("sources ignored for gplsa");
        cfg.sources.clear();
    }
    let target_path = cfg.target.clone().ok_or_else(|| anyhow!("--target is required")).usage()?;
    let bounds = RatingBounds::new(cfg.rating_min, cfg.rating_max).usage()?;
    cfg.boost.validate(cfg.sources.len()).usage()?;

    let read = |p: &Path| read_ratings_file(p, bounds).with_context(|| format!("reading {}", p.display())).runtime();
    let target = read(&target_path)?;
    let sources = cfg.sources.iter().map(|p| read(p)).collect::<Outcome<Vec<_>>>()?;
    let data = align_domains(&target, &sources, cfg.orientation);
    let name = cfg.method.name();
    let saved = match cfg.method {
        Method::Gplsa => {
            let view = data.shared_users_view();
            let fit = by_kind(fit_gplsa(&view.target, &cfg.boost.em))?;
            SavedModel::from_fit(name, &data, &cfg.boost.em, &fit)
        }
        Method::Tgplsa => {
            let view = data.shared_users_view();
            let fit = by_kind(fit_tgplsa(&view, &constant_weights(&view, 1.0), &cfg.boost.em))?;
            SavedModel::from_fit(name, &data, &cfg.boost.em, &fit)
        }
        Method::StlcfE | Method::StlcfEv => {
            let run = by_kind(run_stlcf(&data, &cfg.boost))?;
            log::info!("committee of {} learners from {} rounds", run.ensemble.len(), run.rounds.len());
            SavedModel::from_run(name, &data, &cfg.boost, &run)
        }
    };
    ensure_parent(&a.out)?;
    saved.save(&a.out).with_context(|| format!("writing {}", a.out.display())).runtime()?;
    fs::write(sibling(&a.out, "trace.csv"), trace_csv(&saved)).context("writing trace").runtime()?;
    write_config(&sibling(&a.out, "config.toml"), &cfg)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PredictConfig {
    model: Option<PathBuf>,
    pairs: Option<PathBuf>,
}

pub fn predict(a: PredictArgs) -> Outcome {
    let mut cfg: PredictConfig = read_config(a.config.as_deref())?;
    cfg.model = a.model.or(cfg.model);
    cfg.pairs = a.pairs.or(cfg.pairs);
    let model_path = cfg.model.clone().ok_or_else(|| anyhow!("--model is required")).usage()?;
    let pairs_path = cfg.pairs.clone().ok_or_else(|| anyhow!("--pairs is required")).usage()?;
    let model = SavedModel::<f64>::load(&model_path).with_context(|| format!("loading {}", model_path.display())).runtime()?;
    let file = fs::File::open(&pairs_path).with_context(|| format!("opening {}", pairs_path.display())).runtime()?;
    let pairs = parse_pairs(std::io::BufReader::new(file)).with_context(|| format!("reading {}", pairs_path.display())).runtime()?;
    let unknown_axis = match model.orientation {
        Orientation::SharedUsers => "item",
        Orientation::SharedItems => "user",
    };
    let mut out = String::new();
    let mut warnings = 0usize;
    let mut unseen = 0usize;
    for (n, (user, item)) in pairs.iter().enumerate() {
        let (v, path) = model.predict_ids(user, item).runtime()?;
        match path {
            PredictPath::Fitted => {}
            PredictPath::UnseenUser => unseen += 1,
            PredictPath::UnknownItem => {
                warnings += 1;
                let id = if unknown_axis == "item" { item } else { user };
                eprintln!("warning: pair {}: unknown {unknown_axis} id {id:?}; predicted the global mean", n + 1);
            }
        }
        let _ = writeln!(out, "{user},{item},{v}");
    }
    ensure_parent(&a.out)?;
    fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display())).runtime()?;
    write_config(&sibling(&a.out, "config.toml"), &cfg)?;
    if warnings > 0 {
        eprintln!("predicted {} pairs with {warnings} warnings", pairs.len());
    }
    log::info!("predicted {} pairs; {unseen} for users outside the model", pairs.len());
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Outcome {
    let mut cfg: ExperimentConfig = read_config(Some(&a.config))?;
    if let Some(s) = a.seed {
        cfg.seeds = vec![s];
    }
    apply_model_flags(&mut cfg.boost, &a.model);
    cfg.validate().usage()?;
    let report = by_kind(run_spec(&cfg))?;
    let written = write_report(&a.out, &report).runtime()?;
    write_config(&a.out.join("experiment.toml"), &cfg)?;
    let failed = report.failed_cells();
    if failed == report.cells.len() {
        return Err(anyhow!("all {failed} cells failed; see the raw tables in {}", a.out.display())).runtime();
    }
    if failed > 0 {
        log::warn!("{failed} of {} cells failed", report.cells.len());
    }
    log::info!("wrote {} files to {}", written.len() + 1, a.out.display());
    Ok(())
}
