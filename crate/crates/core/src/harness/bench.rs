use std::collections::BTreeMap;
use std::io;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::algo::{AlgoConfig, Algorithm};
use super::oracle::soc_lower_bound;
use super::validate::validate_solution;
use crate::dpecbs::DistributionStrategy;
use crate::ecbs::{SolveOutcome, SolveStatus};
use crate::grid::GridMap;
use crate::scenario::{
    default_corner_region, gen_corner_rearrangement, gen_random_obstacle_map, gen_uniform_random,
    Instance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Solved,
    Timeout,
    Exhausted,
    /// The cell could not be set up or the solver rejected the instance.
    Error,
}

impl From<SolveStatus> for RecordStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Solved => RecordStatus::Solved,
            SolveStatus::Timeout => RecordStatus::Timeout,
            SolveStatus::Exhausted => RecordStatus::Exhausted,
        }
    }
}

/// One solver run. Also the schema of `solve --stats` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub map: String,
    pub agents: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub w: f64,
    pub workers: usize,
    pub strategy: Option<DistributionStrategy>,
    pub alpha: Option<usize>,
    pub bypass: bool,
    pub status: RecordStatus,
    /// Validator verdict on solved rows.
    pub valid: Option<bool>,
    /// Seconds; the configured timeout on timeout rows.
    pub wall_time: Option<f64>,
    pub soc: Option<u64>,
    pub soc_lb: Option<u64>,
    /// Sum of single-robot shortest distances.
    pub sum_shortest: Option<u64>,
    /// `soc / sum_shortest` on solved rows.
    pub ratio: Option<f64>,
    pub expansions: u64,
    pub generated: u64,
    pub error: Option<String>,
}

impl BenchRecord {
    fn base(map: &str, agents: usize, seed: u64, cfg: &AlgoConfig, w: f64) -> Self {
        Self {
            map: map.to_string(),
            agents,
            seed,
            algorithm: cfg.algo,
            w,
            workers: cfg.workers,
            strategy: cfg.strategy_label(),
            alpha: cfg.alpha_label(),
            bypass: cfg.bypass,
            status: RecordStatus::Error,
            valid: None,
            wall_time: None,
            soc: None,
            soc_lb: None,
            sum_shortest: None,
            ratio: None,
            expansions: 0,
            generated: 0,
            error: None,
        }
    }

    pub fn error(
        map: &str,
        agents: usize,
        seed: u64,
        cfg: &AlgoConfig,
        w: f64,
        msg: String,
    ) -> Self {
        Self {
            error: Some(msg),
            ..Self::base(map, agents, seed, cfg, w)
        }
    }

    /// Record for a finished run; validates solved outcomes. Timing is left
    /// empty when `omit_timing` is set so that reruns compare byte-equal.
    #[allow(clippy::too_many_arguments)]
    pub fn from_outcome(
        map: &str,
        seed: u64,
        cfg: &AlgoConfig,
        w: f64,
        timeout: Duration,
        instance: &Instance,
        outcome: &SolveOutcome,
        omit_timing: bool,
    ) -> Self {
        let mut r = Self::base(map, instance.num_agents(), seed, cfg, w);
        r.status = outcome.status.into();
        r.soc = outcome.soc;
        r.soc_lb = Some(outcome.soc_lb);
        r.expansions = outcome.expansions;
        r.generated = outcome.generated;
        r.sum_shortest = soc_lower_bound(instance).ok();
        if !omit_timing {
            r.wall_time = Some(match outcome.status {
                SolveStatus::Timeout => timeout.as_secs_f64(),
                _ => outcome.wall_time.as_secs_f64(),
            });
        }
        if let (Some(sol), Some(soc)) = (&outcome.solution, outcome.soc) {
            r.valid = Some(validate_solution(instance, sol).is_ok_and(|rep| rep.ok));
            r.ratio = r
                .sum_shortest
                .map(|d| if d == 0 { 1.0 } else { soc as f64 / d as f64 });
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSource {
    /// A `.map` file; instances are drawn uniformly from its free cells.
    File { path: PathBuf },
    /// A generated map with random obstacles; instances drawn uniformly.
    Random {
        width: u32,
        height: u32,
        density: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Empty square map with starts and goals in the lower-left corner.
    Corner { side: u32, region: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: MapSource,
}

fn default_w() -> f64 {
    2.0
}

fn default_timeout() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub agents: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_w")]
    pub w: f64,
    /// Seconds per run.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub omit_timing: bool,
    #[serde(rename = "map")]
    pub maps: Vec<MapSpec>,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgoConfig>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text)?;
        if cfg.w.is_nan() || cfg.w < 1.0 {
            return Err(BenchError::Invalid(format!(
                "w must be at least 1, got {}",
                cfg.w
            )));
        }
        if !cfg.timeout.is_finite() || cfg.timeout <= 0.0 {
            return Err(BenchError::Invalid(
                "timeout must be positive and finite".into(),
            ));
        }
        if cfg.algorithms.iter().any(|a| a.workers == 0) {
            return Err(BenchError::Invalid("workers must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn num_cells(&self) -> usize {
        self.maps.len() * self.agents.len() * self.seeds.len() * self.algorithms.len()
    }
}

/// Instance source for one map entry; file paths resolve against `base`.
enum Prepared {
    Uniform(Arc<GridMap>),
    Corner { side: u32, region: Option<u32> },
}

fn prepare(spec: &MapSpec, base: &FsPath) -> Result<Prepared, String> {
    match &spec.source {
        MapSource::File { path } => {
            let path = base.join(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            let map = GridMap::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(Prepared::Uniform(Arc::new(map)))
        }
        &MapSource::Random {
            width,
            height,
            density,
            seed,
        } => Ok(Prepared::Uniform(Arc::new(gen_random_obstacle_map(
            width, height, density, seed,
        )))),
        &MapSource::Corner { side, region } => Ok(Prepared::Corner { side, region }),
    }
}

impl Prepared {
    fn instance(&self, n: usize, seed: u64) -> Result<Instance, String> {
        match self {
            Prepared::Uniform(map) => gen_uniform_random(Arc::clone(map), n, seed),
            &Prepared::Corner { side, region } => {
                let region = region.unwrap_or_else(|| default_corner_region(n, side));
                gen_corner_rearrangement(side, region, n, seed)
            }
        }
        .map_err(|e| e.to_string())
    }
}

/// Runs every (map, agents, seed, algorithm) cell in that nesting order,
/// one at a time so that multi-worker runs are not disturbed. Failures
/// become error rows. `on_record` sees each row as soon as it exists.
pub fn run_bench(
    config: &BenchConfig,
    base: &FsPath,
    mut on_record: impl FnMut(&BenchRecord),
) -> Vec<BenchRecord> {
    let timeout = Duration::from_secs_f64(config.timeout);
    let mut out = Vec::with_capacity(config.num_cells());
    let mut emit = |r: BenchRecord| {
        on_record(&r);
        out.push(r);
    };
    for spec in &config.maps {
        let prepared = prepare(spec, base);
        for &n in &config.agents {
            for &seed in &config.seeds {
                let instance = prepared
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| p.instance(n, seed));
                for cfg in &config.algorithms {
                    let instance = match &instance {
                        Ok(i) => i,
                        Err(e) => {
                            emit(BenchRecord::error(
                                &spec.name,
                                n,
                                seed,
                                cfg,
                                config.w,
                                e.clone(),
                            ));
                            continue;
                        }
                    };
                    let params = cfg.params(config.w, timeout, seed);
                    let record = match cfg.run(instance, &params) {
                        Ok(outcome) => BenchRecord::from_outcome(
                            &spec.name,
                            seed,
                            cfg,
                            config.w,
                            timeout,
                            instance,
                            &outcome,
                            config.omit_timing,
                        ),
                        Err(e) => {
                            BenchRecord::error(&spec.name, n, seed, cfg, config.w, e.to_string())
                        }
                    };
                    emit(record);
                }
            }
        }
    }
    out
}

pub fn write_records<W: io::Write>(w: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(r: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

/// Aggregate over seeds for one (map, agents, algorithm, params) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub map: String,
    pub agents: usize,
    pub algorithm: Algorithm,
    pub w: f64,
    pub workers: usize,
    pub strategy: Option<DistributionStrategy>,
    pub alpha: Option<usize>,
    pub bypass: bool,
    pub runs: usize,
    pub solved: usize,
    pub success_rate: f64,
    /// Over all runs, timeouts counted at the timeout.
    pub mean_wall_time: Option<f64>,
    /// Over solved runs only.
    pub mean_ratio: Option<f64>,
    pub mean_expansions: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<String, Vec<&BenchRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in records {
        let key = format!(
            "{}|{}|{}|{}|{}|{:?}|{:?}|{}",
            r.map, r.agents, r.algorithm, r.w, r.workers, r.strategy, r.alpha, r.bypass
        );
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let first = g[0];
            let solved: Vec<_> = g
                .iter()
                .filter(|r| r.status == RecordStatus::Solved)
                .collect();
            let timed: Vec<f64> = g.iter().filter_map(|r| r.wall_time).collect();
            SummaryRow {
                map: first.map.clone(),
                agents: first.agents,
                algorithm: first.algorithm,
                w: first.w,
                workers: first.workers,
                strategy: first.strategy,
                alpha: first.alpha,
                bypass: first.bypass,
                runs: g.len(),
                solved: solved.len(),
                success_rate: solved.len() as f64 / g.len() as f64,
                mean_wall_time: if timed.len() == g.len() {
                    mean(timed.into_iter())
                } else {
                    None
                },
                mean_ratio: mean(solved.iter().filter_map(|r| r.ratio)),
                mean_expansions: mean(g.iter().map(|r| r.expansions as f64)).unwrap_or(0.0),
            }
        })
        .collect()
}

pub fn write_summary<W: io::Write>(w: W, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
