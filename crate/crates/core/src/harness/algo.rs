use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cbs::ContextError;
use crate::dpecbs::{solve_dp, DistributionStrategy};
use crate::ecbs::{solve_ecbs, SolveOutcome, SolveParams};
use crate::pbecbs::{solve_pb, PbParams};
use crate::scenario::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ecbs,
    DpEcbs,
    PbEcbs,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ecbs => "ecbs",
            Algorithm::DpEcbs => "dp-ecbs",
            Algorithm::PbEcbs => "pb-ecbs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ecbs" => Ok(Algorithm::Ecbs),
            "dp-ecbs" => Ok(Algorithm::DpEcbs),
            "pb-ecbs" => Ok(Algorithm::PbEcbs),
            _ => Err(format!(
                "unknown algorithm {s:?} (expected ecbs, dp-ecbs or pb-ecbs)"
            )),
        }
    }
}

impl FromStr for DistributionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(DistributionStrategy::Random),
            "deterministic" => Ok(DistributionStrategy::Deterministic),
            _ => Err(format!(
                "unknown strategy {s:?} (expected random or deterministic)"
            )),
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// Which solver to run and its algorithm-specific knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    pub algo: Algorithm,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub strategy: DistributionStrategy,
    /// Defaults to the worker count.
    #[serde(default)]
    pub alpha: Option<usize>,
    #[serde(default)]
    pub root_only: bool,
    #[serde(default = "yes")]
    pub bypass: bool,
}

impl AlgoConfig {
    pub fn new(algo: Algorithm) -> Self {
        Self {
            algo,
            workers: 1,
            strategy: DistributionStrategy::default(),
            alpha: None,
            root_only: false,
            bypass: true,
        }
    }

    pub fn params(&self, w: f64, timeout: Duration, seed: u64) -> SolveParams {
        SolveParams {
            w,
            timeout,
            bypass: self.bypass,
            seed,
        }
    }

    pub fn effective_alpha(&self) -> usize {
        self.alpha.unwrap_or(self.workers).max(1)
    }

    /// Strategy, reported only where it matters.
    pub fn strategy_label(&self) -> Option<DistributionStrategy> {
        (self.algo == Algorithm::DpEcbs).then_some(self.strategy)
    }

    pub fn alpha_label(&self) -> Option<usize> {
        (self.algo == Algorithm::PbEcbs).then(|| self.effective_alpha())
    }

    pub fn run(
        &self,
        instance: &Instance,
        params: &SolveParams,
    ) -> Result<SolveOutcome, ContextError> {
        match self.algo {
            Algorithm::Ecbs => solve_ecbs(instance, params),
            Algorithm::DpEcbs => solve_dp(instance, params, self.workers.max(1), self.strategy),
            Algorithm::PbEcbs => {
                let mut pb = PbParams::new(params.clone(), self.workers);
                pb.alpha = self.effective_alpha();
                pb.root_only = self.root_only;
                solve_pb(instance, &pb)
            }
        }
    }
}
