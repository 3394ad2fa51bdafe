//! TOML experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use compadmm_core::problems::{PolicyEvalSpec, PortfolioSpec, QuadraticSpec};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Global seed; per-run seeds are derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub output: OutputConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub runs: Vec<RunConfig>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemConfig {
    Portfolio {
        n_assets: usize,
        n_slots: usize,
        #[serde(default = "two")]
        cov: f64,
        #[serde(default)]
        mu_r: f64,
        #[serde(default)]
        seed: u64,
    },
    Policy {
        n_states: usize,
        dim: usize,
        gamma: f64,
        #[serde(default)]
        mu_r: f64,
        #[serde(default)]
        seed: u64,
    },
    Quadratic {
        q: usize,
        p: usize,
        condition: f64,
        #[serde(default = "tenth")]
        mu_r: f64,
        rank: Option<usize>,
        #[serde(default = "unit")]
        offset_scale: f64,
        #[serde(default = "unit")]
        curvature: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemConfig::Portfolio { .. } => "portfolio",
            ProblemConfig::Policy { .. } => "policy",
            ProblemConfig::Quadratic { .. } => "quadratic",
        }
    }

    pub fn portfolio_spec(&self) -> Option<PortfolioSpec> {
        match *self {
            ProblemConfig::Portfolio {
                n_assets,
                n_slots,
                cov,
                mu_r,
                seed,
            } => Some(PortfolioSpec {
                n_assets,
                n_slots,
                cov,
                mu_r,
                seed,
            }),
            _ => None,
        }
    }

    pub fn policy_spec(&self) -> Option<PolicyEvalSpec> {
        match *self {
            ProblemConfig::Policy {
                n_states,
                dim,
                gamma,
                mu_r,
                seed,
            } => Some(PolicyEvalSpec {
                n_states,
                dim,
                gamma,
                mu_r,
                seed,
            }),
            _ => None,
        }
    }

    pub fn quadratic_spec(&self) -> Option<QuadraticSpec> {
        match *self {
            ProblemConfig::Quadratic {
                q,
                p,
                condition,
                mu_r,
                rank,
                offset_scale,
                curvature,
                seed,
            } => Some(QuadraticSpec {
                q,
                p,
                condition,
                mu_r,
                rank,
                offset_scale,
                curvature,
                seed,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum Algorithm {
    #[serde(rename = "com-svr-admm")]
    ComSvrAdmm,
    #[serde(rename = "com-svr-admm-smooth")]
    ComSvrAdmmSmooth,
    #[serde(rename = "com-svr-admm-nonsmooth")]
    ComSvrAdmmNonsmooth,
    #[serde(rename = "comp-svrg")]
    CompSvrg,
    #[serde(rename = "sgd-const")]
    SgdConst,
    #[serde(rename = "sgd-invsqrt")]
    SgdInvSqrt,
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::ComSvrAdmm => "com-svr-admm",
            Algorithm::ComSvrAdmmSmooth => "com-svr-admm-smooth",
            Algorithm::ComSvrAdmmNonsmooth => "com-svr-admm-nonsmooth",
            Algorithm::CompSvrg => "comp-svrg",
            Algorithm::SgdConst => "sgd-const",
            Algorithm::SgdInvSqrt => "sgd-invsqrt",
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self, Algorithm::CompSvrg | Algorithm::SgdConst | Algorithm::SgdInvSqrt)
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub id: String,
    pub algo: Algorithm,
    /// Epochs (ADMM, comp-SVRG) or steps (SGD).
    #[serde(default = "thirty")]
    pub epochs: usize,
    #[serde(default = "ten", rename = "K")]
    pub k: usize,
    #[serde(default = "one", rename = "N")]
    pub n: usize,
    /// Absolute stepsize; overrides `eta_scale`.
    pub eta: Option<f64>,
    /// Stepsize as a multiple of `1/L_F`; also the `c` of `c/√t`.
    #[serde(default = "unit")]
    pub eta_scale: f64,
    #[serde(default = "unit")]
    pub rho: f64,
    /// Per-run seed; derived from the global seed when absent.
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub record_every: usize,
    pub stop_tolerance: Option<f64>,
    /// Overrides the generator's smoothness constant.
    pub l_f: Option<f64>,
}

fn one() -> usize {
    1
}
fn ten() -> usize {
    10
}
fn thirty() -> usize {
    30
}
fn unit() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn tenth() -> f64 {
    0.1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn find_line(src: &str, needle: &str) -> Option<usize> {
    src.find(needle).map(|off| line_of(src, off))
}

impl ExperimentConfig {
    /// Parses and validates; `origin` labels error messages.
    pub fn parse(src: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| BenchError::Parse {
            path: origin.to_string(),
            line: e.span().map(|s| line_of(src, s.start)).unwrap_or(1),
            msg: e.message().to_string(),
        })?;
        let err = |line: usize, msg: String| BenchError::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        if cfg.runs.is_empty() {
            return Err(err(line_of(src, src.len()), "no [[runs]] entries".into()));
        }
        if cfg.repetitions == 0 {
            return Err(err(find_line(src, "repetitions").unwrap_or(1), "repetitions must be >= 1".into()));
        }
        let mut seen = HashSet::new();
        let mut from = 0;
        for run in &cfg.runs {
            let at = src[from..].find("[[runs]]").map(|o| o + from).unwrap_or(from);
            from = at + 1;
            let line = line_of(src, at);
            if !seen.insert(run.id.as_str()) {
                return Err(err(line, format!("duplicate run id {:?}", run.id)));
            }
            if run.id.is_empty() || run.id.contains(['/', '\\']) {
                return Err(err(line, format!("run id {:?} is not a valid file stem", run.id)));
            }
            if run.k == 0 || run.n == 0 || run.record_every == 0 {
                return Err(err(line, "K, N and record_every must be >= 1".into()));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::parse(&src, &path.display().to_string())
    }

    /// Seed for repetition `rep` of run `index`.
    pub fn run_seed(&self, index: usize, rep: usize) -> u64 {
        let base = self.runs[index].seed.unwrap_or(self.seed ^ splitmix64(index as u64));
        if rep == 0 {
            base
        } else {
            base ^ splitmix64((rep as u64) << 32)
        }
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
