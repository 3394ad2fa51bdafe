use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Which loop and stepsize rule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Constant stepsize η, biased mini-batch estimator, dual reset per epoch.
    StronglyConvex,
    /// Decaying schedule tied to `L_F`, unbiased estimator.
    ConvexSmooth,
    /// Decaying schedule that vanishes, unbiased estimator.
    ConvexNonsmooth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Inner iterations per epoch.
    pub k: usize,
    /// Epochs (an upper bound when `stop_tolerance` is set).
    pub s: usize,
    /// Mini-batch size for the inner-value estimate.
    pub n: usize,
    /// Constant stepsize of the strongly convex loop.
    pub eta: f64,
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    pub mode: Mode,
    /// Smoothness constant; required by [`Mode::ConvexSmooth`].
    pub l_f: Option<f64>,
    pub seed: u64,
    /// Stop once the objective gap drops to this value (needs a reference).
    pub stop_tolerance: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub omega0: Option<Vec<f64>>,
    pub lambda0: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            k: 10,
            s: 30,
            n: 1,
            eta: 0.1,
            rho: 1.0,
            mode,
            l_f: None,
            seed: 0,
            stop_tolerance: None,
            x0: None,
            omega0: None,
            lambda0: None,
        }
    }

    /// Checks the invariants; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.k == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be > 0, got {}", self.rho)));
        }
        if let Some(l) = self.l_f {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("L_F must be > 0, got {l}")));
            }
        }
        match self.mode {
            Mode::StronglyConvex => {
                if !(self.eta > 0.0 && self.eta.is_finite()) {
                    return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
                }
                match self.l_f {
                    Some(l) if self.eta > 1.0 / l => {
                        return Err(Error::Config(format!(
                            "eta = {} exceeds 1/L_F = {}",
                            self.eta,
                            1.0 / l
                        )))
                    }
                    Some(_) => {}
                    None => warnings.push(String::from(
                        "L_F unknown: cannot verify eta <= 1/L_F",
                    )),
                }
            }
            Mode::ConvexSmooth => {
                if self.l_f.is_none() {
                    return Err(Error::Config("smooth schedule requires L_F".into()));
                }
            }
            Mode::ConvexNonsmooth => {}
        }
        if let Some(t) = self.stop_tolerance {
            if t.is_nan() || t < 0.0 {
                return Err(Error::Config(format!("stop tolerance must be >= 0, got {t}")));
            }
        }
        Ok(warnings)
    }
}
