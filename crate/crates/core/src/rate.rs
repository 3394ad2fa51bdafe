//! Log-linear convergence-rate fits over trace windows.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::solver::{Trace, TraceRow};

/// Which gap column to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapColumn {
    #[default]
    Objective,
    Bregman,
}

impl GapColumn {
    pub fn get(&self, row: &TraceRow) -> Option<f64> {
        match self {
            GapColumn::Objective => row.objective_gap,
            GapColumn::Bregman => row.bregman_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Change of `log10(gap)` per epoch.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Window actually used.
    pub from: u64,
    pub to: u64,
    pub points: usize,
    /// True when nonpositive or missing gaps cut the window short.
    pub shrunk: bool,
}

/// Least-squares fit of `log10(gap)` against epoch over `from..=to`.
///
/// The window ends before the first row whose gap is missing or
/// nonpositive; at least two points must remain.
pub fn fit_rate(trace: &Trace, from: u64, to: u64, column: GapColumn) -> Result<RateFit> {
    if from > to {
        return Err(Error::Config("empty epoch window".into()));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut shrunk = false;
    let mut last = from;
    for row in trace.rows.iter().filter(|r| r.epoch >= from && r.epoch <= to) {
        match column.get(row) {
            Some(g) if g > 0.0 && g.is_finite() => {
                pts.push((row.epoch as f64, libm::log10(g)));
                last = row.epoch;
            }
            _ => {
                shrunk = true;
                break;
            }
        }
    }
    if pts.len() < 2 {
        return Err(Error::Precondition(alloc::format!(
            "need two positive gaps in epochs {from}..={to}, found {}",
            pts.len()
        )));
    }
    let (slope, intercept, r_squared) = ols(&pts);
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        from: pts[0].0 as u64,
        to: last,
        points: pts.len(),
        shrunk,
    })
}

/// `(slope, intercept, R²)`; a perfect fit of constant data has R² = 1.
pub fn ols(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, r_squared)
}
