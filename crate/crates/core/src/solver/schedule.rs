//! Stepsize schedule of the general convex loop.
//!
//! The proximal term `‖x − xᵏ‖²_{G_k} / (2η_s)` with `G_k = c_k·I` acts as a
//! plain proximal step of length `η_{s,k} = η_s / c_k`. `c_k` decreases
//! linearly from `c₀` at `k = 0` to `c_{K−1}` and stays there at `k = K`:
//!
//! | mode      | η_s          | c₀     | c_{K−1} = c_K |
//! |-----------|--------------|--------|---------------|
//! | smooth    | 1/((s+1)L_F) | 1/s    | 1/(s+1)       |
//! | nonsmooth | 1/(s+1)      | 1/√s   | 1/√(s+1)      |

use alloc::format;

use super::config::Mode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValue {
    pub eta_s: f64,
    /// Scalar of `G_k = c_k·I`.
    pub c: f64,
    /// `η_s / c_k`
    pub eta_eff: f64,
}

/// Schedule at outer epoch `s ≥ 1` and inner step `0 ≤ k ≤ K`.
///
/// Endpoint stepsizes are returned in their closed forms
/// (`s/((s+1)L_F)`, `1/L_F`, `√s/(s+1)`, `1/√(s+1)`) so they hold exactly.
/// With `K = 1` the single step uses `c₀`, which is the carried-over
/// `G_K` of the previous epoch.
pub fn schedule(mode: Mode, s: usize, k: usize, big_k: usize, l_f: Option<f64>) -> Result<ScheduleValue> {
    if s == 0 {
        return Err(Error::Precondition("epoch index s starts at 1".into()));
    }
    if big_k == 0 || k > big_k {
        return Err(Error::Precondition(format!(
            "inner index k = {k} outside 0..={big_k}"
        )));
    }
    let sf = s as f64;
    let last = big_k - 1;
    match mode {
        Mode::StronglyConvex => Err(Error::Config(
            "the strongly convex loop uses a constant stepsize".into(),
        )),
        Mode::ConvexSmooth => {
            let l = match l_f {
                Some(l) if l > 0.0 && l.is_finite() => l,
                _ => return Err(Error::Config("smooth schedule requires L_F > 0".into())),
            };
            let eta_s = 1.0 / ((sf + 1.0) * l);
            let c0 = 1.0 / sf;
            let c1 = 1.0 / (sf + 1.0);
            Ok(if k == 0 {
                ScheduleValue {
                    eta_s,
                    c: c0,
                    eta_eff: sf / ((sf + 1.0) * l),
                }
            } else if k >= last {
                ScheduleValue {
                    eta_s,
                    c: c1,
                    eta_eff: 1.0 / l,
                }
            } else {
                let c = interpolate(c0, c1, k, last);
                ScheduleValue {
                    eta_s,
                    c,
                    eta_eff: eta_s / c,
                }
            })
        }
        Mode::ConvexNonsmooth => {
            let eta_s = 1.0 / (sf + 1.0);
            let c0 = 1.0 / libm::sqrt(sf);
            let c1 = 1.0 / libm::sqrt(sf + 1.0);
            Ok(if k == 0 {
                ScheduleValue {
                    eta_s,
                    c: c0,
                    eta_eff: libm::sqrt(sf) / (sf + 1.0),
                }
            } else if k >= last {
                ScheduleValue {
                    eta_s,
                    c: c1,
                    eta_eff: 1.0 / libm::sqrt(sf + 1.0),
                }
            } else {
                let c = interpolate(c0, c1, k, last);
                ScheduleValue {
                    eta_s,
                    c,
                    eta_eff: eta_s / c,
                }
            })
        }
    }
}

fn interpolate(c0: f64, c1: f64, k: usize, last: usize) -> f64 {
    let t = k as f64 / last as f64;
    c0 + (c1 - c0) * t
}
