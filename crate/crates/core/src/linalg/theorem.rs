//! Per-epoch contraction constants for the strongly convex solver.
//!
//! `γ₁ E[G(ũˢ)] ≤ γ₂ G(ũˢ⁻¹)`; the run contracts linearly in expectation
//! whenever both constants are positive and `γ₂/γ₁ < 1`.

use alloc::format;

use crate::error::{Error, Result};

/// Inputs to [`theorem1_constants`]. Every field must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Params {
    pub eta: f64,
    pub k: usize,
    pub n: usize,
    pub rho: f64,
    pub mu_f: f64,
    pub l_big_f: f64,
    pub l_small_f: f64,
    pub c_g: f64,
    pub l_g: f64,
    /// Diameter of the feasible set for x (user supplied).
    pub diameter: f64,
    /// `‖AᵀA‖`
    pub ata_norm: f64,
    /// `σ_min(AAᵀ)`
    pub aat_sigma_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Constants {
    pub gamma1: f64,
    pub gamma2: f64,
    /// `γ₂ / γ₁`; infinite when `γ₁ ≤ 0`.
    pub gamma: f64,
    /// `γ₁, γ₂ > 0` and `γ < 1`.
    pub linear_rate: bool,
}

pub fn theorem1_constants(p: &Theorem1Params) -> Result<Theorem1Constants> {
    let scalars = [
        ("eta", p.eta),
        ("rho", p.rho),
        ("mu_F", p.mu_f),
        ("L_F", p.l_big_f),
        ("L_f", p.l_small_f),
        ("C_G", p.c_g),
        ("L_G", p.l_g),
        ("D", p.diameter),
        ("||A^T A||", p.ata_norm),
        ("sigma_min(A A^T)", p.aat_sigma_min),
    ];
    for (name, v) in scalars {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
        }
    }
    if p.k == 0 || p.n == 0 {
        return Err(Error::Precondition("K and N must be positive".into()));
    }
    if p.eta > 1.0 / p.l_big_f {
        return Err(Error::Precondition(format!(
            "eta = {} exceeds 1/L_F = {}",
            p.eta,
            1.0 / p.l_big_f
        )));
    }

    let eta = p.eta;
    let k = p.k as f64;
    let sigma_n = libm::sqrt(1.0 / p.n as f64);
    let batch_term = 32.0 * eta * eta * libm::pow(p.c_g, 4.0) * p.l_small_f * p.l_small_f
        / (p.mu_f * p.n as f64);
    let smooth_term = (48.0 * eta * eta * p.l_big_f * p.l_big_f
        + 8.0 * eta * p.diameter * p.c_g * p.l_small_f * p.l_g * sigma_n)
        / p.mu_f;

    let gamma1 = (2.0 * eta - batch_term - smooth_term) * k;
    let gamma2 = (k + 1.0) * (batch_term + smooth_term)
        + 2.0 / p.mu_f
        + 2.0 * eta * p.rho * p.ata_norm / p.mu_f
        + 2.0 * p.l_big_f * eta / (p.rho * p.aat_sigma_min);
    let gamma = if gamma1 > 0.0 {
        gamma2 / gamma1
    } else {
        f64::INFINITY
    };
    Ok(Theorem1Constants {
        gamma1,
        gamma2,
        gamma,
        linear_rate: gamma1 > 0.0 && gamma2 > 0.0 && gamma < 1.0,
    })
}
