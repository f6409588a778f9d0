//! Closed-form success probability and average fidelity of the windowed
//! homodyne postselection.
//!
//! Every branch is modelled as a pure squeezed state with the effective
//! squeeze factor `r′` of the lossy probe, and the `±2θ` rotation of the
//! squeeze axis is neglected. Under those approximations the in-window
//! mass of each branch is a sum of error functions of
//! `b_s = √2 (p_c + s·η·d) e^{r′}`, `s ∈ {−1, 0, +1}`.
//!
//! The exponent in `b_s` is identified with `r′`; with the quadrature
//! convention of [`crate::gaussian`] this is exactly the Gaussian window
//! mass for variance `e^{-2r′}/4`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::link::LinkParams;
use crate::special::erf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFigures {
    pub p_s: f64,
    pub fidelity: f64,
    /// `(b₋₁, b₀, b₊₁)`.
    pub b: [f64; 3],
}

pub fn b_coefficient(s: i8, p_c: f64, eta: f64, d: f64, r_prime: f64) -> Result<f64> {
    if !(-1..=1).contains(&s) {
        return Err(invalid("s", s as f64, "branch index must be -1, 0 or +1"));
    }
    Ok(std::f64::consts::SQRT_2 * (p_c + s as f64 * eta * d) * r_prime.exp())
}

/// `(b₋₁, b₀, b₊₁)` for a validated parameter set.
pub fn b_coefficients(params: &LinkParams) -> Result<[f64; 3]> {
    let r_prime = params.r_prime()?;
    let (eta, d) = (params.eta(), params.d());
    Ok([
        b_coefficient(-1, params.p_c, eta, d, r_prime)?,
        b_coefficient(0, params.p_c, eta, d, r_prime)?,
        b_coefficient(1, params.p_c, eta, d, r_prime)?,
    ])
}

fn erfs(params: &LinkParams) -> Result<[f64; 3]> {
    Ok(b_coefficients(params)?.map(erf))
}

/// `P_s = erf(b₀)/2 + erf(b₊₁)/4 + erf(b₋₁)/4`.
pub fn success_probability(params: &LinkParams) -> Result<f64> {
    let [em, e0, ep] = erfs(params)?;
    Ok(0.5 * e0 + 0.25 * ep + 0.25 * em)
}

/// `F = erf(b₀)(1+ζ) / [2 erf(b₀) + erf(b₊₁) + erf(b₋₁)]`.
pub fn average_fidelity(params: &LinkParams) -> Result<f64> {
    let [em, e0, ep] = erfs(params)?;
    let denom = 2.0 * e0 + ep + em;
    if params.p_c == 0.0 || denom <= 0.0 {
        return Err(Error::IndeterminateFidelity);
    }
    Ok(e0 * (1.0 + params.zeta) / denom)
}

/// `lim_{p_c→0⁺} F = (1+ζ) / (2 + 2 exp(−2 (η d e^{r′})²))`. Ignores `params.p_c`.
pub fn fidelity_zero_window_limit(params: &LinkParams) -> Result<f64> {
    let r_prime = params.r_prime()?;
    let shift = params.eta() * params.d() * r_prime.exp();
    Ok((1.0 + params.zeta) / (2.0 + 2.0 * (-2.0 * shift * shift).exp()))
}

pub fn link_figures(params: &LinkParams) -> Result<LinkFigures> {
    let b = b_coefficients(params)?;
    Ok(LinkFigures {
        p_s: success_probability(params)?,
        fidelity: average_fidelity(params)?,
        b,
    })
}
