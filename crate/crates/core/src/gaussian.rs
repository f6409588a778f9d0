//! Single-mode Gaussian states of the probe pulse.
//!
//! Phase-space convention: `x = Re⟨a⟩`, `p = Im⟨a⟩`. The vacuum has
//! covariance `I/4`, and a squeezed quadrature has variance `e^{-2r}/4`.
//! The squeeze phase `phi` is the angle of the squeezed axis, so that
//! `ε = r·e^{2i·phi}`; `phi = π/2` squeezes `p`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Variance of either vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Largest accepted squeeze factor; `e^{2r}` stays far from overflow.
pub const MAX_SQUEEZE: f64 = 10.0;

const PURITY_TOL: f64 = 1e-9;

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, value, "must be finite"))
    }
}

/// Pure squeezed coherent state `|α, ε⟩` with `ε = r·e^{2i·phi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedState {
    alpha: Complex64,
    r: f64,
    phi: f64,
}

impl SqueezedState {
    pub fn new(alpha: Complex64, r: f64, phi: f64) -> Result<Self> {
        check_finite("alpha.re", alpha.re)?;
        check_finite("alpha.im", alpha.im)?;
        check_finite("r", r)?;
        check_finite("phi", phi)?;
        if r < 0.0 {
            return Err(invalid("r", r, "squeeze factor must be non-negative"));
        }
        if r > MAX_SQUEEZE {
            return Err(invalid("r", r, "squeeze factor above supported maximum of 10"));
        }
        Ok(SqueezedState {
            alpha,
            r,
            phi: phi.rem_euclid(TAU),
        })
    }

    pub fn vacuum() -> Self {
        SqueezedState {
            alpha: Complex64::new(0.0, 0.0),
            r: 0.0,
            phi: 0.0,
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Phase-space image: mean `(Re α, Im α)`, covariance squeezed along `phi`.
    pub fn to_gaussian(&self) -> GaussianState {
        let squeezed = Matrix2::new(
            VACUUM_VARIANCE * (-2.0 * self.r).exp(),
            0.0,
            0.0,
            VACUUM_VARIANCE * (2.0 * self.r).exp(),
        );
        let rot = rotation(self.phi);
        let cov = symmetrize(rot * squeezed * rot.transpose());
        GaussianState {
            mean: Vector2::new(self.alpha.re, self.alpha.im),
            cov,
        }
    }

    /// `α → α·e^{iθ}`, `phi → phi + θ` (the squeeze parameter picks up `2θ`).
    pub fn phase_shifted(&self, theta: f64) -> SqueezedState {
        SqueezedState {
            alpha: self.alpha * Complex64::from_polar(1.0, theta),
            r: self.r,
            phi: (self.phi + theta).rem_euclid(TAU),
        }
    }

    /// `⟨n⟩ = |α|² + sinh²r`.
    pub fn mean_photon_number(&self) -> f64 {
        self.alpha.norm_sqr() + self.r.sinh().powi(2)
    }

    /// Photon-number variance
    /// `2 sinh²r cosh²r + |α|²[e^{-2r}cos²(θ−φ) + e^{2r}sin²(θ−φ)]`,
    /// where `theta_alpha` is the phase of α.
    pub fn photon_number_variance(&self, theta_alpha: f64) -> f64 {
        let r = self.r;
        let delta = theta_alpha - self.phi;
        2.0 * (r.sinh() * r.cosh()).powi(2)
            + self.alpha.norm_sqr()
                * ((-2.0 * r).exp() * delta.cos().powi(2) + (2.0 * r).exp() * delta.sin().powi(2))
    }
}

/// Free-function form of [`SqueezedState::new`].
pub fn make_squeezed(alpha: Complex64, r: f64, phi: f64) -> Result<SqueezedState> {
    SqueezedState::new(alpha, r, phi)
}

/// Mean quadrature vector and 2×2 covariance of a (possibly mixed)
/// single-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    mean: Vector2<f64>,
    cov: Matrix2<f64>,
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], off, off, m[(1, 1)])
}

impl GaussianState {
    /// Validates symmetry, positive definiteness and the uncertainty bound
    /// `det(cov) ≥ 1/16`.
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonPhysicalState("non-finite moments".into()));
        }
        let scale = cov.abs().max().max(f64::MIN_POSITIVE);
        if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * scale {
            return Err(Error::NonPhysicalState("covariance is not symmetric".into()));
        }
        let cov = symmetrize(cov);
        if cov[(0, 0)] <= 0.0 || cov.determinant() <= 0.0 {
            return Err(Error::NonPhysicalState(
                "covariance is not positive definite".into(),
            ));
        }
        let bound = VACUUM_VARIANCE * VACUUM_VARIANCE;
        if cov.determinant() < bound * (1.0 - PURITY_TOL) {
            return Err(Error::NonPhysicalState(format!(
                "det(cov) = {} violates the uncertainty bound 1/16",
                cov.determinant()
            )));
        }
        Ok(GaussianState { mean, cov })
    }

    pub fn vacuum() -> Self {
        GaussianState {
            mean: Vector2::zeros(),
            cov: Matrix2::identity() * VACUUM_VARIANCE,
        }
    }

    pub fn mean(&self) -> Vector2<f64> {
        self.mean
    }

    pub fn cov(&self) -> Matrix2<f64> {
        self.cov
    }

    pub fn det(&self) -> f64 {
        self.cov.determinant()
    }

    /// Pure states saturate `det(cov) = 1/16`.
    pub fn is_pure(&self, tol: f64) -> bool {
        (self.det() / (VACUUM_VARIANCE * VACUUM_VARIANCE) - 1.0).abs() <= tol
    }

    /// Rotates the state in phase space by `theta`, i.e. `a → a·e^{iθ}`.
    pub fn phase_shifted(&self, theta: f64) -> GaussianState {
        let rot = rotation(theta);
        GaussianState {
            mean: rot * self.mean,
            cov: symmetrize(rot * self.cov * rot.transpose()),
        }
    }

    /// Pure-loss beamsplitter with amplitude transmission `eta`:
    /// mean scales by `η`, covariance by `η²` plus `(1−η²)` vacuum noise.
    pub fn lossy(&self, eta: f64) -> Result<GaussianState> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid("eta", eta, "transmission must lie in (0, 1]"));
        }
        let t = eta * eta;
        Ok(GaussianState {
            mean: self.mean * eta,
            cov: self.cov * t + Matrix2::identity() * ((1.0 - t) * VACUUM_VARIANCE),
        })
    }

    /// `(p̄, var p)`: the distribution of an ideal homodyne measurement of `p`.
    pub fn p_marginal(&self) -> (f64, f64) {
        (self.mean[1], self.cov[(1, 1)])
    }

    /// Squeeze factor of the pure state whose `p` variance matches this one.
    ///
    /// Only the homodyned quadrature is matched; the `x` variance of a lossy
    /// state is generally not `e^{2r'}/4`.
    pub fn effective_squeeze_param(&self) -> Result<f64> {
        let var_p = self.cov[(1, 1)];
        let ratio = var_p / VACUUM_VARIANCE;
        if ratio > 1.0 + 1e-12 {
            return Err(Error::AntiSqueezedQuadrature { variance: var_p });
        }
        Ok((-0.5 * ratio.ln()).max(0.0))
    }

    /// Normalized Wigner function (bivariate Gaussian density).
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let det = self.det();
        let dx = x - self.mean[0];
        let dp = p - self.mean[1];
        // δᵀ cov⁻¹ δ with the 2×2 inverse written out
        let quad =
            (self.cov[(1, 1)] * dx * dx - 2.0 * self.cov[(0, 1)] * dx * dp + self.cov[(0, 0)] * dp * dp)
                / det;
        (-0.5 * quad).exp() / (2.0 * PI * det.sqrt())
    }

    /// `⟨n⟩ = tr V − 1/2 + |mean|²` in this convention.
    pub fn mean_photon_number(&self) -> f64 {
        self.cov.trace() - 0.5 + self.mean.norm_squared()
    }

    /// `Var n = 2 tr V² − 1/4 + 4 meanᵀ V mean` in this convention.
    pub fn photon_number_variance(&self) -> f64 {
        2.0 * (self.cov * self.cov).trace() - 0.25 + 4.0 * (self.mean.transpose() * self.cov * self.mean)[0]
    }
}

impl From<SqueezedState> for GaussianState {
    fn from(s: SqueezedState) -> Self {
        s.to_gaussian()
    }
}

pub fn to_gaussian(s: &SqueezedState) -> GaussianState {
    s.to_gaussian()
}

pub fn apply_phase_shift(g: &GaussianState, theta: f64) -> GaussianState {
    g.phase_shifted(theta)
}

pub fn apply_loss(g: &GaussianState, eta: f64) -> Result<GaussianState> {
    g.lossy(eta)
}

pub fn effective_squeeze_param(g: &GaussianState) -> Result<f64> {
    g.effective_squeeze_param()
}

pub fn wigner_value(g: &GaussianState, x: f64, p: f64) -> f64 {
    g.wigner(x, p)
}

pub fn homodyne_p_marginal(g: &GaussianState) -> (f64, f64) {
    g.p_marginal()
}

pub fn mean_photon_number(s: &SqueezedState) -> f64 {
    s.mean_photon_number()
}

pub fn photon_number_variance(s: &SqueezedState, theta_alpha: f64) -> f64 {
    s.photon_number_variance(theta_alpha)
}
