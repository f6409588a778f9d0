//! One repeater link: probe preparation, dispersive kicks at both stations,
//! fiber loss, the compensating phase shift, and the postselected qubit pair.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{make_squeezed, GaussianState, MAX_SQUEEZE};
use crate::special::erf;

/// Physical knobs of a single link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Real probe amplitude α.
    pub alpha: f64,
    /// Squeeze factor at the source.
    pub r: f64,
    /// Dispersive phase per station, radians.
    pub theta: f64,
    /// Fiber power transmittance η².
    pub eta_sq: f64,
    /// Coherence factor ζ on the |01⟩⟨10| off-diagonals.
    pub zeta: f64,
    /// Homodyne half-window in p-quadrature units.
    pub p_c: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl LinkParams {
    /// α = 150, r = 1.61, θ = 0.00867 rad, η² = 2/3 (10 km), ζ = 0.995, p_c = 0.3.
    pub const fn baseline() -> Self {
        LinkParams {
            alpha: 150.0,
            r: 1.61,
            theta: 0.00867,
            eta_sq: 2.0 / 3.0,
            zeta: 0.995,
            p_c: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, v, "must be finite"))
            }
        };
        finite("alpha", self.alpha)?;
        finite("r", self.r)?;
        finite("theta", self.theta)?;
        finite("eta_sq", self.eta_sq)?;
        finite("zeta", self.zeta)?;
        finite("p_c", self.p_c)?;
        if self.alpha <= 0.0 {
            return Err(invalid("alpha", self.alpha, "amplitude must be positive"));
        }
        if !(0.0..=MAX_SQUEEZE).contains(&self.r) {
            return Err(invalid("r", self.r, "squeeze factor must lie in [0, 10]"));
        }
        if !(self.theta >= 0.0 && self.theta < FRAC_PI_4) {
            return Err(invalid("theta", self.theta, "phase shift must lie in [0, π/4)"));
        }
        if !(self.eta_sq > 0.0 && self.eta_sq <= 1.0) {
            return Err(invalid("eta_sq", self.eta_sq, "transmittance must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(invalid("zeta", self.zeta, "coherence factor must lie in [0, 1]"));
        }
        if self.p_c < 0.0 {
            return Err(invalid("p_c", self.p_c, "selection window must be non-negative"));
        }
        Ok(())
    }

    /// Amplitude transmission η.
    pub fn eta(&self) -> f64 {
        self.eta_sq.sqrt()
    }

    /// Displacement `d = α·sin θ`.
    pub fn d(&self) -> f64 {
        self.alpha * self.theta.sin()
    }

    /// Effective squeeze factor r′ of the probe after the fiber.
    pub fn r_prime(&self) -> Result<f64> {
        self.validate()?;
        let probe = make_squeezed(Complex64::new(self.alpha, 0.0), self.r, FRAC_PI_2)?;
        probe.to_gaussian().lossy(self.eta())?.effective_squeeze_param()
    }
}

/// State of one qubit in the computational basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitBit {
    Zero,
    One,
}

impl QubitBit {
    pub fn flipped(self) -> Self {
        match self {
            QubitBit::Zero => QubitBit::One,
            QubitBit::One => QubitBit::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchLabel {
    /// |00⟩, probe rotated by +θ.
    B00,
    /// |01⟩ or |10⟩, probe unrotated.
    BEN,
    /// |11⟩, probe rotated by −θ.
    B11,
}

impl BranchLabel {
    pub const ALL: [BranchLabel; 3] = [BranchLabel::B00, BranchLabel::BEN, BranchLabel::B11];

    pub fn weight(self) -> f64 {
        match self {
            BranchLabel::B00 | BranchLabel::B11 => 0.25,
            BranchLabel::BEN => 0.5,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BranchLabel::B00 => "00",
            BranchLabel::BEN => "en",
            BranchLabel::B11 => "11",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub label: BranchLabel,
    pub weight: f64,
    pub probe: GaussianState,
}

/// Qubit-conditional phase: `|1⟩` rotates the probe by `−θ`, `|0⟩` leaves it.
pub fn dispersive_kick(probe: &GaussianState, bit: QubitBit, theta: f64) -> GaussianState {
    match bit {
        QubitBit::Zero => *probe,
        QubitBit::One => probe.phase_shifted(-theta),
    }
}

/// Probe state at the homodyne detector when station A holds `a` and
/// station B holds `b`.
pub fn branch_probe(params: &LinkParams, a: QubitBit, b: QubitBit) -> Result<GaussianState> {
    params.validate()?;
    let source = make_squeezed(Complex64::new(params.alpha, 0.0), params.r, FRAC_PI_2)?.to_gaussian();
    let after_a = dispersive_kick(&source, a, params.theta);
    let at_b = after_a.lossy(params.eta())?;
    let after_b = dispersive_kick(&at_b, b, params.theta);
    Ok(after_b.phase_shifted(params.theta))
}

/// The three distinguishable probe branches with weights 1/4, 1/2, 1/4.
pub fn build_link_branches(params: &LinkParams) -> Result<[Branch; 3]> {
    use QubitBit::{One, Zero};
    let probes = [
        branch_probe(params, Zero, Zero)?,
        branch_probe(params, Zero, One)?,
        branch_probe(params, One, One)?,
    ];
    Ok(std::array::from_fn(|i| {
        let label = BranchLabel::ALL[i];
        Branch {
            label,
            weight: label.weight(),
            probe: probes[i],
        }
    }))
}

/// Probability mass of `N(mean, var)` inside `[−p_c, p_c]`.
pub fn window_probability(mean: f64, var: f64, p_c: f64) -> f64 {
    let scale = (2.0 * var).sqrt();
    0.5 * (erf((p_c - mean) / scale) + erf((p_c + mean) / scale))
}

/// Two-qubit density matrix over `{|00⟩, |01⟩, |10⟩, |11⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitPairDensity(Matrix4<Complex64>);

impl QubitPairDensity {
    const TOL: f64 = 1e-12;

    /// Checks hermiticity, unit trace and positivity to 1e-12.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let rho = QubitPairDensity(m);
        if !rho.is_hermitian(Self::TOL) {
            return Err(Error::NonPhysicalState("density matrix is not Hermitian".into()));
        }
        if (rho.trace() - 1.0).abs() > Self::TOL {
            return Err(Error::NonPhysicalState(format!("trace {} ≠ 1", rho.trace())));
        }
        if rho.eigenvalues().iter().any(|&e| e < -Self::TOL) {
            return Err(Error::NonPhysicalState("density matrix has a negative eigenvalue".into()));
        }
        Ok(rho)
    }

    /// `|k⟩⟨k|` for basis index `k` (0 = |00⟩, 3 = |11⟩).
    pub fn basis_projector(k: usize) -> Self {
        let mut m = Matrix4::zeros();
        m[(k, k)] = Complex64::new(1.0, 0.0);
        QubitPairDensity(m)
    }

    pub fn psi_plus() -> Self {
        let h = Complex64::new(0.5, 0.0);
        let mut m = Matrix4::zeros();
        m[(1, 1)] = h;
        m[(1, 2)] = h;
        m[(2, 1)] = h;
        m[(2, 2)] = h;
        QubitPairDensity(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.0 - self.0.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = self.0.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    /// Exchanges the roles of |0⟩ and |1⟩ on both qubits.
    pub fn bit_flipped(&self) -> Self {
        QubitPairDensity(Matrix4::from_fn(|i, j| self.0[(3 - i, 3 - j)]))
    }

    /// ⟨ψ⁺|ρ|ψ⁺⟩ with `|ψ⁺⟩ = (|01⟩ + |10⟩)/√2`.
    pub fn fidelity_to_psi_plus(&self) -> f64 {
        let m = &self.0;
        let overlap = (m[(1, 1)] + m[(1, 2)] + m[(2, 1)] + m[(2, 2)]) * 0.5;
        overlap.re.clamp(0.0, 1.0)
    }

    fn weighted_sum(parts: &[(f64, &QubitPairDensity)]) -> Matrix4<Complex64> {
        parts
            .iter()
            .fold(Matrix4::zeros(), |acc, (w, rho)| acc + rho.0 * Complex64::new(*w, 0.0))
    }
}

/// `(1/2)(|01⟩⟨01| + ζ|01⟩⟨10| + ζ|10⟩⟨01| + |10⟩⟨10|)`.
pub fn rho_en(zeta: f64) -> Result<QubitPairDensity> {
    if !zeta.is_finite() || zeta.abs() > 1.0 {
        return Err(Error::NonPhysicalState(format!(
            "|ζ| = {} > 1 gives a non-positive density matrix",
            zeta.abs()
        )));
    }
    let half = Complex64::new(0.5, 0.0);
    let coh = Complex64::new(0.5 * zeta, 0.0);
    let mut m = Matrix4::zeros();
    m[(1, 1)] = half;
    m[(2, 2)] = half;
    m[(1, 2)] = coh;
    m[(2, 1)] = coh;
    Ok(QubitPairDensity(m))
}

pub fn fidelity_to_psi_plus(rho: &QubitPairDensity) -> f64 {
    rho.fidelity_to_psi_plus()
}

/// In-window probability of each branch, from the exact branch covariances.
pub fn branch_acceptance(params: &LinkParams) -> Result<[f64; 3]> {
    let branches = build_link_branches(params)?;
    Ok(branches.map(|b| {
        let (mean, var) = b.probe.p_marginal();
        window_probability(mean, var, params.p_c)
    }))
}

/// Conditional two-qubit state after a successful homodyne window, and the
/// success probability `P_s`.
pub fn postselected_state(params: &LinkParams) -> Result<(QubitPairDensity, f64)> {
    let [g00, gen, g11] = branch_acceptance(params)?;
    let w00 = BranchLabel::B00.weight() * g00;
    let wen = BranchLabel::BEN.weight() * gen;
    let w11 = BranchLabel::B11.weight() * g11;
    let p_s = w00 + wen + w11;
    if p_s <= 0.0 {
        return Err(Error::EmptyPostselection);
    }
    let en = rho_en(params.zeta)?;
    let m = QubitPairDensity::weighted_sum(&[
        (w00 / p_s, &QubitPairDensity::basis_projector(0)),
        (wen / p_s, &en),
        (w11 / p_s, &QubitPairDensity::basis_projector(3)),
    ]);
    Ok((QubitPairDensity(m), p_s))
}
