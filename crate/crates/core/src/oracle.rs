//! Independent checks on the closed forms.
//!
//! Two routes, neither of which touches the `erf` kernel:
//!
//! * sampling: seeded draws of the branch label and the homodyne outcome,
//!   with the acceptance fraction and the branch mix among accepted shots
//!   as estimators;
//! * quadrature: adaptive Gauss–Kronrod integration of each branch's
//!   Gaussian p-marginal over the window.
//!
//! Random numbers come from ChaCha20. Samples are processed in fixed chunks
//! of [`CHUNK_SIZE`]; chunk `k` uses stream `k` of the generator seeded from
//! the user seed, so results do not depend on how chunks are spread over
//! threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::link::{build_link_branches, BranchLabel, LinkParams};
use crate::quadrature::integrate_with_breaks;

/// Identifies the generator and stream layout; recorded with every estimate.
pub const RNG_ID: &str = "chacha20/rand_chacha-0.9/seed_from_u64/stream=chunk/chunk=65536/v1";

pub const CHUNK_SIZE: u64 = 1 << 16;

/// Half-width, in standard deviations, beyond which Gaussian mass is ignored.
const TAIL_SIGMAS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSample {
    pub branch: BranchLabel,
    pub p_value: f64,
    pub accepted: bool,
}

/// Precomputed p-marginals of the three branches.
#[derive(Debug, Clone, Copy)]
pub struct LinkSampler {
    p_c: f64,
    // (mean, standard deviation) per branch, in BranchLabel order
    marginals: [(f64, f64); 3],
}

impl LinkSampler {
    pub fn new(params: &LinkParams) -> Result<Self> {
        let branches = build_link_branches(params)?;
        Ok(LinkSampler {
            p_c: params.p_c,
            marginals: branches.map(|b| {
                let (m, v) = b.probe.p_marginal();
                (m, v.sqrt())
            }),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HomodyneSample {
        let branch = match rng.random_range(0..4u32) {
            0 => BranchLabel::B00,
            3 => BranchLabel::B11,
            _ => BranchLabel::BEN,
        };
        let (mean, sd) = self.marginals[branch.index()];
        let z: f64 = rng.sample(StandardNormal);
        let p_value = mean + sd * z;
        HomodyneSample {
            branch,
            p_value,
            accepted: p_value.abs() <= self.p_c,
        }
    }
}

pub fn sample_link<R: Rng + ?Sized>(params: &LinkParams, rng: &mut R) -> Result<HomodyneSample> {
    Ok(LinkSampler::new(params)?.sample(rng))
}

/// Generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEstimate {
    pub p_s_hat: f64,
    /// `None` when no shot was accepted.
    pub fidelity_hat: Option<f64>,
    pub std_err_ps: f64,
    pub std_err_f: Option<f64>,
    pub n_samples: u64,
    pub seed: u64,
    /// Draws per branch, `[00, en, 11]`.
    pub branch_counts: [u64; 3],
    /// Accepted draws per branch.
    pub accepted_counts: [u64; 3],
    pub rng: String,
}

impl LinkEstimate {
    pub fn accepted(&self) -> u64 {
        self.accepted_counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    drawn: [u64; 3],
    accepted: [u64; 3],
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..3 {
            self.drawn[i] += other.drawn[i];
            self.accepted[i] += other.accepted[i];
        }
        self
    }
}

/// Binomial standard error with the Laplace-smoothed proportion
/// `(k+1)/(n+2)`, so that all-or-nothing small samples still report a
/// finite spread.
fn binomial_std_err(k: u64, n: u64) -> f64 {
    let p = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Monte Carlo estimate of `P_s` and the postselected fidelity from `n`
/// homodyne shots. Bit-identical for identical `(params, n, seed)`,
/// whatever the size of the rayon pool.
pub fn estimate_link(params: &LinkParams, n: u64, seed: u64) -> Result<LinkEstimate> {
    if n == 0 {
        return Err(invalid("n", 0.0, "need at least one sample"));
    }
    let sampler = LinkSampler::new(params)?;
    let chunks = n.div_ceil(CHUNK_SIZE);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let len = CHUNK_SIZE.min(n - k * CHUNK_SIZE);
            let mut t = Tally::default();
            for _ in 0..len {
                let s = sampler.sample(&mut rng);
                let i = s.branch.index();
                t.drawn[i] += 1;
                t.accepted[i] += s.accepted as u64;
            }
            t
        })
        .collect();
    let total = tallies.into_iter().fold(Tally::default(), Tally::merge);

    let accepted: u64 = total.accepted.iter().sum();
    let en_fidelity = 0.5 * (1.0 + params.zeta);
    let (fidelity_hat, std_err_f) = if accepted > 0 {
        let en = total.accepted[BranchLabel::BEN.index()];
        let q = en as f64 / accepted as f64;
        (
            Some(en_fidelity * q),
            Some(en_fidelity * binomial_std_err(en, accepted)),
        )
    } else {
        (None, None)
    };
    Ok(LinkEstimate {
        p_s_hat: accepted as f64 / n as f64,
        fidelity_hat,
        std_err_ps: binomial_std_err(accepted, n),
        std_err_f,
        n_samples: n,
        seed,
        branch_counts: total.drawn,
        accepted_counts: total.accepted,
        rng: RNG_ID.to_string(),
    })
}

/// Gaussian mass of `N(mean, var)` on `[−p_c, p_c]` by adaptive quadrature
/// of the density. Absolute error below 1e-12.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds fall through to zero
pub fn integrate_window(marginal_mean: f64, marginal_var: f64, p_c: f64) -> f64 {
    let sd = marginal_var.sqrt();
    let lo = (-p_c).max(marginal_mean - TAIL_SIGMAS * sd);
    let hi = p_c.min(marginal_mean + TAIL_SIGMAS * sd);
    if !(hi > lo) {
        return 0.0;
    }
    let norm = 1.0 / (2.0 * PI * marginal_var).sqrt();
    let density = |p: f64| {
        let z = p - marginal_mean;
        norm * (-z * z / (2.0 * marginal_var)).exp()
    };
    let mut breaks = vec![lo];
    if marginal_mean > lo && marginal_mean < hi {
        breaks.push(marginal_mean);
    }
    breaks.push(hi);
    integrate_with_breaks(density, &breaks, 1e-15, 0.0).value
}

/// Which branch covariances the quadrature route integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchModel {
    /// Every branch is a pure state with the effective `r′`, centred at
    /// `0` or `±η·d`; the model behind the closed forms.
    EffectiveSqueezed,
    /// The exact lossy covariances including the `±2θ` squeeze-axis tilt.
    ExactCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleFigures {
    pub p_s: f64,
    pub fidelity: f64,
    /// In-window probability per branch, `[00, en, 11]`.
    pub acceptance: [f64; 3],
}

pub fn branch_marginals(params: &LinkParams, model: BranchModel) -> Result<[(f64, f64); 3]> {
    match model {
        BranchModel::EffectiveSqueezed => {
            let var = 0.25 * (-2.0 * params.r_prime()?).exp();
            let shift = params.eta() * params.d();
            Ok([(shift, var), (0.0, var), (-shift, var)])
        }
        BranchModel::ExactCovariance => {
            Ok(build_link_branches(params)?.map(|b| b.probe.p_marginal()))
        }
    }
}

/// `P_s` and fidelity from window integrals of the branch marginals.
pub fn quadrature_figures(params: &LinkParams, model: BranchModel) -> Result<OracleFigures> {
    let marginals = branch_marginals(params, model)?;
    let acceptance = marginals.map(|(m, v)| integrate_window(m, v, params.p_c));
    let weighted: Vec<f64> = BranchLabel::ALL
        .iter()
        .map(|b| b.weight() * acceptance[b.index()])
        .collect();
    let p_s: f64 = weighted.iter().sum();
    if p_s <= 0.0 {
        return Err(Error::EmptyPostselection);
    }
    let fidelity = weighted[BranchLabel::BEN.index()] * 0.5 * (1.0 + params.zeta) / p_s;
    Ok(OracleFigures {
        p_s,
        fidelity,
        acceptance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::link_figures;
    use crate::special::erf;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn baseline() -> LinkParams {
        LinkParams::baseline()
    }

    #[test]
    fn window_integral_limits() {
        assert_abs_diff_eq!(integrate_window(0.0, 0.3, 1e9), 1.0, epsilon = 1e-13);
        assert_eq!(integrate_window(0.0, 0.3, 0.0), 0.0);
        assert_eq!(integrate_window(100.0, 0.01, 1.0), 0.0);
    }

    #[test]
    fn window_integral_against_erf() {
        assert_abs_diff_eq!(
            integrate_window(0.0, 0.25, 0.3),
            erf(0.3 * 2f64.sqrt()),
            epsilon = 1e-12
        );
        for &(m, v, pc) in &[(1.06f64, 0.09f64, 0.3f64), (-0.4, 0.01, 0.05), (0.2, 4.0, 7.0), (3.0, 1e-4, 2.99)] {
            let s = (2.0 * v).sqrt();
            let exact = 0.5 * (erf((pc - m) / s) + erf((pc + m) / s));
            assert_abs_diff_eq!(integrate_window(m, v, pc), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let closed = link_figures(&baseline()).unwrap();
        let quad = quadrature_figures(&baseline(), BranchModel::EffectiveSqueezed).unwrap();
        assert_relative_eq!(quad.p_s, closed.p_s, max_relative = 1e-12);
        assert_relative_eq!(quad.fidelity, closed.fidelity, max_relative = 1e-12);
    }

    #[test]
    fn lossless_link_uses_bare_squeezing() {
        let p = LinkParams { eta_sq: 1.0, ..baseline() };
        assert_abs_diff_eq!(p.r_prime().unwrap(), 1.61, epsilon = 1e-12);
        let closed = link_figures(&p).unwrap();
        let quad = quadrature_figures(&p, BranchModel::EffectiveSqueezed).unwrap();
        assert_relative_eq!(quad.p_s, closed.p_s, max_relative = 1e-10);
        assert_relative_eq!(quad.fidelity, closed.fidelity, max_relative = 1e-10);
    }

    #[test]
    fn samples_respect_window() {
        let mut rng = chunk_rng(7, 0);
        let sampler = LinkSampler::new(&baseline()).unwrap();
        for _ in 0..1000 {
            let s = sampler.sample(&mut rng);
            assert_eq!(s.accepted, s.p_value.abs() <= 0.3);
        }
    }

    #[test]
    fn degenerate_windows() {
        let mut rng = chunk_rng(1, 0);
        let wide = LinkParams { theta: 0.0, p_c: 1e9, ..baseline() };
        let shut = LinkParams { p_c: 0.0, ..baseline() };
        for _ in 0..500 {
            assert!(sample_link(&wide, &mut rng).unwrap().accepted);
            assert!(!sample_link(&shut, &mut rng).unwrap().accepted);
        }
        let est = estimate_link(&shut, 1000, 3).unwrap();
        assert_eq!(est.accepted(), 0);
        assert_eq!(est.fidelity_hat, None);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(estimate_link(&baseline(), 0, 1).is_err());
    }

    #[test]
    fn single_shot_has_wide_error_bar() {
        let est = estimate_link(&baseline(), 1, 42).unwrap();
        assert!(est.std_err_ps > 0.3);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = estimate_link(&baseline(), 200_000, 11).unwrap();
        let b = estimate_link(&baseline(), 200_000, 11).unwrap();
        assert_eq!(a, b);
        let c = estimate_link(&baseline(), 200_000, 12).unwrap();
        assert_ne!(a.accepted_counts, c.accepted_counts);
    }

    #[test]
    fn disjoint_peaks_give_ideal_fidelity() {
        let p = LinkParams { zeta: 1.0, theta: 0.2, p_c: 0.1, ..baseline() };
        let est = estimate_link(&p, 100_000, 5).unwrap();
        assert_eq!(est.fidelity_hat, Some(1.0));
        assert_eq!(est.accepted_counts[0] + est.accepted_counts[2], 0);
    }
}
