//! Test-only oracles, kept independent of the library's numerical kernels
//! except where noted.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqlink_core::gaussian::GaussianState;
use sqlink_core::link::LinkParams;
use sqlink_core::quadrature::integrate_with_breaks;

/// Double-double number `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd(s, b - (s - a))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn add(self, y: Dd) -> Dd {
        let (s, e) = two_sum(self.0, y.0);
        quick_two_sum(s, e + self.1 + y.1)
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    fn mul(self, y: Dd) -> Dd {
        let p = self.0 * y.0;
        let e = self.0.mul_add(y.0, -p) + self.0 * y.1 + self.1 * y.0;
        quick_two_sum(p, e)
    }

    fn div(self, d: f64) -> Dd {
        let q = self.0 / d;
        let p = q * d;
        let pe = q.mul_add(d, -p);
        let r = ((self.0 - p) - pe + self.1) / d;
        quick_two_sum(q, r)
    }
}

/// Maclaurin series `erf(x) = (2/√π) Σ (−1)ⁿ x^{2n+1} / (n!(2n+1))` summed in
/// double-double arithmetic. Valid for |x| ≤ 6 (cancellation costs at most
/// ~16 of the ~32 available digits).
pub fn erf_series_oracle(x: f64) -> f64 {
    assert!(x.abs() <= 6.0);
    const TWO_OVER_SQRT_PI: Dd = Dd(std::f64::consts::FRAC_2_SQRT_PI, 1.533545961316588e-17);
    let xd = Dd(x, 0.0);
    let x2 = xd.mul(xd);
    let mut power = xd; // x^{2n+1}/n!
    let mut sum = xd;
    for n in 1..1000u32 {
        power = power.mul(x2).div(n as f64);
        let term = power.div((2 * n + 1) as f64);
        sum = if n % 2 == 1 { sum.add(term.neg()) } else { sum.add(term) };
        if term.0.abs() < 1e-40 * sum.0.abs().max(1e-300) || term.0 == 0.0 {
            break;
        }
    }
    let r = sum.mul(TWO_OVER_SQRT_PI);
    r.0 + r.1
}

/// ∬ W(x, p) dx dp over a ±20σ box, as nested adaptive Gauss–Kronrod
/// integrals. The inner range follows the conditional mean of `p` given `x`
/// so the ridge of a tilted ellipse is never stepped over.
pub fn wigner_integral(g: &GaussianState) -> f64 {
    let m = g.mean();
    let c = g.cov();
    let (vx, vxp, vp) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
    let sx = vx.sqrt();
    let cond_sd = (vp - vxp * vxp / vx).sqrt();
    let inner = |x: f64| {
        let centre = m[1] + vxp / vx * (x - m[0]);
        let lo = (m[1] - 20.0 * vp.sqrt()).max(centre - 20.0 * cond_sd);
        let hi = (m[1] + 20.0 * vp.sqrt()).min(centre + 20.0 * cond_sd);
        if hi <= lo {
            return 0.0;
        }
        let mut breaks = vec![lo];
        if centre > lo && centre < hi {
            breaks.push(centre);
        }
        breaks.push(hi);
        integrate_with_breaks(|p| g.wigner(x, p), &breaks, 1e-13, 0.0).value
    };
    integrate_with_breaks(inner, &[m[0] - 20.0 * sx, m[0], m[0] + 20.0 * sx], 1e-10, 0.0).value
}

/// Reproducible random valid link parameters.
pub fn random_link_params(rng: &mut impl Rng) -> LinkParams {
    LinkParams {
        alpha: rng.random_range(10.0..300.0),
        r: rng.random_range(0.0..2.0),
        theta: rng.random_range(0.001..0.05),
        eta_sq: rng.random_range(0.2..=1.0),
        zeta: rng.random_range(0.5..=1.0),
        p_c: rng.random_range(0.05..1.5),
    }
}

pub fn random_link_set(seed: u64, count: usize) -> Vec<LinkParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_link_params(&mut rng)).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
