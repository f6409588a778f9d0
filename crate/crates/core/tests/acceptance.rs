//! Acceptance criteria. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed; exits non-zero if any
//! criterion fails.

mod common;

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{erf_series_oracle, random_link_set, rel_diff, wigner_integral};
use sqlink_core::analytic::{average_fidelity, link_figures, success_probability};
use sqlink_core::gaussian::{make_squeezed, GaussianState};
use sqlink_core::link::LinkParams;
use sqlink_core::oracle::{estimate_link, quadrature_figures, BranchModel};
use sqlink_core::sweep::{eta_from_length, run_sweep, SweepSpec};
use sqlink_core::erf;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn baseline() -> LinkParams {
    LinkParams::baseline()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn baseline_values() -> Outcome {
    let (figs, elapsed) = timed(|| {
        let p = baseline();
        (success_probability(&p).unwrap(), average_fidelity(&p).unwrap())
    });
    let (ps, f) = figs;
    let pass = (ps - 0.344).abs() <= 1e-3 && (f - 0.989).abs() <= 1e-3 && elapsed < Duration::from_millis(1);
    outcome(pass, format!("P_s = {ps:.6} (0.344±0.001), F = {f:.6} (0.989±0.001), {elapsed:?} (< 1 ms)"))
}

fn loss_composition() -> Outcome {
    let (r_prime, elapsed) = timed(|| baseline().r_prime().unwrap());
    let pass = (r_prime - 0.511).abs() <= 1e-3;
    outcome(pass, format!("r' = {r_prime:.6} (0.511±0.001), {elapsed:?}"))
}

fn displacement() -> Outcome {
    let d = baseline().d();
    outcome((d - 1.30).abs() <= 5e-3, format!("d = {d:.6} (1.30±0.005)"))
}

fn fig2_shape() -> Outcome {
    let (rows, elapsed) = timed(|| run_sweep(&SweepSpec::fig2(baseline()), None).unwrap());
    let increasing = rows.windows(2).all(|w| w[1].figures.p_s > w[0].figures.p_s);
    let decreasing = rows.windows(2).all(|w| w[1].figures.fidelity < w[0].figures.fidelity);
    let wide = link_figures(&LinkParams { p_c: 50.0, ..baseline() }).unwrap();
    let limit_f = (1.0 + baseline().zeta) / 4.0;
    let limits = (wide.p_s - 1.0).abs() <= 1e-9 && (wide.fidelity - limit_f).abs() <= 1e-9;
    let fast = elapsed < Duration::from_millis(50);
    outcome(
        rows.len() == 50 && increasing && decreasing && limits && fast,
        format!(
            "{} points, P_s increasing: {increasing}, F decreasing: {decreasing}, \
             p_c=50 → P_s={}, F={} (limit {limit_f}), sweep {elapsed:?} (< 50 ms)",
            rows.len(),
            wide.p_s,
            wide.fidelity
        ),
    )
}

fn deterministic_oracles() -> Outcome {
    let start = Instant::now();
    let mut worst_effective: f64 = 0.0;
    for p in random_link_set(20_240_601, 100) {
        let closed = link_figures(&p).unwrap();
        let quad = quadrature_figures(&p, BranchModel::EffectiveSqueezed).unwrap();
        worst_effective = worst_effective
            .max(rel_diff(quad.p_s, closed.p_s))
            .max(rel_diff(quad.fidelity, closed.fidelity));
    }
    let closed = link_figures(&baseline()).unwrap();
    let exact = quadrature_figures(&baseline(), BranchModel::ExactCovariance).unwrap();
    let gap_ps = rel_diff(exact.p_s, closed.p_s);
    let gap_f = rel_diff(exact.fidelity, closed.fidelity);
    let elapsed = start.elapsed();
    let pass = worst_effective <= 1e-10 && gap_ps <= 1e-4 && gap_f <= 1e-4 && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "effective model: worst rel. diff {worst_effective:.2e} over 100 sets (≤ 1e-10); \
             exact covariance vs closed form at the baseline: P_s {gap_ps:.4e}, F {gap_f:.4e} (≤ 1e-4); {elapsed:?} (< 5 s)"
        ),
    )
}

fn stochastic_oracle() -> Outcome {
    let n = 1_000_000;
    let seed = 20_080_415;
    let (est, elapsed) = timed(|| estimate_link(&baseline(), n, seed).unwrap());
    let closed = link_figures(&baseline()).unwrap();
    let z_ps = (est.p_s_hat - closed.p_s) / est.std_err_ps;
    let f_hat = est.fidelity_hat.unwrap();
    let z_f = (f_hat - closed.fidelity) / est.std_err_f.unwrap();
    let repeat = estimate_link(&baseline(), n, seed).unwrap();
    let single_thread = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_link(&baseline(), n, seed).unwrap());
    let identical = repeat == est && single_thread == est;
    let pass = z_ps.abs() <= 4.0 && z_f.abs() <= 4.0 && identical && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "N=1e6: p̂_s = {:.5} ± {:.5} (z = {z_ps:+.2}), F̂ = {f_hat:.5} ± {:.5} (z = {z_f:+.2}); \
             bit-identical repeat/single-thread: {identical}; {elapsed:?} (< 10 s)",
            est.p_s_hat,
            est.std_err_ps,
            est.std_err_f.unwrap()
        ),
    )
}

fn random_state(rng: &mut impl Rng) -> GaussianState {
    let alpha = Complex64::from_polar(rng.random_range(0.0..5.0), rng.random_range(0.0..TAU));
    make_squeezed(alpha, rng.random_range(0.0..1.5), rng.random_range(0.0..TAU))
        .unwrap()
        .to_gaussian()
        .lossy(rng.random_range(0.2..=1.0))
        .unwrap()
        .phase_shifted(rng.random_range(0.0..TAU))
}

fn gaussian_core_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut worst_invariance: f64 = 0.0;
    for _ in 0..1000 {
        let s = make_squeezed(
            Complex64::from_polar(rng.random_range(0.0..5.0), rng.random_range(0.0..TAU)),
            rng.random_range(0.0..1.5),
            rng.random_range(0.0..TAU),
        )
        .unwrap();
        let theta = rng.random_range(-3.0..3.0);
        let shifted = s.phase_shifted(theta);
        let arg = s.alpha().arg();
        let var = s.photon_number_variance(arg);
        let dn = (shifted.mean_photon_number() - s.mean_photon_number()).abs() / s.mean_photon_number().max(1.0);
        let dv = (shifted.photon_number_variance(arg + theta) - var).abs() / var.max(1.0);
        worst_invariance = worst_invariance.max(dn).max(dv);
    }

    let mut worst_composition: f64 = 0.0;
    let mut physical = true;
    for _ in 0..1000 {
        let g = random_state(&mut rng);
        let (e1, e2) = (rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0));
        let a = g.lossy(e1).unwrap().lossy(e2).unwrap();
        let b = g.lossy(e1 * e2).unwrap();
        let scale = g.cov().abs().max().max(g.mean().norm()).max(1.0);
        worst_composition = worst_composition
            .max((a.cov() - b.cov()).abs().max() / scale)
            .max((a.mean() - b.mean()).abs().max() / scale);
        physical &= GaussianState::new(a.mean(), a.cov()).is_ok() && a.det() >= (1.0 - 1e-12) / 16.0;
    }

    let mut worst_wigner: f64 = 0.0;
    for _ in 0..20 {
        worst_wigner = worst_wigner.max((wigner_integral(&random_state(&mut rng)) - 1.0).abs());
    }

    let mut worst_erf: f64 = 0.0;
    for i in 0..10_000 {
        let x = -6.0 + 12.0 * (i as f64 + 0.5) / 10_000.0;
        worst_erf = worst_erf.max((erf(x) - erf_series_oracle(x)).abs());
    }

    let pass = worst_invariance <= 1e-12
        && worst_composition <= 1e-12
        && physical
        && worst_wigner <= 1e-6
        && worst_erf <= 1e-14;
    outcome(
        pass,
        format!(
            "photon moments under phase shift {worst_invariance:.1e} (≤ 1e-12), loss composition {worst_composition:.1e} \
             (≤ 1e-12), PSD/uncertainty kept: {physical}, Wigner norm {worst_wigner:.1e} (≤ 1e-6), \
             erf vs series at 1e4 points {worst_erf:.1e} (≤ 1e-14)"
        ),
    )
}

fn fiber_law() -> Outcome {
    let eta_sq = eta_from_length(10.0, 0.17).unwrap();
    let discrepancy = (eta_sq - 2.0 / 3.0) / (2.0 / 3.0);
    outcome(
        (eta_sq - 0.6761).abs() <= 1e-4 && discrepancy.abs() <= 0.015,
        format!("η²(10 km) = {eta_sq:.6} (0.6761±1e-4), {:.2}% above 2/3 (≤ 1.5%)", 100.0 * discrepancy),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("baseline regression", baseline_values),
        ("loss composition r'", loss_composition),
        ("displacement d", displacement),
        ("window sweep shape and limits", fig2_shape),
        ("oracle equivalence (deterministic)", deterministic_oracles),
        ("oracle equivalence (stochastic)", stochastic_oracle),
        ("gaussian-core property suite", gaussian_core_suite),
        ("fiber law", fiber_law),
    ];
    println!("running {} acceptance criteria", criteria.len());
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("[{}] {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
