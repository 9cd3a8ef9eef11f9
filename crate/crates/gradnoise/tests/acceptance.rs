//! End-to-end acceptance checks, one test per criterion.
//!
//! Every test prints a single `criterion NN: PASS ...` line (visible with
//! `--nocapture`) after its assertions; the harness line per test is the
//! pass/fail record. Tolerances and runtime caps are asserted, not logged.

use std::time::Instant;

use gradnoise::linsys::{self, AlgorithmSpec, QuadraticSpectrum};
use gradnoise::sim::{self, EstimatorConfig, NoiseModel, Objective};
use gradnoise::{cert, quad, tradeoff};
use nalgebra::DVector;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// J and J' of the closed loop through the Lyapunov route, as an oracle for
/// the closed forms.
fn h2_pair(spec: &AlgorithmSpec, spectrum: &QuadraticSpectrum) -> (f64, f64) {
    let d = spectrum.d();
    let sys = linsys::build_system(spec, d).unwrap();
    let a_cl = linsys::closed_loop_matrix(&sys, spectrum).unwrap();
    let mut c_j = sys.t.clone();
    for (i, &lam) in spectrum.eigenvalues().iter().enumerate() {
        let scale = (lam / 2.0).sqrt();
        for v in c_j.row_mut(i).iter_mut() {
            *v *= scale;
        }
    }
    let j = linsys::h2_norm_squared(&a_cl, &sys.b, &c_j).unwrap();
    let jprime = linsys::h2_norm_squared(&a_cl, &sys.b, &sys.t).unwrap();
    (j, jprime)
}

fn example_spectrum() -> QuadraticSpectrum {
    QuadraticSpectrum::new(vec![0.1, 1.0]).unwrap()
}

#[test]
fn criterion_01_penalized_tradeoff_example_point() {
    let start = Instant::now();
    let point = tradeoff::gd_optimal_stepsize_tau(2.0, &example_spectrum()).unwrap();
    let elapsed = start.elapsed();
    let alpha = point.params.alpha;
    assert!((alpha - 1.5055).abs() <= 1e-3, "alpha* {alpha}");
    assert!((point.rho - 0.8494).abs() <= 1e-3, "rho {}", point.rho);
    assert!((point.j - 1.9294).abs() <= 1e-3, "J {}", point.j);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 01: PASS alpha*={alpha:.6} rho={:.6} J={:.6} in {elapsed:?}",
        point.rho, point.j
    );
}

#[test]
fn criterion_02_huge_penalty_recovers_the_fastest_rate() {
    let spectrum = example_spectrum();
    let (mu, l) = (spectrum.mu(), spectrum.l());
    let point = tradeoff::gd_optimal_stepsize_tau(1e9, &spectrum).unwrap();
    let alpha_bar = 2.0 / (mu + l);
    let kappa = l / mu;
    let rho_bar = (kappa - 1.0) / (kappa + 1.0);
    assert!(
        (point.params.alpha - alpha_bar).abs() <= 1e-4,
        "alpha* {} vs {alpha_bar}",
        point.params.alpha
    );
    assert!(
        (point.rho - rho_bar).abs() <= 1e-4,
        "rho {} vs {rho_bar}",
        point.rho
    );
    println!(
        "criterion 02: PASS alpha*={:.6} rho={:.6}",
        point.params.alpha, point.rho
    );
}

#[test]
fn criterion_03_closed_forms_match_lyapunov_h2() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(3001);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = 1 + (rng.next_u64() % 8) as usize;
        let eigs: Vec<f64> = (0..d).map(|_| uniform(&mut rng, 0.05, 5.0)).collect();
        let spectrum = QuadraticSpectrum::new(eigs).unwrap();
        let (mu, l) = (spectrum.mu(), spectrum.l());

        let alpha_gd = uniform(&mut rng, 0.02, 0.98) * 2.0 / l;
        let gd = AlgorithmSpec::gd(alpha_gd).unwrap();
        let (j_h2, jp_h2) = h2_pair(&gd, &spectrum);
        let j = quad::gd_robustness(alpha_gd, &spectrum).unwrap();
        let jp = quad::gd_robustness_iterates(alpha_gd, &spectrum).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        worst = worst.max(rel(j, j_h2)).max(rel(jp, jp_h2));
        assert!(rel(j, j_h2) <= 1e-9, "GD J {j} vs H2 {j_h2}");
        assert!(rel(jp, jp_h2) <= 1e-9, "GD J' {jp} vs H2 {jp_h2}");

        let (alpha_ag, beta_ag) = loop {
            let a = uniform(&mut rng, 0.01, 1.9) / l;
            let b = uniform(&mut rng, 0.0, 1.2);
            if quad::in_stability_region(a, b, mu, l).margin > 1e-3 {
                break (a, b);
            }
        };
        let ag = AlgorithmSpec::ag(alpha_ag, beta_ag).unwrap();
        let (j_h2, jp_h2) = h2_pair(&ag, &spectrum);
        let j = quad::ag_robustness(alpha_ag, beta_ag, &spectrum).unwrap();
        let jp = quad::ag_robustness_iterates(alpha_ag, beta_ag, &spectrum).unwrap();
        worst = worst.max(rel(j, j_h2)).max(rel(jp, jp_h2));
        assert!(rel(j, j_h2) <= 1e-9, "AG J {j} vs H2 {j_h2}");
        assert!(rel(jp, jp_h2) <= 1e-9, "AG J' {jp} vs H2 {jp_h2}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("criterion 03: PASS worst relative gap {worst:.3e} in {elapsed:?}");
}

#[test]
fn criterion_04_region_membership_matches_spectral_radius() {
    let mut rng = ChaCha12Rng::seed_from_u64(3002);
    let mut checked = 0usize;
    for (mu, l) in [(0.7, 1.0), (0.1, 1.0)] {
        let spectrum = QuadraticSpectrum::two_point(mu, l, 2).unwrap();
        for _ in 0..10_000 {
            let alpha = uniform(&mut rng, 0.0, 2.5) / l;
            let beta = uniform(&mut rng, 0.0, 3.0);
            let verdict = quad::in_stability_region(alpha, beta, mu, l);
            if verdict.margin.abs() <= 1e-8 {
                continue;
            }
            let spec = AlgorithmSpec::ag(alpha, beta).unwrap();
            let sys = linsys::build_system(&spec, 2).unwrap();
            let a_q = linsys::closed_loop_matrix(&sys, &spectrum).unwrap();
            let rho = linsys::spectral_radius(&a_q).unwrap();
            assert_eq!(
                verdict.inside,
                rho < 1.0,
                "(mu {mu}, L {l}, alpha {alpha}, beta {beta}): margin {} radius {rho}",
                verdict.margin
            );
            checked += 1;
        }
    }
    println!("criterion 04: PASS {checked} samples, zero disagreements");
}

#[test]
fn criterion_05_robustness_lower_bound_holds() {
    let mut rng = ChaCha12Rng::seed_from_u64(3003);
    for _ in 0..1000 {
        let d = 1 + (rng.next_u64() % 8) as usize;
        let eigs: Vec<f64> = (0..d).map(|_| uniform(&mut rng, 0.05, 4.0)).collect();
        let spectrum = QuadraticSpectrum::new(eigs).unwrap();
        let alpha = uniform(&mut rng, 0.01, 0.99) * 2.0 / spectrum.l();
        let j = quad::gd_robustness(alpha, &spectrum).unwrap();
        let floor = quad::gd_lower_bound(alpha, &spectrum).unwrap();
        assert!(j >= floor, "J {j} below its floor {floor} at alpha {alpha}");
    }
    println!("criterion 05: PASS 1000 samples, zero violations");
}

#[test]
fn criterion_06_certified_rate_and_witness_feasibility() {
    let pairs = [(1.0, 20.0), (0.1, 1.0), (1.0, 1.0)];
    let mut rng = ChaCha12Rng::seed_from_u64(3004);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let (mu, l) = pairs[i % pairs.len()];
        let alpha = uniform(&mut rng, 0.01, 1.99) / l;
        let certified = cert::gd_min_rho(alpha, mu, l).unwrap();
        let analytic = quad::gd_rate(alpha, mu, l);
        worst = worst.max((certified - analytic).abs());
        assert!(
            (certified - analytic).abs() <= 1e-4,
            "certified {certified} vs analytic {analytic} at (mu {mu}, L {l}, alpha {alpha})"
        );
    }
    for (mu, l) in pairs {
        for _ in 0..100 {
            let alpha = uniform(&mut rng, 1e-6, 1.0) / l;
            let witness = cert::ag_analytic_certificate(alpha, mu, l, 1).unwrap();
            assert!(
                witness.slack_min_eig >= -1e-10,
                "witness slack {} at (mu {mu}, L {l}, alpha {alpha})",
                witness.slack_min_eig
            );
        }
    }
    println!("criterion 06: PASS worst rate gap {worst:.3e}, 300 feasible witnesses");
}

#[test]
fn criterion_07_momentum_sdp_curve_orders_below_gd() {
    let start = Instant::now();
    let (mu, l, d) = (1.0_f64, 20.0_f64, 1usize);
    let kappa = l / mu;
    let rho_bar_gd = (kappa - 1.0) / (kappa + 1.0);
    let rho_bar_ag = (1.0 - 1.0 / kappa.sqrt()).sqrt();

    let rates: Vec<f64> = tradeoff::linear_grid(0.906, 0.996, 12);
    let eps_ag: Vec<f64> = rates.iter().map(|r| r / rho_bar_ag - 1.0).collect();
    let curve = cert::ag_sdp_curve(&eps_ag, mu, l, d, 30, 30).unwrap();
    assert_eq!(curve.points.len(), rates.len());

    for (point, &rate) in curve.points.iter().zip(&rates) {
        assert!(
            (point.rho - rate).abs() <= 1e-9,
            "curve rate {} vs requested {rate}",
            point.rho
        );
        let eps_gd = rate / rho_bar_gd - 1.0;
        let alpha_gd = tradeoff::gd_alpha_for_eps(eps_gd, mu, l).unwrap();
        let r_gd = cert::gd_bound_r(alpha_gd, mu, l, d).unwrap();
        assert!(
            point.j <= r_gd,
            "rate {rate}: AG SDP bound {} above GD bound {r_gd}",
            point.j
        );
        let (alpha_eps, _) = tradeoff::ag_alpha_for_eps(rate / rho_bar_ag - 1.0, mu, l).unwrap();
        let cap = alpha_eps.sqrt() * d as f64 / mu.sqrt();
        assert!(
            point.j <= cap + 1e-8,
            "rate {rate}: AG SDP bound {} above cap {cap}",
            point.j
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "criterion 07: PASS {} rate points ordered in {elapsed:?}",
        rates.len()
    );
}

#[test]
fn criterion_08_momentum_dominates_gd_pareto_points() {
    let spectrum = example_spectrum();
    let mut dominated = 0usize;
    for tau in tradeoff::log_grid(1e-4, 1e3, 40) {
        let gd = tradeoff::gd_optimal_stepsize_tau(tau, &spectrum).unwrap();
        if !(0.82..=0.99).contains(&gd.rho) {
            continue;
        }
        let ag = tradeoff::ag_min_j_at_rate(
            gd.rho,
            &spectrum,
            40,
            40,
            &[(gd.params.alpha, 0.0)],
        )
        .unwrap();
        assert!(
            ag.rho <= gd.rho + 1e-9,
            "AG rate {} exceeds GD rate {}",
            ag.rho,
            gd.rho
        );
        assert!(
            ag.j <= gd.j + 1e-9,
            "AG J {} exceeds GD J {} at rate {}",
            ag.j,
            gd.j,
            gd.rho
        );
        dominated += 1;
    }
    assert!(dominated >= 10, "only {dominated} rates landed in [0.82, 0.99]");
    println!("criterion 08: PASS {dominated} GD Pareto points dominated");
}

#[test]
fn criterion_09_monte_carlo_estimates_are_consistent() {
    // Tuned example point, moderate noise, long runs.
    let tuned = tradeoff::gd_optimal_stepsize_tau(2.0, &example_spectrum()).unwrap();
    let objective = Objective::quadratic(vec![0.1, 1.0], DVector::zeros(2)).unwrap();
    let noise = NoiseModel::gaussian(0.1).unwrap();
    let config = EstimatorConfig::new(2000, 2000, None, 901).unwrap();
    let (jhat, _) = sim::estimate_j(&tuned.params, &objective, &noise, &config).unwrap();
    assert!(
        (jhat - 1.9294).abs() <= 0.05 * 1.9294,
        "Jhat {jhat} more than 5% away from 1.9294"
    );

    // Scalar case J = 1/2: coverage of the 3-sigma interval across seeds.
    let scalar = Objective::quadratic(vec![1.0], DVector::zeros(1)).unwrap();
    let spec = AlgorithmSpec::gd(1.0).unwrap();
    let unit = NoiseModel::gaussian(1.0).unwrap();
    let mut hits = 0usize;
    for seed in 0..100 {
        let config = EstimatorConfig::new(100, 1000, None, seed).unwrap();
        let (est, stderr) = sim::estimate_j(&spec, &scalar, &unit, &config).unwrap();
        if (est - 0.5).abs() <= 3.0 * stderr {
            hits += 1;
        }
    }
    assert!(hits >= 95, "only {hits}/100 seeds inside 3 stderr");
    println!("criterion 09: PASS Jhat={jhat:.5}, scalar coverage {hits}/100");
}

#[test]
fn criterion_10_impulse_energy_matches_iterate_robustness() {
    let mut rng = ChaCha12Rng::seed_from_u64(3010);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = 1 + (rng.next_u64() % 6) as usize;
        let eigs: Vec<f64> = (0..d).map(|_| uniform(&mut rng, 0.2, 3.0)).collect();
        let spectrum = QuadraticSpectrum::new(eigs.clone()).unwrap();
        let (mu, l) = (spectrum.mu(), spectrum.l());
        let (spec, jp) = if i % 2 == 0 {
            let alpha = uniform(&mut rng, 0.05, 0.95) * 2.0 / l;
            (
                AlgorithmSpec::gd(alpha).unwrap(),
                quad::gd_robustness_iterates(alpha, &spectrum).unwrap(),
            )
        } else {
            let (alpha, beta) = loop {
                let a = uniform(&mut rng, 0.02, 1.5) / l;
                let b = uniform(&mut rng, 0.0, 1.0);
                let inside = quad::in_stability_region(a, b, mu, l).margin > 1e-2;
                if inside && quad::ag_rate(a, b, mu, l) <= 0.97 {
                    break (a, b);
                }
            };
            (
                AlgorithmSpec::ag(alpha, beta).unwrap(),
                quad::ag_robustness_iterates(alpha, beta, &spectrum).unwrap(),
            )
        };
        let objective = Objective::quadratic(eigs, DVector::zeros(d)).unwrap();
        let j_star = sim::impulse_j_star(&spec, &objective).unwrap();
        let gap = (j_star - jp).abs() / jp.abs().max(1.0);
        worst = worst.max(gap);
        assert!(gap <= 1e-8, "J* {j_star} vs J' {jp}");
    }

    // Matched-curve AG stays under the perturbation-stability envelope.
    let (mu, l) = (0.5, 5.0);
    for i in 0..25 {
        let alpha = (i as f64 + 1.0) / 25.0 / l;
        let s = (alpha * mu).sqrt();
        let spec = AlgorithmSpec::ag(alpha, (1.0 - s) / (1.0 + s)).unwrap();
        let d = 1 + (i % 3) as usize;
        let eigs: Vec<f64> = (0..d).map(|_| uniform(&mut rng, mu, l)).collect();
        let objective = Objective::quadratic(eigs, DVector::zeros(d)).unwrap();
        let j_star = sim::impulse_j_star(&spec, &objective).unwrap();
        let bound = cert::perturb_stability_bounds(&spec, mu, l, d).unwrap();
        assert!(
            j_star <= bound * (1.0 + 1e-9),
            "J* {j_star} above class bound {bound} at alpha {alpha}"
        );
    }
    println!("criterion 10: PASS worst identity gap {worst:.3e}, 25 bounded AG runs");
}

#[test]
fn criterion_11_noise_terms_convex_on_random_stable_tunings() {
    let mut rng = ChaCha12Rng::seed_from_u64(3011);
    for _ in 0..1000 {
        let mu = uniform(&mut rng, 0.05, 2.0);
        let l = mu * uniform(&mut rng, 1.1, 50.0);
        let (alpha, beta) = loop {
            let a = uniform(&mut rng, 1e-4, 2.5) / l;
            let b = uniform(&mut rng, 0.0, 3.0);
            if quad::in_stability_region(a, b, mu, l).inside {
                break (a, b);
            }
        };
        let u: Vec<f64> = (0..100)
            .map(|i| {
                let lam = mu + (l - mu) * i as f64 / 99.0;
                quad::ag_u(alpha, beta, lam).unwrap()
            })
            .collect();
        for i in 1..99 {
            let second = u[i - 1] - 2.0 * u[i] + u[i + 1];
            assert!(
                second >= -1e-8,
                "second difference {second} at (mu {mu}, L {l}, alpha {alpha}, beta {beta})"
            );
        }
    }
    println!("criterion 11: PASS 1000 tunings, 98 interior nodes each");
}

/// Substituted property for the non-reproducible regression figure: on a
/// seeded synthetic logistic instance, slower tuned momentum settings (larger
/// rate offset) keep higher tail suboptimality, and all of them sit below
/// gradient descent at its fastest-rate tuning.
///
/// The instance has fewer rows than columns, so the data's null space pins
/// the local curvature floor at the class modulus and the class rates govern
/// the tails; the window is chosen while all methods are still converging.
#[test]
fn criterion_12_tuned_momentum_orders_on_synthetic_logistic() {
    let objective = sim::synth_logistic(12, 24, 1000.0, 33).unwrap();
    let (mu, l) = (objective.mu(), objective.l());
    let d = objective.d();
    let mut x0 = objective.x_star().clone();
    let offset = 10.0 / (d as f64).sqrt();
    for v in x0.iter_mut() {
        *v += offset;
    }
    let noise = NoiseModel::gaussian(1e-7).unwrap();
    let (k_max, tail_from, replicas) = (400usize, 300usize, 4u64);

    let tail_of = |spec: &AlgorithmSpec| -> f64 {
        let mut total = 0.0;
        for replica in 0..replicas {
            let traj =
                sim::run_noisy_stream(spec, &objective, &x0, &noise, k_max, 77, replica).unwrap();
            let window = &traj[tail_from..];
            total += window.iter().map(|p| p.subopt).sum::<f64>() / window.len() as f64;
        }
        total / replicas as f64
    };

    let eps_tails: Vec<f64> = [0.002, 0.006, 0.012]
        .iter()
        .map(|&eps| {
            let (alpha, beta) = tradeoff::ag_alpha_for_eps(eps, mu, l).unwrap();
            tail_of(&AlgorithmSpec::ag(alpha, beta).unwrap())
        })
        .collect();
    let gd_tail = tail_of(&AlgorithmSpec::gd(2.0 / (mu + l)).unwrap());

    assert!(
        eps_tails[0] < eps_tails[1] && eps_tails[1] < eps_tails[2],
        "tails not increasing in eps: {eps_tails:?}"
    );
    assert!(
        eps_tails[2] < gd_tail,
        "largest-eps tail {} not below GD tail {gd_tail}",
        eps_tails[2]
    );
    println!(
        "criterion 12: PASS tails {:.3e} < {:.3e} < {:.3e} < GD {:.3e}",
        eps_tails[0], eps_tails[1], eps_tails[2], gd_tail
    );
}
