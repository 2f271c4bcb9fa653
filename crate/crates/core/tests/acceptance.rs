//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines;
//! every tolerance is pinned here.

use kinklab_core::ansatz::{
    f_velocity_field, g_velocity_field, initial_lattice_state, wave_speed, AnsatzFields,
};
use kinklab_core::config::{ExperimentConfig, GProfile};
use kinklab_core::fields::{BackgroundField, LocalizedField, SplitField};
use kinklab_core::grid::{GridFunction, LatticeSeq, UniformGrid};
use kinklab_core::harness::{run_metastability, run_residual_scaling, run_theorem5};
use kinklab_core::interaction::{kernel_decay_slope, plan_phi_grid, solve_phi_psi, PhiPsiField};
use kinklab_core::norms::{
    ell22_bound_constant, l2_norm, l2_weighted_norm, partial_sums, sample_to_lattice,
    sobolev_norm, xk_norm,
};
use kinklab_core::slope::fit_log_slope;
use kinklab_core::solvers::{
    evolve_gardner, evolve_mkdv, gardner_rhs, kink_profile, mkdv_rhs, SolverConfig,
};
use kinklab_core::spectral::{antiderivative, spectral_derivative};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const V: f64 = 1.0 / 24.0;

fn out_dir(tag: &str) -> std::path::PathBuf {
    std::env::temp_dir().join("kinklab_acceptance").join(tag)
}

fn base_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.eps_list = vec![0.2, 0.14, 0.1, 0.07, 0.05];
    cfg.tau0 = 1.0;
    cfg
}

fn grid_for(eps: f64) -> UniformGrid {
    let dx = eps / 5.0;
    let mut n = 16usize;
    while (n as f64) * dx < 80.0 {
        n *= 2;
    }
    UniformGrid::centered(n as f64 * dx, n).unwrap()
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {criterion} failed: {detail}");
}

#[test]
fn criterion_01_residual_exponent() {
    let start = Instant::now();
    // Kink-only sweep over the default ε list.
    let mut cfg = base_config();
    cfg.g_profile = GProfile::None;
    cfg.out_dir = out_dir("residual_kink");
    let kink = run_residual_scaling(&cfg).unwrap();
    let kink_ok = kink.verdicts.iter().all(|v| v.pass);

    // Counter-propagating sweep: the interaction field must cancel the ε⁴
    // cross terms for the slope to survive.
    let mut cfg2 = base_config();
    cfg2.g_profile = GProfile::Gaussian {
        amp: 0.35,
        width: 2.0,
    };
    cfg2.resolution_check = false;
    cfg2.out_dir = out_dir("residual_counter");
    let counter = run_residual_scaling(&cfg2).unwrap();
    let counter_ok = counter.verdicts.iter().all(|v| v.pass);

    let wall = start.elapsed().as_secs_f64();
    let detail = format!(
        "kink: {}; counter: {}; wall {:.0}s < 600s",
        kink.verdicts[0].detail, counter.verdicts[0].detail, wall
    );
    verdict(
        "01 residual-exponent",
        kink_ok && counter_ok && wall < 600.0,
        &detail,
    );
}

#[test]
fn criterion_02_long_time_error_exponent() {
    let start = Instant::now();
    let mut cfg = base_config();
    cfg.g_profile = GProfile::None;
    cfg.out_dir = out_dir("theorem5_kink");
    let kink = run_theorem5(&cfg).unwrap();

    let mut cfg2 = base_config();
    cfg2.g_profile = GProfile::GardnerSoliton;
    cfg2.out_dir = out_dir("theorem5_counter");
    let counter = run_theorem5(&cfg2).unwrap();

    let wall = start.elapsed().as_secs_f64();
    let all = kink.verdicts.iter().chain(counter.verdicts.iter());
    let pass = all.clone().all(|v| v.pass) && wall < 3600.0;
    let detail = format!(
        "kink [{}]; counter [{}]; wall {:.0}s < 3600s",
        kink.verdicts
            .iter()
            .map(|v| v.detail.as_str())
            .collect::<Vec<_>>()
            .join("; "),
        counter
            .verdicts
            .iter()
            .map(|v| v.detail.as_str())
            .collect::<Vec<_>>()
            .join("; "),
        wall
    );
    verdict("02 long-time-error-exponent", pass, &detail);
}

#[test]
fn criterion_03_coercivity_zero_tolerance() {
    // Production-scale sweeps (kink-only full list, counter at the larger
    // epsilons) with the coercive bound checked at every checkpoint.
    let mut cfg = base_config();
    cfg.g_profile = GProfile::None;
    cfg.tau0 = 0.5;
    cfg.out_dir = out_dir("coercivity_kink");
    let kink = kinklab_core::harness::run_coercivity(&cfg).unwrap();

    let mut cfg2 = base_config();
    cfg2.eps_list = vec![0.2, 0.14, 0.1];
    cfg2.tau0 = 0.5;
    cfg2.g_profile = GProfile::Gaussian {
        amp: 0.35,
        width: 2.0,
    };
    cfg2.out_dir = out_dir("coercivity_counter");
    let counter = kinklab_core::harness::run_coercivity(&cfg2).unwrap();

    let pass = kink.verdicts.iter().all(|v| v.pass) && counter.verdicts.iter().all(|v| v.pass);
    verdict(
        "03 coercivity",
        pass,
        &format!(
            "kink runs: {}; counter runs: {}",
            kink.verdicts.len(),
            counter.verdicts.len()
        ),
    );
}

#[test]
fn criterion_04_interaction_uniform_bound() {
    // (a) sup_T ‖φ‖_{H⁵} stabilizes within ±20% when the horizon doubles.
    let eps = 0.1;
    let grid = grid_for(eps);
    let f0 = BackgroundField::kink(grid, V);
    let c = wave_speed(eps, f0.f_plus);
    let g0 = LocalizedField::gaussian(grid, 0.35, 2.0, 0.0);
    let scfg = SolverConfig::default();

    let ratio_at = |t_end: f64| -> f64 {
        let slow = eps * eps * t_end;
        let f_traj = evolve_mkdv(&f0, slow, &scfg).unwrap();
        let g_traj = evolve_gardner(&g0, f0.f_plus, slow, &scfg).unwrap();
        let out = plan_phi_grid(grid, t_end).unwrap();
        let times: Vec<f64> = (1..=10).map(|i| t_end * i as f64 / 10.0).collect();
        let traj =
            solve_phi_psi(&f_traj, &g_traj, t_end, eps, c, 56 * t_end as usize, out, &times)
                .unwrap();
        traj.iter()
            .map(|p| sobolev_norm(&p.phi, 5))
            .fold(0.0, f64::max)
    };
    let r50 = ratio_at(50.0);
    let r100 = ratio_at(100.0);
    let stable = (r100 - r50).abs() / r50 <= 0.2;

    // (b) kernel decay slope -2 ± 0.1 over τ ∈ [10, 1000].
    let taus: Vec<f64> = (0..9)
        .map(|i| 10.0 * (100.0f64).powf(i as f64 / 8.0))
        .collect();
    let fit = kernel_decay_slope(c, &taus).unwrap();
    let kernel_ok = (fit.slope + 2.0).abs() < 0.1;

    verdict(
        "04 interaction-uniform-bound",
        stable && kernel_ok,
        &format!(
            "sup‖φ‖_H5: {r50:.4e} (T=50) vs {r100:.4e} (T=100), change {:.1}%; kernel slope {:.3}",
            100.0 * (r100 - r50).abs() / r50,
            fit.slope
        ),
    );
}

#[test]
fn criterion_05_order_eps4_cancellation() {
    // -∂₂∂₁⁻¹ψ + ∂₁φ - (1/6)∂₁[3(f²-f₊²)g + 3(f-f₊)g²] < 1e-5 sup on a
    // kink × Gaussian run.
    let eps = 0.1;
    let grid = grid_for(eps);
    let f0 = BackgroundField::kink(grid, V);
    let c = wave_speed(eps, f0.f_plus);
    let g0 = LocalizedField::gaussian(grid, 0.35, 2.0, 0.0);
    let scfg = SolverConfig::default();
    let t_end = 10.0;
    let slow = eps * eps * t_end;
    let f_traj = evolve_mkdv(&f0, slow, &scfg).unwrap();
    let g_traj = evolve_gardner(&g0, f0.f_plus, slow, &scfg).unwrap();
    let out = plan_phi_grid(grid, t_end).unwrap();
    let times = [2.5, 5.0, 10.0];
    let traj = solve_phi_psi(&f_traj, &g_traj, t_end, eps, c, 2048, out, &times).unwrap();

    let mut worst = 0.0f64;
    for p in &traj {
        let tau = eps * eps * p.time;
        let fm = f_traj.split_at(tau);
        let gm = g_traj.split_at(tau);
        let n = out.n_points() as i64;
        let fs = fm.sample(out.dx(), out.x_min() + p.time, 0, n - 1);
        let gs = gm.sample(out.dx(), out.x_min() - c * p.time, 0, n - 1);
        let bracket: Vec<f64> = fs
            .values
            .iter()
            .zip(&gs.values)
            .map(|(&fv, &gv)| {
                3.0 * (fv * fv - f0.f_plus * f0.f_plus) * gv + 3.0 * (fv - f0.f_plus) * gv * gv
            })
            .collect();
        let db = spectral_derivative(&GridFunction::from_values(out, bracket), 1);
        let dphi = spectral_derivative(&p.phi, 1);
        let combo = p
            .inv_d_psi_t
            .zip_with(&dphi, |a, b| -a + b)
            .zip_with(&db, |a, b| a - b / 6.0)
            .max_abs();
        worst = worst.max(combo);
    }
    verdict(
        "05 order-eps4-cancellation",
        worst < 1e-5,
        &format!("sup residue {worst:.3e} < 1e-5 over T in {times:?}"),
    );
}

#[test]
fn criterion_06_defining_identity_slopes() {
    let eps_list = [0.2, 0.1, 0.05];

    let f_rem = |eps: f64| -> f64 {
        let grid = grid_for(eps);
        let f = BackgroundField::kink(grid, V);
        let cap = f_velocity_field(&f, eps);
        let half = (30.0 / eps) as i64;
        let here = cap.field.sample(eps, 0.0, -half, half);
        let next = cap.field.sample(eps, eps, -half, half);
        let d1f = f.field.derivative(1).sample(eps, 0.0, -half, half);
        let d2f = SplitField::localized(mkdv_rhs(&f)).sample(eps, 0.0, -half, half);
        (0..here.len())
            .map(|j| {
                (eps * (next.values[j] - here.values[j])
                    - eps * eps * d1f.values[j]
                    - eps.powi(4) * d2f.values[j])
                    .abs()
            })
            .fold(0.0, f64::max)
    };

    let g_rem = |eps: f64| -> f64 {
        let grid = grid_for(eps);
        let f_plus = (12.0 * V).sqrt();
        let c = wave_speed(eps, f_plus);
        let g = LocalizedField::gaussian(grid, 0.35, 2.0, 0.0);
        let cap = g_velocity_field(&g, f_plus, eps);
        let half = (30.0 / eps) as i64;
        let here = cap.as_split().sample(eps, 0.0, -half, half);
        let next = cap.as_split().sample(eps, eps, -half, half);
        let d1g = SplitField::localized(spectral_derivative(&g.values, 1))
            .sample(eps, 0.0, -half, half);
        let d2g = SplitField::localized(gardner_rhs(&g, f_plus)).sample(eps, 0.0, -half, half);
        (0..here.len())
            .map(|j| {
                (eps * (next.values[j] - here.values[j]) + eps * eps * c * d1g.values[j]
                    - eps.powi(4) * d2g.values[j])
                    .abs()
            })
            .fold(0.0, f64::max)
    };

    let phi_rem = |eps: f64| -> f64 {
        let grid = grid_for(eps);
        let psi = spectral_derivative(
            &GridFunction::from_fn(grid, |x| 0.4 * (-x * x / 8.0).exp()),
            1,
        );
        let inv = antiderivative(&psi).unwrap();
        let cap = inv.zip_with(&psi, |a, b| a - eps / 2.0 * b);
        let half = (30.0 / eps) as i64;
        let here = SplitField::localized(cap.clone()).sample(eps, 0.0, -half, half);
        let next = SplitField::localized(cap).sample(eps, eps, -half, half);
        let psi_s = SplitField::localized(psi).sample(eps, 0.0, -half, half);
        (0..here.len())
            .map(|j| {
                (eps.powi(3) * (next.values[j] - here.values[j])
                    - eps.powi(4) * psi_s.values[j])
                    .abs()
            })
            .fold(0.0, f64::max)
    };

    let mut details = Vec::new();
    let mut pass = true;
    for (name, rem) in [
        ("F", &f_rem as &dyn Fn(f64) -> f64),
        ("G", &g_rem),
        ("Phi", &phi_rem),
    ] {
        let pts: Vec<(f64, f64)> = eps_list.iter().map(|&e| (e, rem(e))).collect();
        let fit = fit_log_slope(&pts).unwrap();
        pass &= (fit.slope - 6.0).abs() < 0.3;
        details.push(format!("{name}: {:.3}", fit.slope));
    }
    verdict(
        "06 defining-identity-slopes",
        pass,
        &format!("remainder slopes {} (target 6 ± 0.3)", details.join(", ")),
    );
}

#[test]
fn criterion_07_kink_transport_and_convergence() {
    // Exact-kink transport at the pinned resolutions over τ ∈ [0, 1].
    let grid = UniformGrid::centered(80.0, 1024).unwrap();
    let f0 = BackgroundField::kink(grid, V);
    let cfg = SolverConfig {
        dt_slow: 1e-3,
        ..SolverConfig::default()
    };
    let traj = evolve_mkdv(&f0, 1.0, &cfg).unwrap();
    let mut worst = 0.0f64;
    for &tau in &[0.25, 0.5, 0.75, 1.0] {
        let total = traj.background_at(tau).total();
        for (x, got) in grid.points().zip(&total.values) {
            worst = worst.max((got - kink_profile(V, x, tau)).abs());
        }
    }
    let transport_ok = worst < 1e-6;

    // Self-convergence: error vs a dt/8 reference scales as dt⁴.
    let run = |dt: f64| {
        let c = SolverConfig {
            dt_slow: dt,
            ..SolverConfig::default()
        };
        evolve_mkdv(&f0, 0.5, &c).unwrap().background_at(0.5).field.wiggle
    };
    let reference = run(0.04 / 8.0);
    let pts: Vec<(f64, f64)> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let w = run(dt);
            let e = w
                .values
                .iter()
                .zip(&reference.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            (dt, e)
        })
        .collect();
    let fit = fit_log_slope(&pts).unwrap();
    let order_ok = (fit.slope - 4.0).abs() < 0.2;

    verdict(
        "07 kink-transport-oracle",
        transport_ok && order_ok,
        &format!(
            "sup error {worst:.3e} < 1e-6 over tau in [0,1]; convergence slope {:.3}",
            fit.slope
        ),
    );
}

#[test]
fn criterion_08_metastability() {
    let start = Instant::now();
    let mut cfg = base_config();
    cfg.eps_list = vec![0.1, 0.07];
    cfg.r = 0.25;
    cfg.big_k = 1.0;
    cfg.perturbed = true;
    cfg.out_dir = out_dir("metastability");
    let outcome = run_metastability(&cfg).unwrap();
    let wall = start.elapsed().as_secs_f64();
    let pass = outcome.verdicts.iter().all(|v| v.pass) && wall < 2700.0;
    verdict(
        "08 metastability",
        pass,
        &format!(
            "{}; wall {:.0}s < 2700s",
            outcome
                .verdicts
                .iter()
                .map(|v| format!("{}: {}", v.name, v.detail))
                .collect::<Vec<_>>()
                .join("; "),
            wall
        ),
    );
}

#[test]
fn criterion_09_lemma_suite() {
    let start = Instant::now();
    let grid = UniformGrid::centered(81.92, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(201);

    // Sampling inequality, 100 trials.
    let mut sample_ok = true;
    let mut spreads = 0.0f64;
    for _ in 0..100 {
        let coefs: Vec<(f64, f64, f64)> = (1..=8)
            .map(|m| (m as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = move |x: f64| {
            let env = (-(x / 12.0) * (x / 12.0)).exp();
            coefs
                .iter()
                .map(|&(m, a, b)| a * (m * x / 6.0).cos() + b * (m * x / 6.0).sin())
                .sum::<f64>()
                * env
        };
        let h1 = sobolev_norm(&GridFunction::from_fn(grid, &f), 1);
        if h1 < 1e-8 {
            continue;
        }
        let mut per_eps = Vec::new();
        for &eps in &[0.2, 0.1, 0.05] {
            let half = (40.0 / eps) as i64;
            per_eps.push(l2_norm(&sample_to_lattice(&f, eps, -half, half)) * eps.sqrt() / h1);
        }
        let max = per_eps.iter().fold(0.0f64, |m, &r| m.max(r));
        let min = per_eps.iter().fold(f64::INFINITY, |m, &r| m.min(r));
        spreads = spreads.max(max / min);
        sample_ok &= max / min < 2.0;
    }

    // Partial-sum lemma, 100 trials against the constructive constant.
    let c_bound = ell22_bound_constant();
    let mut psum_worst = 0.0f64;
    for _ in 0..100 {
        let mut a = LatticeSeq::zeros(-50, 50);
        for v in a.values.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let total: f64 = a.values.iter().sum();
        let len = a.len() as f64;
        for v in a.values.iter_mut() {
            *v -= total / len;
        }
        let b = partial_sums(&a).unwrap();
        psum_worst = psum_worst.max(l2_norm(&b) / l2_weighted_norm(&a));
    }
    let psum_ok = psum_worst <= c_bound;

    // Product inequalities, 100 trials each.
    let mut prod_ratios = Vec::new();
    let mut alg_ratios = Vec::new();
    for _ in 0..100 {
        let base = rng.gen_range(-1.0..1.0);
        let c1: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c2: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = GridFunction::from_fn(grid, |x| {
            base + c1
                .iter()
                .enumerate()
                .map(|(m, &c)| c * ((m + 1) as f64 * x / 8.0).sin())
                .sum::<f64>()
                * (-(x / 15.0) * (x / 15.0)).exp()
        });
        let h = GridFunction::from_fn(grid, |x| {
            c2.iter()
                .enumerate()
                .map(|(m, &c)| c * ((m + 1) as f64 * x / 7.0).cos())
                .sum::<f64>()
                * (-(x / 10.0) * (x / 10.0)).exp()
        });
        let prod = f.zip_with(&h, |a, b| a * b);
        prod_ratios.push(sobolev_norm(&prod, 3) / (xk_norm(&f, 3) * sobolev_norm(&h, 3)));
        let h2 = GridFunction::from_fn(grid, |x| {
            0.3 + c2
                .iter()
                .enumerate()
                .map(|(m, &c)| c * ((m + 1) as f64 * x / 9.0).cos())
                .sum::<f64>()
                * (-(x / 12.0) * (x / 12.0)).exp()
        });
        let prod2 = f.zip_with(&h2, |a, b| a * b);
        alg_ratios.push(xk_norm(&prod2, 3) / (xk_norm(&f, 3) * xk_norm(&h2, 3)));
    }
    let bounded = |ratios: &mut Vec<f64>| -> (bool, f64, f64) {
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        let max = *ratios.last().unwrap();
        (max < 10.0 * median, max, median)
    };
    let (prod_ok, pmax, pmed) = bounded(&mut prod_ratios);
    let (alg_ok, amax, amed) = bounded(&mut alg_ratios);

    let wall = start.elapsed().as_secs_f64();
    verdict(
        "09 lemma-suite",
        sample_ok && psum_ok && prod_ok && alg_ok && wall < 120.0,
        &format!(
            "sampling spread {spreads:.2}; partial-sum {psum_worst:.3} <= C {c_bound:.3}; products {pmax:.2}/{pmed:.2}, {amax:.2}/{amed:.2}; wall {wall:.1}s < 120s"
        ),
    );
}

#[test]
fn criterion_10_initial_data_exponent() {
    let mut pts = Vec::new();
    for &eps in &[0.2, 0.14, 0.1, 0.07, 0.05] {
        let grid = grid_for(eps);
        let f = BackgroundField::kink(grid, V);
        let a = AnsatzFields::new(
            eps,
            0.0,
            f,
            LocalizedField::zero(grid),
            PhiPsiField::zero(grid, 0.0),
        )
        .unwrap();
        let half = (60.0 / eps) as i64;
        let (state, _) = initial_lattice_state(&a, -half, half).unwrap();
        let u_err = l2_norm(&state.u.sub(&a.assemble_u(0.0, -half, half).unwrap()));
        assert_eq!(u_err, 0.0, "U(0) must vanish for sampled-ansatz data");
        let q_err = l2_norm(&state.q.sub(&a.assemble_q(0.0, -half, half).unwrap()));
        pts.push((eps, q_err));
    }
    let fit = fit_log_slope(&pts).unwrap();
    verdict(
        "10 initial-data-exponent",
        fit.slope >= 2.3,
        &format!("Q(0) slope {:.3} >= 2.3 over the default eps list", fit.slope),
    );
}
