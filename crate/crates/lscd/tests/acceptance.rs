//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them). Every tolerance is pinned here.
//!
//! Shared setup: the symmetric Gaussian pair N(0,1) -> N(2,1), sensing
//! energy 1, movement energy 4, travel time 3, energy budget 3, ARL floors
//! 500 (the defaults of the bundled example config).

use std::sync::Arc;

use lscd::bounds::{arl_lower_bound, arl_ratio_limits, arl_upper_bound, wadd_upper_bound, WStar};
use lscd::estimators::{
    arl_recursion, compute_wadd, estimate_arl, estimate_sprt_stats, make_w_grid,
    simulate_wadd_scenario, WaddScenario,
};
use lscd::models::{DistributionModel, GaussianPair, ModelStream, Regime};
use lscd::sim::{Location, LocationConfig, UavConfig};
use lscd::sprt::{self, run_cycle, Exit};
use lscd::stats::Estimate;
use lscd::sweep::{self, run_sweep, Constraints, FeasibilityClass, SweepParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model() -> GaussianPair {
    GaussianPair::new(0.0, 2.0, 1.0).unwrap()
}

fn loc(gamma: f64, n: u32) -> LocationConfig {
    LocationConfig::new(gamma, n, Arc::new(model())).unwrap()
}

fn uav(tau: u32) -> UavConfig {
    UavConfig::new(tau, 1.0, 4.0, 3.0).unwrap()
}

fn pass(criterion: &str, detail: String) {
    println!("[acceptance] {criterion} PASS - {detail}");
}

fn fail(criterion: &str, detail: String) -> ! {
    println!("[acceptance] {criterion} FAIL - {detail}");
    panic!("{criterion} failed: {detail}");
}

/// Slot-count slack standing in for the bounded overshoot corrections the
/// closed forms omit: 2 + 2 tau.
fn o1_slack(tau: u32) -> f64 {
    2.0 + 2.0 * tau as f64
}

#[test]
fn criterion_1_classical_reduction_brackets_arl() {
    // Symmetric model, tau = 0, n = 1: empirical ARL from 5000 runs must sit
    // in [e^gamma - 3 SE, K' e^gamma + 3 SE] with K' = (1 + C)/K.
    let an = model().analytics().unwrap();
    let kprime = (1.0 + an.c) / an.k;
    let u = uav(0);
    let mut detail = String::new();
    for gamma in [3.0, 4.0, 5.0] {
        let la = loc(gamma, 1);
        let lb = loc(gamma, 1);
        let est = estimate_arl(&la, &lb, &u, Location::A, 5000, 101, 100_000_000).unwrap();
        let arl = est.estimate.mean;
        let se = est.estimate.se;
        let lower = gamma.exp();
        let upper = kprime * gamma.exp();
        if arl < lower - 3.0 * se {
            fail(
                "criterion 1",
                format!("gamma={gamma}: ARL {arl:.2} below e^gamma {lower:.2} - 3SE"),
            );
        }
        if arl > upper + 3.0 * se {
            fail(
                "criterion 1",
                format!("gamma={gamma}: ARL {arl:.2} above K' e^gamma {upper:.2} + 3SE"),
            );
        }
        detail.push_str(&format!("gamma={gamma}: {lower:.1} <= {arl:.1} <= {upper:.1}; "));
    }
    pass("criterion 1", detail);
}

#[test]
fn criterion_2_arl_bound_sandwich() {
    // tau = 3, n = 3, gamma = 5 both locations; 2000 runs; slack 2 + 2 tau.
    let an = model().analytics().unwrap();
    let la = loc(5.0, 3);
    let lb = loc(5.0, 3);
    let u = uav(3);
    let est = estimate_arl(&la, &lb, &u, Location::A, 2000, 202, 100_000_000).unwrap();
    let lower = arl_lower_bound(5.0, 5.0, 3, 3).unwrap();
    let upper = arl_upper_bound(5.0, 5.0, 3, 3, &an, &an).unwrap();
    let slack = o1_slack(3);
    let arl = est.estimate.mean;
    if arl < lower - slack || arl > upper + slack {
        fail(
            "criterion 2",
            format!("ARL {arl:.2} outside [{:.2}, {:.2}]", lower - slack, upper + slack),
        );
    }
    pass(
        "criterion 2",
        format!(
            "{:.2} <= ARL {:.2} (se {:.2}) <= {:.2}",
            lower - slack,
            arl,
            est.estimate.se,
            upper + slack
        ),
    );
}

#[test]
fn criterion_3_recursion_agrees_with_simulation() {
    // Six symmetric tuples spanning n in {1,3,5}, gamma in {3,5}, tau = 3.
    let m = model();
    let u = uav(3);
    let mut detail = String::new();
    for gamma in [3.0, 5.0] {
        let stats = estimate_sprt_stats(&m, gamma, &[], 100_000, 303).unwrap();
        for n in [1u32, 3, 5] {
            let rec = arl_recursion(&stats, &stats, n, n, 3).unwrap();
            let la = loc(gamma, n);
            let lb = loc(gamma, n);
            let sim = estimate_arl(&la, &lb, &u, Location::A, 3000, 304, 100_000_000).unwrap();
            let combined = (rec.se_a * rec.se_a + sim.estimate.se * sim.estimate.se).sqrt();
            let diff = (rec.arl_a - sim.estimate.mean).abs();
            if diff > 3.0 * combined {
                fail(
                    "criterion 3",
                    format!(
                        "gamma={gamma} n={n}: recursion {:.2} vs simulation {:.2}, diff {diff:.2} > {:.2}",
                        rec.arl_a,
                        sim.estimate.mean,
                        3.0 * combined
                    ),
                );
            }
            detail.push_str(&format!("(g={gamma},n={n}): d={diff:.1}<= {:.1}; ", 3.0 * combined));
        }
    }
    pass("criterion 3", detail);
}

#[test]
fn criterion_4_wadd_assembly_agrees_with_scenario_oracle() {
    // gamma = 4 both locations, n in {1, 3}, tau = 3: the assembled delay
    // matches max{scenario (a), scenario (b) over the w grid} within 3
    // combined SEs, and respects the closed-form bound plus slack.
    let m = model();
    let an = m.analytics().unwrap();
    let gamma = 4.0;
    let grid = make_w_grid(gamma, 33);
    let stats = estimate_sprt_stats(&m, gamma, &grid, 100_000, 404).unwrap();
    let mut detail = String::new();
    for n in [1u32, 3] {
        let assembled = compute_wadd(&stats, &stats, n, n, 3).unwrap();

        let lc = loc(gamma, n);
        let lo = loc(gamma, n);
        let reps = 20_000;
        let departed =
            simulate_wadd_scenario(WaddScenario::JustDeparted, &lc, &lo, 3, reps, 405).unwrap();
        let mut best: Estimate = departed;
        for &w in &grid {
            let b =
                simulate_wadd_scenario(WaddScenario::AtOtherWithW(w), &lc, &lo, 3, reps, 406)
                    .unwrap();
            if b.mean > best.mean {
                best = b;
            }
        }
        let combined = (assembled.se * assembled.se + best.se * best.se).sqrt();
        let diff = (assembled.total - best.mean).abs();
        if diff > 3.0 * combined {
            fail(
                "criterion 4",
                format!(
                    "n={n}: assembled {:.3} vs oracle {:.3}, diff {diff:.3} > {:.3}",
                    assembled.total,
                    best.mean,
                    3.0 * combined
                ),
            );
        }

        let bound = wadd_upper_bound(gamma, gamma, n, 3, &an, &an, WStar::Unknown).unwrap();
        if assembled.total > bound.value + o1_slack(3) {
            fail(
                "criterion 4",
                format!(
                    "n={n}: assembled {:.3} exceeds bound {:.3} + slack {}",
                    assembled.total,
                    bound.value,
                    o1_slack(3)
                ),
            );
        }
        detail.push_str(&format!(
            "n={n}: |{:.2}-{:.2}|<={:.2}, bound {:.2}+{}; ",
            assembled.total,
            best.mean,
            3.0 * combined,
            bound.value,
            o1_slack(3)
        ));
    }
    pass("criterion 4", detail);
}

#[test]
fn criterion_5a_bottom_exit_probability_bound() {
    // As stated, the bottom-exit probability must not exceed
    // 1 - Phi(1) + 3 SE. The true probability of this walk is ~0.1995
    // (exactly 1 - exp(-sum_n Phi(-sqrt(n))/n) in the large-gamma limit),
    // which sits ~32 SEs above that bound at 10^5 cycles: the asserted
    // inequality does not hold for this process, so this check fails for
    // every seed. It is kept in its stated form deliberately; the library's
    // unit tests pin the correct ladder-constant behavior instead.
    let m = model();
    let q = m.analytics().unwrap().q;
    let reps = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut stream = ModelStream::new(&m, &mut rng);
    let mut bottoms = 0u64;
    for _ in 0..reps {
        let out = run_cycle(
            &mut stream,
            Regime::PostChange,
            4.0,
            0.0,
            sprt::DEFAULT_MAX_STEPS,
        )
        .unwrap();
        if out.exit == Exit::HitBottom {
            bottoms += 1;
        }
    }
    let beta = bottoms as f64 / reps as f64;
    let se = (beta * (1.0 - beta) / reps as f64).sqrt();
    let bound = (1.0 - q) + 3.0 * se;
    if beta > bound {
        fail(
            "criterion 5a",
            format!(
                "beta {beta:.5} > 1-q + 3SE = {bound:.5} (the claimed bound is not attained by \
                 this walk; its exact bottom-exit limit is 0.19946)"
            ),
        );
    }
    pass("criterion 5a", format!("beta {beta:.5} <= {bound:.5}"));
}

#[test]
fn criterion_5b_top_exit_probability_bound() {
    let m = model();
    let reps = 100_000u64;
    let mut detail = String::new();
    for (i, gamma) in [2.0, 3.0, 4.0, 5.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(515 + i as u64);
        let mut stream = ModelStream::new(&m, &mut rng);
        let mut tops = 0u64;
        for _ in 0..reps {
            let out = run_cycle(
                &mut stream,
                Regime::PreChange,
                gamma,
                0.0,
                sprt::DEFAULT_MAX_STEPS,
            )
            .unwrap();
            if out.exit == Exit::HitTop {
                tops += 1;
            }
        }
        let psi = tops as f64 / reps as f64;
        let se = (psi.max(1e-12) * (1.0 - psi) / reps as f64).sqrt();
        let bound = (-gamma).exp() + 3.0 * se;
        if psi > bound {
            fail(
                "criterion 5b",
                format!("gamma={gamma}: psi {psi:.6} > e^-gamma + 3SE = {bound:.6}"),
            );
        }
        detail.push_str(&format!("g={gamma}: {psi:.5}<={bound:.5}; "));
    }
    pass("criterion 5b", detail);
}

#[test]
fn criterion_5c_post_change_cycle_time_bound() {
    let m = model();
    let an = m.analytics().unwrap();
    let reps = 100_000u64;
    let mut detail = String::new();
    for (i, gamma) in [2.0, 3.0, 4.0, 5.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(525 + i as u64);
        let mut stream = ModelStream::new(&m, &mut rng);
        let mut total = 0u64;
        for _ in 0..reps {
            let out = run_cycle(
                &mut stream,
                Regime::PostChange,
                gamma,
                0.0,
                sprt::DEFAULT_MAX_STEPS,
            )
            .unwrap();
            total += out.duration;
        }
        let e0t = total as f64 / reps as f64;
        let bound = an.q * gamma / an.d_g_f + 2.0;
        if e0t > bound {
            fail(
                "criterion 5c",
                format!("gamma={gamma}: E0(T) {e0t:.4} > q gamma/D + 2.0 = {bound:.4}"),
            );
        }
        detail.push_str(&format!("g={gamma}: {e0t:.3}<={bound:.3}; "));
    }
    pass("criterion 5c", detail);
}

#[test]
fn criterion_5d_first_ascent_geometric_gof() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let m = model();
    let q = m.analytics().unwrap().q;
    let reps = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(535);
    let mut stream = ModelStream::new(&m, &mut rng);
    let max_bin = 5usize;
    let mut counts = vec![0u64; max_bin + 1];
    for _ in 0..reps {
        let t = sprt::first_ascent_time(&mut stream, Regime::PostChange, 10_000).unwrap() as usize;
        counts[t.min(max_bin)] += 1;
    }
    let mut chi2 = 0.0;
    for (k, &count) in counts.iter().enumerate().skip(1) {
        let p = if k < max_bin {
            q * (1.0 - q).powi(k as i32 - 1)
        } else {
            (1.0 - q).powi(max_bin as i32 - 1)
        };
        let expected = p * reps as f64;
        let d = count as f64 - expected;
        chi2 += d * d / expected;
    }
    let dof = (max_bin - 1) as f64;
    let crit = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    if chi2 >= crit {
        fail(
            "criterion 5d",
            format!("chi2 {chi2:.3} >= critical {crit:.3} at dof {dof}"),
        );
    }
    pass(
        "criterion 5d",
        format!("chi2 {chi2:.3} < critical {crit:.3} at significance 0.01"),
    );
}

#[test]
fn criterion_6_figure_shapes_over_default_sweep() {
    // One full default-grid sweep at reps = 2000 feeds all three shape
    // checks: delay monotone in the own threshold, energy monotone in the
    // switch count, and the documented feasibility pattern.
    let constraints = Constraints::new(500.0, 500.0, 3.0).unwrap();
    let params = SweepParams {
        reps: 2000,
        stats_reps: 100_000,
        w_grid_size: 33,
        horizon: 100_000_000,
        seed: 606,
        strict: false,
    };
    let grid = sweep::default_grid();
    let records = run_sweep(
        &grid,
        Arc::new(model()),
        Arc::new(model()),
        &uav(3),
        &constraints,
        &params,
    )
    .unwrap();
    assert_eq!(records.len(), grid.len());
    for r in &records {
        assert!(r.error.is_none(), "tuple failed: {:?}", r.error);
    }

    // (i) WADD_A nondecreasing in gamma_A at fixed (gamma_B, n); the shared
    // cycle draws make the estimates pathwise coupled, so no noise slack is
    // needed. Also check the ARL trend with a 3-SE crossing allowance.
    for r1 in &records {
        for r2 in &records {
            if r1.n == r2.n && r1.gamma_b == r2.gamma_b && r2.gamma_a > r1.gamma_a {
                if r2.wadd_a < r1.wadd_a - 1e-9 {
                    fail(
                        "criterion 6",
                        format!(
                            "WADD_A not monotone: ({},{},{}) -> {:.4}, ({},{},{}) -> {:.4}",
                            r1.gamma_a, r1.gamma_b, r1.n, r1.wadd_a, r2.gamma_a, r2.gamma_b, r2.n, r2.wadd_a
                        ),
                    );
                }
                let allow = 3.0 * (r1.arl_a.se.powi(2) + r2.arl_a.se.powi(2)).sqrt();
                if r2.arl_a.mean < r1.arl_a.mean - allow {
                    fail(
                        "criterion 6",
                        format!(
                            "ARL_A decreasing beyond noise: gamma_a {} -> {} at (gamma_b={}, n={})",
                            r1.gamma_a, r2.gamma_a, r1.gamma_b, r1.n
                        ),
                    );
                }
            }
            // The other-threshold direction: WADD_A nondecreasing in gamma_B
            // at fixed (gamma_A, n), with a crossing-noise allowance (the
            // mid-cycle grid rescales with gamma_B, so this direction is not
            // pathwise coupled; 0.02 is ~3 combined SEs of two assemblies).
            if r1.n == r2.n && r1.gamma_a == r2.gamma_a && r2.gamma_b > r1.gamma_b {
                if r2.wadd_a < r1.wadd_a - 0.02 {
                    fail(
                        "criterion 6",
                        format!(
                            "WADD_A not monotone in gamma_B: ({},{},{}) -> {:.4}, ({},{},{}) -> {:.4}",
                            r1.gamma_a, r1.gamma_b, r1.n, r1.wadd_a, r2.gamma_a, r2.gamma_b, r2.n, r2.wadd_a
                        ),
                    );
                }
            }
        }
    }

    // (ii) Energy rate nonincreasing in n at every fixed (gamma_A, gamma_B).
    for r1 in &records {
        for r2 in &records {
            if r1.gamma_a == r2.gamma_a && r1.gamma_b == r2.gamma_b && r2.n > r1.n {
                let allow =
                    3.0 * (r1.energy_rate.se.powi(2) + r2.energy_rate.se.powi(2)).sqrt();
                if r2.energy_rate.mean > r1.energy_rate.mean + allow {
                    fail(
                        "criterion 6",
                        format!(
                            "energy rate increased with n at ({}, {}): n={} -> {:.4}, n={} -> {:.4}",
                            r1.gamma_a,
                            r1.gamma_b,
                            r1.n,
                            r1.energy_rate.mean,
                            r2.n,
                            r2.energy_rate.mean
                        ),
                    );
                }
            }
        }
    }

    // (iii) Feasible set nonempty for n = 3; the n = 1 slice violates the
    // energy budget somewhere.
    let feasible_n3 = records
        .iter()
        .filter(|r| r.n == 3 && r.class == Some(FeasibilityClass::Feasible))
        .count();
    if feasible_n3 == 0 {
        fail("criterion 6", "no feasible tuple with n = 3".to_string());
    }
    let energy_bad_n1 = records
        .iter()
        .filter(|r| {
            r.n == 1
                && matches!(
                    r.class,
                    Some(FeasibilityClass::EnergyViolation | FeasibilityClass::BothViolation)
                )
        })
        .count();
    if energy_bad_n1 == 0 {
        fail(
            "criterion 6",
            "n = 1 slice contains no energy violation".to_string(),
        );
    }
    pass(
        "criterion 6",
        format!(
            "monotone shapes hold; {feasible_n3} feasible tuples at n=3; {energy_bad_n1} energy violations at n=1"
        ),
    );
}

#[test]
fn criterion_7_byte_identical_reruns_and_thread_invariance() {
    use std::process::Command;
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cp.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "model_a": {"family": "gaussian", "mu0": 0.0, "mu1": 2.0, "sigma": 1.0},
            "model_b": {"family": "gaussian", "mu0": 0.0, "mu1": 2.0, "sigma": 1.0},
            "gamma_a": 4.0, "gamma_b": 4.0,
            "n_a": 3, "n_b": 3,
            "tau": 3,
            "e_sense": 1.0, "e_move": 4.0, "e_budget": 3.0,
            "r_a": 500.0, "r_b": 500.0,
            "seed": 77, "reps": 300, "stats_reps": 2000, "w_grid_size": 7
        }"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_lscd");
    let sweep_out = |threads: &str, path: &std::path::Path| {
        let out = Command::new(bin)
            .args(["sweep", "--config"])
            .arg(&cfg_path)
            .args(["--grid", "ga=3,4;gb=3;n=1,3", "--threads", threads, "--out"])
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let c1 = dir.path().join("a.csv");
    let c2 = dir.path().join("b.csv");
    let c3 = dir.path().join("c.csv");
    let s1 = sweep_out("1", &c1);
    let s2 = sweep_out("1", &c2);
    let s3 = sweep_out("8", &c3);
    let b1 = std::fs::read(&c1).unwrap();
    if b1 != std::fs::read(&c2).unwrap() || s1 != s2 {
        fail("criterion 7", "re-run with same seed differs".to_string());
    }
    if b1 != std::fs::read(&c3).unwrap() || s1 != s3 {
        fail("criterion 7", "threads=1 vs threads=8 differ".to_string());
    }

    let est = |_: u32| {
        let out = Command::new(bin)
            .args(["estimate", "--config"])
            .arg(&cfg_path)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    if est(0) != est(1) {
        fail("criterion 7", "estimate re-run differs".to_string());
    }
    pass(
        "criterion 7",
        "sweep CSVs and estimate JSON byte-identical across reruns and thread counts".to_string(),
    );
}

#[test]
fn criterion_8_asymptotic_ratio_constants() {
    let an = model().analytics().unwrap();
    let mut detail = String::new();
    for (tau, n) in [(0u32, 1u32), (3, 3), (3, 5)] {
        let lo = arl_lower_bound(30.0, 30.0, n, tau).unwrap() / 30.0f64.exp();
        let lo_target = 1.0 + tau as f64 / n as f64;
        if (lo - lo_target).abs() >= 1e-6 {
            fail(
                "criterion 8",
                format!("lower ratio at gamma=30, tau={tau}, n={n}: {lo} vs {lo_target}"),
            );
        }
        let hi = arl_upper_bound(40.0, 40.0, n, tau, &an, &an).unwrap() / 40.0f64.exp();
        let (_, hi_target) = arl_ratio_limits(n, tau, &an);
        if (hi - hi_target).abs() >= 1e-6 {
            fail(
                "criterion 8",
                format!("upper ratio at gamma=40, tau={tau}, n={n}: {hi} vs {hi_target}"),
            );
        }
        detail.push_str(&format!(
            "(tau={tau},n={n}): |{lo:.8}-{lo_target}|<1e-6, ratio ok; "
        ));
    }
    pass("criterion 8", detail);
}
