//! Monte-Carlo estimation of SPRT cycle statistics and the closed
//! recursions built on them: per-visit sojourn means, the two-location ARL
//! fixed point, and the worst-case detection delay assembly with its
//! scenario-driven simulation oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::models::{DistributionModel, ModelStream, Regime};
use crate::seeding::{derive_seed, job_id, JobKind};
use crate::sim::{
    run_visit, run_visit_from, simulate_run_with_visits, Location, LocationConfig, Scenario,
    SimError, UavConfig, VisitEnd,
};
use crate::sprt::{self, Exit};
use crate::stats::{Estimate, KahanSum};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("need at least {min} replications, got {got}")]
    TooFewReps { min: u64, got: u64 },
    #[error("w = {0} is not a grid point; no extrapolation")]
    WOffGrid(f64),
    #[error("degenerate recursion: no alarm probability mass per visit")]
    DegenerateRecursion,
    #[error("bottom-exit probability {0} is not < 1")]
    BetaAtLeastOne(f64),
    #[error("{censored} of {reps} replications hit the horizon (> 1%): ARL estimate would be biased")]
    ExcessiveCensoring { censored: u64, reps: u64 },
    #[error("scenario episode exceeded {0} slots")]
    EpisodeTruncated(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sprt(#[from] sprt::SprtError),
}

/// Evenly spaced interior grid on (0, gamma): gamma * i / (size + 1).
pub fn make_w_grid(gamma: f64, size: usize) -> Vec<f64> {
    (1..=size)
        .map(|i| gamma * i as f64 / (size as f64 + 1.0))
        .collect()
}

/// Monte-Carlo cycle statistics of one location at one threshold: exit
/// probabilities and mean durations, fresh (w = 0) and from each grid start.
#[derive(Debug, Clone, Serialize)]
pub struct SprtStats {
    pub gamma: f64,
    /// P(top exit) from a fresh cycle under no change.
    pub psi_inf: Estimate,
    /// P(bottom exit) from a fresh cycle post-change.
    pub beta: Estimate,
    /// Mean fresh-cycle duration under no change.
    pub e_inf_t: Estimate,
    /// Mean fresh-cycle duration post-change.
    pub e0_t: Estimate,
    pub w_grid: Vec<f64>,
    pub psi_inf_w: Vec<Estimate>,
    pub e_inf_t_w: Vec<Estimate>,
    pub beta_w: Vec<Estimate>,
    pub e0_t_w: Vec<Estimate>,
}

impl SprtStats {
    fn grid_index(&self, w: f64) -> Result<usize, EstimatorError> {
        let tol = 1e-9 * self.gamma.max(1.0);
        self.w_grid
            .iter()
            .position(|&g| (g - w).abs() <= tol)
            .ok_or(EstimatorError::WOffGrid(w))
    }
}

struct CellResult {
    top_prob: Estimate,
    duration: Estimate,
}

fn run_cell(
    model: &dyn DistributionModel,
    regime: Regime,
    gamma: f64,
    w0: f64,
    reps: u64,
    seed: u64,
    job: u64,
) -> Result<CellResult, EstimatorError> {
    let mut tops = Vec::with_capacity(reps as usize);
    let mut durations = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, job, rep));
        let mut stream = ModelStream::new(model, rng);
        let out = sprt::run_cycle(&mut stream, regime, gamma, w0, sprt::DEFAULT_MAX_STEPS)?;
        tops.push(if out.exit == Exit::HitTop { 1.0 } else { 0.0 });
        durations.push(out.duration as f64);
    }
    Ok(CellResult {
        top_prob: Estimate::from_samples(&tops),
        duration: Estimate::from_samples(&durations),
    })
}

/// Estimate all cycle statistics by independent replications per regime and
/// per start value. Deterministic given (seed, reps, grid).
pub fn estimate_sprt_stats(
    model: &dyn DistributionModel,
    gamma: f64,
    w_grid: &[f64],
    reps: u64,
    seed: u64,
) -> Result<SprtStats, EstimatorError> {
    if reps < 100 {
        return Err(EstimatorError::TooFewReps {
            min: 100,
            got: reps,
        });
    }
    // Cell layout: (regime, start index) with index 0 = fresh start, i >= 1
    // the (i-1)-th grid point.
    let cells: Vec<(Regime, usize)> = [Regime::PreChange, Regime::PostChange]
        .into_iter()
        .flat_map(|r| (0..=w_grid.len()).map(move |i| (r, i)))
        .collect();
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(regime, i)| {
            let w0 = if i == 0 { 0.0 } else { w_grid[i - 1] };
            let regime_code = match regime {
                Regime::PreChange => 0,
                Regime::PostChange => 1,
            };
            run_cell(
                model,
                regime,
                gamma,
                w0,
                reps,
                seed,
                job_id(JobKind::SprtCycle, regime_code, i as u64),
            )
        })
        .collect::<Result<_, _>>()?;

    let g = w_grid.len();
    let (pre, post) = results.split_at(g + 1);
    Ok(SprtStats {
        gamma,
        psi_inf: pre[0].top_prob,
        e_inf_t: pre[0].duration,
        beta: Estimate {
            mean: 1.0 - post[0].top_prob.mean,
            ..post[0].top_prob
        },
        e0_t: post[0].duration,
        w_grid: w_grid.to_vec(),
        psi_inf_w: pre[1..].iter().map(|c| c.top_prob).collect(),
        e_inf_t_w: pre[1..].iter().map(|c| c.duration).collect(),
        beta_w: post[1..]
            .iter()
            .map(|c| Estimate {
                mean: 1.0 - c.top_prob.mean,
                ..c.top_prob
            })
            .collect(),
        e0_t_w: post[1..].iter().map(|c| c.duration).collect(),
    })
}

/// Sum_{k=0}^{n-1} r^k.
fn geom_sum(r: f64, n: u32) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for _ in 0..n {
        sum += term;
        term *= r;
    }
    sum
}

/// Mean sojourn of a full visit under no change:
/// sum_{k=1..n} (1 - psi)^{k-1} E(T).
pub fn mean_sojourn(stats: &SprtStats, n: u32) -> f64 {
    geom_sum(1.0 - stats.psi_inf.mean, n) * stats.e_inf_t.mean
}

/// Mean remaining sojourn entering the first cycle at w:
/// E(T^(w)) + (1 - psi^(w)) sum_{k=1..n-1} (1 - psi)^{k-1} E(T).
pub fn mean_remaining_sojourn(stats: &SprtStats, w: f64, n: u32) -> Result<f64, EstimatorError> {
    let i = stats.grid_index(w)?;
    Ok(remaining_sojourn_value(
        stats.e_inf_t_w[i].mean,
        stats.psi_inf_w[i].mean,
        stats.e_inf_t.mean,
        stats.psi_inf.mean,
        n,
    ))
}

fn remaining_sojourn_value(et_w: f64, psi_w: f64, et: f64, psi: f64, n: u32) -> f64 {
    et_w + (1.0 - psi_w) * geom_sum(1.0 - psi, n - 1) * et
}

/// Central-difference delta-method SE: propagate independent input SEs
/// through a smooth map of the input means.
fn delta_se<F: Fn(&[f64]) -> f64>(f: F, means: &[f64], ses: &[f64]) -> f64 {
    let mut var = 0.0;
    let mut xp = means.to_vec();
    let mut xm = means.to_vec();
    for i in 0..means.len() {
        if ses[i] == 0.0 {
            continue;
        }
        let h = (ses[i] * 1e-2).max(1e-12);
        xp[i] = means[i] + h;
        xm[i] = means[i] - h;
        let d = (f(&xp) - f(&xm)) / (2.0 * h);
        xp[i] = means[i];
        xm[i] = means[i];
        var += d * d * ses[i] * ses[i];
    }
    var.sqrt()
}

/// The two-location ARL fixed point solved exactly, with delta-method SEs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ArlRecursion {
    pub arl_a: f64,
    pub arl_b: f64,
    pub se_a: f64,
    pub se_b: f64,
}

fn arl_pair_value(
    psi_a: f64,
    et_a: f64,
    psi_b: f64,
    et_b: f64,
    n_a: u32,
    n_b: u32,
    tau: f64,
) -> (f64, f64) {
    let pbar_a = 1.0 - psi_a;
    let pbar_b = 1.0 - psi_b;
    let s_a = geom_sum(pbar_a, n_a) * et_a;
    let s_b = geom_sum(pbar_b, n_b) * et_b;
    let p_a = pbar_a.powi(n_a as i32);
    let p_b = pbar_b.powi(n_b as i32);
    let denom = 1.0 - p_a * p_b;
    let arl_a = (s_a + p_a * (tau + s_b + p_b * tau)) / denom;
    let arl_b = (s_b + p_b * (tau + s_a + p_a * tau)) / denom;
    (arl_a, arl_b)
}

/// Solve the pair of visit recursions
/// ARL_l = sum_{k=1..n_l} (1-psi_l)^{k-1} E(T_l) + (1-psi_l)^{n_l} (tau + ARL_l')
/// for both locations.
pub fn arl_recursion(
    stats_a: &SprtStats,
    stats_b: &SprtStats,
    n_a: u32,
    n_b: u32,
    tau: u32,
) -> Result<ArlRecursion, EstimatorError> {
    let psi_a = stats_a.psi_inf.mean;
    let psi_b = stats_b.psi_inf.mean;
    let p = (1.0 - psi_a).powi(n_a as i32) * (1.0 - psi_b).powi(n_b as i32);
    if p >= 1.0 {
        return Err(EstimatorError::DegenerateRecursion);
    }
    let means = [psi_a, stats_a.e_inf_t.mean, psi_b, stats_b.e_inf_t.mean];
    let ses = [
        stats_a.psi_inf.se,
        stats_a.e_inf_t.se,
        stats_b.psi_inf.se,
        stats_b.e_inf_t.se,
    ];
    let tau = tau as f64;
    let (arl_a, arl_b) = arl_pair_value(means[0], means[1], means[2], means[3], n_a, n_b, tau);
    let se_a = delta_se(
        |x| arl_pair_value(x[0], x[1], x[2], x[3], n_a, n_b, tau).0,
        &means,
        &ses,
    );
    let se_b = delta_se(
        |x| arl_pair_value(x[0], x[1], x[2], x[3], n_a, n_b, tau).1,
        &means,
        &ses,
    );
    Ok(ArlRecursion {
        arl_a,
        arl_b,
        se_a,
        se_b,
    })
}

/// Direct ARL measurement plus the per-run sojourn/energy aggregates the
/// renewal-reward energy estimate feeds on.
#[derive(Debug, Clone, Serialize)]
pub struct ArlEstimate {
    pub estimate: Estimate,
    /// Replications that hit the horizon without an alarm (excluded from the
    /// mean; more than 1% is an error).
    pub censored: u64,
    /// Ratio estimate of the mean sojourn per visit at each location, over
    /// completed and alarm-ended visits.
    pub sojourn_a: Estimate,
    pub sojourn_b: Estimate,
    pub energy_total: f64,
    pub slots_total: u64,
}

struct RunAggregate {
    alarm_time: Option<u64>,
    soj: [(f64, f64); 2], // (slot sum, visit count) per location
    energy: f64,
    slots: u64,
}

/// Ratio-of-means estimate R = sum a / sum b over replications, with the
/// usual linearization SE.
fn ratio_estimate(pairs: &[(f64, f64)]) -> Estimate {
    let n = pairs.len();
    let mut sa = KahanSum::new();
    let mut sb = KahanSum::new();
    for &(a, b) in pairs {
        sa.add(a);
        sb.add(b);
    }
    let r = sa.value() / sb.value();
    let mut dev = KahanSum::new();
    for &(a, b) in pairs {
        let d = a - r * b;
        dev.add(d * d);
    }
    let var = dev.value() * n as f64 / (n as f64 - 1.0) / (sb.value() * sb.value());
    Estimate {
        mean: r,
        se: var.sqrt(),
        reps: n as u64,
    }
}

/// Mean alarm time over no-change replications started at `start`.
pub fn estimate_arl(
    loc_a: &LocationConfig,
    loc_b: &LocationConfig,
    uav: &UavConfig,
    start: Location,
    reps: u64,
    seed: u64,
    horizon: u64,
) -> Result<ArlEstimate, EstimatorError> {
    if reps < 100 {
        return Err(EstimatorError::TooFewReps {
            min: 100,
            got: reps,
        });
    }
    let start_code = match start {
        Location::A => 0,
        Location::B => 1,
    };
    let job = job_id(JobKind::ArlRun, start_code, 0);
    let scenario = Scenario::never_never();
    let aggregates: Vec<RunAggregate> = (0..reps)
        .into_par_iter()
        .map_init(
            Vec::new,
            |visits, rep| -> Result<RunAggregate, EstimatorError> {
                visits.clear();
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, job, rep));
                let r = simulate_run_with_visits(
                    loc_a, loc_b, uav, &scenario, start, &mut rng, horizon, visits,
                )?;
                let mut soj = [(0.0, 0.0); 2];
                for v in visits.iter() {
                    if v.end == VisitEnd::Horizon {
                        continue;
                    }
                    let i = match v.location {
                        Location::A => 0,
                        Location::B => 1,
                    };
                    soj[i].0 += v.hover_slots as f64;
                    soj[i].1 += 1.0;
                }
                Ok(RunAggregate {
                    alarm_time: r.alarm_time,
                    soj,
                    energy: r.energy,
                    slots: r.hover_slots + r.travel_slots,
                })
            },
        )
        .collect::<Result<_, _>>()?;

    let censored = aggregates.iter().filter(|a| a.alarm_time.is_none()).count() as u64;
    if censored * 100 > reps {
        return Err(EstimatorError::ExcessiveCensoring { censored, reps });
    }
    let times: Vec<f64> = aggregates
        .iter()
        .filter_map(|a| a.alarm_time.map(|t| t as f64))
        .collect();
    let pairs_a: Vec<(f64, f64)> = aggregates.iter().map(|a| a.soj[0]).collect();
    let pairs_b: Vec<(f64, f64)> = aggregates.iter().map(|a| a.soj[1]).collect();
    let mut energy = KahanSum::new();
    let mut slots = 0u64;
    for a in &aggregates {
        energy.add(a.energy);
        slots += a.slots;
    }
    Ok(ArlEstimate {
        estimate: Estimate::from_samples(&times),
        censored,
        sojourn_a: ratio_estimate(&pairs_a),
        sojourn_b: ratio_estimate(&pairs_b),
        energy_total: energy.value(),
        slots_total: slots,
    })
}

/// Worst-case delay assembly: max{S1, S2} plus the post-change detection
/// tail, with the full-reset recursion folded in. Components are kept so the
/// total can be recomposed exactly.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WaddBreakdown {
    /// 2 tau + mean sojourn at the other location.
    pub s1: f64,
    /// tau + sup over the w grid of the mean remaining sojourn; -inf when
    /// the grid is empty.
    pub s2: f64,
    /// Grid argmax behind S2.
    pub w_star: Option<f64>,
    /// sum_{k=1..n} beta^{k-1} E0(T).
    pub detection_sum: f64,
    pub beta_pow_n: f64,
    /// Full-reset recursion value.
    pub tilde_wadd: f64,
    pub total: f64,
    /// Delta-method SE propagated from the cycle-statistic estimates.
    pub se: f64,
}

#[allow(clippy::too_many_arguments)]
fn wadd_value(
    beta: f64,
    e0t: f64,
    psi_lp: f64,
    et_lp: f64,
    w_cell: Option<(f64, f64)>, // (E(T^(w*)), psi^(w*)) with w* held fixed
    n_l: u32,
    n_lp: u32,
    tau: f64,
) -> (f64, f64, f64, f64, f64) {
    let soj_lp = geom_sum(1.0 - psi_lp, n_lp) * et_lp;
    let s1 = 2.0 * tau + soj_lp;
    let s2 = match w_cell {
        Some((et_w, psi_w)) => {
            tau + remaining_sojourn_value(et_w, psi_w, et_lp, psi_lp, n_lp)
        }
        None => f64::NEG_INFINITY,
    };
    let detection_sum = geom_sum(beta, n_l) * e0t;
    let beta_pow_n = beta.powi(n_l as i32);
    let tilde = (2.0 * tau + soj_lp + detection_sum) / (1.0 - beta_pow_n);
    let total = s1.max(s2) + detection_sum + beta_pow_n * tilde;
    (total, s1, s2, detection_sum, tilde)
}

/// Assemble the worst-case delay for a change at location l from cycle
/// statistics of l (post-change side) and of the other location l' (no-change
/// side, including its w grid).
pub fn compute_wadd(
    stats_l: &SprtStats,
    stats_lp: &SprtStats,
    n_l: u32,
    n_lp: u32,
    tau: u32,
) -> Result<WaddBreakdown, EstimatorError> {
    let beta = stats_l.beta.mean;
    if beta.is_nan() || beta >= 1.0 {
        return Err(EstimatorError::BetaAtLeastOne(beta));
    }
    let tau = tau as f64;

    // Locate the S2 argmax over the grid first; derivatives are taken with
    // the argmax held fixed.
    let mut best: Option<(usize, f64)> = None;
    for i in 0..stats_lp.w_grid.len() {
        let rem = remaining_sojourn_value(
            stats_lp.e_inf_t_w[i].mean,
            stats_lp.psi_inf_w[i].mean,
            stats_lp.e_inf_t.mean,
            stats_lp.psi_inf.mean,
            n_lp,
        );
        if best.is_none_or(|(_, b)| rem > b) {
            best = Some((i, rem));
        }
    }

    let w_cell = best.map(|(i, _)| {
        (
            stats_lp.e_inf_t_w[i].mean,
            stats_lp.psi_inf_w[i].mean,
        )
    });
    let (total, s1, s2, detection_sum, tilde) = wadd_value(
        beta,
        stats_l.e0_t.mean,
        stats_lp.psi_inf.mean,
        stats_lp.e_inf_t.mean,
        w_cell,
        n_l,
        n_lp,
        tau,
    );

    let (cell_means, cell_ses) = match best {
        Some((i, _)) => (
            [stats_lp.e_inf_t_w[i].mean, stats_lp.psi_inf_w[i].mean],
            [stats_lp.e_inf_t_w[i].se, stats_lp.psi_inf_w[i].se],
        ),
        None => ([0.0, 0.0], [0.0, 0.0]),
    };
    let means = [
        beta,
        stats_l.e0_t.mean,
        stats_lp.psi_inf.mean,
        stats_lp.e_inf_t.mean,
        cell_means[0],
        cell_means[1],
    ];
    let ses = [
        stats_l.beta.se,
        stats_l.e0_t.se,
        stats_lp.psi_inf.se,
        stats_lp.e_inf_t.se,
        cell_ses[0],
        cell_ses[1],
    ];
    let has_cell = best.is_some();
    let se = delta_se(
        |x| {
            let cell = if has_cell { Some((x[4], x[5])) } else { None };
            wadd_value(x[0], x[1], x[2], x[3], cell, n_l, n_lp, tau).0
        },
        &means,
        &ses,
    );

    Ok(WaddBreakdown {
        s1,
        s2,
        w_star: best.map(|(i, _)| stats_lp.w_grid[i]),
        detection_sum,
        beta_pow_n: beta.powi(n_l as i32),
        tilde_wadd: tilde,
        total,
        se,
    })
}

/// Sensor state at the change instant for the scenario-driven delay oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaddScenario {
    /// Departed the changed location exactly at the change instant.
    JustDeparted,
    /// At the other location in its first cycle with statistic w.
    AtOtherWithW(f64),
    /// At the changed location in the middle of the m-th cycle (1-based)
    /// with statistic w.
    AtChangedWithW { m: u32, w: f64 },
}

const EPISODE_SLOT_GUARD: u64 = 100_000_000;

fn episode_delay(
    kind: WaddScenario,
    loc_changed: &LocationConfig,
    loc_other: &LocationConfig,
    tau: u64,
    rng: &mut ChaCha8Rng,
) -> Result<u64, EstimatorError> {
    use rand::Rng;
    let mut stream_c = ModelStream::new(
        loc_changed.model.as_ref(),
        ChaCha8Rng::seed_from_u64(rng.gen()),
    );
    let mut stream_o = ModelStream::new(
        loc_other.model.as_ref(),
        ChaCha8Rng::seed_from_u64(rng.gen()),
    );
    let mut t: u64 = 0;
    // Opening leg: bring the sensor to the start of a fresh attempt sequence
    // at the changed location. An alarm at the unchanged location ends that
    // visit and the sensor moves on.
    match kind {
        WaddScenario::JustDeparted => {
            t += tau;
            let v = run_visit(
                &mut stream_o,
                Regime::PreChange,
                loc_other.gamma,
                loc_other.n,
                sprt::DEFAULT_MAX_STEPS,
            )?;
            t += v.slots;
            t += tau;
        }
        WaddScenario::AtOtherWithW(w) => {
            let v = run_visit_from(
                &mut stream_o,
                Regime::PreChange,
                loc_other.gamma,
                loc_other.n,
                1,
                w,
                sprt::DEFAULT_MAX_STEPS,
            )?;
            t += v.slots;
            t += tau;
        }
        WaddScenario::AtChangedWithW { m, w } => {
            let v = run_visit_from(
                &mut stream_c,
                Regime::PostChange,
                loc_changed.gamma,
                loc_changed.n,
                m,
                w,
                sprt::DEFAULT_MAX_STEPS,
            )?;
            t += v.slots;
            if v.alarmed {
                return Ok(t);
            }
            t += tau;
            let v = run_visit(
                &mut stream_o,
                Regime::PreChange,
                loc_other.gamma,
                loc_other.n,
                sprt::DEFAULT_MAX_STEPS,
            )?;
            t += v.slots;
            t += tau;
        }
    }
    // Repeated attempts at the changed location, with a full round trip to
    // the other location after every n consecutive resets.
    loop {
        let v = run_visit(
            &mut stream_c,
            Regime::PostChange,
            loc_changed.gamma,
            loc_changed.n,
            sprt::DEFAULT_MAX_STEPS,
        )?;
        t += v.slots;
        if v.alarmed {
            return Ok(t);
        }
        t += tau;
        let v = run_visit(
            &mut stream_o,
            Regime::PreChange,
            loc_other.gamma,
            loc_other.n,
            sprt::DEFAULT_MAX_STEPS,
        )?;
        t += v.slots;
        t += tau;
        if t > EPISODE_SLOT_GUARD {
            return Err(EstimatorError::EpisodeTruncated(EPISODE_SLOT_GUARD));
        }
    }
}

/// Direct Monte-Carlo of the post-change detection delay from the given
/// sensor state at the change instant. This is the oracle `compute_wadd` is
/// checked against.
pub fn simulate_wadd_scenario(
    kind: WaddScenario,
    loc_changed: &LocationConfig,
    loc_other: &LocationConfig,
    tau: u32,
    reps: u64,
    seed: u64,
) -> Result<Estimate, EstimatorError> {
    if reps < 100 {
        return Err(EstimatorError::TooFewReps {
            min: 100,
            got: reps,
        });
    }
    let kind_code = match kind {
        WaddScenario::JustDeparted => 0,
        WaddScenario::AtOtherWithW(_) => 1,
        WaddScenario::AtChangedWithW { .. } => 2,
    };
    let job = job_id(JobKind::WaddScenario, kind_code, 0);
    let delays: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, job, rep));
            episode_delay(kind, loc_changed, loc_other, tau as u64, &mut rng).map(|d| d as f64)
        })
        .collect::<Result<_, _>>()?;
    Ok(Estimate::from_samples(&delays))
}

/// Point estimates for one parameter tuple, as emitted by the estimate
/// command: ARLs, delay assemblies with their component breakdowns, energy
/// rate, and the constraint classification.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsEstimate {
    pub arl_a: Estimate,
    pub arl_b: Estimate,
    pub censored_a: u64,
    pub censored_b: u64,
    pub wadd_a: WaddBreakdown,
    pub wadd_b: WaddBreakdown,
    pub energy_rate: Estimate,
    pub feasible: crate::sweep::FeasibilityClass,
}

impl MetricsEstimate {
    /// Flat estimate table: quantity, location, mean, se, reps, seed.
    pub fn write_csv(&self, seed: u64, out: &mut impl std::io::Write) -> std::io::Result<()> {
        use crate::sweep::fmt_float;
        writeln!(out, "quantity,location,mean,se,reps,seed")?;
        let mut row = |q: &str, loc: &str, e: &Estimate| {
            writeln!(
                out,
                "{q},{loc},{},{},{},{seed}",
                fmt_float(e.mean),
                fmt_float(e.se),
                e.reps
            )
        };
        row("arl", "A", &self.arl_a)?;
        row("arl", "B", &self.arl_b)?;
        row(
            "wadd",
            "A",
            &Estimate {
                mean: self.wadd_a.total,
                se: self.wadd_a.se,
                reps: 0,
            },
        )?;
        row(
            "wadd",
            "B",
            &Estimate {
                mean: self.wadd_b.total,
                se: self.wadd_b.se,
                reps: 0,
            },
        )?;
        row("energy_rate", "", &self.energy_rate)?;
        Ok(())
    }
}
