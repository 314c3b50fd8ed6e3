//! Grid search over (gamma_a, gamma_b, n): constraint checking, feasibility
//! classification, and the objective max{WADD_A, WADD_B}.
//!
//! ARLs and energy come from no-change simulation; the delays come from the
//! cycle-statistic assembly. One record per tuple, ordered by grid index,
//! deterministic given the seed.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::estimators::{
    compute_wadd, estimate_arl, estimate_sprt_stats, make_w_grid, EstimatorError, MetricsEstimate,
    SprtStats,
};
use crate::models::DistributionModel;
use crate::sim::{energy_rate, Location, LocationConfig, SimError, UavConfig};
use crate::stats::Estimate;

/// Design-problem constraints: ARL floors and the energy-rate ceiling.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constraints {
    pub r_a: f64,
    pub r_b: f64,
    pub e_bar: f64,
}

impl Constraints {
    pub fn new(r_a: f64, r_b: f64, e_bar: f64) -> Result<Self, SimError> {
        for (name, v) in [("r_a", r_a), ("r_b", r_b), ("e_bar", e_bar)] {
            if v.is_nan() || v <= 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Constraints { r_a, r_b, e_bar })
    }
}

/// Which constraints a tuple violates, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityClass {
    Feasible,
    EnergyViolation,
    ArlViolation,
    BothViolation,
}

impl fmt::Display for FeasibilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeasibilityClass::Feasible => "feasible",
            FeasibilityClass::EnergyViolation => "energy_violation",
            FeasibilityClass::ArlViolation => "arl_violation",
            FeasibilityClass::BothViolation => "both_violation",
        };
        write!(f, "{s}")
    }
}

/// Classify point estimates against the constraints.
pub fn classify(arl_a: f64, arl_b: f64, energy: f64, c: &Constraints) -> FeasibilityClass {
    let arl_bad = arl_a < c.r_a || arl_b < c.r_b;
    let energy_bad = energy > c.e_bar;
    match (energy_bad, arl_bad) {
        (true, true) => FeasibilityClass::BothViolation,
        (true, false) => FeasibilityClass::EnergyViolation,
        (false, true) => FeasibilityClass::ArlViolation,
        (false, false) => FeasibilityClass::Feasible,
    }
}

/// Strict mode: the 3-sigma pessimistic end of each interval must satisfy
/// the constraint.
pub fn classify_strict(
    arl_a: &Estimate,
    arl_b: &Estimate,
    energy: &Estimate,
    c: &Constraints,
) -> FeasibilityClass {
    classify(
        arl_a.mean - 3.0 * arl_a.se,
        arl_b.mean - 3.0 * arl_b.se,
        energy.mean + 3.0 * energy.se,
        c,
    )
}

/// Renewal-reward energy estimate from the two mean-sojourn estimates, with
/// the SE propagated through the rate formula (which depends on the sojourns
/// only through their sum).
pub fn energy_estimate(
    sojourn_a: &Estimate,
    sojourn_b: &Estimate,
    uav: &UavConfig,
) -> Result<Estimate, SimError> {
    let rate = energy_rate(sojourn_a.mean, sojourn_b.mean, uav)?;
    let s = sojourn_a.mean + sojourn_b.mean;
    let travel = 2.0 * uav.tau as f64;
    let drds = if travel == 0.0 {
        0.0
    } else {
        travel * (uav.e_sense - uav.e_move) / ((s + travel) * (s + travel))
    };
    let se_s = (sojourn_a.se * sojourn_a.se + sojourn_b.se * sojourn_b.se).sqrt();
    Ok(Estimate {
        mean: rate,
        se: drds.abs() * se_s,
        reps: sojourn_a.reps.min(sojourn_b.reps),
    })
}

/// Inverse-variance pool of two independent estimates of the same quantity.
fn pool(a: &Estimate, b: &Estimate) -> Estimate {
    if a.se == 0.0 || b.se == 0.0 {
        // Degenerate SEs: fall back to the replication-weighted mean.
        let w = (a.reps + b.reps).max(1) as f64;
        return Estimate {
            mean: (a.mean * a.reps as f64 + b.mean * b.reps as f64) / w,
            se: 0.0,
            reps: a.reps + b.reps,
        };
    }
    let wa = 1.0 / (a.se * a.se);
    let wb = 1.0 / (b.se * b.se);
    Estimate {
        mean: (a.mean * wa + b.mean * wb) / (wa + wb),
        se: (1.0 / (wa + wb)).sqrt(),
        reps: a.reps + b.reps,
    }
}

/// Everything the sweep measures for one (gamma_a, gamma_b, n) tuple.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub n: u32,
    pub arl_a: Estimate,
    pub arl_b: Estimate,
    pub energy_rate: Estimate,
    pub wadd_a: f64,
    pub wadd_b: f64,
    pub objective: f64,
    /// None when the tuple's estimation failed; see `error`.
    pub class: Option<FeasibilityClass>,
    pub error: Option<String>,
}

/// Sweep-wide knobs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepParams {
    /// No-change replications per tuple and start location.
    pub reps: u64,
    /// Cycle replications per (threshold, regime, start value) cell.
    pub stats_reps: u64,
    pub w_grid_size: usize,
    pub horizon: u64,
    pub seed: u64,
    /// Classify on 3-sigma pessimistic interval ends instead of means.
    pub strict: bool,
}

/// The default grid: gamma in {2..8}^2, n in {1, 3, 5}.
pub fn default_grid() -> Vec<(f64, f64, u32)> {
    let gammas: Vec<f64> = (2..=8).map(|g| g as f64).collect();
    let mut grid = Vec::new();
    for &n in &[1u32, 3, 5] {
        for &ga in &gammas {
            for &gb in &gammas {
                grid.push((ga, gb, n));
            }
        }
    }
    grid
}

type StatsCache = HashMap<(u8, u64), Arc<SprtStats>>;

fn stats_for(
    cache: &StatsCache,
    side: u8,
    gamma: f64,
) -> Arc<SprtStats> {
    Arc::clone(&cache[&(side, gamma.to_bits())])
}

/// Run the sweep. Per-tuple estimation failures are recorded in the tuple's
/// record rather than aborting the sweep. Cycle statistics are shared across
/// tuples with the same threshold, and the same master seed couples the
/// draws across thresholds, so threshold sweeps are pathwise coupled.
pub fn run_sweep(
    grid: &[(f64, f64, u32)],
    model_a: Arc<dyn DistributionModel>,
    model_b: Arc<dyn DistributionModel>,
    uav: &UavConfig,
    constraints: &Constraints,
    params: &SweepParams,
) -> Result<Vec<SweepRecord>, EstimatorError> {
    // Distinct thresholds per side.
    let mut cache: StatsCache = HashMap::new();
    let mut wanted: Vec<(u8, f64)> = Vec::new();
    for &(ga, gb, _) in grid {
        for (side, g) in [(0u8, ga), (1u8, gb)] {
            if !cache.contains_key(&(side, g.to_bits())) && !wanted.contains(&(side, g)) {
                wanted.push((side, g));
            }
        }
    }
    for (side, g) in wanted {
        let model = if side == 0 { &model_a } else { &model_b };
        let stats = estimate_sprt_stats(
            model.as_ref(),
            g,
            &make_w_grid(g, params.w_grid_size),
            params.stats_reps,
            params.seed,
        )?;
        cache.insert((side, g.to_bits()), Arc::new(stats));
    }

    let records: Vec<SweepRecord> = grid
        .par_iter()
        .map(|&(ga, gb, n)| {
            match evaluate_tuple(ga, gb, n, &model_a, &model_b, uav, constraints, params, &cache) {
                Ok(rec) => rec,
                Err(e) => SweepRecord {
                    gamma_a: ga,
                    gamma_b: gb,
                    n,
                    arl_a: Estimate::exact(f64::NAN),
                    arl_b: Estimate::exact(f64::NAN),
                    energy_rate: Estimate::exact(f64::NAN),
                    wadd_a: f64::NAN,
                    wadd_b: f64::NAN,
                    objective: f64::NAN,
                    class: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_tuple(
    gamma_a: f64,
    gamma_b: f64,
    n: u32,
    model_a: &Arc<dyn DistributionModel>,
    model_b: &Arc<dyn DistributionModel>,
    uav: &UavConfig,
    constraints: &Constraints,
    params: &SweepParams,
    cache: &StatsCache,
) -> Result<SweepRecord, EstimatorError> {
    let loc_a = LocationConfig::new(gamma_a, n, Arc::clone(model_a))?;
    let loc_b = LocationConfig::new(gamma_b, n, Arc::clone(model_b))?;

    let run_a = estimate_arl(
        &loc_a,
        &loc_b,
        uav,
        Location::A,
        params.reps,
        params.seed,
        params.horizon,
    )?;
    let run_b = estimate_arl(
        &loc_a,
        &loc_b,
        uav,
        Location::B,
        params.reps,
        params.seed,
        params.horizon,
    )?;

    let sojourn_a = pool(&run_a.sojourn_a, &run_b.sojourn_a);
    let sojourn_b = pool(&run_a.sojourn_b, &run_b.sojourn_b);
    let energy = energy_estimate(&sojourn_a, &sojourn_b, uav)?;

    let stats_a = stats_for(cache, 0, gamma_a);
    let stats_b = stats_for(cache, 1, gamma_b);
    let wadd_a = compute_wadd(&stats_a, &stats_b, n, n, uav.tau)?;
    let wadd_b = compute_wadd(&stats_b, &stats_a, n, n, uav.tau)?;

    let class = if params.strict {
        classify_strict(&run_a.estimate, &run_b.estimate, &energy, constraints)
    } else {
        classify(
            run_a.estimate.mean,
            run_b.estimate.mean,
            energy.mean,
            constraints,
        )
    };

    Ok(SweepRecord {
        gamma_a,
        gamma_b,
        n,
        arl_a: run_a.estimate,
        arl_b: run_b.estimate,
        energy_rate: energy,
        wadd_a: wadd_a.total,
        wadd_b: wadd_b.total,
        objective: wadd_a.total.max(wadd_b.total),
        class: Some(class),
        error: None,
    })
}

/// Single-tuple evaluation with per-location switch counts, for the estimate
/// command.
#[allow(clippy::too_many_arguments)]
pub fn estimate_metrics(
    model_a: Arc<dyn DistributionModel>,
    model_b: Arc<dyn DistributionModel>,
    gamma_a: f64,
    gamma_b: f64,
    n_a: u32,
    n_b: u32,
    uav: &UavConfig,
    constraints: &Constraints,
    params: &SweepParams,
) -> Result<MetricsEstimate, EstimatorError> {
    let loc_a = LocationConfig::new(gamma_a, n_a, Arc::clone(&model_a))?;
    let loc_b = LocationConfig::new(gamma_b, n_b, Arc::clone(&model_b))?;

    let run_a = estimate_arl(
        &loc_a,
        &loc_b,
        uav,
        Location::A,
        params.reps,
        params.seed,
        params.horizon,
    )?;
    let run_b = estimate_arl(
        &loc_a,
        &loc_b,
        uav,
        Location::B,
        params.reps,
        params.seed,
        params.horizon,
    )?;
    let sojourn_a = pool(&run_a.sojourn_a, &run_b.sojourn_a);
    let sojourn_b = pool(&run_a.sojourn_b, &run_b.sojourn_b);
    let energy = energy_estimate(&sojourn_a, &sojourn_b, uav)?;

    let stats_a = estimate_sprt_stats(
        model_a.as_ref(),
        gamma_a,
        &make_w_grid(gamma_a, params.w_grid_size),
        params.stats_reps,
        params.seed,
    )?;
    let stats_b = estimate_sprt_stats(
        model_b.as_ref(),
        gamma_b,
        &make_w_grid(gamma_b, params.w_grid_size),
        params.stats_reps,
        params.seed,
    )?;
    let wadd_a = compute_wadd(&stats_a, &stats_b, n_a, n_b, uav.tau)?;
    let wadd_b = compute_wadd(&stats_b, &stats_a, n_b, n_a, uav.tau)?;

    let class = if params.strict {
        classify_strict(&run_a.estimate, &run_b.estimate, &energy, constraints)
    } else {
        classify(
            run_a.estimate.mean,
            run_b.estimate.mean,
            energy.mean,
            constraints,
        )
    };

    Ok(MetricsEstimate {
        arl_a: run_a.estimate,
        arl_b: run_b.estimate,
        censored_a: run_a.censored,
        censored_b: run_b.censored,
        wadd_a,
        wadd_b,
        energy_rate: energy,
        feasible: class,
    })
}

/// Feasible record with the smallest objective; ties broken by lower energy,
/// then by lower gamma_a + gamma_b.
pub fn best_feasible(records: &[SweepRecord]) -> Option<&SweepRecord> {
    records
        .iter()
        .filter(|r| r.class == Some(FeasibilityClass::Feasible))
        .min_by(|a, b| {
            (a.objective, a.energy_rate.mean, a.gamma_a + a.gamma_b)
                .partial_cmp(&(b.objective, b.energy_rate.mean, b.gamma_a + b.gamma_b))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// 17 significant digits, so re-ingestion is lossless.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str =
    "gamma_a,gamma_b,n,arl_a,arl_a_se,arl_b,arl_b_se,energy,energy_se,wadd_a,wadd_b,objective,class";

/// Write the fixed-schema CSV.
pub fn write_csv(records: &[SweepRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let class = match (&r.class, &r.error) {
            (Some(c), _) => c.to_string(),
            (None, _) => "error".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(r.gamma_a),
            fmt_float(r.gamma_b),
            r.n,
            fmt_float(r.arl_a.mean),
            fmt_float(r.arl_a.se),
            fmt_float(r.arl_b.mean),
            fmt_float(r.arl_b.se),
            fmt_float(r.energy_rate.mean),
            fmt_float(r.energy_rate.se),
            fmt_float(r.wadd_a),
            fmt_float(r.wadd_b),
            fmt_float(r.objective),
            class,
        )?;
    }
    Ok(())
}

/// Per-class counts plus the best feasible record.
#[derive(Debug, Serialize)]
pub struct SweepSummary<'a> {
    pub tuples: usize,
    pub feasible: usize,
    pub energy_violation: usize,
    pub arl_violation: usize,
    pub both_violation: usize,
    pub errors: usize,
    pub best_feasible: Option<&'a SweepRecord>,
}

pub fn summarize(records: &[SweepRecord]) -> SweepSummary<'_> {
    let count = |c: FeasibilityClass| records.iter().filter(|r| r.class == Some(c)).count();
    SweepSummary {
        tuples: records.len(),
        feasible: count(FeasibilityClass::Feasible),
        energy_violation: count(FeasibilityClass::EnergyViolation),
        arl_violation: count(FeasibilityClass::ArlViolation),
        both_violation: count(FeasibilityClass::BothViolation),
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        best_feasible: best_feasible(records),
    }
}
