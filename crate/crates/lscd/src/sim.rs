//! Two-location switching detector: the full state machine.
//!
//! The sensor hovers at one location running repeated SPRT cycles. A cycle
//! that crosses gamma raises the alarm; a cycle that falls back to 0 is a
//! reset. After n consecutive resets the sensor resets the statistic, spends
//! tau travel slots (no observations), and resumes at the other location.
//! Energy accrues per slot: e_sense while hovering, e_move while traveling.
//!
//! Switching decisions happen only at cycle boundaries and the statistic
//! never carries across visits.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::models::{DistributionModel, LlrStream, ModelStream, Regime, StreamError};
use crate::sprt::{self, Exit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("a change can occur at only one location")]
    BothLocationsChange,
    #[error("invalid cycle index {start_cycle} for switch count {n}")]
    InvalidCycleIndex { start_cycle: u32, n: u32 },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Sprt(#[from] sprt::SprtError),
    #[error("mean sojourn must be positive, got {0}")]
    NonPositiveSojourn(f64),
}

/// One of the two monitored locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Location {
    A,
    B,
}

impl Location {
    pub fn other(self) -> Location {
        match self {
            Location::A => Location::B,
            Location::B => Location::A,
        }
    }

    fn index(self) -> usize {
        match self {
            Location::A => 0,
            Location::B => 1,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::A => write!(f, "A"),
            Location::B => write!(f, "B"),
        }
    }
}

impl FromStr for Location {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Location::A),
            "B" | "b" => Ok(Location::B),
            other => Err(format!("expected A or B, got {other:?}")),
        }
    }
}

/// Detector parameters of one location.
#[derive(Clone)]
pub struct LocationConfig {
    pub gamma: f64,
    pub n: u32,
    pub model: Arc<dyn DistributionModel>,
}

impl LocationConfig {
    pub fn new(gamma: f64, n: u32, model: Arc<dyn DistributionModel>) -> Result<Self, SimError> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        if n < 1 {
            return Err(SimError::InvalidConfig("n must be >= 1".to_string()));
        }
        Ok(LocationConfig { gamma, n, model })
    }
}

/// Platform parameters: travel time and per-slot energies.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UavConfig {
    /// Travel slots per location change.
    pub tau: u32,
    /// Energy per hovering (sensing) slot.
    pub e_sense: f64,
    /// Energy per travel slot.
    pub e_move: f64,
    /// Energy-rate budget.
    pub e_budget: f64,
}

impl UavConfig {
    pub fn new(tau: u32, e_sense: f64, e_move: f64, e_budget: f64) -> Result<Self, SimError> {
        for (name, v) in [("e_sense", e_sense), ("e_move", e_move)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        if e_budget.is_nan() || e_budget <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "e_budget must be positive, got {e_budget}"
            )));
        }
        Ok(UavConfig {
            tau,
            e_sense,
            e_move,
            e_budget,
        })
    }
}

/// When (if ever) the change takes effect at a location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChangePoint {
    Never,
    /// The nu-th observation drawn at this location is the first post-change
    /// draw (nu = 0 behaves like nu = 1: every observation is post-change).
    LocalObservation(u64),
    /// Observations taken at global slot t >= nu are post-change.
    GlobalTime(u64),
}

impl ChangePoint {
    fn regime(&self, global_t: u64, local_idx: u64) -> Regime {
        match *self {
            ChangePoint::Never => Regime::PreChange,
            ChangePoint::LocalObservation(nu) => {
                if local_idx >= nu.max(1) {
                    Regime::PostChange
                } else {
                    Regime::PreChange
                }
            }
            ChangePoint::GlobalTime(nu) => {
                if global_t >= nu {
                    Regime::PostChange
                } else {
                    Regime::PreChange
                }
            }
        }
    }
}

/// Change times for both locations; at most one may be finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Scenario {
    pub a: ChangePoint,
    pub b: ChangePoint,
}

impl Scenario {
    pub fn new(a: ChangePoint, b: ChangePoint) -> Result<Self, SimError> {
        if a != ChangePoint::Never && b != ChangePoint::Never {
            return Err(SimError::BothLocationsChange);
        }
        Ok(Scenario { a, b })
    }

    pub fn never_never() -> Self {
        Scenario {
            a: ChangePoint::Never,
            b: ChangePoint::Never,
        }
    }

    pub fn change_point(&self, loc: Location) -> ChangePoint {
        match loc {
            Location::A => self.a,
            Location::B => self.b,
        }
    }

    /// The location whose change time is finite, if any.
    pub fn changed_location(&self) -> Option<Location> {
        if self.a != ChangePoint::Never {
            Some(Location::A)
        } else if self.b != ChangePoint::Never {
            Some(Location::B)
        } else {
            None
        }
    }
}

/// How a recorded visit ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VisitEnd {
    /// n consecutive resets: the sensor departed.
    Departed,
    /// A cycle crossed the threshold.
    Alarm,
    /// The run hit its horizon mid-visit.
    Horizon,
}

/// Hovering time of one visit, for sojourn statistics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VisitRecord {
    pub location: Location,
    pub hover_slots: u64,
    pub end: VisitEnd,
}

/// Outcome of one simulated trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunResult {
    /// Global slot of the alarm, if one was raised before the horizon.
    pub alarm_time: Option<u64>,
    pub alarm_location: Option<Location>,
    /// Total energy up to the alarm or horizon.
    pub energy: f64,
    /// (alarm_time - nu)+ when the changed location raised the alarm; for
    /// local change times nu is the global slot of the first post-change draw.
    pub detection_delay: Option<u64>,
    /// Alarm raised with no change in effect at the alarming location.
    pub false_alarm: bool,
    pub hover_slots: u64,
    pub travel_slots: u64,
}

/// Simulate one trajectory with model-backed observations.
pub fn simulate_run(
    loc_a: &LocationConfig,
    loc_b: &LocationConfig,
    uav: &UavConfig,
    scenario: &Scenario,
    start: Location,
    rng: &mut impl Rng,
    horizon: u64,
) -> Result<RunResult, SimError> {
    let mut stream_a = ModelStream::new(loc_a.model.as_ref(), ChaCha8Rng::seed_from_u64(rng.gen()));
    let mut stream_b = ModelStream::new(loc_b.model.as_ref(), ChaCha8Rng::seed_from_u64(rng.gen()));
    simulate_run_streams(
        loc_a,
        loc_b,
        uav,
        scenario,
        start,
        &mut stream_a,
        &mut stream_b,
        horizon,
        None,
    )
}

/// As `simulate_run`, also appending one record per visit.
#[allow(clippy::too_many_arguments)]
pub fn simulate_run_with_visits(
    loc_a: &LocationConfig,
    loc_b: &LocationConfig,
    uav: &UavConfig,
    scenario: &Scenario,
    start: Location,
    rng: &mut impl Rng,
    horizon: u64,
    visits: &mut Vec<VisitRecord>,
) -> Result<RunResult, SimError> {
    let mut stream_a = ModelStream::new(loc_a.model.as_ref(), ChaCha8Rng::seed_from_u64(rng.gen()));
    let mut stream_b = ModelStream::new(loc_b.model.as_ref(), ChaCha8Rng::seed_from_u64(rng.gen()));
    simulate_run_streams(
        loc_a,
        loc_b,
        uav,
        scenario,
        start,
        &mut stream_a,
        &mut stream_b,
        horizon,
        Some(visits),
    )
}

/// Core state machine over arbitrary LLR streams (scripted in tests).
#[allow(clippy::too_many_arguments)]
pub fn simulate_run_streams(
    loc_a: &LocationConfig,
    loc_b: &LocationConfig,
    uav: &UavConfig,
    scenario: &Scenario,
    start: Location,
    stream_a: &mut dyn LlrStream,
    stream_b: &mut dyn LlrStream,
    horizon: u64,
    mut visits: Option<&mut Vec<VisitRecord>>,
) -> Result<RunResult, SimError> {
    if horizon == 0 {
        return Err(SimError::InvalidConfig("horizon must be > 0".to_string()));
    }
    if scenario.a != ChangePoint::Never && scenario.b != ChangePoint::Never {
        return Err(SimError::BothLocationsChange);
    }

    let gamma = [loc_a.gamma, loc_b.gamma];
    let n = [loc_a.n, loc_b.n];

    let mut t: u64 = 0;
    let mut hover: u64 = 0;
    let mut travel: u64 = 0;
    let mut local_idx = [0u64; 2];
    let mut first_post: [Option<u64>; 2] = [None, None];

    let mut loc = start;
    let mut w = 0.0f64;
    let mut resets = 0u32;
    let mut visit_hover: u64 = 0;

    let record = |visits: &mut Option<&mut Vec<VisitRecord>>,
                      location: Location,
                      hover_slots: u64,
                      end: VisitEnd| {
        if let Some(v) = visits.as_deref_mut() {
            v.push(VisitRecord {
                location,
                hover_slots,
                end,
            });
        }
    };

    let finish = |alarm: Option<(u64, Location)>,
                  hover: u64,
                  travel: u64,
                  first_post: &[Option<u64>; 2]| {
        let energy = uav.e_sense * hover as f64 + uav.e_move * travel as f64;
        match alarm {
            None => Ok(RunResult {
                alarm_time: None,
                alarm_location: None,
                energy,
                detection_delay: None,
                false_alarm: false,
                hover_slots: hover,
                travel_slots: travel,
            }),
            Some((at, at_loc)) => {
                let changed = scenario.changed_location();
                let seen_post = first_post[at_loc.index()];
                let detected = changed == Some(at_loc) && seen_post.is_some();
                let detection_delay = if detected {
                    let nu_eff = match scenario.change_point(at_loc) {
                        ChangePoint::GlobalTime(nu) => nu,
                        ChangePoint::LocalObservation(_) => seen_post.unwrap(),
                        ChangePoint::Never => unreachable!(),
                    };
                    Some(at.saturating_sub(nu_eff))
                } else {
                    None
                };
                Ok(RunResult {
                    alarm_time: Some(at),
                    alarm_location: Some(at_loc),
                    energy,
                    detection_delay,
                    false_alarm: !detected,
                    hover_slots: hover,
                    travel_slots: travel,
                })
            }
        }
    };

    while t < horizon {
        // One hovering slot: draw, update the running cycle.
        t += 1;
        hover += 1;
        visit_hover += 1;
        let idx = loc.index();
        local_idx[idx] += 1;
        let regime = scenario.change_point(loc).regime(t, local_idx[idx]);
        if regime == Regime::PostChange && first_post[idx].is_none() {
            first_post[idx] = Some(t);
        }
        let stream: &mut dyn LlrStream = match loc {
            Location::A => stream_a,
            Location::B => stream_b,
        };
        let z = stream.next_llr(regime)?;
        if !z.is_finite() {
            return Err(StreamError::NonFinite(z).into());
        }
        w += z;
        if w >= gamma[idx] {
            record(&mut visits, loc, visit_hover, VisitEnd::Alarm);
            return finish(Some((t, loc)), hover, travel, &first_post);
        }
        if w <= 0.0 {
            w = 0.0;
            resets += 1;
            if resets >= n[idx] {
                resets = 0;
                record(&mut visits, loc, visit_hover, VisitEnd::Departed);
                visit_hover = 0;
                let mut travelled = 0u32;
                while travelled < uav.tau && t < horizon {
                    t += 1;
                    travel += 1;
                    travelled += 1;
                }
                if travelled < uav.tau {
                    // Horizon hit mid-travel.
                    return finish(None, hover, travel, &first_post);
                }
                loc = loc.other();
            }
        }
    }
    if visit_hover > 0 {
        record(&mut visits, loc, visit_hover, VisitEnd::Horizon);
    }
    finish(None, hover, travel, &first_post)
}

/// Long-run average energy per slot from the renewal-reward identity:
/// (2 tau e_move + (s_a + s_b) e_sense) / (s_a + s_b + 2 tau)
/// with s_l the mean sojourn at location l under no change.
pub fn energy_rate(
    mean_sojourn_a: f64,
    mean_sojourn_b: f64,
    uav: &UavConfig,
) -> Result<f64, SimError> {
    for s in [mean_sojourn_a, mean_sojourn_b] {
        if !s.is_finite() || s <= 0.0 {
            return Err(SimError::NonPositiveSojourn(s));
        }
    }
    let s = mean_sojourn_a + mean_sojourn_b;
    let travel = 2.0 * uav.tau as f64;
    Ok((travel * uav.e_move + s * uav.e_sense) / (s + travel))
}

/// Outcome of one visit driven under a fixed regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitOutcome {
    /// Observations consumed.
    pub slots: u64,
    /// Visit ended by an alarm (otherwise by n consecutive resets).
    pub alarmed: bool,
}

/// Drive a visit from the middle of cycle `start_cycle` (1-based) with the
/// statistic at `w0`, through at most `n` cycles total. An alarm ends the
/// visit immediately; otherwise it ends at the n-th consecutive reset.
pub fn run_visit_from(
    stream: &mut dyn LlrStream,
    regime: Regime,
    gamma: f64,
    n: u32,
    start_cycle: u32,
    w0: f64,
    max_steps_per_cycle: u64,
) -> Result<VisitOutcome, SimError> {
    if start_cycle < 1 || start_cycle > n {
        return Err(SimError::InvalidCycleIndex { start_cycle, n });
    }
    let mut slots = 0u64;
    let mut w = w0;
    for _cycle in start_cycle..=n {
        let out = sprt::run_cycle(stream, regime, gamma, w, max_steps_per_cycle)?;
        slots += out.duration;
        if out.exit == Exit::HitTop {
            return Ok(VisitOutcome {
                slots,
                alarmed: true,
            });
        }
        w = 0.0;
    }
    Ok(VisitOutcome {
        slots,
        alarmed: false,
    })
}

/// A fresh full visit: up to `n` cycles from 0.
pub fn run_visit(
    stream: &mut dyn LlrStream,
    regime: Regime,
    gamma: f64,
    n: u32,
    max_steps_per_cycle: u64,
) -> Result<VisitOutcome, SimError> {
    run_visit_from(stream, regime, gamma, n, 1, 0.0, max_steps_per_cycle)
}

/// Sojourn and energy tallies from simulating the switching process under no
/// change for a fixed number of renewal cycles (visit A, travel, visit B,
/// travel). A false alarm ends its visit and the platform moves on, so visit
/// durations include alarm-truncated visits.
#[derive(Debug, Clone)]
pub struct RenewalStats {
    pub sojourns_a: Vec<u64>,
    pub sojourns_b: Vec<u64>,
    pub hover_slots: u64,
    pub travel_slots: u64,
    pub energy: f64,
}

impl RenewalStats {
    pub fn mean_sojourn(&self, loc: Location) -> f64 {
        let v = match loc {
            Location::A => &self.sojourns_a,
            Location::B => &self.sojourns_b,
        };
        v.iter().sum::<u64>() as f64 / v.len() as f64
    }

    pub fn total_slots(&self) -> u64 {
        self.hover_slots + self.travel_slots
    }

    /// Directly accounted energy per slot.
    pub fn empirical_rate(&self) -> f64 {
        self.energy / self.total_slots() as f64
    }
}

/// Simulate `cycles` renewal cycles of the no-change switching process.
pub fn simulate_renewal_cycles(
    loc_a: &LocationConfig,
    loc_b: &LocationConfig,
    uav: &UavConfig,
    start: Location,
    cycles: u64,
    rng: &mut impl Rng,
) -> Result<RenewalStats, SimError> {
    let mut stream_a = ModelStream::new(loc_a.model.as_ref(), ChaCha8Rng::seed_from_u64(rng.gen()));
    let mut stream_b = ModelStream::new(loc_b.model.as_ref(), ChaCha8Rng::seed_from_u64(rng.gen()));
    let mut stats = RenewalStats {
        sojourns_a: Vec::with_capacity(cycles as usize),
        sojourns_b: Vec::with_capacity(cycles as usize),
        hover_slots: 0,
        travel_slots: 0,
        energy: 0.0,
    };
    let order = [start, start.other()];
    for _ in 0..cycles {
        for loc in order {
            let (cfg, stream): (&LocationConfig, &mut dyn LlrStream) = match loc {
                Location::A => (loc_a, &mut stream_a),
                Location::B => (loc_b, &mut stream_b),
            };
            let visit = run_visit(stream, Regime::PreChange, cfg.gamma, cfg.n, sprt::DEFAULT_MAX_STEPS)?;
            match loc {
                Location::A => stats.sojourns_a.push(visit.slots),
                Location::B => stats.sojourns_b.push(visit.slots),
            }
            stats.hover_slots += visit.slots;
            stats.travel_slots += uav.tau as u64;
        }
    }
    stats.energy =
        uav.e_sense * stats.hover_slots as f64 + uav.e_move * stats.travel_slots as f64;
    Ok(stats)
}
