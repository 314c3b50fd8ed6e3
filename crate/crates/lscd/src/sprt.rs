//! One-sided SPRT cycle engine.
//!
//! A cycle is the random walk of LLR increments started from w0 in [0, gamma)
//! and stopped the first time it leaves (0, gamma): crossing gamma raises an
//! alarm, dropping to 0 or below is a reset. A CUSUM detector is exactly a
//! sequence of such cycles restarting from 0, so within one cycle the walk is
//! left unclamped and the terminal value records the overshoot.

use serde::Serialize;
use thiserror::Error;

use crate::models::{LlrStream, Regime, StreamError};

/// Hard cap on the steps of a single cycle. Exceeding it is an error, never
/// a silently censored observation, so runaway walks cannot bias estimates.
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SprtError {
    #[error("cusum statistic must be nonnegative, got {0}")]
    NegativeStatistic(f64),
    #[error("non-finite LLR increment: {0}")]
    NonFiniteIncrement(f64),
    #[error("start statistic {w0} outside [0, {gamma})")]
    InvalidStart { w0: f64, gamma: f64 },
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("cycle exceeded {0} steps without exiting")]
    Truncated(u64),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

/// How a cycle ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exit {
    /// Statistic reached the detection threshold: alarm.
    HitTop,
    /// Statistic returned to 0 or below: reset.
    HitBottom,
}

/// Outcome of one SPRT cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleOutcome {
    pub exit: Exit,
    /// Observations consumed, >= 1.
    pub duration: u64,
    /// Walk value at stopping; >= gamma for HitTop, <= 0 for HitBottom.
    pub terminal: f64,
}

/// One step of the reflected CUSUM recursion: max(w + z, 0).
pub fn cusum_update(w: f64, z: f64) -> Result<f64, SprtError> {
    if w.is_nan() || w < 0.0 {
        return Err(SprtError::NegativeStatistic(w));
    }
    if !z.is_finite() {
        return Err(SprtError::NonFiniteIncrement(z));
    }
    Ok((w + z).max(0.0))
}

/// Run one cycle from `w0`, drawing increments from `stream` under `regime`,
/// until the walk exits (0, gamma).
pub fn run_cycle(
    stream: &mut dyn LlrStream,
    regime: Regime,
    gamma: f64,
    w0: f64,
    max_steps: u64,
) -> Result<CycleOutcome, SprtError> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(SprtError::InvalidThreshold(gamma));
    }
    if !(0.0..gamma).contains(&w0) {
        return Err(SprtError::InvalidStart { w0, gamma });
    }
    let mut s = w0;
    let mut steps = 0u64;
    while steps < max_steps {
        let z = stream.next_llr(regime)?;
        if !z.is_finite() {
            return Err(SprtError::NonFiniteIncrement(z));
        }
        s += z;
        steps += 1;
        if s >= gamma {
            return Ok(CycleOutcome {
                exit: Exit::HitTop,
                duration: steps,
                terminal: s,
            });
        }
        if s <= 0.0 {
            return Ok(CycleOutcome {
                exit: Exit::HitBottom,
                duration: steps,
                terminal: s,
            });
        }
    }
    Err(SprtError::Truncated(max_steps))
}

/// First ascent epoch of the reflected walk started at 0: the first t with
/// the statistic strictly positive, which under the reflection at 0 is the
/// first t whose increment is strictly positive. Under the post-change law it
/// is Geometric(q) with q = P_g(Z > 0).
pub fn first_ascent_time(
    stream: &mut dyn LlrStream,
    regime: Regime,
    max_steps: u64,
) -> Result<u64, SprtError> {
    let mut w = 0.0;
    let mut steps = 0u64;
    while steps < max_steps {
        let z = stream.next_llr(regime)?;
        w = cusum_update(w, z)?;
        steps += 1;
        if w > 0.0 {
            return Ok(steps);
        }
    }
    Err(SprtError::Truncated(max_steps))
}
