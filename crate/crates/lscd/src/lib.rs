//! Simulation and analysis toolkit for two-location quickest change
//! detection with a single mobile sensor.
//!
//! A UAV alternates between two monitored sites, running repeated one-sided
//! SPRTs at whichever site it hovers over and switching after n consecutive
//! statistic resets. The crate simulates the full state machine, estimates
//! ARL-to-false-alarm, worst-case detection delay and energy consumption by
//! Monte Carlo, evaluates the matching closed-form bounds, and sweeps
//! parameter grids to map the feasible region of the constrained design
//! problem.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod estimators;
pub mod models;
pub mod seeding;
pub mod sim;
pub mod sprt;
pub mod stats;
pub mod sweep;
