//! Deterministic seed derivation.
//!
//! Every random stream in the toolkit is derived from the single master seed
//! as `derive_seed(master, job, rep)`, a counter-based scheme: the stream for
//! replication `rep` of job `job` depends only on the triple, so growing the
//! replication count never perturbs the streams of replications already run,
//! and worker scheduling cannot affect results.

/// SplitMix64 finalizer step.
fn splitmix(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of job `job` under the given master seed.
pub fn derive_seed(master: u64, job: u64, rep: u64) -> u64 {
    let mut z = master;
    z = splitmix(z ^ splitmix(job));
    z = splitmix(z ^ splitmix(rep));
    z
}

/// Stable job identifiers. Each distinct randomized operation gets its own
/// namespace so seeds never collide across operations.
#[derive(Debug, Clone, Copy)]
#[repr(u8)]
pub enum JobKind {
    ArlRun = 1,
    SprtCycle = 2,
    WaddScenario = 3,
    RenewalCycles = 4,
    SimulateRun = 5,
    SweepTuple = 6,
}

/// Pack a job id from its kind and up to two sub-indices (location, grid
/// cell, tuple index, ...).
pub fn job_id(kind: JobKind, a: u64, b: u64) -> u64 {
    ((kind as u64) << 56) | ((a & 0xFF_FFFF) << 32) | (b & 0xFFFF_FFFF)
}
