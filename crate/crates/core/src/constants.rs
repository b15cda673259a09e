//! Calibrated constants, frozen from a recorded `qstat calibrate --seed 7`
//! run. Re-run the calibration subcommand to reproduce or refresh them;
//! it writes a versioned JSON file with the same fields.

/// Multiplier in the distinguisher's query budget
/// P = ceil(c * (sqrt(n/dl) + sqrt(m(n-m))/dl). Smallest integer whose
/// worst-case success over the adversarial calibration grid is >= 0.70.
pub const DISTINGUISH_C: f64 = 1.0;

/// Phase-1 multiplier of the two-phase counter (P1 = ceil(c * sqrt(n/delta))).
pub const TWO_PHASE_C: f64 = 1.0;

/// Phase-2 multiplier of the two-phase counter.
pub const TWO_PHASE_C1: f64 = 1.0;

/// Default phase-1 repetition count of the two-phase counter (median of 5).
pub const TWO_PHASE_REPS: u64 = 5;

/// Stage cap factor: the selection driver aborts after
/// ceil(STAGE_CAP_FACTOR * ln N) stages. Smallest value in the calibration
/// sweep whose cap-trigger rate is <= 1/12 under ideal subroutines at
/// (n, k, delta) = (1001, 501, 1).
pub const STAGE_CAP_FACTOR: f64 = 3.0;

/// Repetition factor `a`: the sampler retries up to ceil(a * ln ln N) times
/// and the in-driver distinguisher is boosted by majority over
/// odd(ceil(a * ln ln N)) repetitions, meeting the per-call failure target
/// 1/(12 * STAGE_CAP_FACTOR * ln N).
pub const REP_FACTOR: f64 = 3.0;

/// Schema version stamped into calibration output files.
pub const CONSTANTS_VERSION: &str = "qstat-constants-v1";
