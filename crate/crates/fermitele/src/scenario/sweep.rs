//! Randomized sweep over the measurement inequality.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measurement::{
    check_measurement_inequality, random_state, sweep_seed, EntanglementMeasure, InequalitySample,
};

#[derive(Clone, Copy, Debug)]
pub struct SweepOutcome {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` seen across the sweep (negative on violation).
    pub min_slack: f64,
}

/// Draw `samples` random environment/system pairs in `m` orbitals with `n`
/// electrons on the system side and check the measurement inequality on each.
///
/// Every sample is seeded independently from the master seed, so the outcome
/// is reproducible and independent of evaluation order.
pub fn sweep_inequality(
    m: usize,
    n: usize,
    samples: usize,
    measure: EntanglementMeasure,
    seed: u64,
) -> Result<SweepOutcome> {
    if n < 1 || n + 1 > m {
        return Err(Error::InvalidArgument(format!(
            "sweep needs 1 ≤ n ≤ m − 1 electrons, got n = {n}, m = {m}"
        )));
    }
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for k in 0..samples {
        let sample_seed = sweep_seed(seed, k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let e = rng.gen_range(0..m);
        let alpha = rng.gen::<f64>();
        let theta = rng.gen::<f64>() * TAU;
        let psi_e = random_state(m, n - 1, sweep_seed(sample_seed, 1), Some(e))?;
        let psi_s = random_state(m, n, sweep_seed(sample_seed, 2), Some(e))?;
        let sample = InequalitySample::new(psi_e, psi_s, e, alpha, theta)?;
        let report = check_measurement_inequality(&sample, measure)?;
        if !report.holds {
            violations += 1;
        }
        min_slack = min_slack.min(report.slack);
    }
    Ok(SweepOutcome { samples, violations, min_slack })
}
