use std::time::Instant;

use crate::error::OptimizeError;
use crate::scalar::Scalar;
use crate::scheme::GridScheme;

use super::archive::Archive;
use super::evaluator::Evaluator;
use super::{pareto_filter, ParetoResult};

/// Largest decision space the exhaustive solver accepts.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 20;

/// `prod(|allowed_i| + 1)`, saturating.
pub fn decision_space_size<T: Scalar>(scheme: &GridScheme<T>) -> u128 {
    (0..scheme.sites.len()).map(|i| scheme.allowed_equipment(i).len() as u128 + 1).fold(1u128, u128::saturating_mul)
}

/// Exact Pareto front by enumerating every decision.
pub fn brute_force_pareto<T: Scalar>(scheme: &GridScheme<T>) -> Result<ParetoResult<T>, OptimizeError> {
    let size = decision_space_size(scheme);
    if size > BRUTE_FORCE_LIMIT {
        return Err(OptimizeError::InstanceTooLarge { decisions: size, limit: BRUTE_FORCE_LIMIT });
    }
    let started = Instant::now();
    let ev = Evaluator::new(scheme);
    let arity: Vec<u16> = (0..ev.slot_count()).map(|s| ev.arity(s) as u16).collect();
    let mut choices = vec![0u16; arity.len()];
    let mut archive = Archive::new();
    let mut evaluations = 0u64;
    loop {
        let score = ev.score(&choices);
        evaluations += 1;
        if score.feasible {
            archive.insert(&ev, &choices, score.cost, score.coverage);
        }
        // mixed-radix increment
        let mut s = 0;
        loop {
            if s == choices.len() {
                let points = pareto_filter(archive.into_points(&ev));
                return Ok(ParetoResult { points, seed: None, evaluations, elapsed: started.elapsed() });
            }
            choices[s] += 1;
            if choices[s] < arity[s] {
                break;
            }
            choices[s] = 0;
            s += 1;
        }
    }
}
