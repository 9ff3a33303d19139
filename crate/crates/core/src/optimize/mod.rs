//! Cost versus weighted-coverage placement search.
//!
//! A decision assigns at most one equipment type per candidate site. Its cost
//! is the sum of site infrastructure plus equipment costs; its coverage is
//! `sum(v_j * b_j)` over receivers, where `b_j` is the best-server bitrate.
//! A decision is feasible when every receiver reaches its minimum bitrate.

mod archive;
mod evaluator;
mod exhaustive;
mod vps;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use evaluator::Evaluator;
pub use exhaustive::{brute_force_pareto, decision_space_size, BRUTE_FORCE_LIMIT};
pub use vps::{variant_probability_search, SearchParams};

use crate::error::DecisionError;
use crate::propagation::Propagator;
use crate::scalar::Scalar;
use crate::scheme::{GridScheme, PlacementDecision};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector<T> {
    pub total_cost: T,
    pub weighted_coverage: T,
    pub feasible: bool,
    pub per_receiver_rates: BTreeMap<String, T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint<T> {
    pub decision: PlacementDecision,
    pub objectives: ObjectiveVector<T>,
}

/// Nondominated feasible decisions, ascending cost.
#[derive(Clone, Debug, Serialize)]
pub struct ParetoResult<T> {
    pub points: Vec<ParetoPoint<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub evaluations: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl<T: PartialEq> PartialEq for ParetoResult<T> {
    /// Wall time is excluded.
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.seed == other.seed && self.evaluations == other.evaluations
    }
}

/// Evaluates a decision directly through best-link selection.
pub fn evaluate<T: Scalar>(
    scheme: &GridScheme<T>,
    decision: &PlacementDecision,
) -> Result<ObjectiveVector<T>, DecisionError> {
    let resolved = decision.resolve(scheme)?;
    let total_cost =
        resolved.iter().fold(T::zero(), |acc, &(i, k)| acc + (scheme.sites[i].infra_cost + scheme.equipment[k].cost));
    let prop = Propagator::new(scheme);
    let mut weighted_coverage = T::zero();
    let mut feasible = true;
    let mut per_receiver_rates = BTreeMap::new();
    for rx in &scheme.receivers {
        let rate =
            prop.best_link_at(&resolved, rx.cell, rx.rx_gain_dbi, rx.noise_dbm).map_or(T::zero(), |l| l.rate_mbps);
        weighted_coverage = weighted_coverage + rx.weight * rate;
        feasible &= rate >= rx.min_bitrate_mbps;
        per_receiver_rates.insert(rx.id.clone(), rate);
    }
    Ok(ObjectiveVector { total_cost, weighted_coverage, feasible, per_receiver_rates })
}

/// `a` is no more expensive, covers no less, and is strictly better in one.
pub fn dominates<T: Scalar>(a: &ObjectiveVector<T>, b: &ObjectiveVector<T>) -> bool {
    dominates_raw(a.total_cost, a.weighted_coverage, b.total_cost, b.weighted_coverage)
}

pub(crate) fn dominates_raw<T: Scalar>(cost_a: T, cov_a: T, cost_b: T, cov_b: T) -> bool {
    cost_a <= cost_b && cov_a >= cov_b && (cost_a < cost_b || cov_a > cov_b)
}

/// Keeps exactly the nondominated points, ascending cost. Points with equal
/// objectives collapse to the lexicographically smallest decision.
pub fn pareto_filter<T: Scalar>(mut points: Vec<ParetoPoint<T>>) -> Vec<ParetoPoint<T>> {
    points.sort_by(|a, b| {
        let (oa, ob) = (&a.objectives, &b.objectives);
        oa.total_cost
            .partial_cmp(&ob.total_cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| ob.weighted_coverage.partial_cmp(&oa.weighted_coverage).unwrap_or(Ordering::Equal))
            .then_with(|| a.decision.cmp(&b.decision))
    });
    let mut best_cov: Option<T> = None;
    points.retain(|p| {
        let cov = p.objectives.weighted_coverage;
        if best_cov.is_none_or(|b| cov > b) {
            best_cov = Some(cov);
            true
        } else {
            false
        }
    });
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(cost: f64, cov: f64) -> ObjectiveVector<f64> {
        ObjectiveVector {
            total_cost: cost,
            weighted_coverage: cov,
            feasible: true,
            per_receiver_rates: BTreeMap::new(),
        }
    }

    fn pt(site: &str, cost: f64, cov: f64) -> ParetoPoint<f64> {
        ParetoPoint { decision: [(site, "e")].into_iter().collect(), objectives: ov(cost, cov) }
    }

    #[test]
    fn dominance_cases() {
        assert!(dominates(&ov(10.0, 5.0), &ov(12.0, 5.0)));
        assert!(!dominates(&ov(10.0, 5.0), &ov(10.0, 5.0)));
        assert!(!dominates(&ov(10.0, 5.0), &ov(8.0, 7.0)));
        assert!(dominates(&ov(8.0, 7.0), &ov(10.0, 5.0)));
    }

    #[test]
    fn filter_single_and_chain() {
        assert_eq!(pareto_filter(vec![pt("a", 1.0, 1.0)]), vec![pt("a", 1.0, 1.0)]);
        let chain = vec![pt("c", 3.0, 1.0), pt("b", 2.0, 2.0), pt("a", 1.0, 3.0)];
        assert_eq!(pareto_filter(chain), vec![pt("a", 1.0, 3.0)]);
    }

    #[test]
    fn filter_collapses_duplicates_to_smallest_decision() {
        let pts = vec![pt("z", 5.0, 5.0), pt("b", 5.0, 5.0), pt("m", 1.0, 1.0), pt("q", 5.0, 4.0)];
        let f = pareto_filter(pts);
        assert_eq!(f, vec![pt("m", 1.0, 1.0), pt("b", 5.0, 5.0)]);
        assert_eq!(pareto_filter(f.clone()), f);
    }
}
