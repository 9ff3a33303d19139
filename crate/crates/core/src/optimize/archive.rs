use std::cmp::Ordering;

use crate::scalar::Scalar;

use super::evaluator::Evaluator;
use super::{dominates_raw, ParetoPoint};

/// Running nondominated set of feasible choice vectors.
pub(crate) struct Archive<T> {
    entries: Vec<(Vec<u16>, T, T)>,
}

impl<T: Scalar> Archive<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn insert(&mut self, ev: &Evaluator<'_, T>, choices: &[u16], cost: T, coverage: T) {
        for (i, (c, cc, cv)) in self.entries.iter().enumerate() {
            if dominates_raw(*cc, *cv, cost, coverage) {
                return;
            }
            if *cc == cost && *cv == coverage {
                if c.as_slice() == choices || ev.decision(c).cmp(&ev.decision(choices)) != Ordering::Greater {
                    return;
                }
                self.entries[i].0 = choices.to_vec();
                return;
            }
        }
        self.entries.retain(|(_, cc, cv)| !dominates_raw(cost, coverage, *cc, *cv));
        self.entries.push((choices.to_vec(), cost, coverage));
    }

    pub fn merge(&mut self, ev: &Evaluator<'_, T>, other: Archive<T>) {
        for (c, cost, cov) in other.entries {
            self.insert(ev, &c, cost, cov);
        }
    }

    pub fn into_points(self, ev: &Evaluator<'_, T>) -> Vec<ParetoPoint<T>> {
        self.entries
            .into_iter()
            .map(|(c, _, _)| ParetoPoint { decision: ev.decision(&c), objectives: ev.objectives(&c) })
            .collect()
    }
}
