use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::propagation::{bitrate, Propagator};
use crate::scalar::Scalar;
use crate::scheme::{GridScheme, PlacementDecision};

use super::ObjectiveVector;

/// Decision evaluator over precomputed link levels.
///
/// Decisions are choice vectors indexed by slot, where slots are the
/// candidate sites in site-id order and choice 0 is "no AP", choice `c > 0`
/// the `c`-th allowed equipment in catalog order. Results are bit-identical
/// to [`super::evaluate`].
pub struct Evaluator<'a, T> {
    scheme: &'a GridScheme<T>,
    /// Site index per slot.
    slots: Vec<usize>,
    /// Allowed equipment indices per slot.
    options: Vec<Vec<usize>>,
    /// `infra_cost + equipment cost` per slot and option.
    costs: Vec<Vec<T>>,
    /// Received level per slot, option and receiver.
    levels: Vec<Vec<Vec<Option<T>>>>,
}

/// Cost, coverage and feasibility without the per-receiver breakdown.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score<T> {
    pub cost: T,
    pub coverage: T,
    pub feasible: bool,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn new(scheme: &'a GridScheme<T>) -> Self {
        let slots = scheme.sites_by_id();
        let options: Vec<Vec<usize>> = slots.iter().map(|&i| scheme.allowed_equipment(i)).collect();
        let costs = slots
            .iter()
            .zip(&options)
            .map(|(&i, opts)| opts.iter().map(|&k| scheme.sites[i].infra_cost + scheme.equipment[k].cost).collect())
            .collect();
        let prop = Propagator::new(scheme);
        let levels = slots
            .iter()
            .zip(&options)
            .map(|(&i, opts)| {
                opts.iter()
                    .map(|&k| {
                        scheme
                            .receivers
                            .par_iter()
                            .map(|rx| prop.received_power(i, k, rx.cell, rx.rx_gain_dbi))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { scheme, slots, options, costs, levels }
    }

    pub fn scheme(&self) -> &'a GridScheme<T> {
        self.scheme
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Number of choices (including "no AP") at a slot.
    pub fn arity(&self, slot: usize) -> usize {
        self.options[slot].len() + 1
    }

    /// Cost of assigning option `choice` (> 0) at `slot`.
    pub fn choice_cost(&self, slot: usize, choice: usize) -> T {
        self.costs[slot][choice - 1]
    }

    pub fn cost(&self, choices: &[u16]) -> T {
        choices
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .fold(T::zero(), |acc, (s, &c)| acc + self.costs[s][c as usize - 1])
    }

    fn rate(&self, choices: &[u16], rx: usize) -> T {
        let mut best: Option<T> = None;
        for (s, &c) in choices.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if let Some(level) = self.levels[s][c as usize - 1][rx] {
                if best.is_none_or(|b| level > b) {
                    best = Some(level);
                }
            }
        }
        let receiver = &self.scheme.receivers[rx];
        best.map_or(T::zero(), |level| bitrate(level - receiver.noise_dbm, &self.scheme.bitrate_table))
    }

    pub fn score(&self, choices: &[u16]) -> Score<T> {
        let mut coverage = T::zero();
        let mut feasible = true;
        for (j, rx) in self.scheme.receivers.iter().enumerate() {
            let rate = self.rate(choices, j);
            coverage = coverage + rx.weight * rate;
            feasible &= rate >= rx.min_bitrate_mbps;
        }
        Score { cost: self.cost(choices), coverage, feasible }
    }

    pub fn objectives(&self, choices: &[u16]) -> ObjectiveVector<T> {
        let s = self.score(choices);
        let per_receiver_rates: BTreeMap<String, T> =
            self.scheme.receivers.iter().enumerate().map(|(j, rx)| (rx.id.clone(), self.rate(choices, j))).collect();
        ObjectiveVector { total_cost: s.cost, weighted_coverage: s.coverage, feasible: s.feasible, per_receiver_rates }
    }

    pub fn decision(&self, choices: &[u16]) -> PlacementDecision {
        choices
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| {
                let site = &self.scheme.sites[self.slots[s]];
                let equipment = &self.scheme.equipment[self.options[s][c as usize - 1]];
                (site.id.clone(), equipment.id.clone())
            })
            .collect()
    }
}
