//! Variant-probability search: each site carries a categorical distribution
//! over {no AP} and its allowed equipment. Distributions are sampled, the
//! best samples pull them toward their own choices, and the loop repeats
//! under a sweep of cost budgets so each budget yields one front point.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::OptimizeError;
use crate::scalar::Scalar;
use crate::scheme::GridScheme;

use super::archive::Archive;
use super::evaluator::{Evaluator, Score};
use super::{pareto_filter, ParetoPoint, ParetoResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    pub seed: u64,
    pub population: usize,
    pub generations: usize,
    pub elite_fraction: f64,
    pub learning_rate: f64,
    pub prob_floor: f64,
    pub budget_levels: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            seed: 0,
            population: 64,
            generations: 200,
            elite_fraction: 0.125,
            learning_rate: 0.3,
            prob_floor: 0.02,
            budget_levels: 16,
        }
    }
}

impl SearchParams {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |what: &str| Err(OptimizeError::InvalidParams(what.to_owned()));
        if self.population == 0 {
            return bad("population must be >= 1");
        }
        if self.generations == 0 {
            return bad("generations must be >= 1");
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return bad("elite_fraction must lie in (0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.prob_floor) {
            return bad("prob_floor must lie in [0, 1)");
        }
        if self.budget_levels == 0 {
            return bad("budget_levels must be >= 1");
        }
        Ok(())
    }

    fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population as f64).ceil() as usize).clamp(1, self.population)
    }
}

/// Budgets swept: `levels` evenly spaced values over `[0, max cost]` plus the
/// cost of every single-assignment decision. Sorted, deduplicated.
fn budget_grid<T: Scalar>(ev: &Evaluator<'_, T>, levels: usize) -> Vec<T> {
    let max_cost = (0..ev.slot_count()).fold(T::zero(), |acc, s| {
        let best = (1..ev.arity(s)).map(|c| ev.choice_cost(s, c)).fold(T::zero(), T::max);
        acc + best
    });
    let mut budgets: Vec<T> = if levels == 1 {
        vec![max_cost]
    } else {
        let steps = T::lit((levels - 1) as f64);
        (0..levels).map(|i| max_cost * T::lit(i as f64) / steps).collect()
    };
    for s in 0..ev.slot_count() {
        budgets.extend((1..ev.arity(s)).map(|c| ev.choice_cost(s, c)));
    }
    budgets.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    budgets.dedup();
    budgets
}

struct LevelOutcome<T> {
    best: Option<(Vec<u16>, Score<T>)>,
    archive: Archive<T>,
    evaluations: u64,
}

/// Ranking within one generation: within-budget feasible, then within-budget
/// infeasible (both by coverage desc, cost asc), then over-budget by cost asc.
fn rank<T: Scalar>(a: &Score<T>, b: &Score<T>, budget: T) -> Ordering {
    let class = |s: &Score<T>| match (s.cost <= budget, s.feasible) {
        (true, true) => 0,
        (true, false) => 1,
        (false, _) => 2,
    };
    let (ca, cb) = (class(a), class(b));
    ca.cmp(&cb).then_with(|| {
        let by_cost = a.cost.partial_cmp(&b.cost).unwrap_or(Ordering::Equal);
        if ca == 2 {
            by_cost
        } else {
            b.coverage.partial_cmp(&a.coverage).unwrap_or(Ordering::Equal).then(by_cost)
        }
    })
}

fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> u16 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return c as u16;
        }
    }
    (probs.len() - 1) as u16
}

fn run_level<T: Scalar>(ev: &Evaluator<'_, T>, params: &SearchParams, budget: T, level: usize) -> LevelOutcome<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(level as u64);
    let slots = ev.slot_count();
    let mut probs: Vec<Vec<f64>> = (0..slots)
        .map(|s| {
            let n = ev.arity(s);
            vec![1.0 / n as f64; n]
        })
        .collect();
    let elite = params.elite_count();
    let mut out = LevelOutcome { best: None, archive: Archive::new(), evaluations: 0 };
    let mut pop: Vec<(Vec<u16>, Score<T>)> = Vec::with_capacity(params.population);
    let mut order: Vec<usize> = Vec::with_capacity(params.population);

    for _ in 0..params.generations {
        pop.clear();
        for _ in 0..params.population {
            let choices: Vec<u16> = probs.iter().map(|p| sample(&mut rng, p)).collect();
            let score = ev.score(&choices);
            out.evaluations += 1;
            if score.feasible {
                out.archive.insert(ev, &choices, score.cost, score.coverage);
                if score.cost <= budget {
                    let better = out.best.as_ref().is_none_or(|(_, b)| {
                        score.coverage > b.coverage || (score.coverage == b.coverage && score.cost < b.cost)
                    });
                    if better {
                        out.best = Some((choices.clone(), score));
                    }
                }
            }
            pop.push((choices, score));
        }

        order.clear();
        order.extend(0..pop.len());
        // stable sort keeps sample order on ties
        order.sort_by(|&a, &b| rank(&pop[a].1, &pop[b].1, budget));

        let weight = 1.0 / elite as f64;
        for (s, p) in probs.iter_mut().enumerate() {
            let mut freq = vec![0.0; p.len()];
            for &i in &order[..elite] {
                freq[pop[i].0[s] as usize] += weight;
            }
            for (pc, fc) in p.iter_mut().zip(&freq) {
                *pc = ((1.0 - params.learning_rate) * *pc + params.learning_rate * fc).max(params.prob_floor);
            }
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|pc| *pc /= total);
        }
    }
    out
}

/// Stochastic Pareto search; deterministic for a fixed `params.seed`.
pub fn variant_probability_search<T: Scalar>(
    scheme: &GridScheme<T>,
    params: &SearchParams,
) -> Result<ParetoResult<T>, OptimizeError> {
    params.validate()?;
    let started = Instant::now();
    let ev = Evaluator::new(scheme);
    let budgets = budget_grid(&ev, params.budget_levels);

    let outcomes: Vec<LevelOutcome<T>> =
        budgets.par_iter().enumerate().map(|(level, &budget)| run_level(&ev, params, budget, level)).collect();

    let mut evaluations = 0;
    let mut recorded: Vec<ParetoPoint<T>> = Vec::new();
    let mut archive = Archive::new();
    for o in outcomes {
        evaluations += o.evaluations;
        if let Some((choices, _)) = o.best {
            recorded.push(ParetoPoint { decision: ev.decision(&choices), objectives: ev.objectives(&choices) });
        }
        archive.merge(&ev, o.archive);
    }
    recorded.extend(archive.into_points(&ev));

    Ok(ParetoResult {
        points: pareto_filter(recorded),
        seed: Some(params.seed),
        evaluations,
        elapsed: started.elapsed(),
    })
}
