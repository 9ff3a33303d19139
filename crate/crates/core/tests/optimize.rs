use std::collections::BTreeSet;

use apgrid::optimize::{
    brute_force_pareto, decision_space_size, dominates, evaluate, pareto_filter, variant_probability_search,
    ObjectiveVector, ParetoPoint, SearchParams, BRUTE_FORCE_LIMIT,
};
use apgrid::{OptimizeError, PlacementDecision, Scheme};
use apgrid_fixtures::{five_sites, no_sites, random_scheme, rng, site, two_rooms, unreachable_demand, RandomShape};
use proptest::prelude::*;

/// Every decision, by recursion over sites in catalog order.
fn all_decisions(scheme: &Scheme) -> Vec<PlacementDecision> {
    fn go(scheme: &Scheme, i: usize, cur: &mut PlacementDecision, out: &mut Vec<PlacementDecision>) {
        if i == scheme.sites.len() {
            out.push(cur.clone());
            return;
        }
        go(scheme, i + 1, cur, out);
        let site = &scheme.sites[i];
        for e in &scheme.equipment {
            if site.allowed_equipment.as_ref().is_none_or(|a| a.contains(&e.id)) {
                cur.assign(site.id.clone(), e.id.clone());
                go(scheme, i + 1, cur, out);
                cur.clear(&site.id);
            }
        }
    }
    let mut out = Vec::new();
    go(scheme, 0, &mut PlacementDecision::new(), &mut out);
    out
}

/// Quadratic front: feasible points no other feasible point dominates, one
/// per objective pair (smallest decision).
fn oracle_front(scheme: &Scheme) -> Vec<(PlacementDecision, f64, f64)> {
    let feasible: Vec<_> = all_decisions(scheme)
        .into_iter()
        .map(|d| {
            let o = evaluate(scheme, &d).unwrap();
            (d, o)
        })
        .filter(|(_, o)| o.feasible)
        .collect();
    let mut front: Vec<(PlacementDecision, f64, f64)> = Vec::new();
    for (d, o) in &feasible {
        if feasible.iter().any(|(_, p)| dominates(p, o)) {
            continue;
        }
        let same = feasible
            .iter()
            .filter(|(_, p)| p.total_cost == o.total_cost && p.weighted_coverage == o.weighted_coverage)
            .map(|(e, _)| e)
            .min()
            .unwrap();
        if same == d {
            front.push((d.clone(), o.total_cost, o.weighted_coverage));
        }
    }
    front.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    front
}

fn as_rows(points: &[ParetoPoint<f64>]) -> Vec<(PlacementDecision, f64, f64)> {
    points.iter().map(|p| (p.decision.clone(), p.objectives.total_cost, p.objectives.weighted_coverage)).collect()
}

#[test]
fn five_site_instance_matches_independent_enumeration() {
    let s = five_sites();
    assert_eq!(decision_space_size(&s), 243);
    assert_eq!(all_decisions(&s).len(), 243);
    let front = brute_force_pareto(&s).unwrap();
    assert_eq!(as_rows(&front.points), oracle_front(&s));
    assert!(front.points.len() >= 3);
    assert_eq!(front.evaluations, 243);
}

#[test]
fn random_instances_match_independent_enumeration() {
    let mut r = rng(5);
    for _ in 0..25 {
        let s = random_scheme(&mut r, &RandomShape::small());
        assert_eq!(as_rows(&brute_force_pareto(&s).unwrap().points), oracle_front(&s));
    }
}

#[test]
fn evaluate_examples() {
    let s = two_rooms();
    let empty = evaluate(&s, &PlacementDecision::new()).unwrap();
    assert_eq!((empty.total_cost, empty.weighted_coverage, empty.feasible), (0.0, 0.0, false));
    let one: PlacementDecision = [("a", "ap")].into_iter().collect();
    assert_eq!(evaluate(&s, &one).unwrap().total_cost, 140.0);

    let mut single = Scheme::new(10, 10, 1.0);
    single.equipment.push(apgrid_fixtures::omni("ap", 18.0, 0.0, 40.0));
    single.sites.push(site("s", apgrid_fixtures::c(1, 1), 100.0));
    single.receivers.push(apgrid_fixtures::receiver("r", apgrid_fixtures::c(3, 1), 2.0, 0.0));
    let d: PlacementDecision = [("s", "ap")].into_iter().collect();
    let o = evaluate(&single, &d).unwrap();
    assert_eq!(o.total_cost, 140.0);
    assert_eq!(o.weighted_coverage, 108.0);
    assert!(o.feasible);

    let unknown: PlacementDecision = [("nowhere", "ap")].into_iter().collect();
    assert!(evaluate(&s, &unknown).is_err());
}

#[test]
fn small_fronts_by_hand() {
    let front = brute_force_pareto(&two_rooms()).unwrap();
    assert_eq!(front.points.len(), 1);
    let both: PlacementDecision = [("a", "ap"), ("b", "ap")].into_iter().collect();
    assert_eq!(front.points[0].decision, both);

    let empty = brute_force_pareto(&no_sites()).unwrap();
    assert_eq!(empty.points.len(), 1);
    assert!(empty.points[0].decision.is_empty());

    let mut demanding = no_sites();
    demanding.receivers[0].min_bitrate_mbps = 1.0;
    assert!(brute_force_pareto(&demanding).unwrap().points.is_empty());
}

#[test]
fn oracle_refuses_large_instances() {
    let mut s = Scheme::new(30, 30, 1.0);
    s.equipment.push(apgrid_fixtures::omni("a", 10.0, 0.0, 1.0));
    s.equipment.push(apgrid_fixtures::omni("b", 10.0, 0.0, 1.0));
    s.equipment.push(apgrid_fixtures::omni("c", 10.0, 0.0, 1.0));
    for i in 0..11 {
        s.sites.push(site(&format!("s{i:02}"), apgrid_fixtures::c(i, 0), 1.0));
    }
    // 4^11 > 2^20
    assert!(decision_space_size(&s) > BRUTE_FORCE_LIMIT);
    assert!(matches!(brute_force_pareto(&s), Err(OptimizeError::InstanceTooLarge { .. })));
}

#[test]
fn search_is_deterministic_and_sound() {
    let s = five_sites();
    let a = variant_probability_search(&s, &SearchParams::with_seed(7)).unwrap();
    let b = variant_probability_search(&s, &SearchParams::with_seed(7)).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for p in &a.points {
        assert!(p.objectives.feasible);
        assert_eq!(&evaluate(&s, &p.decision).unwrap(), &p.objectives);
        assert!(a.points.iter().all(|q| !dominates(&q.objectives, &p.objectives)));
    }
    assert!(a.points.windows(2).all(|w| w[0].objectives.total_cost < w[1].objectives.total_cost));
}

#[test]
fn search_on_infeasible_scheme_returns_empty_front() {
    let s = unreachable_demand();
    assert!(brute_force_pareto(&s).unwrap().points.is_empty());
    let r = variant_probability_search(&s, &SearchParams { generations: 20, ..SearchParams::with_seed(3) }).unwrap();
    assert!(r.points.is_empty());
}

#[test]
fn search_rejects_bad_params() {
    let s = five_sites();
    for bad in [
        SearchParams { population: 0, ..SearchParams::default() },
        SearchParams { elite_fraction: 0.0, ..SearchParams::default() },
        SearchParams { learning_rate: 1.5, ..SearchParams::default() },
        SearchParams { budget_levels: 0, ..SearchParams::default() },
    ] {
        assert!(matches!(variant_probability_search(&s, &bad), Err(OptimizeError::InvalidParams(_))));
    }
}

#[test]
fn search_front_is_never_worse_than_oracle_on_its_own_points() {
    let mut r = rng(99);
    for seed in 0..8 {
        let s = random_scheme(&mut r, &RandomShape::small());
        let exact = brute_force_pareto(&s).unwrap();
        let found =
            variant_probability_search(&s, &SearchParams { generations: 40, ..SearchParams::with_seed(seed) }).unwrap();
        for p in &found.points {
            // on the exact front or dominated by it, never dominating it
            assert!(exact.points.iter().all(|q| !dominates(&p.objectives, &q.objectives)));
        }
    }
}

fn decisions(points: &[ParetoPoint<f64>]) -> BTreeSet<PlacementDecision> {
    points.iter().map(|p| p.decision.clone()).collect()
}

#[test]
fn weight_scaling_preserves_pareto_decisions() {
    let mut r = rng(17);
    for _ in 0..20 {
        let s = random_scheme(&mut r, &RandomShape::small());
        let mut scaled = s.clone();
        for rx in &mut scaled.receivers {
            rx.weight *= 3.7;
        }
        let a = brute_force_pareto(&s).unwrap();
        let b = brute_force_pareto(&scaled).unwrap();
        assert_eq!(decisions(&a.points), decisions(&b.points));
    }
}

#[test]
fn extra_site_never_worsens_the_front() {
    let mut r = rng(23);
    for _ in 0..15 {
        let mut s = random_scheme(&mut r, &RandomShape { max_sites: 4, ..RandomShape::small() });
        let before = brute_force_pareto(&s).unwrap();
        let taken: Vec<_> = s.sites.iter().map(|x| x.cell).chain(s.receivers.iter().map(|x| x.cell)).collect();
        let free = (0..s.height_cells)
            .flat_map(|row| (0..s.width_cells).map(move |col| apgrid_fixtures::c(col, row)))
            .find(|c| !taken.contains(c))
            .unwrap();
        s.sites.push(site("zz-new", free, 10.0));
        let after = brute_force_pareto(&s).unwrap();
        for p in &before.points {
            assert!(after.points.iter().any(|q| q.objectives.total_cost <= p.objectives.total_cost
                && q.objectives.weighted_coverage >= p.objectives.weighted_coverage));
        }
    }
}

fn point(cost: f64, cov: f64, tag: u8) -> ParetoPoint<f64> {
    ParetoPoint {
        decision: [(format!("s{tag}"), "e".to_string())].into_iter().collect(),
        objectives: ObjectiveVector {
            total_cost: cost,
            weighted_coverage: cov,
            feasible: true,
            per_receiver_rates: Default::default(),
        },
    }
}

proptest! {
    #[test]
    fn filter_is_idempotent_and_absorbs_dominated(
        raw in prop::collection::vec((0u8..20, 0u8..20, 0u8..6), 1..40),
        extra in prop::collection::vec((0u8..20, 0u8..20, 0u8..6), 0..20),
    ) {
        let pts: Vec<_> = raw.iter().map(|&(c, v, t)| point(f64::from(c), f64::from(v), t)).collect();
        let once = pareto_filter(pts.clone());
        prop_assert_eq!(&pareto_filter(once.clone()), &once);
        for p in &pts {
            prop_assert!(once.iter().any(|q| q.objectives == p.objectives || dominates(&q.objectives, &p.objectives)));
        }
        for a in &once {
            prop_assert!(once.iter().all(|b| !dominates(&b.objectives, &a.objectives)));
        }
        // adding anything the front dominates changes nothing
        let mut more = once.clone();
        more.extend(
            extra.iter()
                .map(|&(c, v, t)| point(f64::from(c), f64::from(v), t))
                .filter(|p| once.iter().any(|q| dominates(&q.objectives, &p.objectives))),
        );
        prop_assert_eq!(pareto_filter(more), once);
    }
}
