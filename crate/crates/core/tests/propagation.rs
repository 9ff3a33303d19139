use apgrid::propagation::{
    best_link, bitrate, build_path_profile, coverage_map, free_space_loss, fresnel_thickness_cells, path_obstacle_loss,
    received_power, segment_loss, Propagator,
};
use apgrid::{BitrateTable, Obstacle, PlacementDecision, ReceiverCell, Scheme};
use apgrid_fixtures::{block, c, installed, long_link, omni, random_scheme, rng, site, wall, RandomShape};
use proptest::prelude::*;
use rand::Rng;

fn thickness_oracle(d_ap: f64, d_rx: f64, cell: f64) -> u32 {
    let r = 0.3531 / cell * (d_ap * d_rx / (d_ap + d_rx)).sqrt();
    if r < 1.5 {
        1
    } else {
        r.floor() as u32
    }
}

#[test]
fn fresnel_thickness_matches_direct_evaluation() {
    assert_eq!(fresnel_thickness_cells(50.0, 50.0, 1.0), thickness_oracle(50.0, 50.0, 1.0));
    assert_eq!(fresnel_thickness_cells(50.0, 50.0, 1.0), 1);
    assert_eq!(fresnel_thickness_cells(1000.0, 1000.0, 1.0), thickness_oracle(1000.0, 1000.0, 1.0));
    assert_eq!(fresnel_thickness_cells(1000.0, 1000.0, 1.0), 7);
}

#[test]
fn long_link_midpoint_cut_is_seven_cells_with_three_walled() {
    let scheme = long_link();
    let profile = build_path_profile(&scheme, c(0, 10), c(2000, 10));
    assert_eq!(profile.len(), 2001);
    let mid = &profile.segments[1000];
    assert_eq!(mid.center, c(1000, 10));
    assert_eq!(mid.thickness, 7);
    // horizontal path: the cut is the column through the center, rows 7..=13
    let expected: Vec<_> = (7..=13).map(|r| c(1000, r)).collect();
    let mut cells = mid.cells.clone();
    cells.sort();
    assert_eq!(cells, expected);
    // wall rows 8..=10 by brute force
    let wall_cells = &scheme.obstacles[0].cells;
    let hand = mid.cells.iter().filter(|x| wall_cells.contains(x)).count() as u32;
    assert_eq!(hand, 3);
    assert_eq!(mid.occupancy.len(), 1);
    assert_eq!(mid.occupancy[0].count, 3);
    assert_eq!(mid.occupancy[0].ratio, 3.0 / 7.0);
    // more than a quarter of the cut: full absorption, only this cut touched
    assert_eq!(segment_loss(mid, &scheme.obstacles), 7.0);
    assert_eq!(profile.segments.iter().filter(|s| !s.occupancy.is_empty()).count(), 1);
    assert_eq!(path_obstacle_loss(&profile, &scheme.obstacles), 7.0);
    // every cut thickness follows the closed form
    for (m, &t) in profile.thickness.iter().enumerate() {
        assert_eq!(t, thickness_oracle(m as f64, 2000.0 - m as f64, 1.0), "at {m}");
    }

    let rx = &scheme.receivers[0];
    let link = best_link(&scheme, &scheme.existing_decision(), rx).unwrap().unwrap();
    assert_eq!(link.obstacle_loss_db, 7.0);
    let expected = 20.0 + 24.0 + 24.0 - 7.0 - (40.0 + 20.0 * 2000f64.log10());
    assert!((link.received_dbm - expected).abs() < 1e-12);
}

#[test]
fn quarter_rule_in_an_eight_cell_cut() {
    // 8-cell cuts need D_i D_j / (D_i + D_j) >= (8 / 0.3531)^2 on 1 m cells;
    // a 3000 m link has 8 <= r < 9 at its middle
    let mut s = Scheme::new(3001, 21, 1.0);
    let mid = c(1500, 10);
    assert_eq!(fresnel_thickness_cells(1500.0, 1500.0, 1.0), 9);
    s.obstacles.push(wall("w", c(1500, 10), c(1500, 10), 7.0));
    let profile = build_path_profile(&s, c(0, 10), c(3000, 10));
    let seg = &profile.segments[1500];
    assert_eq!(seg.center, mid);
    assert_eq!(seg.thickness, 9);
    assert_eq!(segment_loss(seg, &s.obstacles), (1.0 / 9.0) * 7.0);

    // find an 8-thick cut on the same path and occupy 1 then 3 of its cells
    let m = profile.thickness.iter().position(|&t| t == 8).unwrap();
    let seg8 = profile.segments[m].clone();
    let one = vec![Obstacle { cells: seg8.cells[..1].to_vec(), ..s.obstacles[0].clone() }];
    let three = vec![Obstacle { cells: seg8.cells[..3].to_vec(), ..s.obstacles[0].clone() }];
    let mut s1 = s.clone();
    s1.obstacles = one;
    let p1 = build_path_profile(&s1, c(0, 10), c(3000, 10));
    assert_eq!(segment_loss(&p1.segments[m], &s1.obstacles), 0.875);
    let mut s3 = s.clone();
    s3.obstacles = three;
    let p3 = build_path_profile(&s3, c(0, 10), c(3000, 10));
    assert_eq!(segment_loss(&p3.segments[m], &s3.obstacles), 7.0);
}

#[test]
fn dense_obstacle_blocks_every_cut_it_touches() {
    // 12 thickness-1 cuts, obstacle on 5 of them (41.7% of the zone)
    let mut s = Scheme::new(20, 10, 1.0);
    s.obstacles.push(wall("dense", c(3, 5), c(7, 5), 7.0));
    let profile = build_path_profile(&s, c(0, 5), c(11, 5));
    assert_eq!(profile.thickness, vec![1; 12]);
    assert_eq!(path_obstacle_loss(&profile, &s.obstacles), 35.0);
}

#[test]
fn zone_rule_overrides_proportional_cuts() {
    // 1 cm cells make the zone thick on a 20-cell link
    let cell = 0.01;
    let n = 20u32;
    let thick: Vec<u32> =
        (0..=n).map(|m| thickness_oracle(f64::from(m) * cell, f64::from(n - m) * cell, cell)).collect();
    let total: u32 = thick.iter().sum();
    let (lo, hi) = (8u32, 12u32);
    let full: u32 = thick[lo as usize..=hi as usize].iter().sum();
    // one extra cell in a thick cut far from the block
    let far = thick.iter().position(|&t| t >= 4).unwrap() as u32;
    assert!(far < lo);
    assert!(10 * (full + 1) > 3 * total, "fixture must exceed 30%");

    let mut s = Scheme::new(n + 1, 101, cell);
    let mut o = block("dense", c(lo, 0), c(hi, 100), 2.0);
    o.cells.push(c(far, 50));
    s.obstacles.push(o);
    let profile = build_path_profile(&s, c(0, 50), c(n, 50));
    assert_eq!(profile.thickness, thick);
    // six cuts touched, each counted whole
    assert_eq!(path_obstacle_loss(&profile, &s.obstacles), 12.0);

    // without the block the lone cell is proportional
    let mut lone = s.clone();
    lone.obstacles[0].cells = vec![c(far, 50)];
    let p = build_path_profile(&lone, c(0, 50), c(n, 50));
    let t = thick[far as usize];
    let expected = if 4 <= t { 2.0 / f64::from(t) } else { 2.0 };
    assert_eq!(path_obstacle_loss(&p, &lone.obstacles), expected);
}

fn two_ap_scheme() -> Scheme {
    let mut s = Scheme::new(40, 20, 1.0);
    s.equipment.push(omni("std", 18.0, 6.0, 10.0));
    s.sites.push(installed("a", c(2, 10), "std"));
    s.sites.push(installed("b", c(30, 10), "std"));
    s
}

#[test]
fn link_examples() {
    let mut s = two_ap_scheme();
    let rx = ReceiverCell { rx_gain_dbi: 2.0, ..ReceiverCell::new("rx", c(12, 10), 1.0) };
    let only_a: PlacementDecision = [("a", "std")].into_iter().collect();
    let link = best_link(&s, &only_a, &rx).unwrap().unwrap();
    assert_eq!(link.received_dbm, -34.0);
    s.obstacles.push(wall("w", c(7, 10), c(7, 10), 7.0));
    let link = best_link(&s, &only_a, &rx).unwrap().unwrap();
    assert_eq!(link.received_dbm, -41.0);
    assert_eq!(best_link(&s, &PlacementDecision::new(), &rx).unwrap(), None);
}

#[test]
fn best_link_picks_the_stronger_then_lowest_id() {
    let s = two_ap_scheme();
    let both = s.existing_decision();
    // 10 m from a, 18 m from b
    let l = best_link(&s, &both, &ReceiverCell::new("x", c(12, 10), 1.0)).unwrap().unwrap();
    assert_eq!(l.site, "a");
    // equidistant: tie to "a"
    let l = best_link(&s, &both, &ReceiverCell::new("y", c(16, 10), 1.0)).unwrap().unwrap();
    assert_eq!(l.site, "a");
    let l = best_link(&s, &both, &ReceiverCell::new("z", c(25, 10), 1.0)).unwrap().unwrap();
    assert_eq!(l.site, "b");
}

#[test]
fn coverage_map_examples() {
    let mut s = two_ap_scheme();
    let empty = coverage_map(&s, &PlacementDecision::new()).unwrap();
    assert!(empty.power_dbm.iter().all(Option::is_none));
    assert!(empty.rate_mbps.iter().all(|&r| r == 0.0));

    s.sites.truncate(1);
    let map = coverage_map(&s, &s.existing_decision()).unwrap();
    assert_eq!(map.power_dbm.len(), 800);
    assert_eq!(map.power_at(c(2, 10)), Some(0.0));
    // ring by ring away from the AP on an empty grid
    let ap = c(2, 10);
    let mut cells: Vec<_> = (0..20).flat_map(|r| (0..40).map(move |col| c(col, r))).filter(|&x| x != ap).collect();
    cells.sort_by(|x, y| {
        let d = |p: apgrid::Cell| apgrid::geometry::distance_m(ap, p, 1.0);
        d(*x).partial_cmp(&d(*y)).unwrap()
    });
    for w in cells.windows(2) {
        assert!(map.power_at(w[0]).unwrap() >= map.power_at(w[1]).unwrap());
    }
}

#[test]
fn coverage_map_agrees_with_best_link_at_receivers() {
    let mut r = rng(11);
    for _ in 0..30 {
        let mut s = random_scheme(&mut r, &RandomShape::default());
        for rx in &mut s.receivers {
            rx.noise_dbm = -95.0;
            rx.rx_gain_dbi = 0.0;
        }
        let mut d = PlacementDecision::new();
        for site in &s.sites {
            if r.random_bool(0.6) {
                d.assign(site.id.clone(), s.equipment[r.random_range(0..s.equipment.len())].id.clone());
            }
        }
        let map = coverage_map(&s, &d).unwrap();
        for rx in &s.receivers {
            let l = best_link(&s, &d, rx).unwrap();
            assert_eq!(map.power_at(rx.cell), l.as_ref().map(|l| l.received_dbm));
            assert_eq!(map.rate_at(rx.cell), l.as_ref().map_or(0.0, |l| l.rate_mbps));
        }
    }
}

proptest! {
    #[test]
    fn fsl_strictly_increasing(a in 1.0f64..1e5, b in 1.0f64..1e5) {
        prop_assume!(a < b);
        prop_assert!(free_space_loss(a) < free_space_loss(b));
    }

    #[test]
    fn thickness_symmetric_and_peaks_in_the_middle(total in 1u32..5000, at in 0u32..5000, cell in 0.1f64..5.0) {
        let at = at % (total + 1);
        let (i, j) = (f64::from(at), f64::from(total - at));
        prop_assert_eq!(fresnel_thickness_cells(i, j, cell), fresnel_thickness_cells(j, i, cell));
        let half = f64::from(total) / 2.0;
        prop_assert!(fresnel_thickness_cells(i, j, cell) <= fresnel_thickness_cells(half, half, cell));
    }

    #[test]
    fn bitrate_monotone(a in -50.0f64..80.0, b in -50.0f64..80.0) {
        let t = BitrateTable::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bitrate(lo, &t) <= bitrate(hi, &t));
    }

    #[test]
    fn clear_zone_has_no_obstacle_loss(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_scheme(&mut r, &RandomShape::default());
        let a = s.sites[0].cell;
        let b = s.receivers[0].cell;
        let p = build_path_profile(&s, a, b);
        if p.is_clear() {
            prop_assert_eq!(path_obstacle_loss(&p, &s.obstacles), 0.0);
        }
        prop_assert!(path_obstacle_loss(&p, &s.obstacles) >= 0.0);
    }

    #[test]
    fn argmax_invariant_under_common_tx_shift(seed in any::<u64>(), shift in -20.0f64..20.0) {
        let mut r = rng(seed);
        let s = random_scheme(&mut r, &RandomShape::default());
        let mut d = PlacementDecision::new();
        for (i, site) in s.sites.iter().enumerate() {
            d.assign(site.id.clone(), s.equipment[i % s.equipment.len()].id.clone());
        }
        let mut shifted = s.clone();
        for e in &mut shifted.equipment {
            e.tx_power_dbm += shift;
        }
        for rx in &s.receivers {
            let a = best_link(&s, &d, rx).unwrap().map(|l| l.site);
            let b = best_link(&shifted, &d, rx).unwrap().map(|l| l.site);
            // shifting by a non-representable amount can reorder exact ties only
            if a != b {
                let la = best_link(&s, &d, rx).unwrap().unwrap();
                let other = s.site_index(b.as_deref().unwrap()).unwrap();
                let k = s.equipment_index(d.equipment_at(&s.sites[other].id).unwrap()).unwrap();
                let lb = received_power(&s, other, k, rx.cell, rx.rx_gain_dbi).unwrap();
                prop_assert!((la.received_dbm - lb).abs() < 1e-9);
            }
        }
    }
}

/// Every produced budget satisfies the identity exactly, and its terms
/// agree with the standalone functions.
#[test]
fn budget_identity_on_random_triples() {
    let mut r = rng(2024);
    let mut checked = 0;
    while checked < 2_000 {
        let s = random_scheme(&mut r, &RandomShape::default());
        let prop = Propagator::new(&s);
        for _ in 0..10 {
            let i = r.random_range(0..s.sites.len());
            let k = r.random_range(0..s.equipment.len());
            let target = s.receivers[r.random_range(0..s.receivers.len())].cell;
            let gain = f64::from(r.random_range(0..6u32));
            if let Some(l) = prop.link(i, k, target, gain, -95.0) {
                assert_eq!(
                    l.received_dbm,
                    l.tx_power_dbm + l.tx_gain_dbi + l.rx_gain_dbi - l.obstacle_loss_db - l.fsl_db
                );
                if target != s.sites[i].cell {
                    assert_eq!(l.fsl_db, free_space_loss(l.distance_m));
                    let p = build_path_profile(&s, s.sites[i].cell, target);
                    assert_eq!(l.obstacle_loss_db, path_obstacle_loss(&p, &s.obstacles));
                }
                assert_eq!(l.snr_db, l.received_dbm + 95.0);
                assert_eq!(l.rate_mbps, bitrate(l.snr_db, &s.bitrate_table));
                checked += 1;
            }
        }
    }
}

#[test]
fn adding_obstacle_cells_never_raises_received_power() {
    let mut r = rng(77);
    let mut mutations = 0;
    while mutations < 300 {
        let mut s = random_scheme(&mut r, &RandomShape::default());
        let (i, k) = (0, 0);
        let target = s.receivers[0].cell;
        let Some(mut level) = received_power(&s, i, k, target, 0.0) else { continue };
        for _ in 0..10 {
            let p = build_path_profile(&s, s.sites[i].cell, target);
            let seg = &p.segments[r.random_range(0..p.segments.len())];
            let cell = seg.cells[r.random_range(0..seg.cells.len())];
            if s.obstacles.is_empty() || r.random_bool(0.2) {
                let id = format!("new{}", s.obstacles.len());
                s.obstacles.push(block(&id, cell, cell, 3.0));
            } else {
                let q = r.random_range(0..s.obstacles.len());
                if !s.obstacles[q].cells.contains(&cell) {
                    s.obstacles[q].cells.push(cell);
                }
            }
            let next = received_power(&s, i, k, target, 0.0).unwrap();
            assert!(next <= level, "{next} > {level}");
            level = next;
            mutations += 1;
        }
    }
}

#[test]
fn sector_miss_is_unreachable() {
    let mut s = Scheme::new(20, 20, 1.0);
    s.equipment.push(apgrid::EquipmentType {
        pattern: apgrid::AntennaPattern::Sector { azimuth_deg: 0.0, width_deg: 60.0 },
        ..omni("panel", 18.0, 9.0, 1.0)
    });
    s.sites.push(site("s", c(10, 10), 0.0));
    assert!(received_power(&s, 0, 0, c(18, 10), 0.0).is_some());
    assert_eq!(received_power(&s, 0, 0, c(2, 10), 0.0), None);
}

#[test]
fn works_in_single_precision() {
    let s64 = apgrid_fixtures::small_office();
    let json = serde_json::to_string(&s64).unwrap();
    let s32: apgrid::SchemeF32 = serde_json::from_str(&json).unwrap();
    let d = s64.existing_decision();
    for rx in &s64.receivers {
        let a = best_link(&s64, &d, rx).unwrap().unwrap();
        let rx32 = s32.receivers.iter().find(|r| r.id == rx.id).unwrap();
        let b = best_link(&s32, &d, rx32).unwrap().unwrap();
        assert!((a.received_dbm - f64::from(b.received_dbm)).abs() < 1e-3);
    }
}
