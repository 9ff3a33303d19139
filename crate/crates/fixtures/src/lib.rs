//! Reference scenarios and seeded random schemes shared by the test suites.
//!
//! Every named fixture is a pure function of its arguments, so the golden
//! files under `scenarios/` can be regenerated at any time and compared
//! byte for byte.

use std::path::PathBuf;

use apgrid::geometry::cells_of_line;
use apgrid::propagation::received_power;
use apgrid::scenario::ScenarioFile;
use apgrid::{
    AntennaPattern, BitrateTable, CandidateSite, Cell, Equipment, EquipmentType, Obstacle, Receiver, ReceiverCell,
    Scheme, Site, Wall,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(col: u32, row: u32) -> Cell {
    Cell::new(col, row)
}

pub fn omni(id: &str, tx_power_dbm: f64, tx_gain_dbi: f64, cost: f64) -> Equipment {
    EquipmentType { id: id.into(), tx_power_dbm, tx_gain_dbi, cost, pattern: AntennaPattern::Omni }
}

pub fn site(id: &str, cell: Cell, infra_cost: f64) -> Site {
    CandidateSite { id: id.into(), cell, infra_cost, allowed_equipment: None, existing_equipment: None }
}

pub fn installed(id: &str, cell: Cell, equipment: &str) -> Site {
    CandidateSite { existing_equipment: Some(equipment.into()), ..site(id, cell, 0.0) }
}

pub fn receiver(id: &str, cell: Cell, weight: f64, min_bitrate_mbps: f64) -> Receiver {
    ReceiverCell { min_bitrate_mbps, ..ReceiverCell::new(id, cell, weight) }
}

/// Receiver carrying a measurement slot for `site`; the level is filled in
/// by [`synthesize_measurements`].
pub fn probe(id: &str, cell: Cell, site: &str) -> Receiver {
    ReceiverCell { measured_from_site: Some(site.into()), ..ReceiverCell::new(id, cell, 1.0) }
}

/// Obstacle made of the straight line of cells from `a` to `b`.
pub fn wall(id: &str, a: Cell, b: Cell, loss_per_cell_db: f64) -> Wall {
    Obstacle {
        id: id.into(),
        cells: cells_of_line(a, b),
        loss_per_cell_db,
        material_label: "wall".into(),
        calibratable: false,
    }
}

/// Filled rectangle between two corner cells, inclusive.
pub fn block(id: &str, a: Cell, b: Cell, loss_per_cell_db: f64) -> Wall {
    let cells = (a.row.min(b.row)..=a.row.max(b.row))
        .flat_map(|row| (a.col.min(b.col)..=a.col.max(b.col)).map(move |col| c(col, row)))
        .collect();
    Obstacle { id: id.into(), cells, loss_per_cell_db, material_label: "block".into(), calibratable: false }
}

pub fn calibratable(mut o: Wall) -> Wall {
    o.calibratable = true;
    o
}

/// Writes into `target` the level each probe would read under `truth`, plus
/// uniform noise in `[-amplitude, amplitude]` when `noise` is given.
///
/// Both schemes must list the same receivers and sites.
pub fn synthesize_measurements(truth: &Scheme, target: &mut Scheme, mut noise: Option<(&mut ChaCha8Rng, f64)>) {
    for (rx, out) in truth.receivers.iter().zip(target.receivers.iter_mut()) {
        let Some(site_id) = &rx.measured_from_site else { continue };
        let s = truth.site_index(site_id).expect("probe site exists");
        let equip = truth.sites[s].existing_equipment.as_deref().expect("probe site has equipment");
        let k = truth.equipment_index(equip).expect("installed equipment is cataloged");
        let level = received_power(truth, s, k, rx.cell, rx.rx_gain_dbi).expect("probe is reachable");
        let jitter = match noise.as_mut() {
            Some((rng, a)) => rng.random_range(-*a..=*a),
            None => 0.0,
        };
        out.measured_power_dbm = Some(level + jitter);
    }
}

/// No candidate sites; the single receiver demands nothing.
pub fn no_sites() -> Scheme {
    let mut s = Scheme::new(12, 8, 1.0);
    s.receivers.push(receiver("desk", c(6, 4), 1.0, 0.0));
    s
}

/// Two rooms separated by a 60 dB barrier; each room's receiver can only be
/// served by the site in the same room.
pub fn two_rooms() -> Scheme {
    let mut s = Scheme::new(30, 10, 1.0);
    s.obstacles.push(wall("barrier", c(15, 0), c(15, 9), 60.0));
    s.equipment.push(omni("ap", 17.0, 3.0, 40.0));
    s.sites.push(site("a", c(2, 5), 100.0));
    s.sites.push(site("b", c(27, 5), 100.0));
    s.receivers.push(receiver("left", c(5, 5), 1.0, 1.0));
    s.receivers.push(receiver("right", c(24, 5), 1.0, 1.0));
    s
}

/// One installed AP in a small office with a few internal walls.
pub fn small_office() -> Scheme {
    let mut s = Scheme::new(30, 20, 1.0);
    s.obstacles.push(wall("north-wall", c(0, 7), c(17, 7), 7.0));
    s.obstacles.push(wall("east-wall", c(20, 0), c(20, 13), 7.0));
    s.obstacles.push(Obstacle { material_label: "concrete".into(), ..block("core", c(8, 12), c(10, 15), 15.0) });
    s.equipment.push(omni("std", 18.0, 6.0, 90.0));
    s.sites.push(installed("ap1", c(12, 10), "std"));
    for (id, cell, w, b) in [
        ("reception", c(3, 3), 2.0, 1.0),
        ("meeting", c(26, 4), 1.0, 1.0),
        ("open-plan", c(15, 17), 3.0, 18.0),
        ("kitchen", c(27, 17), 1.0, 0.0),
        ("corridor", c(5, 10), 1.0, 0.0),
        ("server", c(9, 18), 0.5, 0.0),
    ] {
        s.receivers.push(receiver(id, cell, w, b));
    }
    s
}

/// Five candidate sites, two equipment types: 3^5 = 243 decisions.
pub fn five_sites() -> Scheme {
    let mut s = Scheme::new(60, 40, 5.0);
    s.obstacles.push(wall("spine", c(30, 0), c(30, 27), 9.0));
    s.obstacles.push(wall("west-rooms", c(0, 20), c(22, 20), 6.0));
    s.obstacles.push(wall("east-rooms", c(38, 14), c(59, 14), 6.0));
    s.obstacles.push(Obstacle { material_label: "concrete".into(), ..block("stairs", c(44, 26), c(48, 31), 12.0) });
    s.equipment.push(omni("lite", 8.0, 0.0, 150.0));
    s.equipment.push(omni("pro", 17.0, 4.0, 400.0));
    for (id, cell, cost) in [
        ("s1", c(10, 8), 60.0),
        ("s2", c(12, 31), 80.0),
        ("s3", c(29, 33), 50.0),
        ("s4", c(47, 6), 90.0),
        ("s5", c(52, 22), 120.0),
    ] {
        s.sites.push(site(id, cell, cost));
    }
    for (id, cell, w, b) in [
        ("r01", c(4, 3), 2.0, 1.0),
        ("r02", c(20, 12), 1.0, 0.0),
        ("r03", c(6, 36), 1.5, 1.0),
        ("r04", c(24, 26), 1.0, 0.0),
        ("r05", c(36, 36), 2.0, 0.0),
        ("r06", c(40, 4), 1.0, 1.0),
        ("r07", c(56, 9), 1.0, 0.0),
        ("r08", c(57, 34), 2.5, 1.0),
        ("r09", c(40, 20), 1.0, 0.0),
        ("r10", c(50, 38), 0.5, 0.0),
    ] {
        s.receivers.push(receiver(id, cell, w, b));
    }
    s
}

pub const PLANTED_WALL_DB: f64 = 7.0;
pub const PLANTED_WALL_CATALOG_DB: f64 = 3.0;

/// One installed AP behind a calibratable wall whose catalog absorption
/// (3 dB) understates the 7 dB that produced the six noiseless
/// measurements.
pub fn planted_wall() -> Scheme {
    let mut truth = Scheme::new(40, 20, 1.0);
    truth.obstacles.push(calibratable(wall("wall", c(20, 1), c(20, 18), PLANTED_WALL_DB)));
    truth.equipment.push(omni("std", 18.0, 6.0, 90.0));
    truth.sites.push(installed("ap", c(2, 10), "std"));
    for (i, cell) in [c(30, 4), c(30, 7), c(30, 10), c(30, 13), c(30, 16), c(36, 10)].into_iter().enumerate() {
        truth.receivers.push(probe(&format!("m{}", i + 1), cell, "ap"));
    }
    let mut catalog = truth.clone();
    catalog.obstacles[0].loss_per_cell_db = PLANTED_WALL_CATALOG_DB;
    synthesize_measurements(&truth, &mut catalog, None);
    catalog
}

pub const HIDDEN_ABSORBER_DB: f64 = 14.0;

/// Cataloged walls are exact, but a 14 dB absorber missing from the catalog
/// sits on the clear path to receiver `m-hidden`.
pub fn hidden_absorber() -> Scheme {
    let mut truth = Scheme::new(40, 20, 1.0);
    truth.obstacles.push(calibratable(wall("wall", c(20, 1), c(20, 9), 7.0)));
    truth.equipment.push(omni("std", 18.0, 6.0, 90.0));
    truth.sites.push(installed("ap", c(2, 10), "std"));
    truth.receivers.push(probe("m1", c(30, 3), "ap"));
    truth.receivers.push(probe("m2", c(30, 7), "ap"));
    truth.receivers.push(probe("m-clear", c(12, 2), "ap"));
    truth.receivers.push(probe("m-hidden", c(30, 15), "ap"));
    let mut catalog = truth.clone();
    // cuts the (2,10)-(30,15) line once, away from the other paths
    truth.obstacles.push(wall("cabinet", c(16, 11), c(16, 14), HIDDEN_ABSORBER_DB));
    synthesize_measurements(&truth, &mut catalog, None);
    catalog
}

/// Ground truth of the field-analog fixture: catalog values, true values.
pub const FIELD_WALLS: [(&str, f64, f64); 4] =
    [("partition", 7.0, 12.0), ("corridor", 2.0, 6.0), ("glass", 2.0, 3.0), ("pillar", 10.0, 10.0)];
pub const FIELD_HIDDEN_DB: f64 = 13.0;
pub const FIELD_NOISE_DB: f64 = 2.0;

/// Two installed APs with miscataloged walls and one unmodeled absorber;
/// measurements carry uniform noise of +-2 dB drawn from `seed`.
pub fn field_analog(seed: u64) -> Scheme {
    let mut s = Scheme::new(40, 30, 1.0);
    let [partition, corridor, glass, pillar] = FIELD_WALLS;
    s.obstacles.push(calibratable(wall(partition.0, c(14, 0), c(14, 19), partition.1)));
    s.obstacles.push(calibratable(wall(corridor.0, c(20, 15), c(39, 15), corridor.1)));
    s.obstacles
        .push(calibratable(Obstacle { material_label: "glass".into(), ..wall(glass.0, c(26, 0), c(26, 12), glass.1) }));
    s.obstacles.push(Obstacle { material_label: "concrete".into(), ..block(pillar.0, c(24, 23), c(25, 25), pillar.1) });
    s.equipment.push(omni("std", 18.0, 4.0, 90.0));
    s.sites.push(installed("ap-west", c(4, 6), "std"));
    s.sites.push(installed("ap-east", c(35, 23), "std"));
    for (id, cell, from) in [
        ("w1", c(22, 2), "ap-west"),
        ("w2", c(20, 9), "ap-west"),
        ("w3", c(30, 8), "ap-west"),
        ("w4", c(8, 25), "ap-west"),
        ("w5", c(10, 13), "ap-west"),
        ("w6", c(29, 3), "ap-west"),
        ("e1", c(31, 7), "ap-east"),
        ("e2", c(22, 10), "ap-east"),
        ("e3", c(38, 4), "ap-east"),
        ("e4", c(16, 26), "ap-east"),
        ("e5", c(28, 28), "ap-east"),
    ] {
        s.receivers.push(probe(id, cell, from));
    }

    let mut truth = s.clone();
    for (o, (_, _, actual)) in truth.obstacles.iter_mut().zip(FIELD_WALLS) {
        o.loss_per_cell_db = actual;
    }
    // unmodeled absorber across the clear ap-west -> w4 path
    truth.obstacles.push(wall("hidden", c(5, 15), c(7, 15), FIELD_HIDDEN_DB));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synthesize_measurements(&truth, &mut s, Some((&mut rng, FIELD_NOISE_DB)));
    s
}

/// Sector and point-to-point antennas, a custom bitrate table and a
/// non-default cell size.
pub fn sectors_and_beams() -> Scheme {
    let mut s = Scheme::new(50, 30, 0.5);
    s.bitrate_table = BitrateTable::from_pairs(&[(30.0, 150.0), (22.0, 54.0), (12.0, 11.0), (5.0, 2.0)]);
    s.same_cell_power_dbm = -10.0;
    s.obstacles.push(wall("shelf", c(25, 5), c(25, 24), 4.5));
    s.equipment.push(omni("omni", 16.0, 2.0, 80.0));
    s.equipment.push(EquipmentType {
        id: "panel-east".into(),
        tx_power_dbm: 18.0,
        tx_gain_dbi: 9.0,
        cost: 140.0,
        pattern: AntennaPattern::Sector { azimuth_deg: 0.0, width_deg: 90.0 },
    });
    s.equipment.push(EquipmentType {
        id: "bridge".into(),
        tx_power_dbm: 20.0,
        tx_gain_dbi: 14.0,
        cost: 200.0,
        pattern: AntennaPattern::Beam { partner: c(45, 15) },
    });
    s.sites.push(CandidateSite {
        allowed_equipment: Some(["omni".to_string(), "panel-east".to_string()].into()),
        ..site("west", c(3, 15), 30.0)
    });
    s.sites
        .push(CandidateSite { allowed_equipment: Some(["bridge".to_string()].into()), ..site("mast", c(5, 15), 60.0) });
    s.sites.push(site("east", c(44, 20), 45.0));
    for (id, cell, w, b) in [
        ("bench", c(12, 10), 1.0, 2.0),
        ("dock", c(45, 15), 4.0, 11.0),
        ("loft", c(30, 3), 1.0, 0.0),
        ("yard", c(40, 27), 2.0, 0.0),
    ] {
        s.receivers.push(ReceiverCell { rx_gain_dbi: 2.0, noise_dbm: -92.0, ..receiver(id, cell, w, b) });
    }
    s
}

/// 2 km straight link on 1 m cells with a short wall crossing the midpoint,
/// where the Fresnel cut is 7 cells thick.
pub fn long_link() -> Scheme {
    let mut s = Scheme::new(2001, 21, 1.0);
    s.obstacles.push(wall("mid-wall", c(1000, 8), c(1000, 10), 7.0));
    s.equipment.push(EquipmentType {
        id: "dish".into(),
        tx_power_dbm: 20.0,
        tx_gain_dbi: 24.0,
        cost: 500.0,
        pattern: AntennaPattern::Beam { partner: c(2000, 10) },
    });
    s.sites.push(installed("tower-a", c(0, 10), "dish"));
    s.receivers.push(ReceiverCell { rx_gain_dbi: 24.0, ..receiver("tower-b", c(2000, 10), 1.0, 1.0) });
    s
}

/// The demand at `far` cannot be met by any decision.
pub fn unreachable_demand() -> Scheme {
    let mut s = Scheme::new(40, 10, 5.0);
    s.obstacles.push(wall("vault", c(20, 0), c(20, 9), 80.0));
    s.equipment.push(omni("ap", 15.0, 2.0, 50.0));
    s.sites.push(site("near", c(3, 5), 10.0));
    s.sites.push(site("mid", c(15, 5), 10.0));
    s.receivers.push(receiver("close", c(6, 5), 1.0, 1.0));
    s.receivers.push(receiver("far", c(38, 5), 1.0, 54.0));
    s
}

/// Site `tx` at the west end of a 40x20 grid radiating 24 dBm EIRP, with one
/// clear 10 m path whose measurement undershoots the prediction (-36 dBm)
/// by `discrepancy_db`.
pub fn clear_path_discrepancy(discrepancy_db: f64) -> Scheme {
    let mut s = Scheme::new(40, 20, 1.0);
    s.obstacles.push(calibratable(wall("far-wall", c(35, 0), c(35, 19), 5.0)));
    s.equipment.push(omni("std", 18.0, 6.0, 90.0));
    s.sites.push(installed("tx", c(2, 10), "std"));
    s.receivers.push(ReceiverCell { measured_power_dbm: Some(-36.0 - discrepancy_db), ..probe("rx", c(12, 10), "tx") });
    s
}

fn annotated(name: &str, title: &str, scheme: Scheme) -> (String, ScenarioFile<f64>) {
    let mut file = ScenarioFile::new(scheme);
    file.annotations.insert("title".into(), title.into());
    (name.to_owned(), file)
}

/// The golden scenarios, by file stem.
pub fn golden_scenarios() -> Vec<(String, ScenarioFile<f64>)> {
    vec![
        annotated("no-sites", "No candidate sites", no_sites()),
        annotated("two-rooms", "Two rooms, both sites needed", two_rooms()),
        annotated("small-office", "Small office with one installed AP", small_office()),
        annotated("five-sites", "Five sites, two equipment types", five_sites()),
        annotated("planted-wall", "Wall absorption to recover from measurements", planted_wall()),
        annotated("hidden-absorber", "Measured path crossing an unmodeled absorber", hidden_absorber()),
        annotated("field-analog", "Miscataloged walls, hidden absorber, noisy measurements", field_analog(0)),
        annotated("sectors-and-beams", "Directional antennas and a custom bitrate table", sectors_and_beams()),
        annotated("long-link", "2 km point-to-point link", long_link()),
        annotated("unreachable-demand", "Demand no placement can meet", unreachable_demand()),
    ]
}

/// Directory holding the golden scenario files.
pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Bounds for [`random_scheme`].
#[derive(Clone, Debug)]
pub struct RandomShape {
    pub max_side: u32,
    pub max_sites: usize,
    pub max_equipment: usize,
    pub max_receivers: usize,
    pub max_obstacles: usize,
    /// Allow sector antennas.
    pub sectors: bool,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self { max_side: 40, max_sites: 4, max_equipment: 3, max_receivers: 6, max_obstacles: 5, sectors: true }
    }
}

impl RandomShape {
    /// Small enough for the exhaustive solver: at most 3^5 decisions.
    pub fn small() -> Self {
        Self { max_side: 30, max_sites: 5, max_equipment: 2, max_receivers: 6, max_obstacles: 4, sectors: true }
    }
}

fn distinct_cells(rng: &mut ChaCha8Rng, w: u32, h: u32, n: usize) -> Vec<Cell> {
    let mut all: Vec<Cell> = (0..h).flat_map(|r| (0..w).map(move |col| c(col, r))).collect();
    all.shuffle(rng);
    all.truncate(n);
    all
}

/// A valid scheme with every quantity drawn from `rng` within `shape`.
pub fn random_scheme(rng: &mut ChaCha8Rng, shape: &RandomShape) -> Scheme {
    let w = rng.random_range(8..=shape.max_side);
    let h = rng.random_range(8..=shape.max_side);
    let cell_size = [0.5, 1.0, 2.0, 5.0][rng.random_range(0..4)];
    let mut s = Scheme::new(w, h, cell_size);

    for q in 0..rng.random_range(0..=shape.max_obstacles) {
        let a = c(rng.random_range(0..w), rng.random_range(0..h));
        let b = c(rng.random_range(0..w), rng.random_range(0..h));
        let loss = f64::from(rng.random_range(1..=30u32)) * 0.5;
        let mut o =
            if rng.random_bool(0.7) { wall(&format!("o{q}"), a, b, loss) } else { block(&format!("o{q}"), a, b, loss) };
        o.calibratable = rng.random_bool(0.5);
        s.obstacles.push(o);
    }

    for k in 0..rng.random_range(1..=shape.max_equipment) {
        let pattern = if shape.sectors && rng.random_bool(0.25) {
            AntennaPattern::Sector {
                azimuth_deg: f64::from(rng.random_range(0..8u32)) * 45.0,
                width_deg: [60.0, 90.0, 120.0, 360.0][rng.random_range(0..4)],
            }
        } else {
            AntennaPattern::Omni
        };
        s.equipment.push(EquipmentType {
            id: format!("e{k}"),
            tx_power_dbm: f64::from(rng.random_range(10..=23u32)),
            tx_gain_dbi: f64::from(rng.random_range(0..=16u32)) * 0.5,
            cost: f64::from(rng.random_range(1..=40u32)) * 10.0,
            pattern,
        });
    }

    let n_sites = rng.random_range(1..=shape.max_sites);
    let n_rx = rng.random_range(1..=shape.max_receivers);
    let cells = distinct_cells(rng, w, h, n_sites + n_rx);
    for (i, &cell) in cells[..n_sites].iter().enumerate() {
        s.sites.push(site(&format!("s{i}"), cell, f64::from(rng.random_range(0..=20u32)) * 10.0));
    }
    for (j, &cell) in cells[n_sites..].iter().enumerate() {
        let weight = f64::from(rng.random_range(1..=10u32)) * 0.5;
        let demand = [0.0, 0.0, 1.0, 18.0][rng.random_range(0..4)];
        s.receivers.push(receiver(&format!("r{j}"), cell, weight, demand));
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
