//! Environment description: grid geometry, obstacles, candidate sites, the
//! equipment catalog, receiving cells and their measurements.
//!
//! Equipment sits at cell centers; obstacle borders follow cell borders. All
//! losses are stored as positive attenuation in dB.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DecisionError;
use crate::scalar::Scalar;

/// Discrete coordinates of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub col: u32,
    pub row: u32,
}

impl Cell {
    pub const fn new(col: u32, row: u32) -> Self {
        Self { col, row }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Radiation pattern of an access point antenna.
///
/// Bearings are measured from the `+col` axis, counterclockwise toward `+row`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AntennaPattern<T> {
    Omni,
    Sector {
        azimuth_deg: T,
        width_deg: T,
    },
    /// Point-to-point link: only the AP cell and the partner cell are served.
    Beam {
        partner: Cell,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle<T> {
    pub id: String,
    pub cells: Vec<Cell>,
    /// Absorption of a layer one cell thick.
    #[serde(rename = "loss_per_cell_dB")]
    pub loss_per_cell_db: T,
    #[serde(default)]
    pub material_label: String,
    #[serde(default)]
    pub calibratable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquipmentType<T> {
    pub id: String,
    #[serde(rename = "tx_power_dBm")]
    pub tx_power_dbm: T,
    /// Antenna gain net of cable losses.
    #[serde(rename = "tx_gain_dBi")]
    pub tx_gain_dbi: T,
    pub cost: T,
    pub pattern: AntennaPattern<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSite<T> {
    pub id: String,
    pub cell: Cell,
    pub infra_cost: T,
    /// `None` allows every equipment type of the catalog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_equipment: Option<BTreeSet<String>>,
    /// Equipment already installed here (the current network).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub existing_equipment: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct ReceiverCell<T> {
    pub id: String,
    pub cell: Cell,
    pub weight: T,
    #[serde(default)]
    pub min_bitrate_mbps: T,
    #[serde(rename = "noise_dBm", default = "default_noise_dbm")]
    pub noise_dbm: T,
    #[serde(rename = "rx_gain_dBi", default)]
    pub rx_gain_dbi: T,
    #[serde(rename = "measured_power_dBm", default, skip_serializing_if = "Option::is_none")]
    pub measured_power_dbm: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_from_site: Option<String>,
}

pub const DEFAULT_NOISE_DBM: f64 = -95.0;
pub const DEFAULT_RX_GAIN_DBI: f64 = 0.0;
pub const DEFAULT_FREQUENCY_GHZ: f64 = 2.44;

fn default_noise_dbm<T: Scalar>() -> T {
    T::lit(DEFAULT_NOISE_DBM)
}

fn default_frequency<T: Scalar>() -> T {
    T::lit(DEFAULT_FREQUENCY_GHZ)
}

impl<T: Scalar> ReceiverCell<T> {
    /// Receiver with default noise floor and gain, no bitrate demand.
    pub fn new(id: impl Into<String>, cell: Cell, weight: T) -> Self {
        Self {
            id: id.into(),
            cell,
            weight,
            min_bitrate_mbps: T::zero(),
            noise_dbm: default_noise_dbm(),
            rx_gain_dbi: T::lit(DEFAULT_RX_GAIN_DBI),
            measured_power_dbm: None,
            measured_from_site: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitrateStep<T> {
    #[serde(rename = "snr_threshold_dB")]
    pub snr_threshold_db: T,
    pub rate_mbps: T,
}

/// SNR-to-rate step function. Thresholds and rates both strictly decrease
/// down the list; below the last threshold the rate is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitrateTable<T> {
    pub steps: Vec<BitrateStep<T>>,
}

impl<T: Scalar> Default for BitrateTable<T> {
    /// 54/18/1 Mb/s tiers at 25/15/4 dB SNR.
    fn default() -> Self {
        Self::from_pairs(&[(25.0, 54.0), (15.0, 18.0), (4.0, 1.0)])
    }
}

impl<T: Scalar> BitrateTable<T> {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self {
            steps: pairs
                .iter()
                .map(|&(t, r)| BitrateStep { snr_threshold_db: T::lit(t), rate_mbps: T::lit(r) })
                .collect(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.steps.iter().all(|s| s.snr_threshold_db.is_finite() && s.rate_mbps.is_finite() && s.rate_mbps > T::zero())
            && self
                .steps
                .windows(2)
                .all(|w| w[0].snr_threshold_db > w[1].snr_threshold_db && w[0].rate_mbps > w[1].rate_mbps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct GridScheme<T> {
    pub width_cells: u32,
    pub height_cells: u32,
    pub cell_size_m: T,
    /// Informational: model constants are fixed for 2.44 GHz.
    #[serde(rename = "frequency_GHz", default = "default_frequency")]
    pub frequency_ghz: T,
    /// Level reported for a receiver in the AP's own cell.
    #[serde(rename = "same_cell_power_dBm", default)]
    pub same_cell_power_dbm: T,
    #[serde(default)]
    pub obstacles: Vec<Obstacle<T>>,
    #[serde(default)]
    pub equipment: Vec<EquipmentType<T>>,
    #[serde(default)]
    pub sites: Vec<CandidateSite<T>>,
    #[serde(default)]
    pub receivers: Vec<ReceiverCell<T>>,
    #[serde(default)]
    pub bitrate_table: BitrateTable<T>,
}

impl<T: Scalar> GridScheme<T> {
    /// Empty environment of the given size.
    pub fn new(width_cells: u32, height_cells: u32, cell_size_m: T) -> Self {
        Self {
            width_cells,
            height_cells,
            cell_size_m,
            frequency_ghz: default_frequency(),
            same_cell_power_dbm: T::zero(),
            obstacles: Vec::new(),
            equipment: Vec::new(),
            sites: Vec::new(),
            receivers: Vec::new(),
            bitrate_table: BitrateTable::default(),
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.col < self.width_cells && cell.row < self.height_cells
    }

    pub fn cell_count(&self) -> usize {
        self.width_cells as usize * self.height_cells as usize
    }

    pub fn site_index(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.id == id)
    }

    pub fn equipment_index(&self, id: &str) -> Option<usize> {
        self.equipment.iter().position(|e| e.id == id)
    }

    pub fn obstacle_index(&self, id: &str) -> Option<usize> {
        self.obstacles.iter().position(|o| o.id == id)
    }

    /// Catalog indices of the equipment a site may host, in catalog order.
    pub fn allowed_equipment(&self, site: usize) -> Vec<usize> {
        match &self.sites[site].allowed_equipment {
            None => (0..self.equipment.len()).collect(),
            Some(ids) => (0..self.equipment.len()).filter(|&k| ids.contains(&self.equipment[k].id)).collect(),
        }
    }

    /// Site indices sorted by site id. Used wherever ties are broken by id.
    pub fn sites_by_id(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.sites.len()).collect();
        idx.sort_by(|&a, &b| self.sites[a].id.cmp(&self.sites[b].id));
        idx
    }

    /// The decision describing the equipment already installed.
    pub fn existing_decision(&self) -> PlacementDecision {
        let mut d = PlacementDecision::new();
        for site in &self.sites {
            if let Some(e) = &site.existing_equipment {
                d.assign(site.id.clone(), e.clone());
            }
        }
        d
    }
}

/// Machine-readable class of a scheme invariant violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    EmptyGrid,
    InvalidCellSize,
    InvalidFrequency,
    NonFiniteValue,
    OutOfBounds,
    DuplicateId,
    DuplicateSite,
    EmptyObstacle,
    NegativeLoss,
    NegativeCost,
    InvalidSectorWidth,
    UnknownEquipment,
    EmptyAllowedEquipment,
    ExistingNotAllowed,
    NegativeWeight,
    NegativeMinBitrate,
    MeasurementMismatch,
    UnknownSite,
    InvalidBitrateTable,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EmptyGrid => "empty-grid",
            Self::InvalidCellSize => "invalid-cell-size",
            Self::InvalidFrequency => "invalid-frequency",
            Self::NonFiniteValue => "non-finite-value",
            Self::OutOfBounds => "out-of-bounds",
            Self::DuplicateId => "duplicate-id",
            Self::DuplicateSite => "duplicate-site",
            Self::EmptyObstacle => "empty-obstacle",
            Self::NegativeLoss => "negative-loss",
            Self::NegativeCost => "negative-cost",
            Self::InvalidSectorWidth => "invalid-sector-width",
            Self::UnknownEquipment => "unknown-equipment",
            Self::EmptyAllowedEquipment => "empty-allowed-equipment",
            Self::ExistingNotAllowed => "existing-not-allowed",
            Self::NegativeWeight => "negative-weight",
            Self::NegativeMinBitrate => "negative-min-bitrate",
            Self::MeasurementMismatch => "measurement-mismatch",
            Self::UnknownSite => "unknown-site",
            Self::InvalidBitrateTable => "invalid-bitrate-table",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Id of the offending element, or the field name for grid-level problems.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.code, self.subject, self.message)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, code: ViolationCode, subject: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { code, subject: subject.into(), message: message.into() });
    }

    fn finite<T: Scalar>(&mut self, subject: &str, field: &str, v: T) -> bool {
        if v.is_finite() {
            true
        } else {
            self.push(ViolationCode::NonFiniteValue, subject, format!("{field} is not finite"));
            false
        }
    }

    fn unique<'a>(&mut self, kind: &str, ids: impl Iterator<Item = &'a str>) {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                self.push(ViolationCode::DuplicateId, id, format!("duplicate {kind} id"));
            }
        }
    }
}

/// Checks every scheme invariant. An empty list means the scheme is valid.
pub fn validate_scheme<T: Scalar>(scheme: &GridScheme<T>) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Collector(Vec::new());

    if scheme.width_cells == 0 || scheme.height_cells == 0 {
        out.push(EmptyGrid, "grid", "grid dimensions must be positive");
    }
    if !(scheme.cell_size_m.is_finite() && scheme.cell_size_m > T::zero()) {
        out.push(InvalidCellSize, "cell_size_m", "cell size must be a positive finite number");
    }
    if !(scheme.frequency_ghz.is_finite() && scheme.frequency_ghz > T::zero()) {
        out.push(InvalidFrequency, "frequency_GHz", "frequency must be a positive finite number");
    }
    out.finite("same_cell_power_dBm", "same_cell_power_dBm", scheme.same_cell_power_dbm);

    let bounds = |out: &mut Collector, subject: &str, what: &str, cell: Cell| {
        if !scheme.contains(cell) {
            out.push(
                OutOfBounds,
                subject,
                format!("{what} {cell} outside the {}x{} grid", scheme.width_cells, scheme.height_cells),
            );
        }
    };

    out.unique("obstacle", scheme.obstacles.iter().map(|o| o.id.as_str()));
    for o in &scheme.obstacles {
        if o.cells.is_empty() {
            out.push(EmptyObstacle, &o.id, "obstacle has no cells");
        }
        for &c in &o.cells {
            bounds(&mut out, &o.id, "obstacle cell", c);
        }
        if out.finite(&o.id, "loss_per_cell_dB", o.loss_per_cell_db) && o.loss_per_cell_db < T::zero() {
            out.push(NegativeLoss, &o.id, "loss_per_cell_dB must be >= 0 (stored as attenuation)");
        }
    }

    out.unique("equipment", scheme.equipment.iter().map(|e| e.id.as_str()));
    for e in &scheme.equipment {
        out.finite(&e.id, "tx_power_dBm", e.tx_power_dbm);
        out.finite(&e.id, "tx_gain_dBi", e.tx_gain_dbi);
        if out.finite(&e.id, "cost", e.cost) && e.cost < T::zero() {
            out.push(NegativeCost, &e.id, "equipment cost must be >= 0");
        }
        match e.pattern {
            AntennaPattern::Omni => {}
            AntennaPattern::Sector { azimuth_deg, width_deg } => {
                out.finite(&e.id, "azimuth_deg", azimuth_deg);
                if !(width_deg > T::zero() && width_deg <= T::lit(360.0)) {
                    out.push(InvalidSectorWidth, &e.id, "sector width must lie in (0, 360]");
                }
            }
            AntennaPattern::Beam { partner } => bounds(&mut out, &e.id, "beam partner", partner),
        }
    }
    let equipment_ids: HashSet<&str> = scheme.equipment.iter().map(|e| e.id.as_str()).collect();

    out.unique("site", scheme.sites.iter().map(|s| s.id.as_str()));
    let mut site_cells: HashMap<Cell, &str> = HashMap::new();
    for s in &scheme.sites {
        bounds(&mut out, &s.id, "site cell", s.cell);
        if let Some(other) = site_cells.insert(s.cell, &s.id) {
            out.push(DuplicateSite, &s.id, format!("shares cell {} with site {other}", s.cell));
        }
        if out.finite(&s.id, "infra_cost", s.infra_cost) && s.infra_cost < T::zero() {
            out.push(NegativeCost, &s.id, "infra_cost must be >= 0");
        }
        if let Some(allowed) = &s.allowed_equipment {
            if allowed.is_empty() {
                out.push(EmptyAllowedEquipment, &s.id, "allowed_equipment is empty");
            }
            for id in allowed {
                if !equipment_ids.contains(id.as_str()) {
                    out.push(UnknownEquipment, &s.id, format!("allowed equipment {id} not in catalog"));
                }
            }
        } else if scheme.equipment.is_empty() {
            out.push(EmptyAllowedEquipment, &s.id, "equipment catalog is empty");
        }
        if let Some(existing) = &s.existing_equipment {
            if !equipment_ids.contains(existing.as_str()) {
                out.push(UnknownEquipment, &s.id, format!("existing equipment {existing} not in catalog"));
            } else if s.allowed_equipment.as_ref().is_some_and(|a| !a.contains(existing)) {
                out.push(ExistingNotAllowed, &s.id, format!("existing equipment {existing} not allowed here"));
            }
        }
    }
    let site_ids: HashSet<&str> = scheme.sites.iter().map(|s| s.id.as_str()).collect();

    out.unique("receiver", scheme.receivers.iter().map(|r| r.id.as_str()));
    for r in &scheme.receivers {
        bounds(&mut out, &r.id, "receiver cell", r.cell);
        if out.finite(&r.id, "weight", r.weight) && r.weight < T::zero() {
            out.push(NegativeWeight, &r.id, "weight must be >= 0");
        }
        if out.finite(&r.id, "min_bitrate_mbps", r.min_bitrate_mbps) && r.min_bitrate_mbps < T::zero() {
            out.push(NegativeMinBitrate, &r.id, "min_bitrate_mbps must be >= 0");
        }
        out.finite(&r.id, "noise_dBm", r.noise_dbm);
        out.finite(&r.id, "rx_gain_dBi", r.rx_gain_dbi);
        if let Some(p) = r.measured_power_dbm {
            out.finite(&r.id, "measured_power_dBm", p);
        }
        match (&r.measured_power_dbm, &r.measured_from_site) {
            (Some(_), Some(site)) => {
                if !site_ids.contains(site.as_str()) {
                    out.push(UnknownSite, &r.id, format!("measured_from_site {site} does not exist"));
                }
            }
            (None, None) => {}
            _ => out.push(MeasurementMismatch, &r.id, "measured_power_dBm and measured_from_site must be set together"),
        }
    }

    if !scheme.bitrate_table.is_valid() {
        out.push(
            InvalidBitrateTable,
            "bitrate_table",
            "thresholds and rates must be finite, positive rates, strictly decreasing",
        );
    }

    out.0
}

/// Equipment choice per candidate site. A site maps to at most one
/// equipment type; unassigned sites are absent.
///
/// Ordering is lexicographic over the sorted `(site id, equipment id)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlacementDecision {
    assignment: BTreeMap<String, String>,
}

impl PlacementDecision {
    pub fn new() -> Self {
        Self::default()
    }

    /// Places `equipment` at `site`, replacing any previous choice there.
    pub fn assign(&mut self, site: impl Into<String>, equipment: impl Into<String>) -> Option<String> {
        self.assignment.insert(site.into(), equipment.into())
    }

    pub fn clear(&mut self, site: &str) -> Option<String> {
        self.assignment.remove(site)
    }

    pub fn equipment_at(&self, site: &str) -> Option<&str> {
        self.assignment.get(site).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    /// Assigned `(site, equipment)` pairs in site-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignment.iter().map(|(s, e)| (s.as_str(), e.as_str()))
    }

    /// Checks the decision against a scheme and resolves it to
    /// `(site index, equipment index)` pairs in site-id order.
    pub fn resolve<T: Scalar>(&self, scheme: &GridScheme<T>) -> Result<Vec<(usize, usize)>, DecisionError> {
        self.iter()
            .map(|(site, equipment)| {
                let i = scheme.site_index(site).ok_or_else(|| DecisionError::UnknownSite(site.to_owned()))?;
                let k = scheme
                    .equipment_index(equipment)
                    .ok_or_else(|| DecisionError::UnknownEquipment(equipment.to_owned()))?;
                if !scheme.allowed_equipment(i).contains(&k) {
                    return Err(DecisionError::NotAllowed { site: site.to_owned(), equipment: equipment.to_owned() });
                }
                Ok((i, k))
            })
            .collect()
    }
}

impl<S: Into<String>, E: Into<String>> FromIterator<(S, E)> for PlacementDecision {
    fn from_iter<I: IntoIterator<Item = (S, E)>>(iter: I) -> Self {
        let mut d = Self::new();
        for (s, e) in iter {
            d.assign(s, e);
        }
        d
    }
}
