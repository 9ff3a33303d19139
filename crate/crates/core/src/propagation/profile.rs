use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::geometry::{cells_of_line, distance_m};
use crate::scalar::Scalar;
use crate::scheme::{Cell, GridScheme, Obstacle};

use super::fresnel_thickness_cells;

/// Cell to obstacle lookup for one scheme.
#[derive(Clone, Debug, Default)]
pub struct ObstacleIndex {
    by_cell: HashMap<Cell, Vec<usize>>,
}

impl ObstacleIndex {
    pub fn new<T: Scalar>(obstacles: &[Obstacle<T>]) -> Self {
        let mut by_cell: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (q, o) in obstacles.iter().enumerate() {
            for &c in &o.cells {
                let v = by_cell.entry(c).or_default();
                if v.last() != Some(&q) {
                    v.push(q);
                }
            }
        }
        Self { by_cell }
    }

    /// Obstacle indices covering `cell`, ascending.
    pub fn at(&self, cell: Cell) -> &[usize] {
        self.by_cell.get(&cell).map_or(&[], Vec::as_slice)
    }
}

/// How much of one cross-section an obstacle covers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Occupancy<T> {
    /// Index into the scheme's obstacle list.
    pub obstacle: usize,
    pub count: u32,
    /// `count / thickness`.
    pub ratio: T,
}

/// Cross-section of the Fresnel zone at one line-of-sight cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentSample<T> {
    pub center: Cell,
    pub thickness: u32,
    /// In-grid cells of the cut, right of travel to left. Shorter than
    /// `thickness` only where the cut leaves the grid.
    pub cells: Vec<Cell>,
    /// Sorted by obstacle index; obstacles absent from the cut are omitted.
    pub occupancy: Vec<Occupancy<T>>,
}

impl<T: Scalar> SegmentSample<T> {
    fn factor(&self, occ: &Occupancy<T>) -> T {
        // up to a quarter of the cut absorbs proportionally, beyond that the whole cut
        if 4 * occ.count <= self.thickness {
            occ.ratio
        } else {
            T::one()
        }
    }
}

/// Line of sight between an AP cell and a receiving cell with its
/// discretized Fresnel zone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathProfile<T> {
    pub ap_cell: Cell,
    pub rx_cell: Cell,
    pub los_cells: Vec<Cell>,
    pub thickness: Vec<u32>,
    pub segments: Vec<SegmentSample<T>>,
}

/// Fraction of the zone an obstacle must exceed to count as blocking every
/// cut it touches, as `numerator / denominator`.
const ZONE_BLOCK_NUM: u64 = 3;
const ZONE_BLOCK_DEN: u64 = 10;

impl<T: Scalar> PathProfile<T> {
    pub fn build(scheme: &GridScheme<T>, index: &ObstacleIndex, ap_cell: Cell, rx_cell: Cell) -> Self {
        let los_cells = cells_of_line(ap_cell, rx_cell);
        let normal = Normal::new(ap_cell, rx_cell);
        let mut thickness = Vec::with_capacity(los_cells.len());
        let mut segments = Vec::with_capacity(los_cells.len());

        for &center in &los_cells {
            let t = fresnel_thickness_cells(
                distance_m(ap_cell, center, scheme.cell_size_m),
                distance_m(center, rx_cell, scheme.cell_size_m),
                scheme.cell_size_m,
            );
            let cells =
                if t == 1 { vec![center] } else { normal.cut(center, t, scheme.width_cells, scheme.height_cells) };
            let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
            for &c in &cells {
                for &q in index.at(c) {
                    *counts.entry(q).or_default() += 1;
                }
            }
            let denom = T::lit(f64::from(t));
            let occupancy = counts
                .into_iter()
                .map(|(obstacle, count)| Occupancy { obstacle, count, ratio: T::lit(f64::from(count)) / denom })
                .collect();
            thickness.push(t);
            segments.push(SegmentSample { center, thickness: t, cells, occupancy });
        }

        Self { ap_cell, rx_cell, los_cells, thickness, segments }
    }

    /// True when no obstacle touches any cross-section.
    pub fn is_clear(&self) -> bool {
        self.segments.iter().all(|s| s.occupancy.is_empty())
    }

    /// Number of LOS cells (path length in cells, endpoints included).
    pub fn len(&self) -> usize {
        self.los_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.los_cells.is_empty()
    }

    /// Loss multiplier per obstacle: the path loss is
    /// `sum(weight_q * loss_per_cell_q)`. Sorted by obstacle index.
    ///
    /// An obstacle covering more than 30% of all zone cells counts fully in
    /// every cut it touches; otherwise each cut contributes its occupancy
    /// ratio (up to 25%) or 1.
    pub fn obstacle_weights(&self) -> Vec<(usize, T)> {
        struct Acc<T> {
            cells: u64,
            cuts: u32,
            partial: T,
        }
        let zone_cells: u64 = self.thickness.iter().map(|&t| u64::from(t)).sum();
        let mut acc: BTreeMap<usize, Acc<T>> = BTreeMap::new();
        for seg in &self.segments {
            for occ in &seg.occupancy {
                let a = acc.entry(occ.obstacle).or_insert(Acc { cells: 0, cuts: 0, partial: T::zero() });
                a.cells += u64::from(occ.count);
                a.cuts += 1;
                a.partial = a.partial + seg.factor(occ);
            }
        }
        acc.into_iter()
            .map(|(q, a)| {
                let blocks_zone = a.cells * ZONE_BLOCK_DEN > ZONE_BLOCK_NUM * zone_cells;
                (q, if blocks_zone { T::lit(f64::from(a.cuts)) } else { a.partial })
            })
            .collect()
    }

    /// Total obstacle loss with per-cell absorption looked up by obstacle index.
    pub fn obstacle_loss_with(&self, loss_of: impl Fn(usize) -> T) -> T {
        weighted_loss(&self.obstacle_weights(), loss_of)
    }
}

/// `sum(weight * loss)` in weight order; shared by prediction and calibration
/// so both produce identical values.
pub(crate) fn weighted_loss<T: Scalar>(weights: &[(usize, T)], loss_of: impl Fn(usize) -> T) -> T {
    weights.iter().fold(T::zero(), |acc, &(q, w)| acc + w * loss_of(q))
}

/// Unit steps along the normal of the AP->rx line.
struct Normal {
    /// Normal vector pointing left of travel.
    nx: i64,
    ny: i64,
}

impl Normal {
    fn new(a: Cell, b: Cell) -> Self {
        let dx = i64::from(b.col) - i64::from(a.col);
        let dy = i64::from(b.row) - i64::from(a.row);
        Self { nx: -dy, ny: dx }
    }

    /// Offset of the `k`-th step along the normal, stepping one cell on the
    /// dominant axis and the rounded proportional amount on the other.
    fn step(&self, k: i64) -> (i64, i64) {
        if self.nx.abs() >= self.ny.abs() {
            (k * self.nx.signum(), round_div(k * self.ny, self.nx.abs()))
        } else {
            (round_div(k * self.nx, self.ny.abs()), k * self.ny.signum())
        }
    }

    /// `thickness` cells centered on `center`; even thickness puts the extra
    /// cell on the left of travel.
    fn cut(&self, center: Cell, thickness: u32, width: u32, height: u32) -> Vec<Cell> {
        let t = i64::from(thickness);
        let (lo, hi) = (-((t - 1) / 2), t / 2);
        (lo..=hi)
            .filter_map(|k| {
                let (ox, oy) = self.step(k);
                let col = i64::from(center.col) + ox;
                let row = i64::from(center.row) + oy;
                (col >= 0 && row >= 0 && col < i64::from(width) && row < i64::from(height))
                    .then(|| Cell::new(col as u32, row as u32))
            })
            .collect()
    }
}

/// `num / den` rounded half away from zero; `den > 0`.
fn round_div(num: i64, den: i64) -> i64 {
    if den == 0 {
        return 0;
    }
    num.signum() * ((2 * num.abs() + den) / (2 * den))
}

/// Discretized line of sight and Fresnel cross-sections between two cells.
pub fn build_path_profile<T: Scalar>(scheme: &GridScheme<T>, ap_cell: Cell, rx_cell: Cell) -> PathProfile<T> {
    PathProfile::build(scheme, &ObstacleIndex::new(&scheme.obstacles), ap_cell, rx_cell)
}

/// Loss of one cross-section: proportional for obstacles covering at most
/// 25% of it, the full per-cell absorption above that.
pub fn segment_loss<T: Scalar>(segment: &SegmentSample<T>, obstacles: &[Obstacle<T>]) -> T {
    segment
        .occupancy
        .iter()
        .fold(T::zero(), |acc, occ| acc + segment.factor(occ) * obstacles[occ.obstacle].loss_per_cell_db)
}

/// Total obstacle loss along a profile.
pub fn path_obstacle_loss<T: Scalar>(profile: &PathProfile<T>, obstacles: &[Obstacle<T>]) -> T {
    profile.obstacle_loss_with(|q| obstacles[q].loss_per_cell_db)
}
