//! Discrete geometry on the cell grid.

use crate::scalar::Scalar;
use crate::scheme::{AntennaPattern, Cell};

/// Cells of the 8-connected midpoint (Bresenham) line from `a` to `b`, both
/// ends included.
///
/// The line is always traced from the smaller endpoint, so swapping the
/// arguments yields exactly the reversed sequence. On an exact midpoint tie
/// the minor coordinate does not step.
pub fn cells_of_line(a: Cell, b: Cell) -> Vec<Cell> {
    if b < a {
        let mut cells = trace(b, a);
        cells.reverse();
        cells
    } else {
        trace(a, b)
    }
}

fn trace(from: Cell, to: Cell) -> Vec<Cell> {
    let (x0, y0) = (i64::from(from.col), i64::from(from.row));
    let (dx, dy) = (i64::from(to.col) - x0, i64::from(to.row) - y0);
    let (sx, sy) = (dx.signum(), dy.signum());
    let (adx, ady) = (dx.abs(), dy.abs());
    let (major, minor) = if adx >= ady { (adx, ady) } else { (ady, adx) };

    let mut cells = Vec::with_capacity(major as usize + 1);
    let mut decision = 2 * minor - major;
    let mut offset = 0i64;
    for step in 0..=major {
        let (x, y) = if adx >= ady { (x0 + step * sx, y0 + offset * sy) } else { (x0 + offset * sx, y0 + step * sy) };
        cells.push(Cell::new(x as u32, y as u32));
        if decision > 0 {
            offset += 1;
            decision -= 2 * major;
        }
        decision += 2 * minor;
    }
    cells
}

/// Center-to-center Euclidean distance in meters.
pub fn distance_m<T: Scalar>(a: Cell, b: Cell, cell_size_m: T) -> T {
    let dc = T::lit(f64::from(a.col) - f64::from(b.col));
    let dr = T::lit(f64::from(a.row) - f64::from(b.row));
    cell_size_m * dc.hypot(dr)
}

/// Distance between cell centers in cell units.
pub fn distance_cells<T: Scalar>(a: Cell, b: Cell) -> T {
    distance_m(a, b, T::one())
}

/// Bearing of `to` seen from `from`, degrees in `[0, 360)`: 0 along `+col`,
/// counterclockwise toward `+row`.
pub fn bearing_deg<T: Scalar>(from: Cell, to: Cell) -> T {
    let dc = T::lit(f64::from(to.col) - f64::from(from.col));
    let dr = T::lit(f64::from(to.row) - f64::from(from.row));
    let deg = dr.atan2(dc).to_degrees();
    if deg < T::zero() {
        deg + T::lit(360.0)
    } else {
        deg
    }
}

const SECTOR_EDGE_SLACK_DEG: f64 = 1e-9;

/// Whether an antenna at `ap_cell` with `pattern` serves `target`.
pub fn in_sector<T: Scalar>(ap_cell: Cell, pattern: &AntennaPattern<T>, target: Cell) -> bool {
    match *pattern {
        AntennaPattern::Omni => true,
        AntennaPattern::Beam { partner } => target == ap_cell || target == partner,
        AntennaPattern::Sector { azimuth_deg, width_deg } => {
            if target == ap_cell || width_deg >= T::lit(360.0) {
                return true;
            }
            let full = T::lit(360.0);
            let bearing: T = bearing_deg(ap_cell, target);
            // signed offset from the boresight, in [-180, 180)
            let mut off = (bearing - azimuth_deg + T::lit(180.0)) % full;
            if off < T::zero() {
                off = off + full;
            }
            off = off - T::lit(180.0);
            off.abs() <= width_deg / T::lit(2.0) + T::lit(SECTOR_EDGE_SLACK_DEG)
        }
    }
}
