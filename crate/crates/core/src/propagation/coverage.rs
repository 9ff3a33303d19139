use rayon::prelude::*;
use serde::Serialize;

use crate::error::DecisionError;
use crate::scalar::Scalar;
use crate::scheme::{Cell, GridScheme, PlacementDecision, DEFAULT_NOISE_DBM, DEFAULT_RX_GAIN_DBI};

use super::link::Propagator;

/// Best-server power and rate for every cell, row-major (`row * width + col`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageMap<T> {
    pub width: u32,
    pub height: u32,
    #[serde(rename = "power_dBm")]
    pub power_dbm: Vec<Option<T>>,
    pub rate_mbps: Vec<T>,
    /// Index of the serving site in the scheme's site list.
    pub serving_site: Vec<Option<usize>>,
}

impl<T: Scalar> CoverageMap<T> {
    pub fn offset(&self, cell: Cell) -> usize {
        cell.row as usize * self.width as usize + cell.col as usize
    }

    pub fn power_at(&self, cell: Cell) -> Option<T> {
        self.power_dbm[self.offset(cell)]
    }

    pub fn rate_at(&self, cell: Cell) -> T {
        self.rate_mbps[self.offset(cell)]
    }
}

/// Evaluates the best serving link at every cell with the default receiver
/// gain and noise floor.
pub fn coverage_map<T: Scalar>(
    scheme: &GridScheme<T>,
    decision: &PlacementDecision,
) -> Result<CoverageMap<T>, DecisionError> {
    let resolved = decision.resolve(scheme)?;
    let prop = Propagator::new(scheme);
    let (gain, noise) = (T::lit(DEFAULT_RX_GAIN_DBI), T::lit(DEFAULT_NOISE_DBM));
    let width = scheme.width_cells;

    let cells: Vec<(Option<T>, T, Option<usize>)> = (0..scheme.cell_count())
        .into_par_iter()
        .map(|i| {
            let cell = Cell::new((i % width as usize) as u32, (i / width as usize) as u32);
            match prop.best_link_at(&resolved, cell, gain, noise) {
                Some(l) => (Some(l.received_dbm), l.rate_mbps, scheme.site_index(&l.site)),
                None => (None, T::zero(), None),
            }
        })
        .collect();

    let mut map = CoverageMap {
        width,
        height: scheme.height_cells,
        power_dbm: Vec::with_capacity(cells.len()),
        rate_mbps: Vec::with_capacity(cells.len()),
        serving_site: Vec::with_capacity(cells.len()),
    };
    for (p, r, s) in cells {
        map.power_dbm.push(p);
        map.rate_mbps.push(r);
        map.serving_site.push(s);
    }
    Ok(map)
}
