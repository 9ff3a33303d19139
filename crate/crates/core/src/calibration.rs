//! Fitting obstacle absorption to measured signal levels.
//!
//! Only installed equipment (`existing_equipment`) takes part: each measured
//! receiver names the site it heard. The fit minimizes the L1 residual
//! `sum |measured - predicted|` over a quantized grid of absorption values,
//! one obstacle at a time. Clear paths that read far below prediction get an
//! "invisible" circular absorber at their midpoint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CalibrationError;
use crate::geometry::{distance_cells, distance_m, in_sector};
use crate::propagation::link::compose;
use crate::propagation::profile::weighted_loss;
use crate::propagation::{free_space_loss, Propagator};
use crate::scalar::Scalar;
use crate::scheme::{Cell, GridScheme, Obstacle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct CalibrationConfig<T> {
    #[serde(rename = "absorption_min_dB")]
    pub absorption_min_db: T,
    #[serde(rename = "absorption_max_dB")]
    pub absorption_max_db: T,
    #[serde(rename = "quantum_dB")]
    pub quantum_db: T,
    #[serde(rename = "invisible_trigger_dB")]
    pub invisible_trigger_db: T,
    pub max_passes: usize,
    pub seed: u64,
    /// Residual charged for a measurement the antenna pattern cannot reach.
    #[serde(rename = "unreachable_penalty_dB")]
    pub unreachable_penalty_db: T,
}

impl<T: Scalar> Default for CalibrationConfig<T> {
    fn default() -> Self {
        Self {
            absorption_min_db: T::zero(),
            absorption_max_db: T::lit(30.0),
            quantum_db: T::lit(0.5),
            invisible_trigger_db: T::lit(10.0),
            max_passes: 20,
            seed: 0,
            unreachable_penalty_db: T::lit(100.0),
        }
    }
}

impl<T: Scalar> CalibrationConfig<T> {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        let bad = |m: &str| Err(CalibrationError::InvalidConfig(m.to_owned()));
        if !(self.absorption_min_db.is_finite() && self.absorption_max_db.is_finite())
            || self.absorption_min_db > self.absorption_max_db
        {
            return bad("absorption bounds must be finite with min <= max");
        }
        if !(self.quantum_db > T::zero() && self.quantum_db.is_finite()) {
            return bad("quantum_dB must be positive");
        }
        if self.invisible_trigger_db.is_nan() || self.invisible_trigger_db <= T::zero() {
            return bad("invisible_trigger_dB must be positive");
        }
        if self.unreachable_penalty_db.is_nan() || self.unreachable_penalty_db < T::zero() {
            return bad("unreachable_penalty_dB must be >= 0");
        }
        Ok(())
    }

    /// Absorption values the fit may choose: `min + k * quantum` within bounds.
    pub fn grid(&self) -> Vec<T> {
        let span = (self.absorption_max_db - self.absorption_min_db) / self.quantum_db;
        let n = (span + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        (0..=n).map(|k| self.absorption_min_db + self.quantum_db * T::lit(k as f64)).collect()
    }

    /// Nearest grid value to `v`, clamped to the bounds.
    pub fn snap(&self, v: T) -> T {
        let steps = ((v - self.absorption_min_db) / self.quantum_db).round().max(T::zero());
        let g = self.grid();
        let k = steps.to_usize().unwrap_or(0).min(g.len() - 1);
        g[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult<T> {
    /// Per-cell absorption of every obstacle after the fit.
    #[serde(rename = "fitted_losses_dB")]
    pub fitted_losses: BTreeMap<String, T>,
    #[serde(rename = "residual_before_dB")]
    pub residual_before_db: T,
    #[serde(rename = "residual_after_dB")]
    pub residual_after_db: T,
    /// `|measured - predicted|` per measured receiver, before the fit.
    #[serde(rename = "per_measurement_error_before_dB")]
    pub per_measurement_error_before: BTreeMap<String, T>,
    /// `|measured - predicted|` per measured receiver, after the fit.
    #[serde(rename = "per_measurement_error_dB")]
    pub per_measurement_error: BTreeMap<String, T>,
    pub inserted_obstacles: Vec<Obstacle<T>>,
    pub passes: usize,
}

impl<T: Scalar> CalibrationResult<T> {
    pub fn max_error_db(&self) -> T {
        self.per_measurement_error.values().fold(T::zero(), |a, &b| a.max(b))
    }

    /// The input scheme with fitted losses applied and inserted obstacles added.
    pub fn apply(&self, scheme: &GridScheme<T>) -> GridScheme<T> {
        let mut out = with_losses(scheme, &self.fitted_losses);
        out.obstacles.extend(self.inserted_obstacles.iter().cloned());
        out
    }
}

/// Loss-independent part of one measured link.
struct MeasuredLink<T> {
    receiver: String,
    measured: T,
    reach: Option<Reach<T>>,
}

struct Reach<T> {
    tx: T,
    gain_t: T,
    gain_r: T,
    fsl: T,
    weights: Vec<(usize, T)>,
    los: Vec<Cell>,
    thickness: Vec<u32>,
    same_cell: bool,
}

impl<T: Scalar> MeasuredLink<T> {
    fn predicted(&self, losses: &[T]) -> Option<T> {
        self.reach.as_ref().map(|r| compose(r.tx, r.gain_t, r.gain_r, weighted_loss(&r.weights, |q| losses[q]), r.fsl))
    }

    fn error(&self, losses: &[T], penalty: T) -> T {
        self.predicted(losses).map_or(penalty, |p| (self.measured - p).abs())
    }
}

fn measured_links<T: Scalar>(scheme: &GridScheme<T>) -> Result<Vec<MeasuredLink<T>>, CalibrationError> {
    let prop = Propagator::new(scheme);
    let mut out = Vec::new();
    for rx in &scheme.receivers {
        let (Some(measured), from) = (rx.measured_power_dbm, rx.measured_from_site.as_ref()) else {
            continue;
        };
        let dangling =
            |reason: &str| CalibrationError::DanglingMeasurement { receiver: rx.id.clone(), reason: reason.to_owned() };
        let site_id = from.ok_or_else(|| dangling("measured_from_site is missing"))?;
        let i = scheme.site_index(site_id).ok_or_else(|| dangling("measured_from_site does not exist"))?;
        let site = &scheme.sites[i];
        let equipment = site.existing_equipment.as_deref().ok_or_else(|| dangling("site has no existing_equipment"))?;
        let k = scheme.equipment_index(equipment).ok_or_else(|| dangling("existing equipment not in catalog"))?;
        let e = &scheme.equipment[k];

        let reach = in_sector(site.cell, &e.pattern, rx.cell).then(|| {
            if site.cell == rx.cell {
                let fsl = e.tx_power_dbm + e.tx_gain_dbi + rx.rx_gain_dbi - scheme.same_cell_power_dbm;
                Reach {
                    tx: e.tx_power_dbm,
                    gain_t: e.tx_gain_dbi,
                    gain_r: rx.rx_gain_dbi,
                    fsl,
                    weights: Vec::new(),
                    los: vec![rx.cell],
                    thickness: vec![1],
                    same_cell: true,
                }
            } else {
                let profile = prop.profile(site.cell, rx.cell);
                Reach {
                    tx: e.tx_power_dbm,
                    gain_t: e.tx_gain_dbi,
                    gain_r: rx.rx_gain_dbi,
                    fsl: free_space_loss(distance_m(site.cell, rx.cell, scheme.cell_size_m)),
                    weights: profile.obstacle_weights(),
                    los: profile.los_cells,
                    thickness: profile.thickness,
                    same_cell: false,
                }
            }
        });
        out.push(MeasuredLink { receiver: rx.id.clone(), measured, reach });
    }
    if out.is_empty() {
        return Err(CalibrationError::NoMeasurements);
    }
    Ok(out)
}

fn total<T: Scalar>(links: &[MeasuredLink<T>], losses: &[T], penalty: T) -> T {
    links.iter().fold(T::zero(), |acc, l| acc + l.error(losses, penalty))
}

fn loss_vector<T: Scalar>(scheme: &GridScheme<T>, overrides: &BTreeMap<String, T>) -> Result<Vec<T>, CalibrationError> {
    for id in overrides.keys() {
        if scheme.obstacle_index(id).is_none() {
            return Err(CalibrationError::UnknownObstacle(id.clone()));
        }
    }
    Ok(scheme.obstacles.iter().map(|o| overrides.get(&o.id).copied().unwrap_or(o.loss_per_cell_db)).collect())
}

fn with_losses<T: Scalar>(scheme: &GridScheme<T>, losses: &BTreeMap<String, T>) -> GridScheme<T> {
    let mut out = scheme.clone();
    for o in &mut out.obstacles {
        if let Some(&l) = losses.get(&o.id) {
            o.loss_per_cell_db = l;
        }
    }
    out
}

/// `sum |measured - predicted|` over measured receivers, with `losses`
/// overriding the catalog absorption of the listed obstacles.
pub fn residual<T: Scalar>(
    scheme: &GridScheme<T>,
    losses: &BTreeMap<String, T>,
    config: &CalibrationConfig<T>,
) -> Result<T, CalibrationError> {
    let links = measured_links(scheme)?;
    let v = loss_vector(scheme, losses)?;
    Ok(total(&links, &v, config.unreachable_penalty_db))
}

fn errors<T: Scalar>(links: &[MeasuredLink<T>], losses: &[T], penalty: T) -> BTreeMap<String, T> {
    links.iter().map(|l| (l.receiver.clone(), l.error(losses, penalty))).collect()
}

/// Cyclic coordinate descent over the calibratable obstacles' absorption.
///
/// Each pass scans every grid value of one obstacle with the others fixed
/// and moves to the best one (ties to the smallest) unless that is worse
/// than the current value. Stops after a pass without change or
/// `max_passes`.
pub fn fit_absorptions<T: Scalar>(
    scheme: &GridScheme<T>,
    config: &CalibrationConfig<T>,
) -> Result<CalibrationResult<T>, CalibrationError> {
    config.validate()?;
    let links = measured_links(scheme)?;
    let penalty = config.unreachable_penalty_db;
    let mut losses: Vec<T> = scheme.obstacles.iter().map(|o| o.loss_per_cell_db).collect();
    let before = total(&links, &losses, penalty);
    let errors_before = errors(&links, &losses, penalty);
    let grid = config.grid();
    let free: Vec<usize> = (0..scheme.obstacles.len()).filter(|&q| scheme.obstacles[q].calibratable).collect();

    let mut current = before;
    let mut passes = 0;
    while passes < config.max_passes && !free.is_empty() {
        passes += 1;
        let mut changed = false;
        for &q in &free {
            let old = losses[q];
            let mut best: Option<(T, T)> = None;
            for &g in &grid {
                losses[q] = g;
                let r = total(&links, &losses, penalty);
                if best.is_none_or(|(_, br)| r < br) {
                    best = Some((g, r));
                }
            }
            let (g, r) = best.expect("grid is never empty");
            if r <= current {
                losses[q] = g;
                changed |= g != old;
                current = r;
            } else {
                losses[q] = old;
            }
        }
        if !changed {
            break;
        }
    }

    Ok(CalibrationResult {
        fitted_losses: scheme.obstacles.iter().zip(&losses).map(|(o, &l)| (o.id.clone(), l)).collect(),
        residual_before_db: before,
        residual_after_db: current,
        per_measurement_error_before: errors_before,
        per_measurement_error: errors(&links, &losses, penalty),
        inserted_obstacles: Vec::new(),
        passes,
    })
}

/// Circular absorbers for clear paths whose prediction exceeds the
/// measurement by at least the trigger.
///
/// The disc is centered on the middle LOS cell with radius equal to the
/// Fresnel thickness there; its per-cell loss spreads the discrepancy over
/// the LOS cells inside the disc. The input scheme is not modified.
pub fn detect_invisible_obstacles<T: Scalar>(
    scheme: &GridScheme<T>,
    config: &CalibrationConfig<T>,
) -> Result<Vec<Obstacle<T>>, CalibrationError> {
    config.validate()?;
    let links = measured_links(scheme)?;
    let losses: Vec<T> = scheme.obstacles.iter().map(|o| o.loss_per_cell_db).collect();
    let mut inserted: Vec<Obstacle<T>> = Vec::new();
    for link in &links {
        let Some(reach) = link.reach.as_ref() else { continue };
        if reach.same_cell || !reach.weights.is_empty() {
            continue;
        }
        let predicted = link.predicted(&losses).expect("reachable");
        let discrepancy = predicted - link.measured;
        if discrepancy < config.invisible_trigger_db {
            continue;
        }
        let mid = reach.los.len() / 2;
        let center = reach.los[mid];
        let radius = T::lit(f64::from(reach.thickness[mid]));
        let inside = |c: Cell| distance_cells::<T>(center, c) <= radius;
        let r = reach.thickness[mid] as i64;
        let cells: Vec<Cell> = (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dc, dr)))
            .filter_map(|(dc, dr)| {
                let col = i64::from(center.col) + dc;
                let row = i64::from(center.row) + dr;
                (col >= 0 && row >= 0 && col < i64::from(scheme.width_cells) && row < i64::from(scheme.height_cells))
                    .then(|| Cell::new(col as u32, row as u32))
            })
            .filter(|&c| inside(c))
            .collect();
        let crossed = reach.los.iter().filter(|&&c| inside(c)).count();
        let id = unique_id(scheme, &inserted, &format!("invisible-{}", link.receiver));
        inserted.push(Obstacle {
            id,
            cells,
            loss_per_cell_db: discrepancy / T::lit(crossed as f64),
            material_label: "invisible".to_owned(),
            calibratable: true,
        });
    }
    Ok(inserted)
}

fn unique_id<T>(scheme: &GridScheme<T>, inserted: &[Obstacle<T>], base: &str) -> String {
    let taken = |id: &str| scheme.obstacles.iter().chain(inserted).any(|o| o.id == id);
    if !taken(base) {
        return base.to_owned();
    }
    (2..).map(|n| format!("{base}-{n}")).find(|id| !taken(id)).expect("unbounded")
}

/// Fit, insert invisible obstacles on the fitted scheme, fit again.
///
/// Inserted absorbers start from their estimate snapped to the grid. They
/// are kept only if the second fit does not end above the first.
pub fn calibrate<T: Scalar>(
    scheme: &GridScheme<T>,
    config: &CalibrationConfig<T>,
) -> Result<CalibrationResult<T>, CalibrationError> {
    let first = fit_absorptions(scheme, config)?;
    let fitted = first.apply(scheme);
    let mut inserted = detect_invisible_obstacles(&fitted, config)?;
    if inserted.is_empty() {
        return Ok(first);
    }
    for o in &mut inserted {
        o.loss_per_cell_db = config.snap(o.loss_per_cell_db);
    }
    let mut augmented = fitted;
    augmented.obstacles.extend(inserted.iter().cloned());
    let second = fit_absorptions(&augmented, config)?;
    if second.residual_after_db > first.residual_after_db {
        return Ok(first);
    }

    let original: std::collections::HashSet<&str> = scheme.obstacles.iter().map(|o| o.id.as_str()).collect();
    let mut fitted_losses = second.fitted_losses;
    for o in &mut inserted {
        o.loss_per_cell_db = fitted_losses[&o.id];
    }
    fitted_losses.retain(|id, _| original.contains(id.as_str()));
    Ok(CalibrationResult {
        fitted_losses,
        residual_before_db: first.residual_before_db,
        residual_after_db: second.residual_after_db,
        per_measurement_error_before: first.per_measurement_error_before,
        per_measurement_error: second.per_measurement_error,
        inserted_obstacles: inserted,
        passes: first.passes + second.passes,
    })
}
