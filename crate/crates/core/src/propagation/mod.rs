//! Received power and bitrate prediction over the cell grid.
//!
//! A link loses `40 + 20 log10(D)` dB to free space plus the absorption of
//! every obstacle that cuts its discretized Fresnel zone. The zone is sampled
//! as one cross-section per line-of-sight cell (see [`PathProfile`]).

mod coverage;
pub(crate) mod link;
pub(crate) mod profile;

pub use coverage::{coverage_map, CoverageMap};
pub use link::{best_link, received_power, LinkBudget, Propagator};
pub use profile::{
    build_path_profile, path_obstacle_loss, segment_loss, ObstacleIndex, Occupancy, PathProfile, SegmentSample,
};

use crate::scalar::Scalar;
use crate::scheme::BitrateTable;

/// Fresnel diameter constant for 2.44 GHz, meters^(1/2).
pub const FRESNEL_CONSTANT: f64 = 0.3531;
/// Diameters below this many cells collapse to the single line-of-sight cell.
pub const FRESNEL_THIN_LIMIT_CELLS: f64 = 1.5;
/// Free-space loss at 1 m.
pub const FSL_AT_ONE_METER_DB: f64 = 40.0;

/// Free-space loss in dB; distances under 1 m are clamped to 1 m.
pub fn free_space_loss<T: Scalar>(distance_m: T) -> T {
    let d = distance_m.max(T::one());
    T::lit(FSL_AT_ONE_METER_DB) + T::lit(20.0) * d.log10()
}

/// Fresnel zone diameter in cells at a point `d_to_ap_m` from the AP and
/// `d_to_rx_m` from the receiver, before rounding.
pub fn fresnel_diameter_cells<T: Scalar>(d_to_ap_m: T, d_to_rx_m: T, cell_size_m: T) -> T {
    let total = d_to_ap_m + d_to_rx_m;
    if total <= T::zero() {
        return T::zero();
    }
    T::lit(FRESNEL_CONSTANT) / cell_size_m * (d_to_ap_m * d_to_rx_m / total).sqrt()
}

/// Zone thickness in whole cells: 1 below 1.5 cells, otherwise the floor.
pub fn fresnel_thickness_cells<T: Scalar>(d_to_ap_m: T, d_to_rx_m: T, cell_size_m: T) -> u32 {
    let r = fresnel_diameter_cells(d_to_ap_m, d_to_rx_m, cell_size_m);
    if r >= T::lit(FRESNEL_THIN_LIMIT_CELLS) {
        r.floor().to_u32().unwrap_or(u32::MAX)
    } else {
        1
    }
}

/// Rate of the first tier whose threshold is at or below `snr_db`.
pub fn bitrate<T: Scalar>(snr_db: T, table: &BitrateTable<T>) -> T {
    table.steps.iter().find(|s| s.snr_threshold_db <= snr_db).map_or(T::zero(), |s| s.rate_mbps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fsl_values() {
        assert_eq!(free_space_loss(1.0), 40.0);
        assert_eq!(free_space_loss(10.0), 60.0);
        assert_eq!(free_space_loss(100.0), 80.0);
        assert_eq!(free_space_loss(0.2), 40.0);
        assert_eq!(free_space_loss(0.0), 40.0);
        assert!((free_space_loss(100.0f32) - 80.0).abs() < 1e-5);
    }

    #[test]
    fn fresnel_thickness_values() {
        assert_eq!(fresnel_thickness_cells(0.0, 25.0, 1.0), 1);
        assert_eq!(fresnel_thickness_cells(0.0, 0.0, 1.0), 1);
        // 0.3531 * 5 = 1.7655
        assert_eq!(fresnel_thickness_cells(50.0, 50.0, 1.0), 1);
        // 0.3531 * sqrt(500) = 7.8955...
        assert_eq!(fresnel_thickness_cells(1000.0, 1000.0, 1.0), 7);
        assert_eq!(fresnel_thickness_cells(1000.0, 1000.0, 1.0f32), 7);
        assert_eq!(fresnel_thickness_cells(1000.0, 1000.0, 5.0), 1);
    }

    #[test]
    fn thickness_crosses_limit_at_one_and_a_half() {
        // r = 1.5 exactly when D_i D_j / (D_i + D_j) = (1.5 / 0.3531)^2
        let h = (1.5f64 / FRESNEL_CONSTANT).powi(2);
        let d = 2.0 * h;
        assert_eq!(fresnel_thickness_cells(d * 1.0001, d * 1.0001, 1.0), 1);
        let r = fresnel_diameter_cells(d * 1.0001, d * 1.0001, 1.0);
        assert!(r > 1.5 && r < 2.0);
        assert_eq!(fresnel_thickness_cells(d * 0.999, d * 0.999, 1.0), 1);
    }

    #[test]
    fn bitrate_tiers() {
        let table = BitrateTable::<f64>::default();
        assert_eq!(bitrate(61.0, &table), 54.0);
        assert_eq!(bitrate(25.0, &table), 54.0);
        assert_eq!(bitrate(24.999, &table), 18.0);
        assert_eq!(bitrate(15.0, &table), 18.0);
        assert_eq!(bitrate(4.0, &table), 1.0);
        assert_eq!(bitrate(3.9, &table), 0.0);
        assert_eq!(bitrate(-20.0, &table), 0.0);
        assert_eq!(bitrate(10.0, &BitrateTable { steps: vec![] }), 0.0);
    }
}
