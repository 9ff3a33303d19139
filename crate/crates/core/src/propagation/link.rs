use serde::Serialize;

use crate::error::DecisionError;
use crate::geometry::{distance_m, in_sector};
use crate::scalar::Scalar;
use crate::scheme::{Cell, GridScheme, PlacementDecision, ReceiverCell};

use super::profile::{ObstacleIndex, PathProfile};
use super::{bitrate, free_space_loss};

/// Power budget of one AP -> cell link.
///
/// `received_dbm == tx_power_dbm + tx_gain_dbi + rx_gain_dbi - obstacle_loss_db - fsl_db`
/// holds exactly, evaluated in that order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkBudget<T> {
    pub site: String,
    pub equipment: String,
    pub target: Cell,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver: Option<String>,
    pub distance_m: T,
    #[serde(rename = "tx_power_dBm")]
    pub tx_power_dbm: T,
    #[serde(rename = "tx_gain_dBi")]
    pub tx_gain_dbi: T,
    #[serde(rename = "rx_gain_dBi")]
    pub rx_gain_dbi: T,
    #[serde(rename = "fsl_dB")]
    pub fsl_db: T,
    #[serde(rename = "obstacle_loss_dB")]
    pub obstacle_loss_db: T,
    #[serde(rename = "received_dBm")]
    pub received_dbm: T,
    #[serde(rename = "snr_dB")]
    pub snr_db: T,
    pub rate_mbps: T,
}

impl<T: Scalar> LinkBudget<T> {
    /// Recomputes the received level from the budget terms.
    pub fn budget_sum(&self) -> T {
        compose(self.tx_power_dbm, self.tx_gain_dbi, self.rx_gain_dbi, self.obstacle_loss_db, self.fsl_db)
    }
}

#[inline]
pub(crate) fn compose<T: Scalar>(tx: T, gt: T, gr: T, obstacle: T, fsl: T) -> T {
    tx + gt + gr - obstacle - fsl
}

/// Link-level predictions for one scheme with a prebuilt obstacle index.
pub struct Propagator<'a, T> {
    scheme: &'a GridScheme<T>,
    index: ObstacleIndex,
}

impl<'a, T: Scalar> Propagator<'a, T> {
    pub fn new(scheme: &'a GridScheme<T>) -> Self {
        Self { scheme, index: ObstacleIndex::new(&scheme.obstacles) }
    }

    pub fn scheme(&self) -> &'a GridScheme<T> {
        self.scheme
    }

    pub fn index(&self) -> &ObstacleIndex {
        &self.index
    }

    pub fn profile(&self, ap_cell: Cell, rx_cell: Cell) -> PathProfile<T> {
        PathProfile::build(self.scheme, &self.index, ap_cell, rx_cell)
    }

    /// Full budget of equipment `equipment` at site `site` (indices) toward
    /// `target`, or `None` when the antenna pattern does not cover it.
    pub fn link(
        &self,
        site: usize,
        equipment: usize,
        target: Cell,
        rx_gain_dbi: T,
        noise_dbm: T,
    ) -> Option<LinkBudget<T>> {
        let s = &self.scheme.sites[site];
        let e = &self.scheme.equipment[equipment];
        if !in_sector(s.cell, &e.pattern, target) {
            return None;
        }
        let (distance, fsl, obstacle) = if target == s.cell {
            // same cell: report the saturation level through an effective coupling loss
            let fsl = e.tx_power_dbm + e.tx_gain_dbi + rx_gain_dbi - self.scheme.same_cell_power_dbm;
            (T::zero(), fsl, T::zero())
        } else {
            let d = distance_m(s.cell, target, self.scheme.cell_size_m);
            let profile = self.profile(s.cell, target);
            let obstacles = &self.scheme.obstacles;
            (d, free_space_loss(d), profile.obstacle_loss_with(|q| obstacles[q].loss_per_cell_db))
        };
        let received = compose(e.tx_power_dbm, e.tx_gain_dbi, rx_gain_dbi, obstacle, fsl);
        let snr = received - noise_dbm;
        Some(LinkBudget {
            site: s.id.clone(),
            equipment: e.id.clone(),
            target,
            receiver: None,
            distance_m: distance,
            tx_power_dbm: e.tx_power_dbm,
            tx_gain_dbi: e.tx_gain_dbi,
            rx_gain_dbi,
            fsl_db: fsl,
            obstacle_loss_db: obstacle,
            received_dbm: received,
            snr_db: snr,
            rate_mbps: bitrate(snr, &self.scheme.bitrate_table),
        })
    }

    /// Received level in dBm, `None` when unreachable.
    pub fn received_power(&self, site: usize, equipment: usize, target: Cell, rx_gain_dbi: T) -> Option<T> {
        self.link(site, equipment, target, rx_gain_dbi, T::zero()).map(|l| l.received_dbm)
    }

    /// Strongest link among the active APs of `decision` toward `target`.
    /// Ties go to the lowest site id.
    pub fn best_link_at(
        &self,
        decision: &[(usize, usize)],
        target: Cell,
        rx_gain_dbi: T,
        noise_dbm: T,
    ) -> Option<LinkBudget<T>> {
        let mut best: Option<LinkBudget<T>> = None;
        for &(site, equipment) in decision {
            if let Some(link) = self.link(site, equipment, target, rx_gain_dbi, noise_dbm) {
                if best.as_ref().is_none_or(|b| link.received_dbm > b.received_dbm) {
                    best = Some(link);
                }
            }
        }
        best
    }

    pub fn best_link(
        &self,
        decision: &PlacementDecision,
        rx: &ReceiverCell<T>,
    ) -> Result<Option<LinkBudget<T>>, DecisionError> {
        let resolved = decision.resolve(self.scheme)?;
        Ok(self.best_link_at(&resolved, rx.cell, rx.rx_gain_dbi, rx.noise_dbm).map(|mut l| {
            l.receiver = Some(rx.id.clone());
            l
        }))
    }
}

/// Received level of `equipment` at `site` toward `target`; `None` when the
/// antenna does not cover the target.
pub fn received_power<T: Scalar>(
    scheme: &GridScheme<T>,
    site: usize,
    equipment: usize,
    target: Cell,
    rx_gain_dbi: T,
) -> Option<T> {
    Propagator::new(scheme).received_power(site, equipment, target, rx_gain_dbi)
}

/// Best serving link for a receiver under a placement decision.
pub fn best_link<T: Scalar>(
    scheme: &GridScheme<T>,
    decision: &PlacementDecision,
    rx: &ReceiverCell<T>,
) -> Result<Option<LinkBudget<T>>, DecisionError> {
    Propagator::new(scheme).best_link(decision, rx)
}
