//! Run inputs and the result documents shared by the command line and the
//! HTTP service. Both front ends call [`execute`], so identical inputs give
//! identical documents.

use std::fmt::Write as _;

use apgrid::calibration::calibrate;
use apgrid::optimize::{brute_force_pareto, variant_probability_search, SearchParams};
use apgrid::propagation::{coverage_map, Propagator};
use apgrid::scenario::ScenarioFile;
use apgrid::{
    Calibration, CalibrationError, CalibrationSettings, DecisionError, FrontPoint, OptimizeError, PlacementDecision,
    Scheme,
};
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Exhaustive enumeration (small instances only).
    Oracle,
    /// Variant-probability search.
    Vps,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Oracle => "oracle",
            Solver::Vps => "vps",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Coverage,
    Optimize,
    Calibrate,
}

/// What to compute for a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunRequest {
    /// Coverage of `decision`, or of the installed equipment with
    /// `existing`; neither means the empty decision.
    Coverage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision: Option<PlacementDecision>,
        #[serde(default)]
        existing: bool,
    },
    Optimize {
        solver: Solver,
        #[serde(default)]
        seed: u64,
        /// Search settings other than the seed; defaults when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search: Option<SearchParams>,
    },
    Calibrate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<CalibrationSettings>,
    },
}

impl RunRequest {
    pub fn kind(&self) -> RunKind {
        match self {
            RunRequest::Coverage { .. } => RunKind::Coverage,
            RunRequest::Optimize { .. } => RunKind::Optimize,
            RunRequest::Calibrate { .. } => RunKind::Calibrate,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            RunRequest::Optimize { solver: Solver::Vps, seed, .. } => Some(*seed),
            RunRequest::Calibrate { config } => Some(config.as_ref().map_or(0, |c| c.seed)),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("coverage request gives both a decision and `existing`")]
    AmbiguousDecision,
}

/// Per-receiver line of a coverage run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverRow {
    pub id: String,
    pub best_site: Option<String>,
    pub equipment: Option<String>,
    #[serde(rename = "received_dBm")]
    pub received_dbm: Option<f64>,
    #[serde(rename = "snr_dB")]
    pub snr_db: Option<f64>,
    pub rate_mbps: f64,
    pub min_bitrate_mbps: f64,
    pub meets_min: bool,
}

/// Coverage grid in flat row-major arrays (`index = row * width + col`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageArtifact {
    pub width_cells: u32,
    pub height_cells: u32,
    pub cell_size_m: f64,
    pub decision: PlacementDecision,
    /// `null` where no active AP reaches the cell.
    #[serde(rename = "power_dBm")]
    pub power_dbm: Vec<Option<f64>>,
    pub rate_mbps: Vec<f64>,
    /// Index into `sites` of the serving AP, `null` for none.
    pub serving_site: Vec<Option<u32>>,
    pub sites: Vec<String>,
    pub receivers: Vec<ReceiverRow>,
    /// Every receiver meets its minimum bitrate.
    pub feasible: bool,
}

/// Front returned by either solver, ascending cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontArtifact {
    pub solver: Solver,
    pub seed: Option<u64>,
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchParams>,
    pub points: Vec<FrontPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArtifact {
    pub calibration: Calibration,
    /// Input scenario with fitted losses and inserted obstacles.
    pub scenario: ScenarioFile<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutput {
    Coverage(CoverageArtifact),
    Optimize(FrontArtifact),
    Calibrate(CalibrateArtifact),
}

pub fn execute(scenario: &ScenarioFile<f64>, request: &RunRequest) -> Result<RunOutput, RunError> {
    let scheme = &scenario.scheme;
    match request {
        RunRequest::Coverage { decision, existing } => {
            let decision = match (decision, existing) {
                (Some(_), true) => return Err(RunError::AmbiguousDecision),
                (Some(d), false) => d.clone(),
                (None, true) => scheme.existing_decision(),
                (None, false) => PlacementDecision::new(),
            };
            Ok(RunOutput::Coverage(coverage(scheme, &decision)?))
        }
        RunRequest::Optimize { solver, seed, search } => {
            Ok(RunOutput::Optimize(optimize(scheme, *solver, *seed, search.clone())?))
        }
        RunRequest::Calibrate { config } => {
            let config = config.clone().unwrap_or_default();
            let calibration = calibrate(scheme, &config)?;
            let scenario = ScenarioFile {
                format_version: scenario.format_version,
                scheme: calibration.apply(scheme),
                annotations: scenario.annotations.clone(),
            };
            Ok(RunOutput::Calibrate(CalibrateArtifact { calibration, scenario }))
        }
    }
}

pub fn coverage(scheme: &Scheme, decision: &PlacementDecision) -> Result<CoverageArtifact, DecisionError> {
    let map = coverage_map(scheme, decision)?;
    let prop = Propagator::new(scheme);
    let mut receivers = Vec::with_capacity(scheme.receivers.len());
    for rx in &scheme.receivers {
        let link = prop.best_link(decision, rx)?;
        let rate = link.as_ref().map_or(0.0, |l| l.rate_mbps);
        receivers.push(ReceiverRow {
            id: rx.id.clone(),
            best_site: link.as_ref().map(|l| l.site.clone()),
            equipment: link.as_ref().map(|l| l.equipment.clone()),
            received_dbm: link.as_ref().map(|l| l.received_dbm),
            snr_db: link.as_ref().map(|l| l.snr_db),
            rate_mbps: rate,
            min_bitrate_mbps: rx.min_bitrate_mbps,
            meets_min: rate >= rx.min_bitrate_mbps,
        });
    }
    Ok(CoverageArtifact {
        width_cells: scheme.width_cells,
        height_cells: scheme.height_cells,
        cell_size_m: scheme.cell_size_m,
        decision: decision.clone(),
        power_dbm: map.power_dbm,
        rate_mbps: map.rate_mbps,
        serving_site: map.serving_site.iter().map(|s| s.map(|i| i as u32)).collect(),
        sites: scheme.sites.iter().map(|s| s.id.clone()).collect(),
        feasible: receivers.iter().all(|r| r.meets_min),
        receivers,
    })
}

pub fn optimize(
    scheme: &Scheme,
    solver: Solver,
    seed: u64,
    search: Option<SearchParams>,
) -> Result<FrontArtifact, OptimizeError> {
    match solver {
        Solver::Oracle => {
            let r = brute_force_pareto(scheme)?;
            Ok(FrontArtifact { solver, seed: None, evaluations: r.evaluations, search: None, points: r.points })
        }
        Solver::Vps => {
            let params = SearchParams { seed, ..search.unwrap_or_default() };
            let r = variant_probability_search(scheme, &params)?;
            Ok(FrontArtifact {
                solver,
                seed: Some(seed),
                evaluations: r.evaluations,
                search: Some(params),
                points: r.points,
            })
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"))
}

/// Tab-separated receiver table with a header line.
pub fn receiver_table(rows: &[ReceiverRow]) -> String {
    let mut out = String::from("rx\tbest_site\treceived_dBm\tsnr_dB\trate_mbps\tmin_mbps\tmeets_min\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            r.best_site.as_deref().unwrap_or("-"),
            opt(r.received_dbm),
            opt(r.snr_db),
            r.rate_mbps,
            r.min_bitrate_mbps,
            if r.meets_min { "yes" } else { "no" }
        );
    }
    out
}

pub fn assignment_list(d: &PlacementDecision) -> String {
    if d.is_empty() {
        return "-".to_owned();
    }
    d.iter().map(|(s, e)| format!("{s}={e}")).collect::<Vec<_>>().join(",")
}

/// Tab-separated front: cost, weighted coverage, assignment list.
pub fn front_table(front: &FrontArtifact) -> String {
    let mut out = String::from("cost\tweighted_coverage\tassignment\n");
    for p in &front.points {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            p.objectives.total_cost,
            p.objectives.weighted_coverage,
            assignment_list(&p.decision)
        );
    }
    out
}

/// Sentinel in `power_centi_dBm` for cells no AP reaches.
pub const NO_SIGNAL: i16 = i16::MIN;

/// Coverage grid packed for transfer: base64 of little-endian `i16`
/// received levels in hundredths of a dBm (clamped, [`NO_SIGNAL`] for none),
/// base64 of `u8` indexes into `tiers_mbps`, and base64 of little-endian
/// `u16` serving-site numbers (0 for none, `k` for `sites[k - 1]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactCoverage {
    pub width_cells: u32,
    pub height_cells: u32,
    pub cell_size_m: f64,
    #[serde(rename = "power_centi_dBm")]
    pub power_centi_dbm: String,
    pub tier: String,
    /// Distinct rates of the grid, fastest first after index 0 (no service).
    pub tiers_mbps: Vec<f64>,
    pub serving_site: String,
    pub sites: Vec<String>,
    pub receivers: Vec<ReceiverRow>,
    pub feasible: bool,
}

pub fn compact(a: &CoverageArtifact) -> CompactCoverage {
    let mut rates: Vec<f64> = a.rate_mbps.iter().copied().filter(|&r| r > 0.0).collect();
    rates.sort_by(|x, y| y.total_cmp(x));
    rates.dedup();
    let mut tiers_mbps = vec![0.0];
    tiers_mbps.extend(rates);
    let power: Vec<u8> = a
        .power_dbm
        .iter()
        .flat_map(|p| {
            let v = p
                .map_or(NO_SIGNAL, |x| (x * 100.0).round().clamp(f64::from(NO_SIGNAL + 1), f64::from(i16::MAX)) as i16);
            v.to_le_bytes()
        })
        .collect();
    let tier: Vec<u8> =
        a.rate_mbps.iter().map(|&r| tiers_mbps.iter().position(|&t| t == r).unwrap_or(0) as u8).collect();
    let serving: Vec<u8> = a.serving_site.iter().flat_map(|s| s.map_or(0u16, |i| i as u16 + 1).to_le_bytes()).collect();
    CompactCoverage {
        width_cells: a.width_cells,
        height_cells: a.height_cells,
        cell_size_m: a.cell_size_m,
        power_centi_dbm: STANDARD.encode(power),
        tier: STANDARD.encode(tier),
        tiers_mbps,
        serving_site: STANDARD.encode(serving),
        sites: a.sites.clone(),
        receivers: a.receivers.clone(),
        feasible: a.feasible,
    }
}
