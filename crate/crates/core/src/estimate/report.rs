use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lorentzian::LorentzianFit;
use super::occupancy::OccupancyFromData;
use super::ringdown_fit::RingdownFit;
use crate::error::{Error, Result};

/// Machine-readable summary of one fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    /// 1σ; `null` where unavailable.
    pub sigma: BTreeMap<String, Option<f64>>,
    pub residual_norm: f64,
    /// [first, last] of the fitted axis (Hz or s).
    pub grid_span: [f64; 2],
    pub flagged: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl FitReport {
    pub fn lorentzian(fit: &LorentzianFit, grid_span: [f64; 2]) -> Self {
        Self {
            model: "lorentzian".into(),
            params: BTreeMap::from([
                ("floor".into(), fit.floor),
                ("peak".into(), fit.peak),
                ("center".into(), fit.center),
                ("q_used".into(), fit.q_used),
                ("exclusion_halfwidth".into(), fit.exclusion_halfwidth),
            ]),
            sigma: BTreeMap::from([
                ("floor".into(), finite(fit.sigma[0])),
                ("peak".into(), finite(fit.sigma[1])),
                ("center".into(), finite(fit.sigma[2])),
            ]),
            residual_norm: fit.residual_norm,
            grid_span,
            flagged: false,
        }
    }

    pub fn ringdown(fit: &RingdownFit, time_span: [f64; 2]) -> Self {
        Self {
            model: "ringdown".into(),
            params: BTreeMap::from([
                ("gamma0".into(), fit.gamma0),
                ("q".into(), fit.q),
                ("amplitude".into(), fit.amplitude),
            ]),
            sigma: BTreeMap::from([
                ("gamma0".into(), finite(fit.sigma_gamma0)),
                ("q".into(), finite(fit.q * fit.sigma_gamma0 / fit.gamma0)),
            ]),
            residual_norm: fit.residual_rms,
            grid_span: time_span,
            flagged: false,
        }
    }

    pub fn closed_loop(est: &OccupancyFromData, grid_span: [f64; 2]) -> Self {
        Self {
            model: "closed_loop_observed".into(),
            params: BTreeMap::from([
                ("n_eff".into(), est.n_eff),
                ("gamma_eff".into(), est.gamma_eff),
                ("s_imp".into(), est.s_imp),
                ("torque_psd".into(), est.torque_psd),
            ]),
            sigma: BTreeMap::from([
                ("n_eff".into(), finite(est.sigma)),
                ("gamma_eff".into(), finite(est.sigma_gamma_eff)),
            ]),
            residual_norm: est.residual_rms,
            grid_span,
            flagged: est.flagged,
        }
    }

    pub fn with_flag(mut self, flagged: bool) -> Self {
        self.flagged |= flagged;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}
