//! Free choice as a unilateral deviation: perturb particle 1 at the event
//! and ask whether a boosted observer also sees particle 2 untouched.

use serde::{Deserialize, Serialize};

use crate::bohmengine::{Foliation, GuidingFlow, Path};
use crate::error::{Error, Result};
use crate::framechange::{crossing_on_leaf, default_window, leaves_spanning};
use crate::hapgeometry::HapEvent;
use crate::relativity::Boost;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeChoiceConfig {
    /// Baseline hap coordinate `(c1, c2)` at the event.
    #[serde(rename = "c_E", default = "default_c_e")]
    pub c_e: [f64; 2],
    #[serde(rename = "t_E", default)]
    pub t_e: f64,
    #[serde(rename = "x_E", default)]
    pub x_e: f64,
    /// Perturbation of particle 1 only.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_v")]
    pub v: f64,
    /// Unilaterality tolerance relative to `|delta|`.
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_c_e() -> [f64; 2] {
    [0.5, -0.5]
}

fn default_delta() -> f64 {
    0.2
}

fn default_v() -> f64 {
    0.5
}

fn default_tau() -> f64 {
    1e-6
}

impl Default for FreeChoiceConfig {
    fn default() -> Self {
        FreeChoiceConfig {
            c_e: default_c_e(),
            t_e: 0.0,
            x_e: 0.0,
            delta: default_delta(),
            v: default_v(),
            tau: default_tau(),
        }
    }
}

impl FreeChoiceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be finite and non-zero, got {}",
                self.delta
            )));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be >= 0, got {}",
                self.tau
            )));
        }
        if !(self.t_e.is_finite() && self.x_e.is_finite() && self.c_e.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite("free-choice event"));
        }
        Boost::along(self.v)?;
        Ok(())
    }
}

/// Bob-frame coordinates of the baseline and perturbed worlds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeChoiceResult {
    pub v: f64,
    pub delta: f64,
    #[serde(rename = "d_E")]
    pub d_e: [f64; 2],
    #[serde(rename = "d_E_prime")]
    pub d_e_prime: [f64; 2],
    pub delta_d: [f64; 2],
    /// `|delta_d[1]| / |delta|`.
    pub ratio: f64,
    pub unilateral_for_bob: bool,
    /// Reference time at which particle 2 of the baseline world meets Bob's
    /// hyperplane, and how that time and position move under the deviation.
    #[serde(rename = "t_H")]
    pub t_h: f64,
    #[serde(rename = "delta_t_H")]
    pub delta_t_h: f64,
    #[serde(rename = "delta_c_H2")]
    pub delta_c_h2: f64,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeChoiceScan {
    pub rows: Vec<FreeChoiceResult>,
    pub max_ratio: f64,
}

fn check_flow(flow: &GuidingFlow, cfg: &FreeChoiceConfig, deltas: &[f64]) -> Result<()> {
    cfg.validate()?;
    if flow.hap_dim() != 2 {
        return Err(Error::dims(
            "free-choice hap dimension (two particles in one dimension)",
            2,
            flow.hap_dim(),
        ));
    }
    for &d in deltas {
        if !(d.is_finite() && d != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be finite and non-zero, got {d}"
            )));
        }
        let p = [cfg.c_e[0] + d, cfg.c_e[1]];
        if !flow.grid().contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "perturbed point {p:?} lies off the grid"
            )));
        }
    }
    if !flow.grid().contains(&cfg.c_e) {
        return Err(Error::InvalidArgument(format!(
            "c_E {:?} lies off the grid",
            cfg.c_e
        )));
    }
    Ok(())
}

/// Leaves through the baseline and each perturbed point, long enough for
/// the hyperplane of every speed in `v_values`.
fn leaves(
    flow: &GuidingFlow,
    cfg: &FreeChoiceConfig,
    deltas: &[f64],
    v_values: &[f64],
) -> Result<Vec<Path>> {
    let mut anchors = vec![cfg.c_e.to_vec()];
    anchors.extend(deltas.iter().map(|d| vec![cfg.c_e[0] + d, cfg.c_e[1]]));
    let mut targets = Vec::with_capacity(v_values.len());
    let (mut lo, mut hi) = (cfg.t_e, cfg.t_e);
    for &v in v_values {
        let boost = Boost::along(v)?;
        for a in &anchors {
            let e = HapEvent::from_flat(cfg.t_e, vec![cfg.x_e], a)?;
            let (l, h) = default_window(&boost, &e, flow.step_hint());
            lo = lo.min(l);
            hi = hi.max(h);
        }
        let u = boost.time_of(cfg.t_e, &[cfg.x_e]);
        targets.push((boost, u));
    }
    leaves_spanning(flow, cfg.t_e, &anchors, 1, &targets, (lo, hi))
}

fn compare(
    base: &Path,
    pert: &Path,
    v: f64,
    delta: f64,
    cfg: &FreeChoiceConfig,
) -> Result<FreeChoiceResult> {
    let boost = Boost::along(v)?;
    let u_e = boost.time_of(cfg.t_e, &[cfg.x_e]);
    let a = crossing_on_leaf(&boost, base, 1, u_e)?;
    let b = crossing_on_leaf(&boost, pert, 1, u_e)?;
    let d_e = [a.d[0][0], a.d[1][0]];
    let d_e_prime = [b.d[0][0], b.d[1][0]];
    let delta_d = [d_e_prime[0] - d_e[0], d_e_prime[1] - d_e[1]];
    let ratio = delta_d[1].abs() / delta.abs();
    let c_h2 = base.at(a.t_star[1])?[1];
    let c_h2_prime = pert.at(b.t_star[1])?[1];
    let mut residuals = a.residuals;
    residuals.extend(b.residuals);
    Ok(FreeChoiceResult {
        v,
        delta,
        d_e,
        d_e_prime,
        delta_d,
        ratio,
        unilateral_for_bob: delta_d[1].abs() <= cfg.tau * delta.abs() && delta_d[0].abs() > 0.0,
        t_h: a.t_star[1],
        delta_t_h: b.t_star[1] - a.t_star[1],
        delta_c_h2: c_h2_prime - c_h2,
        residuals,
    })
}

/// Coordinates of the baseline event and its unilateral deviation for the
/// observer moving at `cfg.v`, both through the same flow.
pub fn run_free_choice(flow: &GuidingFlow, cfg: &FreeChoiceConfig) -> Result<FreeChoiceResult> {
    run_free_choice_with_leaves(flow, cfg).map(|(r, _)| r)
}

/// [`run_free_choice`], also returning the baseline and perturbed leaves.
pub fn run_free_choice_with_leaves(
    flow: &GuidingFlow,
    cfg: &FreeChoiceConfig,
) -> Result<(FreeChoiceResult, Vec<Path>)> {
    check_flow(flow, cfg, &[cfg.delta])?;
    let paths = leaves(flow, cfg, &[cfg.delta], &[cfg.v])?;
    let r = compare(&paths[0], &paths[1], cfg.v, cfg.delta, cfg)?;
    Ok((r, paths))
}

/// [`run_free_choice`] over every `(v, delta)` pair. The leaves are
/// integrated once and shared by all speeds.
pub fn scan_free_choice(
    flow: &GuidingFlow,
    cfg: &FreeChoiceConfig,
    v_values: &[f64],
    deltas: &[f64],
) -> Result<FreeChoiceScan> {
    scan_free_choice_with_leaves(flow, cfg, v_values, deltas).map(|(s, _)| s)
}

/// [`scan_free_choice`], also returning the baseline leaf followed by one
/// leaf per delta.
pub fn scan_free_choice_with_leaves(
    flow: &GuidingFlow,
    cfg: &FreeChoiceConfig,
    v_values: &[f64],
    deltas: &[f64],
) -> Result<(FreeChoiceScan, Vec<Path>)> {
    if v_values.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidArgument(
            "scan needs at least one speed and one delta".into(),
        ));
    }
    check_flow(flow, cfg, deltas)?;
    let paths = leaves(flow, cfg, deltas, v_values)?;
    let mut rows = Vec::with_capacity(v_values.len() * deltas.len());
    for &v in v_values {
        for (k, &d) in deltas.iter().enumerate() {
            rows.push(compare(&paths[0], &paths[k + 1], v, d, cfg)?);
        }
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok((FreeChoiceScan { rows, max_ratio }, paths))
}
