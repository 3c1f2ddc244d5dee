use serde::Serialize;

use super::flow::GuidingFlow;
use super::sampling::{Ensemble, GridMarginal};
use crate::error::{Error, Result};
use crate::stats::{ks_critical, ks_one_sample};

/// Per-marginal KS comparison of a transported ensemble with `|psi(T)|^2`.
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumReport {
    pub time: f64,
    pub samples: usize,
    pub ks: Vec<f64>,
    pub critical: f64,
    pub passed: bool,
}

/// KS statistic of each marginal of `samples` against the grid marginals of
/// `psi`.
pub fn marginal_ks(psi: &crate::bohmengine::WaveFunction, samples: &[Vec<f64>]) -> Vec<f64> {
    (0..psi.grid().ndim())
        .map(|axis| {
            let m = GridMarginal::new(psi, axis);
            let xs: Vec<f64> = samples.iter().map(|s| s[axis]).collect();
            ks_one_sample(&xs, |x| m.cdf(x))
        })
        .collect()
}

/// Transports `ensemble` with the flow to time `t` and compares every
/// marginal with `|psi(t)|^2` at the `1.63 / sqrt(n)` level.
pub fn equilibrium_preservation_check(
    flow: &GuidingFlow,
    ensemble: &Ensemble,
    t: f64,
) -> Result<EquilibriumReport> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let moved = flow.transport(&ensemble.samples, ensemble.time, t)?;
    let psi = flow.wavefunction_at(t)?;
    let ks = marginal_ks(&psi, &moved);
    let critical = ks_critical(moved.len());
    Ok(EquilibriumReport {
        time: t,
        samples: moved.len(),
        passed: ks.iter().all(|d| *d < critical),
        ks,
        critical,
    })
}
