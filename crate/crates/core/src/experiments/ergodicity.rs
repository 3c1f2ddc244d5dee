//! Generalized ergodicity diagnostic: compares the distribution of one
//! coordinate over time (one particle, one world), over particles (one world,
//! one time) and over worlds (one particle, one time). Nothing is asserted.

use serde::{Deserialize, Serialize};

use crate::bohmengine::{sample_equilibrium, GuidingFlow, Path};
use crate::error::{Error, Result};
use crate::stats::{ks_critical_two_sample, ks_two_sample};

/// Fewest samples accepted in each distribution.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicityConfig {
    pub duration: f64,
    /// Points of the single-particle time series.
    pub time_samples: usize,
    /// Particles of the one world used for the spatial distribution.
    pub particles: usize,
    /// Worlds sampled for the hap distribution.
    pub worlds: usize,
    /// Which coordinate of the single-particle configuration is compared.
    pub axis: usize,
}

impl Default for ErgodicityConfig {
    fn default() -> Self {
        ErgodicityConfig {
            duration: 20.0,
            time_samples: 2000,
            particles: 2000,
            worlds: 2000,
            axis: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub time_series: Vec<f64>,
    pub spatial: Vec<f64>,
    pub hap: Vec<f64>,
    pub ks_time_space: f64,
    pub ks_time_hap: f64,
    pub ks_space_hap: f64,
    /// Two-sample critical values at the same level as the one-sample test.
    pub critical_time_space: f64,
    pub critical_time_hap: f64,
    pub critical_space_hap: f64,
    /// Trajectory behind the time series, when it was simulated.
    #[serde(skip)]
    pub trajectory: Option<Path>,
}

impl ErgodicityReport {
    pub fn from_distributions(
        time_series: Vec<f64>,
        spatial: Vec<f64>,
        hap: Vec<f64>,
    ) -> Result<Self> {
        for (what, v) in [
            ("time series", &time_series),
            ("spatial distribution", &spatial),
            ("hap distribution", &hap),
        ] {
            if v.len() < MIN_SAMPLES {
                return Err(Error::InsufficientSamples {
                    what,
                    found: v.len(),
                    required: MIN_SAMPLES,
                });
            }
        }
        Ok(ErgodicityReport {
            ks_time_space: ks_two_sample(&time_series, &spatial),
            ks_time_hap: ks_two_sample(&time_series, &hap),
            ks_space_hap: ks_two_sample(&spatial, &hap),
            critical_time_space: ks_critical_two_sample(time_series.len(), spatial.len()),
            critical_time_hap: ks_critical_two_sample(time_series.len(), hap.len()),
            critical_space_hap: ks_critical_two_sample(spatial.len(), hap.len()),
            trajectory: None,
            time_series,
            spatial,
            hap,
        })
    }
}

/// Builds the three distributions for the single-particle state of `flow`.
/// A world of many particles in the same state is a product state, so each
/// of its particles follows this single-particle flow on its own.
pub fn run_ergodicity(
    flow: &GuidingFlow,
    cfg: &ErgodicityConfig,
    seed: u64,
) -> Result<ErgodicityReport> {
    if !(cfg.duration.is_finite() && cfg.duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration must be positive, got {}",
            cfg.duration
        )));
    }
    if cfg.axis >= flow.grid().ndim() {
        return Err(Error::InvalidArgument(format!(
            "axis {} out of range",
            cfg.axis
        )));
    }
    for (what, n) in [
        ("time series", cfg.time_samples),
        ("spatial distribution", cfg.particles),
        ("hap distribution", cfg.worlds),
    ] {
        if n < MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                what,
                found: n,
                required: MIN_SAMPLES,
            });
        }
    }
    let t0 = flow.reference_time();
    let t1 = t0 + cfg.duration;
    let world = sample_equilibrium(&flow.wavefunction_at(t0)?, cfg.particles, seed)?;

    let path = flow.integrate_trajectory(&world.samples[0], t0, t1)?;
    let k = cfg.time_samples;
    let time_series = (0..k)
        .map(|i| {
            let t = if i + 1 == k {
                t1
            } else {
                t0 + cfg.duration * i as f64 / (k - 1) as f64
            };
            path.at(t).map(|c| c[cfg.axis])
        })
        .collect::<Result<Vec<_>>>()?;

    let spatial = flow
        .transport(&world.samples, t0, t1)?
        .into_iter()
        .map(|c| c[cfg.axis])
        .collect();

    let worlds = sample_equilibrium(&flow.wavefunction_at(t1)?, cfg.worlds, seed.wrapping_add(1))?;
    let mut report =
        ErgodicityReport::from_distributions(time_series, spatial, worlds.coordinate(cfg.axis))?;
    report.trajectory = Some(path);
    Ok(report)
}
