//! Decoherence fork: a system in superposition coupled to a pointer. The
//! trajectories split into two bundles whose sizes follow the Born weights.

use serde::{Deserialize, Serialize};

use super::states::{GridSpec, StateSpec};
use crate::bohmengine::{
    marginal_ks, sample_equilibrium, EngineSettings, GuidingFlow, Path, Potential, Record,
    WaveFunction,
};
use crate::error::{Error, Result};
use crate::stats::ks_critical;

/// Bundles with less Born mass than this count as absent.
const BUNDLE_PRESENCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForkConfig {
    /// System packets sit at `-separation` and `+separation`.
    pub separation: f64,
    pub system_sigma: f64,
    pub pointer_sigma: f64,
    /// Born weight of the left system packet.
    pub weight_left: f64,
    pub lambda: f64,
    pub width: f64,
    pub duration: f64,
    pub samples: usize,
    /// Trajectories kept in full for export and the crossing check.
    pub exported: usize,
}

impl Default for ForkConfig {
    fn default() -> Self {
        ForkConfig {
            separation: 4.0,
            system_sigma: 1.0,
            pointer_sigma: 1.0,
            weight_left: 0.5,
            lambda: 4.5,
            width: 0.5,
            duration: 1.5,
            samples: 10_000,
            exported: 100,
        }
    }
}

impl ForkConfig {
    pub fn state(&self) -> StateSpec {
        StateSpec::Fork {
            separation: self.separation,
            system_sigma: self.system_sigma,
            pointer_sigma: self.pointer_sigma,
            weight_left: self.weight_left,
        }
    }

    pub fn potential(&self) -> Potential {
        Potential::ForkCoupling {
            lambda: self.lambda,
            width: self.width,
            system_axis: 0,
            pointer_axis: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.state().validate()?;
        self.potential().validate(2)?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fork duration must be positive, got {}",
                self.duration
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument(
                "fork needs at least one sample".into(),
            ));
        }
        Ok(())
    }

    pub fn flow(&self, grid: &GridSpec, engine: &EngineSettings) -> Result<GuidingFlow> {
        self.validate()?;
        let g = grid.build(2)?;
        GuidingFlow::new(self.state().build(&g)?, self.potential(), engine.clone())
    }
}

/// Final bundle of a trajectory. The left system packet pushes the pointer
/// towards positive values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn of(point: &[f64]) -> Side {
        if point[1] > 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleStats {
    pub born_mass: f64,
    pub pointer_mean: f64,
    pub pointer_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForkReport {
    pub samples: usize,
    pub seed: u64,
    pub duration: f64,
    pub left_fraction: f64,
    pub right_fraction: f64,
    /// `|psi(T)|^2` mass of each side of the pointer.
    pub born_left: f64,
    pub born_right: f64,
    pub left: BundleStats,
    pub right: BundleStats,
    /// Distance between the bundle means, when both bundles are present.
    pub separation: Option<f64>,
    /// `3 sqrt(p (1 - p) / n)` around the Born weight.
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// Smallest pairwise hap distance over every step of the exported
    /// trajectories.
    pub min_pairwise_distance: Option<f64>,
    /// Per-marginal KS distance of the transported ensemble from `|psi(T)|^2`.
    pub ks: Vec<f64>,
    pub ks_critical: f64,
    pub sides: Vec<Side>,
}

#[derive(Clone, Debug)]
pub struct ForkRun {
    pub report: ForkReport,
    pub exported: Vec<Path>,
}

fn bundle(psi: &WaveFunction, side: Side) -> BundleStats {
    let g = psi.grid();
    let mut c = vec![0.0; g.ndim()];
    let (mut m, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, a) in psi.amplitudes().iter().enumerate() {
        g.node_coords(i, &mut c);
        if Side::of(&c) == side {
            let w = a.norm_sqr() * g.cell_volume();
            m += w;
            s1 += w * c[1];
            s2 += w * c[1] * c[1];
        }
    }
    let mean = if m > 0.0 { s1 / m } else { 0.0 };
    let var = if m > 0.0 {
        (s2 / m - mean * mean).max(0.0)
    } else {
        0.0
    };
    BundleStats {
        born_mass: m,
        pointer_mean: mean,
        pointer_std: var.sqrt(),
    }
}

/// Greedy subset of `points`, in order, whose members are pairwise at
/// least `min_sep` apart.
pub fn spaced_subset(points: &[Vec<f64>], min_sep: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    for p in points {
        if out.len() == count {
            break;
        }
        if out.iter().all(|q| distance(p, q) >= min_sep) {
            out.push(p.clone());
        }
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Smallest distance between any two paths at any shared step. All paths
/// must come from one batch, so their time stamps agree.
pub fn min_pairwise_distance(paths: &[Path]) -> Option<f64> {
    if paths.len() < 2 {
        return None;
    }
    let steps = paths.iter().map(Path::len).min().unwrap_or(0);
    let mut best = f64::INFINITY;
    for k in 0..steps {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                best = best.min(distance(&paths[i].points[k], &paths[j].points[k]));
            }
        }
    }
    Some(best)
}

/// Evolves the superposition through the coupling and sorts `samples`
/// equilibrium trajectories by the side the pointer ends on.
pub fn run_fork_demo(flow: &GuidingFlow, cfg: &ForkConfig, seed: u64) -> Result<ForkRun> {
    cfg.validate()?;
    let t0 = flow.reference_time();
    let t1 = t0 + cfg.duration;
    let psi0 = flow.wavefunction_at(t0)?;
    let ensemble = sample_equilibrium(&psi0, cfg.samples, seed)?;
    let ends = flow.transport(&ensemble.samples, t0, t1)?;
    let psi = flow.wavefunction_at(t1)?;
    let left = bundle(&psi, Side::Left);
    let right = bundle(&psi, Side::Right);
    let separation = if left.born_mass >= BUNDLE_PRESENCE && right.born_mass >= BUNDLE_PRESENCE {
        let sep = left.pointer_mean - right.pointer_mean;
        let width = left.pointer_std.max(right.pointer_std);
        if sep < 6.0 * width {
            return Err(Error::InconclusiveFork {
                separation: sep,
                width,
            });
        }
        Some(sep)
    } else {
        None
    };
    let sides: Vec<Side> = ends.iter().map(|p| Side::of(p)).collect();
    let n = sides.len() as f64;
    let left_fraction = sides.iter().filter(|s| **s == Side::Left).count() as f64 / n;
    let total = left.born_mass + right.born_mass;
    let born_left = left.born_mass / total;
    let tolerance = 3.0 * (born_left * (1.0 - born_left) / n).sqrt();

    let min_sep = (0..2).map(|k| flow.grid().spacing(k)).fold(0.0, f64::max);
    let starts = spaced_subset(&ensemble.samples, min_sep, cfg.exported);
    let exported: Vec<Path> = if starts.is_empty() {
        Vec::new()
    } else {
        flow.integrate_batch(&starts, t0, t1, Record::Full)?
            .into_iter()
            .collect::<Result<_>>()?
    };

    let report = ForkReport {
        samples: cfg.samples,
        seed,
        duration: cfg.duration,
        left_fraction,
        right_fraction: 1.0 - left_fraction,
        born_left,
        born_right: 1.0 - born_left,
        within_tolerance: (left_fraction - born_left).abs() <= tolerance,
        left,
        right,
        separation,
        tolerance,
        min_pairwise_distance: min_pairwise_distance(&exported),
        ks: marginal_ks(&psi, &ends),
        ks_critical: ks_critical(ends.len()),
        sides,
    };
    Ok(ForkRun { report, exported })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_respects_spacing() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1, 0.0]).collect();
        let s = spaced_subset(&pts, 0.25, 100);
        assert_eq!(s.len(), 7);
        assert!(min_pairwise_distance(&[Path::new()]).is_none());
    }

    #[test]
    fn weak_coupling_is_inconclusive() {
        let cfg = ForkConfig {
            lambda: 0.1,
            duration: 0.2,
            samples: 200,
            exported: 0,
            ..Default::default()
        };
        let settings = EngineSettings {
            dt: 1e-2,
            ..Default::default()
        };
        let flow = cfg
            .flow(&GridSpec::new(64, -12.0, 12.0), &settings)
            .unwrap();
        assert!(matches!(
            run_fork_demo(&flow, &cfg, 1),
            Err(Error::InconclusiveFork { .. })
        ));
    }

    #[test]
    fn single_packet_gives_one_bundle() {
        let cfg = ForkConfig {
            weight_left: 0.0,
            samples: 500,
            exported: 10,
            ..Default::default()
        };
        let settings = EngineSettings {
            dt: 1e-2,
            ..Default::default()
        };
        let flow = cfg
            .flow(&GridSpec::new(128, -12.0, 12.0), &settings)
            .unwrap();
        let r = run_fork_demo(&flow, &cfg, 3).unwrap().report;
        assert_eq!(r.right_fraction, 1.0);
        assert!(r.separation.is_none());
        assert!(r.min_pairwise_distance.unwrap() > 1e-6);
    }
}
