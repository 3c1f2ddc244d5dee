use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Axis, Grid};
use crate::error::{Error, Result};

/// Complex amplitudes on a configuration-space grid at time `time`.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: Grid,
    amps: Vec<Complex64>,
    time: f64,
}

/// JSON form of a wavefunction. Amplitudes are flattened row-major with the
/// last axis varying fastest, as `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub extents: Vec<[f64; 2]>,
    pub points: usize,
    pub time: f64,
    pub axis_order: String,
    pub amplitudes: Vec<[f64; 2]>,
}

const AXIS_ORDER: &str = "row-major, last axis fastest";

impl WaveFunction {
    pub fn new(grid: Grid, amps: Vec<Complex64>, time: f64) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::dims(
                "wavefunction amplitudes",
                grid.len(),
                amps.len(),
            ));
        }
        if !time.is_finite() || amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite("wavefunction"));
        }
        Ok(WaveFunction { grid, amps, time })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let mut x = vec![0.0; grid.ndim()];
        let amps = (0..grid.len())
            .map(|n| {
                grid.node_coords(n, &mut x);
                f(&x)
            })
            .collect();
        WaveFunction::new(grid, amps, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.grid, &self.amps)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero wavefunction".into(),
            ));
        }
        let s = 1.0 / n.sqrt();
        for a in &mut self.amps {
            *a *= s;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Probability per node along `axis`, summed over the other axes and
    /// normalized to 1.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        marginal(&self.grid, &self.amps, axis)
    }

    /// Mean and standard deviation of the `axis` marginal.
    pub fn moments(&self, axis: usize) -> (f64, f64) {
        let p = self.marginal(axis);
        let mean: f64 = p
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.grid.coord(axis, i))
            .sum();
        let var: f64 = p
            .iter()
            .enumerate()
            .map(|(i, w)| w * (self.grid.coord(axis, i) - mean).powi(2))
            .sum();
        (mean, var.sqrt())
    }

    /// Probability mass within `cells` nodes of the boundary.
    pub fn guard_mass(&self, cells: usize) -> f64 {
        guard_mass(&self.grid, &self.amps, cells)
    }

    /// Probability mass over nodes where `pred(coords)` holds.
    pub fn mass_where(&self, pred: impl Fn(&[f64]) -> bool) -> f64 {
        let mut x = vec![0.0; self.grid.ndim()];
        let dv = self.grid.cell_volume();
        (0..self.grid.len())
            .filter(|&n| {
                self.grid.node_coords(n, &mut x);
                pred(&x)
            })
            .map(|n| self.amps[n].norm_sqr() * dv)
            .sum()
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            extents: self.grid.axes().iter().map(|a| [a.lo, a.hi]).collect(),
            points: self.grid.points(),
            time: self.time,
            axis_order: AXIS_ORDER.to_string(),
            amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let axes = s
            .extents
            .iter()
            .map(|e| Axis { lo: e[0], hi: e[1] })
            .collect();
        let grid = Grid::new(axes, s.points)?;
        let amps = s
            .amplitudes
            .iter()
            .map(|a| Complex64::new(a[0], a[1]))
            .collect();
        WaveFunction::new(grid, amps, s.time)
    }
}

pub(crate) fn norm_sq(grid: &Grid, amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.cell_volume()
}

pub(crate) fn guard_mass(grid: &Grid, amps: &[Complex64], cells: usize) -> f64 {
    let dv = grid.cell_volume();
    amps.iter()
        .enumerate()
        .filter(|(n, _)| grid.in_guard_band(*n, cells))
        .map(|(_, a)| a.norm_sqr() * dv)
        .sum()
}

pub(crate) fn marginal(grid: &Grid, amps: &[Complex64], axis: usize) -> Vec<f64> {
    let mut p = vec![0.0; grid.points()];
    for (n, a) in amps.iter().enumerate() {
        p[grid.index_along(n, axis)] += a.norm_sqr();
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for v in &mut p {
            *v /= total;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> WaveFunction {
        let g = Grid::uniform(1, 256, -12.0, 12.0).unwrap();
        WaveFunction::from_fn(g, 0.0, |x| Complex64::new((-x[0] * x[0] / 4.0).exp(), 0.0))
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn normalization_and_moments() {
        let psi = gaussian();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let (m, s) = psi.moments(0);
        assert!(m.abs() < 1e-12);
        assert!((s - 1.0).abs() < 1e-9);
        assert!(psi.guard_mass(2) < 1e-12);
        assert!((psi.mass_where(|x| x[0] < 0.0) + 0.5 * psi.marginal(0)[128] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip() {
        let psi = gaussian();
        let s = psi.to_snapshot();
        let json = serde_json::to_string(&s).unwrap();
        let back = WaveFunction::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.amplitudes(), psi.amplitudes());
        assert_eq!(back.grid(), psi.grid());
    }

    #[test]
    fn zero_state_is_rejected() {
        let g = Grid::uniform(1, 8, -1.0, 1.0).unwrap();
        let mut z = WaveFunction::new(g.clone(), vec![Complex64::new(0.0, 0.0); 8], 0.0).unwrap();
        assert!(z.normalize().is_err());
        assert!(WaveFunction::new(g, vec![Complex64::new(0.0, 0.0); 7], 0.0).is_err());
    }
}
