//! Guiding velocity `v = Im(conj(psi) grad psi) / |psi|^2` (hbar = m = 1).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::grid::MAX_AXES;
use super::spectral::Spectral;
use super::wavefunction::WaveFunction;
use crate::error::{Error, Result};

/// Velocity field of one wavefunction snapshot. Gradients are computed
/// spectrally, one grid line at a time, as points ask for them; node
/// velocities are then interpolated multilinearly.
///
/// Nodes with `|psi|` below `floor_rel * max|psi|` borrow the velocity of the
/// nearest node above the floor.
pub struct VelocityField {
    spectral: Arc<Spectral>,
    psi: Arc<Vec<Complex64>>,
    time: f64,
    floor: f64,
    lines: Vec<Vec<OnceLock<Vec<Complex64>>>>,
    substitutes: Mutex<HashMap<usize, usize>>,
}

impl std::fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityField")
            .field("time", &self.time)
            .field("floor", &self.floor)
            .finish_non_exhaustive()
    }
}

impl VelocityField {
    pub fn new(
        spectral: Arc<Spectral>,
        psi: Arc<Vec<Complex64>>,
        time: f64,
        floor_rel: f64,
    ) -> Result<Self> {
        let grid = spectral.grid();
        if psi.len() != grid.len() {
            return Err(Error::dims(
                "velocity field amplitudes",
                grid.len(),
                psi.len(),
            ));
        }
        let max = psi.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let lines = (0..grid.ndim())
            .map(|_| {
                (0..spectral.lines_per_axis())
                    .map(|_| OnceLock::new())
                    .collect()
            })
            .collect();
        Ok(VelocityField {
            spectral,
            psi,
            time,
            floor: floor_rel * max,
            lines,
            substitutes: Mutex::new(HashMap::new()),
        })
    }

    pub fn from_wavefunction(psi: &WaveFunction, floor_rel: f64) -> Result<Self> {
        VelocityField::new(
            Arc::new(Spectral::new(psi.grid())),
            Arc::new(psi.amplitudes().to_vec()),
            psi.time(),
            floor_rel,
        )
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn amplitudes(&self) -> &Arc<Vec<Complex64>> {
        &self.psi
    }

    pub fn ndim(&self) -> usize {
        self.spectral.grid().ndim()
    }

    fn derivative(&self, node: usize, axis: usize) -> Complex64 {
        let line = self.spectral.line_of(node, axis);
        let d = self.lines[axis][line]
            .get_or_init(|| self.spectral.derivative_line(&self.psi, axis, line));
        d[self.spectral.position_in_line(node, axis)]
    }

    /// Nearest node (Euclidean index distance, lowest index on ties) whose
    /// amplitude clears the floor.
    fn substitute(&self, node: usize) -> usize {
        if let Some(&s) = self
            .substitutes
            .lock()
            .expect("substitute cache poisoned")
            .get(&node)
        {
            return s;
        }
        let grid = self.spectral.grid();
        let d = grid.ndim();
        let m = grid.points() as i64;
        let mut centre = [0i64; MAX_AXES];
        for (k, c) in centre.iter_mut().enumerate().take(d) {
            *c = grid.index_along(node, k) as i64;
        }
        let mut best: Option<(i64, usize)> = None;
        let mut radius = 1i64;
        loop {
            // Shell of the cube with Chebyshev radius `radius`. A Euclidean
            // nearest node at distance r lies within Chebyshev radius r, so
            // once the best squared distance is <= radius^2 no larger shell
            // can beat it.
            let mut idx = [0i64; MAX_AXES];
            let side = 2 * radius + 1;
            let total = side.pow(d as u32);
            for code in 0..total {
                let mut rem = code;
                let mut on_shell = false;
                let mut inside = true;
                let mut flat = 0usize;
                let mut dist2 = 0i64;
                for k in (0..d).rev() {
                    let off = rem % side - radius;
                    rem /= side;
                    idx[k] = centre[k] + off;
                    on_shell |= off.abs() == radius;
                    inside &= idx[k] >= 0 && idx[k] < m;
                    dist2 += off * off;
                }
                if !on_shell || !inside {
                    continue;
                }
                for (k, &i) in idx.iter().enumerate().take(d) {
                    flat += i as usize * grid.stride(k);
                }
                if self.psi[flat].norm() >= self.floor {
                    let cand = (dist2, flat);
                    if best.map_or(true, |b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
            if let Some((d2, _)) = best {
                if d2 <= radius * radius {
                    break;
                }
            }
            if radius > m {
                break;
            }
            radius += 1;
        }
        let s = best.map(|b| b.1).unwrap_or(node);
        self.substitutes
            .lock()
            .expect("substitute cache poisoned")
            .insert(node, s);
        s
    }

    /// Velocity at a grid node, written into `out`.
    pub fn node_velocity(&self, node: usize, out: &mut [f64]) {
        let mut n = node;
        if self.psi[n].norm() < self.floor {
            n = self.substitute(n);
        }
        let p = self.psi[n];
        let rho = p.norm_sqr();
        for (axis, o) in out.iter_mut().enumerate().take(self.ndim()) {
            *o = if rho > 0.0 {
                (p.conj() * self.derivative(n, axis)).im / rho
            } else {
                0.0
            };
        }
    }

    /// Interpolated guiding velocity at `point`.
    pub fn velocity(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ndim()];
        self.velocity_into(point, &mut out)?;
        Ok(out)
    }

    pub fn velocity_into(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        let grid = self.spectral.grid();
        if point.len() != grid.ndim() {
            return Err(Error::dims("hap point", grid.ndim(), point.len()));
        }
        let st = grid.locate(point).ok_or_else(|| Error::OutOfDomain {
            time: self.time,
            point: point.to_vec(),
            partial: None,
        })?;
        let d = grid.ndim();
        let mut node_v = [0.0; MAX_AXES];
        out.iter_mut().for_each(|o| *o = 0.0);
        grid.for_each_corner(&st, |node, w| {
            if w == 0.0 {
                return;
            }
            self.node_velocity(node, &mut node_v[..d]);
            for k in 0..d {
                out[k] += w * node_v[k];
            }
        });
        Ok(())
    }
}

/// Guiding velocity of `psi` at `point`.
pub fn guiding_velocity(psi: &WaveFunction, point: &[f64], floor_rel: f64) -> Result<Vec<f64>> {
    VelocityField::from_wavefunction(psi, floor_rel)?.velocity(point)
}
