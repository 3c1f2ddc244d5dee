//! Multi-dimensional FFTs and spectral derivatives on a [`Grid`].

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::grid::Grid;

/// Below this many nodes the per-axis passes run on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 14;

pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<Vec<f64>>,
    /// `|k|^2` per node, flat storage order.
    k_squared: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let m = grid.points();
        let wavenumbers: Vec<Vec<f64>> = (0..grid.ndim()).map(|k| grid.wavenumbers(k)).collect();
        let k_squared = (0..grid.len())
            .map(|n| {
                (0..grid.ndim())
                    .map(|k| wavenumbers[k][grid.index_along(n, k)].powi(2))
                    .sum()
            })
            .collect();
        Spectral {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            wavenumbers,
            k_squared,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    fn plan(&self, inverse: bool) -> &Arc<dyn Fft<f64>> {
        if inverse {
            &self.inverse
        } else {
            &self.forward
        }
    }

    /// FFT over contiguous lines of length `points`.
    fn process_lines(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.grid.points();
        let fft = self.plan(inverse);
        if data.len() >= PARALLEL_THRESHOLD {
            let chunk = m * (PARALLEL_THRESHOLD / m).max(1);
            data.par_chunks_mut(chunk).for_each(|c| fft.process(c));
        } else {
            fft.process(data);
        }
    }

    /// Unnormalized transform along one axis.
    pub fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let m = self.grid.points();
        let stride = self.grid.stride(axis);
        if stride == 1 {
            self.process_lines(data, inverse);
            return;
        }
        // Gather strided lines into contiguous storage, transform, scatter back.
        let block = m * stride;
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        let mut line = 0;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let dst = &mut buf[line * m..(line + 1) * m];
                for (j, d) in dst.iter_mut().enumerate() {
                    *d = data[outer + inner + j * stride];
                }
                line += 1;
            }
        }
        self.process_lines(&mut buf, inverse);
        let mut line = 0;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let src = &buf[line * m..(line + 1) * m];
                for (j, s) in src.iter().enumerate() {
                    data[outer + inner + j * stride] = *s;
                }
                line += 1;
            }
        }
    }

    /// Forward transform over all axes.
    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.grid.ndim() {
            self.transform_axis(data, axis, false);
        }
    }

    /// Normalized inverse transform over all axes.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.grid.ndim() {
            self.transform_axis(data, axis, true);
        }
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn lines_per_axis(&self) -> usize {
        self.grid.len() / self.grid.points()
    }

    /// Line number of `node` among the lines running along `axis`.
    pub fn line_of(&self, node: usize, axis: usize) -> usize {
        let m = self.grid.points();
        let stride = self.grid.stride(axis);
        let outer = node / (m * stride);
        let inner = node % stride;
        outer * stride + inner
    }

    fn line_start(&self, line: usize, axis: usize) -> usize {
        let m = self.grid.points();
        let stride = self.grid.stride(axis);
        (line / stride) * m * stride + line % stride
    }

    /// Spectral derivative of `psi` along `axis`, restricted to one line. The
    /// Nyquist mode is dropped.
    pub fn derivative_line(&self, psi: &[Complex64], axis: usize, line: usize) -> Vec<Complex64> {
        let m = self.grid.points();
        let stride = self.grid.stride(axis);
        let start = self.line_start(line, axis);
        let mut buf: Vec<Complex64> = (0..m).map(|j| psi[start + j * stride]).collect();
        self.forward.process(&mut buf);
        let k = &self.wavenumbers[axis];
        let scale = 1.0 / m as f64;
        for (j, v) in buf.iter_mut().enumerate() {
            *v = if j == m / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k[j] * scale) * *v
            };
        }
        self.inverse.process(&mut buf);
        buf
    }

    /// Position of `node` within its line along `axis`.
    pub fn position_in_line(&self, node: usize, axis: usize) -> usize {
        self.grid.index_along(node, axis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let g = Grid::uniform(2, 16, -3.0, 3.0).unwrap();
        let s = Spectral::new(&g);
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut d = orig.clone();
        s.forward(&mut d);
        s.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_a_periodic_mode() {
        let g = Grid::uniform(2, 32, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let s = Spectral::new(&g);
        let psi: Vec<Complex64> = (0..g.len())
            .map(|n| {
                let (x, y) = (
                    g.coord(0, g.index_along(n, 0)),
                    g.coord(1, g.index_along(n, 1)),
                );
                Complex64::new((3.0 * x).sin() * y.cos(), 0.0)
            })
            .collect();
        for node in [0, 37, 500, 1023] {
            let d0 = s.derivative_line(&psi, 0, s.line_of(node, 0))[s.position_in_line(node, 0)];
            let (x, y) = (
                g.coord(0, g.index_along(node, 0)),
                g.coord(1, g.index_along(node, 1)),
            );
            assert!((d0.re - 3.0 * (3.0 * x).cos() * y.cos()).abs() < 1e-10);
            let d1 = s.derivative_line(&psi, 1, s.line_of(node, 1))[s.position_in_line(node, 1)];
            assert!((d1.re + (3.0 * x).sin() * y.sin()).abs() < 1e-10);
        }
    }
}
