use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest configuration-space dimension the engine handles.
pub const MAX_AXES: usize = 6;

/// Upper bound on grid nodes, to keep allocations sane.
pub const MAX_NODES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
}

/// Uniform periodic grid over a box in configuration space. Nodes sit at
/// `lo + i * dx`, `i in 0..points`, with `dx = (hi - lo) / points`; storage is
/// row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    points: usize,
    len: usize,
}

/// Bilinear (multilinear) interpolation stencil for a point.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub lower: [usize; MAX_AXES],
    pub upper: [usize; MAX_AXES],
    pub frac: [f64; MAX_AXES],
}

impl Grid {
    pub fn new(axes: Vec<Axis>, points: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_AXES {
            return Err(Error::InvalidArgument(format!(
                "grid needs between 1 and {MAX_AXES} axes, got {}",
                axes.len()
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid points per axis must be a power of two >= 4, got {points}"
            )));
        }
        for a in &axes {
            if !(a.lo.is_finite() && a.hi.is_finite() && a.lo < a.hi) {
                return Err(Error::InvalidArgument(format!(
                    "bad grid extents [{}, {}]",
                    a.lo, a.hi
                )));
            }
        }
        let len = axes
            .iter()
            .try_fold(1usize, |acc, _| acc.checked_mul(points))
            .filter(|&n| n <= MAX_NODES)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "grid of {points}^{} nodes is too large",
                    axes.len()
                ))
            })?;
        Ok(Grid { axes, points, len })
    }

    pub fn uniform(ndim: usize, points: usize, lo: f64, hi: f64) -> Result<Self> {
        Grid::new(vec![Axis { lo, hi }; ndim], points)
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let a = self.axes[axis];
        (a.hi - a.lo) / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.ndim()).map(|k| self.spacing(k)).product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.axes[axis].lo + i as f64 * self.spacing(axis)
    }

    /// Distance between consecutive nodes along `axis` in flat storage.
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.ndim() - 1 - axis) as u32)
    }

    pub fn index_along(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.points
    }

    pub fn node_coords(&self, node: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(self.ndim()) {
            *o = self.coord(k, self.index_along(node, k));
        }
    }

    /// Angular wavenumbers of the FFT ordering along `axis`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let m = self.points;
        let span = self.spacing(axis) * m as f64;
        (0..m)
            .map(|j| {
                let n = if j < m / 2 {
                    j as f64
                } else {
                    j as f64 - m as f64
                };
                2.0 * PI * n / span
            })
            .collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.ndim()
            && point
                .iter()
                .zip(&self.axes)
                .all(|(x, a)| *x >= a.lo && *x <= a.hi)
    }

    /// Interpolation stencil for `point`, or `None` outside the extents. The
    /// last cell wraps periodically onto node 0.
    pub fn locate(&self, point: &[f64]) -> Option<Stencil> {
        if !self.contains(point) {
            return None;
        }
        let mut st = Stencil {
            lower: [0; MAX_AXES],
            upper: [0; MAX_AXES],
            frac: [0.0; MAX_AXES],
        };
        for (k, (&x, a)) in point.iter().zip(&self.axes).enumerate() {
            let s = (x - a.lo) / self.spacing(k);
            let mut i = s.floor() as usize;
            if i >= self.points {
                i = self.points - 1;
            }
            st.lower[k] = i;
            st.upper[k] = (i + 1) % self.points;
            st.frac[k] = s - i as f64;
        }
        Some(st)
    }

    /// Visits the `2^ndim` stencil corners as `(node, weight)`.
    pub fn for_each_corner(&self, st: &Stencil, mut f: impl FnMut(usize, f64)) {
        let d = self.ndim();
        for mask in 0..(1usize << d) {
            let mut node = 0;
            let mut w = 1.0;
            for k in 0..d {
                let (i, wk) = if mask & (1 << k) != 0 {
                    (st.upper[k], st.frac[k])
                } else {
                    (st.lower[k], 1.0 - st.frac[k])
                };
                node += i * self.stride(k);
                w *= wk;
            }
            f(node, w);
        }
    }

    /// Whether `node` is within `cells` nodes of the boundary on any axis.
    pub fn in_guard_band(&self, node: usize, cells: usize) -> bool {
        (0..self.ndim()).any(|k| {
            let i = self.index_along(node, k);
            i < cells || i + cells >= self.points
        })
    }

    pub fn max_half_width(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| 0.5 * (a.hi - a.lo))
            .fold(0.0, f64::max)
    }
}
