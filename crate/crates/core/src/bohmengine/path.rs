use serde::Serialize;

use crate::error::{Error, Result};

/// Trajectory samples with velocities. Times are strictly monotone, in either
/// direction; [`Path::at`] interpolates with cubic Hermite segments, which
/// reproduce the samples exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl Path {
    pub fn new() -> Self {
        Path::default()
    }

    pub fn push(&mut self, t: f64, point: Vec<f64>, velocity: Vec<f64>) {
        self.times.push(t);
        self.points.push(point);
        self.velocities.push(velocity);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last_point(&self) -> &[f64] {
        &self.points[self.points.len() - 1]
    }

    /// Covered time range as `(lo, hi)`.
    pub fn range(&self) -> (f64, f64) {
        let (a, b) = (self.start_time(), self.end_time());
        (a.min(b), a.max(b))
    }

    pub fn is_ascending(&self) -> bool {
        self.len() < 2 || self.times[1] > self.times[0]
    }

    pub fn reversed(mut self) -> Path {
        self.times.reverse();
        self.points.reverse();
        self.velocities.reverse();
        self
    }

    /// Joins a backward path (from the anchor toward earlier times) and a
    /// forward path from the same anchor into one ascending path.
    pub fn join_leaf(backward: Path, forward: Path) -> Path {
        let mut out = backward.reversed();
        if !out.is_empty() && !forward.is_empty() {
            out.times.pop();
            out.points.pop();
            out.velocities.pop();
        }
        out.times.extend(forward.times);
        out.points.extend(forward.points);
        out.velocities.extend(forward.velocities);
        out
    }

    /// Index `i` such that `t` lies in segment `[times[i], times[i+1]]`.
    fn segment(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if self.is_empty() || !(t >= lo && t <= hi) {
            return Err(Error::TimeOutOfRange {
                time: t,
                lo: if self.is_empty() { f64::NAN } else { lo },
                hi: if self.is_empty() { f64::NAN } else { hi },
            });
        }
        if self.len() == 1 {
            return Ok(0);
        }
        let i = if self.is_ascending() {
            self.times.partition_point(|&s| s <= t)
        } else {
            self.times.partition_point(|&s| s >= t)
        };
        Ok(i.saturating_sub(1).min(self.len() - 2))
    }

    fn hermite(&self, t: f64, derivative: bool) -> Result<Vec<f64>> {
        let i = self.segment(t)?;
        if self.len() == 1 {
            return Ok(if derivative {
                self.velocities[0].clone()
            } else {
                self.points[0].clone()
            });
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        if t == t0 {
            return Ok(if derivative {
                &self.velocities[i]
            } else {
                &self.points[i]
            }
            .clone());
        }
        if t == t1 {
            return Ok(if derivative {
                &self.velocities[i + 1]
            } else {
                &self.points[i + 1]
            }
            .clone());
        }
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (p0, p1, m0, m1) = (
            &self.points[i],
            &self.points[i + 1],
            &self.velocities[i],
            &self.velocities[i + 1],
        );
        let out = if derivative {
            let d00 = (6.0 * s * s - 6.0 * s) / h;
            let d10 = 3.0 * s * s - 4.0 * s + 1.0;
            let d01 = (-6.0 * s * s + 6.0 * s) / h;
            let d11 = 3.0 * s * s - 2.0 * s;
            (0..p0.len())
                .map(|k| d00 * p0[k] + d10 * m0[k] + d01 * p1[k] + d11 * m1[k])
                .collect()
        } else {
            let s2 = s * s;
            let s3 = s2 * s;
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = (s3 - 2.0 * s2 + s) * h;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = (s3 - s2) * h;
            (0..p0.len())
                .map(|k| h00 * p0[k] + h10 * m0[k] + h01 * p1[k] + h11 * m1[k])
                .collect()
        };
        Ok(out)
    }

    /// Position at time `t`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        self.hermite(t, false)
    }

    /// Derivative of the interpolant at `t`. Equal to the stored velocity at
    /// sample times.
    pub fn velocity_at(&self, t: f64) -> Result<Vec<f64>> {
        self.hermite(t, true)
    }
}
