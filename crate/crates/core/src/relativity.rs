//! Flat special relativity with `c = 1` and signature `(+, -, -, -)`.
//!
//! The number of spatial dimensions `D` is a runtime quantity. Boosts follow
//! the convention `t' = γ (t - v·x)`; the opposite convention is obtained by
//! boosting with `-v`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intervals whose magnitude is below this fraction of the Euclidean squared
/// length are treated as null, so that boosting a lightlike displacement does
/// not flip its class through rounding.
pub const NULL_TOLERANCE: f64 = 1e-12;

/// A point (or displacement) in Minkowski spacetime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourVector {
    pub t: f64,
    pub x: Vec<f64>,
}

impl FourVector {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        let w = FourVector { t, x };
        w.validate()?;
        Ok(w)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::InvalidArgument(
                "four-vector needs at least one spatial axis".into(),
            ));
        }
        if !self.t.is_finite() || self.x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("four-vector"));
        }
        Ok(())
    }

    pub fn sub(&self, other: &FourVector) -> Result<FourVector> {
        if self.dim() != other.dim() {
            return Err(Error::dims(
                "four-vector difference",
                self.dim(),
                other.dim(),
            ));
        }
        Ok(FourVector {
            t: self.t - other.t,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Squared Minkowski norm `t² - |x|²`.
pub fn interval(w: &FourVector) -> f64 {
    interval_parts(w.t, &w.x)
}

pub(crate) fn interval_parts(t: f64, x: &[f64]) -> f64 {
    t * t - x.iter().map(|c| c * c).sum::<f64>()
}

/// Sign of `t² - |x|²` with the null tolerance applied: `1` for timelike or
/// null, `-1` for spacelike.
pub(crate) fn causal_sign(t: f64, x: &[f64]) -> i8 {
    let space: f64 = x.iter().map(|c| c * c).sum();
    let s = t * t - space;
    if s >= -NULL_TOLERANCE * (t * t + space) {
        1
    } else {
        -1
    }
}

/// Velocity of an inertial frame relative to the reference frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Boost {
    v: Vec<f64>,
    gamma: f64,
}

impl Boost {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidArgument(
                "boost velocity needs at least one axis".into(),
            ));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("boost velocity"));
        }
        let v2: f64 = v.iter().map(|c| c * c).sum();
        if v2 >= 1.0 {
            return Err(Error::InvalidFrame { speed: v2.sqrt() });
        }
        let gamma = 1.0 / (1.0 - v2).sqrt();
        Ok(Boost { v, gamma })
    }

    /// One-dimensional boost.
    pub fn along(v: f64) -> Result<Self> {
        Boost::new(vec![v])
    }

    pub fn identity(dim: usize) -> Self {
        Boost {
            v: vec![0.0; dim],
            gamma: 1.0,
        }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn speed(&self) -> f64 {
        self.v.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_identity(&self) -> bool {
        self.v.iter().all(|&c| c == 0.0)
    }

    pub fn inverse(&self) -> Boost {
        Boost {
            v: self.v.iter().map(|c| -c).collect(),
            gamma: self.gamma,
        }
    }

    /// `(γ - 1) / v²`, written so that it stays exact as `v → 0`.
    fn spatial_coupling(&self) -> f64 {
        self.gamma * self.gamma / (self.gamma + 1.0)
    }

    /// Time component of the boosted event.
    pub fn time_of(&self, t: f64, x: &[f64]) -> f64 {
        let vx: f64 = self.v.iter().zip(x).map(|(a, b)| a * b).sum();
        self.gamma * (t - vx)
    }

    /// Boosts `(t, x)` without dimension checks; `x.len()` must equal
    /// `self.dim()`.
    pub fn apply_parts(&self, t: f64, x: &[f64]) -> (f64, Vec<f64>) {
        debug_assert_eq!(x.len(), self.v.len());
        let vx: f64 = self.v.iter().zip(x).map(|(a, b)| a * b).sum();
        let scale = self.spatial_coupling() * vx - self.gamma * t;
        let xp = x
            .iter()
            .zip(&self.v)
            .map(|(xi, vi)| xi + scale * vi)
            .collect();
        (self.gamma * (t - vx), xp)
    }

    pub fn apply(&self, w: &FourVector) -> Result<FourVector> {
        if w.dim() != self.dim() {
            return Err(Error::dims("boost", self.dim(), w.dim()));
        }
        let (t, x) = self.apply_parts(w.t, &w.x);
        Ok(FourVector { t, x })
    }

    /// Velocity `dx'/dt'` in the boosted frame of a worldline whose velocity
    /// in the reference frame is `a`. `None` when the boosted time stops
    /// advancing along the worldline, i.e. `v·a >= 1`.
    pub fn transform_velocity(&self, a: &[f64]) -> Option<Vec<f64>> {
        let (dt, dx) = self.apply_parts(1.0, a);
        if dt <= 0.0 {
            return None;
        }
        Some(dx.into_iter().map(|c| c / dt).collect())
    }

    /// The `(D+1) x (D+1)` boost matrix acting on `(t, x)`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let k = self.spatial_coupling();
        let mut m = vec![vec![0.0; d + 1]; d + 1];
        m[0][0] = self.gamma;
        for i in 0..d {
            m[0][i + 1] = -self.gamma * self.v[i];
            m[i + 1][0] = -self.gamma * self.v[i];
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[i + 1][j + 1] = delta + k * self.v[i] * self.v[j];
            }
        }
        m
    }
}

/// Lorentz boost of a single four-vector.
pub fn boost(b: &Boost, w: &FourVector) -> Result<FourVector> {
    b.apply(w)
}

/// Separation class between two events. `Haplike` is only produced by the
/// spacetimehap classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationClass {
    TimelikeFutureDirected,
    TimelikePastDirected,
    Spacelike,
    Haplike,
}

impl SeparationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SeparationClass::TimelikeFutureDirected => "timelike-future-directed",
            SeparationClass::TimelikePastDirected => "timelike-past-directed",
            SeparationClass::Spacelike => "spacelike",
            SeparationClass::Haplike => "haplike",
        }
    }

    pub fn is_timelike(self) -> bool {
        matches!(
            self,
            SeparationClass::TimelikeFutureDirected | SeparationClass::TimelikePastDirected
        )
    }
}

impl fmt::Display for SeparationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) fn classify_displacement(dt: f64, dx: &[f64]) -> SeparationClass {
    if causal_sign(dt, dx) > 0 {
        // Identical events land here with dt == 0 and count as future-directed.
        if dt >= 0.0 {
            SeparationClass::TimelikeFutureDirected
        } else {
            SeparationClass::TimelikePastDirected
        }
    } else {
        SeparationClass::Spacelike
    }
}

/// Classifies the displacement from `w1` to `w2`. Null separation counts as
/// timelike.
pub fn classify_spacetime(w1: &FourVector, w2: &FourVector) -> Result<SeparationClass> {
    let d = w2.sub(w1)?;
    Ok(classify_displacement(d.t, &d.x))
}
