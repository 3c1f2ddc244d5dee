//! Initial wavefunctions and grids for the experiments.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bohmengine::{Axis, Grid, WaveFunction};
use crate::error::{Error, Result};

/// Grid extents: one `[lo, hi]` pair for every axis, or one per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extents {
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    #[serde(default = "default_extents")]
    pub extents: Extents,
}

fn default_extents() -> Extents {
    Extents::Uniform([-12.0, 12.0])
}

impl GridSpec {
    pub fn new(points: usize, lo: f64, hi: f64) -> Self {
        GridSpec {
            points,
            extents: Extents::Uniform([lo, hi]),
        }
    }

    pub fn build(&self, ndim: usize) -> Result<Grid> {
        let axes = match &self.extents {
            Extents::Uniform([lo, hi]) => vec![Axis { lo: *lo, hi: *hi }; ndim],
            Extents::PerAxis(v) => {
                if v.len() != ndim {
                    return Err(Error::dims("grid extents", ndim, v.len()));
                }
                v.iter().map(|[lo, hi]| Axis { lo: *lo, hi: *hi }).collect()
            }
        };
        Grid::new(axes, self.points)
    }
}

/// One Gaussian packet `amplitude * prod_k exp(-(c_k - center_k)^2 / (4 sigma_k^2) + i p_k c_k)`.
/// `sigma` is the standard deviation of `|g|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    #[serde(default = "one")]
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub momentum: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl Packet {
    fn validate(&self) -> Result<()> {
        let d = self.center.len();
        if self.sigma.len() != d {
            return Err(Error::dims("packet sigma", d, self.sigma.len()));
        }
        if let Some(p) = &self.momentum {
            if p.len() != d {
                return Err(Error::dims("packet momentum", d, p.len()));
            }
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument(
                "packet sigma must be positive".into(),
            ));
        }
        if !self.amplitude.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("packet"));
        }
        Ok(())
    }

    fn eval(&self, c: &[f64]) -> Complex64 {
        let mut re = 0.0;
        let mut phase = 0.0;
        for k in 0..c.len() {
            let z = c[k] - self.center[k];
            re -= z * z / (4.0 * self.sigma[k] * self.sigma[k]);
            if let Some(p) = &self.momentum {
                phase += p[k] * c[k];
            }
        }
        Complex64::from_polar(self.amplitude * re.exp(), phase)
    }
}

fn gauss(x: f64, sigma: f64) -> f64 {
    (-x * x / (4.0 * sigma * sigma)).exp()
}

/// Initial wavefunction recipes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        #[serde(default)]
        momentum: Option<Vec<f64>>,
    },
    Superposition {
        terms: Vec<Packet>,
    },
    /// Two particles in one dimension,
    /// `g(c1 - a) g(c2 - b) + g(c1 + a) g(c2 + b)`.
    Entangled {
        #[serde(default = "two")]
        a: f64,
        #[serde(default = "two")]
        b: f64,
        #[serde(default = "reference_sigma")]
        sigma: f64,
    },
    /// The same packets without correlation,
    /// `(g(c1 - a) + g(c1 + a)) (g(c2 - b) + g(c2 + b))`.
    Product {
        #[serde(default = "two")]
        a: f64,
        #[serde(default = "two")]
        b: f64,
        #[serde(default = "reference_sigma")]
        sigma: f64,
    },
    /// System packets at `-separation` (weight `weight_left`) and
    /// `+separation` on axis 0, times a pointer packet at 0 on axis 1.
    Fork {
        separation: f64,
        system_sigma: f64,
        pointer_sigma: f64,
        weight_left: f64,
    },
    /// `(c1 + i c2) exp(-omega r^2 / 2)`: a stationary harmonic-trap state
    /// with circulating current.
    Vortex {
        #[serde(default = "one")]
        omega: f64,
    },
}

fn two() -> f64 {
    2.0
}

fn reference_sigma() -> f64 {
    0.7
}

impl StateSpec {
    pub fn entangled() -> Self {
        StateSpec::Entangled {
            a: 2.0,
            b: 2.0,
            sigma: 0.7,
        }
    }

    pub fn product() -> Self {
        StateSpec::Product {
            a: 2.0,
            b: 2.0,
            sigma: 0.7,
        }
    }

    /// Configuration-space dimension of the state.
    pub fn ndim(&self) -> Result<usize> {
        match self {
            StateSpec::Gaussian { center, .. } => Ok(center.len()),
            StateSpec::Superposition { terms } => {
                terms.first().map(|t| t.center.len()).ok_or_else(|| {
                    Error::InvalidArgument("superposition needs at least one term".into())
                })
            }
            _ => Ok(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "state {name} must be positive, got {v}"
                )))
            }
        };
        match self {
            StateSpec::Gaussian {
                center,
                sigma,
                momentum,
            } => {
                positive("sigma", *sigma)?;
                if center.is_empty() {
                    return Err(Error::InvalidArgument("gaussian center is empty".into()));
                }
                if let Some(p) = momentum {
                    if p.len() != center.len() {
                        return Err(Error::dims("gaussian momentum", center.len(), p.len()));
                    }
                }
                Ok(())
            }
            StateSpec::Superposition { terms } => {
                let d = self.ndim()?;
                for t in terms {
                    if t.center.len() != d {
                        return Err(Error::dims("superposition term", d, t.center.len()));
                    }
                    t.validate()?;
                }
                Ok(())
            }
            StateSpec::Entangled { a, b, sigma } | StateSpec::Product { a, b, sigma } => {
                positive("sigma", *sigma)?;
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::NonFinite("state offsets"));
                }
                Ok(())
            }
            StateSpec::Fork {
                separation,
                system_sigma,
                pointer_sigma,
                weight_left,
            } => {
                positive("separation", *separation)?;
                positive("system_sigma", *system_sigma)?;
                positive("pointer_sigma", *pointer_sigma)?;
                if !(0.0..=1.0).contains(weight_left) {
                    return Err(Error::InvalidArgument(format!(
                        "fork weight_left must lie in [0, 1], got {weight_left}"
                    )));
                }
                Ok(())
            }
            StateSpec::Vortex { omega } => positive("omega", *omega),
        }
    }

    /// Normalized wavefunction on `grid` at time 0.
    pub fn build(&self, grid: &Grid) -> Result<WaveFunction> {
        self.validate()?;
        let d = self.ndim()?;
        if grid.ndim() != d {
            return Err(Error::dims("grid axes for state", d, grid.ndim()));
        }
        let psi = match self.clone() {
            StateSpec::Gaussian {
                center,
                sigma,
                momentum,
            } => {
                let p = Packet {
                    amplitude: 1.0,
                    sigma: vec![sigma; center.len()],
                    center,
                    momentum,
                };
                WaveFunction::from_fn(grid.clone(), 0.0, move |c| p.eval(c))?
            }
            StateSpec::Superposition { terms } => {
                WaveFunction::from_fn(grid.clone(), 0.0, move |c| {
                    terms.iter().map(|t| t.eval(c)).sum()
                })?
            }
            StateSpec::Entangled { a, b, sigma } => {
                WaveFunction::from_fn(grid.clone(), 0.0, move |c| {
                    let v = gauss(c[0] - a, sigma) * gauss(c[1] - b, sigma)
                        + gauss(c[0] + a, sigma) * gauss(c[1] + b, sigma);
                    Complex64::new(v, 0.0)
                })?
            }
            StateSpec::Product { a, b, sigma } => {
                WaveFunction::from_fn(grid.clone(), 0.0, move |c| {
                    let v = (gauss(c[0] - a, sigma) + gauss(c[0] + a, sigma))
                        * (gauss(c[1] - b, sigma) + gauss(c[1] + b, sigma));
                    Complex64::new(v, 0.0)
                })?
            }
            StateSpec::Fork {
                separation,
                system_sigma,
                pointer_sigma,
                weight_left,
            } => {
                let (wl, wr) = (weight_left.sqrt(), (1.0 - weight_left).sqrt());
                WaveFunction::from_fn(grid.clone(), 0.0, move |c| {
                    let s = wl * gauss(c[0] + separation, system_sigma)
                        + wr * gauss(c[0] - separation, system_sigma);
                    Complex64::new(s * gauss(c[1], pointer_sigma), 0.0)
                })?
            }
            StateSpec::Vortex { omega } => WaveFunction::from_fn(grid.clone(), 0.0, move |c| {
                let r2 = c[0] * c[0] + c[1] * c[1];
                Complex64::new(c[0], c[1]) * (-0.5 * omega * r2).exp() * FRAC_1_SQRT_2
            })?,
        };
        psi.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_states_are_normalized_and_symmetric() {
        let g = GridSpec::new(64, -8.0, 8.0).build(2).unwrap();
        for s in [StateSpec::entangled(), StateSpec::product()] {
            let psi = s.build(&g).unwrap();
            assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
            let (m0, _) = psi.moments(0);
            assert!(m0.abs() < 1e-9);
        }
    }

    #[test]
    fn fork_weights_set_the_born_mass() {
        let g = GridSpec::new(128, -12.0, 12.0).build(2).unwrap();
        let s = StateSpec::Fork {
            separation: 4.0,
            system_sigma: 1.0,
            pointer_sigma: 1.0,
            weight_left: 0.36,
        };
        let psi = s.build(&g).unwrap();
        // The packets overlap at the exp(-8) level, so the weight is not exact.
        assert!((psi.mass_where(|c| c[0] < 0.0) - 0.36).abs() < 1e-3);
    }

    #[test]
    fn dimension_checks() {
        let g = GridSpec::new(16, -4.0, 4.0).build(1).unwrap();
        assert!(StateSpec::entangled().build(&g).is_err());
        let per = GridSpec {
            points: 16,
            extents: Extents::PerAxis(vec![[-1.0, 1.0]]),
        };
        assert!(per.build(2).is_err());
        let bad = StateSpec::Fork {
            separation: 4.0,
            system_sigma: 1.0,
            pointer_sigma: 1.0,
            weight_left: 1.5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s: StateSpec = serde_json::from_str(r#"{"kind": "entangled"}"#).unwrap();
        assert_eq!(s, StateSpec::entangled());
        assert!(serde_json::from_str::<StateSpec>(r#"{"kind": "entangled", "bogus": 1}"#).is_err());
    }
}
