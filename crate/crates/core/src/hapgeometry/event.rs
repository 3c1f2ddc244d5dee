use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relativity::{causal_sign, classify_displacement, Boost, SeparationClass};

/// A point `(t, x, c)` of spacetimehap: time, spatial position, and the hap
/// coordinate `c` holding the positions of all `N` particles at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HapEvent {
    pub t: f64,
    pub x: Vec<f64>,
    pub c: Vec<Vec<f64>>,
}

impl HapEvent {
    pub fn new(t: f64, x: Vec<f64>, c: Vec<Vec<f64>>) -> Result<Self> {
        let e = HapEvent { t, x, c };
        e.validate()?;
        Ok(e)
    }

    /// Builds an event from a flat hap vector of `N * D` coordinates,
    /// particle-major.
    pub fn from_flat(t: f64, x: Vec<f64>, hap: &[f64]) -> Result<Self> {
        let d = x.len();
        if d == 0 || hap.len() % d != 0 || hap.is_empty() {
            return Err(Error::dims("flat hap coordinate", d, hap.len()));
        }
        HapEvent::new(t, x, hap.chunks(d).map(<[f64]>::to_vec).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.x.len();
        if d == 0 {
            return Err(Error::InvalidArgument(
                "event needs at least one spatial axis".into(),
            ));
        }
        if self.c.is_empty() {
            return Err(Error::InvalidArgument(
                "event needs at least one particle".into(),
            ));
        }
        for p in &self.c {
            if p.len() != d {
                return Err(Error::dims("particle position", d, p.len()));
            }
        }
        let finite = self.t.is_finite()
            && self.x.iter().all(|v| v.is_finite())
            && self.c.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("event"));
        }
        Ok(())
    }

    pub fn space_dim(&self) -> usize {
        self.x.len()
    }

    pub fn particles(&self) -> usize {
        self.c.len()
    }

    pub fn hap_flat(&self) -> Vec<f64> {
        self.c.iter().flatten().copied().collect()
    }

    fn check_shape(&self, other: &HapEvent) -> Result<()> {
        if self.space_dim() != other.space_dim() {
            return Err(Error::dims(
                "event space dimension",
                self.space_dim(),
                other.space_dim(),
            ));
        }
        if self.particles() != other.particles() {
            return Err(Error::dims(
                "event particle count",
                self.particles(),
                other.particles(),
            ));
        }
        Ok(())
    }
}

/// An event whose per-particle positions may carry individual times, which is
/// what a boost produces from a single-time hap coordinate.
struct Worldpoints {
    t: f64,
    x: Vec<f64>,
    particles: Vec<(f64, Vec<f64>)>,
}

impl Worldpoints {
    fn from_event(e: &HapEvent) -> Self {
        Worldpoints {
            t: e.t,
            x: e.x.clone(),
            particles: e.c.iter().map(|c| (e.t, c.clone())).collect(),
        }
    }

    fn boosted(e: &HapEvent, b: &Boost) -> Self {
        let (t, x) = b.apply_parts(e.t, &e.x);
        Worldpoints {
            t,
            x,
            particles: e.c.iter().map(|c| b.apply_parts(e.t, c)).collect(),
        }
    }
}

fn classify_points(a: &Worldpoints, b: &Worldpoints) -> SeparationClass {
    let mut dx = vec![0.0; a.x.len()];
    for ((ta, ca), (tb, cb)) in a.particles.iter().zip(&b.particles) {
        for (d, (u, v)) in dx.iter_mut().zip(ca.iter().zip(cb)) {
            *d = v - u;
        }
        if causal_sign(tb - ta, &dx) < 0 {
            return SeparationClass::Haplike;
        }
    }
    for (d, (u, v)) in dx.iter_mut().zip(a.x.iter().zip(&b.x)) {
        *d = v - u;
    }
    classify_displacement(b.t - a.t, &dx)
}

/// Separation class of the pair. Haplike separation (some particle's
/// positions are spacelike separated) takes precedence; otherwise the
/// spacetime projections decide.
pub fn classify(e1: &HapEvent, e2: &HapEvent) -> Result<SeparationClass> {
    e1.check_shape(e2)?;
    Ok(classify_points(
        &Worldpoints::from_event(e1),
        &Worldpoints::from_event(e2),
    ))
}

/// Whether the class of the pair survives boosting the spacetime location and
/// every per-particle position of both events with `b`.
pub fn classify_is_lorentz_invariant_check(
    e1: &HapEvent,
    e2: &HapEvent,
    b: &Boost,
) -> Result<bool> {
    e1.check_shape(e2)?;
    if b.dim() != e1.space_dim() {
        return Err(Error::dims("boost", e1.space_dim(), b.dim()));
    }
    let before = classify_points(&Worldpoints::from_event(e1), &Worldpoints::from_event(e2));
    let after = classify_points(&Worldpoints::boosted(e1, b), &Worldpoints::boosted(e2, b));
    Ok(before == after)
}
