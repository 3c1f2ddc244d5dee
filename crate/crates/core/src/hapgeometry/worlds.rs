//! Possible worlds as foliation leaves, and closest-world queries.

use serde::{Deserialize, Serialize};

use super::event::HapEvent;
use crate::bohmengine::{Foliation, Path};
use crate::error::{Error, Result};

/// Max-norm tolerance for identifying worlds and actual events.
pub const WORLD_TOLERANCE: f64 = 1e-8;

/// A world, named by the hap coordinate its trajectory passes through at
/// `anchor_time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldId {
    pub anchor_time: f64,
    pub anchor_hap: Vec<f64>,
}

impl WorldId {
    pub fn new(anchor_time: f64, anchor_hap: Vec<f64>) -> Result<Self> {
        if !anchor_time.is_finite() || anchor_hap.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("world anchor"));
        }
        if anchor_hap.is_empty() {
            return Err(Error::InvalidArgument(
                "world anchor needs at least one coordinate".into(),
            ));
        }
        Ok(WorldId {
            anchor_time,
            anchor_hap,
        })
    }
}

/// The hap coordinate of one world as a function of time, over the range the
/// leaf was integrated.
#[derive(Clone, Debug)]
pub struct WorldLine {
    world: WorldId,
    path: Path,
}

impl WorldLine {
    pub fn world(&self) -> &WorldId {
        &self.world
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn range(&self) -> (f64, f64) {
        self.path.range()
    }

    /// Hap coordinate of the world at `t`; the anchor itself is returned
    /// exactly at `anchor_time`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        if t == self.world.anchor_time {
            return Ok(self.world.anchor_hap.clone());
        }
        self.path.at(t)
    }
}

/// Section of haptime by the world `world` over `[lo, hi]` (widened to
/// include the anchor time).
pub fn world_section(world: &WorldId, flow: &dyn Foliation, lo: f64, hi: f64) -> Result<WorldLine> {
    if world.anchor_hap.len() != flow.hap_dim() {
        return Err(Error::dims(
            "world anchor",
            flow.hap_dim(),
            world.anchor_hap.len(),
        ));
    }
    let lo = lo.min(world.anchor_time);
    let hi = hi.max(world.anchor_time);
    let path = flow
        .leaves(
            world.anchor_time,
            std::slice::from_ref(&world.anchor_hap),
            lo,
            hi,
        )?
        .pop()
        .expect("one anchor in, one leaf out");
    Ok(WorldLine {
        world: world.clone(),
        path,
    })
}

/// Whether two world identifiers name the same leaf, by guiding `a` to the
/// anchor time of `b`.
pub fn same_world(a: &WorldId, b: &WorldId, flow: &dyn Foliation) -> Result<bool> {
    let line = world_section(a, flow, b.anchor_time, b.anchor_time)?;
    let c = line.at(b.anchor_time)?;
    Ok(max_diff(&c, &b.anchor_hap) <= WORLD_TOLERANCE)
}

/// Guides `w` along its leaf to time `t`.
pub fn synchronize(w: &WorldId, flow: &dyn Foliation, t: f64) -> Result<WorldId> {
    let line = world_section(w, flow, t, t)?;
    WorldId::new(t, line.at(t)?)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuality {
    /// On the observer's own leaf: has actually happened.
    Actual,
    /// On another leaf: could have happened.
    Counterfactual,
}

/// Tags `e` relative to the observer's world line.
pub fn tag_event(observer: &WorldLine, e: &HapEvent) -> Result<Actuality> {
    e.validate()?;
    let hap = e.hap_flat();
    if hap.len() != observer.world.anchor_hap.len() {
        return Err(Error::dims(
            "event hap coordinate",
            observer.world.anchor_hap.len(),
            hap.len(),
        ));
    }
    let c = observer.at(e.t)?;
    Ok(if max_diff(&c, &hap) <= WORLD_TOLERANCE {
        Actuality::Actual
    } else {
        Actuality::Counterfactual
    })
}

/// Distance between synchronized hap coordinates.
pub trait WorldDistance {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

/// Euclidean distance on hap coordinates, the default metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct Euclidean;

impl WorldDistance for Euclidean {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NearestWorlds {
    pub worlds: Vec<WorldId>,
    /// Common distance of the returned worlds; `None` when no candidate
    /// satisfies the predicate.
    pub distance: Option<f64>,
}

/// Closest worlds to `omega` among `omega` itself and `worlds` in which
/// `pred` takes the value `target`. Every candidate must be anchored at the
/// same time as `omega`.
pub fn nearest_counterfactual_worlds<T: PartialEq>(
    omega: &WorldId,
    pred: impl Fn(&[f64]) -> T,
    target: &T,
    worlds: &[WorldId],
    metric: &dyn WorldDistance,
) -> Result<NearestWorlds> {
    if worlds.is_empty() {
        return Err(Error::InvalidArgument("no candidate worlds".into()));
    }
    let mut best: Option<f64> = None;
    let mut out: Vec<WorldId> = Vec::new();
    for w in std::iter::once(omega).chain(worlds) {
        if w.anchor_time != omega.anchor_time {
            return Err(Error::Unsynchronized {
                a: omega.anchor_time,
                b: w.anchor_time,
            });
        }
        if w.anchor_hap.len() != omega.anchor_hap.len() {
            return Err(Error::dims(
                "candidate world",
                omega.anchor_hap.len(),
                w.anchor_hap.len(),
            ));
        }
        if pred(&w.anchor_hap) != *target {
            continue;
        }
        let d = metric.distance(&omega.anchor_hap, &w.anchor_hap);
        match best {
            Some(b) if d > b => {}
            Some(b) if d == b => {
                if !out.contains(w) {
                    out.push(w.clone());
                }
            }
            _ => {
                best = Some(d);
                out.clear();
                out.push(w.clone());
            }
        }
    }
    Ok(NearestWorlds {
        worlds: out,
        distance: best,
    })
}
