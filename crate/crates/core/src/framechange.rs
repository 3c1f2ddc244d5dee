//! Changing observers: boosting spacetimehap events and carrying hap
//! coordinates onto another observer's simultaneity hyperplane along the
//! foliation leaves.

use std::sync::Arc;

use serde::Serialize;

use crate::bohmengine::{Foliation, Path};
use crate::error::{Error, Result};
use crate::hapgeometry::HapEvent;
use crate::relativity::Boost;

/// Root residual accepted on the boosted-time equation.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// An inertial observer: its velocity relative to the reference frame and the
/// foliation it uses.
#[derive(Clone)]
pub struct ObserverFrame {
    boost: Boost,
    flow: Arc<dyn Foliation>,
}

impl std::fmt::Debug for ObserverFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObserverFrame")
            .field("boost", &self.boost)
            .field("hap_dim", &self.flow.hap_dim())
            .finish_non_exhaustive()
    }
}

impl ObserverFrame {
    pub fn new(boost: Boost, flow: Arc<dyn Foliation>) -> Self {
        ObserverFrame { boost, flow }
    }

    pub fn boost(&self) -> &Boost {
        &self.boost
    }

    pub fn flow(&self) -> &Arc<dyn Foliation> {
        &self.flow
    }

    fn check(&self, e: &HapEvent) -> Result<()> {
        e.validate()?;
        if self.boost.dim() != e.space_dim() {
            return Err(Error::dims(
                "frame velocity",
                e.space_dim(),
                self.boost.dim(),
            ));
        }
        let hap = e.particles() * e.space_dim();
        if self.flow.hap_dim() != hap {
            return Err(Error::dims(
                "foliation hap dimension",
                hap,
                self.flow.hap_dim(),
            ));
        }
        Ok(())
    }
}

/// Target hyperplane `u = u_target` and the reference-time window searched
/// for crossings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperplaneQuery {
    pub u_target: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl HyperplaneQuery {
    pub fn new(u_target: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(u_target.is_finite() && t_lo.is_finite() && t_hi.is_finite()) {
            return Err(Error::NonFinite("hyperplane query"));
        }
        if t_lo >= t_hi {
            return Err(Error::InvalidArgument(format!(
                "empty root window [{t_lo}, {t_hi}]"
            )));
        }
        Ok(HyperplaneQuery {
            u_target,
            t_lo,
            t_hi,
        })
    }
}

/// Per-particle boost of an event's spacetime location and particle
/// positions, before any guiding. Particle times generally differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoostedEvent {
    pub u_e: f64,
    pub y_e: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub d_prime: Vec<Vec<f64>>,
}

pub fn boost_event(frame: &ObserverFrame, e: &HapEvent) -> Result<BoostedEvent> {
    e.validate()?;
    if frame.boost.dim() != e.space_dim() {
        return Err(Error::dims(
            "frame velocity",
            e.space_dim(),
            frame.boost.dim(),
        ));
    }
    let (u_e, y_e) = frame.boost.apply_parts(e.t, &e.x);
    let (u_prime, d_prime) = e.c.iter().map(|c| frame.boost.apply_parts(e.t, c)).unzip();
    Ok(BoostedEvent {
        u_e,
        y_e,
        u_prime,
        d_prime,
    })
}

/// Where a leaf meets a hyperplane of the boosted frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperplaneCrossing {
    pub u_target: f64,
    /// Reference-frame time at which each particle crosses.
    pub t_star: Vec<f64>,
    /// Boosted-frame positions at the crossing.
    pub d: Vec<Vec<f64>>,
    /// `|u(t_star) - u_target|` per particle.
    pub residuals: Vec<f64>,
}

/// Reference-time window that contains every crossing of a leaf through
/// `e`, provided the leaf stays subluminal. Used as the cap of the adaptive
/// window in [`leaves_spanning`]:
/// `|t - t_E| <= |v| |x_E - c_p| / (1 - |v|)`.
pub fn default_window(boost: &Boost, e: &HapEvent, step: f64) -> (f64, f64) {
    let v = boost.speed();
    let reach =
        e.c.iter()
            .map(|c| {
                c.iter()
                    .zip(&e.x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
    let w = 1.1 * v * reach / (1.0 - v) + 4.0 * step;
    (e.t - w, e.t + w)
}

fn particle_slice(p: &[f64], particle: usize, d: usize) -> &[f64] {
    &p[particle * d..(particle + 1) * d]
}

/// Solves `boost.time_of(t, c_p(t)) = u_target` for every particle along an
/// ascending `leaf`, then boosts the crossing points.
///
/// More than one crossing (possible only where `v·a >= 1` along the leaf) is
/// an error rather than a choice.
pub fn crossing_on_leaf(
    boost: &Boost,
    leaf: &Path,
    space_dim: usize,
    u_target: f64,
) -> Result<HyperplaneCrossing> {
    if leaf.is_empty() || leaf.dim() % space_dim != 0 {
        return Err(Error::dims("leaf dimension", space_dim, leaf.dim()));
    }
    let n = leaf.dim() / space_dim;
    let mut out = HyperplaneCrossing {
        u_target,
        t_star: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
    };
    for p in 0..n {
        let (t, cp) = particle_root(boost, leaf, p, space_dim, u_target)?;
        let (u, d) = boost.apply_parts(t, &cp);
        out.t_star.push(t);
        out.d.push(d);
        out.residuals.push((u - u_target).abs());
    }
    Ok(out)
}

fn particle_root(
    boost: &Boost,
    leaf: &Path,
    p: usize,
    dim: usize,
    u_target: f64,
) -> Result<(f64, Vec<f64>)> {
    let f_at =
        |i: usize| boost.time_of(leaf.times[i], particle_slice(&leaf.points[i], p, dim)) - u_target;
    let f: Vec<f64> = (0..leaf.len()).map(f_at).collect();
    let mut exact = Vec::new();
    let mut brackets = Vec::new();
    for i in 0..f.len() {
        if f[i] == 0.0 {
            exact.push(i);
        }
        if i + 1 < f.len() && f[i] * f[i + 1] < 0.0 {
            brackets.push(i);
        }
    }
    let (lo, hi) = leaf.range();
    let roots = exact.len() + brackets.len();
    if roots == 0 {
        return Err(Error::NoRoot {
            particle: p,
            lo,
            hi,
        });
    }
    if roots > 1 {
        let v = boost.velocity();
        let fast: Vec<f64> = (0..leaf.len())
            .filter(|&i| {
                let a = particle_slice(&leaf.velocities[i], p, dim);
                v.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() >= 1.0
            })
            .map(|i| leaf.times[i])
            .collect();
        let (seg_lo, seg_hi) = if fast.is_empty() {
            let first = exact.iter().chain(&brackets).copied().min().unwrap_or(0);
            let last = exact.iter().chain(&brackets).copied().max().unwrap_or(0);
            (
                leaf.times[first],
                leaf.times[(last + 1).min(leaf.len() - 1)],
            )
        } else {
            (fast[0], fast[fast.len() - 1])
        };
        return Err(Error::AmbiguousRoot {
            particle: p,
            roots,
            seg_lo,
            seg_hi,
        });
    }
    if let Some(&i) = exact.first() {
        return Ok((
            leaf.times[i],
            particle_slice(&leaf.points[i], p, dim).to_vec(),
        ));
    }
    let i = brackets[0];
    let eval = |t: f64| -> Result<(f64, Vec<f64>)> {
        let c = leaf.at(t)?;
        let cp = particle_slice(&c, p, dim).to_vec();
        Ok((boost.time_of(t, &cp) - u_target, cp))
    };
    let (mut a, mut b) = (leaf.times[i], leaf.times[i + 1]);
    let mut fa = f[i];
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (fm, _) = eval(m)?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut t = 0.5 * (a + b);
    let (mut ft, mut cp) = eval(t)?;
    // Newton polish on the interpolant.
    for _ in 0..4 {
        if ft == 0.0 {
            break;
        }
        let vel = leaf.velocity_at(t)?;
        let a_p = particle_slice(&vel, p, dim);
        let va: f64 = boost.velocity().iter().zip(a_p).map(|(x, y)| x * y).sum();
        let slope = boost.gamma() * (1.0 - va);
        if slope <= 0.0 {
            break;
        }
        let tn = t - ft / slope;
        if !(tn >= leaf.times[i] && tn <= leaf.times[i + 1]) {
            break;
        }
        let (fn_, cn) = eval(tn)?;
        if fn_.abs() >= ft.abs() {
            break;
        }
        t = tn;
        ft = fn_;
        cp = cn;
    }
    if ft.abs() > ROOT_TOLERANCE {
        return Err(Error::NoConvergence(format!(
            "crossing for particle {p} has residual {:e}",
            ft.abs()
        )));
    }
    Ok((t, cp))
}

fn leaf_through(frame: &ObserverFrame, e: &HapEvent, window: (f64, f64)) -> Result<Path> {
    let lo = window.0.min(e.t);
    let hi = window.1.max(e.t);
    Ok(frame
        .flow
        .leaves(e.t, &[e.hap_flat()], lo, hi)?
        .pop()
        .expect("one anchor in, one leaf out"))
}

/// Leaves through `anchors` long enough to cross every hyperplane
/// `boost.time_of(t, x) = u` in `targets`.
///
/// Starts from the crossings of static worldlines, padded, and doubles a side
/// while some leaf has not reached the hyperplane there, never growing past
/// `cap`. Boosted time increases along subluminal leaves, so a crossing
/// exists once every leaf starts below and ends above the target.
pub fn leaves_spanning(
    flow: &dyn Foliation,
    t_anchor: f64,
    anchors: &[Vec<f64>],
    space_dim: usize,
    targets: &[(Boost, f64)],
    cap: (f64, f64),
) -> Result<Vec<Path>> {
    let (mut lo, mut hi) = (t_anchor, t_anchor);
    for (boost, u) in targets {
        for a in anchors {
            for c in a.chunks(space_dim) {
                let vc: f64 = boost.velocity().iter().zip(c).map(|(x, y)| x * y).sum();
                let t = u / boost.gamma() + vc;
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
    }
    let pad = 0.25 * (hi - lo) + 4.0 * flow.step_hint();
    let (cap_lo, cap_hi) = (cap.0.min(t_anchor), cap.1.max(t_anchor));
    lo = (lo - pad).max(cap_lo);
    hi = (hi + pad).min(cap_hi);
    loop {
        let leaves = flow.leaves(t_anchor, anchors, lo, hi)?;
        let (mut short_lo, mut short_hi) = (false, false);
        for leaf in &leaves {
            let (first, last) = (0, leaf.len() - 1);
            for p in 0..leaf.dim() / space_dim {
                for (boost, u) in targets {
                    let f = |i: usize| {
                        boost.time_of(leaf.times[i], particle_slice(&leaf.points[i], p, space_dim))
                            - u
                    };
                    short_lo |= f(first) > 0.0;
                    short_hi |= f(last) < 0.0;
                }
            }
        }
        let new_lo = if short_lo {
            (t_anchor - 2.0 * (t_anchor - lo)).max(cap_lo)
        } else {
            lo
        };
        let new_hi = if short_hi {
            (t_anchor + 2.0 * (hi - t_anchor)).min(cap_hi)
        } else {
            hi
        };
        if new_lo == lo && new_hi == hi {
            return Ok(leaves);
        }
        lo = new_lo;
        hi = new_hi;
    }
}

fn spanning_leaf(frame: &ObserverFrame, e: &HapEvent, u_target: f64) -> Result<Path> {
    let cap = default_window(&frame.boost, e, frame.flow.step_hint());
    Ok(leaves_spanning(
        frame.flow.as_ref(),
        e.t,
        &[e.hap_flat()],
        e.space_dim(),
        &[(frame.boost.clone(), u_target)],
        cap,
    )?
    .pop()
    .expect("one anchor in, one leaf out"))
}

/// Carries the hap coordinate of `e` to the boosted frame's hyperplane
/// through the event, `u = u_E`, by intersecting the leaf through
/// `(t_E, c_E)` with it (guide first, then boost).
pub fn guide_to_hyperplane(frame: &ObserverFrame, e: &HapEvent) -> Result<HyperplaneCrossing> {
    frame.check(e)?;
    let u_e = frame.boost.time_of(e.t, &e.x);
    let leaf = spanning_leaf(frame, e, u_e)?;
    crossing_on_leaf(&frame.boost, &leaf, e.space_dim(), u_e)
}

/// As [`guide_to_hyperplane`] with an explicit target and window.
pub fn guide_with_query(
    frame: &ObserverFrame,
    e: &HapEvent,
    q: &HyperplaneQuery,
) -> Result<HyperplaneCrossing> {
    frame.check(e)?;
    let leaf = leaf_through(frame, e, (q.t_lo, q.t_hi))?;
    crossing_on_leaf(&frame.boost, &leaf, e.space_dim(), q.u_target)
}

/// The other reasoning path: boost each particle position first, giving
/// `(u'_p, d'_p)`, then follow the leaf as seen by the boosted observer from
/// `u'_p` to `u_E`. The boosted-frame velocity field is Alice's leaf velocity
/// carried over by the velocity transformation.
pub fn guide_via_boosted_flow(frame: &ObserverFrame, e: &HapEvent) -> Result<HyperplaneCrossing> {
    frame.check(e)?;
    let boosted = boost_event(frame, e)?;
    let leaf = spanning_leaf(frame, e, boosted.u_e)?;
    let dim = e.space_dim();
    let inv = frame.boost.inverse();
    let h = frame.flow.step_hint();
    let field = |p: usize, u: f64, y: &[f64]| -> Result<Vec<f64>> {
        let t = inv.time_of(u, y);
        let vel = leaf.velocity_at(t)?;
        frame
            .boost
            .transform_velocity(particle_slice(&vel, p, dim))
            .ok_or_else(|| {
                Error::NoConvergence(format!("leaf of particle {p} is superluminal near t = {t}"))
            })
    };
    let u_e = boosted.u_e;
    let mut out = HyperplaneCrossing {
        u_target: u_e,
        t_star: Vec::new(),
        d: Vec::new(),
        residuals: Vec::new(),
    };
    for p in 0..e.particles() {
        let u0 = boosted.u_prime[p];
        let mut y = boosted.d_prime[p].clone();
        let span = u_e - u0;
        let steps = (span.abs() / h).ceil().max(1.0) as usize;
        let du = span / steps as f64;
        let mut u = u0;
        for _ in 0..steps {
            let shift = |k: &[f64], s: f64| -> Vec<f64> {
                y.iter().zip(k).map(|(a, b)| a + s * b).collect()
            };
            let k1 = field(p, u, &y)?;
            let k2 = field(p, u + 0.5 * du, &shift(&k1, 0.5 * du))?;
            let k3 = field(p, u + 0.5 * du, &shift(&k2, 0.5 * du))?;
            let k4 = field(p, u + du, &shift(&k3, du))?;
            for j in 0..dim {
                y[j] += du / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            u += du;
        }
        let t = inv.time_of(u_e, &y);
        let c = leaf.at(t)?;
        out.residuals
            .push((frame.boost.time_of(t, particle_slice(&c, p, dim)) - u_e).abs());
        out.t_star.push(t);
        out.d.push(y);
    }
    Ok(out)
}

/// An event as seen from the boosted frame, in the export layout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameChange {
    pub frame_v: Vec<f64>,
    #[serde(rename = "u_E")]
    pub u_e: f64,
    #[serde(rename = "y_E")]
    pub y_e: Vec<f64>,
    #[serde(rename = "d_E")]
    pub d_e: Vec<Vec<f64>>,
    pub t_star: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl FrameChange {
    /// The boosted-frame event `(u_E, y_E, d_E)`.
    pub fn to_event(&self) -> Result<HapEvent> {
        HapEvent::new(self.u_e, self.y_e.clone(), self.d_e.clone())
    }
}

/// Coordinates `(u_E, y_E, d_E)` of `e` for the observer `frame`.
pub fn change_coordinates(frame: &ObserverFrame, e: &HapEvent) -> Result<FrameChange> {
    frame.check(e)?;
    let (u_e, y_e) = frame.boost.apply_parts(e.t, &e.x);
    let crossing = guide_to_hyperplane(frame, e)?;
    Ok(FrameChange {
        frame_v: frame.boost.velocity().to_vec(),
        u_e,
        y_e,
        d_e: crossing.d,
        t_star: crossing.t_star,
        residuals: crossing.residuals,
    })
}

/// Inverse of [`change_coordinates`]: given `(u_E, y_E, d_E)` seen by
/// `frame`, recovers the reference-frame event. The hap coordinate is found
/// by Newton shooting on `c_E`, with a finite-difference Jacobian.
pub fn change_coordinates_inverse(frame: &ObserverFrame, seen: &HapEvent) -> Result<HapEvent> {
    seen.validate()?;
    let dim = seen.space_dim();
    let n = seen.particles();
    let inv = frame.boost.inverse();
    let (t_e, x_e) = inv.apply_parts(seen.t, &seen.x);
    let target = seen.hap_flat();
    let mut c: Vec<f64> = seen
        .c
        .iter()
        .flat_map(|d| inv.apply_parts(seen.t, d).1)
        .collect();
    let probe = HapEvent::from_flat(t_e, x_e.clone(), &c)?;
    frame.check(&probe)?;
    let m = n * dim;
    let eps = 1e-6;
    for _ in 0..30 {
        let mut anchors = vec![c.clone()];
        for j in 0..m {
            let mut a = c.clone();
            a[j] += eps;
            anchors.push(a);
        }
        let guess = HapEvent::from_flat(t_e, x_e.clone(), &c)?;
        let u_e = seen.t;
        let (lo, hi) = default_window(&frame.boost, &guess, frame.flow.step_hint());
        let margin = 8.0 * frame.flow.step_hint();
        let leaves = leaves_spanning(
            frame.flow.as_ref(),
            t_e,
            &anchors,
            dim,
            &[(frame.boost.clone(), u_e)],
            (lo - margin, hi + margin),
        )?;
        let flat = |leaf: &Path| -> Result<Vec<f64>> {
            Ok(crossing_on_leaf(&frame.boost, leaf, dim, u_e)?.d.concat())
        };
        let base = flat(&leaves[0])?;
        let r: Vec<f64> = base.iter().zip(&target).map(|(a, b)| a - b).collect();
        if r.iter().all(|x| x.abs() <= ROOT_TOLERANCE) {
            return HapEvent::from_flat(t_e, x_e, &c);
        }
        let mut jac = vec![vec![0.0; m]; m];
        for j in 0..m {
            let col = flat(&leaves[j + 1])?;
            for i in 0..m {
                jac[i][j] = (col[i] - base[i]) / eps;
            }
        }
        let step = solve(jac, r.iter().map(|x| -x).collect())?;
        for (ci, si) in c.iter_mut().zip(&step) {
            *ci += si;
        }
        if step.iter().all(|s| s.abs() <= 1e-13) {
            return HapEvent::from_flat(t_e, x_e, &c);
        }
    }
    Err(Error::NoConvergence(
        "inverse coordinate change did not converge".into(),
    ))
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .expect("non-empty range");
        if a[piv][k].abs() < 1e-300 {
            return Err(Error::NoConvergence("singular shooting Jacobian".into()));
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Hap coordinates of the same event under two observers that share a
/// velocity but use different foliations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationComparison {
    pub d_a: Vec<Vec<f64>>,
    pub d_b: Vec<Vec<f64>>,
    pub max_difference: f64,
}

pub fn compare_foliations(
    a: &ObserverFrame,
    b: &ObserverFrame,
    e: &HapEvent,
) -> Result<FoliationComparison> {
    if a.boost != b.boost {
        return Err(Error::InvalidArgument(
            "compared frames must share the same velocity".into(),
        ));
    }
    let da = guide_to_hyperplane(a, e)?.d;
    let db = guide_to_hyperplane(b, e)?.d;
    let max_difference = da
        .iter()
        .flatten()
        .zip(db.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(FoliationComparison {
        d_a: da,
        d_b: db,
        max_difference,
    })
}
