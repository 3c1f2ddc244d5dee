use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::spectral::Spectral;
use super::wavefunction::{guard_mass, WaveFunction};
use crate::error::{Error, Result};

/// External potential `V(c, t)` on configuration space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Free,
    /// `sum_k omega^2 c_k^2 / 2` over all axes.
    Harmonic {
        omega: f64,
    },
    /// Measurement coupling `lambda * tanh(c_s / width) * c_p` between a system
    /// axis `c_s` and a pointer axis `c_p`.
    ForkCoupling {
        lambda: f64,
        width: f64,
        system_axis: usize,
        pointer_axis: usize,
    },
    /// Experimental: the fork coupling until `switch_time`, then a second
    /// coupling of the first pointer to another pointer axis.
    TwoStageFork {
        lambda: f64,
        second_lambda: f64,
        width: f64,
        switch_time: f64,
        system_axis: usize,
        pointer_axis: usize,
        second_pointer_axis: usize,
    },
}

impl Potential {
    pub fn is_free(&self) -> bool {
        matches!(self, Potential::Free)
    }

    pub fn validate(&self, ndim: usize) -> Result<()> {
        let axis_ok = |a: usize| {
            if a < ndim {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "potential axis {a} out of range for {ndim} axes"
                )))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "potential {name} must be positive, got {v}"
                )))
            }
        };
        match *self {
            Potential::Free => Ok(()),
            Potential::Harmonic { omega } => positive("omega", omega),
            Potential::ForkCoupling {
                lambda,
                width,
                system_axis,
                pointer_axis,
            } => {
                positive("width", width)?;
                if !lambda.is_finite() {
                    return Err(Error::NonFinite("potential lambda"));
                }
                axis_ok(system_axis)?;
                axis_ok(pointer_axis)?;
                if system_axis == pointer_axis {
                    return Err(Error::InvalidArgument(
                        "system and pointer axes must differ".into(),
                    ));
                }
                Ok(())
            }
            Potential::TwoStageFork {
                lambda,
                second_lambda,
                width,
                switch_time,
                system_axis,
                pointer_axis,
                second_pointer_axis,
            } => {
                positive("width", width)?;
                if !(lambda.is_finite() && second_lambda.is_finite() && switch_time.is_finite()) {
                    return Err(Error::NonFinite("potential parameters"));
                }
                for a in [system_axis, pointer_axis, second_pointer_axis] {
                    axis_ok(a)?;
                }
                if system_axis == pointer_axis
                    || pointer_axis == second_pointer_axis
                    || system_axis == second_pointer_axis
                {
                    return Err(Error::InvalidArgument("fork axes must be distinct".into()));
                }
                Ok(())
            }
        }
    }

    /// Which piecewise-constant stage is active at `t`. Only the two-stage
    /// fork has more than one.
    fn stage(&self, t: f64) -> usize {
        match *self {
            Potential::TwoStageFork { switch_time, .. } if t >= switch_time => 1,
            _ => 0,
        }
    }

    fn value(&self, stage: usize, c: &[f64]) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => {
                0.5 * omega * omega * c.iter().map(|x| x * x).sum::<f64>()
            }
            Potential::ForkCoupling {
                lambda,
                width,
                system_axis,
                pointer_axis,
            } => lambda * (c[system_axis] / width).tanh() * c[pointer_axis],
            Potential::TwoStageFork {
                lambda,
                second_lambda,
                width,
                system_axis,
                pointer_axis,
                second_pointer_axis,
                ..
            } => {
                if stage == 0 {
                    lambda * (c[system_axis] / width).tanh() * c[pointer_axis]
                } else {
                    second_lambda * (c[pointer_axis] / width).tanh() * c[second_pointer_axis]
                }
            }
        }
    }

    /// Potential at every node for the stage active at `t`.
    pub fn values(&self, grid: &Grid, t: f64) -> Vec<f64> {
        let stage = self.stage(t);
        let mut x = vec![0.0; grid.ndim()];
        (0..grid.len())
            .map(|n| {
                grid.node_coords(n, &mut x);
                self.value(stage, &x)
            })
            .collect()
    }
}

type PhaseKey = (u64, usize);

/// Strang split-step propagator `e^{-iV dt/2} e^{-i|k|^2 dt/2} e^{-iV dt/2}`
/// with hbar = m = 1 on a periodic grid. Phase tables are cached per `dt`.
#[derive(Debug)]
pub struct Propagator {
    spectral: Arc<Spectral>,
    potential: Potential,
    values: [OnceLock<Vec<f64>>; 2],
    kinetic: Mutex<HashMap<u64, Arc<Vec<Complex64>>>>,
    potential_phase: Mutex<HashMap<PhaseKey, Arc<Vec<Complex64>>>>,
}

impl Propagator {
    pub fn new(spectral: Arc<Spectral>, potential: Potential) -> Result<Self> {
        potential.validate(spectral.grid().ndim())?;
        Ok(Propagator {
            spectral,
            potential,
            values: [OnceLock::new(), OnceLock::new()],
            kinetic: Mutex::new(HashMap::new()),
            potential_phase: Mutex::new(HashMap::new()),
        })
    }

    pub fn spectral(&self) -> &Arc<Spectral> {
        &self.spectral
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    fn kinetic_phase(&self, dt: f64) -> Arc<Vec<Complex64>> {
        let mut cache = self.kinetic.lock().expect("phase cache poisoned");
        cache
            .entry(dt.to_bits())
            .or_insert_with(|| {
                Arc::new(
                    self.spectral
                        .k_squared()
                        .iter()
                        .map(|k2| Complex64::from_polar(1.0, -0.5 * k2 * dt))
                        .collect(),
                )
            })
            .clone()
    }

    fn potential_half_phase(&self, dt: f64, t: f64) -> Arc<Vec<Complex64>> {
        let stage = self.potential.stage(t);
        let mut cache = self.potential_phase.lock().expect("phase cache poisoned");
        cache
            .entry((dt.to_bits(), stage))
            .or_insert_with(|| {
                let v = self.values[stage]
                    .get_or_init(|| self.potential.values(self.spectral.grid(), t));
                Arc::new(
                    v.iter()
                        .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt))
                        .collect(),
                )
            })
            .clone()
    }

    /// One Strang step of size `dt` (negative steps run backward) starting at
    /// time `t`.
    pub fn step(&self, psi: &mut [Complex64], t: f64, dt: f64) {
        let free = self.potential.is_free();
        if !free {
            // The stage is taken at the step midpoint so a switch is never
            // straddled asymmetrically.
            let ph = self.potential_half_phase(dt, t + 0.5 * dt);
            mul_assign(psi, &ph);
        }
        self.spectral.forward(psi);
        mul_assign(psi, &self.kinetic_phase(dt));
        self.spectral.inverse(psi);
        if !free {
            let ph = self.potential_half_phase(dt, t + 0.5 * dt);
            mul_assign(psi, &ph);
        }
    }

    /// Advances `psi` from `t` by `span` using `substeps` equal steps.
    pub fn advance(&self, psi: &mut [Complex64], t: f64, span: f64, substeps: usize) {
        let n = substeps.max(1);
        let h = span / n as f64;
        for i in 0..n {
            self.step(psi, t + i as f64 * h, h);
        }
    }
}

fn mul_assign(a: &mut [Complex64], b: &[Complex64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// Runs `steps` split-step updates of size `dt`. Fails if probability mass
/// inside the guard band exceeds `guard_mass` after any step.
pub fn evolve(
    psi: &WaveFunction,
    dt: f64,
    steps: usize,
    potential: &Potential,
    guard_cells: usize,
    guard_mass_limit: f64,
) -> Result<WaveFunction> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be finite and nonzero, got {dt}"
        )));
    }
    let spectral = Arc::new(Spectral::new(psi.grid()));
    let prop = Propagator::new(spectral, potential.clone())?;
    let mut amps = psi.amplitudes().to_vec();
    let mut t = psi.time();
    for _ in 0..steps {
        prop.step(&mut amps, t, dt);
        t += dt;
        let m = guard_mass(psi.grid(), &amps, guard_cells);
        if m > guard_mass_limit {
            return Err(Error::BoundaryContamination { time: t, mass: m });
        }
    }
    WaveFunction::new(psi.grid().clone(), amps, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_validation() {
        assert!(Potential::Harmonic { omega: -1.0 }.validate(1).is_err());
        let fork = Potential::ForkCoupling {
            lambda: 1.0,
            width: 0.5,
            system_axis: 0,
            pointer_axis: 2,
        };
        assert!(fork.validate(2).is_err());
        assert!(fork.validate(3).is_ok());
    }

    #[test]
    fn potential_json_is_tagged() {
        let p: Potential = serde_json::from_str(r#"{"kind":"harmonic","omega":2.0}"#).unwrap();
        assert_eq!(p, Potential::Harmonic { omega: 2.0 });
        assert!(
            serde_json::from_str::<Potential>(r#"{"kind":"harmonic","omega":2.0,"x":1}"#).is_err()
        );
    }

    #[test]
    fn two_stage_switches() {
        let p = Potential::TwoStageFork {
            lambda: 1.0,
            second_lambda: 2.0,
            width: 1.0,
            switch_time: 1.0,
            system_axis: 0,
            pointer_axis: 1,
            second_pointer_axis: 2,
        };
        let c = [10.0, 10.0, 3.0];
        assert!((p.value(p.stage(0.5), &c) - 10.0f64.tanh() * 10.0).abs() < 1e-12);
        assert!((p.value(p.stage(1.5), &c) - 2.0 * 10.0f64.tanh() * 3.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_ground_state_is_stationary() {
        let g = Grid::uniform(1, 128, -10.0, 10.0).unwrap();
        let psi =
            WaveFunction::from_fn(g, 0.0, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0))
                .unwrap()
                .normalized()
                .unwrap();
        let out = evolve(
            &psi,
            1e-3,
            500,
            &Potential::Harmonic { omega: 1.0 },
            2,
            1e-6,
        )
        .unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-6);
        }
    }
}
