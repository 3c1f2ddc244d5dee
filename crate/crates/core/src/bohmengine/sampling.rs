//! Born-rule (quantum equilibrium) sampling on the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::Grid;
use super::wavefunction::WaveFunction;
use crate::error::{Error, Result};

/// Sampled hap coordinates at a common time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
    pub time: f64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Values of one coordinate across the ensemble.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[axis]).collect()
    }
}

/// Grid marginal of `|psi|^2` along one axis, read as a density that is
/// uniform over each cell centred on a node. This is the distribution
/// [`sample_equilibrium`] draws from.
#[derive(Clone, Debug)]
pub struct GridMarginal {
    lo: f64,
    hi: f64,
    dx: f64,
    cumulative: Vec<f64>,
}

impl GridMarginal {
    pub fn new(psi: &WaveFunction, axis: usize) -> Self {
        let g = psi.grid();
        let probs = psi.marginal(axis);
        let mut cumulative = Vec::with_capacity(probs.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for p in probs {
            acc += p;
            cumulative.push(acc);
        }
        let a = g.axes()[axis];
        GridMarginal {
            lo: a.lo,
            hi: a.hi,
            dx: g.spacing(axis),
            cumulative,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.lo) / self.dx + 0.5;
        if x >= self.hi || s >= (self.cumulative.len() - 1) as f64 {
            return 1.0;
        }
        if s <= 0.0 {
            return 0.0;
        }
        let i = s.floor() as usize;
        let f = s - i as f64;
        self.cumulative[i] + f * (self.cumulative[i + 1] - self.cumulative[i])
    }
}

/// Prefix marginals: `tables[k][prefix]` holds the probability of the first
/// `k + 1` axis indices, summed over the rest.
fn prefix_tables(grid: &Grid, density: &[f64]) -> Vec<Vec<f64>> {
    let d = grid.ndim();
    let m = grid.points();
    let mut tables = vec![density.to_vec()];
    for _ in 1..d {
        let last = tables.last().expect("non-empty");
        let reduced: Vec<f64> = last.chunks(m).map(|c| c.iter().sum()).collect();
        tables.push(reduced);
    }
    tables.reverse();
    tables
}

/// Draws `n` i.i.d. hap coordinates from `|psi|^2`: per-axis conditional
/// inverse CDF over nodes, then a uniform offset within the node's cell.
///
/// Sample `i` uses its own ChaCha8 stream of the master `seed`, so results do
/// not depend on the thread count.
pub fn sample_equilibrium(psi: &WaveFunction, n: usize, seed: u64) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "ensemble size must be at least 1".into(),
        ));
    }
    let grid = psi.grid();
    let density: Vec<f64> = psi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    if density.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument(
            "cannot sample a zero wavefunction".into(),
        ));
    }
    let tables = prefix_tables(grid, &density);
    let m = grid.points();
    let d = grid.ndim();
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut prefix = 0usize;
            let mut point = Vec::with_capacity(d);
            for (k, table) in tables.iter().enumerate() {
                let row = &table[prefix * m..(prefix + 1) * m];
                let total: f64 = row.iter().sum();
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = m - 1;
                for (j, w) in row.iter().enumerate() {
                    acc += w;
                    if u < acc && *w > 0.0 {
                        pick = j;
                        break;
                    }
                }
                if acc < u || row[pick] == 0.0 {
                    // Rounding left `u` past the last cell; use the last
                    // nonempty one.
                    pick = row.iter().rposition(|w| *w > 0.0).unwrap_or(m - 1);
                }
                prefix = prefix * m + pick;
                let a = grid.axes()[k];
                let jitter: f64 = rng.random::<f64>() - 0.5;
                let x = grid.coord(k, pick) + jitter * grid.spacing(k);
                point.push(x.clamp(a.lo, a.hi));
            }
            point
        })
        .collect();
    Ok(Ensemble {
        samples,
        seed,
        time: psi.time(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn concentrated_state_samples_one_cell() {
        let g = Grid::uniform(2, 16, -8.0, 8.0).unwrap();
        let psi = WaveFunction::from_fn(g.clone(), 0.0, |x| {
            let hit = (x[0] - 1.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12;
            Complex64::new(if hit { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let e = sample_equilibrium(&psi, 200, 3).unwrap();
        for s in &e.samples {
            assert!((s[0] - 1.0).abs() <= 0.5 && (s[1] + 2.0).abs() <= 0.5);
        }
    }

    #[test]
    fn gaussian_moments_and_determinism() {
        let g = Grid::uniform(1, 256, -12.0, 12.0).unwrap();
        let psi =
            WaveFunction::from_fn(g, 0.0, |x| Complex64::new((-x[0] * x[0] / 4.0).exp(), 0.0))
                .unwrap();
        let e = sample_equilibrium(&psi, 100_000, 11).unwrap();
        let xs = e.coordinate(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
        assert_eq!(
            sample_equilibrium(&psi, 100, 11).unwrap().samples,
            e.samples[..100].to_vec()
        );
    }

    #[test]
    fn grid_marginal_cdf_is_monotone() {
        let g = Grid::uniform(1, 32, -4.0, 4.0).unwrap();
        let psi =
            WaveFunction::from_fn(g, 0.0, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let m = GridMarginal::new(&psi, 0);
        let mut prev = 0.0;
        for i in 0..200 {
            let x = -5.0 + i as f64 * 0.05;
            let c = m.cdf(x);
            assert!(c >= prev - 1e-15);
            prev = c;
        }
        assert!((m.cdf(0.0) - 0.5).abs() < 1e-12);
        assert_eq!(m.cdf(10.0), 1.0);
    }
}
