//! Stratified Monte Carlo over a region mapped from the unit cube.
//!
//! The first pass spreads half of the budget uniformly over the strata; the
//! remaining passes allocate samples in proportion to each stratum's
//! estimated standard deviation (Neyman allocation). Every (pass, stratum)
//! pair draws from its own ChaCha stream, so results do not depend on how
//! many worker threads evaluate the strata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{IntegralEstimate, IntegratorConfig, KahanSum, Region};
use crate::geometry::Point3;
use crate::Result;

#[derive(Debug, Clone, Copy, Default)]
struct StratumStats {
    n: u64,
    excluded: u64,
    mean: f64,
    m2: f64,
}

impl StratumStats {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &StratumStats) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
        self.excluded += o.excluded;
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

fn stream_rng(seed: u64, pass: usize, stratum: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((pass as u64) << 40) | stratum as u64);
    rng
}

fn sample_stratum<F>(
    f: &F,
    region: &Region,
    grid: [usize; 3],
    index: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> StratumStats
where
    F: Fn(&Point3) -> Option<f64>,
{
    let i0 = index % grid[0];
    let i1 = (index / grid[0]) % grid[1];
    let i2 = index / (grid[0] * grid[1]);
    let cell = [i0, i1, i2];
    let mut stats = StratumStats::default();
    for _ in 0..count {
        let mut u = [0.0; 3];
        for k in 0..3 {
            u[k] = (cell[k] as f64 + rng.random::<f64>()) / grid[k] as f64;
        }
        let (x, jac) = region.map(u);
        let v = match f(&x) {
            Some(v) => v * jac,
            None => {
                stats.excluded += 1;
                0.0
            }
        };
        stats.push(v);
    }
    stats
}

/// Stratified Monte Carlo estimate of `∫ f d³x` over `region`. Points where
/// `f` returns `None` lie outside the integration domain and count as zero.
pub fn integrate_volume<F>(f: F, region: &Region, cfg: &IntegratorConfig) -> Result<IntegralEstimate>
where
    F: Fn(&Point3) -> Option<f64> + Sync,
{
    cfg.validate()?;
    let grid = cfg.strata.unwrap_or_else(|| region.default_strata(cfg.samples));
    let n_strata = grid[0] * grid[1] * grid[2];
    let cell_volume = 1.0 / n_strata as f64;

    let first = (cfg.samples / 2 / n_strata).max(2);
    let mut stats: Vec<StratumStats> = (0..n_strata)
        .into_par_iter()
        .map(|h| {
            let mut rng = stream_rng(cfg.seed, 0, h);
            sample_stratum(&f, region, grid, h, first, &mut rng)
        })
        .collect();
    let mut spent = first * n_strata;

    let passes = cfg.max_passes.max(1);
    for pass in 1..passes {
        let remaining = cfg.samples.saturating_sub(spent);
        let budget = remaining / (passes - pass);
        if budget == 0 {
            break;
        }
        let sigmas: Vec<f64> = stats.iter().map(|s| s.variance().sqrt()).collect();
        let total_sigma: f64 = sigmas.iter().sum();
        if total_sigma == 0.0 {
            break;
        }
        let alloc: Vec<usize> = sigmas
            .iter()
            .map(|s| (budget as f64 * s / total_sigma).floor() as usize)
            .collect();
        let extra: Vec<StratumStats> = alloc
            .par_iter()
            .enumerate()
            .map(|(h, &n)| {
                if n == 0 {
                    return StratumStats::default();
                }
                let mut rng = stream_rng(cfg.seed, pass, h);
                sample_stratum(&f, region, grid, h, n, &mut rng)
            })
            .collect();
        for (s, e) in stats.iter_mut().zip(&extra) {
            s.merge(e);
        }
        spent += alloc.iter().sum::<usize>();
    }

    let mut value = KahanSum::default();
    let mut variance = KahanSum::default();
    let mut excluded = 0;
    let mut sampled = 0;
    for s in &stats {
        value.add(cell_volume * s.mean);
        variance.add(cell_volume * cell_volume * s.variance() / s.n as f64);
        excluded += s.excluded;
        sampled += s.n;
    }
    let value = value.value();
    let std_error = variance.value().max(0.0).sqrt();
    Ok(IntegralEstimate {
        value,
        std_error,
        excluded,
        evaluated: sampled - excluded,
        converged: std_error <= cfg.rel_tol * value.abs(),
    })
}
