//! Behavior quantification: coverage entropy of the center robot, its
//! sliding-window variant, intrinsic PI time series and a-posteriori PI
//! from recorded wheel velocities.

use std::io::Write;
use std::path::Path;

use pimax_core::{empirical_mi_from_series, entropy_of, WheelBinner};
use pimax_sim::ArenaConfig;

use crate::error::{HarnessError, Result};
use crate::runlog::{write_csv, RunLog};

pub const PATCHES_PER_SIDE: usize = 20;

/// Visit counters over a `20 x 20` partition of the arena.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    counts: Vec<u64>,
}

impl CoverageGrid {
    pub fn new(arena: &ArenaConfig) -> Self {
        Self::with_patches(arena, PATCHES_PER_SIDE, PATCHES_PER_SIDE)
    }

    pub fn with_patches(arena: &ArenaConfig, nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            width: arena.width,
            height: arena.height,
            counts: vec![0; nx * ny],
        }
    }

    pub fn patch_of(&self, pos: [f64; 2]) -> (usize, usize) {
        let cell = |v: f64, extent: f64, n: usize| {
            ((v / extent * n as f64).floor().max(0.0) as usize).min(n - 1)
        };
        (
            cell(pos[0], self.width, self.nx),
            cell(pos[1], self.height, self.ny),
        )
    }

    pub fn record(&mut self, pos: [f64; 2]) {
        let (ix, iy) = self.patch_of(pos);
        self.counts[iy * self.nx + ix] += 1;
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn patches(&self) -> usize {
        self.counts.len()
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, "patch_x,patch_y,count", |w| {
            for iy in 0..self.ny {
                for ix in 0..self.nx {
                    writeln!(w, "{ix},{iy},{}", self.count(ix, iy))?;
                }
            }
            Ok(())
        })
    }
}

/// Entropy (bits) of the normalized visit frequencies.
pub fn coverage_entropy(grid: &CoverageGrid) -> Result<f64> {
    let total = grid.total();
    if total == 0 {
        return Err(HarnessError::Analysis("coverage grid has no visits".into()));
    }
    let probs: Vec<f64> = grid
        .counts()
        .iter()
        .map(|c| *c as f64 / total as f64)
        .collect();
    Ok(entropy_of(&probs))
}

/// Coverage grid of the center robot over the whole run.
pub fn coverage_grid(log: &RunLog, arena: &ArenaConfig) -> CoverageGrid {
    let mut grid = CoverageGrid::new(arena);
    log.center_positions().for_each(|p| grid.record(p));
    grid
}

/// Coverage entropy of the center robot over consecutive, non-overlapping
/// windows of `window` ticks, keyed by the first tick of each window. A
/// trailing partial window is dropped.
pub fn sliding_coverage_entropy(
    log: &RunLog,
    arena: &ArenaConfig,
    window: usize,
) -> Vec<(u64, f64)> {
    if window == 0 {
        return Vec::new();
    }
    let mut grid = CoverageGrid::new(arena);
    let positions: Vec<[f64; 2]> = log.center_positions().collect();
    positions
        .chunks_exact(window)
        .enumerate()
        .map(|(i, chunk)| {
            grid.clear();
            chunk.iter().for_each(|p| grid.record(*p));
            (
                (i * window) as u64,
                coverage_entropy(&grid).expect("window is non-empty"),
            )
        })
        .collect()
}

pub fn mean_sliding_coverage_entropy(
    log: &RunLog,
    arena: &ArenaConfig,
    window: usize,
) -> Option<f64> {
    let series = sliding_coverage_entropy(log, arena, window);
    (!series.is_empty()).then(|| series.iter().map(|(_, h)| h).sum::<f64>() / series.len() as f64)
}

pub fn write_sliding_csv(path: &Path, series: &[(u64, f64)]) -> Result<()> {
    write_csv(path, "window_start_tick,entropy_bits", |w| {
        for (t, h) in series {
            writeln!(w, "{t},{h:.16e}")?;
        }
        Ok(())
    })
}

/// Intrinsic PI per controller and the average over controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct PiSeries {
    pub ticks: Vec<u64>,
    pub per_controller: Vec<Vec<f64>>,
    pub average: Vec<f64>,
}

impl PiSeries {
    /// Mean of the average series over samples with `from <= tick < to`.
    pub fn mean_between(&self, from: u64, to: u64) -> Option<f64> {
        let vals: Vec<f64> = self
            .ticks
            .iter()
            .zip(&self.average)
            .filter(|(t, _)| **t >= from && **t < to)
            .map(|(_, v)| *v)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn last_average(&self) -> Option<f64> {
        self.average.last().copied()
    }
}

pub fn pi_timeseries(log: &RunLog) -> Result<PiSeries> {
    let n = log.pi_ticks().len();
    if n == 0 {
        return Err(HarnessError::Analysis("run log holds no PI samples".into()));
    }
    let mut per_controller = vec![Vec::with_capacity(n); log.controllers];
    let mut average = Vec::with_capacity(n);
    for i in 0..n {
        let sample = log.pi_sample(i);
        for (series, v) in per_controller.iter_mut().zip(sample) {
            series.push(*v);
        }
        average.push(sample.iter().sum::<f64>() / sample.len() as f64);
    }
    Ok(PiSeries {
        ticks: log.pi_ticks().to_vec(),
        per_controller,
        average,
    })
}

/// A-posteriori PI of one robot: both wheels binned into `bins` bins, over
/// the last `window` transitions of the run.
pub fn posteriori_pi(log: &RunLog, robot: usize, bins: usize, window: usize) -> Result<f64> {
    let binner = WheelBinner::unit(bins)?;
    Ok(empirical_mi_from_series(
        &log.wheel_series(robot),
        &binner,
        window,
    )?)
}

/// Per-robot a-posteriori PI averaged over the chain.
pub fn mean_posteriori_pi(log: &RunLog, bins: usize, window: usize) -> Result<f64> {
    let mut total = 0.0;
    for r in 0..log.robots {
        total += posteriori_pi(log, r, bins, window)?;
    }
    Ok(total / log.robots as f64)
}

/// Fraction of transitions of a discrete sensor series that hop between
/// the two bins of the same sign half (`0 <-> 1` or `2 <-> 3` for four
/// bins): the signature of a wheel oscillating around a held direction.
pub fn same_sign_hop_fraction(series: &[usize], bins: usize) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let half = bins / 2;
    let hops = series
        .windows(2)
        .filter(|w| w[0] != w[1] && (w[0] < half) == (w[1] < half) && w[0].abs_diff(w[1]) == 1)
        .count();
    hops as f64 / (series.len() - 1) as f64
}
