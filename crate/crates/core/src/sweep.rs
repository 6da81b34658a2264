//! Parallel execution of a grid of independent runs and per-cell aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_simulation, HaltReason, Params, RunResult};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A grid of selection strengths and how to run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig<R> {
    pub eta_grid: Vec<R>,
    pub lambda_grid: Vec<R>,
    pub runs_per_cell: usize,
    pub master_seed: u64,
    /// Template for every run; `eta`, `lambda`, `seed` and `record_every`
    /// are overwritten per run.
    pub base: Params<R>,
    /// Record every n-th generation.
    pub trajectory_thinning: u64,
    /// Keep per-generation records in the returned results.
    pub record_trajectories: bool,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl<R: Real> Default for SweepConfig<R> {
    fn default() -> Self {
        let grid: Vec<R> = DEFAULT_GRID.iter().map(|&v| R::from_f64(v).unwrap()).collect();
        SweepConfig {
            eta_grid: grid.clone(),
            lambda_grid: grid,
            runs_per_cell: 1000,
            master_seed: 0,
            base: Params::default(),
            trajectory_thinning: 1,
            record_trajectories: true,
            workers: None,
        }
    }
}

/// Strength values used for both axes when none are given.
pub const DEFAULT_GRID: [f64; 9] = [0.01, 0.05, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99];

impl<R: Real> SweepConfig<R> {
    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("eta_grid", &self.eta_grid), ("lambda_grid", &self.lambda_grid)] {
            if grid.is_empty() {
                return Err(Error::config(name, "must not be empty"));
            }
            if let Some(v) = grid.iter().find(|v| !(**v >= R::zero() && **v <= R::one())) {
                return Err(Error::config(name, format!("values must lie in [0, 1], got {v}")));
            }
        }
        if self.runs_per_cell < 1 {
            return Err(Error::config("runs_per_cell", "must be at least 1"));
        }
        if self.trajectory_thinning < 1 {
            return Err(Error::config("trajectory_thinning", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        self.params_for(0, 0, 0).validate()
    }

    pub fn cell_count(&self) -> usize {
        self.eta_grid.len() * self.lambda_grid.len()
    }

    /// Fully specified parameters of one run.
    pub fn params_for(&self, eta_index: usize, lambda_index: usize, run: usize) -> Params<R> {
        Params {
            eta: self.eta_grid[eta_index],
            lambda: self.lambda_grid[lambda_index],
            seed: derive_seed(self.master_seed, eta_index, lambda_index, run),
            record_every: if self.record_trajectories { self.trajectory_thinning } else { 0 },
            ..self.base.clone()
        }
    }
}

/// Seed of one run: splitmix64 folded over the master seed and the three
/// indices.
pub fn derive_seed(master_seed: u64, eta_index: usize, lambda_index: usize, run: usize) -> u64 {
    [eta_index, lambda_index, run]
        .into_iter()
        .fold(splitmix64(master_seed), |h, i| splitmix64(h ^ i as u64))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One run of a sweep with its grid coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRun<R> {
    pub eta_index: usize,
    pub lambda_index: usize,
    pub run: usize,
    pub eta: R,
    pub lambda: R,
    pub result: RunResult<R>,
}

impl<R> SweepRun<R> {
    fn key(&self) -> (usize, usize, usize) {
        (self.eta_index, self.lambda_index, self.run)
    }
}

/// Aggregate statistics of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary<R> {
    pub eta: R,
    pub lambda: R,
    pub runs: usize,
    pub mean_log2_survival: R,
    pub mean_survival: R,
    pub mean_final_c_t: R,
    pub mean_final_c_s: R,
    pub barrier_fraction: R,
    /// Runs that reached the generation limit.
    pub survivor_fraction: R,
    pub ceiling_fraction: R,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome<R> {
    /// Ordered by eta index, lambda index, run index.
    pub runs: Vec<SweepRun<R>>,
    /// Ordered by eta index, then lambda index.
    pub cells: Vec<CellSummary<R>>,
}

impl<R: Real> SweepOutcome<R> {
    /// Run-weighted fraction of barrier halts over the whole grid.
    pub fn barrier_fraction(&self) -> R {
        global_barrier_fraction(&self.cells)
    }
}

pub fn global_barrier_fraction<R: Real>(cells: &[CellSummary<R>]) -> R {
    let runs: usize = cells.iter().map(|c| c.runs).sum();
    let barriers = cells
        .iter()
        .fold(R::zero(), |acc, c| acc + c.barrier_fraction * R::from_count(c.runs));
    barriers / R::from_count(runs.max(1))
}

pub fn run_sweep<R: Real>(config: &SweepConfig<R>) -> Result<SweepOutcome<R>> {
    run_sweep_with(config, |_| Ok(()))
}

/// Like [`run_sweep`], but hands every finished run to `visit` on the worker
/// that produced it. `visit` may drain the trajectory to keep memory flat.
pub fn run_sweep_with<R, F>(config: &SweepConfig<R>, visit: F) -> Result<SweepOutcome<R>>
where
    R: Real,
    F: Fn(&mut SweepRun<R>) -> Result<()> + Sync,
{
    config.validate()?;
    let (ne, nl, k) = (config.eta_grid.len(), config.lambda_grid.len(), config.runs_per_cell);
    let work = || {
        (0..ne * nl * k)
            .into_par_iter()
            .map(|flat| {
                let (cell, run) = (flat / k, flat % k);
                let (i, j) = (cell / nl, cell % nl);
                let params = config.params_for(i, j, run);
                let mut out = SweepRun {
                    eta_index: i,
                    lambda_index: j,
                    run,
                    eta: params.eta,
                    lambda: params.lambda,
                    result: run_simulation(&params)?,
                };
                visit(&mut out)?;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    };
    let mut runs = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {n} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    runs.sort_by_key(SweepRun::key);

    let cells = runs
        .chunks(k)
        .map(|chunk| summarize_cell(chunk, config.base.max_generations))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome { runs, cells })
}

/// Aggregates the runs of one cell. Ceiling halts count as surviving the full
/// `max_generations`; every run survives at least one generation.
pub fn summarize_cell<R: Real>(runs: &[SweepRun<R>], max_generations: u64) -> Result<CellSummary<R>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::invalid("cannot summarize an empty cell"))?;
    if let Some(stray) = runs.iter().find(|r| (r.eta_index, r.lambda_index) != (first.eta_index, first.lambda_index)) {
        return Err(Error::invalid(format!(
            "run {} belongs to cell ({}, {}), not ({}, {})",
            stray.run, stray.eta_index, stray.lambda_index, first.eta_index, first.lambda_index
        )));
    }
    let mut sorted: Vec<&SweepRun<R>> = runs.iter().collect();
    sorted.sort_by_key(|r| r.run);

    let n = R::from_count(sorted.len());
    let mean = |f: &dyn Fn(&RunResult<R>) -> R| sorted.iter().fold(R::zero(), |acc, r| acc + f(&r.result)) / n;
    let fraction = |reason| mean(&|r| if r.halt_reason == reason { R::one() } else { R::zero() });
    let survival = |r: &RunResult<R>| R::from_u64(r.survival(max_generations)).unwrap();

    Ok(CellSummary {
        eta: first.eta,
        lambda: first.lambda,
        runs: sorted.len(),
        mean_log2_survival: mean(&|r| survival(r).log2()),
        mean_survival: mean(&survival),
        mean_final_c_t: mean(&|r| R::from_count(r.final_c_t)),
        mean_final_c_s: mean(&|r| R::from_count(r.final_c_s)),
        barrier_fraction: fraction(HaltReason::AbsorbingBarrier),
        survivor_fraction: fraction(HaltReason::MaxGenerations),
        ceiling_fraction: fraction(HaltReason::ComplexityCeiling),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(run: usize, halt: HaltReason, generations: u64, c_t: usize, c_s: usize) -> SweepRun<f64> {
        SweepRun {
            eta_index: 0,
            lambda_index: 0,
            run,
            eta: 0.5,
            lambda: 0.25,
            result: RunResult {
                seed: run as u64,
                halt_reason: halt,
                generations,
                final_c_t: c_t,
                final_c_s: c_s,
                final_distance: 0,
                final_effectiveness: 1.0,
                final_endowment: 0.0,
                max_c_t: c_t,
                trajectory: Vec::new(),
            },
        }
    }

    fn small_config() -> SweepConfig<f64> {
        SweepConfig {
            eta_grid: vec![0.2, 0.9],
            lambda_grid: vec![0.5, 0.9],
            runs_per_cell: 3,
            master_seed: 42,
            base: Params {
                max_generations: 60,
                ..Params::default()
            },
            ..SweepConfig::default()
        }
    }

    #[test]
    fn barrier_at_generation_eight_gives_three_bits() {
        let runs: Vec<_> = (0..4).map(|i| fake(i, HaltReason::AbsorbingBarrier, 8, 2, 2)).collect();
        let s = summarize_cell(&runs, 10_000).unwrap();
        assert_eq!(s.mean_log2_survival, 3.0);
        assert_eq!(s.barrier_fraction, 1.0);
        assert_eq!(s.survivor_fraction + s.ceiling_fraction, 0.0);
    }

    #[test]
    fn ceiling_run_counts_as_full_horizon() {
        let s = summarize_cell(&[fake(0, HaltReason::ComplexityCeiling, 1234, 10_000, 9000)], 10_000).unwrap();
        assert_eq!(s.mean_log2_survival, 10_000f64.log2());
        assert_eq!(s.ceiling_fraction, 1.0);
    }

    #[test]
    fn mixed_cell_matches_hand_computation() {
        let runs = vec![
            fake(0, HaltReason::AbsorbingBarrier, 0, 2, 1),
            fake(1, HaltReason::AbsorbingBarrier, 3, 4, 5),
            fake(2, HaltReason::MaxGenerations, 100, 20, 30),
            fake(3, HaltReason::ComplexityCeiling, 17, 100, 40),
            fake(4, HaltReason::AbsorbingBarrier, 31, 6, 7),
        ];
        let s = summarize_cell(&runs, 100).unwrap();
        // Survival: 1 (floored), 3, 100, 100 (ceiling), 31.
        let log2 = (0.0 + 3f64.log2() + 100f64.log2() * 2.0 + 31f64.log2()) / 5.0;
        assert!((s.mean_log2_survival - log2).abs() < 1e-12);
        assert_eq!(s.mean_survival, 235.0 / 5.0);
        assert_eq!(s.mean_final_c_t, 132.0 / 5.0);
        assert_eq!(s.mean_final_c_s, 83.0 / 5.0);
        assert_eq!(s.barrier_fraction, 0.6);
        assert_eq!(s.survivor_fraction, 0.2);
        assert_eq!(s.ceiling_fraction, 0.2);
    }

    #[test]
    fn summary_ignores_input_order() {
        let runs: Vec<_> = (0..7)
            .map(|i| fake(i, [HaltReason::AbsorbingBarrier, HaltReason::MaxGenerations][i % 2], 3 + 11 * i as u64, i, 2 * i))
            .collect();
        let mut reversed = runs.clone();
        reversed.reverse();
        assert_eq!(summarize_cell(&runs, 90).unwrap(), summarize_cell(&reversed, 90).unwrap());
    }

    #[test]
    fn empty_or_mixed_cells_are_rejected() {
        assert!(matches!(summarize_cell::<f64>(&[], 10), Err(Error::InvalidArgument(_))));
        let mut other = fake(1, HaltReason::AbsorbingBarrier, 2, 2, 2);
        other.lambda_index = 1;
        assert!(summarize_cell(&[fake(0, HaltReason::AbsorbingBarrier, 2, 2, 2), other], 10).is_err());
    }

    #[test]
    fn seeds_depend_on_indices() {
        let seeds: std::collections::HashSet<u64> = (0..4)
            .flat_map(|i| (0..4).flat_map(move |j| (0..8).map(move |k| derive_seed(9, i, j, k))))
            .collect();
        assert_eq!(seeds.len(), 4 * 4 * 8);
        assert_ne!(derive_seed(9, 0, 1, 0), derive_seed(9, 1, 0, 0));
        assert_ne!(derive_seed(9, 0, 0, 0), derive_seed(10, 0, 0, 0));
        assert_eq!(derive_seed(9, 2, 3, 4), derive_seed(9, 2, 3, 4));
    }

    #[test]
    fn two_by_two_grid_counts() {
        let out = run_sweep(&small_config()).unwrap();
        assert_eq!(out.runs.len(), 12);
        assert_eq!(out.cells.len(), 4);
        for c in &out.cells {
            assert_eq!(c.runs, 3);
            assert!((c.barrier_fraction + c.survivor_fraction + c.ceiling_fraction - 1.0).abs() < 1e-12);
        }
        let keys: Vec<_> = out.runs.iter().map(SweepRun::key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!((out.cells[1].eta, out.cells[1].lambda), (0.2, 0.9));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut config = small_config();
        config.workers = Some(1);
        let serial = run_sweep(&config).unwrap();
        config.workers = Some(3);
        assert_eq!(run_sweep(&config).unwrap(), serial);
        assert_eq!(run_sweep(&config).unwrap(), serial);
    }

    #[test]
    fn thinning_and_recording() {
        let mut config = small_config();
        config.trajectory_thinning = 5;
        let out = run_sweep(&config).unwrap();
        for r in &out.runs {
            assert!(r.result.trajectory.iter().all(|g| g.generation % 5 == 0));
            assert_eq!(r.result.trajectory.len() as u64, r.result.generations.div_ceil(5));
        }
        config.record_trajectories = false;
        assert!(run_sweep(&config).unwrap().runs.iter().all(|r| r.result.trajectory.is_empty()));
    }

    #[test]
    fn visitor_sees_every_run() {
        let seen = std::sync::Mutex::new(Vec::new());
        let out = run_sweep_with(&small_config(), |r| {
            seen.lock().unwrap().push(r.key());
            r.result.trajectory.clear();
            Ok(())
        })
        .unwrap();
        let mut seen = seen.into_inner().unwrap();
        seen.sort();
        assert_eq!(seen, out.runs.iter().map(SweepRun::key).collect::<Vec<_>>());
        assert!(out.runs.iter().all(|r| r.result.trajectory.is_empty()));
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let bad = |f: fn(&mut SweepConfig<f64>), field: &str| {
            let mut c = small_config();
            f(&mut c);
            match c.validate() {
                Err(Error::Config { field: got, .. }) => assert_eq!(got, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        };
        bad(|c| c.eta_grid.clear(), "eta_grid");
        bad(|c| c.lambda_grid.push(1.5), "lambda_grid");
        bad(|c| c.runs_per_cell = 0, "runs_per_cell");
        bad(|c| c.trajectory_thinning = 0, "trajectory_thinning");
        bad(|c| c.workers = Some(0), "workers");
        bad(|c| c.base.init_complexity = 0, "init_complexity");
    }
}
