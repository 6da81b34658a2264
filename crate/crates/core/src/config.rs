//! JSON configuration shared by single runs and sweeps.
//!
//! Every key is optional; missing keys take the model defaults. Unknown keys
//! and out-of-range values are rejected with the offending key named.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::bitstring::RemovePolicy;
use crate::dynamics::{EndowmentCharge, IterationRounding, Params};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sweep::{SweepConfig, DEFAULT_GRID};

/// A strength grid: explicit values or one of the named grids `"default"`
/// and `"dense"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid<R> {
    Values(Vec<R>),
    Named(String),
}

impl<R: Real> Grid<R> {
    pub fn resolve(&self, field: &str) -> Result<Vec<R>> {
        let from = |v: &[f64]| v.iter().map(|&x| R::from_f64(x).unwrap()).collect();
        match self {
            Grid::Values(v) => Ok(v.clone()),
            Grid::Named(name) if name == "default" => Ok(from(&DEFAULT_GRID)),
            Grid::Named(name) if name == "dense" => Ok(from(&dense_grid())),
            Grid::Named(name) => Err(Error::config(
                field,
                format!("unknown grid `{name}`, expected a list or \"default\" or \"dense\""),
            )),
        }
    }
}

/// 0.01, 0.05 to 0.95 in steps of 0.05, and 0.99.
pub fn dense_grid() -> Vec<f64> {
    let mut grid = vec![0.01];
    grid.extend((1..20).map(|k| k as f64 / 20.0));
    grid.push(0.99);
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "")]
pub struct Config<R: Real> {
    pub eta: R,
    pub lambda: R,
    pub seed: u64,
    pub init_complexity: usize,
    pub endowment: R,
    pub max_generations: u64,
    pub max_complexity: usize,
    pub remove_policy: RemovePolicy,
    pub iteration_rounding: IterationRounding,
    pub endowment_charge: EndowmentCharge,
    pub eta_grid: Grid<R>,
    pub lambda_grid: Grid<R>,
    pub runs_per_cell: usize,
    pub master_seed: u64,
    pub trajectory_thinning: u64,
    pub record_trajectories: bool,
    pub workers: Option<usize>,
}

impl<R: Real> Default for Config<R> {
    fn default() -> Self {
        let params = Params::<R>::default();
        let sweep = SweepConfig::<R>::default();
        Config {
            eta: params.eta,
            lambda: params.lambda,
            seed: params.seed,
            init_complexity: params.init_complexity,
            endowment: params.endowment,
            max_generations: params.max_generations,
            max_complexity: params.max_complexity,
            remove_policy: params.remove_policy,
            iteration_rounding: params.iteration_rounding,
            endowment_charge: params.endowment_charge,
            eta_grid: Grid::Values(sweep.eta_grid),
            lambda_grid: Grid::Values(sweep.lambda_grid),
            runs_per_cell: sweep.runs_per_cell,
            master_seed: sweep.master_seed,
            trajectory_thinning: sweep.trajectory_thinning,
            record_trajectories: sweep.record_trajectories,
            workers: sweep.workers,
        }
    }
}

impl<R: Real> Config<R> {
    /// Parses and validates a configuration. `origin` names the source in
    /// syntax errors.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            match inner.classify() {
                Category::Data if field != "." => Error::config(field, inner.to_string()),
                _ => Error::ConfigSyntax {
                    path: origin.to_path_buf(),
                    source: inner,
                },
            }
        })?;
        config.eta_grid = Grid::Values(config.eta_grid.resolve("eta_grid")?);
        config.lambda_grid = Grid::Values(config.lambda_grid.resolve("lambda_grid")?);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        self.sweep()?.validate()
    }

    /// Parameters of a single run.
    pub fn params(&self) -> Params<R> {
        Params {
            eta: self.eta,
            lambda: self.lambda,
            init_complexity: self.init_complexity,
            endowment: self.endowment,
            max_generations: self.max_generations,
            max_complexity: self.max_complexity,
            seed: self.seed,
            remove_policy: self.remove_policy,
            iteration_rounding: self.iteration_rounding,
            endowment_charge: self.endowment_charge,
            record_every: if self.record_trajectories { self.trajectory_thinning } else { 0 },
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig<R>> {
        Ok(SweepConfig {
            eta_grid: self.eta_grid.resolve("eta_grid")?,
            lambda_grid: self.lambda_grid.resolve("lambda_grid")?,
            runs_per_cell: self.runs_per_cell,
            master_seed: self.master_seed,
            base: self.params(),
            trajectory_thinning: self.trajectory_thinning,
            record_trajectories: self.record_trajectories,
            workers: self.workers,
        })
    }

    /// The resolved configuration as pretty JSON; parses back to `self`.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config is plain data");
        text.push('\n');
        text
    }
}

/// Loads `path` and returns the single-run parameters and the sweep
/// configuration it describes.
pub fn parse_config<R: Real>(path: &Path) -> Result<(Params<R>, SweepConfig<R>)> {
    let config = Config::<R>::load(path)?;
    Ok((config.params(), config.sweep()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config<f64>> {
        Config::from_json(text, Path::new("test.json"))
    }

    fn field_of(text: &str) -> String {
        match parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a field error for {text}, got {other:?}"),
        }
    }

    #[test]
    fn empty_object_gives_model_defaults() {
        let c = parse("{}").unwrap();
        assert_eq!(c.endowment, 100.0);
        assert_eq!(c.max_generations, 10_000);
        assert_eq!(c.max_complexity, 10_000);
        assert_eq!(c.init_complexity, 2);
        assert_eq!(c.runs_per_cell, 1000);
        assert_eq!(c.eta_grid, Grid::Values(DEFAULT_GRID.to_vec()));
        assert_eq!(c, Config::default());
    }

    #[test]
    fn range_errors_name_the_field() {
        assert_eq!(field_of(r#"{"eta": 1.5}"#), "eta");
        assert_eq!(field_of(r#"{"lambda": -0.1}"#), "lambda");
        assert_eq!(field_of(r#"{"eta_grid": [0.2, 2.0]}"#), "eta_grid");
        assert_eq!(field_of(r#"{"lambda_grid": "fine"}"#), "lambda_grid");
        assert_eq!(field_of(r#"{"runs_per_cell": 0}"#), "runs_per_cell");
        assert_eq!(field_of(r#"{"max_complexity": 2}"#), "max_complexity");
    }

    #[test]
    fn type_errors_name_the_field() {
        assert_eq!(field_of(r#"{"seed": "seven"}"#), "seed");
        assert_eq!(field_of(r#"{"remove_policy": "sometimes"}"#), "remove_policy");
        assert_eq!(field_of(r#"{"max_generations": -5}"#), "max_generations");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(r#"{"etta": 0.5}"#).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("etta"), "{err}");
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse("{\n  \"eta\": 0.5,\n}").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { .. }));
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let c = parse(
            r#"{"eta": 0.95, "lambda": 0.8, "seed": 11, "eta_grid": "dense", "lambda_grid": [0.3],
                "endowment_charge": "deficit_plus_funding", "workers": 3, "trajectory_thinning": 10}"#,
        )
        .unwrap();
        assert_eq!(c.eta_grid, Grid::Values(dense_grid()));
        assert_eq!(parse(&c.to_json()).unwrap(), c);
        let defaults = Config::<f64>::default();
        assert_eq!(parse(&defaults.to_json()).unwrap(), defaults);
    }

    #[test]
    fn dense_grid_shape() {
        let g = dense_grid();
        assert_eq!(g.len(), 21);
        assert_eq!((g[0], g[1], g[19], g[20]), (0.01, 0.05, 0.95, 0.99));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn params_and_sweep_follow_the_config() {
        let c = parse(r#"{"eta": 0.3, "master_seed": 4, "runs_per_cell": 2, "record_trajectories": false}"#).unwrap();
        let p = c.params();
        assert_eq!((p.eta, p.record_every), (0.3, 0));
        let s = c.sweep().unwrap();
        assert_eq!((s.master_seed, s.runs_per_cell, s.base.max_generations), (4, 2, 10_000));
    }
}
