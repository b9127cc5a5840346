use std::path::{Path, PathBuf};

use bilevel_ggm_core::{
    Criterion, GlassoOptions, InitMode, LambdaGrid, LambdaTriple, RcmOptions, SimScenario,
    SolverLimits,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides `threads`.
pub const THREADS_ENV: &str = "BILEVEL_GGM_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<SimScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<LambdaGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaTriple>,
    #[serde(default)]
    pub criterion: Criterion,
    #[serde(default)]
    pub solver: SolverConfig,
    /// 0 picks the number of cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            grid: None,
            lambda: None,
            criterion: Criterion::default(),
            solver: SolverConfig::default(),
            threads: 0,
            output_dir: default_output_dir(),
        }
    }
}

/// Flat view of [`RcmOptions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_bcd_iter: usize,
    pub bcd_tol: f64,
    pub init_blend: f64,
    pub init_mode: InitMode,
    pub glasso_max_iter: usize,
    pub glasso_tol: f64,
    pub sparsecov_max_iter: usize,
    pub sparsecov_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = RcmOptions::default();
        Self {
            max_bcd_iter: o.max_bcd_iter,
            bcd_tol: o.bcd_tol,
            init_blend: o.init_blend,
            init_mode: o.init_mode,
            glasso_max_iter: o.inner_glasso.max_iter,
            glasso_tol: o.inner_glasso.tol,
            sparsecov_max_iter: o.inner_sparsecov.max_iter,
            sparsecov_tol: o.inner_sparsecov.tol,
        }
    }
}

impl SolverConfig {
    pub fn to_options(&self) -> RcmOptions {
        RcmOptions {
            max_bcd_iter: self.max_bcd_iter,
            bcd_tol: self.bcd_tol,
            init_blend: self.init_blend,
            init_mode: self.init_mode,
            inner_glasso: self.glasso_options(),
            inner_sparsecov: SolverLimits {
                max_iter: self.sparsecov_max_iter,
                tol: self.sparsecov_tol,
            },
        }
    }

    pub fn glasso_options(&self) -> GlassoOptions {
        GlassoOptions {
            max_iter: self.glasso_max_iter,
            tol: self.glasso_tol,
            warm_start: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Thread count after applying [`THREADS_ENV`].
    pub fn resolved_threads(&self) -> CliResult<usize> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                CliError::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer"))
            }),
            Err(_) => Ok(self.threads),
        }
    }

    pub fn require_scenario(&self) -> CliResult<&SimScenario> {
        let s = self
            .scenario
            .as_ref()
            .ok_or_else(|| CliError::InvalidConfig("`scenario` is required".into()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn require_lambda(&self) -> CliResult<LambdaTriple> {
        if self.grid.is_some() {
            return Err(CliError::InvalidConfig(
                "`fit` takes `lambda`, not `grid`".into(),
            ));
        }
        let l = self
            .lambda
            .ok_or_else(|| CliError::InvalidConfig("`lambda` is required".into()))?;
        l.validate()?;
        Ok(l)
    }

    pub fn require_grid(&self) -> CliResult<&LambdaGrid> {
        if self.lambda.is_some() {
            return Err(CliError::InvalidConfig(
                "`tune` takes `grid`, not `lambda`".into(),
            ));
        }
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| CliError::InvalidConfig("`grid` is required".into()))?;
        g.validate()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.solver.to_options(), RcmOptions::default());
    }

    #[test]
    fn round_trips() {
        let c = RunConfig {
            scenario: Some(SimScenario::default()),
            lambda: Some(LambdaTriple::new(0.2, 1.0, 0.1).unwrap()),
            criterion: Criterion::Bic1,
            threads: 3,
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lamda": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"solver": {"tol": 1}}"#).is_err());
    }

    #[test]
    fn fit_and_tune_inputs_are_exclusive() {
        let c = RunConfig {
            lambda: Some(LambdaTriple::new(0.2, 1.0, 0.1).unwrap()),
            grid: Some(LambdaGrid::new(vec![0.1], vec![1.0], vec![0.0]).unwrap()),
            ..RunConfig::default()
        };
        assert!(matches!(
            c.require_lambda(),
            Err(CliError::InvalidConfig(_))
        ));
        assert!(matches!(c.require_grid(), Err(CliError::InvalidConfig(_))));
    }
}
