//! JSON run configuration for the command-line tool.
//!
//! Environment indices are 1-based in configuration files and output, and
//! 0-based in the library. Every block is optional; [`RunConfig::resolve`]
//! fills in all defaults so the manifest echoes exactly what ran.

use serde::{Deserialize, Serialize};

use crate::bracket::BracketGrid;
use crate::error::{Error, Result};
use crate::invasion::{EstimatorConfig, HistogramSpec, DEFAULT_BATCHES, DEFAULT_BURN_IN_FRACTION};
use crate::model::{FaceId, Species, SwitchLaw, SwitchedSystem, SystemParams};
use crate::sim::{default_dt, IntegrationMode, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: SystemParams,
    pub switching: SwitchLaw,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub invasion: InvasionBlock,
    #[serde(default)]
    pub classify: ClassifyBlock,
    #[serde(default)]
    pub bracket: BracketBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub density: DensityBlock,
}

fn default_start() -> [f64; 3] {
    [2.0 / 3.0, 2.0 / 3.0, 1.5]
}

/// Integrator settings shared by every command, plus the `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    pub t_end: f64,
    /// Defaults to `1e-3 / r`.
    pub dt_max: Option<f64>,
    /// Defaults to `max(1, dt_max)`.
    pub sample_every: Option<f64>,
    pub mode: IntegrationMode,
    pub x0: [f64; 3],
    /// 1-based; drawn from π when absent.
    pub env0: Option<usize>,
    pub floor_warn: f64,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self {
            t_end: 1000.0,
            dt_max: None,
            sample_every: None,
            mode: IntegrationMode::Linear,
            x0: default_start(),
            env0: None,
            floor_warn: 1e-300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvasionBlock {
    pub t_end: f64,
    /// Defaults to 10% of `t_end`.
    pub burn_in: Option<f64>,
    pub n_batches: usize,
    pub env0: Option<usize>,
}

impl Default for InvasionBlock {
    fn default() -> Self {
        Self { t_end: 10_000.0, burn_in: None, n_batches: DEFAULT_BATCHES, env0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyBlock {
    pub z: f64,
    /// Run the extinction Monte Carlo when the verdict predicts an extinction.
    pub extinction: Option<ExtinctionBlock>,
    /// Interior starts for the bistability check; needs `extinction`.
    pub dichotomy_grid: Option<Vec<[f64; 3]>>,
}

impl Default for ClassifyBlock {
    fn default() -> Self {
        Self { z: 3.0, extinction: None, dichotomy_grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtinctionBlock {
    pub replicates: usize,
    pub t_end: f64,
    /// Defaults to 1e-8, or `e^-50` in log mode.
    pub threshold: Option<f64>,
    /// Defaults to the last 90% of `t_end`.
    pub slope_window: Option<f64>,
    /// Defaults to `sim.x0`.
    pub x0: Option<[f64; 3]>,
}

impl Default for ExtinctionBlock {
    fn default() -> Self {
        Self { replicates: 200, t_end: 5000.0, threshold: None, slope_window: None, x0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BracketBlock {
    #[serde(default)]
    pub grid: BracketGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub scales: Vec<f64>,
    pub face: FaceId,
    pub invader: Species,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { scales: vec![0.1, 1.0, 10.0, 100.0], face: FaceId::Prey1Predator, invader: Species::Prey2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityBlock {
    pub x0: [f64; 3],
    pub t_end: f64,
    pub burn_in: f64,
    pub replicates: usize,
    pub env0: Option<usize>,
    pub histogram: HistogramSpec,
}

impl Default for DensityBlock {
    fn default() -> Self {
        Self {
            x0: default_start(),
            t_end: 10_000.0,
            burn_in: 0.0,
            replicates: 100,
            env0: None,
            histogram: HistogramSpec {
                pair: [Species::Prey1, Species::Predator],
                x_range: [0.0, 1.0],
                y_range: [0.0, 5.0],
                bins: [50, 50],
            },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Param(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn system(&self) -> Result<SwitchedSystem> {
        SwitchedSystem::new(self.params().clone(), self.switching.clone())
    }

    pub fn params(&self) -> &SystemParams {
        &self.model
    }

    /// Structural checks that do not need any simulation.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        sys.stationary()?;
        let k = self.model.n_envs();
        for env in [self.sim.env0, self.invasion.env0, self.density.env0].into_iter().flatten() {
            to_internal_env(env, k)?;
        }
        if !self.sim.x0.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::param("sim.x0 must be finite and nonnegative"));
        }
        if FaceId::of_state(&self.sim.x0).is_none() {
            return Err(Error::param(format!("sim.x0 {:?} is not on a supported face", self.sim.x0)));
        }
        self.sim_config(self.sim.t_end)?.validate()?;
        self.estimator(FaceId::Prey1Predator)?;
        if !(self.classify.z > 0.0 && self.classify.z.is_finite()) {
            return Err(Error::param("classify.z must be positive"));
        }
        if let Some(ext) = &self.classify.extinction {
            if ext.replicates == 0 || !(ext.t_end > 0.0) {
                return Err(Error::param("classify.extinction needs replicates >= 1 and t_end > 0"));
            }
        }
        if self.classify.dichotomy_grid.is_some() && self.classify.extinction.is_none() {
            return Err(Error::param("classify.dichotomy_grid needs a classify.extinction block"));
        }
        self.bracket.grid.points()?;
        if self.sweep.scales.is_empty()
            || self.sweep.scales.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.sweep.scales.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::param("sweep.scales must be positive and strictly increasing"));
        }
        let dens = &self.density;
        dens.histogram.validate()?;
        if dens.replicates == 0 || !(dens.t_end > 0.0) || !(dens.burn_in >= 0.0 && dens.burn_in < dens.t_end) {
            return Err(Error::param("density needs replicates >= 1 and 0 <= burn_in < t_end"));
        }
        if FaceId::of_state(&dens.x0).is_none() {
            return Err(Error::param(format!(
                "density.x0 {:?} has no prey: no invariant dynamics to histogram",
                dens.x0
            )));
        }
        Ok(())
    }

    /// Replaces every implicit default with its value.
    pub fn resolve(&mut self) {
        let dt = self.sim.dt_max.unwrap_or_else(|| default_dt(&self.model));
        self.sim.dt_max = Some(dt);
        self.sim.sample_every = Some(self.sim.sample_every.unwrap_or(dt.max(1.0)));
        self.invasion.burn_in = Some(self.invasion.burn_in.unwrap_or(DEFAULT_BURN_IN_FRACTION * self.invasion.t_end));
        if let Some(ext) = &mut self.classify.extinction {
            ext.threshold = Some(ext.threshold.unwrap_or(match self.sim.mode {
                IntegrationMode::Linear => crate::classify::DEFAULT_THRESHOLD,
                IntegrationMode::Log => crate::classify::DEFAULT_LOG_THRESHOLD.exp(),
            }));
            ext.slope_window = Some(ext.slope_window.unwrap_or(0.9 * ext.t_end));
            ext.x0 = Some(ext.x0.unwrap_or(self.sim.x0));
        }
    }

    /// Integrator settings for a run of length `t_end` starting on the face of `sim.x0`.
    pub fn sim_config(&self, t_end: f64) -> Result<SimConfig> {
        let dt = self.sim.dt_max.unwrap_or_else(|| default_dt(&self.model));
        let face = FaceId::of_state(&self.sim.x0).unwrap_or(FaceId::Interior);
        let cfg = SimConfig {
            dt_max: dt,
            t_end,
            seed: self.seed,
            face,
            floor_warn: self.sim.floor_warn,
            sample_every: self.sim.sample_every.unwrap_or(dt.max(1.0)).min(t_end.max(dt)),
            mode: self.sim.mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn env0(&self, env: Option<usize>) -> Result<Option<usize>> {
        env.map(|e| to_internal_env(e, self.model.n_envs())).transpose()
    }

    pub fn estimator(&self, face: FaceId) -> Result<EstimatorConfig> {
        let inv = &self.invasion;
        let sim = self.sim_config(inv.t_end)?.with_face(face);
        let cfg = EstimatorConfig {
            sim,
            burn_in: inv.burn_in,
            n_batches: inv.n_batches,
            x0: None,
            env0: self.env0(inv.env0)?,
        };
        let b = cfg.burn_in();
        if !(b >= 0.0 && b < inv.t_end) || inv.n_batches < 2 {
            return Err(Error::param("invasion needs 0 <= burn_in < t_end and n_batches >= 2"));
        }
        Ok(cfg)
    }
}

pub fn to_internal_env(env: usize, k: usize) -> Result<usize> {
    if env == 0 || env > k {
        return Err(Error::param(format!("environment {env} out of range 1..={k}")));
    }
    Ok(env - 1)
}
