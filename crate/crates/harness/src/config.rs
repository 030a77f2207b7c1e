//! Experiment configuration: the JSON schema the CLI consumes, plus
//! validation and seed plumbing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sketchbeam::channel::ChannelConfig;
use sketchbeam::metrics::EtaConvention;
use sketchbeam::sketch::SamplingScheme;

/// Which experiment a config drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SamplingCompare,
    SnrSweep,
    Convergence,
    SumrateConvergence,
    Bench,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::SamplingCompare => "sampling_compare",
            Scenario::SnrSweep => "snr_sweep",
            Scenario::Convergence => "convergence",
            Scenario::SumrateConvergence => "sumrate_convergence",
            Scenario::Bench => "bench",
        }
    }
}

/// One experiment, fully described. Serialized as JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Cell geometry, powers, and dimensions. Omitted fields take the
    /// desk-scale defaults.
    #[serde(default)]
    pub channel: ChannelConfig,
    /// Sketch sizes `L` to sweep.
    #[serde(default)]
    pub sketch_sizes: Vec<usize>,
    /// Sampling schemes to sweep.
    #[serde(default)]
    pub schemes: Vec<SamplingScheme>,
    /// Iteration count `t` for the sketched solver.
    pub iterations: usize,
    /// Transmit-SNR grid in dB (`snr_sweep` only). SNR is `P/σ²`.
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    /// Replications `R`.
    pub trials: usize,
    /// Master seed; every trial derives its own streams from it.
    pub master_seed: u64,
    /// Default CSV destination; `--out` overrides it.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Antenna counts for the `bench` scenario; defaults to `[channel.m]`.
    #[serde(default)]
    pub m_grid: Vec<usize>,
    /// Replace every sketch with the identity (`L = 2M`), making the
    /// preconditioner exact. `schemes`/`sketch_sizes` are then ignored.
    #[serde(default)]
    pub identity_sketch: bool,
    /// Slack convention for the sum-rate envelope columns.
    #[serde(default)]
    pub eta_convention: EtaConvention,
    /// Normalize leverage probabilities by `2M` instead of `2K`
    /// (comparison variant; the probabilities then sum below one).
    #[serde(default)]
    pub leverage_denominator_2m: bool,
}

impl ExperimentConfig {
    /// Reads and parses a JSON config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Antenna counts the `bench` scenario sweeps.
    pub fn effective_m_grid(&self) -> Vec<usize> {
        if self.m_grid.is_empty() {
            vec![self.channel.m]
        } else {
            self.m_grid.clone()
        }
    }

    /// Checks every invariant the runners rely on.
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.iterations == 0 {
            bail!("iterations must be at least 1");
        }
        if matches!(self.scenario, Scenario::Convergence | Scenario::SumrateConvergence)
            && self.iterations < 2
        {
            bail!("{} needs at least 2 iterations", self.scenario.label());
        }
        if self.scenario != Scenario::Bench && !self.m_grid.is_empty() {
            bail!("m_grid only applies to the bench scenario");
        }
        if self.scenario == Scenario::Bench && self.identity_sketch {
            bail!("identity_sketch does not apply to the bench scenario");
        }

        if !self.identity_sketch {
            // Bench always samples uniformly, so it only needs sizes.
            if self.scenario != Scenario::Bench && self.schemes.is_empty() {
                bail!("{} needs at least one sampling scheme", self.scenario.label());
            }
            if self.sketch_sizes.is_empty() {
                bail!("{} needs at least one sketch size", self.scenario.label());
            }
        }
        let min_m = match self.scenario {
            Scenario::Bench => *self
                .effective_m_grid()
                .iter()
                .min()
                .expect("m grid is never empty"),
            _ => self.channel.m,
        };
        if self.scenario == Scenario::Bench {
            for &m in &self.effective_m_grid() {
                if m == 0 {
                    bail!("m_grid entries must be positive");
                }
            }
        }
        for &l in &self.sketch_sizes {
            if l == 0 {
                bail!("sketch sizes must be positive");
            }
            if l > 2 * min_m {
                bail!("sketch size {l} exceeds the embedded dimension {}", 2 * min_m);
            }
        }

        if self.scenario == Scenario::SnrSweep {
            if self.snr_grid_db.is_empty() {
                bail!("snr_sweep needs a non-empty snr_grid_db");
            }
            if self.snr_grid_db.iter().any(|x| !x.is_finite()) {
                bail!("snr_grid_db entries must be finite");
            }
        }
        Ok(())
    }
}
