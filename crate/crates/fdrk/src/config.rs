//! Settings shared by all subcommands: read from a TOML file, then
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use fdrk_core::bayes::{GammaPrior, SamplerKind};
use fdrk_core::{Benchmark, Linearization, TePolicy};
use serde::Deserialize;

#[derive(Debug, Default, Clone, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Model family: fisher, fitzhugh-nagumo or burgers-fisher.
    #[arg(long)]
    pub model: Option<String>,
    /// Model parameters as `key=value,...`, e.g. `r=4` or `r=4.5,s=5.5`.
    #[arg(long)]
    pub params: Option<String>,
    /// Spatial step.
    #[arg(long)]
    pub h: Option<f64>,
    /// `k = alpha h^2`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed time step, overriding `alpha`.
    #[arg(long)]
    pub fixed_k: Option<f64>,
    /// Time horizon.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Observation time.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Observation noise scale.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of observations.
    #[arg(long)]
    pub m: Option<usize>,
    /// Random seed; required by `infer` and `simulate`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Chain rows including the initial state (default 10000).
    #[arg(long)]
    pub chain_length: Option<usize>,
    /// Rows discarded before summarising (default chain_length / 5).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Tolerance `b` on the expected absolute Bayes factor.
    #[arg(long)]
    pub b_tol: Option<f64>,
    /// Initial forward-map mesh width for `infer`.
    #[arg(long)]
    pub h0: Option<f64>,
    /// richardson_residual, richardson_field, alg1_scalar or hp_over_tau.
    #[arg(long)]
    pub te_policy: Option<String>,
    /// adaptive-metropolis or twalk.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Use the closed-form forward map.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exact_fm: Option<bool>,
    /// paired or node-slope.
    #[arg(long)]
    pub linearization: Option<String>,
    /// Probe positions for `solve` output.
    #[arg(long, value_delimiter = ',')]
    pub probes: Option<Vec<f64>>,
    /// Mesh widths for `order` and `error-sweep`.
    #[arg(long, value_delimiter = ',')]
    pub h_ladder: Option<Vec<f64>>,
    /// Keep every n-th time step in `solve` output.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Gamma priors as `shape:rate,...`, one per parameter.
    #[arg(long)]
    pub prior: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    /// Values in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(base, top; model, params, h, alpha, fixed_k, tau, t1, sigma, m, seed,
            chain_length, burn_in, b_tol, h0, te_policy, sampler, exact_fm, linearization,
            probes, h_ladder, snapshot_every, prior, out)
    }

    pub fn model_name(&self) -> Result<&str> {
        let name = self.model.as_deref().unwrap_or("fisher");
        if !Benchmark::NAMES.contains(&name) {
            bail!(
                "unknown model '{name}' (expected one of {})",
                Benchmark::NAMES.join(", ")
            );
        }
        Ok(name)
    }

    /// The model with its parameters and horizon (default 1).
    pub fn benchmark(&self) -> Result<Benchmark> {
        let name = self.model_name()?;
        let params = parse_params(self.params.as_deref().unwrap_or(""))?;
        let pairs: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let model = Benchmark::from_params(name, &pairs)
            .with_context(|| format!("invalid parameters for {name}"))?;
        Ok(model.with_horizon(self.tau.unwrap_or(1.0))?)
    }

    pub fn policy(&self, default: TePolicy) -> Result<TePolicy> {
        match &self.te_policy {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| {
                anyhow::anyhow!(
                    "unknown te-policy '{s}' (expected one of {})",
                    TePolicy::NAMES.join(", ")
                )
            }),
        }
    }

    pub fn linearization(&self, default: Linearization) -> Result<Linearization> {
        match self.linearization.as_deref() {
            None => Ok(default),
            Some("paired") => Ok(Linearization::Paired),
            Some("node-slope") | Some("node_slope") => Ok(Linearization::NodeSlope),
            Some(s) => bail!("unknown linearization '{s}' (expected paired or node-slope)"),
        }
    }

    pub fn sampler(&self) -> Result<SamplerKind> {
        match &self.sampler {
            None => Ok(SamplerKind::default()),
            Some(s) => s
                .parse()
                .map_err(|_| anyhow::anyhow!("unknown sampler '{s}' (expected adaptive-metropolis or twalk)")),
        }
    }

    pub fn priors(&self) -> Result<Option<Vec<GammaPrior>>> {
        let Some(text) = &self.prior else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (shape, rate) = item
                .split_once(':')
                .with_context(|| format!("prior '{item}' is not of the form shape:rate"))?;
            let shape: f64 = shape.trim().parse().with_context(|| format!("bad prior shape in '{item}'"))?;
            let rate: f64 = rate.trim().parse().with_context(|| format!("bad prior rate in '{item}'"))?;
            out.push(GammaPrior::new(shape, rate)?);
        }
        Ok(Some(out))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Parses `key=value,key=value`.
pub fn parse_params(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .with_context(|| format!("parameter '{item}' is not of the form key=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("parameter '{}' is not a number", key.trim()))?;
        out.push((key.trim().to_string(), value));
    }
    Ok(out)
}

/// Observation settings of the reproduction runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferencePreset {
    pub sigma: f64,
    pub m: usize,
    pub t1: f64,
    pub h0: f64,
}

pub fn inference_preset(model: &str) -> InferencePreset {
    match model {
        "fisher" => InferencePreset {
            sigma: 0.007,
            m: 8,
            t1: 0.4,
            h0: 0.05,
        },
        "fitzhugh-nagumo" => InferencePreset {
            sigma: 0.007,
            m: 8,
            t1: 0.3,
            h0: 0.1,
        },
        _ => InferencePreset {
            sigma: 0.05,
            m: 10,
            t1: 0.2,
            h0: 0.1,
        },
    }
}
