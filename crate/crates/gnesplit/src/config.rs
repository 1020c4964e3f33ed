//! Experiment configuration (TOML).
//!
//! ```toml
//! solvers = ["fb", "fbf", "fbhf"]
//! seeds = [1, 2, 3]
//! out_dir = "results"
//! reference = "compute"     # compute | load | none
//!
//! [stop]
//! fp_tol = 1e-9
//! max_iters = 50000
//!
//! [cournot]
//! n_firms = 20
//! n_markets = 7
//! ```
//!
//! With `instance_file` set, that file is solved once per solver and the
//! Cournot section and seeds are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gnesplit_core::cournot::CournotParams;
use gnesplit_core::{SolverKind, StopRule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReferencePolicy {
    #[default]
    Compute,
    Load,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopConfig {
    pub fp_tol: Option<f64>,
    pub kkt_tol: Option<f64>,
    pub max_iters: Option<usize>,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            fp_tol: Some(1e-9),
            kkt_tol: None,
            max_iters: Some(50_000),
        }
    }
}

impl StopConfig {
    pub fn rule(&self) -> anyhow::Result<StopRule> {
        Ok(StopRule::new(self.fp_tol, self.kkt_tol, self.max_iters)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CournotConfig {
    pub n_firms: usize,
    pub n_markets: usize,
    pub delta_range: [f64; 2],
    pub capacity_range: [f64; 2],
    pub pi_range: [f64; 2],
    pub r_range: [f64; 2],
    pub pbar_range: [f64; 2],
    pub d_range: [f64; 2],
    pub participation: Option<Vec<Vec<usize>>>,
    pub chords: Option<Vec<(usize, usize)>>,
    pub midpoint: bool,
}

impl Default for CournotConfig {
    fn default() -> Self {
        let p = CournotParams::default();
        CournotConfig {
            n_firms: p.n_firms,
            n_markets: p.n_markets,
            delta_range: p.delta_range.into(),
            capacity_range: p.capacity_range.into(),
            pi_range: p.pi_range.into(),
            r_range: p.r_range.into(),
            pbar_range: p.pbar_range.into(),
            d_range: p.d_range.into(),
            participation: None,
            chords: None,
            midpoint: false,
        }
    }
}

impl CournotConfig {
    pub fn params(&self, seed: u64) -> CournotParams {
        let r = |a: [f64; 2]| (a[0], a[1]);
        CournotParams {
            n_firms: self.n_firms,
            n_markets: self.n_markets,
            delta_range: r(self.delta_range),
            capacity_range: r(self.capacity_range),
            pi_range: r(self.pi_range),
            r_range: r(self.r_range),
            pbar_range: r(self.pbar_range),
            d_range: r(self.d_range),
            participation: self.participation.clone(),
            chords: self.chords.clone(),
            seed,
            midpoint: self.midpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub instance_file: Option<PathBuf>,
    pub cournot: CournotConfig,
    pub solvers: Vec<String>,
    pub seeds: Vec<u64>,
    pub stop: StopConfig,
    pub out_dir: PathBuf,
    pub reference: ReferencePolicy,
    /// Run the message-passing simulation instead of the centralised loop.
    pub distributed: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance_file: None,
            cournot: CournotConfig::default(),
            solvers: SolverKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            seeds: (1..=10).collect(),
            stop: StopConfig::default(),
            out_dir: PathBuf::from("results"),
            reference: ReferencePolicy::Compute,
            distributed: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn solver_kinds(&self) -> anyhow::Result<Vec<SolverKind>> {
        if self.solvers.is_empty() {
            bail!("at least one solver is required");
        }
        let mut kinds = Vec::new();
        for s in &self.solvers {
            let k: SolverKind = s.parse()?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        Ok(kinds)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.solver_kinds()?;
        if self.instance_file.is_none() {
            if self.seeds.is_empty() {
                bail!("at least one seed is required");
            }
            self.cournot.params(0).validate()?;
        }
        self.stop.rule()?;
        Ok(())
    }
}
