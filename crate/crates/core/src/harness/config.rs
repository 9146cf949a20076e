use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{HyperParamSpace, RewardConfig};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::replay::MixConfig;
use crate::sac::{SacConfig, HIDDEN, STATE_DIM};

/// Which of the two additions to plain SAC are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Mixture-regularized replay and smoothing-Q.
    Full,
    /// Smoothing-Q only.
    SqHpo,
    /// Mixture-regularized replay only.
    HmrHpo,
    /// Plain SAC.
    Base,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::SqHpo, Variant::HmrHpo, Variant::Base];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::SqHpo => "sq-hpo",
            Variant::HmrHpo => "hmr-hpo",
            Variant::Base => "base",
        }
    }

    pub fn mixes(self) -> bool {
        matches!(self, Variant::Full | Variant::HmrHpo)
    }

    pub fn smooths(self) -> bool {
        matches!(self, Variant::Full | Variant::SqHpo)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (full, sq-hpo, hmr-hpo, base)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub episodes: usize,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub variant: Variant,
    /// Variants compared by an ablation.
    pub ablation_variants: Vec<Variant>,
    pub objective: ObjectiveSpec,
    pub space: HyperParamSpace,
    pub agent: SacConfig,
    pub mix: MixConfig,
    pub reward: RewardConfig,
    pub buffer_capacity: usize,
    /// Hidden widths shared by actor, critics and value network.
    pub hidden: Vec<usize>,
    pub state_dim: usize,
    pub use_cache: bool,
    /// Store measured seconds per episode. Off by default so that outputs
    /// depend only on the configuration and seed.
    pub record_wall_clock: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episodes: 150,
            horizon: 10,
            seeds: vec![0],
            variant: Variant::Full,
            ablation_variants: Variant::ALL.to_vec(),
            objective: ObjectiveSpec::default(),
            space: HyperParamSpace::lightgbm(),
            agent: SacConfig::default(),
            mix: MixConfig::default(),
            reward: RewardConfig::default(),
            buffer_capacity: 100_000,
            hidden: HIDDEN.to_vec(),
            state_dim: STATE_DIM,
            use_cache: true,
            record_wall_clock: false,
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn budget(&self) -> usize {
        self.episodes * self.horizon
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.episodes == 0 {
            return bad("episodes must be positive");
        }
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity must be positive");
        }
        if self.state_dim == 0 {
            return bad("state_dim must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        if self.ablation_variants.is_empty() {
            return bad("ablation_variants must not be empty");
        }
        self.space.validate()?;
        self.agent.validate()?;
        self.mix.validate()?;
        self.reward.validate()
    }
}
