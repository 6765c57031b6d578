//! Optional `key = value` configuration file. Command-line flags win.

use std::path::Path;

use anyhow::{Context, Result};
use demandid::forecast::InfoCriterion;
use demandid::{DemandClass, MethodId};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub significance_alpha: Option<f64>,
    pub mc_replicates: Option<usize>,
    pub rng_seed: Option<u64>,
    pub detrend: Option<bool>,
    pub zero_ratio_threshold: Option<f64>,
    pub period: Option<usize>,
    pub holdout_fraction: Option<f64>,
    pub min_train_cycles: Option<usize>,
    pub ses_alpha: Option<f64>,
    pub max_lag: Option<usize>,
    pub criterion: Option<InfoCriterion>,
    pub auto_cyclical: Option<String>,
    pub auto_stochastic: Option<String>,
    pub auto_lumpy: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn auto_table(&self) -> Result<AutoTable> {
        let mut table = AutoTable::default();
        let entries = [
            (&self.auto_cyclical, &mut table.cyclical),
            (&self.auto_stochastic, &mut table.stochastic),
            (&self.auto_lumpy, &mut table.lumpy),
        ];
        for (name, slot) in entries {
            if let Some(name) = name {
                *slot = name.parse().map_err(anyhow::Error::msg)?;
            }
        }
        Ok(table)
    }
}

/// Method applied to each demand type by `--method auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoTable {
    pub cyclical: MethodId,
    pub stochastic: MethodId,
    pub lumpy: MethodId,
}

impl Default for AutoTable {
    fn default() -> Self {
        Self {
            cyclical: MethodId::StepwiseAr,
            stochastic: MethodId::StepwiseAr,
            lumpy: MethodId::HoltWintersAdditive,
        }
    }
}

impl AutoTable {
    pub fn method_for(&self, class: DemandClass) -> Option<MethodId> {
        match class {
            DemandClass::Cyclical => Some(self.cyclical),
            DemandClass::Stochastic => Some(self.stochastic),
            DemandClass::Lumpy => Some(self.lumpy),
            DemandClass::Unclassified => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_overrides_the_table() {
        let cfg: FileConfig = toml::from_str(
            "significance_alpha = 0.01\nmc_replicates = 200\ncriterion = \"aic\"\nauto_lumpy = \"ses\"\n",
        )
        .unwrap();
        assert_eq!(cfg.mc_replicates, Some(200));
        assert_eq!(cfg.criterion, Some(InfoCriterion::Aic));
        let table = cfg.auto_table().unwrap();
        assert_eq!(table.lumpy, MethodId::Ses);
        assert_eq!(table.cyclical, MethodId::StepwiseAr);
    }

    #[test]
    fn rejects_unknown_keys_and_methods() {
        assert!(toml::from_str::<FileConfig>("alpah = 0.1").is_err());
        let cfg: FileConfig = toml::from_str("auto_lumpy = \"croston\"").unwrap();
        assert!(cfg.auto_table().is_err());
    }
}
