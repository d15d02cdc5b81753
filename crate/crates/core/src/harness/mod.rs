//! Experiment drivers, acceptance manifest and reports.
//!
//! [`run_experiment`] dispatches on an [`Experiment`] name, parses its TOML
//! config (every field defaulted), runs it against the checked-in
//! [`Manifest`] and returns an [`ExperimentReport`]. [`checks`] holds the
//! kernel, transport and solver-oracle criteria that are not experiments.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod report;

pub use config::{DobrushinConfig, EnergyConfig, EquivalenceConfig, GaugeConfig, MeanfieldConfig, Scales};
pub use experiments::{experiment_dobrushin, experiment_energy, experiment_equivalence, experiment_meanfield};
pub use manifest::Manifest;
pub use report::{fit_loglog, Criterion, ExperimentReport, FittedRate, Series};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Equivalence,
    Dobrushin,
    Meanfield,
    Energy,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Equivalence,
        Experiment::Dobrushin,
        Experiment::Meanfield,
        Experiment::Energy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Equivalence => "equivalence",
            Experiment::Dobrushin => "dobrushin",
            Experiment::Meanfield => "meanfield",
            Experiment::Energy => "energy",
        }
    }

    /// Default config shipped under `configs/`.
    pub fn default_config(self) -> &'static str {
        match self {
            Experiment::Equivalence => include_str!("../../configs/equivalence.toml"),
            Experiment::Dobrushin => include_str!("../../configs/dobrushin.toml"),
            Experiment::Meanfield => include_str!("../../configs/meanfield.toml"),
            Experiment::Energy => include_str!("../../configs/energy.toml"),
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

/// Parses `config` for `experiment` and runs it.
pub fn run_experiment(experiment: Experiment, config: &str, manifest: &Manifest) -> Result<ExperimentReport> {
    Ok(match experiment {
        Experiment::Equivalence => experiment_equivalence(&config::from_toml_str(config)?, manifest),
        Experiment::Dobrushin => experiment_dobrushin(&config::from_toml_str(config)?, manifest),
        Experiment::Meanfield => experiment_meanfield(&config::from_toml_str(config)?, manifest),
        Experiment::Energy => experiment_energy(&config::from_toml_str(config)?, manifest),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_parse() {
        for e in Experiment::ALL {
            let s = e.default_config();
            let ok = match e {
                Experiment::Equivalence => config::from_toml_str::<EquivalenceConfig>(s).is_ok(),
                Experiment::Dobrushin => config::from_toml_str::<DobrushinConfig>(s).is_ok(),
                Experiment::Meanfield => config::from_toml_str::<MeanfieldConfig>(s).is_ok(),
                Experiment::Energy => config::from_toml_str::<EnergyConfig>(s).is_ok(),
            };
            assert!(ok, "{}", e.name());
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }
}
