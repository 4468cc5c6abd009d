//! Rule, mode and strategy names shared by the CLI and the service.

use clap::ValueEnum;
use mbd_core::{CancelMode, DiagnosisConfig, Rule, Strategy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleOpt {
    #[serde(alias = "R1")]
    R1,
    #[default]
    #[serde(alias = "R2")]
    R2,
    #[serde(alias = "R3")]
    R3,
    #[serde(alias = "R4")]
    R4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeOpt {
    #[default]
    Nonint,
    Int,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyOpt {
    #[default]
    Entropy,
    Bounds,
    Halving,
}

impl From<RuleOpt> for Rule {
    fn from(r: RuleOpt) -> Self {
        match r {
            RuleOpt::R1 => Rule::R1,
            RuleOpt::R2 => Rule::R2,
            RuleOpt::R3 => Rule::R3,
            RuleOpt::R4 => Rule::R4,
        }
    }
}

impl From<ModeOpt> for CancelMode {
    fn from(m: ModeOpt) -> Self {
        match m {
            ModeOpt::Nonint => CancelMode::NonIntermittent,
            ModeOpt::Int => CancelMode::Intermittent,
        }
    }
}

impl From<StrategyOpt> for Strategy {
    fn from(s: StrategyOpt) -> Self {
        match s {
            StrategyOpt::Entropy => Strategy::EntropySplit,
            StrategyOpt::Bounds => Strategy::Bounds,
            StrategyOpt::Halving => Strategy::Halving,
        }
    }
}

pub fn config(rule: RuleOpt, mode: ModeOpt, strategy: StrategyOpt) -> DiagnosisConfig {
    DiagnosisConfig { rule: rule.into(), mode: mode.into(), strategy: strategy.into() }
}
