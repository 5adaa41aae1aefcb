use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::prompt::{PromptTrainConfig, DEFAULT_TEMPERATURE, MOMENTUM, PROMPT_LEARNING_RATE};
use crate::vae::VaeTrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Prompt tuning with Gaussian pseudo-feature replay.
    LpDif,
    /// Prompt tuning without any replay.
    LpOnly,
    /// Replays `N_e` randomly chosen real features per old class.
    ExemplarRandom,
    /// Replays the `N_e` real features nearest each old class mean.
    ExemplarHerding,
    /// Retrains a fresh prompt on all data seen so far (upper bound).
    JointLp,
    /// An untrained random prompt.
    FixedPrompt,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::LpDif,
        Method::LpOnly,
        Method::ExemplarRandom,
        Method::ExemplarHerding,
        Method::JointLp,
        Method::FixedPrompt,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::LpDif => "lp_dif",
            Method::LpOnly => "lp_only",
            Method::ExemplarRandom => "exemplar_random",
            Method::ExemplarHerding => "exemplar_herding",
            Method::JointLp => "joint_lp",
            Method::FixedPrompt => "fixed_prompt",
        }
    }

    pub fn uses_exemplars(self) -> bool {
        matches!(self, Method::ExemplarRandom | Method::ExemplarHerding)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Epoch and batch settings for one kind of session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
}

/// Which schedule the first session uses when a benchmark has no base
/// session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstSessionSchedule {
    Base,
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    /// Synthesized features per class `M`.
    pub synth_count: usize,
    /// Old classes drawn per real example `B`.
    pub replay_count: usize,
    pub lambda_o: f64,
    pub temperature: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub prompt_init_std: f64,
    pub base: Schedule,
    pub incremental: Schedule,
    /// Used by `joint_lp` in every session.
    pub joint: Schedule,
    /// Required for benchmarks without a base session.
    pub first_session: Option<FirstSessionSchedule>,
    /// Retained real features per old class `N_e`.
    pub exemplars_per_class: usize,
    pub vae: VaeTrainConfig,
    pub seed: u64,
}

impl MethodConfig {
    pub fn new(method: Method, seed: u64) -> Self {
        let base = PromptTrainConfig::base_session();
        let inc = PromptTrainConfig::incremental_session();
        Self {
            method,
            synth_count: 10,
            replay_count: base.replay_count,
            lambda_o: base.lambda_o,
            temperature: DEFAULT_TEMPERATURE,
            learning_rate: PROMPT_LEARNING_RATE,
            momentum: MOMENTUM,
            prompt_init_std: crate::prompt::PROMPT_INIT_STD,
            base: Schedule {
                epochs: base.epochs,
                batch_size: base.batch_size,
            },
            incremental: Schedule {
                epochs: inc.epochs,
                batch_size: inc.batch_size,
            },
            joint: Schedule {
                epochs: 400,
                batch_size: base.batch_size,
            },
            first_session: None,
            exemplars_per_class: 5,
            vae: VaeTrainConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.uses_exemplars() && self.exemplars_per_class == 0 {
            return Err(Error::invalid("exemplar methods need N_e >= 1"));
        }
        if self.replay_count == 0 {
            return Err(Error::invalid("B must be >= 1"));
        }
        if !(self.temperature > 0.0) || !(self.prompt_init_std >= 0.0) {
            return Err(Error::invalid("temperature must be positive and the prompt init std >= 0"));
        }
        self.prompt_config(self.base).validate()?;
        self.prompt_config(self.incremental).validate()?;
        self.prompt_config(self.joint).validate()?;
        self.vae.validate()
    }

    /// Prompt-training settings for a session with the given schedule.
    pub fn prompt_config(&self, schedule: Schedule) -> PromptTrainConfig {
        PromptTrainConfig {
            epochs: schedule.epochs,
            batch_size: schedule.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            lambda_o: if self.method == Method::LpDif { self.lambda_o } else { 0.0 },
            replay_count: self.replay_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("lp-dif".parse::<Method>().is_err());
    }

    #[test]
    fn exemplar_methods_need_memory() {
        let mut c = MethodConfig::new(Method::ExemplarHerding, 0);
        c.exemplars_per_class = 0;
        assert!(c.validate().is_err());
        c.method = Method::LpDif;
        assert!(c.validate().is_ok());
    }
}
