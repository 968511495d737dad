//! Name-keyed registries of channel families, reliability estimators and
//! coding schemes.

use crate::channel::{ExtremalKind, Mac};
use crate::codec::scheme::{CodingScheme, CornerScheme, JointScheme};
use crate::error::{Error, Result};
use crate::polarizer::{AutoEstimator, ExactEstimator, MonteCarloEstimator, ReliabilityEstimator};
use crate::transform::Synthesizer;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    pub q: usize,
    pub flip: f64,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorParams {
    pub trials: u64,
    pub seed: u64,
    pub max_outputs: usize,
}

pub type ChannelBuilder = fn(&ChannelParams) -> Result<Mac>;
pub type EstimatorFactory = fn(&EstimatorParams) -> Box<dyn ReliabilityEstimator>;

pub struct Registry {
    channels: BTreeMap<&'static str, ChannelBuilder>,
    estimators: BTreeMap<&'static str, EstimatorFactory>,
    schemes: BTreeMap<&'static str, Box<dyn CodingScheme>>,
}

fn extremal(kind: ExtremalKind, p: &ChannelParams) -> Result<Mac> {
    Mac::extremal(kind, p.q)
}

fn exact(p: &EstimatorParams) -> ExactEstimator {
    ExactEstimator {
        synth: Synthesizer::new(p.max_outputs),
    }
}

fn monte_carlo(p: &EstimatorParams) -> MonteCarloEstimator {
    MonteCarloEstimator {
        trials: p.trials,
        seed: p.seed,
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            channels: BTreeMap::new(),
            estimators: BTreeMap::new(),
            schemes: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register_channel("adder", |p| Mac::adder(p.q, p.flip));
        r.register_channel("useless", |p| extremal(ExtremalKind::Useless, p));
        r.register_channel("user1-perfect", |p| extremal(ExtremalKind::User1Perfect, p));
        r.register_channel("user2-perfect", |p| extremal(ExtremalKind::User2Perfect, p));
        r.register_channel("contention", |p| extremal(ExtremalKind::Contention, p));
        r.register_channel("perfect", |p| extremal(ExtremalKind::Perfect, p));
        r.register_channel("file", |p| match &p.file {
            Some(path) => Mac::load_json(path),
            None => Err(Error::validation("channel 'file' needs a channel file")),
        });
        r.register_estimator("exact", |p| Box::new(exact(p)));
        r.register_estimator("mc", |p| Box::new(monte_carlo(p)));
        r.register_estimator("auto", |p| {
            Box::new(AutoEstimator {
                exact: exact(p),
                monte_carlo: monte_carlo(p),
            })
        });
        r.register_scheme(Box::new(JointScheme));
        r.register_scheme(Box::new(CornerScheme));
        r
    }

    pub fn register_channel(&mut self, name: &'static str, builder: ChannelBuilder) {
        self.channels.insert(name, builder);
    }

    pub fn register_estimator(&mut self, name: &'static str, factory: EstimatorFactory) {
        self.estimators.insert(name, factory);
    }

    pub fn register_scheme(&mut self, scheme: Box<dyn CodingScheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn channel_names(&self) -> Vec<&'static str> {
        self.channels.keys().copied().collect()
    }

    pub fn estimator_names(&self) -> Vec<&'static str> {
        self.estimators.keys().copied().collect()
    }

    pub fn scheme_names(&self) -> Vec<&'static str> {
        self.schemes.keys().copied().collect()
    }

    pub fn channel(&self, name: &str, params: &ChannelParams) -> Result<Mac> {
        let build = self
            .channels
            .get(name)
            .ok_or_else(|| unknown("channel", name, self.channel_names()))?;
        build(params)
    }

    pub fn estimator(
        &self,
        name: &str,
        params: &EstimatorParams,
    ) -> Result<Box<dyn ReliabilityEstimator>> {
        let make = self
            .estimators
            .get(name)
            .ok_or_else(|| unknown("mode", name, self.estimator_names()))?;
        Ok(make(params))
    }

    pub fn scheme(&self, name: &str) -> Result<&dyn CodingScheme> {
        self.schemes
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| unknown("scheme", name, self.scheme_names()))
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

fn unknown(kind: &str, name: &str, known: Vec<&str>) -> Error {
    Error::validation(format!(
        "unknown {kind} '{name}' (known: {})",
        known.join(", ")
    ))
}
