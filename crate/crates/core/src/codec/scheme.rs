//! Coding schemes behind a common interface.

use crate::channel::Mac;
use crate::codec::construct::{construct, CodeSpec, ConstructParams};
use crate::codec::corner::{
    corner_channels, corner_construct, simulate_corner, CornerCode, DEFAULT_Z_THRESHOLD,
};
use crate::codec::simulate::{simulate_block, SimReport};
use crate::error::{Error, Result};
use crate::polarizer::{genie_estimate, genie_estimate_point, Mode, ReliabilityEstimator};
use serde::{Deserialize, Serialize};

/// Seed offset for the independent Monte Carlo run that supplies union-bound
/// terms, so the bound is not biased by the selection.
pub const BOUND_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub construct: ConstructParams,
    pub z_threshold: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            construct: ConstructParams::default(),
            z_threshold: DEFAULT_Z_THRESHOLD,
        }
    }
}

/// A constructed code of either scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum CodeArtifact {
    Joint(CodeSpec),
    Corner(CornerCode),
}

impl CodeArtifact {
    pub fn scheme(&self) -> &'static str {
        match self {
            CodeArtifact::Joint(_) => "joint",
            CodeArtifact::Corner(_) => "corner",
        }
    }

    pub fn q(&self) -> usize {
        match self {
            CodeArtifact::Joint(s) => s.q,
            CodeArtifact::Corner(c) => c.first.q,
        }
    }

    /// `(rate of user 1, rate of user 2)`.
    pub fn rates(&self) -> (f64, f64) {
        match self {
            CodeArtifact::Joint(s) => (s.rate_u(), s.rate_v()),
            CodeArtifact::Corner(c) => (c.first.rate(), c.second.rate()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            CodeArtifact::Joint(s) => serde_json::to_string_pretty(s)?,
            CodeArtifact::Corner(c) => serde_json::to_string_pretty(c)?,
        })
    }

    /// Parse either serialization; corner codes carry `first`/`second`.
    pub fn from_json(text: &str) -> Result<CodeArtifact> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("first").is_some() {
            Ok(CodeArtifact::Corner(serde_json::from_str(text)?))
        } else {
            Ok(CodeArtifact::Joint(serde_json::from_str(text)?))
        }
    }
}

pub trait CodingScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn construct(
        &self,
        mac: &Mac,
        depth: usize,
        estimator: &dyn ReliabilityEstimator,
        params: &SchemeParams,
    ) -> Result<CodeArtifact>;

    fn simulate(&self, code: &CodeArtifact, mac: &Mac, trials: u64, seed: u64)
        -> Result<SimReport>;
}

/// Both users decoded jointly over the product group.
#[derive(Clone, Copy, Debug, Default)]
pub struct JointScheme;

/// Two single-user codes at a corner point, decoded successively.
#[derive(Clone, Copy, Debug, Default)]
pub struct CornerScheme;

fn mismatch(expected: &str, code: &CodeArtifact) -> Error {
    Error::validation(format!(
        "expected a {expected} code, got a {} code",
        code.scheme()
    ))
}

impl CodingScheme for JointScheme {
    fn name(&self) -> &'static str {
        "joint"
    }

    fn construct(
        &self,
        mac: &Mac,
        depth: usize,
        estimator: &dyn ReliabilityEstimator,
        params: &SchemeParams,
    ) -> Result<CodeArtifact> {
        let report = estimator.mac_report(mac, depth)?;
        let mut spec = construct(&report, &params.construct)?;
        if let (Mode::MonteCarlo, Some(trials), Some(seed)) =
            (report.mode, report.trials, report.seed)
        {
            spec.rebound(&genie_estimate(mac, depth, trials, seed ^ BOUND_SEED_MIX)?)?;
        }
        Ok(CodeArtifact::Joint(spec))
    }

    fn simulate(
        &self,
        code: &CodeArtifact,
        mac: &Mac,
        trials: u64,
        seed: u64,
    ) -> Result<SimReport> {
        match code {
            CodeArtifact::Joint(spec) => simulate_block(spec, mac, trials, seed),
            other => Err(mismatch("joint", other)),
        }
    }
}

impl CodingScheme for CornerScheme {
    fn name(&self) -> &'static str {
        "corner"
    }

    fn construct(
        &self,
        mac: &Mac,
        depth: usize,
        estimator: &dyn ReliabilityEstimator,
        params: &SchemeParams,
    ) -> Result<CodeArtifact> {
        let (q1, q2) = corner_channels(mac);
        let r1 = estimator.point_report(&q1, depth)?;
        let r2 = estimator.point_report(&q2, depth)?;
        let mut code = corner_construct(&r1, &r2, params.z_threshold, params.construct.seed)?;
        for (r, ch, slot) in [(&r1, &q1, 0), (&r2, &q2, 1)] {
            if let (Mode::MonteCarlo, Some(trials), Some(seed)) = (r.mode, r.trials, r.seed) {
                let b = genie_estimate_point(
                    ch,
                    depth,
                    trials,
                    (seed ^ BOUND_SEED_MIX).wrapping_add(slot),
                )?;
                let component = if slot == 0 {
                    &mut code.first
                } else {
                    &mut code.second
                };
                component.rebound(&b)?;
            }
        }
        Ok(CodeArtifact::Corner(code))
    }

    fn simulate(
        &self,
        code: &CodeArtifact,
        mac: &Mac,
        trials: u64,
        seed: u64,
    ) -> Result<SimReport> {
        match code {
            CodeArtifact::Corner(c) => simulate_corner(c, mac, trials, seed),
            other => Err(mismatch("corner", other)),
        }
    }
}
