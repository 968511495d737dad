//! Information-set selection for the joint scheme.

use crate::error::{Error, Result};
use crate::metrics::{classify, Extremal};
use crate::polarizer::{IndexRecord, Mode, PolarizationReport};
use crate::stats::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default estimated error threshold for Monte Carlo construction.
pub const DEFAULT_PE_THRESHOLD: f64 = 1e-3;

/// Which inputs of a synthesized channel carry information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    None,
    U,
    V,
    Both,
}

impl Role {
    pub fn has_u(self) -> bool {
        matches!(self, Role::U | Role::Both)
    }

    pub fn has_v(self) -> bool {
        matches!(self, Role::V | Role::Both)
    }

    /// Error probability of the decision made at an index with this role.
    pub fn error_term(self, r: &IndexRecord) -> f64 {
        match self {
            Role::None => 0.0,
            Role::U => r.pe_u_given_v,
            Role::V => r.pe_v_given_u,
            Role::Both => r.pe_joint,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReliability {
    pub index: usize,
    pub role: Role,
    /// Extremal class (exact mode) or the threshold decision (Monte Carlo).
    pub class: String,
    /// Error probability of the decision at this index; sums to the union bound.
    pub term: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub seed: u64,
    pub pe_threshold: f64,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            epsilon: 0.1,
            lambda: 0.5,
            seed: 0,
            pe_threshold: DEFAULT_PE_THRESHOLD,
        }
    }
}

impl ConstructParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::validation(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::validation(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.pe_threshold > 0.0 && self.pe_threshold <= 1.0) {
            return Err(Error::validation(format!(
                "pe threshold must lie in (0, 1], got {}",
                self.pe_threshold
            )));
        }
        Ok(())
    }
}

/// A joint polar code for the two-user MAC. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub q: usize,
    pub n: usize,
    pub depth: usize,
    pub a_u: Vec<usize>,
    pub a_v: Vec<usize>,
    pub frozen_u: BTreeMap<usize, usize>,
    pub frozen_v: BTreeMap<usize, usize>,
    pub lambda: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub mode: Mode,
    pub pe_threshold: f64,
    pub union_bound: f64,
    /// True when the per-index terms are exact error probabilities.
    pub union_bound_exact: bool,
    pub reliability: Vec<IndexReliability>,
}

impl CodeSpec {
    pub fn rate_u(&self) -> f64 {
        self.a_u.len() as f64 / self.n as f64
    }

    pub fn rate_v(&self) -> f64 {
        self.a_v.len() as f64 / self.n as f64
    }

    pub fn rate_sum(&self) -> f64 {
        self.rate_u() + self.rate_v()
    }

    pub fn role(&self, index: usize) -> Role {
        match (
            self.frozen_u.contains_key(&index),
            self.frozen_v.contains_key(&index),
        ) {
            (false, false) => Role::Both,
            (false, true) => Role::U,
            (true, false) => Role::V,
            (true, true) => Role::None,
        }
    }

    /// Replace the per-index terms with those of another report on the same
    /// channel, e.g. an independent Monte Carlo run.
    pub fn rebound(&mut self, report: &PolarizationReport) -> Result<()> {
        if report.q != self.q || report.n() != self.n {
            return Err(Error::validation(
                "report does not match the code parameters",
            ));
        }
        for (rel, rec) in self.reliability.iter_mut().zip(&report.entries) {
            rel.term = rel.role.error_term(rec);
        }
        self.union_bound = self.reliability.iter().map(|r| r.term).sum();
        self.union_bound_exact = report.mode == Mode::Exact;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if !n.is_power_of_two() || n != 1 << self.depth {
            return Err(Error::validation(format!(
                "block length {n} does not match depth {}",
                self.depth
            )));
        }
        crate::field::Field::new(self.q)?;
        for (name, set, frozen) in [
            ("a_u", &self.a_u, &self.frozen_u),
            ("a_v", &self.a_v, &self.frozen_v),
        ] {
            if set.iter().any(|&i| i == 0 || i > n) || set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::validation(format!(
                    "{name} must be increasing indices in [1, {n}]"
                )));
            }
            if set.len() + frozen.len() != n || set.iter().any(|i| frozen.contains_key(i)) {
                return Err(Error::validation(format!(
                    "frozen symbols must cover exactly the complement of {name}"
                )));
            }
            if frozen.iter().any(|(&i, &s)| i == 0 || i > n || s >= self.q) {
                return Err(Error::validation(format!(
                    "invalid frozen entry for {name}"
                )));
            }
        }
        Ok(())
    }
}

fn exact_role(r: &IndexRecord, epsilon: f64) -> (Role, String, bool) {
    let c = classify(&r.triple, epsilon);
    let role = match c.kind {
        None | Some(Extremal::T000) => Role::None,
        Some(Extremal::T011) => Role::V,
        Some(Extremal::T101) => Role::U,
        Some(Extremal::T111) => Role::U,
        Some(Extremal::T112) => Role::Both,
    };
    (role, c.label().to_string(), c.kind == Some(Extremal::T111))
}

fn threshold_role(r: &IndexRecord, thr: f64) -> (Role, String, bool) {
    let cu = r.pe_u_given_v < thr;
    let cv = r.pe_v_given_u < thr;
    if r.pe_joint < thr {
        (Role::Both, "joint".into(), false)
    } else if cu && cv {
        (Role::U, "contention".into(), true)
    } else if cu {
        (Role::U, "u-given-v".into(), false)
    } else if cv {
        (Role::V, "v-given-u".into(), false)
    } else {
        (Role::None, "none".into(), false)
    }
}

/// Select information sets from a polarization report.
///
/// Exact reports use the extremal classification at `epsilon`; Monte Carlo
/// reports threshold the estimated error probabilities at `pe_threshold`.
/// Of the `m` contention indices, the first `ceil(lambda * m)` carry `U` and
/// the rest carry `V`.
pub fn construct(report: &PolarizationReport, params: &ConstructParams) -> Result<CodeSpec> {
    params.validate()?;
    let n = report.n();
    if n != 1 << report.depth {
        return Err(Error::validation("report does not cover every index"));
    }
    let decisions: Vec<(Role, String, bool)> = report
        .entries
        .iter()
        .map(|r| match report.mode {
            Mode::Exact => exact_role(r, params.epsilon),
            Mode::MonteCarlo => threshold_role(r, params.pe_threshold),
        })
        .collect();
    let m = decisions.iter().filter(|d| d.2).count();
    let to_u = (params.lambda * m as f64).ceil() as usize;
    let mut seen = 0;
    let mut reliability = Vec::with_capacity(n);
    for (r, (role, class, contention)) in report.entries.iter().zip(decisions) {
        let role = if contention {
            seen += 1;
            if seen <= to_u {
                Role::U
            } else {
                Role::V
            }
        } else {
            role
        };
        reliability.push(IndexReliability {
            index: r.index,
            role,
            class,
            term: role.error_term(r),
        });
    }

    let mut rng = stream_rng(params.seed, 0);
    let q = report.q;
    let (mut a_u, mut a_v) = (Vec::new(), Vec::new());
    let (mut frozen_u, mut frozen_v) = (BTreeMap::new(), BTreeMap::new());
    for rel in &reliability {
        if rel.role.has_u() {
            a_u.push(rel.index);
        } else {
            frozen_u.insert(rel.index, rng.gen_range(0..q));
        }
        if rel.role.has_v() {
            a_v.push(rel.index);
        } else {
            frozen_v.insert(rel.index, rng.gen_range(0..q));
        }
    }
    Ok(CodeSpec {
        q,
        n,
        depth: report.depth,
        a_u,
        a_v,
        frozen_u,
        frozen_v,
        lambda: params.lambda,
        epsilon: params.epsilon,
        seed: params.seed,
        mode: report.mode,
        pe_threshold: params.pe_threshold,
        union_bound: reliability.iter().map(|r| r.term).sum(),
        union_bound_exact: report.mode == Mode::Exact,
        reliability,
    })
}
