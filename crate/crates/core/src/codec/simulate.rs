//! Block error simulation with genie instrumentation.

use crate::channel::Mac;
use crate::codec::construct::CodeSpec;
use crate::codec::encoder::polar_encode;
use crate::codec::joint::JointDecoder;
use crate::error::{Error, Result};
use crate::polarizer::RowSampler;
use crate::stats::{run_chunked, Wilson};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Genie-aided error count at one information index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexErrors {
    pub index: usize,
    pub user: String,
    pub errors: u64,
    pub rate: Wilson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheme: String,
    pub trials: u64,
    pub seed: u64,
    pub block_errors: u64,
    pub bler: Wilson,
    /// Sum of the per-index error probabilities of the information indices.
    pub union_bound: f64,
    pub union_bound_exact: bool,
    /// Trials on which some genie-aided decision was wrong.
    pub genie_block_errors: u64,
    /// Trials on which the first genie-aided error index differed from the
    /// first standalone error index. Always zero for a correct decoder.
    pub first_error_mismatches: u64,
    pub index_errors: Vec<IndexErrors>,
}

impl SimReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "trials,block_errors,bler,wilson_lower,wilson_upper,union_bound"
        )?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            self.trials,
            self.block_errors,
            self.bler.estimate,
            self.bler.lower,
            self.bler.upper,
            self.union_bound
        )?;
        Ok(())
    }

    /// Whether the empirical BLER respects the union bound up to `k` Wilson
    /// half-widths.
    pub fn within_bound(&self, k: f64) -> bool {
        self.bler.estimate <= self.union_bound + k * self.bler.half_width()
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct SimCounts {
    pub block: u64,
    pub genie_block: u64,
    pub mismatch: u64,
    pub index: Vec<u64>,
}

impl SimCounts {
    pub(crate) fn merge(parts: Vec<SimCounts>, len: usize) -> SimCounts {
        let mut total = SimCounts {
            index: vec![0; len],
            ..Default::default()
        };
        for p in parts {
            total.block += p.block;
            total.genie_block += p.genie_block;
            total.mismatch += p.mismatch;
            for (t, c) in total.index.iter_mut().zip(&p.index) {
                *t += c;
            }
        }
        total
    }
}

pub(crate) fn draw_source<R: Rng + ?Sized>(
    n: usize,
    q: usize,
    frozen: &BTreeMap<usize, usize>,
    rng: &mut R,
) -> Vec<usize> {
    (1..=n)
        .map(|i| {
            frozen
                .get(&i)
                .copied()
                .unwrap_or_else(|| rng.gen_range(0..q))
        })
        .collect()
}

/// Simulate the joint scheme for `trials` blocks. Each trial draws the
/// information symbols uniformly, encodes both users, passes the codewords
/// through `mac`, and runs both the standalone and the genie-aided decoder.
pub fn simulate_block(spec: &CodeSpec, mac: &Mac, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    JointDecoder::new(spec, mac)?;
    let (n, q, field) = (spec.n, spec.q, mac.field());
    let sampler = RowSampler::new(mac.table().rows());
    let parts = run_chunked(trials, seed, |rng, count| {
        let mut dec = JointDecoder::new(spec, mac).expect("validated above");
        let mut c = SimCounts {
            index: vec![0; n],
            ..Default::default()
        };
        for _ in 0..count {
            let u = draw_source(n, q, &spec.frozen_u, rng);
            let v = draw_source(n, q, &spec.frozen_v, rng);
            let x = polar_encode(&u, field).expect("valid symbols");
            let w = polar_encode(&v, field).expect("valid symbols");
            let y: Vec<usize> = (0..n)
                .map(|j| sampler.sample(x[j] * q + w[j], rng))
                .collect();
            let t = dec.trace(&y, &u, &v).expect("valid outputs");
            c.block += (t.decision.u != u || t.decision.v != v) as u64;
            c.genie_block += !t.genie_errors.is_empty() as u64;
            c.mismatch += (t.genie_errors.first().copied() != t.first_standalone_error) as u64;
            for &i in &t.genie_errors {
                c.index[i] += 1;
            }
        }
        c
    });
    let total = SimCounts::merge(parts, n);
    let index_errors = (1..=n)
        .filter_map(|i| {
            let user = match spec.role(i) {
                crate::codec::construct::Role::None => return None,
                crate::codec::construct::Role::U => "u",
                crate::codec::construct::Role::V => "v",
                crate::codec::construct::Role::Both => "uv",
            };
            let e = total.index[i - 1];
            Some(IndexErrors {
                index: i,
                user: user.into(),
                errors: e,
                rate: Wilson::new(e, trials),
            })
        })
        .collect();
    Ok(SimReport {
        scheme: "joint".into(),
        trials,
        seed,
        block_errors: total.block,
        bler: Wilson::new(total.block, trials),
        union_bound: spec.union_bound,
        union_bound_exact: spec.union_bound_exact,
        genie_block_errors: total.genie_block,
        first_error_mismatches: total.mismatch,
        index_errors,
    })
}
