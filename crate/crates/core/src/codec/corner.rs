//! Corner-point scheme: two single-user polar codes decoded successively.
//!
//! User 1 is coded for `Q1(y|x) = (1/q) sum_w P(y|x,w)` and user 2 for
//! `Q2(y,x|w) = (1/q) P(y|x,w)`. The receiver decodes user 1 treating user 2
//! as noise, then decodes user 2 with the first decoder's codeword estimate as
//! side information.

use crate::channel::{Mac, PointChannel};
use crate::codec::encoder::polar_encode;
use crate::codec::sc::{argmax, Group, ScEngine, ScOutput};
use crate::codec::simulate::{draw_source, IndexErrors, SimCounts, SimReport};
use crate::error::{Error, Result};
use crate::polarizer::{Mode, PointReport, RowSampler};
use crate::stats::{run_chunked, stream_rng, Wilson};
use crate::transform::{marginal_channel, Marginal};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_Z_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReliability {
    pub index: usize,
    pub z: f64,
    pub pe: f64,
    pub information: bool,
}

/// A single-user polar code. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCodeSpec {
    pub q: usize,
    pub n: usize,
    pub depth: usize,
    pub info: Vec<usize>,
    pub frozen: BTreeMap<usize, usize>,
    pub z_threshold: f64,
    pub mode: Mode,
    pub union_bound: f64,
    pub union_bound_exact: bool,
    pub reliability: Vec<PointReliability>,
}

impl PointCodeSpec {
    pub fn rate(&self) -> f64 {
        self.info.len() as f64 / self.n as f64
    }

    pub fn rebound(&mut self, report: &PointReport) -> Result<()> {
        if report.q != self.q || report.entries.len() != self.n {
            return Err(Error::validation(
                "report does not match the code parameters",
            ));
        }
        for (rel, rec) in self.reliability.iter_mut().zip(&report.entries) {
            rel.pe = rec.pe;
        }
        self.union_bound = self
            .reliability
            .iter()
            .filter(|r| r.information)
            .map(|r| r.pe)
            .sum();
        self.union_bound_exact = report.mode == Mode::Exact;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.n != 1 << self.depth {
            return Err(Error::validation("block length does not match depth"));
        }
        if self.info.len() + self.frozen.len() != self.n
            || self.info.iter().any(|i| self.frozen.contains_key(i))
        {
            return Err(Error::validation(
                "frozen symbols must cover exactly the complement of the information set",
            ));
        }
        if self
            .info
            .iter()
            .chain(self.frozen.keys())
            .any(|&i| i == 0 || i > self.n)
            || self.frozen.values().any(|&s| s >= self.q)
        {
            return Err(Error::validation("invalid index or frozen symbol"));
        }
        Ok(())
    }
}

/// Information set `{i : Z_i < z_threshold}` with seeded frozen values.
pub fn point_construct<R: Rng + ?Sized>(
    report: &PointReport,
    z_threshold: f64,
    rng: &mut R,
) -> PointCodeSpec {
    let n = report.entries.len();
    let mut info = Vec::new();
    let mut frozen = BTreeMap::new();
    let mut reliability = Vec::with_capacity(n);
    for e in &report.entries {
        let information = e.z < z_threshold;
        if information {
            info.push(e.index);
        } else {
            frozen.insert(e.index, rng.gen_range(0..report.q));
        }
        reliability.push(PointReliability {
            index: e.index,
            z: e.z,
            pe: e.pe,
            information,
        });
    }
    PointCodeSpec {
        q: report.q,
        n,
        depth: report.depth,
        info,
        frozen,
        z_threshold,
        mode: report.mode,
        union_bound: reliability
            .iter()
            .filter(|r| r.information)
            .map(|r| r.pe)
            .sum(),
        union_bound_exact: report.mode == Mode::Exact,
        reliability,
    }
}

/// The two single-user channels of the scheme: `(Q1, Q2)`.
pub fn corner_channels(mac: &Mac) -> (PointChannel, PointChannel) {
    (
        marginal_channel(mac, Marginal::U),
        marginal_channel(mac, Marginal::VGivenU),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerCode {
    pub seed: u64,
    pub first: PointCodeSpec,
    pub second: PointCodeSpec,
}

impl CornerCode {
    pub fn rate_sum(&self) -> f64 {
        self.first.rate() + self.second.rate()
    }

    pub fn union_bound(&self) -> f64 {
        self.first.union_bound + self.second.union_bound
    }

    pub fn union_bound_exact(&self) -> bool {
        self.first.union_bound_exact && self.second.union_bound_exact
    }

    /// Replace the error terms with those of independent reports.
    pub fn rebound(&mut self, first: &PointReport, second: &PointReport) -> Result<()> {
        self.first.rebound(first)?;
        self.second.rebound(second)
    }
}

/// Build both codes from reports on `Q1` and `Q2`. Frozen values of the
/// first code are drawn before those of the second from stream 0 of `seed`.
pub fn corner_construct(
    first: &PointReport,
    second: &PointReport,
    z_threshold: f64,
    seed: u64,
) -> Result<CornerCode> {
    if first.q != second.q || first.depth != second.depth {
        return Err(Error::validation(
            "component reports must share q and depth",
        ));
    }
    if !(z_threshold > 0.0 && z_threshold <= 1.0) {
        return Err(Error::validation(format!(
            "z threshold must lie in (0, 1], got {z_threshold}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let first = point_construct(first, z_threshold, &mut rng);
    let second = point_construct(second, z_threshold, &mut rng);
    Ok(CornerCode {
        seed,
        first,
        second,
    })
}

/// Single-user SC over GF(q) with known frozen symbols.
struct PointSc {
    frozen: Vec<Option<usize>>,
    engine: ScEngine,
}

struct PointPass {
    out: ScOutput,
    /// Indices (0-based) where the decision differed from the truth.
    errors: Vec<usize>,
}

impl PointSc {
    fn new(spec: &PointCodeSpec, mac: &Mac) -> Result<Self> {
        spec.validate()?;
        if spec.q != mac.q() {
            return Err(Error::validation(format!(
                "code is over GF({}) but channel over GF({})",
                spec.q,
                mac.q()
            )));
        }
        let frozen = (1..=spec.n).map(|i| spec.frozen.get(&i).copied()).collect();
        Ok(PointSc {
            frozen,
            engine: ScEngine::new(Group::field(mac.field()), spec.n)?,
        })
    }

    /// With `genie` set, true symbols are fed forward instead of decisions.
    fn pass(
        &mut self,
        lik: impl FnMut(usize, &mut [f64]),
        truth: Option<&[usize]>,
        genie: bool,
    ) -> PointPass {
        let frozen = &self.frozen;
        let mut errors = Vec::new();
        let out = self.engine.run(lik, &mut |i, post| {
            let d = frozen[i].unwrap_or_else(|| argmax(post));
            match truth {
                Some(t) => {
                    if d != t[i] {
                        errors.push(i);
                    }
                    if genie {
                        t[i]
                    } else {
                        d
                    }
                }
                None => d,
            }
        });
        PointPass { out, errors }
    }
}

/// Decisions of both component decoders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CornerDecision {
    pub u: Vec<usize>,
    pub x: Vec<usize>,
    pub v: Vec<usize>,
    pub w: Vec<usize>,
}

pub struct CornerDecoder<'a> {
    mac: &'a Mac,
    n: usize,
    first: PointSc,
    second: PointSc,
}

impl<'a> CornerDecoder<'a> {
    pub fn new(code: &CornerCode, mac: &'a Mac) -> Result<Self> {
        if code.first.n != code.second.n {
            return Err(Error::validation(
                "component codes must share the block length",
            ));
        }
        Ok(CornerDecoder {
            mac,
            n: code.first.n,
            first: PointSc::new(&code.first, mac)?,
            second: PointSc::new(&code.second, mac)?,
        })
    }

    fn check(&self, y: &[usize]) -> Result<()> {
        if y.len() != self.n || y.iter().any(|&s| s >= self.mac.outputs()) {
            return Err(Error::validation("malformed output vector"));
        }
        Ok(())
    }

    fn run_first(&mut self, y: &[usize], truth: Option<&[usize]>, genie: bool) -> PointPass {
        let (mac, q) = (self.mac, self.mac.q());
        self.first.pass(
            |j, dst| {
                for (a, p) in dst.iter_mut().enumerate() {
                    *p = (0..q).map(|w| mac.prob(y[j], a, w)).sum();
                }
            },
            truth,
            genie,
        )
    }

    fn run_second(
        &mut self,
        y: &[usize],
        x: &[usize],
        truth: Option<&[usize]>,
        genie: bool,
    ) -> PointPass {
        let mac = self.mac;
        self.second.pass(
            |j, dst| {
                for (b, p) in dst.iter_mut().enumerate() {
                    *p = mac.prob(y[j], x[j], b);
                }
            },
            truth,
            genie,
        )
    }

    pub fn decode(&mut self, y: &[usize]) -> Result<CornerDecision> {
        self.decode_with(y, None)
    }

    /// Decode; `x_override` replaces the first decoder's codeword estimate
    /// before it is handed to the second decoder.
    pub fn decode_with(
        &mut self,
        y: &[usize],
        x_override: Option<&[usize]>,
    ) -> Result<CornerDecision> {
        self.check(y)?;
        if x_override.is_some_and(|x| x.len() != self.n || x.iter().any(|&s| s >= self.mac.q())) {
            return Err(Error::validation("malformed codeword override"));
        }
        let first = self.run_first(y, None, false).out;
        let x = x_override.map_or(first.codeword, <[usize]>::to_vec);
        let second = self.run_second(y, &x, None, false).out;
        Ok(CornerDecision {
            u: first.symbols,
            x,
            v: second.symbols,
            w: second.codeword,
        })
    }
}

/// Simulate the corner scheme. Component error identities are checked with
/// the second decoder given the true first codeword.
pub fn simulate_corner(code: &CornerCode, mac: &Mac, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    CornerDecoder::new(code, mac)?;
    let (n, q, field) = (code.first.n, mac.q(), mac.field());
    let sampler = RowSampler::new(mac.table().rows());
    let parts = run_chunked(trials, seed, |rng, count| {
        let mut dec = CornerDecoder::new(code, mac).expect("validated above");
        let mut c = SimCounts {
            index: vec![0; 2 * n],
            ..Default::default()
        };
        for _ in 0..count {
            let u = draw_source(n, q, &code.first.frozen, rng);
            let v = draw_source(n, q, &code.second.frozen, rng);
            let x = polar_encode(&u, field).expect("valid symbols");
            let w = polar_encode(&v, field).expect("valid symbols");
            let y: Vec<usize> = (0..n)
                .map(|j| sampler.sample(x[j] * q + w[j], rng))
                .collect();

            let g1 = dec.run_first(&y, Some(&u), true);
            let s1 = dec.run_first(&y, Some(&u), false);
            let g2 = dec.run_second(&y, &x, Some(&v), true);
            let s2 = dec.run_second(&y, &x, Some(&v), false);
            c.mismatch += (g1.errors.first() != s1.errors.first()) as u64;
            c.mismatch += (g2.errors.first() != s2.errors.first()) as u64;
            c.genie_block += (!g1.errors.is_empty() || !g2.errors.is_empty()) as u64;
            for &i in &g1.errors {
                c.index[i] += 1;
            }
            for &i in &g2.errors {
                c.index[n + i] += 1;
            }
            let v_ok = if s1.out.codeword == x {
                s2.errors.is_empty()
            } else {
                dec.run_second(&y, &s1.out.codeword, Some(&v), false)
                    .errors
                    .is_empty()
            };
            c.block += !(s1.errors.is_empty() && v_ok) as u64;
        }
        c
    });
    let total = SimCounts::merge(parts, 2 * n);
    let mut index_errors = Vec::new();
    for (offset, user, spec) in [(0, "first", &code.first), (n, "second", &code.second)] {
        for &i in &spec.info {
            let e = total.index[offset + i - 1];
            index_errors.push(IndexErrors {
                index: i,
                user: user.into(),
                errors: e,
                rate: Wilson::new(e, trials),
            });
        }
    }
    Ok(SimReport {
        scheme: "corner".into(),
        trials,
        seed,
        block_errors: total.block,
        bler: Wilson::new(total.block, trials),
        union_bound: code.union_bound(),
        union_bound_exact: code.union_bound_exact(),
        genie_block_errors: total.genie_block,
        first_error_mismatches: total.mismatch,
        index_errors,
    })
}
