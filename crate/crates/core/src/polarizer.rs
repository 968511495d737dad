//! Polarization sweeps over all `2^depth` synthesized channels.
//!
//! Index `i` (1-based) corresponds to the path given by the bits of `i - 1`,
//! most significant bit first, 0 = minus: index 1 is all-minus and index
//! `2^depth` all-plus. Two estimators produce the same report shape:
//!
//! * exact: synthesizes the whole tree (each node once) with output merging
//!   and evaluates every functional exactly;
//! * Monte Carlo: runs the genie-aided SC recursion on random blocks and
//!   averages per-index error indicators, Bhattacharyya terms and
//!   log-posteriors.

use crate::channel::{Mac, PointChannel};
use crate::codec::encoder::polar_encode;
use crate::codec::sc::{argmax, Group, ScEngine};
use crate::error::{Error, Result};
use crate::metrics::{
    bhattacharyya, classify, info_triple, joint_error_prob, ml_error_prob, point_info, Extremal,
    InfoTriple,
};
use crate::stats::{run_chunked, Wilson};
use crate::transform::{
    linear_channel, linear_coefficients, marginal_channel, Marginal, Synthesizer, TransformPath,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

/// Wilson intervals attached to Monte Carlo error estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorIntervals {
    pub joint: Wilson,
    pub u: Wilson,
    pub v: Wilson,
    pub u_given_v: Wilson,
    pub v_given_u: Wilson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub index: usize,
    pub path: String,
    pub triple: InfoTriple,
    pub z_u: f64,
    pub z_v: f64,
    pub z_u_given_v: f64,
    pub z_v_given_u: f64,
    /// Smallest Bhattacharyya parameter over the channels `aU + gV -> Y`.
    pub z_linear: f64,
    pub linear_coeffs: (usize, usize),
    pub pe_u: f64,
    pub pe_v: f64,
    pub pe_u_given_v: f64,
    pub pe_v_given_u: f64,
    pub pe_joint: f64,
    /// Merged output alphabet size (exact mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<ErrorIntervals>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub q: usize,
    pub depth: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub channel_triple: InfoTriple,
    pub entries: Vec<IndexRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSummary {
    pub delta: f64,
    pub unpolarized_fraction: f64,
    pub counts: BTreeMap<String, usize>,
    pub mean_i1: f64,
    pub mean_i2: f64,
    pub mean_i12: f64,
    /// Sum rate obtained by the selection rules at threshold `delta`.
    pub sum_rate: f64,
}

impl PolarizationReport {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn mean_triple(&self) -> InfoTriple {
        let n = self.entries.len() as f64;
        let s = self.entries.iter().fold((0.0, 0.0, 0.0), |a, e| {
            (a.0 + e.triple.i1, a.1 + e.triple.i2, a.2 + e.triple.i12)
        });
        InfoTriple::new(s.0 / n, s.1 / n, s.2 / n)
    }

    pub fn unpolarized_fraction(&self, delta: f64) -> f64 {
        let bad = self
            .entries
            .iter()
            .filter(|e| classify(&e.triple, delta).kind.is_none())
            .count();
        bad as f64 / self.entries.len() as f64
    }

    pub fn write_csv<W: Write>(&self, epsilon: f64, mut out: W) -> Result<()> {
        writeln!(
            out,
            "index,path,i1,i2,i12,class,distance,z_u,z_v,z_u_given_v,z_v_given_u,pe_joint"
        )?;
        for e in &self.entries {
            let c = classify(&e.triple, epsilon);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                e.index,
                e.path,
                e.triple.i1,
                e.triple.i2,
                e.triple.i12,
                c.label(),
                c.distance,
                e.z_u,
                e.z_v,
                e.z_u_given_v,
                e.z_v_given_u,
                e.pe_joint
            )?;
        }
        Ok(())
    }
}

pub fn polarization_stats(report: &PolarizationReport, delta: f64) -> PolarizationSummary {
    let mut counts: BTreeMap<String, usize> = Extremal::ALL
        .iter()
        .map(|e| (e.name().to_string(), 0))
        .collect();
    counts.insert("unpolarized".into(), 0);
    let mut selected = 0usize;
    for e in &report.entries {
        let c = classify(&e.triple, delta);
        *counts.get_mut(c.label()).unwrap() += 1;
        selected += match c.kind {
            Some(Extremal::T112) => 2,
            Some(Extremal::T011 | Extremal::T101 | Extremal::T111) => 1,
            _ => 0,
        };
    }
    let n = report.n() as f64;
    let mean = report.mean_triple();
    PolarizationSummary {
        delta,
        unpolarized_fraction: counts["unpolarized"] as f64 / n,
        counts,
        mean_i1: mean.i1,
        mean_i2: mean.i2,
        mean_i12: mean.i12,
        sum_rate: selected as f64 / n,
    }
}

/// Exact per-index record of a synthesized MAC.
pub fn exact_record(mac: &Mac, path: &TransformPath) -> IndexRecord {
    let mu = marginal_channel(mac, Marginal::U);
    let mv = marginal_channel(mac, Marginal::V);
    let muv = marginal_channel(mac, Marginal::UGivenV);
    let mvu = marginal_channel(mac, Marginal::VGivenU);
    let (z_linear, linear_coeffs) = linear_coefficients(mac.q())
        .map(|(a, g)| {
            (
                bhattacharyya(&linear_channel(mac, a, g).expect("nonzero coefficients")),
                (a, g),
            )
        })
        .fold((f64::INFINITY, (0, 0)), |best, cur| {
            if cur.0 < best.0 {
                cur
            } else {
                best
            }
        });
    IndexRecord {
        index: path.index(),
        path: path.to_string(),
        triple: info_triple(mac),
        z_u: bhattacharyya(&mu),
        z_v: bhattacharyya(&mv),
        z_u_given_v: bhattacharyya(&muv),
        z_v_given_u: bhattacharyya(&mvu),
        z_linear,
        linear_coeffs,
        pe_u: ml_error_prob(&mu),
        pe_v: ml_error_prob(&mv),
        pe_u_given_v: ml_error_prob(&muv),
        pe_v_given_u: ml_error_prob(&mvu),
        pe_joint: joint_error_prob(mac),
        outputs: Some(mac.outputs()),
        intervals: None,
    }
}

fn sweep<T, R>(
    node: &T,
    path: TransformPath,
    remaining: usize,
    step: &(dyn Fn(&T, crate::transform::Step) -> Result<T> + Sync),
    record: &(dyn Fn(&T, &TransformPath) -> R + Sync),
) -> Result<Vec<R>>
where
    T: Sync + Send,
    R: Send,
{
    use crate::transform::Step;
    if remaining == 0 {
        return Ok(vec![record(node, &path)]);
    }
    let child = |s: Step| -> Result<Vec<R>> {
        let p = path.child(s);
        let next = step(node, s).map_err(|e| e.with_path(&p.to_string()))?;
        sweep(&next, p, remaining - 1, step, record)
    };
    let (minus, plus) = rayon::join(|| child(Step::Minus), || child(Step::Plus));
    let mut out = minus?;
    out.extend(plus?);
    Ok(out)
}

/// Exact sweep; the synthesis tree computes `2^(depth+1) - 1` channels.
pub fn polarize_exact(mac: &Mac, depth: usize, synth: &Synthesizer) -> Result<PolarizationReport> {
    let root = mac.canonical();
    let entries = sweep(
        &root,
        TransformPath::default(),
        depth,
        &|m, s| synth.mac_step(m, s),
        &exact_record,
    )?;
    Ok(PolarizationReport {
        q: mac.q(),
        depth,
        mode: Mode::Exact,
        seed: None,
        trials: None,
        channel_triple: info_triple(mac),
        entries,
    })
}

/// Samples outputs of a channel table row by inverse CDF.
pub(crate) struct RowSampler {
    cum: Vec<Vec<f64>>,
}

impl RowSampler {
    pub(crate) fn new(rows: Vec<Vec<f64>>) -> Self {
        let cum = rows
            .into_iter()
            .map(|r| {
                let mut acc = 0.0;
                r.into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        RowSampler { cum }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        let c = &self.cum[row];
        let r: f64 = rng.gen::<f64>() * c[c.len() - 1];
        // Skip zero-probability outputs at the boundary.
        c.partition_point(|&v| v <= r).min(c.len() - 1)
    }
}

fn neg_log(p: f64) -> f64 {
    -p.max(f64::MIN_POSITIVE).ln()
}

/// Per-trial Bhattacharyya term `(1/(k-1)) sum_{a != x} sqrt(p[a] / p[x])`.
fn z_term(p: &[f64], x: usize) -> f64 {
    let k = p.len();
    if k < 2 {
        return 0.0;
    }
    if p[x] <= 0.0 {
        return 1.0;
    }
    let s: f64 = p
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != x)
        .map(|(_, &pa)| (pa / p[x]).sqrt())
        .sum();
    s / (k - 1) as f64
}

#[derive(Clone, Debug, Default)]
struct MacAccum {
    err_joint: u64,
    err_u: u64,
    err_v: u64,
    err_uv: u64,
    err_vu: u64,
    z_u: f64,
    z_v: f64,
    z_uv: f64,
    z_vu: f64,
    h_joint: f64,
    h_uv: f64,
    h_vu: f64,
    z_lin: Vec<f64>,
}

impl MacAccum {
    fn merge(&mut self, o: &MacAccum) {
        self.err_joint += o.err_joint;
        self.err_u += o.err_u;
        self.err_v += o.err_v;
        self.err_uv += o.err_uv;
        self.err_vu += o.err_vu;
        self.z_u += o.z_u;
        self.z_v += o.z_v;
        self.z_uv += o.z_uv;
        self.z_vu += o.z_vu;
        self.h_joint += o.h_joint;
        self.h_uv += o.h_uv;
        self.h_vu += o.h_vu;
        if self.z_lin.len() < o.z_lin.len() {
            self.z_lin.resize(o.z_lin.len(), 0.0);
        }
        for (a, b) in self.z_lin.iter_mut().zip(&o.z_lin) {
            *a += b;
        }
    }
}

struct MacObserver {
    q: usize,
    lnq: f64,
    coeffs: Vec<(usize, usize)>,
    field: crate::field::Field,
    buf: Vec<f64>,
}

impl MacObserver {
    fn observe(&mut self, acc: &mut MacAccum, post: &[f64], u: usize, v: usize) {
        let q = self.q;
        let truth = u * q + v;
        if acc.z_lin.is_empty() {
            acc.z_lin = vec![0.0; self.coeffs.len()];
        }
        acc.err_joint += (argmax(post) != truth) as u64;
        acc.h_joint += neg_log(post[truth]) / self.lnq;

        let buf = &mut self.buf;
        buf.iter_mut().for_each(|p| *p = 0.0);
        for a in 0..q {
            buf[a] = (0..q).map(|b| post[a * q + b]).sum();
        }
        acc.err_u += (argmax(buf) != u) as u64;
        acc.z_u += z_term(buf, u);

        for b in 0..q {
            buf[b] = (0..q).map(|a| post[a * q + b]).sum();
        }
        acc.err_v += (argmax(buf) != v) as u64;
        acc.z_v += z_term(buf, v);

        let s: f64 = (0..q).map(|a| post[a * q + v]).sum();
        for a in 0..q {
            buf[a] = post[a * q + v] / s;
        }
        acc.err_uv += (argmax(buf) != u) as u64;
        acc.z_uv += z_term(buf, u);
        acc.h_uv += neg_log(buf[u]) / self.lnq;

        let s: f64 = (0..q).map(|b| post[u * q + b]).sum();
        for b in 0..q {
            buf[b] = post[u * q + b] / s;
        }
        acc.err_vu += (argmax(buf) != v) as u64;
        acc.z_vu += z_term(buf, v);
        acc.h_vu += neg_log(buf[v]) / self.lnq;

        let f = self.field;
        for (k, &(al, ga)) in self.coeffs.iter().enumerate() {
            buf.iter_mut().for_each(|p| *p = 0.0);
            for a in 0..q {
                for b in 0..q {
                    buf[f.add_unchecked(f.mul_unchecked(al, a), f.mul_unchecked(ga, b))] +=
                        post[a * q + b];
                }
            }
            let s_true = f.add_unchecked(f.mul_unchecked(al, u), f.mul_unchecked(ga, v));
            acc.z_lin[k] += z_term(buf, s_true);
        }
    }
}

/// Genie-aided Monte Carlo estimate of every per-index functional.
pub fn genie_estimate(
    mac: &Mac,
    depth: usize,
    trials: u64,
    seed: u64,
) -> Result<PolarizationReport> {
    if trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    let n = 1usize << depth;
    let field = mac.field();
    let q = field.q();
    let sampler = RowSampler::new(mac.table().rows());
    let coeffs: Vec<(usize, usize)> = linear_coefficients(q).collect();
    let partials = run_chunked(trials, seed, |rng, count| {
        let mut engine = ScEngine::new(Group::pair(field), n).expect("power of two");
        let mut obs = MacObserver {
            q,
            lnq: (q as f64).ln(),
            coeffs: coeffs.clone(),
            field,
            buf: vec![0.0; q],
        };
        let mut acc = vec![MacAccum::default(); n];
        for _ in 0..count {
            let u: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
            let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
            let x = polar_encode(&u, field).expect("valid symbols");
            let w = polar_encode(&v, field).expect("valid symbols");
            let y: Vec<usize> = (0..n)
                .map(|j| sampler.sample(x[j] * q + w[j], rng))
                .collect();
            engine.run(
                |j, dst| {
                    for (s, p) in dst.iter_mut().enumerate() {
                        *p = mac.prob(y[j], s / q, s % q);
                    }
                },
                &mut |i, post| {
                    obs.observe(&mut acc[i], post, u[i], v[i]);
                    u[i] * q + v[i]
                },
            );
        }
        acc
    });
    let mut total = vec![MacAccum::default(); n];
    for chunk in &partials {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    let tf = trials as f64;
    let entries = total
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let path = TransformPath::from_index(i + 1, depth).expect("index in range");
            let (z_linear, linear_coeffs) =
                a.z_lin.iter().zip(&coeffs).map(|(z, &c)| (z / tf, c)).fold(
                    (f64::INFINITY, (0, 0)),
                    |best, cur| if cur.0 < best.0 { cur } else { best },
                );
            let h_joint = a.h_joint / tf;
            IndexRecord {
                index: i + 1,
                path: path.to_string(),
                triple: InfoTriple::new(1.0 - a.h_uv / tf, 1.0 - a.h_vu / tf, 2.0 - h_joint),
                z_u: a.z_u / tf,
                z_v: a.z_v / tf,
                z_u_given_v: a.z_uv / tf,
                z_v_given_u: a.z_vu / tf,
                z_linear,
                linear_coeffs,
                pe_u: a.err_u as f64 / tf,
                pe_v: a.err_v as f64 / tf,
                pe_u_given_v: a.err_uv as f64 / tf,
                pe_v_given_u: a.err_vu as f64 / tf,
                pe_joint: a.err_joint as f64 / tf,
                outputs: None,
                intervals: Some(ErrorIntervals {
                    joint: Wilson::new(a.err_joint, trials),
                    u: Wilson::new(a.err_u, trials),
                    v: Wilson::new(a.err_v, trials),
                    u_given_v: Wilson::new(a.err_uv, trials),
                    v_given_u: Wilson::new(a.err_vu, trials),
                }),
            }
        })
        .collect();
    Ok(PolarizationReport {
        q,
        depth,
        mode: Mode::MonteCarlo,
        seed: Some(seed),
        trials: Some(trials),
        channel_triple: info_triple(mac),
        entries,
    })
}

/// Per-index record of a synthesized single-user channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub path: String,
    pub info: f64,
    pub z: f64,
    pub pe: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pe_interval: Option<Wilson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub q: usize,
    pub depth: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub channel_info: f64,
    pub entries: Vec<PointRecord>,
}

pub fn polarize_point_exact(
    ch: &PointChannel,
    depth: usize,
    synth: &Synthesizer,
) -> Result<PointReport> {
    let root = ch.canonical();
    let record = |c: &PointChannel, p: &TransformPath| PointRecord {
        index: p.index(),
        path: p.to_string(),
        info: point_info(c),
        z: bhattacharyya(c),
        pe: ml_error_prob(c),
        outputs: Some(c.outputs()),
        pe_interval: None,
    };
    let entries = sweep(
        &root,
        TransformPath::default(),
        depth,
        &|c, s| synth.point_step(c, s),
        &record,
    )?;
    Ok(PointReport {
        q: ch.q(),
        depth,
        mode: Mode::Exact,
        seed: None,
        trials: None,
        channel_info: point_info(ch),
        entries,
    })
}

pub fn genie_estimate_point(
    ch: &PointChannel,
    depth: usize,
    trials: u64,
    seed: u64,
) -> Result<PointReport> {
    if trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    let n = 1usize << depth;
    let field = ch.field();
    let q = field.q();
    let lnq = (q as f64).ln();
    let sampler = RowSampler::new(ch.table().rows());
    let partials = run_chunked(trials, seed, |rng, count| {
        let mut engine = ScEngine::new(Group::field(field), n).expect("power of two");
        let mut acc = vec![(0u64, 0.0f64, 0.0f64); n];
        for _ in 0..count {
            let u: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
            let x = polar_encode(&u, field).expect("valid symbols");
            let y: Vec<usize> = (0..n).map(|j| sampler.sample(x[j], rng)).collect();
            engine.run(
                |j, dst| {
                    for (a, p) in dst.iter_mut().enumerate() {
                        *p = ch.prob(y[j], a);
                    }
                },
                &mut |i, post| {
                    let a = &mut acc[i];
                    a.0 += (argmax(post) != u[i]) as u64;
                    a.1 += z_term(post, u[i]);
                    a.2 += neg_log(post[u[i]]) / lnq;
                    u[i]
                },
            );
        }
        acc
    });
    let mut total = vec![(0u64, 0.0f64, 0.0f64); n];
    for chunk in &partials {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
            t.2 += c.2;
        }
    }
    let tf = trials as f64;
    let entries = total
        .iter()
        .enumerate()
        .map(|(i, &(err, z, h))| PointRecord {
            index: i + 1,
            path: TransformPath::from_index(i + 1, depth)
                .expect("in range")
                .to_string(),
            info: 1.0 - h / tf,
            z: z / tf,
            pe: err as f64 / tf,
            outputs: None,
            pe_interval: Some(Wilson::new(err, trials)),
        })
        .collect();
    Ok(PointReport {
        q,
        depth,
        mode: Mode::MonteCarlo,
        seed: Some(seed),
        trials: Some(trials),
        channel_info: point_info(ch),
        entries,
    })
}

/// A way of obtaining per-index reliabilities of the synthesized channels.
pub trait ReliabilityEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn mac_report(&self, mac: &Mac, depth: usize) -> Result<PolarizationReport>;
    fn point_report(&self, ch: &PointChannel, depth: usize) -> Result<PointReport>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExactEstimator {
    pub synth: Synthesizer,
}

#[derive(Clone, Copy, Debug)]
pub struct MonteCarloEstimator {
    pub trials: u64,
    pub seed: u64,
}

/// Exact synthesis, falling back to Monte Carlo when the alphabet cap is hit.
#[derive(Clone, Copy, Debug)]
pub struct AutoEstimator {
    pub exact: ExactEstimator,
    pub monte_carlo: MonteCarloEstimator,
}

impl ReliabilityEstimator for ExactEstimator {
    fn name(&self) -> &'static str {
        "exact"
    }
    fn mac_report(&self, mac: &Mac, depth: usize) -> Result<PolarizationReport> {
        polarize_exact(mac, depth, &self.synth)
    }
    fn point_report(&self, ch: &PointChannel, depth: usize) -> Result<PointReport> {
        polarize_point_exact(ch, depth, &self.synth)
    }
}

impl ReliabilityEstimator for MonteCarloEstimator {
    fn name(&self) -> &'static str {
        "mc"
    }
    fn mac_report(&self, mac: &Mac, depth: usize) -> Result<PolarizationReport> {
        genie_estimate(mac, depth, self.trials, self.seed)
    }
    fn point_report(&self, ch: &PointChannel, depth: usize) -> Result<PointReport> {
        genie_estimate_point(ch, depth, self.trials, self.seed)
    }
}

impl ReliabilityEstimator for AutoEstimator {
    fn name(&self) -> &'static str {
        "auto"
    }
    fn mac_report(&self, mac: &Mac, depth: usize) -> Result<PolarizationReport> {
        match self.exact.mac_report(mac, depth) {
            Err(Error::CapacityExceeded { .. }) => self.monte_carlo.mac_report(mac, depth),
            other => other,
        }
    }
    fn point_report(&self, ch: &PointChannel, depth: usize) -> Result<PointReport> {
        match self.exact.point_report(ch, depth) {
            Err(Error::CapacityExceeded { .. }) => self.monte_carlo.point_report(ch, depth),
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ExtremalKind;

    #[test]
    fn depth_zero_adder() {
        let r = polarize_exact(&Mac::adder(2, 0.0).unwrap(), 0, &Synthesizer::default()).unwrap();
        assert_eq!(r.entries.len(), 1);
        let t = r.entries[0].triple;
        assert!((t.i12 - 1.5).abs() < 1e-12);
        assert_eq!(classify(&t, 0.1).kind, None);
        assert_eq!(r.entries[0].path, "");
    }

    #[test]
    fn conservation_at_depth_two() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let mac = Mac::random(2, 3, 0.0, &mut rng).unwrap();
        let r = polarize_exact(&mac, 2, &Synthesizer::default()).unwrap();
        assert_eq!(
            r.entries.iter().map(|e| e.index).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
        assert_eq!(r.entries[1].path, "-+");
        assert!((r.mean_triple().i12 - info_triple(&mac).i12).abs() < 1e-9);
    }

    #[test]
    fn perfect_and_useless_reports() {
        for depth in [0, 2, 3] {
            let r = polarize_exact(
                &Mac::extremal(ExtremalKind::Perfect, 2).unwrap(),
                depth,
                &Synthesizer::default(),
            )
            .unwrap();
            let s = polarization_stats(&r, 0.1);
            assert_eq!(s.unpolarized_fraction, 0.0);
            assert_eq!(s.counts["t112"], 1 << depth);
            assert!((s.sum_rate - 2.0).abs() < 1e-12);
            let r = polarize_exact(
                &Mac::extremal(ExtremalKind::Useless, 2).unwrap(),
                depth,
                &Synthesizer::default(),
            )
            .unwrap();
            assert!(r.entries.iter().all(|e| e.triple.i12.abs() < 1e-12));
        }
    }

    #[test]
    fn contention_is_fixed() {
        for depth in 0..=4 {
            let r = polarize_exact(
                &Mac::extremal(ExtremalKind::Contention, 2).unwrap(),
                depth,
                &Synthesizer::default(),
            )
            .unwrap();
            for e in &r.entries {
                let t = e.triple;
                assert!(
                    (t.i1 - 1.0).abs() < 1e-12
                        && (t.i2 - 1.0).abs() < 1e-12
                        && (t.i12 - 1.0).abs() < 1e-12
                );
            }
            assert_eq!(polarization_stats(&r, 0.25).unpolarized_fraction, 0.0);
        }
    }

    #[test]
    fn monte_carlo_perfect_channel_is_error_free() {
        let r =
            genie_estimate(&Mac::extremal(ExtremalKind::Perfect, 2).unwrap(), 3, 100, 1).unwrap();
        for e in &r.entries {
            assert_eq!(e.pe_joint, 0.0);
            assert_eq!(e.pe_u, 0.0);
            assert!(e.z_u.abs() < 1e-12);
            assert!((e.triple.i12 - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let mac = Mac::adder(2, 0.05).unwrap();
        let exact = polarize_exact(&mac, 3, &Synthesizer::default()).unwrap();
        let mc = genie_estimate(&mac, 3, 20_000, 4).unwrap();
        for (e, m) in exact.entries.iter().zip(&mc.entries) {
            assert_eq!(e.path, m.path);
            let iv = m.intervals.unwrap();
            for (truth, est) in [
                (e.pe_joint, iv.joint),
                (e.pe_u_given_v, iv.u_given_v),
                (e.pe_v_given_u, iv.v_given_u),
            ] {
                assert!((truth - est.estimate).abs() <= 2.0 * est.half_width() + 1e-3);
            }
            assert!(
                m.triple.distance(&e.triple) < 0.03,
                "{} {:?} {:?}",
                e.path,
                e.triple,
                m.triple
            );
        }
    }

    #[test]
    fn single_trial_is_degenerate() {
        let r = genie_estimate(&Mac::adder(2, 0.1).unwrap(), 2, 1, 9).unwrap();
        for e in &r.entries {
            assert!(e.pe_joint == 0.0 || e.pe_joint == 1.0);
            assert!(e.intervals.unwrap().joint.half_width() > 0.3);
        }
        assert!(genie_estimate(&Mac::adder(2, 0.1).unwrap(), 2, 0, 9).is_err());
    }

    #[test]
    fn auto_falls_back_on_cap() {
        let est = AutoEstimator {
            exact: ExactEstimator {
                synth: Synthesizer::new(50),
            },
            monte_carlo: MonteCarloEstimator {
                trials: 64,
                seed: 1,
            },
        };
        let r = est.mac_report(&Mac::adder(2, 0.05).unwrap(), 3).unwrap();
        assert_eq!(r.mode, Mode::MonteCarlo);
        let r = est.mac_report(&Mac::adder(2, 0.0).unwrap(), 3).unwrap();
        assert_eq!(r.mode, Mode::Exact);
    }

    #[test]
    fn csv_has_one_row_per_index() {
        let r = polarize_exact(&Mac::adder(2, 0.0).unwrap(), 4, &Synthesizer::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(0.1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with(
            "index,path,i1,i2,i12,class,distance,z_u,z_v,z_u_given_v,z_v_given_u,pe_joint"
        ));
        assert!((r.mean_triple().i12 - 1.5).abs() < 1e-9);
    }
}
