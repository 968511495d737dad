//! Channel syntheses.
//!
//! `minus`/`plus` combine two independent uses of a MAC through
//! `X1 = U1 + U2, X2 = U2` (and likewise for the second user). Their outputs
//! are merged into canonical form as they are generated; if the merged
//! alphabet outgrows the configured cap the synthesis fails with
//! [`Error::CapacityExceeded`] instead of approximating.

use crate::channel::{ColumnAccumulator, Mac, PointChannel, Table};
use crate::error::{Error, Result};
use crate::field::Field;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_OUTPUT_CAP: usize = 1_000_000;

/// A transform is refused outright when its unmerged alphabet exceeds this
/// multiple of the output cap, bounding the work spent before merging.
pub const UNMERGED_FACTOR: usize = 64;

fn check_work(unmerged: usize, cap: usize) -> Result<()> {
    if unmerged > cap.saturating_mul(UNMERGED_FACTOR) {
        return Err(crate::error::Error::CapacityExceeded {
            columns: unmerged,
            cap,
            path: String::new(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Minus,
    Plus,
}

/// A sequence of minus/plus steps, first step first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformPath(pub Vec<Step>);

impl TransformPath {
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// Path of the 1-based channel index `index` at `depth`: the bits of
    /// `index - 1`, most significant first, with 0 as minus.
    pub fn from_index(index: usize, depth: usize) -> Result<TransformPath> {
        if index == 0 || depth >= usize::BITS as usize || index > 1usize << depth {
            return Err(Error::validation(format!(
                "index {index} out of range for depth {depth}"
            )));
        }
        let bits = index - 1;
        Ok(TransformPath(
            (0..depth)
                .map(|k| {
                    if bits >> (depth - 1 - k) & 1 == 1 {
                        Step::Plus
                    } else {
                        Step::Minus
                    }
                })
                .collect(),
        ))
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, s| (acc << 1) | (*s == Step::Plus) as usize)
            + 1
    }

    pub fn child(&self, step: Step) -> TransformPath {
        let mut v = self.0.clone();
        v.push(step);
        TransformPath(v)
    }
}

impl fmt::Display for TransformPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if *s == Step::Minus { "-" } else { "+" })?;
        }
        Ok(())
    }
}

impl FromStr for TransformPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '-' | 'm' | '0' => Ok(Step::Minus),
                '+' | 'p' | '1' => Ok(Step::Plus),
                _ => Err(Error::validation(format!("bad path character '{c}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(TransformPath)
    }
}

/// Which single-user channel to extract from a MAC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marginal {
    /// `U -> Y`
    U,
    /// `U -> (Y, V)`
    UGivenV,
    /// `V -> Y`
    V,
    /// `V -> (Y, U)`
    VGivenU,
}

/// Exact synthesizer with an output-alphabet cap.
#[derive(Clone, Copy, Debug)]
pub struct Synthesizer {
    pub max_outputs: usize,
}

impl Default for Synthesizer {
    fn default() -> Self {
        Synthesizer {
            max_outputs: DEFAULT_OUTPUT_CAP,
        }
    }
}

/// `pair_sum[a * q^2 + b]` is the index of the componentwise sum of input
/// pairs `a` and `b`.
fn pair_sum_table(field: Field) -> Vec<usize> {
    let q = field.q();
    let m = q * q;
    let mut t = vec![0; m * m];
    for a in 0..m {
        for b in 0..m {
            let u = field.add_unchecked(a / q, b / q);
            let v = field.add_unchecked(a % q, b % q);
            t[a * m + b] = u * q + v;
        }
    }
    t
}

fn sum_table(field: Field) -> Vec<usize> {
    let q = field.q();
    let mut t = vec![0; q * q];
    for a in 0..q {
        for b in 0..q {
            t[a * q + b] = field.add_unchecked(a, b);
        }
    }
    t
}

/// Shared kernel of the minus transforms over a group of size `m` with
/// addition table `add`: column `(y1, y2)` has entries
/// `sum_t T(y1 | a + t) T(y2 | t) / m`.
fn combine_minus(table: &Table, add: &[usize], cap: usize) -> Result<Table> {
    let m = table.inputs();
    check_work(table.outputs().saturating_mul(table.outputs()), cap)?;
    let mut acc = ColumnAccumulator::new(m, cap);
    let mut col = vec![0.0; m];
    let inv = 1.0 / m as f64;
    for c1 in table.columns() {
        for c2 in table.columns() {
            for (a, out) in col.iter_mut().enumerate() {
                let row = &add[a * m..(a + 1) * m];
                let mut s = 0.0;
                for t in 0..m {
                    let p2 = c2[t];
                    if p2 != 0.0 {
                        s += c1[row[t]] * p2;
                    }
                }
                *out = s * inv;
            }
            acc.push(&col)?;
        }
    }
    Ok(acc.finish())
}

/// Kernel of the plus transforms: column `(y1, y2, a)` has entries
/// `T(y1 | a + t) T(y2 | t) / m` for input `t`.
fn combine_plus(table: &Table, add: &[usize], cap: usize) -> Result<Table> {
    let m = table.inputs();
    check_work(
        table
            .outputs()
            .saturating_mul(table.outputs())
            .saturating_mul(m),
        cap,
    )?;
    let mut acc = ColumnAccumulator::new(m, cap);
    let mut col = vec![0.0; m];
    let inv = 1.0 / m as f64;
    for c1 in table.columns() {
        for c2 in table.columns() {
            for a in 0..m {
                let row = &add[a * m..(a + 1) * m];
                for (t, out) in col.iter_mut().enumerate() {
                    *out = c1[row[t]] * c2[t] * inv;
                }
                acc.push(&col)?;
            }
        }
    }
    Ok(acc.finish())
}

impl Synthesizer {
    pub fn new(max_outputs: usize) -> Self {
        Synthesizer { max_outputs }
    }

    pub fn mac_minus(&self, p: &Mac) -> Result<Mac> {
        let table = combine_minus(p.table(), &pair_sum_table(p.field()), self.max_outputs)?;
        Ok(Mac::from_table(p.field(), table))
    }

    pub fn mac_plus(&self, p: &Mac) -> Result<Mac> {
        let table = combine_plus(p.table(), &pair_sum_table(p.field()), self.max_outputs)?;
        Ok(Mac::from_table(p.field(), table))
    }

    pub fn mac_step(&self, p: &Mac, step: Step) -> Result<Mac> {
        match step {
            Step::Minus => self.mac_minus(p),
            Step::Plus => self.mac_plus(p),
        }
    }

    /// Fold the transforms along `path`; a capacity error reports the prefix
    /// at which it occurred.
    pub fn synthesize_path(&self, p: &Mac, path: &TransformPath) -> Result<Mac> {
        let mut cur = p.canonical();
        for (k, &step) in path.0.iter().enumerate() {
            cur = self
                .mac_step(&cur, step)
                .map_err(|e| e.with_path(&TransformPath(path.0[..=k].to_vec()).to_string()))?;
        }
        Ok(cur)
    }

    pub fn point_b(&self, ch: &PointChannel) -> Result<PointChannel> {
        let table = combine_minus(ch.table(), &sum_table(ch.field()), self.max_outputs)?;
        Ok(PointChannel::from_table(ch.field(), table))
    }

    pub fn point_g(&self, ch: &PointChannel) -> Result<PointChannel> {
        let table = combine_plus(ch.table(), &sum_table(ch.field()), self.max_outputs)?;
        Ok(PointChannel::from_table(ch.field(), table))
    }

    pub fn point_step(&self, ch: &PointChannel, step: Step) -> Result<PointChannel> {
        match step {
            Step::Minus => self.point_b(ch),
            Step::Plus => self.point_g(ch),
        }
    }
}

pub fn mac_minus(p: &Mac) -> Result<Mac> {
    Synthesizer::default().mac_minus(p)
}

pub fn mac_plus(p: &Mac) -> Result<Mac> {
    Synthesizer::default().mac_plus(p)
}

pub fn synthesize_path(p: &Mac, path: &TransformPath) -> Result<Mac> {
    Synthesizer::default().synthesize_path(p, path)
}

pub fn point_b(ch: &PointChannel) -> Result<PointChannel> {
    Synthesizer::default().point_b(ch)
}

pub fn point_g(ch: &PointChannel) -> Result<PointChannel> {
    Synthesizer::default().point_g(ch)
}

/// Single-user channel seen by one input. The conditioned variants append
/// the other input to the output: output index `y * q + other`.
pub fn marginal_channel(p: &Mac, which: Marginal) -> PointChannel {
    let q = p.q();
    let inv = 1.0 / q as f64;
    let table = match which {
        Marginal::U | Marginal::V => {
            let mut data = Vec::with_capacity(p.outputs() * q);
            for y in 0..p.outputs() {
                for a in 0..q {
                    let s: f64 = (0..q)
                        .map(|b| {
                            if which == Marginal::U {
                                p.prob(y, a, b)
                            } else {
                                p.prob(y, b, a)
                            }
                        })
                        .sum();
                    data.push(s * inv);
                }
            }
            Table::from_columns(q, data)
        }
        Marginal::UGivenV | Marginal::VGivenU => {
            let mut data = Vec::with_capacity(p.outputs() * q * q);
            for y in 0..p.outputs() {
                for b in 0..q {
                    for a in 0..q {
                        let pr = if which == Marginal::UGivenV {
                            p.prob(y, a, b)
                        } else {
                            p.prob(y, b, a)
                        };
                        data.push(pr * inv);
                    }
                }
            }
            Table::from_columns(q, data)
        }
    };
    PointChannel::from_table(p.field(), table)
}

/// The channel `alpha U + gamma V -> Y`.
pub fn linear_channel(p: &Mac, alpha: usize, gamma: usize) -> Result<PointChannel> {
    let f = p.field();
    f.check(alpha)?;
    f.check(gamma)?;
    if alpha == 0 && gamma == 0 {
        return Err(Error::validation(
            "linear channel needs (alpha, gamma) != (0, 0)",
        ));
    }
    let q = f.q();
    let inv = 1.0 / q as f64;
    let mut data = vec![0.0; p.outputs() * q];
    for y in 0..p.outputs() {
        for u in 0..q {
            for v in 0..q {
                let s = f.add_unchecked(f.mul_unchecked(alpha, u), f.mul_unchecked(gamma, v));
                data[y * q + s] += p.prob(y, u, v) * inv;
            }
        }
    }
    Ok(PointChannel::from_table(f, Table::from_columns(q, data)))
}

/// All coefficient pairs `(alpha, gamma) != (0, 0)`.
pub fn linear_coefficients(q: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..q)
        .flat_map(move |a| (0..q).map(move |g| (a, g)))
        .filter(|&(a, g)| a != 0 || g != 0)
}
