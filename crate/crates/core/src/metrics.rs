//! Information-theoretic functionals of MACs and point channels.
//!
//! All logarithms are to the base `q`, so single-user rates live in `[0, 1]`
//! and the sum rate in `[0, 2]`. Inputs are always uniform.

use crate::channel::{Mac, PointChannel, Table};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// `(I(X;YW), I(W;YX), I(XW;Y))` for uniform independent inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoTriple {
    pub i1: f64,
    pub i2: f64,
    pub i12: f64,
}

impl InfoTriple {
    pub const fn new(i1: f64, i2: f64, i12: f64) -> Self {
        InfoTriple { i1, i2, i12 }
    }

    pub fn distance(&self, other: &InfoTriple) -> f64 {
        ((self.i1 - other.i1).powi(2)
            + (self.i2 - other.i2).powi(2)
            + (self.i12 - other.i12).powi(2))
        .sqrt()
    }

    /// `max(i1, i2) <= i12 <= i1 + i2`, within `tol`.
    pub fn is_polymatroid(&self, tol: f64) -> bool {
        self.i1.max(self.i2) <= self.i12 + tol && self.i12 <= self.i1 + self.i2 + tol
    }
}

fn xlogy_ratio(p: f64, num: f64, den: f64) -> f64 {
    if p <= 0.0 || num <= 0.0 {
        0.0
    } else {
        p * (num / den).ln()
    }
}

pub fn info_triple(mac: &Mac) -> InfoTriple {
    let q = mac.q();
    let qq = (q * q) as f64;
    let lnq = (q as f64).ln();
    let (mut i1, mut i2, mut i12) = (0.0, 0.0, 0.0);
    let mut given_w = vec![0.0; q];
    let mut given_x = vec![0.0; q];
    for col in mac.table().columns() {
        let py: f64 = col.iter().sum::<f64>() / qq;
        if py <= 0.0 {
            continue;
        }
        given_w.iter_mut().for_each(|v| *v = 0.0);
        given_x.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..q {
            for w in 0..q {
                let p = col[x * q + w];
                given_w[w] += p / q as f64;
                given_x[x] += p / q as f64;
            }
        }
        for x in 0..q {
            for w in 0..q {
                let p = col[x * q + w];
                if p <= 0.0 {
                    continue;
                }
                let joint = p / qq;
                i12 += xlogy_ratio(joint, p, py);
                i1 += xlogy_ratio(joint, p, given_w[w]);
                i2 += xlogy_ratio(joint, p, given_x[x]);
            }
        }
    }
    InfoTriple::new(i1 / lnq, i2 / lnq, i12 / lnq)
}

/// Mutual information of a table with uniform input, in base `base`.
pub(crate) fn table_info(table: &Table, base: usize) -> f64 {
    let n = table.inputs() as f64;
    let mut acc = 0.0;
    for col in table.columns() {
        let mean = col.iter().sum::<f64>() / n;
        for &p in col {
            acc += xlogy_ratio(p / n, p, mean);
        }
    }
    acc / (base as f64).ln()
}

pub(crate) fn table_ml_error(table: &Table) -> f64 {
    let n = table.inputs() as f64;
    let correct: f64 = table
        .columns()
        .map(|c| c.iter().cloned().fold(0.0, f64::max))
        .sum();
    (1.0 - correct / n).max(0.0)
}

pub(crate) fn table_bhattacharyya(table: &Table) -> f64 {
    let n = table.inputs();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for col in table.columns() {
        let s: f64 = col.iter().map(|p| p.sqrt()).sum();
        let diag: f64 = col.iter().sum();
        acc += s * s - diag;
    }
    (acc / (n * (n - 1)) as f64).clamp(0.0, 1.0)
}

pub fn point_info(ch: &PointChannel) -> f64 {
    table_info(ch.table(), ch.q())
}

pub fn bhattacharyya(ch: &PointChannel) -> f64 {
    table_bhattacharyya(ch.table())
}

/// Exact ML error probability with uniform input.
pub fn ml_error_prob(ch: &PointChannel) -> f64 {
    table_ml_error(ch.table())
}

/// ML error probability of the MAC seen as one channel with `q^2` inputs.
pub fn joint_error_prob(mac: &Mac) -> f64 {
    table_ml_error(mac.table())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Extremal {
    #[serde(rename = "t000")]
    T000,
    #[serde(rename = "t011")]
    T011,
    #[serde(rename = "t101")]
    T101,
    #[serde(rename = "t111")]
    T111,
    #[serde(rename = "t112")]
    T112,
}

impl Extremal {
    pub const ALL: [Extremal; 5] = [
        Extremal::T000,
        Extremal::T011,
        Extremal::T101,
        Extremal::T111,
        Extremal::T112,
    ];

    pub fn point(self) -> InfoTriple {
        match self {
            Extremal::T000 => InfoTriple::new(0.0, 0.0, 0.0),
            Extremal::T011 => InfoTriple::new(0.0, 1.0, 1.0),
            Extremal::T101 => InfoTriple::new(1.0, 0.0, 1.0),
            Extremal::T111 => InfoTriple::new(1.0, 1.0, 1.0),
            Extremal::T112 => InfoTriple::new(1.0, 1.0, 2.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Extremal::T000 => "t000",
            Extremal::T011 => "t011",
            Extremal::T101 => "t101",
            Extremal::T111 => "t111",
            Extremal::T112 => "t112",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalClass {
    /// `None` when the triple is at least `epsilon` away from every extremal.
    pub kind: Option<Extremal>,
    pub nearest: Extremal,
    pub distance: f64,
}

impl ExtremalClass {
    pub fn label(&self) -> &'static str {
        self.kind.map_or("unpolarized", Extremal::name)
    }
}

impl fmt::Display for ExtremalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn nearest_extremal(t: &InfoTriple) -> (Extremal, f64) {
    let mut best = (Extremal::T000, f64::INFINITY);
    for e in Extremal::ALL {
        let d = t.distance(&e.point());
        if d < best.1 {
            best = (e, d);
        }
    }
    best
}

pub fn classify(t: &InfoTriple, epsilon: f64) -> ExtremalClass {
    let (nearest, distance) = nearest_extremal(t);
    ExtremalClass {
        kind: (distance < epsilon).then_some(nearest),
        nearest,
        distance,
    }
}

/// Vertices of the pentagon `{R1 <= i1, R2 <= i2, R1 + R2 <= i12}`,
/// counterclockwise from the origin with coincident corners removed.
pub fn region_vertices(t: &InfoTriple) -> Result<Vec<(f64, f64)>> {
    const TOL: f64 = 1e-9;
    if !t.is_polymatroid(TOL) || t.i1 < -TOL || t.i2 < -TOL {
        return Err(Error::validation(format!(
            "triple ({}, {}, {}) violates the polymatroid constraints",
            t.i1, t.i2, t.i12
        )));
    }
    let i1 = t.i1.max(0.0);
    let i2 = t.i2.max(0.0);
    let i12 = t.i12.clamp(i1.max(i2), i1 + i2);
    let candidates = [
        (0.0, 0.0),
        (i1, 0.0),
        (i1, i12 - i1),
        (i12 - i2, i2),
        (0.0, i2),
    ];
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(5);
    let same =
        |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12;
    for c in candidates {
        if out.last().is_none_or(|&l| !same(l, c)) {
            out.push(c);
        }
    }
    while out.len() > 1 && same(out[0], *out.last().unwrap()) {
        out.pop();
    }
    Ok(out)
}
